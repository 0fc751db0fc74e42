//! Distributed-source well model for single-phase Darcy flow in anisotropic
//! porous media.
//!
//! The crate splits into a scalar-generic math core (coordinate transforms,
//! conformal map, analytic solutions, source kernels) and concrete `f64`
//! discrete machinery (structured mesh, finite-volume assembly, experiments).

pub mod analytic;
pub mod conformal;
pub mod fvm;
pub mod kernels;
pub mod linalg;
pub mod mesh;
pub mod peaceman;
pub mod scalar;
pub mod solver;
pub mod tensor;

/// `f64` aliases for the scalar-generic core types.
pub type Vec3 = linalg::Vec3<f64>;
pub type Mat3 = linalg::Mat3<f64>;
pub type PermeabilityTensor = tensor::PermeabilityTensor<f64>;
pub type WellDescription = tensor::WellDescription<f64>;
pub type TransformChain = tensor::TransformChain<f64>;
pub type JoukowskyMap = conformal::JoukowskyMap<f64>;
pub type FluidProperties = analytic::FluidProperties<f64>;
pub type KernelSpec = analytic::KernelSpec<f64>;
pub type AnalyticSolution = analytic::AnalyticSolution<f64>;

/// `f32` aliases for the scalar-generic core types.
pub type Vec3f = linalg::Vec3<f32>;
pub type Mat3f = linalg::Mat3<f32>;
pub type PermeabilityTensorF = tensor::PermeabilityTensor<f32>;
pub type TransformChainF = tensor::TransformChain<f32>;
pub type JoukowskyMapF = conformal::JoukowskyMap<f32>;
pub type AnalyticSolutionF = analytic::AnalyticSolution<f32>;
