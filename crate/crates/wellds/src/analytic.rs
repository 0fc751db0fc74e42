//! Closed-form pressure solutions (singular and kernel-regularized), the
//! flux-scaling factors Ξ, and point evaluation in original x-coordinates.

use num_complex::Complex;
use thiserror::Error;

use crate::conformal::{ConformalError, JoukowskyMap};
use crate::linalg::Vec3;
use crate::scalar::Real;
use crate::tensor::{PermeabilityTensor, TransformChain, WellDescription};

#[derive(Debug, Error)]
pub enum AnalyticError {
    #[error("fluid density and viscosity must be positive")]
    InvalidFluid,
    #[error("flux-scaling bracket is nonpositive ({0}); outer kernel radius too small")]
    NonPositiveScalingBracket(f64),
    #[error("kernel radii invalid: require 0 <= inner < outer and focal <= inner")]
    InvalidKernelRadii,
    #[error("point maps inside the focal region of the well (|w| <= f)")]
    InsideWellRegion,
    #[error("solution has no kernel; regularized evaluation unavailable")]
    KernelMissing,
    #[error(transparent)]
    Conformal(#[from] ConformalError),
}

/// Constant fluid density and dynamic viscosity.
#[derive(Clone, Copy, Debug)]
pub struct FluidProperties<S> {
    pub density: S,
    pub viscosity: S,
}

impl<S: Real> FluidProperties<S> {
    pub fn new(density: S, viscosity: S) -> Result<Self, AnalyticError> {
        if !(density > S::zero() && viscosity > S::zero()) {
            return Err(AnalyticError::InvalidFluid);
        }
        Ok(Self { density, viscosity })
    }

    /// Water at the reference conditions used throughout: ρ = 1000 kg/m³, μ = 1e-3 Pa·s.
    pub fn water() -> Self {
        Self {
            density: S::of(1000.0),
            viscosity: S::of(1e-3),
        }
    }
}

/// Annulus kernel radii in w-coordinates with the derived flux scaling Ξ.
#[derive(Clone, Copy, Debug)]
pub struct KernelSpec<S> {
    pub inner: S,
    pub outer: S,
    /// `ξ² = ϱ_o² - ϱ_i²`.
    pub xi_sq: S,
    /// Flux scaling Ξ relating (p_ω - p₀) to the specific rate.
    pub flux_scaling: S,
}

impl<S: Real> KernelSpec<S> {
    /// Build from annulus radii and the pressure-datum radius of the mapped
    /// well circle.
    pub fn new(inner: S, outer: S, r_datum: S) -> Result<Self, AnalyticError> {
        if !(inner >= S::zero() && outer > inner) {
            return Err(AnalyticError::InvalidKernelRadii);
        }
        let flux_scaling = xi_anisotropic(inner, outer, r_datum)?;
        Ok(Self {
            inner,
            outer,
            xi_sq: outer * outer - inner * inner,
            flux_scaling,
        })
    }
}

/// Isotropic flux-scaling factor `Ξ = [ln(ϱ/r_ω) - 1/2]⁻¹`.
///
/// Requires `ϱ > r_ω e^{1/2}` so that the bracket is positive.
pub fn xi_isotropic<S: Real>(rho: S, r_w: S) -> Result<S, AnalyticError> {
    let bracket = (rho / r_w).ln() - S::of(0.5);
    if !(bracket > S::zero()) {
        return Err(AnalyticError::NonPositiveScalingBracket(
            bracket.to_f64().unwrap_or(f64::NAN),
        ));
    }
    Ok(S::one() / bracket)
}

/// Annulus-kernel flux-scaling factor
/// `Ξ = [ln(ϱ_o/r_ω) - 1/2 - (ϱ_i²/ξ²) ln(ϱ_i/ϱ_o)]⁻¹`.
///
/// Reduces exactly to [`xi_isotropic`] for `ϱ_i = 0`.
pub fn xi_anisotropic<S: Real>(rho_i: S, rho_o: S, r_w: S) -> Result<S, AnalyticError> {
    if !(rho_o > rho_i && rho_i >= S::zero()) {
        return Err(AnalyticError::InvalidKernelRadii);
    }
    let xi_sq = rho_o * rho_o - rho_i * rho_i;
    let inner_term = if rho_i == S::zero() {
        S::zero()
    } else {
        rho_i * rho_i / xi_sq * (rho_i / rho_o).ln()
    };
    let bracket = (rho_o / r_w).ln() - S::of(0.5) - inner_term;
    if !(bracket > S::zero()) {
        return Err(AnalyticError::NonPositiveScalingBracket(
            bracket.to_f64().unwrap_or(f64::NAN),
        ));
    }
    Ok(S::one() / bracket)
}

/// Specific source rate from the pressure difference,
/// `q̂ = 2π (ρ k_I / μ) (p_ω - p₀) Ξ`.
pub fn source_from_pressures<S: Real>(
    p_well: S,
    p_axis: S,
    flux_scaling: S,
    k_iso: S,
    fluid: &FluidProperties<S>,
) -> S {
    S::of(2.0) * S::PI() * fluid.density * k_iso / fluid.viscosity * (p_well - p_axis) * flux_scaling
}

/// Radial position of a physical point in the mapped w-plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadialPos<S> {
    /// On the focal branch cut; equivalent to `|w| = f` for the solution branches.
    OnCut(S),
    Radius(S),
}

impl<S: Real> RadialPos<S> {
    pub fn radius(&self) -> S {
        match *self {
            RadialPos::OnCut(f) => f,
            RadialPos::Radius(r) => r,
        }
    }
}

/// Exact analytical solution for an infinite well in an infinite anisotropic
/// medium; optionally kernel-regularized.
#[derive(Clone, Debug)]
pub struct AnalyticSolution<S> {
    pub chain: TransformChain<S>,
    pub map: JoukowskyMap<S>,
    pub fluid: FluidProperties<S>,
    pub well: WellDescription<S>,
    pub kernel: Option<KernelSpec<S>>,
    /// Transformed specific rate `q̂ = q ζ`.
    pub q_hat: S,
    coeff: S,
}

impl<S: Real> AnalyticSolution<S> {
    pub fn new(
        chain: TransformChain<S>,
        fluid: FluidProperties<S>,
        well: WellDescription<S>,
        kernel: Option<KernelSpec<S>>,
    ) -> Result<Self, AnalyticError> {
        let map = JoukowskyMap::from_ellipse_axes(chain.semi_major, chain.semi_minor)?;
        if let Some(k) = &kernel {
            let ok = k.inner >= chain.focal
                && k.inner <= map.r_circle()
                && k.outer > map.r_circle();
            if !ok {
                return Err(AnalyticError::InvalidKernelRadii);
            }
        }
        let q_hat = well.rate * chain.zeta;
        let coeff = fluid.viscosity / (fluid.density * chain.k_iso) * q_hat
            / (S::of(2.0) * S::PI());
        Ok(Self {
            chain,
            map,
            fluid,
            well,
            kernel,
            q_hat,
            coeff,
        })
    }

    /// Convenience constructor from the raw inputs. `kernel_radii` are the
    /// annulus radii (ϱ_i, ϱ_o) in w-coordinates.
    pub fn build(
        permeability: &PermeabilityTensor<S>,
        well: WellDescription<S>,
        fluid: FluidProperties<S>,
        kernel_radii: Option<(S, S)>,
    ) -> Result<Self, AnalyticError> {
        let chain = TransformChain::build(permeability, &well)
            .map_err(|_| AnalyticError::InvalidKernelRadii)?;
        let map = JoukowskyMap::from_ellipse_axes(chain.semi_major, chain.semi_minor)?;
        let kernel = match kernel_radii {
            Some((ri, ro)) => Some(KernelSpec::new(ri, ro, map.r_circle())?),
            None => None,
        };
        Self::new(chain, fluid, well, kernel)
    }

    /// Pressure-datum radius: the circle the well bore maps onto.
    pub fn r_circle(&self) -> S {
        self.map.r_circle()
    }

    /// Logarithmic pressure coefficient `μ q̂ / (2π ρ k_I)`.
    pub fn pressure_coefficient(&self) -> S {
        self.coeff
    }

    /// Map a physical point to its radial coordinate `|w|`.
    pub fn radial_coordinate(&self, x: Vec3<S>) -> RadialPos<S> {
        let v = self.chain.forward_map(x);
        let z = Complex::new(v.x(), v.y());
        match self.map.to_w(z) {
            Ok(w) => RadialPos::Radius(w.norm()),
            Err(_) => RadialPos::OnCut(self.map.focal()),
        }
    }

    /// Exact singular solution `p = p_ω - (μ q̂ / 2π ρ k_I) ln(|w| / r_○)`.
    ///
    /// Rejects points mapping to `|w| <= f` (inside the mapped well region).
    pub fn pressure_singular(&self, x: Vec3<S>) -> Result<S, AnalyticError> {
        match self.radial_coordinate(x) {
            RadialPos::OnCut(_) => Err(AnalyticError::InsideWellRegion),
            RadialPos::Radius(r) => Ok(self.pressure_singular_radial(r)),
        }
    }

    pub fn pressure_singular_radial(&self, r: S) -> S {
        self.well.pressure - self.coeff * (r / self.map.r_circle()).ln()
    }

    /// Kernel-regularized solution: piecewise in `|w|` with a flat core,
    /// continuous across both kernel interfaces, and identical to the singular
    /// solution outside the annulus.
    pub fn pressure_regularized(&self, x: Vec3<S>) -> Result<S, AnalyticError> {
        let r = self.radial_coordinate(x).radius();
        self.pressure_regularized_radial(r)
    }

    pub fn pressure_regularized_radial(&self, r: S) -> Result<S, AnalyticError> {
        let k = self.kernel.as_ref().ok_or(AnalyticError::KernelMissing)?;
        let r_c = self.map.r_circle();
        let half = S::of(0.5);
        let inner_log = if k.inner == S::zero() {
            S::zero()
        } else {
            k.inner * k.inner / k.xi_sq * (k.inner / k.outer).ln()
        };
        let bracket = if r > k.outer {
            (r / r_c).ln()
        } else if r >= k.inner {
            (r * r - k.outer * k.outer) / (S::of(2.0) * k.xi_sq)
                - if k.inner == S::zero() {
                    S::zero()
                } else {
                    k.inner * k.inner / k.xi_sq * (r / k.outer).ln()
                }
                + (k.outer / r_c).ln()
        } else {
            -half - inner_log + (k.outer / r_c).ln()
        };
        Ok(self.well.pressure - self.coeff * bracket)
    }

    /// Pressure on the well center-line, `p₀ = p(|w| = 0) = p(|w| = ϱ_i)`.
    pub fn axis_pressure(&self) -> Result<S, AnalyticError> {
        self.pressure_regularized_radial(S::zero())
    }
}
