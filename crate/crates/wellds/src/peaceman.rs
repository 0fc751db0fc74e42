//! Peaceman well index for axis-aligned wells on structured grids and its
//! generalization to slanted wells, used as the comparison baseline for the
//! distributed-source model.

use thiserror::Error;

use crate::analytic::FluidProperties;
use crate::linalg::Vec3;
use crate::tensor::PermeabilityTensor;

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Error)]
pub enum PeacemanError {
    #[error("the Peaceman well index requires a diagonal permeability tensor")]
    FullTensor,
    #[error("well direction must be aligned with a coordinate axis for the axis-aligned well index")]
    NotAxisAligned,
    #[error("equivalent radius r0 = {r0} does not exceed the well radius {r_w}; the grid is too fine for the well-index model")]
    RadiusTooSmall { r0: f64, r_w: f64 },
    #[error("cell dimensions must be positive")]
    BadDimensions,
}

/// Inputs of the well-index source evaluation for one computational cell.
#[derive(Clone, Copy, Debug)]
pub struct WellIndexInput {
    /// Cell dimensions Δx, Δy, Δz [m].
    pub cell_dims: [f64; 3],
    /// Diagonal permeabilities K₁₁, K₂₂, K₃₃ [m²].
    pub perm_diag: [f64; 3],
    /// Unit well direction.
    pub direction: Vec3<f64>,
    /// Well-segment length inside the cell [m].
    pub segment_length: f64,
    /// Well-bore radius [m].
    pub well_radius: f64,
    pub fluid: FluidProperties<f64>,
    /// Well-bore pressure [Pa].
    pub p_well: f64,
    /// Well-block (cell) pressure [Pa].
    pub p_cell: f64,
}

impl WellIndexInput {
    /// Extract the diagonal of `permeability`, rejecting full tensors.
    pub fn diagonal_of(permeability: &PermeabilityTensor<f64>) -> Result<[f64; 3], PeacemanError> {
        let k = permeability.entries();
        let scale = k.max_abs();
        for i in 0..3 {
            for j in 0..3 {
                if i != j && k.0[i][j].abs() > 1e-12 * scale {
                    return Err(PeacemanError::FullTensor);
                }
            }
        }
        Ok([k.0[0][0], k.0[1][1], k.0[2][2]])
    }

    fn validate(&self) -> Result<(), PeacemanError> {
        if self.cell_dims.iter().any(|&d| !(d > 0.0)) {
            return Err(PeacemanError::BadDimensions);
        }
        Ok(())
    }
}

fn source_from(input: &WellIndexInput, k: f64, r0: f64) -> Result<f64, PeacemanError> {
    if r0 <= input.well_radius {
        return Err(PeacemanError::RadiusTooSmall {
            r0,
            r_w: input.well_radius,
        });
    }
    let mobility = input.fluid.density / input.fluid.viscosity;
    Ok(2.0 * std::f64::consts::PI
        * mobility
        * (input.p_well - input.p_cell)
        * input.segment_length
        * k
        / (r0 / input.well_radius).ln())
}

/// Axis permutation so that the well runs along the local third axis: returns
/// (Δ₁, Δ₂) and (K₁₁, K₂₂) of the transverse plane.
fn transverse(input: &WellIndexInput) -> Result<([f64; 2], [f64; 2]), PeacemanError> {
    let d = input.direction;
    let comps = [d.x().abs(), d.y().abs(), d.z().abs()];
    let axis = (0..3)
        .find(|&a| (comps[a] - 1.0).abs() < 1e-12)
        .ok_or(PeacemanError::NotAxisAligned)?;
    let t1 = (axis + 1) % 3;
    let t2 = (axis + 2) % 3;
    Ok((
        [input.cell_dims[t1], input.cell_dims[t2]],
        [input.perm_diag[t1], input.perm_diag[t2]],
    ))
}

/// Well-block source for a well aligned with a coordinate axis:
/// `Q = 2π(ρ/μ)(p_ω − p₀) L √(K₁K₂) / ln(r₀/r_ω)` with the anisotropic
/// equivalent radius r₀.
pub fn peaceman_source(input: &WellIndexInput) -> Result<f64, PeacemanError> {
    input.validate()?;
    let ([dx, dy], [k1, k2]) = transverse(input)?;
    let r21 = (k2 / k1).sqrt();
    let r12 = (k1 / k2).sqrt();
    let r0 = 0.5
        * (-EULER_GAMMA).exp()
        * (r21 * dx * dx + r12 * dy * dy).sqrt()
        / (r12.sqrt() + r21.sqrt());
    source_from(input, (k1 * k2).sqrt(), r0)
}

/// Slanted-well generalization: directional effective permeability
/// `k = (ψ₁²K₂₂K₃₃ + ψ₂²K₁₁K₃₃ + ψ₃²K₁₁K₂₂)^½` and an equivalent radius built
/// from direction-weighted transverse cell extents. Reduces exactly to
/// `peaceman_source` for axis-aligned wells.
pub fn slanted_well_source(input: &WellIndexInput) -> Result<f64, PeacemanError> {
    input.validate()?;
    let [dx, dy, dz] = input.cell_dims;
    let [k11, k22, k33] = input.perm_diag;
    let p = input.direction;
    let (p1, p2, p3) = (p.x() * p.x(), p.y() * p.y(), p.z() * p.z());

    let k = (p1 * k22 * k33 + p2 * k11 * k33 + p3 * k11 * k22).sqrt();

    let dl1 = (k22 / k33).sqrt() * dz * dz * p1
        + (k33 / k11).sqrt() * dx * dx * p2
        + (k11 / k22).sqrt() * dy * dy * p3;
    let dl2 = (k33 / k22).sqrt() * dy * dy * p1
        + (k11 / k33).sqrt() * dz * dz * p2
        + (k22 / k11).sqrt() * dx * dx * p3;
    let a1 = (k22 / k33).sqrt() * p1 + (k33 / k11).sqrt() * p2 + (k11 / k22).sqrt() * p3;
    let a2 = (k33 / k22).sqrt() * p1 + (k11 / k33).sqrt() * p2 + (k22 / k11).sqrt() * p3;

    let r0 = 0.5 * (-EULER_GAMMA).exp() * (dl1 + dl2).sqrt() / (a1.sqrt() + a2.sqrt());
    source_from(input, k, r0)
}
