//! Permeability eigendecomposition, the isochoric stretch, Rodrigues rotation,
//! well-bore ellipse characterization and the assembled x -> v transform.

use thiserror::Error;

use crate::linalg::{sym_eigen, sym_eigen_2x2, Mat3, Vec3};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("permeability tensor is not symmetric (relative asymmetry > 1e-14)")]
    NotSymmetric,
    #[error("permeability tensor is not positive definite (min eigenvalue {0})")]
    NotPositiveDefinite(f64),
    #[error("well direction is degenerate (zero or non-finite)")]
    DegenerateDirection,
    #[error("well radius must be positive")]
    NonPositiveRadius,
}

/// Symmetric positive-definite permeability tensor with cached eigendecomposition.
#[derive(Clone, Copy, Debug)]
pub struct PermeabilityTensor<S> {
    entries: Mat3<S>,
    eigenvalues: [S; 3],
    rotation: Mat3<S>,
}

impl<S: Real> PermeabilityTensor<S> {
    /// Decompose `K = Q diag(λ) Qᵀ`; eigenvalues ascending, `Q` a proper rotation.
    pub fn new(entries: Mat3<S>) -> Result<Self, GeometryError> {
        if !entries.is_symmetric(S::of(1e-14)) {
            return Err(GeometryError::NotSymmetric);
        }
        let sym = entries.symmetrized();
        let (eigenvalues, mut rotation) = sym_eigen(&sym);
        if eigenvalues[0] <= S::zero() {
            return Err(GeometryError::NotPositiveDefinite(
                eigenvalues[0].to_f64().unwrap_or(f64::NAN),
            ));
        }
        if rotation.det() < S::zero() {
            for i in 0..3 {
                rotation.0[i][2] = -rotation.0[i][2];
            }
        }
        Ok(Self {
            entries: sym,
            eigenvalues,
            rotation,
        })
    }

    pub fn isotropic(k: S) -> Self {
        Self::new(Mat3::diag([k, k, k])).expect("isotropic tensor is SPD")
    }

    pub fn entries(&self) -> &Mat3<S> {
        &self.entries
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [S; 3] {
        self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns (proper rotation).
    pub fn rotation(&self) -> &Mat3<S> {
        &self.rotation
    }

    pub fn det(&self) -> S {
        self.eigenvalues[0] * self.eigenvalues[1] * self.eigenvalues[2]
    }

    /// `K^r = Q diag(λ^r) Qᵀ` for real exponents.
    pub fn power(&self, r: S) -> Mat3<S> {
        let d = Mat3::diag([
            self.eigenvalues[0].powf(r),
            self.eigenvalues[1].powf(r),
            self.eigenvalues[2].powf(r),
        ]);
        self.rotation * d * self.rotation.transpose()
    }
}

/// Infinite-line well: point on axis, unit direction, radius, pressure, specific rate.
#[derive(Clone, Copy, Debug)]
pub struct WellDescription<S> {
    pub point: Vec3<S>,
    pub direction: Vec3<S>,
    pub radius: S,
    pub pressure: S,
    pub rate: S,
}

impl<S: Real> WellDescription<S> {
    pub fn new(
        point: Vec3<S>,
        direction: Vec3<S>,
        radius: S,
        pressure: S,
        rate: S,
    ) -> Result<Self, GeometryError> {
        let n = direction.norm();
        if !n.is_finite() || n < S::of(1e-12) {
            return Err(GeometryError::DegenerateDirection);
        }
        if !(radius > S::zero()) {
            return Err(GeometryError::NonPositiveRadius);
        }
        Ok(Self {
            point,
            direction: direction.normalized(),
            radius,
            pressure,
            rate,
        })
    }
}

/// Rotation aligning `e₃` with a unit vector, `R = 2kkᵀ - I` with
/// `k = (e₃ + ψ')/|e₃ + ψ'|`. Symmetric and involutory.
///
/// For the antipodal case `ψ' = -e₃` the axis `k = e₁` is used (rotation by π
/// about `e₁` maps `e₃` to `-e₃`).
pub fn rodrigues_align<S: Real>(psi: Vec3<S>) -> Mat3<S> {
    let e3 = Vec3::unit(2);
    let sum = e3 + psi;
    let n2 = sum.dot(&sum);
    let k = if n2 < S::of(1e-24) {
        Vec3::unit(0)
    } else {
        sum.normalized()
    };
    k.outer(&k).scale(S::of(2.0)) - Mat3::identity()
}

/// Precomputed coordinate-transform chain mapping physical coordinates `x` to
/// the well-aligned frame `v` in which the bore cross-section is the canonical
/// ellipse `(v₁/a)² + (v₂/b)² = 1` and the well axis is `e₃`.
#[derive(Clone, Copy, Debug)]
pub struct TransformChain<S> {
    /// Isochoric stretch `S̃ = k_I^{1/2} K^{-1/2}`.
    pub stretch: Mat3<S>,
    pub stretch_inv: Mat3<S>,
    /// Scalar isotropic permeability after the stretch, `k_I = det(K)^{1/3}`.
    pub k_iso: S,
    /// Rodrigues rotation aligning `e₃` with the transformed well direction.
    pub rotation: Mat3<S>,
    /// In-plane rotation onto the principal ellipse axes.
    pub ellipse_rotation: Mat3<S>,
    /// Transformed (normalized) well direction `ψ' = S̃ψ / |S̃ψ|`.
    pub psi_prime: Vec3<S>,
    /// Ellipse semi-axes of the well-bore cross-section, `a >= b`.
    pub semi_major: S,
    pub semi_minor: S,
    /// Focal distance `f = sqrt(a² - b²)`.
    pub focal: S,
    /// Source scaling factor `ζ = ab / r_ω²`.
    pub zeta: S,
    /// Ellipse-plane normal expressed in x-coordinates.
    pub n_ellipse_x: Vec3<S>,
    /// Arc-length scaling along the well: `dŝ/ds = |S̃ψ| = 1/ζ`.
    pub axial_scale: S,
    forward: Mat3<S>,
    inverse: Mat3<S>,
    origin: Vec3<S>,
}

impl<S: Real> TransformChain<S> {
    /// Assemble the chain `v = R̂ᵀ Rᵀ S̃ (x - x₀)` for a permeability tensor and well.
    pub fn build(
        permeability: &PermeabilityTensor<S>,
        well: &WellDescription<S>,
    ) -> Result<Self, GeometryError> {
        let k_iso = permeability.det().powf(S::of(1.0 / 3.0));
        let stretch = permeability.power(S::of(-0.5)).scale(k_iso.sqrt());
        let stretch_inv = permeability.power(S::of(0.5)).scale(S::one() / k_iso.sqrt());

        let stretched_dir = stretch * well.direction;
        let axial_scale = stretched_dir.norm();
        if !(axial_scale > S::zero()) {
            return Err(GeometryError::DegenerateDirection);
        }
        let psi_prime = stretched_dir.scale(S::one() / axial_scale);
        let rotation = rodrigues_align(psi_prime);

        // Well-bore ellipse: E = Pᵀ R S̃⁻¹ Ψ S̃⁻¹ Rᵀ P with Ψ = I - ψψᵀ.
        let proj = Mat3::identity() - well.direction.outer(&well.direction);
        let m = rotation * stretch_inv * proj * stretch_inv * rotation.transpose();
        let ([g_small, g_large], evecs) = sym_eigen_2x2(m.0[0][0], m.0[0][1], m.0[1][1]);
        if !(g_small > S::zero()) {
            return Err(GeometryError::NotPositiveDefinite(
                g_small.to_f64().unwrap_or(f64::NAN),
            ));
        }
        let semi_major = well.radius / g_small.sqrt();
        let semi_minor = well.radius / g_large.sqrt();

        // Principal axes in the rotated frame; ν₁ for the major axis (smaller γ).
        let (nu1, nu2);
        let tie = (semi_major - semi_minor).abs() < S::of(1e-12) * semi_major;
        if tie {
            // Deterministic tie-break: project e₁ (x-frame) into the rotated frame.
            let g = rotation * Vec3::unit(0);
            let mut planar = [g.x(), g.y()];
            let n = (planar[0] * planar[0] + planar[1] * planar[1]).sqrt();
            if n < S::of(1e-8) {
                let g = rotation * Vec3::unit(1);
                planar = [g.x(), g.y()];
            }
            let n = (planar[0] * planar[0] + planar[1] * planar[1]).sqrt();
            nu1 = [planar[0] / n, planar[1] / n];
            nu2 = [-nu1[1], nu1[0]];
        } else {
            nu1 = evecs[0];
            // Orient so that ν₁ × ν₂ = +e₃.
            let cross_z = evecs[0][0] * evecs[1][1] - evecs[0][1] * evecs[1][0];
            nu2 = if cross_z >= S::zero() {
                evecs[1]
            } else {
                [-evecs[1][0], -evecs[1][1]]
            };
        }
        let ellipse_rotation = Mat3::from_columns(
            Vec3::new(nu1[0], nu1[1], S::zero()),
            Vec3::new(nu2[0], nu2[1], S::zero()),
            Vec3::unit(2),
        );

        let focal = if tie {
            S::zero()
        } else {
            (semi_major * semi_major - semi_minor * semi_minor)
                .max(S::zero())
                .sqrt()
        };
        let semi_minor = if tie { semi_major } else { semi_minor };
        let zeta = semi_major * semi_minor / (well.radius * well.radius);

        let forward = ellipse_rotation.transpose() * rotation.transpose() * stretch;
        let inverse = forward.inverse();
        // Normal of the ellipse plane pulled back to x-coordinates: forwardᵀ e₃.
        let n_ellipse_x = forward.transpose() * Vec3::unit(2);

        Ok(Self {
            stretch,
            stretch_inv,
            k_iso,
            rotation,
            ellipse_rotation,
            psi_prime,
            semi_major,
            semi_minor,
            focal,
            zeta,
            n_ellipse_x,
            axial_scale,
            forward,
            inverse,
            origin: well.point,
        })
    }

    /// `v = R̂ᵀ Rᵀ S̃ (x - x₀)`.
    pub fn forward_map(&self, x: Vec3<S>) -> Vec3<S> {
        self.forward * (x - self.origin)
    }

    pub fn inverse_map(&self, v: Vec3<S>) -> Vec3<S> {
        self.inverse * v + self.origin
    }

    /// Axial coordinate `ŝ` in the transformed frame for arc length `s` along ψ.
    pub fn axial_coord(&self, s: S) -> S {
        s * self.axial_scale
    }

    pub fn forward_matrix(&self) -> &Mat3<S> {
        &self.forward
    }

    pub fn inverse_matrix(&self) -> &Mat3<S> {
        &self.inverse
    }
}
