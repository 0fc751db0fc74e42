//! Source kernels: the annulus kernel in w-coordinates, its pullback
//! `Φ_Λ = Φ_A·Φ_J` to physical coordinates, the elliptic-cylinder support
//! geometry, and volume-sampled integration points for per-cell weights.

use num_complex::Complex;
use thiserror::Error;

use crate::analytic::KernelSpec;
use crate::conformal::JoukowskyMap;
use crate::linalg::{sym_eigen_2x2, Vec3};
use crate::scalar::Real;
use crate::tensor::TransformChain;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("segment must satisfy s0 <= s1")]
    InvalidSegment,
    #[error("integration-point spacing must be positive and no larger than the annulus thickness")]
    InvalidSpacing,
}

/// Kernel field for one well segment `[s0, s1]` (arc length along ψ, relative
/// to the well's reference point).
#[derive(Clone, Debug)]
pub struct KernelField<S> {
    pub chain: TransformChain<S>,
    pub map: JoukowskyMap<S>,
    pub spec: KernelSpec<S>,
    pub s_range: (S, S),
    /// Use the far-field simplification `Φ_J ≈ 4` for the kernel density.
    /// Volume elements always use the exact geometric deformation.
    pub simplified_jacobian: bool,
}

/// Integration points with volume elements and pre-multiplied kernel weights
/// `Vᵢ Φ_Λ(xᵢ)`.
#[derive(Clone, Debug)]
pub struct IntegrationPointSet<S> {
    pub points: Vec<Vec3<S>>,
    pub volumes: Vec<S>,
    pub weights: Vec<S>,
}

impl<S> Default for IntegrationPointSet<S> {
    fn default() -> Self {
        Self {
            points: Vec::new(),
            volumes: Vec::new(),
            weights: Vec::new(),
        }
    }
}

impl<S: Real> IntegrationPointSet<S> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_volume(&self) -> S {
        self.volumes.iter().copied().sum()
    }

    pub fn total_weight(&self) -> S {
        self.weights.iter().copied().sum()
    }
}

impl<S: Real> KernelField<S> {
    pub fn new(
        chain: TransformChain<S>,
        map: JoukowskyMap<S>,
        spec: KernelSpec<S>,
        s_range: (S, S),
        simplified_jacobian: bool,
    ) -> Result<Self, KernelError> {
        if !(s_range.0 <= s_range.1) {
            return Err(KernelError::InvalidSegment);
        }
        Ok(Self {
            chain,
            map,
            spec,
            s_range,
            simplified_jacobian,
        })
    }

    /// Constant kernel density in the w-plane, `Φ_A = 1/(π ξ²)`.
    pub fn phi_a(&self) -> S {
        S::one() / (S::PI() * self.spec.xi_sq)
    }

    /// Transformed segment length `L̂ = (s1 - s0)/ζ`; the exact value of the
    /// kernel integral over the segment's support.
    pub fn l_hat(&self) -> S {
        (self.s_range.1 - self.s_range.0) * self.chain.axial_scale
    }

    /// Kernel density `Φ_Λ(x) = Φ_A(w)·Φ_J(w)`; zero outside the support.
    pub fn eval(&self, x: Vec3<S>) -> S {
        let v = self.chain.forward_map(x);
        let s_hat = v.z();
        let (lo, hi) = (
            self.chain.axial_coord(self.s_range.0),
            self.chain.axial_coord(self.s_range.1),
        );
        if s_hat < lo || s_hat > hi {
            return S::zero();
        }
        let z = Complex::new(v.x(), v.y());
        let w = match self.map.to_w(z) {
            Ok(w) => w,
            // Points on the branch cut lie strictly inside the ϱ_i-excluded
            // core (ϱ_i >= f), hence outside the annulus support.
            Err(_) => return S::zero(),
        };
        let r = w.norm();
        if r < self.spec.inner || r > self.spec.outer {
            return S::zero();
        }
        let phi_j = if self.simplified_jacobian {
            S::of(4.0)
        } else {
            self.map.phi_j(w).unwrap_or_else(|_| S::of(4.0))
        };
        self.phi_a() * phi_j
    }

    /// Structured lattice of integration points in `(|w|², arg w, ŝ)` annulus
    /// coordinates (equal-area radial bands), mapped back to x-coordinates with
    /// exact per-point volume elements.
    pub fn generate_points(&self, spacing: S) -> Result<IntegrationPointSet<S>, KernelError> {
        let thickness = self.spec.outer - self.spec.inner;
        if !(spacing > S::zero()) || spacing > thickness {
            return Err(KernelError::InvalidSpacing);
        }
        let (s0, s1) = (
            self.chain.axial_coord(self.s_range.0),
            self.chain.axial_coord(self.s_range.1),
        );
        let length = s1 - s0;
        if length == S::zero() {
            return Ok(IntegrationPointSet::default());
        }

        let n_r = (thickness / spacing).ceil().to_usize().unwrap_or(1).max(1);
        let r_mid = (self.spec.inner + self.spec.outer) * S::of(0.5);
        let n_th = (S::of(2.0) * S::PI() * r_mid / spacing)
            .ceil()
            .to_usize()
            .unwrap_or(8)
            .max(8);
        let n_s = (length / spacing).ceil().to_usize().unwrap_or(1).max(1);

        let f = self.map.focal();
        let r2_lo = self.spec.inner * self.spec.inner;
        let dr2 = self.spec.xi_sq / S::of(n_r as f64);
        let dth = S::of(2.0) * S::PI() / S::of(n_th as f64);
        let cell_area = dr2 * S::of(0.5) * dth;
        let ds = length / S::of(n_s as f64);
        let phi_a = self.phi_a();

        let n = n_r * n_th * n_s;
        let mut set = IntegrationPointSet {
            points: Vec::with_capacity(n),
            volumes: Vec::with_capacity(n),
            weights: Vec::with_capacity(n),
        };
        for jr in 0..n_r {
            let r2_0 = r2_lo + dr2 * S::of(jr as f64);
            let r2_1 = r2_0 + dr2;
            let r = (r2_0 + dr2 * S::of(0.5)).sqrt();
            for jt in 0..n_th {
                let th0 = dth * S::of(jt as f64);
                let th1 = th0 + dth;
                let theta = (th0 + th1) * S::of(0.5);
                let w = Complex::from_polar(r, theta);
                let z = self.map.from_w(w).expect("annulus lies outside focal circle");
                // Exact cell volume: closed-form integral of |det J_{T⁻¹}| =
                // (1 + (f⁴ - 2f²r²cos2θ)/r⁴)/4 over the (r², θ) cell.
                let f2 = f * f;
                let focal_terms = if f == S::zero() {
                    S::zero()
                } else {
                    dth * f2 * f2 * (S::one() / r2_0 - S::one() / r2_1) * S::of(0.5)
                        - f2 * (r2_1 / r2_0).ln() * S::of(0.5)
                            * ((S::of(2.0) * th1).sin() - (S::of(2.0) * th0).sin())
                };
                let volume = ds * (cell_area + focal_terms) * S::of(0.25);
                // Exact kernel integral over the cell: with the exact Jacobian
                // the pullback factors cancel, ∫ Φ_Λ dx = Φ_A·ΔA_w·Δŝ; the
                // simplified density Φ_J ≈ 4 is integrated over the true volume.
                let weight = if self.simplified_jacobian {
                    volume * phi_a * S::of(4.0)
                } else {
                    cell_area * ds * phi_a
                };
                for js in 0..n_s {
                    let s_hat = s0 + ds * (S::of(js as f64) + S::of(0.5));
                    let v = Vec3::new(z.re, z.im, s_hat);
                    set.points.push(self.chain.inverse_map(v));
                    set.volumes.push(volume);
                    set.weights.push(weight);
                }
            }
        }
        Ok(set)
    }
}

/// Sum of integration-point weights inside the axis-aligned box `[lo, hi)`.
pub fn cell_kernel_weight<S: Real>(points: &IntegrationPointSet<S>, lo: Vec3<S>, hi: Vec3<S>) -> S {
    let mut total = S::zero();
    for (x, w) in points.points.iter().zip(&points.weights) {
        if (0..3).all(|d| x.0[d] >= lo.0[d] && x.0[d] < hi.0[d]) {
            total += *w;
        }
    }
    total
}

/// Semi-axes (major, minor) of the kernel support ellipse `E_Φ,x`: the image
/// in physical coordinates of the circle `|w| = ϱ_o`.
pub fn kernel_ellipse_axes<S: Real>(
    chain: &TransformChain<S>,
    map: &JoukowskyMap<S>,
    rho_o: S,
) -> (S, S) {
    // In the z-plane the circle maps to an ellipse with semi-axes
    // A = (ϱ_o + f²/ϱ_o)/2 along Re z and B = (ϱ_o - f²/ϱ_o)/2 along Im z.
    let f = map.focal();
    let half = S::of(0.5);
    let a_z = (rho_o + f * f / rho_o) * half;
    let b_z = (rho_o - f * f / rho_o) * half;
    // Physical image of the plane ellipse under the inverse linear map; its
    // semi-axes are the singular values of M[:,0..2]·diag(A, B).
    let m = chain.inverse_matrix();
    let c0 = m.column(0).scale(a_z);
    let c1 = m.column(1).scale(b_z);
    // Eigenvalues of the 2x2 Gram matrix give the squared singular values.
    let ([lo, hi], _) = sym_eigen_2x2(c0.dot(&c0), c0.dot(&c1), c1.dot(&c1));
    (hi.max(S::zero()).sqrt(), lo.max(S::zero()).sqrt())
}
