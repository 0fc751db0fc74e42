//! The Joukowsky transformation between the exterior of an ellipse and the
//! exterior of a circle, its inverse, and the Jacobian-determinant factor Φ_J.

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum ConformalError {
    #[error("point lies on the focal branch cut [-f, f]")]
    OnBranchCut,
    #[error("|w| <= f is outside the one-to-one domain of the inverse map")]
    InsideFocalCircle,
    #[error("invalid map parameters: focal {focal}, circle radius {radius}")]
    InvalidParameters { focal: f64, radius: f64 },
}

/// Joukowsky map for a well-bore ellipse with focal distance `f` and mapped
/// circle radius `r_circle = a + b`.
#[derive(Clone, Copy, Debug)]
pub struct JoukowskyMap<S> {
    focal: S,
    r_circle: S,
}

impl<S: Real> JoukowskyMap<S> {
    pub fn new(focal: S, r_circle: S) -> Result<Self, ConformalError> {
        if !(focal >= S::zero()) || !(r_circle > focal) {
            return Err(ConformalError::InvalidParameters {
                focal: focal.to_f64().unwrap_or(f64::NAN),
                radius: r_circle.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { focal, r_circle })
    }

    /// From the ellipse axes `a >= b`: `f = sqrt(a² - b²)`, `r_circle = a + b`.
    pub fn from_ellipse_axes(a: S, b: S) -> Result<Self, ConformalError> {
        let f = (a * a - b * b).max(S::zero()).sqrt();
        Self::new(f, a + b)
    }

    pub fn focal(&self) -> S {
        self.focal
    }

    /// Radius of the circle the well-bore ellipse is mapped onto.
    pub fn r_circle(&self) -> S {
        self.r_circle
    }

    /// Forward map `w = z + √(z-f) √(z+f)`; for `f = 0` the continuous limit
    /// `w = 2z`. The square-root factors are taken separately with principal
    /// branches, which selects the exterior branch `|w| > f` off the cut.
    pub fn to_w(&self, z: Complex<S>) -> Result<Complex<S>, ConformalError> {
        let f = self.focal;
        if f == S::zero() {
            return Ok(z * S::of(2.0));
        }
        // Distance from the focal segment [-f, f] on the real axis.
        let dist = if z.re.abs() <= f {
            z.im.abs()
        } else {
            (z.re.abs() - f).hypot(z.im)
        };
        if dist <= S::of(1e-14) * f {
            return Err(ConformalError::OnBranchCut);
        }
        let fs = Complex::new(f, S::zero());
        Ok(z + ((z - fs).sqrt()) * ((z + fs).sqrt()))
    }

    /// Inverse map `z = (w + f²/w)/2` for `|w| > f`; `z = w/2` when `f = 0`.
    pub fn from_w(&self, w: Complex<S>) -> Result<Complex<S>, ConformalError> {
        let f = self.focal;
        if f == S::zero() {
            return Ok(w * S::of(0.5));
        }
        if w.norm() <= f {
            return Err(ConformalError::InsideFocalCircle);
        }
        Ok((w + Complex::new(f * f, S::zero()) / w) * S::of(0.5))
    }

    /// Kernel factor `Φ_J = |det J_{T⁻¹}|⁻¹ = 4 / (1 + (f⁴ - 2f² Re(w²)) / |w|⁴)`.
    ///
    /// Converges quickly to 4 with increasing `|w|`; exactly 4 for `f = 0`.
    pub fn phi_j(&self, w: Complex<S>) -> Result<S, ConformalError> {
        let f = self.focal;
        let four = S::of(4.0);
        if f == S::zero() {
            return Ok(four);
        }
        let r2 = w.norm_sqr();
        if r2.sqrt() <= f {
            return Err(ConformalError::InsideFocalCircle);
        }
        let w2_re = w.re * w.re - w.im * w.im;
        let f2 = f * f;
        Ok(four / (S::one() + (f2 * f2 - S::of(2.0) * f2 * w2_re) / (r2 * r2)))
    }

    /// `|det J_{T⁻¹}| = Φ_J⁻¹`, the local area deformation of the inverse map.
    pub fn inv_jacobian_det(&self, w: Complex<S>) -> Result<S, ConformalError> {
        Ok(S::one() / self.phi_j(w)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    type C = Complex<f64>;

    fn map_15_09() -> JoukowskyMap<f64> {
        // a = 1.5, b = 0.9, f = 1.2, r_circle = 2.4.
        JoukowskyMap::from_ellipse_axes(1.5, 0.9).unwrap()
    }

    #[test]
    fn ellipse_vertex_maps_to_circle() {
        let m = map_15_09();
        assert!((m.focal() - 1.2).abs() < 1e-14);
        let w = m.to_w(C::new(1.5, 0.0)).unwrap();
        assert!((w - C::new(2.4, 0.0)).norm() < 1e-13);
        // Co-vertex 0.9i → 2.4i.
        let w = m.to_w(C::new(0.0, 0.9)).unwrap();
        assert!((w - C::new(0.0, 2.4)).norm() < 1e-13);
    }

    #[test]
    fn inverse_of_vertex() {
        let m = map_15_09();
        let z = m.from_w(C::new(2.4, 0.0)).unwrap();
        assert!((z - C::new(1.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn degenerate_focal_is_linear() {
        let m = JoukowskyMap::new(0.0, 0.2).unwrap();
        let z = C::new(0.3, -0.7);
        assert_eq!(m.to_w(z).unwrap(), z * 2.0);
        assert_eq!(m.from_w(z).unwrap(), z * 0.5);
        assert_eq!(m.phi_j(z).unwrap(), 4.0);
    }

    #[test]
    fn branch_cut_rejected() {
        let m = map_15_09();
        assert!(matches!(
            m.to_w(C::new(0.5, 0.0)),
            Err(ConformalError::OnBranchCut)
        ));
        assert!(matches!(
            m.from_w(C::new(0.5, 0.0)),
            Err(ConformalError::InsideFocalCircle)
        ));
    }

    #[test]
    fn exterior_branch_left_of_cut() {
        // Real z < -f must map outside the focal circle (separate square-root
        // factors, not √(z²-f²)).
        let m = map_15_09();
        let w = m.to_w(C::new(-2.0, 0.0)).unwrap();
        assert!(w.norm() > m.focal());
        assert!((w - C::new(-3.6, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn round_trips() {
        let m = map_15_09();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let r = m.focal() * rng.gen_range(1.01..100.0);
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let w = C::from_polar(r, th);
            let z = m.from_w(w).unwrap();
            let w2 = m.to_w(z).unwrap();
            assert!((w2 - w).norm() < 1e-10 * w.norm(), "w={w} z={z} w2={w2}");
        }
    }

    #[test]
    fn ellipse_maps_onto_circle_uniformly() {
        let m = map_15_09();
        for i in 0..128 {
            let th = std::f64::consts::TAU * (i as f64) / 128.0;
            let z = C::new(1.5 * th.cos(), 0.9 * th.sin());
            if z.im == 0.0 && z.re.abs() <= m.focal() {
                continue;
            }
            let w = m.to_w(z).unwrap();
            assert!((w.norm() - 2.4).abs() < 1e-10, "theta {th}: |w|={}", w.norm());
        }
    }

    #[test]
    fn phi_j_reference_values() {
        let m = map_15_09();
        // f=1.2, w=2.4: |det| = 0.140625, Φ_J = 1/0.140625.
        let det = m.inv_jacobian_det(C::new(2.4, 0.0)).unwrap();
        assert!((det - 0.140625).abs() < 1e-12);
        let phi = m.phi_j(C::new(2.4, 0.0)).unwrap();
        assert!((phi - 1.0 / 0.140625).abs() < 1e-10);
        // Far field: Φ_J → 4.
        let phi = m.phi_j(C::new(30.0, 0.0)).unwrap();
        assert!((phi - 4.0).abs() < 0.02);
    }

    #[test]
    fn phi_j_matches_finite_difference_jacobian() {
        let m = map_15_09();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let r = m.focal() * rng.gen_range(1.2..50.0);
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let w = C::from_polar(r, th);
            let h = 1e-6 * r;
            let zp = m.from_w(w + C::new(h, 0.0)).unwrap();
            let zm = m.from_w(w - C::new(h, 0.0)).unwrap();
            let zq = m.from_w(w + C::new(0.0, h)).unwrap();
            let zr = m.from_w(w - C::new(0.0, h)).unwrap();
            let dxdu = (zp.re - zm.re) / (2.0 * h);
            let dydu = (zp.im - zm.im) / (2.0 * h);
            let dxdv = (zq.re - zr.re) / (2.0 * h);
            let dydv = (zq.im - zr.im) / (2.0 * h);
            let det_fd = (dxdu * dydv - dxdv * dydu).abs();
            let det = m.inv_jacobian_det(w).unwrap();
            assert!(
                (det_fd - det).abs() < 1e-6 * det.max(1e-3),
                "fd {det_fd} vs analytic {det}"
            );
        }
    }

    #[test]
    fn conformality_preserves_angles() {
        let m = map_15_09();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let r = m.focal() * rng.gen_range(1.5..20.0);
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let w = C::from_polar(r, th);
            let h = 1e-7 * r;
            // Tangent images of two directions via finite differences.
            let d1 = (m.from_w(w + C::new(h, 0.0)).unwrap() - m.from_w(w).unwrap()) / h;
            let ang = rng.gen_range(0.1..3.0);
            let dir = C::from_polar(1.0, ang);
            let d2 = (m.from_w(w + dir * h).unwrap() - m.from_w(w).unwrap()) / h;
            let cos_orig = ang.cos();
            let cos_mapped = (d1.re * d2.re + d1.im * d2.im) / (d1.norm() * d2.norm());
            assert!((cos_orig - cos_mapped).abs() < 1e-6, "{cos_orig} vs {cos_mapped}");
        }
    }

    #[test]
    fn harmonicity_preserved() {
        // p(w) = ln|w| pulled back through T stays harmonic (FD Laplacian small).
        let m = map_15_09();
        let p = |z: C| -> f64 { m.to_w(z).unwrap().norm().ln() };
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let r = rng.gen_range(2.0..20.0);
            let th = rng.gen_range(0.2..(std::f64::consts::PI - 0.2));
            let z = C::from_polar(r, th);
            let h = 1e-4 * r;
            let lap = (p(z + C::new(h, 0.0)) + p(z - C::new(h, 0.0)) + p(z + C::new(0.0, h))
                + p(z - C::new(0.0, h))
                - 4.0 * p(z))
                / (h * h);
            let grad = ((p(z + C::new(h, 0.0)) - p(z - C::new(h, 0.0))) / (2.0 * h))
                .hypot((p(z + C::new(0.0, h)) - p(z - C::new(0.0, h))) / (2.0 * h));
            assert!(lap.abs() <= 1e-4 * grad / h, "lap {lap} grad {grad} h {h}");
        }
    }

    #[test]
    fn far_field_is_half_w() {
        let m = map_15_09();
        let w = C::from_polar(500.0, 0.7);
        let z = m.from_w(w).unwrap();
        assert!((z - w * 0.5).norm() < 1e-5 * w.norm());
    }
}
