//! Small fixed-size linear algebra: 3-vectors, 3x3 matrices, and a closed-form
//! symmetric eigensolver with one Newton polish step per eigenvalue.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec3<S>(pub [S; 3]);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3<S>(pub [[S; 3]; 3]);

impl<S: Real> Vec3<S> {
    pub fn new(x: S, y: S, z: S) -> Self {
        Vec3([x, y, z])
    }

    pub fn zero() -> Self {
        Vec3([S::zero(); 3])
    }

    pub fn unit(axis: usize) -> Self {
        let mut v = Self::zero();
        v.0[axis] = S::one();
        v
    }

    pub fn x(&self) -> S {
        self.0[0]
    }
    pub fn y(&self) -> S {
        self.0[1]
    }
    pub fn z(&self) -> S {
        self.0[2]
    }

    pub fn dot(&self, o: &Self) -> S {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn cross(&self, o: &Self) -> Self {
        Vec3([
            self.0[1] * o.0[2] - self.0[2] * o.0[1],
            self.0[2] * o.0[0] - self.0[0] * o.0[2],
            self.0[0] * o.0[1] - self.0[1] * o.0[0],
        ])
    }

    pub fn norm(&self) -> S {
        self.dot(self).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Vec3([self.0[0] / n, self.0[1] / n, self.0[2] / n])
    }

    pub fn scale(&self, s: S) -> Self {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    /// Outer product `v vᵀ`.
    pub fn outer(&self, o: &Self) -> Mat3<S> {
        let mut m = [[S::zero(); 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = self.0[i] * o.0[j];
            }
        }
        Mat3(m)
    }
}

impl<S: Real> Add for Vec3<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl<S: Real> Sub for Vec3<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl<S: Real> Neg for Vec3<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec3([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl<S: Real> Mat3<S> {
    pub fn zero() -> Self {
        Mat3([[S::zero(); 3]; 3])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            m.0[i][i] = S::one();
        }
        m
    }

    pub fn diag(d: [S; 3]) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            m.0[i][i] = d[i];
        }
        m
    }

    /// Rotation about the first coordinate axis by `angle` radians.
    pub fn rotation_x(angle: S) -> Self {
        let (s, c) = angle.sin_cos();
        Mat3([
            [S::one(), S::zero(), S::zero()],
            [S::zero(), c, -s],
            [S::zero(), s, c],
        ])
    }

    /// Rotation about the second coordinate axis by `angle` radians.
    pub fn rotation_y(angle: S) -> Self {
        let (s, c) = angle.sin_cos();
        Mat3([
            [c, S::zero(), s],
            [S::zero(), S::one(), S::zero()],
            [-s, S::zero(), c],
        ])
    }

    pub fn from_columns(c0: Vec3<S>, c1: Vec3<S>, c2: Vec3<S>) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            m.0[i][0] = c0.0[i];
            m.0[i][1] = c1.0[i];
            m.0[i][2] = c2.0[i];
        }
        m
    }

    pub fn column(&self, j: usize) -> Vec3<S> {
        Vec3([self.0[0][j], self.0[1][j], self.0[2][j]])
    }

    pub fn row(&self, i: usize) -> Vec3<S> {
        Vec3(self.0[i])
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn trace(&self) -> S {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> S {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn scale(&self, s: S) -> Self {
        let mut m = *self;
        for row in m.0.iter_mut() {
            for e in row.iter_mut() {
                *e = *e * s;
            }
        }
        m
    }

    /// Inverse via the adjugate. Panics on exactly singular input; callers
    /// validate conditioning upstream (SPD tensors, rotations).
    pub fn inverse(&self) -> Self {
        let d = self.det();
        let m = &self.0;
        let adj = [
            [
                m[1][1] * m[2][2] - m[1][2] * m[2][1],
                m[0][2] * m[2][1] - m[0][1] * m[2][2],
                m[0][1] * m[1][2] - m[0][2] * m[1][1],
            ],
            [
                m[1][2] * m[2][0] - m[1][0] * m[2][2],
                m[0][0] * m[2][2] - m[0][2] * m[2][0],
                m[0][2] * m[1][0] - m[0][0] * m[1][2],
            ],
            [
                m[1][0] * m[2][1] - m[1][1] * m[2][0],
                m[0][1] * m[2][0] - m[0][0] * m[2][1],
                m[0][0] * m[1][1] - m[0][1] * m[1][0],
            ],
        ];
        let mut out = Mat3(adj);
        for row in out.0.iter_mut() {
            for e in row.iter_mut() {
                *e = *e / d;
            }
        }
        out
    }

    pub fn max_abs(&self) -> S {
        let mut m = S::zero();
        for row in &self.0 {
            for e in row {
                m = m.max(e.abs());
            }
        }
        m
    }

    pub fn is_symmetric(&self, rel_tol: S) -> bool {
        let scale = self.max_abs().max(S::min_positive_value());
        for i in 0..3 {
            for j in (i + 1)..3 {
                if (self.0[i][j] - self.0[j][i]).abs() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }

    pub fn symmetrized(&self) -> Self {
        let t = self.transpose();
        let mut m = Self::zero();
        let half = S::of(0.5);
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = (self.0[i][j] + t.0[i][j]) * half;
            }
        }
        m
    }
}

impl<S: Real> Mul for Mat3<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = S::zero();
                for (k, ok) in o.0.iter().enumerate() {
                    s = s + self.0[i][k] * ok[j];
                }
                m.0[i][j] = s;
            }
        }
        m
    }
}

impl<S: Real> Mul<Vec3<S>> for Mat3<S> {
    type Output = Vec3<S>;
    fn mul(self, v: Vec3<S>) -> Vec3<S> {
        Vec3([
            Vec3(self.0[0]).dot(&v),
            Vec3(self.0[1]).dot(&v),
            Vec3(self.0[2]).dot(&v),
        ])
    }
}

impl<S: Real> Add for Mat3<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut m = self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = m.0[i][j] + o.0[i][j];
            }
        }
        m
    }
}

impl<S: Real> Sub for Mat3<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut m = self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = m.0[i][j] - o.0[i][j];
            }
        }
        m
    }
}

impl<S: Real> Div<S> for Mat3<S> {
    type Output = Self;
    fn div(self, s: S) -> Self {
        self.scale(S::one() / s)
    }
}

/// Eigendecomposition of a symmetric 3x3 matrix.
///
/// Eigenvalues are returned in ascending order; eigenvectors are the columns of
/// an orthonormal matrix. Closed-form characteristic-polynomial evaluation with
/// one Newton polish step per eigenvalue, eigenvectors via row cross products
/// with a reduced 2x2 system for the middle eigenvalue.
pub fn sym_eigen<S: Real>(m: &Mat3<S>) -> ([S; 3], Mat3<S>) {
    let scale = m.max_abs();
    if scale == S::zero() {
        return ([S::zero(); 3], Mat3::identity());
    }
    let a = m.symmetrized().scale(S::one() / scale);

    let q = a.trace() / S::of(3.0);
    let b = a - Mat3::diag([q; 3]);
    let p2 = (b.0[0][0] * b.0[0][0]
        + b.0[1][1] * b.0[1][1]
        + b.0[2][2] * b.0[2][2]
        + S::of(2.0) * (b.0[0][1] * b.0[0][1] + b.0[0][2] * b.0[0][2] + b.0[1][2] * b.0[1][2]))
        / S::of(6.0);
    let p = p2.sqrt();
    if p < S::of(1e-14) {
        // Scalar multiple of the identity.
        return ([q * scale; 3], Mat3::identity());
    }

    let c = b.scale(S::one() / p);
    let half_det = (c.det() * S::of(0.5)).max(-S::one()).min(S::one());
    let phi = half_det.acos() / S::of(3.0);
    let two = S::of(2.0);
    let l2 = q + two * p * phi.cos();
    let l0 = q + two * p * (phi + two * S::FRAC_PI_3()).cos();
    let l1 = S::of(3.0) * q - l0 - l2;

    let mut eig = [l0, l1, l2];
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());

    // The trigonometric roots lose ~√ε accuracy for a near-double pair, whose
    // non-extremal root depends first-order on the acos argument. Polish the
    // most isolated root by Newton (its |f'| is largest) and take its
    // eigenvector from cross products; then diagonalize the matrix restricted
    // to the orthogonal complement with the exact 2x2 solver, which recovers
    // the remaining pair and its eigenvectors at machine precision.
    let isolated = if eig[1] - eig[0] >= eig[2] - eig[1] { 0 } else { 2 };
    let lam = newton_polish(&a, eig[isolated]);
    let w = evec_isolated(&a, lam);
    let u = if w.x().abs() > w.z().abs() {
        Vec3::new(-w.y(), w.x(), S::zero()).normalized()
    } else {
        Vec3::new(S::zero(), -w.z(), w.y()).normalized()
    };
    let v = w.cross(&u);
    let au = a * u;
    let av = a * v;
    let ([plo, phi_], [e0, e1]) = sym_eigen_2x2(u.dot(&au), u.dot(&av), v.dot(&av));
    let vlo = u.scale(e0[0]) + v.scale(e0[1]);
    let vhi = u.scale(e1[0]) + v.scale(e1[1]);

    let mut pairs = [(lam, w), (plo, vlo), (phi_, vhi)];
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let [(e0, v0), (e1, v1), (e2, _)] = pairs;
    // Enforce exact orthonormality (right-handed) of the returned basis.
    let v2 = v0.cross(&v1);

    (
        [e0 * scale, e1 * scale, e2 * scale],
        Mat3::from_columns(v0, v1, v2),
    )
}

fn newton_polish<S: Real>(a: &Mat3<S>, mut lam: S) -> S {
    // Characteristic polynomial f(λ) = -λ³ + c2 λ² - c1 λ + c0.
    let c2 = a.trace();
    let m = &a.0;
    let c1 = (m[0][0] * m[1][1] - m[0][1] * m[1][0])
        + (m[0][0] * m[2][2] - m[0][2] * m[2][0])
        + (m[1][1] * m[2][2] - m[1][2] * m[2][1]);
    let c0 = a.det();
    for _ in 0..2 {
        let f = -lam * lam * lam + c2 * lam * lam - c1 * lam + c0;
        let df = -S::of(3.0) * lam * lam + S::of(2.0) * c2 * lam - c1;
        if df.abs() > S::of(1e-8) {
            lam = lam - f / df;
        }
    }
    lam
}

fn evec_isolated<S: Real>(a: &Mat3<S>, lam: S) -> Vec3<S> {
    let r = *a - Mat3::diag([lam; 3]);
    let c01 = r.row(0).cross(&r.row(1));
    let c02 = r.row(0).cross(&r.row(2));
    let c12 = r.row(1).cross(&r.row(2));
    let (n01, n02, n12) = (c01.dot(&c01), c02.dot(&c02), c12.dot(&c12));
    let best = if n01 >= n02 && n01 >= n12 {
        c01
    } else if n02 >= n12 {
        c02
    } else {
        c12
    };
    if best.dot(&best) < S::of(1e-28) {
        // Fully degenerate; any direction works.
        return Vec3::unit(0);
    }
    best.normalized()
}

/// Eigendecomposition of a symmetric 2x2 matrix `[[a, b], [b, c]]`.
/// Returns eigenvalues ascending with unit eigenvectors.
pub fn sym_eigen_2x2<S: Real>(a: S, b: S, c: S) -> ([S; 2], [[S; 2]; 2]) {
    let half = S::of(0.5);
    let tr = a + c;
    let diff = a - c;
    let disc = (diff * diff + S::of(4.0) * b * b).sqrt();
    let l0 = (tr - disc) * half;
    let l1 = (tr + disc) * half;

    let v0 = if b.abs() > S::of(1e-300) {
        let v = [l0 - c, b];
        let w = [b, l0 - a];
        if v[0] * v[0] + v[1] * v[1] >= w[0] * w[0] + w[1] * w[1] {
            v
        } else {
            w
        }
    } else if a <= c {
        [S::one(), S::zero()]
    } else {
        [S::zero(), S::one()]
    };
    let n = (v0[0] * v0[0] + v0[1] * v0[1]).sqrt();
    let v0 = [v0[0] / n, v0[1] / n];
    let v1 = [-v0[1], v0[0]];
    ([l0, l1], [v0, v1])
}
