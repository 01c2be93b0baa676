//! Fixed-size 2×2 / 3×3 helpers for Jacobians and multipliers.

use std::ops::Mul;

use num_complex::Complex;

use crate::scalar::Scalar;

pub type Mat3<T> = [[T; 3]; 3];

/// Row-major 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<T> {
    pub m: [[T; 2]; 2],
}

impl<T: Scalar> Mat2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Self { m: [[a, b], [c, d]] }
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::one())
    }

    pub fn det(&self) -> T {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> T {
        self.m[0][0] + self.m[1][1]
    }

    pub fn apply(&self, v: [T; 2]) -> [T; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == T::zero() || !det.is_finite() {
            return None;
        }
        let [[a, b], [c, d]] = self.m;
        Some(Self::new(d / det, -b / det, -c / det, a / det))
    }

    /// Solves `self * x = rhs`.
    pub fn solve(&self, rhs: [T; 2]) -> Option<[T; 2]> {
        self.inverse().map(|inv| inv.apply(rhs))
    }

    pub fn sub_identity(&self) -> Self {
        let [[a, b], [c, d]] = self.m;
        Self::new(a - T::one(), b, c, d - T::one())
    }

    /// Eigenvalues, ordered by increasing modulus (for a complex pair, the one with
    /// non-negative imaginary part first).
    pub fn eigenvalues(&self) -> [Complex<T>; 2] {
        let tr = self.trace();
        let det = self.det();
        let half = T::lit(0.5);
        let disc = tr * tr * T::lit(0.25) - det;
        if disc >= T::zero() {
            let sq = disc.sqrt();
            // numerically stable root pair
            let big = if tr >= T::zero() {
                tr * half + sq
            } else {
                tr * half - sq
            };
            let small = if big != T::zero() { det / big } else { T::zero() };
            let (l1, l2) = if small.abs() <= big.abs() {
                (small, big)
            } else {
                (big, small)
            };
            [Complex::new(l1, T::zero()), Complex::new(l2, T::zero())]
        } else {
            let im = (-disc).sqrt();
            [Complex::new(tr * half, im), Complex::new(tr * half, -im)]
        }
    }

    /// Unit eigenvector for a real eigenvalue `lambda`.
    pub fn eigenvector(&self, lambda: T) -> [T; 2] {
        let [[a, b], [c, d]] = self.m;
        // rows of (A - λI); use the better conditioned one
        let r0 = [a - lambda, b];
        let r1 = [c, d - lambda];
        let n0 = r0[0].hypot(r0[1]);
        let n1 = r1[0].hypot(r1[1]);
        let v = if n0 >= n1 {
            [-r0[1], r0[0]]
        } else {
            [-r1[1], r1[0]]
        };
        let n = v[0].hypot(v[1]);
        if n == T::zero() {
            [T::one(), T::zero()]
        } else {
            [v[0] / n, v[1] / n]
        }
    }
}

impl<T: Scalar> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let a = self.m;
        let b = o.m;
        let mut r = [[T::zero(); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self { m: r }
    }
}

pub fn mat3_mul<T: Scalar>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut r = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    r
}

pub fn mat3_identity<T: Scalar>() -> Mat3<T> {
    let mut r = [[T::zero(); 3]; 3];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = T::one();
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_real_pair() {
        let m = Mat2::new(2.0f64, 0.0, 0.0, 0.5);
        let ev = m.eigenvalues();
        assert!((ev[0].re - 0.5).abs() < 1e-15 && (ev[1].re - 2.0).abs() < 1e-15);
        let v = m.eigenvector(2.0);
        assert!((v[0].abs() - 1.0).abs() < 1e-15 && v[1].abs() < 1e-15);
    }

    #[test]
    fn eigen_complex_pair_product_is_det() {
        let m = Mat2::new(0.0f64, 1.0, -0.3, -1.0854);
        let ev = m.eigenvalues();
        assert!(ev[0].im > 0.0);
        let prod = ev[0] * ev[1];
        assert!((prod.re - m.det()).abs() < 1e-14);
    }

    #[test]
    fn inverse_roundtrip() {
        let m = Mat2::new(1.0f64, 2.0, 3.0, 4.0);
        let p = m * m.inverse().unwrap();
        assert!((p.m[0][0] - 1.0).abs() < 1e-14 && p.m[0][1].abs() < 1e-14);
        assert!(Mat2::new(1.0f64, 2.0, 2.0, 4.0).inverse().is_none());
    }
}
