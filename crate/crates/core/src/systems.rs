//! The two-vortex vector field, its reversing involutions, and the planar-map
//! interface shared by the vortex Poincaré map and the Hénon oracle.

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Mat3};
use crate::poincare::SectionPoint;
use crate::scalar::{wrap_angle, wrap_delta, Scalar};

/// Shear-flow vorticity used throughout the scenario.
pub const DEFAULT_A: f64 = 0.1;
/// Sum of vortex intensities used throughout the scenario.
pub const DEFAULT_KAPPA: f64 = 4.65;
/// The `κ/R²` term is singular at the origin; states below this radius are rejected.
pub const DEFAULT_R_MIN: f64 = 1e-3;

/// Parameters `(A, κ, ε)` of the perturbed two-vortex flow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VortexParams<T> {
    /// Vorticity of the external shear flow.
    pub a: T,
    /// Sum of the vortex intensities; must be positive.
    pub kappa: T,
    /// Wave amplitude; must be non-negative.
    pub eps: T,
    /// Singularity guard on `R`.
    pub r_min: T,
}

impl<T: Scalar> VortexParams<T> {
    pub fn new(a: T, kappa: T, eps: T) -> Result<Self> {
        let p = Self {
            a,
            kappa,
            eps,
            r_min: T::lit(DEFAULT_R_MIN),
        };
        p.validate()?;
        Ok(p)
    }

    /// `A = 0.1`, `κ = 4.65` with the given wave amplitude.
    pub fn with_eps(eps: T) -> Result<Self> {
        Self::new(T::lit(DEFAULT_A), T::lit(DEFAULT_KAPPA), eps)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.kappa > T::zero()) {
            bad.push(format!("kappa must be > 0 (got {})", self.kappa));
        }
        if !(self.eps >= T::zero()) {
            bad.push(format!("eps must be >= 0 (got {})", self.eps));
        }
        if !self.a.is_finite() {
            bad.push(format!("A must be finite (got {})", self.a));
        }
        if !(self.r_min > T::zero()) {
            bad.push(format!("r_min must be > 0 (got {})", self.r_min));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(bad.join("; ")))
        }
    }

    pub fn at_eps(&self, eps: T) -> Self {
        Self { eps, ..*self }
    }
}

/// A point `(R, S, φ)` of the three-dimensional flow. `phi` is an unwrapped lift.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowState<T> {
    pub r: T,
    pub s: T,
    pub phi: T,
}

impl<T: Scalar> FlowState<T> {
    pub fn new(r: T, s: T, phi: T) -> Self {
        Self { r, s, phi }
    }

    pub fn to_array(self) -> [T; 3] {
        [self.r, self.s, self.phi]
    }

    pub fn from_array(x: [T; 3]) -> Self {
        Self::new(x[0], x[1], x[2])
    }

    /// `S` and `φ` reduced into `[0, 2π)`.
    pub fn reduced(self) -> Self {
        Self::new(self.r, wrap_angle(self.s), wrap_angle(self.phi))
    }

    fn check(&self, p: &VortexParams<T>) -> Result<()> {
        if !(self.r > p.r_min) {
            return Err(Error::SingularityGuard {
                r: self.r.to_f64_lossy(),
                r_min: p.r_min.to_f64_lossy(),
            });
        }
        Ok(())
    }
}

/// Right-hand side `(Ṙ, Ṡ, φ̇)` of the flow.
pub fn eval_field<T: Scalar>(x: &FlowState<T>, p: &VortexParams<T>) -> Result<[T; 3]> {
    x.check(p)?;
    Ok(field_unchecked(x.to_array(), p))
}

#[inline]
pub(crate) fn field_unchecked<T: Scalar>(x: [T; 3], p: &VortexParams<T>) -> [T; 3] {
    let [r, s, phi] = x;
    let (a, kappa, eps) = (p.a, p.kappa, p.eps);
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let (sin_phi, cos_phi) = phi.sin_cos();
    let (sin_s, cos_s) = s.sin_cos();
    let r_sin_phi = r * sin_phi;
    let r_dot = half * a * r * (two * phi).sin() - eps * sin_phi * sin_s * r_sin_phi.sin();
    let s_dot = -T::one() + eps * cos_s * r_sin_phi.cos();
    let phi_dot = kappa / (r * r) + a * cos_phi * cos_phi
        - eps / r * cos_phi * sin_s * r_sin_phi.sin();
    [r_dot, s_dot, phi_dot]
}

/// Closed-form Jacobian; entry `(i, j)` is `∂fᵢ/∂xⱼ` with coordinates ordered `(R, S, φ)`.
pub fn eval_field_jacobian<T: Scalar>(x: &FlowState<T>, p: &VortexParams<T>) -> Result<Mat3<T>> {
    x.check(p)?;
    Ok(jacobian_unchecked(x.to_array(), p))
}

#[inline]
pub(crate) fn jacobian_unchecked<T: Scalar>(x: [T; 3], p: &VortexParams<T>) -> Mat3<T> {
    let [r, s, phi] = x;
    let (a, kappa, eps) = (p.a, p.kappa, p.eps);
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let (sin_phi, cos_phi) = phi.sin_cos();
    let (sin_s, cos_s) = s.sin_cos();
    let u = r * sin_phi;
    let (sin_u, cos_u) = u.sin_cos();
    let (sin_2phi, cos_2phi) = (two * phi).sin_cos();

    let dr_dr = half * a * sin_2phi - eps * sin_phi * sin_phi * sin_s * cos_u;
    let dr_ds = -eps * sin_phi * cos_s * sin_u;
    let dr_dphi = a * r * cos_2phi
        - eps * (cos_phi * sin_s * sin_u + sin_phi * sin_s * cos_u * r * cos_phi);

    let ds_dr = -eps * cos_s * sin_u * sin_phi;
    let ds_ds = -eps * sin_s * cos_u;
    let ds_dphi = -eps * cos_s * sin_u * r * cos_phi;

    let dp_dr = -two * kappa / (r * r * r) + eps / (r * r) * cos_phi * sin_s * sin_u
        - eps / r * cos_phi * sin_s * cos_u * sin_phi;
    let dp_ds = -eps / r * cos_phi * cos_s * sin_u;
    let dp_dphi = -a * sin_2phi + eps / r * sin_phi * sin_s * sin_u
        - eps * cos_phi * cos_phi * sin_s * cos_u;

    [
        [dr_dr, dr_ds, dr_dphi],
        [ds_dr, ds_ds, ds_dphi],
        [dp_dr, dp_ds, dp_dphi],
    ]
}

/// The first integral `2κ ln R + A R² cos²φ` of the unperturbed (`ε = 0`) flow.
pub fn unperturbed_integral<T: Scalar>(x: &FlowState<T>, p: &VortexParams<T>) -> T {
    let c = x.phi.cos();
    T::lit(2.0) * p.kappa * x.r.ln() + p.a * x.r * x.r * c * c
}

/// Reversing involutions of the flow (`H1`, `H2`, each paired with `t ↦ -t`)
/// and of the Poincaré map (`h1`, `h2`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Involution {
    /// `S ↦ -S`, `φ ↦ -φ`.
    FlowH1,
    /// `S ↦ 2π - S`, `φ ↦ 2π - φ`.
    FlowH2,
    /// `S ↦ -S`.
    MapH1,
    /// `S ↦ 2π - S`.
    MapH2,
}

/// Something an [`Involution`] can act on.
pub trait Reflect<T>: Sized {
    fn reflect(self, inv: Involution) -> Self;
}

impl Involution {
    pub fn apply<T, X: Reflect<T>>(self, x: X) -> X {
        x.reflect(self)
    }

    /// Diagonal of the (constant) linearisation.
    pub fn linear_part(self) -> [f64; 3] {
        match self {
            Self::FlowH1 | Self::FlowH2 => [1.0, -1.0, -1.0],
            Self::MapH1 | Self::MapH2 => [1.0, -1.0, 1.0],
        }
    }
}

#[inline]
fn mirror<T: Scalar>(s: T) -> T {
    // keeps S = 0 fixed instead of sending it to 2π
    if s == T::zero() {
        s
    } else {
        wrap_angle(T::two_pi() - s)
    }
}

impl<T: Scalar> Reflect<T> for FlowState<T> {
    /// `S` is reduced mod 2π; the `φ` lift is negated (or mirrored about π) without
    /// reduction so the turn count stays observable.
    fn reflect(self, inv: Involution) -> Self {
        match inv {
            Involution::FlowH1 => Self::new(self.r, mirror(wrap_angle(self.s)), -self.phi),
            Involution::FlowH2 => {
                Self::new(self.r, mirror(wrap_angle(self.s)), T::two_pi() - self.phi)
            }
            Involution::MapH1 | Involution::MapH2 => {
                Self::new(self.r, mirror(wrap_angle(self.s)), self.phi)
            }
        }
    }
}

impl<T: Scalar> Reflect<T> for SectionPoint<T> {
    fn reflect(self, _inv: Involution) -> Self {
        // every involution restricts to S ↦ -S (mod 2π) on the section
        SectionPoint::new(self.r, mirror(wrap_angle(self.s)))
    }
}

/// A planar diffeomorphism with the operations the fixed-point, continuation and
/// manifold machinery needs.
pub trait PlanarMap<T: Scalar>: Sync {
    fn step(&self, x: [T; 2]) -> Result<[T; 2]>;

    fn inverse_step(&self, x: [T; 2]) -> Result<[T; 2]>;

    fn jacobian(&self, x: [T; 2]) -> Result<Mat2<T>>;

    fn step_with_jacobian(&self, x: [T; 2]) -> Result<([T; 2], Mat2<T>)> {
        Ok((self.step(x)?, self.jacobian(x)?))
    }

    /// Reversing involution, if the map has one.
    fn involution(&self, _x: [T; 2]) -> Option<[T; 2]> {
        None
    }

    /// Which coordinates are 2π-periodic angles.
    fn periodic(&self) -> [bool; 2] {
        [false, false]
    }

    /// `b - a`, with periodic coordinates taken as the shortest signed arc.
    fn displacement(&self, a: [T; 2], b: [T; 2]) -> [T; 2] {
        let per = self.periodic();
        let mut d = [b[0] - a[0], b[1] - a[1]];
        for i in 0..2 {
            if per[i] {
                d[i] = wrap_delta(d[i]);
            }
        }
        d
    }

    fn distance(&self, a: [T; 2], b: [T; 2]) -> T {
        let d = self.displacement(a, b);
        d[0].hypot(d[1])
    }

    /// Reduces periodic coordinates into `[0, 2π)`.
    fn normalize(&self, x: [T; 2]) -> [T; 2] {
        let per = self.periodic();
        let mut y = x;
        for i in 0..2 {
            if per[i] {
                y[i] = wrap_angle(y[i]);
            }
        }
        y
    }

    /// Distance to the fixed set of the involution, i.e. `|x - h(x)| / 2`.
    fn distance_to_fix(&self, x: [T; 2]) -> Option<T> {
        self.involution(x)
            .map(|hx| self.distance(x, hx) * T::lit(0.5))
    }
}

impl<T: Scalar, M: PlanarMap<T> + ?Sized> PlanarMap<T> for &M {
    fn step(&self, x: [T; 2]) -> Result<[T; 2]> {
        (**self).step(x)
    }
    fn inverse_step(&self, x: [T; 2]) -> Result<[T; 2]> {
        (**self).inverse_step(x)
    }
    fn jacobian(&self, x: [T; 2]) -> Result<Mat2<T>> {
        (**self).jacobian(x)
    }
    fn step_with_jacobian(&self, x: [T; 2]) -> Result<([T; 2], Mat2<T>)> {
        (**self).step_with_jacobian(x)
    }
    fn involution(&self, x: [T; 2]) -> Option<[T; 2]> {
        (**self).involution(x)
    }
    fn periodic(&self) -> [bool; 2] {
        (**self).periodic()
    }
}

/// Parameters of the Hénon map `(x, y) ↦ (y, M - b x - y²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HenonParams<T> {
    pub m: T,
    pub b: T,
}

impl<T: Scalar> HenonParams<T> {
    pub fn new(m: T, b: T) -> Result<Self> {
        if !(b.abs() < T::one()) || b == T::zero() {
            return Err(Error::InvalidParameter(format!(
                "Henon b must satisfy 0 < |b| < 1 (got {b})"
            )));
        }
        Ok(Self { m, b })
    }

    /// Closed-form fixed points `x = y = (-(1+b) ± √((1+b)² + 4M)) / 2`, `+` root first.
    pub fn fixed_points(&self) -> Option<[[T; 2]; 2]> {
        let one_b = T::one() + self.b;
        let disc = one_b * one_b + T::lit(4.0) * self.m;
        if disc < T::zero() {
            return None;
        }
        let sq = disc.sqrt();
        let half = T::lit(0.5);
        let xp = (-one_b + sq) * half;
        let xm = (-one_b - sq) * half;
        Some([[xp, xp], [xm, xm]])
    }
}

pub fn henon_step<T: Scalar>(pt: [T; 2], p: &HenonParams<T>) -> [T; 2] {
    let [x, y] = pt;
    [y, p.m - p.b * x - y * y]
}

pub fn henon_inverse<T: Scalar>(pt: [T; 2], p: &HenonParams<T>) -> [T; 2] {
    let [xb, yb] = pt;
    [(p.m - yb - xb * xb) / p.b, xb]
}

pub fn henon_jacobian<T: Scalar>(pt: [T; 2], p: &HenonParams<T>) -> Mat2<T> {
    Mat2::new(T::zero(), T::one(), -p.b, T::lit(-2.0) * pt[1])
}

/// The Hénon map as a [`PlanarMap`]. It carries no involution.
#[derive(Clone, Copy, Debug)]
pub struct HenonMap<T> {
    pub params: HenonParams<T>,
}

impl<T: Scalar> HenonMap<T> {
    pub fn new(m: T, b: T) -> Result<Self> {
        Ok(Self {
            params: HenonParams::new(m, b)?,
        })
    }
}

impl<T: Scalar> PlanarMap<T> for HenonMap<T> {
    fn step(&self, x: [T; 2]) -> Result<[T; 2]> {
        let y = henon_step(x, &self.params);
        if y[0].is_finite() && y[1].is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFinite { t: 0.0 })
        }
    }

    fn inverse_step(&self, x: [T; 2]) -> Result<[T; 2]> {
        let y = henon_inverse(x, &self.params);
        if y[0].is_finite() && y[1].is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFinite { t: 0.0 })
        }
    }

    fn jacobian(&self, x: [T; 2]) -> Result<Mat2<T>> {
        Ok(henon_jacobian(x, &self.params))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn params(eps: f64) -> VortexParams<f64> {
        VortexParams::with_eps(eps).unwrap()
    }

    #[test]
    fn field_on_section() {
        let f = eval_field(&FlowState::new(1.0, 0.0, 0.0), &params(0.1)).unwrap();
        assert_eq!(f[0], 0.0);
        assert!((f[1] + 0.9).abs() < 1e-15);
        assert!((f[2] - 4.75).abs() < 1e-15);
    }

    #[test]
    fn field_at_quarter_turn() {
        let f = eval_field(&FlowState::new(2.0, FRAC_PI_2, FRAC_PI_2), &params(0.1)).unwrap();
        assert!((f[0] + 0.1 * 2.0f64.sin()).abs() < 1e-15);
        assert!((f[1] + 1.0).abs() < 1e-15);
        assert!((f[2] - 4.65 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn unperturbed_field_on_section() {
        let p = params(0.0);
        for &(r, s) in &[(0.5, 0.3), (1.7, 4.0), (3.3, 6.0)] {
            let f = eval_field(&FlowState::new(r, s, 0.0), &p).unwrap();
            assert_eq!(f[0], 0.0);
            assert_eq!(f[1], -1.0);
            assert!((f[2] - (4.65 / (r * r) + 0.1)).abs() < 1e-14);
        }
    }

    #[test]
    fn singularity_guard() {
        let p = params(0.1);
        assert!(matches!(
            eval_field(&FlowState::new(1e-4, 0.0, 0.0), &p),
            Err(Error::SingularityGuard { .. })
        ));
        assert!(eval_field_jacobian(&FlowState::new(0.0, 0.0, 0.0), &p).is_err());
    }

    #[test]
    fn invalid_params() {
        assert!(VortexParams::new(0.1, -1.0, 0.1).is_err());
        assert!(VortexParams::new(0.1, 4.65, -0.1).is_err());
        assert!(HenonParams::new(1.0, 1.2).is_err());
    }

    #[test]
    fn jacobian_unperturbed_entries() {
        let p = params(0.0);
        let j = eval_field_jacobian(&FlowState::new(1.3, 2.0, 0.7), &p).unwrap();
        assert_eq!(j[1], [0.0, 0.0, 0.0]);
        let j = eval_field_jacobian(&FlowState::new(1.0, 0.0, 0.0), &p).unwrap();
        assert!((j[2][0] + 9.3).abs() < 1e-14);
    }

    #[test]
    fn involution_examples() {
        let x = SectionPoint::new(2.0, PI / 3.0);
        let y = Involution::MapH2.apply(x);
        assert_eq!(y.r, 2.0);
        assert!((y.s - 5.0 * PI / 3.0).abs() < 1e-15);

        let fix = Involution::MapH1.apply(SectionPoint::new(1.5, 0.0));
        assert_eq!(fix, SectionPoint::new(1.5, 0.0));

        let z = Involution::FlowH1.apply(FlowState::new(1.0, 0.5, 1.2)).reduced();
        assert_eq!(z.r, 1.0);
        assert!((z.s - (TAU - 0.5)).abs() < 1e-15);
        assert!((z.phi - (TAU - 1.2)).abs() < 1e-15);
    }

    #[test]
    fn henon_examples() {
        let p = HenonParams::new(1.0f64, 0.3).unwrap();
        assert_eq!(henon_step([0.0, 0.0], &p), [0.0, 1.0]);
        let [o2, _] = p.fixed_points().unwrap();
        assert!((o2[0] - 0.542_686_044_187_656_3).abs() < 1e-15);
        let img = henon_step(o2, &p);
        assert!((img[0] - o2[0]).abs() < 1e-12 && (img[1] - o2[1]).abs() < 1e-12);
        assert_eq!(henon_jacobian([0.7, -2.1], &p).det(), 0.3);
        let back = henon_inverse(henon_step([0.2, -0.4], &p), &p);
        assert!((back[0] - 0.2).abs() < 1e-14 && (back[1] + 0.4).abs() < 1e-14);
    }
}
