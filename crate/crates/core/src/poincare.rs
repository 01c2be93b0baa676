//! Return map of the flow to the section `φ = 0 (mod 2π)`.
//!
//! One return is one full turn of the `φ` lift (`Δφ = +2π`). The inverse map
//! integrates backward one full turn; the Jacobian comes from the variational
//! equations with the usual flow-direction correction at the section.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::flow::{advance_until, guard_r, IntegratorConfig};
use crate::linalg::Mat2;
use crate::scalar::{wrap_angle, Scalar};
use crate::systems::{field_unchecked, jacobian_unchecked, Involution, PlanarMap, VortexParams};

/// A point `(R, S)` of the section.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectionPoint<T> {
    pub r: T,
    pub s: T,
}

impl<T: Scalar> SectionPoint<T> {
    pub fn new(r: T, s: T) -> Self {
        Self { r, s }
    }

    pub fn to_array(self) -> [T; 2] {
        [self.r, self.s]
    }

    pub fn from_array(x: [T; 2]) -> Self {
        Self::new(x[0], x[1])
    }

    pub fn normalized(self) -> Self {
        Self::new(self.r, wrap_angle(self.s))
    }
}

impl<T: Scalar> From<[T; 2]> for SectionPoint<T> {
    fn from(x: [T; 2]) -> Self {
        Self::from_array(x)
    }
}

/// Linearisation `DP` of the return map with its determinant and multipliers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapJacobian<T> {
    pub dp: Mat2<T>,
    pub det: T,
    /// Eigenvalues of `DP`, ordered by increasing modulus.
    pub multipliers: [Complex<T>; 2],
}

impl<T: Scalar> MapJacobian<T> {
    pub fn from_matrix(dp: Mat2<T>) -> Self {
        Self {
            dp,
            det: dp.det(),
            multipliers: dp.eigenvalues(),
        }
    }
}

fn check_direction<T: Scalar>(x: [T; 3], p: &VortexParams<T>) -> Result<()> {
    guard_r(&x, p)?;
    let f = field_unchecked(x, p);
    if !(f[2] > T::zero()) {
        return Err(Error::WrongDirection {
            phi_dot: f[2].to_f64_lossy(),
        });
    }
    Ok(())
}

/// One forward return. Returns the image and the return time `T > 0`.
pub fn poincare_map<T: Scalar>(
    x: SectionPoint<T>,
    p: &VortexParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<(SectionPoint<T>, T)> {
    let y0 = [x.r, x.s, T::zero()];
    check_direction(y0, p)?;
    let params = *p;
    let field = move |y: &[T; 3]| -> Result<[T; 3]> {
        guard_r(y, &params)?;
        Ok(field_unchecked(*y, &params))
    };
    let (t, y) = advance_until(field, y0, 2, T::two_pi(), Some(1), cfg)?;
    check_direction(y, p)?;
    Ok((SectionPoint::new(y[0], wrap_angle(y[1])), t))
}

/// One backward return (`Δφ = -2π`), computed by integrating the negated field.
pub fn inverse_poincare_map<T: Scalar>(
    x: SectionPoint<T>,
    p: &VortexParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<SectionPoint<T>> {
    inverse_poincare_map_timed(x, p, cfg).map(|(y, _)| y)
}

pub fn inverse_poincare_map_timed<T: Scalar>(
    x: SectionPoint<T>,
    p: &VortexParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<(SectionPoint<T>, T)> {
    let y0 = [x.r, x.s, T::zero()];
    check_direction(y0, p)?;
    let params = *p;
    let field = move |y: &[T; 3]| -> Result<[T; 3]> {
        guard_r(y, &params)?;
        let f = field_unchecked(*y, &params);
        Ok([-f[0], -f[1], -f[2]])
    };
    let (t, y) = advance_until(field, y0, 2, -T::two_pi(), Some(1), cfg)?;
    check_direction(y, p)?;
    Ok((SectionPoint::new(y[0], wrap_angle(y[1])), t))
}

/// Image under one return together with `DP` at `x`.
pub fn poincare_map_with_jacobian<T: Scalar>(
    x: SectionPoint<T>,
    p: &VortexParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<(SectionPoint<T>, MapJacobian<T>)> {
    let mut y0 = [T::zero(); 12];
    y0[0] = x.r;
    y0[1] = x.s;
    for i in 0..3 {
        y0[3 + 4 * i] = T::one();
    }
    check_direction([x.r, x.s, T::zero()], p)?;
    let params = *p;
    let field = move |y: &[T; 12]| -> Result<[T; 12]> {
        let state = [y[0], y[1], y[2]];
        guard_r(&state, &params)?;
        let f = field_unchecked(state, &params);
        let j = jacobian_unchecked(state, &params);
        let mut out = [T::zero(); 12];
        out[..3].copy_from_slice(&f);
        // d(monodromy)/dt = J · monodromy, monodromy stored row-major at y[3..]
        for r in 0..3 {
            for c in 0..3 {
                out[3 + 3 * r + c] =
                    j[r][0] * y[3 + c] + j[r][1] * y[6 + c] + j[r][2] * y[9 + c];
            }
        }
        Ok(out)
    };
    let (_, y) = advance_until(field, y0, 2, T::two_pi(), Some(1), cfg)?;
    let state = [y[0], y[1], y[2]];
    check_direction(state, p)?;
    let f = field_unchecked(state, p);
    let m = |r: usize, c: usize| y[3 + 3 * r + c];
    // DP = Π (I - f nᵀ / (n·f)) M₃ restricted to (R, S) columns, n = e_φ
    let mut dp = [[T::zero(); 2]; 2];
    for (r, row) in dp.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = m(r, c) - f[r] / f[2] * m(2, c);
        }
    }
    let jac = MapJacobian::from_matrix(Mat2 { m: dp });
    Ok((SectionPoint::new(y[0], wrap_angle(y[1])), jac))
}

pub fn poincare_jacobian<T: Scalar>(
    x: SectionPoint<T>,
    p: &VortexParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<MapJacobian<T>> {
    poincare_map_with_jacobian(x, p, cfg).map(|(_, j)| j)
}

/// The section involution `(R, S) ↦ (R, 2π - S mod 2π)`.
pub fn induced_involution<T: Scalar>(x: SectionPoint<T>) -> SectionPoint<T> {
    Involution::MapH2.apply(x)
}

/// The vortex return map at fixed parameters, as a [`PlanarMap`] over `[R, S]`.
#[derive(Clone, Copy, Debug)]
pub struct VortexMap<T> {
    pub params: VortexParams<T>,
    pub cfg: IntegratorConfig<T>,
}

impl<T: Scalar> VortexMap<T> {
    pub fn new(params: VortexParams<T>, cfg: IntegratorConfig<T>) -> Self {
        Self { params, cfg }
    }
}

impl<T: Scalar> PlanarMap<T> for VortexMap<T> {
    fn step(&self, x: [T; 2]) -> Result<[T; 2]> {
        poincare_map(x.into(), &self.params, &self.cfg).map(|(y, _)| y.to_array())
    }

    fn inverse_step(&self, x: [T; 2]) -> Result<[T; 2]> {
        inverse_poincare_map(x.into(), &self.params, &self.cfg).map(SectionPoint::to_array)
    }

    fn jacobian(&self, x: [T; 2]) -> Result<Mat2<T>> {
        poincare_jacobian(x.into(), &self.params, &self.cfg).map(|j| j.dp)
    }

    fn step_with_jacobian(&self, x: [T; 2]) -> Result<([T; 2], Mat2<T>)> {
        poincare_map_with_jacobian(x.into(), &self.params, &self.cfg)
            .map(|(y, j)| (y.to_array(), j.dp))
    }

    fn involution(&self, x: [T; 2]) -> Option<[T; 2]> {
        Some(induced_involution(SectionPoint::from_array(x)).to_array())
    }

    fn periodic(&self) -> [bool; 2] {
        [false, true]
    }
}
