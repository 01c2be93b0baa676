//! Adaptive Dormand–Prince 5(4) integration with dense output, and location of
//! section crossings `φ_lift = target` on the dense output.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::systems::{field_unchecked, FlowState, VortexParams};

/// Step-size control and budget for the embedded Runge–Kutta pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    /// Initial step; `None` selects one from the local field scale.
    pub h_init: Option<T>,
    pub h_max: T,
    pub max_steps: usize,
}

impl<T: Scalar> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::lit(1e-10),
            rel_tol: T::lit(1e-10),
            h_init: None,
            h_max: T::one(),
            max_steps: 100_000,
        }
    }
}

impl<T: Scalar> IntegratorConfig<T> {
    pub fn with_tol(tol: T) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: tol,
            ..Self::default()
        }
    }

    /// Same configuration with both tolerances scaled by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.abs_tol > T::zero()) {
            bad.push("abs_tol must be > 0".to_string());
        }
        if !(self.rel_tol > T::zero()) {
            bad.push("rel_tol must be > 0".to_string());
        }
        if !(self.h_max > T::zero()) {
            bad.push("h_max must be > 0".to_string());
        }
        if let Some(h) = self.h_init {
            if !(h > T::zero()) {
                bad.push("h_init must be > 0".to_string());
            }
        }
        if self.max_steps == 0 {
            bad.push("max_steps must be > 0".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(bad.join("; ")))
        }
    }
}

// Dormand–Prince tableau (autonomous form, so the nodes c_i are not needed)
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const PI_BETA: f64 = 0.04;

/// One accepted step together with its quartic continuous extension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DenseStep<T, const N: usize> {
    pub t_start: T,
    pub t_end: T,
    cont: [[T; N]; 5],
}

impl<T: Scalar, const N: usize> DenseStep<T, N> {
    pub fn start(&self) -> [T; N] {
        self.cont[0]
    }

    pub fn end(&self) -> [T; N] {
        let mut y = self.cont[0];
        for (yi, di) in y.iter_mut().zip(self.cont[1]) {
            *yi = *yi + di;
        }
        y
    }

    /// Solution at `θ ∈ [0, 1]` of the step.
    pub fn eval_theta(&self, theta: T) -> [T; N] {
        let th1 = T::one() - theta;
        let [c1, c2, c3, c4, c5] = &self.cont;
        let mut y = [T::zero(); N];
        for i in 0..N {
            y[i] = c1[i] + theta * (c2[i] + th1 * (c3[i] + theta * (c4[i] + th1 * c5[i])));
        }
        y
    }

    /// Derivative of the interpolant with respect to `θ`.
    pub fn deriv_theta(&self, theta: T) -> [T; N] {
        let th1 = T::one() - theta;
        let two = T::lit(2.0);
        let [_, c2, c3, c4, c5] = &self.cont;
        let mut d = [T::zero(); N];
        for i in 0..N {
            let q = c3[i] + theta * (c4[i] + th1 * c5[i]);
            let dq = c4[i] + (T::one() - two * theta) * c5[i];
            let p = c2[i] + th1 * q;
            let dp = -q + th1 * dq;
            d[i] = p + theta * dp;
        }
        d
    }

    pub fn eval(&self, t: T) -> [T; N] {
        let span = self.t_end - self.t_start;
        let theta = if span == T::zero() {
            T::zero()
        } else {
            (t - self.t_start) / span
        };
        self.eval_theta(theta)
    }

    fn contains(&self, t: T) -> bool {
        let (lo, hi) = if self.t_start <= self.t_end {
            (self.t_start, self.t_end)
        } else {
            (self.t_end, self.t_start)
        };
        t >= lo && t <= hi
    }

    /// Re-labels the step's time axis, e.g. from integration time `τ` to `t0 - τ`.
    fn relabel(mut self, t_start: T, t_end: T) -> Self {
        self.t_start = t_start;
        self.t_end = t_end;
        self
    }
}

#[inline]
fn axpy<T: Scalar, const N: usize>(y: &[T; N], h: T, terms: &[(f64, &[T; N])]) -> [T; N] {
    let mut out = *y;
    for &(c, k) in terms {
        let hc = h * T::lit(c);
        for i in 0..N {
            out[i] = out[i] + hc * k[i];
        }
    }
    out
}

#[inline]
fn all_finite<T: Scalar, const N: usize>(y: &[T; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

/// Forward-in-time Dormand–Prince stepper for an autonomous system `y' = f(y)`.
pub(crate) struct Stepper<T, const N: usize, F> {
    f: F,
    cfg: IntegratorConfig<T>,
    t: T,
    y: [T; N],
    k1: [T; N],
    h: T,
    facold: T,
    steps: usize,
}

impl<T, const N: usize, F> Stepper<T, N, F>
where
    T: Scalar,
    F: Fn(&[T; N]) -> Result<[T; N]>,
{
    pub(crate) fn new(f: F, t0: T, y0: [T; N], cfg: IntegratorConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let k1 = f(&y0)?;
        let mut s = Self {
            f,
            cfg,
            t: t0,
            y: y0,
            k1,
            h: T::zero(),
            facold: T::lit(1e-4),
            steps: 0,
        };
        s.h = match cfg.h_init {
            Some(h) => h.min(cfg.h_max),
            None => s.initial_step()?,
        };
        Ok(s)
    }

    fn scale(&self, a: &[T; N], b: &[T; N], i: usize) -> T {
        self.cfg.abs_tol + self.cfg.rel_tol * a[i].abs().max(b[i].abs())
    }

    fn rms(&self, v: &[T; N], sc_from: &[T; N]) -> T {
        let mut acc = T::zero();
        for i in 0..N {
            let q = v[i] / self.scale(sc_from, sc_from, i);
            acc = acc + q * q;
        }
        (acc / T::lit(N as f64)).sqrt()
    }

    fn initial_step(&self) -> Result<T> {
        let d0 = self.rms(&self.y, &self.y);
        let d1 = self.rms(&self.k1, &self.y);
        let small = T::lit(1e-5);
        let mut h0 = if d0 < small || d1 < small {
            T::lit(1e-6)
        } else {
            T::lit(0.01) * d0 / d1
        };
        h0 = h0.min(self.cfg.h_max);
        let y1 = axpy(&self.y, h0, &[(1.0, &self.k1)]);
        let f1 = (self.f)(&y1)?;
        let mut diff = [T::zero(); N];
        for i in 0..N {
            diff[i] = f1[i] - self.k1[i];
        }
        let d2 = self.rms(&diff, &self.y) / h0;
        let dm = d1.max(d2);
        let h1 = if dm <= T::lit(1e-15) {
            (h0 * T::lit(1e-3)).max(T::lit(1e-6))
        } else {
            (T::lit(0.01) / dm).powf(T::lit(0.2))
        };
        Ok((T::lit(100.0) * h0).min(h1).min(self.cfg.h_max))
    }

    pub(crate) fn time(&self) -> T {
        self.t
    }

    /// Reduces component `i` modulo `2π` (the field must be `2π`-periodic in it).
    pub(crate) fn reduce_angle(&mut self, i: usize) {
        let turns = (self.y[i] / T::two_pi()).floor();
        if turns != T::zero() {
            self.y[i] = self.y[i] - turns * T::two_pi();
        }
    }

    /// Advances by one accepted step, never stepping past `t_end` when given.
    pub(crate) fn step(&mut self, t_end: Option<T>) -> Result<DenseStep<T, N>> {
        let expo1 = T::lit(0.2 - PI_BETA * 0.75);
        let beta = T::lit(PI_BETA);
        let safe = T::lit(SAFETY);
        let fac_lo = T::lit(1.0 / FAC_MIN);
        let fac_hi = T::lit(1.0 / FAC_MAX);
        let mut last_rejected = false;
        loop {
            if self.steps >= self.cfg.max_steps {
                return Err(Error::StepBudgetExceeded {
                    max_steps: self.cfg.max_steps,
                });
            }
            self.steps += 1;
            let mut h = self.h.min(self.cfg.h_max);
            if let Some(te) = t_end {
                let rem = te - self.t;
                if h >= rem {
                    h = rem;
                }
            }
            if !(h > T::epsilon() * self.t.abs().max(T::one()) * T::lit(10.0)) {
                if let Some(te) = t_end {
                    if te - self.t <= T::epsilon() * self.t.abs().max(T::one()) * T::lit(10.0) {
                        h = te - self.t;
                    } else {
                        return Err(Error::StepSizeUnderflow {
                            t: self.t.to_f64_lossy(),
                        });
                    }
                } else {
                    return Err(Error::StepSizeUnderflow {
                        t: self.t.to_f64_lossy(),
                    });
                }
            }

            let y = &self.y;
            let k1 = &self.k1;
            let k2 = (self.f)(&axpy(y, h, &[(A21, k1)]))?;
            let k3 = (self.f)(&axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
            let k4 = (self.f)(&axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
            let k5 = (self.f)(&axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
            let ysti = axpy(
                y,
                h,
                &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            );
            let k6 = (self.f)(&ysti)?;
            let y1 = axpy(
                y,
                h,
                &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            if !all_finite(&y1) {
                return Err(Error::NonFinite {
                    t: self.t.to_f64_lossy(),
                });
            }
            let k7 = (self.f)(&y1)?;
            let zero = [T::zero(); N];
            let errv = axpy(
                &zero,
                h,
                &[(E1, k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
            );
            let mut acc = T::zero();
            for i in 0..N {
                let q = errv[i] / self.scale(y, &y1, i);
                acc = acc + q * q;
            }
            let err = (acc / T::lit(N as f64)).sqrt();

            let fac11 = err.powf(expo1);
            if err <= T::one() {
                let mut fac = fac11 / self.facold.powf(beta);
                fac = fac_hi.max(fac_lo.min(fac / safe));
                let mut h_new = h / fac;
                self.facold = err.max(T::lit(1e-4));
                if last_rejected {
                    h_new = h_new.min(h);
                }
                // dense-output coefficients
                let mut cont = [[T::zero(); N]; 5];
                for i in 0..N {
                    let ydiff = y1[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    cont[0][i] = y[i];
                    cont[1][i] = ydiff;
                    cont[2][i] = bspl;
                    cont[3][i] = ydiff - h * k7[i] - bspl;
                    cont[4][i] = h
                        * (T::lit(D1) * k1[i]
                            + T::lit(D3) * k3[i]
                            + T::lit(D4) * k4[i]
                            + T::lit(D5) * k5[i]
                            + T::lit(D6) * k6[i]
                            + T::lit(D7) * k7[i]);
                }
                let t_start = self.t;
                self.t = match t_end {
                    Some(te) if h == te - t_start => te,
                    _ => t_start + h,
                };
                self.y = y1;
                self.k1 = k7;
                self.h = h_new;
                return Ok(DenseStep {
                    t_start,
                    t_end: self.t,
                    cont,
                });
            }
            last_rejected = true;
            let denom = fac_lo.min(fac11 / safe);
            self.h = h / denom;
        }
    }
}

/// Flow trajectory: node states plus a dense-output step between consecutive nodes.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub nodes: Vec<(T, FlowState<T>)>,
    pub steps: Vec<DenseStep<T, 3>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn start(&self) -> (T, FlowState<T>) {
        self.nodes[0]
    }

    pub fn end(&self) -> (T, FlowState<T>) {
        *self.nodes.last().expect("trajectory has at least one node")
    }

    /// Dense-output state at time `t`, if `t` lies within the trajectory.
    pub fn eval(&self, t: T) -> Option<FlowState<T>> {
        if self.steps.is_empty() {
            let (t0, x0) = self.nodes[0];
            return (t == t0).then_some(x0);
        }
        let forward = self.steps[0].t_end >= self.steps[0].t_start;
        // steps are ordered along the direction of integration
        let idx = self.steps.partition_point(|s| {
            if forward {
                s.t_end < t
            } else {
                s.t_end > t
            }
        });
        self.steps
            .get(idx)
            .filter(|s| s.contains(t))
            .map(|s| FlowState::from_array(s.eval(t)))
    }
}

/// Integrates the flow over `t_span`; `t1 < t0` integrates backward in time by
/// stepping the negated field forward.
pub fn integrate<T: Scalar>(
    x0: FlowState<T>,
    t_span: (T, T),
    p: &VortexParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>> {
    crate::systems::eval_field(&x0, p)?;
    let (t0, t1) = t_span;
    let mut traj = Trajectory {
        nodes: vec![(t0, x0)],
        steps: Vec::new(),
    };
    if t0 == t1 {
        return Ok(traj);
    }
    let sign = if t1 > t0 { T::one() } else { -T::one() };
    let duration = (t1 - t0).abs();
    let params = *p;
    let field = move |y: &[T; 3]| -> Result<[T; 3]> {
        guard_r(y, &params)?;
        let f = field_unchecked(*y, &params);
        Ok([sign * f[0], sign * f[1], sign * f[2]])
    };
    let mut stepper = Stepper::new(field, T::zero(), x0.to_array(), *cfg)?;
    while stepper.time() < duration {
        let st = stepper.step(Some(duration))?;
        let ts = t0 + sign * st.t_start;
        let te = if st.t_end == duration {
            t1
        } else {
            t0 + sign * st.t_end
        };
        let st = st.relabel(ts, te);
        traj.nodes.push((te, FlowState::from_array(st.end())));
        traj.steps.push(st);
    }
    Ok(traj)
}

#[inline]
pub(crate) fn guard_r<T: Scalar, const N: usize>(y: &[T; N], p: &VortexParams<T>) -> Result<()> {
    if !(y[0] > p.r_min) {
        return Err(Error::SingularityGuard {
            r: y[0].to_f64_lossy(),
            r_min: p.r_min.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Tolerance on `|φ - target|` at a located crossing.
pub(crate) fn crossing_tol<T: Scalar>(target: T) -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(16.0) * target.abs().max(T::one()))
}

/// Finds `θ ∈ [0, 1]` with `y_idx(θ) = target` on one dense step, given a sign change
/// across the step. Newton on the interpolant, bisection whenever Newton leaves the bracket.
pub(crate) fn refine_on_step<T: Scalar, const N: usize>(
    step: &DenseStep<T, N>,
    idx: usize,
    target: T,
) -> T {
    let g = |th: T| step.eval_theta(th)[idx] - target;
    let (mut lo, mut hi) = (T::zero(), T::one());
    let (g_lo, g_hi) = (g(lo), g(hi));
    if g_lo == T::zero() {
        return lo;
    }
    if g_hi == T::zero() {
        return hi;
    }
    let lo_positive = g_lo > T::zero();
    let tol = crossing_tol(target);
    let mut th = g_lo / (g_lo - g_hi);
    for _ in 0..200 {
        let gv = g(th);
        if gv.abs() < tol {
            return th;
        }
        if (gv > T::zero()) == lo_positive {
            lo = th;
        } else {
            hi = th;
        }
        let dg = step.deriv_theta(th)[idx];
        let newton = th - gv / dg;
        th = if dg != T::zero() && newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) * T::lit(0.5)
        };
        if hi - lo <= T::epsilon() {
            break;
        }
    }
    th
}

/// Locates the first time the trajectory's `φ` lift passes through `target_phi_lift`.
pub fn find_section_crossing<T: Scalar>(
    traj: &Trajectory<T>,
    target_phi_lift: T,
    p: &VortexParams<T>,
) -> Result<(T, FlowState<T>)> {
    for st in &traj.steps {
        let a = st.start()[2] - target_phi_lift;
        let b = st.end()[2] - target_phi_lift;
        if a == T::zero() || (a < T::zero()) != (b < T::zero()) || b == T::zero() {
            let th = refine_on_step(st, 2, target_phi_lift);
            let t = st.t_start + th * (st.t_end - st.t_start);
            let x = FlowState::from_array(st.eval_theta(th));
            let f = crate::systems::eval_field(&x, p)?;
            if !(f[2] > T::zero()) {
                return Err(Error::WrongDirection {
                    phi_dot: f[2].to_f64_lossy(),
                });
            }
            return Ok((t, x));
        }
    }
    Err(Error::NoCrossingInTrajectory {
        target: target_phi_lift.to_f64_lossy(),
    })
}

/// Integrates `y' = f(y)` forward in its own time until component `idx` reaches `target`
/// (from either side), returning the elapsed time and the state there.
///
/// Component `angle`, if given, is reduced modulo `2π` after every step so
/// that its rounding error does not grow with the number of turns.
pub(crate) fn advance_until<T, const N: usize, F>(
    f: F,
    y0: [T; N],
    idx: usize,
    target: T,
    angle: Option<usize>,
    cfg: &IntegratorConfig<T>,
) -> Result<(T, [T; N])>
where
    T: Scalar,
    F: Fn(&[T; N]) -> Result<[T; N]>,
{
    let increasing = target > y0[idx];
    let mut stepper = Stepper::new(&f, T::zero(), y0, *cfg)?;
    loop {
        let st = stepper.step(None)?;
        let v = st.end()[idx];
        let reached = if increasing { v >= target } else { v <= target };
        if reached {
            let (dt, y) = land_on_level(&f, st.start(), idx, target)?;
            return Ok((st.t_start + dt, y));
        }
        if let Some(a) = angle {
            stepper.reduce_angle(a);
        }
    }
}

/// Runs from `y0` to `y_idx = target` with `y_idx` as the independent variable
/// (`dy/dy_idx = f / f_idx`), in four Dormand–Prince steps. Returns the elapsed
/// time and the end state.
///
/// Lands on the level set at the integrator's own order instead of through the
/// lower-order dense output.
fn land_on_level<T, const N: usize, F>(f: &F, y0: [T; N], idx: usize, target: T) -> Result<(T, [T; N])>
where
    T: Scalar,
    F: Fn(&[T; N]) -> Result<[T; N]>,
{
    const SUB: usize = 4;
    let g = |y: &[T; N]| -> Result<([T; N], T)> {
        let v = f(y)?;
        if v[idx] == T::zero() {
            return Err(Error::WrongDirection { phi_dot: 0.0 });
        }
        let inv = T::one() / v[idx];
        let mut out = v;
        for o in out.iter_mut() {
            *o = *o * inv;
        }
        Ok((out, inv))
    };
    let h = (target - y0[idx]) / T::lit(SUB as f64);
    let (mut y, mut t) = (y0, T::zero());
    for _ in 0..SUB {
        let (k1, w1) = g(&y)?;
        let (k2, _) = g(&axpy(&y, h, &[(A21, &k1)]))?;
        let (k3, w3) = g(&axpy(&y, h, &[(A31, &k1), (A32, &k2)]))?;
        let (k4, w4) = g(&axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
        let (k5, w5) = g(&axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
        let (k6, w6) = g(&axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
        y = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        t = t + h * (T::lit(A71) * w1 + T::lit(A73) * w3 + T::lit(A74) * w4 + T::lit(A75) * w5 + T::lit(A76) * w6);
        if !all_finite(&y) {
            return Err(Error::NonFinite { t: t.to_f64_lossy() });
        }
    }
    y[idx] = target;
    Ok((t, y))
}
