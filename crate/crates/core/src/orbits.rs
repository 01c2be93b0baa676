//! Periodic points of a planar map: damped Newton, multiplier classification,
//! symmetry against the involution, and natural continuation in a parameter with
//! detection of `+1` / `-1` multiplier crossings.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::IntegratorConfig;
use crate::linalg::Mat2;
use crate::poincare::{SectionPoint, VortexMap};
use crate::scalar::Scalar;
use crate::systems::{HenonMap, PlanarMap, VortexParams};

/// Tolerances and iteration limits for Newton, symmetry and classification.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitTolerances<T> {
    /// Residual, or Newton correction, below which the point is accepted.
    pub newton_tol: T,
    pub sym_tol: T,
    pub class_tol: T,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// `|det(DPⁿ - I)|` below this is reported as [`Error::SingularJacobian`].
    pub singular_det: T,
}

impl<T: Scalar> Default for OrbitTolerances<T> {
    fn default() -> Self {
        Self {
            newton_tol: T::lit(1e-10),
            sym_tol: T::lit(1e-6),
            class_tol: T::lit(1e-4),
            max_iter: 50,
            max_halvings: 8,
            singular_det: T::lit(1e-12),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OrbitKind {
    Elliptic,
    Saddle,
    Sink,
    Source,
    /// Some multiplier sits inside the `class_tol` band around the unit circle.
    Unresolved,
}

impl OrbitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OrbitKind::Elliptic => "elliptic",
            OrbitKind::Saddle => "saddle",
            OrbitKind::Sink => "sink",
            OrbitKind::Source => "source",
            OrbitKind::Unresolved => "unresolved",
        }
    }
}

/// A converged period-`n` point with its linearisation.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointRecord<T> {
    pub point: [T; 2],
    pub period: usize,
    /// Parameter value the point was computed at (ε for the vortex map).
    pub param: T,
    /// Eigenvalues of `DPⁿ`, increasing modulus.
    pub multipliers: [Complex<T>; 2],
    pub det: T,
    pub trace: T,
    pub jacobian: Mat2<T>,
    pub kind: OrbitKind,
    pub symmetric: bool,
    pub residual: T,
    pub label: String,
    /// Failed health checks (e.g. a symmetric orbit with `det` away from 1).
    pub diagnostics: Vec<String>,
}

impl<T: Scalar> FixedPointRecord<T> {
    pub fn section_point(&self) -> SectionPoint<T> {
        SectionPoint::from_array(self.point)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `p(1) = (1 - λ₁)(1 - λ₂)`.
    pub fn char_at_one(&self) -> T {
        T::one() - self.trace + self.det
    }

    /// `p(-1) = (1 + λ₁)(1 + λ₂)`.
    pub fn char_at_minus_one(&self) -> T {
        T::one() + self.trace + self.det
    }

    /// Real multipliers `(λ_s, λ_u)` of a saddle.
    pub fn saddle_multipliers(&self) -> Option<(T, T)> {
        let [a, b] = self.multipliers;
        if a.im != T::zero() || b.im != T::zero() {
            return None;
        }
        (a.re.abs() < T::one() && b.re.abs() > T::one()).then_some((a.re, b.re))
    }
}

/// Classifies a multiplier pair, leaving anything within `tol` of the unit circle
/// (other than an elliptic pair) unresolved.
pub fn classify_multipliers<T: Scalar>(mult: &[Complex<T>; 2], tol: T) -> OrbitKind {
    let one = T::one();
    let m0 = mult[0].norm();
    let m1 = mult[1].norm();
    if mult[0].im != T::zero() {
        return if (m0 - one).abs() < tol {
            OrbitKind::Elliptic
        } else if m0 < one {
            OrbitKind::Sink
        } else {
            OrbitKind::Source
        };
    }
    let inside = |m: T| m < one - tol;
    let outside = |m: T| m > one + tol;
    match (inside(m0), outside(m0), inside(m1), outside(m1)) {
        (true, _, true, _) => OrbitKind::Sink,
        (_, true, _, true) => OrbitKind::Source,
        (true, _, _, true) => OrbitKind::Saddle,
        _ => OrbitKind::Unresolved,
    }
}

/// Orbit `x, P(x), …, Pⁿ(x)` with the chained Jacobian `DPⁿ(x)`.
pub fn orbit_with_jacobian<T: Scalar, M: PlanarMap<T> + ?Sized>(
    map: &M,
    x: [T; 2],
    n: usize,
) -> Result<(Vec<[T; 2]>, Mat2<T>)> {
    let mut pts = Vec::with_capacity(n + 1);
    pts.push(x);
    let mut jac = Mat2::identity();
    let mut y = x;
    for _ in 0..n {
        let (z, j) = map.step_with_jacobian(y)?;
        jac = j * jac;
        pts.push(z);
        y = z;
    }
    Ok((pts, jac))
}

pub fn iterate<T: Scalar, M: PlanarMap<T> + ?Sized>(map: &M, x: [T; 2], n: usize) -> Result<[T; 2]> {
    let mut y = x;
    for _ in 0..n {
        y = map.step(y)?;
    }
    Ok(y)
}

fn norm2<T: Scalar>(v: [T; 2]) -> T {
    v[0].hypot(v[1])
}

/// Damped Newton for `Pⁿ(x) = x`, returning the classified record.
pub fn find_periodic_point<T: Scalar, M: PlanarMap<T> + ?Sized>(
    map: &M,
    guess: [T; 2],
    n: usize,
    param: T,
    tol: &OrbitTolerances<T>,
) -> Result<FixedPointRecord<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("period must be at least 1".into()));
    }
    let mut x = guess;
    let (mut pts, mut jac) = orbit_with_jacobian(map, x, n)?;
    let mut g = map.displacement(x, pts[n]);
    let mut res = norm2(g);
    for it in 0..tol.max_iter {
        if res < tol.newton_tol {
            return Ok(build_record(map, x, &pts, jac, n, param, res, tol));
        }
        let dg = jac.sub_identity();
        let det = dg.det();
        if !(det.abs() >= tol.singular_det) {
            return Err(Error::SingularJacobian {
                det: det.abs().to_f64_lossy(),
            });
        }
        let d = dg
            .solve([-g[0], -g[1]])
            .ok_or(Error::SingularJacobian {
                det: det.abs().to_f64_lossy(),
            })?;
        // step-size convergence
        if norm2(d) < tol.newton_tol {
            return Ok(build_record(map, x, &pts, jac, n, param, res, tol));
        }
        let mut lambda = T::one();
        let mut accepted = false;
        for _ in 0..=tol.max_halvings {
            let trial = [x[0] + lambda * d[0], x[1] + lambda * d[1]];
            if let Ok((tp, tj)) = orbit_with_jacobian(map, trial, n) {
                let tg = map.displacement(trial, tp[n]);
                let tr = norm2(tg);
                if tr < res {
                    x = trial;
                    pts = tp;
                    jac = tj;
                    g = tg;
                    res = tr;
                    accepted = true;
                    break;
                }
            }
            lambda = lambda * T::lit(0.5);
        }
        if !accepted {
            return Err(Error::NewtonDiverged {
                iterations: it + 1,
                residual: res.to_f64_lossy(),
            });
        }
    }
    if res < tol.newton_tol {
        return Ok(build_record(map, x, &pts, jac, n, param, res, tol));
    }
    Err(Error::NewtonDiverged {
        iterations: tol.max_iter,
        residual: res.to_f64_lossy(),
    })
}

#[allow(clippy::too_many_arguments)]
fn build_record<T: Scalar, M: PlanarMap<T> + ?Sized>(
    map: &M,
    x: [T; 2],
    pts: &[[T; 2]],
    jac: Mat2<T>,
    n: usize,
    param: T,
    residual: T,
    tol: &OrbitTolerances<T>,
) -> FixedPointRecord<T> {
    let multipliers = jac.eigenvalues();
    let det = jac.det();
    let kind = classify_multipliers(&multipliers, tol.class_tol);
    let orbit = &pts[..n];
    let symmetric = is_symmetric_orbit(map, orbit, tol.sym_tol);
    let mut diagnostics = Vec::new();
    if symmetric && (det - T::one()).abs() >= tol.class_tol {
        diagnostics.push(format!(
            "symmetric orbit with det = {det:e}, expected 1 within {:e}",
            tol.class_tol
        ));
    }
    FixedPointRecord {
        point: map.normalize(x),
        period: n,
        param,
        multipliers,
        det,
        trace: jac.trace(),
        jacobian: jac,
        kind,
        symmetric,
        residual,
        label: String::new(),
        diagnostics,
    }
}

/// An orbit is symmetric when it touches `Fix(h)` and `h` maps it onto itself.
pub fn is_symmetric_orbit<T: Scalar, M: PlanarMap<T> + ?Sized>(map: &M, orbit: &[[T; 2]], sym_tol: T) -> bool {
    let touches = orbit
        .iter()
        .filter_map(|&y| map.distance_to_fix(y))
        .any(|d| d < sym_tol);
    if !touches {
        return false;
    }
    orbit.iter().all(|&y| {
        let hy = map.involution(y).expect("distance_to_fix implies an involution");
        orbit.iter().any(|&z| map.distance(hy, z) < sym_tol)
    })
}

/// A family of planar maps indexed by one scalar parameter.
pub trait MapFamily<T: Scalar>: Sync {
    type Map: PlanarMap<T> + Send;
    fn at(&self, param: T) -> Result<Self::Map>;
}

/// The vortex return map as a family in ε.
#[derive(Clone, Copy, Debug)]
pub struct VortexFamily<T> {
    pub base: VortexParams<T>,
    pub cfg: IntegratorConfig<T>,
}

impl<T: Scalar> VortexFamily<T> {
    pub fn new(base: VortexParams<T>, cfg: IntegratorConfig<T>) -> Self {
        Self { base, cfg }
    }
}

impl<T: Scalar> MapFamily<T> for VortexFamily<T> {
    type Map = VortexMap<T>;
    fn at(&self, eps: T) -> Result<VortexMap<T>> {
        let p = self.base.at_eps(eps);
        p.validate()?;
        Ok(VortexMap::new(p, self.cfg))
    }
}

/// The Hénon map as a family in `M` at fixed `b`.
#[derive(Clone, Copy, Debug)]
pub struct HenonFamily<T> {
    pub b: T,
}

impl<T: Scalar> MapFamily<T> for HenonFamily<T> {
    type Map = HenonMap<T>;
    fn at(&self, m: T) -> Result<HenonMap<T>> {
        HenonMap::new(m, self.b)
    }
}

/// Fixed point of the vortex return map (`n = 1`) or a period-`n` point.
pub fn find_fixed_point<T: Scalar>(
    guess: SectionPoint<T>,
    n: usize,
    p: &VortexParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<FixedPointRecord<T>> {
    let map = VortexMap::new(*p, *cfg);
    find_periodic_point(&map, guess.to_array(), n, p.eps, &OrbitTolerances::default())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BifurcationKind {
    Pitchfork,
    PeriodDoubling,
    MultiplierOne,
    Unresolved,
}

impl BifurcationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BifurcationKind::Pitchfork => "pitchfork",
            BifurcationKind::PeriodDoubling => "period_doubling",
            BifurcationKind::MultiplierOne => "multiplier_one",
            BifurcationKind::Unresolved => "unresolved",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BifurcationEvent<T> {
    pub eps_star: T,
    pub kind: BifurcationKind,
    /// Last branch point before the crossing.
    pub parent: FixedPointRecord<T>,
    /// Branch point just past the crossing.
    pub after: FixedPointRecord<T>,
    /// Asymmetric offspring found after a pitchfork or a `+1` crossing.
    pub offspring: Vec<FixedPointRecord<T>>,
}

/// Settings for natural continuation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuationSettings<T> {
    pub tol: OrbitTolerances<T>,
    /// Step halvings before a branch is declared lost.
    pub max_step_cuts: usize,
    /// Events are refined until the bracket is narrower than `step * refine_factor`.
    pub refine_factor: T,
    pub offspring_restarts: usize,
    pub offspring_radius: T,
    /// Reject a continued point that moved further than this from the prediction.
    pub max_jump: T,
}

impl<T: Scalar> Default for ContinuationSettings<T> {
    fn default() -> Self {
        Self {
            tol: OrbitTolerances::default(),
            max_step_cuts: 4,
            refine_factor: T::lit(1e-3),
            offspring_restarts: 16,
            offspring_radius: T::lit(1e-3),
            max_jump: T::lit(0.25),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Continuation<T> {
    pub branch: Vec<FixedPointRecord<T>>,
    pub events: Vec<BifurcationEvent<T>>,
    /// Set when the branch was truncated before the end of the range.
    pub lost: Option<Error>,
}

fn solve_at<T: Scalar, F: MapFamily<T>>(
    family: &F,
    param: T,
    guesses: &[[T; 2]],
    near: [T; 2],
    n: usize,
    set: &ContinuationSettings<T>,
) -> Result<FixedPointRecord<T>> {
    let map = family.at(param)?;
    let mut last = Error::BranchLost {
        param: param.to_f64_lossy(),
        reason: "no guess".into(),
    };
    for &g in guesses {
        match find_periodic_point(&map, g, n, param, &set.tol) {
            Ok(r) if !has_minimal_period(&map, r.point, n) => {
                last = Error::BranchLost {
                    param: param.to_f64_lossy(),
                    reason: format!("Newton fell onto an orbit of period below {n}"),
                }
            }
            Ok(r) if map.distance(r.point, near) <= set.max_jump => return Ok(r),
            Ok(r) => {
                last = Error::BranchLost {
                    param: param.to_f64_lossy(),
                    reason: format!(
                        "Newton jumped to a different orbit at ({}, {})",
                        r.point[0], r.point[1]
                    ),
                }
            }
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// True when no proper divisor `d` of `n` has `Pᵈ(x) = x`.
pub fn has_minimal_period<T: Scalar, M: PlanarMap<T> + ?Sized>(map: &M, x: [T; 2], n: usize) -> bool {
    let mut y = x;
    for d in 1..n {
        match map.step(y) {
            Ok(z) => y = z,
            Err(_) => return false,
        }
        if n % d == 0 && map.distance(x, y) < T::lit(1e-6) {
            return false;
        }
    }
    true
}

fn crossing_sign<T: Scalar>(r: &FixedPointRecord<T>, minus: bool) -> bool {
    let v = if minus {
        r.char_at_minus_one()
    } else {
        r.char_at_one()
    };
    v > T::zero()
}

/// Natural continuation of `fp` from `range.0` to `range.1` in steps of `step`.
pub fn continue_branch<T: Scalar, F: MapFamily<T>>(
    family: &F,
    fp: &FixedPointRecord<T>,
    range: (T, T),
    step: T,
    set: &ContinuationSettings<T>,
) -> Result<Continuation<T>> {
    let (a, b) = range;
    if !(step > T::zero()) {
        return Err(Error::InvalidParameter(format!("continuation step must be > 0 (got {step})")));
    }
    let dir = if b >= a { T::one() } else { -T::one() };
    let n = fp.period;
    let start_map = family.at(a)?;
    let first = find_periodic_point(&start_map, fp.point, n, a, &set.tol)
        .map(|r| r.with_label(fp.label.clone()))?;
    let mut branch = vec![first];
    let mut events = Vec::new();
    let mut lost = None;
    let mut param = a;
    let end_dist = |p: T| (b - p) * dir;
    while end_dist(param) > T::zero() {
        let cur = branch.last().expect("branch is non-empty").clone();
        let mut h = step;
        let mut next = None;
        for _ in 0..=set.max_step_cuts {
            let target = if end_dist(param) <= h { b } else { param + dir * h };
            let mut guesses = Vec::with_capacity(2);
            if branch.len() >= 2 {
                let prev = &branch[branch.len() - 2];
                let ratio = (target - cur.param) / (cur.param - prev.param);
                let d = start_map.displacement(prev.point, cur.point);
                guesses.push([cur.point[0] + ratio * d[0], cur.point[1] + ratio * d[1]]);
            }
            guesses.push(cur.point);
            match solve_at(family, target, &guesses, cur.point, n, set) {
                Ok(r) => {
                    next = Some(r.with_label(cur.label.clone()));
                    break;
                }
                Err(e) => {
                    lost = Some(e);
                    h = h * T::lit(0.5);
                }
            }
        }
        let Some(rec) = next else {
            let reason = lost.take().map(|e| e.to_string()).unwrap_or_default();
            lost = Some(Error::BranchLost {
                param: param.to_f64_lossy(),
                reason,
            });
            break;
        };
        lost = None;
        for minus in [false, true] {
            if crossing_sign(&cur, minus) != crossing_sign(&rec, minus) {
                events.push(refine_event(family, &cur, &rec, minus, step, set));
            }
        }
        param = rec.param;
        branch.push(rec);
    }
    Ok(Continuation {
        branch,
        events,
        lost,
    })
}

fn refine_event<T: Scalar, F: MapFamily<T>>(
    family: &F,
    lo: &FixedPointRecord<T>,
    hi: &FixedPointRecord<T>,
    minus: bool,
    step: T,
    set: &ContinuationSettings<T>,
) -> BifurcationEvent<T> {
    let n = lo.period;
    let width = step * set.refine_factor;
    let s_lo = crossing_sign(lo, minus);
    let mut a = lo.clone();
    let mut b = hi.clone();
    let mut resolved = true;
    while (b.param - a.param).abs() > width {
        let mid = (a.param + b.param) * T::lit(0.5);
        let guess = [
            (a.point[0] + b.point[0]) * T::lit(0.5),
            a.point[1] + family_displacement(family, mid, a.point, b.point)[1] * T::lit(0.5),
        ];
        match solve_at(family, mid, &[guess, a.point, b.point], a.point, n, set) {
            Ok(r) => {
                if crossing_sign(&r, minus) == s_lo {
                    a = r;
                } else {
                    b = r;
                }
            }
            Err(_) => {
                resolved = false;
                break;
            }
        }
    }
    let eps_star = (a.param + b.param) * T::lit(0.5);
    let kind = match (resolved, minus, lo.symmetric) {
        (false, _, _) => BifurcationKind::Unresolved,
        (true, true, _) => BifurcationKind::PeriodDoubling,
        (true, false, true) => BifurcationKind::Pitchfork,
        (true, false, false) => BifurcationKind::MultiplierOne,
    };
    let offspring = match kind {
        BifurcationKind::Pitchfork | BifurcationKind::MultiplierOne => find_offspring(family, hi, set),
        _ => Vec::new(),
    };
    BifurcationEvent {
        eps_star,
        kind,
        parent: lo.clone(),
        after: hi.clone(),
        offspring,
    }
}

fn family_displacement<T: Scalar, F: MapFamily<T>>(family: &F, param: T, a: [T; 2], b: [T; 2]) -> [T; 2] {
    match family.at(param) {
        Ok(m) => m.displacement(a, b),
        Err(_) => [b[0] - a[0], b[1] - a[1]],
    }
}

/// Newton restarts on circles of radius `r`, `10r` and `100r` around `parent`.
/// Returns the distinct non-symmetric solutions from the smallest radius that
/// produced any.
pub fn find_offspring<T: Scalar, F: MapFamily<T>>(
    family: &F,
    parent: &FixedPointRecord<T>,
    set: &ContinuationSettings<T>,
) -> Vec<FixedPointRecord<T>> {
    let Ok(map) = family.at(parent.param) else {
        return Vec::new();
    };
    let k = set.offspring_restarts.max(1);
    let sep = set.tol.sym_tol * T::lit(10.0);
    for level in 0..3 {
        let rad = set.offspring_radius * T::lit(10f64.powi(level));
        let found: Vec<FixedPointRecord<T>> = (0..k)
            .into_par_iter()
            .filter_map(|i| {
                let ang = T::two_pi() * T::lit(i as f64) / T::lit(k as f64);
                let g = [
                    parent.point[0] + rad * ang.cos(),
                    parent.point[1] + rad * ang.sin(),
                ];
                find_periodic_point(&map, g, parent.period, parent.param, &set.tol).ok()
            })
            .collect();
        let mut out: Vec<FixedPointRecord<T>> = Vec::new();
        for r in found {
            if r.symmetric || map.distance(r.point, parent.point) < sep {
                continue;
            }
            if out.iter().all(|o| map.distance(o.point, r.point) >= sep) {
                out.push(r);
            }
        }
        if !out.is_empty() {
            out.sort_by(|a, b| a.point[1].partial_cmp(&b.point[1]).unwrap_or(std::cmp::Ordering::Equal));
            return out;
        }
    }
    Vec::new()
}

/// Period-doubling parameters found along a cascade.
#[derive(Clone, Debug, PartialEq)]
pub struct Cascade<T> {
    pub eps: Vec<T>,
    /// Periods of the orbit that lost stability at each entry of `eps`.
    pub periods: Vec<usize>,
    /// `+1` crossings of a non-symmetric orbit that spawned a pair of same-period
    /// orbits; the cascade continues from one of them. For the vortex map these
    /// are doublings of the half-turn return (`φ → φ + π` leaves the field
    /// unchanged, so `P` is the square of that return).
    pub splits: Vec<T>,
    /// `(ε_k - ε_{k-1}) / (ε_{k+1} - ε_k)` for consecutive triples.
    pub ratios: Vec<T>,
    /// Why the search stopped.
    pub stop_reason: String,
}

/// Two offspring with equal determinants (images of each other under a
/// symmetry of the map).
fn is_split<T: Scalar>(off: &[FixedPointRecord<T>]) -> bool {
    match off {
        [a, b, ..] => (a.det - b.det).abs() <= T::lit(1e-4) * a.det.abs().max(b.det.abs()),
        _ => false,
    }
}

/// Follows successive period doublings starting from the stable orbit `fp`,
/// passing through `+1` splits that produce a pair of offspring.
pub fn detect_cascade<T: Scalar, F: MapFamily<T>>(
    family: &F,
    fp: &FixedPointRecord<T>,
    range: (T, T),
    step: T,
    period_cap: usize,
    set: &ContinuationSettings<T>,
) -> Result<Cascade<T>> {
    let mut eps = Vec::new();
    let mut periods = Vec::new();
    let mut splits = Vec::new();
    let mut current = fp.clone();
    let mut lo = range.0;
    let mut h = step;
    let stop_reason;
    loop {
        let cont = continue_branch(family, &current, (lo, range.1), h, set)?;
        let next = cont.events.iter().find(|e| {
            e.kind == BifurcationKind::PeriodDoubling
                || (e.kind == BifurcationKind::MultiplierOne && is_split(&e.offspring))
        });
        if let Some(ev) = next.filter(|e| e.kind == BifurcationKind::MultiplierOne) {
            splits.push(ev.eps_star);
            current = ev.offspring[0].clone().with_label(format!("{}'", current.label));
            lo = current.param;
            continue;
        }
        let Some(ev) = next else {
            stop_reason = match cont.lost {
                Some(e) => e.to_string(),
                None => "no further period doubling in range".into(),
            };
            break;
        };
        eps.push(ev.eps_star);
        periods.push(current.period);
        let next_period = current.period * 2;
        if next_period > period_cap {
            stop_reason = format!("period cap {period_cap} reached");
            break;
        }
        match doubled_orbit(family, ev, set) {
            Some(r) => {
                lo = r.param;
                current = r;
                h = h * T::lit(0.5);
            }
            None => {
                stop_reason = format!("no period-{next_period} orbit found past {}", ev.eps_star);
                break;
            }
        }
    }
    let ratios = eps
        .windows(3)
        .map(|w| (w[1] - w[0]) / (w[2] - w[1]))
        .collect();
    Ok(Cascade {
        eps,
        periods,
        splits,
        ratios,
        stop_reason,
    })
}

/// Locates the period-`2n` orbit born at a period doubling, just past `eps_star`.
pub fn doubled_orbit<T: Scalar, F: MapFamily<T>>(
    family: &F,
    ev: &BifurcationEvent<T>,
    set: &ContinuationSettings<T>,
) -> Option<FixedPointRecord<T>> {
    let n = ev.parent.period;
    let dir = if ev.after.param >= ev.parent.param {
        T::one()
    } else {
        -T::one()
    };
    let span = (ev.after.param - ev.eps_star)
        .abs()
        .max((ev.after.param - ev.parent.param).abs());
    for frac in [T::lit(1.0), T::lit(0.25)] {
        let param = ev.eps_star + dir * span * frac;
        let Ok(map) = family.at(param) else { continue };
        let Ok(base) = find_periodic_point(&map, ev.after.point, n, param, &set.tol) else {
            continue;
        };
        let lam = base.multipliers[1].re.min(base.multipliers[0].re);
        let v = base.jacobian.eigenvector(lam);
        for &off in &[1e-3, 3e-3, 1e-2, 3e-2, 1e-1] {
            for sign in [T::one(), -T::one()] {
                let o = T::lit(off) * sign;
                let g = [base.point[0] + o * v[0], base.point[1] + o * v[1]];
                if let Ok(r) = find_periodic_point(&map, g, 2 * n, param, &set.tol) {
                    if has_minimal_period(&map, r.point, 2 * n) {
                        return Some(r.with_label(format!("{}x2", ev.parent.label)));
                    }
                }
            }
        }
    }
    None
}

/// Continuation of a vortex-map fixed point in ε.
pub fn continue_in_parameter<T: Scalar>(
    fp: &FixedPointRecord<T>,
    eps_range: (T, T),
    step: T,
    p_base: &VortexParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Continuation<T>> {
    let family = VortexFamily::new(*p_base, *cfg);
    continue_branch(&family, fp, eps_range, step, &ContinuationSettings::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn henon(m: f64) -> HenonMap<f64> {
        HenonMap::new(m, 0.3).unwrap()
    }

    #[test]
    fn classification_bands() {
        let c = |a: f64, b: f64| [Complex::new(a, 0.0), Complex::new(b, 0.0)];
        assert_eq!(classify_multipliers(&c(0.5, 2.0), 1e-4), OrbitKind::Saddle);
        assert_eq!(classify_multipliers(&c(-0.5, 0.9), 1e-4), OrbitKind::Sink);
        assert_eq!(classify_multipliers(&c(1.5, -2.0), 1e-4), OrbitKind::Source);
        assert_eq!(classify_multipliers(&c(0.5, 1.00001), 1e-4), OrbitKind::Unresolved);
        let z = [Complex::new(0.6, 0.8), Complex::new(0.6, -0.8)];
        assert_eq!(classify_multipliers(&z, 1e-4), OrbitKind::Elliptic);
        let z = [Complex::new(0.3, 0.4), Complex::new(0.3, -0.4)];
        assert_eq!(classify_multipliers(&z, 1e-4), OrbitKind::Sink);
    }

    #[test]
    fn henon_fixed_points() {
        let m = henon(1.0);
        let exact = m.params.fixed_points().unwrap();
        let tol = OrbitTolerances::default();
        let r = find_periodic_point(&m, [0.5, 0.5], 1, 1.0, &tol).unwrap();
        assert!((r.point[0] - exact[0][0]).abs() < 1e-10);
        assert!((r.det - 0.3).abs() < 1e-14);
        assert_eq!(r.kind, OrbitKind::Sink);
        assert!(!r.symmetric);
        let r = find_periodic_point(&m, [-2.0, -2.0], 1, 1.0, &tol).unwrap();
        assert!((r.point[1] - exact[1][1]).abs() < 1e-10);
        assert_eq!(r.kind, OrbitKind::Saddle);
    }

    #[test]
    fn zero_length_range() {
        let fam = HenonFamily { b: 0.3 };
        let fp = find_periodic_point(&henon(1.0), [0.5, 0.5], 1, 1.0, &OrbitTolerances::default()).unwrap();
        let c = continue_branch(&fam, &fp, (1.0, 1.0), 0.01, &ContinuationSettings::default()).unwrap();
        assert_eq!(c.branch.len(), 1);
        assert!(c.events.is_empty());
    }

    #[test]
    fn henon_first_flip_is_closed_form() {
        let fam = HenonFamily { b: 0.3 };
        let fp = find_periodic_point(&henon(1.0), [0.5, 0.5], 1, 1.0, &OrbitTolerances::default()).unwrap();
        let c = continue_branch(&fam, &fp, (1.0, 1.4), 0.01, &ContinuationSettings::default()).unwrap();
        let pd: Vec<_> = c
            .events
            .iter()
            .filter(|e| e.kind == BifurcationKind::PeriodDoubling)
            .collect();
        assert_eq!(pd.len(), 1);
        // 1 + tr + det = 0 with tr = -2y*, det = b
        let exact = 0.75 * 1.3f64 * 1.3;
        assert!((pd[0].eps_star - exact).abs() < 1e-5);
    }
}

