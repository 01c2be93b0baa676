//! One-dimensional invariant manifolds of saddle points, polyline intersections
//! and crisis localisation in the parameter.
//!
//! Manifolds are grown by mapping a fundamental segment forward with `Fᵏ`
//! (stable side: the inverse map). New points are images of points interpolated
//! on the part of the polyline already computed, so refinement happens in
//! preimage space.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::orbits::{find_periodic_point, FixedPointRecord, MapFamily, OrbitKind, OrbitTolerances};
use crate::scalar::{wrap_delta, Scalar};
use crate::systems::PlanarMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ManifoldSide {
    Stable,
    Unstable,
}

/// Sign of the eigenvector the branch leaves the saddle along.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign<T: Scalar>(self) -> T {
        match self {
            Branch::Plus => T::one(),
            Branch::Minus => -T::one(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManifoldSettings<T> {
    pub delta0: T,
    pub delta_max: T,
    pub alpha_max: T,
    pub arclength: T,
    pub point_budget: usize,
    /// Smallest preimage parameter step before a segment is accepted unrefined.
    pub min_dt: T,
    /// Image spacing below which the angle criterion is waived (the segment is
    /// counted as unrefined).
    pub delta_min: T,
}

impl<T: Scalar> Default for ManifoldSettings<T> {
    fn default() -> Self {
        Self {
            delta0: T::lit(1e-5),
            delta_max: T::lit(5e-3),
            alpha_max: T::lit(0.3),
            arclength: T::lit(10.0),
            point_budget: 200_000,
            min_dt: T::lit(1e-9),
            delta_min: T::lit(1e-7),
        }
    }
}

impl<T: Scalar> ManifoldSettings<T> {
    pub fn with_arclength(arclength: T) -> Self {
        Self {
            arclength,
            ..Self::default()
        }
    }
}

/// A grown branch of `Wˢ` or `Wᵘ`.
///
/// `points` are stored with periodic coordinates unwrapped (continuous along
/// the curve); [`ManifoldPolyline::pieces`] cuts them at the `0/2π` seam.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldPolyline<T> {
    pub saddle: FixedPointRecord<T>,
    pub side: ManifoldSide,
    pub branch: Branch,
    pub points: Vec<[T; 2]>,
    pub arclength: Vec<T>,
    /// Iterate of the saddle's period used for growth (doubled for a negative multiplier).
    pub iterate: usize,
    /// Index where each image of the fundamental segment starts.
    pub generation_starts: Vec<usize>,
    pub periodic: [bool; 2],
    /// Point or arclength budget stopped growth before the requested arclength.
    pub truncated: bool,
    /// Map failure that ended growth early, if any.
    pub stopped_by: Option<Error>,
    /// Segments accepted at `min_dt` or below `delta_min` without meeting the
    /// refinement criteria.
    pub unrefined: usize,
    /// Growth stopped because a whole generation added no length (the branch
    /// accumulates on an attracting orbit).
    pub collapsed: bool,
}

impl<T: Scalar> ManifoldPolyline<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_arclength(&self) -> T {
        self.arclength.last().copied().unwrap_or_else(T::zero)
    }

    /// Polyline cut at the periodic seam, as segments `(a, b, source_segment)`
    /// with periodic coordinates in `[0, 2π)`.
    pub fn pieces(&self) -> Vec<([T; 2], [T; 2], usize)> {
        seam_segments(&self.points, self.periodic)
    }
}

/// Splits consecutive segments of an unwrapped polyline at multiples of 2π in
/// each periodic coordinate.
pub fn seam_segments<T: Scalar>(points: &[[T; 2]], periodic: [bool; 2]) -> Vec<([T; 2], [T; 2], usize)> {
    let tau = T::two_pi();
    let mut out = Vec::with_capacity(points.len());
    for (i, w) in points.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        // parameters along the segment where a periodic coordinate crosses a seam
        let mut cuts = vec![T::zero(), T::one()];
        for k in 0..2 {
            if !periodic[k] || a[k] == b[k] {
                continue;
            }
            let (lo, hi) = if a[k] < b[k] { (a[k], b[k]) } else { (b[k], a[k]) };
            let mut m = (lo / tau).floor() + T::one();
            while m * tau < hi {
                let t = (m * tau - a[k]) / (b[k] - a[k]);
                if t > T::zero() && t < T::one() {
                    cuts.push(t);
                }
                m = m + T::one();
            }
        }
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        for c in cuts.windows(2) {
            let (t0, t1) = (c[0], c[1]);
            if t1 - t0 <= T::zero() {
                continue;
            }
            let tm = (t0 + t1) * T::lit(0.5);
            let mut p0 = lerp(a, b, t0);
            let mut p1 = lerp(a, b, t1);
            for k in 0..2 {
                if periodic[k] {
                    // shift both ends by the period the midpoint lives in
                    let shift = (lerp(a, b, tm)[k] / tau).floor() * tau;
                    p0[k] = p0[k] - shift;
                    p1[k] = p1[k] - shift;
                }
            }
            out.push((p0, p1, i));
        }
    }
    out
}

fn lerp<T: Scalar>(a: [T; 2], b: [T; 2], t: T) -> [T; 2] {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t]
}

/// Centripetal Catmull–Rom point between `p[1]` and `p[2]` at fraction `u`.
fn centripetal<T: Scalar>(p: [[T; 2]; 4], u: T) -> [T; 2] {
    let t1 = dist(p[0], p[1]).sqrt();
    let t2 = t1 + dist(p[1], p[2]).sqrt();
    let t3 = t2 + dist(p[2], p[3]).sqrt();
    if !(t1 > T::zero() && t2 > t1 && t3 > t2) {
        return lerp(p[1], p[2], u);
    }
    let t = t1 + u * (t2 - t1);
    let mix = |a: [T; 2], b: [T; 2], lo: T, hi: T| lerp(a, b, (t - lo) / (hi - lo));
    let a1 = mix(p[0], p[1], T::zero(), t1);
    let a2 = mix(p[1], p[2], t1, t2);
    let a3 = mix(p[2], p[3], t2, t3);
    let b1 = mix(a1, a2, T::zero(), t2);
    let b2 = mix(a2, a3, t1, t3);
    mix(b1, b2, t1, t2)
}

fn dist<T: Scalar>(a: [T; 2], b: [T; 2]) -> T {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

fn turning_angle<T: Scalar>(a: [T; 2], b: [T; 2], c: [T; 2]) -> T {
    let u = [b[0] - a[0], b[1] - a[1]];
    let v = [c[0] - b[0], c[1] - b[1]];
    let cross = u[0] * v[1] - u[1] * v[0];
    let dot = u[0] * v[0] + u[1] * v[1];
    cross.atan2(dot).abs()
}

/// `x` shifted in its periodic coordinates to lie closest to `near`.
fn unwrap_near<T: Scalar>(x: [T; 2], near: [T; 2], periodic: [bool; 2]) -> [T; 2] {
    let mut y = x;
    for k in 0..2 {
        if periodic[k] {
            y[k] = near[k] + wrap_delta(x[k] - near[k]);
        }
    }
    y
}

struct Iterated<'a, M: ?Sized> {
    map: &'a M,
    count: usize,
    inverse: bool,
}

impl<M: ?Sized> Iterated<'_, M> {
    fn apply<T: Scalar>(&self, x: [T; 2]) -> Result<[T; 2]>
    where
        M: PlanarMap<T>,
    {
        let mut y = x;
        for _ in 0..self.count {
            y = if self.inverse {
                self.map.inverse_step(y)?
            } else {
                self.map.step(y)?
            };
        }
        Ok(y)
    }
}

/// Grows one branch of the stable or unstable manifold of `saddle`.
pub fn grow_manifold<T: Scalar, M: PlanarMap<T> + ?Sized>(
    map: &M,
    saddle: &FixedPointRecord<T>,
    side: ManifoldSide,
    branch: Branch,
    set: &ManifoldSettings<T>,
) -> Result<ManifoldPolyline<T>> {
    let (ls, lu) = match (saddle.kind, saddle.saddle_multipliers()) {
        (OrbitKind::Saddle, Some(m)) => m,
        _ => {
            return Err(Error::NotASaddle(format!(
                "kind {} with multipliers {:?}",
                saddle.kind.as_str(),
                saddle.multipliers
            )))
        }
    };
    let lam = match side {
        ManifoldSide::Unstable => lu,
        ManifoldSide::Stable => ls,
    };
    let v = saddle.jacobian.eigenvector(lam);
    let squared = lam < T::zero();
    let count = saddle.period * if squared { 2 } else { 1 };
    let growth = match side {
        ManifoldSide::Unstable => lam.abs(),
        ManifoldSide::Stable => T::one() / lam.abs(),
    };
    let growth = if squared { growth * growth } else { growth };
    let f = Iterated {
        map,
        count,
        inverse: side == ManifoldSide::Stable,
    };
    let periodic = map.periodic();
    let sgn = branch.sign::<T>();
    let base = saddle.point;
    let at = |d: T| [base[0] + sgn * d * v[0], base[1] + sgn * d * v[1]];

    // fundamental segment [δ₀, g·δ₀] along the eigenvector
    let d0 = set.delta0;
    let d1 = d0 * growth;
    let nseg = ((d1 - d0) / (set.delta_max * T::lit(0.1))).ceil().to_usize().unwrap_or(1).clamp(8, 2000);
    let mut points: Vec<[T; 2]> = (0..=nseg)
        .map(|i| at(d0 + (d1 - d0) * T::lit(i as f64) / T::lit(nseg as f64)))
        .collect();
    let mut generation_starts = vec![0, nseg];
    let mut arclength = vec![T::zero()];
    for w in points.windows(2) {
        let s = *arclength.last().expect("non-empty") + dist(w[0], w[1]);
        arclength.push(s);
    }

    let mut truncated = false;
    let mut stopped_by = None;
    let mut unrefined = 0usize;
    let mut collapsed = false;
    // preimage parameter: fractional index into `points`
    let mut t = T::zero();
    let mut dt = T::lit(0.5);
    let mut next_generation = nseg;
    let interp = |pts: &[[T; 2]], t: T| -> [T; 2] {
        let i = t.floor().to_usize().unwrap_or(0).min(pts.len() - 2);
        let frac = t - T::lit(i as f64);
        let (p1, p2) = (pts[i], pts[i + 1]);
        let p0 = if i > 0 { pts[i - 1] } else { lerp(p2, p1, T::lit(2.0)) };
        let p3 = if i + 2 < pts.len() { pts[i + 2] } else { lerp(p1, p2, T::lit(2.0)) };
        centripetal([p0, p1, p2, p3], frac)
    };
    while *arclength.last().expect("non-empty") < set.arclength {
        if points.len() >= set.point_budget {
            truncated = true;
            break;
        }
        let last = *points.last().expect("non-empty");
        let prev = points[points.len() - 2];
        let max_t = T::lit((points.len() - 1) as f64);
        let mut accepted = None;
        loop {
            let tn = (t + dt).min(max_t);
            let q = interp(&points, tn);
            let img = match f.apply(q) {
                Ok(y) => unwrap_near(y, last, periodic),
                Err(e) => {
                    if dt > set.min_dt {
                        dt = dt * T::lit(0.5);
                        continue;
                    }
                    stopped_by = Some(e);
                    break;
                }
            };
            let d = dist(last, img);
            let ok = d <= set.delta_max && turning_angle(prev, last, img) <= set.alpha_max;
            if ok || dt <= set.min_dt || d <= set.delta_min {
                if !ok {
                    unrefined += 1;
                }
                accepted = Some((tn, img, d));
                break;
            }
            dt = dt * T::lit(0.5);
        }
        let Some((tn, img, d)) = accepted else { break };
        if tn >= T::lit(next_generation as f64) {
            let k = generation_starts.len();
            let added = arclength[arclength.len() - 1] - arclength[generation_starts[k - 1]];
            if k > 2 && added <= set.delta0 * T::lit(1e-9) {
                collapsed = true;
                break;
            }
            next_generation = points.len();
            generation_starts.push(next_generation);
        }
        t = tn;
        points.push(img);
        arclength.push(*arclength.last().expect("non-empty") + d);
        // never skip a vertex of the preimage curve
        if d < set.delta_max * T::lit(0.25) {
            dt = (dt * T::lit(2.0)).min(T::one());
        }
    }
    Ok(ManifoldPolyline {
        saddle: saddle.clone(),
        side,
        branch,
        points,
        arclength,
        iterate: count,
        generation_starts,
        periodic,
        truncated,
        stopped_by,
        unrefined,
        collapsed,
    })
}

/// A transverse (or touching) crossing of two polylines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing<T> {
    pub point: [T; 2],
    pub seg_a: usize,
    pub seg_b: usize,
    /// Angle between the two segments, in `[0, π/2]`.
    pub angle: T,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct IntersectionSet<T> {
    pub crossings: Vec<Crossing<T>>,
    /// Collinear overlapping segment pairs, flagged rather than enumerated.
    pub overlaps: Vec<(usize, usize)>,
}

impl<T> IntersectionSet<T> {
    pub fn is_empty(&self) -> bool {
        self.crossings.is_empty() && self.overlaps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.crossings.len()
    }
}

enum SegHit<T> {
    Point(T, T, [T; 2]),
    Overlap,
}

fn segment_hit<T: Scalar>(p: [T; 2], p2: [T; 2], q: [T; 2], q2: [T; 2]) -> Option<SegHit<T>> {
    let r = [p2[0] - p[0], p2[1] - p[1]];
    let s = [q2[0] - q[0], q2[1] - q[1]];
    let qp = [q[0] - p[0], q[1] - p[1]];
    let rxs = r[0] * s[1] - r[1] * s[0];
    let qpxr = qp[0] * r[1] - qp[1] * r[0];
    let scale = (r[0].hypot(r[1]) * s[0].hypot(s[1])).max(T::min_positive_value());
    let tiny = T::lit(1e-12);
    if rxs.abs() <= tiny * scale {
        if qpxr.abs() > tiny * scale.max(qp[0].hypot(qp[1]) * r[0].hypot(r[1])) {
            return None;
        }
        let rr = r[0] * r[0] + r[1] * r[1];
        if rr == T::zero() {
            return None;
        }
        let t0 = (qp[0] * r[0] + qp[1] * r[1]) / rr;
        let t1 = t0 + (s[0] * r[0] + s[1] * r[1]) / rr;
        let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
        return (hi >= T::zero() && lo <= T::one()).then_some(SegHit::Overlap);
    }
    let t = (qp[0] * s[1] - qp[1] * s[0]) / rxs;
    let u = qpxr / rxs;
    let inside = |x: T| x >= T::zero() && x <= T::one();
    if inside(t) && inside(u) {
        Some(SegHit::Point(t, u, [p[0] + t * r[0], p[1] + t * r[1]]))
    } else {
        None
    }
}

type Seg<T> = ([T; 2], [T; 2], usize);

fn bbox<T: Scalar>(s: &Seg<T>) -> [T; 4] {
    [
        s.0[0].min(s.1[0]),
        s.0[0].max(s.1[0]),
        s.0[1].min(s.1[1]),
        s.0[1].max(s.1[1]),
    ]
}

/// All crossings between two segment lists, using a uniform bucket grid over
/// segment bounding boxes for pruning.
pub fn intersect_segments<T: Scalar>(a: &[Seg<T>], b: &[Seg<T>]) -> IntersectionSet<T> {
    let mut set = IntersectionSet {
        crossings: Vec::new(),
        overlaps: Vec::new(),
    };
    if a.is_empty() || b.is_empty() {
        return set;
    }
    let boxes_b: Vec<[T; 4]> = b.iter().map(bbox).collect();
    let mut ext = [T::infinity(), T::neg_infinity(), T::infinity(), T::neg_infinity()];
    for bb in &boxes_b {
        ext[0] = ext[0].min(bb[0]);
        ext[1] = ext[1].max(bb[1]);
        ext[2] = ext[2].min(bb[2]);
        ext[3] = ext[3].max(bb[3]);
    }
    let cells = ((b.len() as f64).sqrt().ceil() as usize).clamp(1, 1024);
    let span = (ext[1] - ext[0]).max(ext[3] - ext[2]).max(T::min_positive_value());
    let floor = span / T::lit(cells as f64);
    let wx = ((ext[1] - ext[0]) / T::lit(cells as f64)).max(floor);
    let wy = ((ext[3] - ext[2]) / T::lit(cells as f64)).max(floor);
    let cell_of = |x: T, lo: T, w: T| -> usize {
        let c = ((x - lo) / w).floor();
        if c < T::zero() {
            0
        } else {
            c.to_usize().unwrap_or(cells - 1).min(cells - 1)
        }
    };
    let mut grid: Vec<Vec<usize>> = vec![Vec::new(); cells * cells];
    for (j, bb) in boxes_b.iter().enumerate() {
        for cx in cell_of(bb[0], ext[0], wx)..=cell_of(bb[1], ext[0], wx) {
            for cy in cell_of(bb[2], ext[2], wy)..=cell_of(bb[3], ext[2], wy) {
                grid[cx * cells + cy].push(j);
            }
        }
    }
    let mut seen: Vec<usize> = Vec::new();
    for sa in a {
        let ba = bbox(sa);
        if ba[1] < ext[0] || ba[0] > ext[1] || ba[3] < ext[2] || ba[2] > ext[3] {
            continue;
        }
        seen.clear();
        for cx in cell_of(ba[0], ext[0], wx)..=cell_of(ba[1], ext[0], wx) {
            for cy in cell_of(ba[2], ext[2], wy)..=cell_of(ba[3], ext[2], wy) {
                seen.extend_from_slice(&grid[cx * cells + cy]);
            }
        }
        seen.sort_unstable();
        seen.dedup();
        for &j in &seen {
            let bb = boxes_b[j];
            if ba[1] < bb[0] || bb[1] < ba[0] || ba[3] < bb[2] || bb[3] < ba[2] {
                continue;
            }
            let sb = &b[j];
            match segment_hit(sa.0, sa.1, sb.0, sb.1) {
                Some(SegHit::Point(_, _, pt)) => {
                    let duplicate = set.crossings.iter().rev().take(8).any(|c| {
                        dist(c.point, pt) <= T::lit(1e-12)
                            && c.seg_a.abs_diff(sa.2) <= 1
                            && c.seg_b.abs_diff(sb.2) <= 1
                    });
                    if !duplicate {
                        let u = [sa.1[0] - sa.0[0], sa.1[1] - sa.0[1]];
                        let v = [sb.1[0] - sb.0[0], sb.1[1] - sb.0[1]];
                        let ang = (u[0] * v[1] - u[1] * v[0])
                            .abs()
                            .atan2((u[0] * v[0] + u[1] * v[1]).abs());
                        set.crossings.push(Crossing {
                            point: pt,
                            seg_a: sa.2,
                            seg_b: sb.2,
                            angle: ang,
                        });
                    }
                }
                Some(SegHit::Overlap) => {
                    if !set.overlaps.contains(&(sa.2, sb.2)) {
                        set.overlaps.push((sa.2, sb.2));
                    }
                }
                None => {}
            }
        }
    }
    set
}

/// Crossings between two manifold polylines, cut at the periodic seam.
pub fn find_intersections<T: Scalar>(a: &ManifoldPolyline<T>, b: &ManifoldPolyline<T>) -> IntersectionSet<T> {
    intersect_segments(&a.pieces(), &b.pieces())
}

/// Crossings between two plain (non-periodic) polylines.
pub fn polyline_intersections<T: Scalar>(a: &[[T; 2]], b: &[[T; 2]]) -> IntersectionSet<T> {
    intersect_segments(&seam_segments(a, [false; 2]), &seam_segments(b, [false; 2]))
}

/// One side of a crisis pair: a saddle (tracked in the parameter by Newton),
/// which manifold, and which branches of it.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldSpec<T> {
    pub saddle: FixedPointRecord<T>,
    pub side: ManifoldSide,
    pub branches: Vec<Branch>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrisisSettings<T> {
    pub manifold: ManifoldSettings<T>,
    pub tol: OrbitTolerances<T>,
    /// Final bracket width.
    pub width: T,
    /// Equally spaced probes of the initial scan, ends included.
    pub scan_points: usize,
}

impl<T: Scalar> Default for CrisisSettings<T> {
    fn default() -> Self {
        Self {
            manifold: ManifoldSettings::default(),
            tol: OrbitTolerances::default(),
            width: T::lit(1e-5),
            scan_points: 5,
        }
    }
}

/// Predicate value at one parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct CrisisProbe<T> {
    pub param: T,
    pub intersects: bool,
    pub crossings: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrisisResult<T> {
    pub eps_star: T,
    pub bracket: (T, T),
    pub probes: Vec<CrisisProbe<T>>,
    /// Non-monotone predicate flips seen during the scan or bisection.
    pub diagnostics: Vec<String>,
}

fn track_saddle<T: Scalar, M: PlanarMap<T>>(
    map: &M,
    spec: &ManifoldSpec<T>,
    param: T,
    tol: &OrbitTolerances<T>,
) -> Result<FixedPointRecord<T>> {
    let r = find_periodic_point(map, spec.saddle.point, spec.saddle.period, param, tol)?;
    if map.distance(r.point, spec.saddle.point) > T::lit(0.1) {
        return Err(Error::BranchLost {
            param: param.to_f64_lossy(),
            reason: "saddle moved more than 0.1 from its reference position".into(),
        });
    }
    Ok(r.with_label(spec.saddle.label.clone()))
}

/// Grows all requested branches for one spec at the map's parameter.
pub fn grow_spec<T: Scalar, M: PlanarMap<T>>(
    map: &M,
    spec: &ManifoldSpec<T>,
    param: T,
    set: &CrisisSettings<T>,
) -> Result<Vec<ManifoldPolyline<T>>> {
    let saddle = track_saddle(map, spec, param, &set.tol)?;
    spec.branches
        .iter()
        .map(|&b| grow_manifold(map, &saddle, spec.side, b, &set.manifold))
        .collect()
}

/// Evaluates the "manifolds intersect" predicate at one parameter value.
pub fn crisis_probe<T: Scalar, F: MapFamily<T>>(
    family: &F,
    pair: (&ManifoldSpec<T>, &ManifoldSpec<T>),
    param: T,
    set: &CrisisSettings<T>,
) -> Result<CrisisProbe<T>> {
    let map = family.at(param)?;
    let a = grow_spec(&map, pair.0, param, set)?;
    let b = grow_spec(&map, pair.1, param, set)?;
    let mut crossings = 0;
    for pa in &a {
        for pb in &b {
            let s = find_intersections(pa, pb);
            crossings += s.crossings.len() + s.overlaps.len();
        }
    }
    Ok(CrisisProbe {
        param,
        intersects: crossings > 0,
        crossings,
    })
}

/// Bisects for the first parameter at which the two manifolds intersect.
pub fn detect_crisis<T: Scalar, F: MapFamily<T>>(
    family: &F,
    pair: (&ManifoldSpec<T>, &ManifoldSpec<T>),
    bracket: (T, T),
    set: &CrisisSettings<T>,
) -> Result<CrisisResult<T>> {
    let (lo, hi) = bracket;
    let n = set.scan_points.max(2);
    let params: Vec<T> = (0..n)
        .map(|i| lo + (hi - lo) * T::lit(i as f64) / T::lit((n - 1) as f64))
        .collect();
    let mut probes: Vec<CrisisProbe<T>> = params
        .par_iter()
        .map(|&e| crisis_probe(family, pair, e, set))
        .collect::<Result<Vec<_>>>()?;
    let first = probes[0].intersects;
    let last = probes[n - 1].intersects;
    if first == last {
        return Err(Error::BracketInvalid {
            lo: lo.to_f64_lossy(),
            hi: hi.to_f64_lossy(),
        });
    }
    let mut diagnostics = Vec::new();
    let flips = probes
        .windows(2)
        .filter(|w| w[0].intersects != w[1].intersects)
        .count();
    if flips > 1 {
        diagnostics.push(format!("predicate flips {flips} times across the initial scan"));
    }
    // first transition away from the value at the lower end
    let k = probes
        .windows(2)
        .position(|w| w[0].intersects != w[1].intersects)
        .expect("ends differ");
    let (mut a, mut b) = (probes[k].param, probes[k + 1].param);
    let va = probes[k].intersects;
    while (b - a).abs() > set.width {
        let mid = (a + b) * T::lit(0.5);
        let p = crisis_probe(family, pair, mid, set)?;
        if p.intersects == va {
            a = mid;
        } else {
            b = mid;
        }
        probes.push(p);
    }
    probes.sort_by(|x, y| x.param.partial_cmp(&y.param).unwrap_or(std::cmp::Ordering::Equal));
    let mono_flips = probes
        .windows(2)
        .filter(|w| w[0].intersects != w[1].intersects)
        .count();
    if mono_flips > 1 && flips <= 1 {
        diagnostics.push(format!("predicate flips {mono_flips} times across all probes"));
    }
    Ok(CrisisResult {
        eps_star: (a + b) * T::lit(0.5),
        bracket: (a, b),
        probes,
        diagnostics,
    })
}

/// Symmetric Hausdorff distance between two point sets (brute force over a
/// bucket grid of the second set).
pub fn hausdorff<T: Scalar>(a: &[[T; 2]], b: &[[T; 2]]) -> T {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// `max_{x∈a} min_{y∈b} |x - y|`.
pub fn directed_hausdorff<T: Scalar>(a: &[[T; 2]], b: &[[T; 2]]) -> T {
    if a.is_empty() {
        return T::zero();
    }
    if b.is_empty() {
        return T::infinity();
    }
    let mut ext = [T::infinity(), T::neg_infinity(), T::infinity(), T::neg_infinity()];
    for p in b {
        ext[0] = ext[0].min(p[0]);
        ext[1] = ext[1].max(p[0]);
        ext[2] = ext[2].min(p[1]);
        ext[3] = ext[3].max(p[1]);
    }
    let cells = ((b.len() as f64).sqrt().ceil() as usize).clamp(1, 2048);
    let span = (ext[1] - ext[0]).max(ext[3] - ext[2]).max(T::min_positive_value());
    let floor = span / T::lit(cells as f64);
    let wx = ((ext[1] - ext[0]) / T::lit(cells as f64)).max(floor);
    let wy = ((ext[3] - ext[2]) / T::lit(cells as f64)).max(floor);
    let ci = |x: T, lo: T, w: T| -> i64 { ((x - lo) / w).floor().to_i64().unwrap_or(0) };
    let mut grid: Vec<Vec<usize>> = vec![Vec::new(); cells * cells];
    let clampc = |c: i64| c.clamp(0, cells as i64 - 1) as usize;
    for (j, p) in b.iter().enumerate() {
        grid[clampc(ci(p[0], ext[0], wx)) * cells + clampc(ci(p[1], ext[2], wy))].push(j);
    }
    a.par_iter()
        .map(|p| {
            // points outside the grid search from their projection onto it
            let cx = clampc(ci(p[0], ext[0], wx)) as i64;
            let cy = clampc(ci(p[1], ext[2], wy)) as i64;
            let mut best = T::infinity();
            let mut ring = 0i64;
            loop {
                for dx in -ring..=ring {
                    for dy in -ring..=ring {
                        if dx.abs() != ring && dy.abs() != ring {
                            continue;
                        }
                        let (x, y) = (cx + dx, cy + dy);
                        if x < 0 || y < 0 || x >= cells as i64 || y >= cells as i64 {
                            continue;
                        }
                        for &j in &grid[x as usize * cells + y as usize] {
                            best = best.min(dist(*p, b[j]));
                        }
                    }
                }
                let reach = T::lit(ring as f64) * wx.min(wy);
                if best <= reach || ring as usize >= cells {
                    break;
                }
                ring += 1;
            }
            best
        })
        .reduce(T::zero, |x, y| x.max(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn crossing_of_diagonals() {
        let s = polyline_intersections(&[[0.0, 0.0], [1.0, 1.0]], &[[0.0, 1.0], [1.0, 0.0]]);
        assert_eq!(s.crossings.len(), 1);
        let c = s.crossings[0];
        assert!((c.point[0] - 0.5f64).abs() < 1e-15 && (c.point[1] - 0.5f64).abs() < 1e-15);
        assert!((c.angle - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn disjoint_and_overlap() {
        let s = polyline_intersections(&[[0.0, 0.0], [1.0, 0.0]], &[[0.0, 1.0], [1.0, 1.0]]);
        assert!(s.is_empty());
        let s = polyline_intersections(&[[0.0, 0.0], [2.0, 0.0]], &[[1.0, 0.0], [3.0, 0.0]]);
        assert!(s.crossings.is_empty());
        assert_eq!(s.overlaps, vec![(0, 0)]);
    }

    #[test]
    fn shared_vertex_counted_once() {
        let a = [[0.0, -1.0], [0.0, 0.0], [0.0, 1.0]];
        let b = [[-1.0, 0.0], [1.0, 0.0]];
        let s = polyline_intersections(&a, &b);
        assert_eq!(s.crossings.len(), 1);
    }

    #[test]
    fn seam_split() {
        let tau = std::f64::consts::TAU;
        let pts = [[1.0, tau - 0.1], [1.0, tau + 0.1]];
        let segs = seam_segments(&pts, [false, true]);
        assert_eq!(segs.len(), 2);
        assert!((segs[0].1[1] - tau).abs() < 1e-12);
        assert!(segs[1].0[1].abs() < 1e-12 && (segs[1].1[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn hausdorff_simple() {
        let a = [[0.0, 0.0], [1.0, 0.0]];
        let b = [[0.0, 0.5], [1.0, 0.0], [5.0, 0.0]];
        assert!((directed_hausdorff(&a, &b) - 0.5f64).abs() < 1e-15);
        assert!((hausdorff(&a, &b) - 4.0f64).abs() < 1e-15);
    }
}
