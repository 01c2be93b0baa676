//! Attractor and repeller sampling by long orbits, occupancy grids over the
//! `(S, R)` plane, the conservative / dissipative / mixed classifier, and a
//! largest-Lyapunov-exponent estimate.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::IntegratorConfig;
use crate::orbits::FixedPointRecord;
use crate::poincare::{SectionPoint, VortexMap};
use crate::scalar::{wrap_angle, Scalar};
use crate::systems::{PlanarMap, VortexParams};

pub const DEFAULT_TRANSIENT: usize = 10_000;
pub const DEFAULT_SAMPLES: usize = 50_000;
pub const DEFAULT_RESOLUTION: usize = 1000;

/// Points of one long orbit, stored as `[R, S]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cloud<T> {
    pub points: Vec<[T; 2]>,
    /// Map failure that cut the orbit short.
    pub escaped: Option<Error>,
    /// The last 10% of samples left the (1.2×) box of the first 90%.
    pub possibly_transient: bool,
}

impl<T: Scalar> Cloud<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Image of the cloud under `S ↦ 2π - S`.
    pub fn mirrored(&self) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| [p[0], wrap_angle(T::two_pi() - p[1])])
                .collect(),
            escaped: self.escaped.clone(),
            possibly_transient: self.possibly_transient,
        }
    }
}

/// Iterates `map` (or its inverse) from `x0`, drops `n_transient` points and
/// keeps the next `n_samples`.
pub fn sample_orbit<T: Scalar, M: PlanarMap<T> + ?Sized>(
    map: &M,
    x0: [T; 2],
    n_transient: usize,
    n_samples: usize,
    backward: bool,
) -> Cloud<T> {
    let mut points = Vec::with_capacity(n_samples);
    let mut x = x0;
    let mut escaped = None;
    for i in 0..n_transient + n_samples {
        let next = if backward {
            map.inverse_step(x)
        } else {
            map.step(x)
        };
        match next {
            Ok(y) => x = y,
            Err(e) => {
                escaped = Some(e);
                break;
            }
        }
        if i >= n_transient {
            points.push(x);
        }
    }
    let possibly_transient = transient_flag(&points);
    Cloud {
        points,
        escaped,
        possibly_transient,
    }
}

/// True when the last 10% of `points` leave the bounding box of the first 90%
/// scaled by 1.2 about its centre.
pub fn transient_flag<T: Scalar>(points: &[[T; 2]]) -> bool {
    let n = points.len();
    if n < 10 {
        return false;
    }
    let split = n - n / 10;
    let mut bb = [T::infinity(), T::neg_infinity(), T::infinity(), T::neg_infinity()];
    for p in &points[..split] {
        bb[0] = bb[0].min(p[0]);
        bb[1] = bb[1].max(p[0]);
        bb[2] = bb[2].min(p[1]);
        bb[3] = bb[3].max(p[1]);
    }
    let grow = T::lit(0.1);
    let (dr, ds) = ((bb[1] - bb[0]) * grow, (bb[3] - bb[2]) * grow);
    points[split..].iter().any(|p| {
        p[0] < bb[0] - dr || p[0] > bb[1] + dr || p[1] < bb[2] - ds || p[1] > bb[3] + ds
    })
}

pub fn sample_attractor<T: Scalar>(
    x0: SectionPoint<T>,
    n_transient: usize,
    n_samples: usize,
    p: &VortexParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Cloud<T> {
    sample_orbit(&VortexMap::new(*p, *cfg), x0.to_array(), n_transient, n_samples, false)
}

pub fn sample_repeller<T: Scalar>(
    x0: SectionPoint<T>,
    n_transient: usize,
    n_samples: usize,
    p: &VortexParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Cloud<T> {
    sample_orbit(&VortexMap::new(*p, *cfg), x0.to_array(), n_transient, n_samples, true)
}

/// Samples several seeds in parallel; results keep the seed order.
pub fn sample_many<T: Scalar, M: PlanarMap<T> + ?Sized>(
    map: &M,
    seeds: &[[T; 2]],
    n_transient: usize,
    n_samples: usize,
    backward: bool,
) -> Vec<Cloud<T>> {
    seeds
        .par_iter()
        .map(|&x| sample_orbit(map, x, n_transient, n_samples, backward))
        .collect()
}

/// Rectangle in the `(S, R)` plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window<T> {
    pub s_lo: T,
    pub s_hi: T,
    pub r_lo: T,
    pub r_hi: T,
}

impl<T: Scalar> Window<T> {
    pub fn new(s_lo: T, s_hi: T, r_lo: T, r_hi: T) -> Self {
        Self {
            s_lo,
            s_hi,
            r_lo,
            r_hi,
        }
    }

    /// Bounding box of all clouds, padded by `pad` of its extent on each side.
    pub fn fit(clouds: &[&Cloud<T>], pad: T) -> Option<Self> {
        let mut bb = [T::infinity(), T::neg_infinity(), T::infinity(), T::neg_infinity()];
        for c in clouds {
            for p in &c.points {
                bb[0] = bb[0].min(p[1]);
                bb[1] = bb[1].max(p[1]);
                bb[2] = bb[2].min(p[0]);
                bb[3] = bb[3].max(p[0]);
            }
        }
        if !bb[0].is_finite() {
            return None;
        }
        let tiny = T::lit(1e-9);
        let ds = (bb[1] - bb[0]).max(tiny) * pad;
        let dr = (bb[3] - bb[2]).max(tiny) * pad;
        Some(Self::new(bb[0] - ds, bb[1] + ds, bb[2] - dr, bb[3] + dr))
    }

    /// Smallest window containing `self` whose `S` range is symmetric about π.
    pub fn symmetrized(&self) -> Self {
        let tau = T::two_pi();
        let lo = self.s_lo.min(tau - self.s_hi);
        Self::new(lo, tau - lo, self.r_lo, self.r_hi)
    }

    pub fn mirrored(&self) -> Self {
        let tau = T::two_pi();
        Self::new(tau - self.s_hi, tau - self.s_lo, self.r_lo, self.r_hi)
    }

    pub fn contains(&self, r: T, s: T) -> bool {
        s >= self.s_lo && s <= self.s_hi && r >= self.r_lo && r <= self.r_hi
    }
}

/// Bitmask of visited cells. Cell `(i, j)` covers the `i`-th `S` column and
/// the `j`-th `R` row of the window.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid<T> {
    pub window: Window<T>,
    pub ns: usize,
    pub nr: usize,
    pub cells: Vec<u64>,
    pub sample_count: usize,
    pub outside: usize,
}

impl<T: Scalar> OccupancyGrid<T> {
    pub fn empty(window: Window<T>, ns: usize, nr: usize) -> Result<Self> {
        if ns < 16 || nr < 16 {
            return Err(Error::InvalidParameter(format!(
                "grid resolution must be at least 16x16 (got {ns}x{nr})"
            )));
        }
        if !(window.s_hi > window.s_lo && window.r_hi > window.r_lo) {
            return Err(Error::InvalidParameter(format!("degenerate window {window:?}")));
        }
        Ok(Self {
            window,
            ns,
            nr,
            cells: vec![0; (ns * nr).div_ceil(64)],
            sample_count: 0,
            outside: 0,
        })
    }

    /// Cell of `(R, S)`, or `None` outside the window.
    pub fn cell_of(&self, r: T, s: T) -> Option<(usize, usize)> {
        let w = &self.window;
        if !w.contains(r, s) {
            return None;
        }
        let fi = (s - w.s_lo) / (w.s_hi - w.s_lo) * T::lit(self.ns as f64);
        let fj = (r - w.r_lo) / (w.r_hi - w.r_lo) * T::lit(self.nr as f64);
        let i = fi.floor().to_usize().unwrap_or(0).min(self.ns - 1);
        let j = fj.floor().to_usize().unwrap_or(0).min(self.nr - 1);
        Some((i, j))
    }

    fn bit(&self, i: usize, j: usize) -> (usize, u64) {
        let k = j * self.ns + i;
        (k / 64, 1u64 << (k % 64))
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        let (w, m) = self.bit(i, j);
        self.cells[w] & m != 0
    }

    pub fn set(&mut self, i: usize, j: usize) {
        let (w, m) = self.bit(i, j);
        self.cells[w] |= m;
    }

    pub fn add_point(&mut self, p: [T; 2]) {
        self.sample_count += 1;
        match self.cell_of(p[0], p[1]) {
            Some((i, j)) => self.set(i, j),
            None => self.outside += 1,
        }
    }

    pub fn count(&self) -> usize {
        self.cells.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(|&w| w == 0)
    }

    fn check_same(&self, o: &Self) -> Result<()> {
        if self.ns != o.ns || self.nr != o.nr || self.window != o.window {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn intersection_count(&self, o: &Self) -> Result<usize> {
        self.check_same(o)?;
        Ok(self
            .cells
            .iter()
            .zip(&o.cells)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum())
    }

    pub fn union_count(&self, o: &Self) -> Result<usize> {
        self.check_same(o)?;
        Ok(self
            .cells
            .iter()
            .zip(&o.cells)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum())
    }

    /// Bitwise OR of two grids over the same window.
    pub fn merge(&mut self, o: &Self) -> Result<()> {
        self.check_same(o)?;
        for (a, b) in self.cells.iter_mut().zip(&o.cells) {
            *a |= *b;
        }
        self.sample_count += o.sample_count;
        self.outside += o.outside;
        Ok(())
    }

    /// Grid reflected by `S ↦ 2π - S`: column `i` goes to `ns - 1 - i` over the
    /// mirrored window.
    pub fn mirrored(&self) -> Self {
        let mut g = Self {
            window: self.window.mirrored(),
            ns: self.ns,
            nr: self.nr,
            cells: vec![0; self.cells.len()],
            sample_count: self.sample_count,
            outside: self.outside,
        };
        for j in 0..self.nr {
            for i in 0..self.ns {
                if self.get(i, j) {
                    g.set(self.ns - 1 - i, j);
                }
            }
        }
        g
    }

    /// Set cells as `(i, j)` pairs in row-major order.
    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.nr).flat_map(move |j| (0..self.ns).filter(move |&i| self.get(i, j)).map(move |i| (i, j)))
    }
}

/// Bins a cloud into a fresh grid.
pub fn grid_occupancy<T: Scalar>(cloud: &Cloud<T>, window: Window<T>, resolution: (usize, usize)) -> Result<OccupancyGrid<T>> {
    let mut g = OccupancyGrid::empty(window, resolution.0, resolution.1)?;
    for &p in &cloud.points {
        g.add_point(p);
    }
    Ok(g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DynamicsKind {
    Conservative,
    Dissipative,
    Mixed,
    Undetermined,
}

impl DynamicsKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DynamicsKind::Conservative => "conservative",
            DynamicsKind::Dissipative => "dissipative",
            DynamicsKind::Mixed => "mixed",
            DynamicsKind::Undetermined => "undetermined",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynamicsVerdict {
    pub kind: DynamicsKind,
    pub jaccard: f64,
    pub thinness: f64,
    pub shared_cells: usize,
    pub attractor_cells: usize,
    pub repeller_cells: usize,
}

/// Jaccard thresholds. Jaccard above `conservative` is conservative; within
/// `band` below it the verdict is undetermined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifierThresholds {
    pub conservative: f64,
    pub band: f64,
}

impl Default for ClassifierThresholds {
    fn default() -> Self {
        Self {
            conservative: 0.95,
            band: 0.01,
        }
    }
}

pub fn classify_dynamics<T: Scalar>(a: &OccupancyGrid<T>, r: &OccupancyGrid<T>) -> Result<DynamicsVerdict> {
    classify_with(a, r, &ClassifierThresholds::default())
}

pub fn classify_with<T: Scalar>(
    a: &OccupancyGrid<T>,
    r: &OccupancyGrid<T>,
    th: &ClassifierThresholds,
) -> Result<DynamicsVerdict> {
    let shared = a.intersection_count(r)?;
    let union = a.union_count(r)?;
    let (na, nr) = (a.count(), r.count());
    let jaccard = if union == 0 {
        0.0
    } else {
        shared as f64 / union as f64
    };
    let smaller = na.min(nr);
    let thinness = if smaller == 0 {
        0.0
    } else {
        shared as f64 / smaller as f64
    };
    let kind = if union == 0 {
        DynamicsKind::Undetermined
    } else if shared == 0 {
        DynamicsKind::Dissipative
    } else if jaccard > th.conservative {
        DynamicsKind::Conservative
    } else if jaccard >= th.conservative - th.band {
        DynamicsKind::Undetermined
    } else {
        DynamicsKind::Mixed
    };
    Ok(DynamicsVerdict {
        kind,
        jaccard,
        thinness,
        shared_cells: shared,
        attractor_cells: na,
        repeller_cells: nr,
    })
}

/// Mean log stretch per iterate of a renormalised tangent vector.
pub fn lyapunov_of<T: Scalar, M: PlanarMap<T> + ?Sized>(map: &M, x0: [T; 2], n_iter: usize) -> Result<T> {
    if n_iter == 0 {
        return Err(Error::InvalidParameter("n_iter must be positive".into()));
    }
    let mut x = x0;
    let inv = T::one() / T::lit(2.0).sqrt();
    let mut v = [inv, inv];
    let mut sum = T::zero();
    for _ in 0..n_iter {
        let (y, j) = map.step_with_jacobian(x)?;
        let w = j.apply(v);
        let n = w[0].hypot(w[1]);
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::NonFinite { t: 0.0 });
        }
        sum = sum + n.ln();
        v = [w[0] / n, w[1] / n];
        x = y;
    }
    Ok(sum / T::lit(n_iter as f64))
}

pub fn lyapunov_max<T: Scalar>(
    x0: SectionPoint<T>,
    n_iter: usize,
    p: &VortexParams<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<T> {
    lyapunov_of(&VortexMap::new(*p, *cfg), x0.to_array(), n_iter)
}

/// Whether a symmetric saddle's cell is shared by the attractor and repeller grids.
#[derive(Clone, Debug, PartialEq)]
pub struct CoreMembership<T> {
    pub label: String,
    pub point: [T; 2],
    pub cell: Option<(usize, usize)>,
    pub in_attractor: bool,
    pub in_repeller: bool,
    pub in_core: bool,
}

pub fn symmetric_core_check<T: Scalar>(
    a: &OccupancyGrid<T>,
    r: &OccupancyGrid<T>,
    saddles: &[FixedPointRecord<T>],
) -> Result<Vec<CoreMembership<T>>> {
    a.check_same(r)?;
    Ok(saddles
        .iter()
        .map(|s| {
            let cell = a.cell_of(s.point[0], s.point[1]);
            let (ia, ir) = cell.map_or((false, false), |(i, j)| (a.get(i, j), r.get(i, j)));
            CoreMembership {
                label: s.label.clone(),
                point: s.point,
                cell,
                in_attractor: ia,
                in_repeller: ir,
                in_core: ia && ir,
            }
        })
        .collect())
}
