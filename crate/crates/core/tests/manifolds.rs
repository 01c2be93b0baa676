use proptest::prelude::*;
use revmix::manifolds::*;
use revmix::orbits::*;
use revmix::*;

const SEEDS: usize = 1000;

struct Linear;

impl PlanarMap<f64> for Linear {
    fn step(&self, x: [f64; 2]) -> Result<[f64; 2]> {
        Ok([2.0 * x[0], 0.5 * x[1]])
    }
    fn inverse_step(&self, x: [f64; 2]) -> Result<[f64; 2]> {
        Ok([0.5 * x[0], 2.0 * x[1]])
    }
    fn jacobian(&self, _x: [f64; 2]) -> Result<Mat2<f64>> {
        Ok(Mat2::new(2.0, 0.0, 0.0, 0.5))
    }
}

fn seg_dist(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    };
    (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
}

/// Largest distance from a vertex of `pts` to the polyline `poly`, capped at `cap`.
fn max_dist_to_polyline(pts: &[[f64; 2]], poly: &[[f64; 2]], cap: f64) -> f64 {
    use std::collections::HashMap;
    let cell = cap.max(1e-3);
    let key = |x: f64, y: f64| ((x / cell).floor() as i64, (y / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for i in 0..poly.len() - 1 {
        let (a, b) = (poly[i], poly[i + 1]);
        let (x0, y0) = key(a[0].min(b[0]) - cap, a[1].min(b[1]) - cap);
        let (x1, y1) = key(a[0].max(b[0]) + cap, a[1].max(b[1]) + cap);
        for cx in x0..=x1 {
            for cy in y0..=y1 {
                grid.entry((cx, cy)).or_default().push(i);
            }
        }
    }
    pts.iter()
        .map(|&p| {
            grid.get(&key(p[0], p[1]))
                .map(|v| v.iter().map(|&i| seg_dist(p, poly[i], poly[i + 1])).fold(cap, f64::min))
                .unwrap_or(cap)
        })
        .fold(0.0, f64::max)
}

fn henon_saddle(m: f64) -> (HenonMap64, FixedPointRecord<f64>) {
    let map = HenonMap64::new(m, 0.3).unwrap();
    let x = map.params.fixed_points().unwrap()[0];
    let fp = find_periodic_point(&map, x, 1, m, &OrbitTolerances::default()).unwrap();
    (map, fp)
}

#[test]
fn linear_unstable_manifold_is_the_axis() {
    let fp = find_periodic_point(&Linear, [0.1, 0.1], 1, 0.0, &OrbitTolerances::default()).unwrap();
    assert_eq!(fp.kind, OrbitKind::Saddle);
    for branch in [Branch::Plus, Branch::Minus] {
        let w = grow_manifold(&Linear, &fp, ManifoldSide::Unstable, branch, &ManifoldSettings::with_arclength(10.0)).unwrap();
        assert!(w.total_arclength() >= 10.0);
        assert!(w.points.iter().all(|p| p[1].abs() < 1e-9));
        assert!(w.points.windows(2).all(|s| (s[1][0] - s[0][0]).abs() <= 5e-3 + 1e-12));
        let s = grow_manifold(&Linear, &fp, ManifoldSide::Stable, branch, &ManifoldSettings::with_arclength(10.0)).unwrap();
        assert!(s.points.iter().all(|p| p[0].abs() < 1e-9));
    }
}

#[test]
fn non_saddle_rejected() {
    let map = HenonMap64::new(1.0, 0.3).unwrap();
    let x = map.params.fixed_points().unwrap()[0];
    let fp = find_periodic_point(&map, x, 1, 1.0, &OrbitTolerances::default()).unwrap();
    assert!(matches!(
        grow_manifold(&map, &fp, ManifoldSide::Unstable, Branch::Plus, &ManifoldSettings::default()),
        Err(Error::NotASaddle(_))
    ));
}

#[test]
fn henon_unstable_manifold_matches_iterated_cloud() {
    let (map, fp) = henon_saddle(2.0);
    let (_, lu) = fp.saddle_multipliers().unwrap();
    assert!(lu < -1.0);
    let set = ManifoldSettings::with_arclength(20.0);
    let w = grow_manifold(&map, &fp, ManifoldSide::Unstable, Branch::Plus, &set).unwrap();
    assert!(!w.truncated && w.stopped_by.is_none());
    assert_eq!(w.iterate, 2);
    let full = w.generation_starts.len();

    // brute force: 10³ seeds on the fundamental segment pushed through F²
    let v = fp.jacobian.eigenvector(lu);
    let g = lu * lu;
    let seeds: Vec<[f64; 2]> = (0..SEEDS)
        .map(|i| {
            let d = set.delta0 * g.powf(i as f64 / SEEDS as f64);
            [fp.point[0] + d * v[0], fp.point[1] + d * v[1]]
        })
        .collect();
    let mut cloud = Vec::with_capacity(SEEDS * full);
    let mut layer = seeds;
    for _ in 0..full {
        cloud.extend_from_slice(&layer);
        layer = layer
            .iter()
            .map(|&x| map.step(map.step(x).unwrap()).unwrap())
            .collect();
    }
    // cut the last layer where the grown curve ends
    let tip = *w.points.last().unwrap();
    let last_layer = cloud.len() - SEEDS;
    let cut = (last_layer..cloud.len())
        .min_by(|&i, &j| {
            let di = (cloud[i][0] - tip[0]).hypot(cloud[i][1] - tip[1]);
            let dj = (cloud[j][0] - tip[0]).hypot(cloud[j][1] - tip[1]);
            di.partial_cmp(&dj).unwrap()
        })
        .unwrap();
    cloud.truncate(cut + 1);
    let grown = &w.points[..];
    let d1 = max_dist_to_polyline(&cloud, grown, 1e-2);
    let d2 = max_dist_to_polyline(grown, &cloud, 1e-2);
    assert!(d1.max(d2) < 1e-3, "{d1} {d2}");
}

#[test]
fn henon_manifold_is_invariant() {
    let (map, fp) = henon_saddle(2.0);
    let set = ManifoldSettings::with_arclength(8.0);
    for side in [ManifoldSide::Unstable, ManifoldSide::Stable] {
        let w = grow_manifold(&map, &fp, side, Branch::Minus, &set).unwrap();
        let cut = w.generation_starts[w.generation_starts.len() - 2];
        let images: Vec<[f64; 2]> = w.points[..cut]
            .iter()
            .map(|&x| {
                let mut y = x;
                for _ in 0..w.iterate {
                    y = match side {
                        ManifoldSide::Unstable => map.step(y).unwrap(),
                        ManifoldSide::Stable => map.inverse_step(y).unwrap(),
                    };
                }
                y
            })
            .collect();
        let d = max_dist_to_polyline(&images, &w.points, 1e-2);
        assert!(d < set.delta_max, "{side:?} {d}");
    }
}

#[test]
fn growing_longer_keeps_homoclinic_points() {
    let (map, fp) = henon_saddle(2.2);
    let grow = |side, branch, l: f64| grow_manifold(&map, &fp, side, branch, &ManifoldSettings::with_arclength(l)).unwrap();
    let pair = |l| find_intersections(&grow(ManifoldSide::Unstable, Branch::Minus, l), &grow(ManifoldSide::Stable, Branch::Plus, l));
    let short = pair(5.0);
    let long = pair(10.0);
    assert!(!short.is_empty());
    assert!(long.len() >= short.len());
    for c in &short.crossings {
        assert!(long.crossings.iter().any(|d| (d.point[0] - c.point[0]).hypot(d.point[1] - c.point[1]) < 1e-9));
    }
}

#[test]
fn point_budget_truncates() {
    let (map, fp) = henon_saddle(2.0);
    let set = ManifoldSettings {
        point_budget: 300,
        ..ManifoldSettings::with_arclength(20.0)
    };
    let w = grow_manifold(&map, &fp, ManifoldSide::Unstable, Branch::Plus, &set).unwrap();
    assert!(w.truncated);
    assert_eq!(w.len(), 300);
}

proptest! {
    #[test]
    fn crossings_lie_on_both_segments(
        a in prop::array::uniform4(-1.0f64..1.0),
        b in prop::array::uniform4(-1.0f64..1.0),
    ) {
        let pa = [[a[0], a[1]], [a[2], a[3]]];
        let pb = [[b[0], b[1]], [b[2], b[3]]];
        let s = polyline_intersections(&pa, &pb);
        for c in &s.crossings {
            prop_assert!(seg_dist(c.point, pa[0], pa[1]) < 1e-9);
            prop_assert!(seg_dist(c.point, pb[0], pb[1]) < 1e-9);
            prop_assert!(c.angle >= 0.0 && c.angle <= std::f64::consts::FRAC_PI_2 + 1e-12);
        }
        prop_assert!(s.crossings.len() <= 1);
    }

    #[test]
    fn intersection_is_symmetric_in_count(
        a in prop::collection::vec(prop::array::uniform2(-1.0f64..1.0), 2..12),
        b in prop::collection::vec(prop::array::uniform2(-1.0f64..1.0), 2..12),
    ) {
        let ab = polyline_intersections(&a, &b);
        let ba = polyline_intersections(&b, &a);
        prop_assert_eq!(ab.crossings.len(), ba.crossings.len());
    }
}
