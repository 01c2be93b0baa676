//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines reach the console. Pass
//! criterion numbers as arguments to run a subset, e.g.
//! `cargo test -p revmix --test acceptance -- 4 5`.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use revmix::chaos::*;
use revmix::manifolds::*;
use revmix::orbits::*;
use revmix::scalar::wrap_delta;
use revmix::*;

const A: f64 = 0.1;
const KAPPA: f64 = 4.65;
const EPS_FIG2: f64 = 0.1463;

// saddles at eps = 0.1463
const S1: [f64; 2] = [11.52575, PI];
const SA: [f64; 2] = [11.584277, 4.479258];
const SR: [f64; 2] = [11.584277, 1.803927];

// sampling window of the eps = 0.1463 attractor/repeller portraits
const WIN_R: (f64, f64) = (11.49, 11.69);
const WIN_S: (f64, f64) = (0.94, 5.34);

struct Check {
    pass: bool,
    detail: Vec<String>,
}

impl Check {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: vec![detail.into()],
        }
    }
}

fn vortex(eps: f64) -> Result<(VortexParams64, IntegratorConfig64)> {
    Ok((VortexParams64::new(A, KAPPA, eps)?, IntegratorConfig64::default()))
}

/// Integrator setting for criteria 1 and 2. The return map contracts areas by
/// about 1e4 near the attractor, so the round trip needs tolerance 1e-13.
fn tight(p: VortexParams64) -> (VortexParams64, IntegratorConfig64) {
    (p, IntegratorConfig64::with_tol(1e-13))
}

fn gap(a: SectionPoint64, b: SectionPoint64) -> f64 {
    (a.r - b.r).hypot(wrap_delta(a.s - b.s))
}

fn c1() -> Result<Check> {
    let t0 = Instant::now();
    let (p, cfg) = tight(vortex(0.0)?.0);
    let map = VortexMap64::new(p, cfg);
    let (mut dr, mut dd) = (0.0f64, 0.0f64);
    for k in 0..7 {
        let r0 = 1.0 + 0.5 * k as f64;
        let mut x = [r0, 1.0];
        for _ in 0..1000 {
            x = map.step(x)?;
            dr = dr.max((x[0] - r0).abs());
        }
        for s in [0.0, 1.0, 2.5, 4.0, 5.5] {
            let j = poincare_jacobian(SectionPoint64::new(r0, s), &p, &cfg)?;
            dd = dd.max((j.det - 1.0).abs());
        }
    }
    let t = t0.elapsed().as_secs_f64();
    Ok(Check::new(
        dr < 1e-8 && dd < 1e-6 && t < 60.0,
        format!("max |dR| = {dr:.2e} over 1000 iterates, max |det DP - 1| = {dd:.2e}, {t:.1} s"),
    ))
}

fn c2() -> Result<Check> {
    let t0 = Instant::now();
    let (p, cfg) = tight(vortex(EPS_FIG2)?.0);
    let mut rng = StdRng::seed_from_u64(1463);
    let (mut conj, mut round) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let x = SectionPoint64::new(rng.gen_range(WIN_R.0..WIN_R.1), rng.gen_range(WIN_S.0..WIN_S.1));
        let (px, _) = poincare_map(x, &p, &cfg)?;
        round = round.max(gap(inverse_poincare_map(px, &p, &cfg)?, x));
        let (y, _) = poincare_map(induced_involution(x), &p, &cfg)?;
        conj = conj.max(gap(induced_involution(y), inverse_poincare_map(x, &p, &cfg)?));
    }
    let t = t0.elapsed().as_secs_f64();
    Ok(Check::new(
        conj < 1e-7 && round < 1e-7 && t < 60.0,
        format!("max |hPh - P^-1| = {conj:.2e}, max |P^-1 P x - x| = {round:.2e}, {t:.1} s"),
    ))
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
    let key = |x: f64, y: f64| ((x / cap).floor() as i64, (y / cap).floor() as i64);
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

fn c3() -> Result<Check> {
    let t0 = Instant::now();
    let b = 0.3;
    let map = HenonMap64::new(1.0, b)?;
    let tol = OrbitTolerances::default();
    let d = ((1.0 + b) * (1.0 + b) + 4.0).sqrt();
    let mut newton = 0.0f64;
    for x in [(-(1.0 + b) + d) / 2.0, (-(1.0 + b) - d) / 2.0] {
        let fp = find_periodic_point(&map, [x + 0.05, x - 0.05], 1, 1.0, &tol)?;
        newton = newton.max((fp.point[0] - x).abs().max((fp.point[1] - x).abs()));
    }

    // unstable manifold of the saddle at M = 2 against 1000 seeds on a
    // fundamental segment pushed through F²
    let m2 = HenonMap64::new(2.0, b)?;
    let fp = find_periodic_point(&m2, m2.params.fixed_points().unwrap()[0], 1, 2.0, &tol)?;
    let (_, lu) = fp.saddle_multipliers().unwrap();
    let set = ManifoldSettings::with_arclength(20.0);
    let w = grow_manifold(&m2, &fp, ManifoldSide::Unstable, Branch::Plus, &set)?;
    let v = fp.jacobian.eigenvector(lu);
    let n = 1000;
    let mut layer: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let s = set.delta0 * (lu * lu).powf(i as f64 / n as f64);
            [fp.point[0] + s * v[0], fp.point[1] + s * v[1]]
        })
        .collect();
    let mut cloud = Vec::new();
    for _ in 0..w.generation_starts.len() {
        cloud.extend_from_slice(&layer);
        layer = layer.iter().map(|&x| m2.step(m2.step(x)?)).collect::<Result<_>>()?;
    }
    let tip = *w.points.last().unwrap();
    let cut = (cloud.len() - n..cloud.len())
        .min_by(|&i, &j| {
            let di = (cloud[i][0] - tip[0]).hypot(cloud[i][1] - tip[1]);
            let dj = (cloud[j][0] - tip[0]).hypot(cloud[j][1] - tip[1]);
            di.total_cmp(&dj)
        })
        .unwrap();
    cloud.truncate(cut + 1);
    let haus = max_dist_to_polyline(&cloud, &w.points, 1e-2).max(max_dist_to_polyline(&w.points, &cloud, 1e-2));
    let t = t0.elapsed().as_secs_f64();
    Ok(Check::new(
        newton < 1e-10 && haus < 1e-3 && w.total_arclength() >= 20.0 && t < 120.0,
        format!(
            "Newton error {newton:.1e} at M = 1; Hausdorff(W^u, brute force) = {haus:.2e} at M = 2, arclength {:.1}, {t:.1} s",
            w.total_arclength()
        ),
    ))
}

/// Image under the half-turn return `phi: 0 -> pi`.
fn half_turn(x: [f64; 2], p: &VortexParams64, cfg: &IntegratorConfig64) -> Result<[f64; 2]> {
    let tr = integrate(FlowState64::new(x[0], x[1], 0.0), (0.0, 600.0), p, cfg)?;
    let (_, y) = find_section_crossing(&tr, PI, p)?;
    Ok([y.r, y.s.rem_euclid(TAU)])
}

fn c4() -> Result<Check> {
    let (p, cfg) = vortex(EPS_FIG2)?;
    let map = VortexMap64::new(p, cfg);
    let tol = OrbitTolerances::default();
    let s1 = find_periodic_point(&map, S1, 1, EPS_FIG2, &tol)?;
    let sa = find_periodic_point(&map, SA, 1, EPS_FIG2, &tol)?;
    let sr = find_periodic_point(&map, SR, 1, EPS_FIG2, &tol)?;
    let paired = map.distance(map.involution(sa.point).unwrap(), sr.point) < 1e-6;
    let ok_s1 = s1.symmetric && s1.kind == OrbitKind::Saddle && (s1.det - 1.0).abs() < 1e-4;
    let prod = sa.det * sr.det;
    let ok_pair = paired && sa.kind == OrbitKind::Saddle && (prod - 1.0).abs() < 0.01;
    let rel = (sa.det * 88.0 - 1.0).abs();
    let ok_88 = rel < 0.15;

    let qa = half_turn(sa.point, &p, &cfg)?;
    let h = 1e-6;
    let mut jq = [[0.0; 2]; 2];
    for c in 0..2 {
        let (mut u, mut l) = (sa.point, sa.point);
        u[c] += h;
        l[c] -= h;
        let (fu, fl) = (half_turn(u, &p, &cfg)?, half_turn(l, &p, &cfg)?);
        jq[0][c] = (fu[0] - fl[0]) / (2.0 * h);
        jq[1][c] = wrap_delta(fu[1] - fl[1]) / (2.0 * h);
    }
    let det_q = jq[0][0] * jq[1][1] - jq[0][1] * jq[1][0];

    let mark = |b: bool| if b { "ok" } else { "FAIL" };
    Ok(Check {
        pass: ok_s1 && ok_pair && ok_88,
        detail: vec![
            format!("s_1 = ({:.6}, {:.6}): det = {:.7} [{}]", s1.point[0], s1.point[1], s1.det, mark(ok_s1)),
            format!("det(s_a) det(s_r) = {prod:.6} [{}]", mark(ok_pair)),
            format!(
                "det(s_a) = {:.4e} = 1/{:.4e}, target 1/88, relative error {rel:.3} [{}]",
                sa.det,
                1.0 / sa.det,
                mark(ok_88)
            ),
            format!(
                "half-turn return fixes s_a to {:.1e} with det = {det_q:.5} = 1/{:.1}; det DP is its square",
                gap(SectionPoint64::from_array(qa), sa.section_point()),
                1.0 / det_q
            ),
        ],
    })
}

fn crisis_specs(eps: f64, map: &VortexMap64) -> Result<(ManifoldSpec<f64>, ManifoldSpec<f64>)> {
    let tol = OrbitTolerances::default();
    let both = vec![Branch::Plus, Branch::Minus];
    Ok((
        ManifoldSpec {
            saddle: find_periodic_point(map, SA, 1, eps, &tol)?.with_label("s_1^a"),
            side: ManifoldSide::Unstable,
            branches: both.clone(),
        },
        ManifoldSpec {
            saddle: find_periodic_point(map, S1, 1, eps, &tol)?.with_label("s_1^pi"),
            side: ManifoldSide::Stable,
            branches: both,
        },
    ))
}

fn c5() -> Result<Check> {
    let t0 = Instant::now();
    let (p, cfg) = vortex(EPS_FIG2)?;
    let fam = VortexFamily::new(p, cfg);
    let (u, s) = crisis_specs(EPS_FIG2, &fam.at(EPS_FIG2)?)?;
    let set = CrisisSettings::default();
    let res = detect_crisis(&fam, (&u, &s), (0.1460, 0.1467), &set)?;
    let before = crisis_probe(&fam, (&u, &s), 0.1463, &set)?;
    let after = crisis_probe(&fam, (&u, &s), 0.1464, &set)?;
    let t = t0.elapsed().as_secs_f64();
    let in_range = (0.1462..=0.1465).contains(&res.eps_star);
    let mut detail = vec![format!(
        "eps_star = {:.6} (bracket [{:.6}, {:.6}], {} probes), {t:.0} s",
        res.eps_star,
        res.bracket.0,
        res.bracket.1,
        res.probes.len()
    )];
    detail.push(format!(
        "crossings at 0.1463: {}, at 0.1464: {}",
        before.crossings, after.crossings
    ));
    detail.extend(res.diagnostics.iter().map(|d| format!("diagnostic: {d}")));
    Ok(Check {
        pass: in_range && !before.intersects && after.intersects && t < 1800.0,
        detail,
    })
}

fn c6() -> Result<Check> {
    let cases = [
        (0.1463, [11.55, 3.5], DynamicsKind::Dissipative),
        (0.14815, [11.55, 3.5], DynamicsKind::Mixed),
        (0.23, [11.6, 4.0], DynamicsKind::Mixed),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (eps, seed, want) in cases {
        let t0 = Instant::now();
        let (p, cfg) = vortex(eps)?;
        let x = SectionPoint64::new(seed[0], seed[1]);
        let fwd = sample_attractor(x, 10_000, 100_000, &p, &cfg);
        let bwd = sample_repeller(induced_involution(x), 10_000, 100_000, &p, &cfg);
        let mut kinds = Vec::new();
        for n in [50_000, 100_000] {
            let cut = |c: &Cloud<f64>| Cloud {
                points: c.points[..n.min(c.len())].to_vec(),
                escaped: None,
                possibly_transient: transient_flag(&c.points[..n.min(c.len())]),
            };
            let (a, r) = (cut(&fwd), cut(&bwd));
            let w = Window::fit(&[&a, &r], 0.05).expect("non-empty clouds");
            let v = classify_dynamics(&grid_occupancy(&a, w, (1000, 1000))?, &grid_occupancy(&r, w, (1000, 1000))?)?;
            kinds.push(format!(
                "{} at {n} (jaccard {:.4}, thinness {:.4})",
                v.kind.as_str(),
                v.jaccard,
                v.thinness
            ));
            pass &= v.kind == want && a.len() == n && r.len() == n;
        }
        let t = t0.elapsed().as_secs_f64();
        pass &= t < 600.0;
        detail.push(format!("eps = {eps}: {}, {t:.0} s", kinds.join(", ")));
    }
    Ok(Check { pass, detail })
}

fn c7() -> Result<Check> {
    let set = ContinuationSettings::default();
    let (p, cfg) = vortex(0.01)?;
    let fam = VortexFamily::new(p, cfg);
    let e2 = find_periodic_point(&fam.at(0.01)?, [11.4634, 0.0], 1, 0.01, &set.tol)?;
    let br = continue_branch(&fam, &e2, (0.01, 0.015), 5e-4, &set)?;
    let mut detail = Vec::new();
    let mut pitchfork = false;
    for ev in br.events.iter().filter(|e| e.kind == BifurcationKind::Pitchfork) {
        let mirror = match ev.offspring.as_slice() {
            [a, b, ..] => {
                let m = fam.at(a.param)?;
                m.distance(m.involution(a.point).unwrap(), b.point)
            }
            _ => f64::INFINITY,
        };
        pitchfork |= (0.01..=0.015).contains(&ev.eps_star) && mirror < 1e-6;
        detail.push(format!("e_2 pitchfork at eps = {:.6}, offspring mirror gap {mirror:.1e}", ev.eps_star));
    }
    if detail.is_empty() {
        detail.push("no pitchfork of e_2 in [0.01, 0.015]".into());
    }

    // f_1^s exists from eps ~ 0.032 on; start where it is a sink
    let e0 = 0.05;
    let f1 = find_periodic_point(&fam.at(e0)?, [11.583758, 5.327932], 1, e0, &set.tol)?;
    let c = detect_cascade(&fam, &f1, (e0, 0.146), 1e-3, 8, &set)?;
    let doubling = c.eps.iter().any(|e| (0.02..=0.146).contains(e)) && c.eps.windows(2).all(|w| w[1] > w[0]);
    detail.push(format!(
        "f_1^s ({}) splits at {:?}, period doublings at {:?} (periods {:?})",
        f1.kind.as_str(),
        c.splits,
        c.eps,
        c.periods
    ));
    Ok(Check {
        pass: pitchfork && f1.kind == OrbitKind::Sink && doubling,
        detail,
    })
}

fn main() {
    let picked: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, &str, fn() -> Result<Check>); 7] = [
        (1, "unperturbed integrability", c1),
        (2, "reversibility identities", c2),
        (3, "Henon oracle", c3),
        (4, "Jacobian landmarks", c4),
        (5, "crisis localization", c5),
        (6, "verdict timeline", c6),
        (7, "scenario events", c7),
    ];
    let (mut passed, mut failed) = (0, 0);
    for (n, name, run) in criteria {
        if !picked.is_empty() && !picked.contains(&n) {
            continue;
        }
        let check = run().unwrap_or_else(|e| Check::new(false, format!("error: {e}")));
        println!("criterion {n} {}: {name}", if check.pass { "PASS" } else { "FAIL" });
        for d in &check.detail {
            println!("    {d}");
        }
        if check.pass {
            passed += 1;
        } else {
            failed += 1;
        }
    }
    if picked.is_empty() || picked.contains(&8) {
        println!("criterion 8 REPORT: coexisting-sink census and later crises are not evaluated");
    }
    println!("acceptance: {passed} passed, {failed} failed");
}
