//! Subcommand pipelines. Each writes its artifacts through [`Outputs`] and
//! returns human-readable summary lines.

use std::f64::consts::TAU;

use rayon::prelude::*;
use revmix::chaos::{
    classify_dynamics, grid_occupancy, lyapunov_of, sample_orbit, symmetric_core_check, Cloud, CoreMembership,
    DynamicsVerdict, OccupancyGrid, Window,
};
use revmix::manifolds::{detect_crisis, grow_manifold, Branch, CrisisSettings, ManifoldSettings, ManifoldSide};
use revmix::orbits::{
    continue_branch, detect_cascade, find_periodic_point, ContinuationSettings, FixedPointRecord, MapFamily,
    OrbitKind, OrbitTolerances, VortexFamily,
};
use revmix::scalar::wrap_angle;
use revmix::{induced_involution, PlanarMap, SectionPoint64, VortexMap64};

use crate::catalog;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{self, num, EventRow, Outputs};

pub const COMMANDS: &[&str] = &["portrait", "fixed-point", "continue", "cascade", "manifold", "crisis", "scenario"];

fn family(cfg: &RunConfig) -> Result<VortexFamily<f64>, CliError> {
    Ok(VortexFamily::new(cfg.vortex_params()?, cfg.integrator_config()))
}

/// The orbit named by `orbit.label` or seeded by `orbit.guess`, at `eps`.
fn locate_orbit(cfg: &RunConfig, eps: f64) -> Result<FixedPointRecord<f64>, CliError> {
    let fam = family(cfg)?;
    if let Some(label) = &cfg.orbit.label {
        let e = catalog::lookup(label).ok_or_else(|| CliError::Validation(vec![format!("unknown label `{label}`")]))?;
        return Ok(catalog::locate(e, eps, &fam, cfg.cont.step)?);
    }
    let g = cfg
        .orbit
        .guess
        .ok_or_else(|| CliError::Validation(vec!["orbit.label or orbit.guess is required".into()]))?;
    let map = fam.at(eps)?;
    let r = find_periodic_point(&map, [g[0], wrap_angle(g[1])], cfg.orbit.period, eps, &OrbitTolerances::default())?;
    Ok(r.with_label("guess"))
}

/// Attractor/repeller verdict for one seed.
pub struct SeedVerdict {
    pub seed: [f64; 2],
    pub attractor: Cloud<f64>,
    pub repeller: Cloud<f64>,
    pub grids: (OccupancyGrid<f64>, OccupancyGrid<f64>),
    pub verdict: DynamicsVerdict,
    pub lyapunov: Option<f64>,
}

/// Forward orbit from `seed`, backward orbit from its involution image,
/// both binned over the configured (or fitted) window.
pub fn seed_verdict(cfg: &RunConfig, map: &VortexMap64, seed: [f64; 2]) -> Result<SeedVerdict, CliError> {
    let pc = &cfg.portrait;
    let x0 = SectionPoint64::new(seed[0], wrap_angle(seed[1]));
    let (attractor, repeller) = rayon::join(
        || sample_orbit(map, x0.to_array(), pc.n_transient, pc.n_samples, false),
        || sample_orbit(map, induced_involution(x0).to_array(), pc.n_transient, pc.n_samples, true),
    );
    let window = match pc.window {
        Some(w) => Window::new(w[0], w[1], w[2], w[3]),
        None => Window::fit(&[&attractor, &repeller], 0.05).ok_or_else(|| {
            CliError::Core(
                attractor
                    .escaped
                    .clone()
                    .unwrap_or(revmix::Error::InvalidParameter("empty clouds".into())),
            )
        })?,
    };
    let res = (pc.resolution[0], pc.resolution[1]);
    let ga = grid_occupancy(&attractor, window, res)?;
    let gr = grid_occupancy(&repeller, window, res)?;
    let verdict = classify_dynamics(&ga, &gr)?;
    let lyapunov = match (pc.lyapunov_iters, attractor.points.last()) {
        (0, _) | (_, None) => None,
        (n, Some(&x)) => lyapunov_of(map, x, n).ok(),
    };
    Ok(SeedVerdict {
        seed,
        attractor,
        repeller,
        grids: (ga, gr),
        verdict,
        lyapunov,
    })
}

const VERDICT_HEADER: &str = "seed,R0,S0,kind,jaccard,thinness,shared_cells,attractor_cells,repeller_cells,attractor_escaped,repeller_escaped,attractor_transient,repeller_transient,lambda1";

fn verdict_row(k: usize, v: &SeedVerdict) -> String {
    let d = &v.verdict;
    format!(
        "{k},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        num(v.seed[0]),
        num(v.seed[1]),
        d.kind.as_str(),
        num(d.jaccard),
        num(d.thinness),
        d.shared_cells,
        d.attractor_cells,
        d.repeller_cells,
        v.attractor.escaped.is_some(),
        v.repeller.escaped.is_some(),
        v.attractor.possibly_transient,
        v.repeller.possibly_transient,
        v.lyapunov.map(num).unwrap_or_else(|| "nan".into())
    )
}

fn core_rows(k: usize, rep: &[CoreMembership<f64>]) -> String {
    rep.iter()
        .map(|c| {
            format!(
                "{k},{},{},{},{},{},{}\n",
                c.label,
                num(c.point[0]),
                num(c.point[1]),
                c.in_attractor,
                c.in_repeller,
                c.in_core
            )
        })
        .collect()
}

/// Symmetric saddles reached by Newton from the catalogue seeds at the run's ε.
fn symmetric_saddles(cfg: &RunConfig) -> (Vec<FixedPointRecord<f64>>, Vec<String>) {
    let map = match family(cfg).and_then(|f| Ok(f.at(cfg.params.eps)?)) {
        Ok(m) => m,
        Err(e) => return (Vec::new(), vec![format!("no map: {e}")]),
    };
    let mut found: Vec<FixedPointRecord<f64>> = Vec::new();
    let mut notes = Vec::new();
    for e in catalog::ENTRIES {
        match find_periodic_point(&map, e.point, e.period, cfg.params.eps, &OrbitTolerances::default()) {
            Ok(r) if r.symmetric && r.kind == OrbitKind::Saddle => {
                if !found.iter().any(|f| map.distance(f.point, r.point) < 1e-6) {
                    found.push(r.with_label(e.label));
                }
            }
            Ok(_) => {}
            Err(err) => notes.push(format!("{}: {err}", e.label)),
        }
    }
    (found, notes)
}

pub fn portrait(cfg: &RunConfig, out: &mut Outputs) -> Result<Vec<String>, CliError> {
    let map = VortexMap64::new(cfg.vortex_params()?, cfg.integrator_config());
    let results: Vec<Result<SeedVerdict, CliError>> = cfg
        .portrait
        .seeds
        .par_iter()
        .map(|&s| seed_verdict(cfg, &map, s))
        .collect();
    let (saddles, notes) = symmetric_saddles(cfg);
    let mut verdicts = format!("{VERDICT_HEADER}\n");
    let mut core = String::from("seed,label,R,S,in_attractor,in_repeller,in_core\n");
    let mut lines = Vec::new();
    let mut series = Vec::new();
    let mut failures = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        let v = match r {
            Ok(v) => v,
            Err(e) => {
                failures.push(format!("seed {k}: {e}"));
                continue;
            }
        };
        out.write(&format!("attractor_{k}.csv"), &output::cloud_csv(&v.attractor.points))?;
        out.write(&format!("repeller_{k}.csv"), &output::cloud_csv(&v.repeller.points))?;
        out.write(&format!("attractor_{k}.grid"), &output::grid_rle(&v.grids.0))?;
        out.write(&format!("repeller_{k}.grid"), &output::grid_rle(&v.grids.1))?;
        series.push((format!("attractor_{k}.csv"), format!("attractor {k}")));
        series.push((format!("repeller_{k}.csv"), format!("repeller {k}")));
        verdicts.push_str(&verdict_row(k, &v));
        verdicts.push('\n');
        let rep = symmetric_core_check(&v.grids.0, &v.grids.1, &saddles)?;
        core.push_str(&core_rows(k, &rep));
        lines.push(format!(
            "seed {k} ({}, {}): {} (jaccard {:.4}, thinness {:.4}, shared cells {})",
            v.seed[0],
            v.seed[1],
            v.verdict.kind.as_str(),
            v.verdict.jaccard,
            v.verdict.thinness,
            v.verdict.shared_cells
        ));
    }
    out.write("verdict.csv", &verdicts)?;
    out.write("core.csv", &core)?;
    let refs: Vec<(&str, &str, &str)> = series.iter().map(|(f, t)| (f.as_str(), "3:2", t.as_str())).collect();
    out.write("portrait.gp", &output::plot_script(&format!("eps = {}", cfg.params.eps), &refs))?;
    lines.extend(notes.into_iter().map(|n| format!("note: {n}")));
    if failures.is_empty() {
        Ok(lines)
    } else {
        Err(CliError::Stages(failures))
    }
}

pub fn fixed_point(cfg: &RunConfig, out: &mut Outputs) -> Result<Vec<String>, CliError> {
    let r = locate_orbit(cfg, cfg.params.eps)?;
    out.write("fixed_point.csv", &output::branch_csv(std::slice::from_ref(&r)))?;
    let mut lines = vec![format!(
        "{} at eps {}: R = {}, S = {}, kind {}, det {}, symmetric {}",
        r.label,
        r.param,
        r.point[0],
        r.point[1],
        r.kind.as_str(),
        r.det,
        r.symmetric
    )];
    lines.extend(r.diagnostics.iter().map(|d| format!("diagnostic: {d}")));
    Ok(lines)
}

pub fn continuation(cfg: &RunConfig, out: &mut Outputs) -> Result<Vec<String>, CliError> {
    let fam = family(cfg)?;
    let [a, b] = cfg.cont.range;
    let start = locate_orbit(cfg, a)?;
    let c = continue_branch(&fam, &start, (a, b), cfg.cont.step, &ContinuationSettings::default())?;
    out.write("branch.csv", &output::branch_csv(&c.branch))?;
    let rows: Vec<EventRow> = c.events.iter().map(EventRow::from_bifurcation).collect();
    out.write("events.csv", &output::events_csv(&rows))?;
    let offspring: Vec<FixedPointRecord<f64>> = c.events.iter().flat_map(|e| e.offspring.clone()).collect();
    out.write("offspring.csv", &output::branch_csv(&offspring))?;
    out.write(
        "continue.gp",
        &format!(
            "set datafile separator \",\"\nset xlabel \"eps\"\nset ylabel \"R\"\nplot \"branch.csv\" every ::1 using 1:2 with linespoints title \"{}\"\n",
            start.label
        ),
    )?;
    let mut lines = vec![format!("{} points from eps {a} to {}", c.branch.len(), c.branch.last().map_or(a, |r| r.param))];
    for e in &c.events {
        lines.push(format!("{} at eps {} ({} offspring)", e.kind.as_str(), e.eps_star, e.offspring.len()));
    }
    match c.lost {
        Some(e) => Err(CliError::Stages(vec![e.to_string()])),
        None => Ok(lines),
    }
}

pub fn cascade(cfg: &RunConfig, out: &mut Outputs) -> Result<Vec<String>, CliError> {
    let fam = family(cfg)?;
    let [a, b] = cfg.cascade.range;
    let start = locate_orbit(cfg, a)?;
    let c = detect_cascade(&fam, &start, (a, b), cfg.cascade.step, cfg.cascade.period_cap, &ContinuationSettings::default())?;
    let mut rows: Vec<EventRow> = c
        .splits
        .iter()
        .map(|&e| EventRow::new(e, "split", start.label.clone()))
        .chain(
            c.eps
                .iter()
                .zip(&c.periods)
                .map(|(&e, &p)| EventRow::new(e, "period_doubling", format!("{} period {p}", start.label))),
        )
        .collect();
    rows.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    out.write("events.csv", &output::events_csv(&rows))?;
    let mut txt = String::new();
    for r in &c.ratios {
        txt.push_str(&format!("ratio = {}\n", num(*r)));
    }
    txt.push_str(&format!("stop_reason = {}\n", c.stop_reason));
    out.write("cascade.txt", &txt)?;
    let mut lines: Vec<String> = rows.iter().map(|r| format!("{} at eps {} ({})", r.kind, r.eps, r.label)).collect();
    lines.push(format!("stopped: {}", c.stop_reason));
    Ok(lines)
}

fn manifold_settings(cfg: &RunConfig) -> ManifoldSettings<f64> {
    let m = &cfg.manifold;
    ManifoldSettings {
        delta0: m.delta0,
        delta_max: m.delta_max,
        alpha_max: m.alpha_max,
        arclength: m.arclength,
        point_budget: m.point_budget,
        ..ManifoldSettings::default()
    }
}

pub fn manifold(cfg: &RunConfig, out: &mut Outputs) -> Result<Vec<String>, CliError> {
    let map = VortexMap64::new(cfg.vortex_params()?, cfg.integrator_config());
    let saddle = locate_orbit(cfg, cfg.params.eps)?;
    let side = if cfg.manifold.side == "stable" {
        ManifoldSide::Stable
    } else {
        ManifoldSide::Unstable
    };
    let set = manifold_settings(cfg);
    let mut lines = Vec::new();
    let mut series = Vec::new();
    for b in &cfg.manifold.branches {
        let branch = if b == "minus" { Branch::Minus } else { Branch::Plus };
        let w = grow_manifold(&map, &saddle, side, branch, &set)?;
        let name = format!("manifold_{}_{b}.csv", cfg.manifold.side);
        let mut csv = String::from("arclength,R,S\n");
        for (p, s) in w.points.iter().zip(&w.arclength) {
            csv.push_str(&format!("{},{},{}\n", num(*s), num(p[0]), num(map.normalize(*p)[1])));
        }
        out.write(&name, &csv)?;
        lines.push(format!(
            "{} {b}: {} points, arclength {}, truncated {}, collapsed {}, unrefined {}{}",
            cfg.manifold.side,
            w.len(),
            w.total_arclength(),
            w.truncated,
            w.collapsed,
            w.unrefined,
            w.stopped_by.as_ref().map(|e| format!(", stopped by {e}")).unwrap_or_default()
        ));
        series.push((name, format!("{} {b}", cfg.manifold.side)));
    }
    let refs: Vec<(&str, &str, &str)> = series.iter().map(|(f, t)| (f.as_str(), "3:2", t.as_str())).collect();
    out.write("manifold.gp", &output::plot_script(&saddle.label, &refs))?;
    Ok(lines)
}

fn crisis_settings(cfg: &RunConfig) -> CrisisSettings<f64> {
    CrisisSettings {
        manifold: manifold_settings(cfg),
        width: cfg.crisis.width,
        scan_points: cfg.crisis.scan_points,
        ..CrisisSettings::default()
    }
}

fn run_crisis(cfg: &RunConfig, bracket: [f64; 2]) -> Result<revmix::manifolds::CrisisResult<f64>, CliError> {
    let fam = family(cfg)?;
    let mid = 0.5 * (bracket[0] + bracket[1]);
    let (u, s) = catalog::crisis_specs(&cfg.crisis.pair, mid, &fam)?;
    Ok(detect_crisis(&fam, (&u, &s), (bracket[0], bracket[1]), &crisis_settings(cfg))?)
}

pub fn crisis(cfg: &RunConfig, out: &mut Outputs) -> Result<Vec<String>, CliError> {
    let r = run_crisis(cfg, cfg.crisis.bracket)?;
    let mut probes = String::from("eps,intersects,crossings\n");
    for p in &r.probes {
        probes.push_str(&format!("{},{},{}\n", num(p.param), p.intersects, p.crossings));
    }
    out.write("probes.csv", &probes)?;
    out.write(
        "events.csv",
        &output::events_csv(&[EventRow::new(r.eps_star, "crisis", cfg.crisis.pair.clone())]),
    )?;
    let mut txt = format!(
        "eps_star = {}\nbracket_lo = {}\nbracket_hi = {}\n",
        num(r.eps_star),
        num(r.bracket.0),
        num(r.bracket.1)
    );
    for d in &r.diagnostics {
        txt.push_str(&format!("diagnostic = {d}\n"));
    }
    out.write("crisis.txt", &txt)?;
    let mut lines = vec![format!("{} crisis at eps {} (bracket {}..{})", cfg.crisis.pair, r.eps_star, r.bracket.0, r.bracket.1)];
    lines.extend(r.diagnostics.iter().map(|d| format!("diagnostic: {d}")));
    Ok(lines)
}

/// Distinct period-1 points found by Newton from a seed lattice at `eps`.
fn census(cfg: &RunConfig, eps: f64) -> Result<Vec<FixedPointRecord<f64>>, CliError> {
    let map = family(cfg)?.at(eps)?;
    let [r0, r1] = cfg.scenario.census_r;
    let [nr, ns] = cfg.scenario.census_grid;
    let seeds: Vec<[f64; 2]> = (0..nr)
        .flat_map(|i| {
            (0..ns).map(move |j| {
                [
                    r0 + (r1 - r0) * (i as f64 + 0.5) / nr as f64,
                    TAU * (j as f64 + 0.5) / ns as f64,
                ]
            })
        })
        .collect();
    let tol = OrbitTolerances::default();
    let found: Vec<FixedPointRecord<f64>> = seeds
        .par_iter()
        .filter_map(|&s| find_periodic_point(&map, s, 1, eps, &tol).ok())
        .filter(|r| r.point[0] >= r0 && r.point[0] <= r1)
        .collect();
    let mut distinct: Vec<FixedPointRecord<f64>> = Vec::new();
    for r in found {
        if !distinct.iter().any(|d| map.distance(d.point, r.point) < 1e-6) {
            distinct.push(r);
        }
    }
    distinct.sort_by(|a, b| a.point[0].total_cmp(&b.point[0]).then(a.point[1].total_cmp(&b.point[1])));
    Ok(distinct)
}

pub fn scenario(cfg: &RunConfig, out: &mut Outputs) -> Result<Vec<String>, CliError> {
    let mut events: Vec<EventRow> = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    let mut lines = Vec::new();

    let per_eps: Vec<(f64, Result<(Vec<SeedVerdict>, Vec<FixedPointRecord<f64>>), CliError>)> = cfg
        .scenario
        .eps
        .par_iter()
        .map(|&e| {
            let mut c = cfg.clone();
            c.params.eps = e;
            let run = || -> Result<_, CliError> {
                let map = VortexMap64::new(c.vortex_params()?, c.integrator_config());
                let vs = c
                    .portrait
                    .seeds
                    .iter()
                    .map(|&s| seed_verdict(&c, &map, s))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((vs, census(&c, e)?))
            };
            (e, run())
        })
        .collect();
    let mut verdicts = format!("eps,{VERDICT_HEADER}\n");
    let mut census_csv = String::from(output::BRANCH_HEADER);
    census_csv.push('\n');
    for (e, r) in &per_eps {
        match r {
            Ok((vs, found)) => {
                for (k, v) in vs.iter().enumerate() {
                    verdicts.push_str(&format!("{},{}\n", num(*e), verdict_row(k, v)));
                    events.push(EventRow::new(*e, format!("verdict_{}", v.verdict.kind.as_str()), format!("seed {k}")));
                    lines.push(format!("eps {e} seed {k}: {}", v.verdict.kind.as_str()));
                }
                let count = |k: OrbitKind| found.iter().filter(|r| r.kind == k).count();
                let label = format!(
                    "sinks {} sources {} saddles {} elliptic {} unresolved {}",
                    count(OrbitKind::Sink),
                    count(OrbitKind::Source),
                    count(OrbitKind::Saddle),
                    count(OrbitKind::Elliptic),
                    count(OrbitKind::Unresolved)
                );
                lines.push(format!("eps {e} census: {label}"));
                events.push(EventRow::new(*e, "census", label));
                census_csv.push_str(&output::branch_csv(found).lines().skip(1).map(|l| format!("{l}\n")).collect::<String>());
            }
            Err(err) => failures.push(format!("eps {e}: {err}")),
        }
    }

    let sc = &cfg.scenario;
    let fam = family(cfg)?;
    let set = ContinuationSettings::default();
    let e2 = catalog::lookup("e2").expect("catalogued");
    match catalog::locate(e2, sc.pitchfork_range[0], &fam, 1e-3)
        .and_then(|s| continue_branch(&fam, &s, (sc.pitchfork_range[0], sc.pitchfork_range[1]), 5e-4, &set))
    {
        Ok(c) => {
            for ev in &c.events {
                events.push(EventRow::from_bifurcation(ev));
                lines.push(format!("e2: {} at eps {}", ev.kind.as_str(), ev.eps_star));
            }
            if let Some(e) = c.lost {
                failures.push(format!("e2 continuation: {e}"));
            }
        }
        Err(e) => failures.push(format!("e2 continuation: {e}")),
    }
    let f1 = catalog::lookup("f1s").expect("catalogued");
    match catalog::locate(f1, sc.cascade_range[0], &fam, 1e-3)
        .and_then(|s| detect_cascade(&fam, &s, (sc.cascade_range[0], sc.cascade_range[1]), 1e-3, 8, &set))
    {
        Ok(c) => {
            for e in &c.splits {
                events.push(EventRow::new(*e, "split", "f1s"));
                lines.push(format!("f1s: +1 split at eps {e}"));
            }
            for (e, p) in c.eps.iter().zip(&c.periods) {
                events.push(EventRow::new(*e, "period_doubling", format!("f1s period {p}")));
                lines.push(format!("f1s: period doubling of period {p} at eps {e}"));
            }
            lines.push(format!("f1s cascade stopped: {}", c.stop_reason));
        }
        Err(e) => failures.push(format!("f1s cascade: {e}")),
    }
    match run_crisis(cfg, sc.crisis_bracket) {
        Ok(r) => {
            events.push(EventRow::new(r.eps_star, "crisis", cfg.crisis.pair.clone()));
            lines.push(format!("{} crisis at eps {}", cfg.crisis.pair, r.eps_star));
            lines.extend(r.diagnostics.iter().map(|d| format!("crisis diagnostic: {d}")));
        }
        Err(e) => failures.push(format!("crisis {}: {e}", cfg.crisis.pair)),
    }

    events.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    out.write("events.csv", &output::events_csv(&events))?;
    out.write("scenario_verdicts.csv", &verdicts)?;
    out.write("census.csv", &census_csv)?;
    let mut diag = String::new();
    for f in &failures {
        diag.push_str(&format!("failure = {f}\n"));
    }
    out.write("diagnostics.txt", &diag)?;
    if failures.is_empty() {
        Ok(lines)
    } else {
        for l in &lines {
            eprintln!("{l}");
        }
        Err(CliError::Stages(failures))
    }
}
