//! Run configuration: a TOML file with dotted sections, overridden by
//! `key=value` flags, resolved against defaults and validated as a whole.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::{Table, Value};

use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    output_dir: Option<PathBuf>,
    #[serde(default)]
    params: RawParams,
    #[serde(default)]
    integrator: RawIntegrator,
    #[serde(default)]
    portrait: RawPortrait,
    #[serde(default)]
    orbit: RawOrbit,
    #[serde(rename = "continue", default)]
    cont: RawContinue,
    #[serde(default)]
    cascade: RawCascade,
    #[serde(default)]
    manifold: RawManifold,
    #[serde(default)]
    crisis: RawCrisis,
    #[serde(default)]
    scenario: RawScenario,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    #[serde(rename = "A")]
    a: Option<f64>,
    kappa: Option<f64>,
    eps: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegrator {
    abs_tol: Option<f64>,
    rel_tol: Option<f64>,
    h_max: Option<f64>,
    max_steps: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPortrait {
    seeds: Option<Vec<[f64; 2]>>,
    n_transient: Option<usize>,
    n_samples: Option<usize>,
    resolution: Option<[usize; 2]>,
    window: Option<[f64; 4]>,
    lyapunov_iters: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOrbit {
    label: Option<String>,
    guess: Option<[f64; 2]>,
    period: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawContinue {
    range: Option<[f64; 2]>,
    step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCascade {
    range: Option<[f64; 2]>,
    step: Option<f64>,
    period_cap: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifold {
    side: Option<String>,
    branches: Option<Vec<String>>,
    arclength: Option<f64>,
    delta0: Option<f64>,
    delta_max: Option<f64>,
    alpha_max: Option<f64>,
    point_budget: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCrisis {
    pair: Option<String>,
    bracket: Option<[f64; 2]>,
    width: Option<f64>,
    scan_points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    eps: Option<Vec<f64>>,
    pitchfork_range: Option<[f64; 2]>,
    cascade_range: Option<[f64; 2]>,
    crisis_bracket: Option<[f64; 2]>,
    census_r: Option<[f64; 2]>,
    census_grid: Option<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub a: f64,
    pub kappa: f64,
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Integrator {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Portrait {
    pub seeds: Vec<[f64; 2]>,
    pub n_transient: usize,
    pub n_samples: usize,
    pub resolution: [usize; 2],
    /// `S_lo, S_hi, R_lo, R_hi`; fitted to the clouds when absent.
    pub window: Option<[f64; 4]>,
    pub lyapunov_iters: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Orbit {
    pub label: Option<String>,
    pub guess: Option<[f64; 2]>,
    pub period: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Continue {
    pub range: [f64; 2],
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cascade {
    pub range: [f64; 2],
    pub step: f64,
    pub period_cap: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifold {
    pub side: String,
    pub branches: Vec<String>,
    pub arclength: f64,
    pub delta0: f64,
    pub delta_max: f64,
    pub alpha_max: f64,
    pub point_budget: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Crisis {
    pub pair: String,
    pub bracket: [f64; 2],
    pub width: f64,
    pub scan_points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub eps: Vec<f64>,
    pub pitchfork_range: [f64; 2],
    pub cascade_range: [f64; 2],
    pub crisis_bracket: [f64; 2],
    pub census_r: [f64; 2],
    pub census_grid: [usize; 2],
}

/// Fully resolved configuration. Every field is echoed into the manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub params: Params,
    pub integrator: Integrator,
    pub portrait: Portrait,
    pub orbit: Orbit,
    pub cont: Continue,
    pub cascade: Cascade,
    pub manifold: Manifold,
    pub crisis: Crisis,
    pub scenario: Scenario,
}

/// Inserts `value` at a dotted `key` path, creating tables on the way.
fn insert_dotted(root: &mut Table, key: &str, value: Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Parse(format!("override `{key}`: empty key segment")));
    }
    let mut t = root;
    for p in &parts[..parts.len() - 1] {
        let entry = t.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        t = match entry {
            Value::Table(inner) => inner,
            _ => return Err(CliError::Parse(format!("override `{key}`: `{p}` is not a section"))),
        };
    }
    t.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Parses the right-hand side of a `key=value` override as a TOML value,
/// falling back to a bare string.
fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

/// Splits `key=value`.
pub fn parse_override(s: &str) -> Result<(String, Value), CliError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::Parse(format!("override `{s}` is not of the form key=value")))?;
    Ok((k.trim().to_string(), parse_value(v.trim())))
}

/// Reads `file` (if any), applies `overrides` in order, fills defaults and
/// validates the result. `params.eps` is required.
pub fn parse_config(file: Option<&Path>, overrides: &[(String, Value)]) -> Result<RunConfig, CliError> {
    parse_config_with(file, overrides, None)
}

/// As [`parse_config`], but a missing `params.eps` is taken from
/// `eps_fallback(&config)` when given.
pub fn parse_config_with(
    file: Option<&Path>,
    overrides: &[(String, Value)],
    eps_fallback: Option<fn(&RunConfig) -> f64>,
) -> Result<RunConfig, CliError> {
    let mut table = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
            text.parse::<Table>()
                .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?
        }
        None => Table::new(),
    };
    for (k, v) in overrides {
        insert_dotted(&mut table, k, v.clone())?;
    }
    let raw: RawConfig = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Parse(e.to_string()))?;
    let mut cfg = resolve(raw);
    if let (true, Some(f)) = (cfg.params.eps.is_nan(), eps_fallback) {
        cfg.params.eps = f(&cfg);
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn resolve(r: RawConfig) -> RunConfig {
    RunConfig {
        output_dir: r.output_dir.unwrap_or_else(|| PathBuf::from("out")),
        params: Params {
            a: r.params.a.unwrap_or(0.1),
            kappa: r.params.kappa.unwrap_or(4.65),
            eps: r.params.eps.unwrap_or(f64::NAN),
        },
        integrator: Integrator {
            abs_tol: r.integrator.abs_tol.unwrap_or(1e-10),
            rel_tol: r.integrator.rel_tol.unwrap_or(1e-10),
            h_max: r.integrator.h_max.unwrap_or(1.0),
            max_steps: r.integrator.max_steps.unwrap_or(100_000),
        },
        portrait: Portrait {
            seeds: r.portrait.seeds.unwrap_or_else(|| vec![[11.55, 3.5]]),
            n_transient: r.portrait.n_transient.unwrap_or(revmix::chaos::DEFAULT_TRANSIENT),
            n_samples: r.portrait.n_samples.unwrap_or(revmix::chaos::DEFAULT_SAMPLES),
            resolution: r.portrait.resolution.unwrap_or([revmix::chaos::DEFAULT_RESOLUTION; 2]),
            window: r.portrait.window,
            lyapunov_iters: r.portrait.lyapunov_iters.unwrap_or(0),
        },
        orbit: Orbit {
            label: r.orbit.label,
            guess: r.orbit.guess,
            period: r.orbit.period.unwrap_or(1),
        },
        cont: Continue {
            range: r.cont.range.unwrap_or([0.1, 0.12]),
            step: r.cont.step.unwrap_or(1e-3),
        },
        cascade: Cascade {
            range: r.cascade.range.unwrap_or([0.05, 0.146]),
            step: r.cascade.step.unwrap_or(1e-3),
            period_cap: r.cascade.period_cap.unwrap_or(16),
        },
        manifold: Manifold {
            side: r.manifold.side.unwrap_or_else(|| "unstable".into()),
            branches: r
                .manifold
                .branches
                .unwrap_or_else(|| vec!["plus".into(), "minus".into()]),
            arclength: r.manifold.arclength.unwrap_or(10.0),
            delta0: r.manifold.delta0.unwrap_or(1e-5),
            delta_max: r.manifold.delta_max.unwrap_or(5e-3),
            alpha_max: r.manifold.alpha_max.unwrap_or(0.3),
            point_budget: r.manifold.point_budget.unwrap_or(200_000),
        },
        crisis: Crisis {
            pair: r.crisis.pair.unwrap_or_else(|| "a1-s1pi".into()),
            bracket: r.crisis.bracket.unwrap_or([0.146, 0.1467]),
            width: r.crisis.width.unwrap_or(1e-5),
            scan_points: r.crisis.scan_points.unwrap_or(5),
        },
        scenario: Scenario {
            eps: r.scenario.eps.unwrap_or_else(|| vec![0.1463, 0.14815, 0.23]),
            pitchfork_range: r.scenario.pitchfork_range.unwrap_or([0.01, 0.015]),
            cascade_range: r.scenario.cascade_range.unwrap_or([0.05, 0.146]),
            crisis_bracket: r.scenario.crisis_bracket.unwrap_or([0.146, 0.1467]),
            census_r: r.scenario.census_r.unwrap_or([7.0, 12.0]),
            census_grid: r.scenario.census_grid.unwrap_or([6, 8]),
        },
    }
}

fn ordered(range: [f64; 2]) -> bool {
    range[0].is_finite() && range[1].is_finite() && range[0] < range[1]
}

fn validate(c: &RunConfig) -> Result<(), CliError> {
    let mut bad = Vec::new();
    let p = &c.params;
    if !p.eps.is_finite() {
        bad.push("params.eps is required".to_string());
    } else if p.eps < 0.0 {
        bad.push(format!("params.eps must be >= 0 (got {})", p.eps));
    }
    if !(p.kappa > 0.0) {
        bad.push(format!("params.kappa must be > 0 (got {})", p.kappa));
    }
    if !p.a.is_finite() {
        bad.push(format!("params.A must be finite (got {})", p.a));
    }
    let i = &c.integrator;
    if !(i.abs_tol > 0.0) {
        bad.push(format!("integrator.abs_tol must be > 0 (got {})", i.abs_tol));
    }
    if !(i.rel_tol > 0.0) {
        bad.push(format!("integrator.rel_tol must be > 0 (got {})", i.rel_tol));
    }
    if !(i.h_max > 0.0) {
        bad.push(format!("integrator.h_max must be > 0 (got {})", i.h_max));
    }
    if i.max_steps == 0 {
        bad.push("integrator.max_steps must be > 0".into());
    }
    let pt = &c.portrait;
    if pt.seeds.is_empty() {
        bad.push("portrait.seeds must not be empty".into());
    }
    if pt.seeds.iter().any(|s| !(s[0] > 0.0) || !s[1].is_finite()) {
        bad.push("portrait.seeds need R > 0 and finite S".into());
    }
    if pt.n_samples == 0 {
        bad.push("portrait.n_samples must be > 0".into());
    }
    if pt.resolution[0] < 16 || pt.resolution[1] < 16 {
        bad.push(format!("portrait.resolution must be at least 16x16 (got {:?})", pt.resolution));
    }
    if let Some(w) = pt.window {
        if !(ordered([w[0], w[1]]) && ordered([w[2], w[3]])) {
            bad.push(format!("portrait.window must satisfy S_lo < S_hi and R_lo < R_hi (got {w:?})"));
        }
    }
    if pt.lyapunov_iters != 0 && pt.lyapunov_iters < 1000 {
        bad.push(format!("portrait.lyapunov_iters must be 0 or >= 1000 (got {})", pt.lyapunov_iters));
    }
    if c.orbit.period == 0 {
        bad.push("orbit.period must be >= 1".into());
    }
    if let Some(g) = c.orbit.guess {
        if !(g[0] > 0.0) || !g[1].is_finite() {
            bad.push(format!("orbit.guess needs R > 0 and finite S (got {g:?})"));
        }
    }
    if let Some(l) = &c.orbit.label {
        if crate::catalog::lookup(l).is_none() {
            bad.push(format!("orbit.label `{l}` is not one of {}", crate::catalog::names().join(", ")));
        }
    }
    if !ordered(c.cont.range) {
        bad.push(format!("continue.range must be increasing (got {:?})", c.cont.range));
    }
    if !(c.cont.step > 0.0) {
        bad.push(format!("continue.step must be > 0 (got {})", c.cont.step));
    }
    if !ordered(c.cascade.range) {
        bad.push(format!("cascade.range must be increasing (got {:?})", c.cascade.range));
    }
    if !(c.cascade.step > 0.0) {
        bad.push(format!("cascade.step must be > 0 (got {})", c.cascade.step));
    }
    if c.cascade.period_cap < 2 {
        bad.push("cascade.period_cap must be >= 2".into());
    }
    let m = &c.manifold;
    if !matches!(m.side.as_str(), "stable" | "unstable") {
        bad.push(format!("manifold.side must be `stable` or `unstable` (got `{}`)", m.side));
    }
    if m.branches.is_empty() || m.branches.iter().any(|b| !matches!(b.as_str(), "plus" | "minus")) {
        bad.push(format!("manifold.branches must be a non-empty list of `plus`/`minus` (got {:?})", m.branches));
    }
    for (name, v) in [("arclength", m.arclength), ("delta0", m.delta0), ("delta_max", m.delta_max), ("alpha_max", m.alpha_max)] {
        if !(v > 0.0) {
            bad.push(format!("manifold.{name} must be > 0 (got {v})"));
        }
    }
    if m.delta0 > m.delta_max {
        bad.push(format!("manifold.delta0 must not exceed delta_max ({} > {})", m.delta0, m.delta_max));
    }
    if m.point_budget < 2 {
        bad.push("manifold.point_budget must be >= 2".into());
    }
    let cr = &c.crisis;
    if crate::catalog::pair(&cr.pair).is_none() {
        bad.push(format!("crisis.pair `{}` is not one of {}", cr.pair, crate::catalog::pair_names().join(", ")));
    }
    if !ordered(cr.bracket) {
        bad.push(format!("crisis.bracket must be increasing (got {:?})", cr.bracket));
    }
    if !(cr.width > 0.0) {
        bad.push(format!("crisis.width must be > 0 (got {})", cr.width));
    }
    if cr.scan_points < 2 {
        bad.push("crisis.scan_points must be >= 2".into());
    }
    let s = &c.scenario;
    if s.eps.iter().any(|e| !(*e >= 0.0)) {
        bad.push(format!("scenario.eps values must be >= 0 (got {:?})", s.eps));
    }
    for (name, r) in [
        ("pitchfork_range", s.pitchfork_range),
        ("cascade_range", s.cascade_range),
        ("crisis_bracket", s.crisis_bracket),
        ("census_r", s.census_r),
    ] {
        if !ordered(r) {
            bad.push(format!("scenario.{name} must be increasing (got {r:?})"));
        }
    }
    if s.census_grid[0] == 0 || s.census_grid[1] == 0 {
        bad.push(format!("scenario.census_grid must be positive (got {:?})", s.census_grid));
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(bad))
    }
}

impl RunConfig {
    pub fn vortex_params(&self) -> revmix::Result<revmix::VortexParams64> {
        revmix::VortexParams64::new(self.params.a, self.params.kappa, self.params.eps)
    }

    pub fn integrator_config(&self) -> revmix::IntegratorConfig64 {
        revmix::IntegratorConfig64 {
            abs_tol: self.integrator.abs_tol,
            rel_tol: self.integrator.rel_tol,
            h_init: None,
            h_max: self.integrator.h_max,
            max_steps: self.integrator.max_steps,
        }
    }

    /// Every resolved field as `key = value` lines, in a fixed order.
    pub fn manifest_entries(&self) -> Vec<(String, String)> {
        let f = crate::output::num;
        let pair = |r: [f64; 2]| format!("{}:{}", f(r[0]), f(r[1]));
        let mut v: Vec<(String, String)> = vec![
            ("output_dir".into(), self.output_dir.display().to_string()),
            ("params.A".into(), f(self.params.a)),
            ("params.kappa".into(), f(self.params.kappa)),
            ("params.eps".into(), f(self.params.eps)),
            ("integrator.abs_tol".into(), f(self.integrator.abs_tol)),
            ("integrator.rel_tol".into(), f(self.integrator.rel_tol)),
            ("integrator.h_max".into(), f(self.integrator.h_max)),
            ("integrator.max_steps".into(), self.integrator.max_steps.to_string()),
        ];
        let seeds: Vec<String> = self.portrait.seeds.iter().map(|s| pair(*s)).collect();
        v.push(("portrait.seeds".into(), seeds.join(" ")));
        v.push(("portrait.n_transient".into(), self.portrait.n_transient.to_string()));
        v.push(("portrait.n_samples".into(), self.portrait.n_samples.to_string()));
        v.push((
            "portrait.resolution".into(),
            format!("{}x{}", self.portrait.resolution[0], self.portrait.resolution[1]),
        ));
        v.push((
            "portrait.window".into(),
            match self.portrait.window {
                Some(w) => w.iter().map(|x| f(*x)).collect::<Vec<_>>().join(" "),
                None => "auto".into(),
            },
        ));
        v.push(("portrait.lyapunov_iters".into(), self.portrait.lyapunov_iters.to_string()));
        v.push(("orbit.label".into(), self.orbit.label.clone().unwrap_or_else(|| "none".into())));
        v.push((
            "orbit.guess".into(),
            self.orbit.guess.map(pair).unwrap_or_else(|| "none".into()),
        ));
        v.push(("orbit.period".into(), self.orbit.period.to_string()));
        v.push(("continue.range".into(), pair(self.cont.range)));
        v.push(("continue.step".into(), f(self.cont.step)));
        v.push(("cascade.range".into(), pair(self.cascade.range)));
        v.push(("cascade.step".into(), f(self.cascade.step)));
        v.push(("cascade.period_cap".into(), self.cascade.period_cap.to_string()));
        let m = &self.manifold;
        v.push(("manifold.side".into(), m.side.clone()));
        v.push(("manifold.branches".into(), m.branches.join(" ")));
        v.push(("manifold.arclength".into(), f(m.arclength)));
        v.push(("manifold.delta0".into(), f(m.delta0)));
        v.push(("manifold.delta_max".into(), f(m.delta_max)));
        v.push(("manifold.alpha_max".into(), f(m.alpha_max)));
        v.push(("manifold.point_budget".into(), m.point_budget.to_string()));
        v.push(("crisis.pair".into(), self.crisis.pair.clone()));
        v.push(("crisis.bracket".into(), pair(self.crisis.bracket)));
        v.push(("crisis.width".into(), f(self.crisis.width)));
        v.push(("crisis.scan_points".into(), self.crisis.scan_points.to_string()));
        let s = &self.scenario;
        v.push((
            "scenario.eps".into(),
            s.eps.iter().map(|x| f(*x)).collect::<Vec<_>>().join(" "),
        ));
        v.push(("scenario.pitchfork_range".into(), pair(s.pitchfork_range)));
        v.push(("scenario.cascade_range".into(), pair(s.cascade_range)));
        v.push(("scenario.crisis_bracket".into(), pair(s.crisis_bracket)));
        v.push(("scenario.census_r".into(), pair(s.census_r)));
        v.push((
            "scenario.census_grid".into(),
            format!("{}x{}", s.census_grid[0], s.census_grid[1]),
        ));
        v
    }
}
