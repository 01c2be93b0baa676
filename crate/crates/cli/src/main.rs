use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use revmix_cli::output::{manifest, write_file, Outputs};
use revmix_cli::{commands, parse_config_with, parse_override, CliError, RunConfig};
use toml::Value;

#[derive(Parser, Debug)]
#[command(name = "revmix", version, about = "Poincaré-map experiments for a reversible two-vortex flow")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    eps: Option<f64>,
    #[arg(long = "A", global = true, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    kappa: Option<f64>,
    #[arg(long, short, global = true)]
    output_dir: Option<PathBuf>,
    /// Dotted override such as `integrator.abs_tol=1e-12` (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct OrbitArgs {
    /// Catalogue label (e2, f2s, f2u, f1s, s1pi, a1, r1).
    #[arg(long)]
    label: Option<String>,
    /// Newton seed `R,S`.
    #[arg(long, value_name = "R,S")]
    guess: Option<String>,
    #[arg(long)]
    period: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample attractor and repeller, write clouds, grids and verdicts.
    Portrait {
        /// Seed `R,S` (repeatable).
        #[arg(long = "seed", value_name = "R,S")]
        seeds: Vec<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        transient: Option<usize>,
        #[arg(long, value_name = "NS,NR")]
        resolution: Option<String>,
    },
    /// Newton solve for a fixed or periodic point.
    FixedPoint {
        #[command(flatten)]
        orbit: OrbitArgs,
    },
    /// Continue a fixed point in eps and report bifurcations.
    Continue {
        #[command(flatten)]
        orbit: OrbitArgs,
        #[arg(long, value_name = "LO:HI")]
        range: Option<String>,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Follow successive period doublings.
    Cascade {
        #[command(flatten)]
        orbit: OrbitArgs,
        #[arg(long, value_name = "LO:HI")]
        range: Option<String>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        period_cap: Option<usize>,
    },
    /// Grow stable or unstable manifold branches of a saddle.
    Manifold {
        #[command(flatten)]
        orbit: OrbitArgs,
        #[arg(long)]
        side: Option<String>,
        /// `plus` or `minus` (repeatable).
        #[arg(long = "branch")]
        branches: Vec<String>,
        #[arg(long)]
        arclength: Option<f64>,
    },
    /// Locate the first manifold intersection of a saddle pair in eps.
    Crisis {
        #[arg(long)]
        pair: Option<String>,
        #[arg(long, value_name = "LO:HI")]
        bracket: Option<String>,
        #[arg(long)]
        width: Option<f64>,
    },
    /// Full eps sweep: verdicts, census, pitchfork, cascade and crisis events.
    Scenario {
        /// Comma-separated eps values for verdicts and census.
        #[arg(long, value_name = "E1,E2,...")]
        at: Option<String>,
    },
}

fn list(s: &str, sep: char) -> Result<Vec<f64>, CliError> {
    s.split(sep)
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Parse(format!("`{s}`: `{t}` is not a number")))
        })
        .collect()
}

fn pair(s: &str, sep: char) -> Result<Value, CliError> {
    let v = list(s, sep)?;
    if v.len() != 2 {
        return Err(CliError::Parse(format!("`{s}`: expected two values separated by `{sep}`")));
    }
    Ok(Value::Array(v.into_iter().map(Value::Float).collect()))
}

fn orbit_overrides(o: &OrbitArgs, out: &mut Vec<(String, Value)>) -> Result<(), CliError> {
    if let Some(l) = &o.label {
        out.push(("orbit.label".into(), Value::String(l.clone())));
    }
    if let Some(g) = &o.guess {
        out.push(("orbit.guess".into(), pair(g, ',')?));
    }
    if let Some(p) = o.period {
        out.push(("orbit.period".into(), Value::Integer(p as i64)));
    }
    Ok(())
}

fn overrides(cli: &Cli) -> Result<Vec<(String, Value)>, CliError> {
    let mut v = Vec::new();
    for s in &cli.sets {
        v.push(parse_override(s)?);
    }
    if let Some(e) = cli.eps {
        v.push(("params.eps".into(), Value::Float(e)));
    }
    if let Some(a) = cli.a {
        v.push(("params.A".into(), Value::Float(a)));
    }
    if let Some(k) = cli.kappa {
        v.push(("params.kappa".into(), Value::Float(k)));
    }
    if let Some(d) = &cli.output_dir {
        v.push(("output_dir".into(), Value::String(d.display().to_string())));
    }
    let int = |n: usize| Value::Integer(n as i64);
    match &cli.command {
        Command::Portrait {
            seeds,
            samples,
            transient,
            resolution,
        } => {
            if !seeds.is_empty() {
                let arr = seeds.iter().map(|s| pair(s, ',')).collect::<Result<Vec<_>, _>>()?;
                v.push(("portrait.seeds".into(), Value::Array(arr)));
            }
            if let Some(n) = samples {
                v.push(("portrait.n_samples".into(), int(*n)));
            }
            if let Some(n) = transient {
                v.push(("portrait.n_transient".into(), int(*n)));
            }
            if let Some(r) = resolution {
                let Value::Array(a) = pair(r, ',')? else { unreachable!() };
                let ints = a.iter().map(|x| int(x.as_float().unwrap_or(0.0) as usize)).collect();
                v.push(("portrait.resolution".into(), Value::Array(ints)));
            }
        }
        Command::FixedPoint { orbit } => orbit_overrides(orbit, &mut v)?,
        Command::Continue { orbit, range, step } => {
            orbit_overrides(orbit, &mut v)?;
            if let Some(r) = range {
                v.push(("continue.range".into(), pair(r, ':')?));
            }
            if let Some(s) = step {
                v.push(("continue.step".into(), Value::Float(*s)));
            }
        }
        Command::Cascade {
            orbit,
            range,
            step,
            period_cap,
        } => {
            orbit_overrides(orbit, &mut v)?;
            if let Some(r) = range {
                v.push(("cascade.range".into(), pair(r, ':')?));
            }
            if let Some(s) = step {
                v.push(("cascade.step".into(), Value::Float(*s)));
            }
            if let Some(p) = period_cap {
                v.push(("cascade.period_cap".into(), int(*p)));
            }
        }
        Command::Manifold {
            orbit,
            side,
            branches,
            arclength,
        } => {
            orbit_overrides(orbit, &mut v)?;
            if let Some(s) = side {
                v.push(("manifold.side".into(), Value::String(s.clone())));
            }
            if !branches.is_empty() {
                let arr = branches.iter().map(|b| Value::String(b.clone())).collect();
                v.push(("manifold.branches".into(), Value::Array(arr)));
            }
            if let Some(l) = arclength {
                v.push(("manifold.arclength".into(), Value::Float(*l)));
            }
        }
        Command::Crisis { pair: p, bracket, width } => {
            if let Some(p) = p {
                v.push(("crisis.pair".into(), Value::String(p.clone())));
            }
            if let Some(b) = bracket {
                v.push(("crisis.bracket".into(), pair(b, ':')?));
            }
            if let Some(w) = width {
                v.push(("crisis.width".into(), Value::Float(*w)));
            }
        }
        Command::Scenario { at } => {
            if let Some(a) = at {
                let arr = list(a, ',')?.into_iter().map(Value::Float).collect();
                v.push(("scenario.eps".into(), Value::Array(arr)));
            }
        }
    }
    Ok(v)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Portrait { .. } => "portrait",
        Command::FixedPoint { .. } => "fixed-point",
        Command::Continue { .. } => "continue",
        Command::Cascade { .. } => "cascade",
        Command::Manifold { .. } => "manifold",
        Command::Crisis { .. } => "crisis",
        Command::Scenario { .. } => "scenario",
    }
}

/// Anchor ε for commands whose own ranges make `params.eps` optional.
fn eps_anchor(c: &Command) -> Option<fn(&RunConfig) -> f64> {
    match c {
        Command::Continue { .. } => Some(|c| c.cont.range[0]),
        Command::Cascade { .. } => Some(|c| c.cascade.range[0]),
        Command::Crisis { .. } => Some(|c| 0.5 * (c.crisis.bracket[0] + c.crisis.bracket[1])),
        Command::Scenario { .. } => Some(|c| c.scenario.eps.first().copied().unwrap_or(0.0)),
        _ => None,
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("REVMIX_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(vec![format!("REVMIX_THREADS must be a positive integer (got `{raw}`)")]))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Parse(format!("thread pool: {e}")))
}

fn run(cli: &Cli, cfg: &RunConfig, out: &mut Outputs) -> Result<Vec<String>, CliError> {
    match cli.command {
        Command::Portrait { .. } => commands::portrait(cfg, out),
        Command::FixedPoint { .. } => commands::fixed_point(cfg, out),
        Command::Continue { .. } => commands::continuation(cfg, out),
        Command::Cascade { .. } => commands::cascade(cfg, out),
        Command::Manifold { .. } => commands::manifold(cfg, out),
        Command::Crisis { .. } => commands::crisis(cfg, out),
        Command::Scenario { .. } => commands::scenario(cfg, out),
    }
}

fn report(err: &CliError, dir: Option<&PathBuf>) -> ExitCode {
    let record = err.record();
    eprint!("{record}");
    if let Some(d) = dir {
        let _ = write_file(&d.join("error.txt"), &record);
    }
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = command_name(&cli.command);
    let cfg = match configure_threads()
        .and_then(|_| overrides(&cli))
        .and_then(|o| parse_config_with(cli.config.as_deref(), &o, eps_anchor(&cli.command)))
    {
        Ok(c) => c,
        Err(e) => return report(&e, cli.output_dir.as_ref()),
    };
    let start = Instant::now();
    let mut out = match Outputs::new(&cfg.output_dir) {
        Ok(o) => o,
        Err(e) => return report(&e, None),
    };
    let result = run(&cli, &cfg, &mut out);
    let status = if result.is_ok() { "ok" } else { "error" };
    let text = manifest(name, &cfg.manifest_entries(), start.elapsed().as_secs_f64(), &out.written, status);
    if let Err(e) = write_file(&cfg.output_dir.join("manifest.txt"), &text) {
        return report(&e, None);
    }
    match result {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => report(&e, Some(&cfg.output_dir)),
    }
}
