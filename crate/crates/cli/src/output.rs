//! CSV, run-length-encoded grid, gnuplot and manifest writers.
//!
//! Floats are written with 17 significant digits so identical runs produce
//! byte-identical files and every value reads back exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use revmix::chaos::{OccupancyGrid, Window};
use revmix::orbits::{BifurcationEvent, FixedPointRecord};

use crate::error::CliError;

pub const CLOUD_HEADER: &str = "iter,R,S";
pub const BRANCH_HEADER: &str = "eps,R,S,lambda1,lambda2,det,kind";
pub const EVENT_HEADER: &str = "eps,kind,label";
pub const GRID_HEADER: &str = "nS,nR,S_lo,S_hi,R_lo,R_hi";

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::Io {
                path: dir.to_path_buf(),
                source: e,
            })?;
        }
    }
    fs::write(path, contents).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn cloud_csv(points: &[[f64; 2]]) -> String {
    let mut s = String::with_capacity(48 * points.len() + 16);
    s.push_str(CLOUD_HEADER);
    s.push('\n');
    for (i, p) in points.iter().enumerate() {
        let _ = writeln!(s, "{i},{},{}", num(p[0]), num(p[1]));
    }
    s
}

fn branch_row(s: &mut String, r: &FixedPointRecord<f64>) {
    let _ = writeln!(
        s,
        "{},{},{},{},{},{},{}",
        num(r.param),
        num(r.point[0]),
        num(r.point[1]),
        num(r.multipliers[0].re),
        num(r.multipliers[1].re),
        num(r.det),
        r.kind.as_str()
    );
}

/// Branch table. Complex multiplier pairs are written by their (common) real part.
pub fn branch_csv(records: &[FixedPointRecord<f64>]) -> String {
    let mut s = String::from(BRANCH_HEADER);
    s.push('\n');
    for r in records {
        branch_row(&mut s, r);
    }
    s
}

/// One event row.
#[derive(Clone, Debug, PartialEq)]
pub struct EventRow {
    pub eps: f64,
    pub kind: String,
    pub label: String,
}

impl EventRow {
    pub fn new(eps: f64, kind: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            eps,
            kind: kind.into(),
            label: label.into(),
        }
    }

    pub fn from_bifurcation(ev: &BifurcationEvent<f64>) -> Self {
        Self::new(ev.eps_star, ev.kind.as_str(), ev.parent.label.clone())
    }
}

pub fn events_csv(rows: &[EventRow]) -> String {
    let mut s = String::from(EVENT_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{}", num(r.eps), r.kind, r.label.replace(',', ";"));
    }
    s
}

/// Header, then runs `start,length` of set cells in the linear index
/// `j * nS + i`.
pub fn grid_rle(g: &OccupancyGrid<f64>) -> String {
    let w = &g.window;
    let mut s = format!(
        "{GRID_HEADER}\n{},{},{},{},{},{}\nstart,length\n",
        g.ns,
        g.nr,
        num(w.s_lo),
        num(w.s_hi),
        num(w.r_lo),
        num(w.r_hi)
    );
    let total = g.ns * g.nr;
    let mut k = 0;
    while k < total {
        if g.get(k % g.ns, k / g.ns) {
            let start = k;
            while k < total && g.get(k % g.ns, k / g.ns) {
                k += 1;
            }
            let _ = writeln!(s, "{start},{}", k - start);
        } else {
            k += 1;
        }
    }
    s
}

pub fn read_grid_rle(text: &str) -> Result<OccupancyGrid<f64>, CliError> {
    let bad = |line: usize, what: &str| CliError::Parse(format!("grid line {line}: {what}"));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == GRID_HEADER => {}
        _ => return Err(bad(1, "missing grid header")),
    }
    let (ln, dims) = lines.next().ok_or_else(|| bad(2, "missing dimensions"))?;
    let f: Vec<&str> = dims.split(',').collect();
    if f.len() != 6 {
        return Err(bad(ln + 1, "expected 6 fields"));
    }
    let int = |s: &str| s.trim().parse::<usize>().map_err(|_| bad(ln + 1, "bad integer"));
    let flt = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(ln + 1, "bad number"));
    let window = Window::new(flt(f[2])?, flt(f[3])?, flt(f[4])?, flt(f[5])?);
    let mut g = OccupancyGrid::empty(window, int(f[0])?, int(f[1])?)?;
    match lines.next() {
        Some((_, h)) if h.trim() == "start,length" => {}
        Some((ln, _)) => return Err(bad(ln + 1, "expected `start,length`")),
        None => return Ok(g),
    }
    let total = g.ns * g.nr;
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (a, b) = line.split_once(',').ok_or_else(|| bad(ln + 1, "expected start,length"))?;
        let start: usize = a.trim().parse().map_err(|_| bad(ln + 1, "bad start"))?;
        let len: usize = b.trim().parse().map_err(|_| bad(ln + 1, "bad length"))?;
        if start + len > total {
            return Err(bad(ln + 1, "run exceeds grid"));
        }
        for k in start..start + len {
            g.set(k % g.ns, k / g.ns);
        }
    }
    Ok(g)
}

/// Gnuplot script plotting `(S, R)` columns of the given CSVs.
pub fn plot_script(title: &str, series: &[(&str, &str, &str)]) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator \",\"\n");
    let _ = writeln!(s, "set title \"{title}\"");
    s.push_str("set xlabel \"S\"\nset ylabel \"R\"\n");
    let parts: Vec<String> = series
        .iter()
        .map(|(file, cols, name)| format!("\"{file}\" every ::1 using {cols} with dots title \"{name}\""))
        .collect();
    let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
    s
}

/// Collects artifact paths and writes the run manifest.
#[derive(Debug)]
pub struct Outputs {
    pub dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        write_file(&path, contents)?;
        self.written.push(path);
        Ok(())
    }
}

pub fn manifest(
    command: &str,
    entries: &[(String, String)],
    wall_time: f64,
    artifacts: &[PathBuf],
    status: &str,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "tool = revmix {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "command = {command}");
    for (k, v) in entries {
        let _ = writeln!(s, "{k} = {v}");
    }
    let _ = writeln!(s, "wall_time_s = {wall_time:.3}");
    let _ = writeln!(s, "status = {status}");
    for a in artifacts {
        let name = a.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let _ = writeln!(s, "artifact = {name}");
    }
    s
}
