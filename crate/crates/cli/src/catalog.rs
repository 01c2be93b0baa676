//! Named fixed points of the vortex return map (A = 0.1, κ = 4.65) with the
//! parameter value at which each seed was measured.

use std::f64::consts::PI;

use revmix::manifolds::{Branch, ManifoldSide, ManifoldSpec};
use revmix::orbits::{continue_branch, find_periodic_point, ContinuationSettings, FixedPointRecord, MapFamily, VortexFamily};
use revmix::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entry {
    pub label: &'static str,
    pub eps: f64,
    pub point: [f64; 2],
    pub period: usize,
    pub note: &'static str,
}

pub const ENTRIES: &[Entry] = &[
    Entry {
        label: "e2",
        eps: 0.01,
        point: [11.4634, 0.0],
        period: 1,
        note: "symmetric elliptic point on S = 0; pitchfork near eps = 0.0106",
    },
    Entry {
        label: "f2s",
        eps: 0.011,
        point: [11.46373, 5.99259],
        period: 1,
        note: "sink born from e2 at the pitchfork",
    },
    Entry {
        label: "f2u",
        eps: 0.011,
        point: [11.46373, 0.29059],
        period: 1,
        note: "source born from e2 at the pitchfork, h-image of f2s",
    },
    Entry {
        label: "f1s",
        eps: 0.05,
        point: [11.583758, 5.327932],
        period: 1,
        note: "sink born near eps = 0.032 from the symmetric point on S = 0 at R = 11.58; splits at eps = 0.1072",
    },
    Entry {
        label: "s1pi",
        eps: 0.1463,
        point: [11.52575, PI],
        period: 1,
        note: "symmetric saddle on S = pi bounding the basin of the f1s attractor",
    },
    Entry {
        label: "a1",
        eps: 0.1463,
        point: [11.584277, 4.479258],
        period: 1,
        note: "saddle of the f1s attractor (f1s past its split)",
    },
    Entry {
        label: "r1",
        eps: 0.1463,
        point: [11.584277, 1.803927],
        period: 1,
        note: "saddle of the repeller, h-image of a1",
    },
];

pub fn lookup(label: &str) -> Option<&'static Entry> {
    ENTRIES.iter().find(|e| e.label == label)
}

pub fn names() -> Vec<&'static str> {
    ENTRIES.iter().map(|e| e.label).collect()
}

/// Crisis pairs as `(unstable-manifold owner, stable-manifold owner)`.
const PAIRS: &[(&str, &str, &str)] = &[("a1-s1pi", "a1", "s1pi"), ("s1pi-r1", "s1pi", "r1")];

pub fn pair(name: &str) -> Option<(&'static str, &'static str)> {
    PAIRS.iter().find(|p| p.0 == name).map(|p| (p.1, p.2))
}

pub fn pair_names() -> Vec<&'static str> {
    PAIRS.iter().map(|p| p.0).collect()
}

/// Seeds closer than this to the requested ε are polished by Newton directly;
/// otherwise the entry is continued from its reference ε.
const DIRECT_SPAN: f64 = 5e-4;

/// Locates `entry` at parameter `eps`.
pub fn locate(entry: &Entry, eps: f64, family: &VortexFamily<f64>, step: f64) -> Result<FixedPointRecord<f64>> {
    let set = ContinuationSettings::default();
    if (eps - entry.eps).abs() <= DIRECT_SPAN {
        let map = family.at(eps)?;
        return Ok(find_periodic_point(&map, entry.point, entry.period, eps, &set.tol)?.with_label(entry.label));
    }
    let map = family.at(entry.eps)?;
    let start = find_periodic_point(&map, entry.point, entry.period, entry.eps, &set.tol)?.with_label(entry.label);
    let c = continue_branch(family, &start, (entry.eps, eps), step, &set)?;
    let last = c.branch.last().cloned().expect("branch is non-empty");
    if (last.param - eps).abs() > 1e-12 {
        return Err(c.lost.unwrap_or(Error::BranchLost {
            param: last.param,
            reason: format!("continuation of {} stopped short of {eps}", entry.label),
        }));
    }
    Ok(last)
}

/// Both branches of `W^u(unstable owner)` against both branches of
/// `W^s(stable owner)`, with saddles located at `eps`.
pub fn crisis_specs(
    name: &str,
    eps: f64,
    family: &VortexFamily<f64>,
) -> Result<(ManifoldSpec<f64>, ManifoldSpec<f64>)> {
    let (u, s) = pair(name).ok_or_else(|| Error::InvalidParameter(format!("unknown crisis pair `{name}`")))?;
    let spec = |label: &str, side| -> Result<ManifoldSpec<f64>> {
        let e = lookup(label).expect("pair labels are catalogued");
        Ok(ManifoldSpec {
            saddle: locate(e, eps, family, 1e-3)?,
            side,
            branches: vec![Branch::Plus, Branch::Minus],
        })
    };
    Ok((spec(u, ManifoldSide::Unstable)?, spec(s, ManifoldSide::Stable)?))
}
