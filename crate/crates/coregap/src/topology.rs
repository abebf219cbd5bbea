//! Inter-core connection topologies and their link sets.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// The four inter-core architectures.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    /// Connections between adjacent cores.
    Linear,
    /// Consecutive cores plus the link between the first and the last.
    Ring,
    /// A central core (core 0) connected to all others.
    Star,
    /// Connections between all pairs of cores.
    Full,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 4] = [
        TopologyKind::Linear,
        TopologyKind::Ring,
        TopologyKind::Star,
        TopologyKind::Full,
    ];

    /// Smallest core count for which the topology is well-defined.
    /// Ring needs three cores: with two, the wrap-around link would
    /// duplicate (0, 1).
    pub fn min_cores(self) -> usize {
        match self {
            TopologyKind::Ring => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TopologyKind::Linear => "linear",
            TopologyKind::Ring => "ring",
            TopologyKind::Star => "star",
            TopologyKind::Full => "full",
        };
        f.write_str(s)
    }
}

impl FromStr for TopologyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(TopologyKind::Linear),
            "ring" => Ok(TopologyKind::Ring),
            "star" => Ok(TopologyKind::Star),
            "full" => Ok(TopologyKind::Full),
            other => Err(format!(
                "unknown topology `{other}` (expected linear, ring, star or full)"
            )),
        }
    }
}

/// Canonically ordered set of inter-core links.
///
/// Pairs are (α, β) with α < β, sorted ascending lexicographically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkSet {
    links: Vec<(usize, usize)>,
}

impl LinkSet {
    /// A link set with no links. Not produced by [`build_topology`]; used
    /// for the factorized no-interaction diagnostic.
    pub fn empty() -> Self {
        LinkSet { links: Vec::new() }
    }

    /// A custom link set. Pairs must be (α, β) with α < β, sorted ascending
    /// lexicographically, without duplicates.
    pub fn from_links(links: Vec<(usize, usize)>) -> Result<Self> {
        for w in links.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidLink {
                    a: w[1].0,
                    b: w[1].1,
                });
            }
        }
        for &(a, b) in &links {
            if a >= b {
                return Err(Error::InvalidLink { a, b });
            }
        }
        Ok(LinkSet { links })
    }

    pub fn links(&self) -> &[(usize, usize)] {
        &self.links
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }
}

/// Builds the canonical link set for `kind` on `n_cores` cores.
///
/// The star's hub is core 0.
pub fn build_topology(kind: TopologyKind, n_cores: usize) -> Result<LinkSet> {
    if n_cores < kind.min_cores() {
        let reason = if kind == TopologyKind::Ring && n_cores == 2 {
            "the wrap-around link would duplicate (0, 1)"
        } else {
            "at least two cores are required"
        };
        return Err(Error::InvalidCoreCount {
            kind,
            n_cores,
            reason,
        });
    }
    let mut links: Vec<(usize, usize)> = match kind {
        TopologyKind::Linear => (0..n_cores - 1).map(|a| (a, a + 1)).collect(),
        TopologyKind::Ring => {
            let mut v: Vec<_> = (0..n_cores - 1).map(|a| (a, a + 1)).collect();
            v.push((0, n_cores - 1));
            v
        }
        TopologyKind::Star => (1..n_cores).map(|b| (0, b)).collect(),
        TopologyKind::Full => {
            let mut v = Vec::with_capacity(n_cores * (n_cores - 1) / 2);
            for a in 0..n_cores {
                for b in a + 1..n_cores {
                    v.push((a, b));
                }
            }
            v
        }
    };
    links.sort_unstable();
    Ok(LinkSet { links })
}
