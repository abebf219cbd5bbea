//! Scans over the intracore depth I, optimum location, and the numerical
//! form of the critical-point condition.

use crate::config::CircuitConfig;
use crate::error::{Error, Result};
use crate::markov::eigen::{normalized_gap, subleading_eigenvalue, EigenOptions};
use crate::markov::build_total_operator_with_links;
use crate::metrics::{
    distance_haar_std, integral_distance_haar, lorenz_cumulants, EnsembleStats, StatsAccumulator,
};
use crate::statevector::run_circuit;
use crate::topology::{build_topology, LinkSet};
use rayon::prelude::*;

/// Near-flat profiles (the factorized diagnostic is exactly flat up to
/// eigensolver noise) must resolve ties toward smaller I; two gaps within
/// this tolerance count as tied.
pub const OPTIMUM_TIE_TOL: f64 = 1e-9;

/// One scanned depth: eigenvalue, total per-layer gate count, and gap.
#[derive(Clone, Debug, PartialEq)]
pub struct GapEntry {
    pub i: usize,
    pub lambda: f64,
    pub depth: usize,
    pub delta: f64,
    /// Set when the eigensolver flagged a complex subleading eigenvalue.
    pub complex_flag: bool,
}

/// Gap profile over an I-scan, with the architecture fingerprint
/// a = n_cores, b = n_links.
#[derive(Clone, Debug, PartialEq)]
pub struct GapProfile {
    pub entries: Vec<GapEntry>,
    pub n_cores: usize,
    pub n_links: usize,
}

/// Least-squares line on (I, log Λ) and the decay parameters it implies
/// under Λ(I) = λ e^(−κ a I).
#[derive(Clone, Debug)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_abs_residual: f64,
    /// Decay rate κ = −slope / a.
    pub kappa: f64,
    /// Prefactor λ = e^intercept.
    pub lambda_prefactor: f64,
}

/// Ensemble-metric profile over an I-scan.
#[derive(Clone, Debug, PartialEq)]
pub struct IdhEntry {
    pub i: usize,
    pub idh: f64,
    pub dh: f64,
    pub n_samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdhProfile {
    pub entries: Vec<IdhEntry>,
}

/// Location of the gap optimum.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimalPoint {
    pub i: usize,
    pub delta: f64,
    /// True iff the optimum is not an endpoint of the scanned range.
    pub interior: bool,
}

/// Alignment report between the two indicators.
#[derive(Clone, Debug, PartialEq)]
pub struct MinimaReport {
    pub i_star_gap: usize,
    pub i_star_idh: usize,
    pub abs_difference: usize,
    pub gap_interior: bool,
    pub idh_interior: bool,
}

fn check_i_values(i_values: &[usize]) -> Result<()> {
    if i_values.is_empty() {
        return Err(Error::TooFewPoints { have: 0, need: 1 });
    }
    if i_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::OutOfRange {
            what: "I values",
            value: f64::NAN,
            range: "strictly ascending",
        });
    }
    Ok(())
}

/// Builds `M_total` per I and records (I, Λ, D, Δ).
pub fn scan_gap(
    config: &CircuitConfig,
    i_values: &[usize],
    eigen_opts: &EigenOptions,
) -> Result<GapProfile> {
    let links = build_topology(config.topology, config.n_cores)?;
    scan_gap_with_links(config, &links, i_values, eigen_opts)
}

/// Scan with an explicit link set. [`LinkSet::empty`] gives the factorized
/// no-interaction diagnostic (b = 0).
pub fn scan_gap_with_links(
    config: &CircuitConfig,
    links: &LinkSet,
    i_values: &[usize],
    eigen_opts: &EigenOptions,
) -> Result<GapProfile> {
    config.validate()?;
    check_i_values(i_values)?;
    let entries: Vec<Result<GapEntry>> = i_values
        .par_iter()
        .map(|&i| {
            let cfg = config.with_intracore_steps(i);
            let op = build_total_operator_with_links(&cfg, links)?;
            op.verify_column_stochastic(1e-10)?;
            let eig = subleading_eigenvalue(&op, eigen_opts)?;
            let depth = config.n_cores * i + links.n_links();
            let delta = normalized_gap(eig.lambda, depth)?;
            Ok(GapEntry {
                i,
                lambda: eig.lambda,
                depth,
                delta,
                complex_flag: eig.complex_flag,
            })
        })
        .collect();
    let entries = entries.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(GapProfile {
        entries,
        n_cores: config.n_cores,
        n_links: links.n_links(),
    })
}

/// Argmax of Δ with ties broken toward smaller I.
pub fn find_optimal_i(profile: &GapProfile) -> Result<OptimalPoint> {
    if profile.entries.len() < 3 {
        return Err(Error::TooFewPoints {
            have: profile.entries.len(),
            need: 3,
        });
    }
    let mut best = 0usize;
    for (k, e) in profile.entries.iter().enumerate() {
        if e.delta > profile.entries[best].delta + OPTIMUM_TIE_TOL {
            best = k;
        }
    }
    Ok(OptimalPoint {
        i: profile.entries[best].i,
        delta: profile.entries[best].delta,
        interior: best > 0 && best + 1 < profile.entries.len(),
    })
}

/// Least-squares fit of log Λ against I. A near-zero residual means the
/// profile is a pure exponential in I, which predicts no interior maximum
/// of Δ; a large residual is consistent with one.
pub fn fit_exponential_decay(profile: &GapProfile) -> Result<DecayFit> {
    if profile.entries.len() < 3 {
        return Err(Error::TooFewPoints {
            have: profile.entries.len(),
            need: 3,
        });
    }
    for e in &profile.entries {
        if e.lambda <= 0.0 {
            return Err(Error::NonpositiveEigenvalue {
                i: e.i,
                lambda: e.lambda,
            });
        }
    }
    let n = profile.entries.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for e in &profile.entries {
        let x = e.i as f64;
        let y = e.lambda.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let max_abs_residual = profile
        .entries
        .iter()
        .map(|e| (e.lambda.ln() - (slope * e.i as f64 + intercept)).abs())
        .fold(0.0, f64::max);
    Ok(DecayFit {
        slope,
        intercept,
        max_abs_residual,
        kappa: -slope / profile.n_cores as f64,
        lambda_prefactor: intercept.exp(),
    })
}

/// Residual of the critical-point condition
/// (aI + b) Λ′(I)/Λ(I) − a log Λ(I), with Λ′ estimated by the central
/// finite difference over the integer grid. Requires entries at I ± 1.
pub fn critical_condition_residual(profile: &GapProfile, at_i: usize) -> Result<f64> {
    let find = |i: usize| profile.entries.iter().find(|e| e.i == i);
    let center = find(at_i).ok_or(Error::BoundaryPoint { i: at_i })?;
    let prev = at_i
        .checked_sub(1)
        .and_then(find)
        .ok_or(Error::BoundaryPoint { i: at_i })?;
    let next = find(at_i + 1).ok_or(Error::BoundaryPoint { i: at_i })?;
    let a = profile.n_cores as f64;
    let b = profile.n_links as f64;
    let lambda_prime = (next.lambda - prev.lambda) / 2.0;
    Ok((a * at_i as f64 + b) * lambda_prime / center.lambda - a * center.lambda.ln())
}

/// Runs the statevector ensemble per I and records ID_H and D_H against
/// the Haar reference. Circuits are evaluated in parallel chunks and
/// accumulated in index order, so the profile is deterministic.
pub fn scan_idh(
    config: &CircuitConfig,
    i_values: &[usize],
    ensemble_size: usize,
    haar_ref: &EnsembleStats,
) -> Result<IdhProfile> {
    config.validate()?;
    check_i_values(i_values)?;
    if haar_ref.mean.len() != config.hilbert_dim() {
        return Err(Error::LengthMismatch {
            left: haar_ref.mean.len(),
            right: config.hilbert_dim(),
        });
    }
    let mut entries = Vec::with_capacity(i_values.len());
    for &i in i_values {
        let cfg = config.with_intracore_steps(i);
        let stats = ensemble_cumulant_stats_of(&cfg, ensemble_size)?;
        entries.push(IdhEntry {
            i,
            idh: integral_distance_haar(&stats, haar_ref)?,
            dh: distance_haar_std(&stats, haar_ref)?,
            n_samples: ensemble_size,
        });
    }
    Ok(IdhProfile { entries })
}

/// Lorenz-cumulant statistics of the configured circuit ensemble.
pub fn ensemble_cumulant_stats_of(
    config: &CircuitConfig,
    ensemble_size: usize,
) -> Result<EnsembleStats> {
    const CHUNK: usize = 256;
    let mut acc = StatsAccumulator::new(config.hilbert_dim());
    let mut start = 0usize;
    while start < ensemble_size {
        let end = (start + CHUNK).min(ensemble_size);
        let curves: Vec<_> = (start..end)
            .into_par_iter()
            .map(|k| Ok(lorenz_cumulants(&run_circuit(config, k as u64)?)))
            .collect::<Vec<Result<_>>>();
        for c in curves {
            acc.push(&c?)?;
        }
        start = end;
    }
    acc.finish()
}

/// Locates the minima of 1 − Δ and of ID_H over the shared I range.
pub fn compare_minima(gap: &GapProfile, idh: &IdhProfile) -> Result<MinimaReport> {
    let gap_is: Vec<usize> = gap.entries.iter().map(|e| e.i).collect();
    let idh_is: Vec<usize> = idh.entries.iter().map(|e| e.i).collect();
    let shared: Vec<usize> = gap_is
        .iter()
        .filter(|i| idh_is.contains(i))
        .copied()
        .collect();
    if shared.is_empty() {
        return Err(Error::NoOverlap);
    }
    let lo = *shared.first().unwrap();
    let hi = *shared.last().unwrap();

    let mut best_gap: Option<&GapEntry> = None;
    for e in gap.entries.iter().filter(|e| shared.contains(&e.i)) {
        if best_gap.is_none_or(|b| e.delta > b.delta + OPTIMUM_TIE_TOL) {
            best_gap = Some(e);
        }
    }
    let mut best_idh: Option<&IdhEntry> = None;
    for e in idh.entries.iter().filter(|e| shared.contains(&e.i)) {
        if best_idh.is_none_or(|b| e.idh < b.idh) {
            best_idh = Some(e);
        }
    }
    let g = best_gap.expect("shared range is non-empty");
    let h = best_idh.expect("shared range is non-empty");
    Ok(MinimaReport {
        i_star_gap: g.i,
        i_star_idh: h.i,
        abs_difference: g.i.abs_diff(h.i),
        gap_interior: g.i != lo && g.i != hi,
        idh_interior: h.i != lo && h.i != hi,
    })
}
