//! Majorization machinery and the two distances to the Haar ensemble.
//!
//! `D_H` compares per-k fluctuations of the Lorenz cumulants
//! (root-sum-square of std differences, population convention). `ID_H` is
//! the signed sum of mean-curve differences normalized by the curve
//! length; only the locations of its minima matter downstream, and the
//! normalization keeps values comparable across qubit counts.

use crate::circuit::{derive_stream_seed, STREAM_DOMAIN_HAAR};
use crate::error::{Error, Result};
use crate::statevector::{sample_haar_state_probs, ProbVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

/// Lorenz curve of a probability vector: descending sort, prefix sums.
#[derive(Clone, Debug, PartialEq)]
pub struct CumulantCurve {
    values: Vec<f64>,
}

impl CumulantCurve {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// F(k) = sum of the k largest entries of `p`.
pub fn lorenz_cumulants(p: &ProbVector) -> CumulantCurve {
    let mut sorted = p.probs().to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    for v in sorted.iter_mut() {
        acc += *v;
        *v = acc;
    }
    CumulantCurve { values: sorted }
}

/// Outcome of the majorization partial-sum comparison.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Majorization {
    /// Mutual majorization within tolerance.
    Equal,
    /// p majorizes q: p's Lorenz curve lies above q's.
    PMajorizesQ,
    /// q majorizes p.
    QMajorizesP,
    /// Partial sums cross; the vectors are incomparable.
    Incomparable,
}

const MAJORIZATION_TIE_TOL: f64 = 1e-12;

/// Compares two probability vectors by their sorted partial sums.
pub fn majorizes(p: &ProbVector, q: &ProbVector) -> Result<Majorization> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    for v in [p, q] {
        let sum: f64 = v.probs().iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { sum });
        }
    }
    let fp = lorenz_cumulants(p);
    let fq = lorenz_cumulants(q);
    let mut p_above = true;
    let mut q_above = true;
    for (a, b) in fp.values().iter().zip(fq.values()) {
        if a - b > MAJORIZATION_TIE_TOL {
            q_above = false;
        }
        if b - a > MAJORIZATION_TIE_TOL {
            p_above = false;
        }
    }
    Ok(match (p_above, q_above) {
        (true, true) => Majorization::Equal,
        (true, false) => Majorization::PMajorizesQ,
        (false, true) => Majorization::QMajorizesP,
        (false, false) => Majorization::Incomparable,
    })
}

/// Per-k mean and population std (divisor N, no Bessel correction) of an
/// ensemble of cumulant curves.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub n_samples: usize,
}

/// Streaming accumulator; push curves in a fixed order for deterministic
/// results.
#[derive(Clone, Debug)]
pub struct StatsAccumulator {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    count: usize,
}

impl StatsAccumulator {
    pub fn new(len: usize) -> Self {
        StatsAccumulator {
            sum: vec![0.0; len],
            sum_sq: vec![0.0; len],
            count: 0,
        }
    }

    pub fn push(&mut self, curve: &CumulantCurve) -> Result<()> {
        if curve.len() != self.sum.len() {
            return Err(Error::LengthMismatch {
                left: curve.len(),
                right: self.sum.len(),
            });
        }
        for (k, &v) in curve.values().iter().enumerate() {
            self.sum[k] += v;
            self.sum_sq[k] += v * v;
        }
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(self) -> Result<EnsembleStats> {
        if self.count < 2 {
            return Err(Error::TooFewSamples {
                have: self.count,
                need: 2,
            });
        }
        let n = self.count as f64;
        let mean: Vec<f64> = self.sum.iter().map(|s| s / n).collect();
        let std = self
            .sum_sq
            .iter()
            .zip(&mean)
            .map(|(sq, m)| (sq / n - m * m).max(0.0).sqrt())
            .collect();
        Ok(EnsembleStats {
            mean,
            std,
            n_samples: self.count,
        })
    }
}

/// Population statistics of a batch of curves.
pub fn ensemble_cumulant_stats(curves: &[CumulantCurve]) -> Result<EnsembleStats> {
    if curves.len() < 2 {
        return Err(Error::TooFewSamples {
            have: curves.len(),
            need: 2,
        });
    }
    let mut acc = StatsAccumulator::new(curves[0].len());
    for c in curves {
        acc.push(c)?;
    }
    acc.finish()
}

/// D_H: root-sum-square distance between per-k cumulant fluctuations.
pub fn distance_haar_std(circuit: &EnsembleStats, haar: &EnsembleStats) -> Result<f64> {
    if circuit.std.len() != haar.std.len() {
        return Err(Error::LengthMismatch {
            left: circuit.std.len(),
            right: haar.std.len(),
        });
    }
    Ok(circuit
        .std
        .iter()
        .zip(&haar.std)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// ID_H: signed mean-curve difference, normalized by the curve length.
pub fn integral_distance_haar(circuit: &EnsembleStats, haar: &EnsembleStats) -> Result<f64> {
    if circuit.mean.len() != haar.mean.len() {
        return Err(Error::LengthMismatch {
            left: circuit.mean.len(),
            right: haar.mean.len(),
        });
    }
    let sum: f64 = circuit
        .mean
        .iter()
        .zip(&haar.mean)
        .map(|(a, b)| a - b)
        .sum();
    Ok(sum / circuit.mean.len() as f64)
}

/// Curves are evaluated in chunks in parallel and accumulated in sample
/// order, so the result is independent of worker scheduling.
const ENSEMBLE_CHUNK: usize = 256;

/// Cumulant statistics of `n_samples` Haar-random states on `n_qubits`
/// qubits. Per-sample streams derive from `(seed, sample index)`.
pub fn haar_reference(n_qubits: usize, n_samples: usize, seed: u64) -> Result<EnsembleStats> {
    let mut acc = StatsAccumulator::new(1usize << n_qubits);
    let mut start = 0usize;
    while start < n_samples {
        let end = (start + ENSEMBLE_CHUNK).min(n_samples);
        let curves: Vec<Result<CumulantCurve>> = (start..end)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_stream_seed(
                    seed,
                    STREAM_DOMAIN_HAAR,
                    k as u64,
                ));
                Ok(lorenz_cumulants(&sample_haar_state_probs(
                    &mut rng, n_qubits,
                )?))
            })
            .collect();
        for c in curves {
            acc.push(&c?)?;
        }
        start = end;
    }
    acc.finish()
}

const HAAR_CACHE_MAGIC: &[u8; 8] = b"CGHAAR01";

fn cache_file_name(n_qubits: usize, n_samples: usize, seed: u64) -> String {
    format!("haar_n{n_qubits}_s{n_samples}_seed{seed}.bin")
}

/// Disk-cached variant of [`haar_reference`], keyed by
/// `(n_qubits, n_samples, seed)`. A missing, stale or corrupt cache entry
/// is recomputed and rewritten.
///
/// File layout (little-endian): magic `CGHAAR01`, u32 n_qubits,
/// u64 n_samples, u64 seed, u32 curve length, then the mean and std
/// arrays as f64.
pub fn haar_reference_cached(
    n_qubits: usize,
    n_samples: usize,
    seed: u64,
    cache_dir: &Path,
) -> Result<EnsembleStats> {
    let path = cache_dir.join(cache_file_name(n_qubits, n_samples, seed));
    if let Some(stats) = read_cache(&path, n_qubits, n_samples, seed) {
        return Ok(stats);
    }
    let stats = haar_reference(n_qubits, n_samples, seed)?;
    std::fs::create_dir_all(cache_dir)?;
    let tmp = path.with_extension("tmp");
    write_cache(&tmp, n_qubits, n_samples, seed, &stats)?;
    std::fs::rename(&tmp, &path)?;
    Ok(stats)
}

/// Cache directory from `COREGAP_CACHE_DIR`, defaulting to
/// `.coregap-cache` in the working directory.
pub fn default_cache_dir() -> PathBuf {
    std::env::var_os("COREGAP_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".coregap-cache"))
}

fn read_cache(path: &Path, n_qubits: usize, n_samples: usize, seed: u64) -> Option<EnsembleStats> {
    let mut file = std::fs::File::open(path).ok()?;
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic).ok()?;
    if &magic != HAAR_CACHE_MAGIC {
        return None;
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    file.read_exact(&mut b4).ok()?;
    if u32::from_le_bytes(b4) as usize != n_qubits {
        return None;
    }
    file.read_exact(&mut b8).ok()?;
    if u64::from_le_bytes(b8) as usize != n_samples {
        return None;
    }
    file.read_exact(&mut b8).ok()?;
    if u64::from_le_bytes(b8) != seed {
        return None;
    }
    file.read_exact(&mut b4).ok()?;
    let len = u32::from_le_bytes(b4) as usize;
    if len != 1usize << n_qubits {
        return None;
    }
    let mut read_vec = || -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            file.read_exact(&mut b8).ok()?;
            out.push(f64::from_le_bytes(b8));
        }
        Some(out)
    };
    let mean = read_vec()?;
    let std = read_vec()?;
    Some(EnsembleStats {
        mean,
        std,
        n_samples,
    })
}

fn write_cache(
    path: &Path,
    n_qubits: usize,
    n_samples: usize,
    seed: u64,
    stats: &EnsembleStats,
) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(HAAR_CACHE_MAGIC)?;
    file.write_all(&(n_qubits as u32).to_le_bytes())?;
    file.write_all(&(n_samples as u64).to_le_bytes())?;
    file.write_all(&seed.to_le_bytes())?;
    file.write_all(&(stats.mean.len() as u32).to_le_bytes())?;
    for v in stats.mean.iter().chain(&stats.std) {
        file.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn cumulants_of_uniform_and_deterministic_vectors() {
        let c = lorenz_cumulants(&pv(&[0.25; 4]));
        assert_eq!(c.values(), &[0.25, 0.5, 0.75, 1.0]);
        let c = lorenz_cumulants(&pv(&[1.0, 0.0, 0.0, 0.0]));
        assert_eq!(c.values(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn cumulants_sort_descending_first() {
        let c = lorenz_cumulants(&pv(&[0.2, 0.5, 0.3]));
        assert_eq!(c.values(), &[0.5, 0.8, 1.0]);
    }

    #[test]
    fn majorization_extremal_points() {
        let uniform = pv(&[0.25; 4]);
        let det = pv(&[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(majorizes(&uniform, &det).unwrap(), Majorization::QMajorizesP);
        assert_eq!(majorizes(&det, &uniform).unwrap(), Majorization::PMajorizesQ);
    }

    #[test]
    fn equal_vectors_majorize_each_other() {
        let p = pv(&[0.5, 0.3, 0.2]);
        assert_eq!(majorizes(&p, &p).unwrap(), Majorization::Equal);
    }

    #[test]
    fn crossing_partial_sums_are_incomparable() {
        let p = pv(&[0.6, 0.2, 0.2]);
        let q = pv(&[0.5, 0.5, 0.0]);
        // partial sums: 0.6 > 0.5 at k = 1, 0.8 < 1.0 at k = 2
        assert_eq!(majorizes(&p, &q).unwrap(), Majorization::Incomparable);
    }

    #[test]
    fn majorizes_validates_inputs() {
        let p = pv(&[0.5, 0.5]);
        let q = pv(&[0.5, 0.3, 0.2]);
        assert!(matches!(
            majorizes(&p, &q).unwrap_err(),
            Error::LengthMismatch { .. }
        ));
    }

    #[test]
    fn stats_of_identical_curves_have_zero_std() {
        let c = lorenz_cumulants(&pv(&[0.7, 0.3]));
        let stats = ensemble_cumulant_stats(&[c.clone(), c]).unwrap();
        assert!(stats.std.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn two_point_population_std() {
        let a = CumulantCurve {
            values: vec![0.5, 1.0],
        };
        let b = CumulantCurve {
            values: vec![1.0, 1.0],
        };
        let stats = ensemble_cumulant_stats(&[a, b]).unwrap();
        assert_eq!(stats.mean, vec![0.75, 1.0]);
        assert!((stats.std[0] - 0.25).abs() < 1e-15, "population std");
        assert_eq!(stats.std[1], 0.0);
    }

    #[test]
    fn one_curve_is_too_few() {
        let c = lorenz_cumulants(&pv(&[1.0]));
        assert!(matches!(
            ensemble_cumulant_stats(&[c]).unwrap_err(),
            Error::TooFewSamples { .. }
        ));
    }

    #[test]
    fn dh_trivial_cases() {
        let stats = haar_reference(2, 50, 1).unwrap();
        assert_eq!(distance_haar_std(&stats, &stats).unwrap(), 0.0);
        let mut shifted = stats.clone();
        shifted.std[1] += 0.1;
        assert!((distance_haar_std(&shifted, &stats).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn idh_trivial_cases() {
        let stats = haar_reference(2, 50, 2).unwrap();
        assert_eq!(integral_distance_haar(&stats, &stats).unwrap(), 0.0);
        let mut shifted = stats.clone();
        for m in shifted.mean.iter_mut() {
            *m += 0.2;
        }
        assert!((integral_distance_haar(&shifted, &stats).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn idh_of_deterministic_ensemble_matches_direct_formula() {
        // curves of p = (1,0,0,0) are identically 1; ID_H reduces to the
        // mean of (1 − F_H(k))
        let haar = haar_reference(2, 400, 3).unwrap();
        let det = lorenz_cumulants(&pv(&[1.0, 0.0, 0.0, 0.0]));
        let stats = ensemble_cumulant_stats(&[det.clone(), det]).unwrap();
        let idh = integral_distance_haar(&stats, &haar).unwrap();
        let direct: f64 = haar.mean.iter().map(|m| 1.0 - m).sum::<f64>() / 4.0;
        assert!((idh - direct).abs() < 1e-12);
        assert!(idh > 0.0);
    }

    #[test]
    fn haar_reference_single_qubit_top_cumulant() {
        // for one qubit the top probability is uniform on [1/2, 1]:
        // E[F(1)] = 3/4
        let stats = haar_reference(1, 60_000, 4).unwrap();
        assert!((stats.mean[0] - 0.75).abs() < 0.01, "{}", stats.mean[0]);
        assert!((stats.mean[1] - 1.0).abs() < 1e-12);
        assert!(stats.std[1] < 1e-12, "endpoint pinned at 1");
    }

    #[test]
    fn haar_reference_is_deterministic() {
        let a = haar_reference(3, 100, 9).unwrap();
        let b = haar_reference(3, 100, 9).unwrap();
        assert_eq!(a, b);
        let c = haar_reference(3, 100, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn cache_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let fresh = haar_reference_cached(3, 120, 5, dir.path()).unwrap();
        let cached = haar_reference_cached(3, 120, 5, dir.path()).unwrap();
        assert_eq!(fresh, cached);
        // a different key computes a different entry
        let other = haar_reference_cached(3, 120, 6, dir.path()).unwrap();
        assert_ne!(fresh, other);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
    }

    #[test]
    fn corrupt_cache_is_recomputed() {
        let dir = tempfile::tempdir().unwrap();
        let fresh = haar_reference_cached(2, 80, 7, dir.path()).unwrap();
        let path = dir.path().join(cache_file_name(2, 80, 7));
        std::fs::write(&path, b"garbage").unwrap();
        let again = haar_reference_cached(2, 80, 7, dir.path()).unwrap();
        assert_eq!(fresh, again);
    }

    proptest! {
        #[test]
        fn cumulant_curves_dominate_the_uniform_line(
            raw in proptest::collection::vec(0.0f64..1.0, 2..64)
        ) {
            let sum: f64 = raw.iter().sum();
            prop_assume!(sum > 1e-6);
            let probs: Vec<f64> = raw.iter().map(|x| x / sum).collect();
            let p = ProbVector::new(probs).unwrap();
            let c = lorenz_cumulants(&p);
            let n = c.len() as f64;
            let mut prev = 0.0;
            for (k, &v) in c.values().iter().enumerate() {
                prop_assert!(v + 1e-12 >= prev, "non-decreasing");
                prop_assert!(v + 1e-9 >= (k + 1) as f64 / n, "dominates uniform");
                prev = v;
            }
            prop_assert!((c.values()[c.len() - 1] - 1.0).abs() < 1e-9);
        }

        #[test]
        fn majorization_agrees_with_pointwise_curve_dominance(
            raw_p in proptest::collection::vec(0.0f64..1.0, 6),
            raw_q in proptest::collection::vec(0.0f64..1.0, 6),
        ) {
            let sp: f64 = raw_p.iter().sum();
            let sq: f64 = raw_q.iter().sum();
            prop_assume!(sp > 1e-6 && sq > 1e-6);
            let p = ProbVector::new(raw_p.iter().map(|x| x / sp).collect()).unwrap();
            let q = ProbVector::new(raw_q.iter().map(|x| x / sq).collect()).unwrap();
            let fp = lorenz_cumulants(&p);
            let fq = lorenz_cumulants(&q);
            let q_dominates = fq.values().iter().zip(fp.values())
                .all(|(b, a)| *b >= a - 1e-12);
            let verdict = majorizes(&p, &q).unwrap();
            prop_assert_eq!(
                q_dominates,
                matches!(verdict, Majorization::QMajorizesP | Majorization::Equal)
            );
        }
    }
}
