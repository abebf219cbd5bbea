//! Subleading eigenvalue and normalized spectral gap.
//!
//! The unit eigenspace of `M_total` is at least two-dimensional: the point
//! mass on the all-identity string is fixed (nothing flows into it from
//! elsewhere), and the rest of the chain carries a stationary vector. Λ is
//! defined after excluding every eigenvalue within `unit_tolerance` of 1.
//!
//! Small operators are densified and solved with a sequential QR
//! eigensolver; large ones go through restarted Arnoldi on the
//! identity-free subspace with the stationary direction deflated against
//! its known left eigenvector (the all-ones row).

use crate::error::{Error, Result};
use crate::markov::ReducedOperator;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::{Mat, Par};
use num_complex::Complex64;

/// Tuning knobs for [`subleading_eigenvalue`].
#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Eigenvalues with modulus above `1 − unit_tolerance` count as the
    /// unit cluster and are excluded.
    pub unit_tolerance: f64,
    /// Largest dimension solved densely.
    pub dense_dim: usize,
    /// Krylov dimension per Arnoldi sweep.
    pub max_krylov: usize,
    /// Restart budget for the iterative path.
    pub max_restarts: usize,
    /// Relative residual bound for accepting a Ritz value.
    pub residual_tol: f64,
    /// Iteration budget for the stationary-vector power stage.
    pub stationary_max_iters: usize,
    /// L1 convergence tolerance for the stationary vector.
    pub stationary_tol: f64,
    /// Run the iterative path a second time from a perturbed start vector
    /// and keep the larger result; guards against a start vector that is
    /// accidentally orthogonal to the subleading eigenvector's symmetry
    /// sector.
    pub second_start_check: bool,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            unit_tolerance: 1e-8,
            dense_dim: 729,
            max_krylov: 220,
            max_restarts: 8,
            residual_tol: 1e-10,
            stationary_max_iters: 50_000,
            stationary_tol: 1e-13,
            second_start_check: true,
        }
    }
}

/// Result of a subleading-eigenvalue computation.
#[derive(Clone, Debug)]
pub struct SubleadingEigen {
    /// Largest eigenvalue modulus strictly below the unit cluster.
    pub lambda: f64,
    /// Set when the reported eigenvalue has an imaginary part above
    /// 1e−6 · |Λ|; the modulus is reported either way.
    pub complex_flag: bool,
    /// Top eigenvalue moduli (unit cluster included) for audit, largest
    /// first, at most five.
    pub top_moduli: Vec<f64>,
    /// True when the iterative path produced the value.
    pub iterative: bool,
    /// |Λ₁ − Λ₂| between the two iterative starts, when both ran.
    pub start_discrepancy: Option<f64>,
}

/// Sequential dense eigenvalues (deterministic across thread settings).
pub fn dense_eigenvalues(m: &Mat<f64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    let mut s_re = faer::diag::Diag::<f64>::zeros(n);
    let mut s_im = faer::diag::Diag::<f64>::zeros(n);
    let scratch = evd::evd_scratch::<f64>(
        n,
        ComputeEigenvectors::No,
        ComputeEigenvectors::No,
        Par::Seq,
        Default::default(),
    );
    evd::evd_real(
        m.as_ref(),
        s_re.as_mut(),
        s_im.as_mut(),
        None,
        None,
        Par::Seq,
        MemStack::new(&mut MemBuffer::new(scratch)),
        Default::default(),
    )
    .map_err(|e| Error::EigenBackend(format!("{e:?}")))?;
    Ok((0..n)
        .map(|i| Complex64::new(s_re[i], s_im[i]))
        .collect())
}

/// Λ of a column-stochastic reduced operator.
pub fn subleading_eigenvalue(op: &ReducedOperator, opts: &EigenOptions) -> Result<SubleadingEigen> {
    if op.dim() <= opts.dense_dim {
        dense_path(op, opts)
    } else {
        iterative_path(op, opts)
    }
}

/// Δ = 1 − Λ^(1/D), the effective spectral gap per elementary gate.
pub fn normalized_gap(lambda: f64, depth: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::OutOfRange {
            what: "lambda",
            value: lambda,
            range: "[0, 1]",
        });
    }
    if depth == 0 {
        return Err(Error::OutOfRange {
            what: "depth",
            value: 0.0,
            range: ">= 1",
        });
    }
    Ok(1.0 - lambda.powf(1.0 / depth as f64))
}

fn select_subleading(
    eigenvalues: &[Complex64],
    opts: &EigenOptions,
    iterative: bool,
) -> Result<SubleadingEigen> {
    let mut moduli: Vec<f64> = eigenvalues.iter().map(|z| z.norm()).collect();
    moduli.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    if let Some(&max) = moduli.first() {
        if max > 1.0 + 1e-8 {
            return Err(Error::SpectrumAnomaly { modulus: max });
        }
    }
    let cutoff = 1.0 - opts.unit_tolerance;
    let sub = eigenvalues
        .iter()
        .filter(|z| z.norm() < cutoff)
        .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
    let sub = sub.ok_or(Error::NoSubleadingEigenvalue)?;
    Ok(SubleadingEigen {
        lambda: sub.norm(),
        complex_flag: sub.im.abs() > 1e-6 * sub.norm(),
        top_moduli: moduli.into_iter().take(5).collect(),
        iterative,
        start_discrepancy: None,
    })
}

fn dense_path(op: &ReducedOperator, opts: &EigenOptions) -> Result<SubleadingEigen> {
    let eigenvalues = dense_eigenvalues(&op.to_dense())?;
    select_subleading(&eigenvalues, opts, false)
}

/// Index 0 is the all-identity string: structurally absorbing, so the
/// complement subspace {v : v[0] = 0} is exactly invariant.
const ID_INDEX: usize = 0;

struct Deflator {
    /// Stationary vector of the identity-free sector (component sum 1).
    pi: Vec<f64>,
}

impl Deflator {
    /// Removes the identity coordinate and the stationary direction
    /// (oblique projection along π against the all-ones left eigenvector).
    fn project(&self, v: &mut [f64]) {
        v[ID_INDEX] = 0.0;
        let s: f64 = v.iter().sum();
        for (x, p) in v.iter_mut().zip(&self.pi) {
            *x -= s * p;
        }
        v[ID_INDEX] = 0.0;
    }
}

fn stationary_vector(op: &ReducedOperator, opts: &EigenOptions) -> Vec<f64> {
    let dim = op.dim();
    let mut v = vec![1.0 / (dim - 1) as f64; dim];
    v[ID_INDEX] = 0.0;
    let mut next = vec![0.0; dim];
    for _ in 0..opts.stationary_max_iters {
        op.apply_slice(&v, &mut next);
        next[ID_INDEX] = 0.0;
        let sum: f64 = next.iter().sum();
        for x in next.iter_mut() {
            *x /= sum;
        }
        let diff: f64 = v.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut v, &mut next);
        if diff < opts.stationary_tol {
            break;
        }
    }
    v
}

struct RitzPair {
    value: Complex64,
    residual: f64,
    /// Real part of the Hessenberg eigenvector, for explicit restarts.
    krylov_coeffs: Vec<f64>,
}

/// One Arnoldi sweep on the deflated operator. Returns the Ritz pairs and
/// the final Krylov basis column for restarting.
fn arnoldi_sweep(
    op: &ReducedOperator,
    deflator: &Deflator,
    start: &[f64],
    max_krylov: usize,
) -> Result<(Vec<RitzPair>, Vec<Vec<f64>>)> {
    let dim = op.dim();
    let mut v0 = start.to_vec();
    deflator.project(&mut v0);
    let norm = l2(&v0);
    if norm < 1e-300 {
        return Err(Error::NoSubleadingEigenvalue);
    }
    for x in v0.iter_mut() {
        *x /= norm;
    }
    let k_max = max_krylov.min(dim.saturating_sub(2)).max(1);
    let mut basis: Vec<Vec<f64>> = vec![v0];
    let mut h = vec![vec![0.0f64; k_max]; k_max + 1];
    let mut k_eff = k_max;
    let mut buf = vec![0.0; dim];
    for j in 0..k_max {
        op.apply_slice(&basis[j], &mut buf);
        deflator.project(&mut buf);
        // modified Gram-Schmidt with one reorthogonalization pass
        for (i, vi) in basis.iter().enumerate() {
            let c = dot(vi, &buf);
            h[i][j] += c;
            axpy(&mut buf, vi, -c);
        }
        for (i, vi) in basis.iter().enumerate() {
            let c = dot(vi, &buf);
            h[i][j] += c;
            axpy(&mut buf, vi, -c);
        }
        let beta = l2(&buf);
        h[j + 1][j] = beta;
        if beta < 1e-14 {
            // invariant subspace found: Ritz values of the leading block
            // are exact eigenvalues
            k_eff = j + 1;
            break;
        }
        let mut next = buf.clone();
        for x in next.iter_mut() {
            *x /= beta;
        }
        basis.push(next);
    }

    let mut hk = Mat::<f64>::zeros(k_eff, k_eff);
    for i in 0..k_eff {
        for j in 0..k_eff {
            hk[(i, j)] = h[i][j];
        }
    }
    let beta_tail = h[k_eff][k_eff - 1];
    let ritz = hessenberg_ritz_pairs(&hk, beta_tail)?;
    Ok((ritz, basis))
}

fn hessenberg_ritz_pairs(hk: &Mat<f64>, beta_tail: f64) -> Result<Vec<RitzPair>> {
    let k = hk.nrows();
    let eigen = hk
        .eigen()
        .map_err(|e| Error::EigenBackend(format!("{e:?}")))?;
    let values = eigen.S();
    let vectors = eigen.U();
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let tail = vectors[(k - 1, j)].norm();
        out.push(RitzPair {
            value: Complex64::new(values[j].re, values[j].im),
            residual: beta_tail * tail,
            krylov_coeffs: (0..k).map(|i| vectors[(i, j)].re).collect(),
        });
    }
    Ok(out)
}

fn iterative_run(
    op: &ReducedOperator,
    deflator: &Deflator,
    start: Vec<f64>,
    opts: &EigenOptions,
) -> Result<SubleadingEigen> {
    let cutoff = 1.0 - opts.unit_tolerance;
    let mut start = start;
    let mut iterations = 0usize;
    for _ in 0..=opts.max_restarts {
        let (ritz, basis) = arnoldi_sweep(op, deflator, &start, opts.max_krylov)?;
        iterations += basis.len();
        for r in &ritz {
            let converged = r.residual <= opts.residual_tol.max(1e-12 * r.value.norm());
            if converged && r.value.norm() > 1.0 + 1e-8 {
                return Err(Error::SpectrumAnomaly {
                    modulus: r.value.norm(),
                });
            }
        }
        let target = ritz
            .iter()
            .filter(|r| r.value.norm() < cutoff)
            .max_by(|a, b| a.value.norm().partial_cmp(&b.value.norm()).unwrap());
        match target {
            None => {
                // the deflated spectrum holds nothing below the unit
                // cluster (identity-like operator)
                return Err(Error::NoSubleadingEigenvalue);
            }
            Some(t) if t.residual <= opts.residual_tol.max(1e-12 * t.value.norm()) => {
                let mut moduli: Vec<f64> = ritz.iter().map(|r| r.value.norm()).collect();
                // the deflated directions carry their own unit eigenvalues
                moduli.push(1.0);
                moduli.push(1.0);
                moduli.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
                return Ok(SubleadingEigen {
                    lambda: t.value.norm(),
                    complex_flag: t.value.im.abs() > 1e-6 * t.value.norm(),
                    top_moduli: moduli.into_iter().take(5).collect(),
                    iterative: true,
                    start_discrepancy: None,
                });
            }
            Some(t) => {
                // explicit restart from the target's Ritz vector
                let mut new_start = vec![0.0; op.dim()];
                for (b, &c) in basis.iter().zip(&t.krylov_coeffs) {
                    axpy(&mut new_start, b, c);
                }
                start = new_start;
            }
        }
    }
    Err(Error::NoConvergence { iterations })
}

fn iterative_path(op: &ReducedOperator, opts: &EigenOptions) -> Result<SubleadingEigen> {
    let dim = op.dim();
    let deflator = Deflator {
        pi: stationary_vector(op, opts),
    };
    // start vector pinned to the all-ones vector minus deflated components
    let first = iterative_run(op, &deflator, vec![1.0; dim], opts)?;
    if !opts.second_start_check {
        return Ok(first);
    }
    // deterministic perturbed start: splitmix-filled positive entries
    let mut second_start = Vec::with_capacity(dim);
    let mut state = 0x5DEECE66Du64;
    for _ in 0..dim {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        second_start.push(0.5 + (state >> 11) as f64 / (1u64 << 53) as f64);
    }
    let second = iterative_run(op, &deflator, second_start, opts)?;
    let discrepancy = (first.lambda - second.lambda).abs();
    let mut best = if second.lambda > first.lambda {
        second
    } else {
        first
    };
    best.start_discrepancy = Some(discrepancy);
    Ok(best)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], x: &[f64], alpha: f64) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
