//! Reduced Markov operators on the space of symmetric second moments.
//!
//! One layer of the circuit averages to
//! `M_total = M_inter · M_intra^I`, where `M_intra` is the Kronecker power
//! over cores of the intracore mixture `M_core`, and `M_inter` is the
//! product over topology links of uniform mixtures of inter-core CZ
//! permutations. All operators are column-stochastic: column `q` holds the
//! weight distribution that basis string `q` feeds into, so component sums
//! of moment vectors are conserved.

pub mod eigen;
pub mod pauli;

use crate::config::{CircuitConfig, MAX_MARKOV_DIM};
use crate::error::{Error, Result};
use crate::moment::{digit, moment_dim, MomentVector};
use crate::topology::{build_topology, LinkSet};
use faer::Mat;
use pauli::reduced_cz_map;

/// Dimension up to which operators are materialized densely at build time;
/// larger operators stay matrix-free.
pub const DENSE_BUILD_DIM: usize = 729;

/// The 3×3 reduced matrix R(c) of a randomized single-qubit gate,
/// in (1, z, ε) order:
///
/// ```text
/// [ 1    0        0      ]
/// [ 0    c      (1−c)/2  ]
/// [ 0   1−c     (1+c)/2  ]
/// ```
///
/// c = 1/3 is the fully Haar-random point.
pub fn reduced_single_qubit_matrix(c_rand: f64) -> Result<Mat<f64>> {
    if !(-1.0..=1.0).contains(&c_rand) {
        return Err(Error::OutOfRange {
            what: "c_rand",
            value: c_rand,
            range: "[-1, 1]",
        });
    }
    let mut m = Mat::zeros(3, 3);
    m[(0, 0)] = 1.0;
    m[(1, 1)] = c_rand;
    m[(1, 2)] = (1.0 - c_rand) / 2.0;
    m[(2, 1)] = 1.0 - c_rand;
    m[(2, 2)] = (1.0 + c_rand) / 2.0;
    Ok(m)
}

/// One inter-core link: a uniform mixture of embedded CZ pair
/// permutations. The 2·n_q² sampled configurations collapse onto n_q²
/// distinct permutations of weight 1/n_q² each (the two control orderings
/// induce the same permutation).
#[derive(Clone, Debug)]
struct LinkFactor {
    /// Global digit positions (qubit of core α, qubit of core β).
    configs: Vec<(usize, usize)>,
}

impl LinkFactor {
    /// Gather-form application; the CZ pair map is an involution, so the
    /// same routine serves the transpose.
    fn apply(&self, src: &[f64], dst: &mut [f64]) {
        let cz = reduced_cz_map();
        let w = 1.0 / self.configs.len() as f64;
        for (j, out) in dst.iter_mut().enumerate() {
            let mut acc = 0.0;
            for &(g1, g2) in &self.configs {
                let d1 = digit(j, g1);
                let d2 = digit(j, g2);
                let (e1, e2) = cz.apply(d1, d2);
                let src_idx = (j as isize
                    + (e1 as isize - d1 as isize) * 3isize.pow(g1 as u32)
                    + (e2 as isize - d2 as isize) * 3isize.pow(g2 as u32))
                    as usize;
                acc += src[src_idx];
            }
            *out = w * acc;
        }
    }
}

#[derive(Clone, Debug)]
enum Repr {
    /// Explicit matrix, column-stochastic.
    Dense(Mat<f64>),
    /// Kronecker power of a per-core matrix, applied core by core.
    IntraLayer { core: Mat<f64>, n_cores: usize },
    /// Product of link mixtures; `links[0]` is applied first.
    InterLayer { links: Vec<LinkFactor> },
    /// Factors applied in listed order, each `power` times.
    Composite { factors: Vec<(ReducedOperator, usize)> },
}

/// A linear operator on [`MomentVector`]s, realized dense or matrix-free.
#[derive(Clone, Debug)]
pub struct ReducedOperator {
    dim: usize,
    repr: Repr,
}

impl ReducedOperator {
    pub fn from_dense(m: Mat<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        ReducedOperator {
            dim: m.nrows(),
            repr: Repr::Dense(m),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.repr, Repr::Dense(_))
    }

    /// Applies the operator to a raw slice.
    pub fn apply_slice(&self, src: &[f64], dst: &mut [f64]) {
        assert_eq!(src.len(), self.dim);
        assert_eq!(dst.len(), self.dim);
        self.apply_impl(src, dst, false);
    }

    /// Applies the transpose (row sums become column sums).
    pub fn apply_transpose_slice(&self, src: &[f64], dst: &mut [f64]) {
        assert_eq!(src.len(), self.dim);
        assert_eq!(dst.len(), self.dim);
        self.apply_impl(src, dst, true);
    }

    fn apply_impl(&self, src: &[f64], dst: &mut [f64], transpose: bool) {
        match &self.repr {
            Repr::Dense(m) => {
                if transpose {
                    for (j, out) in dst.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for (i, &x) in src.iter().enumerate() {
                            acc += m[(i, j)] * x;
                        }
                        *out = acc;
                    }
                } else {
                    dst.fill(0.0);
                    for (j, &x) in src.iter().enumerate() {
                        if x == 0.0 {
                            continue;
                        }
                        for (i, out) in dst.iter_mut().enumerate() {
                            *out += m[(i, j)] * x;
                        }
                    }
                }
            }
            Repr::IntraLayer { core, n_cores } => {
                let block = core.nrows();
                let mut cur = src.to_vec();
                let mut next = vec![0.0; src.len()];
                let mut stride = 1usize;
                for _ in 0..*n_cores {
                    apply_core_factor(core, stride, block, &cur, &mut next, transpose);
                    std::mem::swap(&mut cur, &mut next);
                    stride *= block;
                }
                dst.copy_from_slice(&cur);
            }
            Repr::InterLayer { links } => {
                if links.is_empty() {
                    dst.copy_from_slice(src);
                    return;
                }
                // transpose reverses the product order; each factor is a
                // symmetric matrix (mixture of involutions)
                let mut cur = src.to_vec();
                let mut next = vec![0.0; src.len()];
                let order: Vec<&LinkFactor> = if transpose {
                    links.iter().rev().collect()
                } else {
                    links.iter().collect()
                };
                for factor in order {
                    factor.apply(&cur, &mut next);
                    std::mem::swap(&mut cur, &mut next);
                }
                dst.copy_from_slice(&cur);
            }
            Repr::Composite { factors } => {
                let mut cur = src.to_vec();
                let mut next = vec![0.0; src.len()];
                let order: Vec<(&ReducedOperator, usize)> = if transpose {
                    factors.iter().rev().map(|(op, p)| (op, *p)).collect()
                } else {
                    factors.iter().map(|(op, p)| (op, *p)).collect()
                };
                for (op, power) in order {
                    for _ in 0..power {
                        op.apply_impl(&cur, &mut next, transpose);
                        std::mem::swap(&mut cur, &mut next);
                    }
                }
                dst.copy_from_slice(&cur);
            }
        }
    }

    /// Applies the operator to a moment vector.
    pub fn apply_moments(&self, v: &MomentVector) -> Result<MomentVector> {
        v.check_dim(self.dim)?;
        let mut out = MomentVector::zeros(self.dim);
        self.apply_slice(v.weights(), out.weights_mut());
        Ok(out)
    }

    /// Column sums, computed as 1ᵀM via one transpose application.
    pub fn column_sums(&self) -> Vec<f64> {
        let ones = vec![1.0; self.dim];
        let mut out = vec![0.0; self.dim];
        self.apply_transpose_slice(&ones, &mut out);
        out
    }

    /// Checks column-stochasticity within `tol`.
    pub fn verify_column_stochastic(&self, tol: f64) -> Result<()> {
        let dev = self
            .column_sums()
            .iter()
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max);
        if dev > tol {
            return Err(Error::NotStochastic { deviation: dev });
        }
        Ok(())
    }

    /// Materializes the operator column by column.
    pub fn to_dense(&self) -> Mat<f64> {
        if let Repr::Dense(m) = &self.repr {
            return m.clone();
        }
        let mut out = Mat::zeros(self.dim, self.dim);
        let mut basis = vec![0.0; self.dim];
        let mut col = vec![0.0; self.dim];
        for j in 0..self.dim {
            basis[j] = 1.0;
            self.apply_slice(&basis, &mut col);
            basis[j] = 0.0;
            for (i, &x) in col.iter().enumerate() {
                out[(i, j)] = x;
            }
        }
        out
    }

    /// Writes the operator as sparse triplets: a header line
    /// `dim n_cores n_qubits_per_core topology I p_single c_rand`
    /// followed by one `row col value` line per structural nonzero.
    pub fn write_triplets<W: std::io::Write>(
        &self,
        config: &CircuitConfig,
        out: &mut W,
    ) -> Result<()> {
        writeln!(
            out,
            "{} {} {} {} {} {} {}",
            self.dim,
            config.n_cores,
            config.n_qubits_per_core,
            config.topology,
            config.intracore_steps,
            config.p_single,
            config.c_rand
        )?;
        let dense = self.to_dense();
        for j in 0..self.dim {
            for i in 0..self.dim {
                let v = dense[(i, j)];
                if v != 0.0 {
                    writeln!(out, "{i} {j} {v}")?;
                }
            }
        }
        Ok(())
    }
}

fn apply_core_factor(
    core: &Mat<f64>,
    stride: usize,
    block: usize,
    src: &[f64],
    dst: &mut [f64],
    transpose: bool,
) {
    let dim = src.len();
    let outer = dim / (stride * block);
    for hi in 0..outer {
        let base = hi * stride * block;
        for r in 0..block {
            let out_base = base + r * stride;
            for lo in 0..stride {
                dst[out_base + lo] = 0.0;
            }
            for b in 0..block {
                let coeff = if transpose { core[(b, r)] } else { core[(r, b)] };
                if coeff == 0.0 {
                    continue;
                }
                let in_base = base + b * stride;
                for lo in 0..stride {
                    dst[out_base + lo] += coeff * src[in_base + lo];
                }
            }
        }
    }
}

fn kron(high: &Mat<f64>, low: &Mat<f64>) -> Mat<f64> {
    let (hr, hc) = (high.nrows(), high.ncols());
    let (lr, lc) = (low.nrows(), low.ncols());
    let mut out = Mat::zeros(hr * lr, hc * lc);
    for i in 0..hr {
        for j in 0..hc {
            let h = high[(i, j)];
            if h == 0.0 {
                continue;
            }
            for k in 0..lr {
                for l in 0..lc {
                    out[(i * lr + k, j * lc + l)] = h * low[(k, l)];
                }
            }
        }
    }
    out
}

/// The intracore mixture on one core of `n_qubits_per_core` qubits:
/// single-qubit R(c) terms with weight p₁/n_q each, plus ordered-pair CZ
/// permutations with weight (1 − p₁)/(n_q (n_q − 1)) each.
pub fn build_core_matrix(
    n_qubits_per_core: usize,
    p_single: f64,
    c_rand: f64,
) -> Result<ReducedOperator> {
    let nq = n_qubits_per_core;
    if nq == 0 {
        return Err(Error::OutOfRange {
            what: "n_qubits_per_core",
            value: 0.0,
            range: ">= 1",
        });
    }
    if !(0.0..=1.0).contains(&p_single) {
        return Err(Error::OutOfRange {
            what: "p_single",
            value: p_single,
            range: "[0, 1]",
        });
    }
    if nq == 1 && p_single < 1.0 {
        return Err(Error::DegenerateCore { p_single });
    }
    let r = reduced_single_qubit_matrix(c_rand)?;
    let dim = moment_dim(nq);
    let mut m = Mat::<f64>::zeros(dim, dim);

    let w1 = p_single / nq as f64;
    if w1 > 0.0 {
        for k in 0..nq {
            for idx in 0..dim {
                let d = digit(idx, k);
                let base = idx - d * 3usize.pow(k as u32);
                for row in 0..3 {
                    let coeff = r[(row, d)];
                    if coeff != 0.0 {
                        m[(base + row * 3usize.pow(k as u32), idx)] += w1 * coeff;
                    }
                }
            }
        }
    }
    if p_single < 1.0 {
        let cz = reduced_cz_map();
        let w2 = (1.0 - p_single) / (nq * (nq - 1)) as f64;
        for i in 0..nq {
            for j in 0..nq {
                if i == j {
                    continue;
                }
                for idx in 0..dim {
                    let d1 = digit(idx, i);
                    let d2 = digit(idx, j);
                    let (e1, e2) = cz.apply(d1, d2);
                    let to = (idx as isize
                        + (e1 as isize - d1 as isize) * 3isize.pow(i as u32)
                        + (e2 as isize - d2 as isize) * 3isize.pow(j as u32))
                        as usize;
                    m[(to, idx)] += w2;
                }
            }
        }
    }
    Ok(ReducedOperator::from_dense(m))
}

/// `M_intra`: Kronecker power of the core matrix over all cores, realized
/// matrix-free above [`DENSE_BUILD_DIM`]. Core 0 owns the low digits.
pub fn build_intra_operator(
    n_cores: usize,
    core_matrix: &ReducedOperator,
) -> Result<ReducedOperator> {
    let block = core_matrix.dim();
    let dim = block
        .checked_pow(n_cores as u32)
        .filter(|&d| d <= MAX_MARKOV_DIM)
        .ok_or(Error::CapExceeded {
            what: "markov dimension",
            value: usize::MAX,
            cap: MAX_MARKOV_DIM,
        })?;
    let core = core_matrix.to_dense();
    if dim <= DENSE_BUILD_DIM {
        let mut acc = core.clone();
        for _ in 1..n_cores {
            acc = kron(&core, &acc);
        }
        Ok(ReducedOperator::from_dense(acc))
    } else {
        Ok(ReducedOperator {
            dim,
            repr: Repr::IntraLayer { core, n_cores },
        })
    }
}

/// `M_inter`: product over links, in canonical link order with the first
/// link applied first (rightmost factor), of uniform CZ-placement mixtures.
pub fn build_inter_operator(
    link_set: &LinkSet,
    n_qubits_per_core: usize,
    n_cores: usize,
) -> Result<ReducedOperator> {
    let nq = n_qubits_per_core;
    let n = n_cores * nq;
    let dim = moment_dim(n);
    if dim > MAX_MARKOV_DIM {
        return Err(Error::CapExceeded {
            what: "markov dimension",
            value: dim,
            cap: MAX_MARKOV_DIM,
        });
    }
    let mut links = Vec::with_capacity(link_set.n_links());
    for &(a, b) in link_set.links() {
        if a >= b || b >= n_cores {
            return Err(Error::InvalidLink { a, b });
        }
        let mut configs = Vec::with_capacity(nq * nq);
        for q1 in 0..nq {
            for q2 in 0..nq {
                configs.push((a * nq + q1, b * nq + q2));
            }
        }
        links.push(LinkFactor { configs });
    }
    Ok(ReducedOperator {
        dim,
        repr: Repr::InterLayer { links },
    })
}

/// `M_total = M_inter · M_intra^I` for the configured architecture.
pub fn build_total_operator(config: &CircuitConfig) -> Result<ReducedOperator> {
    config.validate()?;
    let links = build_topology(config.topology, config.n_cores)?;
    build_total_operator_with_links(config, &links)
}

/// Variant with an explicit link set; the empty set yields the factorized
/// no-interaction diagnostic `M_intra^I`.
pub fn build_total_operator_with_links(
    config: &CircuitConfig,
    links: &LinkSet,
) -> Result<ReducedOperator> {
    let core = build_core_matrix(config.n_qubits_per_core, config.p_single, config.c_rand)?;
    let intra = build_intra_operator(config.n_cores, &core)?;
    let inter = build_inter_operator(links, config.n_qubits_per_core, config.n_cores)?;
    let dim = intra.dim();
    Ok(ReducedOperator {
        dim,
        repr: Repr::Composite {
            factors: vec![(intra, config.intracore_steps), (inter, 1)],
        },
    })
}
