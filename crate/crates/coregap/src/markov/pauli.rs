//! Brute-force Pauli conjugation oracle and the reduced CZ permutation it
//! induces.
//!
//! The oracle expands U P U† in the two-qubit Pauli basis and reports the
//! squared coefficients. For Clifford gates such as CZ every row is a point
//! mass, and classifying inputs and outputs into reduced symbols yields a
//! permutation on the 9 symbol pairs. The permutation is generated from the
//! oracle at first use, never hard-coded.

use crate::error::{Error, Result};
use crate::moment::ReducedSymbol;
use num_complex::Complex64;
use std::sync::OnceLock;

type M4 = [[Complex64; 4]; 4];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const PAULI_1: [[[Complex64; 2]; 2]; 4] = {
    let z0 = Complex64::new(0.0, 0.0);
    let r1 = Complex64::new(1.0, 0.0);
    let rm1 = Complex64::new(-1.0, 0.0);
    let i1 = Complex64::new(0.0, 1.0);
    let im1 = Complex64::new(0.0, -1.0);
    [
        [[r1, z0], [z0, r1]],   // I
        [[z0, r1], [r1, z0]],   // X
        [[z0, im1], [i1, z0]],  // Y
        [[r1, z0], [z0, rm1]],  // Z
    ]
};

/// Reduced class of a single-qubit Pauli digit (0=I, 1=X, 2=Y, 3=Z).
pub fn pauli_class(digit: usize) -> ReducedSymbol {
    match digit {
        0 => ReducedSymbol::Identity,
        3 => ReducedSymbol::Z,
        1 | 2 => ReducedSymbol::Eps,
        _ => unreachable!("base-4 digit"),
    }
}

/// kron(P_high, P_low): qubit 0 is the low two-level factor.
fn pauli_pair(p0: usize, p1: usize) -> M4 {
    let a = PAULI_1[p1];
    let b = PAULI_1[p0];
    let mut out = [[c(0.0, 0.0); 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[i * 2 + k][j * 2 + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn matmul(a: &M4, b: &M4) -> M4 {
    let mut out = [[c(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = c(0.0, 0.0);
            for k in 0..4 {
                s += a[i][k] * b[k][j];
            }
            out[i][j] = s;
        }
    }
    out
}

fn adjoint(a: &M4) -> M4 {
    let mut out = [[c(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

/// The two-qubit CZ matrix (basis index = q0 + 2·q1).
pub fn cz_gate_matrix() -> M4 {
    let mut m = [[c(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        m[i][i] = c(1.0, 0.0);
    }
    m[3][3] = c(-1.0, 0.0);
    m
}

/// The two-qubit identity matrix.
pub fn identity_gate_matrix() -> M4 {
    let mut m = [[c(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        m[i][i] = c(1.0, 0.0);
    }
    m
}

/// For each of the 16 two-qubit Pauli products P (index p0 + 4·p1), the
/// squared coefficients of U P U† in the Pauli basis (same indexing).
/// Rows sum to 1 for any unitary `gate`.
pub fn pauli_conjugation_weights(gate: &M4) -> Result<[[f64; 16]; 16]> {
    // unitarity check
    let prod = matmul(&adjoint(gate), gate);
    let mut dev: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let expect = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((prod[i][j] - expect).norm());
        }
    }
    if dev > 1e-10 {
        return Err(Error::NotUnitary { deviation: dev });
    }

    let gate_adj = adjoint(gate);
    let mut out = [[0.0; 16]; 16];
    for p in 0..16 {
        let conj = matmul(gate, &matmul(&pauli_pair(p % 4, p / 4), &gate_adj));
        for q in 0..16 {
            // coefficient = tr(Q · conj) / 4 (Paulis are Hermitian)
            let qm = pauli_pair(q % 4, q / 4);
            let mut tr = c(0.0, 0.0);
            for i in 0..4 {
                for k in 0..4 {
                    tr += qm[i][k] * conj[k][i];
                }
            }
            out[p][q] = (tr / 4.0).norm_sqr();
        }
    }
    Ok(out)
}

/// A permutation on the 9 reduced symbol pairs, indexed `s0 + 3·s1`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct PairPermutation {
    map: [usize; 9],
}

impl PairPermutation {
    /// Image of the symbol pair (digit 0, digit 1).
    #[inline]
    pub fn apply(&self, d0: usize, d1: usize) -> (usize, usize) {
        let t = self.map[d0 + 3 * d1];
        (t % 3, t / 3)
    }

    pub fn as_map(&self) -> &[usize; 9] {
        &self.map
    }
}

/// The reduced action of CZ on symbol pairs, generated by classifying the
/// brute-force conjugation oracle. Point masses and class consistency are
/// checked while building; both are mathematical identities for CZ.
pub fn reduced_cz_map() -> &'static PairPermutation {
    static MAP: OnceLock<PairPermutation> = OnceLock::new();
    MAP.get_or_init(|| {
        let weights =
            pauli_conjugation_weights(&cz_gate_matrix()).expect("CZ is unitary by construction");
        let mut map = [usize::MAX; 9];
        for p in 0..16 {
            let row = &weights[p];
            let mut target = None;
            for (q, &w) in row.iter().enumerate() {
                if w > 1e-12 {
                    assert!(
                        (w - 1.0).abs() < 1e-12 && target.is_none(),
                        "CZ conjugation must be a point mass"
                    );
                    target = Some(q);
                }
            }
            let q = target.expect("conjugation preserves Pauli norm");
            let src = pauli_class(p % 4) as usize + 3 * (pauli_class(p / 4) as usize);
            let dst = pauli_class(q % 4) as usize + 3 * (pauli_class(q / 4) as usize);
            assert!(
                map[src] == usize::MAX || map[src] == dst,
                "all members of a reduced class must map into one class"
            );
            map[src] = dst;
        }
        PairPermutation { map }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ID: usize = ReducedSymbol::Identity as usize;
    const ZED: usize = ReducedSymbol::Z as usize;
    const EPS: usize = ReducedSymbol::Eps as usize;

    #[test]
    fn cz_sends_x_tensor_i_to_x_tensor_z() {
        let w = pauli_conjugation_weights(&cz_gate_matrix()).unwrap();
        // input X⊗I has digits (1, 0); output X⊗Z digits (1, 3)
        let row = &w[1];
        assert!((row[1 + 4 * 3] - 1.0).abs() < 1e-12);
        assert_eq!(row.iter().filter(|&&x| x > 1e-12).count(), 1);
    }

    #[test]
    fn cz_fixes_z_tensor_z() {
        let w = pauli_conjugation_weights(&cz_gate_matrix()).unwrap();
        let idx = 3 + 4 * 3;
        assert!((w[idx][idx] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_gate_induces_the_identity_map() {
        let w = pauli_conjugation_weights(&identity_gate_matrix()).unwrap();
        for p in 0..16 {
            for q in 0..16 {
                let expect = if p == q { 1.0 } else { 0.0 };
                assert!((w[p][q] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rows_sum_to_one_for_a_nonclifford_unitary() {
        // a generic two-qubit unitary: exp of a Hermitian is overkill; use
        // a product of CZ and an embedded single-qubit rotation
        let mut u = cz_gate_matrix();
        let g = crate::gate::SingleQubitGate::from_zyz([0.3, 0.8, -0.2]);
        let mut emb = [[c(0.0, 0.0); 4]; 4];
        for i in 0..2 {
            for j in 0..2 {
                emb[i][j] = g.m[i][j];
                emb[i + 2][j + 2] = g.m[i][j];
            }
        }
        u = matmul(&u, &emb);
        let w = pauli_conjugation_weights(&u).unwrap();
        for row in &w {
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn non_unitary_input_is_rejected() {
        let mut m = identity_gate_matrix();
        m[0][0] = c(2.0, 0.0);
        assert!(matches!(
            pauli_conjugation_weights(&m).unwrap_err(),
            Error::NotUnitary { .. }
        ));
    }

    #[test]
    fn reduced_map_matches_the_known_involution() {
        let m = reduced_cz_map();
        assert_eq!(m.apply(ID, ID), (ID, ID));
        assert_eq!(m.apply(ZED, ID), (ZED, ID));
        assert_eq!(m.apply(ID, ZED), (ID, ZED));
        assert_eq!(m.apply(ZED, ZED), (ZED, ZED));
        assert_eq!(m.apply(EPS, ID), (EPS, ZED));
        assert_eq!(m.apply(EPS, ZED), (EPS, ID));
        assert_eq!(m.apply(ID, EPS), (ZED, EPS));
        assert_eq!(m.apply(ZED, EPS), (ID, EPS));
        assert_eq!(m.apply(EPS, EPS), (EPS, EPS));
    }

    #[test]
    fn reduced_map_squares_to_identity() {
        let m = reduced_cz_map();
        for d0 in 0..3 {
            for d1 in 0..3 {
                let (a, b) = m.apply(d0, d1);
                assert_eq!(m.apply(a, b), (d0, d1));
            }
        }
    }
}
