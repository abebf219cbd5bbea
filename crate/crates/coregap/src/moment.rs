//! The reduced space of symmetric Pauli second moments.
//!
//! Each qubit contributes one of three symbols: identity `1`, `z`, or `ε`
//! (the statistically merged X/Y classes). A basis state of the reduced
//! space is a base-3 digit string of length n; digit k belongs to global
//! qubit k (little-endian, matching the statevector bit order), so qubit q
//! of core c owns digit `c · n_qubits_per_core + q`. The weight stored per
//! string is the sum of E[r_P²] over the 2^(#ε) full Pauli strings in the
//! class.

use crate::error::{Error, Result};

/// Per-qubit symbol of a reduced basis string.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum ReducedSymbol {
    Identity = 0,
    Z = 1,
    Eps = 2,
}

impl ReducedSymbol {
    pub fn from_digit(d: usize) -> Self {
        match d {
            0 => ReducedSymbol::Identity,
            1 => ReducedSymbol::Z,
            2 => ReducedSymbol::Eps,
            _ => unreachable!("base-3 digit"),
        }
    }
}

/// 3^n, the reduced dimension for n qubits.
pub fn moment_dim(n_qubits: usize) -> usize {
    3usize.pow(n_qubits as u32)
}

/// Base-3 digit of `index` at position `k`.
#[inline]
pub fn digit(index: usize, k: usize) -> usize {
    (index / 3usize.pow(k as u32)) % 3
}

/// Replaces digit `k` of `index` with `d`.
#[inline]
pub fn with_digit(index: usize, k: usize, d: usize) -> usize {
    let p = 3usize.pow(k as u32);
    index + (d as isize - digit(index, k) as isize) as usize * p
}

/// Non-negative weights over the 3^n reduced basis strings.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentVector {
    weights: Vec<f64>,
}

impl MomentVector {
    pub fn new(weights: Vec<f64>) -> Self {
        MomentVector { weights }
    }

    pub fn zeros(dim: usize) -> Self {
        MomentVector {
            weights: vec![0.0; dim],
        }
    }

    /// Exact reduced moments of |0…0⟩: weight 1 on every string over
    /// {1, z}, 0 on any string containing ε.
    pub fn of_zero_state(n_qubits: usize) -> Self {
        let dim = moment_dim(n_qubits);
        let mut weights = vec![0.0; dim];
        for (idx, w) in weights.iter_mut().enumerate() {
            if (0..n_qubits).all(|k| digit(idx, k) < 2) {
                *w = 1.0;
            }
        }
        MomentVector { weights }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// Total weight; conserved (at 2^n for pure states) by every reduced
    /// operator.
    pub fn component_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::LengthMismatch {
                left: self.dim(),
                right: dim,
            });
        }
        Ok(())
    }
}
