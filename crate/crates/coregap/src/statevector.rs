//! Exact pure-state simulation of sampled circuits.
//!
//! Amplitude order is little-endian: qubit 0 is the least significant bit
//! of the basis index. This is fixed for bit-exact reproducibility.

use crate::circuit::{self, GateEvent};
use crate::config::{CircuitConfig, MAX_MOMENT_QUBITS, MAX_STATEVECTOR_QUBITS};
use crate::error::{Error, Result};
use crate::gate::SingleQubitGate;
use crate::moment::{moment_dim, MomentVector};
use crate::topology::LinkSet;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub use crate::gate::sample_haar_single_qubit;

/// Pure state on `n_qubits` qubits, 2^n complex amplitudes.
#[derive(Clone, Debug)]
pub struct Statevector {
    amps: Vec<Complex64>,
    n_qubits: usize,
}

/// Computational-basis probabilities of a state.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbVector {
    probs: Vec<f64>,
}

impl ProbVector {
    /// Validates non-negativity and normalization (1e-10).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|&p| p < 0.0) {
            return Err(Error::OutOfRange {
                what: "probability entry",
                value: probs.iter().cloned().fold(f64::INFINITY, f64::min),
                range: ">= 0",
            });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized { sum });
        }
        Ok(ProbVector { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

impl Statevector {
    /// |0…0⟩ on `n_qubits` qubits.
    pub fn new_zero(n_qubits: usize) -> Result<Self> {
        if n_qubits > MAX_STATEVECTOR_QUBITS {
            return Err(Error::CapExceeded {
                what: "n_qubits",
                value: n_qubits,
                cap: MAX_STATEVECTOR_QUBITS,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Statevector { amps, n_qubits })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Applies a single-qubit unitary to `qubit`.
    pub fn apply_single_qubit(&mut self, qubit: usize, u: &SingleQubitGate) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::IndexOutOfRange {
                index: qubit,
                len: self.n_qubits,
            });
        }
        let step = 1usize << qubit;
        let dim = self.amps.len();
        let mut base = 0;
        while base < dim {
            for low in base..base + step {
                let a0 = self.amps[low];
                let a1 = self.amps[low | step];
                self.amps[low] = u.m[0][0] * a0 + u.m[0][1] * a1;
                self.amps[low | step] = u.m[1][0] * a0 + u.m[1][1] * a1;
            }
            base += step << 1;
        }
        Ok(())
    }

    /// Applies CZ to the (unordered) qubit pair: amplitudes with both
    /// qubits set are negated.
    pub fn apply_cz(&mut self, q1: usize, q2: usize) -> Result<()> {
        if q1 == q2 {
            return Err(Error::EqualQubits { qubit: q1 });
        }
        for q in [q1, q2] {
            if q >= self.n_qubits {
                return Err(Error::IndexOutOfRange {
                    index: q,
                    len: self.n_qubits,
                });
            }
        }
        let mask = (1usize << q1) | (1usize << q2);
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            if idx & mask == mask {
                *amp = -*amp;
            }
        }
        Ok(())
    }

    pub fn apply_event(&mut self, event: &GateEvent) -> Result<()> {
        match event {
            GateEvent::SingleQubit { qubit, angles } => {
                self.apply_single_qubit(*qubit, &SingleQubitGate::from_zyz(*angles))
            }
            GateEvent::IntraCz { q1, q2 } => self.apply_cz(*q1, *q2),
            GateEvent::InterCz { control, target } => self.apply_cz(*control, *target),
        }
    }

    pub fn probabilities(&self) -> ProbVector {
        ProbVector {
            probs: self.amps.iter().map(|a| a.norm_sqr()).collect(),
        }
    }
}

/// Runs circuit `circuit_index` of the configured ensemble on |0…0⟩ and
/// returns the final state. A pure function of `(config, circuit_index)`.
pub fn run_circuit_state(config: &CircuitConfig, circuit_index: u64) -> Result<Statevector> {
    let realization = circuit::sample_circuit(config, circuit_index)?;
    run_events(config, &realization.events)
}

/// Variant with an explicit link set (diagnostic ensembles).
pub fn run_circuit_state_with_links(
    config: &CircuitConfig,
    links: &LinkSet,
    circuit_index: u64,
) -> Result<Statevector> {
    let realization = circuit::sample_circuit_with_links(config, links, circuit_index)?;
    run_events(config, &realization.events)
}

fn run_events(config: &CircuitConfig, events: &[GateEvent]) -> Result<Statevector> {
    let mut state = Statevector::new_zero(config.total_qubits())?;
    for event in events {
        state.apply_event(event)?;
    }
    Ok(state)
}

/// Computational-basis probabilities of circuit `circuit_index`.
pub fn run_circuit(config: &CircuitConfig, circuit_index: u64) -> Result<ProbVector> {
    Ok(run_circuit_state(config, circuit_index)?.probabilities())
}

/// A Haar-random pure state: normalized vector of 2^n complex Gaussians.
pub fn sample_haar_state<R: Rng + ?Sized>(rng: &mut R, n_qubits: usize) -> Result<Statevector> {
    if n_qubits > MAX_STATEVECTOR_QUBITS {
        return Err(Error::CapExceeded {
            what: "n_qubits",
            value: n_qubits,
            cap: MAX_STATEVECTOR_QUBITS,
        });
    }
    let mut amps = Vec::with_capacity(1 << n_qubits);
    for _ in 0..1usize << n_qubits {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        amps.push(Complex64::new(re, im));
    }
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    Ok(Statevector { amps, n_qubits })
}

/// Probabilities of a Haar-random pure state.
pub fn sample_haar_state_probs<R: Rng + ?Sized>(
    rng: &mut R,
    n_qubits: usize,
) -> Result<ProbVector> {
    Ok(sample_haar_state(rng, n_qubits)?.probabilities())
}

/// Exact reduced second moments of a pure state.
///
/// Every Pauli expectation r_P = ⟨ψ|P|ψ⟩ is computed, squared, and
/// accumulated into its reduced class (X, Y ↦ ε) by summation, so the
/// component sum equals Σ_P r_P² = 2^n for pure states. Cost is
/// 4^n · 2^n; capped at [`MAX_MOMENT_QUBITS`].
pub fn exact_reduced_moments(
    state: &Statevector,
    n_cores: usize,
    n_qubits_per_core: usize,
) -> Result<MomentVector> {
    let n = n_cores * n_qubits_per_core;
    if n != state.n_qubits {
        return Err(Error::LengthMismatch {
            left: n,
            right: state.n_qubits,
        });
    }
    if n > MAX_MOMENT_QUBITS {
        return Err(Error::CapExceeded {
            what: "n_qubits",
            value: n,
            cap: MAX_MOMENT_QUBITS,
        });
    }
    let amps = &state.amps;
    let dim = 1usize << n;
    let mut out = MomentVector::zeros(moment_dim(n));
    // Pauli digits per qubit: 0 = I, 1 = X, 2 = Y, 3 = Z
    for pauli in 0..4usize.pow(n as u32) {
        let mut xmask = 0usize; // qubits with X or Y (bit flip)
        let mut ymask = 0usize;
        let mut zmask = 0usize;
        let mut class = 0usize; // base-3 reduced index
        let mut pow3 = 1usize;
        let mut p = pauli;
        for q in 0..n {
            let d = p % 4;
            p /= 4;
            match d {
                1 => {
                    xmask |= 1 << q;
                    class += 2 * pow3;
                }
                2 => {
                    xmask |= 1 << q;
                    ymask |= 1 << q;
                    class += 2 * pow3;
                }
                3 => {
                    zmask |= 1 << q;
                    class += pow3;
                }
                _ => {}
            }
            pow3 *= 3;
        }
        // phase(i) = i^(#Y) * (-1)^popcount(i & (ymask | zmask))
        let n_y = ymask.count_ones() as usize;
        let i_pow = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ][n_y % 4];
        let signmask = ymask | zmask;
        let mut r = Complex64::new(0.0, 0.0);
        for i in 0..dim {
            let sign = if (i & signmask).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            r += amps[i ^ xmask].conj() * amps[i] * sign;
        }
        let r = (i_pow * r).re;
        out.weights_mut()[class] += r * r;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moment::digit;
    use crate::topology::TopologyKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn x_gate() -> SingleQubitGate {
        SingleQubitGate::from_zyz([0.0, std::f64::consts::PI, 0.0])
    }

    #[test]
    fn zero_state_examples() {
        let s = Statevector::new_zero(1).unwrap();
        assert_eq!(s.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert_eq!(s.amplitudes()[1], Complex64::new(0.0, 0.0));
        let s = Statevector::new_zero(2).unwrap();
        assert_eq!(s.amplitudes().len(), 4);
        assert_eq!(s.amplitudes()[0].re, 1.0);
        assert!(Statevector::new_zero(15).is_err());
    }

    #[test]
    fn x_like_gate_flips_zero() {
        let mut s = Statevector::new_zero(1).unwrap();
        s.apply_single_qubit(0, &x_gate()).unwrap();
        assert!(s.amplitudes()[0].norm() < 1e-15);
        assert!((s.amplitudes()[1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_gate_is_a_no_op() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut s = sample_haar_state(&mut rng, 3).unwrap();
        let before = s.amplitudes().to_vec();
        s.apply_single_qubit(1, &SingleQubitGate::identity()).unwrap();
        for (a, b) in before.iter().zip(s.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn gate_then_adjoint_restores_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let mut s = sample_haar_state(&mut rng, 3).unwrap();
            let before = s.amplitudes().to_vec();
            let u = sample_haar_single_qubit(&mut rng);
            s.apply_single_qubit(2, &u).unwrap();
            s.apply_single_qubit(2, &u.adjoint()).unwrap();
            for (a, b) in before.iter().zip(s.amplitudes()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn cz_negates_the_both_ones_amplitude() {
        let mut s = Statevector::new_zero(2).unwrap();
        s.apply_single_qubit(0, &x_gate()).unwrap();
        s.apply_single_qubit(1, &x_gate()).unwrap();
        let before = s.amplitudes()[3];
        s.apply_cz(0, 1).unwrap();
        assert!((s.amplitudes()[3] + before).norm() < 1e-15);
    }

    #[test]
    fn cz_is_a_symmetric_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s0 = sample_haar_state(&mut rng, 3).unwrap();
        let mut a = s0.clone();
        a.apply_cz(0, 2).unwrap();
        let mut b = s0.clone();
        b.apply_cz(2, 0).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert_eq!(x, y, "CZ(q1,q2) = CZ(q2,q1) exactly");
        }
        a.apply_cz(0, 2).unwrap();
        for (x, y) in a.amplitudes().iter().zip(s0.amplitudes()) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn cz_rejects_equal_or_out_of_range_qubits() {
        let mut s = Statevector::new_zero(2).unwrap();
        assert!(matches!(
            s.apply_cz(1, 1).unwrap_err(),
            Error::EqualQubits { .. }
        ));
        assert!(matches!(
            s.apply_cz(0, 2).unwrap_err(),
            Error::IndexOutOfRange { .. }
        ));
    }

    fn config(nc: usize, nq: usize, i: usize, l: usize) -> CircuitConfig {
        CircuitConfig {
            n_cores: nc,
            n_qubits_per_core: nq,
            intracore_steps: i,
            n_layers: l,
            topology: TopologyKind::Linear,
            p_single: 0.5,
            c_rand: 1.0 / 3.0,
            master_seed: 177,
            ensemble_size: 1,
        }
    }

    #[test]
    fn pure_intercore_layer_fixes_the_zero_state() {
        // I = 0: the layer is one CZ per link, and CZ fixes |0…0⟩
        let cfg = config(2, 2, 0, 1);
        let p = run_circuit(&cfg, 3).unwrap();
        assert!((p.probs()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn norm_is_preserved_through_a_deep_circuit() {
        let cfg = config(2, 2, 6, 3);
        let s = run_circuit_state(&cfg, 0).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-10);
        let p = s.probabilities();
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn two_single_qubit_cores_spread_probability() {
        let mut cfg = config(2, 1, 1, 1);
        cfg.p_single = 1.0;
        let p = run_circuit(&cfg, 5).unwrap();
        assert!(p.probs().iter().all(|&x| x > 0.0), "{:?}", p.probs());
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn run_circuit_is_bit_deterministic() {
        let cfg = config(2, 2, 3, 2);
        let a = run_circuit(&cfg, 9).unwrap();
        let b = run_circuit(&cfg, 9).unwrap();
        assert_eq!(a.probs(), b.probs(), "bit-identical across runs");
    }

    #[test]
    fn haar_state_probabilities_are_normalized_and_uniform_on_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let n = 6;
        let samples = 400;
        let mut mean = vec![0.0; 1 << n];
        for _ in 0..samples {
            let s = sample_haar_state(&mut rng, n).unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-12);
            for (m, p) in mean.iter_mut().zip(s.probabilities().probs()) {
                *m += p;
            }
        }
        let expect = 1.0 / (1 << n) as f64;
        // std err of each mean entry is about expect / sqrt(samples)
        let tol = 3.0 * expect / (samples as f64).sqrt();
        for m in &mean {
            assert!((m / samples as f64 - expect).abs() < tol);
        }
    }

    #[test]
    fn reduced_moments_of_zero_state() {
        let s = Statevector::new_zero(2).unwrap();
        let m = exact_reduced_moments(&s, 2, 1).unwrap();
        assert_eq!(m, MomentVector::of_zero_state(2));
    }

    #[test]
    fn reduced_moments_of_plus_state() {
        // |+⟩: x = 1, so weight 1 on "1", 0 on "z", 1 on "ε"
        let mut s = Statevector::new_zero(1).unwrap();
        let h = SingleQubitGate::from_zyz([0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI]);
        s.apply_single_qubit(0, &h).unwrap();
        let m = exact_reduced_moments(&s, 1, 1).unwrap();
        assert!((m.weights()[0] - 1.0).abs() < 1e-12);
        assert!(m.weights()[1].abs() < 1e-12);
        assert!((m.weights()[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn component_sum_is_two_to_the_n_for_pure_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let s = sample_haar_state(&mut rng, 2).unwrap();
            let m = exact_reduced_moments(&s, 2, 1).unwrap();
            assert!((m.component_sum() - 4.0).abs() < 1e-9);
        }
        let s = sample_haar_state(&mut rng, 4).unwrap();
        let m = exact_reduced_moments(&s, 2, 2).unwrap();
        assert!((m.component_sum() - 16.0).abs() < 1e-9);
    }

    #[test]
    fn moment_cap_is_enforced() {
        let s = Statevector::new_zero(8).unwrap();
        assert!(matches!(
            exact_reduced_moments(&s, 4, 2).unwrap_err(),
            Error::CapExceeded { .. }
        ));
    }

    #[test]
    fn single_qubit_moments_match_bloch_components() {
        // a state with known Bloch vector: Ry(θ) |0⟩ has x = sin θ, z = cos θ
        let theta = 0.9f64;
        let mut s = Statevector::new_zero(1).unwrap();
        s.apply_single_qubit(0, &SingleQubitGate::from_zyz([0.0, theta, 0.0]))
            .unwrap();
        let m = exact_reduced_moments(&s, 1, 1).unwrap();
        assert!((m.weights()[0] - 1.0).abs() < 1e-12);
        assert!((m.weights()[1] - theta.cos().powi(2)).abs() < 1e-12);
        assert!((m.weights()[2] - theta.sin().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn eps_weight_sums_x_and_y_members() {
        // phase gate on |+⟩ rotates x into y; the ε class keeps the sum
        let mut s = Statevector::new_zero(1).unwrap();
        let h = SingleQubitGate::from_zyz([0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI]);
        s.apply_single_qubit(0, &h).unwrap();
        s.apply_single_qubit(0, &SingleQubitGate::from_zyz([0.7, 0.0, 0.0]))
            .unwrap();
        let m = exact_reduced_moments(&s, 1, 1).unwrap();
        assert!((m.weights()[2] - 1.0).abs() < 1e-12, "x² + y² = 1");
    }

    #[test]
    fn moment_digits_follow_global_qubit_order() {
        // X on qubit 0 of a 2-qubit register: qubit 0 in class ε, qubit 1 in {1,z}
        let mut s = Statevector::new_zero(2).unwrap();
        s.apply_single_qubit(0, &x_gate()).unwrap();
        let m = exact_reduced_moments(&s, 2, 1).unwrap();
        for idx in 0..9 {
            let w = m.weights()[idx];
            if w != 0.0 {
                assert!(digit(idx, 0) != 2, "qubit 0 is |1⟩: z-like, not ε");
                assert!(digit(idx, 1) != 2, "qubit 1 is |0⟩");
            }
        }
        assert_eq!(m.component_sum(), 4.0);
    }
}
