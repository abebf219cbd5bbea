//! Gate-event sampling and deterministic per-circuit random streams.
//!
//! A layer consists of `intracore_steps` sampled events per core (cores in
//! ascending order, steps in order within a core) followed by one sampled
//! inter-core CZ per link in canonical link order. Every circuit in an
//! ensemble draws from its own stream, derived from
//! `(master_seed, circuit_index)`, so ensembles are reproducible and can be
//! evaluated in any order.

use crate::config::CircuitConfig;
use crate::error::{Error, Result};
use crate::gate;
use crate::topology::{build_topology, LinkSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One sampled gate. Qubit indices are global: qubit `q` of core `c` is
/// `c · n_qubits_per_core + q`.
#[derive(Clone, Debug, PartialEq)]
pub enum GateEvent {
    /// Variational rotation with ZYZ Euler angles (φ, θ, λ).
    SingleQubit { qubit: usize, angles: [f64; 3] },
    /// CZ on two qubits of the same core.
    IntraCz { q1: usize, q2: usize },
    /// CZ across a topology link; control and target name the sampled
    /// configuration (CZ itself is symmetric).
    InterCz { control: usize, target: usize },
}

/// Ordered event list for one circuit realization.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitRealization {
    pub events: Vec<GateEvent>,
}

impl CircuitRealization {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Domain tags keep circuit streams and Haar-reference streams disjoint
/// even under a shared master seed.
pub const STREAM_DOMAIN_CIRCUIT: u64 = 0x63697263_75697473; // "circuits"
pub const STREAM_DOMAIN_HAAR: u64 = 0x68616172_72656673; // "haarrefs"

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Documented 64-bit mix: member `index` of the SplitMix64 stream whose
/// state is seeded from `(master_seed, domain)`.
pub fn derive_stream_seed(master_seed: u64, domain: u64, index: u64) -> u64 {
    let base = splitmix64(master_seed ^ splitmix64(domain));
    splitmix64(base.wrapping_add(index.wrapping_mul(GOLDEN_GAMMA)))
}

/// The RNG stream owned by circuit `circuit_index` of an ensemble.
pub fn circuit_stream(master_seed: u64, circuit_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_stream_seed(
        master_seed,
        STREAM_DOMAIN_CIRCUIT,
        circuit_index,
    ))
}

/// Draws one intracore event for `core_index`.
///
/// With probability `p_single` a uniformly chosen qubit receives a Haar
/// rotation; otherwise an ordered qubit pair, uniform over the
/// `n_q (n_q − 1)` possibilities, receives a CZ.
pub fn sample_intracore_gate<R: Rng + ?Sized>(
    rng: &mut R,
    n_qubits_per_core: usize,
    p_single: f64,
    core_index: usize,
) -> Result<GateEvent> {
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
    let base = core_index * nq;
    if rng.random::<f64>() < p_single {
        let qubit = base + rng.random_range(0..nq);
        Ok(GateEvent::SingleQubit {
            qubit,
            angles: gate::sample_haar_angles(rng),
        })
    } else {
        let k = rng.random_range(0..nq * (nq - 1));
        let i = k / (nq - 1);
        let mut j = k % (nq - 1);
        if j >= i {
            j += 1;
        }
        Ok(GateEvent::IntraCz {
            q1: base + i,
            q2: base + j,
        })
    }
}

/// Draws one inter-core CZ for `link`, uniform over the
/// `2 n_q²` (control core, control qubit, target qubit) configurations.
pub fn sample_intercore_gate<R: Rng + ?Sized>(
    rng: &mut R,
    link: (usize, usize),
    n_qubits_per_core: usize,
) -> Result<GateEvent> {
    let (a, b) = link;
    if a >= b {
        return Err(Error::InvalidLink { a, b });
    }
    let nq = n_qubits_per_core;
    let k = rng.random_range(0..2 * nq * nq);
    let (side, rem) = (k / (nq * nq), k % (nq * nq));
    let (qc, qt) = (rem / nq, rem % nq);
    let (ctrl_core, tgt_core) = if side == 0 { (a, b) } else { (b, a) };
    Ok(GateEvent::InterCz {
        control: ctrl_core * nq + qc,
        target: tgt_core * nq + qt,
    })
}

/// Samples the full event list of circuit `circuit_index`.
pub fn sample_circuit(config: &CircuitConfig, circuit_index: u64) -> Result<CircuitRealization> {
    config.validate()?;
    let links = build_topology(config.topology, config.n_cores)?;
    sample_circuit_with_links(config, &links, circuit_index)
}

/// Same as [`sample_circuit`] with an explicit link set (the empty set gives
/// the no-interaction diagnostic ensemble).
pub fn sample_circuit_with_links(
    config: &CircuitConfig,
    links: &LinkSet,
    circuit_index: u64,
) -> Result<CircuitRealization> {
    let mut rng = circuit_stream(config.master_seed, circuit_index);
    let per_layer = config.n_cores * config.intracore_steps + links.n_links();
    let mut events = Vec::with_capacity(config.n_layers * per_layer);
    for _ in 0..config.n_layers {
        for core in 0..config.n_cores {
            for _ in 0..config.intracore_steps {
                events.push(sample_intracore_gate(
                    &mut rng,
                    config.n_qubits_per_core,
                    config.p_single,
                    core,
                )?);
            }
        }
        for &link in links.links() {
            events.push(sample_intercore_gate(
                &mut rng,
                link,
                config.n_qubits_per_core,
            )?);
        }
    }
    Ok(CircuitRealization { events })
}

/// Number of gate events in one complete layer: D = N_c · I + N_links.
pub fn depth_per_layer(config: &CircuitConfig) -> Result<usize> {
    let links = build_topology(config.topology, config.n_cores)?;
    Ok(config.n_cores * config.intracore_steps + links.n_links())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::TopologyKind;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn config(nc: usize, nq: usize, i: usize, l: usize, topo: TopologyKind) -> CircuitConfig {
        CircuitConfig {
            n_cores: nc,
            n_qubits_per_core: nq,
            intracore_steps: i,
            n_layers: l,
            topology: topo,
            p_single: 0.5,
            c_rand: 1.0 / 3.0,
            master_seed: 11,
            ensemble_size: 1,
        }
    }

    fn chi2_ok(observed: &[u64], expected_probs: &[f64]) -> bool {
        let total: u64 = observed.iter().sum();
        let stat: f64 = observed
            .iter()
            .zip(expected_probs)
            .map(|(&o, &p)| {
                let e = p * total as f64;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        let dof = (observed.len() - 1) as f64;
        let crit = ChiSquared::new(dof).unwrap().inverse_cdf(0.999);
        stat < crit
    }

    #[test]
    fn event_count_examples() {
        let c = config(2, 2, 2, 1, TopologyKind::Linear);
        assert_eq!(sample_circuit(&c, 0).unwrap().len(), 5);
        assert_eq!(depth_per_layer(&c).unwrap(), 5);

        let c = config(3, 2, 3, 2, TopologyKind::Ring);
        assert_eq!(sample_circuit(&c, 0).unwrap().len(), 24);
    }

    #[test]
    fn depth_formula_examples() {
        assert_eq!(
            depth_per_layer(&config(3, 2, 2, 1, TopologyKind::Linear)).unwrap(),
            8
        );
        assert_eq!(
            depth_per_layer(&config(4, 2, 0, 1, TopologyKind::Full)).unwrap(),
            6
        );
        assert_eq!(
            depth_per_layer(&config(4, 2, 5, 1, TopologyKind::Ring)).unwrap(),
            24
        );
    }

    #[test]
    fn identical_inputs_reproduce_identical_event_lists() {
        let c = config(3, 2, 2, 2, TopologyKind::Star);
        let a = sample_circuit(&c, 5).unwrap();
        let b = sample_circuit(&c, 5).unwrap();
        assert_eq!(a, b);
        let other = sample_circuit(&c, 6).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn degenerate_core_is_rejected() {
        let mut rng = circuit_stream(0, 0);
        let err = sample_intracore_gate(&mut rng, 1, 0.5, 0).unwrap_err();
        assert!(matches!(err, Error::DegenerateCore { .. }));
        // p_single = 1 makes a single-qubit core legal
        assert!(sample_intracore_gate(&mut rng, 1, 1.0, 0).is_ok());
    }

    #[test]
    fn forced_single_branch_is_uniform_over_qubits() {
        let mut rng = circuit_stream(1, 0);
        let mut counts = [0u64; 2];
        for _ in 0..100_000 {
            match sample_intracore_gate(&mut rng, 2, 1.0, 0).unwrap() {
                GateEvent::SingleQubit { qubit, .. } => counts[qubit] += 1,
                other => panic!("unexpected event {other:?}"),
            }
        }
        assert!(chi2_ok(&counts, &[0.5, 0.5]));
    }

    #[test]
    fn forced_pair_branch_is_uniform_over_ordered_pairs() {
        let mut rng = circuit_stream(2, 0);
        let mut counts = std::collections::HashMap::new();
        for _ in 0..120_000 {
            match sample_intracore_gate(&mut rng, 3, 0.0, 0).unwrap() {
                GateEvent::IntraCz { q1, q2 } => *counts.entry((q1, q2)).or_insert(0u64) += 1,
                other => panic!("unexpected event {other:?}"),
            }
        }
        assert_eq!(counts.len(), 6);
        let observed: Vec<u64> = counts.values().copied().collect();
        assert!(chi2_ok(&observed, &vec![1.0 / 6.0; 6]));
    }

    #[test]
    fn branch_frequency_matches_p_single() {
        let mut rng = circuit_stream(3, 0);
        let mut counts = [0u64; 2];
        for _ in 0..100_000 {
            match sample_intracore_gate(&mut rng, 2, 0.3, 0).unwrap() {
                GateEvent::SingleQubit { .. } => counts[0] += 1,
                _ => counts[1] += 1,
            }
        }
        assert!(chi2_ok(&counts, &[0.3, 0.7]));
    }

    #[test]
    fn intercore_uniform_over_configurations() {
        let mut rng = circuit_stream(4, 0);
        let mut counts = std::collections::HashMap::new();
        for _ in 0..160_000 {
            match sample_intercore_gate(&mut rng, (0, 1), 2).unwrap() {
                GateEvent::InterCz { control, target } => {
                    *counts.entry((control, target)).or_insert(0u64) += 1
                }
                other => panic!("unexpected event {other:?}"),
            }
        }
        assert_eq!(counts.len(), 8, "2 n_q^2 = 8 configurations");
        let observed: Vec<u64> = counts.values().copied().collect();
        assert!(chi2_ok(&observed, &vec![0.125; 8]));
    }

    #[test]
    fn intercore_single_qubit_cores() {
        let mut rng = circuit_stream(5, 0);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..100 {
            match sample_intercore_gate(&mut rng, (0, 1), 1).unwrap() {
                GateEvent::InterCz { control, target } => {
                    seen.insert((control, target));
                }
                other => panic!("unexpected event {other:?}"),
            }
        }
        let expect: std::collections::HashSet<_> = [(0, 1), (1, 0)].into_iter().collect();
        assert_eq!(seen, expect);
    }

    #[test]
    fn intercore_global_index_arithmetic() {
        let mut rng = circuit_stream(6, 0);
        for _ in 0..200 {
            match sample_intercore_gate(&mut rng, (2, 5), 2).unwrap() {
                GateEvent::InterCz { control, target } => {
                    let lo = control.min(target);
                    let hi = control.max(target);
                    assert!(
                        (4..=5).contains(&lo),
                        "core 2 of width 2 owns globals 4..=5"
                    );
                    assert!((10..=11).contains(&hi));
                }
                other => panic!("unexpected event {other:?}"),
            }
        }
    }

    #[test]
    fn invalid_link_is_rejected() {
        let mut rng = circuit_stream(7, 0);
        assert!(sample_intercore_gate(&mut rng, (3, 3), 2).is_err());
        assert!(sample_intercore_gate(&mut rng, (4, 1), 2).is_err());
    }

    #[test]
    fn disjoint_streams_are_uncorrelated() {
        // adjacent circuit indices: the f64 draws should show no linear
        // correlation beyond a few standard errors
        let n = 20_000;
        for (i, j) in [(0u64, 1u64), (1, 2), (10, 11)] {
            let mut a = circuit_stream(99, i);
            let mut b = circuit_stream(99, j);
            let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for _ in 0..n {
                let x: f64 = a.random();
                let y: f64 = b.random();
                sx += x;
                sy += y;
                sxx += x * x;
                syy += y * y;
                sxy += x * y;
            }
            let nf = n as f64;
            let cov = sxy / nf - (sx / nf) * (sy / nf);
            let vx = sxx / nf - (sx / nf).powi(2);
            let vy = syy / nf - (sy / nf).powi(2);
            let corr = cov / (vx * vy).sqrt();
            assert!(corr.abs() < 5.0 / nf.sqrt(), "corr({i},{j}) = {corr}");
        }
    }

    #[test]
    fn seed_mix_spreads_indices() {
        let seeds: std::collections::HashSet<u64> = (0..1000)
            .map(|k| derive_stream_seed(0, STREAM_DOMAIN_CIRCUIT, k))
            .collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(
            derive_stream_seed(0, STREAM_DOMAIN_CIRCUIT, 0),
            derive_stream_seed(0, STREAM_DOMAIN_HAAR, 0)
        );
    }

    #[test]
    fn layer_structure_orders_cores_then_links() {
        let mut c = config(2, 2, 1, 1, TopologyKind::Linear);
        c.p_single = 1.0;
        let circ = sample_circuit(&c, 0).unwrap();
        assert_eq!(circ.len(), 3);
        match circ.events[0] {
            GateEvent::SingleQubit { qubit, .. } => assert!(qubit < 2, "core 0 first"),
            ref other => panic!("unexpected event {other:?}"),
        }
        match circ.events[1] {
            GateEvent::SingleQubit { qubit, .. } => assert!(qubit >= 2, "core 1 second"),
            ref other => panic!("unexpected event {other:?}"),
        }
        assert!(matches!(circ.events[2], GateEvent::InterCz { .. }));
    }
}
