//! Numerical laboratory for the optimal intracore depth of multicore
//! random quantum circuits.
//!
//! Two independent engines probe the same question — how many intracore
//! gate iterations per layer maximize the per-gate convergence rate toward
//! the Haar ensemble:
//!
//! * an exact statevector engine with majorization/Lorenz-curve metrics
//!   over sampled circuit ensembles, and
//! * a reduced Markov engine that propagates symmetric Pauli second
//!   moments through `M_total = M_inter · M_intra^I` and reads off the
//!   normalized spectral gap Δ = 1 − Λ^(1/D), D = N_c·I + N_links.
//!
//! The `examples/` directory shows one runnable program per capability;
//! the `coregap` binary wraps the scans for batch use. Start with
//! [`config::CircuitConfig`], [`scan::scan_gap`] and [`scan::scan_idh`].

pub mod cli;
pub mod config;
pub mod circuit;
pub mod error;
pub mod gate;
pub mod markov;
pub mod metrics;
pub mod moment;
pub mod scan;
pub mod statevector;
pub mod topology;

pub use config::CircuitConfig;
pub use error::{Error, Result};
pub use topology::{build_topology, LinkSet, TopologyKind};
