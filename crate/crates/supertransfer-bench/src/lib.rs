//! Shared fixtures for the solver benchmarks: the two-donor reference
//! aggregate in its shielded and fully noisy variants, plus the two-bus
//! circuit that realizes it.

use supertransfer::{Circuit2Spec, Coupling, CrossCoupling, SystemSpec};

/// Two donors at 148 MHz above one acceptor, V^D = -10, V^DA = 10, with the
/// donor environments switched off (λ^D = 0, λ^A = 80).
pub fn protected_spec() -> SystemSpec {
    SystemSpec {
        donor_energies: vec![148.0, 148.0],
        acceptor_energies: vec![0.0],
        donor_coupling: Coupling::Uniform(-10.0),
        acceptor_coupling: Coupling::Uniform(0.0),
        cross_coupling: CrossCoupling::Uniform(10.0),
        donor_disorder: 0.0,
        acceptor_disorder: 0.0,
        donor_reorg: vec![0.0, 0.0],
        acceptor_reorg: vec![80.0],
    }
}

/// The same aggregate with the donor environments on (λ^D = 10).
pub fn noisy_spec() -> SystemSpec {
    let mut spec = protected_spec();
    spec.donor_reorg = vec![10.0, 10.0];
    spec
}

/// Two qubit pairs coupled through resonator buses, deep in the dispersive
/// regime (|C/Δ| = 0.05), reducing to the three-site aggregate above.
pub fn bus_circuit() -> Circuit2Spec {
    Circuit2Spec {
        donor_energies: vec![74.0, 74.0],
        acceptor_energy: 0.0,
        donor_bus_freq: 1148.0,
        acceptor_bus_freq: 1000.0,
        donor_bus_couplings: vec![50.0, 50.0],
        acceptor_bus_coupling: 50.0,
        bus_bus_coupling: 100.0,
    }
}
