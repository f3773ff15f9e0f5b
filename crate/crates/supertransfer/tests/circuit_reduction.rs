//! Circuit-to-site-model equivalences: gauge invariance of the projected
//! circuit Hamiltonian, dispersive elimination accuracy and its quadratic
//! breakdown, and participation control through detuning.

use supertransfer::*;

fn dephasing(h: &SystemHamiltonian, qubit_rates: &[f64]) -> DephasingModel {
    // Rates assigned to qubit sites in order; bus modes stay noiseless.
    let mut site_rates = vec![0.0; h.dim()];
    let mut next = 0;
    for (i, kind) in h.kinds.iter().enumerate() {
        if *kind != SiteKind::Bus {
            site_rates[i] = qubit_rates[next];
            next += 1;
        }
    }
    DephasingModel { site_rates }
}

#[test]
fn uniform_energy_shift_leaves_populations_invariant() {
    // The projection constant is a gauge choice: shifting every qubit energy
    // by the same amount must not move any population.
    let base = Circuit1Spec {
        donor_energies: vec![74.0, 74.0],
        acceptor_energy: 0.0,
        qubit_coupling: -10.0,
        cross_coupling: 10.0,
        tunable_window: None,
    };
    let shifted = Circuit1Spec {
        donor_energies: vec![99.0, 99.0],
        acceptor_energy: 25.0,
        ..base.clone()
    };
    let h_a = circuit1_single_excitation(&base).unwrap();
    let h_b = circuit1_single_excitation(&shifted).unwrap();
    let deph = DephasingModel { site_rates: vec![20.0, 20.0, 160.0] };
    let rho0 = prepare_state(&StatePrep::LowestDonorEigenstate, &h_a).unwrap();
    let res_a = propagate_lindblad(&h_a, &deph, &rho0, 3.0, 120).unwrap();
    let res_b = propagate_lindblad(&h_b, &deph, &rho0, 3.0, 120).unwrap();
    for site in 0..3 {
        let pa = res_a.site_population(site);
        let pb = res_b.site_population(site);
        for (x, y) in pa.iter().zip(&pb) {
            assert!((x - y).abs() < 1e-10, "site {site}: {x} vs {y}");
        }
    }
}

#[test]
fn projected_circuit_reproduces_the_site_model() {
    let circuit = Circuit1Spec {
        donor_energies: vec![74.0, 76.5],
        acceptor_energy: 0.0,
        qubit_coupling: -10.0,
        cross_coupling: 10.0,
        tunable_window: None,
    };
    let spec = SystemSpec {
        donor_energies: vec![148.0, 153.0],
        acceptor_energies: vec![0.0],
        donor_coupling: Coupling::Uniform(-10.0),
        acceptor_coupling: Coupling::Uniform(0.0),
        cross_coupling: CrossCoupling::Uniform(10.0),
        donor_disorder: 0.0,
        acceptor_disorder: 0.0,
        donor_reorg: vec![0.0, 0.0],
        acceptor_reorg: vec![0.0],
    };
    let h_circuit = circuit1_single_excitation(&circuit).unwrap();
    let h_model = build_hamiltonian(&spec, None).unwrap();
    let diff = (&h_circuit.matrix - &h_model.matrix).abs().max();
    assert!(diff < 1e-12, "matrices differ by {diff}");
}

fn bus_circuit(ratio: f64) -> Circuit2Spec {
    let delta: f64 = -1000.0;
    let c = ratio * delta.abs();
    Circuit2Spec {
        donor_energies: vec![74.0, 74.0],
        acceptor_energy: 0.0,
        donor_bus_freq: 148.0 - delta,
        acceptor_bus_freq: -delta,
        donor_bus_couplings: vec![c, c],
        acceptor_bus_coupling: c,
        bus_bus_coupling: 100.0,
    }
}

#[test]
fn dispersive_eigenvalues_match_within_second_order_scale() {
    let report = validate_reduction(&bus_circuit(0.05)).unwrap();
    assert!(report.dispersive_ok);
    assert!(report.min_qubit_weight > 0.5);
    // Absolute deviations live on the (C/Δ)²·|Δ| scale.
    assert!(
        report.max_abs_deviation <= 0.05f64.powi(2) * 1000.0,
        "abs deviation {}",
        report.max_abs_deviation
    );
    assert!(report.max_rel_deviation <= 4.0 * 0.05f64.powi(2));
}

#[test]
fn reduction_deviation_grows_quadratically_with_coupling() {
    let devs: Vec<f64> = [0.05, 0.1, 0.2]
        .iter()
        .map(|&r| validate_reduction(&bus_circuit(r)).unwrap().max_rel_deviation)
        .collect();
    let r1 = devs[1] / devs[0];
    let r2 = devs[2] / devs[1];
    assert!((3.0..=5.5).contains(&r1), "0.1/0.05 deviation ratio {r1}");
    assert!((3.0..=5.5).contains(&r2), "0.2/0.1 deviation ratio {r2}");
}

#[test]
fn dephased_qubit_leaks_into_its_bus_at_the_coherence_damped_rate() {
    // Site dephasing has a flat spectrum, so a noisy qubit hops incoherently
    // into its far-detuned bus at 2C²Γ₂/(Δ²+Γ₂²) with Γ₂ the pair's coherence
    // damping rate. Isolate one qubit-bus pair and check the rate directly.
    let spec = Circuit2Spec {
        donor_energies: vec![74.0],
        acceptor_energy: 0.0,
        donor_bus_freq: 1148.0,
        acceptor_bus_freq: 3000.0,
        donor_bus_couplings: vec![100.0],
        acceptor_bus_coupling: 0.0,
        bus_bus_coupling: 0.0,
    };
    let h = circuit2_full_single_excitation(&spec).unwrap();
    let rho0 = prepare_state(&StatePrep::Localized(1), &h).unwrap();
    let res = propagate_lindblad(&h, &dephasing(&h, &[20.0, 0.0]), &rho0, 16.0, 800).unwrap();
    let fit = fit_exponential(&res.times, &res.site_population(1)).unwrap();
    let gamma2 = 20.0 / 2.0;
    let delta: f64 = 148.0 - 1148.0;
    let predicted = 2.0 * 100.0f64.powi(2) * gamma2 / (delta.powi(2) + gamma2.powi(2));
    let measured = fit.forward_rate();
    assert!(
        (measured / predicted - 1.0).abs() < 0.05,
        "leak rate {measured} vs predicted {predicted}"
    );
    assert!((fit.p_infinity - 0.5).abs() < 0.01, "plateau {}", fit.p_infinity);
}

#[test]
fn qubit_dephasing_thermalizes_the_full_circuit_past_the_reduction() {
    // The bus leak above outpaces the fourth-order effective transfer
    // (C^DA·(C/Δ)² ≪ (C/Δ)²Γ for any realistic Γ), so with dephasing on the
    // qubit sites the full register relaxes toward the uniform state over all
    // five levels while the three-site picture saturates at one third. The
    // dispersive reduction is spectrally faithful but not dynamically faithful
    // once qubit noise is switched on; pin that divergence down.
    let spec = bus_circuit(0.1);
    let full = circuit2_full_single_excitation(&spec).unwrap();
    let reduced_spec = frohlich_nakajima_reduce(&spec).unwrap();
    let reduced = build_hamiltonian(&reduced_spec, None).unwrap();

    let inv = 1.0 / 2f64.sqrt();
    // Donor-aggregate coefficients; prepare_state maps them onto the donor
    // sites of whichever basis the Hamiltonian carries.
    let bright = StatePrep::Delocalized(vec![C64::from(inv), C64::from(inv)]);
    let qubit_rates = [20.0, 20.0, 160.0];
    let res_full = propagate_lindblad(
        &full,
        &dephasing(&full, &qubit_rates),
        &prepare_state(&bright, &full).unwrap(),
        40.0,
        200,
    )
    .unwrap();
    let res_red = propagate_lindblad(
        &reduced,
        &dephasing(&reduced, &qubit_rates),
        &prepare_state(&bright, &reduced).unwrap(),
        40.0,
        200,
    )
    .unwrap();
    let pa_full = res_full.acceptor_population();
    let pa_red = res_red.acceptor_population();
    let full_final = *pa_full.last().unwrap();
    let red_final = *pa_red.last().unwrap();
    assert!(
        (full_final - 0.2).abs() < 0.02,
        "full register should thermalize to 1/5, got {full_final}"
    );
    assert!(red_final < 0.19, "reduced model reached {red_final} too fast");
    let sup = pa_full
        .iter()
        .zip(&pa_red)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(sup > 0.08, "divergence collapsed to {sup}");
}

#[test]
fn detuned_qubit_does_not_participate() {
    // Pushing one donor's excitation energy away by 10× its bus coupling
    // removes it from the dynamics, which is how the scaling circuit selects
    // its active aggregate.
    let spec = Circuit2Spec {
        donor_energies: vec![74.0, 74.0, 74.0 + 250.0],
        acceptor_energy: 0.0,
        donor_bus_freq: 1148.0,
        acceptor_bus_freq: 1000.0,
        donor_bus_couplings: vec![50.0, 50.0, 50.0],
        acceptor_bus_coupling: 50.0,
        bus_bus_coupling: 100.0,
    };
    let h = circuit2_full_single_excitation(&spec).unwrap();
    let inv = 1.0 / 2f64.sqrt();
    let bright_pair =
        StatePrep::Delocalized(vec![C64::from(inv), C64::from(inv), C64::from(0.0)]);
    let rho0 = prepare_state(&bright_pair, &h).unwrap();
    let res = propagate_lindblad(&h, &DephasingModel::none(6), &rho0, 2.0, 400).unwrap();
    let spectator = res.site_population(2);
    let max_pop = spectator.iter().cloned().fold(0.0, f64::max);
    assert!(max_pop < 0.01, "detuned qubit reached population {max_pop}");
}
