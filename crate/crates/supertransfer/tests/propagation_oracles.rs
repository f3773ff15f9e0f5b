//! Cross-validation of the propagators: the adaptive Lindblad integrator
//! against an exact superoperator exponential, the stochastic solver against
//! its motional-narrowing Lindblad limit, and fitted rates against the
//! closed-form two-site golden-rule result.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use supertransfer::*;

fn table1_spec() -> SystemSpec {
    SystemSpec {
        donor_energies: vec![148.0, 148.0],
        acceptor_energies: vec![0.0],
        donor_coupling: Coupling::Uniform(-10.0),
        acceptor_coupling: Coupling::Uniform(0.0),
        cross_coupling: CrossCoupling::Uniform(10.0),
        donor_disorder: 5.0,
        acceptor_disorder: 0.0,
        donor_reorg: vec![10.0, 10.0],
        acceptor_reorg: vec![80.0],
    }
}

fn table1_rates(spec: &SystemSpec) -> DephasingModel {
    DephasingModel {
        site_rates: spec.dephasing_rates(DEFAULT_GAMMA_PHI_PER_LAMBDA),
    }
}

#[test]
fn integrator_matches_superoperator_exponential() {
    let spec = table1_spec();
    let h = build_hamiltonian(&spec, Some(7)).unwrap();
    let deph = table1_rates(&spec);
    let rho0 = prepare_state(&StatePrep::Mixture(vec![0.5, 0.5]), &h).unwrap();
    let result = propagate_lindblad(&h, &deph, &rho0, 2.0, 8).unwrap();

    let l = liouvillian_matrix(&h, &deph);
    let v0 = DVector::from_column_slice(rho0.rho.as_slice());
    for (t, rho_t) in result.times.iter().zip(&result.states) {
        let u = expm(&l.map(|z| z * C64::from(*t)));
        let v = &u * &v0;
        let reference = DMatrix::from_column_slice(3, 3, v.as_slice());
        let diff = (rho_t - &reference).map(|z| z.norm()).max();
        assert!(diff < 2e-6, "t = {t}: max entry deviation {diff}");
    }
}

#[test]
fn output_grid_density_does_not_change_the_solution() {
    let mut spec = table1_spec();
    spec.donor_disorder = 0.0;
    let h = build_hamiltonian(&spec, None).unwrap();
    let deph = table1_rates(&spec);
    let rho0 = prepare_state(&StatePrep::Localized(1), &h).unwrap();
    let coarse = propagate_lindblad(&h, &deph, &rho0, 4.0, 100).unwrap();
    let fine = propagate_lindblad(&h, &deph, &rho0, 4.0, 200).unwrap();
    let pa_coarse = coarse.acceptor_population();
    let pa_fine = fine.acceptor_population();
    for i in 0..=100 {
        let d = (pa_coarse[i] - pa_fine[2 * i]).abs();
        assert!(d < 1e-6, "grid-dependent solution at index {i}: {d}");
    }
}

#[test]
fn stochastic_solver_reaches_the_motional_narrowing_limit() {
    // Fast OU noise with Γ_φ = 2σ²/ω_c = 10 μs⁻¹ per site must reproduce the
    // Lindblad dephasing model within trajectory noise.
    let spec = SystemSpec {
        donor_energies: vec![0.0],
        acceptor_energies: vec![0.0],
        donor_coupling: Coupling::Uniform(0.0),
        acceptor_coupling: Coupling::Uniform(0.0),
        cross_coupling: CrossCoupling::Uniform(5.0),
        donor_disorder: 0.0,
        acceptor_disorder: 0.0,
        donor_reorg: vec![0.0],
        acceptor_reorg: vec![0.0],
    };
    let h = build_hamiltonian(&spec, None).unwrap();
    let rho0 = prepare_state(&StatePrep::Localized(1), &h).unwrap();
    let sigma = 5000f64.sqrt();
    let cutoff = 1000.0;
    let noise = vec![OuSite { sigma, cutoff }; 2];
    let gamma_phi = 2.0 * sigma * sigma / cutoff;
    let deph = DephasingModel { site_rates: vec![gamma_phi; 2] };

    let lind = propagate_lindblad(&h, &deph, &rho0, 1.2, 24).unwrap();
    let stoch = propagate_stochastic(&h, &noise, &rho0, 1.2, 24, 2000, 17).unwrap();
    let pa_l = lind.acceptor_population();
    let pa_s = stoch.acceptor_population();
    let sup = pa_l
        .iter()
        .zip(&pa_s)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(sup < 0.025, "sup-norm deviation {sup}");
}

#[test]
fn fitted_rate_matches_haken_strobl_formula() {
    // Detuned two-site system: the forward rate γ·P_∞ recovered from the fit
    // must match 2V²Γ/(Δ² + Γ²) with Γ the summed site dephasing.
    let spec = SystemSpec {
        donor_energies: vec![138.0],
        acceptor_energies: vec![0.0],
        donor_coupling: Coupling::Uniform(0.0),
        acceptor_coupling: Coupling::Uniform(0.0),
        cross_coupling: CrossCoupling::Uniform(10.0),
        donor_disorder: 0.0,
        acceptor_disorder: 0.0,
        donor_reorg: vec![10.0],
        acceptor_reorg: vec![80.0],
    };
    let h = build_hamiltonian(&spec, None).unwrap();
    let deph = table1_rates(&spec);
    let rho0 = prepare_state(&StatePrep::Localized(1), &h).unwrap();
    let res = propagate_lindblad(&h, &deph, &rho0, 9.0, 600).unwrap();
    let fit = fit_exponential(&res.times, &res.acceptor_population()).unwrap();
    assert!(fit.exponential_valid, "r² = {}", fit.r_squared);
    // Equal forward/backward rates leave half the population on each side.
    assert!((fit.p_infinity - 0.5).abs() < 0.01, "P∞ = {}", fit.p_infinity);
    let reference = analytic_two_level_rate(10.0, 138.0, 20.0 + 160.0);
    let rel = (fit.forward_rate() - reference).abs() / reference;
    assert!(rel < 0.10, "forward {} vs analytic {reference}", fit.forward_rate());
}

#[test]
fn randomized_scenarios_preserve_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for case in 0..25 {
        let n_d = rng.gen_range(1..=3usize);
        let n_a = rng.gen_range(1..=2usize);
        let spec = SystemSpec {
            donor_energies: (0..n_d).map(|_| rng.gen_range(-100.0..200.0)).collect(),
            acceptor_energies: (0..n_a).map(|_| rng.gen_range(-100.0..200.0)).collect(),
            donor_coupling: Coupling::Uniform(rng.gen_range(-30.0..30.0)),
            acceptor_coupling: Coupling::Uniform(rng.gen_range(-30.0..30.0)),
            cross_coupling: CrossCoupling::Uniform(rng.gen_range(-30.0..30.0)),
            donor_disorder: rng.gen_range(0.0..10.0),
            acceptor_disorder: 0.0,
            donor_reorg: (0..n_d).map(|_| rng.gen_range(0.0..100.0)).collect(),
            acceptor_reorg: (0..n_a).map(|_| rng.gen_range(0.0..100.0)).collect(),
        };
        let h = build_hamiltonian(&spec, Some(case)).unwrap();
        let deph = table1_rates(&spec);
        let prep = match case % 3 {
            0 => StatePrep::Localized(rng.gen_range(1..=n_d)),
            1 => {
                let raw: Vec<f64> = (0..n_d).map(|_| rng.gen_range(0.1..1.0)).collect();
                let total: f64 = raw.iter().sum();
                StatePrep::Mixture(raw.into_iter().map(|p| p / total).collect())
            }
            _ => StatePrep::LowestDonorEigenstate,
        };
        let rho0 = prepare_state(&prep, &h).unwrap();
        let res = propagate_lindblad(&h, &deph, &rho0, 0.5, 25).unwrap();
        let report = res.invariant_report();
        assert!(
            report.ok(1e-8),
            "case {case}: trace dev {}, min eig {}, herm dev {}",
            report.max_trace_dev,
            report.min_eigenvalue,
            report.max_herm_dev
        );
    }
}
