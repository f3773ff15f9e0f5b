//! Orchestration behind the CLI subcommands.
//!
//! Every operation takes a parsed scenario plus command-line overrides,
//! computes, and writes its artifacts into the output directory. All
//! randomness descends from one master seed: disorder realization r uses
//! stream `master + r` for its energy offsets (so sweeps share standardized
//! draws across cells and only the scale differs), and the stochastic solver
//! derives per-trajectory streams internally. Parallel sections reduce in
//! fixed order, so outputs are identical for any `--jobs` value.

use crate::output::{self, json_number, obj, OutputError};
use crate::scenario::{
    CalibrationSection, HorizonSpec, MethodSpec, Scenario, ScenarioError, SitesSection,
    SystemSection,
};
use rayon::prelude::*;
use serde_json::Value;
use std::path::{Path, PathBuf};
use supertransfer::{
    build_hamiltonian, check_rules, circuit1_single_excitation, empirical_autocorrelation,
    empirical_spectrum, fit_exponential, ou_spectrum, prepare_state, propagate_lindblad,
    propagate_stochastic, sample_ou_trajectory, validate_reduction, DephasingModel,
    Error as CoreError, NoiseMapping, NoiseTrajectory, OuSite, PropagationResult, RateFit,
    RuleVerdict, StatePrep, SystemHamiltonian, SystemSpec,
};

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("{context}: {source}")]
    Core {
        context: String,
        source: CoreError,
    },
    #[error("{0}")]
    Unsupported(String),
}

fn core(context: impl Into<String>) -> impl FnOnce(CoreError) -> RunnerError {
    let context = context.into();
    move |source| RunnerError::Core { context, source }
}

/// Command-line overrides applied on top of the scenario file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub method: Option<MethodSpec>,
}

/// Run `f` inside a dedicated thread pool when `--jobs` is given; otherwise
/// use the global one.
fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing

struct Prepared {
    spec: SystemSpec,
    mapping: NoiseMapping,
    prep: StatePrep,
    method: MethodSpec,
    horizon: f64,
    n_steps: usize,
    n_traj: usize,
    seed: u64,
    ensemble: usize,
}

fn site_spec_of(scenario: &Scenario) -> Result<(SystemSpec, Option<&SitesSection>), RunnerError> {
    match &scenario.system {
        SystemSection::Sites(s) => Ok((s.to_spec()?, Some(s))),
        SystemSection::Circuit1(c) => {
            // Project the circuit onto its one-excitation site network
            // (diagonal 2E_k, couplings unchanged) and carry the per-qubit
            // reorganization energies over.
            let h = circuit1_single_excitation(&c.to_spec()?).map_err(core("system"))?;
            let n_d = c.donor_energies.len();
            let spec = SystemSpec {
                donor_energies: (0..n_d).map(|i| h.matrix[(i, i)]).collect(),
                acceptor_energies: vec![h.matrix[(n_d, n_d)]],
                donor_coupling: supertransfer::Coupling::Uniform(c.qubit_coupling),
                acceptor_coupling: supertransfer::Coupling::Uniform(0.0),
                cross_coupling: supertransfer::CrossCoupling::Uniform(c.cross_coupling),
                donor_disorder: 0.0,
                acceptor_disorder: 0.0,
                donor_reorg: c.reorg[..n_d].to_vec(),
                acceptor_reorg: c.reorg[n_d..].to_vec(),
            };
            spec.validate().map_err(core("system"))?;
            Ok((spec, None))
        }
        SystemSection::Circuit2(_) => Err(RunnerError::Unsupported(
            "this command needs a site-model or circuit1 system; circuit2 scenarios are for \
             circuit-reduce"
                .into(),
        )),
    }
}

fn prepare(scenario: &Scenario, overrides: &Overrides) -> Result<Prepared, RunnerError> {
    let (spec, _) = site_spec_of(scenario)?;
    let mapping = scenario.noise.mapping();
    let prep = scenario.initial_state.to_prep(spec.n_donors())?;
    let method = overrides.method.unwrap_or(scenario.run.method);
    let horizon = match scenario.run.horizon {
        HorizonSpec::Fixed(t) => t,
        HorizonSpec::Auto(_) => estimate_horizon(&spec, &mapping),
    };
    Ok(Prepared {
        spec,
        mapping,
        prep,
        method,
        horizon,
        n_steps: scenario.run.n_steps,
        n_traj: scenario.run.n_trajectories,
        seed: overrides.seed.unwrap_or(scenario.run.seed),
        ensemble: scenario.run.disorder_ensemble,
    })
}

/// Golden-rule guess of the relaxation rate, used only to choose a horizon
/// long enough to show the plateau: k ≈ 2·N_D·N_A·V²·Γ₂/(Δ̄² + Γ₂²), then
/// t ≈ 12/(k/p∞) clamped to a sane window.
fn estimate_horizon(spec: &SystemSpec, mapping: &NoiseMapping) -> f64 {
    let n_d = spec.n_donors();
    let n_a = spec.n_acceptors();
    let v = spec.cross_coupling.max_abs(n_d, n_a);
    let m2 = (n_d * n_a) as f64 * v * v;
    let gamma_d: f64 =
        spec.donor_reorg.iter().map(|&l| mapping.dephasing_rate(l)).sum::<f64>() / n_d as f64;
    let gamma_a: f64 = spec
        .acceptor_reorg
        .iter()
        .map(|&l| mapping.dephasing_rate(l))
        .sum::<f64>()
        / n_a as f64;
    let gamma2 = (0.5 * (gamma_d + gamma_a)).max(1e-6);
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let detuning = mean(&spec.donor_energies) - mean(&spec.acceptor_energies);
    let k = 2.0 * m2 * gamma2 / (detuning * detuning + gamma2 * gamma2);
    let p_inf = n_a as f64 / (n_d + n_a) as f64;
    let relax = (k / p_inf).max(1e-3);
    (12.0 / relax).clamp(4.0, 240.0)
}

fn dephasing_model(spec: &SystemSpec, mapping: &NoiseMapping) -> DephasingModel {
    DephasingModel {
        site_rates: spec.dephasing_rates(mapping.gamma_phi_per_lambda),
    }
}

fn ou_sites(spec: &SystemSpec, mapping: &NoiseMapping) -> Vec<OuSite> {
    spec.donor_reorg
        .iter()
        .chain(spec.acceptor_reorg.iter())
        .map(|&l| mapping.ou_site(l))
        .collect()
}

/// One propagation of one disorder realization.
fn propagate_one(
    p: &Prepared,
    spec: &SystemSpec,
    disorder_seed: Option<u64>,
    traj_seed: u64,
) -> Result<PropagationResult, RunnerError> {
    let h = build_hamiltonian(spec, disorder_seed).map_err(core("system"))?;
    let rho0 = prepare_state(&p.prep, &h).map_err(core("initial_state"))?;
    match p.method {
        MethodSpec::Lindblad => {
            let deph = dephasing_model(spec, &p.mapping);
            propagate_lindblad(&h, &deph, &rho0, p.horizon, p.n_steps).map_err(core("run"))
        }
        MethodSpec::Stochastic => {
            let noise = ou_sites(spec, &p.mapping);
            propagate_stochastic(&h, &noise, &rho0, p.horizon, p.n_steps, p.n_traj, traj_seed)
                .map_err(core("run"))
        }
    }
}

/// Average propagations over disorder realizations (the density matrix is
/// linear in the ensemble, so averaging states is exact).
fn propagate_ensemble(p: &Prepared, spec: &SystemSpec) -> Result<PropagationResult, RunnerError> {
    if p.ensemble == 1 {
        let seed = if spec.donor_disorder > 0.0 || spec.acceptor_disorder > 0.0 {
            Some(p.seed)
        } else {
            None
        };
        return propagate_one(p, spec, seed, p.seed);
    }
    let runs: Vec<Result<PropagationResult, RunnerError>> = (0..p.ensemble)
        .into_par_iter()
        .map(|r| {
            let realization = p.seed.wrapping_add(r as u64);
            propagate_one(p, spec, Some(realization), realization)
        })
        .collect();
    let mut iter = runs.into_iter();
    let mut acc = iter.next().expect("ensemble is non-empty")?;
    let mut count = 1.0;
    for run in iter {
        let run = run?;
        for (a, b) in acc.states.iter_mut().zip(run.states.iter()) {
            *a += b;
        }
        count += 1.0;
    }
    for s in acc.states.iter_mut() {
        *s /= supertransfer::C64::new(count, 0.0);
    }
    Ok(acc)
}

fn rules_json(rules: &RuleVerdict) -> Value {
    obj(vec![
        ("rule1_ratio", json_number(rules.rule1_ratio)),
        ("rule2_delta_ratio", json_number(rules.rule2_ratios.0)),
        ("rule2_lambda_ratio", json_number(rules.rule2_ratios.1)),
        ("pass_rule1", Value::Bool(rules.pass_rule1)),
        ("pass_rule2", Value::Bool(rules.pass_rule2)),
    ])
}

fn fit_json(fit: &RateFit) -> Value {
    obj(vec![
        ("gamma", json_number(fit.gamma)),
        ("p_infinity", json_number(fit.p_infinity)),
        ("forward_rate", json_number(fit.forward_rate())),
        ("r_squared", json_number(fit.r_squared)),
        ("rms_residual", json_number(fit.rms_residual)),
        ("lag1_autocorr", json_number(fit.lag1_autocorr)),
        ("oscillatory", Value::Bool(fit.oscillatory)),
        ("exponential_valid", Value::Bool(fit.exponential_valid)),
    ])
}

// ---------------------------------------------------------------------------
// transfer

pub struct TransferOutcome {
    pub fit: Option<RateFit>,
    pub fit_error: Option<String>,
    pub rules: RuleVerdict,
    pub artifacts: Vec<PathBuf>,
    /// Exit-status view: true only for a converged, valid exponential fit.
    pub valid: bool,
}

pub fn run_transfer(
    scenario: &Scenario,
    overrides: &Overrides,
    out_dir: &Path,
) -> Result<TransferOutcome, RunnerError> {
    let p = prepare(scenario, overrides)?;
    let result = with_pool(overrides.jobs, || propagate_ensemble(&p, &p.spec))?;
    let rules = check_rules(&p.spec).map_err(core("system"))?;

    let acceptor = result.acceptor_population();
    let (fit, fit_error) = match fit_exponential(&result.times, &acceptor) {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let valid = fit.as_ref().map(|f| f.exponential_valid).unwrap_or(false);

    let mut artifacts = Vec::new();
    artifacts.push(output::write_populations(out_dir, &result)?);

    let method_name = match p.method {
        MethodSpec::Lindblad => "lindblad",
        MethodSpec::Stochastic => "stochastic",
    };
    let mut entries = vec![
        ("scenario", Value::String(scenario.name.clone())),
        ("method", Value::String(method_name.into())),
        ("master_seed", Value::Number(p.seed.into())),
        ("horizon", json_number(p.horizon)),
        (
            "disorder_ensemble",
            Value::Number((p.ensemble as u64).into()),
        ),
        ("n_donors", Value::Number((p.spec.n_donors() as u64).into())),
        (
            "n_acceptors",
            Value::Number((p.spec.n_acceptors() as u64).into()),
        ),
        ("rules", rules_json(&rules)),
    ];
    match (&fit, &fit_error) {
        (Some(f), _) => entries.push(("fit", fit_json(f))),
        (None, Some(msg)) => {
            entries.push(("fit", Value::Null));
            entries.push(("fit_error", Value::String(msg.clone())));
        }
        _ => unreachable!(),
    }
    let path = out_dir.join("rates.json");
    output::write_json(&path, &obj(entries))?;
    artifacts.push(path);

    Ok(TransferOutcome {
        fit,
        fit_error,
        rules,
        artifacts,
        valid,
    })
}

// ---------------------------------------------------------------------------
// sweep-rule2

pub struct SweepCell {
    pub lambda: f64,
    pub delta: f64,
    pub gamma: f64,
    pub normalized: f64,
    pub r_squared: f64,
    pub exponential_valid: bool,
    pub error: Option<String>,
}

pub struct SweepOutcome {
    pub gamma0: f64,
    pub cells: Vec<SweepCell>,
    pub artifacts: Vec<PathBuf>,
}

/// One fitted rate per cell. Cells are deterministic (the detuning ladder and
/// the reorganization energy fully specify the system), so a single
/// propagation suffices.
fn cell_rate(p: &Prepared, spec: &SystemSpec) -> Result<RateFit, String> {
    let res = propagate_one(p, spec, None, p.seed).map_err(|e| e.to_string())?;
    fit_exponential(&res.times, &res.acceptor_population()).map_err(|e| e.to_string())
}

pub fn run_rule2_sweep(
    scenario: &Scenario,
    overrides: &Overrides,
    out_dir: &Path,
) -> Result<SweepOutcome, RunnerError> {
    let sweep = scenario
        .sweep
        .clone()
        .ok_or_else(|| RunnerError::Unsupported("scenario has no [sweep] table".into()))?;
    let p = prepare(scenario, overrides)?;
    let lambdas = sweep.lambda_axis.values("sweep.lambda_axis")?;
    let deltas = sweep.delta_axis.values("sweep.delta_axis")?;

    // Baseline γ₀: the same system with a mixed (incoherent) start, computed
    // in this invocation so normalization cannot drift between runs.
    let gamma0 = {
        let mut base = p.spec.clone();
        base.donor_disorder = 0.0;
        let n_d = base.n_donors();
        let h = build_hamiltonian(&base, None).map_err(core("system"))?;
        let rho0 = prepare_state(
            &StatePrep::Mixture(vec![1.0 / n_d as f64; n_d]),
            &h,
        )
        .map_err(core("initial_state"))?;
        let deph = dephasing_model(&base, &p.mapping);
        let res =
            propagate_lindblad(&h, &deph, &rho0, p.horizon, p.n_steps).map_err(core("run"))?;
        fit_exponential(&res.times, &res.acceptor_population())
            .map_err(core("baseline fit"))?
            .forward_rate()
    };

    let grid: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&l| deltas.iter().map(move |&d| (l, d)))
        .collect();
    let cells: Vec<SweepCell> = with_pool(overrides.jobs, || {
        grid.par_iter()
            .map(|&(lambda, delta)| {
                // The swept site detuning is a deterministic ladder: donor j is
                // shifted by j·δ, so a two-donor aggregate realizes energies
                // (E, E + δ) while the donor-acceptor gap of the first site is
                // untouched.
                let mut spec = p.spec.clone();
                spec.donor_reorg = vec![lambda; spec.n_donors()];
                spec.donor_disorder = 0.0;
                for (j, e) in spec.donor_energies.iter_mut().enumerate() {
                    *e += j as f64 * delta;
                }
                match cell_rate(&p, &spec) {
                    Ok(fit) => SweepCell {
                        lambda,
                        delta,
                        gamma: fit.forward_rate(),
                        normalized: fit.forward_rate() / gamma0,
                        r_squared: fit.r_squared,
                        exponential_valid: fit.exponential_valid,
                        error: None,
                    },
                    Err(e) => SweepCell {
                        lambda,
                        delta,
                        gamma: f64::NAN,
                        normalized: f64::NAN,
                        r_squared: f64::NAN,
                        exponential_valid: false,
                        error: Some(e),
                    },
                }
            })
            .collect()
    });

    let mut csv = String::from(
        "lambda_d,delta,gamma,gamma_over_gamma0,r_squared,exponential_valid,gamma0,error\n",
    );
    for c in &cells {
        let row = [
            output::fmt_sig(c.lambda),
            output::fmt_sig(c.delta),
            output::fmt_sig(c.gamma),
            output::fmt_sig(c.normalized),
            output::fmt_sig(c.r_squared),
            c.exponential_valid.to_string(),
            output::fmt_sig(gamma0),
        ]
        .join(",");
        csv.push_str(&row);
        csv.push(',');
        if let Some(e) = &c.error {
            csv.push_str(&e.replace(',', ";"));
        }
        csv.push('\n');
    }
    let path = out_dir.join("sweep.csv");
    output::write_text(&path, &csv)?;

    Ok(SweepOutcome {
        gamma0,
        cells,
        artifacts: vec![path],
    })
}

// ---------------------------------------------------------------------------
// scaling

pub struct ScalingCell {
    pub n_donors: usize,
    pub n_acceptors: usize,
    pub gamma: f64,
    pub reference: f64,
    pub relative_deviation: f64,
    pub error: Option<String>,
}

pub struct ScalingOutcome {
    pub gamma0: f64,
    pub cells: Vec<ScalingCell>,
    pub artifacts: Vec<PathBuf>,
}

pub fn run_scaling(
    scenario: &Scenario,
    overrides: &Overrides,
    out_dir: &Path,
) -> Result<ScalingOutcome, RunnerError> {
    let scaling = scenario
        .scaling
        .clone()
        .ok_or_else(|| RunnerError::Unsupported("scenario has no [scaling] table".into()))?;
    let p = prepare(scenario, overrides)?;
    if p.spec.n_donors() != 1 || p.spec.n_acceptors() != 1 {
        return Err(RunnerError::Unsupported(
            "scaling needs a 1-donor/1-acceptor base system; the base couplings seed the \
             replicated aggregates"
                .into(),
        ));
    }
    let (vd, va, vda) = match (&p.spec.donor_coupling, &p.spec.acceptor_coupling, &p.spec.cross_coupling) {
        (
            supertransfer::Coupling::Uniform(vd),
            supertransfer::Coupling::Uniform(va),
            supertransfer::CrossCoupling::Uniform(vda),
        ) => (*vd, *va, *vda),
        _ => {
            return Err(RunnerError::Unsupported(
                "scaling needs uniform couplings in the base system".into(),
            ))
        }
    };

    let combos: Vec<(usize, usize)> = scaling
        .n_donors
        .iter()
        .flat_map(|&nd| scaling.n_acceptors.iter().map(move |&na| (nd, na)))
        .collect();

    let rate_for = |nd: usize, na: usize| -> Result<f64, RunnerError> {
        let spec = SystemSpec {
            donor_energies: vec![p.spec.donor_energies[0]; nd],
            acceptor_energies: vec![p.spec.acceptor_energies[0]; na],
            donor_coupling: supertransfer::Coupling::Uniform(vd),
            acceptor_coupling: supertransfer::Coupling::Uniform(va),
            cross_coupling: supertransfer::CrossCoupling::Uniform(vda),
            donor_disorder: 0.0,
            acceptor_disorder: 0.0,
            donor_reorg: vec![p.spec.donor_reorg[0]; nd],
            acceptor_reorg: vec![p.spec.acceptor_reorg[0]; na],
        };
        let h = build_hamiltonian(&spec, None).map_err(core("system"))?;
        let rho0 = prepare_state(&p.prep, &h).map_err(core("initial_state"))?;
        let deph = dephasing_model(&spec, &p.mapping);
        let res =
            propagate_lindblad(&h, &deph, &rho0, p.horizon, p.n_steps).map_err(core("run"))?;
        Ok(fit_exponential(&res.times, &res.acceptor_population())
            .map_err(core("fit"))?
            .forward_rate())
    };

    let gamma0 = rate_for(1, 1)?;
    let cells: Vec<ScalingCell> = with_pool(overrides.jobs, || {
        combos
            .par_iter()
            .map(|&(nd, na)| {
                let reference = (nd * na) as f64 * gamma0;
                match rate_for(nd, na) {
                    Ok(gamma) => ScalingCell {
                        n_donors: nd,
                        n_acceptors: na,
                        gamma,
                        reference,
                        relative_deviation: gamma / reference - 1.0,
                        error: None,
                    },
                    Err(e) => ScalingCell {
                        n_donors: nd,
                        n_acceptors: na,
                        gamma: f64::NAN,
                        reference,
                        relative_deviation: f64::NAN,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    });

    let mut csv =
        String::from("n_donors,n_acceptors,gamma,reference,relative_deviation,error\n");
    for c in &cells {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.n_donors,
            c.n_acceptors,
            output::fmt_sig(c.gamma),
            output::fmt_sig(c.reference),
            output::fmt_sig(c.relative_deviation),
            c.error.as_deref().unwrap_or("").replace(',', ";"),
        ));
    }
    let path = out_dir.join("scaling.csv");
    output::write_text(&path, &csv)?;

    Ok(ScalingOutcome {
        gamma0,
        cells,
        artifacts: vec![path],
    })
}

// ---------------------------------------------------------------------------
// noise-calibrate

pub struct CalibrationOutcome {
    pub sigma: f64,
    pub cutoff: f64,
    pub fitted_cutoff: f64,
    pub fitted_sigma2: f64,
    pub implied_gamma_phi: f64,
    pub implied_lambda: f64,
    pub artifacts: Vec<PathBuf>,
}

fn calibration_params(
    cal: &CalibrationSection,
    mapping: &NoiseMapping,
) -> Result<(f64, f64), RunnerError> {
    let cutoff = cal.cutoff.unwrap_or(mapping.cutoff);
    let sigma = match (cal.sigma, cal.lambda) {
        (Some(s), None) => s,
        (None, Some(l)) => mapping.ou_site(l).sigma,
        _ => {
            return Err(RunnerError::Unsupported(
                "calibration needs exactly one of sigma or lambda".into(),
            ))
        }
    };
    Ok((sigma, cutoff))
}

pub fn run_noise_calibration(
    scenario: &Scenario,
    overrides: &Overrides,
    out_dir: &Path,
) -> Result<CalibrationOutcome, RunnerError> {
    let cal = scenario
        .calibration
        .clone()
        .ok_or_else(|| RunnerError::Unsupported("scenario has no [calibration] table".into()))?;
    let mapping = scenario.noise.mapping();
    let (sigma, cutoff) = calibration_params(&cal, &mapping)?;
    let seed = overrides.seed.unwrap_or(scenario.run.seed);

    let sample_ensemble = |count: usize, duration: f64, base: u64| -> Result<Vec<NoiseTrajectory>, RunnerError> {
        with_pool(overrides.jobs, || {
            (0..count)
                .into_par_iter()
                .map(|i| {
                    sample_ou_trajectory(sigma, cutoff, cal.dt, duration, base + i as u64)
                        .map_err(core("calibration"))
                })
                .collect()
        })
    };

    // Spectrum ensemble: long traces for frequency resolution.
    let spectrum_ens = sample_ensemble(cal.spectrum_ensemble, cal.spectrum_duration, seed)?;
    let spectrum = empirical_spectrum(&spectrum_ens).map_err(core("calibration"))?;

    // Autocorrelation ensemble: many short traces for low variance at the
    // physically meaningful lags 0, 1/ω_c, 2/ω_c.
    let auto_ens = sample_ensemble(
        cal.autocorr_ensemble,
        cal.autocorr_duration,
        seed.wrapping_add(0x5eed),
    )?;
    let lag_step = (1.0 / (cutoff * cal.dt)).round() as usize;
    let lags = [0, lag_step, 2 * lag_step];
    let autocorr = empirical_autocorrelation(&auto_ens, &lags).map_err(core("calibration"))?;

    // Lorentzian fit S(ω) = 2σ²ω_c/(ω² + ω_c²) via the linearization
    // 1/S = a + b·ω², so ω_c = √(a/b) and σ² = 1/(2√(ab)). Periodogram bins
    // carry roughly constant relative noise, so 1/S carries absolute noise
    // ∝ 1/S; weighting each bin by S² keeps the tail from dominating.
    let (mut sw, mut swx, mut swy, mut swxx, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (w, s) in spectrum.omegas.iter().zip(&spectrum.values) {
        if *s > 0.0 && *w <= 5.0 * cutoff {
            let x = w * w;
            let weight = s * s;
            sw += weight;
            swx += weight * x;
            swy += s;
            swxx += weight * x * x;
            swxy += s * x;
        }
    }
    let det = sw * swxx - swx * swx;
    let (fitted_cutoff, fitted_sigma2) = if det > 0.0 {
        let b = (sw * swxy - swx * swy) / det;
        let a = (swy - b * swx) / sw;
        if a > 0.0 && b > 0.0 {
            ((a / b).sqrt(), 1.0 / (2.0 * (a * b).sqrt()))
        } else {
            (f64::NAN, f64::NAN)
        }
    } else {
        (f64::NAN, f64::NAN)
    };
    let implied_gamma_phi = 2.0 * fitted_sigma2 / fitted_cutoff;
    let implied_lambda = implied_gamma_phi / mapping.gamma_phi_per_lambda;

    let mut artifacts = Vec::new();
    let mut csv = String::from("omega,empirical,analytic\n");
    for (w, s) in spectrum.omegas.iter().zip(&spectrum.values) {
        csv.push_str(&format!(
            "{},{},{}\n",
            output::fmt_sig(*w),
            output::fmt_sig(*s),
            output::fmt_sig(ou_spectrum(sigma, cutoff, *w)),
        ));
    }
    let spectrum_path = out_dir.join("spectrum.csv");
    output::write_text(&spectrum_path, &csv)?;
    artifacts.push(spectrum_path);

    let lag_times: Vec<f64> = lags.iter().map(|&l| l as f64 * cal.dt).collect();
    let analytic: Vec<f64> = lag_times
        .iter()
        .map(|&t| sigma * sigma * (-cutoff * t).exp())
        .collect();
    let calibration = obj(vec![
        ("scenario", Value::String(scenario.name.clone())),
        ("master_seed", Value::Number(seed.into())),
        ("sigma_input", json_number(sigma)),
        ("cutoff_input", json_number(cutoff)),
        (
            "autocorrelation",
            obj(vec![
                (
                    "lag_times",
                    Value::Array(lag_times.iter().map(|&t| json_number(t)).collect()),
                ),
                (
                    "empirical",
                    Value::Array(autocorr.iter().map(|&c| json_number(c)).collect()),
                ),
                (
                    "analytic",
                    Value::Array(analytic.iter().map(|&c| json_number(c)).collect()),
                ),
            ]),
        ),
        (
            "lorentzian_fit",
            obj(vec![
                ("cutoff", json_number(fitted_cutoff)),
                ("sigma_squared", json_number(fitted_sigma2)),
                ("implied_gamma_phi", json_number(implied_gamma_phi)),
                ("implied_lambda", json_number(implied_lambda)),
            ]),
        ),
    ]);
    let cal_path = out_dir.join("calibration.json");
    output::write_json(&cal_path, &calibration)?;
    artifacts.push(cal_path);

    Ok(CalibrationOutcome {
        sigma,
        cutoff,
        fitted_cutoff,
        fitted_sigma2,
        implied_gamma_phi,
        implied_lambda,
        artifacts,
    })
}

// ---------------------------------------------------------------------------
// circuit-reduce

pub struct ReduceOutcome {
    pub dispersive_ok: bool,
    pub max_rel_deviation: f64,
    pub artifacts: Vec<PathBuf>,
}

pub fn run_circuit_reduce(
    scenario: &Scenario,
    out_dir: &Path,
) -> Result<ReduceOutcome, RunnerError> {
    let section = match &scenario.system {
        SystemSection::Circuit2(c) => c,
        _ => {
            return Err(RunnerError::Unsupported(
                "circuit-reduce needs a circuit2 system".into(),
            ))
        }
    };
    let spec = section.to_spec()?;
    let report = validate_reduction(&spec).map_err(core("system"))?;

    let floats = |xs: &[f64]| Value::Array(xs.iter().map(|&x| json_number(x)).collect());
    let value = obj(vec![
        ("scenario", Value::String(scenario.name.clone())),
        (
            "full_qubit_eigenvalues",
            floats(&report.full_qubit_eigenvalues),
        ),
        ("reduced_eigenvalues", floats(&report.reduced_eigenvalues)),
        ("max_abs_deviation", json_number(report.max_abs_deviation)),
        ("max_rel_deviation", json_number(report.max_rel_deviation)),
        ("min_qubit_weight", json_number(report.min_qubit_weight)),
        (
            "max_dispersive_ratio",
            json_number(report.max_dispersive_ratio),
        ),
        ("dispersive_ok", Value::Bool(report.dispersive_ok)),
    ]);
    let path = out_dir.join("reduction.json");
    output::write_json(&path, &value)?;

    Ok(ReduceOutcome {
        dispersive_ok: report.dispersive_ok,
        max_rel_deviation: report.max_rel_deviation,
        artifacts: vec![path],
    })
}

// ---------------------------------------------------------------------------

/// Accessor used by integration tests: the Hamiltonian a scenario builds.
pub fn hamiltonian_of(scenario: &Scenario) -> Result<SystemHamiltonian, RunnerError> {
    let (spec, _) = site_spec_of(scenario)?;
    build_hamiltonian(&spec, None).map_err(core("system"))
}

/// Exit code semantics shared by main and the integration tests.
pub fn exit_code_for_transfer(outcome: &TransferOutcome) -> i32 {
    if outcome.valid {
        0
    } else {
        2
    }
}

pub fn propagate_scenario(
    scenario: &Scenario,
    overrides: &Overrides,
) -> Result<(PropagationResult, Option<RateFit>), RunnerError> {
    let p = prepare(scenario, overrides)?;
    let result = with_pool(overrides.jobs, || propagate_ensemble(&p, &p.spec))?;
    let fit = fit_exponential(&result.times, &result.acceptor_population()).ok();
    Ok((result, fit))
}

/// Invariant checks over a propagation, used by the acceptance suite.
pub fn invariants_ok(result: &PropagationResult, tol: f64) -> bool {
    result.invariant_report().ok(tol)
}
