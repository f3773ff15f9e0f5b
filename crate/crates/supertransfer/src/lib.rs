//! Simulation and analysis of collectively enhanced ("supertransfer")
//! excitation transport in small donor/acceptor site models, with the
//! superconducting-circuit realizations that motivate the parameter ranges.
//!
//! The crate covers the full pipeline: build single-excitation Hamiltonians
//! with static disorder ([`model`]), attach dephasing noise via spectral
//! densities or explicit Ornstein-Uhlenbeck trajectories ([`noise`]),
//! propagate density matrices with a Lindblad or stochastic solver
//! ([`dynamics`]), extract transfer rates and evaluate the two design rules
//! ([`rates`]), and map everything onto tunable cQED circuits including the
//! dispersive bus elimination ([`circuits`]).
//!
//! Units: ħ = 1, energies and couplings in MHz understood as angular
//! frequencies (rad/μs), times in μs, rates in μs⁻¹.

pub mod circuits;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod noise;
pub mod rates;

pub use circuits::{
    circuit1_single_excitation, circuit2_full_single_excitation, current_to_energy_shift,
    flux_to_energy, frohlich_nakajima_reduce, validate_reduction, Circuit1Spec, Circuit2Spec,
    ReductionReport, TransmonCalibration, DISPERSIVE_LIMIT,
};
pub use dynamics::{
    acceptor_population, expm, liouvillian_matrix, propagate_lindblad, propagate_stochastic,
    DephasingModel, InvariantReport, Method, PropagationResult,
};
pub use error::{Error, Result};
pub use model::{
    build_hamiltonian, build_hamiltonian_with_offsets, eigenstates, participation_ratio,
    prepare_state, Block, Coupling, CrossCoupling, ExcitonState, SiteKind, StatePrep,
    SystemHamiltonian, SystemSpec, C64,
};
pub use noise::{
    dephasing_rate_from_reorg, empirical_autocorrelation, empirical_spectrum,
    evaluate_spectral_density, ou_spectrum, reorganization_energy, sample_ou_trajectory,
    NoiseMapping, NoiseTrajectory, OuSite, SpectralDensity, Spectrum,
    DEFAULT_GAMMA_PHI_PER_LAMBDA, DEFAULT_OU_CUTOFF,
};
pub use rates::{
    analytic_two_level_rate, check_rules, efficiency, enhancement, fit_exponential,
    golden_rule_matrix_element, RateFit, RuleVerdict, RULE1_CLEAN_RATIO, RULE1_PASS_RATIO,
    RULE2_PASS_RATIO,
};
