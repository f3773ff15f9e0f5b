//! Superconducting-circuit realizations of the site model: directly coupled
//! transmons (circuit 1), bus-mediated coupling with dispersive elimination
//! (circuit 2), and the flux/current calibration used to tune and modulate
//! site energies.
//!
//! Conventions: a qubit contributes E·σ^z (σ^z = |e⟩⟨e| − |g⟩⟨g|), so flipping
//! one qubit costs 2E and the one-excitation diagonal reads 2E_k plus a
//! global constant that is removed before comparison with site models.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    sorted_eigenpairs, Coupling, CrossCoupling, SiteKind, SystemHamiltonian, SystemSpec,
};

/// Directly coupled circuit: N_D donor qubits with pairwise σ^xσ^x coupling
/// `qubit_coupling`, each coupled to one acceptor qubit by `cross_coupling`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit1Spec {
    pub donor_energies: Vec<f64>,
    pub acceptor_energy: f64,
    pub qubit_coupling: f64,
    pub cross_coupling: f64,
    /// Tunable window [E_min, E_max] enforced on all qubit energies when set.
    pub tunable_window: Option<(f64, f64)>,
}

impl Circuit1Spec {
    pub fn validate(&self) -> Result<()> {
        if self.donor_energies.is_empty() {
            return Err(Error::InvalidParameter("need at least one donor qubit".into()));
        }
        if self.donor_energies.len() + 1 > 16 {
            return Err(Error::InvalidParameter(
                "full-space construction limited to 16 qubits".into(),
            ));
        }
        if let Some((e_min, e_max)) = self.tunable_window {
            if e_min >= e_max {
                return Err(Error::InvalidParameter("tunable window needs E_min < E_max".into()));
            }
            for (i, &e) in self
                .donor_energies
                .iter()
                .chain(std::iter::once(&self.acceptor_energy))
                .enumerate()
            {
                if e < e_min || e > e_max {
                    return Err(Error::InvalidParameter(format!(
                        "qubit {i} energy {e} outside tunable window [{e_min}, {e_max}]"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Build the full multi-qubit Hamiltonian Σ E_k σ^z_k + Σ C_jk σ^x_j σ^x_k,
/// project onto the one-excitation subspace, and remove the global constant,
/// leaving diagonal entries 2E_k. Basis order: donors, then the acceptor.
pub fn circuit1_single_excitation(spec: &Circuit1Spec) -> Result<SystemHamiltonian> {
    spec.validate()?;
    let n_d = spec.donor_energies.len();
    let n_q = n_d + 1;
    let energies: Vec<f64> = spec
        .donor_energies
        .iter()
        .cloned()
        .chain(std::iter::once(spec.acceptor_energy))
        .collect();
    let coupling = |j: usize, k: usize| -> f64 {
        if j == k {
            0.0
        } else if j < n_d && k < n_d {
            spec.qubit_coupling
        } else {
            spec.cross_coupling
        }
    };

    let dim = 1usize << n_q;
    let mut full = DMatrix::<f64>::zeros(dim, dim);
    for m in 0..dim {
        let mut e = 0.0;
        for (k, &ek) in energies.iter().enumerate() {
            e += if m >> k & 1 == 1 { ek } else { -ek };
        }
        full[(m, m)] = e;
        for j in 0..n_q {
            for k in (j + 1)..n_q {
                // σ^x_j σ^x_k flips both qubits regardless of their state.
                let m2 = m ^ (1 << j) ^ (1 << k);
                full[(m, m2)] += coupling(j, k);
            }
        }
    }

    // One-excitation projection; the σ^xσ^x terms survive only as hopping.
    let basis: Vec<usize> = (0..n_q).map(|k| 1usize << k).collect();
    let constant: f64 = energies.iter().sum();
    let matrix = DMatrix::from_fn(n_q, n_q, |a, b| {
        full[(basis[a], basis[b])] + if a == b { constant } else { 0.0 }
    });
    let mut kinds = vec![SiteKind::Donor; n_d];
    kinds.push(SiteKind::Acceptor);
    let labels = (0..n_d)
        .map(|i| format!("D{}", i + 1))
        .chain(std::iter::once("A1".to_string()))
        .collect();
    Ok(SystemHamiltonian { matrix, kinds, labels })
}

/// Transmon flux/current calibration. Fluxes are expressed in units of the
/// flux quantum Φ₀; the calibration slopes are experimentally determined
/// inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmonCalibration {
    pub e_min: f64,
    pub e_max: f64,
    /// Φ₀ per mA of coil current.
    pub current_to_flux: f64,
    /// MHz per Φ₀ at the operating point.
    pub energy_slope: f64,
}

impl TransmonCalibration {
    pub fn validate(&self) -> Result<()> {
        if self.e_min >= self.e_max {
            return Err(Error::InvalidParameter("calibration needs E_min < E_max".into()));
        }
        Ok(())
    }
}

/// One monotone tuning branch, φ ∈ [0, π/2] in Φ₀ units:
/// E(φ) = E_min + (E_max − E_min)·√|cos φ|, so E(0) = E_max and E at the
/// branch end is E_min.
pub fn flux_to_energy(phi: f64, cal: &TransmonCalibration) -> Result<f64> {
    cal.validate()?;
    let branch_end = std::f64::consts::FRAC_PI_2;
    if !(0.0..=branch_end + 1e-12).contains(&phi) {
        return Err(Error::InvalidParameter(format!(
            "flux {phi} outside the calibrated branch [0, π/2]"
        )));
    }
    Ok(cal.e_min + (cal.e_max - cal.e_min) * phi.cos().abs().sqrt())
}

/// Small-signal site-energy modulation: δE = (dE/dΦ)·(dΦ/dI)·δI.
pub fn current_to_energy_shift(delta_i: f64, cal: &TransmonCalibration) -> f64 {
    cal.energy_slope * cal.current_to_flux * delta_i
}

/// Bus-mediated circuit: donor qubits exchange-coupled to a donor bus, one
/// acceptor qubit coupled to an acceptor bus, and the two buses coupled
/// capacitively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit2Spec {
    pub donor_energies: Vec<f64>,
    pub acceptor_energy: f64,
    pub donor_bus_freq: f64,
    pub acceptor_bus_freq: f64,
    pub donor_bus_couplings: Vec<f64>,
    pub acceptor_bus_coupling: f64,
    pub bus_bus_coupling: f64,
}

/// Dispersive-regime threshold on every |C/Δ|.
pub const DISPERSIVE_LIMIT: f64 = 0.2;

impl Circuit2Spec {
    pub fn validate(&self) -> Result<()> {
        if self.donor_energies.is_empty() {
            return Err(Error::InvalidParameter("need at least one donor qubit".into()));
        }
        if self.donor_bus_couplings.len() != self.donor_energies.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} donor-bus couplings for {} donors",
                self.donor_bus_couplings.len(),
                self.donor_energies.len()
            )));
        }
        for (&d, label) in self
            .donor_detunings()
            .iter()
            .zip(self.donor_energies.iter().map(|e| format!("donor at {e}")))
            .chain(std::iter::once((
                &self.acceptor_detuning(),
                "acceptor".to_string(),
            )))
        {
            if d == 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{label} is resonant with its bus (zero detuning)"
                )));
            }
        }
        Ok(())
    }

    /// Δ_i = 2E^D_i − ω_D.
    pub fn donor_detunings(&self) -> Vec<f64> {
        self.donor_energies
            .iter()
            .map(|&e| 2.0 * e - self.donor_bus_freq)
            .collect()
    }

    /// Δ_A = 2E^A − ω_A.
    pub fn acceptor_detuning(&self) -> f64 {
        2.0 * self.acceptor_energy - self.acceptor_bus_freq
    }

    /// True when every qubit-bus coupling satisfies |C/Δ| ≤ 0.2.
    pub fn dispersive_valid(&self) -> bool {
        self.donor_bus_couplings
            .iter()
            .zip(self.donor_detunings())
            .all(|(&c, d)| (c / d).abs() <= DISPERSIVE_LIMIT)
            && (self.acceptor_bus_coupling / self.acceptor_detuning()).abs() <= DISPERSIVE_LIMIT
    }

    /// Largest |C/Δ| over all qubit-bus pairs.
    pub fn max_dispersive_ratio(&self) -> f64 {
        self.donor_bus_couplings
            .iter()
            .zip(self.donor_detunings())
            .map(|(&c, d)| (c / d).abs())
            .fold(
                (self.acceptor_bus_coupling / self.acceptor_detuning()).abs(),
                f64::max,
            )
    }
}

/// One-excitation Hamiltonian over (D₁…D_N, bus_D, A, bus_A) with diagonal
/// (2E_i, ω_D, 2E_A, ω_A). The bus-bus capacitive coupling is kept only in
/// its excitation-conserving part b_D†b_A + b_D b_A†; dispersive-condition
/// violations are left to the caller (validation sweeps need them).
pub fn circuit2_full_single_excitation(spec: &Circuit2Spec) -> Result<SystemHamiltonian> {
    spec.validate()?;
    let n_d = spec.donor_energies.len();
    let dim = n_d + 3;
    let (i_bus_d, i_acc, i_bus_a) = (n_d, n_d + 1, n_d + 2);
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for (i, &e) in spec.donor_energies.iter().enumerate() {
        m[(i, i)] = 2.0 * e;
        m[(i, i_bus_d)] = spec.donor_bus_couplings[i];
        m[(i_bus_d, i)] = spec.donor_bus_couplings[i];
    }
    m[(i_bus_d, i_bus_d)] = spec.donor_bus_freq;
    m[(i_acc, i_acc)] = 2.0 * spec.acceptor_energy;
    m[(i_bus_a, i_bus_a)] = spec.acceptor_bus_freq;
    m[(i_acc, i_bus_a)] = spec.acceptor_bus_coupling;
    m[(i_bus_a, i_acc)] = spec.acceptor_bus_coupling;
    m[(i_bus_d, i_bus_a)] = spec.bus_bus_coupling;
    m[(i_bus_a, i_bus_d)] = spec.bus_bus_coupling;

    let mut kinds = vec![SiteKind::Donor; n_d];
    kinds.extend([SiteKind::Bus, SiteKind::Acceptor, SiteKind::Bus]);
    let labels = (0..n_d)
        .map(|i| format!("D{}", i + 1))
        .chain(["busD".into(), "A1".into(), "busA".into()])
        .collect();
    Ok(SystemHamiltonian { matrix: m, kinds, labels })
}

fn effective_site_spec(spec: &Circuit2Spec) -> SystemSpec {
    let n_d = spec.donor_energies.len();
    let det = spec.donor_detunings();
    let det_a = spec.acceptor_detuning();
    let donor_energies: Vec<f64> = spec
        .donor_energies
        .iter()
        .zip(&spec.donor_bus_couplings)
        .zip(&det)
        .map(|((&e, &c), &d)| 2.0 * e + c * c / d)
        .collect();
    let acceptor_energy =
        2.0 * spec.acceptor_energy + spec.acceptor_bus_coupling.powi(2) / det_a;
    let mut donor_coupling = DMatrix::<f64>::zeros(n_d, n_d);
    for i in 0..n_d {
        for j in 0..n_d {
            if i != j {
                donor_coupling[(i, j)] = (spec.donor_bus_couplings[i] / (2.0 * det[i]))
                    * (spec.donor_bus_couplings[j] / (2.0 * det[j]))
                    * (det[i] + det[j]);
            }
        }
    }
    let cross = DMatrix::<f64>::from_fn(n_d, 1, |i, _| {
        spec.bus_bus_coupling
            * (spec.donor_bus_couplings[i] / det[i])
            * (spec.acceptor_bus_coupling / det_a)
    });
    SystemSpec {
        donor_energies,
        acceptor_energies: vec![acceptor_energy],
        donor_coupling: Coupling::Matrix(donor_coupling),
        acceptor_coupling: Coupling::Uniform(0.0),
        cross_coupling: CrossCoupling::Matrix(cross),
        donor_disorder: 0.0,
        acceptor_disorder: 0.0,
        donor_reorg: vec![0.0; n_d],
        acceptor_reorg: vec![0.0],
    }
}

/// Fröhlich-Nakajima elimination of both buses, yielding an effective
/// qubit-only site model:
/// C̃^DD_ij = (C_i/2Δ_i)(C_j/2Δ_j)(Δ_i + Δ_j),
/// C̃^iA = C^DA·(C_i/Δ_i)(C^A/Δ_A),
/// Ẽ^D_i = 2E^D_i + C_i²/Δ_i, Ẽ^A = 2E^A + (C^A)²/Δ_A.
///
/// Negative detunings flip the effective coupling signs, which is what
/// permits reordering bright and dark donor states in hardware.
pub fn frohlich_nakajima_reduce(spec: &Circuit2Spec) -> Result<SystemSpec> {
    spec.validate()?;
    if !spec.dispersive_valid() {
        return Err(Error::InvalidParameter(format!(
            "dispersive condition violated: max |C/Δ| = {:.3} > {DISPERSIVE_LIMIT}",
            spec.max_dispersive_ratio()
        )));
    }
    Ok(effective_site_spec(spec))
}

/// Numerical audit of the dispersive reduction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionReport {
    /// Eigenvalues of full-circuit eigenstates that live mostly on qubits.
    pub full_qubit_eigenvalues: Vec<f64>,
    pub reduced_eigenvalues: Vec<f64>,
    pub max_abs_deviation: f64,
    /// Deviation relative to the largest full-model qubit-sector eigenvalue
    /// magnitude (a global scale; per-eigenvalue ratios blow up near zero).
    pub max_rel_deviation: f64,
    /// Smallest qubit-basis weight among the selected eigenstates; above 0.5
    /// the qubit/bus assignment is unambiguous.
    pub min_qubit_weight: f64,
    pub dispersive_ok: bool,
    pub max_dispersive_ratio: f64,
}

/// Compare qubit-sector eigenvalues of the full circuit against the reduced
/// 3-site model. Eigenstates are assigned to the qubit sector by total weight
/// on qubit basis states; the N_D+1 largest-weight states are compared in
/// ascending eigenvalue order.
pub fn validate_reduction(spec: &Circuit2Spec) -> Result<ReductionReport> {
    spec.validate()?;
    let full = circuit2_full_single_excitation(spec)?;
    let qubit_idx: Vec<usize> = full
        .kinds
        .iter()
        .enumerate()
        .filter(|(_, k)| **k != SiteKind::Bus)
        .map(|(i, _)| i)
        .collect();
    let pairs = sorted_eigenpairs(&full.matrix);
    let mut weighted: Vec<(f64, f64)> = pairs
        .iter()
        .map(|(val, vec)| {
            let w: f64 = qubit_idx.iter().map(|&i| vec[i] * vec[i]).sum();
            (w, *val)
        })
        .collect();
    let n_keep = qubit_idx.len();
    weighted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut kept = weighted[..n_keep].to_vec();
    let min_qubit_weight = kept.iter().map(|(w, _)| *w).fold(f64::INFINITY, f64::min);
    kept.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let full_qubit_eigenvalues: Vec<f64> = kept.iter().map(|(_, v)| *v).collect();

    let reduced = effective_site_spec(spec);
    let reduced_h = crate::model::build_hamiltonian(&reduced, None)?;
    let reduced_eigenvalues: Vec<f64> = sorted_eigenpairs(&reduced_h.matrix)
        .iter()
        .map(|(v, _)| *v)
        .collect();

    let max_abs_deviation = full_qubit_eigenvalues
        .iter()
        .zip(&reduced_eigenvalues)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = full_qubit_eigenvalues
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    let max_rel_deviation = if scale > 0.0 { max_abs_deviation / scale } else { 0.0 };
    Ok(ReductionReport {
        full_qubit_eigenvalues,
        reduced_eigenvalues,
        max_abs_deviation,
        max_rel_deviation,
        min_qubit_weight,
        dispersive_ok: spec.dispersive_valid(),
        max_dispersive_ratio: spec.max_dispersive_ratio(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table1_circuit() -> Circuit1Spec {
        Circuit1Spec {
            donor_energies: vec![74.0, 74.0],
            acceptor_energy: 0.0,
            qubit_coupling: -10.0,
            cross_coupling: 10.0,
            tunable_window: None,
        }
    }

    #[test]
    fn circuit1_matches_site_model_diagonal_convention() {
        let h = circuit1_single_excitation(&table1_circuit()).unwrap();
        assert_eq!(h.dim(), 3);
        assert_relative_eq!(h.matrix[(0, 0)], 148.0);
        assert_relative_eq!(h.matrix[(1, 1)], 148.0);
        assert_relative_eq!(h.matrix[(2, 2)], 0.0);
        assert_relative_eq!(h.matrix[(0, 1)], -10.0);
        assert_relative_eq!(h.matrix[(0, 2)], 10.0);
        assert_relative_eq!(h.matrix[(1, 2)], 10.0);
    }

    #[test]
    fn circuit1_zero_couplings_is_diagonal() {
        let spec = Circuit1Spec {
            qubit_coupling: 0.0,
            cross_coupling: 0.0,
            ..table1_circuit()
        };
        let h = circuit1_single_excitation(&spec).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(h.matrix[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn circuit1_enforces_tunable_window() {
        let spec = Circuit1Spec {
            tunable_window: Some((10.0, 60.0)),
            ..table1_circuit()
        };
        assert!(circuit1_single_excitation(&spec).is_err());
    }

    #[test]
    fn flux_branch_endpoints_and_monotonicity() {
        let cal = TransmonCalibration {
            e_min: 40.0,
            e_max: 90.0,
            current_to_flux: 0.01,
            energy_slope: 500.0,
        };
        assert_relative_eq!(flux_to_energy(0.0, &cal).unwrap(), 90.0);
        assert_relative_eq!(
            flux_to_energy(std::f64::consts::FRAC_PI_2, &cal).unwrap(),
            40.0,
            epsilon = 1e-6
        );
        let mut prev = f64::INFINITY;
        for i in 0..=50 {
            let phi = std::f64::consts::FRAC_PI_2 * i as f64 / 50.0;
            let e = flux_to_energy(phi, &cal).unwrap();
            assert!(e < prev);
            prev = e;
        }
        assert!(flux_to_energy(2.0, &cal).is_err());
        assert_relative_eq!(current_to_energy_shift(1.0, &cal), 5.0);
        assert_relative_eq!(current_to_energy_shift(2.0, &cal), 10.0);
        assert_eq!(current_to_energy_shift(0.0, &cal), 0.0);
    }

    fn dispersive_circuit(ratio: f64) -> Circuit2Spec {
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
    fn circuit2_blocks_decouple_without_bus_bus_coupling() {
        let mut spec = dispersive_circuit(0.05);
        spec.bus_bus_coupling = 0.0;
        spec.acceptor_bus_coupling = 0.0;
        let h = circuit2_full_single_excitation(&spec).unwrap();
        // Donor sector (D1, D2, busD) never connects to (A, busA).
        for i in 0..3 {
            for j in 3..5 {
                assert_eq!(h.matrix[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn reduction_formulas_symmetric_case() {
        let spec = dispersive_circuit(0.05);
        let red = frohlich_nakajima_reduce(&spec).unwrap();
        let (c, delta) = (50.0, -1000.0);
        match &red.donor_coupling {
            Coupling::Matrix(m) => {
                assert_relative_eq!(m[(0, 1)], c * c / (2.0 * delta), max_relative = 1e-12)
            }
            _ => panic!("expected matrix coupling"),
        }
        assert_relative_eq!(red.donor_energies[0], 148.0 + c * c / delta, max_relative = 1e-12);
        match &red.cross_coupling {
            CrossCoupling::Matrix(m) => {
                assert_relative_eq!(
                    m[(0, 0)],
                    100.0 * (c / delta) * (c / delta),
                    max_relative = 1e-12
                )
            }
            _ => panic!("expected matrix cross-coupling"),
        }
    }

    #[test]
    fn reduction_sign_covariance_under_detuning_flip() {
        let spec = dispersive_circuit(0.05);
        let mut flipped = spec.clone();
        // Moving both buses below their qubits flips every detuning sign.
        flipped.donor_bus_freq = 148.0 - 1000.0;
        flipped.acceptor_bus_freq = -1000.0;
        let a = frohlich_nakajima_reduce(&spec).unwrap();
        let b = frohlich_nakajima_reduce(&flipped).unwrap();
        let coupling = |s: &SystemSpec| match &s.donor_coupling {
            Coupling::Matrix(m) => m[(0, 1)],
            _ => unreachable!(),
        };
        assert_relative_eq!(coupling(&a), -coupling(&b), max_relative = 1e-12);
        assert_relative_eq!(
            a.donor_energies[0] - 148.0,
            -(b.donor_energies[0] - 148.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn reduction_rejects_non_dispersive_spec() {
        assert!(frohlich_nakajima_reduce(&dispersive_circuit(0.3)).is_err());
        assert!(frohlich_nakajima_reduce(&dispersive_circuit(0.05)).is_ok());
    }

    #[test]
    fn validation_deviation_vanishes_with_coupling() {
        let mut spec = dispersive_circuit(0.05);
        spec.donor_bus_couplings = vec![0.0, 0.0];
        spec.acceptor_bus_coupling = 0.0;
        spec.bus_bus_coupling = 0.0;
        let report = validate_reduction(&spec).unwrap();
        assert!(report.max_abs_deviation < 1e-10);
        assert_eq!(report.min_qubit_weight, 1.0);
    }

    #[test]
    fn validation_selects_qubit_sector_unambiguously() {
        let report = validate_reduction(&dispersive_circuit(0.05)).unwrap();
        assert!(report.min_qubit_weight > 0.5);
        assert!(report.dispersive_ok);
        assert_eq!(report.full_qubit_eigenvalues.len(), 3);
        assert!(report.max_rel_deviation <= 4.0 * 0.05f64.powi(2));
    }
}
