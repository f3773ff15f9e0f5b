//! Site model for donor/acceptor aggregates in the single-excitation subspace.
//!
//! Basis convention: donor sites first (D1, D2, …), then acceptor sites
//! (A1, A2, …). Energies and couplings are in MHz with ħ = 1, so a coupling
//! V produces Rabi oscillation sin²(V·t) with t in μs. Static disorder is a
//! per-aggregate Gaussian standard deviation applied to site energies at
//! Hamiltonian-build time; draws are deterministic per seed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Intra-aggregate coupling pattern.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    /// Every pair of sites inside the aggregate is coupled with this value.
    Uniform(f64),
    /// Explicit symmetric coupling matrix (diagonal ignored).
    Matrix(DMatrix<f64>),
}

impl Coupling {
    fn element(&self, i: usize, j: usize) -> f64 {
        match self {
            Coupling::Uniform(v) => {
                if i == j {
                    0.0
                } else {
                    *v
                }
            }
            Coupling::Matrix(m) => {
                if i == j {
                    0.0
                } else {
                    m[(i, j)]
                }
            }
        }
    }

    /// Largest coupling magnitude; the characteristic scale used by Rule 2.
    pub fn max_abs(&self, n: usize) -> f64 {
        let mut best = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    best = best.max(self.element(i, j).abs());
                }
            }
        }
        best
    }

    fn check_dims(&self, n: usize, what: &str) -> Result<()> {
        if let Coupling::Matrix(m) = self {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{what} coupling matrix is {}x{}, aggregate has {n} sites",
                    m.nrows(),
                    m.ncols()
                )));
            }
            for i in 0..n {
                for j in 0..n {
                    if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 {
                        return Err(Error::InvalidParameter(format!(
                            "{what} coupling matrix is not symmetric at ({i},{j})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Donor-acceptor coupling pattern.
#[derive(Debug, Clone, PartialEq)]
pub enum CrossCoupling {
    /// Every donor couples to every acceptor with this value.
    Uniform(f64),
    /// Explicit n_donors × n_acceptors matrix.
    Matrix(DMatrix<f64>),
}

impl CrossCoupling {
    fn element(&self, j: usize, k: usize) -> f64 {
        match self {
            CrossCoupling::Uniform(v) => *v,
            CrossCoupling::Matrix(m) => m[(j, k)],
        }
    }

    pub fn max_abs(&self, nd: usize, na: usize) -> f64 {
        let mut best = 0.0f64;
        for j in 0..nd {
            for k in 0..na {
                best = best.max(self.element(j, k).abs());
            }
        }
        best
    }
}

/// Declarative description of the donor/acceptor system.
///
/// `donor_disorder` / `acceptor_disorder` are the standard deviations of
/// Gaussian static-energy offsets (the δ parameters); `donor_reorg` /
/// `acceptor_reorg` are per-site reorganization energies λ (MHz) that the
/// noise module maps to dephasing rates.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub donor_energies: Vec<f64>,
    pub acceptor_energies: Vec<f64>,
    pub donor_coupling: Coupling,
    pub acceptor_coupling: Coupling,
    pub cross_coupling: CrossCoupling,
    pub donor_disorder: f64,
    pub acceptor_disorder: f64,
    pub donor_reorg: Vec<f64>,
    pub acceptor_reorg: Vec<f64>,
}

impl SystemSpec {
    pub fn n_donors(&self) -> usize {
        self.donor_energies.len()
    }

    pub fn n_acceptors(&self) -> usize {
        self.acceptor_energies.len()
    }

    pub fn validate(&self) -> Result<()> {
        let nd = self.n_donors();
        let na = self.n_acceptors();
        if nd == 0 || na == 0 {
            return Err(Error::InvalidParameter(
                "system needs at least one donor and one acceptor".into(),
            ));
        }
        if self.donor_reorg.len() != nd {
            return Err(Error::DimensionMismatch(format!(
                "donor_reorg has {} entries for {nd} donors",
                self.donor_reorg.len()
            )));
        }
        if self.acceptor_reorg.len() != na {
            return Err(Error::DimensionMismatch(format!(
                "acceptor_reorg has {} entries for {na} acceptors",
                self.acceptor_reorg.len()
            )));
        }
        if self.donor_disorder < 0.0 || self.acceptor_disorder < 0.0 {
            return Err(Error::InvalidParameter("disorder sigma must be >= 0".into()));
        }
        if self.donor_reorg.iter().chain(&self.acceptor_reorg).any(|&l| l < 0.0) {
            return Err(Error::InvalidParameter(
                "reorganization energies must be >= 0".into(),
            ));
        }
        self.donor_coupling.check_dims(nd, "donor")?;
        self.acceptor_coupling.check_dims(na, "acceptor")?;
        if let CrossCoupling::Matrix(m) = &self.cross_coupling {
            if m.nrows() != nd || m.ncols() != na {
                return Err(Error::DimensionMismatch(format!(
                    "cross coupling matrix is {}x{}, expected {nd}x{na}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(())
    }

    /// Per-site dephasing rates Γ_m via a λ → Γ_φ mapping factor.
    pub fn dephasing_rates(&self, gamma_phi_per_lambda: f64) -> Vec<f64> {
        self.donor_reorg
            .iter()
            .chain(&self.acceptor_reorg)
            .map(|&l| gamma_phi_per_lambda * l)
            .collect()
    }
}

/// Role of one basis state. Circuit Hamiltonians add bus photon states that
/// belong to neither aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteKind {
    Donor,
    Acceptor,
    Bus,
}

/// Dense Hermitian (here: real symmetric) Hamiltonian in the one-excitation
/// site basis, with labels identifying each basis state.
#[derive(Debug, Clone)]
pub struct SystemHamiltonian {
    pub matrix: DMatrix<f64>,
    pub kinds: Vec<SiteKind>,
    pub labels: Vec<String>,
}

impl SystemHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_donors(&self) -> usize {
        self.kinds.iter().filter(|k| **k == SiteKind::Donor).count()
    }

    pub fn n_acceptors(&self) -> usize {
        self.kinds.iter().filter(|k| **k == SiteKind::Acceptor).count()
    }

    pub fn donor_indices(&self) -> Vec<usize> {
        self.indices_of(SiteKind::Donor)
    }

    pub fn acceptor_indices(&self) -> Vec<usize> {
        self.indices_of(SiteKind::Acceptor)
    }

    fn indices_of(&self, kind: SiteKind) -> Vec<usize> {
        self.kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == kind)
            .map(|(i, _)| i)
            .collect()
    }

    /// Sub-block of the Hamiltonian over the given basis indices.
    pub fn block(&self, idx: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.matrix[(idx[r], idx[c])])
    }

    /// Donor-row × acceptor-column coupling block V^DA.
    pub fn cross_block(&self) -> DMatrix<f64> {
        let d = self.donor_indices();
        let a = self.acceptor_indices();
        DMatrix::from_fn(d.len(), a.len(), |r, c| self.matrix[(d[r], a[c])])
    }

    pub fn as_complex(&self) -> DMatrix<C64> {
        self.matrix.map(|x| C64::new(x, 0.0))
    }
}

/// Assemble the site-basis Hamiltonian. When `disorder_seed` is given and a
/// disorder sigma is positive, Gaussian offsets are added to the diagonal:
/// donors first, then acceptors, one standard-normal draw per site in basis
/// order (so a fixed seed fixes the realization).
pub fn build_hamiltonian(spec: &SystemSpec, disorder_seed: Option<u64>) -> Result<SystemHamiltonian> {
    let (d_off, a_off) = match disorder_seed {
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut draw = |n: usize, sigma: f64| -> Vec<f64> {
                (0..n)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        sigma * z
                    })
                    .collect()
            };
            (
                draw(spec.n_donors(), spec.donor_disorder),
                draw(spec.n_acceptors(), spec.acceptor_disorder),
            )
        }
        None => (vec![0.0; spec.n_donors()], vec![0.0; spec.n_acceptors()]),
    };
    build_hamiltonian_with_offsets(spec, &d_off, &a_off)
}

/// Same as [`build_hamiltonian`] but with explicit per-site energy offsets,
/// used by sweeps that share standardized draws across cells.
pub fn build_hamiltonian_with_offsets(
    spec: &SystemSpec,
    donor_offsets: &[f64],
    acceptor_offsets: &[f64],
) -> Result<SystemHamiltonian> {
    spec.validate()?;
    let nd = spec.n_donors();
    let na = spec.n_acceptors();
    if donor_offsets.len() != nd || acceptor_offsets.len() != na {
        return Err(Error::DimensionMismatch(
            "offset vectors must match aggregate sizes".into(),
        ));
    }
    let n = nd + na;
    let mut h = DMatrix::zeros(n, n);
    for j in 0..nd {
        h[(j, j)] = spec.donor_energies[j] + donor_offsets[j];
    }
    for k in 0..na {
        h[(nd + k, nd + k)] = spec.acceptor_energies[k] + acceptor_offsets[k];
    }
    for i in 0..nd {
        for j in (i + 1)..nd {
            let v = spec.donor_coupling.element(i, j);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    for i in 0..na {
        for j in (i + 1)..na {
            let v = spec.acceptor_coupling.element(i, j);
            h[(nd + i, nd + j)] = v;
            h[(nd + j, nd + i)] = v;
        }
    }
    for j in 0..nd {
        for k in 0..na {
            let v = spec.cross_coupling.element(j, k);
            h[(j, nd + k)] = v;
            h[(nd + k, j)] = v;
        }
    }
    let mut kinds = vec![SiteKind::Donor; nd];
    kinds.extend(vec![SiteKind::Acceptor; na]);
    let mut labels: Vec<String> = (1..=nd).map(|j| format!("D{j}")).collect();
    labels.extend((1..=na).map(|k| format!("A{k}")));
    Ok(SystemHamiltonian { matrix: h, kinds, labels })
}

/// Which sub-block to diagonalize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Donor,
    Acceptor,
    Full,
}

/// Eigen-decomposition of a Hamiltonian block, energies ascending.
/// Coefficient vectors live on the block's own index set and carry a fixed
/// sign convention (first component of largest magnitude is positive) so
/// results are reproducible.
pub fn eigenstates(h: &SystemHamiltonian, block: Block) -> Vec<(f64, DVector<f64>)> {
    let idx: Vec<usize> = match block {
        Block::Donor => h.donor_indices(),
        Block::Acceptor => h.acceptor_indices(),
        Block::Full => (0..h.dim()).collect(),
    };
    let sub = h.block(&idx);
    sorted_eigenpairs(&sub)
}

pub(crate) fn sorted_eigenpairs(m: &DMatrix<f64>) -> Vec<(f64, DVector<f64>)> {
    let se = m.clone().symmetric_eigen();
    let mut pairs: Vec<(f64, DVector<f64>)> = (0..m.nrows())
        .map(|i| (se.eigenvalues[i], se.eigenvectors.column(i).into_owned()))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for (_, v) in pairs.iter_mut() {
        let lead = v
            .iter()
            .cloned()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        if v[lead] < 0.0 {
            *v = -v.clone();
        }
    }
    pairs
}

/// Initial-state preparations. Site indices are 1-based within the donor
/// aggregate, matching the labels D1, D2, ….
#[derive(Debug, Clone, PartialEq)]
pub enum StatePrep {
    Localized(usize),
    Mixture(Vec<f64>),
    Delocalized(Vec<C64>),
    LowestDonorEigenstate,
}

/// Density matrix over the one-excitation basis.
#[derive(Debug, Clone)]
pub struct ExcitonState {
    pub rho: DMatrix<C64>,
}

impl ExcitonState {
    /// Validating constructor: Hermitian, unit trace, positive semidefinite
    /// within `tol`.
    pub fn new(rho: DMatrix<C64>, tol: f64) -> Result<Self> {
        let state = ExcitonState { rho };
        state.check(tol)?;
        Ok(state)
    }

    pub fn from_matrix_unchecked(rho: DMatrix<C64>) -> Self {
        ExcitonState { rho }
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.rho[(i, i)].re).sum()
    }

    pub fn purity(&self) -> f64 {
        let sq = &self.rho * &self.rho;
        (0..self.dim()).map(|i| sq[(i, i)].re).sum()
    }

    /// Smallest eigenvalue of the Hermitian part; ≥ −tol for a physical state.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.rho + self.rho.adjoint()).scale(0.5);
        let se = herm.symmetric_eigen();
        se.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn check(&self, tol: f64) -> Result<()> {
        if self.rho.nrows() != self.rho.ncols() {
            return Err(Error::InvalidState("density matrix must be square".into()));
        }
        let herm_dev = (&self.rho - self.rho.adjoint()).norm();
        if herm_dev > tol {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {herm_dev:.2e})"
            )));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > tol {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min_ev = self.min_eigenvalue();
        if min_ev < -tol {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_ev:.2e}"
            )));
        }
        Ok(())
    }
}

/// Build the initial density matrix for a preparation protocol.
pub fn prepare_state(kind: &StatePrep, h: &SystemHamiltonian) -> Result<ExcitonState> {
    let n = h.dim();
    let donors = h.donor_indices();
    let nd = donors.len();
    let mut rho: DMatrix<C64> = DMatrix::zeros(n, n);
    match kind {
        StatePrep::Localized(j) => {
            if *j == 0 || *j > nd {
                return Err(Error::InvalidParameter(format!(
                    "localized({j}) out of range for {nd} donors"
                )));
            }
            let site = donors[*j - 1];
            rho[(site, site)] = C64::new(1.0, 0.0);
        }
        StatePrep::Mixture(probs) => {
            if probs.len() != nd {
                return Err(Error::DimensionMismatch(format!(
                    "mixture has {} probabilities for {nd} donors",
                    probs.len()
                )));
            }
            if probs.iter().any(|&p| p < 0.0) {
                return Err(Error::InvalidParameter("negative probability".into()));
            }
            let total: f64 = probs.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "probabilities sum to {total}, expected 1"
                )));
            }
            for (p, &site) in probs.iter().zip(&donors) {
                rho[(site, site)] = C64::new(*p, 0.0);
            }
        }
        StatePrep::Delocalized(coeffs) => {
            if coeffs.len() != nd {
                return Err(Error::DimensionMismatch(format!(
                    "coefficient vector has {} entries for {nd} donors",
                    coeffs.len()
                )));
            }
            let norm_sq: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
            if (norm_sq - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "coefficients have norm² {norm_sq}, expected 1"
                )));
            }
            let mut psi: DVector<C64> = DVector::zeros(n);
            for (c, &site) in coeffs.iter().zip(&donors) {
                psi[site] = *c;
            }
            rho = &psi * psi.adjoint();
        }
        StatePrep::LowestDonorEigenstate => {
            let pairs = eigenstates(h, Block::Donor);
            let (_, ground) = pairs
                .first()
                .ok_or_else(|| Error::InvalidParameter("empty donor block".into()))?;
            let mut psi: DVector<C64> = DVector::zeros(n);
            for (i, &site) in donors.iter().enumerate() {
                psi[site] = C64::new(ground[i], 0.0);
            }
            rho = &psi * psi.adjoint();
        }
    }
    ExcitonState::new(rho, 1e-9)
}

/// Delocalization measure over the donor block: 1/Σ q_j² with q_j the donor
/// populations renormalized to sum to one. For a donor-supported pure state
/// with coefficients c_j this is 1/Σ|c_j|⁴, ranging from 1 (localized) to
/// N_D (uniform).
pub fn participation_ratio(state: &ExcitonState, n_donors: usize) -> Result<f64> {
    if n_donors == 0 || n_donors > state.dim() {
        return Err(Error::InvalidParameter("bad donor count".into()));
    }
    let pops: Vec<f64> = (0..n_donors).map(|j| state.rho[(j, j)].re).collect();
    let total: f64 = pops.iter().sum();
    if total < 1e-12 {
        return Err(Error::InvalidState("zero donor population".into()));
    }
    let sum_sq: f64 = pops.iter().map(|p| (p / total).powi(2)).sum();
    Ok(1.0 / sum_sq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dimer_spec(v_d: f64) -> SystemSpec {
        SystemSpec {
            donor_energies: vec![148.0, 148.0],
            acceptor_energies: vec![0.0],
            donor_coupling: Coupling::Uniform(v_d),
            acceptor_coupling: Coupling::Uniform(0.0),
            cross_coupling: CrossCoupling::Uniform(10.0),
            donor_disorder: 0.0,
            acceptor_disorder: 0.0,
            donor_reorg: vec![10.0, 10.0],
            acceptor_reorg: vec![80.0],
        }
    }

    #[test]
    fn hamiltonian_matches_hand_assembly() {
        let h = build_hamiltonian(&dimer_spec(10.0), None).unwrap();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[148.0, 10.0, 10.0, 10.0, 148.0, 10.0, 10.0, 10.0, 0.0],
        );
        assert_eq!(h.matrix, expected);
        assert_eq!(h.labels, vec!["D1", "D2", "A1"]);
    }

    #[test]
    fn decoupled_limit_is_diagonal() {
        let mut spec = dimer_spec(0.0);
        spec.cross_coupling = CrossCoupling::Uniform(0.0);
        let h = build_hamiltonian(&spec, None).unwrap();
        assert_eq!(h.matrix, DMatrix::from_diagonal(&DVector::from_vec(vec![148.0, 148.0, 0.0])));
    }

    #[test]
    fn lowest_eigenstate_is_bright_for_negative_coupling() {
        let h = build_hamiltonian(&dimer_spec(-10.0), None).unwrap();
        let pairs = eigenstates(&h, Block::Donor);
        assert!((pairs[0].0 - 138.0).abs() < 1e-12);
        assert!((pairs[0].1[0] - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((pairs[0].1[1] - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((pairs[1].0 - 158.0).abs() < 1e-12);
    }

    #[test]
    fn preparations_match_reference_matrices() {
        let h = build_hamiltonian(&dimer_spec(-10.0), None).unwrap();
        let loc = prepare_state(&StatePrep::Localized(1), &h).unwrap();
        assert_eq!(loc.rho[(0, 0)], C64::new(1.0, 0.0));
        let mix = prepare_state(&StatePrep::Mixture(vec![0.5, 0.5]), &h).unwrap();
        assert_eq!(mix.rho[(0, 0)].re, 0.5);
        assert_eq!(mix.rho[(0, 1)], C64::new(0.0, 0.0));
        let c = C64::new(1.0 / 2f64.sqrt(), 0.0);
        let deloc = prepare_state(&StatePrep::Delocalized(vec![c, c]), &h).unwrap();
        assert!((deloc.rho[(0, 1)].re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn disorder_draws_are_deterministic_and_scaled() {
        let mut spec = dimer_spec(-10.0);
        spec.donor_disorder = 5.0;
        let h1 = build_hamiltonian(&spec, Some(7)).unwrap();
        let h2 = build_hamiltonian(&spec, Some(7)).unwrap();
        assert_eq!(h1.matrix, h2.matrix);
        let h3 = build_hamiltonian(&spec, Some(8)).unwrap();
        assert_ne!(h1.matrix[(0, 0)], h3.matrix[(0, 0)]);
    }

    #[test]
    fn participation_ratio_of_partially_delocalized_state() {
        let h = build_hamiltonian(&dimer_spec(-10.0), None).unwrap();
        let c1 = C64::new(0.8f64.sqrt(), 0.0);
        let c2 = C64::new(0.2f64.sqrt(), 0.0);
        let st = prepare_state(&StatePrep::Delocalized(vec![c1, c2]), &h).unwrap();
        let pr = participation_ratio(&st, 2).unwrap();
        assert!((pr - 1.0 / (0.64 + 0.04)).abs() < 1e-12);
    }
}
