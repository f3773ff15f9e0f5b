//! Density-matrix propagation: Lindblad master equation with site-projector
//! dephasing, and ensemble-averaged stochastic unitary evolution under
//! classical site-energy noise.
//!
//! Units: H in MHz (ħ = 1), time in μs, so dρ/dt = −i[H,ρ] + D(ρ) with
//! D(ρ) = Σ_m Γ_m (P_m ρ P_m − ½{P_m, ρ}). In the site basis the dissipator
//! is elementwise: coherence ρ_jk decays at (Γ_j + Γ_k)/2, populations are
//! untouched, which is what makes the integrator cheap and the invariants
//! sharp.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ExcitonState, SystemHamiltonian, C64};
use crate::noise::OuSite;

/// Per-site dephasing rates Γ_m (μs⁻¹), index-aligned with the Hamiltonian
/// basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingModel {
    pub site_rates: Vec<f64>,
}

impl DephasingModel {
    pub fn none(dim: usize) -> Self {
        DephasingModel { site_rates: vec![0.0; dim] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Lindblad,
    Stochastic { n_traj: usize },
}

/// Time grid, density-matrix snapshots, and aggregate populations.
#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub times: Vec<f64>,
    pub states: Vec<DMatrix<C64>>,
    pub labels: Vec<String>,
    pub donor_sites: Vec<usize>,
    pub acceptor_sites: Vec<usize>,
    pub method: Method,
}

impl PropagationResult {
    pub fn site_population(&self, site: usize) -> Vec<f64> {
        self.states.iter().map(|rho| rho[(site, site)].re).collect()
    }

    pub fn donor_population(&self) -> Vec<f64> {
        self.aggregate(&self.donor_sites)
    }

    pub fn acceptor_population(&self) -> Vec<f64> {
        self.aggregate(&self.acceptor_sites)
    }

    fn aggregate(&self, sites: &[usize]) -> Vec<f64> {
        self.states
            .iter()
            .map(|rho| sites.iter().map(|&s| rho[(s, s)].re).sum())
            .collect()
    }

    /// Worst-case invariant violations over all snapshots.
    pub fn invariant_report(&self) -> InvariantReport {
        let mut max_trace_dev = 0.0f64;
        let mut min_eigenvalue = f64::INFINITY;
        let mut max_herm_dev = 0.0f64;
        for rho in &self.states {
            let n = rho.nrows();
            let tr: f64 = (0..n).map(|i| rho[(i, i)].re).sum();
            max_trace_dev = max_trace_dev.max((tr - 1.0).abs());
            let herm = (rho - rho.adjoint()).norm();
            max_herm_dev = max_herm_dev.max(herm);
            let sym = (rho + rho.adjoint()).scale(0.5);
            let ev = sym.symmetric_eigen().eigenvalues;
            min_eigenvalue = min_eigenvalue.min(ev.iter().cloned().fold(f64::INFINITY, f64::min));
        }
        InvariantReport { max_trace_dev, min_eigenvalue, max_herm_dev }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct InvariantReport {
    pub max_trace_dev: f64,
    pub min_eigenvalue: f64,
    pub max_herm_dev: f64,
}

impl InvariantReport {
    pub fn ok(&self, tol: f64) -> bool {
        self.max_trace_dev <= tol && self.min_eigenvalue >= -tol && self.max_herm_dev <= tol
    }
}

/// Acceptor population time series P_A(t) = Σ_k ⟨A_k|ρ(t)|A_k⟩.
pub fn acceptor_population(result: &PropagationResult) -> Vec<f64> {
    result.acceptor_population()
}

fn check_inputs(h: &SystemHamiltonian, rates: &[f64], rho0: &ExcitonState) -> Result<()> {
    let n = h.dim();
    if rates.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} dephasing rates for dimension {n}",
            rates.len()
        )));
    }
    if rho0.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial state dimension {} != {n}",
            rho0.dim()
        )));
    }
    if rates.iter().any(|&g| g < 0.0) {
        return Err(Error::InvalidParameter("negative dephasing rate".into()));
    }
    rho0.check(1e-8)?;
    Ok(())
}

/// Elementwise dissipator weights: Ẇ_jk = Γ_j·δ_jk − (Γ_j + Γ_k)/2, so the
/// dissipator action is W ∘ ρ (zero on the diagonal, damping off-diagonals).
fn dissipator_weights(rates: &[f64]) -> DMatrix<f64> {
    let n = rates.len();
    DMatrix::from_fn(n, n, |j, k| {
        if j == k {
            0.0
        } else {
            -0.5 * (rates[j] + rates[k])
        }
    })
}

struct LindbladRhs {
    h: DMatrix<C64>,
    w: DMatrix<f64>,
}

impl LindbladRhs {
    fn eval(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let comm = &self.h * rho - rho * &self.h;
        let mut out = comm.map(|z| C64::new(z.im, -z.re)); // −i·comm
        for j in 0..rho.nrows() {
            for k in 0..rho.ncols() {
                out[(j, k)] += rho[(j, k)] * self.w[(j, k)];
            }
        }
        out
    }
}

const RTOL: f64 = 1e-8;
const ATOL: f64 = 1e-12;

/// Dormand-Prince 5(4) adaptive step, landing exactly on each output time.
fn dopri5_propagate(
    rhs: &LindbladRhs,
    rho0: DMatrix<C64>,
    times: &[f64],
) -> Result<Vec<DMatrix<C64>>> {
    // Butcher tableau (Dormand & Prince 1980).
    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    // b − b̂ (5th-order minus embedded 4th-order weights).
    const E1: f64 = 71.0 / 57600.0;
    const E3: f64 = -71.0 / 16695.0;
    const E4: f64 = 71.0 / 1920.0;
    const E5: f64 = -17253.0 / 339200.0;
    const E6: f64 = 22.0 / 525.0;
    const E7: f64 = -1.0 / 40.0;

    let mut out = Vec::with_capacity(times.len());
    let mut y = rho0;
    out.push(y.clone());
    let mut t = times[0];
    let scale0 = rhs.h.norm() + rhs.w.norm() + 1e-12;
    let mut h = (0.1 / scale0).min(times[times.len() - 1] - t).max(1e-12);
    let mut k1 = rhs.eval(&y);

    for &t_target in &times[1..] {
        while t < t_target {
            let h_try = h.min(t_target - t);
            let k2 = rhs.eval(&(&y + &k1 * Complex::from(h_try * A21)));
            let k3 = rhs.eval(&(&y + &k1 * Complex::from(h_try * A31) + &k2 * Complex::from(h_try * A32)));
            let k4 = rhs.eval(
                &(&y + &k1 * Complex::from(h_try * A41)
                    + &k2 * Complex::from(h_try * A42)
                    + &k3 * Complex::from(h_try * A43)),
            );
            let k5 = rhs.eval(
                &(&y + &k1 * Complex::from(h_try * A51)
                    + &k2 * Complex::from(h_try * A52)
                    + &k3 * Complex::from(h_try * A53)
                    + &k4 * Complex::from(h_try * A54)),
            );
            let k6 = rhs.eval(
                &(&y + &k1 * Complex::from(h_try * A61)
                    + &k2 * Complex::from(h_try * A62)
                    + &k3 * Complex::from(h_try * A63)
                    + &k4 * Complex::from(h_try * A64)
                    + &k5 * Complex::from(h_try * A65)),
            );
            let y_new = &y
                + &k1 * Complex::from(h_try * B1)
                + &k3 * Complex::from(h_try * B3)
                + &k4 * Complex::from(h_try * B4)
                + &k5 * Complex::from(h_try * B5)
                + &k6 * Complex::from(h_try * B6);
            let k7 = rhs.eval(&y_new);
            let err_m = &k1 * Complex::from(E1)
                + &k3 * Complex::from(E3)
                + &k4 * Complex::from(E4)
                + &k5 * Complex::from(E5)
                + &k6 * Complex::from(E6)
                + &k7 * Complex::from(E7);
            // Scaled RMS error over matrix entries.
            let mut acc = 0.0;
            let n_el = (y.nrows() * y.ncols()) as f64;
            for j in 0..y.nrows() {
                for k in 0..y.ncols() {
                    let sc = ATOL + RTOL * y[(j, k)].norm().max(y_new[(j, k)].norm());
                    let e = h_try * err_m[(j, k)].norm() / sc;
                    acc += e * e;
                }
            }
            let err = (acc / n_el).sqrt();
            if err <= 1.0 {
                t += h_try;
                y = y_new;
                k1 = k7; // first-same-as-last
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h = (h_try * factor).max(1e-12);
            } else {
                h = (h_try * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0)).max(1e-13);
                if h < 1e-13 {
                    return Err(Error::InvalidParameter(
                        "step size underflow in propagation".into(),
                    ));
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Propagate under the Lindblad master equation with site-projector
/// dephasing, sampling `n_steps + 1` uniformly spaced snapshots on
/// [0, t_max].
pub fn propagate_lindblad(
    h: &SystemHamiltonian,
    deph: &DephasingModel,
    rho0: &ExcitonState,
    t_max: f64,
    n_steps: usize,
) -> Result<PropagationResult> {
    check_inputs(h, &deph.site_rates, rho0)?;
    if !(t_max > 0.0) || n_steps == 0 {
        return Err(Error::InvalidParameter("need t_max > 0 and n_steps > 0".into()));
    }
    let times: Vec<f64> = (0..=n_steps)
        .map(|i| t_max * i as f64 / n_steps as f64)
        .collect();
    let rhs = LindbladRhs {
        h: h.as_complex(),
        w: dissipator_weights(&deph.site_rates),
    };
    let states = dopri5_propagate(&rhs, rho0.rho.clone(), &times)?;
    Ok(PropagationResult {
        times,
        states,
        labels: h.labels.clone(),
        donor_sites: h.donor_indices(),
        acceptor_sites: h.acceptor_indices(),
        method: Method::Lindblad,
    })
}

/// Precomputed OU update over a fixed half-step: x ← decay·x + amp·z with
/// amp = σ√(1−decay²), the exact discretization of the process.
#[derive(Clone, Copy)]
struct OuStepConst {
    decay: f64,
    amp: f64,
}

impl OuStepConst {
    fn new(site: &OuSite, dt: f64) -> Self {
        let decay = (-site.cutoff * dt).exp();
        OuStepConst {
            decay,
            amp: site.sigma * (1.0 - decay * decay).sqrt(),
        }
    }

    fn step(&self, x: f64, z: f64) -> f64 {
        x * self.decay + self.amp * z
    }
}

/// exp(−i·H·dt)·ψ via 6th-order Taylor with renormalization; valid for
/// ‖H·dt‖ ≲ 0.05 where the truncation error is below 1e-13. `term` and
/// `next` are caller-owned scratch to keep the hot loop allocation-free.
fn apply_step_unitary(
    h_eff: &DMatrix<C64>,
    psi: &mut DVector<C64>,
    dt: f64,
    term: &mut DVector<C64>,
    next: &mut DVector<C64>,
) {
    term.copy_from(psi);
    for k in 1..=6u32 {
        let coef = C64::new(0.0, -dt / k as f64);
        next.gemv(coef, h_eff, term, Complex::from(0.0));
        std::mem::swap(term, next);
        *psi += &*term;
    }
    let norm = psi.norm();
    *psi /= Complex::from(norm);
}

/// Ensemble-averaged propagation under H + diag(δE(t)) with independent OU
/// noise per site. Trajectories are deterministic per `master_seed`
/// (trajectory i uses RNG stream i), and the ensemble average is accumulated
/// in fixed chunk order so results do not depend on thread scheduling.
pub fn propagate_stochastic(
    h: &SystemHamiltonian,
    noise: &[OuSite],
    rho0: &ExcitonState,
    t_max: f64,
    n_steps: usize,
    n_traj: usize,
    master_seed: u64,
) -> Result<PropagationResult> {
    let n = h.dim();
    if noise.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} noise entries for dimension {n}",
            noise.len()
        )));
    }
    check_inputs(h, &vec![0.0; n], rho0)?;
    if n_traj == 0 || n_steps == 0 || !(t_max > 0.0) {
        return Err(Error::InvalidParameter(
            "need n_traj > 0, n_steps > 0, t_max > 0".into(),
        ));
    }

    // Mixed initial states are sampled per trajectory from the eigen-ensemble.
    let eig = rho0.rho.clone().symmetric_eigen();
    let mut components: Vec<(f64, DVector<C64>)> = (0..n)
        .map(|i| (eig.eigenvalues[i].max(0.0), eig.eigenvectors.column(i).into_owned()))
        .filter(|(w, _)| *w > 1e-12)
        .collect();
    components.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let total_w: f64 = components.iter().map(|(w, _)| w).sum();
    for c in components.iter_mut() {
        c.0 /= total_w;
    }

    // Step size: resolve the noise correlation time and keep ‖H_eff·dt‖ ≤
    // 0.05 (counting 4σ excursions) where the fixed-order step unitary holds.
    let h_c = h.as_complex();
    let h_scale = h.matrix.abs().row_sum().max() + 4.0 * noise.iter().map(|s| s.sigma).fold(0.0, f64::max);
    let min_cutoff = noise
        .iter()
        .filter(|s| s.sigma > 0.0)
        .map(|s| s.cutoff)
        .fold(f64::INFINITY, f64::min);
    let mut dt0 = 0.05 / h_scale.max(1e-9);
    if min_cutoff.is_finite() {
        dt0 = dt0.min(0.05 / min_cutoff);
    }
    let interval = t_max / n_steps as f64;
    let n_sub = (interval / dt0).ceil().max(1.0) as usize;
    let dt = interval / n_sub as f64;

    let noisy: Vec<usize> = (0..n).filter(|&m| noise[m].sigma > 0.0).collect();
    let half_step: Vec<OuStepConst> = noisy
        .iter()
        .map(|&m| OuStepConst::new(&noise[m], 0.5 * dt))
        .collect();
    let chunk = 64usize;
    let n_chunks = n_traj.div_ceil(chunk);

    let partials: Vec<Vec<DMatrix<C64>>> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let lo = ci * chunk;
            let hi = ((ci + 1) * chunk).min(n_traj);
            let mut sums: Vec<DMatrix<C64>> = vec![DMatrix::zeros(n, n); n_steps + 1];
            let mut h_eff = h_c.clone();
            let mut term: DVector<C64> = DVector::zeros(n);
            let mut next: DVector<C64> = DVector::zeros(n);
            for traj in lo..hi {
                let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
                rng.set_stream(traj as u64);
                // Pick the pure component for this trajectory.
                let mut psi = if components.len() == 1 {
                    components[0].1.clone()
                } else {
                    let u: f64 = rng.gen();
                    let mut acc = 0.0;
                    let mut pick = components.len() - 1;
                    for (i, (w, _)) in components.iter().enumerate() {
                        acc += w;
                        if u <= acc {
                            pick = i;
                            break;
                        }
                    }
                    components[pick].1.clone()
                };
                // Stationary initial noise values.
                let mut x: Vec<f64> = noisy
                    .iter()
                    .map(|&m| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        noise[m].sigma * z
                    })
                    .collect();
                sums[0].gerc(Complex::from(1.0), &psi, &psi, Complex::from(1.0));
                for out_i in 1..=n_steps {
                    for _ in 0..n_sub {
                        // Midpoint noise sample: advance each site by dt/2,
                        // freeze, then complete the step.
                        for ((xi, &m), c) in x.iter_mut().zip(&noisy).zip(&half_step) {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            *xi = c.step(*xi, z);
                            h_eff[(m, m)] = h_c[(m, m)] + Complex::from(*xi);
                        }
                        apply_step_unitary(&h_eff, &mut psi, dt, &mut term, &mut next);
                        for (xi, c) in x.iter_mut().zip(&half_step) {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            *xi = c.step(*xi, z);
                        }
                    }
                    sums[out_i].gerc(Complex::from(1.0), &psi, &psi, Complex::from(1.0));
                }
            }
            sums
        })
        .collect();

    let mut states: Vec<DMatrix<C64>> = vec![DMatrix::zeros(n, n); n_steps + 1];
    for part in partials {
        for (acc, p) in states.iter_mut().zip(part) {
            *acc += p;
        }
    }
    let scale = Complex::from(1.0 / n_traj as f64);
    for s in states.iter_mut() {
        *s *= scale;
    }
    let times: Vec<f64> = (0..=n_steps)
        .map(|i| t_max * i as f64 / n_steps as f64)
        .collect();
    Ok(PropagationResult {
        times,
        states,
        labels: h.labels.clone(),
        donor_sites: h.donor_indices(),
        acceptor_sites: h.acceptor_indices(),
        method: Method::Stochastic { n_traj },
    })
}

/// Dense Liouvillian superoperator over column-major vec(ρ); test oracle for
/// the adaptive integrator (propagation = expm(L·t)·vec(ρ₀)).
pub fn liouvillian_matrix(h: &SystemHamiltonian, deph: &DephasingModel) -> DMatrix<C64> {
    let n = h.dim();
    let hc = h.as_complex();
    let w = dissipator_weights(&deph.site_rates);
    let dim = n * n;
    let mut l: DMatrix<C64> = DMatrix::zeros(dim, dim);
    let idx = |row: usize, col: usize| col * n + row; // column-major flattening
    for r in 0..n {
        for c in 0..n {
            let out = idx(r, c);
            // −i(Hρ)_{rc} = −i Σ_k H_{rk} ρ_{kc}
            for k in 0..n {
                l[(out, idx(k, c))] += C64::new(0.0, -1.0) * hc[(r, k)];
            }
            // +i(ρH)_{rc} = +i Σ_k ρ_{rk} H_{kc}
            for k in 0..n {
                l[(out, idx(r, k))] += C64::new(0.0, 1.0) * hc[(k, c)];
            }
            l[(out, out)] += Complex::from(w[(r, c)]);
        }
    }
    l
}

/// Matrix exponential by Padé(13) with scaling and squaring.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    const THETA13: f64 = 5.371920351148152;
    let norm = a.map(|z| z.norm()).column_sum().max();
    let s = if norm > THETA13 {
        ((norm / THETA13).log2().ceil() as i32).max(0)
    } else {
        0
    };
    let a_s = a.map(|z| z / Complex::from(2f64.powi(s)));
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let id: DMatrix<C64> = DMatrix::identity(n, n);
    let a2 = &a_s * &a_s;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u_inner = &a6 * Complex::from(B[13]) + &a4 * Complex::from(B[11]) + &a2 * Complex::from(B[9]);
    let u = &a_s
        * (&a6 * &u_inner
            + &a6 * Complex::from(B[7])
            + &a4 * Complex::from(B[5])
            + &a2 * Complex::from(B[3])
            + &id * Complex::from(B[1]));
    let v_inner = &a6 * Complex::from(B[12]) + &a4 * Complex::from(B[10]) + &a2 * Complex::from(B[8]);
    let v = &a6 * &v_inner
        + &a6 * Complex::from(B[6])
        + &a4 * Complex::from(B[4])
        + &a2 * Complex::from(B[2])
        + &id * Complex::from(B[0]);
    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut x = lhs
        .lu()
        .solve(&rhs)
        .expect("Padé denominator is singular; matrix norm too large");
    for _ in 0..s {
        x = &x * &x;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hamiltonian, prepare_state, Coupling, CrossCoupling, StatePrep, SystemSpec};

    fn resonant_pair(v: f64) -> SystemHamiltonian {
        let spec = SystemSpec {
            donor_energies: vec![0.0],
            acceptor_energies: vec![0.0],
            donor_coupling: Coupling::Uniform(0.0),
            acceptor_coupling: Coupling::Uniform(0.0),
            cross_coupling: CrossCoupling::Uniform(v),
            donor_disorder: 0.0,
            acceptor_disorder: 0.0,
            donor_reorg: vec![0.0],
            acceptor_reorg: vec![0.0],
        };
        build_hamiltonian(&spec, None).unwrap()
    }

    #[test]
    fn rabi_oscillation_matches_analytic_solution() {
        let h = resonant_pair(5.0);
        let rho0 = prepare_state(&StatePrep::Localized(1), &h).unwrap();
        let res = propagate_lindblad(&h, &DephasingModel::none(2), &rho0, 1.0, 200).unwrap();
        let pa = res.acceptor_population();
        for (t, p) in res.times.iter().zip(&pa) {
            let expect = (5.0 * t).sin().powi(2);
            assert!((p - expect).abs() < 1e-7, "t={t} p={p} expect={expect}");
        }
    }

    #[test]
    fn stationary_state_stays_constant() {
        let h = resonant_pair(0.0);
        let rho0 = prepare_state(&StatePrep::Localized(1), &h).unwrap();
        let res = propagate_lindblad(&h, &DephasingModel::none(2), &rho0, 2.0, 50).unwrap();
        for rho in &res.states {
            assert!((rho[(0, 0)].re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn expm_matches_scalar_exponential() {
        let a = DMatrix::from_row_slice(1, 1, &[C64::new(0.0, 2.0)]);
        let e = expm(&a);
        assert!((e[(0, 0)] - C64::new((2.0f64).cos(), (2.0f64).sin())).norm() < 1e-14);
    }

    #[test]
    fn dephasing_decays_coherence_at_mean_rate() {
        // Two decoupled sites with rates Γ₁, Γ₂: ρ_01(t) = ρ_01(0)·e^{−(Γ₁+Γ₂)t/2}·phase.
        let spec = SystemSpec {
            donor_energies: vec![3.0],
            acceptor_energies: vec![-1.0],
            donor_coupling: Coupling::Uniform(0.0),
            acceptor_coupling: Coupling::Uniform(0.0),
            cross_coupling: CrossCoupling::Uniform(0.0),
            donor_disorder: 0.0,
            acceptor_disorder: 0.0,
            donor_reorg: vec![0.0],
            acceptor_reorg: vec![0.0],
        };
        let h = build_hamiltonian(&spec, None).unwrap();
        let c = C64::new(1.0 / 2f64.sqrt(), 0.0);
        let mut rho = DMatrix::zeros(2, 2);
        rho[(0, 0)] = C64::new(0.5, 0.0);
        rho[(1, 1)] = C64::new(0.5, 0.0);
        rho[(0, 1)] = c * c.conj();
        rho[(1, 0)] = c * c.conj();
        let rho0 = ExcitonState::new(rho, 1e-9).unwrap();
        let deph = DephasingModel { site_rates: vec![4.0, 2.0] };
        let res = propagate_lindblad(&h, &deph, &rho0, 0.5, 100).unwrap();
        for (t, rho_t) in res.times.iter().zip(&res.states) {
            let expect = 0.5 * (-3.0 * t).exp();
            assert!(
                (rho_t[(0, 1)].norm() - expect).abs() < 1e-7,
                "t={t} |c|={} expect={expect}",
                rho_t[(0, 1)].norm()
            );
        }
    }

    #[test]
    fn stochastic_average_is_seed_deterministic() {
        let h = resonant_pair(5.0);
        let rho0 = prepare_state(&StatePrep::Localized(1), &h).unwrap();
        let noise = vec![OuSite { sigma: 20.0, cutoff: 500.0 }; 2];
        let a = propagate_stochastic(&h, &noise, &rho0, 0.5, 20, 128, 9).unwrap();
        let b = propagate_stochastic(&h, &noise, &rho0, 0.5, 20, 128, 9).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            assert_eq!(x, y);
        }
    }
}
