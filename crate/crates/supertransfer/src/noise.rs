//! Bath spectral densities, classical noise generation, and the mapping from
//! reorganization energy to Markovian dephasing.
//!
//! The fluctuating part of each site energy is an Ornstein-Uhlenbeck process
//! with autocorrelation σ²·exp(−ω_c|t|). In the motional-narrowing regime
//! (σ ≪ ω_c) a pair of independently fluctuating sites loses mutual coherence
//! at 2σ²/ω_c, which the mapping equates with the dephasing rate Γ_φ.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Bath spectral density J(ω) in MHz over angular frequency in MHz.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralDensity {
    /// Lorentzian-cutoff form normalized so ∫ J/ω dω = λ exactly:
    /// J(ω) = (2λω_c/π)·ω/(ω² + ω_c²).
    DrudeLorentz { lambda: f64, cutoff: f64 },
    /// Piecewise-linear tabulated spectrum, (ω, J) pairs with ascending ω.
    Tabulated { points: Vec<(f64, f64)> },
}

pub fn evaluate_spectral_density(j: &SpectralDensity, omega: f64) -> f64 {
    match j {
        SpectralDensity::DrudeLorentz { lambda, cutoff } => {
            (2.0 * lambda * cutoff / std::f64::consts::PI) * omega / (omega * omega + cutoff * cutoff)
        }
        SpectralDensity::Tabulated { points } => {
            if points.is_empty() {
                return 0.0;
            }
            if omega <= points[0].0 {
                return points[0].1;
            }
            for w in points.windows(2) {
                let ((w0, j0), (w1, j1)) = (w[0], w[1]);
                if omega <= w1 {
                    let t = (omega - w0) / (w1 - w0);
                    return j0 + t * (j1 - j0);
                }
            }
            0.0
        }
    }
}

/// Reorganization energy λ = ∫₀^∞ J(ω)/ω dω by adaptive quadrature.
///
/// The integral is truncated at 10³·ω_c (or the last tabulated point); for the
/// Drude-Lorentz form the 1/ω² tail beyond the cutoff is added analytically,
/// so the documented truncation does not bias the result.
pub fn reorganization_energy(j: &SpectralDensity) -> f64 {
    match j {
        SpectralDensity::DrudeLorentz { lambda, cutoff } => {
            let omega_max = 1e3 * cutoff;
            let f = |w: f64| {
                if w == 0.0 {
                    2.0 * lambda / (std::f64::consts::PI * cutoff)
                } else {
                    evaluate_spectral_density(j, w) / w
                }
            };
            let body = adaptive_simpson(&f, 0.0, omega_max, 1e-6 * lambda.abs().max(1e-12), 40);
            let tail = (2.0 * lambda / std::f64::consts::PI)
                * (std::f64::consts::FRAC_PI_2 - (omega_max / cutoff).atan());
            body + tail
        }
        SpectralDensity::Tabulated { points } => {
            let mut acc = 0.0;
            for w in points.windows(2) {
                let ((w0, j0), (w1, j1)) = (w[0], w[1]);
                let f0 = if w0 > 0.0 { j0 / w0 } else { 0.0 };
                let f1 = if w1 > 0.0 { j1 / w1 } else { 0.0 };
                acc += 0.5 * (f0 + f1) * (w1 - w0);
            }
            acc
        }
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), fm)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (left, flm) = simpson(f, a, fa, m, fm);
        let (right, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, frm, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, fm, tol, depth)
}

/// One realization of a site-energy fluctuation, sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct NoiseTrajectory {
    pub dt: f64,
    pub samples: Vec<f64>,
}

/// Ornstein-Uhlenbeck parameters for one site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuSite {
    pub sigma: f64,
    pub cutoff: f64,
}

/// Exact-discretization OU sampler: x_{n+1} = x_n·e^{−ω_c·dt} +
/// σ·√(1 − e^{−2ω_c·dt})·ξ_n, started from the stationary distribution.
/// Deterministic per seed.
pub fn sample_ou_trajectory(
    sigma: f64,
    cutoff: f64,
    dt: f64,
    duration: f64,
    seed: u64,
) -> Result<NoiseTrajectory> {
    if !(cutoff > 0.0) {
        return Err(Error::InvalidParameter("cutoff must be positive".into()));
    }
    if !(dt > 0.0) || dt > 0.1 / cutoff {
        return Err(Error::InvalidParameter(format!(
            "dt = {dt} must be in (0, 0.1/omega_c = {}]",
            0.1 / cutoff
        )));
    }
    if duration < 100.0 / cutoff {
        return Err(Error::InvalidParameter(format!(
            "duration = {duration} shorter than 100/omega_c = {}",
            100.0 / cutoff
        )));
    }
    if sigma < 0.0 {
        return Err(Error::InvalidParameter("sigma must be >= 0".into()));
    }
    let n = (duration / dt).round() as usize + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let decay = (-cutoff * dt).exp();
    let kick = sigma * (1.0 - decay * decay).sqrt();
    let mut samples = Vec::with_capacity(n);
    let z0: f64 = StandardNormal.sample(&mut rng);
    let mut x = sigma * z0;
    samples.push(x);
    for _ in 1..n {
        let z: f64 = StandardNormal.sample(&mut rng);
        x = x * decay + kick * z;
        samples.push(x);
    }
    Ok(NoiseTrajectory { dt, samples })
}

/// Ensemble-averaged autocorrelation ⟨x(t)x(t+k·dt)⟩ at the requested lags.
pub fn empirical_autocorrelation(ensemble: &[NoiseTrajectory], lags: &[usize]) -> Result<Vec<f64>> {
    if ensemble.is_empty() {
        return Err(Error::InvalidParameter("empty ensemble".into()));
    }
    let n = ensemble[0].samples.len();
    if ensemble.iter().any(|t| t.samples.len() != n) {
        return Err(Error::DimensionMismatch("ragged ensemble".into()));
    }
    let mut out = Vec::with_capacity(lags.len());
    for &k in lags {
        if k >= n {
            return Err(Error::InvalidParameter(format!("lag {k} >= length {n}")));
        }
        let mut acc = 0.0;
        for traj in ensemble {
            let xs = &traj.samples;
            let mut s = 0.0;
            for t in 0..(n - k) {
                s += xs[t] * xs[t + k];
            }
            acc += s / (n - k) as f64;
        }
        out.push(acc / ensemble.len() as f64);
    }
    Ok(out)
}

/// Two-sided power spectrum on an angular-frequency grid.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub omegas: Vec<f64>,
    pub values: Vec<f64>,
}

/// Discrete cosine transform of the ensemble-averaged autocorrelation:
/// S(ω) = dt·(C₀ + 2·Σ_k C_k·cos(ω·k·dt)). The autocorrelation is truncated
/// where it has decayed below e⁻⁸ of its lag-0 value (statistical tail noise
/// would otherwise dominate); the grid spans [0, π/dt].
pub fn empirical_spectrum(ensemble: &[NoiseTrajectory]) -> Result<Spectrum> {
    if ensemble.len() < 100 {
        return Err(Error::InvalidParameter(format!(
            "spectrum estimation needs >= 100 trajectories, got {}",
            ensemble.len()
        )));
    }
    let n = ensemble[0].samples.len();
    let l_max = n / 4;
    let all_lags: Vec<usize> = (0..l_max).collect();
    let corr = empirical_autocorrelation(ensemble, &all_lags)?;
    let c0 = corr[0].abs().max(1e-300);
    let floor = c0 * (-8.0f64).exp();
    let l = corr
        .iter()
        .position(|c| c.abs() < floor)
        .unwrap_or(l_max)
        .max(16)
        .min(l_max);
    let dt = ensemble[0].dt;
    let n_freq = 512.min(4 * l);
    let d_omega = std::f64::consts::PI / dt / n_freq as f64;
    let mut omegas = Vec::with_capacity(n_freq);
    let mut values = Vec::with_capacity(n_freq);
    for m in 0..n_freq {
        let w = m as f64 * d_omega;
        let mut s = corr[0];
        for (k, c) in corr.iter().enumerate().take(l).skip(1) {
            s += 2.0 * c * (w * k as f64 * dt).cos();
        }
        omegas.push(w);
        values.push(dt * s);
    }
    Ok(Spectrum { omegas, values })
}

/// Analytic spectrum of the OU process, 2σ²ω_c/(ω² + ω_c²).
pub fn ou_spectrum(sigma: f64, cutoff: f64, omega: f64) -> f64 {
    2.0 * sigma * sigma * cutoff / (omega * omega + cutoff * cutoff)
}

/// Default λ → Γ_φ proportionality; see `NoiseMapping`.
pub const DEFAULT_GAMMA_PHI_PER_LAMBDA: f64 = 2.0;
/// Default OU cutoff (μs⁻¹) used when realizing dephasing as classical noise.
pub const DEFAULT_OU_CUTOFF: f64 = 1000.0;

/// Markovian dephasing rate implied by a reorganization energy, Γ_φ = 2λ.
/// The cutoff does not enter the adopted mapping but is part of the bridge's
/// interface because it fixes the OU realization of the same rate.
pub fn dephasing_rate_from_reorg(lambda: f64, _cutoff: f64) -> f64 {
    DEFAULT_GAMMA_PHI_PER_LAMBDA * lambda
}

/// The single calibration knob connecting reorganization energies to
/// dynamics: Γ_φ = gamma_phi_per_lambda · λ, realized stochastically as OU
/// noise with σ² = Γ_φ·ω_c/2 so the motional-narrowing rate 2σ²/ω_c
/// reproduces Γ_φ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseMapping {
    pub gamma_phi_per_lambda: f64,
    pub cutoff: f64,
}

impl Default for NoiseMapping {
    fn default() -> Self {
        NoiseMapping {
            gamma_phi_per_lambda: DEFAULT_GAMMA_PHI_PER_LAMBDA,
            cutoff: DEFAULT_OU_CUTOFF,
        }
    }
}

impl NoiseMapping {
    pub fn dephasing_rate(&self, lambda: f64) -> f64 {
        self.gamma_phi_per_lambda * lambda
    }

    pub fn ou_sigma(&self, gamma_phi: f64) -> f64 {
        (gamma_phi * self.cutoff / 2.0).sqrt()
    }

    pub fn ou_site(&self, lambda: f64) -> OuSite {
        OuSite {
            sigma: self.ou_sigma(self.dephasing_rate(lambda)),
            cutoff: self.cutoff,
        }
    }
}
