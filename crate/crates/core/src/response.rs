//! Steady-state driven response through resolvent solves.
//!
//! A monochromatic drive with per-site random phases excites the lattice;
//! the response is `psi = kappa (omega I - H + i gamma I)^{-1} d`, with the
//! uniform damping `gamma` entering as `-i gamma` on the diagonal so every
//! mode decays. Frequency sweeps reuse one drive vector so peak motion
//! reflects omega, not drive noise.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::lattice::HamiltonianMatrix;
use crate::linalg::{self, CMatrix, LuFactors, C64};
use crate::rng;
use crate::spectral::fit_line;

/// Relative pivot floor below which a solve is treated as resonant.
const PIVOT_GUARD: f64 = 1e-13;

/// Drive parameters: frequency, site coupling, phase seed, uniform damping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub omega: f64,
    pub kappa: f64,
    pub seed: u64,
    pub gamma: f64,
}

impl DriveSpec {
    pub fn new(omega: f64, kappa: f64, seed: u64, gamma: f64) -> Result<Self> {
        if kappa == 0.0 {
            return Err(CoreError::InvalidSpec("kappa must be nonzero".into()));
        }
        if gamma < 0.0 {
            return Err(CoreError::InvalidSpec("gamma must be >= 0".into()));
        }
        Ok(Self {
            omega,
            kappa,
            seed,
            gamma,
        })
    }
}

/// Unit-modulus drive vector `d_j = exp(i theta_j)` with phases i.i.d.
/// uniform on [0, 2 pi), deterministic in the seed.
pub fn random_phase_drive(n: usize, seed: u64) -> Vec<C64> {
    let mut r = rng::seeded(seed);
    (0..n)
        .map(|_| {
            let theta = rng::uniform(&mut r, 0.0, std::f64::consts::TAU);
            Complex64::new(0.0, theta).exp()
        })
        .collect()
}

/// Site amplitudes of one steady-state solve, with the verified
/// back-substitution residual.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResponseProfile {
    pub amplitudes: Vec<f64>,
    pub solve_residual: f64,
}

impl ResponseProfile {
    pub fn peak_site(&self) -> usize {
        self.amplitudes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i + 1)
            .unwrap_or(1)
    }
}

fn assemble_system(h: &HamiltonianMatrix, omega: f64, gamma: f64) -> CMatrix {
    let mut m = CMatrix::zeros(h.n(), h.n());
    for i in 0..h.n() {
        for j in 0..h.n() {
            m[(i, j)] = -h.entry(i, j);
        }
        m[(i, i)] += Complex64::new(omega, gamma);
    }
    m
}

/// Complex steady-state field `kappa (omega I - H + i gamma I)^{-1} d`.
pub fn steady_state_field(
    h: &HamiltonianMatrix,
    drive: &DriveSpec,
    d: &[C64],
) -> Result<(Vec<C64>, f64)> {
    if d.len() != h.n() {
        return Err(CoreError::DimensionMismatch {
            expected: h.n(),
            got: d.len(),
        });
    }
    let m = assemble_system(h, drive.omega, drive.gamma);
    let lu = LuFactors::factor(&m);
    let threshold = PIVOT_GUARD * m.frobenius_norm().max(f64::MIN_POSITIVE);
    if lu.min_pivot() < threshold {
        return Err(CoreError::Resonance {
            omega: drive.omega,
            pivot: lu.min_pivot(),
            threshold,
        });
    }
    let rhs: Vec<C64> = d.iter().map(|z| z * drive.kappa).collect();
    let (psi, residual) = linalg::solve_refined(&m, &lu, &rhs)?;
    Ok((psi, residual))
}

/// Steady-state response amplitudes `|psi_j|`.
pub fn steady_state(h: &HamiltonianMatrix, drive: &DriveSpec, d: &[C64]) -> Result<ResponseProfile> {
    let (psi, solve_residual) = steady_state_field(h, drive, d)?;
    Ok(ResponseProfile {
        amplitudes: psi.iter().map(|z| z.norm()).collect(),
        solve_residual,
    })
}

/// Site-amplitude map over a frequency grid, one steady-state solve per
/// omega against a single shared drive vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub omegas: Vec<f64>,
    /// `profiles[i]` is the amplitude profile at `omegas[i]`.
    pub profiles: Vec<Vec<f64>>,
    /// 1-based argmax site per omega.
    pub peaks: Vec<usize>,
    pub kappa: f64,
    pub gamma: f64,
    pub seed: u64,
}

pub fn frequency_sweep(
    h: &HamiltonianMatrix,
    omegas: &[f64],
    kappa: f64,
    gamma: f64,
    seed: u64,
) -> Result<SweepResult> {
    if omegas.is_empty() {
        return Err(CoreError::EmptyData("empty frequency grid".into()));
    }
    let d = random_phase_drive(h.n(), seed);
    let profiles: Vec<ResponseProfile> = omegas
        .par_iter()
        .map(|&omega| {
            let drive = DriveSpec {
                omega,
                kappa,
                seed,
                gamma,
            };
            steady_state(h, &drive, &d)
        })
        .collect::<Result<_>>()?;
    let peaks = profiles.iter().map(|p| p.peak_site()).collect();
    Ok(SweepResult {
        omegas: omegas.to_vec(),
        profiles: profiles.into_iter().map(|p| p.amplitudes).collect(),
        peaks,
        kappa,
        gamma,
        seed,
    })
}

/// Trapping/funneling metrics of a sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SweepMetrics {
    /// Least-squares slope of peak site vs omega (1/B for the rainbow
    /// lattice).
    pub rainbow_slope: f64,
    pub rainbow_r2: f64,
    /// Share of frequencies whose peak lies in the trailing
    /// `window_fraction` of sites.
    pub funnel_fraction: f64,
    /// Pearson correlation of omega with peak site.
    pub peak_omega_correlation: f64,
}

/// Computes sweep metrics; `window_fraction` is the trailing-site share
/// (0.05 marks the top 5% of sites as the funnel window).
pub fn sweep_metrics(sweep: &SweepResult, n_sites: usize, window_fraction: f64) -> Result<SweepMetrics> {
    if sweep.omegas.len() < 5 {
        return Err(CoreError::EmptyData(format!(
            "{} frequencies; at least 5 needed for sweep metrics",
            sweep.omegas.len()
        )));
    }
    let span = sweep.omegas.iter().cloned().fold(f64::NAN, f64::max)
        - sweep.omegas.iter().cloned().fold(f64::NAN, f64::min);
    if span <= 0.0 || span.is_nan() {
        return Err(CoreError::EmptyData("degenerate frequency grid".into()));
    }
    let pts: Vec<(f64, f64)> = sweep
        .omegas
        .iter()
        .zip(&sweep.peaks)
        .map(|(&w, &p)| (w, p as f64))
        .collect();
    let fit = fit_line(&pts, pts.len());
    let window_start = (1.0 - window_fraction) * n_sites as f64;
    let funnel_fraction = sweep
        .peaks
        .iter()
        .filter(|&&p| p as f64 >= window_start)
        .count() as f64
        / sweep.peaks.len() as f64;
    Ok(SweepMetrics {
        rainbow_slope: fit.slope,
        rainbow_r2: fit.r_squared,
        funnel_fraction,
        peak_omega_correlation: pearson(&pts),
    })
}

fn pearson(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in pts {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Uniformly spaced frequency grid over [lo, hi].
pub fn omega_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    assert!(steps >= 1);
    if steps == 1 {
        return vec![(lo + hi) / 2.0];
    }
    (0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps as f64 - 1.0))
        .collect()
}
