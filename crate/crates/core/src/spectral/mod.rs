//! Eigendecomposition plus per-state statistics and trend fits.

mod eig;

pub use eig::{eig, EigenDecomposition, DEFAULT_TOL};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::lattice::HamiltonianMatrix;
use crate::linalg::C64;

/// Per-eigenstate observables: energy, participation ratio, |psi|^2-weighted
/// mean position in centered coordinates, and the eigenpair residual.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StateStats {
    pub e: C64,
    pub pr: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    pub residual: f64,
}

/// (sum |psi|^2)^2 / sum |psi|^4; scale-invariant, 1 for a single site,
/// N for a uniform state.
pub fn participation_ratio(psi: &[C64]) -> Result<f64> {
    let mut s2 = 0.0;
    let mut s4 = 0.0;
    for z in psi {
        let a2 = z.norm_sqr();
        s2 += a2;
        s4 += a2 * a2;
    }
    if s2 == 0.0 {
        return Err(CoreError::ZeroVector);
    }
    Ok(s2 * s2 / s4)
}

/// One [`StateStats`] per eigenpair of `decomp`, which must come from `h`.
pub fn spectrum_table(h: &HamiltonianMatrix, decomp: &EigenDecomposition) -> Result<Vec<StateStats>> {
    if decomp.n() != h.n() {
        return Err(CoreError::DimensionMismatch {
            expected: h.n(),
            got: decomp.n(),
        });
    }
    let indexer = h.indexer();
    let coords: Vec<(f64, f64)> = (0..h.n()).map(|i| indexer.centered(i)).collect();
    let mut out = Vec::with_capacity(decomp.n());
    for k in 0..decomp.n() {
        let v = &decomp.vectors[k];
        let pr = participation_ratio(v)?;
        let mut w_sum = 0.0;
        let mut mx = 0.0;
        let mut my = 0.0;
        for (z, &(x, y)) in v.iter().zip(&coords) {
            let w = z.norm_sqr();
            w_sum += w;
            mx += w * x;
            my += w * y;
        }
        out.push(StateStats {
            e: decomp.values[k],
            pr,
            mean_x: mx / w_sum,
            mean_y: my / w_sum,
            residual: decomp.residuals[k],
        });
    }
    Ok(out)
}

/// Field selector for [`linear_trend`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatField {
    ReE,
    ImE,
    Pr,
    MeanX,
    MeanY,
}

impl StatField {
    pub fn get(&self, s: &StateStats) -> f64 {
        match self {
            StatField::ReE => s.e.re,
            StatField::ImE => s.e.im,
            StatField::Pr => s.pr,
            StatField::MeanX => s.mean_x,
            StatField::MeanY => s.mean_y,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrendFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_used: usize,
}

/// Least-squares fit of `y_field` against `x_field` over the states passing
/// `filter`; needs at least 10 of them.
pub fn linear_trend<F>(
    table: &[StateStats],
    x_field: StatField,
    y_field: StatField,
    filter: F,
) -> Result<TrendFit>
where
    F: Fn(&StateStats) -> bool,
{
    let pts: Vec<(f64, f64)> = table
        .iter()
        .filter(|s| filter(s))
        .map(|s| (x_field.get(s), y_field.get(s)))
        .collect();
    if pts.len() < 10 {
        return Err(CoreError::InsufficientStates {
            found: pts.len(),
            needed: 10,
        });
    }
    Ok(fit_line(&pts, pts.len()))
}

pub(crate) fn fit_line(pts: &[(f64, f64)], n_used: usize) -> TrendFit {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let mx = sx / n;
    let my = sy / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| {
            let e = p.1 - (slope * p.0 + intercept);
            e * e
        })
        .sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    TrendFit {
        slope,
        intercept,
        r_squared,
        n_used,
    }
}

/// Interior filter: mean position at least `margin` sites inside the hull of
/// the centered coordinates.
pub fn interior_filter(h: &HamiltonianMatrix, margin: f64) -> impl Fn(&StateStats) -> bool {
    let (hx, hy) = h.indexer().half_extent();
    move |s: &StateStats| {
        s.mean_x.abs() <= hx - margin && (hy == 0.0 || s.mean_y.abs() <= hy - margin)
    }
}
