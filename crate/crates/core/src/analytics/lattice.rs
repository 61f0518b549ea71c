//! Envelope ansatze for the finite lattices.
//!
//! Bloch-modulating a slowly varying envelope turns each lattice model into
//! a first-order effective operator with drift coefficients set by the
//! carrier momentum k. Expanding the models directly (hoppings as written,
//! `psi_j = e^{ikj} Psi(j)`) gives
//!
//! * 2D: `H_k = E0_k + B(y - ix) + i mu_k d/dx + nu_k d/dy`,
//!   `mu_k = 2 t_x sin k_x`, `nu_k = 2 t_y cos k_y`,
//!   `E0_k = 2(t_x cos k_x + i t_y sin k_y)`;
//! * 1D nonreciprocal: `H_k = E0_k + B x + c d/dx`, `c = -2 t cos k`,
//!   `E0_k = -2 i t sin k`;
//! * 1D gain/loss: `H_k = E0_k + i B x + i c d/dx`, `c = 2 t sin k`,
//!   `E0_k = 2 t cos k`.
//!
//! Gaussian envelopes solve these exactly with `tau_x = -B/(2 mu_k)`,
//! `tau_y = B/(2 nu_k)` (2D) and `tau = B/(2c)` (1D); a mode exists when
//! every decay constant is positive. Center positions are locked to the
//! energy; the leftover imaginary part of the complex center is absorbed as
//! an envelope-momentum shift.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::lattice::SiteIndexer;
use crate::linalg::{self, C64};

use super::Caveat;

/// Envelope momenta above this leave the |q| << 1 validity regime.
const Q_VALIDITY: f64 = 0.2;
/// Gaussian widths below this many sites undercut the slow-envelope
/// assumption.
const MIN_WIDTH_SITES: f64 = 3.0;
/// Drift coefficients below this fraction of the hopping scale count as
/// degenerate (sin/cos at the zone's turning points lands here through
/// rounding).
const DRIFT_FLOOR: f64 = 1e-9;

/// Gaussian amplitude width 1/sqrt(2 tau) of exp(-tau u^2).
fn gaussian_width(tau: f64) -> f64 {
    1.0 / (2.0 * tau).sqrt()
}

/// 2D lattice mode descriptor at carrier momentum k, envelope momentum q,
/// and energy E.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeClm2d {
    pub tx: f64,
    pub ty: f64,
    pub b: f64,
    pub k: [f64; 2],
    pub q: [f64; 2],
    pub e: C64,
    pub mu: f64,
    pub nu: f64,
    pub tau_x: f64,
    pub tau_y: f64,
    pub r0: [f64; 2],
    pub exists: bool,
    pub caveats: Vec<Caveat>,
}

/// Dispersion of the 2D model: `E0_k = 2(t_x cos k_x + i t_y sin k_y)`.
pub fn dispersion_2d(tx: f64, ty: f64, k: [f64; 2]) -> C64 {
    Complex64::new(2.0 * tx * k[0].cos(), 2.0 * ty * k[1].sin())
}

/// Builds the 2D descriptor. The center follows
/// `r0 = (-Im(E - E0_{k+q}), Re(E - E0_{k+q})) / B`; existence requires
/// `tau_x, tau_y > 0`, i.e. `B/mu < 0` and `B/nu > 0`.
pub fn lattice_clm_2d(
    tx: f64,
    ty: f64,
    b: f64,
    k: [f64; 2],
    q: [f64; 2],
    e: C64,
) -> Result<LatticeClm2d> {
    if b == 0.0 {
        return Err(CoreError::NoField);
    }
    let mu = 2.0 * tx * k[0].sin();
    let nu = 2.0 * ty * k[1].cos();
    if mu.abs() <= DRIFT_FLOOR * 2.0 * tx.abs() || nu.abs() <= DRIFT_FLOOR * 2.0 * ty.abs() {
        return Err(CoreError::DegenerateDrift(format!(
            "mu = {mu}, nu = {nu} at k = ({}, {}); no gaussian envelope",
            k[0], k[1]
        )));
    }
    let tau_x = -b / (2.0 * mu);
    let tau_y = b / (2.0 * nu);
    let exists = tau_x > 0.0 && tau_y > 0.0;
    let de = e - dispersion_2d(tx, ty, [k[0] + q[0], k[1] + q[1]]);
    let r0 = [-de.im / b, de.re / b];
    let mut caveats = Vec::new();
    if (q[0] * q[0] + q[1] * q[1]).sqrt() > Q_VALIDITY {
        caveats.push(Caveat::EnvelopeMomentumLarge);
    }
    if exists
        && (gaussian_width(tau_x) < MIN_WIDTH_SITES || gaussian_width(tau_y) < MIN_WIDTH_SITES)
    {
        caveats.push(Caveat::WidthBelowThreeSites);
    }
    Ok(LatticeClm2d {
        tx,
        ty,
        b,
        k,
        q,
        e,
        mu,
        nu,
        tau_x,
        tau_y,
        r0,
        exists,
        caveats,
    })
}

/// Which 1D lattice an envelope descriptor refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model1dKind {
    Nonreciprocal,
    GainLoss,
}

/// 1D lattice mode descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeClm1d {
    pub model: Model1dKind,
    pub t: f64,
    pub b: f64,
    pub k: f64,
    /// Envelope momentum actually carried by the sampled mode: the caller's
    /// q plus the shift absorbing Im of the complex center.
    pub q: f64,
    pub e: C64,
    /// Drift coefficient: -2t cos k (nonreciprocal), 2t sin k (gain/loss,
    /// entering as i c d/dx).
    pub c: f64,
    pub tau: f64,
    pub x0: f64,
    pub exists: bool,
    pub caveats: Vec<Caveat>,
}

/// Dispersion of a 1D model.
pub fn dispersion_1d(model: Model1dKind, t: f64, k: f64) -> C64 {
    match model {
        Model1dKind::Nonreciprocal => Complex64::new(0.0, -2.0 * t * k.sin()),
        Model1dKind::GainLoss => Complex64::new(2.0 * t * k.cos(), 0.0),
    }
}

/// Builds the 1D descriptor: `tau = B/(2c)`; centers
/// `x0 = Re(E)/B` (nonreciprocal) or `Im(E)/B` (gain/loss); the remaining
/// component of `(E - E0_k)` becomes an envelope-momentum shift on top of
/// the caller's `q`.
pub fn lattice_clm_1d(
    model: Model1dKind,
    t: f64,
    b: f64,
    k: f64,
    q: f64,
    e: C64,
) -> Result<LatticeClm1d> {
    if b == 0.0 {
        return Err(CoreError::NoField);
    }
    let c = match model {
        Model1dKind::Nonreciprocal => -2.0 * t * k.cos(),
        Model1dKind::GainLoss => 2.0 * t * k.sin(),
    };
    if c.abs() <= DRIFT_FLOOR * 2.0 * t.abs() {
        return Err(CoreError::DegenerateDrift(format!(
            "zero drift at k = {k}; no gaussian envelope"
        )));
    }
    let tau = b / (2.0 * c);
    let exists = tau > 0.0;
    let de = e - dispersion_1d(model, t, k);
    let (x0, q_shift) = match model {
        // complex center z0 = (E - E0)/B; Im part -> envelope momentum
        Model1dKind::Nonreciprocal => (e.re / b, 2.0 * tau * de.im / b),
        // z0 = (E - E0)/(iB)
        Model1dKind::GainLoss => (e.im / b, 2.0 * tau * (-de.re / b)),
    };
    let q_total = q + q_shift;
    let mut caveats = Vec::new();
    if q_total.abs() > Q_VALIDITY {
        caveats.push(Caveat::EnvelopeMomentumLarge);
    }
    if exists && gaussian_width(tau) < MIN_WIDTH_SITES {
        caveats.push(Caveat::WidthBelowThreeSites);
    }
    Ok(LatticeClm1d {
        model,
        t,
        b,
        k,
        q: q_total,
        e,
        c,
        tau,
        x0,
        exists,
        caveats,
    })
}

fn clip_caveats(
    caveats: &[Caveat],
    center: f64,
    half_extent: f64,
    width: f64,
    out: &mut Vec<Caveat>,
) {
    out.extend_from_slice(caveats);
    if center.abs() > half_extent - MIN_WIDTH_SITES * width
        && !out.contains(&Caveat::BoundaryClipped)
    {
        out.push(Caveat::BoundaryClipped);
    }
}

/// Samples the 2D ansatz on the lattice:
/// `psi_r = exp(i (k+q).r) exp(-tau_x (x-x0)^2 - tau_y (y-y0)^2)`,
/// normalized to unit L2. Returns boundary-clipping caveats alongside.
pub fn sample_lattice_clm_2d(
    clm: &LatticeClm2d,
    indexer: &SiteIndexer,
) -> Result<(Vec<C64>, Vec<Caveat>)> {
    if !clm.exists {
        return Err(CoreError::InvalidSpec(
            "ansatz does not exist at this k (non-positive decay constant)".into(),
        ));
    }
    let (hx, hy) = indexer.half_extent();
    let mut caveats = Vec::new();
    clip_caveats(
        &clm.caveats,
        clm.r0[0],
        hx,
        gaussian_width(clm.tau_x),
        &mut caveats,
    );
    clip_caveats(&[], clm.r0[1], hy, gaussian_width(clm.tau_y), &mut caveats);
    let kx = clm.k[0] + clm.q[0];
    let ky = clm.k[1] + clm.q[1];
    let mut psi = Vec::with_capacity(indexer.len());
    for i in 0..indexer.len() {
        let (x, y) = indexer.centered(i);
        let dx = x - clm.r0[0];
        let dy = y - clm.r0[1];
        let env = (-clm.tau_x * dx * dx - clm.tau_y * dy * dy).exp();
        psi.push(Complex64::new(0.0, kx * x + ky * y).exp() * env);
    }
    let _ = linalg::normalize(&mut psi)?;
    Ok((psi, caveats))
}

/// 1D analogue of [`sample_lattice_clm_2d`].
pub fn sample_lattice_clm_1d(
    clm: &LatticeClm1d,
    indexer: &SiteIndexer,
) -> Result<(Vec<C64>, Vec<Caveat>)> {
    if !clm.exists {
        return Err(CoreError::InvalidSpec(
            "ansatz does not exist at this k (non-positive decay constant)".into(),
        ));
    }
    let (hx, _) = indexer.half_extent();
    let mut caveats = Vec::new();
    clip_caveats(&clm.caveats, clm.x0, hx, gaussian_width(clm.tau), &mut caveats);
    let kq = clm.k + clm.q;
    let mut psi = Vec::with_capacity(indexer.len());
    for i in 0..indexer.len() {
        let (x, _) = indexer.centered(i);
        let dx = x - clm.x0;
        psi.push(Complex64::new(0.0, kq * x).exp() * (-clm.tau * dx * dx).exp());
    }
    let _ = linalg::normalize(&mut psi)?;
    Ok((psi, caveats))
}

/// Best-fit 2D descriptor for a numerical eigenstate: center from the
/// |psi|^2 position expectation, decay constants from second central
/// moments, carrier momentum back-solved from the drift relations, energy
/// from the eigenvalue.
pub fn fit_lattice_clm_2d(
    tx: f64,
    ty: f64,
    b: f64,
    e: C64,
    psi: &[C64],
    indexer: &SiteIndexer,
) -> Result<LatticeClm2d> {
    if psi.len() != indexer.len() {
        return Err(CoreError::DimensionMismatch {
            expected: indexer.len(),
            got: psi.len(),
        });
    }
    if b == 0.0 {
        return Err(CoreError::NoField);
    }
    let mut w_sum = 0.0;
    let mut mx = 0.0;
    let mut my = 0.0;
    for (i, z) in psi.iter().enumerate() {
        let (x, y) = indexer.centered(i);
        let w = z.norm_sqr();
        w_sum += w;
        mx += w * x;
        my += w * y;
    }
    if w_sum == 0.0 {
        return Err(CoreError::ZeroVector);
    }
    mx /= w_sum;
    my /= w_sum;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (i, z) in psi.iter().enumerate() {
        let (x, y) = indexer.centered(i);
        let w = z.norm_sqr() / w_sum;
        vx += w * (x - mx) * (x - mx);
        vy += w * (y - my) * (y - my);
    }
    // |psi|^2 ~ exp(-2 tau u^2) has variance 1/(4 tau)
    let tau_x = 1.0 / (4.0 * vx);
    let tau_y = 1.0 / (4.0 * vy);
    let mu = -b / (2.0 * tau_x);
    let nu = b / (2.0 * tau_y);
    let kx = (mu / (2.0 * tx)).clamp(-1.0, 1.0).asin();
    let ky = (nu / (2.0 * ty)).clamp(-1.0, 1.0).acos();
    let mut fitted = lattice_clm_2d(tx, ty, b, [kx, ky], [0.0, 0.0], e)?;
    // measured geometry overrides the envelope-theory values
    fitted.tau_x = tau_x;
    fitted.tau_y = tau_y;
    fitted.r0 = [mx, my];
    fitted.exists = true;
    Ok(fitted)
}
