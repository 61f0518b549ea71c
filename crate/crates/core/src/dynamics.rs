//! Wavepacket dynamics: closed-form continuum evolution and an independent
//! RK4 integrator.
//!
//! For the continuum operator with both signs positive, the initial-value
//! problem `i d psi/dt = H psi` has the closed-form solution
//! `psi(x, y, t) = f(x - t, y - i t) exp(B (x + i y) t)` for analytic
//! initial data `f`; gaussian packets stay gaussian with constant widths,
//! drift at `v0 = 1 - B/(2 alpha)`, and gain or lose amplitude
//! exponentially. The RK4 integrator runs on any operator (finite
//! difference or lattice) and never renormalizes; moments are computed on
//! the normalized field so amplification cannot poison them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::grid::Grid2d;
use crate::lattice::{HamiltonianMatrix, ModelSpec, SiteIndexer};
use crate::linalg::{self, C64};

/// Initial gaussian wavepacket
/// `f(x, y) = exp(alpha (x-x0)^2 + i q_x x) exp(beta (y-y0)^2 + i q_y y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavepacketSpec {
    pub alpha: f64,
    pub beta: f64,
    pub x0: f64,
    pub y0: f64,
    pub q_x: f64,
    pub q_y: f64,
}

impl WavepacketSpec {
    pub fn new(alpha: f64, beta: f64, x0: f64, y0: f64, q_x: f64, q_y: f64) -> Result<Self> {
        if alpha >= 0.0 || beta >= 0.0 {
            return Err(CoreError::InvalidSpec(format!(
                "gaussian needs alpha, beta < 0, got ({alpha}, {beta})"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            x0,
            y0,
            q_x,
            q_y,
        })
    }

    /// f at complex arguments (the exponent is a polynomial, so analytic
    /// continuation is literal evaluation).
    pub fn eval(&self, x: C64, y: C64) -> C64 {
        let i = Complex64::new(0.0, 1.0);
        let ex = self.alpha * (x - self.x0) * (x - self.x0) + i * self.q_x * x;
        let ey = self.beta * (y - self.y0) * (y - self.y0) + i * self.q_y * y;
        (ex + ey).exp()
    }

    /// Amplitude-gaussian sigma along x: |f| ~ exp(-x^2 / (2 sigma^2)).
    pub fn sigma_x(&self) -> f64 {
        1.0 / (-2.0 * self.alpha).sqrt()
    }

    pub fn sigma_y(&self) -> f64 {
        1.0 / (-2.0 * self.beta).sqrt()
    }
}

/// Evaluates the closed-form solution for arbitrary analytic initial data
/// `f0` on the nodes of `grid` at time `t`.
pub fn closed_form_evolution<F>(f0: F, b: f64, t: f64, grid: &Grid2d) -> Vec<C64>
where
    F: Fn(C64, C64) -> C64,
{
    let i = Complex64::new(0.0, 1.0);
    let mut out = Vec::with_capacity(grid.len());
    for iy in 0..grid.ny {
        let y = grid.y(iy);
        for ix in 0..grid.nx {
            let x = grid.x(ix);
            let fval = f0(C64::new(x - t, 0.0), C64::new(y, -t));
            out.push(fval * (b * (x + i * y) * t).exp());
        }
    }
    out
}

/// Closed-form gaussian evolution with a coverage check: the drifting
/// packet must stay at least three sigma inside the grid up to time `t`.
pub fn closed_form_gaussian(
    spec: &WavepacketSpec,
    b: f64,
    t: f64,
    grid: &Grid2d,
) -> Result<Vec<C64>> {
    let m = gaussian_moments_predicted(spec, b, t);
    let sx = spec.sigma_x();
    let sy = spec.sigma_y();
    let x_lo = spec.x0.min(m.center_x) - 3.0 * sx;
    let x_hi = spec.x0.max(m.center_x) + 3.0 * sx;
    if !grid.covers(x_lo, x_hi, spec.y0 - 3.0 * sy, spec.y0 + 3.0 * sy) {
        return Err(CoreError::GridCoverage(format!(
            "packet spans x [{x_lo:.1}, {x_hi:.1}] by t = {t}; grid is [{}, {}]",
            grid.x0,
            grid.x_max()
        )));
    }
    Ok(closed_form_evolution(|x, y| spec.eval(x, y), b, t, grid))
}

/// Same solution through the conjugate-coordinate form
/// `g(z, z* - 2t) exp(B z t)`, `z = x + i y`; pointwise equal to
/// [`closed_form_evolution`] for analytic data.
pub fn closed_form_evolution_conjugate<F>(f0: F, b: f64, t: f64, grid: &Grid2d) -> Vec<C64>
where
    F: Fn(C64, C64) -> C64,
{
    let i = Complex64::new(0.0, 1.0);
    let half = Complex64::new(0.5, 0.0);
    let mut out = Vec::with_capacity(grid.len());
    for iy in 0..grid.ny {
        let y = grid.y(iy);
        for ix in 0..grid.nx {
            let x = grid.x(ix);
            let z = C64::new(x, y);
            let zbar_shift = C64::new(x, -y) - 2.0 * t;
            // g(z, w) = f((z + w)/2, (z - w)/(2i))
            let fx = (z + zbar_shift) * half;
            let fy = (z - zbar_shift) * half * (-i);
            out.push(f0(fx, fy) * (b * z * t).exp());
        }
    }
    out
}

/// Predicted gaussian observables at time `t`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PredictedMoments {
    pub center_x: f64,
    pub center_y: f64,
    /// Standard deviation of |psi|^2 along x: 1/(2 sqrt(-alpha)), constant
    /// in time.
    pub width_x: f64,
    pub width_y: f64,
    /// ln ||psi(t)|| - ln ||psi(0)|| from expanding the closed form:
    /// (B - beta - B^2/4alpha) t^2 + (x0 B + q_y) t.
    pub log_amp: f64,
    /// The printed-formula variant, which carries an extra
    /// (2 alpha x0 + q_y) t; kept for comparison because the two disagree.
    pub log_amp_printed: f64,
}

pub fn gaussian_moments_predicted(spec: &WavepacketSpec, b: f64, t: f64) -> PredictedMoments {
    let v0 = 1.0 - b / (2.0 * spec.alpha);
    let quad = b - spec.beta - b * b / (4.0 * spec.alpha);
    let lin = spec.x0 * b + spec.q_y;
    let log_amp = quad * t * t + lin * t;
    PredictedMoments {
        center_x: spec.x0 + v0 * t,
        center_y: spec.y0,
        width_x: 1.0 / (2.0 * (-spec.alpha).sqrt()),
        width_y: 1.0 / (2.0 * (-spec.beta).sqrt()),
        log_amp,
        log_amp_printed: log_amp + (2.0 * spec.alpha * spec.x0 + spec.q_y) * t,
    }
}

/// Linear operator the integrator can drive.
pub trait LinearOp: Sync {
    fn dim(&self) -> usize;
    fn apply_into(&self, v: &[C64], out: &mut [C64]);
    /// Gershgorin bound on the spectral radius (max over rows of
    /// |diag| + sum |offdiag|).
    fn gershgorin_bound(&self) -> f64;
}

impl LinearOp for HamiltonianMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply_into(&self, v: &[C64], out: &mut [C64]) {
        self.matrix().matvec_into(v, out);
    }

    fn gershgorin_bound(&self) -> f64 {
        (0..self.n())
            .map(|i| {
                self.matrix()
                    .row(i)
                    .iter()
                    .map(|z| z.norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Matrix-free lattice operator with a precomputed diagonal, for chains too
/// large to store densely.
pub struct LatticeOp {
    spec: ModelSpec,
}

impl LatticeOp {
    pub fn new(spec: ModelSpec) -> Self {
        Self { spec }
    }
}

impl LinearOp for LatticeOp {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn apply_into(&self, v: &[C64], out: &mut [C64]) {
        self.spec
            .apply_into(v, out)
            .expect("dimension checked by integrate_rk4");
    }

    fn gershgorin_bound(&self) -> f64 {
        match self.spec {
            ModelSpec::Clm2d { lx, ly, tx, ty, b } => {
                let half_x = (lx as f64 - 1.0) / 2.0;
                let half_y = (ly as f64 - 1.0) / 2.0;
                b.abs() * (half_x * half_x + half_y * half_y).sqrt()
                    + 2.0 * tx.abs()
                    + 2.0 * ty.abs()
            }
            ModelSpec::Nonreciprocal1d { n, t, mass } | ModelSpec::GainLoss1d { n, t, mass } => {
                mass.b.abs() * n as f64 / 2.0 + 2.0 * t.abs()
            }
        }
    }
}

/// First-derivative central stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StencilOrder {
    Second,
    Fourth,
    Sixth,
}

impl StencilOrder {
    /// Coefficients of the +1, +2, ... offsets (antisymmetric stencil),
    /// already divided by h = 1; scale by 1/h at use.
    fn coeffs(self) -> &'static [f64] {
        match self {
            StencilOrder::Second => &[0.5],
            StencilOrder::Fourth => &[8.0 / 12.0, -1.0 / 12.0],
            StencilOrder::Sixth => &[45.0 / 60.0, -9.0 / 60.0, 1.0 / 60.0],
        }
    }
}

/// Finite-difference discretization of the continuum operator
/// `H = -i d/dx - B y + d/dy + i B x` (both signs positive) on a uniform
/// grid, with the field treated as zero outside the boundary.
pub struct ContinuumFdOp {
    grid: Grid2d,
    order: StencilOrder,
    pot: Vec<C64>,
}

impl ContinuumFdOp {
    pub fn new(grid: Grid2d, b: f64, order: StencilOrder) -> Self {
        let mut pot = Vec::with_capacity(grid.len());
        for iy in 0..grid.ny {
            let y = grid.y(iy);
            for ix in 0..grid.nx {
                let x = grid.x(ix);
                pot.push(Complex64::new(-b * y, b * x));
            }
        }
        Self { grid, order, pot }
    }

    pub fn grid(&self) -> &Grid2d {
        &self.grid
    }
}

impl LinearOp for ContinuumFdOp {
    fn dim(&self) -> usize {
        self.grid.len()
    }

    fn apply_into(&self, v: &[C64], out: &mut [C64]) {
        let nx = self.grid.nx;
        let ny = self.grid.ny;
        let coeffs = self.order.coeffs();
        let inv_h = 1.0 / self.grid.h;
        let mi = Complex64::new(0.0, -1.0);
        for iy in 0..ny {
            for ix in 0..nx {
                let idx = iy * nx + ix;
                let mut ddx = C64::new(0.0, 0.0);
                let mut ddy = C64::new(0.0, 0.0);
                for (o, &c) in coeffs.iter().enumerate() {
                    let off = o + 1;
                    let plus_x = if ix + off < nx {
                        v[idx + off]
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    let minus_x = if ix >= off {
                        v[idx - off]
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    ddx += c * (plus_x - minus_x);
                    let plus_y = if iy + off < ny {
                        v[idx + off * nx]
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    let minus_y = if iy >= off {
                        v[idx - off * nx]
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    ddy += c * (plus_y - minus_y);
                }
                ddx *= inv_h;
                ddy *= inv_h;
                out[idx] = mi * ddx + ddy + self.pot[idx] * v[idx];
            }
        }
    }

    fn gershgorin_bound(&self) -> f64 {
        let stencil_sum: f64 = self.order.coeffs().iter().map(|c| c.abs()).sum::<f64>()
            * 2.0
            / self.grid.h;
        let pot_max = self
            .pot
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        2.0 * stencil_sum + pot_max
    }
}

/// Coordinates attached to the state vector, for moment tracking.
pub struct Geometry {
    xs: Vec<f64>,
    ys: Option<Vec<f64>>,
}

impl Geometry {
    pub fn from_grid(grid: &Grid2d) -> Self {
        let (xs, ys) = grid.coords();
        Self { xs, ys: Some(ys) }
    }

    pub fn from_indexer(indexer: &SiteIndexer) -> Self {
        match indexer {
            SiteIndexer::Chain { .. } => Self {
                xs: (0..indexer.len()).map(|i| indexer.centered(i).0).collect(),
                ys: None,
            },
            SiteIndexer::Grid { .. } => {
                let coords: Vec<(f64, f64)> =
                    (0..indexer.len()).map(|i| indexer.centered(i)).collect();
                Self {
                    xs: coords.iter().map(|c| c.0).collect(),
                    ys: Some(coords.iter().map(|c| c.1).collect()),
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

/// |psi|^2-weighted center and standard deviation per axis, plus
/// `ln ||psi||`. 1D geometries report zero for the y entries.
pub fn track_moments(field: &[C64], geom: &Geometry) -> Result<Moments> {
    if field.len() != geom.len() {
        return Err(CoreError::DimensionMismatch {
            expected: geom.len(),
            got: field.len(),
        });
    }
    let mut w_sum = 0.0;
    let mut mx = 0.0;
    let mut my = 0.0;
    for (i, z) in field.iter().enumerate() {
        let w = z.norm_sqr();
        w_sum += w;
        mx += w * geom.xs[i];
        if let Some(ys) = &geom.ys {
            my += w * ys[i];
        }
    }
    if w_sum == 0.0 {
        return Err(CoreError::ZeroVector);
    }
    mx /= w_sum;
    my /= w_sum;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (i, z) in field.iter().enumerate() {
        let w = z.norm_sqr() / w_sum;
        vx += w * (geom.xs[i] - mx) * (geom.xs[i] - mx);
        if let Some(ys) = &geom.ys {
            vy += w * (ys[i] - my) * (ys[i] - my);
        }
    }
    Ok(Moments {
        center_x: mx,
        center_y: my,
        width_x: vx.sqrt(),
        width_y: vy.sqrt(),
        log_norm: w_sum.sqrt().ln(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub center_x: f64,
    pub center_y: f64,
    pub width_x: f64,
    pub width_y: f64,
    pub log_norm: f64,
}

/// Recorded time series of an evolution run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub center: Vec<(f64, f64)>,
    pub width: Vec<(f64, f64)>,
    pub log_norm: Vec<f64>,
    #[serde(skip)]
    pub snapshots: Option<Vec<Vec<C64>>>,
}

impl EvolutionResult {
    pub fn last_time(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

/// Classical RK4 on `i d psi/dt = H psi`, i.e. `d psi/dt = -i H psi`.
///
/// `dt` must satisfy the stability precondition
/// `dt <= 0.4 / gershgorin_bound`. Moments are recorded every
/// `record_every` steps (and at t = 0); the norm is tracked without
/// renormalization while moments use the normalized field. Non-finite
/// fields abort with the offending time.
pub fn integrate_rk4(
    op: &dyn LinearOp,
    psi0: &[C64],
    geom: &Geometry,
    dt: f64,
    t_final: f64,
    record_every: usize,
    keep_snapshots: bool,
) -> Result<EvolutionResult> {
    let n = op.dim();
    if psi0.len() != n || geom.len() != n {
        return Err(CoreError::DimensionMismatch {
            expected: n,
            got: psi0.len(),
        });
    }
    let bound = 0.4 / op.gershgorin_bound().max(f64::MIN_POSITIVE);
    if dt > bound {
        return Err(CoreError::StepSize { dt, bound });
    }
    let record_every = record_every.max(1);
    let steps = (t_final / dt).round() as usize;

    let mut psi = psi0.to_vec();
    let mut k1 = vec![C64::new(0.0, 0.0); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut stage = k1.clone();

    let mut result = EvolutionResult {
        times: Vec::new(),
        center: Vec::new(),
        width: Vec::new(),
        log_norm: Vec::new(),
        snapshots: keep_snapshots.then(Vec::new),
    };
    record(&mut result, 0.0, &psi, geom, keep_snapshots)?;

    let mi = Complex64::new(0.0, -1.0);
    for step in 1..=steps {
        // k1 = -i H psi
        op.apply_into(&psi, &mut k1);
        scale_by(&mut k1, mi);
        // k2 = -i H (psi + dt/2 k1)
        axpy_into(&mut stage, &psi, &k1, 0.5 * dt);
        op.apply_into(&stage, &mut k2);
        scale_by(&mut k2, mi);
        // k3 = -i H (psi + dt/2 k2)
        axpy_into(&mut stage, &psi, &k2, 0.5 * dt);
        op.apply_into(&stage, &mut k3);
        scale_by(&mut k3, mi);
        // k4 = -i H (psi + dt k3)
        axpy_into(&mut stage, &psi, &k3, dt);
        op.apply_into(&stage, &mut k4);
        scale_by(&mut k4, mi);

        let w = dt / 6.0;
        for i in 0..n {
            psi[i] += w * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
        if step.is_multiple_of(record_every) || step == steps {
            let t = step as f64 * dt;
            record(&mut result, t, &psi, geom, keep_snapshots)?;
        }
    }
    Ok(result)
}

fn record(
    result: &mut EvolutionResult,
    t: f64,
    psi: &[C64],
    geom: &Geometry,
    keep: bool,
) -> Result<()> {
    let norm = linalg::norm2(psi);
    if !norm.is_finite() || norm == 0.0 {
        return Err(CoreError::Divergence { t });
    }
    let m = track_moments(psi, geom)?;
    result.times.push(t);
    result.center.push((m.center_x, m.center_y));
    result.width.push((m.width_x, m.width_y));
    result.log_norm.push(m.log_norm);
    if keep {
        result
            .snapshots
            .as_mut()
            .expect("snapshots enabled")
            .push(psi.to_vec());
    }
    Ok(())
}

#[inline]
fn scale_by(v: &mut [C64], c: C64) {
    for z in v.iter_mut() {
        *z *= c;
    }
}

#[inline]
fn axpy_into(out: &mut [C64], base: &[C64], add: &[C64], s: f64) {
    for ((o, b), a) in out.iter_mut().zip(base).zip(add) {
        *o = b + s * a;
    }
}

/// Relative FD residual of the time-dependent equation on the closed-form
/// solution: `||i d_t psi - H_fd psi|| / ||psi||` with `d_t` a centered
/// difference of half-width `dt_fd` and `H_fd` the second-order stencil.
/// O(h^2) + O(dt_fd^2).
pub fn evolution_residual(
    spec: &WavepacketSpec,
    b: f64,
    t: f64,
    grid: &Grid2d,
    dt_fd: f64,
) -> Result<f64> {
    let op = ContinuumFdOp::new(*grid, b, StencilOrder::Second);
    let psi = closed_form_gaussian(spec, b, t, grid)?;
    let plus = closed_form_gaussian(spec, b, t + dt_fd, grid)?;
    let minus = closed_form_gaussian(spec, b, t - dt_fd, grid)?;
    let mut hpsi = vec![C64::new(0.0, 0.0); psi.len()];
    op.apply_into(&psi, &mut hpsi);
    let i = Complex64::new(0.0, 1.0);
    let inv2 = 1.0 / (2.0 * dt_fd);
    // interior nodes only; the stencil sees zeros beyond the boundary
    let mut num = 0.0;
    let mut den = 0.0;
    for iy in 1..grid.ny - 1 {
        for ix in 1..grid.nx - 1 {
            let idx = grid.index(ix, iy);
            let dt_psi = (plus[idx] - minus[idx]) * inv2;
            num += (i * dt_psi - hpsi[idx]).norm_sqr();
            den += psi[idx].norm_sqr();
        }
    }
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::MassProfile;
    use crate::spectral::{eig, DEFAULT_TOL};

    fn fig_a_spec() -> WavepacketSpec {
        WavepacketSpec::new(-0.005, -0.0037, -50.0, 0.0, 0.0, -0.025).unwrap()
    }

    const FIG_B: f64 = -0.005;

    #[test]
    fn spec_rejects_non_decaying_gaussian() {
        assert!(WavepacketSpec::new(0.1, -0.1, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(WavepacketSpec::new(-0.1, 0.0, 0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn plane_wave_translates_rigidly() {
        let grid = Grid2d::centered(0.0, 0.0, 20.0, 20.0, 1.0);
        let q = 0.3;
        let f = |x: C64, _y: C64| (Complex64::new(0.0, q) * x).exp();
        for t in [0.0, 3.0, 7.5] {
            let field = closed_form_evolution(f, 0.0, t, &grid);
            for z in &field {
                assert!((z.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn drift_velocity_is_one_minus_b_over_2alpha() {
        // alpha = B: v0 = 1/2
        let spec = fig_a_spec();
        let m = gaussian_moments_predicted(&spec, FIG_B, 10.0);
        assert!((m.center_x - (-50.0 + 5.0)).abs() < 1e-12);
        // measured from the evaluated field
        let grid = Grid2d::new(-120.0, -100.0, 200, 200, 1.0);
        let field = closed_form_gaussian(&spec, FIG_B, 10.0, &grid).unwrap();
        let geom = Geometry::from_grid(&grid);
        let mm = track_moments(&field, &geom).unwrap();
        assert!((mm.center_x - m.center_x).abs() < 0.05, "{}", mm.center_x);
        assert!((mm.width_x - m.width_x).abs() / m.width_x < 0.01);
    }

    #[test]
    fn free_packet_has_no_quadratic_growth() {
        let spec = WavepacketSpec::new(-0.01, -0.02, 0.0, 0.0, 0.1, 0.0).unwrap();
        let m = gaussian_moments_predicted(&spec, 0.0, 4.0);
        assert_eq!(m.center_x, 4.0); // v0 = 1
        // B = 0, beta absorbed: quadratic coefficient is -beta
        let m2 = gaussian_moments_predicted(
            &WavepacketSpec::new(-0.01, -1e-300, 0.0, 0.0, 0.0, 0.0).unwrap(),
            0.0,
            4.0,
        );
        assert!(m2.log_amp.abs() < 1e-290); // no t^2 term when beta -> 0
    }

    #[test]
    fn quadratic_coefficient_matches_hand_value() {
        let spec = WavepacketSpec::new(-0.0017, -0.0013, 50.0, 0.0, 0.0, -0.26).unwrap();
        let quad = FIG_B - spec.beta - FIG_B * FIG_B / (4.0 * spec.alpha);
        assert!((quad - (-2.4e-5)).abs() < 1e-6, "{quad}");
        let m1 = gaussian_moments_predicted(&spec, FIG_B, 1.0);
        let m2 = gaussian_moments_predicted(&spec, FIG_B, 2.0);
        // quadratic part extracted from two horizons
        let extracted = (m2.log_amp - 2.0 * m1.log_amp) / 2.0;
        assert!((extracted - quad).abs() < 1e-12);
    }

    #[test]
    fn conjugate_route_matches_pointwise() {
        let spec = fig_a_spec();
        let grid = Grid2d::new(-80.0, -30.0, 60, 60, 1.0);
        let f = |x: C64, y: C64| spec.eval(x, y);
        let a = closed_form_evolution(f, FIG_B, 6.0, &grid);
        let b = closed_form_evolution_conjugate(f, FIG_B, 6.0, &grid);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() <= 1e-12 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn moments_of_pure_gaussian() {
        // exp(alpha (x-3)^2), alpha = -0.01: center 3, width 1/sqrt(-4a) = 5
        let grid = Grid2d::centered(3.0, 0.0, 60.0, 60.0, 0.5);
        let spec = WavepacketSpec::new(-0.01, -0.01, 3.0, 0.0, 0.0, 0.0).unwrap();
        let field = closed_form_gaussian(&spec, 0.0, 0.0, &grid).unwrap();
        let geom = Geometry::from_grid(&grid);
        let m = track_moments(&field, &geom).unwrap();
        assert!((m.center_x - 3.0).abs() < 1e-6);
        assert!((m.width_x - 5.0).abs() < 1e-3);
        // scaling the field shifts log_norm by ln 2 and nothing else
        let doubled: Vec<C64> = field.iter().map(|z| z * 2.0).collect();
        let m2 = track_moments(&doubled, &geom).unwrap();
        assert!((m2.center_x - m.center_x).abs() < 1e-12);
        assert!((m2.width_x - m.width_x).abs() < 1e-12);
        assert!((m2.log_norm - m.log_norm - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn hermitian_evolution_conserves_norm() {
        let spec = ModelSpec::GainLoss1d {
            n: 40,
            t: 1.0,
            mass: MassProfile::linear_imaginary(0.0),
        };
        let op = LatticeOp::new(spec);
        let geom = Geometry::from_indexer(&SiteIndexer::Chain { n: 40 });
        let mut r = crate::rng::seeded(6);
        let mut psi0 = crate::rng::random_vector(&mut r, 40);
        let _ = linalg::normalize(&mut psi0).unwrap();
        let result =
            integrate_rk4(&op, &psi0, &geom, 0.01, 50.0, 500, false).unwrap();
        for ln in &result.log_norm {
            assert!(ln.abs() <= 1e-8, "norm drifted: {ln}");
        }
    }

    #[test]
    fn rk4_is_fourth_order_against_exact_reference() {
        // Hermitian chain, exact evolution from the eigendecomposition
        let h = crate::lattice::build_1d_gainloss(16, 1.0, MassProfile::linear_imaginary(0.0))
            .unwrap();
        let d = eig(h.matrix(), DEFAULT_TOL).unwrap();
        let mut r = crate::rng::seeded(9);
        let mut psi0 = crate::rng::random_vector(&mut r, 16);
        let _ = linalg::normalize(&mut psi0).unwrap();
        let t_final = 4.0;
        // exact: psi(t) = sum_k v_k e^{-i lam_k t} (v_k^H psi0) for the
        // orthonormal eigenbasis of a Hermitian matrix
        let mut exact = vec![C64::new(0.0, 0.0); 16];
        for k in 0..16 {
            let v = &d.vectors[k];
            let coeff = linalg::dot(v, &psi0)
                * (Complex64::new(0.0, -1.0) * d.values[k] * t_final).exp();
            for (e, vi) in exact.iter_mut().zip(v) {
                *e += coeff * vi;
            }
        }
        let geom = Geometry::from_indexer(&SiteIndexer::Chain { n: 16 });
        let mut errs = Vec::new();
        for dt in [0.08, 0.04, 0.02] {
            let res = integrate_rk4(&h, &psi0, &geom, dt, t_final, usize::MAX, true).unwrap();
            let last = res.snapshots.as_ref().unwrap().last().unwrap();
            let err: f64 = last
                .iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            errs.push(err);
        }
        let r1 = errs[0] / errs[1];
        let r2 = errs[1] / errs[2];
        assert!((10.0..=22.0).contains(&r1), "ratios {errs:?}");
        assert!((10.0..=22.0).contains(&r2), "ratios {errs:?}");
    }

    #[test]
    fn step_size_violation_is_rejected() {
        let spec = ModelSpec::GainLoss1d {
            n: 16,
            t: 1.0,
            mass: MassProfile::linear_imaginary(0.0),
        };
        let op = LatticeOp::new(spec);
        let geom = Geometry::from_indexer(&SiteIndexer::Chain { n: 16 });
        let psi0 = vec![C64::new(0.25, 0.0); 16];
        match integrate_rk4(&op, &psi0, &geom, 1.0, 5.0, 1, false) {
            Err(CoreError::StepSize { dt, bound }) => {
                assert_eq!(dt, 1.0);
                assert!(bound < 1.0);
            }
            other => panic!("expected step-size error, got {other:?}"),
        }
    }

    #[test]
    fn divergence_is_reported_with_time() {
        // gain/loss chain with strong gain: norm overflows in finite time
        let spec = ModelSpec::GainLoss1d {
            n: 10,
            t: 1.0,
            mass: MassProfile::linear_imaginary(200.0),
        };
        let op = LatticeOp::new(spec);
        let geom = Geometry::from_indexer(&SiteIndexer::Chain { n: 10 });
        let psi0 = vec![C64::new(0.3, 0.0); 10];
        let dt = 0.4 / op.gershgorin_bound() * 0.9;
        match integrate_rk4(&op, &psi0, &geom, dt, 10.0, 1, false) {
            Err(CoreError::Divergence { t }) => assert!(t > 0.0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn substitution_residual_is_second_order() {
        let spec = WavepacketSpec::new(-0.02, -0.015, 0.0, 0.0, 0.05, 0.1).unwrap();
        let b = -0.02;
        let g1 = Grid2d::centered(1.0, 0.0, 40.0, 40.0, 0.2);
        let g2 = Grid2d::centered(1.0, 0.0, 40.0, 40.0, 0.1);
        let r1 = evolution_residual(&spec, b, 1.0, &g1, 1e-3).unwrap();
        let r2 = evolution_residual(&spec, b, 1.0, &g2, 1e-3).unwrap();
        let ratio = r1 / r2;
        assert!((3.5..=4.5).contains(&ratio), "{r1} / {r2} = {ratio}");
    }
}
