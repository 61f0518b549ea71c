//! Continuum bound-state family and finite-difference residual checks.
//!
//! The continuum operator is first order with an imaginary momentum and a
//! symmetric-gauge vector potential:
//!
//! ```text
//! H = s_x (-i d/dx - B y) + i s_y (-i d/dy + B x)
//! ```
//!
//! Its normalizable eigenstates are gaussians at every complex energy,
//! `psi = C exp(-tau |r - r0|^2 + i q.r)` with `tau = -s_x s_y B / 2` and a
//! center locked linearly to the energy. All derivatives here are
//! discretized by second-order central differences; residual norms are
//! O(h^2), which the tests pin via ratio checks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::grid::{Grid1d, Grid2d};
use crate::linalg::C64;

use super::Sign;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuumParams {
    pub s_x: Sign,
    pub s_y: Sign,
    /// Field strength; the vector potential is (-B y, B x).
    pub b: f64,
}

impl ContinuumParams {
    pub fn new(s_x: Sign, s_y: Sign, b: f64) -> Self {
        Self { s_x, s_y, b }
    }

    /// Dispersion of the B = 0 operator: E0(q) = s_x q_x + i s_y q_y.
    pub fn dispersion(&self, q: [f64; 2]) -> C64 {
        Complex64::new(self.s_x.value() * q[0], self.s_y.value() * q[1])
    }
}

/// Gaussian bound-state descriptor for the continuum operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuumClm {
    pub params: ContinuumParams,
    pub e: C64,
    pub q: [f64; 2],
    pub r0: [f64; 2],
    pub tau: f64,
    pub normalizable: bool,
}

/// Builds the gaussian-mode descriptor at energy `e` and envelope momentum
/// `q`: `tau = -s_x s_y B/2`,
/// `r0 = (Im[E - E0(q)]/s_y, -Re[E - E0(q)]/s_x) / B`.
pub fn continuum_clm(params: ContinuumParams, e: C64, q: [f64; 2]) -> Result<ContinuumClm> {
    if params.b == 0.0 {
        return Err(CoreError::NoField);
    }
    let sx = params.s_x.value();
    let sy = params.s_y.value();
    let tau = -sx * sy * params.b / 2.0;
    let de = e - params.dispersion(q);
    let r0 = [de.im / (sy * params.b), -de.re / (sx * params.b)];
    Ok(ContinuumClm {
        params,
        e,
        q,
        r0,
        tau,
        normalizable: tau > 0.0,
    })
}

impl ContinuumClm {
    /// Unnormalized field value at (x, y).
    pub fn eval(&self, x: f64, y: f64) -> C64 {
        let dx = x - self.r0[0];
        let dy = y - self.r0[1];
        let gauss = (-self.tau * (dx * dx + dy * dy)).exp();
        let phase = Complex64::new(0.0, self.q[0] * x + self.q[1] * y).exp();
        gauss * phase
    }

    /// Half-extent the evaluation grid must cover around the center.
    pub fn coverage_half_width(&self) -> f64 {
        6.0 / self.tau.abs().sqrt()
    }

    /// Grid centered on the mode with the required margin.
    pub fn default_grid(&self, h: f64) -> Grid2d {
        let half = self.coverage_half_width();
        Grid2d::centered(self.r0[0], self.r0[1], half, half, h)
    }
}

/// Samples the mode on `grid`, normalized to unit L2 with the h^2 cell
/// measure. The grid must cover `r0 +- 6/sqrt(tau)` on both axes.
pub fn sample_continuum_clm(clm: &ContinuumClm, grid: &Grid2d) -> Result<Vec<C64>> {
    if !clm.normalizable {
        return Err(CoreError::InvalidSpec(
            "mode is not normalizable (tau <= 0); nothing to sample".into(),
        ));
    }
    let half = clm.coverage_half_width();
    if !grid.covers(
        clm.r0[0] - half,
        clm.r0[0] + half,
        clm.r0[1] - half,
        clm.r0[1] + half,
    ) {
        return Err(CoreError::GridCoverage(format!(
            "grid [{}, {}] x [{}, {}] misses r0 ({}, {}) +- {half}",
            grid.x0,
            grid.x_max(),
            grid.y0,
            grid.y_max(),
            clm.r0[0],
            clm.r0[1],
        )));
    }
    let mut field = Vec::with_capacity(grid.len());
    for iy in 0..grid.ny {
        let y = grid.y(iy);
        for ix in 0..grid.nx {
            field.push(clm.eval(grid.x(ix), y));
        }
    }
    let norm_sq: f64 = field.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.h * grid.h;
    let inv = 1.0 / norm_sq.sqrt();
    for z in &mut field {
        *z *= inv;
    }
    Ok(field)
}

/// Applies the central-difference discretization of the continuum operator
/// to `field` on `grid`, writing interior-node results into a
/// (nx-2) x (ny-2) layout alongside the matching field values.
fn fd_apply_2d(
    params: ContinuumParams,
    field: &[C64],
    grid: &Grid2d,
) -> (Vec<C64>, Vec<C64>) {
    let sx = params.s_x.value();
    let sy = params.s_y.value();
    let b = params.b;
    let inv2h = 1.0 / (2.0 * grid.h);
    let mut hpsi = Vec::with_capacity((grid.nx - 2) * (grid.ny - 2));
    let mut inner = Vec::with_capacity(hpsi.capacity());
    for iy in 1..grid.ny - 1 {
        let y = grid.y(iy);
        for ix in 1..grid.nx - 1 {
            let x = grid.x(ix);
            let c = field[grid.index(ix, iy)];
            let ddx = (field[grid.index(ix + 1, iy)] - field[grid.index(ix - 1, iy)]) * inv2h;
            let ddy = (field[grid.index(ix, iy + 1)] - field[grid.index(ix, iy - 1)]) * inv2h;
            let i = Complex64::new(0.0, 1.0);
            let term_x = (-i * ddx - b * y * c) * sx;
            let term_y = (-i * ddy + b * x * c) * (i * sy);
            hpsi.push(term_x + term_y);
            inner.push(c);
        }
    }
    (hpsi, inner)
}

/// Relative FD residual `||H_fd psi - E psi|| / ||psi||` of the gaussian
/// mode at (E, q) over the interior nodes of `grid`; O(h^2).
pub fn continuum_residual(
    params: ContinuumParams,
    e: C64,
    q: [f64; 2],
    grid: &Grid2d,
) -> Result<f64> {
    let clm = continuum_clm(params, e, q)?;
    let field = sample_continuum_clm(&clm, grid)?;
    let (hpsi, inner) = fd_apply_2d(params, &field, grid);
    let mut num = 0.0;
    let mut den = 0.0;
    for (hp, c) in hpsi.iter().zip(&inner) {
        num += (hp - e * c).norm_sqr();
        den += c.norm_sqr();
    }
    Ok((num / den).sqrt())
}

/// FD residual of the 1D operator `s_y d/dy - s_x B y^n` acting on its
/// decaying eigenmode `exp(c_n y^{n+1} + i q y)`, `c_n = s_x s_y B/(n+1)`,
/// with the signs fixed internally so the envelope decays; eigenvalue `i q`.
/// `n` must be odd (even powers admit no mode decaying on both sides).
pub fn generalized_mode_residual(n_pow: u32, b: f64, q: f64, grid: &Grid1d) -> Result<f64> {
    if n_pow.is_multiple_of(2) {
        return Err(CoreError::InvalidSpec(format!(
            "y^{n_pow}: even powers admit no two-sided decaying mode"
        )));
    }
    if b == 0.0 {
        return Err(CoreError::NoField);
    }
    // s_y = +1, s_x = -sign(B): operator d/dy + |B| y^n, mode
    // exp(-|B| y^{n+1}/(n+1) + i q y)
    let ab = b.abs();
    let np1 = (n_pow + 1) as i32;
    let needed = (30.0 * f64::from(n_pow + 1) / ab).powf(1.0 / f64::from(n_pow + 1));
    if !grid.covers(-needed, needed) {
        return Err(CoreError::GridCoverage(format!(
            "grid [{}, {}] misses +-{needed:.2}",
            grid.y0,
            grid.max()
        )));
    }
    let field: Vec<C64> = grid
        .nodes()
        .map(|y| {
            let env = -ab * y.powi(np1) / f64::from(np1 as u32);
            Complex64::new(env, q * y).exp()
        })
        .collect();
    let inv2h = 1.0 / (2.0 * grid.h);
    let e = Complex64::new(0.0, q);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 1..grid.n - 1 {
        let y = grid.node(i);
        let ddy = (field[i + 1] - field[i - 1]) * inv2h;
        let lhs = ddy + ab * y.powi(n_pow as i32) * field[i];
        num += (lhs - e * field[i]).norm_sqr();
        den += field[i].norm_sqr();
    }
    Ok((num / den).sqrt())
}

/// Certifies the map between bound modes at energy `e` and zero modes of
/// the first-order sublattice operator: builds the gaussian mode at `e`,
/// displaces it by `-(Im E, Re E)/B`, and returns the FD residual of the
/// zero-mode equation on the displaced state. `B > 0` checks the
/// second-sublattice equation (`s_x, s_y = +1, -1`), `B < 0` the first
/// (`+1, +1`); either way the gaussian is normalizable.
pub fn dirac_zero_mode_residual(e: C64, b: f64, q: [f64; 2], grid: &Grid2d) -> Result<f64> {
    if b == 0.0 {
        return Err(CoreError::NoField);
    }
    let s_y = if b > 0.0 { Sign::Minus } else { Sign::Plus };
    let params = ContinuumParams::new(Sign::Plus, s_y, b);
    let clm = continuum_clm(params, e, q)?;
    debug_assert!(clm.normalizable);
    // phi(r) = psi_E(r + d) solves the zero-mode equation when the energy
    // term cancels against the potential offset:
    // E + B d_y + i s_y B d_x = 0
    let d = [e.im / (s_y.value() * b), -e.re / b];
    // phi(r) = psi_E(r + d), so the grid needs to cover the displaced
    // center r0 - d with the usual margin
    let center = [clm.r0[0] - d[0], clm.r0[1] - d[1]];
    let half = clm.coverage_half_width();
    if !grid.covers(
        center[0] - half,
        center[0] + half,
        center[1] - half,
        center[1] + half,
    ) {
        return Err(CoreError::GridCoverage(format!(
            "grid misses displaced center ({}, {}) +- {half}",
            center[0], center[1]
        )));
    }
    let mut field = Vec::with_capacity(grid.len());
    for iy in 0..grid.ny {
        let y = grid.y(iy);
        for ix in 0..grid.nx {
            field.push(clm.eval(grid.x(ix) + d[0], y + d[1]));
        }
    }
    let (hpsi, inner) = fd_apply_2d(params, &field, grid);
    let mut num = 0.0;
    let mut den = 0.0;
    for (hp, c) in hpsi.iter().zip(&inner) {
        num += hp.norm_sqr();
        den += c.norm_sqr();
    }
    Ok((num / den).sqrt())
}

/// Grid centered where the displaced zero-mode sits, for
/// [`dirac_zero_mode_residual`].
pub fn dirac_default_grid(e: C64, b: f64, q: [f64; 2], h: f64) -> Result<Grid2d> {
    if b == 0.0 {
        return Err(CoreError::NoField);
    }
    let s_y = if b > 0.0 { Sign::Minus } else { Sign::Plus };
    let clm = continuum_clm(ContinuumParams::new(Sign::Plus, s_y, b), e, q)?;
    let d = [e.im / (s_y.value() * b), -e.re / b];
    let center = [clm.r0[0] - d[0], clm.r0[1] - d[1]];
    let half = clm.coverage_half_width();
    Ok(Grid2d::centered(center[0], center[1], half, half, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn descriptor_matches_center_formula() {
        let p = ContinuumParams::new(Sign::Plus, Sign::Minus, 1.0);
        let clm = continuum_clm(p, c(1.0, 0.0), [0.0, 0.0]).unwrap();
        assert_eq!(clm.tau, 0.5);
        assert!(clm.normalizable);
        assert!((clm.r0[0] - 0.0).abs() < 1e-15);
        assert!((clm.r0[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn wrong_sign_combination_is_not_normalizable() {
        let p = ContinuumParams::new(Sign::Plus, Sign::Plus, 1.0);
        let clm = continuum_clm(p, c(0.0, 1.0), [0.0, 0.0]).unwrap();
        assert_eq!(clm.tau, -0.5);
        assert!(!clm.normalizable);
    }

    #[test]
    fn self_energy_centers_at_origin() {
        for (sx, sy) in [
            (Sign::Plus, Sign::Plus),
            (Sign::Plus, Sign::Minus),
            (Sign::Minus, Sign::Plus),
            (Sign::Minus, Sign::Minus),
        ] {
            let p = ContinuumParams::new(sx, sy, 0.7);
            let q = [0.3, -0.4];
            let clm = continuum_clm(p, p.dispersion(q), q).unwrap();
            assert!(clm.r0[0].abs() < 1e-15 && clm.r0[1].abs() < 1e-15);
        }
    }

    #[test]
    fn tau_sign_law_full_table() {
        // normalizable iff -s_x s_y B > 0, all 4 sign pairs x both B signs
        for sx in [Sign::Plus, Sign::Minus] {
            for sy in [Sign::Plus, Sign::Minus] {
                for b in [0.8, -0.8] {
                    let clm =
                        continuum_clm(ContinuumParams::new(sx, sy, b), c(0.3, 0.1), [0.0, 0.0])
                            .unwrap();
                    let expect = -sx.value() * sy.value() * b > 0.0;
                    assert_eq!(clm.normalizable, expect, "sx={sx:?} sy={sy:?} B={b}");
                }
            }
        }
    }

    #[test]
    fn b_zero_is_an_error() {
        assert!(matches!(
            continuum_clm(
                ContinuumParams::new(Sign::Plus, Sign::Minus, 0.0),
                c(1.0, 0.0),
                [0.0, 0.0]
            ),
            Err(CoreError::NoField)
        ));
    }

    #[test]
    fn center_is_affine_in_energy() {
        // finite-difference dr0/dE against the +-1/B coefficients
        let p = ContinuumParams::new(Sign::Plus, Sign::Minus, 0.5);
        let e0 = c(0.4, -0.2);
        let de = 1e-4;
        let base = continuum_clm(p, e0, [0.0, 0.0]).unwrap();
        let dre = continuum_clm(p, e0 + c(de, 0.0), [0.0, 0.0]).unwrap();
        let dim = continuum_clm(p, e0 + c(0.0, de), [0.0, 0.0]).unwrap();
        // dr0_y/dReE = -1/(s_x B), dr0_x/dImE = 1/(s_y B)
        let gy = (dre.r0[1] - base.r0[1]) / de;
        let gx = (dim.r0[0] - base.r0[0]) / de;
        assert!((gy + 1.0 / (p.s_x.value() * p.b)).abs() < 1e-9);
        assert!((gx - 1.0 / (p.s_y.value() * p.b)).abs() < 1e-9);
        // and the cross derivatives vanish
        assert!(((dre.r0[0] - base.r0[0]) / de).abs() < 1e-9);
        assert!(((dim.r0[1] - base.r0[1]) / de).abs() < 1e-9);
    }

    #[test]
    fn sampled_gaussian_ratio_and_phase() {
        let p = ContinuumParams::new(Sign::Plus, Sign::Minus, 1.0);
        let clm = continuum_clm(p, c(0.0, 0.0), [0.0, 0.0]).unwrap(); // tau = 0.5, r0 = 0
        assert_eq!(clm.tau, 0.5);
        let v_center = clm.eval(0.0, 0.0);
        let v_off = clm.eval(2.0, 0.0);
        assert!((v_center.norm() / v_off.norm() - 2.0f64.exp()).abs() < 1e-12);

        // with q, modulus is unchanged and phase advances by q_x per unit x
        let clm_q = continuum_clm(p, p.dispersion([0.3, 0.0]), [0.3, 0.0]).unwrap();
        let a = clm_q.eval(1.0, 0.5);
        let b = clm_q.eval(2.0, 0.5);
        assert!((a.norm() - clm.eval(1.0, 0.5).norm()).abs() < 1e-12);
        let dphase = (b / a).arg() - (clm.eval(2.0, 0.5) / clm.eval(1.0, 0.5)).arg();
        assert!((dphase - 0.3).abs() < 1e-12);
    }

    #[test]
    fn sample_is_unit_norm() {
        let p = ContinuumParams::new(Sign::Plus, Sign::Minus, 0.5);
        let clm = continuum_clm(p, c(0.2, 0.3), [0.1, 0.0]).unwrap();
        let grid = clm.default_grid(0.1);
        let field = sample_continuum_clm(&clm, &grid).unwrap();
        let norm_sq: f64 = field.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.h * grid.h;
        assert!((norm_sq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sample_rejects_small_grid() {
        let p = ContinuumParams::new(Sign::Plus, Sign::Minus, 0.5);
        let clm = continuum_clm(p, c(0.0, 0.0), [0.0, 0.0]).unwrap();
        let tiny = Grid2d::centered(0.0, 0.0, 1.0, 1.0, 0.1);
        assert!(matches!(
            sample_continuum_clm(&clm, &tiny),
            Err(CoreError::GridCoverage(_))
        ));
    }

    #[test]
    fn residual_is_small_and_second_order() {
        let p = ContinuumParams::new(Sign::Plus, Sign::Minus, 0.5);
        let clm = continuum_clm(p, c(0.0, 0.0), [0.0, 0.0]).unwrap();
        let r1 = continuum_residual(p, clm.e, clm.q, &clm.default_grid(0.1)).unwrap();
        let r2 = continuum_residual(p, clm.e, clm.q, &clm.default_grid(0.05)).unwrap();
        assert!(r1 <= 0.01, "residual {r1}");
        let ratio = r1 / r2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn residual_is_shift_invariant() {
        // moving E (and r0 with it) leaves the FD error unchanged
        let p = ContinuumParams::new(Sign::Plus, Sign::Minus, 0.5);
        let c0 = continuum_clm(p, c(0.0, 0.0), [0.0, 0.0]).unwrap();
        let c1 = continuum_clm(p, c(1.0, 0.0), [0.0, 0.0]).unwrap();
        let r0 = continuum_residual(p, c0.e, c0.q, &c0.default_grid(0.1)).unwrap();
        let r1 = continuum_residual(p, c1.e, c1.q, &c1.default_grid(0.1)).unwrap();
        assert!((r0 - r1).abs() <= 0.1 * r0, "{r0} vs {r1}");
    }

    #[test]
    fn generalized_modes_converge() {
        for n_pow in [1u32, 3, 5] {
            let g1 = Grid1d::centered(0.0, grid_half(n_pow, 0.5), 0.05);
            let g2 = Grid1d::centered(0.0, grid_half(n_pow, 0.5), 0.025);
            let r1 = generalized_mode_residual(n_pow, 0.5, 0.0, &g1).unwrap();
            let r2 = generalized_mode_residual(n_pow, 0.5, 0.0, &g2).unwrap();
            if n_pow <= 3 {
                assert!(r1 <= 5e-3, "n={n_pow}: {r1}");
            }
            let ratio = r1 / r2;
            assert!((3.5..=4.5).contains(&ratio), "n={n_pow} ratio {ratio}");
        }
    }

    fn grid_half(n_pow: u32, b: f64) -> f64 {
        (30.0 * f64::from(n_pow + 1) / b).powf(1.0 / f64::from(n_pow + 1)) + 0.5
    }

    #[test]
    fn generalized_rejects_even_power() {
        let g = Grid1d::centered(0.0, 20.0, 0.05);
        assert!(generalized_mode_residual(2, 0.5, 0.0, &g).is_err());
    }

    #[test]
    fn zero_mode_map_is_gauge_invariant() {
        let h = 0.1;
        let g0 = dirac_default_grid(c(0.0, 0.0), 0.5, [0.0, 0.0], h).unwrap();
        let r0 = dirac_zero_mode_residual(c(0.0, 0.0), 0.5, [0.0, 0.0], &g0).unwrap();
        assert!(r0 <= 0.01, "E=0 residual {r0}");

        let e = c(1.0, 0.5);
        let g1 = dirac_default_grid(e, 0.5, [0.0, 0.0], h).unwrap();
        let r1 = dirac_zero_mode_residual(e, 0.5, [0.0, 0.0], &g1).unwrap();
        assert!((r1 - r0).abs() <= 0.1 * r0, "displaced {r1} vs {r0}");

        // flipping B swaps the sublattice equation; residual unchanged
        let g2 = dirac_default_grid(e, -0.5, [0.0, 0.0], h).unwrap();
        let r2 = dirac_zero_mode_residual(e, -0.5, [0.0, 0.0], &g2).unwrap();
        assert!((r2 - r0).abs() <= 0.1 * r0, "B<0 {r2} vs {r0}");
    }

    #[test]
    fn zero_mode_residual_is_second_order() {
        let e = c(0.5, -0.3);
        let g1 = dirac_default_grid(e, 0.5, [0.0, 0.0], 0.1).unwrap();
        let g2 = dirac_default_grid(e, 0.5, [0.0, 0.0], 0.05).unwrap();
        let r1 = dirac_zero_mode_residual(e, 0.5, [0.0, 0.0], &g1).unwrap();
        let r2 = dirac_zero_mode_residual(e, 0.5, [0.0, 0.0], &g2).unwrap();
        let ratio = r1 / r2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }
}
