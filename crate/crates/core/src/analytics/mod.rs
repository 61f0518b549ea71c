//! Closed-form mode machinery: continuum solutions, lattice envelope
//! ansatze, energy bounds, and finite-difference residual checks.

pub mod continuum;
pub mod lattice;

pub use continuum::{
    continuum_clm, continuum_residual, dirac_zero_mode_residual, generalized_mode_residual,
    sample_continuum_clm, ContinuumClm, ContinuumParams,
};
pub use lattice::{
    fit_lattice_clm_2d, lattice_clm_1d, lattice_clm_2d, sample_lattice_clm_1d,
    sample_lattice_clm_2d, LatticeClm1d, LatticeClm2d, Model1dKind,
};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::lattice::{HamiltonianMatrix, ModelSpec};
use crate::linalg::{self, C64};

/// A sign factor, +1 or -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Soft warnings attached to ansatz descriptors and samples. The envelope
/// expansion is first order in derivatives, so large envelope momenta or
/// sub-3-site widths leave its validity regime; clipped tails distort
/// norms and moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Caveat {
    EnvelopeMomentumLarge,
    WidthBelowThreeSites,
    BoundaryClipped,
}

/// Box half-widths bounding where the mode family's eigenenergies can sit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBounds {
    pub re_max: f64,
    pub im_max: f64,
}

/// Spectral box for a model: requiring mode centers to lie inside the
/// lattice bounds the energies.
///
/// 2D: (B Ly/2 + 2 tx, B Lx/2 + 2 ty); 1D nonreciprocal: (B N/2, 2t);
/// 1D gain/loss: (2t, B N/2).
pub fn energy_bounds(model: &ModelSpec) -> EnergyBounds {
    match *model {
        ModelSpec::Clm2d { lx, ly, tx, ty, b } => EnergyBounds {
            re_max: b.abs() * ly as f64 / 2.0 + 2.0 * tx.abs(),
            im_max: b.abs() * lx as f64 / 2.0 + 2.0 * ty.abs(),
        },
        ModelSpec::Nonreciprocal1d { n, t, mass } => EnergyBounds {
            re_max: mass.b.abs() * n as f64 / 2.0,
            im_max: 2.0 * t.abs(),
        },
        ModelSpec::GainLoss1d { n, t, mass } => EnergyBounds {
            re_max: 2.0 * t.abs(),
            im_max: mass.b.abs() * n as f64 / 2.0,
        },
    }
}

/// Rayleigh quotient and residual of a trial state: returns
/// `(psi^H H psi / psi^H psi, ||H psi - E_est psi|| / ||psi||)`.
pub fn rayleigh_residual(h: &HamiltonianMatrix, psi: &[C64]) -> Result<(C64, f64)> {
    let nrm = linalg::norm2(psi);
    if nrm == 0.0 {
        return Err(CoreError::ZeroVector);
    }
    let hpsi = h.apply(psi)?;
    let e_est = linalg::dot(psi, &hpsi) / C64::new(nrm * nrm, 0.0);
    let res: f64 = hpsi
        .iter()
        .zip(psi)
        .map(|(hp, p)| (hp - e_est * p).norm_sqr())
        .sum::<f64>()
        .sqrt()
        / nrm;
    Ok((e_est, res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_2d_clm, MassProfile};

    #[test]
    fn bounds_match_model_formulas() {
        let m2 = ModelSpec::Clm2d {
            lx: 60,
            ly: 60,
            tx: 1.0,
            ty: 1.0,
            b: 0.3,
        };
        let b2 = energy_bounds(&m2);
        assert_eq!((b2.re_max, b2.im_max), (11.0, 11.0));

        let m1 = ModelSpec::Nonreciprocal1d {
            n: 2000,
            t: 1.0,
            mass: MassProfile::linear_real(0.01),
        };
        let b1 = energy_bounds(&m1);
        assert_eq!((b1.re_max, b1.im_max), (10.0, 2.0));

        let mg = ModelSpec::GainLoss1d {
            n: 2000,
            t: 1.0,
            mass: MassProfile::linear_imaginary(0.01),
        };
        let bg = energy_bounds(&mg);
        assert_eq!((bg.re_max, bg.im_max), (2.0, 10.0));

        // B = 0: pure dispersion range
        let m0 = ModelSpec::Clm2d {
            lx: 10,
            ly: 10,
            tx: 1.0,
            ty: 1.0,
            b: 0.0,
        };
        let b0 = energy_bounds(&m0);
        assert_eq!((b0.re_max, b0.im_max), (2.0, 2.0));
    }

    #[test]
    fn rayleigh_on_shifted_identity() {
        // t = 0, B = 0 gain/loss chain shifted by 1 is the identity
        let h = crate::lattice::build_1d_gainloss(2, 0.0, MassProfile::linear_imaginary(0.0))
            .unwrap()
            .shifted(C64::new(1.0, 0.0));
        let psi = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let (e, r) = rayleigh_residual(&h, &psi).unwrap();
        assert!((e - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(r < 1e-14);
    }

    #[test]
    fn rayleigh_rejects_zero_vector() {
        let h = build_2d_clm(2, 2, 1.0, 1.0, 0.1).unwrap();
        let zero = vec![C64::new(0.0, 0.0); 4];
        assert!(matches!(
            rayleigh_residual(&h, &zero),
            Err(CoreError::ZeroVector)
        ));
    }
}
