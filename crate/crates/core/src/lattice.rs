//! Finite lattice Hamiltonians as dense complex matrices.
//!
//! Three models are built here:
//!
//! * a 2D square lattice with reciprocal x-hoppings, nonreciprocal y-hoppings
//!   and onsite mass `B(y - ix)`;
//! * a 1D chain with nonreciprocal hoppings `+t`/`-t` and a real onsite mass;
//! * a 1D chain with reciprocal hopping `t` and an imaginary (gain/loss) mass.
//!
//! Site coordinates are centered at the lattice midpoint: `x = ix - (Lx+1)/2`
//! for `ix in 1..=Lx` (2D) and `x = j - (N+1)/2` for `j in 1..=N` (1D), so
//! spectra come out symmetric about the origin.

use std::io::Write;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::{CMatrix, C64};
use crate::rng;

/// Row index <-> site coordinate map.
///
/// 2D order is row-major in y then x: `idx(ix, iy) = (iy-1)*Lx + (ix-1)`
/// with 1-based lattice coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SiteIndexer {
    Chain { n: usize },
    Grid { lx: usize, ly: usize },
}

impl SiteIndexer {
    pub fn len(&self) -> usize {
        match *self {
            SiteIndexer::Chain { n } => n,
            SiteIndexer::Grid { lx, ly } => lx * ly,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// 2D only: row index for 1-based (ix, iy).
    pub fn index2(&self, ix: usize, iy: usize) -> usize {
        match *self {
            SiteIndexer::Grid { lx, ly } => {
                assert!((1..=lx).contains(&ix) && (1..=ly).contains(&iy));
                (iy - 1) * lx + (ix - 1)
            }
            SiteIndexer::Chain { .. } => panic!("index2 on a 1D indexer"),
        }
    }

    /// 1-based lattice coordinates of a row index.
    pub fn site(&self, idx: usize) -> (usize, usize) {
        match *self {
            SiteIndexer::Chain { n } => {
                assert!(idx < n);
                (idx + 1, 1)
            }
            SiteIndexer::Grid { lx, ly } => {
                assert!(idx < lx * ly);
                (idx % lx + 1, idx / lx + 1)
            }
        }
    }

    /// Centered physical coordinates of a row index.
    pub fn centered(&self, idx: usize) -> (f64, f64) {
        match *self {
            SiteIndexer::Chain { n } => {
                let j0 = (n as f64 + 1.0) / 2.0;
                ((idx + 1) as f64 - j0, 0.0)
            }
            SiteIndexer::Grid { lx, ly } => {
                let (ix, iy) = self.site(idx);
                (
                    ix as f64 - (lx as f64 + 1.0) / 2.0,
                    iy as f64 - (ly as f64 + 1.0) / 2.0,
                )
            }
        }
    }

    /// Half-extent of the centered coordinates, (Lx-1)/2 etc.
    pub fn half_extent(&self) -> (f64, f64) {
        match *self {
            SiteIndexer::Chain { n } => ((n as f64 - 1.0) / 2.0, 0.0),
            SiteIndexer::Grid { lx, ly } => ((lx as f64 - 1.0) / 2.0, (ly as f64 - 1.0) / 2.0),
        }
    }

    /// True when rows a and b are nearest neighbors.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        let (ax, ay) = self.site(a);
        let (bx, by) = self.site(b);
        let dx = ax.abs_diff(bx);
        let dy = ay.abs_diff(by);
        dx + dy == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassKind {
    Linear,
    RandomUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MassComponent {
    Real,
    Imaginary,
    Complex2d,
}

/// Onsite mass profile. Random masses are drawn i.i.d. from
/// `[-B*N/2, B*N/2)` (times `i` for the imaginary component).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassProfile {
    pub kind: MassKind,
    pub b: f64,
    pub seed: u64,
    pub component: MassComponent,
}

impl MassProfile {
    pub fn linear_real(b: f64) -> Self {
        Self {
            kind: MassKind::Linear,
            b,
            seed: 0,
            component: MassComponent::Real,
        }
    }

    pub fn linear_imaginary(b: f64) -> Self {
        Self {
            kind: MassKind::Linear,
            b,
            seed: 0,
            component: MassComponent::Imaginary,
        }
    }

    pub fn random_real(b: f64, seed: u64) -> Self {
        Self {
            kind: MassKind::RandomUniform,
            b,
            seed,
            component: MassComponent::Real,
        }
    }

    pub fn random_imaginary(b: f64, seed: u64) -> Self {
        Self {
            kind: MassKind::RandomUniform,
            b,
            seed,
            component: MassComponent::Imaginary,
        }
    }

    fn diagonal(&self, n: usize) -> Vec<f64> {
        match self.kind {
            MassKind::Linear => {
                let j0 = (n as f64 + 1.0) / 2.0;
                (1..=n).map(|j| self.b * (j as f64 - j0)).collect()
            }
            MassKind::RandomUniform => {
                let half = self.b.abs() * n as f64 / 2.0;
                if half == 0.0 {
                    return vec![0.0; n];
                }
                let mut r: ChaCha8Rng = rng::seeded(self.seed);
                (0..n).map(|_| rng::uniform(&mut r, -half, half)).collect()
            }
        }
    }
}

/// Which lattice a Hamiltonian was built from, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelSpec {
    Clm2d {
        lx: usize,
        ly: usize,
        tx: f64,
        ty: f64,
        b: f64,
    },
    Nonreciprocal1d {
        n: usize,
        t: f64,
        mass: MassProfile,
    },
    GainLoss1d {
        n: usize,
        t: f64,
        mass: MassProfile,
    },
}

impl ModelSpec {
    pub fn dim(&self) -> usize {
        match *self {
            ModelSpec::Clm2d { lx, ly, .. } => lx * ly,
            ModelSpec::Nonreciprocal1d { n, .. } | ModelSpec::GainLoss1d { n, .. } => n,
        }
    }

    pub fn indexer(&self) -> SiteIndexer {
        match *self {
            ModelSpec::Clm2d { lx, ly, .. } => SiteIndexer::Grid { lx, ly },
            ModelSpec::Nonreciprocal1d { n, .. } | ModelSpec::GainLoss1d { n, .. } => {
                SiteIndexer::Chain { n }
            }
        }
    }

    pub fn tag(&self) -> String {
        match *self {
            ModelSpec::Clm2d { lx, ly, tx, ty, b } => {
                format!("clm2d(Lx={lx},Ly={ly},tx={tx},ty={ty},B={b})")
            }
            ModelSpec::Nonreciprocal1d { n, t, mass } => match mass.kind {
                MassKind::Linear => format!("nonreciprocal1d(N={n},t={t},B={})", mass.b),
                MassKind::RandomUniform => format!(
                    "nonreciprocal1d(N={n},t={t},B={},seed={})",
                    mass.b, mass.seed
                ),
            },
            ModelSpec::GainLoss1d { n, t, mass } => match mass.kind {
                MassKind::Linear => format!("gainloss1d(N={n},t={t},B={})", mass.b),
                MassKind::RandomUniform => {
                    format!("gainloss1d(N={n},t={t},B={},seed={})", mass.b, mass.seed)
                }
            },
        }
    }

    pub fn build(&self) -> Result<HamiltonianMatrix> {
        match *self {
            ModelSpec::Clm2d { lx, ly, tx, ty, b } => build_2d_clm(lx, ly, tx, ty, b),
            ModelSpec::Nonreciprocal1d { n, t, mass } => build_1d_nonreciprocal(n, t, mass),
            ModelSpec::GainLoss1d { n, t, mass } => build_1d_gainloss(n, t, mass),
        }
    }

    /// Matrix-free application of the model's Hamiltonian, for lattices too
    /// large to hold densely.
    pub fn apply_into(&self, v: &[C64], out: &mut [C64]) -> Result<()> {
        let n = self.dim();
        if v.len() != n {
            return Err(CoreError::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
        assert_eq!(out.len(), n);
        match *self {
            ModelSpec::Clm2d { lx, ly, tx, ty, b } => {
                let idx = SiteIndexer::Grid { lx, ly };
                for i in 0..n {
                    let (x, y) = idx.centered(i);
                    let (ix, iy) = idx.site(i);
                    let mut acc = Complex64::new(y * b, -x * b) * v[i];
                    // row i couples to x-neighbors with +tx, to (iy-1) with -ty
                    // and to (iy+1) with +ty
                    if ix > 1 {
                        acc += tx * v[i - 1];
                    }
                    if ix < lx {
                        acc += tx * v[i + 1];
                    }
                    if iy > 1 {
                        acc -= ty * v[i - lx];
                    }
                    if iy < ly {
                        acc += ty * v[i + lx];
                    }
                    out[i] = acc;
                }
            }
            ModelSpec::Nonreciprocal1d { n: nn, t, mass } => {
                check_mass(mass, MassComponent::Real)?;
                let diag = mass.diagonal(nn);
                for i in 0..nn {
                    let mut acc = Complex64::new(diag[i], 0.0) * v[i];
                    if i > 0 {
                        acc += t * v[i - 1];
                    }
                    if i + 1 < nn {
                        acc -= t * v[i + 1];
                    }
                    out[i] = acc;
                }
            }
            ModelSpec::GainLoss1d { n: nn, t, mass } => {
                check_mass(mass, MassComponent::Imaginary)?;
                let diag = mass.diagonal(nn);
                for i in 0..nn {
                    let mut acc = Complex64::new(0.0, diag[i]) * v[i];
                    if i > 0 {
                        acc += t * v[i - 1];
                    }
                    if i + 1 < nn {
                        acc += t * v[i + 1];
                    }
                    out[i] = acc;
                }
            }
        }
        Ok(())
    }
}

/// Dense Hamiltonian with its indexer and construction parameters.
/// Immutable after build; safe to share across threads for read-only use.
#[derive(Debug, Clone)]
pub struct HamiltonianMatrix {
    matrix: CMatrix,
    indexer: SiteIndexer,
    model: ModelSpec,
}

impl HamiltonianMatrix {
    pub fn n(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn indexer(&self) -> &SiteIndexer {
        &self.indexer
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn model_tag(&self) -> String {
        self.model.tag()
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    /// H v.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.n() {
            return Err(CoreError::DimensionMismatch {
                expected: self.n(),
                got: v.len(),
            });
        }
        Ok(self.matrix.matvec(v))
    }

    /// A copy with `c I` added to the diagonal; shifts every eigenvalue by `c`.
    pub fn shifted(&self, c: C64) -> Self {
        let mut m = self.clone();
        m.matrix.add_scaled_identity(c);
        m
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.matrix.hermiticity_defect()
    }

    /// Text export: header `n model_tag key=value...`, then one
    /// `row col re im` line per structural nonzero (0-based indices).
    pub fn export_text<W: Write>(&self, mut w: W) -> Result<()> {
        let params = match self.model {
            ModelSpec::Clm2d { lx, ly, tx, ty, b } => {
                format!("Lx={lx} Ly={ly} tx={tx} ty={ty} B={b}")
            }
            ModelSpec::Nonreciprocal1d { n, t, mass } | ModelSpec::GainLoss1d { n, t, mass } => {
                match mass.kind {
                    MassKind::Linear => format!("N={n} t={t} B={}", mass.b),
                    MassKind::RandomUniform => {
                        format!("N={n} t={t} B={} seed={}", mass.b, mass.seed)
                    }
                }
            }
        };
        writeln!(w, "{} {} {}", self.n(), self.model_tag(), params)?;
        for row in 0..self.n() {
            for col in 0..self.n() {
                let z = self.matrix[(row, col)];
                if z.norm_sqr() != 0.0 {
                    writeln!(w, "{} {} {} {}", row, col, z.re, z.im)?;
                }
            }
        }
        Ok(())
    }
}

fn check_mass(mass: MassProfile, want: MassComponent) -> Result<()> {
    if mass.component != want {
        return Err(CoreError::InvalidSpec(format!(
            "mass component {:?} not supported by this model (expected {:?})",
            mass.component, want
        )));
    }
    Ok(())
}

/// 2D lattice with onsite mass `B(y - ix)`, reciprocal x-bonds `tx` and
/// nonreciprocal y-bonds: `<r-y|H|r> = +ty`, `<r|H|r-y> = -ty`. Open
/// boundaries.
pub fn build_2d_clm(lx: usize, ly: usize, tx: f64, ty: f64, b: f64) -> Result<HamiltonianMatrix> {
    if lx < 2 || ly < 2 {
        return Err(CoreError::InvalidSpec(format!(
            "2D lattice needs Lx, Ly >= 2, got {lx} x {ly}"
        )));
    }
    let indexer = SiteIndexer::Grid { lx, ly };
    let n = indexer.len();
    let mut m = CMatrix::zeros(n, n);
    for iy in 1..=ly {
        for ix in 1..=lx {
            let i = indexer.index2(ix, iy);
            let (x, y) = indexer.centered(i);
            m[(i, i)] = Complex64::new(b * y, -b * x);
            if ix > 1 {
                let j = indexer.index2(ix - 1, iy);
                m[(j, i)] = Complex64::new(tx, 0.0);
                m[(i, j)] = Complex64::new(tx, 0.0);
            }
            if iy > 1 {
                let j = indexer.index2(ix, iy - 1);
                m[(j, i)] = Complex64::new(ty, 0.0);
                m[(i, j)] = Complex64::new(-ty, 0.0);
            }
        }
    }
    Ok(HamiltonianMatrix {
        matrix: m,
        indexer,
        model: ModelSpec::Clm2d { lx, ly, tx, ty, b },
    })
}

/// 1D chain with real mass profile and nonreciprocal hoppings
/// `<j|H|j-1> = +t`, `<j-1|H|j> = -t`.
pub fn build_1d_nonreciprocal(n: usize, t: f64, mass: MassProfile) -> Result<HamiltonianMatrix> {
    if n < 2 {
        return Err(CoreError::InvalidSpec(format!(
            "1D chain needs N >= 2, got {n}"
        )));
    }
    check_mass(mass, MassComponent::Real)?;
    let diag = mass.diagonal(n);
    let mut m = CMatrix::zeros(n, n);
    for (i, d) in diag.iter().enumerate() {
        m[(i, i)] = Complex64::new(*d, 0.0);
    }
    for j in 1..n {
        m[(j, j - 1)] = Complex64::new(t, 0.0);
        m[(j - 1, j)] = Complex64::new(-t, 0.0);
    }
    Ok(HamiltonianMatrix {
        matrix: m,
        indexer: SiteIndexer::Chain { n },
        model: ModelSpec::Nonreciprocal1d { n, t, mass },
    })
}

/// 1D chain with imaginary (gain/loss) mass profile and reciprocal hopping.
pub fn build_1d_gainloss(n: usize, t: f64, mass: MassProfile) -> Result<HamiltonianMatrix> {
    if n < 2 {
        return Err(CoreError::InvalidSpec(format!(
            "1D chain needs N >= 2, got {n}"
        )));
    }
    check_mass(mass, MassComponent::Imaginary)?;
    let diag = mass.diagonal(n);
    let mut m = CMatrix::zeros(n, n);
    for (i, d) in diag.iter().enumerate() {
        m[(i, i)] = Complex64::new(0.0, *d);
    }
    for j in 1..n {
        m[(j, j - 1)] = Complex64::new(t, 0.0);
        m[(j - 1, j)] = Complex64::new(t, 0.0);
    }
    Ok(HamiltonianMatrix {
        matrix: m,
        indexer: SiteIndexer::Chain { n },
        model: ModelSpec::GainLoss1d { n, t, mass },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn indexer_is_bijective() {
        let idx = SiteIndexer::Grid { lx: 5, ly: 7 };
        for i in 0..idx.len() {
            let (ix, iy) = idx.site(i);
            assert_eq!(idx.index2(ix, iy), i);
        }
        // row-major in y then x
        assert_eq!(idx.index2(1, 1), 0);
        assert_eq!(idx.index2(2, 1), 1);
        assert_eq!(idx.index2(1, 2), 5);
    }

    #[test]
    fn centered_coordinates() {
        let idx = SiteIndexer::Grid { lx: 4, ly: 4 };
        let (x, y) = idx.centered(idx.index2(1, 1));
        assert_eq!((x, y), (-1.5, -1.5));
        let ch = SiteIndexer::Chain { n: 5 };
        assert_eq!(ch.centered(2).0, 0.0); // j = 3, j0 = 3
    }

    #[test]
    fn two_by_two_structure() {
        // B = 0: hopping signs read off the Hamiltonian's ladder terms
        let h = build_2d_clm(2, 2, 1.0, 1.0, 0.0).unwrap();
        let idx = *h.indexer();
        let i11 = idx.index2(1, 1);
        let i21 = idx.index2(2, 1);
        let i12 = idx.index2(1, 2);
        for i in 0..4 {
            assert_eq!(h.entry(i, i), c(0.0, 0.0));
        }
        assert_eq!(h.entry(i11, i21), c(1.0, 0.0));
        assert_eq!(h.entry(i21, i11), c(1.0, 0.0));
        // y-bond: <r-y|H|r> = +ty, <r|H|r-y> = -ty
        assert_eq!(h.entry(i11, i12), c(1.0, 0.0));
        assert_eq!(h.entry(i12, i11), c(-1.0, 0.0));
    }

    #[test]
    fn two_by_two_mass() {
        let h = build_2d_clm(2, 2, 1.0, 1.0, 0.3).unwrap();
        // site (1,1) has centered coords (-0.5, -0.5): B(y - ix) = -0.15 + 0.15i
        let i11 = h.indexer().index2(1, 1);
        let d = h.entry(i11, i11);
        assert!((d - c(-0.15, 0.15)).norm() < 1e-15);
    }

    #[test]
    fn full_size_2d_is_nonhermitian() {
        let h = build_2d_clm(60, 60, 1.0, 1.0, 0.3).unwrap();
        assert_eq!(h.n(), 3600);
        assert!(h.hermiticity_defect() > 0.0);
    }

    #[test]
    fn nonreciprocal_chain_matches_ladder_terms() {
        let h = build_1d_nonreciprocal(3, 1.0, MassProfile::linear_real(0.01)).unwrap();
        assert!((h.entry(0, 0) - c(-0.01, 0.0)).norm() < 1e-15);
        assert_eq!(h.entry(1, 1), c(0.0, 0.0));
        assert!((h.entry(2, 2) - c(0.01, 0.0)).norm() < 1e-15);
        // <2|H|1> = +t, <1|H|2> = -t (1-based sites)
        assert_eq!(h.entry(1, 0), c(1.0, 0.0));
        assert_eq!(h.entry(0, 1), c(-1.0, 0.0));
    }

    #[test]
    fn nonreciprocal_chain_full_scale_diagonal_span() {
        let h = build_1d_nonreciprocal(2000, 1.0, MassProfile::linear_real(0.01)).unwrap();
        assert_eq!(h.n(), 2000);
        let lo = h.entry(0, 0).re;
        let hi = h.entry(1999, 1999).re;
        assert!((lo + 9.995).abs() < 1e-12);
        assert!((hi - 9.995).abs() < 1e-12);
    }

    #[test]
    fn random_mass_is_bounded_and_deterministic() {
        let p = MassProfile::random_real(0.01, 7);
        let h1 = build_1d_nonreciprocal(4, 1.0, p).unwrap();
        let h2 = build_1d_nonreciprocal(4, 1.0, p).unwrap();
        for i in 0..4 {
            assert!(h1.entry(i, i).re.abs() <= 0.02);
            assert_eq!(h1.entry(i, i), h2.entry(i, i));
        }
    }

    #[test]
    fn gainloss_chain() {
        let h = build_1d_gainloss(3, 1.0, MassProfile::linear_imaginary(0.01)).unwrap();
        assert!((h.entry(0, 0) - c(0.0, -0.01)).norm() < 1e-15);
        assert!((h.entry(2, 2) - c(0.0, 0.01)).norm() < 1e-15);
        assert_eq!(h.entry(0, 1), c(1.0, 0.0));
        assert_eq!(h.entry(1, 0), c(1.0, 0.0));
    }

    #[test]
    fn gainloss_b_zero_is_hermitian() {
        let h = build_1d_gainloss(2, 1.0, MassProfile::linear_imaginary(0.0)).unwrap();
        assert_eq!(h.entry(0, 0), c(0.0, 0.0));
        assert_eq!(h.entry(0, 1), c(1.0, 0.0));
        assert_eq!(h.entry(1, 0), c(1.0, 0.0));
        assert_eq!(h.hermiticity_defect(), 0.0);
    }

    #[test]
    fn gainloss_random_mass_purely_imaginary() {
        let p = MassProfile::random_imaginary(0.01, 11);
        let h = build_1d_gainloss(2000, 1.0, p).unwrap();
        for i in 0..2000 {
            let d = h.entry(i, i);
            assert_eq!(d.re, 0.0);
            assert!(d.im.abs() <= 10.0);
        }
    }

    #[test]
    fn nonreciprocal_defect_formula() {
        // ||H - H^dagger||_F = 2|t| sqrt(2(N-1)) for the B-linear chain
        for (n, t) in [(5usize, 1.0), (17, 0.3)] {
            let h = build_1d_nonreciprocal(n, t, MassProfile::linear_real(0.02)).unwrap();
            let expect = 2.0 * t.abs() * (2.0 * (n as f64 - 1.0)).sqrt();
            assert!((h.hermiticity_defect() - expect).abs() < 1e-12);
            assert!(h.hermiticity_defect() > 0.0);
        }
    }

    #[test]
    fn rejects_wrong_mass_component() {
        let err = build_1d_nonreciprocal(4, 1.0, MassProfile::linear_imaginary(0.1));
        assert!(matches!(err, Err(CoreError::InvalidSpec(_))));
        let err = build_1d_gainloss(4, 1.0, MassProfile::linear_real(0.1));
        assert!(matches!(err, Err(CoreError::InvalidSpec(_))));
    }

    #[test]
    fn rejects_tiny_lattices() {
        assert!(build_2d_clm(1, 5, 1.0, 1.0, 0.1).is_err());
        assert!(build_1d_gainloss(1, 1.0, MassProfile::linear_imaginary(0.1)).is_err());
    }

    #[test]
    fn apply_matches_trivial_swap() {
        let h = build_1d_gainloss(2, 1.0, MassProfile::linear_imaginary(0.0)).unwrap();
        let v = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let hv = h.apply(&v).unwrap();
        assert_eq!(hv, vec![c(0.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn apply_is_linear_under_shift() {
        let h = build_1d_nonreciprocal(8, 1.0, MassProfile::linear_real(0.05)).unwrap();
        let shift = c(0.7, -0.2);
        let hs = h.shifted(shift);
        let mut r = rng::seeded(4);
        let v = rng::random_vector(&mut r, 8);
        let a = hs.apply(&v).unwrap();
        let b = h.apply(&v).unwrap();
        for i in 0..8 {
            assert!((a[i] - (b[i] + shift * v[i])).norm() < 1e-14);
        }
    }

    #[test]
    fn matrix_free_matches_dense() {
        let specs = [
            ModelSpec::Clm2d {
                lx: 5,
                ly: 4,
                tx: 1.0,
                ty: 0.7,
                b: 0.3,
            },
            ModelSpec::Nonreciprocal1d {
                n: 9,
                t: 1.0,
                mass: MassProfile::random_real(0.05, 3),
            },
            ModelSpec::GainLoss1d {
                n: 9,
                t: 0.8,
                mass: MassProfile::random_imaginary(0.05, 5),
            },
        ];
        let mut r = rng::seeded(9);
        for spec in specs {
            let h = spec.build().unwrap();
            let v = rng::random_vector(&mut r, spec.dim());
            let dense = h.apply(&v).unwrap();
            let mut free = vec![c(0.0, 0.0); spec.dim()];
            spec.apply_into(&v, &mut free).unwrap();
            let diff: f64 = dense
                .iter()
                .zip(&free)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(diff < 1e-13 * norm2(&dense).max(1.0));
        }
    }

    #[test]
    fn neighbor_only_sparsity() {
        let h = build_2d_clm(4, 5, 1.0, 1.0, 0.2).unwrap();
        let idx = *h.indexer();
        for i in 0..h.n() {
            for j in 0..h.n() {
                if i != j && !idx.adjacent(i, j) {
                    assert_eq!(h.entry(i, j), c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn deterministic_rebuild_is_bit_identical() {
        let spec = ModelSpec::GainLoss1d {
            n: 64,
            t: 1.0,
            mass: MassProfile::random_imaginary(0.02, 42),
        };
        let a = spec.build().unwrap();
        let b = spec.build().unwrap();
        assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn export_text_roundtrips_entries() {
        let h = build_1d_nonreciprocal(3, 1.0, MassProfile::linear_real(0.01)).unwrap();
        let mut buf = Vec::new();
        h.export_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("3 nonreciprocal1d"));
        let mut count = 0;
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            assert_eq!(f.len(), 4);
            let (r, cidx): (usize, usize) = (f[0].parse().unwrap(), f[1].parse().unwrap());
            let re: f64 = f[2].parse().unwrap();
            let im: f64 = f[3].parse().unwrap();
            assert!((h.entry(r, cidx) - c(re, im)).norm() < 1e-15);
            count += 1;
        }
        assert_eq!(count, 6); // 2 diagonal nonzeros + 4 hoppings
    }
}
