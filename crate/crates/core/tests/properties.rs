//! Property tests for the invariants that hold across the whole parameter
//! space rather than at hand-picked points.

use num_complex::Complex64;
use proptest::prelude::*;

use clm_core::lattice::{MassProfile, ModelSpec, SiteIndexer};
use clm_core::output::fmt_f64;
use clm_core::spectral::participation_ratio;

fn complex_vec(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n..=n)
        .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
}

proptest! {
    #[test]
    fn pr_is_scale_invariant_and_bounded(
        v in complex_vec(48),
        scale_re in -5.0f64..5.0,
        scale_im in -5.0f64..5.0,
    ) {
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        prop_assume!(norm > 1e-12);
        let c = Complex64::new(scale_re, scale_im);
        prop_assume!(c.norm() > 1e-6);
        let p0 = participation_ratio(&v).unwrap();
        let scaled: Vec<Complex64> = v.iter().map(|z| z * c).collect();
        let p1 = participation_ratio(&scaled).unwrap();
        prop_assert!((p0 - p1).abs() <= 1e-9 * p0);
        prop_assert!((1.0 - 1e-12..=48.0 + 1e-9).contains(&p0));
    }

    #[test]
    fn indexer_roundtrips_every_site(lx in 2usize..20, ly in 2usize..20) {
        let idx = SiteIndexer::Grid { lx, ly };
        for i in 0..idx.len() {
            let (ix, iy) = idx.site(i);
            prop_assert_eq!(idx.index2(ix, iy), i);
            let (x, y) = idx.centered(i);
            // centered coordinates are symmetric about zero
            prop_assert!((x + (lx as f64 + 1.0) / 2.0 - ix as f64).abs() < 1e-12);
            prop_assert!((y + (ly as f64 + 1.0) / 2.0 - iy as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn float_format_roundtrips(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        let back: f64 = fmt_f64(x).parse().unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn matrix_free_apply_matches_dense(
        n in 2usize..24,
        t in 0.2f64..2.0,
        b in -0.5f64..0.5,
        seed in any::<u64>(),
    ) {
        let spec = ModelSpec::GainLoss1d {
            n,
            t,
            mass: MassProfile::random_imaginary(b, seed),
        };
        let h = spec.build().unwrap();
        let mut r = clm_core::rng::seeded(seed ^ 0x9e37);
        let v = clm_core::rng::random_vector(&mut r, n);
        let dense = h.apply(&v).unwrap();
        let mut free = vec![Complex64::new(0.0, 0.0); n];
        spec.apply_into(&v, &mut free).unwrap();
        for (a, b) in dense.iter().zip(&free) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }
}
