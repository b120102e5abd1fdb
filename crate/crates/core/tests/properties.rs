use ado3d::mc::sample_hg;
use ado3d::quadrature::gauss_legendre;
use ado3d::specfun::{bessel_j0, wigner_d_continued};
use ado3d::MediumParams;
use proptest::prelude::*;

proptest! {
    #[test]
    fn gauss_rule_integrates_polynomials_exactly(n in 1usize..20, k_frac in 0.0f64..1.0) {
        let quad = gauss_legendre(n).unwrap();
        // 2n points are exact up to degree 4n - 1
        let k = (k_frac * (4 * n) as f64) as i32;
        let got: f64 = quad.nodes.iter().zip(&quad.weights).map(|(x, w)| w * x.powi(k)).sum();
        let want = if k % 2 == 0 { 2.0 / (k + 1) as f64 } else { 0.0 };
        prop_assert!((got - want).abs() < 1e-13, "n={n} k={k} got={got}");
    }

    #[test]
    fn j0_matches_power_series(x in 0.0f64..8.0) {
        let y = -x * x / 4.0;
        let (mut term, mut sum) = (1.0f64, 1.0f64);
        for k in 1..60 {
            term *= y / (k * k) as f64;
            sum += term;
        }
        prop_assert!((bessel_j0(x) - sum).abs() < 1e-12);
    }

    #[test]
    fn j0_is_bounded(x in 0.0f64..1e5) {
        prop_assert!(bessel_j0(x).abs() <= 1.0 + 1e-15);
    }

    #[test]
    fn continued_wigner_rows_are_orthonormal(x in 0.0f64..4.0, l in 0usize..7) {
        let d = wigner_d_continued(l, x);
        let li = l as i32;
        for a in -li..=li {
            for b in -li..=li {
                let mut s = num_complex::Complex64::new(0.0, 0.0);
                let mut scale = 0.0;
                for mp in -li..=li {
                    let t = d.get(l, mp, a) * d.get(l, mp, b);
                    s += t;
                    scale += t.norm();
                }
                let want = if a == b { 1.0 } else { 0.0 };
                prop_assert!((s - want).norm() < 1e-12 * scale.max(1.0), "l={l} x={x} a={a} b={b} s={s}");
            }
        }
    }

    #[test]
    fn hg_sampling_inverts_the_cdf(g in 0.01f64..0.99, u in 0.0f64..1.0) {
        let mu = sample_hg(g, u);
        prop_assert!((-1.0..=1.0).contains(&mu));
        let cdf = (1.0 - g * g) / (2.0 * g) * (1.0 / (1.0 + g * g - 2.0 * g * mu).sqrt() - 1.0 / (1.0 + g));
        prop_assert!((cdf - u).abs() < 1e-9, "g={g} u={u} cdf={cdf}");
    }

    #[test]
    fn hg_sampling_is_monotone(g in 0.0f64..0.99, u in 0.0f64..0.999) {
        prop_assert!(sample_hg(g, u) <= sample_hg(g, u + 1e-3));
    }

    #[test]
    fn medium_rejects_unphysical_values(mu_a in -10.0f64..-1e-9, g in 1.0f64..5.0) {
        prop_assert!(MediumParams::new(mu_a, 10.0, 0.9, 9, 9).is_err());
        prop_assert!(MediumParams::new(0.01, 10.0, g, 9, 9).is_err());
    }
}
