use std::sync::OnceLock;

use fomult::bounds_cli::{self, Format, NetSpec, Settings, Suite};
use fomult::chebyshev;
use fomult::coeffs::CoeffBundle;
use fomult::fusion::{fuse, DeformationParameter, QDimTable};
use fomult::gnsblocks::{GnsElement, GnsTruncation, GnsVector};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;

fn delta() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["3", "4", "5", "7/2"])
}

fn bundle(text: &str) -> CoeffBundle {
    CoeffBundle::new(DeformationParameter::parse(text).unwrap())
}

fn jd(d_max: usize) -> impl Strategy<Value = (usize, usize)> {
    (0..=d_max).prop_flat_map(|d| (0..=d, Just(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fusion_dimensions_add_up(text in delta(), a in 0usize..25, b in 0usize..25) {
        let dims = QDimTable::new(&DeformationParameter::parse(text).unwrap());
        let sum = fuse(a, b).into_iter().fold(BigRational::zero(), |acc, c| acc + dims.get(c as i64));
        prop_assert_eq!(sum, dims.get(a as i64) * dims.get(b as i64));
    }

    #[test]
    fn nu_product_equals_closed_form(text in delta(), (j, d) in jd(30), s in 0usize..16) {
        prop_assume!(s <= j.min(d - j));
        let c = bundle(text);
        prop_assert_eq!(c.nu_product(j, d, s).unwrap(), c.nu_closed(j, d, s).unwrap());
    }

    #[test]
    fn chi_is_bounded_by_k(text in delta(), (j, d) in jd(25), k in 0usize..25) {
        let c = bundle(text);
        let q2 = c.q() * c.q();
        let chi = c.chi(j, d, k).unwrap();
        prop_assert!(chi.value <= c.k_of_q().unwrap());
        let ratio = c.chi_ratio_sq(j, d, k).unwrap().to_f64().unwrap();
        prop_assert!(ratio <= (1.0 - q2).powi(-2));
    }

    #[test]
    fn net_coefficients_lie_in_unit_interval(k in 0usize..=200, t in 2.01f64..2.99, bump in 0.001f64..0.5) {
        let b = chebyshev::net_coefficient(k, t, 3.0).unwrap();
        prop_assert!(b > 0.0 && b < 1.0 || (k == 0 && b == 1.0));
        let t2 = (t + bump).min(2.999);
        prop_assert!(chebyshev::net_coefficient(k, t2, 3.0).unwrap() >= b);
        prop_assert!(b <= (t / 3.0).powi(k as i32) * (1.0 + 1e-9));
    }

    #[test]
    fn tails_decrease(i in 0usize..300, t in 0.5f64..2.99, n in 3u32..8) {
        let n = n as f64;
        let here = bounds_cli::tail_sum(i, t, n, 1.0).unwrap();
        let next = bounds_cli::tail_sum(i + 1, t, n, 1.0).unwrap();
        prop_assert!(next <= here && here >= 0.0);
    }

    #[test]
    fn net_entries_are_the_coefficients(t in 2.01f64..2.99, i in 1usize..40) {
        let spec = NetSpec::free_orthogonal(3.0, t, i).unwrap();
        for (k, b) in bounds_cli::net_table(&spec).unwrap() {
            prop_assert_eq!(b, chebyshev::net_coefficient(k, t, 3.0).unwrap());
        }
    }

    #[test]
    fn bound_rows_are_ordered(n in 3u32..=10, d in 0usize..=200) {
        let c = CoeffBundle::kac(n).unwrap();
        let k = c.k_of_q().unwrap();
        let row = c.bounds(d).unwrap();
        let x = d as f64;
        prop_assert!(row.lower <= row.refined && row.refined <= row.upper);
        prop_assert!((row.upper - k * (x + 1.0) * (2.0 * x + 1.0)).abs() <= 1e-12 * row.upper);
        prop_assert!((row.refined - k * (2.0 * x * x - x + 1.0)).abs() <= 1e-12 * row.upper);
        prop_assert!((row.lower - (x + 1.0) / 3.0).abs() <= 1e-12 * row.upper);
    }

    #[test]
    fn sig15_round_trips(x in prop::num::f64::NORMAL) {
        let back: f64 = bounds_cli::sig15(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-14 * x.abs());
    }

    #[test]
    fn config_round_trips(
        n in 3u32..20,
        dmax in 0usize..500,
        seed in any::<u64>(),
        tol in 1e-14f64..1.0,
        csv in any::<bool>(),
        suites in prop::sample::subsequence(Suite::ALL.to_vec(), 0..=Suite::ALL.len()),
    ) {
        let format = if csv { Format::Csv } else { Format::Json };
        let names: Vec<_> = suites.iter().map(|s| s.name()).collect();
        let text = format!(
            "# generated\nn = {n}\ndmax={dmax}\n  seed = {seed}  # trailing\ntol = {tol:e}\nformat = {}\nsuites = {}\n",
            if csv { "csv" } else { "json" },
            names.join(","),
        );
        let parsed = Settings::parse_config(&text).unwrap();
        let expected = Settings {
            n: Some(n),
            dmax: Some(dmax),
            seed: Some(seed),
            tol: Some(tol),
            format: Some(format),
            suites: Some(suites),
            ..Settings::default()
        };
        prop_assert_eq!(parsed, expected);
    }
}

fn gns() -> &'static GnsTruncation {
    static T: OnceLock<GnsTruncation> = OnceLock::new();
    T.get_or_init(|| GnsTruncation::new(3, 3).unwrap())
}

fn degrees() -> impl Strategy<Value = Vec<usize>> {
    prop::sample::subsequence(vec![0usize, 1, 2, 3], 1..=4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn compression_adjoint_pairs(seed in any::<u64>(), xd in degrees(), vd in degrees(), wd in degrees()) {
        let t = gns();
        let x = GnsElement::random(t, 2, &xd, seed).unwrap();
        let xi = GnsVector::random(t, 2, &vd, seed ^ 1).unwrap();
        let eta = GnsVector::random(t, 2, &wd, seed ^ 2).unwrap();
        let lhs = t.apply(&x, &xi).unwrap().inner(&eta, t);
        let rhs = xi.inner(&t.apply_adjoint(&x, &eta).unwrap(), t);
        let scale = xi.norm(t) * eta.norm(t) * 10.0;
        prop_assert!((lhs - rhs).norm() <= 1e-10 * scale, "{lhs} vs {rhs}");
    }

    #[test]
    fn compression_is_linear(seed in any::<u64>(), xd in degrees(), vd in degrees(), re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let t = gns();
        let x = GnsElement::random(t, 1, &xd, seed).unwrap();
        let xi = GnsVector::random(t, 1, &vd, seed ^ 1).unwrap();
        let eta = GnsVector::random(t, 1, &vd, seed ^ 2).unwrap();
        let s = Complex64::new(re, im);
        let lhs = t.apply(&x, &xi.scale(s).add(&eta)).unwrap();
        let rhs = t.apply(&x, &xi).unwrap().scale(s).add(&t.apply(&x, &eta).unwrap());
        prop_assert!(lhs.rel_diff(&rhs, t, 1e-12) <= 1e-12);
    }
}
