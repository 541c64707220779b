use fracprop::mlf::*;
use proptest::prelude::*;

const REFERENCE: &str = include_str!("data/ml_reference.csv");

// (x, e^x erfc(√x)) from a 40-digit evaluation; E_{1/2}(−√x) = e^x erfc(√x)
const ERFCX: [(f64, f64); 10] = [
    (1e-4, 0.988_815_461_046_342_5),
    (0.01, 0.896_456_979_969_126_6),
    (0.3, 0.592_018_411_314_735_7),
    (1.0, 0.427_583_576_155_807),
    (2.5, 0.308_793_556_708_283_5),
    (10.0, 0.170_577_718_325_972_66),
    (100.0, 0.056_140_992_743_822_586),
    (1e3, 0.017_832_333_888_542_05),
    (1e4, 0.005_641_613_782_989_433),
    (1e6, 0.000_564_189_301_453_387_7),
];

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

fn reference_rows() -> impl Iterator<Item = (f64, f64, f64, f64)> {
    REFERENCE.lines().skip(1).map(|line| {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        (v[0], v[1], v[2], v[3])
    })
}

#[test]
fn matches_reference_table() {
    let mut worst: f64 = 0.0;
    for (a, d, z, e) in reference_rows() {
        let r = ml_eval(a, d, z).unwrap();
        let err = rel(r.value, e);
        let tol = if r.guaranteed { 1e-10 } else { 1e-9 };
        assert!(err <= tol, "E_({a},{d})({z}) = {} vs {e} (rel {err:.2e}, {:?})", r.value, r.regime);
        worst = worst.max(err);
    }
    assert!(worst < 1e-10);
}

#[test]
fn error_estimate_is_honest_on_reference_table() {
    for (a, d, z, e) in reference_rows() {
        let r = ml_eval(a, d, z).unwrap();
        let actual = (r.value - e).abs();
        // the estimate may be loose but must not undershoot by more than a small factor
        assert!(
            actual <= 10.0 * r.abs_error_estimate + 1e-300,
            "E_({a},{d})({z}): error {actual:.2e}, estimate {:.2e}",
            r.abs_error_estimate
        );
    }
}

#[test]
fn half_order_matches_erfcx() {
    for (x, v) in ERFCX {
        let r = ml_eval(0.5, 1.0, -x.sqrt()).unwrap();
        assert!(rel(r.value, v) < 1e-12, "x = {x}: {} vs {v}", r.value);
    }
}

#[test]
fn series_examples() {
    let r = ml_series(1.0, 1.0, -1.0, 1e-16).unwrap();
    assert!((r.value - 0.367_879_441_171_442_33).abs() < 1e-15);
    assert_eq!(r.regime, Regime::Series);

    let x = std::f64::consts::FRAC_PI_2;
    let r = ml_series(2.0, 1.0, -x * x, 1e-16).unwrap();
    assert!(r.value.abs() < 1e-12);

    let r = ml_series(0.5, 1.0, -1.0, 1e-16).unwrap();
    assert!(rel(r.value, 0.427_583_576_155_807) < 1e-13);
}

#[test]
fn series_near_a_zero_of_the_function() {
    // cos(π/2): the sum is tiny but Σ|t_k| = cosh(π/2), so nothing is lost
    let x = std::f64::consts::FRAC_PI_2;
    let r = ml_series(2.0, 1.0, -x * x, 1e-16).unwrap();
    assert!(r.abs_error_estimate < 1e-14);
}

#[test]
fn series_rejects_large_cancellation_and_bad_input() {
    // Σ|t_k| = e^40 against a value of e^{-40}
    assert!(matches!(
        ml_series(1.0, 1.0, -40.0, 1e-16),
        Err(MlError::CancellationLoss { .. })
    ));
    assert!(matches!(
        ml_series(1.0, 1.0, -60.0, 1e-16),
        Err(MlError::InvalidParameters(_))
    ));
    assert!(matches!(
        ml_series(1.0, 1.0, -1.0, 0.0),
        Err(MlError::InvalidParameters(_))
    ));
}

#[test]
fn parameter_validation() {
    for (a, d, z) in [
        (0.0, 1.0, -1.0),
        (2.5, 1.0, -1.0),
        (1.0, 0.0, -1.0),
        (1.0, 1.0, 0.5),
        (1.0, 1.0, f64::NAN),
        (f64::NAN, 1.0, -1.0),
    ] {
        assert!(matches!(ml_eval(a, d, z), Err(MlError::InvalidParameters(_))), "{a} {d} {z}");
    }
}

#[test]
fn asymptotic_examples() {
    let r = ml_asymptotic(0.5, 1.0, -100.0, 1).unwrap();
    let expected = 1.0 / (std::f64::consts::PI.sqrt() * 100.0);
    assert!(rel(r.value, expected) < 1e-15);
    // next nonvanishing term is k = 3 (1/Γ(0) vanishes): |z|^{-3}/|Γ(-1/2)|
    let next = 1e-6 / (2.0 * std::f64::consts::PI.sqrt());
    assert!(rel(r.abs_error_estimate, next) < 1e-6, "{}", r.abs_error_estimate);
    assert_eq!(r.regime, Regime::Asymptotic);

    let r = ml_asymptotic(1.5, 1.0, -1000.0, 2).unwrap();
    let g = ml_eval(1.5, 1.0, -1000.0).unwrap();
    assert!(rel(r.value, g.value) < 1e-8, "{} vs {}", r.value, g.value);

    for a in [0.3, 0.8, 1.2, 1.9] {
        let r = ml_asymptotic(a, 1.0, -1e12, 3).unwrap();
        assert!(r.value.abs() < 1e-11);
    }
}

#[test]
fn asymptotic_refuses_small_argument() {
    assert!(matches!(
        ml_asymptotic(0.5, 1.0, -2.0, 3),
        Err(MlError::NotInAsymptoticRegime { .. })
    ));
    assert!(matches!(
        ml_asymptotic(0.5, 1.0, -100.0, 0),
        Err(MlError::InvalidParameters(_))
    ));
}

#[test]
fn eval_examples() {
    assert_eq!(ml_eval(0.7, 1.0, 0.0).unwrap().value, 1.0);
    assert_eq!(ml_eval(0.7, 2.0, 0.0).unwrap().value, 1.0);
    let r = ml_eval(1.0, 2.0, -2.0).unwrap();
    assert!(rel(r.value, 0.432_332_358_381_693_65) < 1e-14);
    assert!(r.abs_error_estimate <= 1e-10 * r.value.abs().max(1.0));
}

#[test]
fn guaranteed_box_flag() {
    let p = MlParams::new(0.05, 1.0, -3.0).unwrap();
    let r = ml_eval(p.alpha, p.delta, p.z).unwrap();
    assert!(!r.guaranteed);
    assert!(matches!(
        r.require_guaranteed(&p),
        Err(MlError::UnsupportedParameters { .. })
    ));
    assert!(!ml_eval(0.5, 1.5, -3.0).unwrap().guaranteed);
    assert!(!ml_eval(0.5, 1.0, -2e6).unwrap().guaranteed);
    let p = MlParams::new(0.5, 2.0, -3.0).unwrap();
    assert!(ml_eval(p.alpha, p.delta, p.z).unwrap().require_guaranteed(&p).is_ok());
}

#[test]
fn regimes_agree_across_dispatch_boundaries() {
    let alphas = [0.1, 0.2, 0.3, 0.45, 0.5, 0.65, 0.8, 0.95, 1.0, 1.1, 1.2, 1.35, 1.5, 1.7, 1.9, 2.0];
    for a in alphas {
        for d in [1.0, 2.0] {
            let s = series_radius(a);
            let series = ml_series(a, d, -s, 1e-17).unwrap();
            let integral = ml_integral(a, d, -s).unwrap();
            let scale = series.value.abs().max(1.0 / s);
            assert!(
                (series.value - integral.value).abs() <= 1e-9 * scale,
                "series/integral at α={a}, δ={d}: {} vs {}",
                series.value,
                integral.value
            );

            let t = asymptotic_threshold(a);
            let integral = ml_integral(a, d, -t).unwrap();
            let asym = ml_asymptotic_optimal(a, d, -t).unwrap();
            let scale = integral.value.abs().max(1.0 / t);
            assert!(
                (asym.value - integral.value).abs() <= 1e-9 * scale,
                "integral/asymptotic at α={a}, δ={d}: {} vs {}",
                integral.value,
                asym.value
            );
        }
    }
}

#[test]
fn complete_monotonicity_on_grid() {
    for a in [0.3, 0.5, 0.8, 1.0] {
        let mut prev = ml_value(a, 1.0, -50.0).unwrap();
        assert!(prev >= 0.0);
        for i in 1..=2000 {
            let z = -50.0 + 50.0 * i as f64 / 2000.0;
            let v = ml_value(a, 1.0, z).unwrap();
            assert!(v >= prev && v <= 1.0, "α={a}, z={z}: {v} < {prev}");
            prev = v;
        }
    }
}

#[test]
fn uniform_rational_bound_is_finite() {
    for a in [0.2, 0.5, 0.9, 1.0, 1.3, 1.6, 1.9] {
        let c = uniform_rational_bound(a, 1e6, 400).unwrap();
        assert!(c.is_finite() && c >= 1.0, "α={a}: C = {c}");
        // below α = 1 the bound is at most 1/Γ(1−α) + 1 from the leading term
        if a < 1.0 {
            assert!(c < 1.0 + fracprop::gamma::rgamma(1.0 - a) + 1.0, "α={a}: C = {c}");
        }
    }
    // near α = 2 the residue decays like exp(−0.08 s^0.53), so C is large but finite
    let c = uniform_rational_bound(1.9, 1e6, 400).unwrap();
    assert!(c > 10.0 && c < 200.0, "{c}");
}

#[test]
fn oscillation_for_wave_order() {
    let negative = (0..=2000).any(|i| ml_value(1.5, 1.0, -20.0 * i as f64 / 2000.0).unwrap() < 0.0);
    assert!(negative);
}

#[test]
fn unit_alpha_fractional_delta() {
    // E_{1,δ}(z) = 1/Γ(δ) + z E_{1,δ+1}(z)
    for x in [0.3, 3.0, 30.0, 300.0] {
        let lo = ml_value(1.0, 0.5, -x).unwrap();
        let hi = ml_value(1.0, 1.5, -x).unwrap();
        let recur = 1.0 / std::f64::consts::PI.sqrt() - x * hi;
        assert!((lo - recur).abs() < 1e-12 * lo.abs().max(1.0), "x={x}: {lo} vs {recur}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exponential_identity(z in -30.0f64..=0.0) {
        let v = ml_value(1.0, 1.0, z).unwrap();
        prop_assert!((v - z.exp()).abs() <= 1e-10 * z.exp());
    }

    #[test]
    fn cosine_identity(x in 0.0f64..30.0) {
        let v = ml_value(2.0, 1.0, -x * x).unwrap();
        prop_assert!((v - x.cos()).abs() <= 1e-10);
    }

    #[test]
    fn sinc_identity(x in 0.01f64..30.0) {
        let v = ml_value(2.0, 2.0, -x * x).unwrap();
        prop_assert!((v - x.sin() / x).abs() <= 1e-10);
    }

    #[test]
    fn heat_kernel_in_unit_interval(a in 0.1f64..=1.0, z in -1e6f64..=0.0) {
        let v = ml_value(a, 1.0, z).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn recurrence_in_delta(a in 0.1f64..=2.0, x in 0.01f64..1e4) {
        // E_{α,1}(z) = 1 + z E_{α,1+α}(z)
        let lhs = ml_value(a, 1.0, -x).unwrap();
        let rhs = 1.0 - x * ml_value(a, 1.0 + a, -x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0 / x.max(1.0)), "{} vs {}", lhs, rhs);
    }
}
