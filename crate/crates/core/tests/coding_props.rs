use proptest::prelude::*;

use sbdc_core::coding::{linspace, DecodingFunction};

fn builtin() -> impl Strategy<Value = DecodingFunction> {
    prop_oneof![
        (prop_oneof![-5.0f64..-0.05, 0.05f64..5.0], -3.0f64..3.0)
            .prop_map(|(b, a)| DecodingFunction::linear(b, a).unwrap()),
        (1.05f64..10.0).prop_map(|beta| DecodingFunction::log_linear(beta).unwrap()),
    ]
}

fn slope(f: &DecodingFunction, eta: f64) -> f64 {
    match *f {
        DecodingFunction::Linear { b, .. } => b,
        DecodingFunction::LogLinear { beta } if eta >= 0.0 => 1.0 / ((1.0 + eta) * beta.ln()),
        DecodingFunction::LogLinear { beta } => 1.0 / beta.ln(),
        DecodingFunction::Custom(_) => unreachable!(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn encode_then_decode_is_identity(f in builtin(), w in -20.0f64..20.0) {
        let theta = f.encode(w).unwrap();
        let back = f.decode(theta).unwrap();
        prop_assert!((back - w).abs() <= 1e-10 * w.abs().max(1.0), "{f}: {w} -> {theta} -> {back}");
    }

    #[test]
    fn lipschitz_bound(f in builtin(), eta in -10.0f64..10.0, delta in -10.0f64..10.0) {
        let k = f.lipschitz();
        let jump = f.decode(eta + delta).unwrap() - f.decode(eta).unwrap();
        prop_assert!(jump.abs() <= k * delta.abs() * (1.0 + 1e-12) + 1e-12);
        // Concavity: the increment stays below the tangent line.
        prop_assert!(jump <= slope(&f, eta) * delta + 1e-9 * (1.0 + delta.abs()));
    }

    #[test]
    fn linear_increment_is_exact(b in 0.05f64..5.0, a in -3.0f64..3.0, eta in -10.0f64..10.0, delta in -5.0f64..5.0) {
        let f = DecodingFunction::linear(b, a).unwrap();
        let jump = f.decode(eta + delta).unwrap() - f.decode(eta).unwrap();
        prop_assert!((jump - b * delta).abs() < 1e-12 * (1.0 + (b * eta).abs() + (b * delta).abs()));
    }

    #[test]
    fn builtins_satisfy_characterization(f in builtin()) {
        let report = f.verify_characterization(&linspace(-5.0, 5.0, 400));
        prop_assert!(report.passed(), "{f}: {report:?}");
    }
}

#[test]
fn log_slope_is_continuous_at_the_branch_join() {
    for beta in [1.5, 2.0, 3.0, 10.0] {
        let f = DecodingFunction::log_linear(beta).unwrap();
        let h = 1e-7;
        let left = (f.decode(0.0).unwrap() - f.decode(-h).unwrap()) / h;
        let right = (f.decode(h).unwrap() - f.decode(0.0).unwrap()) / h;
        let k = f.lipschitz();
        assert!((left - k).abs() < 1e-6 && (right - k).abs() < 1e-6);
    }
}
