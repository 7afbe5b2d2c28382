use excursion_core::experiments::families::{inverse_string, linear_perturbation, spike_family};
use excursion_core::strings::{
    classify, make_power_string, rescale, tightness_report, ClassKind, Flag, SlowlyVarying, TightnessVerdict,
};
use proptest::prelude::*;

fn truth(b: bool) -> Flag {
    if b {
        Flag::True
    } else {
        Flag::False
    }
}

#[test]
fn power_string_table() {
    for alpha in [0.3, 0.5, 0.9, 1.0, 1.5, 2.5, 3.0] {
        let r = classify(&make_power_string(alpha).unwrap()).unwrap();
        let want = [truth(alpha < 1.0), truth(alpha < 2.0), Flag::True, Flag::True];
        assert_eq!(r.flags(), want, "alpha = {alpha}");
    }
    let r = classify(&inverse_string().unwrap()).unwrap();
    assert_eq!(r.in_m, Flag::False);
}

#[test]
fn power_strings_are_fixed_points_of_rescaling() {
    let one = SlowlyVarying::<f64>::one();
    for alpha in [0.5f64, 1.0, 3.0] {
        let m = make_power_string(alpha).unwrap();
        for lambda in [10.0, 1e4] {
            let r = rescale(&m, lambda, alpha, &one).unwrap();
            for x in [1e-3, 0.2, 1.0, 30.0] {
                let (a, b) = (r.density(x), m.density(x));
                assert!((a - b).abs() <= 1e-12 * b.abs(), "alpha {alpha} lambda {lambda} x {x}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn tightness_of_the_two_families() {
    let deltas = [0.1, 0.01, 1e-3, 1e-4];
    let lambdas = [10.0, 100.0, 1e3, 1e4];
    let t = tightness_report("linear", linear_perturbation, ClassKind::M, &deltas, &lambdas).unwrap();
    assert_eq!(t.verdict, TightnessVerdict::Tight);
    // closed form δ² + δ²/(2λ)
    assert!((t.values[0][0] - (0.01 + 0.01 / 20.0)).abs() < 1e-9);
    let t = tightness_report("spike", spike_family, ClassKind::M, &deltas, &lambdas).unwrap();
    assert_eq!(t.verdict, TightnessVerdict::NotTight);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn classes_are_nested(alpha in 0.1f64..4.0) {
        let f = classify(&make_power_string(alpha).unwrap()).unwrap().flags();
        for k in 0..3 {
            // a member of a smaller class is never reported outside a larger one
            prop_assert!(!(f[k] == Flag::True && f[k + 1] == Flag::False), "alpha {alpha}: {f:?}");
        }
    }
}
