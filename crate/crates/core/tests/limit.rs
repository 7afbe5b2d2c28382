use excursion_core::experiments::*;
use excursion_core::strings::SlowlyVarying;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Endpoints `S_n/√n` of Gaussian random walks conditioned to stay positive
/// for `n` steps; the Brownian meander at time 1 in the limit.
fn conditioned_walk_endpoints(n: usize, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut s = 0.0f64;
        let mut alive = true;
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            s += z;
            if s <= 0.0 {
                alive = false;
                break;
            }
        }
        if alive {
            out.push(s / (n as f64).sqrt());
        }
    }
    out
}

fn rayleigh(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        1.0 - (-0.5 * x * x).exp()
    }
}

fn endpoints(acc: &Accepted<Vec<f64>>) -> EmpiricalSample {
    EmpiricalSample::new("e(1)", acc.items.iter().map(|r| r[r.len() - 1]).collect()).unwrap()
}

#[test]
fn conditioned_walk_oracle_is_rayleigh() {
    let w = EmpiricalSample::new("walk", conditioned_walk_endpoints(10_000, 4000, 3)).unwrap();
    // finite-n walks overshoot slightly near 0; DKW at 4000 is ≈ 0.03
    assert!(ks_one_sample(&w, rayleigh) < 0.035);
}

#[test]
fn brownian_meander_endpoint_matches_oracles() {
    let p = MeanderParams {
        n: 5000,
        ..MeanderParams::default()
    };
    let runner = Runner::new(0).unwrap();
    let acc = meander_marginals(0.5, &p, &[1.0], false, 11, &runner).unwrap();
    assert_eq!(acc.items.len(), 5000);
    let e1 = endpoints(&acc);
    let walk = EmpiricalSample::new("walk", conditioned_walk_endpoints(10_000, 5000, 5)).unwrap();
    let ks_walk = ks_two_sample(&e1, &walk);
    let ks_rayleigh = ks_one_sample(&e1, rayleigh);
    assert!(ks_walk <= 0.03, "KS against conditioned walks = {ks_walk}");
    assert!(ks_rayleigh <= 0.03, "KS against Rayleigh = {ks_rayleigh}");
}

#[test]
fn accepted_meander_paths_outlive_one() {
    let p = MeanderParams {
        n: 50,
        dt: 1e-3,
        new_dt: 0.05,
        ..MeanderParams::default()
    };
    let acc = meander_sampler(0.5, &p, 2, &Runner::new(1).unwrap()).unwrap();
    for path in &acc.items {
        // positive on (0, 1]: the lifetime exceeds 1
        assert!(path.values()[1..].iter().all(|v| *v > 0.0));
        assert!((path.duration() - 1.0).abs() < 1e-12);
    }
    assert!(acc.rate() > 0.0 && acc.rate() < 1.0);
}

#[test]
fn u_of_lambda_examples() {
    let one = SlowlyVarying::one();
    assert!((u_of_lambda(0.5, &one, 100.0).unwrap() - 10.0).abs() < 1e-8);
    assert!((u_of_lambda(1.0, &one, 7.0).unwrap() - 7.0).abs() < 1e-8);
    let u = u_of_lambda(1.0, &SlowlyVarying::log(), 100.0).unwrap();
    assert!((u * u.ln() - 100.0).abs() < 1e-7);
    let u = u_of_lambda(3.0, &one, 1e4).unwrap();
    assert!((u / 1e12 - 1.0).abs() < 1e-9);
}

#[test]
fn self_similar_string_gives_lambda_free_law() {
    let m = excursion_core::strings::make_power_string(3.0).unwrap();
    let p = LimitParams {
        alpha: 3.0,
        lambdas: vec![1e2, 1e4],
        n: 300,
        route: Route::Excursion,
        reference: Reference::SelfSimilar,
        relative_grid: true,
        a_cut: 0.01,
        dt: 1e-7,
        h: 5e-4,
        ks: 0.2,
        ..LimitParams::default()
    };
    let out = conditional_limit_experiment(&m, &SlowlyVarying::one(), &p, 4, &Runner::new(1).unwrap()).unwrap();
    assert!(out.report.verdict.pass, "{}", out.report.summary());
    assert_eq!(out.report.verdict.label, "consistent");
}

#[test]
fn reports_do_not_depend_on_workers() {
    let p = LimitParams {
        lambdas: vec![100.0, 1000.0],
        n: 100,
        meander: MeanderParams {
            n: 100,
            dt: 1e-3,
            ..MeanderParams::default()
        },
        ..LimitParams::default()
    };
    let m = excursion_core::strings::make_power_string(0.5).unwrap();
    let one = SlowlyVarying::one();
    let a = conditional_limit_experiment(&m, &one, &p, 9, &Runner::new(1).unwrap()).unwrap();
    let b = conditional_limit_experiment(&m, &one, &p, 9, &Runner::new(3).unwrap()).unwrap();
    assert_eq!(a.report.to_json(), b.report.to_json());
    assert_eq!(a.tables, b.tables);
}
