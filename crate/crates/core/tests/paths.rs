use excursion_core::experiments::{ks_two_sample, EmpiricalSample, Runner};
use excursion_core::localtime::occupation_field;
use excursion_core::rng::SeedSpec;
use excursion_core::samplers::{sample_bes3, sample_bm_absorbed, sample_excursion_given_max, GridPolicy};
use excursion_core::strings::make_power_string;
use excursion_core::timechange::{additive_functional, time_change_path, Membership};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn normals(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

#[test]
fn absorbed_bm_lifetime_has_levy_law() {
    // ζ from x is x²/Z² for a standard normal Z
    let (x, t_max, n) = (1.0, 20.0, 4000);
    let runner = Runner::new(0).unwrap();
    let sim = runner
        .map(0..n as u64, |i| {
            let p = sample_bm_absorbed(x, 1e-3, t_max, SeedSpec::new(21, i))?;
            Ok(p.lifetime().unwrap_or(f64::INFINITY))
        })
        .unwrap();
    let exact: Vec<f64> = normals(n, 22)
        .into_iter()
        .map(|z| {
            let t = x * x / (z * z);
            if t > t_max {
                f64::INFINITY
            } else {
                t
            }
        })
        .collect();
    let ks = ks_two_sample(
        &EmpiricalSample::new("sim", sim).unwrap(),
        &EmpiricalSample::new("exact", exact).unwrap(),
    );
    assert!(ks < 0.04, "KS = {ks}");
}

#[test]
fn bes3_marginal_is_norm_of_gaussian_vector() {
    let (t, n) = (0.5, 4000);
    let sim: Vec<f64> = (0..n as u64)
        .map(|i| *sample_bes3(0.0, 0.01, t, SeedSpec::new(31, i)).unwrap().values().last().unwrap())
        .collect();
    let g = normals(3 * n, 32);
    let exact: Vec<f64> = g.chunks(3).map(|c| (t * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2])).sqrt()).collect();
    let ks = ks_two_sample(
        &EmpiricalSample::new("sim", sim).unwrap(),
        &EmpiricalSample::new("exact", exact).unwrap(),
    );
    assert!(ks < 0.04, "KS = {ks}");
}

#[test]
fn brownian_string_clock_is_the_identity() {
    let m = make_power_string(0.5).unwrap();
    for i in 0..5 {
        let e = sample_excursion_given_max(0.5f64, 1e-4, GridPolicy::Fixed, 10_000_000, SeedSpec::new(41, i)).unwrap();
        let field = occupation_field(&e, 0.005, e.max()).unwrap();
        let a = additive_functional(&field, &m, 0.0, Membership::Verify).unwrap();
        let zeta = e.duration();
        assert!((a.terminal() - zeta).abs() <= 1e-9 * zeta);
        let tc = time_change_path(&e, &a, 1e-4).unwrap();
        let worst = (0..tc.len())
            .map(|k| (tc.values()[k] - e.value_at_time(tc.time_of(k))).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "path {i}: {worst}");
    }
}

#[test]
fn occupation_accounts_for_the_lifetime() {
    let e = sample_excursion_given_max(1.0f64, 1e-4, GridPolicy::Fixed, 10_000_000, SeedSpec::new(51, 0)).unwrap();
    let f = occupation_field(&e, 0.01, e.max()).unwrap();
    assert!((f.total_time() - e.duration()).abs() < 1e-9 * e.duration());
}
