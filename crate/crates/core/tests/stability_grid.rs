use cranesim::control::{Alpha2Rule, ControllerGains};
use cranesim::stability::{
    is_hurwitz, linearized_a, numeric_linearization_check, sign_test, stability_map, GridSpec, Verdict,
};
use cranesim::CraneParameters;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const P: CraneParameters = CraneParameters::NK1000;

#[test]
fn default_gains_are_hurwitz_on_the_whole_grid() {
    let points = stability_map(&P, &ControllerGains::nk1000(), &GridSpec::default()).unwrap();
    assert_eq!(points.len(), 51 * 51);
    let worst = points.iter().map(|p| p.max_real_eigenvalue).fold(f64::NEG_INFINITY, f64::max);
    assert!(points.iter().all(|p| p.verdict == Verdict::Stable), "worst real part {worst}");
}

#[test]
fn sign_test_agrees_with_eigenvalues_on_random_gains() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut unstable = 0;
    for _ in 0..1000 {
        let mut gains = ControllerGains::nk1000();
        gains.k_ud = [rng.gen_range(0.1..300.0), rng.gen_range(0.1..300.0)];
        gains.k_up = [rng.gen_range(0.1..50.0), rng.gen_range(0.1..50.0)];
        gains.alpha1 = rng.gen_range(-2.0..2.0);
        gains.alpha2 = Alpha2Rule::Fixed(rng.gen_range(-2.0..2.0));
        let beta = rng.gen_range(0.05..1.5);
        let d = rng.gen_range(0.5..20.0);
        let sys = linearized_a(&P, &gains, beta, d).unwrap();
        let report = is_hurwitz(&sys);
        assert_eq!(sign_test(&sys), report.verdict == Verdict::Stable, "beta {beta}, d {d}, {gains:?}");
        if report.verdict == Verdict::Unstable {
            unstable += 1;
        }
    }
    // both outcomes must actually occur for the comparison to mean anything
    assert!(unstable > 50 && unstable < 950, "{unstable}");
}

#[test]
fn closed_form_entries_match_numeric_linearization() {
    let gains = ControllerGains::nk1000();
    for (beta, d) in [(0.05, 0.5), (0.3, 5.0), (0.8, 10.0), (1.2, 15.0), (1.5, 20.0)] {
        let check = numeric_linearization_check(&P, &gains, beta, d, 1e-6).unwrap();
        assert!(check.deviation < 1e-6, "({beta}, {d}): {}", check.deviation);
    }
}
