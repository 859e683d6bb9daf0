mod common;

use common::*;
use gammadiv::entropy::{log_mgf, log_sum_exp, rel_entropy, tilt};
use gammadiv::measures::DiscreteMeasure;
use gammadiv::transport::{CostSpec, Potential};
use proptest::prelude::*;

fn measures(seed: u64, n: usize) -> (DiscreteMeasure, DiscreteMeasure, Vec<f64>) {
    let mut r = rng(seed);
    let pts = random_points(&mut r, n, 2, 1.0, 1e-2);
    let mu = DiscreteMeasure::probability(pts.clone(), random_weights(&mut r, n, 0.05)).unwrap();
    let nu = DiscreteMeasure::probability(pts, random_weights(&mut r, n, 0.05)).unwrap();
    let g: Vec<f64> = (0..n).map(|_| random_in(&mut r, -3.0, 3.0)).collect();
    (mu, nu, g)
}

/// An observable that is Lipschitz for a cost large enough to hold `g`.
fn potential(points: &[Vec<f64>], g: &[f64]) -> Potential {
    Potential::new(points.to_vec(), g.to_vec(), CostSpec::scaled_metric(1e6).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn relative_entropy_matches_direct_sum(seed in 0u64..10_000, n in 1usize..9) {
        let (mu, nu, _) = measures(seed, n);
        let direct = kl(mu.weights(), nu.weights());
        prop_assert!((rel_entropy(&mu, &nu) - direct).abs() <= 1e-12 * (1.0 + direct));
        prop_assert!(rel_entropy(&mu, &nu) >= 0.0);
        prop_assert!(rel_entropy(&mu, &mu).abs() <= 1e-15);
    }

    #[test]
    fn variational_inequality_holds_with_equality_at_the_tilt(seed in 0u64..10_000, n in 1usize..9) {
        let (mu, nu, g) = measures(seed, n);
        let pot = potential(mu.points(), &g);
        let lmgf = log_mgf(&pot, &nu).unwrap();
        let gain = pot.integrate(&mu).unwrap() - rel_entropy(&mu, &nu);
        prop_assert!(lmgf >= gain - 1e-12);
        let tilted = tilt(&nu, &pot).unwrap().result;
        let at_tilt = pot.integrate(&tilted).unwrap() - rel_entropy(&tilted, &nu);
        prop_assert!((lmgf - at_tilt).abs() <= 1e-10 * (1.0 + lmgf.abs()));
    }

    #[test]
    fn log_sum_exp_survives_large_arguments(shift in -800.0f64..800.0, n in 1usize..6) {
        let values: Vec<f64> = (0..n).map(|i| shift + i as f64).collect();
        let weights = vec![1.0 / n as f64; n];
        let reference = (0..n).map(|i| (i as f64).exp()).sum::<f64>().ln() - (n as f64).ln() + shift;
        let ours = log_sum_exp(&values, &weights);
        prop_assert!(ours.is_finite());
        prop_assert!((ours - reference).abs() <= 1e-12 * (1.0 + reference.abs()));
    }
}

#[test]
fn entropy_is_infinite_off_the_support() {
    let mu = line(&[0.0, 2.0], &[0.5, 0.5]);
    let nu = line(&[0.0, 1.0], &[0.5, 0.5]);
    assert_eq!(rel_entropy(&mu, &nu), f64::INFINITY);
}
