use super::*;
use crate::entropy::rel_entropy;
use crate::transport::ot_cost;
use approx::assert_abs_diff_eq;

fn line(xs: &[f64], w: &[f64]) -> DiscreteMeasure {
    DiscreteMeasure::from_1d(xs, w).unwrap()
}

#[test]
fn identical_measures_have_zero_divergence() {
    let nu = line(&[0.0, 1.0, 2.0], &[0.2, 0.3, 0.5]);
    let cost = CostSpec::scaled_metric(1.0).unwrap();
    for rep in [gamma_div_primal(&nu, &nu, &cost).unwrap(), gamma_div_dual(&nu, &nu, &cost).unwrap()] {
        assert_abs_diff_eq!(rep.value, 0.0, epsilon = 1e-9);
        for (a, b) in rep.gamma_star.weights().iter().zip(nu.weights()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
        let spread = rep.g_star.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(spread < 1e-6, "g* not constant: {:?}", rep.g_star.values());
    }
}

#[test]
fn primal_and_dual_agree_and_verify() {
    let mu = line(&[0.0, 0.5, 3.0], &[0.5, 0.3, 0.2]);
    let nu = line(&[0.2, 1.0, 2.0, 2.5], &[0.1, 0.4, 0.3, 0.2]);
    let cost = CostSpec::scaled_metric(1.5).unwrap();
    let p = gamma_div_primal(&mu, &nu, &cost).unwrap();
    let d = gamma_div_dual(&mu, &nu, &cost).unwrap();
    assert_abs_diff_eq!(p.value, d.value, epsilon = 1e-9);
    assert!(p.primal_dual_gap < 1e-9);
    let v = verify_pair(&mu, &nu, &p.gamma_star, &p.g_star, &cost).unwrap();
    assert!(v.pass, "{v:?}");
    assert!(p.value <= rel_entropy(&mu, &nu).min(ot_cost(&mu, &nu, &cost).unwrap()) + 1e-9);
    assert_abs_diff_eq!(p.value, p.re_part + p.w_part, epsilon = 1e-9);
}

#[test]
fn added_point_example_has_unit_slope_toward_new_point() {
    let nu = line(&[0.0, 1.0, 2.0], &[1.0 / 3.0; 3]);
    let mu = line(&[0.0, 1.0, 2.0, 4.0], &[0.25; 4]);
    let cost = CostSpec::scaled_metric(1.0).unwrap();
    let d = gamma_div_dual(&mu, &nu, &cost).unwrap();
    let g4 = d.g_star.value_at(&[4.0]).unwrap();
    let g2 = d.g_star.value_at(&[2.0]).unwrap();
    assert_abs_diff_eq!(g4 - g2, 2.0, epsilon = 1e-8);
}

#[test]
fn perturbed_gamma_fails_verification() {
    let mu = line(&[0.0, 3.0], &[0.5, 0.5]);
    let nu = line(&[0.0, 1.0, 2.0], &[0.3, 0.3, 0.4]);
    let cost = CostSpec::scaled_metric(1.0).unwrap();
    let rep = gamma_div_primal(&mu, &nu, &cost).unwrap();
    let mut w = rep.gamma_star.weights_on(nu.points());
    w[0] += 0.1;
    let bad = DiscreteMeasure::normalized(nu.points().to_vec(), w).unwrap();
    let v = verify_pair(&mu, &nu, &bad, &rep.g_star, &cost).unwrap();
    assert!(!v.pass && v.residual_tilt > 1e-6);
}

#[test]
fn single_atom_reference_gives_transport_cost() {
    let mu = line(&[0.0, 2.0], &[0.5, 0.5]);
    let nu = DiscreteMeasure::dirac(vec![1.0]).unwrap();
    let rep = gamma_div_primal(&mu, &nu, &CostSpec::scaled_metric(2.0).unwrap()).unwrap();
    assert_abs_diff_eq!(rep.value, 2.0, epsilon = 1e-12);
    assert_eq!(rep.solver, SolverKind::SingleAtom);
}

#[test]
fn large_b_example() {
    let nu = line(&[0.0, 1.0], &[0.5, 0.5]);
    let mu = DiscreteMeasure::dirac(vec![0.1]).unwrap();
    let cost = CostSpec::scaled_metric(1.0).unwrap();
    let e = large_b_expansion(&mu, &nu, &cost, 7.0).unwrap();
    assert_abs_diff_eq!(e.value, 0.7 + 2f64.ln(), epsilon = 1e-12);
    let tie = DiscreteMeasure::dirac(vec![0.5]).unwrap();
    assert!(matches!(large_b_expansion(&tie, &nu, &cost, 1.0), Err(Error::DistanceTie { .. })));
}

#[test]
fn directional_derivative_of_zero_direction() {
    let mu = line(&[0.0, 1.0], &[0.5, 0.5]);
    let rho = DiscreteMeasure::signed(vec![vec![0.0], vec![1.0]], vec![0.0, 0.0]).unwrap();
    let cost = CostSpec::scaled_metric(1.0).unwrap();
    assert_eq!(directional_derivative(&mu, &mu, &rho, &cost).unwrap(), 0.0);
    let bad = DiscreteMeasure::signed(vec![vec![5.0], vec![1.0]], vec![-0.1, 0.1]).unwrap();
    assert!(directional_derivative(&mu, &mu, &bad, &cost).is_err());
}

#[test]
fn banded_solver_matches_dense_solver() {
    let xs: Vec<f64> = (0..70).map(|i| i as f64 / 69.0).collect();
    let wn: Vec<f64> = xs.iter().map(|x| 1.0 + x).collect();
    let s: f64 = wn.iter().sum();
    let nu = line(&xs, &wn.iter().map(|w| w / s).collect::<Vec<_>>());
    let mu = line(&[0.3, 1.4], &[0.6, 0.4]);
    let cost = CostSpec::scaled_metric(2.0).unwrap();
    let banded = gamma_div_primal(&mu, &nu, &cost).unwrap();
    assert_eq!(banded.solver, SolverKind::Banded);
    let prob = Problem::new(&mu, &nu, &cost).unwrap();
    let out = dual::solve(&prob, &Tolerances::default());
    let dense = prob.polish(&out.g).unwrap();
    assert_abs_diff_eq!(banded.value, dense.upper, epsilon = 1e-8);
}
