use proptest::prelude::*;
use seqnorm::special_fn::*;

fn delta_grid() -> Vec<f64> {
    let mut out = vec![1e-6, 1e-5, 1e-4, 1e-3, 0.01, 0.025, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5];
    let upper: Vec<f64> = out.iter().rev().skip(1).map(|d| 1.0 - d).collect();
    out.extend(upper);
    out
}

#[test]
fn normal_round_trip_on_grid() {
    for d in delta_grid() {
        let z = std_normal_critical(d).unwrap();
        let p = std_normal_cdf(z).unwrap().get();
        assert!((p - (1.0 - d)).abs() < 1e-10, "δ={d}");
    }
}

#[test]
fn cdfs_nondecreasing_on_dense_grid() {
    let xs: Vec<f64> = (0..10_000).map(|i| -12.0 + 24.0 * i as f64 / 9999.0).collect();
    let check = |f: &dyn Fn(f64) -> f64, what: &str| {
        let mut prev = f64::NEG_INFINITY;
        for &x in &xs {
            let v = f(x);
            assert!(v >= prev, "{what} decreases at {x}");
            prev = v;
        }
    };
    check(&|x| std_normal_cdf(x).unwrap().get(), "normal");
    for dof in [1, 3, 13, 60] {
        check(&|x| student_t_cdf(x, dof).unwrap().get(), "student t");
        // map the grid onto [0, 120]
        check(&|x| chi_square_cdf(5.0 * (x + 12.0), dof).unwrap().get(), "chi-square");
    }
}

#[test]
fn quantiles_increasing_in_p() {
    let ps: Vec<f64> = (1..200).map(|i| i as f64 / 200.0).collect();
    for dof in [1, 2, 7, 40] {
        let q: Vec<f64> = ps.iter().map(|&p| chi_square_quantile(p, dof).unwrap()).collect();
        assert!(q.windows(2).all(|w| w[1] > w[0]), "chi-square dof={dof}");
        // critical values are upper-tail points, so they fall as δ grows
        let t: Vec<f64> = ps.iter().map(|&p| student_t_critical(dof, p).unwrap()).collect();
        assert!(t.windows(2).all(|w| w[1] < w[0]), "t dof={dof}");
    }
    let z: Vec<f64> = ps.iter().map(|&p| std_normal_critical(p).unwrap()).collect();
    assert!(z.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn t_critical_approaches_normal() {
    for d in [0.001, 0.025, 0.05, 0.2] {
        let t = student_t_critical(1_000_000, d).unwrap();
        let z = std_normal_critical(d).unwrap();
        assert!((t - z).abs() < 1e-4, "δ={d}");
    }
}

#[test]
fn noncentral_t_reduces_to_central() {
    for dof in [1, 4, 19] {
        for x in [-2.0, -0.3, 0.0, 1.1, 3.5] {
            let a = noncentral_t_cdf(x, dof, 0.0).unwrap().get();
            let b = student_t_cdf(x, dof).unwrap().get();
            assert!((a - b).abs() < 1e-9, "dof={dof} x={x}");
        }
    }
}

#[test]
fn domain_errors() {
    assert!(std_normal_cdf(f64::NAN).is_err());
    assert!(std_normal_critical(0.0).is_err());
    assert!(std_normal_critical(1.0).is_err());
    assert!(student_t_critical(0, 0.1).is_err());
    assert!(chi_square_cdf(-1.0, 3).is_err());
    assert!(chi_square_quantile(1.0, 3).is_err());
    assert!(Probability::new(1.5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn chi_square_round_trip(x0 in 0.01f64..80.0, dof in 1u32..60) {
        let p = chi_square_cdf(x0, dof).unwrap().get();
        prop_assume!(p > 1e-12 && p < 1.0 - 1e-12);
        let x = chi_square_quantile(p, dof).unwrap();
        // the inverse is only as well conditioned as the density at x0
        let dens = {
            let e = 1e-6 * x0.max(1.0);
            (chi_square_cdf(x0 + e, dof).unwrap().get() - chi_square_cdf((x0 - e).max(0.0), dof).unwrap().get()) / (2.0 * e)
        };
        prop_assume!(dens > 1e-4);
        prop_assert!((x - x0).abs() < 1e-8 * x0.max(1.0), "x0={} x={}", x0, x);
    }

    #[test]
    fn chi_square_quantile_contract(p in 1e-6f64..0.999999, dof in 1u32..100) {
        let x = chi_square_quantile(p, dof).unwrap();
        prop_assert!((chi_square_cdf(x, dof).unwrap().get() - p).abs() <= 1e-10);
    }

    #[test]
    fn chi_square_dominance(x in 0.0f64..100.0, a in 1u32..80) {
        let lo = chi_square_cdf(x, a).unwrap().get();
        let hi = chi_square_cdf(x, a + 2).unwrap().get();
        prop_assert!(lo >= hi - 1e-15);
    }

    #[test]
    fn t_critical_contract(dof in 1u32..500, d in 1e-5f64..0.99999) {
        let t = student_t_critical(dof, d).unwrap();
        let upper = 1.0 - student_t_cdf(t, dof).unwrap().get();
        prop_assert!((upper - d).abs() <= 1e-10);
    }

    #[test]
    fn normal_critical_symmetry(d in 1e-8f64..0.5) {
        let a = std_normal_critical(d).unwrap();
        let b = std_normal_critical(1.0 - d).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!((a + b).abs() < 1e-9 * a.max(1.0));
    }
}
