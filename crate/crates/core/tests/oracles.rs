mod common;

use chatterjee_core::estimator::RankData;
use chatterjee_core::model::{builtin_model, JointPmf};
use chatterjee_core::theory::{exact_h_tables, exact_moments, exact_sigma, general_vstat_moments};
use chatterjee_core::vstat::{v_statistic, ConstantKernel, FnKernel, H1Kernel, H2Kernel, Pair};
use common::{naive_sigma, one_dependent_h1_variance, random_pmf, rng};
use serde_json::Value;

/// σ² and its components for `indep_binomial` (10 trials, p = 1/3), computed
/// by a separate nested-sum implementation outside this crate.
const INDEP_BINOMIAL_SIGMA_SQ: f64 = 0.447960879849005;
const INDEP_BINOMIAL_MU1: f64 = 0.3151055558668342;
const INDEP_BINOMIAL_MU2: f64 = 0.15755277793341718;
const INDEP_BINOMIAL_S11: f64 = 0.04991160814057281;
const INDEP_BINOMIAL_S22: f64 = 0.0013582238399996527;
const INDEP_BINOMIAL_S12: f64 = 0.0027164476799994438;

#[test]
fn indep_binomial_golden() {
    let model = builtin_model("indep_binomial", &Value::Null).unwrap();
    let r = exact_sigma(model.pmf().unwrap()).unwrap();
    for (got, want) in [
        (r.sigma_sq, INDEP_BINOMIAL_SIGMA_SQ),
        (r.mu1, INDEP_BINOMIAL_MU1),
        (r.mu2, INDEP_BINOMIAL_MU2),
        (r.sigma1_sq, INDEP_BINOMIAL_S11),
        (r.sigma2_sq, INDEP_BINOMIAL_S22),
        (r.sigma12, INDEP_BINOMIAL_S12),
    ] {
        assert!((got - want).abs() <= 1e-10, "{got} vs {want}");
    }
}

#[test]
fn exact_sigma_matches_naive_enumeration() {
    let mut g = rng(2024);
    for _ in 0..40 {
        let pmf = random_pmf(&mut g, 3, 3);
        let r = exact_sigma(&pmf).unwrap();
        let o = naive_sigma(&pmf);
        for (got, want) in [
            (r.mu1, o.mu1),
            (r.mu2, o.mu2),
            (r.sigma1_sq, o.s11),
            (r.sigma2_sq, o.s22),
            (r.sigma12, o.s12),
            (r.sigma_sq, o.sigma_sq),
        ] {
            assert!((got - want).abs() <= 1e-10, "{got} vs {want} for {pmf:?}");
        }
    }
}

#[test]
fn dependent_three_by_three() {
    // Y depends on X; the variance is checked against the naive oracle and
    // must differ from the independent case.
    let pmf = JointPmf::new(
        vec![0.0, 1.0, 2.0],
        vec![0.0, 1.0, 2.0],
        vec![vec![0.3, 0.1, 0.05], vec![0.05, 0.1, 0.1], vec![0.05, 0.05, 0.2]],
    )
    .unwrap();
    let r = exact_sigma(&pmf).unwrap();
    let o = naive_sigma(&pmf);
    assert!((r.sigma_sq - o.sigma_sq).abs() < 1e-12);
    assert!(r.xi > 0.05);
    assert!((r.xi - r.xi_dss.unwrap()).abs() < 1e-12);
}

#[test]
fn h_tables_mean_identities() {
    // E H₁(Y₁, Y₂ | common x) = 2μ₁ and E H₂(Y) = 3μ₂.
    let mut g = rng(5);
    for _ in 0..30 {
        let pmf = random_pmf(&mut g, 4, 4);
        let t = exact_h_tables(&pmf);
        let m = exact_moments(&pmf).unwrap();
        let py = pmf.marginal_y();
        let k = py.len();
        let e1: f64 = (0..k).flat_map(|a| (0..k).map(move |b| (a, b))).map(|(a, b)| t.pair_law[a][b] * t.h1[a][b]).sum();
        let e2: f64 = (0..k).map(|a| py[a] * t.h2[a]).sum();
        assert!((e1 - 2.0 * m.mu1).abs() < 1e-12);
        assert!((e2 - 3.0 * m.mu2).abs() < 1e-12);
    }
}

#[test]
fn one_dependent_formula_on_binomial() {
    let model = builtin_model("indep_binomial", &Value::Null).unwrap();
    let pmf = model.pmf().unwrap();
    let r = exact_sigma(pmf).unwrap();
    let remark = one_dependent_h1_variance(&pmf.marginal_y());
    assert!((r.sigma1_sq - remark).abs() < 1e-10);
}

#[test]
fn lifted_h2_v_statistic_brute_force() {
    let rd = RankData::from_ordered_y(vec![1.0, 2.0, 3.0, 4.0]);
    let v = v_statistic(&H2Kernel, &rd).unwrap();
    let s = [1.0, 2.0, 3.0];
    let mut brute = 0.0;
    for &a in &s {
        for &b in &s {
            for &c in &s {
                brute += f64::from(u8::from(b >= a && c < a));
            }
        }
    }
    assert_eq!(v.sum, brute);
    assert_eq!(v.value, brute / 27.0);
}

#[test]
fn fast_and_direct_kernels_agree() {
    let mut g = rng(9);
    use rand::Rng;
    for _ in 0..20 {
        let n = g.random_range(3..60);
        let y: Vec<f64> = (0..n).map(|_| f64::from(g.random_range(0u8..5))).collect();
        let rd = RankData::from_ordered_y(y);
        let h1 = FnKernel::new(2, 1.0, |a: &[Pair]| chatterjee_core::vstat::kernel_h1(a[0], a[1]));
        let h2 = FnKernel::new(3, 1.0, |a: &[Pair]| chatterjee_core::vstat::kernel_h2(a[0].0, a[1].0, a[2].0));
        assert_eq!(v_statistic(&H1Kernel, &rd).unwrap().sum, v_statistic(&h1, &rd).unwrap().sum);
        assert_eq!(v_statistic(&H2Kernel, &rd).unwrap().sum, v_statistic(&h2, &rd).unwrap().sum);
        let one = ConstantKernel { value: 1.0, arity: 2 };
        assert_eq!(v_statistic(&one, &rd).unwrap().value, 1.0);
    }
}

#[test]
fn symmetric_kernel_variance_matches_one_dependent_formula() {
    // Symmetrized h₁ has the same projection H as h₁.
    let model = builtin_model("indep_binomial", &serde_json::json!({ "trials": 3, "p": 0.5 })).unwrap();
    let pmf = model.pmf().unwrap();
    let sym = FnKernel::new(2, 1.0, |a: &[Pair]| {
        0.5 * (chatterjee_core::vstat::kernel_h1(a[0], a[1]) + chatterjee_core::vstat::kernel_h1(a[1], a[0]))
    });
    let m = general_vstat_moments(&sym, &model, 4_000, 400, 13).unwrap();
    let want = one_dependent_h1_variance(&pmf.marginal_y());
    assert!(
        (m.sigma_h_sq - want).abs() <= 4.0 * m.sigma_h_sq_se,
        "{} ± {} vs {want}",
        m.sigma_h_sq,
        m.sigma_h_sq_se
    );
}
