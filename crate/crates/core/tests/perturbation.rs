//! Partial-fraction algebra and perturbation checks.

use proptest::prelude::*;
use slmap_core::partial_fraction::{build_mn, hat_mn};
use slmap_core::perturbation::*;
use slmap_core::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Model with a double eigenvalue at 1 followed by a simple tail.
fn double_model() -> Data {
    let mut lambdas = vec![c(1.0, 0.0), c(1.0, 0.0)];
    let mut weyl = vec![c(-0.25, 0.1), c(0.5, -0.2)];
    for n in 2..40usize {
        lambdas.push(c((n * n) as f64, 0.0));
        weyl.push(c(2.0 / std::f64::consts::PI, 0.0));
    }
    let mut d = Data::simple(BcKind::Robin, lambdas, weyl);
    d.block_ids[1] = 0;
    d.stabilization_index = Some(1);
    d.radius = Some(2.5);
    d
}

fn geometric_tail(m: usize, l: C64, l0: C64, lt: C64) -> C64 {
    let mut acc = c(0.0, 0.0);
    for s in 0..=2 * (m - 1) {
        acc += (lt - l0).powu(s as u32) / (l - l0).powu(s as u32 + 1);
    }
    let p = 2 * m as u32 - 1;
    acc + (lt - l0).powu(p) / ((l - l0).powu(p) * (l - lt))
}

proptest! {
    #[test]
    fn expansion_of_simple_pole_around_cluster_center(
        theta in 0.0f64..6.28, r in 0.0f64..0.4, phi in 0.0f64..6.28, m in 2usize..4,
    ) {
        let l0 = c(0.3, -0.2);
        let l = l0 + C64::from_polar(1.0, theta);
        let lt = l0 + C64::from_polar(r, phi);
        let lhs = 1.0 / (l - lt);
        prop_assert!((geometric_tail(m, l, l0, lt) - lhs).norm() <= 1e-12 * lhs.norm());
    }
}

#[test]
fn split_family_difference_matches_grouped_form() {
    let model = double_model();
    let (t, _) = split_double(&model, 0, 1e-3).unwrap();
    let hat = hat_mn(&build_mn(&model, 1).unwrap(), &build_mn(&t, 1).unwrap());
    let l0 = model.lambdas[0];
    for theta in [0.1, 1.7, 3.0, 4.4] {
        let l = C64::from_polar(2.5, theta);
        let mut grouped = c(0.0, 0.0);
        for s in 0..=2u32 {
            let mom: C64 = (0..2).map(|j| t.weyl[j] * (t.lambdas[j] - l0).powu(s)).sum();
            let base = if s < 2 { model.weyl[s as usize] } else { c(0.0, 0.0) };
            grouped += (mom - base) / (l - l0).powu(s + 1);
        }
        for j in 0..2 {
            grouped += t.weyl[j] * (t.lambdas[j] - l0).powu(3) / ((l - l0).powu(3) * (l - t.lambdas[j]));
        }
        let direct = hat.eval(l);
        assert!((direct - grouped).norm() <= 1e-12 * direct.norm().max(1e-3));
    }
}

#[test]
fn theorem2_bounds_contour_supremum_linearly() {
    let model = double_model();
    let mut ratios = Vec::new();
    for delta in [1e-2, 1e-3, 1e-4] {
        let (t, _) = split_double(&model, 0, delta).unwrap();
        let rep = check_theorem2(&model, &t, 1, delta, 10.0).unwrap();
        assert!(rep.pass(), "{}", rep.to_text());
        let (m, _) = check_theorem1(&model, &t, 1, 2.5, delta, 256).unwrap();
        ratios.push(m.contour_sup / delta);
    }
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
    assert!(hi / lo <= 3.0, "{ratios:?}");
}

#[test]
fn split_moments_are_exact_for_any_delta() {
    let model = double_model();
    for delta in [1e-1, 1e-4, 1e-8] {
        let (t, p) = split_double(&model, 0, delta).unwrap();
        assert_eq!(p.a, model.weyl[1] / 2.0);
        let m0 = t.weyl[0] + t.weyl[1];
        let m1 = t.weyl[0] * (t.lambdas[0] - model.lambdas[0]) + t.weyl[1] * (t.lambdas[1] - model.lambdas[0]);
        assert!((m0 - model.weyl[0]).norm() < 1e-12);
        assert!((m1 - model.weyl[1]).norm() < 1e-12);
    }
}

#[test]
fn tail_generator_norm_is_recomputed_exactly() {
    let model = double_model();
    let t = perturb_simple_tail(&model, 1, 1e-3, 42, false);
    let (m, rep) = check_theorem1(&model, &t, 1, 2.5, 1e-3 * 1.3, 256).unwrap();
    let mut direct = 0.0;
    for p in 2..model.len() {
        let n = p as f64;
        let xi = (model.lambdas[p].sqrt() - t.lambdas[p].sqrt()).norm() + (model.weyl[p] - t.weyl[p]).norm();
        direct += (n * xi).powi(2);
    }
    assert!((m.tail_norm - direct.sqrt()).abs() < 1e-15);
    assert!(m.tail_norm <= 1e-3 * 1.2825);
    assert_eq!(m.contour_sup, 0.0);
    assert!(rep.pass());
    for (x, k) in m.xi.iter().zip(&m.chi) {
        assert!(x * k == 0.0 || x * k == 1.0 || (x * k - 1.0).abs() < 1e-15);
    }
}

#[test]
fn condition_report_text_has_one_record_per_line() {
    let model = double_model();
    let (t, _) = split_double(&model, 0, 1e-3).unwrap();
    let rep = check_theorem2(&model, &t, 1, 1e-3, 10.0).unwrap();
    let text = rep.to_text();
    assert_eq!(text.lines().count(), rep.records.len() + 1);
    assert!(text.lines().nth(1).unwrap().split_whitespace().count() == 4);
}
