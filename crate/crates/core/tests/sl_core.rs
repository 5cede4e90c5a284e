//! Invariants of the solution machinery and the kernel `D`.

use std::f64::consts::PI;

use proptest::prelude::*;
use slmap_core::ode::{characteristic, integrate_phi, integrate_weyl, kernel_d, kernel_d_branches, merge_threshold};
use slmap_core::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn smooth(n: usize) -> Problem {
    Problem::from_fn(n, |x| c(x.sin(), 0.5 * x.cos()), c(0.3, -0.2), c(0.1, 0.4), BcKind::Robin).unwrap()
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

#[test]
fn solution_trace_initial_data() {
    let p = smooth(65);
    let tr = integrate_phi(&p, c(2.0, 1.0), 3).unwrap();
    assert_eq!(tr[0].values[0], c(1.0, 0.0));
    assert_eq!(tr[0].derivatives[0], p.h());
    for t in &tr[1..] {
        assert_eq!(t.values[0], c(0.0, 0.0));
        assert_eq!(t.derivatives[0], c(0.0, 0.0));
    }
}

#[test]
fn weyl_trace_boundary_conditions() {
    let p = smooth(257);
    let w = integrate_weyl(&p, c(2.5, 0.7)).unwrap();
    let last = p.grid_size() - 1;
    assert!((w.derivatives[0] - p.h() * w.values[0] - 1.0).norm() < 1e-12);
    assert!((w.derivatives[last] + p.big_h() * w.values[last]).norm() < 1e-9);
    assert_eq!(w.m_value, w.values[0]);

    let d = Problem::from_fn(257, |x| c(x.cos(), 0.2), c(0.0, 0.0), c(0.0, 0.0), BcKind::Dirichlet).unwrap();
    let w = integrate_weyl(&d, c(2.5, 0.7)).unwrap();
    assert!((w.values[0] - 1.0).norm() < 1e-14);
    assert!(w.values[last].norm() < 1e-9);
    assert_eq!(w.m_value, w.derivatives[0]);
}

#[test]
fn kernel_vanishes_at_origin() {
    let p = smooth(65);
    assert_eq!(kernel_d(&p, 0.0, c(3.0, 1.0), c(-2.0, 0.5)).unwrap(), c(0.0, 0.0));
    assert_eq!(kernel_d(&p, 0.0, c(3.0, 1.0), c(3.0, 1.0)).unwrap(), c(0.0, 0.0));
}

#[test]
fn kernel_branches_agree_near_threshold() {
    let p = smooth(1025);
    for (lambda, dir) in [(c(2.0, 0.5), c(1.0, 0.0)), (c(-3.0, 4.0), c(0.6, 0.8)), (c(10.0, 0.0), c(0.0, 1.0))] {
        let thr = merge_threshold(lambda, lambda);
        for f in [1.0, 3.0, 10.0] {
            let xi = lambda + dir * (thr * f);
            for x in [1.0, 2.0, PI] {
                let (dq, int) = kernel_d_branches(&p, x, lambda, xi).unwrap();
                assert!(rel(dq, int) < 1e-8, "{lambda} {f} {x}: {dq} vs {int}");
            }
        }
    }
}

#[test]
fn kernel_x_derivative_is_product_of_solutions() {
    let p = smooth(1025);
    let (l, xi) = (c(3.0, 1.0), c(-1.0, 2.0));
    let e = 1e-6;
    let tl = integrate_phi(&p, l, 0).unwrap().remove(0);
    let tx = integrate_phi(&p, xi, 0).unwrap().remove(0);
    for i in [1, 400, 1000] {
        let x = p.x(i);
        let fd = (kernel_d(&p, x + e, l, xi).unwrap() - kernel_d(&p, x - e, l, xi).unwrap()) / (2.0 * e);
        assert!((fd - tl.values[i] * tx.values[i]).norm() < 1e-6);
    }
}

#[test]
fn wronskian_identity_for_separated_parameters() {
    let p = smooth(1025);
    let (l, xi) = (c(5.0, -1.0), c(0.5, 2.0));
    let tl = integrate_phi(&p, l, 0).unwrap().remove(0);
    let tx = integrate_phi(&p, xi, 0).unwrap().remove(0);
    for i in [100, 512, 1024] {
        let d = kernel_d(&p, p.x(i), l, xi).unwrap();
        let w = tl.values[i] * tx.derivatives[i] - tl.derivatives[i] * tx.values[i];
        assert!(((l - xi) * d - w).norm() < 1e-9);
    }
}

#[test]
fn variational_chain_matches_finite_differences() {
    let p = smooth(513);
    for l in [c(1.0, 0.0), c(7.0, 2.0), c(-4.0, 0.5)] {
        let e = 1e-6 * l.norm().max(1.0);
        let tr = integrate_phi(&p, l, 1).unwrap();
        let plus = integrate_phi(&p, l + e, 0).unwrap().remove(0);
        let minus = integrate_phi(&p, l - e, 0).unwrap().remove(0);
        let scale = tr[1].values.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        for i in (0..p.grid_size()).step_by(32) {
            let fd = (plus.values[i] - minus.values[i]) / (2.0 * e);
            assert!((fd - tr[1].values[i]).norm() <= 1e-7 * scale, "{l} {i}");
        }
    }
}

#[test]
fn first_variational_trace_matches_closed_form() {
    let p = Problem::from_fn(257, |_| c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), BcKind::Robin).unwrap();
    let tr = integrate_phi(&p, c(1.0, 0.0), 1).unwrap();
    for i in 0..p.grid_size() {
        let x = p.x(i);
        assert!((tr[1].values[i] - c(-0.5 * x * x.sin(), 0.0)).norm() < 1e-8);
    }
}

#[test]
fn integration_error_is_fourth_order() {
    // q ≡ 0 so the exact value cos(ρπ) is known.
    let lambda = c(30.25, 3.0);
    let rho = lambda.sqrt();
    let exact = (rho * PI).cos();
    let err = |n: usize| {
        let p = Problem::with_refinement(vec![c(0.0, 0.0); n], c(0.0, 0.0), c(0.0, 0.0), BcKind::Robin, 1).unwrap();
        let tr = integrate_phi(&p, lambda, 0).unwrap().remove(0);
        (tr.values[n - 1] - exact).norm()
    };
    let (e1, e2) = (err(65), err(129));
    assert!(e1 / e2 >= 16.0 * 0.9, "ratio {}", e1 / e2);
}

#[test]
fn characteristic_closed_forms() {
    let p = Problem::from_fn(1025, |_| c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), BcKind::Robin).unwrap();
    assert!((characteristic(&p, c(2.25, 0.0)).unwrap() - c(1.5, 0.0)).norm() < 1e-9);
    let d = Problem::from_fn(1025, |_| c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), BcKind::Dirichlet).unwrap();
    assert!(characteristic(&d, c(4.0, 0.0)).unwrap().norm() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]
    #[test]
    fn kernel_is_symmetric(
        r1 in 0.0f64..100.0, t1 in 0.0f64..(2.0 * PI),
        r2 in 0.0f64..100.0, t2 in 0.0f64..(2.0 * PI),
        x in 0.0f64..PI,
    ) {
        let p = smooth(65);
        let (l, xi) = (C64::from_polar(r1, t1), C64::from_polar(r2, t2));
        let a = kernel_d(&p, x, l, xi).unwrap();
        let b = kernel_d(&p, x, xi, l).unwrap();
        prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(1e-300));
    }
}
