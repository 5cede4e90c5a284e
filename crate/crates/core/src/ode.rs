//! Initial-value machinery: the solution `φ(x, λ)` and its normalized
//! λ-derivatives, the Weyl solution `Φ(x, λ)`, the characteristic function and
//! the kernel `D(x, λ, ξ) = ∫₀ˣ φ(t, λ) φ(t, ξ) dt`.
//!
//! All solutions are produced by the same fixed-step classical RK4 scheme on
//! the refined potential lattice of [`BoundaryProblem`], so traces computed
//! for different spectral parameters are mutually consistent.

use num_complex::Complex;

use crate::error::{Result, SlError};
use crate::problem::{BcKind, BoundaryProblem};
use crate::scalar::{is_finite, Real};

/// `φ(x, λ)` (order 0) or `(1/ν!) ∂^ν_λ φ(x, λ)` on the x-grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionTrace<T: Real> {
    pub lambda: Complex<T>,
    pub values: Vec<Complex<T>>,
    pub derivatives: Vec<Complex<T>>,
    pub lambda_order: usize,
}

/// The Weyl solution on the x-grid together with `M(λ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeylTrace<T: Real> {
    pub lambda: Complex<T>,
    pub values: Vec<Complex<T>>,
    pub derivatives: Vec<Complex<T>>,
    pub m_value: Complex<T>,
}

/// Which fundamental solution to start from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Start {
    /// `φ`: satisfies the left boundary condition.
    Phi,
    /// The complementary solution with unit Wronskian against `φ` (Robin) or
    /// the cosine-type solution (Dirichlet).
    Complement,
}

pub(crate) fn initial_pair<T: Real>(problem: &BoundaryProblem<T>, start: Start) -> (Complex<T>, Complex<T>) {
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    match (problem.bc_kind(), start) {
        (BcKind::Robin, Start::Phi) => (one, problem.h()),
        (BcKind::Robin, Start::Complement) => (zero, one),
        (BcKind::Dirichlet, Start::Phi) => (zero, one),
        (BcKind::Dirichlet, Start::Complement) => (one, zero),
    }
}

fn non_finite<T: Real>(lambda: Complex<T>) -> SlError {
    SlError::NonFiniteState {
        re: lambda.re.as_f64(),
        im: lambda.im.as_f64(),
    }
}

/// Integrates `y' = f(q(x), y)` from `0` to `x_end` with fixed RK4 steps.
///
/// `rhs` receives the half-substep lattice index of the evaluation point (or
/// `None` for the final partial step when `x_end` is off the lattice), the
/// potential value there, the state and the output slice. `record` is called
/// with the state at every grid point reached.
pub(crate) fn integrate<T, F, R>(
    problem: &BoundaryProblem<T>,
    y0: &[Complex<T>],
    x_end: T,
    lambda: Complex<T>,
    mut rhs: F,
    mut record: R,
) -> Result<Vec<Complex<T>>>
where
    T: Real,
    F: FnMut(Option<usize>, Complex<T>, &[Complex<T>], &mut [Complex<T>]),
    R: FnMut(usize, &[Complex<T>]),
{
    let dim = y0.len();
    let zero = Complex::new(T::zero(), T::zero());
    let mut y = y0.to_vec();
    let mut k1 = vec![zero; dim];
    let mut k2 = vec![zero; dim];
    let mut k3 = vec![zero; dim];
    let mut k4 = vec![zero; dim];
    let mut tmp = vec![zero; dim];

    let h = problem.substep();
    let refine = problem.refinement();
    let total = refine * (problem.grid_size() - 1);
    let x_end = x_end.max(T::zero()).min(T::PI());
    let full = if x_end >= T::PI() {
        total
    } else {
        ((x_end / h) * (T::one() + T::epsilon() * T::lit(8.0))).floor().to_usize().unwrap_or(0).min(total)
    };
    let q = problem.q_fine();
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let two = T::lit(2.0);

    record(0, &y);
    for step in 0..full {
        let base = 2 * step;
        rhs(Some(base), q[base], &y, &mut k1);
        for i in 0..dim {
            tmp[i] = y[i] + k1[i] * (h * half);
        }
        rhs(Some(base + 1), q[base + 1], &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + k2[i] * (h * half);
        }
        rhs(Some(base + 1), q[base + 1], &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + k3[i] * h;
        }
        rhs(Some(base + 2), q[base + 2], &tmp, &mut k4);
        for i in 0..dim {
            y[i] += (k1[i] + (k2[i] + k3[i]) * two + k4[i]) * (h * sixth);
        }
        if (step + 1) % refine == 0 {
            if !y.iter().all(|&z| is_finite(z)) {
                return Err(non_finite(lambda));
            }
            record((step + 1) / refine, &y);
        }
    }

    let t = h * T::from_usize_lossy(full);
    let rest = x_end - t;
    if full < total && rest > h * T::lit(1e-12) {
        let q0 = problem.q_at(t);
        let qm = problem.q_at(t + rest * half);
        let q1 = problem.q_at(x_end);
        rhs(None, q0, &y, &mut k1);
        for i in 0..dim {
            tmp[i] = y[i] + k1[i] * (rest * half);
        }
        rhs(None, qm, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + k2[i] * (rest * half);
        }
        rhs(None, qm, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + k3[i] * rest;
        }
        rhs(None, q1, &tmp, &mut k4);
        for i in 0..dim {
            y[i] += (k1[i] + (k2[i] + k3[i]) * two + k4[i]) * (rest * sixth);
        }
    }
    if !y.iter().all(|&z| is_finite(z)) {
        return Err(non_finite(lambda));
    }
    Ok(y)
}

/// Right-hand side of the normalized variational chain
/// `-u_ν'' + q u_ν = λ u_ν + u_{ν-1}` in first-order form.
#[inline]
fn chain_rhs<T: Real>(lambda: Complex<T>, q: Complex<T>, y: &[Complex<T>], dy: &mut [Complex<T>]) {
    let orders = y.len() / 2;
    let ql = q - lambda;
    for nu in 0..orders {
        dy[2 * nu] = y[2 * nu + 1];
        let mut acc = ql * y[2 * nu];
        if nu > 0 {
            acc -= y[2 * nu - 2];
        }
        dy[2 * nu + 1] = acc;
    }
}

fn chain_initial<T: Real>(problem: &BoundaryProblem<T>, nu_max: usize, start: Start) -> Vec<Complex<T>> {
    let zero = Complex::new(T::zero(), T::zero());
    let mut y0 = vec![zero; 2 * (nu_max + 1)];
    let (a, b) = initial_pair(problem, start);
    y0[0] = a;
    y0[1] = b;
    y0
}

/// `φ(·, λ)` and its normalized λ-derivatives of orders `0..=nu_max` on the grid.
pub fn integrate_phi<T: Real>(
    problem: &BoundaryProblem<T>,
    lambda: Complex<T>,
    nu_max: usize,
) -> Result<Vec<SolutionTrace<T>>> {
    integrate_chain(problem, lambda, nu_max, Start::Phi)
}

pub(crate) fn integrate_chain<T: Real>(
    problem: &BoundaryProblem<T>,
    lambda: Complex<T>,
    nu_max: usize,
    start: Start,
) -> Result<Vec<SolutionTrace<T>>> {
    let n = problem.grid_size();
    let zero = Complex::new(T::zero(), T::zero());
    let mut traces: Vec<SolutionTrace<T>> = (0..=nu_max)
        .map(|nu| SolutionTrace {
            lambda,
            values: vec![zero; n],
            derivatives: vec![zero; n],
            lambda_order: nu,
        })
        .collect();
    let y0 = chain_initial(problem, nu_max, start);
    integrate(
        problem,
        &y0,
        T::PI(),
        lambda,
        |_, q, y, dy| chain_rhs(lambda, q, y, dy),
        |i, y| {
            for (nu, tr) in traces.iter_mut().enumerate() {
                tr.values[i] = y[2 * nu];
                tr.derivatives[i] = y[2 * nu + 1];
            }
        },
    )?;
    Ok(traces)
}

/// Values `(u_ν(π), u_ν'(π))` of the normalized chain, without grid output.
pub(crate) fn chain_at_end<T: Real>(
    problem: &BoundaryProblem<T>,
    lambda: Complex<T>,
    nu_max: usize,
    start: Start,
) -> Result<Vec<(Complex<T>, Complex<T>)>> {
    let y0 = chain_initial(problem, nu_max, start);
    let y = integrate(problem, &y0, T::PI(), lambda, |_, q, y, dy| chain_rhs(lambda, q, y, dy), |_, _| {})?;
    Ok((0..=nu_max).map(|nu| (y[2 * nu], y[2 * nu + 1])).collect())
}

/// Right boundary functional applied to a solution's endpoint values.
#[inline]
pub(crate) fn right_functional<T: Real>(problem: &BoundaryProblem<T>, value: Complex<T>, deriv: Complex<T>) -> Complex<T> {
    match problem.bc_kind() {
        BcKind::Robin => deriv + problem.big_h() * value,
        BcKind::Dirichlet => value,
    }
}

/// Characteristic function: `φ'(π, λ) + H φ(π, λ)` (Robin) or the sine-type
/// solution at `π` (Dirichlet). Its zeros are the eigenvalues.
pub fn characteristic<T: Real>(problem: &BoundaryProblem<T>, lambda: Complex<T>) -> Result<Complex<T>> {
    Ok(characteristic_series(problem, lambda, 0)?[0])
}

/// Taylor coefficients `(1/ν!) ∂^ν_λ Δ(λ)` for `ν = 0..=order`.
pub fn characteristic_series<T: Real>(
    problem: &BoundaryProblem<T>,
    lambda: Complex<T>,
    order: usize,
) -> Result<Vec<Complex<T>>> {
    let ends = chain_at_end(problem, lambda, order, Start::Phi)?;
    Ok(ends.into_iter().map(|(v, d)| right_functional(problem, v, d)).collect())
}

/// Threshold below which `|Δ(λ)|` is treated as a pole of the Weyl function.
pub(crate) fn near_eigenvalue_threshold<T: Real>(problem: &BoundaryProblem<T>, lambda: Complex<T>) -> T {
    match problem.bc_kind() {
        BcKind::Robin => T::lit(1e-9),
        BcKind::Dirichlet => T::lit(1e-9) / (T::one() + lambda.norm()),
    }
}

/// The Weyl function `M(λ)` alone (no grid output).
pub fn weyl_function<T: Real>(problem: &BoundaryProblem<T>, lambda: Complex<T>) -> Result<Complex<T>> {
    let phi = chain_at_end(problem, lambda, 0, Start::Phi)?[0];
    let comp = chain_at_end(problem, lambda, 0, Start::Complement)?[0];
    weyl_from_ends(problem, lambda, phi, comp)
}

fn weyl_from_ends<T: Real>(
    problem: &BoundaryProblem<T>,
    lambda: Complex<T>,
    phi: (Complex<T>, Complex<T>),
    comp: (Complex<T>, Complex<T>),
) -> Result<Complex<T>> {
    let delta = right_functional(problem, phi.0, phi.1);
    if delta.norm() < near_eigenvalue_threshold(problem, lambda) {
        return Err(SlError::NearEigenvalue {
            re: lambda.re.as_f64(),
            im: lambda.im.as_f64(),
            modulus: delta.norm().as_f64(),
        });
    }
    Ok(-right_functional(problem, comp.0, comp.1) / delta)
}

/// The Weyl solution `Φ(·, λ)` and `M(λ)`.
///
/// Robin: `Φ = S + M φ`, so `Φ'(0) - hΦ(0) = 1`, `Φ'(π) + HΦ(π) = 0` and
/// `M = Φ(0)`. Dirichlet: `Φ = C + M S`, so `Φ(0) = 1`, `Φ(π) = 0` and
/// `M = Φ'(0)`.
pub fn integrate_weyl<T: Real>(problem: &BoundaryProblem<T>, lambda: Complex<T>) -> Result<WeylTrace<T>> {
    let phi = integrate_chain(problem, lambda, 0, Start::Phi)?.remove(0);
    let comp = integrate_chain(problem, lambda, 0, Start::Complement)?.remove(0);
    let last = problem.grid_size() - 1;
    let m = weyl_from_ends(
        problem,
        lambda,
        (phi.values[last], phi.derivatives[last]),
        (comp.values[last], comp.derivatives[last]),
    )?;
    let values = comp.values.iter().zip(&phi.values).map(|(&s, &p)| s + m * p).collect();
    let derivatives = comp.derivatives.iter().zip(&phi.derivatives).map(|(&s, &p)| s + m * p).collect();
    Ok(WeylTrace {
        lambda,
        values,
        derivatives,
        m_value: m,
    })
}

/// `|λ - ξ|` below which `D(x, λ, ξ)` is evaluated through its integral form.
pub fn merge_threshold<T: Real>(lambda: Complex<T>, xi: Complex<T>) -> T {
    T::lit(1e-4) * (T::one() + lambda.norm().max(xi.norm()))
}

/// `[φ(x,λ)φ'(x,ξ) - φ'(x,λ)φ(x,ξ)] / (λ - ξ)`.
#[inline]
pub(crate) fn difference_quotient<T: Real>(
    lambda: Complex<T>,
    xi: Complex<T>,
    phi_l: Complex<T>,
    dphi_l: Complex<T>,
    phi_x: Complex<T>,
    dphi_x: Complex<T>,
) -> Complex<T> {
    (phi_l * dphi_x - dphi_l * phi_x) / (lambda - xi)
}

/// Joint integration of `φ(·, λ)`, `φ(·, ξ)` and `∫₀ˣ φ(t,λ)φ(t,ξ) dt`.
///
/// Returns the state at `x_end` as `[φ_λ, φ_λ', φ_ξ, φ_ξ', I]`, and fills
/// `cumulative` with `I` on the grid if provided.
pub(crate) fn integrate_pair<T: Real>(
    problem: &BoundaryProblem<T>,
    lambda: Complex<T>,
    xi: Complex<T>,
    x_end: T,
    mut cumulative: Option<&mut Vec<Complex<T>>>,
) -> Result<Vec<Complex<T>>> {
    let (a, b) = initial_pair(problem, Start::Phi);
    let zero = Complex::new(T::zero(), T::zero());
    let y0 = [a, b, a, b, zero];
    integrate(
        problem,
        &y0,
        x_end,
        lambda,
        |_, q, y, dy| {
            dy[0] = y[1];
            dy[1] = (q - lambda) * y[0];
            dy[2] = y[3];
            dy[3] = (q - xi) * y[2];
            dy[4] = y[0] * y[2];
        },
        |i, y| {
            if let Some(out) = cumulative.as_deref_mut() {
                out[i] = y[4];
            }
        },
    )
}

/// Cumulative `∫₀ˣ φ(t,λ)φ(t,ξ) dt` on the grid.
pub(crate) fn pair_integral_trace<T: Real>(
    problem: &BoundaryProblem<T>,
    lambda: Complex<T>,
    xi: Complex<T>,
) -> Result<Vec<Complex<T>>> {
    let mut out = vec![Complex::new(T::zero(), T::zero()); problem.grid_size()];
    integrate_pair(problem, lambda, xi, T::PI(), Some(&mut out))?;
    Ok(out)
}

/// The kernel `D(x, λ, ξ)` at an arbitrary `x ∈ [0, π]`.
pub fn kernel_d<T: Real>(problem: &BoundaryProblem<T>, x: T, lambda: Complex<T>, xi: Complex<T>) -> Result<Complex<T>> {
    let y = integrate_pair(problem, lambda, xi, x, None)?;
    if (lambda - xi).norm() >= merge_threshold(lambda, xi) {
        Ok(difference_quotient(lambda, xi, y[0], y[1], y[2], y[3]))
    } else {
        Ok(y[4])
    }
}

/// Both branches of `D` at `x`: `(difference quotient, integral)`.
pub fn kernel_d_branches<T: Real>(
    problem: &BoundaryProblem<T>,
    x: T,
    lambda: Complex<T>,
    xi: Complex<T>,
) -> Result<(Complex<T>, Complex<T>)> {
    let y = integrate_pair(problem, lambda, xi, x, None)?;
    Ok((difference_quotient(lambda, xi, y[0], y[1], y[2], y[3]), y[4]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    type C = Complex<f64>;

    fn zero_robin(n: usize) -> BoundaryProblem<f64> {
        BoundaryProblem::robin(vec![C::default(); n], C::default(), C::default()).unwrap()
    }

    fn zero_dirichlet(n: usize) -> BoundaryProblem<f64> {
        BoundaryProblem::dirichlet(vec![C::default(); n]).unwrap()
    }

    #[test]
    fn phi_is_cosine_for_zero_potential() {
        let p = zero_robin(257);
        let tr = integrate_phi(&p, C::new(4.0, 0.0), 0).unwrap().remove(0);
        assert_eq!(tr.values[0], C::new(1.0, 0.0));
        assert_eq!(tr.derivatives[0], C::new(0.0, 0.0));
        for (i, x) in p.grid().into_iter().enumerate() {
            assert!((tr.values[i] - C::new((2.0 * x).cos(), 0.0)).norm() < 1e-8);
            assert!((tr.derivatives[i] - C::new(-2.0 * (2.0 * x).sin(), 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn phi_is_constant_at_zero_lambda() {
        let p = zero_robin(65);
        let tr = integrate_phi(&p, C::default(), 0).unwrap().remove(0);
        for i in 0..p.grid_size() {
            assert!((tr.values[i] - C::new(1.0, 0.0)).norm() < 1e-14);
            assert!(tr.derivatives[i].norm() < 1e-14);
        }
    }

    #[test]
    fn first_lambda_derivative_matches_finite_difference() {
        let p = zero_robin(257);
        let tr = integrate_phi(&p, C::new(1.0, 0.0), 1).unwrap();
        assert_eq!(tr[1].values[0], C::default());
        assert_eq!(tr[1].derivatives[0], C::default());
        let eps = 1e-6_f64;
        for (i, x) in p.grid().into_iter().enumerate() {
            let fd = (((1.0 + eps).sqrt() * x).cos() - ((1.0 - eps).sqrt() * x).cos()) / (2.0 * eps);
            let exact = -0.5 * x * x.sin();
            assert!((fd - exact).abs() < 1e-8);
            assert!((tr[1].values[i].re - fd).abs() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn dirichlet_phi_starts_sine_type() {
        let p = zero_dirichlet(129);
        let tr = integrate_phi(&p, C::new(9.0, 0.0), 2).unwrap();
        assert_eq!(tr[0].values[0], C::default());
        assert_eq!(tr[0].derivatives[0], C::new(1.0, 0.0));
        for nu in 1..3 {
            assert_eq!(tr[nu].values[0], C::default());
            assert_eq!(tr[nu].derivatives[0], C::default());
        }
        let x = p.x(40);
        assert!((tr[0].values[40].re - (3.0 * x).sin() / 3.0).abs() < 1e-8);
    }

    #[test]
    fn characteristic_closed_forms() {
        let p = zero_robin(257);
        let d = characteristic(&p, C::new(2.25, 0.0)).unwrap();
        assert!((d - C::new(1.5, 0.0)).norm() < 1e-8);
        for n in 0..5 {
            let d = characteristic(&p, C::new((n * n) as f64, 0.0)).unwrap();
            assert!(d.norm() < 1e-8, "n = {n}: {d}");
        }
        let pd = zero_dirichlet(257);
        assert!(characteristic(&pd, C::new(4.0, 0.0)).unwrap().norm() < 1e-9);
        let d = characteristic(&pd, C::new(2.25, 0.0)).unwrap();
        assert!((d.re - (1.5 * PI).sin() / 1.5).abs() < 1e-9);
    }

    #[test]
    fn weyl_closed_forms() {
        let p = zero_robin(257);
        let w = integrate_weyl(&p, C::new(0.25, 0.0)).unwrap();
        assert!(w.m_value.norm() < 1e-9);
        let lam = C::new(2.0, 1.0);
        let w = integrate_weyl(&p, lam).unwrap();
        let rho = lam.sqrt();
        let exact = (rho * PI).cos() / (rho * PI).sin() / rho;
        assert!((w.m_value - exact).norm() < 1e-8);
        // Boundary identities of the Weyl solution.
        let last = p.grid_size() - 1;
        assert!((w.derivatives[0] - p.h() * w.values[0] - C::new(1.0, 0.0)).norm() < 1e-12);
        assert!((w.derivatives[last] + p.big_h() * w.values[last]).norm() < 1e-9);
        assert_eq!(w.m_value, w.values[0]);

        let pd = zero_dirichlet(257);
        let w = integrate_weyl(&pd, C::new(0.25, 0.0)).unwrap();
        assert!(w.m_value.norm() < 1e-9);
        assert!((w.values[0] - C::new(1.0, 0.0)).norm() < 1e-14);
        assert!(w.values[last].norm() < 1e-9);
        assert_eq!(w.m_value, w.derivatives[0]);
    }

    #[test]
    fn weyl_rejects_eigenvalue() {
        let p = zero_robin(257);
        assert!(matches!(
            integrate_weyl(&p, C::new(1.0, 0.0)),
            Err(SlError::NearEigenvalue { .. })
        ));
    }

    #[test]
    fn kernel_closed_forms() {
        let p = zero_robin(257);
        let (rho, theta) = (1.7_f64, 0.6_f64);
        let x = 2.0;
        let d = kernel_d(&p, x, C::new(rho * rho, 0.0), C::new(theta * theta, 0.0)).unwrap();
        let exact = ((rho - theta) * x).sin() / (2.0 * (rho - theta)) + ((rho + theta) * x).sin() / (2.0 * (rho + theta));
        assert!((d.re - exact).abs() < 1e-8);
        let d0 = kernel_d(&p, 1.3, C::default(), C::default()).unwrap();
        assert!((d0 - C::new(1.3, 0.0)).norm() < 1e-12);
        let dz = kernel_d(&p, 0.0, C::new(3.0, 1.0), C::new(-2.0, 0.5)).unwrap();
        assert_eq!(dz, C::default());
    }

    #[test]
    fn non_finite_potential_is_rejected_at_construction() {
        let mut q = vec![C::default(); 40];
        q[3] = C::new(f64::NAN, 0.0);
        assert!(BoundaryProblem::robin(q, C::default(), C::default()).is_err());
    }

    #[test]
    fn huge_lambda_overflows_to_error() {
        let p = zero_robin(33);
        let r = integrate_phi(&p, C::new(0.0, 1e300), 0);
        assert!(matches!(r, Err(SlError::NonFiniteState { .. })));
    }

    #[test]
    fn works_in_single_precision() {
        let p = BoundaryProblem::<f32>::robin(vec![Complex::default(); 129], Complex::default(), Complex::default()).unwrap();
        let tr = integrate_phi(&p, Complex::new(4.0f32, 0.0), 0).unwrap().remove(0);
        let x = p.x(100);
        assert!((tr.values[100].re - (2.0 * x).cos()).abs() < 1e-4);
    }
}
