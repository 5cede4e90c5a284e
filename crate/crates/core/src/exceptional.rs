//! Search for a potential `q = c·w(x)` with a double eigenvalue (an
//! exceptional point of the family), used to manufacture models with a
//! multiple eigenvalue.

use num_complex::Complex;

use crate::error::{Result, SlError};
use crate::ode::{characteristic, initial_pair, integrate, right_functional, Start};
use crate::problem::{BcKind, BoundaryProblem};
use crate::quadrature::winding_number;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct DoubleSearch<T: Real> {
    pub lambda0: Complex<T>,
    pub c0: Complex<T>,
    pub max_iter: usize,
    /// Radius of the circle on which the multiplicity is certified.
    pub isolation_radius: T,
}

impl<T: Real> Default for DoubleSearch<T> {
    fn default() -> Self {
        Self {
            lambda0: Complex::new(T::zero(), T::zero()),
            c0: Complex::new(T::zero(), T::one()),
            max_iter: 60,
            isolation_radius: T::lit(0.1),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DoubleCertificate<T: Real> {
    pub lambda: Complex<T>,
    pub c: Complex<T>,
    /// `|Δ(λ)|`
    pub delta: T,
    /// `|∂_λ Δ(λ)|`
    pub delta_1: T,
    /// `|∂²_λ Δ(λ)|`
    pub delta_2: T,
    pub winding: i64,
    pub iterations: usize,
}

impl<T: Real> DoubleCertificate<T> {
    pub fn holds(&self) -> bool {
        self.delta <= T::lit(1e-9) && self.delta_1 <= T::lit(1e-8) && self.delta_2 >= T::lit(1e-4) && self.winding == 2
    }
}

/// `Δ, Δ_λ, Δ_c, Δ_λλ, Δ_λc` (plain derivatives) for `q = c·w`.
///
/// `shape` holds `w` as its potential, so the integrator's potential argument
/// is `w(x)` and the spline of `c·w` is `c` times the spline of `w`.
fn derivatives<T: Real>(shape: &BoundaryProblem<T>, lambda: Complex<T>, c: Complex<T>) -> Result<[Complex<T>; 5]> {
    let zero = Complex::new(T::zero(), T::zero());
    let (a, b) = initial_pair(shape, Start::Phi);
    // y, y_λ, y_c, y_λλ, y_λc, each with its x-derivative.
    let y0 = [a, b, zero, zero, zero, zero, zero, zero, zero, zero];
    let two = T::lit(2.0);
    let y = integrate(
        shape,
        &y0,
        T::PI(),
        lambda,
        |_, w, y, dy| {
            let k = c * w - lambda;
            dy[0] = y[1];
            dy[1] = k * y[0];
            dy[2] = y[3];
            dy[3] = k * y[2] - y[0];
            dy[4] = y[5];
            dy[5] = k * y[4] + w * y[0];
            dy[6] = y[7];
            dy[7] = k * y[6] - y[2] * two;
            dy[8] = y[9];
            dy[9] = k * y[8] + w * y[2] - y[4];
        },
        |_, _| {},
    )?;
    let f = |i: usize| right_functional(shape, y[2 * i], y[2 * i + 1]);
    Ok([f(0), f(1), f(2), f(3), f(4)])
}

/// Newton on `(Δ, ∂_λΔ) = (0, 0)` in the unknowns `(λ, c)`.
///
/// Returns the problem with potential samples `c·w` and a certificate.
pub fn find_double<T: Real>(
    shape: &[Complex<T>],
    h: Complex<T>,
    big_h: Complex<T>,
    bc_kind: BcKind,
    search: &DoubleSearch<T>,
) -> Result<(BoundaryProblem<T>, DoubleCertificate<T>)> {
    let shape_problem = BoundaryProblem::new(shape.to_vec(), h, big_h, bc_kind)?;
    let (mut lambda, mut c) = (search.lambda0, search.c0);
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..search.max_iter {
        iterations = it + 1;
        let [d, dl, dc, dll, dlc] = derivatives(&shape_problem, lambda, c)?;
        let det = dl * dlc - dc * dll;
        if det.norm() == T::zero() || !det.norm().is_finite() {
            return Err(SlError::SearchFailed(format!("singular Newton system at lambda = {lambda}, c = {c}")));
        }
        let step_l = (d * dlc - dc * dl) / det;
        let step_c = (dl * dl - dll * d) / det;
        lambda -= step_l;
        c -= step_c;
        if !(lambda.norm().is_finite() && c.norm().is_finite()) {
            return Err(SlError::SearchFailed("Newton iterates diverged".into()));
        }
        if step_l.norm() + step_c.norm() <= T::lit(1e-14) * (T::one() + lambda.norm() + c.norm()) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SlError::SearchFailed(format!(
            "no convergence in {} iterations (last lambda = {lambda}, c = {c})",
            search.max_iter
        )));
    }
    let [d, dl, _, dll, _] = derivatives(&shape_problem, lambda, c)?;
    let samples: Vec<Complex<T>> = shape.iter().map(|w| c * *w).collect();
    let problem = BoundaryProblem::new(samples, h, big_h, bc_kind)?;
    let winding = winding_number(|z| characteristic(&problem, z), lambda, search.isolation_radius, 64)?;
    let cert = DoubleCertificate {
        lambda,
        c,
        delta: d.norm(),
        delta_1: dl.norm(),
        delta_2: dll.norm(),
        winding,
        iterations,
    };
    if !cert.holds() {
        return Err(SlError::SearchFailed(format!(
            "certificate failed: |Δ| = {:e}, |Δ'| = {:e}, |Δ''| = {:e}, winding = {}",
            cert.delta, cert.delta_1, cert.delta_2, cert.winding
        )));
    }
    Ok((problem, cert))
}

/// Samples of `e^{ix}` on a uniform grid of `[0, π]`.
pub fn exp_shape<T: Real>(grid_size: usize) -> Vec<Complex<T>> {
    let step = T::PI() / T::from_usize_lossy(grid_size - 1);
    (0..grid_size)
        .map(|i| Complex::from_polar(T::one(), step * T::from_usize_lossy(i)))
        .collect()
}
