//! The boundary-value problem `-y'' + q y = λ y` on `(0, π)` with Robin
//! (`y'(0) - h y(0) = 0`, `y'(π) + H y(π) = 0`) or Dirichlet conditions.

use num_complex::Complex;

use crate::error::{Result, SlError};
use crate::scalar::Real;

/// Minimum number of potential samples on `[0, π]`.
pub const MIN_GRID_SIZE: usize = 33;
/// Default number of RK4 substeps per grid interval.
pub const DEFAULT_REFINEMENT: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BcKind {
    Robin,
    Dirichlet,
}

impl BcKind {
    /// Index of the lowest eigenvalue (`0` for Robin, `1` for Dirichlet).
    pub fn first_index(self) -> usize {
        match self {
            BcKind::Robin => 0,
            BcKind::Dirichlet => 1,
        }
    }

    /// Sign relating the Weyl coefficients to the kernel normalization.
    ///
    /// For Dirichlet conditions the complementary solution has Wronskian `-1`
    /// with the sine-type solution, so every Weyl coefficient enters the main
    /// equation with a flipped sign.
    pub fn weyl_sign(self) -> f64 {
        match self {
            BcKind::Robin => 1.0,
            BcKind::Dirichlet => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BcKind::Robin => "robin",
            BcKind::Dirichlet => "dirichlet",
        }
    }
}

impl std::str::FromStr for BcKind {
    type Err = SlError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "robin" => Ok(BcKind::Robin),
            "dirichlet" => Ok(BcKind::Dirichlet),
            other => Err(SlError::InvalidProblem(format!("unknown boundary condition kind `{other}`"))),
        }
    }
}

/// Potential samples on a uniform grid plus boundary data.
///
/// The potential is interpolated by a natural cubic spline; the spline is
/// sampled once at construction on the half-substep lattice used by the RK4
/// integrator.
#[derive(Clone, Debug)]
pub struct BoundaryProblem<T: Real> {
    q_samples: Vec<Complex<T>>,
    h: Complex<T>,
    big_h: Complex<T>,
    bc_kind: BcKind,
    refine: usize,
    second_derivs: Vec<Complex<T>>,
    q_fine: Vec<Complex<T>>,
}

impl<T: Real> BoundaryProblem<T> {
    pub fn new(
        q_samples: Vec<Complex<T>>,
        h: Complex<T>,
        big_h: Complex<T>,
        bc_kind: BcKind,
    ) -> Result<Self> {
        Self::with_refinement(q_samples, h, big_h, bc_kind, DEFAULT_REFINEMENT)
    }

    pub fn robin(q_samples: Vec<Complex<T>>, h: Complex<T>, big_h: Complex<T>) -> Result<Self> {
        Self::new(q_samples, h, big_h, BcKind::Robin)
    }

    pub fn dirichlet(q_samples: Vec<Complex<T>>) -> Result<Self> {
        let zero = Complex::new(T::zero(), T::zero());
        Self::new(q_samples, zero, zero, BcKind::Dirichlet)
    }

    /// Samples `q` at `grid_size` uniform points of `[0, π]`.
    pub fn from_fn<F>(grid_size: usize, q: F, h: Complex<T>, big_h: Complex<T>, bc_kind: BcKind) -> Result<Self>
    where
        F: Fn(T) -> Complex<T>,
    {
        let step = grid_step::<T>(grid_size.max(2));
        let samples = (0..grid_size).map(|i| q(step * T::from_usize_lossy(i))).collect();
        Self::new(samples, h, big_h, bc_kind)
    }

    pub fn with_refinement(
        q_samples: Vec<Complex<T>>,
        h: Complex<T>,
        big_h: Complex<T>,
        bc_kind: BcKind,
        refine: usize,
    ) -> Result<Self> {
        if q_samples.len() < MIN_GRID_SIZE {
            return Err(SlError::InvalidProblem(format!(
                "grid has {} samples, at least {MIN_GRID_SIZE} required",
                q_samples.len()
            )));
        }
        if refine == 0 {
            return Err(SlError::InvalidProblem("refinement factor must be positive".into()));
        }
        if q_samples.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(SlError::InvalidProblem("potential samples must be finite".into()));
        }
        let (h, big_h) = match bc_kind {
            BcKind::Robin => (h, big_h),
            BcKind::Dirichlet => (Complex::new(T::zero(), T::zero()), Complex::new(T::zero(), T::zero())),
        };
        let second_derivs = natural_spline_second_derivs(&q_samples, grid_step::<T>(q_samples.len()));
        let mut problem = Self {
            q_samples,
            h,
            big_h,
            bc_kind,
            refine,
            second_derivs,
            q_fine: Vec::new(),
        };
        let intervals = problem.grid_size() - 1;
        let half = problem.substep() / T::lit(2.0);
        problem.q_fine = (0..=2 * refine * intervals)
            .map(|j| problem.q_at(half * T::from_usize_lossy(j)))
            .collect();
        Ok(problem)
    }

    /// Copy with new potential samples and boundary coefficients, same grid and scheme.
    pub fn with_data(&self, q_samples: Vec<Complex<T>>, h: Complex<T>, big_h: Complex<T>) -> Result<Self> {
        Self::with_refinement(q_samples, h, big_h, self.bc_kind, self.refine)
    }

    pub fn grid_size(&self) -> usize {
        self.q_samples.len()
    }

    /// Spacing of the potential grid.
    pub fn step(&self) -> T {
        grid_step::<T>(self.grid_size())
    }

    /// RK4 step length.
    pub fn substep(&self) -> T {
        self.step() / T::from_usize_lossy(self.refine)
    }

    pub fn refinement(&self) -> usize {
        self.refine
    }

    pub fn x(&self, i: usize) -> T {
        if i + 1 == self.grid_size() {
            T::PI()
        } else {
            self.step() * T::from_usize_lossy(i)
        }
    }

    pub fn grid(&self) -> Vec<T> {
        (0..self.grid_size()).map(|i| self.x(i)).collect()
    }

    pub fn q_samples(&self) -> &[Complex<T>] {
        &self.q_samples
    }

    pub fn h(&self) -> Complex<T> {
        self.h
    }

    pub fn big_h(&self) -> Complex<T> {
        self.big_h
    }

    pub fn bc_kind(&self) -> BcKind {
        self.bc_kind
    }

    /// Potential on the half-substep lattice (`2 · refinement · (grid_size - 1) + 1` values).
    pub(crate) fn q_fine(&self) -> &[Complex<T>] {
        &self.q_fine
    }

    /// Spline value of the potential at `x ∈ [0, π]`.
    pub fn q_at(&self, x: T) -> Complex<T> {
        let hg = self.step();
        let n = self.grid_size();
        let x = x.max(T::zero()).min(T::PI());
        let mut i = (x / hg).floor().to_usize().unwrap_or(0);
        if i >= n - 1 {
            i = n - 2;
        }
        let u = (x - hg * T::from_usize_lossy(i)) / hg;
        let v = T::one() - u;
        let six = T::lit(6.0);
        let y0 = self.q_samples[i];
        let y1 = self.q_samples[i + 1];
        let m0 = self.second_derivs[i];
        let m1 = self.second_derivs[i + 1];
        y0 * v + y1 * u + (m0 * (v * v * v - v) + m1 * (u * u * u - u)) * (hg * hg / six)
    }
}

pub(crate) fn grid_step<T: Real>(grid_size: usize) -> T {
    T::PI() / T::from_usize_lossy(grid_size - 1)
}

/// Second derivatives of the natural cubic spline through uniformly spaced samples.
fn natural_spline_second_derivs<T: Real>(y: &[Complex<T>], hg: T) -> Vec<Complex<T>> {
    let n = y.len();
    let zero = Complex::new(T::zero(), T::zero());
    let mut m = vec![zero; n];
    if n < 3 {
        return m;
    }
    let inner = n - 2;
    let six_over_h2 = T::lit(6.0) / (hg * hg);
    let four = T::lit(4.0);
    // Thomas algorithm on the tridiagonal system [1 4 1].
    let mut c_prime = vec![T::zero(); inner];
    let mut d_prime = vec![zero; inner];
    for k in 0..inner {
        let i = k + 1;
        let rhs = (y[i + 1] - y[i] * T::lit(2.0) + y[i - 1]) * six_over_h2;
        if k == 0 {
            c_prime[k] = T::one() / four;
            d_prime[k] = rhs / four;
        } else {
            let denom = four - c_prime[k - 1];
            c_prime[k] = T::one() / denom;
            d_prime[k] = (rhs - d_prime[k - 1]) / denom;
        }
    }
    for k in (0..inner).rev() {
        let next = if k + 1 < inner { m[k + 2] } else { zero };
        m[k + 1] = d_prime[k] - next * c_prime[k];
    }
    m
}
