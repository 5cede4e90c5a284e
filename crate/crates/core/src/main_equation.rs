//! The linear main equation `(I + R(x)) ψ̃(x) = ψ(x)` and the reconstruction of
//! the perturbed problem `q̃, h̃, H̃` from it.
//!
//! Coordinates of an element: first the values at the `M_C` contour nodes,
//! then `2K` discrete entries. Discrete entry `2(k−1)` belongs to `λ̃_{N+k}`
//! and entry `2(k−1)+1` is the χ-scaled difference at index `N+k`.
//!
//! Every coordinate is described by a linear functional on functions of the
//! spectral parameter, stored as `(coefficient, node)` pairs. The entry
//! `R[r][c]` is `Σ a·b·D(x, node_a, node_b)` over the row functional of `r`
//! and the column functional of `c`; identical nodes are merged and zero
//! coefficients dropped, so columns that vanish identically are recognised
//! exactly and eliminated from the dense solve.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_complex::Complex;
use rayon::prelude::*;

use crate::data::SpectralData;
use crate::error::{Result, SlError};
use crate::linalg::LuFactors;
use crate::ode::{integrate_chain, merge_threshold, pair_integral_trace, weyl_function, Start};
use crate::perturbation::{check_contour_standoff, check_theorem1, xi_sequence, ConditionReport};
use crate::partial_fraction::PartialFraction;
use crate::perturbation::hat_from_data;
use crate::problem::{BcKind, BoundaryProblem};
use crate::quadrature::{circle_nodes, simpson};
use crate::scalar::Real;

type Functional<T> = Vec<(Complex<T>, usize)>;

#[derive(Clone, Debug, PartialEq)]
pub struct Discretization<T: Real> {
    /// `M_C`: uniform trapezoid nodes on the contour.
    pub contour_nodes: usize,
    /// `K`: retained indices `N+1 ..= N+K`.
    pub trunc_k: usize,
    /// Budget for the estimated discarded tail.
    pub tail_tolerance: T,
    /// Pivots below this make the operator singular.
    pub pivot_floor: T,
    /// Relative residual demanded of every solve.
    pub residual_tolerance: T,
}

impl<T: Real> Default for Discretization<T> {
    fn default() -> Self {
        Self {
            contour_nodes: 256,
            trunc_k: 60,
            tail_tolerance: T::lit(1e-8),
            pivot_floor: T::lit(1e-13),
            residual_tolerance: T::lit(1e-10),
        }
    }
}

impl<T: Real> Discretization<T> {
    pub fn validate(&self) -> Result<()> {
        if self.contour_nodes < 64 || self.contour_nodes % 2 != 0 {
            return Err(SlError::InvalidProblem(format!(
                "contour node count must be even and at least 64, got {}",
                self.contour_nodes
            )));
        }
        if self.trunc_k < 20 {
            return Err(SlError::InvalidProblem(format!("truncation K must be at least 20, got {}", self.trunc_k)));
        }
        Ok(())
    }
}

/// How the contour part of the operator is weighted.
#[derive(Clone, Copy, Debug)]
pub enum ContourWeight<'a, T: Real> {
    /// The partial fraction `M̃_N − M_N` built from the data (default).
    Data,
    /// The full difference `M̃(λ) − M(λ)` of Weyl functions, when the target
    /// problem is known. Equivalent up to quadrature error.
    WeylDifference(&'a BoundaryProblem<T>),
}

/// How `ε = −2ε₀'` is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EpsMode {
    /// Term-by-term product rule with the differentiated main equation.
    #[default]
    Analytic,
    /// Five-point finite differences of `ε₀` on the grid (debugging aid).
    FiniteDifference,
}

#[derive(Clone, Copy, Debug)]
pub struct InverseOptions<'a, T: Real> {
    pub contour: ContourWeight<'a, T>,
    pub eps_mode: EpsMode,
    /// Smallness threshold for the admissibility check.
    pub delta0: T,
    /// Fail with `HypothesisViolated` instead of recording the failed check.
    pub strict: bool,
}

impl<T: Real> Default for InverseOptions<'_, T> {
    fn default() -> Self {
        Self {
            contour: ContourWeight::Data,
            eps_mode: EpsMode::Analytic,
            delta0: T::lit(1e-2),
            strict: false,
        }
    }
}

/// A point of `B = B_C × B_D`.
#[derive(Clone, Debug, PartialEq)]
pub struct BanachElement<T: Real> {
    pub continuous: Vec<Complex<T>>,
    pub discrete: Vec<Complex<T>>,
}

impl<T: Real> BanachElement<T> {
    pub fn from_flat(flat: &[Complex<T>], dim_c: usize) -> Self {
        Self {
            continuous: flat[..dim_c].to_vec(),
            discrete: flat[dim_c..].to_vec(),
        }
    }

    pub fn flat(&self) -> Vec<Complex<T>> {
        self.continuous.iter().chain(&self.discrete).copied().collect()
    }

    pub fn norm(&self) -> T {
        split_norm(&self.flat(), self.continuous.len())
    }
}

fn sup<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |a, z| a.max(z.norm()))
}

fn split_norm<T: Real>(v: &[Complex<T>], dim_c: usize) -> T {
    sup(&v[..dim_c]) + sup(&v[dim_c..])
}

/// Dense operator on the coordinates of [`BanachElement`], row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct BanachOperatorMatrix<T: Real> {
    pub dim_c: usize,
    pub dim_d: usize,
    pub entries: Vec<Complex<T>>,
}

impl<T: Real> BanachOperatorMatrix<T> {
    pub fn zeros(dim_c: usize, dim_d: usize) -> Self {
        let n = dim_c + dim_d;
        Self {
            dim_c,
            dim_d,
            entries: vec![Complex::new(T::zero(), T::zero()); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim_c + self.dim_d
    }

    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.entries[r * self.dim() + c]
    }

    pub fn apply(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.dim();
        (0..n)
            .map(|r| {
                let row = &self.entries[r * n..r * n + n];
                row.iter().zip(v).fold(Complex::new(T::zero(), T::zero()), |a, (m, x)| a + *m * *x)
            })
            .collect()
    }

    /// Largest absolute row sum.
    pub fn row_sum_norm(&self) -> T {
        let n = self.dim();
        (0..n)
            .map(|r| self.entries[r * n..r * n + n].iter().fold(T::zero(), |a, z| a + z.norm()))
            .fold(T::zero(), T::max)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|z| z.re == T::zero() && z.im == T::zero())
    }
}

/// LU factors of `I + R` restricted to the columns of `R` that are not
/// identically zero; the remaining unknowns follow by substitution.
pub struct MainSolver<'a, T: Real> {
    r: &'a BanachOperatorMatrix<T>,
    active: Vec<usize>,
    lu: LuFactors<T>,
    residual_tolerance: T,
}

impl<'a, T: Real> MainSolver<'a, T> {
    pub fn new(r: &'a BanachOperatorMatrix<T>, pivot_floor: T, residual_tolerance: T) -> std::result::Result<Self, T> {
        let n = r.dim();
        let active: Vec<usize> = (0..n)
            .filter(|&c| (0..n).any(|row| r.get(row, c) != Complex::new(T::zero(), T::zero())))
            .collect();
        let m = active.len();
        let mut a = vec![Complex::new(T::zero(), T::zero()); m * m];
        for (i, &ri) in active.iter().enumerate() {
            for (j, &cj) in active.iter().enumerate() {
                a[i * m + j] = r.get(ri, cj);
            }
            a[i * m + i] += Complex::new(T::one(), T::zero());
        }
        let lu = LuFactors::factor(a, m, pivot_floor)?;
        Ok(Self {
            r,
            active,
            lu,
            residual_tolerance,
        })
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    pub fn pivot_ratio(&self) -> T {
        self.lu.pivot_ratio()
    }

    fn solve_raw(&self, rhs: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.r.dim();
        let rhs_a: Vec<Complex<T>> = self.active.iter().map(|&i| rhs[i]).collect();
        let mut xa = self.lu.solve(&rhs_a);
        // One step of iterative refinement on the active block.
        let m = self.active.len();
        if m > 0 {
            let mut res = vec![Complex::new(T::zero(), T::zero()); m];
            for (i, &ri) in self.active.iter().enumerate() {
                let mut acc = xa[i] - rhs_a[i];
                for (j, &cj) in self.active.iter().enumerate() {
                    acc += self.r.get(ri, cj) * xa[j];
                }
                res[i] = -acc;
            }
            let corr = self.lu.solve(&res);
            for (x, c) in xa.iter_mut().zip(corr) {
                *x += c;
            }
        }
        let mut x = vec![Complex::new(T::zero(), T::zero()); n];
        for (j, &cj) in self.active.iter().enumerate() {
            x[cj] = xa[j];
        }
        let mut is_active = vec![false; n];
        for &c in &self.active {
            is_active[c] = true;
        }
        for i in 0..n {
            if !is_active[i] {
                let mut acc = rhs[i];
                for (j, &cj) in self.active.iter().enumerate() {
                    acc -= self.r.get(i, cj) * xa[j];
                }
                x[i] = acc;
            }
        }
        x
    }

    /// Solves `(I + R) y = rhs`; returns `y` and the relative residual.
    pub fn solve_flat(&self, rhs: &[Complex<T>]) -> (Vec<Complex<T>>, T) {
        let y = self.solve_raw(rhs);
        let ry = self.r.apply(&y);
        let res: Vec<Complex<T>> = (0..y.len()).map(|i| y[i] + ry[i] - rhs[i]).collect();
        let dc = self.r.dim_c;
        let scale = split_norm(rhs, dc).max(T::min_positive_value());
        (y, split_norm(&res, dc) / scale)
    }

    pub fn residual_tolerance(&self) -> T {
        self.residual_tolerance
    }
}

/// Solves `(I + R) ψ̃ = ψ` by dense LU with partial pivoting.
pub fn solve_main_equation<T: Real>(psi: &BanachElement<T>, r: &BanachOperatorMatrix<T>) -> Result<BanachElement<T>> {
    solve_main_equation_with(psi, r, T::lit(1e-13), T::lit(1e-10), 0)
}

fn solve_main_equation_with<T: Real>(
    psi: &BanachElement<T>,
    r: &BanachOperatorMatrix<T>,
    pivot_floor: T,
    residual_tolerance: T,
    grid_index: usize,
) -> Result<BanachElement<T>> {
    let solver = MainSolver::new(r, pivot_floor, residual_tolerance).map_err(|p| SlError::SingularOperator {
        grid_index,
        pivot: p.as_f64(),
    })?;
    let (y, res) = solver.solve_flat(&psi.flat());
    if !(res <= residual_tolerance) {
        return Err(SlError::ResidualTooLarge {
            grid_index,
            residual: res.as_f64(),
        });
    }
    Ok(BanachElement::from_flat(&y, r.dim_c))
}

/// Per-grid-point diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct PointDiagnostics<T: Real> {
    pub x: T,
    /// Row-sum norm of `R(x)`.
    pub norm_proxy: T,
    /// Pivot ratio of the LU factorization of `I + R(x)`.
    pub pivot_ratio: T,
    pub residual: T,
    pub active_unknowns: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionResult<T: Real> {
    pub bc_kind: BcKind,
    pub grid: Vec<T>,
    pub q_model: Vec<Complex<T>>,
    pub q_tilde: Vec<Complex<T>>,
    pub h_tilde: Complex<T>,
    pub big_h_tilde: Complex<T>,
    pub eps0: Vec<Complex<T>>,
    pub eps: Vec<Complex<T>>,
    pub diagnostics: Vec<PointDiagnostics<T>>,
    pub n_stab: usize,
    pub radius: T,
    pub contour_nodes: usize,
    pub trunc_k: usize,
    pub contour_sup: T,
    pub tail_norm: T,
    pub truncation_estimate: T,
    pub hypotheses: ConditionReport,
}

impl<T: Real> ReconstructionResult<T> {
    /// `‖q̃ − q‖_{L₂(0,π)}`.
    pub fn correction_l2(&self) -> T {
        let step = self.grid[1] - self.grid[0];
        l2_norm(&self.eps, step)
    }

    pub fn max_norm_proxy(&self) -> T {
        self.diagnostics.iter().fold(T::zero(), |a, d| a.max(d.norm_proxy))
    }

    pub fn max_pivot_ratio(&self) -> T {
        self.diagnostics.iter().fold(T::zero(), |a, d| a.max(d.pivot_ratio))
    }

    pub fn max_residual(&self) -> T {
        self.diagnostics.iter().fold(T::zero(), |a, d| a.max(d.residual))
    }

    /// The reconstructed problem on the model grid.
    pub fn problem(&self) -> Result<BoundaryProblem<T>> {
        BoundaryProblem::new(self.q_tilde.clone(), self.h_tilde, self.big_h_tilde, self.bc_kind)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# slmap reconstruction\n");
        let _ = writeln!(s, "# bc = {}", self.bc_kind.name());
        let _ = writeln!(s, "# N = {}", self.n_stab);
        let _ = writeln!(s, "# r = {:.16e}", self.radius);
        let _ = writeln!(s, "# M_C = {}", self.contour_nodes);
        let _ = writeln!(s, "# K = {}", self.trunc_k);
        let _ = writeln!(s, "# contour_sup = {:.16e}", self.contour_sup);
        let _ = writeln!(s, "# tail_norm = {:.16e}", self.tail_norm);
        let _ = writeln!(s, "# truncation_estimate = {:.16e}", self.truncation_estimate);
        let _ = writeln!(s, "# h_tilde = {:.16e} {:.16e}", self.h_tilde.re, self.h_tilde.im);
        let _ = writeln!(s, "# H_tilde = {:.16e} {:.16e}", self.big_h_tilde.re, self.big_h_tilde.im);
        s.push_str("# x re_q im_q re_q_tilde im_q_tilde re_eps0 im_eps0\n");
        for i in 0..self.grid.len() {
            let _ = writeln!(
                s,
                "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
                self.grid[i],
                self.q_model[i].re,
                self.q_model[i].im,
                self.q_tilde[i].re,
                self.q_tilde[i].im,
                self.eps0[i].re,
                self.eps0[i].im
            );
        }
        s
    }
}

/// `(∫₀^π |f|²)^{1/2}` by Simpson's rule.
pub fn l2_norm<T: Real>(values: &[Complex<T>], step: T) -> T {
    let sq: Vec<Complex<T>> = values.iter().map(|z| Complex::new(z.norm_sqr(), T::zero())).collect();
    simpson(&sq, step).re.max(T::zero()).sqrt()
}

/// The x-independent part of the main equation: nodes, their solution
/// traces, coordinate functionals and the near-pair kernel integrals.
pub struct MainEquation<'a, T: Real> {
    problem: &'a BoundaryProblem<T>,
    disc: Discretization<T>,
    n_stab: usize,
    radius: T,
    nodes: Vec<Complex<T>>,
    values: Vec<Vec<Complex<T>>>,
    derivs: Vec<Vec<Complex<T>>>,
    diag: Vec<Vec<Complex<T>>>,
    near: HashMap<(usize, usize), Vec<Complex<T>>>,
    rows: Vec<Functional<T>>,
    cols: Vec<Functional<T>>,
    xi: Vec<T>,
    contour_sup: T,
    tail_norm: T,
    truncation_estimate: T,
}

struct NodeSet<T: Real> {
    nodes: Vec<Complex<T>>,
}

impl<T: Real> NodeSet<T> {
    fn id(&mut self, z: Complex<T>) -> usize {
        if let Some(i) = self.nodes.iter().position(|w| *w == z) {
            return i;
        }
        self.nodes.push(z);
        self.nodes.len() - 1
    }
}

fn normalize<T: Real>(f: Functional<T>) -> Functional<T> {
    let mut out: Functional<T> = Vec::new();
    for (c, n) in f {
        match out.iter_mut().find(|(_, m)| *m == n) {
            Some(e) => e.0 += c,
            None => out.push((c, n)),
        }
    }
    out.retain(|(c, _)| c.re != T::zero() || c.im != T::zero());
    out
}

impl<'a, T: Real> MainEquation<'a, T> {
    pub fn new(
        problem: &'a BoundaryProblem<T>,
        model: &SpectralData<T>,
        target: &SpectralData<T>,
        disc: &Discretization<T>,
        weight: ContourWeight<'_, T>,
    ) -> Result<Self> {
        disc.validate()?;
        if model.bc_kind != problem.bc_kind() || target.bc_kind != problem.bc_kind() {
            return Err(SlError::InvalidProblem("boundary condition kinds of problem and data differ".into()));
        }
        if target.first_index != model.first_index {
            return Err(SlError::InvalidProblem("model and target data start at different indices".into()));
        }
        let n_stab = model
            .stabilization_index
            .ok_or_else(|| SlError::InvalidProblem("model data lacks the stabilization index N".into()))?;
        let radius = model
            .radius
            .ok_or_else(|| SlError::InvalidProblem("model data lacks the contour radius r".into()))?;
        let k = disc.trunc_k;
        let n_pos = n_stab
            .checked_sub(model.first_index)
            .ok_or_else(|| SlError::InvalidProblem("N precedes the first index".into()))?;
        if model.len() < n_pos + 1 + k {
            return Err(SlError::InvalidProblem(format!(
                "model data has {} entries, need {} for K = {k}",
                model.len(),
                n_pos + 1 + k
            )));
        }
        check_contour_standoff(model, target, radius)?;
        let sigma = Complex::new(T::lit(problem.bc_kind().weyl_sign()), T::zero());

        let xi = xi_sequence(model, target);
        let mut tail = T::zero();
        let mut trunc = T::zero();
        for (p, x) in xi.iter().enumerate() {
            let n = model.index(p);
            if n > n_stab {
                let v = T::from_usize_lossy(n) * *x;
                tail += v * v;
                if n > n_stab + k {
                    trunc += v * v;
                }
            }
        }
        let (tail, trunc) = (tail.sqrt(), trunc.sqrt());
        if trunc > disc.tail_tolerance {
            return Err(SlError::TruncationBudgetExceeded {
                estimate: trunc.as_f64(),
                tolerance: disc.tail_tolerance.as_f64(),
            });
        }

        let mc = disc.contour_nodes;
        let zero = Complex::new(T::zero(), T::zero());
        let contour = circle_nodes(zero, radius, mc);
        let hat: PartialFraction<T> = hat_from_data(model, target, n_stab)?;
        let hat_values: Vec<Complex<T>> = match weight {
            ContourWeight::Data => contour.iter().map(|z| hat.eval(*z)).collect(),
            ContourWeight::WeylDifference(tp) => contour
                .par_iter()
                .map(|z| Ok(weyl_function(tp, *z)? - weyl_function(problem, *z)?))
                .collect::<Result<Vec<_>>>()?,
        };
        let contour_sup = sup(&hat_values);

        let mut set = NodeSet { nodes: Vec::new() };
        let mut rows = Vec::with_capacity(mc + 2 * k);
        let mut cols = Vec::with_capacity(mc + 2 * k);
        let mcs = T::from_usize_lossy(mc);
        for (j, z) in contour.iter().enumerate() {
            let id = set.id(*z);
            rows.push(vec![(Complex::new(T::one(), T::zero()), id)]);
            cols.push(normalize(vec![(sigma * hat_values[j] * *z / mcs, id)]));
        }
        for kk in 1..=k {
            let n = n_stab + kk;
            let p = n - model.first_index;
            let (l, m) = (model.lambdas[p], model.weyl[p]);
            let (lt, mt) = target.entry_or(model, n).expect("model covers index");
            let chi = if xi[p] == T::zero() { T::zero() } else { T::one() / xi[p] };
            let chi = Complex::new(chi, T::zero());
            let (il, ilt) = (set.id(l), set.id(lt));
            rows.push(vec![(Complex::new(T::one(), T::zero()), ilt)]);
            rows.push(normalize(vec![(chi, il), (-chi, ilt)]));
            cols.push(normalize(vec![(sigma * mt, ilt), (-sigma * m, il)]));
            cols.push(normalize(vec![(-sigma * m * xi[p], il)]));
        }
        let rows: Vec<Functional<T>> = rows.into_iter().map(normalize).collect();

        let nodes = set.nodes;
        // Diagonal kernel values come from the same integral scheme as the
        // near pairs, so that χ-scaled differences of nearby entries stay
        // consistent to rounding.
        let traces: Vec<Result<_>> = nodes
            .par_iter()
            .map(|z| Ok((integrate_chain(problem, *z, 0, Start::Phi)?.remove(0), pair_integral_trace(problem, *z, *z)?)))
            .collect();
        let mut values = Vec::with_capacity(nodes.len());
        let mut derivs = Vec::with_capacity(nodes.len());
        let mut diag = Vec::with_capacity(nodes.len());
        for tr in traces {
            let (tr, d) = tr?;
            values.push(tr.values);
            derivs.push(tr.derivatives);
            diag.push(d);
        }

        // Pairs of distinct but close nodes that meet in some entry.
        let mut col_nodes: Vec<usize> = cols.iter().flatten().map(|&(_, n)| n).collect();
        col_nodes.sort_unstable();
        col_nodes.dedup();
        let mut pairs = Vec::new();
        for a in 0..nodes.len() {
            for &b in &col_nodes {
                if a != b {
                    let key = (a.min(b), a.max(b));
                    if (nodes[a] - nodes[b]).norm() < merge_threshold(nodes[a], nodes[b]) && !pairs.contains(&key) {
                        pairs.push(key);
                    }
                }
            }
        }
        let near_traces: Vec<Result<Vec<Complex<T>>>> = pairs
            .par_iter()
            .map(|&(a, b)| pair_integral_trace(problem, nodes[a], nodes[b]))
            .collect();
        let mut near = HashMap::new();
        for (key, tr) in pairs.into_iter().zip(near_traces) {
            near.insert(key, tr?);
        }

        Ok(Self {
            problem,
            disc: disc.clone(),
            n_stab,
            radius,
            nodes,
            values,
            derivs,
            diag,
            near,
            rows,
            cols,
            xi,
            contour_sup,
            tail_norm: tail,
            truncation_estimate: trunc,
        })
    }

    pub fn dim_c(&self) -> usize {
        self.disc.contour_nodes
    }

    pub fn dim_d(&self) -> usize {
        2 * self.disc.trunc_k
    }

    pub fn xi(&self) -> &[T] {
        &self.xi
    }

    pub fn contour_sup(&self) -> T {
        self.contour_sup
    }

    /// `D(x_i, node_a, node_b)`.
    fn kernel(&self, i: usize, a: usize, b: usize) -> Complex<T> {
        if a == b {
            return self.diag[a][i];
        }
        if let Some(tr) = self.near.get(&(a.min(b), a.max(b))) {
            return tr[i];
        }
        let (la, lb) = (self.nodes[a], self.nodes[b]);
        (self.values[a][i] * self.derivs[b][i] - self.derivs[a][i] * self.values[b][i]) / (la - lb)
    }

    fn apply(f: &Functional<T>, v: &[Vec<Complex<T>>], i: usize) -> Complex<T> {
        f.iter().fold(Complex::new(T::zero(), T::zero()), |acc, &(c, n)| acc + c * v[n][i])
    }

    /// `ψ(x_i)`.
    pub fn build_psi(&self, i: usize) -> BanachElement<T> {
        let flat: Vec<Complex<T>> = self.rows.iter().map(|f| Self::apply(f, &self.values, i)).collect();
        BanachElement::from_flat(&flat, self.dim_c())
    }

    /// `R(x_i)`.
    pub fn build_r(&self, i: usize) -> BanachOperatorMatrix<T> {
        let mut m = BanachOperatorMatrix::zeros(self.dim_c(), self.dim_d());
        let n = m.dim();
        for (c, cf) in self.cols.iter().enumerate() {
            if cf.is_empty() {
                continue;
            }
            for (r, rf) in self.rows.iter().enumerate() {
                let mut acc = Complex::new(T::zero(), T::zero());
                for &(a, na) in rf {
                    for &(b, nb) in cf {
                        acc += a * b * self.kernel(i, na, nb);
                    }
                }
                m.entries[r * n + c] = acc;
            }
        }
        m
    }

    /// Column functionals applied to `φ` (or `φ'`) at `x_i`.
    fn column_weights(&self, i: usize, derivative: bool) -> Vec<Complex<T>> {
        let v = if derivative { &self.derivs } else { &self.values };
        self.cols.iter().map(|f| Self::apply(f, v, i)).collect()
    }

    /// Solves the main equation and its x-derivative at `x_i`.
    pub fn solve_at(&self, i: usize) -> Result<PointSolution<T>> {
        let psi = self.build_psi(i).flat();
        let dpsi: Vec<Complex<T>> = self.rows.iter().map(|f| Self::apply(f, &self.derivs, i)).collect();
        let r = self.build_r(i);
        let solver = MainSolver::new(&r, self.disc.pivot_floor, self.disc.residual_tolerance).map_err(|p| {
            SlError::SingularOperator {
                grid_index: i,
                pivot: p.as_f64(),
            }
        })?;
        let (psi_t, res) = solver.solve_flat(&psi);
        if !(res <= self.disc.residual_tolerance) {
            return Err(SlError::ResidualTooLarge {
                grid_index: i,
                residual: res.as_f64(),
            });
        }
        let g = self.column_weights(i, false);
        let dg = self.column_weights(i, true);
        let eps0 = g.iter().zip(&psi_t).fold(Complex::new(T::zero(), T::zero()), |a, (w, y)| a + *w * *y);
        // R'(x) = ψ(x) gᵀ(x), so ψ' − R'ψ̃ = ψ' − ε₀ ψ.
        let rhs: Vec<Complex<T>> = dpsi.iter().zip(&psi).map(|(d, p)| *d - eps0 * *p).collect();
        let (dpsi_t, dres) = solver.solve_flat(&rhs);
        let deps0 = g
            .iter()
            .zip(&dpsi_t)
            .zip(dg.iter().zip(&psi_t))
            .fold(Complex::new(T::zero(), T::zero()), |a, ((w, dy), (dw, y))| a + *w * *dy + *dw * *y);
        Ok(PointSolution {
            grid_index: i,
            psi_tilde: psi_t,
            dpsi_tilde: dpsi_t,
            eps0,
            deps0,
            norm_proxy: r.row_sum_norm(),
            pivot_ratio: solver.pivot_ratio(),
            residual: res.max(dres),
            active_unknowns: solver.active_count(),
        })
    }

    /// Solves at every grid point (in parallel, collected in grid order).
    pub fn solve_all(&self) -> Result<Vec<PointSolution<T>>> {
        (0..self.problem.grid_size()).into_par_iter().map(|i| self.solve_at(i)).collect()
    }

    /// `φ̃(x, λ)` and `φ̃'(x, λ)` on the grid from the solved main equation.
    pub fn phi_tilde(&self, solutions: &[PointSolution<T>], lambda: Complex<T>) -> Result<(Vec<Complex<T>>, Vec<Complex<T>>)> {
        let g = self.problem.grid_size();
        let tr = integrate_chain(self.problem, lambda, 0, Start::Phi)?;
        let (pv, pd) = (&tr[0].values, &tr[0].derivatives);
        // D(x, λ, node) for every node used by a column.
        let mut used: Vec<usize> = self.cols.iter().flatten().map(|&(_, n)| n).collect();
        used.sort_unstable();
        used.dedup();
        let mut kern: HashMap<usize, Vec<Complex<T>>> = HashMap::new();
        for &n in &used {
            let z = self.nodes[n];
            let col: Vec<Complex<T>> = if (z - lambda).norm() < merge_threshold(z, lambda) {
                pair_integral_trace(self.problem, lambda, z)?
            } else {
                (0..g)
                    .map(|i| (pv[i] * self.derivs[n][i] - pd[i] * self.values[n][i]) / (lambda - z))
                    .collect()
            };
            kern.insert(n, col);
        }
        let mut val = Vec::with_capacity(g);
        let mut der = Vec::with_capacity(g);
        for (i, sol) in solutions.iter().enumerate() {
            let mut v = pv[i];
            let mut d = pd[i] - pv[i] * sol.eps0;
            for (c, f) in self.cols.iter().enumerate() {
                if f.is_empty() {
                    continue;
                }
                let k = f.iter().fold(Complex::new(T::zero(), T::zero()), |a, &(cf, n)| a + cf * kern[&n][i]);
                v -= k * sol.psi_tilde[c];
                d -= k * sol.dpsi_tilde[c];
            }
            val.push(v);
            der.push(d);
        }
        Ok((val, der))
    }
}

/// Solution of the main equation at one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSolution<T: Real> {
    pub grid_index: usize,
    pub psi_tilde: Vec<Complex<T>>,
    pub dpsi_tilde: Vec<Complex<T>>,
    pub eps0: Complex<T>,
    pub deps0: Complex<T>,
    pub norm_proxy: T,
    pub pivot_ratio: T,
    pub residual: T,
    pub active_unknowns: usize,
}

/// Five-point derivative on a uniform grid (one-sided near the ends).
pub fn five_point_derivative<T: Real>(f: &[Complex<T>], step: T) -> Vec<Complex<T>> {
    let n = f.len();
    let l = T::lit;
    (0..n)
        .map(|i| {
            let s = if i < 2 {
                i
            } else if i + 2 >= n {
                i + 4 + 1 - n
            } else {
                2
            };
            let b = i - s;
            let w: [f64; 5] = match s {
                0 => [-25.0, 48.0, -36.0, 16.0, -3.0],
                1 => [-3.0, -10.0, 18.0, -6.0, 1.0],
                2 => [1.0, -8.0, 0.0, 8.0, -1.0],
                3 => [-1.0, 6.0, -18.0, 10.0, 3.0],
                _ => [3.0, -16.0, 36.0, -48.0, 25.0],
            };
            let mut acc = Complex::new(T::zero(), T::zero());
            for (k, wk) in w.iter().enumerate() {
                acc += f[b + k] * l(*wk);
            }
            acc / (l(12.0) * step)
        })
        .collect()
}

/// `ε₀` and `ε = −2ε₀'` on the grid.
pub fn compute_correction<T: Real>(
    eq: &MainEquation<'_, T>,
    solutions: &[PointSolution<T>],
    mode: EpsMode,
) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
    let eps0: Vec<Complex<T>> = solutions.iter().map(|s| s.eps0).collect();
    let two = T::lit(2.0);
    let eps = match mode {
        EpsMode::Analytic => solutions.iter().map(|s| -s.deps0 * two).collect(),
        EpsMode::FiniteDifference => five_point_derivative(&eps0, eq.problem.step())
            .into_iter()
            .map(|d| -d * two)
            .collect(),
    };
    (eps0, eps)
}

/// Reconstructs `q̃, h̃, H̃` from target data near the model.
pub fn solve_inverse<T: Real>(
    problem: &BoundaryProblem<T>,
    model: &SpectralData<T>,
    target: &SpectralData<T>,
    disc: &Discretization<T>,
    opts: &InverseOptions<'_, T>,
) -> Result<ReconstructionResult<T>> {
    let eq = MainEquation::new(problem, model, target, disc, opts.contour)?;
    let (_, mut hyp) = check_theorem1(model, target, eq.n_stab, eq.radius, opts.delta0, disc.contour_nodes)?;
    if let ContourWeight::WeylDifference(_) = opts.contour {
        if let Some(rec) = hyp.records.iter_mut().find(|r| r.id == "contour_sup") {
            rec.measured = eq.contour_sup.as_f64();
            rec.pass = rec.measured <= rec.bound;
        }
    }
    if opts.strict && !hyp.pass() {
        let failed: Vec<String> = hyp
            .records
            .iter()
            .filter(|r| !r.pass)
            .map(|r| format!("{} = {:e} (bound {:e})", r.id, r.measured, r.bound))
            .collect();
        return Err(SlError::HypothesisViolated(failed.join(", ")));
    }
    let solutions = eq.solve_all()?;
    let (eps0, eps) = compute_correction(&eq, &solutions, opts.eps_mode);
    let q_model = problem.q_samples().to_vec();
    let q_tilde = q_model.iter().zip(&eps).map(|(q, e)| *q + *e).collect();
    let last = eps0.len() - 1;
    let (h_tilde, big_h_tilde) = match problem.bc_kind() {
        BcKind::Robin => (problem.h() - eps0[0], problem.big_h() + eps0[last]),
        BcKind::Dirichlet => (Complex::new(T::zero(), T::zero()), Complex::new(T::zero(), T::zero())),
    };
    let grid = problem.grid();
    let diagnostics = solutions
        .iter()
        .map(|s| PointDiagnostics {
            x: grid[s.grid_index],
            norm_proxy: s.norm_proxy,
            pivot_ratio: s.pivot_ratio,
            residual: s.residual,
            active_unknowns: s.active_unknowns,
        })
        .collect();
    Ok(ReconstructionResult {
        bc_kind: problem.bc_kind(),
        grid,
        q_model,
        q_tilde,
        h_tilde,
        big_h_tilde,
        eps0,
        eps,
        diagnostics,
        n_stab: eq.n_stab,
        radius: eq.radius,
        contour_nodes: disc.contour_nodes,
        trunc_k: disc.trunc_k,
        contour_sup: eq.contour_sup,
        tail_norm: eq.tail_norm,
        truncation_estimate: eq.truncation_estimate,
        hypotheses: hyp,
    })
}
