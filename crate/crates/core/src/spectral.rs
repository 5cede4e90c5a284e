//! Forward spectral solver: eigenvalues with multiplicities, generalized
//! weight numbers `α_n`, and Weyl coefficients `M_n`.

use num_complex::Complex;
use rayon::prelude::*;

use crate::data::SpectralData;
use crate::error::{Result, SlError};
use crate::ode::{characteristic, characteristic_series, integrate_phi, weyl_function};
use crate::problem::{BcKind, BoundaryProblem};
use crate::quadrature::{circle_integral, circle_nodes, simpson, winding_number};
use crate::scalar::{arg_half_open, sqrt_branch, Real};

/// Relative tolerance used to merge Newton limits into one cluster.
const CLUSTER_TOL: f64 = 1e-7;
/// Looser merge radius for limits that converged only linearly (multiple roots).
const SLOW_CLUSTER_TOL: f64 = 1e-5;
/// Strictness margin for `|λ_N| < |λ_{N+1}|`.
const MODULUS_MARGIN: f64 = 1e-8;
/// Trapezoid nodes on each isolating circle.
pub const RESIDUE_NODES: usize = 64;
/// Relative agreement demanded between the weight and residue routes.
pub const CROSS_VALIDATION_TOL: f64 = 1e-6;

/// Eigenvalues ordered by modulus (ties by argument), equal values adjacent.
///
/// Positions are zero-based; the eigenvalue at position `p` carries the index
/// `first_index + p`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T: Real> {
    pub bc_kind: BcKind,
    pub first_index: usize,
    pub eigenvalues: Vec<Complex<T>>,
    /// Start positions of the multiplicity blocks.
    pub block_starts: Vec<usize>,
    /// Multiplicity of each block, parallel to `block_starts`.
    pub multiplicities: Vec<usize>,
    /// Stabilization index `N` (absolute index).
    pub n_stab: usize,
    /// Contour radius, midway between `|λ_N|` and `|λ_{N+1}|`.
    pub radius: T,
    /// Radius of the census circle enclosing exactly the listed eigenvalues.
    pub census_radius: T,
    /// `sup n·|√λ_n − n|` over the computed indices `n ≥ 1`.
    pub asymptotic_constant: T,
}

impl<T: Real> Spectrum<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn index(&self, pos: usize) -> usize {
        self.first_index + pos
    }

    pub fn position(&self, n: usize) -> Option<usize> {
        n.checked_sub(self.first_index).filter(|&p| p < self.len())
    }

    /// `(start position, multiplicity)` pairs.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        self.block_starts.iter().copied().zip(self.multiplicities.iter().copied()).collect()
    }

    /// Block id (absolute index of the block start) for every position.
    pub fn block_ids(&self) -> Vec<usize> {
        let mut ids = Vec::with_capacity(self.len());
        for (s, m) in self.blocks() {
            ids.extend(std::iter::repeat(self.index(s)).take(m));
        }
        ids
    }

    /// Position of `N` in `eigenvalues`.
    pub fn n_position(&self) -> usize {
        self.n_stab - self.first_index
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedSpectralData<T: Real> {
    pub spectrum: Spectrum<T>,
    pub alphas: Vec<Complex<T>>,
    pub weyl_coeffs: Vec<Complex<T>>,
    /// Largest relative disagreement seen in the residue cross-check.
    pub cross_validation_error: T,
}

impl<T: Real> GeneralizedSpectralData<T> {
    pub fn to_data(&self) -> SpectralData<T> {
        let s = &self.spectrum;
        SpectralData {
            bc_kind: s.bc_kind,
            first_index: s.first_index,
            lambdas: s.eigenvalues.clone(),
            weyl: self.weyl_coeffs.clone(),
            block_ids: s.block_ids(),
            stabilization_index: Some(s.n_stab),
            radius: Some(s.radius),
        }
    }
}

struct Limit<T: Real> {
    lambda: Complex<T>,
    slow: bool,
}

fn newton<T: Real>(problem: &BoundaryProblem<T>, seed: Complex<T>) -> Option<Limit<T>> {
    let mut lambda = seed;
    let mut last_step = T::infinity();
    for _ in 0..100 {
        let series = characteristic_series(problem, lambda, 1).ok()?;
        let (f, df) = (series[0], series[1]);
        if f.norm() == T::zero() {
            return Some(Limit { lambda, slow: false });
        }
        if df.norm() == T::zero() {
            return None;
        }
        let mut step = f / df;
        let cap = T::lit(0.5) * (T::one() + sqrt_branch(lambda).norm());
        if step.norm() > cap {
            step = step * (cap / step.norm());
        }
        lambda -= step;
        last_step = step.norm();
        if last_step <= T::lit(1e-14) * (T::one() + lambda.norm()) {
            return Some(Limit { lambda, slow: false });
        }
    }
    (last_step <= T::lit(1e-6) * (T::one() + lambda.norm())).then_some(Limit { lambda, slow: true })
}

struct Cluster<T: Real> {
    center: Complex<T>,
    members: Vec<Complex<T>>,
    slow: bool,
}

impl<T: Real> Cluster<T> {
    fn diameter(&self) -> T {
        let mut d = T::zero();
        for a in &self.members {
            for b in &self.members {
                d = d.max((*a - *b).norm());
            }
        }
        d
    }
}

fn cluster_limits<T: Real>(limits: Vec<Limit<T>>) -> Vec<Cluster<T>> {
    let mut clusters: Vec<Cluster<T>> = Vec::new();
    for lim in limits {
        let scale = T::one() + lim.lambda.norm();
        let hit = clusters.iter_mut().find(|c| {
            let tol = if lim.slow || c.slow { SLOW_CLUSTER_TOL } else { CLUSTER_TOL };
            c.members.iter().any(|z| (*z - lim.lambda).norm() <= T::lit(tol) * scale)
        });
        match hit {
            Some(c) => {
                c.members.push(lim.lambda);
                c.slow |= lim.slow;
                let k = T::from_usize_lossy(c.members.len());
                c.center = c.members.iter().fold(Complex::new(T::zero(), T::zero()), |a, z| a + *z) / k;
            }
            None => clusters.push(Cluster {
                center: lim.lambda,
                members: vec![lim.lambda],
                slow: lim.slow,
            }),
        }
    }
    clusters
}

fn modulus_order<T: Real>(a: &Complex<T>, b: &Complex<T>) -> std::cmp::Ordering {
    a.norm()
        .partial_cmp(&b.norm())
        .unwrap_or(std::cmp::Ordering::Equal)
        .then(arg_half_open(*a).partial_cmp(&arg_half_open(*b)).unwrap_or(std::cmp::Ordering::Equal))
}

/// Centroid `(1/m)(1/2πi)∮ λ Δ'/Δ dλ` of the zeros inside a circle.
fn centroid<T: Real>(problem: &BoundaryProblem<T>, center: Complex<T>, radius: T, m: usize) -> Result<Complex<T>> {
    let s = circle_integral(center, radius, 128, |z| {
        let d = characteristic_series(problem, z, 1)?;
        Ok((z - center) * d[1] / d[0])
    })?;
    Ok(center + s / T::from_usize_lossy(m))
}

/// The first `count` eigenvalues (extended to complete a trailing block).
pub fn find_eigenvalues<T: Real>(problem: &BoundaryProblem<T>, count: usize) -> Result<Spectrum<T>> {
    if count == 0 {
        return Err(SlError::InvalidProblem("eigenvalue count must be positive".into()));
    }
    let first = problem.bc_kind().first_index();
    let last_seed = first + count + 3;
    let offsets = [(0.3, 0.3), (0.3, -0.3), (-0.3, 0.3), (-0.3, -0.3)];
    let limits: Vec<Limit<T>> = (first..=last_seed)
        .into_par_iter()
        .flat_map_iter(|n| {
            let rho = T::from_usize_lossy(n);
            let mut out = Vec::new();
            if let Some(l) = newton(problem, Complex::new(rho * rho, T::zero())) {
                out.push(l);
            }
            if n < first + 8 || out.is_empty() {
                for (a, b) in offsets {
                    let r = Complex::new(rho + T::lit(a), T::lit(b));
                    if let Some(l) = newton(problem, r * r) {
                        out.push(l);
                    }
                }
            }
            out
        })
        .collect();
    if limits.is_empty() {
        return Err(SlError::NewtonDivergence("no seed converged".into()));
    }
    let mut clusters = cluster_limits(limits);
    clusters.sort_by(|a, b| modulus_order(&a.center, &b.center));

    // Multiplicities from small circles, then centroid refinement of multiple roots.
    let centers: Vec<Complex<T>> = clusters.iter().map(|c| c.center).collect();
    let mut roots: Vec<(Complex<T>, usize)> = Vec::with_capacity(clusters.len());
    for (i, cl) in clusters.iter().enumerate() {
        let rad = T::lit(10.0) * cl.diameter() + T::lit(1e-6);
        let m = winding_number(|z| characteristic(problem, z), cl.center, rad, 32)?;
        if m < 1 {
            return Err(SlError::NewtonDivergence(format!(
                "limit {:?} is not a zero (winding number {m})",
                cl.center
            )));
        }
        let m = m as usize;
        let mut center = cl.center;
        if m > 1 {
            let gap = centers
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, z)| (*z - cl.center).norm())
                .fold(T::infinity(), T::min);
            let iso = (T::lit(0.25) * gap).min(T::lit(0.5) * (T::one() + cl.center.norm().sqrt()));
            center = centroid(problem, cl.center, iso, m)?;
        }
        roots.push((center, m));
    }
    roots.sort_by(|a, b| modulus_order(&a.0, &b.0));

    let mut eigenvalues = Vec::new();
    let mut block_starts = Vec::new();
    let mut multiplicities = Vec::new();
    for (z, m) in &roots {
        block_starts.push(eigenvalues.len());
        multiplicities.push(*m);
        eigenvalues.extend(std::iter::repeat(*z).take(*m));
    }

    // Keep whole blocks covering `count`, and find a modulus gap after them.
    let mut keep_blocks = 0;
    while keep_blocks < block_starts.len() && block_starts[keep_blocks] < count {
        keep_blocks += 1;
    }
    let gap_ok = |a: Complex<T>, b: Complex<T>| b.norm() - a.norm() > T::lit(MODULUS_MARGIN) * (T::one() + b.norm());
    while keep_blocks < block_starts.len() {
        let last = block_starts[keep_blocks] - 1;
        if gap_ok(eigenvalues[last], eigenvalues[last + 1]) {
            break;
        }
        keep_blocks += 1;
    }
    if keep_blocks >= block_starts.len() {
        return Err(SlError::NewtonDivergence(format!(
            "located only {} eigenvalues, fewer than the {count} requested",
            eigenvalues.len()
        )));
    }
    let kept = block_starts[keep_blocks];
    let census_radius = (eigenvalues[kept - 1].norm() + eigenvalues[kept].norm()) / T::lit(2.0);
    eigenvalues.truncate(kept);
    block_starts.truncate(keep_blocks);
    multiplicities.truncate(keep_blocks);

    census(problem, census_radius, kept)?;

    // Stabilization index: all later blocks simple and a strict modulus gap.
    let mut n_pos = None;
    for p in 0..kept.saturating_sub(1) {
        let later_simple = block_starts
            .iter()
            .zip(&multiplicities)
            .all(|(&s, &m)| s + m <= p + 1 || m == 1);
        let block_end = block_starts.iter().zip(&multiplicities).any(|(&s, &m)| s + m == p + 1);
        if later_simple && block_end && gap_ok(eigenvalues[p], eigenvalues[p + 1]) {
            n_pos = Some(p);
            break;
        }
    }
    let n_pos = n_pos.ok_or_else(|| {
        SlError::NewtonDivergence("no stabilization index within the computed range; increase the count".into())
    })?;
    let radius = (eigenvalues[n_pos].norm() + eigenvalues[n_pos + 1].norm()) / T::lit(2.0);
    census(problem, radius, n_pos + 1)?;

    let mut asymptotic_constant = T::zero();
    for (p, z) in eigenvalues.iter().enumerate() {
        let n = first + p;
        if n >= 1 {
            let nn = T::from_usize_lossy(n);
            asymptotic_constant = asymptotic_constant.max(nn * (sqrt_branch(*z) - Complex::new(nn, T::zero())).norm());
        }
    }

    Ok(Spectrum {
        bc_kind: problem.bc_kind(),
        first_index: first,
        eigenvalues,
        block_starts,
        multiplicities,
        n_stab: first + n_pos,
        radius,
        census_radius,
        asymptotic_constant,
    })
}

/// Argument-principle count on `|λ| = radius`, compared with `located`.
pub fn census<T: Real>(problem: &BoundaryProblem<T>, radius: T, located: usize) -> Result<()> {
    let samples = (16 * located).max(256);
    let zero = Complex::new(T::zero(), T::zero());
    let w = winding_number(|z| characteristic(problem, z), zero, radius, samples)?;
    if w != located as i64 {
        return Err(SlError::RootCountMismatch {
            winding: w,
            located,
            radius: radius.as_f64(),
        });
    }
    Ok(())
}

/// Generalized weight numbers `α_{n+ν} = ∫ φ_{n+ν} φ_{n+m−1}` per block.
pub fn compute_alphas<T: Real>(problem: &BoundaryProblem<T>, spectrum: &Spectrum<T>) -> Result<Vec<Complex<T>>> {
    let step = problem.step();
    let per_block: Vec<Result<Vec<Complex<T>>>> = spectrum
        .blocks()
        .into_par_iter()
        .map(|(s, m)| {
            let traces = integrate_phi(problem, spectrum.eigenvalues[s], m - 1)?;
            let top = &traces[m - 1].values;
            let alphas: Vec<Complex<T>> = traces
                .iter()
                .map(|tr| {
                    let prod: Vec<Complex<T>> = tr.values.iter().zip(top).map(|(a, b)| *a * *b).collect();
                    simpson(&prod, step)
                })
                .collect();
            if !(alphas[0].norm() >= T::lit(1e-10)) {
                return Err(SlError::DegenerateWeight {
                    index: spectrum.index(s),
                    modulus: alphas[0].norm().as_f64(),
                });
            }
            Ok(alphas)
        })
        .collect();
    let mut out = Vec::with_capacity(spectrum.len());
    for block in per_block {
        out.extend(block?);
    }
    Ok(out)
}

/// `b` with `Σ_{k≤ν} a_{ν−k} b_k = σ δ_{ν0}`, i.e. `σ` times the reciprocal series.
fn reciprocal_series<T: Real>(a: &[Complex<T>], sigma: T) -> Option<Vec<Complex<T>>> {
    if a[0].norm() == T::zero() || !a[0].norm().is_finite() {
        return None;
    }
    let mut b = Vec::with_capacity(a.len());
    b.push(Complex::new(sigma, T::zero()) / a[0]);
    for nu in 1..a.len() {
        let mut acc = Complex::new(T::zero(), T::zero());
        for k in 0..nu {
            acc += a[nu - k] * b[k];
        }
        b.push(-acc / a[0]);
    }
    Some(b)
}

pub(crate) fn weyl_sign<T: Real>(kind: BcKind) -> T {
    T::lit(kind.weyl_sign())
}

/// Block-wise conversion of weights into Weyl coefficients.
pub fn alphas_to_weyl_blocks<T: Real>(
    alphas: &[Complex<T>],
    blocks: &[(usize, usize)],
    bc_kind: BcKind,
    first_index: usize,
) -> Result<Vec<Complex<T>>> {
    let mut out = vec![Complex::new(T::zero(), T::zero()); alphas.len()];
    for &(s, m) in blocks {
        let b = reciprocal_series(&alphas[s..s + m], weyl_sign(bc_kind)).ok_or(SlError::DegenerateWeight {
            index: first_index + s,
            modulus: alphas[s].norm().as_f64(),
        })?;
        // b_k = M_{n+m−1−k}
        for (k, v) in b.into_iter().enumerate() {
            out[s + m - 1 - k] = v;
        }
    }
    Ok(out)
}

/// Block-wise conversion of Weyl coefficients into weights.
pub fn weyl_to_alpha_blocks<T: Real>(
    weyl: &[Complex<T>],
    blocks: &[(usize, usize)],
    bc_kind: BcKind,
    first_index: usize,
) -> Result<Vec<Complex<T>>> {
    let mut out = vec![Complex::new(T::zero(), T::zero()); weyl.len()];
    for &(s, m) in blocks {
        let b: Vec<Complex<T>> = (0..m).map(|k| weyl[s + m - 1 - k]).collect();
        let a = reciprocal_series(&b, weyl_sign(bc_kind)).ok_or(SlError::DegenerateCoefficient { index: first_index + s })?;
        out[s..s + m].copy_from_slice(&a);
    }
    Ok(out)
}

pub fn alphas_to_weyl_coeffs<T: Real>(alphas: &[Complex<T>], spectrum: &Spectrum<T>) -> Result<Vec<Complex<T>>> {
    check_len(alphas.len(), spectrum.len())?;
    alphas_to_weyl_blocks(alphas, &spectrum.blocks(), spectrum.bc_kind, spectrum.first_index)
}

pub fn weyl_coeffs_to_alphas<T: Real>(weyl: &[Complex<T>], spectrum: &Spectrum<T>) -> Result<Vec<Complex<T>>> {
    check_len(weyl.len(), spectrum.len())?;
    weyl_to_alpha_blocks(weyl, &spectrum.blocks(), spectrum.bc_kind, spectrum.first_index)
}

fn check_len(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(SlError::BlockStructureError(format!("{got} coefficients for {want} eigenvalues")));
    }
    Ok(())
}

/// Laurent coefficients `M_{n+ν}` of the Weyl function at the block starting at index `n`.
pub fn residues_of_weyl<T: Real>(problem: &BoundaryProblem<T>, spectrum: &Spectrum<T>, n: usize) -> Result<Vec<Complex<T>>> {
    let pos = spectrum.position(n).ok_or(SlError::IsolationFailure { index: n })?;
    let b = spectrum
        .block_starts
        .iter()
        .position(|&s| s == pos)
        .ok_or_else(|| SlError::BlockStructureError(format!("index {n} does not start a multiplicity block")))?;
    let m = spectrum.multiplicities[b];
    let center = spectrum.eigenvalues[pos];
    let mut gap = T::infinity();
    for z in &spectrum.eigenvalues {
        if *z != center {
            gap = gap.min((*z - center).norm());
        }
    }
    let outside = spectrum.census_radius - center.norm();
    let mut radius = gap / T::lit(2.0);
    if outside > T::zero() {
        radius = radius.min(outside);
    }
    if !radius.is_finite() {
        radius = T::one();
    }
    if radius < T::lit(1e-10) {
        return Err(SlError::IsolationFailure { index: n });
    }
    let nodes = circle_nodes(center, radius, RESIDUE_NODES);
    let values: Vec<Complex<T>> = nodes.iter().map(|z| weyl_function(problem, *z)).collect::<Result<_>>()?;
    let count = T::from_usize_lossy(RESIDUE_NODES);
    Ok((0..m)
        .map(|nu| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (z, v) in nodes.iter().zip(&values) {
                acc += *v * (*z - center).powu(nu as u32 + 1);
            }
            acc / count
        })
        .collect())
}

/// Eigenvalues, weights and Weyl coefficients, with the residue cross-check on indices `≤ N+5`.
pub fn full_gsd<T: Real>(problem: &BoundaryProblem<T>, count: usize) -> Result<GeneralizedSpectralData<T>> {
    let spectrum = find_eigenvalues(problem, count)?;
    let alphas = compute_alphas(problem, &spectrum)?;
    let weyl = alphas_to_weyl_coeffs(&alphas, &spectrum)?;
    let limit = spectrum.n_stab + 5;
    let checks: Vec<(usize, usize)> = spectrum
        .blocks()
        .into_iter()
        .filter(|&(s, _)| spectrum.index(s) <= limit)
        .collect();
    let residues: Vec<Result<Vec<Complex<T>>>> = checks
        .par_iter()
        .map(|&(s, _)| residues_of_weyl(problem, &spectrum, spectrum.index(s)))
        .collect();
    let mut worst = T::zero();
    for (&(s, m), res) in checks.iter().zip(residues) {
        let res = res?;
        let scale = res.iter().fold(T::zero(), |a, z| a.max(z.norm()));
        for nu in 0..m {
            let err = (weyl[s + nu] - res[nu]).norm() / scale.max(T::min_positive_value());
            worst = worst.max(err);
            if !(err <= T::lit(CROSS_VALIDATION_TOL)) {
                return Err(SlError::CrossValidationFailure {
                    index: spectrum.index(s + nu),
                    from_weights: format!("{}", weyl[s + nu]),
                    from_residues: format!("{}", res[nu]),
                    error: err.as_f64(),
                });
            }
        }
    }
    Ok(GeneralizedSpectralData {
        spectrum,
        alphas,
        weyl_coeffs: weyl,
        cross_validation_error: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    type C = Complex<f64>;

    fn zero(kind: BcKind, n: usize) -> BoundaryProblem<f64> {
        BoundaryProblem::from_fn(n, |_| C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), kind).unwrap()
    }

    #[test]
    fn weight_conversion_examples() {
        let blocks = [(0usize, 2usize)];
        let m = alphas_to_weyl_blocks(&[C::new(2.0, 0.0), C::new(1.0, 0.0)], &blocks, BcKind::Robin, 0).unwrap();
        assert!((m[1] - C::new(0.5, 0.0)).norm() < 1e-15);
        assert!((m[0] - C::new(-0.25, 0.0)).norm() < 1e-15);
        let a = weyl_to_alpha_blocks(&m, &blocks, BcKind::Robin, 0).unwrap();
        assert!((a[0] - C::new(2.0, 0.0)).norm() < 1e-15 && (a[1] - C::new(1.0, 0.0)).norm() < 1e-15);

        let one = C::new(1.0, 0.0);
        let z = C::new(0.0, 0.0);
        let m = alphas_to_weyl_blocks(&[one, z, z], &[(0, 3)], BcKind::Robin, 0).unwrap();
        assert_eq!(m, vec![z, z, one]);

        let m = alphas_to_weyl_blocks(&[C::new(PI / 2.0, 0.0)], &[(0, 1)], BcKind::Robin, 0).unwrap();
        assert!((m[0].re - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn degenerate_inputs_are_reported() {
        let z = C::new(0.0, 0.0);
        assert!(matches!(
            alphas_to_weyl_blocks(&[z, C::new(1.0, 0.0)], &[(0, 2)], BcKind::Robin, 3),
            Err(SlError::DegenerateWeight { index: 3, .. })
        ));
        assert!(matches!(
            weyl_to_alpha_blocks(&[C::new(1.0, 0.0), z], &[(0, 2)], BcKind::Robin, 0),
            Err(SlError::DegenerateCoefficient { index: 0 })
        ));
    }

    #[test]
    fn zero_potential_robin_spectrum() {
        let p = zero(BcKind::Robin, 257);
        let s = find_eigenvalues(&p, 6).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s.n_stab, 0);
        assert!(s.multiplicities.iter().all(|&m| m == 1));
        for (k, z) in s.eigenvalues.iter().enumerate() {
            assert!((z - C::new((k * k) as f64, 0.0)).norm() < 1e-5, "{k}: {z}");
        }
        assert!(s.radius > 0.0 && s.radius < 1.0);
    }

    #[test]
    fn zero_potential_dirichlet_spectrum() {
        let p = zero(BcKind::Dirichlet, 257);
        let s = find_eigenvalues(&p, 5).unwrap();
        assert_eq!(s.first_index, 1);
        assert_eq!(s.n_stab, 1);
        for (k, z) in s.eigenvalues.iter().enumerate() {
            let n = (k + 1) as f64;
            assert!((z - C::new(n * n, 0.0)).norm() < 1e-5);
        }
    }

    #[test]
    fn weights_and_residues_of_zero_potential() {
        let p = zero(BcKind::Robin, 257);
        let g = full_gsd(&p, 5).unwrap();
        assert!((g.alphas[0].re - PI).abs() < 1e-8);
        assert!((g.weyl_coeffs[0].re - 1.0 / PI).abs() < 1e-8);
        for k in 1..5 {
            assert!((g.alphas[k].re - PI / 2.0).abs() < 1e-8);
            assert!((g.weyl_coeffs[k].re - 2.0 / PI).abs() < 1e-8);
        }
        let d = full_gsd(&zero(BcKind::Dirichlet, 257), 3).unwrap();
        for k in 0..3 {
            let n = (k + 1) as f64;
            assert!((d.weyl_coeffs[k].re + 2.0 * n * n / PI).abs() < 1e-6 * n * n);
            assert!((d.weyl_coeffs[k] * d.alphas[k] + 1.0).norm() < 1e-8);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn weight_conversion_round_trips(
            raw in proptest::collection::vec((0.1f64..10.0, 0.0f64..(2.0 * PI)), 6),
            split in 1usize..4,
            dirichlet in any::<bool>(),
        ) {
            let alphas: Vec<C> = raw.iter().map(|&(r, t)| C::from_polar(r, t)).collect();
            let blocks = vec![(0, split), (split, 3), (split + 3, 3 - split)];
            let blocks: Vec<_> = blocks.into_iter().filter(|b| b.1 > 0).collect();
            let kind = if dirichlet { BcKind::Dirichlet } else { BcKind::Robin };
            let m = alphas_to_weyl_blocks(&alphas, &blocks, kind, 0).unwrap();
            let back = weyl_to_alpha_blocks(&m, &blocks, kind, 0).unwrap();
            for (a, b) in alphas.iter().zip(&back) {
                prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
            }
        }
    }
}
