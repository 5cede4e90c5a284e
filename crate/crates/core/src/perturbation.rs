//! Perturbation metrics between model and target spectral data, the
//! admissibility checks for the inverse solver, and generators of perturbed
//! data (random tail perturbations and the splitting of a double eigenvalue).

use std::fmt::Write as _;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::SpectralData;
use crate::error::{Result, SlError};
use crate::partial_fraction::{build_mn, hat_mn, PartialFraction};
use crate::problem::BcKind;
use crate::quadrature::circle_nodes;
use crate::scalar::{sqrt_branch, Real};

/// Minimal distance between any eigenvalue modulus and the contour radius.
pub const CONTOUR_STANDOFF: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationMetrics<T: Real> {
    /// `ξ_n` per model position.
    pub xi: Vec<T>,
    /// `1/ξ_n`, or `0` where `ξ_n = 0`.
    pub chi: Vec<T>,
    pub tail_norm: T,
    pub contour_sup: T,
}

/// One line of a condition report.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionRecord {
    pub id: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

impl ConditionRecord {
    fn le(id: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            id: id.into(),
            measured,
            bound,
            pass: measured <= bound,
        }
    }

    fn diagnostic(id: impl Into<String>, measured: f64) -> Self {
        Self {
            id: id.into(),
            measured,
            bound: f64::INFINITY,
            pass: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub records: Vec<ConditionRecord>,
}

impl ConditionReport {
    pub fn pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn get(&self, id: &str) -> Option<&ConditionRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Largest `measured / bound` among records whose id starts with `prefix`.
    pub fn max_ratio(&self, prefix: &str) -> f64 {
        self.records
            .iter()
            .filter(|r| r.id.starts_with(prefix) && r.bound.is_finite() && r.bound > 0.0)
            .map(|r| r.measured / r.bound)
            .fold(0.0, f64::max)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# condition measured bound pass\n");
        for r in &self.records {
            let _ = writeln!(s, "{} {:.16e} {:.16e} {}", r.id, r.measured, r.bound, r.pass);
        }
        s
    }
}

fn coeff_weight<T: Real>(kind: BcKind, n: usize) -> T {
    match kind {
        BcKind::Robin => T::one(),
        BcKind::Dirichlet => {
            let nn = T::from_usize_lossy(n);
            T::one() / (nn * nn)
        }
    }
}

/// `ξ_n` for every model position; target entries missing past its end count as unperturbed.
pub fn xi_sequence<T: Real>(model: &SpectralData<T>, target: &SpectralData<T>) -> Vec<T> {
    (0..model.len())
        .map(|p| {
            let n = model.index(p);
            let (lt, mt) = target.entry_or(model, n).expect("model entry exists");
            let (l, m) = (model.lambdas[p], model.weyl[p]);
            if lt == l && mt == m {
                return T::zero();
            }
            (sqrt_branch(l) - sqrt_branch(lt)).norm() + coeff_weight::<T>(model.bc_kind, n) * (m - mt).norm()
        })
        .collect()
}

/// `(Σ_{n>N} (n ξ_n)²)^{1/2}`.
pub fn tail_norm<T: Real>(model: &SpectralData<T>, xi: &[T], n_stab: usize) -> T {
    let mut acc = T::zero();
    for (p, x) in xi.iter().enumerate() {
        let n = model.index(p);
        if n > n_stab {
            let v = T::from_usize_lossy(n) * *x;
            acc += v * v;
        }
    }
    acc.sqrt()
}

/// `max |f|` over `nodes` uniform points on `|λ| = radius`.
pub fn contour_sup<T: Real, F: Fn(Complex<T>) -> Complex<T>>(f: F, radius: T, nodes: usize) -> T {
    circle_nodes(Complex::new(T::zero(), T::zero()), radius, nodes)
        .into_iter()
        .map(|z| f(z).norm())
        .fold(T::zero(), T::max)
}

/// `M̂_N = M̃_N − M_N` from the data blocks with index `≤ N`.
pub fn hat_from_data<T: Real>(model: &SpectralData<T>, target: &SpectralData<T>, n_stab: usize) -> Result<PartialFraction<T>> {
    Ok(hat_mn(&build_mn(model, n_stab)?, &build_mn(target, n_stab)?))
}

pub fn compute_metrics<T: Real>(
    model: &SpectralData<T>,
    target: &SpectralData<T>,
    n_stab: usize,
    radius: T,
    contour_nodes: usize,
) -> Result<PerturbationMetrics<T>> {
    let xi = xi_sequence(model, target);
    let chi = xi.iter().map(|&x| if x == T::zero() { T::zero() } else { T::one() / x }).collect();
    let tail = tail_norm(model, &xi, n_stab);
    let hat = hat_from_data(model, target, n_stab)?;
    let sup = contour_sup(|z| hat.eval(z), radius, contour_nodes);
    Ok(PerturbationMetrics {
        xi,
        chi,
        tail_norm: tail,
        contour_sup: sup,
    })
}

/// Errors when an eigenvalue of either data set sits on the contour.
pub fn check_contour_standoff<T: Real>(model: &SpectralData<T>, target: &SpectralData<T>, radius: T) -> Result<()> {
    for data in [model, target] {
        for (p, l) in data.lambdas.iter().enumerate() {
            let d = (l.norm() - radius).abs();
            if d < T::lit(CONTOUR_STANDOFF) {
                return Err(SlError::PoleOnContour {
                    index: data.index(p),
                    distance: d.as_f64(),
                });
            }
        }
    }
    Ok(())
}

/// Smallest signed margin by which the target eigenvalues respect the contour
/// (inside for `n ≤ N`, outside beyond). Positive means contained.
pub fn containment_margin<T: Real>(model: &SpectralData<T>, target: &SpectralData<T>, n_stab: usize, radius: T) -> T {
    let len = model.len().max(target.len());
    let mut margin = T::infinity();
    for p in 0..len {
        let n = model.first_index + p;
        let Some((l, _)) = target.entry_or(model, n) else { continue };
        let m = if n <= n_stab { radius - l.norm() } else { l.norm() - radius };
        margin = margin.min(m);
    }
    margin
}

/// Contour and tail smallness plus pole containment.
pub fn check_theorem1<T: Real>(
    model: &SpectralData<T>,
    target: &SpectralData<T>,
    n_stab: usize,
    radius: T,
    delta: T,
    contour_nodes: usize,
) -> Result<(PerturbationMetrics<T>, ConditionReport)> {
    check_contour_standoff(model, target, radius)?;
    let metrics = compute_metrics(model, target, n_stab, radius, contour_nodes)?;
    let d = delta.as_f64();
    let mut records = vec![
        ConditionRecord::le("contour_sup", metrics.contour_sup.as_f64(), d),
        ConditionRecord::le("tail_norm", metrics.tail_norm.as_f64(), d),
    ];
    let margin = containment_margin(model, target, n_stab, radius).as_f64();
    records.push(ConditionRecord {
        id: "containment".into(),
        measured: margin,
        bound: 0.0,
        pass: margin > 0.0,
    });
    // |λ_n − λ̃_n| / δ^{1/(N+1)} for n ≤ N, reported only.
    let scale = d.powf(1.0 / (n_stab as f64 + 1.0));
    let mut shift = 0.0f64;
    for p in 0..model.len() {
        let n = model.index(p);
        if n > n_stab {
            break;
        }
        if let Some((lt, _)) = target.entry_or(model, n) {
            shift = shift.max((lt - model.lambdas[p]).norm().as_f64());
        }
    }
    records.push(ConditionRecord::diagnostic("eigen_shift_ratio", if scale > 0.0 { shift / scale } else { 0.0 }));
    Ok((metrics, ConditionReport { records }))
}

/// Distinctness, moment conditions and size bounds for a target that splits
/// multiple model eigenvalues into simple ones, plus the tail condition.
///
/// `ceiling` multiplies the bounds of the higher moments and of the size
/// conditions; `1` gives the bare bounds.
pub fn check_theorem2<T: Real>(
    model: &SpectralData<T>,
    target: &SpectralData<T>,
    n_stab: usize,
    delta: T,
    ceiling: T,
) -> Result<ConditionReport> {
    for i in 0..target.len() {
        for j in 0..i {
            let (a, b) = (target.lambdas[i], target.lambdas[j]);
            if (a - b).norm() <= T::lit(1e-14) * (T::one() + a.norm()) {
                return Err(SlError::DuplicateTargetEigenvalue {
                    first: target.index(j),
                    second: target.index(i),
                });
            }
        }
    }
    let d = delta.as_f64();
    let c = ceiling.as_f64();
    let mut records = vec![ConditionRecord {
        id: "distinct_eigenvalues".into(),
        measured: 0.0,
        bound: 0.0,
        pass: true,
    }];
    for (s, m) in model.blocks()? {
        let k = model.index(s);
        if k > n_stab {
            break;
        }
        let lk = model.lambdas[s];
        let mut entries = Vec::with_capacity(m);
        for j in 0..m {
            let (lt, mt) = target
                .entry_or(model, k + j)
                .ok_or_else(|| SlError::BlockStructureError(format!("target lacks index {}", k + j)))?;
            entries.push((lt, mt));
        }
        for sidx in 0..=2 * (m - 1) {
            let mut mom = Complex::new(T::zero(), T::zero());
            for (lt, mt) in &entries {
                mom += *mt * (*lt - lk).powu(sidx as u32);
            }
            if sidx < m {
                let v = (mom - model.weyl[s + sidx]).norm().as_f64();
                records.push(ConditionRecord::le(format!("moment_k{k}_s{sidx}"), v, d));
            } else {
                records.push(ConditionRecord::le(format!("high_moment_k{k}_s{sidx}"), mom.norm().as_f64(), c * d));
            }
        }
        let mf = m as f64;
        for (j, (lt, mt)) in entries.iter().enumerate() {
            records.push(ConditionRecord::le(
                format!("shift_k{k}_j{j}"),
                (*lt - lk).norm().as_f64(),
                c * d.powf(1.0 / mf),
            ));
            records.push(ConditionRecord::le(
                format!("size_k{k}_j{j}"),
                mt.norm().as_f64(),
                c * d.powf((1.0 - mf) / mf),
            ));
        }
    }
    let xi = xi_sequence(model, target);
    records.push(ConditionRecord::le("tail_norm", tail_norm(model, &xi, n_stab).as_f64(), d));
    Ok(ConditionReport { records })
}

/// Parameters of the splitting family: `a = M_{k+1}/2`, `c = M_k/a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitParams<T: Real> {
    pub a: Complex<T>,
    pub c: Complex<T>,
}

/// Splits the double eigenvalue at index `k` into two simple ones:
/// `λ̃_k = λ_k + √δ`, `λ̃_{k+1} = λ_k − √δ + cδ`, `M̃_k = a/√δ + M_k`,
/// `M̃_{k+1} = −a/√δ`. The first two moments are preserved exactly.
pub fn split_double<T: Real>(model: &SpectralData<T>, k: usize, delta: T) -> Result<(SpectralData<T>, SplitParams<T>)> {
    let blocks = model.blocks()?;
    let p = model
        .position(k)
        .ok_or_else(|| SlError::BlockStructureError(format!("index {k} not in data")))?;
    if !blocks.iter().any(|&(s, m)| s == p && m == 2) {
        return Err(SlError::BlockStructureError(format!("index {k} does not start a double eigenvalue")));
    }
    let (mk, mk1) = (model.weyl[p], model.weyl[p + 1]);
    if mk1.norm() == T::zero() {
        return Err(SlError::ZeroLeadingCoefficient { index: k });
    }
    let a = mk1 / T::lit(2.0);
    let c = mk / a;
    let sd = delta.sqrt();
    let lk = model.lambdas[p];
    let mut out = model.clone();
    out.lambdas[p] = lk + sd;
    out.lambdas[p + 1] = lk - sd + c * delta;
    out.weyl[p] = a / sd + mk;
    out.weyl[p + 1] = -a / sd;
    out.block_ids[p + 1] = k + 1;
    Ok((out, SplitParams { a, c }))
}

/// Random perturbation of the simple tail `n > N`:
/// `ρ̃_n = ρ_n + δu_n/(2n²)`, `M̃_n = M_n + w_n δv_n/(2n²)` with `|u_n|, |v_n| ≤ 1`
/// (`w_n = n²` for Dirichlet so that the weighted distance stays `≤ δ/n²`).
/// `real` draws real `u, v`.
pub fn perturb_simple_tail<T: Real>(
    model: &SpectralData<T>,
    n_stab: usize,
    delta: T,
    seed: u64,
    real: bool,
) -> SpectralData<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Complex<T> {
        if real {
            return Complex::new(T::lit(rng.gen_range(-1.0..=1.0)), T::zero());
        }
        loop {
            let (x, y): (f64, f64) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
            if x * x + y * y <= 1.0 {
                return Complex::new(T::lit(x), T::lit(y));
            }
        }
    };
    let mut out = model.clone();
    if delta == T::zero() {
        return out;
    }
    for p in 0..model.len() {
        let n = model.index(p);
        if n <= n_stab {
            continue;
        }
        let u = draw(&mut rng);
        let v = draw(&mut rng);
        let nn = T::from_usize_lossy(n);
        let scale = delta / (T::lit(2.0) * nn * nn);
        let rho = sqrt_branch(model.lambdas[p]) + u * scale;
        out.lambdas[p] = rho * rho;
        out.weyl[p] = model.weyl[p] + v * scale / coeff_weight::<T>(model.bc_kind, n);
    }
    out
}

/// `η_n = (Σ_k 1/(k²(|n−k|+1)²))^{1/2}`, truncated; analysis-only diagnostic.
pub fn eta_sequence(count: usize) -> Vec<f64> {
    (1..=count)
        .map(|n| {
            let kmax = 10 * n + 1000;
            let s: f64 = (1..=kmax)
                .map(|k| {
                    let kk = k as f64;
                    let d = (n as f64 - kk).abs() + 1.0;
                    1.0 / (kk * kk * d * d)
                })
                .sum();
            s.sqrt()
        })
        .collect()
}
