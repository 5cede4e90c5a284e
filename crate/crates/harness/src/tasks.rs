//! The experiment tasks. Each returns a typed report; [`run`] turns a report
//! into output files and a manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde_json::{json, Value};
use slmap_core::main_equation::{solve_inverse, ContourWeight, InverseOptions, ReconstructionResult};
use slmap_core::perturbation::{check_theorem2, perturb_simple_tail, split_double, ConditionReport, SplitParams};
use slmap_core::spectral::full_gsd;
use slmap_core::{Data, Gsd, Problem, SlError, C64};

use crate::config::{ExperimentConfig, PerturbationKind, Task};
use crate::error::{HarnessError, Result};
use crate::presets::{build_model, read_potential, Model};

/// Model problem with its generalized spectral data.
#[derive(Clone, Debug)]
pub struct ModelGsd {
    pub model: Model,
    pub gsd: Gsd,
    pub data: Data,
}

impl ModelGsd {
    pub fn n_stab(&self) -> usize {
        self.gsd.spectrum.n_stab
    }

    fn n_pos(&self) -> usize {
        self.n_stab() - self.data.first_index
    }
}

/// Builds the model and computes enough eigenvalues for `K` kernel columns.
pub fn model_gsd(cfg: &ExperimentConfig) -> Result<ModelGsd> {
    let model = build_model(cfg)?;
    let k = cfg.discretization.trunc_k;
    let mut gsd = full_gsd(&model.problem, cfg.model.count.unwrap_or(k + 4))?;
    let need = gsd.spectrum.n_position() + 1 + k;
    if cfg.model.count.is_none() && gsd.spectrum.len() < need {
        gsd = full_gsd(&model.problem, need + 2)?;
    }
    let data = gsd.to_data();
    Ok(ModelGsd { model, gsd, data })
}

fn multiplicity_table(gsd: &Gsd) -> String {
    let s = &gsd.spectrum;
    let mut out = String::from("# n m re_lambda im_lambda\n");
    for (start, m) in s.blocks() {
        let l = s.eigenvalues[start];
        let _ = writeln!(out, "{} {} {:.16e} {:.16e}", s.index(start), m, l.re, l.im);
    }
    out
}

fn spectrum_summary(g: &ModelGsd) -> String {
    let s = &g.gsd.spectrum;
    let mut out = format!(
        "N = {}, r = {:.6}, {} eigenvalues, cross-validation error {:.2e}\n",
        s.n_stab,
        s.radius,
        s.len(),
        g.gsd.cross_validation_error
    );
    for (start, m) in s.blocks() {
        if m > 1 || s.index(start) <= s.n_stab {
            let l = s.eigenvalues[start];
            let _ = writeln!(out, "  n = {:3}  m = {m}  lambda = {:.10} {:+.10}i", s.index(start), l.re, l.im);
        }
    }
    out
}

fn problem_text(p: &Problem) -> String {
    let mut s = format!("# bc = {}\n", p.bc_kind().name());
    let _ = writeln!(s, "# h = {:.16e} {:.16e}", p.h().re, p.h().im);
    let _ = writeln!(s, "# H = {:.16e} {:.16e}", p.big_h().re, p.big_h().im);
    s.push_str("# x re_q im_q\n");
    for (x, q) in p.grid().iter().zip(p.q_samples()) {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", x, q.re, q.im);
    }
    s
}


#[derive(Clone, Debug)]
pub struct ForwardReport {
    pub model: ModelGsd,
}

pub fn forward(cfg: &ExperimentConfig) -> Result<ForwardReport> {
    let model = build_model(cfg)?;
    let count = cfg.model.count.unwrap_or(cfg.discretization.trunc_k + 4);
    let gsd = full_gsd(&model.problem, count)?;
    let data = gsd.to_data();
    Ok(ForwardReport { model: ModelGsd { model, gsd, data } })
}


/// Index of the double eigenvalue to split.
pub fn split_index(cfg: &ExperimentConfig, data: &Data) -> Result<usize> {
    if let Some(k) = cfg.perturbation.split_index {
        return Ok(k);
    }
    data.blocks()?
        .into_iter()
        .find(|&(_, m)| m == 2)
        .map(|(s, _)| data.index(s))
        .ok_or_else(|| HarnessError::Config("split perturbation needs a model with a double eigenvalue".into()))
}

#[derive(Clone, Debug)]
pub struct Target {
    pub data: Data,
    pub split: Option<SplitParams<f64>>,
    /// Known target problem (perturbation kind `potential`).
    pub problem: Option<Problem>,
}

pub fn make_target(cfg: &ExperimentConfig, g: &ModelGsd, delta: f64) -> Result<Target> {
    let p = &cfg.perturbation;
    let plain = |data| Target { data, split: None, problem: None };
    match p.kind {
        PerturbationKind::Identity => Ok(plain(g.data.clone())),
        PerturbationKind::Tail => {
            let keep = (g.n_pos() + p.span + 1).min(g.data.len());
            let mut short = g.data.clone();
            short.lambdas.truncate(keep);
            short.weyl.truncate(keep);
            short.block_ids.truncate(keep);
            Ok(plain(perturb_simple_tail(&short, g.n_stab(), delta, p.seed, p.real)))
        }
        PerturbationKind::Split => {
            let k = split_index(cfg, &g.data)?;
            let (data, params) = split_double(&g.data, k, delta)?;
            Ok(Target { data, split: Some(params), problem: None })
        }
        PerturbationKind::Potential => {
            let file = p
                .target_file
                .as_ref()
                .ok_or_else(|| HarnessError::Config("perturbation kind `potential` needs target_file".into()))?;
            let mp = &g.model.problem;
            let problem = Problem::new(read_potential(file)?, mp.h(), mp.big_h(), mp.bc_kind())?;
            if problem.grid_size() != mp.grid_size() {
                return Err(HarnessError::Config("target potential grid differs from the model grid".into()));
            }
            let data = full_gsd(&problem, g.data.len())?.to_data();
            Ok(Target { data, split: None, problem: Some(problem) })
        }
    }
}


#[derive(Clone, Debug)]
pub struct InverseRun {
    pub delta: f64,
    pub target: Target,
    pub theorem2: Option<ConditionReport>,
    pub result: ReconstructionResult<f64>,
}

impl InverseRun {
    pub fn l2(&self) -> f64 {
        self.result.correction_l2()
    }

    pub fn h_err(&self, p: &Problem) -> f64 {
        (self.result.h_tilde - p.h()).norm()
    }

    pub fn big_h_err(&self, p: &Problem) -> f64 {
        (self.result.big_h_tilde - p.big_h()).norm()
    }
}

pub fn inverse_at(cfg: &ExperimentConfig, g: &ModelGsd, delta: f64) -> Result<InverseRun> {
    let target = make_target(cfg, g, delta)?;
    let hyp = &cfg.hypotheses;
    let theorem2 = match target.split {
        Some(_) => {
            let rep = check_theorem2(&g.data, &target.data, g.n_stab(), delta, hyp.theorem2_ceiling)?;
            if hyp.strict && !rep.pass() {
                let failed: Vec<&str> = rep.records.iter().filter(|r| !r.pass).map(|r| r.id.as_str()).collect();
                return Err(SlError::HypothesisViolated(failed.join(", ")).into());
            }
            Some(rep)
        }
        None => None,
    };
    let contour = match (hyp.weyl_difference, &target.problem) {
        (false, _) => ContourWeight::Data,
        (true, Some(tp)) => ContourWeight::WeylDifference(tp),
        (true, None) => {
            return Err(HarnessError::Config("weyl_difference needs perturbation kind `potential`".into()));
        }
    };
    let opts = InverseOptions {
        contour,
        eps_mode: cfg.discretization.mode()?,
        delta0: hyp.delta0,
        strict: hyp.strict,
    };
    let result = solve_inverse(&g.model.problem, &g.data, &target.data, &cfg.discretization.discretization(), &opts)?;
    Ok(InverseRun { delta, target, theorem2, result })
}

pub fn inverse(cfg: &ExperimentConfig) -> Result<(ModelGsd, InverseRun)> {
    let g = model_gsd(cfg)?;
    let run = inverse_at(cfg, &g, cfg.perturbation.deltas[0])?;
    Ok((g, run))
}


#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub n: usize,
    pub target_lambda: C64,
    pub lambda: C64,
    pub lambda_err: f64,
    pub target_weyl: C64,
    pub weyl: C64,
    pub weyl_err: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub rows: Vec<CompareRow>,
    pub max_lambda_err: f64,
    pub max_weyl_err: f64,
}

impl Comparison {
    pub fn to_text(&self) -> String {
        let mut s = String::from(
            "# n re_lambda_target im_lambda_target re_lambda im_lambda lambda_err re_M_target im_M_target re_M im_M M_err\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{} {:.16e} {:.16e} {:.16e} {:.16e} {:.3e} {:.16e} {:.16e} {:.16e} {:.16e} {:.3e}",
                r.n,
                r.target_lambda.re,
                r.target_lambda.im,
                r.lambda.re,
                r.lambda.im,
                r.lambda_err,
                r.target_weyl.re,
                r.target_weyl.im,
                r.weyl.re,
                r.weyl.im,
                r.weyl_err
            );
        }
        s
    }
}

/// Forward-solves the reconstruction and compares its data with the target
/// for `n ≤ N + extra`. Eigenvalues are matched greedily by distance, since
/// the ordering of nearly equal moduli is not stable.
pub fn compare_round_trip(run: &InverseRun, g: &ModelGsd, extra: usize) -> Result<Comparison> {
    let q = run.result.problem()?;
    let npos = g.n_pos() + extra;
    let got = full_gsd(&q, npos + 3)?;
    let target = &run.target.data;
    let model = &g.data;
    let mut used = vec![false; got.spectrum.len()];
    let mut rows = Vec::new();
    for p in 0..=npos {
        let n = model.index(p);
        let (tl, tm) = target.entry_or(model, n).expect("model covers the comparison window");
        let best = (0..got.spectrum.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| {
                let (da, db) = ((got.spectrum.eigenvalues[a] - tl).norm(), (got.spectrum.eigenvalues[b] - tl).norm());
                da.total_cmp(&db).then(a.cmp(&b))
            })
            .expect("reconstructed spectrum is long enough");
        used[best] = true;
        let (l, m) = (got.spectrum.eigenvalues[best], got.weyl_coeffs[best]);
        rows.push(CompareRow {
            n,
            target_lambda: tl,
            lambda: l,
            lambda_err: (l - tl).norm() / (1.0 + tl.norm()),
            target_weyl: tm,
            weyl: m,
            weyl_err: (m - tm).norm() / tm.norm(),
        });
    }
    let max_lambda_err = rows.iter().map(|r| r.lambda_err).fold(0.0, f64::max);
    let max_weyl_err = rows.iter().map(|r| r.weyl_err).fold(0.0, f64::max);
    Ok(Comparison { rows, max_lambda_err, max_weyl_err })
}

#[derive(Clone, Debug)]
pub struct RoundtripReport {
    pub model: ModelGsd,
    pub run: InverseRun,
    pub comparison: Comparison,
}

impl RoundtripReport {
    pub fn within(&self, cfg: &ExperimentConfig) -> bool {
        self.comparison.max_lambda_err <= cfg.roundtrip.lambda && self.comparison.max_weyl_err <= cfg.roundtrip.weyl
    }
}

pub fn roundtrip(cfg: &ExperimentConfig) -> Result<RoundtripReport> {
    let (model, run) = inverse(cfg)?;
    let comparison = compare_round_trip(&run, &model, cfg.roundtrip.extra)?;
    Ok(RoundtripReport { model, run, comparison })
}


#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    pub l2: f64,
    pub h_err: f64,
    pub big_h_err: f64,
    pub contour_sup: f64,
    pub tail_norm: f64,
    pub max_norm_proxy: f64,
    pub roundtrip_lambda: f64,
    pub roundtrip_weyl: f64,
    pub split: Option<SplitParams<f64>>,
    /// Largest moment residual of the splitting check.
    pub moment_residual: Option<f64>,
    pub theorem2_pass: Option<bool>,
    /// `ok`, or the failure that prevented this row.
    pub status: String,
}

impl SweepRow {
    fn failed(delta: f64, err: &HarnessError) -> Self {
        let nan = f64::NAN;
        Self {
            delta,
            l2: nan,
            h_err: nan,
            big_h_err: nan,
            contour_sup: nan,
            tail_norm: nan,
            max_norm_proxy: nan,
            roundtrip_lambda: nan,
            roundtrip_weyl: nan,
            split: None,
            moment_residual: None,
            theorem2_pass: None,
            status: format!("failed: {err}").replace([',', '\n'], ";"),
        }
    }

    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub model: ModelGsd,
    /// Sorted by `δ` descending.
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log ‖q̃ − q‖` against `log δ`; `None` with
    /// fewer than two usable rows.
    pub slope: Option<f64>,
}

impl SweepReport {
    pub fn ok_rows(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.ok())
    }

    /// `max / min` of `f(row) / δ` over successful rows.
    pub fn ratio_spread(&self, f: impl Fn(&SweepRow) -> f64) -> f64 {
        let r: Vec<f64> = self.ok_rows().map(|row| f(row) / row.delta).collect();
        let hi = r.iter().cloned().fold(f64::MIN, f64::max);
        let lo = r.iter().cloned().fold(f64::MAX, f64::min);
        hi / lo
    }

    fn columns(&self) -> Vec<&'static str> {
        let mut c = vec![
            "delta",
            "l2",
            "h_err",
            "H_err",
            "contour_sup",
            "tail_norm",
            "max_norm_proxy",
            "roundtrip_lambda",
            "roundtrip_weyl",
        ];
        if self.rows.iter().any(|r| r.split.is_some()) {
            c.extend(["re_a", "im_a", "re_c", "im_c", "moment_residual", "theorem2"]);
        }
        c.push("status");
        c
    }

    fn cells(&self, r: &SweepRow, split_cols: bool) -> Vec<String> {
        let mut v: Vec<String> = [
            r.delta,
            r.l2,
            r.h_err,
            r.big_h_err,
            r.contour_sup,
            r.tail_norm,
            r.max_norm_proxy,
            r.roundtrip_lambda,
            r.roundtrip_weyl,
        ]
        .iter()
        .map(|x| format!("{x:.10e}"))
        .collect();
        if split_cols {
            let nan = C64::new(f64::NAN, f64::NAN);
            let (a, c) = r.split.map(|s| (s.a, s.c)).unwrap_or((nan, nan));
            for x in [a.re, a.im, c.re, c.im, r.moment_residual.unwrap_or(f64::NAN)] {
                v.push(format!("{x:.10e}"));
            }
            v.push(match r.theorem2_pass {
                Some(true) => "pass".into(),
                Some(false) => "fail".into(),
                None => "NaN".into(),
            });
        }
        v.push(r.status.clone());
        v
    }

    pub fn to_csv(&self) -> String {
        let cols = self.columns();
        let split = cols.contains(&"re_a");
        let mut s = cols.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&self.cells(r, split).join(","));
            s.push('\n');
        }
        s
    }

    /// Whitespace-separated columns with `#` comments, for gnuplot.
    pub fn to_gnuplot(&self) -> String {
        let cols = self.columns();
        let split = cols.contains(&"re_a");
        let mut s = match self.slope {
            Some(k) => format!("# slope = {k:.6}\n"),
            None => "# slope = undefined\n".to_string(),
        };
        let _ = writeln!(s, "# {}", cols.join(" "));
        for r in &self.rows {
            let mut c = self.cells(r, split);
            let status = c.pop().unwrap_or_default();
            let _ = writeln!(s, "{} # {status}", c.join(" "));
        }
        s
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if pts.len() < 2 || sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

fn sweep_row(cfg: &ExperimentConfig, g: &ModelGsd, delta: f64) -> Result<SweepRow> {
    let run = inverse_at(cfg, g, delta)?;
    let cmp = compare_round_trip(&run, g, cfg.roundtrip.extra)?;
    let p = &g.model.problem;
    let moment_residual = run.theorem2.as_ref().map(|rep| {
        rep.records
            .iter()
            .filter(|r| r.id.starts_with("moment"))
            .map(|r| r.measured)
            .fold(0.0, f64::max)
    });
    Ok(SweepRow {
        delta,
        l2: run.l2(),
        h_err: run.h_err(p),
        big_h_err: run.big_h_err(p),
        contour_sup: run.result.contour_sup,
        tail_norm: run.result.tail_norm,
        max_norm_proxy: run.result.max_norm_proxy(),
        roundtrip_lambda: cmp.max_lambda_err,
        roundtrip_weyl: cmp.max_weyl_err,
        split: run.target.split,
        moment_residual,
        theorem2_pass: run.theorem2.as_ref().map(|r| r.pass()),
        status: "ok".into(),
    })
}

/// Inverse reconstruction and round trip for every `δ`. Failures become
/// marked rows, except hypothesis violations in strict mode, which abort.
pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    let g = model_gsd(cfg)?;
    let mut deltas = cfg.perturbation.deltas.clone();
    deltas.sort_by(|a, b| b.total_cmp(a));
    let mut rows = Vec::with_capacity(deltas.len());
    for d in deltas {
        match sweep_row(cfg, &g, d) {
            Ok(r) => rows.push(r),
            Err(e @ HarnessError::Core(SlError::HypothesisViolated(_))) if cfg.hypotheses.strict => return Err(e),
            Err(e @ HarnessError::Config(_)) => return Err(e),
            Err(e) => rows.push(SweepRow::failed(d, &e)),
        }
    }
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.ok()).map(|r| (r.delta, r.l2)).collect();
    let slope = log_log_slope(&pts);
    Ok(SweepReport { model: g, rows, slope })
}

/// A sweep of the splitting family on the model's double eigenvalue.
pub fn split_demo(cfg: &ExperimentConfig) -> Result<SweepReport> {
    let mut cfg = cfg.clone();
    cfg.perturbation.kind = PerturbationKind::Split;
    sweep(&cfg)
}


#[derive(Clone, Debug)]
pub struct DoubleReport {
    pub model: ModelGsd,
}

/// Runs the double-eigenvalue search on `q = c·e^{ix}` and the forward
/// problem of the result.
pub fn find_double(cfg: &ExperimentConfig) -> Result<DoubleReport> {
    let mut cfg = cfg.clone();
    cfg.model.preset = "double-ep".into();
    cfg.model.file = None;
    Ok(DoubleReport { model: forward(&cfg)?.model })
}


/// Files, measured values and a summary produced by one task.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub files: BTreeMap<String, String>,
    pub measured: BTreeMap<String, Value>,
    pub summary: String,
    /// Set when the task ran but a configured tolerance was not met.
    pub failure: Option<String>,
}

impl Outcome {
    fn file(&mut self, name: &str, content: String) {
        self.files.insert(name.to_string(), content);
    }

    fn measure(&mut self, key: &str, v: impl serde::Serialize) {
        self.measured.insert(key.to_string(), json!(v));
    }
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn measure_model(out: &mut Outcome, g: &ModelGsd) {
    let s = &g.gsd.spectrum;
    out.measure("n_stab", s.n_stab);
    out.measure("radius", s.radius);
    out.measure("eigenvalue_count", s.len());
    out.measure("cross_validation_error", g.gsd.cross_validation_error);
    let mult: Vec<(usize, usize)> = s.blocks().into_iter().filter(|b| b.1 > 1).map(|(p, m)| (s.index(p), m)).collect();
    out.measure("multiple_eigenvalues", mult);
    if let Some(c) = &g.model.certificate {
        out.measure(
            "double_certificate",
            json!({
                "lambda": [c.lambda.re, c.lambda.im],
                "c": [c.c.re, c.c.im],
                "delta": c.delta,
                "delta_1": c.delta_1,
                "delta_2": c.delta_2,
                "winding": c.winding,
                "iterations": c.iterations,
            }),
        );
    }
}

fn measure_inverse(out: &mut Outcome, g: &ModelGsd, run: &InverseRun) {
    let p = &g.model.problem;
    let r = &run.result;
    out.measure("delta", run.delta);
    out.measure("l2_correction", r.correction_l2());
    out.measure("h_err", run.h_err(p));
    out.measure("H_err", run.big_h_err(p));
    out.measure("contour_sup", r.contour_sup);
    out.measure("tail_norm", r.tail_norm);
    out.measure("truncation_estimate", r.truncation_estimate);
    out.measure("max_norm_proxy", r.max_norm_proxy());
    out.measure("max_pivot_ratio", r.max_pivot_ratio());
    out.measure("max_residual", r.max_residual());
    out.measure("hypotheses_pass", r.hypotheses.pass());
    if let Some(rep) = &run.theorem2 {
        out.measure("theorem2_pass", rep.pass());
    }
    if let Some(s) = run.target.split {
        out.measure("split_a", [s.a.re, s.a.im]);
        out.measure("split_c", [s.c.re, s.c.im]);
    }
}

fn inverse_files(out: &mut Outcome, run: &InverseRun) {
    out.file("target.gsd", run.target.data.to_text());
    out.file("reconstruction.txt", run.result.to_text());
    let mut hyp = run.result.hypotheses.to_text();
    if let Some(rep) = &run.theorem2 {
        hyp.push_str(&rep.to_text().lines().skip(1).map(|l| format!("{l}\n")).collect::<String>());
    }
    out.file("hypotheses.txt", hyp);
}

fn inverse_summary(g: &ModelGsd, run: &InverseRun) -> String {
    let p = &g.model.problem;
    format!(
        "delta = {:e}: |q~ - q|_2 = {:.3e}, |h~ - h| = {:.3e}, |H~ - H| = {:.3e}, contour_sup = {:.3e}, tail = {:.3e}, hypotheses {}\n",
        run.delta,
        run.l2(),
        run.h_err(p),
        run.big_h_err(p),
        run.result.contour_sup,
        run.result.tail_norm,
        if run.result.hypotheses.pass() { "pass" } else { "fail" }
    )
}

/// Runs the configured task, collecting files and the manifest in memory.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let mut out = Outcome::default();
    match cfg.task {
        Task::Forward => {
            let r = forward(cfg)?;
            measure_model(&mut out, &r.model);
            out.file("model.gsd", r.model.data.to_text());
            out.file("multiplicities.txt", multiplicity_table(&r.model.gsd));
            out.summary = spectrum_summary(&r.model);
        }
        Task::FindDouble => {
            let r = find_double(cfg)?;
            measure_model(&mut out, &r.model);
            out.file("double_problem.txt", problem_text(&r.model.model.problem));
            out.file("model.gsd", r.model.data.to_text());
            out.file("multiplicities.txt", multiplicity_table(&r.model.gsd));
            let c = r.model.model.certificate.as_ref().expect("search returns a certificate");
            out.summary = format!(
                "double eigenvalue lambda = {:.10} {:+.10}i at c = {:.10} {:+.10}i after {} iterations\n|D| = {:.2e}, |D'| = {:.2e}, |D''| = {:.3e}, winding = {}\n{}",
                c.lambda.re,
                c.lambda.im,
                c.c.re,
                c.c.im,
                c.iterations,
                c.delta,
                c.delta_1,
                c.delta_2,
                c.winding,
                spectrum_summary(&r.model)
            );
        }
        Task::Inverse => {
            let (g, run) = inverse(cfg)?;
            measure_model(&mut out, &g);
            measure_inverse(&mut out, &g, &run);
            inverse_files(&mut out, &run);
            out.summary = inverse_summary(&g, &run);
        }
        Task::Roundtrip => {
            let r = roundtrip(cfg)?;
            measure_model(&mut out, &r.model);
            measure_inverse(&mut out, &r.model, &r.run);
            out.measure("roundtrip_lambda_err", r.comparison.max_lambda_err);
            out.measure("roundtrip_weyl_err", r.comparison.max_weyl_err);
            inverse_files(&mut out, &r.run);
            out.file("roundtrip.txt", r.comparison.to_text());
            out.summary = format!(
                "{}round trip over n <= N + {}: eigenvalues {:.3e}, Weyl coefficients {:.3e}\n",
                inverse_summary(&r.model, &r.run),
                cfg.roundtrip.extra,
                r.comparison.max_lambda_err,
                r.comparison.max_weyl_err
            );
            if !r.within(cfg) {
                out.failure = Some(format!(
                    "round-trip mismatch exceeds tolerances (eigenvalues {:e} > {:e} or Weyl {:e} > {:e})",
                    r.comparison.max_lambda_err, cfg.roundtrip.lambda, r.comparison.max_weyl_err, cfg.roundtrip.weyl
                ));
            }
        }
        Task::Sweep | Task::SplitDemo => {
            let r = if cfg.task == Task::Sweep { sweep(cfg)? } else { split_demo(cfg)? };
            measure_model(&mut out, &r.model);
            out.measure("slope", r.slope.map(finite).unwrap_or(Value::Null));
            out.measure("failed_rows", r.rows.iter().filter(|x| !x.ok()).count());
            if r.ok_rows().count() > 0 {
                out.measure("l2_over_delta_spread", finite(r.ratio_spread(|x| x.l2)));
                out.measure("norm_proxy_over_delta_spread", finite(r.ratio_spread(|x| x.max_norm_proxy)));
                out.measure("contour_sup_over_delta_spread", finite(r.ratio_spread(|x| x.contour_sup)));
            }
            out.file("sweep.csv", r.to_csv());
            out.file("sweep.dat", r.to_gnuplot());
            let mut s = spectrum_summary(&r.model);
            for row in &r.rows {
                let _ = writeln!(
                    s,
                    "delta = {:.1e}: |q~ - q|_2 / delta = {:.4}, proxy / delta = {:.4}, round trip {:.2e} [{}]",
                    row.delta,
                    row.l2 / row.delta,
                    row.max_norm_proxy / row.delta,
                    row.roundtrip_lambda,
                    row.status
                );
            }
            let _ = match r.slope {
                Some(k) => writeln!(s, "slope = {k:.4}"),
                None => writeln!(s, "slope = undefined (fewer than two usable rows)"),
            };
            out.summary = s;
        }
    }
    out.measure("status", out.failure.clone().unwrap_or_else(|| "ok".into()));
    let manifest = manifest(cfg, &out);
    out.file("manifest.json", manifest);
    Ok(out)
}

fn manifest(cfg: &ExperimentConfig, out: &Outcome) -> String {
    let d = slmap_core::main_equation::Discretization::<f64>::default();
    let defaults = json!({
        "contour_nodes": d.contour_nodes,
        "trunc_k": d.trunc_k,
        "tail_tolerance": d.tail_tolerance,
        "pivot_floor": d.pivot_floor,
        "residual_tolerance": d.residual_tolerance,
        "rk4_refinement": slmap_core::problem::DEFAULT_REFINEMENT,
        "residue_nodes": slmap_core::spectral::RESIDUE_NODES,
        "cross_validation_tol": slmap_core::spectral::CROSS_VALIDATION_TOL,
        "contour_standoff": slmap_core::perturbation::CONTOUR_STANDOFF,
    });
    let mut files: Vec<&str> = out.files.keys().map(String::as_str).collect();
    files.push("manifest.json");
    let m = json!({
        "tool": "slmap",
        "version": env!("CARGO_PKG_VERSION"),
        "task": cfg.task.to_string(),
        "config": cfg,
        "defaults": defaults,
        "measured": out.measured,
        "files": files,
    });
    let mut s = serde_json::to_string_pretty(&m).expect("manifest serializes");
    s.push('\n');
    s
}

/// Creates `dir` and checks that it accepts files.
pub fn prepare_output_dir(dir: &std::path::Path) -> Result<()> {
    let io = |source| HarnessError::Config(format!("output directory {} is not writable: {source}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let probe = dir.join(".slmap-write-probe");
    std::fs::write(&probe, b"").map_err(io)?;
    std::fs::remove_file(&probe).map_err(io)?;
    Ok(())
}

/// Writes every file of the outcome into `dir`.
pub fn write_outcome(out: &Outcome, dir: &std::path::Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (name, content) in &out.files {
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(|source| HarnessError::Write { path: path.clone(), source })?;
        written.push(path);
    }
    Ok(written)
}
