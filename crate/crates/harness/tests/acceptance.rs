//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slmap::tasks::{self, SweepReport};
use slmap::{ExperimentConfig, Task};
use slmap_core::partial_fraction::{build_mn, hat_mn};
use slmap_core::C64;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn config(task: Task, toml: &str) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_toml(toml).expect("acceptance config parses");
    cfg.task = task;
    cfg
}

fn criterion_1() -> slmap::Result<Verdict> {
    let t0 = Instant::now();
    let robin = tasks::forward(&config(Task::Forward, "[model]\npreset = \"zero-robin\"\ngrid_size = 1025\ncount = 10\n"))?;
    let (mut el, mut em) = (0.0f64, 0.0f64);
    for (p, (l, m)) in robin.model.data.lambdas.iter().zip(&robin.model.data.weyl).enumerate() {
        let n = p as f64;
        el = el.max((l - n * n).norm());
        em = em.max((m - if p == 0 { 1.0 / PI } else { 2.0 / PI }).norm());
    }
    let dir = tasks::forward(&config(Task::Forward, "[model]\npreset = \"zero-dirichlet\"\ngrid_size = 1025\ncount = 10\n"))?;
    let mut ed = 0.0f64;
    for (p, (l, m)) in dir.model.data.lambdas.iter().zip(&dir.model.data.weyl).enumerate() {
        let n = (p + 1) as f64;
        let want = -2.0 * n * n / PI;
        ed = ed.max((m - want).norm() / want.abs()).max((l - n * n).norm() / (n * n));
    }
    let secs = t0.elapsed().as_secs_f64();
    Ok(verdict(
        el <= 1e-8 && em <= 1e-8 && ed <= 1e-6 && secs < 10.0,
        format!("robin |lambda - n^2| = {el:.1e}, |M - M_ref| = {em:.1e}; dirichlet rel = {ed:.1e}; {secs:.1} s"),
    ))
}

fn criterion_2() -> slmap::Result<Verdict> {
    let mut pass = true;
    let mut detail = Vec::new();
    for preset in ["zero-robin", "smooth-complex"] {
        let t0 = Instant::now();
        let cfg = config(
            Task::Inverse,
            &format!("[model]\npreset = \"{preset}\"\n[perturbation]\nkind = \"identity\"\n"),
        );
        let (g, run) = tasks::inverse(&cfg)?;
        let l2 = run.l2();
        let bc = run.h_err(&g.model.problem) + run.big_h_err(&g.model.problem);
        let secs = t0.elapsed().as_secs_f64();
        pass &= l2 <= 1e-7 && bc <= 1e-8 && secs < 60.0;
        detail.push(format!("{preset}: l2 = {l2:.1e}, |dh| + |dH| = {bc:.1e}, {secs:.1} s"));
    }
    Ok(verdict(pass, detail.join("; ")))
}

const TAIL_CRITERION_3: &str = "[model]\npreset = \"zero-robin\"\n[perturbation]\nkind = \"tail\"\ndeltas = [1e-3]\nseed = 1\n";

fn criterion_3() -> slmap::Result<Verdict> {
    let cfg = config(Task::Roundtrip, TAIL_CRITERION_3);
    let r = tasks::roundtrip(&cfg)?;
    let (el, em) = (r.comparison.max_lambda_err, r.comparison.max_weyl_err);
    Ok(verdict(
        el <= 1e-5 && em <= 1e-4 && r.comparison.rows.len() == r.model.n_stab() + 11,
        format!(
            "n <= N + 10 = {}: eigenvalue err / (1 + |lambda|) = {el:.1e}, Weyl rel. err = {em:.1e}",
            r.model.n_stab() + 10
        ),
    ))
}

fn tail_sweep(preset: &str) -> slmap::Result<SweepReport> {
    tasks::sweep(&config(
        Task::Sweep,
        &format!("[model]\npreset = \"{preset}\"\n[perturbation]\nkind = \"tail\"\ndeltas = [1e-2, 1e-3, 1e-4]\nseed = 1\n"),
    ))
}

fn criterion_4(sweeps: &[(&str, SweepReport)]) -> Verdict {
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, s) in sweeps {
        let ok = s.ok_rows().count() == 3 && s.slope.is_some_and(|k| (0.8..=1.2).contains(&k));
        pass &= ok;
        detail.push(format!("{name}: slope = {}", s.slope.map_or("undefined".into(), |k| format!("{k:.4}"))));
    }
    verdict(pass, detail.join("; "))
}

fn criterion_5(sweeps: &[(&str, SweepReport)]) -> Verdict {
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, s) in sweeps {
        let ratios: Vec<String> = s.ok_rows().map(|r| format!("{:.4}", r.max_norm_proxy / r.delta)).collect();
        let spread = s.ratio_spread(|r| r.max_norm_proxy);
        pass &= s.ok_rows().count() == 3 && spread <= 3.0;
        detail.push(format!("{name}: proxy/delta = [{}], spread {spread:.3}", ratios.join(", ")));
    }
    verdict(pass, detail.join("; "))
}

const SPLIT: &str = "[model]\npreset = \"double-ep\"\n[perturbation]\ndeltas = [1e-2, 1e-3, 1e-4]\n[hypotheses]\ntheorem2_ceiling = 10.0\n";

fn criterion_6(split: &SweepReport) -> Verdict {
    let moments = split.rows.iter().filter_map(|r| r.moment_residual).fold(0.0f64, f64::max);
    let t2 = split.rows.iter().all(|r| r.theorem2_pass == Some(true));
    let ratios: Vec<String> = split.ok_rows().map(|r| format!("{:.2}", r.l2 / r.delta)).collect();
    let spread = split.ratio_spread(|r| r.l2);
    let m0 = split.model.gsd.spectrum.multiplicities[0];
    verdict(
        m0 == 2 && split.ok_rows().count() == 3 && t2 && moments <= 1e-12 && spread <= 3.0,
        format!(
            "m_0 = {m0}, moment residual = {moments:.1e}, theorem2 {}, l2/delta = [{}], spread {spread:.3}",
            if t2 { "pass" } else { "fail" },
            ratios.join(", ")
        ),
    )
}

/// `1/(λ − λ̃) = Σ_{s<2m−1} (λ̃−λ₀)^s/(λ−λ₀)^{s+1} + (λ̃−λ₀)^{2m−1}/((λ−λ₀)^{2m−1}(λ−λ̃))`.
fn expansion_residual(rng: &mut ChaCha8Rng, m: u32) -> f64 {
    let l0 = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let l = l0 + C64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..2.0 * PI));
    let lt = l0 + C64::from_polar(rng.gen_range(0.0..0.4), rng.gen_range(0.0..2.0 * PI));
    let mut acc = C64::new(0.0, 0.0);
    for s in 0..2 * m - 1 {
        acc += (lt - l0).powu(s) / (l - l0).powu(s + 1);
    }
    acc += (lt - l0).powu(2 * m - 1) / ((l - l0).powu(2 * m - 1) * (l - lt));
    let exact = 1.0 / (l - lt);
    (acc - exact).norm() / exact.norm()
}

fn criterion_7(split: &SweepReport) -> slmap::Result<Verdict> {
    let ratios: Vec<String> = split.ok_rows().map(|r| format!("{:.4}", r.contour_sup / r.delta)).collect();
    let spread = split.ratio_spread(|r| r.contour_sup);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut sm2 = 0.0f64;
    for _ in 0..500 {
        for m in [2, 3] {
            sm2 = sm2.max(expansion_residual(&mut rng, m));
        }
    }
    // The grouped form of the difference of the two partial fractions on the
    // splitting family, at random points of the contour.
    let model = &split.model.data;
    let n = split.model.n_stab();
    let k = tasks::split_index(&config(Task::SplitDemo, SPLIT), model)?;
    let p = model.position(k).expect("split index in data");
    let l0 = model.lambdas[p];
    let r = model.radius.expect("model radius");
    let mut grouped_err = 0.0f64;
    for delta in [1e-2, 1e-3, 1e-4] {
        let (t, _) = slmap_core::perturbation::split_double(model, k, delta)?;
        let hat = hat_mn(&build_mn(model, n)?, &build_mn(&t, n)?);
        for _ in 0..50 {
            let l = C64::from_polar(r, rng.gen_range(0.0..2.0 * PI));
            let mut g = C64::new(0.0, 0.0);
            for s in 0..3u32 {
                let mom: C64 = (p..p + 2).map(|j| t.weyl[j] * (t.lambdas[j] - l0).powu(s)).sum();
                let base = if s < 2 { model.weyl[p + s as usize] } else { C64::new(0.0, 0.0) };
                g += (mom - base) / (l - l0).powu(s + 1);
            }
            for j in p..p + 2 {
                g += t.weyl[j] * (t.lambdas[j] - l0).powu(3) / ((l - l0).powu(3) * (l - t.lambdas[j]));
            }
            // Both sides cancel terms of size |M̃| ~ δ^{-1/2}, so the error is
            // measured against the summands rather than against the result.
            let scale: f64 = (p..p + 2).map(|j| (t.weyl[j] / (l - t.lambdas[j])).norm()).sum::<f64>()
                + (model.weyl[p] / (l - l0)).norm()
                + (model.weyl[p + 1] / (l - l0).powu(2)).norm();
            grouped_err = grouped_err.max((hat.eval(l) - g).norm() / scale);
        }
    }
    Ok(verdict(
        split.ok_rows().count() == 3 && spread <= 3.0 && sm2 <= 1e-12 && grouped_err <= 1e-12,
        format!(
            "contour_sup/delta = [{}], spread {spread:.3}; expansion identity rel. err {sm2:.1e}, grouped form err / summands {grouped_err:.1e}",
            ratios.join(", ")
        ),
    ))
}

fn criterion_8() -> slmap::Result<Verdict> {
    let cfg = config(
        Task::Inverse,
        "[model]\npreset = \"smooth-real\"\n[perturbation]\nkind = \"tail\"\nreal = true\ndeltas = [1e-3]\n",
    );
    let (g, run) = tasks::inverse(&cfg)?;
    let real_model = g.model.problem.q_samples().iter().all(|q| q.im == 0.0);
    let im = run.result.q_tilde.iter().fold(0.0f64, |a, q| a.max(q.im.abs()));
    Ok(verdict(
        real_model && im <= 1e-7 && run.l2() > 0.0,
        format!("max |Im q~| = {im:.1e}, |Im h~| + |Im H~| = {:.1e}, l2 = {:.2e}", run.result.h_tilde.im.abs() + run.result.big_h_tilde.im.abs(), run.l2()),
    ))
}

fn criterion_9() -> slmap::Result<Verdict> {
    let base = config(Task::Inverse, TAIL_CRITERION_3);
    let mut fine = base.clone();
    fine.discretization.contour_nodes = 512;
    fine.discretization.trunc_k = 120;
    let (_, a) = tasks::inverse(&base)?;
    let (_, b) = tasks::inverse(&fine)?;
    let diff: Vec<C64> = a.result.q_tilde.iter().zip(&b.result.q_tilde).map(|(x, y)| x - y).collect();
    let step = a.result.grid[1];
    let d = slmap_core::main_equation::l2_norm(&diff, step);
    Ok(verdict(
        d <= 1e-6,
        format!("(M_C, K) = (256, 60) -> (512, 120): |dq~|_2 = {d:.1e}, |q~ - q|_2 = {:.2e}", a.l2()),
    ))
}

fn main() {
    let t0 = Instant::now();
    let mut all = true;
    let mut report = |id: usize, name: &str, v: slmap::Result<Verdict>| {
        let (pass, detail) = match v {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= pass;
        println!("criterion {id} [{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    };
    report(1, "closed-form forward oracle", criterion_1());
    report(2, "identity reconstruction", criterion_2());
    report(3, "round-trip consistency", criterion_3());
    let sweeps = ["zero-robin", "smooth-complex"]
        .into_iter()
        .map(|p| tail_sweep(p).map(|s| (p, s)))
        .collect::<slmap::Result<Vec<_>>>();
    match &sweeps {
        Ok(s) => {
            report(4, "linear stability", Ok(criterion_4(s)));
            report(5, "operator smallness", Ok(criterion_5(s)));
        }
        Err(e) => {
            report(4, "linear stability", Err(slmap::HarnessError::Config(e.to_string())));
            report(5, "operator smallness", Err(slmap::HarnessError::Config(e.to_string())));
        }
    }
    match tasks::split_demo(&config(Task::SplitDemo, SPLIT)) {
        Ok(split) => {
            report(6, "splitting pipeline", Ok(criterion_6(&split)));
            report(7, "splitting reduces to contour smallness", criterion_7(&split));
        }
        Err(e) => {
            let msg = e.to_string();
            report(6, "splitting pipeline", Err(e));
            report(7, "splitting reduces to contour smallness", Err(slmap::HarnessError::Config(msg)));
        }
    }
    report(8, "self-adjoint reduction", criterion_8());
    report(9, "discretization robustness", criterion_9());
    println!("acceptance: {} in {:.1} s", if all { "all criteria pass" } else { "FAILURES" }, t0.elapsed().as_secs_f64());
    if !all {
        std::process::exit(1);
    }
}
