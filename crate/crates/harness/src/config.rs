//! Experiment configuration, read from TOML with one table per concern.

use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use slmap_core::main_equation::{Discretization, EpsMode};
use slmap_core::BcKind;

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Forward,
    Inverse,
    Roundtrip,
    Sweep,
    SplitDemo,
    FindDouble,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Task::Forward => "forward",
            Task::Inverse => "inverse",
            Task::Roundtrip => "roundtrip",
            Task::Sweep => "sweep",
            Task::SplitDemo => "split-demo",
            Task::FindDouble => "find-double",
        };
        f.write_str(s)
    }
}

/// A complex number written either as a plain number or as `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cplx {
    Real(f64),
    Pair([f64; 2]),
}

impl Cplx {
    pub fn value(self) -> Complex<f64> {
        match self {
            Cplx::Real(r) => Complex::new(r, 0.0),
            Cplx::Pair([re, im]) => Complex::new(re, im),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSpec {
    /// One of the bundled presets; ignored when `file` is set.
    pub preset: String,
    /// Potential samples: rows `x re im` on a uniform grid of `[0, π]`.
    pub file: Option<PathBuf>,
    pub h: Option<Cplx>,
    #[serde(rename = "H")]
    pub big_h: Option<Cplx>,
    pub bc: Option<String>,
    pub grid_size: usize,
    /// Number of eigenvalues to compute; defaults to `K + 4`.
    pub count: Option<usize>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            preset: "zero-robin".into(),
            file: None,
            h: None,
            big_h: None,
            bc: None,
            grid_size: 257,
            count: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationKind {
    Identity,
    Tail,
    Split,
    /// Data of a second potential read from `target_file`.
    Potential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    pub deltas: Vec<f64>,
    pub seed: u64,
    /// Draw real perturbations (keeps a real model self-adjoint).
    pub real: bool,
    /// Tail perturbations touch indices `N < n ≤ N + span`.
    pub span: usize,
    /// Index of the double eigenvalue to split; defaults to the first one.
    pub split_index: Option<usize>,
    /// Potential samples of the target problem for kind `potential`.
    pub target_file: Option<PathBuf>,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self {
            kind: PerturbationKind::Tail,
            deltas: vec![1e-3],
            seed: 1,
            real: false,
            span: 60,
            split_index: None,
            target_file: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretizationSpec {
    pub contour_nodes: usize,
    pub trunc_k: usize,
    pub tail_tolerance: f64,
    pub pivot_floor: f64,
    pub residual_tolerance: f64,
    /// `analytic` or `finite-difference`.
    pub eps_mode: String,
}

impl Default for DiscretizationSpec {
    fn default() -> Self {
        let d = Discretization::<f64>::default();
        Self {
            contour_nodes: d.contour_nodes,
            trunc_k: d.trunc_k,
            tail_tolerance: d.tail_tolerance,
            pivot_floor: d.pivot_floor,
            residual_tolerance: d.residual_tolerance,
            eps_mode: "analytic".into(),
        }
    }
}

impl DiscretizationSpec {
    pub fn discretization(&self) -> Discretization<f64> {
        Discretization {
            contour_nodes: self.contour_nodes,
            trunc_k: self.trunc_k,
            tail_tolerance: self.tail_tolerance,
            pivot_floor: self.pivot_floor,
            residual_tolerance: self.residual_tolerance,
        }
    }

    pub fn mode(&self) -> Result<EpsMode> {
        match self.eps_mode.as_str() {
            "analytic" => Ok(EpsMode::Analytic),
            "finite-difference" => Ok(EpsMode::FiniteDifference),
            other => Err(HarnessError::Config(format!("unknown eps_mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HypothesisSpec {
    pub delta0: f64,
    pub strict: bool,
    /// Multiplier on the higher-moment and size bounds of the splitting check.
    pub theorem2_ceiling: f64,
    /// Weight the contour by the difference of Weyl functions of the model
    /// and of the target problem instead of the data-driven partial fraction.
    pub weyl_difference: bool,
}

impl Default for HypothesisSpec {
    fn default() -> Self {
        Self {
            delta0: 1e-2,
            strict: false,
            theorem2_ceiling: 10.0,
            weyl_difference: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSpec {
    /// Eigenvalue mismatch relative to `1 + |λ|`.
    pub lambda: f64,
    /// Relative Weyl coefficient mismatch.
    pub weyl: f64,
    /// Compare indices `n ≤ N + extra`.
    pub extra: usize,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self { lambda: 1e-5, weyl: 1e-4, extra: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: PathBuf::from("slmap-out") }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub task: Task,
    pub model: ModelSpec,
    pub perturbation: PerturbationSpec,
    pub discretization: DiscretizationSpec,
    pub hypotheses: HypothesisSpec,
    pub roundtrip: ToleranceSpec,
    pub output: OutputSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: Task::Forward,
            model: ModelSpec::default(),
            perturbation: PerturbationSpec::default(),
            discretization: DiscretizationSpec::default(),
            hypotheses: HypothesisSpec::default(),
            roundtrip: ToleranceSpec::default(),
            output: OutputSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        // Relative potential files are taken relative to the config file.
        if let Some(dir) = path.parent() {
            for f in [cfg.model.file.as_mut(), cfg.perturbation.target_file.as_mut()].into_iter().flatten() {
                if f.is_relative() {
                    *f = dir.join(&*f);
                }
            }
        }
        Ok(cfg)
    }

    pub fn bc_kind(&self) -> Result<Option<BcKind>> {
        self.model
            .bc
            .as_deref()
            .map(|s| s.parse().map_err(|e: slmap_core::SlError| HarnessError::Config(e.to_string())))
            .transpose()
    }

    /// Checks that do not need any numerics.
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(HarnessError::Config(m));
        if matches!(self.task, Task::Sweep | Task::SplitDemo) && self.perturbation.deltas.is_empty() {
            return cfg("perturbation.deltas must be nonempty for a sweep".into());
        }
        if matches!(self.task, Task::Inverse | Task::Roundtrip) && self.perturbation.deltas.is_empty() {
            return cfg("perturbation.deltas must hold the perturbation size".into());
        }
        if let Some(d) = self.perturbation.deltas.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return cfg(format!("perturbation size {d} is not a nonnegative number"));
        }
        if self.model.file.is_none() && !crate::presets::PRESETS.contains(&self.model.preset.as_str()) {
            return cfg(format!(
                "unknown preset `{}` (available: {})",
                self.model.preset,
                crate::presets::PRESETS.join(", ")
            ));
        }
        if self.hypotheses.weyl_difference && self.perturbation.kind != PerturbationKind::Potential {
            return cfg("hypotheses.weyl_difference needs perturbation kind `potential`".into());
        }
        if self.perturbation.kind == PerturbationKind::Potential && self.perturbation.target_file.is_none() {
            return cfg("perturbation kind `potential` needs target_file".into());
        }
        self.bc_kind()?;
        self.discretization.mode()?;
        self.discretization
            .discretization()
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        if !(self.hypotheses.delta0 > 0.0) || !(self.hypotheses.theorem2_ceiling > 0.0) {
            return cfg("hypotheses.delta0 and hypotheses.theorem2_ceiling must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_values_accept_both_forms() {
        let cfg = ExperimentConfig::from_toml("[model]\nh = 0.5\nH = [1.0, -2.0]\n").unwrap();
        assert_eq!(cfg.model.h.unwrap().value(), Complex::new(0.5, 0.0));
        assert_eq!(cfg.model.big_h.unwrap().value(), Complex::new(1.0, -2.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml("[model]\nshape = 1\n").is_err());
    }

    #[test]
    fn empty_sweep_is_rejected() {
        let mut cfg = ExperimentConfig::from_toml("[perturbation]\ndeltas = []\n").unwrap();
        cfg.task = Task::Sweep;
        assert!(matches!(cfg.validate(), Err(HarnessError::Config(_))));
    }

    #[test]
    fn echo_round_trips() {
        let cfg = ExperimentConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }
}
