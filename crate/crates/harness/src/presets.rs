//! Bundled model potentials and potential sample files.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex;
use slmap_core::exceptional::{exp_shape, find_double, DoubleCertificate, DoubleSearch};
use slmap_core::{BcKind, Problem, C64};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

pub const PRESETS: [&str; 6] = ["zero-robin", "zero-dirichlet", "const-complex", "smooth-complex", "smooth-real", "double-ep"];

/// A resolved model problem, plus the certificate when it came from the
/// double-eigenvalue search.
#[derive(Clone, Debug)]
pub struct Model {
    pub problem: Problem,
    pub certificate: Option<DoubleCertificate<f64>>,
}

type EpKey = (usize, [u64; 4], BcKind);

fn ep_cache() -> &'static Mutex<HashMap<EpKey, Model>> {
    static CACHE: OnceLock<Mutex<HashMap<EpKey, Model>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `q = c·e^{ix}` at the exceptional point of the family nearest `c = i`.
pub fn double_ep(grid_size: usize, h: C64, big_h: C64, bc: BcKind) -> Result<Model> {
    let key = (grid_size, [h.re.to_bits(), h.im.to_bits(), big_h.re.to_bits(), big_h.im.to_bits()], bc);
    if let Some(m) = ep_cache().lock().expect("cache lock").get(&key) {
        return Ok(m.clone());
    }
    let (problem, cert) = find_double(&exp_shape(grid_size), h, big_h, bc, &DoubleSearch::default())?;
    let model = Model { problem, certificate: Some(cert) };
    ep_cache().lock().expect("cache lock").insert(key, model.clone());
    Ok(model)
}

/// Reads rows `x re im`, or the seven-column reconstruction format (the
/// reconstructed potential is taken), on a uniform grid of `[0, π]`.
pub fn read_potential(path: &Path) -> Result<Vec<C64>> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |line: usize, msg: &str| HarnessError::Config(format!("{}:{line}: {msg}", path.display()));
    let mut xs = Vec::new();
    let mut qs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| bad(i + 1, "not a number")))
            .collect::<Result<_>>()?;
        let (re, im) = match cols.len() {
            3 => (cols[1], cols[2]),
            7 => (cols[3], cols[4]),
            _ => return Err(bad(i + 1, "expected 3 or 7 columns")),
        };
        xs.push(cols[0]);
        qs.push(Complex::new(re, im));
    }
    if qs.len() < 2 {
        return Err(bad(0, "fewer than two samples"));
    }
    let step = std::f64::consts::PI / (qs.len() - 1) as f64;
    for (i, x) in xs.iter().enumerate() {
        if (x - step * i as f64).abs() > 1e-9 {
            return Err(bad(0, &format!("sample {i} at x = {x} is off the uniform grid of [0, pi]")));
        }
    }
    Ok(qs)
}

/// Builds the model problem; explicit `h`, `H` and `bc` override preset defaults.
pub fn build_model(cfg: &ExperimentConfig) -> Result<Model> {
    let m = &cfg.model;
    let zero = C64::new(0.0, 0.0);
    let bc_override = cfg.bc_kind()?;
    let h_or = |d: C64| m.h.map(|c| c.value()).unwrap_or(d);
    let bh_or = |d: C64| m.big_h.map(|c| c.value()).unwrap_or(d);
    let problem = if let Some(file) = &m.file {
        let q = read_potential(file)?;
        let bc = bc_override.unwrap_or(BcKind::Robin);
        Problem::new(q, h_or(zero), bh_or(zero), bc)?
    } else {
        let g = m.grid_size;
        let (q, h, big_h, bc): (Box<dyn Fn(f64) -> C64>, C64, C64, BcKind) = match m.preset.as_str() {
            "zero-robin" => (Box::new(|_| zero), zero, zero, BcKind::Robin),
            "zero-dirichlet" => (Box::new(|_| zero), zero, zero, BcKind::Dirichlet),
            "const-complex" => (Box::new(|_| C64::new(0.5, 0.5)), zero, zero, BcKind::Robin),
            "smooth-complex" => (Box::new(|x: f64| C64::new(1.0, 1.0) * x.sin()), zero, zero, BcKind::Robin),
            "smooth-real" => (
                Box::new(|x: f64| C64::new(x.sin(), 0.0)),
                C64::new(0.5, 0.0),
                C64::new(0.25, 0.0),
                BcKind::Robin,
            ),
            "double-ep" => {
                return double_ep(g, h_or(zero), bh_or(zero), bc_override.unwrap_or(BcKind::Robin));
            }
            other => return Err(HarnessError::Config(format!("unknown preset `{other}`"))),
        };
        let bc = bc_override.unwrap_or(bc);
        let (h, big_h) = match bc {
            BcKind::Robin => (h_or(h), bh_or(big_h)),
            BcKind::Dirichlet => (zero, zero),
        };
        Problem::from_fn(g, q, h, big_h, bc)?
    };
    Ok(Model { problem, certificate: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for p in PRESETS.iter().filter(|p| **p != "double-ep") {
            let mut cfg = ExperimentConfig::default();
            cfg.model.preset = p.to_string();
            cfg.model.grid_size = 65;
            let m = build_model(&cfg).unwrap();
            assert_eq!(m.problem.grid_size(), 65);
        }
    }

    #[test]
    fn explicit_boundary_data_override_preset() {
        let cfg = ExperimentConfig::from_toml("[model]\npreset = \"smooth-real\"\nh = 2.0\n").unwrap();
        let m = build_model(&cfg).unwrap();
        assert_eq!(m.problem.h(), C64::new(2.0, 0.0));
        assert_eq!(m.problem.big_h(), C64::new(0.25, 0.0));
    }
}
