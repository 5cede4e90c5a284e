//! Raw spectral data `{λ_n, M_n}` with block (multiplicity) structure, and its
//! plain-text exchange format.
//!
//! One record per index: `n re(λ) im(λ) re(M) im(M) block`, where `block` is
//! the index of the first entry of the multiplicity block. Numbers are written
//! with 17 significant digits so `f64` values round-trip bit-exactly.

use std::fmt::Write as _;

use num_complex::Complex;

use crate::error::{Result, SlError};
use crate::problem::BcKind;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralData<T: Real> {
    pub bc_kind: BcKind,
    pub first_index: usize,
    pub lambdas: Vec<Complex<T>>,
    pub weyl: Vec<Complex<T>>,
    /// Block start index (absolute `n`) for every entry.
    pub block_ids: Vec<usize>,
    pub stabilization_index: Option<usize>,
    pub radius: Option<T>,
}

impl<T: Real> SpectralData<T> {
    /// Data where every entry is its own block.
    pub fn simple(bc_kind: BcKind, lambdas: Vec<Complex<T>>, weyl: Vec<Complex<T>>) -> Self {
        let first = bc_kind.first_index();
        let block_ids = (0..lambdas.len()).map(|p| first + p).collect();
        Self {
            bc_kind,
            first_index: first,
            lambdas,
            weyl,
            block_ids,
            stabilization_index: None,
            radius: None,
        }
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Absolute index of position `pos`.
    pub fn index(&self, pos: usize) -> usize {
        self.first_index + pos
    }

    /// Position of absolute index `n`, if present.
    pub fn position(&self, n: usize) -> Option<usize> {
        n.checked_sub(self.first_index).filter(|&p| p < self.len())
    }

    /// `(start position, multiplicity)` of every block, validated.
    pub fn blocks(&self) -> Result<Vec<(usize, usize)>> {
        if self.weyl.len() != self.len() || self.block_ids.len() != self.len() {
            return Err(SlError::BlockStructureError("column lengths differ".into()));
        }
        let mut out: Vec<(usize, usize)> = Vec::new();
        for pos in 0..self.len() {
            let id = self.block_ids[pos];
            match out.last_mut() {
                Some((start, m)) if self.block_ids[*start] == id => {
                    if self.lambdas[pos] != self.lambdas[*start] {
                        return Err(SlError::BlockStructureError(format!(
                            "entries {} and {} share a block but differ in lambda",
                            self.index(*start),
                            self.index(pos)
                        )));
                    }
                    *m += 1;
                }
                _ => {
                    if id != self.index(pos) {
                        return Err(SlError::BlockStructureError(format!(
                            "entry {} starts a block labelled {id}",
                            self.index(pos)
                        )));
                    }
                    out.push((pos, 1));
                }
            }
        }
        Ok(out)
    }

    /// Entry `n`, or the fallback data's entry when this data stops earlier.
    pub fn entry_or<'a>(&'a self, fallback: &'a SpectralData<T>, n: usize) -> Option<(Complex<T>, Complex<T>)> {
        match self.position(n) {
            Some(p) => Some((self.lambdas[p], self.weyl[p])),
            None => fallback.position(n).map(|p| (fallback.lambdas[p], fallback.weyl[p])),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("# slmap spectral data\n");
        let _ = writeln!(s, "# bc = {}", self.bc_kind.name());
        let _ = writeln!(s, "# first_index = {}", self.first_index);
        if let Some(n) = self.stabilization_index {
            let _ = writeln!(s, "# N = {n}");
        }
        if let Some(r) = self.radius {
            let _ = writeln!(s, "# r = {:.16e}", r);
        }
        s.push_str("# n re_lambda im_lambda re_M im_M block\n");
        for p in 0..self.len() {
            let (l, m) = (self.lambdas[p], self.weyl[p]);
            let _ = writeln!(
                s,
                "{} {:.16e} {:.16e} {:.16e} {:.16e} {}",
                self.index(p),
                l.re,
                l.im,
                m.re,
                m.im,
                self.block_ids[p]
            );
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut bc_kind = None;
        let mut first_index = None;
        let mut stabilization_index = None;
        let mut radius = None;
        let mut lambdas = Vec::new();
        let mut weyl = Vec::new();
        let mut block_ids = Vec::new();
        let mut expected_n: Option<usize> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    let (k, v) = (k.trim(), v.trim());
                    match k {
                        "bc" => bc_kind = Some(v.parse::<BcKind>().map_err(|e| SlError::Format(e.to_string()))?),
                        "first_index" => first_index = Some(parse_num::<usize>(v, lineno)?),
                        "N" => stabilization_index = Some(parse_num::<usize>(v, lineno)?),
                        "r" => radius = Some(parse_num::<T>(v, lineno)?),
                        _ => {}
                    }
                }
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 6 {
                return Err(SlError::Format(format!("line {}: expected 6 columns, found {}", lineno + 1, cols.len())));
            }
            let n = parse_num::<usize>(cols[0], lineno)?;
            let start = *expected_n.get_or_insert(n);
            if n != start + lambdas.len() {
                return Err(SlError::Format(format!("line {}: indices must be consecutive", lineno + 1)));
            }
            lambdas.push(Complex::new(parse_num::<T>(cols[1], lineno)?, parse_num::<T>(cols[2], lineno)?));
            weyl.push(Complex::new(parse_num::<T>(cols[3], lineno)?, parse_num::<T>(cols[4], lineno)?));
            block_ids.push(parse_num::<usize>(cols[5], lineno)?);
        }
        let bc_kind = bc_kind.ok_or_else(|| SlError::Format("missing `# bc = ...` header".into()))?;
        let first_index = first_index.or(expected_n).unwrap_or(bc_kind.first_index());
        if let Some(n0) = expected_n {
            if n0 != first_index {
                return Err(SlError::Format(format!("first record has index {n0}, header says {first_index}")));
            }
        }
        let data = Self {
            bc_kind,
            first_index,
            lambdas,
            weyl,
            block_ids,
            stabilization_index,
            radius,
        };
        data.blocks()?;
        Ok(data)
    }
}

fn parse_num<V: std::str::FromStr>(s: &str, lineno: usize) -> Result<V> {
    s.parse::<V>()
        .map_err(|_| SlError::Format(format!("line {}: cannot parse `{s}`", lineno + 1)))
}
