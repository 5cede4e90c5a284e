//! Finite partial fractions `Σ_n Σ_ν c_{n,ν} / (λ − λ_n)^{ν+1}`.

use num_complex::Complex;

use crate::data::SpectralData;
use crate::error::{Result, SlError};
use crate::scalar::Real;

/// Coefficients with modulus below this are dropped after a subtraction.
pub const DROP_THRESHOLD: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct Pole<T: Real> {
    pub location: Complex<T>,
    /// `coefficients[ν]` multiplies `1/(λ − location)^{ν+1}`.
    pub coefficients: Vec<Complex<T>>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct PartialFraction<T: Real> {
    poles: Vec<Pole<T>>,
}

impl<T: Real> PartialFraction<T> {
    pub fn zero() -> Self {
        Self { poles: Vec::new() }
    }

    pub fn new(poles: Vec<Pole<T>>) -> Result<Self> {
        for (i, a) in poles.iter().enumerate() {
            if poles[..i].iter().any(|b| b.location == a.location) {
                return Err(SlError::BlockStructureError(format!(
                    "pole {} appears twice",
                    a.location
                )));
            }
        }
        Ok(Self { poles })
    }

    pub fn poles(&self) -> &[Pole<T>] {
        &self.poles
    }

    pub fn is_zero(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn eval(&self, lambda: Complex<T>) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for p in &self.poles {
            let inv = (lambda - p.location).inv();
            let mut pow = inv;
            for c in &p.coefficients {
                acc += *c * pow;
                pow *= inv;
            }
        }
        acc
    }
}

/// The partial fraction of the data's blocks with index `≤ n_max`.
pub fn build_mn<T: Real>(data: &SpectralData<T>, n_max: usize) -> Result<PartialFraction<T>> {
    let mut poles = Vec::new();
    for (s, m) in data.blocks()? {
        let start = data.index(s);
        if start > n_max {
            break;
        }
        if start + m - 1 > n_max {
            return Err(SlError::BlockStructureError(format!(
                "block starting at {start} (multiplicity {m}) straddles index {n_max}"
            )));
        }
        poles.push(Pole {
            location: data.lambdas[s],
            coefficients: data.weyl[s..s + m].to_vec(),
        });
    }
    PartialFraction::new(poles)
}

/// `target − model` with merged pole set; cancelled poles are dropped.
pub fn hat_mn<T: Real>(model: &PartialFraction<T>, target: &PartialFraction<T>) -> PartialFraction<T> {
    let mut poles: Vec<Pole<T>> = target.poles.clone();
    for mp in &model.poles {
        match poles.iter_mut().find(|p| p.location == mp.location) {
            Some(p) => {
                if p.coefficients.len() < mp.coefficients.len() {
                    p.coefficients.resize(mp.coefficients.len(), Complex::new(T::zero(), T::zero()));
                }
                for (c, m) in p.coefficients.iter_mut().zip(&mp.coefficients) {
                    *c -= *m;
                }
            }
            None => poles.push(Pole {
                location: mp.location,
                coefficients: mp.coefficients.iter().map(|c| -*c).collect(),
            }),
        }
    }
    let floor = T::lit(DROP_THRESHOLD);
    for p in &mut poles {
        while p.coefficients.last().is_some_and(|c| c.norm() < floor) {
            p.coefficients.pop();
        }
    }
    poles.retain(|p| !p.coefficients.is_empty());
    PartialFraction { poles }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::BcKind;
    use std::f64::consts::PI;

    type C = Complex<f64>;

    fn r(x: f64) -> C {
        C::new(x, 0.0)
    }

    #[test]
    fn single_and_double_poles() {
        let f = PartialFraction::new(vec![Pole { location: r(0.0), coefficients: vec![r(1.0 / PI)] }]).unwrap();
        assert!((f.eval(r(2.0)) - r(1.0 / (2.0 * PI))).norm() < 1e-16);
        let g = PartialFraction::new(vec![Pole { location: r(1.0), coefficients: vec![r(-0.25), r(0.5)] }]).unwrap();
        assert!(g.eval(r(3.0)).norm() < 1e-16);
        assert_eq!(PartialFraction::<f64>::zero().eval(r(0.3)), r(0.0));
    }

    #[test]
    fn build_from_blocks() {
        let mut d = SpectralData::simple(BcKind::Robin, vec![r(1.0), r(1.0), r(4.0)], vec![r(-0.25), r(0.5), r(2.0)]);
        d.block_ids = vec![0, 0, 2];
        let f = build_mn(&d, 1).unwrap();
        assert_eq!(f.poles().len(), 1);
        assert!(f.eval(r(3.0)).norm() < 1e-16);
        assert!(build_mn(&d, 0).is_err());
        assert!(PartialFraction::new(vec![
            Pole { location: r(1.0), coefficients: vec![r(1.0)] },
            Pole { location: r(1.0), coefficients: vec![r(2.0)] },
        ])
        .is_err());
    }

    #[test]
    fn difference_of_fractions() {
        let model = PartialFraction::new(vec![Pole { location: r(0.0), coefficients: vec![r(1.0 / PI)] }]).unwrap();
        assert!(hat_mn(&model, &model).is_zero());
        let delta = 1e-3;
        let target = PartialFraction::new(vec![Pole { location: r(delta), coefficients: vec![r(1.0 / PI)] }]).unwrap();
        let h = hat_mn(&model, &target);
        assert_eq!(h.poles().len(), 2);
        let want = (1.0 / PI) * (1.0 / (1.0 - delta) - 1.0);
        assert!((h.eval(r(1.0)) - r(want)).norm() < 1e-16);
    }
}
