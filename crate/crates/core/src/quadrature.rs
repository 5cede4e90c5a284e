//! Grid quadrature, trapezoidal rules on circles and argument-principle counting.

use num_complex::Complex;

use crate::error::{Result, SlError};
use crate::scalar::Real;

/// Composite Simpson rule on uniformly spaced samples.
///
/// An odd number of intervals is handled with Simpson's 3/8 rule on the last
/// three intervals.
pub fn simpson<T: Real>(values: &[Complex<T>], step: T) -> Complex<T> {
    let n = values.len();
    let zero = Complex::new(T::zero(), T::zero());
    match n {
        0 | 1 => return zero,
        2 => return (values[0] + values[1]) * (step / T::lit(2.0)),
        3 => return (values[0] + values[1] * T::lit(4.0) + values[2]) * (step / T::lit(3.0)),
        _ => {}
    }
    let intervals = n - 1;
    let (simpson_end, tail) = if intervals % 2 == 0 { (n - 1, false) } else { (n - 4, true) };
    let mut acc = values[0] + values[simpson_end];
    for (i, v) in values.iter().enumerate().take(simpson_end).skip(1) {
        acc += *v * if i % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
    }
    let mut total = acc * (step / T::lit(3.0));
    if tail {
        let k = simpson_end;
        total += (values[k] + (values[k + 1] + values[k + 2]) * T::lit(3.0) + values[k + 3]) * (step * T::lit(3.0) / T::lit(8.0));
    }
    total
}

/// `count` uniformly spaced points `center + radius · e^{2πij/count}`.
pub fn circle_nodes<T: Real>(center: Complex<T>, radius: T, count: usize) -> Vec<Complex<T>> {
    let two_pi = T::PI() + T::PI();
    (0..count)
        .map(|j| {
            let theta = two_pi * T::from_usize_lossy(j) / T::from_usize_lossy(count);
            center + Complex::from_polar(radius, theta)
        })
        .collect()
}

/// Trapezoidal approximation of `(1/2πi) ∮ f(z) dz` over a circle.
pub fn circle_integral<T, F>(center: Complex<T>, radius: T, count: usize, mut f: F) -> Result<Complex<T>>
where
    T: Real,
    F: FnMut(Complex<T>) -> Result<Complex<T>>,
{
    let mut acc = Complex::new(T::zero(), T::zero());
    for z in circle_nodes(center, radius, count) {
        acc += f(z)? * (z - center);
    }
    Ok(acc / T::from_usize_lossy(count))
}

/// Phase change from `from` to `to`, wrapped into `(-π, π]`.
///
/// Differencing the arguments avoids `to / from`, whose `|from|²` overflows
/// for the exponentially large values met on big contours.
fn wrapped_arg_increment<T: Real>(from: Complex<T>, to: Complex<T>) -> T {
    let two_pi = T::PI() + T::PI();
    let mut d = to.arg() - from.arg();
    if d > T::PI() {
        d = d - two_pi;
    } else if d <= -T::PI() {
        d = d + two_pi;
    }
    d
}

fn finite_sample<T: Real>(z: Complex<T>, v: Complex<T>) -> Result<Complex<T>> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(SlError::NonFiniteState {
            re: z.re.as_f64(),
            im: z.im.as_f64(),
        })
    }
}

/// Winding number of `f` around the origin along a circle, with adaptive
/// subdivision wherever the phase jumps by more than `π/4` between samples.
///
/// `samples` must resolve the phase: a turn of a multiple of `4π` between
/// neighbouring samples is invisible to any local check.
pub fn winding_number<T, F>(mut f: F, center: Complex<T>, radius: T, samples: usize) -> Result<i64>
where
    T: Real,
    F: FnMut(Complex<T>) -> Result<Complex<T>>,
{
    let two_pi = T::PI() + T::PI();
    let samples = samples.max(8);
    let limit = T::PI() / T::lit(4.0);
    let point = |theta: T| center + Complex::from_polar(radius, theta);
    let mut f = move |theta: T| {
        let z = point(theta);
        finite_sample(z, f(z)?)
    };
    let mut total = T::zero();
    let mut theta0 = T::zero();
    let mut f0 = f(theta0)?;
    let first = f0;
    for j in 1..=samples {
        let theta1 = two_pi * T::from_usize_lossy(j) / T::from_usize_lossy(samples);
        let f1 = if j == samples { first } else { f(theta1)? };
        // Depth-limited subdivision of [theta0, theta1]. An interval is
        // accepted only when both halves turn by less than `limit` and agree
        // with the direct increment, which guards against 2π aliasing.
        let mut stack = vec![(theta0, f0, theta1, f1, 0u32)];
        while let Some((ta, fa, tb, fb, depth)) = stack.pop() {
            let tm = (ta + tb) / T::lit(2.0);
            let fm = f(tm)?;
            let (left, right) = (wrapped_arg_increment(fa, fm), wrapped_arg_increment(fm, fb));
            let direct = wrapped_arg_increment(fa, fb);
            let consistent = (left + right - direct).abs() <= T::lit(1e-6);
            if (left.abs() <= limit && right.abs() <= limit && consistent) || depth >= 24 {
                total += left + right;
                continue;
            }
            // Push right half first so the left half is processed first.
            stack.push((tm, fm, tb, fb, depth + 1));
            stack.push((ta, fa, tm, fm, depth + 1));
        }
        theta0 = theta1;
        f0 = f1;
    }
    Ok((total / two_pi).round().to_i64().unwrap_or(0))
}
