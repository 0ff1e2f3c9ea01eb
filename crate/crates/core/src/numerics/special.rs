use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Sine integral `Si(x) = ∫_0^x sin(u)/u du`.
///
/// Power series for `|x| ≤ 2`, a Lentz continued fraction for `E1(i·x)`
/// beyond; absolute error below `1e-14` on the real line.
pub fn sine_integral(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite("sine_integral"));
    }
    Ok(si(x))
}

pub(crate) fn si(x: f64) -> f64 {
    let t = x.abs();
    let value = if t == 0.0 {
        0.0
    } else if t <= 2.0 {
        si_series(t)
    } else {
        si_continued_fraction(t)
    };
    value.copysign(x)
}

fn si_series(t: f64) -> f64 {
    // Σ (−1)^k t^{2k+1} / ((2k+1)(2k+1)!)
    let t2 = t * t;
    let mut term = t; // t^{2k+1}/(2k+1)!
    let mut sum = t;
    let mut k = 0usize;
    loop {
        k += 1;
        let a = (2 * k) as f64;
        term *= -t2 / (a * (a + 1.0));
        let contrib = term / (a + 1.0);
        sum += contrib;
        if contrib.abs() < 1e-18 * sum.abs() || k > 60 {
            break;
        }
    }
    sum
}

fn si_continued_fraction(t: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = Complex64::new(1.0, t);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 2..200 {
        let a = -((i - 1) as f64).powi(2);
        b += Complex64::new(2.0, 0.0);
        d = (d * a + b).inv();
        c = b + c.inv() * a;
        let del = c * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < 1e-16 {
            break;
        }
    }
    let h = Complex64::new(t.cos(), -t.sin()) * h;
    FRAC_PI_2 + h.im
}
