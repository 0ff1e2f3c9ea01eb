//! Gauss–Legendre panels and adaptive Simpson quadrature.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / dp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl20() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(20))
}

/// 20-point Gauss–Legendre on `[a, b]`.
pub fn gl_panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (x, w) = gl20();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    x.iter().zip(w).map(|(xi, wi)| wi * f(c + h * xi)).sum::<f64>() * h
}

/// `∫_start^∞ f` over geometrically growing panels; the first panel has width
/// `h0`. The integrand is assumed to decay at least like `1/x²`.
pub fn half_line(f: &impl Fn(f64) -> f64, start: f64, h0: f64) -> f64 {
    let mut a = start;
    let mut h = h0;
    let mut total = 0.0;
    for _ in 0..80 {
        let part = gl_panel(f, a, a + h);
        total += part;
        a += h;
        if part.abs() <= 1e-17 * total.abs() && h > 1e3 * h0 {
            break;
        }
        h *= 2.0;
    }
    total
}

/// `∫_start^end f` over panels growing geometrically away from `start`.
pub fn geometric(f: &impl Fn(f64) -> f64, start: f64, end: f64, h0: f64) -> f64 {
    let mut a = start;
    let mut h = h0;
    let mut total = 0.0;
    while a < end {
        let b = (a + h).min(end);
        total += gl_panel(f, a, b);
        a = b;
        h *= 2.0;
    }
    total
}

/// Adaptive Simpson to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}
