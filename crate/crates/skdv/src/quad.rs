//! Quadrature utilities: Gauss-Legendre rules, adaptive integration on the
//! line, phase-budgeted panels for oscillatory integrals, and an
//! oscillation-exact (Filon-type) Fourier transform of sampled data.

use num_complex::Complex64;
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::Mutex;

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: Lazy<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> =
        Lazy::new(|| Mutex::new(HashMap::new()));
    if let Some(v) = CACHE.lock().unwrap().get(&n) {
        return v.clone();
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Chebyshev-based initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n and P_n' by recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    CACHE
        .lock()
        .unwrap()
        .insert(n, (nodes.clone(), weights.clone()));
    (nodes, weights)
}

/// Fixed Gauss-Legendre rule on [a, b].
pub fn gl_fixed(f: &impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    x.iter().zip(&w).map(|(&xi, &wi)| wi * f(c + h * xi)).sum::<f64>() * h
}

pub fn gl_fixed_complex(f: &impl Fn(f64) -> Complex64, a: f64, b: f64, n: usize) -> Complex64 {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    x.iter()
        .zip(&w)
        .map(|(&xi, &wi)| f(c + h * xi) * wi)
        .sum::<Complex64>()
        * h
}

/// Adaptive bisection with embedded GL7/GL15 error estimate.
pub fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let coarse = gl_fixed(f, a, b, 7);
        let fine = gl_fixed(f, a, b, 15);
        // the relative floor keeps round-off noise (which shrinks at the
        // same rate as the per-level tolerance) from forcing endless splits
        if (fine - coarse).abs() <= tol.max(1e-13 * fine.abs()) || depth >= 48 {
            fine
        } else {
            let m = 0.5 * (a + b);
            rec(f, a, m, tol / 2.0, depth + 1) + rec(f, m, b, tol / 2.0, depth + 1)
        }
    }
    rec(f, a, b, tol, 0)
}

/// Adaptive integral over [a, b] with forced splits at the given interior
/// breakpoints (integrand peaks / near-resonances).
pub fn adaptive_with_breakpoints(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> f64 {
    let mut pts: Vec<f64> = vec![a, b];
    for &p in breakpoints {
        if p > a && p < b {
            pts.push(p);
        }
    }
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut total = 0.0;
    for win in pts.windows(2) {
        if win[1] > win[0] {
            total += adaptive(f, win[0], win[1], tol / pts.len() as f64);
        }
    }
    total
}

/// Integral of f over the whole line for integrands with polynomial decay
/// |f| ~ |x|^{-p}, p > 1: adaptive core on [-x0, x0] (with breakpoints),
/// then geometric tail panels doubled until their contribution is negligible.
pub fn integrate_line_decaying(
    f: &impl Fn(f64) -> f64,
    core_halfwidth: f64,
    breakpoints: &[f64],
    tol: f64,
) -> f64 {
    let x0 = core_halfwidth.max(1.0);
    let mut total = adaptive_with_breakpoints(f, -x0, x0, breakpoints, tol);
    for sign in [1.0, -1.0] {
        let mut lo = x0;
        for _ in 0..64 {
            let hi = lo * 2.0;
            let piece = adaptive(f, (sign * lo).min(sign * hi), (sign * lo).max(sign * hi), tol);
            total += piece;
            if piece.abs() < tol * 1e-2 {
                break;
            }
            lo = hi;
        }
    }
    total
}

/// Oscillatory integral int_a^b f with local phase derivative bound
/// `phase_rate(x)`: panel widths are chosen so the phase changes by at most
/// ~pi/2 per panel; GL of the given order per panel.
pub fn oscillatory_panels(
    f: &impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    phase_rate: &impl Fn(f64) -> f64,
    order: usize,
) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    let mut x = a;
    while x < b {
        let rate = phase_rate(x).abs().max(1.0);
        let w = (std::f64::consts::FRAC_PI_2 / rate).min(b - x);
        let hi = (x + w).min(b);
        total += gl_fixed_complex(f, x, hi, order);
        x = hi;
    }
    total
}

/// Nodes and weights of the panel decomposition used by `oscillatory_panels`,
/// for callers that reuse one rule across many integrands.
pub fn oscillatory_nodes(
    a: f64,
    b: f64,
    phase_rate: &impl Fn(f64) -> f64,
    order: usize,
) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut x = a;
    while x < b {
        let rate = phase_rate(x).abs().max(1.0);
        let w = (std::f64::consts::FRAC_PI_2 / rate).min(b - x);
        let hi = (x + w).min(b);
        let c = 0.5 * (x + hi);
        let h = 0.5 * (hi - x);
        for (&xi, &wi) in gx.iter().zip(&gw) {
            nodes.push(c + h * xi);
            weights.push(wi * h);
        }
        x = hi;
    }
    (nodes, weights)
}

/// phi_0(theta) = int_0^1 e^{i theta s} ds and
/// phi_1(theta) = int_0^1 s e^{i theta s} ds, with series branches near 0.
pub(crate) fn phi01(theta: f64) -> (Complex64, Complex64) {
    let i = Complex64::new(0.0, 1.0);
    if theta.abs() < 1e-4 {
        // series: phi0 = 1 + i t/2 - t^2/6 - i t^3/24 + t^4/120
        //         phi1 = 1/2 + i t/3 - t^2/8 - i t^3/30 + t^4/144
        let t = theta;
        let phi0 = Complex64::new(1.0 - t * t / 6.0 + t.powi(4) / 120.0, t / 2.0 - t.powi(3) / 24.0);
        let phi1 = Complex64::new(0.5 - t * t / 8.0 + t.powi(4) / 144.0, t / 3.0 - t.powi(3) / 30.0);
        (phi0, phi1)
    } else {
        let it = i * theta;
        let e = it.exp();
        let phi0 = (e - 1.0) / it;
        let phi1 = (e * (it - 1.0) + 1.0) / (it * it);
        (phi0, phi1)
    }
}

/// Fourier transform of uniformly sampled data by piecewise-linear Filon:
/// returns int_0^{n dt} h(t) e^{-i omega t} dt with h linear on each step.
/// Exact in the oscillation (valid for arbitrarily large omega); O(dt^2) in h.
pub fn fourier_transform_sampled(samples: &[Complex64], dt: f64, omega: f64) -> Complex64 {
    let theta = -omega * dt;
    let (phi0, phi1) = phi01(theta);
    let w_left = phi0 - phi1;
    let w_right = phi1;
    let mut total = Complex64::new(0.0, 0.0);
    for (m, pair) in samples.windows(2).enumerate() {
        let base = Complex64::new(0.0, -omega * (m as f64) * dt).exp();
        total += base * (pair[0] * w_left + pair[1] * w_right);
    }
    total * dt
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gl_nodes_sum() {
        for n in [4, 7, 15, 24] {
            let (_, w) = gauss_legendre(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn gl_polynomial_exactness() {
        // GL-7 integrates degree-13 polynomials exactly
        let f = |x: f64| x.powi(13) + 3.0 * x.powi(6) - x;
        let v = gl_fixed(&f, -1.0, 2.0, 7);
        let exact = (2.0_f64.powi(14) - 1.0) / 14.0 + 3.0 * (2.0_f64.powi(7) + 1.0) / 7.0
            - (4.0 - 1.0) / 2.0;
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn adaptive_arctan() {
        // int dx/(1+x^2) over the line = pi
        let f = |x: f64| 1.0 / (1.0 + x * x);
        let v = integrate_line_decaying(&f, 100.0, &[], 1e-12);
        assert!((v - PI).abs() < 1e-8, "v = {v}");
    }

    #[test]
    fn oscillatory_fresnel_like() {
        // int_0^10 e^{i x^2} dx against a fine reference
        let f = |x: f64| Complex64::new(0.0, x * x).exp();
        let v = oscillatory_panels(&f, 0.0, 10.0, &|x| 2.0 * x, 8);
        let reference = gl_fixed_complex(&f, 0.0, 10.0, 4000);
        assert!((v - reference).norm() < 1e-9, "err = {:.3e}", (v - reference).norm());
    }

    #[test]
    fn filon_matches_exact_gaussianish() {
        // h(t) = t(1-t) on [0,1]: int t(1-t) e^{-i w t} dt, compare with
        // dense-sampling reference; Filon should be ~O(dt^2) accurate even
        // when w dt is large.
        let n = 200;
        let dt = 1.0 / n as f64;
        let samples: Vec<Complex64> = (0..=n)
            .map(|m| {
                let t = m as f64 * dt;
                Complex64::new(t * (1.0 - t), 0.0)
            })
            .collect();
        for &w in &[0.0, 3.0, 57.0, 411.0] {
            let v = fourier_transform_sampled(&samples, dt, w);
            let f = |t: f64| Complex64::new(t * (1.0 - t), 0.0) * Complex64::new(0.0, -w * t).exp();
            let reference = gl_fixed_complex(&f, 0.0, 1.0, 3000);
            assert!(
                (v - reference).norm() < 2e-4 / (1.0 + w * w * 0.01),
                "w = {w}: err = {:.3e}",
                (v - reference).norm()
            );
        }
    }

    #[test]
    fn filon_zero_frequency_is_trapezoid() {
        let n = 50;
        let dt = 0.02;
        let samples: Vec<Complex64> = (0..=n)
            .map(|m| Complex64::new((m as f64 * dt).sin(), 0.0))
            .collect();
        let v = fourier_transform_sampled(&samples, dt, 0.0);
        let mut trap = Complex64::new(0.0, 0.0);
        for pair in samples.windows(2) {
            trap += (pair[0] + pair[1]) * 0.5 * dt;
        }
        assert!((v - trap).norm() < 1e-13);
    }
}
