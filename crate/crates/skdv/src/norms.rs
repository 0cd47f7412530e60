//! Sobolev and restricted-norm (Bourgain-type) functionals on discrete fields.
//!
//! All norms use the non-unitary Fourier convention of the `grid` module and
//! include a factor (2 pi)^{-1/2} per dimension so that the s = 0 (resp.
//! b = 0) cases coincide with the plain L^2 norms of the fields.  Restriction
//! norms over a time interval are replaced throughout by the norm of the
//! smoothly windowed field ("windowed surrogate"); this upper-bounds the
//! infimum definition and is used consistently on both sides of every tested
//! inequality.

use crate::error::{Result, SkdvError};
use crate::grid::{dft, space_time_dft, ComplexField, SpaceTimeField};
use serde::Serialize;
use std::f64::consts::PI;

/// (1 + x^2)^{1/2}
#[inline]
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularityParams {
    /// Schrodinger Sobolev index.
    pub s: f64,
    /// KdV Sobolev index.
    pub k: f64,
    /// Modulation exponent, b < 1/2.
    pub b: f64,
    /// Low-frequency time exponent alpha > 1/2.
    pub alpha_d: f64,
    /// Smoothing gain index.
    pub a: f64,
}

impl RegularityParams {
    pub fn new(s: f64, k: f64, b: f64, alpha_d: f64, a: f64) -> Result<Self> {
        let p = RegularityParams { s, k, b, alpha_d, a };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("s", self.s),
            ("k", self.k),
            ("b", self.b),
            ("alpha_d", self.alpha_d),
            ("a", self.a),
        ] {
            if !v.is_finite() {
                return Err(SkdvError::InvalidParameter(format!("{name} must be finite")));
            }
        }
        if !(self.b > 1.0 / 6.0 && self.b < 0.5) {
            return Err(SkdvError::InvalidParameter(format!(
                "b must lie in (1/6, 1/2), got {}",
                self.b
            )));
        }
        if !(self.alpha_d > 0.5) {
            return Err(SkdvError::InvalidParameter(format!(
                "alpha_d must exceed 1/2, got {}",
                self.alpha_d
            )));
        }
        if self.a < 0.0 {
            return Err(SkdvError::InvalidParameter(format!(
                "a must be nonnegative, got {}",
                self.a
            )));
        }
        Ok(())
    }
}

/// Smooth time cutoff: 1 on the inner half of its support, 0 outside
/// [center - radius, center + radius], polynomial smoothstep transition of
/// the given order (C^order at the seams).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowSpec {
    pub center: f64,
    pub radius: f64,
    pub order: u32,
}

/// Smoothstep of order n on [0,1]: 0 at 0, 1 at 1, C^n at both ends.
pub fn smoothstep(n: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    // S_n(x) = x^{n+1} sum_{k=0}^{n} C(n+k, k) C(2n+1, n-k) (-x)^k
    let n = n as i64;
    let mut sum = 0.0;
    for k in 0..=n {
        let c1 = binomial(n + k, k);
        let c2 = binomial(2 * n + 1, n - k);
        sum += c1 * c2 * (-x).powi(k as i32);
    }
    x.powi((n + 1) as i32) * sum
}

fn binomial(n: i64, k: i64) -> f64 {
    if k < 0 || k > n {
        return 0.0;
    }
    let mut r = 1.0;
    for i in 0..k {
        r *= (n - i) as f64 / (i + 1) as f64;
    }
    r
}

impl WindowSpec {
    pub fn new(center: f64, radius: f64, order: u32) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite() && center.is_finite()) {
            return Err(SkdvError::InvalidParameter(format!(
                "window radius must be positive, got center={center}, radius={radius}"
            )));
        }
        Ok(WindowSpec {
            center,
            radius,
            order,
        })
    }

    /// Window equal to 1 on [t0, t1], supported on the interval widened by
    /// half its length on each side.
    pub fn covering(t0: f64, t1: f64, order: u32) -> Result<Self> {
        WindowSpec::new((t0 + t1) / 2.0, t1 - t0, order)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let d = (t - self.center).abs();
        if d <= self.radius / 2.0 {
            1.0
        } else if d >= self.radius {
            0.0
        } else {
            smoothstep(self.order, (self.radius - d) / (self.radius / 2.0))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NormReport {
    pub name: String,
    pub value: f64,
    pub params: RegularityParams,
    pub window: WindowSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Dispersion {
    Schrodinger,
    Airy,
}

impl Dispersion {
    /// Distance-to-characteristic weight argument: tau + xi^2 (Schrodinger)
    /// or tau - xi^3 (Airy).
    #[inline]
    pub fn modulation(&self, xi: f64, tau: f64) -> f64 {
        match self {
            Dispersion::Schrodinger => tau + xi * xi,
            Dispersion::Airy => tau - xi * xi * xi,
        }
    }
}

/// H^s(R) norm: ((1/2pi) sum <xi>^{2s} |u_hat|^2 dxi)^{1/2}; equals the L^2
/// norm at s = 0.
pub fn h_s_norm_line(field: &ComplexField, s: f64) -> Result<f64> {
    let spec = dft(field)?;
    let g = &field.grid;
    let sum: f64 = spec
        .iter()
        .enumerate()
        .map(|(j, v)| bracket(g.xi(j)).powf(2.0 * s) * v.norm_sqr())
        .sum();
    Ok((sum * g.dxi() / (2.0 * PI)).sqrt())
}

/// H^s(R+) surrogate: H^s(R) norm of the chi-truncation (zero for x < 0, the
/// boundary sample scaled by 1/sqrt(2) so the squared-modulus sum is the
/// trapezoid rule of the half-line integral).  Valid for -1/2 < s < 3/2;
/// an upper surrogate for the infimum-over-extensions definition.
pub fn h_s_norm_halfline(field: &ComplexField, s: f64) -> Result<f64> {
    if !(-0.5 < s && s < 1.5) {
        return Err(SkdvError::InvalidParameter(format!(
            "half-line surrogate requires -1/2 < s < 3/2, got s = {s}"
        )));
    }
    let mut trunc = field.clone();
    let i0 = field.grid.i_zero();
    for v in trunc.values[..i0].iter_mut() {
        *v = num_complex::Complex64::new(0.0, 0.0);
    }
    trunc.values[i0] *= std::f64::consts::FRAC_1_SQRT_2;
    h_s_norm_line(&trunc, s)
}

/// X^{s,b} norm of the windowed history:
/// ((1/2pi)^2 sum <xi>^{2s} <tau + xi^2>^{2b} |u_hat|^2 dxi dtau)^{1/2}
/// (Airy weight <tau - xi^3> for Dispersion::Airy).
pub fn xsb_norm(
    h: &SpaceTimeField,
    s: f64,
    b: f64,
    dispersion: Dispersion,
    window: &WindowSpec,
) -> Result<NormReport> {
    let spec = space_time_dft(h, window)?;
    let g = &h.grid;
    let mut sum = 0.0;
    for (mt, row) in spec.table.iter().enumerate() {
        let tau = spec.tau(mt);
        for (j, v) in row.iter().enumerate() {
            let xi = g.xi(j);
            let w = bracket(xi).powf(2.0 * s)
                * bracket(dispersion.modulation(xi, tau)).powf(2.0 * b);
            sum += w * v.norm_sqr();
        }
    }
    let value = (sum * g.dxi() * spec.dtau()).sqrt() / (2.0 * PI);
    Ok(NormReport {
        name: format!("xsb_{dispersion:?}"),
        value,
        params: RegularityParams {
            s,
            k: s,
            b,
            alpha_d: 1.0,
            a: 0.0,
        },
        window: *window,
    })
}

/// D_alpha norm: spectrum restricted to |xi| <= 1 with weight <tau>^alpha.
pub fn d_alpha_norm(h: &SpaceTimeField, alpha_d: f64, window: &WindowSpec) -> Result<NormReport> {
    let spec = space_time_dft(h, window)?;
    let g = &h.grid;
    let mut sum = 0.0;
    for (mt, row) in spec.table.iter().enumerate() {
        let tau = spec.tau(mt);
        let wt = bracket(tau).powf(2.0 * alpha_d);
        for (j, v) in row.iter().enumerate() {
            if g.xi(j).abs() <= 1.0 {
                sum += wt * v.norm_sqr();
            }
        }
    }
    let value = (sum * g.dxi() * spec.dtau()).sqrt() / (2.0 * PI);
    Ok(NormReport {
        name: "d_alpha".into(),
        value,
        params: RegularityParams {
            s: 0.0,
            k: 0.0,
            b: 0.3,
            alpha_d,
            a: 0.0,
        },
        window: *window,
    })
}

/// L^2_xi L^1_tau component of the Y norm:
/// ((1/2pi) sum_xi <xi>^{2s} ((1/2pi) sum_tau |u_hat| dtau)^2 dxi)^{1/2}.
pub fn l2xi_l1tau(h: &SpaceTimeField, s: f64, window: &WindowSpec) -> Result<f64> {
    let spec = space_time_dft(h, window)?;
    let g = &h.grid;
    let dtau = spec.dtau();
    let mut sum = 0.0;
    for j in 0..g.n_space {
        let l1: f64 = spec.table.iter().map(|row| row[j].norm()).sum::<f64>() * dtau / (2.0 * PI);
        sum += bracket(g.xi(j)).powf(2.0 * s) * l1 * l1;
    }
    Ok((sum * g.dxi() / (2.0 * PI)).sqrt())
}

/// Y^{s,b} norm: X^{s,b} plus the L^2_xi L^1_tau term (ensures continuity in
/// time; dominates sup_t H^s of the windowed field).
pub fn y_norm(
    h: &SpaceTimeField,
    s: f64,
    b: f64,
    dispersion: Dispersion,
    window: &WindowSpec,
) -> Result<NormReport> {
    let xsb = xsb_norm(h, s, b, dispersion, window)?;
    let l2l1 = l2xi_l1tau(h, s, window)?;
    Ok(NormReport {
        name: format!("y_{dispersion:?}"),
        value: xsb.value + l2l1,
        params: xsb.params,
        window: *window,
    })
}

/// KdV-side contraction norm: X~^{k,b} + D_alpha + L^2_xi L^1_tau.
pub fn ytilde_alpha_norm(
    h: &SpaceTimeField,
    k: f64,
    b: f64,
    alpha_d: f64,
    window: &WindowSpec,
) -> Result<NormReport> {
    let xsb = xsb_norm(h, k, b, Dispersion::Airy, window)?;
    let da = d_alpha_norm(h, alpha_d, window)?;
    let l2l1 = l2xi_l1tau(h, k, window)?;
    Ok(NormReport {
        name: "ytilde_alpha".into(),
        value: xsb.value + da.value + l2l1,
        params: RegularityParams {
            s: k,
            k,
            b,
            alpha_d,
            a: 0.0,
        },
        window: *window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SimGrid;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn window_shape() {
        let w = WindowSpec::new(0.5, 1.0, 4).unwrap();
        assert_eq!(w.eval(0.5), 1.0);
        assert_eq!(w.eval(0.1), 1.0); // inner half
        assert_eq!(w.eval(1.6), 0.0);
        assert_eq!(w.eval(-0.6), 0.0);
        let v = w.eval(1.2);
        assert!(v > 0.0 && v < 1.0);
        // monotone transition
        assert!(w.eval(1.1) > w.eval(1.3));
    }

    #[test]
    fn smoothstep_endpoint_derivatives() {
        // order-4 smoothstep has vanishing derivatives up to order 4 at both ends
        let h = 1e-3;
        let d1 = (smoothstep(4, h) - smoothstep(4, 0.0)) / h;
        assert!(d1.abs() < 1e-8, "d1 = {d1:.3e}");
        let d1b = (smoothstep(4, 1.0) - smoothstep(4, 1.0 - h)) / h;
        assert!(d1b.abs() < 1e-8);
    }

    #[test]
    fn params_validation() {
        assert!(RegularityParams::new(0.0, 0.0, 0.45, 0.6, 0.0).is_ok());
        assert!(RegularityParams::new(0.0, 0.0, 0.55, 0.6, 0.0).is_err());
        assert!(RegularityParams::new(0.0, 0.0, 0.1, 0.6, 0.0).is_err());
        assert!(RegularityParams::new(0.0, 0.0, 0.45, 0.4, 0.0).is_err());
        assert!(RegularityParams::new(0.0, 0.0, 0.45, 0.6, -0.1).is_err());
    }

    #[test]
    fn hs_zero_field() {
        let g = SimGrid::new(24.0, 256, 0.1, 1).unwrap();
        let f = ComplexField::zeros(g);
        assert_eq!(h_s_norm_line(&f, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn hs_gaussian_l2() {
        // ||e^{-x^2/2}||_{L^2} = pi^{1/4}
        let g = SimGrid::new(24.0, 1024, 0.1, 1).unwrap();
        let f = ComplexField::from_fn(g, |x| Complex64::new((-x * x / 2.0).exp(), 0.0)).unwrap();
        let v = h_s_norm_line(&f, 0.0).unwrap();
        assert!((v - PI.powf(0.25)).abs() < 1e-8, "v = {v}");
    }

    #[test]
    fn hs_gaussian_s1_quadrature_oracle() {
        // (1/2pi) int <xi>^2 * 2pi e^{-xi^2} dxi = int (1+xi^2) e^{-xi^2} dxi
        //   = sqrt(pi) * 3/2
        let g = SimGrid::new(24.0, 1024, 0.1, 1).unwrap();
        let f = ComplexField::from_fn(g, |x| Complex64::new((-x * x / 2.0).exp(), 0.0)).unwrap();
        let v = h_s_norm_line(&f, 1.0).unwrap();
        let exact = (1.5 * PI.sqrt()).sqrt();
        assert!((v - exact).abs() < 1e-6, "v = {v}, exact = {exact}");
    }

    #[test]
    fn hs_halfline_zero_restriction() {
        let g = SimGrid::new(24.0, 256, 0.1, 1).unwrap();
        // supported on x < 0 only (zero at x >= 0)
        let f = ComplexField::from_fn(g, |x| {
            if x < 0.0 {
                Complex64::new((-(x + 5.0) * (x + 5.0)).exp(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .unwrap();
        assert_eq!(h_s_norm_halfline(&f, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn hs_halfline_exponential() {
        // ||e^{-x}||_{L^2(0,inf)} = 1/sqrt(2); needs a fine grid because of
        // the jump at x = 0 (trapezoid-consistent half weight there).
        let g = SimGrid::new(56.0, 1 << 19, 0.1, 1).unwrap();
        let f = ComplexField::from_fn(g, |x| Complex64::new((-x.abs()).exp(), 0.0)).unwrap();
        let v = h_s_norm_halfline(&f, 0.0).unwrap();
        let exact = 0.5_f64.sqrt();
        assert!((v - exact).abs() < 1e-8, "v = {v:.12}, exact = {exact:.12}");
    }

    #[test]
    fn hs_halfline_range_check() {
        let g = SimGrid::new(24.0, 256, 0.1, 1).unwrap();
        let f = ComplexField::zeros(g);
        assert!(h_s_norm_halfline(&f, 1.7).is_err());
        assert!(h_s_norm_halfline(&f, -0.6).is_err());
    }

    #[test]
    fn hs_halfline_trace_zero_high_s() {
        // h = x e^{-x}, s = 1: finite surrogate
        let g = SimGrid::new(48.0, 4096, 0.1, 1).unwrap();
        let f = ComplexField::from_fn(g, |x| {
            Complex64::new(if x > 0.0 { x * (-x).exp() } else { 0.0 }, 0.0)
        })
        .unwrap();
        let v = h_s_norm_halfline(&f, 1.0).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    fn random_history(seed: u64, g: SimGrid) -> SpaceTimeField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // band-limited random field evolving smoothly in t
        let n_modes = 6;
        let coeffs: Vec<(f64, f64, f64, f64)> = (0..n_modes)
            .map(|_| {
                (
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-3.0..3.0),
                )
            })
            .collect();
        SpaceTimeField::from_fn(g, |x, t| {
            let mut z = Complex64::new(0.0, 0.0);
            for (j, (ar, ai, xi, om)) in coeffs.iter().enumerate() {
                let xi_on = g.xi(j + 1) * (1.0 + 0.0 * xi);
                z += Complex64::new(*ar, *ai) * Complex64::new(0.0, xi_on * x + om * t).exp();
            }
            z
        })
        .unwrap()
    }

    #[test]
    fn norms_homogeneous() {
        let g = SimGrid::new(12.0, 128, 0.05, 32).unwrap();
        let h = random_history(7, g);
        let w = WindowSpec::new(g.t_span() / 2.0, g.t_span() / 2.0, 4).unwrap();
        let c = 3.7;
        let hc = h.scale(Complex64::new(c, 0.0));
        for (a, b) in [
            (
                xsb_norm(&h, 0.6, 0.45, Dispersion::Schrodinger, &w).unwrap().value,
                xsb_norm(&hc, 0.6, 0.45, Dispersion::Schrodinger, &w).unwrap().value,
            ),
            (
                d_alpha_norm(&h, 0.6, &w).unwrap().value,
                d_alpha_norm(&hc, 0.6, &w).unwrap().value,
            ),
            (
                y_norm(&h, 0.3, 0.4, Dispersion::Airy, &w).unwrap().value,
                y_norm(&hc, 0.3, 0.4, Dispersion::Airy, &w).unwrap().value,
            ),
        ] {
            assert!((b - c * a).abs() / (c * a) < 1e-12, "a={a}, b={b}");
        }
    }

    #[test]
    fn xsb_monotone_in_b_and_s() {
        let g = SimGrid::new(12.0, 128, 0.05, 32).unwrap();
        let h = random_history(3, g);
        let w = WindowSpec::new(g.t_span() / 2.0, g.t_span() / 2.0, 4).unwrap();
        let v1 = xsb_norm(&h, 0.5, 0.30, Dispersion::Schrodinger, &w).unwrap().value;
        let v2 = xsb_norm(&h, 0.5, 0.45, Dispersion::Schrodinger, &w).unwrap().value;
        let v3 = xsb_norm(&h, 1.5, 0.30, Dispersion::Schrodinger, &w).unwrap().value;
        assert!(v2 >= v1);
        assert!(v3 >= v1);
    }

    #[test]
    fn y_dominates_xsb_and_sup_hs() {
        let g = SimGrid::new(12.0, 128, 0.05, 48).unwrap();
        let w = WindowSpec::new(g.t_span() / 2.0, g.t_span() / 2.0, 4).unwrap();
        for seed in 0..20 {
            let h = random_history(seed, g);
            let s = 0.4;
            let b = 0.45;
            let yv = y_norm(&h, s, b, Dispersion::Schrodinger, &w).unwrap().value;
            let xv = xsb_norm(&h, s, b, Dispersion::Schrodinger, &w).unwrap().value;
            assert!(yv >= xv);
            // embedding: sup_t ||w*h(t)||_{H^s} <= y norm
            let mut sup = 0.0_f64;
            for m in 0..=g.n_time {
                let wf = h.frames[m].scale(Complex64::new(w.eval(g.t(m)), 0.0));
                sup = sup.max(h_s_norm_line(&wf, s).unwrap());
            }
            assert!(
                sup <= yv * (1.0 + 1e-10),
                "seed {seed}: sup {sup} > y {yv}"
            );
        }
    }

    #[test]
    fn d_alpha_no_low_frequency_content() {
        let g = SimGrid::new(12.0, 128, 0.05, 32).unwrap();
        // single mode at xi = g.xi(8) > 1
        let xi0 = g.xi(8);
        assert!(xi0 > 1.0);
        let h = SpaceTimeField::from_fn(g, |x, _t| Complex64::new(0.0, xi0 * x).exp()).unwrap();
        let w = WindowSpec::new(g.t_span() / 2.0, g.t_span() / 2.0, 4).unwrap();
        let v = d_alpha_norm(&h, 0.6, &w).unwrap().value;
        assert!(v < 1e-12, "v = {v:.3e}");
    }

    #[test]
    fn d_alpha_separable_oracle() {
        // eta(t) e^{i xi0 x} with xi0 on-grid, |xi0| <= 1: the D_alpha norm
        // equals (2L/(2pi)) sqrt(dxi) * <tau>^alpha-weighted L^2 norm of the
        // discrete time spectrum of eta.
        let g = SimGrid::new(16.0, 256, 0.02, 256).unwrap();
        let xi0 = g.xi(2); // pi*2/16 < 1
        assert!(xi0.abs() <= 1.0);
        let w = WindowSpec::new(g.t_span() / 2.0, g.t_span() / 2.5, 4).unwrap();
        let h = SpaceTimeField::from_fn(g, |x, _t| Complex64::new(0.0, xi0 * x).exp()).unwrap();
        let alpha = 0.6;
        let v = d_alpha_norm(&h, alpha, &w).unwrap().value;

        // direct separable computation of the time factor
        let n_tau = g.n_time + 1;
        let mut buf: Vec<Complex64> = (0..n_tau)
            .map(|m| Complex64::new(w.eval(g.t(m)), 0.0))
            .collect();
        crate::grid::fft_forward(&mut buf);
        let dtau = 2.0 * PI / (n_tau as f64 * g.dt);
        let mut sum = 0.0;
        for (mt, z) in buf.iter().enumerate() {
            let signed = if mt <= n_tau / 2 {
                mt as i64
            } else {
                mt as i64 - n_tau as i64
            };
            let tau = 2.0 * PI * signed as f64 / (n_tau as f64 * g.dt);
            sum += bracket(tau).powf(2.0 * alpha) * (z * g.dt).norm_sqr();
        }
        let time_factor = (sum * dtau).sqrt();
        let expected = 2.0 * g.half_width * g.dxi().sqrt() * time_factor / (2.0 * PI);
        assert!(
            (v - expected).abs() / expected < 1e-6,
            "v = {v}, expected = {expected}"
        );
    }

    #[test]
    fn scaling_in_b_stable_constant() {
        // || eta(t/T) h ||_{X^{s,b1}} <= C T^{b2-b1} || eta(t/T) h ||_{X^{s,b2}}
        let b1 = 0.30;
        let b2 = 0.45;
        let mut cs = Vec::new();
        for &t_scale in &[0.25, 0.5, 1.0] {
            let n_time = 128;
            let dt = 2.0 * t_scale / n_time as f64;
            let g = SimGrid::new(12.0, 128, dt, n_time).unwrap();
            let h = random_history(11, g);
            let w = WindowSpec::covering(0.0, t_scale, 4).unwrap();
            let v1 = xsb_norm(&h, 0.5, b1, Dispersion::Schrodinger, &w).unwrap().value;
            let v2 = xsb_norm(&h, 0.5, b2, Dispersion::Schrodinger, &w).unwrap().value;
            cs.push(v1 / (t_scale.powf(b2 - b1) * v2));
        }
        let cmax = cs.iter().cloned().fold(0.0, f64::max);
        let cmin = cs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(cmax / cmin < 5.0, "constants {cs:?}");
    }

    #[test]
    fn concatenation_of_windows() {
        // windowed norm on a union interval controlled by the sum over pieces
        let g = SimGrid::new(12.0, 128, 0.02, 128).unwrap();
        let span = g.t_span();
        let w_union = WindowSpec::covering(0.2 * span, 0.8 * span, 4).unwrap();
        let w1 = WindowSpec::covering(0.2 * span, 0.55 * span, 4).unwrap();
        let w2 = WindowSpec::covering(0.45 * span, 0.8 * span, 4).unwrap();
        for seed in [1, 5, 9] {
            let h = random_history(seed, g);
            let vu = xsb_norm(&h, 0.5, 0.4, Dispersion::Schrodinger, &w_union).unwrap().value;
            let v1 = xsb_norm(&h, 0.5, 0.4, Dispersion::Schrodinger, &w1).unwrap().value;
            let v2 = xsb_norm(&h, 0.5, 0.4, Dispersion::Schrodinger, &w2).unwrap().value;
            assert!(vu <= 10.0 * (v1 + v2), "seed {seed}: {vu} vs {} + {}", v1, v2);
        }
    }
}
