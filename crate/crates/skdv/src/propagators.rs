//! Free Schrodinger / Airy groups and the explicit half-line boundary
//! propagators.
//!
//! The boundary solution for the Schrodinger row with zero initial data is
//!   S0(0,f)(x,t) = S1 f + S2 f,
//!   S1 f = (1/pi) int_0^inf e^{-i b^2 t + i b x} b (chi f)^(-b^2) db,
//!   S2 f = (1/pi) int_0^inf e^{+i b^2 t} e^{-b x} rho(b x) b (chi f)^(+b^2) db,
//! and for the Airy row
//!   W0(0,g)(x,t) = (3/pi) Re int_0^inf e^{i b^3 t} e^{-i b x/2}
//!                  e^{-b x sqrt(3)/2} rho(b x) (chi g)^(b^3) b^2 db,
//! where (chi h)^ is the time Fourier transform of h extended by zero to
//! t < 0 and rho is a smooth cutoff equal to 1 on [0, inf), supported on
//! (-1, inf), with vanishing weighted moment so that the low-frequency
//! D_alpha estimate closes.

use crate::error::{Result, SkdvError};
use crate::grid::{idft, ComplexField, RealField, SimGrid, SpaceTimeField};
use crate::norms::smoothstep;
use crate::quad::{adaptive, fourier_transform_sampled, oscillatory_nodes, oscillatory_panels};
use num_complex::Complex64;
use rayon::prelude::*;

const SIN60: f64 = 0.866_025_403_784_438_6; // sin(pi/3)
const COS60: f64 = 0.5; // cos(pi/3)

// ---------------------------------------------------------------------------
// rho profile

fn rho_base(y: f64) -> f64 {
    if y >= -0.5 {
        1.0
    } else if y <= -1.0 {
        0.0
    } else {
        smoothstep(5, (y + 1.0) / 0.5)
    }
}

fn rho_bump(y: f64, center: f64, width: f64) -> f64 {
    let z = (y - center) / width;
    if z.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - z * z)).exp()
    }
}

const BUMP1_CENTER: f64 = -0.7;
const BUMP2_CENTER: f64 = -0.3;
const BUMP_WIDTH: f64 = 0.15;

/// Mean-zero extension cutoff: smoothstep base plus two calibrated bumps
/// supported in (-1, 0).
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RhoProfile {
    pub c1: f64,
    pub c2: f64,
}

impl RhoProfile {
    pub fn eval(&self, y: f64) -> f64 {
        if y >= 0.0 {
            return 1.0;
        }
        if y <= -1.0 {
            return 0.0;
        }
        rho_base(y)
            + self.c1 * rho_bump(y, BUMP1_CENTER, BUMP_WIDTH)
            + self.c2 * rho_bump(y, BUMP2_CENTER, BUMP_WIDTH)
    }

    /// The weighted moment int_{-1}^{inf} e^{-i y cos(pi/3)} e^{-y sin(pi/3)}
    /// rho(y) dy; vanishes for a calibrated profile.
    pub fn moment(&self, tol: f64) -> Complex64 {
        moment_of(|y| self.eval(y), tol) + POSITIVE_PART_MOMENT
    }
}

/// Closed form of the y >= 0 part of the moment (where rho = 1):
/// int_0^inf e^{-y(sin60 + i cos60)} dy = 1/(sin60 + i cos60).
pub const POSITIVE_PART_MOMENT_DENOM: Complex64 = Complex64::new(SIN60, COS60);
pub static POSITIVE_PART_MOMENT: Complex64 = Complex64::new(
    SIN60 / (SIN60 * SIN60 + COS60 * COS60),
    -COS60 / (SIN60 * SIN60 + COS60 * COS60),
);

/// Moment of a profile piece supported in (-1, 0).
fn moment_of(profile: impl Fn(f64) -> f64 + Copy, tol: f64) -> Complex64 {
    let kernel_re = |y: f64| (-y * SIN60).exp() * (y * COS60).cos() * profile(y);
    let kernel_im = |y: f64| -(-y * SIN60).exp() * (y * COS60).sin() * profile(y);
    Complex64::new(
        adaptive(&kernel_re, -1.0, 0.0, tol),
        adaptive(&kernel_im, -1.0, 0.0, tol),
    )
}

/// Solve the 2x2 real system making the complex moment vanish.
pub fn calibrate_rho() -> Result<RhoProfile> {
    let tol = 1e-13;
    let m_base = moment_of(rho_base, tol) + POSITIVE_PART_MOMENT;
    let m1 = moment_of(|y| rho_bump(y, BUMP1_CENTER, BUMP_WIDTH), tol);
    let m2 = moment_of(|y| rho_bump(y, BUMP2_CENTER, BUMP_WIDTH), tol);
    let det = m1.re * m2.im - m1.im * m2.re;
    if det.abs() < 1e-8 {
        return Err(SkdvError::SingularCalibration { det });
    }
    let c1 = (-m_base.re * m2.im + m_base.im * m2.re) / det;
    let c2 = (-m1.re * m_base.im + m1.im * m_base.re) / det;
    let profile = RhoProfile { c1, c2 };
    let residual = profile.moment(1e-14).norm();
    if residual > 1e-10 {
        return Err(SkdvError::QuadratureFailure {
            residual,
            tol: 1e-10,
        });
    }
    Ok(profile)
}

// ---------------------------------------------------------------------------
// free groups

/// e^{-i xi^2 t} multiplier.
pub fn free_schrodinger(u0: &ComplexField, t: f64) -> Result<ComplexField> {
    crate::grid::apply_multiplier(u0, |xi| Complex64::new(0.0, -xi * xi * t).exp())
}

/// e^{i xi^3 t} multiplier on a complex field.
pub fn free_airy_complex(v0: &ComplexField, t: f64) -> Result<ComplexField> {
    crate::grid::apply_multiplier(v0, |xi| Complex64::new(0.0, xi * xi * xi * t).exp())
}

/// e^{i xi^3 t} on a real field; the symbol is Hermitian so realness is
/// preserved up to round-off, which is checked.
pub fn free_airy(v0: &RealField, t: f64) -> Result<RealField> {
    let out = free_airy_complex(&v0.to_complex(), t)?;
    let residue = out.max_imag();
    let scale = out.max_abs().max(1e-300);
    if residue > 1e-10 * scale.max(1.0) {
        return Err(SkdvError::NonFinite {
            context: format!("free_airy imaginary residue {residue:.3e}"),
        });
    }
    RealField::new(v0.grid, out.values.iter().map(|z| z.re).collect())
}

// ---------------------------------------------------------------------------
// sampled time-transform with decay detection

/// chi h transform evaluated on a fine beta table, with the decay cutoff
/// beta_max such that |weight(beta) * transform| < 1e-12 * max beyond it.
struct FreqTable {
    vals: Vec<Complex64>,
    dbeta: f64,
    beta_max: f64,
    decayed: bool,
}

impl FreqTable {
    /// `omega_of(beta)`: frequency at which the time transform is taken
    /// (-beta^2 for Schrodinger, +beta^3 for Airy); `weight(beta)`: the
    /// measure factor (beta resp. beta^2) used for the decay criterion.
    fn build(
        samples: &[Complex64],
        dt: f64,
        beta_cap: f64,
        omega_of: impl Fn(f64) -> f64 + Sync,
        weight: impl Fn(f64) -> f64 + Sync,
    ) -> FreqTable {
        let transform = |beta: f64| fourier_transform_sampled(samples, dt, omega_of(beta));
        // coarse scan for the decay cutoff
        let n_scan = 768;
        let dscan = beta_cap / n_scan as f64;
        let scan: Vec<f64> = (0..=n_scan)
            .into_par_iter()
            .map(|i| {
                let b = i as f64 * dscan;
                transform(b).norm() * weight(b).abs()
            })
            .collect();
        let peak = scan.iter().cloned().fold(0.0, f64::max);
        let threshold = 1e-12 * peak;
        let mut last = 0;
        for (i, &v) in scan.iter().enumerate() {
            if v >= threshold {
                last = i;
            }
        }
        let decayed = last + 1 < n_scan;
        let beta_max = ((last + 2) as f64 * dscan).min(beta_cap);
        // fine table on [0, beta_max]
        let n_table = 4096;
        let dbeta = beta_max / n_table as f64;
        let vals: Vec<Complex64> = (0..=n_table)
            .into_par_iter()
            .map(|i| transform(i as f64 * dbeta))
            .collect();
        FreqTable {
            vals,
            dbeta,
            beta_max,
            decayed,
        }
    }

    /// Catmull-Rom interpolation; zero beyond beta_max.
    fn value(&self, beta: f64) -> Complex64 {
        if beta < 0.0 || beta > self.beta_max {
            return Complex64::new(0.0, 0.0);
        }
        let u = beta / self.dbeta;
        let i = (u.floor() as usize).min(self.vals.len() - 2);
        let t = u - i as f64;
        let p1 = self.vals[i];
        let p2 = self.vals[i + 1];
        let p0 = if i > 0 { self.vals[i - 1] } else { 2.0 * p1 - p2 };
        let p3 = if i + 2 < self.vals.len() {
            self.vals[i + 2]
        } else {
            2.0 * p2 - p1
        };
        0.5 * ((2.0 * p1)
            + (p2 - p0) * t
            + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * (t * t)
            + (3.0 * (p1 - p2) + p3 - p0) * (t * t * t))
    }
}

// ---------------------------------------------------------------------------
// boundary propagators

#[derive(Debug, Clone)]
pub struct BoundaryEval {
    pub field: SpaceTimeField,
    /// Cutoff of the beta integral, set by spectral decay of the data.
    pub beta_max: f64,
    /// False if the transform had not decayed below 1e-12 by the grid cap.
    pub decayed: bool,
}

/// Boundary propagator for the Schrodinger row. The outgoing branch S1 is a
/// Fourier multiplier supported on xi > 0 and is assembled spectrally; the
/// companion branch S2 pairs the phase e^{i beta^2 t} with the evanescent
/// kernel e^{-beta x} and samples the data transform at +beta^2, so that each
/// mode solves the equation exactly and the x = 0 traces of the two branches
/// reconstruct the negative- and positive-frequency halves of f. For x < 0
/// the rho cutoff caps the exponential growth at beta = 1/|x|.
pub fn boundary_schrodinger(
    f: &[Complex64],
    grid: &SimGrid,
    rho: &RhoProfile,
) -> Result<BoundaryEval> {
    if f.len() != grid.n_time + 1 {
        return Err(SkdvError::InvalidParameter(format!(
            "boundary samples: expected {}, got {}",
            grid.n_time + 1,
            f.len()
        )));
    }
    if f.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(SkdvError::NonFinite {
            context: "boundary_schrodinger".into(),
        });
    }
    // Frequencies beyond the time-sampling Nyquist rate are not
    // representable in the data, so cap beta at omega = beta^2 = pi/dt.
    let beta_cap = grid.xi_max().min((std::f64::consts::PI / grid.dt).sqrt());
    let table_neg = FreqTable::build(f, grid.dt, beta_cap, |b| -b * b, |b| b);
    let table_pos = FreqTable::build(f, grid.dt, beta_cap, |b| b * b, |b| b);
    let beta_max = table_neg.beta_max.max(table_pos.beta_max);
    let n = grid.n_space;
    let n_levels = grid.n_time + 1;

    // S1: spectral frames
    let s1_frames: Vec<ComplexField> = (0..n_levels)
        .into_par_iter()
        .map(|m| {
            let t = grid.t(m);
            let mut spec = vec![Complex64::new(0.0, 0.0); n];
            for j in 0..n {
                let xi = grid.xi(j);
                if xi > 0.0 && xi <= table_neg.beta_max {
                    spec[j] =
                        2.0 * xi * table_neg.value(xi) * Complex64::new(0.0, -xi * xi * t).exp();
                }
            }
            idft(grid, &spec).expect("idft")
        })
        .collect();

    // S2: shared quadrature rule in beta, reused across all (x, t)
    let span = grid.t_span();
    let (nodes, weights) =
        oscillatory_nodes(0.0, table_pos.beta_max, &|b| 2.0 * b * span + 1.0, 8);
    let nq = nodes.len();
    let coeff: Vec<Complex64> = nodes
        .iter()
        .zip(&weights)
        .map(|(&b, &w)| table_pos.value(b) * (b * w / std::f64::consts::PI))
        .collect();
    let coeff_peak = coeff.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut phases = vec![Complex64::new(0.0, 0.0); nq * n_levels];
    for q in 0..nq {
        let b2 = nodes[q] * nodes[q];
        let step = Complex64::new(0.0, b2 * grid.dt).exp();
        let mut cur = Complex64::new(1.0, 0.0);
        for m in 0..n_levels {
            phases[q * n_levels + m] = cur;
            cur *= step;
        }
    }
    let s2_rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = grid.x(i);
            let mut acc = vec![Complex64::new(0.0, 0.0); n_levels];
            for q in 0..nq {
                let b = nodes[q];
                if x < 0.0 && b * x <= -1.0 {
                    break; // rho vanishes for all larger beta
                }
                let damp = (-b * x).exp();
                if x > 0.0 && damp * coeff_peak < 1e-18 {
                    break; // kernel decay dominates all larger beta
                }
                let k = coeff[q] * (rho.eval(b * x) * damp);
                if k.norm_sqr() < 1e-64 {
                    continue;
                }
                let row = &phases[q * n_levels..(q + 1) * n_levels];
                for (a, p) in acc.iter_mut().zip(row) {
                    *a += k * p;
                }
            }
            acc
        })
        .collect();

    let frames: Vec<ComplexField> = (0..n_levels)
        .map(|m| ComplexField {
            grid: *grid,
            values: (0..n)
                .map(|i| s1_frames[m].values[i] + s2_rows[i][m])
                .collect(),
        })
        .collect();

    Ok(BoundaryEval {
        field: SpaceTimeField::new(*grid, frames)?,
        beta_max,
        decayed: table_neg.decayed && table_pos.decayed,
    })
}

/// Boundary propagator for the Airy row, evaluated by a shared beta
/// quadrature rule: field(x, t) = Re sum_q K(beta_q, x) A(beta_q, t).
pub fn boundary_airy(g: &[f64], grid: &SimGrid, rho: &RhoProfile) -> Result<BoundaryEval> {
    if g.len() != grid.n_time + 1 {
        return Err(SkdvError::InvalidParameter(format!(
            "boundary samples: expected {}, got {}",
            grid.n_time + 1,
            g.len()
        )));
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(SkdvError::NonFinite {
            context: "boundary_airy".into(),
        });
    }
    let samples: Vec<Complex64> = g.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let beta_cap = grid.xi_max().min((std::f64::consts::PI / grid.dt).cbrt());
    let table = FreqTable::build(&samples, grid.dt, beta_cap, |b| b * b * b, |b| b * b);

    let span = grid.t_span();
    let half_width = grid.half_width;
    let (nodes, weights) = oscillatory_nodes(
        0.0,
        table.beta_max,
        &|b| 3.0 * b * b * span + half_width / 2.0 + 1.0,
        6,
    );
    let nq = nodes.len();
    // c_q = (3/pi) beta^2 G(beta) w_q
    let coeff: Vec<Complex64> = nodes
        .iter()
        .zip(&weights)
        .map(|(&b, &w)| table.value(b) * (3.0 / std::f64::consts::PI * b * b * w))
        .collect();
    let coeff_peak = coeff.iter().map(|c| c.norm()).fold(0.0, f64::max);
    // A[q][m] = e^{i beta_q^3 t_m}
    let n_levels = grid.n_time + 1;
    let mut phases = vec![Complex64::new(0.0, 0.0); nq * n_levels];
    for q in 0..nq {
        let b3 = nodes[q] * nodes[q] * nodes[q];
        let step = Complex64::new(0.0, b3 * grid.dt).exp();
        let mut cur = Complex64::new(1.0, 0.0);
        for m in 0..n_levels {
            phases[q * n_levels + m] = cur;
            cur *= step;
        }
    }

    let rows: Vec<Vec<Complex64>> = (0..grid.n_space)
        .into_par_iter()
        .map(|i| {
            let x = grid.x(i);
            let mut acc = vec![Complex64::new(0.0, 0.0); n_levels];
            for q in 0..nq {
                let b = nodes[q];
                if x < 0.0 && b * x <= -1.0 {
                    break; // rho vanishes for all larger beta
                }
                let damp = (-b * x * SIN60).exp();
                if x > 0.0 && damp * coeff_peak < 1e-18 {
                    break; // exponential decay dominates all larger beta
                }
                let k = coeff[q]
                    * (rho.eval(b * x) * damp)
                    * Complex64::new(0.0, -b * x * COS60).exp();
                if k.norm_sqr() < 1e-64 {
                    continue;
                }
                let row = &phases[q * n_levels..(q + 1) * n_levels];
                for (a, p) in acc.iter_mut().zip(row) {
                    *a += k * p;
                }
            }
            acc
        })
        .collect();

    let frames: Vec<ComplexField> = (0..n_levels)
        .map(|m| ComplexField {
            grid: *grid,
            values: (0..grid.n_space)
                .map(|i| Complex64::new(rows[i][m].re, 0.0))
                .collect(),
        })
        .collect();

    Ok(BoundaryEval {
        field: SpaceTimeField::new(*grid, frames)?,
        beta_max: table.beta_max,
        decayed: table.decayed,
    })
}

/// Oscillatory-quadrature oracle for the free Airy evolution of a Gaussian:
/// (1/2pi) int e^{i(xi^3 t + xi x)} sigma sqrt(2 pi) e^{-sigma^2 xi^2/2} dxi.
pub fn airy_gaussian_oracle(sigma: f64, t: f64, x: f64) -> f64 {
    let xi_max = (2.0 * 34.5_f64.max(2.0)).sqrt() / sigma; // e^{-s^2 xi^2/2} < 1e-15
    let amp = sigma * (2.0 * std::f64::consts::PI).sqrt();
    let f = |xi: f64| {
        Complex64::new(0.0, xi * xi * xi * t + xi * x).exp()
            * (amp * (-sigma * sigma * xi * xi / 2.0).exp())
    };
    let v = oscillatory_panels(&f, -xi_max, xi_max, &|xi| 3.0 * xi * xi * t.abs() + x.abs(), 6);
    (v / (2.0 * std::f64::consts::PI)).re
}

/// Smooth normalized bump on (0, 1): e^{4} e^{-1/t} e^{-1/(1-t)}, peak 1.
pub fn unit_bump(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        (4.0 - 1.0 / t - 1.0 / (1.0 - t)).exp()
    }
}
