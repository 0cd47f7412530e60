//! Extensions of half-line data to the (periodic stand-in for the) line,
//! restriction back, and the boundary trace operator.
//!
//! Half-line data are stored on the full grid; only the samples at x >= 0 are
//! meaningful, and every extension operator reproduces them exactly.

use crate::error::{Result, SkdvError};
use crate::grid::{ComplexField, RealField, SimGrid, SpaceTimeField};
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct InitialData {
    pub u0: ComplexField,
    pub v0: RealField,
    pub s: f64,
    pub k: f64,
}

#[derive(Debug, Clone)]
pub struct BoundaryData {
    /// Schrodinger boundary values f(t_m), m = 0..=n_time.
    pub f: Vec<Complex64>,
    /// KdV boundary values g(t_m).
    pub g: Vec<f64>,
    /// Compatibility u0(0) = f(0) required (s > 1/2).
    pub compat_u: bool,
    /// Compatibility v0(0) = g(0) required (k > 1/2).
    pub compat_v: bool,
}

impl BoundaryData {
    pub fn new(grid: &SimGrid, f: Vec<Complex64>, g: Vec<f64>, s: f64, k: f64) -> Result<Self> {
        if f.len() != grid.n_time + 1 || g.len() != grid.n_time + 1 {
            return Err(SkdvError::InvalidParameter(format!(
                "boundary samples must have n_time + 1 = {} entries, got {} / {}",
                grid.n_time + 1,
                f.len(),
                g.len()
            )));
        }
        if f.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
            || g.iter().any(|x| !x.is_finite())
        {
            return Err(SkdvError::NonFinite {
                context: "BoundaryData::new".into(),
            });
        }
        Ok(BoundaryData {
            f,
            g,
            compat_u: s > 0.5,
            compat_v: k > 0.5,
        })
    }

    pub fn zero(grid: &SimGrid, s: f64, k: f64) -> Self {
        BoundaryData {
            f: vec![Complex64::new(0.0, 0.0); grid.n_time + 1],
            g: vec![0.0; grid.n_time + 1],
            compat_u: s > 0.5,
            compat_v: k > 0.5,
        }
    }

    /// Check the compatibility corners against initial data where required.
    pub fn check_compatibility(&self, data: &InitialData, tol: f64) -> Result<()> {
        let i0 = data.u0.grid.i_zero();
        if self.compat_u {
            let gap = (data.u0.values[i0] - self.f[0]).norm();
            if gap > tol {
                return Err(SkdvError::InvalidParameter(format!(
                    "compatibility u0(0) = f(0) violated by {gap:.3e} (s > 1/2)"
                )));
            }
        }
        if self.compat_v {
            let gap = (data.v0.values[i0] - self.g[0]).abs();
            if gap > tol {
                return Err(SkdvError::InvalidParameter(format!(
                    "compatibility v0(0) = g(0) violated by {gap:.3e} (k > 1/2)"
                )));
            }
        }
        Ok(())
    }
}

/// Grid-level trace-zero tolerance: |h(0)| < 10 dx max|h'| (forward difference).
fn trace_tolerance(h: &ComplexField) -> f64 {
    let dx = h.grid.dx();
    let i0 = h.grid.i_zero();
    // only the meaningful samples (x >= 0) enter the derivative scale
    let max_dh = h.values[i0..]
        .windows(2)
        .map(|p| (p[1] - p[0]).norm() / dx)
        .fold(0.0, f64::max);
    10.0 * dx * max_dh
}

/// Zero extension: h on x > 0, 0 on x <= 0.  Valid for -1/2 < s < 1/2, or for
/// 1/2 < s < 3/2 when the trace h(0) vanishes on the grid scale.
pub fn chi_extend(h: &ComplexField, s: f64) -> Result<ComplexField> {
    let in_low = -0.5 < s && s < 0.5;
    let in_high = 0.5 < s && s < 1.5;
    if !(in_low || in_high) {
        return Err(SkdvError::InvalidParameter(format!(
            "chi_extend requires s in (-1/2,1/2) or (1/2,3/2), got {s}"
        )));
    }
    let i0 = h.grid.i_zero();
    if in_high {
        let tol = trace_tolerance(h);
        let v0 = h.values[i0].norm();
        if v0 > tol {
            return Err(SkdvError::TraceObstruction { value: v0, tol, s });
        }
    }
    let mut out = h.clone();
    for v in out.values[..=i0].iter_mut() {
        *v = Complex64::new(0.0, 0.0);
    }
    Ok(out)
}

/// C-infinity step from 0 (at t <= 0) to 1 (at t >= 1) built from e^{-1/t}.
fn exp_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Even-reflection extension with a smooth blend: the reflection is kept
/// unchanged on (-L/8, 0], tapered smoothly over (-L/4, -L/8], and zero for
/// x <= -L/4, keeping the extension away from the periodic seam.
pub fn smooth_extend(u0: &ComplexField, _s: f64) -> Result<ComplexField> {
    let g = u0.grid;
    let i0 = g.i_zero();
    let eighth = g.half_width / 8.0;
    let mut out = u0.clone();
    for m in 0..i0 {
        let x = g.x(m);
        // mirror index: x(m) = -x(2*i0 - m)
        let mirror = 2 * i0 - m;
        let val = if mirror < g.n_space {
            u0.values[mirror]
        } else {
            Complex64::new(0.0, 0.0)
        };
        out.values[m] = val * exp_step((x + 2.0 * eighth) / eighth);
    }
    Ok(out)
}

/// Reflection damped by a Gaussian in -x: a second, genuinely different
/// extension used by the extension-independence diagnostics.
pub fn damped_reflection_extend(u0: &ComplexField, _s: f64) -> Result<ComplexField> {
    let g = u0.grid;
    let i0 = g.i_zero();
    let eighth = g.half_width / 8.0;
    let mut out = u0.clone();
    for m in 0..i0 {
        let x = g.x(m);
        let mirror = 2 * i0 - m;
        let val = if mirror < g.n_space {
            u0.values[mirror]
        } else {
            Complex64::new(0.0, 0.0)
        };
        out.values[m] = val * (-(x * x)).exp() * exp_step((x + 2.0 * eighth) / eighth);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ExtensionStrategy {
    Chi,
    EvenReflection,
    DampedReflection,
}

pub fn extend(h: &ComplexField, s: f64, strategy: ExtensionStrategy) -> Result<ComplexField> {
    match strategy {
        ExtensionStrategy::Chi => chi_extend(h, s),
        ExtensionStrategy::EvenReflection => smooth_extend(h, s),
        ExtensionStrategy::DampedReflection => damped_reflection_extend(h, s),
    }
}

/// Extension of `f_target` anchored to a reference line field:
/// f_e = g_ref_ext + extend(f_target - g_ref restricted), so that
/// ||g_ref_ext - f_e||_{H^s(R)} is controlled by the half-line distance.
pub fn matched_extend(
    f_target: &ComplexField,
    g_ref_ext: &ComplexField,
    s: f64,
) -> Result<ComplexField> {
    let diff = f_target.sub(g_ref_ext);
    let diff_ext = smooth_extend(&diff, s)?;
    Ok(g_ref_ext.add(&diff_ext))
}

/// Boundary trace h(0, t_m) for all time levels.
pub fn trace_d0(h: &SpaceTimeField) -> Vec<Complex64> {
    let i0 = h.grid.i_zero();
    h.frames.iter().map(|f| f.values[i0]).collect()
}
