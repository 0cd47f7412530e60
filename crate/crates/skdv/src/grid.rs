//! Extended-line space-time discretization and discrete Fourier transforms.
//!
//! The periodic box [-L, L) stands in for the real line; L must be chosen so
//! that the data of each experiment decay below ~1e-12 by |x| = L/2.
//!
//! Fourier convention (non-unitary): u_hat(xi) = int e^{-i x xi} u(x) dx, with
//! discrete frequencies xi_j = pi j / L.  Parseval then carries a factor 2*pi
//! per dimension.

use crate::error::{Result, SkdvError};
use crate::norms::WindowSpec;
use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

static FFT_CACHE: Lazy<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut cache = FFT_CACHE.lock().unwrap();
    cache
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// Raw FFT: X_k = sum_m e^{-2 pi i k m / n} x_m (in place).
pub fn fft_forward(buf: &mut [Complex64]) {
    plan(buf.len(), false).process(buf);
}

/// Raw inverse FFT, unnormalized: x_m = sum_k e^{+2 pi i k m / n} X_k (in place).
pub fn fft_inverse_unnormalized(buf: &mut [Complex64]) {
    plan(buf.len(), true).process(buf);
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SimGrid {
    pub half_width: f64,
    pub n_space: usize,
    pub dt: f64,
    pub n_time: usize,
}

impl SimGrid {
    pub fn new(half_width: f64, n_space: usize, dt: f64, n_time: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(SkdvError::InvalidGrid(format!(
                "half_width must be positive and finite, got {half_width}"
            )));
        }
        if n_space < 64 || !n_space.is_power_of_two() {
            return Err(SkdvError::InvalidGrid(format!(
                "n_space must be a power of two >= 64, got {n_space}"
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SkdvError::InvalidGrid(format!("dt must be positive, got {dt}")));
        }
        if n_time < 1 {
            return Err(SkdvError::InvalidGrid("n_time must be >= 1".into()));
        }
        Ok(SimGrid {
            half_width,
            n_space,
            dt,
            n_time,
        })
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n_space as f64
    }

    /// Physical point x_m = -L + m dx, m = 0..n_space.
    pub fn x(&self, m: usize) -> f64 {
        -self.half_width + m as f64 * self.dx()
    }

    /// Index of x = 0 (exact grid point).
    pub fn i_zero(&self) -> usize {
        self.n_space / 2
    }

    /// Signed frequency index for FFT bin j: j for j < n/2, j - n otherwise.
    pub fn signed_index(&self, j: usize) -> i64 {
        if j < self.n_space / 2 {
            j as i64
        } else {
            j as i64 - self.n_space as i64
        }
    }

    /// Frequency of FFT bin j: xi_j = pi * signed_index / L.
    pub fn xi(&self, j: usize) -> f64 {
        std::f64::consts::PI * self.signed_index(j) as f64 / self.half_width
    }

    /// Frequency spacing pi / L.
    pub fn dxi(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    /// Largest resolved |xi|.
    pub fn xi_max(&self) -> f64 {
        std::f64::consts::PI * (self.n_space as f64 / 2.0) / self.half_width
    }

    pub fn t(&self, m: usize) -> f64 {
        m as f64 * self.dt
    }

    pub fn t_span(&self) -> f64 {
        self.n_time as f64 * self.dt
    }
}

#[derive(Debug, Clone)]
pub struct ComplexField {
    pub grid: SimGrid,
    pub values: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct RealField {
    pub grid: SimGrid,
    pub values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: SimGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_space {
            return Err(SkdvError::InvalidGrid(format!(
                "field length {} != n_space {}",
                values.len(),
                grid.n_space
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SkdvError::NonFinite {
                context: "RealField::new".into(),
            });
        }
        Ok(RealField { grid, values })
    }

    pub fn from_fn(grid: SimGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.n_space).map(|m| f(grid.x(m))).collect();
        RealField::new(grid, values)
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            grid: self.grid,
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }
}

impl ComplexField {
    pub fn new(grid: SimGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_space {
            return Err(SkdvError::InvalidGrid(format!(
                "field length {} != n_space {}",
                values.len(),
                grid.n_space
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(SkdvError::NonFinite {
                context: "ComplexField::new".into(),
            });
        }
        Ok(ComplexField { grid, values })
    }

    pub fn zeros(grid: SimGrid) -> Self {
        ComplexField {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.n_space],
        }
    }

    pub fn from_fn(grid: SimGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = (0..grid.n_space).map(|m| f(grid.x(m))).collect();
        ComplexField::new(grid, values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Discrete L^2(dx) norm.
    pub fn l2_norm(&self) -> f64 {
        let dx = self.grid.dx();
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx).sqrt()
    }

    /// Discrete L^2(dx) norm restricted to x > 0.
    pub fn l2_norm_halfline(&self) -> f64 {
        let dx = self.grid.dx();
        let i0 = self.grid.i_zero();
        (self.values[i0 + 1..].iter().map(|v| v.norm_sqr()).sum::<f64>() * dx).sqrt()
    }

    pub fn scale(&self, c: Complex64) -> ComplexField {
        ComplexField {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &ComplexField) -> ComplexField {
        ComplexField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &ComplexField) -> ComplexField {
        ComplexField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Forward transform: u_hat(xi_j) = dx * sum_m e^{-i x_m xi_j} u_m.
///
/// Output is in FFT bin order; use `grid.xi(j)` for the frequency of bin j.
pub fn dft(field: &ComplexField) -> Result<Vec<Complex64>> {
    if field
        .values
        .iter()
        .any(|v| !v.re.is_finite() || !v.im.is_finite())
    {
        return Err(SkdvError::NonFinite { context: "dft".into() });
    }
    let mut buf = field.values.clone();
    fft_forward(&mut buf);
    let dx = field.grid.dx();
    // x_m = -L + m dx contributes a phase e^{+i pi j} = (-1)^j relative to the
    // raw FFT indexed from x = 0.
    for (j, v) in buf.iter_mut().enumerate() {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        *v *= sign * dx;
    }
    Ok(buf)
}

/// Inverse of `dft`: u_m = (1/2L) * sum_j e^{+i x_m xi_j} u_hat_j.
pub fn idft(grid: &SimGrid, spectrum: &[Complex64]) -> Result<ComplexField> {
    if spectrum.len() != grid.n_space {
        return Err(SkdvError::InvalidGrid(format!(
            "spectrum length {} != n_space {}",
            spectrum.len(),
            grid.n_space
        )));
    }
    let mut buf: Vec<Complex64> = spectrum
        .iter()
        .enumerate()
        .map(|(j, v)| if j % 2 == 0 { *v } else { -*v })
        .collect();
    fft_inverse_unnormalized(&mut buf);
    let scale = 1.0 / (2.0 * grid.half_width);
    for v in buf.iter_mut() {
        *v *= scale;
    }
    ComplexField::new(*grid, buf)
}

/// Apply a frequency multiplier m(xi) in Fourier space.
pub fn apply_multiplier(
    field: &ComplexField,
    m: impl Fn(f64) -> Complex64,
) -> Result<ComplexField> {
    let mut spec = dft(field)?;
    for (j, v) in spec.iter_mut().enumerate() {
        let mult = m(field.grid.xi(j));
        if !mult.re.is_finite() || !mult.im.is_finite() {
            return Err(SkdvError::NonFinite {
                context: format!("apply_multiplier at xi = {}", field.grid.xi(j)),
            });
        }
        *v *= mult;
    }
    idft(&field.grid, &spec)
}

/// Spectral first derivative.
pub fn spectral_derivative(field: &ComplexField) -> Result<ComplexField> {
    apply_multiplier(field, |xi| Complex64::new(0.0, xi))
}

#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    pub grid: SimGrid,
    pub frames: Vec<ComplexField>,
}

impl SpaceTimeField {
    pub fn new(grid: SimGrid, frames: Vec<ComplexField>) -> Result<Self> {
        if frames.len() != grid.n_time + 1 {
            return Err(SkdvError::InvalidGrid(format!(
                "frame count {} != n_time + 1 = {}",
                frames.len(),
                grid.n_time + 1
            )));
        }
        Ok(SpaceTimeField { grid, frames })
    }

    pub fn zeros(grid: SimGrid) -> Self {
        SpaceTimeField {
            grid,
            frames: (0..=grid.n_time).map(|_| ComplexField::zeros(grid)).collect(),
        }
    }

    pub fn from_fn(grid: SimGrid, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let frames = (0..=grid.n_time)
            .map(|m| {
                let t = grid.t(m);
                ComplexField::from_fn(grid, |x| f(x, t))
            })
            .collect::<Result<Vec<_>>>()?;
        SpaceTimeField::new(grid, frames)
    }

    pub fn sub(&self, other: &SpaceTimeField) -> SpaceTimeField {
        SpaceTimeField {
            grid: self.grid,
            frames: self
                .frames
                .iter()
                .zip(&other.frames)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn add(&self, other: &SpaceTimeField) -> SpaceTimeField {
        SpaceTimeField {
            grid: self.grid,
            frames: self
                .frames
                .iter()
                .zip(&other.frames)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> SpaceTimeField {
        SpaceTimeField {
            grid: self.grid,
            frames: self.frames.iter().map(|f| f.scale(c)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.frames.iter().map(|f| f.max_abs()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.frames.iter().map(|f| f.max_imag()).fold(0.0, f64::max)
    }

    /// Drop the imaginary parts (with the caller responsible for checking the
    /// residue via `max_imag`).
    pub fn re(&self) -> SpaceTimeField {
        SpaceTimeField {
            grid: self.grid,
            frames: self
                .frames
                .iter()
                .map(|f| ComplexField {
                    grid: f.grid,
                    values: f.values.iter().map(|v| Complex64::new(v.re, 0.0)).collect(),
                })
                .collect(),
        }
    }
}

/// Space-time spectrum of a windowed history.
///
/// `table[mt][j]` is u_hat(xi_j, tau_mt); both indices are in FFT bin order.
/// The time transform is taken over the n_time + 1 samples, so the tau spacing
/// is 2 pi / ((n_time + 1) dt).
#[derive(Debug, Clone)]
pub struct SpaceTimeSpectrum {
    pub grid: SimGrid,
    pub table: Vec<Vec<Complex64>>,
    pub n_tau: usize,
}

impl SpaceTimeSpectrum {
    pub fn tau(&self, mt: usize) -> f64 {
        let n = self.n_tau as i64;
        let signed = if (mt as i64) <= n / 2 {
            mt as i64
        } else {
            mt as i64 - n
        };
        2.0 * std::f64::consts::PI * signed as f64 / (self.n_tau as f64 * self.grid.dt)
    }

    pub fn dtau(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.n_tau as f64 * self.grid.dt)
    }
}

/// Space-time Fourier transform of the time-windowed history.
pub fn space_time_dft(h: &SpaceTimeField, window: &WindowSpec) -> Result<SpaceTimeSpectrum> {
    let grid = h.grid;
    let span = grid.t_span();
    if window.radius > span {
        return Err(SkdvError::InvalidParameter(format!(
            "window radius {} exceeds time span {}",
            window.radius, span
        )));
    }
    let n_tau = grid.n_time + 1;
    // x-transform per frame, windowed in time.
    let mut rows: Vec<Vec<Complex64>> = Vec::with_capacity(n_tau);
    for (m, frame) in h.frames.iter().enumerate() {
        let w = window.eval(grid.t(m));
        let spec = dft(&frame.scale(Complex64::new(w, 0.0)))?;
        rows.push(spec);
    }
    // t-transform per spatial frequency; t starts at 0 so no phase correction.
    let dt = grid.dt;
    let mut table = vec![vec![Complex64::new(0.0, 0.0); grid.n_space]; n_tau];
    let mut buf = vec![Complex64::new(0.0, 0.0); n_tau];
    for j in 0..grid.n_space {
        for (m, row) in rows.iter().enumerate() {
            buf[m] = row[j];
        }
        fft_forward(&mut buf);
        for (mt, row_out) in table.iter_mut().enumerate() {
            row_out[j] = buf[mt] * dt;
        }
    }
    Ok(SpaceTimeSpectrum {
        grid,
        table,
        n_tau,
    })
}
