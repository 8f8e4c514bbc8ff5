//! Closed-form frequency response with magnitude, unwrapped phase and
//! group delay.
//!
//! Each path contributes `γ_g exp((μ̄/θ̄)(1 − √(1 + j4πθ̄f)))`. The exponent is
//! evaluated as `−j4πμ̄f / (1 + √(1 + j4πθ̄f))`, which is algebraically equal,
//! has no cancellation for small θ̄, and reduces to a pure delay at θ̄ = 0.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::metrics::MultipathMetrics;
use crate::paths::TxRxPath;

/// Points in the default frequency grid.
pub const DEFAULT_GRID_POINTS: usize = 4096;
/// The default grid spans `[0, DEFAULT_GRID_SPAN · B_c]`.
pub const DEFAULT_GRID_SPAN: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSample {
    /// Hz.
    pub frequency: f64,
    /// H(f), in s/m under the 1/m CIR convention.
    pub response: Complex64,
    pub magnitude: f64,
    /// Unwrapped phase in rad.
    pub phase: f64,
    /// τ_g in s.
    pub group_delay: f64,
}

fn exponent(path: &TxRxPath, f: f64) -> Complex64 {
    let z = Complex64::new(0.0, 4.0 * PI * path.scale * f);
    Complex64::new(0.0, -4.0 * PI * path.mean * f) / (1.0 + (1.0 + z).sqrt())
}

/// Unweighted transfer function of one path: the characteristic function
/// of its inverse-Gaussian delay.
pub fn path_transfer(path: &TxRxPath, f: f64) -> Complex64 {
    exponent(path, f).exp()
}

/// Analytic phase of a single path, `Im` of its exponent.
pub fn path_phase(path: &TxRxPath, f: f64) -> f64 {
    exponent(path, f).im
}

/// H(f).
pub fn frequency_response(model: &ChannelModel, f: f64) -> Complex64 {
    let sum: Complex64 = model
        .ensemble
        .paths
        .iter()
        .map(|p| p.fraction * path_transfer(p, f))
        .sum();
    sum * model.rx_gain
}

/// dH/df, used to police grid resolution during unwrapping.
fn response_derivative(model: &ChannelModel, f: f64) -> Complex64 {
    let sum: Complex64 = model
        .ensemble
        .paths
        .iter()
        .map(|p| {
            let root = (Complex64::new(1.0, 4.0 * PI * p.scale * f)).sqrt();
            p.fraction * path_transfer(p, f) * Complex64::new(0.0, -2.0 * PI * p.mean) / root
        })
        .sum();
    sum * model.rx_gain
}

pub fn linear_grid(f_max: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2, "grid needs at least two points");
    (0..points)
        .map(|k| f_max * k as f64 / (points - 1) as f64)
        .collect()
}

/// Linear grid over `[0, 50 B_c]` with 4096 points.
pub fn default_grid(metrics: &MultipathMetrics) -> Vec<f64> {
    linear_grid(DEFAULT_GRID_SPAN * metrics.coherence_bandwidth, DEFAULT_GRID_POINTS)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidGrid("need at least two frequencies".into()));
    }
    if grid[0] != 0.0 {
        return Err(Error::InvalidGrid("grid must start at f = 0".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("grid must be strictly ascending".into()));
    }
    Ok(())
}

fn responses(model: &ChannelModel, grid: &[f64]) -> Vec<Complex64> {
    grid.par_iter().map(|&f| frequency_response(model, f)).collect()
}

fn unwrap(model: &ChannelModel, grid: &[f64], values: &[Complex64]) -> Result<Vec<f64>> {
    // Expected phase slope Im(H'/H) at each point.
    let slope: Vec<f64> = grid
        .par_iter()
        .zip(values)
        .map(|(&f, h)| {
            let r = response_derivative(model, f) / h;
            if r.im.is_finite() { r.im } else { 0.0 }
        })
        .collect();
    let mut phase = Vec::with_capacity(values.len());
    phase.push(values[0].arg());
    for k in 1..values.len() {
        let df = grid[k] - grid[k - 1];
        let predicted = 0.5 * (slope[k] + slope[k - 1]) * df;
        if predicted.abs() >= PI {
            return Err(Error::GridTooCoarse { frequency: grid[k], step: predicted });
        }
        let raw = values[k].arg() - values[k - 1].arg();
        let step = raw - 2.0 * PI * ((raw - predicted) / (2.0 * PI)).round();
        phase.push(phase[k - 1] + step);
    }
    Ok(phase)
}

/// Continuous phase of H on an ascending grid starting at 0.
pub fn phase_unwrapped(model: &ChannelModel, grid: &[f64]) -> Result<Vec<f64>> {
    check_grid(grid)?;
    unwrap(model, grid, &responses(model, grid))
}

/// Central differences of a sampled phase, one-sided at the ends,
/// scaled to `τ_g = −(1/2π) dφ/df`.
pub fn group_delay_from_phase(grid: &[f64], phase: &[f64]) -> Vec<f64> {
    let n = grid.len();
    (0..n)
        .map(|k| {
            let (lo, hi) = (k.saturating_sub(1), (k + 1).min(n - 1));
            -(phase[hi] - phase[lo]) / (grid[hi] - grid[lo]) / (2.0 * PI)
        })
        .collect()
}

pub fn group_delay(model: &ChannelModel, grid: &[f64]) -> Result<Vec<f64>> {
    let phase = phase_unwrapped(model, grid)?;
    Ok(group_delay_from_phase(grid, &phase))
}

/// Full spectral characterization on `grid`.
pub fn spectrum(model: &ChannelModel, grid: &[f64]) -> Result<Vec<SpectrumSample>> {
    check_grid(grid)?;
    let values = responses(model, grid);
    let phase = unwrap(model, grid, &values)?;
    let delay = group_delay_from_phase(grid, &phase);
    Ok(grid
        .iter()
        .zip(values)
        .zip(phase)
        .zip(delay)
        .map(|(((&frequency, response), phase), group_delay)| SpectrumSample {
            frequency,
            response,
            magnitude: response.norm(),
            phase,
            group_delay,
        })
        .collect())
}
