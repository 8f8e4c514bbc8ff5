//! Closed-form path flux, channel impulse response and the Poisson
//! observation model.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::detect::path_peak_time;
use crate::error::{Error, Result};
use crate::flow::FlowSolution;
use crate::network::{TxRxPlacement, VesselNetwork};
use crate::paths::{PathEnsemble, TxRxPath};
use crate::quad;

/// Rx windows longer than this fraction of the Rx pipe trigger a
/// uniform-concentration warning. Heuristic threshold.
pub const UCA_WARNING_FRACTION: f64 = 0.1;

/// Inverse-Gaussian density with mean `mean` and scale `scale` (θ = σ²/μ),
/// evaluated in log space. Zero for `t <= 0` and on underflow.
pub fn ig_density(mean: f64, scale: f64, t: f64) -> f64 {
    if !(t > 0.0) || !(scale > 0.0) {
        return 0.0;
    }
    let log = mean.ln()
        - 0.5 * (2.0 * std::f64::consts::PI * scale * t * t * t).ln()
        - (t - mean) * (t - mean) / (2.0 * scale * t);
    log.exp()
}

/// Molecule flux j̄_g(t) of one path for a single released molecule.
pub fn path_flux(path: &TxRxPath, t: f64) -> f64 {
    ig_density(path.mean, path.scale, t)
}

/// Upper bound on `∫_{t0}^∞` of the inverse-Gaussian density, valid for
/// `t0 > mean`.
pub fn ig_tail_bound(mean: f64, scale: f64, t0: f64) -> f64 {
    assert!(t0 > mean, "tail bound needs t0 > mean");
    let excess = t0 - mean;
    ig_density(mean, scale, t0) * 2.0 * scale * t0 / excess
}

/// Quadrature breakpoints in `[0, end]` that bracket the bulk of one
/// path's flux, so that narrow peaks cannot fall between Kronrod nodes.
pub fn path_breaks(path: &TxRxPath, end: f64) -> Vec<f64> {
    let s = path.std_dev();
    let mut b = vec![0.0, path_peak_time(path.mean, path.scale), end];
    for k in [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0, 16.0] {
        b.push(path.mean + k * s);
    }
    b.retain(|&t| (0.0..=end).contains(&t));
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// `∫₀^∞ j̄(t) dt` by quadrature up to a point where the tail bound drops
/// below 1e-13, plus that bound. Returns `(integral, tail_bound)`.
pub fn path_flux_mass(path: &TxRxPath) -> (f64, f64) {
    let mut end = path.mean + 12.0 * path.std_dev();
    while ig_tail_bound(path.mean, path.scale, end) > 1e-13 {
        end = path.mean + 2.0 * (end - path.mean);
    }
    let v = quad::integrate_with_breaks(
        |t| path_flux(path, t),
        &path_breaks(path, end),
        1e-14,
        1e-13,
    );
    (v, ig_tail_bound(path.mean, path.scale, end))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub ensemble: PathEnsemble,
    /// UCA gain l_Rx / ū_b in s.
    pub rx_gain: f64,
    /// N, molecules released per transmitted one.
    pub molecules: u64,
    /// n̄, expected background count per sample.
    pub background: f64,
}

impl ChannelModel {
    pub fn new(
        flow: &FlowSolution,
        placement: &TxRxPlacement,
        ensemble: PathEnsemble,
        background: f64,
    ) -> Result<Self> {
        let rx_gain = placement.rx_length / flow.velocity(placement.rx_pipe);
        Self::from_parts(ensemble, rx_gain, placement.released_molecules, background)
    }

    pub fn from_parts(ensemble: PathEnsemble, rx_gain: f64, molecules: u64, background: f64) -> Result<Self> {
        if !(rx_gain > 0.0 && rx_gain.is_finite()) {
            return Err(Error::InvalidParameter(format!("rx gain must be positive, got {rx_gain}")));
        }
        if !(background >= 0.0 && background.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "background must be non-negative, got {background}"
            )));
        }
        Ok(ChannelModel { ensemble, rx_gain, molecules, background })
    }

    /// Same channel with a different molecule budget.
    pub fn with_molecules(&self, molecules: u64) -> Self {
        ChannelModel { molecules, ..self.clone() }
    }

    pub fn with_background(&self, background: f64) -> Self {
        ChannelModel { background, ..self.clone() }
    }

    /// Sub-model carrying only path `g` (absolute fraction kept).
    pub fn single_path(&self, g: usize) -> Self {
        ChannelModel { ensemble: self.ensemble.single(g), ..self.clone() }
    }

    /// Weighted contribution `(l_Rx/ū_b) γ_g j̄_g(t)` of path `g`.
    pub fn path_contribution(&self, g: usize, t: f64) -> f64 {
        let path = &self.ensemble.paths[g];
        self.rx_gain * path.fraction * path_flux(path, t)
    }

    /// h(t) = (l_Rx/ū_b) Σ γ_g j̄_g(t).
    pub fn cir(&self, t: f64) -> f64 {
        let sum: f64 = self
            .ensemble
            .paths
            .iter()
            .map(|p| p.fraction * path_flux(p, t))
            .sum();
        self.rx_gain * sum
    }

    /// `∫ h = rx_gain · χ`.
    pub fn cir_mass(&self) -> f64 {
        self.rx_gain * self.ensemble.reach_probability
    }

    /// d[l] = N h(l T_s + t_s), l = 0..L-1.
    pub fn expected_taps(&self, symbol_duration: f64, sampling_time: f64, memory: usize) -> Vec<f64> {
        let n = self.molecules as f64;
        (0..memory)
            .map(|l| n * self.cir(l as f64 * symbol_duration + sampling_time))
            .collect()
    }

    /// Largest per-path observation probability `(l_Rx/ū_b) γ_g max_t j̄_g`.
    /// The Poisson approximation needs this to be small.
    pub fn max_observation_probability(&self) -> f64 {
        self.ensemble
            .paths
            .iter()
            .map(|p| self.rx_gain * p.fraction * path_flux(p, path_peak_time(p.mean, p.scale)))
            .fold(0.0, f64::max)
    }

    /// Window `[0, t_end]` covering essentially all of the CIR support.
    pub fn support_end(&self) -> f64 {
        self.ensemble
            .paths
            .iter()
            .map(|p| p.mean + 12.0 * p.std_dev())
            .fold(0.0, f64::max)
    }
}

/// Whether the Rx window is long relative to its pipe.
pub fn uca_warning(network: &VesselNetwork, placement: &TxRxPlacement) -> bool {
    placement.rx_length > UCA_WARNING_FRACTION * network.pipe(placement.rx_pipe).length
}

/// One Poisson draw; a zero rate always yields zero.
pub fn poisson<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).expect("finite positive rate").sample(rng) as u64
}

/// Rate of the k-th sample: `Σ d[l] s[k−l] + n̄`, with `window[l] = s[k−l]`.
pub fn observation_rate(taps: &[f64], window: &[u8], background: f64) -> f64 {
    debug_assert_eq!(taps.len(), window.len());
    taps.iter()
        .zip(window)
        .filter(|(_, &s)| s != 0)
        .map(|(d, _)| d)
        .sum::<f64>()
        + background
}

/// r[k] ~ Pois(Σ d[l] s[k−l] + n̄).
pub fn sample_observation<R: Rng + ?Sized>(taps: &[f64], window: &[u8], background: f64, rng: &mut R) -> u64 {
    poisson(observation_rate(taps, window, background), rng)
}
