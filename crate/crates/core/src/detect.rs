//! Sampling strategies, symbol-duration rule, adaptive decision-feedback
//! detection and the Monte Carlo SER harness for OOK over the Poisson
//! channel.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::channel::{poisson, ChannelModel};
use crate::error::{Error, Result};
use crate::metrics::MultipathMetrics;
use crate::rng;

/// Points in the global-peak pre-scan.
const PEAK_SCAN_POINTS: usize = 512;

/// Generation memory covers the CIR up to `E[T] + GENERATION_SPAN_SIGMAS · τ_RMS`.
pub const GENERATION_SPAN_SIGMAS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplingStrategy {
    /// Numerical argmax of h(t).
    GlobalPeak,
    /// Peak time of the path with the largest weighted flux peak.
    StrongestPathPeak,
    /// E[T].
    MeanExcessDelay,
}

impl SamplingStrategy {
    pub const ALL: [SamplingStrategy; 3] = [
        SamplingStrategy::GlobalPeak,
        SamplingStrategy::StrongestPathPeak,
        SamplingStrategy::MeanExcessDelay,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SamplingStrategy::GlobalPeak => "global-peak",
            SamplingStrategy::StrongestPathPeak => "strongest-path",
            SamplingStrategy::MeanExcessDelay => "mean-delay",
        }
    }
}

impl fmt::Display for SamplingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SamplingStrategy::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown sampling strategy `{s}`")))
    }
}

/// Positive root of `t² + 3θ̄t − μ̄² = 0`, the mode of the path flux.
pub fn path_peak_time(mean: f64, scale: f64) -> f64 {
    // (−3θ + √(9θ² + 4μ²))/2 rewritten without cancellation for small θ.
    let root = (9.0 * scale * scale + 4.0 * mean * mean).sqrt();
    2.0 * mean * mean / (3.0 * scale + root)
}

/// Index of the path whose weighted flux peak `γ_g j̄_g(t_g^peak)` is largest.
pub fn strongest_path(model: &ChannelModel) -> usize {
    let peak = |g: usize| {
        let p = &model.ensemble.paths[g];
        model.path_contribution(g, path_peak_time(p.mean, p.scale))
    };
    (0..model.ensemble.len())
        .max_by(|&a, &b| peak(a).total_cmp(&peak(b)).then(b.cmp(&a)))
        .expect("non-empty ensemble")
}

/// argmax_t h(t): a uniform pre-scan followed by golden-section refinement
/// around the best sample.
pub fn global_peak_time(model: &ChannelModel) -> Result<f64> {
    let paths = &model.ensemble.paths;
    let lo = paths
        .iter()
        .map(|p| path_peak_time(p.mean, p.scale))
        .fold(f64::INFINITY, f64::min);
    let hi = paths
        .iter()
        .map(|p| p.mean + 3.0 * p.std_dev())
        .fold(0.0, f64::max);
    let step = (hi - lo) / (PEAK_SCAN_POINTS - 1) as f64;
    let mut best = (lo, model.cir(lo));
    for k in 0..PEAK_SCAN_POINTS {
        let t = lo + k as f64 * step;
        let h = model.cir(t);
        if !h.is_finite() {
            return Err(Error::Numerical(format!("non-finite CIR at t = {t}")));
        }
        if h > best.1 {
            best = (t, h);
        }
    }
    let (mut a, mut b) = ((best.0 - step).max(0.0), best.0 + step);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (model.cir(c), model.cir(d));
    for _ in 0..200 {
        if (b - a) <= 1e-12 * best.0.max(1e-300) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = model.cir(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = model.cir(d);
        }
    }
    let t = 0.5 * (a + b);
    Ok(if model.cir(t) >= best.1 { t } else { best.0 })
}

pub fn resolve_sampling_time(
    strategy: SamplingStrategy,
    model: &ChannelModel,
    metrics: &MultipathMetrics,
) -> Result<f64> {
    if model.ensemble.is_empty() {
        return Err(Error::NoPath);
    }
    match strategy {
        SamplingStrategy::GlobalPeak => global_peak_time(model),
        SamplingStrategy::StrongestPathPeak => {
            let p = &model.ensemble.paths[strongest_path(model)];
            Ok(path_peak_time(p.mean, p.scale))
        }
        SamplingStrategy::MeanExcessDelay => Ok(metrics.mean_excess_delay),
    }
}

/// `T_s = c · τ_RMS`.
pub fn min_symbol_duration(rms_delay_spread: f64, factor: f64) -> f64 {
    factor * rms_delay_spread
}

/// ψ = d[0] / ln(1 + d[0]/λ_ISI⁺); 0.5 when λ_ISI⁺ = 0 so that a single
/// molecule decides for a one.
pub fn decision_threshold(d0: f64, isi_plus_noise: f64) -> Result<f64> {
    if !(d0 > 0.0) {
        return Err(Error::ZeroTap);
    }
    if isi_plus_noise <= 0.0 {
        return Ok(0.5);
    }
    Ok(d0 / (d0 / isi_plus_noise).ln_1p())
}

/// Taps used to generate observations: enough to cover the CIR support,
/// never fewer than the detector memory.
pub fn generation_memory(metrics: &MultipathMetrics, symbol_duration: f64, memory: usize) -> usize {
    let span = metrics.mean_excess_delay + GENERATION_SPAN_SIGMAS * metrics.rms_delay_spread;
    memory.max((span / symbol_duration).ceil() as usize + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    /// T_s in s.
    pub symbol_duration: f64,
    /// Detector memory L (taps known to the detector).
    pub memory: usize,
    /// N, molecules per transmitted one.
    pub molecules: u64,
    /// n̄.
    pub background: f64,
    pub strategy: SamplingStrategy,
    /// Symbols counted in the SER (after warm-up).
    pub symbol_count: u64,
    pub seed: u64,
    /// Feed back the true past symbols instead of the decisions.
    pub genie_aided: bool,
    /// Keep the per-symbol threshold trace.
    pub record_thresholds: bool,
}

impl LinkConfig {
    pub fn new(symbol_duration: f64, memory: usize, molecules: u64, background: f64) -> Self {
        LinkConfig {
            symbol_duration,
            memory,
            molecules,
            background,
            strategy: SamplingStrategy::StrongestPathPeak,
            symbol_count: 1_000_000,
            seed: 0,
            genie_aided: false,
            record_thresholds: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.symbol_duration > 0.0 && self.symbol_duration.is_finite()) {
            return Err(Error::InvalidParameter("symbol duration must be positive".into()));
        }
        if self.memory == 0 {
            return Err(Error::InvalidParameter("memory must be at least 1".into()));
        }
        if self.symbol_count == 0 {
            return Err(Error::InvalidParameter("symbol count must be at least 1".into()));
        }
        if !(self.background >= 0.0 && self.background.is_finite()) {
            return Err(Error::InvalidParameter("background must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkResult {
    pub ser: f64,
    pub errors: u64,
    pub symbol_count: u64,
    /// 95% Wilson interval on the SER.
    pub confidence_interval: (f64, f64),
    pub resolved_sampling_time: f64,
    /// Mean ψ over counted symbols.
    pub threshold_mean: f64,
    pub decision_threshold_trace: Option<Vec<f64>>,
    pub generation_memory: usize,
    /// d[0..L_gen).
    pub taps: Vec<f64>,
}

/// 95% Wilson score interval for `errors` successes in `n` trials.
pub fn wilson_interval(errors: u64, n: u64) -> (f64, f64) {
    const Z: f64 = 1.959_963_984_540_054;
    let n = n as f64;
    let p = errors as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Simulate an i.i.d. equiprobable OOK stream through the Poisson channel
/// and detect it with the adaptive threshold.
///
/// Observations use [`generation_memory`] taps so that ISI beyond the
/// detector memory is present. The first `L_gen` symbols are a warm-up and
/// are not counted. Symbols before the stream are zeros.
pub fn run_link(model: &ChannelModel, metrics: &MultipathMetrics, config: &LinkConfig) -> Result<LinkResult> {
    config.validate()?;
    let sampling_time = resolve_sampling_time(config.strategy, model, metrics)?;
    let gen_memory = generation_memory(metrics, config.symbol_duration, config.memory);
    let taps = model
        .with_molecules(config.molecules)
        .expected_taps(config.symbol_duration, sampling_time, gen_memory);
    let d0 = taps[0];
    if !(d0 > 0.0) {
        return Err(Error::ZeroTap);
    }

    let mut rng = rng::stream(config.seed, 0);
    // Ring buffers indexed by k mod len: true and decided symbols.
    let mut sent = vec![0u8; gen_memory];
    let mut decided = vec![0u8; gen_memory];
    let total = gen_memory as u64 + config.symbol_count;
    let mut errors = 0u64;
    let mut threshold_sum = 0.0;
    let mut trace = config
        .record_thresholds
        .then(|| Vec::with_capacity(config.symbol_count as usize));

    for k in 0..total {
        let slot = (k % gen_memory as u64) as usize;
        let bit = rng.random::<bool>() as u8;
        sent[slot] = bit;

        let mut rate = config.background;
        for (l, d) in taps.iter().enumerate() {
            let idx = (slot + gen_memory - l) % gen_memory;
            if sent[idx] != 0 {
                rate += d;
            }
        }
        let r = poisson(rate, &mut rng) as f64;

        let feedback = if config.genie_aided { &sent } else { &decided };
        let mut isi = config.background;
        for (l, d) in taps.iter().enumerate().take(config.memory).skip(1) {
            let idx = (slot + gen_memory - l) % gen_memory;
            if feedback[idx] != 0 {
                isi += d;
            }
        }
        let psi = decision_threshold(d0, isi)?;
        let estimate = (r > psi) as u8;
        decided[slot] = estimate;

        if k >= gen_memory as u64 {
            errors += (estimate != bit) as u64;
            threshold_sum += psi;
            if let Some(t) = trace.as_mut() {
                t.push(psi);
            }
        }
    }

    let n = config.symbol_count;
    Ok(LinkResult {
        ser: errors as f64 / n as f64,
        errors,
        symbol_count: n,
        confidence_interval: wilson_interval(errors, n),
        resolved_sampling_time: sampling_time,
        threshold_mean: threshold_sum / n as f64,
        decision_threshold_trace: trace,
        generation_memory: gen_memory,
        taps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::rms_delay_spread;
    use crate::paths::{PathEnsemble, TxRxPath};

    fn model(paths: &[(f64, f64, f64)]) -> ChannelModel {
        let ens = PathEnsemble::from_paths(
            paths.iter().map(|&(g, m, s)| TxRxPath::synthetic(g, m, s)).collect(),
        )
        .unwrap();
        ChannelModel::from_parts(ens, 0.3, 1, 0.0).unwrap()
    }

    #[test]
    fn peak_time_values() {
        let t = path_peak_time(10.0, 1.0);
        assert!((t - 8.611_874_208_078_342).abs() < 1e-12);
        assert!((t * t + 3.0 * t - 100.0).abs() < 1e-9);
        assert_eq!(path_peak_time(10.0, 0.0), 10.0);
        assert!((path_peak_time(10.0, 1e-12) - 10.0).abs() < 1e-10);
    }

    #[test]
    fn threshold_values() {
        assert!((decision_threshold(100.0, 50.0).unwrap() - 91.023_922_662_683_73).abs() < 1e-10);
        // d0 → 0: ψ → λ.
        assert!((decision_threshold(1e-9, 7.0).unwrap() - 7.0).abs() < 1e-8);
        assert_eq!(decision_threshold(10.0, 0.0).unwrap(), 0.5);
        assert_eq!(decision_threshold(0.0, 3.0).unwrap_err(), Error::ZeroTap);
    }

    #[test]
    fn symbol_duration_rule() {
        assert!((min_symbol_duration(2.17, 4.0) - 8.68).abs() < 1e-12);
        assert_eq!(min_symbol_duration(3.0, 0.5), 1.5);
        assert_eq!(min_symbol_duration(0.0, 4.0), 0.0);
    }

    #[test]
    fn strategies_on_single_path() {
        let m = model(&[(1.0, 10.0, 0.5)]);
        let metrics = rms_delay_spread(&m.ensemble);
        let peak = path_peak_time(10.0, 0.5);
        let g = resolve_sampling_time(SamplingStrategy::GlobalPeak, &m, &metrics).unwrap();
        let s = resolve_sampling_time(SamplingStrategy::StrongestPathPeak, &m, &metrics).unwrap();
        let e = resolve_sampling_time(SamplingStrategy::MeanExcessDelay, &m, &metrics).unwrap();
        assert!((g - peak).abs() < 1e-7 * peak, "{g} vs {peak}");
        assert_eq!(s, peak);
        assert_eq!(e, 10.0);
    }

    #[test]
    fn strongest_path_dictates_global_peak() {
        // Dominant narrow early path, weak broad late path.
        let m = model(&[(0.8, 10.0, 0.2), (0.2, 30.0, 1.0)]);
        let metrics = rms_delay_spread(&m.ensemble);
        let g = resolve_sampling_time(SamplingStrategy::GlobalPeak, &m, &metrics).unwrap();
        let s = resolve_sampling_time(SamplingStrategy::StrongestPathPeak, &m, &metrics).unwrap();
        assert!((g - s).abs() < 1e-4 * s, "{g} vs {s}");
    }

    #[test]
    fn mean_delay_lands_in_valley() {
        let m = model(&[(0.5, 10.0, 0.1), (0.5, 30.0, 0.1)]);
        let metrics = rms_delay_spread(&m.ensemble);
        let e = resolve_sampling_time(SamplingStrategy::MeanExcessDelay, &m, &metrics).unwrap();
        let peak = m.cir(global_peak_time(&m).unwrap());
        assert!(m.cir(e) < 0.5 * peak);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in SamplingStrategy::ALL {
            assert_eq!(s.as_str().parse::<SamplingStrategy>().unwrap(), s);
        }
        assert!("peak".parse::<SamplingStrategy>().is_err());
    }

    #[test]
    fn noiseless_low_isi_link_is_error_free() {
        let m = model(&[(1.0, 10.0, 0.5)]);
        let metrics = rms_delay_spread(&m.ensemble);
        let mut cfg = LinkConfig::new(20.0 * metrics.rms_delay_spread, 1, 10_000, 0.0);
        cfg.symbol_count = 100_000;
        cfg.seed = 11;
        let res = run_link(&m, &metrics, &cfg).unwrap();
        assert_eq!(res.errors, 0);
        assert_eq!(res.ser, 0.0);
    }

    #[test]
    fn reproducible_and_bounded() {
        let m = model(&[(0.7, 10.0, 0.5), (0.2, 16.0, 0.8)]);
        let metrics = rms_delay_spread(&m.ensemble);
        let mut cfg = LinkConfig::new(metrics.rms_delay_spread, 2, 2_000, 50.0);
        cfg.symbol_count = 20_000;
        cfg.seed = 5;
        cfg.record_thresholds = true;
        let a = run_link(&m, &metrics, &cfg).unwrap();
        let b = run_link(&m, &metrics, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.ser >= 0.0 && a.ser <= 1.0);
        assert_eq!(a.ser, a.errors as f64 / a.symbol_count as f64);
        assert_eq!(a.decision_threshold_trace.as_ref().unwrap().len(), 20_000);
        let (lo, hi) = a.confidence_interval;
        assert!(lo <= a.ser && a.ser <= hi);
    }

    #[test]
    fn noise_dominated_limit() {
        let m = model(&[(1.0, 10.0, 0.5)]);
        let metrics = rms_delay_spread(&m.ensemble);
        let mut cfg = LinkConfig::new(4.0 * metrics.rms_delay_spread, 2, 100, 1e7);
        cfg.symbol_count = 100_000;
        let res = run_link(&m, &metrics, &cfg).unwrap();
        let sigma = (0.25f64 / 100_000.0).sqrt();
        assert!((res.ser - 0.5).abs() < 4.0 * sigma, "{}", res.ser);
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(0, 1_000_000);
        assert!(lo.abs() < 1e-15);
        assert!(hi > 0.0 && hi < 1e-5);
        let (lo, hi) = wilson_interval(500, 1000);
        assert!(lo < 0.5 && hi > 0.5);
    }
}
