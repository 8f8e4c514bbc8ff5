//! Delay-spread metrics of the network first-passage time T.
//!
//! The delay profile is the flux mixture `f_T(t) = Σ w_g j̄_g(t)`, a proper
//! density, so E[T] and τ_RMS are its mean and standard deviation.

use crate::channel::{path_breaks, path_flux};
use crate::error::{Error, Result};
use crate::paths::PathEnsemble;
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultipathMetrics {
    /// E[T] in s.
    pub mean_excess_delay: f64,
    /// τ_RMS in s.
    pub rms_delay_spread: f64,
    /// Σ w μ̄ θ̄ in s².
    pub diffusion_spread_sq: f64,
    /// Weighted variance of the path means in s².
    pub multipath_spread_sq: f64,
    /// B_c = 1/(2π τ_RMS) in Hz; infinite for a zero spread.
    pub coherence_bandwidth: f64,
}

/// f_T(t).
pub fn pdp(ensemble: &PathEnsemble, t: f64) -> f64 {
    ensemble
        .paths
        .iter()
        .zip(&ensemble.weights)
        .map(|(p, w)| w * path_flux(p, t))
        .sum()
}

/// E[T] = Σ w_g μ̄_g.
pub fn mean_excess_delay(ensemble: &PathEnsemble) -> f64 {
    ensemble
        .paths
        .iter()
        .zip(&ensemble.weights)
        .map(|(p, w)| w * p.mean)
        .sum()
}

/// τ_RMS with its diffusion and multipath components.
pub fn rms_delay_spread(ensemble: &PathEnsemble) -> MultipathMetrics {
    let mean = mean_excess_delay(ensemble);
    let (diffusion, multipath) = ensemble.paths.iter().zip(&ensemble.weights).fold(
        (0.0, 0.0),
        |(d, m), (p, w)| (d + w * p.mean * p.scale, m + w * (p.mean - mean).powi(2)),
    );
    let rms = (diffusion + multipath).sqrt();
    MultipathMetrics {
        mean_excess_delay: mean,
        rms_delay_spread: rms,
        diffusion_spread_sq: diffusion,
        multipath_spread_sq: multipath,
        coherence_bandwidth: if rms > 0.0 { 1.0 / (2.0 * std::f64::consts::PI * rms) } else { f64::INFINITY },
    }
}

/// B_c ≈ 1/(2π τ_RMS).
/// Probability mass of the PDP in each bin `[edges[i], edges[i+1])`,
/// by per-path adaptive quadrature.
pub fn pdp_bin_probabilities(ensemble: &PathEnsemble, edges: &[f64]) -> Vec<f64> {
    let end = edges.last().copied().unwrap_or(0.0);
    let mut cuts: Vec<f64> = edges.to_vec();
    for (p, w) in ensemble.paths.iter().zip(&ensemble.weights) {
        if *w > 0.0 {
            cuts.extend(path_breaks(p, end));
        }
    }
    cuts.retain(|&t| edges.first().is_some_and(|&lo| t >= lo) && t <= end);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    edges
        .windows(2)
        .map(|w| {
            let (lo, hi) = (cuts.partition_point(|&t| t < w[0]), cuts.partition_point(|&t| t <= w[1]));
            quad::integrate_with_breaks(|t| pdp(ensemble, t), &cuts[lo..hi], 1e-16, 1e-12)
        })
        .collect()
}

pub fn coherence_bandwidth(rms_delay_spread: f64) -> Result<f64> {
    if !(rms_delay_spread > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "coherence bandwidth needs a positive delay spread, got {rms_delay_spread}"
        )));
    }
    Ok(1.0 / (2.0 * std::f64::consts::PI * rms_delay_spread))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::TxRxPath;
    use crate::quad;
    use proptest::prelude::*;

    fn ensemble(paths: &[(f64, f64, f64)]) -> PathEnsemble {
        PathEnsemble::from_paths(
            paths
                .iter()
                .map(|&(g, m, s)| TxRxPath::synthetic(g, m, s))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_path_reduces_to_path_moments() {
        let e = ensemble(&[(0.4, 10.0, 0.3)]);
        let m = rms_delay_spread(&e);
        assert_eq!(m.mean_excess_delay, 10.0);
        assert_eq!(m.multipath_spread_sq, 0.0);
        assert!((m.rms_delay_spread - 3.0f64.sqrt()).abs() < 1e-15);
        for t in [1.0, 9.0, 10.0, 14.0] {
            assert_eq!(pdp(&e, t), path_flux(&e.paths[0], t));
        }
    }

    #[test]
    fn weighted_examples() {
        let e = ensemble(&[(0.75, 10.0, 1.0), (0.25, 20.0, 1.0)]);
        assert!((mean_excess_delay(&e) - 12.5).abs() < 1e-14);
        let e = ensemble(&[(0.5, 10.0, 0.0), (0.5, 20.0, 0.0)]);
        let m = rms_delay_spread(&e);
        assert_eq!(m.rms_delay_spread, 5.0);
        assert_eq!(m.diffusion_spread_sq, 0.0);
    }

    #[test]
    fn pdp_is_a_mixture() {
        let e = ensemble(&[(0.3, 10.0, 1.0), (0.3, 20.0, 2.0)]);
        let t = 14.0;
        let (j1, j2) = (path_flux(&e.paths[0], t), path_flux(&e.paths[1], t));
        assert!((pdp(&e, t) - 0.5 * (j1 + j2)).abs() < 1e-16);
    }

    #[test]
    fn bin_probabilities_sum_to_one() {
        let e = ensemble(&[(0.5, 6.0, 0.3), (0.2, 11.0, 0.5), (0.1, 19.0, 1e-4)]);
        let edges: Vec<f64> = (0..=200).map(|k| k as f64 * 0.5).collect();
        let p = pdp_bin_probabilities(&e, &edges);
        assert_eq!(p.len(), 200);
        let total: f64 = p.iter().sum();
        assert!((total - 1.0).abs() < 1e-9, "{total}");
        // The narrow third path puts weight 1/8 right around t = 19.
        let near: f64 = p[36..40].iter().sum();
        assert!(near > 0.125);
    }

    #[test]
    fn quadrature_oracle_three_paths() {
        let e = ensemble(&[(0.5, 6.0, 0.3), (0.2, 11.0, 0.5), (0.1, 19.0, 0.8)]);
        let m = rms_delay_spread(&e);
        let breaks = [0.0, 6.0, 11.0, 19.0, 60.0];
        let mass = quad::integrate_with_breaks(|t| pdp(&e, t), &breaks, 1e-15, 1e-13);
        let first = quad::integrate_with_breaks(|t| t * pdp(&e, t), &breaks, 1e-15, 1e-13);
        let second = quad::integrate_with_breaks(|t| t * t * pdp(&e, t), &breaks, 1e-15, 1e-13);
        assert!((mass - 1.0).abs() < 1e-9, "{mass}");
        assert!((first - m.mean_excess_delay).abs() < 1e-6 * m.mean_excess_delay);
        let sd = (second - first * first).sqrt();
        assert!((sd - m.rms_delay_spread).abs() < 1e-6 * m.rms_delay_spread);
    }

    #[test]
    fn coherence_values() {
        assert!((coherence_bandwidth(10.94).unwrap() - 0.014_547_983_829_240_89).abs() < 1e-15);
        assert!((coherence_bandwidth(2.17).unwrap() - 0.073_343_291_747_417_22).abs() < 1e-15);
        assert!((coherence_bandwidth(1.0 / (2.0 * std::f64::consts::PI)).unwrap() - 1.0).abs() < 1e-15);
        assert!(coherence_bandwidth(0.0).is_err());
    }

    proptest! {
        #[test]
        fn decomposition_and_bounds(
            paths in prop::collection::vec((0.01f64..1.0, 0.5f64..100.0, 0.0f64..5.0), 1..8)
        ) {
            let total: f64 = paths.iter().map(|p| p.0).sum();
            let scaled: Vec<_> = paths.iter().map(|&(g, m, s)| (g / total, m, s)).collect();
            let e = ensemble(&scaled);
            let m = rms_delay_spread(&e);
            let sq = m.rms_delay_spread * m.rms_delay_spread;
            prop_assert!((sq - (m.diffusion_spread_sq + m.multipath_spread_sq)).abs() <= 4.0 * f64::EPSILON * sq);
            prop_assert!(m.multipath_spread_sq >= 0.0);
            let lo = e.paths.iter().map(|p| p.mean).fold(f64::INFINITY, f64::min);
            let hi = e.paths.iter().map(|p| p.mean).fold(0.0, f64::max);
            prop_assert!(m.mean_excess_delay >= lo * (1.0 - 1e-12) && m.mean_excess_delay <= hi * (1.0 + 1e-12));
            prop_assert!((e.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
