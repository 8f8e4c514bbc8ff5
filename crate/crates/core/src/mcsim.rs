//! Particle-level Monte Carlo oracle for the channel model.
//!
//! Each particle draws an inverse-Gaussian first-passage time per pipe
//! (Michael–Schucany–Haas), picks its outflow pipe at every bifurcation
//! with probability proportional to the pipe flow rates, and records the
//! time at which it first crosses the Rx window center. Nothing here uses
//! the path enumeration or the closed-form mixture, so agreement with
//! [`crate::metrics`] checks the whole analytic chain.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::FlowSolution;
use crate::network::{NodeId, NodeRole, PipeId, TxRxPlacement, VesselNetwork};
use crate::paths::pipe_moments;
use crate::rng;

/// Particles per independent RNG stream.
pub const CHUNK_SIZE: usize = 1 << 14;

/// Draw from the inverse Gaussian with the given mean and scale θ = σ²/μ.
///
/// Michael–Schucany–Haas transformation: with `y = ν²`, `ν ~ N(0,1)` and
/// `a = θy/(2μ)`, the smaller root is `x = μ / (1 + a + √(a(a+2)))`; accept
/// it with probability `μ/(μ+x)`, otherwise return `μ²/x`.
pub fn sample_inverse_gaussian<R: Rng + ?Sized>(mean: f64, scale: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    if scale <= 0.0 {
        return mean;
    }
    let nu: f64 = rng.sample(StandardNormal);
    let a = scale * nu * nu / (2.0 * mean);
    let x = mean / (1.0 + a + (a * (a + 2.0)).sqrt());
    let u: f64 = rng.random();
    if u * (mean + x) <= mean {
        x
    } else {
        mean * mean / x
    }
}

/// First-passage time over `length` in a pipe with the given transport
/// parameters: IG with mean `l/ū` and variance `2D̄l/ū³`.
pub fn sample_pipe_fpt<R: Rng + ?Sized>(length: f64, velocity: f64, effective_diffusion: f64, rng: &mut R) -> f64 {
    let (mean, var) = pipe_moments(length, velocity, effective_diffusion);
    if mean <= 0.0 {
        return 0.0;
    }
    sample_inverse_gaussian(mean, var / mean, rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleTrace {
    /// Pipes entered, starting with the Tx pipe.
    pub path_pipe_ids: Vec<PipeId>,
    /// Arrival time at the Rx center; time of exit for particles that miss.
    pub network_fpt: f64,
    pub reached_rx: bool,
}

/// Per-node routing table: out pipes with cumulative flow fractions.
#[derive(Debug, Clone)]
pub struct Router<'a> {
    network: &'a VesselNetwork,
    flow: &'a FlowSolution,
    placement: &'a TxRxPlacement,
    cumulative: Vec<Vec<(PipeId, f64)>>,
    max_hops: usize,
}

impl<'a> Router<'a> {
    pub fn new(network: &'a VesselNetwork, flow: &'a FlowSolution, placement: &'a TxRxPlacement) -> Self {
        let cumulative = (0..network.node_count())
            .map(|v| {
                let outs = network.out_pipes(NodeId(v));
                let total: f64 = outs.iter().map(|&p| flow.flow(p)).sum();
                let mut acc = 0.0;
                outs.iter()
                    .map(|&p| {
                        acc += flow.flow(p) / total;
                        (p, acc)
                    })
                    .collect()
            })
            .collect();
        Router {
            network,
            flow,
            placement,
            cumulative,
            max_hops: 10 * network.pipe_count(),
        }
    }

    fn fpt<R: Rng + ?Sized>(&self, pipe: PipeId, distance: f64, rng: &mut R) -> f64 {
        sample_pipe_fpt(distance, self.flow.velocity(pipe), self.flow.effective_diffusion(pipe), rng)
    }

    fn choose<R: Rng + ?Sized>(&self, node: NodeId, rng: &mut R) -> PipeId {
        let table = &self.cumulative[node.0];
        if table.len() == 1 {
            return table[0].0;
        }
        let u: f64 = rng.random();
        table
            .iter()
            .find(|&&(_, c)| u < c)
            .unwrap_or_else(|| table.last().expect("outflow pipes"))
            .0
    }

    /// Follow one particle from the Tx until it crosses the Rx center or
    /// leaves the network.
    pub fn trace<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ParticleTrace> {
        let place = self.placement;
        let (pa, pb) = (place.tx_pipe, place.rx_pipe);
        let mut pipes = vec![pa];
        let la = self.network.pipe(pa).length;

        if pa == pb && place.rx_position > place.tx_position {
            let t = self.fpt(pa, place.rx_position - place.tx_position, rng);
            return Ok(ParticleTrace { path_pipe_ids: pipes, network_fpt: t, reached_rx: true });
        }
        let mut t = self.fpt(pa, la - place.tx_position, rng);
        let mut node = self.network.pipe(pa).target;
        loop {
            if self.network.node(node).role == NodeRole::Outlet {
                return Ok(ParticleTrace { path_pipe_ids: pipes, network_fpt: t, reached_rx: false });
            }
            if pipes.len() > self.max_hops {
                return Err(Error::HopLimit(self.max_hops));
            }
            let next = self.choose(node, rng);
            pipes.push(next);
            if next == pb {
                t += self.fpt(next, place.rx_position, rng);
                return Ok(ParticleTrace { path_pipe_ids: pipes, network_fpt: t, reached_rx: true });
            }
            t += self.fpt(next, self.network.pipe(next).length, rng);
            node = self.network.pipe(next).target;
        }
    }
}

/// Merged outcome of a particle run. Arrival times are sorted, so the
/// result does not depend on how work was scheduled.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub count: u64,
    /// Arrival times of the particles that reached the Rx, ascending.
    pub arrival_times: Vec<f64>,
    /// Visits per realized Tx→Rx pipe sequence.
    pub path_counts: BTreeMap<Vec<PipeId>, u64>,
}

impl ParticleEnsemble {
    pub fn reached(&self) -> u64 {
        self.arrival_times.len() as u64
    }

    /// Empirical χ.
    pub fn reach_fraction(&self) -> f64 {
        self.reached() as f64 / self.count as f64
    }

    /// Empirical E[T] over reached particles.
    pub fn mean(&self) -> f64 {
        self.arrival_times.iter().sum::<f64>() / self.arrival_times.len() as f64
    }

    /// Empirical standard deviation of T (unbiased).
    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        let n = self.arrival_times.len() as f64;
        (self.arrival_times.iter().map(|t| (t - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    }

    /// Empirical probability of a given pipe sequence among all particles.
    pub fn path_frequency(&self, pipes: &[PipeId]) -> f64 {
        self.path_counts.get(pipes).copied().unwrap_or(0) as f64 / self.count as f64
    }

    /// Counts of arrival times in `[edges[i], edges[i+1])`.
    pub fn histogram(&self, edges: &[f64]) -> Vec<u64> {
        let mut counts = vec![0u64; edges.len().saturating_sub(1)];
        for &t in &self.arrival_times {
            let k = edges.partition_point(|&e| e <= t);
            if k >= 1 && k < edges.len() {
                counts[k - 1] += 1;
            }
        }
        counts
    }
}

/// Run `count` particles. Particles are grouped in chunks of
/// [`CHUNK_SIZE`]; chunk `i` uses RNG stream `i` of `seed`.
pub fn simulate_particles(
    network: &VesselNetwork,
    flow: &FlowSolution,
    placement: &TxRxPlacement,
    count: u64,
    seed: u64,
) -> Result<ParticleEnsemble> {
    if count == 0 {
        return Err(Error::InvalidParameter("particle count must be at least 1".into()));
    }
    let router = Router::new(network, flow, placement);
    let chunks = count.div_ceil(CHUNK_SIZE as u64);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(seed, c);
            let n = (count - c * CHUNK_SIZE as u64).min(CHUNK_SIZE as u64);
            let mut times = Vec::new();
            let mut paths: BTreeMap<Vec<PipeId>, u64> = BTreeMap::new();
            for _ in 0..n {
                let trace = router.trace(&mut rng)?;
                if trace.reached_rx {
                    times.push(trace.network_fpt);
                    *paths.entry(trace.path_pipe_ids).or_default() += 1;
                }
            }
            Ok((times, paths))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut arrival_times = Vec::new();
    let mut path_counts = BTreeMap::new();
    for (times, paths) in parts {
        arrival_times.extend(times);
        for (k, v) in paths {
            *path_counts.entry(k).or_default() += v;
        }
    }
    arrival_times.sort_by(f64::total_cmp);
    Ok(ParticleEnsemble { count, arrival_times, path_counts })
}

/// Pearson statistic of observed counts against expected probabilities.
/// Adjacent bins are pooled until each expects at least five counts.
/// Returns `(statistic, degrees_of_freedom)`.
pub fn chi_square(observed: &[u64], expected_probability: &[f64]) -> (f64, usize) {
    assert_eq!(observed.len(), expected_probability.len());
    let n: u64 = observed.iter().sum();
    let n = n as f64;
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&obs, &p) in observed.iter().zip(expected_probability) {
        o += obs as f64;
        e += p * n;
        if e >= 5.0 {
            pooled.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => pooled.push((o, e)),
        }
    }
    let stat = pooled.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    (stat, pooled.len().saturating_sub(1))
}
