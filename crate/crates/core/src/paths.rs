//! Tx→Rx path enumeration, molecule fractions and path moments.

use crate::error::{Error, Result};
use crate::flow::FlowSolution;
use crate::network::{NodeId, PipeId, TxRxPlacement, VesselNetwork};

/// Default cap on the number of enumerated paths.
pub const DEFAULT_PATH_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TxRxPath {
    /// Ordered pipes, first is the Tx pipe and last the Rx pipe.
    pub pipes: Vec<PipeId>,
    /// Bifurcations traversed, excluding the path's start and end nodes.
    pub bifurcations: Vec<NodeId>,
    /// γ: probability that a released molecule takes this path.
    pub fraction: f64,
    /// μ̄ in s.
    pub mean: f64,
    /// σ̄² in s².
    pub variance: f64,
    /// θ̄ = σ̄² / μ̄ in s.
    pub scale: f64,
}

impl TxRxPath {
    /// Path with given fraction, mean and scale and no topology attached.
    /// Handy for studying the metrics of hypothetical ensembles.
    pub fn synthetic(fraction: f64, mean: f64, scale: f64) -> Self {
        TxRxPath {
            pipes: Vec::new(),
            bifurcations: Vec::new(),
            fraction,
            mean,
            variance: mean * scale,
            scale,
        }
    }

    /// Standard deviation σ̄ = √(μ̄ θ̄).
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    /// Paths sorted by mean, fastest first.
    pub paths: Vec<TxRxPath>,
    /// χ = Σ γ.
    pub reach_probability: f64,
    /// w_g = γ_g / χ.
    pub weights: Vec<f64>,
    /// Tx and Rx share a pipe.
    pub same_pipe: bool,
}

impl PathEnsemble {
    pub fn from_paths(mut paths: Vec<TxRxPath>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::NoPath);
        }
        paths.sort_by(|a, b| a.mean.total_cmp(&b.mean).then_with(|| a.pipes.cmp(&b.pipes)));
        let chi: f64 = paths.iter().map(|p| p.fraction).sum();
        let weights = paths.iter().map(|p| p.fraction / chi).collect();
        Ok(PathEnsemble {
            paths,
            reach_probability: chi,
            weights,
            same_pipe: false,
        })
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Ensemble holding only path `g`, keeping its absolute fraction.
    pub fn single(&self, g: usize) -> PathEnsemble {
        let path = self.paths[g].clone();
        PathEnsemble {
            reach_probability: path.fraction,
            weights: vec![1.0],
            paths: vec![path],
            same_pipe: self.same_pipe,
        }
    }
}

/// Mean and variance of the first-passage time over an axial distance `z`
/// in one pipe: `μ = z/ū`, `σ² = 2 D̄ z / ū³`.
pub fn pipe_moments(z: f64, velocity: f64, effective_diffusion: f64) -> (f64, f64) {
    (z / velocity, 2.0 * effective_diffusion * z / velocity.powi(3))
}

/// Product of flow splits at the bifurcations a path traverses.
pub fn path_fraction(pipes: &[PipeId], flow: &FlowSolution, network: &VesselNetwork) -> f64 {
    pipes
        .windows(2)
        .filter_map(|w| {
            let node = network.pipe(w[0]).target;
            network.is_bifurcation(node).then(|| {
                let total: f64 = network.out_pipes(node).iter().map(|&p| flow.flow(p)).sum();
                flow.flow(w[1]) / total
            })
        })
        .product()
}

/// Interior bifurcation nodes of a pipe sequence.
pub fn path_bifurcations(pipes: &[PipeId], network: &VesselNetwork) -> Vec<NodeId> {
    pipes
        .windows(2)
        .map(|w| network.pipe(w[0]).target)
        .filter(|&n| network.is_bifurcation(n))
        .collect()
}

/// (μ̄, σ̄², θ̄) of a pipe sequence from the Tx position to the Rx center.
pub fn path_moments(
    pipes: &[PipeId],
    network: &VesselNetwork,
    flow: &FlowSolution,
    placement: &TxRxPlacement,
) -> Result<(f64, f64, f64)> {
    let (first, last) = match (pipes.first(), pipes.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(Error::NoPath),
    };
    if first != placement.tx_pipe || last != placement.rx_pipe {
        return Err(Error::InvalidParameter(
            "path must start in the Tx pipe and end in the Rx pipe".into(),
        ));
    }
    let moments = |p: PipeId, z: f64| pipe_moments(z, flow.velocity(p), flow.effective_diffusion(p));
    let (mean, var) = if pipes.len() == 1 {
        let dz = placement.rx_position - placement.tx_position;
        if !(dz > 0.0) {
            return Err(Error::NoPath);
        }
        moments(first, dz)
    } else {
        let la = network.pipe(first).length;
        let (ma, va) = moments(first, la - placement.tx_position);
        let (mb, vb) = moments(last, placement.rx_position);
        let (mi, vi) = pipes[1..pipes.len() - 1]
            .iter()
            .map(|&p| moments(p, network.pipe(p).length))
            .fold((0.0, 0.0), |(m, v), (dm, dv)| (m + dm, v + dv));
        (ma + mb + mi, va + vb + vi)
    };
    if !(mean > 0.0 && var > 0.0) {
        return Err(Error::Numerical(format!(
            "degenerate path moments (mean {mean}, variance {var})"
        )));
    }
    Ok((mean, var, var / mean))
}

/// Every directed path from the Tx pipe to the Rx pipe, with fractions and
/// moments, sorted fastest first.
pub fn enumerate_paths(
    network: &VesselNetwork,
    flow: &FlowSolution,
    placement: &TxRxPlacement,
) -> Result<PathEnsemble> {
    enumerate_paths_capped(network, flow, placement, DEFAULT_PATH_CAP)
}

pub fn enumerate_paths_capped(
    network: &VesselNetwork,
    flow: &FlowSolution,
    placement: &TxRxPlacement,
    cap: usize,
) -> Result<PathEnsemble> {
    let (pa, pb) = (placement.tx_pipe, placement.rx_pipe);
    let sequences = if pa == pb {
        if placement.rx_position > placement.tx_position {
            vec![vec![pa]]
        } else {
            Vec::new()
        }
    } else {
        pipe_sequences(network, pa, pb, cap)?
    };
    let paths = sequences
        .into_iter()
        .map(|pipes| {
            let (mean, variance, scale) = path_moments(&pipes, network, flow, placement)?;
            Ok(TxRxPath {
                fraction: path_fraction(&pipes, flow, network),
                bifurcations: path_bifurcations(&pipes, network),
                pipes,
                mean,
                variance,
                scale,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ensemble = PathEnsemble::from_paths(paths)?;
    ensemble.same_pipe = pa == pb;
    Ok(ensemble)
}

/// Pipe sequences `pa, …, pb` following pipe directions. Iterative DFS;
/// the graph is acyclic so no visited set is needed.
fn pipe_sequences(
    network: &VesselNetwork,
    pa: PipeId,
    pb: PipeId,
    cap: usize,
) -> Result<Vec<Vec<PipeId>>> {
    // Prune branches that cannot reach pb's source.
    let goal = network.pipe(pb).source;
    let mut reaches = vec![false; network.node_count()];
    reaches[goal.0] = true;
    for &v in network.topological_order().iter().rev() {
        if network
            .out_pipes(v)
            .iter()
            .any(|&p| reaches[network.pipe(p).target.0])
        {
            reaches[v.0] = true;
        }
    }

    let mut found = Vec::new();
    let mut current = vec![pa];
    // Stack of (node, next out-pipe index to try).
    let mut stack = vec![(network.pipe(pa).target, 0usize)];
    while let Some(&mut (node, ref mut next)) = stack.last_mut() {
        if node == goal && *next == 0 {
            let mut seq = current.clone();
            seq.push(pb);
            found.push(seq);
            if found.len() > cap {
                return Err(Error::PathExplosion(cap));
            }
        }
        let outs = network.out_pipes(node);
        // Nothing downstream of the goal can reach it again.
        let candidate = if node == goal { None } else { outs.get(*next).copied() };
        match candidate {
            Some(p) => {
                *next += 1;
                let target = network.pipe(p).target;
                if reaches[target.0] {
                    current.push(p);
                    stack.push((target, 0));
                }
            }
            None => {
                stack.pop();
                if stack.is_empty() {
                    break;
                }
                current.pop();
            }
        }
    }
    Ok(found)
}
