//! Steady hydraulic solve via the equivalent resistive circuit.
//!
//! Pipes are Hagen–Poiseuille conductances `G = π r⁴ / (8 η l)`. Inlets
//! inject their prescribed flow rate, outlets are clamped to zero pressure,
//! and the remaining nodal pressures follow from Kirchhoff's current law.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::network::{NodeId, NodeRole, Pipe, PipeId, VesselNetwork};

/// Péclet-type ratio `ū l / D̄` below which a pipe is flagged as weakly
/// advective. Heuristic threshold.
pub const ADVECTION_WARNING_RATIO: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    /// Q_i in m³/s, indexed by pipe.
    pub flow_rate: Vec<f64>,
    /// Mean velocity ū_i in m/s.
    pub velocity: Vec<f64>,
    /// Aris–Taylor effective diffusion D̄_i in m²/s.
    pub effective_diffusion: Vec<f64>,
    /// Nodal pressure in Pa, outlets at zero.
    pub node_pressure: Vec<f64>,
}

impl FlowSolution {
    pub fn flow(&self, pipe: PipeId) -> f64 {
        self.flow_rate[pipe.0]
    }

    pub fn velocity(&self, pipe: PipeId) -> f64 {
        self.velocity[pipe.0]
    }

    pub fn effective_diffusion(&self, pipe: PipeId) -> f64 {
        self.effective_diffusion[pipe.0]
    }

    /// Largest absolute mass-balance defect over all nodes, including the
    /// global inlet/outlet balance.
    pub fn kirchhoff_residual(&self, network: &VesselNetwork) -> f64 {
        let mut worst: f64 = 0.0;
        let mut outlet_sum = 0.0;
        let mut inlet_sum = 0.0;
        for (i, node) in network.nodes().iter().enumerate() {
            let id = NodeId(i);
            let inflow: f64 = network.in_pipes(id).iter().map(|&p| self.flow(p)).sum();
            let outflow: f64 = network.out_pipes(id).iter().map(|&p| self.flow(p)).sum();
            let defect = match node.role {
                NodeRole::Inlet { flow_rate } => {
                    inlet_sum += flow_rate;
                    flow_rate - outflow
                }
                NodeRole::Outlet => {
                    outlet_sum += inflow;
                    0.0
                }
                NodeRole::Connecting => inflow - outflow,
            };
            worst = worst.max(defect.abs());
        }
        worst.max((inlet_sum - outlet_sum).abs())
    }
}

/// Hagen–Poiseuille conductance of a pipe.
pub fn conductance(pipe: &Pipe, viscosity: f64) -> f64 {
    std::f64::consts::PI * pipe.radius.powi(4) / (8.0 * viscosity * pipe.length)
}

/// `D̄ = r² ū² / (48 D) + D`.
pub fn effective_diffusion(radius: f64, velocity: f64, diffusion: f64) -> Result<f64> {
    if !(diffusion > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "molecular diffusion must be positive, got {diffusion}"
        )));
    }
    if !(velocity >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "velocity must be non-negative, got {velocity}"
        )));
    }
    Ok(radius * radius * velocity * velocity / (48.0 * diffusion) + diffusion)
}

/// Solve the network by nodal analysis.
pub fn solve_flow(network: &VesselNetwork) -> Result<FlowSolution> {
    let n = network.node_count();
    // Unknown pressures: every non-outlet node.
    let mut unknown = vec![usize::MAX; n];
    let mut count = 0;
    for (i, node) in network.nodes().iter().enumerate() {
        if node.role != NodeRole::Outlet {
            unknown[i] = count;
            count += 1;
        }
    }
    let eta = network.viscosity();
    let g: Vec<f64> = network.pipes().iter().map(|p| conductance(p, eta)).collect();

    let mut a = DMatrix::<f64>::zeros(count, count);
    let mut b = DVector::<f64>::zeros(count);
    for (pipe, &gi) in network.pipes().iter().zip(&g) {
        let (s, t) = (unknown[pipe.source.0], unknown[pipe.target.0]);
        if s != usize::MAX {
            a[(s, s)] += gi;
        }
        if t != usize::MAX {
            a[(t, t)] += gi;
        }
        if s != usize::MAX && t != usize::MAX {
            a[(s, t)] -= gi;
            a[(t, s)] -= gi;
        }
    }
    for (node, q) in network.inlets() {
        b[unknown[node.0]] += q;
    }

    // Scale rows/columns to unit diagonal so tiny conductances do not spoil
    // the factorization.
    let scale: Vec<f64> = (0..count).map(|i| a[(i, i)].sqrt().recip()).collect();
    for i in 0..count {
        for j in 0..count {
            a[(i, j)] *= scale[i] * scale[j];
        }
        b[i] *= scale[i];
    }
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::SingularFlow("conductance matrix is not positive definite".into()))?;
    let y = chol.solve(&b);

    let mut pressure = vec![0.0; n];
    for i in 0..n {
        if unknown[i] != usize::MAX {
            pressure[i] = y[unknown[i]] * scale[unknown[i]];
        }
    }
    if pressure.iter().any(|p| !p.is_finite()) {
        return Err(Error::SingularFlow("non-finite nodal pressure".into()));
    }

    let d = network.diffusion();
    let mut flow_rate = Vec::with_capacity(g.len());
    let mut velocity = Vec::with_capacity(g.len());
    let mut effective = Vec::with_capacity(g.len());
    for (pipe, &gi) in network.pipes().iter().zip(&g) {
        let q = gi * (pressure[pipe.source.0] - pressure[pipe.target.0]);
        if !(q > 0.0) {
            return Err(Error::FlowDirection { pipe: pipe.name.clone(), flow: q });
        }
        let u = q / pipe.cross_section();
        flow_rate.push(q);
        velocity.push(u);
        effective.push(effective_diffusion(pipe.radius, u, d)?);
    }
    Ok(FlowSolution {
        flow_rate,
        velocity,
        effective_diffusion: effective,
        node_pressure: pressure,
    })
}

/// Pipes whose advection-to-dispersion ratio `ū l / D̄` is below
/// [`ADVECTION_WARNING_RATIO`], with the ratio.
pub fn weak_advection_pipes(
    network: &VesselNetwork,
    flow: &FlowSolution,
    pipes: impl IntoIterator<Item = PipeId>,
) -> Vec<(PipeId, f64)> {
    pipes
        .into_iter()
        .filter_map(|p| {
            let ratio = flow.velocity(p) * network.pipe(p).length / flow.effective_diffusion(p);
            (ratio < ADVECTION_WARNING_RATIO).then_some((p, ratio))
        })
        .collect()
}
