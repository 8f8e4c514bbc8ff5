//! Channel analysis for advective-diffusive molecular communication in
//! vessel networks.
//!
//! The pipeline runs bottom-up:
//!
//! 1. [`network`] parses and validates a pipe network with a transmitter and
//!    a transparent receiver placed inside two of its pipes.
//! 2. [`flow`] solves the steady hydraulic circuit and derives per-pipe
//!    velocities and Aris–Taylor effective diffusion coefficients.
//! 3. [`paths`] enumerates every Tx→Rx path with its molecule fraction and
//!    inverse-Gaussian first-passage moments.
//! 4. [`channel`], [`metrics`] and [`spectrum`] evaluate the impulse
//!    response, the delay-spread metrics and the frequency response.
//! 5. [`detect`] simulates an OOK link with a decision-feedback detector;
//!    [`mcsim`] is an independent particle-level oracle for the whole model.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod detect;
pub mod error;
pub mod flow;
pub mod mcsim;
pub mod metrics;
pub mod network;
pub mod paths;
pub mod quad;
pub mod rng;
pub mod spectrum;

pub use channel::ChannelModel;
pub use detect::{LinkConfig, LinkResult, SamplingStrategy};
pub use error::{Error, Result};
pub use flow::FlowSolution;
pub use metrics::MultipathMetrics;
pub use network::{NodeId, NodeRole, PipeId, TxRxPlacement, VesselNetwork};
pub use paths::{PathEnsemble, TxRxPath};
pub use spectrum::SpectrumSample;

/// A network together with everything derived from it that the analyses
/// need. Built once per input file.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub network: VesselNetwork,
    pub placement: TxRxPlacement,
    pub flow: FlowSolution,
    pub model: ChannelModel,
    pub metrics: MultipathMetrics,
}

impl Analysis {
    /// Solve flow, enumerate paths and compute metrics for a parsed network.
    pub fn new(network: VesselNetwork, placement: TxRxPlacement, background: f64) -> Result<Self> {
        let flow = flow::solve_flow(&network)?;
        let ensemble = paths::enumerate_paths(&network, &flow, &placement)?;
        let model = ChannelModel::new(&flow, &placement, ensemble, background)?;
        let metrics = metrics::rms_delay_spread(&model.ensemble);
        Ok(Analysis { network, placement, flow, model, metrics })
    }

    /// Parse a network document and run [`Analysis::new`] with no background noise.
    pub fn from_json(text: &str) -> Result<Self> {
        let (network, placement) = network::parse_network(text)?;
        Self::new(network, placement, 0.0)
    }
}
