//! Vessel-network topology: pipes, node roles, and Tx/Rx placement.
//!
//! A network is a directed multigraph whose edges are cylindrical pipes
//! oriented along the flow. Nodes are inlets (flow sources), outlets
//! (zero-pressure sinks) or connecting nodes. Bifurcation and junction
//! status is derived from node degrees and never stored.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default dynamic viscosity in Pa·s. Flow rates do not depend on it.
pub const DEFAULT_VISCOSITY: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PipeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl fmt::Display for PipeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pipe#{}", self.0)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeRole {
    /// Fluid enters the network here at a fixed rate (m³/s).
    Inlet { flow_rate: f64 },
    Outlet,
    Connecting,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    pub role: NodeRole,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipe {
    pub name: String,
    pub source: NodeId,
    pub target: NodeId,
    /// Length in meters.
    pub length: f64,
    /// Radius in meters.
    pub radius: f64,
}

impl Pipe {
    pub fn cross_section(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }
}

/// A validated vessel network. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct VesselNetwork {
    pipes: Vec<Pipe>,
    nodes: Vec<Node>,
    /// Molecular diffusion coefficient D in m²/s.
    diffusion: f64,
    /// Dynamic viscosity η in Pa·s.
    viscosity: f64,
    out_pipes: Vec<Vec<PipeId>>,
    in_pipes: Vec<Vec<PipeId>>,
    topo_order: Vec<NodeId>,
}

impl VesselNetwork {
    /// Validate and assemble a network. Checks every structural invariant:
    /// positive geometry, no self-loops, role/degree consistency, weak
    /// connectivity and acyclicity.
    pub fn new(nodes: Vec<Node>, pipes: Vec<Pipe>, diffusion: f64, viscosity: f64) -> Result<Self> {
        if !(diffusion > 0.0 && diffusion.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "diffusion must be positive, got {diffusion}"
            )));
        }
        if !(viscosity > 0.0 && viscosity.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "viscosity must be positive, got {viscosity}"
            )));
        }
        let n = nodes.len();
        let mut out_pipes = vec![Vec::new(); n];
        let mut in_pipes = vec![Vec::new(); n];
        for (i, p) in pipes.iter().enumerate() {
            if p.source.0 >= n || p.target.0 >= n {
                return Err(Error::InvalidPipe {
                    pipe: p.name.clone(),
                    reason: "node index out of range".into(),
                });
            }
            if p.source == p.target {
                return Err(Error::SelfLoop(p.name.clone()));
            }
            if !(p.length > 0.0 && p.length.is_finite()) {
                return Err(Error::InvalidPipe {
                    pipe: p.name.clone(),
                    reason: format!("length must be positive, got {}", p.length),
                });
            }
            if !(p.radius > 0.0 && p.radius.is_finite()) {
                return Err(Error::InvalidPipe {
                    pipe: p.name.clone(),
                    reason: format!("radius must be positive, got {}", p.radius),
                });
            }
            out_pipes[p.source.0].push(PipeId(i));
            in_pipes[p.target.0].push(PipeId(i));
        }

        let mut has_inlet = false;
        let mut has_outlet = false;
        for (i, node) in nodes.iter().enumerate() {
            let (indeg, outdeg) = (in_pipes[i].len(), out_pipes[i].len());
            let bad = |reason: &str| Error::InvalidNode {
                node: node.name.clone(),
                reason: reason.to_string(),
            };
            match node.role {
                NodeRole::Inlet { flow_rate } => {
                    has_inlet = true;
                    if !(flow_rate > 0.0 && flow_rate.is_finite()) {
                        return Err(bad("inlet flow_rate must be positive"));
                    }
                    if indeg != 0 || outdeg == 0 {
                        return Err(bad("inlet needs in-degree 0 and out-degree >= 1"));
                    }
                }
                NodeRole::Outlet => {
                    has_outlet = true;
                    if indeg == 0 || outdeg != 0 {
                        return Err(bad("outlet needs in-degree >= 1 and out-degree 0"));
                    }
                }
                NodeRole::Connecting => {
                    if indeg == 0 || outdeg == 0 {
                        return Err(bad("connecting node needs in-degree >= 1 and out-degree >= 1"));
                    }
                }
            }
        }
        if !has_inlet {
            return Err(Error::MissingTerminal("inlet"));
        }
        if !has_outlet {
            return Err(Error::MissingTerminal("outlet"));
        }

        // Weak connectivity.
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            let neighbours = out_pipes[v]
                .iter()
                .map(|p| pipes[p.0].target.0)
                .chain(in_pipes[v].iter().map(|p| pipes[p.0].source.0));
            for w in neighbours {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Disconnected(nodes[i].name.clone()));
        }

        let topo_order = topological_order(n, &pipes, &out_pipes, &in_pipes)?;
        Ok(VesselNetwork {
            pipes,
            nodes,
            diffusion,
            viscosity,
            out_pipes,
            in_pipes,
            topo_order,
        })
    }

    pub fn pipes(&self) -> &[Pipe] {
        &self.pipes
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn pipe(&self, id: PipeId) -> &Pipe {
        &self.pipes[id.0]
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn pipe_count(&self) -> usize {
        self.pipes.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    pub fn viscosity(&self) -> f64 {
        self.viscosity
    }

    /// Copy of the network with a different viscosity.
    pub fn with_viscosity(&self, viscosity: f64) -> Result<Self> {
        Self::new(self.nodes.clone(), self.pipes.clone(), self.diffusion, viscosity)
    }

    pub fn pipe_id(&self, name: &str) -> Option<PipeId> {
        self.pipes.iter().position(|p| p.name == name).map(PipeId)
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name).map(NodeId)
    }

    pub fn out_pipes(&self, node: NodeId) -> &[PipeId] {
        &self.out_pipes[node.0]
    }

    pub fn in_pipes(&self, node: NodeId) -> &[PipeId] {
        &self.in_pipes[node.0]
    }

    pub fn is_bifurcation(&self, node: NodeId) -> bool {
        self.out_pipes[node.0].len() > 1
    }

    pub fn is_junction(&self, node: NodeId) -> bool {
        self.in_pipes[node.0].len() > 1 && self.out_pipes[node.0].len() == 1
    }

    pub fn inlets(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.nodes.iter().enumerate().filter_map(|(i, n)| match n.role {
            NodeRole::Inlet { flow_rate } => Some((NodeId(i), flow_rate)),
            _ => None,
        })
    }

    pub fn outlets(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.role == NodeRole::Outlet)
            .map(|(i, _)| NodeId(i))
    }

    /// A topological order of all nodes (computed at construction).
    pub fn topological_order(&self) -> &[NodeId] {
        &self.topo_order
    }

    /// Largest path length (in pipes) through the network.
    pub fn longest_path_pipes(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        for &v in &self.topo_order {
            for &p in &self.out_pipes[v.0] {
                let w = self.pipes[p.0].target.0;
                depth[w] = depth[w].max(depth[v.0] + 1);
            }
        }
        depth.into_iter().max().unwrap_or(0)
    }
}

/// Kahn's algorithm; on failure names a pipe lying on a directed cycle.
fn topological_order(
    n: usize,
    pipes: &[Pipe],
    out_pipes: &[Vec<PipeId>],
    in_pipes: &[Vec<PipeId>],
) -> Result<Vec<NodeId>> {
    let mut indeg: Vec<usize> = in_pipes.iter().map(Vec::len).collect();
    let mut ready: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_front() {
        order.push(NodeId(v));
        for p in &out_pipes[v] {
            let w = pipes[p.0].target.0;
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.push_back(w);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Every unprocessed node has an unprocessed predecessor, so walking
    // backwards along unprocessed in-pipes must revisit a node.
    let start = (0..n).find(|&v| indeg[v] > 0).expect("cycle remainder");
    let mut visited = vec![usize::MAX; n];
    let mut v = start;
    let mut step = 0;
    loop {
        if visited[v] != usize::MAX {
            break;
        }
        visited[v] = step;
        step += 1;
        let p = in_pipes[v]
            .iter()
            .find(|p| indeg[pipes[p.0].source.0] > 0)
            .expect("unprocessed predecessor");
        v = pipes[p.0].source.0;
    }
    // v is on the cycle; report the pipe entering it from the cycle.
    let p = in_pipes[v]
        .iter()
        .find(|p| indeg[pipes[p.0].source.0] > 0)
        .expect("cycle pipe");
    Err(Error::Cycle(pipes[p.0].name.clone()))
}

/// Topological order of a validated network. Every pipe points from an
/// earlier node to a later one.
pub fn validate_dag(network: &VesselNetwork) -> Vec<NodeId> {
    network.topo_order.clone()
}

/// Transmitter and receiver placement inside the network.
#[derive(Debug, Clone, PartialEq)]
pub struct TxRxPlacement {
    pub tx_pipe: PipeId,
    /// Axial Tx position from the pipe inlet, meters.
    pub tx_position: f64,
    pub rx_pipe: PipeId,
    /// Axial position of the Rx window center, meters.
    pub rx_position: f64,
    /// Rx window length, meters.
    pub rx_length: f64,
    pub released_molecules: u64,
}

impl TxRxPlacement {
    pub fn validate(&self, network: &VesselNetwork) -> Result<()> {
        if self.tx_pipe.0 >= network.pipe_count() || self.rx_pipe.0 >= network.pipe_count() {
            return Err(Error::Placement("pipe index out of range".into()));
        }
        let la = network.pipe(self.tx_pipe).length;
        let lb = network.pipe(self.rx_pipe).length;
        if !(0.0..=la).contains(&self.tx_position) {
            return Err(Error::Placement(format!(
                "tx position {} outside [0, {la}]",
                self.tx_position
            )));
        }
        if !(0.0..=lb).contains(&self.rx_position) {
            return Err(Error::Placement(format!(
                "rx position {} outside [0, {lb}]",
                self.rx_position
            )));
        }
        if !(self.rx_length > 0.0 && self.rx_length.is_finite()) {
            return Err(Error::Placement("rx length must be positive".into()));
        }
        let half = 0.5 * self.rx_length;
        let slack = 1e-12 * lb;
        if self.rx_position - half < -slack || self.rx_position + half > lb + slack {
            return Err(Error::Placement(format!(
                "rx window [{}, {}] leaves pipe `{}` of length {lb}",
                self.rx_position - half,
                self.rx_position + half,
                network.pipe(self.rx_pipe).name
            )));
        }
        if self.released_molecules == 0 {
            return Err(Error::Placement("tx must release at least one molecule".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// File schema

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub diffusion: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viscosity: Option<f64>,
    pub nodes: Vec<NodeEntry>,
    pub pipes: Vec<PipeEntry>,
    pub tx: TxEntry,
    pub rx: RxEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub id: String,
    pub role: RoleTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoleTag {
    Inlet,
    Outlet,
    Connecting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipeEntry {
    pub id: String,
    pub source: String,
    pub target: String,
    pub length: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TxEntry {
    pub pipe: String,
    pub z: f64,
    pub molecules: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RxEntry {
    pub pipe: String,
    pub z: f64,
    pub length: f64,
}

impl NetworkDocument {
    pub fn into_model(self) -> Result<(VesselNetwork, TxRxPlacement)> {
        let mut node_index: HashMap<&str, NodeId> = HashMap::new();
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for entry in &self.nodes {
            if node_index.insert(&entry.id, NodeId(nodes.len())).is_some() {
                return Err(Error::DuplicateNode(entry.id.clone()));
            }
            let role = match (entry.role, entry.flow_rate) {
                (RoleTag::Inlet, Some(q)) => NodeRole::Inlet { flow_rate: q },
                (RoleTag::Inlet, None) => {
                    return Err(Error::Schema(format!("inlet `{}` needs flow_rate", entry.id)))
                }
                (_, Some(_)) => {
                    return Err(Error::Schema(format!(
                        "flow_rate only allowed on inlet nodes (node `{}`)",
                        entry.id
                    )))
                }
                (RoleTag::Outlet, None) => NodeRole::Outlet,
                (RoleTag::Connecting, None) => NodeRole::Connecting,
            };
            nodes.push(Node { name: entry.id.clone(), role });
        }

        let mut pipe_names: HashMap<&str, PipeId> = HashMap::new();
        let mut pipes = Vec::with_capacity(self.pipes.len());
        for entry in &self.pipes {
            if pipe_names.insert(&entry.id, PipeId(pipes.len())).is_some() {
                return Err(Error::DuplicatePipe(entry.id.clone()));
            }
            let lookup = |name: &str| {
                node_index.get(name).copied().ok_or_else(|| Error::DanglingNode {
                    pipe: entry.id.clone(),
                    node: name.to_string(),
                })
            };
            pipes.push(Pipe {
                name: entry.id.clone(),
                source: lookup(&entry.source)?,
                target: lookup(&entry.target)?,
                length: entry.length,
                radius: entry.radius,
            });
        }

        let find_pipe = |name: &str, what: &str| {
            pipe_names
                .get(name)
                .copied()
                .ok_or_else(|| Error::Placement(format!("{what} pipe `{name}` does not exist")))
        };
        let placement = TxRxPlacement {
            tx_pipe: find_pipe(&self.tx.pipe, "tx")?,
            tx_position: self.tx.z,
            rx_pipe: find_pipe(&self.rx.pipe, "rx")?,
            rx_position: self.rx.z,
            rx_length: self.rx.length,
            released_molecules: self.tx.molecules,
        };
        let network = VesselNetwork::new(
            nodes,
            pipes,
            self.diffusion,
            self.viscosity.unwrap_or(DEFAULT_VISCOSITY),
        )?;
        placement.validate(&network)?;
        Ok((network, placement))
    }

    pub fn from_model(network: &VesselNetwork, placement: &TxRxPlacement) -> Self {
        let nodes = network
            .nodes()
            .iter()
            .map(|n| {
                let (role, flow_rate) = match n.role {
                    NodeRole::Inlet { flow_rate } => (RoleTag::Inlet, Some(flow_rate)),
                    NodeRole::Outlet => (RoleTag::Outlet, None),
                    NodeRole::Connecting => (RoleTag::Connecting, None),
                };
                NodeEntry { id: n.name.clone(), role, flow_rate }
            })
            .collect();
        let pipes = network
            .pipes()
            .iter()
            .map(|p| PipeEntry {
                id: p.name.clone(),
                source: network.node(p.source).name.clone(),
                target: network.node(p.target).name.clone(),
                length: p.length,
                radius: p.radius,
            })
            .collect();
        NetworkDocument {
            diffusion: network.diffusion(),
            viscosity: (network.viscosity() != DEFAULT_VISCOSITY).then_some(network.viscosity()),
            nodes,
            pipes,
            tx: TxEntry {
                pipe: network.pipe(placement.tx_pipe).name.clone(),
                z: placement.tx_position,
                molecules: placement.released_molecules,
            },
            rx: RxEntry {
                pipe: network.pipe(placement.rx_pipe).name.clone(),
                z: placement.rx_position,
                length: placement.rx_length,
            },
        }
    }
}

/// Parse and fully validate a network document.
pub fn parse_network(text: &str) -> Result<(VesselNetwork, TxRxPlacement)> {
    let doc: NetworkDocument =
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    doc.into_model()
}

pub fn serialize_network(network: &VesselNetwork, placement: &TxRxPlacement) -> String {
    serde_json::to_string_pretty(&NetworkDocument::from_model(network, placement))
        .expect("network document serializes")
}
