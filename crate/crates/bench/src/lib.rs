//! Shared workloads for the benchmarks.

use vasculink::{Analysis, NodeId, TxRxPlacement, VesselNetwork};
use vasculink::network::{Node, NodeRole, Pipe};

/// A ladder of `rungs` parallel pipe pairs in series: `2^rungs` Tx→Rx paths.
pub fn ladder(rungs: usize) -> Analysis {
    let mut nodes = vec![Node { name: "in".into(), role: NodeRole::Inlet { flow_rate: 1e-7 } }];
    for k in 0..=rungs {
        nodes.push(Node { name: format!("n{k}"), role: NodeRole::Connecting });
    }
    nodes.push(Node { name: "out".into(), role: NodeRole::Outlet });
    let out = NodeId(nodes.len() - 1);
    let mut pipes = vec![pipe("tx", NodeId(0), NodeId(1), 0.02)];
    for k in 0..rungs {
        let (a, b) = (NodeId(k + 1), NodeId(k + 2));
        pipes.push(pipe(&format!("u{k}"), a, b, 0.02 + 0.002 * k as f64));
        pipes.push(pipe(&format!("l{k}"), a, b, 0.03 + 0.001 * k as f64));
    }
    pipes.push(pipe("rx", NodeId(rungs + 1), out, 0.02));
    let rx = pipes.len() - 1;
    let network = VesselNetwork::new(nodes, pipes, 1.46e-7, 1.0).expect("valid ladder");
    let placement = TxRxPlacement {
        tx_pipe: vasculink::PipeId(0),
        tx_position: 0.0,
        rx_pipe: vasculink::PipeId(rx),
        rx_position: 0.01,
        rx_length: 1e-3,
        released_molecules: 1000,
    };
    Analysis::new(network, placement, 0.0).expect("ladder analysis")
}

fn pipe(name: &str, source: NodeId, target: NodeId, length: f64) -> Pipe {
    Pipe { name: name.into(), source, target, length, radius: 1e-3 }
}
