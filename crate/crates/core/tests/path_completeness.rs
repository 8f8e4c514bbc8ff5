//! Path enumeration against a brute-force walk over every outflow choice.

use proptest::prelude::*;
use vasculink::network::parse_network;
use vasculink::{flow, paths, Error, NodeRole, PipeId, TxRxPlacement, VesselNetwork};

/// Every route a molecule can take from the Tx to an outlet, with its
/// probability, found by exhaustive recursion.
fn all_routes(net: &VesselNetwork, q: &vasculink::FlowSolution, start: PipeId) -> Vec<(Vec<PipeId>, f64)> {
    fn walk(
        net: &VesselNetwork,
        q: &vasculink::FlowSolution,
        route: &mut Vec<PipeId>,
        prob: f64,
        out: &mut Vec<(Vec<PipeId>, f64)>,
    ) {
        let node = net.pipe(*route.last().unwrap()).target;
        if net.node(node).role == NodeRole::Outlet {
            out.push((route.clone(), prob));
            return;
        }
        let outs = net.out_pipes(node);
        let total: f64 = outs.iter().map(|&p| q.flow(p)).sum();
        for &p in outs {
            route.push(p);
            walk(net, q, route, prob * q.flow(p) / total, out);
            route.pop();
        }
    }
    let mut out = Vec::new();
    walk(net, q, &mut vec![start], 1.0, &mut out);
    out
}

fn check(net: &VesselNetwork, place: &TxRxPlacement) -> Result<(), TestCaseError> {
    let q = match flow::solve_flow(net) {
        Ok(q) => q,
        Err(Error::FlowDirection { .. }) => return Ok(()),
        Err(e) => return Err(TestCaseError::fail(e.to_string())),
    };
    let routes = all_routes(net, &q, place.tx_pipe);
    let total: f64 = routes.iter().map(|r| r.1).sum();
    prop_assert!((total - 1.0).abs() < 1e-12, "route probabilities sum to {}", total);

    // Routes truncated at their first visit to the Rx pipe.
    let mut expected: Vec<(Vec<PipeId>, f64)> = Vec::new();
    for (route, p) in routes {
        if let Some(i) = route.iter().position(|&x| x == place.rx_pipe) {
            let prefix = route[..=i].to_vec();
            match expected.iter_mut().find(|e| e.0 == prefix) {
                Some(e) => e.1 += p,
                None => expected.push((prefix, p)),
            }
        }
    }
    match paths::enumerate_paths(net, &q, place) {
        Ok(ens) => {
            prop_assert_eq!(ens.len(), expected.len());
            let chi: f64 = expected.iter().map(|e| e.1).sum();
            prop_assert!((ens.reach_probability - chi).abs() < 1e-12);
            for path in &ens.paths {
                let e = expected.iter().find(|e| e.0 == path.pipes);
                prop_assert!(e.is_some(), "unexpected path {:?}", path.pipes);
                prop_assert!((e.unwrap().1 - path.fraction).abs() < 1e-12);
            }
        }
        Err(Error::NoPath) => prop_assert!(expected.is_empty()),
        Err(e) => return Err(TestCaseError::fail(e.to_string())),
    }
    Ok(())
}

/// Layered random DAG: one inlet, one outlet, `layers` internal layers.
fn layered(widths: &[usize], extra: &[(usize, usize, usize, usize)], lengths: &[f64], rx_pick: usize) -> String {
    let mut nodes = vec![r#"{"id": "in", "role": "inlet", "flow_rate": 1e-7}"#.to_string()];
    let mut names: Vec<Vec<String>> = vec![vec!["in".into()]];
    for (l, &w) in widths.iter().enumerate() {
        let layer: Vec<String> = (0..w).map(|k| format!("n{l}_{k}")).collect();
        for n in &layer {
            nodes.push(format!(r#"{{"id": "{n}", "role": "connecting"}}"#));
        }
        names.push(layer);
    }
    nodes.push(r#"{"id": "out", "role": "outlet"}"#.to_string());
    names.push(vec!["out".into()]);

    let mut edges: Vec<(String, String)> = Vec::new();
    // Every node gets one input from the previous layer and one output to the next.
    for l in 1..names.len() {
        for (k, n) in names[l].iter().enumerate() {
            let prev = &names[l - 1];
            edges.push((prev[k % prev.len()].clone(), n.clone()));
        }
        for (k, n) in names[l - 1].iter().enumerate() {
            let next = &names[l];
            if !edges.iter().any(|e| &e.0 == n) {
                edges.push((n.clone(), next[k % next.len()].clone()));
            }
        }
    }
    for &(la, ka, skip, kb) in extra {
        let la = la % (names.len() - 1);
        let lb = (la + 1 + skip % 2).min(names.len() - 1);
        let a = &names[la][ka % names[la].len()];
        let b = &names[lb][kb % names[lb].len()];
        edges.push((a.clone(), b.clone()));
    }
    let pipes: Vec<String> = edges
        .iter()
        .enumerate()
        .map(|(i, (a, b))| {
            format!(
                r#"{{"id": "e{i}", "source": "{a}", "target": "{b}", "length": {}, "radius": 1e-3}}"#,
                lengths[i % lengths.len()]
            )
        })
        .collect();
    let rx = 1 + rx_pick % (edges.len() - 1);
    format!(
        r#"{{"diffusion": 1.46e-7, "nodes": [{}], "pipes": [{}],
            "tx": {{"pipe": "e0", "z": 0.0, "molecules": 100}},
            "rx": {{"pipe": "e{rx}", "z": 0.01, "length": 0.001}}}}"#,
        nodes.join(","),
        pipes.join(",")
    )
}

#[test]
fn fixtures_match_brute_force() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    for entry in std::fs::read_dir(dir).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        let (net, place) = parse_network(&text).unwrap();
        check(&net, &place).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_layered_networks(
        widths in prop::collection::vec(1usize..4, 1..5),
        extra in prop::collection::vec((0usize..8, 0usize..4, 0usize..2, 0usize..4), 0..6),
        lengths in prop::collection::vec(0.02f64..0.3, 1..8),
        rx_pick in 0usize..64,
    ) {
        let doc = layered(&widths, &extra, &lengths, rx_pick);
        let (net, place) = parse_network(&doc).unwrap();
        check(&net, &place)?;
    }
}
