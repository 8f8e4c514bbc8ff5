use proptest::prelude::*;
use vasculink::network::{parse_network, serialize_network};

fn document(lengths: &[f64], radii: &[f64], q: f64, d: f64, z: f64, n: u64) -> String {
    format!(
        r#"{{
            "diffusion": {d:e},
            "nodes": [
                {{"id": "in", "role": "inlet", "flow_rate": {q:e}}},
                {{"id": "a", "role": "connecting"}},
                {{"id": "b", "role": "connecting"}},
                {{"id": "out", "role": "outlet"}}
            ],
            "pipes": [
                {{"id": "p1", "source": "in", "target": "a", "length": {}, "radius": {}}},
                {{"id": "p2", "source": "a", "target": "b", "length": {}, "radius": {}}},
                {{"id": "p3", "source": "a", "target": "b", "length": {}, "radius": {}}},
                {{"id": "p4", "source": "b", "target": "out", "length": {}, "radius": {}}}
            ],
            "tx": {{"pipe": "p1", "z": {}, "molecules": {n}}},
            "rx": {{"pipe": "p4", "z": {}, "length": {}}}
        }}"#,
        lengths[0], radii[0], lengths[1], radii[1], lengths[2], radii[2], lengths[3], radii[3],
        z * lengths[0],
        0.5 * lengths[3],
        0.1 * lengths[3],
    )
}

proptest! {
    #[test]
    fn parse_serialize_parse_is_identity(
        lengths in prop::collection::vec(1e-3f64..1.0, 4),
        radii in prop::collection::vec(1e-5f64..1e-2, 4),
        q in 1e-12f64..1e-6,
        d in 1e-12f64..1e-6,
        z in 0.0f64..=1.0,
        n in 1u64..u64::MAX,
    ) {
        let (net, place) = parse_network(&document(&lengths, &radii, q, d, z, n)).unwrap();
        let text = serialize_network(&net, &place);
        let (net2, place2) = parse_network(&text).unwrap();
        prop_assert_eq!(&net, &net2);
        prop_assert_eq!(&place, &place2);
        prop_assert_eq!(text, serialize_network(&net2, &place2));
    }
}

#[test]
fn fixtures_round_trip() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    for entry in std::fs::read_dir(dir).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        let (net, place) = parse_network(&text).unwrap();
        let (net2, place2) = parse_network(&serialize_network(&net, &place)).unwrap();
        assert_eq!(net, net2);
        assert_eq!(place, place2);
    }
}
