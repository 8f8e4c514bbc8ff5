use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Provenance of one output file. Contains nothing run-dependent beyond
/// the inputs, so identical manifests mean identical outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub network_file_hash: String,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub parameters: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, network_bytes: &[u8], seed: Option<u64>, parameters: BTreeMap<String, String>) -> Self {
        RunManifest {
            command: command.to_string(),
            network_file_hash: hex::encode(Sha256::digest(network_bytes)),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            parameters,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}
