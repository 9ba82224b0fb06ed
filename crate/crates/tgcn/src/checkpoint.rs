//! Model checkpoints: a text header followed by a little-endian f64 payload.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};
use tgcn_core::graph::ScaledLaplacian;
use tgcn_core::model::{ModelState, TGCNConfig, PARAM_LAYOUT_VERSION};
use tgcn_core::series::NormStats;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::formats::{norm_stats_text, parse_norm_stats};

const MAGIC: &str = "tgcn-checkpoint";
pub const FORMAT_VERSION: u32 = 1;

/// SHA-256 of a graph file's bytes, hex encoded.
pub fn fingerprint(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TGCNConfig,
    pub n_roads: usize,
    pub stats: NormStats,
    pub adjacency_hash: String,
    /// Parameter names and shapes in registration order.
    pub manifest: Vec<(String, Vec<usize>)>,
    pub payload: Vec<f64>,
}

const MODEL_KEYS: &[&str] = &[
    "n_blocks",
    "layers_per_block",
    "channels",
    "cheb_k",
    "kt",
    "input_len",
    "horizon",
    "output_block",
    "basis",
];

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Data(format!("checkpoint: {}", msg.into()))
}

impl Checkpoint {
    pub fn from_state(state: &ModelState, stats: &NormStats, adjacency_hash: &str) -> Self {
        Self {
            config: *state.config(),
            n_roads: state.n_roads(),
            stats: stats.clone(),
            adjacency_hash: adjacency_hash.to_string(),
            manifest: state
                .params()
                .iter()
                .map(|p| (p.name.clone(), p.value.shape().to_vec()))
                .collect(),
            payload: state.flat_values(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut head = format!("{MAGIC}\nversion={FORMAT_VERSION}\nlayout={PARAM_LAYOUT_VERSION}\n");
        writeln!(head, "n_roads={}", self.n_roads).unwrap();
        let cfg = ExperimentConfig {
            model: self.config,
            ..ExperimentConfig::default()
        };
        for key in MODEL_KEYS {
            writeln!(head, "{key}={}", cfg.value_of(key)).unwrap();
        }
        for line in norm_stats_text(&self.stats).lines() {
            writeln!(head, "norm_{line}").unwrap();
        }
        writeln!(head, "adjacency_sha256={}", self.adjacency_hash).unwrap();
        for (name, shape) in &self.manifest {
            let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
            writeln!(head, "param={name}:{}", dims.join("x")).unwrap();
        }
        writeln!(head, "payload_f64={}", self.payload.len()).unwrap();
        let mut bytes = head.into_bytes();
        for v in &self.payload {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes
    }

    pub fn from_bytes(bytes: &[u8]) -> CliResult<Self> {
        let mut pos = 0;
        let mut next_line = || -> CliResult<&str> {
            let rest = &bytes[pos..];
            let end = rest
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| bad("truncated header"))?;
            pos += end + 1;
            std::str::from_utf8(&rest[..end]).map_err(|_| bad("header is not UTF-8"))
        };
        if next_line()? != MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let version = next_line()?;
        if version != format!("version={FORMAT_VERSION}") {
            return Err(bad(format!(
                "format `{version}` is not supported (this build reads version={FORMAT_VERSION})"
            )));
        }
        let layout = next_line()?;
        if layout != format!("layout={PARAM_LAYOUT_VERSION}") {
            return Err(bad(format!(
                "parameter `{layout}` differs from this build's layout={PARAM_LAYOUT_VERSION}"
            )));
        }

        let mut cfg = ExperimentConfig::default();
        let mut n_roads = None;
        let mut norm = String::new();
        let mut hash = None;
        let mut manifest = Vec::new();
        let count = loop {
            let line = next_line()?;
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("bad line `{line}`")))?;
            match k {
                "n_roads" => n_roads = v.parse::<usize>().ok(),
                "norm_mean" | "norm_std" => writeln!(norm, "{}={v}", &k[5..]).unwrap(),
                "adjacency_sha256" => hash = Some(v.to_string()),
                "param" => {
                    let (name, dims) = v.rsplit_once(':').ok_or_else(|| bad(format!("bad param `{v}`")))?;
                    let shape = dims
                        .split('x')
                        .map(|d| d.parse::<usize>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| bad(format!("bad shape `{dims}`")))?;
                    manifest.push((name.to_string(), shape));
                }
                "payload_f64" => break v.parse::<usize>().map_err(|_| bad("bad payload length"))?,
                k if MODEL_KEYS.contains(&k) => cfg.set(k, v, Path::new("")).map_err(|e| bad(e.to_string()))?,
                other => return Err(bad(format!("unknown field `{other}`"))),
            }
        };
        let payload_bytes = &bytes[pos..];
        if payload_bytes.len() != count * 8 {
            return Err(bad(format!(
                "payload holds {} bytes, header promises {count} values",
                payload_bytes.len()
            )));
        }
        let payload = payload_bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let declared: usize = manifest.iter().map(|(_, s)| s.iter().product::<usize>()).sum();
        if declared != count {
            return Err(bad(format!("manifest declares {declared} values, payload has {count}")));
        }
        Ok(Self {
            config: cfg.model,
            n_roads: n_roads.ok_or_else(|| bad("missing n_roads"))?,
            stats: parse_norm_stats(&norm).map_err(bad)?,
            adjacency_hash: hash.ok_or_else(|| bad("missing adjacency_sha256"))?,
            manifest,
            payload,
        })
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        std::fs::write(path, self.to_bytes()).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    /// Rebuilds the model on `laplacian`, checking the manifest against the
    /// architecture the config describes.
    pub fn into_state(self, laplacian: ScaledLaplacian) -> CliResult<ModelState> {
        if laplacian.n() != self.n_roads {
            return Err(CliError::Data(format!(
                "checkpoint was trained on {} roads, graph has {}",
                self.n_roads,
                laplacian.n()
            )));
        }
        let mut state = ModelState::build(self.config, laplacian, self.n_roads, 0)?;
        let expected: Vec<(String, Vec<usize>)> = state
            .params()
            .iter()
            .map(|p| (p.name.clone(), p.value.shape().to_vec()))
            .collect();
        if expected != self.manifest {
            return Err(bad("parameter manifest does not match the configured architecture"));
        }
        state.load_flat(&self.payload)?;
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tgcn_core::graph::{scaled_laplacian, Adjacency, GraphKind};

    fn small() -> (ModelState, NormStats) {
        let adj = Adjacency::from_edges(3, GraphKind::Temporal, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let cfg = TGCNConfig {
            n_blocks: 1,
            channels: 4,
            input_len: 6,
            ..TGCNConfig::default()
        };
        let state = ModelState::build(cfg, scaled_laplacian(&adj).unwrap(), 3, 9).unwrap();
        (state, NormStats::global(50.0, 7.5))
    }

    #[test]
    fn round_trip_is_exact() {
        let (state, stats) = small();
        let ck = Checkpoint::from_state(&state, &stats, &fingerprint(b"graph"));
        let bytes = ck.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_bytes(), bytes);
        let restored = back.into_state(state.laplacian().clone()).unwrap();
        let probe = tgcn_core::DenseArray::from_vec(&[2, 6, 3], (0..36).map(|i| (i as f64 * 0.7).sin()).collect()).unwrap();
        let a = state.forward(&probe).unwrap();
        let b = restored.forward(&probe).unwrap();
        assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn version_mismatch_is_fatal() {
        let (state, stats) = small();
        let bytes = Checkpoint::from_state(&state, &stats, "h").to_bytes();
        let text = String::from_utf8_lossy(&bytes).replacen("version=1", "version=2", 1);
        let err = Checkpoint::from_bytes(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("version=2"), "{err}");
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let (state, stats) = small();
        let bytes = Checkpoint::from_state(&state, &stats, "h").to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }

    #[test]
    fn fingerprint_is_sha256() {
        assert_eq!(
            fingerprint(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
