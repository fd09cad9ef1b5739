use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::params::ParamStore;

const MAGIC: &[u8; 8] = b"CFCKPT01";

#[derive(Serialize, Deserialize)]
struct Header {
    kind: String,
    seed: u64,
    step: u64,
    config: serde_json::Value,
    tensors: Vec<TensorEntry>,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

/// A single-file archive holding a model's weights together with the config,
/// the step counter and the seed it was trained with.
///
/// Layout: 8-byte magic, little-endian u64 header length, JSON header,
/// then all tensors as little-endian f32 in header order.
pub struct Checkpoint {
    pub kind: String,
    pub seed: u64,
    pub step: u64,
    pub config: serde_json::Value,
    pub tensors: Vec<(String, Vec<usize>, Vec<f32>)>,
}

impl Checkpoint {
    pub fn new(
        kind: &str,
        seed: u64,
        step: u64,
        config: &impl Serialize,
        stores: &[(&str, &ParamStore)],
    ) -> Result<Self> {
        let mut tensors = Vec::new();
        for (prefix, store) in stores {
            for (name, shape, data) in store.export()? {
                tensors.push((format!("{prefix}.{name}"), shape, data));
            }
        }
        Ok(Checkpoint {
            kind: kind.to_string(),
            seed,
            step,
            config: serde_json::to_value(config)?,
            tensors,
        })
    }

    /// Restore one named store's parameters (those under `prefix.`).
    pub fn restore(&self, prefix: &str, store: &mut ParamStore) -> Result<()> {
        let dotted = format!("{prefix}.");
        let rows: Vec<(String, Vec<usize>, Vec<f32>)> = self
            .tensors
            .iter()
            .filter(|(n, _, _)| n.starts_with(&dotted))
            .map(|(n, s, d)| (n[dotted.len()..].to_string(), s.clone(), d.clone()))
            .collect();
        store.import(&rows)
    }

    pub fn config_as<T: for<'de> Deserialize<'de>>(&self) -> Result<T> {
        Ok(serde_json::from_value(self.config.clone())?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let header = Header {
            kind: self.kind.clone(),
            seed: self.seed,
            step: self.step,
            config: self.config.clone(),
            tensors: self
                .tensors
                .iter()
                .map(|(name, shape, _)| TensorEntry {
                    name: name.clone(),
                    shape: shape.clone(),
                })
                .collect(),
        };
        let header_bytes = serde_json::to_vec(&header)?;
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let emit = |f: &mut fs::File, bytes: &[u8]| f.write_all(bytes).map_err(|e| Error::io(path, e));
        emit(&mut f, MAGIC)?;
        emit(&mut f, &(header_bytes.len() as u64).to_le_bytes())?;
        emit(&mut f, &header_bytes)?;
        for (_, _, data) in &self.tensors {
            let mut buf = Vec::with_capacity(data.len() * 4);
            for v in data {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            emit(&mut f, &buf)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut magic = [0u8; 8];
        f.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
        if &magic != MAGIC {
            return Err(Error::Format(format!(
                "{} is not a cropforge checkpoint (bad magic)",
                path.display()
            )));
        }
        let mut len_bytes = [0u8; 8];
        f.read_exact(&mut len_bytes).map_err(|e| Error::io(path, e))?;
        let header_len = u64::from_le_bytes(len_bytes) as usize;
        let mut header_bytes = vec![0u8; header_len];
        f.read_exact(&mut header_bytes).map_err(|e| Error::io(path, e))?;
        let header: Header = serde_json::from_slice(&header_bytes)?;
        let mut tensors = Vec::with_capacity(header.tensors.len());
        for entry in header.tensors {
            let n: usize = entry.shape.iter().product();
            let mut buf = vec![0u8; n * 4];
            f.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
            let data = buf
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            tensors.push((entry.name, entry.shape, data));
        }
        Ok(Checkpoint {
            kind: header.kind,
            seed: header.seed,
            step: header.step,
            config: header.config,
            tensors,
        })
    }
}
