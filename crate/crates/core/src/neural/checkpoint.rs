//! On-disk model container: `checkpoint.toml` describing each network's
//! specification and parameter shapes, plus one binary tensor file per network.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{Network, NetworkKind, NetworkSpec};
use super::train::TrainedModels;
use super::Tensor;
use crate::brdf::BrdfConstants;
use crate::error::{Error, Result};

pub const CHECKPOINT_INDEX: &str = "checkpoint.toml";
pub const CHECKPOINT_FORMAT: &str = "relightkit-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;
pub const TENSOR_MAGIC: &[u8; 4] = b"RLKP";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct NetworkEntry {
    kind: NetworkKind,
    file: String,
    spec: NetworkSpec,
    params: Vec<ParamEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Index {
    format: String,
    version: u32,
    stage: u8,
    epoch: usize,
    light_intensity: [f64; 3],
    brdf: BrdfConstants,
    networks: Vec<NetworkEntry>,
}

pub fn encode_tensors(tensors: &[Tensor]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(TENSOR_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_tensors(bytes: &[u8], origin: &Path) -> Result<Vec<Tensor>> {
    let bad = |msg: &str| Error::schema(origin, msg.to_string());
    let mut pos = 0;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = bytes.get(pos..pos + n).ok_or_else(|| bad("truncated tensor file"))?;
        pos += n;
        Ok(s)
    };
    if take(4)? != TENSOR_MAGIC {
        return Err(bad("bad tensor file magic"));
    }
    let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().expect("4 bytes")) as usize;
    if u32_at(take(4)?) != CHECKPOINT_VERSION as usize {
        return Err(bad("unsupported tensor file version"));
    }
    let count = u32_at(take(4)?);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let ndim = u32_at(take(4)?);
        let shape = (0..ndim).map(|_| Ok(u32_at(take(4)?))).collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let data = take(n * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        out.push(Tensor::from_vec(&shape, data)?);
    }
    if pos != bytes.len() {
        return Err(bad("trailing bytes after tensors"));
    }
    Ok(out)
}

/// Writes all three networks to `dir`, tagged with the stage and epoch that
/// produced them.
pub fn save_models(models: &TrainedModels, dir: &Path, stage: u8, epoch: usize) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut networks = Vec::new();
    for kind in NetworkKind::ALL {
        let net = models.network(kind);
        let file = format!("{}.bin", kind.name());
        let path = dir.join(&file);
        fs::write(&path, encode_tensors(net.params())).map_err(|e| Error::io(&path, e))?;
        networks.push(NetworkEntry {
            kind,
            file,
            spec: net.spec.clone(),
            params: net
                .names()
                .iter()
                .zip(net.params())
                .map(|(n, t)| ParamEntry {
                    name: n.clone(),
                    shape: t.shape().to_vec(),
                })
                .collect(),
        });
    }
    let index = Index {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        stage,
        epoch,
        light_intensity: models.light_intensity,
        brdf: models.brdf.clone(),
        networks,
    };
    let text = toml::to_string(&index).map_err(|e| Error::Config(e.to_string()))?;
    let path = dir.join(CHECKPOINT_INDEX);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Loads a model directory. A missing index or network is a configuration
/// error; unreadable or malformed files are I/O or schema errors.
pub fn load_models(dir: &Path) -> Result<TrainedModels> {
    let path = dir.join(CHECKPOINT_INDEX);
    if !path.is_file() {
        return Err(Error::Config(format!("no model weights at {}", dir.display())));
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let index: Index = toml::from_str(&text).map_err(|e| Error::schema(&path, e.to_string()))?;
    if index.format != CHECKPOINT_FORMAT || index.version != CHECKPOINT_VERSION {
        return Err(Error::schema(&path, "unsupported checkpoint format"));
    }
    let load = |kind: NetworkKind| -> Result<Network> {
        let entry = index
            .networks
            .iter()
            .find(|n| n.kind == kind)
            .ok_or_else(|| Error::Config(format!("checkpoint lacks the {kind} network")))?;
        let p = dir.join(&entry.file);
        let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
        let tensors = decode_tensors(&bytes, &p)?;
        if tensors.len() != entry.params.len()
            || tensors.iter().zip(&entry.params).any(|(t, e)| t.shape() != e.shape.as_slice())
        {
            return Err(Error::schema(&p, "tensor shapes disagree with the index"));
        }
        let names = entry.params.iter().map(|e| e.name.clone()).collect();
        Network::from_parts(entry.spec.clone(), names, tensors)
    };
    Ok(TrainedModels {
        decompose: load(NetworkKind::Decompose)?,
        shadow: load(NetworkKind::Shadow)?,
        synthesis: load(NetworkKind::Synthesis)?,
        light_intensity: index.light_intensity,
        brdf: index.brdf,
    })
}
