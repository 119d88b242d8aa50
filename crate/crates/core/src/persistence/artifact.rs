//! Binary model files.
//!
//! ```text
//! magic     8 bytes   "TRKCAST\0"
//! version   u32 LE
//! mlen      u64 LE    manifest length in bytes
//! manifest  mlen      UTF-8 JSON {model_kind, config, arrays: [{name, shape}], seeds}
//! payload             f64 LE values of every array, in manifest order
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ensemble::{Combiner, EnsembleMethod, EnsembleModel};
use crate::error::{Error, Result};
use crate::forecast_linear::{ArimaxModel, ArimaxOrder, InitMethod, LinearModel, RefineStatus};
use crate::forecast_neural::{Arch, NetworkParams};
use crate::model::{ForecastModel, ModelKind};

pub const MAGIC: &[u8; 8] = b"TRKCAST\0";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayMeta {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl NamedArray {
    fn new(name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self {
            name: name.into(),
            shape,
            data,
        }
    }

    fn vector(name: impl Into<String>, data: Vec<f64>) -> Self {
        Self::new(name, vec![data.len()], data)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    model_kind: ModelKind,
    config: Value,
    arrays: Vec<ArrayMeta>,
    seeds: Vec<u64>,
}

/// A model split into a JSON-describable configuration and flat float arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub model_kind: ModelKind,
    pub config: Value,
    pub arrays: Vec<NamedArray>,
    pub seeds: Vec<u64>,
}

fn integrity(msg: impl Into<String>) -> Error {
    Error::Integrity(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct NetShape {
    arch: Arch,
    n: usize,
    l: usize,
    hidden: usize,
    kernels: usize,
    kernel_width: usize,
}

impl NetShape {
    fn of(p: &NetworkParams) -> Self {
        Self {
            arch: p.arch,
            n: p.n,
            l: p.l,
            hidden: p.hidden,
            kernels: p.kernels,
            kernel_width: p.kernel_width,
        }
    }

    fn empty_params(self) -> NetworkParams {
        let mut p = NetworkParams {
            arch: self.arch,
            n: self.n,
            l: self.l,
            hidden: self.hidden,
            kernels: self.kernels,
            kernel_width: self.kernel_width,
            values: Vec::new(),
        };
        p.values = vec![0.0; p.layout().head_b + 1];
        p
    }
}

fn network_arrays(prefix: &str, p: &NetworkParams) -> Vec<NamedArray> {
    let mut offset = 0;
    p.shapes()
        .into_iter()
        .map(|(name, shape)| {
            let len: usize = shape.iter().product();
            let data = p.values[offset..offset + len].to_vec();
            offset += len;
            NamedArray::new(format!("{prefix}{name}"), shape, data)
        })
        .collect()
}

impl ModelArtifact {
    pub fn from_model(model: &ForecastModel, seeds: &[u64]) -> Self {
        let (config, arrays) = match model {
            ForecastModel::Linear(m) => (
                json!({ "features": m.features, "ridge_fallback": m.ridge_fallback }),
                vec![
                    NamedArray::vector("weights", m.weights.clone()),
                    NamedArray::vector("bias", vec![m.bias]),
                ],
            ),
            ForecastModel::Arimax(m) => (
                json!({
                    "order": m.order,
                    "target_feature": m.target_feature,
                    "exog_features": m.exog_features,
                    "init": m.init,
                    "ridge_fallback": m.ridge_fallback,
                    "refine_steps": m.refine_steps,
                    "refine_status": m.refine_status,
                    "warning": m.warning,
                }),
                vec![
                    NamedArray::vector("constant", vec![m.constant]),
                    NamedArray::vector("phi", m.phi.clone()),
                    NamedArray::vector("theta", m.theta.clone()),
                    NamedArray::vector("beta", m.beta.clone()),
                    NamedArray::vector("css", vec![m.stage1_css, m.css]),
                ],
            ),
            ForecastModel::Network(p) => (json!(NetShape::of(p)), network_arrays("", p)),
            ForecastModel::Ensemble(e) => {
                let mut arrays = Vec::new();
                for (i, p) in e.members.iter().enumerate() {
                    arrays.extend(network_arrays(&format!("member{i}/"), p));
                }
                let combiner = match &e.combiner {
                    Combiner::Mean => "mean",
                    Combiner::Stacker { weights, bias } => {
                        arrays.push(NamedArray::vector("stacker_weights", weights.clone()));
                        arrays.push(NamedArray::vector("stacker_bias", vec![*bias]));
                        "stacker"
                    }
                };
                arrays.push(NamedArray::vector(
                    "boost_threshold",
                    e.boost_threshold.into_iter().collect(),
                ));
                let members: Vec<NetShape> = e.members.iter().map(NetShape::of).collect();
                (
                    json!({ "method": e.method, "combiner": combiner, "members": members }),
                    arrays,
                )
            }
        };
        Self {
            model_kind: model.kind(),
            config,
            arrays,
            seeds: seeds.to_vec(),
        }
    }

    fn take(&self, name: &str, shape: Option<&[usize]>) -> Result<&[f64]> {
        let a = self
            .arrays
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| integrity(format!("array `{name}` missing")))?;
        if let Some(shape) = shape {
            if a.shape != shape {
                return Err(integrity(format!(
                    "array `{name}` has shape {:?}, expected {shape:?}",
                    a.shape
                )));
            }
        }
        Ok(&a.data)
    }

    fn config_field<T: for<'de> Deserialize<'de>>(&self, key: &str) -> Result<T> {
        let v = self.config.get(key).cloned().unwrap_or(Value::Null);
        serde_json::from_value(v).map_err(|e| integrity(format!("manifest field `{key}`: {e}")))
    }

    fn network(&self, prefix: &str, shape: NetShape) -> Result<NetworkParams> {
        let mut p = shape.empty_params();
        let mut offset = 0;
        for (name, dims) in p.shapes() {
            let data = self.take(&format!("{prefix}{name}"), Some(&dims))?;
            p.values[offset..offset + data.len()].copy_from_slice(data);
            offset += data.len();
        }
        Ok(p)
    }

    pub fn into_model(&self) -> Result<ForecastModel> {
        Ok(match self.model_kind {
            ModelKind::Linear => {
                let features: Vec<usize> = self.config_field("features")?;
                let k = features.len();
                ForecastModel::Linear(LinearModel {
                    weights: self.take("weights", Some(&[k]))?.to_vec(),
                    bias: self.take("bias", Some(&[1]))?[0],
                    features,
                    ridge_fallback: self.config_field("ridge_fallback")?,
                })
            }
            ModelKind::Arimax => {
                let order: ArimaxOrder = self.config_field("order")?;
                let exog_features: Vec<usize> = self.config_field("exog_features")?;
                let css = self.take("css", Some(&[2]))?;
                ForecastModel::Arimax(ArimaxModel {
                    order,
                    constant: self.take("constant", Some(&[1]))?[0],
                    phi: self.take("phi", Some(&[order.p]))?.to_vec(),
                    theta: self.take("theta", Some(&[order.q]))?.to_vec(),
                    beta: self.take("beta", Some(&[exog_features.len()]))?.to_vec(),
                    target_feature: self.config_field("target_feature")?,
                    exog_features,
                    init: self.config_field::<InitMethod>("init")?,
                    ridge_fallback: self.config_field("ridge_fallback")?,
                    stage1_css: css[0],
                    css: css[1],
                    refine_steps: self.config_field("refine_steps")?,
                    refine_status: self.config_field::<RefineStatus>("refine_status")?,
                    warning: self.config_field("warning")?,
                })
            }
            ModelKind::Network => {
                let shape: NetShape = serde_json::from_value(self.config.clone())
                    .map_err(|e| integrity(format!("network manifest: {e}")))?;
                ForecastModel::Network(self.network("", shape)?)
            }
            ModelKind::Ensemble => {
                let shapes: Vec<NetShape> = self.config_field("members")?;
                if shapes.is_empty() {
                    return Err(integrity("ensemble without members"));
                }
                let members = shapes
                    .iter()
                    .enumerate()
                    .map(|(i, s)| self.network(&format!("member{i}/"), *s))
                    .collect::<Result<Vec<_>>>()?;
                let combiner = match self.config_field::<String>("combiner")?.as_str() {
                    "mean" => Combiner::Mean,
                    "stacker" => Combiner::Stacker {
                        weights: self.take("stacker_weights", Some(&[members.len()]))?.to_vec(),
                        bias: self.take("stacker_bias", Some(&[1]))?[0],
                    },
                    other => return Err(integrity(format!("unknown combiner `{other}`"))),
                };
                let threshold = self.take("boost_threshold", None)?;
                ForecastModel::Ensemble(EnsembleModel {
                    method: self.config_field::<EnsembleMethod>("method")?,
                    members,
                    combiner,
                    boost_threshold: threshold.first().copied(),
                })
            }
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let manifest = Manifest {
            model_kind: self.model_kind,
            config: self.config.clone(),
            arrays: self
                .arrays
                .iter()
                .map(|a| ArrayMeta {
                    name: a.name.clone(),
                    shape: a.shape.clone(),
                })
                .collect(),
            seeds: self.seeds.clone(),
        };
        let manifest = serde_json::to_vec(&manifest)
            .map_err(|e| Error::Format(format!("cannot encode manifest: {e}")))?;
        let payload: usize = self.arrays.iter().map(|a| a.data.len()).sum();
        let mut out = Vec::with_capacity(HEADER_LEN + manifest.len() + 8 * payload);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(manifest.len() as u64).to_le_bytes());
        out.extend_from_slice(&manifest);
        for a in &self.arrays {
            for v in &a.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(integrity(format!("file is {} bytes, shorter than the header", bytes.len())));
        }
        if &bytes[..8] != MAGIC {
            return Err(integrity("not a model file (bad magic)"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        let mlen = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
        let mend = usize::try_from(mlen)
            .ok()
            .and_then(|m| m.checked_add(HEADER_LEN))
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| integrity("manifest extends past end of file"))?;
        let manifest: Manifest = serde_json::from_slice(&bytes[HEADER_LEN..mend])
            .map_err(|e| integrity(format!("unreadable manifest: {e}")))?;
        let values: usize = manifest
            .arrays
            .iter()
            .map(|a| a.shape.iter().product::<usize>())
            .sum();
        let expected = values.checked_mul(8).and_then(|p| p.checked_add(mend));
        if expected != Some(bytes.len()) {
            return Err(integrity(format!(
                "payload holds {} bytes but the manifest describes {values} values",
                bytes.len() - mend
            )));
        }
        let mut chunks = bytes[mend..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let arrays = manifest
            .arrays
            .into_iter()
            .map(|m| {
                let len = m.shape.iter().product();
                NamedArray {
                    data: chunks.by_ref().take(len).collect(),
                    name: m.name,
                    shape: m.shape,
                }
            })
            .collect();
        Ok(Self {
            model_kind: manifest.model_kind,
            config: manifest.config,
            arrays,
            seeds: manifest.seeds,
        })
    }
}

pub fn write_artifact(artifact: &ModelArtifact, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, artifact.to_bytes()?).map_err(|e| Error::io(path, e))
}

pub fn read_artifact(path: impl AsRef<Path>) -> Result<ModelArtifact> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    ModelArtifact::from_bytes(&bytes)
}

/// Save `model` with the seeds it was created from.
pub fn save_model(model: &ForecastModel, seeds: &[u64], path: impl AsRef<Path>) -> Result<()> {
    write_artifact(&ModelArtifact::from_model(model, seeds), path)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ForecastModel> {
    read_artifact(path)?.into_model()
}
