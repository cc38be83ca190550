//! Model checkpoints: a flat binary parameter container plus a JSON sidecar
//! describing the architecture.
//!
//! Container layout, all integers little-endian: magic `INFN`, version
//! `u32`, tensor count `u32`; then per tensor: name length `u16`, name
//! bytes, rank `u8`, dims as `u32`, element type tag `u8` (0 = f32,
//! 1 = f64), raw little-endian elements.
//!
//! The sidecar lives at `<path>.json` and holds the keys `variant`, `C`,
//! `depths`, `r`, `kind`, `sigma_or_c_d`, `mlp_ratio`, `num_classes` —
//! enough to rebuild the network skeleton before the container fills in
//! the weights.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use infinet_core::interaction::InteractionKind;
use infinet_core::layers::ParamStore;
use infinet_core::model::{build_network, ModelConfig, Network, Variant};
use infinet_core::scalar::Scalar;
use infinet_core::tensor::Tensor;

use crate::error::{AppError, Result};

pub const MAGIC: [u8; 4] = *b"INFN";
pub const VERSION: u32 = 1;

/// Sidecar path for a container path: the container name plus `.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".json");
    PathBuf::from(name)
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    variant: String,
    #[serde(rename = "C")]
    c: usize,
    depths: Vec<usize>,
    r: usize,
    kind: String,
    sigma_or_c_d: Vec<f64>,
    mlp_ratio: usize,
    num_classes: usize,
}

fn kind_to_fields(kind: InteractionKind) -> (String, Vec<f64>) {
    match kind {
        InteractionKind::Add | InteractionKind::Hadamard => (kind.name().into(), Vec::new()),
        InteractionKind::Polynomial { c, d } => (kind.name().into(), vec![c, f64::from(d)]),
        InteractionKind::Rbf { sigma } => (kind.name().into(), vec![sigma]),
    }
}

fn kind_from_fields(name: &str, params: &[f64]) -> Result<InteractionKind> {
    let kind = match (name, params) {
        ("add", []) => InteractionKind::Add,
        ("hadamard", []) => InteractionKind::Hadamard,
        (n, [c, d]) if n.starts_with("poly") => InteractionKind::Polynomial {
            c: *c,
            d: *d as u32,
        },
        ("rbf", [sigma]) => InteractionKind::Rbf { sigma: *sigma },
        _ => {
            return Err(AppError::Format(format!(
                "unrecognized interaction kind {name:?} with parameters {params:?}"
            )))
        }
    };
    kind.validate()?;
    Ok(kind)
}

fn config_to_sidecar(config: &ModelConfig) -> Sidecar {
    let (kind, sigma_or_c_d) = kind_to_fields(config.kind);
    Sidecar {
        variant: config.variant.clone(),
        c: config.stage_channels[0],
        depths: config.stage_depths.clone(),
        r: config.r,
        kind,
        sigma_or_c_d,
        mlp_ratio: config.mlp_ratio,
        num_classes: config.num_classes,
    }
}

fn config_from_sidecar(sidecar: &Sidecar) -> Result<ModelConfig> {
    // Named hierarchical variants widen as [C,2C,4C,8C]; anything else
    // (the isotropic demo network) keeps a constant width per stage.
    let stage_channels = if Variant::from_name(&sidecar.variant).is_some() {
        vec![sidecar.c, 2 * sidecar.c, 4 * sidecar.c, 8 * sidecar.c]
    } else {
        vec![sidecar.c; sidecar.depths.len()]
    };
    let config = ModelConfig {
        variant: sidecar.variant.clone(),
        stage_channels,
        stage_depths: sidecar.depths.clone(),
        num_classes: sidecar.num_classes,
        r: sidecar.r,
        kind: kind_from_fields(&sidecar.kind, &sidecar.sigma_or_c_d)?,
        mlp_ratio: sidecar.mlp_ratio,
    };
    config.validate()?;
    Ok(config)
}

fn push_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

/// Serializes named tensors into the container layout.
pub fn encode_container<T: Scalar>(entries: &[(&str, &Tensor<T>)]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    push_u32(&mut out, VERSION);
    let count = u32::try_from(entries.len())
        .map_err(|_| AppError::Format(format!("too many tensors: {}", entries.len())))?;
    push_u32(&mut out, count);
    for (name, tensor) in entries {
        let name_bytes = name.as_bytes();
        let name_len = u16::try_from(name_bytes.len())
            .map_err(|_| AppError::Format(format!("tensor name too long: {name}")))?;
        push_u16(&mut out, name_len);
        out.extend_from_slice(name_bytes);
        let rank = u8::try_from(tensor.rank())
            .map_err(|_| AppError::Format(format!("rank too large for {name}")))?;
        out.push(rank);
        for &dim in tensor.shape() {
            let dim = u32::try_from(dim)
                .map_err(|_| AppError::Format(format!("dimension too large in {name}")))?;
            push_u32(&mut out, dim);
        }
        out.push(T::TYPE_TAG);
        for &v in tensor.data() {
            out.extend_from_slice(&v.to_le_byte_vec());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let slice = &self.bytes[self.at..end];
                self.at = end;
                Ok(slice)
            }
            None => Err(AppError::Format(String::from(
                "container truncated mid-record",
            ))),
        }
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Parses a container into named tensors, converting stored elements to `T`
/// (f32 values widen exactly; f64 values narrow when `T` is f32).
pub fn decode_container<T: Scalar>(bytes: &[u8]) -> Result<Vec<(String, Tensor<T>)>> {
    let mut cur = Cursor { bytes, at: 0 };
    if cur.take(4)? != MAGIC {
        return Err(AppError::Format(String::from("not a parameter container")));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(AppError::Format(format!(
            "unsupported container version {version} (expected {VERSION})"
        )));
    }
    let count = cur.u32()? as usize;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = cur.u16()? as usize;
        let name = core::str::from_utf8(cur.take(name_len)?)
            .map_err(|_| AppError::Format(String::from("tensor name is not UTF-8")))?
            .to_owned();
        let rank = cur.u8()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(cur.u32()? as usize);
        }
        let len: usize = shape.iter().product();
        let tag = cur.u8()?;
        let width = match tag {
            0 => 4,
            1 => 8,
            other => {
                return Err(AppError::Format(format!(
                    "unknown element tag {other} for tensor {name}"
                )))
            }
        };
        let raw = cur.take(len * width)?;
        let data: Vec<T> = raw
            .chunks_exact(width)
            .map(|chunk| {
                let v = match tag {
                    0 => f64::from(f32::from_le_byte_slice(chunk)),
                    _ => f64::from_le_byte_slice(chunk),
                };
                T::cast(v)
            })
            .collect();
        entries.push((name, Tensor::from_vec(shape, data)?));
    }
    if cur.at != bytes.len() {
        return Err(AppError::Format(format!(
            "{} trailing bytes after the last tensor",
            bytes.len() - cur.at
        )));
    }
    Ok(entries)
}

/// Writes the parameter container at `path` and the config sidecar at
/// `<path>.json`.
pub fn save_checkpoint<T: Scalar>(
    path: &Path,
    store: &ParamStore<T>,
    config: &ModelConfig,
) -> Result<()> {
    let entries: Vec<(&str, &Tensor<T>)> = store
        .ids()
        .map(|id| (store.name(id), store.get(id)))
        .collect();
    fs::write(path, encode_container(&entries)?).map_err(|e| AppError::io(path, e))?;
    let sidecar = serde_json::to_string_pretty(&config_to_sidecar(config))
        .expect("sidecar serialization cannot fail");
    let sc_path = sidecar_path(path);
    fs::write(&sc_path, sidecar + "\n").map_err(|e| AppError::io(&sc_path, e))
}

/// Rebuilds the network described by the sidecar and fills its parameters
/// from the container. Freshly initialized weights are fully overwritten;
/// names, shapes, and tensor count must all match the rebuilt skeleton.
pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<(Network, ParamStore<T>, ModelConfig)> {
    let sc_path = sidecar_path(path);
    let sidecar_text = fs::read_to_string(&sc_path).map_err(|e| AppError::io(&sc_path, e))?;
    let sidecar: Sidecar = serde_json::from_str(&sidecar_text)
        .map_err(|e| AppError::Format(format!("{}: {e}", sc_path.display())))?;
    let config = config_from_sidecar(&sidecar)?;

    let mut store = ParamStore::<T>::new();
    let net = build_network(&config, &mut store, 0)?;

    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    let entries = decode_container::<T>(&bytes)?;
    if entries.len() != store.len() {
        return Err(AppError::Format(format!(
            "container holds {} tensors but the architecture needs {}",
            entries.len(),
            store.len()
        )));
    }
    for (name, tensor) in entries {
        let id = store.by_name(&name).ok_or_else(|| {
            AppError::Format(format!("container tensor {name} is not part of the model"))
        })?;
        if store.get(id).shape() != tensor.shape() {
            return Err(AppError::Format(format!(
                "tensor {name} has shape {:?} but the model expects {:?}",
                tensor.shape(),
                store.get(id).shape()
            )));
        }
        *store.get_mut(id) = tensor;
    }
    Ok((net, store, config))
}
