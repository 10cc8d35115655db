// SPDX-License-Identifier: Apache-2.0

//! Network checkpoints in the binary container.
//!
//! The metadata records the layer structure; the payload holds every tensor
//! as little-endian f64 in layer order (weights, bias, centroid blocks).

use std::path::Path;

use lutdla_core::io::{f64_bytes, f64_from_bytes, Container, ContainerKind, DType};
use lutdla_core::{Codebook, Matrix, VqConfig, VqError};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::net::{Layer, LossHead, TinyNet};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum LayerSpec {
    Dense { k: usize, n: usize },
    Lut { k: usize, n: usize, vq: VqConfig },
    Relu,
    Tanh,
}

#[derive(Debug, Serialize, Deserialize)]
struct NetSpec {
    head: LossHead,
    layers: Vec<LayerSpec>,
}

fn corrupt(msg: impl Into<String>) -> VqError {
    VqError::Corruption(msg.into())
}

pub fn to_container(net: &TinyNet) -> Result<Container> {
    net.validate()?;
    let mut values = Vec::new();
    let mut layers = Vec::new();
    for layer in &net.layers {
        layers.push(match layer {
            Layer::Dense { w, b } => {
                values.extend_from_slice(w.as_slice());
                values.extend_from_slice(b);
                LayerSpec::Dense { k: w.rows(), n: w.cols() }
            }
            Layer::LutLinear { w, b, codebook, cfg } => {
                values.extend_from_slice(w.as_slice());
                values.extend_from_slice(b);
                for z in codebook.blocks() {
                    values.extend_from_slice(z.as_slice());
                }
                LayerSpec::Lut { k: w.rows(), n: w.cols(), vq: *cfg }
            }
            Layer::Relu => LayerSpec::Relu,
            Layer::Tanh => LayerSpec::Tanh,
        });
    }
    let meta = serde_json::to_value(NetSpec { head: net.head, layers }).map_err(|e| VqError::Format(e.to_string()))?;
    Ok(Container {
        kind: ContainerKind::Checkpoint,
        dtype: DType::F64,
        dims: vec![values.len() as u64],
        meta,
        payload: f64_bytes(&values),
    })
}

pub fn from_container(c: &Container) -> Result<TinyNet> {
    if c.kind != ContainerKind::Checkpoint || c.dtype != DType::F64 {
        return Err(VqError::Format("not a checkpoint container".into()).into());
    }
    let spec: NetSpec = serde_json::from_value(c.meta.clone()).map_err(|e| VqError::Format(e.to_string()))?;
    let values = f64_from_bytes(&c.payload)?;
    let mut cursor = 0usize;
    let mut take = |len: usize| -> std::result::Result<Vec<f64>, VqError> {
        let end = cursor.checked_add(len).filter(|&e| e <= values.len()).ok_or_else(|| corrupt("checkpoint payload too short"))?;
        let out = values[cursor..end].to_vec();
        cursor = end;
        Ok(out)
    };
    let mut layers = Vec::new();
    for l in spec.layers {
        layers.push(match l {
            LayerSpec::Dense { k, n } => {
                let w = Matrix::from_vec(k, n, take(k * n)?)?;
                Layer::Dense { w, b: take(n)? }
            }
            LayerSpec::Lut { k, n, vq } => {
                vq.validate()?;
                let w = Matrix::from_vec(k, n, take(k * n)?)?;
                let b = take(n)?;
                let blocks = (0..vq.subspaces(k))
                    .map(|_| Matrix::from_vec(vq.c, vq.v, take(vq.c * vq.v)?))
                    .collect::<std::result::Result<Vec<_>, VqError>>()?;
                Layer::LutLinear { w, b, codebook: Codebook::new(k, vq.v, blocks)?, cfg: vq }
            }
            LayerSpec::Relu => Layer::Relu,
            LayerSpec::Tanh => Layer::Tanh,
        });
    }
    if cursor != values.len() {
        return Err(corrupt("trailing values in checkpoint payload").into());
    }
    let net = TinyNet { layers, head: spec.head };
    net.validate()?;
    Ok(net)
}

pub fn save(net: &TinyNet, path: impl AsRef<Path>) -> Result<()> {
    Ok(to_container(net)?.save(path)?)
}

pub fn load(path: impl AsRef<Path>) -> Result<TinyNet> {
    from_container(&Container::load(path)?)
}
