use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Activation, DenseNetwork, Layer};
use crate::container::{Kind, Reader, Writer};
use crate::error::Result;
use crate::tensor::Tensor;

#[derive(Serialize, Deserialize)]
struct LayerHeader {
    input: usize,
    output: usize,
    activation: Activation,
}

#[derive(Serialize, Deserialize)]
struct NetworkHeader {
    layers: Vec<LayerHeader>,
}

impl DenseNetwork {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = NetworkHeader {
            layers: self
                .layers()
                .iter()
                .map(|l| LayerHeader { input: l.in_dim(), output: l.out_dim(), activation: l.activation() })
                .collect(),
        };
        let mut w = Writer::new(Kind::Network, &serde_json::to_string(&header).expect("header serializes"));
        for layer in self.layers() {
            w.f64s(layer.weights().data());
            w.f64s(layer.bias().data());
        }
        w.finish()
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let (mut r, header) = Reader::open(buf, Kind::Network)?;
        let header: NetworkHeader =
            serde_json::from_str(&header).map_err(|e| r.format_error(format!("bad network header: {e}")))?;
        let mut layers = Vec::with_capacity(header.layers.len());
        for (i, l) in header.layers.iter().enumerate() {
            if l.input == 0 || l.output == 0 {
                return Err(r.format_error(format!("layer {i} has a zero dimension")));
            }
            let w = r.f64s(&format!("layer {i} weights"), l.input * l.output)?;
            let b = r.f64s(&format!("layer {i} bias"), l.output)?;
            layers.push(Layer::new(Tensor::matrix(l.output, l.input, w)?, Tensor::vector(b), l.activation)?);
        }
        r.finish()?;
        DenseNetwork::new(layers)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
