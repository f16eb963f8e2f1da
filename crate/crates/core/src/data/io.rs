use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{AttributedDataset, DatasetMeta, Split};
use crate::container::{Kind, Reader, Writer};
use crate::error::Result;
use crate::tensor::Tensor;

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    n: usize,
    d: usize,
    t: usize,
    classes: usize,
    meta: DatasetMeta,
}

impl AttributedDataset {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = DatasetHeader {
            n: self.len(),
            d: self.dim(),
            t: self.attr_dim(),
            classes: self.classes(),
            meta: self.meta.clone(),
        };
        let mut w = Writer::new(Kind::Dataset, &serde_json::to_string(&header).expect("header serializes"));
        w.f64s(self.instances.data());
        w.f64s(self.attributes.data());
        w.f64s(self.labels.data());
        w.bytes(&self.splits.iter().map(|s| s.code()).collect::<Vec<_>>());
        w.bytes(&self.synthetic.iter().map(|&s| u8::from(s)).collect::<Vec<_>>());
        w.finish()
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let (mut r, header) = Reader::open(buf, Kind::Dataset)?;
        let h: DatasetHeader =
            serde_json::from_str(&header).map_err(|e| r.format_error(format!("bad dataset header: {e}")))?;
        if h.n == 0 || h.d == 0 || h.t == 0 || h.classes == 0 {
            return Err(r.format_error("dataset header declares an empty dimension"));
        }
        let x = r.f64s("instances", h.n * h.d)?;
        let a = r.f64s("attributes", h.n * h.t)?;
        let y = r.f64s("labels", h.n * h.classes)?;
        let split_at = r.offset();
        let splits = r
            .bytes("splits", h.n)?
            .into_iter()
            .map(|c| Split::from_code(c).ok_or(c))
            .collect::<std::result::Result<Vec<_>, u8>>()
            .map_err(|c| crate::error::Error::Format {
                offset: split_at,
                message: format!("unknown split code {c}"),
            })?;
        let synthetic = r.bytes("provenance", h.n)?.into_iter().map(|b| b != 0).collect();
        r.finish()?;
        let ds = AttributedDataset {
            instances: Tensor::matrix(h.n, h.d, x)?,
            attributes: Tensor::matrix(h.n, h.t, a)?,
            labels: Tensor::matrix(h.n, h.classes, y)?,
            splits,
            synthetic,
            meta: h.meta,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
