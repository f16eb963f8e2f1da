use serde::{Deserialize, Serialize};

use super::spec::SynthSpec;
use crate::error::{config_err, dim_err, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub(crate) fn code(self) -> u8 {
        match self {
            Split::Train => 0,
            Split::Dev => 1,
            Split::Test => 2,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => Split::Train,
            1 => Split::Dev,
            2 => Split::Test,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    /// Generator settings, when the dataset was produced procedurally.
    pub spec: Option<SynthSpec>,
    pub attribute_names: Vec<String>,
    /// Bounds every instance value lies in, if any (pixel data lives in `[0, 1]`).
    pub value_range: Option<(f64, f64)>,
    pub split_fractions: (f64, f64, f64),
}

/// Instances `[n × d]` with binary attributes `[n × t]`, one-hot labels `[n × C]`, a
/// split assignment and a provenance flag per row.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributedDataset {
    pub(crate) instances: Tensor,
    pub(crate) attributes: Tensor,
    pub(crate) labels: Tensor,
    pub(crate) splits: Vec<Split>,
    pub(crate) synthetic: Vec<bool>,
    pub meta: DatasetMeta,
}

impl AttributedDataset {
    pub fn new(
        instances: Tensor,
        attributes: Tensor,
        labels: Tensor,
        splits: Vec<Split>,
        meta: DatasetMeta,
    ) -> Result<Self> {
        let n = splits.len();
        let synthetic = vec![false; n];
        let ds = Self { instances, attributes, labels, splits, synthetic, meta };
        ds.validate()?;
        Ok(ds)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let n = self.splits.len();
        if n == 0 {
            return Err(config_err("dataset must hold at least one row"));
        }
        for (name, t) in [("instances", &self.instances), ("attributes", &self.attributes), ("labels", &self.labels)] {
            if t.shape().len() != 2 || t.rows() != n {
                return Err(dim_err(format!("{name} must be a matrix with {n} rows, got {:?}", t.shape())));
            }
        }
        if self.synthetic.len() != n {
            return Err(dim_err("provenance flags do not cover every row"));
        }
        if self.attributes.data().iter().any(|&a| a != 0.0 && a != 1.0) {
            return Err(config_err("attribute entries must be 0 or 1"));
        }
        for r in 0..n {
            let row = self.labels.row(r);
            let ones = row.iter().filter(|&&v| v == 1.0).count();
            let zeros = row.iter().filter(|&&v| v == 0.0).count();
            if ones != 1 || ones + zeros != row.len() {
                return Err(config_err(format!("label row {r} is not one-hot")));
            }
        }
        if !self.meta.attribute_names.is_empty() && self.meta.attribute_names.len() != self.attr_dim() {
            return Err(dim_err("attribute names do not match the attribute count"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.splits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splits.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.instances.row_len()
    }

    pub fn attr_dim(&self) -> usize {
        self.attributes.row_len()
    }

    pub fn classes(&self) -> usize {
        self.labels.row_len()
    }

    pub fn instances(&self) -> &Tensor {
        &self.instances
    }

    pub fn attributes(&self) -> &Tensor {
        &self.attributes
    }

    pub fn labels(&self) -> &Tensor {
        &self.labels
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    pub fn synthetic(&self) -> &[bool] {
        &self.synthetic
    }

    pub fn instance(&self, i: usize) -> &[f64] {
        self.instances.row(i)
    }

    pub fn attribute_row(&self, i: usize) -> &[f64] {
        self.attributes.row(i)
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels.argmax_row(i)
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.splits[i] == split).collect()
    }

    pub fn attribute_names(&self) -> Vec<String> {
        if self.meta.attribute_names.is_empty() {
            (0..self.attr_dim()).map(|j| format!("attr{j}")).collect()
        } else {
            self.meta.attribute_names.clone()
        }
    }

    /// Appends rows flagged as synthetic, all assigned to `split`.
    pub fn append_synthetic(
        &mut self,
        instances: &[Vec<f64>],
        attributes: &[Vec<f64>],
        labels: &[usize],
        split: Split,
    ) -> Result<()> {
        if instances.len() != attributes.len() || instances.len() != labels.len() {
            return Err(dim_err("augmentation rows disagree in count"));
        }
        let (d, t, c) = (self.dim(), self.attr_dim(), self.classes());
        let mut xs = std::mem::replace(&mut self.instances, Tensor::zeros(vec![1])).into_data();
        let mut at = std::mem::replace(&mut self.attributes, Tensor::zeros(vec![1])).into_data();
        let mut ls = std::mem::replace(&mut self.labels, Tensor::zeros(vec![1])).into_data();
        for ((x, a), &y) in instances.iter().zip(attributes).zip(labels) {
            if x.len() != d || a.len() != t || y >= c {
                return Err(dim_err("augmentation row has the wrong shape"));
            }
            xs.extend_from_slice(x);
            at.extend(a.iter().map(|&v| if v > 0.5 { 1.0 } else { 0.0 }));
            ls.extend((0..c).map(|k| if k == y { 1.0 } else { 0.0 }));
            self.splits.push(split);
            self.synthetic.push(true);
        }
        let n = self.splits.len();
        self.instances = Tensor::matrix(n, d, xs)?;
        self.attributes = Tensor::matrix(n, t, at)?;
        self.labels = Tensor::matrix(n, c, ls)?;
        Ok(())
    }

    /// The dataset with every synthetic row removed.
    pub fn without_synthetic(&self) -> Result<Self> {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| !self.synthetic[i]).collect();
        self.subset(&keep)
    }

    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let ds = Self {
            instances: self.instances.select_rows(rows)?,
            attributes: self.attributes.select_rows(rows)?,
            labels: self.labels.select_rows(rows)?,
            splits: rows.iter().map(|&r| self.splits[r]).collect(),
            synthetic: rows.iter().map(|&r| self.synthetic[r]).collect(),
            meta: self.meta.clone(),
        };
        ds.validate()?;
        Ok(ds)
    }
}
