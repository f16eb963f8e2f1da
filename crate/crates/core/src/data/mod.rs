//! Attributed datasets: instances paired with binary attribute vectors and one-hot
//! labels, plus the procedural generators that stand in for real corpora.

mod blobs;
mod dataset;
mod glyphs;
mod io;
mod pgm;
mod spec;

pub use blobs::{blob_attribute_directions, generate_blobs};
pub use dataset::{AttributedDataset, DatasetMeta, Split};
pub use glyphs::{generate_glyphs, render_glyph, stroke_mask, BaseShape, MAX_GLYPH_ATTRIBUTES};
pub use pgm::{pgm_grid, write_pgm_grid};
pub use spec::{Generator, LabelRule, SynthSpec};

use crate::error::Result;

/// Dispatches on `spec.generator`.
pub fn generate(spec: &SynthSpec) -> Result<AttributedDataset> {
    match spec.generator {
        Generator::Blobs => generate_blobs(spec),
        Generator::Glyphs => generate_glyphs(spec),
    }
}
