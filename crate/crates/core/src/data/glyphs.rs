use rand::Rng;
use rand_distr::StandardNormal;

use super::blobs::{assign_splits, one_hot_rows, sample_attributes};
use super::dataset::{AttributedDataset, DatasetMeta};
use super::spec::{Generator, SynthSpec};
use crate::error::{config_err, Result};
use crate::rng::{derive_seed, seeded};
use crate::tensor::Tensor;

const STROKES: [&str; 13] = [
    "top_bar",
    "frame",
    "dot",
    "diagonal",
    "left_bar",
    "anti_diagonal",
    "bottom_bar",
    "right_bar",
    "corner_tl",
    "corner_br",
    "corner_tr",
    "middle_bar",
    "center_column",
];

pub const MAX_GLYPH_ATTRIBUTES: usize = STROKES.len();

const STROKE_INTENSITY: f64 = 1.0;
const BASE_INTENSITY: f64 = 0.5;

/// Pixel mask (row-major, `side × side`) of the stroke drawn by attribute `j`.
pub fn stroke_mask(j: usize, side: usize) -> Vec<bool> {
    let s = side;
    let q = s / 4;
    let tq = (3 * s) / 4;
    let h = s / 2;
    let mut mask = vec![false; s * s];
    for r in 0..s {
        for c in 0..s {
            mask[r * s + c] = match j {
                0 => r == q,
                1 => r == 0 || c == 0 || r == s - 1 || c == s - 1,
                2 => (tq..(tq + 2).min(s)).contains(&r) && (tq..(tq + 2).min(s)).contains(&c),
                3 => r == c,
                4 => c == q,
                5 => r + c == s - 1,
                6 => r == tq,
                7 => c == tq,
                8 => r < 2 && c < 2,
                9 => r + 2 >= s && c + 2 >= s,
                10 => r < 2 && c + 2 >= s,
                11 => r == h,
                12 => c == h,
                _ => false,
            };
        }
    }
    mask
}

/// Per-instance disc drawn under the strokes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseShape {
    pub cy: f64,
    pub cx: f64,
    pub radius: f64,
}

/// Noise-free raster for one instance: base disc, then every active stroke on top.
pub fn render_glyph(side: usize, base: &BaseShape, masks: &[Vec<bool>], attributes: &[f64]) -> Vec<f64> {
    let mut img = vec![0.0; side * side];
    for r in 0..side {
        for c in 0..side {
            let (dy, dx) = (r as f64 - base.cy, c as f64 - base.cx);
            if dy * dy + dx * dx <= base.radius * base.radius {
                img[r * side + c] = BASE_INTENSITY;
            }
        }
    }
    for (mask, &bit) in masks.iter().zip(attributes) {
        if bit > 0.5 {
            for (p, &m) in img.iter_mut().zip(mask) {
                if m {
                    *p = STROKE_INTENSITY;
                }
            }
        }
    }
    img
}

/// Square grayscale rasters. Every instance carries a jittered base disc at half
/// intensity; attribute `j` toggles stroke `j` at full intensity. Pixels are clamped to
/// `[0, 1]` after Gaussian noise.
pub fn generate_glyphs(spec: &SynthSpec) -> Result<AttributedDataset> {
    if spec.generator != Generator::Glyphs {
        return Err(config_err("generate_glyphs called with a non-glyph spec"));
    }
    spec.validate()?;
    let side =
        spec.raster_side().ok_or_else(|| config_err(format!("glyph dimension {} is not a perfect square", spec.d)))?;
    if side < 6 {
        return Err(config_err("glyph rasters must be at least 6 pixels wide"));
    }
    if spec.t > MAX_GLYPH_ATTRIBUTES {
        return Err(config_err(format!("glyphs support at most {MAX_GLYPH_ATTRIBUTES} attributes")));
    }
    let masks: Vec<Vec<bool>> = (0..spec.t).map(|j| stroke_mask(j, side)).collect();
    let mut rng = seeded(derive_seed(spec.seed, 2));

    let mut xs = Vec::with_capacity(spec.n * spec.d);
    let mut attrs = Vec::with_capacity(spec.n * spec.t);
    let mut labels = Vec::with_capacity(spec.n);
    let centre = (side as f64 - 1.0) / 2.0;
    for _ in 0..spec.n {
        let a = sample_attributes(spec, &mut rng);
        let jitter = spec.style * side as f64 / 12.0;
        let base = BaseShape {
            cy: centre + jitter * rng.random_range(-1.0..=1.0),
            cx: centre + jitter * rng.random_range(-1.0..=1.0),
            radius: side as f64 / 6.0 * (1.0 + 0.5 * spec.style * rng.random_range(0.0..=1.0)),
        };
        let mut img = render_glyph(side, &base, &masks, &a);
        if spec.noise > 0.0 {
            for p in img.iter_mut() {
                let e: f64 = rng.sample(StandardNormal);
                *p = (*p + spec.noise * e).clamp(0.0, 1.0);
            }
        }
        labels.push(spec.label_of(&a));
        xs.extend(img);
        attrs.extend(a);
    }

    let (train, dev, test) = spec.split_counts();
    let n = spec.n as f64;
    AttributedDataset::new(
        Tensor::matrix(spec.n, spec.d, xs)?,
        Tensor::matrix(spec.n, spec.t, attrs)?,
        Tensor::matrix(spec.n, spec.classes, one_hot_rows(&labels, spec.classes))?,
        assign_splits(spec),
        DatasetMeta {
            spec: Some(spec.clone()),
            attribute_names: STROKES[..spec.t].iter().map(|s| s.to_string()).collect(),
            value_range: Some((0.0, 1.0)),
            split_fractions: (train as f64 / n, dev as f64 / n, test as f64 / n),
        },
    )
}
