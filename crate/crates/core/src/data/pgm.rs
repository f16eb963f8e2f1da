use std::path::Path;

use crate::error::{config_err, dim_err, Result};

/// Binary (P5) graymap of square rasters tiled into `columns` columns with a one-pixel
/// black gutter. Values are clamped to `[0, 1]`.
pub fn pgm_grid(images: &[Vec<f64>], side: usize, columns: usize) -> Result<Vec<u8>> {
    if images.is_empty() || side == 0 || columns == 0 {
        return Err(config_err("graymap grid needs images, a side and a column count"));
    }
    if let Some(bad) = images.iter().find(|im| im.len() != side * side) {
        return Err(dim_err(format!("raster of {} values is not {side}x{side}", bad.len())));
    }
    let columns = columns.min(images.len());
    let rows = images.len().div_ceil(columns);
    let width = columns * (side + 1) - 1;
    let height = rows * (side + 1) - 1;
    let mut pixels = vec![0u8; width * height];
    for (n, im) in images.iter().enumerate() {
        let (oy, ox) = ((n / columns) * (side + 1), (n % columns) * (side + 1));
        for y in 0..side {
            for x in 0..side {
                let v = im[y * side + x].clamp(0.0, 1.0);
                pixels[(oy + y) * width + ox + x] = (v * 255.0).round() as u8;
            }
        }
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(&pixels);
    Ok(out)
}

pub fn write_pgm_grid(path: &Path, images: &[Vec<f64>], side: usize, columns: usize) -> Result<()> {
    std::fs::write(path, pgm_grid(images, side, columns)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_size() {
        let ims = vec![vec![1.0; 4], vec![0.0; 4], vec![0.5; 4]];
        let bytes = pgm_grid(&ims, 2, 2).unwrap();
        let header = b"P5\n5 5\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + 25);
        let px = &bytes[header.len()..];
        assert_eq!(px[0], 255);
        assert_eq!(px[3], 0);
        assert_eq!(px[3 * 5], 128);
    }

    #[test]
    fn rejects_wrong_raster() {
        assert!(pgm_grid(&[vec![0.0; 3]], 2, 1).is_err());
    }
}
