use super::{FeatureConfig, FeatureError};
use crate::imaging::GrayImage;

const BLOCK_EPSILON: f64 = 1e-6;

/// Histogram of oriented gradients.
///
/// Central-difference gradients with replicated borders; unsigned orientation
/// in [0°, 180°) with bin `i` centered on `i * 180 / bins` degrees and each
/// vote split linearly between the two nearest bins (wrapping at 180°).
/// Cells are grouped into overlapping `block`×`block` windows with a stride of
/// one cell, each normalized by `sqrt(‖v‖² + ε²)`.
pub fn hog(gray: &GrayImage, config: &FeatureConfig) -> Result<Vec<f64>, FeatureError> {
    let (w, h) = (gray.width(), gray.height());
    let cell = config.hog_cell;
    if cell == 0 || w % cell != 0 || h % cell != 0 {
        return Err(FeatureError::BadDimensions {
            width: w,
            height: h,
            cell,
        });
    }
    let bins = config.hog_bins as usize;
    let block = config.hog_block as usize;
    let (cells_x, cells_y) = ((w / cell) as usize, (h / cell) as usize);
    if cells_x < block || cells_y < block {
        return Ok(Vec::new());
    }

    let bin_width = 180.0 / bins as f64;
    let mut cells = vec![0f64; cells_x * cells_y * bins];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let gx = gray.get_clamped(x + 1, y) as f64 - gray.get_clamped(x - 1, y) as f64;
            let gy = gray.get_clamped(x, y + 1) as f64 - gray.get_clamped(x, y - 1) as f64;
            let magnitude = (gx * gx + gy * gy).sqrt();
            if magnitude == 0.0 {
                continue;
            }
            let mut angle = gy.atan2(gx).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            if angle >= 180.0 {
                angle -= 180.0;
            }
            let pos = angle / bin_width;
            let lo = pos.floor();
            let frac = pos - lo;
            let lo = lo as usize % bins;
            let hi = (lo + 1) % bins;
            let base = ((y as usize / cell as usize) * cells_x + x as usize / cell as usize) * bins;
            cells[base + lo] += magnitude * (1.0 - frac);
            cells[base + hi] += magnitude * frac;
        }
    }

    let blocks_x = cells_x - block + 1;
    let blocks_y = cells_y - block + 1;
    let mut out = Vec::with_capacity(blocks_x * blocks_y * block * block * bins);
    for by in 0..blocks_y {
        for bx in 0..blocks_x {
            let start = out.len();
            for cy in by..by + block {
                for cx in bx..bx + block {
                    let base = (cy * cells_x + cx) * bins;
                    out.extend_from_slice(&cells[base..base + bins]);
                }
            }
            let v = &mut out[start..];
            let norm =
                (v.iter().map(|a| a * a).sum::<f64>() + BLOCK_EPSILON * BLOCK_EPSILON).sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
        }
    }
    Ok(out)
}
