use serde::{Deserialize, Serialize};

use super::qr::QrMatrix;
use super::TagError;
use crate::imaging::Image;

pub const DEFAULT_QUIET_ZONE: u32 = 4;

const DARK: [u8; 3] = [0, 0, 0];
const LIGHT: [u8; 3] = [255, 255, 255];

/// Rasterizes a symbol with `module_px` pixels per module and a light
/// border of `quiet_zone` modules.
pub fn render_tag(matrix: &QrMatrix, module_px: u32, quiet_zone: u32) -> Image {
    assert!(module_px >= 1, "module_px must be at least 1");
    let side = matrix.side() as u32;
    let px = (side + 2 * quiet_zone) * module_px;
    Image::from_fn(px, px, |x, y| {
        let (mx, my) = (
            (x / module_px) as i64 - quiet_zone as i64,
            (y / module_px) as i64 - quiet_zone as i64,
        );
        let inside = (0..side as i64).contains(&mx) && (0..side as i64).contains(&my);
        if inside && matrix.get(my as usize, mx as usize) {
            DARK
        } else {
            LIGHT
        }
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Corner {
    #[default]
    UpperLeft,
    UpperRight,
    LowerLeft,
    LowerRight,
}

/// Where a tag goes on the screen. `size_px` is the on-screen side; a
/// tag raster of a different size is scaled with nearest-neighbor sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlayPlacement {
    pub corner: Corner,
    pub size_px: u32,
    pub margin_px: u32,
}

impl OverlayPlacement {
    /// Upper-left placement at the tag's native size.
    pub fn for_tag(tag: &Image, margin_px: u32) -> Self {
        Self {
            corner: Corner::UpperLeft,
            size_px: tag.width(),
            margin_px,
        }
    }

    /// Top-left pixel of the tag on a `width`×`height` screen.
    pub fn origin(&self, width: u32, height: u32) -> Result<(u32, u32), TagError> {
        let need = self.size_px + self.margin_px;
        if self.size_px == 0 || need > width || need > height {
            return Err(TagError::DoesNotFit {
                size: self.size_px,
                margin: self.margin_px,
                width,
                height,
            });
        }
        let m = self.margin_px;
        Ok(match self.corner {
            Corner::UpperLeft => (m, m),
            Corner::UpperRight => (width - need, m),
            Corner::LowerLeft => (m, height - need),
            Corner::LowerRight => (width - need, height - need),
        })
    }
}

/// Paints `tag` onto a copy of `screen` and returns it with the fraction of
/// the screen area the tag covers.
pub fn overlay(
    screen: &Image,
    tag: &Image,
    placement: &OverlayPlacement,
) -> Result<(Image, f64), TagError> {
    let (ox, oy) = placement.origin(screen.width(), screen.height())?;
    let size = placement.size_px;
    let mut out = screen.clone();
    for y in 0..size {
        for x in 0..size {
            let sx = (x as u64 * tag.width() as u64 / size as u64) as u32;
            let sy = (y as u64 * tag.height() as u64 / size as u64) as u32;
            out.set(ox + x, oy + y, tag.get(sx, sy));
        }
    }
    let coverage = (size as f64 * size as f64) / (screen.width() as f64 * screen.height() as f64);
    Ok((out, coverage))
}
