//! Histogram features: global color histogram, raw 256-code LBP histogram
//! and block-normalized HOG, concatenated and L2-normalized.

mod hog;

pub use hog::hog;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{GrayImage, Image, PREPROCESS_SIDE};

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("raster {width}x{height} is too small; need at least 3x3")]
    TooSmall { width: u32, height: u32 },
    #[error("raster {width}x{height} is not divisible into {cell}-pixel cells")]
    BadDimensions { width: u32, height: u32, cell: u32 },
    #[error("image is {width}x{height}; features require a preprocessed 256x256 image")]
    NotPreprocessed { width: u32, height: u32 },
    #[error("invalid feature config: {0}")]
    BadConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub color_bins_per_channel: u32,
    pub lbp_enabled: bool,
    pub hog_cell: u32,
    pub hog_bins: u32,
    pub hog_block: u32,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            color_bins_per_channel: 8,
            lbp_enabled: true,
            hog_cell: 8,
            hog_bins: 9,
            hog_block: 2,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if ![2, 4, 8, 16].contains(&self.color_bins_per_channel) {
            return Err(FeatureError::BadConfig(
                "color_bins_per_channel must be one of 2, 4, 8, 16".into(),
            ));
        }
        if self.hog_cell == 0 || PREPROCESS_SIDE % self.hog_cell != 0 {
            return Err(FeatureError::BadConfig("hog_cell must divide 256".into()));
        }
        if self.hog_bins < 2 {
            return Err(FeatureError::BadConfig(
                "hog_bins must be at least 2".into(),
            ));
        }
        if self.hog_block == 0 || self.hog_block > PREPROCESS_SIDE / self.hog_cell {
            return Err(FeatureError::BadConfig(
                "hog_block must fit inside the cell grid".into(),
            ));
        }
        Ok(())
    }

    /// HOG length for a raster of the given size.
    pub fn hog_len(&self, width: u32, height: u32) -> usize {
        let cx = width / self.hog_cell;
        let cy = height / self.hog_cell;
        if cx < self.hog_block || cy < self.hog_block {
            return 0;
        }
        ((cx - self.hog_block + 1)
            * (cy - self.hog_block + 1)
            * self.hog_block
            * self.hog_block
            * self.hog_bins) as usize
    }

    /// The segment layout [`extract`] produces under this config.
    pub fn layout(&self) -> Vec<Segment> {
        let mut segments = Vec::new();
        let mut offset = 0;
        let mut push = |name: &str, len: usize| {
            segments.push(Segment {
                name: name.to_string(),
                offset,
                len,
            });
            offset += len;
        };
        push("color", self.color_bins_per_channel.pow(3) as usize);
        if self.lbp_enabled {
            push("lbp", 256);
        }
        push("hog", self.hog_len(PREPROCESS_SIDE, PREPROCESS_SIDE));
        segments
    }

    pub fn dimension(&self) -> usize {
        self.layout().iter().map(|s| s.len).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: Vec<Segment>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn segment(&self, name: &str) -> Option<&[f64]> {
        self.layout
            .iter()
            .find(|s| s.name == name)
            .map(|s| &self.values[s.offset..s.offset + s.len])
    }
}

/// ITU-R 601 luma, rounded half up: `round(0.299 R + 0.587 G + 0.114 B)`.
pub fn to_gray(image: &Image) -> GrayImage {
    let data = image
        .pixels()
        .chunks_exact(3)
        .map(|p| ((299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32 + 500) / 1000) as u8)
        .collect();
    GrayImage::new(image.width(), image.height(), data).expect("same dimensions")
}

/// Joint RGB histogram with `bins` levels per channel, L1-normalized.
pub fn color_histogram(image: &Image, bins: u32) -> Vec<f64> {
    let b = bins as usize;
    let mut hist = vec![0f64; b * b * b];
    for p in image.pixels().chunks_exact(3) {
        let q = |c: u8| c as usize * b / 256;
        hist[q(p[0]) * b * b + q(p[1]) * b + q(p[2])] += 1.0;
    }
    let total = (image.width() as f64) * (image.height() as f64);
    hist.iter_mut().for_each(|v| *v /= total);
    hist
}

/// Neighbor offsets clockwise from the top-left; neighbor `i` sets bit `i`.
const LBP_NEIGHBORS: [(i32, i32); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
];

/// Histogram of raw 8-neighbor LBP codes over interior pixels, L1-normalized.
pub fn lbp_histogram(gray: &GrayImage) -> Result<Vec<f64>, FeatureError> {
    let (w, h) = (gray.width(), gray.height());
    if w < 3 || h < 3 {
        return Err(FeatureError::TooSmall {
            width: w,
            height: h,
        });
    }
    let mut hist = vec![0f64; 256];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let center = gray.get(x, y);
            let mut code = 0usize;
            for (bit, (dx, dy)) in LBP_NEIGHBORS.iter().enumerate() {
                let n = gray.get((x as i32 + dx) as u32, (y as i32 + dy) as u32);
                if n >= center {
                    code |= 1 << bit;
                }
            }
            hist[code] += 1.0;
        }
    }
    let total = ((w - 2) * (h - 2)) as f64;
    hist.iter_mut().for_each(|v| *v /= total);
    Ok(hist)
}

fn l2_normalize(values: &mut [f64]) {
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        values.iter_mut().for_each(|v| *v /= norm);
    }
}

/// Feature vector of a preprocessed 256×256 image.
pub fn extract(image: &Image, config: &FeatureConfig) -> Result<FeatureVector, FeatureError> {
    config.validate()?;
    if image.dimensions() != (PREPROCESS_SIDE, PREPROCESS_SIDE) {
        return Err(FeatureError::NotPreprocessed {
            width: image.width(),
            height: image.height(),
        });
    }
    let layout = config.layout();
    let mut values = Vec::with_capacity(config.dimension());
    values.extend(color_histogram(image, config.color_bins_per_channel));
    let gray = to_gray(image);
    if config.lbp_enabled {
        values.extend(lbp_histogram(&gray)?);
    }
    values.extend(hog(&gray, config)?);
    l2_normalize(&mut values);
    debug_assert_eq!(values.len(), layout.iter().map(|s| s.len).sum::<usize>());
    Ok(FeatureVector { values, layout })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(seed: u64, w: u32, h: u32) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::new(w, h, (0..w * h * 3).map(|_| rng.random()).collect()).unwrap()
    }

    #[test]
    fn gray_known_values() {
        assert!(to_gray(&Image::filled(3, 2, [255, 255, 255]))
            .data()
            .iter()
            .all(|&v| v == 255));
        assert!(to_gray(&Image::filled(3, 2, [255, 0, 0]))
            .data()
            .iter()
            .all(|&v| v == 76));
    }

    #[test]
    fn gray_matches_rational_rounding() {
        let img = random_image(11, 64, 64);
        let gray = to_gray(&img);
        for y in 0..64 {
            for x in 0..64 {
                let [r, g, b] = img.get(x, y);
                // exact rational value, rounded half up
                let num = 299 * r as i64 + 587 * g as i64 + 114 * b as i64;
                let expected = (num * 2 + 1000).div_euclid(2000);
                assert_eq!(gray.get(x, y) as i64, expected);
            }
        }
    }

    #[test]
    fn color_histogram_one_hot() {
        let red = color_histogram(&Image::filled(256, 256, [255, 0, 0]), 8);
        assert_eq!(red.len(), 512);
        assert_eq!(red[448], 1.0);
        assert_eq!(red.iter().sum::<f64>(), 1.0);
        let black = color_histogram(&Image::filled(4, 4, [0, 0, 0]), 8);
        assert_eq!(black[0], 1.0);
    }

    #[test]
    fn color_histogram_brute_force() {
        let img = random_image(5, 8, 8);
        for bins in [2u32, 4, 8, 16] {
            let hist = color_histogram(&img, bins);
            let mut counts = vec![0u32; (bins * bins * bins) as usize];
            for y in 0..8 {
                for x in 0..8 {
                    let [r, g, b] = img.get(x, y);
                    let (rb, gb, bb) = (
                        r as u32 * bins / 256,
                        g as u32 * bins / 256,
                        b as u32 * bins / 256,
                    );
                    counts[(rb * bins * bins + gb * bins + bb) as usize] += 1;
                }
            }
            for (h, c) in hist.iter().zip(&counts) {
                assert_eq!(*h, *c as f64 / 64.0);
            }
        }
    }

    #[test]
    fn lbp_known_cases() {
        let flat = GrayImage::from_fn(5, 5, |_, _| 42);
        let h = lbp_histogram(&flat).unwrap();
        assert_eq!(h[255], 1.0);
        let spike = GrayImage::from_fn(3, 3, |x, y| if (x, y) == (1, 1) { 255 } else { 0 });
        assert_eq!(lbp_histogram(&spike).unwrap()[0], 1.0);
        assert_eq!(
            lbp_histogram(&GrayImage::from_fn(2, 5, |_, _| 0)),
            Err(FeatureError::TooSmall {
                width: 2,
                height: 5
            })
        );
    }

    #[test]
    fn lbp_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let gray =
            GrayImage::new(16, 16, (0..256).map(|_| rng.random_range(0..8u8)).collect()).unwrap();
        let hist = lbp_histogram(&gray).unwrap();
        let mut counts = [0u32; 256];
        for y in 1..15i64 {
            for x in 1..15i64 {
                let c = gray.get(x as u32, y as u32);
                // clockwise ring starting at top-left
                let ring = [
                    (x - 1, y - 1),
                    (x, y - 1),
                    (x + 1, y - 1),
                    (x + 1, y),
                    (x + 1, y + 1),
                    (x, y + 1),
                    (x - 1, y + 1),
                    (x - 1, y),
                ];
                let code: usize = ring
                    .iter()
                    .enumerate()
                    .map(|(i, &(nx, ny))| ((gray.get(nx as u32, ny as u32) >= c) as usize) << i)
                    .sum();
                counts[code] += 1;
            }
        }
        for (h, c) in hist.iter().zip(counts) {
            assert_eq!(*h, c as f64 / 196.0);
        }
    }

    #[test]
    fn default_dimension() {
        let cfg = FeatureConfig::default();
        assert_eq!(cfg.dimension(), 35_364);
        let fv = extract(&random_image(1, 256, 256), &cfg).unwrap();
        assert_eq!(fv.len(), 35_364);
        assert_eq!(fv.segment("hog").unwrap().len(), 31 * 31 * 4 * 9);
    }

    #[test]
    fn black_image_has_no_hog() {
        let fv = extract(
            &Image::filled(256, 256, [0, 0, 0]),
            &FeatureConfig::default(),
        )
        .unwrap();
        assert!(fv.segment("hog").unwrap().iter().all(|&v| v == 0.0));
        assert!(fv.segment("color").unwrap()[0] > 0.0);
        assert!(fv.segment("lbp").unwrap()[255] > 0.0);
    }

    #[test]
    fn requires_preprocessed_input() {
        let err = extract(
            &Image::filled(300, 256, [0, 0, 0]),
            &FeatureConfig::default(),
        )
        .unwrap_err();
        assert_eq!(
            err,
            FeatureError::NotPreprocessed {
                width: 300,
                height: 256
            }
        );
    }

    #[test]
    fn config_validation() {
        let bad = FeatureConfig {
            color_bins_per_channel: 3,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = FeatureConfig {
            hog_cell: 7,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = FeatureConfig {
            hog_bins: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn lbp_disabled_drops_segment() {
        let cfg = FeatureConfig {
            lbp_enabled: false,
            ..Default::default()
        };
        let fv = extract(&random_image(4, 256, 256), &cfg).unwrap();
        assert!(fv.segment("lbp").is_none());
        assert_eq!(fv.len(), 512 + 34_596);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn extract_is_unit_norm(seed in any::<u64>()) {
            let fv = extract(&random_image(seed, 256, 256), &FeatureConfig::default()).unwrap();
            let norm = fv.values.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() <= 1e-6);
            prop_assert!(fv.values.iter().all(|&v| v >= 0.0));
        }

        #[test]
        fn color_histogram_ignores_positions(seed in any::<u64>()) {
            let img = random_image(seed, 12, 9);
            let mut px: Vec<[u8; 3]> = img.pixels().chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
            px.reverse();
            px.rotate_left((seed % 50) as usize);
            let shuffled = Image::new(12, 9, px.concat()).unwrap();
            prop_assert_eq!(color_histogram(&img, 4), color_histogram(&shuffled, 4));
        }
    }
}
