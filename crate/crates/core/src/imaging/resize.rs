use super::{Image, ImagingError};

/// Side length of the square classifier input.
pub const PREPROCESS_SIDE: u32 = 256;

/// `round(num / den)` with halves rounded away from zero, for positive operands.
fn div_round(num: u64, den: u64) -> u64 {
    (2 * num + den) / (2 * den)
}

/// Resizes so that the shorter axis equals `target`, preserving aspect ratio.
///
/// The long axis becomes `round(long * target / short)`. Upsamples when the
/// input is smaller than `target`.
pub fn downsample_short_axis(image: &Image, target: u32) -> Image {
    assert!(target >= 1, "target must be at least one pixel");
    let (w, h) = image.dimensions();
    let (nw, nh) = if w <= h {
        (
            target,
            div_round(h as u64 * target as u64, w as u64).max(1) as u32,
        )
    } else {
        (
            div_round(w as u64 * target as u64, h as u64).max(1) as u32,
            target,
        )
    };
    resample_bilinear(image, nw, nh)
}

/// Bilinear resampling with pixel-center alignment and clamped edges.
pub fn resample_bilinear(image: &Image, new_w: u32, new_h: u32) -> Image {
    let (w, h) = image.dimensions();
    if (w, h) == (new_w, new_h) {
        return image.clone();
    }
    let xs = axis_taps(w, new_w);
    let ys = axis_taps(h, new_h);
    let src = image.pixels();
    let stride = w as usize * 3;
    let mut out = Vec::with_capacity(new_w as usize * new_h as usize * 3);
    for &(y0, y1, fy) in &ys {
        let row0 = &src[y0 * stride..(y0 + 1) * stride];
        let row1 = &src[y1 * stride..(y1 + 1) * stride];
        for &(x0, x1, fx) in &xs {
            for c in 0..3 {
                let top = row0[x0 * 3 + c] as f64 * (1.0 - fx) + row0[x1 * 3 + c] as f64 * fx;
                let bot = row1[x0 * 3 + c] as f64 * (1.0 - fx) + row1[x1 * 3 + c] as f64 * fx;
                let v = top * (1.0 - fy) + bot * fy;
                out.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Image::new(new_w, new_h, out).expect("dimensions are consistent")
}

/// For each output coordinate, the two source indices and the weight of the second.
fn axis_taps(src_len: u32, dst_len: u32) -> Vec<(usize, usize, f64)> {
    let scale = src_len as f64 / dst_len as f64;
    let last = src_len as f64 - 1.0;
    (0..dst_len)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let i0 = s.floor();
            let i1 = (i0 + 1.0).min(last);
            (i0 as usize, i1 as usize, s - i0)
        })
        .collect()
}

/// Takes the centered `side`×`side` window. Offsets are `floor((extent - side) / 2)`.
pub fn center_crop(image: &Image, side: u32) -> Result<Image, ImagingError> {
    let (w, h) = image.dimensions();
    if w < side || h < side || side == 0 {
        return Err(ImagingError::TooSmall {
            width: w,
            height: h,
            side,
        });
    }
    if w == side && h == side {
        return Ok(image.clone());
    }
    image.crop((w - side) / 2, (h - side) / 2, side, side)
}

/// Short-axis resize to 256 followed by a centered 256×256 crop.
pub fn preprocess(image: &Image) -> Image {
    let resized = downsample_short_axis(image, PREPROCESS_SIDE);
    center_crop(&resized, PREPROCESS_SIDE).expect("short axis equals crop side after resize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut ChaCha8Rng, w: u32, h: u32) -> Image {
        let px = (0..w * h * 3).map(|_| rng.random()).collect();
        Image::new(w, h, px).unwrap()
    }

    /// Straightforward per-pixel bilinear sampler used as the reference.
    fn reference_bilinear(img: &Image, nw: u32, nh: u32) -> Vec<f64> {
        let (w, h) = img.dimensions();
        let mut out = Vec::new();
        for oy in 0..nh {
            for ox in 0..nw {
                let sx = (ox as f64 + 0.5) * w as f64 / nw as f64 - 0.5;
                let sy = (oy as f64 + 0.5) * h as f64 / nh as f64 - 0.5;
                let sx = sx.max(0.0).min((w - 1) as f64);
                let sy = sy.max(0.0).min((h - 1) as f64);
                let (x0, y0) = (sx.floor() as u32, sy.floor() as u32);
                let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
                let (ax, ay) = (sx - x0 as f64, sy - y0 as f64);
                for c in 0..3 {
                    let p = |x: u32, y: u32| img.get(x, y)[c] as f64;
                    let v = p(x0, y0) * (1.0 - ax) * (1.0 - ay)
                        + p(x1, y0) * ax * (1.0 - ay)
                        + p(x0, y1) * (1.0 - ax) * ay
                        + p(x1, y1) * ax * ay;
                    out.push(v);
                }
            }
        }
        out
    }

    #[test]
    fn widescreen_short_axis() {
        let img = Image::filled(1440, 900, [10, 20, 30]);
        assert_eq!(downsample_short_axis(&img, 256).dimensions(), (410, 256));
        let tall = Image::filled(900, 1440, [10, 20, 30]);
        assert_eq!(downsample_short_axis(&tall, 256).dimensions(), (256, 410));
    }

    #[test]
    fn square_target_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = random_image(&mut rng, 256, 256);
        assert_eq!(downsample_short_axis(&img, 256), img);
        assert_eq!(center_crop(&img, 256).unwrap(), img);
        assert_eq!(preprocess(&img), img);
    }

    #[test]
    fn matches_reference_resampler() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let img = random_image(&mut rng, 1024, 768);
            let out = downsample_short_axis(&img, 256);
            assert_eq!(out.dimensions(), (341, 256));
            let reference = reference_bilinear(&img, 341, 256);
            for (a, b) in out.pixels().iter().zip(&reference) {
                assert!((*a as f64 - b).abs() <= 1.0, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn crop_offsets_follow_floor_rule() {
        let img = Image::from_fn(410, 256, |x, y| [(x % 256) as u8, y as u8, (x / 256) as u8]);
        let c = center_crop(&img, 256).unwrap();
        assert_eq!(c.get(0, 0), img.get(77, 0));

        let img = Image::from_fn(300, 400, |x, y| [x as u8, (y % 256) as u8, (y / 256) as u8]);
        let c = center_crop(&img, 256).unwrap();
        for y in 0..256 {
            for x in 0..256 {
                assert_eq!(c.get(x, y), img.get(x + 22, y + 72));
            }
        }
    }

    #[test]
    fn crop_too_small() {
        let img = Image::filled(255, 300, [0, 0, 0]);
        assert!(matches!(
            center_crop(&img, 256),
            Err(ImagingError::TooSmall { .. })
        ));
    }

    #[test]
    fn preprocess_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = random_image(&mut rng, 1440, 900);
        let expected = center_crop(&downsample_short_axis(&img, 256), 256).unwrap();
        assert_eq!(preprocess(&img), expected);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn preprocess_always_square(w in 1u32..700, h in 1u32..700) {
            let img = Image::filled(w, h, [1, 2, 3]);
            let out = preprocess(&img);
            prop_assert_eq!(out.dimensions(), (256, 256));
        }

        #[test]
        fn constant_images_stay_constant(w in 1u32..400, h in 1u32..400, c in any::<[u8; 3]>(), t in 1u32..300) {
            let img = Image::filled(w, h, c);
            let out = downsample_short_axis(&img, t);
            prop_assert_eq!(out.width().min(out.height()), t);
            prop_assert!(out.pixels().chunks(3).all(|p| p == c));
        }
    }
}
