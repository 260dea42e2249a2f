use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Image, ImagingError};

/// Capture artifacts applied by [`degrade`]: rotation about the center, then
/// Gaussian blur, exposure gain, and additive Gaussian noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegradationParams {
    pub gaussian_blur_sigma: f64,
    pub noise_stddev: f64,
    pub exposure_gain: f64,
    pub rotation_deg: f64,
    pub seed: u64,
}

impl Default for DegradationParams {
    fn default() -> Self {
        Self {
            gaussian_blur_sigma: 0.0,
            noise_stddev: 0.0,
            exposure_gain: 1.0,
            rotation_deg: 0.0,
            seed: 0,
        }
    }
}

impl DegradationParams {
    pub fn validate(&self) -> Result<(), ImagingError> {
        let bad = |what: &str| Err(ImagingError::InvalidParams(what.to_string()));
        if !(self.gaussian_blur_sigma >= 0.0 && self.gaussian_blur_sigma.is_finite()) {
            return bad("gaussian_blur_sigma must be >= 0");
        }
        if !(self.noise_stddev >= 0.0 && self.noise_stddev.is_finite()) {
            return bad("noise_stddev must be >= 0");
        }
        if !(self.exposure_gain > 0.0 && self.exposure_gain.is_finite()) {
            return bad("exposure_gain must be > 0");
        }
        if !(-15.0..=15.0).contains(&self.rotation_deg) {
            return bad("rotation_deg must lie in [-15, 15]");
        }
        Ok(())
    }
}

/// Applies the degradation model. Pure in `(image, params)`; no-op parameters
/// return the input unchanged.
pub fn degrade(image: &Image, params: &DegradationParams) -> Result<Image, ImagingError> {
    params.validate()?;
    let mut out = image.clone();
    if params.rotation_deg != 0.0 {
        out = rotate(&out, params.rotation_deg);
    }
    if params.gaussian_blur_sigma > 0.0 {
        out = gaussian_blur(&out, params.gaussian_blur_sigma);
    }
    if params.exposure_gain != 1.0 {
        let px = out
            .pixels()
            .iter()
            .map(|&v| (v as f64 * params.exposure_gain).round().clamp(0.0, 255.0) as u8)
            .collect();
        out = Image::new(out.width(), out.height(), px)?;
    }
    if params.noise_stddev > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let normal = Normal::new(0.0, params.noise_stddev).expect("finite stddev");
        let px = out
            .pixels()
            .iter()
            .map(|&v| {
                (v as f64 + normal.sample(&mut rng))
                    .round()
                    .clamp(0.0, 255.0) as u8
            })
            .collect();
        out = Image::new(out.width(), out.height(), px)?;
    }
    Ok(out)
}

/// Rotation about the image center with bilinear sampling and edge clamp.
fn rotate(image: &Image, degrees: f64) -> Image {
    let (w, h) = image.dimensions();
    let (sin, cos) = degrees.to_radians().sin_cos();
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    Image::from_fn(w, h, |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        // inverse map: rotate the destination point back by -theta
        let sx = cos * dx + sin * dy + cx;
        let sy = -sin * dx + cos * dy + cy;
        sample_bilinear_clamped(image, sx, sy)
    })
}

pub(crate) fn sample_bilinear_clamped(image: &Image, x: f64, y: f64) -> [u8; 3] {
    let (w, h) = image.dimensions();
    let x = x.clamp(0.0, w as f64 - 1.0);
    let y = y.clamp(0.0, h as f64 - 1.0);
    let x0 = x.floor() as u32;
    let y0 = y.floor() as u32;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let (a, b, c, d) = (
        image.get(x0, y0),
        image.get(x1, y0),
        image.get(x0, y1),
        image.get(x1, y1),
    );
    let mut out = [0u8; 3];
    for i in 0..3 {
        let top = a[i] as f64 * (1.0 - fx) + b[i] as f64 * fx;
        let bot = c[i] as f64 * (1.0 - fx) + d[i] as f64 * fx;
        out[i] = (top * (1.0 - fy) + bot * fy).round().clamp(0.0, 255.0) as u8;
    }
    out
}

pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with edge clamp.
pub(crate) fn gaussian_blur(image: &Image, sigma: f64) -> Image {
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as i64;
    let (w, h) = (image.width() as i64, image.height() as i64);
    let src = image.pixels();
    let idx = |x: i64, y: i64| ((y * w + x) * 3) as usize;

    let mut tmp = vec![0f64; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0f64; 3];
            for (k, wt) in kernel.iter().enumerate() {
                let sx = (x + k as i64 - r).clamp(0, w - 1);
                let o = idx(sx, y);
                for c in 0..3 {
                    acc[c] += wt * src[o + c] as f64;
                }
            }
            let o = idx(x, y);
            tmp[o..o + 3].copy_from_slice(&acc);
        }
    }
    let mut out = vec![0u8; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0f64; 3];
            for (k, wt) in kernel.iter().enumerate() {
                let sy = (y + k as i64 - r).clamp(0, h - 1);
                let o = idx(x, sy);
                for c in 0..3 {
                    acc[c] += wt * tmp[o + c];
                }
            }
            let o = idx(x, y);
            for c in 0..3 {
                out[o + c] = acc[c].round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    Image::new(image.width(), image.height(), out).expect("same dimensions")
}
