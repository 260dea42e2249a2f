//! Deterministic synthetic dataset of screen / no-screen photographs.
//!
//! Sample `i` draws everything from ChaCha8 stream `i` of `seed`, so any
//! sample can be rendered alone and the dataset is identical across runs.
//! App look (banner colors, bar heights, row density) comes from
//! `style_seed`; two configs differing only in `style_seed` emulate
//! independently collected datasets.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{Manifest, ManifestRow};
use super::{io_err, EvalError};
use crate::classifier::ClassLabel;
use crate::geometry::{Homography, Point};
use crate::imaging::{degrade, save_image, DegradationParams, Image};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DegradationRanges {
    pub max_blur_sigma: f64,
    pub max_noise_stddev: f64,
    pub exposure_gain: (f64, f64),
    pub max_rotation_deg: f64,
}

impl DegradationRanges {
    pub fn none() -> Self {
        Self {
            max_blur_sigma: 0.0,
            max_noise_stddev: 0.0,
            exposure_gain: (1.0, 1.0),
            max_rotation_deg: 0.0,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> DegradationParams {
        let mut uniform = |lo: f64, hi: f64| {
            if hi > lo {
                rng.random_range(lo..=hi)
            } else {
                lo
            }
        };
        DegradationParams {
            gaussian_blur_sigma: uniform(0.0, self.max_blur_sigma),
            noise_stddev: uniform(0.0, self.max_noise_stddev),
            exposure_gain: uniform(self.exposure_gain.0, self.exposure_gain.1),
            rotation_deg: uniform(-self.max_rotation_deg, self.max_rotation_deg),
            seed: 0,
        }
    }
}

impl Default for DegradationRanges {
    fn default() -> Self {
        Self {
            max_blur_sigma: 1.0,
            max_noise_stddev: 4.0,
            exposure_gain: (0.85, 1.15),
            max_rotation_deg: 5.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub style_seed: u64,
    pub counts: BTreeMap<ClassLabel, usize>,
    pub width: u32,
    pub height: u32,
    pub degradation: DegradationRanges,
    /// Displayed screen width as a fraction of the photo width.
    pub screen_scale: (f64, f64),
    /// Maximum corner displacement as a fraction of the screen width.
    pub perspective: f64,
    /// Probability of a framed picture somewhere in the scene.
    pub distractor_prob: f64,
    /// `ppm` or `png`.
    pub format: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            style_seed: 0,
            counts: ClassLabel::ALL.iter().map(|&l| (l, 100)).collect(),
            width: 320,
            height: 240,
            degradation: DegradationRanges::default(),
            screen_scale: (0.7, 0.88),
            perspective: 0.06,
            distractor_prob: 0.3,
            format: "ppm".into(),
        }
    }
}

impl SynthConfig {
    pub fn with_counts(mut self, counts: &[(ClassLabel, usize)]) -> Self {
        self.counts = counts.iter().copied().collect();
        self
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::BadConfig(m.into()));
        let (lo, hi) = self.screen_scale;
        if self.width < 64 || self.height < 64 {
            return bad("width and height must be at least 64");
        }
        if !(lo > 0.0 && lo <= hi && hi <= 0.95) {
            return bad("screen_scale must satisfy 0 < min <= max <= 0.95");
        }
        if !(0.0..=0.2).contains(&self.perspective) || !(0.0..=1.0).contains(&self.distractor_prob)
        {
            return bad("perspective must be in [0, 0.2] and distractor_prob in [0, 1]");
        }
        let d = &self.degradation;
        if d.max_blur_sigma < 0.0
            || d.max_noise_stddev < 0.0
            || d.exposure_gain.0 <= 0.0
            || d.exposure_gain.0 > d.exposure_gain.1
            || !(0.0..=15.0).contains(&d.max_rotation_deg)
        {
            return bad("degradation ranges out of bounds");
        }
        if !matches!(self.format.as_str(), "ppm" | "png") {
            return bad("format must be 'ppm' or 'png'");
        }
        Ok(())
    }

    /// `(index, label)` of every sample, labels in taxonomy order.
    pub fn plan(&self) -> Vec<(usize, ClassLabel)> {
        ClassLabel::ALL
            .iter()
            .flat_map(|&l| std::iter::repeat_n(l, self.counts.get(&l).copied().unwrap_or(0)))
            .enumerate()
            .collect()
    }

    pub fn file_name(&self, index: usize, label: ClassLabel) -> String {
        format!("{index:05}_{label}.{}", self.format)
    }
}

/// Renders sample `index` with class `label`.
pub fn synth_sample(config: &SynthConfig, index: usize, label: ClassLabel) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let (w, h) = (config.width, config.height);
    let mut img = background(w, h, &mut rng);
    if rng.random_bool(config.distractor_prob) {
        picture_frame(&mut img, &mut rng);
    }
    if label.is_screen() {
        let style = AppStyle::new(label, config.style_seed);
        let content = render_content(label, &style, &mut rng);
        place_monitor(&mut img, &content, config, &mut rng);
    }
    let mut params = config.degradation.sample(&mut rng);
    params.seed = rng.random();
    degrade(&img, &params).expect("sampled degradation parameters are within range")
}

/// Writes every sample and `manifest.csv` into `out_dir`.
pub fn synth_generate(
    config: &SynthConfig,
    out_dir: impl AsRef<Path>,
) -> Result<Manifest, EvalError> {
    config.validate()?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let plan = config.plan();
    plan.par_iter().try_for_each(|&(i, label)| {
        save_image(
            &synth_sample(config, i, label),
            out_dir.join(config.file_name(i, label)),
        )
        .map_err(EvalError::from)
    })?;
    let rows = plan
        .iter()
        .map(|&(i, label)| ManifestRow {
            path: out_dir.join(config.file_name(i, label)),
            label,
        })
        .collect();
    let manifest = Manifest::new(rows, None)?;
    manifest.write(out_dir.join("manifest.csv"))?;
    Ok(manifest)
}

type Rgb = [u8; 3];

fn jitter(rng: &mut ChaCha8Rng, c: Rgb, amount: i32) -> Rgb {
    c.map(|v| (v as i32 + rng.random_range(-amount..=amount)).clamp(0, 255) as u8)
}

fn mix(a: Rgb, b: Rgb, t: f64) -> Rgb {
    [0, 1, 2].map(|k| {
        (a[k] as f64 * (1.0 - t) + b[k] as f64 * t)
            .round()
            .clamp(0.0, 255.0) as u8
    })
}

/// Smooth random field in [0, 1] from a bilinearly interpolated lattice.
struct ValueNoise {
    cell: f64,
    cols: usize,
    grid: Vec<f64>,
}

impl ValueNoise {
    fn new(w: u32, h: u32, cell: f64, rng: &mut ChaCha8Rng) -> Self {
        let cols = (w as f64 / cell) as usize + 2;
        let rows = (h as f64 / cell) as usize + 2;
        Self {
            cell,
            cols,
            grid: (0..cols * rows).map(|_| rng.random()).collect(),
        }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        let (gx, gy) = (x / self.cell, y / self.cell);
        let (ix, iy) = (gx.floor() as usize, gy.floor() as usize);
        let (fx, fy) = (gx - ix as f64, gy - iy as f64);
        let g = |cx: usize, cy: usize| self.grid[cy * self.cols + cx];
        let top = g(ix, iy) * (1.0 - fx) + g(ix + 1, iy) * fx;
        let bottom = g(ix, iy + 1) * (1.0 - fx) + g(ix + 1, iy + 1) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

const WALLS: [Rgb; 5] = [
    [158, 142, 116],
    [146, 134, 106],
    [138, 128, 100],
    [152, 134, 114],
    [142, 130, 110],
];
const FLOORS: [Rgb; 5] = [
    [112, 78, 48],
    [92, 66, 44],
    [128, 96, 62],
    [84, 80, 60],
    [100, 84, 66],
];

/// Wall above, desk or floor below, both textured, with a few objects.
fn background(w: u32, h: u32, rng: &mut ChaCha8Rng) -> Image {
    let wall = {
        let base = WALLS[rng.random_range(0..WALLS.len())];
        jitter(rng, base, 12)
    };
    let floor = {
        let base = FLOORS[rng.random_range(0..FLOORS.len())];
        jitter(rng, base, 12)
    };
    let horizon = rng.random_range(0.55..0.85) * h as f64;
    let coarse = ValueNoise::new(w, h, rng.random_range(24.0..60.0), rng);
    let fine = ValueNoise::new(w, h, rng.random_range(3.0..8.0), rng);
    let amp = rng.random_range(14.0..30.0);
    let mut img = Image::from_fn(w, h, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let base = if yf < horizon { wall } else { floor };
        let n = (coarse.at(xf, yf) - 0.5) * amp + (fine.at(xf, yf) - 0.5) * amp * 0.5;
        base.map(|v| (v as f64 + n).round().clamp(0.0, 255.0) as u8)
    });
    for _ in 0..rng.random_range(1..=4) {
        let color = {
            let base = FLOORS[rng.random_range(0..FLOORS.len())];
            jitter(rng, base, 25)
        };
        let (cx, cy) = (
            rng.random_range(0.0..w as f64),
            rng.random_range(horizon * 0.8..h as f64),
        );
        let (rx, ry) = (
            rng.random_range(8.0..w as f64 * 0.15),
            rng.random_range(6.0..h as f64 * 0.12),
        );
        fill_ellipse(&mut img, cx, cy, rx, ry, color);
    }
    img
}

fn fill_ellipse(img: &mut Image, cx: f64, cy: f64, rx: f64, ry: f64, color: Rgb) {
    let (x0, x1) = (
        (cx - rx).max(0.0) as u32,
        ((cx + rx).ceil() as u32).min(img.width()),
    );
    let (y0, y1) = (
        (cy - ry).max(0.0) as u32,
        ((cy + ry).ceil() as u32).min(img.height()),
    );
    for y in y0..y1 {
        for x in x0..x1 {
            let (dx, dy) = ((x as f64 + 0.5 - cx) / rx, (y as f64 + 0.5 - cy) / ry);
            if dx * dx + dy * dy <= 1.0 {
                img.set(x, y, color);
            }
        }
    }
}

/// A framed painting: wooden frame around a soft landscape.
fn picture_frame(img: &mut Image, rng: &mut ChaCha8Rng) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let fw = rng.random_range(w / 6..w / 3);
    let fh = rng.random_range(h / 6..h / 3);
    let (x0, y0) = (
        rng.random_range(0..w - fw),
        rng.random_range(0..(h / 2).max(1)),
    );
    let border = rng.random_range(3..8);
    let frame = jitter(rng, [96, 62, 30], 20);
    rect(img, x0, y0, fw as u32, fh as u32, frame);
    let sky = jitter(rng, [150, 170, 180], 30);
    let land = jitter(rng, [90, 110, 60], 30);
    let split = rng.random_range(0.3..0.7);
    for y in (y0 + border)..(y0 + fh - border) {
        let t = (y - y0 - border) as f64 / (fh - 2 * border).max(1) as f64;
        let c = if t < split {
            mix(sky, [220, 210, 190], t / split * 0.5)
        } else {
            land
        };
        rect(img, x0 + border, y, (fw - 2 * border).max(0) as u32, 1, c);
    }
}

/// Look shared by every mockup of one app under one style seed.
struct AppStyle {
    banner: Rgb,
    background: Rgb,
    accent: Rgb,
    banner_frac: f64,
    row_height: u32,
}

impl AppStyle {
    fn new(label: ClassLabel, style_seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(style_seed ^ 0x5354_594c);
        rng.set_stream(label.index() as u64);
        let (banner, background, accent, banner_frac, row_height) = match label {
            ClassLabel::Gmail => ([214, 58, 46], [252, 240, 234], [238, 172, 160], 0.2, 9),
            ClassLabel::Facebook => ([59, 89, 152], [196, 208, 236], [236, 242, 255], 0.18, 12),
            ClassLabel::Messenger => ([214, 196, 250], [236, 226, 255], [140, 60, 235], 0.09, 18),
            ClassLabel::OtherApp | ClassLabel::NoScreen => {
                ([40, 40, 44], [30, 30, 32], [86, 156, 214], 0.05, 7)
            }
        };
        Self {
            banner: jitter(&mut rng, banner, 14),
            background: jitter(&mut rng, background, 6),
            accent: jitter(&mut rng, accent, 14),
            banner_frac: banner_frac * rng.random_range(0.8..1.25),
            row_height: (row_height as f64 * rng.random_range(0.8..1.25)).round() as u32,
        }
    }
}

const CONTENT_W: u32 = 200;
const CONTENT_H: u32 = 125;

fn rect(img: &mut Image, x: i64, y: i64, w: u32, h: u32, color: Rgb) {
    img.fill_rect(x, y, x + w as i64, y + h as i64, color);
}

fn text_line(img: &mut Image, x: i64, y: i64, len: u32, color: Rgb) {
    rect(img, x, y, len, 2, color);
}

fn render_content(label: ClassLabel, style: &AppStyle, rng: &mut ChaCha8Rng) -> Image {
    let (w, h) = (CONTENT_W, CONTENT_H);
    let mut img = Image::filled(w, h, style.background);
    let bar = ((h as f64 * style.banner_frac).round() as u32).max(3);
    let row = style.row_height.max(5);
    match label {
        ClassLabel::Gmail => {
            rect(&mut img, 0, 0, w, bar, style.banner);
            text_line(&mut img, 6, (bar / 2) as i64 - 1, 30, [255, 255, 255]);
            let side = w / 4;
            rect(&mut img, 0, bar as i64, side, h - bar, style.accent);
            for k in 0..6 {
                text_line(
                    &mut img,
                    5,
                    (bar + 8 + k * 10) as i64,
                    rng.random_range(15..side - 8),
                    [120, 60, 60],
                );
            }
            let mut y = bar + 4;
            while y + row <= h {
                let unread = rng.random_bool(0.4);
                let ink = if unread {
                    [30, 30, 30]
                } else {
                    [110, 110, 110]
                };
                text_line(
                    &mut img,
                    side as i64 + 6,
                    (y + row / 2) as i64 - 1,
                    rng.random_range(20..40),
                    ink,
                );
                text_line(
                    &mut img,
                    side as i64 + 50,
                    (y + row / 2) as i64 - 1,
                    rng.random_range(40..120),
                    [140, 140, 140],
                );
                rect(
                    &mut img,
                    side as i64,
                    (y + row - 1) as i64,
                    w - side,
                    1,
                    [225, 225, 225],
                );
                y += row;
            }
        }
        ClassLabel::Facebook => {
            rect(&mut img, 0, 0, w, bar, style.banner);
            text_line(&mut img, 6, (bar / 2) as i64 - 1, 24, [255, 255, 255]);
            rect(
                &mut img,
                w as i64 - 40,
                3,
                30,
                bar.saturating_sub(6).max(2),
                [100, 125, 180],
            );
            let (cx, cw) = (w / 5, w * 3 / 5);
            let mut y = bar + 6;
            while y + 30 < h {
                let ch = rng.random_range(28..50).min(h - y - 2);
                rect(&mut img, cx as i64, y as i64, cw, ch, style.accent);
                rect(&mut img, cx as i64 + 4, y as i64 + 4, 8, 8, [150, 160, 190]);
                text_line(
                    &mut img,
                    cx as i64 + 16,
                    y as i64 + 6,
                    rng.random_range(20..50),
                    [60, 70, 100],
                );
                if ch > 30 && rng.random_bool(0.6) {
                    let c = jitter(rng, [120, 130, 150], 40);
                    rect(&mut img, cx as i64 + 4, y as i64 + 16, cw - 8, ch - 20, c);
                } else {
                    text_line(
                        &mut img,
                        cx as i64 + 4,
                        y as i64 + 18,
                        cw - 20,
                        [140, 140, 150],
                    );
                }
                y += ch + 6;
            }
            for k in 0..5 {
                text_line(
                    &mut img,
                    4,
                    (bar + 8 + k * 12) as i64,
                    rng.random_range(10..cx - 6),
                    [90, 100, 130],
                );
            }
        }
        ClassLabel::Messenger => {
            let list = w / 4;
            rect(&mut img, 0, 0, w, bar, style.banner);
            rect(&mut img, 0, bar as i64, list, h - bar, [226, 212, 250]);
            for k in 0..(h / 18) {
                let y = (bar + 4 + k * 18) as i64;
                rect(&mut img, 4, y, 10, 10, jitter(rng, [180, 170, 200], 30));
                text_line(
                    &mut img,
                    18,
                    y + 4,
                    rng.random_range(10..list - 20),
                    [120, 120, 130],
                );
            }
            let mut y = bar + 6;
            while y + row < h {
                let bw = rng.random_range(30..(w - list) * 2 / 3);
                let mine = rng.random_bool(0.5);
                let (x, color) = if mine {
                    ((w - bw - 6) as i64, style.accent)
                } else {
                    (list as i64 + 6, [228, 228, 234])
                };
                rect(&mut img, x, y as i64, bw, row - 4, color);
                y += row;
            }
        }
        ClassLabel::OtherApp | ClassLabel::NoScreen => render_other(&mut img, style, rng),
    }
    img
}

/// Dark editor, terminal or dashboard, chosen per sample.
fn render_other(img: &mut Image, style: &AppStyle, rng: &mut ChaCha8Rng) {
    let (w, h) = (img.width(), img.height());
    const CODE: [Rgb; 5] = [
        [86, 156, 214],
        [206, 145, 120],
        [181, 206, 168],
        [220, 220, 170],
        [197, 134, 192],
    ];
    match rng.random_range(0..3) {
        0 => {
            let side = rng.random_range(w / 8..w / 4);
            rect(img, 0, 0, w, h, style.background);
            rect(img, 0, 0, side, h, style.banner);
            for k in 0..(h / 9) {
                text_line(
                    img,
                    4,
                    (k * 9 + 4) as i64,
                    rng.random_range(10..side.max(12) - 2),
                    [150, 150, 150],
                );
            }
            for k in 0..(h / style.row_height.max(5)) {
                let mut x = side as i64 + 6 + rng.random_range(0..4) * 8;
                for _ in 0..rng.random_range(1..5) {
                    let len = rng.random_range(6..30);
                    text_line(
                        img,
                        x,
                        (k * style.row_height.max(5) + 3) as i64,
                        len,
                        CODE[rng.random_range(0..CODE.len())],
                    );
                    x += len as i64 + 4;
                }
            }
        }
        1 => {
            rect(img, 0, 0, w, h, [12, 12, 14]);
            let ink = if rng.random_bool(0.5) {
                [60, 220, 90]
            } else {
                [210, 210, 210]
            };
            for k in 0..(h / 7) {
                text_line(
                    img,
                    4,
                    (k * 7 + 3) as i64,
                    rng.random_range(10..w - 10),
                    ink,
                );
            }
        }
        _ => {
            rect(img, 0, 0, w, h, [0, 43, 54]);
            for _ in 0..rng.random_range(3..7) {
                let (bw, bh) = (rng.random_range(20..w / 2), rng.random_range(15..h / 2));
                let (x, y) = (rng.random_range(0..w - bw), rng.random_range(0..h - bh));
                rect(
                    img,
                    x as i64,
                    y as i64,
                    bw,
                    bh,
                    jitter(rng, [7, 54, 66], 10),
                );
                for k in 0..(bw / 8) {
                    let bar_h = rng.random_range(2..bh.max(3));
                    rect(
                        img,
                        (x + 2 + k * 8) as i64,
                        (y + bh - bar_h) as i64,
                        5,
                        bar_h,
                        CODE[rng.random_range(0..CODE.len())],
                    );
                }
            }
        }
    }
}

/// Composites `content` onto `img` as a monitor with a dark bezel and a
/// moderate perspective distortion.
fn place_monitor(img: &mut Image, content: &Image, config: &SynthConfig, rng: &mut ChaCha8Rng) {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let sw = rng.random_range(config.screen_scale.0..=config.screen_scale.1) * w;
    let sh = sw * CONTENT_H as f64 / CONTENT_W as f64;
    let cx = rng.random_range((sw * 0.45).min(w / 2.0)..=(w - sw * 0.45).max(w / 2.0));
    let cy = rng.random_range((sh * 0.5).min(h / 2.0)..=(h - sh * 0.6).max(h / 2.0));
    let angle = rng.random_range(-6f64..6.0).to_radians();
    let jit = config.perspective * sw;
    let corner = |ux: f64, uy: f64, rng: &mut ChaCha8Rng| {
        let (dx, dy) = (ux * sw / 2.0, uy * sh / 2.0);
        let (c, s) = (angle.cos(), angle.sin());
        let j = |rng: &mut ChaCha8Rng| {
            if jit > 0.0 {
                rng.random_range(-jit..=jit)
            } else {
                0.0
            }
        };
        Point::new(cx + dx * c - dy * s + j(rng), cy + dx * s + dy * c + j(rng))
    };
    let quad = [
        corner(-1.0, -1.0, rng),
        corner(1.0, -1.0, rng),
        corner(-1.0, 1.0, rng),
        corner(1.0, 1.0, rng),
    ];
    let unit = [
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(0.0, 1.0),
        Point::new(1.0, 1.0),
    ];
    let Some(to_photo) = Homography::from_points(&unit, &quad) else {
        return;
    };
    let Some(to_unit) = to_photo.inverse() else {
        return;
    };

    let bezel = jitter(rng, [28, 28, 30], 10);
    let margin = rng.random_range(0.04..0.08);
    // stand below the bottom edge
    let bottom = to_photo.apply(Point::new(0.5, 1.0 + margin));
    let stand_w = (sw * 0.12) as u32;
    rect(
        img,
        bottom.x as i64 - stand_w as i64 / 2,
        bottom.y as i64,
        stand_w,
        (sh * 0.15) as u32,
        bezel,
    );
    let (cw, ch) = (content.width() as f64, content.height() as f64);
    let xs = quad.iter().map(|p| p.x);
    let ys = quad.iter().map(|p| p.y);
    let pad = margin * sw + 2.0;
    let x0 = (xs.clone().fold(f64::MAX, f64::min) - pad).max(0.0) as u32;
    let x1 = ((xs.fold(f64::MIN, f64::max) + pad).ceil().max(0.0) as u32).min(img.width());
    let y0 = (ys.clone().fold(f64::MAX, f64::min) - pad).max(0.0) as u32;
    let y1 = ((ys.fold(f64::MIN, f64::max) + pad).ceil().max(0.0) as u32).min(img.height());
    let vmargin = margin * sw / sh;
    for y in y0..y1 {
        for x in x0..x1 {
            let u = to_unit.apply(Point::new(x as f64 + 0.5, y as f64 + 0.5));
            if (0.0..1.0).contains(&u.x) && (0.0..1.0).contains(&u.y) {
                img.set(x, y, sample(content, u.x * cw - 0.5, u.y * ch - 0.5));
            } else if (-margin..1.0 + margin).contains(&u.x)
                && (-vmargin..1.0 + vmargin).contains(&u.y)
            {
                img.set(x, y, bezel);
            }
        }
    }
}

fn sample(img: &Image, x: f64, y: f64) -> Rgb {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let px = |dx: i64, dy: i64| {
        img.get(
            (x0 as i64 + dx).clamp(0, w - 1) as u32,
            (y0 as i64 + dy).clamp(0, h - 1) as u32,
        )
    };
    let (a, b, c, d) = (px(0, 0), px(1, 0), px(0, 1), px(1, 1));
    [0, 1, 2].map(|k| {
        let top = a[k] as f64 * (1.0 - fx) + b[k] as f64 * fx;
        let bottom = c[k] as f64 * (1.0 - fx) + d[k] as f64 * fx;
        (top * (1.0 - fy) + bottom * fy).round() as u8
    })
}
