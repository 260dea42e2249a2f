//! Locating and reading a tag in a photograph.
//!
//! The photo is binarized with a global Otsu threshold. Finder candidates
//! come from 1:1:3:1:1 run-length patterns on every row, confirmed by a
//! vertical and a second horizontal cross-check through the candidate
//! center. Candidate triples are ranked by how well they form the right
//! angle of a square symbol; for each, the module grid is mapped from the
//! three finder centers (plus the alignment pattern for version 2) and
//! sampled, then handed to the matrix decoder.

use thiserror::Error;

use super::payload::{payload_decode, DecodedPayload, PayloadError};
use super::qr::{qr_decode_matrix, side_for, QrError};
use crate::features::to_gray;
use crate::geometry::{Homography, Point};
use crate::imaging::{GrayImage, Image};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScanError {
    #[error("no tag found: fewer than three consistent finder patterns")]
    TagNotFound,
    #[error("tag found but could not be decoded: {0}")]
    DecodeFailed(String),
}

impl From<QrError> for ScanError {
    fn from(e: QrError) -> Self {
        ScanError::DecodeFailed(e.to_string())
    }
}

impl From<PayloadError> for ScanError {
    fn from(e: PayloadError) -> Self {
        ScanError::DecodeFailed(e.to_string())
    }
}

/// A successfully read ScreenTag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanResult {
    pub raw: Vec<u8>,
    pub payload: DecodedPayload,
}

/// Reads a ScreenTag from a photo; the payload invariants are enforced.
pub fn scan(photo: &Image) -> Result<ScanResult, ScanError> {
    let raw = scan_qr(photo)?;
    let payload = payload_decode(&raw)?;
    Ok(ScanResult { raw, payload })
}

/// Reads the raw byte payload of any version 1–2, level H symbol.
pub fn scan_qr(photo: &Image) -> Result<Vec<u8>, ScanError> {
    let gray = to_gray(photo);
    let threshold = otsu_threshold(&gray);
    let bin = Binary::new(&gray, threshold);

    let finders = find_finders(&bin);
    let triples = rank_triples(&finders);
    log::trace!(
        "threshold {threshold}, {} finder clusters, {} triples",
        finders.len(),
        triples.len()
    );
    if triples.is_empty() {
        return Err(ScanError::TagNotFound);
    }
    let mut last = ScanError::TagNotFound;
    for t in triples.iter().take(24) {
        for version in t.versions() {
            match read_symbol(&gray, &bin, threshold, t, version) {
                Ok(bytes) => return Ok(bytes),
                Err(e) => last = e,
            }
        }
    }
    Err(match last {
        ScanError::TagNotFound => ScanError::DecodeFailed("no candidate decoded".into()),
        e => e,
    })
}

/// Otsu's between-class-variance maximizing threshold; pixels `<= t` are dark.
pub fn otsu_threshold(gray: &GrayImage) -> u8 {
    let mut hist = [0u64; 256];
    for &v in gray.data() {
        hist[v as usize] += 1;
    }
    let total = gray.data().len() as f64;
    let sum_all: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &c)| i as f64 * c as f64)
        .sum();
    let (mut w0, mut sum0) = (0f64, 0f64);
    let (mut best, mut best_var) = (0u8, -1f64);
    for (t, &count) in hist.iter().enumerate() {
        w0 += count as f64;
        sum0 += t as f64 * count as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let var = w0 * w1 * (m0 - m1) * (m0 - m1);
        if var > best_var {
            best_var = var;
            best = t as u8;
        }
    }
    best
}

struct Binary {
    width: usize,
    height: usize,
    dark: Vec<bool>,
}

impl Binary {
    fn new(gray: &GrayImage, threshold: u8) -> Self {
        Self {
            width: gray.width() as usize,
            height: gray.height() as usize,
            dark: gray.data().iter().map(|&v| v <= threshold).collect(),
        }
    }

    #[inline]
    fn at(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.dark[y as usize * self.width + x as usize]
    }
}

#[derive(Clone, Copy, Debug)]
struct Finder {
    center: Point,
    module: f64,
    hits: u32,
}

/// Accepts five run lengths in a 1:1:3:1:1 ratio.
fn ratio_ok(runs: &[usize; 5]) -> bool {
    let total: usize = runs.iter().sum();
    if total < 7 || runs.contains(&0) {
        return false;
    }
    let unit = total as f64 / 7.0;
    let tol = unit * 0.6;
    (runs[0] as f64 - unit).abs() < tol
        && (runs[1] as f64 - unit).abs() < tol
        && (runs[2] as f64 - 3.0 * unit).abs() < 3.0 * tol
        && (runs[3] as f64 - unit).abs() < tol
        && (runs[4] as f64 - unit).abs() < tol
}

/// Walks from (`x`, `y`) along (`dx`, `dy`) in both directions collecting
/// the five runs centered on the starting dark pixel. Returns the runs and
/// the center of the middle run along the walk axis.
fn cross_runs(
    bin: &Binary,
    x: i64,
    y: i64,
    dx: i64,
    dy: i64,
    max_run: usize,
) -> Option<([usize; 5], f64)> {
    if !bin.at(x, y) {
        return None;
    }
    let limit = max_run as i64 + 1;
    // first step index past a run of `dark` pixels starting at `from`
    let run_end = |from: i64, sign: i64, dark: bool| -> i64 {
        let mut step = from;
        while step - from <= limit && bin.at(x + sign * step * dx, y + sign * step * dy) == dark {
            step += 1;
        }
        step
    };
    let up2 = run_end(0, -1, true);
    let up1 = run_end(up2, -1, false);
    let up0 = run_end(up1, -1, true);
    let dn2 = run_end(0, 1, true);
    let dn3 = run_end(dn2, 1, false);
    let dn4 = run_end(dn3, 1, true);
    let runs = [
        (up0 - up1) as usize,
        (up1 - up2) as usize,
        (up2 + dn2 - 1) as usize,
        (dn3 - dn2) as usize,
        (dn4 - dn3) as usize,
    ];
    if runs.iter().any(|&r| r > max_run) || !ratio_ok(&runs) {
        return None;
    }
    let origin = if dx != 0 { x } else { y } as f64;
    Some((runs, origin + (dn2 - up2 + 1) as f64 / 2.0))
}

fn find_finders(bin: &Binary) -> Vec<Finder> {
    let mut found: Vec<Finder> = Vec::new();
    let max_run = bin.width.max(bin.height) / 4;
    for y in 0..bin.height {
        let row = &bin.dark[y * bin.width..(y + 1) * bin.width];
        let mut runs: Vec<(usize, usize)> = Vec::new(); // (start, len)
        let mut start = 0;
        for x in 1..=bin.width {
            if x == bin.width || row[x] != row[start] {
                runs.push((start, x - start));
                start = x;
            }
        }
        let first_dark = if row[0] { 0 } else { 1 };
        let mut i = first_dark;
        while i + 4 < runs.len() {
            let lens = [
                runs[i].1,
                runs[i + 1].1,
                runs[i + 2].1,
                runs[i + 3].1,
                runs[i + 4].1,
            ];
            if ratio_ok(&lens) {
                let cx = runs[i + 2].0 as f64 + runs[i + 2].1 as f64 / 2.0;
                if let Some(f) = confirm(bin, cx, y as f64 + 0.5, lens.iter().sum(), max_run) {
                    merge(&mut found, f);
                }
            }
            i += 2;
        }
    }
    found
}

/// Vertical then horizontal cross-check through a horizontal hit.
fn confirm(bin: &Binary, cx: f64, cy: f64, h_total: usize, max_run: usize) -> Option<Finder> {
    let (v_runs, vy) = cross_runs(bin, cx as i64, cy as i64, 0, 1, max_run)?;
    let v_total: usize = v_runs.iter().sum();
    if (v_total as f64 - h_total as f64).abs() > 0.5 * h_total as f64 {
        return None;
    }
    let (h_runs, hx) = cross_runs(bin, cx as i64, vy as i64, 1, 0, max_run)?;
    let h_total2: usize = h_runs.iter().sum();
    if (h_total2 as f64 - v_total as f64).abs() > 0.5 * v_total as f64 {
        return None;
    }
    let module = (v_total + h_total2) as f64 / 14.0;
    Some(Finder {
        center: Point::new(hx, vy),
        module,
        hits: 1,
    })
}

fn merge(found: &mut Vec<Finder>, f: Finder) {
    for g in found.iter_mut() {
        let close = g.center.dist(f.center) < 2.0 * g.module.max(f.module);
        let similar = (g.module / f.module).max(f.module / g.module) < 1.6;
        if close && similar {
            let n = g.hits as f64;
            g.center = Point::new(
                (g.center.x * n + f.center.x) / (n + 1.0),
                (g.center.y * n + f.center.y) / (n + 1.0),
            );
            g.module = (g.module * n + f.module) / (n + 1.0);
            g.hits += 1;
            return;
        }
    }
    found.push(f);
}

#[derive(Clone, Copy, Debug)]
struct Triple {
    top_left: Point,
    top_right: Point,
    bottom_left: Point,
    module: f64,
    /// Estimated symbol side in modules.
    dimension: f64,
    score: f64,
}

impl Triple {
    /// Versions to try, most likely first.
    fn versions(&self) -> [u8; 2] {
        if (self.dimension - 21.0).abs() <= (self.dimension - 25.0).abs() {
            [1, 2]
        } else {
            [2, 1]
        }
    }
}

/// Candidate finders considered when forming triples, by descending hit count.
const MAX_FINDER_POOL: usize = 40;

fn rank_triples(finders: &[Finder]) -> Vec<Triple> {
    let mut pool: Vec<Finder> = finders.iter().filter(|f| f.hits >= 2).copied().collect();
    if pool.len() < 3 {
        pool = finders.to_vec();
    }
    pool.sort_by_key(|f| std::cmp::Reverse(f.hits));
    pool.truncate(MAX_FINDER_POOL);
    let mut out = Vec::new();
    for i in 0..pool.len() {
        for j in i + 1..pool.len() {
            for k in j + 1..pool.len() {
                if let Some(t) = make_triple(&pool[i], &pool[j], &pool[k]) {
                    out.push(t);
                }
            }
        }
    }
    out.sort_by(|a, b| a.score.total_cmp(&b.score));
    out
}

fn make_triple(a: &Finder, b: &Finder, c: &Finder) -> Option<Triple> {
    let modules = [a.module, b.module, c.module];
    let (mn, mx) = modules
        .iter()
        .fold((f64::MAX, 0f64), |(lo, hi), &m| (lo.min(m), hi.max(m)));
    if mx / mn > 1.6 {
        return None;
    }
    let (ab, ac, bc) = (
        a.center.dist(b.center),
        a.center.dist(c.center),
        b.center.dist(c.center),
    );
    // the corner opposite the longest side is the top-left finder
    let (tl, p, q) = if bc >= ab && bc >= ac {
        (a, b, c)
    } else if ac >= ab && ac >= bc {
        (b, a, c)
    } else {
        (c, a, b)
    };
    let (u, v) = (p.center.sub(tl.center), q.center.sub(tl.center));
    let (lu, lv) = (u.dot(u).sqrt(), v.dot(v).sqrt());
    if lu == 0.0 || lv == 0.0 || (lu / lv).max(lv / lu) > 1.4 {
        return None;
    }
    let cos = u.dot(v) / (lu * lv);
    if cos.abs() > 0.35 {
        return None;
    }
    let module = (a.module + b.module + c.module) / 3.0;
    let dimension = (lu + lv) / 2.0 / module + 7.0;
    if !(16.0..=30.0).contains(&dimension) {
        return None;
    }
    let (top_right, bottom_left) = if u.cross(v) > 0.0 { (p, q) } else { (q, p) };
    let nearest = (dimension - 21.0).abs().min((dimension - 25.0).abs());
    let score =
        cos.abs() + (lu / lv).ln().abs() + nearest / 4.0 + 1.0 / (a.hits + b.hits + c.hits) as f64;
    Some(Triple {
        top_left: tl.center,
        top_right: top_right.center,
        bottom_left: bottom_left.center,
        module,
        dimension,
        score,
    })
}

fn read_symbol(
    gray: &GrayImage,
    bin: &Binary,
    threshold: u8,
    t: &Triple,
    version: u8,
) -> Result<Vec<u8>, ScanError> {
    let side = side_for(version) as f64;
    let src = [
        Point::new(3.5, 3.5),
        Point::new(side - 3.5, 3.5),
        Point::new(3.5, side - 3.5),
    ];
    let dst = [t.top_left, t.top_right, t.bottom_left];
    let affine = Homography::affine(&src, &dst).ok_or(ScanError::TagNotFound)?;
    let transform = if version == 2 {
        refine_with_alignment(bin, &affine, &src, &dst, side).unwrap_or(affine)
    } else {
        affine
    };
    let n = side as usize;
    let probe = (t.module * 0.2).max(0.5);
    let mut modules = vec![false; n * n];
    for r in 0..n {
        for c in 0..n {
            let p = transform.apply(Point::new(c as f64 + 0.5, r as f64 + 0.5));
            modules[r * n + c] = sample_dark(gray, threshold, p, probe);
        }
    }
    Ok(qr_decode_matrix(&modules, n)?)
}

/// Mean of five gray samples around `p`, compared with the threshold.
fn sample_dark(gray: &GrayImage, threshold: u8, p: Point, probe: f64) -> bool {
    let (w, h) = (gray.width() as f64, gray.height() as f64);
    let mut sum = 0.0;
    for (dx, dy) in [
        (0.0, 0.0),
        (-probe, 0.0),
        (probe, 0.0),
        (0.0, -probe),
        (0.0, probe),
    ] {
        let (x, y) = (p.x + dx, p.y + dy);
        sum += if x < 0.0 || y < 0.0 || x >= w || y >= h {
            255.0
        } else {
            gray.get(x as u32, y as u32) as f64
        };
    }
    sum / 5.0 <= threshold as f64
}

/// Locates the version-2 alignment pattern near its affine prediction and
/// returns the four-point homography through it.
fn refine_with_alignment(
    bin: &Binary,
    affine: &Homography,
    src: &[Point; 3],
    dst: &[Point; 3],
    side: f64,
) -> Option<Homography> {
    let target = Point::new(side - 6.5, side - 6.5);
    let predicted = affine.apply(target);
    let ex = affine
        .apply(target.add(Point::new(1.0, 0.0)))
        .sub(predicted);
    let ey = affine
        .apply(target.add(Point::new(0.0, 1.0)))
        .sub(predicted);
    let module = (ex.dot(ex).sqrt() + ey.dot(ey).sqrt()) / 2.0;
    let radius = (module * 3.0).ceil() as i64;
    let mut best: Option<(u32, f64, Point)> = None;
    for oy in -radius..=radius {
        for ox in -radius..=radius {
            let c = predicted.add(Point::new(ox as f64, oy as f64));
            let mut score = 0;
            for my in -2i64..=2 {
                for mx in -2i64..=2 {
                    let q = c.add(Point::new(
                        ex.x * mx as f64 + ey.x * my as f64,
                        ex.y * mx as f64 + ey.y * my as f64,
                    ));
                    let want_dark = mx.abs().max(my.abs()) != 1;
                    if bin.at(q.x.floor() as i64, q.y.floor() as i64) == want_dark {
                        score += 1;
                    }
                }
            }
            let dist = (ox * ox + oy * oy) as f64;
            if best.is_none_or(|(s, d, _)| score > s || (score == s && dist < d)) {
                best = Some((score, dist, c));
            }
        }
    }
    let (score, _, found) = best?;
    if score < 22 {
        return None;
    }
    Homography::from_points(
        &[src[0], src[1], src[2], target],
        &[dst[0], dst[1], dst[2], found],
    )
}
