//! QR Code model 2, versions 1 and 2, error-correction level H, byte mode.
//!
//! Both versions hold a single Reed–Solomon block (v1: 9 data + 17 EC
//! codewords, v2: 16 + 28), so no interleaving is needed.

use thiserror::Error;

use super::rs::{rs_decode, rs_encode, RsError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QrError {
    #[error("payload of {0} bytes does not fit QR version 2 at level H (max 14)")]
    PayloadTooLarge(usize),
    #[error("unsupported symbol size {0}; expected 21 or 25 modules")]
    UnsupportedSize(usize),
    #[error("format information unreadable")]
    FormatInfoUnreadable,
    #[error("codewords uncorrectable")]
    Uncorrectable,
    #[error("bad segment header: {0}")]
    BadSegmentHeader(String),
}

impl From<RsError> for QrError {
    fn from(_: RsError) -> Self {
        QrError::Uncorrectable
    }
}

/// Level H indicator bits in the format word.
const EC_LEVEL_H: u16 = 0b10;
const FORMAT_MASK: u16 = 0x5412;
const FORMAT_GENERATOR: u16 = 0x537;
const MODE_BYTE: u32 = 0b0100;

#[derive(Clone, Copy, Debug)]
struct Layout {
    data_codewords: usize,
    ec_codewords: usize,
}

fn layout(version: u8) -> Layout {
    match version {
        1 => Layout {
            data_codewords: 9,
            ec_codewords: 17,
        },
        2 => Layout {
            data_codewords: 16,
            ec_codewords: 28,
        },
        _ => unreachable!("only versions 1 and 2 are supported"),
    }
}

pub fn side_for(version: u8) -> usize {
    17 + 4 * version as usize
}

/// Largest byte-mode payload for a version at level H.
pub fn capacity(version: u8) -> usize {
    (layout(version).data_codewords * 8 - 12) / 8
}

/// A QR symbol as a square grid of modules (`true` = dark).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QrMatrix {
    version: u8,
    mask_id: u8,
    modules: Vec<bool>,
}

impl QrMatrix {
    pub fn version(&self) -> u8 {
        self.version
    }

    pub fn mask_id(&self) -> u8 {
        self.mask_id
    }

    pub fn side(&self) -> usize {
        side_for(self.version)
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.modules[row * self.side() + col]
    }

    /// Row-major module grid.
    pub fn modules(&self) -> &[bool] {
        &self.modules
    }
}

/// Scratch grid used while building a symbol.
struct Grid {
    side: usize,
    dark: Vec<bool>,
    function: Vec<bool>,
}

impl Grid {
    fn new(version: u8) -> Self {
        let side = side_for(version);
        let mut g = Grid {
            side,
            dark: vec![false; side * side],
            function: vec![false; side * side],
        };
        g.draw_function_patterns(version);
        g
    }

    fn set_function(&mut self, row: usize, col: usize, dark: bool) {
        let i = row * self.side + col;
        self.dark[i] = dark;
        self.function[i] = true;
    }

    fn draw_function_patterns(&mut self, version: u8) {
        let side = self.side;
        for i in 0..side {
            self.set_function(6, i, i % 2 == 0);
            self.set_function(i, 6, i % 2 == 0);
        }
        for (r, c) in [(3, 3), (3, side - 4), (side - 4, 3)] {
            self.draw_finder(r, c);
        }
        if version == 2 {
            self.draw_alignment(18, 18);
        }
        // reserve both format areas; real bits are written per mask
        self.draw_format_bits(0);
    }

    /// Finder plus its one-module light separator, clipped to the grid.
    fn draw_finder(&mut self, row: usize, col: usize) {
        for dy in -4i64..=4 {
            for dx in -4i64..=4 {
                let (r, c) = (row as i64 + dy, col as i64 + dx);
                if (0..self.side as i64).contains(&r) && (0..self.side as i64).contains(&c) {
                    let d = dx.abs().max(dy.abs());
                    self.set_function(r as usize, c as usize, d != 2 && d != 4);
                }
            }
        }
    }

    fn draw_alignment(&mut self, row: usize, col: usize) {
        for dy in -2i64..=2 {
            for dx in -2i64..=2 {
                let d = dx.abs().max(dy.abs());
                self.set_function(
                    (row as i64 + dy) as usize,
                    (col as i64 + dx) as usize,
                    d != 1,
                );
            }
        }
    }

    fn draw_format_bits(&mut self, mask: u8) {
        let bits = format_word(mask);
        let side = self.side;
        let bit = |i: usize| (bits >> i) & 1 != 0;
        for (i, (r, c)) in format_positions_primary().into_iter().enumerate() {
            self.set_function(r, c, bit(i));
        }
        for (i, (r, c)) in format_positions_secondary(side).into_iter().enumerate() {
            self.set_function(r, c, bit(i));
        }
        self.set_function(side - 8, 8, true);
    }

    fn place_codewords(&mut self, codewords: &[u8]) {
        let total_bits = codewords.len() * 8;
        let mut i = 0;
        for (r, c) in data_positions(self.side, &self.function) {
            if i < total_bits {
                self.dark[r * self.side + c] = (codewords[i >> 3] >> (7 - (i & 7))) & 1 != 0;
                i += 1;
            }
        }
        debug_assert_eq!(i, total_bits);
    }

    fn apply_mask(&mut self, mask: u8) {
        for r in 0..self.side {
            for c in 0..self.side {
                let i = r * self.side + c;
                if !self.function[i] && mask_bit(mask, r, c) {
                    self.dark[i] ^= true;
                }
            }
        }
    }
}

/// 15-bit format word for level H and `mask`, BCH(15,5) encoded and masked.
pub fn format_word(mask: u8) -> u16 {
    let data = (EC_LEVEL_H << 3) | mask as u16;
    let mut rem = data << 10;
    for i in (10..15).rev() {
        if (rem >> i) & 1 != 0 {
            rem ^= FORMAT_GENERATOR << (i - 10);
        }
    }
    ((data << 10) | rem) ^ FORMAT_MASK
}

/// (row, col) of format bit i around the top-left finder.
fn format_positions_primary() -> [(usize, usize); 15] {
    let mut p = [(0, 0); 15];
    for (i, slot) in p.iter_mut().enumerate().take(6) {
        *slot = (i, 8);
    }
    p[6] = (7, 8);
    p[7] = (8, 8);
    p[8] = (8, 7);
    for i in 9..15 {
        p[i] = (8, 14 - i);
    }
    p
}

/// (row, col) of format bit i in the split copy (top-right and bottom-left).
fn format_positions_secondary(side: usize) -> [(usize, usize); 15] {
    let mut p = [(0, 0); 15];
    for (i, slot) in p.iter_mut().enumerate().take(8) {
        *slot = (8, side - 1 - i);
    }
    for i in 8..15 {
        p[i] = (side - 15 + i, 8);
    }
    p
}

/// Data module positions in placement order: two-column zigzag from the
/// bottom-right corner, skipping the vertical timing column.
fn data_positions(side: usize, function: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut right = side as i64 - 1;
    while right >= 1 {
        if right == 6 {
            right = 5;
        }
        let upward = ((right + 1) & 2) == 0;
        for vert in 0..side {
            let r = if upward { side - 1 - vert } else { vert };
            for j in 0..2 {
                let c = (right - j) as usize;
                if !function[r * side + c] {
                    out.push((r, c));
                }
            }
        }
        right -= 2;
    }
    out
}

fn mask_bit(mask: u8, r: usize, c: usize) -> bool {
    match mask {
        0 => (r + c) % 2 == 0,
        1 => r % 2 == 0,
        2 => c % 3 == 0,
        3 => (r + c) % 3 == 0,
        4 => (r / 2 + c / 3) % 2 == 0,
        5 => (r * c) % 2 + (r * c) % 3 == 0,
        6 => ((r * c) % 2 + (r * c) % 3) % 2 == 0,
        7 => ((r + c) % 2 + (r * c) % 3) % 2 == 0,
        _ => unreachable!("mask ids are 0..8"),
    }
}

/// Byte-mode bit stream with terminator and 0xEC/0x11 padding.
fn data_codewords(payload: &[u8], version: u8) -> Vec<u8> {
    let capacity_bits = layout(version).data_codewords * 8;
    let mut bits: Vec<bool> = Vec::with_capacity(capacity_bits);
    let mut push = |value: u32, len: usize| {
        for i in (0..len).rev() {
            bits.push((value >> i) & 1 != 0);
        }
    };
    push(MODE_BYTE, 4);
    push(payload.len() as u32, 8);
    for &b in payload {
        push(b as u32, 8);
    }
    let terminator = (capacity_bits - bits.len()).min(4);
    bits.extend(std::iter::repeat_n(false, terminator));
    while bits.len() % 8 != 0 {
        bits.push(false);
    }
    let mut bytes: Vec<u8> = bits
        .chunks(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | b as u8))
        .collect();
    for pad in [0xEC, 0x11].into_iter().cycle() {
        if bytes.len() >= layout(version).data_codewords {
            break;
        }
        bytes.push(pad);
    }
    bytes
}

/// Smallest version (1 or 2) that holds `len` bytes at level H.
pub fn version_for(len: usize, min_version: u8) -> Result<u8, QrError> {
    (min_version.max(1)..=2)
        .find(|&v| len <= capacity(v))
        .ok_or(QrError::PayloadTooLarge(len))
}

/// Builds a symbol with a specific mask.
pub fn qr_encode_with_mask(payload: &[u8], version: u8, mask: u8) -> Result<QrMatrix, QrError> {
    if !(1..=2).contains(&version) || payload.len() > capacity(version) {
        return Err(QrError::PayloadTooLarge(payload.len()));
    }
    assert!(mask < 8, "mask id out of range");
    let info = layout(version);
    let mut codewords = data_codewords(payload, version);
    let ec = rs_encode(&codewords, info.ec_codewords);
    codewords.extend(ec);

    let mut grid = Grid::new(version);
    grid.place_codewords(&codewords);
    grid.apply_mask(mask);
    grid.draw_format_bits(mask);
    Ok(QrMatrix {
        version,
        mask_id: mask,
        modules: grid.dark,
    })
}

/// Encodes `payload` in byte mode at level H, choosing the smallest version
/// and the mask with the lowest penalty (lowest id on ties).
pub fn qr_encode(payload: &[u8]) -> Result<QrMatrix, QrError> {
    qr_encode_min_version(payload, 1)
}

pub fn qr_encode_min_version(payload: &[u8], min_version: u8) -> Result<QrMatrix, QrError> {
    let version = version_for(payload.len(), min_version)?;
    let mut best: Option<(u32, QrMatrix)> = None;
    for mask in 0..8 {
        let m = qr_encode_with_mask(payload, version, mask)?;
        let score = penalty_score(&m);
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, m));
        }
    }
    Ok(best.expect("eight candidates").1)
}

/// The four standard mask-evaluation penalties summed.
///
/// N1: each run of ≥5 same-colored modules in a row or column scores 3 plus
/// the excess over 5. N2: each 2×2 same-colored block scores 3. N3: each
/// occurrence of 1011101 with four light modules on one side, fully inside
/// the symbol, scores 40. N4: 10 points per 5% the dark proportion deviates
/// from 50%.
pub fn penalty_score(m: &QrMatrix) -> u32 {
    let side = m.side();
    let at = |r: usize, c: usize| m.get(r, c);
    let mut score = 0u32;

    let lines: Vec<Vec<bool>> = (0..side)
        .map(|r| (0..side).map(|c| at(r, c)).collect())
        .chain((0..side).map(|c| (0..side).map(|r| at(r, c)).collect()))
        .collect();

    for line in &lines {
        let mut run = 1;
        for i in 1..=side {
            if i < side && line[i] == line[i - 1] {
                run += 1;
            } else {
                if run >= 5 {
                    score += 3 + (run - 5) as u32;
                }
                run = 1;
            }
        }
    }

    for r in 0..side - 1 {
        for c in 0..side - 1 {
            let v = at(r, c);
            if at(r, c + 1) == v && at(r + 1, c) == v && at(r + 1, c + 1) == v {
                score += 3;
            }
        }
    }

    const FINDER_LEFT: [bool; 11] = [
        true, false, true, true, true, false, true, false, false, false, false,
    ];
    const FINDER_RIGHT: [bool; 11] = [
        false, false, false, false, true, false, true, true, true, false, true,
    ];
    for line in &lines {
        for window in line.windows(11) {
            if window == FINDER_LEFT || window == FINDER_RIGHT {
                score += 40;
            }
        }
    }

    let dark = m.modules.iter().filter(|&&d| d).count() as i64;
    let total = (side * side) as i64;
    let k = (20 * dark - 10 * total).abs() / total;
    score += 10 * k as u32;
    score
}

fn hamming(a: u16, b: u16) -> u32 {
    (a ^ b).count_ones()
}

/// Nearest valid level-H format word within 3 bit errors.
fn decode_format(bits: u16) -> Option<u8> {
    (0..8u8)
        .map(|mask| (hamming(bits, format_word(mask)), mask))
        .min()
        .filter(|(d, _)| *d <= 3)
        .map(|(_, mask)| mask)
}

/// Decodes a module grid (row-major, `true` = dark) back to its payload.
pub fn qr_decode_matrix(modules: &[bool], side: usize) -> Result<Vec<u8>, QrError> {
    let version = match side {
        21 => 1,
        25 => 2,
        other => return Err(QrError::UnsupportedSize(other)),
    };
    if modules.len() != side * side {
        return Err(QrError::UnsupportedSize(side));
    }
    let at = |(r, c): (usize, usize)| modules[r * side + c];
    let read = |positions: [(usize, usize); 15]| {
        positions
            .iter()
            .enumerate()
            .fold(0u16, |acc, (i, &p)| acc | ((at(p) as u16) << i))
    };
    let mask = decode_format(read(format_positions_primary()))
        .or_else(|| decode_format(read(format_positions_secondary(side))))
        .ok_or(QrError::FormatInfoUnreadable)?;

    let template = Grid::new(version);
    let info = layout(version);
    let total = info.data_codewords + info.ec_codewords;
    let mut codewords = vec![0u8; total];
    for (i, (r, c)) in data_positions(side, &template.function)
        .into_iter()
        .enumerate()
        .take(total * 8)
    {
        let bit = at((r, c)) ^ mask_bit(mask, r, c);
        codewords[i >> 3] |= (bit as u8) << (7 - (i & 7));
    }
    let data = rs_decode(&codewords, info.ec_codewords)?;
    parse_byte_segment(&data)
}

fn parse_byte_segment(data: &[u8]) -> Result<Vec<u8>, QrError> {
    let bit = |i: usize| (data[i >> 3] >> (7 - (i & 7))) & 1;
    let read = |start: usize, len: usize| {
        (start..start + len).fold(0u32, |acc, i| (acc << 1) | bit(i) as u32)
    };
    let mode = read(0, 4);
    if mode != MODE_BYTE {
        return Err(QrError::BadSegmentHeader(format!(
            "mode {mode:04b} is not byte mode"
        )));
    }
    let count = read(4, 8) as usize;
    if 12 + count * 8 > data.len() * 8 {
        return Err(QrError::BadSegmentHeader(format!(
            "count {count} exceeds capacity"
        )));
    }
    Ok((0..count).map(|k| read(12 + 8 * k, 8) as u8).collect())
}
