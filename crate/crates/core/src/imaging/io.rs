use std::fs;
use std::io::BufWriter;
use std::path::Path;

use super::{Image, ImagingError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Ppm,
    Png,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "ppm" | "pnm" => Some(Self::Ppm),
            "png" => Some(Self::Png),
            _ => None,
        }
    }
}

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];

/// Reads a binary PPM (P6) or PNG file. The format is sniffed from content.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image, ImagingError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => ImagingError::FileNotFound(path.display().to_string()),
        _ => ImagingError::Io(e),
    })?;
    if bytes.starts_with(b"P6") {
        decode_ppm(&bytes)
    } else if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(&bytes)
    } else {
        Err(ImagingError::UnsupportedFormat(format!(
            "{}: not a P6 PPM or PNG",
            path.display()
        )))
    }
}

/// Writes `image` as P6 or PNG depending on the file extension.
pub fn save_image(image: &Image, path: impl AsRef<Path>) -> Result<(), ImagingError> {
    let path = path.as_ref();
    let format = ImageFormat::from_path(path).ok_or_else(|| {
        ImagingError::UnsupportedFormat(format!("{}: unknown extension", path.display()))
    })?;
    let bytes = match format {
        ImageFormat::Ppm => encode_ppm(image),
        ImageFormat::Png => encode_png(image)?,
    };
    fs::write(path, bytes)?;
    Ok(())
}

pub(crate) fn encode_ppm(image: &Image) -> Vec<u8> {
    let header = format!("P6\n{} {}\n255\n", image.width(), image.height());
    let mut out = Vec::with_capacity(header.len() + image.pixels().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(image.pixels());
    out
}

pub(crate) fn decode_ppm(bytes: &[u8]) -> Result<Image, ImagingError> {
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(ImagingError::CorruptHeader("truncated header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(ImagingError::CorruptHeader(format!(
                "expected integer at byte {start}"
            )));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| ImagingError::CorruptHeader(format!("integer out of range: {text}")))?;
    }
    // exactly one whitespace byte separates maxval from the raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(ImagingError::CorruptHeader(
            "missing whitespace after maxval".into(),
        ));
    }
    pos += 1;

    let [width, height, maxval] = fields;
    if width == 0 || height == 0 || width > u32::MAX as u64 || height > u32::MAX as u64 {
        return Err(ImagingError::CorruptHeader(format!(
            "bad dimensions {width}x{height}"
        )));
    }
    if maxval > 255 {
        return Err(ImagingError::UnsupportedFormat(format!(
            "maxval {maxval}: only 8-bit PPM is supported"
        )));
    }
    if maxval == 0 {
        return Err(ImagingError::CorruptHeader("maxval 0".into()));
    }
    let len = (width * height * 3) as usize;
    let raster = bytes.get(pos..pos + len).ok_or_else(|| {
        ImagingError::CorruptHeader(format!("truncated raster: expected {len} bytes"))
    })?;
    let pixels = if maxval == 255 {
        raster.to_vec()
    } else {
        raster
            .iter()
            .map(|&v| {
                ((v.min(maxval as u8) as u32 * 255 + maxval as u32 / 2) / maxval as u32) as u8
            })
            .collect()
    };
    Image::new(width as u32, height as u32, pixels)
}

fn encode_png(image: &Image) -> Result<Vec<u8>, ImagingError> {
    let mut out = Vec::new();
    {
        let mut encoder =
            png::Encoder::new(BufWriter::new(&mut out), image.width(), image.height());
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| ImagingError::Io(std::io::Error::other(e)))?;
        writer
            .write_image_data(image.pixels())
            .map_err(|e| ImagingError::Io(std::io::Error::other(e)))?;
        writer
            .finish()
            .map_err(|e| ImagingError::Io(std::io::Error::other(e)))?;
    }
    Ok(out)
}

fn decode_png(bytes: &[u8]) -> Result<Image, ImagingError> {
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder
        .read_info()
        .map_err(|e| ImagingError::CorruptHeader(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| ImagingError::CorruptHeader(e.to_string()))?;
    buf.truncate(info.buffer_size());
    let (w, h) = (info.width, info.height);
    let pixels = match info.color_type {
        png::ColorType::Rgb => buf,
        png::ColorType::Rgba => buf
            .chunks_exact(4)
            .flat_map(|p| [p[0], p[1], p[2]])
            .collect(),
        png::ColorType::Grayscale => buf.iter().flat_map(|&g| [g, g, g]).collect(),
        png::ColorType::GrayscaleAlpha => buf
            .chunks_exact(2)
            .flat_map(|p| [p[0], p[0], p[0]])
            .collect(),
        png::ColorType::Indexed => {
            return Err(ImagingError::UnsupportedFormat(
                "unexpanded palette PNG".into(),
            ));
        }
    };
    Image::new(w, h, pixels)
}
