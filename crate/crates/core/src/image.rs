//! Channel-major image buffers and uncompressed PPM/PGM/BMP codecs.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// A `width x height x channels` byte image stored plane by plane:
/// sample `(x, y, c)` lives at `c * width * height + y * width + x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Empty);
        }
        if channels != 1 && channels != 3 {
            return Err(Error::ImageFormat(format!(
                "unsupported channel count {channels}"
            )));
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height}x{channels} needs {expected} bytes, got {}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Result<Self> {
        Self::new(width, height, channels, vec![0; width * height * channels])
    }

    /// Builds an image from a sample function `f(x, y, c)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        f: impl Fn(usize, usize, usize) -> u8,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    /// Converts interleaved samples (`RGBRGB...`) to a channel-major buffer.
    pub fn from_interleaved(
        width: usize,
        height: usize,
        channels: usize,
        samples: &[u8],
    ) -> Result<Self> {
        if samples.len() != width * height * channels {
            return Err(Error::Truncated {
                expected: width * height * channels,
                found: samples.len(),
            });
        }
        let plane = width * height;
        let mut data = vec![0u8; plane * channels];
        for (i, px) in samples.chunks_exact(channels).enumerate() {
            for (c, &v) in px.iter().enumerate() {
                data[c * plane + i] = v;
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn to_interleaved(&self) -> Vec<u8> {
        let plane = self.plane_len();
        let mut out = Vec::with_capacity(self.data.len());
        for i in 0..plane {
            for c in 0..self.channels {
                out.push(self.data[c * plane + i]);
            }
        }
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn plane_len(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn plane(&self, c: usize) -> &[u8] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[c * self.plane_len() + y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, c: usize, v: u8) {
        let n = self.plane_len();
        self.data[c * n + y * self.width + x] = v;
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn is_square(&self) -> bool {
        self.width == self.height
    }

    /// Zero-pads to an `N x N` image with `N = max(width, height)`, keeping
    /// the original pixels at the top-left.
    pub fn pad_to_square(&self) -> ImageBuffer {
        if self.is_square() {
            return self.clone();
        }
        let n = self.width.max(self.height);
        let mut out = ImageBuffer::zeros(n, n, self.channels).expect("nonzero dims");
        for c in 0..self.channels {
            for y in 0..self.height {
                let src = c * self.plane_len() + y * self.width;
                let dst = c * n * n + y * n;
                out.data[dst..dst + self.width].copy_from_slice(&self.data[src..src + self.width]);
            }
        }
        out
    }

    /// Top-left `width x height` crop; the inverse of [`pad_to_square`](Self::pad_to_square).
    pub fn crop(&self, width: usize, height: usize) -> Result<ImageBuffer> {
        if width > self.width || height > self.height {
            return Err(Error::DimensionMismatch(format!(
                "cannot crop {}x{} to {width}x{height}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(width * height * self.channels);
        for c in 0..self.channels {
            for y in 0..height {
                let src = c * self.plane_len() + y * self.width;
                data.extend_from_slice(&self.data[src..src + width]);
            }
        }
        ImageBuffer::new(width, height, self.channels, data)
    }
}

fn lattice_hash(seed: u64, c: u64, x: u64, y: u64) -> f64 {
    let mut z = seed
        ^ c.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ x.wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ y.wrapping_mul(0x1656_67B1_9E37_79F9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

fn value_noise(seed: u64, c: u64, x: f64, y: f64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (sx, sy) = (fx * fx * (3.0 - 2.0 * fx), fy * fy * (3.0 - 2.0 * fy));
    let (ix, iy) = (x0 as u64, y0 as u64);
    let v = |dx: u64, dy: u64| lattice_hash(seed, c, ix + dx, iy + dy);
    let top = v(0, 0) + (v(1, 0) - v(0, 0)) * sx;
    let bottom = v(0, 1) + (v(1, 1) - v(0, 1)) * sx;
    top + (bottom - top) * sy
}

/// Deterministic natural-looking test image: smooth multi-scale value noise
/// with a little per-pixel grain. Neighbouring pixels are strongly
/// correlated and the histogram covers most of the byte range.
pub fn synthetic_scene(width: usize, height: usize, channels: usize, seed: u64) -> Result<ImageBuffer> {
    const OCTAVES: [(f64, f64); 4] = [(96.0, 0.5), (32.0, 0.27), (10.0, 0.15), (3.0, 0.08)];
    ImageBuffer::from_fn(width, height, channels, |x, y, c| {
        let (fx, fy) = (x as f64, y as f64);
        let mut v = 0.0;
        for (o, &(scale, weight)) in OCTAVES.iter().enumerate() {
            v += weight * value_noise(seed.wrapping_add(o as u64), c as u64, fx / scale, fy / scale);
        }
        let grain = lattice_hash(seed ^ 0xA5A5, c as u64, x as u64, y as u64) - 0.5;
        // contrast stretch around mid-grey
        let s = 128.0 + (v - 0.5) * 420.0 + grain * 12.0;
        s.round().clamp(0.0, 255.0) as u8
    })
}

/// On-disk image formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    /// Binary PPM (`P6`), 3 channels.
    Ppm,
    /// Binary PGM (`P5`), 1 channel.
    Pgm,
    /// Uncompressed 24-bit BMP.
    Bmp,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "ppm" => Some(Self::Ppm),
            "pgm" => Some(Self::Pgm),
            "bmp" => Some(Self::Bmp),
            _ => None,
        }
    }

    /// A natural format for an image with `channels` channels.
    pub fn netpbm_for(channels: usize) -> Self {
        if channels == 1 {
            Self::Pgm
        } else {
            Self::Ppm
        }
    }
}

pub fn load_image(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let bytes = fs::read(path.as_ref())?;
    decode_image(&bytes)
}

/// Writes `img`; the format comes from the file extension unless given.
pub fn save_image(
    img: &ImageBuffer,
    path: impl AsRef<Path>,
    format: Option<ImageFormat>,
) -> Result<()> {
    let path = path.as_ref();
    let format = match format.or_else(|| ImageFormat::from_path(path)) {
        Some(f) => f,
        None => ImageFormat::netpbm_for(img.channels()),
    };
    let bytes = encode_image(img, format)?;
    fs::write(path, bytes)?;
    Ok(())
}

/// Sniffs the magic bytes and decodes.
pub fn decode_image(bytes: &[u8]) -> Result<ImageBuffer> {
    match bytes {
        [b'P', b'6', ..] | [b'P', b'5', ..] => decode_netpbm(bytes),
        [b'B', b'M', ..] => decode_bmp(bytes),
        _ => Err(Error::ImageFormat(
            "unrecognised file (expected P5/P6 netpbm or BMP)".into(),
        )),
    }
}

pub fn encode_image(img: &ImageBuffer, format: ImageFormat) -> Result<Vec<u8>> {
    match format {
        ImageFormat::Ppm | ImageFormat::Pgm => encode_netpbm(img, format),
        ImageFormat::Bmp => encode_bmp(img),
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::ImageFormat("corrupt netpbm header".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::ImageFormat("corrupt netpbm header".into()))
    }
}

fn decode_netpbm(bytes: &[u8]) -> Result<ImageBuffer> {
    let channels = if bytes[1] == b'6' { 3 } else { 1 };
    let mut r = HeaderReader { bytes, pos: 2 };
    let width = r.number()?;
    let height = r.number()?;
    let maxval = r.number()?;
    if maxval != 255 {
        return Err(Error::ImageFormat(format!(
            "only 8-bit netpbm supported (maxval {maxval})"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    if r.pos >= bytes.len() || !bytes[r.pos].is_ascii_whitespace() {
        return Err(Error::ImageFormat("corrupt netpbm header".into()));
    }
    let start = r.pos + 1;
    let expected = width
        .checked_mul(height)
        .and_then(|v| v.checked_mul(channels))
        .ok_or_else(|| Error::ImageFormat("image dimensions overflow".into()))?;
    let raster = &bytes[start..];
    if raster.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: raster.len(),
        });
    }
    ImageBuffer::from_interleaved(width, height, channels, &raster[..expected])
}

fn encode_netpbm(img: &ImageBuffer, format: ImageFormat) -> Result<Vec<u8>> {
    let (magic, channels) = match format {
        ImageFormat::Ppm => ("P6", 3),
        _ => ("P5", 1),
    };
    if img.channels() != channels {
        return Err(Error::ImageFormat(format!(
            "{magic} needs {channels} channel(s), image has {}",
            img.channels()
        )));
    }
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(&img.to_interleaved());
    Ok(out)
}

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

const BMP_HEADER_LEN: usize = 54;

fn decode_bmp(bytes: &[u8]) -> Result<ImageBuffer> {
    if bytes.len() < BMP_HEADER_LEN {
        return Err(Error::ImageFormat("truncated BMP header".into()));
    }
    let offset = le_u32(bytes, 10) as usize;
    let dib_len = le_u32(bytes, 14);
    if dib_len < 40 {
        return Err(Error::ImageFormat("unsupported BMP info header".into()));
    }
    let width = le_u32(bytes, 18) as i32;
    let height = le_u32(bytes, 22) as i32;
    let bpp = le_u16(bytes, 28);
    let compression = le_u32(bytes, 30);
    if bpp != 24 || compression != 0 {
        return Err(Error::ImageFormat(format!(
            "only uncompressed 24-bit BMP supported (bpp {bpp}, compression {compression})"
        )));
    }
    if width <= 0 || height == 0 {
        return Err(Error::ImageFormat("corrupt BMP dimensions".into()));
    }
    let width = width as usize;
    let top_down = height < 0;
    let height = height.unsigned_abs() as usize;
    let stride = (width * 3).div_ceil(4) * 4;
    let expected = stride * height;
    let raster = bytes.get(offset..).unwrap_or(&[]);
    if raster.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: raster.len(),
        });
    }
    let mut img = ImageBuffer::zeros(width, height, 3)?;
    for row in 0..height {
        let y = if top_down { row } else { height - 1 - row };
        let line = &raster[row * stride..row * stride + width * 3];
        for x in 0..width {
            let bgr = &line[x * 3..x * 3 + 3];
            img.set(x, y, 0, bgr[2]);
            img.set(x, y, 1, bgr[1]);
            img.set(x, y, 2, bgr[0]);
        }
    }
    Ok(img)
}

fn encode_bmp(img: &ImageBuffer) -> Result<Vec<u8>> {
    if img.channels() != 3 {
        return Err(Error::ImageFormat(
            "BMP output needs 3 channels; use PGM for grayscale".into(),
        ));
    }
    let (w, h) = (img.width(), img.height());
    let stride = (w * 3).div_ceil(4) * 4;
    let raster_len = stride * h;
    let mut out = Vec::with_capacity(BMP_HEADER_LEN + raster_len);
    out.extend_from_slice(b"BM");
    out.extend_from_slice(&((BMP_HEADER_LEN + raster_len) as u32).to_le_bytes());
    out.extend_from_slice(&[0; 4]);
    out.extend_from_slice(&(BMP_HEADER_LEN as u32).to_le_bytes());
    out.extend_from_slice(&40u32.to_le_bytes());
    out.extend_from_slice(&(w as i32).to_le_bytes());
    out.extend_from_slice(&(h as i32).to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&24u16.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&(raster_len as u32).to_le_bytes());
    out.extend_from_slice(&2835u32.to_le_bytes());
    out.extend_from_slice(&2835u32.to_le_bytes());
    out.extend_from_slice(&[0; 8]);
    for row in 0..h {
        let y = h - 1 - row;
        for x in 0..w {
            out.extend_from_slice(&[img.get(x, y, 2), img.get(x, y, 1), img.get(x, y, 0)]);
        }
        out.resize(out.len() + stride - w * 3, 0);
    }
    Ok(out)
}
