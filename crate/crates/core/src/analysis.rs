//! Error-propagation model, channel simulation and image statistics.
//!
//! All randomness is drawn from ChaCha8 streams keyed by an explicit seed.
//! Work is split into fixed-size chunks, each with its own stream index, so
//! results do not depend on the number of worker threads.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cipher::{Cipher, Mode};
use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::par;

/// 255-degree-of-freedom chi-square critical value at alpha = 0.01.
pub const CHI2_CRITICAL_255: f64 = 310.457;

/// Bits per cipher block.
pub const BLOCK_BITS: u32 = 8;

const CHANNEL_CHUNK: usize = 1 << 12;

/// Chaining structure seen by the error-propagation model. `Ecb` is the bare
/// block primitive with no chaining.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PropagationMode {
    Ecb,
    Cbc,
    Ofb,
    Cfb,
    Ctr,
}

impl PropagationMode {
    pub const ALL: [PropagationMode; 5] = [
        PropagationMode::Ecb,
        PropagationMode::Cbc,
        PropagationMode::Ofb,
        PropagationMode::Cfb,
        PropagationMode::Ctr,
    ];

    pub fn chained(self) -> Option<Mode> {
        match self {
            PropagationMode::Ecb => None,
            PropagationMode::Cbc => Some(Mode::Cbc),
            PropagationMode::Ofb => Some(Mode::Ofb),
            PropagationMode::Cfb => Some(Mode::Cfb),
            PropagationMode::Ctr => Some(Mode::Ctr),
        }
    }
}

impl From<Mode> for PropagationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Cbc => PropagationMode::Cbc,
            Mode::Ofb => PropagationMode::Ofb,
            Mode::Cfb => PropagationMode::Cfb,
            Mode::Ctr => PropagationMode::Ctr,
        }
    }
}

impl fmt::Display for PropagationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.chained() {
            Some(m) => m.fmt(f),
            None => f.write_str("ECB"),
        }
    }
}

impl std::str::FromStr for PropagationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("ecb") {
            Ok(PropagationMode::Ecb)
        } else {
            s.parse::<Mode>().map(Into::into)
        }
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Domain {
            value: p,
            domain: "[0, 1]",
        })
    }
}

/// Closed-form decrypted bit-error probability with bit inversion probability 1/2.
///
/// OFB/CTR: `p`. ECB: `(1 - (1-p)^b) / 2`. CBC/CFB: `p (1-p)^b + (1 - (1-p)^b) / 2`.
pub fn predict_output_error(mode: PropagationMode, p_e: f64, b: u32) -> Result<f64> {
    check_probability(p_e)?;
    if b == 0 {
        return Err(Error::InvalidParameter("block size must be >= 1".into()));
    }
    let q0 = 1.0 - (1.0 - p_e).powi(b as i32);
    Ok(match mode {
        PropagationMode::Ofb | PropagationMode::Ctr => p_e,
        PropagationMode::Ecb => 0.5 * q0,
        PropagationMode::Cbc | PropagationMode::Cfb => chained_feedback_error(p_e, b),
    })
}

/// Shared by CBC and CFB, which propagate errors identically.
fn chained_feedback_error(p_e: f64, b: u32) -> f64 {
    let p0 = (1.0 - p_e).powi(b as i32);
    p_e * p0 + 0.5 * (1.0 - p0)
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Probability that exactly `x` of `b` received bits are in error.
pub fn block_error_probability(x: u32, p_e: f64, b: u32) -> Result<f64> {
    check_probability(p_e)?;
    if x > b {
        return Err(Error::Domain {
            value: x as f64,
            domain: "0..=b",
        });
    }
    Ok(binomial(b, x) * p_e.powi(x as i32) * (1.0 - p_e).powi((b - x) as i32))
}

/// Binary symmetric channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChannelModel {
    p_e: f64,
    seed: u64,
}

impl ChannelModel {
    pub fn new(p_e: f64, seed: u64) -> Result<Self> {
        check_probability(p_e)?;
        Ok(Self { p_e, seed })
    }

    pub fn p_e(&self) -> f64 {
        self.p_e
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Flips every bit independently with probability `p_e`.
pub fn simulate_channel(body: &[u8], ch: &ChannelModel) -> Vec<u8> {
    let mut out = body.to_vec();
    if ch.p_e == 0.0 {
        return out;
    }
    par::for_each_chunk_mut(&mut out, CHANNEL_CHUNK, |ci, chunk| {
        let mut rng = ChaCha8Rng::seed_from_u64(ch.seed);
        rng.set_stream(ci as u64);
        for byte in chunk.iter_mut() {
            let mut mask = 0u8;
            for bit in 0..8 {
                if rng.gen_bool(ch.p_e) {
                    mask |= 1 << bit;
                }
            }
            *byte ^= mask;
        }
    });
    out
}

/// Flips bit `bit` (0 = LSB) of byte `index`.
pub fn flip_bit(body: &mut [u8], index: usize, bit: u8) -> Result<()> {
    if bit > 7 {
        return Err(Error::InvalidParameter(format!("bit {bit} out of range")));
    }
    let len = body.len();
    let b = body.get_mut(index).ok_or_else(|| {
        Error::InvalidParameter(format!("byte index {index} beyond body of {len} bytes"))
    })?;
    *b ^= 1 << bit;
    Ok(())
}

/// Number of byte positions where `a` and `b` differ.
pub fn count_erroneous_blocks(a: &[u8], b: &[u8]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} bytes",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count())
}

/// Number of differing bits.
pub fn count_bit_errors(a: &[u8], b: &[u8]) -> Result<u64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} bytes",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones() as u64).sum())
}

/// Converts a 1-based `(row, column, channel)` triplet of an `n x n` image to
/// a channel-major body index.
pub fn body_index(row: usize, col: usize, channel: usize, n: usize, channels: usize) -> Result<usize> {
    if row == 0 || col == 0 || channel == 0 || row > n || col > n || channel > channels {
        return Err(Error::InvalidParameter(format!(
            "position ({row}, {col}, {channel}) outside a {n}x{n}x{channels} image"
        )));
    }
    Ok((channel - 1) * n * n + (row - 1) * n + (col - 1))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorPropagationReport {
    pub mode: PropagationMode,
    pub block_bits: u32,
    pub p_e: f64,
    pub predicted: f64,
    pub measured: f64,
    pub sample_bits: u64,
    pub bit_errors: u64,
    /// Decrypted blocks differing from the original.
    pub erroneous_blocks: usize,
}

impl ErrorPropagationReport {
    /// Binomial standard error of the measurement under the prediction.
    pub fn standard_error(&self) -> f64 {
        (self.predicted * (1.0 - self.predicted) / self.sample_bits as f64).sqrt()
    }

    /// Distance between measurement and prediction in standard errors.
    pub fn z_score(&self) -> f64 {
        let se = self.standard_error();
        if se == 0.0 {
            if self.measured == self.predicted {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.measured - self.predicted).abs() / se
        }
    }
}

fn cipher_in_mode(cipher: &Cipher, mode: Mode) -> Result<Cipher> {
    let mut cfg = *cipher.config();
    cfg.mode = mode;
    Cipher::from_parameters(*cipher.parameters(), &cfg)
}

fn encrypt_in(cipher: &Cipher, mode: PropagationMode, plain: &[u8]) -> Result<(Cipher, Vec<u8>)> {
    let c = cipher_in_mode(cipher, mode.chained().unwrap_or(Mode::Ofb))?;
    let ct = match mode {
        PropagationMode::Ecb => c.ecb_encrypt(plain),
        _ => c.encrypt_body(plain),
    };
    Ok((c, ct))
}

fn decrypt_in(c: &Cipher, mode: PropagationMode, ct: &[u8]) -> Vec<u8> {
    match mode {
        PropagationMode::Ecb => c.ecb_decrypt(ct),
        _ => c.decrypt_body(ct),
    }
}

/// Encrypts `plain` in `mode`, passes the ciphertext through `ch`, decrypts and
/// compares with `plain`.
pub fn measure_error_propagation(
    cipher: &Cipher,
    mode: PropagationMode,
    plain: &[u8],
    ch: &ChannelModel,
) -> Result<ErrorPropagationReport> {
    if plain.is_empty() {
        return Err(Error::Empty);
    }
    let (c, ct) = encrypt_in(cipher, mode, plain)?;
    let received = simulate_channel(&ct, ch);
    let decrypted = decrypt_in(&c, mode, &received);
    let bit_errors = count_bit_errors(&decrypted, plain)?;
    let sample_bits = plain.len() as u64 * 8;
    Ok(ErrorPropagationReport {
        mode,
        block_bits: BLOCK_BITS,
        p_e: ch.p_e,
        predicted: predict_output_error(mode, ch.p_e, BLOCK_BITS)?,
        measured: bit_errors as f64 / sample_bits as f64,
        sample_bits,
        bit_errors,
        erroneous_blocks: count_erroneous_blocks(&decrypted, plain)?,
    })
}

/// Flips one ciphertext bit at each body index in turn (independently) and
/// returns the number of erroneous decrypted blocks for each.
pub fn single_flip_blocks(
    cipher: &Cipher,
    mode: PropagationMode,
    plain: &[u8],
    positions: &[(usize, u8)],
) -> Result<Vec<usize>> {
    let (c, ct) = encrypt_in(cipher, mode, plain)?;
    positions
        .iter()
        .map(|&(index, bit)| {
            let mut corrupted = ct.clone();
            flip_bit(&mut corrupted, index, bit)?;
            count_erroneous_blocks(&decrypt_in(&c, mode, &corrupted), plain)
        })
        .collect()
}

/// Shannon entropy in bits per symbol.
pub fn entropy(data: &[u8]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty);
    }
    let n = data.len() as f64;
    Ok(histogram(data)
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum())
}

pub fn histogram(data: &[u8]) -> [u64; 256] {
    let mut h = [0u64; 256];
    for &v in data {
        h[v as usize] += 1;
    }
    h
}

/// Pearson chi-square statistic against the uniform distribution.
pub fn chi_square(hist: &[u64; 256]) -> Result<f64> {
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return Err(Error::Empty);
    }
    let expected = total as f64 / 256.0;
    Ok(hist
        .iter()
        .map(|&o| {
            let d = o as f64 - expected;
            d * d / expected
        })
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Adjacency {
    Horizontal,
    Vertical,
    Diagonal,
}

impl Adjacency {
    pub const ALL: [Adjacency; 3] = [Adjacency::Horizontal, Adjacency::Vertical, Adjacency::Diagonal];

    fn offset(self) -> (usize, usize) {
        match self {
            Adjacency::Horizontal => (1, 0),
            Adjacency::Vertical => (0, 1),
            Adjacency::Diagonal => (1, 1),
        }
    }

    fn key(self) -> &'static str {
        match self {
            Adjacency::Horizontal => "h",
            Adjacency::Vertical => "v",
            Adjacency::Diagonal => "d",
        }
    }
}

/// Which adjacent pairs enter the correlation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sampling {
    All,
    Random { pairs: usize, seed: u64 },
}

/// Pearson coefficient; `degenerate` is set (and `r = 0`) when either side
/// has zero variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Correlation {
    pub r: f64,
    pub degenerate: bool,
}

pub fn pearson(xs: &[u8], ys: &[u8]) -> Result<Correlation> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} samples",
            xs.len(),
            ys.len()
        )));
    }
    if xs.is_empty() {
        return Err(Error::Empty);
    }
    let n = xs.len() as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0u64, 0u64, 0u64, 0u64, 0u64);
    for (&x, &y) in xs.iter().zip(ys) {
        let (x, y) = (x as u64, y as u64);
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    let cov = sxy as f64 / n - (sx as f64 / n) * (sy as f64 / n);
    let vx = sxx as f64 / n - (sx as f64 / n).powi(2);
    let vy = syy as f64 / n - (sy as f64 / n).powi(2);
    if vx <= 0.0 || vy <= 0.0 {
        return Ok(Correlation {
            r: 0.0,
            degenerate: true,
        });
    }
    Ok(Correlation {
        r: (cov / (vx.sqrt() * vy.sqrt())).clamp(-1.0, 1.0),
        degenerate: false,
    })
}

/// Correlation of adjacent pixel pairs in one channel.
pub fn adjacent_correlation(
    img: &ImageBuffer,
    channel: usize,
    dir: Adjacency,
    sampling: Sampling,
) -> Result<Correlation> {
    if channel >= img.channels() {
        return Err(Error::InvalidParameter(format!(
            "channel {channel} of a {}-channel image",
            img.channels()
        )));
    }
    let (dx, dy) = dir.offset();
    let (w, h) = (img.width(), img.height());
    if w <= dx || h <= dy {
        return Err(Error::Empty);
    }
    let (cw, ch) = (w - dx, h - dy);
    let plane = img.plane(channel);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut push = |x: usize, y: usize| {
        xs.push(plane[y * w + x]);
        ys.push(plane[(y + dy) * w + x + dx]);
    };
    match sampling {
        Sampling::All => {
            for y in 0..ch {
                for x in 0..cw {
                    push(x, y);
                }
            }
        }
        Sampling::Random { pairs, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..pairs {
                push(rng.gen_range(0..cw), rng.gen_range(0..ch));
            }
        }
    }
    pearson(&xs, &ys)
}

fn check_same(a: &ImageBuffer, b: &ImageBuffer) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )))
    }
}

/// Percentage of differing positions.
pub fn npcr_bytes(a: &[u8], b: &[u8]) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::Empty);
    }
    Ok(count_erroneous_blocks(a, b)? as f64 / a.len() as f64 * 100.0)
}

/// Mean absolute difference as a percentage of 255.
pub fn uaci_bytes(a: &[u8], b: &[u8]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} bytes",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Empty);
    }
    let sum: u64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x as i32 - y as i32).unsigned_abs() as u64)
        .sum();
    Ok(sum as f64 / (a.len() as f64 * 255.0) * 100.0)
}

pub fn npcr(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    check_same(a, b)?;
    npcr_bytes(a.data(), b.data())
}

pub fn uaci(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    check_same(a, b)?;
    uaci_bytes(a.data(), b.data())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelStats {
    pub entropy: f64,
    /// Horizontal, vertical, diagonal.
    pub correlation: [Correlation; 3],
    pub histogram: Vec<u64>,
    pub chi_square: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatReport {
    pub channels: Vec<ChannelStats>,
    pub npcr: Option<f64>,
    pub uaci: Option<f64>,
}

impl StatReport {
    /// Largest per-channel chi-square.
    pub fn max_chi_square(&self) -> f64 {
        self.channels
            .iter()
            .map(|c| c.chi_square)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per-channel statistics of `img`; NPCR and UACI against `other` when given.
pub fn analyze_image(
    img: &ImageBuffer,
    other: Option<&ImageBuffer>,
    sampling: Sampling,
) -> Result<StatReport> {
    let channels = par::map_range(img.channels(), |c| -> Result<ChannelStats> {
        let plane = img.plane(c);
        let hist = histogram(plane);
        let mut corr = [Correlation {
            r: 0.0,
            degenerate: true,
        }; 3];
        for (slot, dir) in corr.iter_mut().zip(Adjacency::ALL) {
            *slot = adjacent_correlation(img, c, dir, sampling)?;
        }
        Ok(ChannelStats {
            entropy: entropy(plane)?,
            correlation: corr,
            histogram: hist.to_vec(),
            chi_square: chi_square(&hist)?,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (npcr, uaci) = match other {
        Some(o) => (Some(npcr(img, o)?), Some(uaci(img, o)?)),
        None => (None, None),
    };
    Ok(StatReport {
        channels,
        npcr,
        uaci,
    })
}

/// A report with a reproducibility seed, rendered either as flat `key=value`
/// lines or JSON.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub seed: u64,
    pub stats: Option<StatReport>,
    pub error_propagation: Option<ErrorPropagationReport>,
}

const CHANNEL_KEYS: [&str; 3] = ["r", "g", "b"];

impl AnalysisReport {
    /// Flat key/value pairs in output order. Single-channel images report
    /// under the `r` suffix.
    pub fn entries(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("seed".to_string(), self.seed.to_string());
        if let Some(s) = &self.stats {
            for (c, ch) in s.channels.iter().enumerate() {
                let k = CHANNEL_KEYS[c];
                m.insert(format!("entropy.{k}"), format!("{:.6}", ch.entropy));
                for (dir, corr) in Adjacency::ALL.iter().zip(&ch.correlation) {
                    m.insert(format!("corr.{}.{k}", dir.key()), format!("{:.6}", corr.r));
                }
                m.insert(format!("chi2.{k}"), format!("{:.3}", ch.chi_square));
            }
            m.insert("chi2".into(), format!("{:.3}", s.max_chi_square()));
            if let Some(v) = s.npcr {
                m.insert("npcr".into(), format!("{v:.4}"));
            }
            if let Some(v) = s.uaci {
                m.insert("uaci".into(), format!("{v:.4}"));
            }
        }
        if let Some(e) = &self.error_propagation {
            m.insert("ep.mode".into(), e.mode.to_string());
            m.insert("ep.p_e".into(), format!("{}", e.p_e));
            m.insert("ep.predicted".into(), format!("{:.8}", e.predicted));
            m.insert("ep.measured".into(), format!("{:.8}", e.measured));
            m.insert("ep.bits".into(), e.sample_bits.to_string());
            m.insert("ep.blocks".into(), e.erroneous_blocks.to_string());
        }
        m
    }

    pub fn to_flat_text(&self) -> String {
        let entries = self.entries();
        let mut out = format!("seed={}\n", self.seed);
        for (k, v) in entries.iter().filter(|(k, _)| k.as_str() != "seed") {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }
}

/// Writes `data` as a raw MSB-first bit stream, or as ASCII `0`/`1` characters.
pub fn export_bitstream(data: &[u8], path: impl AsRef<Path>, ascii: bool) -> Result<u64> {
    if data.is_empty() {
        return Err(Error::Empty);
    }
    if ascii {
        let mut s = String::with_capacity(data.len() * 8);
        for b in data {
            for bit in (0..8).rev() {
                s.push(if b >> bit & 1 == 1 { '1' } else { '0' });
            }
        }
        std::fs::write(path, s)?;
    } else {
        std::fs::write(path, data)?;
    }
    Ok(data.len() as u64 * 8)
}

/// Reads a bit stream written by [`export_bitstream`], returning one entry per bit.
pub fn read_bitstream(path: impl AsRef<Path>, ascii: bool) -> Result<Vec<bool>> {
    let bytes = std::fs::read(path)?;
    if ascii {
        bytes
            .iter()
            .filter(|b| !b.is_ascii_whitespace())
            .map(|&b| match b {
                b'0' => Ok(false),
                b'1' => Ok(true),
                other => Err(Error::InvalidParameter(format!(
                    "unexpected byte {other:#04x} in ASCII bit stream"
                ))),
            })
            .collect()
    } else {
        Ok(bytes
            .iter()
            .flat_map(|b| (0..8).rev().map(move |bit| b >> bit & 1 == 1))
            .collect())
    }
}
