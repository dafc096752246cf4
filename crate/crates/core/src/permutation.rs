//! Pixel-position permutations from discretized 2D chaotic maps.
//!
//! Grid index `i = y * n + x` addresses column `x` of row `y`. A
//! [`GridPermutation`] sends the pixel at `i` to `forward[i]`; every colour
//! plane of an image is moved with the same table.

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::par;

/// Arnold cat map `[[1, t], [q, tq + 1]]` applied `iterations` times.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArnoldParams {
    t: u32,
    q: u32,
    iterations: u32,
}

impl ArnoldParams {
    pub fn new(t: u32, q: u32, iterations: u32) -> Result<Self> {
        if t == 0 || q == 0 || iterations == 0 {
            return Err(Error::InvalidParameter(
                "Arnold t, q and iterations must all be >= 1".into(),
            ));
        }
        let (t64, q64) = (t as i128, q as i128);
        assert_eq!(t64 * q64 + 1 - t64 * q64, 1, "cat map determinant");
        Ok(Self { t, q, iterations })
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn iterations(&self) -> u32 {
        self.iterations
    }
}

impl Default for ArnoldParams {
    fn default() -> Self {
        Self {
            t: 1,
            q: 1,
            iterations: 3,
        }
    }
}

/// Argument of the sine kick in the Standard map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SineConvention {
    /// `y' = y + k sin(x * N / 2pi)` with the pre-update `x`.
    /// Not a bijection in general.
    PreUpdate,
    /// `y' = y + k sin(2pi * x' / N)` with the updated `x'`; always a bijection.
    #[default]
    Conventional,
}

/// Default Standard-map kick strength.
pub const DEFAULT_STANDARD_K: f64 = 1367.0;

/// Discretized Standard map parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StandardMapParams {
    k: f64,
    iterations: u32,
    convention: SineConvention,
}

impl StandardMapParams {
    pub fn new(k: f64, iterations: u32, convention: SineConvention) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Standard map k must be a positive finite number, got {k}"
            )));
        }
        if iterations == 0 {
            return Err(Error::InvalidParameter(
                "Standard map iterations must be >= 1".into(),
            ));
        }
        Ok(Self {
            k,
            iterations,
            convention,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    pub fn convention(&self) -> SineConvention {
        self.convention
    }
}

impl Default for StandardMapParams {
    fn default() -> Self {
        Self {
            k: DEFAULT_STANDARD_K,
            iterations: 3,
            convention: SineConvention::Conventional,
        }
    }
}

/// A 2D map used to scramble pixel positions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PixelMap {
    Arnold(ArnoldParams),
    Standard(StandardMapParams),
}

impl PixelMap {
    fn iterations(&self) -> u32 {
        match self {
            PixelMap::Arnold(a) => a.iterations,
            PixelMap::Standard(s) => s.iterations,
        }
    }

    fn point(&self, x: usize, y: usize, n: usize) -> (usize, usize) {
        match self {
            PixelMap::Arnold(a) => arnold_point(x, y, a, n),
            PixelMap::Standard(s) => standard_point(x, y, s, n),
        }
    }
}

/// One application of the cat map modulo `n`.
pub fn arnold_point(x: usize, y: usize, params: &ArnoldParams, n: usize) -> (usize, usize) {
    let (x, y, n) = (x as u128, y as u128, n as u128);
    let (t, q) = (params.t as u128, params.q as u128);
    let nx = (x + t * y) % n;
    let ny = (q * x + (t * q + 1) * y) % n;
    (nx as usize, ny as usize)
}

#[inline]
fn sine_kick(k: f64, arg: f64) -> i64 {
    // f64::round is half-away-from-zero
    (k * arg.sin()).round() as i64
}

/// One application of the discretized Standard map modulo `n`.
pub fn standard_point(x: usize, y: usize, params: &StandardMapParams, n: usize) -> (usize, usize) {
    let ni = n as i64;
    let nx = (x + y) % n;
    let kick = match params.convention {
        SineConvention::Conventional => {
            sine_kick(params.k, 2.0 * std::f64::consts::PI * nx as f64 / n as f64)
        }
        SineConvention::PreUpdate => {
            sine_kick(params.k, x as f64 * n as f64 / (2.0 * std::f64::consts::PI))
        }
    };
    let ny = (y as i64 + kick).rem_euclid(ni);
    (nx, ny as usize)
}

/// A validated bijection on the `n x n` grid together with its inverse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridPermutation {
    n: usize,
    forward: Vec<u32>,
    inverse: Vec<u32>,
}

impl GridPermutation {
    pub fn identity(n: usize) -> Self {
        let forward: Vec<u32> = (0..(n * n) as u32).collect();
        Self {
            n,
            inverse: forward.clone(),
            forward,
        }
    }

    /// Validates `forward` and derives the inverse table.
    pub fn from_forward(n: usize, forward: Vec<u32>) -> Result<Self> {
        let len = n * n;
        if forward.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "table of {} entries for a {n}x{n} grid",
                forward.len()
            )));
        }
        let mut inverse = vec![u32::MAX; len];
        for (src, &dst) in forward.iter().enumerate() {
            let d = dst as usize;
            if d >= len {
                return Err(Error::InvalidParameter(format!(
                    "target {d} outside the {n}x{n} grid"
                )));
            }
            if inverse[d] != u32::MAX {
                return Err(Error::NonBijective {
                    target: d,
                    first: inverse[d] as usize,
                    second: src,
                });
            }
            inverse[d] = src as u32;
        }
        Ok(Self {
            n,
            forward,
            inverse,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward(&self) -> &[u32] {
        &self.forward
    }

    pub fn inverse(&self) -> &[u32] {
        &self.inverse
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &d)| d as usize == i)
    }
}

/// Composes the point map `iterations` times into a lookup table. Map
/// coordinates are in matrix order: `x` is the row, `y` the column, so cell
/// `(x, y)` is grid index `x * n + y`.
pub fn build_permutation(map: &PixelMap, n: usize) -> Result<GridPermutation> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid side must be >= 2, got {n}"
        )));
    }
    if n * n > u32::MAX as usize {
        return Err(Error::InvalidParameter(format!("grid side {n} too large")));
    }
    let rounds = map.iterations();
    let forward = par::map_range(n * n, |i| {
        let (mut x, mut y) = (i / n, i % n);
        for _ in 0..rounds {
            (x, y) = map.point(x, y, n);
        }
        (x * n + y) as u32
    });
    GridPermutation::from_forward(n, forward)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Moves every plane of `img` through `perm`.
pub fn apply_permutation(
    img: &ImageBuffer,
    perm: &GridPermutation,
    direction: Direction,
) -> Result<ImageBuffer> {
    if img.width() != perm.n || img.height() != perm.n {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} image with a {n}x{n} permutation",
            img.width(),
            img.height(),
            n = perm.n
        )));
    }
    let table = match direction {
        Direction::Forward => &perm.forward,
        Direction::Inverse => &perm.inverse,
    };
    let plane = perm.n * perm.n;
    let mut out = vec![0u8; img.data().len()];
    par::for_each_chunk_zip(&mut out, img.data(), plane, |_, dst, src| {
        for (s, &d) in src.iter().zip(table.iter()) {
            dst[d as usize] = *s;
        }
    });
    ImageBuffer::new(img.width(), img.height(), img.channels(), out)
}
