//! Perturbed piecewise linear chaotic map (PWLCM) keystream source.
//!
//! Orbits are iterated entirely in fixed point: a state is an unsigned word
//! `raw` read as `raw / 2^bits`, with `bits = 32` for the cipher. After each
//! PWLCM step, every `delta`-th output has its low `k` bits XORed with the
//! register of a maximal-length Fibonacci LFSR, which bounds the system cycle
//! length from below by `delta * (2^k - 1)`.

use crate::error::{Error, Result};

/// `2^32` as a float, the scale of a full-width [`FixedPointValue`].
pub const SCALE_32: f64 = 4_294_967_296.0;

/// Word size used by the cipher.
pub const FULL_PRECISION: u32 = 32;

/// Control parameter of the PWLCM, strictly inside `(0, 0.5)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PwlcmParams {
    p: f64,
}

impl PwlcmParams {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 0.5) {
            return Err(Error::Domain {
                value: p,
                domain: "control parameter p in (0, 0.5)",
            });
        }
        let raw = discretize(p)?.raw();
        if raw == 0 || raw >= 1 << 31 {
            return Err(Error::Domain {
                value: p,
                domain: "control parameter p representable in 32-bit fixed point",
            });
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// The parameter at full 32-bit precision.
    pub fn raw(&self) -> u32 {
        self.raw_at(FULL_PRECISION)
    }

    /// The parameter rounded to a `bits`-wide word, kept strictly inside `(0, 2^(bits-1))`.
    pub fn raw_at(&self, bits: u32) -> u32 {
        let one = (1u64 << bits) as f64;
        let half = 1u64 << (bits - 1);
        let r = (self.p * one).round() as u64;
        r.clamp(1, half - 1) as u32
    }
}

/// A point of `[0, 1)` in 32-bit fixed point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FixedPointValue(u32);

impl FixedPointValue {
    pub const fn from_raw(raw: u32) -> Self {
        Self(raw)
    }

    pub const fn raw(self) -> u32 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE_32
    }

    /// Big-endian bytes of the raw word, most significant first.
    pub const fn to_be_bytes(self) -> [u8; 4] {
        self.0.to_be_bytes()
    }
}

/// Real-valued PWLCM step.
///
/// `x = 0.5` has no finite image under the symmetric branch; it is mapped to
/// the branch limit `1`, which wraps to `0` like [`discretize`] does.
pub fn pwlcm_step(x: f64, params: &PwlcmParams) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Domain {
            value: x,
            domain: "[0, 1)",
        });
    }
    let p = params.p;
    let x = if x >= 0.5 { 1.0 - x } else { x };
    let y = if x < p {
        x / p
    } else if x < 0.5 {
        (x - p) / (0.5 - p)
    } else {
        return Ok(0.0);
    };
    // float division can round up to exactly 1.0 just below a breakpoint
    Ok(if y >= 1.0 { 1.0 - f64::EPSILON / 2.0 } else { y })
}

/// `round(x * 2^32)` as a raw word; `1.0` wraps to `0`.
pub fn discretize(x: f64) -> Result<FixedPointValue> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            value: x,
            domain: "[0, 1]",
        });
    }
    let r = (x * SCALE_32).round() as u64;
    Ok(FixedPointValue((r & 0xFFFF_FFFF) as u32))
}

#[inline]
fn div_round(num: u128, den: u128) -> u128 {
    (2 * num + den) / (2 * den)
}

/// PWLCM step on a `bits`-wide fixed-point word (`1 <= bits <= 32`).
///
/// `p` is the control parameter in the same word size and must lie in
/// `(0, 2^(bits-1))`. The result is always below `2^bits`.
#[inline]
pub fn pwlcm_step_fixed(x: u32, p: u32, bits: u32) -> u32 {
    debug_assert!((1..=32).contains(&bits));
    let one = 1u128 << bits;
    let half = one >> 1;
    let (x, p) = (x as u128, p as u128);
    debug_assert!(x < one && p > 0 && p < half);
    let x = if x >= half { one - x } else { x };
    let y = if x < p {
        div_round(x * one, p)
    } else if x < half {
        div_round((x - p) * one, half - p)
    } else {
        0
    };
    debug_assert!(y < one);
    y as u32
}

/// Degree and tap masks of the built-in primitive polynomials.
///
/// Tap bit `j` is the coefficient of `x^j`; the leading `x^k` term is implied.
pub const PRIMITIVE_TAPS: &[(u32, &[u32])] = &[
    (4, &[0x3, 0x9]),
    (8, &[0x71, 0x1D]),
    (16, &[0x6801, 0x100B]),
    (32, &[0x0040_0007, 0x0000_00AF]),
];

/// Supported LFSR degrees.
pub const SUPPORTED_DEGREES: [u32; 4] = [4, 8, 16, 32];

/// The default primitive tap mask for `degree`.
pub fn primitive_taps(degree: u32) -> Result<u32> {
    PRIMITIVE_TAPS
        .iter()
        .find(|(k, _)| *k == degree)
        .map(|(_, t)| t[0])
        .ok_or(Error::UnsupportedDegree(degree))
}

/// All built-in primitive tap masks for `degree`.
pub fn known_taps(degree: u32) -> Result<&'static [u32]> {
    PRIMITIVE_TAPS
        .iter()
        .find(|(k, _)| *k == degree)
        .map(|(_, t)| *t)
        .ok_or(Error::UnsupportedDegree(degree))
}

#[inline]
fn degree_mask(degree: u32) -> u32 {
    if degree >= 32 {
        u32::MAX
    } else {
        (1u32 << degree) - 1
    }
}

/// Configuration of the orbit perturber.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LfsrConfig {
    degree: u32,
    taps: u32,
    seed: u32,
    delta: u32,
}

impl LfsrConfig {
    pub fn new(degree: u32, taps: u32, seed: u32, delta: u32) -> Result<Self> {
        if !known_taps(degree)?.contains(&taps) {
            return Err(Error::InvalidParameter(format!(
                "taps {taps:#x} are not a known primitive polynomial of degree {degree}"
            )));
        }
        if seed & degree_mask(degree) == 0 || seed & !degree_mask(degree) != 0 {
            return Err(Error::ZeroRegister);
        }
        if delta == 0 {
            return Err(Error::InvalidParameter(
                "perturbation period delta must be >= 1".into(),
            ));
        }
        Ok(Self {
            degree,
            taps,
            seed,
            delta,
        })
    }

    /// Default taps for `degree`; `seed` is masked to `degree` bits and forced nonzero.
    pub fn with_seed(degree: u32, seed: u32, delta: u32) -> Result<Self> {
        let taps = primitive_taps(degree)?;
        let mut s = seed & degree_mask(degree);
        if s == 0 {
            s = 1;
        }
        Self::new(degree, taps, s, delta)
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn taps(&self) -> u32 {
        self.taps
    }

    pub fn seed(&self) -> u32 {
        self.seed
    }

    pub fn delta(&self) -> u32 {
        self.delta
    }

    /// Same polynomial and period, different initial register.
    pub fn reseeded(&self, seed: u32) -> Result<Self> {
        Self::new(self.degree, self.taps, seed, self.delta)
    }

    pub fn min_cycle_length(&self) -> u64 {
        min_cycle_length(self.degree, self.delta)
    }
}

/// Lower bound `delta * (2^k - 1)` on the perturbed system's cycle length.
pub fn min_cycle_length(degree: u32, delta: u32) -> u64 {
    delta as u64 * ((1u64 << degree) - 1)
}

/// One Fibonacci LFSR clock.
///
/// Returns the current register (the `k` perturbing bits, bit `j` = `Q_j`)
/// and the next register, whose top bit is the parity of the tapped bits.
pub fn lfsr_next(register: u32, taps: u32, degree: u32) -> Result<(u32, u32)> {
    let mask = degree_mask(degree);
    if register & mask == 0 {
        return Err(Error::ZeroRegister);
    }
    let fb = (register & taps & mask).count_ones() & 1;
    let next = ((register & mask) >> 1) | (fb << (degree - 1));
    Ok((register & mask, next))
}

/// A running LFSR.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lfsr {
    degree: u32,
    taps: u32,
    register: u32,
}

impl Lfsr {
    pub fn new(cfg: &LfsrConfig) -> Self {
        Self {
            degree: cfg.degree,
            taps: cfg.taps,
            register: cfg.seed,
        }
    }

    pub fn register(&self) -> u32 {
        self.register
    }

    /// Emits the current register and clocks once.
    pub fn clock(&mut self) -> u32 {
        // register is nonzero by construction and a primitive LFSR never reaches zero
        let (out, next) = lfsr_next(self.register, self.taps, self.degree)
            .expect("LFSR register left the nonzero cycle");
        self.register = next;
        out
    }

    /// Number of clocks until the register returns to its start value.
    pub fn period(&self) -> u64 {
        let start = self.register;
        let mut l = self.clone();
        let mut n = 0u64;
        loop {
            l.clock();
            n += 1;
            if l.register == start {
                return n;
            }
        }
    }
}

/// A PWLCM trajectory with an attached LFSR perturber.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PerturbedOrbit {
    p: u32,
    bits: u32,
    state: u32,
    perturber: Option<(Lfsr, u32)>,
    n: u64,
}

impl PerturbedOrbit {
    /// Full 32-bit orbit starting at `x0`. `lfsr = None` disables perturbation.
    pub fn new(params: &PwlcmParams, x0: FixedPointValue, lfsr: Option<&LfsrConfig>) -> Self {
        Self {
            p: params.raw(),
            bits: FULL_PRECISION,
            state: x0.raw(),
            perturber: lfsr.map(|c| (Lfsr::new(c), c.delta)),
            n: 0,
        }
    }

    /// Orbit on a reduced `bits`-wide word, used to measure cycle structure
    /// exhaustively. `x0` is a `bits`-wide raw value.
    pub fn with_precision(
        params: &PwlcmParams,
        x0: u32,
        lfsr: Option<&LfsrConfig>,
        bits: u32,
    ) -> Result<Self> {
        if !(2..=32).contains(&bits) {
            return Err(Error::InvalidParameter(format!(
                "precision {bits} outside 2..=32"
            )));
        }
        if bits < 32 && x0 >> bits != 0 {
            return Err(Error::InvalidParameter(format!(
                "initial state {x0:#x} wider than {bits} bits"
            )));
        }
        if let Some(c) = lfsr {
            if c.degree > bits {
                return Err(Error::InvalidParameter(format!(
                    "LFSR degree {} exceeds word size {bits}",
                    c.degree
                )));
            }
        }
        Ok(Self {
            p: params.raw_at(bits),
            bits,
            state: x0,
            perturber: lfsr.map(|c| (Lfsr::new(c), c.delta)),
            n: 0,
        })
    }

    pub fn iteration(&self) -> u64 {
        self.n
    }

    pub fn state(&self) -> u32 {
        self.state
    }

    /// Next raw word of the orbit.
    #[inline]
    pub fn next_raw(&mut self) -> u32 {
        let mut y = pwlcm_step_fixed(self.state, self.p, self.bits);
        if let Some((lfsr, delta)) = &mut self.perturber {
            if self.n.is_multiple_of(*delta as u64) {
                y ^= lfsr.clock();
            }
        }
        self.state = y;
        self.n += 1;
        y
    }

    #[inline]
    pub fn next_value(&mut self) -> FixedPointValue {
        FixedPointValue(self.next_raw())
    }

    pub fn discard(&mut self, count: usize) {
        for _ in 0..count {
            self.next_raw();
        }
    }

    /// Complete dynamical state: chaotic word, LFSR register, phase within the period.
    fn key(&self) -> (u32, u32, u64) {
        match &self.perturber {
            Some((l, d)) => (self.state, l.register, self.n % *d as u64),
            None => (self.state, 0, 0),
        }
    }
}

impl Iterator for PerturbedOrbit {
    type Item = FixedPointValue;

    fn next(&mut self) -> Option<FixedPointValue> {
        Some(self.next_value())
    }
}

/// Transient and cycle lengths of an orbit's full state sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CycleInfo {
    pub transient: u64,
    pub period: u64,
}

impl CycleInfo {
    /// Number of distinct states visited before the first repeat.
    pub fn pre_repeat_length(&self) -> u64 {
        self.transient + self.period
    }
}

/// Brent cycle detection over the orbit's complete state (chaotic word,
/// LFSR register, perturbation phase). Only practical for reduced precision.
pub fn measure_cycle(orbit: &PerturbedOrbit) -> CycleInfo {
    let mut power = 1u64;
    let mut lam = 1u64;
    let mut tortoise = orbit.clone();
    let mut hare = orbit.clone();
    hare.next_raw();
    while tortoise.key() != hare.key() {
        if power == lam {
            tortoise = hare.clone();
            power *= 2;
            lam = 0;
        }
        hare.next_raw();
        lam += 1;
    }

    let mut tortoise = orbit.clone();
    let mut hare = orbit.clone();
    for _ in 0..lam {
        hare.next_raw();
    }
    let mut mu = 0u64;
    while tortoise.key() != hare.key() {
        tortoise.next_raw();
        hare.next_raw();
        mu += 1;
    }
    CycleInfo {
        transient: mu,
        period: lam,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: f64) -> PwlcmParams {
        PwlcmParams::new(v).unwrap()
    }

    #[test]
    fn pwlcm_branches() {
        let pp = p(0.2);
        assert!((pwlcm_step(0.1, &pp).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(pwlcm_step(0.2, &pp).unwrap(), 0.0);
        let v = pwlcm_step(0.75, &pp).unwrap();
        assert!((v - 0.05 / 0.3).abs() < 1e-12);
        assert!(pwlcm_step(1.0, &pp).is_err());
        assert!(pwlcm_step(-0.1, &pp).is_err());
    }

    #[test]
    fn params_reject_boundaries() {
        assert!(PwlcmParams::new(0.0).is_err());
        assert!(PwlcmParams::new(0.5).is_err());
        assert!(PwlcmParams::new(f64::NAN).is_err());
        assert!(PwlcmParams::new(1e-12).is_err());
        assert!(PwlcmParams::new(0.3).is_ok());
    }

    #[test]
    fn discretize_examples() {
        assert_eq!(discretize(0.0).unwrap().raw(), 0);
        assert_eq!(discretize(0.5).unwrap().raw(), 1 << 31);
        // round(2^32 / 3) by integer arithmetic
        let third = ((1u64 << 32) + 1) / 3;
        assert_eq!(third, 1_431_655_765);
        assert_eq!(discretize(1.0 / 3.0).unwrap().raw() as u64, third);
        assert_eq!(discretize(1.0).unwrap().raw(), 0);
        assert!(discretize(1.5).is_err());
    }

    #[test]
    fn discretize_round_trips_raw() {
        for raw in [0u32, 1, 2, 12345, 1 << 31, u32::MAX - 1, u32::MAX] {
            let x = raw as f64 / SCALE_32;
            assert_eq!(discretize(x).unwrap().raw(), raw);
        }
    }

    #[test]
    fn fixed_step_matches_real_step() {
        let pp = p(0.3);
        let pw = pp.raw();
        for raw in (0..u32::MAX).step_by(9_999_991) {
            let fixed = pwlcm_step_fixed(raw, pw, 32) as f64 / SCALE_32;
            let real = pwlcm_step(raw as f64 / SCALE_32, &pp).unwrap();
            let d = (fixed - real).abs();
            // parameter rounding error is amplified by at most 1/(0.5-p)^2
            assert!(d < 1e-7 || (1.0 - d) < 1e-7, "raw {raw}: {fixed} vs {real}");
        }
    }

    #[test]
    fn fixed_step_boundary_uses_second_branch() {
        let pw = p(0.25).raw();
        assert_eq!(pwlcm_step_fixed(pw, pw, 32), 0);
        assert_eq!(pwlcm_step_fixed(1 << 31, pw, 32), 0);
    }

    #[test]
    fn lfsr_zero_register_rejected() {
        assert_eq!(lfsr_next(0, 0x3, 4), Err(Error::ZeroRegister));
        assert!(LfsrConfig::new(4, 0x3, 0, 1).is_err());
        assert!(LfsrConfig::new(4, 0x3, 1, 0).is_err());
        assert!(LfsrConfig::new(4, 0x5, 1, 1).is_err());
        assert!(LfsrConfig::new(5, 0x5, 1, 1).is_err());
    }

    #[test]
    fn lfsr_emits_register_then_shifts() {
        // x^4 + x + 1: feedback = Q0 ^ Q1 enters at Q3
        let (out, next) = lfsr_next(0b0001, 0x3, 4).unwrap();
        assert_eq!(out, 0b0001);
        assert_eq!(next, 0b1000);
        let (_, next) = lfsr_next(0b0011, 0x3, 4).unwrap();
        assert_eq!(next, 0b0001);
    }

    #[test]
    fn min_cycle_length_examples() {
        assert_eq!(min_cycle_length(4, 1), 15);
        assert_eq!(min_cycle_length(8, 4), 1020);
        assert_eq!(min_cycle_length(16, 1), 65535);
    }

    #[test]
    fn disabled_perturbation_is_plain_pwlcm() {
        let pp = p(0.31);
        let mut orbit = PerturbedOrbit::new(&pp, FixedPointValue::from_raw(123_456_789), None);
        let mut x = 123_456_789u32;
        for _ in 0..1000 {
            x = pwlcm_step_fixed(x, pp.raw(), 32);
            assert_eq!(orbit.next_raw(), x);
        }
    }

    #[test]
    fn perturbation_touches_only_low_bits_on_epochs() {
        let pp = p(0.27);
        let cfg = LfsrConfig::with_seed(8, 0xA5, 2).unwrap();
        let x0 = FixedPointValue::from_raw(0x1234_5678);
        let mut orbit = PerturbedOrbit::new(&pp, x0, Some(&cfg));
        let mut prev = x0.raw();
        for n in 0..200u64 {
            let plain = pwlcm_step_fixed(prev, pp.raw(), 32);
            let got = orbit.next_raw();
            if n % 2 == 1 {
                assert_eq!(got, plain, "odd n must be unperturbed");
            } else {
                assert_eq!((got ^ plain) & !0xFF, 0);
            }
            prev = got;
        }
    }

    #[test]
    fn first_output_is_perturbed_by_seed() {
        let pp = p(0.27);
        let cfg = LfsrConfig::with_seed(8, 0x5A, 3).unwrap();
        let mut orbit = PerturbedOrbit::new(&pp, FixedPointValue::from_raw(99), Some(&cfg));
        let plain = pwlcm_step_fixed(99, pp.raw(), 32);
        assert_eq!(orbit.next_raw(), plain ^ 0x5A);
    }

    #[test]
    fn zero_state_escapes_on_next_epoch() {
        let pp = p(0.4);
        let cfg = LfsrConfig::with_seed(32, 0xDEAD_BEEF, 1).unwrap();
        let mut orbit = PerturbedOrbit::new(&pp, FixedPointValue::from_raw(0), Some(&cfg));
        assert_ne!(orbit.next_raw(), 0);
    }

    #[test]
    fn reduced_precision_validation() {
        let pp = p(0.3);
        assert!(PerturbedOrbit::with_precision(&pp, 1 << 16, None, 16).is_err());
        let cfg = LfsrConfig::with_seed(32, 1, 1).unwrap();
        assert!(PerturbedOrbit::with_precision(&pp, 5, Some(&cfg), 16).is_err());
        assert!(PerturbedOrbit::with_precision(&pp, 5, None, 1).is_err());
    }

    #[test]
    fn brent_on_small_unperturbed_orbit() {
        // cross-check Brent against a visited-set walk
        let pp = p(0.37);
        let orbit = PerturbedOrbit::with_precision(&pp, 1234, None, 12).unwrap();
        let info = measure_cycle(&orbit);
        let mut seen = std::collections::HashMap::new();
        let mut o = orbit.clone();
        let mut i = 0u64;
        seen.insert(o.state(), 0u64);
        loop {
            o.next_raw();
            i += 1;
            if let Some(&first) = seen.get(&o.state()) {
                assert_eq!(info.transient, first);
                assert_eq!(info.period, i - first);
                break;
            }
            seen.insert(o.state(), i);
        }
    }

    /// `a * b mod poly` over GF(2), `poly` of degree `k` with the leading term included.
    fn gf2_mulmod(a: u64, b: u64, poly: u64, k: u32) -> u64 {
        let mut acc = 0u64;
        let mut a = a;
        let mut b = b;
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a;
            }
            b >>= 1;
            a <<= 1;
            if a >> k & 1 == 1 {
                a ^= poly;
            }
        }
        acc
    }

    fn gf2_x_pow(e: u64, poly: u64, k: u32) -> u64 {
        let (mut result, mut base, mut e) = (1u64, 2u64, e);
        while e > 0 {
            if e & 1 == 1 {
                result = gf2_mulmod(result, base, poly, k);
            }
            base = gf2_mulmod(base, base, poly, k);
            e >>= 1;
        }
        result
    }

    fn prime_factors(mut n: u64) -> Vec<u64> {
        let mut out = Vec::new();
        let mut d = 2;
        while d * d <= n {
            if n.is_multiple_of(d) {
                out.push(d);
                while n.is_multiple_of(d) {
                    n /= d;
                }
            }
            d += 1;
        }
        if n > 1 {
            out.push(n);
        }
        out
    }

    #[test]
    fn every_tap_mask_is_primitive() {
        for &(k, masks) in PRIMITIVE_TAPS {
            let order = (1u64 << k) - 1;
            for &taps in masks {
                let poly = (1u64 << k) | taps as u64;
                assert_eq!(gf2_x_pow(order, poly, k), 1, "k={k} taps={taps:#x}");
                for p in prime_factors(order) {
                    assert_ne!(gf2_x_pow(order / p, poly, k), 1, "k={k} taps={taps:#x} p={p}");
                }
            }
        }
    }

    #[test]
    fn order_oracle_rejects_a_reducible_polynomial() {
        // x^4 + x^2 + 1 = (x^2 + x + 1)^2
        let poly = 0b10101u64;
        assert_ne!(gf2_x_pow(15, poly, 4), 1);
    }

    #[test]
    fn small_degree_periods_are_maximal() {
        for &(k, masks) in PRIMITIVE_TAPS.iter().filter(|(k, _)| *k <= 16) {
            for &taps in masks {
                let l = Lfsr::new(&LfsrConfig::new(k, taps, 1, 1).unwrap());
                assert_eq!(l.period(), (1u64 << k) - 1, "k={k} taps={taps:#x}");
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn fixed_step_stays_in_range(x: u32, p in 1u32..(1 << 31)) {
            let y = pwlcm_step_fixed(x, p, 32);
            let real = pwlcm_step(x as f64 / SCALE_32, &PwlcmParams::new(p as f64 / SCALE_32).unwrap());
            if let Ok(r) = real {
                proptest::prop_assert!((y as f64 / SCALE_32 - r).abs() < 1e-6 || y == 0);
            }
        }

        #[test]
        fn orbits_are_deterministic(x0 in 1u32.., seed in 1u32.., p in 0.01f64..0.49) {
            let params = PwlcmParams::new(p).unwrap();
            let cfg = LfsrConfig::with_seed(32, seed, 1).unwrap();
            let a: Vec<u32> = PerturbedOrbit::new(&params, FixedPointValue::from_raw(x0), Some(&cfg))
                .take(64)
                .map(|v| v.raw())
                .collect();
            let b: Vec<u32> = PerturbedOrbit::new(&params, FixedPointValue::from_raw(x0), Some(&cfg))
                .take(64)
                .map(|v| v.raw())
                .collect();
            proptest::prop_assert_eq!(a, b);
        }

        #[test]
        fn lfsr_never_hits_zero(seed in 1u32.., steps in 1usize..2000) {
            let mut l = Lfsr::new(&LfsrConfig::with_seed(32, seed, 1).unwrap());
            for _ in 0..steps {
                l.clock();
                proptest::prop_assert_ne!(l.register(), 0);
            }
        }
    }
}
