//! Exhaustive consistency suites for the cipher primitives.

use std::fmt;

use serde::Serialize;

use crate::chaos::{
    measure_cycle, min_cycle_length, LfsrConfig, Lfsr, PerturbedOrbit, PwlcmParams,
    PRIMITIVE_TAPS,
};
use crate::image::ImageBuffer;
use crate::permutation::{
    apply_permutation, build_permutation, ArnoldParams, Direction, PixelMap, StandardMapParams,
};
use crate::spn::{
    cross_inverse, cross_permute, socek_inverse, socek_permutation_from_control, socek_permute,
    substitute, substitute_inverse, StagePair,
};

/// Number of Socek control words sampled by [`socek_suite`].
pub const SOCEK_SAMPLES: u32 = 4096;

/// Stage pairs exercised by [`cross_suite`].
pub const CROSS_STAGE_PAIRS: [(u8, u8); 3] = [(1, 2), (1, 4), (2, 4)];

/// Grid sides checked by [`permutation_suite`].
pub const GRID_SIDES: [usize; 3] = [16, 64, 512];

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: u64,
    pub failures: u64,
    /// First failing case, if any.
    pub first_failure: Option<String>,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            failures: 0,
            first_failure: None,
        }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(describe());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

impl fmt::Display for SuiteResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} cases, {} failures",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.failures
        )?;
        if let Some(d) = &self.first_failure {
            write!(f, " (first: {d})")?;
        }
        Ok(())
    }
}

/// Every byte under every key in an even (XOR) and an odd (addition) round.
pub fn substitution_suite() -> SuiteResult {
    let mut r = SuiteResult::new("substitution inverse");
    for round in 0..2 {
        for v in 0..=255u8 {
            for u in 0..=255u8 {
                let c = substitute(u, v, round);
                r.check(substitute_inverse(c, v, round) == u, || {
                    format!("u={u} v={v} round={round}")
                });
            }
        }
    }
    r
}

/// Every byte under every configuration for each stage pair.
pub fn cross_suite() -> SuiteResult {
    let mut r = SuiteResult::new("cross inverse");
    for (m1, m2) in CROSS_STAGE_PAIRS {
        let stages = StagePair::new(m1, m2).expect("valid stages");
        for cfg in 0..=255u8 {
            for b in 0..=255u8 {
                let p = cross_permute(b, cfg, stages);
                r.check(
                    cross_inverse(p, cfg, stages) == b && p.count_ones() == b.count_ones(),
                    || format!("b={b} cfg={cfg} stages=({m1},{m2})"),
                );
            }
        }
    }
    r
}

/// Control words `i * 40503 mod 2^16` for `i < SOCEK_SAMPLES`; the odd
/// multiplier makes them distinct and spread over all bit slices.
pub fn socek_sample_controls() -> impl Iterator<Item = u16> {
    (0..SOCEK_SAMPLES).map(|i| i.wrapping_mul(40503) as u16)
}

/// Every byte under each sampled control word.
pub fn socek_suite() -> SuiteResult {
    let mut r = SuiteResult::new("socek inverse");
    for ctrl in socek_sample_controls() {
        let perm = socek_permutation_from_control(ctrl);
        for b in 0..=255u8 {
            let p = socek_permute(b, &perm);
            r.check(
                socek_inverse(p, &perm) == b && p.count_ones() == b.count_ones(),
                || format!("b={b} ctrl={ctrl:#06x}"),
            );
        }
    }
    r
}

/// Exhaustive LFSR periods for every built-in mask of degree 4, 8 and 16.
pub fn lfsr_period_suite() -> SuiteResult {
    let mut r = SuiteResult::new("lfsr periods");
    for &(k, masks) in PRIMITIVE_TAPS.iter().filter(|(k, _)| *k <= 16) {
        for &taps in masks {
            let cfg = LfsrConfig::new(k, taps, 1, 1).expect("valid LFSR");
            let period = Lfsr::new(&cfg).period();
            r.check(period == (1u64 << k) - 1, || {
                format!("k={k} taps={taps:#x} period={period}")
            });
        }
    }
    r
}

/// Control parameters, initial states and LFSR seeds for [`orbit_cycle_suite`].
pub const ORBIT_CASES: [(f64, u32, u32); 6] = [
    (0.1, 0x1234, 0x01),
    (0.25, 0x8001, 0x5A),
    (0.3, 0x0F0F, 0xFF),
    (0.37, 0xBEEF, 0x81),
    (0.45, 0x0001, 0x33),
    (0.2, 0xFFFE, 0xC4),
];

/// At 16-bit precision with a degree-8 perturber (`delta = 1`), every case's
/// pre-repeat length reaches the `(2^8 - 1) * delta` bound.
pub fn orbit_cycle_suite() -> SuiteResult {
    let mut r = SuiteResult::new("perturbed orbit cycle bound");
    let bound = min_cycle_length(8, 1);
    for (p, x0, seed) in ORBIT_CASES {
        let params = PwlcmParams::new(p).expect("valid control parameter");
        let cfg = LfsrConfig::with_seed(8, seed, 1).expect("valid LFSR");
        let orbit = PerturbedOrbit::with_precision(&params, x0, Some(&cfg), 16)
            .expect("valid reduced orbit");
        let info = measure_cycle(&orbit);
        r.check(info.pre_repeat_length() >= bound, || {
            format!(
                "p={p} x0={x0:#x} seed={seed:#x} length={}",
                info.pre_repeat_length()
            )
        });
    }
    r
}

/// Default Arnold and Standard maps are bijective on each grid side, and the
/// inverse undoes the forward permutation on an image.
pub fn permutation_suite() -> SuiteResult {
    let mut r = SuiteResult::new("pixel permutation bijectivity");
    let maps = [
        PixelMap::Arnold(ArnoldParams::default()),
        PixelMap::Standard(StandardMapParams::default()),
    ];
    for n in GRID_SIDES {
        let img = ImageBuffer::from_fn(n, n, 1, |x, y, _| (x * 31 + y * 17 + x * y) as u8)
            .expect("valid image");
        for map in maps {
            match build_permutation(&map, n) {
                Ok(perm) => {
                    let fwd = apply_permutation(&img, &perm, Direction::Forward);
                    let back = fwd.and_then(|f| apply_permutation(&f, &perm, Direction::Inverse));
                    let table_ok = (0..n * n)
                        .all(|i| perm.inverse()[perm.forward()[i] as usize] as usize == i);
                    r.check(table_ok && back.as_ref() == Ok(&img), || {
                        format!("{map:?} n={n}: inverse does not undo forward")
                    });
                }
                Err(e) => r.check(false, || format!("{map:?} n={n}: {e}")),
            }
        }
    }
    r
}

/// All suites in a fixed order.
pub fn run_all() -> Vec<SuiteResult> {
    vec![
        substitution_suite(),
        cross_suite(),
        socek_suite(),
        lfsr_period_suite(),
        orbit_cycle_suite(),
        permutation_suite(),
    ]
}
