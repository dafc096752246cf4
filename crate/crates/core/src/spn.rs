//! Byte-level substitution and bit-permutation primitives.
//!
//! Bit positions are numbered from the least significant bit (`0`) to the
//! most significant (`7`). Figures that number bits `1..=8` from the most
//! significant end convert with [`BitPermutation::from_one_based`].

use crate::chaos::FixedPointValue;
use crate::error::{Error, Result};

/// Keyed substitution: XOR on even rounds, addition mod 256 on odd rounds.
#[inline]
pub fn substitute(u: u8, v: u8, round: usize) -> u8 {
    if round.is_multiple_of(2) {
        u ^ v
    } else {
        u.wrapping_add(v)
    }
}

#[inline]
pub fn substitute_inverse(u: u8, v: u8, round: usize) -> u8 {
    if round.is_multiple_of(2) {
        u ^ v
    } else {
        u.wrapping_sub(v)
    }
}

/// A permutation of the 8 bit positions: input bit `i` moves to `perm[i]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BitPermutation([u8; 8]);

impl BitPermutation {
    pub const IDENTITY: BitPermutation = BitPermutation([0, 1, 2, 3, 4, 5, 6, 7]);

    pub fn new(perm: [u8; 8]) -> Result<Self> {
        let mut seen = 0u8;
        for &p in &perm {
            if p > 7 || seen & (1 << p) != 0 {
                return Err(Error::InvalidParameter(format!(
                    "{perm:?} is not a permutation of 0..8"
                )));
            }
            seen |= 1 << p;
        }
        Ok(Self(perm))
    }

    /// From `1..=8` indices that count bits from the most significant end,
    /// e.g. `[4, 6, 7, 1, 3, 8, 2, 5]`: the first (MSB) bit goes to slot 4.
    pub fn from_one_based(indices: [u8; 8]) -> Result<Self> {
        let mut perm = [0u8; 8];
        for (j, &dst) in indices.iter().enumerate() {
            if !(1..=8).contains(&dst) {
                return Err(Error::InvalidParameter(format!(
                    "{indices:?} is not a permutation of 1..=8"
                )));
            }
            perm[7 - j] = 8 - dst;
        }
        Self::new(perm)
    }

    /// The `1..=8`, MSB-first notation of this permutation.
    pub fn to_one_based(&self) -> [u8; 8] {
        let mut out = [0u8; 8];
        for (j, o) in out.iter_mut().enumerate() {
            *o = 8 - self.0[7 - j];
        }
        out
    }

    pub fn as_array(&self) -> [u8; 8] {
        self.0
    }

    pub fn inverse(&self) -> BitPermutation {
        let mut inv = [0u8; 8];
        for (i, &p) in self.0.iter().enumerate() {
            inv[p as usize] = i as u8;
        }
        BitPermutation(inv)
    }
}

/// Derives a bit permutation from a 16-bit control word.
///
/// Forward Fisher–Yates over `[0..8)`: step `s` (0..7) swaps slot `s` with
/// slot `s + (slice mod (8 - s))`, where the slices are consecutive bit
/// fields of `ctrl` of widths 3, 3, 3, 2, 2, 2, 1 taken from the LSB up.
/// `ctrl = 0` performs no swaps.
pub fn socek_permutation_from_control(ctrl: u16) -> BitPermutation {
    const WIDTHS: [u32; 7] = [3, 3, 3, 2, 2, 2, 1];
    let mut slots = [0u8, 1, 2, 3, 4, 5, 6, 7];
    let mut bits = ctrl as u32;
    for (s, &w) in WIDTHS.iter().enumerate() {
        let slice = bits & ((1 << w) - 1);
        bits >>= w;
        let j = s + (slice as usize % (8 - s));
        slots.swap(s, j);
    }
    BitPermutation(slots)
}

/// Output bit `perm[i]` takes input bit `i`.
#[inline]
pub fn socek_permute(b: u8, perm: &BitPermutation) -> u8 {
    let mut out = 0u8;
    for (i, &p) in perm.0.iter().enumerate() {
        out |= ((b >> i) & 1) << p;
    }
    out
}

/// Exact inverse of [`socek_permute`]: input bit `perm[i]` returns to `i`.
#[inline]
pub fn socek_inverse(b: u8, perm: &BitPermutation) -> u8 {
    let mut out = 0u8;
    for (i, &p) in perm.0.iter().enumerate() {
        out |= ((b >> p) & 1) << i;
    }
    out
}

/// Butterfly distance of one Cross stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Stage(u8);

impl Stage {
    pub fn new(m: u8) -> Result<Self> {
        match m {
            1 | 2 | 4 => Ok(Self(m)),
            _ => Err(Error::InvalidStage(m)),
        }
    }

    pub fn distance(&self) -> u8 {
        self.0
    }

    /// The four swap pairs `(low, low + m)`, in ascending low-index order.
    pub fn pairs(&self) -> [(u8, u8); 4] {
        let m = self.0;
        let mut out = [(0, 0); 4];
        let mut k = 0;
        for i in 0..8u8 {
            if i & m == 0 {
                out[k] = (i, i + m);
                k += 1;
            }
        }
        out
    }
}

/// Ordered pair of Cross stages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StagePair {
    pub first: Stage,
    pub second: Stage,
}

impl StagePair {
    pub fn new(m1: u8, m2: u8) -> Result<Self> {
        Ok(Self {
            first: Stage::new(m1)?,
            second: Stage::new(m2)?,
        })
    }
}

impl Default for StagePair {
    fn default() -> Self {
        Self {
            first: Stage(1),
            second: Stage(4),
        }
    }
}

/// Swaps the pairs of `stage` whose governing bits in the 4-bit `sel` are set.
#[inline]
fn butterfly(b: u8, stage: Stage, sel: u8) -> u8 {
    let mut out = b;
    for (k, (lo, hi)) in stage.pairs().into_iter().enumerate() {
        if sel >> k & 1 == 1 {
            let diff = ((out >> lo) ^ (out >> hi)) & 1;
            out ^= (diff << lo) | (diff << hi);
        }
    }
    out
}

/// Two butterfly stages: `m1` governed by `cfg` bits 0–3, then `m2` by bits 4–7.
#[inline]
pub fn cross_permute(b: u8, cfg: u8, stages: StagePair) -> u8 {
    let b = butterfly(b, stages.first, cfg & 0x0F);
    butterfly(b, stages.second, cfg >> 4)
}

/// Exact inverse of [`cross_permute`]: the `m2` stage is undone first.
#[inline]
pub fn cross_inverse(b: u8, cfg: u8, stages: StagePair) -> u8 {
    let b = butterfly(b, stages.second, cfg >> 4);
    butterfly(b, stages.first, cfg & 0x0F)
}

/// Convenience form of [`cross_permute`] taking raw stage distances.
pub fn cross_permute_checked(b: u8, cfg: u8, m1: u8, m2: u8) -> Result<u8> {
    Ok(cross_permute(b, cfg, StagePair::new(m1, m2)?))
}

/// Convenience form of [`cross_inverse`] taking raw stage distances.
pub fn cross_inverse_checked(b: u8, cfg: u8, m1: u8, m2: u8) -> Result<u8> {
    Ok(cross_inverse(b, cfg, StagePair::new(m1, m2)?))
}

/// Four substitution bytes `c(1)..c(4)` of one chaotic word, MSB first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoundSubKeys(pub [u8; 4]);

/// Which bit-permutation family a variant uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PermKind {
    Socek,
    Cross,
}

/// Bit-permutation control material carried by one chaotic word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PermControls {
    /// Two 16-bit controls, high half first.
    Socek([u16; 2]),
    /// Four 8-bit configuration words, MSB first.
    Cross([u8; 4]),
}

/// Splits one chaotic word into substitution bytes and permutation controls.
pub fn derive_round_material(v: FixedPointValue, kind: PermKind) -> (RoundSubKeys, PermControls) {
    let raw = v.raw();
    let bytes = raw.to_be_bytes();
    let ctrl = match kind {
        PermKind::Socek => PermControls::Socek([(raw >> 16) as u16, raw as u16]),
        PermKind::Cross => PermControls::Cross(bytes),
    };
    (RoundSubKeys(bytes), ctrl)
}

/// A per-round bit permutation ready to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BytePermutation {
    Socek(BitPermutation),
    Cross { cfg: u8, stages: StagePair },
}

impl BytePermutation {
    #[inline]
    pub fn apply(&self, b: u8) -> u8 {
        match self {
            BytePermutation::Socek(p) => socek_permute(b, p),
            BytePermutation::Cross { cfg, stages } => cross_permute(b, *cfg, *stages),
        }
    }

    #[inline]
    pub fn invert(&self, b: u8) -> u8 {
        match self {
            BytePermutation::Socek(p) => socek_inverse(b, p),
            BytePermutation::Cross { cfg, stages } => cross_inverse(b, *cfg, *stages),
        }
    }
}

/// Substitution bytes and bit permutations for one run of `r` blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundSchedule {
    subkeys: Vec<u8>,
    perms: Vec<BytePermutation>,
}

impl RoundSchedule {
    pub fn new(subkeys: Vec<u8>, perms: Vec<BytePermutation>) -> Result<Self> {
        if subkeys.is_empty() || subkeys.len() != perms.len() {
            return Err(Error::InvalidParameter(format!(
                "schedule needs equal nonzero lengths ({} subkeys, {} permutations)",
                subkeys.len(),
                perms.len()
            )));
        }
        Ok(Self { subkeys, perms })
    }

    /// All-zero subkeys and identity permutations.
    pub fn neutral(rounds: usize) -> Self {
        Self {
            subkeys: vec![0; rounds],
            perms: vec![BytePermutation::Socek(BitPermutation::IDENTITY); rounds],
        }
    }

    pub fn rounds(&self) -> usize {
        self.subkeys.len()
    }

    pub fn subkeys(&self) -> &[u8] {
        &self.subkeys
    }

    pub fn perms(&self) -> &[BytePermutation] {
        &self.perms
    }
}

/// `r` rounds of substitute-then-permute. Round `j` uses material index
/// `(i + j) mod r`, so neighbouring blocks see the material in rotated order.
#[inline]
pub fn spn_encrypt_byte(b: u8, schedule: &RoundSchedule, block_index: usize) -> u8 {
    let r = schedule.subkeys.len();
    let mut b = b;
    let mut k = block_index % r;
    for j in 0..r {
        b = substitute(b, schedule.subkeys[k], j);
        b = schedule.perms[k].apply(b);
        k += 1;
        if k == r {
            k = 0;
        }
    }
    b
}

/// Exact inverse of [`spn_encrypt_byte`].
#[inline]
pub fn spn_decrypt_byte(b: u8, schedule: &RoundSchedule, block_index: usize) -> u8 {
    let r = schedule.subkeys.len();
    let mut b = b;
    for j in (0..r).rev() {
        let k = (block_index + j) % r;
        b = schedule.perms[k].invert(b);
        b = substitute_inverse(b, schedule.subkeys[k], j);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution_examples() {
        assert_eq!(substitute(0x0F, 0xF0, 2), 0xFF);
        assert_eq!(substitute(200, 100, 1), 44);
        assert_eq!(substitute(0x5A, 0, 4), 0x5A);
        assert_eq!(substitute_inverse(44, 100, 1), 200);
        for u in [0u8, 1, 77, 255] {
            assert_eq!(substitute_inverse(u, 0, 0), u);
            assert_eq!(substitute_inverse(u, 0, 1), u);
        }
    }

    #[test]
    fn one_based_conversion() {
        let reference = [4, 6, 7, 1, 3, 8, 2, 5];
        let p = BitPermutation::from_one_based(reference).unwrap();
        assert_eq!(p.to_one_based(), reference);
        assert!(BitPermutation::from_one_based([1, 1, 2, 3, 4, 5, 6, 7]).is_err());
        assert!(BitPermutation::from_one_based([0, 1, 2, 3, 4, 5, 6, 7]).is_err());
        assert!(BitPermutation::new([0, 1, 2, 3, 4, 5, 6, 8]).is_err());
    }

    #[test]
    fn zero_control_is_identity() {
        assert_eq!(socek_permutation_from_control(0), BitPermutation::IDENTITY);
    }

    #[test]
    fn socek_trivial_cases() {
        let rev = BitPermutation::from_one_based([8, 7, 6, 5, 4, 3, 2, 1]).unwrap();
        assert_eq!(rev.inverse(), rev);
        for b in 0..=255u8 {
            assert_eq!(socek_permute(b, &BitPermutation::IDENTITY), b);
            assert_eq!(socek_inverse(b, &BitPermutation::IDENTITY), b);
            assert_eq!(socek_permute(b, &rev), b.reverse_bits());
        }
        let p = socek_permutation_from_control(0xBEEF);
        assert_eq!(socek_permute(0xFF, &p), 0xFF);
        assert_eq!(socek_permute(0x00, &p), 0x00);
    }

    #[test]
    fn cross_trivial_cases() {
        let stages = StagePair::new(1, 4).unwrap();
        for b in 0..=255u8 {
            assert_eq!(cross_permute(b, 0, stages), b);
            assert_eq!(cross_inverse(b, 0, stages), b);
            for m in [1, 2, 4] {
                let same = StagePair::new(m, m).unwrap();
                assert_eq!(cross_permute(b, 0xFF, same), b);
            }
        }
        // cfg bit 0 governs the first pair (0, 4) of the m1 = 4 stage
        assert_eq!(cross_permute_checked(0b0000_0001, 0x01, 4, 1).unwrap(), 0b0001_0000);
        assert_eq!(cross_permute_checked(1, 0, 3, 1), Err(Error::InvalidStage(3)));
        assert_eq!(cross_inverse_checked(1, 0, 1, 0), Err(Error::InvalidStage(0)));
    }

    #[test]
    fn stage_pairs_partition_bits() {
        for m in [1u8, 2, 4] {
            let pairs = Stage::new(m).unwrap().pairs();
            let mut covered = 0u8;
            for (lo, hi) in pairs {
                assert_eq!(hi - lo, m);
                covered |= (1 << lo) | (1 << hi);
            }
            assert_eq!(covered, 0xFF);
        }
        assert_eq!(
            Stage::new(2).unwrap().pairs(),
            [(0, 2), (1, 3), (4, 6), (5, 7)]
        );
    }

    #[test]
    fn round_material_split() {
        let zero = derive_round_material(FixedPointValue::from_raw(0), PermKind::Socek);
        assert_eq!(zero, (RoundSubKeys([0; 4]), PermControls::Socek([0, 0])));
        let v = FixedPointValue::from_raw(0x0102_0304);
        assert_eq!(
            derive_round_material(v, PermKind::Socek),
            (
                RoundSubKeys([1, 2, 3, 4]),
                PermControls::Socek([0x0102, 0x0304])
            )
        );
        assert_eq!(
            derive_round_material(v, PermKind::Cross).1,
            PermControls::Cross([1, 2, 3, 4])
        );
    }

    #[test]
    fn neutral_schedule_is_identity() {
        let s = RoundSchedule::neutral(4);
        for b in 0..=255u8 {
            for i in 0..4 {
                assert_eq!(spn_encrypt_byte(b, &s, i), b);
                assert_eq!(spn_decrypt_byte(b, &s, i), b);
            }
        }
    }

    #[test]
    fn single_odd_round_adds_then_subtracts() {
        // with r = 1 the only round is j = 0 (XOR); check the odd branch via r = 2
        let s = RoundSchedule::new(
            vec![0, 9],
            vec![BytePermutation::Socek(BitPermutation::IDENTITY); 2],
        )
        .unwrap();
        assert_eq!(spn_encrypt_byte(10, &s, 0), 19);
        assert_eq!(spn_decrypt_byte(19, &s, 0), 10);
        let one = RoundSchedule::new(vec![0x33], vec![BytePermutation::Socek(BitPermutation::IDENTITY)])
            .unwrap();
        assert_eq!(spn_encrypt_byte(0x0F, &one, 0), 0x3C);
    }

    #[test]
    fn schedule_validation() {
        assert!(RoundSchedule::new(vec![], vec![]).is_err());
        assert!(RoundSchedule::new(vec![1], vec![]).is_err());
    }

    /// Control word that reproduces the reference permutation under the shuffle.
    const CTRL_REFERENCE: u16 = 0x3C6B;

    #[test]
    fn reference_permutation_fixture() {
        let reference = BitPermutation::from_one_based([4, 6, 7, 1, 3, 8, 2, 5]).unwrap();
        assert_eq!(socek_permutation_from_control(CTRL_REFERENCE), reference);
        assert_eq!(reference.to_one_based(), [4, 6, 7, 1, 3, 8, 2, 5]);
        assert_eq!(socek_permute(0x80, &reference), 0x10);
        assert_eq!(socek_inverse(0x10, &reference), 0x80);
    }

    #[test]
    fn shuffle_reaches_many_permutations() {
        let distinct: std::collections::HashSet<_> = (0..=u16::MAX)
            .map(|c| socek_permutation_from_control(c).as_array())
            .collect();
        // 8*8*8*4*4*4*2 slice values map onto fewer than 8! orderings
        assert!(distinct.len() > 30_000, "{}", distinct.len());
    }

    proptest::proptest! {
        #[test]
        fn spn_round_trips(
            b: u8,
            i in 0usize..8,
            keys in proptest::collection::vec(proptest::num::u8::ANY, 8),
            ctrls in proptest::collection::vec(proptest::num::u16::ANY, 8),
        ) {
            let perms = ctrls
                .iter()
                .map(|&c| BytePermutation::Socek(socek_permutation_from_control(c)))
                .collect();
            let s = RoundSchedule::new(keys, perms).unwrap();
            proptest::prop_assert_eq!(spn_decrypt_byte(spn_encrypt_byte(b, &s, i), &s, i), b);
        }

        #[test]
        fn bit_permutations_preserve_weight(b: u8, c: u16, cfg: u8) {
            let p = socek_permutation_from_control(c);
            proptest::prop_assert_eq!(socek_permute(b, &p).count_ones(), b.count_ones());
            proptest::prop_assert_eq!(
                cross_permute(b, cfg, StagePair::default()).count_ones(),
                b.count_ones()
            );
        }

        #[test]
        fn bit_permutation_inverse_composes(c: u16) {
            let p = socek_permutation_from_control(c);
            let id = p.inverse().inverse();
            proptest::prop_assert_eq!(id, p);
            for b in 0..=255u8 {
                proptest::prop_assert_eq!(socek_permute(socek_permute(b, &p), &p.inverse()), b);
            }
        }
    }
}
