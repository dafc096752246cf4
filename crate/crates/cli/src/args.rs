use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};

use cbcsti::cipher::{CipherConfig, LfsrSpec, Mode, SecretKey, Variant};
use cbcsti::permutation::{ArnoldParams, PixelMap, SineConvention, StandardMapParams};
use cbcsti::spn::StagePair;

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct KeyArgs {
    /// 128-bit key as 32 hex characters.
    #[arg(long)]
    pub key: Option<String>,
    /// File whose first line holds the hex key.
    #[arg(long, value_name = "PATH")]
    pub key_file: Option<PathBuf>,
}

impl KeyArgs {
    pub fn load(&self) -> Result<SecretKey> {
        let hex = match (&self.key, &self.key_file) {
            (Some(k), _) => k.clone(),
            (None, Some(p)) => std::fs::read_to_string(p)
                .with_context(|| format!("reading key file {}", p.display()))?
                .lines()
                .next()
                .unwrap_or_default()
                .to_string(),
            (None, None) => bail!("a key is required (--key or --key-file)"),
        };
        Ok(SecretKey::from_hex(&hex)?)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantArg {
    A,
    B,
    C,
    D,
    E,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::A => Variant::A,
            VariantArg::B => Variant::B,
            VariantArg::C => Variant::C,
            VariantArg::D => Variant::D,
            VariantArg::E => Variant::E,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Cbc,
    Ofb,
    Cfb,
    Ctr,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Cbc => Mode::Cbc,
            ModeArg::Ofb => Mode::Ofb,
            ModeArg::Cfb => Mode::Cfb,
            ModeArg::Ctr => Mode::Ctr,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConventionArg {
    Conventional,
    Literal,
}

/// Settings that are not stored in the container and must match at decryption.
#[derive(Args, Debug, Clone)]
pub struct EngineArgs {
    /// LFSR degree (4, 8, 16 or 32).
    #[arg(long, default_value_t = 32)]
    pub lfsr_degree: u32,
    /// Perturbation period in iterations.
    #[arg(long, default_value_t = 1)]
    pub lfsr_delta: u32,
    /// Cross butterfly distances as `m1,m2`.
    #[arg(long, value_name = "M1,M2", default_value = "1,4")]
    pub stages: String,
}

impl EngineArgs {
    pub fn apply(&self, cfg: CipherConfig) -> Result<CipherConfig> {
        let lfsr = LfsrSpec::new(self.lfsr_degree, self.lfsr_delta)?;
        let (m1, m2) = parse_pair(&self.stages).context("--stages")?;
        Ok(cfg
            .with_lfsr(lfsr)
            .with_stages(StagePair::new(m1 as u8, m2 as u8)?))
    }
}

#[derive(Args, Debug, Clone)]
pub struct ConfigArgs {
    #[arg(long, value_enum, default_value = "a")]
    pub variant: VariantArg,
    #[arg(long, value_enum, default_value = "ofb")]
    pub mode: ModeArg,
    /// SPN rounds (a multiple of 4).
    #[arg(long, default_value_t = 4)]
    pub rounds: usize,
    /// CFB segment width in bits.
    #[arg(long, default_value_t = 8)]
    pub segment_bits: u8,
    /// Explicit IV byte; derived from the key when omitted.
    #[arg(long)]
    pub iv: Option<u8>,
    /// Arnold map parameters `t,q,iterations` (variants C and D).
    #[arg(long, value_name = "T,Q,M")]
    pub arnold: Option<String>,
    /// Standard map kick strength (variants A and B).
    #[arg(long)]
    pub std_k: Option<f64>,
    /// Standard map iterations.
    #[arg(long)]
    pub std_iterations: Option<u32>,
    /// Standard map sine argument.
    #[arg(long, value_enum)]
    pub sine: Option<ConventionArg>,
    #[command(flatten)]
    pub engine: EngineArgs,
}

impl ConfigArgs {
    pub fn build(&self) -> Result<CipherConfig> {
        let variant: Variant = self.variant.into();
        let mut cfg = CipherConfig::new(variant, self.mode.into())
            .with_rounds(self.rounds)
            .with_segment_bits(self.segment_bits);
        if let Some(iv) = self.iv {
            cfg = cfg.with_iv(iv);
        }
        let map = match cfg.pixel_map {
            Some(PixelMap::Arnold(_)) => match &self.arnold {
                Some(spec) => {
                    let v = parse_list(spec, 3).context("--arnold")?;
                    Some(PixelMap::Arnold(ArnoldParams::new(v[0], v[1], v[2])?))
                }
                None => cfg.pixel_map,
            },
            Some(PixelMap::Standard(d)) => {
                let conv = match self.sine {
                    Some(ConventionArg::Literal) => SineConvention::PreUpdate,
                    Some(ConventionArg::Conventional) => SineConvention::Conventional,
                    None => d.convention(),
                };
                Some(PixelMap::Standard(StandardMapParams::new(
                    self.std_k.unwrap_or(d.k()),
                    self.std_iterations.unwrap_or(d.iterations()),
                    conv,
                )?))
            }
            None => None,
        };
        let uses_arnold = matches!(map, Some(PixelMap::Arnold(_)));
        let uses_standard = matches!(map, Some(PixelMap::Standard(_)));
        if self.arnold.is_some() && !uses_arnold {
            bail!("--arnold only applies to variants C and D");
        }
        if (self.std_k.is_some() || self.std_iterations.is_some() || self.sine.is_some())
            && !uses_standard
        {
            bail!("Standard map options only apply to variants A and B");
        }
        let cfg = self.engine.apply(cfg.with_map(map))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_list(s: &str, n: usize) -> Result<Vec<u32>> {
    let v = s
        .split(',')
        .map(|p| p.trim().parse::<u32>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .with_context(|| format!("expected {n} comma-separated integers, got {s:?}"))?;
    if v.len() != n {
        bail!("expected {n} comma-separated integers, got {s:?}");
    }
    Ok(v)
}

fn parse_pair(s: &str) -> Result<(u32, u32)> {
    let v = parse_list(s, 2)?;
    Ok((v[0], v[1]))
}

/// Parses a 1-based `row,col,channel` triplet.
pub fn parse_position(s: &str) -> Result<(usize, usize, usize)> {
    let v = parse_list(s, 3)?;
    Ok((v[0] as usize, v[1] as usize, v[2] as usize))
}
