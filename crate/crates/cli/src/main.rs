//! `cbcsti` command-line tool.

mod args;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use args::{parse_position, ConfigArgs, EngineArgs, KeyArgs};
use cbcsti::analysis::{
    self, analyze_image, body_index, measure_error_propagation, single_flip_blocks,
    AnalysisReport, ChannelModel, PropagationMode, Sampling,
};
use cbcsti::cipher::{Cipher, CipherConfig, CipherText, Mode, Variant, MAGIC};
use cbcsti::image::{encode_image, load_image, ImageFormat};
use cbcsti::{selftest, ImageBuffer};

#[derive(Parser, Debug)]
#[command(name = "cbcsti", version, about = "Chaos-based image block cipher and analysis tools")]
struct Cli {
    /// Emit reports as a single JSON document.
    #[arg(long, global = true)]
    json: bool,
    /// Also write each report into this directory.
    #[arg(long, global = true, env = "CBCSTI_REPORT_DIR", value_name = "DIR")]
    report_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Encrypt an image (PPM, PGM or BMP) into a container.
    Encrypt {
        #[command(flatten)]
        key: KeyArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long = "in", value_name = "IMAGE")]
        input: PathBuf,
        #[arg(long = "out", value_name = "CONTAINER")]
        output: PathBuf,
    },
    /// Decrypt a container back to an image.
    Decrypt {
        #[command(flatten)]
        key: KeyArgs,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long = "in", value_name = "CONTAINER")]
        input: PathBuf,
        /// Output image; the format follows the extension.
        #[arg(long = "out", value_name = "IMAGE")]
        output: PathBuf,
    },
    /// Entropy, correlation and histogram statistics of an image or container
    /// body, with NPCR/UACI against a second one.
    Analyze {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        against: Option<PathBuf>,
        /// Sample this many random adjacent pairs instead of all of them.
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Send a ciphertext through a binary symmetric channel and measure the
    /// decrypted error rate, or flip single bits at given positions.
    Channel {
        #[command(flatten)]
        key: KeyArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Use the bare block primitive with no chaining.
        #[arg(long)]
        ecb: bool,
        #[arg(long = "in", value_name = "IMAGE")]
        input: PathBuf,
        /// Bit error probability.
        #[arg(long, default_value_t = 0.001)]
        pe: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// 1-based `row,col,channel` ciphertext position whose LSB is flipped.
        #[arg(long = "flip", value_name = "ROW,COL,CH")]
        flips: Vec<String>,
    },
    /// NPCR/UACI between ciphertexts under keys differing in one bit.
    Keysens {
        #[command(flatten)]
        key: KeyArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long = "in", value_name = "IMAGE")]
        input: PathBuf,
        /// Key bit to flip (0 = LSB of the last byte).
        #[arg(long, default_value_t = 97)]
        bit: u32,
    },
    /// Ciphertext change caused by one flipped plaintext bit.
    Ptsens {
        #[command(flatten)]
        key: KeyArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long = "in", value_name = "IMAGE")]
        input: PathBuf,
        /// 1-based `row,col,channel` of the plaintext pixel.
        #[arg(long, value_name = "ROW,COL,CH", default_value = "1,1,1")]
        at: String,
        /// Bit within the pixel (0 = LSB).
        #[arg(long, default_value_t = 0)]
        bit: u8,
    },
    /// Write the raw words of one key-derived orbit as a bit stream.
    OrbitDump {
        #[command(flatten)]
        key: KeyArgs,
        #[command(flatten)]
        engine: EngineArgs,
        /// 1 for the substitution orbit, 2 for the permutation orbit.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        orbit: u8,
        /// Number of 32-bit words.
        #[arg(long, default_value_t = 65536)]
        count: usize,
        /// Write ASCII `0`/`1` instead of raw bytes.
        #[arg(long)]
        ascii: bool,
        #[arg(long = "out", value_name = "FILE")]
        output: PathBuf,
    },
    /// Run the exhaustive primitive consistency suites.
    Selftest,
}

/// A report in both renderings.
struct Report {
    name: &'static str,
    flat: String,
    json: String,
}

impl Report {
    fn from_analysis(name: &'static str, r: &AnalysisReport) -> Self {
        Self {
            name,
            flat: r.to_flat_text(),
            json: r.to_json(),
        }
    }

    fn from_map(name: &'static str, m: BTreeMap<String, serde_json::Value>) -> Self {
        let flat = m
            .iter()
            .map(|(k, v)| match v {
                serde_json::Value::String(s) => format!("{k}={s}\n"),
                other => format!("{k}={other}\n"),
            })
            .collect();
        Self {
            name,
            flat,
            json: serde_json::to_string_pretty(&m).expect("map serializes"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let started = Instant::now();
    let (report, ok) = match &cli.command {
        Command::Encrypt {
            key,
            config,
            input,
            output,
        } => {
            encrypt(key, config, input, output)?;
            (None, true)
        }
        Command::Decrypt {
            key,
            engine,
            input,
            output,
        } => {
            decrypt(key, engine, input, output)?;
            (None, true)
        }
        Command::Analyze {
            input,
            against,
            pairs,
            seed,
        } => (Some(analyze(input, against.as_deref(), *pairs, *seed)?), true),
        Command::Channel {
            key,
            config,
            ecb,
            input,
            pe,
            seed,
            flips,
        } => (
            Some(channel(key, config, *ecb, input, *pe, *seed, flips)?),
            true,
        ),
        Command::Keysens {
            key,
            config,
            input,
            bit,
        } => (Some(keysens(key, config, input, *bit)?), true),
        Command::Ptsens {
            key,
            config,
            input,
            at,
            bit,
        } => (Some(ptsens(key, config, input, at, *bit)?), true),
        Command::OrbitDump {
            key,
            engine,
            orbit,
            count,
            ascii,
            output,
        } => (
            Some(orbit_dump(key, engine, *orbit, *count, *ascii, output)?),
            true,
        ),
        Command::Selftest => {
            let (r, ok) = run_selftest();
            (Some(r), ok)
        }
    };
    if let Some(r) = report {
        let text = if cli.json { &r.json } else { &r.flat };
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes())?;
        if cli.json {
            writeln!(out)?;
        }
        if let Some(dir) = &cli.report_dir {
            fs::create_dir_all(dir)
                .with_context(|| format!("creating report directory {}", dir.display()))?;
            let ext = if cli.json { "json" } else { "txt" };
            write_atomic(&dir.join(format!("{}.{ext}", r.name)), text.as_bytes())?;
        }
    }
    eprintln!("elapsed {:.3}s", started.elapsed().as_secs_f64());
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

/// Writes through a sibling temporary file so a failure never leaves a
/// partial output behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| {
        let _ = fs::remove_file(&tmp);
        format!("renaming into {}", path.display())
    })
}

fn load(path: &Path) -> Result<ImageBuffer> {
    load_image(path).with_context(|| format!("loading image {}", path.display()))
}

/// An image file, or a container body viewed as its padded square image.
fn load_any(path: &Path) -> Result<ImageBuffer> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.starts_with(MAGIC) {
        let ct = CipherText::from_bytes(&bytes)?;
        let h = ct.header;
        return Ok(ImageBuffer::new(
            h.width as usize,
            h.height as usize,
            h.channels as usize,
            ct.body,
        )?);
    }
    cbcsti::image::decode_image(&bytes)
        .with_context(|| format!("decoding {}", path.display()))
}

fn encrypt(key: &KeyArgs, config: &ConfigArgs, input: &Path, output: &Path) -> Result<()> {
    let cfg = config.build()?;
    let img = load(input)?;
    let t = Instant::now();
    let ct = Cipher::new(&key.load()?, &cfg)?.encrypt_image(&img)?;
    eprintln!(
        "encrypted {}x{}x{} ({}/{} r={}) in {:.3}s",
        img.width(),
        img.height(),
        img.channels(),
        cfg.variant,
        cfg.mode,
        cfg.rounds,
        t.elapsed().as_secs_f64()
    );
    write_atomic(output, &ct.to_bytes())
}

fn decrypt(key: &KeyArgs, engine: &EngineArgs, input: &Path, output: &Path) -> Result<()> {
    let bytes = fs::read(input).with_context(|| format!("reading {}", input.display()))?;
    let ct = CipherText::from_bytes(&bytes)?;
    let cfg = engine.apply(ct.header.to_config())?;
    let t = Instant::now();
    let img = Cipher::new(&key.load()?, &cfg)?.decrypt_image(&ct)?;
    eprintln!("decrypted in {:.3}s", t.elapsed().as_secs_f64());
    let format = ImageFormat::from_path(output)
        .unwrap_or_else(|| ImageFormat::netpbm_for(img.channels()));
    write_atomic(output, &encode_image(&img, format)?)
}

fn analyze(input: &Path, against: Option<&Path>, pairs: Option<usize>, seed: u64) -> Result<Report> {
    let img = load_any(input)?;
    let other = against.map(load_any).transpose()?;
    let sampling = match pairs {
        Some(pairs) => Sampling::Random { pairs, seed },
        None => Sampling::All,
    };
    let stats = analyze_image(&img, other.as_ref(), sampling)?;
    Ok(Report::from_analysis(
        "analyze",
        &AnalysisReport {
            seed,
            stats: Some(stats),
            error_propagation: None,
        },
    ))
}

fn channel(
    key: &KeyArgs,
    config: &ConfigArgs,
    ecb: bool,
    input: &Path,
    pe: f64,
    seed: u64,
    flips: &[String],
) -> Result<Report> {
    let cfg = config.build()?;
    let cipher = Cipher::new(&key.load()?, &cfg)?;
    let mode = if ecb {
        PropagationMode::Ecb
    } else {
        cfg.mode.into()
    };
    let img = load(input)?.pad_to_square();
    let ch = ChannelModel::new(pe, seed)?;
    let ep = measure_error_propagation(&cipher, mode, img.data(), &ch)?;
    let report = AnalysisReport {
        seed,
        stats: None,
        error_propagation: Some(ep),
    };
    if flips.is_empty() {
        return Ok(Report::from_analysis("channel", &report));
    }
    let positions = flips
        .iter()
        .map(|f| {
            let (r, c, ch) = parse_position(f).context("--flip")?;
            Ok((body_index(r, c, ch, img.width(), img.channels())?, 0u8))
        })
        .collect::<Result<Vec<_>>>()?;
    let counts = single_flip_blocks(&cipher, mode, img.data(), &positions)?;
    let mut m: BTreeMap<String, serde_json::Value> = report
        .entries()
        .into_iter()
        .map(|(k, v)| (k, serde_json::Value::String(v)))
        .collect();
    for (f, n) in flips.iter().zip(counts) {
        m.insert(format!("flip.{f}.blocks"), n.into());
    }
    Ok(Report::from_map("channel", m))
}

fn per_channel(a: &[u8], b: &[u8], channels: usize) -> Result<Vec<(f64, f64)>> {
    let plane = a.len() / channels;
    (0..channels)
        .map(|c| {
            let r = c * plane..(c + 1) * plane;
            Ok((
                analysis::npcr_bytes(&a[r.clone()], &b[r.clone()])?,
                analysis::uaci_bytes(&a[r.clone()], &b[r])?,
            ))
        })
        .collect()
}

const CHANNEL_KEYS: [&str; 3] = ["r", "g", "b"];

fn keysens(key: &KeyArgs, config: &ConfigArgs, input: &Path, bit: u32) -> Result<Report> {
    let cfg = config.build()?;
    let k1 = key.load()?;
    let k2 = k1.with_flipped_bit(bit)?;
    let img = load(input)?;
    let a = Cipher::new(&k1, &cfg)?.encrypt_image(&img)?.body;
    let b = Cipher::new(&k2, &cfg)?.encrypt_image(&img)?.body;
    let mut m = BTreeMap::new();
    m.insert("key.bit".into(), bit.into());
    m.insert("npcr".into(), analysis::npcr_bytes(&a, &b)?.into());
    m.insert("uaci".into(), analysis::uaci_bytes(&a, &b)?.into());
    for (c, (n, u)) in per_channel(&a, &b, img.channels())?.into_iter().enumerate() {
        m.insert(format!("npcr.{}", CHANNEL_KEYS[c]), n.into());
        m.insert(format!("uaci.{}", CHANNEL_KEYS[c]), u.into());
    }
    Ok(Report::from_map("keysens", m))
}

fn ptsens(key: &KeyArgs, config: &ConfigArgs, input: &Path, at: &str, bit: u8) -> Result<Report> {
    let cfg = config.build()?;
    let (row, col, ch) = parse_position(at).context("--at")?;
    let img = load(input)?;
    if row == 0 || col == 0 || ch == 0 || row > img.height() || col > img.width() || ch > img.channels() {
        bail!("--at {at} is outside the {}x{}x{} image", img.height(), img.width(), img.channels());
    }
    if bit > 7 {
        bail!("--bit must be 0..=7");
    }
    let mut flipped = img.clone();
    let v = flipped.get(col - 1, row - 1, ch - 1);
    flipped.set(col - 1, row - 1, ch - 1, v ^ (1 << bit));
    let cipher = Cipher::new(&key.load()?, &cfg)?;
    let a = cipher.encrypt_image(&img)?.body;
    let b = cipher.encrypt_image(&flipped)?.body;
    let changed = analysis::count_erroneous_blocks(&a, &b)?;
    let mut m = BTreeMap::new();
    m.insert("changed.blocks".into(), changed.into());
    if let Some(first) = a.iter().zip(&b).position(|(x, y)| x != y) {
        m.insert("first.block".into(), first.into());
        m.insert("npcr".into(), analysis::npcr_bytes(&a[first..], &b[first..])?.into());
        m.insert("uaci".into(), analysis::uaci_bytes(&a[first..], &b[first..])?.into());
    }
    Ok(Report::from_map("ptsens", m))
}

fn orbit_dump(
    key: &KeyArgs,
    engine: &EngineArgs,
    orbit: u8,
    count: usize,
    ascii: bool,
    output: &Path,
) -> Result<Report> {
    if count == 0 {
        bail!("--count must be positive");
    }
    let cfg = engine.apply(CipherConfig::new(Variant::E, Mode::Ofb))?;
    let cipher = Cipher::new(&key.load()?, &cfg)?;
    let words = if orbit == 1 {
        cipher.orbit_one()
    } else {
        cipher.orbit_two()
    };
    let bytes: Vec<u8> = words.take(count).flat_map(|v| v.to_be_bytes()).collect();
    let mut tmp = output.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let bits = analysis::export_bitstream(&bytes, &tmp, ascii)?;
    fs::rename(&tmp, output).with_context(|| format!("renaming into {}", output.display()))?;
    let mut m = BTreeMap::new();
    m.insert("orbit".into(), orbit.into());
    m.insert("words".into(), count.into());
    m.insert("bits".into(), bits.into());
    Ok(Report::from_map("orbit-dump", m))
}

fn run_selftest() -> (Report, bool) {
    let results = selftest::run_all();
    let ok = results.iter().all(|r| r.passed());
    let flat = results.iter().map(|r| format!("{r}\n")).collect();
    let json = serde_json::to_string_pretty(&results).expect("results serialize");
    (
        Report {
            name: "selftest",
            flat,
            json,
        },
        ok,
    )
}
