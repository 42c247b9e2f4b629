use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::rngs::OsRng;
use serde::Serialize;
use serde_json::json;

use ncrna::codon::CodonSBox;
use ncrna::envelope::{self, Envelope};
use ncrna::error::Error;
use ncrna::fold::{fold, EnergyModel, SecondaryStructure};
use ncrna::harness::{self, AvalancheMode, BenchMatrix, Format};
use ncrna::keyforge;
use ncrna::qattack::{self, Profile, QuboMatrix};
use ncrna::sts::{self, BitStream, TestParams};

#[derive(Parser)]
#[command(name = "ncrna", version, about = "Fold-driven codon cipher toolkit")]
struct Cli {
    /// Directory for reports written under default names.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, global = true, default_value = "csv", value_parser = parse_format)]
    format: Format,
    /// Benchmark matrix as a TOML document.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Encrypt a file into an NCR1 envelope.
    Encrypt(CryptArgs),
    /// Decrypt an NCR1 envelope.
    Decrypt(CryptArgs),
    /// Derive a session key from a secret and salt.
    Keygen {
        #[arg(long)]
        secret: String,
        #[arg(long, value_parser = parse_hex)]
        salt: HexBytes,
        /// Print the raw key instead of its fingerprint.
        #[arg(long)]
        insecure_dump: bool,
    },
    /// Print the codon table for a seed.
    Sbox {
        #[arg(long, value_parser = parse_hex)]
        seed: HexBytes,
    },
    /// Fold an RNA string.
    Fold {
        #[arg(long)]
        seq: String,
    },
    /// Run the randomness battery on a binary file.
    Nist {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Truncate the stream to this many bits.
        #[arg(long)]
        bits: Option<usize>,
    },
    /// Build a QUBO instance.
    Qubo {
        #[arg(long, value_parser = parse_profile)]
        profile: Profile,
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimize and simulate QAOA on a QUBO instance.
    Qaoa {
        #[arg(long)]
        qubo: PathBuf,
        /// A layer count or an inclusive range such as 1..4.
        #[arg(long, default_value = "1..4", value_parser = parse_layers)]
        p: Layers,
        #[arg(long, default_value_t = 8192)]
        budget: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Grover iteration count and work estimate.
    GroverCost {
        #[arg(long)]
        key_bits: u32,
        #[arg(long)]
        fold_n: u64,
        #[arg(long, default_value_t = 1.0)]
        cost_constant: f64,
    },
    /// Time encryption and decryption across sizes and algorithms.
    Bench {
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Measure avalanche statistics.
    Avalanche {
        /// PLAINTEXT_BIT_FLIP, SEED_FLIP or LABEL_PERTURB(k); repeatable.
        #[arg(long = "mode", value_parser = parse_mode)]
        modes: Vec<AvalancheMode>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Plaintext bytes for the flip modes; bases for label mode.
        #[arg(long)]
        length: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CryptArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    secret: String,
    /// S-box seed as hex.
    #[arg(long, value_parser = parse_hex)]
    seed: HexBytes,
}

#[derive(Clone)]
struct HexBytes(Vec<u8>);

#[derive(Clone, Copy)]
struct Layers(usize, usize);

fn parse_hex(s: &str) -> Result<HexBytes, String> {
    hex::decode(s).map(HexBytes).map_err(|e| e.to_string())
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<AvalancheMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_layers(s: &str) -> Result<Layers, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t}: {e}"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
        None => (num(s)?, num(s)?),
    };
    if lo == 0 || lo > hi {
        return Err(format!("invalid layer range {s}"));
    }
    Ok(Layers(lo, hi))
}

fn write_json(value: &impl Serialize, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => {
            // A closed pipe (e.g. `| head`) is not an error.
            if let Err(e) = writeln!(std::io::stdout().lock(), "{text}") {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(e.into());
                }
            }
        }
    }
    Ok(())
}

fn default_report(cli: &Cli, report: &Option<PathBuf>, stem: &str) -> PathBuf {
    report.clone().unwrap_or_else(|| cli.out_dir.join(format!("{stem}.{}", cli.format.extension())))
}

fn load_matrix(path: Option<&Path>) -> Result<BenchMatrix> {
    let Some(path) = path else { return Ok(BenchMatrix::default()) };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn structure_json(s: &SecondaryStructure) -> serde_json::Value {
    json!({ "dot_bracket": s.dot_bracket, "mfe": s.mfe, "pairs": s.pairs() })
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Encrypt(a) => {
            let plain = fs::read(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
            let env = envelope::encrypt(&plain, a.secret.as_bytes(), &a.seed.0, &mut OsRng)?;
            fs::write(&a.out, env.serialize()).with_context(|| format!("writing {}", a.out.display()))?;
        }
        Cmd::Decrypt(a) => {
            let bytes = fs::read(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
            let plain = envelope::decrypt(&Envelope::parse(&bytes)?, a.secret.as_bytes(), &a.seed.0)?;
            fs::write(&a.out, plain).with_context(|| format!("writing {}", a.out.display()))?;
        }
        Cmd::Keygen { secret, salt, insecure_dump } => {
            let key = keyforge::session_key(secret.as_bytes(), &salt.0, &EnergyModel::default())?;
            if *insecure_dump {
                println!("{}", hex::encode(key.key));
            } else {
                println!("{}", key.fingerprint());
            }
        }
        Cmd::Sbox { seed } => {
            let sbox = CodonSBox::build(&seed.0)?;
            let table: Vec<_> = sbox
                .table()
                .iter()
                .enumerate()
                .map(|(i, c)| json!({ "index": i, "codon": c.to_string() }))
                .collect();
            write_json(&table, None)?;
        }
        Cmd::Fold { seq } => {
            let rna = seq.parse()?;
            write_json(&structure_json(&fold(&rna, &EnergyModel::default())), None)?;
        }
        Cmd::Nist { input, report, bits } => {
            let bytes = fs::read(input).with_context(|| format!("reading {}", input.display()))?;
            let mut stream = BitStream::from_bytes(&bytes);
            if let Some(b) = bits {
                stream = stream.truncated(*b);
            }
            let results = sts::run_all(&stream, &TestParams::default())?;
            write_json(&results, report.as_deref())?;
        }
        Cmd::Qubo { profile, n, out } => {
            write_json(&qattack::build_reference_qubo(*profile, *n)?, out.as_deref())?;
        }
        Cmd::Qaoa { qubo, p, budget, report } => {
            let text = fs::read_to_string(qubo).with_context(|| format!("reading {}", qubo.display()))?;
            let q: QuboMatrix = serde_json::from_str(&text)?;
            q.validate()?;
            let mut rows = Vec::new();
            for layers in p.0..=p.1 {
                let outcome = qattack::optimize_angles(&q, layers, *budget)?;
                let success = qattack::success_probability(&outcome);
                rows.push(json!({ "profile": q.profile, "n": q.n, "budget": budget, "outcome": outcome, "success": success }));
            }
            write_json(&rows, report.as_deref())?;
        }
        Cmd::GroverCost { key_bits, fold_n, cost_constant } => {
            write_json(&qattack::grover_work(*key_bits, *fold_n, *cost_constant)?, None)?;
        }
        Cmd::Bench { report } => {
            let matrix = load_matrix(cli.config.as_deref())?;
            let out = harness::bench(&matrix)?;
            for (alg, why) in &out.unavailable {
                eprintln!("skipping {alg}: {why}");
            }
            harness::report(&out.records, cli.format, &default_report(cli, report, "bench"))?;
        }
        Cmd::Avalanche { modes, samples, length, seed, report } => {
            let modes = if modes.is_empty() {
                let mut m = vec![AvalancheMode::PlaintextBitFlip, AvalancheMode::SeedFlip];
                m.extend([1, 2, 4, 8].map(AvalancheMode::LabelPerturb));
                m
            } else {
                modes.clone()
            };
            let mut records = Vec::new();
            for mode in modes {
                let len = length.unwrap_or(match mode {
                    AvalancheMode::LabelPerturb(_) => 100,
                    _ => 1024,
                });
                records.push(harness::avalanche(mode, *samples, len, *seed)?);
            }
            harness::report(&records, cli.format, &default_report(cli, report, "avalanche"))?;
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::IntegrityFailure) => 3,
        Some(Error::InsufficientData(_) | Error::InsufficientSamples { .. }) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = fs::create_dir_all(&cli.out_dir) {
        eprintln!("error: creating {}: {e}", cli.out_dir.display());
        return ExitCode::from(1);
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
