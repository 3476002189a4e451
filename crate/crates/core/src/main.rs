use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ptcm::codec::Bit;
use ptcm::rsse::{complexity_report, PartitionProfile};
use ptcm::sim::selftest::{builtin_cases, oracle_equivalence};
use ptcm::sim::{point_seed, run_point_with, run_sweep, to_csv, write_csv, DecoderKind, SimConfig};
use ptcm::Error;

#[derive(Parser)]
#[command(name = "ptcm", version, about = "Punctured TCM over ISI channels: joint Viterbi and RSSE decoding")]
struct Cli {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overrides `sim.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path for CSV results.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run only this decoder.
    #[arg(long, global = true, value_enum)]
    decoder: Option<DecoderArg>,
    /// Subset counts J1,J2,... for RSSE.
    #[arg(long, global = true, value_delimiter = ',')]
    profile: Option<Vec<usize>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderArg {
    Va,
    Rsse,
    Oracle,
}

#[derive(Subcommand)]
enum Command {
    /// Encode and map information bits, print symbol ranks and amplitudes.
    Encode {
        /// Bits as a 0/1 string; read from stdin when absent.
        #[arg(long)]
        bits: Option<String>,
    },
    /// Simulate one SNR point.
    Ber {
        /// Eb/N0 in dB; defaults to the first configured SNR.
        #[arg(long, allow_negative_numbers = true)]
        snr: Option<f64>,
    },
    /// Simulate every configured decoder and SNR and write CSV.
    Sweep,
    /// Print state counts and branch work per decoder.
    Complexity,
    /// Check Viterbi decisions against exhaustive search.
    Selftest {
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidProfile(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn load_config(cli: &Cli) -> Result<SimConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => SimConfig::load(path)?,
        None => SimConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let rsse_profile = || -> Result<Vec<usize>, Failure> {
        if let Some(p) = &cli.profile {
            return Ok(p.clone());
        }
        cfg.decoders
            .iter()
            .find_map(|d| match d {
                DecoderKind::Rsse(j) => Some(j.clone()),
                _ => None,
            })
            .ok_or_else(|| Failure::Config("--decoder rsse needs --profile".into()))
    };
    match cli.decoder {
        Some(DecoderArg::Va) => cfg.decoders = vec![DecoderKind::Va],
        Some(DecoderArg::Oracle) => cfg.decoders = vec![DecoderKind::Oracle],
        Some(DecoderArg::Rsse) => cfg.decoders = vec![DecoderKind::Rsse(rsse_profile()?)],
        None => {
            if let Some(p) = &cli.profile {
                cfg.decoders = vec![DecoderKind::Rsse(p.clone())];
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_bits(text: &str) -> Result<Vec<Bit>, Failure> {
    text.chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Failure::Runtime(format!("bad bit {other:?}"))),
        })
        .collect()
}

fn encode(cfg: &SimConfig, bits: Option<String>) -> Result<(), Failure> {
    let text = match bits {
        Some(b) => b,
        None => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|e| Failure::Runtime(e.to_string()))?;
            s
        }
    };
    let mut info = parse_bits(&text)?;
    let link = cfg.build_link()?;
    // Smallest block holding every bit; the rest is zero filled.
    let mut steps = 1;
    let layout = loop {
        let layout = link.layout(steps, cfg.termination);
        if layout.info_bits >= info.len() {
            break layout;
        }
        steps += 1;
    };
    info.resize(layout.info_bits, 0);
    let ranks = link.transmit(&info, &layout)?;
    let amps = link.amplitudes(&ranks);
    let join = |v: Vec<String>| v.join(" ");
    println!("info {}", join(info.iter().map(|b| b.to_string()).collect()));
    println!("ranks {}", join(ranks.iter().map(|r| r.to_string()).collect()));
    println!("amplitudes {}", join(amps.iter().map(|a| format!("{a:.6}")).collect()));
    Ok(())
}

fn emit_csv(cli: &Cli, records: &[ptcm::sim::BerRecord]) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => write_csv(records, path)?,
        None => print!("{}", to_csv(records)),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Encode { bits } => encode(&cfg, bits.clone()),
        Command::Ber { snr } => {
            let snr = snr.unwrap_or(cfg.snr_db[0]);
            let records = cfg
                .decoders
                .iter()
                .map(|d| run_point_with(&cfg, d, snr, point_seed(cfg.seed, 0)))
                .collect::<ptcm::Result<Vec<_>>>()?;
            emit_csv(cli, &records)
        }
        Command::Sweep => emit_csv(cli, &run_sweep(&cfg)?),
        Command::Complexity => {
            let link = cfg.build_link()?;
            println!("decoder,states_full,states_reduced,branches_per_symbol,reduction_factor");
            for d in &cfg.decoders {
                let profile = match d {
                    DecoderKind::Rsse(j) => cfg.profile(&link, j)?,
                    _ => PartitionProfile::full(link.constellation(), link.channel_memory()),
                };
                let r = complexity_report(&link, &profile);
                println!(
                    "{},{},{},{},{}",
                    d.label(),
                    r.full_states,
                    r.reduced_states,
                    r.branches_per_step,
                    r.reduction_factor
                );
            }
            Ok(())
        }
        Command::Selftest { trials } => {
            let mut failed = false;
            for case in builtin_cases()? {
                let r = oracle_equivalence(&case.link, case.info_steps, case.ebn0_db, *trials, cfg.seed)?;
                println!(
                    "{} {}: {}/{} agree, {} block errors at {} dB",
                    if r.passed() { "PASS" } else { "FAIL" },
                    case.name,
                    r.agreements,
                    r.trials,
                    r.block_errors,
                    case.ebn0_db
                );
                failed |= !r.passed();
            }
            if failed {
                Err(Failure::Runtime("oracle mismatch".into()))
            } else {
                Ok(())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("ptcm: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("ptcm: {msg}");
            ExitCode::from(3)
        }
    }
}
