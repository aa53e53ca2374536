//! Command-line front end for polarcraft.

mod parse;

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use polarcraft::analysis::{bitwise_diagnostics, learning_difficulty, noiseless_ber, noiseless_rules};
use polarcraft::channels::{ChannelKind, ChannelModel, ReceivedWord};
use polarcraft::curriculum::{make_schedule, run_curriculum, ScheduleKind, SnrPolicy, TrainConfig};
use polarcraft::encoding::{encode_bits, modulate};
use polarcraft::harness::{simulate_with, throughput_bench, CodeConfig, DecoderConfig, ExperimentConfig, SimOptions};
use polarcraft::neural::{layer_forward_macs, reference_complexity, save_params};
use polarcraft::{CodeFamily, CodeSpec, LseMode, MetricMode};

#[derive(Parser, Debug)]
#[command(name = "polarcraft", version, about = "Polar and PAC code construction, decoding and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a code and print its information set.
    Construct {
        #[command(flatten)]
        code: CodeArgs,
        /// Write the full spec as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the full spec as JSON instead of a summary.
        #[arg(long)]
        json: bool,
    },
    /// Encode a message given as binary digits or 0x-prefixed hex.
    Encode {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long)]
        message: String,
    },
    /// Decode LLR (or received sample) vectors read from a file or stdin.
    Decode {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        decoder: DecoderArgs,
        /// Input file; stdin when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        /// What the input values are.
        #[arg(long, value_enum, default_value_t = InputKind::Llr)]
        input_kind: InputKind,
        /// Channel SNR, required for received samples with a classical decoder.
        #[arg(long)]
        snr: Option<f64>,
    },
    /// Run a BER/BLER sweep described by a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override the CSV output path.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Override the JSON sidecar path.
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Train a neural decoder with a curriculum described by a JSON config.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Decoding rules, learning difficulty and error diagnostics.
    Analyze {
        #[command(subcommand)]
        what: AnalyzeCommand,
    },
    /// Decoder throughput in information Mbps.
    Bench {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        decoder: DecoderArgs,
        #[arg(long, default_value_t = 2.0)]
        snr: f64,
        #[arg(long, default_value_t = 256)]
        batch: usize,
        #[arg(long, default_value_t = 1000)]
        duration_ms: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand, Debug)]
enum AnalyzeCommand {
    /// Noiseless decoding rule of every information bit.
    Rules {
        #[command(flatten)]
        code: CodeArgs,
        /// Active information indices; the full information set by default.
        #[arg(long)]
        active: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Rule sizes at every step of a curriculum.
    Difficulty {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, default_value = "l2r")]
        schedule: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// BER on noiseless codewords.
    Noiseless {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        decoder: DecoderArgs,
        #[arg(long, default_value_t = 1000)]
        blocks: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Marginal BER and first-error share of every message bit.
    Bitwise {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        decoder: DecoderArgs,
        #[arg(long, default_value_t = 0.0)]
        snr: f64,
        #[arg(long, default_value_t = 100_000)]
        blocks: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InputKind {
    Llr,
    Samples,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    Polar,
    Pac,
    CrcPolar,
}

#[derive(Args, Debug)]
struct CodeArgs {
    /// JSON file with a code spec or code config; replaces the flags below.
    #[arg(long)]
    code: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FamilyArg::Polar)]
    family: FamilyArg,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = polarcraft::construction::DEFAULT_Z0)]
    z0: f64,
    /// Explicit information set, e.g. 2,4 (polar only).
    #[arg(long)]
    info_set: Option<String>,
    /// PAC convolution kernel as bits, e.g. 1011011.
    #[arg(long)]
    kernel: Option<String>,
    /// CRC generator, bit i = coefficient of x^i (e.g. 0x107).
    #[arg(long)]
    crc_poly: Option<String>,
}

impl CodeArgs {
    fn spec(&self) -> Result<CodeSpec> {
        if let Some(path) = &self.code {
            return parse::load_code(path);
        }
        let (Some(n), Some(k)) = (self.n, self.k) else {
            bail!("give --n and --k, or --code FILE");
        };
        let crc_poly = match &self.crc_poly {
            Some(t) => Some(match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
                Some(hex) => u64::from_str_radix(hex, 16),
                None => t.parse(),
            }
            .with_context(|| format!("invalid CRC polynomial '{t}'"))?),
            None => None,
        };
        let cfg = CodeConfig {
            family: match self.family {
                FamilyArg::Polar => CodeFamily::Polar,
                FamilyArg::Pac => CodeFamily::Pac,
                FamilyArg::CrcPolar => CodeFamily::CrcPolar,
            },
            n,
            k,
            z0: self.z0,
            info_set: self.info_set.as_deref().map(parse::parse_index_list).transpose()?,
            pac_kernel: self.kernel.as_deref().map(parse::parse_bits).transpose()?,
            crc_poly,
        };
        Ok(cfg.build()?)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DecoderKind {
    Sc,
    Scl,
    Map,
    Neural,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MetricArg {
    Exact,
    Approx,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LseArg {
    Exact,
    MinSum,
}

#[derive(Args, Debug)]
struct DecoderArgs {
    #[arg(long, value_enum, default_value_t = DecoderKind::Sc)]
    decoder: DecoderKind,
    #[arg(long, default_value_t = 32)]
    list_size: usize,
    #[arg(long, value_enum, default_value_t = MetricArg::Exact)]
    metric: MetricArg,
    #[arg(long, value_enum, default_value_t = LseArg::Exact)]
    lse: LseArg,
    /// Neural decoder checkpoint.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

impl DecoderArgs {
    fn config(&self) -> Result<DecoderConfig> {
        let lse = match self.lse {
            LseArg::Exact => LseMode::Exact,
            LseArg::MinSum => LseMode::MinSum,
        };
        Ok(match self.decoder {
            DecoderKind::Sc => DecoderConfig::Sc { lse },
            DecoderKind::Scl => DecoderConfig::Scl {
                list_size: self.list_size,
                metric: match self.metric {
                    MetricArg::Exact => MetricMode::Exact,
                    MetricArg::Approx => MetricMode::Approx,
                },
                lse,
            },
            DecoderKind::Map => DecoderConfig::Map,
            DecoderKind::Neural => DecoderConfig::Neural {
                checkpoint: self.checkpoint.clone().context("--decoder neural needs --checkpoint")?,
            },
        })
    }
}

/// `train --config` file contents.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrainRunConfig {
    code: CodeConfig,
    schedule: ScheduleKind,
    train_snr: SnrPolicy,
    #[serde(default)]
    train: TrainConfig,
    output: TrainOutput,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrainOutput {
    checkpoint: PathBuf,
    history: PathBuf,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

fn bit_string(bits: &[u8]) -> String {
    bits.iter().map(|b| char::from(b'0' + b)).collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Construct { code, out, json } => {
            let spec = code.spec()?;
            if let Some(path) = out {
                std::fs::write(&path, spec.to_json()?).with_context(|| format!("cannot write {}", path.display()))?;
            }
            if json {
                println!("{}", spec.to_json()?);
            } else {
                let list = |v: &[usize]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
                println!("info_set {{{}}}", list(&spec.info_set));
                println!("reliability_order {}", list(&spec.reliability_order));
            }
        }
        Command::Encode { code, message } => {
            let spec = code.spec()?;
            let u = parse::parse_message(&message, spec.message_len())?;
            let x = encode_bits(&u, &spec)?;
            let symbols: Vec<String> = modulate(&x).symbols.iter().map(|s| format!("{s:+}")).collect();
            println!("codeword {}", bit_string(&x));
            println!("symbols {}", symbols.join(" "));
        }
        Command::Decode {
            code,
            decoder,
            input,
            input_kind,
            snr,
        } => {
            let spec = code.spec()?;
            let dec = decoder.config()?.build(&spec)?;
            let text = match &input {
                Some(p) => std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?,
                None => {
                    let mut s = String::new();
                    std::io::stdin().read_to_string(&mut s)?;
                    s
                }
            };
            let words = parse::parse_llrs(&text, spec.n)?;
            let channel = match input_kind {
                // with sigma^2 = 2 the demodulator passes values through unchanged
                InputKind::Llr => ChannelModel::awgn(std::f64::consts::SQRT_2)?,
                InputKind::Samples => match (snr, decoder.decoder) {
                    (Some(s), _) => ChannelModel::awgn_snr(s),
                    (None, DecoderKind::Neural) => ChannelModel::awgn_snr(0.0),
                    (None, _) => bail!("--input-kind samples needs --snr"),
                },
            };
            if matches!(input_kind, InputKind::Llr) && matches!(decoder.decoder, DecoderKind::Neural) {
                bail!("the neural decoder reads received samples: use --input-kind samples");
            }
            let ys: Vec<ReceivedWord> = words
                .into_iter()
                .map(|samples| ReceivedWord {
                    samples,
                    fading_gains: None,
                })
                .collect();
            for u in dec.decode_batch(&ys, &channel)? {
                println!("{}", bit_string(&u));
            }
        }
        Command::Simulate {
            config,
            csv,
            json,
            threads,
        } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("cannot read {}", config.display()))?;
            let mut cfg = ExperimentConfig::from_json(&text).with_context(|| format!("invalid config {}", config.display()))?;
            if csv.is_some() {
                cfg.output.csv = csv;
            }
            if json.is_some() {
                cfg.output.json = json;
            }
            let spec = cfg.code.build()?;
            let dec = cfg.decoder.build(&spec)?;
            let result = simulate_with(&cfg, dec.as_ref(), SimOptions { threads, stop: None })?;
            if cfg.output.csv.is_none() {
                print!("{}", result.to_csv());
            }
        }
        Command::Train { config } => {
            let cfg: TrainRunConfig = read_json(&config)?;
            cfg.train.validate()?;
            let spec = cfg.code.build()?;
            let schedule = make_schedule(
                &spec,
                cfg.schedule,
                cfg.train.iters_per_step,
                cfg.train.final_iters,
                cfg.train_snr,
                cfg.train.seed,
            )?;
            let (params, history) = run_curriculum(&spec, &schedule, &cfg.train)?;
            save_params(&cfg.output.checkpoint, &spec, &params, cfg.train.seed, schedule.steps.len())?;
            std::fs::write(&cfg.output.history, history.to_csv())
                .with_context(|| format!("cannot write {}", cfg.output.history.display()))?;
            if let Some(last) = history.records.last() {
                println!(
                    "trained {} iterations: val_ber {} noiseless_ber {} at {} dB",
                    last.iteration,
                    last.val_ber,
                    last.noiseless_ber,
                    schedule.steps.last().map_or(0.0, |s| s.train_snr_db)
                );
            }
        }
        Command::Analyze { what } => analyze(what)?,
        Command::Bench {
            code,
            decoder,
            snr,
            batch,
            duration_ms,
            seed,
        } => {
            let spec = code.spec()?;
            let dec = decoder.config()?.build(&spec)?;
            let report = throughput_bench(
                dec.as_ref(),
                &ChannelModel::awgn_snr(snr),
                batch,
                Duration::from_millis(duration_ms),
                seed,
            )?;
            println!("{}", serde_json::to_string(&report)?);
            if let Some(path) = decoder.checkpoint.as_ref().filter(|_| matches!(decoder.decoder, DecoderKind::Neural)) {
                let params = polarcraft::neural::load_params(path)?;
                let input = params.input_dim();
                let h = params.hidden_dim();
                let macs: usize = (0..params.num_layers())
                    .map(|l| layer_forward_macs(spec.n, if l == 0 { input } else { h }, h))
                    .sum();
                println!(
                    "{}",
                    serde_json::json!({
                        "gru_macs_per_block": macs,
                        "reference_ops_per_block": reference_complexity(spec.n, h),
                    })
                );
            }
        }
    }
    Ok(())
}

fn analyze(what: AnalyzeCommand) -> Result<()> {
    match what {
        AnalyzeCommand::Rules { code, active, format } => {
            let spec = code.spec()?;
            let active = match active {
                Some(t) => parse::parse_index_list(&t)?,
                None => spec.info_set.clone(),
            };
            let rule = noiseless_rules(&spec, &active)?;
            match format {
                Format::Csv => print!("{}", rule.to_csv()),
                Format::Json => println!("{}", serde_json::to_string(&rule)?),
            }
        }
        AnalyzeCommand::Difficulty {
            code,
            schedule,
            seed,
            format,
        } => {
            let spec = code.spec()?;
            let kind: ScheduleKind = schedule.parse()?;
            let sched = make_schedule(&spec, kind, 1, 1, SnrPolicy::Fixed(0.0), seed)?;
            let trace = learning_difficulty(&spec, &sched)?;
            match format {
                Format::Csv => print!("{}", trace.to_csv()),
                Format::Json => println!("{}", serde_json::to_string(&trace)?),
            }
        }
        AnalyzeCommand::Noiseless {
            code,
            decoder,
            blocks,
            seed,
        } => {
            let spec = code.spec()?;
            let dec = decoder.config()?.build(&spec)?;
            println!("noiseless_ber {}", noiseless_ber(dec.as_ref(), &spec, blocks, seed)?);
        }
        AnalyzeCommand::Bitwise {
            code,
            decoder,
            snr,
            blocks,
            seed,
            format,
        } => {
            let spec = code.spec()?;
            let dec = decoder.config()?.build(&spec)?;
            let channel = ChannelModel::new(ChannelKind::Awgn, polarcraft::channels::snr_to_sigma(snr), None)?;
            let d = bitwise_diagnostics(dec.as_ref(), &spec, &channel, blocks, seed)?;
            match format {
                Format::Csv => print!("{}", d.to_csv()),
                Format::Json => println!("{}", serde_json::to_string(&d)?),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
