use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use cbw::analysis::VisibilityMethod;
use cbw::cli::{
    cmd_analytic, cmd_analyze, cmd_loss_study, cmd_normal_mode, cmd_simulate, CommandOutput, OutputFormat, RunConfig,
    SimulationMode,
};

#[derive(Parser)]
#[command(name = "cbw", version, about = "Cascaded Mach-Zehnder fringe simulator and analyzer")]
struct Cli {
    /// RNG seed for Monte Carlo runs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// JSON config file or a manifest from a previous run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output formats; repeat to select several.
    #[arg(long = "format", global = true, value_enum)]
    formats: Vec<Format>,
    /// Phase bins per scan.
    #[arg(long, global = true)]
    bins: Option<u64>,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Mode {
    SinglePhoton,
    Cw,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Method {
    Fit,
    Extrema,
}

#[derive(Subcommand)]
enum Command {
    /// Noise-free fringes I_A, I_B and R_AB on a phase grid.
    Analytic {
        #[arg(short = 'n', long)]
        order: Option<u32>,
        #[arg(long, allow_negative_numbers = true)]
        start: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        end: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        step: Option<f64>,
    },
    /// Single-photon counting or CW scan.
    Simulate {
        #[command(flatten)]
        scan: ScanArgs,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// One row per detection window instead of bins.
        #[arg(long)]
        raw: bool,
        /// Uniform transmission of the loss channel.
        #[arg(long, allow_negative_numbers = true)]
        transmission: Option<f64>,
        /// Relative Gaussian noise on CW intensities.
        #[arg(long, allow_negative_numbers = true)]
        noise: Option<f64>,
    },
    /// Visibility, period and extrema of trace CSV files.
    Analyze {
        traces: Vec<PathBuf>,
        #[arg(long)]
        order_hint: Option<u32>,
        /// Trace whose period defines order 1.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// Visibility and count rate at several transmissions.
    LossStudy {
        #[command(flatten)]
        scan: ScanArgs,
        #[arg(long, value_delimiter = ',')]
        transmissions: Option<Vec<f64>>,
    },
    /// Normal-mode frequencies of a coupled-oscillator chain.
    NormalMode {
        #[arg(long, allow_negative_numbers = true)]
        mass: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        spring_constant: Option<f64>,
        #[arg(short = 'n', long)]
        chain_size: Option<u32>,
    },
}

#[derive(Args)]
struct ScanArgs {
    #[arg(short = 'n', long)]
    order: Option<u32>,
    /// Mean photons per detection window.
    #[arg(long, allow_negative_numbers = true)]
    mean_photons: Option<f64>,
    /// Scan duration in seconds.
    #[arg(long, allow_negative_numbers = true)]
    duration: Option<f64>,
}

fn set(map: &mut Map<String, Value>, path: &[&str], value: Value) {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut node = map;
    for key in parents {
        node = node
            .entry(*key)
            .or_insert_with(|| Value::Object(Map::new()))
            .as_object_mut()
            .expect("object");
    }
    node.insert((*last).to_string(), value);
}

fn opt<T: serde::Serialize>(map: &mut Map<String, Value>, path: &[&str], value: Option<T>) {
    if let Some(v) = value {
        set(map, path, json!(v));
    }
}

fn overrides(cli: &Cli) -> Value {
    let mut m = Map::new();
    opt(&mut m, &["scan", "rng_seed"], cli.seed);
    opt(&mut m, &["bins"], cli.bins);
    if !cli.formats.is_empty() {
        let formats: Vec<OutputFormat> = cli
            .formats
            .iter()
            .map(|f| match f {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
                Format::Svg => OutputFormat::Svg,
            })
            .collect();
        set(&mut m, &["formats"], json!(formats));
    }
    let scan_args = |m: &mut Map<String, Value>, s: &ScanArgs| {
        opt(m, &["order"], s.order);
        opt(m, &["source", "mean_photons_per_window"], s.mean_photons);
        opt(m, &["scan", "total_duration"], s.duration);
    };
    match &cli.command {
        Command::Analytic {
            order,
            start,
            end,
            step,
        } => {
            opt(&mut m, &["order"], *order);
            opt(&mut m, &["grid", "start"], *start);
            opt(&mut m, &["grid", "end"], *end);
            opt(&mut m, &["grid", "step"], *step);
        }
        Command::Simulate {
            scan,
            mode,
            raw,
            transmission,
            noise,
        } => {
            scan_args(&mut m, scan);
            opt(
                &mut m,
                &["mode"],
                mode.map(|x| match x {
                    Mode::SinglePhoton => SimulationMode::SinglePhoton,
                    Mode::Cw => SimulationMode::Cw,
                }),
            );
            if *raw {
                set(&mut m, &["raw"], json!(true));
            }
            opt(&mut m, &["loss", "transmission"], *transmission);
            opt(&mut m, &["noise_rel_sigma"], *noise);
        }
        Command::Analyze {
            traces,
            order_hint,
            reference,
            method,
        } => {
            if !traces.is_empty() {
                set(&mut m, &["analyze", "traces"], json!(traces));
            }
            opt(&mut m, &["analyze", "order_hint"], *order_hint);
            opt(&mut m, &["analyze", "reference"], reference.as_ref());
            opt(
                &mut m,
                &["analyze", "method"],
                method.map(|x| match x {
                    Method::Fit => VisibilityMethod::Fit,
                    Method::Extrema => VisibilityMethod::Extrema,
                }),
            );
        }
        Command::LossStudy { scan, transmissions } => {
            scan_args(&mut m, scan);
            opt(&mut m, &["transmissions"], transmissions.as_ref());
        }
        Command::NormalMode {
            mass,
            spring_constant,
            chain_size,
        } => {
            opt(&mut m, &["normal_mode", "mass"], *mass);
            opt(&mut m, &["normal_mode", "spring_constant"], *spring_constant);
            opt(&mut m, &["normal_mode", "chain_size"], *chain_size);
        }
    }
    Value::Object(m)
}

fn run(cli: &Cli) -> cbw::Result<CommandOutput> {
    let mut cfg = RunConfig::resolve(cli.config.as_deref(), overrides(cli))?;
    cfg.out_dir = cli.out_dir.clone();
    cfg.quiet = cli.quiet;
    match cli.command {
        Command::Analytic { .. } => cmd_analytic(&cfg),
        Command::Simulate { .. } => cmd_simulate(&cfg),
        Command::Analyze { .. } => cmd_analyze(&cfg),
        Command::LossStudy { .. } => cmd_loss_study(&cfg),
        Command::NormalMode { .. } => cmd_normal_mode(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            if !cli.quiet {
                println!("{}", out.summary.trim_end());
                for f in &out.files {
                    println!("wrote {}", f.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
