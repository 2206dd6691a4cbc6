//! Command-line front end: batch experiments, interactive sessions, priors
//! inspection, action evaluation and measurement-log export.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use objprop::experiment::{read_traces, run_experiment, write_results, ExperimentConfig, DEFAULT_SEED};
use objprop::export::export_measurement_log;
use objprop::info_gain::expected_information_gain;
use objprop::interactive::interactive_session;
use objprop::planner::{EpisodeConfig, OptimizationMode, Policy, DEFAULT_MAX_STEPS};
use objprop::{NetworkState, Node, ReferenceData};

#[derive(Parser)]
#[command(name = "objprop", version, about = "Information-gain driven exploration of object properties")]
struct Cli {
    /// Directory with priors.toml, actions.toml, edges.toml, catalog.toml and
    /// grids.toml. Missing files fall back to the built-in defaults.
    #[arg(long, global = true, env = "OBJPROP_CONFIG_DIR")]
    config_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run simulated episodes over the object catalog and write results.
    Run(RunArgs),
    /// Plan actions for a real object, typing in each observed outcome.
    Interactive(InteractiveArgs),
    /// Inspect the reference priors.
    Priors {
        #[command(subcommand)]
        command: PriorsCommand,
    },
    /// Print the expected information gain of every action on a fresh network.
    Evaluate {
        #[arg(long, default_value = "category", value_parser = parse_mode)]
        mode: OptimizationMode,
    },
    /// Write one record file per measurement found in a traces file.
    ExportLog {
        /// traces.jsonl written by `run`.
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        output_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum PriorsCommand {
    /// Print the reference tables.
    Show {
        #[arg(long, value_enum, default_value_t = PriorsFormat::Table)]
        format: PriorsFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PriorsFormat {
    Table,
    Toml,
}

#[derive(Args)]
struct RunArgs {
    /// Object names (comma separated); all catalog objects when omitted.
    #[arg(long, value_delimiter = ',')]
    objects: Vec<String>,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    #[arg(long, value_delimiter = ',', default_value = "category", value_parser = parse_mode)]
    modes: Vec<OptimizationMode>,
    #[arg(long, value_delimiter = ',', default_value = "actsel,rand", value_parser = parse_policy)]
    policies: Vec<Policy>,
    /// Stop ACTSEL episodes once no action promises a positive gain.
    #[arg(long)]
    terminate: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "results")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct InteractiveArgs {
    #[arg(long, default_value = "category", value_parser = parse_mode)]
    mode: OptimizationMode,
    #[arg(long)]
    terminate: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: usize,
    /// Write the finished session as JSON.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<OptimizationMode, String> {
    s.parse().map_err(|e: objprop::Error| e.to_string())
}

fn parse_policy(s: &str) -> Result<Policy, String> {
    s.parse().map_err(|e: objprop::Error| e.to_string())
}

fn load_data(dir: Option<&Path>) -> Result<ReferenceData> {
    match dir {
        Some(d) => ReferenceData::load_dir(d).with_context(|| format!("loading config from {}", d.display())),
        None => Ok(ReferenceData::defaults()),
    }
}

fn run(args: RunArgs, data: &ReferenceData) -> Result<()> {
    let config = ExperimentConfig {
        objects: args.objects,
        repetitions: args.repetitions,
        modes: args.modes,
        policies: args.policies,
        termination: args.terminate,
        max_steps: args.max_steps,
        seed: args.seed,
    };
    let result = run_experiment(&config, data)?;
    let files = write_results(&result, &config, data, &args.output_dir)?;
    let mut out = io::stdout().lock();
    writeln!(out, "{} episodes", result.runs.len())?;
    writeln!(out, "{:<18} {:<7} {:>4} {:>12} {:>10} {:>10}", "mode", "policy", "step", "entropy", "CE cat", "CE mat")?;
    for r in &result.metrics.rows {
        writeln!(
            out,
            "{:<18} {:<7} {:>4} {:>12.4} {:>10.4} {:>10.4}",
            r.mode.to_string(),
            r.policy.to_string(),
            r.step,
            r.target_entropy_mean,
            r.category_cross_entropy_mean,
            r.material_cross_entropy_mean
        )?;
    }
    for f in files {
        writeln!(out, "wrote {}", f.display())?;
    }
    Ok(())
}

fn priors_show(data: &ReferenceData, format: PriorsFormat) -> Result<()> {
    let mut out = io::stdout().lock();
    match format {
        PriorsFormat::Toml => write!(out, "{}", data.tables.to_toml()?)?,
        PriorsFormat::Table => {
            let vol = data.tables.components(Node::Volume).expect("volume");
            writeln!(out, "{:<14} {:>12} {:>10}", "category", "volume cm3", "sd")?;
            for (l, c) in vol.labels.iter().zip(&vol.components) {
                writeln!(out, "{l:<14} {:>12.1} {:>10.1}", c.mean, c.sd)?;
            }
            writeln!(out)?;
            let den = data.tables.components(Node::Density).expect("density");
            let ela = data.tables.components(Node::Elasticity).expect("elasticity");
            writeln!(out, "{:<14} {:>14} {:>10} {:>14} {:>10}", "material", "density kg/m3", "sd", "elasticity kPa", "sd")?;
            for i in 0..den.labels.len() {
                let (d, e) = (den.components[i], ela.components[i]);
                writeln!(out, "{:<14} {:>14.1} {:>10.1} {:>14.1} {:>10.1}", den.labels[i], d.mean, d.sd, e.mean, e.sd)?;
            }
        }
    }
    Ok(())
}

fn evaluate(data: &ReferenceData, mode: OptimizationMode) -> Result<()> {
    let state = NetworkState::from_reference(data)?;
    let mut out = io::stdout().lock();
    writeln!(out, "mode {mode}, entropy {:.4} bits", state.entropy(mode.target_set())?)?;
    for action in &data.actions {
        let e = expected_information_gain(&state, action, mode.target_set())?;
        writeln!(out, "{:<12} {:+.4} bits", e.action, e.expected_ig)?;
    }
    Ok(())
}

fn interactive(args: InteractiveArgs, data: &ReferenceData) -> Result<()> {
    let config = EpisodeConfig {
        mode: args.mode,
        policy: Policy::ActSel,
        terminate_on_nonpositive_ig: args.terminate,
        max_steps: args.max_steps,
        seed: 0,
    };
    let stdin = io::stdin();
    let trace = interactive_session(data, &config, &mut stdin.lock(), &mut io::stdout().lock())?;
    if let Some(path) = args.trace_out {
        let mut w = BufWriter::new(fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        serde_json::to_writer_pretty(&mut w, &trace)?;
        writeln!(w)?;
    }
    Ok(())
}

fn export_log(traces: &Path, output_dir: &Path, data: &ReferenceData) -> Result<()> {
    let runs = read_traces(traces)?;
    let manifest = export_measurement_log(&runs, &data.actions, output_dir)?;
    println!("wrote {} records to {}", manifest.records.len(), output_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load_data(cli.config_dir.as_deref()).and_then(|data| match cli.command {
        Command::Run(args) => run(args, &data),
        Command::Interactive(args) => interactive(args, &data),
        Command::Priors {
            command: PriorsCommand::Show { format },
        } => priors_show(&data, format),
        Command::Evaluate { mode } => evaluate(&data, mode),
        Command::ExportLog { traces, output_dir } => export_log(&traces, &output_dir, &data),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
