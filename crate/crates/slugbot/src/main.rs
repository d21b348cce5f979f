use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use slugbot::config::{config_to_json, load_config};
use slugbot::harness::{self, AnalysisOptions, ProfileDocument};
use slugbot::telemetry::{serve, ServeOptions};
use slugbot::trace_csv::{read_trace_file, write_trace_file};
use slugbot_core::{run_scenario, SimConfig};

#[derive(Parser)]
#[command(name = "slugbot", version, about = "Buccal-mass grasper twin: run, analyze and serve simulations")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario headless and write the full trace as CSV.
    Run {
        /// JSON config; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Simulated seconds.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Segment, normalize and average a trace; write the profile as JSON.
    Analyze {
        #[arg(long)]
        trace: PathBuf,
        /// Shift cycles so peak retraction falls at this % of cycle (0 if no value).
        #[arg(long, num_args = 0..=1, default_missing_value = "0")]
        align_peak_retraction: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Number of trailing complete cycles to average.
        #[arg(long, default_value_t = harness::DEFAULT_CYCLES)]
        cycles: usize,
    },
    /// Compare two profiles and print the differences as JSON.
    Compare {
        #[arg(long = "profile", num_args = 1, required = true)]
        profiles: Vec<PathBuf>,
    },
    /// Golden values pinned from the default configuration.
    Golden {
        #[command(subcommand)]
        action: GoldenCmd,
    },
    /// Print the default configuration.
    Config,
    /// Run a live session over newline-delimited JSON on TCP.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = "SLUGBOT_ADDR", default_value = "127.0.0.1:7878")]
        addr: String,
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        #[arg(long, default_value_t = 50.0)]
        frame_hz: f64,
        #[arg(long)]
        autostart: bool,
        #[arg(long, default_value_t = 256)]
        queue: usize,
    },
}

#[derive(Subcommand)]
enum GoldenCmd {
    /// Re-run the default scenario and rewrite the golden file.
    Regen {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn config_or_default(path: Option<PathBuf>) -> slugbot::Result<SimConfig> {
    path.map_or_else(|| Ok(SimConfig::default()), |p| load_config(&p))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> slugbot::Result<()> {
    match cli.command {
        Cmd::Run { config, out, seed, duration } => {
            let mut cfg = config_or_default(config)?;
            if let Some(seed) = seed {
                cfg.scenario.seed = seed;
            }
            if let Some(d) = duration {
                cfg.scenario.duration_s = d;
            }
            let started = std::time::Instant::now();
            let trace = run_scenario(&cfg)?;
            write_trace_file(&trace, &out)?;
            log::info!("{} ticks in {:.2?} -> {}", trace.len(), started.elapsed(), out.display());
        }
        Cmd::Analyze { trace, align_peak_retraction, out, cycles } => {
            let t = read_trace_file(&trace)?;
            let opts = AnalysisOptions { cycles, align_peak_retraction, ..Default::default() };
            let doc = harness::analyze_trace(&t, &opts)?;
            harness::write_json(&doc, &out)?;
            log::info!(
                "{} cycles analyzed, max jitter {:?} %, swing {:.1}/{:.1} deg",
                doc.profile.n_cycles,
                doc.jitter.max,
                doc.kinematics.protraction_swing_deg,
                doc.kinematics.retraction_swing_deg
            );
        }
        Cmd::Compare { profiles } => {
            let [a, b] = profiles.as_slice() else {
                return Err(slugbot::AppError::Usage("compare takes exactly two --profile arguments".into()));
            };
            let pa: ProfileDocument = harness::read_json(a)?;
            let pb: ProfileDocument = harness::read_json(b)?;
            let report = harness::compare(&pa, &pb);
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        }
        Cmd::Golden { action: GoldenCmd::Regen { out } } => {
            let path = out.unwrap_or_else(harness::golden_path);
            let golden = harness::default_golden()?;
            harness::write_json(&golden, &path)?;
            log::info!("wrote {}", path.display());
        }
        Cmd::Config => print!("{}", config_to_json(&SimConfig::default())),
        Cmd::Serve { config, addr, speed, frame_hz, autostart, queue } => {
            let cfg = config_or_default(config)?;
            if !(slugbot::telemetry::protocol::MIN_SPEED..=slugbot::telemetry::protocol::MAX_SPEED).contains(&speed) {
                return Err(slugbot::AppError::Usage("--speed must lie in [0.1, 10]".into()));
            }
            let opts = ServeOptions { frame_hz, speed, autostart, queue_capacity: queue };
            serve(cfg, addr.as_str(), opts)?.join();
        }
    }
    Ok(())
}
