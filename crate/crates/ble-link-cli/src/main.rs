//! `ble-link`: evaluate the closed-form BLE throughput and reliability
//! models, run the packet-level Monte Carlo simulators, sweep parameters
//! into Pareto curves, and cross-check model against simulation.
//!
//! Exit codes: 0 success, 2 config or validation error, 3 numerical
//! failure inside the model, 4 model-vs-simulator disagreement in
//! `validate`.

use std::fmt::Write as _;
use std::path::PathBuf;

use ble_link_cli::output::{
    row_from_model, rows_from_curves, to_csv, to_json, write_atomic, ResultRow,
};
use ble_link_cli::{config, CliError};
use ble_link_model::reliability::ReliabilityInputs;
use ble_link_model::scenario::Scenario;
use ble_link_model::sim::{simulate_coexistence, simulate_connection, ChannelMode, SimProtocol};
use ble_link_model::sweep::sweep;
use ble_link_model::tolerances::{SIM_PTF_REL_TOL, SIM_TSR_ABS_TOL_X1, SIM_TSR_REL_TOL};
use ble_link_model::{evaluate_scenario, validate_scenario, ModelOutputs};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Stirred into the master seed for the coexistence stream so the two
/// simulators never consume the same per-run sequences.
const COEX_SEED_TAG: u64 = 0x434F_4558;

#[derive(Parser)]
#[command(
    name = "ble-link",
    version,
    about = "BLE connection throughput and reliability models, \
             with packet-level simulators to cross-check them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the closed-form models for one scenario
    Model(IoArgs),
    /// Evaluate only the interference failure probability
    Reliability(IoArgs),
    /// Run the packet-level Monte Carlo simulators
    Simulate {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Channel relationship between victim and disturber
        #[arg(long, value_enum, default_value_t = ChannelModeArg::Same)]
        channel_mode: ChannelModeArg,
    },
    /// Sweep one parameter and emit Pareto trade-off curves
    Sweep(IoArgs),
    /// Cross-check the closed forms against the simulators
    Validate {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
}

#[derive(Args)]
struct IoArgs {
    /// JSON scenario config
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Write results to this file (atomically) instead of only stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// File format for --out
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Echo the validated scenario to stderr
    #[arg(short, long)]
    verbose: bool,
}

#[derive(Args)]
struct SimArgs {
    /// Independent simulation runs
    #[arg(long, default_value_t = 500)]
    runs: u32,
    /// Connection intervals per run
    #[arg(long, default_value_t = 1000)]
    intervals: u32,
    /// Master RNG seed; the flag overrides the environment variable
    #[arg(long, env = "BLE_LINK_SEED", default_value_t = 42)]
    seed: u64,
    /// Worker threads (default: one per core; results do not depend on this)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ChannelModeArg {
    /// Both connections pinned to one channel (worst case)
    Same,
    /// Independent uniform hopping over the 37 data channels
    Uniform37,
    /// Provably never on the same channel
    Disjoint,
}

impl From<ChannelModeArg> for ChannelMode {
    fn from(v: ChannelModeArg) -> Self {
        match v {
            ChannelModeArg::Same => ChannelMode::SameChannel,
            ChannelModeArg::Uniform37 => ChannelMode::Uniform37,
            ChannelModeArg::Disjoint => ChannelMode::Disjoint,
        }
    }
}

fn main() {
    let code = match dispatch(Cli::parse()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Model(io) => cmd_model(&io),
        Command::Reliability(io) => cmd_reliability(&io),
        Command::Simulate { io, sim, channel_mode } => cmd_simulate(&io, &sim, channel_mode),
        Command::Sweep(io) => cmd_sweep(&io),
        Command::Validate { io, sim } => cmd_validate(&io, &sim),
    }
}

/// Loads, validates and echoes one scenario; advisories go to stderr.
fn load_scenario(io: &IoArgs) -> Result<(Scenario, f64), CliError> {
    let cfg = config::load_config(&io.config)?;
    let raw = cfg.raw_scenario();
    let scenario = validate_scenario(&raw)?;
    for note in scenario.advisories() {
        eprintln!("advisory: {note}");
    }
    if io.verbose {
        eprintln!(
            "scenario: ber={} l_cp={} l_pc={} x={} ci_v_us={} disturber={}",
            scenario.channel.ber,
            scenario.victim.packet_cp.total_bits,
            scenario.victim.packet_pc.total_bits,
            scenario.victim.x,
            scenario.victim.ci_us,
            match &scenario.disturber {
                Some(d) => format!("(l_d={} n={} ci_d_us={})", d.packet.total_bits, d.n, d.ci_us),
                None => "none".to_owned(),
            }
        );
    }
    Ok((scenario, raw.ber))
}

fn write_rows(io: &IoArgs, rows: &[ResultRow]) -> Result<(), CliError> {
    let body = match io.format {
        Format::Csv => to_csv(rows),
        Format::Json => to_json(rows),
    };
    match &io.out {
        Some(path) => write_atomic(path, body.as_bytes()),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn print_model_summary(outputs: &ModelOutputs) {
    let t = &outputs.throughput;
    println!("tsr: {:.6}", t.tsr);
    println!("throughput_ideal_bps: {:.1}", t.ideal_bps);
    println!("throughput_real_bps: {:.1}", t.real_bps);
    println!("throughput_on_air_ideal_bps: {:.1}", t.on_air_ideal_bps);
    println!("throughput_on_air_real_bps: {:.1}", t.on_air_real_bps);
    match (outputs.p_tf, outputs.reliability) {
        (Some(p), Some(r)) => {
            println!("p_tf: {p:.6}");
            println!("reliability: {r:.6}");
        }
        _ => println!("p_tf: n/a (no disturber configured)"),
    }
}

fn cmd_model(io: &IoArgs) -> Result<(), CliError> {
    let (scenario, ber) = load_scenario(io)?;
    let outputs = evaluate_scenario(&scenario)?;
    print_model_summary(&outputs);
    if io.out.is_some() {
        write_rows(io, &[row_from_model(ber, &outputs)])?;
    }
    Ok(())
}

fn cmd_reliability(io: &IoArgs) -> Result<(), CliError> {
    let (scenario, ber) = load_scenario(io)?;
    let inputs = ReliabilityInputs::from_scenario(&scenario)
        .map_err(|v| CliError::input(v.to_string()))?;
    for note in inputs.advisories() {
        eprintln!("advisory: {note}");
    }
    let outputs = evaluate_scenario(&scenario)?;
    println!("p_tf: {:.6}", outputs.p_tf.expect("disturber present"));
    println!("reliability: {:.6}", outputs.reliability.expect("disturber present"));
    if io.out.is_some() {
        write_rows(io, &[row_from_model(ber, &outputs)])?;
    }
    Ok(())
}

fn cmd_sweep(io: &IoArgs) -> Result<(), CliError> {
    let cfg = config::load_config(&io.config)?;
    let spec = cfg.sweep_spec()?;
    let curves = sweep(&spec)?;
    write_rows(io, &rows_from_curves(&curves))
}

fn setup_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::input(format!("cannot configure {n} threads: {e}")))?;
    }
    Ok(())
}

fn protocol(sim: &SimArgs, mode: ChannelMode) -> SimProtocol {
    SimProtocol {
        intervals_per_run: sim.intervals,
        runs: sim.runs,
        master_seed: sim.seed,
        channel_mode: mode,
    }
}

fn cmd_simulate(io: &IoArgs, sim: &SimArgs, mode: ChannelModeArg) -> Result<(), CliError> {
    setup_threads(sim.threads)?;
    let (scenario, _) = load_scenario(io)?;

    let conn = simulate_connection(&scenario, &protocol(sim, ChannelMode::SameChannel));
    let mut report = format!(
        "connection: attempts={} successes={} fail_open={} fail_close={} retx={}\n\
         connection: tsr={:.6} (se {:.6}) throughput_bps={:.1} (se {:.1})\n",
        conn.attempts,
        conn.successes,
        conn.fail_open,
        conn.fail_close,
        conn.retx_attempts,
        conn.empirical_tsr,
        conn.tsr_se,
        conn.empirical_throughput_bps,
        conn.throughput_se,
    );

    if let Some(disturber) = scenario.disturber {
        let coex_protocol = SimProtocol {
            master_seed: sim.seed ^ COEX_SEED_TAG,
            ..protocol(sim, mode.into())
        };
        let coex =
            simulate_coexistence(&scenario.victim, &disturber, scenario.channel.ber, &coex_protocol);
        writeln!(
            report,
            "coexistence: attempts={} failures={} overlap_fraction={:.6}",
            coex.attempts,
            coex.fail_open + coex.fail_close,
            coex.overlap_fraction.expect("coexistence reports overlap"),
        )
        .unwrap();
        writeln!(
            report,
            "coexistence: ptf={:.6} (se {:.6})",
            coex.empirical_ptf.expect("coexistence reports ptf"),
            coex.ptf_se.expect("coexistence reports ptf"),
        )
        .unwrap();
    }

    print!("{report}");
    if let Some(path) = &io.out {
        if io.format == Format::Json {
            return Err(CliError::input(
                "simulate writes plain-text reports; --format json is not available here",
            ));
        }
        write_atomic(path, report.as_bytes())?;
    }
    Ok(())
}

struct Check {
    label: &'static str,
    model: f64,
    simulated: f64,
    gap_kind: &'static str,
    gap: f64,
    tolerance: f64,
}

impl Check {
    fn passes(&self) -> bool {
        self.gap <= self.tolerance
    }

    fn render(&self) -> String {
        format!(
            "{}: model {:.6} simulated {:.6} gap({}) {:.6} tolerance {:.6} {}\n",
            self.label,
            self.model,
            self.simulated,
            self.gap_kind,
            self.gap,
            self.tolerance,
            if self.passes() { "pass" } else { "fail" },
        )
    }
}

fn cmd_validate(io: &IoArgs, sim: &SimArgs) -> Result<(), CliError> {
    setup_threads(sim.threads)?;
    let (scenario, _) = load_scenario(io)?;
    let outputs = evaluate_scenario(&scenario)?;
    let mut checks = Vec::new();

    let conn = simulate_connection(&scenario, &protocol(sim, ChannelMode::SameChannel));
    let model_tsr = outputs.throughput.tsr;
    checks.push(if scenario.victim.x == 1 {
        Check {
            label: "transaction success ratio",
            model: model_tsr,
            simulated: conn.empirical_tsr,
            gap_kind: "abs",
            gap: (conn.empirical_tsr - model_tsr).abs(),
            tolerance: SIM_TSR_ABS_TOL_X1,
        }
    } else {
        Check {
            label: "transaction success ratio",
            model: model_tsr,
            simulated: conn.empirical_tsr,
            gap_kind: "rel",
            gap: (conn.empirical_tsr - model_tsr).abs() / model_tsr,
            tolerance: SIM_TSR_REL_TOL,
        }
    });

    if let Some(disturber) = scenario.disturber {
        let coex_protocol = SimProtocol {
            master_seed: sim.seed ^ COEX_SEED_TAG,
            ..protocol(sim, ChannelMode::SameChannel)
        };
        let coex =
            simulate_coexistence(&scenario.victim, &disturber, scenario.channel.ber, &coex_protocol);
        let model_ptf = outputs.p_tf.expect("disturber present");
        let sim_ptf = coex.empirical_ptf.expect("coexistence reports ptf");
        checks.push(if model_ptf > 0.0 {
            Check {
                label: "failure probability",
                model: model_ptf,
                simulated: sim_ptf,
                gap_kind: "rel",
                gap: (sim_ptf - model_ptf).abs() / model_ptf,
                tolerance: SIM_PTF_REL_TOL,
            }
        } else {
            Check {
                label: "failure probability",
                model: model_ptf,
                simulated: sim_ptf,
                gap_kind: "abs",
                gap: sim_ptf,
                tolerance: 0.0,
            }
        });
    }

    let mut report =
        format!("validation: runs={} intervals={} seed={}\n", sim.runs, sim.intervals, sim.seed);
    for check in &checks {
        report.push_str(&check.render());
    }
    let all_pass = checks.iter().all(Check::passes);
    writeln!(report, "overall: {}", if all_pass { "pass" } else { "fail" }).unwrap();

    print!("{report}");
    if let Some(path) = &io.out {
        write_atomic(path, report.as_bytes())?;
    }
    if all_pass {
        Ok(())
    } else {
        Err(CliError::Tolerance(
            "simulator disagrees with the model beyond tolerance; see report above".to_owned(),
        ))
    }
}
