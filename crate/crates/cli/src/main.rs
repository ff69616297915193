//! `yardtwin`: batch driver for the yard twin.
//!
//! Exit codes: 0 ok, 1 domain violations or failures, 2 usage errors
//! (bad flags, unreadable inputs, inverted windows).

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use yardtwin_core::analytics::{rehandle_table, write_csv};
use yardtwin_core::engine::{counterfactual_run, replay_to, state_at, EngineError};
use yardtwin_core::events::{read_log_path, validate_against, ParseError};
use yardtwin_core::kpi::{kpi_report_with, KpiComparison, TravelOptions};
use yardtwin_core::time::{self, Timestamp};
use yardtwin_core::workload::{self, WorkloadConfig};
use yardtwin_core::yard::CraneMetric;
use yardtwin_core::{
    AnalyticsError, BayDims, EventLog, LevellingPlacement, LowestOtherRelocation, PlacementModel, SimulationJob,
    StepKind, StrategySpec, TimeWindow, UniformPlacement, YardLayout,
};

#[derive(Debug, Parser)]
#[command(name = "yardtwin", version, about = "Container-yard digital twin: replay, KPIs, strategy tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a log against a layout; violations go to stderr.
    Validate {
        #[command(flatten)]
        input: Input,
    },
    /// KPI report for a window.
    Kpi {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_parser = timestamp)]
        from: Timestamp,
        #[arg(long, value_parser = timestamp)]
        to: Timestamp,
        #[command(flatten)]
        travel: Travel,
        /// json: the full report; csv: the rehandle histogram.
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Replay the log under a strategy and compare KPIs with the real run.
    Simulate {
        #[command(flatten)]
        input: Input,
        /// Defaults to the first event of the log.
        #[arg(long, value_parser = timestamp)]
        from: Option<Timestamp>,
        /// Defaults to the last event of the log.
        #[arg(long, value_parser = timestamp)]
        to: Option<Timestamp>,
        /// Strategy name or JSON spec, e.g. '{"name":"category_segregation","params":{"key":"destination_port"}}'.
        #[arg(long)]
        strategy: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "EVENT")]
        step: StepKind,
        #[command(flatten)]
        travel: Travel,
        /// Also write the simulated log as JSONL.
        #[arg(long)]
        emit_log: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Yard snapshot at a time.
    Snapshot {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_parser = timestamp)]
        at: Timestamp,
    },
    /// Expected rehandles per pick for an R×T bay.
    Rehandles {
        #[arg(long)]
        rows: u32,
        #[arg(long)]
        tiers: u32,
        #[arg(long)]
        kmax: Option<u32>,
        /// Monte Carlo trials per k; 0 skips the simulation columns.
        #[arg(long, default_value_t = 0)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Placement::Uniform)]
        placement: Placement,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Synthetic layout and log with vessel-group departures.
    Generate(Generate),
}

#[derive(Debug, Args)]
struct Input {
    /// Layout JSON.
    #[arg(long)]
    layout: PathBuf,
    /// Event log: a JSONL file, or a directory of them read in name order.
    #[arg(long)]
    log: PathBuf,
}

#[derive(Debug, Args)]
struct Travel {
    #[arg(long, value_enum, default_value_t = Metric::Rectilinear)]
    metric: Metric,
    /// Metres charged when a crane changes block.
    #[arg(long, default_value_t = 0.0)]
    inter_block_m: f64,
}

#[derive(Debug, Args)]
struct Generate {
    #[arg(long, default_value_t = 3)]
    blocks: usize,
    #[arg(long, default_value_t = 8)]
    bays: u32,
    #[arg(long, default_value_t = 6)]
    rows: u32,
    #[arg(long, default_value_t = 4)]
    tiers: u32,
    #[arg(long, default_value_t = 200)]
    containers: usize,
    #[arg(long, default_value_t = 4)]
    groups: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Keep only the first n events.
    #[arg(long)]
    events: Option<usize>,
    /// Where to write the log; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the layout.
    #[arg(long)]
    layout_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Metric {
    Rectilinear,
    Chebyshev,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Placement {
    Uniform,
    Levelling,
}

impl Travel {
    fn options(&self) -> TravelOptions {
        TravelOptions {
            metric: match self.metric {
                Metric::Rectilinear => CraneMetric::Rectilinear,
                Metric::Chebyshev => CraneMetric::Chebyshev,
            },
            inter_block_m: self.inter_block_m,
        }
    }
}

fn timestamp(text: &str) -> Result<Timestamp, String> {
    time::parse(text).map_err(|e| format!("expected RFC 3339 time: {e}"))
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Domain(String),
    /// Violations were already reported.
    Violations(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) | CliError::Violations(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Domain(m) => write!(f, "{m}"),
            CliError::Violations(n) => write!(f, "{n} violation(s)"),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::BadWindow(_) | EngineError::WindowMismatch => CliError::Usage(e.to_string()),
            e => CliError::Domain(format!("{}: {e}", e.code())),
        }
    }
}

impl From<AnalyticsError> for CliError {
    fn from(e: AnalyticsError) -> Self {
        CliError::Domain(format!("{}: {e}", e.code()))
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Domain(format!("write failed: {e}"))
    }
}

fn read_layout(path: &Path) -> Result<Arc<YardLayout>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    YardLayout::from_json(&text)
        .map(Arc::new)
        .map_err(|e| CliError::Usage(format!("{}: invalid layout: {e}", path.display())))
}

fn read_log(path: &Path) -> Result<EventLog, CliError> {
    read_log_path(path).map_err(|e| match e {
        ParseError::Io(io) => CliError::Usage(format!("{}: {io}", path.display())),
        e => CliError::Domain(format!("{}: {}: {e}", path.display(), e.code())),
    })
}

fn load(input: &Input) -> Result<(Arc<YardLayout>, EventLog), CliError> {
    Ok((read_layout(&input.layout)?, read_log(&input.log)?))
}

fn window(log: &EventLog, from: Option<Timestamp>, to: Option<Timestamp>) -> Result<TimeWindow, CliError> {
    let (Some(from), Some(to)) = (from.or(log.first_time()), to.or(log.last_time())) else {
        return Err(CliError::Usage("empty log; pass --from and --to".into()));
    };
    Ok(TimeWindow::new(from, to).map_err(EngineError::from)?)
}

fn validate(input: &Input) -> Result<(), CliError> {
    let layout = read_layout(&input.layout)?;
    let log = match read_log_path(&input.log) {
        Ok(log) => log,
        Err(ParseError::Io(e)) => return Err(CliError::Usage(format!("{}: {e}", input.log.display()))),
        Err(e) => {
            eprintln!("{}: {e}", e.code());
            return Err(CliError::Violations(1));
        }
    };
    let mut lines: Vec<String> = validate_against(&log, &layout).iter().map(ToString::to_string).collect();
    if lines.is_empty() {
        if let Some(end) = log.last_time() {
            if let Err(e) = replay_to(&log, &layout, end) {
                lines.push(match &e {
                    EngineError::ReplayHalted { seq, cause } => format!("{}@{seq}: {e}", cause.code()),
                    e => format!("{}: {e}", e.code()),
                });
            }
        }
    }
    for l in &lines {
        eprintln!("{l}");
    }
    match lines.len() {
        0 => {
            println!("{{\"events\":{},\"violations\":0}}", log.len());
            Ok(())
        }
        n => Err(CliError::Violations(n)),
    }
}

fn write_out(text: &str) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { input } => validate(&input),
        Command::Kpi {
            input,
            from,
            to,
            travel,
            format,
        } => {
            // window errors are usage errors; report them before touching the files
            let window = TimeWindow::new(from, to).map_err(EngineError::from)?;
            let (layout, log) = load(&input)?;
            let report = kpi_report_with(&log, &layout, &window, travel.options())?;
            match format {
                Format::Json => write_out(&format!("{}\n", report.to_json())),
                Format::Csv => report
                    .write_histogram_csv(io::stdout().lock())
                    .map_err(|e| CliError::Domain(format!("write failed: {e}"))),
            }
        }
        Command::Simulate {
            input,
            from,
            to,
            strategy,
            seed,
            step,
            travel,
            emit_log,
            format,
        } => {
            if format == Format::Csv {
                return Err(CliError::Usage("simulate only writes json".into()));
            }
            let spec = StrategySpec::parse(&strategy).map_err(|e| CliError::Usage(e.to_string()))?;
            if let (Some(f), Some(t)) = (from, to) {
                TimeWindow::new(f, t).map_err(EngineError::from)?;
            }
            let (layout, log) = load(&input)?;
            let w = window(&log, from, to)?;
            let job = SimulationJob::new("cli", w.from, w.to, step, spec, seed).map_err(|e| match e {
                EngineError::InvalidStrategy(s) => CliError::Usage(s.to_string()),
                e => e.into(),
            })?;
            let sim = counterfactual_run(&log, &layout, &job)?;
            let opts = travel.options();
            let real = kpi_report_with(&log, &layout, &w, opts)?;
            let simulated = kpi_report_with(&sim.events, &layout, &w, opts)?;
            if let Some(path) = emit_log {
                fs::write(&path, sim.to_jsonl())
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            }
            write_out(&format!("{}\n", KpiComparison::new(real, simulated).to_json()))
        }
        Command::Snapshot { input, at } => {
            let (layout, log) = load(&input)?;
            let state = state_at(&log, &layout, at)?;
            write_out(&format!("{}\n", state.snapshot().to_json()))
        }
        Command::Rehandles {
            rows,
            tiers,
            kmax,
            trials,
            seed,
            placement,
            format,
        } => {
            let dims = BayDims::new(rows, tiers).map_err(|e| CliError::Usage(e.to_string()))?;
            let placement: &dyn PlacementModel = match placement {
                Placement::Uniform => &UniformPlacement,
                Placement::Levelling => &LevellingPlacement,
            };
            let table = rehandle_table(
                dims,
                kmax.unwrap_or(dims.capacity()),
                placement,
                &LowestOtherRelocation,
                trials,
                seed,
            )?;
            match format {
                Format::Csv => write_csv(&table, io::stdout().lock()).map_err(|e| CliError::Domain(format!("write failed: {e}"))),
                Format::Json => write_out(&format!("{}\n", serde_json::to_string(&table).expect("rows serialize"))),
            }
        }
        Command::Generate(g) => {
            let layout = Arc::new(
                workload::demo_layout(g.blocks, g.bays, g.rows, g.tiers).map_err(|e| CliError::Usage(e.to_string()))?,
            );
            let config = WorkloadConfig {
                containers: g.containers,
                groups: g.groups,
                seed: g.seed,
                ..WorkloadConfig::default()
            };
            let mut log = workload::generate(&config, &layout)?;
            if let Some(n) = g.events {
                log = workload::truncate(&log, n);
            }
            if let Some(path) = &g.layout_out {
                let text = serde_json::to_string_pretty(&*layout).expect("layout serializes");
                fs::write(path, text + "\n").map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            }
            match &g.out {
                Some(path) => fs::write(path, log.to_jsonl()).map_err(|e| CliError::Usage(format!("{}: {e}", path.display()))),
                None => write_out(&log.to_jsonl()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::Violations(_)) {
                eprintln!("yardtwin: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
