//! `kanon`: group-count planning, table reproduction, connection curves,
//! workload simulation and edge-privacy audits.

mod render;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use kanon_core::analytics::{
    connection_curve, edge_privacy_closed_form, log_spaced_grid, plan_light, plan_stream, poisson_lambda,
    prob_at_least, table1, TABLE1_CONFIDENCES,
};
use kanon_core::projection::assign_groups;
use kanon_core::simulation::{estimate_edge_privacy, export_adversary_log, run_workload, Population, WorkloadConfig, EXPLICIT_STUB_CAP};
use kanon_core::{DegreeDistribution, Error, GraphProfile, SocialGraph};

use render::{CurveRow, Format, PlanRow, PrivacyRow, ReportRow};

const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_NUMERIC: u8 = 4;
const EXIT_OTHER: u8 = 1;

#[derive(Debug, Parser)]
#[command(name = "kanon", version, about = "Plan and simulate group-scoped k-anonymous message retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Choose the number of groups for a design regime.
    Plan(PlanArgs),
    /// Hybrid plans for a list of connection confidences.
    Table1(Table1Args),
    /// Connection probability across a range of group counts.
    Curve(CurveArgs),
    /// Run a message workload and report resources and connectivity.
    Simulate(SimulateArgs),
    /// Estimate edge privacy on a sampled graph.
    Privacy(PrivacyArgs),
}

/// Without any of these flags the Facebook profile is used. Passing `--d`
/// without `--sigma` sets `sigma = sqrt(d)`.
#[derive(Debug, Args)]
struct ProfileArgs {
    /// Number of users.
    #[arg(long)]
    n: Option<u64>,
    /// Mean friend count.
    #[arg(long)]
    d: Option<f64>,
    /// Standard deviation of the friend count.
    #[arg(long)]
    sigma: Option<f64>,
}

impl ProfileArgs {
    fn resolve(&self) -> kanon_core::Result<GraphProfile> {
        let fb = GraphProfile::facebook();
        let (d, sigma) = match (self.d, self.sigma) {
            (None, None) => (fb.d, fb.sigma),
            (Some(d), None) => (d, d.max(0.0).sqrt()),
            (None, Some(s)) => (fb.d, s),
            (Some(d), Some(s)) => (d, s),
        };
        GraphProfile::new(self.n.unwrap_or(fb.n), d, sigma)
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output file; relative paths resolve under $KANON_OUTPUT_DIR when set.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, env = "KANON_OUTPUT_DIR", hide_env_values = true)]
    output_dir: Option<PathBuf>,
}

impl OutputArgs {
    fn resolve(&self, path: &Path) -> PathBuf {
        match &self.output_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    fn emit(&self, default: Format, body: impl FnOnce(Format, &mut dyn Write) -> anyhow::Result<()>) -> anyhow::Result<()> {
        let format = self.format.unwrap_or(default);
        match &self.output {
            Some(p) => {
                let path = self.resolve(p);
                let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                let mut w = std::io::BufWriter::new(file);
                body(format, &mut w)?;
                w.flush()?;
            }
            None => {
                let stdout = std::io::stdout();
                let mut w = stdout.lock();
                body(format, &mut w)?;
                w.flush()?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegimeArg {
    Light,
    Hybrid,
    Stream,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    #[arg(long, value_enum, default_value = "hybrid")]
    regime: RegimeArg,
    /// Minimum stream size for the stream regime.
    #[arg(long, default_value_t = 2)]
    l: u64,
    /// Target probability that a group pair carries the required stream.
    #[arg(long, default_value_t = 0.99)]
    confidence: f64,
    /// Light regime: tolerated probability that a group pair has any edge.
    #[arg(long, default_value_t = 0.01)]
    uniqueness_failure: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct Table1Args {
    #[command(flatten)]
    profile: ProfileArgs,
    /// Comma-separated confidences; defaults to the nine standard values.
    #[arg(long)]
    confidence: Option<String>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    #[arg(long, default_value_t = 100_000)]
    m_min: u32,
    #[arg(long, default_value_t = 4_000_000)]
    m_max: u32,
    #[arg(long, default_value_t = 50)]
    points: usize,
    /// Explicit comma-separated group counts, replacing the log grid.
    #[arg(long, value_delimiter = ',')]
    m: Vec<u32>,
    #[command(flatten)]
    out: OutputArgs,
}

/// `--m` or `--lambda`; the latter sets `m = round(sqrt(n d / lambda))`.
#[derive(Debug, Args)]
struct GroupArgs {
    #[arg(long, conflicts_with = "lambda")]
    m: Option<u32>,
    #[arg(long)]
    lambda: Option<f64>,
}

impl GroupArgs {
    fn resolve(&self, profile: &GraphProfile) -> kanon_core::Result<u32> {
        match (self.m, self.lambda) {
            (Some(m), _) => Ok(m),
            (None, Some(l)) if l.is_finite() && l > 0.0 => {
                let m = (profile.total_degree() / l).sqrt().round();
                if m < 1.0 || m > profile.n as f64 {
                    return Err(Error::Config(format!("--lambda {l} gives m = {m}, outside [1, n = {}]", profile.n)));
                }
                Ok(m as u32)
            }
            (None, Some(l)) => Err(Error::Config(format!("--lambda must be positive, got {l}"))),
            (None, None) => Err(Error::Config("one of --m or --lambda is required".into())),
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    #[command(flatten)]
    groups: GroupArgs,
    /// poll, bulk or rendezvous.
    #[arg(long, default_value = "poll")]
    strategy: String,
    #[arg(long, default_value_t = 1)]
    replications: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 picks the machine default. Output does not depend on it.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value_t = 1)]
    ticks: u64,
    /// Expected messages per friend pair per tick.
    #[arg(long, default_value_t = 0.1)]
    send_rate: f64,
    /// Header size relative to a message body.
    #[arg(long, default_value_t = 0.05)]
    phi: f64,
    #[arg(long, default_value_t = 1)]
    poll_interval: u64,
    /// Fetch bodies only after a header match (outside the reference model).
    #[arg(long)]
    header_only: bool,
    /// Group pairs sampled per replication for the connection estimate; 0 skips.
    #[arg(long, default_value_t = 10_000)]
    pairs: u64,
    /// Friend pairs per replication for edge privacy; 0 skips.
    #[arg(long, default_value_t = 0)]
    trials: u64,
    /// Write the observer's log of the first replication here as CSV.
    #[arg(long)]
    log: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct PrivacyArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    #[command(flatten)]
    groups: GroupArgs,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

fn cmd_plan(args: &PlanArgs) -> anyhow::Result<()> {
    let profile = args.profile.resolve()?;
    let plan = match args.regime {
        RegimeArg::Light => plan_light(&profile, args.uniqueness_failure)?,
        RegimeArg::Hybrid => plan_stream(&profile, 1, args.confidence)?,
        RegimeArg::Stream => plan_stream(&profile, args.l, args.confidence)?,
    };
    let row = PlanRow::from(&plan);
    args.out.emit(Format::Csv, |f, w| render::write_one(f, &row, w))
}

fn parse_confidences(list: Option<&str>) -> kanon_core::Result<Vec<f64>> {
    let Some(list) = list else {
        return Ok(TABLE1_CONFIDENCES.to_vec());
    };
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| Error::Config(format!("--confidence `{s}`: {e}"))))
        .collect()
}

fn cmd_table1(args: &Table1Args) -> anyhow::Result<()> {
    let profile = args.profile.resolve()?;
    let rows = table1(&profile, &parse_confidences(args.confidence.as_deref())?)?;
    args.out.emit(Format::Csv, |f, w| render::write_rows(f, &rows, w))
}

fn cmd_curve(args: &CurveArgs) -> anyhow::Result<()> {
    let profile = args.profile.resolve()?;
    let grid = if args.m.is_empty() {
        if args.points == 0 {
            return Err(Error::Config("--points must be at least 1".into()).into());
        }
        log_spaced_grid(args.m_min, args.m_max, args.points)
    } else {
        args.m.clone()
    };
    let rows: Vec<CurveRow> = connection_curve(&profile, &grid)?
        .into_iter()
        .map(|p| {
            let lambda = poisson_lambda(&profile, p.m);
            CurveRow { m: p.m, connected: p.connected, lambda, poisson: prob_at_least(1, lambda) }
        })
        .collect();
    args.out.emit(Format::Csv, |f, w| render::write_rows(f, &rows, w))
}

fn cmd_simulate(args: &SimulateArgs) -> anyhow::Result<()> {
    let profile = args.profile.resolve()?;
    let m = args.groups.resolve(&profile)?;
    let mut config = WorkloadConfig::new(Population::Profile(profile), m);
    config.strategy = args.strategy.clone();
    config.replications = args.replications;
    config.seed = args.seed;
    config.workers = args.workers;
    config.ticks = args.ticks;
    config.send_rate = args.send_rate;
    config.phi = args.phi;
    config.poll_interval = args.poll_interval;
    config.header_only = args.header_only;
    config.pairs_sampled = args.pairs;
    config.privacy_trials = args.trials;
    let (report, log) = run_workload(&config)?;
    if let Some(p) = &args.log {
        let path = args.out.resolve(p);
        export_adversary_log(&log, &path).with_context(|| format!("writing {}", path.display()))?;
    }
    args.out.emit(Format::Json, |f, w| match f {
        Format::Json => render::write_json(&report, w),
        Format::Csv => render::write_rows(Format::Csv, &ReportRow::flatten(&report), w),
    })
}

fn cmd_privacy(args: &PrivacyArgs) -> anyhow::Result<()> {
    let profile = args.profile.resolve()?;
    let m = args.groups.resolve(&profile)?;
    let stubs = profile.total_degree().ceil() as u64;
    if stubs > EXPLICIT_STUB_CAP {
        return Err(Error::ResourceCap { stubs, cap: EXPLICIT_STUB_CAP }.into());
    }
    if m as u64 > profile.n {
        return Err(Error::Config(format!("--m {m} exceeds n = {}", profile.n)).into());
    }
    let n = profile.n as usize;
    let law = DegreeDistribution::matched(&profile)?;
    let graph = SocialGraph::sample(&law, n, kanon_core::rng::derive_seed(args.seed, 0))?;
    let assignment = assign_groups(n, m, kanon_core::rng::derive_seed(args.seed, 1))?;
    let e = estimate_edge_privacy(&graph, &assignment, args.trials, kanon_core::rng::derive_seed(args.seed, 2))?;
    let row = PrivacyRow {
        n: profile.n,
        m,
        lambda: poisson_lambda(&profile, m),
        trials: args.trials,
        estimate: e.value,
        std_error: e.std_error,
        closed_form: edge_privacy_closed_form(&profile, m)?,
    };
    args.out.emit(Format::Csv, |f, w| render::write_one(f, &row, w))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Infeasible(_)) => EXIT_INFEASIBLE,
        Some(Error::Quadrature { .. } | Error::FitFailure(_)) => EXIT_NUMERIC,
        Some(Error::Io(_) | Error::Csv(_) | Error::Json(_)) | None => EXIT_OTHER,
        Some(_) => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let result = match &cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Table1(a) => cmd_table1(a),
        Command::Curve(a) => cmd_curve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Privacy(a) => cmd_privacy(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kanon: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confidence_lists() {
        assert_eq!(parse_confidences(None).unwrap().len(), 9);
        assert_eq!(parse_confidences(Some("0.5, 0.9")).unwrap(), vec![0.5, 0.9]);
        assert!(parse_confidences(Some("")).unwrap().is_empty());
        assert!(parse_confidences(Some("x")).is_err());
    }

    #[test]
    fn profile_defaults() {
        let none = ProfileArgs { n: None, d: None, sigma: None };
        assert_eq!(none.resolve().unwrap(), GraphProfile::facebook());
        let desk = ProfileArgs { n: Some(100_000), d: Some(20.0), sigma: None };
        assert_eq!(desk.resolve().unwrap().sigma, 20f64.sqrt());
    }

    #[test]
    fn lambda_sets_m() {
        let p = GraphProfile::new(100_000, 20.0, 20f64.sqrt()).unwrap();
        let g = GroupArgs { m: None, lambda: Some(1.6) };
        assert_eq!(g.resolve(&p).unwrap(), 1118);
        assert!(GroupArgs { m: None, lambda: None }.resolve(&p).is_err());
        assert!(GroupArgs { m: None, lambda: Some(-1.0) }.resolve(&p).is_err());
    }

    #[test]
    fn error_codes() {
        assert_eq!(exit_code(&Error::Infeasible("x".into()).into()), 3);
        assert_eq!(exit_code(&Error::FitFailure("x".into()).into()), 4);
        assert_eq!(exit_code(&Error::Quadrature { achieved: 1.0, requested: 0.1 }.into()), 4);
        assert_eq!(exit_code(&Error::UnknownStrategy("x".into()).into()), 2);
        assert_eq!(exit_code(&Error::Config("x".into()).into()), 2);
        assert_eq!(exit_code(&anyhow::anyhow!("x")), 1);
    }

    #[test]
    fn cli_shape() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
