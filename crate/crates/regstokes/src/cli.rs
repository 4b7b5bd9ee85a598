//! The `regstokes` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use regstokes_core::constraint::{radius_bounds, sigma_u, RadiusBoundsInput};
use regstokes_core::scenarios::{self, ModelParams, RigidMode, ScenarioConfig, ScenarioKind, ScenarioOutput};
use regstokes_core::{CorrectionMethod, Vec2};

use crate::config::{echo_config, parse_config};
use crate::error::RunError;
use crate::manifest::RunManifest;
use crate::output::{self, WrittenFile};

#[derive(Debug, Parser)]
#[command(name = "regstokes", version, about = "2D regularized Stokeslet simulations", arg_required_else_help = true)]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// sigma_u over a range of circle radii.
    SigmaSweep(SigmaArgs),
    /// Admissible range of the large-circle radius.
    Bounds(BoundsArgs),
    /// Ring of points tethered between two fixed rings.
    Tethered(ScenarioArgs),
    /// Protrusion-driven cell crawling through an ECM network.
    Motility(MotilityArgs),
    /// Membrane blebbing after adhesion loss.
    Blebbing(ScenarioArgs),
    /// One scenario under every correction method, plus an aligned table.
    CompareMethods(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SigmaArgs {
    #[arg(long, default_value_t = 100)]
    pub n_points: usize,
    /// Decade range `A..B` or a comma-separated list of radii (μm).
    #[arg(long, default_value = "1e1..1e8")]
    pub radii: String,
    /// Directory for sigma.csv; prints to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = 100)]
    pub n_points: usize,
    /// Density (kg/m³).
    #[arg(long, default_value_t = 1e3)]
    pub rho: f64,
    /// Characteristic speed (m/s).
    #[arg(long, default_value_t = 1e-6)]
    pub speed: f64,
    /// Viscosity (Pa·s).
    #[arg(long, default_value_t = 1e-3)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.1)]
    pub re_max: f64,
    #[arg(long, default_value_t = 0.10)]
    pub sigma_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Meanzero,
    Circle,
    Meansub,
    None,
}

impl From<MethodArg> for CorrectionMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Meanzero => CorrectionMethod::MeanZero,
            MethodArg::Circle => CorrectionMethod::ExplicitCircle,
            MethodArg::Meansub => CorrectionMethod::MeanForceSubtraction,
            MethodArg::None => CorrectionMethod::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RigidArg {
    Frozen,
    NoSlip,
}

impl From<RigidArg> for RigidMode {
    fn from(m: RigidArg) -> Self {
        match m {
            RigidArg::Frozen => RigidMode::Frozen,
            RigidArg::NoSlip => RigidMode::NoSlip,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// TOML config; scenario defaults when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Large-circle radius R (μm).
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MotilityArgs {
    #[command(flatten)]
    pub common: ScenarioArgs,
    /// Hold the ECM rigid instead of elastic.
    #[arg(long, value_enum)]
    pub rigid_mode: Option<RigidArg>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Parses `argv`, runs the command and returns the process exit code:
/// 0 on success, 1 on a runtime failure, 2 on a usage error.
pub fn main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(&cli.command) {
        Ok(()) => 0,
        Err(RunError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run(command: &Command) -> Result<(), RunError> {
    match command {
        Command::SigmaSweep(a) => sigma_sweep(a),
        Command::Bounds(a) => bounds(a),
        Command::Tethered(a) => run_scenario(ScenarioKind::Tethered, a, None),
        Command::Motility(a) => run_scenario(ScenarioKind::Motility, &a.common, a.rigid_mode),
        Command::Blebbing(a) => run_scenario(ScenarioKind::Blebbing, a, None),
        Command::CompareMethods(a) => compare_methods(a),
    }
}

/// `1e1..1e8` as decades, or a comma-separated list.
pub fn parse_radii(text: &str) -> Result<Vec<f64>, RunError> {
    let bad = || RunError::Usage(format!("cannot read radii {text:?}; use A..B or a comma-separated list"));
    if let Some((a, b)) = text.split_once("..") {
        let lo: f64 = a.trim().parse().map_err(|_| bad())?;
        let hi: f64 = b.trim().parse().map_err(|_| bad())?;
        if !(lo > 0.0 && hi >= lo) {
            return Err(bad());
        }
        let (k0, k1) = (lo.log10().round() as i32, hi.log10().round() as i32);
        Ok((k0..=k1).map(|k| 10f64.powi(k)).collect())
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect()
    }
}

fn sigma_sweep(a: &SigmaArgs) -> Result<(), RunError> {
    let radii = parse_radii(&a.radii)?;
    let rows = radii
        .iter()
        .map(|&r| Ok((r, sigma_u(r, a.n_points, Vec2::new(1.0, 0.0), 1.0)?)))
        .collect::<Result<Vec<_>, regstokes_core::Error>>()?;
    match &a.out {
        Some(dir) => {
            create_dir(dir)?;
            let mut manifest = RunManifest::start(&format!("sigma-sweep --n-points {} --radii {}", a.n_points, a.radii), None, None);
            let n = output::write_sigma(&dir.join("sigma.csv"), &rows)?;
            manifest.files.push(WrittenFile {
                name: "sigma.csv".into(),
                rows: n,
            });
            manifest.finish(dir)?;
            println!("sigma-sweep: {n} radii -> {}", dir.join("sigma.csv").display());
        }
        None => {
            println!("R,sigma_u");
            for (r, s) in rows {
                println!("{},{}", output::format_f64(r), output::format_f64(s));
            }
        }
    }
    Ok(())
}

fn bounds(a: &BoundsArgs) -> Result<(), RunError> {
    let input = RadiusBoundsInput {
        rho: a.rho,
        v: a.speed,
        mu: a.mu,
        re_max: a.re_max,
        sigma_threshold: a.sigma_threshold,
    };
    let (lo, hi) = radius_bounds(&input, a.n_points)?;
    println!("R_min = {lo:e} um (smallest decade with sigma_u <= {})", a.sigma_threshold);
    println!("R_max = {hi:e} um (Reynolds number {} at speed {} m/s)", a.re_max, a.speed);
    Ok(())
}

fn create_dir(dir: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|source| {
        RunError::Output(crate::error::OutputError::Io {
            path: dir.to_path_buf(),
            source,
        })
    })
}

/// Config from file or defaults, with command-line overrides applied.
fn build_config(
    kind: ScenarioKind,
    config: Option<&Path>,
    method: Option<MethodArg>,
    radius: Option<f64>,
    seed: Option<u64>,
    rigid: Option<RigidArg>,
) -> Result<ScenarioConfig, RunError> {
    let mut c = match config {
        Some(p) => parse_config(p)?,
        None => ScenarioConfig::defaults(kind),
    };
    if c.kind() != kind {
        return Err(RunError::Usage(format!(
            "config is for scenario \"{}\" but the command is \"{}\"",
            c.kind().name(),
            kind.name()
        )));
    }
    if let Some(m) = method {
        c.run.correction.method = m.into();
    }
    if let Some(r) = radius {
        c.run.correction.radius = r;
    }
    if let Some(s) = seed {
        c.run.seed = s;
    }
    if let (Some(r), ModelParams::Motility(p)) = (rigid, &mut c.model) {
        p.rigid = Some(r.into());
    }
    c.validate()?;
    Ok(c)
}

/// Runs `config` and writes its CSVs and manifest into `dir`.
pub fn run_and_write(config: &ScenarioConfig, dir: &Path, command: &str) -> Result<(ScenarioOutput, RunManifest), RunError> {
    let mut manifest = RunManifest::start(command, Some(echo_config(config)), Some(config.run.seed));
    let out = scenarios::run(config)?;
    manifest.files = output::write_scenario_output(dir, config.kind(), &out)?;
    let manifest = manifest.finish(dir)?;
    Ok((out, manifest))
}

fn run_scenario(kind: ScenarioKind, a: &ScenarioArgs, rigid: Option<RigidArg>) -> Result<(), RunError> {
    let config = build_config(kind, a.config.as_deref(), a.method, a.radius, a.seed, rigid)?;
    let (out, manifest) = run_and_write(&config, &a.out, kind.name())?;
    let rows = out.series().trace.rows.len();
    println!(
        "{} ({}): {rows} trace rows, {} files -> {}",
        kind.name(),
        config.run.correction.method.name(),
        manifest.files.len(),
        a.out.display()
    );
    Ok(())
}

/// Primary observable compared across methods.
pub fn compare_column(kind: ScenarioKind) -> &'static str {
    match kind {
        ScenarioKind::Tethered => "x_ymax",
        ScenarioKind::Motility => "displacement",
        ScenarioKind::Blebbing => "p_center",
    }
}

/// Union of all sample times; each column holds its last value at or
/// before the row time, and is empty before its first sample.
pub fn align(series: &[(String, Vec<f64>, Vec<f64>)]) -> (Vec<String>, Vec<Vec<Option<f64>>>) {
    let mut times: Vec<f64> = series.iter().flat_map(|(_, t, _)| t.iter().copied()).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let header = std::iter::once("t".to_string()).chain(series.iter().map(|(n, _, _)| n.clone())).collect();
    let mut cursor = vec![0usize; series.len()];
    let rows = times
        .iter()
        .map(|&t| {
            let mut row = vec![Some(t)];
            for (k, (_, ts, vs)) in series.iter().enumerate() {
                while cursor[k] < ts.len() && ts[cursor[k]] <= t {
                    cursor[k] += 1;
                }
                row.push(cursor[k].checked_sub(1).map(|i| vs[i]));
            }
            row
        })
        .collect();
    (header, rows)
}

fn compare_methods(a: &CompareArgs) -> Result<(), RunError> {
    let base = parse_config(&a.config)?;
    let kind = base.kind();
    let results: Vec<Result<(CorrectionMethod, ScenarioOutput), RunError>> = std::thread::scope(|s| {
        let handles: Vec<_> = CorrectionMethod::ALL
            .iter()
            .map(|&method| {
                let mut c = base.clone();
                c.run.correction.method = method;
                if let Some(r) = a.radius {
                    c.run.correction.radius = r;
                }
                if let Some(seed) = a.seed {
                    c.run.seed = seed;
                }
                let dir = a.out.join(method.name());
                s.spawn(move || {
                    c.validate()?;
                    let (out, _) = run_and_write(&c, &dir, &format!("compare-methods {}", method.name()))?;
                    Ok((method, out))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let col = compare_column(kind);
    let mut series = Vec::new();
    let mut failures = Vec::new();
    for (method, r) in CorrectionMethod::ALL.iter().zip(results) {
        let name = format!("{}_{col}", method.name());
        match r {
            Ok((_, out)) => {
                let trace = &out.series().trace;
                series.push((name, trace.column("t").unwrap_or_default(), trace.column(col).unwrap_or_default()));
            }
            // An ill-posed method can blow up; keep its column empty and carry on.
            Err(RunError::Core(e)) => {
                log::warn!("{}: {e}", method.name());
                failures.push(format!("{}: {e}", method.name()));
                series.push((name, Vec::new(), Vec::new()));
            }
            Err(e) => return Err(e),
        }
    }
    let (header, rows) = align(&series);
    create_dir(&a.out)?;
    let mut manifest = RunManifest::start("compare-methods", Some(echo_config(&base)), Some(base.run.seed));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let n = output::write_rows(
        &a.out.join("compare.csv"),
        Some(&format!("t s, {col} per method (empty before a method's first sample)")),
        &header_refs,
        rows.into_iter().map(|r| {
            r.into_iter()
                .map(|v| v.map_or(output::Value::S(""), output::Value::F))
                .collect()
        }),
    )?;
    manifest.files.push(WrittenFile {
        name: "compare.csv".into(),
        rows: n,
    });
    for m in CorrectionMethod::ALL {
        if !failures.iter().any(|f| f.starts_with(&format!("{}:", m.name()))) {
            manifest.files.push(WrittenFile {
                name: format!("{}/manifest.json", m.name()),
                rows: 0,
            });
        }
    }
    manifest.failures = failures;
    manifest.finish(&a.out)?;
    println!("compare-methods ({}): {n} aligned rows -> {}", kind.name(), a.out.join("compare.csv").display());
    Ok(())
}
