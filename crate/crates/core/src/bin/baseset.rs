use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use baseset::criterion::StumpConfig;
use baseset::experiments::{
    oracle_check, render_svg, run_estimate, run_rate_study, EstimateConfig, InstanceKind, OwnedData, RateStudySpec,
    RateTauMode, TauMode,
};
use baseset::io::{polygon_from_json, polygon_to_json, read_text};
use baseset::kv::KvFile;
use baseset::synth::{sample_dose_response, sample_grid, GroundTruthScene, Seed};
use baseset::tau::{tau_init, tau_iterate, weights_at};

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_DATA: u8 = 3;

#[derive(Parser)]
#[command(name = "baseset", version, about = "Estimate the convex region where a noisy 2D function sits at its baseline")]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Flat `key = value` file with estimation settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a data file from a scene.
    Simulate(SimulateArgs),
    /// Estimate the baseline set from a data file and write a JSON report.
    Estimate(EstimateArgs),
    /// Compare the optimizer with brute-force enumeration on random instances.
    OracleCheck(OracleArgs),
    /// Run replicated estimates over a list of budgets and fit the error slope.
    RateStudy(RateArgs),
    /// Estimate the baseline level with the iterative refinement.
    TauFit(DataArgs),
    /// Draw data, an estimate and the true set as SVG.
    Render(RenderArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SettingArg {
    Dose,
    Regression,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scene file; the disc preset when omitted.
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dose")]
    setting: SettingArg,
    /// Replicates per point (dose) or grid side (regression).
    #[arg(long)]
    m: usize,
    /// Design points (dose only).
    #[arg(long)]
    n: Option<usize>,
    /// Override the scene noise level.
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long, default_value = "data.csv")]
    output: String,
}

#[derive(Args)]
struct DataArgs {
    /// Dose-response or grid CSV.
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Scene file for metrics and the S₀ outline.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Use the disc preset scene for metrics.
    #[arg(long, conflicts_with = "scene")]
    disc_preset: bool,
    /// Also write an SVG figure.
    #[arg(long)]
    svg: bool,
    #[arg(long, default_value = "report.json")]
    output: String,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 200)]
    count: usize,
    #[arg(long, default_value_t = 4)]
    n_min: usize,
    #[arg(long, default_value_t = 12)]
    n_max: usize,
    /// Instance kinds, used round-robin.
    #[arg(long, value_delimiter = ',', default_value = "random")]
    kinds: Vec<KindArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Random,
    Lattice,
    Duplicates,
}

#[derive(Args)]
struct RateArgs {
    #[arg(long, value_enum, default_value = "dose")]
    setting: SettingArg,
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// n values (dose) or grid sides m (regression).
    #[arg(long, value_delimiter = ',', default_value = "100,200,400,800")]
    budgets: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    replications: usize,
    #[arg(long, value_enum, default_value = "known")]
    tau_mode: TauModeArg,
    /// Replicate constant in m = m0 · n^(4p/3).
    #[arg(long, default_value_t = 1.0)]
    m0: f64,
    /// Bandwidth constant in h = h0 · n^(-1/(2p+2)).
    #[arg(long, default_value_t = 0.5)]
    h0: f64,
    /// Add a σ₀ = 0 column.
    #[arg(long)]
    noiseless: bool,
    #[arg(long, default_value_t = 200)]
    bootstrap: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum TauModeArg {
    Known,
    Init,
    Iterative,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Polygon JSON; estimated from the data when omitted.
    #[arg(long)]
    polygon: Option<PathBuf>,
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long, conflicts_with = "scene")]
    disc_preset: bool,
    #[arg(long, default_value = "render.svg")]
    output: String,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<baseset::Error> for Failure {
    fn from(e: baseset::Error) -> Self {
        Failure { code: EXIT_DATA, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

/// Parse errors already name their source; I/O errors get the path added.
fn describe(path: &Path, e: baseset::Error) -> String {
    match e {
        baseset::Error::Io(_) => format!("{}: {e}", path.display()),
        _ => e.to_string(),
    }
}

fn data_error(path: &Path, e: baseset::Error) -> Failure {
    Failure { code: EXIT_DATA, message: describe(path, e) }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(usage("--workers must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global().map_err(|e| usage(e.to_string()))?;
    }
    fs::create_dir_all(&cli.out_dir).map_err(baseset::Error::from)?;
    let kv = match &cli.config {
        Some(p) => KvFile::read(p).map_err(|e| usage(describe(p, e)))?,
        None => KvFile::empty("<defaults>"),
    };
    kv.check_keys(EstimateConfig::KEYS).map_err(|e| usage(e.to_string()))?;
    let cfg = EstimateConfig::from_kv(&kv).map_err(|e| usage(e.to_string()))?;
    let seed = Seed(cli.seed);
    let out = |name: &str| cli.out_dir.join(name);
    match &cli.command {
        Command::Simulate(a) => simulate(a, seed, &out(&a.output)),
        Command::Estimate(a) => estimate(a, &cfg, seed, &cli.out_dir),
        Command::OracleCheck(a) => oracle(a, seed, &out("oracle_check.csv")),
        Command::RateStudy(a) => rate_study(a, &cfg, seed, &cli.out_dir),
        Command::TauFit(a) => tau_fit(a, &cfg, &out("tau_fit.json")),
        Command::Render(a) => render(a, &cfg, &out(&a.output)),
    }
}

fn write(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(baseset::Error::from)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn load_scene(path: Option<&PathBuf>) -> Result<GroundTruthScene, Failure> {
    Ok(match path {
        Some(p) => GroundTruthScene::read(p).map_err(|e| data_error(p, e))?,
        None => GroundTruthScene::disc_preset(),
    })
}

fn load_data(path: &Path) -> Result<OwnedData, Failure> {
    let text = read_text(path).map_err(|e| data_error(path, e))?;
    Ok(OwnedData::parse(&path.display().to_string(), &text)?)
}

fn simulate(a: &SimulateArgs, seed: Seed, path: &Path) -> CliResult {
    let mut scene = load_scene(a.scene.as_ref())?;
    if let Some(s) = a.sigma0 {
        scene = scene.with_sigma0(s);
    }
    let data = match a.setting {
        SettingArg::Dose => {
            let n = a.n.ok_or_else(|| usage("--n is required for dose-response data"))?;
            OwnedData::Dose(sample_dose_response(&scene, a.m, n, seed)?)
        }
        SettingArg::Regression => OwnedData::Grid(sample_grid(&scene, a.m, seed)?),
    };
    write(path, &data.to_csv(Some(seed)))
}

fn optional_scene(scene: Option<&PathBuf>, disc: bool) -> Result<Option<GroundTruthScene>, Failure> {
    Ok(if disc { Some(GroundTruthScene::disc_preset()) } else { scene.map(|p| GroundTruthScene::read(p).map_err(|e| data_error(p, e))).transpose()? })
}

fn estimate(a: &EstimateArgs, cfg: &EstimateConfig, seed: Seed, out_dir: &Path) -> CliResult {
    let data = load_data(&a.data.data)?;
    let scene = optional_scene(a.scene.as_ref(), a.disc_preset)?;
    let report = run_estimate(data.as_ref(), scene.as_ref(), cfg, seed)?;
    write(&out_dir.join(&a.output), &report.to_json())?;
    if a.svg {
        let st = StumpConfig::new(cfg.gamma, report.tau.tau_used)?;
        let sample = weights_at(data.as_ref(), &st, &cfg.smoothing)?;
        let s0 = scene.as_ref().map(GroundTruthScene::s0_polygon);
        write(&out_dir.join("estimate.svg"), &render_svg(Some(&sample), &report.optimizer.polygon, s0.as_ref()))?;
    }
    println!(
        "criterion={} vertices={} included={} tau={}",
        report.optimizer.criterion,
        report.optimizer.polygon.len(),
        report.included_count,
        report.tau.tau_used
    );
    Ok(())
}

fn oracle(a: &OracleArgs, seed: Seed, path: &Path) -> CliResult {
    if a.n_min < 3 || a.n_max > 15 || a.n_min > a.n_max {
        return Err(usage("n range must lie within [3, 15]"));
    }
    let kinds: Vec<InstanceKind> = a
        .kinds
        .iter()
        .map(|k| match k {
            KindArg::Random => InstanceKind::Random,
            KindArg::Lattice => InstanceKind::Lattice,
            KindArg::Duplicates => InstanceKind::Duplicates,
        })
        .collect();
    let report = oracle_check(a.count, a.n_min, a.n_max, &kinds, seed)?;
    write(path, &report.to_table())?;
    println!(
        "instances={} failures={} max_abs_diff={:e} max_inclusion_diff={:e} elapsed_ms={:.1}",
        report.rows.len(),
        report.failures,
        report.max_abs_diff,
        report.max_inclusion_diff,
        report.elapsed_ms
    );
    if report.failures > 0 {
        return Err(Failure { code: EXIT_VALIDATION, message: format!("{} oracle mismatches", report.failures) });
    }
    Ok(())
}

fn rate_study(a: &RateArgs, cfg: &EstimateConfig, seed: Seed, out_dir: &Path) -> CliResult {
    let scene = load_scene(a.scene.as_ref())?;
    let mut spec = match a.setting {
        SettingArg::Dose => RateStudySpec::dose_preset(&a.budgets, a.p, a.m0, a.replications, seed),
        SettingArg::Regression => RateStudySpec::regression_preset(&a.budgets, a.p, a.h0, a.replications, seed)?,
    };
    spec.tau_mode = match a.tau_mode {
        TauModeArg::Known => RateTauMode::Known,
        TauModeArg::Init => RateTauMode::Init,
        TauModeArg::Iterative => RateTauMode::Iterative,
    };
    spec.gamma = cfg.gamma;
    spec.delta_thin = cfg.delta_thin;
    spec.smoothing.kernel = cfg.smoothing.kernel;
    spec.noiseless_column = a.noiseless;
    spec.bootstrap = a.bootstrap;
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let result = run_rate_study(&spec, &scene)?;
    write(&out_dir.join("rate_study.csv"), &result.to_csv())?;
    write(
        &out_dir.join("rate_study.json"),
        &serde_json::to_string_pretty(&result).map_err(baseset::Error::from)?,
    )?;
    println!("slope={:.4} ci=[{:.4}, {:.4}]", result.slope, result.slope_ci.0, result.slope_ci.1);
    Ok(())
}

fn tau_fit(a: &DataArgs, cfg: &EstimateConfig, path: &Path) -> CliResult {
    let data = load_data(&a.data)?;
    let iter = baseset::tau::TauIterConfig {
        gamma: cfg.gamma,
        delta_thin: cfg.delta_thin,
        max_iters: cfg.max_iters,
        ..Default::default()
    };
    let (fit, _) = tau_iterate(data.as_ref(), &iter, &cfg.smoothing)?;
    write(path, &serde_json::to_string_pretty(&fit).map_err(baseset::Error::from)?)?;
    println!("tau_init={} tau_refined={} iterations={}", fit.tau_init, fit.tau_refined, fit.iterations);
    Ok(())
}

fn render(a: &RenderArgs, cfg: &EstimateConfig, path: &Path) -> CliResult {
    let data = load_data(&a.data.data)?;
    let scene = optional_scene(a.scene.as_ref(), a.disc_preset)?;
    let tau = match cfg.tau_mode {
        TauMode::Known(t) => t,
        _ => tau_init(data.as_ref(), &cfg.smoothing)?,
    };
    let sample = weights_at(data.as_ref(), &StumpConfig::new(cfg.gamma, tau)?, &cfg.smoothing)?;
    let poly = match &a.polygon {
        Some(p) => polygon_from_json(&read_text(p)?)?,
        None => baseset::convex_dp::estimate_set(&sample).polygon,
    };
    let s0 = scene.as_ref().map(GroundTruthScene::s0_polygon);
    write(path, &render_svg(Some(&sample), &poly, s0.as_ref()))?;
    if a.polygon.is_none() {
        println!("{}", polygon_to_json(&poly));
    }
    Ok(())
}
