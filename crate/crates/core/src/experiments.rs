//! End-to-end pipelines, the oracle check and convergence-rate studies.

use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::convex_dp::{brute_force_oracle, estimate_set, OptimizerResult};
use crate::criterion::{criterion_value, DoseResponseData, StumpConfig, WeightedSample, DEFAULT_GAMMA};
use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon, Point};
use crate::io::{dose_response_from_csv, dose_response_to_csv, grid_from_csv, grid_to_csv};
use crate::kernel::{BandwidthPolicy, GridData, KernelSpec};
use crate::kv::KvFile;
use crate::metrics::{compute_metrics, metric_d, SetMetrics, DEFAULT_MC_POINTS};
use crate::synth::{sample_dose_response, sample_grid, GroundTruthScene, Seed};
use crate::tau::{estimate_at, tau_init, tau_iterate, DataRef, Smoothing, TauFit, TauIterConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum TauMode {
    Known(f64),
    Init,
    Iterative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub gamma: f64,
    pub tau_mode: TauMode,
    pub delta_thin: f64,
    pub max_iters: usize,
    pub smoothing: Smoothing,
    pub mc_points: usize,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        let it = TauIterConfig::default();
        EstimateConfig {
            gamma: DEFAULT_GAMMA,
            tau_mode: TauMode::Init,
            delta_thin: it.delta_thin,
            max_iters: it.max_iters,
            smoothing: Smoothing::default(),
            mc_points: DEFAULT_MC_POINTS,
        }
    }
}

impl EstimateConfig {
    pub const KEYS: &'static [&'static str] =
        &["gamma", "tau_mode", "tau", "delta_thin", "max_iters", "kernel", "h0", "beta", "mc_points"];

    /// Reads the recognized keys, leaving defaults for the rest. Unknown keys
    /// are left for the caller to check.
    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        let d = Self::default();
        let tau_mode = match kv.get_or("tau_mode", "init".to_string())?.as_str() {
            "known" => TauMode::Known(kv.require("tau")?),
            "init" => TauMode::Init,
            "iterative" => TauMode::Iterative,
            other => return Err(kv.error("tau_mode", format!("unknown tau mode `{other}`"))),
        };
        let kernel = match kv.raw("kernel") {
            None => d.smoothing.kernel,
            Some(name) => KernelSpec::by_name(name).map_err(|e| kv.error("kernel", e.to_string()))?,
        };
        let policy = BandwidthPolicy::new(
            kv.get_or("h0", d.smoothing.policy.h0)?,
            kv.get_or("beta", d.smoothing.policy.beta)?,
        )
        .map_err(|e| kv.error("beta", e.to_string()))?;
        let cfg = EstimateConfig {
            gamma: kv.get_or("gamma", d.gamma)?,
            tau_mode,
            delta_thin: kv.get_or("delta_thin", d.delta_thin)?,
            max_iters: kv.get_or("max_iters", d.max_iters)?,
            smoothing: Smoothing { kernel, policy },
            mc_points: kv.get_or("mc_points", d.mc_points)?,
        };
        StumpConfig::new(cfg.gamma, 0.0).map_err(|e| kv.error("gamma", e.to_string()))?;
        Ok(cfg)
    }

    fn iter_config(&self) -> TauIterConfig {
        TauIterConfig { gamma: self.gamma, delta_thin: self.delta_thin, max_iters: self.max_iters, tol: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauSummary {
    pub mode: TauMode,
    pub tau_used: f64,
    pub fit: Option<TauFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub optimizer_ms: f64,
    pub total_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub setting: String,
    pub scene_digest: Option<String>,
    pub data_digest: String,
    pub config: EstimateConfig,
    pub tau: TauSummary,
    /// Optimizer output with its timing moved to `timing`.
    pub optimizer: OptimizerResult,
    pub included_count: usize,
    pub metrics: Option<SetMetrics>,
    pub timing: Timing,
    pub versions: Versions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub baseset: String,
}

impl Default for Versions {
    fn default() -> Self {
        Versions { baseset: env!("CARGO_PKG_VERSION").to_string() }
    }
}

impl EstimateReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with the timing block zeroed, for reproducibility checks.
    pub fn to_json_without_timing(&self) -> String {
        let mut r = self.clone();
        r.timing = Timing { optimizer_ms: 0.0, total_ms: 0.0 };
        r.to_json()
    }
}

/// Data read from a CSV file in either setting.
#[derive(Clone, Debug, PartialEq)]
pub enum OwnedData {
    Dose(DoseResponseData),
    Grid(GridData),
}

impl OwnedData {
    pub fn as_ref(&self) -> DataRef<'_> {
        match self {
            OwnedData::Dose(d) => DataRef::Dose(d),
            OwnedData::Grid(g) => DataRef::Grid(g),
        }
    }

    /// Dose-response files carry an `x,y,ybar` header; anything else is read as a grid.
    pub fn parse(source: &str, text: &str) -> Result<Self> {
        let is_dose = text.lines().map(str::trim).any(|l| l.replace(' ', "") == "x,y,ybar");
        if is_dose {
            Ok(OwnedData::Dose(dose_response_from_csv(source, text)?))
        } else {
            Ok(OwnedData::Grid(grid_from_csv(source, text)?))
        }
    }

    pub fn to_csv(&self, seed: Option<Seed>) -> String {
        match self {
            OwnedData::Dose(d) => dose_response_to_csv(d, seed),
            OwnedData::Grid(g) => grid_to_csv(g, seed),
        }
    }
}

pub fn data_digest(data: DataRef<'_>) -> String {
    let text = match data {
        DataRef::Dose(d) => dose_response_to_csv(d, None),
        DataRef::Grid(g) => grid_to_csv(g, None),
    };
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Weights → optimizer (→ τ iteration) → metrics.
pub fn run_estimate(
    data: DataRef<'_>,
    scene: Option<&GroundTruthScene>,
    cfg: &EstimateConfig,
    metric_seed: Seed,
) -> Result<EstimateReport> {
    let start = Instant::now();
    let (tau, est) = match cfg.tau_mode {
        TauMode::Known(t) => {
            let est = estimate_at(data, &StumpConfig::new(cfg.gamma, t)?, &cfg.smoothing)?;
            (TauSummary { mode: cfg.tau_mode, tau_used: t, fit: None }, est)
        }
        TauMode::Init => {
            let t = tau_init(data, &cfg.smoothing)?;
            let est = estimate_at(data, &StumpConfig::new(cfg.gamma, t)?, &cfg.smoothing)?;
            (TauSummary { mode: cfg.tau_mode, tau_used: t, fit: None }, est)
        }
        TauMode::Iterative => {
            let (fit, est) = tau_iterate(data, &cfg.iter_config(), &cfg.smoothing)?;
            (TauSummary { mode: cfg.tau_mode, tau_used: fit.tau_refined, fit: Some(fit) }, est)
        }
    };
    let mut optimizer = est;
    let optimizer_ms = optimizer.elapsed_ms;
    optimizer.elapsed_ms = 0.0;
    let metrics = scene.map(|s| compute_metrics(&optimizer.polygon, s, cfg.mc_points, metric_seed));
    Ok(EstimateReport {
        setting: match data {
            DataRef::Dose(_) => "dose_response".into(),
            DataRef::Grid(_) => "regression".into(),
        },
        scene_digest: scene.map(GroundTruthScene::digest),
        data_digest: data_digest(data),
        config: cfg.clone(),
        tau,
        included_count: optimizer.included_count(),
        optimizer,
        metrics,
        timing: Timing { optimizer_ms, total_ms: start.elapsed().as_secs_f64() * 1e3 },
        versions: Versions::default(),
    })
}

// ---- oracle check ---------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    /// Uniform points in the unit square.
    Random,
    /// Points on a coarse lattice, so exact collinearities occur.
    Lattice,
    /// Random points with some locations repeated.
    Duplicates,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub instance: usize,
    pub kind: InstanceKind,
    pub n: usize,
    pub dp: f64,
    pub oracle: f64,
    pub abs_diff: f64,
    /// |DP value − criterion recomputed by point-in-polygon| for the DP winner.
    pub inclusion_diff: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleCheckReport {
    pub rows: Vec<OracleRow>,
    pub failures: usize,
    pub max_abs_diff: f64,
    pub max_inclusion_diff: f64,
    pub elapsed_ms: f64,
}

impl OracleCheckReport {
    pub fn to_table(&self) -> String {
        let mut out = String::from("instance,kind,n,dp,oracle,abs_diff,inclusion_diff,pass\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:?},{},{},{},{:e},{:e},{}",
                r.instance, r.kind, r.n, r.dp, r.oracle, r.abs_diff, r.inclusion_diff, r.pass
            );
        }
        out
    }
}

pub const ORACLE_TOL: f64 = 1e-9;
pub const INCLUSION_TOL: f64 = 1e-12;

/// Random instance with weights uniform on `[-1, 1]`.
pub fn oracle_instance(kind: InstanceKind, n: usize, seed: Seed) -> WeightedSample {
    let mut rng = seed.rng();
    let points: Vec<Point> = match kind {
        InstanceKind::Random => (0..n).map(|_| Point::new(rng.random(), rng.random())).collect(),
        InstanceKind::Lattice => (0..n)
            .map(|_| Point::new(rng.random_range(0..4) as f64 / 4.0, rng.random_range(0..4) as f64 / 4.0))
            .collect(),
        InstanceKind::Duplicates => {
            let distinct = n.div_ceil(2).max(1);
            let base: Vec<Point> = (0..distinct).map(|_| Point::new(rng.random(), rng.random())).collect();
            (0..n).map(|i| if i < distinct { base[i] } else { base[rng.random_range(0..distinct)] }).collect()
        }
    };
    let weights = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    WeightedSample::new(points, weights, DEFAULT_GAMMA).expect("finite instance")
}

pub fn oracle_check(count: usize, n_lo: usize, n_hi: usize, kinds: &[InstanceKind], seed: Seed) -> Result<OracleCheckReport> {
    if n_lo < 3 || n_hi < n_lo || n_hi > crate::convex_dp::DEFAULT_ORACLE_MAX_N {
        return Err(Error::invalid(format!("n range [{n_lo}, {n_hi}] must lie in [3, 15]")));
    }
    if kinds.is_empty() {
        return Err(Error::invalid("no instance kinds selected"));
    }
    let start = Instant::now();
    let rows: Vec<Result<OracleRow>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let s = seed.derive(i as u64);
            let kind = kinds[i % kinds.len()];
            let n = n_lo + (s.0 % (n_hi - n_lo + 1) as u64) as usize;
            let sample = oracle_instance(kind, n, s.derive(0));
            let dp = estimate_set(&sample);
            let oracle = brute_force_oracle(&sample, crate::convex_dp::DEFAULT_ORACLE_MAX_N)?;
            let recomputed = criterion_value(&sample, &dp.polygon);
            let abs_diff = (dp.criterion - oracle.criterion).abs();
            let inclusion_diff = (recomputed - dp.criterion).abs();
            Ok(OracleRow {
                instance: i,
                kind,
                n,
                dp: dp.criterion,
                oracle: oracle.criterion,
                abs_diff,
                inclusion_diff,
                pass: abs_diff <= ORACLE_TOL && inclusion_diff <= INCLUSION_TOL,
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(OracleCheckReport {
        failures: rows.iter().filter(|r| !r.pass).count(),
        max_abs_diff: rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max),
        max_inclusion_diff: rows.iter().map(|r| r.inclusion_diff).fold(0.0, f64::max),
        rows,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

// ---- rate studies ---------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    DoseResponse,
    Regression,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Replicates per point (dose) or grid side (regression).
    pub m: usize,
    /// Design points (dose) or grid cells m² (regression).
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateTauMode {
    Known,
    Init,
    Iterative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateStudySpec {
    pub setting: Setting,
    pub p: f64,
    pub budgets: Vec<Budget>,
    pub replications: usize,
    pub seed: Seed,
    pub tau_mode: RateTauMode,
    pub gamma: f64,
    pub delta_thin: f64,
    pub smoothing: Smoothing,
    /// Also run every replication with σ₀ = 0.
    pub noiseless_column: bool,
    pub bootstrap: usize,
}

impl RateStudySpec {
    /// Dose-response budgets with `m = round(m0 · n^β)`, β = 4p/3.
    pub fn dose_preset(ns: &[usize], p: f64, m0: f64, replications: usize, seed: Seed) -> Self {
        let beta = 4.0 * p / 3.0;
        RateStudySpec {
            setting: Setting::DoseResponse,
            p,
            budgets: ns.iter().map(|&n| Budget { m: ((m0 * (n as f64).powf(beta)).round() as usize).max(1), n }).collect(),
            replications,
            seed,
            tau_mode: RateTauMode::Known,
            gamma: DEFAULT_GAMMA,
            delta_thin: TauIterConfig::default().delta_thin,
            smoothing: Smoothing::default(),
            noiseless_column: false,
            bootstrap: 200,
        }
    }

    /// Regression budgets on m×m grids with `h = h0 · (m²)^(−β)`.
    pub fn regression_preset(ms: &[usize], p: f64, h0: f64, replications: usize, seed: Seed) -> Result<Self> {
        Ok(RateStudySpec {
            setting: Setting::Regression,
            p,
            budgets: ms.iter().map(|&m| Budget { m, n: m * m }).collect(),
            replications,
            seed,
            tau_mode: RateTauMode::Known,
            gamma: DEFAULT_GAMMA,
            delta_thin: TauIterConfig::default().delta_thin,
            smoothing: Smoothing { kernel: KernelSpec::epanechnikov(), policy: BandwidthPolicy::rate_optimal(h0, p)? },
            noiseless_column: false,
            bootstrap: 200,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.budgets.len() < 3 {
            return Err(Error::invalid("a rate study needs at least 3 budgets"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications must be >= 1"));
        }
        StumpConfig::new(self.gamma, 0.0)?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub d: f64,
    pub hausdorff: Option<f64>,
    pub tau_hat: f64,
    pub noiseless_d: Option<f64>,
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub budget: Budget,
    pub median_d: f64,
    pub q1: f64,
    pub q3: f64,
    pub noiseless_median_d: Option<f64>,
    /// 90th percentile of √(total observations) · |τ̂ − τ₀|.
    pub tau_p90_scaled: f64,
    pub replications: Vec<Replication>,
}

impl BudgetRow {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateStudyResult {
    pub spec: RateStudySpec,
    pub rows: Vec<BudgetRow>,
    pub slope: f64,
    pub slope_ci: (f64, f64),
    pub elapsed_ms: f64,
}

impl RateStudyResult {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# setting={:?},slope={},slope_ci_lo={},slope_ci_hi={}\nm,n,median_d,q1,q3,iqr,noiseless_median_d,tau_p90_scaled\n",
            self.spec.setting, self.slope, self.slope_ci.0, self.slope_ci.1
        );
        for r in &self.rows {
            let nl = r.noiseless_median_d.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.budget.m, r.budget.n, r.median_d, r.q1, r.q3, r.iqr(), nl, r.tau_p90_scaled
            );
        }
        out
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (i, f) = (pos.floor() as usize, pos - pos.floor());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - f) + sorted[i + 1] * f
    } else {
        sorted[i]
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn one_replication(scene: &GroundTruthScene, spec: &RateStudySpec, b: Budget, seed: Seed, sigma_zero: bool) -> Result<(f64, Option<f64>, f64)> {
    let sc = if sigma_zero { scene.clone().with_sigma0(0.0) } else { scene.clone() };
    let cfg = EstimateConfig {
        gamma: spec.gamma,
        tau_mode: match spec.tau_mode {
            RateTauMode::Known => TauMode::Known(scene.tau0),
            RateTauMode::Init => TauMode::Init,
            RateTauMode::Iterative => TauMode::Iterative,
        },
        delta_thin: spec.delta_thin,
        max_iters: TauIterConfig::default().max_iters,
        smoothing: spec.smoothing,
        mc_points: 0,
    };
    let report = match spec.setting {
        Setting::DoseResponse => {
            let d = sample_dose_response(&sc, b.m, b.n, seed)?;
            run_estimate(DataRef::Dose(&d), None, &cfg, seed)?
        }
        Setting::Regression => {
            let g = sample_grid(&sc, b.m, seed)?;
            run_estimate(DataRef::Grid(&g), None, &cfg, seed)?
        }
    };
    let poly = &report.optimizer.polygon;
    let h = crate::metrics::metric_hausdorff(poly, scene);
    Ok((metric_d(poly, scene), h.is_finite().then_some(h), report.tau.tau_used))
}

/// Runs every replication of every budget. Replication `r` of budget `i` uses
/// seed `seed.derive(i).derive(r)`, so results do not depend on scheduling.
pub fn run_rate_study(spec: &RateStudySpec, scene: &GroundTruthScene) -> Result<RateStudyResult> {
    spec.validate()?;
    scene.validate()?;
    let start = Instant::now();
    let rows = (0..spec.budgets.len()).map(|bi| run_budget(spec, scene, bi)).collect::<Result<Vec<_>>>()?;
    let (slope, slope_ci) = fit_slope(&rows, spec.seed.derive(u64::MAX), spec.bootstrap);
    Ok(RateStudyResult { spec: spec.clone(), rows, slope, slope_ci, elapsed_ms: start.elapsed().as_secs_f64() * 1e3 })
}

/// All replications of budget `bi`, summarized.
pub fn run_budget(spec: &RateStudySpec, scene: &GroundTruthScene, bi: usize) -> Result<BudgetRow> {
    let b = *spec.budgets.get(bi).ok_or_else(|| Error::invalid(format!("no budget {bi}")))?;
    let reps: Vec<Result<Replication>> = (0..spec.replications)
        .into_par_iter()
        .map(|r| {
            let seed = spec.seed.derive(bi as u64).derive(r as u64);
            let t = Instant::now();
            let (d, hausdorff, tau_hat) = one_replication(scene, spec, b, seed, false)?;
            let noiseless_d = if spec.noiseless_column {
                Some(one_replication(scene, spec, b, seed, true)?.0)
            } else {
                None
            };
            Ok(Replication { d, hausdorff, tau_hat, noiseless_d, elapsed_ms: t.elapsed().as_secs_f64() * 1e3 })
        })
        .collect();
    let reps = reps.into_iter().collect::<Result<Vec<_>>>()?;
    let ds = sorted(reps.iter().map(|r| r.d).collect());
    let total = match spec.setting {
        Setting::DoseResponse => (b.m * b.n) as f64,
        Setting::Regression => b.n as f64,
    };
    let taus = sorted(reps.iter().map(|r| total.sqrt() * (r.tau_hat - scene.tau0).abs()).collect());
    Ok(BudgetRow {
        budget: b,
        median_d: quantile(&ds, 0.5),
        q1: quantile(&ds, 0.25),
        q3: quantile(&ds, 0.75),
        noiseless_median_d: spec
            .noiseless_column
            .then(|| quantile(&sorted(reps.iter().filter_map(|r| r.noiseless_d).collect()), 0.5)),
        tau_p90_scaled: quantile(&taus, 0.9),
        replications: reps,
    })
}

/// Slope of log median d against log n, with a percentile bootstrap interval
/// from resampling replications within each budget.
pub fn fit_slope(rows: &[BudgetRow], seed: Seed, bootstrap: usize) -> (f64, (f64, f64)) {
    let x: Vec<f64> = rows.iter().map(|r| (r.budget.n as f64).ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.median_d.ln()).collect();
    let slope = ols_slope(&x, &y);
    if bootstrap == 0 {
        return (slope, (slope, slope));
    }
    let mut rng = seed.rng();
    let mut boots = Vec::with_capacity(bootstrap);
    for _ in 0..bootstrap {
        let yb: Vec<f64> = rows
            .iter()
            .map(|r| {
                let k = r.replications.len();
                let s = sorted((0..k).map(|_| r.replications[rng.random_range(0..k)].d).collect());
                quantile(&s, 0.5).ln()
            })
            .collect();
        boots.push(ols_slope(&x, &yb));
    }
    let boots = sorted(boots);
    (slope, (quantile(&boots, 0.025), quantile(&boots, 0.975)))
}

// ---- rendering ------------------------------------------------------------

/// SVG of the unit square with weighted points, the estimate and S₀.
pub fn render_svg(sample: Option<&WeightedSample>, estimate: &ConvexPolygon, s0: Option<&ConvexPolygon>) -> String {
    const SIZE: f64 = 500.0;
    let px = |p: &Point| (p.x * SIZE, (1.0 - p.y) * SIZE);
    let path = |poly: &ConvexPolygon| {
        poly.vertices()
            .iter()
            .map(|v| {
                let (x, y) = px(v);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n\
         <rect x=\"0\" y=\"0\" width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\" stroke=\"black\"/>\n"
    );
    if let Some(s) = sample {
        for (p, w) in s.points.iter().zip(&s.weights) {
            let (x, y) = px(p);
            let colour = if *w < 0.0 { "#2b6cb0" } else { "#c53030" };
            let _ = writeln!(out, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2\" fill=\"{colour}\"/>");
        }
    }
    if let Some(s0) = s0 {
        let _ = writeln!(out, "<polygon points=\"{}\" fill=\"none\" stroke=\"#2f855a\" stroke-width=\"2\" stroke-dasharray=\"6,4\"/>", path(s0));
    }
    if estimate.len() >= 3 {
        let _ = writeln!(out, "<polygon points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>", path(estimate));
    } else if !estimate.is_empty() {
        let _ = writeln!(out, "<polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>", path(estimate));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::sample_dose_response;

    #[test]
    fn quantiles_and_slope() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        let x = [1.0, 2.0, 3.0];
        let y = [1.0, 0.5, 0.0];
        assert!((ols_slope(&x, &y) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn report_is_reproducible_apart_from_timing() {
        let scene = GroundTruthScene::disc_preset();
        let d = sample_dose_response(&scene, 200, 200, Seed(5)).unwrap();
        let cfg = EstimateConfig { tau_mode: TauMode::Known(scene.tau0), mc_points: 1000, ..Default::default() };
        let a = run_estimate(DataRef::Dose(&d), Some(&scene), &cfg, Seed(1)).unwrap();
        let b = run_estimate(DataRef::Dose(&d), Some(&scene), &cfg, Seed(1)).unwrap();
        assert_eq!(a.to_json_without_timing(), b.to_json_without_timing());
        let d = a.metrics.unwrap().d;
        assert!(d < scene.s0_area(), "d={d} tau={}", a.tau.tau_used);
    }

    #[test]
    fn all_positive_weights_give_empty_report() {
        let scene = GroundTruthScene::disc_preset();
        let mut d = sample_dose_response(&scene, 20, 50, Seed(5)).unwrap();
        for y in d.replicate_means.iter_mut() {
            *y = 10.0;
        }
        let cfg = EstimateConfig { tau_mode: TauMode::Known(0.0), mc_points: 10, ..Default::default() };
        let r = run_estimate(DataRef::Dose(&d), Some(&scene), &cfg, Seed(1)).unwrap();
        assert!(r.optimizer.polygon.is_empty());
        assert!(r.metrics.unwrap().hausdorff_empty);
    }

    #[test]
    fn small_oracle_check_passes() {
        let kinds = [InstanceKind::Random, InstanceKind::Lattice, InstanceKind::Duplicates];
        let r = oracle_check(30, 3, 9, &kinds, Seed(2)).unwrap();
        assert_eq!(r.failures, 0, "{}", r.to_table());
        assert!(oracle_check(5, 3, 16, &kinds, Seed(2)).is_err());
        assert!(oracle_check(5, 2, 9, &kinds, Seed(2)).is_err());
    }

    #[test]
    fn svg_has_expected_elements() {
        let est = ConvexPolygon::rectangle(0.2, 0.2, 0.6, 0.7);
        let s = WeightedSample::new(vec![Point::new(0.5, 0.5), Point::new(0.9, 0.1)], vec![-0.25, 0.25], 0.75).unwrap();
        let svg = render_svg(Some(&s), &est, Some(&GroundTruthScene::disc_preset().s0_polygon()));
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert_eq!(svg.matches("<polygon").count(), 2);
    }
}
