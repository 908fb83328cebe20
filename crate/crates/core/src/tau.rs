//! Estimation of the baseline level τ₀.

use serde::{Deserialize, Serialize};

use crate::convex_dp::{estimate_set, OptimizerResult};
use crate::criterion::{dose_response_weights, DoseResponseData, StumpConfig, WeightedSample, DEFAULT_GAMMA};
use crate::error::{Error, Result};
use crate::geometry::{fatten_thin, ConvexPolygon, Point};
use crate::kernel::{interior_estimates, regression_weights, BandwidthPolicy, GridData, KernelSpec};
use crate::normal::std_normal_cdf;

pub const DEFAULT_DELTA_THIN: f64 = 0.05;
pub const SCAN_POINTS: usize = 512;
pub const GOLDEN_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauFit {
    pub tau_init: f64,
    pub tau_refined: f64,
    pub iterations: usize,
    pub delta_thin: f64,
    pub converged: bool,
    /// Set when thinning left no data and τ̂ fell back to `tau_init`.
    pub fallback: bool,
    /// Criterion of the estimate computed at each iteration.
    pub criterion_history: Vec<f64>,
    pub tau_history: Vec<f64>,
}

/// Either kind of observations.
#[derive(Clone, Copy, Debug)]
pub enum DataRef<'a> {
    Dose(&'a DoseResponseData),
    Grid(&'a GridData),
}

/// `(1/norm) Σ [Φ(s (vᵢ − τ)) − 1/2]²`.
fn stump_objective(values: &[f64], scale: f64, norm: f64, tau: f64) -> f64 {
    values
        .iter()
        .map(|v| (std_normal_cdf(scale * (v - tau)) - 0.5).powi(2))
        .sum::<f64>()
        / norm
}

/// Scan of the 1-D objective followed by golden-section refinement around the
/// best scan point. Ties in the scan go to the smallest τ.
pub fn minimize_stump_objective(values: &[f64], scale: f64, norm: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("no values to fit tau"));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(lo);
    }
    let f = |t: f64| stump_objective(values, scale, norm, t);
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let grid = |i: usize| if i == SCAN_POINTS - 1 { hi } else { lo + step * i as f64 };
    let (mut bi, mut bf) = (0, f(lo));
    for i in 1..SCAN_POINTS {
        let v = f(grid(i));
        if v < bf {
            bi = i;
            bf = v;
        }
    }
    let (mut a, mut b) = (grid(bi.saturating_sub(1)), grid((bi + 1).min(SCAN_POINTS - 1)));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    Ok(if f(t) <= bf { t } else { grid(bi) })
}

/// argmin_τ (1/n) Σ [Φ(√m (Ȳᵢ − τ)) − 1/2]².
pub fn tau_init_dose(data: &DoseResponseData) -> Result<f64> {
    let n = data.len() as f64;
    minimize_stump_objective(&data.replicate_means, (data.m as f64).sqrt(), n)
}

/// Regression analogue over the interior grid points, scaled by √(n h²).
pub fn tau_init_regression(data: &GridData, kernel: &KernelSpec, policy: &BandwidthPolicy) -> Result<f64> {
    let h = policy.bandwidth(data.n());
    let (_, mu) = interior_estimates(data, kernel, h)?;
    minimize_stump_objective(&mu, data.m as f64 * h, data.n() as f64)
}

fn mean_inside(thin: &ConvexPolygon, pts: impl Iterator<Item = (Point, f64)>) -> Result<f64> {
    if thin.is_empty() {
        return Err(Error::ThinningEmpty);
    }
    let (mut s, mut c) = (0.0, 0usize);
    for (p, y) in pts {
        if thin.contains(&p) {
            s += y;
            c += 1;
        }
    }
    if c == 0 {
        return Err(Error::ThinningEmpty);
    }
    Ok(s / c as f64)
}

/// Mean response over the data points inside the δ-thinned estimate.
pub fn tau_refine(estimate: &OptimizerResult, data: DataRef<'_>, delta_thin: f64) -> Result<f64> {
    if delta_thin.is_nan() || delta_thin < 0.0 {
        return Err(Error::invalid("delta_thin must be >= 0"));
    }
    if estimate.polygon.is_empty() {
        return Err(Error::ThinningEmpty);
    }
    let (_, thin) = fatten_thin(&estimate.polygon, delta_thin)?;
    match data {
        DataRef::Dose(d) => mean_inside(&thin, d.points.iter().copied().zip(d.replicate_means.iter().copied())),
        DataRef::Grid(g) => mean_inside(&thin, g.points().into_iter().zip(g.responses.iter().copied())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauIterConfig {
    pub gamma: f64,
    pub delta_thin: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for TauIterConfig {
    fn default() -> Self {
        TauIterConfig { gamma: DEFAULT_GAMMA, delta_thin: DEFAULT_DELTA_THIN, max_iters: 5, tol: 1e-6 }
    }
}

/// Grid smoothing settings, needed only for grid data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Smoothing {
    pub kernel: KernelSpec,
    pub policy: BandwidthPolicy,
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing { kernel: KernelSpec::epanechnikov(), policy: BandwidthPolicy::default() }
    }
}

pub fn tau_init(data: DataRef<'_>, smoothing: &Smoothing) -> Result<f64> {
    match data {
        DataRef::Dose(d) => tau_init_dose(d),
        DataRef::Grid(g) => tau_init_regression(g, &smoothing.kernel, &smoothing.policy),
    }
}

/// Weights for either setting at the given τ̂.
pub fn weights_at(data: DataRef<'_>, cfg: &StumpConfig, smoothing: &Smoothing) -> Result<WeightedSample> {
    match data {
        DataRef::Dose(d) => dose_response_weights(d, cfg),
        DataRef::Grid(g) => regression_weights(g, &smoothing.kernel, &smoothing.policy, cfg),
    }
}

/// Weights at the given τ̂, then the optimizer.
pub fn estimate_at(data: DataRef<'_>, cfg: &StumpConfig, smoothing: &Smoothing) -> Result<OptimizerResult> {
    Ok(estimate_set(&weights_at(data, cfg, smoothing)?))
}

/// Alternates estimation and refinement starting from `tau_init`. Returns the
/// fit together with the estimate at the final τ̂.
pub fn tau_iterate(
    data: DataRef<'_>,
    cfg: &TauIterConfig,
    smoothing: &Smoothing,
) -> Result<(TauFit, OptimizerResult)> {
    if cfg.max_iters == 0 {
        return Err(Error::invalid("max_iters must be >= 1"));
    }
    let t0 = tau_init(data, smoothing)?;
    let mut fit = TauFit {
        tau_init: t0,
        tau_refined: t0,
        iterations: 0,
        delta_thin: cfg.delta_thin,
        converged: false,
        fallback: false,
        criterion_history: Vec::new(),
        tau_history: vec![t0],
    };
    let mut tau = t0;
    let mut est = estimate_at(data, &StumpConfig::new(cfg.gamma, tau)?, smoothing)?;
    loop {
        fit.iterations += 1;
        fit.criterion_history.push(est.criterion);
        let next = match tau_refine(&est, data, cfg.delta_thin) {
            Ok(t) => t,
            Err(Error::ThinningEmpty) => {
                fit.fallback = true;
                fit.tau_refined = t0;
                if tau != t0 {
                    est = estimate_at(data, &StumpConfig::new(cfg.gamma, t0)?, smoothing)?;
                }
                return Ok((fit, est));
            }
            Err(e) => return Err(e),
        };
        fit.tau_history.push(next);
        let step = (next - tau).abs();
        tau = next;
        fit.tau_refined = tau;
        if step <= cfg.tol {
            fit.converged = true;
            return Ok((fit, est));
        }
        est = estimate_at(data, &StumpConfig::new(cfg.gamma, tau)?, smoothing)?;
        if fit.iterations >= cfg.max_iters {
            return Ok((fit, est));
        }
    }
}
