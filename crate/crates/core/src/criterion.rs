//! Approximate p-values, stump weights and the criteria they define.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, ConvexPolygon, Point};
use crate::normal::std_normal_cdf;
use crate::synth::GroundTruthScene;

pub const DEFAULT_GAMMA: f64 = 0.75;

/// Replicate means `Ȳᵢ` observed at random design points `Xᵢ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoseResponseData {
    pub points: Vec<Point>,
    pub replicate_means: Vec<f64>,
    pub m: usize,
    /// Noise level, recorded by the simulator only. Never read by the estimator.
    pub sigma0: Option<f64>,
}

impl DoseResponseData {
    pub fn new(points: Vec<Point>, replicate_means: Vec<f64>, m: usize, sigma0: Option<f64>) -> Result<Self> {
        let d = DoseResponseData { points, replicate_means, m, sigma0 };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() != self.replicate_means.len() {
            return Err(Error::invalid(format!(
                "{} points but {} replicate means",
                self.points.len(),
                self.replicate_means.len()
            )));
        }
        if self.m == 0 {
            return Err(Error::invalid("m must be >= 1"));
        }
        if !self.points.iter().all(Point::is_finite) || !self.replicate_means.iter().all(|y| y.is_finite()) {
            return Err(Error::invalid("dose-response data must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StumpConfig {
    pub gamma: f64,
    pub tau_hat: f64,
}

impl StumpConfig {
    pub fn new(gamma: f64, tau_hat: f64) -> Result<Self> {
        let cfg = StumpConfig { gamma, tau_hat };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_tau(tau_hat: f64) -> Self {
        StumpConfig { gamma: DEFAULT_GAMMA, tau_hat }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.5 && self.gamma < 1.0) {
            return Err(Error::invalid(format!("gamma = {} must lie in (1/2, 1)", self.gamma)));
        }
        if !self.tau_hat.is_finite() {
            return Err(Error::invalid("tau_hat must be finite"));
        }
        Ok(())
    }
}

/// Points with weights `Φ(tᵢ) − γ`. The criterion divides by `normalizer`,
/// which is the sample size n (for grid data n = m², even though only interior
/// points carry weights).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub gamma: f64,
    pub normalizer: f64,
}

impl WeightedSample {
    /// Sample whose normalizer is its own length.
    pub fn new(points: Vec<Point>, weights: Vec<f64>, gamma: f64) -> Result<Self> {
        let n = points.len() as f64;
        Self::with_normalizer(points, weights, gamma, n)
    }

    pub fn with_normalizer(points: Vec<Point>, weights: Vec<f64>, gamma: f64, normalizer: f64) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::invalid("points and weights differ in length"));
        }
        if !points.iter().all(Point::is_finite) || !weights.iter().all(|w| w.is_finite()) {
            return Err(Error::invalid("sample must be finite"));
        }
        if !(normalizer > 0.0 && normalizer.is_finite()) && !points.is_empty() {
            return Err(Error::invalid("normalizer must be positive"));
        }
        Ok(WeightedSample { points, weights, gamma, normalizer: normalizer.max(1.0) })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `pᵢ = 1 − Φ(√m (Ȳᵢ − τ̂))`, computed as `Φ(−t)` to keep small p-values exact.
pub fn dose_response_pvalues(data: &DoseResponseData, cfg: &StumpConfig) -> Vec<f64> {
    let s = (data.m as f64).sqrt();
    data.replicate_means
        .iter()
        .map(|y| std_normal_cdf(-s * (y - cfg.tau_hat)))
        .collect()
}

pub fn dose_response_weights(data: &DoseResponseData, cfg: &StumpConfig) -> Result<WeightedSample> {
    cfg.validate()?;
    data.validate()?;
    let s = (data.m as f64).sqrt();
    let weights = data
        .replicate_means
        .iter()
        .map(|y| std_normal_cdf(s * (y - cfg.tau_hat)) - cfg.gamma)
        .collect();
    WeightedSample::new(data.points.clone(), weights, cfg.gamma)
}

/// 𝕄ₙ(S) = (1/n) Σ wᵢ 1[Xᵢ ∈ S] with closed-set inclusion.
pub fn criterion_value(sample: &WeightedSample, poly: &ConvexPolygon) -> f64 {
    if poly.is_empty() {
        return 0.0;
    }
    let sum: f64 = sample
        .points
        .iter()
        .zip(&sample.weights)
        .filter(|(p, _)| poly.contains(p))
        .map(|(_, w)| *w)
        .sum();
    sum / sample.normalizer
}

/// M(S) = (1/2 − γ) F(S₀ ∩ S) + (1 − γ) F(S₀ᶜ ∩ S), with S₀ polygonized and F
/// integrated exactly.
pub fn population_criterion(scene: &GroundTruthScene, poly: &ConvexPolygon, gamma: f64) -> f64 {
    if poly.is_empty() {
        return 0.0;
    }
    let s0 = scene.s0_polygon();
    let inside = scene.design_probability(&geometry::intersection(&s0, poly));
    let total = scene.design_probability(poly);
    (0.5 - gamma) * inside + (1.0 - gamma) * (total - inside)
}
