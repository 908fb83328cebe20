//! Product-kernel smoothing of fixed-grid responses.
//!
//! Grid index `(k, l)` with `k, l ∈ 1..=m` sits at `(k/m, l/m)`. Matrices are
//! stored row-major with row `k` holding fixed `u_k`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criterion::{StumpConfig, WeightedSample};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::normal::std_normal_cdf;

/// Slack used when comparing grid coordinates against the interior bounds.
pub const MASK_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridData {
    pub m: usize,
    pub responses: Vec<f64>,
    pub sigma0: Option<f64>,
}

impl GridData {
    pub fn new(m: usize, responses: Vec<f64>, sigma0: Option<f64>) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid("grid side m must be >= 2"));
        }
        if responses.len() != m * m {
            return Err(Error::invalid(format!("expected {} responses, got {}", m * m, responses.len())));
        }
        if !responses.iter().all(|y| y.is_finite()) {
            return Err(Error::invalid("grid responses must be finite"));
        }
        Ok(GridData { m, responses, sigma0 })
    }

    pub fn n(&self) -> usize {
        self.m * self.m
    }

    pub fn grid_point(m: usize, k: usize, l: usize) -> Point {
        Point::new(k as f64 / m as f64, l as f64 / m as f64)
    }

    /// `Y_kl`, 1-based.
    pub fn value(&self, k: usize, l: usize) -> f64 {
        self.responses[(k - 1) * self.m + (l - 1)]
    }

    pub fn points(&self) -> Vec<Point> {
        let m = self.m;
        (1..=m)
            .flat_map(|k| (1..=m).map(move |l| Self::grid_point(m, k, l)))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelName {
    Epanechnikov,
    Triangular,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub name: KernelName,
    pub l0: f64,
    pub lipschitz_bound: f64,
}

impl KernelSpec {
    pub fn epanechnikov() -> Self {
        KernelSpec { name: KernelName::Epanechnikov, l0: 1.0, lipschitz_bound: 1.5 }
    }

    pub fn triangular() -> Self {
        KernelSpec { name: KernelName::Triangular, l0: 1.0, lipschitz_bound: 1.0 }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "epanechnikov" => Ok(Self::epanechnikov()),
            "triangular" => Ok(Self::triangular()),
            other => Err(Error::invalid(format!("unknown kernel `{other}`"))),
        }
    }

    /// One-dimensional K₀(u), zero for |u| ≥ L₀.
    pub fn k0(&self, u: f64) -> f64 {
        let a = u.abs();
        if a >= self.l0 {
            return 0.0;
        }
        match self.name {
            KernelName::Epanechnikov => 0.75 * (1.0 - a * a),
            KernelName::Triangular => 1.0 - a,
        }
    }

    /// ∫K₀², closed form.
    pub fn k0_sq_integral(&self) -> f64 {
        match self.name {
            KernelName::Epanechnikov => 0.6,
            KernelName::Triangular => 2.0 / 3.0,
        }
    }

    /// ∫∫K², the variance constant of the product kernel.
    pub fn k_sq_integral(&self) -> f64 {
        self.k0_sq_integral().powi(2)
    }
}

/// `h = h0 · n^(−β)` with n the number of grid cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandwidthPolicy {
    pub h0: f64,
    pub beta: f64,
}

impl BandwidthPolicy {
    pub fn new(h0: f64, beta: f64) -> Result<Self> {
        if !(h0 > 0.0 && h0.is_finite()) {
            return Err(Error::invalid("h0 must be positive"));
        }
        if !(beta > 0.0 && beta < 0.5) {
            return Err(Error::invalid(format!("beta = {beta} must lie in (0, 1/2)")));
        }
        Ok(BandwidthPolicy { h0, beta })
    }

    /// β = 1/(2(p+1)).
    pub fn rate_optimal(h0: f64, p: f64) -> Result<Self> {
        Self::new(h0, 1.0 / (2.0 * (p + 1.0)))
    }

    pub fn bandwidth(&self, n: usize) -> f64 {
        self.h0 * (n as f64).powf(-self.beta)
    }
}

impl Default for BandwidthPolicy {
    fn default() -> Self {
        BandwidthPolicy { h0: 0.5, beta: 0.25 }
    }
}

/// Kernel weights `K₀(d/(m h))` for offsets `d = -r..=r` inside the support.
fn offsets(kernel: &KernelSpec, m: usize, h: f64) -> (usize, Vec<f64>) {
    let scale = m as f64 * h;
    let r = (kernel.l0 * scale).ceil() as usize;
    let w = (0..=2 * r)
        .map(|i| kernel.k0((i as f64 - r as f64) / scale))
        .collect();
    (r, w)
}

/// μ̂ at every grid point: (1/(n h²)) Σ Y_kl K((x − x_kl)/h), computed
/// separably over the support window.
pub fn kernel_estimate(data: &GridData, kernel: &KernelSpec, h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("bandwidth must be positive"));
    }
    let m = data.m;
    let (r, w) = offsets(kernel, m, h);
    let smooth_row = |row: &[f64], out: &mut [f64]| {
        for (b, o) in out.iter_mut().enumerate() {
            let lo = b.saturating_sub(r);
            let hi = (b + r).min(m - 1);
            let mut s = 0.0;
            for l in lo..=hi {
                s += row[l] * w[l + r - b];
            }
            *o = s;
        }
    };
    // Pass 1: along l within each row.
    let mut t = vec![0.0; m * m];
    t.par_chunks_mut(m)
        .zip(data.responses.par_chunks(m))
        .for_each(|(out, row)| smooth_row(row, out));
    // Pass 2: along k, one output row at a time.
    let norm = 1.0 / ((m * m) as f64 * h * h);
    let mut out = vec![0.0; m * m];
    out.par_chunks_mut(m).enumerate().for_each(|(a, orow)| {
        let lo = a.saturating_sub(r);
        let hi = (a + r).min(m - 1);
        for k in lo..=hi {
            let wk = w[k + r - a];
            if wk == 0.0 {
                continue;
            }
            let trow = &t[k * m..(k + 1) * m];
            for (o, v) in orow.iter_mut().zip(trow) {
                *o += wk * v;
            }
        }
        for o in orow.iter_mut() {
            *o *= norm;
        }
    });
    Ok(out)
}

/// μ̂ at the single grid point `(a, b)` (1-based), by direct double sum.
pub fn kernel_estimate_at(data: &GridData, kernel: &KernelSpec, h: f64, a: usize, b: usize) -> f64 {
    let m = data.m;
    let x = GridData::grid_point(m, a, b);
    let mut s = 0.0;
    for k in 1..=m {
        for l in 1..=m {
            let p = GridData::grid_point(m, k, l);
            s += data.value(k, l) * kernel.k0((x.x - p.x) / h) * kernel.k0((x.y - p.y) / h);
        }
    }
    s / ((m * m) as f64 * h * h)
}

/// Grid points whose coordinates both lie in `[L₀h, 1 − L₀h]`.
pub fn interior_mask(m: usize, h: f64, l0: f64) -> Result<Vec<bool>> {
    let lh = l0 * h;
    if lh >= 0.5 {
        return Err(Error::EmptyInterior(lh));
    }
    let inside: Vec<bool> = (1..=m)
        .map(|k| {
            let u = k as f64 / m as f64;
            u >= lh - MASK_TOL && u <= 1.0 - lh + MASK_TOL
        })
        .collect();
    Ok((0..m * m).map(|i| inside[i / m] && inside[i % m]).collect())
}

/// Interior grid points with their smoothed values.
pub fn interior_estimates(data: &GridData, kernel: &KernelSpec, h: f64) -> Result<(Vec<Point>, Vec<f64>)> {
    let mask = interior_mask(data.m, h, kernel.l0)?;
    let mu = kernel_estimate(data, kernel, h)?;
    let pts = data.points();
    let mut points = Vec::new();
    let mut values = Vec::new();
    for i in 0..mask.len() {
        if mask[i] {
            points.push(pts[i]);
            values.push(mu[i]);
        }
    }
    Ok((points, values))
}

/// Weights `Φ(√(n h²)(μ̂ − τ̂)) − γ` on ℐₙ; the normalizer stays n = m².
pub fn regression_weights(
    data: &GridData,
    kernel: &KernelSpec,
    policy: &BandwidthPolicy,
    cfg: &StumpConfig,
) -> Result<WeightedSample> {
    cfg.validate()?;
    let h = policy.bandwidth(data.n());
    let (points, mu) = interior_estimates(data, kernel, h)?;
    let scale = data.m as f64 * h;
    let weights = mu
        .iter()
        .map(|v| std_normal_cdf(scale * (v - cfg.tau_hat)) - cfg.gamma)
        .collect();
    WeightedSample::with_normalizer(points, weights, cfg.gamma, data.n() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn grid(m: usize, f: impl Fn(usize, usize) -> f64) -> GridData {
        let mut v = Vec::with_capacity(m * m);
        for k in 1..=m {
            for l in 1..=m {
                v.push(f(k, l));
            }
        }
        GridData::new(m, v, None).unwrap()
    }

    #[test]
    fn kernel_integrals_by_quadrature() {
        for k in [KernelSpec::epanechnikov(), KernelSpec::triangular()] {
            let steps = 200_000;
            let du = 2.0 / steps as f64;
            let (mut mass, mut sq) = (0.0, 0.0);
            for i in 0..steps {
                let u = -1.0 + (i as f64 + 0.5) * du;
                mass += k.k0(u) * du;
                sq += k.k0(u).powi(2) * du;
            }
            assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-8);
            assert_abs_diff_eq!(sq, k.k0_sq_integral(), epsilon = 1e-8);
            assert_eq!(k.k0(1.0), 0.0);
            assert_eq!(k.k0(0.3), k.k0(-0.3));
        }
    }

    #[test]
    fn separable_matches_direct_sum() {
        let m = 23;
        let g = grid(m, |k, l| ((k * 7 + l * 3) % 11) as f64 - 4.0 + 0.1 * k as f64);
        for kern in [KernelSpec::epanechnikov(), KernelSpec::triangular()] {
            let h = 0.17;
            let fast = kernel_estimate(&g, &kern, h).unwrap();
            for a in [1, 5, 12, 23] {
                for b in [1, 9, 23] {
                    let direct = kernel_estimate_at(&g, &kern, h, a, b);
                    assert_abs_diff_eq!(fast[(a - 1) * m + b - 1], direct, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn constant_and_zero_responses() {
        let m = 200;
        let c = 3.0;
        let g = grid(m, |_, _| c);
        let kern = KernelSpec::epanechnikov();
        let h = 0.05;
        let mu = kernel_estimate(&g, &kern, h).unwrap();
        let mask = interior_mask(m, h, kern.l0).unwrap();
        for (v, inside) in mu.iter().zip(&mask) {
            if *inside {
                assert!((v - c).abs() <= 0.02 * c, "{v}");
            }
        }
        let z = kernel_estimate(&grid(m, |_, _| 0.0), &kern, h).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn spike_support_and_linearity() {
        let m = 40;
        let h = 0.1;
        let kern = KernelSpec::epanechnikov();
        let spike = grid(m, |k, l| if (k, l) == (20, 11) { 1.0 } else { 0.0 });
        let mu = kernel_estimate(&spike, &kern, h).unwrap();
        let centre = GridData::grid_point(m, 20, 11);
        for (i, p) in spike.points().iter().enumerate() {
            assert!(mu[i] >= 0.0);
            if p.linf(&centre) >= kern.l0 * h - 1e-12 {
                assert_eq!(mu[i], 0.0);
            }
        }
        let y1 = grid(m, |k, l| (k as f64).sin() + l as f64 * 0.01);
        let y2 = grid(m, |k, l| (k * l) as f64 / 100.0);
        let comb = grid(m, |k, l| 2.0 * y1.value(k, l) - 0.5 * y2.value(k, l));
        let (a, b, c) = (
            kernel_estimate(&y1, &kern, h).unwrap(),
            kernel_estimate(&y2, &kern, h).unwrap(),
            kernel_estimate(&comb, &kern, h).unwrap(),
        );
        for i in 0..m * m {
            assert_abs_diff_eq!(c[i], 2.0 * a[i] - 0.5 * b[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn interior_mask_examples() {
        // Row u = 1 survives only while L0 h is within the comparison slack.
        assert!(interior_mask(10, 1e-13, 1.0).unwrap().iter().all(|b| *b));
        let mask = interior_mask(10, 0.15, 1.0).unwrap();
        for k in 1..=10 {
            for l in 1..=10 {
                let want = (2..=8).contains(&k) && (2..=8).contains(&l);
                assert_eq!(mask[(k - 1) * 10 + l - 1], want, "{k},{l}");
            }
        }
        assert!(matches!(interior_mask(10, 0.5, 1.0), Err(Error::EmptyInterior(_))));
        let m = 500;
        let h = 0.1;
        let frac = interior_mask(m, h, 1.0).unwrap().iter().filter(|b| **b).count() as f64 / (m * m) as f64;
        assert!((frac - 0.64).abs() < 0.01);
    }

    #[test]
    fn regression_weight_examples() {
        let m = 30;
        let g = grid(m, |_, _| 1.0);
        let kern = KernelSpec::epanechnikov();
        let pol = BandwidthPolicy::default();
        let h = pol.bandwidth(g.n());
        let mu = kernel_estimate(&g, &kern, h).unwrap();
        let mask = interior_mask(m, h, 1.0).unwrap();
        let tau = mu[(m / 2) * m + m / 2];
        let w = regression_weights(&g, &kern, &pol, &StumpConfig::with_tau(tau)).unwrap();
        assert_eq!(w.len(), mask.iter().filter(|b| **b).count());
        assert_eq!(w.normalizer, (m * m) as f64);
        let mid = w
            .points
            .iter()
            .position(|p| *p == GridData::grid_point(m, m / 2 + 1, m / 2 + 1))
            .unwrap();
        assert_abs_diff_eq!(w.weights[mid], -0.25, epsilon = 1e-15);
        let far = StumpConfig::with_tau(tau - 10.0 / (m as f64 * h));
        let w2 = regression_weights(&g, &kern, &pol, &far).unwrap();
        assert!((w2.weights[mid] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn variance_constant_under_pure_noise() {
        let m = 200;
        let h = 0.05;
        let kern = KernelSpec::epanechnikov();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (r, w) = offsets(&kern, m, h);
        let reps = 500;
        let mut vals = Vec::with_capacity(reps);
        for _ in 0..reps {
            let mut s = 0.0;
            for wa in &w {
                for wb in &w {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    s += wa * wb * z;
                }
            }
            // √(n h²) μ̂ = m h · s / (m² h²).
            vals.push(s / (m as f64 * h));
        }
        let _ = r;
        let mean = vals.iter().sum::<f64>() / reps as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        assert!((var / kern.k_sq_integral() - 1.0).abs() < 0.1, "{var}");
    }
}
