//! Distances between an estimate and the true region.

use serde::{Deserialize, Serialize};

use crate::geometry::{hausdorff_distance, symmetric_difference_area, ConvexPolygon};
use crate::synth::{GroundTruthScene, Seed};

pub const DEFAULT_MC_POINTS: usize = 1_000_000;

/// λ(Ŝ △ S₀) against the polygonized S₀.
pub fn metric_d(est: &ConvexPolygon, scene: &GroundTruthScene) -> f64 {
    symmetric_difference_area(est, &scene.s0_polygon())
}

/// F(Ŝ △ S₀) and its Monte Carlo standard error (zero when exact).
pub fn metric_df(est: &ConvexPolygon, scene: &GroundTruthScene, mc_points: usize, seed: Seed) -> (f64, f64) {
    if scene.is_uniform_design() {
        return (metric_d(est, scene), 0.0);
    }
    let s0 = scene.s0_polygon();
    let mut rng = seed.rng();
    let n = mc_points.max(1);
    let hits = (0..n)
        .filter(|_| {
            let x = scene.sample_design(&mut rng);
            est.contains(&x) != s0.contains(&x)
        })
        .count();
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// ℓ∞ Hausdorff distance to the polygonized S₀; infinite for an empty estimate.
pub fn metric_hausdorff(est: &ConvexPolygon, scene: &GroundTruthScene) -> f64 {
    hausdorff_distance(est, &scene.s0_polygon()).unwrap_or(f64::INFINITY)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetMetrics {
    pub d: f64,
    pub d_f: f64,
    pub d_f_se: f64,
    /// `None` when the estimate is empty.
    pub hausdorff: Option<f64>,
    pub hausdorff_empty: bool,
    /// λ(S₀) minus the area of its polygonization.
    pub polygonization_error: f64,
}

pub fn compute_metrics(est: &ConvexPolygon, scene: &GroundTruthScene, mc_points: usize, seed: Seed) -> SetMetrics {
    let (d_f, d_f_se) = metric_df(est, scene, mc_points, seed);
    let h = metric_hausdorff(est, scene);
    SetMetrics {
        d: metric_d(est, scene),
        d_f,
        d_f_se,
        hausdorff: h.is_finite().then_some(h),
        hausdorff_empty: !h.is_finite(),
        polygonization_error: scene.polygonization_error(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{fatten_thin, intersection};
    use crate::synth::Design;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn d_examples() {
        let scene = GroundTruthScene::disc_preset();
        let s0 = scene.s0_polygon();
        assert_eq!(metric_d(&s0, &scene), 0.0);
        assert_abs_diff_eq!(metric_d(&ConvexPolygon::empty(), &scene), s0.area(), epsilon = 1e-15);
        let unit = ConvexPolygon::rectangle(0.0, 0.0, 1.0, 1.0);
        assert_abs_diff_eq!(metric_d(&unit, &scene), 1.0 - PI * 0.0625, epsilon = 1e-4);
        assert!(scene.polygonization_error() < 1e-4);
    }

    #[test]
    fn df_uniform_is_d_and_zero_on_truth() {
        let scene = GroundTruthScene::disc_preset();
        let est = ConvexPolygon::rectangle(0.3, 0.3, 0.8, 0.7);
        assert_eq!(metric_df(&est, &scene, 10, Seed(0)), (metric_d(&est, &scene), 0.0));
        let mut table = scene.clone();
        table.design = Design::Table { cols: 2, rows: 1, values: vec![2.0, 1.0] };
        assert_eq!(metric_df(&table.s0_polygon(), &table, 1000, Seed(0)).0, 0.0);
    }

    #[test]
    fn df_monte_carlo_matches_exact_design_integral() {
        let mut scene = GroundTruthScene::disc_preset();
        scene.design = Design::Table { cols: 2, rows: 1, values: vec![2.0, 1.0] };
        // Discrepancy confined to the left half, where the density is 4/3.
        let est = ConvexPolygon::rectangle(0.1, 0.2, 0.45, 0.8);
        let s0 = scene.s0_polygon();
        let exact = scene.design_probability(&est) + scene.design_probability(&s0)
            - 2.0 * scene.design_probability(&intersection(&est, &s0));
        let (v, se) = metric_df(&est, &scene, 400_000, Seed(12));
        assert!(se < 1e-3);
        assert!((v - exact).abs() <= 4.0 * se, "{v} vs {exact}");
        // A patch disjoint from S0 in the dense half; F(S0) = λ(S0) by symmetry.
        let patch = ConvexPolygon::rectangle(0.05, 0.05, 0.2, 0.2);
        let (v2, se2) = metric_df(&patch, &scene, 400_000, Seed(3));
        let want = 4.0 / 3.0 * patch.area() + s0.area();
        assert!((v2 - want).abs() <= 4.0 * se2, "{v2} vs {want}");
    }

    #[test]
    fn hausdorff_examples() {
        let scene = GroundTruthScene::disc_preset();
        let s0 = scene.s0_polygon();
        assert_eq!(metric_hausdorff(&s0, &scene), 0.0);
        assert_eq!(metric_hausdorff(&ConvexPolygon::empty(), &scene), f64::INFINITY);
        let (fat, _) = fatten_thin(&s0, 0.05).unwrap();
        assert_abs_diff_eq!(metric_hausdorff(&fat, &scene), 0.05, epsilon = 1e-9);
        let m = compute_metrics(&ConvexPolygon::empty(), &scene, 10, Seed(1));
        assert!(m.hausdorff.is_none() && m.hausdorff_empty);
    }
}
