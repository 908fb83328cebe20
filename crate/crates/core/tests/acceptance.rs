//! Acceptance run: one PASS/FAIL line per criterion with pinned tolerances.
//!
//! The binary exits non-zero only when a check cannot be run at all. A
//! criterion that runs and misses its band is reported as FAIL.

use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use baseset::convex_dp::estimate_set;
use baseset::criterion::{dose_response_pvalues, population_criterion, StumpConfig, WeightedSample, DEFAULT_GAMMA};
use baseset::experiments::{
    oracle_check, ols_slope, run_budget, run_estimate, run_rate_study, EstimateConfig, InstanceKind, RateStudySpec,
    RateTauMode, TauMode,
};
use baseset::geometry::{intersection, linf_point_segment, ConvexPolygon, Point};
use baseset::synth::{sample_dose_response, sample_grid, GroundTruthScene, Seed};
use baseset::tau::DataRef;

const ORACLE_TOL: f64 = 1e-9;
const ORACLE_TIME_S: f64 = 60.0;
const INCLUSION_TOL: f64 = 1e-12;
const DOSE_SLOPE: (f64, f64) = (-0.92, -0.42);
const DOSE_TIME_S: f64 = 1200.0;
const REG_SLOPE: (f64, f64) = (-0.40, -0.10);
const PVAL_INSIDE: (f64, f64) = (0.45, 0.55);
const PVAL_OUTSIDE_MAX: f64 = 0.05;
const MIN_TOL: f64 = 1e-9;
const C_GAMMA: f64 = 0.25;
const NOISELESS_D_MAX: f64 = 0.02;
const NOISELESS_H_MAX: f64 = 0.1;
const COMPLEXITY_BAND: (f64, f64) = (2.5, 3.5);

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, run: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let o = run();
    println!(
        "{} C{id} {name}: {} [{:.1}s]",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        t.elapsed().as_secs_f64()
    );
    o.pass
}

fn in_band(v: f64, band: (f64, f64)) -> bool {
    v >= band.0 && v <= band.1
}

fn main() {
    let scene = GroundTruthScene::disc_preset();
    let mut passed = 0;
    let mut total = 0;
    let mut tally = |ok: bool| {
        total += 1;
        passed += ok as usize;
    };

    let t = Instant::now();
    let oracle = oracle_check(200, 4, 12, &[InstanceKind::Random], Seed(101)).expect("oracle check runs");
    let oracle_s = t.elapsed().as_secs_f64();
    let extra = oracle_check(120, 3, 12, &[InstanceKind::Lattice, InstanceKind::Duplicates], Seed(102))
        .expect("oracle check runs");

    tally(report(1, "oracle equivalence", || Outcome {
        pass: oracle.failures == 0 && oracle.max_abs_diff <= ORACLE_TOL && oracle_s < ORACLE_TIME_S,
        detail: format!(
            "{}/{} within {ORACLE_TOL:e} (max diff {:e}), {:.2}s < {ORACLE_TIME_S}s; lattice/duplicate extra run {}/{}",
            oracle.rows.len() - oracle.failures,
            oracle.rows.len(),
            oracle.max_abs_diff,
            oracle_s,
            extra.rows.len() - extra.failures,
            extra.rows.len()
        ),
    }));

    tally(report(2, "inclusion bookkeeping", || {
        let worst = oracle.max_inclusion_diff.max(extra.max_inclusion_diff);
        Outcome { pass: worst <= INCLUSION_TOL, detail: format!("max |recomputed - dp| = {worst:e} <= {INCLUSION_TOL:e}") }
    }));

    tally(report(3, "dose-response rate, known tau", || {
        let t = Instant::now();
        let spec = RateStudySpec::dose_preset(&[100, 200, 400, 800], 1.0, 1.0, 50, Seed(301));
        let r = run_rate_study(&spec, &scene).expect("rate study runs");
        let secs = t.elapsed().as_secs_f64();
        let medians: Vec<String> = r.rows.iter().map(|b| format!("{:.4}", b.median_d)).collect();
        Outcome {
            pass: in_band(r.slope, DOSE_SLOPE) && secs <= DOSE_TIME_S,
            detail: format!(
                "slope {:.3} in [{}, {}] (bootstrap CI [{:.3}, {:.3}]), medians [{}], {secs:.1}s <= {DOSE_TIME_S}s",
                r.slope,
                DOSE_SLOPE.0,
                DOSE_SLOPE.1,
                r.slope_ci.0,
                r.slope_ci.1,
                medians.join(", ")
            ),
        }
    }));

    tally(report(4, "regression rate", || regression_pilot(&scene)));

    tally(report(5, "p-value dichotomy", || {
        let d = sample_dose_response(&scene, 400, 2000, Seed(501)).expect("sample");
        let p = dose_response_pvalues(&d, &StumpConfig::new(DEFAULT_GAMMA, scene.tau0).expect("config"));
        let s0 = scene.s0_polygon();
        let verts = s0.vertices();
        let depth = |x: &Point| {
            (0..verts.len()).map(|i| linf_point_segment(x, &verts[i], &verts[(i + 1) % verts.len()])).fold(f64::INFINITY, f64::min)
        };
        let (mut inside, mut outside) = (Vec::new(), Vec::new());
        for (x, pv) in d.points.iter().zip(&p) {
            if depth(x) > 0.1 {
                if scene.in_s0(x) { inside.push(*pv) } else { outside.push(*pv) }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (mi, mo) = (mean(&inside), mean(&outside));
        Outcome {
            pass: in_band(mi, PVAL_INSIDE) && mo < PVAL_OUTSIDE_MAX,
            detail: format!(
                "inside mean {mi:.4} in [{}, {}] over {} points; outside mean {mo:.2e} < {PVAL_OUTSIDE_MAX} over {} points",
                PVAL_INSIDE.0,
                PVAL_INSIDE.1,
                inside.len(),
                outside.len()
            ),
        }
    }));

    tally(report(6, "population-criterion minimality", || {
        let s0 = scene.s0_polygon();
        let m0 = population_criterion(&scene, &s0, DEFAULT_GAMMA);
        let mut rng = Seed(601).rng();
        let noise = Normal::new(0.0, 0.3).expect("normal");
        let mut worst = f64::INFINITY;
        for _ in 0..100 {
            let k = rng.random_range(3..=24);
            let (cx, cy) = (0.5 + rng.random_range(-0.1..0.1), 0.5 + rng.random_range(-0.1..0.1));
            let pts: Vec<Point> = (0..k)
                .map(|_| {
                    let a = rng.random_range(0.0..std::f64::consts::TAU);
                    let r = 0.25 * f64::exp(noise.sample(&mut rng));
                    Point::new(cx + r * a.cos(), cy + r * a.sin())
                })
                .collect();
            let s = ConvexPolygon::hull_of(&pts);
            let f_sd = scene.design_probability(&s) + scene.design_probability(&s0)
                - 2.0 * scene.design_probability(&intersection(&s, &s0));
            let gap = population_criterion(&scene, &s, DEFAULT_GAMMA) - m0 - C_GAMMA * f_sd;
            worst = worst.min(gap);
        }
        Outcome {
            pass: worst >= -MIN_TOL,
            detail: format!("min over 100 sets of M(S) - M(S0) - {C_GAMMA}*F(S d S0) = {worst:e} >= -{MIN_TOL:e}"),
        }
    }));

    tally(report(7, "unknown-tau parity", || {
        let mut spec = RateStudySpec::dose_preset(&[100, 200, 400, 800], 1.0, 1.0, 50, Seed(701));
        spec.tau_mode = RateTauMode::Iterative;
        let r = run_rate_study(&spec, &scene).expect("rate study runs");
        let p90: Vec<f64> = r.rows.iter().map(|b| b.tau_p90_scaled).collect();
        let monotone = p90.windows(2).all(|w| w[1] <= w[0]);
        Outcome {
            pass: in_band(r.slope, DOSE_SLOPE) && monotone,
            detail: format!(
                "slope {:.3} in [{}, {}]; p90 sqrt(mn)|tau-tau0| = [{}] non-increasing: {monotone}",
                r.slope,
                DOSE_SLOPE.0,
                DOSE_SLOPE.1,
                p90.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(", ")
            ),
        }
    }));

    tally(report(8, "noiseless consistency", || {
        let quiet = scene.clone().with_sigma0(0.0);
        let cfg = EstimateConfig { tau_mode: TauMode::Known(quiet.tau0), mc_points: 0, ..Default::default() };
        let n = 2000usize;
        let m = (n as f64).powf(4.0 / 3.0).round() as usize;
        let dose = sample_dose_response(&quiet, m, n, Seed(801)).expect("sample");
        let grid = sample_grid(&quiet, 200, Seed(802)).expect("sample");
        let rd = run_estimate(DataRef::Dose(&dose), Some(&quiet), &cfg, Seed(1)).expect("estimate");
        let rg = run_estimate(DataRef::Grid(&grid), Some(&quiet), &cfg, Seed(1)).expect("estimate");
        let (md, mg) = (rd.metrics.expect("metrics"), rg.metrics.expect("metrics"));
        let ok = |d: f64, h: Option<f64>| d <= NOISELESS_D_MAX && h.is_some_and(|h| h <= NOISELESS_H_MAX);
        Outcome {
            pass: ok(md.d, md.hausdorff) && ok(mg.d, mg.hausdorff),
            detail: format!(
                "dose n={n}: d={:.4}, H={:.4}; regression m=200: d={:.4}, H={:.4} (limits d <= {NOISELESS_D_MAX}, H <= {NOISELESS_H_MAX})",
                md.d,
                md.hausdorff.unwrap_or(f64::INFINITY),
                mg.d,
                mg.hausdorff.unwrap_or(f64::INFINITY)
            ),
        }
    }));

    tally(report(9, "complexity", || {
        let ns = [100usize, 200, 400, 800];
        let mut times = Vec::new();
        for &n in &ns {
            let mut rng = Seed(900 + n as u64).rng();
            let points: Vec<Point> = (0..n).map(|_| Point::new(rng.random(), rng.random())).collect();
            let weights: Vec<f64> = (0..n).map(|_| rng.random_range(-0.75..0.25)).collect();
            let sample = WeightedSample::new(points, weights, DEFAULT_GAMMA).expect("sample");
            let reps = if n <= 200 { 3 } else { 1 };
            let best = (0..reps)
                .map(|_| {
                    let t = Instant::now();
                    std::hint::black_box(estimate_set(&sample));
                    t.elapsed().as_secs_f64()
                })
                .fold(f64::INFINITY, f64::min);
            times.push(best);
        }
        let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
        let y: Vec<f64> = times.iter().map(|t| t.ln()).collect();
        let k = ols_slope(&x, &y);
        Outcome {
            pass: in_band(k, COMPLEXITY_BAND),
            detail: format!(
                "exponent {k:.3} in [{}, {}], times [{}]s",
                COMPLEXITY_BAND.0,
                COMPLEXITY_BAND.1,
                times.iter().map(|t| format!("{t:.3}")).collect::<Vec<_>>().join(", ")
            ),
        }
    }));

    println!("acceptance: {passed}/{total} criteria passed");
}

/// The full protocol (m up to 180, 30 replications) is far beyond a desk
/// budget for an exact cubic optimizer, so this times small grids, projects
/// the cost of the full run and reports the criterion as not met.
fn regression_pilot(scene: &GroundTruthScene) -> Outcome {
    let pilot = [20usize, 30, 40];
    let reps = [3usize, 3, 1];
    let mut per_rep = Vec::new();
    let mut medians = Vec::new();
    for (&m, &r) in pilot.iter().zip(&reps) {
        let spec = RateStudySpec::regression_preset(&[m], 1.0, 0.5, r, Seed(401)).expect("spec");
        let t = Instant::now();
        let row = one_budget(&spec, scene);
        per_rep.push(t.elapsed().as_secs_f64() / r as f64);
        medians.push(row);
    }
    let x: Vec<f64> = pilot.iter().map(|&m| (m as f64).ln()).collect();
    let y: Vec<f64> = per_rep.iter().map(|t| t.ln()).collect();
    let k = ols_slope(&x, &y);
    let last = *per_rep.last().expect("pilot");
    let projected: f64 = [50.0f64, 80.0, 120.0, 180.0].iter().map(|m| 30.0 * last * (m / 40.0).powf(k)).sum();
    let pilot_slope = ols_slope(
        &pilot.iter().map(|&m| ((m * m) as f64).ln()).collect::<Vec<_>>(),
        &medians.iter().map(|d: &f64| d.ln()).collect::<Vec<_>>(),
    );
    Outcome {
        pass: false,
        detail: format!(
            "not run at m in {{50,80,120,180}}: pilot per-replication times [{}]s at m=[20,30,40] scale as m^{k:.2}, projecting {:.1e}s ({:.0} days) on this machine; target band [{}, {}]; pilot-only slope {pilot_slope:.3} over medians [{}]",
            per_rep.iter().map(|t| format!("{t:.2}")).collect::<Vec<_>>().join(", "),
            projected,
            projected / 86400.0,
            REG_SLOPE.0,
            REG_SLOPE.1,
            medians.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn one_budget(spec: &RateStudySpec, scene: &GroundTruthScene) -> f64 {
    run_budget(spec, scene, 0).expect("budget runs").median_d
}
