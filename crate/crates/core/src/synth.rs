//! Ground-truth scenes and simulated data.
//!
//! A scene fixes the baseline region S₀, a p-regular surface μ around it, the
//! design distribution and the error law. Every random draw is a pure function
//! of `(scene, sizes, seed)`.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::criterion::DoseResponseData;
use crate::error::{Error, Result};
use crate::geometry::{self, ConvexPolygon, Point};
use crate::kernel::GridData;
use crate::kv::KvFile;

/// Number of vertices used when a curved S₀ is replaced by a polygon.
pub const DISC_POLYGON_SIDES: usize = 512;

/// 64-bit run seed. Child streams are derived with a SplitMix64 step so that
/// replication `r` of budget `b` draws the same numbers regardless of how
/// replications are scheduled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    pub fn derive(&self, stream: u64) -> Seed {
        Seed(splitmix64(self.0 ^ splitmix64(stream.wrapping_add(0x5851_f42d_4c95_7f2d))))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Disc { cx: f64, cy: f64, r: f64 },
    /// Axis-aligned ellipse with semi-axes `rx`, `ry`.
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64 },
    Polygon { polygon: ConvexPolygon },
}

/// Design distribution F on `[0,1]²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Design {
    Uniform,
    /// Piecewise-constant density on a `cols x rows` grid of cells; `values`
    /// are row-major with row 0 at the bottom and are normalized internally.
    Table {
        cols: usize,
        rows: usize,
        values: Vec<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLaw {
    Gaussian,
    /// `Exp(1) - 1`, scaled to variance σ₀².
    ShiftedExponential,
    /// Student t with 5 degrees of freedom, scaled to variance σ₀².
    StudentT5,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthScene {
    pub shape: Shape,
    pub tau0: f64,
    pub c0: f64,
    pub p: f64,
    pub kappa0: f64,
    pub delta0: f64,
    pub sigma0: f64,
    pub eps0: f64,
    pub design: Design,
    pub noise: NoiseLaw,
}

impl GroundTruthScene {
    /// Disc of radius 0.25 centred in the unit square, p = 1, C₀ = 1, τ₀ = 0,
    /// σ₀ = 0.5, uniform design.
    pub fn disc_preset() -> Self {
        GroundTruthScene {
            shape: Shape::Disc { cx: 0.5, cy: 0.5, r: 0.25 },
            tau0: 0.0,
            c0: 1.0,
            p: 1.0,
            kappa0: 0.25,
            delta0: 0.2,
            sigma0: 0.5,
            eps0: 0.01,
            design: Design::Uniform,
            noise: NoiseLaw::Gaussian,
        }
    }

    pub fn with_sigma0(mut self, sigma0: f64) -> Self {
        self.sigma0 = sigma0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let nums = [self.tau0, self.c0, self.p, self.kappa0, self.delta0, self.sigma0, self.eps0];
        if nums.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("scene parameters must be finite"));
        }
        if self.c0 <= 0.0 || self.p <= 0.0 || self.kappa0 <= 0.0 || self.delta0 <= 0.0 {
            return Err(Error::invalid("C0, p, kappa0 and delta0 must be positive"));
        }
        if self.sigma0 < 0.0 {
            return Err(Error::invalid("sigma0 must be >= 0"));
        }
        if !(self.eps0 > 0.0 && self.eps0 < 0.5) {
            return Err(Error::invalid("eps0 must lie in (0, 1/2)"));
        }
        // Separation: inf{μ : ρ ≥ κ₀} − τ₀ = C₀ κ₀^p must exceed δ₀.
        if self.c0 * self.kappa0.powf(self.p) <= self.delta0 {
            return Err(Error::invalid("separation requires C0 * kappa0^p > delta0"));
        }
        let (lo, hi) = self.bounding_box();
        let (a, b) = (self.eps0, 1.0 - self.eps0);
        if lo.x < a || lo.y < a || hi.x > b || hi.y > b {
            return Err(Error::invalid(format!(
                "S0 must lie inside [{a}, {b}]^2 (eps0 = {})",
                self.eps0
            )));
        }
        if self.s0_area() <= 0.0 {
            return Err(Error::invalid("S0 must have positive area"));
        }
        if let Design::Table { cols, rows, values } = &self.design {
            if *cols == 0 || *rows == 0 || values.len() != cols * rows {
                return Err(Error::invalid("design table must have cols*rows values"));
            }
            if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::invalid("design density must be positive everywhere"));
            }
        }
        Ok(())
    }

    fn bounding_box(&self) -> (Point, Point) {
        match &self.shape {
            Shape::Disc { cx, cy, r } => (Point::new(cx - r, cy - r), Point::new(cx + r, cy + r)),
            Shape::Ellipse { cx, cy, rx, ry } => {
                (Point::new(cx - rx, cy - ry), Point::new(cx + rx, cy + ry))
            }
            Shape::Polygon { polygon } => {
                let v = polygon.vertices();
                let fold = |f: fn(f64, f64) -> f64, init: f64, g: fn(&Point) -> f64| {
                    v.iter().map(g).fold(init, f)
                };
                (
                    Point::new(fold(f64::min, f64::INFINITY, |p| p.x), fold(f64::min, f64::INFINITY, |p| p.y)),
                    Point::new(fold(f64::max, f64::NEG_INFINITY, |p| p.x), fold(f64::max, f64::NEG_INFINITY, |p| p.y)),
                )
            }
        }
    }

    /// Exact Lebesgue measure of S₀.
    pub fn s0_area(&self) -> f64 {
        match &self.shape {
            Shape::Disc { r, .. } => PI * r * r,
            Shape::Ellipse { rx, ry, .. } => PI * rx * ry,
            Shape::Polygon { polygon } => polygon.area(),
        }
    }

    /// S₀ as a convex polygon: exact for polygonal shapes, an inscribed
    /// 512-gon otherwise.
    pub fn s0_polygon(&self) -> ConvexPolygon {
        match &self.shape {
            Shape::Disc { cx, cy, r } => ConvexPolygon::regular(*cx, *cy, *r, DISC_POLYGON_SIDES),
            Shape::Ellipse { cx, cy, rx, ry } => {
                let pts: Vec<Point> = (0..DISC_POLYGON_SIDES)
                    .map(|i| {
                        let t = 2.0 * PI * i as f64 / DISC_POLYGON_SIDES as f64;
                        Point::new(cx + rx * t.cos(), cy + ry * t.sin())
                    })
                    .collect();
                ConvexPolygon::hull_of(&pts)
            }
            Shape::Polygon { polygon } => polygon.clone(),
        }
    }

    /// `λ(S₀) − λ(polygonized S₀)`; zero for polygonal scenes.
    pub fn polygonization_error(&self) -> f64 {
        self.s0_area() - self.s0_polygon().area()
    }

    pub fn in_s0(&self, x: &Point) -> bool {
        match &self.shape {
            Shape::Disc { cx, cy, r } => (x.x - cx).powi(2) + (x.y - cy).powi(2) <= r * r,
            Shape::Ellipse { cx, cy, rx, ry } => {
                ((x.x - cx) / rx).powi(2) + ((x.y - cy) / ry).powi(2) <= 1.0
            }
            Shape::Polygon { polygon } => polygon.contains(x),
        }
    }

    /// ℓ∞ distance ρ(x, S₀); zero on S₀.
    pub fn rho(&self, x: &Point) -> f64 {
        match &self.shape {
            Shape::Disc { cx, cy, r } => linf_to_disc(x.x - cx, x.y - cy, *r),
            Shape::Ellipse { cx, cy, rx, ry } => {
                if self.in_s0(x) {
                    return 0.0;
                }
                // Square x + [-δ, δ]² meets the ellipse iff the clamped centre does.
                let meets = |d: f64| {
                    let qx = cx.clamp(x.x - d, x.x + d);
                    let qy = cy.clamp(x.y - d, x.y + d);
                    ((qx - cx) / rx).powi(2) + ((qy - cy) / ry).powi(2) <= 1.0
                };
                bisect_threshold(0.0, x.linf(&Point::new(*cx, *cy)), meets)
            }
            Shape::Polygon { polygon } => {
                geometry::linf_point_polygon(x, polygon).expect("scene polygon is non-empty")
            }
        }
    }

    /// ℓ∞ distance from x to the boundary ∂S₀.
    pub fn rho_boundary(&self, x: &Point) -> f64 {
        if !self.in_s0(x) {
            return self.rho(x);
        }
        match &self.shape {
            Shape::Disc { cx, cy, r } => {
                let (a, b) = ((x.x - cx).abs(), (x.y - cy).abs());
                // Largest δ with the far corner (a+δ, b+δ) still in the disc.
                0.5 * (-(a + b) + (2.0 * r * r - (a - b).powi(2)).max(0.0).sqrt())
            }
            Shape::Ellipse { cx, cy, rx, ry } => {
                let inside = |d: f64| {
                    [(-d, -d), (d, -d), (d, d), (-d, d)].iter().all(|(dx, dy)| {
                        ((x.x + dx - cx) / rx).powi(2) + ((x.y + dy - cy) / ry).powi(2) <= 1.0
                    })
                };
                bisect_threshold(0.0, rx.max(*ry), |d| !inside(d))
            }
            Shape::Polygon { polygon } => {
                let v = polygon.vertices();
                (0..v.len())
                    .map(|i| geometry::linf_point_segment(x, &v[i], &v[(i + 1) % v.len()]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// μ(x) = τ₀ + C₀ min(ρ, κ₀)^p + C₀ (ρ − κ₀)₊.
    pub fn mu(&self, x: &Point) -> f64 {
        let rho = self.rho(x);
        self.tau0 + self.c0 * rho.min(self.kappa0).powf(self.p) + self.c0 * (rho - self.kappa0).max(0.0)
    }

    /// Normalized cell densities for a table design.
    fn table_density(&self) -> Option<(usize, usize, Vec<f64>)> {
        match &self.design {
            Design::Uniform => None,
            Design::Table { cols, rows, values } => {
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                Some((*cols, *rows, values.iter().map(|v| v / mean).collect()))
            }
        }
    }

    pub fn design_density(&self, x: &Point) -> f64 {
        match self.table_density() {
            None => 1.0,
            Some((cols, rows, dens)) => {
                let c = ((x.x * cols as f64) as usize).min(cols - 1);
                let r = ((x.y * rows as f64) as usize).min(rows - 1);
                dens[r * cols + c]
            }
        }
    }

    pub fn is_uniform_design(&self) -> bool {
        matches!(self.design, Design::Uniform)
    }

    /// F(poly), exact for both uniform and table designs.
    pub fn design_probability(&self, poly: &ConvexPolygon) -> f64 {
        match self.table_density() {
            None => geometry::intersection_area(poly, &ConvexPolygon::rectangle(0.0, 0.0, 1.0, 1.0)),
            Some((cols, rows, dens)) => {
                let mut total = 0.0;
                for r in 0..rows {
                    for c in 0..cols {
                        let cell = ConvexPolygon::rectangle(
                            c as f64 / cols as f64,
                            r as f64 / rows as f64,
                            (c + 1) as f64 / cols as f64,
                            (r + 1) as f64 / rows as f64,
                        );
                        total += dens[r * cols + c] * geometry::intersection_area(poly, &cell);
                    }
                }
                total
            }
        }
    }

    pub fn sample_design<R: Rng>(&self, rng: &mut R) -> Point {
        match &self.design {
            Design::Uniform => Point::new(rng.random(), rng.random()),
            Design::Table { cols, rows, values } => {
                let total: f64 = values.iter().sum();
                let mut u = rng.random::<f64>() * total;
                let mut cell = values.len() - 1;
                for (i, v) in values.iter().enumerate() {
                    if u < *v {
                        cell = i;
                        break;
                    }
                    u -= v;
                }
                let (c, r) = (cell % cols, cell / cols);
                Point::new(
                    (c as f64 + rng.random::<f64>()) / *cols as f64,
                    (r as f64 + rng.random::<f64>()) / *rows as f64,
                )
            }
        }
    }

    fn noise<R: Rng>(&self, rng: &mut R) -> f64 {
        let z: f64 = match self.noise {
            NoiseLaw::Gaussian => StandardNormal.sample(rng),
            NoiseLaw::ShiftedExponential => {
                let e: f64 = Exp1.sample(rng);
                e - 1.0
            }
            NoiseLaw::StudentT5 => {
                let t: f64 = StudentT::new(5.0).expect("valid dof").sample(rng);
                t * (3.0f64 / 5.0).sqrt()
            }
        };
        self.sigma0 * z
    }

    // ---- scene files -------------------------------------------------------

    pub const FILE_KEYS: &'static [&'static str] = &[
        "shape", "cx", "cy", "r", "rx", "ry", "vertices", "tau0", "C0", "p", "kappa0", "delta0",
        "sigma0", "eps0", "design", "design_cols", "design_rows", "design_values", "noise",
    ];

    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        kv.check_keys(Self::FILE_KEYS)?;
        let preset = Self::disc_preset();
        let shape_name: String = kv.require("shape")?;
        let shape = match shape_name.as_str() {
            "disc" => Shape::Disc {
                cx: kv.require("cx")?,
                cy: kv.require("cy")?,
                r: kv.require("r")?,
            },
            "ellipse" => Shape::Ellipse {
                cx: kv.require("cx")?,
                cy: kv.require("cy")?,
                rx: kv.require("rx")?,
                ry: kv.require("ry")?,
            },
            "polygon" => {
                let raw: String = kv.require("vertices")?;
                let mut pts = Vec::new();
                for pair in raw.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                    let xy: Vec<f64> = pair
                        .split_whitespace()
                        .map(|t| t.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| kv.error("vertices", format!("bad vertex `{pair}`: {e}")))?;
                    if xy.len() != 2 {
                        return Err(kv.error("vertices", format!("bad vertex `{pair}`")));
                    }
                    pts.push(Point::new(xy[0], xy[1]));
                }
                let polygon = ConvexPolygon::hull_of(&pts);
                if polygon.len() < 3 {
                    return Err(kv.error("vertices", "polygon needs three non-collinear vertices"));
                }
                Shape::Polygon { polygon }
            }
            other => return Err(kv.error("shape", format!("unknown shape `{other}`"))),
        };
        let design = match kv.get_or("design", "uniform".to_string())?.as_str() {
            "uniform" => Design::Uniform,
            "table" => Design::Table {
                cols: kv.require("design_cols")?,
                rows: kv.require("design_rows")?,
                values: kv
                    .get_list("design_values")?
                    .ok_or_else(|| kv.error("design_values", "missing required key"))?,
            },
            other => return Err(kv.error("design", format!("unknown design `{other}`"))),
        };
        let noise = match kv.get_or("noise", "gaussian".to_string())?.as_str() {
            "gaussian" => NoiseLaw::Gaussian,
            "exponential" => NoiseLaw::ShiftedExponential,
            "t5" => NoiseLaw::StudentT5,
            other => return Err(kv.error("noise", format!("unknown noise law `{other}`"))),
        };
        let scene = GroundTruthScene {
            shape,
            tau0: kv.get_or("tau0", preset.tau0)?,
            c0: kv.get_or("C0", preset.c0)?,
            p: kv.get_or("p", preset.p)?,
            kappa0: kv.get_or("kappa0", preset.kappa0)?,
            delta0: kv.get_or("delta0", preset.delta0)?,
            sigma0: kv.get_or("sigma0", preset.sigma0)?,
            eps0: kv.get_or("eps0", preset.eps0)?,
            design,
            noise,
        };
        scene.validate().map_err(|e| kv.error("shape", e.to_string()))?;
        Ok(scene)
    }

    pub fn parse(source_name: &str, text: &str) -> Result<Self> {
        Self::from_kv(&KvFile::parse(source_name, text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_kv(&KvFile::read(path)?)
    }

    /// Flat key-value text; `parse(to_text())` reproduces the scene exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        match &self.shape {
            Shape::Disc { cx, cy, r } => {
                line("shape", "disc".into());
                line("cx", cx.to_string());
                line("cy", cy.to_string());
                line("r", r.to_string());
            }
            Shape::Ellipse { cx, cy, rx, ry } => {
                line("shape", "ellipse".into());
                line("cx", cx.to_string());
                line("cy", cy.to_string());
                line("rx", rx.to_string());
                line("ry", ry.to_string());
            }
            Shape::Polygon { polygon } => {
                line("shape", "polygon".into());
                let v: Vec<String> = polygon.vertices().iter().map(|p| format!("{} {}", p.x, p.y)).collect();
                line("vertices", v.join("; "));
            }
        }
        line("tau0", self.tau0.to_string());
        line("C0", self.c0.to_string());
        line("p", self.p.to_string());
        line("kappa0", self.kappa0.to_string());
        line("delta0", self.delta0.to_string());
        line("sigma0", self.sigma0.to_string());
        line("eps0", self.eps0.to_string());
        match &self.design {
            Design::Uniform => line("design", "uniform".into()),
            Design::Table { cols, rows, values } => {
                line("design", "table".into());
                line("design_cols", cols.to_string());
                line("design_rows", rows.to_string());
                let v: Vec<String> = values.iter().map(|x| x.to_string()).collect();
                line("design_values", v.join(","));
            }
        }
        let noise = match self.noise {
            NoiseLaw::Gaussian => "gaussian",
            NoiseLaw::ShiftedExponential => "exponential",
            NoiseLaw::StudentT5 => "t5",
        };
        line("noise", noise.into());
        out
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

/// ℓ∞ distance from the offset `(dx, dy)` (relative to the centre) to a disc of
/// radius `r`: the smallest δ for which the square of half-side δ touches it.
pub fn linf_to_disc(dx: f64, dy: f64, r: f64) -> f64 {
    let (a, b) = {
        let (u, v) = (dx.abs(), dy.abs());
        (u.max(v), u.min(v))
    };
    if a * a + b * b <= r * r {
        return 0.0;
    }
    if a - r >= b {
        return a - r;
    }
    // (a − δ)² + (b − δ)² = r² with δ < b.
    0.5 * ((a + b) - (2.0 * r * r - (a - b).powi(2)).sqrt())
}

/// Smallest `d` in `[lo, hi]` with `pred(d)` true, for monotone `pred`.
fn bisect_threshold(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SamplingOptions {
    /// Draw all m replicates and average them instead of drawing the mean
    /// directly. Implied by any non-Gaussian error law.
    pub full_replicates: bool,
}

pub fn sample_dose_response(scene: &GroundTruthScene, m: usize, n: usize, seed: Seed) -> Result<DoseResponseData> {
    sample_dose_response_with(scene, m, n, seed, SamplingOptions::default())
}

pub fn sample_dose_response_with(
    scene: &GroundTruthScene,
    m: usize,
    n: usize,
    seed: Seed,
    opts: SamplingOptions,
) -> Result<DoseResponseData> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("m and n must be >= 1"));
    }
    scene.validate()?;
    let mut design_rng = seed.derive(1).rng();
    let mut noise_rng = seed.derive(2).rng();
    let full = opts.full_replicates || scene.noise != NoiseLaw::Gaussian;
    let mut points = Vec::with_capacity(n);
    let mut means = Vec::with_capacity(n);
    for _ in 0..n {
        let x = scene.sample_design(&mut design_rng);
        let mu = scene.mu(&x);
        let ybar = if full {
            let s: f64 = (0..m).map(|_| scene.noise(&mut noise_rng)).sum();
            mu + s / m as f64
        } else {
            let z: f64 = StandardNormal.sample(&mut noise_rng);
            mu + scene.sigma0 / (m as f64).sqrt() * z
        };
        points.push(x);
        means.push(ybar);
    }
    DoseResponseData::new(points, means, m, Some(scene.sigma0))
}

pub fn sample_grid(scene: &GroundTruthScene, m: usize, seed: Seed) -> Result<GridData> {
    if m < 2 {
        return Err(Error::invalid("grid side m must be >= 2"));
    }
    scene.validate()?;
    let mut rng = seed.derive(3).rng();
    let mut responses = Vec::with_capacity(m * m);
    for k in 1..=m {
        for l in 1..=m {
            let x = GridData::grid_point(m, k, l);
            responses.push(scene.mu(&x) + scene.noise(&mut rng));
        }
    }
    GridData::new(m, responses, Some(scene.sigma0))
}
