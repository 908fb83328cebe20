//! Exact minimization of the weighted criterion over convex polygons with
//! vertices at data points.
//!
//! For a fixed leftmost vertex (the base) the remaining points are sorted
//! counterclockwise by angle, nearest first along a common ray. A polygon is
//! then a chain `base, v₁, …, v_r` and its closed region splits into the
//! segment `[base, v₁]` and the triangles `Δ(v_t, v_{t+1})` = closed triangle
//! `(base, v_t, v_{t+1})` minus the segment `[base, v_t]`. With
//!
//! ```text
//! M(base, j) = w_base + weights on (base, j]
//! M(j, k)    = min(M(base, j), min_i M(i, j)) + Δ(j, k),   orientation(i, j, k) ≥ 0
//! ```
//!
//! the optimum for the base is the smallest of `w_base`, `M(base, ·)` and
//! `M(·, ·)`. Triangle masses for a fixed `j` come from one Fenwick sweep over
//! the directions seen from `j`, so a fan costs O(N² log N).

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criterion::WeightedSample;
use crate::error::{Error, Result};
use crate::geometry::{orientation, ConvexPolygon, Orientation, Point};

/// Two candidate criteria closer than this are treated as tied.
pub const TIE_TOL: f64 = 1e-12;
pub const DEFAULT_ORACLE_MAX_N: usize = 15;

const BASE: u32 = u32::MAX;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OptimizerStats {
    pub points: usize,
    pub unique_points: usize,
    /// Points that can lie in some candidate polygon.
    pub kept_points: usize,
    /// Points allowed as polygon vertices.
    pub candidate_vertices: usize,
    pub fans: usize,
    /// Solved by the hull-of-negatives certificate without running the DP.
    pub certificate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerResult {
    pub polygon: ConvexPolygon,
    /// Sorted indices of the sample points inside or on the polygon.
    pub included_indices: Vec<usize>,
    pub criterion: f64,
    pub base_vertex: Option<usize>,
    pub vertex_chain: Vec<usize>,
    pub elapsed_ms: f64,
    pub stats: OptimizerStats,
}

impl OptimizerResult {
    fn empty(stats: OptimizerStats, start: Instant) -> Self {
        OptimizerResult {
            polygon: ConvexPolygon::empty(),
            included_indices: Vec::new(),
            criterion: 0.0,
            base_vertex: None,
            vertex_chain: Vec::new(),
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
            stats,
        }
    }

    pub fn included_count(&self) -> usize {
        self.included_indices.len()
    }
}

/// True if `(a_val, a_inc)` beats `(b_val, b_inc)`: lower criterion, then fewer
/// included points, then the lexicographically smaller index set.
pub fn is_better(a_val: f64, a_inc: &[usize], b_val: f64, b_inc: &[usize]) -> bool {
    if a_val < b_val - TIE_TOL {
        return true;
    }
    if a_val > b_val + TIE_TOL {
        return false;
    }
    (a_inc.len(), a_inc) < (b_inc.len(), b_inc)
}

/// Distinct points in lexicographic order with merged weights.
struct Prepared {
    pts: Vec<Point>,
    w: Vec<f64>,
    /// Original indices per distinct point, ascending.
    members: Vec<Vec<usize>>,
}

fn prepare(sample: &WeightedSample) -> Prepared {
    let mut idx: Vec<usize> = (0..sample.len()).collect();
    idx.sort_by(|&a, &b| sample.points[a].lex_cmp(&sample.points[b]).then(a.cmp(&b)));
    let mut pts = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for i in idx {
        let p = sample.points[i];
        match pts.last() {
            Some(q) if *q == p => members.last_mut().unwrap().push(i),
            _ => {
                pts.push(p);
                members.push(vec![i]);
            }
        }
    }
    let w = members
        .iter()
        .map(|g| {
            // Sum in sorted order so the merge is permutation invariant.
            let mut ws: Vec<f64> = g.iter().map(|&i| sample.weights[i]).collect();
            ws.sort_by(f64::total_cmp);
            ws.iter().sum()
        })
        .collect();
    Prepared { pts, w, members }
}

struct Fenwick(Vec<f64>);

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick(vec![0.0; n + 1])
    }

    fn add(&mut self, i: usize, v: f64) {
        let mut i = i + 1;
        while i < self.0.len() {
            self.0[i] += v;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum over `0..=i`.
    fn prefix(&self, i: usize) -> f64 {
        let mut i = i + 1;
        let mut s = 0.0;
        while i > 0 {
            s += self.0[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// Monotone stand-in for the angle of `d` measured counterclockwise from `z`,
/// for `d` in the closed left half-plane of `z`. Ranges over `[0, 2]`.
#[inline]
fn half_turn_key(z: &Point, d: &Point) -> f64 {
    let a = z.x * d.x + z.y * d.y;
    let c = (z.x * d.y - z.y * d.x).max(0.0);
    if a >= 0.0 {
        if a + c == 0.0 {
            0.0
        } else {
            c / (a + c)
        }
    } else {
        1.0 + (-a) / (c - a)
    }
}

/// DP tables for one base vertex. Values are raw weight sums (not divided by
/// the sample normalizer) and all indices refer to distinct points.
#[derive(Clone, Debug)]
struct Fan {
    base: usize,
    /// Fan points in counterclockwise order, nearest first on a common ray.
    order: Vec<usize>,
    /// Fan positions of the vertex candidates.
    slots: Vec<usize>,
    /// `M(base, j)` per slot.
    m_base: Vec<f64>,
    /// `M(j, k)`, row-major by slot; infinite unless `j < k`.
    m: Vec<f64>,
    back: Vec<u32>,
    best_value: f64,
    best_chain: Vec<usize>,
}

fn run_fan(pts: &[Point], w: &[f64], base: usize, allowed: &[bool], cand: &[bool]) -> Fan {
    let b = pts[base];
    let mut order: Vec<usize> = (base + 1..pts.len()).filter(|&q| allowed[q]).collect();
    // Lexicographically larger points live in the half-plane of angles (−π/2, π/2].
    let key0 = |q: usize| {
        let z = pts[q].sub(&b);
        z.y / (z.x + z.y.abs())
    };
    order.sort_by(|&p, &q| key0(p).total_cmp(&key0(q)).then(p.cmp(&q)));
    let n = order.len();
    let mut same_ray_as_prev = vec![false; n];
    let mut s = 0;
    while s < n {
        let mut e = s + 1;
        while e < n && orientation(&b, &pts[order[s]], &pts[order[e]]) == Orientation::Zero {
            e += 1;
        }
        let dist = |q: usize| {
            let z = pts[q].sub(&b);
            z.x * z.x + z.y * z.y
        };
        order[s..e].sort_by(|&p, &q| dist(p).total_cmp(&dist(q)).then(p.cmp(&q)));
        for f in same_ray_as_prev.iter_mut().take(e).skip(s + 1) {
            *f = true;
        }
        s = e;
    }

    let slots: Vec<usize> = (0..n).filter(|&t| cand[order[t]]).collect();
    let v = slots.len();
    let mut slot_of = vec![usize::MAX; n];
    for (sl, &t) in slots.iter().enumerate() {
        slot_of[t] = sl;
    }
    let mut ray = vec![0.0; n];
    for t in 0..n {
        ray[t] = w[order[t]] + if same_ray_as_prev[t] { ray[t - 1] } else { 0.0 };
    }
    let m_base: Vec<f64> = slots.iter().map(|&t| w[base] + ray[t]).collect();

    let mut m = vec![f64::INFINITY; v * v];
    let mut back = vec![BASE; v * v];
    let mut best_value = w[base];
    let mut best_cell: Option<(usize, usize)> = None;
    let mut best_segment: Option<usize> = None;
    for (sl, &val) in m_base.iter().enumerate() {
        if val < best_value {
            best_value = val;
            best_segment = Some(sl);
        }
    }

    let mut later: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut rank = vec![0usize; n];
    let mut delta = vec![0.0; v];
    let mut incoming: Vec<(f64, usize)> = Vec::with_capacity(v);
    for (sj, &tj) in slots.iter().enumerate() {
        let pj = pts[order[tj]];
        let zj = pj.sub(&b);

        later.clear();
        later.extend((tj + 1..n).map(|t| (half_turn_key(&zj, &pts[order[t]].sub(&pj)), t)));
        if later.is_empty() {
            continue;
        }
        later.sort_by(|a, c| a.0.total_cmp(&c.0).then(a.1.cmp(&c.1)));
        let mut r = 0;
        let mut head = later[0].1;
        for &(_, t) in &later {
            if orientation(&pj, &pts[order[head]], &pts[order[t]]) != Orientation::Zero {
                r += 1;
                head = t;
            }
            rank[t] = r;
        }
        let ranks = r + 1;

        // Δ(j, k) = w_k + Σ w_q over q strictly between j and k in fan order
        // with orientation(j, k, q) ≥ 0, i.e. rank(q) ≥ rank(k).
        let mut fen = Fenwick::new(ranks);
        for t in tj + 1..n {
            let ri = ranks - 1 - rank[t];
            if slot_of[t] != usize::MAX {
                delta[slot_of[t]] = w[order[t]] + fen.prefix(ri);
            }
            fen.add(ri, w[order[t]]);
        }

        incoming.clear();
        incoming.extend((0..sj).map(|si| (half_turn_key(&zj, &pj.sub(&pts[order[slots[si]]])), si)));
        incoming.sort_by(|a, c| a.0.total_cmp(&c.0).then(a.1.cmp(&c.1)));

        let mut run_min = m_base[sj];
        let mut run_arg = BASE;
        let mut ptr = 0;
        for &(_, tk) in &later {
            let sk = slot_of[tk];
            if sk == usize::MAX {
                continue;
            }
            let pk = pts[order[tk]];
            while ptr < incoming.len() {
                let si = incoming[ptr].1;
                if orientation(&pts[order[slots[si]]], &pj, &pk) == Orientation::Negative {
                    break;
                }
                let val = m[si * v + sj];
                if val < run_min {
                    run_min = val;
                    run_arg = si as u32;
                }
                ptr += 1;
            }
            let val = run_min + delta[sk];
            m[sj * v + sk] = val;
            back[sj * v + sk] = run_arg;
        }
        for sk in sj + 1..v {
            let val = m[sj * v + sk];
            if val < best_value {
                best_value = val;
                best_cell = Some((sj, sk));
                best_segment = None;
            }
        }
    }

    let to_pt = |sl: usize| order[slots[sl]];
    let best_chain = match (best_cell, best_segment) {
        (Some((mut j, k)), _) => {
            let mut chain = vec![to_pt(k), to_pt(j)];
            let mut next = k;
            loop {
                let i = back[j * v + next];
                if i == BASE {
                    break;
                }
                chain.push(to_pt(i as usize));
                next = j;
                j = i as usize;
            }
            chain.push(base);
            chain.reverse();
            chain
        }
        (None, Some(j)) => vec![base, to_pt(j)],
        (None, None) => vec![base],
    };

    Fan { base, order, slots, m_base, m, back, best_value, best_chain }
}

/// Inspectable DP state for one base, in sample indices and raw weight sums.
#[derive(Clone, Debug, PartialEq)]
pub struct FanState {
    pub base_index: usize,
    /// Fan points (one representative index per distinct location) in
    /// counterclockwise order.
    pub ordered_indices: Vec<usize>,
    /// Vertex candidates, in fan order.
    pub vertex_indices: Vec<usize>,
    /// `M(base, j)` per vertex candidate.
    pub m_base: Vec<f64>,
    /// `M(j, k)` for candidates `j < k`, row-major, infinite elsewhere.
    pub m_table: Vec<f64>,
    /// `I(j, k)`: position of the previous candidate, `None` for the base.
    pub backpointer: Vec<Option<usize>>,
}

impl FanState {
    pub fn m(&self, j: usize, k: usize) -> f64 {
        self.m_table[j * self.vertex_indices.len() + k]
    }

    pub fn back(&self, j: usize, k: usize) -> Option<usize> {
        self.backpointer[j * self.vertex_indices.len() + k]
    }
}

fn find_base(prep: &Prepared, base: usize, n: usize) -> Result<usize> {
    if base >= n {
        return Err(Error::invalid(format!("base index {base} out of range for {n} points")));
    }
    Ok(prep.members.iter().position(|g| g.contains(&base)).expect("every index has a group"))
}

fn fan_for_base(sample: &WeightedSample, base: usize) -> Result<(Prepared, Fan)> {
    let prep = prepare(sample);
    let ub = find_base(&prep, base, sample.len())?;
    let allowed = vec![true; prep.pts.len()];
    let cand: Vec<bool> = prep.w.iter().map(|w| *w < 0.0).collect();
    let fan = run_fan(&prep.pts, &prep.w, ub, &allowed, &cand);
    Ok((prep, fan))
}

/// DP tables for the fan at `base`. Vertex candidates are the negative-weight
/// points lexicographically after the base.
pub fn fan_state(sample: &WeightedSample, base: usize) -> Result<FanState> {
    let (prep, fan) = fan_for_base(sample, base)?;
    let rep = |u: usize| prep.members[u][0];
    Ok(FanState {
        base_index: rep(fan.base),
        ordered_indices: fan.order.iter().map(|&u| rep(u)).collect(),
        vertex_indices: fan.slots.iter().map(|&t| rep(fan.order[t])).collect(),
        m_base: fan.m_base.clone(),
        m_table: fan.m.clone(),
        backpointer: fan.back.iter().map(|&b| (b != BASE).then_some(b as usize)).collect(),
    })
}

fn included_by(sample: &WeightedSample, poly: &ConvexPolygon) -> Vec<usize> {
    (0..sample.len()).filter(|&i| poly.contains(&sample.points[i])).collect()
}

fn finish(
    sample: &WeightedSample,
    prep: &Prepared,
    chain: &[usize],
    raw: f64,
    stats: OptimizerStats,
    start: Instant,
) -> OptimizerResult {
    let polygon = ConvexPolygon::hull_of(&chain.iter().map(|&u| prep.pts[u]).collect::<Vec<_>>());
    OptimizerResult {
        included_indices: included_by(sample, &polygon),
        polygon,
        criterion: raw / sample.normalizer,
        base_vertex: chain.first().map(|&u| prep.members[u][0]),
        vertex_chain: chain.iter().map(|&u| prep.members[u][0]).collect(),
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        stats,
    }
}

/// 𝕄ₙ of the closed triangle `(base, i, j)` minus the closed segment
/// `[base, i]`, by direct point classification.
pub fn triangle_measure(sample: &WeightedSample, base: usize, i: usize, j: usize) -> Result<f64> {
    let n = sample.len();
    if base >= n || i >= n || j >= n {
        return Err(Error::invalid("triangle index out of range"));
    }
    if base == i || base == j || i == j {
        return Err(Error::invalid("triangle indices must be distinct"));
    }
    let (b, pi, pj) = (sample.points[base], sample.points[i], sample.points[j]);
    if orientation(&b, &pi, &pj) == Orientation::Negative {
        return Err(Error::ClockwiseTriangle { base, i, j });
    }
    let tri = ConvexPolygon::hull_of(&[b, pi, pj]);
    let seg = ConvexPolygon::hull_of(&[b, pi]);
    let sum: f64 = (0..n)
        .filter(|&q| tri.contains(&sample.points[q]) && !seg.contains(&sample.points[q]))
        .map(|q| sample.weights[q])
        .sum();
    Ok(sum / sample.normalizer)
}

/// Best polygon whose lexicographically smallest vertex is sample point `base`.
pub fn optimize_fan(sample: &WeightedSample, base: usize) -> Result<OptimizerResult> {
    let start = Instant::now();
    let (prep, fan) = fan_for_base(sample, base)?;
    let stats = OptimizerStats {
        points: sample.len(),
        unique_points: prep.pts.len(),
        kept_points: fan.order.len() + 1,
        candidate_vertices: fan.slots.len(),
        fans: 1,
        certificate: false,
    };
    Ok(finish(sample, &prep, &fan.best_chain, fan.best_value, stats, start))
}

/// Global minimizer of 𝕄ₙ over closed convex sets, with the empty set as a
/// candidate. Uses the hull-of-negatives certificate when it applies.
pub fn estimate_set(sample: &WeightedSample) -> OptimizerResult {
    estimate_impl(sample, true)
}

/// As [`estimate_set`] but always runs the fan DP.
pub fn estimate_set_dp(sample: &WeightedSample) -> OptimizerResult {
    estimate_impl(sample, false)
}

fn estimate_impl(sample: &WeightedSample, allow_certificate: bool) -> OptimizerResult {
    let start = Instant::now();
    let prep = prepare(sample);
    let mut stats = OptimizerStats {
        points: sample.len(),
        unique_points: prep.pts.len(),
        ..Default::default()
    };
    let cand: Vec<bool> = prep.w.iter().map(|w| *w < 0.0).collect();
    let negatives: Vec<Point> = (0..prep.pts.len()).filter(|&u| cand[u]).map(|u| prep.pts[u]).collect();
    stats.candidate_vertices = negatives.len();
    if negatives.is_empty() {
        return OptimizerResult::empty(stats, start);
    }
    // Some optimal polygon has only negative vertices, so nothing outside the
    // hull of the negative points can matter.
    let hull = ConvexPolygon::hull_of(&negatives);
    let allowed: Vec<bool> = prep.pts.iter().map(|p| hull.contains(p)).collect();
    stats.kept_points = allowed.iter().filter(|a| **a).count();

    let blocked = (0..prep.pts.len()).any(|u| allowed[u] && !cand[u]);
    if allow_certificate && !blocked {
        stats.certificate = true;
        let raw: f64 = prep.w.iter().filter(|w| **w < 0.0).sum();
        let chain: Vec<usize> = hull
            .vertices()
            .iter()
            .map(|v| prep.pts.binary_search_by(|p| p.lex_cmp(v)).expect("hull vertex is a data point"))
            .collect();
        let mut res = finish(sample, &prep, &chain, raw, stats, start);
        if !is_better(res.criterion, &res.included_indices, 0.0, &[]) {
            return OptimizerResult::empty(res.stats, start);
        }
        res.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
        return res;
    }

    let bases: Vec<usize> = (0..prep.pts.len()).filter(|&u| cand[u]).collect();
    stats.fans = bases.len();
    let fans: Vec<(f64, Vec<usize>)> = bases
        .par_iter()
        .map(|&u| {
            let fan = run_fan(&prep.pts, &prep.w, u, &allowed, &cand);
            (fan.best_value, fan.best_chain)
        })
        .collect();

    let mut best: Option<(f64, Vec<usize>, Vec<usize>, f64)> = None;
    for (raw, chain) in fans {
        let val = raw / sample.normalizer;
        if let Some((bv, _, _, _)) = &best {
            if val > *bv + TIE_TOL {
                continue;
            }
        }
        let poly = ConvexPolygon::hull_of(&chain.iter().map(|&u| prep.pts[u]).collect::<Vec<_>>());
        let inc = included_by(sample, &poly);
        let replace = match &best {
            None => true,
            Some((bv, binc, _, _)) => is_better(val, &inc, *bv, binc),
        };
        if replace {
            best = Some((val, inc, chain, raw));
        }
    }
    match best {
        Some((val, inc, chain, raw)) if is_better(val, &inc, 0.0, &[]) => {
            finish(sample, &prep, &chain, raw, stats, start)
        }
        _ => OptimizerResult::empty(stats, start),
    }
}

/// Exhaustive minimization over the hulls of all 2ⁿ subsets.
pub fn brute_force_oracle(sample: &WeightedSample, max_n: usize) -> Result<OptimizerResult> {
    let start = Instant::now();
    let n = sample.len();
    if n > max_n || n >= 63 {
        return Err(Error::OracleTooLarge { n, max_n });
    }
    let mut best_val = 0.0;
    let mut best_inc: Vec<usize> = Vec::new();
    let mut best_poly = ConvexPolygon::empty();
    let mut subset = Vec::with_capacity(n);
    for mask in 1u64..(1u64 << n) {
        subset.clear();
        subset.extend((0..n).filter(|i| mask >> i & 1 == 1).map(|i| sample.points[i]));
        let poly = ConvexPolygon::hull_of(&subset);
        let mut inc = Vec::new();
        let mut sum = 0.0;
        for i in 0..n {
            if poly.contains(&sample.points[i]) {
                inc.push(i);
                sum += sample.weights[i];
            }
        }
        let val = sum / sample.normalizer;
        if is_better(val, &inc, best_val, &best_inc) {
            best_val = val;
            best_inc = inc;
            best_poly = poly;
        }
    }
    let index_of = |v: &Point| (0..n).find(|&i| sample.points[i] == *v).expect("vertex is a data point");
    let chain: Vec<usize> = best_poly.vertices().iter().map(index_of).collect();
    Ok(OptimizerResult {
        base_vertex: chain.first().copied(),
        vertex_chain: chain,
        polygon: best_poly,
        included_indices: best_inc,
        criterion: best_val,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        stats: OptimizerStats { points: n, ..Default::default() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cmp::Ordering;
    use crate::criterion::criterion_value;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample(pts: &[(f64, f64)], w: &[f64]) -> WeightedSample {
        WeightedSample::new(pts.iter().map(|&p| p.into()).collect(), w.to_vec(), 0.75).unwrap()
    }

    fn random_sample(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> WeightedSample {
        let pts = (0..n).map(|_| Point::new(rng.random(), rng.random())).collect();
        let w = (0..n).map(|_| rng.random_range(lo..hi)).collect();
        WeightedSample::new(pts, w, 0.75).unwrap()
    }

    /// Lattice points, so collinear triples are exact.
    fn lattice_sample(rng: &mut ChaCha8Rng, n: usize, side: u32) -> WeightedSample {
        let pts = (0..n)
            .map(|_| {
                Point::new(
                    rng.random_range(0..side) as f64 / side as f64,
                    rng.random_range(0..side) as f64 / side as f64,
                )
            })
            .collect();
        let w = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        WeightedSample::new(pts, w, 0.75).unwrap()
    }

    #[test]
    fn triangle_measure_examples() {
        let s = sample(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (5.0, 5.0)], &[0.1, 0.2, 0.3, 0.4]);
        // Closed triangle minus [base, i]: only j itself.
        assert_abs_diff_eq!(triangle_measure(&s, 0, 1, 2).unwrap(), 0.3 / 4.0, epsilon = 1e-15);
        assert!(matches!(triangle_measure(&s, 0, 2, 1), Err(Error::ClockwiseTriangle { .. })));
        let col = sample(&[(0.0, 0.0), (0.25, 0.25), (0.5, 0.5), (1.0, 1.0), (0.75, 0.75)], &[1.0, 2.0, 4.0, 8.0, 16.0]);
        // Points on (i, j]: 0.5, 0.75 and 1.0.
        assert_abs_diff_eq!(triangle_measure(&col, 0, 1, 3).unwrap(), 28.0 / 5.0, epsilon = 1e-14);
        let empty = sample(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.9, 0.9)], &[0.1, 0.2, 0.3, 0.4]);
        assert_abs_diff_eq!(triangle_measure(&empty, 0, 1, 2).unwrap(), 0.3 / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn fan_examples() {
        let sq = sample(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)], &[-0.25; 4]);
        let r = optimize_fan(&sq, 0).unwrap();
        assert_abs_diff_eq!(r.criterion, -0.25, epsilon = 1e-15);
        assert_eq!(r.included_indices, vec![0, 1, 2, 3]);
        let pos = sample(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)], &[0.25; 4]);
        let r = optimize_fan(&pos, 0).unwrap();
        assert_eq!(r.polygon.len(), 1);
        assert_abs_diff_eq!(r.criterion, 0.0625, epsilon = 1e-15);
    }

    #[test]
    fn estimate_examples() {
        let pos = sample(&[(0.1, 0.2), (0.5, 0.5), (0.9, 0.1)], &[0.25; 3]);
        let r = estimate_set(&pos);
        assert!(r.polygon.is_empty());
        assert_eq!(r.criterion, 0.0);
        let one = sample(&[(0.3, 0.3)], &[-0.25]);
        assert_abs_diff_eq!(estimate_set(&one).criterion, -0.25, epsilon = 1e-15);
        let two = sample(&[(0.3, 0.3), (0.6, 0.6)], &[-0.25, 0.25]);
        let r = estimate_set(&two);
        assert_eq!(r.included_indices, vec![0]);
        assert_abs_diff_eq!(r.criterion, -0.125, epsilon = 1e-15);
    }

    #[test]
    fn oracle_small_examples() {
        let one = sample(&[(0.3, 0.3)], &[-0.25]);
        let r = brute_force_oracle(&one, 15).unwrap();
        assert_eq!(r.included_indices, vec![0]);
        assert_abs_diff_eq!(r.criterion, -0.25, epsilon = 1e-15);
        let two = sample(&[(0.3, 0.3), (0.6, 0.6)], &[-0.25, 0.25]);
        assert_eq!(brute_force_oracle(&two, 15).unwrap().included_indices, vec![0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let big = random_sample(&mut rng, 16, -1.0, 1.0);
        assert!(matches!(brute_force_oracle(&big, 15), Err(Error::OracleTooLarge { n: 16, max_n: 15 })));
    }

    #[test]
    fn dp_matches_oracle_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for trial in 0..150 {
            let n = 4 + trial % 9;
            let s = random_sample(&mut rng, n, -1.0, 1.0);
            let o = brute_force_oracle(&s, 15).unwrap();
            for r in [estimate_set(&s), estimate_set_dp(&s)] {
                assert!((r.criterion - o.criterion).abs() <= 1e-9, "trial {trial}: {} vs {}", r.criterion, o.criterion);
                assert!((criterion_value(&s, &r.polygon) - r.criterion).abs() <= 1e-12, "trial {trial}");
            }
        }
    }

    #[test]
    fn dp_matches_oracle_with_collinear_and_duplicate_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..200 {
            let n = 3 + trial % 10;
            let s = lattice_sample(&mut rng, n, 4);
            let o = brute_force_oracle(&s, 15).unwrap();
            let r = estimate_set_dp(&s);
            assert!((r.criterion - o.criterion).abs() <= 1e-9, "trial {trial}: {} vs {}", r.criterion, o.criterion);
            assert!((criterion_value(&s, &r.polygon) - r.criterion).abs() <= 1e-12, "trial {trial}");
        }
    }

    #[test]
    fn fan_matches_restricted_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..30 {
            let s = if trial % 2 == 0 { random_sample(&mut rng, 11, -1.0, 1.0) } else { lattice_sample(&mut rng, 11, 5) };
            let n = s.len();
            for base in 0..n {
                // Hulls of subsets whose lexicographic minimum is `base`'s location.
                let b = s.points[base];
                let mut want = f64::INFINITY;
                for mask in 0u32..(1 << n) {
                    let sub: Vec<Point> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| s.points[i]).collect();
                    if sub.is_empty() || !sub.iter().all(|p| p.lex_cmp(&b) != Ordering::Less) || !sub.contains(&b) {
                        continue;
                    }
                    want = want.min(criterion_value(&s, &ConvexPolygon::hull_of(&sub)));
                }
                let got = optimize_fan(&s, base).unwrap();
                assert!((got.criterion - want).abs() <= 1e-9, "trial {trial} base {base}: {} vs {want}", got.criterion);
            }
        }
    }

    #[test]
    fn recursion_and_backpointers_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = random_sample(&mut rng, 14, -0.75, 0.25);
        for base in 0..s.len() {
            let f = fan_state(&s, base).unwrap();
            let v = f.vertex_indices.len();
            for j in 0..v {
                for k in j + 1..v {
                    let (pj, pk) = (f.vertex_indices[j], f.vertex_indices[k]);
                    let tri = triangle_measure(&s, f.base_index, pj, pk).unwrap() * s.normalizer;
                    let prev = match f.back(j, k) {
                        None => f.m_base[j],
                        Some(i) => f.m(i, j),
                    };
                    assert!((f.m(j, k) - prev - tri).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn permutation_invariance_and_far_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let s = random_sample(&mut rng, 30, -0.75, 0.25);
            let r = estimate_set_dp(&s);
            let mut perm: Vec<usize> = (0..s.len()).collect();
            perm.reverse();
            perm.swap(3, 17);
            let p = WeightedSample::new(
                perm.iter().map(|&i| s.points[i]).collect(),
                perm.iter().map(|&i| s.weights[i]).collect(),
                0.75,
            )
            .unwrap();
            let rp = estimate_set_dp(&p);
            assert_eq!(r.criterion, rp.criterion);
            assert_eq!(r.polygon, rp.polygon);

            let mut pts = s.points.clone();
            pts.push(Point::new(5.0, 5.0));
            let mut w = s.weights.clone();
            w.push(0.25);
            let far = WeightedSample::with_normalizer(pts, w, 0.75, s.normalizer).unwrap();
            let rf = estimate_set_dp(&far);
            assert!(rf.criterion >= r.criterion - 1e-15);
            assert!(rf.criterion - r.criterion <= 0.25 / s.normalizer + 1e-15);
        }
    }

    #[test]
    fn certificate_agrees_with_dp() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut s = random_sample(&mut rng, 60, -0.75, 0.25);
            // Push positives outside a central disc so the certificate applies.
            for i in 0..s.len() {
                let d = s.points[i].sub(&Point::new(0.5, 0.5));
                s.weights[i] = if d.x * d.x + d.y * d.y < 0.09 { -0.25 } else { 0.25 };
            }
            let a = estimate_set(&s);
            let b = estimate_set_dp(&s);
            assert!((a.criterion - b.criterion).abs() <= 1e-12);
        }
    }
}
