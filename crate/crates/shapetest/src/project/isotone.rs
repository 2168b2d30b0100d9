//! Exact L1 projections onto monotone, unimodal and t-modal pmfs.
//!
//! The projection LP `min ||h - q||_1 s.t. q monotone, q >= 0, sum q = 1`
//! is solved through its Lagrangian dual: for a fixed multiplier `lambda` the
//! mass constraint decouples and the tilted objective
//! `sum_i |h_i - q_i| + lambda * sum_i q_i` is an isotonic quantile fit,
//! solved exactly by pool-adjacent-violators with per-block order statistics.
//! Bisection on `lambda` restores `sum q = 1`; the optimal primal point is a
//! convex combination of the two fits bracketing the crossing. Unimodal and
//! t-modal distances minimize over peak placements (each placement is its own
//! convex program, so the multiplier search runs per candidate placement).

use crate::error::{Error, Result};
use crate::hist::Histogram;

const LAMBDA_LO: f64 = -1.0 + 1e-12;
const LAMBDA_HI: f64 = 1.0 - 1e-12;
const BISECT_ITERS: usize = 80;
const GAP_TOL: f64 = 1e-7;

/// Result of an exact fit: optimal distance and a fitted pmf attaining it.
#[derive(Debug, Clone)]
pub struct IsoFit {
    pub distance: f64,
    pub fitted: Vec<f64>,
}

#[derive(Clone)]
struct Block {
    start: usize,
    len: usize,
    value: f64,
    cost: f64,
}

/// Minimizer of `sum_{i in block} |v_i - x| + lambda * len * x` over `x >= 0`,
/// together with the plain (untilted) cost at the minimizer.
fn block_opt(scratch: &mut Vec<f64>, values: &[f64], lambda: f64) -> (f64, f64) {
    let len = values.len();
    let q = (1.0 - lambda) / 2.0;
    let k = ((len as f64 * q).ceil() as usize).clamp(0, len);
    let x = if k == 0 {
        0.0
    } else {
        scratch.clear();
        scratch.extend_from_slice(values);
        let (_, v, _) = scratch.select_nth_unstable_by(k - 1, f64::total_cmp);
        *v
    };
    let cost: f64 = values.iter().map(|&h| (h - x).abs()).sum();
    (x, cost)
}

struct Pava<'a> {
    values: &'a [f64],
    non_decreasing: bool,
    lambda: f64,
    blocks: Vec<Block>,
    scratch: Vec<f64>,
    plain_cost: f64,
    mass: f64,
}

impl<'a> Pava<'a> {
    fn new(values: &'a [f64], non_decreasing: bool, lambda: f64) -> Self {
        Pava {
            values,
            non_decreasing,
            lambda,
            blocks: Vec::new(),
            scratch: Vec::new(),
            plain_cost: 0.0,
            mass: 0.0,
        }
    }

    fn violates(&self, prev: f64, next: f64) -> bool {
        if self.non_decreasing {
            next < prev - 1e-15
        } else {
            next > prev + 1e-15
        }
    }

    fn push(&mut self, i: usize) {
        let (value, cost) = block_opt(&mut self.scratch, &self.values[i..=i], self.lambda);
        self.plain_cost += cost;
        self.mass += value;
        self.blocks.push(Block { start: i, len: 1, value, cost });
        while self.blocks.len() >= 2 {
            let b = &self.blocks[self.blocks.len() - 1];
            let a = &self.blocks[self.blocks.len() - 2];
            if !self.violates(a.value, b.value) {
                break;
            }
            let b = self.blocks.pop().unwrap();
            let a = self.blocks.pop().unwrap();
            self.plain_cost -= a.cost + b.cost;
            self.mass -= a.value * a.len as f64 + b.value * b.len as f64;
            let start = a.start;
            let len = a.len + b.len;
            let (value, cost) =
                block_opt(&mut self.scratch, &self.values[start..start + len], self.lambda);
            self.plain_cost += cost;
            self.mass += value * len as f64;
            self.blocks.push(Block { start, len, value, cost });
        }
    }

    fn run(&mut self) {
        for i in 0..self.values.len() {
            self.push(i);
        }
    }

    fn materialize(&self, out: &mut [f64]) {
        for b in &self.blocks {
            for slot in &mut out[b.start..b.start + b.len] {
                *slot = b.value;
            }
        }
    }
}

/// Plain cost, mass and fitted values of the tilted isotonic fit on `values`.
fn tilted_fit(values: &[f64], non_decreasing: bool, lambda: f64) -> (f64, f64, Vec<f64>) {
    let mut p = Pava::new(values, non_decreasing, lambda);
    p.run();
    let mut out = vec![0.0; values.len()];
    p.materialize(&mut out);
    (p.plain_cost, p.mass, out)
}

/// A "shape" is a sequence of runs with fixed directions over fixed segments.
/// Evaluates the tilted optimum of a shape; segments are (start, end, non_decreasing).
fn shape_tilted(values: &[f64], segs: &[(usize, usize, bool)], lambda: f64) -> (f64, f64, Vec<f64>) {
    let mut cost = 0.0;
    let mut mass = 0.0;
    let mut fit = vec![0.0; values.len()];
    for &(a, b, dir) in segs {
        let (c, m, f) = tilted_fit(&values[a..b], dir, lambda);
        cost += c;
        mass += m;
        fit[a..b].copy_from_slice(&f);
    }
    (cost, mass, fit)
}

/// Exact projection within one shape: bisection on the multiplier then a
/// convex combination of the bracketing fits to meet `sum q = 1`.
fn shape_exact(values: &[f64], segs: &[(usize, usize, bool)]) -> IsoFit {
    let mut lo = LAMBDA_LO;
    let mut hi = LAMBDA_HI;
    let (_, m_lo, _) = shape_tilted(values, segs, lo);
    if m_lo < 1.0 {
        // even the maximal fit carries less than unit mass; can only happen
        // through degenerate rounding, fall back to scaling
        let (_, _, f) = shape_tilted(values, segs, lo);
        return repair_by_scaling(values, f);
    }
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        let (_, m, _) = shape_tilted(values, segs, mid);
        if m >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (c_lo, m_lo, f_lo) = shape_tilted(values, segs, lo);
    let (c_hi, m_hi, f_hi) = shape_tilted(values, segs, hi);
    if (m_lo - 1.0).abs() < 1e-12 {
        return IsoFit { distance: c_lo, fitted: f_lo };
    }
    if (m_hi - 1.0).abs() < 1e-12 {
        return IsoFit { distance: c_hi, fitted: f_hi };
    }
    debug_assert!(m_lo >= 1.0 && m_hi <= 1.0);
    let alpha = if (m_lo - m_hi).abs() < 1e-15 { 0.0 } else { (1.0 - m_hi) / (m_lo - m_hi) };
    let alpha = alpha.clamp(0.0, 1.0);
    let fitted: Vec<f64> = f_lo
        .iter()
        .zip(&f_hi)
        .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
        .collect();
    let distance: f64 = values.iter().zip(&fitted).map(|(h, q)| (h - q).abs()).sum();
    // convexity of the cost gives distance <= alpha c_lo + (1-alpha) c_hi
    debug_assert!(distance <= alpha * c_lo + (1.0 - alpha) * c_hi + 1e-9);
    let _ = (c_lo, c_hi);
    IsoFit { distance, fitted }
}

fn repair_by_scaling(values: &[f64], fit: Vec<f64>) -> IsoFit {
    let m: f64 = fit.iter().sum();
    let fitted: Vec<f64> = if m > 0.0 {
        fit.iter().map(|x| x / m).collect()
    } else {
        vec![1.0 / fit.len() as f64; fit.len()]
    };
    let distance = values.iter().zip(&fitted).map(|(h, q)| (h - q).abs()).sum();
    IsoFit { distance, fitted }
}

/// Exact L1 distance (and witness) from `h` to the monotone pmfs.
pub fn monotone_fit(h: &Histogram, non_decreasing: bool) -> IsoFit {
    let n = h.n();
    shape_exact(h.masses(), &[(0, n, non_decreasing)])
}

pub fn dist_to_monotone(h: &Histogram, non_decreasing: bool) -> f64 {
    monotone_fit(h, non_decreasing).distance
}

/// Exact L1 distance to the single-peaked (unimodal) pmfs: minimum over the
/// peak position of the per-peak convex program.
pub fn unimodal_fit(h: &Histogram) -> IsoFit {
    let n = h.n();
    let values = h.masses();
    if n == 1 {
        return IsoFit { distance: 0.0, fitted: vec![1.0] };
    }
    // Candidate generation: upper bounds for every peak via one shared
    // bisection on the combined dual, then exact refinement of the best few.
    let shapes: Vec<Vec<(usize, usize, bool)>> = (0..=n)
        .map(|m| {
            let mut segs = Vec::new();
            if m > 0 {
                segs.push((0, m, true));
            }
            if m < n {
                segs.push((m, n, false));
            }
            segs
        })
        .collect();
    min_over_shapes(values, &shapes)
}

pub fn dist_to_unimodal(h: &Histogram) -> f64 {
    unimodal_fit(h).distance
}

/// Minimizes the projection over a family of shapes, sharing the multiplier
/// search across shapes and refining candidates exactly.
fn min_over_shapes(values: &[f64], shapes: &[Vec<(usize, usize, bool)>]) -> IsoFit {
    assert!(!shapes.is_empty());
    if shapes.len() == 1 {
        return shape_exact(values, &shapes[0]);
    }
    // Shared bisection on F(lambda) = min over shapes of the tilted cost;
    // collect argmin shapes along the way as refinement candidates.
    let mut candidates: Vec<usize> = Vec::new();
    let mut lo = LAMBDA_LO;
    let mut hi = LAMBDA_HI;
    let mut eval = |lambda: f64, cands: &mut Vec<usize>| -> (f64, f64) {
        let mut best = f64::INFINITY;
        let mut best_mass = 0.0;
        let mut best_s = 0;
        for (s, segs) in shapes.iter().enumerate() {
            let (c, m, _) = shape_tilted(values, segs, lambda);
            let tilted = c + lambda * m;
            if tilted < best {
                best = tilted;
                best_mass = m;
                best_s = s;
            }
        }
        if !cands.contains(&best_s) {
            cands.push(best_s);
        }
        (best - lambda, best_mass) // dual value F(lambda) = min tilted - lambda*1
    };
    let mut dual_lb = f64::NEG_INFINITY;
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        let (dual, mass) = eval(mid, &mut candidates);
        dual_lb = dual_lb.max(dual);
        if mass >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // per-shape repaired upper bounds at the final bracket, to catch shapes
    // whose own crossing lies near the global one
    let mut per_shape_ub: Vec<(f64, usize)> = Vec::with_capacity(shapes.len());
    for (s, segs) in shapes.iter().enumerate() {
        let (c_lo, m_lo, _) = shape_tilted(values, segs, lo);
        let (c_hi, m_hi, _) = shape_tilted(values, segs, hi);
        let ub = if m_lo >= 1.0 && m_hi <= 1.0 && (m_lo - m_hi).abs() > 1e-15 {
            let a = ((1.0 - m_hi) / (m_lo - m_hi)).clamp(0.0, 1.0);
            a * c_lo + (1.0 - a) * c_hi
        } else if (m_lo - 1.0).abs() < 1e-9 {
            c_lo
        } else if (m_hi - 1.0).abs() < 1e-9 {
            c_hi
        } else {
            f64::INFINITY
        };
        per_shape_ub.push((ub, s));
    }
    per_shape_ub.sort_by(|a, b| a.0.total_cmp(&b.0));
    for &(_, s) in per_shape_ub.iter().take(4) {
        if !candidates.contains(&s) {
            candidates.push(s);
        }
    }
    let mut best: Option<IsoFit> = None;
    for &s in &candidates {
        let fit = shape_exact(values, &shapes[s]);
        if best.as_ref().map_or(true, |b| fit.distance < b.distance) {
            best = Some(fit);
        }
    }
    let mut best = best.unwrap();
    if best.distance - dual_lb > GAP_TOL.max(1e-6 * best.distance) {
        // candidates missed the optimal shape; fall back to exact
        // per-shape solves (slow path, exactness first)
        for segs in shapes {
            let fit = shape_exact(values, segs);
            if fit.distance < best.distance {
                best = fit;
            }
        }
    }
    best
}

/// Exact L1 distance to the pmfs with at most `t` direction alternations
/// (valleys count, matching the definitional membership check).
pub fn dist_to_tmodal(h: &Histogram, t: usize) -> Result<f64> {
    Ok(tmodal_fit(h, t)?.distance)
}

pub fn tmodal_fit(h: &Histogram, t: usize) -> Result<IsoFit> {
    let n = h.n();
    if n == 1 {
        return Ok(IsoFit { distance: 0.0, fitted: vec![1.0] });
    }
    // A pmf with at most t alternations is a concatenation of at most t+1
    // monotone runs with alternating directions (junction jumps never add
    // alternations beyond the run structure). Enumerate boundary placements.
    let mut count = 0f64;
    let mut choose = 1f64;
    for k in 1..=(t + 1).min(n) {
        count += 2.0 * choose;
        choose = choose * (n - k) as f64 / k as f64;
    }
    if count > 200_000.0 {
        return Err(Error::BudgetExceeded(format!(
            "t-modal projection would enumerate ~{count:.0} run placements at n={n}, t={t}"
        )));
    }
    let mut shapes: Vec<Vec<(usize, usize, bool)>> = Vec::new();
    for k in 1..=(t + 1).min(n) {
        let mut combo = vec![0usize; k - 1];
        enumerate_boundaries(n, k - 1, 0, &mut combo, &mut |bounds: &[usize]| {
            for &start_dir in &[true, false] {
                let mut segs = Vec::with_capacity(k);
                let mut prev = 0usize;
                let mut dir = start_dir;
                for &b in bounds {
                    segs.push((prev, b, dir));
                    prev = b;
                    dir = !dir;
                }
                segs.push((prev, n, dir));
                shapes.push(segs);
            }
        });
    }
    Ok(min_over_shapes(h.masses(), &shapes))
}

fn enumerate_boundaries(
    n: usize,
    need: usize,
    depth: usize,
    combo: &mut Vec<usize>,
    f: &mut impl FnMut(&[usize]),
) {
    if depth == need {
        f(combo);
        return;
    }
    let start = if depth == 0 { 1 } else { combo[depth - 1] + 1 };
    for b in start..n {
        combo[depth] = b;
        enumerate_boundaries(n, need, depth + 1, combo, f);
    }
}
