//! Degree-d polynomial pdf projection in the Chebyshev basis, plus the
//! breakpoint DP for piecewise-polynomial distances.
//!
//! A candidate cdf is `F(x) = sum c_i T_i(x)` on `[-1, 1)`; the LP searches
//! the coefficients under interval-mass closeness constraints with slack
//! variables bounding the optimal distance from below, and the returned pdf
//! mixes in a little uniform mass to absorb the (grid-bounded) negative part.

use crate::error::{Error, Result};
use crate::hist::Histogram;
use crate::lp::{LinearProgram, LpStatus, Rel};

/// Chebyshev T_i(x) for i = 0..=deg, written into `out`.
fn cheby_t(x: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for i in 2..out.len() {
        out[i] = 2.0 * x * out[i - 1] - out[i - 2];
    }
}

/// Derivative values T_i'(x) = i * U_{i-1}(x).
fn cheby_t_prime(x: f64, out: &mut [f64]) {
    let k = out.len();
    let mut u = vec![0.0; k.max(2)];
    u[0] = 1.0;
    if k > 1 {
        u[1] = 2.0 * x;
    }
    for i in 2..k {
        u[i] = 2.0 * x * u[i - 1] - u[i - 2];
    }
    out[0] = 0.0;
    for i in 1..k {
        out[i] = i as f64 * u[i - 1];
    }
}

/// Projection output: cdf coefficients and mixing weight defining
/// `q(x) = mix * total/2 + (1 - mix) * F'(x)`, plus the LP's lower bound tau.
#[derive(Debug, Clone)]
pub struct PolyFit {
    pub coeffs: Vec<f64>,
    pub mix: f64,
    pub total: f64,
    pub tau: f64,
}

impl PolyFit {
    /// Integral of the fitted pdf over `[a, b] ⊆ [-1, 1)`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        let k = self.coeffs.len();
        let mut ta = vec![0.0; k];
        let mut tb = vec![0.0; k];
        cheby_t(a, &mut ta);
        cheby_t(b, &mut tb);
        let f_a: f64 = self.coeffs.iter().zip(&ta).map(|(c, t)| c * t).sum();
        let f_b: f64 = self.coeffs.iter().zip(&tb).map(|(c, t)| c * t).sum();
        self.mix * self.total * (b - a) / 2.0 + (1.0 - self.mix) * (f_b - f_a)
    }
}

/// Projects the sub-histogram `cells` (masses of equal-width cells tiling
/// `[-1, 1)`) onto degree-`d` pdfs. `eps` controls grid resolutions and the
/// uniform mixing weight.
pub fn project_single_poly(cells: &[f64], d: usize, eps: f64) -> Result<PolyFit> {
    let w = cells.len();
    let total: f64 = cells.iter().sum();
    if total <= 1e-14 || w == 0 {
        return Ok(PolyFit { coeffs: vec![0.0; d + 2], mix: 0.0, total: 0.0, tau: 0.0 });
    }
    // uniform partition into pieces of mass <= eta (heavy cells isolated)
    let eta = (eps * total / (d + 1) as f64).max(1e-12);
    let mut edges = vec![0usize]; // piece boundaries in cell units
    let mut acc = 0.0;
    for (i, &m) in cells.iter().enumerate() {
        if acc > 0.0 && acc + m > eta {
            edges.push(i);
            acc = 0.0;
        }
        acc += m;
        if m > eta && *edges.last().unwrap() != i {
            // isolate the heavy cell
            edges.push(i);
            acc = m;
        }
    }
    edges.push(w);
    edges.dedup();
    let z = edges.len() - 1;
    let xs: Vec<f64> = edges.iter().map(|&e| -1.0 + 2.0 * e as f64 / w as f64).collect();
    let piece_mass: Vec<f64> =
        (0..z).map(|j| cells[edges[j]..edges[j + 1]].iter().sum()).collect();

    let k = d + 2; // number of cdf coefficients
    // variables: c_0..c_{d+1} | w_0..w_{z-1} | y_0..y_{z-1} | tau
    let nv = k + 2 * z + 1;
    let mut lp = LinearProgram::new(nv);
    let mut cost = vec![0.0; nv];
    cost[nv - 1] = 1.0;
    lp.minimize(cost);
    for i in 0..k {
        lp.bounds(i, -(2.0f64.sqrt()), 2.0f64.sqrt());
    }
    for j in 0..z {
        lp.free(k + j);
        lp.bounds(k + z + j, 0.0, f64::INFINITY);
    }
    lp.bounds(nv - 1, 0.0, f64::INFINITY);

    let mut t_at = |x: f64| -> Vec<f64> {
        let mut t = vec![0.0; k];
        cheby_t(x, &mut t);
        t
    };
    // (a) F(-1) = 0, F(1) = total
    let tm1 = t_at(-1.0);
    let coeffs_m1: Vec<(usize, f64)> = tm1.iter().cloned().enumerate().collect();
    lp.eq(&coeffs_m1, 0.0);
    let tp1 = t_at(1.0);
    let coeffs_p1: Vec<(usize, f64)> = tp1.iter().cloned().enumerate().collect();
    lp.eq(&coeffs_p1, total);
    // (c) sum w = 0; |w| <= y; sum y <= tau
    let wsum: Vec<(usize, f64)> = (0..z).map(|j| (k + j, 1.0)).collect();
    lp.eq(&wsum, 0.0);
    for j in 0..z {
        lp.ge(&[(k + z + j, 1.0), (k + j, 1.0)], 0.0);
        lp.ge(&[(k + z + j, 1.0), (k + j, -1.0)], 0.0);
    }
    let mut ysum: Vec<(usize, f64)> = (0..z).map(|j| (k + z + j, 1.0)).collect();
    ysum.push((nv - 1, -1.0));
    lp.le(&ysum, 0.0);

    // precompute T at piece edges
    let t_edges: Vec<Vec<f64>> = xs.iter().map(|&x| t_at(x)).collect();
    let add_pair = |lp: &mut LinearProgram, j: usize, kk: usize, pm: &[f64]| {
        let mass: f64 = pm[j..kk].iter().sum();
        let bound = (eps * (kk - j) as f64).sqrt() * eta;
        let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(k + (kk - j));
        for i in 0..k {
            coeffs.push((i, -(t_edges[kk][i] - t_edges[j][i])));
        }
        for l in j..kk {
            coeffs.push((k + l, 1.0));
        }
        lp.constrain(&coeffs, Rel::Le, bound - mass);
        lp.constrain(&coeffs, Rel::Ge, -bound - mass);
    };
    // start with adjacent pairs and the full span; other pairs join lazily
    for j in 0..z {
        add_pair(&mut lp, j, j + 1, &piece_mass);
    }
    if z > 1 {
        add_pair(&mut lp, 0, z, &piece_mass);
    }

    // lazy grids for 0 <= F <= 1 and f >= -slack
    let jn = ((d + 2).pow(4) * 100).min(5000);
    let kn = (((d + 1) * (d + 1)) as f64 / eps).ceil().min(5000.0) as usize;
    let jgrid: Vec<f64> = (0..jn).map(|i| -1.0 + 2.0 * i as f64 / jn as f64).collect();
    let kgrid: Vec<f64> = (0..kn.max(2)).map(|i| -1.0 + 2.0 * i as f64 / kn.max(2) as f64).collect();
    let kprimes: Vec<Vec<f64>> = kgrid
        .iter()
        .map(|&x| {
            let mut tp = vec![0.0; k];
            cheby_t_prime(x, &mut tp);
            tp
        })
        .collect();

    let mut active_b: Vec<(usize, usize)> = Vec::new();
    let mut active_e: Vec<usize> = Vec::new();
    let mut active_f: Vec<usize> = Vec::new();
    let mut last = None;
    for _round in 0..60 {
        let r = lp.solve()?;
        if r.status != LpStatus::Optimal {
            return Err(Error::LpFailure(format!(
                "polynomial projection LP reported {:?}",
                r.status
            )));
        }
        let c = &r.x[..k];
        let mut violations = 0usize;
        // (b) all pairs
        let mut worst_pairs: Vec<(f64, usize, usize)> = Vec::new();
        for j in 0..z {
            for kk in (j + 1)..=z {
                if active_b.contains(&(j, kk)) || kk == j + 1 || (j == 0 && kk == z) {
                    continue;
                }
                let mass: f64 = piece_mass[j..kk].iter().sum();
                let wsum: f64 = r.x[k + j..k + kk].iter().sum();
                let ff: f64 =
                    (0..k).map(|i| c[i] * (t_edges[kk][i] - t_edges[j][i])).sum();
                let bound = (eps * (kk - j) as f64).sqrt() * eta;
                let viol = (mass + wsum - ff).abs() - bound;
                if viol > 1e-8 {
                    worst_pairs.push((viol, j, kk));
                }
            }
        }
        worst_pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        for &(_, j, kk) in worst_pairs.iter().take(12) {
            add_pair(&mut lp, j, kk, &piece_mass);
            active_b.push((j, kk));
            violations += 1;
        }
        // (e) 0 <= F <= 1 (scaled by total mass so subdistributions behave)
        let mut worst_e: Vec<(f64, usize)> = Vec::new();
        for (gi, x) in jgrid.iter().enumerate() {
            if active_e.contains(&gi) {
                continue;
            }
            let t = t_at(*x);
            let fx: f64 = (0..k).map(|i| c[i] * t[i]).sum();
            let viol = (-fx).max(fx - 1.0);
            if viol > 1e-8 {
                worst_e.push((viol, gi));
            }
        }
        worst_e.sort_by(|a, b| b.0.total_cmp(&a.0));
        for &(_, gi) in worst_e.iter().take(12) {
            let t = t_at(jgrid[gi]);
            let coeffs: Vec<(usize, f64)> = t.iter().cloned().enumerate().collect();
            lp.ge(&coeffs, 0.0);
            lp.le(&coeffs, 1.0);
            active_e.push(gi);
            violations += 1;
        }
        // (f) f >= 0 on the pdf grid
        let mut worst_f: Vec<(f64, usize)> = Vec::new();
        for (gi, tp) in kprimes.iter().enumerate() {
            if active_f.contains(&gi) {
                continue;
            }
            let fx: f64 = (0..k).map(|i| c[i] * tp[i]).sum();
            if -fx > 1e-8 {
                worst_f.push((-fx, gi));
            }
        }
        worst_f.sort_by(|a, b| b.0.total_cmp(&a.0));
        for &(_, gi) in worst_f.iter().take(12) {
            let coeffs: Vec<(usize, f64)> = kprimes[gi].iter().cloned().enumerate().collect();
            lp.ge(&coeffs, 0.0);
            active_f.push(gi);
            violations += 1;
        }
        if violations == 0 {
            last = Some(r);
            break;
        }
        last = Some(r);
    }
    let r = last.ok_or_else(|| Error::LpFailure("projection LP did not settle".into()))?;
    Ok(PolyFit { coeffs: r.x[..k].to_vec(), mix: eps.min(0.5), total, tau: r.objective })
}

/// Cell masses of the fitted pdf; slightly negative cells trigger extra
/// uniform mixing so the induced discrete pmf is a valid class member.
pub fn fitted_cell_masses(fit: &PolyFit, w: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(w);
    for i in 0..w {
        let a = -1.0 + 2.0 * i as f64 / w as f64;
        let b = -1.0 + 2.0 * (i + 1) as f64 / w as f64;
        out.push(fit.mass_between(a, b));
    }
    let min = out.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < 0.0 && fit.total > 0.0 {
        // blend toward uniform just enough to clear the dip
        let per = fit.total / w as f64;
        let lam = (-min / (per - min)).min(1.0);
        for v in &mut out {
            *v = (1.0 - lam) * *v + lam * per;
        }
    }
    out
}

/// `opt <= delta <= 3 opt + eps` distance to `t`-piecewise degree-`d` pmfs via
/// a breakpoint DP with per-segment polynomial projections.
pub fn dist_to_piecewise_poly(h: &Histogram, t: usize, d: usize, eps: f64) -> Result<f64> {
    Ok(piecewise_poly_fit(h, t, d, eps)?.0)
}

pub fn piecewise_poly_fit(h: &Histogram, t: usize, d: usize, eps: f64) -> Result<(f64, Histogram)> {
    let t = t.max(1);
    let n = h.n();
    if n > 2048 {
        return Err(Error::BudgetExceeded(format!(
            "piecewise polynomial projection guarded at n <= 2048 (got {n})"
        )));
    }
    let eta_bp = eps / (4.0 * (t * (d + 1)) as f64);
    let g = crate::project::histpieces::granular_decomposition(h, eta_bp.clamp(1e-9, 1.0));
    let mut ends: Vec<usize> = vec![0];
    ends.extend(g.partition.intervals().iter().map(|iv| iv.hi));
    let s = ends.len() - 1;
    let eps_seg = eps / (4.0 * t as f64);

    // segment cost cache: cost[(p, e)] and the fitted cell masses
    let mut seg_cost = vec![vec![f64::INFINITY; s + 1]; s + 1];
    let mut seg_fit: Vec<Vec<Option<Vec<f64>>>> = vec![vec![None; s + 1]; s + 1];
    for p in 0..s {
        for e in (p + 1)..=s {
            let (lo, hi) = (ends[p] + 1, ends[e]);
            let cells: Vec<f64> = (lo..=hi).map(|i| h.mass(i)).collect();
            let fit = project_single_poly(&cells, d, eps_seg)?;
            let q = fitted_cell_masses(&fit, cells.len());
            let cost: f64 = cells.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum();
            seg_cost[p][e] = cost;
            seg_fit[p][e] = Some(q);
        }
    }
    let inf = f64::INFINITY;
    let mut dp = vec![vec![inf; s + 1]; t + 1];
    let mut back = vec![vec![0usize; s + 1]; t + 1];
    dp[0][0] = 0.0;
    for j in 1..=t {
        for e in 0..=s {
            for p in 0..e {
                if dp[j - 1][p] < inf {
                    let cst = dp[j - 1][p] + seg_cost[p][e];
                    if cst < dp[j][e] {
                        dp[j][e] = cst;
                        back[j][e] = p;
                    }
                }
            }
            // allowing fewer pieces than t
            if dp[j - 1][e] < dp[j][e] {
                dp[j][e] = dp[j - 1][e];
                back[j][e] = usize::MAX; // marker: piece skipped
            }
        }
    }
    let delta = dp[t][s];
    // reconstruct
    let mut fitted = vec![0.0; n];
    let mut e = s;
    let mut j = t;
    while j > 0 && e > 0 {
        if back[j][e] == usize::MAX {
            j -= 1;
            continue;
        }
        let p = back[j][e];
        let q = seg_fit[p][e].as_ref().unwrap();
        fitted[ends[p]..ends[e]].copy_from_slice(q);
        e = p;
        j -= 1;
    }
    let total: f64 = fitted.iter().sum();
    if total <= 0.0 {
        return Err(Error::LpFailure("empty piecewise fit".into()));
    }
    Ok((delta, Histogram::new(fitted.iter().map(|x| x / total).collect())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_piece_fits_exactly_degree_zero() {
        let cells = vec![0.125; 8];
        let fit = project_single_poly(&cells, 0, 0.1).unwrap();
        assert!(fit.tau <= 1e-6, "tau {}", fit.tau);
        let q = fitted_cell_masses(&fit, 8);
        let err: f64 = cells.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum();
        assert!(err <= 0.05, "residual {err}");
    }

    #[test]
    fn linear_ramp_fits_degree_one() {
        let raw: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let tot: f64 = raw.iter().sum();
        let cells: Vec<f64> = raw.iter().map(|x| x / tot).collect();
        let fit = project_single_poly(&cells, 1, 0.05).unwrap();
        let q = fitted_cell_masses(&fit, 10);
        let err: f64 = cells.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum();
        assert!(err <= 0.08, "residual {err}");
    }

    #[test]
    fn step_function_degree_zero_sandwich() {
        // p = step; opt over 1-piece degree-0 from the tiny-domain oracle
        let h = Histogram::new(vec![0.2, 0.2, 0.2, 0.05, 0.05, 0.1, 0.1, 0.1]).unwrap();
        let opt = crate::project::brute_force_distance(
            &h,
            crate::classes::ClassTag::HistogramT(1),
            0.02,
        )
        .unwrap();
        let fit = project_single_poly(h.masses(), 0, 0.05).unwrap();
        let q = fitted_cell_masses(&fit, 8);
        let err: f64 = h.masses().iter().zip(&q).map(|(a, b)| (a - b).abs()).sum();
        assert!(
            err <= 3.0 * (opt + 8.0 * 0.02) + 0.15,
            "err {err} vs opt {opt}"
        );
    }

    #[test]
    fn exact_piecewise_scores_small() {
        // exact 2-piece degree-1 pmf
        let mut raw = vec![0.0; 12];
        for (i, slot) in raw.iter_mut().enumerate().take(6) {
            *slot = 1.0 + i as f64;
        }
        for (i, slot) in raw.iter_mut().enumerate().skip(6) {
            *slot = 10.0 - (i as f64 - 6.0);
        }
        let tot: f64 = raw.iter().sum();
        let h = Histogram::new(raw.iter().map(|x| x / tot).collect()).unwrap();
        let eps = 0.1;
        let delta = dist_to_piecewise_poly(&h, 2, 1, eps).unwrap();
        assert!(delta <= eps + 0.05, "delta {delta}");
    }

    #[test]
    fn histogram_consistency_t1_d0() {
        let h = Histogram::new(vec![0.3, 0.1, 0.1, 0.1, 0.1, 0.3]).unwrap();
        let eps = 0.1;
        let d_hist = crate::project::histpieces::dist_to_histogram_t(&h, 1, eps);
        let d_poly = dist_to_piecewise_poly(&h, 1, 0, eps).unwrap();
        assert!((d_hist - d_poly).abs() <= eps + 0.05, "hist {d_hist} poly {d_poly}");
    }
}
