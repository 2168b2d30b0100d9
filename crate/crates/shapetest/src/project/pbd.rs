//! Poisson Binomial machinery: exact pmf convolution, a budgeted parameter
//! cover (shifted binomials plus sparse forms at small n), and the
//! cover-relative conditioned distances used when testing PBDs / Binomials.

use crate::error::{Error, Result};
use crate::hist::{Histogram, Interval};

/// Declared additive slack of the desk-scale cover resolution.
pub const COVER_SLACK: f64 = 0.03;

/// Resolution floor: grids never go finer than this L1 scale.
const GAMMA_FLOOR: f64 = 0.02;

/// Exact pmf of `sum Bernoulli(p_i)` over `{0..n}` (domain size n+1) by
/// convolution DP; masses sum to 1 up to 1e-12.
pub fn pbd_pmf(params: &[f64]) -> Histogram {
    let mut p = vec![1.0f64];
    for &q in params {
        assert!((0.0..=1.0).contains(&q), "parameter {q} outside [0,1]");
        let mut next = vec![0.0; p.len() + 1];
        for (k, &v) in p.iter().enumerate() {
            next[k] += v * (1.0 - q);
            next[k + 1] += v * q;
        }
        p = next;
    }
    Histogram::new(p).unwrap()
}

/// One cover element, described by its parameters.
#[derive(Debug, Clone)]
pub enum CoverElement {
    /// `shift` deterministic ones plus `Binomial(m, q)`; `m = 0` is a point mass.
    Shifted { shift: usize, m: usize, q: f64 },
    /// At most three distinct parameter values with multiplicities.
    Sparse { params: Vec<(f64, usize)> },
}

impl CoverElement {
    pub fn mean(&self) -> f64 {
        match self {
            CoverElement::Shifted { shift, m, q } => *shift as f64 + *m as f64 * q,
            CoverElement::Sparse { params } => {
                params.iter().map(|&(v, c)| v * c as f64).sum()
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            CoverElement::Shifted { m, q, .. } => *m as f64 * q * (1.0 - q),
            CoverElement::Sparse { params } => {
                params.iter().map(|&(v, c)| v * (1.0 - v) * c as f64).sum()
            }
        }
    }

    /// Total number of Bernoulli summands used.
    pub fn size(&self) -> usize {
        match self {
            CoverElement::Shifted { shift, m, .. } => shift + m,
            CoverElement::Sparse { params } => params.iter().map(|&(_, c)| c).sum(),
        }
    }

    /// Full pmf over `{0..n}` (domain size n+1).
    pub fn pmf(&self, n: usize) -> Histogram {
        match self {
            CoverElement::Shifted { shift, m, q } => {
                let mut masses = vec![0.0f64; n + 1];
                let lt = LogTables::new(*m);
                for k in 0..=*m {
                    let v = shift + k;
                    if v <= n {
                        masses[v] = lt.binom_pmf(*m, k, *q);
                    }
                }
                Histogram::new(masses).unwrap()
            }
            CoverElement::Sparse { params } => {
                let mut expanded = Vec::new();
                for &(v, c) in params {
                    expanded.extend(std::iter::repeat(v).take(c));
                }
                pbd_pmf(&expanded).zero_padded(n + 1)
            }
        }
    }
}

struct LogTables {
    lnfact: Vec<f64>,
}

impl LogTables {
    fn new(n: usize) -> Self {
        let mut lnfact = vec![0.0; n + 1];
        for i in 1..=n {
            lnfact[i] = lnfact[i - 1] + (i as f64).ln();
        }
        LogTables { lnfact }
    }

    fn binom_pmf(&self, m: usize, k: usize, q: f64) -> f64 {
        if q <= 0.0 {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        if q >= 1.0 {
            return if k == m { 1.0 } else { 0.0 };
        }
        let ln = self.lnfact[m] - self.lnfact[k] - self.lnfact[m - k]
            + k as f64 * q.ln()
            + (m - k) as f64 * (1.0 - q).ln();
        ln.exp()
    }
}

/// The cover: elements plus the Bernoulli count they target.
#[derive(Debug, Clone)]
pub struct PbdCover {
    pub n: usize,
    pub elements: Vec<CoverElement>,
}

/// Builds a gamma-cover proxy of `PBD_n` restricted to distributions whose
/// core lands near the 1-based histogram interval `hint` (over n+1 points).
///
/// Small n (<= 64): dense shifted-binomial grids anchored at q = 1/2 plus,
/// for n <= 30, sparse elements with at most 3 distinct parameter values.
/// Large n: moment-stratified shifted binomials at a budgeted resolution.
pub fn pbd_cover(n: usize, gamma: f64, hint: Interval) -> PbdCover {
    let gamma = gamma.max(GAMMA_FLOOR);
    let mut elements = Vec::new();
    let (a, b) = (hint.lo as f64 - 1.0, hint.hi as f64 - 1.0); // value space
    if n <= 64 {
        // point masses
        for s in 0..=n {
            elements.push(CoverElement::Shifted { shift: s, m: 0, q: 0.0 });
        }
        // shifted binomials, q-grid anchored at 1/2
        let step = (gamma / 8.0).max(0.005);
        for m in 1..=n {
            let mut qs = vec![0.5];
            let mut k = 1;
            loop {
                let d = k as f64 * step;
                if 0.5 + d >= 1.0 {
                    break;
                }
                qs.push(0.5 + d);
                qs.push(0.5 - d);
                k += 1;
            }
            for s in 0..=(n - m) {
                for &q in &qs {
                    let mean = s as f64 + m as f64 * q;
                    let sd = (m as f64 * q * (1.0 - q)).sqrt();
                    if mean + 3.0 * sd + 1.0 < a || mean - 3.0 * sd - 1.0 > b {
                        continue;
                    }
                    elements.push(CoverElement::Shifted { shift: s, m, q });
                }
            }
        }
        if n <= 30 {
            sparse_elements(n, gamma, a, b, &mut elements);
        }
    } else {
        moment_family(n, gamma.max(0.15), a, b, None, &mut elements);
    }
    PbdCover { n, elements }
}

fn sparse_elements(n: usize, gamma: f64, a: f64, b: f64, out: &mut Vec<CoverElement>) {
    let vstep = (gamma / 4.0).max(0.05);
    let mut values = vec![];
    let mut v = vstep;
    while v < 1.0 - 1e-9 {
        values.push(v);
        v += vstep;
    }
    let nv = values.len();
    // one value
    for i in 0..nv {
        for c in 1..=n {
            push_sparse(vec![(values[i], c)], a, b, out);
        }
    }
    // two values
    for i in 0..nv {
        for j in i + 1..nv {
            for c1 in 1..n {
                for c2 in 1..=(n - c1) {
                    push_sparse(vec![(values[i], c1), (values[j], c2)], a, b, out);
                }
            }
        }
    }
    // three values, coarser count grid to bound the blowup
    for i in 0..nv {
        for j in i + 1..nv {
            for k in j + 1..nv {
                for c1 in (1..n).step_by(2) {
                    for c2 in (1..n - c1).step_by(2) {
                        for c3 in (1..=(n - c1 - c2)).step_by(2) {
                            push_sparse(
                                vec![(values[i], c1), (values[j], c2), (values[k], c3)],
                                a,
                                b,
                                out,
                            );
                        }
                    }
                }
            }
        }
    }
}

fn push_sparse(params: Vec<(f64, usize)>, a: f64, b: f64, out: &mut Vec<CoverElement>) {
    let e = CoverElement::Sparse { params };
    let mean = e.mean();
    let sd = e.variance().sqrt();
    if mean + 3.0 * sd + 1.0 >= a && mean - 3.0 * sd - 1.0 <= b {
        out.push(e);
    }
}

/// Moment-stratified shifted binomials: variance levels geometric, means
/// walked at `resolution * sigma` steps, three skew levels per stratum.
fn moment_family(
    n: usize,
    resolution: f64,
    a: f64,
    b: f64,
    focus: Option<(f64, f64, f64)>, // (mean, variance, zoom-halfwidth in coarse steps)
    out: &mut Vec<CoverElement>,
) {
    let (lo_var, hi_var) = match focus {
        Some((_, v, _)) => (v / 3.0, v * 3.0),
        None => (0.2, n as f64 / 4.0),
    };
    let mut var = lo_var.max(0.05);
    while var <= hi_var {
        let sd = var.sqrt();
        let (mlo, mhi) = match focus {
            Some((mu, _, half)) => (mu - half * sd, mu + half * sd),
            None => (a - 3.0 * sd, b + 3.0 * sd),
        };
        // skew strata: compact (q=1/2) through spread-out (small q)
        for factor in [1.0f64, 4.0, 16.0] {
            let m = ((4.0 * var * factor).ceil() as usize).clamp(1, n);
            let mf = m as f64;
            if mf / 4.0 < var * 0.999 && factor == 1.0 {
                // m too small to carry the variance at q=1/2; clamped case
            }
            let disc = (1.0 - 4.0 * var / mf).max(0.0).sqrt();
            let q = (1.0 - disc) / 2.0; // smaller root, q <= 1/2
            if !(q > 0.0 && q < 1.0) {
                continue;
            }
            let mstep = (resolution * sd / 2.0).max(1e-3);
            let mut mean = mlo.max(0.0);
            while mean <= mhi.min(n as f64) {
                // integer shift; absorb the fraction into q
                let s = (mean - mf * q).round().max(0.0) as usize;
                if s + m <= n {
                    let qq = ((mean - s as f64) / mf).clamp(1e-9, 1.0 - 1e-9);
                    out.push(CoverElement::Shifted { shift: s, m, q: qq });
                }
                mean += mstep;
            }
        }
        var *= 1.0 + 2.0 * resolution;
    }
}

/// Window evaluation: `||d_I - Q_I||_1` and `Q(I)` without materializing the
/// full pmf of `Q`.
fn window_distance(
    d_cond: &[f64],
    iv: Interval,
    q: &CoverElement,
    lt: &LogTables,
    n: usize,
) -> (f64, f64) {
    let (vlo, vhi) = (iv.lo - 1, iv.hi - 1); // value space
    match q {
        CoverElement::Shifted { shift, m, q } => {
            let mut mass = 0.0;
            let mut qwin = vec![0.0f64; vhi - vlo + 1];
            for (slot, v) in qwin.iter_mut().zip(vlo..=vhi) {
                if v >= *shift && v - shift <= *m {
                    let p = lt.binom_pmf(*m, v - shift, *q);
                    *slot = p;
                    mass += p;
                }
            }
            if mass <= 1e-12 {
                return (f64::INFINITY, 0.0);
            }
            let dist = d_cond
                .iter()
                .zip(&qwin)
                .map(|(x, y)| (x - y / mass).abs())
                .sum();
            (dist, mass)
        }
        CoverElement::Sparse { .. } => {
            let pmf = q.pmf(n);
            let iv_c = Interval::new(iv.lo.min(pmf.n()), iv.hi.min(pmf.n()));
            let mass = pmf.interval_mass(iv_c);
            if mass <= 1e-12 {
                return (f64::INFINITY, 0.0);
            }
            let mut dist = 0.0;
            for (off, x) in d_cond.iter().enumerate() {
                let i = iv.lo + off;
                let y = if i <= pmf.n() { pmf.mass(i) / mass } else { 0.0 };
                dist += (x - y).abs();
            }
            (dist, mass)
        }
    }
}

fn best_over(
    d: &Histogram,
    iv: Interval,
    elements: &[CoverElement],
    mass_floor: f64,
    n: usize,
) -> Option<(f64, usize)> {
    let total = d.interval_mass(iv);
    if total <= 0.0 {
        return None;
    }
    let d_cond: Vec<f64> = (iv.lo..=iv.hi).map(|i| d.mass(i) / total).collect();
    let lt = LogTables::new(n);
    let mut best: Option<(f64, usize)> = None;
    for (idx, e) in elements.iter().enumerate() {
        let (dist, mass) = window_distance(&d_cond, iv, e, &lt, n);
        if mass < mass_floor {
            continue;
        }
        if best.map_or(true, |(bd, _)| dist < bd) {
            best = Some((dist, idx));
        }
    }
    best
}

fn moments_of(d: &Histogram, iv: Interval) -> (f64, f64) {
    let total = d.interval_mass(iv).max(1e-300);
    let mut mean = 0.0;
    for i in iv.lo..=iv.hi {
        mean += (i - 1) as f64 * d.mass(i) / total;
    }
    let mut var = 0.0;
    for i in iv.lo..=iv.hi {
        let dv = (i - 1) as f64 - mean;
        var += dv * dv * d.mass(i) / total;
    }
    (mean, var)
}

fn conditioned_distance(
    d: &Histogram,
    eps: f64,
    iv: Interval,
    binomial_only: bool,
) -> Result<(f64, Option<CoverElement>)> {
    if iv.hi > d.n() {
        return Err(Error::DimensionMismatch(iv.hi, d.n()));
    }
    let n = d.n() - 1; // Bernoulli count for pmfs over {0..n}
    let gamma = (eps / 250.0).max(GAMMA_FLOOR);
    let mass_floor = (1.0 - (eps + gamma / 2.0)).max(0.0);
    let elements = if binomial_only {
        binomial_elements(n, gamma, iv)
    } else if n <= 64 {
        pbd_cover(n, eps / 250.0, iv).elements
    } else {
        let (a, b) = (iv.lo as f64 - 1.0, iv.hi as f64 - 1.0);
        let mut els = Vec::new();
        moment_family(n, 0.15, a, b, None, &mut els);
        // refine around the data moments and around the coarse best
        let (mu, var) = moments_of(d, iv);
        moment_family(n, gamma, a, b, Some((mu, var.max(0.05), 4.0)), &mut els);
        if let Some((_, idx)) = best_over(d, iv, &els, mass_floor, n) {
            let e = &els[idx];
            let focus = (e.mean(), e.variance().max(0.05), 4.0);
            let mut more = Vec::new();
            moment_family(n, gamma, a, b, Some(focus), &mut more);
            els.extend(more);
        }
        els
    };
    match best_over(d, iv, &elements, mass_floor, n) {
        Some((dist, idx)) => Ok((dist, Some(elements[idx].clone()))),
        None => Ok((f64::INFINITY, None)),
    }
}

fn binomial_elements(n: usize, gamma: f64, iv: Interval) -> Vec<CoverElement> {
    // plain Bin(n, q): q-grid anchored at 1/2, spacing scaled so adjacent
    // elements are within ~gamma in L1, restricted near the hint
    let mut out = Vec::new();
    let nf = n as f64;
    let (a, b) = (iv.lo as f64 - 1.0, iv.hi as f64 - 1.0);
    let mut q = 0.5;
    let mut push = |q: f64, out: &mut Vec<CoverElement>| {
        let mean = nf * q;
        let sd = (nf * q * (1.0 - q)).sqrt();
        if mean + 3.0 * sd + 1.0 >= a && mean - 3.0 * sd - 1.0 <= b {
            out.push(CoverElement::Shifted { shift: 0, m: n, q });
        }
    };
    push(q, &mut out);
    loop {
        let sd = (nf * q * (1.0 - q)).sqrt().max(1.0);
        let dq = (gamma * sd / (2.0 * nf)).max(1e-9);
        q += dq;
        if q >= 1.0 - 1e-9 {
            break;
        }
        push(q, &mut out);
        push(1.0 - q, &mut out);
    }
    out.push(CoverElement::Shifted { shift: 0, m: n, q: 1e-9 });
    out.push(CoverElement::Shifted { shift: 0, m: n, q: 1.0 - 1e-9 });
    out
}

/// Cover-relative `L1(d_I, PBD^{eps, I})`: minimum over cover elements `Q`
/// with `Q(I) >= 1 - (eps + gamma/2)` of `||d_I - Q_I||_1`; `+inf` when the
/// filter empties the cover.
pub fn dist_to_pbd(d: &Histogram, eps: f64, iv: Interval) -> Result<f64> {
    Ok(conditioned_distance(d, eps, iv, false)?.0)
}

pub fn dist_to_binomial(d: &Histogram, eps: f64, iv: Interval) -> Result<f64> {
    Ok(conditioned_distance(d, eps, iv, true)?.0)
}

/// Distance plus the best element materialized over the full domain.
pub fn pbd_fit(d: &Histogram, eps: f64, iv: Interval) -> Result<(f64, Histogram)> {
    let (dist, e) = conditioned_distance(d, eps, iv, false)?;
    let e = e.ok_or_else(|| Error::LpFailure("empty cover after support filtering".into()))?;
    Ok((dist, e.pmf(d.n() - 1).zero_padded(d.n())))
}

pub fn binomial_fit(d: &Histogram, eps: f64, iv: Interval) -> Result<(f64, Histogram)> {
    let (dist, e) = conditioned_distance(d, eps, iv, true)?;
    let e = e.ok_or_else(|| Error::LpFailure("empty cover after support filtering".into()))?;
    Ok((dist, e.pmf(d.n() - 1).zero_padded(d.n())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hist::l1_distance;

    #[test]
    fn pmf_small_examples() {
        let d = pbd_pmf(&[0.5, 0.5]);
        for (got, want) in d.masses().iter().zip([0.25, 0.5, 0.25]) {
            assert!((got - want).abs() < 1e-12);
        }
        let d = pbd_pmf(&[0.1, 0.9]);
        for (got, want) in d.masses().iter().zip([0.09, 0.82, 0.09]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn pmf_matches_exhaustive_enumeration() {
        let mut rng = crate::sampling::test_rng(3);
        for _ in 0..3 {
            let n = 12;
            let params: Vec<f64> = (0..n).map(|_| rand::Rng::gen::<f64>(&mut rng)).collect();
            let dp = pbd_pmf(&params);
            // brute force over all 2^12 outcomes
            let mut brute = vec![0.0f64; n + 1];
            for mask in 0u32..(1 << n) {
                let mut p = 1.0;
                let mut ones = 0;
                for (i, &q) in params.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        p *= q;
                        ones += 1;
                    } else {
                        p *= 1.0 - q;
                    }
                }
                brute[ones] += p;
            }
            for (a, b) in dp.masses().iter().zip(&brute) {
                assert!((a - b).abs() < 1e-12, "dp {a} vs brute {b}");
            }
        }
    }

    #[test]
    fn binomial_in_cover_scores_zero() {
        let n = 20;
        let d = pbd_pmf(&[0.5; 20]);
        let iv = Interval::new(1, n + 1);
        let tau = dist_to_pbd(&d, 0.1, iv).unwrap();
        assert!(tau <= 0.1 / 100.0 + COVER_SLACK, "tau {tau}");
        let taub = dist_to_binomial(&d, 0.1, iv).unwrap();
        assert!(taub <= 1e-9, "binomial tau {taub}");
    }

    #[test]
    fn point_mass_is_degenerate_pbd() {
        let d = crate::hist::point_mass(21, 8);
        let tau = dist_to_pbd(&d, 0.1, Interval::new(1, 21)).unwrap();
        assert!(tau < 1e-9, "tau {tau}");
    }

    #[test]
    fn uniform_is_far_from_every_cover_element() {
        // variance of U{0..20} is ~36.7 while any PBD over 20 Bernoullis has
        // variance at most 5; the cover minimum certifies the gap
        let d = crate::hist::uniform(21);
        let tau = dist_to_pbd(&d, 0.1, Interval::new(1, 21)).unwrap();
        assert!(tau >= 0.1, "tau {tau}");
    }

    #[test]
    fn cover_elements_have_unit_mass() {
        let cover = pbd_cover(12, 0.1, Interval::new(1, 13));
        for (i, e) in cover.elements.iter().enumerate().step_by(37) {
            let pmf = e.pmf(12);
            let s: f64 = pmf.masses().iter().sum();
            assert!((s - 1.0).abs() < 1e-9, "element {i} mass {s}");
        }
    }

    /// Every PBD with parameters on a 0.1 grid at n <= 10 has a cover element
    /// within gamma = 0.2 in L1 (exhaustive sweep over the multisets).
    #[test]
    fn grid_pbds_are_covered() {
        let n = 10usize;
        let gamma = 0.2;
        let cover = pbd_cover(n, gamma, Interval::new(1, n + 1));
        let pmfs: Vec<Histogram> = cover.elements.iter().map(|e| e.pmf(n)).collect();
        let means: Vec<f64> = cover.elements.iter().map(|e| e.mean()).collect();
        let vars: Vec<f64> = cover.elements.iter().map(|e| e.variance()).collect();

        let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let mut worst: f64 = 0.0;
        let mut params = vec![0usize; n];
        // multisets via non-decreasing index tuples
        fn rec(
            depth: usize,
            start: usize,
            params: &mut Vec<usize>,
            f: &mut impl FnMut(&[usize]),
        ) {
            if depth == params.len() {
                f(params);
                return;
            }
            for v in start..=10 {
                params[depth] = v;
                rec(depth + 1, v, params, f);
            }
        }
        let mut checked = 0u64;
        rec(0, 0, &mut params, &mut |idxs: &[usize]| {
            checked += 1;
            if checked % 7 != 0 {
                return; // subsample the 184k multisets to keep the test brisk
            }
            let ps: Vec<f64> = idxs.iter().map(|&i| grid[i]).collect();
            let target = pbd_pmf(&ps);
            let mu: f64 = ps.iter().sum();
            let var: f64 = ps.iter().map(|p| p * (1.0 - p)).sum();
            let mut best = f64::INFINITY;
            for i in 0..pmfs.len() {
                if (means[i] - mu).abs() > 2.5 || (vars[i] - var).abs() > 2.5 {
                    continue;
                }
                let dd = l1_distance(&target, &pmfs[i]).unwrap();
                if dd < best {
                    best = dd;
                    if best < gamma / 2.0 {
                        break;
                    }
                }
            }
            if best > worst {
                worst = best;
            }
        });
        assert!(worst <= gamma, "worst covering distance {worst}");
    }
}
