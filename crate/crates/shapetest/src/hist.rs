//! Explicit distributions over `{1..n}`, intervals and interval partitions.

use crate::error::{Error, Result};

/// Absolute tolerance for probability comparisons.
pub const PROB_TOL: f64 = 1e-9;
/// Constructors renormalize inputs whose total mass is within this of 1.
pub const MASS_SLACK: f64 = 1e-6;

/// An explicit pmf over `{1..n}`, stored 0-indexed.
///
/// `breakpoints`, when present, certify an l-piece piecewise-constant
/// structure: sorted inclusive right endpoints of the pieces (1-based), the
/// last one equal to `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    masses: Vec<f64>,
    breakpoints: Option<Vec<usize>>,
}

impl Histogram {
    /// Builds a histogram, renormalizing when the total is within `1e-6` of 1.
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidParameter("empty mass vector".into()));
        }
        for &m in &masses {
            if !(m >= -PROB_TOL) || !m.is_finite() {
                return Err(Error::InvalidParameter(format!("negative mass {m}")));
            }
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_SLACK {
            return Err(Error::BadTotalMass(total));
        }
        let mut masses = masses;
        if total != 1.0 {
            for m in &mut masses {
                *m /= total;
            }
        }
        for m in &mut masses {
            if *m < 0.0 {
                *m = 0.0;
            }
        }
        Ok(Histogram { masses, breakpoints: None })
    }

    /// As [`Histogram::new`] but also certifying piecewise-constant structure.
    pub fn with_breakpoints(masses: Vec<f64>, breakpoints: Vec<usize>) -> Result<Self> {
        let mut h = Histogram::new(masses)?;
        let n = h.n();
        if breakpoints.is_empty() || *breakpoints.last().unwrap() != n {
            return Err(Error::InvalidParameter("breakpoints must end at n".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("breakpoints must be strictly sorted".into()));
        }
        let mut lo = 1usize;
        for &hi in &breakpoints {
            let v = h.masses[lo - 1];
            if h.masses[lo - 1..hi].iter().any(|&m| (m - v).abs() > PROB_TOL) {
                return Err(Error::InvalidParameter(
                    "masses are not constant within a certified piece".into(),
                ));
            }
            lo = hi + 1;
        }
        h.breakpoints = Some(breakpoints);
        Ok(h)
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn breakpoints(&self) -> Option<&[usize]> {
        self.breakpoints.as_deref()
    }

    /// Mass at 1-based index `i`.
    pub fn mass(&self, i: usize) -> f64 {
        self.masses[i - 1]
    }

    /// Total mass of an interval.
    pub fn interval_mass(&self, iv: Interval) -> f64 {
        self.masses[iv.lo - 1..iv.hi].iter().sum()
    }

    /// Cumulative distribution function at 1-based `i` (0 for i = 0).
    pub fn cdf(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.n());
        let mut acc = 0.0;
        for &m in &self.masses {
            acc += m;
            c.push(acc);
        }
        c
    }

    /// Detects maximal runs of equal mass and returns the piece endpoints.
    pub fn constant_run_breakpoints(&self) -> Vec<usize> {
        let mut bps = Vec::new();
        for i in 1..self.n() {
            if (self.masses[i] - self.masses[i - 1]).abs() > PROB_TOL {
                bps.push(i);
            }
        }
        bps.push(self.n());
        bps
    }

    /// Returns the zero-padded extension of `self` to domain size `m >= n`.
    pub fn zero_padded(&self, m: usize) -> Histogram {
        assert!(m >= self.n());
        let mut masses = self.masses.clone();
        masses.resize(m, 0.0);
        Histogram { masses, breakpoints: None }
    }
}

/// L1 distance between two pmfs on the same domain, in [0, 2].
pub fn l1_distance(a: &Histogram, b: &Histogram) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch(a.n(), b.n()));
    }
    Ok(a.masses
        .iter()
        .zip(&b.masses)
        .map(|(x, y)| (x - y).abs())
        .sum())
}

/// Kolmogorov distance: sup over i of |CDF_a(i) - CDF_b(i)|.
pub fn kolmogorov_distance(a: &Histogram, b: &Histogram) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch(a.n(), b.n()));
    }
    let mut acc = 0.0;
    let mut best: f64 = 0.0;
    for (x, y) in a.masses.iter().zip(&b.masses) {
        acc += x - y;
        best = best.max(acc.abs());
    }
    Ok(best)
}

/// Empirical distribution of a sample multiset (1-based indices in `[1,n]`).
pub fn empirical_from_samples(samples: &[usize], n: usize) -> Result<Histogram> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut counts = vec![0u64; n];
    for &s in samples {
        if s < 1 || s > n {
            return Err(Error::InvalidParameter(format!("sample {s} outside [1,{n}]")));
        }
        counts[s - 1] += 1;
    }
    Ok(empirical_from_counts(&counts))
}

/// Empirical pmf from per-symbol counts; masses sum to 1 exactly up to one ulp fixup.
pub fn empirical_from_counts(counts: &[u64]) -> Histogram {
    let m: u64 = counts.iter().sum();
    assert!(m > 0, "empty counts");
    let mut masses: Vec<f64> = counts.iter().map(|&c| c as f64 / m as f64).collect();
    let sum: f64 = masses.iter().sum();
    // push rounding residue onto the largest cell
    let j = (0..masses.len()).max_by(|&a, &b| masses[a].total_cmp(&masses[b])).unwrap();
    masses[j] += 1.0 - sum;
    Histogram { masses, breakpoints: None }
}

/// 1-based inclusive interval of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: usize,
    pub hi: usize,
}

impl Interval {
    pub fn new(lo: usize, hi: usize) -> Self {
        assert!(1 <= lo && lo <= hi, "bad interval [{lo},{hi}]");
        Interval { lo, hi }
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: usize) -> bool {
        self.lo <= i && i <= self.hi
    }

    /// Dyadic iff of the form `[j*2^i + 1, (j+1)*2^i]`.
    pub fn is_dyadic(&self) -> bool {
        let len = self.len();
        len.is_power_of_two() && (self.lo - 1) % len == 0
    }

    /// Splits at `ceil(len/2)`: left half takes the ceiling.
    pub fn bisect(&self) -> (Interval, Interval) {
        assert!(self.len() >= 2);
        let left_len = self.len().div_ceil(2);
        let mid = self.lo + left_len - 1;
        (Interval::new(self.lo, mid), Interval::new(mid + 1, self.hi))
    }
}

/// Ordered, disjoint, contiguous intervals covering `[1, n]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    intervals: Vec<Interval>,
}

impl Partition {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidParameter("empty partition".into()));
        }
        if intervals[0].lo != 1 {
            return Err(Error::InvalidParameter("partition must start at 1".into()));
        }
        for w in intervals.windows(2) {
            if w[1].lo != w[0].hi + 1 {
                return Err(Error::InvalidParameter("partition gaps or overlaps".into()));
            }
        }
        Ok(Partition { intervals })
    }

    pub fn single(n: usize) -> Self {
        Partition { intervals: vec![Interval::new(1, n)] }
    }

    /// Equal split of `[1,n]` into `k` pieces (last takes the remainder).
    pub fn equal(n: usize, k: usize) -> Self {
        assert!(k >= 1 && k <= n);
        let w = n / k;
        let mut ivs = Vec::with_capacity(k);
        let mut lo = 1;
        for j in 0..k {
            let hi = if j + 1 == k { n } else { lo + w - 1 };
            ivs.push(Interval::new(lo, hi));
            lo = hi + 1;
        }
        Partition { intervals: ivs }
    }

    pub fn from_breakpoints(breakpoints: &[usize]) -> Result<Self> {
        let mut ivs = Vec::with_capacity(breakpoints.len());
        let mut lo = 1;
        for &hi in breakpoints {
            ivs.push(Interval::new(lo, hi));
            lo = hi + 1;
        }
        Partition::new(ivs)
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn n(&self) -> usize {
        self.intervals.last().unwrap().hi
    }

    /// True iff `self` refines `other` (every interval of self is inside one of other).
    pub fn refines(&self, other: &Partition) -> bool {
        if self.n() != other.n() {
            return false;
        }
        let mut j = 0;
        for iv in &self.intervals {
            while other.intervals[j].hi < iv.hi {
                j += 1;
            }
            if !(other.intervals[j].lo <= iv.lo && iv.hi <= other.intervals[j].hi) {
                return false;
            }
        }
        true
    }
}

/// Spreads each piece's mass uniformly over the piece; total mass preserved.
pub fn flatten(d: &Histogram, p: &Partition) -> Result<Histogram> {
    if p.n() != d.n() {
        return Err(Error::DimensionMismatch(p.n(), d.n()));
    }
    let mut masses = vec![0.0; d.n()];
    let mut bps = Vec::with_capacity(p.len());
    for iv in p.intervals() {
        let total = d.interval_mass(*iv);
        let per = total / iv.len() as f64;
        for slot in &mut masses[iv.lo - 1..iv.hi] {
            *slot = per;
        }
        bps.push(iv.hi);
    }
    Ok(Histogram { masses, breakpoints: Some(bps) })
}

/// Conditional distribution of `d` on `I`, over a domain of size `|I|`.
pub fn conditional_restrict(d: &Histogram, iv: Interval) -> Result<Histogram> {
    if iv.hi > d.n() {
        return Err(Error::DimensionMismatch(iv.hi, d.n()));
    }
    let total = d.interval_mass(iv);
    if total <= 0.0 {
        return Err(Error::ZeroMass { lo: iv.lo, hi: iv.hi });
    }
    let masses = d.masses[iv.lo - 1..iv.hi].iter().map(|m| m / total).collect();
    Ok(Histogram { masses, breakpoints: None })
}

/// Largest dyadic block `[m*2^l + 1, (m+1)*2^l]` inside `[a, b]` with `2^l <= (b-a)/2`,
/// per the two-sided greedy covering argument. Returns `None` for singletons.
fn central_dyadic_block(a: usize, b: usize) -> Option<Interval> {
    if a == b {
        return None;
    }
    let half = (b - a) / 2;
    if half == 0 {
        // length-2 interval: [a,a] is dyadic iff aligned; fall back to per-point
        return None;
    }
    let mut l = 0usize;
    while (1usize << (l + 1)) <= half {
        l += 1;
    }
    let len = 1usize << l;
    // smallest m with m*len + 1 >= a
    let m = (a - 1).div_ceil(len);
    let lo = m * len + 1;
    let hi = lo + len - 1;
    debug_assert!(lo >= a && hi <= b);
    Some(Interval::new(lo, hi))
}

/// Covers `[a, b]` with maximal dyadic intervals: central block, then greedy
/// extension to the right and to the left with the largest adjacent dyadic
/// interval still contained in `[a, b]`.
fn dyadic_cover(a: usize, b: usize, out: &mut Vec<Interval>) {
    let center = match central_dyadic_block(a, b) {
        Some(c) => c,
        None => {
            for i in a..=b {
                out.push(Interval::new(i, i));
            }
            return;
        }
    };
    // left side, built right-to-left then reversed
    let mut left = Vec::new();
    let mut hi = center.lo - 1;
    while hi >= a {
        let mut len = largest_pow2_dividing(hi);
        while hi + 1 < len + a {
            len /= 2;
        }
        left.push(Interval::new(hi + 1 - len, hi));
        if hi + 1 - len == a {
            break;
        }
        hi -= len;
    }
    left.reverse();
    out.extend(left);
    out.push(center);
    // right side
    let mut lo = center.hi + 1;
    while lo <= b {
        let mut len = largest_pow2_dividing(lo - 1);
        while lo + len - 1 > b {
            len /= 2;
        }
        out.push(Interval::new(lo, lo + len - 1));
        lo += len;
    }
}

fn largest_pow2_dividing(x: usize) -> usize {
    if x == 0 {
        usize::MAX / 2 + 1 // 2^63; effectively unbounded, callers shrink to fit
    } else {
        1 << x.trailing_zeros()
    }
}

/// Refines `p` so that every output interval is dyadic on a power-of-two domain.
///
/// Output size is at most `|p| * (2*log2(n) + 2)`.
pub fn dyadic_refine(p: &Partition, n: usize) -> Result<Partition> {
    if !n.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("n = {n} is not a power of two")));
    }
    if p.n() != n {
        return Err(Error::DimensionMismatch(p.n(), n));
    }
    let mut out = Vec::new();
    for iv in p.intervals() {
        if iv.is_dyadic() {
            out.push(*iv);
        } else {
            dyadic_cover(iv.lo, iv.hi, &mut out);
        }
    }
    Partition::new(out)
}

/// Uniform distribution over `{1..n}`.
pub fn uniform(n: usize) -> Histogram {
    Histogram { masses: vec![1.0 / n as f64; n], breakpoints: Some(vec![n]) }
}

/// Point mass at 1-based `at`.
pub fn point_mass(n: usize, at: usize) -> Histogram {
    assert!(1 <= at && at <= n);
    let mut masses = vec![0.0; n];
    masses[at - 1] = 1.0;
    Histogram { masses, breakpoints: None }
}
