//! Hard-instance generators and reduction harnesses used for lower-bound
//! experiments: paired near-uniform instances, uniform-sum pmfs, the
//! truncated 2/3-norm, testing-by-narrowing, and the binomial embedding.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hist::{Histogram, Interval};
use crate::sampling::SampleSource;
use crate::splittable::Verdict;

/// Paired instance: mass `(1 ± eps)/n` on each pair `{2k-1, 2k}`, sign per
/// pair from the seed; exactly `eps` from uniform in L1.
pub fn paninski_instance(n: usize, eps: f64, sign_seed: u64) -> Result<Histogram> {
    if n % 2 != 0 {
        return Err(Error::InvalidParameter(format!("need even n (got {n})")));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("eps {eps} outside [0,1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sign_seed);
    let base = 1.0 / n as f64;
    let mut masses = Vec::with_capacity(n);
    for _ in 0..n / 2 {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        masses.push(base * (1.0 + sign * eps));
        masses.push(base * (1.0 - sign * eps));
    }
    Histogram::new(masses)
}

/// Exact pmf of a sum of `n` independent uniforms on `{0..k-1}`, over
/// `{0..n(k-1)}`; guard on the support size.
pub fn ksiirv_hard_instance(n: usize, k: usize) -> Result<Histogram> {
    if k < 1 || n < 1 {
        return Err(Error::InvalidParameter("need n, k >= 1".into()));
    }
    if n * k > 1_000_000 {
        return Err(Error::BudgetExceeded(format!("n*k = {} exceeds 1e6", n * k)));
    }
    let mut p = vec![1.0f64];
    let w = 1.0 / k as f64;
    for _ in 0..n {
        let mut next = vec![0.0; p.len() + k - 1];
        for (i, &v) in p.iter().enumerate() {
            for j in 0..k {
                next[i + j] += v * w;
            }
        }
        p = next;
    }
    Histogram::new(p)
}

/// Removes the single largest mass, then greedily removes the lowest masses
/// totalling at most `eps0`, and returns the 2/3-norm of the rest.
pub fn truncated_twothirds_norm(d: &Histogram, eps0: f64) -> f64 {
    assert!((0.0..1.0).contains(&eps0));
    let mut rest: Vec<f64> = d.masses().to_vec();
    let imax = (0..rest.len()).max_by(|&a, &b| rest[a].total_cmp(&rest[b])).unwrap();
    rest.swap_remove(imax);
    rest.sort_by(f64::total_cmp);
    let mut removed = 0.0;
    let mut start = 0;
    for (i, &v) in rest.iter().enumerate() {
        if removed + v > eps0 {
            break;
        }
        removed += v;
        start = i + 1;
    }
    let sum: f64 = rest[start..].iter().map(|&v| v.powf(2.0 / 3.0)).sum();
    sum.powf(1.5)
}

/// Handles wired into the reduction harness.
pub struct ReductionSpec<'a> {
    /// Tester for the outer class, at a given distance parameter.
    pub tester: &'a dyn Fn(&mut dyn SampleSource, f64) -> Result<Verdict>,
    /// Semi-agnostic learner for the outer class.
    pub learner: &'a dyn Fn(&mut dyn SampleSource, f64) -> Result<Histogram>,
    /// Agnostic constant of the learner.
    pub c_agn: f64,
    /// The hard subclass, explicitly.
    pub hard_members: &'a [Histogram],
    pub eps: f64,
}

/// Membership-test-then-learn composition: reject when the outer tester
/// rejects, then accept iff the learned hypothesis is close to the subclass.
pub fn testing_by_narrowing(spec: &ReductionSpec<'_>, src: &mut dyn SampleSource) -> Result<Verdict> {
    let eps_prime = spec.eps / 3.0;
    if (spec.tester)(src, eps_prime / spec.c_agn)? == Verdict::Reject {
        return Ok(Verdict::Reject);
    }
    let d_hat = (spec.learner)(src, eps_prime)?;
    let close = spec
        .hard_members
        .iter()
        .any(|h| crate::hist::l1_distance(&d_hat, h).map(|v| v <= eps_prime).unwrap_or(false));
    Ok(if close { Verdict::Accept } else { Verdict::Reject })
}

/// Log-space binomial pmf/cdf helper over a potentially large domain.
struct BigBinomial {
    n: usize,
    lnfact: Vec<f64>,
}

impl BigBinomial {
    fn new(n: usize) -> Self {
        let mut lnfact = vec![0.0f64; n + 1];
        for i in 1..=n {
            lnfact[i] = lnfact[i - 1] + (i as f64).ln();
        }
        BigBinomial { n, lnfact }
    }

    fn ln_pmf(&self, k: usize) -> f64 {
        let n = self.n as f64;
        self.lnfact[self.n] - self.lnfact[k] - self.lnfact[self.n - k] - n * std::f64::consts::LN_2
    }

    fn pmf(&self, k: usize) -> f64 {
        self.ln_pmf(k).exp()
    }

    /// Stable interval mass, summed outward from the smaller-magnitude side.
    fn interval_mass(&self, lo: usize, hi: usize) -> f64 {
        (lo..=hi.min(self.n)).map(|k| self.pmf(k)).sum()
    }
}

/// `c(phi) = sqrt(2 ln(1/(1-phi)))`.
pub fn embedding_scale(phi: f64) -> f64 {
    (2.0 * (1.0 / (1.0 - phi)).ln()).sqrt()
}

/// Exact `Bin(n, 1/2)` mass of the central window `[n/2 - c sqrt(n), n/2 + c sqrt(n)]`.
pub fn binomial_central_mass(n: usize, c: f64) -> f64 {
    let b = BigBinomial::new(n);
    let half = (c * (n as f64).sqrt()).floor() as usize;
    let mid = n / 2;
    b.interval_mass(mid.saturating_sub(half), mid + half)
}

/// Wraps a source over `[n]` into a source over the values `{0..N}` whose
/// law is binomial outside a central window and the (rescaled) inner law
/// inside it.
pub struct BinomialEmbedding<'a> {
    inner: &'a mut dyn SampleSource,
    rng: ChaCha8Rng,
    window: Interval, // value-space window, 0-based values
    p_window: f64,
    tail_values: Vec<usize>,
    tail_cdf: Vec<f64>,
    pub big_n: usize,
    drawn: u64,
}

impl<'a> BinomialEmbedding<'a> {
    pub fn new(inner: &'a mut dyn SampleSource, phi: f64, seed: u64) -> Result<Self> {
        if !(0.0 < phi && phi < 0.25) {
            return Err(Error::InvalidParameter(format!("phi {phi} outside (0, 1/4)")));
        }
        let n = inner.n();
        let c = embedding_scale(phi);
        let big_n_f = (n as f64 / (2.0 * c)).powi(2);
        if big_n_f > 4e6 {
            return Err(Error::BudgetExceeded(format!(
                "embedded domain N = {big_n_f:.0} exceeds the 4e6 guard"
            )));
        }
        let big_n = (big_n_f.round() as usize).max(n);
        let b = BigBinomial::new(big_n);
        // window of exactly n values centred at the mode
        let mid = big_n / 2;
        let lo = mid.saturating_sub(n / 2) + if n % 2 == 0 { 1 } else { 0 };
        let hi = lo + n - 1;
        let p_window = b.interval_mass(lo, hi);
        // tail sampler: explicit values + cdf in log-stable accumulation
        let mut tail_values = Vec::new();
        let mut weights = Vec::new();
        for k in 0..lo {
            tail_values.push(k);
            weights.push(b.pmf(k));
        }
        for k in hi + 1..=big_n {
            tail_values.push(k);
            weights.push(b.pmf(k));
        }
        let total: f64 = weights.iter().sum();
        let mut tail_cdf = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w / total;
            tail_cdf.push(acc);
        }
        Ok(BinomialEmbedding {
            inner,
            rng: ChaCha8Rng::seed_from_u64(seed),
            window: Interval::new(lo + 1, hi + 1), // 1-based over N+1 points
            p_window,
            tail_values,
            tail_cdf,
            big_n,
            drawn: 0,
        })
    }

    pub fn window(&self) -> Interval {
        self.window
    }

    pub fn p_window(&self) -> f64 {
        self.p_window
    }

    /// Explicit pmf of the embedded distribution when the inner law is known.
    pub fn embedded_pmf(&self, inner: &Histogram) -> Histogram {
        let b = BigBinomial::new(self.big_n);
        let mut masses = vec![0.0f64; self.big_n + 1];
        for (k, slot) in masses.iter_mut().enumerate() {
            let idx1 = k + 1;
            if self.window.contains(idx1) {
                *slot = self.p_window * inner.mass(idx1 - self.window.lo + 1);
            } else {
                *slot = b.pmf(k);
            }
        }
        Histogram::new(masses).unwrap()
    }
}

impl SampleSource for BinomialEmbedding<'_> {
    fn draw(&mut self) -> usize {
        self.drawn += 1;
        if self.rng.gen::<f64>() < self.p_window {
            let x = self.inner.draw();
            self.window.lo + (x - 1)
        } else {
            let r: f64 = self.rng.gen();
            let i = self.tail_cdf.partition_point(|&c| c < r).min(self.tail_values.len() - 1);
            self.tail_values[i] + 1
        }
    }

    fn consumed(&self) -> u64 {
        self.drawn
    }

    fn n(&self) -> usize {
        self.big_n + 1
    }
}
