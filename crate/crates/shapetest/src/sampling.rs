//! Seeded sample sources and randomness plumbing.
//!
//! Every stochastic routine in the crate takes either a [`SampleSource`] or an
//! explicit 64-bit seed, so whole runs replay bit-identically.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::hist::{Histogram, Interval, Partition};

/// One-at-a-time i.i.d. draws from an unknown distribution over `[1, n]`.
///
/// Sources are single-owner: a source is not meant to be drawn from
/// concurrently, and `consumed` is an exact running tally.
pub trait SampleSource {
    /// Draws one index in `[1, n]`.
    fn draw(&mut self) -> usize;
    /// Number of draws made so far.
    fn consumed(&self) -> u64;
    /// Domain size.
    fn n(&self) -> usize;
}

/// Inverse-CDF sampler backed by an explicit pmf and a seeded RNG.
pub struct HistogramSource {
    cdf: Vec<f64>,
    rng: ChaCha8Rng,
    consumed: u64,
}

impl HistogramSource {
    pub fn new(d: &Histogram, seed: u64) -> Self {
        HistogramSource {
            cdf: d.cdf(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            consumed: 0,
        }
    }
}

impl SampleSource for HistogramSource {
    fn draw(&mut self) -> usize {
        let r: f64 = self.rng.gen();
        self.consumed += 1;
        // first index with cdf >= r
        let mut lo = 0usize;
        let mut hi = self.cdf.len() - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.cdf[mid] >= r {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo + 1
    }

    fn consumed(&self) -> u64 {
        self.consumed
    }

    fn n(&self) -> usize {
        self.cdf.len()
    }
}

/// Convenience: build a seeded source for `d`.
pub fn sample(d: &Histogram, seed: u64) -> HistogramSource {
    HistogramSource::new(d, seed)
}

/// SplitMix64 step; the documented per-trial seed mixing function.
///
/// `trial_seed(master, i) = splitmix64(master XOR (i+1) * 0x9E3779B97F4A7C15)`.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derives the seed for trial `i` from a master seed.
pub fn trial_seed(master: u64, i: u64) -> u64 {
    splitmix64(master ^ (i.wrapping_add(1)).wrapping_mul(0x9E3779B97F4A7C15))
}

/// Draws `k ~ Poisson(lambda)`.
pub fn poisson(lambda: f64, rng: &mut impl Rng) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let d = rand_distr::Poisson::new(lambda).expect("lambda > 0");
    rand_distr::Distribution::sample(&d, rng) as u64
}

/// Draws `k ~ Binomial(n, 1/2)`; used for subsampling fixed count vectors.
pub fn binomial_half(n: u64, rng: &mut impl Rng) -> u64 {
    if n == 0 {
        return 0;
    }
    let d = rand_distr::Binomial::new(n, 0.5).unwrap();
    rand_distr::Distribution::sample(&d, rng)
}

/// Deterministic RNG for tests.
pub fn test_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random pmf over `[1,n]`: i.i.d. exponentials, normalized.
pub fn random_histogram(n: usize, rng: &mut impl Rng) -> Histogram {
    let raw: Vec<f64> = (0..n).map(|_| -(rng.gen::<f64>().max(1e-300)).ln()).collect();
    let total: f64 = raw.iter().sum();
    Histogram::new(raw.iter().map(|x| x / total).collect()).unwrap()
}

/// Random partition of `[1,n]` with a geometric number of pieces.
pub fn random_partition(n: usize, rng: &mut impl Rng) -> Partition {
    let mut cuts: Vec<usize> = Vec::new();
    for i in 1..n {
        if rng.gen::<f64>() < 4.0 / n as f64 {
            cuts.push(i);
        }
    }
    cuts.push(n);
    Partition::from_breakpoints(&cuts).unwrap()
}

/// Random interval of `[1,n]`.
pub fn random_interval(n: usize, rng: &mut impl Rng) -> Interval {
    let lo = rng.gen_range(1..=n);
    let hi = rng.gen_range(lo..=n);
    Interval::new(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hist;

    #[test]
    fn point_mass_always_draws_it() {
        let d = hist::point_mass(5, 1);
        let mut src = sample(&d, 3);
        for _ in 0..100 {
            assert_eq!(src.draw(), 1);
        }
        assert_eq!(src.consumed(), 100);
    }

    #[test]
    fn uniform_frequencies() {
        let d = hist::uniform(4);
        let mut src = sample(&d, 17);
        let mut counts = [0u64; 4];
        let m = 100_000;
        for _ in 0..m {
            counts[src.draw() - 1] += 1;
        }
        for c in counts {
            let f = c as f64 / m as f64;
            assert!((f - 0.25).abs() < 0.01, "frequency {f}");
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let d = hist::Histogram::new(vec![0.3, 0.4, 0.2, 0.1]).unwrap();
        let mut a = sample(&d, 42);
        let mut b = sample(&d, 42);
        let xs: Vec<usize> = (0..1000).map(|_| a.draw()).collect();
        let ys: Vec<usize> = (0..1000).map(|_| b.draw()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn dkw_bound_monte_carlo() {
        // m = ceil(ln(2/0.1) / (2 * 0.1^2)) = 150 draws from uniform(50):
        // Kolmogorov(empirical, U) <= 0.1 in at least 90% of 200 seeded trials.
        let n = 50;
        let m = ((2.0f64 / 0.1).ln() / (2.0 * 0.01)).ceil() as usize;
        assert_eq!(m, 150);
        let d = hist::uniform(n);
        let mut ok = 0;
        for t in 0..200u64 {
            let mut src = sample(&d, trial_seed(991, t));
            let samples: Vec<usize> = (0..m).map(|_| src.draw()).collect();
            let e = hist::empirical_from_samples(&samples, n).unwrap();
            if hist::kolmogorov_distance(&e, &d).unwrap() <= 0.1 {
                ok += 1;
            }
        }
        assert!(ok >= 180, "DKW held in only {ok}/200 trials");
    }
}
