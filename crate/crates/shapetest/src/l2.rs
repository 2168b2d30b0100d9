//! Distinguishing `||D - U_I||_2 > eps/sqrt(|I|)` from `<= eps/(2 sqrt(|I|))`
//! with a Poissonized collision-style statistic and majority voting.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::sampling::{binomial_half, poisson, SampleSource};

/// Configuration of one check.
#[derive(Debug, Clone, Copy)]
pub struct L2CheckConfig {
    /// Accuracy parameter in (0, 1].
    pub epsilon: f64,
    /// Failure probability in (0, 1).
    pub delta: f64,
    /// Sample constant: per-round budget is `ceil(c_stat * sqrt(|I|) / eps^2)`.
    pub c_stat: f64,
}

impl L2CheckConfig {
    pub fn new(epsilon: f64, delta: f64) -> Self {
        L2CheckConfig { epsilon, delta, c_stat: DEFAULT_C_STAT }
    }

    /// Expected samples drawn per Poissonized round.
    pub fn per_round(&self, size_i: usize) -> u64 {
        (self.c_stat * (size_i as f64).sqrt() / (self.epsilon * self.epsilon)).ceil() as u64
    }

    /// Majority rounds.
    pub fn repetitions(&self) -> u64 {
        (18.0 * (1.0 / self.delta).ln()).ceil().max(1.0) as u64
    }
}

pub const DEFAULT_C_STAT: f64 = 10.0;

/// Total sample budget of one check: per-round count times majority rounds.
pub fn required_samples_l2(size_i: usize, epsilon: f64, delta: f64) -> u64 {
    let cfg = L2CheckConfig::new(epsilon, delta);
    cfg.per_round(size_i) * cfg.repetitions()
}

/// `Z = sum_k ((X_k - m/n)^2 - X_k)`; under Poissonized counts
/// `E[Z] = m^2 ||D - U||_2^2`.
pub fn z_statistic(counts: &[u64], m: f64, n: usize) -> f64 {
    let mu = m / n as f64;
    counts
        .iter()
        .map(|&x| {
            let x = x as f64;
            let d = x - mu;
            d * d - x
        })
        .sum()
}

fn round_threshold(m: f64, epsilon: f64, size_i: usize) -> f64 {
    0.75 * m * m * epsilon * epsilon / size_i as f64
}

/// Draws fresh Poissonized samples from `src` (indices in `[1, size_i]`) and
/// answers yes iff the majority of rounds sees `Z < tau`.
pub fn check_small_l2(
    src: &mut dyn SampleSource,
    size_i: usize,
    cfg: &L2CheckConfig,
    rng: &mut ChaCha8Rng,
) -> bool {
    if size_i <= 1 {
        return true;
    }
    let m = cfg.per_round(size_i);
    let reps = cfg.repetitions();
    let tau = round_threshold(m as f64, cfg.epsilon, size_i);
    let mut yes = 0u64;
    let mut counts = vec![0u64; size_i];
    for _ in 0..reps {
        counts.iter_mut().for_each(|c| *c = 0);
        let draws = poisson(m as f64, rng);
        for _ in 0..draws {
            counts[src.draw() - 1] += 1;
        }
        if z_statistic(&counts, m as f64, size_i) < tau {
            yes += 1;
        }
    }
    2 * yes > reps
}

/// Shared-sample variant used inside the decomposition recursion: the counts
/// of one fixed multiset are subsampled independently with probability 1/2
/// each round, and the statistic uses `m' = m_total / 2`.
pub fn check_small_l2_counts(
    counts: &[u64],
    cfg: &L2CheckConfig,
    rng: &mut ChaCha8Rng,
) -> bool {
    let size_i = counts.len();
    if size_i <= 1 {
        return true;
    }
    let m_total: u64 = counts.iter().sum();
    let m_half = m_total as f64 / 2.0;
    let reps = cfg.repetitions();
    let tau = round_threshold(m_half, cfg.epsilon, size_i);
    let mut yes = 0u64;
    let mut sub = vec![0u64; size_i];
    for _ in 0..reps {
        for (s, &c) in sub.iter_mut().zip(counts) {
            *s = binomial_half(c, rng);
        }
        if z_statistic(&sub, m_half, size_i) < tau {
            yes += 1;
        }
    }
    2 * yes > reps
}
