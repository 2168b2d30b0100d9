//! The generic splittable-class tester: recursive dyadic decomposition driven
//! by the small-L2 check, flattening estimation on the resulting partition,
//! and an offline projection decision on the learned histogram.

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classes::ClassSpec;
use crate::error::Result;
use crate::hist::{empirical_from_counts, flatten, Histogram, Interval, Partition};
use crate::l2::{check_small_l2_counts, L2CheckConfig, DEFAULT_C_STAT};
use crate::project::{class_distance, DistanceEstimate};
use crate::sampling::{trial_seed, SampleSource};

/// Tester verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Accept,
    Reject,
}

/// Why a rejection fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RejectReason {
    TooManySplits,
    OfflineDistance,
    SupportTooLarge,
    RejectionSamplingFailed,
}

/// Tunable constants; the derived fields of a run are computed from these.
#[derive(Debug, Clone, Copy)]
pub struct SplittableConfig {
    pub c_main: f64,
    pub c_stat: f64,
    pub c_learn: f64,
    /// Extra `1/eps^c` term in the main sample bound feeding the witness.
    pub kolmogorov_boost: u32,
}

impl Default for SplittableConfig {
    fn default() -> Self {
        SplittableConfig { c_main: 2.0, c_stat: DEFAULT_C_STAT, c_learn: 400.0, kolmogorov_boost: 0 }
    }
}

/// All derived quantities of one invocation.
#[derive(Debug, Clone, Copy)]
pub struct DerivedParams {
    pub n_padded: usize,
    pub gamma: f64,
    pub l_bound: usize,
    pub kappa: f64,
    pub delta: f64,
    pub m: u64,
}

pub fn derive_params(
    class: &ClassSpec,
    n: usize,
    eps: f64,
    cfg: &SplittableConfig,
) -> DerivedParams {
    let n_padded = n.next_power_of_two();
    let gamma = eps / 80.0;
    let l_bound = class.l_bound(gamma, n_padded);
    let kappa = eps / (160.0 * l_bound as f64);
    let delta = 1.0 / (10.0 * l_bound as f64);
    let nf = n_padded as f64;
    let mut budget = (1.0 / kappa).max((l_bound as f64 * nf).sqrt() / eps.powi(3));
    let boost = cfg.kolmogorov_boost.max(class.kolmogorov_boost());
    if boost > 0 {
        budget = budget.max(1.0 / eps.powi(boost as i32));
    }
    let m = (cfg.c_main * budget * nf.ln().max(1.0)).ceil() as u64;
    DerivedParams { n_padded, gamma, l_bound, kappa, delta, m: m.max(1) }
}

/// Per-leaf classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LeafKind {
    Flat,
    Light,
}

/// What the decomposition stage produced.
#[derive(Debug, Clone)]
pub struct RecursionReport {
    pub partition: Partition,
    pub kinds: Vec<LeafKind>,
    pub splits: usize,
    pub leaf_samples: Vec<u64>,
}

pub enum DecomposeOutcome {
    Partitioned(RecursionReport),
    TooManySplits,
}

/// Recursive bisection of `[1, n_padded]` on a fixed sample multiset.
///
/// An interval keeps recursing only while it holds enough samples; the
/// small-L2 check (at accuracy eps/40) decides flat-leaf versus split.
pub fn decompose(
    samples: &[usize],
    params: &DerivedParams,
    eps: f64,
    cfg: &SplittableConfig,
    rng: &mut ChaCha8Rng,
) -> DecomposeOutcome {
    let n = params.n_padded;
    let mut sorted: Vec<u32> = samples.iter().map(|&s| s as u32).collect();
    sorted.sort_unstable();
    let m = samples.len() as f64;
    let check_cfg =
        L2CheckConfig { epsilon: eps / 40.0, delta: params.delta, c_stat: cfg.c_stat };

    let count_in = |iv: Interval| -> u64 {
        let lo = sorted.partition_point(|&x| (x as usize) < iv.lo);
        let hi = sorted.partition_point(|&x| (x as usize) <= iv.hi);
        (hi - lo) as u64
    };
    let counts_in = |iv: Interval| -> Vec<u64> {
        let lo = sorted.partition_point(|&x| (x as usize) < iv.lo);
        let hi = sorted.partition_point(|&x| (x as usize) <= iv.hi);
        let mut counts = vec![0u64; iv.len()];
        for &x in &sorted[lo..hi] {
            counts[x as usize - iv.lo] += 1;
        }
        counts
    };

    let ln_inv_delta = (1.0 / params.delta).ln();
    let threshold = |iv: Interval| -> f64 {
        let stat = cfg.c_stat * (iv.len() as f64).sqrt() / (eps * eps) * ln_inv_delta;
        stat.max(params.kappa * m)
    };

    let mut splits = 0usize;
    let mut leaves: Vec<(Interval, LeafKind, u64)> = Vec::new();
    let mut stack = vec![Interval::new(1, n)];
    while let Some(iv) = stack.pop() {
        let m_i = count_in(iv);
        if (m_i as f64) < threshold(iv) {
            leaves.push((iv, LeafKind::Light, m_i));
            continue;
        }
        let flat = if iv.len() <= 1 {
            true
        } else {
            check_small_l2_counts(&counts_in(iv), &check_cfg, rng)
        };
        if flat {
            leaves.push((iv, LeafKind::Flat, m_i));
        } else {
            if splits >= params.l_bound {
                return DecomposeOutcome::TooManySplits;
            }
            splits += 1;
            let (l, r) = iv.bisect();
            stack.push(r);
            stack.push(l);
        }
    }
    leaves.sort_by_key(|(iv, _, _)| iv.lo);
    let kinds = leaves.iter().map(|l| l.1).collect();
    let leaf_samples = leaves.iter().map(|l| l.2).collect();
    let partition = Partition::new(leaves.into_iter().map(|l| l.0).collect()).unwrap();
    DecomposeOutcome::Partitioned(RecursionReport { partition, kinds, splits, leaf_samples })
}

/// Clips a partition of the padded domain back to `[1, n]`.
pub fn clip_partition(p: &Partition, n: usize) -> Partition {
    let mut ivs = Vec::new();
    for iv in p.intervals() {
        if iv.lo > n {
            break;
        }
        ivs.push(Interval::new(iv.lo, iv.hi.min(n)));
    }
    Partition::new(ivs).unwrap()
}

/// Estimates the flattening of the source on `p` from fresh samples.
pub fn learn_flattening(
    src: &mut dyn SampleSource,
    p: &Partition,
    eps: f64,
    c_learn: f64,
) -> Result<Histogram> {
    let n = p.n();
    let budget = (c_learn * p.len() as f64 / (eps * eps)).ceil() as u64;
    let mut counts = vec![0u64; n];
    for _ in 0..budget {
        let s = src.draw();
        if s <= n {
            counts[s - 1] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(crate::error::Error::EmptySamples);
    }
    let empirical = empirical_from_counts(&counts);
    Ok(flatten(&empirical, p)?)
}

/// Offline decision on an explicit histogram: accept iff the class oracle's
/// answer maps under its contract to "distance at most eps/10".
pub fn offline_check(
    d_hat: &Histogram,
    class: &ClassSpec,
    eps: f64,
    witness: Option<&Histogram>,
    witness_radius: f64,
) -> Result<(bool, f64)> {
    let oracle_eps = class.checker_eps(eps);
    let est = class_distance(d_hat, class.tag, dp_eps(eps), witness, witness_radius)?;
    Ok(match est {
        DistanceEstimate::Exact(v) => (v <= eps / 2.0, v),
        DistanceEstimate::Sandwich { delta, factor, additive } => {
            (delta <= factor * (eps / 10.0) + additive, delta)
        }
        DistanceEstimate::Binary { yes, .. } => {
            let _ = oracle_eps;
            (yes, if yes { 0.0 } else { f64::INFINITY })
        }
    })
}

/// Additive accuracy handed to the sandwich oracles.
fn dp_eps(eps: f64) -> f64 {
    eps / 40.0
}

/// Full outcome with diagnostics.
#[derive(Debug, Clone)]
pub struct TestOutcome {
    pub verdict: Verdict,
    pub reason: Option<RejectReason>,
    pub splits: usize,
    pub leaves: usize,
    pub flattening: Option<Histogram>,
    pub distance: Option<f64>,
    pub samples_consumed: u64,
    pub witness: Option<Histogram>,
}

impl TestOutcome {
    fn reject(reason: RejectReason, splits: usize, consumed: u64) -> Self {
        TestOutcome {
            verdict: Verdict::Reject,
            reason: Some(reason),
            splits,
            leaves: 0,
            flattening: None,
            distance: None,
            samples_consumed: consumed,
            witness: None,
        }
    }
}

/// Tests membership of the sampled distribution in `class` at distance `eps`.
pub fn test_splittable(
    src: &mut dyn SampleSource,
    n: usize,
    eps: f64,
    class: &ClassSpec,
    seed: u64,
) -> Result<TestOutcome> {
    test_splittable_with(src, n, eps, class, seed, &SplittableConfig::default(), None)
}

/// Oracle override for conditioned classes: `(d_hat, eps) -> (accept, value)`.
pub type OracleOverride<'a> = &'a dyn Fn(&Histogram, f64) -> Result<(bool, f64)>;

pub fn test_splittable_with(
    src: &mut dyn SampleSource,
    n: usize,
    eps: f64,
    class: &ClassSpec,
    seed: u64,
    cfg: &SplittableConfig,
    oracle: Option<OracleOverride<'_>>,
) -> Result<TestOutcome> {
    assert!(eps > 0.0 && eps <= 1.0, "eps in (0, 1]");
    let params = derive_params(class, n, eps, cfg);
    let mut rng = crate::sampling::test_rng(trial_seed(seed, 0x51));

    let start = src.consumed();
    let samples: Vec<usize> = (0..params.m).map(|_| src.draw()).collect();

    let report = match decompose(&samples, &params, eps, cfg, &mut rng) {
        DecomposeOutcome::Partitioned(r) => r,
        DecomposeOutcome::TooManySplits => {
            return Ok(TestOutcome::reject(
                RejectReason::TooManySplits,
                params.l_bound + 1,
                src.consumed() - start,
            ))
        }
    };

    let clipped = clip_partition(&report.partition, n);
    let d_hat = learn_flattening(src, &clipped, eps, cfg.c_learn)?;

    let needs_witness = oracle.is_none() && class.needs_kolmogorov_witness();
    let (witness, witness_radius) = if needs_witness {
        let mut counts = vec![0u64; n];
        for &s in &samples {
            if s <= n {
                counts[s - 1] += 1;
            }
        }
        let w = empirical_from_counts(&counts);
        let radius = ((20.0f64).ln() / (2.0 * params.m as f64)).sqrt();
        (Some(w), radius)
    } else {
        (None, 0.0)
    };

    let (accept, dist) = match oracle {
        Some(f) => f(&d_hat, eps)?,
        None => offline_check(&d_hat, class, eps, witness.as_ref(), witness_radius)?,
    };

    Ok(TestOutcome {
        verdict: if accept { Verdict::Accept } else { Verdict::Reject },
        reason: if accept { None } else { Some(RejectReason::OfflineDistance) },
        splits: report.splits,
        leaves: clipped.len(),
        flattening: Some(d_hat),
        distance: Some(dist),
        samples_consumed: src.consumed() - start,
        witness,
    })
}

/// Declared total budget of one invocation (decomposition plus learning);
/// the learning term depends on the realized leaf count `l`.
pub fn declared_budget(params: &DerivedParams, cfg: &SplittableConfig, leaves: usize, eps: f64) -> u64 {
    params.m + (cfg.c_learn * leaves as f64 / (eps * eps)).ceil() as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{ClassSpec, ClassTag, Direction};
    use crate::hist;
    use crate::sampling::sample;

    fn staircase(n: usize, levels: &[(usize, f64)]) -> Histogram {
        // levels: (width, relative height), normalized; non-increasing input
        let mut raw = Vec::with_capacity(n);
        for &(w, h) in levels {
            raw.extend(std::iter::repeat(h).take(w));
        }
        raw.resize(n, 0.0);
        let t: f64 = raw.iter().sum();
        Histogram::new(raw.iter().map(|x| x / t).collect()).unwrap()
    }

    #[test]
    fn uniform_roots_as_single_flat_leaf() {
        let n = 256;
        let eps = 0.25;
        let class = ClassSpec::new(ClassTag::Monotone(Direction::NonIncreasing));
        let cfg = SplittableConfig::default();
        let params = derive_params(&class, n, eps, &cfg);
        let d = hist::uniform(n);
        let mut singles = 0;
        for t in 0..100u64 {
            let mut src = sample(&d, trial_seed(7, t));
            let samples: Vec<usize> = (0..params.m).map(|_| src.draw()).collect();
            let mut rng = crate::sampling::test_rng(trial_seed(8, t));
            match decompose(&samples, &params, eps, &cfg, &mut rng) {
                DecomposeOutcome::Partitioned(r) => {
                    if r.partition.len() == 1 && r.kinds[0] == LeafKind::Flat {
                        singles += 1;
                    }
                }
                DecomposeOutcome::TooManySplits => {}
            }
        }
        assert!(singles >= 90, "single-flat-leaf rate {singles}/100");
    }

    #[test]
    fn point_mass_terminates_cleanly() {
        let n = 256;
        let eps = 0.25;
        let class = ClassSpec::new(ClassTag::Monotone(Direction::NonIncreasing));
        let cfg = SplittableConfig::default();
        let params = derive_params(&class, n, eps, &cfg);
        let d = hist::point_mass(n, 1);
        let mut src = sample(&d, 5);
        let samples: Vec<usize> = (0..params.m).map(|_| src.draw()).collect();
        let mut rng = crate::sampling::test_rng(6);
        match decompose(&samples, &params, eps, &cfg, &mut rng) {
            DecomposeOutcome::Partitioned(r) => {
                assert!(r.splits <= params.l_bound);
                // all mass sits in flat singleton or light leaves
                for ((iv, kind), &cnt) in r
                    .partition
                    .intervals()
                    .iter()
                    .zip(&r.kinds)
                    .zip(&r.leaf_samples)
                {
                    if cnt > params.m / 2 {
                        assert!(*kind == LeafKind::Light || iv.len() == 1);
                    }
                }
            }
            DecomposeOutcome::TooManySplits => panic!("unexpected split overflow"),
        }
    }

    #[test]
    fn empty_threshold_single_light_leaf() {
        // no samples pass the threshold: the root is kept as one light leaf
        let class = ClassSpec::new(ClassTag::Monotone(Direction::NonIncreasing));
        let cfg = SplittableConfig::default();
        let params = derive_params(&class, 64, 0.5, &cfg);
        let mut rng = crate::sampling::test_rng(1);
        match decompose(&[1, 2, 3], &params, 0.5, &cfg, &mut rng) {
            DecomposeOutcome::Partitioned(r) => {
                assert_eq!(r.partition.len(), 1);
                assert_eq!(r.kinds[0], LeafKind::Light);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn learn_flattening_single_piece_is_uniform() {
        let d = hist::Histogram::new(vec![0.4, 0.1, 0.3, 0.2]).unwrap();
        let mut src = sample(&d, 11);
        let p = Partition::single(4);
        let f = learn_flattening(&mut src, &p, 0.2, 50.0).unwrap();
        for m in f.masses() {
            assert!((m - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn learn_flattening_piece_masses_concentrate() {
        let d = hist::uniform(64);
        let p = Partition::equal(64, 4);
        let mut ok = 0;
        for t in 0..50u64 {
            let mut src = sample(&d, trial_seed(21, t));
            let f = learn_flattening(&mut src, &p, 0.2, 400.0).unwrap();
            let close = p
                .intervals()
                .iter()
                .all(|iv| (f.interval_mass(*iv) - 0.25).abs() <= 0.05);
            if close {
                ok += 1;
            }
        }
        assert!(ok >= 45, "{ok}/50 trials had all piece masses within 0.05");
    }

    #[test]
    fn offline_check_monotone_cases() {
        let class = ClassSpec::new(ClassTag::Monotone(Direction::NonIncreasing));
        let d = hist::Histogram::new(vec![0.5, 0.3, 0.2]).unwrap();
        let (ok, v) = offline_check(&d, &class, 0.5, None, 0.0).unwrap();
        assert!(ok && v < 1e-9);
        // (0.2, 0.8) padded into n = 8: exact distance stays 0.6 > 9 eps/10
        let mut masses = vec![0.2, 0.8];
        masses.extend(std::iter::repeat(0.0).take(6));
        let d = hist::Histogram::new(masses).unwrap();
        let (ok, v) = offline_check(&d, &class, 0.5, None, 0.0).unwrap();
        assert!(!ok);
        assert!((v - 0.6).abs() < 1e-6, "distance {v}");
    }

    #[test]
    fn determinism_same_seed_same_outcome() {
        let d = staircase(64, &[(8, 8.0), (24, 3.0), (32, 1.0)]);
        let class = ClassSpec::new(ClassTag::Monotone(Direction::NonIncreasing));
        let run = || {
            let mut src = sample(&d, 33);
            test_splittable(&mut src, 64, 0.3, &class, 99).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.verdict, b.verdict);
        assert_eq!(a.splits, b.splits);
        assert_eq!(a.samples_consumed, b.samples_consumed);
        assert_eq!(
            a.flattening.as_ref().map(|h| h.masses().to_vec()),
            b.flattening.as_ref().map(|h| h.masses().to_vec())
        );
    }

    #[test]
    fn budget_respected_exactly() {
        let d = staircase(128, &[(16, 5.0), (112, 1.0)]);
        let class = ClassSpec::new(ClassTag::Monotone(Direction::NonIncreasing));
        let cfg = SplittableConfig::default();
        let params = derive_params(&class, 128, 0.25, &cfg);
        let mut src = sample(&d, 3);
        let out = test_splittable(&mut src, 128, 0.25, &class, 17).unwrap();
        assert_eq!(
            out.samples_consumed,
            declared_budget(&params, &cfg, out.leaves, 0.25),
            "consumed {} vs declared", out.samples_consumed
        );
    }

    #[test]
    fn vacuous_epsilon_one_does_not_crash() {
        let d = hist::uniform(32);
        let class = ClassSpec::new(ClassTag::Unimodal);
        let mut src = sample(&d, 4);
        let out = test_splittable(&mut src, 32, 1.0, &class, 5).unwrap();
        let cfg = SplittableConfig::default();
        let params = derive_params(&class, 32, 1.0, &cfg);
        assert!(out.samples_consumed <= declared_budget(&params, &cfg, out.leaves.max(32), 1.0));
    }
}
