//! Generic tolerant tester: support check, semi-agnostic learning, a plug-in
//! closeness estimate on the support window, and an offline projection
//! decision combining the two distance estimates.

use crate::classes::ClassSpec;
use crate::error::{Error, Result};
use crate::hist::{conditional_restrict, empirical_from_counts, Histogram, Interval};
use crate::project::{class_distance, project_onto, DistanceEstimate};
use crate::sampling::SampleSource;
use crate::splittable::Verdict;

/// Derived parameters of one tolerant invocation.
#[derive(Debug, Clone, Copy)]
pub struct TolerantConfig {
    pub eps1: f64,
    pub eps2: f64,
    pub kappa: f64,
    pub c_agn: f64,
    pub eps: f64,
    pub theta: f64,
    pub tau_t: f64,
    /// Whether `eps2 >= (1 + (5c+6) kappa/(kappa-1)) eps1` holds.
    pub precondition_ok: bool,
}

impl TolerantConfig {
    pub fn new(eps1: f64, eps2: f64) -> Result<Self> {
        Self::with_kappa(eps1, eps2, 2.0, 3.0)
    }

    pub fn with_kappa(eps1: f64, eps2: f64, kappa: f64, c_agn: f64) -> Result<Self> {
        if !(eps1 >= 0.0 && eps1 < eps2 && eps2 <= 2.0 && kappa > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= eps1 < eps2 and kappa > 1 (got {eps1}, {eps2}, {kappa})"
            )));
        }
        let eps = (eps2 - eps1) / (17.0 * kappa);
        let theta = eps2 - ((6.0 + c_agn) * eps1 + 11.0 * eps);
        let tau_t = (3.0 + c_agn) * eps1 + 5.0 * eps;
        let factor = 1.0 + (5.0 * c_agn + 6.0) * kappa / (kappa - 1.0);
        let precondition_ok = eps2 >= factor * eps1;
        Ok(TolerantConfig { eps1, eps2, kappa, c_agn, eps, theta, tau_t, precondition_ok })
    }
}

/// Plug-in closeness estimator constant: samples = ceil(C * m / eps^2).
pub const C_CLOSE: f64 = 16.0;
/// Empirical-learning constant of the semi-agnostic learner.
pub const C_AGN: f64 = 16.0;

/// Estimates `||D - known||_1` within eps (with high probability) from
/// `ceil(C_CLOSE * m / eps^2)` samples, with a half-L1 bias correction.
pub fn closeness_estimate(
    src: &mut dyn SampleSource,
    known: &Histogram,
    domain_size: usize,
    eps: f64,
) -> f64 {
    let m = domain_size.max(1);
    let s = (C_CLOSE * m as f64 / (eps * eps)).ceil() as u64;
    let mut counts = vec![0u64; known.n()];
    for _ in 0..s {
        let x = src.draw();
        if x <= known.n() {
            counts[x - 1] += 1;
        }
    }
    let emp = empirical_from_counts(&counts);
    let raw: f64 = emp
        .masses()
        .iter()
        .zip(known.masses())
        .map(|(a, b)| (a - b).abs())
        .sum();
    // expected absolute deviation per cell under the null, subtracted out
    let sf = s as f64;
    let bias: f64 = known
        .masses()
        .iter()
        .map(|&q| (2.0 * q * (1.0 - q) / (std::f64::consts::PI * sf)).sqrt())
        .sum();
    (raw - bias).clamp(0.0, 2.0)
}

/// Empirical estimate projected onto the class: a `(c, eps)`-semi-agnostic
/// learner for every class with a projection oracle.
pub fn semi_agnostic_learn(
    src: &mut dyn SampleSource,
    n: usize,
    eps: f64,
    delta: f64,
    class: &ClassSpec,
) -> Result<Histogram> {
    let boost = (1.0f64 / delta).ln().max(1.0) / (10.0f64).ln();
    let s = (C_AGN * n as f64 / (eps * eps) * boost.max(1.0)).ceil() as u64;
    let mut counts = vec![0u64; n];
    for _ in 0..s {
        let x = src.draw();
        if x <= n {
            counts[x - 1] += 1;
        }
    }
    let emp = empirical_from_counts(&counts);
    project_onto(&emp, class.tag, eps)
}

/// Distinguishes `L1(D, C) <= eps1` from `> eps2` at confidence 2/3.
pub fn tolerant_test(
    src: &mut dyn SampleSource,
    n: usize,
    eps1: f64,
    eps2: f64,
    class: &ClassSpec,
    _seed: u64,
) -> Result<Verdict> {
    let cfg = TolerantConfig::new(eps1, eps2)?;
    let eps = cfg.eps;

    // step 1: Kolmogorov-learn and bound the effective support
    let m0 = ((48.0f64).ln() / (2.0 * (eps / 2.0) * (eps / 2.0))).ceil() as u64;
    let mut counts = vec![0u64; n];
    for _ in 0..m0 {
        let x = src.draw();
        if x <= n {
            counts[x - 1] += 1;
        }
    }
    let d_tilde = empirical_from_counts(&counts);
    let need = 1.0 - 1.5 * eps1 - eps;
    let iv = smallest_window(&d_tilde, need);
    let cap = class.m_bound(n, eps1.max(1e-6)).unwrap_or(n);
    if iv.len() > cap {
        return Ok(Verdict::Reject);
    }

    // step 2: semi-agnostic learning
    let d_hat = semi_agnostic_learn(src, n, eps, 0.1, class)?;

    // step 3: closeness of the conditioned pair
    let d_hat_iv = match conditional_restrict(&d_hat, iv) {
        Ok(h) => h,
        Err(_) => return Ok(Verdict::Reject), // hypothesis puts no mass on I
    };
    struct Cond<'a> {
        inner: &'a mut dyn SampleSource,
        iv: Interval,
        drawn: u64,
    }
    impl SampleSource for Cond<'_> {
        fn draw(&mut self) -> usize {
            loop {
                let s = self.inner.draw();
                self.drawn += 1;
                if self.iv.contains(s) {
                    return s - self.iv.lo + 1;
                }
                if self.drawn > 200_000_000 {
                    return 1;
                }
            }
        }
        fn consumed(&self) -> u64 {
            self.drawn
        }
        fn n(&self) -> usize {
            self.iv.len()
        }
    }
    let mut cond = Cond { inner: src, iv, drawn: 0 };
    let delta_hat = closeness_estimate(&mut cond, &d_hat_iv, iv.len(), eps / 6.0);

    // step 4: hypothesis must keep its mass on the window
    if d_hat.interval_mass(iv) < 1.0 - cfg.tau_t {
        return Ok(Verdict::Reject);
    }

    // step 5: offline distance of the hypothesis to the class
    let delta = match class_distance(&d_hat, class.tag, eps, None, 0.0) {
        Ok(DistanceEstimate::Exact(v)) => v,
        Ok(DistanceEstimate::Sandwich { delta, .. }) => delta,
        Ok(DistanceEstimate::Binary { yes, .. }) => {
            if yes {
                0.0
            } else {
                2.0
            }
        }
        Err(Error::InvalidParameter(_)) => 0.0, // learner projected already
        Err(e) => return Err(e),
    };

    // step 6
    Ok(if delta + delta_hat > cfg.theta { Verdict::Reject } else { Verdict::Accept })
}

/// Smallest contiguous window carrying more than `need` empirical mass.
fn smallest_window(d: &Histogram, need: f64) -> Interval {
    let n = d.n();
    let cdf = d.cdf();
    let mass = |lo: usize, hi: usize| -> f64 {
        cdf[hi - 1] - if lo >= 2 { cdf[lo - 2] } else { 0.0 }
    };
    let mut best = Interval::new(1, n);
    let mut lo = 1usize;
    for hi in 1..=n {
        while lo < hi && mass(lo + 1, hi) > need {
            lo += 1;
        }
        if mass(lo, hi) > need && hi - lo < best.hi - best.lo {
            best = Interval::new(lo, hi);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{ClassTag, Direction};
    use crate::hist;
    use crate::sampling::{sample, trial_seed};

    #[test]
    fn config_formulas() {
        let cfg = TolerantConfig::new(0.01, 0.5).unwrap();
        assert!((cfg.eps - 0.49 / 34.0).abs() < 1e-12);
        assert!((cfg.theta - (0.5 - (9.0 * 0.01 + 11.0 * cfg.eps))).abs() < 1e-12);
        assert!((cfg.tau_t - (6.0 * 0.01 + 5.0 * cfg.eps)).abs() < 1e-12);
        assert!(cfg.precondition_ok); // 0.5 >= 43 * 0.01
        let cfg = TolerantConfig::new(0.02, 0.5).unwrap();
        assert!(!cfg.precondition_ok); // 0.5 < 43 * 0.02
    }

    #[test]
    fn theta_positive_whenever_precondition_holds() {
        for &kappa in &[1.5, 2.0, 4.0, 8.0] {
            for &eps1 in &[1e-4, 1e-3, 5e-3, 0.01] {
                let factor = 1.0 + 21.0 * kappa / (kappa - 1.0);
                for &mult in &[1.0, 1.5, 4.0] {
                    let eps2 = (factor * eps1 * mult).min(1.0);
                    if eps2 <= eps1 {
                        continue;
                    }
                    let cfg = TolerantConfig::with_kappa(eps1, eps2, kappa, 3.0).unwrap();
                    if cfg.precondition_ok {
                        assert!(cfg.theta > 0.0, "theta {} at {eps1},{eps2},{kappa}", cfg.theta);
                    }
                }
            }
        }
    }

    #[test]
    fn closeness_estimate_null_and_disjoint() {
        let d = hist::uniform(100);
        let mut hits = 0;
        for t in 0..200u64 {
            let mut src = sample(&d, trial_seed(61, t));
            let est = closeness_estimate(&mut src, &d, 100, 0.2);
            if est <= 0.2 {
                hits += 1;
            }
        }
        assert!(hits >= 190, "null closeness ok in {hits}/200");

        // disjoint supports: estimate near 2
        let mut a = vec![0.0; 40];
        for slot in a.iter_mut().take(20) {
            *slot = 0.05;
        }
        let mut b = vec![0.0; 40];
        for slot in b.iter_mut().skip(20) {
            *slot = 0.05;
        }
        let da = hist::Histogram::new(a).unwrap();
        let db = hist::Histogram::new(b).unwrap();
        let mut ok = 0;
        for t in 0..50u64 {
            let mut src = sample(&da, trial_seed(62, t));
            let est = closeness_estimate(&mut src, &db, 40, 0.2);
            if est >= 2.0 - 0.2 {
                ok += 1;
            }
        }
        assert!(ok >= 45, "disjoint closeness ok in {ok}/50");

        // eps = 2 stays in range
        let mut src = sample(&d, 9);
        let est = closeness_estimate(&mut src, &d, 100, 2.0);
        assert!((0.0..=2.0).contains(&est));
    }

    #[test]
    fn learner_on_in_class_target() {
        let masses = {
            let mut raw = vec![4.0; 8];
            raw.extend(vec![2.0; 8]);
            raw.extend(vec![1.0; 16]);
            let t: f64 = raw.iter().sum();
            raw.iter().map(|x| x / t).collect::<Vec<_>>()
        };
        let d = hist::Histogram::new(masses).unwrap();
        let class = ClassSpec::new(ClassTag::Monotone(Direction::NonIncreasing));
        let mut ok = 0;
        for t in 0..30u64 {
            let mut src = sample(&d, trial_seed(63, t));
            let out = semi_agnostic_learn(&mut src, 32, 0.2, 0.1, &class).unwrap();
            if crate::hist::l1_distance(&out, &d).unwrap() <= 0.2 {
                ok += 1;
            }
        }
        assert!(ok >= 27, "learner within eps in {ok}/30");
    }

    #[test]
    fn learner_point_mass_monotone() {
        let d = hist::point_mass(16, 1);
        let class = ClassSpec::new(ClassTag::Monotone(Direction::NonIncreasing));
        let mut src = sample(&d, 5);
        let out = semi_agnostic_learn(&mut src, 16, 0.5, 0.5, &class).unwrap();
        assert!(crate::classes::is_member(&out, class.tag).unwrap());
        // point mass is itself monotone non-increasing: OPT = 0
        assert!(crate::hist::l1_distance(&out, &d).unwrap() <= 3.0 * 0.0 + 0.5);
    }

    #[test]
    fn smallest_window_finds_core() {
        let d = hist::Histogram::new(vec![0.05, 0.0, 0.4, 0.5, 0.0, 0.05]).unwrap();
        let iv = smallest_window(&d, 0.85);
        assert_eq!((iv.lo, iv.hi), (3, 4));
    }
}
