//! Effective-support trimming in front of the main tester: estimate the
//! support window from a DKW-sized sample, reject oversized windows, then
//! delegate to the splittable tester on the conditioned source.

use crate::classes::{ClassSpec, ClassTag};
use crate::error::{Error, Result};
use crate::hist::{empirical_from_counts, Histogram, Interval};
use crate::sampling::{trial_seed, SampleSource};
use crate::splittable::{
    test_splittable_with, RejectReason, SplittableConfig, TestOutcome, Verdict,
};

/// DKW sample constant: `m0 = ceil(C_DKW / eps^2)` gives Kolmogorov accuracy
/// eps/60 with probability 23/24.
pub const C_DKW: f64 = 1800.0 * 3.8712; // 1800 ln(48)

/// Effective-support bound of a PBD: additive-Chernoff half-width around the
/// mean, `2 ceil(sqrt((n/2) ln(2/eps))) + 1`.
pub fn pbd_effective_support_bound(n: usize, eps: f64) -> usize {
    assert!(eps > 0.0 && eps < 2.0);
    let half = ((n as f64 / 2.0) * (2.0 / eps).ln()).sqrt();
    2 * half.ceil() as usize + 1
}

/// Largest prefix and suffix of mass at most eps/30 are trimmed away;
/// errors when nothing remains.
pub fn effective_support_interval(d_hat: &Histogram, eps: f64) -> Result<Interval> {
    let n = d_hat.n();
    let cut = eps / 30.0;
    let mut lo = 1usize;
    let mut acc = 0.0;
    while lo <= n && acc + d_hat.mass(lo) <= cut {
        acc += d_hat.mass(lo);
        lo += 1;
    }
    let mut hi = n;
    acc = 0.0;
    while hi >= lo && acc + d_hat.mass(hi) <= cut {
        acc += d_hat.mass(hi);
        hi -= 1;
    }
    if lo > hi {
        return Err(Error::InvalidParameter(
            "effective support empty after trimming".into(),
        ));
    }
    Ok(Interval::new(lo, hi))
}

/// First draw landing in `iv`, or `None` once the per-draw budget runs out.
pub fn rejection_sample(
    src: &mut dyn SampleSource,
    iv: Interval,
    per_draw_budget: u64,
) -> Option<usize> {
    for _ in 0..per_draw_budget {
        let s = src.draw();
        if iv.contains(s) {
            return Some(s);
        }
    }
    None
}

struct ConditionedSource<'a> {
    inner: &'a mut dyn SampleSource,
    iv: Interval,
    budget: u64,
    failed: bool,
    drawn: u64,
}

impl SampleSource for ConditionedSource<'_> {
    fn draw(&mut self) -> usize {
        self.drawn += 1;
        match rejection_sample(self.inner, self.iv, self.budget) {
            Some(s) => s - self.iv.lo + 1,
            None => {
                self.failed = true;
                1 // placeholder; the run is voided by the failure flag
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

/// One trimming-plus-delegation round.
fn single_round(
    src: &mut dyn SampleSource,
    n: usize,
    eps: f64,
    class: &ClassSpec,
    seed: u64,
    cfg: &SplittableConfig,
) -> Result<TestOutcome> {
    let tau = class
        .m_bound(n, eps / 60.0)
        .ok_or_else(|| Error::InvalidParameter(format!("{} has no support bound", class.tag)))?;
    let m0 = (C_DKW / (eps * eps)).ceil() as u64;
    let start = src.consumed();
    let mut counts = vec![0u64; n];
    for _ in 0..m0 {
        counts[src.draw() - 1] += 1;
    }
    let d_hat = empirical_from_counts(&counts);
    let iv = match effective_support_interval(&d_hat, eps) {
        Ok(iv) => iv,
        Err(_) => {
            let mut out = TestOutcome::reject_support(src.consumed() - start);
            out.reason = Some(RejectReason::SupportTooLarge);
            return Ok(out);
        }
    };
    if iv.len() > tau {
        return Ok(TestOutcome::reject_support(src.consumed() - start));
    }

    let mass_inside = d_hat.interval_mass(iv);
    let budget = 64 * (1.0 / mass_inside.max(1e-6)).ceil() as u64;
    let eps_inner = 7.0 * eps / 10.0;
    let mut cond = ConditionedSource { inner: src, iv, budget, failed: false, drawn: 0 };

    // conditioned-class oracle: distance of the learned conditional to the
    // class members carrying enough mass on the window
    let filter_eps = eps / 4.0;
    let binomial = class.tag == ClassTag::Binomial;
    let oracle = move |d_inner: &Histogram, e: f64| -> Result<(bool, f64)> {
        let mut full = vec![0.0f64; n];
        for (off, &m) in d_inner.masses().iter().enumerate() {
            full[iv.lo - 1 + off] = m;
        }
        let embedded = Histogram::new(full)?;
        let tau_val = if binomial {
            crate::project::pbd::dist_to_binomial(&embedded, filter_eps, iv)?
        } else {
            crate::project::pbd::dist_to_pbd(&embedded, filter_eps, iv)?
        };
        let threshold = (1.0 + 2.0 * filter_eps) * (e / 10.0)
            + filter_eps / 100.0
            + crate::project::pbd::COVER_SLACK;
        Ok((tau_val <= threshold, tau_val))
    };

    let mut out = test_splittable_with(
        &mut cond,
        iv.len(),
        eps_inner,
        class,
        trial_seed(seed, 0xeff),
        cfg,
        Some(&oracle),
    )?;
    if cond.failed {
        out.verdict = Verdict::Reject;
        out.reason = Some(RejectReason::RejectionSamplingFailed);
    }
    out.samples_consumed = src.consumed() - start;
    Ok(out)
}

impl TestOutcome {
    fn reject_support(consumed: u64) -> Self {
        TestOutcome {
            verdict: Verdict::Reject,
            reason: Some(RejectReason::SupportTooLarge),
            splits: 0,
            leaves: 0,
            flattening: None,
            distance: None,
            samples_consumed: consumed,
            witness: None,
        }
    }
}

/// Majority over three independent trimming-plus-delegation rounds.
pub fn test_effective_splittable(
    src: &mut dyn SampleSource,
    n: usize,
    eps: f64,
    class: &ClassSpec,
    seed: u64,
) -> Result<TestOutcome> {
    test_effective_splittable_with(src, n, eps, class, seed, &SplittableConfig::default())
}

pub fn test_effective_splittable_with(
    src: &mut dyn SampleSource,
    n: usize,
    eps: f64,
    class: &ClassSpec,
    seed: u64,
    cfg: &SplittableConfig,
) -> Result<TestOutcome> {
    let rounds = 3;
    let start = src.consumed();
    let mut accepts = 0;
    let mut last: Option<TestOutcome> = None;
    for r in 0..rounds {
        let out = single_round(src, n, eps, class, trial_seed(seed, r as u64), cfg)?;
        if out.verdict == Verdict::Accept {
            accepts += 1;
        }
        last = Some(out);
    }
    let mut out = last.unwrap();
    out.verdict = if 2 * accepts > rounds { Verdict::Accept } else { Verdict::Reject };
    if out.verdict == Verdict::Accept {
        out.reason = None;
    }
    out.samples_consumed = src.consumed() - start;
    Ok(out)
}
