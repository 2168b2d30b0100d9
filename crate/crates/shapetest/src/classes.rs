//! Shape classes: tags, definitional membership checks, and the per-class
//! splittability / effective-support bounds the testers consume.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hist::{Histogram, PROB_TOL};

/// Monotone direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    NonIncreasing,
    NonDecreasing,
}

/// The supported shape classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ClassTag {
    Monotone(Direction),
    Unimodal,
    TModal(usize),
    Convex,
    Concave,
    LogConcave,
    Mhr,
    HistogramT(usize),
    PiecewisePoly { t: usize, d: usize },
    Pbd,
    Binomial,
}

impl std::fmt::Display for ClassTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClassTag::Monotone(Direction::NonIncreasing) => write!(f, "monotone"),
            ClassTag::Monotone(Direction::NonDecreasing) => write!(f, "monotone-nondecreasing"),
            ClassTag::Unimodal => write!(f, "unimodal"),
            ClassTag::TModal(t) => write!(f, "tmodal-{t}"),
            ClassTag::Convex => write!(f, "convex"),
            ClassTag::Concave => write!(f, "concave"),
            ClassTag::LogConcave => write!(f, "logconcave"),
            ClassTag::Mhr => write!(f, "mhr"),
            ClassTag::HistogramT(t) => write!(f, "histogram-{t}"),
            ClassTag::PiecewisePoly { t, d } => write!(f, "piecewise-{t}-{d}"),
            ClassTag::Pbd => write!(f, "pbd"),
            ClassTag::Binomial => write!(f, "binomial"),
        }
    }
}

impl ClassTag {
    /// Parses the CLI spelling of a tag, e.g. `monotone`, `tmodal-3`, `piecewise-2-1`.
    pub fn parse(s: &str) -> Result<ClassTag> {
        let bad = || Error::InvalidParameter(format!("unknown class tag '{s}'"));
        Ok(match s {
            "monotone" => ClassTag::Monotone(Direction::NonIncreasing),
            "monotone-nondecreasing" => ClassTag::Monotone(Direction::NonDecreasing),
            "unimodal" => ClassTag::Unimodal,
            "convex" => ClassTag::Convex,
            "concave" => ClassTag::Concave,
            "logconcave" => ClassTag::LogConcave,
            "mhr" => ClassTag::Mhr,
            "pbd" => ClassTag::Pbd,
            "binomial" => ClassTag::Binomial,
            _ => {
                if let Some(t) = s.strip_prefix("tmodal-") {
                    ClassTag::TModal(t.parse().map_err(|_| bad())?)
                } else if let Some(t) = s.strip_prefix("histogram-") {
                    ClassTag::HistogramT(t.parse().map_err(|_| bad())?)
                } else if let Some(rest) = s.strip_prefix("piecewise-") {
                    let mut it = rest.splitn(2, '-');
                    let t = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                    let d = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                    ClassTag::PiecewisePoly { t, d }
                } else {
                    return Err(bad());
                }
            }
        })
    }
}

/// A class bundled with its tester-facing bound functions.
///
/// `L(gamma, n)` bounds the number of pieces in a dyadic light-or-flat
/// decomposition of any member; `M(n, eps)` bounds the eps-effective support
/// for concentrated classes. Both bounds use desk-calibrated constants kept
/// in this module.
#[derive(Debug, Clone, Copy)]
pub struct ClassSpec {
    pub tag: ClassTag,
}

/// Scale for the monotone splittability bound `ln^2(n) / (scale * gamma)`.
const MONOTONE_L_DIV: f64 = 192.0;
/// Scale for the MHR decomposability bound `ln(n/gamma) / (scale * gamma)`.
const MHR_L_DIV: f64 = 16.0;

/// Dyadic refinement multiplier for non-dyadic decompositions.
fn dyadic_factor(n: usize) -> usize {
    2 * (n.max(2) as f64).log2().ceil() as usize + 2
}

fn monotone_l(gamma: f64, n: usize) -> usize {
    let ln = (n.max(2) as f64).ln();
    ((ln * ln / (MONOTONE_L_DIV * gamma)).ceil() as usize).max(1)
}

impl ClassSpec {
    pub fn new(tag: ClassTag) -> Self {
        ClassSpec { tag }
    }

    /// Splittability bound `L(gamma, n)`: non-increasing in gamma, capped at `n`
    /// (a partition of `[1,n]` can never have more than `n` pieces).
    pub fn l_bound(&self, gamma: f64, n: usize) -> usize {
        let df = dyadic_factor(n);
        let raw = match self.tag {
            ClassTag::Monotone(_) => monotone_l(gamma, n),
            ClassTag::Unimodal | ClassTag::LogConcave | ClassTag::Concave | ClassTag::Convex => {
                2 * monotone_l(gamma, n) * df
            }
            ClassTag::TModal(t) => (t + 1) * monotone_l(gamma, n) * df,
            ClassTag::Mhr => {
                let ln = (n.max(2) as f64 / gamma).ln();
                ((ln / (MHR_L_DIV * gamma)).ceil() as usize).max(1) * df
            }
            ClassTag::HistogramT(t) => t.max(1) * df,
            ClassTag::PiecewisePoly { t, d } => t.max(1) * (d + 1) * monotone_l(gamma, n) * df,
            // conditioned PBDs are unimodal
            ClassTag::Pbd | ClassTag::Binomial => 2 * monotone_l(gamma, n) * df,
        };
        raw.min(n).max(1)
    }

    /// Effective-support bound `M(n, eps)`, when the class concentrates.
    pub fn m_bound(&self, n: usize, eps: f64) -> Option<usize> {
        match self.tag {
            ClassTag::Pbd | ClassTag::Binomial => {
                Some(crate::effective::pbd_effective_support_bound(n, eps))
            }
            _ => None,
        }
    }

    /// Whether the offline checker needs a Kolmogorov-accurate empirical witness.
    pub fn needs_kolmogorov_witness(&self) -> bool {
        matches!(self.tag, ClassTag::Mhr | ClassTag::LogConcave)
    }

    /// Exponent `c` of the extra `1/eps^c` sample term feeding the witness.
    pub fn kolmogorov_boost(&self) -> u32 {
        match self.tag {
            ClassTag::Mhr => 6,
            ClassTag::LogConcave => 4,
            _ => 0,
        }
    }

    /// Accuracy parameter handed to the binary MHR/log-concave checkers when the
    /// tester needs the `(eps/10, 9 eps/10)` decision of the offline stage.
    pub fn checker_eps(&self, eps: f64) -> f64 {
        match self.tag {
            ClassTag::Mhr => eps / 4.0,
            ClassTag::LogConcave => eps / 2.0,
            _ => eps,
        }
    }

    /// Exact definitional membership check.
    pub fn is_member(&self, d: &Histogram) -> Result<bool> {
        is_member(d, self.tag)
    }
}

/// Definitional membership for a pmf; errors for PBD/Binomial (membership is
/// not decidable from the pmf alone; use the distance oracle instead).
pub fn is_member(d: &Histogram, tag: ClassTag) -> Result<bool> {
    let m = d.masses();
    Ok(match tag {
        ClassTag::Monotone(dir) => is_monotone(m, dir),
        ClassTag::Unimodal => is_single_peaked(m),
        ClassTag::TModal(t) => mode_count(m) <= t,
        ClassTag::Convex => is_convex(m),
        ClassTag::Concave => is_concave(m),
        ClassTag::LogConcave => is_log_concave(m),
        ClassTag::Mhr => is_mhr(m),
        ClassTag::HistogramT(t) => piece_count_constant(d) <= t,
        ClassTag::PiecewisePoly { t, d: deg } => piece_count_poly(m, deg) <= t,
        ClassTag::Pbd | ClassTag::Binomial => {
            return Err(Error::UnsupportedMembership(tag.to_string()))
        }
    })
}

fn is_monotone(m: &[f64], dir: Direction) -> bool {
    match dir {
        Direction::NonIncreasing => m.windows(2).all(|w| w[1] <= w[0] + PROB_TOL),
        Direction::NonDecreasing => m.windows(2).all(|w| w[1] >= w[0] - PROB_TOL),
    }
}

/// Single peak: non-decreasing, then non-increasing.
fn is_single_peaked(m: &[f64]) -> bool {
    let mut falling = false;
    for w in m.windows(2) {
        if w[1] > w[0] + PROB_TOL {
            if falling {
                return false;
            }
        } else if w[1] < w[0] - PROB_TOL {
            falling = true;
        }
    }
    true
}

/// Number of strict direction alternations (valleys count as modes).
pub fn mode_count(m: &[f64]) -> usize {
    let mut dirs = Vec::new();
    for w in m.windows(2) {
        if w[1] > w[0] + PROB_TOL {
            dirs.push(1i8);
        } else if w[1] < w[0] - PROB_TOL {
            dirs.push(-1i8);
        }
    }
    let mut count = 0;
    for w in dirs.windows(2) {
        if w[0] != w[1] {
            count += 1;
        }
    }
    count
}

/// Support is an interval: no interior zero between two positive points.
fn support_is_interval(m: &[f64]) -> bool {
    let first = m.iter().position(|&x| x > PROB_TOL);
    let last = m.iter().rposition(|&x| x > PROB_TOL);
    match (first, last) {
        (Some(a), Some(b)) => m[a..=b].iter().all(|&x| x > PROB_TOL),
        _ => true,
    }
}

fn is_log_concave(m: &[f64]) -> bool {
    if !support_is_interval(m) {
        return false;
    }
    for k in 1..m.len().saturating_sub(1) {
        let lhs = m[k] * m[k];
        let rhs = m[k - 1] * m[k + 1];
        if lhs < rhs * (1.0 - 1e-9) - 1e-15 {
            return false;
        }
    }
    true
}

fn is_concave(m: &[f64]) -> bool {
    if !support_is_interval(m) {
        return false;
    }
    for k in 1..m.len().saturating_sub(1) {
        if m[k - 1] > PROB_TOL && m[k + 1] > PROB_TOL && 2.0 * m[k] < m[k - 1] + m[k + 1] - PROB_TOL
        {
            return false;
        }
    }
    true
}

fn is_convex(m: &[f64]) -> bool {
    if !support_is_interval(m) {
        return false;
    }
    for k in 1..m.len().saturating_sub(1) {
        if m[k - 1] > PROB_TOL && m[k + 1] > PROB_TOL && 2.0 * m[k] > m[k - 1] + m[k + 1] + PROB_TOL
        {
            return false;
        }
    }
    true
}

/// Hazard `H(i) = D(i) / D([i, n])` non-decreasing on the interval from first
/// to last nonzero mass. Zero-mass interior points fail membership.
fn is_mhr(m: &[f64]) -> bool {
    let first = match m.iter().position(|&x| x > PROB_TOL) {
        Some(i) => i,
        None => return true,
    };
    let last = m.iter().rposition(|&x| x > PROB_TOL).unwrap();
    if m[first..=last].iter().any(|&x| x <= PROB_TOL) {
        return false;
    }
    let mut tail: f64 = m[first..].iter().sum();
    let mut prev = -1.0;
    for &x in &m[first..=last] {
        let h = x / tail;
        if h < prev - 1e-9 {
            return false;
        }
        prev = h;
        tail -= x;
    }
    true
}

fn piece_count_constant(d: &Histogram) -> usize {
    if let Some(bps) = d.breakpoints() {
        bps.len()
    } else {
        d.constant_run_breakpoints().len()
    }
}

/// Greedy minimal partition into pieces on which the values agree with some
/// degree-`deg` polynomial (vanishing (deg+1)-th finite differences).
fn piece_count_poly(m: &[f64], deg: usize) -> usize {
    let n = m.len();
    let tol = 1e-8;
    let mut pieces = 0usize;
    let mut start = 0usize;
    let mut i = 0usize;
    while i < n {
        // grow [start..=i]; a window of length <= deg+1 always fits
        if i - start + 1 >= deg + 2 {
            // check the (deg+1)-th finite difference of the trailing window
            let w = &m[i - (deg + 1)..=i];
            let mut diff = w.to_vec();
            for _ in 0..deg + 1 {
                for j in 0..diff.len() - 1 {
                    diff[j] = diff[j + 1] - diff[j];
                }
                diff.pop();
            }
            if diff[0].abs() > tol {
                pieces += 1;
                start = i;
            }
        }
        i += 1;
    }
    pieces + 1
}
