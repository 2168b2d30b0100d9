//! Distance-estimation oracles: exact projections, sandwich approximations,
//! the efficient MHR / log-concave feasibility checkers, PBD covers, and the
//! tiny-domain brute-force oracle the exact routes are validated against.

pub mod convexity;
pub mod histpieces;
pub mod isotone;
pub mod logconcave;
pub mod mhr;
pub mod pbd;
pub mod poly;

use crate::classes::{is_member, ClassTag, Direction};
use crate::error::{Error, Result};
use crate::hist::{l1_distance, Histogram};

/// What a class's distance oracle reports.
#[derive(Debug, Clone)]
pub enum DistanceEstimate {
    /// Exact optimum.
    Exact(f64),
    /// `opt <= delta <= factor * opt + additive`.
    Sandwich { delta: f64, factor: f64, additive: f64 },
    /// Feasibility-style answer with a member certificate on yes.
    Binary { yes: bool, certificate: Option<Histogram> },
}

/// Dispatches to the class's oracle. `eps` parameterizes the approximate
/// oracles; the MHR / log-concave checkers additionally need the Kolmogorov
/// `witness` and its accuracy radius.
pub fn class_distance(
    d: &Histogram,
    tag: ClassTag,
    eps: f64,
    witness: Option<&Histogram>,
    witness_radius: f64,
) -> Result<DistanceEstimate> {
    Ok(match tag {
        ClassTag::Monotone(dir) => DistanceEstimate::Exact(isotone::dist_to_monotone(
            d,
            dir == Direction::NonDecreasing,
        )),
        ClassTag::Unimodal => DistanceEstimate::Exact(isotone::dist_to_unimodal(d)),
        ClassTag::TModal(t) => DistanceEstimate::Exact(isotone::dist_to_tmodal(d, t)?),
        ClassTag::Convex => DistanceEstimate::Exact(convexity::dist_to_convex(d)?),
        ClassTag::Concave => DistanceEstimate::Exact(convexity::dist_to_concave(d)?),
        ClassTag::HistogramT(t) => {
            let delta = histpieces::dist_to_histogram_t(d, t, eps);
            DistanceEstimate::Sandwich { delta, factor: 4.0, additive: eps }
        }
        ClassTag::PiecewisePoly { t, d: deg } => {
            let delta = poly::dist_to_piecewise_poly(d, t, deg, eps)?;
            DistanceEstimate::Sandwich { delta, factor: 3.0, additive: eps }
        }
        ClassTag::Mhr => {
            let w = witness.ok_or_else(|| {
                Error::InvalidParameter("MHR oracle needs a Kolmogorov witness".into())
            })?;
            let (yes, certificate) = mhr::mhr_check(d, w, eps, witness_radius)?;
            DistanceEstimate::Binary { yes, certificate }
        }
        ClassTag::LogConcave => {
            let w = witness.ok_or_else(|| {
                Error::InvalidParameter("log-concave oracle needs a Kolmogorov witness".into())
            })?;
            let (yes, certificate) = logconcave::logconcave_check(d, w, eps, witness_radius)?;
            DistanceEstimate::Binary { yes, certificate }
        }
        ClassTag::Pbd => {
            let iv = crate::hist::Interval::new(1, d.n());
            DistanceEstimate::Sandwich {
                delta: pbd::dist_to_pbd(d, eps, iv)?,
                factor: 1.0 + 2.0 * eps,
                additive: eps / 100.0 + pbd::COVER_SLACK,
            }
        }
        ClassTag::Binomial => {
            let iv = crate::hist::Interval::new(1, d.n());
            DistanceEstimate::Sandwich {
                delta: pbd::dist_to_binomial(d, eps, iv)?,
                factor: 1.0 + 2.0 * eps,
                additive: eps / 100.0 + pbd::COVER_SLACK,
            }
        }
    })
}

/// Projection (closest member) for the classes that expose one; used by the
/// semi-agnostic learners.
pub fn project_onto(d: &Histogram, tag: ClassTag, eps: f64) -> Result<Histogram> {
    match tag {
        ClassTag::Monotone(dir) => Ok(Histogram::new(
            isotone::monotone_fit(d, dir == Direction::NonDecreasing).fitted,
        )?),
        ClassTag::Unimodal => Ok(Histogram::new(isotone::unimodal_fit(d).fitted)?),
        ClassTag::TModal(t) => Ok(Histogram::new(isotone::tmodal_fit(d, t)?.fitted)?),
        ClassTag::Convex => Ok(convexity::convex_fit(d)?.1),
        ClassTag::Concave => Ok(convexity::concave_fit(d)?.1),
        ClassTag::HistogramT(t) => Ok(histpieces::histogram_t_fit(d, t, eps).1),
        ClassTag::Binomial => {
            let iv = crate::hist::Interval::new(1, d.n());
            Ok(pbd::binomial_fit(d, eps, iv)?.1)
        }
        ClassTag::Pbd => {
            let iv = crate::hist::Interval::new(1, d.n());
            Ok(pbd::pbd_fit(d, eps, iv)?.1)
        }
        _ => Err(Error::UnsupportedProjection(tag.to_string())),
    }
}

/// Enumerates every pmf on `{1..n}` whose masses are multiples of
/// `1/units`, calling `f` on each.
pub fn enumerate_grid_pmfs(n: usize, units: usize, f: &mut impl FnMut(&[f64])) {
    let mut masses = vec![0.0f64; n];
    fn rec(
        slot: usize,
        remaining: usize,
        units: usize,
        masses: &mut Vec<f64>,
        f: &mut impl FnMut(&[f64]),
    ) {
        if slot + 1 == masses.len() {
            masses[slot] = remaining as f64 / units as f64;
            f(masses);
            return;
        }
        for take in 0..=remaining {
            masses[slot] = take as f64 / units as f64;
            rec(slot + 1, remaining - take, units, masses, f);
        }
    }
    rec(0, units, units, &mut masses, f);
}

/// Minimum L1 distance from `d` to the grid pmfs passing the definitional
/// membership check. The grid has additive resolution `n * grid_step`.
pub fn brute_force_distance(d: &Histogram, tag: ClassTag, grid_step: f64) -> Result<f64> {
    let n = d.n();
    if n > 10 || grid_step < 0.01 - 1e-12 {
        return Err(Error::BudgetExceeded(format!(
            "brute force guarded at n <= 10, step >= 0.01 (got n={n}, step={grid_step})"
        )));
    }
    let units = (1.0 / grid_step).round() as usize;
    let mut best = f64::INFINITY;
    let mut err: Option<Error> = None;
    enumerate_grid_pmfs(n, units, &mut |masses| {
        if err.is_some() {
            return;
        }
        let q = match Histogram::new(masses.to_vec()) {
            Ok(q) => q,
            Err(e) => {
                err = Some(e);
                return;
            }
        };
        match is_member(&q, tag) {
            Ok(true) => {
                let dist = l1_distance(d, &q).unwrap();
                if dist < best {
                    best = dist;
                }
            }
            Ok(false) => {}
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(best)
}
