//! Constructive light-or-flat interval decompositions for class members, and
//! the certificate verifier. Used as completeness fixtures and to validate
//! the splittability bounds empirically.

use serde::Serialize;

use crate::classes::{is_member, ClassSpec, ClassTag, Direction};
use crate::error::{Error, Result};
use crate::hist::{dyadic_refine, Histogram, Interval, Partition};

/// Which Definition-4 condition a piece satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PieceCondition {
    /// mass at most gamma / L
    Light,
    /// max at most (1 + gamma) * min
    Flat,
}

/// A decomposition together with the per-piece conditions it claims.
#[derive(Debug, Clone)]
pub struct DecompositionCert {
    pub partition: Partition,
    pub conditions: Vec<PieceCondition>,
    pub gamma: f64,
    pub l_bound: usize,
}

/// Fixed point of `L = log2(n) * (1 + log2(n L / gamma) / log2(1 + gamma))`,
/// iterated from `log^2(n) / gamma`; monotone and quick to converge.
pub fn monotone_piece_bound(gamma: f64, n: usize) -> usize {
    let log2n = (n.max(2) as f64).log2();
    let mut l = (log2n * log2n / gamma).max(1.0);
    for _ in 0..32 {
        let next = log2n * (1.0 + (n as f64 * l / gamma).log2() / (1.0 + gamma).log2());
        if (next - l).abs() < 0.5 {
            l = next;
            break;
        }
        l = next;
    }
    l.ceil() as usize
}

/// Explicit piece-count bound of the hazard-band construction.
pub fn mhr_piece_bound(gamma: f64, n: usize) -> usize {
    let nf = n.max(2) as f64;
    (3.0 + ((nf / gamma).ln() + (nf.powi(3) / gamma).ln()) / (1.0 + gamma).ln()).ceil() as usize
}

fn flat_on(d: &Histogram, iv: Interval, gamma: f64) -> bool {
    let mut mn = f64::INFINITY;
    let mut mx: f64 = 0.0;
    for i in iv.lo..=iv.hi {
        let v = d.mass(i);
        mn = mn.min(v);
        mx = mx.max(v);
    }
    mx <= (1.0 + gamma) * mn + 1e-15
}

/// Recursive bisection of one monotone segment under the light/flat rules.
fn decompose_segment(
    d: &Histogram,
    seg: Interval,
    gamma: f64,
    light_cut: f64,
    out: &mut Vec<(Interval, PieceCondition)>,
) {
    let mut stack = vec![seg];
    while let Some(iv) = stack.pop() {
        if d.interval_mass(iv) <= light_cut {
            out.push((iv, PieceCondition::Light));
        } else if iv.len() == 1 || flat_on(d, iv, gamma) {
            out.push((iv, PieceCondition::Flat));
        } else {
            let (l, r) = iv.bisect();
            stack.push(r);
            stack.push(l);
        }
    }
    // restore order: stack discipline emits left-first already except for the
    // interleaving of separate pushes; sort to be safe
    out.sort_by_key(|(iv, _)| iv.lo);
}

/// Light-or-flat decomposition of a monotone pmf (either direction).
pub fn decompose_monotone(d: &Histogram, gamma: f64) -> Result<DecompositionCert> {
    let inc = is_member(d, ClassTag::Monotone(Direction::NonDecreasing))?;
    let dec = is_member(d, ClassTag::Monotone(Direction::NonIncreasing))?;
    if !inc && !dec {
        return Err(Error::InvalidParameter("input is not monotone".into()));
    }
    let n = d.n();
    let l_bound = monotone_piece_bound(gamma, n);
    let light_cut = gamma / l_bound as f64;
    let mut pieces = Vec::new();
    decompose_segment(d, Interval::new(1, n), gamma, light_cut, &mut pieces);
    let conditions = pieces.iter().map(|p| p.1).collect();
    let partition = Partition::new(pieces.into_iter().map(|p| p.0).collect())?;
    Ok(DecompositionCert { partition, conditions, gamma, l_bound })
}

/// Longest suffix of `[lo, hi]` of mass at most theta, or the rightmost
/// singleton when even that point exceeds theta.
fn right_interval(d: &Histogram, lo: usize, hi: usize, theta: f64) -> Interval {
    let mut acc = 0.0;
    let mut start = hi + 1;
    let mut i = hi;
    loop {
        let v = d.mass(i);
        if acc + v > theta {
            break;
        }
        acc += v;
        start = i;
        if i == lo {
            break;
        }
        i -= 1;
    }
    if start > hi {
        Interval::new(hi, hi)
    } else {
        Interval::new(start, hi)
    }
}

/// Hazard-band decomposition of an MHR pmf: two right intervals, a low-mass
/// prefix, then maximal multiplicatively-flat bands.
pub fn decompose_mhr(d: &Histogram, gamma: f64) -> Result<DecompositionCert> {
    if !is_member(d, ClassTag::Mhr)? {
        return Err(Error::InvalidParameter("input is not MHR".into()));
    }
    let n = d.n();
    let nf = n as f64;
    let l_bound = mhr_piece_bound(gamma, n);
    let light_cut_cert = gamma / l_bound.min(n) as f64;

    let i1 = right_interval(d, 1, n, gamma / nf);
    let mut pieces: Vec<(Interval, PieceCondition)> = Vec::new();
    let mut hi = i1.lo - 1;
    let mut tail_pieces = vec![(i1, classify(d, i1, gamma, light_cut_cert))];
    if hi >= 1 {
        let i2 = right_interval(d, 1, hi, gamma / nf);
        tail_pieces.push((i2, classify(d, i2, gamma, light_cut_cert)));
        hi = i2.lo - 1;
    }
    if hi >= 1 {
        // low-mass prefix below gamma / n^2
        let mut lo = 1usize;
        let cut = gamma / (nf * nf);
        while lo <= hi && d.mass(lo) < cut {
            lo += 1;
        }
        if lo > 1 {
            pieces.push((Interval::new(1, lo - 1), PieceCondition::Light));
        }
        // band sweep
        let mut i = lo;
        while i <= hi {
            let base = d.mass(i);
            let mut j = i + 1;
            while j <= hi
                && d.mass(j) >= base / (1.0 + gamma) - 1e-15
                && d.mass(j) <= base * (1.0 + gamma) + 1e-15
            {
                j += 1;
            }
            pieces.push((Interval::new(i, j - 1), PieceCondition::Flat));
            i = j;
        }
    }
    tail_pieces.reverse();
    pieces.extend(tail_pieces);
    pieces.sort_by_key(|(iv, _)| iv.lo);
    let conditions = pieces.iter().map(|p| p.1).collect();
    let partition = Partition::new(pieces.into_iter().map(|p| p.0).collect())?;
    Ok(DecompositionCert { partition, conditions, gamma, l_bound })
}

fn classify(d: &Histogram, iv: Interval, gamma: f64, light_cut: f64) -> PieceCondition {
    if iv.len() == 1 || flat_on(d, iv, gamma) {
        PieceCondition::Flat
    } else {
        debug_assert!(d.interval_mass(iv) <= light_cut + 1e-12 || d.interval_mass(iv) <= gamma);
        PieceCondition::Light
    }
}

/// Splits a member at its monotone run boundaries and decomposes each run.
pub fn decompose_class(d: &Histogram, class: &ClassSpec, gamma: f64) -> Result<DecompositionCert> {
    match class.tag {
        ClassTag::Monotone(_) => return decompose_monotone(d, gamma),
        ClassTag::Mhr => return decompose_mhr(d, gamma),
        _ => {}
    }
    if !class.is_member(d)? {
        return Err(Error::InvalidParameter(format!("input is not in {}", class.tag)));
    }
    let n = d.n();
    match class.tag {
        ClassTag::HistogramT(t) => {
            let bps = d
                .breakpoints()
                .map(|b| b.to_vec())
                .unwrap_or_else(|| d.constant_run_breakpoints());
            let partition = Partition::from_breakpoints(&bps)?;
            let conditions = vec![PieceCondition::Flat; partition.len()];
            Ok(DecompositionCert { partition, conditions, gamma, l_bound: t.max(1) })
        }
        ClassTag::Unimodal
        | ClassTag::LogConcave
        | ClassTag::Concave
        | ClassTag::Convex
        | ClassTag::TModal(_)
        | ClassTag::PiecewisePoly { .. } => {
            let runs = monotone_runs(d.masses());
            let per_run_bound = monotone_piece_bound(gamma, n);
            let factor = match class.tag {
                ClassTag::TModal(t) => t + 1,
                ClassTag::PiecewisePoly { t, d: deg } => t.max(1) * (deg + 1),
                _ => 2,
            };
            let l_bound = factor * per_run_bound;
            let light_cut = gamma / l_bound as f64;
            let mut pieces = Vec::new();
            let mut lo = 1usize;
            for hi in runs {
                decompose_segment(d, Interval::new(lo, hi), gamma, light_cut, &mut pieces);
                lo = hi + 1;
            }
            pieces.sort_by_key(|(iv, _)| iv.lo);
            let conditions = pieces.iter().map(|p| p.1).collect();
            let partition = Partition::new(pieces.into_iter().map(|p| p.0).collect())?;
            Ok(DecompositionCert { partition, conditions, gamma, l_bound })
        }
        _ => Err(Error::UnsupportedMembership(class.tag.to_string())),
    }
}

/// Right endpoints of the maximal monotone runs.
fn monotone_runs(m: &[f64]) -> Vec<usize> {
    let n = m.len();
    let mut ends = Vec::new();
    let mut dir = 0i8;
    for i in 1..n {
        let step = if m[i] > m[i - 1] + 1e-15 {
            1
        } else if m[i] < m[i - 1] - 1e-15 {
            -1
        } else {
            0
        };
        if step != 0 {
            if dir != 0 && step != dir {
                ends.push(i);
                dir = 0;
            } else {
                dir = step;
            }
        }
    }
    ends.push(n);
    ends
}

/// True iff every piece satisfies its recorded condition against `d` and the
/// piece count stays within `l_bound`.
pub fn verify_decomposition(
    d: &Histogram,
    cert: &DecompositionCert,
    gamma: f64,
    l_bound: usize,
) -> bool {
    if cert.partition.len() > l_bound || cert.partition.n() != d.n() {
        return false;
    }
    let light_cut = gamma / l_bound as f64;
    cert.partition
        .intervals()
        .iter()
        .zip(&cert.conditions)
        .all(|(iv, cond)| match cond {
            PieceCondition::Light => d.interval_mass(*iv) <= light_cut + 1e-12,
            PieceCondition::Flat => flat_on(d, *iv, gamma),
        })
}

/// Dyadic refinement of a certificate (conditions are inherited by subsets).
pub fn refine_certificate(
    d: &Histogram,
    cert: &DecompositionCert,
    n_padded: usize,
) -> Result<DecompositionCert> {
    let padded = if cert.partition.n() < n_padded {
        let mut ivs = cert.partition.intervals().to_vec();
        ivs.push(Interval::new(cert.partition.n() + 1, n_padded));
        Partition::new(ivs)?
    } else {
        cert.partition.clone()
    };
    let refined = dyadic_refine(&padded, n_padded)?;
    let mut conditions = Vec::with_capacity(refined.len());
    for iv in refined.intervals() {
        // classify each refined piece directly (subsets keep both conditions)
        let clipped_hi = iv.hi.min(d.n());
        if iv.lo > d.n() {
            conditions.push(PieceCondition::Light);
            continue;
        }
        let civ = Interval::new(iv.lo, clipped_hi);
        if flat_on(d, civ, cert.gamma) {
            conditions.push(PieceCondition::Flat);
        } else {
            conditions.push(PieceCondition::Light);
        }
    }
    Ok(DecompositionCert {
        partition: refined,
        conditions,
        gamma: cert.gamma,
        l_bound: cert.l_bound * (2 * (n_padded as f64).log2().ceil() as usize + 2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::test_rng;
    use rand::Rng;

    fn geometric(n: usize, q: f64) -> Histogram {
        let raw: Vec<f64> = (0..n).map(|i| (1.0 - q).powi(i as i32) * q).collect();
        let t: f64 = raw.iter().sum();
        Histogram::new(raw.iter().map(|x| x / t).collect()).unwrap()
    }

    #[test]
    fn uniform_is_single_flat_piece() {
        let u = crate::hist::uniform(64);
        let cert = decompose_monotone(&u, 0.1).unwrap();
        assert_eq!(cert.partition.len(), 1);
        assert_eq!(cert.conditions[0], PieceCondition::Flat);
    }

    #[test]
    fn point_mass_decomposes() {
        let d = crate::hist::point_mass(64, 1);
        let cert = decompose_monotone(&d, 0.1).unwrap();
        assert!(verify_decomposition(&d, &cert, 0.1, cert.l_bound));
        // the head {1} is flat, the zero tail is light
        assert_eq!(cert.conditions[0], PieceCondition::Flat);
        assert!(cert.conditions[1..].iter().all(|c| *c == PieceCondition::Light));
    }

    #[test]
    fn geometric_certificate_verifies() {
        let d = geometric(1024, 0.5);
        let gamma = 0.1;
        let cert = decompose_monotone(&d, gamma).unwrap();
        assert!(verify_decomposition(&d, &cert, gamma, cert.l_bound));
        assert!(cert.partition.len() <= monotone_piece_bound(gamma, 1024));
    }

    #[test]
    fn mhr_certificates_verify() {
        let d = geometric(512, 0.02);
        let cert = decompose_mhr(&d, 0.2).unwrap();
        assert!(
            verify_decomposition(&d, &cert, 0.2, cert.l_bound),
            "pieces {:?}",
            cert.partition.len()
        );
        // uniform sweeps into one band plus boundary pieces
        let u = crate::hist::uniform(64);
        let cert = decompose_mhr(&u, 0.1).unwrap();
        assert!(verify_decomposition(&u, &cert, 0.1, cert.l_bound));
        assert!(cert.partition.len() <= 4, "pieces {}", cert.partition.len());
    }

    #[test]
    fn random_mhr_members_verify() {
        // random non-decreasing hazards
        let mut rng = test_rng(41);
        for _ in 0..20 {
            let n = 512;
            let mut h = Vec::with_capacity(n);
            let mut cur: f64 = rng.gen_range(0.001..0.01);
            for _ in 0..n {
                cur = (cur * (1.0 + rng.gen_range(0.0..0.05))).min(0.999);
                h.push(cur);
            }
            let mut masses = Vec::with_capacity(n);
            let mut surv = 1.0;
            for &hz in &h {
                masses.push(surv * hz);
                surv *= 1.0 - hz;
            }
            masses[n - 1] += surv; // absorb the leftover tail
            let d = Histogram::new(masses).unwrap();
            if !is_member(&d, ClassTag::Mhr).unwrap() {
                continue;
            }
            let gamma = 0.2;
            let cert = decompose_mhr(&d, gamma).unwrap();
            assert!(verify_decomposition(&d, &cert, gamma, cert.l_bound));
            assert!(cert.partition.len() <= mhr_piece_bound(gamma, n));
        }
    }

    #[test]
    fn unimodal_class_decomposition() {
        let n = 256;
        let tri: Vec<f64> = (1..=n).map(|i| (i.min(n + 1 - i)) as f64).collect();
        let t: f64 = tri.iter().sum();
        let d = Histogram::new(tri.iter().map(|x| x / t).collect()).unwrap();
        let class = ClassSpec::new(ClassTag::Unimodal);
        let cert = decompose_class(&d, &class, 0.1).unwrap();
        assert!(verify_decomposition(&d, &cert, 0.1, cert.l_bound));
        assert!(cert.partition.len() <= 2 * monotone_piece_bound(0.1, n));
    }

    #[test]
    fn histogram_class_uses_own_pieces() {
        let d = Histogram::with_breakpoints(
            vec![0.2, 0.2, 0.1, 0.1, 0.1, 0.3],
            vec![2, 5, 6],
        )
        .unwrap();
        let class = ClassSpec::new(ClassTag::HistogramT(3));
        let cert = decompose_class(&d, &class, 0.05).unwrap();
        assert_eq!(cert.partition.len(), 3);
        assert!(verify_decomposition(&d, &cert, 0.05, 3));
    }

    #[test]
    fn non_member_errors() {
        let d = Histogram::new(vec![0.1, 0.5, 0.4]).unwrap();
        assert!(decompose_monotone(&d, 0.1).is_err());
    }

    #[test]
    fn refinement_preserves_validity() {
        let d = geometric(256, 0.3);
        let gamma = 0.1;
        let cert = decompose_monotone(&d, gamma).unwrap();
        let refined = refine_certificate(&d, &cert, 256).unwrap();
        let log2n = 8;
        assert!(refined.partition.len() <= cert.partition.len() * (2 * log2n + 2));
        // every refined piece still satisfies light-or-flat at the padded bound
        let dp = d.zero_padded(256);
        assert!(verify_decomposition(&dp, &refined, gamma, refined.l_bound));
    }

    #[test]
    fn single_piece_fails_for_concentrated_mass() {
        let d = geometric(64, 0.9);
        let cert = DecompositionCert {
            partition: Partition::single(64),
            conditions: vec![PieceCondition::Light],
            gamma: 0.1,
            l_bound: 10,
        };
        assert!(!verify_decomposition(&d, &cert, 0.1, 10));
    }
}
