//! Efficient log-concavity check: unimodal reduction, moment-free interval
//! partition, then a feasibility LP over `x_i = ln P(i)` whose concavity
//! constraints encode log-concavity exactly.

use crate::classes::{is_member, ClassTag};
use crate::error::Result;
use crate::hist::{kolmogorov_distance, Histogram};
use crate::lp::{LinearProgram, LpStatus};
use crate::project::isotone;

const MASS_FLOOR: f64 = 1e-12;

/// Feasibility check with certificate, mirroring [`super::mhr::mhr_check`].
pub fn logconcave_check(
    d: &Histogram,
    witness: &Histogram,
    eps: f64,
    witness_radius: f64,
) -> Result<(bool, Option<Histogram>)> {
    let n = d.n();

    // Stage 1: reduce to a unimodal proxy; reject when even that is far.
    let uni = isotone::unimodal_fit(d);
    if uni.distance > eps {
        return Ok((false, None));
    }
    let dd = Histogram::new(uni.fitted.clone())?;
    let alpha_formula = eps * eps / (1.0f64 / eps).ln().max(1.0).powi(2);
    let alpha = alpha_formula
        .max(witness_radius + kolmogorov_distance(&dd, witness)?)
        .max(1e-9);

    // approximate support by alpha-mass trimming
    let mut a = 1;
    let mut acc = 0.0;
    while a < n && acc + dd.mass(a) <= alpha {
        acc += dd.mass(a);
        a += 1;
    }
    let mut b = n;
    acc = 0.0;
    while b > a && acc + dd.mass(b) <= alpha {
        acc += dd.mass(b);
        b -= 1;
    }

    // Stage 2 parameters, with orderings enforced at desk scale:
    // alpha <= beta / 4 <= gamma / 5.
    let beta = (eps * eps / (1.0f64 / eps).ln().max(1.0)).max(4.0 * alpha);
    let gamma = (eps * eps / 10.0).max(1.25 * beta);

    let heavy: Vec<usize> = (a..=b).filter(|&i| dd.mass(i) >= beta).collect();
    // end prefix/suffix of mass ~ eps/10 on the light head and tail
    let first_heavy = heavy.first().copied().unwrap_or(b + 1);
    let last_heavy = heavy.last().copied().unwrap_or(a.wrapping_sub(1));

    #[derive(Clone, Copy)]
    enum Cell {
        Heavy(usize),
        Light(usize, usize), // piece interval
        Dropped(usize),
    }
    let mut cells: Vec<Cell> = Vec::new();
    let mut build_side = |lo: usize, hi: usize, from_left: bool, cells: &mut Vec<Cell>| {
        if lo > hi {
            return;
        }
        // walk from the outer end inwards: first absorb the ~eps/10 end
        // mass as dropped points, then pack light pieces of mass <= gamma
        let idxs: Vec<usize> =
            if from_left { (lo..=hi).collect() } else { (lo..=hi).rev().collect() };
        let mut end_mass = 0.0;
        let mut k = 0usize;
        while k < idxs.len() && end_mass + dd.mass(idxs[k]) <= eps / 10.0 {
            end_mass += dd.mass(idxs[k]);
            cells.push(Cell::Dropped(idxs[k]));
            k += 1;
        }
        let mut piece_start: Option<usize> = None;
        let mut piece_mass = 0.0;
        let mut piece_end = 0usize;
        for &i in &idxs[k..] {
            let mi = dd.mass(i);
            if piece_start.is_none() {
                piece_start = Some(i);
                piece_mass = mi;
                piece_end = i;
            } else if piece_mass + mi > 0.9 * gamma {
                let s = piece_start.take().unwrap();
                cells.push(Cell::Light(s.min(piece_end), s.max(piece_end)));
                piece_start = Some(i);
                piece_mass = mi;
                piece_end = i;
            } else {
                piece_mass += mi;
                piece_end = i;
            }
        }
        if let Some(s) = piece_start {
            cells.push(Cell::Light(s.min(piece_end), s.max(piece_end)));
        }
    };
    if first_heavy > b {
        // no heavy points at all: treat the whole support as light
        build_side(a, b, true, &mut cells);
    } else {
        build_side(a, first_heavy - 1, true, &mut cells);
        for &i in &heavy {
            cells.push(Cell::Heavy(i));
        }
        build_side(last_heavy + 1, b, false, &mut cells);
    }

    // flatness radius for light pieces: how multiplicatively flat the target
    // log-concave distribution must be across a light piece
    let denom = (eps / 10.0 - 2.0 * alpha).max(eps / 20.0);
    let kappa_flat = ((gamma + 2.0 * alpha) / denom).min(2.0);

    // LP variables: x_a..x_b | eps_i per heavy
    let w = b - a + 1;
    let nh = heavy.len();
    let mut lp = LinearProgram::new(w + nh);
    let mut cost = vec![0.0; w + nh];
    for c in cost.iter_mut().skip(w) {
        *c = 1.0;
    }
    lp.minimize(cost);
    for j in 0..w {
        lp.bounds(j, f64::NEG_INFINITY, 0.0);
    }
    // concavity of x on the support interval
    for i in a + 1..b {
        let j = i - a;
        lp.ge(&[(j, 2.0), (j - 1, -1.0), (j + 1, -1.0)], 0.0);
    }
    let mut heavy_pos = std::collections::HashMap::new();
    for (k, &i) in heavy.iter().enumerate() {
        heavy_pos.insert(i, k);
    }
    for cell in &cells {
        match *cell {
            Cell::Heavy(i) => {
                let j = i - a;
                let e = w + heavy_pos[&i];
                let di = dd.mass(i).max(MASS_FLOOR);
                lp.bounds(e, 0.0, 2.0 * alpha);
                // -2 eps_i / d_i <= x_i - ln d_i <= eps_i / d_i
                lp.le(&[(j, 1.0), (e, -1.0 / di)], di.ln());
                lp.ge(&[(j, 1.0), (e, 2.0 / di)], di.ln());
            }
            Cell::Light(lo, hi) => {
                let piece_mass = (lo..=hi).map(|i| dd.mass(i)).sum::<f64>();
                let width = (hi - lo + 1) as f64;
                let mu = (piece_mass.max(MASS_FLOOR) / width).ln();
                let kappa_j = (2.0 * alpha / piece_mass.max(MASS_FLOOR)).min(2.0);
                let lo_b = mu + ((1.0 - kappa_j.min(0.9)) / (1.0 + kappa_flat)).ln();
                let hi_b = (mu + ((1.0 + kappa_flat) * (1.0 + kappa_j)).ln()).min(0.0);
                for i in lo..=hi {
                    lp.bounds(i - a, lo_b.min(hi_b), hi_b);
                }
            }
            Cell::Dropped(_) => {}
        }
    }
    if nh > 0 {
        let coeffs: Vec<(usize, f64)> = (0..nh).map(|k| (w + k, 1.0)).collect();
        lp.le(&coeffs, eps);
    }

    let r = lp.solve()?;
    if r.status != LpStatus::Optimal && r.status != LpStatus::Feasible {
        return Ok((false, None));
    }

    let mut p = vec![0.0f64; n];
    for j in 0..w {
        p[a - 1 + j] = r.x[j].exp();
    }
    let total: f64 = p.iter().sum();
    if total <= MASS_FLOOR {
        return Ok((false, None));
    }
    for v in &mut p {
        *v /= total;
    }
    let cert = Histogram::new(p)?;
    debug_assert!(is_member(&cert, ClassTag::LogConcave).unwrap_or(false));
    Ok((true, Some(cert)))
}
