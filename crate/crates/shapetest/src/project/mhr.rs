//! Efficient MHR feasibility check: a linear program over `y_i = ln(1 - h_i)`
//! (log survival ratios), whose feasibility certifies an MHR distribution
//! multiplicatively matching the input; infeasibility witnesses farness.

use crate::classes::{is_member, ClassTag};
use crate::error::Result;
use crate::hist::{kolmogorov_distance, Histogram};
use crate::lp::{LinearProgram, LpStatus};

const MASS_FLOOR: f64 = 1e-12;

/// Feasibility check with certificate. `witness` is a Kolmogorov-accurate
/// empirical histogram; `witness_radius` its accuracy radius (0 when the
/// witness is exact). On yes, returns a reconstructed MHR pmf close to `d`.
pub fn mhr_check(
    d: &Histogram,
    witness: &Histogram,
    eps: f64,
    witness_radius: f64,
) -> Result<(bool, Option<Histogram>)> {
    let n = d.n();
    let alpha = (eps * eps * eps).max(witness_radius + kolmogorov_distance(d, witness)?);

    // suffix cutoff: smallest b with d([b+1, n]) <= eps/2
    let mut tail = 0.0;
    let mut b = n;
    while b >= 1 && tail + d.mass(b) <= eps / 2.0 {
        tail += d.mass(b);
        b -= 1;
    }
    if b == 0 {
        // all the mass fits in the discarded tail only when eps >= 2
        return Ok((true, Some(crate::hist::point_mass(n, 1))));
    }

    // suffix masses D_i = d([i, n])
    let mut suffix = vec![0.0f64; b + 2];
    suffix[b + 1] = tail;
    for i in (1..=b).rev() {
        suffix[i] = suffix[i + 1] + d.mass(i);
    }

    let heavy_thresh = (eps * eps).max(4.0 * alpha);
    let heavy: Vec<bool> = (1..=b).map(|i| d.mass(i) > heavy_thresh).collect();
    let n_light = heavy.iter().filter(|h| !*h).count();

    // variables: y_1..y_b | eps_i (light) | t_i (regularizers)
    let w = b;
    let mut lp = LinearProgram::new(w + n_light + w);
    let mut cost = vec![0.0; w + n_light + w];
    for c in cost.iter_mut().skip(w).take(n_light) {
        *c = 1.0;
    }
    for c in cost.iter_mut().skip(w + n_light) {
        *c = 0.1; // mild pull toward the point estimate
    }
    lp.minimize(cost);

    let mut light_idx = vec![usize::MAX; b + 1];
    {
        let mut next = w;
        for i in 1..=b {
            if !heavy[i - 1] {
                light_idx[i] = next;
                next += 1;
            }
        }
    }

    for i in 1..=b {
        let di = d.mass(i);
        let suf = suffix[i].max(MASS_FLOOR);
        if heavy[i - 1] {
            // box brackets around ln(1 - h_i)
            let hi_arg = ((di + 2.0 * alpha) / ((1.0 - eps) * suf)).min(1.0 - MASS_FLOOR);
            let lo_arg = ((di - 2.0 * alpha) / ((1.0 + eps) * suf)).max(0.0);
            let y_lo = (1.0 - hi_arg).max(MASS_FLOOR).ln();
            let y_hi = (1.0 - lo_arg).min(1.0).ln().min(0.0);
            if y_lo > y_hi {
                return Ok((false, None));
            }
            lp.bounds(i - 1, y_lo, y_hi);
        } else {
            lp.bounds(i - 1, f64::NEG_INFINITY, 0.0);
            let e = light_idx[i];
            lp.bounds(e, 0.0, 2.0 * alpha);
            // (d_i - eps_i) / ((1+eps) suf) <= -y_i
            lp.ge(&[(i - 1, -(1.0 + eps) * suf), (e, 1.0)], di);
            // -y_i <= (1+4 eps)(d_i + eps_i) / ((1-eps) suf)
            lp.le(&[(i - 1, -(1.0 - eps) * suf), (e, -(1.0 + 4.0 * eps))], (1.0 + 4.0 * eps) * di);
        }
        // hazard monotone: y_{i+1} <= y_i
        if i < b {
            lp.ge(&[(i - 1, 1.0), (i, -1.0)], 0.0);
        }
        // regularizer t_i >= |y_i - yhat_i|
        let h_hat = (di / suf).clamp(MASS_FLOOR, 1.0 - MASS_FLOOR);
        let y_hat = (1.0 - h_hat).ln();
        let t = w + n_light + (i - 1);
        lp.ge(&[(t, 1.0), (i - 1, -1.0)], -y_hat);
        lp.ge(&[(t, 1.0), (i - 1, 1.0)], y_hat);
    }

    // cumulative survival bracket: sum_{j<i} y_j within the multiplicative
    // radius of ln d([i,n]); radius widened to the honest Kolmogorov noise
    for i in 2..=b {
        let suf = suffix[i].max(MASS_FLOOR);
        let rho = (2.0 * alpha / suf).min(0.9);
        let width_lo = (1.0 - eps.max(rho)).max(0.05).ln();
        let width_hi = (1.0 + eps.max(rho)).ln();
        let coeffs: Vec<(usize, f64)> = (0..i - 1).map(|j| (j, 1.0)).collect();
        lp.ge(&coeffs, suf.ln() + width_lo);
        lp.le(&coeffs, suf.ln() + width_hi);
    }
    if n_light > 0 {
        let coeffs: Vec<(usize, f64)> = (1..=b)
            .filter(|&i| !heavy[i - 1])
            .map(|i| (light_idx[i], 1.0))
            .collect();
        lp.le(&coeffs, eps);
    }

    let r = lp.solve()?;
    if r.status != LpStatus::Optimal && r.status != LpStatus::Feasible {
        return Ok((false, None));
    }

    // reconstruct P(i) = (1 - e^{y_i}) * e^{sum_{j<i} y_j}, zero on the tail
    let mut p = vec![0.0f64; n];
    let mut cum = 0.0;
    for i in 1..=b {
        let y = r.x[i - 1].min(0.0);
        p[i - 1] = (1.0 - y.exp()).max(0.0) * cum.exp();
        cum += y;
    }
    let total: f64 = p.iter().sum();
    if total <= MASS_FLOOR {
        return Ok((false, None));
    }
    for v in &mut p {
        *v /= total;
    }
    let cert = Histogram::new(p)?;
    debug_assert!(is_member(&cert, ClassTag::Mhr).unwrap_or(false));
    Ok((true, Some(cert)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hist::l1_distance;

    fn truncated_geometric(n: usize, q: f64) -> Histogram {
        let raw: Vec<f64> = (0..n).map(|i| (1.0 - q).powi(i as i32) * q).collect();
        let t: f64 = raw.iter().sum();
        Histogram::new(raw.iter().map(|x| x / t).collect()).unwrap()
    }

    #[test]
    fn geometric_accepts_with_certificate() {
        let d = truncated_geometric(40, 0.25);
        let eps = 0.1;
        let (yes, cert) = mhr_check(&d, &d, eps, 0.0).unwrap();
        assert!(yes);
        let cert = cert.unwrap();
        assert!(is_member(&cert, ClassTag::Mhr).unwrap());
        let dist = l1_distance(&d, &cert).unwrap();
        assert!(dist <= 32.0 * eps, "certificate distance {dist}");
    }

    #[test]
    fn zero_dip_then_revival_rejects() {
        // hazard must drop: heavy head, near-zero middle, heavy revival
        let d = Histogram::new(vec![0.48, 0.02, 0.0, 0.0, 0.0, 0.25, 0.25]).unwrap();
        let eps = 0.02;
        // certified far by the tiny-domain oracle (n = 7)
        let bf = crate::project::brute_force_distance(&d, ClassTag::Mhr, 0.01).unwrap();
        assert!(bf > 100.0 * eps * 0.002, "brute-force distance {bf}");
        let (yes, _) = mhr_check(&d, &d, eps, 0.0).unwrap();
        assert!(!yes);
    }

    #[test]
    fn huge_eps_accepts_uniform() {
        let d = crate::hist::uniform(16);
        let (yes, cert) = mhr_check(&d, &d, 0.9, 0.0).unwrap();
        assert!(yes);
        assert!(is_member(&cert.unwrap(), ClassTag::Mhr).unwrap());
    }
}
