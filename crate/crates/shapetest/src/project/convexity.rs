//! Exact L1 distance to convex / concave pmfs: one second-difference LP per
//! candidate support interval, minimum over supports.

use crate::error::{Error, Result};
use crate::hist::Histogram;
use crate::lp::{LinearProgram, LpStatus};

const MAX_N: usize = 96;

fn support_lp(h: &Histogram, a: usize, b: usize, concave: bool) -> Result<Option<(f64, Vec<f64>)>> {
    // variables: q_a..q_b (width w), t_1..t_n (abs slacks for all points;
    // outside the support q = 0 so t_i = h_i there, folded into the constant)
    let n = h.n();
    let w = b - a + 1;
    let mut lp = LinearProgram::new(2 * w);
    let mut cost = vec![0.0; 2 * w];
    for c in &mut cost[w..] {
        *c = 1.0;
    }
    lp.minimize(cost);
    let mut outside = 0.0;
    for i in 1..=n {
        if i < a || i > b {
            outside += h.mass(i);
        }
    }
    for i in a..=b {
        let j = i - a;
        lp.ge(&[(w + j, 1.0), (j, 1.0)], h.mass(i));
        lp.ge(&[(w + j, 1.0), (j, -1.0)], -h.mass(i));
    }
    for j in 1..w.saturating_sub(1) {
        // concave: 2 q_k >= q_{k-1} + q_{k+1}; convex: reversed
        let sign = if concave { 1.0 } else { -1.0 };
        lp.ge(&[(j, 2.0 * sign), (j - 1, -sign), (j + 1, -sign)], 0.0);
    }
    let coeffs: Vec<(usize, f64)> = (0..w).map(|j| (j, 1.0)).collect();
    lp.eq(&coeffs, 1.0);
    let r = lp.solve()?;
    if r.status != LpStatus::Optimal {
        return Ok(None);
    }
    let mut q = vec![0.0; n];
    for j in 0..w {
        q[a - 1 + j] = r.x[j].max(0.0);
    }
    Ok(Some((r.objective + outside, q)))
}

fn fit(h: &Histogram, concave: bool) -> Result<(f64, Histogram)> {
    let n = h.n();
    if n > MAX_N {
        return Err(Error::BudgetExceeded(format!(
            "convex/concave projection guarded at n <= {MAX_N} (got {n})"
        )));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for a in 1..=n {
        for b in a..=n {
            if let Some((v, q)) = support_lp(h, a, b, concave)? {
                if best.as_ref().map_or(true, |(bv, _)| v < *bv - 1e-12) {
                    best = Some((v, q));
                }
            }
        }
    }
    let (v, q) = best.ok_or_else(|| Error::LpFailure("no feasible support".into()))?;
    Ok((v, Histogram::new(q)?))
}

pub fn concave_fit(h: &Histogram) -> Result<(f64, Histogram)> {
    fit(h, true)
}

pub fn convex_fit(h: &Histogram) -> Result<(f64, Histogram)> {
    fit(h, false)
}

pub fn dist_to_concave(h: &Histogram) -> Result<f64> {
    Ok(concave_fit(h)?.0)
}

pub fn dist_to_convex(h: &Histogram) -> Result<f64> {
    Ok(convex_fit(h)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(m: &[f64]) -> Histogram {
        Histogram::new(m.to_vec()).unwrap()
    }

    #[test]
    fn triangular_is_concave() {
        let n = 7;
        let tri: Vec<f64> = (1..=n).map(|i| (i.min(n + 1 - i)) as f64).collect();
        let tot: f64 = tri.iter().sum();
        let d = Histogram::new(tri.iter().map(|x| x / tot).collect()).unwrap();
        assert!(dist_to_concave(&d).unwrap() < 1e-7);
    }

    #[test]
    fn uniform_is_both() {
        let u = crate::hist::uniform(6);
        assert!(dist_to_concave(&u).unwrap() < 1e-7);
        assert!(dist_to_convex(&u).unwrap() < 1e-7);
    }

    #[test]
    fn split_mass_is_far_from_concave() {
        let d = h(&[0.5, 0.0, 0.5]);
        let v = dist_to_concave(&d).unwrap();
        let bf = crate::project::brute_force_distance(&d, crate::classes::ClassTag::Concave, 0.01)
            .unwrap();
        assert!(v > 0.05, "concave distance {v}");
        assert!(v <= bf + 1e-9 && bf <= v + 3.0 * 0.01 + 1e-9, "lp {v} vs brute {bf}");
        // while it is convex-closure: distance 0
        assert!(dist_to_convex(&d).unwrap() < 1e-7);
    }

    #[test]
    fn matches_brute_force_random() {
        let mut rng = crate::sampling::test_rng(91);
        for trial in 0..8 {
            let n = 3 + trial % 3;
            let d = crate::sampling::random_histogram(n, &mut rng);
            for concave in [true, false] {
                let tag = if concave {
                    crate::classes::ClassTag::Concave
                } else {
                    crate::classes::ClassTag::Convex
                };
                let ex = if concave {
                    dist_to_concave(&d).unwrap()
                } else {
                    dist_to_convex(&d).unwrap()
                };
                let bf = crate::project::brute_force_distance(&d, tag, 0.02).unwrap();
                assert!(
                    ex <= bf + 1e-7 && bf <= ex + n as f64 * 0.02 + 1e-7,
                    "{tag} exact {ex} brute {bf} on {:?}",
                    d.masses()
                );
            }
        }
    }
}
