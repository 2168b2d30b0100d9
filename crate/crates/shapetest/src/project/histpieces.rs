//! Granular decompositions and the t-histogram distance DP.

use crate::hist::{flatten, Histogram, Interval, Partition};

/// Piece classification of a granular decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceKind {
    HeavySingleton,
    Light,
}

/// Partition into heavy singletons and light pieces of mass at most eta.
#[derive(Debug, Clone)]
pub struct GranularDecomposition {
    pub partition: Partition,
    pub kinds: Vec<PieceKind>,
    pub eta: f64,
}

impl GranularDecomposition {
    pub fn heavy_count(&self) -> usize {
        self.kinds.iter().filter(|k| **k == PieceKind::HeavySingleton).count()
    }
}

/// Greedy left-to-right packing: points heavier than eta are isolated, light
/// runs are packed up to mass eta (a run interrupted by a heavy point merges
/// back into its left neighbor when the combined mass still fits).
pub fn granular_decomposition(h: &Histogram, eta: f64) -> GranularDecomposition {
    assert!(eta > 0.0 && eta <= 1.0, "eta in (0, 1]");
    let n = h.n();
    let mut pieces: Vec<(Interval, PieceKind, f64)> = Vec::new();
    let mut start: Option<usize> = None;
    let mut acc = 0.0;
    for i in 1..=n {
        let mi = h.mass(i);
        if mi > eta {
            if let Some(s) = start.take() {
                push_light(&mut pieces, s, i - 1, acc, eta);
                acc = 0.0;
            }
            pieces.push((Interval::new(i, i), PieceKind::HeavySingleton, mi));
        } else if start.is_none() {
            start = Some(i);
            acc = mi;
        } else if acc + mi > eta {
            push_light(&mut pieces, start.unwrap(), i - 1, acc, eta);
            start = Some(i);
            acc = mi;
        } else {
            acc += mi;
        }
    }
    if let Some(s) = start {
        push_light(&mut pieces, s, n, acc, eta);
    }
    let kinds = pieces.iter().map(|p| p.1).collect();
    let partition = Partition::new(pieces.into_iter().map(|p| p.0).collect()).unwrap();
    GranularDecomposition { partition, kinds, eta }
}

fn push_light(pieces: &mut Vec<(Interval, PieceKind, f64)>, s: usize, e: usize, acc: f64, eta: f64) {
    // merge back into an adjacent light piece when the sum still fits
    if let Some(last) = pieces.last_mut() {
        if last.1 == PieceKind::Light && last.0.hi + 1 == s && last.2 + acc <= eta {
            last.0 = Interval::new(last.0.lo, e);
            last.2 += acc;
            return;
        }
    }
    pieces.push((Interval::new(s, e), PieceKind::Light, acc));
}

/// L1 cost of flattening `h` on `[a, b]` (1-based inclusive).
fn flatten_cost(h: &Histogram, a: usize, b: usize) -> f64 {
    let iv = Interval::new(a, b);
    let avg = h.interval_mass(iv) / iv.len() as f64;
    (a..=b).map(|i| (h.mass(i) - avg).abs()).sum()
}

/// DP over granular endpoints: best flattening of `h` on at most `t` intervals
/// whose endpoints come from the eta-granular decomposition, eta = eps/(4t).
/// Returns `(delta, partition)` with `opt <= delta <= 4 opt + eps`.
pub fn histogram_t_fit(h: &Histogram, t: usize, eps: f64) -> (f64, Histogram) {
    let t = t.max(1);
    let n = h.n();
    let eta = (eps / (4.0 * t as f64)).clamp(1e-9, 1.0);
    let g = granular_decomposition(h, eta);
    // candidate endpoints: 0 plus the right end of every granular piece
    let mut ends: Vec<usize> = vec![0];
    ends.extend(g.partition.intervals().iter().map(|iv| iv.hi));
    let s = ends.len() - 1; // number of granular pieces
    // dp[j][e]: best cost covering (0, ends[e]] with j intervals
    let inf = f64::INFINITY;
    let mut prev = vec![inf; s + 1];
    prev[0] = 0.0;
    let mut choice: Vec<Vec<usize>> = Vec::with_capacity(t);
    let mut best_full = (inf, 0usize, 0usize); // (cost, pieces used, none)
    for j in 1..=t.min(s) {
        let mut cur = vec![inf; s + 1];
        let mut ch = vec![0usize; s + 1];
        for e in j..=s {
            for p in (j - 1)..e {
                if prev[p] < inf {
                    let c = prev[p] + flatten_cost(h, ends[p] + 1, ends[e]);
                    if c < cur[e] {
                        cur[e] = c;
                        ch[e] = p;
                    }
                }
            }
        }
        choice.push(ch);
        if cur[s] < best_full.0 {
            best_full = (cur[s], j, 0);
        }
        prev = cur;
    }
    let (delta, used, _) = best_full;
    // reconstruct the partition for the best piece count
    let mut cuts = Vec::new();
    {
        // re-run the DP to recover the path for `used` pieces
        let mut table = vec![vec![inf; s + 1]; used + 1];
        let mut back = vec![vec![0usize; s + 1]; used + 1];
        table[0][0] = 0.0;
        for j in 1..=used {
            for e in j..=s {
                for p in (j - 1)..e {
                    if table[j - 1][p] < inf {
                        let c = table[j - 1][p] + flatten_cost(h, ends[p] + 1, ends[e]);
                        if c < table[j][e] {
                            table[j][e] = c;
                            back[j][e] = p;
                        }
                    }
                }
            }
        }
        let mut e = s;
        for j in (1..=used).rev() {
            cuts.push(ends[e]);
            e = back[j][e];
        }
        cuts.reverse();
    }
    let partition = Partition::from_breakpoints(&cuts).unwrap();
    let fitted = flatten(h, &partition).unwrap();
    debug_assert!(n == fitted.n());
    (delta, fitted)
}

pub fn dist_to_histogram_t(h: &Histogram, t: usize, eps: f64) -> f64 {
    histogram_t_fit(h, t, eps).0
}
