//! Split plans and the searches that compute them.
//!
//! A boundary after `n` written buckets is the point where Vose's sweep over
//! the light and heavy arrays has written exactly `n` of them. Writing
//! `(i, j)` for "lights `[0, i)` and heavies `[0, j)` done", the sweep at
//! `(i, j)` fills light `i` next iff
//!
//! ```text
//! i < |l|  and  (j >= |h|  or  L[i] + H[j+1] > (i + j + 1) * W/N)
//! ```
//!
//! This condition only gets easier as `i` shrinks or `j` grows, so along the
//! anti-diagonal `i + j = n - 1` it is monotone in `j`. The sweep's position
//! on diagonal `n` has heavy count equal to the least `h` for which the
//! condition holds at `(n - 1 - h, h)` (treating `n - 1 - h < 0` as true).
//! That is the predicate both searches below evaluate.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::partition::LightHeavyPartition;

pub const DEFAULT_FANOUT: usize = 32;

/// State of the sweep at a section boundary.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Boundary {
    /// Lights whose buckets are written before the boundary.
    pub light: usize,
    /// Heavies whose buckets are written before the boundary.
    pub heavy: usize,
    /// Residual weight of heavy `heavy` at the boundary; 0 when no heavy is
    /// left.
    pub spill: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    /// `sections + 1` boundaries; the first is `(0, 0, 0)` and the last is
    /// `(|l|, |h|, 0)`.
    pub boundaries: Vec<Boundary>,
}

impl SplitPlan {
    pub fn sections(&self) -> usize {
        self.boundaries.len() - 1
    }
}

/// How interior boundaries are searched for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitSearch {
    /// One independent binary search per boundary.
    Binary,
    /// Batches of `fanout` consecutive boundaries share a partial p-ary phase.
    PartialPary { fanout: usize },
}

impl Default for SplitSearch {
    fn default() -> Self {
        SplitSearch::PartialPary { fanout: DEFAULT_FANOUT }
    }
}

/// Items covered by the first `i` of `s` sections.
#[inline]
pub fn section_items(i: usize, total: usize, s: usize) -> usize {
    (i as u128 * total as u128 / s as u128) as usize
}

/// Whether the sweep standing at `(n - 1 - h, h)` would fill a light next.
#[inline]
fn fills_light(p: &LightHeavyPartition, n: usize, h: usize) -> bool {
    if h >= n {
        return true;
    }
    p.fills_light_at(n - 1 - h, h)
}

fn boundary_at(p: &LightHeavyPartition, n: usize, h: usize) -> Boundary {
    let light = n - h;
    let spill = if h < p.heavy.len() {
        p.residual(light, h).max(0.0)
    } else {
        0.0
    };
    Boundary { light, heavy: h, spill }
}

fn heavy_range(p: &LightHeavyPartition, n: usize) -> (usize, usize) {
    (n.saturating_sub(p.light.len()), n.min(p.heavy.len()))
}

/// Sweep state after `n` buckets, found by binary search over the heavy
/// count.
pub fn binary_search_boundary(p: &LightHeavyPartition, n: usize) -> Boundary {
    assert!(n <= p.len(), "boundary {n} beyond {} items", p.len());
    if n == 0 {
        return Boundary::default();
    }
    let (lo, hi) = heavy_range(p, n);
    let h = lower_bound_by(lo, hi, |h| fills_light(p, n, h));
    boundary_at(p, n, h)
}

/// Splits the sweep into `s` sections of `floor(i*N/s)` buckets each.
pub fn compute_split_plan(p: &LightHeavyPartition, s: usize) -> Result<SplitPlan> {
    compute_split_plan_with(p, s, SplitSearch::Binary)
}

pub fn compute_split_plan_with(p: &LightHeavyPartition, s: usize, search: SplitSearch) -> Result<SplitPlan> {
    let total = p.len();
    if s == 0 || s > total {
        return Err(Error::InvalidSectionCount { sections: s, items: total });
    }
    let mut boundaries = vec![Boundary::default(); s + 1];
    boundaries[s] = Boundary {
        light: p.light.len(),
        heavy: p.heavy.len(),
        spill: 0.0,
    };
    let interior = &mut boundaries[1..s];
    match search {
        SplitSearch::Binary => {
            interior.par_iter_mut().enumerate().for_each(|(k, b)| {
                *b = binary_search_boundary(p, section_items(k + 1, total, s));
            });
        }
        SplitSearch::PartialPary { fanout } => {
            if fanout < 3 {
                return Err(Error::Config(format!("fanout {fanout} is below 3")));
            }
            interior.par_chunks_mut(fanout).enumerate().for_each(|(c, batch)| {
                let first = c * fanout + 1;
                let ns: Vec<usize> = (0..batch.len()).map(|k| section_items(first + k, total, s)).collect();
                let hi = ns[ns.len() - 1].min(p.heavy.len());
                let found = partial_pary_search_by(0, hi, ns.len(), fanout, |q, h| fills_light(p, ns[q], h));
                for ((b, &n), &h) in batch.iter_mut().zip(&ns).zip(&found.positions) {
                    *b = boundary_at(p, n, h);
                }
            });
        }
    }
    Ok(SplitPlan { boundaries })
}

/// Least `t` in `[lo, hi]` with `pred(t)`; `pred(hi)` is assumed true.
fn lower_bound_by(mut lo: usize, mut hi: usize, pred: impl Fn(usize) -> bool) -> usize {
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParySearchResult {
    pub positions: Vec<usize>,
    /// Shared p-ary rounds run before falling back to binary search.
    pub rounds: usize,
    /// Range `[lo, hi]` left after the shared rounds.
    pub range: (usize, usize),
}

/// Batched search for a family of monotone predicates.
///
/// `pred(q, t)` must be monotone in `t` (false then true) for each query
/// `q`, true at `t = hi`, and the answers (least true `t`) must be
/// nondecreasing in `q`. Each round places `fanout` equally spaced pivots
/// over the shared range, classifies each against the first and last query
/// only, and contracts the range to lie between the greatest pivot below
/// every answer and the least pivot above every answer. Rounds stop when at
/// least `fanout - 2` pivot gaps remain in the band, or when a round fails to
/// halve the range. Each query then binary-searches the contracted range.
pub fn partial_pary_search_by(
    lo: usize,
    hi: usize,
    queries: usize,
    fanout: usize,
    pred: impl Fn(usize, usize) -> bool,
) -> ParySearchResult {
    assert!(fanout >= 3, "fanout must be at least 3");
    assert!(lo <= hi);
    if queries == 0 {
        return ParySearchResult {
            positions: Vec::new(),
            rounds: 0,
            range: (lo, hi),
        };
    }
    let last = queries - 1;
    let (mut a, mut b) = (lo, hi);
    let mut rounds = 0;
    let mut smaller = vec![false; fanout];
    let mut larger = vec![false; fanout];
    while b > a {
        rounds += 1;
        let span = b - a;
        let pivot = |k: usize| a + (k as u128 * span as u128 / (fanout - 1) as u128) as usize;
        // Every pivot of a round is classified before the range moves.
        for k in 0..fanout {
            let t = pivot(k);
            smaller[k] = !pred(0, t);
            larger[k] = pred(last, t);
        }
        let m = (0..fanout).rev().find(|&k| smaller[k]);
        // pivot(fanout - 1) == b is always "larger"
        let n = (0..fanout).find(|&k| larger[k]).unwrap_or(fanout - 1);
        let new_a = m.map_or(a, |k| pivot(k) + 1);
        let new_b = pivot(n);
        let band = n as isize - m.map_or(-1, |k| k as isize);
        let shrunk = 2 * (new_b - new_a) <= span;
        a = new_a;
        b = new_b;
        if band >= (fanout - 2) as isize || !shrunk {
            break;
        }
    }
    let positions = (0..queries).map(|q| lower_bound_by(a, b, |t| pred(q, t))).collect();
    ParySearchResult {
        positions,
        rounds,
        range: (a, b),
    }
}

/// Lower-bound positions (first element `>= query`) of a sorted batch of
/// queries in a sorted haystack.
pub fn partial_pary_search(haystack: &[f64], queries: &[f64], fanout: usize) -> Result<Vec<usize>> {
    Ok(partial_pary_search_stats(haystack, queries, fanout)?.positions)
}

pub fn partial_pary_search_stats(haystack: &[f64], queries: &[f64], fanout: usize) -> Result<ParySearchResult> {
    if fanout < 3 {
        return Err(Error::Config(format!("fanout {fanout} is below 3")));
    }
    let sorted = |v: &[f64]| v.windows(2).all(|w| w[0] <= w[1]) && v.iter().all(|x| !x.is_nan());
    if !sorted(haystack) || !sorted(queries) {
        return Err(Error::UnsortedInput);
    }
    let n = haystack.len();
    Ok(partial_pary_search_by(0, n, queries.len(), fanout, |q, t| {
        t == n || haystack[t] >= queries[q]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_weight_set;
    use crate::partition::partition_items;

    fn lower_bound(h: &[f64], q: f64) -> usize {
        h.partition_point(|&x| x < q)
    }

    #[test]
    fn pary_hand_example() {
        let hay = [1.0, 3.0, 5.0, 7.0, 9.0, 11.0, 13.0, 15.0];
        assert_eq!(partial_pary_search(&hay, &[4.0, 10.0], 4).unwrap(), vec![2, 5]);
        assert_eq!(partial_pary_search(&hay, &[], 4).unwrap(), Vec::<usize>::new());
        assert_eq!(partial_pary_search(&hay, &[1.0], 4).unwrap(), vec![0]);
        assert_eq!(partial_pary_search(&hay, &[16.0], 4).unwrap(), vec![8]);
        assert_eq!(partial_pary_search(&[], &[1.0], 3).unwrap(), vec![0]);
    }

    #[test]
    fn pary_rejects_unsorted() {
        assert!(matches!(partial_pary_search(&[2.0, 1.0], &[1.0], 4), Err(Error::UnsortedInput)));
        assert!(matches!(partial_pary_search(&[1.0, 2.0], &[2.0, 1.0], 4), Err(Error::UnsortedInput)));
        assert!(partial_pary_search(&[1.0], &[1.0], 2).is_err());
    }

    #[test]
    fn pary_ties_are_lower_bound() {
        let hay = [1.0, 2.0, 2.0, 2.0, 3.0];
        assert_eq!(partial_pary_search(&hay, &[2.0, 2.0], 3).unwrap(), vec![1, 1]);
    }

    #[test]
    fn pary_single_query_contracts_geometrically() {
        let hay: Vec<f64> = (0..1_000_000).map(|i| i as f64).collect();
        let r = partial_pary_search_stats(&hay, &[123_456.5], 32).unwrap();
        assert_eq!(r.positions, vec![lower_bound(&hay, 123_456.5)]);
        assert!(r.range.1 - r.range.0 <= 1, "{:?}", r.range);
        assert!(r.rounds <= 5);
    }

    #[test]
    fn hand_split() {
        // Weights [3,1,2,2]: the sweep fills light item 1 from heavy item 0,
        // then closes item 0 with a residual of exactly W/N. After two
        // buckets it stands at one light and one heavy, no heavy left.
        let p = partition_items(&make_weight_set(vec![3.0, 1.0, 2.0, 2.0]).unwrap());
        let plan = compute_split_plan(&p, 2).unwrap();
        assert_eq!(plan.boundaries[1], Boundary { light: 1, heavy: 1, spill: 0.0 });
        assert_eq!(binary_search_boundary(&p, 2), plan.boundaries[1]);
        assert_eq!(binary_search_boundary(&p, 1), Boundary { light: 1, heavy: 0, spill: 2.0 });
        assert_eq!(binary_search_boundary(&p, 0), Boundary::default());
    }

    #[test]
    fn split_tracks_sweep_not_light_greedy() {
        // avg = 1. The sweep closes heavy 0 after one light (residual 0.7),
        // so after two buckets it is at one light, one heavy, with heavy 3
        // holding 1.4 - 0.3 = 1.1.
        let p = partition_items(&make_weight_set(vec![1.5, 0.2, 0.9, 1.4]).unwrap());
        let b = binary_search_boundary(&p, 2);
        assert_eq!((b.light, b.heavy), (1, 1));
        assert!((b.spill - 1.1).abs() < 1e-15);
    }

    #[test]
    fn single_section_plan() {
        let p = partition_items(&make_weight_set(vec![3.0, 1.0, 2.0, 2.0]).unwrap());
        let plan = compute_split_plan(&p, 1).unwrap();
        assert_eq!(plan.boundaries, vec![Boundary::default(), Boundary { light: 3, heavy: 1, spill: 0.0 }]);
    }

    #[test]
    fn no_heavies() {
        let p = partition_items(&make_weight_set(vec![2.0; 10]).unwrap());
        for s in 1..=10 {
            let plan = compute_split_plan(&p, s).unwrap();
            for (i, b) in plan.boundaries.iter().enumerate() {
                assert_eq!(*b, Boundary { light: section_items(i, 10, s), heavy: 0, spill: 0.0 });
            }
        }
    }

    #[test]
    fn invalid_section_counts() {
        let p = partition_items(&make_weight_set(vec![1.0, 2.0]).unwrap());
        assert!(matches!(compute_split_plan(&p, 0), Err(Error::InvalidSectionCount { .. })));
        assert!(matches!(compute_split_plan(&p, 3), Err(Error::InvalidSectionCount { .. })));
    }

    #[test]
    fn pary_plan_matches_binary_plan() {
        let ws: Vec<f64> = (1..=5000).map(|i| 1.0 / ((i * 7919 % 5000) + 1) as f64).collect();
        let p = partition_items(&make_weight_set(ws).unwrap());
        for s in [2, 3, 7, 64, 1024, 5000] {
            let a = compute_split_plan_with(&p, s, SplitSearch::Binary).unwrap();
            for fanout in [3, 8, 32] {
                let b = compute_split_plan_with(&p, s, SplitSearch::PartialPary { fanout }).unwrap();
                assert_eq!(a, b, "s={s} fanout={fanout}");
            }
        }
    }
}
