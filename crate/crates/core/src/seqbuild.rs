//! Sequential Vose construction. This is the reference every parallel method
//! is compared against, so it favours a plain, obviously-correct loop.

use crate::model::{AliasTable, Row, WeightSet};
use crate::partition::partition_items;

/// Builds an alias table in one pass over ascending light and heavy lists.
///
/// State is `(i, j)`: lights `[0, i)` and heavies `[0, j)` have their
/// buckets written. The next step fills light `i` while heavy `j` is still
/// heavier than a bucket (or no heavy is left), aliasing it to heavy `j`,
/// and otherwise closes heavy `j`'s bucket with its residual weight,
/// aliasing it to the next heavy, which absorbs the deficit.
///
/// The residual of heavy `j` is `L[i] + H[j+1] - (i+j)*W/N`, read from
/// compensated prefix sums rather than carried as a running difference, so
/// rounding never accumulates along the sweep.
pub fn vose_construct(w: &WeightSet) -> AliasTable {
    let n = w.n();
    let p = partition_items(w);
    let (nl, nh) = (p.light.len(), p.heavy.len());

    let mut rows = vec![Row::default(); n];
    let mut written = vec![false; n];
    let mut mark = |i: usize| {
        debug_assert!(!written[i], "bucket {i} written twice");
        written[i] = true;
    };

    let (mut i, mut j) = (0, 0);
    while i < nl || j < nh {
        if p.fills_light_at(i, j) {
            let l = p.light[i];
            let alias = if j < nh { p.heavy[j].index } else { l.index };
            rows[l.index] = Row { weight: l.weight, alias };
            mark(l.index);
            i += 1;
        } else {
            let h = p.heavy[j];
            // Lights exhausted while still over a bucket only happens through
            // rounding; such a bucket is full and keeps itself.
            let alias = match p.heavy.get(j + 1) {
                Some(nx) if !p.over_bucket(i, j) => nx.index,
                _ => h.index,
            };
            rows[h.index] = Row { weight: p.residual(i, j), alias };
            mark(h.index);
            j += 1;
        }
    }
    AliasTable::from_rows(rows, w.total())
}
