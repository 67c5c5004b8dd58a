//! Light/heavy classification with weight-carrying arrays and prefix sums,
//! plus the greedy block prepack used by PSA+.
//!
//! Both operations work on fixed-size blocks of the input so the result is
//! independent of how many threads the surrounding rayon pool has.

use rayon::prelude::*;

use crate::model::{Item, Row, WeightSet};
use crate::sum::{excess_dd, CompensatedSum};

/// Input block size for parallel classification and prefix sums.
pub const PARTITION_BLOCK: usize = 1 << 16;

pub const DEFAULT_PREPACK_BLOCK: usize = 4096;
pub const DEFAULT_PREPACK_THRESHOLD: usize = 8;

/// A residual within this fraction of `W/N` is treated as a full bucket.
const FULL_BUCKET_TOL: f64 = 1e-12;

/// Exclusive prefix sums kept as Neumaier (sum, compensation) pairs; entry
/// `k` is the sum of the first `k` weights.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PrefixSums {
    hi: Vec<f64>,
    lo: Vec<f64>,
}

impl PrefixSums {
    /// Number of entries, one more than the number of summed items.
    pub fn len(&self) -> usize {
        self.hi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hi.is_empty()
    }

    #[inline]
    pub fn get(&self, k: usize) -> f64 {
        self.hi[k] + self.lo[k]
    }

    #[inline]
    pub(crate) fn pair(&self, k: usize) -> (f64, f64) {
        (self.hi[k], self.lo[k])
    }

    pub fn to_vec(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.get(k)).collect()
    }

    /// Prefix sums over `items`, computed blockwise in parallel.
    fn build(items: &[Item]) -> Self {
        let blocks: Vec<CompensatedSum> = items
            .par_chunks(PARTITION_BLOCK)
            .map(|c| {
                let mut acc = CompensatedSum::default();
                c.iter().for_each(|it| acc.add(it.weight));
                acc
            })
            .collect();
        let mut bases = Vec::with_capacity(blocks.len());
        let mut run = CompensatedSum::default();
        for b in &blocks {
            bases.push(run);
            run.merge(b);
        }

        let mut hi = vec![0.0; items.len() + 1];
        let mut lo = vec![0.0; items.len() + 1];
        hi[1..]
            .par_chunks_mut(PARTITION_BLOCK)
            .zip(lo[1..].par_chunks_mut(PARTITION_BLOCK))
            .zip(items.par_chunks(PARTITION_BLOCK))
            .zip(bases.par_iter())
            .for_each(|(((hi, lo), chunk), base)| {
                let mut acc = *base;
                for (k, it) in chunk.iter().enumerate() {
                    acc.add(it.weight);
                    hi[k] = acc.sum;
                    lo[k] = acc.comp;
                }
            });
        Self { hi, lo }
    }
}

/// Light items (`w <= W/N`) and heavy items (`w > W/N`) in ascending index
/// order, each carrying its weight, with exclusive prefix sums.
#[derive(Debug, Clone, PartialEq)]
pub struct LightHeavyPartition {
    pub light: Vec<Item>,
    pub heavy: Vec<Item>,
    pub light_prefix: PrefixSums,
    pub heavy_prefix: PrefixSums,
    /// Bucket mass `W/N` of the whole table (not of this partition).
    pub avg: f64,
    /// Total weight of the whole table.
    pub total: f64,
}

impl LightHeavyPartition {
    pub(crate) fn from_arrays(light: Vec<Item>, heavy: Vec<Item>, avg: f64, total: f64) -> Self {
        let light_prefix = PrefixSums::build(&light);
        let heavy_prefix = PrefixSums::build(&heavy);
        Self {
            light,
            heavy,
            light_prefix,
            heavy_prefix,
            avg,
            total,
        }
    }

    /// Items present in this partition.
    pub fn len(&self) -> usize {
        self.light.len() + self.heavy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn light_sum(&self, k: usize) -> f64 {
        self.light_prefix.get(k)
    }

    pub fn heavy_sum(&self, k: usize) -> f64 {
        self.heavy_prefix.get(k)
    }

    /// Residual weight of heavy `j` once lights `[0, i)` and heavies
    /// `[0, j)` have their buckets: `L[i] + H[j+1] - (i+j)*W/N`.
    #[inline]
    pub fn residual(&self, i: usize, j: usize) -> f64 {
        excess_dd(self.light_prefix.pair(i), self.heavy_prefix.pair(j + 1), i + j, self.avg)
    }

    /// Whether heavy `j` still holds more than a bucket at state `(i, j)`.
    #[inline]
    pub fn over_bucket(&self, i: usize, j: usize) -> bool {
        excess_dd(self.light_prefix.pair(i), self.heavy_prefix.pair(j + 1), i + j + 1, self.avg) > 0.0
    }

    /// The sweep's step rule at state `(i, j)`: fill light `i` if one is
    /// left and either no heavy is left or heavy `j` is over a bucket;
    /// otherwise close heavy `j`.
    #[inline]
    pub fn fills_light_at(&self, i: usize, j: usize) -> bool {
        i < self.light.len() && (j >= self.heavy.len() || self.over_bucket(i, j))
    }
}

/// Classifies items against `W/N`. Blocks are classified and scattered in
/// parallel on the current rayon pool; the output order is the sequential
/// ascending order.
pub fn partition_items(w: &WeightSet) -> LightHeavyPartition {
    let avg = w.avg();
    let weights = w.weights();

    let counts: Vec<usize> = weights
        .par_chunks(PARTITION_BLOCK)
        .map(|c| c.iter().filter(|&&x| x <= avg).count())
        .collect();
    let n_light: usize = counts.iter().sum();
    let n_heavy = weights.len() - n_light;

    let mut light = vec![Item::default(); n_light];
    let mut heavy = vec![Item::default(); n_heavy];
    let heavy_counts: Vec<usize> = weights
        .chunks(PARTITION_BLOCK)
        .zip(&counts)
        .map(|(c, &nl)| c.len() - nl)
        .collect();
    let light_parts = split_by_lengths(&mut light, &counts);
    let heavy_parts = split_by_lengths(&mut heavy, &heavy_counts);

    weights
        .par_chunks(PARTITION_BLOCK)
        .zip(light_parts)
        .zip(heavy_parts)
        .enumerate()
        .for_each(|(b, ((chunk, lp), hp))| {
            let base = b * PARTITION_BLOCK;
            let (mut li, mut hi) = (0, 0);
            for (k, &x) in chunk.iter().enumerate() {
                let item = Item { index: base + k, weight: x };
                if x <= avg {
                    lp[li] = item;
                    li += 1;
                } else {
                    hp[hi] = item;
                    hi += 1;
                }
            }
        });

    LightHeavyPartition::from_arrays(light, heavy, avg, w.total())
}

fn split_by_lengths<'a, T>(mut s: &'a mut [T], lens: &[usize]) -> Vec<&'a mut [T]> {
    let mut out = Vec::with_capacity(lens.len());
    for &len in lens {
        let (head, tail) = s.split_at_mut(len);
        out.push(head);
        s = tail;
    }
    out
}

/// Output of [`greedy_prepack`].
#[derive(Debug, Clone)]
pub struct PrepackResult {
    /// Table rows; only rows with `written[i]` set are meaningful.
    pub rows: Vec<Row>,
    pub written: Vec<bool>,
    /// Items whose buckets are still open, with residual weights.
    pub residual: LightHeavyPartition,
    pub handled_fraction: f64,
}

struct BlockResidual {
    light: Vec<Item>,
    heavy: Vec<Item>,
    handled: usize,
}

/// Greedily packs each block of `block_size` items on its own.
///
/// Items already at `W/N` close as full self-aliased buckets. If a block has
/// at least `min_pair_threshold` lights and heavies, it runs the Vose pairing
/// loop over its local lists until it runs out of lights or of heavies. The
/// partially consumed heavy is reclassified by its residual and everything
/// unhandled goes to the residual partition in ascending index order.
pub fn greedy_prepack(w: &WeightSet, block_size: usize, min_pair_threshold: usize) -> PrepackResult {
    assert!(block_size >= 2, "block size must be at least 2");
    assert!(min_pair_threshold >= 1, "pair threshold must be at least 1");
    let n = w.n();
    let avg = w.avg();
    let weights = w.weights();
    let mut rows = vec![Row::default(); n];
    let mut written = vec![false; n];

    let blocks: Vec<BlockResidual> = rows
        .par_chunks_mut(block_size)
        .zip(written.par_chunks_mut(block_size))
        .zip(weights.par_chunks(block_size))
        .enumerate()
        .map(|(b, ((rows, written), ws))| prepack_block(b * block_size, ws, rows, written, avg, min_pair_threshold))
        .collect();

    let handled: usize = blocks.iter().map(|b| b.handled).sum();
    let mut light = Vec::with_capacity(blocks.iter().map(|b| b.light.len()).sum());
    let mut heavy = Vec::with_capacity(blocks.iter().map(|b| b.heavy.len()).sum());
    for b in blocks {
        light.extend(b.light);
        heavy.extend(b.heavy);
    }

    PrepackResult {
        rows,
        written,
        residual: LightHeavyPartition::from_arrays(light, heavy, avg, w.total()),
        handled_fraction: handled as f64 / n as f64,
    }
}

fn prepack_block(
    base: usize,
    ws: &[f64],
    rows: &mut [Row],
    written: &mut [bool],
    avg: f64,
    threshold: usize,
) -> BlockResidual {
    let full_tol = FULL_BUCKET_TOL * avg;
    let mut handled = 0;
    let mut write = |idx: usize, row: Row, rows: &mut [Row]| {
        let local = idx - base;
        debug_assert!(!written[local]);
        rows[local] = row;
        written[local] = true;
        handled += 1;
    };

    let mut light = Vec::new();
    let mut heavy = Vec::new();
    for (k, &x) in ws.iter().enumerate() {
        let item = Item { index: base + k, weight: x };
        if (x - avg).abs() <= full_tol {
            write(item.index, Row { weight: x, alias: item.index }, rows);
        } else if x <= avg {
            light.push(item);
        } else {
            heavy.push(item);
        }
    }

    if light.len() < threshold || heavy.len() < threshold {
        return BlockResidual { light, heavy, handled };
    }

    // Residual of heavy `hj` is `lights[..li] + heavies[..=hj] - (li+hj)*avg`,
    // evaluated like the global sweep so it does not drift.
    let (mut li, mut hj) = (0, 0);
    let mut lsum = CompensatedSum::default();
    let mut hsum = CompensatedSum::default();
    hsum.add(heavy[0].weight);
    let excess = |l: &CompensatedSum, h: &CompensatedSum, k: usize| excess_dd((l.sum, l.comp), (h.sum, h.comp), k, avg);
    loop {
        if excess(&lsum, &hsum, li + hj + 1) > 0.0 {
            let Some(l) = light.get(li) else { break };
            write(l.index, Row { weight: l.weight, alias: heavy[hj].index }, rows);
            lsum.add(l.weight);
            li += 1;
        } else {
            let Some(next) = heavy.get(hj + 1) else { break };
            let residual = excess(&lsum, &hsum, li + hj);
            write(heavy[hj].index, Row { weight: residual, alias: next.index }, rows);
            hsum.add(next.weight);
            hj += 1;
        }
    }
    let residual = excess(&lsum, &hsum, li + hj);

    let open = Item { index: heavy[hj].index, weight: residual };
    let mut out_light: Vec<Item> = light[li..].to_vec();
    let mut out_heavy: Vec<Item> = heavy[hj + 1..].to_vec();
    if (residual - avg).abs() <= full_tol {
        write(open.index, Row { weight: residual, alias: open.index }, rows);
    } else if residual <= avg {
        let pos = out_light.partition_point(|it| it.index < open.index);
        out_light.insert(pos, open);
    } else {
        out_heavy.insert(0, open);
    }
    BlockResidual {
        light: out_light,
        heavy: out_heavy,
        handled,
    }
}
