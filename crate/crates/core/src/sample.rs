//! Sampling from alias tables: one-at-a-time draws and sectioned batches.
//!
//! Sectioned sampling splits the table into sections of `S` rows and decides
//! how many of the `M` samples fall into each section before drawing any of
//! them. Because every row carries the same mass, the number of samples in a
//! range of rows is binomial in the range's share of rows. The assignment is
//! made by recursive halving, and each node's binomial draw uses a stream
//! keyed by the node's row range, so any worker can recompute the count of
//! any section on its own.

use std::ops::Range;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::AliasTable;
use crate::rng::{pair_key, RngStream};

/// Default section size in rows (256 KiB of 16-byte rows).
pub const DEFAULT_SECTION_SIZE: usize = 1 << 14;

/// Below this many trials binomial deviates are drawn by exact inversion.
pub const EXACT_BINOMIAL_LIMIT: u64 = 100;

/// Samples drawn per derived stream in parallel batch sampling.
const BATCH_CHUNK: usize = 1 << 16;

const TREE_TAG: u64 = 0x7472_6565;
const DRAW_TAG: u64 = 0x6472_6177;

#[inline]
pub fn sample_one(t: &AliasTable, rng: &mut RngStream) -> usize {
    t.resolve(rng.next_f64())
}

/// `m` sequential draws from one stream.
pub fn sample_batch(t: &AliasTable, m: usize, rng: &mut RngStream) -> Vec<usize> {
    let avg = t.avg();
    (0..m).map(|_| t.resolve_with_avg(rng.next_f64(), avg)).collect()
}

/// `m` draws split into fixed-size chunks, chunk `c` using `rng.derive(c)`.
/// The output does not depend on `workers`.
pub fn sample_batch_parallel(t: &AliasTable, m: usize, rng: &RngStream, workers: usize) -> Result<Vec<usize>> {
    let pool = pool(workers)?;
    let avg = t.avg();
    let mut out = vec![0usize; m];
    pool.install(|| {
        out.par_chunks_mut(BATCH_CHUNK).enumerate().for_each(|(c, chunk)| {
            let mut r = rng.derive(c as u64);
            for slot in chunk {
                *slot = t.resolve_with_avg(r.next_f64(), avg);
            }
        })
    });
    Ok(out)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::Config("worker count must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))
}

/// A binomial deviate: exact inversion for `m < 100`, otherwise a rounded
/// normal approximation clamped to `[0, m]`.
pub fn binomial(m: u64, q: f64, rng: &mut RngStream) -> u64 {
    if m == 0 || q <= 0.0 {
        return 0;
    }
    if q >= 1.0 {
        return m;
    }
    if m < EXACT_BINOMIAL_LIMIT {
        let (qq, flip) = if q > 0.5 { (1.0 - q, true) } else { (q, false) };
        let u = rng.next_f64();
        let ratio = qq / (1.0 - qq);
        let mut pk = (1.0 - qq).powi(m as i32);
        let mut cdf = pk;
        let mut k = 0;
        while u >= cdf && k < m {
            pk *= (m - k) as f64 / (k + 1) as f64 * ratio;
            k += 1;
            cdf += pk;
        }
        if flip {
            m - k
        } else {
            k
        }
    } else {
        let z: f64 = StandardNormal.sample(rng);
        let mf = m as f64;
        let x = (mf * q + z * (mf * q * (1.0 - q)).sqrt()).round();
        x.clamp(0.0, mf) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionAssignment {
    pub n_rows: usize,
    pub section_size: usize,
    pub total: u64,
    pub counts: Vec<u64>,
}

impl SectionAssignment {
    pub fn sections(&self) -> usize {
        self.counts.len()
    }

    pub fn rows(&self, j: usize) -> Range<usize> {
        section_rows(self.n_rows, self.section_size, j)
    }
}

pub fn section_count(n_rows: usize, section_size: usize) -> usize {
    n_rows.div_ceil(section_size)
}

pub fn section_rows(n_rows: usize, section_size: usize, j: usize) -> Range<usize> {
    j * section_size..((j + 1) * section_size).min(n_rows)
}

struct Tree<'a> {
    n_rows: usize,
    size: usize,
    key: &'a RngStream,
}

impl Tree<'_> {
    fn rows(&self, secs: &Range<usize>) -> Range<usize> {
        secs.start * self.size..(secs.end * self.size).min(self.n_rows)
    }

    /// Samples of a node that go to its left half.
    fn split(&self, secs: &Range<usize>, m: u64) -> (usize, u64) {
        let mid = secs.start + (secs.end - secs.start) / 2;
        let rows = self.rows(secs);
        let left = self.rows(&(secs.start..mid));
        let q = left.len() as f64 / rows.len() as f64;
        let mut r = self.key.derive(pair_key(rows.start as u64, rows.end as u64));
        (mid, binomial(m, q, &mut r))
    }

    fn fill(&self, secs: Range<usize>, m: u64, out: &mut [u64]) {
        if secs.len() == 1 {
            out[0] = m;
            return;
        }
        let (mid, left) = self.split(&secs, m);
        let (lo, hi) = out.split_at_mut(mid - secs.start);
        self.fill(secs.start..mid, left, lo);
        self.fill(mid..secs.end, m - left, hi);
    }
}

fn check_size(n_rows: usize, section_size: usize) -> Result<()> {
    if section_size == 0 || section_size > n_rows {
        return Err(Error::InvalidSectionSize { size: section_size, rows: n_rows });
    }
    Ok(())
}

fn tree_key(key: &RngStream) -> RngStream {
    key.derive(TREE_TAG)
}

/// Per-section sample counts for `m` samples over `n_rows` rows.
pub fn assign_sections(n_rows: usize, section_size: usize, m: u64, key: &RngStream) -> Result<SectionAssignment> {
    check_size(n_rows, section_size)?;
    let k = section_count(n_rows, section_size);
    let tk = tree_key(key);
    let tree = Tree { n_rows, size: section_size, key: &tk };
    let mut counts = vec![0; k];
    tree.fill(0..k, m, &mut counts);
    Ok(SectionAssignment {
        n_rows,
        section_size,
        total: m,
        counts,
    })
}

/// Counts for the subtree rooted at the node covering `sections`, given the
/// number of samples that node received. `sections` must be a node of the
/// halving tree.
pub fn assign_subtree(
    n_rows: usize,
    section_size: usize,
    key: &RngStream,
    sections: Range<usize>,
    m: u64,
) -> Result<Vec<u64>> {
    check_size(n_rows, section_size)?;
    let tk = tree_key(key);
    let tree = Tree { n_rows, size: section_size, key: &tk };
    let mut counts = vec![0; sections.len()];
    tree.fill(sections, m, &mut counts);
    Ok(counts)
}

/// Count of a single section, found by walking root to leaf without
/// touching any other branch.
pub fn section_sample_count(n_rows: usize, section_size: usize, m: u64, key: &RngStream, j: usize) -> Result<u64> {
    check_size(n_rows, section_size)?;
    let k = section_count(n_rows, section_size);
    assert!(j < k, "section {j} out of {k}");
    let tk = tree_key(key);
    let tree = Tree { n_rows, size: section_size, key: &tk };
    let (mut secs, mut m) = (0..k, m);
    while secs.len() > 1 {
        let (mid, left) = tree.split(&secs, m);
        if j < mid {
            secs = secs.start..mid;
            m = left;
        } else {
            secs = mid..secs.end;
            m -= left;
        }
    }
    Ok(m)
}

#[inline]
fn draw_in_section(t: &AliasTable, rows: &Range<usize>, avg: f64, u: f64) -> usize {
    let len = rows.len();
    let x = u * len as f64;
    let k = (x as usize).min(len - 1);
    let row_index = rows.start + k;
    debug_assert!(rows.contains(&row_index));
    let row = t.rows()[row_index];
    if (x - k as f64) * avg < row.weight {
        row_index
    } else {
        row.alias
    }
}

/// `m` samples, drawn section by section. Output is section-major.
pub fn sectioned_sample(t: &AliasTable, section_size: usize, m: usize, rng: &RngStream) -> Result<Vec<usize>> {
    sectioned_sample_parallel(t, section_size, m, rng, 1)
}

/// As [`sectioned_sample`], with sections spread over `workers` threads.
/// The output does not depend on `workers`.
pub fn sectioned_sample_parallel(
    t: &AliasTable,
    section_size: usize,
    m: usize,
    rng: &RngStream,
    workers: usize,
) -> Result<Vec<usize>> {
    let a = assign_sections(t.n(), section_size, m as u64, rng)?;
    let draw_key = rng.derive(DRAW_TAG);
    let avg = t.avg();
    let mut out = vec![0usize; m];
    let lens: Vec<usize> = a.counts.iter().map(|&c| c as usize).collect();
    let mut slices = Vec::with_capacity(lens.len());
    let mut rest = out.as_mut_slice();
    for &len in &lens {
        let (head, tail) = rest.split_at_mut(len);
        slices.push(head);
        rest = tail;
    }
    let fill = |(j, slice): (usize, &mut [usize])| {
        let rows = a.rows(j);
        let mut r = draw_key.derive(j as u64);
        for slot in slice.iter_mut() {
            *slot = draw_in_section(t, &rows, avg, r.next_f64());
        }
    };
    if workers == 1 {
        slices.into_iter().enumerate().for_each(fill);
    } else {
        pool(workers)?.install(|| slices.into_par_iter().enumerate().for_each(fill));
    }
    Ok(out)
}
