//! Section packing and the PSA / PSA+ orchestrators.

use std::cell::UnsafeCell;
#[cfg(debug_assertions)]
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{AliasTable, Item, Row, WeightSet};
use crate::partition::{greedy_prepack, partition_items, LightHeavyPartition};
use crate::split::{compute_split_plan_with, SplitPlan, SplitSearch};

/// Fraction of a staging buffer that must be consumed before it is refilled.
const REFILL_NUM: usize = 2;
const REFILL_DEN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsaConfig {
    pub sections: usize,
    pub workers: usize,
    /// Staging capacity for chunked packing; `None` packs straight from the
    /// light and heavy arrays.
    pub chunk_capacity: Option<usize>,
    pub search: SplitSearch,
}

impl Default for PsaConfig {
    fn default() -> Self {
        Self {
            sections: 64,
            workers: 1,
            chunk_capacity: None,
            search: SplitSearch::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsaPlusConfig {
    pub psa: PsaConfig,
    pub block_size: usize,
    pub threshold: usize,
}

impl Default for PsaPlusConfig {
    fn default() -> Self {
        Self {
            psa: PsaConfig::default(),
            block_size: crate::partition::DEFAULT_PREPACK_BLOCK,
            threshold: crate::partition::DEFAULT_PREPACK_THRESHOLD,
        }
    }
}

/// Destination for bucket writes.
trait RowSink {
    fn put(&mut self, index: usize, row: Row);
}

impl RowSink for &mut [Row] {
    #[inline]
    fn put(&mut self, index: usize, row: Row) {
        self[index] = row;
    }
}

/// Table buffer shared by concurrently packed sections. Sections write
/// disjoint rows, so no two threads ever touch the same cell.
struct SharedRows<'a> {
    cells: &'a [UnsafeCell<Row>],
    #[cfg(debug_assertions)]
    written: Vec<AtomicBool>,
}

// SAFETY: every row index is written by at most one section (checked by the
// written mask in debug builds), and the buffer is only read after all
// sections have been joined.
unsafe impl Sync for SharedRows<'_> {}

impl<'a> SharedRows<'a> {
    fn new(rows: &'a mut [Row], _premarked: Option<&[bool]>) -> Self {
        #[cfg(debug_assertions)]
        let written = match _premarked {
            Some(m) => m.iter().map(|&b| AtomicBool::new(b)).collect(),
            None => (0..rows.len()).map(|_| AtomicBool::new(false)).collect(),
        };
        // SAFETY: UnsafeCell<Row> has the same layout as Row, and the
        // exclusive borrow is held for 'a.
        let cells = unsafe { &*(rows as *mut [Row] as *const [UnsafeCell<Row>]) };
        Self {
            cells,
            #[cfg(debug_assertions)]
            written,
        }
    }
}

impl RowSink for &SharedRows<'_> {
    #[inline]
    fn put(&mut self, index: usize, row: Row) {
        #[cfg(debug_assertions)]
        assert!(!self.written[index].swap(true, Ordering::Relaxed), "row {index} written twice");
        // SAFETY: see the Sync impl.
        unsafe { *self.cells[index].get() = row }
    }
}

/// Where the light and heavy items of a section come from.
trait ItemSource {
    /// Light at array position `pos`, or `None` if it is not staged.
    fn light(&self, pos: usize) -> Option<Item>;
    fn heavy(&self, pos: usize) -> Option<Item>;
}

struct Direct<'a>(&'a LightHeavyPartition);

impl ItemSource for Direct<'_> {
    #[inline]
    fn light(&self, pos: usize) -> Option<Item> {
        Some(self.0.light[pos])
    }
    #[inline]
    fn heavy(&self, pos: usize) -> Option<Item> {
        Some(self.0.heavy[pos])
    }
}

#[derive(Debug, Clone, Copy)]
struct Section {
    index: usize,
    light_end: usize,
    heavy_end: usize,
}

/// Loop state `(i, j)`: next light position and current heavy position.
/// The current heavy's residual is a function of the state, read from the
/// prefix sums.
#[derive(Debug, Clone, Copy)]
struct PackState {
    i: usize,
    j: usize,
    current: Item,
}

enum Progress {
    Done,
    Starved,
}

/// Starting state of a section. The plan's incoming spill must agree with
/// the residual the prefix sums give for the boundary.
fn init_state(p: &LightHeavyPartition, plan: &SplitPlan, section: usize, src: &impl ItemSource) -> Result<PackState> {
    let b = plan.boundaries[section];
    let current = if b.heavy < p.heavy.len() {
        if section > 0 && (b.spill - p.residual(b.light, b.heavy)).abs() > 1e-9 * p.avg {
            return Err(Error::PlanInconsistent { section });
        }
        src.heavy(b.heavy).expect("first heavy must be staged")
    } else {
        Item::default()
    };
    Ok(PackState {
        i: b.light,
        j: b.heavy,
        current,
    })
}

/// Runs the sweep until the section is complete or the source lacks an item
/// the next step needs.
fn pack_until(
    p: &LightHeavyPartition,
    sec: Section,
    st: &mut PackState,
    src: &impl ItemSource,
    out: &mut impl RowSink,
) -> Result<Progress> {
    let nh = p.heavy.len();
    loop {
        if st.i == sec.light_end && st.j == sec.heavy_end {
            return Ok(Progress::Done);
        }
        let fill = p.fills_light_at(st.i, st.j);
        if (fill && st.i == sec.light_end) || (!fill && st.j == sec.heavy_end) {
            return Err(Error::PlanInconsistent { section: sec.index });
        }

        if fill {
            let Some(l) = src.light(st.i) else {
                return Ok(Progress::Starved);
            };
            let alias = if st.j < nh { st.current.index } else { l.index };
            out.put(l.index, Row { weight: l.weight, alias });
            st.i += 1;
        } else {
            let next = if st.j + 1 < nh {
                match src.heavy(st.j + 1) {
                    Some(h) => Some(h),
                    None => return Ok(Progress::Starved),
                }
            } else {
                None
            };
            let h = st.current;
            // Lights exhausted while still over a bucket only happens through
            // rounding; such a bucket is full and keeps itself.
            let alias = match next {
                Some(nx) if !p.over_bucket(st.i, st.j) => nx.index,
                _ => h.index,
            };
            out.put(h.index, Row { weight: p.residual(st.i, st.j), alias });
            if let Some(nx) = next {
                st.current = nx;
            }
            st.j += 1;
        }
    }
}

fn outgoing_spill(p: &LightHeavyPartition, st: &PackState) -> f64 {
    if st.j < p.heavy.len() {
        p.residual(st.i, st.j).max(0.0)
    } else {
        0.0
    }
}

fn section(plan: &SplitPlan, i: usize) -> Section {
    let end = plan.boundaries[i + 1];
    Section {
        index: i,
        light_end: end.light,
        heavy_end: end.heavy,
    }
}

fn check_section(plan: &SplitPlan, i: usize, n: usize) -> Result<()> {
    if i >= plan.sections() {
        return Err(Error::InvalidSectionCount { sections: i, items: n });
    }
    Ok(())
}

/// Writes the buckets of section `i` (0-based) and returns the residual of
/// the heavy item that straddles into the next section.
pub fn pack_section(p: &LightHeavyPartition, plan: &SplitPlan, i: usize, out: &mut [Row]) -> Result<f64> {
    check_section(plan, i, p.len())?;
    pack_section_into(p, plan, i, &mut &mut *out)
}

fn pack_section_into(p: &LightHeavyPartition, plan: &SplitPlan, i: usize, out: &mut impl RowSink) -> Result<f64> {
    let src = Direct(p);
    let mut st = init_state(p, plan, i, &src)?;
    match pack_until(p, section(plan, i), &mut st, &src, out)? {
        Progress::Done => Ok(outgoing_spill(p, &st)),
        Progress::Starved => unreachable!("direct source never starves"),
    }
}

/// Fixed-capacity window over `items[start..limit)`.
struct Stage<'a> {
    items: &'a [Item],
    buf: Vec<Item>,
    start: usize,
    next: usize,
    limit: usize,
    capacity: usize,
}

impl<'a> Stage<'a> {
    fn new(items: &'a [Item], start: usize, limit: usize, capacity: usize) -> Self {
        let mut s = Self {
            items,
            buf: Vec::with_capacity(capacity),
            start,
            next: start,
            limit,
            capacity,
        };
        s.load();
        s
    }

    fn load(&mut self) {
        let take = (self.capacity - self.buf.len()).min(self.limit - self.next);
        self.buf.extend_from_slice(&self.items[self.next..self.next + take]);
        self.next += take;
    }

    #[inline]
    fn get(&self, pos: usize) -> Option<Item> {
        pos.checked_sub(self.start).and_then(|k| self.buf.get(k)).copied()
    }

    /// Drops everything before `consumed_to` and tops the buffer up once more
    /// than two thirds of it has been used. Returns whether it reloaded.
    fn refill(&mut self, consumed_to: usize) -> bool {
        let used = consumed_to.saturating_sub(self.start).min(self.buf.len());
        let exhausted = used == self.buf.len();
        if (used * REFILL_DEN > self.buf.len() * REFILL_NUM || exhausted) && self.next < self.limit {
            self.buf.drain(..used);
            self.start += used;
            self.load();
            true
        } else {
            false
        }
    }
}

struct Staged<'a> {
    light: Stage<'a>,
    heavy: Stage<'a>,
}

impl ItemSource for Staged<'_> {
    #[inline]
    fn light(&self, pos: usize) -> Option<Item> {
        self.light.get(pos)
    }
    #[inline]
    fn heavy(&self, pos: usize) -> Option<Item> {
        self.heavy.get(pos)
    }
}

/// Statistics of one chunked section pack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChunkedOutcome {
    pub spill: f64,
    pub refills: usize,
}

/// Same output as [`pack_section`], but the section's lights and heavies
/// are read through staging buffers of `chunk_capacity` items that are
/// refilled as they drain; the loop state is kept across refills.
pub fn chunked_pack_section(
    p: &LightHeavyPartition,
    plan: &SplitPlan,
    i: usize,
    chunk_capacity: usize,
    out: &mut [Row],
) -> Result<f64> {
    check_section(plan, i, p.len())?;
    Ok(chunked_pack_into(p, plan, i, chunk_capacity, &mut &mut *out)?.spill)
}

pub fn chunked_pack_section_stats(
    p: &LightHeavyPartition,
    plan: &SplitPlan,
    i: usize,
    chunk_capacity: usize,
    out: &mut [Row],
) -> Result<ChunkedOutcome> {
    check_section(plan, i, p.len())?;
    chunked_pack_into(p, plan, i, chunk_capacity, &mut &mut *out)
}

fn chunked_pack_into(
    p: &LightHeavyPartition,
    plan: &SplitPlan,
    i: usize,
    chunk_capacity: usize,
    out: &mut impl RowSink,
) -> Result<ChunkedOutcome> {
    if chunk_capacity < 2 {
        return Err(Error::Config(format!("chunk capacity {chunk_capacity} is below 2")));
    }
    let (start, end) = (plan.boundaries[i], plan.boundaries[i + 1]);
    // One heavy of lookahead: closing the last heavy reads the next one.
    let heavy_limit = (end.heavy + 1).min(p.heavy.len());
    let mut src = Staged {
        light: Stage::new(&p.light, start.light, end.light, chunk_capacity),
        heavy: Stage::new(&p.heavy, start.heavy, heavy_limit, chunk_capacity),
    };
    let sec = section(plan, i);
    let mut st = init_state(p, plan, i, &src)?;
    let mut refills = 0;
    loop {
        match pack_until(p, sec, &mut st, &src, out)? {
            Progress::Done => break,
            Progress::Starved => {
                let a = src.light.refill(st.i);
                let b = src.heavy.refill(st.j + 1);
                if !(a || b) {
                    return Err(Error::PlanInconsistent { section: i });
                }
                refills += 1;
            }
        }
    }
    Ok(ChunkedOutcome {
        spill: outgoing_spill(p, &st),
        refills,
    })
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::Config("worker count must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))
}

/// Packs every section of `plan` into `rows`, distributing contiguous runs
/// of sections over `workers` tasks. Returns the outgoing spills.
fn pack_all(
    p: &LightHeavyPartition,
    plan: &SplitPlan,
    workers: usize,
    chunk_capacity: Option<usize>,
    rows: &mut [Row],
    premarked: Option<&[bool]>,
) -> Result<Vec<f64>> {
    let s = plan.sections();
    let shared = SharedRows::new(rows, premarked);
    let tasks = workers.min(s).max(1);
    let spills: Vec<Vec<f64>> = (0..tasks)
        .into_par_iter()
        .map(|t| {
            let mut sink = &shared;
            (t * s / tasks..(t + 1) * s / tasks)
                .map(|i| match chunk_capacity {
                    Some(c) => chunked_pack_into(p, plan, i, c, &mut sink).map(|o| o.spill),
                    None => pack_section_into(p, plan, i, &mut sink),
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(spills.into_iter().flatten().collect())
}

/// Partition, split and pack on a pool of `workers` threads.
pub fn psa_construct(w: &WeightSet, cfg: &PsaConfig) -> Result<AliasTable> {
    if cfg.sections == 0 {
        return Err(Error::InvalidSectionCount { sections: 0, items: w.n() });
    }
    let pool = thread_pool(cfg.workers)?;
    pool.install(|| {
        let p = partition_items(w);
        let s = cfg.sections.min(p.len());
        let plan = compute_split_plan_with(&p, s, cfg.search)?;
        let mut rows = vec![Row::default(); w.n()];
        pack_all(&p, &plan, cfg.workers, cfg.chunk_capacity, &mut rows, None)?;
        Ok(AliasTable::from_rows(rows, w.total()))
    })
}

/// Result of [`psa_plus_construct_stats`].
#[derive(Debug, Clone)]
pub struct PsaPlusOutcome {
    pub table: AliasTable,
    pub handled_fraction: f64,
    /// Items left for the split/pack phase.
    pub residual_items: usize,
}

/// Greedy block prepack, then PSA over whatever is left.
pub fn psa_plus_construct(w: &WeightSet, cfg: &PsaPlusConfig) -> Result<AliasTable> {
    Ok(psa_plus_construct_stats(w, cfg)?.table)
}

pub fn psa_plus_construct_stats(w: &WeightSet, cfg: &PsaPlusConfig) -> Result<PsaPlusOutcome> {
    if cfg.psa.sections == 0 {
        return Err(Error::InvalidSectionCount { sections: 0, items: w.n() });
    }
    if cfg.block_size < 2 || cfg.threshold < 1 {
        return Err(Error::Config("block size must be >= 2 and threshold >= 1".into()));
    }
    let pool = thread_pool(cfg.psa.workers)?;
    pool.install(|| {
        let pre = greedy_prepack(w, cfg.block_size, cfg.threshold);
        let mut rows = pre.rows;
        let residual = &pre.residual;
        if !residual.is_empty() {
            let s = cfg.psa.sections.min(residual.len());
            let plan = compute_split_plan_with(residual, s, cfg.psa.search)?;
            pack_all(residual, &plan, cfg.psa.workers, cfg.psa.chunk_capacity, &mut rows, Some(&pre.written))?;
        }
        Ok(PsaPlusOutcome {
            table: AliasTable::from_rows(rows, w.total()),
            handled_fraction: pre.handled_fraction,
            residual_items: residual.len(),
        })
    })
}
