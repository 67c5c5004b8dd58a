//! Timing harness for construction and sampling.
//!
//! Every measurement becomes one CSV row
//! `method,n,s,workers,param,repetition,wall_time_ns,throughput_per_s`.
//! For construction rows `s` is the section count and `param` the chunk
//! capacity (chunked PSA) or prepack block size (PSA+), 0 otherwise; the
//! throughput is items per second. For sampling rows `s` is the section size
//! (0 for baseline) and `param` the number of samples; the throughput is
//! samples per second.

use std::collections::BTreeMap;
use std::hint::black_box;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gen::{generate, Distribution};
use crate::model::{AliasTable, WeightSet};
use crate::pack::{psa_construct, psa_plus_construct, PsaConfig, PsaPlusConfig};
use crate::rng::RngStream;
use crate::sample::{sample_batch_parallel, sectioned_sample_parallel};
use crate::seqbuild::vose_construct;
use crate::split::SplitSearch;

pub const MIN_REPETITIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Vose,
    Psa,
    PsaPlus,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Vose => "vose",
            Method::Psa => "psa",
            Method::PsaPlus => "psa-plus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sampler {
    Baseline,
    Sectioned,
}

impl Sampler {
    pub fn name(self) -> &'static str {
        match self {
            Sampler::Baseline => "baseline",
            Sampler::Sectioned => "sectioned",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub n: usize,
    pub dist: Distribution,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub splits: Vec<usize>,
    pub workers: Vec<usize>,
    pub chunk_capacity: Option<usize>,
    pub block_size: usize,
    pub threshold: usize,
    pub search: SplitSearch,
    pub samplers: Vec<Sampler>,
    pub samples: Vec<usize>,
    pub section_sizes: Vec<usize>,
    pub repetitions: usize,
    pub warmup: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n: 1_000_000,
            dist: Distribution::Uniform,
            seed: 1,
            methods: vec![Method::Vose, Method::Psa, Method::PsaPlus],
            splits: vec![64],
            workers: vec![1],
            chunk_capacity: None,
            block_size: crate::partition::DEFAULT_PREPACK_BLOCK,
            threshold: crate::partition::DEFAULT_PREPACK_THRESHOLD,
            search: SplitSearch::default(),
            samplers: vec![Sampler::Baseline, Sampler::Sectioned],
            samples: vec![1_000_000],
            section_sizes: vec![crate::sample::DEFAULT_SECTION_SIZE],
            repetitions: MIN_REPETITIONS,
            warmup: 1,
        }
    }
}

impl BenchConfig {
    fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n == 0 {
            return bad("n must be at least 1");
        }
        if self.repetitions < MIN_REPETITIONS {
            return bad("at least 5 repetitions are required");
        }
        if self.splits.iter().any(|&s| s == 0) || self.workers.iter().any(|&w| w == 0) {
            return bad("splits and workers must be at least 1");
        }
        if self.section_sizes.iter().any(|&s| s == 0 || s > self.n) && self.samplers.contains(&Sampler::Sectioned) {
            return bad("section size must be in 1..=n");
        }
        if self.workers.is_empty() || (self.methods.contains(&Method::Psa) && self.splits.is_empty()) {
            return bad("empty worker or split list");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: String,
    pub n: usize,
    pub s: usize,
    pub workers: usize,
    pub param: usize,
    pub repetition: usize,
    pub wall_time_ns: u128,
    pub throughput_per_s: f64,
}

fn time<T>(f: impl FnOnce() -> Result<T>) -> Result<u128> {
    let start = Instant::now();
    black_box(f()?);
    Ok(start.elapsed().as_nanos().max(1))
}

fn repeat(
    cfg: &BenchConfig,
    rows: &mut Vec<BenchRow>,
    key: (&str, usize, usize, usize),
    units: usize,
    mut f: impl FnMut() -> Result<u128>,
) -> Result<()> {
    let (method, s, workers, param) = key;
    for _ in 0..cfg.warmup {
        f()?;
    }
    for repetition in 0..cfg.repetitions {
        let ns = f()?;
        rows.push(BenchRow {
            method: method.to_string(),
            n: cfg.n,
            s,
            workers,
            param,
            repetition,
            wall_time_ns: ns,
            throughput_per_s: units as f64 / (ns as f64 * 1e-9),
        });
    }
    Ok(())
}

pub fn bench_run(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    cfg.check()?;
    let weights = generate(cfg.dist, cfg.n, &mut RngStream::new(cfg.seed, 0));
    let mut rows = Vec::new();
    bench_construction(cfg, &weights, &mut rows)?;
    if !cfg.samplers.is_empty() {
        let table = vose_construct(&weights);
        bench_sampling(cfg, &table, &mut rows)?;
    }
    Ok(rows)
}

fn bench_construction(cfg: &BenchConfig, w: &WeightSet, rows: &mut Vec<BenchRow>) -> Result<()> {
    let n = cfg.n;
    for &method in &cfg.methods {
        match method {
            Method::Vose => {
                repeat(cfg, rows, (method.name(), 1, 1, 0), n, || time(|| Ok(vose_construct(w))))?;
            }
            Method::Psa | Method::PsaPlus => {
                for &s in &cfg.splits {
                    for &workers in &cfg.workers {
                        let psa = PsaConfig {
                            sections: s,
                            workers,
                            chunk_capacity: cfg.chunk_capacity,
                            search: cfg.search,
                        };
                        if method == Method::Psa {
                            let param = cfg.chunk_capacity.unwrap_or(0);
                            repeat(cfg, rows, (method.name(), s, workers, param), n, || {
                                time(|| psa_construct(w, &psa))
                            })?;
                        } else {
                            let plus = PsaPlusConfig {
                                psa,
                                block_size: cfg.block_size,
                                threshold: cfg.threshold,
                            };
                            repeat(cfg, rows, (method.name(), s, workers, cfg.block_size), n, || {
                                time(|| psa_plus_construct(w, &plus))
                            })?;
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn bench_sampling(cfg: &BenchConfig, t: &AliasTable, rows: &mut Vec<BenchRow>) -> Result<()> {
    let mut stream = 1u64;
    for &sampler in &cfg.samplers {
        for &m in &cfg.samples {
            for &workers in &cfg.workers {
                let sizes: Vec<usize> = match sampler {
                    Sampler::Baseline => vec![0],
                    Sampler::Sectioned => cfg.section_sizes.clone(),
                };
                for size in sizes {
                    repeat(cfg, rows, (sampler.name(), size, workers, m), m, || {
                        stream += 1;
                        let rng = RngStream::new(cfg.seed, stream);
                        time(|| match sampler {
                            Sampler::Baseline => sample_batch_parallel(t, m, &rng, workers),
                            Sampler::Sectioned => sectioned_sample_parallel(t, size, m, &rng, workers),
                        })
                    })?;
                }
            }
        }
    }
    Ok(())
}

pub fn write_csv(rows: &[BenchRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSummary {
    pub method: String,
    pub n: usize,
    pub s: usize,
    pub workers: usize,
    pub param: usize,
    pub repetitions: usize,
    pub median_ns: f64,
    pub median_throughput: f64,
}

pub fn median(xs: &mut [f64]) -> f64 {
    assert!(!xs.is_empty());
    xs.sort_by(f64::total_cmp);
    let k = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[k]
    } else {
        0.5 * (xs[k - 1] + xs[k])
    }
}

/// Median time and throughput per configuration, in first-seen order.
pub fn summarize(rows: &[BenchRow]) -> Vec<BenchSummary> {
    let mut order = Vec::new();
    let mut groups: BTreeMap<(String, usize, usize, usize, usize), Vec<&BenchRow>> = BTreeMap::new();
    for r in rows {
        let key = (r.method.clone(), r.n, r.s, r.workers, r.param);
        groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            Vec::new()
        }).push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let g = &groups[&key];
            let mut ns: Vec<f64> = g.iter().map(|r| r.wall_time_ns as f64).collect();
            let mut tp: Vec<f64> = g.iter().map(|r| r.throughput_per_s).collect();
            BenchSummary {
                method: key.0,
                n: key.1,
                s: key.2,
                workers: key.3,
                param: key.4,
                repetitions: g.len(),
                median_ns: median(&mut ns),
                median_throughput: median(&mut tp),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BenchConfig {
        BenchConfig {
            n: 2000,
            samples: vec![5000],
            section_sizes: vec![64],
            warmup: 0,
            ..Default::default()
        }
    }

    #[test]
    fn rows_carry_configuration() {
        let rows = bench_run(&small()).unwrap();
        // 3 construction methods and 2 samplers, 5 repetitions each
        assert_eq!(rows.len(), 25);
        assert!(rows.iter().all(|r| r.wall_time_ns > 0 && r.n == 2000));
        let vose: Vec<_> = rows.iter().filter(|r| r.method == "vose").collect();
        assert_eq!(vose.len(), 5);
        assert_eq!(vose.iter().map(|r| r.repetition).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
        for r in rows.iter().filter(|r| r.method == "baseline") {
            let expect = 5000.0 / (r.wall_time_ns as f64 * 1e-9);
            assert!((r.throughput_per_s - expect).abs() <= 1e-9 * expect);
            assert_eq!(r.param, 5000);
        }
    }

    #[test]
    fn csv_header_and_parse() {
        let rows = bench_run(&BenchConfig { samplers: vec![], methods: vec![Method::Vose], ..small() }).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("method,n,s,workers,param,repetition,wall_time_ns,throughput_per_s\n"));
        let back: Vec<BenchRow> = csv::Reader::from_reader(text.as_bytes())
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn config_errors() {
        assert!(bench_run(&BenchConfig { repetitions: 3, ..small() }).is_err());
        assert!(bench_run(&BenchConfig { workers: vec![0], ..small() }).is_err());
        assert!(bench_run(&BenchConfig { section_sizes: vec![5000], ..small() }).is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        let rows = bench_run(&BenchConfig { samplers: vec![], methods: vec![Method::Vose], ..small() }).unwrap();
        let s = summarize(&rows);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].repetitions, 5);
    }
}
