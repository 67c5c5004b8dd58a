use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use alias_core::bench::{self, BenchConfig, Method as BenchMethod, Sampler as BenchSampler};
use alias_core::io::{self as aio, FileKind};
use alias_core::model::DEFAULT_TOLERANCE;
use alias_core::pack::psa_plus_construct_stats;
use alias_core::partition::{DEFAULT_PREPACK_BLOCK, DEFAULT_PREPACK_THRESHOLD};
use alias_core::sample::{sample_batch_parallel, sectioned_sample_parallel, DEFAULT_SECTION_SIZE};
use alias_core::{
    chi_square_test, frequency_counts, gen, psa_construct, validate_table, vose_construct, AliasTable, Distribution,
    Error, PsaConfig, PsaPlusConfig, RngStream, SplitSearch, WeightSet,
};

type CliResult<T> = std::result::Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(name = "alias", version, about = "Build, sample and benchmark alias tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic weight file
    Gen(GenArgs),
    /// Build an alias table from weights
    Build(BuildArgs),
    /// Draw samples from a table
    Sample(SampleArgs),
    /// Check a table against its weights (mass identity and chi-square)
    Verify(VerifyArgs),
    /// Time construction and sampling, writing CSV
    Bench(BenchArgs),
    /// Convert between binary and text formats
    Convert(ConvertArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Uniform,
    Powerlaw,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Method {
    Vose,
    Psa,
    PsaPlus,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Sampler {
    Baseline,
    Sectioned,
}

#[derive(Args)]
struct DistArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    dist: Dist,
    /// Power-law exponent
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, value_parser = parse_count, default_value = "1e6")]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl DistArgs {
    fn distribution(&self) -> Distribution {
        match self.dist {
            Dist::Uniform => Distribution::Uniform,
            Dist::Powerlaw => Distribution::PowerLaw { alpha: self.alpha },
        }
    }

    fn generate(&self) -> CliResult<WeightSet> {
        if self.n == 0 {
            return Err("--n must be at least 1".into());
        }
        if !(self.alpha >= 0.0) {
            return Err("--alpha must be non-negative".into());
        }
        Ok(gen::generate(self.distribution(), self.n, &mut RngStream::new(self.seed, 0)))
    }
}

#[derive(Args)]
struct BuildOpts {
    #[arg(long, value_enum, default_value = "psa")]
    method: Method,
    #[arg(long, value_parser = parse_count, default_value = "64")]
    splits: usize,
    #[arg(long, value_parser = parse_count, default_value = "1")]
    workers: usize,
    /// Pack through bounded staging buffers
    #[arg(long)]
    chunked: bool,
    #[arg(long, value_parser = parse_count, default_value = "64")]
    chunk_capacity: usize,
    /// PSA+ prepack block size
    #[arg(long, value_parser = parse_count, default_value_t = DEFAULT_PREPACK_BLOCK)]
    block_size: usize,
    /// PSA+ minimum lights and heavies per block before pairing
    #[arg(long, value_parser = parse_count, default_value_t = DEFAULT_PREPACK_THRESHOLD)]
    pair_threshold: usize,
}

impl BuildOpts {
    fn psa(&self) -> PsaConfig {
        PsaConfig {
            sections: self.splits,
            workers: self.workers,
            chunk_capacity: self.chunked.then_some(self.chunk_capacity),
            search: SplitSearch::default(),
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    dist: DistArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    /// Weight file; generated from --dist/--n/--seed when absent
    #[arg(long)]
    weights: Option<PathBuf>,
    #[command(flatten)]
    dist: DistArgs,
    #[command(flatten)]
    opts: BuildOpts,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SamplerOpts {
    /// Sampler to use; `verify` runs both when absent
    #[arg(long, value_enum)]
    sampler: Option<Sampler>,
    #[arg(long, value_parser = parse_count, default_value = "1e6")]
    samples: usize,
    #[arg(long, value_parser = parse_count, default_value_t = DEFAULT_SECTION_SIZE)]
    section_size: usize,
    #[arg(long, value_parser = parse_count, default_value = "1")]
    workers: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl SamplerOpts {
    fn draw(&self, t: &AliasTable, sampler: Sampler) -> CliResult<Vec<usize>> {
        let rng = RngStream::new(self.seed, 0);
        Ok(match sampler {
            Sampler::Baseline => sample_batch_parallel(t, self.samples, &rng, self.workers)?,
            Sampler::Sectioned => {
                let size = self.section_size.min(t.n());
                sectioned_sample_parallel(t, size, self.samples, &rng, self.workers)?
            }
        })
    }
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    table: PathBuf,
    #[command(flatten)]
    opts: SamplerOpts,
    /// Write the sampled item indices (1-based), one per line
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write per-item frequency counts as CSV
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    weights: PathBuf,
    #[command(flatten)]
    opts: SamplerOpts,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[arg(long, default_value_t = 0.001)]
    significance: f64,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    dist: DistArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "vose,psa,psa-plus")]
    method: Vec<Method>,
    #[arg(long, value_parser = parse_count, value_delimiter = ',', default_value = "64")]
    splits: Vec<usize>,
    #[arg(long, value_parser = parse_count, value_delimiter = ',', default_value = "1")]
    workers: Vec<usize>,
    #[arg(long)]
    chunked: bool,
    #[arg(long, value_parser = parse_count, default_value = "64")]
    chunk_capacity: usize,
    #[arg(long, value_parser = parse_count, default_value_t = DEFAULT_PREPACK_BLOCK)]
    block_size: usize,
    #[arg(long, value_parser = parse_count, default_value_t = DEFAULT_PREPACK_THRESHOLD)]
    pair_threshold: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "baseline,sectioned")]
    sampler: Vec<Sampler>,
    #[arg(long, value_parser = parse_count, value_delimiter = ',', default_value = "1e6")]
    samples: Vec<usize>,
    #[arg(long, value_parser = parse_count, value_delimiter = ',', default_value = "16384")]
    section_size: Vec<usize>,
    #[arg(long, value_parser = parse_count, default_value = "5")]
    repetitions: usize,
    #[arg(long, value_parser = parse_count, default_value = "1")]
    warmup: usize,
    /// Skip the sampling benchmarks
    #[arg(long)]
    no_sampling: bool,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ConvertArgs {
    /// ALT1 table or WTS1 weights become text; a text weight list becomes WTS1
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Parses a non-negative integer count, accepting forms such as `1e7`.
fn parse_count(s: &str) -> std::result::Result<usize, String> {
    if let Ok(n) = s.parse::<usize>() {
        return Ok(n);
    }
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a count"))?;
    if !(x >= 0.0) || x.fract() != 0.0 || x > 9.007_199_254_740_992e15 {
        return Err(format!("`{s}` is not a non-negative integer count"));
    }
    Ok(x as usize)
}

fn load_or_generate(path: &Option<PathBuf>, dist: &DistArgs) -> CliResult<WeightSet> {
    match path {
        Some(p) => Ok(load_weights_any(p)?),
        None => dist.generate(),
    }
}

fn load_weights_any(path: &Path) -> CliResult<WeightSet> {
    match aio::sniff(path)? {
        FileKind::Weights => Ok(aio::load_weights(path)?),
        FileKind::Table => Err(format!("{} holds a table, not weights", path.display()).into()),
        FileKind::Other => read_text_weights(path),
    }
}

fn read_text_weights(path: &Path) -> CliResult<WeightSet> {
    let mut ws = Vec::new();
    for (ln, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let x: f64 = tok
                .parse()
                .map_err(|_| Error::Format(format!("line {}: `{tok}` is not a number", ln + 1)))?;
            ws.push(x);
        }
    }
    Ok(WeightSet::new(ws)?)
}

fn build(w: &WeightSet, opts: &BuildOpts) -> CliResult<AliasTable> {
    Ok(match opts.method {
        Method::Vose => vose_construct(w),
        Method::Psa => psa_construct(w, &opts.psa())?,
        Method::PsaPlus => {
            let cfg = PsaPlusConfig {
                psa: opts.psa(),
                block_size: opts.block_size,
                threshold: opts.pair_threshold,
            };
            let out = psa_plus_construct_stats(w, &cfg)?;
            eprintln!("prepack handled {:.1}% of items", 100.0 * out.handled_fraction);
            out.table
        }
    })
}

fn cmd_gen(a: GenArgs) -> CliResult<ExitCode> {
    let w = a.dist.generate()?;
    aio::save_weights(&w, &a.out)?;
    println!("wrote {} weights (total {}) to {}", w.n(), w.total(), a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_build(a: BuildArgs) -> CliResult<ExitCode> {
    let w = load_or_generate(&a.weights, &a.dist)?;
    let start = Instant::now();
    let t = build(&w, &a.opts)?;
    let secs = start.elapsed().as_secs_f64();
    aio::save_table(&t, &a.out)?;
    println!("built {} rows in {:.3} ms, wrote {}", t.n(), secs * 1e3, a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_sample(a: SampleArgs) -> CliResult<ExitCode> {
    let t = aio::load_table(&a.table)?;
    let start = Instant::now();
    let samples = a.opts.draw(&t, a.opts.sampler.unwrap_or(Sampler::Baseline))?;
    let secs = start.elapsed().as_secs_f64();
    println!(
        "drew {} samples in {:.3} ms ({:.3e} samples/s)",
        samples.len(),
        secs * 1e3,
        samples.len() as f64 / secs.max(1e-12)
    );
    if let Some(p) = &a.out {
        let mut f = BufWriter::new(File::create(p)?);
        for s in &samples {
            writeln!(f, "{}", s + 1)?;
        }
        f.flush()?;
    }
    if let Some(p) = &a.csv {
        let counts = frequency_counts(&samples, t.n())?;
        let mut f = csv::Writer::from_path(p)?;
        f.write_record(["item", "count"])?;
        for (i, c) in counts.iter().enumerate() {
            f.write_record([(i + 1).to_string(), c.to_string()])?;
        }
        f.flush()?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(a: VerifyArgs) -> CliResult<ExitCode> {
    let t = aio::load_table(&a.table)?;
    let w = load_weights_any(&a.weights)?;
    let report = validate_table(&t, &w, a.tolerance)?;
    let mut ok = report.ok;
    println!(
        "mass check: {} (worst item {} error {:.3e}, {} bad rows)",
        if report.ok { "pass" } else { "FAIL" },
        report.worst_item + 1,
        report.worst_error,
        report.bad_rows
    );
    let probs = w.probabilities();
    let samplers = match a.opts.sampler {
        Some(s) => vec![s],
        None => vec![Sampler::Baseline, Sampler::Sectioned],
    };
    for s in samplers {
        let samples = a.opts.draw(&t, s)?;
        let counts = frequency_counts(&samples, t.n())?;
        let name = if s == Sampler::Baseline { "baseline" } else { "sectioned" };
        match chi_square_test(&counts, &probs, a.significance) {
            Ok(r) => {
                ok &= r.pass;
                println!(
                    "chi-square {name}: {} (statistic {:.2}, df {}, critical {:.2})",
                    if r.pass { "pass" } else { "FAIL" },
                    r.statistic,
                    r.df,
                    r.critical
                );
            }
            Err(Error::DegenerateBins) => println!("chi-square {name}: skipped (too few bins)"),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_bench(a: BenchArgs) -> CliResult<ExitCode> {
    let methods = a
        .method
        .iter()
        .map(|m| match m {
            Method::Vose => BenchMethod::Vose,
            Method::Psa => BenchMethod::Psa,
            Method::PsaPlus => BenchMethod::PsaPlus,
        })
        .collect();
    let samplers = if a.no_sampling {
        Vec::new()
    } else {
        a.sampler
            .iter()
            .map(|s| match s {
                Sampler::Baseline => BenchSampler::Baseline,
                Sampler::Sectioned => BenchSampler::Sectioned,
            })
            .collect()
    };
    let cfg = BenchConfig {
        n: a.dist.n,
        dist: a.dist.distribution(),
        seed: a.dist.seed,
        methods,
        splits: a.splits,
        workers: a.workers,
        chunk_capacity: a.chunked.then_some(a.chunk_capacity),
        block_size: a.block_size,
        threshold: a.pair_threshold,
        search: SplitSearch::default(),
        samplers,
        samples: a.samples,
        section_sizes: a.section_size,
        repetitions: a.repetitions,
        warmup: a.warmup,
    };
    let rows = bench::bench_run(&cfg)?;
    match &a.csv {
        Some(p) => bench::write_csv(&rows, BufWriter::new(File::create(p)?))?,
        None => bench::write_csv(&rows, std::io::stdout().lock())?,
    }
    eprintln!("{:<10} {:>10} {:>6} {:>7} {:>10} {:>14} {:>14}", "method", "n", "s", "workers", "param", "median_ms", "per_s");
    for s in bench::summarize(&rows) {
        eprintln!(
            "{:<10} {:>10} {:>6} {:>7} {:>10} {:>14.3} {:>14.4e}",
            s.method,
            s.n,
            s.s,
            s.workers,
            s.param,
            s.median_ns * 1e-6,
            s.median_throughput
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_convert(a: ConvertArgs) -> CliResult<ExitCode> {
    match aio::sniff(&a.input)? {
        FileKind::Table => {
            let t = aio::load_table(&a.input)?;
            let mut f = csv::Writer::from_path(&a.out)?;
            f.write_record(["row", "threshold", "alias"])?;
            for (i, r) in t.rows().iter().enumerate() {
                f.write_record([(i + 1).to_string(), r.weight.to_string(), (r.alias + 1).to_string()])?;
            }
            f.flush()?;
        }
        FileKind::Weights => {
            let w = aio::load_weights(&a.input)?;
            let mut f = BufWriter::new(File::create(&a.out)?);
            for x in w.weights() {
                writeln!(f, "{x}")?;
            }
            f.flush()?;
        }
        FileKind::Other => {
            let w = read_text_weights(&a.input)?;
            aio::save_weights(&w, &a.out)?;
        }
    }
    println!("wrote {}", a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Build(a) => cmd_build(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Convert(a) => cmd_convert(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
