//! Command-line front end: expansion, expectation, shuffle products, benchmarking and
//! Monte-Carlo checks.

pub mod bench;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use stochexp::algebra::{parse_term_line, ShuffleAlgorithm};
use stochexp::expectation::{expect_expansion_file, expect_lincomb, expect_word};
use stochexp::mc::{mc_expect_words, mc_solve_mean, mc_word_samples, write_samples_csv, McConfig};
use stochexp::model::ModelConfig;
use stochexp::picard::{picard_direct, picard_q};
use stochexp::pipeline::{expand_record, run_pipeline, StageConfig, DEFAULT_MEMORY_TERM_CAP};
use stochexp::{Coefficient, Letter, Word, WordLimit};

#[derive(Debug, Parser)]
#[command(
    name = "stochexp",
    version,
    about = "Truncated stochastic Taylor expansions"
)]
pub struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expand a model config through the staged pipeline.
    Expand(ExpandArgs),
    /// Exact expectation of an expansion file as a polynomial in time.
    Expect(ExpectArgs),
    /// Shuffle product of two words.
    Shuffle(ProductArgs),
    /// Dendriform product `J^a ▷ J^b` of two words.
    Ncp(ProductArgs),
    /// Print the compact Picard expression over Q0..Qq.
    PicardQ(PicardQArgs),
    /// Time the recursive against the iterative shuffle; CSV on stdout.
    BenchShuffle(BenchArgs),
    /// Monte-Carlo check of exact expectations.
    McCheck(McCheckArgs),
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    /// Model config (TOML).
    pub config: PathBuf,
    /// Output file [default: from config].
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Worker threads [default: from config].
    #[arg(long)]
    pub workers: Option<usize>,
    /// Directory for intermediate files [default: from config].
    #[arg(long)]
    pub workdir: Option<PathBuf>,
    /// Longest word kept, or `unbounded` [default: from config].
    #[arg(long, value_parser = parse_limit)]
    pub max_word_length: Option<WordLimit>,
    /// Most terms a worker or the aggregator may hold in memory.
    #[arg(long, default_value_t = DEFAULT_MEMORY_TERM_CAP)]
    pub memory_term_cap: usize,
    /// Keep the stage shard files.
    #[arg(long)]
    pub keep_intermediate: bool,
    /// Picard iterations [default: from config].
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Initial value, overriding the config (e.g. a symbol `y0`).
    #[arg(long)]
    pub y0: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExpectArgs {
    /// Expansion file, one `coefficient ; word` line per term.
    pub file: PathBuf,
    /// Name of the time variable in the output.
    #[arg(long, default_value = "T")]
    pub time_symbol: String,
    /// Letter of the time driver.
    #[arg(long, default_value_t = 0)]
    pub time_letter: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Recursive,
    Iterative,
}

impl From<Algo> for ShuffleAlgorithm {
    fn from(a: Algo) -> Self {
        match a {
            Algo::Recursive => ShuffleAlgorithm::Recursive,
            Algo::Iterative => ShuffleAlgorithm::Iterative,
        }
    }
}

#[derive(Debug, Args)]
pub struct ProductArgs {
    /// Comma separated letters; `""` is the empty word.
    #[arg(allow_hyphen_values = true)]
    pub a: String,
    #[arg(allow_hyphen_values = true)]
    pub b: String,
    #[arg(long, value_enum, default_value_t = Algo::Iterative)]
    pub algo: Algo,
}

#[derive(Debug, Args)]
pub struct PicardQArgs {
    /// Picard iterations.
    pub iterations: usize,
    /// Degree of the vector fields.
    pub degree: usize,
    /// Print the expanded Q-monomials, one per line.
    #[arg(long)]
    pub monomials: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Largest total word length.
    #[arg(long, default_value_t = 14)]
    pub max_length: usize,
    /// Smallest total word length.
    #[arg(long, default_value_t = 2)]
    pub min_length: usize,
    /// Word pairs per length.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Letters are drawn from `0..alphabet`.
    #[arg(long, default_value_t = 3)]
    pub alphabet: u16,
    /// RNG seed [default: drawn from entropy and logged].
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("mode").required(true).args(["word", "full"]))]
pub struct McCheckArgs {
    /// Word to check against its closed-form expectation (repeatable).
    #[arg(long)]
    pub word: Vec<String>,
    /// Model config: compare the mean solution against the expanded expectation.
    #[arg(long, value_name = "CONFIG")]
    pub full: Option<PathBuf>,
    /// Numeric parameter binding `name=value` (repeatable).
    #[arg(long = "param", value_parser = parse_binding)]
    pub params: Vec<(String, f64)>,
    /// Time horizon.
    #[arg(short = 'T', long, default_value_t = 1.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1024)]
    pub steps: usize,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// RNG seed [default: drawn from entropy and logged].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of drivers for --word [default: enough for the words, at least 2].
    #[arg(long)]
    pub drivers: Option<usize>,
    /// Letter of the time driver for --word.
    #[arg(long, default_value_t = 0)]
    pub time_letter: u16,
    /// Picard iterations for --full [default: from config].
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Fail when any |z| exceeds this.
    #[arg(long, default_value_t = 4.0)]
    pub z_threshold: f64,
    /// Write per-sample values of the --word integrals as CSV.
    #[arg(long)]
    pub samples_csv: Option<PathBuf>,
}

fn parse_limit(s: &str) -> Result<WordLimit, String> {
    if s == "unbounded" {
        return Ok(None);
    }
    s.parse::<usize>()
        .map(Some)
        .map_err(|_| format!("expected an integer or `unbounded`, found `{s}`"))
}

fn parse_binding(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, found `{s}`"))?;
    let v = v
        .trim()
        .parse::<f64>()
        .map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k.trim().to_string(), v))
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// A statistical check exceeded its threshold.
    ValidationFailed,
}

/// Process exit status for a failed command: 3 for a memory-cap violation, 2 otherwise.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<stochexp::Error>() {
        Some(stochexp::Error::TermCapExceeded { .. }) => 3,
        _ => 2,
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Expand(a) => expand(a, out),
        Command::Expect(a) => expect(a, out),
        Command::Shuffle(a) => product(a, out, ShuffleAlgorithm::shuffle),
        Command::Ncp(a) => product(a, out, ShuffleAlgorithm::ncp),
        Command::PicardQ(a) => picard(a, out),
        Command::BenchShuffle(a) => bench_shuffle(a, out),
        Command::McCheck(a) => mc_check(a, out),
    }
}

fn seed_or_entropy(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random();
        log::warn!("no --seed given; using seed {s}");
        s
    })
}

fn parse_word(s: &str) -> anyhow::Result<Word> {
    s.parse()
        .map_err(stochexp::Error::from)
        .with_context(|| format!("invalid word `{s}`"))
}

fn expand(a: &ExpandArgs, out: &mut dyn Write) -> anyhow::Result<Outcome> {
    let mut config = ModelConfig::load(&a.config)?;
    if let Some(y0) = &a.y0 {
        config.y0 = y0.clone();
    }
    let (model, settings) = config.into_model()?;
    let iterations = a.iterations.unwrap_or(settings.iterations);
    let limit = a.max_word_length.unwrap_or(settings.max_word_length);
    let output = a.output.clone().unwrap_or(settings.output);
    let cfg = StageConfig::new(a.workdir.clone().unwrap_or(settings.workdir))
        .workers(a.workers.unwrap_or(settings.workers))
        .max_word_length(limit)
        .memory_term_cap(a.memory_term_cap)
        .keep_intermediate(a.keep_intermediate);

    let start = Instant::now();
    let report = run_pipeline(&model, iterations, &cfg, &output)?;
    let elapsed = start.elapsed();
    let longest = max_word_length(&output)?;

    writeln!(out, "terms: {}", report.distinct_words)?;
    writeln!(out, "max word length: {longest}")?;
    writeln!(out, "peak terms in memory: {}", report.peak_terms())?;
    writeln!(out, "wall time: {:.3} s", elapsed.as_secs_f64())?;
    writeln!(out, "output: {}", output.display())?;
    Ok(Outcome::Success)
}

fn max_word_length(path: &Path) -> anyhow::Result<usize> {
    let file = File::open(path).with_context(|| path.display().to_string())?;
    let mut longest = 0;
    for line in BufReader::new(file).lines() {
        let line = line?;
        if let Some((_, word)) = line.rsplit_once(';') {
            let word = word.trim();
            if !word.is_empty() {
                longest = longest.max(word.split(',').count());
            }
        }
    }
    Ok(longest)
}

fn expect(a: &ExpectArgs, out: &mut dyn Write) -> anyhow::Result<Outcome> {
    let poly = expect_expansion_file(&a.file, Letter(a.time_letter))?;
    writeln!(out, "{}", poly.display_with(&a.time_symbol))?;
    Ok(Outcome::Success)
}

fn product(
    a: &ProductArgs,
    out: &mut dyn Write,
    op: fn(ShuffleAlgorithm, &Word, &Word) -> stochexp::LinComb,
) -> anyhow::Result<Outcome> {
    let x = parse_word(&a.a)?;
    let y = parse_word(&a.b)?;
    write!(out, "{}", op(a.algo.into(), &x, &y))?;
    Ok(Outcome::Success)
}

fn picard(a: &PicardQArgs, out: &mut dyn Write) -> anyhow::Result<Outcome> {
    let q = picard_q(a.iterations, a.degree)?;
    if a.monomials {
        expand_record(q, None, |m| {
            writeln!(out, "{m}").map_err(|source| stochexp::Error::Io {
                path: "<stdout>".into(),
                source,
            })
        })?;
    } else {
        writeln!(out, "{q}")?;
    }
    Ok(Outcome::Success)
}

fn bench_shuffle(a: &BenchArgs, out: &mut dyn Write) -> anyhow::Result<Outcome> {
    if a.alphabet == 0 {
        bail!("--alphabet must be at least 1");
    }
    let seed = seed_or_entropy(a.seed);
    let rows: Vec<_> = (a.min_length..=a.max_length)
        .map(|n| {
            log::info!("total length {n}");
            bench::bench_length(n, a.trials, a.alphabet, seed)
        })
        .collect();
    bench::write_csv(out, &rows)?;
    Ok(Outcome::Success)
}

/// One line of the mc-check report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub label: String,
    pub estimate: f64,
    pub stderr: f64,
    pub exact: f64,
    pub z: f64,
}

fn write_report(out: &mut dyn Write, rows: &[CheckRow], threshold: f64) -> anyhow::Result<Outcome> {
    writeln!(
        out,
        "{:<16} {:>14} {:>12} {:>14} {:>8}",
        "integral", "estimate", "stderr", "exact", "|z|"
    )?;
    for r in rows {
        writeln!(
            out,
            "{:<16} {:>14.6e} {:>12.3e} {:>14.6e} {:>8.3}",
            r.label, r.estimate, r.stderr, r.exact, r.z
        )?;
    }
    let worst = rows.iter().map(|r| r.z).fold(0.0, f64::max);
    if worst > threshold {
        writeln!(out, "FAIL: max |z| = {worst:.3} > {threshold}")?;
        Ok(Outcome::ValidationFailed)
    } else {
        writeln!(out, "ok: max |z| = {worst:.3}")?;
        Ok(Outcome::Success)
    }
}

/// Monte-Carlo estimates of `E J^w` against the closed form.
pub fn check_words(words: &[Word], cfg: &McConfig) -> anyhow::Result<Vec<CheckRow>> {
    let time = cfg.time_letter.unwrap_or(Letter(u16::MAX));
    let estimates = mc_expect_words(words, cfg)?;
    Ok(words
        .iter()
        .zip(estimates)
        .map(|(w, e)| {
            let exact = expect_word(w, time).map_or(0.0, |m| m.value_at(cfg.horizon));
            CheckRow {
                label: format!("J[{w}]"),
                estimate: e.mean,
                stderr: e.stderr,
                exact,
                z: e.z_score(exact),
            }
        })
        .collect())
}

/// Mean solution `Y_T` against `y0 + E` of the expansion after `iterations` Picard steps.
pub fn check_solution(
    config: &Path,
    iterations: Option<usize>,
    bindings: &HashMap<String, f64>,
    cfg: &McConfig,
) -> anyhow::Result<CheckRow> {
    let (model, settings) = ModelConfig::load(config)?.into_model()?;
    let iterations = iterations.unwrap_or(settings.iterations);
    let expansion = picard_direct(&model, iterations, settings.max_word_length);
    // with no time driver every letter is Brownian
    let time = model.time_driver().unwrap_or(Letter(u16::MAX));
    let mean = expect_lincomb(&expansion, time);
    let y0 = model.y0().eval_f64(bindings)?;
    let exact = y0 + mean.eval_f64(cfg.horizon, bindings)?;
    let e = mc_solve_mean(&model, bindings, cfg)?;
    Ok(CheckRow {
        label: "Y_T".into(),
        estimate: e.mean,
        stderr: e.stderr,
        exact,
        z: e.z_score(exact),
    })
}

fn mc_check(a: &McCheckArgs, out: &mut dyn Write) -> anyhow::Result<Outcome> {
    if a.steps == 0 || a.samples == 0 {
        bail!("--steps and --samples must be positive");
    }
    let seed = seed_or_entropy(a.seed);
    let bindings: HashMap<String, f64> = a.params.iter().cloned().collect();

    if let Some(config) = &a.full {
        // drivers and the time letter come from the model
        let cfg = McConfig::new(1, a.horizon, a.steps, a.samples, seed);
        let row = check_solution(config, a.iterations, &bindings, &cfg)?;
        return write_report(out, &[row], a.z_threshold);
    }

    let words = a
        .word
        .iter()
        .map(|w| parse_word(w))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let needed = words
        .iter()
        .flat_map(|w| w.letters())
        .map(|l| l.0 as usize + 1)
        .max()
        .unwrap_or(0)
        .max(2);
    let mut cfg = McConfig::new(
        a.drivers.unwrap_or(needed),
        a.horizon,
        a.steps,
        a.samples,
        seed,
    );
    cfg.time_letter = Some(Letter(a.time_letter));
    let rows = check_words(&words, &cfg)?;
    if let Some(path) = &a.samples_csv {
        let samples = mc_word_samples(&words, &cfg)?;
        let file = File::create(path).with_context(|| path.display().to_string())?;
        let mut w = BufWriter::new(file);
        write_samples_csv(&mut w, &words, &samples)?;
        w.flush()?;
    }
    write_report(out, &rows, a.z_threshold)
}

/// Checks that an expansion file is well formed; returns its number of terms.
pub fn count_terms(path: &Path) -> anyhow::Result<usize> {
    let file = File::open(path).with_context(|| path.display().to_string())?;
    let mut n = 0;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (_, c): (Word, Coefficient) =
            parse_term_line(&line).map_err(|e| stochexp::Error::Record {
                path: path.to_path_buf(),
                record: i + 1,
                source: e,
            })?;
        if !c.is_zero() {
            n += 1;
        }
    }
    Ok(n)
}
