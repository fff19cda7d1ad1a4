//! Staged, parallel, out-of-core expansion.
//!
//! ```text
//! picard_q ─▶ expand Q monomials ─▶ substitute Q ─▶ expand J monomials ─▶ instantiate ▷ ─▶ aggregate
//!   stage0          stage1             stage2             stage3              stage4
//! ```
//!
//! Every stage streams records from the previous stage's shard files to one shard file per
//! worker. Only aggregation combines like terms, and it does so by external merge, so no step
//! needs the whole expansion in memory.

mod aggregate;
mod expand;
mod instantiate;
mod work;

use std::path::{Path, PathBuf};

use crate::algebra::WordLimit;
use crate::error::{Error, IoContext, Result};
use crate::expr::Expr;
use crate::model::{build_q_table, Model, QTable};
use crate::picard::picard_q;

pub use aggregate::AggregateStats;
pub use expand::{expand_record, substitute_record};
pub use instantiate::{instantiate_record, InstantiateError, TermGauge};
pub use work::{manifest_name, shard_name, Shard, ShardSet, WorkerStats};

use instantiate::record_error;
use work::{run_stage, Record};

pub const DEFAULT_MEMORY_TERM_CAP: usize = 1_000_000;

#[derive(Clone, Debug)]
pub struct StageConfig {
    pub workers: usize,
    pub workdir: PathBuf,
    pub max_word_length: WordLimit,
    /// Most terms a worker may hold in memory while instantiating one record; also the run
    /// size of the aggregation sort.
    pub memory_term_cap: usize,
    pub keep_intermediate: bool,
}

impl StageConfig {
    pub fn new(workdir: impl Into<PathBuf>) -> Self {
        StageConfig {
            workers: 1,
            workdir: workdir.into(),
            max_word_length: None,
            memory_term_cap: DEFAULT_MEMORY_TERM_CAP,
            keep_intermediate: false,
        }
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn max_word_length(mut self, limit: WordLimit) -> Self {
        self.max_word_length = limit;
        self
    }

    pub fn memory_term_cap(mut self, cap: usize) -> Self {
        self.memory_term_cap = cap;
        self
    }

    pub fn keep_intermediate(mut self, keep: bool) -> Self {
        self.keep_intermediate = keep;
        self
    }

    /// Checks the numeric settings and creates the work directory.
    pub fn prepare(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config {
                key: "workers".into(),
                message: "must be at least 1".into(),
            });
        }
        if self.memory_term_cap == 0 {
            return Err(Error::Config {
                key: "memory_term_cap".into(),
                message: "must be at least 1".into(),
            });
        }
        std::fs::create_dir_all(&self.workdir).with_path(&self.workdir)?;
        let probe = self.workdir.join(".write-probe");
        std::fs::write(&probe, b"").with_path(&probe)?;
        std::fs::remove_file(&probe).with_path(&probe)?;
        Ok(())
    }
}

fn parse_record(r: &Record) -> Result<Expr> {
    r.text.parse().map_err(|source| Error::Record {
        path: r.path.to_path_buf(),
        record: r.line,
        source,
    })
}

fn expand_stage(stage: u32, input: &ShardSet, cfg: &StageConfig) -> Result<ShardSet> {
    let limit = cfg.max_word_length;
    let (out, _) = run_stage(stage, input, cfg, |r, emit, _| {
        expand_record(parse_record(r)?, limit, |m| emit.line(m))
    })?;
    Ok(out)
}

/// Stage 1: splits Q expressions into Q-monomials.
pub fn expand_monomials_q(in_file: &Path, cfg: &StageConfig) -> Result<ShardSet> {
    expand_stage(1, &ShardSet::from_files(&[in_file])?, cfg)
}

/// Stage 2: replaces every `Q<k>` by its value.
pub fn substitute_q(shards: &ShardSet, table: &QTable, cfg: &StageConfig) -> Result<ShardSet> {
    const STAGE: u32 = 2;
    let (out, _) = run_stage(STAGE, shards, cfg, |r, emit, _| {
        let e = parse_record(r)?;
        if !e.is_monomial() {
            return Err(Error::BadRecord {
                stage: STAGE,
                record: r.index,
                message: "expected a Q-monomial".into(),
            });
        }
        match substitute_record(&e, table)? {
            Some(v) => emit.line(v),
            None => Ok(()),
        }
    })?;
    Ok(out)
}

/// Stage 3: splits substituted records into J-monomials.
pub fn expand_monomials_j(shards: &ShardSet, cfg: &StageConfig) -> Result<ShardSet> {
    expand_stage(3, shards, cfg)
}

/// Stage 4: evaluates products and `▷` with shuffles; emits term lines.
pub fn instantiate_ncp(
    shards: &ShardSet,
    cfg: &StageConfig,
) -> Result<(ShardSet, Vec<WorkerStats>)> {
    const STAGE: u32 = 4;
    let (limit, cap) = (cfg.max_word_length, cfg.memory_term_cap);
    run_stage(STAGE, shards, cfg, |r, emit, stats| {
        let e = parse_record(r)?;
        let mut gauge = TermGauge::new(cap);
        let terms = instantiate_record(&e, limit, &mut gauge)
            .map_err(|err| record_error(err, STAGE, r.index, cap))?;
        stats.peak_terms = stats.peak_terms.max(gauge.peak());
        for (w, c) in terms {
            emit.line(format_args!("{c} ; {w}"))?;
        }
        Ok(())
    })
}

/// Combines all term lines into the canonical expansion file.
pub fn aggregate(shards: &ShardSet, out_file: &Path, cfg: &StageConfig) -> Result<AggregateStats> {
    aggregate::aggregate_terms(shards, out_file, &cfg.workdir, cfg.memory_term_cap)
}

#[derive(Clone, Debug)]
pub struct StageReport {
    pub stage: u32,
    pub name: &'static str,
    pub records_in: usize,
    pub records_out: usize,
}

#[derive(Clone, Debug)]
pub struct PipelineReport {
    pub output: PathBuf,
    pub distinct_words: usize,
    pub stages: Vec<StageReport>,
    /// Peak live terms of each instantiation worker.
    pub instantiate_peaks: Vec<usize>,
    pub aggregate: AggregateStats,
}

impl PipelineReport {
    /// Largest number of terms any single worker or the aggregator held at once.
    pub fn peak_terms(&self) -> usize {
        self.instantiate_peaks
            .iter()
            .copied()
            .chain([self.aggregate.peak_terms])
            .max()
            .unwrap_or(0)
    }
}

/// Runs all stages for `iterations` Picard steps and writes the expansion to `out_file`.
///
/// Intermediate files are removed on success unless `keep_intermediate` is set; on failure they
/// stay in the work directory.
pub fn run_pipeline(
    model: &Model,
    iterations: usize,
    cfg: &StageConfig,
    out_file: &Path,
) -> Result<PipelineReport> {
    cfg.prepare()?;
    let q = picard_q(iterations, model.degree())?;
    let table = build_q_table(model);

    let input = cfg.workdir.join("stage0.qexpr");
    std::fs::write(&input, format!("{q}\n")).with_path(&input)?;
    let input_set = ShardSet::from_files(&[&input])?;

    let mut stages = Vec::new();
    let mut record = |stage, name, from: &ShardSet, to: &ShardSet| {
        log::info!(
            "stage {stage} ({name}): {} -> {} records",
            from.records(),
            to.records()
        );
        stages.push(StageReport {
            stage,
            name,
            records_in: from.records(),
            records_out: to.records(),
        });
    };

    let s1 = expand_monomials_q(&input, cfg)?;
    record(1, "expand Q monomials", &input_set, &s1);
    let s2 = substitute_q(&s1, &table, cfg)?;
    record(2, "substitute Q", &s1, &s2);
    let s3 = expand_monomials_j(&s2, cfg)?;
    record(3, "expand J monomials", &s2, &s3);
    let (s4, stats) = instantiate_ncp(&s3, cfg)?;
    record(4, "instantiate", &s3, &s4);
    let agg = aggregate(&s4, out_file, cfg)?;
    log::info!(
        "aggregate: {} terms in {} runs -> {} words",
        agg.input_terms,
        agg.runs,
        agg.distinct_words
    );

    if !cfg.keep_intermediate {
        input_set.remove_files();
        for s in [&s1, &s2, &s3, &s4] {
            s.remove_files();
        }
    }
    Ok(PipelineReport {
        output: out_file.to_path_buf(),
        distinct_words: agg.distinct_words,
        stages,
        instantiate_peaks: stats.iter().map(|s| s.peak_terms).collect(),
        aggregate: agg,
    })
}
