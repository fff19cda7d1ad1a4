//! Shard files and the shared work queue.
//!
//! A stage reads records from a read-only set of input files. The coordinator indexes the byte
//! offset of every record; workers claim records through a single atomic counter and write to
//! their own shard, which is renamed into place once the worker has finished.

use std::fmt::Display;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, IoContext, Result};

use super::StageConfig;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shard {
    pub path: PathBuf,
    pub records: usize,
}

/// Output of one stage: the concatenation of its shards, in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShardSet {
    pub shards: Vec<Shard>,
    pub manifest: Option<PathBuf>,
}

impl ShardSet {
    /// Wraps existing files, counting their non-blank lines.
    pub fn from_files<P: AsRef<Path>>(paths: &[P]) -> Result<ShardSet> {
        let mut shards = Vec::with_capacity(paths.len());
        for p in paths {
            let path = p.as_ref().to_path_buf();
            let reader = BufReader::new(File::open(&path).with_path(&path)?);
            let mut records = 0;
            for line in reader.lines() {
                if !line.with_path(&path)?.trim().is_empty() {
                    records += 1;
                }
            }
            shards.push(Shard { path, records });
        }
        Ok(ShardSet {
            shards,
            manifest: None,
        })
    }

    /// Reads a manifest written by a stage. Shard paths are relative to the manifest.
    pub fn from_manifest(path: &Path) -> Result<ShardSet> {
        let text = std::fs::read_to_string(path).with_path(path)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let mut shards = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parsed = line
                .rsplit_once(' ')
                .and_then(|(name, n)| Some((name, n.parse::<usize>().ok()?)));
            let Some((name, records)) = parsed else {
                return Err(Error::Record {
                    path: path.to_path_buf(),
                    record: i + 1,
                    source: crate::error::ParseError::at(
                        i + 1,
                        1,
                        "expected `<shard file> <record count>`",
                    ),
                });
            };
            shards.push(Shard {
                path: dir.join(name),
                records,
            });
        }
        Ok(ShardSet {
            shards,
            manifest: Some(path.to_path_buf()),
        })
    }

    pub fn records(&self) -> usize {
        self.shards.iter().map(|s| s.records).sum()
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.shards
            .iter()
            .map(|s| s.path.as_path())
            .chain(self.manifest.as_deref())
    }

    /// Calls `f` on every record, shard by shard.
    pub fn for_each_record(
        &self,
        mut f: impl FnMut(&Path, usize, &str) -> Result<()>,
    ) -> Result<()> {
        for shard in &self.shards {
            let reader = BufReader::new(File::open(&shard.path).with_path(&shard.path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.with_path(&shard.path)?;
                if !line.trim().is_empty() {
                    f(&shard.path, i + 1, &line)?;
                }
            }
        }
        Ok(())
    }

    pub(crate) fn remove_files(&self) {
        for p in self.paths() {
            if let Err(e) = std::fs::remove_file(p) {
                log::warn!("could not remove {}: {e}", p.display());
            }
        }
    }
}

pub fn shard_name(stage: u32, worker: usize) -> String {
    format!("stage{stage}_worker{worker}.terms")
}

pub fn manifest_name(stage: u32) -> String {
    format!("stage{stage}.manifest")
}

/// One claimed input record.
pub(crate) struct Record<'a> {
    /// 1-based position in the concatenated stage input.
    pub index: usize,
    pub path: &'a Path,
    /// 1-based line within `path`.
    pub line: usize,
    pub text: &'a str,
}

/// Per-worker output sink.
pub(crate) struct Emitter {
    out: BufWriter<File>,
    path: PathBuf,
    lines: usize,
}

impl Emitter {
    pub fn line(&mut self, record: impl Display) -> Result<()> {
        writeln!(self.out, "{record}").with_path(&self.path)?;
        self.lines += 1;
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WorkerStats {
    pub records: usize,
    pub emitted: usize,
    /// Largest number of simultaneously materialized terms, where the stage tracks them.
    pub peak_terms: usize,
}

struct Entry {
    file: u32,
    line: u32,
    offset: u64,
}

fn index_records(input: &ShardSet) -> Result<Vec<Entry>> {
    let mut index = Vec::with_capacity(input.records());
    for (f, shard) in input.shards.iter().enumerate() {
        let mut reader = BufReader::new(File::open(&shard.path).with_path(&shard.path)?);
        let mut buf = Vec::new();
        let (mut offset, mut line) = (0u64, 0u32);
        loop {
            buf.clear();
            let n = reader.read_until(b'\n', &mut buf).with_path(&shard.path)?;
            if n == 0 {
                break;
            }
            line += 1;
            if !buf.iter().all(u8::is_ascii_whitespace) {
                index.push(Entry {
                    file: f as u32,
                    line,
                    offset,
                });
            }
            offset += n as u64;
        }
    }
    Ok(index)
}

/// Runs `process` over every input record on `cfg.workers` threads and collects the shards.
pub(crate) fn run_stage<F>(
    stage: u32,
    input: &ShardSet,
    cfg: &StageConfig,
    process: F,
) -> Result<(ShardSet, Vec<WorkerStats>)>
where
    F: Fn(&Record, &mut Emitter, &mut WorkerStats) -> Result<()> + Sync,
{
    let index = index_records(input)?;
    let claim = AtomicUsize::new(0);
    let results: Vec<Result<(Shard, WorkerStats)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..cfg.workers)
            .map(|k| {
                let (index, claim, process) = (&index, &claim, &process);
                scope.spawn(move || {
                    let r = worker(stage, k, input, index, claim, cfg, process);
                    if r.is_err() {
                        // stop the other workers from claiming more records
                        claim.store(index.len(), Ordering::SeqCst);
                    }
                    r
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or(Err(Error::WorkerPanic)))
            .collect()
    });

    let mut shards = Vec::with_capacity(cfg.workers);
    let mut stats = Vec::with_capacity(cfg.workers);
    for r in results {
        let (shard, s) = r?;
        shards.push(shard);
        stats.push(s);
    }
    let manifest = cfg.workdir.join(manifest_name(stage));
    let mut text = format!("# stage {stage}: shard records\n");
    for s in &shards {
        let name = s.path.file_name().unwrap_or_default().to_string_lossy();
        text.push_str(&format!("{name} {}\n", s.records));
    }
    std::fs::write(&manifest, text).with_path(&manifest)?;
    Ok((
        ShardSet {
            shards,
            manifest: Some(manifest),
        },
        stats,
    ))
}

fn worker<F>(
    stage: u32,
    k: usize,
    input: &ShardSet,
    index: &[Entry],
    claim: &AtomicUsize,
    cfg: &StageConfig,
    process: &F,
) -> Result<(Shard, WorkerStats)>
where
    F: Fn(&Record, &mut Emitter, &mut WorkerStats) -> Result<()>,
{
    let path = cfg.workdir.join(shard_name(stage, k));
    let partial = path.with_extension("terms.part");
    let mut emitter = Emitter {
        out: BufWriter::new(File::create(&partial).with_path(&partial)?),
        path: partial.clone(),
        lines: 0,
    };
    let mut stats = WorkerStats::default();
    let mut readers: Vec<Option<BufReader<File>>> = input.shards.iter().map(|_| None).collect();
    let mut text = String::new();
    loop {
        let i = claim.fetch_add(1, Ordering::SeqCst);
        let Some(entry) = index.get(i) else { break };
        let shard = &input.shards[entry.file as usize];
        let reader = match &mut readers[entry.file as usize] {
            Some(r) => r,
            slot => slot.insert(BufReader::new(
                File::open(&shard.path).with_path(&shard.path)?,
            )),
        };
        reader
            .seek(SeekFrom::Start(entry.offset))
            .with_path(&shard.path)?;
        text.clear();
        reader.read_line(&mut text).with_path(&shard.path)?;
        let record = Record {
            index: i + 1,
            path: &shard.path,
            line: entry.line as usize,
            text: text.trim(),
        };
        process(&record, &mut emitter, &mut stats)?;
        stats.records += 1;
    }
    emitter.out.flush().with_path(&partial)?;
    drop(emitter.out);
    std::fs::rename(&partial, &path).with_path(&path)?;
    stats.emitted = emitter.lines;
    Ok((
        Shard {
            path,
            records: emitter.lines,
        },
        stats,
    ))
}
