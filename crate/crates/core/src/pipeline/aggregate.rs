//! Like-term combination by external merge sort.
//!
//! Term lines are read in input order into a buffer of at most `run_terms` distinct words,
//! which is written out sorted whenever it fills up. Sorted runs are then merged `FAN_IN` at a
//! time until one remains, summing coefficients of equal words along the way.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Lines, Write};
use std::path::{Path, PathBuf};

use crate::algebra::{parse_term_line, Coefficient, Word};
use crate::error::{Error, IoContext, Result};

use super::work::ShardSet;

const FAN_IN: usize = 32;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AggregateStats {
    pub input_terms: usize,
    pub runs: usize,
    pub merge_passes: usize,
    pub distinct_words: usize,
    /// Largest number of terms held in memory at once.
    pub peak_terms: usize,
}

fn write_term(out: &mut impl Write, w: &Word, c: &Coefficient) -> std::io::Result<()> {
    writeln!(out, "{c} ; {w}")
}

struct RunWriter<'a> {
    dir: &'a Path,
    runs: Vec<PathBuf>,
}

impl RunWriter<'_> {
    fn flush(&mut self, buffer: &mut BTreeMap<Word, Coefficient>) -> Result<()> {
        let path = self
            .dir
            .join(format!("aggregate_run{}.terms", self.runs.len()));
        let mut out = BufWriter::new(File::create(&path).with_path(&path)?);
        for (w, c) in std::mem::take(buffer) {
            if !c.is_zero() {
                write_term(&mut out, &w, &c).with_path(&path)?;
            }
        }
        out.flush().with_path(&path)?;
        self.runs.push(path);
        Ok(())
    }
}

struct RunReader {
    path: PathBuf,
    lines: Lines<BufReader<File>>,
    line: usize,
}

impl RunReader {
    fn open(path: &Path) -> Result<Self> {
        Ok(RunReader {
            path: path.to_path_buf(),
            lines: BufReader::new(File::open(path).with_path(path)?).lines(),
            line: 0,
        })
    }

    fn next_term(&mut self) -> Result<Option<(Word, Coefficient)>> {
        for line in self.lines.by_ref() {
            self.line += 1;
            let line = line.with_path(&self.path)?;
            if line.trim().is_empty() {
                continue;
            }
            return parse_term_line(&line).map(Some).map_err(|e| Error::Record {
                path: self.path.clone(),
                record: self.line,
                source: e.on_line(self.line),
            });
        }
        Ok(None)
    }
}

/// Merges sorted runs into `out`, returning the number of distinct words written.
fn merge(runs: &[PathBuf], out: &Path) -> Result<usize> {
    let mut readers = runs
        .iter()
        .map(|p| RunReader::open(p))
        .collect::<Result<Vec<_>>>()?;
    let mut heads: Vec<Option<Coefficient>> = vec![None; readers.len()];
    let mut heap = BinaryHeap::new();
    for (i, r) in readers.iter_mut().enumerate() {
        if let Some((w, c)) = r.next_term()? {
            heads[i] = Some(c);
            heap.push(Reverse((w, i)));
        }
    }
    let partial = out.with_extension("part");
    let mut writer = BufWriter::new(File::create(&partial).with_path(&partial)?);
    let mut written = 0;
    while let Some(Reverse((word, i))) = heap.pop() {
        let mut total = heads[i].take().expect("head present for queued run");
        let mut advance = vec![i];
        while let Some(Reverse((w, j))) = heap.peek() {
            if *w != word {
                break;
            }
            let j = *j;
            heap.pop();
            total += &heads[j].take().expect("head present for queued run");
            advance.push(j);
        }
        for j in advance {
            if let Some((w, c)) = readers[j].next_term()? {
                heads[j] = Some(c);
                heap.push(Reverse((w, j)));
            }
        }
        if !total.is_zero() {
            write_term(&mut writer, &word, &total).with_path(&partial)?;
            written += 1;
        }
    }
    writer.flush().with_path(&partial)?;
    drop(writer);
    std::fs::rename(&partial, out).with_path(out)?;
    Ok(written)
}

/// Sums all term lines of `input` into the canonical expansion file `out`.
///
/// Run files go to `scratch` and are removed afterwards.
pub fn aggregate_terms(
    input: &ShardSet,
    out: &Path,
    scratch: &Path,
    run_terms: usize,
) -> Result<AggregateStats> {
    let run_terms = run_terms.max(1);
    let mut stats = AggregateStats::default();
    let mut writer = RunWriter {
        dir: scratch,
        runs: Vec::new(),
    };
    let mut buffer = BTreeMap::new();
    input.for_each_record(|path, line, text| {
        let (w, c) = parse_term_line(text).map_err(|e| Error::Record {
            path: path.to_path_buf(),
            record: line,
            source: e.on_line(line),
        })?;
        stats.input_terms += 1;
        if !buffer.contains_key(&w) && buffer.len() >= run_terms {
            writer.flush(&mut buffer)?;
        }
        *buffer.entry(w).or_insert_with(Coefficient::zero) += &c;
        stats.peak_terms = stats.peak_terms.max(buffer.len());
        Ok(())
    })?;
    if !buffer.is_empty() || writer.runs.is_empty() {
        writer.flush(&mut buffer)?;
    }
    stats.runs = writer.runs.len();
    stats.peak_terms = stats.peak_terms.max(FAN_IN.min(stats.runs));

    let mut runs = writer.runs;
    let mut generation = 0;
    while runs.len() > FAN_IN {
        generation += 1;
        let mut next = Vec::with_capacity(runs.len().div_ceil(FAN_IN));
        for (i, group) in runs.chunks(FAN_IN).enumerate() {
            let path = scratch.join(format!("aggregate_merge{generation}_{i}.terms"));
            merge(group, &path)?;
            for p in group {
                remove(p);
            }
            next.push(path);
        }
        runs = next;
        stats.merge_passes += 1;
    }
    stats.distinct_words = merge(&runs, out)?;
    stats.merge_passes += 1;
    for p in &runs {
        remove(p);
    }
    Ok(stats)
}

fn remove(path: &Path) {
    if let Err(e) = std::fs::remove_file(path) {
        log::warn!("could not remove {}: {e}", path.display());
    }
}
