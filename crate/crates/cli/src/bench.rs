//! Timing of the recursive against the iterative shuffle on random word pairs.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stochexp::algebra::ShuffleAlgorithm;
use stochexp::Word;

/// Random pairs with `|a| + |b| = total`; the split point is uniform, letters are uniform over
/// `0..alphabet`.
pub fn sample_pairs(total: usize, trials: usize, alphabet: u16, seed: u64) -> Vec<(Word, Word)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(total as u64);
    (0..trials)
        .map(|_| {
            let split = rng.random_range(0..=total);
            let mut word =
                |n: usize| Word::from_letters((0..n).map(|_| rng.random_range(0..alphabet)));
            let a = word(split);
            let b = word(total - split);
            (a, b)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub total_length: usize,
    pub trials: usize,
    pub recursive_ns: f64,
    pub iterative_ns: f64,
    /// Mean over pairs of recursive time / iterative time.
    pub mean_ratio: f64,
}

fn time_ns(algo: ShuffleAlgorithm, a: &Word, b: &Word) -> f64 {
    let start = Instant::now();
    std::hint::black_box(algo.shuffle(std::hint::black_box(a), std::hint::black_box(b)));
    start.elapsed().as_nanos().max(1) as f64
}

pub fn bench_length(total: usize, trials: usize, alphabet: u16, seed: u64) -> BenchRow {
    let pairs = sample_pairs(total, trials, alphabet, seed);
    let (mut rec, mut it, mut ratio) = (0.0, 0.0, 0.0);
    for (a, b) in &pairs {
        let r = time_ns(ShuffleAlgorithm::Recursive, a, b);
        let i = time_ns(ShuffleAlgorithm::Iterative, a, b);
        rec += r;
        it += i;
        ratio += r / i;
    }
    let n = pairs.len().max(1) as f64;
    BenchRow {
        total_length: total,
        trials,
        recursive_ns: rec / n,
        iterative_ns: it / n,
        mean_ratio: ratio / n,
    }
}

pub fn write_csv(mut out: impl Write, rows: &[BenchRow]) -> std::io::Result<()> {
    writeln!(
        out,
        "total_length,trials,recursive_mean_ns,iterative_mean_ns,mean_ratio"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.1},{:.1},{:.4}",
            r.total_length, r.trials, r.recursive_ns, r.iterative_ns, r.mean_ratio
        )?;
    }
    Ok(())
}
