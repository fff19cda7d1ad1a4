//! Monte Carlo oracle for time + Brownian drivers.
//!
//! Iterated integrals and the SDE solver both use the midpoint (trapezoidal) reading of each
//! step, which is the Stratonovich one, so the two discretizations agree with each other and
//! with the algebra. Sample `i` draws from the ChaCha8 stream `i` of the run seed, which makes
//! estimates independent of thread count and scheduling.

use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::algebra::{Letter, LinComb, Word};
use crate::error::{Error, Result};
use crate::model::Model;

#[derive(Clone, Debug, PartialEq)]
pub struct McConfig {
    pub horizon: f64,
    pub steps: usize,
    pub samples: usize,
    pub seed: u64,
    pub drivers: usize,
    pub time_letter: Option<Letter>,
}

impl McConfig {
    /// Driver 0 is time and the remaining `drivers - 1` are Brownian motions.
    pub fn new(drivers: usize, horizon: f64, steps: usize, samples: usize, seed: u64) -> Self {
        McConfig {
            horizon,
            steps,
            samples,
            seed,
            drivers,
            time_letter: Some(Letter(0)),
        }
    }

    fn check_word(&self, w: &Word) -> Result<()> {
        match w.letters().iter().find(|l| l.0 as usize >= self.drivers) {
            Some(l) => Err(Error::InvalidLetter {
                letter: l.0,
                drivers: self.drivers,
            }),
            None => Ok(()),
        }
    }
}

/// Increments of every driver over a uniform grid.
#[derive(Clone, Debug)]
pub struct DriverPaths {
    pub horizon: f64,
    pub steps: usize,
    /// `increments[letter][step]`
    pub increments: Vec<Vec<f64>>,
}

impl DriverPaths {
    pub fn simulate(cfg: &McConfig, sample: u64) -> DriverPaths {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(sample);
        let dt = cfg.horizon / cfg.steps as f64;
        let sd = dt.sqrt();
        let increments = (0..cfg.drivers)
            .map(|d| {
                if cfg.time_letter == Some(Letter(d as u16)) {
                    vec![dt; cfg.steps]
                } else {
                    (0..cfg.steps)
                        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                }
            })
            .collect();
        DriverPaths {
            horizon: cfg.horizon,
            steps: cfg.steps,
            increments,
        }
    }

    /// The same path on a grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> DriverPaths {
        assert!(
            factor > 0 && self.steps.is_multiple_of(factor),
            "factor must divide the step count"
        );
        DriverPaths {
            horizon: self.horizon,
            steps: self.steps / factor,
            increments: self
                .increments
                .iter()
                .map(|dx| dx.chunks(factor).map(|c| c.iter().sum()).collect())
                .collect(),
        }
    }

    /// Running values of a driver, starting at 0.
    pub fn values(&self, letter: Letter) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.steps + 1);
        let mut x = 0.0;
        out.push(x);
        for dx in &self.increments[letter.0 as usize] {
            x += dx;
            out.push(x);
        }
        out
    }
}

/// `J^w` at the horizon by the recursion `I_k(t_{j+1}) = I_k(t_j) + mid(I_{k-1}) ΔX^{(w_k)}_j`.
pub fn iterated_integral_numeric(paths: &DriverPaths, w: &Word) -> f64 {
    let mut prev = vec![1.0; paths.steps + 1];
    let mut next = vec![0.0; paths.steps + 1];
    for letter in w.letters() {
        let dx = &paths.increments[letter.0 as usize];
        next[0] = 0.0;
        for j in 0..paths.steps {
            next[j + 1] = next[j] + 0.5 * (prev[j] + prev[j + 1]) * dx[j];
        }
        std::mem::swap(&mut prev, &mut next);
    }
    prev[paths.steps]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
}

impl McEstimate {
    pub fn from_samples(values: &[f64]) -> McEstimate {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        if values.len() < 2 {
            return McEstimate { mean, stderr: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        McEstimate {
            mean,
            stderr: (var / n).sqrt(),
        }
    }

    /// Distance from `target` in standard errors; exact agreement is required when the
    /// estimate carries no sampling error.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.mean - target).abs();
        if self.stderr == 0.0 {
            if diff <= 1e-12 * target.abs().max(1.0) {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff / self.stderr
        }
    }
}

/// Per-sample values `J^w` for every word, `values[sample][word]`.
pub fn mc_word_samples(words: &[Word], cfg: &McConfig) -> Result<Vec<Vec<f64>>> {
    for w in words {
        cfg.check_word(w)?;
    }
    Ok((0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| {
            let paths = DriverPaths::simulate(cfg, i);
            words
                .iter()
                .map(|w| iterated_integral_numeric(&paths, w))
                .collect()
        })
        .collect())
}

fn is_deterministic(w: &Word, cfg: &McConfig) -> bool {
    w.letters().iter().all(|&l| Some(l) == cfg.time_letter)
}

/// Sample means for several words on shared paths.
///
/// Words made only of the time letter are not random: they get the elementary value
/// `T^k / k!` with zero standard error.
pub fn mc_expect_words(words: &[Word], cfg: &McConfig) -> Result<Vec<McEstimate>> {
    let samples = mc_word_samples(words, cfg)?;
    Ok(words
        .iter()
        .enumerate()
        .map(|(k, w)| {
            if is_deterministic(w, cfg) {
                let n = w.len() as i32;
                let factorial: f64 = (1..=n).map(f64::from).product();
                McEstimate {
                    mean: cfg.horizon.powi(n) / factorial,
                    stderr: 0.0,
                }
            } else {
                let column: Vec<f64> = samples.iter().map(|s| s[k]).collect();
                McEstimate::from_samples(&column)
            }
        })
        .collect())
}

pub fn mc_expect_word(w: &Word, cfg: &McConfig) -> Result<McEstimate> {
    Ok(mc_expect_words(std::slice::from_ref(w), cfg)?[0])
}

/// Writes one row per sample, one column per word.
pub fn write_samples_csv(
    mut out: impl Write,
    words: &[Word],
    samples: &[Vec<f64>],
) -> std::io::Result<()> {
    let header: Vec<String> = words.iter().map(|w| format!("J[{w}]")).collect();
    writeln!(out, "sample,{}", header.join(","))?;
    for (i, row) in samples.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{i},{}", cells.join(","))?;
    }
    Ok(())
}

fn horner(coeffs: &[f64], y: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c)
}

/// Numeric vector fields and initial value of a model.
pub struct BoundModel {
    fields: Vec<Vec<f64>>,
    y0: f64,
}

impl BoundModel {
    pub fn new(model: &Model, bindings: &HashMap<String, f64>) -> Result<BoundModel> {
        Ok(BoundModel {
            fields: model
                .vector_fields()
                .iter()
                .map(|f| f.bind(bindings))
                .collect::<Result<_>>()?,
            y0: model.y0().eval_f64(bindings)?,
        })
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    /// Heun predictor-corrector along one path; returns `Y_T`.
    pub fn solve(&self, paths: &DriverPaths) -> f64 {
        let drift = |y: f64, j: usize| -> f64 {
            self.fields
                .iter()
                .zip(&paths.increments)
                .map(|(f, dx)| horner(f, y) * dx[j])
                .sum()
        };
        let mut y = self.y0;
        for j in 0..paths.steps {
            let predictor = y + drift(y, j);
            y += 0.5 * (drift(y, j) + drift(predictor, j));
        }
        y
    }
}

/// One Stratonovich solve on the path of sample 0 of `cfg`.
pub fn stratonovich_solve(
    model: &Model,
    bindings: &HashMap<String, f64>,
    cfg: &McConfig,
) -> Result<f64> {
    let bound = BoundModel::new(model, bindings)?;
    Ok(bound.solve(&DriverPaths::simulate(&mc_for(model, cfg), 0)))
}

/// Mean of `Y_T` over `cfg.samples` paths.
pub fn mc_solve_mean(
    model: &Model,
    bindings: &HashMap<String, f64>,
    cfg: &McConfig,
) -> Result<McEstimate> {
    let bound = BoundModel::new(model, bindings)?;
    let cfg = mc_for(model, cfg);
    let values: Vec<f64> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| bound.solve(&DriverPaths::simulate(&cfg, i)))
        .collect();
    Ok(McEstimate::from_samples(&values))
}

fn mc_for(model: &Model, cfg: &McConfig) -> McConfig {
    McConfig {
        drivers: model.n_drivers(),
        time_letter: model.time_driver(),
        ..cfg.clone()
    }
}

/// `Σ c_w J^w` on one path, with coefficients evaluated under `bindings`.
pub fn eval_expansion_numeric(
    x: &LinComb,
    paths: &DriverPaths,
    bindings: &HashMap<String, f64>,
) -> Result<f64> {
    let mut total = 0.0;
    for (w, c) in x.iter() {
        if let Some(l) = w
            .letters()
            .iter()
            .find(|l| l.0 as usize >= paths.increments.len())
        {
            return Err(Error::InvalidLetter {
                letter: l.0,
                drivers: paths.increments.len(),
            });
        }
        total += c.eval_f64(bindings)? * iterated_integral_numeric(paths, w);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Coefficient;
    use crate::model::StatePolynomial;

    fn w(letters: &[u16]) -> Word {
        Word::from_letters(letters.iter().copied())
    }

    fn bindings(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn ou() -> Model {
        let f = vec![
            StatePolynomial::parse(&["a", "-a"]).unwrap(),
            StatePolynomial::parse(&["b"]).unwrap(),
        ];
        Model::new(f, Coefficient::zero(), Some(Letter(0))).unwrap()
    }

    #[test]
    fn deterministic_integrals() {
        let cfg = McConfig::new(2, 1.5, 256, 1, 7);
        let p = DriverPaths::simulate(&cfg, 0);
        assert!((iterated_integral_numeric(&p, &w(&[0, 0])) - 1.5f64.powi(2) / 2.0).abs() < 1e-12);
        assert!((iterated_integral_numeric(&p, &w(&[0])) - 1.5).abs() < 1e-12);
        assert_eq!(iterated_integral_numeric(&p, &Word::empty()), 1.0);
        // a Brownian pair is exactly W_T^2 / 2 under the midpoint rule
        let wt = *p.values(Letter(1)).last().unwrap();
        assert!((iterated_integral_numeric(&p, &w(&[1, 1])) - wt * wt / 2.0).abs() < 1e-12);
    }

    #[test]
    fn estimates_and_reproducibility() {
        let cfg = McConfig::new(3, 1.0, 64, 4000, 11);
        let words = [w(&[1, 1]), w(&[1, 2]), w(&[1]), w(&[0])];
        let est = mc_expect_words(&words, &cfg).unwrap();
        assert!(est[0].z_score(0.5) < 3.0, "{:?}", est[0]);
        assert!(est[1].z_score(0.0) < 3.0, "{:?}", est[1]);
        assert!(est[2].z_score(0.0) < 3.0, "{:?}", est[2]);
        assert_eq!(
            est[3],
            McEstimate {
                mean: 1.0,
                stderr: 0.0
            }
        );
        assert_eq!(mc_expect_words(&words, &cfg).unwrap(), est);
        assert!(matches!(
            mc_expect_word(&w(&[3]), &cfg),
            Err(Error::InvalidLetter { letter: 3, .. })
        ));
    }

    #[test]
    fn solver_cases() {
        let cfg = McConfig::new(2, 1.0, 10_000, 1, 3);
        let y = stratonovich_solve(&ou(), &bindings(&[("a", 1.0), ("b", 0.0)]), &cfg).unwrap();
        assert!((y - (1.0 - (-1.0f64).exp())).abs() < 1e-3);
        let zero = Model::new(
            vec![StatePolynomial::zero(), StatePolynomial::zero()],
            Coefficient::zero(),
            Some(Letter(0)),
        )
        .unwrap();
        assert_eq!(
            stratonovich_solve(&zero, &HashMap::new(), &cfg).unwrap(),
            0.0
        );
        assert!(matches!(
            stratonovich_solve(&ou(), &bindings(&[("a", 1.0)]), &cfg),
            Err(Error::UnboundSymbol(s)) if s == "b"
        ));
    }

    #[test]
    fn csv_dump() {
        let mut out = Vec::new();
        write_samples_csv(&mut out, &[w(&[0, 1])], &[vec![0.5], vec![-1.0]]).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "sample,J[0,1]\n0,5e-1\n1,-1e0\n"
        );
    }
}
