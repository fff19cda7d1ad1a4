//! One-dimensional polynomial models `dY = Σ_i f_i(Y) dX^(i)` and their Q-tables.
//!
//! `Q^k = Σ_i (1/k!) ∂^k f_i(y0) X^(i)` are the Taylor coefficients of the vector fields around
//! the initial value; they are the only model-specific input of the Q-form Picard iteration.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Deserialize;

use crate::algebra::{Coefficient, Letter, LinComb, Word, WordLimit};
use crate::error::{Error, ParseError, Result};

/// Polynomial in the scalar state `y`, coefficients by ascending degree.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct StatePolynomial {
    coeffs: Vec<Coefficient>,
}

impl StatePolynomial {
    pub fn new(coeffs: Vec<Coefficient>) -> Self {
        let mut p = StatePolynomial { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        StatePolynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: Coefficient) -> Self {
        StatePolynomial::new(vec![c])
    }

    /// Parses one coefficient expression per degree, as in the model config.
    pub fn parse<S: AsRef<str>>(coeffs: &[S]) -> Result<Self, crate::ParseError> {
        let parsed = coeffs
            .iter()
            .map(|c| c.as_ref().parse())
            .collect::<Result<Vec<Coefficient>, _>>()?;
        Ok(StatePolynomial::new(parsed))
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(Coefficient::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[Coefficient] {
        &self.coeffs
    }

    /// Degree, with the zero polynomial given degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, k: usize) -> Coefficient {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    pub fn eval(&self, y: &Coefficient) -> Coefficient {
        self.coeffs
            .iter()
            .rev()
            .fold(Coefficient::zero(), |acc, c| &(&acc * y) + c)
    }

    /// Coefficients evaluated under numeric parameter bindings.
    pub fn bind(&self, bindings: &HashMap<String, f64>) -> Result<Vec<f64>> {
        self.coeffs.iter().map(|c| c.eval_f64(bindings)).collect()
    }

    pub fn derivative(&self) -> StatePolynomial {
        StatePolynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c.scale(&BigRational::from_integer(BigInt::from(k))))
                .collect(),
        )
    }

    pub fn add(&self, other: &StatePolynomial) -> StatePolynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        StatePolynomial::new((0..n).map(|k| &self.coeff(k) + &other.coeff(k)).collect())
    }

    pub fn mul(&self, other: &StatePolynomial) -> StatePolynomial {
        if self.is_zero() || other.is_zero() {
            return StatePolynomial::zero();
        }
        let mut out = vec![Coefficient::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += &(a * b);
            }
        }
        StatePolynomial::new(out)
    }

    pub fn scale(&self, factor: &Coefficient) -> StatePolynomial {
        StatePolynomial::new(self.coeffs.iter().map(|c| c * factor).collect())
    }
}

impl fmt::Debug for StatePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| format!("({c})*y^{k}"))
            .collect();
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

fn binomial(n: usize, k: usize) -> BigInt {
    (1..=k).fold(BigInt::from(1), |acc, i| {
        acc * BigInt::from(n + 1 - i) / BigInt::from(i)
    })
}

/// Taylor coefficients `g_k = ∂^k P(y0) / k!`, so that `P(y) = Σ_k g_k (y - y0)^k`.
///
/// Computed as `g_k = Σ_{j ≥ k} C(j, k) p_j y0^(j-k)`, which is the same quantity without
/// forming the derivatives explicitly.
pub fn taylor_recenter(p: &StatePolynomial, y0: &Coefficient) -> Vec<Coefficient> {
    let n = p.coeffs.len();
    let powers: Vec<Coefficient> =
        std::iter::successors(Some(Coefficient::one()), |acc| Some(acc * y0))
            .take(n.max(1))
            .collect();
    (0..n)
        .map(|k| {
            let mut g = Coefficient::zero();
            for j in k..n {
                let weight = BigRational::from_integer(binomial(j, k));
                g += &(&p.coeffs[j] * &powers[j - k]).scale(&weight);
            }
            g
        })
        .collect()
}

/// `dY = Σ_i f_i(Y) dX^(i)` with scalar state.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    f: Vec<StatePolynomial>,
    y0: Coefficient,
    time_driver: Option<Letter>,
}

impl Model {
    pub fn new(
        f: Vec<StatePolynomial>,
        y0: Coefficient,
        time_driver: Option<Letter>,
    ) -> Result<Self> {
        if f.is_empty() {
            return Err(Error::Config {
                key: "f".into(),
                message: "at least one driver is required".into(),
            });
        }
        if let Some(t) = time_driver {
            if usize::from(t.0) >= f.len() {
                return Err(Error::Config {
                    key: "time_driver".into(),
                    message: format!("letter {} but only {} drivers", t.0, f.len()),
                });
            }
        }
        Ok(Model { f, y0, time_driver })
    }

    pub fn n_drivers(&self) -> usize {
        self.f.len()
    }

    pub fn vector_fields(&self) -> &[StatePolynomial] {
        &self.f
    }

    pub fn y0(&self) -> &Coefficient {
        &self.y0
    }

    pub fn time_driver(&self) -> Option<Letter> {
        self.time_driver
    }

    /// Maximum degree `q` of the vector fields.
    pub fn degree(&self) -> usize {
        self.f
            .iter()
            .map(StatePolynomial::degree)
            .max()
            .unwrap_or(0)
    }

    pub fn with_y0(&self, y0: Coefficient) -> Model {
        Model { y0, ..self.clone() }
    }
}

/// `Q^k` for `k = 0..=q`, each a combination of single-letter words.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    entries: Vec<LinComb>,
}

impl QTable {
    pub fn new(entries: Vec<LinComb>) -> Self {
        QTable { entries }
    }

    pub fn get(&self, k: usize) -> Option<&LinComb> {
        self.entries.get(k)
    }

    pub fn degree(&self) -> usize {
        self.entries.len().saturating_sub(1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &LinComb)> {
        self.entries.iter().enumerate()
    }
}

pub fn build_q_table(model: &Model) -> QTable {
    let q = model.degree();
    let mut entries = vec![LinComb::zero(); q + 1];
    for (i, f) in model.f.iter().enumerate() {
        let letter = Letter(i as u16);
        for (k, g) in taylor_recenter(f, &model.y0).into_iter().enumerate() {
            entries[k].add_term(Word::single(letter), &g);
        }
    }
    QTable { entries }
}

/// Stratonovich drift `μ - σ'σ/2` of the Itô equation `dy = μ(y) dt + σ(y) dB`.
pub fn ito_to_stratonovich(mu: &StatePolynomial, sigma: &StatePolynomial) -> StatePolynomial {
    let correction = sigma
        .derivative()
        .mul(sigma)
        .scale(&Coefficient::ratio(-1, 2));
    mu.add(&correction)
}

/// Model config document (TOML).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub drivers: usize,
    #[serde(default)]
    pub time_driver: Option<u16>,
    #[serde(default = "default_y0")]
    pub y0: String,
    pub f: Vec<Vec<String>>,
    pub picard_iterations: usize,
    #[serde(default)]
    pub max_word_length: MaxWordLength,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_workdir")]
    pub workdir: PathBuf,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Deserialize, Default, PartialEq)]
#[serde(untagged)]
pub enum MaxWordLength {
    Length(usize),
    Keyword(String),
    #[default]
    #[serde(skip)]
    Unbounded,
}

fn default_y0() -> String {
    "0".into()
}

fn default_workers() -> usize {
    1
}

fn default_workdir() -> PathBuf {
    PathBuf::from("work")
}

fn default_output() -> PathBuf {
    PathBuf::from("expansion.txt")
}

/// Validated run parameters from a config document.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub iterations: usize,
    pub max_word_length: WordLimit,
    pub workers: usize,
    pub workdir: PathBuf,
    pub output: PathBuf,
}

fn config_error(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        message: message.into(),
    }
}

impl ModelConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let key = e
                .span()
                .map(|s| format!("at byte {}", s.start))
                .unwrap_or_else(|| "document".into());
            config_error(&key, e.message())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        ModelConfig::from_toml(&text)
    }

    pub fn into_model(self) -> Result<(Model, RunSettings)> {
        if self.drivers == 0 {
            return Err(config_error("drivers", "must be at least 1"));
        }
        if self.f.len() != self.drivers {
            return Err(config_error(
                "f",
                format!("expected {} entries, found {}", self.drivers, self.f.len()),
            ));
        }
        if self.picard_iterations < 1 {
            return Err(config_error("picard_iterations", "must be at least 1"));
        }
        if self.workers < 1 {
            return Err(config_error("workers", "must be at least 1"));
        }
        let max_word_length = match self.max_word_length {
            MaxWordLength::Unbounded => None,
            MaxWordLength::Length(l) => Some(l),
            MaxWordLength::Keyword(k) if k == "unbounded" => None,
            MaxWordLength::Keyword(k) => {
                return Err(config_error(
                    "max_word_length",
                    format!("expected an integer or \"unbounded\", found \"{k}\""),
                ))
            }
        };
        let y0: Coefficient = self
            .y0
            .parse()
            .map_err(|e: ParseError| config_error("y0", e.to_string()))?;
        let f = self
            .f
            .iter()
            .enumerate()
            .map(|(i, entry)| {
                StatePolynomial::parse(entry)
                    .map_err(|e| config_error(&format!("f[{i}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let model = Model::new(f, y0, self.time_driver.map(Letter))?;
        Ok((
            model,
            RunSettings {
                iterations: self.picard_iterations,
                max_word_length,
                workers: self.workers,
                workdir: self.workdir,
                output: self.output,
            },
        ))
    }
}
