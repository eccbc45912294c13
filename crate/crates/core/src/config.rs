//! Key-value experiment configuration.
//!
//! ```text
//! alpha = 0.5
//! d = 2
//! n_grid = [64, 128, 256]
//! seed = 2024
//! lambda = 0.25        # construction lambda, default alpha/2
//! eps = 0.25           # optional: bound parameters from the eps rule
//! reps = 0             # empirical repetitions per row, 0 to skip
//! shift = true
//! box = 8
//! adaptive = true
//! output = "rows.csv"
//!
//! [weights]
//! kind = "product"          # or "explicit"
//! product = [1.0, 0.25]
//! explicit = { "1,2" = 0.1 } # 1-based coordinates
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

pub use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::space::{KorobovSpace, WeightScheme};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub space: KorobovSpace,
    pub n_grid: Vec<u64>,
    pub seed: u64,
    /// Construction lambda; `None` means `alpha / 2`.
    pub lambda: Option<f64>,
    /// When set, the upper bound is evaluated at the eps-rule `(lambda, r)`.
    pub eps: Option<f64>,
    pub reps: usize,
    pub with_shift: bool,
    pub box_radius: u64,
    pub adaptive: bool,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(space: KorobovSpace, n_grid: Vec<u64>, seed: u64) -> Result<Self> {
        let cfg = Self {
            space,
            n_grid,
            seed,
            lambda: None,
            eps: None,
            reps: 0,
            with_shift: true,
            box_radius: 8,
            adaptive: true,
            output: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::Domain("n_grid is empty".into()));
        }
        if self.n_grid[0] < 2 {
            return Err(Error::Domain("every n must be at least 2".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("n_grid must be strictly increasing".into()));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l < self.space.alpha()) {
                return Err(Error::Domain(format!("lambda must lie in (0, alpha), got {l}")));
            }
        }
        Ok(())
    }

    pub fn construction_lambda(&self) -> f64 {
        self.lambda.unwrap_or(self.space.alpha() / 2.0)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_table(&parse_table(text)?)
    }

    pub fn from_table(table: &Table) -> Result<Self> {
        let space = space_from_table(table)?;
        let n_grid = match table.get("n_grid") {
            Some(Value::Array(xs)) => xs.iter().map(as_u64).collect::<Result<Vec<_>>>()?,
            Some(_) => return Err(Error::Parse("n_grid must be an array of integers".into())),
            None => return Err(Error::Parse("missing key n_grid".into())),
        };
        let mut cfg = Self::new(space, n_grid, opt_u64(table, "seed")?.unwrap_or(0))?;
        cfg.lambda = opt_f64(table, "lambda")?;
        cfg.eps = opt_f64(table, "eps")?;
        cfg.reps = opt_u64(table, "reps")?.unwrap_or(0) as usize;
        cfg.with_shift = opt_bool(table, "shift")?.unwrap_or(true);
        cfg.box_radius = opt_u64(table, "box")?.unwrap_or(cfg.box_radius);
        cfg.adaptive = opt_bool(table, "adaptive")?.unwrap_or(true);
        cfg.output = match table.get("output") {
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(_) => return Err(Error::Parse("output must be a string".into())),
            None => None,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Reads `alpha`, `d` and the optional `[weights]` table.
pub fn space_from_table(table: &Table) -> Result<KorobovSpace> {
    let alpha = opt_f64(table, "alpha")?.ok_or_else(|| Error::Parse("missing key alpha".into()))?;
    let d = opt_u64(table, "d")?.ok_or_else(|| Error::Parse("missing key d".into()))? as usize;
    let weights = match table.get("weights") {
        None => WeightScheme::unit(),
        Some(Value::Table(w)) => weights_from_table(w)?,
        Some(_) => return Err(Error::Parse("weights must be a table".into())),
    };
    KorobovSpace::new(alpha, d, weights)
}

pub fn space_from_toml_str(text: &str) -> Result<KorobovSpace> {
    space_from_table(&parse_table(text)?)
}

pub fn parse_table(text: &str) -> Result<Table> {
    text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))
}

fn weights_from_table(w: &Table) -> Result<WeightScheme> {
    let product = match w.get("product") {
        Some(Value::Array(xs)) => xs.iter().map(as_f64).collect::<Result<Vec<_>>>()?,
        Some(_) => return Err(Error::Parse("weights.product must be an array".into())),
        None => vec![1.0],
    };
    let kind = match w.get("kind") {
        Some(Value::String(s)) => s.as_str(),
        Some(_) => return Err(Error::Parse("weights.kind must be a string".into())),
        None => "product",
    };
    match kind {
        "product" => WeightScheme::product(product),
        "explicit" => {
            let mut subsets = BTreeMap::new();
            if let Some(v) = w.get("explicit") {
                let Value::Table(t) = v else {
                    return Err(Error::Parse("weights.explicit must be a table".into()));
                };
                for (key, value) in t {
                    subsets.insert(parse_subset(key)?, as_f64(value)?);
                }
            }
            WeightScheme::explicit(product, subsets)
        }
        other => Err(Error::Parse(format!("unknown weights.kind {other:?}"))),
    }
}

/// `"1,3"` -> `[0, 2]`.
pub fn parse_subset(key: &str) -> Result<Vec<usize>> {
    key.split(',')
        .map(|s| {
            let j: usize = s
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad coordinate {s:?} in subset {key:?}")))?;
            j.checked_sub(1)
                .ok_or_else(|| Error::Parse(format!("coordinates are 1-based, got 0 in {key:?}")))
        })
        .collect()
}

fn as_f64(v: &Value) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Parse(format!("expected a number, got {v}"))),
    }
}

fn as_u64(v: &Value) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(Error::Parse(format!("expected a non-negative integer, got {v}"))),
    }
}

fn opt_f64(t: &Table, key: &str) -> Result<Option<f64>> {
    t.get(key).map(as_f64).transpose()
}

fn opt_u64(t: &Table, key: &str) -> Result<Option<u64>> {
    t.get(key).map(as_u64).transpose()
}

fn opt_bool(t: &Table, key: &str) -> Result<Option<bool>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Boolean(b)) => Ok(Some(*b)),
        Some(v) => Err(Error::Parse(format!("{key} must be true or false, got {v}"))),
    }
}
