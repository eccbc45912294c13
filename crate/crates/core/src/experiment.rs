//! Convergence studies over a grid of `n`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::analysis::{lower_bound, naive_bound, rms_empirical, rms_exact, ErrorReport};
use crate::bounds::{epsilon_selector, theorem1_bound, BoundParams};
use crate::config::ExperimentConfig;
use crate::construct::{build_generating_vector, GeneratingVector, GoodSetCriterion};
use crate::error::{Error, Result};
use crate::primes::sieve_band;
use crate::space::{KorobovSpace, MuMode, TrigPolynomial};

/// Bound assertions only apply from here on.
pub const MIN_ASSERT_N: u64 = 37;

pub const CSV_HEADER: &str =
    "n,L,rms_exact,certified,h*,theorem1_bound,naive_bound,lower_bound,empirical_rms,empirical_stderr,construction_seed";

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: u64,
    pub l: usize,
    pub report: ErrorReport,
    pub theorem1_bound: Option<f64>,
    pub naive_bound: f64,
    pub lower_bound: f64,
    pub empirical: Option<(f64, f64)>,
    pub construction_seed: u64,
}

impl ConvergenceRow {
    pub fn rms_exact(&self) -> f64 {
        self.report.rms_exact
    }

    pub fn certified(&self) -> bool {
        self.report.certified
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        format!(
            "{},{},{:e},{},\"{}\",{},{:e},{:e},{},{},{}",
            self.n,
            self.l,
            self.report.rms_exact,
            self.report.certified,
            self.report.maximizer,
            opt(self.theorem1_bound),
            self.naive_bound,
            self.lower_bound,
            opt(self.empirical.map(|e| e.0)),
            opt(self.empirical.map(|e| e.1)),
            self.construction_seed
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceResult {
    pub rows: Vec<ConvergenceRow>,
    /// `None` when fewer than three rows are certified.
    pub fit: Option<SlopeFit>,
    /// Human-readable descriptions of failed row checks.
    pub violations: Vec<String>,
}

impl ConvergenceResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.to_csv());
            out.push('\n');
        }
        out
    }
}

/// Per-row construction seed derived from the root seed and `n`.
pub fn row_seed(seed: u64, n: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ n.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The single-mode integrand at `h` with coefficient `1/r(h)`.
pub fn extremal_mode(space: &KorobovSpace, report: &ErrorReport) -> Result<TrigPolynomial> {
    let r = space.r_value(&report.maximizer)?;
    Ok(TrigPolynomial::single_mode(report.maximizer.clone(), Complex64::new(1.0 / r, 0.0)))
}

/// Upper bound at `n` for this configuration, `None` below the validity range.
pub fn upper_bound_for(cfg: &ExperimentConfig, n: u64) -> Result<Option<f64>> {
    if n < MIN_ASSERT_N {
        return Ok(None);
    }
    let (lambda, r) = match cfg.eps {
        Some(eps) => epsilon_selector(cfg.space.alpha(), eps)?,
        None => {
            let l = cfg.construction_lambda();
            (l, (1.0 / (2.0 * l)).ceil().max(1.0) as u32)
        }
    };
    let mu = cfg.space.mu_value(lambda, MuMode::ClosedForm)?.value;
    theorem1_bound(&BoundParams::new(n, lambda, r, mu)).map(Some)
}

fn run_row(cfg: &ExperimentConfig, crit: &GoodSetCriterion, n: u64) -> Result<(ConvergenceRow, GeneratingVector)> {
    let band = sieve_band(n)?;
    let seed = row_seed(cfg.seed, n);
    let gv = build_generating_vector(&band, crit, seed)?;
    let report = rms_exact(&gv, &cfg.space, cfg.box_radius, cfg.adaptive)?;
    let empirical = if cfg.reps >= 2 {
        let xi = extremal_mode(&cfg.space, &report)?;
        let e = rms_empirical(&xi, &gv, seed, cfg.with_shift, cfg.reps)?;
        Some((e.rms.value, e.rms.stderr))
    } else {
        None
    };
    let row = ConvergenceRow {
        n,
        l: band.len(),
        theorem1_bound: upper_bound_for(cfg, n)?,
        naive_bound: naive_bound(n, crit.lambda(), crit.mu()),
        lower_bound: lower_bound(n, cfg.space.weights().subset(&[0]), cfg.space.alpha(), BoundParams::C2),
        empirical,
        construction_seed: seed,
        report,
    };
    Ok((row, gv))
}

/// Builds a vector for every `n`, computes its exact RMS error and the
/// bounds, and fits `ln rms` against `ln n` over the certified rows.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceResult> {
    cfg.validate()?;
    let crit = GoodSetCriterion::new(cfg.space.clone(), cfg.construction_lambda())?;
    let rows: Vec<ConvergenceRow> = cfg
        .n_grid
        .par_iter()
        .map(|&n| run_row(cfg, &crit, n).map(|r| r.0))
        .collect::<Result<_>>()?;
    let mut violations = Vec::new();
    for row in &rows {
        if !row.certified() {
            violations.push(format!(
                "n={}: rms_exact not certified (rms={:e}, tail={:e}); excluded from the fit",
                row.n, row.report.rms_exact, row.report.tail_bound
            ));
        } else if row.n >= MIN_ASSERT_N && row.lower_bound > row.rms_exact() {
            violations.push(format!(
                "n={}: lower bound {:e} exceeds rms_exact {:e} (seed {})",
                row.n,
                row.lower_bound,
                row.rms_exact(),
                row.construction_seed
            ));
        }
    }
    let certified: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.certified())
        .map(|r| (r.n as f64, r.rms_exact()))
        .collect();
    let fit = fit_slope(&certified).ok();
    Ok(ConvergenceResult { rows, fit, violations })
}

/// Ordinary least squares of `ln y` on `ln n`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::Precondition(format!(
            "slope fit needs at least 3 rows, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(n, y)| !(n > 0.0 && y > 0.0)) {
        return Err(Error::Domain("slope fit needs positive values".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(SlopeFit {
        slope,
        intercept,
        residual: (ss / k).sqrt(),
    })
}

/// Summary line for a finished run.
pub fn describe(result: &ConvergenceResult) -> String {
    let mut s = String::new();
    match &result.fit {
        Some(f) => {
            let _ = write!(s, "slope={:.6} intercept={:.6} residual={:.3e}", f.slope, f.intercept, f.residual);
        }
        None => s.push_str("slope=NA"),
    }
    let _ = write!(
        s,
        " rows={} certified={}",
        result.rows.len(),
        result.rows.iter().filter(|r| r.certified()).count()
    );
    s
}
