//! `ranlat`: construct generating vectors, run the randomised lattice rule and
//! compare its errors against the theoretical bounds.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use ranlat::analysis::{lower_bound, naive_bound, ran_empirical, rms_empirical, rms_exact, witness_fn};
use ranlat::bounds::{epsilon_selector, theorem1_bound, BoundParams};
use ranlat::config::{parse_table, space_from_table, ExperimentConfig, Table, Value};
use ranlat::construct::{build_generating_vector, GeneratingVector, GoodSetCriterion};
use ranlat::experiment::{describe, extremal_mode, run_convergence};
use ranlat::primes::{composed_to_text, sieve_band};
use ranlat::rule::{randomized_integrate, ClosedFormIntegrand, Integrand};
use ranlat::space::{FrequencyVector, KorobovSpace, MuMode, TrigPolynomial};
use ranlat::Error;

#[derive(Parser)]
#[command(name = "ranlat", version, about = "Randomised rank-1 lattice rules over a prime band")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a generating vector and print its residues and certificates.
    Construct {
        #[command(flatten)]
        common: Common,
        /// Print the CRT-composed integers instead of the residue map.
        #[arg(long)]
        composed: bool,
    },
    /// Run the randomised rule `--reps` times.
    Integrate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Exact worst-case RMS error of the randomised shifted rule.
    RmsExact {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        search: Search,
    },
    /// Sample RMS error on one integrand.
    RmsEmpirical {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        search: Search,
    },
    /// Sample mean absolute error on one integrand.
    RanEmpirical {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        search: Search,
    },
    /// Upper bound, non-optimal bound and lower bound at one `n`.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        r: Option<u32>,
        /// Choose lambda and r from the target rate n^{-alpha-1/2+eps}.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Exact errors and bounds over a grid of n, as CSV.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Comma-separated, strictly increasing.
        #[arg(long, value_delimiter = ',')]
        n_grid: Option<Vec<u64>>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        reps: Option<u64>,
        #[arg(long = "box")]
        box_radius: Option<u64>,
        #[arg(long)]
        adaptive: Option<bool>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Fail unless the fitted slope is at most this value.
        #[arg(long)]
        max_slope: Option<f64>,
    },
}

/// Space, band and construction settings; flags override `--config`.
#[derive(Args, Clone)]
struct Common {
    /// Key-value file with `alpha`, `d`, `[weights]`, `n`, `seed`, `lambda`, ...
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    d: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Product weights gamma_1,gamma_2,...; the last value repeats.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    /// Construction lambda, default alpha/2.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use these integers as the generating vector instead of constructing one.
    #[arg(long, value_delimiter = ',', conflicts_with = "vector")]
    z: Option<Vec<u64>>,
    /// Read the generating vector from a residue file written by `construct`.
    #[arg(long)]
    vector: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct Sampling {
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    /// Draw a uniform shift with each prime (default).
    #[arg(long, overrides_with = "no_shift")]
    shift: bool,
    #[arg(long, overrides_with = "shift")]
    no_shift: bool,
    /// `constant`, `kink[:s]`, `step`, `witness`, `extremal`, or a coefficient
    /// file with lines `h1 .. hd re im`.
    #[arg(long, default_value = "witness")]
    integrand: String,
}

impl Sampling {
    fn with_shift(&self) -> bool {
        !self.no_shift
    }
}

#[derive(Args, Clone)]
struct Search {
    #[arg(long = "box", default_value_t = 8)]
    box_radius: u64,
    /// Enlarge the search until the supremum is certified.
    #[arg(long)]
    adaptive: bool,
}

type CliResult<T> = Result<T, String>;

fn err(e: Error) -> String {
    e.to_string()
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

/// Config file merged with the flags.
fn merged_table(common: &Common) -> CliResult<Table> {
    let mut table = match &common.config {
        Some(path) => parse_table(&read(path)?).map_err(err)?,
        None => Table::new(),
    };
    let mut set = |key: &str, v: Value| {
        table.insert(key.to_string(), v);
    };
    if let Some(n) = common.n {
        set("n", Value::Integer(n as i64));
    }
    if let Some(d) = common.d {
        set("d", Value::Integer(d as i64));
    }
    if let Some(a) = common.alpha {
        set("alpha", Value::Float(a));
    }
    if let Some(l) = common.lambda {
        set("lambda", Value::Float(l));
    }
    if let Some(s) = common.seed {
        set("seed", Value::Integer(s as i64));
    }
    if let Some(w) = &common.weights {
        let mut wt = Table::new();
        wt.insert("kind".into(), Value::String("product".into()));
        wt.insert("product".into(), Value::Array(w.iter().map(|&x| Value::Float(x)).collect()));
        set("weights", Value::Table(wt));
    }
    if !table.contains_key("d") {
        if let Some(z) = &common.z {
            table.insert("d".into(), Value::Integer(z.len() as i64));
        }
    }
    if !table.contains_key("d") {
        table.insert("d".into(), Value::Integer(1));
    }
    if !table.contains_key("alpha") {
        table.insert("alpha".into(), Value::Float(0.5));
    }
    Ok(table)
}

struct Setup {
    space: KorobovSpace,
    n: u64,
    seed: u64,
    lambda: f64,
}

fn setup(common: &Common) -> CliResult<(Setup, Table)> {
    let table = merged_table(common)?;
    let space = space_from_table(&table).map_err(err)?;
    let int = |key: &str| -> CliResult<Option<u64>> {
        match table.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(v) => Err(format!("{key} must be a non-negative integer, got {v}")),
        }
    };
    let n = int("n")?.unwrap_or(64);
    let seed = int("seed")?.unwrap_or(0);
    let lambda = match table.get("lambda") {
        Some(Value::Float(x)) => *x,
        Some(Value::Integer(i)) => *i as f64,
        Some(v) => return Err(format!("lambda must be a number, got {v}")),
        None => space.alpha() / 2.0,
    };
    Ok((Setup { space, n, seed, lambda }, table))
}

fn generating_vector(common: &Common, s: &Setup) -> CliResult<GeneratingVector> {
    let band = sieve_band(s.n).map_err(err)?;
    if let Some(z) = &common.z {
        return GeneratingVector::from_integers(band, z).map_err(err);
    }
    if let Some(path) = &common.vector {
        return GeneratingVector::from_text(band, &read(path)?).map_err(err);
    }
    let crit = GoodSetCriterion::new(s.space.clone(), s.lambda).map_err(err)?;
    build_generating_vector(&band, &crit, s.seed).map_err(err)
}

fn read_coefficients(path: &Path, d: usize) -> CliResult<TrigPolynomial> {
    let text = read(path)?;
    let mut f = TrigPolynomial::new(d);
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != d + 2 {
            return Err(format!(
                "{}:{}: expected {} integers and 2 reals, got {} fields",
                path.display(),
                i + 1,
                d,
                fields.len()
            ));
        }
        let bad = |e: String| format!("{}:{}: {e}", path.display(), i + 1);
        let h = fields[..d]
            .iter()
            .map(|s| s.parse::<i64>().map_err(|e| bad(e.to_string())))
            .collect::<CliResult<Vec<_>>>()?;
        let re: f64 = fields[d].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
        let im: f64 = fields[d + 1].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
        // repeated modes accumulate
        f.add_mode(FrequencyVector(h), Complex64::new(re, im)).map_err(err)?;
    }
    Ok(f)
}

fn integrand(name: &str, s: &Setup, gv: &GeneratingVector, search: Option<&Search>) -> CliResult<Box<dyn Integrand>> {
    let d = s.space.dim();
    let f: Box<dyn Integrand> = match name {
        "constant" => Box::new(ClosedFormIntegrand::Constant { dim: d }),
        "step" => Box::new(ClosedFormIntegrand::Step { dim: d }),
        "witness" => Box::new(witness_fn(gv.band(), &s.space)),
        "extremal" => {
            let (radius, adaptive) = search.map(|x| (x.box_radius, x.adaptive)).unwrap_or((8, true));
            let rep = rms_exact(gv, &s.space, radius, adaptive).map_err(err)?;
            Box::new(extremal_mode(&s.space, &rep).map_err(err)?)
        }
        k if k == "kink" || k.starts_with("kink:") => {
            let exponent = match k.strip_prefix("kink:") {
                Some(e) => e.parse().map_err(|_| format!("bad kink exponent in {k:?}"))?,
                None => 0.5,
            };
            Box::new(ClosedFormIntegrand::Kink { dim: d, exponent })
        }
        path => Box::new(read_coefficients(Path::new(path), d)?),
    };
    Ok(f)
}

fn run(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Construct { common, composed } => {
            let (s, _) = setup(&common)?;
            let gv = generating_vector(&common, &s)?;
            if composed {
                print!("{}", composed_to_text(&gv.composed()));
                Ok(true)
            } else {
                let crit = GoodSetCriterion::new(s.space.clone(), s.lambda).map_err(err)?;
                let gv = gv.certify(&crit).map_err(err)?;
                print!("{}", gv.to_text());
                Ok(gv.in_good_set())
            }
        }
        Command::Integrate { common, sampling } => {
            let (s, _) = setup(&common)?;
            let gv = generating_vector(&common, &s)?;
            let f = integrand(&sampling.integrand, &s, &gv, None)?;
            let samples = randomized_integrate(f.as_ref(), &gv, s.seed, sampling.with_shift(), sampling.reps).map_err(err)?;
            for x in &samples {
                println!("{} {:e} {:e}", x.draw.p, x.value.re, x.value.im);
            }
            let m = samples.len() as f64;
            let mean: Complex64 = samples.iter().map(|x| x.value).sum::<Complex64>() / m;
            let var = if samples.len() > 1 {
                samples.iter().map(|x| (x.value - mean).norm_sqr()).sum::<f64>() / (m - 1.0)
            } else {
                0.0
            };
            let mut summary = format!("mean={:e}{:+e}i stderr={:e}", mean.re, mean.im, (var / m).sqrt());
            if let Some(i) = f.known_integral() {
                summary.push_str(&format!(" integral={:e}{:+e}i", i.re, i.im));
            }
            println!("{summary}");
            Ok(true)
        }
        Command::RmsExact { common, search } => {
            let (s, _) = setup(&common)?;
            let gv = generating_vector(&common, &s)?;
            let rep = rms_exact(&gv, &s.space, search.box_radius, search.adaptive).map_err(err)?;
            println!("{rep}");
            Ok(rep.certified)
        }
        Command::RmsEmpirical { common, sampling, search } => {
            let (s, _) = setup(&common)?;
            let gv = generating_vector(&common, &s)?;
            let f = integrand(&sampling.integrand, &s, &gv, Some(&search))?;
            let e = rms_empirical(f.as_ref(), &gv, s.seed, sampling.with_shift(), sampling.reps).map_err(err)?;
            println!(
                "rms={:e} stderr={:e} mean_square={:e} mean_square_stderr={:e}",
                e.rms.value, e.rms.stderr, e.mean_square.value, e.mean_square.stderr
            );
            Ok(true)
        }
        Command::RanEmpirical { common, sampling, search } => {
            let (s, _) = setup(&common)?;
            let gv = generating_vector(&common, &s)?;
            let f = integrand(&sampling.integrand, &s, &gv, Some(&search))?;
            let e = ran_empirical(f.as_ref(), &gv, s.seed, sampling.with_shift(), sampling.reps).map_err(err)?;
            println!("ran={:e} stderr={:e}", e.value, e.stderr);
            Ok(true)
        }
        Command::Bounds { common, r, eps } => {
            let (s, _) = setup(&common)?;
            let (lambda, r) = match eps {
                Some(eps) => epsilon_selector(s.space.alpha(), eps).map_err(err)?,
                None => (s.lambda, r.unwrap_or_else(|| (1.0 / (2.0 * s.lambda)).ceil().max(1.0) as u32)),
            };
            let mu = s.space.mu_value(lambda, MuMode::ClosedForm).map_err(err)?.value;
            let theorem1 = theorem1_bound(&BoundParams::new(s.n, lambda, r, mu)).map_err(err)?;
            let naive = naive_bound(s.n, lambda, mu);
            let lower = lower_bound(s.n, s.space.weights().subset(&[0]), s.space.alpha(), BoundParams::C2);
            println!("theorem1={theorem1:e} naive={naive:e} lower={lower:e}");
            Ok(true)
        }
        Command::Convergence {
            common,
            n_grid,
            eps,
            reps,
            box_radius,
            adaptive,
            output,
            max_slope,
        } => {
            let mut table = merged_table(&common)?;
            let mut set = |key: &str, v: Value| {
                table.insert(key.to_string(), v);
            };
            if let Some(g) = n_grid {
                set("n_grid", Value::Array(g.iter().map(|&n| Value::Integer(n as i64)).collect()));
            }
            if let Some(e) = eps {
                set("eps", Value::Float(e));
            }
            if let Some(m) = reps {
                set("reps", Value::Integer(m as i64));
            }
            if let Some(b) = box_radius {
                set("box", Value::Integer(b as i64));
            }
            if let Some(a) = adaptive {
                set("adaptive", Value::Boolean(a));
            }
            if let Some(o) = &output {
                set("output", Value::String(o.display().to_string()));
            }
            let cfg = ExperimentConfig::from_table(&table).map_err(err)?;
            let result = run_convergence(&cfg).map_err(err)?;
            let csv = result.to_csv();
            match &cfg.output {
                Some(path) => fs::write(path, &csv).map_err(|e| format!("{}: {e}", path.display()))?,
                None => print!("{csv}"),
            }
            eprintln!("{}", describe(&result));
            for v in &result.violations {
                eprintln!("violation: {v}");
            }
            let mut ok = result.violations.is_empty();
            if let Some(limit) = max_slope {
                match &result.fit {
                    Some(f) if f.slope <= limit => {}
                    Some(f) => {
                        eprintln!("violation: slope {:.6} exceeds {limit}", f.slope);
                        ok = false;
                    }
                    None => {
                        eprintln!("violation: no slope (fewer than 3 certified rows)");
                        ok = false;
                    }
                }
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
