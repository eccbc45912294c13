//! Worst-case root-mean-square error of the randomised shifted rule, its
//! empirical counterparts, and the lower-bound witness.
//!
//! For a fixed generating vector the worst-case RMS error is
//! `sup_{h != 0} sqrt(omega(h)) / r(h)` with `omega(h)` the fraction of band
//! primes whose dual lattice contains `h`.

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::construct::GeneratingVector;
use crate::error::{Error, Result};
use crate::primes::{inv_mod, mul_mod, signed_mod, PrimeBand};
use crate::rule::{in_dual, randomized_integrate, Integrand};
use crate::space::{support, FrequencyVector, KorobovSpace, TrigPolynomial, WeightKind};

/// Largest dimension for which the supremum is computed.
pub const MAX_EXACT_DIM: usize = 3;
/// Budget on `(2H+1)^d * L` for adaptive box doubling before switching to the
/// dual-lattice sweep.
const BOX_BUDGET: u64 = 50_000_000;
/// Budget on frequencies visited by the dual-lattice sweep, per prime.
const SWEEP_BUDGET: u64 = 200_000_000;
const TIE_EPS: f64 = 1e-12;

/// `count / total`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    pub count: usize,
    pub total: usize,
}

impl Fraction {
    pub fn value(&self) -> f64 {
        self.count as f64 / self.total as f64
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.count, self.total)
    }
}

/// `omega(h) = (1/L) #{p in P_n : h.z = 0 mod p}`.
pub fn omega(h: &FrequencyVector, gv: &GeneratingVector) -> Result<Fraction> {
    if h.dim() != gv.dim() {
        return Err(Error::DimensionMismatch {
            expected: gv.dim(),
            got: h.dim(),
        });
    }
    Ok(Fraction {
        count: omega_count(h.as_slice(), gv),
        total: gv.band().len(),
    })
}

fn omega_count(h: &[i64], gv: &GeneratingVector) -> usize {
    gv.residues().iter().filter(|(p, z)| in_dual(h, z, *p)).count()
}

/// Counts band primes with `h` in their dual lattice, giving up once fewer
/// than `need` hits remain possible. Returns `None` when `need` is out of reach.
fn omega_count_at_least(h: &[i64], gv: &GeneratingVector, need: usize) -> Option<usize> {
    let total = gv.band().len();
    let allowed_misses = total.checked_sub(need)?;
    let mut hits = 0;
    let mut misses = 0;
    for (p, z) in gv.residues().iter() {
        if in_dual(h, z, p) {
            hits += 1;
        } else {
            misses += 1;
            if misses > allowed_misses {
                return None;
            }
        }
    }
    Some(hits)
}

// zig-zag rank 0, 1, -1, 2, -2, ... per component
fn canonical_key(h: &[i64]) -> impl Iterator<Item = u64> + '_ {
    h.iter()
        .map(|&x| 2 * x.unsigned_abs() - u64::from(x > 0))
}

/// Tie order for maximisers: lexicographic in the zig-zag enumeration
/// `0, 1, -1, 2, -2, ...` of each component.
pub fn canonical_cmp(a: &[i64], b: &[i64]) -> Ordering {
    canonical_key(a).cmp(canonical_key(b))
}

#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    value: f64,
    h: Vec<i64>,
    count: usize,
}

impl Candidate {
    fn better(self, other: Self) -> Self {
        match self.value.partial_cmp(&other.value) {
            Some(Ordering::Greater) => self,
            Some(Ordering::Less) => other,
            _ => {
                if canonical_cmp(&self.h, &other.h) == Ordering::Greater {
                    other
                } else {
                    self
                }
            }
        }
    }
}

fn pick(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.better(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// How the supremum was pinned down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Certification {
    /// Box `|h_j| <= radius` with the closed-form tail outside it.
    Box { radius: u64 },
    /// Every dual-lattice frequency of every band prime with `r(h) <= radius`.
    DualSweep { radius: f64 },
}

/// A value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Theoretical values attached to a report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttachedBounds {
    pub theorem1: Option<f64>,
    pub naive: f64,
    pub lower: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub rms_exact: f64,
    pub maximizer: FrequencyVector,
    pub omega: Fraction,
    /// Upper bound on `sqrt(omega)/r` over everything not examined.
    pub tail_bound: f64,
    pub certified: bool,
    pub certification: Certification,
    pub empirical_rms: Option<Estimate>,
    pub empirical_ran: Option<Estimate>,
    pub bounds: Option<AttachedBounds>,
}

impl fmt::Display for ErrorReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rms={:.12e} h*={} tail={:.6e} certified={}",
            self.rms_exact, self.maximizer, self.tail_bound, self.certified
        )
    }
}

fn check_exact_inputs(gv: &GeneratingVector, space: &KorobovSpace) -> Result<()> {
    if gv.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: gv.dim(),
        });
    }
    if space.dim() > MAX_EXACT_DIM {
        return Err(Error::Domain(format!(
            "exact RMS error is limited to d <= {MAX_EXACT_DIM}; use the empirical estimators"
        )));
    }
    Ok(())
}

/// Maximum of `sqrt(omega)/r` over the box `0 < max |h_j| <= radius`.
fn box_maximum(gv: &GeneratingVector, space: &KorobovSpace, radius: u64) -> Option<Candidate> {
    let d = space.dim();
    let side = 2 * radius + 1;
    let total = gv.band().len();
    let cells = side.pow(d as u32);
    (0..cells)
        .into_par_iter()
        .filter_map(|mut idx| {
            let mut h = vec![0i64; d];
            for hj in h.iter_mut().rev() {
                *hj = (idx % side) as i64 - radius as i64;
                idx /= side;
            }
            if h.iter().all(|&x| x == 0) {
                return None;
            }
            let count = omega_count(&h, gv);
            if count == 0 {
                return None;
            }
            let value = (count as f64 / total as f64).sqrt() / space.r_raw(&h);
            Some(Candidate { value, h, count })
        })
        .reduce_with(Candidate::better)
}

/// `sup 1/r` outside the box, attained one step beyond it on a single axis
/// with every other supported coordinate at magnitude one.
fn box_tail(space: &KorobovSpace, radius: u64) -> f64 {
    space.max_nonempty_weight() * ((radius + 1) as f64).powf(-space.alpha())
}

/// The exact worst-case RMS error of the randomised shifted rule.
///
/// Without `adaptive`, the box of the given radius is searched and the report
/// is certified when the closed-form tail lies below the box maximum. With
/// `adaptive`, the box is doubled while affordable and, if that does not
/// certify, every band prime's dual lattice is swept over `r(h) <= 1/M`,
/// which pins the supremum exactly.
pub fn rms_exact(gv: &GeneratingVector, space: &KorobovSpace, radius: u64, adaptive: bool) -> Result<ErrorReport> {
    check_exact_inputs(gv, space)?;
    let radius = radius.max(1);
    let d = space.dim() as u32;
    let l = gv.band().len() as u64;

    let mut h_radius = radius;
    let mut best = box_maximum(gv, space, h_radius);
    let mut tail = box_tail(space, h_radius);
    while adaptive && !certifies(&best, tail) {
        let next = h_radius * 2;
        if (2 * next + 1).saturating_pow(d).saturating_mul(l) > BOX_BUDGET {
            break;
        }
        h_radius = next;
        best = pick(best, box_maximum(gv, space, h_radius));
        tail = box_tail(space, h_radius);
    }

    if certifies(&best, tail) || !adaptive {
        return Ok(report(best, tail, Certification::Box { radius: h_radius }, gv, space));
    }

    let seed = pick(best.clone(), axis_candidates(gv, space));
    match dual_sweep(gv, space, seed)? {
        Some((cand, sweep_radius)) => {
            let tail = 1.0 / sweep_radius;
            Ok(report(
                Some(cand),
                tail,
                Certification::DualSweep { radius: sweep_radius },
                gv,
                space,
            ))
        }
        None => Ok(report(best, tail, Certification::Box { radius: h_radius }, gv, space)),
    }
}

fn certifies(best: &Option<Candidate>, tail: f64) -> bool {
    best.as_ref().is_some_and(|c| tail < c.value)
}

fn report(
    best: Option<Candidate>,
    tail: f64,
    certification: Certification,
    gv: &GeneratingVector,
    space: &KorobovSpace,
) -> ErrorReport {
    let total = gv.band().len();
    let (value, h, count) = match best {
        Some(c) => (c.value, c.h, c.count),
        None => (0.0, vec![0; space.dim()], 0),
    };
    ErrorReport {
        rms_exact: value,
        maximizer: FrequencyVector(h),
        omega: Fraction { count, total },
        tail_bound: tail,
        certified: tail < value,
        certification,
        empirical_rms: None,
        empirical_ran: None,
        bounds: None,
    }
}

/// `p e_j` lies in the dual lattice of `p` for every coordinate `j`.
fn axis_candidates(gv: &GeneratingVector, space: &KorobovSpace) -> Option<Candidate> {
    let d = space.dim();
    let total = gv.band().len();
    gv.band()
        .primes()
        .par_iter()
        .flat_map_iter(|&p| {
            (0..d).map(move |j| {
                let mut h = vec![0i64; d];
                h[j] = p as i64;
                h
            })
        })
        .map(|h| {
            let count = omega_count(&h, gv);
            let value = (count as f64 / total as f64).sqrt() / space.r_raw(&h);
            Candidate { value, h, count }
        })
        .reduce_with(Candidate::better)
}

/// Enumerates, per band prime, the dual-lattice frequencies with
/// `r(h) <= R = (1 + eps)/M0` and keeps the best `sqrt(omega)/r`. Anything
/// not enumerated has `sqrt(omega)/r <= 1/r < 1/R < M0`.
fn dual_sweep(
    gv: &GeneratingVector,
    space: &KorobovSpace,
    seed: Option<Candidate>,
) -> Result<Option<(Candidate, f64)>> {
    let Some(seed) = seed else {
        return Ok(None);
    };
    let m0 = seed.value;
    let sweep_radius = (1.0 + 1e-9) / m0;
    let total = gv.band().len();
    let results: Vec<Option<Option<Candidate>>> = gv
        .band()
        .primes()
        .par_iter()
        .map(|&p| {
            let walker = DualWalker::new(space, gv.residue(p), p, sweep_radius);
            let mut best: Option<Candidate> = None;
            let completed = walker.walk(SWEEP_BUDGET, &mut |h: &[i64], r: f64| {
                let need = (total as f64 * (m0 * r).powi(2) * (1.0 - TIE_EPS)).ceil().max(1.0) as usize;
                if need > total {
                    return;
                }
                if let Some(count) = omega_count_at_least(h, gv, need) {
                    let value = (count as f64 / total as f64).sqrt() / r;
                    if value >= m0 * (1.0 - TIE_EPS) {
                        best = pick(
                            best.take(),
                            Some(Candidate {
                                value,
                                h: h.to_vec(),
                                count,
                            }),
                        );
                    }
                }
            });
            completed.then_some(best)
        })
        .collect();
    let mut overall = Some(seed);
    for r in results {
        match r {
            Some(best) => overall = pick(overall, best),
            None => return Ok(None),
        }
    }
    Ok(overall.map(|c| (c, sweep_radius)))
}

/// Walks `{h != 0 : h.z = 0 mod p, r(h) <= R}`.
///
/// Every nonzero `h` has a pivot: the first coordinate of largest magnitude.
/// The non-pivot coordinates are enumerated with pruning on a lower bound of
/// `r`, then the pivot runs over its residue class mod p.
struct DualWalker<'a> {
    space: &'a KorobovSpace,
    z: &'a [u64],
    p: u64,
    radius: f64,
    alpha: f64,
    product: bool,
    gamma: Vec<f64>,
    gamma_max: f64,
}

impl<'a> DualWalker<'a> {
    fn new(space: &'a KorobovSpace, z: &'a [u64], p: u64, radius: f64) -> Self {
        let d = space.dim();
        Self {
            space,
            z,
            p,
            radius,
            alpha: space.alpha(),
            product: space.weights().kind() == WeightKind::Product,
            gamma: (0..d).map(|j| space.weights().coordinate(j)).collect(),
            gamma_max: space.max_nonempty_weight(),
        }
    }

    /// Returns false if the visit budget ran out.
    fn walk(&self, budget: u64, visit: &mut dyn FnMut(&[i64], f64)) -> bool {
        let d = self.z.len();
        let mut visited = 0u64;
        for pivot in 0..d {
            let others: Vec<usize> = (0..d).filter(|&j| j != pivot).collect();
            let mut h = vec![0i64; d];
            let mut state = Walk {
                visited: &mut visited,
                budget,
                visit: &mut *visit,
            };
            if !self.others(pivot, &others, 0, &mut h, 1.0, &mut state) {
                return false;
            }
        }
        true
    }

    // lower bound on the factor that unassigned non-pivot coordinates contribute
    fn rest_factor(&self, rest: &[usize]) -> f64 {
        if self.product {
            rest.iter().map(|&j| (1.0 / self.gamma[j]).min(1.0)).product()
        } else {
            1.0
        }
    }

    fn coord_factor(&self, j: usize, a: u64) -> f64 {
        let base = (a as f64).powf(self.alpha);
        if self.product {
            base / self.gamma[j]
        } else {
            base
        }
    }

    fn pivot_lower(&self, pivot: usize, h: &[i64]) -> u64 {
        let mut lo = 1u64;
        for (i, &x) in h.iter().enumerate() {
            if i == pivot {
                continue;
            }
            let need = if i < pivot { x.unsigned_abs() + 1 } else { x.unsigned_abs() };
            lo = lo.max(need);
        }
        lo
    }

    fn pivot_factor(&self, pivot: usize) -> f64 {
        if self.product {
            1.0 / self.gamma[pivot]
        } else {
            1.0 / self.gamma_max
        }
    }

    fn others(
        &self,
        pivot: usize,
        others: &[usize],
        idx: usize,
        h: &mut [i64],
        partial: f64,
        state: &mut Walk<'_>,
    ) -> bool {
        if idx == others.len() {
            return self.pivot_range(pivot, h, partial, state);
        }
        let i = others[idx];
        let rest = self.rest_factor(&others[idx + 1..]);
        h[i] = 0;
        if !self.others(pivot, others, idx + 1, h, partial, state) {
            return false;
        }
        let mut a = 1u64;
        loop {
            h[i] = a as i64;
            let lo = self.pivot_lower(pivot, h);
            let factor = self.coord_factor(i, a);
            let bound = partial * factor * rest * (lo as f64).powf(self.alpha) * self.pivot_factor(pivot);
            if bound > self.radius {
                break;
            }
            for sign in [1i64, -1] {
                h[i] = sign * a as i64;
                if !self.others(pivot, others, idx + 1, h, partial * factor, state) {
                    return false;
                }
            }
            a += 1;
        }
        h[i] = 0;
        true
    }

    fn pivot_range(&self, pivot: usize, h: &mut [i64], partial: f64, state: &mut Walk<'_>) -> bool {
        let p = self.p;
        let lo = self.pivot_lower(pivot, h);
        // r(h) = coeff * |v|^alpha
        let coeff = if self.product {
            partial / self.gamma[pivot]
        } else {
            let mut u = support(h);
            u.push(pivot);
            u.sort_unstable();
            partial / self.space.weights().subset(&u)
        };
        let vmax_f = (self.radius / coeff).powf(1.0 / self.alpha) * (1.0 + 1e-12) + 1.0;
        if vmax_f < lo as f64 {
            return true;
        }
        let vmax = vmax_f.min(i64::MAX as f64 / 4.0) as u64;
        let s = h
            .iter()
            .zip(self.z)
            .enumerate()
            .filter(|(i, _)| *i != pivot)
            .fold(0u64, |acc, (_, (&hj, &zj))| (acc + mul_mod(signed_mod(hj, p), zj, p)) % p);
        let zp = self.z[pivot] % p;
        let mut emit = |v: i64, state: &mut Walk<'_>| -> bool {
            h[pivot] = v;
            let r = self.space.r_raw(h);
            if r <= self.radius {
                (state.visit)(h, r);
            }
            *state.visited += 1;
            *state.visited <= state.budget
        };
        let ok = if zp != 0 {
            let c = mul_mod((p - s) % p, inv_mod(zp, p), p);
            let mut ok = true;
            for (class, sign) in [(c, 1i64), ((p - c) % p, -1i64)] {
                let mut w = lo + (class + p - lo % p) % p;
                while ok && w <= vmax {
                    ok = emit(sign * w as i64, state);
                    w += p;
                }
            }
            ok
        } else if s == 0 {
            let mut ok = true;
            let mut w = lo;
            while ok && w <= vmax {
                ok = emit(w as i64, state) && emit(-(w as i64), state);
                w += 1;
            }
            ok
        } else {
            true
        };
        h[pivot] = 0;
        ok
    }
}

struct Walk<'v> {
    visited: &'v mut u64,
    budget: u64,
    visit: &'v mut dyn FnMut(&[i64], f64),
}

fn sample_errors<F: Integrand + ?Sized>(
    f: &F,
    gv: &GeneratingVector,
    seed: u64,
    with_shift: bool,
    m: usize,
) -> Result<Vec<f64>> {
    let exact = f
        .known_integral()
        .ok_or_else(|| Error::Precondition("integrand has no known integral".into()))?;
    if m < 2 {
        return Err(Error::Domain("need at least two repetitions".into()));
    }
    let samples = randomized_integrate(f, gv, seed, with_shift, m)?;
    Ok(samples.iter().map(|s| (s.value - exact).norm()).collect())
}

fn mean_and_stderr(xs: &[f64]) -> Estimate {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Estimate {
        value: mean,
        stderr: (var / m).sqrt(),
    }
}

/// Empirical root-mean-square error for one integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsEstimate {
    /// `sqrt(mean |A - I|^2)` with its jackknife standard error.
    pub rms: Estimate,
    /// `mean |A - I|^2` with its standard error.
    pub mean_square: Estimate,
}

/// Sample RMS error of the randomised rule on `f` over `m` draws.
pub fn rms_empirical<F: Integrand + ?Sized>(
    f: &F,
    gv: &GeneratingVector,
    seed: u64,
    with_shift: bool,
    m: usize,
) -> Result<RmsEstimate> {
    let sq: Vec<f64> = sample_errors(f, gv, seed, with_shift, m)?
        .into_iter()
        .map(|e| e * e)
        .collect();
    let mean_square = mean_and_stderr(&sq);
    let n = sq.len() as f64;
    let total: f64 = sq.iter().sum();
    let leave_one_out: Vec<f64> = sq.iter().map(|x| ((total - x) / (n - 1.0)).max(0.0).sqrt()).collect();
    let jk_mean = leave_one_out.iter().sum::<f64>() / n;
    let jk_var = (n - 1.0) / n * leave_one_out.iter().map(|t| (t - jk_mean).powi(2)).sum::<f64>();
    Ok(RmsEstimate {
        rms: Estimate {
            value: mean_square.value.sqrt(),
            stderr: jk_var.sqrt(),
        },
        mean_square,
    })
}

/// Sample mean absolute error of the randomised rule on `f` over `m` draws.
pub fn ran_empirical<F: Integrand + ?Sized>(
    f: &F,
    gv: &GeneratingVector,
    seed: u64,
    with_shift: bool,
    m: usize,
) -> Result<Estimate> {
    Ok(mean_and_stderr(&sample_errors(f, gv, seed, with_shift, m)?))
}

/// `f_n(x) = sum_{p in P_n} (r(p, 0, ..., 0) sqrt(L))^{-1} e^{2 pi i p x_1}`.
pub fn witness_fn(band: &PrimeBand, space: &KorobovSpace) -> TrigPolynomial {
    let d = space.dim();
    let sqrt_l = (band.len() as f64).sqrt();
    let mut f = TrigPolynomial::new(d);
    for &p in band.primes() {
        let mut h = vec![0i64; d];
        h[0] = p as i64;
        let c = 1.0 / (space.r_raw(&h) * sqrt_l);
        f.add_mode(FrequencyVector(h), Complex64::new(c, 0.0))
            .expect("dimension matches");
    }
    f
}

fn witness_per_prime_errors(band: &PrimeBand, space: &KorobovSpace) -> Vec<f64> {
    let d = space.dim();
    let sqrt_l = (band.len() as f64).sqrt();
    band.primes()
        .iter()
        .map(|&p| {
            let mut h = vec![0i64; d];
            h[0] = p as i64;
            1.0 / (space.r_raw(&h) * sqrt_l)
        })
        .collect()
}

/// Expected absolute error of the randomised rule on `f_n` when `z_1` is
/// coprime to every band prime: `(1/L) sum_p (r(p e_1) sqrt L)^{-1}`.
pub fn witness_expected_error(band: &PrimeBand, space: &KorobovSpace) -> f64 {
    let e = witness_per_prime_errors(band, space);
    e.iter().sum::<f64>() / e.len() as f64
}

/// RMS error on `f_n` under the same coprimality condition.
pub fn witness_rms(band: &PrimeBand, space: &KorobovSpace) -> f64 {
    let e = witness_per_prime_errors(band, space);
    (e.iter().map(|x| x * x).sum::<f64>() / e.len() as f64).sqrt()
}

/// `gamma_{1} sqrt(ln n) / (sqrt(C2) n^{alpha + 1/2})`.
pub fn lower_bound(n: u64, gamma_1: f64, alpha: f64, c2: f64) -> f64 {
    let nf = n as f64;
    gamma_1 * nf.ln().sqrt() / (c2.sqrt() * nf.powf(alpha + 0.5))
}

/// `(8 mu)^lambda / n^lambda`.
pub fn naive_bound(n: u64, lambda: f64, mu: f64) -> f64 {
    (8.0 * mu / n as f64).powf(lambda)
}
