//! Good residue sets `G^(p)` and the pre-determined generating vector.
//!
//! A residue vector `z` in `Z_p^d` is good when its weighted dual-lattice sum
//! `sum_{h != 0, h.z = 0 mod p} r(h)^{-1/lambda}` is at most `4 mu / p`. For
//! product weights and `alpha/lambda` in {2, 4, 6} the infinite sum has a
//! closed form through Bernoulli polynomials; other exponents are decided
//! from a box-truncated sum plus a certified tail.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::primes::{crt_compose, inv_mod, mul_mod, CrtResidues, PrimeBand};
use crate::rng::{stream, DOMAIN_CONSTRUCT};
use crate::space::{mask_to_subset, KorobovSpace, MuMode, WeightKind};
use crate::special::{even_exponent, periodic_kernel, zeta, zeta_tail_bound};

/// Draw budget per prime; each draw succeeds with probability at least 1/2.
pub const DEFAULT_MAX_TRIES: usize = 64;
/// Box radius used when the exponent has no closed-form kernel.
pub const DEFAULT_FALLBACK_BOX: u64 = 2000;
/// Largest `p^d` for which exhaustive enumeration of `Z_p^d` is offered.
pub const EXHAUSTIVE_LIMIT: u64 = 1_000_000;

/// Membership test for `G^(p)` at a fixed `lambda`.
#[derive(Debug, Clone)]
pub struct GoodSetCriterion {
    space: KorobovSpace,
    lambda: f64,
    beta: f64,
    mu: f64,
    exact_exponent: Option<u32>,
    fallback_box: u64,
}

impl GoodSetCriterion {
    pub const THRESHOLD_FACTOR: f64 = 4.0;

    pub fn new(space: KorobovSpace, lambda: f64) -> Result<Self> {
        let mu = space.mu_value(lambda, MuMode::ClosedForm)?.value;
        let beta = space.alpha() / lambda;
        let exact_exponent = if space.weights().is_product() {
            even_exponent(beta)
        } else {
            None
        };
        Ok(Self {
            space,
            lambda,
            beta,
            mu,
            exact_exponent,
            fallback_box: DEFAULT_FALLBACK_BOX,
        })
    }

    /// Default `lambda = alpha / 2`, giving exponent 2.
    pub fn with_default_lambda(space: KorobovSpace) -> Result<Self> {
        let lambda = space.alpha() / 2.0;
        Self::new(space, lambda)
    }

    pub fn with_fallback_box(mut self, radius: u64) -> Self {
        self.fallback_box = radius.max(1);
        self
    }

    pub fn space(&self) -> &KorobovSpace {
        &self.space
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `alpha / lambda`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn is_exact(&self) -> bool {
        self.exact_exponent.is_some()
    }

    /// `4 mu / p`.
    pub fn threshold(&self, p: u64) -> f64 {
        Self::THRESHOLD_FACTOR * self.mu / p as f64
    }
}

fn check_residue(z: &[u64], p: u64, d: usize) -> Result<()> {
    if z.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: z.len(),
        });
    }
    if let Some(&bad) = z.iter().find(|&&zj| zj >= p) {
        return Err(Error::Domain(format!("residue {bad} is not below p = {p}")));
    }
    Ok(())
}

/// Exact dual-lattice sum through the character identity
/// `-1 + (1/p) sum_k prod_j (1 + gamma_j^{1/lambda} sigma({k z_j / p}))`.
pub fn dual_sum_exact(z: &[u64], p: u64, crit: &GoodSetCriterion) -> Result<f64> {
    check_residue(z, p, crit.space.dim())?;
    if !crit.space.weights().is_product() {
        return Err(Error::RequiresProductWeights);
    }
    let exponent = crit
        .exact_exponent
        .ok_or(Error::UnsupportedExactMode { beta: crit.beta })?;
    let g = crit.space.coordinate_weight_powers(crit.lambda)?;
    let kernel: Vec<f64> = (0..p)
        .map(|m| periodic_kernel(exponent, m as f64 / p as f64).unwrap())
        .collect();
    let mut total = 0.0;
    for k in 0..p {
        let term: f64 = z
            .iter()
            .zip(&g)
            .map(|(&zj, &gj)| 1.0 + gj * kernel[mul_mod(k, zj, p) as usize])
            .product();
        total += term;
    }
    Ok(total / p as f64 - 1.0)
}

/// Box sum over `{h != 0 : |h_j| <= H, h.z = 0 mod p}` together with an upper
/// bound on the part of the dual lattice outside the box.
///
/// The box sum groups frequencies by residue class, so it costs `O(H + d p^2)`
/// rather than `(2H+1)^d`.
pub fn dual_sum_truncated(
    z: &[u64],
    p: u64,
    space: &KorobovSpace,
    lambda: f64,
    radius: u64,
) -> Result<(f64, f64)> {
    if radius < 1 {
        return Err(Error::Domain("box radius must be at least 1".into()));
    }
    check_residue(z, p, space.dim())?;
    // validates lambda and divergence
    space.mu_value(lambda, MuMode::ClosedForm)?;
    let beta = space.alpha() / lambda;

    // class[c] = sum_{1 <= |h| <= H, h = c mod p} |h|^{-beta}
    let mut class = vec![0.0; p as usize];
    for h in (1..=radius).rev() {
        let w = (h as f64).powf(-beta);
        class[(h % p) as usize] += w;
        class[((p - h % p) % p) as usize] += w;
    }

    let value = match space.weights().kind() {
        WeightKind::Product => {
            let g = space.coordinate_weight_powers(lambda)?;
            let coords: Vec<usize> = (0..z.len()).collect();
            constrained_box_sum(z, p, &class, &coords, Some(&g)) - 1.0
        }
        WeightKind::Explicit => {
            let d = space.dim();
            let mut total = 0.0;
            for mask in 1u64..(1 << d) {
                let u = mask_to_subset(mask, d);
                let gamma = space.weights().subset(&u).powf(1.0 / lambda);
                total += gamma * constrained_box_sum(z, p, &class, &u, None);
            }
            total
        }
    };

    let tail = match space.weights().kind() {
        WeightKind::Product => {
            let g = space.coordinate_weight_powers(lambda)?;
            product_dual_tail(z, p, &g, beta, radius)
        }
        WeightKind::Explicit => {
            let mu = space.mu_value(lambda, MuMode::Truncated(radius))?;
            mu.tail_bound
        }
    };
    Ok((value, tail))
}

/// Sum over residues `c_j` (j in `coords`) with `sum c_j z_j = 0 mod p` of
/// `prod_j a_j(c_j)`. With `weights`, `a_j(c) = [c = 0] + g_j class[c]`
/// (zero allowed); without, `a_j(c) = class[c]` (nonzero frequencies only).
fn constrained_box_sum(
    z: &[u64],
    p: u64,
    class: &[f64],
    coords: &[usize],
    weights: Option<&[f64]>,
) -> f64 {
    let pu = p as usize;
    let factor = |j: usize, c: usize| -> f64 {
        match weights {
            Some(g) => f64::from(u8::from(c == 0)) + g[j] * class[c],
            None => class[c],
        }
    };
    // distribution of s = sum c_j z_j over all but the last coordinate
    let mut dist = vec![0.0; pu];
    dist[0] = 1.0;
    let Some((&last, rest)) = coords.split_last() else {
        return 1.0;
    };
    for &j in rest {
        let mut next = vec![0.0; pu];
        for c in 0..pu {
            let a = factor(j, c);
            if a == 0.0 {
                continue;
            }
            let shift = mul_mod(c as u64, z[j], p) as usize;
            for (s, &ds) in dist.iter().enumerate() {
                if ds != 0.0 {
                    next[(s + shift) % pu] += ds * a;
                }
            }
        }
        dist = next;
    }
    // last coordinate: c_last z_last = -s
    let zl = z[last];
    if zl == 0 {
        let a: f64 = (0..pu).map(|c| factor(last, c)).sum();
        dist[0] * a
    } else {
        let inv = inv_mod(zl, p);
        dist.iter()
            .enumerate()
            .map(|(s, &ds)| {
                let c = mul_mod((p - s as u64) % p, inv, p) as usize;
                ds * factor(last, c)
            })
            .sum()
    }
}

/// Upper bound on the dual-lattice mass outside the box for product weights.
///
/// A frequency outside the box has some `|h_j| > H`. For that coordinate the
/// remaining coordinates are summed without truncation; when `z_j` is a unit
/// mod p the constraint class cycles with period p in `h_j`, so the decreasing
/// weights can be bounded block by block against the full residue sum.
fn product_dual_tail(z: &[u64], p: u64, g: &[f64], beta: f64, radius: u64) -> f64 {
    let zeta_beta = zeta(beta);
    let full: Vec<f64> = g.iter().map(|gi| 1.0 + 2.0 * gi * zeta_beta).collect();
    let h1 = (radius + 1) as f64;
    let block = h1.powf(-beta) + h1.powf(1.0 - beta) / (p as f64 * (beta - 1.0));
    let plain = zeta_tail_bound(beta, radius);
    (0..z.len())
        .map(|j| {
            let others: f64 = full
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .map(|(_, f)| f)
                .product();
            let one_side = if z[j] % p != 0 { block } else { plain };
            2.0 * g[j] * one_side * others
        })
        .sum()
}

/// Outcome of a good-set membership test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// The dual sum, or an upper bound on it when the exponent is not exact.
    pub sum: f64,
    pub threshold: f64,
}

impl Certificate {
    pub fn is_good(&self) -> bool {
        self.sum <= self.threshold
    }
}

/// Tests `z` for membership in `G^(p)`.
pub fn is_good(z: &[u64], p: u64, crit: &GoodSetCriterion) -> Result<Certificate> {
    let sum = if crit.is_exact() {
        dual_sum_exact(z, p, crit)?
    } else {
        let (value, tail) = dual_sum_truncated(z, p, &crit.space, crit.lambda, crit.fallback_box)?;
        value + tail
    };
    Ok(Certificate {
        sum,
        threshold: crit.threshold(p),
    })
}

/// Rejection sampling from `Z_p^d` until a good vector appears.
pub fn find_good_residue<R: Rng + ?Sized>(
    p: u64,
    crit: &GoodSetCriterion,
    rng: &mut R,
    max_tries: usize,
) -> Result<(Vec<u64>, Certificate)> {
    if max_tries == 0 {
        return Err(Error::Domain("max_tries must be at least 1".into()));
    }
    let d = crit.space.dim();
    for _ in 0..max_tries {
        let z: Vec<u64> = (0..d).map(|_| rng.gen_range(0..p)).collect();
        let cert = is_good(&z, p, crit)?;
        if cert.is_good() {
            return Ok((z, cert));
        }
    }
    Err(Error::SearchFailure { p, tries: max_tries })
}

/// Every vector of `Z_p^d` with its certificate, in lexicographic order.
pub fn enumerate_residues(p: u64, crit: &GoodSetCriterion) -> Result<Vec<(Vec<u64>, Certificate)>> {
    let d = crit.space.dim() as u32;
    let count = p
        .checked_pow(d)
        .filter(|&c| c <= EXHAUSTIVE_LIMIT)
        .ok_or_else(|| Error::Domain(format!("p^d exceeds {EXHAUSTIVE_LIMIT}")))?;
    (0..count)
        .into_par_iter()
        .map(|mut idx| {
            let mut z = vec![0u64; d as usize];
            for zj in z.iter_mut().rev() {
                *zj = idx % p;
                idx /= p;
            }
            let cert = is_good(&z, p, crit)?;
            Ok((z, cert))
        })
        .collect()
}

/// The members of `G^(p)`.
pub fn good_set(p: u64, crit: &GoodSetCriterion) -> Result<Vec<Vec<u64>>> {
    Ok(enumerate_residues(p, crit)?
        .into_iter()
        .filter(|(_, c)| c.is_good())
        .map(|(z, _)| z)
        .collect())
}

/// A generating vector held as residues modulo each prime of the band.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingVector {
    band: PrimeBand,
    residues: CrtResidues,
    certificates: BTreeMap<u64, Certificate>,
}

impl GeneratingVector {
    /// Wraps residues without membership certificates.
    pub fn from_residues(band: PrimeBand, residues: CrtResidues) -> Result<Self> {
        residues.check_band(&band)?;
        Ok(Self {
            band,
            residues,
            certificates: BTreeMap::new(),
        })
    }

    /// The same integer vector `z` reduced modulo every prime of the band.
    pub fn from_integers(band: PrimeBand, z: &[u64]) -> Result<Self> {
        let per_prime = band
            .primes()
            .iter()
            .map(|&p| (p, z.iter().map(|zj| zj % p).collect()))
            .collect();
        let residues = CrtResidues::new(z.len(), per_prime)?;
        Self::from_residues(band, residues)
    }

    /// Computes certificates for every prime.
    pub fn certify(mut self, crit: &GoodSetCriterion) -> Result<Self> {
        self.certificates = self
            .residues
            .iter()
            .map(|(p, z)| Ok((p, is_good(z, p, crit)?)))
            .collect::<Result<_>>()?;
        Ok(self)
    }

    pub fn band(&self) -> &PrimeBand {
        &self.band
    }

    pub fn residues(&self) -> &CrtResidues {
        &self.residues
    }

    pub fn dim(&self) -> usize {
        self.residues.dim()
    }

    /// `z mod p`; `p` must belong to the band.
    pub fn residue(&self, p: u64) -> &[u64] {
        self.residues
            .get(p)
            .unwrap_or_else(|| panic!("prime {p} is not in the band"))
    }

    pub fn certificates(&self) -> &BTreeMap<u64, Certificate> {
        &self.certificates
    }

    /// True when every prime carries a passing certificate, i.e. `z` lies in `G_n`.
    pub fn in_good_set(&self) -> bool {
        self.certificates.len() == self.band.len() && self.certificates.values().all(Certificate::is_good)
    }

    /// Whether `z_1` is a unit modulo every prime of the band.
    pub fn first_coordinate_coprime(&self) -> bool {
        self.residues.iter().all(|(_, z)| z[0] != 0)
    }

    pub fn composed(&self) -> Vec<num_bigint::BigUint> {
        crt_compose(&self.band, &self.residues).expect("residues cover the band")
    }

    /// Residue lines followed by one `p: sum=... threshold=...` line per certificate.
    pub fn to_text(&self) -> String {
        let mut out = self.residues.to_text();
        for (p, c) in &self.certificates {
            writeln!(out, "{p}: sum={:e} threshold={:e}", c.sum, c.threshold).unwrap();
        }
        out
    }

    pub fn from_text(band: PrimeBand, text: &str) -> Result<Self> {
        let residues = CrtResidues::from_text(text)?;
        let mut gv = Self::from_residues(band, residues)?;
        for line in text.lines().map(str::trim).filter(|l| l.contains("sum=")) {
            let (p, rest) = line
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("bad certificate line `{line}`")))?;
            let p: u64 = p.trim().parse().map_err(|_| Error::Parse(format!("bad prime in `{line}`")))?;
            let mut sum = None;
            let mut threshold = None;
            for tok in rest.split_whitespace() {
                if let Some(v) = tok.strip_prefix("sum=") {
                    sum = v.parse::<f64>().ok();
                } else if let Some(v) = tok.strip_prefix("threshold=") {
                    threshold = v.parse::<f64>().ok();
                }
            }
            match (sum, threshold) {
                (Some(sum), Some(threshold)) => {
                    gv.certificates.insert(p, Certificate { sum, threshold });
                }
                _ => return Err(Error::Parse(format!("bad certificate line `{line}`"))),
            }
        }
        Ok(gv)
    }
}

/// Runs the residue search independently for every prime of the band. Each
/// prime draws from its own stream of `seed`, so the result does not depend
/// on scheduling.
pub fn build_generating_vector(
    band: &PrimeBand,
    crit: &GoodSetCriterion,
    seed: u64,
) -> Result<GeneratingVector> {
    let found: Vec<(u64, Vec<u64>, Certificate)> = band
        .primes()
        .par_iter()
        .map(|&p| {
            let mut rng = stream(seed, DOMAIN_CONSTRUCT, p);
            let (z, cert) = find_good_residue(p, crit, &mut rng, DEFAULT_MAX_TRIES)?;
            Ok((p, z, cert))
        })
        .collect::<Result<_>>()?;
    let mut per_prime = BTreeMap::new();
    let mut certificates = BTreeMap::new();
    for (p, z, cert) in found {
        per_prime.insert(p, z);
        certificates.insert(p, cert);
    }
    let residues = CrtResidues::new(crit.space.dim(), per_prime)?;
    Ok(GeneratingVector {
        band: band.clone(),
        residues,
        certificates,
    })
}

/// `B_{n,lambda} = n^lambda (8 mu)^{-lambda}`.
pub fn b_n_lambda(n: u64, lambda: f64, mu: f64) -> f64 {
    (n as f64 / (8.0 * mu)).powf(lambda)
}
