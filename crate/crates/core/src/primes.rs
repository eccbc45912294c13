//! The prime band `P_n = { p prime : n/2 < p <= n }`, prime-counting sanity
//! bounds, and Chinese-remainder composition of per-prime residues.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

/// All primes in `(n/2, n]`, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeBand {
    n: u64,
    primes: Vec<u64>,
}

impl PrimeBand {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// `L = |P_n|`.
    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn contains(&self, p: u64) -> bool {
        self.primes.binary_search(&p).is_ok()
    }

    /// `N = prod p`.
    pub fn modulus(&self) -> BigUint {
        self.primes.iter().map(|&p| BigUint::from(p)).product()
    }

    /// A band over an explicit prime list; used for hand-built examples
    /// that do not come from a single `n`.
    pub fn from_primes(n: u64, mut primes: Vec<u64>) -> Result<Self> {
        primes.sort_unstable();
        primes.dedup();
        if primes.is_empty() {
            return Err(Error::Domain("a prime band cannot be empty".into()));
        }
        if let Some(&p) = primes.iter().find(|&&p| !is_prime(p)) {
            return Err(Error::Domain(format!("{p} is not prime")));
        }
        Ok(Self { n, primes })
    }
}

/// Sieve of Eratosthenes over `[2, n]`, keeping the primes above `n/2`.
pub fn sieve_band(n: u64) -> Result<PrimeBand> {
    if n < 2 {
        return Err(Error::Domain(format!("prime band needs n >= 2, got {n}")));
    }
    let len = n as usize + 1;
    let mut composite = vec![false; len];
    let mut i = 2usize;
    while i * i < len {
        if !composite[i] {
            let mut j = i * i;
            while j < len {
                composite[j] = true;
                j += i;
            }
        }
        i += 1;
    }
    // p > n/2  <=>  2p > n
    let primes = (2..len)
        .filter(|&p| !composite[p] && 2 * p as u64 > n)
        .map(|p| p as u64)
        .collect();
    Ok(PrimeBand { n, primes })
}

/// Whether `C1 n / ln n <= L <= C2 n / ln n`.
pub fn pnt_bounds_check(band: &PrimeBand, c1: f64, c2: f64) -> bool {
    let n = band.n() as f64;
    let scale = n / n.ln();
    let l = band.len() as f64;
    c1 * scale <= l && l <= c2 * scale
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub(crate) fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Inverse modulo a prime; `a` must not be divisible by `p`.
pub(crate) fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

/// `h mod p` in `[0, p)` for a signed integer.
pub(crate) fn signed_mod(h: i64, p: u64) -> u64 {
    h.rem_euclid(p as i64) as u64
}

/// Per-prime residue vectors `z^(p)` in `Z_p^d`, one for every prime in a band.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrtResidues {
    dim: usize,
    per_prime: BTreeMap<u64, Vec<u64>>,
}

impl CrtResidues {
    /// Validates ranges and dimensions. Completeness against a band is checked
    /// separately by [`CrtResidues::check_band`].
    pub fn new(dim: usize, per_prime: BTreeMap<u64, Vec<u64>>) -> Result<Self> {
        for (&p, z) in &per_prime {
            if z.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: z.len(),
                });
            }
            if let Some(&bad) = z.iter().find(|&&zj| zj >= p) {
                return Err(Error::Domain(format!("residue {bad} is not below p = {p}")));
            }
        }
        Ok(Self { dim, per_prime })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, p: u64) -> Option<&[u64]> {
        self.per_prime.get(&p).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &[u64])> {
        self.per_prime.iter().map(|(&p, z)| (p, z.as_slice()))
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.per_prime.keys().copied()
    }

    /// Errors unless the map's domain equals the band's prime list.
    pub fn check_band(&self, band: &PrimeBand) -> Result<()> {
        if let Some(&p) = band.primes().iter().find(|p| !self.per_prime.contains_key(p)) {
            return Err(Error::MissingPrime(p));
        }
        if let Some(&p) = self.per_prime.keys().find(|&&p| !band.contains(p)) {
            return Err(Error::Precondition(format!("prime {p} is not in the band")));
        }
        Ok(())
    }

    /// Text form: one line `p: z1 z2 ... zd` per prime.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (p, z) in self.iter() {
            write!(out, "{p}:").unwrap();
            for zj in z {
                write!(out, " {zj}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses residue lines; blank lines, `#` comments and certificate lines
    /// (`p: sum=... threshold=...`) are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut per_prime = BTreeMap::new();
        let mut dim = None;
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') || line.contains('=') {
                continue;
            }
            let (p, rest) = line
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected `p: z1 ... zd`, got `{line}`")))?;
            let p: u64 = p
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad prime in `{line}`")))?;
            let z = rest
                .split_whitespace()
                .map(|t| t.parse::<u64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Parse(format!("bad residue in `{line}`")))?;
            if *dim.get_or_insert(z.len()) != z.len() {
                return Err(Error::Parse(format!("inconsistent dimension in `{line}`")));
            }
            if per_prime.insert(p, z).is_some() {
                return Err(Error::Parse(format!("prime {p} listed twice")));
            }
        }
        Self::new(dim.unwrap_or(0), per_prime)
    }
}

/// Composes the unique `z` with `0 <= z_j < N` and `z_j = z^(p)_j (mod p)`.
pub fn crt_compose(band: &PrimeBand, residues: &CrtResidues) -> Result<Vec<BigUint>> {
    residues.check_band(band)?;
    let mut z = vec![BigUint::zero(); residues.dim()];
    let mut modulus = BigUint::from(1u32);
    for &p in band.primes() {
        let target = residues.get(p).ok_or(Error::MissingPrime(p))?;
        let m_mod_p = (&modulus % p).to_u64().unwrap();
        let m_inv = inv_mod(m_mod_p, p);
        for (zj, &aj) in z.iter_mut().zip(target) {
            let current = (&*zj % p).to_u64().unwrap();
            let diff = (aj + p - current) % p;
            let k = mul_mod(diff, m_inv, p);
            *zj += &modulus * k;
        }
        modulus *= p;
    }
    Ok(z)
}

/// Componentwise `z mod p`.
pub fn reduce_mod(z: &[BigUint], p: u64) -> Vec<u64> {
    z.iter().map(|zj| (zj % p).to_u64().unwrap()).collect()
}

/// Decimal big integers, one per line.
pub fn composed_to_text(z: &[BigUint]) -> String {
    z.iter().map(|zj| format!("{zj}\n")).collect()
}

pub fn composed_from_text(text: &str) -> Result<Vec<BigUint>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse::<BigUint>()
                .map_err(|_| Error::Parse(format!("bad integer `{l}`")))
        })
        .collect()
}
