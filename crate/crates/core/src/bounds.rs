//! Set-partition combinatorics and the upper bound on the worst-case RMS
//! error of the randomised shifted rule.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::special::zeta;

/// Largest `r` for the exact partition counts.
pub const MAX_PARTITION_ORDER: u32 = 64;

fn check_order(r: u32) -> Result<()> {
    if r > MAX_PARTITION_ORDER {
        return Err(Error::Domain(format!(
            "partition order {r} exceeds {MAX_PARTITION_ORDER}"
        )));
    }
    Ok(())
}

/// Row `r` of the Stirling triangle, `S(r, 0..=r)`.
fn stirling_row(r: u32) -> Vec<BigUint> {
    let mut row = vec![BigUint::one()];
    for i in 1..=r as usize {
        let mut next = vec![BigUint::zero(); i + 1];
        for m in 1..=i {
            let mut v = &row.get(m).cloned().unwrap_or_default() * BigUint::from(m);
            v += &row[m - 1];
            next[m] = v;
        }
        row = next;
    }
    row
}

/// Stirling number of the second kind `S(r, m)`.
pub fn stirling2(r: u32, m: u32) -> Result<BigUint> {
    check_order(r)?;
    if m > r {
        return Ok(BigUint::zero());
    }
    Ok(stirling_row(r).swap_remove(m as usize))
}

fn factorial(m: u32) -> BigUint {
    (1..=m).map(BigUint::from).product()
}

/// Surjections from an `r`-set onto an `m`-set: `m! S(r, m)`.
pub fn labelled_partitions(r: u32, m: u32) -> Result<BigUint> {
    Ok(factorial(m) * stirling2(r, m)?)
}

/// `T_r(x) = sum_k S(r, k) x^k`.
pub fn touchard(r: u32, x: f64) -> Result<f64> {
    check_order(r)?;
    Ok(stirling_row(r)
        .iter()
        .rev()
        .fold(0.0, |acc, s| acc * x + s.to_f64().unwrap_or(f64::INFINITY)))
}

/// Bell number `B_r`.
pub fn bell(r: u32) -> Result<BigUint> {
    check_order(r)?;
    Ok(stirling_row(r).into_iter().sum())
}

/// `(C3 r / ln(r + 1))^r`.
pub fn bell_upper(r: u32, c3: f64) -> f64 {
    let r = r as f64;
    (c3 * r / (r + 1.0).ln()).powf(r)
}

fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// The three members of the moment chain used in the proof of the upper
/// bound for a band of `l` primes at `n`:
/// `sum_{m <= min(r, l)} m! C(l, m) S(r, m) (6/n)^m`, `T_r(6 C2 / ln n)` and `B_r`.
pub fn moment_chain(l: usize, n: u64, r: u32, c2: f64) -> Result<(f64, f64, f64)> {
    check_order(r)?;
    let row = stirling_row(r);
    let x = 6.0 / n as f64;
    let lhs = (1..=r.min(l as u32))
        .map(|m| {
            factorial(m).to_f64().unwrap()
                * binomial(l as u64, m as u64)
                * row[m as usize].to_f64().unwrap()
                * x.powi(m as i32)
        })
        .sum();
    let mid = touchard(r, 6.0 * c2 / (n as f64).ln())?;
    let b = bell(r)?.to_f64().unwrap();
    Ok((lhs, mid, b))
}

/// Parameters of the upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub n: u64,
    pub lambda: f64,
    pub r: u32,
    pub mu: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl BoundParams {
    pub const C1: f64 = 0.4;
    pub const C2: f64 = 0.6;
    pub const C3: f64 = 0.792;

    pub fn new(n: u64, lambda: f64, r: u32, mu: f64) -> Self {
        Self {
            n,
            lambda,
            r,
            mu,
            c1: Self::C1,
            c2: Self::C2,
            c3: Self::C3,
        }
    }

    /// Smallest `n` satisfying `n >= e^{6 C2}`.
    pub fn min_n(&self) -> u64 {
        (6.0 * self.c2).exp().ceil() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::Precondition(format!("lambda > 0 violated: lambda = {}", self.lambda)));
        }
        if self.r == 0 || (self.r as f64) < 1.0 / (2.0 * self.lambda) {
            return Err(Error::Precondition(format!(
                "r >= 1/(2 lambda) violated: r = {}, 1/(2 lambda) = {}",
                self.r,
                1.0 / (2.0 * self.lambda)
            )));
        }
        if (self.n as f64) < (6.0 * self.c2).exp() {
            return Err(Error::Precondition(format!(
                "n >= e^(6 C2) violated: n = {}, e^(6 C2) = {:.4}",
                self.n,
                (6.0 * self.c2).exp()
            )));
        }
        if !(self.c1 > 0.0 && self.c1 < 0.5 && self.c2 > 0.5) {
            return Err(Error::Precondition(format!(
                "0 < C1 < 1/2 < C2 violated: C1 = {}, C2 = {}",
                self.c1, self.c2
            )));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::Precondition(format!("mu > 0 violated: mu = {}", self.mu)));
        }
        Ok(())
    }
}

/// `n^{-(lambda + (r-1)/(2r))} (C3 r ln n / (C1 ln(r+1)))^{1/2} (4 mu)^lambda`.
pub fn theorem1_bound(params: &BoundParams) -> Result<f64> {
    params.validate()?;
    let n = params.n as f64;
    let r = params.r as f64;
    let exponent = params.lambda + (r - 1.0) / (2.0 * r);
    let log_factor = (params.c3 * r * n.ln() / (params.c1 * (r + 1.0).ln())).sqrt();
    Ok(n.powf(-exponent) * log_factor * (4.0 * params.mu).powf(params.lambda))
}

/// `(lambda, r)` for a target rate `n^{-alpha - 1/2 + eps}`:
/// `lambda = alpha - eps/2` and the smallest integer `r >= max(1/(2 lambda), 1/eps)`.
pub fn epsilon_selector(alpha: f64, eps: f64) -> Result<(f64, u32)> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let lambda = alpha - eps / 2.0;
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!(
            "eps = {eps} too large for alpha = {alpha}: lambda = alpha - eps/2 must be positive"
        )));
    }
    // guard against 1/eps landing a hair above an integer
    let need = (1.0 / (2.0 * lambda)).max(1.0 / eps);
    let r = (need * (1.0 - 1e-12)).ceil().max(1.0);
    Ok((lambda, r as u32))
}

/// Outcome of following the partial products `prod_{j <= d}(1 + 2 gamma_j^{1/lambda} zeta(alpha/lambda)) - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tractability {
    /// Increments fell below `1e-12`; `value` is the limit estimate.
    Converged { value: f64, dimension: usize },
    /// Partial products exceeded `1e12`.
    Divergent { dimension: usize },
    /// Neither happened before `d_limit`.
    Undecided { value: f64 },
}

impl Tractability {
    pub const TOLERANCE: f64 = 1e-12;
    pub const CEILING: f64 = 1e12;

    pub fn value(&self) -> Option<f64> {
        match *self {
            Tractability::Converged { value, .. } | Tractability::Undecided { value } => Some(value),
            Tractability::Divergent { .. } => None,
        }
    }
}

/// Follows the partial products for coordinate weights `gamma(j)`, `j = 0, 1, ...`.
pub fn tractability_constant<G: Fn(usize) -> f64>(gamma: G, alpha: f64, lambda: f64, d_limit: usize) -> Result<Tractability> {
    if !(lambda > 0.0 && lambda < alpha) {
        return Err(Error::Domain(format!("need 0 < lambda < alpha, got lambda = {lambda}")));
    }
    let z = zeta(alpha / lambda);
    let mut prod = 1.0f64;
    for j in 0..d_limit {
        let next = prod * (1.0 + 2.0 * gamma(j).powf(1.0 / lambda) * z);
        let increment = next - prod;
        prod = next;
        if prod - 1.0 > Tractability::CEILING {
            return Ok(Tractability::Divergent { dimension: j + 1 });
        }
        if increment < Tractability::TOLERANCE {
            return Ok(Tractability::Converged {
                value: prod - 1.0,
                dimension: j + 1,
            });
        }
    }
    Ok(Tractability::Undecided { value: prod - 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn u(r: u32, m: u32) -> u64 {
        stirling2(r, m).unwrap().to_u64().unwrap()
    }

    #[test]
    fn stirling_examples() {
        assert_eq!(u(3, 2), 3);
        assert_eq!(u(4, 2), 7);
        assert_eq!(u(0, 0), 1);
        assert_eq!(u(5, 0), 0);
        assert_eq!(u(2, 5), 0);
        for r in 1..20 {
            assert_eq!(u(r, 1), 1);
            assert_eq!(u(r, r), 1);
        }
        assert!(stirling2(65, 3).is_err());
        assert!(stirling2(64, 32).unwrap() > BigUint::from(u128::MAX));
    }

    #[test]
    fn labelled_examples() {
        assert_eq!(labelled_partitions(3, 2).unwrap(), BigUint::from(6u32));
        assert_eq!(labelled_partitions(4, 2).unwrap(), BigUint::from(14u32));
        for r in 1..10 {
            assert_eq!(labelled_partitions(r, r).unwrap(), factorial(r));
        }
    }

    #[test]
    fn bell_examples() {
        let b: Vec<u64> = (0..=4).map(|r| bell(r).unwrap().to_u64().unwrap()).collect();
        assert_eq!(b, vec![1, 1, 2, 5, 15]);
        assert_eq!(bell(25).unwrap().to_string(), "4638590332229999353");
        for r in 0..12 {
            assert!((touchard(r, 1.0).unwrap() - bell(r).unwrap().to_f64().unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn bell_upper_holds_from_one() {
        // tightest at r = 4: 15 against 15.012
        for r in 1..=25 {
            let b = bell(r).unwrap().to_f64().unwrap();
            assert!(b < bell_upper(r, BoundParams::C3), "r = {r}");
        }
        assert!(bell_upper(4, BoundParams::C3) - 15.0 < 0.02);
    }

    #[test]
    fn theorem1_example() {
        let p = BoundParams::new(100, 0.25, 2, PI * PI / 3.0);
        let v = theorem1_bound(&p).unwrap();
        let expect = 0.1 * (0.792 * 2.0 * 100f64.ln() / (0.4 * 3f64.ln())).sqrt() * (4.0 * PI * PI / 3.0).powf(0.25);
        assert!((v - expect).abs() < 1e-15);
        assert!((v - 0.775_993_045_962_498_6).abs() < 1e-12, "{v}");
    }

    #[test]
    fn theorem1_preconditions() {
        let mu = PI * PI / 3.0;
        assert!(theorem1_bound(&BoundParams::new(36, 0.25, 2, mu)).is_err());
        assert!(theorem1_bound(&BoundParams::new(37, 0.25, 2, mu)).is_ok());
        let e = theorem1_bound(&BoundParams::new(100, 0.25, 1, mu)).unwrap_err();
        assert!(e.to_string().contains("r >= 1/(2 lambda)"));
        let mut p = BoundParams::new(100, 0.25, 2, mu);
        p.c1 = 0.5;
        assert!(theorem1_bound(&p).is_err());
        assert_eq!(BoundParams::new(100, 0.25, 2, mu).min_n(), 37);
    }

    #[test]
    fn theorem1_decreases_in_n() {
        let mu = PI * PI / 3.0;
        let mut prev = f64::INFINITY;
        for n in 37..2000 {
            let v = theorem1_bound(&BoundParams::new(n, 0.25, 4, mu)).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn selector() {
        let (l, r) = epsilon_selector(0.5, 0.25).unwrap();
        assert_eq!(l, 0.375);
        assert_eq!(r, 4);
        let (l, r) = epsilon_selector(0.5, 0.3).unwrap();
        assert!((l - 0.35).abs() < 1e-15);
        assert_eq!(r, 4);
        let (_, r) = epsilon_selector(0.1, 0.1).unwrap();
        assert_eq!(r, 10);
        assert!(epsilon_selector(0.5, 1.0).is_err());
        assert!(epsilon_selector(0.5, 0.0).is_err());
    }

    #[test]
    fn tractability() {
        let t = tractability_constant(|j| ((j + 1) as f64).powi(-2), 0.5, 0.25, 10_000).unwrap();
        let Tractability::Converged { value, .. } = t else { panic!("{t:?}") };
        let direct: f64 = (1..200).map(|j| 1.0 + 2.0 * (j as f64).powi(-8) * zeta(2.0)).product::<f64>() - 1.0;
        assert!((value - direct).abs() < 1e-10);
        assert!(matches!(
            tractability_constant(|_| 1.0, 0.5, 0.25, 10_000).unwrap(),
            Tractability::Divergent { .. }
        ));
        assert_eq!(tractability_constant(|_| 1.0, 0.5, 0.25, 0).unwrap(), Tractability::Undecided { value: 0.0 });
    }

    #[test]
    fn tuple_counts() {
        // r-tuples over l primes grouped by the set of distinct primes used
        for l in 2..=4u64 {
            for r in 1..=5u32 {
                let total: f64 = (1..=r)
                    .map(|m| labelled_partitions(r, m).unwrap().to_f64().unwrap() * binomial(l, m as u64))
                    .sum();
                assert_eq!(total, (l as f64).powi(r as i32));
            }
        }
    }
}
