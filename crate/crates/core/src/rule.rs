//! Rank-1 lattice rules, with and without a shift, and the randomised rule
//! that draws the number of points from the prime band.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::construct::GeneratingVector;
use crate::error::{Error, Result};
use crate::primes::{signed_mod, PrimeBand};
use crate::rng::{StreamId, DOMAIN_INTEGRATE};
use crate::space::{FrequencyVector, TrigPolynomial};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrandKind {
    TrigPolynomial,
    ClosedFormFamily,
    External,
}

/// A function on `[0,1)^d`.
pub trait Integrand: Sync {
    fn dim(&self) -> usize;
    fn evaluate(&self, x: &[f64]) -> Complex64;
    fn known_integral(&self) -> Option<Complex64>;
    fn kind(&self) -> IntegrandKind;
}

impl Integrand for TrigPolynomial {
    fn dim(&self) -> usize {
        TrigPolynomial::dim(self)
    }

    fn evaluate(&self, x: &[f64]) -> Complex64 {
        TrigPolynomial::evaluate(self, x)
    }

    fn known_integral(&self) -> Option<Complex64> {
        Some(self.integral())
    }

    fn kind(&self) -> IntegrandKind {
        IntegrandKind::TrigPolynomial
    }
}

/// Low-smoothness test functions with closed-form integrals. None of them is
/// normalised in the Korobov norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedFormIntegrand {
    /// `f = 1`.
    Constant { dim: usize },
    /// `prod_j (s + 1) |2 x_j - 1|^s`, integral 1; a kink (or cusp for
    /// `s < 1`) on the hyperplanes `x_j = 1/2`.
    Kink { dim: usize, exponent: f64 },
    /// Indicator of `x_1 < 1/2`, integral 1/2; a jump on the torus.
    Step { dim: usize },
}

impl Integrand for ClosedFormIntegrand {
    fn dim(&self) -> usize {
        match *self {
            Self::Constant { dim } | Self::Kink { dim, .. } | Self::Step { dim } => dim,
        }
    }

    fn evaluate(&self, x: &[f64]) -> Complex64 {
        let v = match *self {
            Self::Constant { .. } => 1.0,
            Self::Kink { exponent, .. } => x
                .iter()
                .map(|&xj| (exponent + 1.0) * (2.0 * xj - 1.0).abs().powf(exponent))
                .product(),
            Self::Step { .. } => f64::from(u8::from(x[0] < 0.5)),
        };
        Complex64::new(v, 0.0)
    }

    fn known_integral(&self) -> Option<Complex64> {
        let v = match self {
            Self::Constant { .. } | Self::Kink { .. } => 1.0,
            Self::Step { .. } => 0.5,
        };
        Some(Complex64::new(v, 0.0))
    }

    fn kind(&self) -> IntegrandKind {
        IntegrandKind::ClosedFormFamily
    }
}

/// A caller-supplied black box.
pub struct FnIntegrand<F> {
    dim: usize,
    func: F,
    integral: Option<Complex64>,
}

impl<F> FnIntegrand<F>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    pub fn new(dim: usize, func: F, integral: Option<Complex64>) -> Self {
        Self { dim, func, integral }
    }
}

impl<F> Integrand for FnIntegrand<F>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64]) -> Complex64 {
        (self.func)(x)
    }

    fn known_integral(&self) -> Option<Complex64> {
        self.integral
    }

    fn kind(&self) -> IntegrandKind {
        IntegrandKind::External
    }
}

/// `(1/p) sum_{k<p} f({k z / p + shift})`. Node coordinates are formed from
/// the exact integer `k z_j mod p`.
pub fn lattice_rule<F: Integrand + ?Sized>(
    f: &F,
    p: u64,
    z: &[u64],
    shift: Option<&[f64]>,
) -> Result<Complex64> {
    let d = f.dim();
    if p == 0 {
        return Err(Error::Domain("number of points must be at least 1".into()));
    }
    if z.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: z.len(),
        });
    }
    if let Some(&bad) = z.iter().find(|&&zj| zj >= p) {
        return Err(Error::Domain(format!("residue {bad} is not below p = {p}")));
    }
    if let Some(delta) = shift {
        if delta.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: delta.len(),
            });
        }
        if delta.iter().any(|&x| !(0.0..1.0).contains(&x)) {
            return Err(Error::Domain("shift components must lie in [0, 1)".into()));
        }
    }
    let pf = p as f64;
    let mut x = vec![0.0; d];
    let mut idx = vec![0u64; d];
    let mut sum = Complex64::new(0.0, 0.0);
    for _ in 0..p {
        for j in 0..d {
            let mut t = idx[j] as f64 / pf;
            if let Some(delta) = shift {
                t += delta[j];
                if t >= 1.0 {
                    t -= 1.0;
                }
            }
            x[j] = t;
        }
        sum += f.evaluate(&x);
        // idx_j = k z_j mod p, advanced exactly
        for j in 0..d {
            idx[j] += z[j];
            if idx[j] >= p {
                idx[j] -= p;
            }
        }
    }
    Ok(sum / p as f64)
}

/// The nonzero modes of `f` on the dual lattice `h.z = 0 mod p`, i.e. the
/// modes the rule does not integrate exactly.
pub fn trig_rule_error_exact(f: &TrigPolynomial, p: u64, z: &[u64]) -> Vec<(FrequencyVector, Complex64)> {
    f.coefficients()
        .iter()
        .filter(|(h, _)| !h.is_zero() && in_dual(h.as_slice(), z, p))
        .map(|(h, c)| (h.clone(), *c))
        .collect()
}

/// `h.z = 0 (mod p)`.
pub(crate) fn in_dual(h: &[i64], z: &[u64], p: u64) -> bool {
    let mut acc: u128 = 0;
    for (&hj, &zj) in h.iter().zip(z) {
        acc += signed_mod(hj, p) as u128 * zj as u128;
    }
    acc % p as u128 == 0
}

/// One realisation `(p, shift)` of the randomised rule.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomRuleDraw {
    pub p: u64,
    pub shift: Option<Vec<f64>>,
    pub seed_trace: Option<StreamId>,
}

/// Draws `p` uniformly from the band and, if requested, a shift uniformly
/// from `[0,1)^d` with 53-bit resolution.
pub fn draw<R: Rng + ?Sized>(band: &PrimeBand, rng: &mut R, with_shift: bool, d: usize) -> RandomRuleDraw {
    assert!(!band.is_empty(), "cannot draw from an empty band");
    // gen_range rejects the biased zone, so the index is exactly uniform
    let p = band.primes()[rng.gen_range(0..band.len())];
    let shift = with_shift.then(|| (0..d).map(|_| rng.gen::<f64>()).collect());
    RandomRuleDraw {
        p,
        shift,
        seed_trace: None,
    }
}

/// One randomised estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSample {
    pub draw: RandomRuleDraw,
    pub value: Complex64,
}

/// `m` independent realisations; repetition `i` uses stream `i` of `seed`.
pub fn randomized_integrate<F: Integrand + ?Sized>(
    f: &F,
    gv: &GeneratingVector,
    seed: u64,
    with_shift: bool,
    m: usize,
) -> Result<Vec<RuleSample>> {
    if m == 0 {
        return Err(Error::Domain("need at least one repetition".into()));
    }
    if f.dim() != gv.dim() {
        return Err(Error::DimensionMismatch {
            expected: gv.dim(),
            got: f.dim(),
        });
    }
    (0..m as u64)
        .into_par_iter()
        .map(|i| {
            let id = StreamId::new(seed, DOMAIN_INTEGRATE, i);
            let mut rng = id.rng();
            let mut d = draw(gv.band(), &mut rng, with_shift, f.dim());
            d.seed_trace = Some(id);
            let value = lattice_rule(f, d.p, gv.residue(d.p), d.shift.as_deref())?;
            Ok(RuleSample { draw: d, value })
        })
        .collect()
}
