//! Weighted Korobov spaces: weights, the decay function `r`, norms of
//! trigonometric polynomials and the `mu` series.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::{zeta, zeta_partial, zeta_tail_bound};

// explicit weights are summed over all subsets of the coordinates
const MAX_SUBSET_DIM: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    Product,
    Explicit,
}

/// Coordinate weights `gamma_u`.
///
/// Product weights store `gamma_1, gamma_2, ...`; coordinates beyond the
/// listed ones reuse the last value. Explicit weights override `gamma_u` on a
/// finite list of subsets and fall back to the product rule everywhere else.
/// The empty set always carries weight 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightScheme {
    kind: WeightKind,
    product: Vec<f64>,
    explicit: BTreeMap<Vec<usize>, f64>,
}

impl WeightScheme {
    pub fn product(gammas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::Domain("product weights need at least one value".into()));
        }
        check_positive(&gammas)?;
        Ok(Self {
            kind: WeightKind::Product,
            product: gammas,
            explicit: BTreeMap::new(),
        })
    }

    /// Unit weights in every coordinate.
    pub fn unit() -> Self {
        Self {
            kind: WeightKind::Product,
            product: vec![1.0],
            explicit: BTreeMap::new(),
        }
    }

    /// Explicit subset weights. Subsets are 0-based coordinate indices; the
    /// `fallback` product sequence covers subsets that are not listed.
    pub fn explicit(fallback: Vec<f64>, subsets: BTreeMap<Vec<usize>, f64>) -> Result<Self> {
        check_positive(&fallback)?;
        let mut normalised = BTreeMap::new();
        for (mut u, g) in subsets {
            if !(g > 0.0) || !g.is_finite() {
                return Err(Error::Domain(format!("weight for subset {u:?} must be positive")));
            }
            u.sort_unstable();
            u.dedup();
            if u.is_empty() {
                return Err(Error::Domain("the empty set has fixed weight 1".into()));
            }
            normalised.insert(u, g);
        }
        Ok(Self {
            kind: WeightKind::Explicit,
            product: fallback,
            explicit: normalised,
        })
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn is_product(&self) -> bool {
        self.kind == WeightKind::Product
    }

    /// `gamma_j` for a 0-based coordinate under the product rule.
    pub fn coordinate(&self, j: usize) -> f64 {
        match self.product.as_slice() {
            [] => 1.0,
            list => list[j.min(list.len() - 1)],
        }
    }

    /// `gamma_u` for a sorted subset of 0-based coordinates.
    pub fn subset(&self, u: &[usize]) -> f64 {
        if u.is_empty() {
            return 1.0;
        }
        if let Some(&g) = self.explicit.get(u) {
            return g;
        }
        u.iter().map(|&j| self.coordinate(j)).product()
    }

    pub fn product_values(&self) -> &[f64] {
        &self.product
    }

    pub fn explicit_values(&self) -> &BTreeMap<Vec<usize>, f64> {
        &self.explicit
    }
}

fn check_positive(values: &[f64]) -> Result<()> {
    if let Some(g) = values.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
        return Err(Error::Domain(format!("weights must be positive, got {g}")));
    }
    Ok(())
}

/// Integer frequency vector `h`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrequencyVector(pub Vec<i64>);

impl FrequencyVector {
    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn support(&self) -> Vec<usize> {
        support(&self.0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&h| h == 0)
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }
}

impl From<Vec<i64>> for FrequencyVector {
    fn from(v: Vec<i64>) -> Self {
        Self(v)
    }
}

impl fmt::Display for FrequencyVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, h) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{h}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn support(h: &[i64]) -> Vec<usize> {
    h.iter()
        .enumerate()
        .filter(|(_, &x)| x != 0)
        .map(|(j, _)| j)
        .collect()
}

/// A trigonometric polynomial stored by its Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    dim: usize,
    coefficients: BTreeMap<FrequencyVector, Complex64>,
}

impl TrigPolynomial {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            coefficients: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, value: Complex64) -> Self {
        let mut f = Self::new(dim);
        f.coefficients.insert(FrequencyVector::zero(dim), value);
        f
    }

    /// `e^{2 pi i h.x}` scaled by `coefficient`.
    pub fn single_mode(h: FrequencyVector, coefficient: Complex64) -> Self {
        let mut f = Self::new(h.dim());
        f.coefficients.insert(h, coefficient);
        f
    }

    /// Adds `coefficient` to the mode `h`.
    pub fn add_mode(&mut self, h: FrequencyVector, coefficient: Complex64) -> Result<()> {
        if h.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: h.dim(),
            });
        }
        *self.coefficients.entry(h).or_insert(Complex64::new(0.0, 0.0)) += coefficient;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coefficients(&self) -> &BTreeMap<FrequencyVector, Complex64> {
        &self.coefficients
    }

    pub fn coefficient(&self, h: &FrequencyVector) -> Complex64 {
        self.coefficients
            .get(h)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Exact integral over the unit cube, the zero-mode coefficient.
    pub fn integral(&self) -> Complex64 {
        self.coefficient(&FrequencyVector::zero(self.dim))
    }

    pub fn evaluate(&self, x: &[f64]) -> Complex64 {
        debug_assert_eq!(x.len(), self.dim);
        self.coefficients
            .iter()
            .map(|(h, c)| {
                let phase: f64 = h.0.iter().zip(x).map(|(&hj, &xj)| hj as f64 * xj).sum();
                c * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase)
            })
            .sum()
    }
}

/// How `mu_value` evaluates the series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuMode {
    ClosedForm,
    /// Sum over the box `|h_j| <= H`.
    Truncated(u64),
}

/// A `mu` evaluation with a one-sided bound on what was left out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuValue {
    pub value: f64,
    /// Zero for the closed form.
    pub tail_bound: f64,
}

/// Weighted Korobov space with smoothness `alpha` in `dimension` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct KorobovSpace {
    alpha: f64,
    dimension: usize,
    weights: WeightScheme,
}

impl KorobovSpace {
    pub fn new(alpha: f64, dimension: usize, weights: WeightScheme) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        if dimension == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        if weights.kind() == WeightKind::Explicit {
            if let Some(u) = weights
                .explicit_values()
                .keys()
                .find(|u| u.iter().any(|&j| j >= dimension))
            {
                return Err(Error::Domain(format!(
                    "explicit weight subset {u:?} exceeds dimension {dimension}"
                )));
            }
        }
        Ok(Self {
            alpha,
            dimension,
            weights,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dimension
    }

    pub fn weights(&self) -> &WeightScheme {
        &self.weights
    }

    /// The same space with every nonempty-subset weight multiplied by `c`.
    pub fn scaled_weights(&self, c: f64) -> Result<Self> {
        let weights = match self.weights.kind() {
            WeightKind::Product if self.dimension == 1 => {
                WeightScheme::product(vec![self.weights.coordinate(0) * c])?
            }
            _ => {
                let mut subsets = BTreeMap::new();
                for mask in 1u64..(1 << self.dimension) {
                    let u = mask_to_subset(mask, self.dimension);
                    let g = self.weights.subset(&u) * c;
                    subsets.insert(u, g);
                }
                WeightScheme::explicit(self.weights.product_values().to_vec(), subsets)?
            }
        };
        Self::new(self.alpha, self.dimension, weights)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got,
            });
        }
        Ok(())
    }

    /// `r(h) = gamma_{supp h}^{-1} prod_{j in supp h} |h_j|^alpha`.
    pub fn r_value(&self, h: &FrequencyVector) -> Result<f64> {
        self.check_dim(h.dim())?;
        Ok(self.r_raw(h.as_slice()))
    }

    /// `r` without the dimension check; `h.len()` must equal the dimension.
    pub(crate) fn r_raw(&self, h: &[i64]) -> f64 {
        match self.weights.kind() {
            WeightKind::Product => h
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0)
                .map(|(j, &x)| (x.unsigned_abs() as f64).powf(self.alpha) / self.weights.coordinate(j))
                .product(),
            WeightKind::Explicit => {
                let u = support(h);
                let prod: f64 = u
                    .iter()
                    .map(|&j| (h[j].unsigned_abs() as f64).powf(self.alpha))
                    .product();
                prod / self.weights.subset(&u)
            }
        }
    }

    /// `gamma_j^{1/lambda}` per coordinate; product weights only.
    pub fn coordinate_weight_powers(&self, lambda: f64) -> Result<Vec<f64>> {
        if !self.weights.is_product() {
            return Err(Error::RequiresProductWeights);
        }
        Ok((0..self.dimension)
            .map(|j| self.weights.coordinate(j).powf(1.0 / lambda))
            .collect())
    }

    /// `sum_{u != {}} gamma_u^{1/lambda} c^{|u|}` over subsets of the coordinates.
    pub(crate) fn subset_series(&self, lambda: f64, per_coordinate: f64) -> Result<f64> {
        match self.weights.kind() {
            WeightKind::Product => {
                let prod: f64 = (0..self.dimension)
                    .map(|j| 1.0 + self.weights.coordinate(j).powf(1.0 / lambda) * per_coordinate)
                    .product();
                Ok(prod - 1.0)
            }
            WeightKind::Explicit => {
                if self.dimension > MAX_SUBSET_DIM {
                    return Err(Error::Domain(format!(
                        "explicit weights support at most {MAX_SUBSET_DIM} coordinates"
                    )));
                }
                let mut total = 0.0;
                for mask in 1u64..(1 << self.dimension) {
                    let u = mask_to_subset(mask, self.dimension);
                    total += self.weights.subset(&u).powf(1.0 / lambda)
                        * per_coordinate.powi(u.len() as i32);
                }
                Ok(total)
            }
        }
    }

    fn check_lambda(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0 && lambda < self.alpha) {
            return Err(Error::Domain(format!(
                "lambda must lie in (0, alpha = {}), got {lambda}",
                self.alpha
            )));
        }
        let beta = self.alpha / lambda;
        if beta <= 1.0 {
            return Err(Error::Divergent { beta });
        }
        Ok(beta)
    }

    /// `mu = sum_{h != 0} r(h)^{-1/lambda}`.
    pub fn mu_value(&self, lambda: f64, mode: MuMode) -> Result<MuValue> {
        let beta = self.check_lambda(lambda)?;
        match mode {
            MuMode::ClosedForm => Ok(MuValue {
                value: self.subset_series(lambda, 2.0 * zeta(beta))?,
                tail_bound: 0.0,
            }),
            MuMode::Truncated(limit) => {
                if limit < 1 {
                    return Err(Error::Domain("truncation radius must be at least 1".into()));
                }
                let partial = zeta_partial(beta, limit);
                let tail = zeta_tail_bound(beta, limit);
                let value = self.subset_series(lambda, 2.0 * partial)?;
                let upper = self.subset_series(lambda, 2.0 * (partial + tail))?;
                Ok(MuValue {
                    value,
                    tail_bound: upper - value,
                })
            }
        }
    }

    /// `||f||^2 = sum_h |f^(h)|^2 r(h)^2`.
    pub fn norm_squared(&self, f: &TrigPolynomial) -> Result<f64> {
        self.check_dim(f.dim())?;
        Ok(f.coefficients()
            .iter()
            .map(|(h, c)| c.norm_sqr() * self.r_raw(h.as_slice()).powi(2))
            .sum())
    }

    /// `max_{u != {}} gamma_u`, the largest value `1/r` can take on a
    /// frequency whose nonzero components all have magnitude one.
    pub fn max_nonempty_weight(&self) -> f64 {
        match self.weights.kind() {
            WeightKind::Product => {
                let gs: Vec<f64> = (0..self.dimension).map(|j| self.weights.coordinate(j)).collect();
                let boost: f64 = gs.iter().map(|g| g.max(1.0)).product();
                gs.iter()
                    .map(|&g| g * boost / g.max(1.0))
                    .fold(f64::MIN, f64::max)
            }
            WeightKind::Explicit => (1u64..(1 << self.dimension.min(MAX_SUBSET_DIM)))
                .map(|mask| self.weights.subset(&mask_to_subset(mask, self.dimension)))
                .fold(f64::MIN, f64::max),
        }
    }
}

pub(crate) fn mask_to_subset(mask: u64, d: usize) -> Vec<usize> {
    (0..d).filter(|j| mask >> j & 1 == 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit(alpha: f64, d: usize) -> KorobovSpace {
        KorobovSpace::new(alpha, d, WeightScheme::unit()).unwrap()
    }

    #[test]
    fn r_of_zero_is_one() {
        let s = KorobovSpace::new(0.3, 3, WeightScheme::product(vec![0.2, 5.0]).unwrap()).unwrap();
        assert_eq!(s.r_value(&FrequencyVector::zero(3)).unwrap(), 1.0);
    }

    #[test]
    fn r_examples() {
        let s = unit(0.5, 1);
        let r = s.r_value(&vec![3].into()).unwrap();
        assert!((r - 3f64.sqrt()).abs() < 1e-15);

        let s = KorobovSpace::new(1.0, 2, WeightScheme::product(vec![0.5]).unwrap()).unwrap();
        assert_eq!(s.r_value(&vec![2, -4].into()).unwrap(), 32.0);
    }

    #[test]
    fn r_dimension_mismatch() {
        let s = unit(0.5, 2);
        assert!(matches!(
            s.r_value(&vec![1].into()),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn explicit_weights_override_and_fall_back() {
        let mut subsets = BTreeMap::new();
        subsets.insert(vec![0, 1], 0.3);
        let w = WeightScheme::explicit(vec![0.5], subsets).unwrap();
        assert_eq!(w.subset(&[0, 1]), 0.3);
        assert_eq!(w.subset(&[1]), 0.5);
        assert_eq!(w.subset(&[]), 1.0);
        let s = KorobovSpace::new(1.0, 2, w).unwrap();
        assert!((s.r_value(&vec![2, 3].into()).unwrap() - 6.0 / 0.3).abs() < 1e-12);
    }

    #[test]
    fn invalid_spaces_are_rejected() {
        assert!(KorobovSpace::new(0.0, 1, WeightScheme::unit()).is_err());
        assert!(KorobovSpace::new(0.5, 0, WeightScheme::unit()).is_err());
        assert!(WeightScheme::product(vec![1.0, -0.1]).is_err());
        assert!(WeightScheme::product(vec![]).is_err());
    }

    #[test]
    fn mu_closed_form_examples() {
        let s = unit(0.5, 1);
        let mu = s.mu_value(0.25, MuMode::ClosedForm).unwrap();
        assert!((mu.value - PI * PI / 3.0).abs() < 1e-14);

        let s = unit(0.5, 2);
        let mu = s.mu_value(0.25, MuMode::ClosedForm).unwrap().value;
        assert!((mu - ((1.0 + PI * PI / 3.0).powi(2) - 1.0)).abs() < 1e-12);
        assert!((mu - 17.402_968_604_504_29).abs() < 1e-11);
    }

    #[test]
    fn mu_truncated_brackets_closed_form() {
        let s = unit(0.5, 1);
        let t = s.mu_value(0.25, MuMode::Truncated(1_000_000)).unwrap();
        let c = s.mu_value(0.25, MuMode::ClosedForm).unwrap().value;
        assert!(t.value <= c && c <= t.value + t.tail_bound);
        assert!((t.value - c).abs() < 3e-6);
    }

    #[test]
    fn mu_truncated_vanishes_with_weights() {
        let s = KorobovSpace::new(0.5, 2, WeightScheme::product(vec![1e-30]).unwrap()).unwrap();
        let t = s.mu_value(0.25, MuMode::Truncated(10)).unwrap();
        assert!(t.value < 1e-100);
    }

    #[test]
    fn mu_domain_errors() {
        let s = unit(0.5, 1);
        assert!(matches!(s.mu_value(0.5, MuMode::ClosedForm), Err(Error::Domain(_))));
        assert!(matches!(s.mu_value(-0.1, MuMode::ClosedForm), Err(Error::Domain(_))));
        assert!(s.mu_value(0.25, MuMode::Truncated(0)).is_err());
    }

    #[test]
    fn explicit_mu_matches_product_when_equivalent() {
        let mut subsets = BTreeMap::new();
        subsets.insert(vec![0, 1], 0.5 * 0.25);
        let e = KorobovSpace::new(0.5, 2, WeightScheme::explicit(vec![0.5, 0.25], subsets).unwrap()).unwrap();
        let p = KorobovSpace::new(0.5, 2, WeightScheme::product(vec![0.5, 0.25]).unwrap()).unwrap();
        let a = e.mu_value(0.25, MuMode::ClosedForm).unwrap().value;
        let b = p.mu_value(0.25, MuMode::ClosedForm).unwrap().value;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn norm_examples() {
        let s = unit(0.5, 1);
        let one = TrigPolynomial::constant(1, Complex64::new(1.0, 0.0));
        assert_eq!(s.norm_squared(&one).unwrap(), 1.0);
        let f = TrigPolynomial::single_mode(vec![3].into(), Complex64::new(1.0, 0.0));
        assert!((s.norm_squared(&f).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn trig_polynomial_evaluation() {
        let mut f = TrigPolynomial::new(2);
        f.add_mode(vec![1, 0].into(), Complex64::new(1.0, 0.0)).unwrap();
        f.add_mode(vec![0, 0].into(), Complex64::new(2.0, 0.0)).unwrap();
        let v = f.evaluate(&[0.25, 0.7]);
        assert!((v - Complex64::new(2.0, 1.0)).norm() < 1e-15);
        assert!(f.add_mode(vec![1].into(), Complex64::new(1.0, 0.0)).is_err());
        assert_eq!(f.integral(), Complex64::new(2.0, 0.0));
    }

    #[test]
    fn max_nonempty_weight_cases() {
        let s = KorobovSpace::new(0.5, 2, WeightScheme::product(vec![1.0, 0.25]).unwrap()).unwrap();
        assert_eq!(s.max_nonempty_weight(), 1.0);
        let s = KorobovSpace::new(0.5, 2, WeightScheme::product(vec![2.0, 3.0]).unwrap()).unwrap();
        assert_eq!(s.max_nonempty_weight(), 6.0);
    }

    #[test]
    fn scaled_weights_scale_r() {
        let s = KorobovSpace::new(0.5, 2, WeightScheme::product(vec![1.0, 0.25]).unwrap()).unwrap();
        let t = s.scaled_weights(3.0).unwrap();
        for h in [vec![1, 0], vec![0, 5], vec![-2, 7]] {
            let h = FrequencyVector(h);
            let ratio = s.r_value(&h).unwrap() / t.r_value(&h).unwrap();
            assert!((ratio - 3.0).abs() < 1e-12);
        }
        assert_eq!(t.r_value(&FrequencyVector::zero(2)).unwrap(), 1.0);
    }
}
