//! Sparse multivariate polynomials and polynomial vector fields.
//!
//! Coefficients stay exact (`i64` rationals) as long as every input is
//! rational; any floating-point input turns the affected terms into `f64`.
//! Evaluation is always in double precision.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, ToPrimitive, Zero};
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

pub type Rational = Ratio<i64>;

/// A polynomial coefficient: exact rational or binary floating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coeff {
    Exact(Rational),
    Float(f64),
}

impl Coeff {
    pub fn int(v: i64) -> Self {
        Coeff::Exact(Rational::from_integer(v))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Coeff::Exact(Rational::new(num, den))
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Coeff::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Coeff::Float(v) => v,
        }
    }

    pub fn is_zero(self) -> bool {
        match self {
            Coeff::Exact(r) => r.is_zero(),
            Coeff::Float(v) => v == 0.0,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Coeff::Exact(_))
    }

    fn combine(
        self,
        rhs: Self,
        exact: impl Fn(Rational, Rational) -> Option<Rational>,
        float: impl Fn(f64, f64) -> f64,
    ) -> Self {
        match (self, rhs) {
            (Coeff::Exact(a), Coeff::Exact(b)) => match exact(a, b) {
                Some(r) => Coeff::Exact(r),
                // i64 overflow: degrade to floating point rather than wrap
                None => Coeff::Float(float(self.to_f64(), rhs.to_f64())),
            },
            _ => Coeff::Float(float(self.to_f64(), rhs.to_f64())),
        }
    }
}

impl Add for Coeff {
    type Output = Coeff;
    fn add(self, rhs: Self) -> Self {
        self.combine(rhs, |a, b| a.checked_add(&b), |a, b| a + b)
    }
}

impl Sub for Coeff {
    type Output = Coeff;
    fn sub(self, rhs: Self) -> Self {
        self.combine(rhs, |a, b| a.checked_sub(&b), |a, b| a - b)
    }
}

impl Mul for Coeff {
    type Output = Coeff;
    fn mul(self, rhs: Self) -> Self {
        self.combine(rhs, |a, b| a.checked_mul(&b), |a, b| a * b)
    }
}

impl Neg for Coeff {
    type Output = Coeff;
    fn neg(self) -> Self {
        match self {
            Coeff::Exact(r) => Coeff::Exact(-r),
            Coeff::Float(v) => Coeff::Float(-v),
        }
    }
}

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coeff::Exact(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Coeff::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Coeff::Float(v) => write!(f, "{v:?}"),
        }
    }
}

impl FromStr for Coeff {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let parse_int = |t: &str| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| format!("invalid rational coefficient {s:?}"))
        };
        match s.split_once('/') {
            Some((n, d)) => {
                let (n, d) = (parse_int(n)?, parse_int(d)?);
                if d == 0 {
                    return Err(format!("zero denominator in {s:?}"));
                }
                Ok(Coeff::Exact(Rational::new(n, d)))
            }
            None => Ok(Coeff::Exact(Rational::from_integer(parse_int(s)?))),
        }
    }
}

// Exact coefficients travel as strings ("-1/2"), floats as JSON numbers.
impl Serialize for Coeff {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Coeff::Exact(_) => serializer.serialize_str(&self.to_string()),
            Coeff::Float(v) => serializer.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Coeff {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        match value {
            serde_json::Value::String(s) => s.parse().map_err(de::Error::custom),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Coeff::int(i))
                } else {
                    n.as_f64()
                        .map(Coeff::Float)
                        .ok_or_else(|| de::Error::custom("coefficient out of range"))
                }
            }
            other => Err(de::Error::custom(format!(
                "expected a number or rational string, got {other}"
            ))),
        }
    }
}

/// Sparse polynomial in `nvars` variables, keyed by exponent vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Coeff>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Coeff) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// `c * x_var`.
    pub fn linear(nvars: usize, var: usize, c: Coeff) -> Self {
        let mut exps = vec![0; nvars];
        exps[var] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(exps, c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], Coeff)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn add_term(&mut self, exps: Vec<u32>, c: Coeff) {
        assert_eq!(exps.len(), self.nvars, "exponent vector length mismatch");
        if c.is_zero() {
            return;
        }
        let merged = match self.terms.get(&exps) {
            Some(old) => *old + c,
            None => c,
        };
        if merged.is_zero() {
            self.terms.remove(&exps);
        } else {
            self.terms.insert(exps, merged);
        }
    }

    pub fn scale(&self, c: Coeff) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, v) in &self.terms {
            out.add_term(e.clone(), *v * c);
        }
        out
    }

    /// Partial derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[var] -= 1;
            out.add_term(d, *c * Coeff::int(e[var] as i64));
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(x)
                    .filter(|(k, _)| **k > 0)
                    .fold(c.to_f64(), |acc, (k, xi)| acc * xi.powi(*k as i32))
            })
            .sum()
    }

    /// Value at the origin (the constant term), kept exact when possible.
    pub fn at_origin(&self) -> Coeff {
        self.terms
            .get(&vec![0; self.nvars])
            .copied()
            .unwrap_or(Coeff::int(0))
    }

    /// Exponent vectors whose `weights`-weighted degree differs from `degree`.
    pub fn off_degree_terms(&self, weights: &[u32], degree: u32) -> Vec<Vec<u32>> {
        self.terms
            .keys()
            .filter(|e| e.iter().zip(weights).map(|(k, w)| k * w).sum::<u32>() != degree)
            .cloned()
            .collect()
    }
}

impl Add<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }
}

impl Sub<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -*c);
        }
        out
    }
}

impl Mul<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, *ca * *cb);
            }
        }
        out
    }
}

/// First-order differential operator `sum_j comps[j] * d/dx_j` with
/// polynomial coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    comps: Vec<Polynomial>,
}

impl VectorField {
    pub fn zero(n: usize) -> Self {
        Self {
            comps: vec![Polynomial::zero(n); n],
        }
    }

    /// The coordinate field `d/dx_var`.
    pub fn coordinate(n: usize, var: usize) -> Self {
        let mut v = Self::zero(n);
        v.comps[var] = Polynomial::constant(n, Coeff::int(1));
        v
    }

    pub fn from_components(comps: Vec<Polynomial>) -> Self {
        let n = comps.len();
        assert!(comps.iter().all(|p| p.nvars() == n));
        Self { comps }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn component(&self, j: usize) -> &Polynomial {
        &self.comps[j]
    }

    pub fn set_component(&mut self, j: usize, p: Polynomial) {
        assert_eq!(p.nvars(), self.dim());
        self.comps[j] = p;
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Polynomial::is_zero)
    }

    /// Applies the operator to a polynomial.
    pub fn apply(&self, p: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero(self.dim());
        for (j, c) in self.comps.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let d = p.derivative(j);
            if !d.is_zero() {
                out = &out + &(c * &d);
            }
        }
        out
    }

    /// Coefficient vector at the origin, in double precision.
    pub fn at_origin(&self) -> Vec<f64> {
        self.comps.iter().map(|p| p.at_origin().to_f64()).collect()
    }
}

/// Commutator `[v, w] = v w - w v` of two polynomial vector fields.
pub fn lie_bracket(v: &VectorField, w: &VectorField) -> VectorField {
    assert_eq!(v.dim(), w.dim(), "vector fields on different spaces");
    let comps = (0..v.dim())
        .map(|j| &v.apply(w.component(j)) - &w.apply(v.component(j)))
        .collect();
    VectorField { comps }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heisenberg_fields() -> (VectorField, VectorField) {
        let mut x = VectorField::coordinate(3, 0);
        x.set_component(2, Polynomial::linear(3, 1, Coeff::ratio(-1, 2)));
        let mut y = VectorField::coordinate(3, 1);
        y.set_component(2, Polynomial::linear(3, 0, Coeff::ratio(1, 2)));
        (x, y)
    }

    #[test]
    fn heisenberg_bracket_is_central_direction() {
        let (x, y) = heisenberg_fields();
        let b = lie_bracket(&x, &y);
        assert_eq!(b, VectorField::coordinate(3, 2));
    }

    #[test]
    fn bracket_with_itself_vanishes() {
        let (x, _) = heisenberg_fields();
        assert!(lie_bracket(&x, &x).is_zero());
    }

    #[test]
    fn coordinate_fields_commute() {
        let d1 = VectorField::coordinate(2, 0);
        let d2 = VectorField::coordinate(2, 1);
        assert!(lie_bracket(&d1, &d2).is_zero());
    }

    #[test]
    fn derivative_and_eval() {
        // p = 3 x0^2 x1 - 1/2 x1
        let mut p = Polynomial::zero(2);
        p.add_term(vec![2, 1], Coeff::int(3));
        p.add_term(vec![0, 1], Coeff::ratio(-1, 2));
        assert_eq!(p.eval(&[2.0, 3.0]), 36.0 - 1.5);
        let d0 = p.derivative(0);
        assert_eq!(d0.eval(&[2.0, 3.0]), 36.0);
        let d1 = p.derivative(1);
        assert_eq!(d1.eval(&[2.0, 3.0]), 12.0 - 0.5);
    }

    #[test]
    fn cancellation_removes_terms() {
        let p = Polynomial::linear(2, 0, Coeff::ratio(1, 3));
        let q = &p - &p;
        assert!(q.is_zero());
    }

    #[test]
    fn coeff_text_roundtrip() {
        for s in ["-1/2", "3", "0", "7/9"] {
            let c: Coeff = s.parse().unwrap();
            assert_eq!(c.to_string(), s);
        }
        assert!("1/0".parse::<Coeff>().is_err());
        assert!("x".parse::<Coeff>().is_err());
    }

    #[test]
    fn float_contaminates_exact() {
        let c = Coeff::ratio(1, 2) + Coeff::Float(0.25);
        assert_eq!(c, Coeff::Float(0.75));
        assert!(!c.is_exact());
    }

    #[test]
    fn overflow_falls_back_to_float() {
        let big = Coeff::int(i64::MAX);
        let c = big * Coeff::int(4);
        assert!(!c.is_exact());
        assert!((c.to_f64() - 4.0 * i64::MAX as f64).abs() < 1e4);
    }

    #[test]
    fn weighted_degree_detection() {
        // x0 * x2 with weights [1, 1, 2] has weighted degree 3
        let mut p = Polynomial::zero(3);
        p.add_term(vec![1, 0, 1], Coeff::int(1));
        p.add_term(vec![0, 1, 0], Coeff::int(1));
        let off = p.off_degree_terms(&[1, 1, 2], 1);
        assert_eq!(off, vec![vec![1, 0, 1]]);
    }
}
