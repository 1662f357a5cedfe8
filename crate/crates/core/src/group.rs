//! Stratified groups as dilation structures on `R^n` with explicit polynomial
//! left-invariant generators
//!
//! ```text
//! X_k = d/dx'_k + sum_{l=2..r} sum_m a_{k,m}^{(l)}(x) d/dx_m^{(l)},   k = 1..N
//! ```
//!
//! where each `a_{k,m}^{(l)}` is homogeneous of dilation degree `l - 1`.
//! The group law itself is never needed; a group is fully described by its
//! strata dimensions and the generator coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{lie_bracket, Coeff, Polynomial, VectorField};

/// One monomial `value * prod_i x_i^exponents[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    pub value: Coeff,
}

/// The coefficient `a_{k,m}^{(l)}` (all indices 1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorCoeff {
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub monomials: Vec<Monomial>,
}

/// On-disk group description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupDescription {
    pub name: String,
    pub strata: Vec<usize>,
    #[serde(default)]
    pub coeffs: Vec<GeneratorCoeff>,
}

impl GroupDescription {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("group description serializes")
    }
}

#[derive(Debug, Clone)]
struct CompiledTerm {
    powers: Vec<(usize, i32)>,
    coeff: f64,
}

#[derive(Debug, Clone)]
struct CompiledPoly(Vec<CompiledTerm>);

impl CompiledPoly {
    fn new(p: &Polynomial) -> Self {
        CompiledPoly(
            p.terms()
                .map(|(e, c)| CompiledTerm {
                    powers: e
                        .iter()
                        .enumerate()
                        .filter(|(_, k)| **k > 0)
                        .map(|(i, k)| (i, *k as i32))
                        .collect(),
                    coeff: c.to_f64(),
                })
                .collect(),
        )
    }

    #[inline]
    fn eval(&self, x: &[f64]) -> f64 {
        let mut sum = 0.0;
        for t in &self.0 {
            let mut v = t.coeff;
            for &(i, k) in &t.powers {
                v *= if k == 1 { x[i] } else { x[i].powi(k) };
            }
            sum += v;
        }
        sum
    }
}

/// A stratified (homogeneous Carnot) group. Immutable once built.
#[derive(Debug, Clone)]
pub struct StratifiedGroup {
    name: String,
    strata: Vec<usize>,
    weights: Vec<u32>,
    generators: Vec<VectorField>,
    // per generator: (coordinate index, coefficient) for the non-zero upper terms
    compiled: Vec<Vec<(usize, CompiledPoly)>>,
}

impl StratifiedGroup {
    /// `(R^n, +)`: one stratum, generators are the coordinate derivatives.
    pub fn euclidean(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "euclidean dimension must be at least 1".into(),
            ));
        }
        Self::from_parts(format!("euclidean{n}"), vec![n], Vec::new())
    }

    /// Heisenberg group `H^m` with coordinates `(x_1..x_m, y_1..y_m, t)` and
    /// `X_j = d_{x_j} - (y_j/2) d_t`, `Y_j = d_{y_j} + (x_j/2) d_t`.
    pub fn heisenberg(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter(
                "Heisenberg index must be at least 1".into(),
            ));
        }
        let n = 2 * m + 1;
        let mut coeffs = Vec::with_capacity(2 * m);
        for j in 0..m {
            coeffs.push(linear_coeff(n, j + 1, m + j, Coeff::ratio(-1, 2)));
        }
        for j in 0..m {
            coeffs.push(linear_coeff(n, m + j + 1, j, Coeff::ratio(1, 2)));
        }
        Self::from_parts(format!("heisenberg{m}"), vec![2 * m, 1], coeffs)
    }

    /// `H^1 x R`: first stratum `(x_1, x_2, x_3)`, centre `t`, with `x_3`
    /// commuting with everything.
    pub fn h1xr() -> Result<Self> {
        let coeffs = vec![
            linear_coeff(4, 1, 1, Coeff::ratio(-1, 2)),
            linear_coeff(4, 2, 0, Coeff::ratio(1, 2)),
        ];
        Self::from_parts("h1xr".into(), vec![3, 1], coeffs)
    }

    /// Built-in groups by name: `euclidean{n}`, `heisenberg{m}`, `h1xr`.
    pub fn builtin(name: &str) -> Result<Self> {
        let parse = |digits: &str| {
            digits
                .parse::<usize>()
                .map_err(|_| Error::InvalidParameter(format!("unknown group {name:?}")))
        };
        if name == "h1xr" {
            Self::h1xr()
        } else if let Some(d) = name.strip_prefix("euclidean") {
            Self::euclidean(parse(d)?)
        } else if let Some(d) = name.strip_prefix("heisenberg") {
            Self::heisenberg(parse(d)?)
        } else {
            Err(Error::InvalidParameter(format!(
                "unknown group {name:?} (expected euclidean<n>, heisenberg<m> or h1xr)"
            )))
        }
    }

    /// Validates and builds a group from strata and generator coefficients.
    pub fn custom(
        name: impl Into<String>,
        strata: Vec<usize>,
        coeffs: Vec<GeneratorCoeff>,
    ) -> Result<Self> {
        Self::from_parts(name.into(), strata, coeffs)
    }

    pub fn from_description(desc: &GroupDescription) -> Result<Self> {
        Self::from_parts(desc.name.clone(), desc.strata.clone(), desc.coeffs.clone())
    }

    fn from_parts(name: String, strata: Vec<usize>, coeffs: Vec<GeneratorCoeff>) -> Result<Self> {
        if strata.is_empty() || strata.contains(&0) {
            return Err(Error::MalformedGroup(format!(
                "strata dimensions must be positive, got {strata:?}"
            )));
        }
        let n: usize = strata.iter().sum();
        let big_n = strata[0];
        let weights: Vec<u32> = strata
            .iter()
            .enumerate()
            .flat_map(|(l, &d)| std::iter::repeat_n((l + 1) as u32, d))
            .collect();
        let offsets: Vec<usize> = strata
            .iter()
            .scan(0, |acc, &d| {
                let o = *acc;
                *acc += d;
                Some(o)
            })
            .collect();

        let mut generators: Vec<VectorField> =
            (0..big_n).map(|k| VectorField::coordinate(n, k)).collect();
        let mut seen = std::collections::BTreeSet::new();
        for c in &coeffs {
            if c.k == 0 || c.k > big_n {
                return Err(Error::MalformedGroup(format!(
                    "generator index k={} outside 1..={big_n}",
                    c.k
                )));
            }
            if c.l < 2 || c.l > strata.len() {
                return Err(Error::MalformedGroup(format!(
                    "stratum index l={} outside 2..={}",
                    c.l,
                    strata.len()
                )));
            }
            if c.m == 0 || c.m > strata[c.l - 1] {
                return Err(Error::MalformedGroup(format!(
                    "component index m={} outside 1..={} for stratum {}",
                    c.m,
                    strata[c.l - 1],
                    c.l
                )));
            }
            if !seen.insert((c.k, c.l, c.m)) {
                return Err(Error::MalformedGroup(format!(
                    "duplicate coefficient entry (k={}, l={}, m={})",
                    c.k, c.l, c.m
                )));
            }
            let mut poly = Polynomial::zero(n);
            for mono in &c.monomials {
                if mono.exponents.len() != n {
                    return Err(Error::MalformedGroup(format!(
                        "monomial exponent vector has length {}, expected {n}",
                        mono.exponents.len()
                    )));
                }
                poly.add_term(mono.exponents.clone(), mono.value);
            }
            let off = poly.off_degree_terms(&weights, (c.l - 1) as u32);
            if let Some(bad) = off.first() {
                return Err(Error::HomogeneityViolation(format!(
                    "a_{{{},{}}}^({}) has monomial with exponents {bad:?}, weighted degree differs from {}",
                    c.k,
                    c.m,
                    c.l,
                    c.l - 1
                )));
            }
            generators[c.k - 1].set_component(offsets[c.l - 1] + c.m - 1, poly);
        }

        let rank = bracket_rank(&generators, strata.len());
        if rank < n {
            return Err(Error::RankDeficient { rank, dim: n });
        }

        let compiled = generators
            .iter()
            .map(|g| {
                (big_n..n)
                    .filter(|&j| !g.component(j).is_zero())
                    .map(|j| (j, CompiledPoly::new(g.component(j))))
                    .collect()
            })
            .collect();

        Ok(Self {
            name,
            strata,
            weights,
            generators,
            compiled,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn strata(&self) -> &[usize] {
        &self.strata
    }

    /// Dimension `N` of the first stratum.
    pub fn first_stratum_dim(&self) -> usize {
        self.strata[0]
    }

    /// Topological dimension `n`.
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn step(&self) -> usize {
        self.strata.len()
    }

    /// `Q = sum_k k N_k`.
    pub fn homogeneous_dimension(&self) -> usize {
        self.strata
            .iter()
            .enumerate()
            .map(|(k, d)| (k + 1) * d)
            .sum()
    }

    /// Dilation weight (stratum index) of each coordinate.
    pub fn coordinate_weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn generators(&self) -> &[VectorField] {
        &self.generators
    }

    /// Same strata and generators; names are ignored.
    pub fn same_structure(&self, other: &Self) -> bool {
        self.strata == other.strata && self.generators == other.generators
    }

    /// `delta_lambda(x)`: stratum `k` scaled by `lambda^k`.
    pub fn dilate(&self, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "dilation factor must be positive, got {lambda}"
            )));
        }
        self.check_point(x)?;
        Ok(x.iter()
            .zip(&self.weights)
            .map(|(xi, w)| xi * lambda.powi(*w as i32))
            .collect())
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::InvalidParameter(format!(
                "point has {} coordinates, group dimension is {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `(X_1 f, .., X_N f)` from the full Euclidean gradient of `f` at `x`.
    #[inline]
    pub fn horizontal_from_partials(&self, x: &[f64], partials: &[f64], out: &mut [f64]) {
        for (k, (o, upper)) in out.iter_mut().zip(&self.compiled).enumerate() {
            let mut v = partials[k];
            for (j, p) in upper {
                v += p.eval(x) * partials[*j];
            }
            *o = v;
        }
    }

    /// Row-major `N x n` matrix of generator coefficients at `x`.
    pub fn frame(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut m = vec![0.0; self.first_stratum_dim() * n];
        for (k, upper) in self.compiled.iter().enumerate() {
            m[k * n + k] = 1.0;
            for (j, p) in upper {
                m[k * n + j] = p.eval(x);
            }
        }
        m
    }

    /// Canonical description (sorted entries, merged monomials).
    pub fn description(&self) -> GroupDescription {
        let big_n = self.first_stratum_dim();
        let mut coeffs = Vec::new();
        for (k, g) in self.generators.iter().enumerate() {
            let mut offset = big_n;
            for (l, &dim_l) in self.strata.iter().enumerate().skip(1) {
                for m in 0..dim_l {
                    let p = g.component(offset + m);
                    if p.is_zero() {
                        continue;
                    }
                    coeffs.push(GeneratorCoeff {
                        k: k + 1,
                        l: l + 1,
                        m: m + 1,
                        monomials: p
                            .terms()
                            .map(|(e, c)| Monomial {
                                exponents: e.to_vec(),
                                value: c,
                            })
                            .collect(),
                    });
                }
                offset += dim_l;
            }
        }
        GroupDescription {
            name: self.name.clone(),
            strata: self.strata.clone(),
            coeffs,
        }
    }
}

fn linear_coeff(n: usize, k: usize, var: usize, c: Coeff) -> GeneratorCoeff {
    let mut exponents = vec![0; n];
    exponents[var] = 1;
    GeneratorCoeff {
        k,
        l: 2,
        m: 1,
        monomials: vec![Monomial {
            exponents,
            value: c,
        }],
    }
}

/// Rank at the origin of all iterated brackets of length <= `max_len`.
fn bracket_rank(generators: &[VectorField], max_len: usize) -> usize {
    let mut vectors: Vec<Vec<f64>> = generators.iter().map(VectorField::at_origin).collect();
    let mut layer: Vec<VectorField> = generators.to_vec();
    for _ in 1..max_len {
        let mut next = Vec::new();
        for x in generators {
            for b in &layer {
                let c = lie_bracket(x, b);
                if !c.is_zero() {
                    vectors.push(c.at_origin());
                    next.push(c);
                }
            }
        }
        layer = next;
    }
    matrix_rank(vectors)
}

fn matrix_rank(mut rows: Vec<Vec<f64>>) -> usize {
    let Some(cols) = rows.first().map(Vec::len) else {
        return 0;
    };
    let scale = rows
        .iter()
        .flatten()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let tol = 1e-10 * scale;
    let mut rank = 0;
    for col in 0..cols {
        let pivot = (rank..rows.len())
            .max_by(|&a, &b| rows[a][col].abs().partial_cmp(&rows[b][col].abs()).unwrap());
        let Some(p) = pivot else { break };
        if rows[p][col].abs() <= tol {
            continue;
        }
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank {
                let f = row[col] / pivot[col];
                if f != 0.0 {
                    for (x, y) in row[col..cols].iter_mut().zip(&pivot[col..cols]) {
                        *x -= f * y;
                    }
                }
            }
        }
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_basics() {
        let g = StratifiedGroup::euclidean(3).unwrap();
        assert_eq!(g.first_stratum_dim(), 3);
        assert_eq!(g.homogeneous_dimension(), 3);
        assert_eq!(g.step(), 1);
        let g1 = StratifiedGroup::euclidean(1).unwrap();
        assert_eq!((g1.first_stratum_dim(), g1.homogeneous_dimension()), (1, 1));
        assert!(StratifiedGroup::euclidean(0).is_err());
    }

    #[test]
    fn euclidean_dilation_is_linear() {
        let g = StratifiedGroup::euclidean(2).unwrap();
        assert_eq!(g.dilate(3.0, &[1.0, -2.0]).unwrap(), vec![3.0, -6.0]);
    }

    #[test]
    fn heisenberg_dimensions() {
        let h1 = StratifiedGroup::heisenberg(1).unwrap();
        assert_eq!(
            (h1.first_stratum_dim(), h1.dim(), h1.homogeneous_dimension()),
            (2, 3, 4)
        );
        let h2 = StratifiedGroup::heisenberg(2).unwrap();
        assert_eq!(
            (h2.first_stratum_dim(), h2.dim(), h2.homogeneous_dimension()),
            (4, 5, 6)
        );
        assert!(StratifiedGroup::heisenberg(0).is_err());
    }

    #[test]
    fn heisenberg_bracket_gives_central_field() {
        let h1 = StratifiedGroup::heisenberg(1).unwrap();
        let b = lie_bracket(&h1.generators()[0], &h1.generators()[1]);
        assert_eq!(b, VectorField::coordinate(3, 2));
    }

    #[test]
    fn dilation_scales_by_stratum() {
        let h1 = StratifiedGroup::heisenberg(1).unwrap();
        assert_eq!(
            h1.dilate(2.0, &[1.0, 1.0, 1.0]).unwrap(),
            vec![2.0, 2.0, 4.0]
        );
        assert_eq!(
            h1.dilate(1.0, &[0.3, -0.7, 5.0]).unwrap(),
            vec![0.3, -0.7, 5.0]
        );
        assert!(h1.dilate(0.0, &[1.0, 1.0, 1.0]).is_err());
        assert!(h1.dilate(-1.0, &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn custom_heisenberg_matches_builtin() {
        let desc = StratifiedGroup::heisenberg(1).unwrap().description();
        let g = StratifiedGroup::custom("mine", vec![2, 1], desc.coeffs).unwrap();
        assert!(g.same_structure(&StratifiedGroup::heisenberg(1).unwrap()));
    }

    #[test]
    fn h1_times_r_is_accepted() {
        let g = StratifiedGroup::h1xr().unwrap();
        assert_eq!(g.first_stratum_dim(), 3);
        assert_eq!(g.homogeneous_dimension(), 5);
    }

    #[test]
    fn abelian_coefficients_are_rank_deficient() {
        let err = StratifiedGroup::custom("flat", vec![2, 1], Vec::new()).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { rank: 2, dim: 3 }));
    }

    #[test]
    fn wrong_weighted_degree_is_rejected() {
        // a_{1,1}^{(2)} = x_1 x_2 has weighted degree 2, needs 1
        let bad = GeneratorCoeff {
            k: 1,
            l: 2,
            m: 1,
            monomials: vec![Monomial {
                exponents: vec![1, 1, 0],
                value: Coeff::int(1),
            }],
        };
        let err = StratifiedGroup::custom("bad", vec![2, 1], vec![bad]).unwrap_err();
        assert!(matches!(err, Error::HomogeneityViolation(_)));
    }

    #[test]
    fn malformed_indices_are_rejected() {
        let mut c = linear_coeff(3, 1, 1, Coeff::int(1));
        c.k = 3;
        assert!(matches!(
            StratifiedGroup::custom("x", vec![2, 1], vec![c]),
            Err(Error::MalformedGroup(_))
        ));
        assert!(StratifiedGroup::custom("x", vec![], vec![]).is_err());
        assert!(StratifiedGroup::custom("x", vec![2, 0], vec![]).is_err());
    }

    #[test]
    fn builtin_names() {
        for name in [
            "euclidean2",
            "euclidean3",
            "heisenberg1",
            "heisenberg2",
            "h1xr",
        ] {
            assert_eq!(StratifiedGroup::builtin(name).unwrap().name(), name);
        }
        assert!(StratifiedGroup::builtin("engel").is_err());
        assert!(StratifiedGroup::builtin("euclideanx").is_err());
    }

    #[test]
    fn frame_matches_generator_formula() {
        let h1 = StratifiedGroup::heisenberg(1).unwrap();
        let f = h1.frame(&[0.4, -1.0, 3.0]);
        assert_eq!(f, vec![1.0, 0.0, 0.5, 0.0, 1.0, 0.2]);
    }

    #[test]
    fn engel_like_step_three_group() {
        // strata [2,1,1]: X1 = d1, X2 = d2 + x1 d3 + (x1^2/2) d4
        let coeffs = vec![
            linear_coeff(4, 2, 0, Coeff::int(1)),
            GeneratorCoeff {
                k: 2,
                l: 3,
                m: 1,
                monomials: vec![Monomial {
                    exponents: vec![2, 0, 0, 0],
                    value: Coeff::ratio(1, 2),
                }],
            },
        ];
        let g = StratifiedGroup::custom("engel", vec![2, 1, 1], coeffs).unwrap();
        assert_eq!(g.homogeneous_dimension(), 7);
        assert_eq!(g.step(), 3);
    }
}
