//! Column-stochastic channels, distributions and mixed-radix indexing.
//!
//! Orientation is fixed throughout the crate: rows index the codomain,
//! columns index the domain, and every column sums to one. Products of
//! finite sets are flattened with the first factor most significant, which
//! is also the index layout produced by [`StochasticChannel::tensor`].

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("cannot compose: outer channel expects domain arity {expected}, inner channel has codomain arity {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("channel must have at least one row and one column")]
    Empty,
    #[error("row {row} has {found} entries, expected {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("{0}")]
    NotStochastic(StochasticViolation),
    #[error("distribution has arity {found}, expected {expected}")]
    DistributionArity { expected: usize, found: usize },
    #[error("product of arities overflows the index space")]
    Overflow,
}

/// A single failed stochasticity condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StochasticViolation {
    NegativeEntry { row: usize, col: usize, value: f64 },
    ColumnSum { col: usize, sum: f64 },
}

impl std::fmt::Display for StochasticViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StochasticViolation::NegativeEntry { row, col, value } => {
                write!(f, "entry ({row}, {col}) is negative ({})", fmt_num(*value))
            }
            StochasticViolation::ColumnSum { col, sum } => {
                write!(f, "column {col} sums to {}", fmt_num(*sum))
            }
        }
    }
}

/// Short human rendering of a probability: six decimals, trailing zeros
/// trimmed; nonzero values below `5e-7` in scientific notation.
pub fn fmt_num(x: f64) -> String {
    if x != 0.0 && x.abs() < 5e-7 {
        return format!("{x:.2e}");
    }
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

/// A morphism of the category of finite sets and stochastic matrices.
///
/// The matrix is stored as-is; constructors that come from untrusted input
/// ([`StochasticChannel::from_matrix`]) do not check stochasticity, use
/// [`StochasticChannel::violations`] for that.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticChannel {
    matrix: DMatrix<f64>,
}

impl StochasticChannel {
    /// Wraps a matrix without checking stochasticity.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    /// Builds a channel from row-major rows (each row is one codomain value)
    /// and checks it against `tol`.
    pub fn new(rows: &[Vec<f64>], tol: f64) -> Result<Self, ChannelError> {
        let ch = Self::from_rows(rows)?;
        if let Some(v) = ch.violations(tol).into_iter().next() {
            return Err(ChannelError::NotStochastic(v));
        }
        Ok(ch)
    }

    /// Builds a channel from row-major rows, checking only shape and finiteness.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ChannelError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if nrows == 0 || ncols == 0 {
            return Err(ChannelError::Empty);
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(ChannelError::Ragged { row: r, expected: ncols, found: row.len() });
            }
            if let Some(c) = row.iter().position(|x| !x.is_finite()) {
                return Err(ChannelError::NonFinite { row: r, col: c });
            }
        }
        Ok(Self { matrix: DMatrix::from_fn(nrows, ncols, |r, c| rows[r][c]) })
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: DMatrix::identity(n, n) }
    }

    /// The 1×1 channel `[1]`, unit of the tensor product.
    pub fn unit() -> Self {
        Self::identity(1)
    }

    /// A 1-column channel (a state) carrying `dist`.
    pub fn from_distribution(dist: &Distribution) -> Self {
        Self { matrix: DMatrix::from_column_slice(dist.arity(), 1, dist.weights()) }
    }

    /// The 1×n channel that discards its input.
    pub fn discard(n: usize) -> Self {
        Self { matrix: DMatrix::from_element(1, n, 1.0) }
    }

    pub fn domain_arity(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn codomain_arity(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix[(row, col)]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        self.matrix.column(col).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.matrix.nrows())
            .map(|r| self.matrix.row(r).iter().copied().collect())
            .collect()
    }

    /// Every entry below `-tol` and every column whose sum is off by more than `tol`.
    pub fn violations(&self, tol: f64) -> Vec<StochasticViolation> {
        let mut out = Vec::new();
        for c in 0..self.matrix.ncols() {
            let col = self.matrix.column(c);
            for (r, &v) in col.iter().enumerate() {
                if v < -tol || !v.is_finite() {
                    out.push(StochasticViolation::NegativeEntry { row: r, col: c, value: v });
                }
            }
            let sum: f64 = col.iter().sum();
            if !((sum - 1.0).abs() <= tol) {
                out.push(StochasticViolation::ColumnSum { col: c, sum });
            }
        }
        out
    }

    pub fn is_stochastic(&self, tol: f64) -> bool {
        self.violations(tol).is_empty()
    }

    /// `self ∘ inner`: first apply `inner`, then `self`.
    pub fn compose(&self, inner: &StochasticChannel) -> Result<StochasticChannel, ChannelError> {
        if self.domain_arity() != inner.codomain_arity() {
            return Err(ChannelError::ArityMismatch {
                expected: self.domain_arity(),
                found: inner.codomain_arity(),
            });
        }
        Ok(Self { matrix: &self.matrix * &inner.matrix })
    }

    /// Kronecker product, `self` as the most significant factor.
    pub fn tensor(&self, other: &StochasticChannel) -> StochasticChannel {
        Self { matrix: self.matrix.kronecker(&other.matrix) }
    }

    /// Applies the channel to a distribution over its domain.
    pub fn push(&self, dist: &Distribution) -> Result<Distribution, ChannelError> {
        if dist.arity() != self.domain_arity() {
            return Err(ChannelError::DistributionArity {
                expected: self.domain_arity(),
                found: dist.arity(),
            });
        }
        let v = &self.matrix * nalgebra::DVector::from_column_slice(dist.weights());
        Ok(Distribution::from_weights(v.iter().copied().collect()))
    }

    /// Largest absolute entrywise difference; `None` when shapes differ.
    pub fn max_abs_diff(&self, other: &StochasticChannel) -> Option<f64> {
        if self.matrix.shape() != other.matrix.shape() {
            return None;
        }
        Some(
            self.matrix
                .iter()
                .zip(other.matrix.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    /// True when square and every row and column holds exactly one entry
    /// `>= 1 - tol` with all others `<= tol`.
    pub fn is_permutation(&self, tol: f64) -> bool {
        let n = self.matrix.nrows();
        if n != self.matrix.ncols() {
            return false;
        }
        let mut row_hits = vec![0usize; n];
        let mut col_hits = vec![0usize; n];
        for r in 0..n {
            for c in 0..n {
                let v = self.matrix[(r, c)];
                if v >= 1.0 - tol {
                    row_hits[r] += 1;
                    col_hits[c] += 1;
                } else if v.abs() > tol {
                    return false;
                }
            }
        }
        row_hits.iter().chain(&col_hits).all(|&h| h == 1)
    }
}

/// A finite probability distribution, indexed like the values of a variable
/// (or a product of variables under [`IndexScheme`]).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    /// Wraps weights without checking normalization.
    pub fn from_weights(weights: Vec<f64>) -> Self {
        Self { weights }
    }

    pub fn new(weights: Vec<f64>, tol: f64) -> Result<Self, ChannelError> {
        let d = Self { weights };
        if let Some(v) = d.violations(tol).into_iter().next() {
            return Err(ChannelError::NotStochastic(v));
        }
        Ok(d)
    }

    pub fn point_mass(arity: usize, index: usize) -> Self {
        let mut weights = vec![0.0; arity];
        weights[index] = 1.0;
        Self { weights }
    }

    pub fn uniform(arity: usize) -> Self {
        Self { weights: vec![1.0 / arity as f64; arity] }
    }

    pub fn arity(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn violations(&self, tol: f64) -> Vec<StochasticViolation> {
        if self.weights.is_empty() {
            return vec![StochasticViolation::ColumnSum { col: 0, sum: 0.0 }];
        }
        StochasticChannel::from_distribution(self).violations(tol)
    }

    /// Product distribution, `self` most significant.
    pub fn tensor(&self, other: &Distribution) -> Distribution {
        let mut weights = Vec::with_capacity(self.arity() * other.arity());
        for a in &self.weights {
            for b in &other.weights {
                weights.push(a * b);
            }
        }
        Self { weights }
    }

    pub fn max_abs_diff(&self, other: &Distribution) -> Option<f64> {
        (self.arity() == other.arity()).then(|| {
            self.weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
    }
}

/// Mixed-radix flattening of a product of finite sets, first factor most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexScheme {
    arities: Vec<usize>,
    size: usize,
}

impl IndexScheme {
    pub fn new(arities: Vec<usize>) -> Result<Self, ChannelError> {
        let size = arities
            .iter()
            .try_fold(1usize, |acc, &a| acc.checked_mul(a))
            .ok_or(ChannelError::Overflow)?;
        Ok(Self { arities, size })
    }

    pub fn arities(&self) -> &[usize] {
        &self.arities
    }

    /// Number of flattened states; 1 for the empty product.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn encode(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.arities.len());
        digits
            .iter()
            .zip(&self.arities)
            .fold(0, |acc, (&d, &a)| {
                debug_assert!(d < a);
                acc * a + d
            })
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.arities.len()];
        for (slot, &a) in digits.iter_mut().zip(&self.arities).rev() {
            *slot = index % a;
            index /= a;
        }
        digits
    }

    /// Iterates all digit tuples in flattened order.
    pub fn states(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.size).map(move |i| self.decode(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch(rows: &[&[f64]]) -> StochasticChannel {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        StochasticChannel::new(&rows, 1e-9).unwrap()
    }

    #[test]
    fn identity_is_left_unit() {
        let f = ch(&[&[0.3, 0.5], &[0.7, 0.5]]);
        let g = StochasticChannel::identity(2);
        assert_eq!(g.compose(&f).unwrap(), f);
    }

    #[test]
    fn uniform_mixer_absorbs_anything() {
        // direct multiplication: every entry is 0.5*a + 0.5*(1-a) = 0.5
        let mix = ch(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let f = ch(&[&[0.1, 0.8], &[0.9, 0.2]]);
        let out = mix.compose(&f).unwrap();
        assert!(out.max_abs_diff(&mix).unwrap() < 1e-15);
    }

    #[test]
    fn compose_rejects_mismatch() {
        let f = StochasticChannel::identity(3);
        let g = StochasticChannel::identity(2);
        assert_eq!(
            g.compose(&f),
            Err(ChannelError::ArityMismatch { expected: 2, found: 3 })
        );
    }

    #[test]
    fn tensor_units() {
        let f = ch(&[&[0.3, 0.5], &[0.7, 0.5]]);
        assert_eq!(StochasticChannel::unit().tensor(&f), f);
        let id2 = StochasticChannel::identity(2);
        assert_eq!(id2.tensor(&id2), StochasticChannel::identity(4));
    }

    #[test]
    fn tensor_layout_first_factor_most_significant() {
        let a = Distribution::from_weights(vec![0.25, 0.75]);
        let b = Distribution::from_weights(vec![0.1, 0.9]);
        let t = StochasticChannel::from_distribution(&a).tensor(&StochasticChannel::from_distribution(&b));
        assert_eq!(t.column(0), a.tensor(&b).weights().to_vec());
        assert!((t.get(1, 0) - 0.25 * 0.9).abs() < 1e-15);
        assert!((t.get(2, 0) - 0.75 * 0.1).abs() < 1e-15);
    }

    #[test]
    fn violations_report_column_sum() {
        let f = StochasticChannel::from_rows(&[vec![0.3, 0.5], vec![0.6, 0.5]]).unwrap();
        let v = f.violations(1e-9);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "column 0 sums to 0.9");
    }

    #[test]
    fn negative_entries_flagged() {
        let f = StochasticChannel::from_rows(&[vec![-0.1], vec![1.1]]).unwrap();
        assert!(matches!(f.violations(1e-9)[0], StochasticViolation::NegativeEntry { row: 0, col: 0, .. }));
        // within tolerance counts as zero
        let g = StochasticChannel::from_rows(&[vec![-1e-12], vec![1.0]]).unwrap();
        assert!(g.is_stochastic(1e-9));
    }

    #[test]
    fn from_rows_shape_errors() {
        assert_eq!(StochasticChannel::from_rows(&[]), Err(ChannelError::Empty));
        assert!(matches!(
            StochasticChannel::from_rows(&[vec![1.0], vec![0.0, 1.0]]),
            Err(ChannelError::Ragged { row: 1, .. })
        ));
        assert!(matches!(
            StochasticChannel::from_rows(&[vec![f64::NAN]]),
            Err(ChannelError::NonFinite { .. })
        ));
    }

    #[test]
    fn permutation_detection() {
        assert!(ch(&[&[0.0, 1.0], &[1.0, 0.0]]).is_permutation(1e-9));
        assert!(!ch(&[&[0.5, 0.5], &[0.5, 0.5]]).is_permutation(1e-9));
        assert!(!ch(&[&[1.0, 1.0], &[0.0, 0.0]]).is_permutation(1e-9));
        assert!(!StochasticChannel::discard(2).is_permutation(1e-9));
    }

    #[test]
    fn index_scheme_roundtrip() {
        let s = IndexScheme::new(vec![2, 3, 4]).unwrap();
        assert_eq!(s.size(), 24);
        assert_eq!(s.encode(&[1, 0, 0]), 12);
        assert_eq!(s.encode(&[0, 2, 3]), 11);
        for i in 0..24 {
            assert_eq!(s.encode(&s.decode(i)), i);
        }
        let empty = IndexScheme::new(vec![]).unwrap();
        assert_eq!(empty.size(), 1);
        assert_eq!(empty.decode(0), Vec::<usize>::new());
        assert!(IndexScheme::new(vec![usize::MAX, 2]).is_err());
    }

    #[test]
    fn push_matches_compose() {
        let f = ch(&[&[0.3, 0.5], &[0.7, 0.5]]);
        let d = Distribution::from_weights(vec![0.4, 0.6]);
        let pushed = f.push(&d).unwrap();
        assert!((pushed.weights()[0] - (0.3 * 0.4 + 0.5 * 0.6)).abs() < 1e-15);
        assert!((pushed.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fmt_num_trims() {
        assert_eq!(fmt_num(0.8999999999999999), "0.9");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(1e-9), "1.00e-9");
    }
}
