use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::Serialize;

use super::AbstractionError;
use crate::channel::{IndexScheme, StochasticChannel};

/// A surjective value map `τ` from a product of finite sets onto a finite set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeterministicMap {
    domain: Vec<usize>,
    codomain: usize,
    table: Vec<usize>,
}

impl DeterministicMap {
    /// `table[i]` is the image of flattened domain state `i` (first factor most significant).
    pub fn new(domain: Vec<usize>, codomain: usize, table: Vec<usize>) -> Result<Self, AbstractionError> {
        let size = IndexScheme::new(domain.clone())?.size();
        if table.len() != size {
            return Err(AbstractionError::TableLength { expected: size, found: table.len() });
        }
        if let Some((index, &value)) = table.iter().enumerate().find(|(_, &v)| v >= codomain) {
            return Err(AbstractionError::TableValue { index, value, codomain });
        }
        let hit: BTreeSet<usize> = table.iter().copied().collect();
        let missing: Vec<usize> = (0..codomain).filter(|v| !hit.contains(v)).take(16).collect();
        if codomain == 0 || !missing.is_empty() {
            return Err(AbstractionError::NotSurjective { codomain, missing });
        }
        Ok(Self { domain, codomain, table })
    }

    pub fn identity(n: usize) -> Self {
        Self { domain: vec![n], codomain: n, table: (0..n).collect() }
    }

    /// Collapses the whole domain onto a single value.
    pub fn constant(domain: Vec<usize>) -> Self {
        let size = domain.iter().product();
        Self { domain, codomain: 1, table: vec![0; size] }
    }

    pub fn domain_factors(&self) -> &[usize] {
        &self.domain
    }

    pub fn domain_size(&self) -> usize {
        self.table.len()
    }

    pub fn codomain_arity(&self) -> usize {
        self.codomain
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn apply(&self, state: usize) -> usize {
        self.table[state]
    }

    pub fn is_bijective(&self) -> bool {
        self.domain_size() == self.codomain
    }

    /// Preimage cells `τ⁻¹(j)` for each codomain value `j`, members ascending.
    pub fn cells(&self) -> Vec<Vec<usize>> {
        let mut cells = vec![Vec::new(); self.codomain];
        for (i, &v) in self.table.iter().enumerate() {
            cells[v].push(i);
        }
        cells
    }

    /// The induced 0/1 channel: entry `(τ(x), x)` is one.
    pub fn to_channel(&self) -> StochasticChannel {
        let mut m = DMatrix::zeros(self.codomain, self.domain_size());
        for (x, &t) in self.table.iter().enumerate() {
            m[(t, x)] = 1.0;
        }
        StochasticChannel::from_matrix(m)
    }

    /// Product map, `self` most significant on both sides.
    pub fn tensor(&self, other: &DeterministicMap) -> DeterministicMap {
        let mut table = Vec::with_capacity(self.domain_size() * other.domain_size());
        for &a in &self.table {
            for &b in &other.table {
                table.push(a * other.codomain + b);
            }
        }
        let mut domain = self.domain.clone();
        domain.extend_from_slice(&other.domain);
        DeterministicMap { domain, codomain: self.codomain * other.codomain, table }
    }

    /// Product of a list of maps; the empty product is the identity on a singleton.
    pub fn tensor_all<'a>(maps: impl IntoIterator<Item = &'a DeterministicMap>) -> DeterministicMap {
        maps.into_iter().fold(
            DeterministicMap { domain: Vec::new(), codomain: 1, table: vec![0] },
            |acc, m| acc.tensor(m),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Distribution;

    #[test]
    fn cholesterol_merge_channel() {
        // (l1,h1),(l1,h2),(l2,h1) -> t1 ; (l2,h2) -> t2
        let tau = DeterministicMap::new(vec![2, 2], 2, vec![0, 0, 0, 1]).unwrap();
        assert_eq!(tau.to_channel().rows(), vec![vec![1.0, 1.0, 1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]]);
        assert_eq!(tau.cells(), vec![vec![0, 1, 2], vec![3]]);
    }

    #[test]
    fn bijection_is_permutation() {
        let tau = DeterministicMap::new(vec![3], 3, vec![2, 0, 1]).unwrap();
        assert!(tau.is_bijective());
        assert!(tau.to_channel().is_permutation(0.0));
    }

    #[test]
    fn constant_onto_singleton() {
        let tau = DeterministicMap::constant(vec![2, 3]);
        assert_eq!(tau.to_channel().rows(), vec![vec![1.0; 6]]);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(matches!(
            DeterministicMap::new(vec![2], 2, vec![0, 0]),
            Err(AbstractionError::NotSurjective { missing, .. }) if missing == vec![1]
        ));
        assert!(matches!(
            DeterministicMap::new(vec![2], 2, vec![0]),
            Err(AbstractionError::TableLength { expected: 2, found: 1 })
        ));
        assert!(matches!(
            DeterministicMap::new(vec![2], 2, vec![0, 2]),
            Err(AbstractionError::TableValue { index: 1, value: 2, .. })
        ));
    }

    #[test]
    fn channel_maps_point_masses() {
        let tau = DeterministicMap::new(vec![4], 2, vec![1, 0, 1, 0]).unwrap();
        let ch = tau.to_channel();
        for v in 0..4 {
            let out = ch.push(&Distribution::point_mass(4, v)).unwrap();
            assert_eq!(out, Distribution::point_mass(2, tau.apply(v)));
        }
    }

    #[test]
    fn tensor_matches_channel_tensor() {
        let a = DeterministicMap::new(vec![3], 2, vec![0, 1, 1]).unwrap();
        let b = DeterministicMap::new(vec![2], 2, vec![1, 0]).unwrap();
        assert_eq!(a.tensor(&b).to_channel(), a.to_channel().tensor(&b.to_channel()));
        assert_eq!(DeterministicMap::tensor_all([]).to_channel(), StochasticChannel::unit());
    }
}
