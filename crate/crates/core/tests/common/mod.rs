//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use causal_abstraction::abstraction::DeterministicMap;
use causal_abstraction::{CausalModel, Distribution, IndexScheme, StochasticChannel};
use nalgebra::DMatrix;

/// Marginal of `vertex` computed by extending a distribution over the
/// vertices seen so far, one vertex at a time in topological order.
pub fn sequential_marginal(model: &CausalModel, vertex: usize) -> Vec<f64> {
    let order = model.dag().topological_order().to_vec();
    let mut seen: Vec<usize> = Vec::new();
    let mut p = vec![1.0];
    for &v in &order {
        let scheme = IndexScheme::new(seen.iter().map(|&u| model.arity(u)).collect()).unwrap();
        let pa_scheme = model.parent_scheme(v);
        let n = model.arity(v);
        let mut next = vec![0.0; p.len() * n];
        for (s, &w) in p.iter().enumerate() {
            let digits = scheme.decode(s);
            let pa: Vec<usize> = model
                .dag()
                .parents(v)
                .iter()
                .map(|q| digits[seen.iter().position(|u| u == q).unwrap()])
                .collect();
            let col = pa_scheme.encode(&pa);
            for y in 0..n {
                next[s * n + y] += w * model.mechanism(v).get(y, col);
            }
        }
        seen.push(v);
        p = next;
    }
    let scheme = IndexScheme::new(seen.iter().map(|&u| model.arity(u)).collect()).unwrap();
    let pos = seen.iter().position(|&u| u == vertex).unwrap();
    let mut out = vec![0.0; model.arity(vertex)];
    for (s, w) in p.iter().enumerate() {
        out[scheme.decode(s)[pos]] += w;
    }
    out
}

/// Smallest Frobenius residual of `alpha_y * f - g * alpha_x` over all real
/// `g` (unconstrained least squares via SVD). A lower bound for the
/// residual over stochastic `g`.
pub fn least_squares_residual(f: &StochasticChannel, tau_x: &DeterministicMap, tau_y: &DeterministicMap) -> f64 {
    let a = tau_y.to_channel().matrix() * f.matrix();
    let ax = tau_x.to_channel().matrix().clone();
    // g * ax = a  <=>  ax^T * g^T = a^T
    let lhs = ax.transpose();
    let rhs = a.transpose();
    let svd = lhs.clone().svd(true, true);
    let gt = svd.solve(&rhs, 1e-12).unwrap();
    (lhs * gt - rhs).norm()
}

/// Inverts a square channel and reports whether the inverse is stochastic.
pub fn has_stochastic_inverse(c: &StochasticChannel, tol: f64) -> bool {
    let m = c.matrix();
    if m.nrows() != m.ncols() {
        return false;
    }
    match m.clone().try_inverse() {
        Some(inv) => StochasticChannel::from_matrix(inv).is_stochastic(tol),
        None => false,
    }
}

/// Plain triple-loop matrix product.
pub fn naive_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), b.ncols(), |i, j| (0..a.ncols()).map(|k| a[(i, k)] * b[(k, j)]).sum())
}

pub fn column_sums_ok(c: &StochasticChannel, tol: f64) -> bool {
    let m = c.matrix();
    (0..m.ncols()).all(|j| (m.column(j).sum() - 1.0).abs() <= tol && m.column(j).iter().all(|x| *x >= -tol))
}

pub fn total_ok(d: &Distribution, tol: f64) -> bool {
    (d.weights().iter().sum::<f64>() - 1.0).abs() <= tol * d.arity().max(1) as f64
}
