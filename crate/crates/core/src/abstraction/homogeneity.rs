//! Block partition of a channel by value cells, causal homogeneity, and
//! synthesis of the coarse-grained channel from block column sums.
//!
//! For `f: X -> Y` and surjective `τ_X`, `τ_Y`, block `(i, j)` of `f` holds the
//! columns in the `i`-th cell of `X` and the rows in the `j`-th cell of `Y`.
//! `f` is homogeneous when every column of a block has the same sum `c_i^j`;
//! then `g[j][i] = c_i^j` is the unique channel with `α_Y · f = g · α_X`.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{AbstractionError, DeterministicMap};
use crate::channel::StochasticChannel;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition {
    matrix: DMatrix<f64>,
    /// Column cells in codomain order of `τ_X`; members ascending.
    pub x_cells: Vec<Vec<usize>>,
    /// Row cells in codomain order of `τ_Y`; members ascending.
    pub y_cells: Vec<Vec<usize>>,
}

impl BlockPartition {
    /// Number of column cells (`m`).
    pub fn m(&self) -> usize {
        self.x_cells.len()
    }

    /// Number of row cells (`s`).
    pub fn s(&self) -> usize {
        self.y_cells.len()
    }

    /// Column permutation making cells contiguous: position -> original column.
    pub fn column_order(&self) -> Vec<usize> {
        self.x_cells.concat()
    }

    /// Row permutation making cells contiguous: position -> original row.
    pub fn row_order(&self) -> Vec<usize> {
        self.y_cells.concat()
    }

    /// `(rows, cols)` of block `(i, j)`.
    pub fn block_shape(&self, i: usize, j: usize) -> (usize, usize) {
        (self.y_cells[j].len(), self.x_cells[i].len())
    }

    pub fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        let rows = &self.y_cells[j];
        let cols = &self.x_cells[i];
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| self.matrix[(rows[r], cols[c])])
    }

    /// The channel with rows and columns reordered so that every block is contiguous.
    pub fn permuted(&self) -> DMatrix<f64> {
        let rows = self.row_order();
        let cols = self.column_order();
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| self.matrix[(rows[r], cols[c])])
    }

    /// Column sums of block `(i, j)`, one per column of the `i`-th cell.
    pub fn block_column_sums(&self, i: usize, j: usize) -> Vec<f64> {
        self.x_cells[i]
            .iter()
            .map(|&c| self.y_cells[j].iter().map(|&r| self.matrix[(r, c)]).sum())
            .collect()
    }
}

pub fn partition_blocks(
    f: &StochasticChannel,
    tau_x: &DeterministicMap,
    tau_y: &DeterministicMap,
) -> Result<BlockPartition, AbstractionError> {
    if f.domain_arity() != tau_x.domain_size() || f.codomain_arity() != tau_y.domain_size() {
        return Err(AbstractionError::PartitionShape {
            rows: f.codomain_arity(),
            cols: f.domain_arity(),
            tau_x: tau_x.domain_size(),
            tau_y: tau_y.domain_size(),
        });
    }
    Ok(BlockPartition { matrix: f.matrix().clone(), x_cells: tau_x.cells(), y_cells: tau_y.cells() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockFailure {
    /// Column cell index `i` (0-based).
    pub x_cell: usize,
    /// Row cell index `j` (0-based).
    pub y_cell: usize,
    /// Original indices of the columns whose sum strays from the block constant.
    pub columns: Vec<usize>,
    pub column_sums: Vec<f64>,
    pub constant: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityReport {
    pub pass: bool,
    /// `constants[j][i] = c_i^j`, laid out like the coarse channel.
    pub constants: Vec<Vec<f64>>,
    pub worst_deviation: f64,
    pub failures: Vec<BlockFailure>,
    pub column_order: Vec<usize>,
    pub row_order: Vec<usize>,
}

/// Per block, the mean column sum is the candidate constant; the block passes
/// when every column sum lies within `tol` of it.
pub fn check_homogeneity(
    f: &StochasticChannel,
    tau_x: &DeterministicMap,
    tau_y: &DeterministicMap,
    tol: f64,
) -> Result<HomogeneityReport, AbstractionError> {
    let part = partition_blocks(f, tau_x, tau_y)?;
    let mut constants = vec![vec![0.0; part.m()]; part.s()];
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for j in 0..part.s() {
        for i in 0..part.m() {
            let sums = part.block_column_sums(i, j);
            let c = sums.iter().sum::<f64>() / sums.len() as f64;
            constants[j][i] = c;
            let dev = sums.iter().map(|s| (s - c).abs()).fold(0.0, f64::max);
            worst = worst.max(dev);
            if dev > tol {
                let columns = part.x_cells[i]
                    .iter()
                    .zip(&sums)
                    .filter(|(_, s)| (*s - c).abs() > tol)
                    .map(|(&col, _)| col)
                    .collect();
                failures.push(BlockFailure { x_cell: i, y_cell: j, columns, column_sums: sums, constant: c, deviation: dev });
            }
        }
    }
    Ok(HomogeneityReport {
        pass: failures.is_empty(),
        constants,
        worst_deviation: worst,
        failures,
        column_order: part.column_order(),
        row_order: part.row_order(),
    })
}

/// The coarse channel `g` with `g[j][i] = c_i^j`, if `f` is homogeneous.
pub fn synthesize_macro_mechanism(
    f: &StochasticChannel,
    tau_x: &DeterministicMap,
    tau_y: &DeterministicMap,
    tol: f64,
) -> Result<StochasticChannel, AbstractionError> {
    let report = check_homogeneity(f, tau_x, tau_y, tol)?;
    if !report.pass {
        return Err(AbstractionError::NotHomogeneous(Box::new(report)));
    }
    let s = report.constants.len();
    let m = report.constants[0].len();
    Ok(StochasticChannel::from_matrix(DMatrix::from_fn(s, m, |j, i| report.constants[j][i])))
}
