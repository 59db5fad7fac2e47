use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{AssemblyError, CellOperator, Discretization, DofMap, EdgeEliminationMap, WeakVector};
use crate::linalg::{solve_sparse, BlockPartition, DenseMatrix, SolveStats, SolverOptions, SparseMatrix};

/// The cell-only system left after eliminating every `uᵇ`.
#[derive(Clone, Debug)]
pub struct CondensedOperator {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub elimination: EdgeEliminationMap,
    pub dofs: DofMap,
}

impl CondensedOperator {
    /// Recovers `uᵇ` edge by edge from a cell solution.
    pub fn recover_edge_unknowns(&self, u0: Vec<f64>) -> WeakVector {
        let ub = self.elimination.apply(&self.dofs, &u0);
        WeakVector { u0, ub }
    }

    /// Cell-block partition used by the preconditioner.
    pub fn blocks(&self) -> BlockPartition {
        BlockPartition::uniform(self.dofs.n0(), self.dofs.cell_block())
    }
}

/// The uncondensed system in `(u⁰, uᵇ)`, unknowns ordered cells first.
#[derive(Clone, Debug)]
pub struct MonolithicOperator {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub dofs: DofMap,
}

impl MonolithicOperator {
    pub fn blocks(&self) -> BlockPartition {
        let cells = std::iter::repeat_n(self.dofs.cell_block(), self.dofs.n0() / self.dofs.cell_block().max(1));
        let edges = std::iter::repeat_n(self.dofs.edge_block(), self.dofs.nb() / self.dofs.edge_block().max(1));
        BlockPartition::from_sizes(cells.chain(edges))
    }

    pub fn split(&self, x: &[f64]) -> WeakVector {
        let n0 = self.dofs.n0();
        WeakVector {
            u0: x[..n0].to_vec(),
            ub: x[n0..].to_vec(),
        }
    }
}

/// A discrete solution with solver statistics.
#[derive(Clone, Debug)]
pub struct Solution {
    pub u: WeakVector,
    pub stats: SolveStats,
}

/// Builds CSR arrays from per-row-block lists of `(column block start, dense block)`.
fn block_rows_to_csr(
    nrows: usize,
    ncols: usize,
    row_blocks: Vec<(usize, Vec<(usize, DenseMatrix)>)>,
) -> SparseMatrix {
    let mut row_ptr = Vec::with_capacity(nrows + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    let mut next_row = 0;
    for (row0, mut blocks) in row_blocks {
        assert_eq!(row0, next_row, "row blocks must be contiguous");
        blocks.sort_by_key(|(c, _)| *c);
        let rows = blocks.first().map_or(0, |(_, b)| b.rows());
        for r in 0..rows {
            for (col0, b) in &blocks {
                for (j, v) in b.row(r).iter().enumerate() {
                    col_idx.push(col0 + j);
                    values.push(*v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        next_row += rows;
    }
    assert_eq!(next_row, nrows);
    SparseMatrix::from_csr(nrows, ncols, row_ptr, col_idx, values)
}

impl Discretization<'_> {
    /// Condensed system in `u⁰` with its edge elimination map.
    pub fn assemble_condensed(&self) -> Result<CondensedOperator, AssemblyError> {
        let cells = self.cell_operators()?;
        let elimination = self.edge_elimination_from(&cells)?;
        let dofs = *self.dofs();
        let row_blocks: Vec<(usize, Vec<(usize, DenseMatrix)>)> = cells
            .par_iter()
            .map(|op| {
                // neighbours sharing several edges accumulate into one block
                let mut blocks: BTreeMap<usize, DenseMatrix> = BTreeMap::new();
                blocks.insert(op.cell, op.a.clone());
                for (p, &e) in op.edges.iter().enumerate() {
                    for (cell, r) in &elimination.maps[e] {
                        let prod = op.c[p].matmul(r);
                        blocks
                            .entry(*cell)
                            .and_modify(|b| b.add_assign_scaled(&prod, 1.0))
                            .or_insert(prod);
                    }
                }
                let list = blocks
                    .into_iter()
                    .map(|(c, b)| (dofs.cell_range(c).start, b))
                    .collect();
                (dofs.cell_range(op.cell).start, list)
            })
            .collect();
        let matrix = block_rows_to_csr(dofs.n0(), dofs.n0(), row_blocks);
        let rhs = cells.iter().flat_map(|op| op.load.iter().copied()).collect();
        Ok(CondensedOperator {
            matrix,
            rhs,
            elimination,
            dofs,
        })
    }

    /// Uncondensed system: cell rows `A u⁰ + Σ C uᵇ = F`, edge rows
    /// `E uᵇ − Σ G u⁰ = 0`.
    pub fn assemble_monolithic(&self) -> Result<MonolithicOperator, AssemblyError> {
        let cells = self.cell_operators()?;
        let dofs = *self.dofs();
        let n0 = dofs.n0();
        let n = n0 + dofs.nb();
        let mut row_blocks: Vec<(usize, Vec<(usize, DenseMatrix)>)> = cells
            .iter()
            .map(|op: &CellOperator| {
                let mut list = vec![(dofs.cell_range(op.cell).start, op.a.clone())];
                for (p, &e) in op.edges.iter().enumerate() {
                    list.push((n0 + dofs.edge_range(e).start, op.c[p].clone()));
                }
                (dofs.cell_range(op.cell).start, list)
            })
            .collect();
        let edge_rows: Vec<_> = (0..self.mesh().num_edges())
            .into_par_iter()
            .map(|e| {
                let op = self.edge_operator(e, &cells);
                let mut list = vec![(n0 + dofs.edge_range(e).start, op.e)];
                for (cell, g) in op.g {
                    list.push((dofs.cell_range(cell).start, g.scaled(-1.0)));
                }
                (n0 + dofs.edge_range(e).start, list)
            })
            .collect();
        row_blocks.extend(edge_rows);
        let matrix = block_rows_to_csr(n, n, row_blocks);
        let mut rhs: Vec<f64> = cells.iter().flat_map(|op| op.load.iter().copied()).collect();
        rhs.resize(n, 0.0);
        Ok(MonolithicOperator { matrix, rhs, dofs })
    }

    /// Assembles the condensed system, solves it and recovers `uᵇ`.
    pub fn solve(&self, opts: &SolverOptions) -> Result<Solution, AssemblyError> {
        let op = self.assemble_condensed()?;
        self.solve_condensed(&op, opts)
    }

    pub fn solve_condensed(&self, op: &CondensedOperator, opts: &SolverOptions) -> Result<Solution, AssemblyError> {
        let mut opts = opts.clone();
        if opts.blocks.is_none() {
            opts.blocks = Some(op.blocks());
        }
        let (u0, stats) = solve_sparse(&op.matrix, &op.rhs, &opts)?;
        Ok(Solution {
            u: op.recover_edge_unknowns(u0),
            stats,
        })
    }

    /// Solves the uncondensed system.
    pub fn solve_monolithic(&self, opts: &SolverOptions) -> Result<Solution, AssemblyError> {
        let op = self.assemble_monolithic()?;
        let mut opts = opts.clone();
        if opts.blocks.is_none() {
            opts.blocks = Some(op.blocks());
        }
        let (x, stats) = solve_sparse(&op.matrix, &op.rhs, &opts)?;
        Ok(Solution { u: op.split(&x), stats })
    }
}
