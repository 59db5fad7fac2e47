//! Weak Galerkin discretization of a Friedrichs system: local operators,
//! edge elimination, condensed and monolithic global systems, and the
//! energy forms and norm.

mod forms;
mod global;

pub use forms::TripleNormParts;
pub use global::{CondensedOperator, MonolithicOperator, Solution};

use std::ops::Range;

use rayon::prelude::*;

use crate::friedrichs::FriedrichsSystem;
use crate::linalg::{DenseMatrix, LinalgError};
use crate::mesh::{Point, WeakMesh};
use crate::polyspace::{
    assembly_cell_exactness, assembly_edge_exactness, cell_dim, cell_quadrature, edge_dim,
    edge_quadrature, error_exactness, Basis, CellBasis, EdgeBasis, PolyError, Projector,
};

#[derive(Debug, thiserror::Error)]
pub enum AssemblyError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("linear algebra: {0}")]
    Linalg(#[from] LinalgError),
    #[error("vector length {found} does not match the expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("the system has no exact solution")]
    MissingExact,
}

/// Offsets of the cell unknowns `u⁰` and edge unknowns `uᵇ`.
///
/// Within a block, component `c` and basis function `i` sit at `c·n + i`
/// with `n` the scalar basis dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DofMap {
    m: usize,
    k: usize,
    num_cells: usize,
    num_edges: usize,
}

impl DofMap {
    pub fn new(m: usize, k: usize, num_cells: usize, num_edges: usize) -> Self {
        Self {
            m,
            k,
            num_cells,
            num_edges,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn cell_scalar_dim(&self) -> usize {
        cell_dim(self.k)
    }

    pub fn edge_scalar_dim(&self) -> usize {
        edge_dim(self.k)
    }

    /// Size `m·n_k` of one cell block.
    pub fn cell_block(&self) -> usize {
        self.m * cell_dim(self.k)
    }

    /// Size `m·(k+1)` of one edge block.
    pub fn edge_block(&self) -> usize {
        self.m * edge_dim(self.k)
    }

    /// Number of cell unknowns `N₀`.
    pub fn n0(&self) -> usize {
        self.num_cells * self.cell_block()
    }

    /// Number of edge unknowns `N_b`.
    pub fn nb(&self) -> usize {
        self.num_edges * self.edge_block()
    }

    pub fn cell_range(&self, cell: usize) -> Range<usize> {
        let b = self.cell_block();
        cell * b..(cell + 1) * b
    }

    pub fn edge_range(&self, edge: usize) -> Range<usize> {
        let b = self.edge_block();
        edge * b..(edge + 1) * b
    }
}

/// A weak function `{v⁰, vᵇ}` in coefficient form; `vᵇ` is stored once per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakVector {
    pub u0: Vec<f64>,
    pub ub: Vec<f64>,
}

impl WeakVector {
    pub fn zeros(dofs: &DofMap) -> Self {
        Self {
            u0: vec![0.0; dofs.n0()],
            ub: vec![0.0; dofs.nb()],
        }
    }

    pub fn cell<'v>(&'v self, dofs: &DofMap, cell: usize) -> &'v [f64] {
        &self.u0[dofs.cell_range(cell)]
    }

    pub fn edge<'v>(&'v self, dofs: &DofMap, edge: usize) -> &'v [f64] {
        &self.ub[dofs.edge_range(edge)]
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Self {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        Self {
            u0: d(&self.u0, &other.u0),
            ub: d(&self.ub, &other.ub),
        }
    }

    fn check(&self, dofs: &DofMap) -> Result<(), AssemblyError> {
        if self.u0.len() != dofs.n0() {
            return Err(AssemblyError::DimensionMismatch {
                expected: dofs.n0(),
                found: self.u0.len(),
            });
        }
        if self.ub.len() != dofs.nb() {
            return Err(AssemblyError::DimensionMismatch {
                expected: dofs.nb(),
                found: self.ub.len(),
            });
        }
        Ok(())
    }
}

/// Evaluates the `m` components of a block at basis values `phi`.
pub(crate) fn eval_block(block: &[f64], phi: &[f64], out: &mut [f64]) {
    let n = phi.len();
    for (c, o) in out.iter_mut().enumerate() {
        *o = block[c * n..(c + 1) * n].iter().zip(phi).map(|(a, p)| a * p).sum();
    }
}

/// Terms of the WG equations tested with `v = {v⁰, 0}` on one cell.
#[derive(Clone, Debug)]
pub struct CellOperator {
    pub cell: usize,
    /// Coupling of the cell's `u⁰` to itself.
    pub a: DenseMatrix,
    /// Global edges of the cell in local order.
    pub edges: Vec<usize>,
    /// Coupling of `u⁰` to the `uᵇ` block of each local edge.
    pub c: Vec<DenseMatrix>,
    /// Scalar trace moments `∫_e ψ_j φ_i`, one `(k+1) × n_k` matrix per local edge.
    pub trace: Vec<DenseMatrix>,
    /// Load `(f, v⁰)_K`.
    pub load: Vec<f64>,
}

/// Terms of the WG equations tested with `v = {0, vᵇ}` on one edge:
/// `E uᵇ = Σ_K G_K u⁰_K`.
#[derive(Clone, Debug)]
pub struct EdgeOperator {
    pub edge: usize,
    pub e: DenseMatrix,
    /// `(cell, G_K)` for each incident cell.
    pub g: Vec<(usize, DenseMatrix)>,
}

/// Per-edge linear maps `uᵇ_e = Σ_K R_{e,K} u⁰_K`.
#[derive(Clone, Debug)]
pub struct EdgeEliminationMap {
    pub maps: Vec<Vec<(usize, DenseMatrix)>>,
}

impl EdgeEliminationMap {
    /// Applies the maps to a cell vector.
    pub fn apply(&self, dofs: &DofMap, u0: &[f64]) -> Vec<f64> {
        let blocks: Vec<Vec<f64>> = self
            .maps
            .par_iter()
            .map(|maps| {
                let mut ub = vec![0.0; dofs.edge_block()];
                for (cell, r) in maps {
                    r.matvec_acc(&u0[dofs.cell_range(*cell)], 1.0, &mut ub);
                }
                ub
            })
            .collect();
        blocks.concat()
    }
}

/// A mesh, a Friedrichs system and a polynomial degree.
#[derive(Clone, Copy, Debug)]
pub struct Discretization<'a> {
    mesh: &'a WeakMesh,
    sys: &'a FriedrichsSystem,
    k: usize,
    dofs: DofMap,
}

impl<'a> Discretization<'a> {
    pub fn new(mesh: &'a WeakMesh, sys: &'a FriedrichsSystem, k: usize) -> Self {
        Self {
            mesh,
            sys,
            k,
            dofs: DofMap::new(sys.m(), k, mesh.num_cells(), mesh.num_edges()),
        }
    }

    pub fn mesh(&self) -> &'a WeakMesh {
        self.mesh
    }

    pub fn sys(&self) -> &'a FriedrichsSystem {
        self.sys
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn cell_basis(&self, cell: usize) -> CellBasis {
        CellBasis::for_cell(self.mesh, cell, self.k)
    }

    pub fn edge_basis(&self, edge: usize) -> EdgeBasis {
        EdgeBasis::for_edge(self.mesh, edge, self.k)
    }

    /// Cell block of the WG equations: `−(u⁰, A·∇v⁰) + ((B − divA)u⁰, v⁰)
    /// + ⟨D_n uᵇ, v⁰⟩ + μ⟨u⁰ − uᵇ, v⁰⟩` and the load `(f, v⁰)`.
    pub fn local_cell_operator(&self, cell: usize) -> Result<CellOperator, AssemblyError> {
        let m = self.sys.m();
        let nk = cell_dim(self.k);
        let ne = edge_dim(self.k);
        let nb = m * nk;
        let mu = self.sys.mu();
        let basis = self.cell_basis(cell);
        let mut a = DenseMatrix::zeros(nb, nb);
        let mut load = vec![0.0; nb];
        let mut phi = vec![0.0; nk];
        let mut grad = vec![[0.0; 2]; nk];

        let quad = cell_quadrature(self.mesh, cell, assembly_cell_exactness(self.k))?;
        for (x, w) in quad.iter() {
            basis.eval_into(x, &mut phi);
            basis.grad_into(x, &mut grad);
            let [a1, a2] = self.sys.a(x);
            let mut react = self.sys.b(x);
            react.add_assign_scaled(&self.sys.div_a(x), -1.0);
            let f = self.sys.f(x);
            for c in 0..m {
                for i in 0..nk {
                    let row = c * nk + i;
                    load[row] += w * f[c] * phi[i];
                    for cp in 0..m {
                        let g1 = a1[(cp, c)];
                        let g2 = a2[(cp, c)];
                        let r = react[(c, cp)];
                        if g1 == 0.0 && g2 == 0.0 && r == 0.0 {
                            continue;
                        }
                        let adv = g1 * grad[i][0] + g2 * grad[i][1];
                        let arow = a.row_mut(row);
                        for ip in 0..nk {
                            arow[cp * nk + ip] += w * (r * phi[i] - adv) * phi[ip];
                        }
                    }
                }
            }
        }

        let edges = self.mesh.cell_edges(cell).to_vec();
        let mut cblocks = Vec::with_capacity(edges.len());
        let mut traces = Vec::with_capacity(edges.len());
        let mut psi = vec![0.0; ne];
        for &e in &edges {
            let normal = self.mesh.outward_normal(cell, e);
            let eb = self.edge_basis(e);
            let mut cb = DenseMatrix::zeros(nb, m * ne);
            let mut t = DenseMatrix::zeros(ne, nk);
            let quad = edge_quadrature(self.mesh, e, assembly_edge_exactness(self.k));
            for (x, w) in quad.iter() {
                basis.eval_into(x, &mut phi);
                eb.eval_into(x, &mut psi);
                let dn = self.sys.d_n(x, normal);
                for j in 0..ne {
                    for i in 0..nk {
                        t[(j, i)] += w * psi[j] * phi[i];
                    }
                }
                for c in 0..m {
                    for i in 0..nk {
                        let row = c * nk + i;
                        let wp = w * phi[i];
                        let arow = a.row_mut(row);
                        for ip in 0..nk {
                            arow[c * nk + ip] += mu * wp * phi[ip];
                        }
                        let crow = cb.row_mut(row);
                        for cp in 0..m {
                            let coef = dn[(c, cp)] - if c == cp { mu } else { 0.0 };
                            if coef == 0.0 {
                                continue;
                            }
                            for j in 0..ne {
                                crow[cp * ne + j] += wp * coef * psi[j];
                            }
                        }
                    }
                }
            }
            cblocks.push(cb);
            traces.push(t);
        }
        Ok(CellOperator {
            cell,
            a,
            edges,
            c: cblocks,
            trace: traces,
            load,
        })
    }

    /// All cell operators, computed in parallel.
    pub fn cell_operators(&self) -> Result<Vec<CellOperator>, AssemblyError> {
        (0..self.mesh.num_cells())
            .into_par_iter()
            .map(|c| self.local_cell_operator(c))
            .collect()
    }

    /// Edge block: `E = n_e μ Mₑ + ½∫(M − D_n)ψψ` (boundary term on
    /// boundary edges only) and `G_K = μ ∫_e ψ φ^K`, with `n_e` the number
    /// of incident cells.
    pub fn edge_operator(&self, edge: usize, cells: &[CellOperator]) -> EdgeOperator {
        let m = self.sys.m();
        let ne = edge_dim(self.k);
        let nk = cell_dim(self.k);
        let mu = self.sys.mu();
        let info = self.mesh.edge(edge);
        let incident: Vec<usize> = info.cells().collect();
        let eb = self.edge_basis(edge);
        let mut e = DenseMatrix::zeros(m * ne, m * ne);
        let quad = edge_quadrature(self.mesh, edge, assembly_edge_exactness(self.k));
        let mut psi = vec![0.0; ne];
        let scale = incident.len() as f64 * mu;
        for (x, w) in quad.iter() {
            eb.eval_into(x, &mut psi);
            let bc = if info.is_boundary() {
                let mut r = self.sys.m_bnd(x, info.normal);
                r.add_assign_scaled(&self.sys.d_n(x, info.normal), -1.0);
                Some(r)
            } else {
                None
            };
            for c in 0..m {
                for j in 0..ne {
                    let row = c * ne + j;
                    let wp = w * psi[j];
                    let erow = e.row_mut(row);
                    for jp in 0..ne {
                        erow[c * ne + jp] += scale * wp * psi[jp];
                    }
                    if let Some(r) = &bc {
                        for cp in 0..m {
                            let coef = 0.5 * r[(c, cp)];
                            if coef == 0.0 {
                                continue;
                            }
                            for jp in 0..ne {
                                erow[cp * ne + jp] += wp * coef * psi[jp];
                            }
                        }
                    }
                }
            }
        }
        let g = incident
            .iter()
            .map(|&cell| {
                let op = &cells[cell];
                let p = op.edges.iter().position(|&x| x == edge).expect("edge of incident cell");
                let t = &op.trace[p];
                let mut g = DenseMatrix::zeros(m * ne, m * nk);
                for c in 0..m {
                    for j in 0..ne {
                        for i in 0..nk {
                            g[(c * ne + j, c * nk + i)] = mu * t[(j, i)];
                        }
                    }
                }
                (cell, g)
            })
            .collect();
        EdgeOperator { edge, e, g }
    }

    /// Eliminates every `uᵇ_e` in terms of the neighbouring `u⁰` blocks.
    pub fn edge_elimination_from(&self, cells: &[CellOperator]) -> Result<EdgeEliminationMap, AssemblyError> {
        let maps = (0..self.mesh.num_edges())
            .into_par_iter()
            .map(|e| {
                let op = self.edge_operator(e, cells);
                let lu = op.e.lu()?;
                Ok(op.g.iter().map(|(cell, g)| (*cell, lu.solve_matrix(g))).collect())
            })
            .collect::<Result<Vec<_>, AssemblyError>>()?;
        Ok(EdgeEliminationMap { maps })
    }

    pub fn edge_elimination(&self) -> Result<EdgeEliminationMap, AssemblyError> {
        let cells = self.cell_operators()?;
        self.edge_elimination_from(&cells)
    }

    /// `Q_h u = {Q⁰u, Qᵇu}`: cellwise and edgewise L2 projections of a
    /// vector function, componentwise.
    pub fn interpolate(&self, u: &(dyn Fn(Point) -> Vec<f64> + Sync)) -> Result<WeakVector, AssemblyError> {
        let m = self.sys.m();
        let exactness = error_exactness(self.k);
        let project_all = |basis: &dyn Basis, quad| -> Result<Vec<f64>, AssemblyError> {
            let proj = Projector::new(basis, quad)?;
            let values: Vec<Vec<f64>> = proj.quadrature().points.iter().map(|&x| u(x)).collect();
            let mut out = Vec::with_capacity(m * basis.dim());
            for c in 0..m {
                let samples: Vec<f64> = values.iter().map(|v| v[c]).collect();
                out.extend(proj.project_samples(&samples)?);
            }
            Ok(out)
        };
        let u0 = (0..self.mesh.num_cells())
            .into_par_iter()
            .map(|c| {
                let quad = cell_quadrature(self.mesh, c, exactness)?;
                project_all(&self.cell_basis(c), quad)
            })
            .collect::<Result<Vec<_>, _>>()?
            .concat();
        let ub = (0..self.mesh.num_edges())
            .into_par_iter()
            .map(|e| project_all(&self.edge_basis(e), edge_quadrature(self.mesh, e, exactness)))
            .collect::<Result<Vec<_>, _>>()?
            .concat();
        Ok(WeakVector { u0, ub })
    }
}

#[cfg(test)]
mod tests;
