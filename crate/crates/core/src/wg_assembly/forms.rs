use rayon::prelude::*;

use super::{eval_block, AssemblyError, Discretization, WeakVector};
use crate::linalg::DenseMatrix;
use crate::mesh::Point;
use crate::polyspace::{
    assembly_cell_exactness, assembly_edge_exactness, cell_dim, cell_quadrature, edge_dim, edge_quadrature,
    Basis, Projector,
};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn bilinear(s: &DenseMatrix, x: &[f64], y: &[f64]) -> f64 {
    s.bilinear(y, x)
}

/// Squared parts of the triple norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TripleNormParts {
    pub volume: f64,
    pub jump: f64,
    pub boundary: f64,
}

impl TripleNormParts {
    pub fn total(&self) -> f64 {
        (self.volume + self.jump + self.boundary).max(0.0)
    }
}

/// Values of `v⁰_K` and `vᵇ_e` at the points of one cell-edge pair.
struct TraceSample {
    w: f64,
    x: Point,
    normal: [f64; 2],
    boundary: bool,
}

impl Discretization<'_> {
    /// Weak derivative `∇_{w,A} v ∈ [P_k(K)]^m` of the local weak function with
    /// cell block `v0` and edge blocks `ub` (in the cell's local edge order).
    /// Evaluated as `(A·∇v⁰, φ) + ⟨D_n(vᵇ − v⁰), φ⟩_{∂K}`.
    pub fn weak_derivative_cell(&self, cell: usize, v0: &[f64], ub: &[&[f64]]) -> Result<Vec<f64>, AssemblyError> {
        let m = self.sys().m();
        let nk = cell_dim(self.degree());
        let ne = edge_dim(self.degree());
        let basis = self.cell_basis(cell);
        let mut rhs = vec![0.0; m * nk];
        let mut phi = vec![0.0; nk];
        let mut grad = vec![[0.0; 2]; nk];
        let mut dx = vec![0.0; m];
        let mut dy = vec![0.0; m];
        let quad = cell_quadrature(self.mesh(), cell, assembly_cell_exactness(self.degree()))?;
        for (x, w) in quad.iter() {
            basis.eval_into(x, &mut phi);
            basis.grad_into(x, &mut grad);
            for c in 0..m {
                let block = &v0[c * nk..(c + 1) * nk];
                dx[c] = block.iter().zip(&grad).map(|(v, g)| v * g[0]).sum();
                dy[c] = block.iter().zip(&grad).map(|(v, g)| v * g[1]).sum();
            }
            let [a1, a2] = self.sys().a(x);
            let mut flux = a1.matvec(&dx);
            a2.matvec_acc(&dy, 1.0, &mut flux);
            for c in 0..m {
                for i in 0..nk {
                    rhs[c * nk + i] += w * flux[c] * phi[i];
                }
            }
        }
        let mut psi = vec![0.0; ne];
        let mut trace = vec![0.0; m];
        let mut inner = vec![0.0; m];
        for (p, &e) in self.mesh().cell_edges(cell).iter().enumerate() {
            let normal = self.mesh().outward_normal(cell, e);
            let eb = self.edge_basis(e);
            let quad = edge_quadrature(self.mesh(), e, assembly_edge_exactness(self.degree()));
            for (x, w) in quad.iter() {
                basis.eval_into(x, &mut phi);
                eb.eval_into(x, &mut psi);
                eval_block(ub[p], &psi, &mut trace);
                eval_block(v0, &phi, &mut inner);
                for (t, v) in trace.iter_mut().zip(&inner) {
                    *t -= v;
                }
                let flux = self.sys().d_n(x, normal).matvec(&trace);
                for c in 0..m {
                    for i in 0..nk {
                        rhs[c * nk + i] += w * flux[c] * phi[i];
                    }
                }
            }
        }
        let mass_quad = cell_quadrature(self.mesh(), cell, 2 * self.degree())?;
        let proj = Projector::new(&basis, mass_quad)?;
        let mut out = Vec::with_capacity(m * nk);
        for c in 0..m {
            out.extend(proj.solve_mass(&rhs[c * nk..(c + 1) * nk]));
        }
        Ok(out)
    }

    /// Weak derivative of a global weak vector on one cell.
    pub fn weak_derivative(&self, v: &WeakVector, cell: usize) -> Result<Vec<f64>, AssemblyError> {
        let dofs = self.dofs();
        let ub: Vec<&[f64]> = self.mesh().cell_edges(cell).iter().map(|&e| v.edge(dofs, e)).collect();
        self.weak_derivative_cell(cell, v.cell(dofs, cell), &ub)
    }

    /// Calls `visit(sample, v⁰_K(x), vᵇ_e(x), w⁰_K(x), wᵇ_e(x))` at the edge
    /// quadrature points of every cell boundary and sums the results cell by cell.
    fn sum_over_cell_boundaries(
        &self,
        v: &WeakVector,
        w: &WeakVector,
        visit: &(dyn Fn(&TraceSample, &[f64], &[f64], &[f64], &[f64]) -> f64 + Sync),
    ) -> f64 {
        let dofs = self.dofs();
        let m = self.sys().m();
        let per_cell: Vec<f64> = (0..self.mesh().num_cells())
            .into_par_iter()
            .map(|cell| {
                let basis = self.cell_basis(cell);
                let mut phi = vec![0.0; cell_dim(self.degree())];
                let mut psi = vec![0.0; edge_dim(self.degree())];
                let (mut v0, mut vb, mut w0, mut wb) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
                let mut total = 0.0;
                for &e in self.mesh().cell_edges(cell) {
                    let normal = self.mesh().outward_normal(cell, e);
                    let boundary = self.mesh().edge(e).is_boundary();
                    let eb = self.edge_basis(e);
                    let quad = edge_quadrature(self.mesh(), e, assembly_edge_exactness(self.degree()));
                    for (x, wt) in quad.iter() {
                        basis.eval_into(x, &mut phi);
                        eb.eval_into(x, &mut psi);
                        eval_block(v.cell(dofs, cell), &phi, &mut v0);
                        eval_block(v.edge(dofs, e), &psi, &mut vb);
                        eval_block(w.cell(dofs, cell), &phi, &mut w0);
                        eval_block(w.edge(dofs, e), &psi, &mut wb);
                        let s = TraceSample {
                            w: wt,
                            x,
                            normal,
                            boundary,
                        };
                        total += visit(&s, &v0, &vb, &w0, &wb);
                    }
                }
                total
            })
            .collect();
        per_cell.iter().sum()
    }

    /// Sum over cells of `∫_K visit(x, v⁰(x), w⁰(x))`.
    fn sum_over_cells(
        &self,
        v: &WeakVector,
        w: &WeakVector,
        visit: &(dyn Fn(usize, Point, &[f64], &[f64]) -> f64 + Sync),
    ) -> Result<f64, AssemblyError> {
        let dofs = self.dofs();
        let m = self.sys().m();
        let per_cell = (0..self.mesh().num_cells())
            .into_par_iter()
            .map(|cell| {
                let basis = self.cell_basis(cell);
                let mut phi = vec![0.0; cell_dim(self.degree())];
                let (mut v0, mut w0) = (vec![0.0; m], vec![0.0; m]);
                let quad = cell_quadrature(self.mesh(), cell, assembly_cell_exactness(self.degree()))?;
                let mut total = 0.0;
                for (x, wt) in quad.iter() {
                    basis.eval_into(x, &mut phi);
                    eval_block(v.cell(dofs, cell), &phi, &mut v0);
                    eval_block(w.cell(dofs, cell), &phi, &mut w0);
                    total += wt * visit(cell, x, &v0, &w0);
                }
                Ok(total)
            })
            .collect::<Result<Vec<f64>, AssemblyError>>()?;
        Ok(per_cell.iter().sum())
    }

    /// `(a(w, v), s(w, v))` evaluated by quadrature from the weak derivative.
    pub fn energy_forms(&self, w: &WeakVector, v: &WeakVector) -> Result<(f64, f64), AssemblyError> {
        w.check(self.dofs())?;
        v.check(self.dofs())?;
        let grads = (0..self.mesh().num_cells())
            .into_par_iter()
            .map(|c| self.weak_derivative(w, c))
            .collect::<Result<Vec<_>, _>>()?;
        let m = self.sys().m();
        let nk = cell_dim(self.degree());
        let volume = self.sum_over_cells(v, w, &|cell, x, v0, w0| {
            let basis = self.cell_basis(cell);
            let phi = basis.eval(x);
            let mut g = vec![0.0; m];
            eval_block(&grads[cell][..m * nk], &phi, &mut g);
            dot(&g, v0) + bilinear(&self.sys().b(x), w0, v0)
        })?;
        let mu = self.sys().mu();
        let sys = self.sys();
        let mut boundary = 0.0;
        for e in self.mesh().boundary_edges() {
            let info = self.mesh().edge(e);
            let eb = self.edge_basis(e);
            let quad = edge_quadrature(self.mesh(), e, assembly_edge_exactness(self.degree()));
            let (mut vb, mut wb) = (vec![0.0; m], vec![0.0; m]);
            for (x, wt) in quad.iter() {
                let psi = eb.eval(x);
                eval_block(v.edge(self.dofs(), e), &psi, &mut vb);
                eval_block(w.edge(self.dofs(), e), &psi, &mut wb);
                let mut r = sys.m_bnd(x, info.normal);
                r.add_assign_scaled(&sys.d_n(x, info.normal), -1.0);
                boundary += wt * 0.5 * bilinear(&r, &wb, &vb);
            }
        }
        let stab = self.sum_over_cell_boundaries(v, w, &|s, v0, vb, w0, wb| {
            let dv: Vec<f64> = v0.iter().zip(vb).map(|(a, b)| a - b).collect();
            let dw: Vec<f64> = w0.iter().zip(wb).map(|(a, b)| a - b).collect();
            s.w * mu * dot(&dw, &dv)
        });
        Ok((volume + boundary, stab))
    }

    /// Right-hand side of the energy identity:
    /// `½(N v⁰, v⁰) + ⟨(μI − ½D_n)(v⁰ − vᵇ), v⁰ − vᵇ⟩_{∂T_h} + ½⟨M vᵇ, vᵇ⟩_{∂Ω}`
    /// with `N = B + Bᵀ − divA`.
    pub fn energy_identity_rhs(&self, v: &WeakVector) -> Result<f64, AssemblyError> {
        v.check(self.dofs())?;
        let sys = self.sys();
        let volume = self.sum_over_cells(v, v, &|_, x, v0, _| {
            let b = sys.b(x);
            let mut n = b.clone();
            n.add_assign_scaled(&b.transpose(), 1.0);
            n.add_assign_scaled(&sys.div_a(x), -1.0);
            0.5 * bilinear(&n, v0, v0)
        })?;
        let mu = sys.mu();
        let edges = self.sum_over_cell_boundaries(v, v, &|s, v0, vb, _, _| {
            let d: Vec<f64> = v0.iter().zip(vb).map(|(a, b)| a - b).collect();
            let mut op = DenseMatrix::identity(d.len()).scaled(mu);
            op.add_assign_scaled(&sys.d_n(s.x, s.normal), -0.5);
            let mut t = s.w * bilinear(&op, &d, &d);
            if s.boundary {
                t += s.w * 0.5 * bilinear(&sys.m_bnd(s.x, s.normal), vb, vb);
            }
            t
        });
        Ok(volume + edges)
    }

    /// Squared contributions `σ₀‖v⁰‖²`, `μ₀‖v⁰ - vᵇ‖²_{∂T_h}` and
    /// `½⟨Mvᵇ, vᵇ⟩_{∂Ω}` of the triple norm.
    pub fn triple_norm_parts(&self, v: &WeakVector) -> Result<TripleNormParts, AssemblyError> {
        v.check(self.dofs())?;
        let sys = self.sys();
        let (sigma0, mu0) = (sys.sigma0(), sys.mu0());
        let volume = self.sum_over_cells(v, v, &|_, _, v0, _| sigma0 * dot(v0, v0))?;
        let jump = self.sum_over_cell_boundaries(v, v, &|s, v0, vb, _, _| {
            let d: Vec<f64> = v0.iter().zip(vb).map(|(a, b)| a - b).collect();
            s.w * mu0 * dot(&d, &d)
        });
        let boundary = self.sum_over_cell_boundaries(v, v, &|s, _, vb, _, _| {
            if s.boundary {
                s.w * 0.5 * bilinear(&sys.m_bnd(s.x, s.normal), vb, vb)
            } else {
                0.0
            }
        });
        Ok(TripleNormParts { volume, jump, boundary })
    }

    /// `|||v|||² = σ₀‖v⁰‖² + μ₀‖v⁰ - vᵇ‖²_{∂T_h} + ½⟨Mvᵇ, vᵇ⟩_{∂Ω}`.
    pub fn triple_norm(&self, v: &WeakVector) -> Result<f64, AssemblyError> {
        Ok(self.triple_norm_parts(v)?.total().sqrt())
    }

    /// `(⟨D_n vᵇ, vᵇ⟩_{∂T_h}, ⟨D_n vᵇ, vᵇ⟩_{∂Ω})`; interior contributions cancel.
    pub fn boundary_fluxes(&self, v: &WeakVector) -> Result<(f64, f64), AssemblyError> {
        v.check(self.dofs())?;
        let sys = self.sys();
        let all = self.sum_over_cell_boundaries(v, v, &|s, _, vb, _, _| {
            s.w * bilinear(&sys.d_n(s.x, s.normal), vb, vb)
        });
        let outer = self.sum_over_cell_boundaries(v, v, &|s, _, vb, _, _| {
            if s.boundary {
                s.w * bilinear(&sys.d_n(s.x, s.normal), vb, vb)
            } else {
                0.0
            }
        });
        Ok((all, outer))
    }

    /// `(f, v⁰)` for the system's source.
    pub fn load(&self, v: &WeakVector) -> Result<f64, AssemblyError> {
        let sys = self.sys();
        self.sum_over_cells(v, v, &|_, x, v0, _| dot(&sys.f(x), v0))
    }
}
