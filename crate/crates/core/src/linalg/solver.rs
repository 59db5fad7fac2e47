//! Iterative solution of the (nonsymmetric) global systems.
//!
//! Restarted GMRES, right-preconditioned so the monitored residual is the
//! true residual of the unpreconditioned system. Preconditioners work on a
//! block partition of the unknowns; for the condensed operator the blocks are
//! the per-cell coefficient blocks.

use super::{DenseMatrix, LinalgError, LuFactors, SparseMatrix};

/// Contiguous index blocks `[offsets[i], offsets[i + 1])`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    offsets: Vec<usize>,
}

impl BlockPartition {
    pub fn uniform(n: usize, block: usize) -> Self {
        assert!(block > 0 && n.is_multiple_of(block), "block size must divide n");
        Self {
            offsets: (0..=n / block).map(|i| i * block).collect(),
        }
    }

    pub fn from_sizes(sizes: impl IntoIterator<Item = usize>) -> Self {
        let mut offsets = vec![0];
        for s in sizes {
            assert!(s > 0);
            offsets.push(offsets.last().unwrap() + s);
        }
        Self { offsets }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    fn block_of_index(&self) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for b in 0..self.len() {
            for i in self.range(b) {
                out[i] = b;
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PreconditionerKind {
    Identity,
    BlockJacobi,
    /// Incomplete block LU on the block sparsity pattern, no fill.
    BlockIlu0,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Relative residual target `|Ax - b| <= tol |b|`.
    pub tol: f64,
    pub restart: usize,
    pub max_iterations: usize,
    /// Systems with at most this many unknowns are solved by dense LU.
    pub dense_threshold: usize,
    pub preconditioner: PreconditionerKind,
    /// Block partition used by the preconditioner; point blocks when absent.
    pub blocks: Option<BlockPartition>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            restart: 60,
            max_iterations: 20_000,
            dense_threshold: 3000,
            preconditioner: PreconditionerKind::BlockIlu0,
            blocks: None,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub fn blocks(mut self, blocks: BlockPartition) -> Self {
        self.blocks = Some(blocks);
        self
    }

    pub fn preconditioner(mut self, kind: PreconditionerKind) -> Self {
        self.preconditioner = kind;
        self
    }

    pub fn dense_threshold(mut self, n: usize) -> Self {
        self.dense_threshold = n;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    DenseLu,
    Gmres,
}

#[derive(Clone, Debug)]
pub struct SolveStats {
    pub method: SolveMethod,
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = a.matvec(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    r
}

/// Solves `A x = b` to relative residual `opts.tol`.
pub fn solve_sparse(
    a: &SparseMatrix,
    b: &[f64],
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveStats), LinalgError> {
    if a.nrows() != a.ncols() {
        return Err(LinalgError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if b.len() != a.nrows() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.nrows(),
            found: b.len(),
        });
    }
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; b.len()],
            SolveStats {
                method: SolveMethod::Gmres,
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    if a.nrows() <= opts.dense_threshold {
        return solve_dense_path(a, b, bnorm, opts.tol);
    }
    let blocks = opts
        .blocks
        .clone()
        .unwrap_or_else(|| BlockPartition::uniform(a.nrows(), 1));
    if blocks.dim() != a.nrows() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.nrows(),
            found: blocks.dim(),
        });
    }
    let pc = Preconditioner::build(a, &blocks, opts.preconditioner);
    gmres(a, b, &pc, opts)
}

fn solve_dense_path(
    a: &SparseMatrix,
    b: &[f64],
    bnorm: f64,
    tol: f64,
) -> Result<(Vec<f64>, SolveStats), LinalgError> {
    let lu = a.to_dense().lu()?;
    let mut x = lu.solve(b);
    let mut r = residual(a, &x, b);
    let mut rel = norm(&r) / bnorm;
    let mut steps = 0;
    // a few rounds of iterative refinement
    while rel > tol && steps < 3 {
        let dx = lu.solve(&r);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        r = residual(a, &x, b);
        rel = norm(&r) / bnorm;
        steps += 1;
    }
    if rel > tol {
        return Err(LinalgError::NotConverged {
            iterations: steps,
            relative_residual: rel,
        });
    }
    Ok((
        x,
        SolveStats {
            method: SolveMethod::DenseLu,
            iterations: steps,
            relative_residual: rel,
        },
    ))
}

enum Preconditioner {
    Identity,
    BlockJacobi {
        blocks: BlockPartition,
        factors: Vec<Option<LuFactors>>,
    },
    BlockIlu(BlockIlu),
}

impl Preconditioner {
    fn build(a: &SparseMatrix, blocks: &BlockPartition, kind: PreconditionerKind) -> Self {
        match kind {
            PreconditionerKind::Identity => Preconditioner::Identity,
            PreconditionerKind::BlockJacobi => {
                let factors = (0..blocks.len())
                    .map(|bi| {
                        let r = blocks.range(bi);
                        let d = DenseMatrix::from_fn(r.len(), r.len(), |i, j| {
                            a.get(r.start + i, r.start + j)
                        });
                        // singular blocks fall back to the identity
                        d.lu().ok()
                    })
                    .collect();
                Preconditioner::BlockJacobi {
                    blocks: blocks.clone(),
                    factors,
                }
            }
            PreconditionerKind::BlockIlu0 => Preconditioner::BlockIlu(BlockIlu::factor(a, blocks)),
        }
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        match self {
            Preconditioner::Identity => r.to_vec(),
            Preconditioner::BlockJacobi { blocks, factors } => {
                let mut z = r.to_vec();
                for (bi, f) in factors.iter().enumerate() {
                    if let Some(lu) = f {
                        lu.solve_in_place(&mut z[blocks.range(bi)]);
                    }
                }
                z
            }
            Preconditioner::BlockIlu(ilu) => ilu.apply(r),
        }
    }
}

/// Block ILU(0): lower blocks hold `L_IK`, upper blocks hold `U_IJ`, and the
/// diagonal is kept as an explicit inverse.
struct BlockIlu {
    blocks: BlockPartition,
    rows: Vec<Vec<(usize, DenseMatrix)>>,
    diag_pos: Vec<usize>,
    diag_inv: Vec<DenseMatrix>,
}

impl BlockIlu {
    fn factor(a: &SparseMatrix, blocks: &BlockPartition) -> Self {
        let nb = blocks.len();
        let block_of = blocks.block_of_index();
        let mut rows: Vec<Vec<(usize, DenseMatrix)>> = Vec::with_capacity(nb);
        let mut diag_pos = Vec::with_capacity(nb);
        for bi in 0..nb {
            let r = blocks.range(bi);
            let mut cols: Vec<usize> = vec![bi];
            for i in r.clone() {
                let (c, _) = a.row(i);
                cols.extend(c.iter().map(|&c| block_of[c]));
            }
            cols.sort_unstable();
            cols.dedup();
            let mut row: Vec<(usize, DenseMatrix)> = cols
                .iter()
                .map(|&bj| (bj, DenseMatrix::zeros(r.len(), blocks.range(bj).len())))
                .collect();
            for (li, i) in r.clone().enumerate() {
                let (c, v) = a.row(i);
                for (&col, &val) in c.iter().zip(v) {
                    let bj = block_of[col];
                    let pos = cols.binary_search(&bj).unwrap();
                    let off = blocks.range(bj).start;
                    row[pos].1[(li, col - off)] = val;
                }
            }
            diag_pos.push(cols.binary_search(&bi).unwrap());
            rows.push(row);
        }

        let mut diag_inv: Vec<DenseMatrix> = Vec::with_capacity(nb);
        for bi in 0..nb {
            let mut row = std::mem::take(&mut rows[bi]);
            let dp = diag_pos[bi];
            for p in 0..dp {
                let bk = row[p].0;
                let l = row[p].1.matmul(&diag_inv[bk]);
                for (bj, ukj) in rows[bk].iter().filter(|(bj, _)| *bj > bk) {
                    if let Ok(q) = row.binary_search_by_key(bj, |e| e.0) {
                        let upd = l.matmul(ukj);
                        row[q].1.add_assign_scaled(&upd, -1.0);
                    }
                }
                row[p].1 = l;
            }
            let d = &row[dp].1;
            let inv = match d.lu() {
                Ok(lu) => lu.solve_matrix(&DenseMatrix::identity(d.rows())),
                Err(_) => DenseMatrix::identity(d.rows()),
            };
            diag_inv.push(inv);
            rows[bi] = row;
        }
        Self {
            blocks: blocks.clone(),
            rows,
            diag_pos,
            diag_inv,
        }
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let nb = self.blocks.len();
        let mut y = r.to_vec();
        for bi in 0..nb {
            let ri = self.blocks.range(bi);
            let mut acc = y[ri.clone()].to_vec();
            for (bk, l) in &self.rows[bi][..self.diag_pos[bi]] {
                l.matvec_acc(&y[self.blocks.range(*bk)], -1.0, &mut acc);
            }
            y[ri].copy_from_slice(&acc);
        }
        let mut x = vec![0.0; r.len()];
        for bi in (0..nb).rev() {
            let ri = self.blocks.range(bi);
            let mut acc = y[ri.clone()].to_vec();
            for (bj, u) in &self.rows[bi][self.diag_pos[bi] + 1..] {
                u.matvec_acc(&x[self.blocks.range(*bj)], -1.0, &mut acc);
            }
            let xi = self.diag_inv[bi].matvec(&acc);
            x[ri].copy_from_slice(&xi);
        }
        x
    }
}

fn gmres(
    a: &SparseMatrix,
    b: &[f64],
    pc: &Preconditioner,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveStats), LinalgError> {
    let n = b.len();
    let m = opts.restart.max(1);
    let bnorm = norm(b);
    let target = opts.tol * bnorm;
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut beta = bnorm;
    let mut iterations = 0;

    while beta > target {
        if iterations >= opts.max_iterations {
            return Err(LinalgError::NotConverged {
                iterations,
                relative_residual: beta / bnorm,
            });
        }
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        v.push(r.iter().map(|ri| ri / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && iterations < opts.max_iterations {
            let zk = pc.apply(&v[k]);
            let mut w = a.matvec(&zk);
            z.push(zk);
            // modified Gram-Schmidt, two passes
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let hij = dot(&w, vi);
                    h[i][k] += hij;
                    for (wj, vj) in w.iter_mut().zip(vi) {
                        *wj -= hij * vj;
                    }
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / denom;
                sn[k] = h[k + 1][k] / denom;
            }
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k += 1;
            if g[k].abs() <= target || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        // back substitution on the k x k triangle
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = ((i + 1)..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = if h[i][i] != 0.0 { (g[i] - s) / h[i][i] } else { 0.0 };
        }
        for (yi, zi) in y.iter().zip(&z) {
            for (xj, zj) in x.iter_mut().zip(zi) {
                *xj += yi * zj;
            }
        }
        r = residual(a, &x, b);
        let new_beta = norm(&r);
        if new_beta > target && new_beta >= beta * (1.0 - 1e-9) {
            return Err(LinalgError::NotConverged {
                iterations,
                relative_residual: new_beta / bnorm,
            });
        }
        beta = new_beta;
    }
    Ok((
        x,
        SolveStats {
            method: SolveMethod::Gmres,
            iterations,
            relative_residual: beta / bnorm,
        },
    ))
}
