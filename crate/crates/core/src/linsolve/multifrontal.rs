//! Multifrontal LU for complex matrices with a structurally symmetric pattern.
//!
//! Each supernode's frontal matrix holds its pivot rows and columns followed by
//! the not-yet-eliminated indices they couple to. Pivoting is partial and
//! confined to the pivot block of each front. The symbolic phase depends only
//! on the pattern and is shared by all numeric factorizations with it.

use std::sync::Arc;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::lu::partial_pivoting::factor::{lu_in_place, lu_in_place_scratch};
use faer::linalg::matmul::matmul;
use faer::linalg::triangular_solve::{solve_unit_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{c64, Accum, Mat, MatMut, MatRef, Par};

use super::ordering::{assembly_tree, Supernode};
use super::SolveError;
use crate::sparse::{CsrMatrix, SparsityPattern};

#[derive(Debug)]
struct SymbolicNode {
    pivots: Vec<usize>,
    update: Vec<usize>,
    children: Vec<usize>,
    start: usize,
}

/// Pattern-dependent part of the factorization: the assembly tree, the
/// elimination order and the index sets of every frontal matrix.
#[derive(Debug)]
pub struct SymbolicFactorization {
    pattern: Arc<SparsityPattern>,
    transpose: Vec<usize>,
    position: Vec<usize>,
    nodes: Vec<SymbolicNode>,
    trailing: usize,
}

impl SymbolicFactorization {
    /// Analyzes a square, structurally symmetric pattern. The last `trailing`
    /// indices are eliminated after all others, in their natural order.
    pub fn analyze(pattern: Arc<SparsityPattern>, trailing: usize) -> Result<Self, SolveError> {
        let n = pattern.nrows();
        if pattern.ncols() != n {
            return Err(SolveError::NotSquare { nrows: n, ncols: pattern.ncols() });
        }
        if trailing > n {
            return Err(SolveError::DimensionMismatch { expected: n, found: trailing });
        }
        if !pattern.is_structurally_symmetric() {
            return Err(SolveError::UnsymmetricPattern);
        }
        let transpose = pattern.transpose_positions();
        let tree = assembly_tree(&pattern, trailing);

        let mut position = vec![usize::MAX; n];
        let mut next = 0;
        let mut starts = Vec::with_capacity(tree.len());
        for node in &tree {
            starts.push(next);
            for &v in &node.pivots {
                position[v] = next;
                next += 1;
            }
        }
        debug_assert_eq!(next, n);

        let mut nodes: Vec<SymbolicNode> = Vec::with_capacity(tree.len());
        let mut mark = vec![usize::MAX; n];
        for (id, Supernode { pivots, children }) in tree.into_iter().enumerate() {
            let start = starts[id];
            let end = start + pivots.len();
            let mut update = Vec::new();
            let mut visit = |w: usize, update: &mut Vec<usize>| {
                if position[w] >= end && mark[w] != id {
                    mark[w] = id;
                    update.push(w);
                }
            };
            for &v in &pivots {
                for &w in pattern.row(v) {
                    visit(w, &mut update);
                }
            }
            for &c in &children {
                for &w in &nodes[c].update {
                    visit(w, &mut update);
                }
            }
            update.sort_unstable_by_key(|&w| position[w]);
            nodes.push(SymbolicNode { pivots, update, children, start });
        }
        Ok(Self { pattern, transpose, position, nodes, trailing })
    }

    pub fn dim(&self) -> usize {
        self.pattern.nrows()
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn trailing(&self) -> usize {
        self.trailing
    }

    /// Number of entries in the L and U factors, counting the dense pivot
    /// blocks in full.
    pub fn factor_entries(&self) -> usize {
        self.nodes
            .iter()
            .map(|s| {
                let p = s.pivots.len();
                p * p + 2 * p * s.update.len()
            })
            .sum()
    }
}

struct FrontFactor {
    /// Row-permuted LU of the pivot block followed by `F_PP^{-1} F_PU`.
    lu_x: Mat<c64>,
    /// Coupling block `F_UP`.
    coupling: Mat<c64>,
    perm: Vec<usize>,
}

/// Numeric factorization sharing a [`SymbolicFactorization`].
pub struct Factorization {
    symbolic: Arc<SymbolicFactorization>,
    fronts: Vec<FrontFactor>,
    pivot_range: (f64, f64),
}

/// Dense Schur complement onto the trailing indices.
pub struct SchurComplement {
    pub matrix: Mat<c64>,
    /// Ratio of largest to smallest pivot modulus over the eliminated block.
    pub cond_estimate: f64,
}

struct PivotStats {
    min: f64,
    max: f64,
    threshold: f64,
}

impl PivotStats {
    fn new(matrix: &CsrMatrix<c64>) -> Self {
        let scale = matrix.values().iter().fold(0.0f64, |m, v| m.max(v.norm()));
        Self { min: f64::INFINITY, max: 0.0, threshold: f64::EPSILON * scale }
    }

    fn record(&mut self, lu: MatRef<'_, c64>) -> Result<(), SolveError> {
        for i in 0..lu.nrows() {
            let d = lu[(i, i)].norm();
            if !(d > self.threshold) {
                return Err(SolveError::Singular {
                    eta: None,
                    detail: format!("pivot modulus {d:.3e} at or below {:.3e}", self.threshold),
                });
            }
            self.min = self.min.min(d);
            self.max = self.max.max(d);
        }
        Ok(())
    }
}

/// Assembles the frontal matrix of `node`: original entries of its pivot rows
/// and columns plus the update matrices of its children.
fn assemble_front(
    sym: &SymbolicFactorization,
    id: usize,
    matrix: &CsrMatrix<c64>,
    updates: &mut [Option<Mat<c64>>],
    local: &mut [usize],
) -> Mat<c64> {
    let node = &sym.nodes[id];
    let p = node.pivots.len();
    let size = p + node.update.len();
    for (i, &v) in node.pivots.iter().chain(&node.update).enumerate() {
        local[v] = i;
    }
    let mut front = Mat::<c64>::zeros(size, size);
    let pattern = &sym.pattern;
    let values = matrix.values();
    let end = node.start + p;
    for (i, &v) in node.pivots.iter().enumerate() {
        for k in pattern.row_ptr()[v]..pattern.row_ptr()[v + 1] {
            let w = pattern.col_idx()[k];
            let pos = sym.position[w];
            if pos < node.start {
                continue;
            }
            let lw = local[w];
            front[(i, lw)] += values[k];
            if pos >= end {
                front[(lw, i)] += values[sym.transpose[k]];
            }
        }
    }
    for &c in &node.children {
        let child = updates[c].take().expect("child update consumed once");
        let indices = &sym.nodes[c].update;
        for (b, &wb) in indices.iter().enumerate() {
            let column = front.col_as_slice_mut(local[wb]);
            for (a, &wa) in indices.iter().enumerate() {
                column[local[wa]] += child[(a, b)];
            }
        }
    }
    front
}

/// Factors the pivot block of `front` in place, overwrites the upper-right
/// block with `F_PP^{-1} F_PU` and the lower-right block with the Schur
/// update. Returns the row permutation of the pivot block.
fn partial_factor(front: MatMut<'_, c64>, p: usize, stats: &mut PivotStats) -> Result<Vec<usize>, SolveError> {
    let (mut pp, mut pu, up, mut uu) = front.split_at_mut(p, p);
    let mut fwd = vec![0usize; p];
    let mut bwd = vec![0usize; p];
    let mut buffer = MemBuffer::new(lu_in_place_scratch::<usize, c64>(p, p, Par::Seq, Default::default()));
    lu_in_place(pp.as_mut(), &mut fwd, &mut bwd, Par::Seq, MemStack::new(&mut buffer), Default::default());
    stats.record(pp.as_ref())?;
    if pu.ncols() > 0 {
        permute_rows(pu.as_mut(), &fwd);
        solve_unit_lower_triangular_in_place(pp.as_ref(), pu.as_mut(), Par::Seq);
        solve_upper_triangular_in_place(pp.as_ref(), pu.as_mut(), Par::Seq);
        matmul(uu.as_mut(), Accum::Add, up.as_ref(), pu.as_ref(), c64::new(-1.0, 0.0), Par::Seq);
    }
    Ok(fwd)
}

fn permute_rows(mut m: MatMut<'_, c64>, fwd: &[usize]) {
    let mut tmp = vec![c64::new(0.0, 0.0); fwd.len()];
    for j in 0..m.ncols() {
        for (i, &src) in fwd.iter().enumerate() {
            tmp[i] = m[(src, j)];
        }
        for (i, &t) in tmp.iter().enumerate() {
            m[(i, j)] = t;
        }
    }
}

fn check_matrix(sym: &SymbolicFactorization, matrix: &CsrMatrix<c64>) -> Result<(), SolveError> {
    if !Arc::ptr_eq(matrix.pattern(), &sym.pattern) && **matrix.pattern() != *sym.pattern {
        return Err(SolveError::PatternMismatch);
    }
    Ok(())
}

impl Factorization {
    /// Numeric factorization of `matrix`, whose pattern must be the analyzed one.
    pub fn new(sym: &Arc<SymbolicFactorization>, matrix: &CsrMatrix<c64>) -> Result<Self, SolveError> {
        check_matrix(sym, matrix)?;
        let n = sym.dim();
        let mut stats = PivotStats::new(matrix);
        let mut updates: Vec<Option<Mat<c64>>> = (0..sym.nodes.len()).map(|_| None).collect();
        let mut local = vec![0usize; n];
        let mut fronts = Vec::with_capacity(sym.nodes.len());
        for id in 0..sym.nodes.len() {
            let mut front = assemble_front(sym, id, matrix, &mut updates, &mut local);
            let p = sym.nodes[id].pivots.len();
            let perm = partial_factor(front.as_mut(), p, &mut stats)?;
            let size = front.nrows();
            updates[id] = Some(front.as_ref().submatrix(p, p, size - p, size - p).to_owned());
            fronts.push(FrontFactor {
                lu_x: front.as_ref().submatrix(0, 0, p, size).to_owned(),
                coupling: front.as_ref().submatrix(p, 0, size - p, p).to_owned(),
                perm,
            });
        }
        let pivot_range = if n == 0 { (1.0, 1.0) } else { (stats.min, stats.max) };
        Ok(Self { symbolic: sym.clone(), fronts, pivot_range })
    }

    pub fn dim(&self) -> usize {
        self.symbolic.dim()
    }

    /// Ratio of the largest to the smallest pivot modulus.
    pub fn cond_estimate(&self) -> f64 {
        self.pivot_range.1 / self.pivot_range.0
    }

    /// Solves `A X = B` for every column of `rhs`, in place.
    pub fn solve_in_place(&self, mut rhs: MatMut<'_, c64>) -> Result<(), SolveError> {
        if rhs.nrows() != self.dim() {
            return Err(SolveError::DimensionMismatch { expected: self.dim(), found: rhs.nrows() });
        }
        let k = rhs.ncols();
        let nodes = &self.symbolic.nodes;
        for (node, front) in nodes.iter().zip(&self.fronts) {
            let p = node.pivots.len();
            let mut y = Mat::<c64>::from_fn(p, k, |i, j| rhs[(node.pivots[front.perm[i]], j)]);
            let lu = front.lu_x.as_ref().submatrix(0, 0, p, p);
            solve_unit_lower_triangular_in_place(lu, y.as_mut(), Par::Seq);
            solve_upper_triangular_in_place(lu, y.as_mut(), Par::Seq);
            for j in 0..k {
                for (i, &v) in node.pivots.iter().enumerate() {
                    rhs[(v, j)] = y[(i, j)];
                }
            }
            if !node.update.is_empty() {
                let mut t = Mat::<c64>::zeros(node.update.len(), k);
                matmul(t.as_mut(), Accum::Replace, front.coupling.as_ref(), y.as_ref(), c64::new(1.0, 0.0), Par::Seq);
                for j in 0..k {
                    for (a, &w) in node.update.iter().enumerate() {
                        rhs[(w, j)] -= t[(a, j)];
                    }
                }
            }
        }
        for (node, front) in nodes.iter().zip(&self.fronts).rev() {
            let p = node.pivots.len();
            let u = node.update.len();
            if u == 0 {
                continue;
            }
            let xu = Mat::<c64>::from_fn(u, k, |a, j| rhs[(node.update[a], j)]);
            let x = front.lu_x.as_ref().submatrix(0, p, p, u);
            let mut t = Mat::<c64>::zeros(p, k);
            matmul(t.as_mut(), Accum::Replace, x, xu.as_ref(), c64::new(1.0, 0.0), Par::Seq);
            for j in 0..k {
                for (i, &v) in node.pivots.iter().enumerate() {
                    rhs[(v, j)] -= t[(i, j)];
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, rhs: &[c64]) -> Result<Vec<c64>, SolveError> {
        if rhs.len() != self.dim() {
            return Err(SolveError::DimensionMismatch { expected: self.dim(), found: rhs.len() });
        }
        let mut b = Mat::<c64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        self.solve_in_place(b.as_mut())?;
        Ok((0..rhs.len()).map(|i| b[(i, 0)]).collect())
    }
}

/// Eliminates every index except the trailing ones and returns the dense Schur
/// complement on the trailing block. No factors are kept.
pub fn schur_complement(sym: &SymbolicFactorization, matrix: &CsrMatrix<c64>) -> Result<SchurComplement, SolveError> {
    check_matrix(sym, matrix)?;
    if sym.trailing == 0 {
        return Err(SolveError::DimensionMismatch { expected: 1, found: 0 });
    }
    let mut stats = PivotStats::new(matrix);
    let mut updates: Vec<Option<Mat<c64>>> = (0..sym.nodes.len()).map(|_| None).collect();
    let mut local = vec![0usize; sym.dim()];
    let root = sym.nodes.len() - 1;
    for id in 0..root {
        let mut front = assemble_front(sym, id, matrix, &mut updates, &mut local);
        let p = sym.nodes[id].pivots.len();
        partial_factor(front.as_mut(), p, &mut stats)?;
        let size = front.nrows();
        updates[id] = Some(front.as_ref().submatrix(p, p, size - p, size - p).to_owned());
    }
    let matrix = assemble_front(sym, root, matrix, &mut updates, &mut local);
    let cond_estimate = if stats.max > 0.0 { stats.max / stats.min } else { 1.0 };
    Ok(SchurComplement { matrix, cond_estimate })
}
