//! Dense LU with a reciprocal condition estimate.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{c64, Mat, MatMut, MatRef};

use super::SolveError;

/// Partial-pivoting LU of a dense square matrix together with a 1-norm
/// reciprocal condition estimate.
pub struct DenseLu {
    lu: PartialPivLu<c64>,
    rcond: f64,
}

#[derive(Clone, Debug)]
pub struct DenseSolution {
    pub x: Vec<c64>,
    pub rcond: f64,
}

fn norm1(a: MatRef<'_, c64>) -> f64 {
    (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

impl DenseLu {
    /// Factors `a`; numerically singular matrices (reciprocal condition below
    /// machine epsilon) are rejected.
    pub fn new(a: MatRef<'_, c64>) -> Result<Self, SolveError> {
        if a.nrows() != a.ncols() {
            return Err(SolveError::NotSquare { nrows: a.nrows(), ncols: a.ncols() });
        }
        let n = a.nrows();
        let anorm = norm1(a);
        if n == 0 {
            return Ok(Self { lu: PartialPivLu::new(a), rcond: 1.0 });
        }
        if !anorm.is_finite() {
            return Err(SolveError::NonFinite);
        }
        let lu = PartialPivLu::new(a);
        let u = lu.U();
        let zero_pivot = (0..n).any(|i| u[(i, i)].norm() == 0.0);
        let rcond = if zero_pivot || anorm == 0.0 {
            0.0
        } else {
            let inv_norm = estimate_inverse_norm1(&lu, n);
            if inv_norm.is_finite() {
                1.0 / (anorm * inv_norm)
            } else {
                0.0
            }
        };
        if !(rcond >= f64::EPSILON) {
            return Err(SolveError::Singular {
                eta: None,
                detail: format!("dense matrix has reciprocal condition estimate {rcond:.3e}"),
            });
        }
        Ok(Self { lu, rcond })
    }

    pub fn dim(&self) -> usize {
        self.lu.U().nrows()
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    pub fn solve_in_place(&self, rhs: MatMut<'_, c64>) -> Result<(), SolveError> {
        if rhs.nrows() != self.dim() {
            return Err(SolveError::DimensionMismatch { expected: self.dim(), found: rhs.nrows() });
        }
        self.lu.solve_in_place(rhs);
        Ok(())
    }

    pub fn solve(&self, rhs: &[c64]) -> Result<Vec<c64>, SolveError> {
        let mut b = Mat::<c64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        self.solve_in_place(b.as_mut())?;
        Ok((0..rhs.len()).map(|i| b[(i, 0)]).collect())
    }
}

/// Hager's estimate of `||A^{-1}||_1`, with Higham's alternating-sign test vector.
fn estimate_inverse_norm1(lu: &PartialPivLu<c64>, n: usize) -> f64 {
    let column = |v: &[c64]| Mat::<c64>::from_fn(n, 1, |i, _| v[i]);
    let vec_of = |m: &Mat<c64>| (0..n).map(|i| m[(i, 0)]).collect::<Vec<_>>();
    let solve = |v: &[c64]| {
        let mut b = column(v);
        lu.solve_in_place(b.as_mut());
        vec_of(&b)
    };
    // A^H z = v  <=>  A^T conj(z) = conj(v)
    let solve_adjoint = |v: &[c64]| {
        let conj: Vec<c64> = v.iter().map(|z| z.conj()).collect();
        let mut b = column(&conj);
        lu.solve_transpose_in_place(b.as_mut());
        vec_of(&b).into_iter().map(|z| z.conj()).collect::<Vec<_>>()
    };
    let l1 = |v: &[c64]| v.iter().map(|z| z.norm()).sum::<f64>();

    let mut x = vec![c64::new(1.0 / n as f64, 0.0); n];
    let mut estimate = 0.0;
    let mut last_j = usize::MAX;
    for iter in 0..5 {
        let y = solve(&x);
        let norm = l1(&y);
        if iter > 0 && norm <= estimate {
            break;
        }
        estimate = norm;
        let xi: Vec<c64> = y.iter().map(|z| if z.norm() == 0.0 { c64::new(1.0, 0.0) } else { z / z.norm() }).collect();
        let z = solve_adjoint(&xi);
        let (j, zmax) =
            z.iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
        if iter > 0 && (zmax <= ztx || j == last_j) {
            break;
        }
        last_j = j;
        x = vec![c64::new(0.0, 0.0); n];
        x[j] = c64::new(1.0, 0.0);
    }
    let alt: Vec<c64> = (0..n)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
            c64::new(sign * (1.0 + i as f64 / denom), 0.0)
        })
        .collect();
    let alt_estimate = 2.0 * l1(&solve(&alt)) / (3.0 * n as f64);
    estimate.max(alt_estimate)
}

/// Solves a dense square system by partial-pivoting LU and reports the
/// reciprocal condition estimate.
pub fn dense_solve(matrix: MatRef<'_, c64>, rhs: &[c64]) -> Result<DenseSolution, SolveError> {
    if matrix.nrows() != rhs.len() {
        return Err(SolveError::DimensionMismatch { expected: matrix.nrows(), found: rhs.len() });
    }
    let lu = DenseLu::new(matrix)?;
    let x = lu.solve(rhs)?;
    Ok(DenseSolution { x, rcond: lu.rcond })
}
