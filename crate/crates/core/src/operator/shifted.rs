//! Solves with `T(eta)` at many nearby parameters from one sparse
//! factorization.
//!
//! `T(eta)^{-1} f` is recovered from the coupled matrix `P(eta) = K - eta M`
//! on the unknowns `(u_1 interior, u_0 interior, shared boundary trace)`: its
//! rows are the interior equations of both media, the free-space block
//! negated, and the difference of their boundary equations. `P` is complex
//! symmetric and singular exactly where `T` is.
//!
//! With `P_c = P(eta_c)` factored once, `P(eta) = P_c (I - s B)` where
//! `s = eta - eta_c` and `B = P_c^{-1} M`. Krylov spaces of `B` are invariant
//! under the shift, so a single block Arnoldi run yields minimal-residual
//! solutions for every `s` at once.

use std::sync::Arc;

use faer::linalg::solvers::SolveLstsq;
use faer::{c64, Col, Mat, MatRef};
use rayon::prelude::*;

use super::{Medium, OperatorError, TransmissionOperator};
use crate::assembly::DiscreteSystem;
use crate::linsolve::{Factorization, SolveError, SymbolicFactorization};
use crate::sparse::{CsrMatrix, SparsityPattern};

/// Largest Krylov dimension before unconverged parameters fall back to
/// direct solves.
pub const MAX_KRYLOV: usize = 60;
/// Relative least-squares residual accepted in the preconditioned system.
const KRYLOV_TOL: f64 = 1e-12;
/// Componentwise backward error accepted for the unpreconditioned system.
const BACKWARD_TOL: f64 = 1e-11;
const CHECK_EVERY: usize = 4;

pub(super) struct CoupledPencil {
    k: CsrMatrix<f64>,
    m: CsrMatrix<f64>,
    k_abs: CsrMatrix<f64>,
    m_abs: CsrMatrix<f64>,
    symbolic: Arc<SymbolicFactorization>,
}

impl CoupledPencil {
    pub(super) fn new(sys: &DiscreteSystem) -> Result<Self, SolveError> {
        let ni = sys.boundary_offset();
        let size = 2 * ni + sys.n_b();
        let map1 = |d: usize| if d < ni { d } else { ni + d };
        let map0 = |d: usize| ni + d;
        let pattern = sys.a1.pattern();
        let mut rows = vec![Vec::new(); size];
        for i in 0..sys.n() {
            for &j in pattern.row(i) {
                rows[map1(i)].push(map1(j));
                rows[map0(i)].push(map0(j));
            }
        }
        let coupled = Arc::new(SparsityPattern::from_rows(size, rows));
        let mut k = CsrMatrix::<f64>::zeros(coupled.clone());
        let mut m = CsrMatrix::<f64>::zeros(coupled.clone());
        for ((i, j, a1), ((_, _, a0), ((_, _, mn), (_, _, mm)))) in
            sys.a1.triplets().zip(sys.a0.triplets().zip(sys.mn.triplets().zip(sys.m.triplets())))
        {
            k.add(map1(i), map1(j), a1);
            m.add(map1(i), map1(j), mn);
            // free-space contributions enter with a minus sign
            k.add(map0(i), map0(j), -a0);
            m.add(map0(i), map0(j), -mm);
        }
        let symbolic = Arc::new(SymbolicFactorization::analyze(coupled.clone(), 0)?);
        let abs =
            |a: &CsrMatrix<f64>| CsrMatrix::from_values(coupled.clone(), a.values().iter().map(|v| v.abs()).collect());
        Ok(Self { k_abs: abs(&k), m_abs: abs(&m), k, m, symbolic })
    }

    pub(super) fn dim(&self) -> usize {
        self.k.nrows()
    }

    pub(super) fn at(&self, eta: c64) -> CsrMatrix<c64> {
        let values = self.k.values().iter().zip(self.m.values()).map(|(&k, &m)| c64::new(k, 0.0) - eta * m).collect();
        CsrMatrix::from_values(self.k.pattern().clone(), values)
    }

    pub(super) fn factorize(&self, eta: c64) -> Result<Factorization, SolveError> {
        Factorization::new(&self.symbolic, &self.at(eta)).map_err(|e| e.at_eta(eta))
    }

    /// `|r| / (|K||z| + |eta||M||z| + |b|)` in the 2-norm.
    fn backward_error(&self, eta: c64, z: &[c64], b: &[c64]) -> f64 {
        let kz = self.k.mul_vec(z);
        let mz = self.m.mul_vec(z);
        let za: Vec<f64> = z.iter().map(|v| v.norm()).collect();
        let kza = self.k_abs.mul_vec(&za);
        let mza = self.m_abs.mul_vec(&za);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..z.len() {
            num += (b[i] - kz[i] + eta * mz[i]).norm_sqr();
            den += (kza[i] + eta.norm() * mza[i] + b[i].norm()).powi(2);
        }
        if den == 0.0 {
            0.0
        } else {
            (num / den).sqrt()
        }
    }
}

/// Outcome of [`TransmissionOperator::solve_shifted`].
pub struct ShiftedSolve {
    /// `T(eta_i)^{-1} F` for each requested parameter.
    pub results: Vec<Result<Mat<c64>, OperatorError>>,
    /// Dimension of the Krylov space that was built.
    pub krylov_dim: usize,
    /// Parameters that needed a direct solve.
    pub fallbacks: usize,
}

/// Orthogonalizes `w` against the first `k` columns of `v` twice and returns
/// the accumulated coefficients.
fn orthogonalize(v: MatRef<'_, c64>, k: usize, w: &mut Col<c64>) -> Col<c64> {
    let basis = v.subcols(0, k);
    let mut h = Col::<c64>::zeros(k);
    for _ in 0..2 {
        let c = basis.adjoint() * &*w;
        *w -= basis * &c;
        h += &c;
    }
    h
}

impl TransmissionOperator {
    /// Solves `T(eta_i) X_i = F` for every `eta_i` using one factorization of
    /// the coupled matrix at `anchor`. Parameters whose Krylov solution does
    /// not reach near machine accuracy are solved directly instead, so every
    /// result meets the same accuracy contract as [`TransmissionOperator::resolvent`].
    pub fn solve_shifted(&self, anchor: c64, etas: &[c64], f: MatRef<'_, c64>) -> ShiftedSolve {
        if let Err(e) = self.check_boundary(f.nrows()) {
            return ShiftedSolve {
                results: etas.iter().map(|_| Err(e.clone())).collect(),
                krylov_dim: 0,
                fallbacks: 0,
            };
        }
        let (mut results, krylov_dim) = match self.krylov_solves(anchor, etas, f) {
            Ok(r) => r,
            Err(_) => (etas.iter().map(|_| None).collect(), 0),
        };
        let missing: Vec<usize> = (0..etas.len()).filter(|&i| results[i].is_none()).collect();
        let direct: Vec<Result<Mat<c64>, OperatorError>> =
            missing.par_iter().map(|&i| self.resolvent(etas[i]).and_then(|r| r.apply(f))).collect();
        let fallbacks = missing.len();
        for (i, r) in missing.into_iter().zip(direct) {
            results[i] = Some(r);
        }
        ShiftedSolve { results: results.into_iter().map(|r| r.expect("filled")).collect(), krylov_dim, fallbacks }
    }

    #[allow(clippy::type_complexity)]
    fn krylov_solves(
        &self,
        anchor: c64,
        etas: &[c64],
        f: MatRef<'_, c64>,
    ) -> Result<(Vec<Option<Result<Mat<c64>, OperatorError>>>, usize), OperatorError> {
        let sys = &self.sys;
        let pencil = &self.coupled;
        let ni = sys.boundary_offset();
        let nb = sys.n_b();
        let n = sys.n();
        let dim = pencil.dim();
        let cols = f.ncols();
        let zero = c64::new(0.0, 0.0);

        let mut g = f.to_owned();
        sys.solve_boundary_mass(&mut g);
        // right sides are affine in eta: b(eta) = b_c + s b_1
        let mut starts = Mat::<c64>::zeros(dim, 2 * cols);
        let place = |y: &[c64], out: &mut Mat<c64>, col: usize, sign: f64| {
            for i in 0..ni {
                out[(i, col)] = y[i] * sign;
            }
            for s in 0..nb {
                out[(2 * ni + s, col)] = y[ni + s] * sign;
            }
        };
        for j in 0..cols {
            let mut ext = vec![zero; n];
            for s in 0..nb {
                ext[ni + s] = g[(s, j)];
            }
            let yc = self.robin_apply(Medium::Anisotropic, anchor, &ext);
            let y1 = sys.mn.mul_vec(&ext);
            place(&yc, &mut starts, j, -1.0);
            place(&y1, &mut starts, cols + j, 1.0);
        }
        let rhs_c: Vec<Vec<c64>> = (0..cols).map(|j| starts.col(j).iter().copied().collect()).collect();
        let rhs_1: Vec<Vec<c64>> = (0..cols).map(|j| starts.col(cols + j).iter().copied().collect()).collect();

        let fact = pencil.factorize(anchor)?;
        fact.solve_in_place(starts.as_mut())?;

        // block Arnoldi; column p of `h` holds B v_p in the basis
        let capacity = MAX_KRYLOV + 2 * cols;
        let mut v = Mat::<c64>::zeros(dim, capacity);
        let mut len = 0;
        let mut gamma = Mat::<c64>::zeros(capacity, 2 * cols);
        for j in 0..2 * cols {
            let mut w = starts.col(j).to_owned();
            let norm0 = w.norm_l2();
            let c = orthogonalize(v.as_ref(), len, &mut w);
            for i in 0..len {
                gamma[(i, j)] = c[i];
            }
            let beta = w.norm_l2();
            if beta > 1e-13 * norm0 {
                gamma[(len, j)] = c64::new(beta, 0.0);
                v.col_mut(len).copy_from(&(&w * faer::Scale(c64::new(1.0 / beta, 0.0))));
                len += 1;
            }
        }
        let mut h = Mat::<c64>::zeros(capacity, MAX_KRYLOV);
        let mut expanded = 0;
        let mut done: Vec<Option<Result<Mat<c64>, OperatorError>>> = etas.iter().map(|_| None).collect();
        let mut pending: Vec<usize> = (0..etas.len()).collect();
        let mut exhausted = false;
        loop {
            if expanded == len {
                exhausted = true;
            } else if expanded < MAX_KRYLOV {
                let vp: Vec<c64> = v.col(expanded).iter().copied().collect();
                let mut w = Mat::<c64>::zeros(dim, 1);
                for (i, x) in pencil.m.mul_vec(&vp).into_iter().enumerate() {
                    w[(i, 0)] = x;
                }
                fact.solve_in_place(w.as_mut())?;
                let mut w = w.col(0).to_owned();
                let norm0 = w.norm_l2();
                let c = orthogonalize(v.as_ref(), len, &mut w);
                for i in 0..len {
                    h[(i, expanded)] = c[i];
                }
                let beta = w.norm_l2();
                if beta > 1e-13 * norm0 && len < capacity {
                    h[(len, expanded)] = c64::new(beta, 0.0);
                    v.col_mut(len).copy_from(&(&w * faer::Scale(c64::new(1.0 / beta, 0.0))));
                    len += 1;
                }
                expanded += 1;
            }
            let last = exhausted || expanded >= MAX_KRYLOV;
            if expanded % CHECK_EVERY != 0 && !last {
                continue;
            }
            let k = expanded;
            let rows = len;
            let hk = h.as_ref().submatrix(0, 0, rows, k);
            let basis = v.as_ref().subcols(0, k);
            let outcomes: Vec<Option<Result<Mat<c64>, OperatorError>>> = pending
                .par_iter()
                .map(|&idx| {
                    let s = etas[idx] - anchor;
                    let gmat = Mat::<c64>::from_fn(rows, k, |i, j| {
                        let id = if i == j { c64::new(1.0, 0.0) } else { zero };
                        id - s * hk[(i, j)]
                    });
                    let rhs = Mat::<c64>::from_fn(rows, cols, |i, j| gamma[(i, j)] + s * gamma[(i, cols + j)]);
                    let mut sol = rhs.clone();
                    if k > 0 {
                        gmat.qr().solve_lstsq_in_place(sol.as_mut());
                    }
                    let w = sol.as_ref().subrows(0, k);
                    let resid = &rhs - &gmat * w;
                    for j in 0..cols {
                        if resid.col(j).norm_l2() > KRYLOV_TOL * rhs.col(j).norm_l2() {
                            return None;
                        }
                    }
                    let z = basis * w;
                    let eta = etas[idx];
                    let mut phi = Mat::<c64>::zeros(nb, cols);
                    for j in 0..cols {
                        let zj: Vec<c64> = z.col(j).iter().copied().collect();
                        let bj: Vec<c64> = (0..dim).map(|i| rhs_c[j][i] + s * rhs_1[j][i]).collect();
                        if pencil.backward_error(eta, &zj, &bj) > BACKWARD_TOL {
                            return None;
                        }
                        let mut u0 = vec![zero; n];
                        u0[..ni].copy_from_slice(&zj[ni..2 * ni]);
                        u0[ni..].copy_from_slice(&zj[2 * ni..]);
                        let y = self.robin_apply(Medium::Reference, eta, &u0);
                        for s in 0..nb {
                            phi[(s, j)] = y[ni + s];
                        }
                    }
                    sys.solve_boundary_mass(&mut phi);
                    Some(Ok(phi))
                })
                .collect();
            let mut still = Vec::new();
            for (idx, out) in pending.iter().zip(outcomes) {
                match out {
                    Some(r) => done[*idx] = Some(r),
                    None => still.push(*idx),
                }
            }
            pending = still;
            if pending.is_empty() || last {
                break;
            }
        }
        Ok((done, expanded))
    }
}
