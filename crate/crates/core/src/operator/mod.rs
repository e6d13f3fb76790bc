//! The discrete Robin-to-Dirichlet difference operator
//! `T(eta) = M_B^T [S_1(eta)^{-1} - S_0(eta)^{-1}] M_B`,
//! where `S_1 = A_1 - i M^B - eta M^n` is the Robin-Helmholtz matrix of the
//! medium and `S_0` its free-space counterpart.
//!
//! `T(eta)` can be formed explicitly from the Schur complements of `S_1` and
//! `S_0` onto the boundary block. Solves with `T(eta)` do not need it, see
//! [`Resolvent`] for a single parameter and
//! [`TransmissionOperator::solve_shifted`] for many nearby ones.

mod shifted;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use faer::{c64, Mat, MatRef};
use thiserror::Error;

use crate::assembly::DiscreteSystem;
use crate::linsolve::{schur_complement, DenseLu, DenseSolution, Factorization, SolveError, SymbolicFactorization};
use crate::sparse::CsrMatrix;

use shifted::CoupledPencil;
pub use shifted::{ShiftedSolve, MAX_KRYLOV};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OperatorError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("boundary vector has length {found}, expected {expected}")]
    BoundaryLength { expected: usize, found: usize },
}

impl OperatorError {
    pub fn is_singular(&self) -> bool {
        matches!(self, OperatorError::Solve(e) if e.is_singular())
    }
}

/// Whether user-facing spectral values are `eta` itself or the wavenumber
/// `k` with `eta = k^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Convention {
    Eta,
    #[default]
    K,
}

impl Convention {
    /// The operator parameter `eta` for a user-facing spectral value.
    pub fn to_eta(self, z: c64) -> c64 {
        match self {
            Convention::Eta => z,
            Convention::K => z * z,
        }
    }

    /// Inverse of [`Convention::to_eta`], taking the root with `Re k >= 0`.
    pub fn from_eta(self, eta: c64) -> c64 {
        match self {
            Convention::Eta => eta,
            Convention::K => eta.sqrt(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Convention::Eta => "eta",
            Convention::K => "k",
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Convention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eta" => Ok(Convention::Eta),
            "k" => Ok(Convention::K),
            other => Err(format!("unknown convention `{other}`, expected `k` or `eta`")),
        }
    }
}

/// Selects the medium of a Robin-Helmholtz solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Medium {
    Anisotropic,
    Reference,
}

/// `T(eta)` formed explicitly.
pub struct OperatorEvaluation {
    pub eta: c64,
    pub t: Mat<c64>,
    /// Largest pivot-ratio condition estimate of the two sparse eliminations.
    pub cond_estimate: f64,
    /// Set when `Im eta < 0`, where unique solvability of the Robin problems
    /// is not guaranteed.
    pub lower_half_plane: bool,
}

impl OperatorEvaluation {
    /// Solves `T(eta) x = f` by dense LU; a singular `T` signals an eigenvalue.
    pub fn apply_t_inverse(&self, f: &[c64]) -> Result<DenseSolution, OperatorError> {
        if f.len() != self.t.nrows() {
            return Err(OperatorError::BoundaryLength { expected: self.t.nrows(), found: f.len() });
        }
        crate::linsolve::dense_solve(self.t.as_ref(), f).map_err(|e| e.at_eta(self.eta).into())
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for j in 0..self.t.ncols() {
            for i in 0..self.t.nrows() {
                m = m.max(self.t[(i, j)].norm());
            }
        }
        m
    }
}

/// Holds the assembled system and the symbolic analyses reused at every `eta`.
pub struct TransmissionOperator {
    sys: Arc<DiscreteSystem>,
    full: Arc<SymbolicFactorization>,
    boundary_last: Arc<SymbolicFactorization>,
    coupled: CoupledPencil,
}

impl fmt::Debug for TransmissionOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransmissionOperator").field("system", &self.sys).finish_non_exhaustive()
    }
}

fn column(v: &[c64]) -> Mat<c64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

impl TransmissionOperator {
    pub fn new(sys: Arc<DiscreteSystem>) -> Result<Self, OperatorError> {
        let pattern = sys.a1.pattern().clone();
        let full = Arc::new(SymbolicFactorization::analyze(pattern.clone(), 0)?);
        let boundary_last = Arc::new(SymbolicFactorization::analyze(pattern, sys.n_b())?);
        let coupled = CoupledPencil::new(&sys)?;
        Ok(Self { sys, full, boundary_last, coupled })
    }

    pub fn system(&self) -> &Arc<DiscreteSystem> {
        &self.sys
    }

    pub fn n_b(&self) -> usize {
        self.sys.n_b()
    }

    /// Robin-Helmholtz matrix `A - i M^B - eta Mass` of the chosen medium.
    pub fn robin_matrix(&self, medium: Medium, eta: c64) -> CsrMatrix<c64> {
        let (a, mass) = match medium {
            Medium::Anisotropic => (&self.sys.a1, &self.sys.mn),
            Medium::Reference => (&self.sys.a0, &self.sys.m),
        };
        let values = a
            .values()
            .iter()
            .zip(self.sys.mb_full.values())
            .zip(mass.values())
            .map(|((&a, &b), &m)| c64::new(a, -b) - eta * m)
            .collect();
        CsrMatrix::from_values(a.pattern().clone(), values)
    }

    /// Product of the Robin matrix of `medium` at `eta` with `x`.
    pub fn robin_apply(&self, medium: Medium, eta: c64, x: &[c64]) -> Vec<c64> {
        let (a, mass) = match medium {
            Medium::Anisotropic => (&self.sys.a1, &self.sys.mn),
            Medium::Reference => (&self.sys.a0, &self.sys.m),
        };
        let ax = a.mul_vec(x);
        let bx = self.sys.mb_full.mul_vec(x);
        let mx = mass.mul_vec(x);
        (0..x.len()).map(|i| ax[i] - c64::new(0.0, 1.0) * bx[i] - eta * mx[i]).collect()
    }

    fn check_boundary(&self, len: usize) -> Result<(), OperatorError> {
        if len != self.n_b() {
            return Err(OperatorError::BoundaryLength { expected: self.n_b(), found: len });
        }
        Ok(())
    }

    /// Sparse factorization of the Robin-Helmholtz matrix at `eta`.
    pub fn factorize(&self, medium: Medium, eta: c64) -> Result<Factorization, OperatorError> {
        Factorization::new(&self.full, &self.robin_matrix(medium, eta)).map_err(|e| e.at_eta(eta).into())
    }

    /// Finite element solution of the Robin problem with boundary datum whose
    /// projection has coefficients `g`: `(A - i M^B - eta Mass) u = M_B g`.
    pub fn helmholtz_solve(&self, medium: Medium, eta: c64, g: &[c64]) -> Result<Vec<c64>, OperatorError> {
        self.check_boundary(g.len())?;
        let fact = self.factorize(medium, eta)?;
        let rhs = self.sys.m_b.mul_vec(g);
        Ok(fact.solve(&rhs)?)
    }

    /// Finite element solution with the load `<g, v>` taken directly from a
    /// boundary load vector (equal to `M_B` times the projection of `g`).
    pub fn helmholtz_solve_load(&self, medium: Medium, eta: c64, load: &[c64]) -> Result<Vec<c64>, OperatorError> {
        self.check_boundary(load.len())?;
        let fact = self.factorize(medium, eta)?;
        let mut rhs = vec![c64::new(0.0, 0.0); self.sys.n()];
        rhs[self.sys.boundary_offset()..].copy_from_slice(load);
        Ok(fact.solve(&rhs)?)
    }

    /// Schur complement of the Robin matrix onto the boundary block.
    fn boundary_schur(&self, medium: Medium, eta: c64) -> Result<(Mat<c64>, f64), OperatorError> {
        let schur =
            schur_complement(&self.boundary_last, &self.robin_matrix(medium, eta)).map_err(|e| e.at_eta(eta))?;
        Ok((schur.matrix, schur.cond_estimate))
    }

    /// Boundary block of the inverse Robin matrix, computed as the inverse of
    /// its Schur complement onto the boundary.
    fn boundary_inverse(&self, medium: Medium, eta: c64) -> Result<(Mat<c64>, f64), OperatorError> {
        let (schur, cond) = self.boundary_schur(medium, eta)?;
        let lu = DenseLu::new(schur.as_ref()).map_err(|e| e.at_eta(eta))?;
        let mut inv = Mat::<c64>::identity(self.n_b(), self.n_b());
        lu.solve_in_place(inv.as_mut())?;
        Ok((inv, cond.max(1.0 / lu.rcond())))
    }

    /// Forms `T(eta)` as a dense `N_B x N_B` matrix.
    pub fn build_t(&self, eta: c64) -> Result<OperatorEvaluation, OperatorError> {
        let (z1, c1) = self.boundary_inverse(Medium::Anisotropic, eta)?;
        let (z0, c0) = self.boundary_inverse(Medium::Reference, eta)?;
        let mbb = self.sys.boundary_mass();
        let mbb = Mat::<c64>::from_fn(mbb.nrows(), mbb.ncols(), |i, j| c64::new(mbb[(i, j)], 0.0));
        let diff = &z1 - &z0;
        let t = mbb.transpose() * &diff * &mbb;
        Ok(OperatorEvaluation { eta, t, cond_estimate: c1.max(c0), lower_half_plane: eta.im < 0.0 })
    }

    /// Prepares `T(eta)^{-1}` for repeated application without forming
    /// `T(eta)`.
    pub fn resolvent(&self, eta: c64) -> Result<Resolvent<'_>, OperatorError> {
        let (c1, k1) = self.boundary_schur(Medium::Anisotropic, eta)?;
        let (c0, k0) = self.boundary_schur(Medium::Reference, eta)?;
        let lu = DenseLu::new((&c0 - &c1).as_ref()).map_err(|e| e.at_eta(eta))?;
        Ok(Resolvent { op: self, eta, c1, c0, lu, cond_estimate: k1.max(k0) })
    }
}

/// `T(eta)^{-1}` in factored form.
///
/// With `C_1`, `C_0` the boundary Schur complements of the two Robin
/// matrices, `T = M_BB (C_1^{-1} - C_0^{-1}) M_BB`, hence
/// `T^{-1} = M_BB^{-1} C_0 (C_0 - C_1)^{-1} C_1 M_BB^{-1}`.
pub struct Resolvent<'a> {
    op: &'a TransmissionOperator,
    eta: c64,
    c1: Mat<c64>,
    c0: Mat<c64>,
    lu: DenseLu,
    cond_estimate: f64,
}

impl Resolvent<'_> {
    pub fn eta(&self) -> c64 {
        self.eta
    }

    /// Largest of the sparse pivot-ratio estimates and the reciprocal
    /// condition estimate of `C_0 - C_1`.
    pub fn cond_estimate(&self) -> f64 {
        self.cond_estimate.max(1.0 / self.lu.rcond())
    }

    /// Solves `T(eta) X = F` for every column of the `N_B x m` matrix `F`.
    pub fn apply(&self, f: MatRef<'_, c64>) -> Result<Mat<c64>, OperatorError> {
        let sys = &self.op.sys;
        self.op.check_boundary(f.nrows())?;
        let mut x = f.to_owned();
        sys.solve_boundary_mass(&mut x);
        let mut y = &self.c1 * &x;
        self.lu.solve_in_place(y.as_mut()).map_err(|e| e.at_eta(self.eta))?;
        let mut x = &self.c0 * &y;
        sys.solve_boundary_mass(&mut x);
        Ok(x)
    }

    pub fn apply_vec(&self, f: &[c64]) -> Result<Vec<c64>, OperatorError> {
        let x = self.apply(column(f).as_ref())?;
        Ok((0..f.len()).map(|i| x[(i, 0)]).collect())
    }
}

#[cfg(test)]
mod tests;
