//! P1 finite element matrices on a triangular mesh.
//!
//! Degrees of freedom are the mesh vertices, renumbered so that interior
//! vertices come first and boundary vertices form a contiguous trailing block
//! in boundary-loop order. All square matrices share one sparsity pattern.

use std::fmt;
use std::sync::Arc;

use faer::linalg::solvers::{Llt, Solve};
use faer::{c64, Mat, Side};
use thiserror::Error;

use crate::mesh::{signed_area, Mesh, Point2};
use crate::sparse::{CsrMatrix, SparsityPattern};

pub type MatrixField = Arc<dyn Fn(Point2) -> [[f64; 2]; 2] + Send + Sync>;
pub type ScalarField = Arc<dyn Fn(Point2) -> f64 + Send + Sync>;

/// Coefficient pair `(A(x), n(x))` of the inhomogeneous medium.
#[derive(Clone)]
pub struct MaterialModel {
    label: String,
    a: MatrixField,
    n: ScalarField,
}

impl fmt::Debug for MaterialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MaterialModel").field("label", &self.label).finish_non_exhaustive()
    }
}

impl MaterialModel {
    pub fn new(label: impl Into<String>, a: MatrixField, n: ScalarField) -> Self {
        Self { label: label.into(), a, n }
    }

    pub fn constant(label: impl Into<String>, a: [[f64; 2]; 2], n: f64) -> Self {
        Self::new(label, Arc::new(move |_| a), Arc::new(move |_| n))
    }

    /// `A = I` with a constant index of refraction `n`.
    pub fn isotropic(n: f64) -> Self {
        Self::constant(format!("isotropic_n{n}"), [[1.0, 0.0], [0.0, 1.0]], n)
    }

    /// Free space, `A = I` and `n = 1`.
    pub fn reference() -> Self {
        Self::constant("reference", [[1.0, 0.0], [0.0, 1.0]], 1.0)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn a(&self, p: Point2) -> [[f64; 2]; 2] {
        (self.a)(p)
    }

    pub fn n(&self, p: Point2) -> f64 {
        (self.n)(p)
    }

    /// Checks symmetry, ellipticity and positivity of the coefficients at one
    /// point and returns `(smallest eigenvalue of A, n)`.
    pub fn check_at(&self, p: Point2) -> Result<(f64, f64), AssemblyError> {
        let a = self.a(p);
        let n = self.n(p);
        let entries = [a[0][0], a[0][1], a[1][0], a[1][1], n];
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(AssemblyError::NonFinite { point: p });
        }
        let scale = a[0][0].abs().max(a[1][1].abs()).max(a[0][1].abs()).max(f64::MIN_POSITIVE);
        if (a[0][1] - a[1][0]).abs() > 1e-12 * scale {
            return Err(AssemblyError::NotSymmetric { point: p });
        }
        let mean = 0.5 * (a[0][0] + a[1][1]);
        let radius = (0.25 * (a[0][0] - a[1][1]).powi(2) + a[0][1] * a[1][0]).sqrt();
        let gamma = mean - radius;
        if !(gamma > 0.0) {
            return Err(AssemblyError::NotElliptic { point: p, min_eigenvalue: gamma });
        }
        if !(n > 0.0) {
            return Err(AssemblyError::NonPositiveIndex { point: p, value: n });
        }
        Ok((gamma, n))
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AssemblyError {
    #[error("A is not elliptic at {point}: smallest eigenvalue {min_eigenvalue:e}")]
    NotElliptic { point: Point2, min_eigenvalue: f64 },
    #[error("A is not symmetric at {point}")]
    NotSymmetric { point: Point2 },
    #[error("n must be positive, found {value:e} at {point}")]
    NonPositiveIndex { point: Point2, value: f64 },
    #[error("material coefficients are not finite at {point}")]
    NonFinite { point: Point2 },
    #[error("boundary mass matrix is not positive definite")]
    SingularBoundaryMass,
}

/// Edge midpoints of a triangle, the nodes of the degree-2 quadrature rule.
pub fn edge_midpoints(tri: &[Point2; 3]) -> [Point2; 3] {
    [tri[0].midpoint(tri[1]), tri[1].midpoint(tri[2]), tri[2].midpoint(tri[0])]
}

/// Integrates a scalar field over a triangle with the edge-midpoint rule,
/// exact for polynomials of degree two.
pub fn element_quadrature(tri: &[Point2; 3], field: impl Fn(Point2) -> f64) -> f64 {
    let area = signed_area(tri[0], tri[1], tri[2]).abs();
    edge_midpoints(tri).iter().map(|&q| field(q)).sum::<f64>() * area / 3.0
}

/// Matrix-valued counterpart of [`element_quadrature`].
pub fn element_quadrature_matrix(tri: &[Point2; 3], field: impl Fn(Point2) -> [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let area = signed_area(tri[0], tri[1], tri[2]).abs();
    let mut out = [[0.0; 2]; 2];
    for q in edge_midpoints(tri) {
        let a = field(q);
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] += a[i][j] * area / 3.0;
            }
        }
    }
    out
}

/// Gradients of the three barycentric coordinates.
fn barycentric_gradients(tri: &[Point2; 3]) -> [[f64; 2]; 3] {
    let area2 = 2.0 * signed_area(tri[0], tri[1], tri[2]);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (b, c) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
        g[i] = [(b.y - c.y) / area2, (c.x - b.x) / area2];
    }
    g
}

/// Element stiffness matrix for a constant coefficient matrix `a`.
pub fn element_stiffness(tri: &[Point2; 3], a: [[f64; 2]; 2]) -> [[f64; 3]; 3] {
    let area = signed_area(tri[0], tri[1], tri[2]);
    let g = barycentric_gradients(tri);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        let ag = [a[0][0] * g[i][0] + a[0][1] * g[i][1], a[1][0] * g[i][0] + a[1][1] * g[i][1]];
        for j in 0..3 {
            k[j][i] = area * (ag[0] * g[j][0] + ag[1] * g[j][1]);
        }
    }
    k
}

/// Element mass matrix weighted by `n`, given its values at the edge
/// midpoints in the order of [`edge_midpoints`].
pub fn element_mass(tri: &[Point2; 3], n_mid: [f64; 3]) -> [[f64; 3]; 3] {
    let area = signed_area(tri[0], tri[1], tri[2]);
    // basis values at the three midpoints
    const PHI: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];
    let mut m = [[0.0; 3]; 3];
    for (q, phi) in PHI.iter().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += area / 3.0 * n_mid[q] * phi[i] * phi[j];
            }
        }
    }
    m
}

/// Mass matrix of a P1 edge of length `len`.
pub fn edge_mass(len: f64) -> [[f64; 2]; 2] {
    [[len / 3.0, len / 6.0], [len / 6.0, len / 3.0]]
}

/// Boundary edge in degree-of-freedom terms.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryEdge {
    /// Boundary slots (0-based within the trailing block) of the endpoints.
    pub slots: [usize; 2],
    pub points: [Point2; 2],
}

impl BoundaryEdge {
    pub fn length(&self) -> f64 {
        self.points[0].distance(self.points[1])
    }

    /// Outward unit normal; the boundary loop runs counter-clockwise.
    pub fn normal(&self) -> Point2 {
        let [a, b] = self.points;
        let len = self.length();
        Point2::new((b.y - a.y) / len, (a.x - b.x) / len)
    }

    /// Two-point Gauss nodes as `(point, weight, [phi_0, phi_1])`.
    pub fn gauss_points(&self) -> [(Point2, f64, [f64; 2]); 2] {
        let [a, b] = self.points;
        let half = 0.5 * self.length();
        let offset = 0.5 / 3f64.sqrt();
        [0.5 - offset, 0.5 + offset]
            .map(|t| (Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)), half, [1.0 - t, t]))
    }
}

/// All finite element matrices of one mesh and material.
pub struct DiscreteSystem {
    mesh: Mesh,
    label: String,
    dof_of_vertex: Vec<usize>,
    vertex_of_dof: Vec<usize>,
    num_boundary: usize,
    pub a1: CsrMatrix<f64>,
    pub a0: CsrMatrix<f64>,
    pub mn: CsrMatrix<f64>,
    pub m: CsrMatrix<f64>,
    pub mb_full: CsrMatrix<f64>,
    /// Boundary columns of `mb_full`, an `N x N_B` matrix.
    pub m_b: CsrMatrix<f64>,
    boundary_mass: Mat<f64>,
    boundary_mass_llt: Llt<f64>,
    boundary_edges: Vec<BoundaryEdge>,
    gamma: f64,
    n_min: f64,
}

impl fmt::Debug for DiscreteSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscreteSystem")
            .field("label", &self.label)
            .field("n", &self.n())
            .field("n_b", &self.num_boundary)
            .field("h", &self.mesh.h())
            .finish_non_exhaustive()
    }
}

struct MaterialMatrices {
    stiffness: CsrMatrix<f64>,
    mass: CsrMatrix<f64>,
    gamma: f64,
    n_min: f64,
}

fn assemble_material(
    mesh: &Mesh,
    dof: &[usize],
    pattern: &Arc<SparsityPattern>,
    material: &MaterialModel,
) -> Result<MaterialMatrices, AssemblyError> {
    let mut stiffness = CsrMatrix::zeros(pattern.clone());
    let mut mass = CsrMatrix::zeros(pattern.clone());
    let mut gamma = f64::INFINITY;
    let mut n_min = f64::INFINITY;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let pts = mesh.triangle_points(t);
        let mids = edge_midpoints(&pts);
        let mut a_bar = [[0.0; 2]; 2];
        let mut n_mid = [0.0; 3];
        for (q, &p) in mids.iter().enumerate() {
            let (g, n) = material.check_at(p)?;
            gamma = gamma.min(g);
            n_min = n_min.min(n);
            n_mid[q] = n;
            let a = material.a(p);
            for i in 0..2 {
                for j in 0..2 {
                    a_bar[i][j] += a[i][j] / 3.0;
                }
            }
        }
        let k = element_stiffness(&pts, a_bar);
        let m = element_mass(&pts, n_mid);
        for i in 0..3 {
            for j in 0..3 {
                stiffness.add(dof[tri[i]], dof[tri[j]], k[i][j]);
                mass.add(dof[tri[i]], dof[tri[j]], m[i][j]);
            }
        }
    }
    Ok(MaterialMatrices { stiffness, mass, gamma, n_min })
}

/// Assembles the stiffness and mass matrices of `material` and of free space,
/// and the boundary mass matrices.
pub fn assemble_system(mesh: &Mesh, material: &MaterialModel) -> Result<DiscreteSystem, AssemblyError> {
    let nv = mesh.num_vertices();
    let nb = mesh.boundary_vertices().len();
    let mut on_boundary = vec![false; nv];
    for &v in mesh.boundary_vertices() {
        on_boundary[v] = true;
    }
    let mut vertex_of_dof: Vec<usize> = (0..nv).filter(|&v| !on_boundary[v]).collect();
    vertex_of_dof.extend_from_slice(mesh.boundary_vertices());
    let mut dof_of_vertex = vec![0; nv];
    for (d, &v) in vertex_of_dof.iter().enumerate() {
        dof_of_vertex[v] = d;
    }

    let mut rows: Vec<Vec<usize>> = (0..nv).map(|d| vec![d]).collect();
    for tri in mesh.triangles() {
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    rows[dof_of_vertex[tri[i]]].push(dof_of_vertex[tri[j]]);
                }
            }
        }
    }
    let pattern = Arc::new(SparsityPattern::from_rows(nv, rows));

    let material_part = assemble_material(mesh, &dof_of_vertex, &pattern, material)?;
    let reference = assemble_material(mesh, &dof_of_vertex, &pattern, &MaterialModel::reference())?;

    let offset = nv - nb;
    let mut mb_full = CsrMatrix::zeros(pattern.clone());
    let mut boundary_mass = Mat::<f64>::zeros(nb, nb);
    let mut boundary_edges = Vec::with_capacity(nb);
    for &[p, q] in mesh.boundary_edges() {
        let edge = BoundaryEdge {
            slots: [dof_of_vertex[p] - offset, dof_of_vertex[q] - offset],
            points: [mesh.vertices()[p], mesh.vertices()[q]],
        };
        let local = edge_mass(edge.length());
        for i in 0..2 {
            for j in 0..2 {
                mb_full.add(offset + edge.slots[i], offset + edge.slots[j], local[i][j]);
                boundary_mass[(edge.slots[i], edge.slots[j])] += local[i][j];
            }
        }
        boundary_edges.push(edge);
    }

    let mut rows = vec![Vec::new(); nv];
    for (s, row) in rows[offset..].iter_mut().enumerate() {
        for &c in mb_full.pattern().row(offset + s) {
            if c >= offset {
                row.push(c - offset);
            }
        }
    }
    let b_pattern = Arc::new(SparsityPattern::from_rows(nb, rows));
    let mut m_b = CsrMatrix::zeros(b_pattern);
    for s in 0..nb {
        for t in 0..nb {
            let v = boundary_mass[(s, t)];
            if v != 0.0 {
                m_b.add(offset + s, t, v);
            }
        }
    }
    let boundary_mass_llt =
        Llt::new(boundary_mass.as_ref(), Side::Lower).map_err(|_| AssemblyError::SingularBoundaryMass)?;

    Ok(DiscreteSystem {
        mesh: mesh.clone(),
        label: material.label().to_owned(),
        dof_of_vertex,
        vertex_of_dof,
        num_boundary: nb,
        a1: material_part.stiffness,
        a0: reference.stiffness,
        mn: material_part.mass,
        m: reference.mass,
        mb_full,
        m_b,
        boundary_mass,
        boundary_mass_llt,
        boundary_edges,
        gamma: material_part.gamma,
        n_min: material_part.n_min,
    })
}

impl DiscreteSystem {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn material_label(&self) -> &str {
        &self.label
    }

    /// Total number of degrees of freedom.
    pub fn n(&self) -> usize {
        self.vertex_of_dof.len()
    }

    /// Number of boundary degrees of freedom.
    pub fn n_b(&self) -> usize {
        self.num_boundary
    }

    /// Index of the first boundary degree of freedom.
    pub fn boundary_offset(&self) -> usize {
        self.n() - self.num_boundary
    }

    pub fn mesh_h(&self) -> f64 {
        self.mesh.h()
    }

    /// Global degree of freedom of each boundary slot.
    pub fn boundary_map(&self) -> Vec<usize> {
        (self.boundary_offset()..self.n()).collect()
    }

    pub fn dof_of_vertex(&self, v: usize) -> usize {
        self.dof_of_vertex[v]
    }

    pub fn vertex_of_dof(&self, d: usize) -> usize {
        self.vertex_of_dof[d]
    }

    pub fn dof_point(&self, d: usize) -> Point2 {
        self.mesh.vertices()[self.vertex_of_dof[d]]
    }

    /// Smallest eigenvalue of `A` over all quadrature points.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Smallest value of `n` over all quadrature points.
    pub fn n_min(&self) -> f64 {
        self.n_min
    }

    /// Dense boundary mass matrix `M_BB`.
    pub fn boundary_mass(&self) -> &Mat<f64> {
        &self.boundary_mass
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    /// Solves `M_BB x = b` in place for every column of `b`.
    pub fn solve_boundary_mass(&self, b: &mut Mat<c64>) {
        let mut re = Mat::<f64>::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)].re);
        let mut im = Mat::<f64>::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)].im);
        self.boundary_mass_llt.solve_in_place(re.as_mut());
        self.boundary_mass_llt.solve_in_place(im.as_mut());
        for j in 0..b.ncols() {
            for i in 0..b.nrows() {
                b[(i, j)] = c64::new(re[(i, j)], im[(i, j)]);
            }
        }
    }

    /// Load vector `<g, phi_s>` over the boundary by two-point Gauss quadrature.
    /// The field receives the point and the outward unit normal.
    pub fn boundary_load(&self, g: impl Fn(Point2, Point2) -> c64) -> Vec<c64> {
        let mut load = vec![c64::new(0.0, 0.0); self.num_boundary];
        for edge in &self.boundary_edges {
            let normal = edge.normal();
            for (p, w, phi) in edge.gauss_points() {
                let value = g(p, normal);
                for k in 0..2 {
                    load[edge.slots[k]] += value * (w * phi[k]);
                }
            }
        }
        load
    }

    /// L2(boundary) projection of `g` onto continuous piecewise linears.
    pub fn boundary_projection(&self, g: impl Fn(Point2, Point2) -> c64) -> Vec<c64> {
        let load = self.boundary_load(g);
        let mut b = Mat::<c64>::from_fn(load.len(), 1, |i, _| load[i]);
        self.solve_boundary_mass(&mut b);
        (0..load.len()).map(|i| b[(i, 0)]).collect()
    }

    /// `L2(boundary)` distance between a boundary coefficient vector and a
    /// field, by three-point Gauss quadrature on each edge. Two points would
    /// sit on the zeros of the dominant error mode of a projection.
    pub fn boundary_l2_error(&self, coeffs: &[c64], g: impl Fn(Point2, Point2) -> c64) -> f64 {
        let r = (0.6f64).sqrt() / 2.0;
        let nodes = [(0.5 - r, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + r, 5.0 / 18.0)];
        let mut sum = 0.0;
        for edge in &self.boundary_edges {
            let normal = edge.normal();
            let [a, b] = edge.points;
            let len = edge.length();
            for (t, w) in nodes {
                let p = Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
                let uh = coeffs[edge.slots[0]] * (1.0 - t) + coeffs[edge.slots[1]] * t;
                sum += w * len * (uh - g(p, normal)).norm_sqr();
            }
        }
        sum.sqrt()
    }

    pub fn perimeter(&self) -> f64 {
        self.boundary_edges.iter().map(BoundaryEdge::length).sum()
    }
}
