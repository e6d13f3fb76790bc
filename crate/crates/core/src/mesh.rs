//! Conforming triangular meshes of the two benchmark domains.
//!
//! A [`Mesh`] is validated on construction: every triangle is counter-clockwise
//! with positive area, every edge is shared by at most two triangles and the
//! boundary edges form a single closed loop. The mesh size `h` is the maximum
//! Euclidean edge length.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("triangle {index} has non-positive signed area {area:e}")]
    Degenerate { index: usize, area: f64 },
    #[error("triangle {triangle} references vertex {vertex} but the mesh has {count} vertices")]
    VertexOutOfRange { triangle: usize, vertex: usize, count: usize },
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifoldEdge(usize, usize),
    #[error("boundary is not a single closed loop: {0}")]
    BoundaryLoop(String),
    #[error("mesh file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(self, other: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Circle onto which boundary midpoints are projected during refinement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle {
    pub center: Point2,
    pub radius: f64,
}

impl Circle {
    pub fn project(&self, p: Point2) -> Point2 {
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        let r = dx.hypot(dy);
        Point2::new(self.center.x + self.radius * dx / r, self.center.y + self.radius * dy / r)
    }
}

/// Signed area of the triangle `(a, b, c)`, positive when counter-clockwise.
pub fn signed_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<[usize; 2]>,
    boundary_vertices: Vec<usize>,
    h: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshStatistics {
    pub h: f64,
    pub num_vertices: usize,
    pub num_triangles: usize,
    pub num_boundary_vertices: usize,
    pub total_area: f64,
    /// Smallest interior angle over all triangles, in degrees.
    pub min_angle: f64,
}

impl Mesh {
    /// Builds and validates a mesh from vertex coordinates and counter-clockwise
    /// triangles. Boundary edges are recovered as the edges owned by a single
    /// triangle and ordered into one loop, oriented with the domain on the left.
    pub fn new(vertices: Vec<Point2>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if vertices.is_empty() || triangles.is_empty() {
            return Err(MeshError::InvalidArgument("mesh has no vertices or triangles".into()));
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(MeshError::NonFinite(i));
        }
        let count = vertices.len();
        let mut edge_count: HashMap<(usize, usize), (u32, [usize; 2])> = HashMap::new();
        let mut h: f64 = 0.0;
        for (index, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= count {
                    return Err(MeshError::VertexOutOfRange { triangle: index, vertex: v, count });
                }
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let area = signed_area(a, b, c);
            if !(area > 0.0) {
                return Err(MeshError::Degenerate { index, area });
            }
            for k in 0..3 {
                let (p, q) = (tri[k], tri[(k + 1) % 3]);
                h = h.max(vertices[p].distance(vertices[q]));
                let entry = edge_count.entry((p.min(q), p.max(q))).or_insert((0, [p, q]));
                entry.0 += 1;
                if entry.0 > 2 {
                    return Err(MeshError::NonManifoldEdge(p.min(q), p.max(q)));
                }
            }
        }

        // Directed boundary edges, keyed by their start vertex.
        let mut next: HashMap<usize, usize> = HashMap::new();
        for (&(p, q), &(n, directed)) in &edge_count {
            if n == 1 && next.insert(directed[0], directed[1]).is_some() {
                return Err(MeshError::BoundaryLoop(format!(
                    "vertex {} starts two boundary edges (edge ({p}, {q}))",
                    directed[0]
                )));
            }
        }
        if next.len() < 3 {
            return Err(MeshError::BoundaryLoop("fewer than three boundary edges".into()));
        }
        let start = *next.keys().min().expect("non-empty");
        let mut boundary_vertices = Vec::with_capacity(next.len());
        let mut boundary_edges = Vec::with_capacity(next.len());
        let mut v = start;
        loop {
            let w =
                *next.get(&v).ok_or_else(|| MeshError::BoundaryLoop(format!("boundary chain breaks at vertex {v}")))?;
            boundary_vertices.push(v);
            boundary_edges.push([v, w]);
            v = w;
            if v == start {
                break;
            }
            if boundary_vertices.len() > next.len() {
                return Err(MeshError::BoundaryLoop("boundary chain does not close".into()));
            }
        }
        if boundary_edges.len() != next.len() {
            return Err(MeshError::BoundaryLoop(format!(
                "found {} boundary edges but the loop through vertex {start} has {}",
                next.len(),
                boundary_edges.len()
            )));
        }

        Ok(Self { vertices, triangles, boundary_edges, boundary_vertices, h })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Boundary edges in loop order; edge `k` runs from `boundary_vertices()[k]`
    /// to the next boundary vertex.
    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary_vertices
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point2; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle_points(t);
                signed_area(a, b, c)
            })
            .sum()
    }

    pub fn perimeter(&self) -> f64 {
        self.boundary_edges.iter().map(|&[p, q]| self.vertices[p].distance(self.vertices[q])).sum()
    }

    pub fn statistics(&self) -> MeshStatistics {
        mesh_statistics(self)
    }
}

pub fn mesh_statistics(mesh: &Mesh) -> MeshStatistics {
    let mut min_angle = f64::INFINITY;
    for t in 0..mesh.triangles.len() {
        let pts = mesh.triangle_points(t);
        for k in 0..3 {
            let (a, b, c) = (pts[k], pts[(k + 1) % 3], pts[(k + 2) % 3]);
            let (ux, uy) = (b.x - a.x, b.y - a.y);
            let (vx, vy) = (c.x - a.x, c.y - a.y);
            let angle = (ux * vy - uy * vx).abs().atan2(ux * vx + uy * vy);
            min_angle = min_angle.min(angle.to_degrees());
        }
    }
    MeshStatistics {
        h: mesh.h,
        num_vertices: mesh.vertices.len(),
        num_triangles: mesh.triangles.len(),
        num_boundary_vertices: mesh.boundary_vertices.len(),
        total_area: mesh.total_area(),
        min_angle,
    }
}

fn check_size_arguments(extent: f64, target_h: f64, name: &str) -> Result<(), MeshError> {
    if !(extent > 0.0) || !extent.is_finite() {
        return Err(MeshError::InvalidArgument(format!("{name} must be positive, got {extent}")));
    }
    if !(target_h > 0.0) || !target_h.is_finite() {
        return Err(MeshError::InvalidArgument(format!("target_h must be positive, got {target_h}")));
    }
    if target_h >= extent {
        return Err(MeshError::InvalidArgument(format!(
            "target_h = {target_h} must be smaller than {name} = {extent}"
        )));
    }
    Ok(())
}

/// Disc mesh with `rings` concentric rings: ring `i` carries `6 i` equally
/// spaced vertices at radius `i / rings * radius`, connected in the
/// hexagonal-lattice pattern. The mesh is invariant under rotation by 60° and
/// reflection about the x-axis.
pub fn disc_mesh_with_rings(radius: f64, rings: usize) -> Result<Mesh, MeshError> {
    if !(radius > 0.0) || rings == 0 {
        return Err(MeshError::InvalidArgument("disc needs a positive radius and at least one ring".into()));
    }
    let mut vertices = vec![Point2::new(0.0, 0.0)];
    // first index of each ring
    let mut ring_start = vec![0usize];
    for i in 1..=rings {
        ring_start.push(vertices.len());
        let rho = radius * i as f64 / rings as f64;
        let count = 6 * i;
        for j in 0..count {
            let theta = 2.0 * PI * j as f64 / count as f64;
            if i == rings {
                // exactly on the circle up to rounding of cos/sin
                vertices.push(Point2::new(radius * theta.cos(), radius * theta.sin()));
            } else {
                vertices.push(Point2::new(rho * theta.cos(), rho * theta.sin()));
            }
        }
    }
    let ring_vertex = |i: usize, k: usize| -> usize {
        if i == 0 {
            0
        } else {
            ring_start[i] + k % (6 * i)
        }
    };
    let mut triangles = Vec::with_capacity(6 * rings * rings);
    for i in 1..=rings {
        for s in 0..6 {
            for t in 0..i {
                let outer0 = ring_vertex(i, s * i + t);
                let outer1 = ring_vertex(i, s * i + t + 1);
                let inner0 = ring_vertex(i - 1, s * (i - 1) + t);
                triangles.push([outer0, outer1, inner0]);
                if t + 1 < i {
                    let inner1 = ring_vertex(i - 1, s * (i - 1) + t + 1);
                    triangles.push([inner0, outer1, inner1]);
                }
            }
        }
    }
    Mesh::new(vertices, triangles)
}

/// Concentric-ring mesh of the disc of the given radius centred at the origin,
/// using the fewest rings for which the maximum edge length is at most
/// `target_h`.
pub fn generate_disc_mesh(radius: f64, target_h: f64) -> Result<Mesh, MeshError> {
    check_size_arguments(radius, target_h, "radius")?;
    let mut rings = (radius / target_h).ceil().max(1.0) as usize;
    loop {
        let mesh = disc_mesh_with_rings(radius, rings)?;
        if mesh.h() <= target_h {
            return Ok(mesh);
        }
        rings += 1;
    }
}

/// Mesh of the rotated square `|x| + |y| < half_width` on the axis-aligned
/// lattice of spacing `half_width / m`. Each quadrant is a uniformly subdivided
/// right triangle, so boundary edges are lattice diagonals and boundary
/// vertices lie exactly on the diamond.
pub fn diamond_mesh_with_divisions(half_width: f64, m: usize) -> Result<Mesh, MeshError> {
    if !(half_width > 0.0) || m == 0 {
        return Err(MeshError::InvalidArgument("diamond needs a positive half-width and m >= 1".into()));
    }
    let mi = m as i64;
    let side = 2 * mi + 1;
    let mut index = vec![usize::MAX; (side * side) as usize];
    let mut vertices = Vec::new();
    let coord = |k: i64| half_width * k as f64 / m as f64;
    for iy in -mi..=mi {
        for ix in -mi..=mi {
            if ix.abs() + iy.abs() <= mi {
                index[((iy + mi) * side + ix + mi) as usize] = vertices.len();
                vertices.push(Point2::new(coord(ix), coord(iy)));
            }
        }
    }
    let at = |ix: i64, iy: i64| index[((iy + mi) * side + ix + mi) as usize];
    let mut triangles = Vec::with_capacity(4 * m * m);
    for (sx, sy) in [(1i64, 1i64), (-1, 1), (-1, -1), (1, -1)] {
        let flip = sx * sy < 0;
        let mut push = |a: usize, b: usize, c: usize| {
            triangles.push(if flip { [a, c, b] } else { [a, b, c] });
        };
        for j in 0..mi {
            for i in 0..mi - j {
                let p = at(sx * i, sy * j);
                let q = at(sx * (i + 1), sy * j);
                let r = at(sx * i, sy * (j + 1));
                push(p, q, r);
                if i + j + 2 <= mi {
                    let s = at(sx * (i + 1), sy * (j + 1));
                    push(q, s, r);
                }
            }
        }
    }
    Mesh::new(vertices, triangles)
}

/// Diamond mesh with the fewest lattice divisions for which `h <= target_h`.
pub fn generate_diamond_mesh(half_width: f64, target_h: f64) -> Result<Mesh, MeshError> {
    check_size_arguments(half_width, target_h, "half_width")?;
    // h is the lattice diagonal sqrt(2) * half_width / m
    let mut m = (std::f64::consts::SQRT_2 * half_width / target_h).ceil().max(1.0) as usize;
    loop {
        let mesh = diamond_mesh_with_divisions(half_width, m)?;
        if mesh.h() <= target_h {
            return Ok(mesh);
        }
        m += 1;
    }
}

/// Splits every triangle into four through its edge midpoints. Old vertices
/// keep their indices; midpoints follow in order of first appearance. When a
/// circle is given, midpoints of boundary edges are projected radially onto it.
pub fn uniform_refine(mesh: &Mesh, project_to: Option<&Circle>) -> Result<Mesh, MeshError> {
    let mut vertices = mesh.vertices.clone();
    let boundary: std::collections::HashSet<(usize, usize)> =
        mesh.boundary_edges.iter().map(|&[p, q]| (p.min(q), p.max(q))).collect();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |p: usize, q: usize, vertices: &mut Vec<Point2>| -> usize {
        let key = (p.min(q), p.max(q));
        *midpoint.entry(key).or_insert_with(|| {
            let mut m = vertices[p].midpoint(vertices[q]);
            if let Some(circle) = project_to {
                if boundary.contains(&key) {
                    m = circle.project(m);
                }
            }
            vertices.push(m);
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let ca = mid(c, a, &mut vertices);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    Mesh::new(vertices, triangles)
}

/// Writes the plain-text mesh format: a header line
/// `vertices N triangles T boundary_edges B`, then one line per vertex,
/// triangle and boundary edge. Reals carry 17 significant digits.
pub fn write_mesh<W: Write>(mesh: &Mesh, mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "vertices {} triangles {} boundary_edges {}",
        mesh.vertices.len(),
        mesh.triangles.len(),
        mesh.boundary_edges.len()
    )?;
    for p in &mesh.vertices {
        writeln!(out, "{:.16e} {:.16e}", p.x, p.y)?;
    }
    for t in &mesh.triangles {
        writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
    }
    for e in &mesh.boundary_edges {
        writeln!(out, "{} {}", e[0], e[1])?;
    }
    Ok(())
}

pub fn read_mesh<R: BufRead>(input: R) -> Result<Mesh, MeshError> {
    let mut lines = input.lines().enumerate();
    let parse_err = |line: usize, message: String| MeshError::Parse { line: line + 1, message };
    let (hline, header) = lines.next().ok_or_else(|| parse_err(0, "empty file".into()))?;
    let header = header?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let counts = match tokens.as_slice() {
        ["vertices", n, "triangles", t, "boundary_edges", b] => [n, t, b].map(|s| s.parse::<usize>()),
        _ => return Err(parse_err(hline, format!("malformed header `{header}`"))),
    };
    let [n, t, b] = match counts {
        [Ok(n), Ok(t), Ok(b)] => [n, t, b],
        _ => return Err(parse_err(hline, "header counts must be non-negative integers".into())),
    };
    let mut next_fields = |expected: usize| -> Result<(usize, Vec<String>), MeshError> {
        let (i, line) = lines.next().ok_or_else(|| parse_err(hline, "unexpected end of file".into()))?;
        let line = line?;
        let fields: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
        if fields.len() != expected {
            return Err(parse_err(i, format!("expected {expected} fields, found {}", fields.len())));
        }
        Ok((i, fields))
    };
    let mut vertices = Vec::with_capacity(n);
    for _ in 0..n {
        let (i, f) = next_fields(2)?;
        let x = f[0].parse::<f64>().map_err(|e| parse_err(i, e.to_string()))?;
        let y = f[1].parse::<f64>().map_err(|e| parse_err(i, e.to_string()))?;
        vertices.push(Point2::new(x, y));
    }
    let mut triangles = Vec::with_capacity(t);
    for _ in 0..t {
        let (i, f) = next_fields(3)?;
        let mut tri = [0usize; 3];
        for k in 0..3 {
            tri[k] = f[k].parse().map_err(|e: std::num::ParseIntError| parse_err(i, e.to_string()))?;
        }
        triangles.push(tri);
    }
    let mut listed = Vec::with_capacity(b);
    for _ in 0..b {
        let (i, f) = next_fields(2)?;
        let p: usize = f[0].parse().map_err(|e: std::num::ParseIntError| parse_err(i, e.to_string()))?;
        let q: usize = f[1].parse().map_err(|e: std::num::ParseIntError| parse_err(i, e.to_string()))?;
        listed.push([p, q]);
    }
    let mesh = Mesh::new(vertices, triangles)?;
    let mut expected: Vec<[usize; 2]> = mesh.boundary_edges.clone();
    expected.sort_unstable();
    listed.sort_unstable();
    if expected != listed {
        return Err(MeshError::BoundaryLoop("listed boundary edges do not match the triangulation".into()));
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge_set(mesh: &Mesh) -> HashMap<(usize, usize), usize> {
        let mut edges = HashMap::new();
        for t in mesh.triangles() {
            for k in 0..3 {
                let (p, q) = (t[k], t[(k + 1) % 3]);
                *edges.entry((p.min(q), p.max(q))).or_insert(0) += 1;
            }
        }
        edges
    }

    fn assert_conforming(mesh: &Mesh) {
        let edges = edge_set(mesh);
        let boundary = edges.values().filter(|&&n| n == 1).count();
        assert!(edges.values().all(|&n| n == 1 || n == 2));
        assert_eq!(boundary, mesh.boundary_edges().len());
        assert_eq!(mesh.boundary_vertices().len(), mesh.boundary_edges().len());
        // Euler characteristic of a disc
        let v = mesh.num_vertices() as i64;
        let e = edges.len() as i64;
        let f = mesh.triangles().len() as i64;
        assert_eq!(v - e + f, 1);
        let max_edge = edges.keys().map(|&(p, q)| mesh.vertices()[p].distance(mesh.vertices()[q])).fold(0.0, f64::max);
        assert_eq!(max_edge, mesh.h());
    }

    #[test]
    fn reference_triangle_statistics() {
        let mesh =
            Mesh::new(vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)], vec![[0, 1, 2]])
                .unwrap();
        let stats = mesh.statistics();
        assert_eq!(stats.total_area, 0.5);
        assert!((stats.min_angle - 45.0).abs() < 1e-12);
        assert_eq!(stats.num_boundary_vertices, 3);
        assert_eq!(stats.h, 2f64.sqrt());
    }

    #[test]
    fn clockwise_triangle_is_rejected() {
        let err = Mesh::new(vec![Point2::new(0.0, 0.0), Point2::new(0.0, 1.0), Point2::new(1.0, 0.0)], vec![[0, 1, 2]])
            .unwrap_err();
        assert!(matches!(err, MeshError::Degenerate { .. }));
    }

    #[test]
    fn two_disjoint_triangles_have_two_boundary_loops() {
        let v = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(5.0, 0.0),
            Point2::new(6.0, 0.0),
            Point2::new(5.0, 1.0),
        ];
        let err = Mesh::new(v, vec![[0, 1, 2], [3, 4, 5]]).unwrap_err();
        assert!(matches!(err, MeshError::BoundaryLoop(_)));
    }

    #[test]
    fn disc_mesh_is_contained_and_conforming() {
        let mesh = generate_disc_mesh(0.5, 0.1).unwrap();
        assert!(mesh.h() <= 0.1);
        assert_conforming(&mesh);
        for p in mesh.vertices() {
            assert!(p.norm() <= 0.5 + 1e-12);
        }
        for &v in mesh.boundary_vertices() {
            assert!((mesh.vertices()[v].norm() - 0.5).abs() <= 1e-12 * 0.5);
        }
    }

    #[test]
    fn disc_refinement_monotone() {
        let coarse = generate_disc_mesh(0.5, 0.1).unwrap();
        let fine = generate_disc_mesh(0.5, 0.05).unwrap();
        assert!(fine.h() <= 0.05);
        assert!(fine.num_vertices() > coarse.num_vertices());
    }

    #[test]
    fn disc_min_angle_regression() {
        let stats = generate_disc_mesh(0.5, 0.05).unwrap().statistics();
        assert!(stats.min_angle >= 20.0, "min angle {}", stats.min_angle);
    }

    #[test]
    fn disc_area_defect_is_second_order() {
        let exact = PI * 0.25;
        let mut mesh = generate_disc_mesh(0.5, 0.1).unwrap();
        let circle = Circle { center: Point2::new(0.0, 0.0), radius: 0.5 };
        let mut defects = vec![exact - mesh.total_area()];
        for _ in 0..2 {
            mesh = uniform_refine(&mesh, Some(&circle)).unwrap();
            defects.push(exact - mesh.total_area());
        }
        for w in defects.windows(2) {
            assert!(w[0] > 0.0 && w[1] > 0.0);
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() < 0.2, "area defect ratio {ratio}");
        }
    }

    #[test]
    fn diamond_mesh_is_exact() {
        let mesh = generate_diamond_mesh(1.0, 0.1).unwrap();
        assert!(mesh.h() <= 0.1);
        assert_conforming(&mesh);
        assert!((mesh.total_area() - 2.0).abs() < 1e-13);
        for &v in mesh.boundary_vertices() {
            let p = mesh.vertices()[v];
            assert!((p.x.abs() + p.y.abs() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn diamond_refinement_family() {
        let mut mesh = generate_diamond_mesh(1.0, 0.1).unwrap();
        let base = mesh.statistics();
        for _ in 0..2 {
            let refined = uniform_refine(&mesh, None).unwrap();
            assert_conforming(&refined);
            assert_eq!(refined.triangles().len(), 4 * mesh.triangles().len());
            assert!((refined.total_area() - 2.0).abs() < 1e-12, "area {}", refined.total_area());
            assert!((refined.h() - mesh.h() / 2.0).abs() < 1e-15);
            let stats = refined.statistics();
            assert!((stats.min_angle - base.min_angle).abs() < 1e-9);
            mesh = refined;
        }
    }

    #[test]
    fn projected_refinement_puts_midpoints_on_circle() {
        let mesh = generate_disc_mesh(0.5, 0.1).unwrap();
        let circle = Circle { center: Point2::new(0.0, 0.0), radius: 0.5 };
        let refined = uniform_refine(&mesh, Some(&circle)).unwrap();
        assert_conforming(&refined);
        for &v in refined.boundary_vertices() {
            assert!((refined.vertices()[v].norm() - 0.5).abs() <= 1e-12);
        }
        assert!(refined.h() <= mesh.h() / 2.0 * 1.05);
        let degradation = mesh.statistics().min_angle / refined.statistics().min_angle;
        assert!(degradation < 1.1, "min angle degraded by {degradation}");
    }

    #[test]
    fn invalid_arguments() {
        assert!(generate_disc_mesh(0.0, 0.1).is_err());
        assert!(generate_disc_mesh(0.5, -0.1).is_err());
        assert!(generate_disc_mesh(0.5, 0.6).is_err());
        assert!(generate_diamond_mesh(-1.0, 0.1).is_err());
        assert!(generate_diamond_mesh(1.0, 0.0).is_err());
    }

    #[test]
    fn mesh_file_round_trip() {
        let mesh = generate_disc_mesh(0.5, 0.2).unwrap();
        let mut buf = Vec::new();
        write_mesh(&mesh, &mut buf).unwrap();
        let back = read_mesh(buf.as_slice()).unwrap();
        assert_eq!(back.vertices(), mesh.vertices());
        assert_eq!(back.triangles(), mesh.triangles());
        assert_eq!(back.boundary_edges(), mesh.boundary_edges());
    }

    #[test]
    fn malformed_mesh_file() {
        let err = read_mesh("vertices 3 triangles 1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 1, .. }));
        let err = read_mesh("vertices 3 triangles 1 boundary_edges 3\n0 0\n1 0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, MeshError::Parse { .. }));
    }
}
