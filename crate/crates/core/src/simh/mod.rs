//! Spectral-indicator search for the eigenvalues of a holomorphic operator
//! function inside a square of the complex plane.
//!
//! For a probe `f` the indicator of a square is the norm of the contour
//! integral `(1 / 2 pi i) \oint T(z)^{-1} f dz` over the circumscribed circle,
//! which is the spectral projection of `f` onto the eigenvalues inside. Squares
//! whose indicator exceeds the threshold are split into four until their side
//! drops below the precision.

mod multiplicity;
mod quadrature;

use std::f64::consts::PI;
use std::io::{self, Write};
use std::sync::Arc;

use faer::{c64, Mat, MatRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

pub use multiplicity::{moment_matrix, multiplicity, MomentMatrix, MultiplicityReport};
pub use quadrature::{circumscribe, contour_quadrature, ContourCircle};

use crate::assembly::DiscreteSystem;
use crate::operator::{Convention, OperatorError, TransmissionOperator};

/// A matrix-valued function of a spectral parameter whose inverse can be
/// applied to a block of boundary vectors.
pub trait SpectralFunction: Sync {
    fn dim(&self) -> usize;

    /// Solves `T(z) X = F`.
    fn solve(&self, z: c64, f: MatRef<'_, c64>) -> Result<Mat<c64>, OperatorError>;

    /// Solves `T(z_i) X_i = F` for a group of nearby parameters.
    fn solve_many(&self, zs: &[c64], f: MatRef<'_, c64>) -> Vec<Result<Mat<c64>, OperatorError>> {
        zs.par_iter().map(|&z| self.solve(z, f)).collect()
    }

    /// Rejects search regions outside the admissible parameter domain.
    fn check_region(&self, _region: &SearchRegion) -> Result<(), SimhError> {
        Ok(())
    }
}

/// The transmission operator with its spectral parameter given in a chosen
/// convention.
pub struct TransmissionProblem {
    operator: TransmissionOperator,
    convention: Convention,
}

impl TransmissionProblem {
    pub fn new(sys: Arc<DiscreteSystem>, convention: Convention) -> Result<Self, OperatorError> {
        Ok(Self { operator: TransmissionOperator::new(sys)?, convention })
    }

    pub fn operator(&self) -> &TransmissionOperator {
        &self.operator
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }
}

impl SpectralFunction for TransmissionProblem {
    fn dim(&self) -> usize {
        self.operator.n_b()
    }

    fn solve(&self, z: c64, f: MatRef<'_, c64>) -> Result<Mat<c64>, OperatorError> {
        self.operator.resolvent(self.convention.to_eta(z))?.apply(f)
    }

    /// Shares one factorization between the group, anchored above its
    /// bounding box so that the anchor stays clear of the enclosed spectrum.
    fn solve_many(&self, zs: &[c64], f: MatRef<'_, c64>) -> Vec<Result<Mat<c64>, OperatorError>> {
        if zs.len() < 4 {
            return zs.par_iter().map(|&z| self.solve(z, f)).collect();
        }
        let (mut lo, mut hi) = (zs[0], zs[0]);
        for z in zs {
            lo = c64::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = c64::new(hi.re.max(z.re), hi.im.max(z.im));
        }
        let center = (lo + hi) * 0.5;
        let extent = (hi.re - lo.re).max(hi.im - lo.im);
        let anchor = self.convention.to_eta(center + c64::new(0.0, 0.5 * extent));
        let etas: Vec<c64> = zs.iter().map(|&z| self.convention.to_eta(z)).collect();
        self.operator.solve_shifted(anchor, &etas, f).results
    }

    fn check_region(&self, region: &SearchRegion) -> Result<(), SimhError> {
        if self.convention == Convention::K && region.center.re - region.side / 2.0 < 0.0 {
            return Err(SimhError::InvalidRegion("in k-mode the region must satisfy Re k >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SimhError {
    #[error("invalid search region: {0}")]
    InvalidRegion(String),
    #[error("invalid indicator configuration: {0}")]
    InvalidConfig(String),
    #[error("operator singular on the contour around {center} even after rotating the nodes; shift the region")]
    SingularContour { center: c64 },
    #[error("eigenvalue near {center} is not isolated: the annulus of radii {inner:e} and {outer:e} carries spectrum")]
    NotIsolated { center: c64, inner: f64, outer: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Axis-aligned square in the spectral plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchRegion {
    pub center: c64,
    pub side: f64,
}

impl SearchRegion {
    pub fn new(center: c64, side: f64) -> Result<Self, SimhError> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(SimhError::InvalidRegion(format!("side must be positive, got {side}")));
        }
        if !(center.re.is_finite() && center.im.is_finite()) {
            return Err(SimhError::InvalidRegion("center must be finite".into()));
        }
        Ok(Self { center, side })
    }

    /// Corners in the order NW, NE, SW, SE.
    pub fn corners(&self) -> [c64; 4] {
        let d = self.side / 2.0;
        [
            self.center + c64::new(-d, d),
            self.center + c64::new(d, d),
            self.center + c64::new(-d, -d),
            self.center + c64::new(d, -d),
        ]
    }

    /// The four quarters in the order NW, NE, SW, SE.
    pub fn children(&self) -> [SearchRegion; 4] {
        let d = self.side / 4.0;
        let side = self.side / 2.0;
        [
            SearchRegion { center: self.center + c64::new(-d, d), side },
            SearchRegion { center: self.center + c64::new(d, d), side },
            SearchRegion { center: self.center + c64::new(-d, -d), side },
            SearchRegion { center: self.center + c64::new(d, -d), side },
        ]
    }

    /// Mirror image under complex conjugation.
    pub fn conjugate(&self) -> Self {
        Self { center: self.center.conj(), side: self.side }
    }

    pub fn contains(&self, z: c64, slack: f64) -> bool {
        let d = self.side / 2.0 + slack;
        (z.re - self.center.re).abs() <= d && (z.im - self.center.im).abs() <= d
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorConfig {
    /// Quadrature nodes per contour.
    pub n0: usize,
    /// Threshold on the relative indicator above which a square is split.
    pub delta0: f64,
    /// Side length at which a square is accepted as an eigenvalue location.
    pub eps0: f64,
    pub seed: u64,
    pub max_depth: usize,
    /// Re-evaluate every accepted location with `2 n0` nodes and warn on
    /// disagreement.
    pub check_doubled: bool,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        Self { n0: 16, delta0: 1e-3, eps0: 1e-6, seed: 0, max_depth: 48, check_doubled: true }
    }
}

impl IndicatorConfig {
    pub fn validate(&self) -> Result<(), SimhError> {
        if self.n0 < 8 || !self.n0.is_multiple_of(2) {
            return Err(SimhError::InvalidConfig(format!("n0 must be even and at least 8, got {}", self.n0)));
        }
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return Err(SimhError::InvalidConfig(format!("delta0 must be positive, got {}", self.delta0)));
        }
        if !(self.eps0 > 0.0 && self.eps0.is_finite()) {
            return Err(SimhError::InvalidConfig(format!("eps0 must be positive, got {}", self.eps0)));
        }
        Ok(())
    }
}

/// Random probe block with entries uniform in the unit square of the complex
/// plane. Columns depend only on `(seed, stream, column index)`, so growing
/// `m` keeps the leading columns.
pub fn probe_block(dim: usize, m: usize, seed: u64, stream: u64) -> Mat<c64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut f = Mat::<c64>::zeros(dim, m);
    for j in 0..m {
        for i in 0..dim {
            f[(i, j)] = c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
    }
    f
}

pub(crate) fn column_norm(a: MatRef<'_, c64>, j: usize) -> f64 {
    (0..a.nrows()).map(|i| a[(i, j)].norm_sqr()).sum::<f64>().sqrt()
}

/// Contour integral `sum_j w_j T(z_j)^{-1} F` over each circle, evaluated
/// concurrently over all nodes of all circles. A circle with a singular node
/// is recomputed once with its nodes rotated by half a step.
pub(crate) fn contour_moments<F: SpectralFunction>(
    problem: &F,
    circles: &[ContourCircle],
    n0: usize,
    f: MatRef<'_, c64>,
) -> Result<Vec<Mat<c64>>, SimhError> {
    let first = integrate(problem, circles, n0, 0.0, f);
    let mut out = Vec::with_capacity(circles.len());
    for (circle, result) in circles.iter().zip(first) {
        let moment = match result {
            Err(e) if e.is_singular() => {
                match integrate(problem, std::slice::from_ref(circle), n0, PI / n0 as f64, f).pop().expect("one circle")
                {
                    Ok(m) => m,
                    Err(e) if e.is_singular() => return Err(SimhError::SingularContour { center: circle.center }),
                    Err(e) => return Err(e.into()),
                }
            }
            other => other?,
        };
        out.push(moment);
    }
    Ok(out)
}

fn integrate<F: SpectralFunction>(
    problem: &F,
    circles: &[ContourCircle],
    n0: usize,
    phase: f64,
    f: MatRef<'_, c64>,
) -> Vec<Result<Mat<c64>, OperatorError>> {
    let rules: Vec<Vec<(c64, c64)>> = circles.iter().map(|c| quadrature::rotated_quadrature(c, n0, phase)).collect();
    let mut solved: Vec<Option<Result<Mat<c64>, OperatorError>>> = (0..circles.len() * n0).map(|_| None).collect();
    for group in neighbourhoods(circles) {
        let nodes: Vec<c64> = group.iter().flat_map(|&c| rules[c].iter().map(|&(z, _)| z)).collect();
        let mut out = problem.solve_many(&nodes, f).into_iter();
        for &c in &group {
            for j in 0..n0 {
                solved[c * n0 + j] = out.next();
            }
        }
    }
    // sequential accumulation in node order keeps the sums reproducible
    let mut results = Vec::with_capacity(circles.len());
    let mut solved = solved.into_iter().map(|x| x.expect("one result per node"));
    for rule in &rules {
        let mut acc: Result<Mat<c64>, OperatorError> = Ok(Mat::zeros(f.nrows(), f.ncols()));
        for &(_, w) in rule {
            let x = solved.next().expect("one result per node");
            acc = match (acc, x) {
                (Ok(mut a), Ok(x)) => {
                    for j in 0..a.ncols() {
                        for i in 0..a.nrows() {
                            a[(i, j)] += w * x[(i, j)];
                        }
                    }
                    Ok(a)
                }
                (Err(e), _) | (Ok(_), Err(e)) => Err(e),
            };
        }
        results.push(acc);
    }
    results
}

/// Groups of circles linked by centers closer than twice their summed radii,
/// in order of first member.
fn neighbourhoods(circles: &[ContourCircle]) -> Vec<Vec<usize>> {
    let n = circles.len();
    let mut group = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if group[start] != usize::MAX {
            continue;
        }
        let id = groups.len();
        group[start] = id;
        let mut members = vec![start];
        let mut k = 0;
        while k < members.len() {
            let a = members[k];
            for b in 0..n {
                if group[b] == usize::MAX
                    && (circles[a].center - circles[b].center).norm() <= 2.0 * (circles[a].radius + circles[b].radius)
                {
                    group[b] = id;
                    members.push(b);
                }
            }
            k += 1;
        }
        members.sort_unstable();
        groups.push(members);
    }
    groups
}

/// Relative indicator `|sum_j w_j T(z_j)^{-1} f| / |f|` of each region.
pub fn indicators<F: SpectralFunction>(
    problem: &F,
    regions: &[SearchRegion],
    n0: usize,
    f: &[c64],
) -> Result<Vec<f64>, SimhError> {
    let fm = Mat::from_fn(f.len(), 1, |i, _| f[i]);
    let nf = column_norm(fm.as_ref(), 0);
    let circles: Vec<ContourCircle> = regions.iter().map(circumscribe).collect();
    let moments = contour_moments(problem, &circles, n0, fm.as_ref())?;
    Ok(moments.iter().map(|m| column_norm(m.as_ref(), 0) / nf).collect())
}

pub fn indicator<F: SpectralFunction>(
    problem: &F,
    region: &SearchRegion,
    cfg: &IndicatorConfig,
    f: &[c64],
) -> Result<f64, SimhError> {
    Ok(indicators(problem, std::slice::from_ref(region), cfg.n0, f)?[0])
}

/// The probe used by [`find_eigenvalues`] for a given seed.
pub fn search_probe(dim: usize, seed: u64) -> Vec<c64> {
    let f = probe_block(dim, 1, seed, 0);
    (0..dim).map(|i| f[(i, 0)]).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenvalueHit {
    pub value: c64,
    pub indicator: f64,
    pub depth: usize,
    pub multiplicity: Option<usize>,
}

/// One visited square of the search tree.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub depth: usize,
    pub center: c64,
    pub side: f64,
    pub indicator: f64,
    /// Index of the parent record, `None` for roots.
    pub parent: Option<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct SearchReport {
    pub hits: Vec<EigenvalueHit>,
    pub trace: Vec<TraceRecord>,
    /// Number of operator solves performed.
    pub evaluations: usize,
    pub warnings: Vec<String>,
    /// False when the depth cap stopped the subdivision early.
    pub complete: bool,
}

impl SearchReport {
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "depth,re,im,side,indicator")?;
        for r in &self.trace {
            writeln!(out, "{},{:.12e},{:.12e},{:.6e},{:.6e}", r.depth, r.center.re, r.center.im, r.side, r.indicator)?;
        }
        Ok(())
    }
}

struct Terminal {
    center: c64,
    side: f64,
    indicator: f64,
    depth: usize,
}

/// Breadth-first subdivision of `root`; see the module documentation.
pub fn find_eigenvalues<F: SpectralFunction>(
    problem: &F,
    root: &SearchRegion,
    cfg: &IndicatorConfig,
) -> Result<SearchReport, SimhError> {
    find_eigenvalues_in(problem, std::slice::from_ref(root), cfg)
}

/// Searches several roots at once, merging hits that fall within `2 eps0` of
/// each other across roots.
pub fn find_eigenvalues_in<F: SpectralFunction>(
    problem: &F,
    roots: &[SearchRegion],
    cfg: &IndicatorConfig,
) -> Result<SearchReport, SimhError> {
    cfg.validate()?;
    for root in roots {
        SearchRegion::new(root.center, root.side)?;
        problem.check_region(root)?;
    }
    let f = search_probe(problem.dim(), cfg.seed);
    let mut report = SearchReport { complete: true, ..Default::default() };
    let mut terminals = Vec::new();
    let mut level: Vec<(SearchRegion, Option<usize>)> = roots.iter().map(|r| (*r, None)).collect();
    let mut depth = 0;
    while !level.is_empty() {
        let regions: Vec<SearchRegion> = level.iter().map(|(r, _)| *r).collect();
        let values = indicators(problem, &regions, cfg.n0, &f)?;
        report.evaluations += regions.len() * cfg.n0;
        let mut next = Vec::new();
        for ((region, parent), indicator) in level.iter().zip(values) {
            let id = report.trace.len();
            report.trace.push(TraceRecord {
                depth,
                center: region.center,
                side: region.side,
                indicator,
                parent: *parent,
            });
            if !(indicator > cfg.delta0) {
                continue;
            }
            let terminal = Terminal { center: region.center, side: region.side, indicator, depth };
            if region.side <= cfg.eps0 {
                terminals.push(terminal);
            } else if depth >= cfg.max_depth {
                report.complete = false;
                report.warnings.push(format!(
                    "maximum depth {} reached at {} with side {:e}; location is approximate",
                    cfg.max_depth, region.center, region.side
                ));
                terminals.push(terminal);
            } else {
                next.extend(region.children().into_iter().map(|c| (c, Some(id))));
            }
        }
        level = next;
        depth += 1;
    }

    for members in cluster(&terminals, cfg.eps0) {
        let weight: f64 = members.iter().map(|&i| terminals[i].indicator).sum();
        let value = members.iter().map(|&i| terminals[i].center * terminals[i].indicator).sum::<c64>() / weight;
        // the square nearest to the merged location represents the cluster
        let nearest = members
            .iter()
            .copied()
            .min_by(|&a, &b| (terminals[a].center - value).norm().total_cmp(&(terminals[b].center - value).norm()))
            .expect("non-empty cluster");
        let t = &terminals[nearest];
        if cfg.check_doubled {
            let square = SearchRegion { center: value, side: t.side };
            let single = indicators(problem, &[square], cfg.n0, &f)?[0];
            let doubled = indicators(problem, &[square], 2 * cfg.n0, &f)?[0];
            report.evaluations += 3 * cfg.n0;
            if (doubled - single).abs() > 0.1 * doubled.max(single) {
                report
                    .warnings
                    .push(format!("indicator at {value} changes from {single:e} to {doubled:e} when doubling n0"));
            }
        }
        report.hits.push(EigenvalueHit {
            value,
            indicator: t.indicator,
            depth: members.iter().map(|&i| terminals[i].depth).max().unwrap_or(0),
            multiplicity: None,
        });
    }
    report.hits.sort_by(|a, b| a.value.re.total_cmp(&b.value.re).then(a.value.im.total_cmp(&b.value.im)));
    Ok(report)
}

/// Single-linkage clusters of terminal squares whose centers lie within twice
/// the larger of `eps0` and their sides.
fn cluster(terminals: &[Terminal], eps0: f64) -> Vec<Vec<usize>> {
    let n = terminals.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let gap = 2.0 * eps0.max(terminals[i].side).max(terminals[j].side);
            if (terminals[i].center - terminals[j].center).norm() <= gap * (1.0 + 1e-9) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

/// Squares of side `min(width, height)` covering the rectangle
/// `[re_min, re_max] x [im_min, im_max]`; neighbours overlap when the aspect
/// ratio is not an integer.
pub fn tile_rectangle(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Vec<SearchRegion>, SimhError> {
    let (w, h) = (re_max - re_min, im_max - im_min);
    if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
        return Err(SimhError::InvalidRegion(format!("empty rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}]")));
    }
    let side = w.min(h);
    let count = ((w.max(h) / side) - 1e-9).ceil().max(1.0) as usize;
    let long = w.max(h) - side;
    let step = if count > 1 { long / (count - 1) as f64 } else { 0.0 };
    let start = c64::new(re_min + side / 2.0, im_min + side / 2.0);
    (0..count)
        .map(|i| {
            let shift = step * i as f64;
            let center = if w >= h { start + c64::new(shift, 0.0) } else { start + c64::new(0.0, shift) };
            SearchRegion::new(center, side)
        })
        .collect()
}
