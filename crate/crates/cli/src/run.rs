//! The batch operations behind the subcommands.

use std::io::Write;
use std::sync::Arc;

use thiserror::Error;
use transeig::assembly::{assemble_system, AssemblyError, DiscreteSystem};
use transeig::c64;
use transeig::mesh::{Mesh, MeshError};
use transeig::operator::{Convention, OperatorError};
use transeig::simh::{
    find_eigenvalues_in, multiplicity, MultiplicityReport, SearchReport, SimhError, TransmissionProblem,
};

use crate::config::RunConfig;

/// Largest distance between eigenvalues paired across refinement levels.
pub const PAIRING_GATE: f64 = 0.1;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("mesh: {0}")]
    Mesh(#[from] MeshError),
    #[error("assembly: {0}")]
    Assembly(#[from] AssemblyError),
    #[error("operator: {0}")]
    Operator(#[from] OperatorError),
    #[error("search: {0}")]
    Search(#[from] SimhError),
    #[error("{0}")]
    Config(String),
}

pub fn assemble(cfg: &RunConfig, mesh: &Mesh) -> Result<Arc<DiscreteSystem>, RunError> {
    let material = cfg.material_model().map_err(RunError::Config)?;
    Ok(Arc::new(assemble_system(mesh, &material)?))
}

pub fn problem(cfg: &RunConfig, mesh: &Mesh) -> Result<TransmissionProblem, RunError> {
    Ok(TransmissionProblem::new(assemble(cfg, mesh)?, cfg.convention())?)
}

pub struct FindResult {
    pub h: f64,
    pub report: SearchReport,
}

/// Searches the configured region on `mesh`, with multiplicities when
/// `multiplicity_probes` is positive.
pub fn find_on_mesh(cfg: &RunConfig, mesh: &Mesh) -> Result<FindResult, RunError> {
    let problem = problem(cfg, mesh)?;
    let icfg = cfg.indicator_config();
    let mut report = find_eigenvalues_in(&problem, &cfg.search_regions()?, &icfg)?;
    let m = cfg.multiplicity_probes();
    if m > 0 {
        for hit in &mut report.hits {
            match multiplicity(&problem, hit.value, &icfg, m) {
                Ok(r) => hit.multiplicity = Some(r.kappa),
                Err(e) => report.warnings.push(format!("multiplicity at {}: {e}", hit.value)),
            }
        }
    }
    Ok(FindResult { h: mesh.h(), report })
}

pub fn run_find(cfg: &RunConfig) -> Result<FindResult, RunError> {
    find_on_mesh(cfg, &cfg.mesh()?)
}

pub fn run_multiplicity(cfg: &RunConfig, lambda: c64) -> Result<MultiplicityReport, RunError> {
    let problem = problem(cfg, &cfg.mesh()?)?;
    Ok(multiplicity(&problem, lambda, &cfg.indicator_config(), 3)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    /// `None` when no hit lies within the pairing gate of the previous value.
    pub value: Option<c64>,
    pub err: Option<f64>,
    pub order: Option<f64>,
}

/// Relative errors and orders of a tracked sequence, coarsest first. Row
/// `i` carries `|v_{i-1} - v_i| / |v_{i-1}|` and the order
/// `log2(err_{i-1} / err_i)`. A zero error leaves the order blank.
pub fn convergence_rows(hs: &[f64], values: &[Option<c64>]) -> Vec<ConvergenceRow> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(hs.len());
    for (i, (&h, &value)) in hs.iter().zip(values).enumerate() {
        let err = match (i.checked_sub(1).and_then(|j| values[j]), value) {
            (Some(prev), Some(v)) => Some((prev - v).norm() / prev.norm()),
            _ => None,
        };
        let order = match (rows.last().and_then(|r| r.err), err) {
            (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some((a / b).log2()),
            _ => None,
        };
        rows.push(ConvergenceRow { h, value, err, order });
    }
    rows
}

/// Nearest hit to `previous` within [`PAIRING_GATE`].
pub fn pair(previous: c64, hits: &[c64]) -> Option<c64> {
    hits.iter()
        .copied()
        .filter(|v| (v - previous).norm() <= PAIRING_GATE)
        .min_by(|a, b| (a - previous).norm().total_cmp(&(b - previous).norm()))
}

pub struct ConvergenceResult {
    pub rows: Vec<ConvergenceRow>,
    pub levels: Vec<FindResult>,
}

/// Searches every level of the nested family and follows the eigenvalue
/// nearest `converge.track` across levels.
pub fn run_converge(cfg: &RunConfig, levels: usize) -> Result<ConvergenceResult, RunError> {
    if levels < 3 {
        return Err(RunError::Config(format!("a convergence study needs at least 3 levels, got {levels}")));
    }
    let track =
        cfg.converge.as_ref().ok_or_else(|| RunError::Config("missing [converge] section with `track`".into()))?.track;
    let meshes = cfg.mesh_family(levels - 1)?;
    let mut results = Vec::with_capacity(levels);
    for mesh in &meshes {
        results.push(find_on_mesh(cfg, mesh)?);
    }
    let mut reference = c64::new(track[0], track[1]);
    let mut values = Vec::with_capacity(levels);
    for (i, r) in results.iter().enumerate() {
        let hits: Vec<c64> = r.report.hits.iter().map(|h| h.value).collect();
        let v = if i == 0 {
            hits.iter().copied().min_by(|a, b| (a - reference).norm().total_cmp(&(b - reference).norm()))
        } else {
            pair(reference, &hits)
        };
        if let Some(v) = v {
            reference = v;
        }
        values.push(v);
    }
    let hs: Vec<f64> = results.iter().map(|r| r.h).collect();
    Ok(ConvergenceResult { rows: convergence_rows(&hs, &values), levels: results })
}

pub struct SweepPoint {
    pub z: c64,
    pub sigma_min: f64,
}

/// Smallest singular value of the explicit operator on a grid over the
/// region, cell centers row by row from the bottom.
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<SweepPoint>, RunError> {
    let grid = cfg.sweep.clone().ok_or_else(|| RunError::Config("missing [sweep] section".into()))?;
    let sys = assemble(cfg, &cfg.mesh()?)?;
    let op = transeig::operator::TransmissionOperator::new(sys)?;
    let r = cfg.region;
    let conv = cfg.convention();
    let mut out = Vec::with_capacity(grid.nx * grid.ny);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let z = c64::new(
                r.re_min + (i as f64 + 0.5) * (r.re_max - r.re_min) / grid.nx as f64,
                r.im_min + (j as f64 + 0.5) * (r.im_max - r.im_min) / grid.ny as f64,
            );
            let t = op.build_t(conv.to_eta(z))?;
            let s = t.t.singular_values().map_err(|e| RunError::Config(format!("SVD failed: {e:?}")))?;
            out.push(SweepPoint { z, sigma_min: s.into_iter().fold(f64::INFINITY, f64::min) });
        }
    }
    Ok(out)
}

/// Two comment lines naming the tool version, configuration hash and
/// spectral convention.
pub fn csv_preamble(cfg: &RunConfig, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "# transeig {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# config_sha256 {} convention {}", cfg.hash(), cfg.convention())
}

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

pub fn write_hits_csv(cfg: &RunConfig, report: &SearchReport, out: &mut impl Write) -> std::io::Result<()> {
    csv_preamble(cfg, out)?;
    writeln!(out, "re,im,indicator,depth,multiplicity")?;
    for h in &report.hits {
        let m = h.multiplicity.map(|m| m.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{:.6e},{},{}", num(h.value.re), num(h.value.im), h.indicator, h.depth, m)?;
    }
    Ok(())
}

pub fn write_trace_csv(cfg: &RunConfig, report: &SearchReport, out: &mut impl Write) -> std::io::Result<()> {
    csv_preamble(cfg, out)?;
    report.write_trace_csv(out)
}

pub fn write_convergence_csv(cfg: &RunConfig, rows: &[ConvergenceRow], out: &mut impl Write) -> std::io::Result<()> {
    csv_preamble(cfg, out)?;
    writeln!(out, "h,re,im,err,order")?;
    for r in rows {
        let (re, im) = match r.value {
            Some(v) => (num(v.re), num(v.im)),
            None => ("unpaired".to_string(), String::new()),
        };
        let err = r.err.map(|e| format!("{e:.6e}")).unwrap_or_default();
        let order = r.order.map(|o| format!("{o:.4}")).unwrap_or_default();
        writeln!(out, "{},{re},{im},{err},{order}", num(r.h))?;
    }
    Ok(())
}

pub fn write_sweep_csv(cfg: &RunConfig, points: &[SweepPoint], out: &mut impl Write) -> std::io::Result<()> {
    csv_preamble(cfg, out)?;
    writeln!(out, "re,im,sigma_min")?;
    for p in points {
        writeln!(out, "{},{},{:.6e}", num(p.z.re), num(p.z.im), p.sigma_min)?;
    }
    Ok(())
}

/// Coordinate-format export, one `row col value` triplet per line, 0-based.
pub fn write_coo_real(m: &transeig::sparse::CsrMatrix<f64>, out: &mut impl Write) -> std::io::Result<()> {
    for (i, j, v) in m.triplets() {
        writeln!(out, "{i} {j} {v:.17e}")?;
    }
    Ok(())
}

/// Dense complex matrix in coordinate format, `row col re im`.
pub fn write_coo_dense(t: &transeig::operator::OperatorEvaluation, out: &mut impl Write) -> std::io::Result<()> {
    for i in 0..t.t.nrows() {
        for j in 0..t.t.ncols() {
            let v = t.t[(i, j)];
            writeln!(out, "{i} {j} {:.17e} {:.17e}", v.re, v.im)?;
        }
    }
    Ok(())
}

pub fn convention_of(s: &str) -> Result<Convention, RunError> {
    s.parse().map_err(RunError::Config)
}
