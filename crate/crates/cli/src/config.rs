//! Run configuration read from TOML.

use std::fmt;
use std::ops::Range;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use transeig::assembly::MaterialModel;
use transeig::mesh::{generate_diamond_mesh, generate_disc_mesh, uniform_refine, Circle, Mesh, MeshError, Point2};
use transeig::operator::Convention;
use transeig::simh::{tile_rectangle, IndicatorConfig, SearchRegion, SimhError};

use crate::expr::{Expr, ExprError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Syntax(String),
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum Domain {
    Disc {
        #[serde(default = "default_radius")]
        radius: f64,
    },
    Diamond {
        #[serde(default = "default_half_width")]
        half_width: f64,
    },
}

fn default_radius() -> f64 {
    0.5
}

fn default_half_width() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub target_h: f64,
    #[serde(default)]
    pub refine_levels: usize,
    #[serde(default = "yes")]
    pub project_boundary: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub preset: Option<String>,
    pub a11: Option<String>,
    pub a12: Option<String>,
    pub a22: Option<String>,
    pub n: Option<String>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IndicatorSection {
    pub n0: Option<usize>,
    pub delta0: Option<f64>,
    pub eps0: Option<f64>,
    pub seed: Option<u64>,
    pub max_depth: Option<usize>,
    pub check_doubled: Option<bool>,
    /// Probe count for the multiplicity of every hit; 0 skips it.
    pub multiplicity_probes: Option<usize>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSection {
    /// Starting point of the tracked eigenvalue on the coarsest level.
    pub track: [f64; 2],
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub nx: usize,
    pub ny: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "hits_name")]
    pub hits: PathBuf,
    #[serde(default = "trace_name")]
    pub trace: PathBuf,
    #[serde(default = "convergence_name")]
    pub convergence: PathBuf,
    #[serde(default = "sweep_name")]
    pub sweep: PathBuf,
    #[serde(default = "mesh_name")]
    pub mesh: PathBuf,
}

fn hits_name() -> PathBuf {
    "hits.csv".into()
}
fn trace_name() -> PathBuf {
    "trace.csv".into()
}
fn convergence_name() -> PathBuf {
    "convergence.csv".into()
}
fn sweep_name() -> PathBuf {
    "sweep.csv".into()
}
fn mesh_name() -> PathBuf {
    "mesh.txt".into()
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            hits: hits_name(),
            trace: trace_name(),
            convergence: convergence_name(),
            sweep: sweep_name(),
            mesh: mesh_name(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    convention: Option<String>,
    domain: toml::Spanned<Domain>,
    mesh: toml::Spanned<MeshConfig>,
    material: toml::Spanned<MaterialConfig>,
    region: toml::Spanned<Region>,
    #[serde(default)]
    indicator: Option<toml::Spanned<IndicatorSection>>,
    #[serde(default)]
    converge: Option<ConvergeSection>,
    #[serde(default)]
    sweep: Option<toml::Spanned<SweepSection>>,
    #[serde(default)]
    outputs: Option<Outputs>,
}

/// Validated configuration. The effective settings, after command-line
/// overrides, are what [`RunConfig::hash`] covers.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct RunConfig {
    pub convention: String,
    pub domain: Domain,
    pub mesh: MeshConfig,
    pub material: MaterialConfig,
    pub region: Region,
    pub indicator: IndicatorSection,
    pub converge: Option<ConvergeSection>,
    pub sweep: Option<SweepSection>,
    #[serde(skip)]
    pub outputs: Outputs,
}

fn line_of(text: &str, span: Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

/// Reads and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let invalid = |span: Range<usize>, message: String| ConfigError::Invalid { line: line_of(text, span), message };

    let convention = raw.convention.unwrap_or_else(|| Convention::default().as_str().to_string());
    convention.parse::<Convention>().map_err(|e| ConfigError::Invalid { line: 1, message: e })?;

    let domain_span = raw.domain.span();
    let domain = raw.domain.into_inner();
    let size = match domain {
        Domain::Disc { radius } => radius,
        Domain::Diamond { half_width } => half_width,
    };
    if !(size > 0.0 && size.is_finite()) {
        return Err(invalid(domain_span, format!("domain size must be positive, found {size}")));
    }

    let mesh_span = raw.mesh.span();
    let mesh = raw.mesh.into_inner();
    if !(mesh.target_h > 0.0 && mesh.target_h < size) {
        return Err(invalid(mesh_span, format!("target_h = {} must lie in (0, {size})", mesh.target_h)));
    }
    if mesh.refine_levels > 6 {
        return Err(invalid(mesh_span, format!("refine_levels = {} exceeds 6", mesh.refine_levels)));
    }

    let region_span = raw.region.span();
    let region = raw.region.into_inner();
    let r = region;
    if !(r.re_min < r.re_max && r.im_min < r.im_max)
        || ![r.re_min, r.re_max, r.im_min, r.im_max].iter().all(|v| v.is_finite())
    {
        return Err(invalid(
            region_span,
            format!("empty region [{}, {}] x [{}, {}]", r.re_min, r.re_max, r.im_min, r.im_max),
        ));
    }

    let (indicator, indicator_span) = match raw.indicator {
        Some(s) => (s.get_ref().clone(), s.span()),
        None => (IndicatorSection::empty(), 0..0),
    };
    indicator.to_config().validate().map_err(|e| invalid(indicator_span, e.to_string()))?;

    let material_span = raw.material.span();
    let material = raw.material.into_inner();
    let cfg = RunConfig {
        convention,
        domain,
        mesh,
        material,
        region,
        indicator,
        converge: raw.converge,
        sweep: None,
        outputs: raw.outputs.unwrap_or_default(),
    };
    cfg.material_model().map_err(|e| invalid(material_span, e))?;
    let sweep = match raw.sweep {
        Some(s) => {
            let (span, s) = (s.span(), s.into_inner());
            if s.nx == 0 || s.ny == 0 {
                return Err(invalid(span, "sweep grid must have at least one point per direction".into()));
            }
            Some(s)
        }
        None => None,
    };
    Ok(RunConfig { sweep, ..cfg })
}

impl IndicatorSection {
    fn empty() -> Self {
        Self {
            n0: None,
            delta0: None,
            eps0: None,
            seed: None,
            max_depth: None,
            check_doubled: None,
            multiplicity_probes: None,
        }
    }

    pub fn to_config(&self) -> IndicatorConfig {
        let d = IndicatorConfig::default();
        IndicatorConfig {
            n0: self.n0.unwrap_or(d.n0),
            delta0: self.delta0.unwrap_or(d.delta0),
            eps0: self.eps0.unwrap_or(d.eps0),
            seed: self.seed.unwrap_or(d.seed),
            max_depth: self.max_depth.unwrap_or(d.max_depth),
            check_doubled: self.check_doubled.unwrap_or(d.check_doubled),
        }
    }
}

/// The presets of the bundled experiments.
pub fn preset(name: &str) -> Option<MaterialModel> {
    Some(match name {
        "isotropic_n16" => MaterialModel::constant("isotropic_n16", [[1.0, 0.0], [0.0, 1.0]], 16.0),
        "aniso_A1" => MaterialModel::constant("aniso_A1", [[0.5, 0.0], [0.0, 0.125]], 1.0),
        "aniso_A2" => MaterialModel::new(
            "aniso_A2",
            Arc::new(|p: Point2| {
                let r2 = p.x * p.x + p.y * p.y;
                [[0.5 * r2, 0.0], [0.0, (2.0 - r2) / 8.0]]
            }),
            Arc::new(|_| 1.0),
        ),
        "reference" => MaterialModel::reference(),
        _ => return None,
    })
}

pub const PRESETS: [&str; 4] = ["isotropic_n16", "aniso_A1", "aniso_A2", "reference"];

fn compile(key: &str, src: &Option<String>, default: &str) -> Result<Expr, String> {
    let text = src.as_deref().unwrap_or(default);
    Expr::parse(text).map_err(|e: ExprError| format!("material.{key} = \"{text}\": {e}"))
}

impl RunConfig {
    pub fn convention(&self) -> Convention {
        self.convention.parse().expect("validated")
    }

    pub fn indicator_config(&self) -> IndicatorConfig {
        self.indicator.to_config()
    }

    pub fn multiplicity_probes(&self) -> usize {
        self.indicator.multiplicity_probes.unwrap_or(0)
    }

    /// Builds the material and checks it at 100 sample points of the domain.
    pub fn material_model(&self) -> Result<MaterialModel, String> {
        let m = &self.material;
        let inline = m.a11.is_some() || m.a12.is_some() || m.a22.is_some() || m.n.is_some();
        let model = match (&m.preset, inline) {
            (Some(_), true) => return Err("give either a preset or inline coefficients, not both".into()),
            (Some(name), false) => preset(name)
                .ok_or_else(|| format!("unknown preset `{name}`, expected one of {}", PRESETS.join(", ")))?,
            (None, false) => return Err("material needs a preset or inline coefficients".into()),
            (None, true) => {
                let a11 = compile("a11", &m.a11, "1")?;
                let a12 = compile("a12", &m.a12, "0")?;
                let a22 = compile("a22", &m.a22, "1")?;
                let n = compile("n", &m.n, "1")?;
                MaterialModel::new(
                    "inline",
                    Arc::new(move |p: Point2| {
                        let off = a12.eval(p.x, p.y);
                        [[a11.eval(p.x, p.y), off], [off, a22.eval(p.x, p.y)]]
                    }),
                    Arc::new(move |p: Point2| n.eval(p.x, p.y)),
                )
            }
        };
        for p in self.sample_points() {
            model.check_at(p).map_err(|e| e.to_string())?;
        }
        Ok(model)
    }

    /// 100 deterministic points strictly inside the domain.
    pub fn sample_points(&self) -> Vec<Point2> {
        match self.domain {
            Domain::Disc { radius } => {
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                (0..100)
                    .map(|i| {
                        let r = radius * ((i as f64 + 0.5) / 100.0).sqrt();
                        let t = i as f64 * golden;
                        Point2::new(r * t.cos(), r * t.sin())
                    })
                    .collect()
            }
            Domain::Diamond { half_width } => {
                let mut pts = Vec::with_capacity(100);
                for i in 0..10 {
                    for j in 0..10 {
                        let s = -0.9 + 0.2 * i as f64;
                        let t = -0.9 + 0.2 * j as f64;
                        pts.push(Point2::new(0.5 * half_width * (s + t), 0.5 * half_width * (s - t)));
                    }
                }
                pts
            }
        }
    }

    /// Meshes of the nested family, coarsest first: the generated mesh and
    /// `refine_levels` uniform refinements.
    pub fn mesh_family(&self, levels: usize) -> Result<Vec<Mesh>, MeshError> {
        let (mut mesh, circle) = match self.domain {
            Domain::Disc { radius } => (
                generate_disc_mesh(radius, self.mesh.target_h)?,
                Some(Circle { center: Point2::new(0.0, 0.0), radius }),
            ),
            Domain::Diamond { half_width } => (generate_diamond_mesh(half_width, self.mesh.target_h)?, None),
        };
        let project = if self.mesh.project_boundary { circle } else { None };
        let mut out = Vec::with_capacity(levels + 1);
        for _ in 0..levels {
            let finer = uniform_refine(&mesh, project.as_ref())?;
            out.push(mesh);
            mesh = finer;
        }
        out.push(mesh);
        Ok(out)
    }

    /// The finest mesh of the family.
    pub fn mesh(&self) -> Result<Mesh, MeshError> {
        Ok(self.mesh_family(self.mesh.refine_levels)?.pop().expect("nonempty family"))
    }

    pub fn search_regions(&self) -> Result<Vec<SearchRegion>, SimhError> {
        let r = self.region;
        tile_rectangle(r.re_min, r.re_max, r.im_min, r.im_max)
    }

    /// Hex SHA-256 of the effective configuration.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("configuration serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}] x [{}, {}]", self.re_min, self.re_max, self.im_min, self.im_max)
    }
}
