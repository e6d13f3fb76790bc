use faer::{c64, Mat};

use super::{column_norm, contour_moments, probe_block, ContourCircle, IndicatorConfig, SimhError, SpectralFunction};

/// Radius of the multiplicity contour in units of `eps0`.
pub const RADIUS_FACTOR: f64 = 10.0;
/// Singular values at or above this fraction of the largest count toward the rank.
pub const RANK_CUTOFF: f64 = 1e-8;
/// Largest probe block tried during escalation.
pub const MAX_PROBES: usize = 15;

const PROBE_STREAM: u64 = 1;

/// Contour-integrated moment `A_0 = sum_j w_j T(z_j)^{-1} F` for a block of
/// unit-norm probes.
#[derive(Clone, Debug)]
pub struct MomentMatrix {
    pub m: usize,
    pub a0: Mat<c64>,
    pub singular_values: Vec<f64>,
}

impl MomentMatrix {
    /// Number of singular values above the cutoff, or zero when even the
    /// largest is below `delta0`.
    pub fn rank(&self, delta0: f64) -> usize {
        let s1 = self.singular_values.first().copied().unwrap_or(0.0);
        if !(s1 > delta0) {
            return 0;
        }
        self.singular_values.iter().filter(|&&s| s >= RANK_CUTOFF * s1).count()
    }
}

fn unit_probes(dim: usize, m: usize, seed: u64) -> Mat<c64> {
    let mut f = probe_block(dim, m, seed, PROBE_STREAM);
    for j in 0..m {
        let n = column_norm(f.as_ref(), j);
        for i in 0..dim {
            f[(i, j)] /= n;
        }
    }
    f
}

fn singular_values(a: &Mat<c64>) -> Vec<f64> {
    let mut s = a.singular_values().expect("singular values of a small dense block");
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Moment matrix on `circle` for `m` probes.
pub fn moment_matrix<F: SpectralFunction>(
    problem: &F,
    circle: &ContourCircle,
    cfg: &IndicatorConfig,
    m: usize,
) -> Result<MomentMatrix, SimhError> {
    let f = unit_probes(problem.dim(), m, cfg.seed);
    let a0 = contour_moments(problem, std::slice::from_ref(circle), cfg.n0, f.as_ref())?.pop().expect("one circle");
    let singular_values = singular_values(&a0);
    Ok(MomentMatrix { m, a0, singular_values })
}

#[derive(Clone, Debug)]
pub struct MultiplicityReport {
    pub kappa: usize,
    /// Probe count of the final moment matrix.
    pub probes: usize,
    pub radius: f64,
    pub singular_values: Vec<f64>,
    /// Set when the rank still equalled the probe count at [`MAX_PROBES`].
    pub saturated: bool,
}

/// Number of eigenvalues, counted with multiplicity, inside the circle of
/// radius `RADIUS_FACTOR * eps0` around `lambda`. Starts with `m` probes and
/// adds two while the rank equals the probe count. Fails when the circle of
/// twice the radius encloses more spectrum.
pub fn multiplicity<F: SpectralFunction>(
    problem: &F,
    lambda: c64,
    cfg: &IndicatorConfig,
    m: usize,
) -> Result<MultiplicityReport, SimhError> {
    cfg.validate()?;
    if m == 0 {
        return Err(SimhError::InvalidConfig("probe count must be positive".into()));
    }
    let cap = MAX_PROBES.min(problem.dim());
    let radius = RADIUS_FACTOR * cfg.eps0;
    let mut m = m.min(cap);
    loop {
        let f = unit_probes(problem.dim(), m, cfg.seed);
        let circles =
            [ContourCircle { center: lambda, radius }, ContourCircle { center: lambda, radius: 2.0 * radius }];
        let mut moments = contour_moments(problem, &circles, cfg.n0, f.as_ref())?;
        let outer = moments.pop().expect("two circles");
        let inner = moments.pop().expect("two circles");
        let annulus = &outer - &inner;
        let spill = singular_values(&annulus).first().copied().unwrap_or(0.0);
        if spill > cfg.delta0 {
            return Err(SimhError::NotIsolated { center: lambda, inner: radius, outer: 2.0 * radius });
        }
        let moment = MomentMatrix { m, singular_values: singular_values(&inner), a0: inner };
        let kappa = moment.rank(cfg.delta0);
        if kappa < m || m >= cap {
            return Ok(MultiplicityReport {
                kappa,
                probes: m,
                radius,
                singular_values: moment.singular_values,
                saturated: kappa == m,
            });
        }
        m = (m + 2).min(cap);
    }
}
