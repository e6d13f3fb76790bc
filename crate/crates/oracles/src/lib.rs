//! Reference values computed independently of the finite element code.

use std::f64::consts::PI;

/// Bessel function of the first kind `J_m(x)` from Bessel's integral
/// `(1/pi) int_0^pi cos(m t - x sin t) dt`. The integrand is smooth and
/// periodic, so the trapezoid rule converges geometrically.
pub fn bessel_j(m: i32, x: f64) -> f64 {
    let n = 256 + 4 * (x.abs().ceil() as usize + m.unsigned_abs() as usize);
    let h = PI / n as f64;
    let f = |t: f64| (m as f64 * t - x * t.sin()).cos();
    let mut s = 0.5 * (f(0.0) + f(PI));
    for j in 1..n {
        s += f(j as f64 * h);
    }
    s * h / PI
}

/// `d/dx J_m(x)`.
pub fn bessel_j_prime(m: i32, x: f64) -> f64 {
    0.5 * (bessel_j(m - 1, x) - bessel_j(m + 1, x))
}

/// Determinant whose zeros in `k` are the transmission eigenvalues of the
/// disc of radius `r` with `A = I` and constant index `n`, for angular
/// mode `m`.
pub fn disc_determinant(m: i32, n: f64, r: f64, k: f64) -> f64 {
    let s = n.sqrt();
    bessel_j(m, k * s * r) * bessel_j_prime(m, k * r) - s * bessel_j_prime(m, k * s * r) * bessel_j(m, k * r)
}

/// A real transmission eigenvalue `k` of the disc with its angular mode.
/// Modes `m >= 1` carry multiplicity two (cosine and sine).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscEigenvalue {
    pub m: i32,
    pub k: f64,
    pub multiplicity: usize,
}

/// Real transmission eigenvalues `k` of the isotropic disc in `[lo, hi]`,
/// sorted ascending, for angular modes `0..=m_max`.
pub fn disc_eigenvalues(n: f64, r: f64, lo: f64, hi: f64, m_max: i32) -> Vec<DiscEigenvalue> {
    let samples = 4000;
    let mut out = Vec::new();
    for m in 0..=m_max {
        let f = |k: f64| disc_determinant(m, n, r, k);
        let step = (hi - lo) / samples as f64;
        let mut a = lo;
        let mut fa = f(a);
        for i in 1..=samples {
            let b = lo + i as f64 * step;
            let fb = f(b);
            if fa == 0.0 {
                out.push(DiscEigenvalue { m, k: a, multiplicity: if m == 0 { 1 } else { 2 } });
            } else if fa * fb < 0.0 {
                let k = bisect(&f, a, b);
                out.push(DiscEigenvalue { m, k, multiplicity: if m == 0 { 1 } else { 2 } });
            }
            a = b;
            fa = fb;
        }
    }
    out.sort_by(|x, y| x.k.total_cmp(&y.k));
    out
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let c = 0.5 * (a + b);
        if c <= a || c >= b {
            break;
        }
        let fc = f(c);
        if fc == 0.0 {
            return c;
        }
        if fa * fc < 0.0 {
            b = c;
        } else {
            a = c;
            fa = fc;
        }
    }
    0.5 * (a + b)
}

/// Observed convergence order from errors at two mesh sizes.
pub fn observed_order(err_coarse: f64, err_fine: f64, h_coarse: f64, h_fine: f64) -> f64 {
    (err_coarse / err_fine).ln() / (h_coarse / h_fine).ln()
}
