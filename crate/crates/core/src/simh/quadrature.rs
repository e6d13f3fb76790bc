use std::f64::consts::{PI, SQRT_2};

use faer::c64;

use super::SearchRegion;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourCircle {
    pub center: c64,
    pub radius: f64,
}

/// The circle through the four corners of `region`.
pub fn circumscribe(region: &SearchRegion) -> ContourCircle {
    ContourCircle { center: region.center, radius: region.side * SQRT_2 / 2.0 }
}

/// Trapezoidal rule for `(1 / 2 pi i) \oint f(z) dz` over `circle`: nodes
/// `c + r e^{2 pi i j / n0}` with weights `r e^{2 pi i j / n0} / n0`.
pub fn contour_quadrature(circle: &ContourCircle, n0: usize) -> Vec<(c64, c64)> {
    rotated_quadrature(circle, n0, 0.0)
}

/// Same rule with every node advanced by the angle `phase`.
pub(crate) fn rotated_quadrature(circle: &ContourCircle, n0: usize, phase: f64) -> Vec<(c64, c64)> {
    (0..n0)
        .map(|j| {
            let offset = c64::from_polar(circle.radius, 2.0 * PI * j as f64 / n0 as f64 + phase);
            (circle.center + offset, offset / n0 as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply(rule: &[(c64, c64)], f: impl Fn(c64) -> c64) -> c64 {
        rule.iter().map(|&(z, w)| w * f(z)).sum()
    }

    #[test]
    fn circumscribed_radius() {
        let c = circumscribe(&SearchRegion::new(c64::new(0.0, 0.0), 2.0).unwrap());
        assert!((c.radius - SQRT_2).abs() < 1e-15);
        let region = SearchRegion::new(c64::new(3.0, 1.0), 1.0).unwrap();
        let c = circumscribe(&region);
        assert_eq!(c.center, c64::new(3.0, 1.0));
        assert!((c.radius - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        for corner in region.corners() {
            assert!(((corner - c.center).norm() - c.radius).abs() < 1e-14);
        }
    }

    #[test]
    fn entire_function_integrates_to_zero() {
        let circle = ContourCircle { center: c64::new(1.0, -0.5), radius: 0.3 };
        for n0 in [8, 16, 32] {
            let rule = contour_quadrature(&circle, n0);
            assert!(apply(&rule, |_| c64::new(1.0, 0.0)).norm() < 1e-15);
            assert!(apply(&rule, |z| z * z).norm() < 1e-14);
        }
    }

    #[test]
    fn centered_pole_is_exact() {
        let circle = ContourCircle { center: c64::new(2.0, 0.25), radius: 0.7 };
        for n0 in [8, 10, 16, 32] {
            let s = apply(&contour_quadrature(&circle, n0), |z| (z - circle.center).inv());
            assert!((s - 1.0).norm() < 1e-14, "n0 = {n0}: {s}");
        }
    }

    #[test]
    fn off_center_pole_converges_geometrically() {
        let circle = ContourCircle { center: c64::new(0.0, 0.0), radius: 1.0 };
        let z0 = c64::from_polar(0.5, 0.3);
        for n0 in [8, 16, 24] {
            let s = apply(&contour_quadrature(&circle, n0), |z| (z - z0).inv());
            // exact value of the trapezoidal sum is 1 / (1 - (z0/r)^n0)
            let err = (s - 1.0).norm();
            assert!(err <= 0.5f64.powi(n0 as i32) * 1.01, "n0 = {n0}: {err}");
        }
        let s = apply(&contour_quadrature(&circle, 16), |z| (z - z0).inv());
        assert!((s - 1.0).norm() <= 2e-5);
    }

    #[test]
    fn rotation_keeps_the_rule_exact_on_poles() {
        let circle = ContourCircle { center: c64::new(0.0, 1.0), radius: 0.5 };
        let rule = rotated_quadrature(&circle, 16, PI / 16.0);
        let s = apply(&rule, |z| (z - circle.center).inv());
        assert!((s - 1.0).norm() < 1e-14);
        for (z, _) in rule {
            assert!(((z - circle.center).norm() - 0.5).abs() < 1e-15);
        }
    }
}
