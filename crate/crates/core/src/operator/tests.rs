use std::sync::Arc;

use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::assembly::{assemble_system, MaterialModel};
use crate::mesh::{diamond_mesh_with_divisions, generate_disc_mesh};

fn disc_operator(material: MaterialModel) -> TransmissionOperator {
    let mesh = generate_disc_mesh(0.5, 0.15).unwrap();
    TransmissionOperator::new(Arc::new(assemble_system(&mesh, &material).unwrap())).unwrap()
}

fn aniso() -> MaterialModel {
    MaterialModel::constant("aniso", [[0.5, 0.0], [0.0, 0.125]], 1.0)
}

fn rhs(n: usize, cols: usize, seed: u64) -> Mat<c64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Mat::from_fn(n, cols, |_, _| c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn max_abs(a: &Mat<c64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

#[test]
fn identical_media_cancel() {
    let op = disc_operator(MaterialModel::reference());
    let mbb = op.system().boundary_mass();
    let scale = (0..mbb.ncols())
        .flat_map(|j| (0..mbb.nrows()).map(move |i| (i, j)))
        .map(|(i, j)| mbb[(i, j)].abs())
        .fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let eta = c64::new(rng.random_range(0.0..30.0), rng.random_range(0.0..5.0));
        let t = op.build_t(eta).unwrap();
        assert!(t.max_abs() <= 1e-12 * scale, "|T| = {} at {eta}", t.max_abs());
    }
}

#[test]
fn constant_solves_robin_problem() {
    let op = disc_operator(MaterialModel::reference());
    let g = vec![c64::new(0.0, -1.0); op.n_b()];
    let u = op.helmholtz_solve(Medium::Reference, c64::new(0.0, 0.0), &g).unwrap();
    for v in u {
        assert!((v - c64::new(1.0, 0.0)).norm() < 1e-10, "{v}");
    }
}

#[test]
fn resolvent_inverts_explicit_operator() {
    let op = disc_operator(MaterialModel::isotropic(16.0));
    let eta = c64::new(9.0, 0.7);
    let t = op.build_t(eta).unwrap();
    let f = rhs(op.n_b(), 3, 1);
    let x = op.resolvent(eta).unwrap().apply(f.as_ref()).unwrap();
    let back = &t.t * &x;
    assert!(max_abs(&(&back - &f)) < 1e-8 * max_abs(&f));

    let y = t.apply_t_inverse(&(0..op.n_b()).map(|i| f[(i, 0)]).collect::<Vec<_>>()).unwrap();
    let rel = (0..op.n_b()).map(|i| (y.x[i] - x[(i, 0)]).norm()).fold(0.0, f64::max) / max_abs(&x);
    assert!(rel < 1e-8, "{rel}");
}

#[test]
fn explicit_operator_is_complex_symmetric() {
    let op = disc_operator(aniso());
    let t = op.build_t(c64::new(4.0, 1.0)).unwrap().t;
    let asym = max_abs(&(&t - &t.transpose().to_owned()));
    assert!(asym < 1e-12 * max_abs(&t), "{asym}");
}

#[test]
fn shifted_solves_match_direct() {
    let op = disc_operator(MaterialModel::isotropic(16.0));
    let center = c64::new(2.6, 0.1);
    let ks: Vec<c64> = (0..16).map(|j| center + c64::from_polar(0.05, j as f64 * std::f64::consts::PI / 8.0)).collect();
    let etas: Vec<c64> = ks.iter().map(|k| k * k).collect();
    let anchor = (center + c64::new(0.0, 0.05)) * (center + c64::new(0.0, 0.05));
    let f = rhs(op.n_b(), 1, 2);
    let s = op.solve_shifted(anchor, &etas, f.as_ref());
    assert_eq!(s.results.len(), etas.len());
    for (eta, x) in etas.iter().zip(&s.results) {
        let d = op.resolvent(*eta).unwrap().apply(f.as_ref()).unwrap();
        let x = x.as_ref().unwrap();
        let rel = (&d - x).norm_l2() / d.norm_l2();
        assert!(rel < 1e-9, "eta {eta}: {rel}");
    }
}

#[test]
fn operator_is_holomorphic() {
    let op = disc_operator(aniso());
    let eta = c64::new(3.0, 0.5);
    let h = 1e-4;
    let t = |z: c64| op.build_t(z).unwrap().t;
    let re = (&t(eta + h) - &t(eta - h)) * faer::Scale(c64::new(0.5 / h, 0.0));
    let im = (&t(eta + c64::new(0.0, h)) - &t(eta - c64::new(0.0, h))) * faer::Scale(c64::new(0.0, -0.5 / h));
    let rel = max_abs(&(&re - &im)) / max_abs(&re);
    assert!(rel < 1e-6, "Cauchy-Riemann mismatch {rel}");
}

#[test]
fn resolvent_is_linear_and_maps_zero_to_zero() {
    let op = disc_operator(aniso());
    let res = op.resolvent(c64::new(5.0, 0.3)).unwrap();
    let f = rhs(op.n_b(), 2, 4);
    let a = c64::new(0.3, -1.2);
    let combo = Mat::from_fn(op.n_b(), 1, |i, _| f[(i, 0)] + a * f[(i, 1)]);
    let x = res.apply(f.as_ref()).unwrap();
    let y = res.apply(combo.as_ref()).unwrap();
    let err = (0..op.n_b()).map(|i| (y[(i, 0)] - x[(i, 0)] - a * x[(i, 1)]).norm()).fold(0.0, f64::max);
    assert!(err < 1e-10 * max_abs(&x), "{err}");
    let zero = res.apply_vec(&vec![c64::new(0.0, 0.0); op.n_b()]).unwrap();
    assert!(zero.iter().all(|z| *z == c64::new(0.0, 0.0)));
}

#[test]
fn operator_is_continuous_in_eta() {
    let op = disc_operator(MaterialModel::isotropic(16.0));
    let eta = c64::new(7.0, 0.4);
    let t0 = op.build_t(eta).unwrap().t;
    let mut prev = f64::INFINITY;
    for d in [1e-2, 1e-3, 1e-4] {
        let diff = max_abs(&(&op.build_t(eta + d).unwrap().t - &t0));
        assert!(diff < prev / 5.0, "{diff} after {prev}");
        prev = diff;
    }
}

#[test]
fn wrong_boundary_length_is_rejected() {
    let op = disc_operator(MaterialModel::reference());
    let err = op.helmholtz_solve(Medium::Reference, c64::new(1.0, 0.0), &[c64::new(1.0, 0.0)]).unwrap_err();
    assert!(matches!(err, OperatorError::BoundaryLength { found: 1, .. }));
}

#[test]
fn conventions_round_trip() {
    let k = c64::new(2.0, 0.3);
    assert_eq!(Convention::Eta.to_eta(k), k);
    let back = Convention::K.from_eta(Convention::K.to_eta(k));
    assert!((back - k).norm() < 1e-14);
    assert_eq!("k".parse::<Convention>().unwrap(), Convention::K);
    assert_eq!("eta".parse::<Convention>().unwrap(), Convention::Eta);
    assert!("lambda".parse::<Convention>().is_err());
    assert_eq!(Convention::default(), Convention::K);
}

#[test]
fn conventions_give_same_operator() {
    let op = disc_operator(aniso());
    let k = c64::new(1.7, 0.2);
    let a = op.build_t(Convention::K.to_eta(k)).unwrap().t;
    let b = op.build_t(Convention::Eta.to_eta(k * k)).unwrap().t;
    assert_eq!(max_abs(&(&a - &b)), 0.0);
}

#[test]
fn diamond_anisotropic_operator_is_finite() {
    let mesh = diamond_mesh_with_divisions(1.0, 6).unwrap();
    let op = TransmissionOperator::new(Arc::new(assemble_system(&mesh, &aniso()).unwrap())).unwrap();
    let t = op.build_t(c64::new(2.0, 0.0)).unwrap();
    assert!(!t.lower_half_plane);
    assert!(t.max_abs().is_finite() && t.max_abs() > 0.0);
    assert!(op.build_t(c64::new(2.0, -0.1)).unwrap().lower_half_plane);
}
