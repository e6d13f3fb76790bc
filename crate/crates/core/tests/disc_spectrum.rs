//! Real transmission eigenvalues of the isotropic disc against the Bessel
//! determinant roots.

use std::sync::Arc;

use faer::Mat;
use transeig::assembly::{assemble_system, MaterialModel};
use transeig::c64;
use transeig::mesh::generate_disc_mesh;
use transeig::operator::{Convention, TransmissionOperator};
use transeig::simh::{find_eigenvalues, multiplicity, IndicatorConfig, SearchRegion, TransmissionProblem};
use transeig_oracles::disc_eigenvalues;

fn disc_system(h: f64) -> Arc<transeig::assembly::DiscreteSystem> {
    let mesh = generate_disc_mesh(0.5, h).unwrap();
    Arc::new(assemble_system(&mesh, &MaterialModel::isotropic(16.0)).unwrap())
}

#[test]
fn lowest_real_eigenvalues_and_multiplicities() {
    let problem = TransmissionProblem::new(disc_system(0.05), Convention::K).unwrap();
    let root = SearchRegion::new(c64::new(2.45, 0.0), 1.9).unwrap();
    let cfg = IndicatorConfig::default();
    let report = find_eigenvalues(&problem, &root, &cfg).unwrap();
    assert!(report.complete);

    let exact = disc_eigenvalues(16.0, 0.5, 1.5, 3.4, 8);
    assert_eq!(report.hits.len(), exact.len(), "{:?}", report.hits);
    for (hit, ev) in report.hits.iter().zip(&exact) {
        assert!(hit.value.im.abs() < 1e-5, "{}", hit.value);
        let rel = (hit.value.re - ev.k).abs() / ev.k;
        assert!(rel < 0.015, "k_h = {} against {} (mode {})", hit.value, ev.k, ev.m);
        let mult = multiplicity(&problem, hit.value, &cfg, 3).unwrap();
        assert_eq!(mult.kappa, ev.multiplicity, "mode {} at {}", ev.m, hit.value);
    }
}

#[test]
fn resolvent_blows_up_next_to_eigenvalue() {
    let sys = disc_system(0.1);
    let op = TransmissionOperator::new(sys.clone()).unwrap();
    let problem = TransmissionProblem::new(sys, Convention::K).unwrap();
    let cfg = IndicatorConfig::default();
    let report = find_eigenvalues(&problem, &SearchRegion::new(c64::new(2.0, 0.0), 0.3).unwrap(), &cfg).unwrap();
    assert_eq!(report.hits.len(), 1);
    let eta = report.hits[0].value * report.hits[0].value;

    let f = Mat::from_fn(op.n_b(), 1, |i, _| c64::new(1.0 + (i as f64).sin(), (0.3 * i as f64).cos()));
    let size = |d: f64| op.resolvent(eta + d).unwrap().apply(f.as_ref()).unwrap().norm_l2();
    let near = size(1e-4);
    let far = size(1e-1);
    assert!(near > 100.0 * far, "near {near}, far {far}");

    let smallest_sv = |d: f64| {
        let s = op.build_t(eta + d).unwrap().t.singular_values().unwrap();
        s.into_iter().fold(f64::INFINITY, f64::min)
    };
    // A simple eigenvalue: the smallest singular value vanishes linearly.
    let s3 = smallest_sv(1e-3);
    let s4 = smallest_sv(1e-4);
    let s5 = smallest_sv(1e-5);
    for ratio in [s4 / s3, s5 / s4] {
        assert!((0.07..0.14).contains(&ratio), "singular value ratio {ratio}");
    }
    assert!(s5 < 1e-2 * smallest_sv(1e-1));
}
