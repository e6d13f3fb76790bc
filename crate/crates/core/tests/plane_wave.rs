//! Discretization error of the Robin-Helmholtz solve for a plane wave in the
//! reference medium.

use std::sync::Arc;

use transeig::assembly::{assemble_system, MaterialModel};
use transeig::c64;
use transeig::mesh::{diamond_mesh_with_divisions, disc_mesh_with_rings, uniform_refine, Circle, Mesh, Point2};
use transeig::operator::{Medium, TransmissionOperator};
use transeig_oracles::observed_order;

struct Errors {
    h: f64,
    energy: f64,
    trace: f64,
}

fn plane_wave_errors(mesh: &Mesh, k: f64) -> Errors {
    let sys = Arc::new(assemble_system(mesh, &MaterialModel::reference()).unwrap());
    let op = TransmissionOperator::new(sys.clone()).unwrap();
    let d = (0.6, 0.8);
    let u = move |p: Point2| c64::from_polar(1.0, k * (d.0 * p.x + d.1 * p.y));
    let load = sys.boundary_load(|p, nu| u(p) * c64::new(0.0, k * (d.0 * nu.x + d.1 * nu.y) - 1.0));
    let uh = op.helmholtz_solve_load(Medium::Reference, c64::new(k * k, 0.0), &load).unwrap();
    let e: Vec<c64> = (0..sys.n()).map(|i| uh[i] - u(sys.dof_point(i))).collect();
    let inner = |v: Vec<c64>| e.iter().zip(&v).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
    let energy = (inner(sys.a0.mul_vec(&e)) + inner(sys.m.mul_vec(&e))).sqrt();
    let trace = sys.boundary_l2_error(&uh[sys.boundary_offset()..], |p, _| u(p));
    Errors { h: sys.mesh_h(), energy, trace }
}

fn check_rates(meshes: &[Mesh]) {
    let errs: Vec<Errors> = meshes.iter().map(|m| plane_wave_errors(m, 2.0)).collect();
    for w in errs.windows(2) {
        let energy = observed_order(w[0].energy, w[1].energy, w[0].h, w[1].h);
        let trace = observed_order(w[0].trace, w[1].trace, w[0].h, w[1].h);
        assert!(energy >= 0.9, "energy order {energy}");
        assert!(trace >= 1.5, "trace order {trace}");
    }
}

#[test]
fn diamond_rates() {
    let meshes: Vec<Mesh> = [8, 16, 32].iter().map(|&m| diamond_mesh_with_divisions(1.0, m).unwrap()).collect();
    check_rates(&meshes);
}

#[test]
fn disc_rates() {
    let c = Circle { center: Point2::new(0.0, 0.0), radius: 0.5 };
    let mut meshes = vec![disc_mesh_with_rings(0.5, 4).unwrap()];
    for _ in 0..2 {
        let m = uniform_refine(meshes.last().unwrap(), Some(&c)).unwrap();
        meshes.push(m);
    }
    check_rates(&meshes);
}
