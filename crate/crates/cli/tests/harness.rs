use transeig::c64;
use transeig_cli::config::parse_config;
use transeig_cli::run::{self, convergence_rows, pair};
use transeig_cli::RunConfig;
use transeig_oracles::disc_eigenvalues;

fn config(shape: &str, h: f64, material: &str, region: [f64; 4], extra: &str) -> RunConfig {
    let text = format!(
        "[domain]\nshape = \"{shape}\"\n\n[mesh]\ntarget_h = {h}\n\n[material]\npreset = \"{material}\"\n\n\
         [region]\nre_min = {}\nre_max = {}\nim_min = {}\nim_max = {}\n{extra}",
        region[0], region[1], region[2], region[3]
    );
    parse_config(&text).unwrap()
}

#[test]
fn order_is_log2_of_error_ratio() {
    let hs = [0.1, 0.05, 0.025];
    let v = [1.0, 1.0 - 0.021092, (1.0 - 0.021092) * (1.0 - 0.005410)].map(|x| Some(c64::new(x, 0.0)));
    let rows = convergence_rows(&hs, &v);
    assert_eq!(rows[0].err, None);
    assert!((rows[1].err.unwrap() - 0.021092).abs() < 1e-12);
    assert!((rows[2].err.unwrap() - 0.005410).abs() < 1e-12);
    assert_eq!(rows[1].order, None);
    assert!((rows[2].order.unwrap() - 1.963).abs() < 1e-3);
}

#[test]
fn zero_error_leaves_order_blank() {
    let v = [Some(c64::new(2.0, 0.0)); 3];
    let rows = convergence_rows(&[0.1, 0.05, 0.025], &v);
    assert_eq!(rows[1].err, Some(0.0));
    assert_eq!(rows[2].order, None);
}

#[test]
fn pairing_respects_the_gate() {
    let hits = [c64::new(2.0, 0.0), c64::new(2.3, 0.0)];
    assert_eq!(pair(c64::new(2.05, 0.0), &hits), Some(hits[0]));
    assert_eq!(pair(c64::new(2.15, 0.0), &hits), None);
    let rows = convergence_rows(&[0.1, 0.05, 0.025], &[Some(hits[0]), None, Some(hits[0])]);
    assert_eq!(rows[1].err, None);
    assert_eq!(rows[2].err, None);
}

#[test]
fn csv_headers_carry_provenance() {
    let cfg = config("disc", 0.1, "isotropic_n16", [1.0, 2.0, 0.0, 1.0], "");
    let mut buf = Vec::new();
    run::write_convergence_csv(&cfg, &[], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], format!("# transeig {}", env!("CARGO_PKG_VERSION")));
    assert_eq!(lines[1], format!("# config_sha256 {} convention k", cfg.hash()));
    assert_eq!(lines[2], "h,re,im,err,order");
}

#[test]
fn sweep_certified_empty_region_gives_empty_csv() {
    // Between the two lowest disc eigenvalues, away from the real axis.
    let region = [2.2, 2.4, 0.2, 0.4];
    let mut cfg = config("disc", 0.1, "isotropic_n16", region, "\n[sweep]\nnx = 6\nny = 6\n");
    let sweep = run::run_sweep(&cfg).unwrap();
    let lo = sweep.iter().map(|p| p.sigma_min).fold(f64::INFINITY, f64::min);
    let hi = sweep.iter().map(|p| p.sigma_min).fold(0.0, f64::max);
    assert!(lo > 0.3 * hi, "sweep shows a dip: {lo:e} against {hi:e}");

    cfg.sweep = None;
    let result = run::run_find(&cfg).unwrap();
    assert!(result.report.hits.is_empty());
    assert_eq!(result.report.trace.len(), 1);
    let mut buf = Vec::new();
    run::write_hits_csv(&cfg, &result.report, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert_eq!(text.lines().last().unwrap(), "re,im,indicator,depth,multiplicity");
}

#[test]
fn multiplicity_against_bessel_oracle() {
    let exact = disc_eigenvalues(16.0, 0.5, 1.5, 2.8, 6);
    assert_eq!(exact.len(), 2);
    let cfg = config("disc", 0.1, "isotropic_n16", [1.8, 2.8, -0.5, 0.5], "");
    let found = run::run_find(&cfg).unwrap();
    assert_eq!(found.report.hits.len(), 2, "{:?}", found.report.hits);
    for (hit, ev) in found.report.hits.iter().zip(&exact) {
        assert!((hit.value.re - ev.k).abs() < 0.05 * ev.k);
        let r = run::run_multiplicity(&cfg, hit.value).unwrap();
        assert_eq!(r.kappa, ev.multiplicity, "mode {}", ev.m);
        // Three probes already see the double eigenvalue, no escalation.
        assert_eq!(r.probes, 3);
    }
    let free = run::run_multiplicity(&cfg, c64::new(2.3, 0.3)).unwrap();
    assert_eq!(free.kappa, 0);
}

#[test]
fn converge_needs_three_levels_and_a_track() {
    let cfg = config("disc", 0.1, "isotropic_n16", [1.9, 2.1, -0.1, 0.1], "");
    assert!(run::run_converge(&cfg, 2).is_err());
    assert!(run::run_converge(&cfg, 3).is_err());
}

#[test]
fn diamond_real_eigenvalue_converges_at_second_order() {
    let cfg = config("diamond", 0.1, "isotropic_n16", [1.25, 1.45, -0.1, 0.1], "\n[converge]\ntrack = [1.37, 0.0]\n");
    let result = run::run_converge(&cfg, 3).unwrap();
    let rows = &result.rows;
    assert!(rows.iter().all(|r| r.value.is_some()));
    let order = rows[2].order.unwrap();
    assert!((1.7..=2.3).contains(&order), "order {order}");
}

#[test]
fn disc_complex_pair_at_h40() {
    let cfg = config("disc", 0.1, "isotropic_n16", [4.2, 5.4, -0.6, 0.6], "");
    let mut cfg = cfg;
    cfg.mesh.refine_levels = 2;
    let result = run::run_find(&cfg).unwrap();
    let target = c64::new(4.912988, 0.578294);
    for t in [target, target.conj()] {
        let best = result.report.hits.iter().map(|h| (h.value - t).norm()).fold(f64::INFINITY, f64::min);
        assert!(best < 0.02 * t.norm(), "nearest hit {best} from {t}");
    }
}
