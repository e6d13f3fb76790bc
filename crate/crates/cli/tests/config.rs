use transeig::mesh::Point2;
use transeig_cli::config::{parse_config, ConfigError, Domain};

fn base(material: &str, region: &str) -> String {
    format!("[domain]\nshape = \"disc\"\n\n[mesh]\ntarget_h = 0.1\n\n[material]\n{material}\n\n[region]\n{region}\n")
}

const REGION: &str = "re_min = 1.0\nre_max = 2.0\nim_min = -0.5\nim_max = 0.5";

#[test]
fn isotropic_preset() {
    let cfg = parse_config(&base("preset = \"isotropic_n16\"", REGION)).unwrap();
    let m = cfg.material_model().unwrap();
    let p = Point2::new(0.1, -0.2);
    assert_eq!(m.a(p), [[1.0, 0.0], [0.0, 1.0]]);
    assert_eq!(m.n(p), 16.0);
    assert_eq!(cfg.domain, Domain::Disc { radius: 0.5 });
    assert_eq!(cfg.convention().as_str(), "k");
}

#[test]
fn anisotropic_presets() {
    let a1 = parse_config(&base("preset = \"aniso_A1\"", REGION)).unwrap().material_model().unwrap();
    assert_eq!(a1.a(Point2::new(0.2, 0.3)), [[0.5, 0.0], [0.0, 0.125]]);
    assert_eq!(a1.n(Point2::new(0.2, 0.3)), 1.0);

    let a2 = parse_config(&base("preset = \"aniso_A2\"", REGION)).unwrap().material_model().unwrap();
    let a = a2.a(Point2::new(0.3, 0.4));
    assert!((a[0][0] - 0.125).abs() < 1e-15);
    assert!((a[1][1] - 1.75 / 8.0).abs() < 1e-15);
    assert_eq!(a[0][1], 0.0);
    assert_eq!(a2.n(Point2::new(0.3, 0.4)), 1.0);
}

#[test]
fn inline_matches_preset() {
    let inline = base("a11 = \"(x^2 + y^2)/2\"\na22 = \"(2 - x^2 - y^2)/8\"\nn = \"1\"", REGION);
    let cfg = parse_config(&inline).unwrap();
    let m = cfg.material_model().unwrap();
    let p = parse_config(&base("preset = \"aniso_A2\"", REGION)).unwrap().material_model().unwrap();
    for q in cfg.sample_points() {
        let (a, b) = (m.a(q), p.a(q));
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert!((a[i][j] - b[i][j]).abs() < 1e-15);
        }
        assert_eq!(m.n(q), p.n(q));
    }
}

#[test]
fn sample_points_lie_inside() {
    let disc = parse_config(&base("preset = \"reference\"", REGION)).unwrap();
    let pts = disc.sample_points();
    assert_eq!(pts.len(), 100);
    assert!(pts.iter().all(|p| p.x * p.x + p.y * p.y < 0.25));
    let diamond = parse_config(&base("preset = \"reference\"", REGION).replace("\"disc\"", "\"diamond\"")).unwrap();
    let pts = diamond.sample_points();
    assert_eq!(pts.len(), 100);
    assert!(pts.iter().all(|p| p.x.abs() + p.y.abs() < 1.0));
}

fn invalid_line(text: &str) -> usize {
    match parse_config(text).unwrap_err() {
        ConfigError::Invalid { line, .. } => line,
        other => panic!("expected a validation error, got {other}"),
    }
}

#[test]
fn empty_region_is_rejected_with_its_line() {
    let text = base("preset = \"isotropic_n16\"", "re_min = 2.0\nre_max = 2.0\nim_min = 0.0\nim_max = 1.0");
    let line = invalid_line(&text);
    let region_line = text.lines().position(|l| l == "[region]").unwrap() + 1;
    assert!(line >= region_line, "line {line}");
}

#[test]
fn material_violations_are_rejected() {
    // a11 vanishes on the line x = 0.
    assert!(matches!(parse_config(&base("a11 = \"x\"", REGION)), Err(ConfigError::Invalid { .. })));
    assert!(matches!(parse_config(&base("n = \"-1\"", REGION)), Err(ConfigError::Invalid { .. })));
    assert!(matches!(parse_config(&base("a11 = \"1 +\"", REGION)), Err(ConfigError::Invalid { .. })));
    assert!(matches!(parse_config(&base("preset = \"glass\"", REGION)), Err(ConfigError::Invalid { .. })));
    assert!(matches!(
        parse_config(&base("preset = \"aniso_A1\"\nn = \"2\"", REGION)),
        Err(ConfigError::Invalid { .. })
    ));
}

#[test]
fn unknown_keys_are_rejected_with_position() {
    let text = base("preset = \"isotropic_n16\"\ncolour = \"red\"", REGION);
    match parse_config(&text).unwrap_err() {
        ConfigError::Syntax(msg) => {
            assert!(msg.contains("colour"), "{msg}");
            assert!(msg.contains("line"), "{msg}");
        }
        other => panic!("{other}"),
    }
}

#[test]
fn indicator_settings_are_validated() {
    let text = base("preset = \"isotropic_n16\"", REGION) + "\n[indicator]\nn0 = 0\n";
    invalid_line(&text);
    let text = base("preset = \"isotropic_n16\"", REGION) + "\n[indicator]\nn0 = 32\nseed = 7\n";
    let cfg = parse_config(&text).unwrap();
    assert_eq!(cfg.indicator_config().n0, 32);
    assert_eq!(cfg.indicator_config().seed, 7);
}

#[test]
fn bad_convention_is_rejected() {
    let text = format!("convention = \"omega\"\n{}", base("preset = \"reference\"", REGION));
    assert!(parse_config(&text).is_err());
}

#[test]
fn hash_tracks_effective_settings() {
    let text = base("preset = \"isotropic_n16\"", REGION);
    let a = parse_config(&text).unwrap();
    let mut b = parse_config(&format!("# comment\n{text}")).unwrap();
    assert_eq!(a.hash(), b.hash());
    b.indicator.seed = Some(5);
    assert_ne!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
}

#[test]
fn nested_family_halves_h() {
    let cfg = parse_config(&base("preset = \"reference\"", REGION)).unwrap();
    let family = cfg.mesh_family(2).unwrap();
    assert_eq!(family.len(), 3);
    for w in family.windows(2) {
        let ratio = w[0].h() / w[1].h();
        assert!((1.9..2.1).contains(&ratio), "{ratio}");
    }
}
