use std::fs;
use std::path::Path;
use std::process::Command;

const CONFIG: &str =
    "[domain]\nshape = \"disc\"\n\n[mesh]\ntarget_h = 0.1\n\n[material]\npreset = \"isotropic_n16\"\n\n\
[region]\nre_min = 1.8\nre_max = 2.8\nim_min = -0.5\nim_max = 0.5\n\n[indicator]\nmultiplicity_probes = 3\n";

fn transeig(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_transeig")).args(args).output().unwrap()
}

fn find(config: &Path, out: &Path, extra: &[&str]) {
    let mut args = vec!["find", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = transeig(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, CONFIG).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    find(&config, &a, &[]);
    find(&config, &b, &[]);
    for name in ["hits.csv", "trace.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let hits = fs::read_to_string(a.join("hits.csv")).unwrap();
    assert_eq!(hits.lines().count(), 5, "{hits}");
    assert!(hits.lines().nth(3).unwrap().ends_with(",1"));
    assert!(hits.lines().nth(4).unwrap().ends_with(",2"));
}

#[test]
fn overrides_change_the_stamp() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, CONFIG).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    find(&config, &a, &["--seed", "3"]);
    find(&config, &b, &["--convention", "eta", "--seed", "3"]);
    let head = |p: &Path| fs::read_to_string(p.join("hits.csv")).unwrap().lines().nth(1).unwrap().to_string();
    assert!(head(&a).ends_with("convention k"));
    assert!(head(&b).ends_with("convention eta"));
    assert_ne!(head(&a), head(&b));
}

#[test]
fn mesh_subcommand_writes_a_readable_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, CONFIG).unwrap();
    let o =
        transeig(&["mesh", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--matrices"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("h "));
    let text = fs::read_to_string(dir.path().join("mesh.txt")).unwrap();
    let mesh = transeig::mesh::read_mesh(text.as_bytes()).unwrap();
    assert_eq!(mesh.num_vertices(), 169);
    for name in ["a1", "a0", "mn", "m", "mb"] {
        let coo = fs::read_to_string(dir.path().join(format!("{name}.coo"))).unwrap();
        assert!(coo.lines().all(|l| l.split_whitespace().count() == 3));
    }
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    let o = transeig(&["find", "--config", missing.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let config = dir.path().join("bad.toml");
    fs::write(&config, CONFIG.replace("re_max = 2.8", "re_max = 1.0")).unwrap();
    let o = transeig(&["find", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
}
