use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use transeig::c64;
use transeig::mesh::write_mesh;
use transeig::operator::TransmissionOperator;
use transeig_cli::run::{self, RunError};
use transeig_cli::{parse_config, RunConfig};

#[derive(Parser)]
#[command(name = "transeig", version, about = "Transmission eigenvalues of anisotropic media")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `indicator.seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides `convention` (`k` or `eta`).
    #[arg(long)]
    convention: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Writes the mesh and prints its statistics.
    Mesh {
        #[command(flatten)]
        common: Common,
        /// Also writes the assembled matrices in coordinate format.
        #[arg(long)]
        matrices: bool,
        /// Also writes T at this spectral value, given as `re,im`.
        #[arg(long, value_name = "RE,IM")]
        operator_at: Option<String>,
    },
    /// Searches the region for eigenvalues.
    Find {
        #[command(flatten)]
        common: Common,
    },
    /// Follows one eigenvalue across refinement levels.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Multiplicity of a located eigenvalue.
    Mult {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "RE,IM", allow_hyphen_values = true)]
        at: String,
    },
    /// Smallest singular value of T on a grid over the region.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<RunConfig, String> {
    let text = fs::read_to_string(&common.config).map_err(|e| format!("{}: {e}", common.config.display()))?;
    let mut cfg = parse_config(&text).map_err(|e| format!("{}: {e}", common.config.display()))?;
    if let Some(seed) = common.seed {
        cfg.indicator.seed = Some(seed);
    }
    if let Some(c) = &common.convention {
        run::convention_of(c).map_err(|e| e.to_string())?;
        cfg.convention = c.clone();
    }
    fs::create_dir_all(&common.out).map_err(|e| format!("{}: {e}", common.out.display()))?;
    Ok(cfg)
}

fn parse_complex(s: &str) -> Result<c64, String> {
    let (re, im) = s.split_once(',').ok_or_else(|| format!("expected `re,im`, got `{s}`"))?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok(c64::new(p(re)?, p(im)?))
}

fn create(dir: &Path, name: &Path) -> Result<BufWriter<File>, String> {
    let path = dir.join(name);
    File::create(&path).map(BufWriter::new).map_err(|e| format!("{}: {e}", path.display()))
}

fn io(e: std::io::Error) -> String {
    e.to_string()
}

fn err(e: RunError) -> String {
    e.to_string()
}

fn execute(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Mesh { common, matrices, operator_at } => {
            let cfg = load(&common)?;
            let mesh = cfg.mesh().map_err(|e| e.to_string())?;
            let mut out = create(&common.out, &cfg.outputs.mesh)?;
            write_mesh(&mesh, &mut out).map_err(io)?;
            out.flush().map_err(io)?;
            let s = mesh.statistics();
            println!(
                "h {:.6} vertices {} triangles {} boundary_vertices {} area {:.6} min_angle {:.2}",
                s.h, s.num_vertices, s.num_triangles, s.num_boundary_vertices, s.total_area, s.min_angle
            );
            if matrices || operator_at.is_some() {
                let sys = run::assemble(&cfg, &mesh).map_err(err)?;
                if matrices {
                    for (name, m) in
                        [("a1", &sys.a1), ("a0", &sys.a0), ("mn", &sys.mn), ("m", &sys.m), ("mb", &sys.mb_full)]
                    {
                        let mut f = create(&common.out, Path::new(&format!("{name}.coo")))?;
                        run::write_coo_real(m, &mut f).map_err(io)?;
                        f.flush().map_err(io)?;
                    }
                }
                if let Some(z) = operator_at {
                    let eta = cfg.convention().to_eta(parse_complex(&z)?);
                    let op = TransmissionOperator::new(sys).map_err(|e| e.to_string())?;
                    let t = op.build_t(eta).map_err(|e| e.to_string())?;
                    let mut f = create(&common.out, Path::new("t.coo"))?;
                    run::write_coo_dense(&t, &mut f).map_err(io)?;
                    f.flush().map_err(io)?;
                }
            }
        }
        Command::Find { common } => {
            let cfg = load(&common)?;
            let result = run::run_find(&cfg).map_err(err)?;
            let mut hits = create(&common.out, &cfg.outputs.hits)?;
            run::write_hits_csv(&cfg, &result.report, &mut hits).map_err(io)?;
            hits.flush().map_err(io)?;
            let mut trace = create(&common.out, &cfg.outputs.trace)?;
            run::write_trace_csv(&cfg, &result.report, &mut trace).map_err(io)?;
            trace.flush().map_err(io)?;
            for h in &result.report.hits {
                println!("{:.9} {:+.9}i  indicator {:.3e}  depth {}", h.value.re, h.value.im, h.indicator, h.depth);
            }
            for w in &result.report.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Converge { common, levels } => {
            let cfg = load(&common)?;
            let result = run::run_converge(&cfg, levels).map_err(err)?;
            let mut out = create(&common.out, &cfg.outputs.convergence)?;
            run::write_convergence_csv(&cfg, &result.rows, &mut out).map_err(io)?;
            out.flush().map_err(io)?;
            for r in &result.rows {
                let v = r.value.map(|v| format!("{:.6} {:+.6}i", v.re, v.im)).unwrap_or_else(|| "unpaired".into());
                let e = r.err.map(|e| format!("{e:.6}")).unwrap_or_else(|| "-".into());
                let o = r.order.map(|o| format!("{o:.2}")).unwrap_or_else(|| "-".into());
                println!("h {:.5}  {v}  err {e}  order {o}", r.h);
            }
        }
        Command::Mult { common, at } => {
            let cfg = load(&common)?;
            let lambda = parse_complex(&at)?;
            let r = run::run_multiplicity(&cfg, lambda).map_err(err)?;
            println!("multiplicity {} (probes {}, radius {:e})", r.kappa, r.probes, r.radius);
            if r.saturated {
                eprintln!("warning: rank reached the probe cap");
            }
        }
        Command::Sweep { common } => {
            let cfg = load(&common)?;
            let points = run::run_sweep(&cfg).map_err(err)?;
            let mut out = create(&common.out, &cfg.outputs.sweep)?;
            run::write_sweep_csv(&cfg, &points, &mut out).map_err(io)?;
            out.flush().map_err(io)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
