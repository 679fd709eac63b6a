//! Command-line driver for the Helmholtz domain-decomposition experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use helmholtz_dd::assembly::assemble_global;
use helmholtz_dd::harness::{
    configure_workers, emit_csv, emit_plots, parse_csv, run_experiment_with_progress,
    run_link_check, ExperimentConfig,
};
use helmholtz_dd::media::MediumSpec;
use helmholtz_dd::mesh::{build_unit_square_mesh, wavenumber_for_resolution};
use helmholtz_dd::partition::{extend_overlap, graph_bisection_partition, uniform_partition};

#[derive(Parser)]
#[command(
    name = "helmholtz-dd",
    about = "2D Helmholtz wave-guide benchmarks with overlapping Schwarz preconditioners",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment grid from a JSON configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for results.csv, results.json, and plots.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads (defaults to HELMHOLTZ_DD_WORKERS, then all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Permit resolutions above the desk-scale limit of 400.
        #[arg(long)]
        allow_large: bool,
    },
    /// Run the built-in verification suites.
    Check {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Where to write the JSON verdicts.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Re-emit the SVG plots from an existing results CSV.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Write mesh and partition debug dumps.
    Dump {
        /// Mesh resolution.
        #[arg(long)]
        mesh: usize,
        /// Uniform grid "PxQ" to dump element ownership for.
        #[arg(long)]
        grid: Option<String>,
        /// Graph-partition subdomain count to dump element ownership for.
        #[arg(long)]
        parts: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Link,
    Invariants,
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(ok) => {
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn workers_from_env() -> Option<usize> {
    std::env::var("HELMHOLTZ_DD_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
}

fn dispatch(cli: Cli) -> helmholtz_dd::Result<bool> {
    match cli.command {
        Command::Run {
            config,
            out,
            workers,
            allow_large,
        } => {
            let mut config = ExperimentConfig::load(&config)?;
            if allow_large {
                config.allow_large = true;
            }
            if let Some(w) = workers.or(config.workers).or_else(workers_from_env) {
                configure_workers(w);
            }
            config.validate()?;
            std::fs::create_dir_all(&out)?;
            let reports = run_experiment_with_progress(&config, |r| {
                match &r.error {
                None => println!(
                    "m={:<5} N={:<4} overlap={} {:<18} {:<8} size={:<6} iters={:<4} residual={:.2e}",
                    r.m,
                    r.n_subdomains,
                    r.overlap,
                    format!("{}({})", r.coarse_kind, r.threshold_rule),
                    if r.converged { "ok" } else { "MAXIT" },
                    r.coarse_size,
                    r.iterations,
                    r.final_residual
                ),
                Some(e) => println!(
                    "m={:<5} N={:<4} overlap={} {:<18} FAILED: {e}",
                    r.m,
                    r.n_subdomains,
                    r.overlap,
                    format!("{}({})", r.coarse_kind, r.threshold_rule),
                ),
                }
                use std::io::Write;
                let _ = std::io::stdout().flush();
            })?;
            emit_csv(&reports, &out.join("results.csv"))?;
            std::fs::write(
                out.join("results.json"),
                serde_json::to_string_pretty(&reports).map_err(helmholtz_dd::Error::from)?,
            )?;
            let plots = emit_plots(&reports, &out)?;
            for p in plots {
                println!("wrote {}", p.display());
            }
            println!("wrote {}", out.join("results.csv").display());
            Ok(reports.iter().all(|r| r.error.is_none()))
        }
        Command::Check { suite, out } => {
            std::fs::create_dir_all(&out)?;
            let mut all_pass = true;
            if matches!(suite, Suite::Link | Suite::All) {
                let cases = run_link_check(Some(&out.join("link_check.json")))?;
                for case in &cases {
                    println!(
                        "link check {:<10} {}",
                        case.label,
                        if case.report.pass { "PASS" } else { "FAIL" }
                    );
                    all_pass &= case.report.pass;
                }
            }
            if matches!(suite, Suite::Invariants | Suite::All) {
                all_pass &= run_invariant_suite()?;
            }
            Ok(all_pass)
        }
        Command::Plot { csv, out } => {
            let reports = parse_csv(&std::fs::read_to_string(&csv)?)?;
            std::fs::create_dir_all(&out)?;
            let plots = emit_plots(&reports, &out)?;
            for p in &plots {
                println!("wrote {}", p.display());
            }
            Ok(true)
        }
        Command::Dump {
            mesh: m,
            grid,
            parts,
            out,
        } => {
            std::fs::create_dir_all(&out)?;
            let mesh = build_unit_square_mesh(m)?;
            let mesh_path = out.join(format!("mesh_{m}.txt"));
            let mut file = std::io::BufWriter::new(std::fs::File::create(&mesh_path)?);
            mesh.dump(&mut file)?;
            println!("wrote {}", mesh_path.display());
            let deco = if let Some(spec) = grid {
                let (p, q) = parse_grid(&spec)?;
                Some(uniform_partition(&mesh, p, q)?)
            } else {
                parts
                    .map(|n| graph_bisection_partition(&mesh, n))
                    .transpose()?
            };
            if let Some(deco) = deco {
                let part_path = out.join(format!("partition_{m}.txt"));
                let mut file = std::io::BufWriter::new(std::fs::File::create(&part_path)?);
                deco.dump(&mut file)?;
                println!("wrote {}", part_path.display());
            }
            Ok(true)
        }
    }
}

fn parse_grid(spec: &str) -> helmholtz_dd::Result<(usize, usize)> {
    let parts: Vec<&str> = spec.split(['x', 'X']).collect();
    if parts.len() != 2 {
        return Err(helmholtz_dd::Error::Config(format!(
            "grid must look like 5x5, got {spec}"
        )));
    }
    let p = parts[0]
        .parse()
        .map_err(|_| helmholtz_dd::Error::Config(format!("bad grid: {spec}")))?;
    let q = parts[1]
        .parse()
        .map_err(|_| helmholtz_dd::Error::Config(format!("bad grid: {spec}")))?;
    Ok((p, q))
}

/// Quick exactness checks mirrored from the test suite, runnable in the
/// field.
fn run_invariant_suite() -> helmholtz_dd::Result<bool> {
    use helmholtz_dd::coarse::{assemble_coarse, CoarseSpaceKind, CoarseSpaceSpec};
    use helmholtz_dd::linalg::gmres_right_preconditioned;
    use helmholtz_dd::partition::PartitionOfUnityKind;
    use helmholtz_dd::precond::build_oras;
    use num_complex::Complex64 as C64;

    let mut all_pass = true;
    let report = |name: &str, pass: bool| -> bool {
        println!(
            "invariant {name:<42} {}",
            if pass { "PASS" } else { "FAIL" }
        );
        pass
    };

    // partition of unity sums to the identity
    {
        let mesh = build_unit_square_mesh(8)?;
        let deco = extend_overlap(&mesh, &uniform_partition(&mesh, 2, 2)?, 2)?;
        let mut ok = true;
        for kind in [
            PartitionOfUnityKind::Multiplicity,
            PartitionOfUnityKind::Ownership,
        ] {
            let d = helmholtz_dd::partition::build_partition_of_unity(&mesh, &deco, kind)?;
            let n = helmholtz_dd::assembly::dof_map(&mesh).1.len();
            let mut sum = vec![0.0f64; n];
            for sub in &d.subdomains {
                for (local, &g) in sub.dofs.iter().enumerate() {
                    sum[g] += sub.pou[local];
                }
            }
            ok &= sum.iter().all(|v| (v - 1.0).abs() <= 1e-15);
        }
        all_pass &= report("partition-of-unity identity (1e-15)", ok);
    }

    // single-subdomain preconditioner solves in one iteration
    {
        let mesh = build_unit_square_mesh(8)?;
        let k = wavenumber_for_resolution(8)?;
        let system = assemble_global(&mesh, &MediumSpec::homogeneous(k))?;
        let deco = extend_overlap(&mesh, &uniform_partition(&mesh, 1, 1)?, 2)?;
        let precond = build_oras(&mesh, &system, &deco, None)?;
        let res =
            gmres_right_preconditioned(&system.matrix, Some(&precond), &system.rhs, 1e-6, 10)?;
        all_pass &= report(
            "single-subdomain solve in one iteration",
            res.iterations == 1,
        );
    }

    // deflation identity Q A Z = Z
    {
        let mesh = build_unit_square_mesh(10)?;
        let k = wavenumber_for_resolution(10)?;
        let system = assemble_global(&mesh, &MediumSpec::homogeneous(k))?;
        let deco = extend_overlap(&mesh, &uniform_partition(&mesh, 2, 2)?, 2)?;
        let spec = CoarseSpaceSpec::new(CoarseSpaceKind::HGeneo { threshold: 0.5 });
        let coarse = assemble_coarse(&mesh, &system, &deco, &spec)?;
        let n = system.n();
        let mut ok = true;
        for col in coarse.columns() {
            let mut z = vec![C64::default(); n];
            for (&i, &v) in col.indices.iter().zip(&col.values) {
                z[i] = v;
            }
            let az = system.matrix.matvec_alloc(&z);
            let qaz = coarse.apply_correction(&az);
            let znorm: f64 = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let diff: f64 = qaz
                .iter()
                .zip(&z)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            ok &= diff <= 1e-10 * znorm;
        }
        all_pass &= report("deflation identity Q A Z = Z (1e-10)", ok);
    }

    Ok(all_pass)
}
