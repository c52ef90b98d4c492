//! `relaxlab`: capacity queries, hole families, perforated solves,
//! convergence sweeps and the self-test suite.
//!
//! Exit status: 0 success, 1 validation error, 2 numerical failure, 3 I/O.
//! `RELAXLAB_THREADS` caps the worker pool.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use relaxlab::capacity::{cap_concentric_closed_form, cap_variational};
use relaxlab::harness::{emit_report, load_config, parse_operator_spec, run_sweep, selftest, ReportFormat};
use relaxlab::mesh::Mesh;
use relaxlab::pde::{energy_functional, field_metrics, solve_dirichlet_perforated, solve_relaxed, PerforationOptions};
use relaxlab::perforation::{build_holes, holes_report};
use relaxlab::{Error, Region, Result};

#[derive(Parser)]
#[command(name = "relaxlab", version, about = "Perforated domains and relaxed Dirichlet problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Capacity of concentric disks centred at (0.5, 0.5).
    Capacity {
        #[arg(long)]
        inner: f64,
        #[arg(long)]
        outer: f64,
        /// `laplace` or `type=matrix; a11=..; a12=..; a22=..; alpha=..`
        #[arg(long, default_value = "laplace")]
        op: String,
        /// Mesh spacing; defaults to outer / 128.
        #[arg(long)]
        spacing: Option<f64>,
    },
    /// Hole family of a scenario at one lattice level.
    Holes {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        h: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Perforated solve at one lattice level, compared with the relaxed
    /// solution on the same mesh.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        h: u32,
        /// Writes the solution (CSV, or binary for `.bin`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence sweep over the scenario's h-list.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Runs every self-test suite.
    Selftest {
        /// Ellipticity constant of the test operator.
        #[arg(long)]
        alpha: Option<f64>,
    },
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("RELAXLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::InvalidInput(format!("RELAXLAB_THREADS={v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Capacity { inner, outer, op, spacing } => {
            let op = parse_operator_spec(&op)?;
            let c = [0.5, 0.5];
            let s = spacing.unwrap_or(outer / 128.0);
            let cap = cap_variational(&Region::disk(c, inner), &Region::disk(c, outer), &op, s)?;
            println!("capacity {cap:.9e}");
            println!("spacing {s:.6e}");
            if let Some(a) = op.isotropic_scale() {
                println!("closed_form {:.9e}", a * cap_concentric_closed_form(inner, outer, 2)?);
            }
        }
        Command::Holes { config, h, out } => {
            let cfg = load_config(&config)?;
            let family = build_holes(&cfg.domain, &cfg.measure, &cfg.operator, h)?;
            let rep = holes_report(&family, cfg.spacing_for(h));
            println!("h {h}");
            println!("cubes {}", rep.count);
            println!("holes {}", rep.active);
            println!("min_radius {:.9e}", rep.min_radius);
            println!("max_radius {:.9e}", rep.max_radius);
            println!("total_capacity {:.9e}", rep.total_capacity);
            println!("spacing {:.6e}", rep.spacing);
            println!("resolvable {}", rep.resolvable);
            if let Some(path) = out {
                std::fs::write(&path, family.to_json()? + "\n").map_err(|e| Error::io(&path, e))?;
            }
        }
        Command::Solve { config, h, out } => {
            let cfg = load_config(&config)?;
            let family = build_holes(&cfg.domain, &cfg.measure, &cfg.operator, h)?;
            let mesh = Mesh::new(&cfg.domain, cfg.spacing_for(h))?;
            let opts = PerforationOptions { solver: cfg.solver, pin_nearest: cfg.pin_nearest };
            let (u, stats) = solve_dirichlet_perforated(&family, &cfg.operator, &cfg.load, &mesh, &opts)?;
            let mu0 = cfg.measure.decompose().mu0;
            let (reference, _) = solve_relaxed(&mu0, &cfg.operator, &cfg.load, &mesh, &cfg.solver)?;
            let m = field_metrics(&u, &reference)?;
            println!("h {h}");
            println!("holes {}", family.active().count());
            println!("nodes {}", mesh.node_count());
            println!("iterations {}", stats.iterations);
            println!("residual {:.3e}", stats.relative_residual);
            println!("energy {:.9e}", energy_functional(&u, &cfg.measure, &cfg.operator));
            println!("l2_err {:.9e}", m.l2);
            println!("h1_err {:.9e}", m.h1);
            if let Some(path) = out {
                u.write_file(&path)?;
            }
        }
        Command::Sweep { config, out, format } => {
            let format: ReportFormat = format.parse()?;
            let cfg = load_config(&config)?;
            let report = run_sweep(&cfg)?;
            emit_report(&report, format, &out)?;
            eprint!("{}", report.to_csv());
            if let Some(row) = report.rows.iter().find(|r| r.failed()) {
                eprintln!("h = {} failed: {}", row.h, row.failure.as_deref().unwrap_or(""));
                return Ok(ExitCode::from(2));
            }
        }
        Command::Selftest { alpha } => {
            let summary = selftest(alpha);
            print!("{}", summary.render());
            if !summary.passed() {
                let invalid = summary.checks.len() == 1 && summary.checks[0].name == "operator construction";
                return Ok(ExitCode::from(if invalid { 1 } else { 2 }));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
