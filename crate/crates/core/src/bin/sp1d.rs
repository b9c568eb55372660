use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sp1d::acceptance::Suite;
use sp1d::emit;
use sp1d::harness::{run_single, run_sweep, DEFAULT_SWEEP};
use sp1d::limit::solve_limit;
use sp1d::model::build_grid;
use sp1d::{Exec, SystemParams};

#[derive(Parser, Debug)]
#[command(
    name = "sp1d",
    version,
    about = "1D Schrödinger-Poisson quantum well solver and semiclassical limit study"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Config file with `key = value` lines; defaults are used when omitted
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the self-consistent problem at one h
    Solve {
        #[command(flatten)]
        common: Common,
        /// Override h from the config
        #[arg(long)]
        h: Option<f64>,
        /// Also write the per-iteration trace
        #[arg(long)]
        trace: bool,
    },
    /// Run an h sweep and compare against the limit
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated h values
        #[arg(long, value_delimiter = ',')]
        h_list: Option<Vec<f64>>,
        /// Write measured runtimes instead of NA (output is then not reproducible)
        #[arg(long)]
        timings: bool,
    },
    /// Compute the h -> 0 limit
    Limit {
        #[command(flatten)]
        common: Common,
    },
    /// Run the acceptance suite
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

const EXIT_DEGENERATE: u8 = 2;

fn load(common: &Common) -> Result<SystemParams> {
    match &common.config {
        Some(path) => {
            SystemParams::from_file(path).with_context(|| format!("loading {}", path.display()))
        }
        None => Ok(SystemParams::default()),
    }
}

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn solve(common: &Common, h: Option<f64>, trace: bool) -> Result<u8> {
    let mut p = load(common)?;
    if let Some(h) = h {
        p.h = h;
        p.validate()?;
    }
    let run = run_single(&p)?;
    let s = &run.scf;
    println!(
        "h = {}  n_grid = {}{}  iterations = {}  residual = {:.3e}  J = {:.12e}",
        p.h,
        run.n_grid,
        if run.capped { " (capped)" } else { "" },
        s.iterations,
        s.residual,
        s.energy()
    );
    for (i, e) in s.spectrum.values.iter().enumerate() {
        println!("  eps_{} = {:.12}", i + 1, e);
    }
    println!(
        "  mass = {:.12}  max V = {:.6e}",
        s.density.integral(),
        s.potential.sup_norm()
    );
    for v in &run.violations {
        println!("  invariant violated: {v}");
    }
    let mut files = vec![
        ("solution.csv", emit::render_solution_csv(&run)),
        ("levels.csv", emit::render_levels_csv(&run)),
        ("decay.csv", emit::render_decay_csv([&run])),
    ];
    if trace {
        files.push(("trace.csv", emit::render_trace_csv(s)));
    }
    report_written(&emit::write_all(&common.out, &files)?);
    if s.is_trivial() {
        eprintln!(
            "degenerate configuration: no state below eps_S = {}, the solution is V = 0",
            p.eps_s
        );
        return Ok(EXIT_DEGENERATE);
    }
    Ok(0)
}

fn sweep(common: &Common, h_list: Option<&[f64]>, timings: bool) -> Result<u8> {
    let p = load(common)?;
    let hs = h_list.unwrap_or(&DEFAULT_SWEEP);
    let report = run_sweep(&p, hs, Exec::default())?;
    println!(
        "theta = {:.12}  N = {}  N1 = {}  weight = {:.12}",
        report.limit.theta,
        report.limit.reference.count(),
        report.limit.n_occupied,
        report.limit.weight
    );
    for row in &report.rows {
        match &row.outcome {
            Ok((run, m)) => println!(
                "h = {:<8} Nh = {}  iters = {:>3}  sup = {:.3e}  holder = {:.3e}  mass = {:.6}",
                row.h,
                run.occupied(),
                run.scf.iterations,
                m.sup_err,
                m.holder_err,
                m.mass
            ),
            Err(e) => println!("h = {:<8} failed: {e}", row.h),
        }
    }
    report_written(&emit::write_sweep(&report, &common.out, timings)?);
    if !report.all_ok() {
        bail!("some sweep rows failed");
    }
    Ok(0)
}

fn limit(common: &Common) -> Result<u8> {
    let p = load(common)?;
    let lim = solve_limit(&p)?;
    println!("theta = {:.15}", lim.theta);
    println!("N = {}  N1 = {}", lim.reference.count(), lim.n_occupied);
    for (i, e) in lim.reference.values.iter().enumerate() {
        println!("  e_{} = {:.12}", i + 1, e);
    }
    println!("mu weight = {:.15}  at x0 = {}", lim.weight, p.x0);
    let grid = build_grid(&p);
    report_written(&emit::write_all(
        &common.out,
        &[("limit.csv", emit::render_limit_csv(&lim, &grid))],
    )?);
    Ok(0)
}

fn verify(common: &Common) -> Result<u8> {
    let p = load(common)?;
    let suite = Suite::new(p);
    let outcomes = suite.run_all();
    for o in &outcomes {
        println!("{o}");
    }
    if let Ok(report) = suite.sweep() {
        let table = emit::render_decay_csv(report.rows.iter().filter_map(|r| r.run()));
        report_written(&emit::write_all(&common.out, &[("decay.csv", table)])?);
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        bail!("{failed} of {} acceptance criteria failed", outcomes.len());
    }
    println!("all {} acceptance criteria passed", outcomes.len());
    Ok(0)
}

fn dispatch(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Solve { common, h, trace } => solve(common, *h, *trace),
        Command::Sweep {
            common,
            h_list,
            timings,
        } => sweep(common, h_list.as_deref(), *timings),
        Command::Limit { common } => limit(common),
        Command::Verify { common } => verify(common),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let degenerate = err
                .chain()
                .filter_map(|e| e.downcast_ref::<sp1d::Error>())
                .any(sp1d::Error::is_degenerate);
            ExitCode::from(if degenerate { EXIT_DEGENERATE } else { 1 })
        }
    }
}
