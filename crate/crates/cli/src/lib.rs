//! Subcommands of the `ocfem` binary.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ocfem::io::{study_csv, write_mesh, write_p0, write_p1};
use ocfem::study::run_study_threaded;
use ocfem::verify::{CheckOutcome, ADMISSIBILITY, BATTERY};
use ocfem::{build_unit_square_mesh, solve_ocp, Error, FeSpace, Model, OcpSolution};

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("unknown preset `{0}` (available: {list})", list = config::preset_list())]
    UnknownPreset(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Solver(#[from] Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{failed} of {total} checks failed, {skipped} skipped")]
    Checks { failed: usize, skipped: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::UnknownPreset(_) | CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// `key=value` lines describing a solve.
pub fn summary(config: &RunConfig, level: u32, h: f64, sol: &OcpSolution) -> String {
    let kv = |s: &mut String, k: &str, v: String| {
        let _ = writeln!(s, "{k}={v}");
    };
    let mut s = String::new();
    kv(&mut s, "preset", config.preset.clone());
    kv(&mut s, "level", level.to_string());
    kv(&mut s, "h", format!("{h:.6e}"));
    kv(&mut s, "triangles", sol.control.values.len().to_string());
    kv(&mut s, "vertices", sol.state.values.len().to_string());
    kv(&mut s, "cost", format!("{:.12e}", sol.cost));
    kv(&mut s, "kkt_residual", format!("{:.6e}", sol.kkt_residual));
    kv(&mut s, "converged", sol.converged.to_string());
    kv(&mut s, "outer_iterations", sol.outer_iterations.to_string());
    kv(&mut s, "newton_iterations", sol.state_reports.iter().map(|r| r.iterations).sum::<usize>().to_string());
    kv(&mut s, "cg_iterations", sol.cg_iterations.iter().sum::<usize>().to_string());
    kv(&mut s, "fallback_steps", sol.fallback_steps.to_string());
    s
}

pub fn cmd_solve(config: &RunConfig, out: &mut impl std::io::Write) -> Result<(), CliError> {
    let spec = config.problem()?;
    let mesh = build_unit_square_mesh(config.level)?;
    let space = FeSpace::new(&mesh);
    spec.validate(&space)?;
    let model = Model::new(&spec, space)?;
    let sol = solve_ocp(&model, None, None, &config.ocp_options())?;
    let text = summary(config, config.level, mesh.h(), &sol);
    if let Some(dir) = &config.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("summary.txt"), &text)?;
        if config.emit_fields {
            fs::write(dir.join("mesh.txt"), write_mesh(&mesh))?;
            fs::write(dir.join("control.p0"), write_p0(&sol.control))?;
            fs::write(dir.join("state.p1"), write_p1(&sol.state))?;
            fs::write(dir.join("adjoint.p1"), write_p1(&sol.adjoint))?;
        }
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn write_csv(path: Option<&Path>, csv: &str, out: &mut impl std::io::Write) -> Result<(), CliError> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, csv)?;
        }
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(())
}

pub fn cmd_study(config: &RunConfig, threads: usize, out: &mut impl std::io::Write) -> Result<(), CliError> {
    let spec = config.problem()?;
    let (a, b) = config.levels;
    match run_study_threaded(&spec, a, b, &config.ocp_options(), threads) {
        Ok(records) => write_csv(config.out.as_deref(), &study_csv(&records), out),
        Err(e) => {
            write_csv(config.out.as_deref(), &study_csv(&e.partial), out)?;
            Err(CliError::Solver(Error::Invalid(e.to_string())))
        }
    }
}

/// Runs the admissibility check, then the remaining battery on up to
/// `threads` workers. Outcomes are reported in battery order.
pub fn run_checks(config: &RunConfig, threads: usize) -> Result<Vec<CheckOutcome>, CliError> {
    let spec = config.problem()?;
    let mesh = build_unit_square_mesh(config.level)?;
    let first = ADMISSIBILITY.run(&spec, &mesh);
    if !first.passed {
        return Ok(vec![first]);
    }
    let threads = threads.clamp(1, BATTERY.len());
    let mut slots: Vec<Option<CheckOutcome>> = vec![None; BATTERY.len()];
    std::thread::scope(|scope| {
        let mut work: Vec<Vec<(usize, &mut Option<CheckOutcome>)>> = (0..threads).map(|_| Vec::new()).collect();
        for (i, slot) in slots.iter_mut().enumerate() {
            work[i % threads].push((i, slot));
        }
        for items in work {
            let (spec, mesh) = (&spec, &mesh);
            scope.spawn(move || {
                for (i, slot) in items {
                    *slot = Some(BATTERY[i].run(spec, mesh));
                }
            });
        }
    });
    Ok(std::iter::once(first).chain(slots.into_iter().flatten()).collect())
}

pub fn cmd_check(config: &RunConfig, threads: usize, out: &mut impl std::io::Write) -> Result<(), CliError> {
    let outcomes = run_checks(config, threads)?;
    let mut failed = 0;
    for o in &outcomes {
        failed += usize::from(!o.passed);
        writeln!(out, "{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail)?;
    }
    let total = BATTERY.len() + 1;
    let skipped = total - outcomes.len();
    if skipped > 0 {
        writeln!(out, "SKIP {skipped} remaining checks: problem data is inadmissible")?;
    }
    if failed + skipped > 0 {
        return Err(CliError::Checks { failed, skipped, total });
    }
    Ok(())
}
