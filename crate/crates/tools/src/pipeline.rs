//! Full experiment runs: one cell per (method, strategy, contrast), cells in
//! parallel, each writing its own directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use geneo_core::analysis::{
    check_bounds, operator_spectrum, pcg_solve, ConvergenceHistory, SpectralBoundReport,
};
use geneo_core::coarse_operator::{assemble_E, epsilon_A, EpsilonMode, DIRECT_EPS_CAP};
use geneo_core::experiment::{
    bound_constants, bound_method_of, build_coarse, build_coarse_operator, build_preconditioner, Problem,
};
use geneo_core::preconditioner::PreconditionerKind;
use rayon::prelude::*;

use crate::config::{Cell, ExperimentConfig};
use crate::csvout::{num, write_rows};
use crate::error::ToolError;
use crate::mtx;

/// Outcome of the bound check of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundStatus {
    Pass,
    Fail,
    /// Spectrum outside an estimate that is not a proven bound.
    NotAsserted,
    /// Disabled, too large for the dense spectrum, or no bound for the
    /// preconditioner.
    Skipped,
}

impl BoundStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundStatus::Pass => "pass",
            BoundStatus::Fail => "fail",
            BoundStatus::NotAsserted => "not-asserted",
            BoundStatus::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CellReport {
    pub cell: Cell,
    pub n_dofs: usize,
    pub n_subdomains: usize,
    pub coarse_dim: usize,
    pub k0: usize,
    pub k1: usize,
    pub lambda_min_eet: Option<f64>,
    pub lambda_max_eet: Option<f64>,
    pub eps_formula: Option<f64>,
    pub eps_direct: Option<f64>,
    pub bounds: Option<SpectralBoundReport>,
    pub c_t: Option<f64>,
    pub c_r: Option<f64>,
    pub spectrum: Option<Vec<f64>>,
    pub status: BoundStatus,
    pub history: ConvergenceHistory,
}

impl CellReport {
    /// A failed asserted bound or a stalled solve.
    pub fn failed(&self) -> bool {
        self.status == BoundStatus::Fail || !self.history.converged
    }
}

pub const REPORT_HEADER: [&str; 27] = [
    "cell",
    "method",
    "preconditioner",
    "strategy",
    "contrast",
    "n_dofs",
    "subdomains",
    "coarse_dim",
    "k0",
    "k1",
    "tau",
    "gamma",
    "lambda_min_eet",
    "lambda_max_eet",
    "eps_formula",
    "eps_direct",
    "c_t",
    "c_r",
    "spec_min",
    "spec_max",
    "condition",
    "condition_bound",
    "bound_status",
    "iterations",
    "converged",
    "final_relative_residual",
    "restarts",
];

impl CellReport {
    pub fn row(&self) -> Vec<String> {
        let b = self.bounds.as_ref();
        vec![
            self.cell.index.to_string(),
            self.cell.method.as_str().into(),
            self.cell.preconditioner.as_str().into(),
            self.cell.strategy.to_string(),
            num(Some(self.cell.contrast)),
            self.n_dofs.to_string(),
            self.n_subdomains.to_string(),
            self.coarse_dim.to_string(),
            self.k0.to_string(),
            self.k1.to_string(),
            num(Some(self.cell.method.tau())),
            num(self.cell.method.gamma()),
            num(self.lambda_min_eet),
            num(self.lambda_max_eet),
            num(self.eps_formula),
            num(self.eps_direct),
            num(self.c_t),
            num(self.c_r),
            num(b.map(|b| b.lambda_min)),
            num(b.map(|b| b.lambda_max)),
            num(b.map(|b| b.condition)),
            num(b.map(|b| b.condition_bound)),
            self.status.as_str().into(),
            self.history.iterations.to_string(),
            self.history.converged.to_string(),
            num(Some(self.history.final_relative_residual)),
            self.history.restarts.to_string(),
        ]
    }
}

/// Deterministic per-cell seed.
pub fn cell_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn run_cell(config: &ExperimentConfig, cell: &Cell, dir: Option<&Path>) -> Result<CellReport, ToolError> {
    let ctx = |what: &str| format!("cell {} ({}, {}): {what}", cell.index, cell.method.as_str(), cell.strategy);
    let start = Instant::now();
    let problem = Problem::build(cell.problem).map_err(ToolError::numerical(ctx("problem setup")))?;
    let f = problem.rhs().map_err(ToolError::numerical(ctx("right-hand side")))?;
    let setup = build_coarse(&problem, cell.method).map_err(ToolError::numerical(ctx("coarse space")))?;
    let op = build_coarse_operator(&problem, &setup, cell.strategy, cell_seed(config.seed, cell.index))
        .map_err(ToolError::numerical(ctx("coarse operator")))?;
    let p = build_preconditioner(&problem, &setup, &op, cell.preconditioner)
        .map_err(ToolError::numerical(ctx("preconditioner")))?;
    log::debug!(
        "{}: setup {:.3} s, coarse dimension {}",
        ctx("ready"),
        start.elapsed().as_secs_f64(),
        setup.z.ncols()
    );

    let two_level = cell.preconditioner != PreconditionerKind::OneLevelAs;
    let eps_formula = two_level
        .then(|| epsilon_A(&op, &problem.a, &setup.z, EpsilonMode::Formula))
        .transpose()
        .map_err(ToolError::numerical(ctx("eps_A")))?;
    let eps_direct = if two_level && config.analysis.direct_eps {
        Some(
            epsilon_A(&op, &problem.a, &setup.z, EpsilonMode::Direct { cap: DIRECT_EPS_CAP })
                .map_err(ToolError::numerical(ctx("direct eps_A")))?,
        )
    } else {
        None
    };
    let constants = if two_level {
        Some(
            bound_constants(&problem, &setup, &op, cell.preconditioner)
                .map_err(ToolError::numerical(ctx("bound constants")))?,
        )
    } else {
        None
    };

    let n = problem.a.order();
    let spectrum = if config.analysis.spectrum && n <= config.analysis.spectrum_cap {
        Some(operator_spectrum(&problem.a, &p, config.analysis.spectrum_cap).map_err(ToolError::numerical(ctx("spectrum")))?)
    } else {
        if config.analysis.spectrum {
            log::warn!("{}", ctx(&format!("{n} DOFs exceed the spectrum cap; bound check skipped")));
        }
        None
    };
    let bounds = match (&spectrum, &constants, config.analysis.bounds) {
        (Some(s), Some(c), true) => Some(
            check_bounds(
                bound_method_of(cell.method, cell.preconditioner),
                &cell.strategy.to_string(),
                c,
                s,
            )
            .map_err(ToolError::numerical(ctx("bound check")))?,
        ),
        _ => None,
    };
    let status = match &bounds {
        None => BoundStatus::Skipped,
        Some(b) if b.pass => BoundStatus::Pass,
        Some(b) if b.failed() => BoundStatus::Fail,
        Some(_) => BoundStatus::NotAsserted,
    };

    let solve_start = Instant::now();
    let (x, history) = pcg_solve(&problem.a, &f, &p, config.solver.rel_tol, config.solver.max_iter)
        .map_err(ToolError::numerical(ctx("PCG")))?;
    log::info!(
        "{}: {} iterations ({}), bounds {}, {:.3} s",
        ctx("done"),
        history.iterations,
        if history.converged { "converged" } else { "stalled" },
        status.as_str(),
        solve_start.elapsed().as_secs_f64()
    );

    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|e| ToolError::io(dir, e))?;
        write_convergence(&dir.join("convergence.csv"), &history)?;
        if let Some(s) = &spectrum {
            write_spectrum(&dir.join("spectrum.csv"), s)?;
        }
        if config.output.export_matrices {
            mtx::write_sparse_sym(&dir.join("A.mtx"), &problem.a)?;
            mtx::write_vector(&dir.join("rhs.mtx"), &f)?;
            mtx::write_vector(&dir.join("solution.mtx"), &x)?;
            mtx::write_dense(&dir.join("Z.mtx"), &setup.z)?;
            if setup.z.ncols() > 0 {
                let e = assemble_E(&setup.z, &problem.a).map_err(ToolError::numerical(ctx("coarse matrix")))?;
                mtx::write_sparse_sym(&dir.join("E.mtx"), &e)?;
                mtx::write_dense(&dir.join("E_tilde.mtx"), &op.e_tilde())?;
            }
        }
    }

    Ok(CellReport {
        cell: cell.clone(),
        n_dofs: n,
        n_subdomains: problem.decomposition.len(),
        coarse_dim: if two_level { setup.z.ncols() } else { 0 },
        k0: problem.k0,
        k1: setup.k1,
        lambda_min_eet: two_level.then(|| op.lambda_min()),
        lambda_max_eet: two_level.then(|| op.lambda_max()),
        eps_formula,
        eps_direct,
        c_t: constants.map(|c| c.c_t),
        c_r: constants.map(|c| c.c_r),
        bounds,
        spectrum,
        status,
        history,
    })
}

pub fn write_convergence(path: &Path, h: &ConvergenceHistory) -> Result<(), ToolError> {
    let rows: Vec<Vec<String>> = h
        .preconditioned_residuals
        .iter()
        .enumerate()
        .map(|(k, r)| vec![k.to_string(), num(Some(*r))])
        .collect();
    write_rows(path, &["iteration", "preconditioned_residual"], &rows)
}

pub fn write_spectrum(path: &Path, s: &[f64]) -> Result<(), ToolError> {
    let rows: Vec<Vec<String>> = s
        .iter()
        .enumerate()
        .map(|(k, v)| vec![k.to_string(), num(Some(*v))])
        .collect();
    write_rows(path, &["index", "eigenvalue"], &rows)
}

#[derive(Debug)]
pub struct RunSummary {
    pub reports: Vec<CellReport>,
    pub report_path: PathBuf,
}

impl RunSummary {
    pub fn failures(&self) -> usize {
        self.reports.iter().filter(|r| r.failed()).count()
    }
}

/// Runs every cell of `config` on at most `workers` threads and writes
/// `report.csv` plus one `cell-<k>` directory per cell under `out`.
pub fn run_experiment(config: &ExperimentConfig, out: &Path, workers: usize) -> Result<RunSummary, ToolError> {
    fs::create_dir_all(out).map_err(|e| ToolError::io(out, e))?;
    let cells = config.cells();
    log::info!("{} cell(s), {} worker(s), output {}", cells.len(), workers, out.display());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    let results: Vec<Result<CellReport, ToolError>> = pool.install(|| {
        cells
            .par_iter()
            .map(|c| run_cell(config, c, Some(&out.join(format!("cell-{}", c.index)))))
            .collect()
    });
    let reports = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let report_path = out.join("report.csv");
    let rows: Vec<Vec<String>> = reports.iter().map(CellReport::row).collect();
    write_rows(&report_path, &REPORT_HEADER, &rows)?;
    Ok(RunSummary { reports, report_path })
}
