//! Stage commands. Each stage reads the files of the previous ones from the
//! output directory, so any of them can be replaced by external data:
//!
//! | stage     | reads                                   | writes                         |
//! |-----------|-----------------------------------------|--------------------------------|
//! | assemble  | config                                  | `A.mtx`, `rhs.mtx`             |
//! | decompose | `A.mtx`                                 | `decomposition.txt`            |
//! | coarse    | `A.mtx`, `decomposition.txt`            | `Z.mtx`, `E.mtx`, `eigenvalues.csv` |
//! | solve     | the above, `rhs.mtx`, `Z.mtx`           | `solution.mtx`, `convergence.csv` |
//! | spectrum  | `A.mtx`, `decomposition.txt`, `Z.mtx`   | `spectrum.csv`                 |
//! | report    | `spectrum.csv` and the spectrum inputs  | `report.csv`                   |
//!
//! Stages use the first cell of the config (sweeps are ignored). Local
//! eigenproblems are re-solved from the config where a preconditioner needs
//! more than `Z` (GenEO-2 projectors, annex multiplicity).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use geneo_core::analysis::{check_bounds, operator_spectrum, pcg_solve};
use geneo_core::assembly::{assemble_global_stiffness, assemble_subdomain_neumann};
use geneo_core::coarse_operator::assemble_E;
use geneo_core::coefficient::CoefficientField;
use geneo_core::decomposition::{
    build_overlapping_decomposition, build_partition_of_unity, compute_k0, compute_k1, Decomposition,
    PartitionOfUnity,
};
use geneo_core::dense::symmetric_pencil;
use geneo_core::experiment::{
    bound_constants, bound_method_of, build_coarse, build_coarse_operator, build_preconditioner, CoarseSetup,
    Problem,
};
use geneo_core::mesh::{build_structured_mesh, Mesh};
use geneo_core::preconditioner::PreconditionerKind;
use geneo_core::sparse::{Definiteness, SparseSymMatrix};
use nalgebra::DMatrix;

use crate::config::{Cell, ExperimentConfig};
use crate::csvout::{num, read_rows, write_rows};
use crate::error::ToolError;
use crate::mtx;
use crate::pipeline::{cell_seed, write_convergence, write_spectrum, BoundStatus};

pub const A_FILE: &str = "A.mtx";
pub const RHS_FILE: &str = "rhs.mtx";
pub const DECOMPOSITION_FILE: &str = "decomposition.txt";
pub const Z_FILE: &str = "Z.mtx";
pub const SPECTRUM_FILE: &str = "spectrum.csv";

fn need(dir: &Path, name: &str, producer: &str) -> Result<PathBuf, ToolError> {
    let path = dir.join(name);
    if path.exists() {
        Ok(path)
    } else {
        Err(ToolError::MissingInput {
            path,
            hint: format!("run the `{producer}` stage first or supply the file"),
        })
    }
}

fn first_cell(config: &ExperimentConfig) -> Cell {
    config.cells().swap_remove(0)
}

fn mesh_and_field(cell: &Cell) -> Result<(Mesh, CoefficientField), ToolError> {
    let p = cell.problem;
    let mesh = build_structured_mesh(p.dimension, p.cells, p.dirichlet).map_err(ToolError::numerical("mesh"))?;
    let field = CoefficientField::generate(&mesh, p.coefficient).map_err(ToolError::numerical("coefficient"))?;
    Ok((mesh, field))
}

pub fn assemble(config: &ExperimentConfig, out: &Path) -> Result<(), ToolError> {
    fs::create_dir_all(out).map_err(|e| ToolError::io(out, e))?;
    let cell = first_cell(config);
    let (mesh, field) = mesh_and_field(&cell)?;
    let a = assemble_global_stiffness(&mesh, &field).map_err(ToolError::numerical("stiffness"))?;
    let f = geneo_core::assembly::assemble_rhs(&mesh, geneo_core::assembly::Source::Uniform(1.0))
        .map_err(ToolError::numerical("right-hand side"))?;
    mtx::write_sparse_sym(&out.join(A_FILE), &a)?;
    mtx::write_vector(&out.join(RHS_FILE), &f)?;
    log::info!("assembled {} DOFs, {} nonzeros", a.order(), a.nnz());
    Ok(())
}

fn read_a(out: &Path, mesh: &Mesh) -> Result<SparseSymMatrix, ToolError> {
    let path = need(out, A_FILE, "assemble")?;
    let a = mtx::read_sparse_sym(&path, Definiteness::Spd)?;
    if a.order() != mesh.n_dofs() {
        return Err(ToolError::Parse {
            path,
            line: 2,
            message: format!("order {} does not match the {} mesh DOFs", a.order(), mesh.n_dofs()),
        });
    }
    Ok(a)
}

fn join<T: ToString>(v: impl IntoIterator<Item = T>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn decompose(config: &ExperimentConfig, out: &Path) -> Result<(), ToolError> {
    let cell = first_cell(config);
    let (mesh, _) = mesh_and_field(&cell)?;
    let a = read_a(out, &mesh)?;
    let d = build_overlapping_decomposition(&mesh, cell.problem.grid, cell.problem.overlap)
        .map_err(ToolError::numerical("decomposition"))?;
    let pou = build_partition_of_unity(&d).map_err(ToolError::numerical("partition of unity"))?;
    let mut s = String::new();
    let _ = writeln!(s, "subdomains {}", d.len());
    let _ = writeln!(s, "overlap {}", d.overlap());
    let _ = writeln!(s, "k0 {}", compute_k0(&d, &a));
    let _ = writeln!(s, "k1 {}", compute_k1(&d));
    for i in 0..d.len() {
        let _ = writeln!(s, "cells {i}: {}", join(d.cells(i)));
        let _ = writeln!(s, "dofs {i}: {}", join(d.dofs(i)));
        let _ = writeln!(s, "weights {i}: {}", join(pou.weights(i).iter().map(|w| num(Some(*w)))));
    }
    let path = out.join(DECOMPOSITION_FILE);
    fs::write(&path, s).map_err(|e| ToolError::io(&path, e))?;
    log::info!("{} subdomains written to {}", d.len(), path.display());
    Ok(())
}

struct DecompositionFile {
    overlap: usize,
    k0: usize,
    k1: usize,
    cells: Vec<Vec<usize>>,
    dofs: Vec<Vec<usize>>,
    weights: Vec<Vec<f64>>,
}

fn parse_decomposition(path: &Path) -> Result<DecompositionFile, ToolError> {
    let text = fs::read_to_string(path).map_err(|e| ToolError::io(path, e))?;
    let err = |line: usize, message: String| ToolError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut f = DecompositionFile {
        overlap: 0,
        k0: 0,
        k1: 0,
        cells: Vec::new(),
        dofs: Vec::new(),
        weights: Vec::new(),
    };
    let mut count = None;
    for (k, line) in text.lines().enumerate().map(|(k, l)| (k + 1, l)) {
        let (head, rest) = line.split_once(' ').ok_or_else(|| err(k, "expected `key value`".into()))?;
        let scalar = || rest.trim().parse::<usize>().map_err(|e| err(k, e.to_string()));
        match head {
            "subdomains" => count = Some(scalar()?),
            "overlap" => f.overlap = scalar()?,
            "k0" => f.k0 = scalar()?,
            "k1" => f.k1 = scalar()?,
            "cells" | "dofs" | "weights" => {
                let (idx, values) = rest.split_once(':').ok_or_else(|| err(k, "expected `i: values`".into()))?;
                let i: usize = idx.trim().parse().map_err(|_| err(k, "bad subdomain index".into()))?;
                let target_len = match head {
                    "cells" => f.cells.len(),
                    "dofs" => f.dofs.len(),
                    _ => f.weights.len(),
                };
                if i != target_len {
                    return Err(err(k, format!("expected subdomain {target_len}, found {i}")));
                }
                let words = values.split_whitespace();
                match head {
                    "weights" => f.weights.push(
                        words
                            .map(str::parse::<f64>)
                            .collect::<Result<_, _>>()
                            .map_err(|e| err(k, e.to_string()))?,
                    ),
                    _ => {
                        let v: Vec<usize> = words
                            .map(str::parse::<usize>)
                            .collect::<Result<_, _>>()
                            .map_err(|e| err(k, e.to_string()))?;
                        if head == "cells" {
                            f.cells.push(v)
                        } else {
                            f.dofs.push(v)
                        }
                    }
                }
            }
            other => return Err(err(k, format!("unknown key `{other}`"))),
        }
    }
    let n = count.ok_or_else(|| err(1, "missing `subdomains` line".into()))?;
    if f.cells.len() != n || f.dofs.len() != n || f.weights.len() != n {
        return Err(err(0, format!("expected cells, dofs and weights for {n} subdomains")));
    }
    if f.k0 == 0 || f.k1 == 0 {
        return Err(err(0, "k0 and k1 must be present and positive".into()));
    }
    Ok(f)
}

/// Problem rebuilt from the config plus the exported `A` and decomposition.
fn load_problem(config: &ExperimentConfig, out: &Path) -> Result<(Cell, Problem), ToolError> {
    let cell = first_cell(config);
    let (mesh, coefficient) = mesh_and_field(&cell)?;
    let a = read_a(out, &mesh)?;
    let path = need(out, DECOMPOSITION_FILE, "decompose")?;
    let file = parse_decomposition(&path)?;
    let decomposition = Decomposition::from_cell_sets(&mesh, file.cells.clone(), file.overlap)
        .map_err(ToolError::numerical(format!("decomposition in {}", path.display())))?;
    for (i, dofs) in file.dofs.iter().enumerate() {
        if decomposition.dofs(i) != dofs.as_slice() {
            return Err(ToolError::Parse {
                path: path.clone(),
                line: 0,
                message: format!("DOFs of subdomain {i} do not match its cells"),
            });
        }
        if file.weights[i].len() != dofs.len() {
            return Err(ToolError::Parse {
                path: path.clone(),
                line: 0,
                message: format!("subdomain {i} has {} weights for {} DOFs", file.weights[i].len(), dofs.len()),
            });
        }
    }
    let pou = PartitionOfUnity::from_weights(
        file.weights
            .iter()
            .map(|w| nalgebra::DVector::from_column_slice(w))
            .collect(),
    );
    let neumann = (0..decomposition.len())
        .map(|i| assemble_subdomain_neumann(&mesh, &coefficient, decomposition.cells(i), decomposition.dofs(i)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(ToolError::numerical("local Neumann matrices"))?;
    let problem = Problem {
        spec: cell.problem,
        mesh,
        coefficient,
        a,
        decomposition,
        pou,
        neumann,
        k0: file.k0,
        k1: file.k1,
    };
    Ok((cell, problem))
}

pub fn coarse(config: &ExperimentConfig, out: &Path) -> Result<(), ToolError> {
    let (cell, problem) = load_problem(config, out)?;
    let setup = build_coarse(&problem, cell.method).map_err(ToolError::numerical("coarse space"))?;
    mtx::write_dense(&out.join(Z_FILE), &setup.z)?;
    if setup.z.ncols() > 0 {
        let e = assemble_E(&setup.z, &problem.a).map_err(ToolError::numerical("coarse matrix"))?;
        mtx::write_sparse_sym(&out.join("E.mtx"), &e)?;
    }
    let mut rows = Vec::new();
    for set in &setup.sets {
        for (k, v) in set.values.iter().enumerate() {
            rows.push(vec![
                set.subdomain.to_string(),
                set.kind.as_str().into(),
                k.to_string(),
                num(Some(*v)),
                set.selected[k].to_string(),
            ]);
        }
    }
    write_rows(
        &out.join("eigenvalues.csv"),
        &["subdomain", "problem", "index", "eigenvalue", "selected"],
        &rows,
    )?;
    log::info!("coarse space of dimension {}", setup.z.ncols());
    Ok(())
}

/// Coarse setup of the config with `Z` replaced by the exported one.
fn load_setup(cell: &Cell, problem: &Problem, out: &Path) -> Result<CoarseSetup, ToolError> {
    let path = need(out, Z_FILE, "coarse")?;
    let z = mtx::read_dense(&path)?;
    if z.nrows() != problem.a.order() && !(z.ncols() == 0 && z.nrows() == 0) {
        return Err(ToolError::Parse {
            path,
            line: 2,
            message: format!("Z has {} rows, A has order {}", z.nrows(), problem.a.order()),
        });
    }
    let mut setup = build_coarse(problem, cell.method).map_err(ToolError::numerical("coarse space"))?;
    setup.z = if z.ncols() == 0 {
        DMatrix::zeros(problem.a.order(), 0)
    } else {
        z
    };
    Ok(setup)
}

struct Assembled {
    cell: Cell,
    problem: Problem,
    setup: CoarseSetup,
    op: geneo_core::coarse_operator::InexactCoarseOperator,
    preconditioner: geneo_core::preconditioner::SchwarzPreconditioner,
}

fn assemble_preconditioner(config: &ExperimentConfig, out: &Path) -> Result<Assembled, ToolError> {
    let (cell, problem) = load_problem(config, out)?;
    let setup = load_setup(&cell, &problem, out)?;
    let op = build_coarse_operator(&problem, &setup, cell.strategy, cell_seed(config.seed, 0))
        .map_err(ToolError::numerical("coarse operator"))?;
    let preconditioner = build_preconditioner(&problem, &setup, &op, cell.preconditioner)
        .map_err(ToolError::numerical("preconditioner"))?;
    Ok(Assembled {
        cell,
        problem,
        setup,
        op,
        preconditioner,
    })
}

/// Returns whether PCG converged.
pub fn solve(config: &ExperimentConfig, out: &Path) -> Result<bool, ToolError> {
    let rhs_path = need(out, RHS_FILE, "assemble")?;
    let s = assemble_preconditioner(config, out)?;
    let f = mtx::read_vector(&rhs_path)?;
    let (x, h) = pcg_solve(&s.problem.a, &f, &s.preconditioner, config.solver.rel_tol, config.solver.max_iter)
        .map_err(ToolError::numerical("PCG"))?;
    mtx::write_vector(&out.join("solution.mtx"), &x)?;
    write_convergence(&out.join("convergence.csv"), &h)?;
    log::info!(
        "{} iterations, relative residual {:e}, {}",
        h.iterations,
        h.final_relative_residual,
        if h.converged { "converged" } else { "stalled" }
    );
    Ok(h.converged)
}

/// Eigenvalues of `A v = lambda M v` for an external SPD pair.
pub fn pencil_spectrum(a_path: &Path, m_path: &Path, out: &Path) -> Result<Vec<f64>, ToolError> {
    let a = mtx::read_dense(a_path)?;
    let m = mtx::read_dense(m_path)?;
    if a.shape() != m.shape() || a.nrows() != a.ncols() {
        return Err(ToolError::Parse {
            path: m_path.to_path_buf(),
            line: 2,
            message: format!("shape {:?} does not match A {:?}", m.shape(), a.shape()),
        });
    }
    let pe = symmetric_pencil(&a, &m).map_err(ToolError::numerical("pencil"))?;
    let mut values = pe.values;
    if values.iter().any(|v| !v.is_finite()) || values.len() != a.nrows() {
        return Err(ToolError::Numerical {
            context: format!("pencil ({}, {})", a_path.display(), m_path.display()),
            source: geneo_core::Error::NotPositiveDefinite("M".into()),
        });
    }
    values.sort_by(f64::total_cmp);
    fs::create_dir_all(out).map_err(|e| ToolError::io(out, e))?;
    write_spectrum(&out.join(SPECTRUM_FILE), &values)?;
    Ok(values)
}

/// Spectrum of the configured preconditioned operator.
pub fn spectrum(config: &ExperimentConfig, out: &Path) -> Result<Vec<f64>, ToolError> {
    let s = assemble_preconditioner(config, out)?;
    let values = operator_spectrum(&s.problem.a, &s.preconditioner, config.analysis.spectrum_cap)
        .map_err(ToolError::numerical("spectrum"))?;
    write_spectrum(&out.join(SPECTRUM_FILE), &values)?;
    Ok(values)
}

/// Checks the exported spectrum against the bounds; returns the status.
pub fn report(config: &ExperimentConfig, out: &Path) -> Result<BoundStatus, ToolError> {
    let spectrum_path = need(out, SPECTRUM_FILE, "spectrum")?;
    let (_, rows) = read_rows(&spectrum_path)?;
    let mut values = rows
        .iter()
        .enumerate()
        .map(|(k, r)| {
            r.get(1).and_then(|v| v.parse::<f64>().ok()).ok_or_else(|| ToolError::Parse {
                path: spectrum_path.clone(),
                line: k + 2,
                message: "expected `index,eigenvalue`".into(),
            })
        })
        .collect::<Result<Vec<f64>, _>>()?;
    values.sort_by(f64::total_cmp);
    let s = assemble_preconditioner(config, out)?;
    let kind = s.cell.preconditioner;
    let mut row = vec![
        s.cell.method.as_str().to_string(),
        kind.as_str().into(),
        s.cell.strategy.to_string(),
        s.problem.k0.to_string(),
        s.setup.k1.to_string(),
    ];
    let status = if kind == PreconditionerKind::OneLevelAs || !config.analysis.bounds || values.is_empty() {
        row.extend(std::iter::repeat_n(String::new(), 6));
        BoundStatus::Skipped
    } else {
        let c = bound_constants(&s.problem, &s.setup, &s.op, kind).map_err(ToolError::numerical("bound constants"))?;
        let r = check_bounds(bound_method_of(s.cell.method, kind), &s.cell.strategy.to_string(), &c, &values)
            .map_err(ToolError::numerical("bound check"))?;
        row.extend([
            num(Some(c.eps_a)),
            num(Some(c.c_t)),
            num(Some(c.c_r)),
            num(Some(r.lambda_min)),
            num(Some(r.lambda_max)),
            num(Some(r.condition)),
        ]);
        if r.pass {
            BoundStatus::Pass
        } else if r.failed() {
            BoundStatus::Fail
        } else {
            BoundStatus::NotAsserted
        }
    };
    row.push(status.as_str().into());
    write_rows(
        &out.join("report.csv"),
        &[
            "method",
            "preconditioner",
            "strategy",
            "k0",
            "k1",
            "eps_formula",
            "c_t",
            "c_r",
            "spec_min",
            "spec_max",
            "condition",
            "bound_status",
        ],
        &[row],
    )?;
    Ok(status)
}
