//! Coarse operator `E = Z^T A Z`, its inexact surrogates and the coarse
//! projections `P0 = Z E^-1 Z^T A` and `P0~ = Z E~^-1 Z^T A`.

pub mod ichol;

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::{cholesky, is_positive_definite, sym_eigen};
use crate::error::{invalid, Error, Result};
use crate::sparse::{Definiteness, SparseSymMatrix};

pub use ichol::{incomplete_cholesky, IncompleteCholesky};

/// Default size cap of the direct `eps_A` evaluation.
pub const DIRECT_EPS_CAP: usize = 2000;

/// How `E~` is obtained from `E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoarseStrategy {
    Exact,
    /// `E~ = L diag(d) L^T` with `E = L L^T` and `d` drawn in `[lo, hi]`,
    /// both endpoints included, so `spec(E E~^-1) = {1 / d_k}`.
    SpectralPerturbation { lo: f64, hi: f64 },
    /// Threshold-dropping incomplete Cholesky of `E`.
    IncompleteFactor { drop_tol: f64 },
    /// Cholesky of `E` rounded to single precision.
    ReducedPrecision,
    /// `E~` supplied directly.
    Explicit,
}

impl fmt::Display for CoarseStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoarseStrategy::Exact => write!(f, "exact"),
            CoarseStrategy::SpectralPerturbation { lo, hi } => {
                write!(f, "spectral-perturbation({lo},{hi})")
            }
            CoarseStrategy::IncompleteFactor { drop_tol } => {
                write!(f, "incomplete-factor({drop_tol:e})")
            }
            CoarseStrategy::ReducedPrecision => write!(f, "reduced-precision"),
            CoarseStrategy::Explicit => write!(f, "explicit"),
        }
    }
}

fn parse_args(s: &str, name: &str) -> Option<Vec<f64>> {
    let inner = s.strip_prefix(name)?.trim().strip_prefix('(')?.strip_suffix(')')?;
    inner.split(',').map(|t| t.trim().parse::<f64>().ok()).collect()
}

impl FromStr for CoarseStrategy {
    type Err = Error;

    /// Accepts `exact`, `spectral-perturbation(a,b)`,
    /// `incomplete-factor(tol)` and `reduced-precision`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let strategy = match s {
            "exact" => CoarseStrategy::Exact,
            "reduced-precision" => CoarseStrategy::ReducedPrecision,
            _ => {
                if let Some(v) = parse_args(s, "spectral-perturbation") {
                    match v[..] {
                        [lo, hi] => CoarseStrategy::SpectralPerturbation { lo, hi },
                        _ => return Err(invalid("spectral-perturbation takes two bounds")),
                    }
                } else if let Some(v) = parse_args(s, "incomplete-factor") {
                    match v[..] {
                        [drop_tol] => CoarseStrategy::IncompleteFactor { drop_tol },
                        _ => return Err(invalid("incomplete-factor takes one drop tolerance")),
                    }
                } else {
                    return Err(invalid(alloc::format!("unknown coarse strategy `{s}`")));
                }
            }
        };
        strategy.validate()?;
        Ok(strategy)
    }
}

impl CoarseStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CoarseStrategy::SpectralPerturbation { lo, hi } => {
                if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                    return Err(invalid("spectral-perturbation bounds must satisfy 0 < a <= b"));
                }
            }
            CoarseStrategy::IncompleteFactor { drop_tol }
                if !(drop_tol >= 0.0 && drop_tol.is_finite()) => {
                    return Err(invalid("incomplete-factor drop tolerance must be >= 0"));
                }
            _ => {}
        }
        Ok(())
    }
}

/// `E = Z^T A Z`; fails with a rank-defect report if `E` does not factor.
#[allow(non_snake_case)]
pub fn assemble_E(z: &DMatrix<f64>, a: &SparseSymMatrix) -> Result<SparseSymMatrix> {
    if z.nrows() != a.order() {
        return Err(Error::DimensionMismatch {
            expected: a.order(),
            got: z.nrows(),
        });
    }
    let e = crate::dense::symmetrize(&(z.transpose() * a.mul_dense(z)));
    // judged on the unit-diagonal scaling, so column norms do not matter
    let s = e.diagonal().map(|v| if v > 0.0 { 1.0 / v.sqrt() } else { 0.0 });
    let scaled = DMatrix::from_fn(e.nrows(), e.ncols(), |i, j| s[i] * e[(i, j)] * s[j]);
    if !is_positive_definite(&scaled) || cholesky(&e).is_none() {
        return Err(Error::RankDefect(alloc::format!(
            "Z^T A Z of order {} is not positive definite",
            e.nrows()
        )));
    }
    SparseSymMatrix::from_dense(&e, Definiteness::Spd)
}

/// `E`, its exact factor and a factored surrogate `E~ = G G^T`.
#[derive(Debug, Clone)]
pub struct InexactCoarseOperator {
    strategy: CoarseStrategy,
    e: DMatrix<f64>,
    l: DMatrix<f64>,
    g: DMatrix<f64>,
    shift: f64,
    spectrum: Vec<f64>,
}

impl InexactCoarseOperator {
    /// Builds `E~` from `E`. `seed` only matters for the spectral
    /// perturbation.
    #[allow(non_snake_case)]
    pub fn build(e: &SparseSymMatrix, strategy: CoarseStrategy, seed: u64) -> Result<Self> {
        strategy.validate()?;
        let e = e.to_dense();
        let m = e.nrows();
        let l = factor_e(&e)?;
        let (g, shift) = match strategy {
            CoarseStrategy::Exact => (l.clone(), 0.0),
            CoarseStrategy::SpectralPerturbation { lo, hi } => {
                let d = perturbation_diagonal(m, lo, hi, seed);
                let mut g = l.clone();
                for (k, mut col) in g.column_iter_mut().enumerate() {
                    col *= d[k].sqrt();
                }
                // spec(E E~^-1) = {1/d} by construction; reported exactly
                let mut spectrum: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
                spectrum.sort_by(f64::total_cmp);
                return Ok(Self {
                    strategy,
                    e,
                    l,
                    g,
                    shift: 0.0,
                    spectrum,
                });
            }
            CoarseStrategy::IncompleteFactor { drop_tol } => {
                let ic = incomplete_cholesky(&e, drop_tol)?;
                (ic.l, ic.shift)
            }
            CoarseStrategy::ReducedPrecision => {
                let rounded = e.map(|v| v as f32 as f64);
                let c = cholesky(&rounded).ok_or_else(|| {
                    Error::NotPositiveDefinite("E rounded to single precision".into())
                })?;
                (c.l(), 0.0)
            }
            CoarseStrategy::Explicit => {
                return Err(invalid("use from_matrices for an explicit E~"));
            }
        };
        let spectrum = if strategy == CoarseStrategy::Exact {
            alloc::vec![1.0; m]
        } else {
            pencil_spectrum_via_factor(&e, &g)
        };
        Ok(Self {
            strategy,
            e,
            l,
            g,
            shift,
            spectrum,
        })
    }

    /// Uses a given SPD `E~`.
    pub fn from_matrices(e: &DMatrix<f64>, e_tilde: &DMatrix<f64>) -> Result<Self> {
        if e.shape() != e_tilde.shape() {
            return Err(Error::DimensionMismatch {
                expected: e.nrows(),
                got: e_tilde.nrows(),
            });
        }
        let l = factor_e(e)?;
        let g = cholesky(e_tilde)
            .ok_or_else(|| Error::NotPositiveDefinite("E~".into()))?
            .l();
        let spectrum = pencil_spectrum_via_factor(e, &g);
        Ok(Self {
            strategy: CoarseStrategy::Explicit,
            e: e.clone(),
            l,
            g,
            shift: 0.0,
            spectrum,
        })
    }

    pub fn order(&self) -> usize {
        self.e.nrows()
    }

    pub fn strategy(&self) -> CoarseStrategy {
        self.strategy
    }

    pub fn strategy_name(&self) -> String {
        self.strategy.to_string()
    }

    pub fn e(&self) -> &DMatrix<f64> {
        &self.e
    }

    /// `E~ = G G^T` formed explicitly (for export and audits only).
    pub fn e_tilde(&self) -> DMatrix<f64> {
        &self.g * self.g.transpose()
    }

    /// Relative diagonal shift applied by the incomplete factorization.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Eigenvalues of `E E~^-1`, ascending.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn lambda_min(&self) -> f64 {
        self.spectrum.first().copied().unwrap_or(1.0)
    }

    pub fn lambda_max(&self) -> f64 {
        self.spectrum.last().copied().unwrap_or(1.0)
    }

    /// `max(|1 - lambda_min|, |1 - lambda_max|)` over `spec(E E~^-1)`.
    pub fn epsilon_formula(&self) -> f64 {
        (1.0 - self.lambda_min()).abs().max((1.0 - self.lambda_max()).abs())
    }

    pub fn solve_e(&self, x: &DVector<f64>) -> DVector<f64> {
        solve_factored(&self.l, x)
    }

    pub fn solve_e_tilde(&self, x: &DVector<f64>) -> DVector<f64> {
        solve_factored(&self.g, x)
    }
}

fn factor_e(e: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if e.nrows() == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    cholesky(e)
        .map(|c| c.l())
        .ok_or_else(|| Error::RankDefect(alloc::format!("E of order {} does not factor", e.nrows())))
}

fn solve_factored(g: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    if g.nrows() == 0 {
        return DVector::zeros(0);
    }
    let y = g.solve_lower_triangular(x).expect("nonsingular triangular factor");
    g.tr_solve_lower_triangular(&y).expect("nonsingular triangular factor")
}

/// Eigenvalues of `G^-1 E G^-T`, the symmetric form of `E (G G^T)^-1`.
fn pencil_spectrum_via_factor(e: &DMatrix<f64>, g: &DMatrix<f64>) -> Vec<f64> {
    if e.nrows() == 0 {
        return Vec::new();
    }
    let x = g.solve_lower_triangular(e).expect("nonsingular triangular factor");
    let s = g
        .solve_lower_triangular(&x.transpose())
        .expect("nonsingular triangular factor");
    sym_eigen(&s).values
}

fn perturbation_diagonal(m: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d: Vec<f64> = (0..m).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
    if m >= 1 {
        d[0] = lo;
    }
    if m >= 2 {
        d[m - 1] = hi;
    }
    d
}

/// `Z E^-1 Z^T A x`.
#[allow(non_snake_case)]
pub fn apply_P0(a: &SparseSymMatrix, z: &DMatrix<f64>, op: &InexactCoarseOperator, x: &DVector<f64>) -> DVector<f64> {
    z * op.solve_e(&(z.transpose() * a.mul_vec(x)))
}

/// `Z E~^-1 Z^T A x`.
#[allow(non_snake_case)]
pub fn apply_P0_tilde(
    a: &SparseSymMatrix,
    z: &DMatrix<f64>,
    op: &InexactCoarseOperator,
    x: &DVector<f64>,
) -> DVector<f64> {
    z * op.solve_e_tilde(&(z.transpose() * a.mul_vec(x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsilonMode {
    Formula,
    /// Dense `A`-norm of `P0 - P0~`, refused above `cap` DOFs.
    Direct { cap: usize },
}

/// `||P0 - P0~||_A`, either from `spec(E E~^-1)` or computed densely as the
/// spectral radius of `C^T Z (E^-1 - E~^-1) Z^T C` with `A = C C^T`.
#[allow(non_snake_case)]
pub fn epsilon_A(
    op: &InexactCoarseOperator,
    a: &SparseSymMatrix,
    z: &DMatrix<f64>,
    mode: EpsilonMode,
) -> Result<f64> {
    match mode {
        EpsilonMode::Formula => Ok(op.epsilon_formula()),
        EpsilonMode::Direct { cap } => {
            let n = a.order();
            if n > cap {
                return Err(Error::TooLarge { order: n, cap });
            }
            if op.order() == 0 {
                return Ok(0.0);
            }
            let c = cholesky(&a.to_dense())
                .ok_or_else(|| Error::NotPositiveDefinite("A".into()))?
                .l();
            let k = z.transpose() * &c;
            let x1 = op.l.solve_lower_triangular(&k).expect("nonsingular factor");
            let x2 = op.g.solve_lower_triangular(&k).expect("nonsingular factor");
            let diff = x1.transpose() * &x1 - x2.transpose() * &x2;
            let ev = sym_eigen(&diff).values;
            Ok(ev.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        &g * g.transpose() + DMatrix::identity(n, n)
    }

    fn small_problem() -> (SparseSymMatrix, DMatrix<f64>) {
        let a = SparseSymMatrix::from_dense(&spd(12, 1), Definiteness::Spd).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let z = DMatrix::from_fn(12, 4, |_, _| rng.random::<f64>() - 0.5);
        (a, z)
    }

    #[test]
    fn strategy_strings_round_trip() {
        for s in ["exact", "spectral-perturbation(0.5,2)", "incomplete-factor(1e-2)", "reduced-precision"] {
            let parsed: CoarseStrategy = s.parse().unwrap();
            let again: CoarseStrategy = parsed.to_string().parse().unwrap();
            assert_eq!(parsed, again);
        }
        assert!("spectral-perturbation(2,0.5)".parse::<CoarseStrategy>().is_err());
        assert!("multigrid".parse::<CoarseStrategy>().is_err());
    }

    #[test]
    fn e_matches_dense_triple_product() {
        let (a, z) = small_problem();
        let e = assemble_E(&z, &a).unwrap().to_dense();
        let oracle = z.transpose() * a.to_dense() * &z;
        assert!((e - oracle).amax() < 1e-12);
        let empty = assemble_E(&DMatrix::zeros(12, 0), &a).unwrap();
        assert_eq!(empty.order(), 0);
        let single = assemble_E(&z.columns(0, 1).into_owned(), &a).unwrap();
        let zc = z.column(0).into_owned();
        assert!((single.get(0, 0) - zc.dot(&a.mul_vec(&zc))).abs() < 1e-12);
        let dup = DMatrix::from_columns(&[zc.clone(), zc]);
        assert!(matches!(assemble_E(&dup, &a), Err(Error::RankDefect(_))));
    }

    #[test]
    fn exact_and_perturbed_spectra() {
        let (a, z) = small_problem();
        let e = assemble_E(&z, &a).unwrap();
        let op = InexactCoarseOperator::build(&e, CoarseStrategy::Exact, 0).unwrap();
        assert_eq!((op.lambda_min(), op.lambda_max(), op.epsilon_formula()), (1.0, 1.0, 0.0));
        let d = epsilon_A(&op, &a, &z, EpsilonMode::Direct { cap: 100 }).unwrap();
        assert!(d < 1e-12);

        let sp = CoarseStrategy::SpectralPerturbation { lo: 0.5, hi: 2.0 };
        let op = InexactCoarseOperator::build(&e, sp, 3).unwrap();
        assert_eq!((op.lambda_min(), op.lambda_max()), (0.5, 2.0));
        // the reported spectrum is what the factor actually realises
        let check = pencil_spectrum_via_factor(op.e(), &op.g);
        for (x, y) in check.iter().zip(op.spectrum()) {
            assert!((x - y).abs() < 1e-10);
        }
        let direct = epsilon_A(&op, &a, &z, EpsilonMode::Direct { cap: 100 }).unwrap();
        assert!((direct - op.epsilon_formula()).abs() < 1e-8);
        assert!(epsilon_A(&op, &a, &z, EpsilonMode::Direct { cap: 5 }).is_err());
    }

    #[test]
    fn doubled_e_gives_half() {
        let (a, z) = small_problem();
        let e = assemble_E(&z, &a).unwrap().to_dense();
        let op = InexactCoarseOperator::from_matrices(&e, &(&e * 2.0)).unwrap();
        assert!((op.epsilon_formula() - 0.5).abs() < 1e-12);
        let direct = epsilon_A(&op, &a, &z, EpsilonMode::Direct { cap: 100 }).unwrap();
        assert!((direct - 0.5).abs() < 1e-10);
    }

    #[test]
    fn zero_drop_incomplete_factor_is_exact() {
        let (a, z) = small_problem();
        let e = assemble_E(&z, &a).unwrap();
        let op = InexactCoarseOperator::build(&e, CoarseStrategy::IncompleteFactor { drop_tol: 0.0 }, 0)
            .unwrap();
        assert!((op.e_tilde() - op.e()).amax() < 1e-12);
        let op = InexactCoarseOperator::build(&e, CoarseStrategy::ReducedPrecision, 0).unwrap();
        assert!(op.epsilon_formula() < 1e-5);
    }

    #[test]
    fn projections() {
        let (a, z) = small_problem();
        let e = assemble_E(&z, &a).unwrap();
        let op = InexactCoarseOperator::build(&e, CoarseStrategy::SpectralPerturbation { lo: 0.25, hi: 4.0 }, 5)
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = DVector::from_fn(12, |_, _| rng.random::<f64>() - 0.5);
        let p0 = apply_P0(&a, &z, &op, &x);
        assert!((apply_P0(&a, &z, &op, &p0) - &p0).amax() < 1e-10);
        // P0 P0~ = P0~
        let pt = apply_P0_tilde(&a, &z, &op, &x);
        assert!((apply_P0(&a, &z, &op, &pt) - &pt).amax() < 1e-10);
        // (I - P0) x lies in the kernel of Z^T A, hence of P0~
        let kernel_vec = &x - &p0;
        assert!(apply_P0_tilde(&a, &z, &op, &kernel_vec).amax() < 1e-10);
        // surjectivity witness
        let beta = DVector::from_fn(4, |i, _| i as f64 - 1.5);
        let y = &z * &beta;
        let pre = &z * op.solve_e(&(op.e_tilde() * &beta));
        assert!((apply_P0_tilde(&a, &z, &op, &pre) - y).amax() < 1e-9);
    }
}
