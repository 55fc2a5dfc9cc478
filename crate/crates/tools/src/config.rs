//! Experiment configuration: TOML with dotted sections, strict keys and
//! `GENEO__SECTION__KEY` environment overrides.

use std::path::{Path, PathBuf};

use geneo_core::coarse_operator::CoarseStrategy;
use geneo_core::coefficient::CoefficientPattern;
use geneo_core::experiment::{CoarseMethod, LocalMatrixKind, ProblemSpec};
use geneo_core::mesh::DirichletSides;
use geneo_core::preconditioner::PreconditionerKind;
use serde::Deserialize;

use crate::error::ToolError;

/// Prefix of environment overrides; `__` separates path segments, so
/// `GENEO__COARSE__TAU=0.2` sets `coarse.tau`.
pub const ENV_PREFIX: &str = "GENEO__";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub coefficient: CoefficientConfig,
    pub decomposition: DecompositionConfig,
    pub coarse: CoarseConfig,
    #[serde(default)]
    pub inexact: InexactConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub dimension: usize,
    pub cells: usize,
    /// Sides carrying the Dirichlet condition: `left`, `right`, `bottom`, `top`.
    #[serde(default = "all_sides")]
    pub dirichlet: Vec<String>,
}

fn all_sides() -> Vec<String> {
    ["left", "right", "bottom", "top"].map(String::from).to_vec()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientKind {
    Constant,
    Checkerboard,
    Channels,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    pub kind: CoefficientKind,
    #[serde(default = "one")]
    pub contrast: f64,
    #[serde(default = "one")]
    pub value: f64,
    #[serde(default = "four")]
    pub blocks: usize,
    #[serde(default = "four")]
    pub count: usize,
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        Self {
            kind: CoefficientKind::Constant,
            contrast: 1.0,
            value: 1.0,
            blocks: 4,
            count: 4,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn four() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionConfig {
    pub grid: [usize; 2],
    #[serde(default = "one_usize")]
    pub overlap: usize,
    #[serde(default = "one_usize")]
    pub annex_layers: usize,
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Geneo,
    Geneo2,
    AnnexGeneo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalKindName {
    Neumann,
    Robin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PreconditionerName {
    OneLevelAs,
    GeneoAcs,
    Geneo2Acs,
    Geneo2Nonrobust,
}

impl From<PreconditionerName> for PreconditionerKind {
    fn from(p: PreconditionerName) -> Self {
        match p {
            PreconditionerName::OneLevelAs => PreconditionerKind::OneLevelAs,
            PreconditionerName::GeneoAcs => PreconditionerKind::GeneoAcs,
            PreconditionerName::Geneo2Acs => PreconditionerKind::Geneo2Acs,
            PreconditionerName::Geneo2Nonrobust => PreconditionerKind::Geneo2NonRobust,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoarseConfig {
    pub method: MethodName,
    pub tau: f64,
    #[serde(default = "half")]
    pub gamma: f64,
    #[serde(default = "robin")]
    pub local: LocalKindName,
    #[serde(default = "ten")]
    pub alpha: f64,
    /// Defaults to the preconditioner matching `method`.
    #[serde(default)]
    pub preconditioner: Option<PreconditionerName>,
}

fn half() -> f64 {
    0.5
}

fn ten() -> f64 {
    10.0
}

fn robin() -> LocalKindName {
    LocalKindName::Robin
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InexactConfig {
    /// `exact`, `spectral-perturbation(a,b)`, `incomplete-factor(tol)` or
    /// `reduced-precision`.
    #[serde(default = "exact")]
    pub strategy: String,
}

impl Default for InexactConfig {
    fn default() -> Self {
        Self { strategy: exact() }
    }
}

fn exact() -> String {
    "exact".into()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "max_iter")]
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: rel_tol(),
            max_iter: max_iter(),
        }
    }
}

fn rel_tol() -> f64 {
    1e-8
}

fn max_iter() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "yes")]
    pub spectrum: bool,
    #[serde(default = "yes")]
    pub bounds: bool,
    /// Dense `||P0 - P0~||_A` next to the formula value.
    #[serde(default)]
    pub direct_eps: bool,
    #[serde(default = "spectrum_cap")]
    pub spectrum_cap: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            spectrum: true,
            bounds: true,
            direct_eps: false,
            spectrum_cap: spectrum_cap(),
        }
    }
}

fn yes() -> bool {
    true
}

fn spectrum_cap() -> usize {
    geneo_core::analysis::SPECTRUM_CAP
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "out_dir")]
    pub dir: PathBuf,
    /// Write `A`, `Z`, `E` and the right-hand side of every cell.
    #[serde(default)]
    pub export_matrices: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: out_dir(),
            export_matrices: false,
        }
    }
}

fn out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Lists replacing the single value of the matching key; the run covers
/// their Cartesian product.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub methods: Vec<MethodName>,
    #[serde(default)]
    pub strategies: Vec<String>,
    #[serde(default)]
    pub contrasts: Vec<f64>,
}

/// One fully specified run.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub problem: ProblemSpec,
    pub method: CoarseMethod,
    pub preconditioner: PreconditionerKind,
    pub strategy: CoarseStrategy,
    pub contrast: f64,
}

fn config_err(key: &str, msg: impl Into<String>) -> ToolError {
    ToolError::Config {
        key: key.into(),
        message: msg.into(),
    }
}

impl ExperimentConfig {
    /// Reads `path`, applies environment overrides and validates.
    pub fn load(path: &Path) -> Result<Self, ToolError> {
        let text = std::fs::read_to_string(path).map_err(|e| ToolError::io(path, e))?;
        Self::from_toml_with_env(&text, std::env::vars())
    }

    pub fn from_toml_with_env(
        text: &str,
        env: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, ToolError> {
        let mut value: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            config_err("<document>", e.message().to_string())
        })?;
        let mut overrides: Vec<(String, String)> =
            env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        overrides.sort();
        for (k, v) in overrides {
            apply_override(&mut value, &k[ENV_PREFIX.len()..], &v)?;
        }
        let de = toml::Value::Table(value);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            config_err(&key, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Checks every parameter against its domain; no assembly happens here.
    pub fn validate(&self) -> Result<(), ToolError> {
        if !(self.mesh.dimension == 1 || self.mesh.dimension == 2) {
            return Err(config_err("mesh.dimension", "must be 1 or 2"));
        }
        if self.mesh.cells < 2 {
            return Err(config_err("mesh.cells", "must be at least 2"));
        }
        self.dirichlet()?;
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_err(key, format!("must be positive and finite, got {v}")))
            }
        };
        positive("coefficient.contrast", self.coefficient.contrast)?;
        positive("coefficient.value", self.coefficient.value)?;
        if self.coefficient.blocks == 0 {
            return Err(config_err("coefficient.blocks", "must be at least 1"));
        }
        if self.coefficient.count == 0 {
            return Err(config_err("coefficient.count", "must be at least 1"));
        }
        let [gx, gy] = self.decomposition.grid;
        if gx == 0 || gy == 0 {
            return Err(config_err("decomposition.grid", "entries must be at least 1"));
        }
        if !self.mesh.cells.is_multiple_of(gx) || (self.mesh.dimension == 2 && !self.mesh.cells.is_multiple_of(gy)) {
            return Err(config_err("decomposition.grid", "must divide mesh.cells"));
        }
        if self.mesh.dimension == 1 && gy != 1 {
            return Err(config_err("decomposition.grid", "second entry must be 1 in 1D"));
        }
        if self.decomposition.annex_layers == 0 {
            return Err(config_err("decomposition.annex_layers", "must be at least 1"));
        }
        positive("coarse.tau", self.coarse.tau)?;
        positive("coarse.gamma", self.coarse.gamma)?;
        positive("coarse.alpha", self.coarse.alpha)?;
        parse_strategy("inexact.strategy", &self.inexact.strategy)?;
        positive("solver.rel_tol", self.solver.rel_tol)?;
        if self.solver.max_iter == 0 {
            return Err(config_err("solver.max_iter", "must be at least 1"));
        }
        for (k, s) in self.sweep.strategies.iter().enumerate() {
            parse_strategy(&format!("sweep.strategies[{k}]"), s)?;
        }
        for (k, &c) in self.sweep.contrasts.iter().enumerate() {
            positive(&format!("sweep.contrasts[{k}]"), c)?;
        }
        if let Some(p) = self.coarse.preconditioner {
            let methods = if self.sweep.methods.is_empty() {
                vec![self.coarse.method]
            } else {
                self.sweep.methods.clone()
            };
            for m in methods {
                let ok = match p {
                    PreconditionerName::OneLevelAs => true,
                    PreconditionerName::GeneoAcs => m != MethodName::Geneo2,
                    PreconditionerName::Geneo2Acs | PreconditionerName::Geneo2Nonrobust => m == MethodName::Geneo2,
                };
                if !ok {
                    return Err(config_err(
                        "coarse.preconditioner",
                        format!("does not apply to method {m:?}"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn dirichlet(&self) -> Result<DirichletSides, ToolError> {
        let mut sides = DirichletSides::none();
        for s in &self.mesh.dirichlet {
            match s.as_str() {
                "left" => sides.left = true,
                "right" => sides.right = true,
                "bottom" => sides.bottom = true,
                "top" => sides.top = true,
                other => return Err(config_err("mesh.dirichlet", format!("unknown side `{other}`"))),
            }
        }
        Ok(sides)
    }

    fn pattern(&self, contrast: f64) -> CoefficientPattern {
        let c = &self.coefficient;
        match c.kind {
            CoefficientKind::Constant => CoefficientPattern::Constant(c.value),
            CoefficientKind::Checkerboard => CoefficientPattern::Checkerboard {
                contrast,
                blocks: c.blocks,
            },
            CoefficientKind::Channels => CoefficientPattern::Channels {
                contrast,
                count: c.count,
            },
        }
    }

    pub fn problem_spec(&self, contrast: f64) -> ProblemSpec {
        ProblemSpec {
            dimension: self.mesh.dimension,
            cells: self.mesh.cells,
            dirichlet: self.dirichlet().expect("validated"),
            coefficient: self.pattern(contrast),
            grid: self.decomposition.grid,
            overlap: self.decomposition.overlap,
        }
    }

    pub fn method(&self, name: MethodName) -> CoarseMethod {
        let c = &self.coarse;
        match name {
            MethodName::Geneo => CoarseMethod::Geneo { tau: c.tau },
            MethodName::Geneo2 => CoarseMethod::Geneo2 {
                tau: c.tau,
                gamma: c.gamma,
                local: match c.local {
                    LocalKindName::Neumann => LocalMatrixKind::Neumann,
                    LocalKindName::Robin => LocalMatrixKind::Robin { alpha: c.alpha },
                },
            },
            MethodName::AnnexGeneo => CoarseMethod::AnnexGeneo {
                tau: c.tau,
                layers: self.decomposition.annex_layers,
            },
        }
    }

    pub fn strategy(&self) -> CoarseStrategy {
        parse_strategy("inexact.strategy", &self.inexact.strategy).expect("validated")
    }

    /// Cells in method-major, then strategy, then contrast order.
    pub fn cells(&self) -> Vec<Cell> {
        let methods = if self.sweep.methods.is_empty() {
            vec![self.coarse.method]
        } else {
            self.sweep.methods.clone()
        };
        let strategies: Vec<CoarseStrategy> = if self.sweep.strategies.is_empty() {
            vec![self.strategy()]
        } else {
            self.sweep
                .strategies
                .iter()
                .map(|s| parse_strategy("sweep.strategies", s).expect("validated"))
                .collect()
        };
        let contrasts = if self.sweep.contrasts.is_empty() {
            vec![self.coefficient.contrast]
        } else {
            self.sweep.contrasts.clone()
        };
        let mut cells = Vec::new();
        for &m in &methods {
            for &s in &strategies {
                for &c in &contrasts {
                    let method = self.method(m);
                    cells.push(Cell {
                        index: cells.len(),
                        problem: self.problem_spec(c),
                        method,
                        preconditioner: self
                            .coarse
                            .preconditioner
                            .map(Into::into)
                            .unwrap_or_else(|| geneo_core::experiment::default_kind(method)),
                        strategy: s,
                        contrast: c,
                    });
                }
            }
        }
        cells
    }
}

fn parse_strategy(key: &str, s: &str) -> Result<CoarseStrategy, ToolError> {
    if s.trim() == "explicit" {
        return Err(config_err(key, "`explicit` needs a supplied matrix and is not a config option"));
    }
    s.parse::<CoarseStrategy>().map_err(|e| config_err(key, e.to_string()))
}

/// Sets `a__b__c` (lower-cased) in `table`; the value is read as a TOML
/// literal when it parses as one and as a string otherwise.
fn apply_override(table: &mut toml::Table, path: &str, raw: &str) -> Result<(), ToolError> {
    let keys: Vec<String> = path.split("__").map(|k| k.to_ascii_lowercase()).collect();
    let dotted = keys.join(".");
    if keys.iter().any(|k| k.is_empty()) {
        return Err(config_err(&dotted, "malformed environment override"));
    }
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut current = table;
    for k in &keys[..keys.len() - 1] {
        let entry = current
            .entry(k.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        current = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(config_err(&dotted, format!("`{k}` is not a section"))),
        };
    }
    current.insert(keys[keys.len() - 1].clone(), value);
    Ok(())
}
