//! TOML problem files.
//!
//! ```toml
//! schema_version = 1
//! name = "disk"
//! variables = ["x1", "x2"]
//! set_a = ["4 - x1^2 - x2^2"]
//! set_b = ["0.25 - x1^2 - x2^2"]
//!
//! [region]
//! lower = [-2.1, -2.1]
//! upper = [2.1, 2.1]
//!
//! [b_box]
//! lower = [-0.5, -0.5]
//! upper = [0.5, 0.5]
//!
//! [degrees]
//! c = 2
//! s = 2
//! ```
//!
//! The remaining tables (`objective`, `tolerances`, `solver`, `grid`) and the
//! `long_running` flag are optional and default as in [`ProblemFile`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use sospdiff_core::semialg::{
    parse_polynomial, ParseError, SpecError, DEFAULT_DEG_C, DEFAULT_DEG_S,
};
use sospdiff_core::{BoxRegion, GramBasis, ObjectiveMode, ProblemSpec, SemiAlgebraicSet, ShrinkMode, ToleranceSet};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("cannot read problem file: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid problem file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    Schema(u32),
    #[error("{set}[{index}] = {expr:?}: {source}")]
    Expression {
        set: &'static str,
        index: usize,
        expr: String,
        source: ParseError,
    },
    #[error(transparent)]
    Spec(#[from] SpecError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Degrees {
    #[serde(default = "default_deg_c")]
    pub c: u32,
    #[serde(default = "default_deg_s")]
    pub s: u32,
}

fn default_deg_c() -> u32 {
    DEFAULT_DEG_C
}

fn default_deg_s() -> u32 {
    DEFAULT_DEG_S
}

impl Default for Degrees {
    fn default() -> Self {
        Degrees {
            c: DEFAULT_DEG_C,
            s: DEFAULT_DEG_S,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectiveSpec {
    pub mode: ObjectiveMode,
    /// Number of Monte Carlo points (mode `mc`).
    pub samples: usize,
    /// Seed for Monte Carlo points and verification samples.
    pub seed: u64,
}

impl Default for ObjectiveSpec {
    fn default() -> Self {
        ObjectiveSpec {
            mode: ObjectiveMode::BoxIntegral,
            samples: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub max_iters: usize,
    pub gram_basis: GramBasis,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            max_iters: 200,
            gram_basis: GramBasis::Reduced,
        }
    }
}

/// Verification and export grid; zero means "default for the dimension".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub resolution: usize,
    pub n_z: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub variables: Vec<String>,
    pub set_a: Vec<String>,
    pub set_b: Vec<String>,
    /// Solving takes long enough that `solve` refuses it without `--long-running`.
    #[serde(default)]
    pub long_running: bool,
    pub region: BoxSpec,
    pub b_box: BoxSpec,
    #[serde(default)]
    pub degrees: Degrees,
    #[serde(default)]
    pub objective: ObjectiveSpec,
    #[serde(default)]
    pub tolerances: ToleranceSet,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub grid: GridSpec,
}

impl ProblemFile {
    pub fn from_toml(text: &str) -> Result<Self, ProblemError> {
        let file: ProblemFile = toml::from_str(text)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(ProblemError::Schema(file.schema_version));
        }
        Ok(file)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ProblemError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("problem files serialize")
    }

    fn parse_set(&self, set: &'static str, exprs: &[String]) -> Result<SemiAlgebraicSet, ProblemError> {
        let polys = exprs
            .iter()
            .enumerate()
            .map(|(index, e)| {
                parse_polynomial(e, &self.variables).map_err(|source| ProblemError::Expression {
                    set,
                    index,
                    expr: e.clone(),
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SemiAlgebraicSet::new(polys)?.with_name(set))
    }

    pub fn set_a(&self) -> Result<SemiAlgebraicSet, ProblemError> {
        self.parse_set("set_a", &self.set_a)
    }

    pub fn set_b(&self) -> Result<SemiAlgebraicSet, ProblemError> {
        self.parse_set("set_b", &self.set_b)
    }

    pub fn to_spec(&self) -> Result<ProblemSpec, ProblemError> {
        let region = BoxRegion::new(self.region.lower.clone(), self.region.upper.clone())?;
        let b_box = BoxRegion::new(self.b_box.lower.clone(), self.b_box.upper.clone())?;
        let mut spec = ProblemSpec::new(self.set_a()?, self.set_b()?, region, b_box)
            .with_degrees(self.degrees.c, self.degrees.s);
        spec.objective_mode = self.objective.mode;
        spec.n_samples = self.objective.samples;
        spec.rng_seed = self.objective.seed;
        spec.tolerances = self.tolerances;
        spec.max_iters = self.solver.max_iters;
        spec.gram_basis = self.solver.gram_basis;
        spec.validate()?;
        Ok(spec)
    }

    pub fn nvars(&self) -> usize {
        self.variables.len()
    }

    /// Grid cells per axis, falling back to 400 (2-D) or 60 (otherwise).
    pub fn grid_resolution(&self) -> usize {
        match (self.grid.resolution, self.nvars()) {
            (0, n) if n <= 2 => 400,
            (0, _) => 60,
            (r, _) => r,
        }
    }

    /// `z` samples per grid point, falling back to 1000 (2-D) or 200 (otherwise).
    pub fn n_z(&self) -> usize {
        match (self.grid.n_z, self.nvars()) {
            (0, n) if n <= 2 => 1000,
            (0, _) => 200,
            (k, _) => k,
        }
    }

    pub fn shrink(&self) -> ShrinkMode {
        self.tolerances.shrink
    }
}
