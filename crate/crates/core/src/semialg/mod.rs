//! Semi-algebraic sets `{x : p_k(x) >= 0 for all k}` and problem settings.

mod parse;

pub use parse::{parse_polynomial, ParseError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polyring::{PolyError, Polynomial};
use crate::sampling;
use crate::sosprog::GramBasis;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("a semi-algebraic set needs at least one constraint")]
    NoConstraints,
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("dimension mismatch: {what} has {found} variables, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid setting: {0}")]
    Setting(String),
}

/// Axis-aligned box `[lower_k, upper_k]` per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, SpecError> {
        let b = BoxRegion { lower, upper };
        b.validate()?;
        Ok(b)
    }

    /// The box `[-h, h]^n`.
    pub fn symmetric(n: usize, h: f64) -> Result<Self, SpecError> {
        Self::new(vec![-h; n], vec![h; n])
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.lower.len() != self.upper.len() {
            return Err(SpecError::InvalidBox(format!(
                "{} lower bounds but {} upper bounds",
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.lower.is_empty() {
            return Err(SpecError::InvalidBox("zero-dimensional box".into()));
        }
        for (k, (l, u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(SpecError::InvalidBox(format!(
                    "coordinate {k}: need finite lower < upper, got [{l}, {u}]"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (u - l))
            .collect()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (l, u))| l <= x && x <= u)
    }

    /// Same center, every half-width multiplied by `factor`.
    pub fn inflate(&self, factor: f64) -> BoxRegion {
        let c = self.center();
        let h = self.half_widths();
        BoxRegion {
            lower: c.iter().zip(&h).map(|(c, h)| c - factor * h).collect(),
            upper: c.iter().zip(&h).map(|(c, h)| c + factor * h).collect(),
        }
    }

    /// Image under `x -> (x - offset) / scale`.
    pub fn map_affine_inverse(&self, offset: &[f64], scale: &[f64]) -> BoxRegion {
        let f = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .zip(offset.iter().zip(scale))
                .map(|(x, (o, s))| (x - o) / s)
                .collect()
        };
        BoxRegion {
            lower: f(&self.lower),
            upper: f(&self.upper),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiAlgebraicSet {
    nvars: usize,
    constraints: Vec<Polynomial>,
    pub name: Option<String>,
}

impl SemiAlgebraicSet {
    pub fn new(constraints: Vec<Polynomial>) -> Result<Self, SpecError> {
        let first = constraints.first().ok_or(SpecError::NoConstraints)?;
        let nvars = first.nvars();
        for p in &constraints {
            if p.nvars() != nvars {
                return Err(SpecError::Dimension {
                    what: "constraint",
                    expected: nvars,
                    found: p.nvars(),
                });
            }
        }
        Ok(SemiAlgebraicSet {
            nvars,
            constraints,
            name: None,
        })
    }

    /// Parses one expression per constraint.
    pub fn parse(exprs: &[impl AsRef<str>], variables: &[String]) -> Result<Self, ParseError> {
        let constraints = exprs
            .iter()
            .map(|e| parse_polynomial(e.as_ref(), variables))
            .collect::<Result<Vec<_>, _>>()?;
        if constraints.is_empty() {
            return Err(ParseError::Syntax {
                pos: 0,
                msg: "empty constraint list".into(),
            });
        }
        Ok(SemiAlgebraicSet {
            nvars: variables.len(),
            constraints,
            name: None,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn constraints(&self) -> &[Polynomial] {
        &self.constraints
    }

    /// `min_k p_k(x)`; the point is in the set iff this is non-negative.
    pub fn min_value(&self, point: &[f64]) -> Result<f64, PolyError> {
        let mut best = f64::INFINITY;
        for p in &self.constraints {
            best = best.min(p.evaluate(point)?);
        }
        Ok(best)
    }

    /// True iff every constraint is at least `-slack` at `point`.
    pub fn contains(&self, point: &[f64], slack: f64) -> Result<bool, PolyError> {
        Ok(self.min_value(point)? >= -slack)
    }

    /// Samples the margin between `region` and a 10%-inflated copy of it,
    /// reporting sampled points that satisfy every constraint. Any such point
    /// shows the set is not contained in `region`.
    pub fn bounding_box_check(
        &self,
        region: &BoxRegion,
        n_samples: usize,
        seed: u64,
    ) -> Result<BoxCheckReport, SpecError> {
        if region.dim() != self.nvars {
            return Err(SpecError::Dimension {
                what: "box",
                expected: self.nvars,
                found: region.dim(),
            });
        }
        let outer = region.inflate(1.1);
        let mut rng = sampling::rng(seed, sampling::stream::BOX_CHECK);
        let mut report = BoxCheckReport {
            n_drawn: 0,
            violations: 0,
            example: None,
        };
        let max_attempts = n_samples.saturating_mul(1000).max(1000);
        let mut attempts = 0;
        while report.n_drawn < n_samples && attempts < max_attempts {
            attempts += 1;
            let p = sampling::uniform_in_box(&mut rng, &outer);
            if region.contains(&p) {
                continue;
            }
            report.n_drawn += 1;
            if self.contains(&p, 0.0)? {
                report.violations += 1;
                report.example.get_or_insert(p);
            }
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCheckReport {
    pub n_drawn: usize,
    pub violations: usize,
    pub example: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShrinkMode {
    Off,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceSet {
    /// Relative duality-gap stop for the SDP solver.
    pub sdp_gap: f64,
    /// Most negative Gram eigenvalue accepted in a certificate.
    pub psd_margin: f64,
    /// Largest coefficient mismatch accepted in a certificate.
    pub residual_max: f64,
    pub shrink: ShrinkMode,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        ToleranceSet {
            sdp_gap: 1e-8,
            psd_margin: 1e-7,
            residual_max: 1e-6,
            shrink: ShrinkMode::Auto,
        }
    }
}

impl ToleranceSet {
    pub fn validate(&self) -> Result<(), SpecError> {
        for (name, v) in [
            ("sdp_gap", self.sdp_gap),
            ("psd_margin", self.psd_margin),
            ("residual_max", self.residual_max),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SpecError::Setting(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveMode {
    /// Exact integral of `c` over the region box.
    #[serde(rename = "box")]
    BoxIntegral,
    /// Sample mean of `c` over uniformly drawn region points.
    #[serde(rename = "mc")]
    MonteCarlo,
}

pub const DEFAULT_DEG_C: u32 = 10;
pub const DEFAULT_DEG_S: u32 = 4;

/// Everything needed to compute one inner approximation of `A ⊖ B`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub set_a: SemiAlgebraicSet,
    pub set_b: SemiAlgebraicSet,
    /// Region `R` the objective integrates over; expected to contain `A`.
    pub region: BoxRegion,
    /// A box known to contain `B`; used for `z` sampling and error bounds.
    pub b_box: BoxRegion,
    pub deg_c: u32,
    pub deg_s: u32,
    pub objective_mode: ObjectiveMode,
    pub n_samples: usize,
    pub rng_seed: u64,
    pub tolerances: ToleranceSet,
    pub max_iters: usize,
    pub gram_basis: GramBasis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpecWarning {
    /// The origin violates some constraint of `B`.
    OriginNotInB,
    /// Sampling found points of `A` outside the region box.
    RegionMissesA { violations: usize, example: Vec<f64> },
}

impl std::fmt::Display for SpecWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpecWarning::OriginNotInB => write!(f, "0 is not in B"),
            SpecWarning::RegionMissesA {
                violations,
                example,
            } => write!(
                f,
                "region box does not contain A: {violations} sampled points of A lie outside it (e.g. {example:?})"
            ),
        }
    }
}

impl ProblemSpec {
    /// Builds a spec with default degrees, tolerances and objective.
    pub fn new(
        set_a: SemiAlgebraicSet,
        set_b: SemiAlgebraicSet,
        region: BoxRegion,
        b_box: BoxRegion,
    ) -> Self {
        ProblemSpec {
            set_a,
            set_b,
            region,
            b_box,
            deg_c: DEFAULT_DEG_C,
            deg_s: DEFAULT_DEG_S,
            objective_mode: ObjectiveMode::BoxIntegral,
            n_samples: 100_000,
            rng_seed: 0,
            tolerances: ToleranceSet::default(),
            max_iters: 200,
            gram_basis: GramBasis::Reduced,
        }
    }

    pub fn with_degrees(mut self, deg_c: u32, deg_s: u32) -> Self {
        self.deg_c = deg_c;
        self.deg_s = deg_s;
        self
    }

    pub fn nvars(&self) -> usize {
        self.set_a.nvars()
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let n = self.set_a.nvars();
        let dims = [
            ("B", self.set_b.nvars()),
            ("region", self.region.dim()),
            ("B box", self.b_box.dim()),
        ];
        for (what, found) in dims {
            if found != n {
                return Err(SpecError::Dimension {
                    what,
                    expected: n,
                    found,
                });
            }
        }
        self.region.validate()?;
        self.b_box.validate()?;
        self.tolerances.validate()?;
        if self.objective_mode == ObjectiveMode::MonteCarlo && self.n_samples == 0 {
            return Err(SpecError::Setting("Monte Carlo objective needs n_samples >= 1".into()));
        }
        if self.max_iters == 0 {
            return Err(SpecError::Setting("max_iters must be positive".into()));
        }
        Ok(())
    }

    /// Non-fatal findings about the inputs.
    pub fn warnings(&self) -> Result<Vec<SpecWarning>, SpecError> {
        let mut out = Vec::new();
        let origin = vec![0.0; self.set_b.nvars()];
        if !self.set_b.contains(&origin, 0.0)? {
            out.push(SpecWarning::OriginNotInB);
        }
        let report = self
            .set_a
            .bounding_box_check(&self.region, 10_000, self.rng_seed)?;
        if let Some(example) = report.example {
            out.push(SpecWarning::RegionMissesA {
                violations: report.violations,
                example,
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|k| format!("x{k}")).collect()
    }

    fn disk(r2: f64) -> SemiAlgebraicSet {
        SemiAlgebraicSet::parse(&[format!("{r2} - x1^2 - x2^2")], &names(2)).unwrap()
    }

    #[test]
    fn contains_examples() {
        let d = disk(4.0);
        assert!(d.contains(&[0.0, 0.0], 0.0).unwrap());
        assert!(!d.contains(&[3.0, 0.0], 0.0).unwrap());
        assert!(d.contains(&[3.0, 0.0], 5.0).unwrap());
        let bow = SemiAlgebraicSet::parse(&["0.1 - x1^4 - x2^4 + 10*x1^2 - x2^2"], &names(2)).unwrap();
        assert!(bow.contains(&[0.0, 0.0], 0.0).unwrap());
        assert!(d.contains(&[0.0], 0.0).is_err());
    }

    #[test]
    fn box_check_finds_escapes() {
        let d = disk(4.0);
        let wide = BoxRegion::symmetric(2, 2.1).unwrap();
        let r = d.bounding_box_check(&wide, 100_000, 1).unwrap();
        assert_eq!(r.n_drawn, 100_000);
        assert_eq!(r.violations, 0);
        let narrow = BoxRegion::symmetric(2, 1.0).unwrap();
        let r = d.bounding_box_check(&narrow, 10_000, 1).unwrap();
        assert!(r.violations > 0);
        let ex = r.example.unwrap();
        assert!(!narrow.contains(&ex));
    }

    #[test]
    fn empty_set_never_escapes() {
        let e = SemiAlgebraicSet::parse(&["-1 - x1^2"], &names(1)).unwrap();
        let b = BoxRegion::symmetric(1, 0.5).unwrap();
        assert_eq!(e.bounding_box_check(&b, 5000, 3).unwrap().violations, 0);
    }

    #[test]
    fn invalid_boxes() {
        assert!(BoxRegion::new(vec![1.0], vec![0.0]).is_err());
        assert!(BoxRegion::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(BoxRegion::new(vec![], vec![]).is_err());
        assert!(BoxRegion::new(vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn empty_constraint_list_rejected() {
        assert_eq!(SemiAlgebraicSet::new(vec![]).unwrap_err(), SpecError::NoConstraints);
    }

    #[test]
    fn origin_warning() {
        let a = disk(4.0);
        let b = SemiAlgebraicSet::parse(&["0.09 - (x1 - 0.5)^2 - x2^2"], &names(2)).unwrap();
        let spec = ProblemSpec::new(
            a,
            b,
            BoxRegion::symmetric(2, 2.1).unwrap(),
            BoxRegion::new(vec![0.2, -0.3], vec![0.8, 0.3]).unwrap(),
        );
        spec.validate().unwrap();
        assert_eq!(spec.warnings().unwrap(), vec![SpecWarning::OriginNotInB]);
    }

    #[test]
    fn spec_dimension_checks() {
        let a = disk(4.0);
        let b = SemiAlgebraicSet::parse(&["1 - x1^2"], &names(1)).unwrap();
        let spec = ProblemSpec::new(
            a,
            b,
            BoxRegion::symmetric(2, 2.1).unwrap(),
            BoxRegion::symmetric(1, 1.0).unwrap(),
        );
        assert!(matches!(spec.validate(), Err(SpecError::Dimension { .. })));
    }
}
