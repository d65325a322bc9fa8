//! End-to-end computation of `C ⊆ A ⊖ B`, one SOS program per constraint of `A`.
//!
//! Each constraint goes through: rescale so the region becomes `[-1, 1]^n`,
//! assemble, solve, rebuild the certificate, lower `c` by the soundness
//! margin, and map `c` back to the original coordinates. Constraints are
//! processed in parallel and independently; a failure in one does not stop
//! the others, but it does make the overall result unsound.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::Grid;
use crate::objective::{self, ObjectiveFunctional, SampleRegion, WeightSource};
use crate::polyring::{monomial_basis, Polynomial};
use crate::sdpsolve::{self, SdpStatus};
use crate::sosprog::{self, Certificate, SosProgram, SoundnessBound};
use crate::semialg::{BoxRegion, ObjectiveMode, ProblemSpec, SemiAlgebraicSet, SpecError, SpecWarning};

/// Relative floating-point allowance for evaluating the unscaled `c`.
const ROUNDING_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    /// Certificate within tolerances.
    Valid,
    /// The solver returned an iterate but its certificate fails the tolerances.
    Invalid,
    /// The solver certified that no `c` of the requested degree admits a
    /// certificate. The constraint contributes `c = -1`, so `C` is empty
    /// (trivially an inner approximation).
    Infeasible,
    /// No usable iterate (assembly error, unbounded or breakdown).
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub status: Option<SdpStatus>,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub rows_before: usize,
    pub rows_after: usize,
    pub block_dims: Vec<usize>,
    pub n_free: usize,
    pub p_degree: u32,
    pub final_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// Affine change of variables used for one constraint: `x = center + half * y`,
/// `z = half * w`, and `a` divided by `a_factor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub center: Vec<f64>,
    pub half_widths: Vec<f64>,
    pub a_factor: f64,
    pub b_factors: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ConstraintResult {
    pub index: usize,
    pub outcome: Outcome,
    /// `c_i` in original coordinates, already lowered by `epsilon`.
    pub c: Option<Polynomial>,
    /// The assembled program (scaled coordinates), when assembly succeeded.
    pub program: Option<SosProgram>,
    /// Certificate in scaled coordinates.
    pub certificate: Option<Certificate>,
    pub bound: Option<SoundnessBound>,
    /// Margin subtracted from `c_i`, in original units.
    pub epsilon: f64,
    /// Remaining slack of `a_i(x+z) >= c_i(x)` on `R x B`, in original units.
    pub sound_slack: f64,
    /// `c_i < 0` on every sampled point of the region.
    pub empty: bool,
    pub stats: SolveStats,
    pub scaling: Scaling,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct PdiffResult {
    pub nvars: usize,
    pub constraints: Vec<ConstraintResult>,
    pub warnings: Vec<SpecWarning>,
    pub wall_time_s: f64,
}

impl PdiffResult {
    /// `c_i` per constraint, `None` where the constraint failed.
    pub fn c_polys(&self) -> Vec<Option<&Polynomial>> {
        self.constraints.iter().map(|r| r.c.as_ref()).collect()
    }

    /// Every constraint has a valid certificate or a certified-infeasible program.
    pub fn all_valid(&self) -> bool {
        self.constraints
            .iter()
            .all(|r| matches!(r.outcome, Outcome::Valid | Outcome::Infeasible))
    }

    pub fn all_failed(&self) -> bool {
        self.constraints.iter().all(|r| r.outcome == Outcome::Failed)
    }

    /// Every constraint produced a `c_i`, so `C` is an inner approximation.
    pub fn sound(&self) -> bool {
        self.constraints.iter().all(|r| r.c.is_some())
    }

    /// Some `c_i` is negative on the whole region.
    pub fn empty(&self) -> bool {
        self.constraints.iter().any(|r| r.empty)
    }

    /// Largest `sound_slack` over the constraints.
    pub fn sound_slack(&self) -> f64 {
        self.constraints.iter().map(|r| r.sound_slack).fold(0.0, f64::max)
    }

    /// `min_i c_i` over the grid; constraints without a `c_i` are skipped.
    pub fn evaluate_region(&self, grid: &Grid) -> Vec<f64> {
        let polys: Vec<&Polynomial> = self.constraints.iter().filter_map(|r| r.c.as_ref()).collect();
        min_field(&polys, grid)
    }
}

/// `min_k p_k` at every grid point (`+inf` when `polys` is empty).
pub fn min_field(polys: &[&Polynomial], grid: &Grid) -> Vec<f64> {
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let x = grid.point(idx);
            polys
                .iter()
                .map(|p| p.evaluate(&x).expect("grid dimension"))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn normalized(p: &Polynomial) -> (Polynomial, f64) {
    let f = p.max_abs_coeff();
    if f > 0.0 {
        (p.scale(1.0 / f), f)
    } else {
        (p.clone(), 1.0)
    }
}

/// Grid points per axis used to decide emptiness of `c_i` on the region.
fn emptiness_resolution(n: usize) -> usize {
    match n {
        1 => 2001,
        2 => 201,
        3 => 41,
        _ => 11,
    }
}

struct Shared {
    b_scaled: SemiAlgebraicSet,
    b_factors: Vec<f64>,
    z_box: BoxRegion,
    unit: BoxRegion,
    objective: ObjectiveFunctional,
    center: Vec<f64>,
    half: Vec<f64>,
}

pub fn compute_pdiff(spec: &ProblemSpec) -> Result<PdiffResult, SpecError> {
    let start = Instant::now();
    spec.validate()?;
    let warnings = spec.warnings()?;
    let n = spec.nvars();
    let center = spec.region.center();
    let half = spec.region.half_widths();
    let zeros = vec![0.0; n];

    let mut b_factors = Vec::new();
    let mut b_polys = Vec::new();
    for bj in spec.set_b.constraints() {
        let (p, f) = normalized(&bj.affine_substitute(&zeros, &half)?);
        b_polys.push(p);
        b_factors.push(f);
    }
    let b_scaled = SemiAlgebraicSet::new(b_polys)?;
    let unit = BoxRegion::symmetric(n, 1.0)?;
    let c_monomials = monomial_basis(n, spec.deg_c);
    let objective = match spec.objective_mode {
        ObjectiveMode::BoxIntegral => objective::box_integral_weights(&unit, &c_monomials),
        ObjectiveMode::MonteCarlo => {
            let points: Vec<Vec<f64>> = objective::draw_points(&SampleRegion::Box(spec.region.clone()), spec.n_samples, spec.rng_seed)
                .into_iter()
                .map(|x| x.iter().zip(center.iter().zip(&half)).map(|(v, (c, h))| (v - c) / h).collect())
                .collect();
            objective::weights_from_points(
                &points,
                &c_monomials,
                WeightSource::MonteCarlo {
                    n_samples: spec.n_samples,
                    seed: spec.rng_seed,
                },
            )
        }
    };
    let shared = Shared {
        b_scaled,
        b_factors,
        z_box: spec.b_box.map_affine_inverse(&zeros, &half),
        unit,
        objective,
        center,
        half,
    };

    let constraints: Vec<ConstraintResult> = spec
        .set_a
        .constraints()
        .par_iter()
        .enumerate()
        .map(|(i, a)| solve_constraint(spec, &shared, i, a))
        .collect();
    Ok(PdiffResult {
        nvars: n,
        constraints,
        warnings,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn solve_constraint(spec: &ProblemSpec, sh: &Shared, index: usize, a: &Polynomial) -> ConstraintResult {
    let start = Instant::now();
    let n = a.nvars();
    let mut result = ConstraintResult {
        index,
        outcome: Outcome::Failed,
        c: None,
        program: None,
        certificate: None,
        bound: None,
        epsilon: 0.0,
        sound_slack: 0.0,
        empty: false,
        stats: SolveStats {
            status: None,
            iterations: 0,
            wall_time_s: 0.0,
            rows_before: 0,
            rows_after: 0,
            block_dims: Vec::new(),
            n_free: 0,
            p_degree: 0,
            final_gap: f64::NAN,
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
        },
        scaling: Scaling {
            center: sh.center.clone(),
            half_widths: sh.half.clone(),
            a_factor: 1.0,
            b_factors: sh.b_factors.clone(),
        },
        error: None,
    };
    let finish = |mut r: ConstraintResult, err: Option<String>| {
        r.error = err;
        r.stats.wall_time_s = start.elapsed().as_secs_f64();
        r
    };

    let a_scaled = match a.affine_substitute(&sh.center, &sh.half) {
        Ok(p) => p,
        Err(e) => return finish(result, Some(e.to_string())),
    };
    let (a_scaled, a_factor) = normalized(&a_scaled);
    result.scaling.a_factor = a_factor;

    let prog = match sosprog::assemble(&a_scaled, &sh.b_scaled, spec.deg_c, spec.deg_s, &sh.objective, spec.gram_basis) {
        Ok(p) => p,
        Err(e) => return finish(result, Some(e.to_string())),
    };
    result.stats.block_dims = prog.sdp.block_dims.clone();
    result.stats.n_free = prog.sdp.n_free;
    result.stats.p_degree = prog.p_degree;
    result.program = Some(prog.clone());

    let sol = match sdpsolve::solve(&prog.sdp, &spec.tolerances, spec.max_iters) {
        Ok(s) => s,
        Err(e) => return finish(result, Some(e.to_string())),
    };
    result.stats.status = Some(sol.status);
    result.stats.iterations = sol.iterations;
    result.stats.rows_before = sol.rows_before;
    result.stats.rows_after = sol.rows_after;
    result.stats.final_gap = sol.final_gap;
    result.stats.primal_residual = sol.primal_residual;
    result.stats.dual_residual = sol.dual_residual;
    if sol.status == SdpStatus::InfeasibleDetected {
        result.outcome = Outcome::Infeasible;
        result.c = Some(Polynomial::constant(n, -1.0));
        result.empty = true;
        return finish(result, Some("no certificate exists at this degree; C is empty".into()));
    }
    if !sol.status.has_iterate() {
        return finish(result, Some(format!("solver status {:?}", sol.status)));
    }

    let cert = match prog.certificate(&a_scaled, &sh.b_scaled, &sol, &sh.objective) {
        Ok(c) => c,
        Err(e) => return finish(result, Some(e.to_string())),
    };
    let bound = sosprog::soundness_margin(&prog, &cert, &sh.b_scaled, &sh.unit, &sh.z_box);
    let c_scaled = prog.c_polynomial(&cert.c_coeffs);
    let shrunk = sosprog::shrink_to_sound(
        &c_scaled,
        bound.epsilon,
        spec.tolerances.shrink,
        &sh.unit,
        emptiness_resolution(n),
    );

    // c(x) = a_factor * c~((x - center) / half)
    let offset: Vec<f64> = sh.center.iter().zip(&sh.half).map(|(c, h)| -c / h).collect();
    let inv: Vec<f64> = sh.half.iter().map(|h| 1.0 / h).collect();
    let c = match shrunk.c.affine_substitute(&offset, &inv) {
        Ok(p) => p.scale(a_factor),
        Err(e) => return finish(result, Some(e.to_string())),
    };
    let coeff_mass: f64 = shrunk.c.terms().map(|(_, v)| v.abs()).sum::<f64>().max(1.0);
    let rounding = ROUNDING_SLACK * a_factor * coeff_mass;
    result.epsilon = a_factor * shrunk.epsilon;
    result.sound_slack = rounding + a_factor * (bound.epsilon - shrunk.epsilon);
    result.empty = shrunk.empty;
    result.outcome = if cert.is_valid(spec.tolerances.residual_max, spec.tolerances.psd_margin) {
        Outcome::Valid
    } else {
        Outcome::Invalid
    };
    result.c = Some(c);
    result.certificate = Some(cert);
    result.bound = Some(bound);
    finish(result, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|k| format!("x{k}")).collect()
    }

    fn disk_spec(rb2: f64) -> ProblemSpec {
        let a = SemiAlgebraicSet::parse(&["4 - x1^2 - x2^2"], &names(2)).unwrap();
        let b = SemiAlgebraicSet::parse(&[format!("{rb2} - x1^2 - x2^2")], &names(2)).unwrap();
        let r = rb2.sqrt();
        ProblemSpec::new(
            a,
            b,
            BoxRegion::symmetric(2, 2.1).unwrap(),
            BoxRegion::symmetric(2, r).unwrap(),
        )
        .with_degrees(2, 2)
    }

    #[test]
    fn disk_minus_disk() {
        let res = compute_pdiff(&disk_spec(0.25)).unwrap();
        assert!(res.all_valid(), "{:?}", res.constraints[0].error);
        assert!(res.sound());
        assert!(!res.empty());
        let c = res.constraints[0].c.as_ref().unwrap();
        // zero level set near the circle of radius 1.5
        for k in 0..16 {
            let t = k as f64 * std::f64::consts::PI / 8.0;
            let inside = [1.44 * t.cos(), 1.44 * t.sin()];
            let outside = [1.51 * t.cos(), 1.51 * t.sin()];
            assert!(c.evaluate(&inside).unwrap() > 0.0, "{t}");
            assert!(c.evaluate(&outside).unwrap() < 0.0, "{t}");
        }
    }

    #[test]
    fn single_constraint_field_equals_c() {
        let res = compute_pdiff(&disk_spec(0.25)).unwrap();
        let grid = Grid::uniform(BoxRegion::symmetric(2, 3.0).unwrap(), 7);
        let field = res.evaluate_region(&grid);
        let c = res.constraints[0].c.as_ref().unwrap();
        for (idx, v) in field.iter().enumerate() {
            assert_eq!(*v, c.evaluate(&grid.point(idx)).unwrap());
        }
    }

    #[test]
    fn too_large_b_is_empty() {
        let mut spec = disk_spec(9.0);
        spec.b_box = BoxRegion::symmetric(2, 3.0).unwrap();
        let res = compute_pdiff(&spec).unwrap();
        assert!(res.constraints[0].c.is_some());
        assert!(res.empty());
    }

    #[test]
    fn constant_c_on_disk_is_infeasible_and_empty() {
        let res = compute_pdiff(&disk_spec(0.25).with_degrees(0, 2)).unwrap();
        let r = &res.constraints[0];
        assert_eq!(r.outcome, Outcome::Infeasible);
        assert!(res.all_valid() && res.sound() && res.empty());
        assert_eq!(r.c.as_ref().unwrap().evaluate(&[0.0, 0.0]).unwrap(), -1.0);
    }
}
