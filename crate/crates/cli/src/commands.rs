//! `solve`, `verify` and `grid`, each returning the process exit code.

use std::path::{Path, PathBuf};
use std::time::Instant;

use sospdiff_core::pdiff::Outcome;
use sospdiff_core::sdpsolve::write_sdpa;
use sospdiff_core::{compute_pdiff, verify_result, Grid, ObjectiveMode, Polynomial, VerificationReport};

use crate::bundle::{self, BundleWriter, CertificateRecord, ConstraintSummary, Manifest, RunStatus};
use crate::gridfile;
use crate::problem::{ProblemError, ProblemFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_FAILED: i32 = 3;
/// `verify` found grid points of `C` outside the difference.
pub const EXIT_VIOLATIONS: i32 = 2;

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub problem: PathBuf,
    pub out: PathBuf,
    pub long_running: bool,
    pub seed: Option<u64>,
    pub grid_res: Option<usize>,
    pub objective: Option<ObjectiveMode>,
    pub dump_sdp: bool,
}

fn load_problem(opts: &SolveOptions) -> Result<ProblemFile, String> {
    let mut file = ProblemFile::load(&opts.problem).map_err(|e| format!("{}: {e}", opts.problem.display()))?;
    if let Some(seed) = opts.seed {
        file.objective.seed = seed;
    }
    if let Some(res) = opts.grid_res {
        if res == 0 {
            return Err("--grid-res must be positive".into());
        }
        file.grid.resolution = res;
    }
    if let Some(mode) = opts.objective {
        file.objective.mode = mode;
    }
    if file.long_running && !opts.long_running {
        return Err(format!(
            "{}: problem is marked long_running; pass --long-running to solve it",
            opts.problem.display()
        ));
    }
    Ok(file)
}

/// Records an input error in the bundle (when possible) and returns exit 1.
fn input_error(out: &Path, msg: String) -> i32 {
    eprintln!("error: {msg}");
    let mut manifest = Manifest::new(RunStatus::InputError);
    manifest.error = Some(msg);
    if let Ok(w) = BundleWriter::create(out) {
        if let Err(e) = w.finish(manifest) {
            eprintln!("error: {e}");
        }
    }
    EXIT_INPUT
}

fn verify_bundle_polys(
    file: &ProblemFile,
    c_polys: &[&Polynomial],
    sound_slack: f64,
    res: usize,
    n_z: usize,
    seed: u64,
) -> Result<VerificationReport, ProblemError> {
    let spec = file.to_spec()?;
    let grid = Grid::uniform(spec.region.clone(), res);
    Ok(verify_result(c_polys, sound_slack, &spec.set_a, &spec.set_b, &spec.b_box, &grid, n_z, seed))
}

pub fn solve(opts: &SolveOptions) -> i32 {
    let t0 = Instant::now();
    let file = match load_problem(opts) {
        Ok(f) => f,
        Err(msg) => return input_error(&opts.out, msg),
    };
    let spec = match file.to_spec() {
        Ok(s) => s,
        Err(e) => return input_error(&opts.out, e.to_string()),
    };
    let result = match compute_pdiff(&spec) {
        Ok(r) => r,
        Err(e) => return input_error(&opts.out, e.to_string()),
    };
    let solve_s = t0.elapsed().as_secs_f64();
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }

    let status = if result.all_valid() {
        RunStatus::Valid
    } else if result.constraints.iter().any(|r| r.outcome == Outcome::Failed) {
        RunStatus::SolverFailure
    } else {
        RunStatus::CertificateInvalid
    };
    let mut manifest = Manifest::new(status);
    manifest.sound = result.sound();
    manifest.empty = result.empty();
    manifest.sound_slack = result.sound_slack();
    manifest.warnings = result.warnings.iter().map(ToString::to_string).collect();
    manifest.constraints = result.constraints.iter().map(ConstraintSummary::from_result).collect();
    manifest.problem = Some(file.clone());

    let written = (|| -> Result<(), String> {
        let mut w = BundleWriter::create(&opts.out).map_err(|e| e.to_string())?;
        w.write(bundle::PROBLEM, file.to_toml().as_bytes()).map_err(|e| e.to_string())?;
        let outcomes: Vec<Outcome> = result.constraints.iter().map(|r| r.outcome).collect();
        let text = bundle::format_c_polys(&file.variables, &result.c_polys(), &outcomes);
        w.write(bundle::C_POLYS, text.as_bytes()).map_err(|e| e.to_string())?;
        let certs: Vec<CertificateRecord> = result.constraints.iter().filter_map(CertificateRecord::from_result).collect();
        w.write_json(bundle::CERTIFICATES, &certs).map_err(|e| e.to_string())?;
        if opts.dump_sdp {
            for r in &result.constraints {
                if let Some(prog) = &r.program {
                    let mut buf = Vec::new();
                    write_sdpa(&prog.sdp, &mut buf).map_err(|e| e.to_string())?;
                    w.write(&format!("sdp_{}.dat-s", r.index), &buf).map_err(|e| e.to_string())?;
                }
            }
        }

        let t1 = Instant::now();
        let polys: Vec<&Polynomial> = result.c_polys().into_iter().flatten().collect();
        let report = verify_bundle_polys(
            &file,
            &polys,
            manifest.sound_slack,
            file.grid_resolution(),
            file.n_z(),
            file.objective.seed,
        )
        .map_err(|e| e.to_string())?;
        w.write_json(bundle::VERIFICATION, &report).map_err(|e| e.to_string())?;
        manifest.verification = Some(bundle::verification_summary(&report));
        let grid = gridfile::render(&spec.set_a, &spec.set_b, &polys, &spec.region, &spec.b_box, file.grid_resolution());
        w.write(bundle::GRID, grid.as_bytes()).map_err(|e| e.to_string())?;
        manifest.timings.verify_s = t1.elapsed().as_secs_f64();
        manifest.timings.solve_s = solve_s;
        manifest.timings.total_s = t0.elapsed().as_secs_f64();
        manifest = w.finish(manifest.clone()).map_err(|e| e.to_string())?;
        Ok(())
    })();
    if let Err(msg) = written {
        eprintln!("error: writing bundle {}: {msg}", opts.out.display());
        return EXIT_INPUT;
    }

    for c in &manifest.constraints {
        let outcome = serde_json::to_value(c.outcome).expect("outcome serializes");
        println!(
            "constraint {}: {} ({} iterations, {:.2} s, rows {}/{}, residual {})",
            c.index,
            outcome.as_str().unwrap_or("?"),
            c.iterations,
            c.wall_time_s,
            c.rows_after,
            c.rows_before,
            c.residual_max.map_or("n/a".into(), |r| format!("{r:.1e}")),
        );
        if let Some(e) = &c.error {
            println!("  {e}");
        }
    }
    if let Some(v) = &manifest.verification {
        println!(
            "verification: {} violations, area ratio {:.4}, conservatism {:.4}",
            v.soundness_violations, v.area_ratio, v.conservatism
        );
    }
    if manifest.empty {
        println!("C is empty on the region");
    }
    println!("status: {:?}; bundle written to {}", manifest.status, opts.out.display());
    manifest.exit_code
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub bundle: PathBuf,
    pub grid_res: Option<usize>,
    pub n_z: Option<usize>,
    pub seed: Option<u64>,
}

pub fn verify(opts: &VerifyOptions) -> i32 {
    let loaded = match bundle::load(&opts.bundle) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let file = &loaded.problem;
    if loaded.c_polys.iter().any(Option::is_none) {
        eprintln!("warning: some constraints have no c_i; C is not an inner approximation");
    }
    let polys: Vec<&Polynomial> = loaded.c_polys.iter().flatten().collect();
    let res = opts.grid_res.unwrap_or_else(|| file.grid_resolution()).max(1);
    let n_z = opts.n_z.unwrap_or_else(|| file.n_z());
    let seed = opts.seed.unwrap_or(file.objective.seed);
    let report = match verify_bundle_polys(file, &polys, loaded.manifest.sound_slack, res, n_z, seed) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    if report.soundness_violations > 0 {
        eprintln!(
            "{} grid points of C violate x + z in A (worst margin {:e} at {:?})",
            report.soundness_violations, report.worst_margin, report.worst_point
        );
        EXIT_VIOLATIONS
    } else {
        EXIT_OK
    }
}

#[derive(Debug, Clone)]
pub struct GridOptions {
    pub bundle: PathBuf,
    pub res: usize,
    pub out: PathBuf,
}

pub fn grid(opts: &GridOptions) -> i32 {
    if opts.res == 0 {
        eprintln!("error: --res must be positive");
        return EXIT_INPUT;
    }
    let loaded = match bundle::load(&opts.bundle) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let spec = match loaded.problem.to_spec() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let polys: Vec<&Polynomial> = loaded.c_polys.iter().flatten().collect();
    let text = gridfile::render(&spec.set_a, &spec.set_b, &polys, &spec.region, &spec.b_box, opts.res);
    if let Err(e) = gridfile::write(&opts.out, &text) {
        eprintln!("error: {}: {e}", opts.out.display());
        return EXIT_INPUT;
    }
    EXIT_OK
}
