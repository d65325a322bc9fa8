//! Result bundles: a directory holding a JSON manifest plus the artifacts it
//! lists, each with its SHA-256.
//!
//! | file               | contents                                            |
//! |--------------------|-----------------------------------------------------|
//! | `manifest.json`    | configuration echo, statuses, timings, artifacts    |
//! | `problem.toml`     | the problem file as solved (overrides applied)      |
//! | `c_polys.txt`      | the `c_i` in original coordinates                   |
//! | `certificates.json`| Gram bases and matrices, residuals, margins         |
//! | `verification.json`| the sampling report                                 |
//! | `grid.csv`         | `a`, `b`, `min_i c_i` on the export grid            |
//! | `sdp_<i>.dat-s`    | SDPA export of constraint `i` (with `--dump-sdp`)   |

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use sospdiff_core::pdiff::{ConstraintResult, Outcome, Scaling};
use sospdiff_core::polyring::{Monomial, Polynomial};
use sospdiff_core::sosprog::SoundnessBound;
use sospdiff_core::{Certificate, SdpStatus, VerificationReport};

use crate::problem::ProblemFile;

pub const MANIFEST: &str = "manifest.json";
pub const PROBLEM: &str = "problem.toml";
pub const C_POLYS: &str = "c_polys.txt";
pub const CERTIFICATES: &str = "certificates.json";
pub const VERIFICATION: &str = "verification.json";
pub const GRID: &str = "grid.csv";
const FORMAT: &str = "sospdiff-bundle";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed: {msg}")]
    Malformed { path: PathBuf, msg: String },
    #[error("{path}: hash mismatch (manifest {expected}, file {found})")]
    HashMismatch { path: PathBuf, expected: String, found: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BundleError + '_ {
    move |source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Valid,
    CertificateInvalid,
    SolverFailure,
    InputError,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Valid => 0,
            RunStatus::InputError => 1,
            RunStatus::CertificateInvalid => 2,
            RunStatus::SolverFailure => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub solve_s: f64,
    pub verify_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSummary {
    pub index: usize,
    pub outcome: Outcome,
    pub sdp_status: Option<SdpStatus>,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub rows_before: usize,
    pub rows_after: usize,
    pub block_dims: Vec<usize>,
    pub n_free: usize,
    pub p_degree: u32,
    pub final_gap: Option<f64>,
    pub primal_residual: Option<f64>,
    pub dual_residual: Option<f64>,
    pub residual_max: Option<f64>,
    pub min_eigenvalues: Vec<f64>,
    pub objective_value: Option<f64>,
    pub epsilon: f64,
    pub sound_slack: f64,
    pub empty: bool,
    pub error: Option<String>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl ConstraintSummary {
    pub fn from_result(r: &ConstraintResult) -> Self {
        let cert = r.certificate.as_ref();
        ConstraintSummary {
            index: r.index,
            outcome: r.outcome,
            sdp_status: r.stats.status,
            iterations: r.stats.iterations,
            wall_time_s: r.stats.wall_time_s,
            rows_before: r.stats.rows_before,
            rows_after: r.stats.rows_after,
            block_dims: r.stats.block_dims.clone(),
            n_free: r.stats.n_free,
            p_degree: r.stats.p_degree,
            final_gap: finite(r.stats.final_gap),
            primal_residual: finite(r.stats.primal_residual),
            dual_residual: finite(r.stats.dual_residual),
            residual_max: cert.map(|c| c.residual_max),
            min_eigenvalues: cert.map(|c| c.min_eigenvalues.clone()).unwrap_or_default(),
            objective_value: cert.map(|c| c.objective_value),
            epsilon: r.epsilon,
            sound_slack: r.sound_slack,
            empty: r.empty,
            error: r.error.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub format_version: u32,
    pub tool_version: String,
    pub status: RunStatus,
    pub exit_code: i32,
    /// Every constraint produced a `c_i`.
    pub sound: bool,
    /// `C` is empty on the region.
    pub empty: bool,
    /// Largest per-constraint slack; verification tolerates margins above `-sound_slack`.
    pub sound_slack: f64,
    pub error: Option<String>,
    pub warnings: Vec<String>,
    pub constraints: Vec<ConstraintSummary>,
    pub verification: Option<VerificationSummary>,
    pub timings: Timings,
    pub problem: Option<ProblemFile>,
    pub artifacts: Vec<Artifact>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub soundness_violations: usize,
    pub area_ratio: f64,
    pub conservatism: f64,
}

impl Manifest {
    pub fn new(status: RunStatus) -> Self {
        Manifest {
            format: FORMAT.into(),
            format_version: FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            status,
            exit_code: status.exit_code(),
            sound: false,
            empty: false,
            sound_slack: 0.0,
            error: None,
            warnings: Vec::new(),
            constraints: Vec::new(),
            verification: None,
            timings: Timings {
                solve_s: 0.0,
                verify_s: 0.0,
                total_s: 0.0,
            },
            problem: None,
            artifacts: Vec::new(),
        }
    }
}

/// Certificate of one constraint together with the bases that index it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub index: usize,
    pub scaling: Scaling,
    pub c_monomials: Vec<Monomial>,
    /// Gram basis of each block, block 0 being `P`.
    pub bases: Vec<Vec<Monomial>>,
    pub bound: Option<SoundnessBound>,
    pub certificate: Certificate,
}

impl CertificateRecord {
    pub fn from_result(r: &ConstraintResult) -> Option<Self> {
        let (cert, prog) = (r.certificate.as_ref()?, r.program.as_ref()?);
        Some(CertificateRecord {
            index: r.index,
            scaling: r.scaling.clone(),
            c_monomials: prog.c_monomials.clone(),
            bases: prog.blocks.iter().map(|b| b.basis.clone()).collect(),
            bound: r.bound,
            certificate: cert.clone(),
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes artifacts into `dir` and records their hashes.
pub struct BundleWriter {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl BundleWriter {
    pub fn create(dir: &Path) -> Result<Self, BundleError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(BundleWriter {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), BundleError> {
        let path = self.dir.join(name);
        let mut f = fs::File::create(&path).map_err(io_err(&path))?;
        f.write_all(bytes).map_err(io_err(&path))?;
        self.artifacts.retain(|a| a.path != name);
        self.artifacts.push(Artifact {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), BundleError> {
        let text = serde_json::to_string_pretty(value).expect("bundle data serializes");
        self.write(name, text.as_bytes())
    }

    /// Writes the manifest with the artifact list and re-checks every hash.
    pub fn finish(self, mut manifest: Manifest) -> Result<Manifest, BundleError> {
        manifest.artifacts = self.artifacts;
        let path = self.dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, text).map_err(io_err(&path))?;
        check_hashes(&self.dir, &manifest)?;
        Ok(manifest)
    }
}

fn check_hashes(dir: &Path, manifest: &Manifest) -> Result<(), BundleError> {
    for a in &manifest.artifacts {
        let path = dir.join(&a.path);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        let found = sha256_hex(&bytes);
        if found != a.sha256 {
            return Err(BundleError::HashMismatch {
                path,
                expected: a.sha256.clone(),
                found,
            });
        }
    }
    Ok(())
}

/// Renders the `c_i` as plain text: a header line per constraint followed by
/// one `exponents... coefficient` line per term.
pub fn format_c_polys(variables: &[String], polys: &[Option<&Polynomial>], outcomes: &[Outcome]) -> String {
    let mut out = String::new();
    out.push_str("# C = {x : min_i c_i(x) >= 0}; one term per line: exponents then coefficient\n");
    out.push_str(&format!("variables {}\n", variables.join(" ")));
    for (i, (p, o)) in polys.iter().zip(outcomes).enumerate() {
        let tag = serde_json::to_value(o).expect("outcome serializes");
        let tag = tag.as_str().unwrap_or("unknown");
        match p {
            Some(p) => {
                out.push_str(&format!("constraint {i} {tag} terms {}\n", p.n_terms()));
                for (m, c) in p.terms().rev() {
                    let exps: Vec<String> = m.exponents().iter().map(u32::to_string).collect();
                    out.push_str(&format!("{} {c:.17e}\n", exps.join(" ")));
                }
            }
            None => out.push_str(&format!("constraint {i} {tag} terms none\n")),
        }
    }
    out
}

pub fn parse_c_polys(text: &str, path: &Path) -> Result<(Vec<String>, Vec<Option<Polynomial>>), BundleError> {
    let bad = |line: usize, msg: &str| BundleError::Malformed {
        path: path.to_path_buf(),
        msg: format!("line {}: {msg}", line + 1),
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let (ln, header) = lines.next().ok_or_else(|| bad(0, "empty file"))?;
    let mut head = header.split_whitespace();
    if head.next() != Some("variables") {
        return Err(bad(ln, "expected `variables`"));
    }
    let variables: Vec<String> = head.map(str::to_string).collect();
    let n = variables.len();
    let mut polys = Vec::new();
    while let Some((ln, line)) = lines.next() {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 5 || f[0] != "constraint" || f[3] != "terms" {
            return Err(bad(ln, "expected `constraint <i> <outcome> terms <count>`"));
        }
        if f[1].parse::<usize>().ok() != Some(polys.len()) {
            return Err(bad(ln, "constraint index out of sequence"));
        }
        if f[4] == "none" {
            polys.push(None);
            continue;
        }
        let count: usize = f[4].parse().map_err(|_| bad(ln, "bad term count"))?;
        let mut terms = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, line) = lines.next().ok_or_else(|| bad(ln, "missing terms"))?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != n + 1 {
                return Err(bad(ln, "wrong number of fields"));
            }
            let exps = f[..n]
                .iter()
                .map(|e| e.parse::<u32>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad(ln, "bad exponent"))?;
            let c: f64 = f[n].parse().map_err(|_| bad(ln, "bad coefficient"))?;
            if !c.is_finite() {
                return Err(bad(ln, "non-finite coefficient"));
            }
            terms.push((Monomial::new(exps), c));
        }
        polys.push(Some(Polynomial::from_terms(n, terms).expect("arity checked")));
    }
    Ok((variables, polys))
}

/// A bundle read back from disk after its hashes were checked.
pub struct LoadedBundle {
    pub manifest: Manifest,
    pub problem: ProblemFile,
    pub c_polys: Vec<Option<Polynomial>>,
}

pub fn load(dir: &Path) -> Result<LoadedBundle, BundleError> {
    let mpath = dir.join(MANIFEST);
    let text = fs::read_to_string(&mpath).map_err(io_err(&mpath))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| BundleError::Malformed {
        path: mpath.clone(),
        msg: e.to_string(),
    })?;
    check_hashes(dir, &manifest)?;
    let problem = manifest.problem.clone().ok_or_else(|| BundleError::Malformed {
        path: mpath.clone(),
        msg: "no problem recorded (the solve stopped at input validation)".into(),
    })?;
    if !manifest.artifacts.iter().any(|a| a.path == C_POLYS) {
        return Err(BundleError::Malformed {
            path: mpath,
            msg: format!("{C_POLYS} is not listed"),
        });
    }
    let cpath = dir.join(C_POLYS);
    let text = fs::read_to_string(&cpath).map_err(io_err(&cpath))?;
    let (vars, c_polys) = parse_c_polys(&text, &cpath)?;
    if vars != problem.variables {
        return Err(BundleError::Malformed {
            path: cpath,
            msg: "variables differ from the problem".into(),
        });
    }
    Ok(LoadedBundle {
        manifest,
        problem,
        c_polys,
    })
}

/// Summary kept in the manifest for quick inspection.
pub fn verification_summary(r: &VerificationReport) -> VerificationSummary {
    VerificationSummary {
        soundness_violations: r.soundness_violations,
        area_ratio: r.area_ratio,
        conservatism: r.conservatism,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_polys_round_trip() {
        let vars = vec!["x1".to_string(), "x2".to_string()];
        let p = sospdiff_core::semialg::parse_polynomial("2.25 - x1^2 - 0.1*x1*x2 + 1e-9*x2^7", &vars).unwrap();
        let text = format_c_polys(&vars, &[Some(&p), None], &[Outcome::Valid, Outcome::Failed]);
        let (v, polys) = parse_c_polys(&text, Path::new("c")).unwrap();
        assert_eq!(v, vars);
        assert_eq!(polys[0].as_ref(), Some(&p));
        assert!(polys[1].is_none());
    }

    #[test]
    fn c_polys_rejects_garbage() {
        assert!(parse_c_polys("variables x1\nconstraint 0 valid terms 2\n0 1.0\n", Path::new("c")).is_err());
        assert!(parse_c_polys("variables x1\nconstraint 0 valid terms 1\nx 1.0\n", Path::new("c")).is_err());
    }
}
