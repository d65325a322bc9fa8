//! Sampling-based checks of a computed `C`, independent of the SOS solve.
//!
//! Only the `c_i` polynomials and a slack value are read; certificates and
//! solver data are not. For each grid point `x` of the region, `z` samples
//! drawn from `B` test `x + z ∈ A`. This is evidence, not proof: finitely
//! many `z` give an outer approximation of true `A ⊖ B` membership.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::Grid;
use crate::polyring::Polynomial;
use crate::sampling;
use crate::semialg::{BoxRegion, SemiAlgebraicSet};

/// A polynomial with exponents unpacked for repeated evaluation.
struct Compiled {
    coeffs: Vec<f64>,
    exps: Vec<Vec<u32>>,
    max_exp: Vec<u32>,
}

impl Compiled {
    fn new(p: &Polynomial) -> Self {
        let exps: Vec<Vec<u32>> = p.terms().map(|(m, _)| m.exponents().to_vec()).collect();
        let max_exp = (0..p.nvars())
            .map(|k| exps.iter().map(|e| e[k]).max().unwrap_or(0))
            .collect();
        Compiled {
            coeffs: p.terms().map(|(_, c)| c).collect(),
            exps,
            max_exp,
        }
    }

    fn eval(&self, x: &[f64], table: &mut Vec<Vec<f64>>) -> f64 {
        table.resize(x.len(), Vec::new());
        for (k, row) in table.iter_mut().enumerate() {
            row.clear();
            row.push(1.0);
            for e in 1..=self.max_exp[k] as usize {
                let prev = row[e - 1];
                row.push(prev * x[k]);
            }
        }
        self.coeffs
            .iter()
            .zip(&self.exps)
            .map(|(c, e)| c * e.iter().enumerate().map(|(k, &p)| table[k][p as usize]).product::<f64>())
            .sum()
    }
}

/// Minimum over the constraints of `a` at `x + z` for each sampled `z`,
/// stopping early once a value below `stop_below` appears.
fn min_shifted(a: &[Compiled], x: &[f64], zs: &[Vec<f64>], stop_below: f64, table: &mut Vec<Vec<f64>>) -> f64 {
    let mut y = vec![0.0; x.len()];
    let mut worst = f64::INFINITY;
    for z in zs {
        for k in 0..x.len() {
            y[k] = x[k] + z[k];
        }
        for p in a {
            worst = worst.min(p.eval(&y, table));
        }
        if worst < stop_below {
            break;
        }
    }
    worst
}

/// `x ∈ A` and `x + z ∈ A` for every sampled `z`.
pub fn brute_force_pdiff_membership(a: &SemiAlgebraicSet, x: &[f64], z_samples: &[Vec<f64>]) -> bool {
    let compiled: Vec<Compiled> = a.constraints().iter().map(Compiled::new).collect();
    let mut table = Vec::new();
    let zero = vec![vec![0.0; x.len()]];
    min_shifted(&compiled, x, &zero, 0.0, &mut table) >= 0.0 && min_shifted(&compiled, x, z_samples, 0.0, &mut table) >= 0.0
}

/// `n` points of `B` drawn uniformly from its bounding box by rejection.
/// Returns fewer points if `B` occupies a negligible part of the box.
pub fn sample_b(b: &SemiAlgebraicSet, b_box: &BoxRegion, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = sampling::rng(seed, sampling::stream::Z_SAMPLES);
    let mut out = Vec::with_capacity(n);
    let mut tries = 0usize;
    while out.len() < n && tries < 1000 * n.max(1000) {
        tries += 1;
        let z = sampling::uniform_in_box(&mut rng, b_box);
        if b.contains(&z, 0.0).unwrap_or(false) {
            out.push(z);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub resolution: Vec<usize>,
    pub n_grid: usize,
    pub n_z_samples: usize,
    pub seed: u64,
    pub sound_slack: f64,
    /// Grid points of `C` with some `a_i(x + z) < -sound_slack`.
    pub soundness_violations: usize,
    /// Smallest `min_i a_i(x + z)` seen over points of `C` (`+inf` if `C` is empty).
    pub worst_margin: f64,
    pub worst_point: Option<Vec<f64>>,
    /// Grid points with `min_i c_i >= 0`.
    pub n_in_c: usize,
    /// Grid points passing the brute-force test.
    pub n_in_bruteforce: usize,
    pub n_in_both: usize,
    /// Fraction of brute-force points missing from `C`.
    pub conservatism: f64,
    /// `|C| / |brute force|` by grid counts.
    pub area_ratio: f64,
    /// Area (volume) estimates from the grid counts.
    pub c_area: f64,
    pub bruteforce_area: f64,
}

/// Checks `C = {x : min_i c_i(x) >= 0}` against `A` and `B` on `grid`.
#[allow(clippy::too_many_arguments)]
pub fn verify_result(
    c_polys: &[&Polynomial],
    sound_slack: f64,
    a: &SemiAlgebraicSet,
    b: &SemiAlgebraicSet,
    b_box: &BoxRegion,
    grid: &Grid,
    n_z: usize,
    seed: u64,
) -> VerificationReport {
    let zs = sample_b(b, b_box, n_z, seed);
    let a_c: Vec<Compiled> = a.constraints().iter().map(Compiled::new).collect();
    let c_c: Vec<Compiled> = c_polys.iter().map(|p| Compiled::new(p)).collect();
    let zero = vec![vec![0.0; grid.dim()]];

    // (in C, in brute force, margin over z for points of C)
    let per_point: Vec<(bool, bool, f64)> = (0..grid.len())
        .into_par_iter()
        .map_init(Vec::new, |table, idx| {
            let x = grid.point(idx);
            let in_c = !c_c.is_empty() && c_c.iter().all(|p| p.eval(&x, table) >= 0.0);
            let in_a = min_shifted(&a_c, &x, &zero, 0.0, table) >= 0.0;
            if in_c {
                let m = min_shifted(&a_c, &x, &zs, f64::NEG_INFINITY, table);
                (true, in_a && m >= 0.0, m)
            } else {
                let bf = in_a && min_shifted(&a_c, &x, &zs, 0.0, table) >= 0.0;
                (false, bf, f64::INFINITY)
            }
        })
        .collect();

    let mut report = VerificationReport {
        resolution: grid.resolution.clone(),
        n_grid: grid.len(),
        n_z_samples: zs.len(),
        seed,
        sound_slack,
        soundness_violations: 0,
        worst_margin: f64::INFINITY,
        worst_point: None,
        n_in_c: 0,
        n_in_bruteforce: 0,
        n_in_both: 0,
        conservatism: 0.0,
        area_ratio: 0.0,
        c_area: 0.0,
        bruteforce_area: 0.0,
    };
    for (idx, &(in_c, in_bf, margin)) in per_point.iter().enumerate() {
        report.n_in_c += usize::from(in_c);
        report.n_in_bruteforce += usize::from(in_bf);
        report.n_in_both += usize::from(in_c && in_bf);
        if in_c {
            if margin < -sound_slack {
                report.soundness_violations += 1;
            }
            if margin < report.worst_margin {
                report.worst_margin = margin;
                report.worst_point = Some(grid.point(idx));
            }
        }
    }
    let cell = grid.cell_volume();
    report.c_area = report.n_in_c as f64 * cell;
    report.bruteforce_area = report.n_in_bruteforce as f64 * cell;
    if report.n_in_bruteforce > 0 {
        let nb = report.n_in_bruteforce as f64;
        report.conservatism = (report.n_in_bruteforce - report.n_in_both) as f64 / nb;
        report.area_ratio = report.n_in_c as f64 / nb;
    }
    report
}
