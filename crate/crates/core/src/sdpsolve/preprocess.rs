//! Removal of linearly dependent equality rows.
//!
//! Rows that own a column no other remaining row touches are independent of
//! the rest and are peeled off first; for SOS problems this settles nearly
//! every row, since each Gram entry belongs to exactly one monomial. The rows
//! left over go through modified Gram-Schmidt, where a row whose residual
//! norm falls below `1e-10 * ||row||` is dropped.

use std::collections::HashMap;

use super::SdpProblem;

/// Relative residual below which a row counts as dependent.
pub const RANK_THRESHOLD: f64 = 1e-10;
/// Relative right-hand-side mismatch above which a dependent row is inconsistent.
const CONSISTENCY_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessRecord {
    pub rows_before: usize,
    /// Original indices of the rows kept, in order.
    pub kept_rows: Vec<usize>,
    pub removed_rows: Vec<usize>,
    /// A dependent row disagrees with its combination's right-hand side.
    pub inconsistent: bool,
}

impl PreprocessRecord {
    /// Maps multipliers of the reduced problem back to the original rows.
    pub fn expand_duals(&self, reduced: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows_before];
        for (&orig, &y) in self.kept_rows.iter().zip(reduced) {
            out[orig] = y;
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Column {
    Psd(usize, usize, usize),
    Free(usize),
}

fn row_columns(prob: &SdpProblem, i: usize) -> Vec<(Column, f64)> {
    let row = &prob.rows[i];
    let mut cols: Vec<(Column, f64)> = row
        .psd
        .iter()
        .filter(|e| e.value != 0.0)
        .map(|e| {
            // Off-diagonal entries enter <A, X> twice.
            let w = if e.row == e.col { e.value } else { 2.0 * e.value };
            (Column::Psd(e.block, e.row, e.col), w)
        })
        .chain(row.free.iter().filter(|t| t.1 != 0.0).map(|&(j, v)| (Column::Free(j), v)))
        .collect();
    cols.sort_by_key(|c| c.0);
    // merge repeated columns
    let mut merged: Vec<(Column, f64)> = Vec::with_capacity(cols.len());
    for (c, v) in cols {
        match merged.last_mut() {
            Some(last) if last.0 == c => last.1 += v,
            _ => merged.push((c, v)),
        }
    }
    merged.retain(|t| t.1 != 0.0);
    merged
}

pub fn preprocess(prob: &SdpProblem) -> (SdpProblem, PreprocessRecord) {
    let m = prob.rows.len();
    let cols: Vec<Vec<(Column, f64)>> = (0..m).map(|i| row_columns(prob, i)).collect();

    let mut count: HashMap<Column, usize> = HashMap::new();
    for row in &cols {
        for (c, _) in row {
            *count.entry(*c).or_insert(0) += 1;
        }
    }
    let mut settled = vec![false; m];
    loop {
        let mut changed = false;
        for i in 0..m {
            if settled[i] {
                continue;
            }
            if cols[i].iter().any(|(c, _)| count[c] == 1) {
                settled[i] = true;
                changed = true;
                for (c, _) in &cols[i] {
                    *count.get_mut(c).expect("counted") -= 1;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut keep = settled.clone();
    let mut inconsistent = false;
    let rest: Vec<usize> = (0..m).filter(|&i| !settled[i]).collect();
    if !rest.is_empty() {
        let mut index: HashMap<Column, usize> = HashMap::new();
        for &i in &rest {
            for (c, _) in &cols[i] {
                let next = index.len();
                index.entry(*c).or_insert(next);
            }
        }
        let width = index.len();
        // Orthonormal basis of kept rows with the same combination applied to b.
        let mut basis: Vec<(Vec<f64>, f64)> = Vec::new();
        for &i in &rest {
            let mut v = vec![0.0; width];
            for (c, w) in &cols[i] {
                v[index[c]] = *w;
            }
            let norm0 = v.iter().map(|t| t * t).sum::<f64>().sqrt();
            let mut beta = prob.rhs[i];
            // Two passes of MGS for stability.
            for _ in 0..2 {
                for (q, qb) in &basis {
                    let proj: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                    for (t, qv) in v.iter_mut().zip(q) {
                        *t -= proj * qv;
                    }
                    beta -= proj * qb;
                }
            }
            let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
            if norm0 == 0.0 || norm <= RANK_THRESHOLD * norm0 {
                if beta.abs() > CONSISTENCY_THRESHOLD * (1.0 + prob.rhs[i].abs()) {
                    inconsistent = true;
                }
                continue;
            }
            keep[i] = true;
            for t in v.iter_mut() {
                *t /= norm;
            }
            basis.push((v, beta / norm));
        }
    }

    let kept_rows: Vec<usize> = (0..m).filter(|&i| keep[i]).collect();
    let removed_rows: Vec<usize> = (0..m).filter(|&i| !keep[i]).collect();
    let reduced = SdpProblem {
        block_dims: prob.block_dims.clone(),
        n_free: prob.n_free,
        rows: kept_rows.iter().map(|&i| prob.rows[i].clone()).collect(),
        rhs: kept_rows.iter().map(|&i| prob.rhs[i]).collect(),
        objective: prob.objective.clone(),
        sense: prob.sense,
    };
    let record = PreprocessRecord {
        rows_before: m,
        kept_rows,
        removed_rows,
        inconsistent,
    };
    (reduced, record)
}
