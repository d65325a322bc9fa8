//! Export in the SDPA sparse text format (`.dat-s`).
//!
//! SDPA's dual form is `max F0 . Y  s.t.  Fi . Y = ci, Y PSD`. The PSD blocks
//! of our problem become the leading blocks of `Y`; the free variables are
//! split as `u = u+ - u-` into one trailing diagonal (LP) block of size
//! `2 * n_free`. For a minimisation the objective is negated.

use std::io::{self, Write};

use super::{SdpProblem, Sense};

pub fn write_sdpa<W: Write>(prob: &SdpProblem, out: &mut W) -> io::Result<()> {
    let nf = prob.n_free;
    let sign = match prob.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let n_blocks = prob.block_dims.len() + usize::from(nf > 0);
    let lp_block = prob.block_dims.len() + 1;

    writeln!(out, "\"sospdiff export, sense {:?}, {} free variables\"", prob.sense, nf)?;
    writeln!(out, "{}", prob.rows.len())?;
    writeln!(out, "{n_blocks}")?;
    let mut sizes: Vec<String> = prob.block_dims.iter().map(|d| d.to_string()).collect();
    if nf > 0 {
        sizes.push(format!("-{}", 2 * nf));
    }
    writeln!(out, "{}", sizes.join(" "))?;
    let rhs: Vec<String> = prob.rhs.iter().map(|v| format!("{v:.17e}")).collect();
    writeln!(out, "{}", rhs.join(" "))?;

    for (j, &w) in prob.objective.iter().enumerate() {
        if w != 0.0 {
            writeln!(out, "0 {lp_block} {} {} {:.17e}", j + 1, j + 1, sign * w)?;
            writeln!(out, "0 {lp_block} {} {} {:.17e}", nf + j + 1, nf + j + 1, -sign * w)?;
        }
    }
    for (i, row) in prob.rows.iter().enumerate() {
        for e in &row.psd {
            if e.value != 0.0 {
                writeln!(out, "{} {} {} {} {:.17e}", i + 1, e.block + 1, e.row + 1, e.col + 1, e.value)?;
            }
        }
        for &(j, v) in &row.free {
            if v != 0.0 {
                writeln!(out, "{} {lp_block} {} {} {:.17e}", i + 1, j + 1, j + 1, v)?;
                writeln!(out, "{} {lp_block} {} {} {:.17e}", i + 1, nf + j + 1, nf + j + 1, -v)?;
            }
        }
    }
    Ok(())
}
