//! Shared fixtures for the benchmarks.

use sospdiff_core::{BoxRegion, ProblemSpec, SemiAlgebraicSet};

pub fn names(n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("x{k}")).collect()
}

/// Disk of radius 2 minus the disk of radius 0.5 with `deg_c`, `deg_s`.
pub fn disk_spec(deg_c: u32, deg_s: u32) -> ProblemSpec {
    let a = SemiAlgebraicSet::parse(&["4 - x1^2 - x2^2"], &names(2)).expect("valid expression");
    let b = SemiAlgebraicSet::parse(&["0.25 - x1^2 - x2^2"], &names(2)).expect("valid expression");
    ProblemSpec::new(
        a,
        b,
        BoxRegion::symmetric(2, 2.1).expect("valid box"),
        BoxRegion::symmetric(2, 0.5).expect("valid box"),
    )
    .with_degrees(deg_c, deg_s)
}

/// Bow-tie minus the unit disk at reduced degrees.
pub fn bowtie_spec(deg_c: u32, deg_s: u32) -> ProblemSpec {
    let a = SemiAlgebraicSet::parse(&["0.1 - x1^4 - x2^4 + 10*x1^2 - x2^2"], &names(2)).expect("valid expression");
    let b = SemiAlgebraicSet::parse(&["1 - x1^2 - x2^2"], &names(2)).expect("valid expression");
    ProblemSpec::new(
        a,
        b,
        BoxRegion::new(vec![-3.3, -2.3], vec![3.3, 2.3]).expect("valid box"),
        BoxRegion::symmetric(2, 1.0).expect("valid box"),
    )
    .with_degrees(deg_c, deg_s)
}
