use criterion::{black_box, criterion_group, criterion_main, Criterion};
use nalgebra::DMatrix;

use sospdiff_bench::{bowtie_spec, disk_spec, names};
use sospdiff_core::objective::box_integral_weights;
use sospdiff_core::polyring::monomial_basis;
use sospdiff_core::sdpsolve::{solve, ConstraintRow, PsdEntry, Sense};
use sospdiff_core::semialg::parse_polynomial;
use sospdiff_core::sosprog::assemble;
use sospdiff_core::{compute_pdiff, BoxRegion, GramBasis, SdpProblem, ToleranceSet, VariableSplit};

fn polyring(c: &mut Criterion) {
    let p = parse_polynomial(
        "-(x1^2 + x2^2 + x3^2)^3 + 3*(x1^2 + x2^2 + x3^2)^2 - 9*(x1^2 + x2^2 + 3) + 16*(x1^3 - 3*x1*x2^2 + 2*x3^2)",
        &names(3),
    )
    .unwrap();
    c.bench_function("shift_compose torus sextic", |b| {
        b.iter(|| black_box(&p).shift_compose(VariableSplit::balanced(3)).unwrap())
    });
    c.bench_function("square torus sextic", |b| b.iter(|| black_box(&p).mul(&p).unwrap()));
}

fn assembly(c: &mut Criterion) {
    let spec = bowtie_spec(10, 4);
    let a = &spec.set_a.constraints()[0];
    let w = box_integral_weights(&BoxRegion::symmetric(2, 1.0).unwrap(), &monomial_basis(2, 10));
    c.bench_function("assemble bow-tie deg 10/4", |b| {
        b.iter(|| assemble(black_box(a), &spec.set_b, 10, 4, &w, GramBasis::Reduced).unwrap())
    });
}

fn lambda_max(c: &mut Criterion) {
    let n = 30;
    let m = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
    let m = (&m + m.transpose()) * 0.5;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for r in 0..n {
        for col in r..n {
            rows.push(ConstraintRow {
                psd: vec![PsdEntry { block: 0, row: r, col, value: if r == col { 1.0 } else { 0.5 } }],
                free: if r == col { vec![(0, -1.0)] } else { vec![] },
            });
            rhs.push(-m[(r, col)]);
        }
    }
    let prob = SdpProblem {
        block_dims: vec![n],
        n_free: 1,
        rows,
        rhs,
        objective: vec![1.0],
        sense: Sense::Minimize,
    };
    let tol = ToleranceSet::default();
    c.bench_function("lambda_max 30x30", |b| b.iter(|| solve(black_box(&prob), &tol, 200).unwrap()));
}

fn end_to_end(c: &mut Criterion) {
    let mut g = c.benchmark_group("pdiff");
    g.sample_size(10);
    let disk = disk_spec(2, 2);
    g.bench_function("disk deg 2/2", |b| b.iter(|| compute_pdiff(black_box(&disk)).unwrap()));
    let disk6 = disk_spec(6, 2);
    g.bench_function("disk deg 6/2", |b| b.iter(|| compute_pdiff(black_box(&disk6)).unwrap()));
    let bow = bowtie_spec(6, 2);
    g.bench_function("bow-tie deg 6/2", |b| b.iter(|| compute_pdiff(black_box(&bow)).unwrap()));
    g.finish();
}

criterion_group!(benches, polyring, assembly, lambda_max, end_to_end);
criterion_main!(benches);
