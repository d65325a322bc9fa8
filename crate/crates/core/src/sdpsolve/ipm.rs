//! Infeasible-start primal-dual path following with Nesterov-Todd scaling
//! and Mehrotra predictor-corrector steps.
//!
//! Internally the problem is `min f^T u` with `C = 0`; its dual is
//!
//! ```text
//!   max b^T y   s.t.  A^T y + Z = 0,  F^T y = f,  Z PSD.
//! ```
//!
//! The Newton system is reduced to the Schur complement
//! `M_ij = <A_i, W A_j W>` plus the free-variable columns `F`, solved as a
//! saddle-point system after adding `delta * F F^T` to `M`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{SdpProblem, SdpSolution, SdpStatus, Sense, SolverOptions};

/// Entries of one row restricted to one block. `w` holds the weight with
/// which `X[r, c]` enters `<A_i, X>` (the value, doubled off the diagonal).
struct RowBlock {
    row: usize,
    r: Vec<usize>,
    c: Vec<usize>,
    v: Vec<f64>,
    w: Vec<f64>,
}

struct Model {
    m: usize,
    dims: Vec<usize>,
    blocks: Vec<Vec<RowBlock>>,
    /// Dense `m x n_free` free-variable matrix.
    fmat: DMatrix<f64>,
    b: DVector<f64>,
    /// Minimisation-form objective.
    f: DVector<f64>,
    sign: f64,
}

impl Model {
    fn new(prob: &SdpProblem) -> Model {
        let m = prob.rows.len();
        let nb = prob.block_dims.len();
        let mut blocks: Vec<Vec<RowBlock>> = (0..nb).map(|_| Vec::new()).collect();
        for (i, row) in prob.rows.iter().enumerate() {
            for (k, list) in blocks.iter_mut().enumerate() {
                let mut rb = RowBlock {
                    row: i,
                    r: Vec::new(),
                    c: Vec::new(),
                    v: Vec::new(),
                    w: Vec::new(),
                };
                for e in row.psd.iter().filter(|e| e.block == k && e.value != 0.0) {
                    rb.r.push(e.row);
                    rb.c.push(e.col);
                    rb.v.push(e.value);
                    rb.w.push(if e.row == e.col { e.value } else { 2.0 * e.value });
                }
                if !rb.r.is_empty() {
                    list.push(rb);
                }
            }
        }
        let mut fmat = DMatrix::zeros(m, prob.n_free);
        for (i, row) in prob.rows.iter().enumerate() {
            for &(j, v) in &row.free {
                fmat[(i, j)] += v;
            }
        }
        let sign = match prob.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        Model {
            m,
            dims: prob.block_dims.clone(),
            blocks,
            fmat,
            b: DVector::from_column_slice(&prob.rhs),
            f: DVector::from_iterator(prob.n_free, prob.objective.iter().map(|v| sign * v)),
            sign,
        }
    }

    fn n_free(&self) -> usize {
        self.fmat.ncols()
    }

    /// `<A_i, X>` summed over blocks.
    fn apply_a(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (k, rows) in self.blocks.iter().enumerate() {
            let xk = &x[k];
            for rb in rows {
                let mut s = 0.0;
                for t in 0..rb.r.len() {
                    s += rb.w[t] * xk[(rb.r[t], rb.c[t])];
                }
                out[rb.row] += s;
            }
        }
        out
    }

    /// `sum_i y_i A_i` per block.
    fn apply_at(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        self.blocks
            .iter()
            .zip(&self.dims)
            .map(|(rows, &n)| {
                let mut out = DMatrix::zeros(n, n);
                for rb in rows {
                    let yi = y[rb.row];
                    for t in 0..rb.r.len() {
                        let (r, c) = (rb.r[t], rb.c[t]);
                        out[(r, c)] += rb.v[t] * yi;
                        if r != c {
                            out[(c, r)] += rb.v[t] * yi;
                        }
                    }
                }
                out
            })
            .collect()
    }

    /// `M_ij = sum_k <A_i^k, W_k A_j^k W_k>`.
    fn schur(&self, w: &[DMatrix<f64>]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.m, self.m);
        for (k, rows) in self.blocks.iter().enumerate() {
            let n = self.dims[k];
            let ws = w[k].as_slice();
            let partial: Vec<Vec<f64>> = (0..rows.len())
                .into_par_iter()
                .map(|a| {
                    let ra = &rows[a];
                    rows[a..]
                        .iter()
                        .map(|rb| {
                            let mut s = 0.0;
                            for e in 0..ra.r.len() {
                                let wr = &ws[ra.r[e] * n..ra.r[e] * n + n];
                                let wc = &ws[ra.c[e] * n..ra.c[e] * n + n];
                                let mut t = 0.0;
                                for f in 0..rb.r.len() {
                                    let (p, q) = (rb.r[f], rb.c[f]);
                                    t += rb.w[f] * (wr[p] * wc[q] + wr[q] * wc[p]);
                                }
                                s += ra.w[e] * t;
                            }
                            0.5 * s
                        })
                        .collect()
                })
                .collect();
            for (a, vals) in partial.iter().enumerate() {
                let i = rows[a].row;
                for (off, &v) in vals.iter().enumerate() {
                    let j = rows[a + off].row;
                    out[(i, j)] += v;
                    if i != j {
                        out[(j, i)] += v;
                    }
                }
            }
        }
        out
    }
}

fn frob(ms: &[DMatrix<f64>]) -> f64 {
    ms.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn lower_cholesky(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.clone().cholesky().map(|c| c.l())
}

/// Cholesky with a few escalating diagonal shifts before giving up.
fn robust_cholesky(m: &DMatrix<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    if let Some(c) = m.clone().cholesky() {
        return Some(c);
    }
    let scale = m.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    for eps in [1e-14, 1e-12, 1e-10] {
        let mut shifted = m.clone();
        for i in 0..m.nrows() {
            shifted[(i, i)] += eps * scale;
        }
        if let Some(c) = shifted.cholesky() {
            return Some(c);
        }
    }
    None
}

/// Largest `alpha` with `L L^T + alpha * dx` PSD, given `L^{-1}`.
fn max_step(linv: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let mut s = linv * dx * linv.transpose();
    symmetrize(&mut s);
    let lmin = s.symmetric_eigenvalues().min();
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

struct Scaling {
    g: DMatrix<f64>,
    ginv: DMatrix<f64>,
    w: DMatrix<f64>,
    d: DVector<f64>,
    linv_x: DMatrix<f64>,
    linv_z: DMatrix<f64>,
}

/// Nesterov-Todd scaling: `G^T Z G = G^{-1} X G^{-T} = diag(d)`, `W = G G^T`.
fn nt_scaling(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<Scaling> {
    let l = lower_cholesky(x)?;
    let r = lower_cholesky(z)?;
    let n = x.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let linv_x = l.clone().solve_lower_triangular(&id)?;
    let linv_z = r.clone().solve_lower_triangular(&id)?;
    let svd = (r.transpose() * &l).svd(true, true);
    let vt = svd.v_t?;
    let d = svd.singular_values;
    if d.iter().any(|&s| s <= 0.0 || !s.is_finite()) {
        return None;
    }
    let isqrt = DVector::from_iterator(n, d.iter().map(|s| 1.0 / s.sqrt()));
    let sqrt = DVector::from_iterator(n, d.iter().map(|s| s.sqrt()));
    let mut g = &l * vt.transpose();
    for (j, mut col) in g.column_iter_mut().enumerate() {
        col *= isqrt[j];
    }
    let mut ginv = vt * &linv_x;
    for (i, mut row) in ginv.row_iter_mut().enumerate() {
        row *= sqrt[i];
    }
    let mut w = &g * g.transpose();
    symmetrize(&mut w);
    Some(Scaling {
        g,
        ginv,
        w,
        d,
        linv_x,
        linv_z,
    })
}

/// Factorisation of the reduced Newton system for one iteration.
struct NewtonSystem {
    mhat: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    delta: f64,
    /// `Mhat^{-1} F` and the Cholesky factor of `F^T Mhat^{-1} F`.
    y_f: DMatrix<f64>,
    k: Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
}

impl NewtonSystem {
    fn build(model: &Model, w: &[DMatrix<f64>]) -> Option<NewtonSystem> {
        let mut m = model.schur(w);
        let nf = model.n_free();
        let mean_diag = if model.m > 0 {
            m.trace() / model.m as f64
        } else {
            1.0
        };
        let delta = if mean_diag > 0.0 { mean_diag } else { 1.0 };
        if nf > 0 {
            m += (&model.fmat * model.fmat.transpose()) * delta;
        }
        let mhat = robust_cholesky(&m)?;
        let (y_f, k) = if nf > 0 {
            let y_f = mhat.solve(&model.fmat);
            let mut k = model.fmat.transpose() * &y_f;
            symmetrize(&mut k);
            let kmax = k.diagonal().iter().fold(0.0f64, |a, v| a.max(*v));
            for j in 0..nf {
                if k[(j, j)] <= 0.0 {
                    k[(j, j)] = 1.0;
                } else {
                    k[(j, j)] += 1e-14 * kmax;
                }
            }
            (y_f, Some(robust_cholesky(&k)?))
        } else {
            (DMatrix::zeros(model.m, 0), None)
        };
        Some(NewtonSystem {
            mhat,
            delta,
            y_f,
            k,
        })
    }

    /// Solves `M dy + F du = h`, `F^T dy = rf`.
    fn solve(&self, model: &Model, h: &DVector<f64>, rf: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        match &self.k {
            None => (self.mhat.solve(h), DVector::zeros(0)),
            Some(k) => {
                let h2 = h + &model.fmat * rf * self.delta;
                let t = self.mhat.solve(&h2);
                let du = k.solve(&(model.fmat.transpose() * &t - rf));
                let dy = t - &self.y_f * &du;
                (dy, du)
            }
        }
    }
}

struct Iterate {
    x: Vec<DMatrix<f64>>,
    z: Vec<DMatrix<f64>>,
    y: DVector<f64>,
    u: DVector<f64>,
}

#[derive(Clone, Copy)]
struct Measures {
    pobj: f64,
    dobj: f64,
    xz: f64,
    gap: f64,
    pinf: f64,
    dinf: f64,
    rp_max: f64,
    rd_max: f64,
}

impl Measures {
    fn merit(&self) -> f64 {
        self.gap.max(self.pinf).max(self.dinf)
    }
}

struct Residuals {
    rp: DVector<f64>,
    rd: Vec<DMatrix<f64>>,
    rf: DVector<f64>,
}

fn residuals(model: &Model, it: &Iterate) -> Residuals {
    let rp = &model.b - model.apply_a(&it.x) - &model.fmat * &it.u;
    let aty = model.apply_at(&it.y);
    let rd = aty.iter().zip(&it.z).map(|(a, z)| -(a + z)).collect();
    let rf = &model.f - model.fmat.transpose() * &it.y;
    Residuals { rp, rd, rf }
}

fn measure(model: &Model, it: &Iterate, res: &Residuals) -> Measures {
    let pobj = model.f.dot(&it.u);
    let dobj = model.b.dot(&it.y);
    let xz = inner(&it.x, &it.z);
    let denom = 1.0 + pobj.abs() + dobj.abs();
    let gap = xz.max((pobj - dobj).abs()) / denom;
    let pinf = res.rp.norm() / (1.0 + model.b.norm());
    let rd_norm = (frob(&res.rd).powi(2) + res.rf.norm_squared()).sqrt();
    let dinf = rd_norm / (1.0 + model.f.norm());
    let rp_max = res.rp.amax();
    let rd_max = res
        .rd
        .iter()
        .map(|m| m.amax())
        .fold(res.rf.amax(), f64::max);
    debug_assert!({
        // pobj - dobj = <X,Z> + <Rd,X> + rf^T u - rp^T y  (exact identity)
        let rhs = xz + inner(&res.rd, &it.x) + res.rf.dot(&it.u) - res.rp.dot(&it.y);
        let scale = 1.0 + pobj.abs() + dobj.abs() + xz.abs() + frob(&it.x) * frob(&res.rd)
            + it.u.norm() * res.rf.norm()
            + it.y.norm() * res.rp.norm();
        ((pobj - dobj) - rhs).abs() <= 1e-8 * scale
    });
    Measures {
        pobj,
        dobj,
        xz,
        gap,
        pinf,
        dinf,
        rp_max,
        rd_max,
    }
}

fn initial_point(model: &Model) -> Iterate {
    let bnorm_ratio = |k: usize| -> (f64, f64) {
        let mut max_ratio: f64 = 0.0;
        let mut max_anorm: f64 = 0.0;
        for rb in &model.blocks[k] {
            let anorm = rb
                .r
                .iter()
                .zip(&rb.c)
                .zip(&rb.v)
                .map(|((r, c), v)| if r == c { v * v } else { 2.0 * v * v })
                .sum::<f64>()
                .sqrt();
            max_ratio = max_ratio.max((1.0 + model.b[rb.row].abs()) / (1.0 + anorm));
            max_anorm = max_anorm.max(anorm);
        }
        (max_ratio, max_anorm)
    };
    let mut x = Vec::new();
    let mut z = Vec::new();
    for (k, &n) in model.dims.iter().enumerate() {
        let nf = n as f64;
        let (ratio, anorm) = bnorm_ratio(k);
        let xi = 10f64.max(nf.sqrt()).max(nf * ratio);
        let eta = 10f64.max(nf.sqrt()).max(anorm).max(model.f.amax());
        x.push(DMatrix::identity(n, n) * xi);
        z.push(DMatrix::identity(n, n) * eta);
    }
    Iterate {
        x,
        z,
        y: DVector::zeros(model.m),
        u: DVector::zeros(model.n_free()),
    }
}

fn finish(model: &Model, it: Iterate, meas: &Measures, status: SdpStatus, iterations: usize) -> SdpSolution {
    SdpSolution {
        status,
        free_vars: it.u.iter().copied().collect(),
        block_matrices: it.x,
        dual_vector: it.y.iter().copied().collect(),
        dual_slacks: it.z,
        primal_objective: model.sign * meas.pobj,
        dual_objective: model.sign * meas.dobj,
        final_gap: meas.gap,
        primal_residual: meas.rp_max,
        dual_residual: meas.rd_max,
        iterations,
        rows_before: model.m,
        rows_after: model.m,
    }
}

/// Result for a problem whose equalities are already inconsistent.
pub(super) fn infeasible_by_rank(prob: &SdpProblem) -> SdpSolution {
    let model = Model::new(prob);
    let it = initial_point(&model);
    let res = residuals(&model, &it);
    let meas = measure(&model, &it, &res);
    finish(&model, it, &meas, SdpStatus::InfeasibleDetected, 0)
}

pub(super) fn run(prob: &SdpProblem, opts: &SolverOptions) -> SdpSolution {
    let model = Model::new(prob);
    let n_total: usize = model.dims.iter().sum();

    // A free variable absent from every row is unbounded unless it has no cost.
    for j in 0..model.n_free() {
        if model.fmat.column(j).iter().all(|v| *v == 0.0) && model.f[j] != 0.0 {
            let it = initial_point(&model);
            let res = residuals(&model, &it);
            let meas = measure(&model, &it, &res);
            return finish(&model, it, &meas, SdpStatus::UnboundedDetected, 0);
        }
    }

    let mut it = initial_point(&model);
    let mut best: Option<(f64, Iterate, Measures, usize)> = None;
    let mut stalls = 0;

    let keep_best = |best: &mut Option<(f64, Iterate, Measures, usize)>, it: &Iterate, meas: Measures, iter: usize| {
        let merit = meas.merit();
        if merit.is_finite() && best.as_ref().is_none_or(|b| merit < b.0) {
            let copy = Iterate {
                x: it.x.clone(),
                z: it.z.clone(),
                y: it.y.clone(),
                u: it.u.clone(),
            };
            *best = Some((merit, copy, meas, iter));
        }
    };
    let fallback = |best: Option<(f64, Iterate, Measures, usize)>, status: SdpStatus, iter: usize, model: &Model| {
        let (_, it, meas, _) = best.expect("at least one iterate measured");
        finish(model, it, &meas, status, iter)
    };

    for iter in 0..=opts.max_iters {
        let res = residuals(&model, &it);
        let meas = measure(&model, &it, &res);
        if !(meas.pobj.is_finite() && meas.dobj.is_finite() && meas.xz.is_finite()) {
            return match best {
                Some(_) => fallback(best, SdpStatus::NumericalFailure, iter, &model),
                None => finish(&model, it, &meas, SdpStatus::NumericalFailure, iter),
            };
        }
        if meas.gap <= opts.gap_tol && meas.pinf <= opts.feas_tol && meas.dinf <= opts.feas_tol {
            return finish(&model, it, &meas, SdpStatus::Optimal, iter);
        }
        // Farkas-type certificates read off the current iterate.
        if meas.dobj > 0.0 {
            let fty = model.fmat.transpose() * &it.y;
            let ratio = (frob(&res.rd) + fty.norm()) / meas.dobj;
            if ratio < opts.infeas_tol {
                return finish(&model, it, &meas, SdpStatus::InfeasibleDetected, iter);
            }
        }
        if meas.pobj < 0.0 {
            let ax = &model.b - &res.rp;
            let ratio = ax.norm() / (-meas.pobj);
            if ratio < opts.infeas_tol {
                return finish(&model, it, &meas, SdpStatus::UnboundedDetected, iter);
            }
        }
        keep_best(&mut best, &it, meas, iter);
        if iter == opts.max_iters {
            break;
        }

        let scalings: Option<Vec<Scaling>> = it
            .x
            .iter()
            .zip(&it.z)
            .map(|(x, z)| nt_scaling(x, z))
            .collect();
        let Some(sc) = scalings else {
            return fallback(best, SdpStatus::NumericalFailure, iter, &model);
        };
        let ws: Vec<DMatrix<f64>> = sc.iter().map(|s| s.w.clone()).collect();
        let Some(sys) = NewtonSystem::build(&model, &ws) else {
            return fallback(best, SdpStatus::NumericalFailure, iter, &model);
        };

        let direction = |rc: &[DMatrix<f64>]| {
            let t: Vec<DMatrix<f64>> = rc
                .iter()
                .zip(&sc)
                .zip(&res.rd)
                .map(|((rck, s), rdk)| rck - &s.w * rdk * &s.w)
                .collect();
            let h = &res.rp - model.apply_a(&t);
            let (dy, du) = sys.solve(&model, &h, &res.rf);
            let aty = model.apply_at(&dy);
            let dz: Vec<DMatrix<f64>> = res.rd.iter().zip(&aty).map(|(r, a)| r - a).collect();
            let dx: Vec<DMatrix<f64>> = rc
                .iter()
                .zip(&sc)
                .zip(&dz)
                .map(|((rck, s), dzk)| {
                    let mut d = rck - &s.w * dzk * &s.w;
                    symmetrize(&mut d);
                    d
                })
                .collect();
            (dx, dy, dz, du)
        };
        let steps = |dx: &[DMatrix<f64>], dz: &[DMatrix<f64>]| -> (f64, f64) {
            let mut ap = f64::INFINITY;
            let mut ad = f64::INFINITY;
            for (k, s) in sc.iter().enumerate() {
                ap = ap.min(max_step(&s.linv_x, &dx[k]));
                ad = ad.min(max_step(&s.linv_z, &dz[k]));
            }
            (ap, ad)
        };

        // Predictor.
        let rc_pred: Vec<DMatrix<f64>> = it.x.iter().map(|x| -x).collect();
        let (dx_p, _, dz_p, _) = direction(&rc_pred);
        let (ap, ad) = steps(&dx_p, &dz_p);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mu = meas.xz / n_total.max(1) as f64;
        let xz_aff: f64 = it
            .x
            .iter()
            .zip(&dx_p)
            .zip(it.z.iter().zip(&dz_p))
            .map(|((x, dx), (z, dz))| (x + dx * ap).dot(&(z + dz * ad)))
            .sum();
        let expon = 1f64.max(3.0 * ap.min(ad).powi(2));
        let sigma = (xz_aff / meas.xz).clamp(0.0, 1.0).powf(expon);

        // Corrector: centring plus the second-order term in scaled space.
        let rc_corr: Vec<DMatrix<f64>> = sc
            .iter()
            .zip(dx_p.iter().zip(&dz_p))
            .map(|(s, (dx, dz))| {
                let dxs = &s.ginv * dx * s.ginv.transpose();
                let dzs = s.g.transpose() * dz * &s.g;
                let t = dxs * dzs;
                let n = s.d.len();
                let omega = DMatrix::from_fn(n, n, |i, j| {
                    let diag = if i == j {
                        2.0 * sigma * mu - 2.0 * s.d[i] * s.d[i]
                    } else {
                        0.0
                    };
                    (diag - (t[(i, j)] + t[(j, i)])) / (s.d[i] + s.d[j])
                });
                let mut rc = &s.g * omega * s.g.transpose();
                symmetrize(&mut rc);
                rc
            })
            .collect();
        let (dx, dy, dz, du) = direction(&rc_corr);
        let (ap_max, ad_max) = steps(&dx, &dz);
        let gamma = 0.9 + 0.09 * ap.min(ad);
        let ap = (gamma * ap_max).min(1.0);
        let ad = (gamma * ad_max).min(1.0);
        if !(ap.is_finite() && ad.is_finite()) {
            return fallback(best, SdpStatus::NumericalFailure, iter, &model);
        }

        for (x, d) in it.x.iter_mut().zip(&dx) {
            *x += d * ap;
        }
        it.u += &du * ap;
        it.y += &dy * ad;
        for (z, d) in it.z.iter_mut().zip(&dz) {
            *z += d * ad;
        }

        if ap < 1e-8 && ad < 1e-8 {
            stalls += 1;
            if stalls >= 3 {
                return fallback(best, SdpStatus::NumericalFailure, iter + 1, &model);
            }
        } else {
            stalls = 0;
        }
    }
    fallback(best, SdpStatus::MaxIterations, opts.max_iters, &model)
}
