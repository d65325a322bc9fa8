//! SOS program for one constraint `a(x) >= 0` of `A`.
//!
//! We look for `c(x)` and SOS multipliers `s_j(x, z)` such that
//!
//! ```text
//!   P(x, z) = a(x + z) - c(x) - sum_j s_j(x, z) b_j(z)
//! ```
//!
//! is a sum of squares, maximising a linear functional of `c`'s
//! coefficients. Whenever such a certificate exists and `z` satisfies every
//! `b_j(z) >= 0`, `a(x + z) >= c(x)`. Every SOS polynomial is written as
//! `m^T Q m` with a Gram matrix `Q`; matching coefficients of each monomial
//! over `(x, z)` gives one linear equality per monomial.
//!
//! The P-block degree is `max(deg a, deg_c, deg_s + max_j deg b_j)` rounded up
//! to even. With [`GramBasis::Full`] each block uses every monomial up to
//! half its degree. [`GramBasis::Reduced`] drops P-block monomials that
//! cannot occur in any representation: those outside half the Newton
//! polytope of the candidate support, then iteratively any `m` whose square
//! `m^2` is unreachable (its diagonal Gram entry would be forced to zero).

use std::collections::{BTreeMap, HashSet};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objective::ObjectiveFunctional;
use crate::polyring::{monomial_basis, Block, Monomial, PolyError, Polynomial, VariableSplit};
use crate::sdpsolve::{ConstraintRow, PsdEntry, SdpProblem, SdpSolution, Sense};
use crate::semialg::{BoxRegion, SemiAlgebraicSet, ShrinkMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GramBasis {
    /// Every monomial up to half the block degree.
    Full,
    /// Newton-polytope and diagonal-consistency pruning of the P block.
    #[default]
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockRole {
    /// Gram matrix of `P` itself.
    P,
    /// Gram matrix of the multiplier `s_j`.
    S(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramBlock {
    pub basis: Vec<Monomial>,
    pub dim: usize,
    pub role: BlockRole,
}

#[derive(Debug, Error)]
pub enum SosError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("P-block degree {p_degree} is below deg a(x+z) = {needed}")]
    DegreeTooLow { p_degree: u32, needed: u32 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// An assembled SOS program together with the bookkeeping needed to read a
/// certificate back out of an SDP solution.
#[derive(Debug, Clone)]
pub struct SosProgram {
    pub split: VariableSplit,
    /// Block 0 is the P block, block `j + 1` belongs to `s_j`.
    pub blocks: Vec<GramBlock>,
    /// Monomials of `c` over `x`; free variable `k` is the coefficient of `c_monomials[k]`.
    pub c_monomials: Vec<Monomial>,
    /// Monomial over `(x, z)` matched by each equality row.
    pub row_monomials: Vec<Monomial>,
    pub sdp: SdpProblem,
    pub p_degree: u32,
    /// Degree of every `s_j` (even).
    pub s_degree: u32,
}

/// Total degree of the P block.
pub fn p_block_degree(deg_a: u32, deg_c: u32, deg_s: u32, max_deg_b: u32) -> u32 {
    let d = deg_a.max(deg_c).max(deg_s + max_deg_b);
    d + d % 2
}

fn embed_x(m: &Monomial, split: VariableSplit) -> Monomial {
    let mut e = m.exponents().to_vec();
    e.resize(split.nvars(), 0);
    Monomial::new(e)
}

/// Newton-polytope filter for the P block (see module docs).
fn newton_filter(split: VariableSplit, half_c: f64, half_other: f64, max_half: u32) -> Vec<Monomial> {
    monomial_basis(split.nvars(), max_half)
        .into_iter()
        .filter(|m| {
            let e = m.exponents();
            let dx: u32 = e[..split.nx].iter().sum();
            let dz: u32 = e[split.nx..].iter().sum();
            let dz = f64::from(dz);
            if dz > half_other + 1e-9 {
                return false;
            }
            let lam_max = if half_other > 0.0 { 1.0 - dz / half_other } else { 1.0 };
            let bound = half_other.max(lam_max * half_c + (1.0 - lam_max) * half_other);
            f64::from(dx) + dz <= bound + 1e-9
        })
        .collect()
}

/// Iteratively removes `m` when `m^2` is neither in `support` nor a product
/// of two distinct basis elements.
fn prune_diagonal(mut basis: Vec<Monomial>, support: &HashSet<Monomial>) -> Vec<Monomial> {
    loop {
        let mut cross: HashSet<Monomial> = HashSet::new();
        for (a, ma) in basis.iter().enumerate() {
            for mb in &basis[a + 1..] {
                cross.insert(ma.mul(mb));
            }
        }
        let before = basis.len();
        basis.retain(|m| {
            let sq = m.mul(m);
            support.contains(&sq) || cross.contains(&sq)
        });
        if basis.len() == before {
            return basis;
        }
    }
}

/// Builds the SDP for one constraint polynomial `a` of `A`.
pub fn assemble(
    a: &Polynomial,
    b: &SemiAlgebraicSet,
    deg_c: u32,
    deg_s: u32,
    objective: &ObjectiveFunctional,
    basis_mode: GramBasis,
) -> Result<SosProgram, SosError> {
    let n = a.nvars();
    if b.nvars() != n {
        return Err(SosError::Dimension(format!("A has {n} variables, B has {}", b.nvars())));
    }
    let split = VariableSplit::balanced(n);
    let s_degree = deg_s - deg_s % 2;
    let a_shift = a.shift_compose(split)?;
    let b_embedded: Vec<Polynomial> = b
        .constraints()
        .iter()
        .map(|bj| bj.embed(split, Block::Z))
        .collect::<Result<_, _>>()?;
    let max_deg_b = b.constraints().iter().map(Polynomial::degree).max().unwrap_or(0);
    let p_degree = p_block_degree(a.degree(), deg_c, s_degree, max_deg_b);
    if p_degree < a_shift.degree() {
        return Err(SosError::DegreeTooLow {
            p_degree,
            needed: a_shift.degree(),
        });
    }

    let c_monomials = monomial_basis(n, deg_c);
    let s_basis = monomial_basis(split.nvars(), s_degree / 2);

    let p_basis = match basis_mode {
        GramBasis::Full => monomial_basis(split.nvars(), p_degree / 2),
        GramBasis::Reduced => {
            let d_other = a.degree().max(s_degree + max_deg_b);
            let candidates = newton_filter(
                split,
                f64::from(deg_c) / 2.0,
                f64::from(d_other) / 2.0,
                p_degree / 2,
            );
            let mut support: HashSet<Monomial> = a_shift.terms().map(|(m, _)| m.clone()).collect();
            support.extend(c_monomials.iter().map(|m| embed_x(m, split)));
            let mut s_products: HashSet<Monomial> = HashSet::new();
            for (k, mk) in s_basis.iter().enumerate() {
                for ml in &s_basis[k..] {
                    s_products.insert(mk.mul(ml));
                }
            }
            for bj in &b_embedded {
                for sp in &s_products {
                    for (beta, _) in bj.terms() {
                        support.insert(sp.mul(beta));
                    }
                }
            }
            prune_diagonal(candidates, &support)
        }
    };

    let mut blocks = vec![GramBlock {
        dim: p_basis.len(),
        basis: p_basis,
        role: BlockRole::P,
    }];
    for j in 0..b_embedded.len() {
        blocks.push(GramBlock {
            dim: s_basis.len(),
            basis: s_basis.clone(),
            role: BlockRole::S(j),
        });
    }

    // Collect every (row monomial -> row) contribution, keyed in grlex order.
    let mut rows: BTreeMap<Monomial, ConstraintRow> = BTreeMap::new();
    for (k, m) in c_monomials.iter().enumerate() {
        rows.entry(embed_x(m, split)).or_default().free.push((k, 1.0));
    }
    let p = &blocks[0].basis;
    for (k, mk) in p.iter().enumerate() {
        for (l, ml) in p.iter().enumerate().skip(k) {
            rows.entry(mk.mul(ml)).or_default().psd.push(PsdEntry {
                block: 0,
                row: k,
                col: l,
                value: 1.0,
            });
        }
    }
    for (j, bj) in b_embedded.iter().enumerate() {
        for (k, mk) in s_basis.iter().enumerate() {
            for (l, ml) in s_basis.iter().enumerate().skip(k) {
                let kl = mk.mul(ml);
                for (beta, coeff) in bj.terms() {
                    rows.entry(kl.mul(beta)).or_default().psd.push(PsdEntry {
                        block: j + 1,
                        row: k,
                        col: l,
                        value: coeff,
                    });
                }
            }
        }
    }
    for (m, _) in a_shift.terms() {
        rows.entry(m.clone()).or_default();
    }

    let row_monomials: Vec<Monomial> = rows.keys().cloned().collect();
    let rhs: Vec<f64> = row_monomials.iter().map(|m| a_shift.coeff(m)).collect();
    let sdp = SdpProblem {
        block_dims: blocks.iter().map(|b| b.dim).collect(),
        n_free: c_monomials.len(),
        rows: rows.into_values().collect(),
        rhs,
        objective: c_monomials.iter().map(|m| objective.weight(m)).collect(),
        sense: Sense::Maximize,
    };
    Ok(SosProgram {
        split,
        blocks,
        c_monomials,
        row_monomials,
        sdp,
        p_degree,
        s_degree,
    })
}

/// Solved Gram matrices, the coefficients of `c`, and diagnostics recomputed
/// from them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(with = "matrix_list")]
    pub gram_matrices: Vec<DMatrix<f64>>,
    pub c_coeffs: Vec<f64>,
    /// Largest coefficient of the recomputed identity.
    pub residual_max: f64,
    pub min_eigenvalues: Vec<f64>,
    pub objective_value: f64,
    /// `a(x+z) - c(x) - sum_j s_j b_j(z) - m^T Q_0 m`, recomputed.
    pub residual: Polynomial,
}

mod matrix_list {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(ms: &[DMatrix<f64>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Vec<f64>>> = ms
            .iter()
            .map(|m| m.row_iter().map(|r| r.iter().copied().collect()).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DMatrix<f64>>, D::Error> {
        let rows: Vec<Vec<Vec<f64>>> = Vec::deserialize(d)?;
        Ok(rows
            .into_iter()
            .map(|m| {
                let n = m.len();
                DMatrix::from_fn(n, n, |i, j| m[i][j])
            })
            .collect())
    }
}

impl Certificate {
    pub fn is_valid(&self, residual_max: f64, psd_margin: f64) -> bool {
        self.residual_max <= residual_max && self.min_eigenvalues.iter().all(|&l| l >= -psd_margin)
    }
}

fn gram_polynomial(basis: &[Monomial], q: &DMatrix<f64>, nvars: usize) -> Result<Polynomial, PolyError> {
    let mut terms: BTreeMap<Monomial, f64> = BTreeMap::new();
    for (k, mk) in basis.iter().enumerate() {
        for (l, ml) in basis.iter().enumerate() {
            if q[(k, l)] != 0.0 {
                *terms.entry(mk.mul(ml)).or_insert(0.0) += q[(k, l)];
            }
        }
    }
    Polynomial::from_terms(nvars, terms)
}

impl SosProgram {
    /// Coefficients of `c` as a polynomial in `x`.
    pub fn c_polynomial(&self, coeffs: &[f64]) -> Polynomial {
        Polynomial::from_terms(
            self.split.nx,
            self.c_monomials.iter().cloned().zip(coeffs.iter().copied()),
        )
        .expect("c monomials share arity")
    }

    /// Recomputes the matched identity from `(c, Q)` with polynomial
    /// arithmetic alone, without looking at the SDP rows.
    pub fn reconstruct_residual(
        &self,
        a: &Polynomial,
        b: &SemiAlgebraicSet,
        c_coeffs: &[f64],
        grams: &[DMatrix<f64>],
        objective: &ObjectiveFunctional,
    ) -> Result<Certificate, SosError> {
        if c_coeffs.len() != self.c_monomials.len() {
            return Err(SosError::Dimension(format!(
                "{} c coefficients for {} monomials",
                c_coeffs.len(),
                self.c_monomials.len()
            )));
        }
        if grams.len() != self.blocks.len()
            || grams.iter().zip(&self.blocks).any(|(q, blk)| q.nrows() != blk.dim || q.ncols() != blk.dim)
        {
            return Err(SosError::Dimension("Gram matrices do not match the blocks".into()));
        }
        if b.constraints().len() + 1 != self.blocks.len() {
            return Err(SosError::Dimension("B does not match the multiplier blocks".into()));
        }
        let nv = self.split.nvars();
        let c = self.c_polynomial(c_coeffs);
        let mut identity = a.shift_compose(self.split)?.sub(&c.embed(self.split, Block::X)?)?;
        for (j, bj) in b.constraints().iter().enumerate() {
            let s = gram_polynomial(&self.blocks[j + 1].basis, &grams[j + 1], nv)?;
            identity = identity.sub(&s.mul(&bj.embed(self.split, Block::Z)?)?)?;
        }
        identity = identity.sub(&gram_polynomial(&self.blocks[0].basis, &grams[0], nv)?)?;

        let min_eigenvalues = grams
            .iter()
            .map(|q| {
                if q.nrows() == 0 {
                    0.0
                } else {
                    let sym = (q + q.transpose()) * 0.5;
                    sym.symmetric_eigenvalues().min()
                }
            })
            .collect();
        let objective_value = self
            .c_monomials
            .iter()
            .zip(c_coeffs)
            .map(|(m, v)| objective.weight(m) * v)
            .sum();
        Ok(Certificate {
            gram_matrices: grams.to_vec(),
            c_coeffs: c_coeffs.to_vec(),
            residual_max: identity.max_abs_coeff(),
            min_eigenvalues,
            objective_value,
            residual: identity,
        })
    }

    /// Reads `c` and the Gram matrices off an SDP solution and checks them.
    pub fn certificate(
        &self,
        a: &Polynomial,
        b: &SemiAlgebraicSet,
        sol: &SdpSolution,
        objective: &ObjectiveFunctional,
    ) -> Result<Certificate, SosError> {
        let grams: Vec<DMatrix<f64>> = sol
            .block_matrices
            .iter()
            .map(|q| (q + q.transpose()) * 0.5)
            .collect();
        self.reconstruct_residual(a, b, &sol.free_vars, &grams, objective)
    }
}

/// Pieces of the soundness margin `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoundnessBound {
    /// `sum_gamma |E_gamma| sup |gamma|` for the identity residual `E`.
    pub identity_term: f64,
    /// Contribution of negative Gram eigenvalues.
    pub gram_term: f64,
    pub epsilon: f64,
}

/// Bounds `a(x+z) - c(x)` from below on `x_box x z_box` (with `b_j(z) >= 0`)
/// in terms of the certificate's defects:
///
/// ```text
///   a(x+z) - c(x) = m^T Q_0 m + sum_j s_j b_j + E  >=  -epsilon,
///   epsilon = sum_gamma |E_gamma| sup|gamma|
///           + sum_k |min(lambda_k, 0)| * sum_a sup m_a^2 * beta_k,
/// ```
///
/// where `beta_0 = 1` and `beta_j = sup_{z_box} |b_j|`.
pub fn soundness_margin(
    prog: &SosProgram,
    cert: &Certificate,
    b: &SemiAlgebraicSet,
    x_box: &BoxRegion,
    z_box: &BoxRegion,
) -> SoundnessBound {
    let lower: Vec<f64> = x_box.lower.iter().chain(&z_box.lower).copied().collect();
    let upper: Vec<f64> = x_box.upper.iter().chain(&z_box.upper).copied().collect();
    let identity_term: f64 = cert
        .residual
        .terms()
        .map(|(m, e)| e.abs() * m.sup_abs_on_box(&lower, &upper))
        .sum();
    let mut gram_term = 0.0;
    for (k, block) in prog.blocks.iter().enumerate() {
        let neg = (-cert.min_eigenvalues[k]).max(0.0);
        if neg == 0.0 {
            continue;
        }
        let norm: f64 = block
            .basis
            .iter()
            .map(|m| m.sup_abs_on_box(&lower, &upper).powi(2))
            .sum();
        let beta = match block.role {
            BlockRole::P => 1.0,
            BlockRole::S(j) => b.constraints()[j]
                .terms()
                .map(|(m, v)| v.abs() * m.sup_abs_on_box(&z_box.lower, &z_box.upper))
                .sum(),
        };
        gram_term += neg * norm * beta;
    }
    SoundnessBound {
        identity_term,
        gram_term,
        epsilon: identity_term + gram_term,
    }
}

/// `c - epsilon` together with whether it is negative everywhere sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct Shrunk {
    pub c: Polynomial,
    pub epsilon: f64,
    /// No sampled point of the region has `c - epsilon >= 0`.
    pub empty: bool,
    /// Largest sampled value of the returned `c` over the region.
    pub max_on_region: f64,
}

/// Lowers `c` by `epsilon` (mode auto) and reports emptiness using a grid of
/// the region with `per_axis` cell-centred points per axis plus the corners.
pub fn shrink_to_sound(
    c: &Polynomial,
    epsilon: f64,
    mode: ShrinkMode,
    region: &BoxRegion,
    per_axis: usize,
) -> Shrunk {
    let eps = match mode {
        ShrinkMode::Auto => epsilon.max(0.0),
        ShrinkMode::Off => 0.0,
    };
    let shifted = c.sub(&Polynomial::constant(c.nvars(), eps)).expect("same arity");
    let max_on_region = sampled_max(&shifted, region, per_axis);
    Shrunk {
        empty: max_on_region < 0.0,
        c: shifted,
        epsilon: eps,
        max_on_region,
    }
}

fn sampled_max(p: &Polynomial, region: &BoxRegion, per_axis: usize) -> f64 {
    let n = region.dim();
    let axis = |k: usize| -> Vec<f64> {
        let (l, u) = (region.lower[k], region.upper[k]);
        let h = (u - l) / per_axis as f64;
        let mut pts: Vec<f64> = (0..per_axis).map(|i| l + (i as f64 + 0.5) * h).collect();
        pts.push(l);
        pts.push(u);
        pts
    };
    let axes: Vec<Vec<f64>> = (0..n).map(axis).collect();
    let total: usize = axes.iter().map(Vec::len).product();
    let mut best = f64::NEG_INFINITY;
    let mut point = vec![0.0; n];
    for mut idx in 0..total {
        for k in (0..n).rev() {
            let len = axes[k].len();
            point[k] = axes[k][idx % len];
            idx /= len;
        }
        best = best.max(p.evaluate(&point).expect("region dimension"));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::box_integral_weights;
    use crate::polyring::binomial;
    use crate::sdpsolve::{self, SdpStatus};
    use crate::semialg::ToleranceSet;

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|k| format!("x{k}")).collect()
    }

    fn poly(expr: &str, n: usize) -> Polynomial {
        crate::semialg::parse_polynomial(expr, &names(n)).unwrap()
    }

    fn set(exprs: &[&str], n: usize) -> SemiAlgebraicSet {
        SemiAlgebraicSet::parse(exprs, &names(n)).unwrap()
    }

    fn solve_1d(deg_c: u32, h: f64) -> (SosProgram, Certificate) {
        let a = poly("1 - x1^2", 1);
        let b = set(&["0.25 - x1^2"], 1);
        let region = BoxRegion::symmetric(1, h).unwrap();
        let obj = box_integral_weights(&region, &monomial_basis(1, deg_c));
        let prog = assemble(&a, &b, deg_c, 0, &obj, GramBasis::Full).unwrap();
        let sol = sdpsolve::solve(&prog.sdp, &ToleranceSet::default(), 200).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        let cert = prog.certificate(&a, &b, &sol, &obj).unwrap();
        (prog, cert)
    }

    #[test]
    fn one_dimensional_oracle() {
        // With s constant, c(x) = 3/4 - t/4 - (1 + 1/t) x^2 for s = 1 + t and
        // the best t over [-h, h] is 2h/sqrt(3).
        let h = 1.0;
        let (prog, cert) = solve_1d(2, h);
        assert!(cert.is_valid(1e-6, 1e-7), "{cert:?}");
        let c = prog.c_polynomial(&cert.c_coeffs);
        for i in 0..=400 {
            let x = -1.5 + 3.0 * i as f64 / 400.0;
            let oracle = 1.0 - (x.abs() + 0.5).powi(2);
            assert!(c.evaluate(&[x]).unwrap() <= oracle + 1e-6, "x = {x}");
        }
        let t = 2.0 * h / 3f64.sqrt();
        let best = 2.0 * h * (0.75 - t / 4.0) - (1.0 + 1.0 / t) * 2.0 * h.powi(3) / 3.0;
        assert!((cert.objective_value - best).abs() < 1e-6, "{} vs {best}", cert.objective_value);
    }

    #[test]
    fn objective_nondecreasing_in_deg_c() {
        let vals: Vec<f64> = [2, 4, 6].iter().map(|&d| solve_1d(d, 1.0).1.objective_value).collect();
        assert!(vals[1] >= vals[0] - 1e-7 && vals[2] >= vals[1] - 1e-7, "{vals:?}");
    }

    #[test]
    fn trivial_b_gives_global_minimum() {
        // b = 1 leaves z unconstrained, so c <= min_z a(x+z) = min a.
        let a = poly("x1^2 + x2^2 + 1", 2);
        let b = set(&["1"], 2);
        let region = BoxRegion::symmetric(2, 1.0).unwrap();
        let obj = box_integral_weights(&region, &monomial_basis(2, 2));
        let prog = assemble(&a, &b, 2, 0, &obj, GramBasis::Full).unwrap();
        let sol = sdpsolve::solve(&prog.sdp, &ToleranceSet::default(), 200).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        let cert = prog.certificate(&a, &b, &sol, &obj).unwrap();
        let c = prog.c_polynomial(&cert.c_coeffs);
        let mut grid_min = f64::INFINITY;
        for i in 0..=60 {
            for j in 0..=60 {
                let p = [-3.0 + 0.1 * i as f64, -3.0 + 0.1 * j as f64];
                grid_min = grid_min.min(a.evaluate(&p).unwrap());
            }
        }
        for i in 0..=20 {
            let x = [-1.0 + 0.1 * i as f64, 0.3];
            let v = c.evaluate(&x).unwrap();
            assert!(v <= grid_min + 1e-6);
            assert!((v - grid_min).abs() < 1e-4, "{v}");
        }
    }

    #[test]
    fn full_basis_row_count() {
        let a = poly("4 - x1^2 - x2^2", 2);
        let b = set(&["0.25 - x1^2 - x2^2"], 2);
        let region = BoxRegion::symmetric(2, 2.1).unwrap();
        let obj = box_integral_weights(&region, &monomial_basis(2, 4));
        let prog = assemble(&a, &b, 4, 2, &obj, GramBasis::Full).unwrap();
        assert_eq!(prog.p_degree, 4);
        assert_eq!(prog.sdp.rows.len() as u128, binomial(4 + 4, 4));
        assert_eq!(prog.blocks[0].dim as u128, binomial(4 + 2, 4));
        assert_eq!(prog.blocks[1].dim, 5);
        let reduced = assemble(&a, &b, 4, 2, &obj, GramBasis::Reduced).unwrap();
        assert!(reduced.blocks[0].dim <= prog.blocks[0].dim);
    }

    #[test]
    fn assembly_is_deterministic() {
        let a = poly("0.1 - x1^4 - x2^4 + 10*x1^2 - x2^2", 2);
        let b = set(&["1 - x1^2 - x2^2"], 2);
        let region = BoxRegion::symmetric(2, 3.0).unwrap();
        let obj = box_integral_weights(&region, &monomial_basis(2, 6));
        let p1 = assemble(&a, &b, 6, 2, &obj, GramBasis::Reduced).unwrap();
        let p2 = assemble(&a, &b, 6, 2, &obj, GramBasis::Reduced).unwrap();
        assert_eq!(p1.sdp, p2.sdp);
        assert_eq!(p1.row_monomials, p2.row_monomials);
    }

    #[test]
    fn degree_rule() {
        assert_eq!(p_block_degree(4, 14, 6, 2), 14);
        assert_eq!(p_block_degree(3, 0, 0, 2), 4);
        assert_eq!(p_block_degree(6, 10, 4, 6), 10);
    }

    fn hand_certificate() -> (SosProgram, Polynomial, SemiAlgebraicSet, ObjectiveFunctional) {
        // a = x^2 in one variable; B = {1 >= 0}; c = 0, s = 0.
        let a = poly("x1^2", 1);
        let b = set(&["1"], 1);
        let region = BoxRegion::symmetric(1, 1.0).unwrap();
        let obj = box_integral_weights(&region, &monomial_basis(1, 0));
        let prog = assemble(&a, &b, 0, 0, &obj, GramBasis::Full).unwrap();
        (prog, a, b, obj)
    }

    #[test]
    fn hand_built_certificate() {
        let (prog, a, b, obj) = hand_certificate();
        // P basis over (x, z) up to degree 1 in grlex: 1, z, x.
        let basis = &prog.blocks[0].basis;
        assert_eq!(basis.len(), 3);
        // a(x+z) = (x + z)^2 = v^T v with v = (0, 1, 1) in (1, z, x).
        let mut q0 = DMatrix::zeros(3, 3);
        for i in 1..3 {
            for j in 1..3 {
                q0[(i, j)] = 1.0;
            }
        }
        let grams = vec![q0.clone(), DMatrix::zeros(1, 1)];
        let cert = prog.reconstruct_residual(&a, &b, &[0.0], &grams, &obj).unwrap();
        assert_eq!(cert.residual_max, 0.0);
        assert!(cert.min_eigenvalues[0].abs() < 1e-12);
        assert!(cert.is_valid(1e-6, 1e-7));

        let mut bad = q0;
        bad[(1, 2)] += 1e-3;
        bad[(2, 1)] += 1e-3;
        let cert = prog
            .reconstruct_residual(&a, &b, &[0.0], &[bad, DMatrix::zeros(1, 1)], &obj)
            .unwrap();
        assert!(cert.residual_max >= 1e-3);
        assert!(!cert.is_valid(1e-6, 1e-7));

        let wrong = prog.reconstruct_residual(&a, &b, &[0.0, 1.0], &grams, &obj);
        assert!(matches!(wrong, Err(SosError::Dimension(_))));
    }

    #[test]
    fn margin_examples() {
        let (prog, a, b, obj) = hand_certificate();
        let mut q0 = DMatrix::zeros(3, 3);
        for i in 1..3 {
            for j in 1..3 {
                q0[(i, j)] = 1.0;
            }
        }
        let cert = prog
            .reconstruct_residual(&a, &b, &[0.0], &[q0, DMatrix::zeros(1, 1)], &obj)
            .unwrap();
        let unit = BoxRegion::symmetric(1, 1.0).unwrap();
        let bound = soundness_margin(&prog, &cert, &b, &unit, &unit);
        assert_eq!(bound.epsilon, 0.0);
        let c = prog.c_polynomial(&cert.c_coeffs);
        let s = shrink_to_sound(&c, bound.epsilon, ShrinkMode::Auto, &unit, 11);
        assert_eq!(s.c, c);

        // A residual of 1e-7 on 100 monomials bounded by 1 on the unit box.
        let mut fake = cert.clone();
        let terms = monomial_basis(2, 12).into_iter().take(100).map(|m| (m, 1e-7));
        fake.residual = Polynomial::from_terms(2, terms).unwrap();
        let bound = soundness_margin(&prog, &fake, &b, &unit, &unit);
        assert!(bound.epsilon <= 1e-5 + 1e-18, "{}", bound.epsilon);
        assert!(bound.epsilon > 0.0);
    }

    #[test]
    fn negative_eigenvalue_enters_margin() {
        let (prog, a, b, obj) = hand_certificate();
        let mut q0 = DMatrix::zeros(3, 3);
        q0[(0, 0)] = -1e-3;
        let cert = prog
            .reconstruct_residual(&a, &b, &[0.0], &[q0, DMatrix::zeros(1, 1)], &obj)
            .unwrap();
        let unit = BoxRegion::symmetric(1, 1.0).unwrap();
        let bound = soundness_margin(&prog, &cert, &b, &unit, &unit);
        // basis 1, z, x: sum of squared sups is 3.
        assert!((bound.gram_term - 3e-3).abs() < 1e-15);
    }

    #[test]
    fn huge_margin_empties_set() {
        let c = poly("1 - x1^2 - x2^2", 2);
        let region = BoxRegion::symmetric(2, 2.1).unwrap();
        let s = shrink_to_sound(&c, 1.5, ShrinkMode::Auto, &region, 41);
        assert!(s.empty);
        let off = shrink_to_sound(&c, 1.5, ShrinkMode::Off, &region, 41);
        assert!(!off.empty);
        assert_eq!(off.epsilon, 0.0);
    }
}
