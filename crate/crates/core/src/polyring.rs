//! Sparse multivariate polynomials with `f64` coefficients.
//!
//! Terms are kept in a `BTreeMap` keyed by [`Monomial`], whose `Ord` is the
//! graded lexicographic order. Every iteration over a polynomial therefore
//! visits monomials in a fixed order, which the SOS assembly relies on for
//! deterministic row and Gram indexing.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coefficients with magnitude below this are dropped after every operation.
pub const ZERO_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("arity mismatch: expected {expected} variables, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("variable split requires nx == nz for shift composition (nx = {nx}, nz = {nz})")]
    UnbalancedSplit { nx: usize, nz: usize },
}

/// Exponent vector of a monomial `x1^e1 * ... * xn^en`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    /// The monomial `x_k` in `nvars` variables.
    pub fn var(nvars: usize, k: usize) -> Self {
        let mut e = vec![0; nvars];
        e[k] = 1;
        Monomial(e)
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Product of two monomials (exponent-wise sum).
    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.0.len(), other.0.len());
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn evaluate(&self, point: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(point)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, &v)| v.powi(e as i32))
            .product()
    }

    /// Largest value of `|m(x)|` over an axis-aligned box.
    pub fn sup_abs_on_box(&self, lower: &[f64], upper: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(lower.iter().zip(upper))
            .map(|(&e, (&l, &u))| l.abs().max(u.abs()).powi(e as i32))
            .product()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Which half of a joint `(x, z)` variable list a polynomial lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    X,
    Z,
}

/// Joint variable list `(x1..x_nx, z1..z_nz)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariableSplit {
    pub nx: usize,
    pub nz: usize,
}

impl VariableSplit {
    /// The balanced split used for set differences, where `x` and `z` share a space.
    pub fn balanced(n: usize) -> Self {
        VariableSplit { nx: n, nz: n }
    }

    pub fn nvars(&self) -> usize {
        self.nx + self.nz
    }

    fn block_range(&self, block: Block) -> (usize, usize) {
        match block {
            Block::X => (0, self.nx),
            Block::Z => (self.nx, self.nz),
        }
    }
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    nvars: usize,
    #[serde(with = "term_list")]
    terms: BTreeMap<Monomial, f64>,
}

mod term_list {
    use super::Monomial;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(
        terms: &BTreeMap<Monomial, f64>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let list: Vec<(&Monomial, &f64)> = terms.iter().collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<Monomial, f64>, D::Error> {
        let list: Vec<(Monomial, f64)> = Vec::deserialize(d)?;
        Ok(list.into_iter().collect())
    }
}

fn check_arity(expected: usize, found: usize) -> Result<(), PolyError> {
    if expected == found {
        Ok(())
    } else {
        Err(PolyError::ArityMismatch { expected, found })
    }
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, value: f64) -> Self {
        Self::from_term(Monomial::one(nvars), value)
    }

    /// The polynomial `x_k`.
    pub fn var(nvars: usize, k: usize) -> Self {
        Self::from_term(Monomial::var(nvars, k), 1.0)
    }

    pub fn from_term(monomial: Monomial, coeff: f64) -> Self {
        let mut p = Polynomial::zero(monomial.nvars());
        p.add_term(monomial, coeff);
        p.normalize();
        p
    }

    /// Builds a polynomial from `(monomial, coefficient)` pairs; repeated
    /// monomials are summed.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Monomial, f64)>,
    {
        let mut p = Polynomial::zero(nvars);
        for (m, c) in terms {
            check_arity(nvars, m.nvars())?;
            p.add_term(m, c);
        }
        p.normalize();
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().next_back().map_or(0, Monomial::degree)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    fn add_term(&mut self, m: Monomial, c: f64) {
        *self.terms.entry(m).or_insert(0.0) += c;
    }

    fn normalize(&mut self) {
        self.terms.retain(|_, c| c.abs() >= ZERO_THRESHOLD);
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        check_arity(self.nvars, other.nvars)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        out.normalize();
        Ok(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        check_arity(self.nvars, other.nvars)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        out.normalize();
        Ok(out)
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        check_arity(self.nvars, other.nvars)?;
        let mut out = Polynomial::zero(self.nvars);
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out.normalize();
        Ok(out)
    }

    pub fn scale(&self, factor: f64) -> Polynomial {
        let mut out = Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, &c)| (m.clone(), c * factor)).collect(),
        };
        out.normalize();
        out
    }

    pub fn neg(&self) -> Polynomial {
        self.scale(-1.0)
    }

    pub fn pow(&self, exp: u32) -> Polynomial {
        let mut acc = Polynomial::constant(self.nvars, 1.0);
        for _ in 0..exp {
            acc = acc.mul(self).expect("same arity");
        }
        acc
    }

    /// Direct evaluation `sum_k c_k * prod_i point_i^e_ki`.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64, PolyError> {
        check_arity(self.nvars, point.len())?;
        Ok(self.terms.iter().map(|(m, c)| c * m.evaluate(point)).sum())
    }

    /// Re-expresses the polynomial over the joint `(x, z)` list, placing its
    /// variables in `block` and leaving the other block's exponents at zero.
    pub fn embed(&self, split: VariableSplit, block: Block) -> Result<Polynomial, PolyError> {
        let (offset, len) = split.block_range(block);
        check_arity(len, self.nvars)?;
        let n = split.nvars();
        let terms = self.terms.iter().map(|(m, &c)| {
            let mut e = vec![0; n];
            e[offset..offset + len].copy_from_slice(m.exponents());
            (Monomial(e), c)
        });
        Ok(Polynomial {
            nvars: n,
            terms: terms.collect(),
        })
    }

    /// Expands `p(x + z)` over the joint `(x, z)` list.
    ///
    /// Each `x_k` is replaced by `x_k + z_k` one variable at a time with a
    /// binomial expansion of every term.
    pub fn shift_compose(&self, split: VariableSplit) -> Result<Polynomial, PolyError> {
        if split.nx != split.nz {
            return Err(PolyError::UnbalancedSplit {
                nx: split.nx,
                nz: split.nz,
            });
        }
        let mut current = self.embed(split, Block::X)?;
        for k in 0..split.nx {
            current = current.expand_shift(k, split.nx + k);
        }
        Ok(current)
    }

    /// Computes `p(offset + scale * y)` componentwise.
    pub fn affine_substitute(&self, offset: &[f64], scale: &[f64]) -> Result<Polynomial, PolyError> {
        check_arity(self.nvars, offset.len())?;
        check_arity(self.nvars, scale.len())?;
        let mut current = self.clone();
        for k in 0..self.nvars {
            if offset[k] == 0.0 && scale[k] == 1.0 {
                continue;
            }
            current = current.expand_affine(k, offset[k], scale[k]);
        }
        Ok(current)
    }

    /// Replaces variable `src` by `x_src + x_dst` (binomial expansion).
    fn expand_shift(&self, src: usize, dst: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (m, &c) in &self.terms {
            let p = m.0[src];
            if p == 0 {
                out.add_term(m.clone(), c);
                continue;
            }
            let mut binom = 1.0;
            for q in 0..=p {
                let mut e = m.0.clone();
                e[src] = p - q;
                e[dst] += q;
                out.add_term(Monomial(e), c * binom);
                binom = binom * f64::from(p - q) / f64::from(q + 1);
            }
        }
        out.normalize();
        out
    }

    /// Replaces variable `k` by `offset + scale * x_k`.
    fn expand_affine(&self, k: usize, offset: f64, scale: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (m, &c) in &self.terms {
            let p = m.0[k];
            if p == 0 {
                out.add_term(m.clone(), c);
                continue;
            }
            // (offset + scale*x)^p = sum_q C(p,q) scale^q x^q offset^(p-q)
            let mut binom = 1.0;
            for q in 0..=p {
                let mut e = m.0.clone();
                e[k] = q;
                let coeff = c * binom * scale.powi(q as i32) * offset.powi((p - q) as i32);
                out.add_term(Monomial(e), coeff);
                binom = binom * f64::from(p - q) / f64::from(q + 1);
            }
        }
        out.normalize();
        out
    }

    /// Renders the polynomial with the given variable names, highest
    /// monomial first. The output parses back to the same term map.
    pub fn to_expr(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (m, &c)) in self.terms.iter().rev().enumerate() {
            let sign = if c < 0.0 { "-" } else { "+" };
            if i == 0 {
                if c < 0.0 {
                    out.push('-');
                }
            } else {
                out.push(' ');
                out.push_str(sign);
                out.push(' ');
            }
            let mut factors = Vec::new();
            let mag = c.abs();
            if mag != 1.0 || m.is_constant() {
                factors.push(format!("{mag}"));
            }
            for (k, &e) in m.exponents().iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(names[k].clone()),
                    _ => factors.push(format!("{}^{}", names[k], e)),
                }
            }
            out.push_str(&factors.join("*"));
        }
        out
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (1..=self.nvars).map(|k| format!("v{k}")).collect();
        write!(f, "Polynomial[{}]({})", self.nvars, self.to_expr(&names))
    }
}

/// All monomials in `nvars` variables of total degree at most `max_degree`,
/// in ascending graded lexicographic order.
pub fn monomial_basis(nvars: usize, max_degree: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut buf = vec![0u32; nvars];
    for d in 0..=max_degree {
        let start = out.len();
        compositions(&mut buf, 0, d, &mut out);
        out[start..].sort();
    }
    out
}

fn compositions(buf: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<Monomial>) {
    if pos + 1 >= buf.len() {
        if let Some(last) = buf.last_mut() {
            *last = remaining;
            out.push(Monomial(buf.to_vec()));
        } else if remaining == 0 {
            out.push(Monomial(Vec::new()));
        }
        return;
    }
    for e in 0..=remaining {
        buf[pos] = e;
        compositions(buf, pos + 1, remaining - e, out);
    }
    buf[pos] = 0;
}

/// `C(n, k)` as an exact integer (panics on overflow of `u128`).
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}
