//! Linear objective on the coefficients of `c`.
//!
//! The objective is `sum_alpha w_alpha * c_alpha`. In box mode `w_alpha` is
//! the exact integral of `x^alpha` over the box; in Monte Carlo mode it is the
//! sample mean of `x^alpha` over uniformly drawn points. The two differ by the
//! constant factor `vol(R)`, which does not move the maximiser.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::polyring::Monomial;
use crate::sampling;
use crate::semialg::{BoxRegion, SemiAlgebraicSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightSource {
    BoxIntegral,
    MonteCarlo { n_samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveFunctional {
    pub weights: BTreeMap<Monomial, f64>,
    pub source: WeightSource,
}

impl ObjectiveFunctional {
    pub fn weight(&self, m: &Monomial) -> f64 {
        self.weights.get(m).copied().unwrap_or(0.0)
    }

    /// Every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> ObjectiveFunctional {
        ObjectiveFunctional {
            weights: self.weights.iter().map(|(m, w)| (m.clone(), w * factor)).collect(),
            source: self.source.clone(),
        }
    }
}

/// `∫_l^u t^k dt`.
fn power_integral(l: f64, u: f64, k: u32) -> f64 {
    let k1 = k as i32 + 1;
    (u.powi(k1) - l.powi(k1)) / f64::from(k + 1)
}

/// `∫_l^u |t|^k dt`.
fn abs_power_integral(l: f64, u: f64, k: u32) -> f64 {
    let k1 = k as i32 + 1;
    let d = f64::from(k + 1);
    if l >= 0.0 {
        (u.powi(k1) - l.powi(k1)) / d
    } else if u <= 0.0 {
        (l.abs().powi(k1) - u.abs().powi(k1)) / d
    } else {
        (l.abs().powi(k1) + u.powi(k1)) / d
    }
}

/// Exact integral of each monomial over `region`, by the product formula.
pub fn box_integral_weights(region: &BoxRegion, monomials: &[Monomial]) -> ObjectiveFunctional {
    let weights = monomials
        .iter()
        .map(|m| {
            let w = m
                .exponents()
                .iter()
                .zip(region.lower.iter().zip(&region.upper))
                .map(|(&e, (&l, &u))| power_integral(l, u, e))
                .product();
            (m.clone(), w)
        })
        .collect();
    ObjectiveFunctional {
        weights,
        source: WeightSource::BoxIntegral,
    }
}

/// `∫_R |x^alpha| dx` for each monomial; the natural scale for comparing
/// sampled weights of odd monomials whose exact integral vanishes.
pub fn box_abs_integrals(region: &BoxRegion, monomials: &[Monomial]) -> Vec<f64> {
    monomials
        .iter()
        .map(|m| {
            m.exponents()
                .iter()
                .zip(region.lower.iter().zip(&region.upper))
                .map(|(&e, (&l, &u))| abs_power_integral(l, u, e))
                .product()
        })
        .collect()
}

/// Where Monte Carlo points are drawn from.
#[derive(Debug, Clone)]
pub enum SampleRegion {
    Box(BoxRegion),
    /// Points of `set` inside `bounding_box`, by rejection.
    Set {
        set: SemiAlgebraicSet,
        bounding_box: BoxRegion,
    },
}

impl SampleRegion {
    pub fn dim(&self) -> usize {
        match self {
            SampleRegion::Box(b) => b.dim(),
            SampleRegion::Set { bounding_box, .. } => bounding_box.dim(),
        }
    }

    /// Draws one point. Rejection sampling gives up after a million tries
    /// and returns `None` (the set is empty or has negligible volume).
    pub fn draw<R: Rng>(&self, rng: &mut R) -> Option<Vec<f64>> {
        match self {
            SampleRegion::Box(b) => Some(sampling::uniform_in_box(rng, b)),
            SampleRegion::Set { set, bounding_box } => {
                for _ in 0..1_000_000 {
                    let p = sampling::uniform_in_box(rng, bounding_box);
                    if set.contains(&p, 0.0).unwrap_or(false) {
                        return Some(p);
                    }
                }
                None
            }
        }
    }
}

/// Sample means `(1/N) sum_j r_j^alpha` over `n_samples` points.
pub fn monte_carlo_weights(
    sampler: &SampleRegion,
    n_samples: usize,
    seed: u64,
    monomials: &[Monomial],
) -> ObjectiveFunctional {
    let points = draw_points(sampler, n_samples, seed);
    weights_from_points(&points, monomials, WeightSource::MonteCarlo { n_samples, seed })
}

pub(crate) fn draw_points(sampler: &SampleRegion, n_samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = sampling::rng(seed, sampling::stream::OBJECTIVE);
    (0..n_samples).map_while(|_| sampler.draw(&mut rng)).collect()
}

/// Sample means of each monomial over a fixed point set.
pub fn weights_from_points(
    points: &[Vec<f64>],
    monomials: &[Monomial],
    source: WeightSource,
) -> ObjectiveFunctional {
    let n = points.first().map_or(0, Vec::len);
    let max_exp: Vec<u32> = (0..n)
        .map(|k| monomials.iter().map(|m| m.exponents()[k]).max().unwrap_or(0))
        .collect();
    let mut sums = vec![0.0; monomials.len()];
    let mut powers: Vec<Vec<f64>> = max_exp.iter().map(|&e| vec![1.0; e as usize + 1]).collect();
    for p in points {
        for (k, table) in powers.iter_mut().enumerate() {
            for e in 1..table.len() {
                table[e] = table[e - 1] * p[k];
            }
        }
        for (s, m) in sums.iter_mut().zip(monomials) {
            *s += m
                .exponents()
                .iter()
                .enumerate()
                .map(|(k, &e)| powers[k][e as usize])
                .product::<f64>();
        }
    }
    let count = points.len().max(1) as f64;
    ObjectiveFunctional {
        weights: monomials
            .iter()
            .cloned()
            .zip(sums.into_iter().map(|s| s / count))
            .collect(),
        source,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyring::monomial_basis;

    fn m(e: &[u32]) -> Monomial {
        Monomial::new(e.to_vec())
    }

    /// Composite Gauss-Legendre (5 nodes per panel) on [l, u].
    fn gauss_legendre(f: impl Fn(f64) -> f64, l: f64, u: f64, panels: usize) -> f64 {
        let nodes = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        let weights = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let h = (u - l) / panels as f64;
        let mut acc = 0.0;
        for p in 0..panels {
            let a = l + p as f64 * h;
            let mid = a + 0.5 * h;
            for (t, w) in nodes.iter().zip(&weights) {
                acc += w * f(mid + 0.5 * h * t) * 0.5 * h;
            }
        }
        acc
    }

    #[test]
    fn textbook_integral() {
        let b = BoxRegion::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let w = box_integral_weights(&b, &[m(&[2, 1])]);
        assert!((w.weight(&m(&[2, 1])) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn odd_monomial_integrates_to_zero() {
        let b = BoxRegion::symmetric(1, 1.0).unwrap();
        assert_eq!(box_integral_weights(&b, &[m(&[1])]).weight(&m(&[1])), 0.0);
    }

    #[test]
    fn matches_quadrature() {
        let b = BoxRegion::symmetric(2, 2.1).unwrap();
        let w = box_integral_weights(&b, &[m(&[4, 2])]).weight(&m(&[4, 2]));
        let q = gauss_legendre(|t| t.powi(4), -2.1, 2.1, 64)
            * gauss_legendre(|t| t.powi(2), -2.1, 2.1, 64);
        assert!((w - q).abs() <= 1e-12 * q.abs(), "{w} vs {q}");
        let abs = box_abs_integrals(&BoxRegion::new(vec![-0.5], vec![2.0]).unwrap(), &[m(&[3])]);
        let q = gauss_legendre(|t| t.abs().powi(3), -0.5, 0.0, 16)
            + gauss_legendre(|t| t.powi(3), 0.0, 2.0, 16);
        assert!((abs[0] - q).abs() < 1e-12);
    }

    #[test]
    fn box_weights_scale_homogeneously() {
        let basis = monomial_basis(2, 6);
        let b = BoxRegion::new(vec![-0.3, 0.2], vec![1.1, 0.9]).unwrap();
        let t = 1.7;
        let bt = BoxRegion::new(
            b.lower.iter().map(|v| v * t).collect(),
            b.upper.iter().map(|v| v * t).collect(),
        )
        .unwrap();
        let w = box_integral_weights(&b, &basis);
        let wt = box_integral_weights(&bt, &basis);
        for mono in &basis {
            let expect = w.weight(mono) * t.powi(mono.degree() as i32 + 2);
            assert!((wt.weight(mono) - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn single_point_at_origin() {
        let basis = monomial_basis(2, 3);
        let w = weights_from_points(&[vec![0.0, 0.0]], &basis, WeightSource::BoxIntegral);
        for mono in &basis {
            let expect = if mono.is_constant() { 1.0 } else { 0.0 };
            assert_eq!(w.weight(mono), expect);
        }
    }

    #[test]
    fn sampled_weight_near_integral() {
        let b = BoxRegion::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let w = monte_carlo_weights(&SampleRegion::Box(b), 1_000_000, 11, &[m(&[2, 1])]);
        assert!((w.weight(&m(&[2, 1])) - 1.0 / 6.0).abs() < 0.01 / 6.0);
    }

    #[test]
    fn seeds_agree_statistically() {
        let b = BoxRegion::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let basis = monomial_basis(2, 10);
        let s = SampleRegion::Box(b);
        let w1 = monte_carlo_weights(&s, 1_000_000, 1, &basis);
        let w2 = monte_carlo_weights(&s, 1_000_000, 2, &basis);
        for mono in &basis {
            let (a, c) = (w1.weight(mono), w2.weight(mono));
            assert!((a - c).abs() <= 0.02 * a.abs().max(c.abs()), "{mono:?}: {a} vs {c}");
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let b = BoxRegion::symmetric(2, 1.0).unwrap();
        let basis = monomial_basis(2, 4);
        let s = SampleRegion::Box(b);
        assert_eq!(
            monte_carlo_weights(&s, 1000, 5, &basis),
            monte_carlo_weights(&s, 1000, 5, &basis)
        );
    }

    #[test]
    fn set_sampler_stays_in_set() {
        let names = vec!["x1".to_string(), "x2".to_string()];
        let disk = SemiAlgebraicSet::parse(&["1 - x1^2 - x2^2"], &names).unwrap();
        let s = SampleRegion::Set {
            set: disk.clone(),
            bounding_box: BoxRegion::symmetric(2, 1.0).unwrap(),
        };
        let pts = draw_points(&s, 500, 3);
        assert_eq!(pts.len(), 500);
        assert!(pts.iter().all(|p| disk.contains(p, 0.0).unwrap()));
    }
}
