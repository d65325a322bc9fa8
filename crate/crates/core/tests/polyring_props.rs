use proptest::prelude::*;

use sospdiff_core::polyring::{binomial, monomial_basis, Block};
use sospdiff_core::semialg::parse_polynomial;
use sospdiff_core::{Monomial, Polynomial, VariableSplit};

fn names(n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("x{k}")).collect()
}

fn poly2() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec(((0u32..4, 0u32..4), -5.0f64..5.0), 0..8).prop_map(|terms| {
        let mut p = Polynomial::zero(2);
        for ((i, j), c) in terms {
            p = p.add(&Polynomial::from_term(Monomial::new(vec![i, j]), c)).unwrap();
        }
        p
    })
}

fn point2() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5f64..1.5, 2)
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-10 * (1.0 + scale)
}

fn abs_eval(p: &Polynomial, x: &[f64]) -> f64 {
    p.terms().map(|(m, c)| (c * m.evaluate(x)).abs()).sum()
}

proptest! {
    #[test]
    fn addition_and_multiplication_commute(p in poly2(), q in poly2()) {
        prop_assert_eq!(p.add(&q).unwrap(), q.add(&p).unwrap());
        let (pq, qp) = (p.mul(&q).unwrap(), q.mul(&p).unwrap());
        for (m, c) in pq.terms() {
            prop_assert!(close(c, qp.coeff(m), c.abs()));
        }
        prop_assert_eq!(pq.n_terms(), qp.n_terms());
    }

    #[test]
    fn evaluation_is_a_ring_homomorphism(p in poly2(), q in poly2(), r in poly2(), x in point2()) {
        let (vp, vq, vr) = (p.evaluate(&x).unwrap(), q.evaluate(&x).unwrap(), r.evaluate(&x).unwrap());
        let lhs = p.mul(&q.add(&r).unwrap()).unwrap();
        let scale = abs_eval(&p, &x) * (abs_eval(&q, &x) + abs_eval(&r, &x));
        prop_assert!(close(lhs.evaluate(&x).unwrap(), vp * (vq + vr), scale));
        let assoc = p.mul(&q).unwrap().mul(&r).unwrap();
        let scale = abs_eval(&p, &x) * abs_eval(&q, &x) * abs_eval(&r, &x);
        prop_assert!(close(assoc.evaluate(&x).unwrap(), vp * vq * vr, scale));
        prop_assert!(close(p.sub(&q).unwrap().evaluate(&x).unwrap(), vp - vq, abs_eval(&p, &x) + abs_eval(&q, &x)));
    }

    #[test]
    fn additive_inverse_and_identity(p in poly2()) {
        prop_assert!(p.sub(&p).unwrap().is_zero());
        prop_assert_eq!(p.add(&Polynomial::zero(2)).unwrap(), p.clone());
        prop_assert_eq!(p.mul(&Polynomial::constant(2, 1.0)).unwrap(), p);
    }

    #[test]
    fn shift_compose_matches_shifted_evaluation(p in poly2(), x in point2(), z in point2()) {
        let s = p.shift_compose(VariableSplit::balanced(2)).unwrap();
        let xz: Vec<f64> = x.iter().chain(&z).copied().collect();
        let y: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a + b).collect();
        prop_assert!(close(s.evaluate(&xz).unwrap(), p.evaluate(&y).unwrap(), abs_eval(&s, &xz)));
        prop_assert_eq!(s.degree(), p.degree());
    }

    #[test]
    fn embedding_ignores_the_other_block(p in poly2(), x in point2(), z in point2()) {
        let split = VariableSplit::balanced(2);
        let xz: Vec<f64> = x.iter().chain(&z).copied().collect();
        let ex = p.embed(split, Block::X).unwrap();
        let ez = p.embed(split, Block::Z).unwrap();
        prop_assert_eq!(ex.evaluate(&xz).unwrap(), p.evaluate(&x).unwrap());
        prop_assert_eq!(ez.evaluate(&xz).unwrap(), p.evaluate(&z).unwrap());
        prop_assert_eq!(ex.degree(), p.degree());
    }

    #[test]
    fn affine_substitution_matches_evaluation(p in poly2(), y in point2(), off in point2(), s in prop::collection::vec(0.1f64..3.0, 2)) {
        let q = p.affine_substitute(&off, &s).unwrap();
        let x: Vec<f64> = (0..2).map(|k| off[k] + s[k] * y[k]).collect();
        prop_assert!(close(q.evaluate(&y).unwrap(), p.evaluate(&x).unwrap(), abs_eval(&q, &y) + abs_eval(&p, &x)));
    }

    #[test]
    fn printed_polynomials_parse_back(p in poly2()) {
        let text = p.to_expr(&names(2));
        let q = parse_polynomial(&text, &names(2)).unwrap();
        for (m, c) in p.terms() {
            prop_assert!(close(q.coeff(m), c, c.abs()), "{}", text);
        }
        prop_assert_eq!(p.n_terms(), q.n_terms());
    }
}

#[test]
fn shift_compose_of_disk_polynomial() {
    let p = parse_polynomial("4 - x1^2 - x2^2", &names(2)).unwrap();
    let s = p.shift_compose(VariableSplit::balanced(2)).unwrap();
    for k in 0..100 {
        let t = f64::from(k) * 0.0731;
        let (x1, x2, z1, z2) = (t.sin() * 2.0, t.cos(), (3.0 * t).sin() * 0.5, (5.0 * t).cos() * 0.5);
        // closed form of 4 - (x1 + z1)^2 - (x2 + z2)^2, expanded by hand
        let expanded = 4.0 - x1 * x1 - 2.0 * x1 * z1 - z1 * z1 - x2 * x2 - 2.0 * x2 * z2 - z2 * z2;
        assert!((s.evaluate(&[x1, x2, z1, z2]).unwrap() - expanded).abs() <= 1e-12);
    }
}

#[test]
fn shift_at_zero_offset_is_identity() {
    let p = parse_polynomial("x2^4 - (x1 - 0.5)^3 - (x1 - 0.5)^4", &names(2)).unwrap();
    let s = p.shift_compose(VariableSplit::balanced(2)).unwrap();
    for x in [[0.3, -0.2], [1.7, 0.9], [-1.0, 1.0]] {
        let v = s.evaluate(&[x[0], x[1], 0.0, 0.0]).unwrap();
        assert!((v - p.evaluate(&x).unwrap()).abs() <= 1e-12);
    }
}

#[test]
fn basis_counts() {
    for (n, d, count) in [(1, 4, 5), (2, 2, 6), (2, 5, 21), (3, 5, 56), (4, 4, 70), (6, 5, 462)] {
        assert_eq!(monomial_basis(n, d).len(), count, "n {n} d {d}");
        assert_eq!(binomial(n as u64 + u64::from(d), u64::from(d)), count as u128);
    }
}

#[test]
fn table_polynomials_evaluate_as_printed() {
    let bow = parse_polynomial("0.1 - x1^4 - x2^4 + 10*x1^2 - x2^2", &names(2)).unwrap();
    assert_eq!(bow.evaluate(&[0.0, 0.0]).unwrap(), 0.1);
    assert!((bow.evaluate(&[0.0, 1.0]).unwrap() + 1.9).abs() < 1e-15);
    assert_eq!(bow.degree(), 4);
    let pick = parse_polynomial("x2^4 - (x1 - 0.5)^3 - (x1 - 0.5)^4", &names(2)).unwrap();
    assert!(pick.evaluate(&[0.5, 0.0]).unwrap().abs() < 1e-15);
    let sextic = parse_polynomial(
        "1 - x1^6 - x2^6 - x3^6 + 5*x1^4*x2*x3 - 3*x1^4*x2^2 - 10*x1^2*x2^3*x3 - 3*x1^2*x2^4 + x2^5*x3",
        &names(3),
    )
    .unwrap();
    assert_eq!(sextic.degree(), 6);
    assert_eq!(sextic.n_terms(), 9);
}
