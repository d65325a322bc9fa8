use proptest::prelude::*;

use sospdiff_core::objective::{box_integral_weights, monte_carlo_weights, SampleRegion};
use sospdiff_core::polyring::monomial_basis;
use sospdiff_core::{BoxRegion, Monomial, SemiAlgebraicSet};

fn names(n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("x{k}")).collect()
}

proptest! {
    #[test]
    fn containment_is_monotone_in_slack(x in prop::collection::vec(-3.0f64..3.0, 2), s1 in 0.0f64..1.0, s2 in 0.0f64..1.0) {
        let set = SemiAlgebraicSet::parse(&["4 - x1^2 - x2^2", "x1 + 1.5"], &names(2)).unwrap();
        let (lo, hi) = (s1.min(s2), s1.max(s2));
        if set.contains(&x, lo).unwrap() {
            prop_assert!(set.contains(&x, hi).unwrap());
        }
    }
}

fn rms_error(n: usize, seeds: u64) -> f64 {
    let region = BoxRegion::symmetric(2, 1.0).unwrap();
    let ms: Vec<Monomial> = monomial_basis(2, 4).into_iter().filter(|m| m.degree() == 4).collect();
    let exact = box_integral_weights(&region, &ms);
    let mut sum = 0.0;
    for seed in 0..seeds {
        let mc = monte_carlo_weights(&SampleRegion::Box(region.clone()), n, seed, &ms);
        for m in &ms {
            let e = mc.weight(m) * region.volume() - exact.weight(m);
            sum += e * e;
        }
    }
    (sum / (seeds as f64 * ms.len() as f64)).sqrt()
}

#[test]
fn monte_carlo_error_shrinks_like_inverse_root_n() {
    // 100x more points should cut the error about 10x.
    let ratio = rms_error(1_000, 40) / rms_error(100_000, 40);
    assert!((6.0..16.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn rejection_sampler_stays_in_the_set() {
    let set = SemiAlgebraicSet::parse(&["0.25 - x1^2 - x2^2"], &names(2)).unwrap();
    let sampler = SampleRegion::Set {
        set: set.clone(),
        bounding_box: BoxRegion::symmetric(2, 0.5).unwrap(),
    };
    let w = monte_carlo_weights(&sampler, 20_000, 3, &monomial_basis(2, 2));
    // mean of x1^2 over a disk of radius r is r^2 / 4
    let m = Monomial::new(vec![2, 0]);
    assert!((w.weight(&m) - 0.0625).abs() < 2e-3, "{}", w.weight(&m));
    assert!((w.weight(&Monomial::new(vec![0, 0])) - 1.0).abs() < 1e-15);
}
