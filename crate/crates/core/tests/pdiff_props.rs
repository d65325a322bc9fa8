use sospdiff_core::verify::brute_force_pdiff_membership;
use sospdiff_core::{compute_pdiff, BoxRegion, Grid, ProblemSpec, SemiAlgebraicSet};

fn names(n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("x{k}")).collect()
}

fn set(exprs: &[String]) -> SemiAlgebraicSet {
    SemiAlgebraicSet::parse(exprs, &names(2)).unwrap()
}

/// Disk of radius `ra` around `center` minus the disk of radius `rb`.
fn disks(ra: f64, rb: f64, center: [f64; 2], deg_c: u32) -> ProblemSpec {
    let [u, v] = center;
    let a = set(&[format!("{} - (x1 - {u})^2 - (x2 - {v})^2", ra * ra)]);
    let b = set(&[format!("{} - x1^2 - x2^2", rb * rb)]);
    let h = ra + 0.1;
    ProblemSpec::new(
        a,
        b,
        BoxRegion::new(vec![u - h, v - h], vec![u + h, v + h]).unwrap(),
        BoxRegion::symmetric(2, rb).unwrap(),
    )
    .with_degrees(deg_c, 2)
}

fn boundary_radius(spec: &ProblemSpec, center: [f64; 2], dir: f64) -> f64 {
    let res = compute_pdiff(spec).unwrap();
    assert!(res.all_valid());
    let c = res.constraints[0].c.as_ref().unwrap();
    let (lo, hi) = (0.0, 3.0);
    let f = |r: f64| c.evaluate(&[center[0] + r * dir.cos(), center[1] + r * dir.sin()]).unwrap();
    assert!(f(lo) > 0.0 && f(hi) < 0.0);
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            lo = mid
        } else {
            hi = mid
        }
    }
    lo
}

#[test]
fn tiny_b_recovers_a() {
    let r = boundary_radius(&disks(2.0, 0.01, [0.0, 0.0], 2), [0.0, 0.0], 0.3);
    assert!(r <= 1.99 + 1e-9 && r > 1.985, "{r}");
}

#[test]
fn larger_b_gives_smaller_c() {
    let mut last = f64::INFINITY;
    for rb in [0.1, 0.4, 0.8] {
        let r = boundary_radius(&disks(2.0, rb, [0.0, 0.0], 2), [0.0, 0.0], 1.0);
        assert!(r <= 2.0 - rb + 1e-9, "{rb}: {r}");
        assert!(r < last);
        last = r;
    }
}

#[test]
fn translation_moves_c_with_a() {
    let base = compute_pdiff(&disks(2.0, 0.5, [0.0, 0.0], 4)).unwrap();
    let t = [0.7, -1.3];
    let moved = compute_pdiff(&disks(2.0, 0.5, t, 4)).unwrap();
    let (c0, c1) = (base.constraints[0].c.as_ref().unwrap(), moved.constraints[0].c.as_ref().unwrap());
    let grid = Grid::uniform(BoxRegion::symmetric(2, 2.0).unwrap(), 15);
    for k in 0..grid.len() {
        let x = grid.point(k);
        let xt = [x[0] + t[0], x[1] + t[1]];
        let (v0, v1) = (c0.evaluate(&x).unwrap(), c1.evaluate(&xt).unwrap());
        assert!((v0 - v1).abs() <= 1e-5 * (1.0 + v0.abs()), "{x:?}: {v0} vs {v1}");
    }
}

#[test]
fn bow_tie_origin_is_not_in_the_difference() {
    let bow = set(&["0.1 - x1^4 - x2^4 + 10*x1^2 - x2^2".to_string()]);
    assert!(bow.contains(&[0.0, 0.0], 0.0).unwrap());
    assert!(!brute_force_pdiff_membership(&bow, &[0.0, 0.0], &[vec![0.0, 1.0]]));
    assert!(brute_force_pdiff_membership(&bow, &[2.0, 0.0], &[vec![0.0, 1.0], vec![1.0, 0.0], vec![-1.0, 0.0]]));
}

#[test]
fn guitar_pick_root() {
    let pick = set(&["x2^4 - (x1 - 0.5)^3 - (x1 - 0.5)^4".to_string()]);
    assert_eq!(pick.constraints()[0].evaluate(&[0.5, 0.0]).unwrap(), 0.0);
    assert!(pick.contains(&[0.5, 0.0], 0.0).unwrap());
    assert!(!pick.contains(&[0.6, 0.0], 0.0).unwrap());
}
