use carnot_core::algebra::{build_free_nilpotent, heisenberg, AlgebraSpec};
use carnot_core::group::*;
use carnot_core::q::{factorial, qi, qr, Q};
use num::Zero;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn groups() -> Vec<AlgebraSpec> {
    [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3)].iter().map(|&(m, r)| build_free_nilpotent(m, r).unwrap()).collect()
}

#[test]
fn associativity_and_inverses_on_random_rational_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for spec in groups() {
        let law = GroupLaw::new(&spec);
        let n = spec.dim();
        for _ in 0..100 {
            let (p, q, w) = (random_rational_point(n, &mut rng), random_rational_point(n, &mut rng), random_rational_point(n, &mut rng));
            assert_eq!(law.product(&law.product(&p, &q), &w), law.product(&p, &law.product(&q, &w)));
            assert!(law.product(&inverse(&p), &p).is_identity());
            assert!(law.product(&p, &inverse(&p)).is_identity());
            assert_eq!(law.product(&p, &Point::identity(n)), p);
        }
    }
}

#[test]
fn heisenberg_law_against_step_two_formula() {
    let law = GroupLaw::new(&heisenberg());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let p = random_rational_point(3, &mut rng);
        let q = random_rational_point(3, &mut rng);
        let (a, b, c) = (&p.coords[0], &p.coords[1], &p.coords[2]);
        let (a2, b2, c2) = (&q.coords[0], &q.coords[1], &q.coords[2]);
        let z = c + c2 + (a * b2 - a2 * b) * qr(1, 2);
        assert_eq!(law.product(&p, &q).coords, vec![a + a2, b + b2, z]);
    }
}

#[test]
fn dilations() {
    let h = heisenberg();
    let one = Point::new(vec![qi(1), qi(1), qi(1)]);
    assert_eq!(dilate(&h, &qi(2), &one).coords, vec![qi(2), qi(2), qi(4)]);
    assert_eq!(dilate(&h, &qi(1), &one), one);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for spec in groups() {
        let law = GroupLaw::new(&spec);
        let rf = factorial(spec.r) as usize;
        for _ in 0..30 {
            let (p, q) = (random_rational_point(spec.dim(), &mut rng), random_rational_point(spec.dim(), &mut rng));
            let (s, t) = (qr(3, 2), qr(2, 5));
            assert_eq!(dilate(&spec, &s, &dilate(&spec, &t, &p)), dilate(&spec, &(&s * &t), &p));
            assert_eq!(dilate(&spec, &s, &law.product(&p, &q)), law.product(&dilate(&spec, &s, &p), &dilate(&spec, &s, &q)));
            let lhs = gauge_norm_pow(&spec, &dilate(&spec, &s, &p));
            assert_eq!(lhs, num::pow(s.clone(), 2 * rf) * gauge_norm_pow(&spec, &p));
        }
    }
}

#[test]
fn gauge_values() {
    let h = heisenberg();
    assert_eq!(gauge_norm(&h, &Point::identity(3)), 0.0);
    assert_eq!(gauge_norm(&h, &Point::new(vec![qi(1), qi(0), qi(0)])), 1.0);
    // |(0,0,4)|⁴ = 16.
    assert_eq!(gauge_norm_pow(&h, &Point::new(vec![qi(0), qi(0), qi(4)])), qi(16));
    assert!((gauge_norm(&h, &Point::new(vec![qi(0), qi(0), qi(4)])) - 2.0).abs() < 1e-15);
}

#[test]
fn distance_is_left_invariant_and_separates() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for spec in groups() {
        let law = GroupLaw::new(&spec);
        let n = spec.dim();
        for _ in 0..30 {
            let (p, q, g) = (random_rational_point(n, &mut rng), random_rational_point(n, &mut rng), random_rational_point(n, &mut rng));
            let d = gauge_norm_pow(&spec, &law.product(&inverse(&q), &p));
            let dg = gauge_norm_pow(&spec, &law.product(&inverse(&law.product(&g, &q)), &law.product(&g, &p)));
            assert_eq!(d, dg);
            assert_eq!(gauge_distance(&law, &p, &p), 0.0);
            assert_eq!(d.is_zero(), p == q);
        }
    }
}

#[test]
fn quasi_triangle_constant_is_at_least_one_half() {
    let c = quasi_triangle_constant(&GroupLaw::new(&heisenberg()), 2000, 1);
    assert!(c > 0.5 && c.is_finite());
}

#[test]
fn abelian_interval_volume() {
    let spec = build_free_nilpotent(1, 1).unwrap();
    let v = ball_volume_estimate(&spec, 1.0, 10_000, 1);
    assert!(v.ci_low <= 2.0 && 2.0 <= v.ci_high);
    assert_eq!(v.estimate, 2.0);
}

#[test]
fn heisenberg_ball_volume_scales_with_q() {
    let h = heisenberg();
    let a = ball_volume_estimate(&h, 1.0, 1_000_000, 17);
    let b = ball_volume_estimate(&h, 2.0, 1_000_000, 17);
    let ratio = b.estimate / a.estimate;
    assert!((ratio / 16.0 - 1.0).abs() < 0.03, "{ratio}");
}

#[test]
fn volume_constant_is_radius_independent() {
    let h = heisenberg();
    let est: Vec<BallVolume> = [0.5, 1.0, 2.0].iter().map(|&r| ball_volume_estimate(&h, r, 200_000, 23)).collect();
    let w: Vec<(f64, f64, f64)> = est.iter().map(|v| {
        let s = v.radius.powi(4);
        (v.estimate / s, v.ci_low / s, v.ci_high / s)
    }).collect();
    for x in &w {
        for y in &w {
            // Intervals overlap.
            assert!(x.1 <= y.2 && y.1 <= x.2, "{w:?}");
        }
    }
}

#[test]
fn volume_is_deterministic_given_seed() {
    let h = heisenberg();
    assert_eq!(ball_volume_estimate(&h, 1.0, 50_000, 4), ball_volume_estimate(&h, 1.0, 50_000, 4));
}

proptest! {
    #[test]
    fn float_and_exact_products_agree(c in proptest::collection::vec((-9i64..9, 1i64..5), 6)) {
        let law = GroupLaw::new(&heisenberg());
        let p = Point::new(c[..3].iter().map(|&(a, b)| qr(a, b)).collect::<Vec<Q>>());
        let q = Point::new(c[3..].iter().map(|&(a, b)| qr(a, b)).collect::<Vec<Q>>());
        let exact = law.product(&p, &q).to_f64().coords;
        let float = law.product_f64(&p.to_f64().coords, &q.to_f64().coords);
        for (x, y) in exact.iter().zip(&float) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}
