use carnot_core::algebra::*;
use carnot_core::q::{qi, qr, Q};
use num::Zero;
use proptest::prelude::*;

const FREE: [(usize, usize); 5] = [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3)];

fn mobius(n: usize) -> i64 {
    let (mut n, mut sign, mut p) = (n, 1i64, 2);
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        -sign
    } else {
        sign
    }
}

/// Witt's formula `(1/k) Σ_{d | k} μ(d) m^{k/d}`.
fn witt(m: usize, k: usize) -> usize {
    let s: i64 = (1..=k).filter(|d| k % d == 0).map(|d| mobius(d) * (m as i64).pow((k / d) as u32)).sum();
    (s / k as i64) as usize
}

fn e(spec: &AlgebraSpec, k: usize, i: usize) -> AlgebraElement {
    spec.basis_element(BasisLabel::new(k, i))
}

#[test]
fn witt_oracle_sanity() {
    assert_eq!((1..=4).map(|k| witt(2, k)).collect::<Vec<_>>(), vec![2, 1, 2, 3]);
    assert_eq!((1..=3).map(|k| witt(3, k)).collect::<Vec<_>>(), vec![3, 3, 8]);
}

#[test]
fn free_dims_match_witt_counts() {
    for m in 1..=3 {
        for r in 1..=4 {
            let spec = build_free_nilpotent(m, r).unwrap();
            let want: Vec<usize> = (1..=r).map(|k| witt(m, k)).collect();
            if want.contains(&0) {
                continue;
            }
            assert_eq!(spec.layer_dims, want, "free({m},{r})");
        }
    }
}

#[test]
fn documented_dimensions() {
    assert_eq!(build_free_nilpotent(2, 2).unwrap().layer_dims, vec![2, 1]);
    assert_eq!(build_free_nilpotent(2, 3).unwrap().layer_dims, vec![2, 1, 2]);
    let a = build_free_nilpotent(1, 1).unwrap();
    assert_eq!(a.layer_dims, vec![1]);
    assert!(a.bracket(&e(&a, 1, 1), &e(&a, 1, 1)).is_zero());
}

#[test]
fn exact_invariants_on_free_algebras() {
    for (m, r) in FREE {
        let spec = build_free_nilpotent(m, r).unwrap();
        let n = spec.dim();
        let basis: Vec<AlgebraElement> = (0..n).map(|k| spec.basis_element_flat(k)).collect();
        for a in 0..n {
            for b in 0..n {
                let ab = spec.bracket(&basis[a], &basis[b]);
                assert!(ab.add(&spec.bracket(&basis[b], &basis[a])).is_zero());
                let target = spec.layer_of(a) + spec.layer_of(b);
                assert!(ab.support().all(|(k, _)| spec.layer_of(k) == target), "grading in free({m},{r})");
                for c in 0..n {
                    let j = spec
                        .bracket(&basis[a], &spec.bracket(&basis[b], &basis[c]))
                        .add(&spec.bracket(&basis[b], &spec.bracket(&basis[c], &basis[a])))
                        .add(&spec.bracket(&basis[c], &spec.bracket(&basis[a], &basis[b])));
                    assert!(j.is_zero(), "Jacobi in free({m},{r})");
                }
            }
        }
        assert!(spec.invariant_violations().is_empty());
        assert!(verify_stratification(&spec).pass);
    }
}

#[test]
fn basis_cap_is_enforced() {
    assert!(matches!(build_free_nilpotent_capped(3, 4, 10), Err(AlgebraError::BasisCap { cap: 10 })));
    assert!(build_free_nilpotent(0, 2).is_err());
}

#[test]
fn heisenberg_table_matches_free_step_two() {
    let h = heisenberg();
    let f = build_free_nilpotent(2, 2).unwrap();
    assert_eq!(h.layer_dims, f.layer_dims);
    let hb = h.bracket(&e(&h, 1, 1), &e(&h, 1, 2));
    let fb = f.bracket(&e(&f, 1, 1), &e(&f, 1, 2));
    // Both span the centre; the free basis may differ by a sign.
    assert_eq!(hb, e(&h, 2, 1));
    assert!(fb == e(&f, 2, 1) || fb == e(&f, 2, 1).neg());
    assert!(h.bracket(&e(&h, 2, 1), &e(&h, 1, 1)).is_zero());
}

#[test]
fn grading_violation_is_reported() {
    let t = [TableEntry { a: BasisLabel::new(1, 1), b: BasisLabel::new(1, 2), out: vec![(BasisLabel::new(1, 1), qi(1))] }];
    let err = build_from_table(&[2, 1], &t).unwrap_err();
    assert!(err.violations().iter().any(|v| matches!(v, Violation::Grading { .. })));
}

#[test]
fn stratification_violation_is_reported() {
    let err = build_from_table(&[2, 1], &[]).unwrap_err();
    assert!(err.violations().iter().any(|v| matches!(v, Violation::Stratification { layer: 1, rank: 0, expected: 1 })));
}

#[test]
fn jacobi_violation_is_reported() {
    // [x1,x2]=y3, [x2,x3]=y1, [x3,x1]=y2 and only [x1,y1]=z: the Jacobi sum on x1,x2,x3 is z.
    let l = BasisLabel::new;
    let t = [
        TableEntry { a: l(1, 1), b: l(1, 2), out: vec![(l(2, 3), qi(1))] },
        TableEntry { a: l(1, 2), b: l(1, 3), out: vec![(l(2, 1), qi(1))] },
        TableEntry { a: l(1, 3), b: l(1, 1), out: vec![(l(2, 2), qi(1))] },
        TableEntry { a: l(1, 1), b: l(2, 1), out: vec![(l(3, 1), qi(1))] },
    ];
    let err = build_from_table(&[3, 3, 1], &t).unwrap_err();
    assert!(err.violations().iter().any(|v| matches!(v, Violation::Jacobi { .. })), "{err}");
}

#[test]
fn homogeneous_dimensions() {
    assert_eq!(heisenberg().homogeneous_dimension(), 4);
    assert_eq!(build_free_nilpotent(3, 1).unwrap().homogeneous_dimension(), 3);
    assert_eq!(build_free_nilpotent(2, 3).unwrap().homogeneous_dimension(), 10);
    assert_eq!(engel().homogeneous_dimension(), 7);
}

#[test]
fn stratification_reports() {
    let rep = verify_stratification(&heisenberg());
    assert!(rep.pass && rep.layers.len() == 1 && rep.layers[0].rank == 1);
    let abelian = verify_stratification(&build_free_nilpotent(2, 1).unwrap());
    assert!(abelian.pass && abelian.layers.is_empty());
    assert!(verify_stratification(&engel()).pass);
}

#[test]
fn builtin_names() {
    assert_eq!(builtin("free:2,3").unwrap().layer_dims, vec![2, 1, 2]);
    assert_eq!(builtin("engel").unwrap().layer_dims, vec![2, 1, 1]);
    assert!(builtin("sl2").is_err());
    assert!(builtin("free:2").is_err());
}

#[test]
fn json_model_for_table_spec() {
    let spec = engel();
    let text = serde_json::to_string(&spec.to_json_model()).unwrap();
    let back = AlgebraSpec::from_json_model(&serde_json::from_str(&text).unwrap()).unwrap();
    assert_eq!(back.describe_brackets(), spec.describe_brackets());
    let bad: SpecJson = serde_json::from_str(r#"{"kind":"free","m":2,"r":3,"layer_dims":[2,1,1]}"#).unwrap();
    assert!(AlgebraSpec::from_json_model(&bad).is_err());
}

fn element(spec: &AlgebraSpec, layer: usize, c: &[i64]) -> AlgebraElement {
    let mut x = AlgebraElement::zero(spec.dim());
    for (t, k) in spec.layer_range(layer).enumerate() {
        x.coeffs[k] = qr(c[t % c.len()], 1 + (t as i64 % 3));
    }
    x
}

proptest! {
    #[test]
    fn brackets_of_homogeneous_elements_are_homogeneous(
        g in 0usize..5, j in 1usize..4, k in 1usize..4,
        a in proptest::collection::vec(-5i64..5, 1..8), b in proptest::collection::vec(-5i64..5, 1..8)
    ) {
        let (m, r) = FREE[g];
        let spec = build_free_nilpotent(m, r).unwrap();
        prop_assume!(j <= r && k <= r);
        let x = element(&spec, j, &a);
        let y = element(&spec, k, &b);
        let z = spec.bracket(&x, &y);
        if z.is_zero() {
            prop_assert!(j + k > r || x.is_zero() || y.is_zero() || z.coeffs.iter().all(Q::is_zero));
        } else {
            prop_assert_eq!(spec.homogeneous_layer(&z), Some(j + k));
        }
    }
}
