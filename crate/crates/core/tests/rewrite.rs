use carnot_core::algebra::{build_free_nilpotent, builtin, engel, heisenberg, BasisLabel};
use carnot_core::fields::FieldSet;
use carnot_core::poly::Polynomial;
use carnot_core::rewrite::engine::{is_t2_shape, sweep};
use carnot_core::rewrite::expand::{f_terms, fi_terms, Slot, StructuralTerm, Target};
use carnot_core::rewrite::word::ExactLetter;
use carnot_core::rewrite::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn prof(r: usize, c: &[usize]) -> LayerProfile {
    LayerProfile::new(r, c.to_vec()).unwrap()
}

/// Unrolls the one-letter-at-a-time definition directly, without the closed
/// form: returns `(slots, target)` lists for `f_i` and `f`.
fn interpret(layers: &[usize], step: usize) -> (Vec<(Vec<Slot>, Target)>, Vec<(Vec<Slot>, Target)>) {
    let mut fi = vec![(Vec::new(), Target::Fi)];
    let mut f = vec![(Vec::new(), Target::F)];
    for t in 1..=layers.len() {
        let v_prev: Vec<Slot> = (1..t).rev().map(Slot::Diff).collect();
        let prepend = |s: Slot, w: &(Vec<Slot>, Target)| {
            let mut v = vec![s];
            v.extend_from_slice(&w.0);
            (v, w.1)
        };
        let mut new_fi: Vec<_> = fi.iter().map(|w| prepend(Slot::Diff(t), w)).collect();
        let mut lo = vec![Slot::LoComm(t)];
        lo.extend_from_slice(&v_prev);
        new_fi.push((lo, Target::U));
        let mut new_f: Vec<_> = f.iter().map(|w| prepend(Slot::Diff(t), w)).collect();
        let mut hi = vec![Slot::HiComm(t), Slot::HorJ];
        hi.extend_from_slice(&v_prev);
        new_f.push((hi, Target::U));
        new_f.extend(fi.iter().map(|w| prepend(Slot::HiComm(t), w)));
        fi = new_fi;
        f = new_f;
    }
    let alive = |w: &(Vec<Slot>, Target)| {
        !w.0.iter().any(|s| matches!(s, Slot::HiComm(t) | Slot::LoComm(t) if layers[t - 1] >= step))
    };
    (fi.into_iter().filter(alive).collect(), f.into_iter().filter(alive).collect())
}

fn shape(terms: &[StructuralTerm]) -> Vec<(Vec<Slot>, Target)> {
    let mut v: Vec<_> = terms.iter().map(|t| (t.slots.clone(), t.target)).collect();
    v.sort();
    v
}

fn check_against_interpreter(p: &LayerProfile) {
    let layers = p.letters_innermost_first();
    let (mut fi, mut f) = interpret(&layers, p.step);
    fi.sort();
    f.sort();
    let low = p.lowest_layer().unwrap_or(p.step);
    assert_eq!(shape(&fi_terms(p, low)), fi, "f_i terms for {p}");
    assert_eq!(shape(&f_terms(p, low)), f, "f terms for {p}");
}

#[test]
fn expansion_matches_recursive_interpreter() {
    check_against_interpreter(&prof(3, &[2, 1]));
    check_against_interpreter(&prof(4, &[1, 1, 1]));
    for r in 2..=4 {
        for p in LayerProfile::enumerate(r, 2, 4) {
            check_against_interpreter(&p);
        }
    }
}

#[test]
fn expansion_term_counts() {
    // Single lowest-layer letter below a top layer.
    let p = prof(3, &[1, 0]);
    assert_eq!(expand_fi(3, &p).len(), 2);
    assert_eq!(expand_f(3, &p).len(), 3);
    assert_eq!(expand_fi(3, &prof(3, &[0, 0])).len(), 1);
    assert_eq!(expand_fi(3, &prof(3, &[2, 1])).len(), 3);
    assert_eq!(expand_f(3, &prof(4, &[1, 1, 1])).len(), 6);
}

#[test]
fn shift_examples() {
    let named = |layer, index| Letter::Named { layer, index };
    // q = 1 letter in front, k = 2 letters passed, layer 3 on step 4.
    let w = DerivativeWord::new(vec![named(2, 1), Letter::Anonymous { layer: 3 }, named(2, 2), named(2, 3)]);
    let s = shift_commutator(&w, 1, 4).unwrap();
    assert_eq!(s.passed, 2);
    assert_eq!(s.remainders.len(), 2);
    assert!(s.remainders.iter().all(|r| r.letters.contains(&Letter::Anonymous { layer: 5 })));
    assert!(s.surviving(4).is_empty());
    assert!(s.remainders.iter().all(|r| r.len() == w.len() - 1));
    assert_eq!(s.principal.letters, vec![named(2, 1), named(2, 2), named(2, 3), Letter::Anonymous { layer: 3 }]);
}

#[test]
fn classification_of_named_families() {
    let input = prof(4, &[2, 1, 0]);
    let succ = t1_successors(&input).unwrap();
    assert!(!succ.is_empty());
    let p1 = succ
        .iter()
        .find(|s| s.rule == Rule::Family(Family::P1) && s.profile.total() == input.total())
        .unwrap();
    assert_eq!(p1.case, Case::LowestDecrease);
    assert_eq!((p1.profile.get(2), p1.profile.get(3)), (input.get(2) - 1, input.get(3) + 1));
    let q1 =
        succ.iter().find(|s| s.rule == Rule::Family(Family::Q1) && matches!(s.case, Case::AdjacentShift { .. })).unwrap();
    assert_eq!(q1.profile.get(2), input.get(2));
    let rems: Vec<_> = succ.iter().filter(|s| s.rule == Rule::CommutatorShift).collect();
    assert!(rems.iter().any(|s| s.case == Case::TotalDecrease));
    // Passing the horizontal letter keeps the count but lifts a layer.
    assert!(rems.iter().all(|s| s.profile.total() <= input.total() && s.profile.measure() < input.measure()));
}

#[test]
fn t2_examples() {
    let out = t2_step(&prof(4, &[1, 0, 2])).unwrap();
    assert!(out.successors.iter().all(|j| j.get(2) == 0));
    assert!(out.lowest_drops && out.others_kept && out.measure_drops);
    assert!(t2_step(&prof(4, &[0, 0, 2])).unwrap().successors.is_empty());
    let out = t2_step(&prof(3, &[2, 1])).unwrap();
    assert!(out.measure_drops);
    assert!(out.successors.iter().all(|j| j.measure() < 5));
}

#[test]
fn reduction_examples() {
    let t = reduce_to_base(&prof(4, &[1, 1, 1])).unwrap();
    assert!(t.depth <= 6);
    assert!(t.measure_strictly_decreases());
    for n in 0..6 {
        assert!(reduce_to_base(&prof(2, &[n])).unwrap().depth <= n);
    }
    let json = serde_json::to_value(&t).unwrap();
    let step0 = &json["steps"][0];
    for key in ["rule", "in_profile", "out_profiles", "W_in", "W_out"] {
        assert!(step0.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn exhaustive_sweep_terminates() {
    let rep = sweep(&[2, 3, 4], 6);
    assert!(rep.pass(), "{:?}", rep.failures);
    assert_eq!(rep.classification_failures, 0);
    assert!(!rep.cases.contains_key("multi-layer-shift"));
}

#[test]
fn multi_layer_shift_needs_step_five() {
    let succ = t1_successors(&prof(5, &[1, 1, 1, 0])).unwrap();
    let m: Vec<_> = succ.iter().filter(|s| s.case == Case::MultiLayerShift).collect();
    assert!(!m.is_empty());
    assert!(m.iter().any(|s| s.rule == Rule::Family(Family::P6) && s.profile.counts == vec![1, 0, 1, 1]));
    assert!(reduce_to_base(&prof(5, &[1, 1, 1, 0])).is_ok());
}

#[test]
fn obstruction_only_for_layer_two() {
    let r = naive_order_obstruction();
    assert_eq!(r.obstructed, vec![2]);
    let by_z = |z: usize| r.cases.iter().find(|c| c.z_layer == z).unwrap();
    assert!(by_z(3).covered && by_z(4).covered);
    assert!(by_z(2).circular);
    assert_eq!(by_z(2).target_profile, vec![1, 1, 1]);
}

#[test]
fn exact_rewrites_on_constant_vanish() {
    let spec = engel();
    let fields = FieldSet::new(&spec);
    let word = vec![ExactLetter::basis(&spec, BasisLabel::new(2, 1)), ExactLetter::basis(&spec, BasisLabel::new(1, 1))];
    let rep = verify_rewrite_identity(&fields, &IdentityCase::Shift { word, at: 0 }, &[Polynomial::one()]);
    assert!(rep.pass);
}

#[test]
fn randomized_exact_soundness() {
    let specs = vec![heisenberg(), engel(), build_free_nilpotent(2, 3).unwrap(), build_free_nilpotent(3, 2).unwrap()];
    let fields: Vec<FieldSet> = specs.iter().map(FieldSet::new).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..60 {
        let fs = &fields[k % fields.len()];
        let (case, u) = random_identity_case(fs, &mut rng);
        let rep = verify_rewrite_identity(fs, &case, &u);
        assert!(rep.pass, "case {k}: {}", rep.rule);
    }
}

#[test]
fn step_four_soundness() {
    let fs = FieldSet::new(&builtin("free:2,4").unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let (case, u) = random_identity_case(&fs, &mut rng);
        assert!(verify_rewrite_identity(&fs, &case, &u).pass);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reduction_measure_decreases(r in 2usize..=4, seed in any::<u64>()) {
        let mut cnt = vec![0usize; r - 1];
        let mut s = seed;
        for c in cnt.iter_mut() {
            *c = (s % 3) as usize;
            s /= 3;
        }
        let p = LayerProfile::new(r, cnt).unwrap();
        let t = reduce_to_base(&p).unwrap();
        prop_assert!(t.measure_strictly_decreases());
        prop_assert!(t.depth <= p.measure());
        for st in &t.steps {
            for o in &st.out_profiles {
                let op = LayerProfile::new(r, o.clone()).unwrap();
                prop_assert!(op.measure() < st.w_in);
            }
        }
    }

    #[test]
    fn t2_shapes_drop_lowest(r in 3usize..=4, low in 1usize..=3, top in 0usize..=3) {
        let mut c = vec![0usize; r - 1];
        c[0] = low;
        c[r - 2] += top;
        let p = LayerProfile::new(r, c).unwrap();
        prop_assume!(is_t2_shape(&p));
        let out = t2_step(&p).unwrap();
        prop_assert!(out.successors.iter().all(|j| j.get(2) < p.get(2)));
    }
}
