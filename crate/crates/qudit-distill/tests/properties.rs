//! Randomized invariants over the symbolic layer.

use proptest::prelude::*;
use qudit_distill::improve::{recurrence_step, subspace_projection, Partition};
use qudit_distill::protocols::{hashing_outcome, hashing_update, MeasurementPlan};
use qudit_distill::states::{er_isotropic, hashing_rate_isotropic, isotropic_entropy};
use qudit_distill::zmod::{
    collision_probability_brute, collision_probability_closed, dot_mod, is_prime, IndexVector,
};

fn vector(d: u64, len: usize) -> impl Strategy<Value = IndexVector> {
    prop::collection::vec(0..d, len).prop_map(move |e| IndexVector::new(e, d).unwrap())
}

proptest! {
    #[test]
    fn add_sub_roundtrip(d in 2u64..12, e in prop::collection::vec(0u64..12, 1..8)) {
        let entries: Vec<u64> = e.iter().map(|x| x % d).collect();
        let len = entries.len();
        let a = IndexVector::new(entries, d).unwrap();
        let b = IndexVector::zero(len, d).unwrap();
        prop_assert_eq!(a.add(&b).unwrap().sub(&b).unwrap(), a);
    }

    #[test]
    fn dot_distributes_over_addition(
        d in 2u64..10,
        raw in prop::collection::vec((0u64..10, 0u64..10, 0u64..10), 1..6),
    ) {
        let m = IndexVector::new(raw.iter().map(|t| t.0 % d).collect(), d).unwrap();
        let a = IndexVector::new(raw.iter().map(|t| t.1 % d).collect(), d).unwrap();
        let b = IndexVector::new(raw.iter().map(|t| t.2 % d).collect(), d).unwrap();
        let lhs = dot_mod(&m, &a.add(&b).unwrap(), d).unwrap();
        let rhs = (dot_mod(&m, &a, d).unwrap() + dot_mod(&m, &b, d).unwrap()) % d;
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn collision_closed_form_agrees(
        d in 2u64..9,
        raw in prop::collection::vec(0u64..9, 1..4),
    ) {
        let entries: Vec<u64> = raw.iter().map(|x| x % d).collect();
        prop_assume!(entries.iter().any(|&x| x != 0));
        let v = IndexVector::new(entries, d).unwrap();
        prop_assert_eq!(
            collision_probability_closed(&v, d).unwrap(),
            collision_probability_brute(&v, d).unwrap()
        );
    }

    #[test]
    fn hashing_update_drops_one_pair(
        d in 2u64..8,
        n in 2usize..5,
        seed in 0u64..1000,
    ) {
        prop_assume!(is_prime(d));
        let mut rng = qudit_distill::zmod::seed_rng(seed);
        let s = qudit_distill::zmod::sample_uniform_vector(2 * n, d, &mut rng).unwrap();
        let m = qudit_distill::zmod::sample_uniform_vector(2 * n - 2, d, &mut rng).unwrap();
        let plan = MeasurementPlan::new(m, 0, d).unwrap();
        let outcome = hashing_outcome(&s, &plan).unwrap();
        prop_assert!(outcome < d);
        let updated = hashing_update(&s, &plan).unwrap();
        prop_assert_eq!(updated.len(), 2 * n - 2);
        // zero target phase leaves the sources untouched
        if s.entries()[2 * n - 1] == 0 {
            let e = s.entries();
            let expected: Vec<u64> = e[..n - 1]
                .iter()
                .chain(&e[n..2 * n - 1])
                .copied()
                .collect();
            prop_assert_eq!(updated.entries(), &expected[..]);
        }
    }

    #[test]
    fn rates_ordered_and_bounded(d in 2usize..10, f in 0.0f64..1.0) {
        let rate = hashing_rate_isotropic(d, f);
        let er = er_isotropic(d, f);
        prop_assert!(rate >= 0.0);
        prop_assert!(rate <= er + 1e-9);
        prop_assert!(er <= (d as f64).log2() + 1e-12);
        let s = isotropic_entropy(d, f);
        prop_assert!(s >= -1e-12 && s <= 2.0 * (d as f64).log2() + 1e-12);
    }

    #[test]
    fn recurrence_keeps_fidelity_in_range(d in 2usize..17, f in 0.0f64..1.0) {
        let step = recurrence_step(d, f).unwrap();
        prop_assert!((0.0..=1.0).contains(&step.f_prime));
        prop_assert!((0.0..=1.0).contains(&step.p_keep_derived));
        prop_assert!((step.p_keep_derived - d as f64 * step.p_keep_paper).abs() < 1e-12);
    }

    #[test]
    fn subspace_probabilities_sum_below_one(
        d in 2usize..12,
        b in 1usize..6,
        f in 0.0f64..1.0,
    ) {
        prop_assume!(b <= d);
        let partition = Partition::near_equal(d, b).unwrap();
        let blocks = subspace_projection(d, f, &partition).unwrap();
        let total: f64 = blocks.iter().map(|x| x.p).sum();
        prop_assert!(total <= 1.0 + 1e-12);
        for block in blocks {
            prop_assert!((0.0..=1.0).contains(&block.p));
            prop_assert!((0.0..=1.0).contains(&block.f));
        }
    }

    #[test]
    fn vectors_survive_embedding(v in vector(5, 6)) {
        let w = v.embed(7).unwrap();
        prop_assert_eq!(w.modulus(), 7);
        prop_assert_eq!(w.entries(), v.entries());
    }
}
