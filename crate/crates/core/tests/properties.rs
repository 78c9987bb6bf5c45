//! Property tests for the structural invariants: profile conservation,
//! the f = t*g identity, the integral identities behind the total
//! variation sandwich, metric axioms, and monotonicity of the success
//! probabilities.

use num::rational::BigRational;
use num::{One, Zero};
use proptest::prelude::*;

use shuffle_reident::numeric::{Exact, Float, Scalar};
use shuffle_reident::profile::ratio_profile;
use shuffle_reident::{
    advantage, asymptotics, beta_n, beta_nk, blanket_decompose, blanket_mass, clone_decompose,
    mc_reduced_game, mc_shuffle_game, total_variation, DiscreteDistribution, Mechanism,
    ShuffleAdversary, UserInput,
};

fn r(num: i64, den: u64) -> BigRational {
    BigRational::from_ratio(num, den)
}

/// Random exact distribution with the given support size.
fn exact_dist_strategy(support: usize) -> impl Strategy<Value = DiscreteDistribution<Exact>> {
    proptest::collection::vec(0u64..=9, support)
        .prop_filter("needs positive mass", |w| w.iter().sum::<u64>() > 0)
        .prop_map(|weights| {
            let total: u64 = weights.iter().sum();
            let probs: Vec<BigRational> =
                weights.iter().map(|&w| r(w as i64, total)).collect();
            DiscreteDistribution::from_probs(probs, Exact).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn profile_conserves_mass_and_property_one(
        p in exact_dist_strategy(5),
        q in exact_dist_strategy(5),
    ) {
        let prof = ratio_profile(&p, &q);
        let mut f_total = prof.f_inf().clone();
        let mut g_total = BigRational::zero();
        let mut prev_t: Option<BigRational> = None;
        for atom in prof.atoms() {
            prop_assert_eq!(&atom.f_mass, &(atom.t.clone() * atom.g_mass.clone()));
            prop_assert!(atom.f_mass >= BigRational::zero());
            prop_assert!(atom.g_mass > BigRational::zero());
            if let Some(prev) = prev_t {
                prop_assert!(atom.t > prev);
            }
            prev_t = Some(atom.t.clone());
            f_total += atom.f_mass.clone();
            g_total += atom.g_mass.clone();
        }
        prop_assert_eq!(f_total, BigRational::one());
        prop_assert_eq!(g_total, BigRational::one());
    }

    #[test]
    fn integral_identities_hold_exactly(
        p in exact_dist_strategy(5),
        q in exact_dist_strategy(5),
    ) {
        let prof = ratio_profile(&p, &q);
        let zero = BigRational::zero();
        let lhs = prof.integral_g(&zero, prof.max_ratio());
        let rhs = prof.max_ratio().clone() - BigRational::one() + prof.f_inf().clone();
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(
            prof.integral_g(&zero, &BigRational::one()),
            total_variation(&p, &q)
        );
    }

    #[test]
    fn tv_is_a_metric_on_random_triples(
        p in exact_dist_strategy(4),
        q in exact_dist_strategy(4),
        s in exact_dist_strategy(4),
    ) {
        let pq = total_variation(&p, &q);
        let qp = total_variation(&q, &p);
        prop_assert_eq!(&pq, &qp);
        prop_assert!(pq >= BigRational::zero());
        prop_assert!(pq <= BigRational::one());
        prop_assert_eq!(total_variation(&p, &p), BigRational::zero());
        if p != q {
            prop_assert!(pq > BigRational::zero());
        }
        let ps = total_variation(&p, &s);
        let sq = total_variation(&s, &q);
        prop_assert!(pq <= ps + sq);
    }

    #[test]
    fn beta_range_and_monotonicity(
        p in exact_dist_strategy(5),
        q in exact_dist_strategy(5),
    ) {
        let prof = ratio_profile(&p, &q);
        let mut prev: Option<BigRational> = None;
        for n in 1..=8u64 {
            let b = beta_n(&prof, n).unwrap();
            prop_assert!(b >= r(1, n));
            prop_assert!(b <= BigRational::one());
            // beta = 1 iff the whole of P sits where Q vanishes (for n > 1)
            if n > 1 {
                prop_assert_eq!(b.is_one(), prof.f_inf().is_one());
            }
            if let Some(prev) = prev {
                prop_assert!(b <= prev);
            }
            prev = Some(b);
        }
        // non-decreasing in k, exactly 1 at k = n
        let n = 6;
        let mut prev = BigRational::zero();
        for k in 1..=n {
            let b = beta_nk(&prof, n, k).unwrap();
            prop_assert!(b >= prev);
            prev = b;
        }
        prop_assert_eq!(prev, BigRational::one());
    }

    #[test]
    fn sandwich_and_remainder_are_nonnegative(
        p in exact_dist_strategy(5),
        q in exact_dist_strategy(5),
        n in 2u64..=30,
    ) {
        // advantage() panics if the sandwich fails, so calling it is the test
        let report = advantage(&p, &q, n).unwrap();
        prop_assert_eq!(
            report.adv_times,
            BigRational::from_u64(n) * report.beta.clone()
        );
        let asym = asymptotics(&p, &q);
        let rem = asym.remainder(n).unwrap();
        prop_assert!(rem >= BigRational::zero());
    }

    #[test]
    fn blanket_mass_dominates_clone_gamma(
        weights in proptest::collection::vec(1u64..=9, 6),
    ) {
        // two-input, three-output mechanism with strictly positive entries
        let rows: Vec<Vec<BigRational>> = weights
            .chunks(3)
            .map(|w| {
                let total: u64 = w.iter().sum();
                w.iter().map(|&x| r(x as i64, total)).collect()
            })
            .collect();
        let mech = Mechanism::new(
            vec!["1".into(), "2".into()],
            vec!["a".into(), "b".into(), "c".into()],
            rows,
            Exact,
        )
        .unwrap();
        let alpha = blanket_mass(&mech);
        let blanket = blanket_decompose(&mech).unwrap();
        prop_assert_eq!(blanket.gamma(), &alpha);
        let clone = clone_decompose(&mech, "1").unwrap();
        prop_assert!(clone.gamma() <= &alpha);
        blanket.verify_against(&mech).unwrap();
        clone.verify_against(&mech).unwrap();
    }
}

#[test]
fn theorem4_remainder_vanishes_strictly_on_geometric_grid() {
    // n * l(n) must decrease strictly toward 0 on n = 10, 10^2, 10^3, 10^4
    let cases = vec![
        (
            DiscreteDistribution::from_probs(vec![r(3, 4), r(1, 4)], Exact).unwrap(),
            DiscreteDistribution::from_probs(vec![r(1, 4), r(3, 4)], Exact).unwrap(),
        ),
        (
            DiscreteDistribution::from_probs(vec![r(1, 2), r(1, 3), r(1, 6)], Exact).unwrap(),
            DiscreteDistribution::from_probs(vec![r(1, 6), r(1, 3), r(1, 2)], Exact).unwrap(),
        ),
    ];
    for (p, q) in cases {
        let asym = asymptotics(&p, &q);
        let mut prev: Option<BigRational> = None;
        for n in [10u64, 100, 1_000, 10_000] {
            let rem = asym.remainder(n).unwrap();
            assert!(rem >= BigRational::zero());
            let scaled = BigRational::from_u64(n) * rem;
            if let Some(prev) = prev {
                assert!(scaled < prev, "n*l(n) must decrease, got {scaled} after {prev}");
            }
            prev = Some(scaled);
        }
        assert!(prev.unwrap().to_f64() < 1e-2);
    }
}

#[test]
fn zipf_float_profile_is_well_formed() {
    let mode = Float::default();
    let p = DiscreteDistribution::zipf(10_000, 0.7, mode).unwrap();
    let q = DiscreteDistribution::uniform(10_000, mode).unwrap();
    let prof = ratio_profile(&p, &q);
    assert_eq!(prof.atoms().len(), 10_000);
    let f_total: f64 = prof.atoms().iter().map(|a| a.f_mass).sum::<f64>() + prof.f_inf();
    assert!((f_total - 1.0).abs() < 1e-9);
    let b = beta_n(&prof, 20).unwrap();
    assert!(b > 0.0 && b < 1.0);
}

/// The paper's side-information games only strengthen the adversary, so
/// the exact-posterior shuffle estimate must not exceed the reduced-game
/// estimate by more than sampling noise.
#[test]
fn shuffle_game_bounded_by_reduced_game() {
    let mech = shuffle_reident::krr::<Exact>(2, r(3, 1), Exact).unwrap();
    let inputs = vec![
        UserInput::Fixed("1".to_string()),
        UserInput::Fixed("2".to_string()),
        UserInput::Fixed("2".to_string()),
        UserInput::Fixed("1".to_string()),
        UserInput::Fixed("2".to_string()),
    ];
    let shuffle = mc_shuffle_game(&mech, &inputs, 0, 30_000, 404, ShuffleAdversary::ExactPermanent)
        .unwrap();
    let p1 = mech.row_distribution(0).unwrap();
    for decomp in [
        clone_decompose(&mech, "1").unwrap(),
        blanket_decompose(&mech).unwrap(),
    ] {
        let reduced = mc_reduced_game(&decomp, &p1, 5, 30_000, 405).unwrap();
        assert!(
            shuffle.estimate <= reduced.estimate + 8.0 * reduced.stderr.max(shuffle.stderr),
            "shuffle {} vs reduced {} ({:?})",
            shuffle.estimate,
            reduced.estimate,
            decomp.kind()
        );
    }
}

#[test]
fn float_and_exact_beta_agree_on_shared_instances() {
    let pf = DiscreteDistribution::new(
        vec!["a".into(), "b".into(), "c".into()],
        vec![0.5, 0.375, 0.125],
        Float::default(),
    )
    .unwrap();
    let qf = DiscreteDistribution::new(
        vec!["a".into(), "b".into(), "c".into()],
        vec![0.25, 0.25, 0.5],
        Float::default(),
    )
    .unwrap();
    let pe = DiscreteDistribution::new(
        vec!["a".into(), "b".into(), "c".into()],
        vec![r(1, 2), r(3, 8), r(1, 8)],
        Exact,
    )
    .unwrap();
    let qe = DiscreteDistribution::new(
        vec!["a".into(), "b".into(), "c".into()],
        vec![r(1, 4), r(1, 4), r(1, 2)],
        Exact,
    )
    .unwrap();
    for n in [1u64, 3, 7, 25] {
        let bf = beta_n(&ratio_profile(&pf, &qf), n).unwrap();
        let be = beta_n(&ratio_profile(&pe, &qe), n).unwrap();
        assert!((bf - be.to_f64()).abs() < 1e-12);
    }
}
