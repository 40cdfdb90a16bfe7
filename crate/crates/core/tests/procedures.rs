use mtp_core::classic::{
    self, single_step, step_down, step_up, thresholds, MtpKind, MtpMethod, Regime, ThresholdSeq,
};
use mtp_core::PValueSet;
use proptest::prelude::*;

/// Literal `max { r : p_(r) <= delta_r }` over r = 0..=m with p_(0) = 0.
fn brute_step_up(p: &[f64], deltas: &[f64]) -> usize {
    let mut sorted = p.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best = 0;
    for r in 0..=sorted.len() {
        let ok = r == 0 || sorted[r - 1] <= deltas[r - 1];
        if ok && r > best {
            best = r;
        }
    }
    best
}

fn sequential_step_down(p: &[f64], deltas: &[f64]) -> usize {
    let mut sorted = p.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut i = 0;
    while i < sorted.len() {
        if sorted[i] > deltas[i] {
            break;
        }
        i += 1;
    }
    i
}

/// p-values with plenty of ties and exact boundary hits.
fn pvalues(max_m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        prop_oneof![
            0.0f64..=1.0,
            0.0f64..0.06,
            prop::sample::select(vec![0.0, 0.01, 0.0125, 0.025, 0.05, 1.0]),
        ],
        1..=max_m,
    )
}

fn nondecreasing(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..0.2, m).prop_map(|mut v| {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    })
}

fn count(kind: MtpKind, ps: &PValueSet) -> usize {
    classic::apply(&MtpMethod::new(kind, 0.05).unwrap(), ps)
        .unwrap()
        .count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn step_engines_match_oracles(
        (p, d) in pvalues(10).prop_flat_map(|p| { let m = p.len(); (Just(p), nondecreasing(m)) })
    ) {
        let ps = PValueSet::from_values(p.clone()).unwrap();
        let sp = ps.order_statistics();
        let up = ThresholdSeq::new(d.clone(), Regime::StepUp).unwrap();
        let down = ThresholdSeq::new(d.clone(), Regime::StepDown).unwrap();
        let ru = step_up(&sp, &up).unwrap();
        let rd = step_down(&sp, &down).unwrap();
        prop_assert_eq!(ru.count, brute_step_up(&p, &d));
        prop_assert_eq!(rd.count, sequential_step_down(&p, &d));
        prop_assert!(rd.count <= ru.count);
        // the rejected set is the `count` smallest p-values
        prop_assert_eq!(ru.rejected.len(), ru.count);
        let max_rej = ru.rejected.iter().map(|&i| p[i]).fold(f64::NEG_INFINITY, f64::max);
        let min_kept = (0..p.len()).filter(|i| !ru.rejected.contains(i)).map(|i| p[i]).fold(f64::INFINITY, f64::min);
        prop_assert!(ru.count == 0 || max_rej <= min_kept);
    }

    #[test]
    fn dominance_between_methods(p in pvalues(60)) {
        let ps = PValueSet::from_values(p).unwrap();
        let bonf = count(MtpKind::Bonferroni, &ps);
        prop_assert!(count(MtpKind::BenjaminiYekutieli, &ps) <= count(MtpKind::BenjaminiHochberg, &ps));
        prop_assert!(count(MtpKind::Holm, &ps) >= bonf);
        prop_assert!(count(MtpKind::Sidak, &ps) >= bonf);
    }

    #[test]
    fn constant_step_up_is_single_step(p in pvalues(30), c in 0.0f64..0.1) {
        let ps = PValueSet::from_values(p).unwrap();
        let m = ps.len();
        let up = ThresholdSeq::new(vec![c; m], Regime::StepUp).unwrap();
        let single = ThresholdSeq::new(vec![c], Regime::SingleStep).unwrap();
        prop_assert_eq!(
            step_up(&ps.order_statistics(), &up).unwrap().count,
            single_step(&ps, &single).unwrap().count
        );
    }

    #[test]
    fn threshold_dominance_is_monotone(
        (p, d, bump) in pvalues(20).prop_flat_map(|p| {
            let m = p.len();
            (Just(p), nondecreasing(m), prop::collection::vec(0.0f64..0.05, m))
        })
    ) {
        let mut acc = 0.0;
        let bigger: Vec<f64> = d.iter().zip(&bump).map(|(x, b)| { acc += b; (x + acc).min(1.0) }).collect();
        let sp = PValueSet::from_values(p).unwrap().order_statistics();
        let lo = step_up(&sp, &ThresholdSeq::new(d, Regime::StepUp).unwrap()).unwrap().count;
        let hi = step_up(&sp, &ThresholdSeq::new(bigger, Regime::StepUp).unwrap()).unwrap().count;
        prop_assert!(lo <= hi);
    }

    #[test]
    fn order_statistics_invariants(p in prop::collection::vec(0.0f64..=1.0, 1..200), seed in any::<u64>()) {
        let ps = PValueSet::from_values(p.clone()).unwrap();
        let sp = ps.order_statistics();
        prop_assert!(sp.sorted().windows(2).all(|w| w[0] <= w[1]));
        let mut seen = vec![false; p.len()];
        for &i in sp.rank_to_original() {
            prop_assert!(!seen[i]);
            seen[i] = true;
        }
        prop_assert_eq!(sp.unsort(), p.clone());
        // stable: tied values keep input order
        for w in sp.rank_to_original().windows(2) {
            if p[w[0]] == p[w[1]] {
                prop_assert!(w[0] < w[1]);
            }
        }
        // any shuffle of the multiset sorts to the same array
        let mut shuffled = p.clone();
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let other = PValueSet::from_values(shuffled).unwrap().order_statistics();
        prop_assert_eq!(other.sorted(), sp.sorted());
    }
}

#[test]
fn thousand_uniform_values_sort_correctly() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let p: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
    let sp = PValueSet::from_values(p.clone())
        .unwrap()
        .order_statistics();
    let mut check = p.clone();
    check.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(sp.sorted(), &check[..]);
    let mut ranks = sp.rank_to_original().to_vec();
    ranks.sort_unstable();
    assert_eq!(ranks, (0..1000).collect::<Vec<_>>());
}

#[test]
fn generic_step_up_reproduces_bh_and_by() {
    use mtp_core::dp::{baseline_by, shape_from_measure, RandomMeasure, ShapeSeq};
    let p = vec![0.001, 0.008, 0.011, 0.02, 0.03, 0.041, 0.2, 0.6];
    let ps = PValueSet::from_values(p).unwrap();
    let m = ps.len();
    let linear = ShapeSeq::new((1..=m).map(|r| r as f64).collect()).unwrap();
    assert_eq!(
        count(MtpKind::GenericStepUp(linear), &ps),
        count(MtpKind::BenjaminiHochberg, &ps)
    );
    let by_shape =
        shape_from_measure(&RandomMeasure::new(baseline_by(m).probs().to_vec()).unwrap());
    assert_eq!(
        count(MtpKind::GenericStepUp(by_shape), &ps),
        count(MtpKind::BenjaminiYekutieli, &ps)
    );
    // point mass on the first bin is Bonferroni as a step-up
    let bonf = shape_from_measure(&RandomMeasure::point_mass(m, 1).unwrap());
    let t = thresholds(
        &MtpMethod::new(MtpKind::GenericStepUp(bonf), 0.05).unwrap(),
        m,
    )
    .unwrap();
    assert!(t.deltas().iter().all(|&d| d == 0.05 / m as f64));
}
