use mtp_core::classic::{self, MtpKind, MtpMethod};
use mtp_core::dp::MassSpec;
use mtp_core::rng::{stream, Domain};
use mtp_core::sensitivity::{run_sensitivity, SensitivityConfig};
use mtp_core::simulation::{simulate_pvalues, Scenario};
use mtp_core::stats::{mean, sample_sd};
use mtp_core::PValueSet;
use rand::seq::SliceRandom;

fn mixed_pvalues(m: usize, seed: u64) -> PValueSet {
    let sc = Scenario {
        m,
        m0: m / 2,
        rho: 0.3,
        mu: 3.0,
        trials: 1,
        seed,
    };
    simulate_pvalues(&sc, 0).unwrap().0
}

fn cfg(draws: usize, seed: u64) -> SensitivityConfig {
    SensitivityConfig {
        draws,
        seed,
        comparison_draws: 50,
        ..Default::default()
    }
}

#[test]
fn report_invariants() {
    let ps = mixed_pvalues(200, 1);
    let rep = run_sensitivity(&ps, &cfg(500, 2)).unwrap();
    let s = rep.r_samples.len() as f64;
    assert_eq!(rep.r_samples.len(), 500);
    assert_eq!(rep.mass_draws.len(), 500);

    // sig_prob[i] = #{s : rank(i) <= R_s} / S exactly
    let sp = ps.order_statistics();
    let rank = sp.original_to_rank();
    for (prob, &rk) in rep.sig_prob.iter().zip(&rank) {
        let hits = rep.r_samples.iter().filter(|&&r| rk < r).count();
        assert_eq!(*prob, hits as f64 / s);
    }
    // nonincreasing down the ranks
    let by_rank: Vec<f64> = sp
        .rank_to_original()
        .iter()
        .map(|&i| rep.sig_prob[i])
        .collect();
    assert!(by_rank.windows(2).all(|w| w[0] >= w[1]));

    let as_f: Vec<f64> = rep.r_samples.iter().map(|&r| r as f64).collect();
    assert_eq!(rep.mean_r, mean(&as_f));
    assert_eq!(rep.sd_r, sample_sd(&as_f));
    let lo = *rep.r_samples.iter().min().unwrap() as f64;
    let hi = *rep.r_samples.iter().max().unwrap() as f64;
    assert!(rep.mean_r >= lo && rep.mean_r <= hi);
    assert_eq!(rep.histogram.iter().map(|b| b.count).sum::<usize>(), 500);
    assert!(rep.mass_draws.iter().all(|m| *m > 0.0));
}

#[test]
fn permutation_invariance() {
    let ps = mixed_pvalues(150, 3);
    let mut order: Vec<usize> = (0..ps.len()).collect();
    order.shuffle(&mut stream(4, Domain::Test, 0));
    let shuffled = PValueSet::new(
        order.iter().map(|&i| ps.values()[i]).collect(),
        order.iter().map(|&i| ps.labels()[i].clone()).collect(),
        None,
    )
    .unwrap();
    let a = run_sensitivity(&ps, &cfg(300, 5)).unwrap();
    let b = run_sensitivity(&shuffled, &cfg(300, 5)).unwrap();
    assert_eq!(a.r_samples, b.r_samples);
    for (j, &i) in order.iter().enumerate() {
        assert_eq!(b.sig_prob[j], a.sig_prob[i]);
    }
}

#[test]
fn reproducible_across_thread_counts() {
    let ps = mixed_pvalues(300, 6);
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = one.install(|| run_sensitivity(&ps, &cfg(200, 7)).unwrap());
    let b = four.install(|| run_sensitivity(&ps, &cfg(200, 7)).unwrap());
    assert_eq!(a, b);
    let c = run_sensitivity(&ps, &cfg(200, 8)).unwrap();
    assert_ne!(a.r_samples, c.r_samples);
}

#[test]
fn huge_mass_concentrates_on_by() {
    let mut within = 0;
    let mut total = 0;
    for set in 0..20 {
        let ps = mixed_pvalues(100, 100 + set);
        let by = classic::apply(
            &MtpMethod::new(MtpKind::BenjaminiYekutieli, 0.05).unwrap(),
            &ps,
        )
        .unwrap()
        .count;
        let c = SensitivityConfig {
            mass: MassSpec::Fixed { mass: 1e8 },
            ..cfg(100, set)
        };
        let rep = run_sensitivity(&ps, &c).unwrap();
        assert_eq!(rep.comparison.by, by);
        within += rep
            .r_samples
            .iter()
            .filter(|&&r| r.abs_diff(by) <= 1)
            .count();
        total += rep.r_samples.len();
        assert!(rep.mass_draws.iter().all(|&m| m == 1e8));
    }
    assert!(within as f64 >= 0.99 * total as f64, "{within}/{total}");
}

#[test]
fn comparison_counts_match_classic_engines() {
    let ps = mixed_pvalues(120, 9);
    let rep = run_sensitivity(&ps, &cfg(10, 10)).unwrap();
    let count = |k| {
        classic::apply(&MtpMethod::new(k, 0.05).unwrap(), &ps)
            .unwrap()
            .count
    };
    assert_eq!(rep.comparison.bonferroni, count(MtpKind::Bonferroni));
    assert_eq!(rep.comparison.sidak, count(MtpKind::Sidak));
    assert_eq!(rep.comparison.holm, count(MtpKind::Holm));
    assert_eq!(rep.comparison.bh, count(MtpKind::BenjaminiHochberg));
    assert_eq!(rep.comparison.by, count(MtpKind::BenjaminiYekutieli));
    let wb = classic::weighted_bonferroni_mc(&ps, 0.05, 50, 10).unwrap();
    assert_eq!(rep.comparison.weighted_bonferroni_mean, wb.mean);
}
