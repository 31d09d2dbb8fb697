use num_bigint::BigInt;
use proptest::prelude::*;

use takagi::erwvrp::{memory_param_of_base, path_rng};
use takagi::experiments::{
    k0_tail_experiment, takagi_clt_experiment, walk_clt_experiment, Side, TakagiCltConfig,
    Tolerances, WalkCltConfig,
};
use takagi::radix::digit_depths;
use takagi::takagi::{derivative_walk, increment_decomposition};
use takagi::{ExperimentReport, RadixPoint};

fn small_walk() -> WalkCltConfig {
    WalkCltConfig {
        p: 2.0 / 3.0,
        n: 500,
        samples: 2000,
        seed: 31,
        negative_control: true,
    }
}

#[test]
fn reports_independent_of_thread_count() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| walk_clt_experiment(&small_walk(), &Tolerances::default()).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.to_json(), four.to_json());
    assert_eq!(one.to_csv(), four.to_csv());
}

#[test]
fn experiment_reports_round_trip() {
    let walk = walk_clt_experiment(&small_walk(), &Tolerances::default()).unwrap();
    let tails = k0_tail_experiment(3, 10, 3000, 4, 10, &Tolerances::default()).unwrap();
    for report in [walk, tails] {
        assert_eq!(ExperimentReport::from_json(&report.to_json()).unwrap(), report);
        assert_eq!(ExperimentReport::from_csv(&report.to_csv()).unwrap(), report);
    }
}

#[test]
fn takagi_moments_settle() {
    let tol = Tolerances {
        takagi_ks: 1.0,
        takagi_negative_ks: 0.0,
        ..Default::default()
    };
    for (base, ell) in [(2, 16), (3, 12)] {
        let cfg = TakagiCltConfig {
            base,
            ell,
            samples: 6000,
            seed: 77,
            side: Side::Left,
            depth: None,
        };
        let r = takagi_clt_experiment(&cfg, &tol).unwrap();
        let mean = r.value("mean").unwrap();
        let var = r.value("variance").unwrap();
        assert!(mean.abs() <= 3.0 * (var / 6000.0).sqrt(), "r={base}: mean {mean}");
        assert!((var - 1.0).abs() < 0.15, "r={base}: variance {var}");
    }
}

#[test]
fn sign_walk_repeats_at_base_memory() {
    // the empirical repeat rate of psi_k^+ signs pools to p_r
    for base in [2u32, 3, 7] {
        let p = memory_param_of_base(base).unwrap().p;
        let (mut repeats, mut pairs) = (0usize, 0usize);
        for i in 0..4000 {
            let x = RadixPoint::uniform(base, 48, &mut path_rng(3, i)).unwrap();
            let w = derivative_walk(&x, 32).unwrap();
            repeats += w.signs.windows(2).filter(|s| s[0] == s[1]).count();
            pairs += 31;
        }
        let freq = repeats as f64 / pairs as f64;
        assert!((freq - p).abs() < 0.01, "r={base}: {freq} vs {p}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn main_term_is_h_times_walk(base in 2u32..7, ell in 1u32..12, seed in any::<u64>()) {
        let depth = 2 * ell + 16;
        let x = RadixPoint::uniform(base, depth, &mut path_rng(seed, 0)).unwrap();
        let h = RadixPoint::inverse_power(base, depth, ell).unwrap();
        let dec = increment_decomposition(&x, &h, None).unwrap();
        let walk = derivative_walk(&x, dec.m).unwrap();
        prop_assert_eq!(&dec.main, &(h.to_rational() * BigInt::from(walk.partial_sum)));
        let depths = digit_depths(&x, &h).unwrap();
        prop_assert_eq!(dec.m, ell);
        prop_assert!(depths.k0 < ell as i32);
        prop_assert!(dec.defect_within_bound());
    }
}
