use hbridge::bridges::{extract_eigen_ratio, BridgeSpec, PathSample, TimeGrid};
use hbridge::finite_chain::{chain_bridge_distribution, chain_from_text, chain_to_text, ChainModel};
use hbridge::measure_kernel::{
    flipped_bessel_kernel, gaussian_kernel, h_transform, tanh_drift_kernel, Eigenpair, FlipVariant,
};
use hbridge::montecarlo::stats::ks_statistic;
use hbridge::montecarlo::{ks_two_sample, RngPolicy, StreamRng};
use hbridge::par::{collect_draws, Exec};
use proptest::prelude::*;
use rand::Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn increasing_times() -> impl Strategy<Value = (Vec<f64>, f64)> {
    (prop::collection::vec(0.01f64..1.0, 1..12), 0.1f64..10.0).prop_map(|(steps, t)| {
        let total: f64 = steps.iter().sum();
        let mut times = vec![0.0];
        let mut acc = 0.0;
        for s in &steps {
            acc += s / total * t;
            times.push(acc);
        }
        (times, t)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reversal_is_an_involution((times, t) in increasing_times(), seed in any::<u64>()) {
        let grid = TimeGrid::new(times, t).unwrap();
        let mut rng = RngPolicy::new(seed).stream(0);
        let values: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-5.0..5.0)).collect();
        let path = PathSample::new(grid, values, true).unwrap();
        prop_assert_eq!(path.reversed().reversed(), path.clone());
        let r = path.reversed();
        prop_assert_eq!(r.values()[0], path.values()[path.values().len() - 1]);
        prop_assert_eq!(r.horizon(), path.horizon());
    }

    #[test]
    fn h_transform_round_trip(k in 0.1f64..2.0, c in -1.0f64..1.0, t in 0.1f64..3.0, x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let g = gaussian_kernel();
        let eig = Eigenpair::cosh(k, c).unwrap();
        let back = h_transform(&h_transform(&g, &eig), &eig.reciprocal());
        prop_assert!(rel(back.lebesgue_density(t, x, y).unwrap(), g.lebesgue_density(t, x, y).unwrap()) < 1e-12);
        let same = h_transform(&g, &Eigenpair::trivial());
        prop_assert_eq!(same.density(t, x, y).unwrap(), g.density(t, x, y).unwrap());
    }

    #[test]
    fn tanh_bridges_are_brownian(
        k in 0.2f64..2.0, c in -1.0f64..1.0, x in -2.0f64..2.0, y in -2.0f64..2.0,
        u in 0.05f64..0.9, v in 0.05f64..0.9, z in -3.0f64..3.0, z2 in -3.0f64..3.0,
    ) {
        let t = 1.5;
        let (s, s2) = (u * t, (u + v * (1.0 - u)) * t);
        prop_assume!(s2 > s && s2 < t);
        let g = BridgeSpec::new(gaussian_kernel(), x, t, y).unwrap();
        let h = g.with_kernel(tanh_drift_kernel(k, c).unwrap()).unwrap();
        let a = g.transition_density_lebesgue(z, s, z2, s2).unwrap();
        let b = h.transition_density_lebesgue(z, s, z2, s2).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn flipped_variants_agree_off_the_origin(
        t in 0.1f64..3.0,
        x in prop_oneof![-3.0f64..-1e-6, 1e-6f64..3.0],
        y in -3.0f64..3.0,
    ) {
        let (px, py) = (flipped_bessel_kernel(FlipVariant::X), flipped_bessel_kernel(FlipVariant::Y));
        prop_assert_eq!(px.density(t, x, y).unwrap(), py.density(t, x, y).unwrap());
    }

    #[test]
    fn eigen_ratio_is_independent_of_s(k in 0.2f64..2.0, c in -1.0f64..1.0, b in -1.0f64..1.0, s in 0.05f64..0.95, z in -2.0f64..2.0) {
        let (g, h) = (gaussian_kernel(), tanh_drift_kernel(k, c).unwrap());
        let at = |s: f64, z: f64| extract_eigen_ratio(&g, &h, b, 1.0, s, z).unwrap();
        let lhs = at(0.0, z) / at(s, z);
        let rhs = at(0.0, b) / at(s, b);
        prop_assert!(rel(lhs, rhs) < 1e-10);
    }

    #[test]
    fn ks_statistic_is_a_distance(seed in any::<u64>(), shift in -1.0f64..1.0) {
        let mut rng = RngPolicy::new(seed).stream(0);
        let a: Vec<f64> = (0..60).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..80).map(|_| rng.random::<f64>() + shift).collect();
        let d = ks_statistic(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(ks_statistic(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(d, ks_statistic(&b, &a).unwrap());
        let r = ks_two_sample(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.p_value));
    }

    #[test]
    fn draws_do_not_depend_on_execution(seed in any::<u64>(), n in 1usize..5000) {
        let policy = RngPolicy::new(seed);
        let draw = |r: &mut StreamRng| r.random::<f64>();
        prop_assert_eq!(
            collect_draws(Exec::Sequential, &policy, n, draw),
            collect_draws(Exec::Parallel, &policy, n, draw)
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chain_text_round_trip(n in 2usize..10, seed in any::<u64>()) {
        let chain = ChainModel::random_sub_markov(n, seed).unwrap();
        let back = chain_from_text(&chain_to_text(&chain)).unwrap();
        prop_assert_eq!(back.n(), n);
        prop_assert!((back.generator() - chain.generator()).amax() < 1e-12 * chain.generator().amax());
    }

    #[test]
    fn chain_semigroup(n in 2usize..10, seed in any::<u64>(), s in 0.05f64..2.0, t in 0.05f64..2.0) {
        let chain = ChainModel::random_sub_markov(n, seed).unwrap();
        let (ps, pt, pst) = (
            chain.transition_matrix(s).unwrap(),
            chain.transition_matrix(t).unwrap(),
            chain.transition_matrix(s + t).unwrap(),
        );
        prop_assert!((&ps * &pt - &pst).amax() < 1e-12);
        for row in pst.row_iter() {
            prop_assert!(row.sum() <= 1.0 + 1e-12);
            prop_assert!(row.iter().all(|&p| p >= -1e-15));
        }
    }

    #[test]
    fn chain_h_transform_keeps_bridges(n in 2usize..10, seed in any::<u64>(), t in 0.1f64..4.0, f in 0.05f64..0.95, x in 0usize..10, y in 0usize..10) {
        let p = ChainModel::random_sub_markov(n, seed).unwrap();
        let pair = p.perron().unwrap();
        let q = p.h_transform(&pair.psi, pair.lambda).unwrap();
        let (x, y) = (x % n, y % n);
        let a = chain_bridge_distribution(&p, x, t, y, f * t).unwrap();
        let b = chain_bridge_distribution(&q, x, t, y, f * t).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() < 1e-10);
        }
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }
}
