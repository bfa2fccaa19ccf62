mod common;

use std::sync::Arc;

use proptest::prelude::*;

use seqauction::combinat::{check_axioms, cospan_cut, greedy_max_basis, optimal_assignment, participation_matching, Matroid};
use seqauction::engine::{run_auction, ConstantBid, CutPolicy, InfoPolicy, Strategy, Truthful};
use seqauction::model::{RngStream, ValuationProfile};

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn greedy_matches_exhaustive_basis(seed in any::<u64>(), n in 1usize..=12, kind in 0usize..3) {
        let mut rng = RngStream::new(seed);
        let m = random_matroid(&mut rng, n, kind);
        // coarse weights force plenty of ties
        let weights: Vec<f64> = (0..n).map(|_| rng.index(5) as f64 / 4.0).collect();
        let basis = greedy_max_basis(&m, &weights);
        prop_assert!(m.is_independent(&basis));
        prop_assert!(all_bases(&m).contains(&basis));
        let total: f64 = basis.iter().map(|&e| weights[e]).sum();
        prop_assert!((total - exhaustive_max_weight(&m, &weights)).abs() < 1e-12);
    }

    #[test]
    fn assignment_matches_permutations(seed in any::<u64>(), rows in 1usize..=7, cols in 1usize..=7, sparse in any::<bool>()) {
        let mut rng = RngStream::new(seed);
        let values: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..cols).map(|_| if sparse && rng.uniform() < 0.5 { 0.0 } else { rng.uniform() }).collect())
            .collect();
        let a = optimal_assignment(&values);
        let pairs = a.pairs();
        let mut seen = vec![false; cols];
        for &(_, j) in &pairs {
            prop_assert!(!seen[j]);
            seen[j] = true;
        }
        let realised: f64 = pairs.iter().map(|&(i, j)| values[i][j]).sum();
        prop_assert!((realised - a.welfare()).abs() < 1e-12);
        prop_assert!((a.welfare() - brute_force_assignment(&values)).abs() < 1e-12);
    }

    #[test]
    fn cospan_meets_every_basis(seed in any::<u64>(), n in 1usize..=10, kind in 0usize..3, picks in 0usize..10) {
        let mut rng = RngStream::new(seed);
        let m = random_matroid(&mut rng, n, kind);
        // a random independent, non-spanning winner set
        let mut winners: Vec<usize> = Vec::new();
        for _ in 0..picks {
            let e = rng.index(n);
            if winners.contains(&e) {
                continue;
            }
            winners.push(e);
            if !m.is_independent(&winners) {
                winners.pop();
            }
        }
        let bases = all_bases(&m);
        let spanning = bases.iter().any(|b| b.len() == winners.len());
        match cospan_cut(&m, &winners) {
            Ok(cut) => {
                prop_assert!(!spanning);
                prop_assert!(cut.iter().all(|e| !winners.contains(e)));
                // the cut meets every basis that extends the winners, hence every basis
                for b in &bases {
                    prop_assert!(b.iter().any(|e| cut.contains(e)), "cut {:?} misses basis {:?}", cut, b);
                }
            }
            Err(_) => prop_assert!(spanning),
        }
    }

    #[test]
    fn participation_matching_always_exists(seed in any::<u64>(), n in 1usize..=10, kind in 0usize..3, cospan in any::<bool>()) {
        let mut rng = RngStream::new(seed);
        let m = random_matroid(&mut rng, n, kind);
        let cuts = if cospan { CutPolicy::Cospan } else { CutPolicy::Explicit(Vec::new()) };
        let sc = matroid_scenario(m.clone(), cuts, InfoPolicy::WinnerPrice);
        let strategies: Vec<Arc<dyn Strategy>> = (0..n).map(|_| Arc::new(ConstantBid(rng.uniform())) as Arc<dyn Strategy>).collect();
        let profile = sc.dist.sample(&rng.split(1));
        let trace = run_auction(&sc, &strategies, &profile, &rng.split(2)).unwrap();
        let weights: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
        let basis = greedy_max_basis(&m, &weights);
        let matching = participation_matching(&trace.participant_sets(), &basis).unwrap();
        prop_assert_eq!(matching.len(), basis.len());
        for (e, r) in matching {
            prop_assert!(trace.rounds[r].participants.contains(&e));
        }
    }

    #[test]
    fn shipped_oracles_are_matroids(seed in any::<u64>(), n in 1usize..=12, kind in 0usize..3) {
        let m = random_matroid(&mut RngStream::new(seed), n, kind);
        prop_assert!(check_axioms(&m, 12, usize::MAX).is_ok());
    }

    #[test]
    fn truthful_cut_auction_is_greedy(seed in any::<u64>(), n in 1usize..=10, kind in 0usize..3) {
        let mut rng = RngStream::new(seed);
        let m = random_matroid(&mut rng, n, kind);
        let sc = matroid_scenario(m.clone(), CutPolicy::Cospan, InfoPolicy::WinnerPrice);
        let values: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
        let strategies: Vec<Arc<dyn Strategy>> = vec![Arc::new(Truthful); n];
        let trace = run_auction(&sc, &strategies, &ValuationProfile::scalars(values.clone()).unwrap(), &rng.split(1)).unwrap();
        let mut served = trace.allocation.served_set();
        served.sort_unstable();
        prop_assert_eq!(served, greedy_max_basis(&m, &values));
    }
}
