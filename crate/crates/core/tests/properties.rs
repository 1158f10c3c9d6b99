use brp_core::adversaries::{PlantedPartition, RandomPairs};
use brp_core::crep::Crep;
use brp_core::offline::{enumerate_partitions, optimal_cost, static_optimal};
use brp_core::{
    min_migration_cost, run, Configuration, FixedSequence, Params, Request, RequestSource,
    RunOptions,
};
use proptest::prelude::*;

fn request(n: usize) -> impl Strategy<Value = Request> {
    (0..n, 1..n).prop_map(move |(u, d)| Request::new(u, (u + d) % n).unwrap())
}

fn requests(n: usize, max_len: usize) -> impl Strategy<Value = Vec<Request>> {
    prop::collection::vec(request(n), 0..=max_len)
}

fn placement(k: usize, l: usize) -> impl Strategy<Value = Configuration> {
    Just((0..k * l).collect::<Vec<usize>>())
        .prop_shuffle()
        .prop_map(move |nodes| {
            let clusters: Vec<Vec<usize>> = nodes.chunks(k).map(<[usize]>::to_vec).collect();
            Configuration::from_clusters(&clusters, l, k).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn migration_cost_is_a_pseudometric(
        a in placement(2, 2),
        b in placement(2, 2),
        c in placement(2, 2),
        alpha in 1u64..4,
    ) {
        let d = |x: &Configuration, y: &Configuration| min_migration_cost(x, y, alpha).unwrap();
        prop_assert_eq!(d(&a, &a), 0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
        prop_assert_eq!(d(&a, &b) % alpha, 0);
    }

    #[test]
    fn serve_cost_is_symmetric(config in placement(3, 2), u in 0usize..6, v in 0usize..6) {
        prop_assume!(u != v);
        let forward = config.serve_cost(&Request::new(u, v).unwrap()).unwrap();
        let backward = config.serve_cost(&Request::new(v, u).unwrap()).unwrap();
        prop_assert_eq!(forward, backward);
        prop_assert_eq!(forward == 0, config.collocated(u, v).unwrap());
    }

    #[test]
    fn optimum_grows_with_the_prefix(
        sigma in requests(6, 20),
        initial in placement(2, 3),
        alpha in 1u64..4,
    ) {
        let params = Params::unaugmented(2, 3, alpha).unwrap();
        let mut last = 0;
        for end in 0..=sigma.len() {
            let cost = optimal_cost(&sigma[..end], &params, &initial).unwrap().cost;
            prop_assert!(cost >= last);
            last = cost;
        }
    }

    #[test]
    fn optimum_beats_static_and_random_schedules(
        sigma in requests(6, 20),
        initial in placement(3, 2),
        alpha in 1u64..4,
        picks in prop::collection::vec(any::<prop::sample::Index>(), 20),
    ) {
        let params = Params::unaugmented(3, 2, alpha).unwrap();
        let solution = optimal_cost(&sigma, &params, &initial).unwrap();
        prop_assert!(solution.cost <= static_optimal(&sigma, &params, &initial).unwrap().1);

        let space = enumerate_partitions(6, 3, 2).unwrap();
        let mut current = initial.clone();
        let mut cost = 0;
        for (r, pick) in sigma.iter().zip(&picks) {
            let next = space.configuration(pick.index(space.len()));
            cost += min_migration_cost(&current, &next, alpha).unwrap();
            cost += next.serve_cost(r).unwrap();
            current = next;
        }
        prop_assert!(solution.cost <= cost);
    }

    #[test]
    fn schedule_reproduces_optimum(sigma in requests(4, 12), initial in placement(2, 2), alpha in 1u64..4) {
        let params = Params::unaugmented(2, 2, alpha).unwrap();
        let solution = optimal_cost(&sigma, &params, &initial).unwrap();
        prop_assert_eq!(solution.schedule.len(), sigma.len());
        let mut current = initial.clone();
        let mut cost = 0;
        for (r, next) in sigma.iter().zip(&solution.schedule) {
            cost += min_migration_cost(&current, next, alpha).unwrap();
            cost += next.serve_cost(r).unwrap();
            current = next.clone();
        }
        prop_assert_eq!(cost, solution.cost);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn replay_matches_recorded_costs(
        k in 2usize..5,
        l in 2usize..4,
        alpha in 1u64..4,
        seed in any::<u64>(),
        planted in any::<bool>(),
    ) {
        let params = Params::new(k * l, k, l, alpha, 4).unwrap();
        let initial = Configuration::initial(&params).unwrap();
        let source = |seed| -> Box<dyn RequestSource> {
            if planted {
                Box::new(PlantedPartition::new(seed, &params, 0.8, 0.2, 400).unwrap())
            } else {
                Box::new(RandomPairs::new(seed, params.n, 400).unwrap())
            }
        };

        let mut crep = Crep::new(&params, &initial).unwrap();
        let start = crep.configuration();
        let first = run(&mut crep, &mut source(seed), params, start.clone(), RunOptions::checked(400)).unwrap();
        prop_assert_eq!(first.replay().unwrap(), first.ledger.clone());

        let mut again = Crep::new(&params, &initial).unwrap();
        let second = run(&mut again, &mut source(seed), params, start, RunOptions::checked(400)).unwrap();
        prop_assert_eq!(first.to_lines(), second.to_lines());

        // Feeding the recorded requests back gives the same run.
        let mut third = Crep::new(&params, &initial).unwrap();
        let mut fixed = FixedSequence::new(first.requests());
        let third_start = third.configuration();
        let replayed = run(&mut third, &mut fixed, params, third_start, RunOptions::checked(400)).unwrap();
        prop_assert_eq!(replayed.ledger.total(), first.ledger.total());
    }
}
