use proptest::prelude::*;

use dhci::bds::{instantiate_mode, iterate_gf, Configuration, ModeSpec, Strategy as Schedule};
use dhci::verify;

fn table(max_n: usize) -> impl Strategy<Value = (usize, Vec<u32>)> {
    (1..=max_n).prop_flat_map(|n| (Just(n), proptest::collection::vec(0..1u32 << n, 1 << n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn markov_rows_sum_to_n((n, t) in table(6)) {
        let f = instantiate_mode(&ModeSpec::TruthTable(t), n).unwrap();
        let m = verify::markov_matrix(&f).unwrap();
        prop_assert!(m.row_counts().iter().all(|&c| c as usize == n));
        let columns_ok = m.column_counts().iter().all(|&c| c as usize == n);
        prop_assert_eq!(verify::is_doubly_stochastic(&m, 0.0), columns_ok);
    }

    #[test]
    fn arcs_change_at_most_one_bit((n, t) in table(6)) {
        let f = instantiate_mode(&ModeSpec::TruthTable(t), n).unwrap();
        let g = verify::build_iteration_graph(&f).unwrap();
        for x in 0..1u32 << n {
            for (k, &y) in g.successors(x).iter().enumerate() {
                let diff = x ^ y;
                prop_assert!(diff == 0 || diff == 1 << (n - 1 - k));
            }
        }
    }

    #[test]
    fn iteration_follows_the_graph(
        (n, t) in table(5),
        start in any::<u32>(),
        idx in proptest::collection::vec(any::<u32>(), 1..30),
    ) {
        let f = instantiate_mode(&ModeSpec::TruthTable(t), n).unwrap();
        let g = verify::build_iteration_graph(&f).unwrap();
        let terms: Vec<u32> = idx.iter().map(|v| v % n as u32 + 1).collect();
        let mut state = start % (1 << n);
        for &k in &terms {
            state = g.successors(state)[k as usize - 1];
        }
        let x0 = Configuration::from_state(start % (1 << n), n).unwrap();
        let s = Schedule::new(n, terms.clone()).unwrap();
        let xq = iterate_gf(&f, &s, &x0, terms.len()).unwrap();
        prop_assert_eq!(xq.to_state().unwrap(), state);
    }

    #[test]
    fn strongly_connected_iff_one_component((n, t) in table(5)) {
        let f = instantiate_mode(&ModeSpec::TruthTable(t), n).unwrap();
        let g = verify::build_iteration_graph(&f).unwrap();
        let comps = verify::scc_components(&g);
        let single = comps.iter().all(|&c| c == comps[0]);
        prop_assert_eq!(verify::is_strongly_connected(&g), single);
    }
}

#[test]
fn negation_is_periodic_and_fqq_is_mixing() {
    for n in 1..=6 {
        let neg = verify::verify_mode(&ModeSpec::Negation, n, 1e-4, 10_000).unwrap();
        assert!(neg.strongly_connected && neg.doubly_stochastic);
        assert_eq!(neg.regularity_exponent, None);
        assert!(neg.convergence.is_none());
    }
    for n in 2..=6 {
        let r = verify::verify_mode(&ModeSpec::Fqq, n, 1e-4, 10_000).unwrap();
        assert!(r.regularity_exponent.is_some(), "n={n}");
        assert!(r.convergence.is_some_and(|c| c.gap < 1e-4));
    }
}
