mod common;

use common::{oracle_welfare, random_instance, Instance};
use hubroute_core::mechanism::{
    build_flow_network, min_cost_max_weight_flow, run_auction, solve_allocation, vcg_payments_with,
    verify_budget_balance, CounterfactualMode, MatchProblem, Money,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance() -> impl Strategy<Value = Instance> {
    any::<u64>().prop_map(|seed| random_instance(&mut ChaCha8Rng::seed_from_u64(seed)))
}

fn true_utility(inst: &Instance, j: usize, factor: f64) -> i64 {
    let (alloc, payments) = run_auction(&inst.problem_with(j, factor)).unwrap();
    alloc.agent_of(j).map_or(0, |a| inst.table[j][a].unwrap().0 - payments.payment_of(j).micros())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn welfare_equals_exhaustive_search(inst in instance()) {
        let p = inst.problem();
        prop_assert_eq!(solve_allocation(&p).unwrap().total_welfare.micros(), oracle_welfare(&p));
    }

    #[test]
    fn allocation_is_feasible(inst in instance()) {
        let p = inst.problem();
        let alloc = solve_allocation(&p).unwrap();
        let mut load = vec![0u32; p.agents().len()];
        let mut seen = vec![false; p.clients().len()];
        for m in &alloc.matches {
            prop_assert!(!seen[m.client], "client {} matched twice", m.client);
            seen[m.client] = true;
            load[m.agent] += 1;
            let e = p.edges()[m.edge];
            prop_assert_eq!((e.client, e.agent), (m.client, m.agent));
            prop_assert_eq!(m.welfare, e.value - e.cost);
        }
        for (a, slots) in p.agents().iter().enumerate() {
            prop_assert!(load[a] <= slots.capacity);
        }
        prop_assert_eq!(alloc.total_welfare, alloc.matches.iter().map(|m| m.welfare).sum::<Money>());
    }

    #[test]
    fn edge_arcs_carry_zero_or_one_unit(inst in instance()) {
        let network = build_flow_network(&inst.problem()).unwrap();
        let flow = min_cost_max_weight_flow(&network).unwrap();
        for (arc, f) in network.arcs.iter().zip(&flow) {
            prop_assert!(*f >= 0 && *f <= arc.capacity);
        }
        for f in &flow[network.first_edge_arc..network.first_edge_arc + inst.problem().edges().len()] {
            prop_assert!(*f == 0 || *f == 1);
        }
    }

    #[test]
    fn solving_is_deterministic(inst in instance()) {
        let p = inst.problem();
        prop_assert_eq!(run_auction(&p).unwrap(), run_auction(&p.clone()).unwrap());
    }

    #[test]
    fn no_misreport_beats_the_truth(inst in instance(), j in 0usize..6, factor in 0.0f64..3.0) {
        let j = j % inst.clients();
        prop_assert!(true_utility(&inst, j, factor) <= true_utility(&inst, j, 1.0));
    }

    #[test]
    fn payments_cover_costs_and_truthful_clients_gain(inst in instance()) {
        let p = inst.problem();
        let (alloc, payments) = run_auction(&p).unwrap();
        prop_assert!(verify_budget_balance(&payments, &alloc).0);
        for (m, pay) in alloc.matches.iter().zip(&payments.payments) {
            prop_assert_eq!(m.client, pay.client);
            prop_assert!(pay.surplus >= Money::ZERO);
            prop_assert!(p.edges()[m.edge].value >= pay.payment);
        }
    }

    #[test]
    fn incremental_counterfactuals_match_fresh(inst in instance()) {
        let p = inst.problem();
        let alloc = solve_allocation(&p).unwrap();
        prop_assert_eq!(
            vcg_payments_with(&p, &alloc, CounterfactualMode::Incremental).unwrap(),
            vcg_payments_with(&p, &alloc, CounterfactualMode::Fresh).unwrap()
        );
    }

    #[test]
    fn text_form_round_trips(inst in instance()) {
        let p = inst.problem();
        let back = MatchProblem::parse(&p.to_text()).unwrap();
        prop_assert_eq!(back, p);
    }
}
