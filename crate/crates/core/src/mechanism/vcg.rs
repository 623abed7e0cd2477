use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{solve_allocation, Allocation, MatchProblem, MechanismError, Money};

/// Clarke-pivot charge for one matched client.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientPayment {
    pub client: usize,
    pub payment: Money,
    /// Predicted service cost of the assigned agent.
    pub cost: Money,
    /// `payment - cost`, the welfare the client displaces from others.
    pub surplus: Money,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaymentSchedule {
    /// Matched clients only, sorted by client.
    pub payments: Vec<ClientPayment>,
}

impl PaymentSchedule {
    /// Charge for `client`; unmatched clients pay nothing.
    pub fn payment_of(&self, client: usize) -> Money {
        self.payments.iter().find(|p| p.client == client).map_or(Money::ZERO, |p| p.payment)
    }

    pub fn total_payment(&self) -> Money {
        self.payments.iter().map(|p| p.payment).sum()
    }

    pub fn total_cost(&self) -> Money {
        self.payments.iter().map(|p| p.cost).sum()
    }

    pub fn total_surplus(&self) -> Money {
        self.payments.iter().map(|p| p.surplus).sum()
    }

    pub fn dump(&self, problem: &MatchProblem) -> String {
        let mut out = String::new();
        for p in &self.payments {
            let _ =
                writeln!(out, "p_{}={} cost={} surplus={}", problem.clients()[p.client], p.payment, p.cost, p.surplus);
        }
        out
    }
}

/// Whether payments are recomputed from scratch for every counterfactual.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum CounterfactualMode {
    /// Fresh solve of the reduced problem for every matched client.
    #[default]
    Fresh,
    /// Skips the re-solve when nobody else could use the freed slot; see
    /// [`vcg_payments_with`].
    Incremental,
}

/// VCG payments `p_j = W(C \ {j}) - (W(C) - w_ij) + c_ij` for every matched
/// client, with `W(C \ {j})` obtained by re-solving without `j`.
pub fn vcg_payments(problem: &MatchProblem, alloc: &Allocation) -> Result<PaymentSchedule, MechanismError> {
    vcg_payments_with(problem, alloc, CounterfactualMode::Fresh)
}

/// As [`vcg_payments`], optionally taking a shortcut for the counterfactual.
///
/// In [`CounterfactualMode::Incremental`], if every other client with an edge
/// to `j`'s agent is already matched there, any allocation without `j` plus
/// `j`'s own match is feasible for the full problem, so
/// `W(C \ {j}) = W(C) - w_ij` and no re-solve is needed. Every other client
/// falls back to a fresh solve; the result is identical to `Fresh`.
pub fn vcg_payments_with(
    problem: &MatchProblem,
    alloc: &Allocation,
    mode: CounterfactualMode,
) -> Result<PaymentSchedule, MechanismError> {
    let mut payments = Vec::with_capacity(alloc.matches.len());
    for m in &alloc.matches {
        let edge = problem.edges()[m.edge];
        let others = alloc.total_welfare - m.welfare;
        let without = match mode {
            CounterfactualMode::Incremental if slot_uncontested(problem, alloc, m.client, m.agent) => others,
            _ => solve_allocation(&problem.without_client(m.client))?.total_welfare,
        };
        let payment = without - others + edge.cost;
        payments.push(ClientPayment { client: m.client, payment, cost: edge.cost, surplus: payment - edge.cost });
    }
    Ok(PaymentSchedule { payments })
}

fn slot_uncontested(problem: &MatchProblem, alloc: &Allocation, client: usize, agent: usize) -> bool {
    problem
        .edges()
        .iter()
        .filter(|e| e.agent == agent && e.client != client)
        .all(|e| alloc.agent_of(e.client) == Some(agent))
}

/// Weak budget balance: total payments cover total matched cost.
/// Returns whether it holds and the total surplus retained by the hub.
pub fn verify_budget_balance(payments: &PaymentSchedule, alloc: &Allocation) -> (bool, Money) {
    debug_assert_eq!(payments.payments.len(), alloc.matches.len());
    let holds = payments.total_payment() >= payments.total_cost();
    (holds, payments.total_surplus())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::AgentSlots;

    fn one_slot(values: &[(f64, f64)]) -> MatchProblem {
        let clients = (1..=values.len()).map(|i| i.to_string()).collect();
        let mut p = MatchProblem::new(clients, vec![AgentSlots { id: "A".into(), capacity: 1 }]);
        for (c, &(v, cost)) in values.iter().enumerate() {
            p.add_edge(c, 0, v, cost).unwrap();
        }
        p
    }

    #[test]
    fn contended_slot_pays_displaced_welfare_plus_cost() {
        let p = one_slot(&[(10.0, 4.0), (8.0, 4.0)]);
        let alloc = solve_allocation(&p).unwrap();
        let pay = vcg_payments(&p, &alloc).unwrap();
        assert_eq!(pay.payment_of(0).to_currency(), 8.0);
        assert_eq!(pay.payment_of(1), Money::ZERO);
        // utility 10 - 8 = W(C) - W(C \ {1}) = 6 - 4
        assert_eq!(10.0 - pay.payment_of(0).to_currency(), 2.0);
        assert_eq!(verify_budget_balance(&pay, &alloc), (true, Money::from_micros(4_000_000)));
        assert_eq!(pay.dump(&p), "p_1=8 cost=4 surplus=4\n");
    }

    #[test]
    fn monopoly_pays_exact_cost() {
        let p = one_slot(&[(10.0, 4.0)]);
        let alloc = solve_allocation(&p).unwrap();
        let pay = vcg_payments(&p, &alloc).unwrap();
        assert_eq!(pay.payment_of(0).to_currency(), 4.0);
        assert_eq!(verify_budget_balance(&pay, &alloc), (true, Money::ZERO));
    }

    #[test]
    fn empty_allocation_is_balanced() {
        let pay = PaymentSchedule::default();
        assert_eq!(verify_budget_balance(&pay, &Allocation::default()), (true, Money::ZERO));
    }

    #[test]
    fn incremental_mode_matches_fresh() {
        let mut problems: Vec<MatchProblem> =
            [vec![(10.0, 4.0)], vec![(10.0, 4.0), (8.0, 4.0)], vec![(3.0, 1.0), (9.0, 2.0), (2.0, 5.0)]]
                .iter()
                .map(|v| one_slot(v))
                .collect();
        // A matched client that would move into the freed slot.
        let mut p = MatchProblem::new(
            vec!["j".into(), "k".into()],
            vec![AgentSlots { id: "A".into(), capacity: 1 }, AgentSlots { id: "B".into(), capacity: 1 }],
        );
        p.add_edge(0, 0, 10.0, 0.0).unwrap();
        p.add_edge(1, 1, 1.0, 0.0).unwrap();
        p.add_edge(1, 0, 5.0, 0.0).unwrap();
        problems.push(p);
        for p in problems {
            let alloc = solve_allocation(&p).unwrap();
            assert_eq!(
                vcg_payments(&p, &alloc).unwrap(),
                vcg_payments_with(&p, &alloc, CounterfactualMode::Incremental).unwrap()
            );
        }
    }
}
