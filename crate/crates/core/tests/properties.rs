mod common;

use common::*;
use proptest::prelude::*;
use tiersched::penalty::Objective;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn allowance_shares_partition(job in arb_job()) {
        allowance_partition(&job)?;
    }

    #[test]
    fn penalty_is_bounded(case in arb_penalty_case()) {
        penalty_bounds(case)?;
    }

    #[test]
    fn operators_are_closed(b in arb_backlog(14), salt in any::<u64>()) {
        operator_closure(&b, salt)?;
    }

    #[test]
    fn scaling_costs_keeps_optima(b in arb_backlog(6), factor in 0.001f64..1000.0) {
        scale_invariance(&b, factor)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolution_is_elitist(b in arb_backlog(12), objective in prop::sample::select(vec![Objective::Waiting, Objective::MultitierAllowance, Objective::TierAllowance])) {
        elitism(&b, objective)?;
    }
}
