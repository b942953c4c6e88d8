use proptest::prelude::*;
use tiersched::bench::replay_check;
use tiersched::ga::GaConfig;
use tiersched::penalty::PenaltyParams;
use tiersched::simulator::{SimConfig, Topology};
use tiersched::strategy::StrategySpec;
use tiersched::workload::{generate_stream, ArrivalProcess, WorkloadConfig};

fn poisson(tiers: usize, resources: usize, jobs: usize, seed: u64, load: f64) -> WorkloadConfig {
    // mean execution time of the default bounds is 275
    let rate = load * resources as f64 / 275.0;
    WorkloadConfig {
        n_tiers: tiers,
        n_resources: resources,
        n_jobs: jobs,
        seed,
        arrival: ArrivalProcess::Poisson { rate },
        ..Default::default()
    }
}

#[test]
fn thousand_job_stream_replays_exactly() {
    let config = poisson(2, 3, 1000, 42, 0.9);
    let stream = generate_stream(&config).unwrap();
    let topology = Topology { tiers: 2, resources: 3 };
    let ga = GaConfig { generations: 15, ..Default::default() };
    for s in ["fcfs", "wlc", "wrr", "ga:tier:waiting", "ga:system:sla-pt", "ga:segmented:sla-al"] {
        let spec: StrategySpec = s.parse().unwrap();
        let mismatch = replay_check(&stream, topology, spec, &ga, &PenaltyParams::default(), SimConfig::default()).unwrap();
        assert_eq!(mismatch, None, "{s}");
    }
}

#[test]
fn periodic_epochs_replay_exactly() {
    let stream = generate_stream(&poisson(3, 2, 150, 7, 0.95)).unwrap();
    let topology = Topology { tiers: 3, resources: 2 };
    let ga = GaConfig { generations: 10, ..Default::default() };
    let sim = SimConfig { period: Some(37) };
    let spec = "ga:system:waiting".parse().unwrap();
    assert_eq!(replay_check(&stream, topology, spec, &ga, &PenaltyParams::default(), sim).unwrap(), None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_runs_replay_exactly(
        tiers in 1usize..=3,
        resources in 1usize..=4,
        jobs in 1usize..120,
        seed in any::<u64>(),
        load in 0.3f64..1.2,
        strategy in prop::sample::select(vec!["fcfs", "wlc", "wrr", "ga:tier:waiting", "ga:system:sla-al", "ga:segmented:sla-pt:nodiff"]),
    ) {
        let stream = generate_stream(&poisson(tiers, resources, jobs, seed, load)).unwrap();
        let topology = Topology { tiers, resources };
        let ga = GaConfig { generations: 5, seed, ..Default::default() };
        let mismatch = replay_check(&stream, topology, strategy.parse().unwrap(), &ga, &PenaltyParams::default(), SimConfig::default()).unwrap();
        prop_assert_eq!(mismatch, None);
    }
}
