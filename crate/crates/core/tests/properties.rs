use std::collections::BTreeMap;

use kanon_core::analytics::{plan_light, plan_stream, poisson_lambda, prob_at_least, table1};
use kanon_core::degree::{fit_matched_lognormal, sample_degree_sequence, DegreeDistribution, GraphProfile, Provenance};
use kanon_core::projection::{assign_groups, project_graph, project_graph_sharded, GroupAssignment, SocialGraph};
use kanon_core::rng::{derive_seed, rng_from_seed};
use kanon_core::simulation::{
    poll_count_cdf, run_workload, strategy_random_poll, AdversaryLog, Population, WorkloadConfig,
};
use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn random_multigraph(n: usize, edges: usize, seed: u64) -> SocialGraph {
    let mut rng = rng_from_seed(seed);
    let list = (0..edges).map(|_| (rng.random_range(0..n as u32), rng.random_range(0..n as u32))).collect();
    SocialGraph::from_edges(n, list).unwrap()
}

/// Pair multiplicities by scanning every unordered group pair against every edge.
fn brute_force(graph: &SocialGraph, a: &GroupAssignment) -> BTreeMap<(u32, u32), u64> {
    let mut out = BTreeMap::new();
    for i in 0..a.m() {
        for j in i..a.m() {
            let count = graph
                .edges()
                .iter()
                .filter(|&&(x, y)| {
                    let (gx, gy) = (a.group(x).unwrap(), a.group(y).unwrap());
                    (gx, gy) == (i, j) || (gy, gx) == (i, j)
                })
                .count() as u64;
            if count > 0 {
                out.insert((i, j), count);
            }
        }
    }
    out
}

fn chi_square_p(observed: &[u64], expected: &[f64]) -> f64 {
    let stat: f64 = observed.iter().zip(expected).map(|(&o, &e)| (o as f64 - e).powi(2) / e).sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

#[test]
fn projection_matches_brute_force_on_tiny_graphs() {
    for seed in 0..1000u64 {
        let mut rng = rng_from_seed(derive_seed(seed, 100));
        let n = rng.random_range(1..=12usize);
        let m = rng.random_range(1..=4u32.min(n as u32));
        let graph = random_multigraph(n, rng.random_range(0..=24), seed);
        let a = assign_groups(n, m, seed).unwrap();
        let net = project_graph(&graph, &a).unwrap();
        let ours: BTreeMap<(u32, u32), u64> =
            net.streams().iter().map(|s| ((s.pair.lo, s.pair.hi), s.multiplicity)).collect();
        assert_eq!(ours, brute_force(&graph, &a), "seed {seed}");
        assert_eq!(net.total_multiplicity(), graph.edge_count() as u64);
    }
}

#[test]
fn group_of_a_user_is_uniform() {
    let (n, m) = (9usize, 5u32);
    let mut counts = vec![0u64; m as usize];
    for seed in 0..100_000u64 {
        counts[assign_groups(n, m, seed).unwrap().groups()[4] as usize] += 1;
    }
    let expected = vec![100_000.0 / m as f64; m as usize];
    assert!(chi_square_p(&counts, &expected) > 0.001, "{counts:?}");
}

#[test]
fn coupon_collector_law_for_five_groups() {
    let trials = 100_000u64;
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for t in 0..trials {
        *counts.entry(strategy_random_poll(5, derive_seed(5, t)).unwrap().connections).or_insert(0) += 1;
    }
    // pool the upper tail so every expected cell holds at least 5 draws
    let pmf = |t: u64| poll_count_cdf(5, t) - poll_count_cdf(5, t - 1);
    let mut observed = Vec::new();
    let mut expected = Vec::new();
    let mut t = 5u64;
    while (1.0 - poll_count_cdf(5, t - 1)) * trials as f64 >= 10.0 {
        observed.push(counts.get(&t).copied().unwrap_or(0));
        expected.push(pmf(t) * trials as f64);
        t += 1;
    }
    observed.push(counts.range(t..).map(|(_, c)| c).sum());
    expected.push((1.0 - poll_count_cdf(5, t - 1)) * trials as f64);
    assert!(chi_square_p(&observed, &expected) > 0.001);
}

#[test]
fn lambda_and_connection_decrease_in_m() {
    let fb = GraphProfile::facebook();
    let mut prev = (f64::INFINITY, 1.0);
    for m in (1u32..4_000_000).step_by(9973) {
        let lambda = poisson_lambda(&fb, m);
        let connected = prob_at_least(1, lambda);
        assert!(lambda < prev.0);
        assert!(connected <= prev.1);
        prev = (lambda, connected);
    }
}

#[test]
fn light_workload_with_unique_streams_downloads_exactly_what_is_meant() {
    // a perfect matching whose edges all join distinct group pairs
    let n = 64usize;
    let m = 32u32;
    let groups: Vec<u32> = (0..n as u32).map(|u| u / 2).collect();
    let edges: Vec<(u32, u32)> = (0..16u32).map(|k| (4 * k, 4 * k + 2)).collect();
    let graph = SocialGraph::from_edges(n, edges).unwrap();
    let assignment = GroupAssignment::from_groups(m, groups).unwrap();
    assert!(project_graph(&graph, &assignment).unwrap().streams().iter().all(|s| s.multiplicity == 1));
    let mut c = WorkloadConfig::new(Population::Graph { graph, assignment: Some(assignment) }, m);
    c.ticks = 10;
    c.send_rate = 0.7;
    c.replications = 3;
    c.seed = 5;
    let (report, _) = run_workload(&c).unwrap();
    assert_eq!(report.bandwidth_ratio.unwrap().value, 1.0);
    assert_eq!(report.bandwidth_ratio.unwrap().std_error, 0.0);
}

#[test]
fn adversary_log_carries_no_user_identifiers() {
    let p = GraphProfile::new(2000, 6.0, 6f64.sqrt()).unwrap();
    let mut c = WorkloadConfig::new(Population::Profile(p), 20);
    c.ticks = 4;
    c.send_rate = 0.2;
    c.seed = 8;
    let (_, log) = run_workload(&c).unwrap();
    assert!(!log.is_empty());
    let mut buf = Vec::new();
    log.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    // the schema has group, tick and size columns only
    assert_eq!(text.lines().next().unwrap(), "source_group,dest_group,t_send,pickup_ticks,size");
    let json = serde_json::to_value(&log).unwrap();
    for rec in json["records"].as_array().unwrap() {
        let keys: Vec<&str> = rec.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["dest_group", "pickup_ticks", "size", "source_group", "t_send"]);
    }
    for r in &log.records {
        assert!(r.source_group < 20 && r.dest_group < 20);
    }
}

fn law_strategy() -> impl Strategy<Value = DegreeDistribution> {
    prop::collection::vec((0u32..500, 0u32..1000), 1..40).prop_filter_map("needs mass", |rows| {
        let total: u32 = rows.iter().map(|r| r.1).sum();
        (total > 0).then(|| {
            let masses = rows.iter().map(|&(k, c)| (k, c as f64 / total as f64)).collect();
            DegreeDistribution::from_masses(masses, Provenance::EmpiricalHistogram).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn masses_are_normalized(law in law_strategy()) {
        prop_assert!((law.total_mass() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn fit_reproduces_moments(d in 2.0f64..400.0, ratio in 0.05f64..1.2) {
        let sigma = d * ratio;
        let p = GraphProfile::new(1_000_000_000, d, sigma).unwrap();
        let max = (d + 40.0 * sigma).max(2.0 * d + 10.0) as u32;
        let law = fit_matched_lognormal(&p, max).unwrap();
        prop_assert!((law.total_mass() - 1.0).abs() <= 1e-9);
        prop_assert!((law.mean() - d).abs() / d <= 0.005);
        prop_assert!((law.std() - sigma).abs() / sigma <= 0.005);
    }

    #[test]
    fn samples_are_deterministic(law in law_strategy(), n in 1usize..500, seed: u64) {
        prop_assert_eq!(sample_degree_sequence(&law, n, seed), sample_degree_sequence(&law, n, seed));
    }

    #[test]
    fn projection_conserves_edges(n in 1usize..300, edges in 0usize..2000, m_frac in 0.0f64..1.0, seed: u64) {
        let m = 1 + ((n - 1) as f64 * m_frac) as u32;
        let graph = random_multigraph(n, edges, seed);
        let a = assign_groups(n, m, seed).unwrap();
        let net = project_graph(&graph, &a).unwrap();
        prop_assert_eq!(net.total_multiplicity(), edges as u64);
        prop_assert_eq!(&net, &project_graph(&graph, &assign_groups(n, m, seed).unwrap()).unwrap());
        for workers in [1usize, 3, 8] {
            prop_assert_eq!(&net, &project_graph_sharded(&graph, &a, workers).unwrap());
        }
    }

    #[test]
    fn stream_plans_round_trip(l in 1u64..6, confidence in 0.01f64..0.999) {
        let fb = GraphProfile::facebook();
        let plan = plan_stream(&fb, l, confidence).unwrap();
        prop_assert!(prob_at_least(l, plan.lambda) >= confidence);
        prop_assert!(prob_at_least(l, poisson_lambda(&fb, plan.m + 1)) < confidence);
    }

    #[test]
    fn light_plans_are_minimal(u in 0.001f64..0.9) {
        let fb = GraphProfile::facebook();
        let plan = plan_light(&fb, u).unwrap();
        prop_assert!(prob_at_least(1, plan.lambda) <= u);
        prop_assert!(prob_at_least(1, poisson_lambda(&fb, plan.m - 1)) > u);
    }

    #[test]
    fn table_lambda_is_log_of_epsilon(confidence in 0.01f64..0.999) {
        let row = table1(&GraphProfile::facebook(), &[confidence]).unwrap()[0];
        prop_assert!((row.lambda + (1.0 - confidence).ln()).abs() < 1e-4);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn workloads_are_deterministic_across_workers(seed: u64, strategy in prop::sample::select(vec!["poll", "bulk", "rendezvous"])) {
        let p = GraphProfile::new(1500, 5.0, 5f64.sqrt()).unwrap();
        let mut c = WorkloadConfig::new(Population::Profile(p), 15);
        c.strategy = strategy.to_string();
        c.ticks = 3;
        c.send_rate = 0.2;
        c.replications = 4;
        c.pairs_sampled = 200;
        c.privacy_trials = 100;
        c.seed = seed;
        let mut outputs = Vec::new();
        for workers in [1usize, 2, 4] {
            c.workers = workers;
            let (report, log) = run_workload(&c).unwrap();
            let mut csv = Vec::new();
            log.write_csv(&mut csv).unwrap();
            outputs.push((serde_json::to_string(&report).unwrap(), csv));
        }
        prop_assert_eq!(&outputs[0], &outputs[1]);
        prop_assert_eq!(&outputs[0], &outputs[2]);
        let report: kanon_core::simulation::SimReport = serde_json::from_str(&outputs[0].0).unwrap();
        if let Some(bw) = report.bandwidth_ratio {
            prop_assert!(bw.value >= 1.0);
        }
        let back = AdversaryLog::read_csv(&outputs[0].1[..], std::path::Path::new("log.csv")).unwrap();
        let mut again = Vec::new();
        back.write_csv(&mut again).unwrap();
        prop_assert_eq!(&again, &outputs[0].1);
    }
}
