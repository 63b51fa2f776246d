//! Acceptance checks. Each test prints one `PASS`/`FAIL` line; run with
//! `cargo test -p nightsched --test acceptance -- --nocapture`.

use std::collections::BTreeMap;
use std::time::Instant;

use nightsched::campaign::{run_campaign, Algorithm, CampaignConfig, CampaignInput};
use nightsched::generator::{derive_seeds, draw_observation, generate, generate_instance, GenParams};
use nightsched::model::{counterexample_instance, gain_curve, validate_instance, ProbabilityVector};
use nightsched::oracle::{brute_force_etg, brute_force_reactive, OracleOptions};
use nightsched::reactive::{reactive_vs_stochastic_expectation, sweep_binomial, BinomialWeather};
use nightsched::solver::{check_decreasing_gain, normalize_night_order};
use nightsched::strategies::{greedy_schedule, omniscient_curve};
use nightsched::{expected_total_gain, solve_stochastic, Instance, SolverConfig, TOLERANCE};
use rand::SeedableRng;
use rand_pcg::Pcg64;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn verdict(criterion: u32, name: &str, failures: &[String], detail: &str) {
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("[{status}] criterion {criterion} {name}: {detail}");
    assert!(failures.is_empty(), "criterion {criterion} failed: {failures:#?}");
}

fn median(values: &mut [u64]) -> u64 {
    values.sort_unstable();
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2
    }
}

#[test]
fn c1_counterexample_golden() {
    let start = Instant::now();
    let inst = counterexample_instance(vec![0.0, 0.0, 1.0, 0.0]);
    let mut failures = Vec::new();
    let omniscient = omniscient_curve(&inst, &SolverConfig::default());
    if omniscient.optimum != [4, 6, 6] {
        failures.push(format!("omniscient curve {:?}", omniscient.optimum));
    }
    let greedy = greedy_schedule(&inst);
    if greedy.cumulative() != [4, 5, 6] {
        failures.push(format!("greedy cumulative {:?}", greedy.cumulative()));
    }
    if greedy.etg != 5.0 {
        failures.push(format!("greedy etg {}", greedy.etg));
    }
    let stochastic = solve_stochastic(&inst, &SolverConfig::default());
    if stochastic.etg != 6.0 || !stochastic.proven_optimal {
        failures.push(format!("stochastic etg {} proven {}", stochastic.etg, stochastic.proven_optimal));
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 1.0 {
        failures.push(format!("took {elapsed:.3}s"));
    }
    verdict(
        1,
        "counterexample golden values",
        &failures,
        &format!(
            "omniscient {:?}, greedy {:?} (etg {}), stochastic etg {} in {elapsed:.4}s",
            omniscient.optimum,
            greedy.cumulative(),
            greedy.etg,
            stochastic.etg
        ),
    );
}

fn small_instance(seed: u64, i: usize) -> Instance {
    let nights = 1 + i % 3;
    let observations = 1 + (i / 3) % 6;
    let len_night = 1 + (i / 18) % 4;
    generate_instance(&GenParams::new(nights, observations, len_night as i64, 10, seed)).unwrap()
}

#[test]
fn c2_oracle_equivalence() {
    let start = Instant::now();
    let seeds = derive_seeds(2, 240);
    let mut failures = Vec::new();
    for (i, &seed) in seeds.iter().enumerate() {
        let inst = small_instance(seed, i);
        let solved = solve_stochastic(&inst, &SolverConfig::default());
        let (oracle, _) = brute_force_etg(&inst, OracleOptions::default()).unwrap();
        if !solved.proven_optimal || (solved.etg - oracle).abs() > 1e-9 {
            failures.push(format!("seed {seed}: solver {} oracle {oracle}", solved.etg));
        }
    }
    verdict(
        2,
        "oracle equivalence",
        &failures,
        &format!("{} instances (S<=6, M<=3, len_night<=4) in {:.2}s", seeds.len(), start.elapsed().as_secs_f64()),
    );
}

#[test]
fn c3_redundant_constraint_equivalence() {
    let seeds = derive_seeds(3, 60);
    let configs = SolverConfig::all_toggle_combinations();
    let mut nodes = vec![0u64; configs.len()];
    let mut failures = Vec::new();
    for &seed in &seeds {
        let inst = generate_instance(&GenParams::new(3, 12, 5, 10, seed)).unwrap();
        let results: Vec<_> = configs.iter().map(|c| solve_stochastic(&inst, c)).collect();
        for (k, r) in results.iter().enumerate() {
            nodes[k] += r.nodes_explored;
            if !r.proven_optimal || (r.etg - results[0].etg).abs() > 1e-9 {
                failures.push(format!("seed {seed} config {k}: {} vs {}", r.etg, results[0].etg));
            }
        }
    }
    for (c, n) in configs.iter().zip(&nodes) {
        println!(
            "    dg={:<5} bo={:<5} icg={:<5} total nodes {n}",
            c.use_dg, c.use_bo, c.use_icg
        );
    }
    let dg_on: u64 = nodes[..4].iter().sum();
    let dg_off: u64 = nodes[4..].iter().sum();
    verdict(
        3,
        "toggle equivalence",
        &failures,
        &format!("{} instances at M=3 S=12, 8 configs agree; nodes DG on {dg_on} vs DG off {dg_off}", seeds.len()),
    );
}

#[test]
fn c4_dominance_and_ordering() {
    let seeds = derive_seeds(4, 120);
    let mut failures = Vec::new();
    for (i, &seed) in seeds.iter().enumerate() {
        let inst = generate_instance(&GenParams::new(2 + i % 3, 4 + i % 7, 5, 10, seed)).unwrap();
        for config in [SolverConfig::with_toggles(false, true, true), SolverConfig::default()] {
            let r = solve_stochastic(&inst, &config);
            let normalized = normalize_night_order(&r.schedule, &inst);
            if expected_total_gain(&inst, &normalized) < r.etg - TOLERANCE {
                failures.push(format!("seed {seed}: normalization lowered the ETG"));
            }
            if config.use_dg && !check_decreasing_gain(&r.schedule, &inst) {
                failures.push(format!("seed {seed}: DG schedule gains {:?}", r.night_gains(&inst)));
            }
        }
    }
    verdict(4, "dominance and ordering", &failures, &format!("{} instances, DG on and off", seeds.len()));
}

#[test]
fn c5_curve_properties() {
    let seeds = derive_seeds(5, 120);
    let mut failures = Vec::new();
    let config = SolverConfig::default();
    for (i, &seed) in seeds.iter().enumerate() {
        let inst = generate_instance(&GenParams::new(2 + i % 3, 6 + i % 5, 5, 10, seed)).unwrap();
        let greedy = greedy_schedule(&inst);
        let stochastic = solve_stochastic(&inst, &config);
        let omniscient = omniscient_curve(&inst, &config);
        let pi = &inst.probabilities;
        let o_etg = omniscient.etg(pi);
        if greedy.etg > stochastic.etg + TOLERANCE || stochastic.etg > o_etg + TOLERANCE {
            failures.push(format!("seed {seed}: {} / {} / {o_etg}", greedy.etg, stochastic.etg));
        }
        if greedy.per_night_gains[0] != omniscient.optimum[0] {
            failures.push(format!("seed {seed}: greedy night 1 {:?}", greedy.per_night_gains));
        }
        let curves = [
            (greedy.curve(&inst), greedy.etg),
            (gain_curve(&inst, &stochastic.night_gains(&inst)), stochastic.etg),
            (omniscient.curve(pi), o_etg),
        ];
        let envelope = curves[2].0.cumulative();
        for (curve, etg) in &curves {
            let cumulative = curve.cumulative();
            if cumulative.windows(2).any(|w| w[0] > w[1]) {
                failures.push(format!("seed {seed}: decreasing curve {cumulative:?}"));
            }
            if cumulative.iter().zip(&envelope).any(|(g, o)| g > o) {
                failures.push(format!("seed {seed}: {cumulative:?} above {envelope:?}"));
            }
            if (curve.area() - etg).abs() > 1e-9 {
                failures.push(format!("seed {seed}: area {} vs etg {etg}", curve.area()));
            }
        }
    }
    verdict(5, "curve properties", &failures, &format!("{} instances", seeds.len()));
}

#[test]
fn c6_probability_difficulty_trend() {
    let start = Instant::now();
    let seeds = derive_seeds(6, 20);
    let config = SolverConfig::default();
    let mut certain_four = Vec::new();
    let mut certain_one = Vec::new();
    for &seed in &seeds {
        let inst = generate_instance(&GenParams::new(4, 20, 5, 10, seed)).unwrap();
        let four = inst.with_probabilities(ProbabilityVector::certain(4, 4));
        let one = inst.with_probabilities(ProbabilityVector::certain(4, 1));
        certain_four.push(solve_stochastic(&four, &config).nodes_explored);
        certain_one.push(solve_stochastic(&one, &config).nodes_explored);
    }
    let (m4, m1) = (median(&mut certain_four), median(&mut certain_one));
    let failures = if m4 > m1 {
        vec![]
    } else {
        vec![format!("median nodes {m4} <= {m1}")]
    };
    verdict(
        6,
        "probability difficulty trend",
        &failures,
        &format!(
            "20 instances at M=4 S=20: median nodes pi=(0,0,0,0,1) {m4} vs pi=(0,1,0,0,0) {m1} in {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn c7_reactive_correctness() {
    let seeds = derive_seeds(7, 60);
    let config = SolverConfig::default();
    let options = OracleOptions {
        decreasing_gain: config.use_dg,
    };
    let mut failures = Vec::new();
    let mut strict = 0;
    for (i, &seed) in seeds.iter().enumerate() {
        let nights = 1 + i % 3;
        let inst = generate_instance(&GenParams::new(nights, 2 + i % 5, 1 + (i % 4) as i64, 10, seed)).unwrap();
        let p = [0.2, 0.5, 0.8, 0.35][i % 4];
        let cmp = reactive_vs_stochastic_expectation(&inst.observations, nights, BinomialWeather::new(p).unwrap(), &config);
        let oracle = brute_force_reactive(&inst.observations, nights, p, options).unwrap();
        if (cmp.etg_reactive - oracle).abs() > 1e-9 {
            failures.push(format!("seed {seed}: reactive {} oracle {oracle}", cmp.etg_reactive));
        }
        let total: f64 = cmp.reactive.scenarios.iter().map(|s| s.probability).sum();
        if (total - 1.0).abs() > 1e-9 {
            failures.push(format!("seed {seed}: scenario probabilities sum to {total}"));
        }
        if !cmp.reactive_dominates() {
            failures.push(format!("seed {seed}: reactive {} < static {}", cmp.etg_reactive, cmp.etg_stochastic));
        }
        if cmp.etg_reactive > cmp.etg_stochastic + TOLERANCE {
            strict += 1;
        }
        if cmp.reactive.solver_calls > (1 << nights) - 1 {
            failures.push(format!("seed {seed}: {} solver calls", cmp.reactive.solver_calls));
        }
        let ends = sweep_binomial(&inst.observations, nights, &[0.0, 1.0], &config).unwrap();
        if ends.iter().any(|pt| pt.upgrade != 0.0) {
            failures.push(format!("seed {seed}: endpoint upgrades {:?}", ends.iter().map(|pt| pt.upgrade).collect::<Vec<_>>()));
        }
    }
    verdict(
        7,
        "reactive correctness",
        &failures,
        &format!("{} instances (M<=3) match the exhaustive walk; {strict} with strict reactive gain", seeds.len()),
    );
}

#[test]
fn c8_campaign_plausibility() {
    let start = Instant::now();
    let params = GenParams::new(3, 12, 4, 10, 8).binomial(None);
    let inputs: Vec<CampaignInput> = derive_seeds(params.seed, 100)
        .into_iter()
        .enumerate()
        .map(|(i, seed)| {
            let g = generate(&params.with_seed(seed)).unwrap();
            CampaignInput {
                name: format!("i{i:03}"),
                instance: g.instance,
                seed: Some(seed),
                p_clear: g.p_clear,
            }
        })
        .collect();
    let stats = run_campaign(&inputs, &CampaignConfig::all(SolverConfig::default())).unwrap();
    let count = |f: &dyn Fn(f64, f64) -> bool, a: Algorithm, b: Algorithm| {
        stats
            .records
            .iter()
            .filter(|r| f(r.etg(a).unwrap(), r.etg(b).unwrap()))
            .count()
    };
    let above = |x: f64, y: f64| x > y + TOLERANCE;
    let below = |x: f64, y: f64| x < y - TOLERANCE;
    let stoch_over_greedy = count(&above, Algorithm::Stochastic, Algorithm::Greedy);
    let omni_over_stoch = count(&above, Algorithm::Omniscient, Algorithm::Stochastic);
    let reactive_over_stoch = count(&above, Algorithm::Reactive, Algorithm::Stochastic);
    let reactive_below = count(&below, Algorithm::Reactive, Algorithm::Stochastic);
    let mut failures = Vec::new();
    if stoch_over_greedy == 0 {
        failures.push("no instance with stochastic > greedy".to_owned());
    }
    if omni_over_stoch == 0 {
        failures.push("no instance with omniscient > stochastic".to_owned());
    }
    if reactive_below > 0 {
        failures.push(format!("{reactive_below} instances with reactive < stochastic"));
    }
    if reactive_over_stoch == 0 {
        failures.push("no instance with reactive > stochastic".to_owned());
    }
    for p in &stats.pairs {
        println!(
            "    {:?} vs {:?}: nonzero gap {}/{}, mean improvement {:?}, mean upgrade {:?}",
            p.a1, p.a2, p.n_nonzero_gap, p.n_compared, p.mean_improvement, p.mean_upgrade
        );
    }
    verdict(
        8,
        "campaign plausibility",
        &failures,
        &format!(
            "100 instances at M=3 S=12 len 4: stoch>greedy {stoch_over_greedy}, omni>stoch {omni_over_stoch}, \
             reactive>stoch {reactive_over_stoch} in {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn c9_generator_statistics() {
    let mut failures = Vec::new();
    let len_night = 5;
    let mut rng = Pcg64::seed_from_u64(9);
    let mut counts: BTreeMap<(i64, i64), u64> = BTreeMap::new();
    let draws = 10_000;
    for _ in 0..draws {
        let o = draw_observation(&mut rng, "x".to_owned(), len_night, 10);
        *counts.entry((o.release, o.deadline)).or_default() += 1;
    }
    let cells = ((len_night + 1) * len_night / 2) as usize;
    if counts.len() != cells {
        failures.push(format!("{} of {cells} window pairs seen", counts.len()));
    }
    let expected = draws as f64 / cells as f64;
    let statistic: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p_value = 1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(statistic);
    if p_value <= 0.001 {
        failures.push(format!("chi-square p-value {p_value}"));
    }
    for seed in derive_seeds(90, 200) {
        for params in [GenParams::new(4, 10, 5, 10, seed), GenParams::new(3, 5, 3, 10, seed).binomial(None)] {
            let a = generate_instance(&params).unwrap();
            if !validate_instance(&a).is_valid() {
                failures.push(format!("seed {seed}: invalid instance"));
            }
            if generate_instance(&params).unwrap().to_json() != a.to_json() {
                failures.push(format!("seed {seed}: regeneration differs"));
            }
        }
    }
    verdict(
        9,
        "generator statistics",
        &failures,
        &format!("chi-square {statistic:.2} on {} dof, p = {p_value:.4}; 400 regenerations identical", cells - 1),
    );
}
