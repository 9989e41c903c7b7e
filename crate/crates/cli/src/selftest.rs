//! Invariant checks on tiny instances; finishes in a few seconds.

use anyhow::{ensure, Result};
use cdm_core::experts::{hindsight_confidence, Expert};
use cdm_core::harness::{csv_bytes, run_sweep, Experiment, ExperimentConfig};
use cdm_core::perlin::{calibrate_bias, sample_contexts, scaled_distance_on, value_pcc_on, PerlinBandit};
use cdm_core::policy::{build_policy, Algorithm, PolicyParams};
use cdm_core::{AdviceMatrix, ConfidenceMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = (&'static str, fn(&mut ChaCha8Rng) -> Result<()>);

const CHECKS: [Check; 7] = [
    ("landscape values lie in [0, 1]", landscape_range),
    ("distance and PCC anchors", anchors),
    ("bias calibration hits its target", calibration),
    ("hindsight confidence fixed points", confidence),
    ("policies return in-range arms", policies),
    ("episode scores lie in [0, 1]", episode_scores),
    ("grid output is independent of worker count", determinism),
];

/// Runs every check, printing one line each. Returns the number of failures.
pub fn run(seed: u64) -> usize {
    let mut failures = 0;
    for (name, check) in CHECKS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match check(&mut rng) {
            Ok(()) => println!("ok   {name}"),
            Err(e) => {
                failures += 1;
                println!("FAIL {name}: {e:#}");
            }
        }
    }
    failures
}

fn landscape_range(rng: &mut ChaCha8Rng) -> Result<()> {
    let b = PerlinBandit::sample(4, 5, rng)?;
    for x in sample_contexts(2000, rng) {
        for v in b.values(&x) {
            ensure!((0.0..=1.0).contains(&v), "value {v} out of range");
        }
    }
    Ok(())
}

fn anchors(rng: &mut ChaCha8Rng) -> Result<()> {
    let b = PerlinBandit::sample(3, 5, rng)?;
    let ctx = sample_contexts(512, rng);
    let inv = b.inverted();
    ensure!(scaled_distance_on(&b, &b, &ctx)? == 0.0, "self distance is not 0");
    ensure!(
        (scaled_distance_on(&b, &inv, &ctx)? - 1.0).abs() < 1e-12,
        "inverse distance is not 1"
    );
    ensure!((value_pcc_on(&b, &b, &ctx)? - 1.0).abs() < 1e-12, "self PCC is not 1");
    ensure!(
        (value_pcc_on(&b, &inv, &ctx)? + 1.0).abs() < 1e-12,
        "inverse PCC is not -1"
    );
    Ok(())
}

fn calibration(rng: &mut ChaCha8Rng) -> Result<()> {
    let b = PerlinBandit::sample(4, 5, rng)?;
    for target in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let c = calibrate_bias(&b, target, 0.02, rng)?;
        ensure!(
            (c.achieved - target).abs() <= 0.02,
            "target {target}: achieved {}",
            c.achieved
        );
    }
    Ok(())
}

fn confidence(rng: &mut ChaCha8Rng) -> Result<()> {
    let b = PerlinBandit::sample(4, 5, rng)?;
    let best = hindsight_confidence(&Expert::oracle(b.clone()), &b, 1000, rng)?;
    let worst = hindsight_confidence(&Expert::oracle(b.inverted()), &b, 1000, rng)?;
    let random = hindsight_confidence(&Expert::random(4), &b, 1000, rng)?;
    ensure!((best - 1.0).abs() < 1e-9, "oracle expert confidence {best}");
    ensure!(worst.abs() < 1e-9, "inverted expert confidence {worst}");
    ensure!((random - 0.5).abs() < 1e-12, "random expert confidence {random}");
    Ok(())
}

fn policies(rng: &mut ChaCha8Rng) -> Result<()> {
    let (n, k) = (3, 5);
    for alg in Algorithm::ALL {
        for with_conf in [false, true] {
            let mut p = build_policy(alg, &PolicyParams::new(n, k, 50, with_conf))?;
            for _ in 0..50 {
                let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| rng.random()).collect()).collect();
                let advice = AdviceMatrix::from_rows(&rows)?;
                let per_expert: Vec<f64> = (0..n).map(|_| rng.random()).collect();
                let conf = ConfidenceMatrix::broadcast(&per_expert, k)?;
                let c = with_conf.then_some(&conf);
                let arm = p.select(&advice, c, rng)?;
                ensure!(arm < k, "{} chose arm {arm}", alg.name());
                p.update(&advice, c, arm, f64::from(rng.random::<bool>()))?;
            }
        }
    }
    Ok(())
}

fn tiny_config(seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(Experiment::Sweep);
    c.arms = vec![3];
    c.experts = vec![2];
    c.delta_grid = vec![0.0, 1.0];
    c.runs = 2;
    c.horizon = 60;
    c.steps_per_arm = 30;
    c.seed = seed;
    c
}

fn episode_scores(rng: &mut ChaCha8Rng) -> Result<()> {
    let c = tiny_config(rng.random());
    for row in run_sweep(&c, 1)? {
        for v in [
            row.scaled_reward,
            row.best_expert,
            row.worst_expert,
            row.random_baseline,
        ] {
            ensure!((0.0..=1.0).contains(&v), "{} scored {v}", row.algorithm.name());
        }
    }
    Ok(())
}

fn determinism(rng: &mut ChaCha8Rng) -> Result<()> {
    let c = tiny_config(rng.random());
    let a = csv_bytes(&run_sweep(&c, 1)?)?;
    let b = csv_bytes(&run_sweep(&c, 2)?)?;
    ensure!(a == b, "1 and 2 workers disagree");
    Ok(())
}
