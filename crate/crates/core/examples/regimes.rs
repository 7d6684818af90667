//! Runs small multi-seed experiments and prints per-arm summaries.
//!
//! Usage: regimes <env> <augmentation> <n|h> <budget> <seeds> <hidden> <batch> [arms]
//!
//! Optional overrides through environment variables: `LR`, `EPS_FRAC`, `SYNC`,
//! `STARTS`, `TRAIN_INTERVAL`, `GAMMA`, `CLIP`, `NORM` (normalize by clique),
//! `UNTIED` (independent oracle heads), `RANDOM_K=identity`, `SEED0` (single
//! seed) and `THRESHOLD` (comma list of thresholds to report).

use std::time::Instant;

use actgap::augmentation::{AugmentationKind, AugmentationSpec, RandomK};
use actgap::envs::EnvKind;
use actgap::harness::{
    curve_auc, median, run_single, steps_to_threshold, ArmKind, ArmSpec, ExperimentConfig, NullSink,
};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let env: EnvKind = args[1].parse().unwrap();
    let kind: AugmentationKind = args[2].parse().unwrap();
    let param: f64 = args[3].parse().unwrap();
    let budget: u64 = args[4].parse().unwrap();
    let seeds: u64 = args[5].parse().unwrap();
    let hidden: Vec<usize> = args[6].split(',').map(|s| s.parse().unwrap()).collect();
    let batch: usize = args[7].parse().unwrap();
    let arms: Vec<String> = args
        .get(8)
        .map(|s| s.split(',').map(String::from).collect())
        .unwrap_or_else(|| vec!["baseline".into(), "oracle".into(), "unmodified".into()]);
    let mut aug = AugmentationSpec { kind, ..AugmentationSpec::default() };
    if kind == AugmentationKind::SemiDuplicate {
        aug.h = param;
    } else {
        aug.n = param as usize;
    }
    if std::env::var("RANDOM_K").as_deref() == Ok("identity") {
        aug.random_k = RandomK::Identity;
    }
    let mut cfg = ExperimentConfig::new(env, vec![]);
    cfg.budget = budget;
    cfg.dqn.hidden = hidden;
    cfg.dqn.batch_size = batch;
    if let Ok(v) = std::env::var("LR") {
        cfg.dqn.learning_rate = v.parse().unwrap();
    }
    if let Ok(v) = std::env::var("EPS_FRAC") {
        cfg.dqn.epsilon_fraction = v.parse().unwrap();
    }
    if let Ok(v) = std::env::var("SYNC") {
        cfg.dqn.target_sync = v.parse().unwrap();
    }
    if let Ok(v) = std::env::var("STARTS") {
        cfg.dqn.learning_starts = v.parse().unwrap();
    }
    if let Ok(v) = std::env::var("TRAIN_INTERVAL") {
        cfg.dqn.train_interval = v.parse().unwrap();
    }
    if let Ok(v) = std::env::var("GAMMA") {
        cfg.gamma = v.parse().unwrap();
    }
    if std::env::var("NORM").is_ok() {
        cfg.dqn.normalize_by_clique = true;
    }
    if let Ok(v) = std::env::var("CLIP") {
        cfg.dqn.grad_clip = v.parse().unwrap();
    }
    if std::env::var("UNTIED").is_ok() {
        cfg.dqn.tie_similar_heads = false;
    }
    if let Ok(v) = std::env::var("SEED0") {
        cfg.seeds = vec![v.parse().unwrap()];
    }
    let thresholds: Vec<f64> = match std::env::var("THRESHOLD") {
        Ok(v) => v.split(',').map(|x| x.parse().unwrap()).collect(),
        Err(_) => vec![cfg.effective_threshold().unwrap()],
    };
    for arm_name in arms {
        let arm_kind: ArmKind = arm_name.parse().unwrap();
        let a = if arm_kind == ArmKind::Baseline { AugmentationSpec::none() } else { aug };
        let arm = ArmSpec::new(arm_name.clone(), arm_kind, a);
        let t0 = Instant::now();
        let mut steps = vec![Vec::new(); thresholds.len()];
        let mut aucs = Vec::new();
        let mut finals = Vec::new();
        for seed in 0..seeds {
            let curve = run_single(&cfg, &arm, seed, &mut NullSink).unwrap();
            for (i, &t) in thresholds.iter().enumerate() {
                steps[i].push(steps_to_threshold(&curve, t, cfg.window).unwrap_or(budget) as f64);
            }
            aucs.push(curve_auc(&curve, budget));
            finals.push(curve.final_mean(cfg.window).unwrap_or(f64::NAN));
        }
        println!(
            "{arm_name:>10}: med_auc {:>9.2} med_final {:>9.2} | {:.1}s",
            median(&aucs).unwrap(),
            median(&finals).unwrap(),
            t0.elapsed().as_secs_f64()
        );
        for (t, s) in thresholds.iter().zip(&steps) {
            println!(
                "            thr {t:>7}: med_steps {:>8.0} | {:?}",
                median(s).unwrap(),
                s.iter().map(|v| *v as u64).collect::<Vec<_>>()
            );
        }
    }
}
