//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! The deep-Q regime criteria (5 to 8) use a reduced network and budget so the
//! whole suite runs on one CPU core in minutes; see `desk_config`.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use actgap::augmentation::{build_augmentation, AugmentationSpec, AugmentedEnv, RandomK, SimilarityMatrix};
use actgap::cli::{render_svg, PlotGroup, PlotSpec};
use actgap::dqn::{weighted_td_loss, QBatchTarget};
use actgap::envs::{chain_optimal_q, ChainMdp, EnvKind};
use actgap::harness::{
    curve_auc, median, run_experiment, steps_to_threshold, ArmKind, ArmSpec, ExperimentConfig, ExperimentOutcome,
    LearningCurve, RunStatus,
};
use actgap::nn::{Layer, Mlp};
use actgap::qcore::{oracle_q_update, train_tabular_with, AgentHyperparams, TabularQ, Transition};

struct Report {
    failures: Vec<String>,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        let text = format!("[{tag}] criterion {id}: {detail}\n");
        let mut err = std::io::stderr().lock();
        let _ = err.write_all(text.as_bytes());
        let _ = err.flush();
        if !pass {
            self.failures.push(id.to_string());
        }
    }

    fn note(&self, text: String) {
        let _ = std::io::stderr().lock().write_all(format!("        {text}\n").as_bytes());
    }
}

// ---------------------------------------------------------------------------
// 1. Tabular oracle update against a brute-force evaluation.

fn random_k(rng: &mut ChaCha8Rng, size: usize) -> SimilarityMatrix {
    let mut e = vec![0.0; size * size];
    for i in 0..size {
        e[i * size + i] = 1.0;
        for j in i + 1..size {
            let v = match rng.gen_range(0..4) {
                0 => 0.0,
                1 => 1.0,
                _ => rng.gen::<f64>(),
            };
            e[i * size + j] = v;
            e[j * size + i] = v;
        }
    }
    SimilarityMatrix::new(size, e).unwrap()
}

/// The update written directly from its definition on nested vectors.
fn brute_force_update(
    q: &[Vec<f64>],
    s: usize,
    a: usize,
    r: f64,
    s2: usize,
    terminal: bool,
    k: &SimilarityMatrix,
    alpha: f64,
    gamma: f64,
) -> Vec<Vec<f64>> {
    let mut best = f64::NEG_INFINITY;
    for &v in &q[s2] {
        if v > best {
            best = v;
        }
    }
    let y = if terminal { r } else { r + gamma * best };
    let mut out = q.to_vec();
    for b in 0..q[s].len() {
        out[s][b] = q[s][b] + alpha * k.get(a, b) * (y - q[s][b]);
    }
    out
}

fn criterion_1(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let instances = 10_000;
    let mut max_err: f64 = 0.0;
    let mut identity_mismatch = 0;
    for _ in 0..instances {
        let states = rng.gen_range(1..7);
        let actions = rng.gen_range(1..9);
        let mut q = TabularQ::zeros(states, actions);
        let mut nested = vec![vec![0.0; actions]; states];
        for s in 0..states {
            for a in 0..actions {
                let v = rng.gen_range(-10.0..10.0);
                q.set(s, a, v);
                nested[s][a] = v;
            }
        }
        let t = Transition {
            s: rng.gen_range(0..states),
            a: rng.gen_range(0..actions),
            r: rng.gen_range(-5.0..5.0),
            s_next: rng.gen_range(0..states),
            terminal: rng.gen_bool(0.3),
        };
        let hp = AgentHyperparams {
            alpha: rng.gen_range(0.001..=1.0),
            gamma: rng.gen_range(0.0..=1.0),
            epsilon_start: 1.0,
            epsilon_end: 0.0,
            epsilon_decay_steps: 1,
        };
        let k = random_k(&mut rng, actions);
        let expected = brute_force_update(&nested, t.s, t.a, t.r, t.s_next, t.terminal, &k, hp.alpha, hp.gamma);
        let mut got = q.clone();
        oracle_q_update(&mut got, &t, &k, &hp).unwrap();
        for s in 0..states {
            for a in 0..actions {
                max_err = max_err.max((got.get(s, a) - expected[s][a]).abs());
            }
        }

        // Identity K against textbook Q-learning: only (s, a) moves.
        let id =
            SimilarityMatrix::new(actions, (0..actions * actions).map(|i| f64::from(i % (actions + 1) == 0)).collect())
                .unwrap();
        let mut got = q.clone();
        oracle_q_update(&mut got, &t, &id, &hp).unwrap();
        let mut standard = q.clone();
        let y = if t.terminal { t.r } else { t.r + hp.gamma * q.max_value(t.s_next) };
        let old = q.get(t.s, t.a);
        standard.set(t.s, t.a, old + hp.alpha * (y - old));
        if got != standard {
            identity_mismatch += 1;
        }
    }
    report.line(
        "1",
        max_err <= 1e-12 && identity_mismatch == 0,
        format!(
            "oracle update vs brute force over {instances} instances: max |err| = {max_err:.2e} (tol 1e-12); identity-K mismatches vs Q-learning = {identity_mismatch}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 2. Duplicate cliques stay equal during tabular training on the chain.

fn criterion_2(report: &mut Report) {
    let start = Instant::now();
    let n = 10;
    let copies = 5;
    let budget = 50_000;
    let hp = AgentHyperparams::tabular_default(budget);
    let optimal = chain_optimal_q(&ChainMdp::new(n).unwrap(), hp.gamma).unwrap();
    let mut unequal_updates = 0u64;
    let mut updates = 0u64;
    let mut optimal_seeds = 0;
    for seed in 0..20u64 {
        let (table, k) = build_augmentation(&AugmentationSpec::duplicate(copies), 2).unwrap();
        let mut env = AugmentedEnv::new(Box::new(ChainMdp::new(n).unwrap()), table, seed).unwrap();
        let mut inspect = |q: &TabularQ| {
            updates += 1;
            for s in 0..q.state_count() {
                let row = q.row(s);
                if (0..row.len()).any(|j| row[j] != row[j % 2]) {
                    unequal_updates += 1;
                    return;
                }
            }
        };
        let out =
            train_tabular_with(&mut env, &k, &hp, budget, seed, &mut actgap::harness::NullSink, &mut inspect).unwrap();
        let matches = (0..n - 1).all(|s| {
            let row = out.q.row(s);
            let best = |base: usize| (0..row.len()).filter(|j| j % 2 == base).map(|j| row[j]).fold(f64::MIN, f64::max);
            let learned = if best(1) > best(0) {
                1
            } else if best(0) > best(1) {
                0
            } else {
                2
            };
            let target = if optimal[s][1] > optimal[s][0] { 1 } else { 0 };
            learned == target
        });
        optimal_seeds += matches as usize;
    }
    let secs = start.elapsed().as_secs_f64();
    report.line(
        "2",
        unequal_updates == 0 && optimal_seeds == 20 && secs < 60.0,
        format!(
            "chain n={n}, duplicate N={copies}: {unequal_updates} of {updates} updates broke clique equality; greedy policy optimal in {optimal_seeds}/20 seeds; {secs:.1}s (limit 60s)"
        ),
    );
}

// ---------------------------------------------------------------------------
// 3. Backpropagation against central finite differences.

/// Plain-loop forward pass; returns the output and every hidden pre-activation.
fn reference_forward(layers: &[Layer], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut a = x.to_vec();
    let mut pre = Vec::new();
    for (l, layer) in layers.iter().enumerate() {
        let (rows, cols) = layer.weights.dim();
        let mut z = vec![0.0; rows];
        for (r, zr) in z.iter_mut().enumerate() {
            let mut acc = layer.bias[r];
            for c in 0..cols {
                acc += layer.weights[[r, c]] * a[c];
            }
            *zr = acc;
        }
        if l + 1 < layers.len() {
            pre.extend_from_slice(&z);
            a = z.into_iter().map(|v| v.max(0.0)).collect();
        } else {
            a = z;
        }
    }
    (a, pre)
}

/// Scalar objective `sum_i sum_j c_ij * out_ij` over a batch.
fn objective(layers: &[Layer], xs: &[Vec<f64>], c: &Array2<f64>) -> f64 {
    xs.iter()
        .enumerate()
        .map(|(i, x)| reference_forward(layers, x).0.iter().enumerate().map(|(j, o)| c[[i, j]] * o).sum::<f64>())
        .sum()
}

fn param(ls: &mut [Layer], l: usize, r: usize, col: usize, cols: usize) -> &mut f64 {
    if col < cols {
        &mut ls[l].weights[[r, col]]
    } else {
        &mut ls[l].bias[r]
    }
}

fn criterion_3(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let eps = 1e-6;
    let kink_margin = 1e-4;
    let mut networks_by_depth = [0usize; 3];
    let mut resampled = 0;
    let mut max_rel: f64 = 0.0;
    let mut checked = 0usize;
    while networks_by_depth.iter().sum::<usize>() < 120 {
        let depth = networks_by_depth.iter().enumerate().min_by_key(|(_, c)| **c).unwrap().0 + 1;
        let mut dims = vec![rng.gen_range(1..6)];
        for _ in 0..depth {
            dims.push(rng.gen_range(2..9));
        }
        dims.push(rng.gen_range(1..5));
        let mut net = Mlp::init(&dims, rng.gen()).unwrap();
        for layer in net.layers_mut() {
            layer.bias.mapv_inplace(|_| rng.gen_range(-0.5..0.5));
        }
        let batch = rng.gen_range(1..4);
        let xs: Vec<Vec<f64>> = (0..batch).map(|_| (0..dims[0]).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let near_kink = xs.iter().any(|x| reference_forward(net.layers(), x).1.iter().any(|z| z.abs() < kink_margin));
        if near_kink {
            resampled += 1;
            continue;
        }
        let out_dim = *dims.last().unwrap();
        let c = Array2::from_shape_fn((batch, out_dim), |_| rng.gen_range(-1.0..1.0));
        let flat: Vec<f64> = xs.iter().flatten().copied().collect();
        let x = Array2::from_shape_vec((batch, dims[0]), flat).unwrap();
        let cache = net.forward_batch(x.view()).unwrap();
        let grads = net.backward(&cache, c.view()).unwrap();

        let mut layers: Vec<Layer> = net.layers().to_vec();
        for l in 0..layers.len() {
            let (rows, cols) = layers[l].weights.dim();
            for r in 0..rows {
                for col in 0..=cols {
                    let orig = *param(&mut layers, l, r, col, cols);
                    *param(&mut layers, l, r, col, cols) = orig + eps;
                    let plus = objective(&layers, &xs, &c);
                    *param(&mut layers, l, r, col, cols) = orig - eps;
                    let minus = objective(&layers, &xs, &c);
                    *param(&mut layers, l, r, col, cols) = orig;
                    let numeric = (plus - minus) / (2.0 * eps);
                    let analytic = if col < cols { grads.layers[l].weights[[r, col]] } else { grads.layers[l].bias[r] };
                    let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
                    max_rel = max_rel.max(rel);
                    checked += 1;
                }
            }
        }
        networks_by_depth[depth - 1] += 1;
    }
    let total: usize = networks_by_depth.iter().sum();
    report.line(
        "3",
        max_rel < 1e-4 && total >= 100 && networks_by_depth.iter().all(|&c| c > 0),
        format!(
            "{total} networks (1/2/3 hidden layers: {:?}), {checked} parameters: max relative error {max_rel:.2e} (tol 1e-4); {resampled} draws resampled near a ReLU kink",
            networks_by_depth
        ),
    );
}

// ---------------------------------------------------------------------------
// 4. Identity-K loss is bit-identical to single-head TD.

fn reference_td(q: &Array2<f64>, actions: &[usize], ys: &[f64]) -> (f64, Array2<f64>) {
    let b = q.nrows();
    let scale = 2.0 / b as f64;
    let mut grad = Array2::zeros(q.dim());
    let mut total = 0.0;
    for i in 0..b {
        let diff = q[[i, actions[i]]] - ys[i];
        total += diff * diff;
        grad[[i, actions[i]]] = scale * diff;
    }
    (total / b as f64, grad)
}

fn criterion_4(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let cases = 2_000;
    let mut mismatches = 0;
    let mut identity_used = true;
    for _ in 0..cases {
        let b = rng.gen_range(1..65);
        let heads = rng.gen_range(1..40);
        let q = Array2::from_shape_fn((b, heads), |_| rng.gen_range(-50.0..50.0));
        let actions: Vec<usize> = (0..b).map(|_| rng.gen_range(0..heads)).collect();
        let ys: Vec<f64> = (0..b).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let targets: Vec<QBatchTarget> = ys.iter().map(|&y| QBatchTarget { y }).collect();

        // The matrix a non-oracle agent trains with, whatever the augmentation says.
        let any_k = random_k(&mut rng, heads);
        let config = actgap::dqn::DqnConfig::new(any_k, false, 1_000);
        let k = config.effective_k();
        identity_used &= k.is_identity();

        let (loss, grad) = weighted_td_loss(q.view(), &actions, &targets, &k).unwrap();
        let (ref_loss, ref_grad) = reference_td(&q, &actions, &ys);
        let same = loss.to_bits() == ref_loss.to_bits()
            && grad.iter().zip(ref_grad.iter()).all(|(a, b)| a.to_bits() == b.to_bits());
        if !same {
            mismatches += 1;
        }
    }
    report.line(
        "4",
        mismatches == 0 && identity_used,
        format!("{cases} random batches with oracle=false: {mismatches} not bit-identical to single-head TD (loss and gradient)"),
    );
}

// ---------------------------------------------------------------------------
// Deep-Q regime experiments.

/// Desk-scale DQN settings shared by criteria 5 to 8. Every arm of every
/// experiment uses the same settings; only the action space differs.
/// Normalizing by clique size leaves identity-K arms untouched and keeps the
/// oracle's summed gradient at the scale the norm clip was chosen for.
fn desk_config(env: EnvKind, arms: Vec<ArmSpec>) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(env, arms);
    c.dqn.hidden = vec![64, 64];
    c.dqn.batch_size = 32;
    c.dqn.normalize_by_clique = true;
    match env {
        EnvKind::CartPole => {
            c.seeds = (0..CARTPOLE_SEEDS).collect();
            c.budget = CARTPOLE_BUDGET;
            c.threshold = Some(CARTPOLE_THRESHOLD);
        }
        _ => {
            c.seeds = (0..PENDULUM_SEEDS).collect();
            c.budget = PENDULUM_BUDGET;
            c.threshold = Some(PENDULUM_THRESHOLD);
        }
    }
    c
}

// CartPole's canonical 475 is not reached within these budgets, so the
// thresholds are levels the baseline reaches in every seed.
const CARTPOLE_SEEDS: u64 = 10;
const CARTPOLE_BUDGET: u64 = 40_000;
const CARTPOLE_THRESHOLD: f64 = 195.0;
// Pendulum gaps at N = 5 and N = 15 are close, so the sweep uses more seeds.
const PENDULUM_SEEDS: u64 = 20;
const PENDULUM_BUDGET: u64 = 20_000;
const PENDULUM_THRESHOLD: f64 = -300.0;

struct Experiment {
    config: ExperimentConfig,
    outcome: ExperimentOutcome,
    _dir: tempfile::TempDir,
}

impl Experiment {
    fn run(config: ExperimentConfig) -> Experiment {
        let dir = tempfile::tempdir().unwrap();
        let outcome = run_experiment(&config, dir.path(), 1).unwrap();
        if let Some(run) = outcome.failures().next() {
            panic!("run {} seed {} failed: {:?}", run.arm, run.seed, run.status);
        }
        Experiment { config, outcome, _dir: dir }
    }

    fn curves(&self, arm: &str) -> Vec<&LearningCurve> {
        self.outcome.curves(arm)
    }

    fn median_steps(&self, arm: &str) -> f64 {
        let t = self.config.threshold.unwrap();
        let v: Vec<f64> = self
            .curves(arm)
            .iter()
            .map(|c| steps_to_threshold(c, t, self.config.window).unwrap_or(self.config.budget) as f64)
            .collect();
        median(&v).unwrap()
    }

    fn median_auc(&self, arm: &str) -> f64 {
        let v: Vec<f64> = self.curves(arm).iter().map(|c| curve_auc(c, self.config.budget)).collect();
        median(&v).unwrap()
    }

    fn median_final(&self, arm: &str) -> f64 {
        let v: Vec<f64> = self.curves(arm).iter().map(|c| c.final_mean(self.config.window).unwrap()).collect();
        median(&v).unwrap()
    }

    /// Every CSV on disk parses back to the in-memory curve.
    fn csv_round_trip_failures(&self) -> usize {
        self.outcome
            .runs
            .iter()
            .filter(|r| {
                let parsed = LearningCurve::read_csv_path(&self.outcome.out_dir.join(&r.path)).ok();
                r.status != RunStatus::Ok || parsed.as_ref() != r.curve.as_ref()
            })
            .count()
    }
}

fn arm(name: &str, kind: ArmKind, aug: AugmentationSpec) -> ArmSpec {
    ArmSpec::new(name, kind, aug)
}

fn criterion_5(report: &mut Report) -> Experiment {
    let start = Instant::now();
    let e = Experiment::run(desk_config(
        EnvKind::CartPole,
        vec![
            arm("baseline", ArmKind::Baseline, AugmentationSpec::none()),
            arm("oracle", ArmKind::Oracle, AugmentationSpec::duplicate(5)),
            arm("unmodified", ArmKind::Unmodified, AugmentationSpec::duplicate(5)),
        ],
    ));
    let (b, o, u) = (e.median_steps("baseline"), e.median_steps("oracle"), e.median_steps("unmodified"));
    let oracle_ratio = o / b;
    let unmod_ratio = u / b;
    let pass_a = (oracle_ratio - 1.0).abs() <= 0.25;
    let pass_b = (1.0..=2.5).contains(&unmod_ratio);
    report.line(
        "5",
        pass_a && pass_b,
        format!(
            "CartPole 5x duplicates, {CARTPOLE_SEEDS} seeds, threshold {CARTPOLE_THRESHOLD}: median steps baseline {b:.0}, oracle {o:.0}, unmodified {u:.0}; (a) oracle/baseline {oracle_ratio:.3} (tol 1 +/- 0.25) {}; (b) unmodified/baseline {unmod_ratio:.3} (band [1.0, 2.5]) {}; {:.0}s",
            verdict(pass_a),
            verdict(pass_b),
            start.elapsed().as_secs_f64()
        ),
    );
    e
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "ok"
    } else {
        "MISSED"
    }
}

fn pendulum() -> EnvKind {
    EnvKind::Pendulum { torques: 3 }
}

fn criterion_6(report: &mut Report) -> Experiment {
    let start = Instant::now();
    let mut arms = vec![arm("baseline", ArmKind::Baseline, AugmentationSpec::none())];
    for n in [5, 15, 50] {
        arms.push(arm(&format!("oracle-n{n}"), ArmKind::Oracle, AugmentationSpec::duplicate(n)));
        arms.push(arm(&format!("unmodified-n{n}"), ArmKind::Unmodified, AugmentationSpec::duplicate(n)));
    }
    let e = Experiment::run(desk_config(pendulum(), arms));
    let base_final = e.median_final("baseline");
    let oracle50_final = e.median_final("oracle-n50");
    let pass_a = (oracle50_final - base_final).abs() <= 0.10 * base_final.abs();
    let gap = |n: usize| e.median_auc(&format!("oracle-n{n}")) - e.median_auc(&format!("unmodified-n{n}"));
    let (g5, g15, g50) = (gap(5), gap(15), gap(50));
    let pass_b = g50 > 0.0 && g50 > g5;
    let pass_c = g5 < g15 && g15 < g50;
    report.line(
        "6",
        pass_a && pass_b && pass_c,
        format!(
            "Pendulum duplicate sweep, {PENDULUM_SEEDS} seeds, threshold {PENDULUM_THRESHOLD}: (a) final-window return oracle-N50 {oracle50_final:.1} vs baseline {base_final:.1} (tol 10%) {}; (b) AUC gap N50 {g50:.1} > 0 and > N5 gap {g5:.1} {}; (c) gaps N5 {g5:.1} < N15 {g15:.1} < N50 {g50:.1} {}; {:.0}s",
            verdict(pass_a),
            verdict(pass_b),
            verdict(pass_c),
            start.elapsed().as_secs_f64()
        ),
    );
    e
}

fn criterion_7(report: &mut Report) -> Experiment {
    let start = Instant::now();
    let hs = [0.2, 0.5, 0.8];
    let mut arms = Vec::new();
    for h in hs {
        let tag = format!("h{}", (h * 10.0) as u32);
        arms.push(arm(&format!("oracle-{tag}"), ArmKind::Oracle, AugmentationSpec::semi_duplicate(h)));
        arms.push(arm(&format!("unmodified-{tag}"), ArmKind::Unmodified, AugmentationSpec::semi_duplicate(h)));
    }
    let e = Experiment::run(desk_config(pendulum(), arms));
    let mut pass = true;
    let mut parts = Vec::new();
    for h in hs {
        let tag = format!("h{}", (h * 10.0) as u32);
        let ratio = e.median_steps(&format!("unmodified-{tag}")) / e.median_steps(&format!("oracle-{tag}"));
        let ok = (ratio - 1.0).abs() <= 0.35;
        pass &= ok;
        parts.push(format!("h={h}: unmodified/oracle {ratio:.3} {}", verdict(ok)));
    }
    report.line(
        "7",
        pass,
        format!(
            "Pendulum semi-duplicates, {PENDULUM_SEEDS} seeds, threshold {PENDULUM_THRESHOLD}, tol |ratio - 1| <= 0.35: {}; {:.0}s",
            parts.join(", "),
            start.elapsed().as_secs_f64()
        ),
    );
    e
}

fn criterion_8(report: &mut Report, pendulum_baseline: &Experiment) -> Experiment {
    let start = Instant::now();
    let e = Experiment::run(desk_config(
        pendulum(),
        vec![
            arm("oracle-clique", ArmKind::Oracle, AugmentationSpec::random(RandomK::Clique)),
            arm("unmodified", ArmKind::Unmodified, AugmentationSpec::random(RandomK::Clique)),
            arm("oracle-identity", ArmKind::Oracle, AugmentationSpec::random(RandomK::Identity)),
        ],
    ));
    let base_auc = pendulum_baseline.median_auc("baseline");
    let (oc, un) = (e.median_auc("oracle-clique"), e.median_auc("unmodified"));
    let pass_a = oc < base_auc && un < base_auc;
    let base_steps = pendulum_baseline.median_steps("baseline");
    let id_steps = e.median_steps("oracle-identity");
    let id_ratio = id_steps / base_steps;
    let pass_b = (id_ratio - 1.0).abs() <= 0.25;
    report.line(
        "8",
        pass_a && pass_b,
        format!(
            "Pendulum random actions, {PENDULUM_SEEDS} seeds: (a) median AUC oracle-clique {oc:.1}, unmodified {un:.1} < baseline {base_auc:.1} {}; (b) random_k=identity oracle steps {id_steps:.0} vs baseline {base_steps:.0}, ratio {id_ratio:.3} (tol 1 +/- 0.25) {}; {:.0}s",
            verdict(pass_a),
            verdict(pass_b),
            start.elapsed().as_secs_f64()
        ),
    );
    report.note(format!(
        "reported, not gated: clique-K oracle vs unmodified AUC gap = {:.1} ({})",
        oc - un,
        if oc < un { "negative: oracle worse" } else { "non-negative" }
    ));
    e
}

// ---------------------------------------------------------------------------
// 9. Determinism and formats.

fn svg_for(e: &Experiment) -> String {
    let groups = e
        .config
        .arms
        .iter()
        .map(|a| PlotGroup { label: a.name.clone(), curves: e.curves(&a.name).into_iter().cloned().collect() })
        .collect();
    let spec = PlotSpec {
        groups,
        window: 20,
        title: e.config.name.clone(),
        x_label: "steps".into(),
        y_label: "return".into(),
        output: "unused.svg".into(),
    };
    render_svg(&spec).unwrap()
}

fn same_bytes(a: &Path, b: &Path) -> bool {
    std::fs::read(a).ok().is_some_and(|x| std::fs::read(b).ok().is_some_and(|y| x == y))
}

fn criterion_9(report: &mut Report, experiments: &[&Experiment]) {
    let round_trip: usize = experiments.iter().map(|e| e.csv_round_trip_failures()).sum();
    let total_runs: usize = experiments.iter().map(|e| e.outcome.runs.len()).sum();

    // Rerun a subset of seeds of every experiment on two workers: runs are
    // independent per seed, so the CSVs must equal the originals byte for byte.
    let mut compared = 0;
    let mut differing = 0;
    for e in experiments {
        let mut config = e.config.clone();
        config.seeds = vec![config.seeds[0], config.seeds[3]];
        let dir = tempfile::tempdir().unwrap();
        let rerun = run_experiment(&config, dir.path(), 2).unwrap();
        for run in &rerun.runs {
            compared += 1;
            if !same_bytes(&dir.path().join(&run.path), &e.outcome.out_dir.join(&run.path)) {
                differing += 1;
            }
        }
    }
    let svg_stable = experiments.iter().all(|e| svg_for(e) == svg_for(e));
    report.line(
        "9",
        round_trip == 0 && differing == 0 && svg_stable,
        format!(
            "CSV round-trip failures {round_trip}/{total_runs}; rerun CSVs differing {differing}/{compared}; SVG rendering byte-stable: {svg_stable}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 10. Out of scope.

fn criterion_10(report: &mut Report) {
    let readme =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md")).unwrap_or_default();
    let documented = readme.contains("Atari") && readme.contains("LunarLander");
    let rejected = ["lunarlander", "atari", "pong"].iter().all(|n| n.parse::<EnvKind>().is_err());
    report.line(
        "10",
        documented && rejected,
        format!("Atari and LunarLander documented as out of scope: {documented}; no such environment is constructible: {rejected}"),
    );
}

fn main() {
    // Accept and ignore libtest-style arguments such as `--nocapture`.
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |id: &str| filter.is_empty() || filter.iter().any(|f| f == id);
    let mut report = Report { failures: Vec::new() };

    if wanted("1") {
        criterion_1(&mut report);
    }
    if wanted("2") {
        criterion_2(&mut report);
    }
    if wanted("3") {
        criterion_3(&mut report);
    }
    if wanted("4") {
        criterion_4(&mut report);
    }
    let mut experiments = Vec::new();
    if wanted("5") || wanted("9") {
        experiments.push(criterion_5(&mut report));
    }
    if wanted("6") || wanted("8") || wanted("9") {
        let e6 = criterion_6(&mut report);
        if wanted("7") || wanted("9") {
            experiments.push(criterion_7(&mut report));
        }
        experiments.push(criterion_8(&mut report, &e6));
        experiments.push(e6);
    } else if wanted("7") {
        experiments.push(criterion_7(&mut report));
    }
    if wanted("9") {
        let refs: Vec<&Experiment> = experiments.iter().collect();
        criterion_9(&mut report, &refs);
    }
    if wanted("10") {
        criterion_10(&mut report);
    }

    if report.failures.is_empty() {
        eprintln!("acceptance: all criteria passed");
    } else {
        eprintln!("acceptance: failed criteria {}", report.failures.join(", "));
        std::process::exit(1);
    }
}
