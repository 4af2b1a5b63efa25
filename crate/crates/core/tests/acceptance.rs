//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line.

mod common;

use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use streamboost::batch_gb::closed_form_cost;
use streamboost::dataset::{load_libsvm, LoadOptions, Supervision, TaskKind};
use streamboost::learners::{edge_existence_check, measure_edge, EdgeTracker, LearnerConfig};
use streamboost::losses::{LossKind, LossSpec};
use streamboost::metrics::{
    counterexample_run, run, sweep_n, write_step_log, write_sweep_n, CounterexampleConfig, RunSpec,
    TrainedModel,
};
use streamboost::model_io::Algorithm;
use streamboost::sgb_nonsmooth::{c_constant, nonsmooth_bound};
use streamboost::synthetic::{generate, oracle_comparator, SyntheticKind};

fn report(name: &str, ok: bool, detail: &str) {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

fn within(start: Instant, limit: Duration) -> (bool, String) {
    let e = start.elapsed();
    (e < limit, format!("{:.2}s of {}s", e.as_secs_f64(), limit.as_secs()))
}

fn random_point(rng: &mut ChaCha8Rng, m: usize, radius: f64) -> Vec<f64> {
    let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-radius..radius)).collect();
    into_ball(&v, radius * 0.999)
}

fn random_supervision(rng: &mut ChaCha8Rng, spec: &LossSpec) -> Supervision {
    let target: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
    supervision(spec, rng.gen(), &target)
}

#[test]
fn criterion_1_loss_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut fd_checked, mut fd_worst) = (0, 0.0f64);
    let (mut pairs, mut violations) = (0, 0);
    let (mut identity_checked, mut identity_violations) = (0, 0);
    for case in loss_cases() {
        let spec = &case.spec;
        let m = spec.outputs;
        let k = spec.convexity().unwrap();
        if spec.kind.is_smooth() {
            for _ in 0..100 {
                let sup = random_supervision(&mut rng, spec);
                let l = spec.at(&sup).unwrap();
                let y = random_point(&mut rng, m, case.radius);
                let g = l.gradient(&y).unwrap();
                for j in 0..m {
                    let h = 1e-6;
                    let (mut p, mut q) = (y.clone(), y.clone());
                    p[j] += h;
                    q[j] -= h;
                    let fd = (l.value(&p).unwrap() - l.value(&q).unwrap()) / (2.0 * h);
                    fd_worst = fd_worst.max((fd - g[j]).abs());
                }
                fd_checked += 1;
            }
        }
        for _ in 0..500 {
            let sup = random_supervision(&mut rng, spec);
            let l = spec.at(&sup).unwrap();
            let a = random_point(&mut rng, m, case.radius);
            let b = random_point(&mut rng, m, case.radius);
            let d: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
            let gap = l.value(&a).unwrap() - l.value(&b).unwrap() - dot(&l.gradient(&b).unwrap(), &d);
            let lower = k.lambda_sc / 2.0 * norm_sq(&d);
            let upper = k.beta_sm.map_or(f64::INFINITY, |beta| beta / 2.0 * norm_sq(&d));
            if gap < lower - 1e-8 || gap > upper + 1e-8 {
                violations += 1;
            }
            pairs += 1;
        }
        for _ in 0..50 {
            let sup = random_supervision(&mut rng, spec);
            let l = spec.at(&sup).unwrap();
            let y = random_point(&mut rng, m, case.radius);
            let f = |v: &[f64]| l.value(v).unwrap();
            let search = if spec.kind == LossKind::LogisticL2 { case.radius } else { 20.0 };
            let star = coordinate_min(f, m, search);
            let lhs = norm_sq(&l.gradient(&y).unwrap());
            if lhs < 2.0 * k.lambda_sc * (f(&y) - f(&star)) - 1e-8 {
                identity_violations += 1;
            }
            identity_checked += 1;
        }
    }
    let (fast, time) = within(start, Duration::from_secs(5));
    report(
        "loss suite",
        fd_worst <= 1e-5 && violations == 0 && identity_violations == 0 && fast,
        &format!(
            "{fd_checked} gradient points (worst error {fd_worst:.2e}), {pairs} convexity pairs \
             ({violations} violations), {identity_checked} identity points ({identity_violations} \
             violations), {time}"
        ),
    );
}

#[test]
fn criterion_2_edge_measurement() {
    let start = Instant::now();
    let (data, _) = generate(SyntheticKind::Linear, 2000, 5, 0.1, 4).unwrap();
    let targets: Vec<Vec<f64>> = data
        .samples()
        .iter()
        .map(|s| match &s.supervision {
            Supervision::Target(z) => z.clone(),
            _ => unreachable!(),
        })
        .collect();
    let halves: Vec<Vec<f64>> = targets.iter().map(|z| z.iter().map(|v| 0.5 * v).collect()).collect();
    let half_edge = measure_edge(
        targets.iter().map(Vec::as_slice).zip(halves.iter().map(Vec::as_slice)),
        100,
    )
    .unwrap()
    .gamma_hat;

    // f* = [1, 1] against H = { a [1, 0] }: an online least-squares learner
    // for a, measured by the streaming edge tracker
    let t_max = 10_000;
    let f_star = [1.0, 1.0];
    let mut tracker = EdgeTracker::new(1000);
    let (mut a, mut sum) = (0.0, 0.0);
    for t in 1..=t_max {
        tracker.push(&f_star, &[a, 0.0]);
        sum += f_star[0];
        a = sum / t as f64;
    }
    let online = tracker.report().unwrap().gamma_hat;
    // brute-force oracle over a grid of scalings
    let best_loss = (-4000..=4000)
        .map(|k| {
            let a = k as f64 * 1e-3;
            t_max as f64 * ((f_star[0] - a).powi(2) + f_star[1].powi(2))
        })
        .fold(f64::INFINITY, f64::min);
    let oracle = 1.0 - best_loss / (t_max as f64 * norm_sq(&f_star));
    let basis = vec![vec![vec![1.0, 0.0]; t_max]];
    let predicted = edge_existence_check(&basis, &vec![f_star.to_vec(); t_max]).unwrap();

    let (fast, time) = within(start, Duration::from_secs(5));
    report(
        "edge measurement",
        (half_edge - 0.75).abs() <= 1e-9
            && (online - oracle).abs() <= 0.02
            && (oracle - 0.5).abs() <= 0.02
            && (predicted - 0.5).abs() <= 1e-12
            && fast,
        &format!(
            "half predictor {half_edge:.12}, online class edge {online:.5}, brute-force {oracle:.5}, \
             projection {predicted:.5}, {time}"
        ),
    );
}

#[test]
fn criterion_3_exponential_decay() {
    let start = Instant::now();
    let (train, f) = generate(SyntheticKind::Linear, 50_000, 5, 0.2, 3).unwrap();
    let loss = LossSpec::new(LossKind::Square, 1).unwrap();
    let comparator = oracle_comparator(SyntheticKind::Linear, &f, &loss).unwrap();
    let mut spec = RunSpec::new(Algorithm::SgbSmooth, loss.clone(), LearnerConfig::linear_ogd(0.1), 1);
    spec.seed = 3;
    let ns = [1, 2, 4, 8];
    let rows = sweep_n(&train, &comparator, &spec, &ns, 4).unwrap();
    let k = loss.convexity().unwrap();
    let (lambda, beta) = (k.lambda_sc, k.beta_sm.unwrap());
    let mut ok = rows.iter().all(|r| r.avg_regret > 0.0);
    let mut lines = Vec::new();
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let gamma = b
            .gammas
            .iter()
            .map(|g| g.unwrap_or(0.0))
            .fold(f64::INFINITY, f64::min)
            .clamp(0.0, 1.0);
        let per_learner = (b.avg_regret / a.avg_regret).powf(1.0 / (b.n - a.n) as f64);
        let allowed = 1.0 - gamma * gamma * lambda / (16.0 * beta) + 0.1;
        ok &= b.avg_regret < a.avg_regret && per_learner <= allowed;
        lines.push(format!("N {}->{}: per-learner ratio {per_learner:.4} <= {allowed:.4}", a.n, b.n));
    }
    let regrets: Vec<String> = rows.iter().map(|r| format!("{}:{:.3e}", r.n, r.avg_regret)).collect();
    let (fast, time) = within(start, Duration::from_secs(60));
    report(
        "exponential decay",
        ok && fast,
        &format!("regret {}; {}; {time}", regrets.join(" "), lines.join("; ")),
    );
}

#[test]
fn criterion_4_residual_rate() {
    let start = Instant::now();
    let t = 50_000;
    let (train, f) = generate(SyntheticKind::Binary, t, 5, 0.05, 5).unwrap();
    let radius = 1.0;
    let loss = LossSpec::new(LossKind::HingeL2, 1)
        .unwrap()
        .with_reg(0.1)
        .unwrap()
        .with_domain_bound(radius)
        .unwrap();
    let lambda = loss.convexity().unwrap().lambda_sc;
    let g_bound = loss.bounds(1.0).unwrap().grad_bound;
    let comparator = oracle_comparator(SyntheticKind::Binary, &f, &loss).unwrap();
    let mut ok = (lambda - 0.2).abs() < 1e-12;
    let mut lines = Vec::new();
    for n in [1, 2, 4, 8, 16] {
        let mut spec = RunSpec::new(Algorithm::SgbResidual, loss.clone(), LearnerConfig::linear_ftrl(1.0), n);
        spec.radius = radius;
        spec.seed = 5;
        let out = run(&spec, &train, &comparator, &[], false).unwrap();
        let edges: Vec<_> = out.model.edges().into_iter().map(|e| e.expect("edge defined")).collect();
        let gamma = edges.iter().map(|e| e.gamma_hat).fold(f64::INFINITY, f64::min);
        let excess = edges.iter().map(|e| e.excess_estimate).fold(0.0, f64::max);
        let steps = out.regret.steps() as f64;
        let (c, _) = match c_constant(gamma, excess, steps, g_bound) {
            Ok(c) => c,
            Err(e) => {
                ok = false;
                lines.push(format!("N {n}: c undefined ({e})"));
                continue;
            }
        };
        let bound = nonsmooth_bound(c, g_bound, lambda, n);
        let regret = out.regret.avg_regret();
        let cap = c * c * g_bound * g_bound * steps;
        let residual_ok = out.model.stats().iter().all(|s| s.residual_sq <= cap && s.pred_sq <= 4.0 * cap);
        ok &= regret <= bound && residual_ok;
        lines.push(format!(
            "N {n}: regret {regret:.4} <= {bound:.4} (gamma {gamma:.3}, c {c:.3}), residual energy {}",
            if residual_ok { "within" } else { "EXCEEDS" }
        ));
    }
    let (fast, time) = within(start, Duration::from_secs(90));
    report("residual rate", ok && fast, &format!("{}; {time}", lines.join("; ")));
}

#[test]
fn criterion_5_counterexample() {
    let start = Instant::now();
    let t = 5000;
    let mut lines = Vec::new();
    let mut ok = true;
    for n in [2, 8] {
        let r = counterexample_run(&CounterexampleConfig::new(t, n, [1.0, 1.0])).unwrap();
        let constant = r.trajectory.iter().all(|y| y[1] == 1.0);
        let total: f64 = r.trajectory.iter().map(|y| 2.0 * y[0].abs() + y[1].abs()).sum();
        ok &= constant && r.y2_constant && total >= t as f64 && r.total_regret >= t as f64;
        lines.push(format!("N {n}: second coordinate constant {constant}, total regret {total:.1}"));
    }
    let (fast, time) = within(start, Duration::from_secs(10));
    report("counterexample", ok && fast, &format!("{}; {time}", lines.join("; ")));
}

#[test]
fn criterion_6_cost_accounting() {
    let start = Instant::now();
    let (train, f) = generate(SyntheticKind::Linear, 1000, 5, 0.1, 6).unwrap();
    let loss = LossSpec::new(LossKind::Square, 1).unwrap();
    let comparator = oracle_comparator(SyntheticKind::Linear, &f, &loss).unwrap();
    let spec = RunSpec::new(Algorithm::SgbSmooth, loss.clone(), LearnerConfig::linear_ogd(0.1), 7);
    let sgb = run(&spec, &train, &comparator, &[], false).unwrap().costs().total();

    let mut spec = RunSpec::new(Algorithm::BatchGb, loss, LearnerConfig::linear_ogd(0.1), 7);
    spec.gb.max_passes = 5;
    let out = run(&spec, &train, &comparator, &[], false).unwrap();
    let TrainedModel::Batch(gb) = &out.model else { unreachable!() };
    let samples: Vec<u64> = gb.stages().iter().map(|s| s.samples).collect();
    let expected: u64 = samples.iter().enumerate().map(|(i, t)| t * (i as u64 + 3)).sum();
    let batch = out.costs().total();

    let (fast, time) = within(start, Duration::from_secs(10));
    report(
        "cost accounting",
        sgb == 21_000 && batch == expected && closed_form_cost(&samples) == expected && fast,
        &format!("sgb {sgb} (expected 21000), batch {batch} (closed form {expected}, stages {samples:?}), {time}"),
    );
}

fn abalone_path() -> Option<PathBuf> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    std::env::var_os("STREAMBOOST_ABALONE")
        .map(PathBuf::from)
        .into_iter()
        .chain([root.join("data/abalone"), root.join("data/abalone.libsvm")])
        .find(|p| p.is_file())
}

#[test]
fn criterion_7_abalone() {
    let start = Instant::now();
    let Some(path) = abalone_path() else {
        report(
            "abalone replication",
            false,
            "dataset not found; set STREAMBOOST_ABALONE or place the libsvm file at data/abalone",
        );
        return;
    };
    let all = load_libsvm(&path, LoadOptions { task: TaskKind::Regression, dim: Some(8) }).unwrap();
    let r = replicate(&all, 7);
    let (fast, time) = within(start, Duration::from_secs(300));
    report(
        "abalone replication",
        all.len() == 4177 && r.sgb <= 1.25 * r.gb && r.sgb <= 0.5 * r.base && r.gb <= 0.5 * r.base && fast,
        &format!(
            "{} samples, test square error sgb {:.4}, gb {:.4}, base {:.4}, {time}",
            all.len(),
            r.sgb,
            r.gb,
            r.base
        ),
    );
}

fn library_csv(seed: u64) -> Vec<u8> {
    let (train, f) = generate(SyntheticKind::Linear, 800, 5, 0.1, seed).unwrap();
    let loss = LossSpec::new(LossKind::Square, 1).unwrap();
    let comparator = oracle_comparator(SyntheticKind::Linear, &f, &loss).unwrap();
    let mut spec = RunSpec::new(Algorithm::SgbSmooth, loss, LearnerConfig::tree(3, 128, 16), 3);
    spec.seed = seed;
    let mut bytes = Vec::new();
    write_step_log(&run(&spec, &train, &comparator, &[], true).unwrap().log, &mut bytes).unwrap();
    write_sweep_n(&sweep_n(&train, &comparator, &spec, &[1, 2, 4], 3).unwrap(), &mut bytes).unwrap();
    bytes
}

fn cli_csv(dir: &std::path::Path, args: &[&str], out: &str) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_streamboost"))
        .current_dir(dir)
        .env_remove("STREAMBOOST_SEED")
        .args(args)
        .stdout(Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    std::fs::read(dir.join(out)).unwrap()
}

#[test]
fn criterion_8_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let train = |out: &str| {
        let args = ["train", "--data", "synthetic:linear", "--learner", "tree", "--n", "3", "--seed", "9", "--metrics", out];
        cli_csv(dir.path(), &args, out)
    };
    let sweep = |out: &str| {
        let args = [
            "sweep", "--data", "synthetic:binary", "--algo", "sgb_residual", "--loss", "hinge_l2", "--set",
            "reg_lambda=0.1", "--axis", "n", "--set", "jobs=3", "--seed", "9", "--out", out,
        ];
        cli_csv(dir.path(), &args, out)
    };
    let same_library = library_csv(9) == library_csv(9);
    let same_train = train("a.csv") == train("b.csv");
    let same_sweep = sweep("c.csv") == sweep("d.csv");
    let differs = library_csv(9) != library_csv(10);
    report(
        "determinism",
        same_library && same_train && same_sweep && differs,
        &format!(
            "library csv identical {same_library}, train csv identical {same_train}, sweep csv identical \
             {same_sweep}, other seed differs {differs}"
        ),
    );
}
