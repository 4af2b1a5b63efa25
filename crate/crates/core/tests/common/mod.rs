//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use streamboost::dataset::Supervision;
use streamboost::losses::{LossKind, LossSpec};

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    (lo + hi) / 2.0
}

/// Cyclic coordinate descent with golden-section line searches on the box
/// `[-radius, radius]^m`, for convex `f`.
pub fn coordinate_min(f: impl Fn(&[f64]) -> f64, m: usize, radius: f64) -> Vec<f64> {
    let mut x = vec![0.0; m];
    let mut prev = f(&x);
    for _ in 0..400 {
        for k in 0..m {
            let xk = golden_section(
                |v| {
                    let mut y = x.clone();
                    y[k] = v;
                    f(&y)
                },
                -radius,
                radius,
            );
            x[k] = xk;
        }
        let cur = f(&x);
        if (prev - cur).abs() < 1e-15 {
            break;
        }
        prev = cur;
    }
    x
}

/// One loss configuration under test, with the radius on which its
/// constants hold.
pub struct LossCase {
    pub spec: LossSpec,
    pub radius: f64,
}

pub fn loss_cases() -> Vec<LossCase> {
    let mk = |kind, m, reg: f64, radius: f64| LossCase {
        spec: LossSpec::new(kind, m)
            .unwrap()
            .with_reg(reg)
            .unwrap()
            .with_domain_bound(radius)
            .unwrap(),
        radius,
    };
    vec![
        mk(LossKind::Square, 2, 0.0, 4.0),
        mk(LossKind::Square, 3, 0.3, 4.0),
        mk(LossKind::LogisticL2, 1, 0.0, 4.0),
        mk(LossKind::LogisticL2, 1, 0.1, 6.0),
        mk(LossKind::HingeL2, 1, 0.1, 6.0),
        mk(LossKind::L1, 2, 0.2, 4.0),
        mk(LossKind::MulticlassCe, 3, 0.1, 6.0),
    ]
}

/// Supervision for `spec` from a selector in `[0, 1)` and target values.
pub fn supervision(spec: &LossSpec, selector: f64, target: &[f64]) -> Supervision {
    match spec.kind {
        LossKind::Square | LossKind::L1 => Supervision::Target(target[..spec.outputs].to_vec()),
        LossKind::LogisticL2 | LossKind::HingeL2 => Supervision::Sign(if selector < 0.5 { -1.0 } else { 1.0 }),
        LossKind::MulticlassCe => Supervision::Class(((selector * spec.outputs as f64) as usize).min(spec.outputs - 1)),
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Rescales `v` into the ball of radius `r` when it lies outside.
pub fn into_ball(v: &[f64], r: f64) -> Vec<f64> {
    let n = norm_sq(v).sqrt();
    if n > r {
        v.iter().map(|x| x * r / n).collect()
    } else {
        v.to_vec()
    }
}

/// Least-squares fit `w x + b` of scalar targets by the normal equations,
/// solved with Gaussian elimination.
pub fn least_squares(xs: &[Vec<f64>], zs: &[f64]) -> Vec<f64> {
    let d = xs[0].len() + 1;
    let mut a = vec![vec![0.0; d + 1]; d];
    for (x, z) in xs.iter().zip(zs) {
        let row: Vec<f64> = x.iter().copied().chain(std::iter::once(1.0)).collect();
        for i in 0..d {
            for j in 0..d {
                a[i][j] += row[i] * row[j];
            }
            a[i][d] += row[i] * z;
        }
    }
    for col in 0..d {
        let piv = (col..d).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for r in 0..d {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=d {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..d).map(|i| a[i][d] / a[i][i]).collect()
}

/// Held-out square errors of the tree-ensemble replication protocol.
#[derive(Debug)]
pub struct Replication {
    pub sgb: f64,
    pub gb: f64,
    pub base: f64,
}

pub const REPLICATION_LEARNERS: usize = 8;
/// Shared step of both ensembles; a weak prediction approximates twice the
/// residual, so 0.25 removes about half of what each stage fits.
pub const REPLICATION_ETA: f64 = 0.25;

/// 90/10 split, square loss, depth-4 buffered trees, one pass for streaming
/// boosting, each model scored with its default test predictor. The
/// baseline is one tree fitted to the targets themselves (step 0.5 undoes
/// the gradient's factor 2).
pub fn replicate(all: &streamboost::dataset::Dataset, seed: u64) -> Replication {
    use streamboost::dataset::split;
    use streamboost::learners::LearnerConfig;
    use streamboost::metrics::{run, test_risk, Comparator, EtaChoice, RunSpec};
    use streamboost::model_io::Algorithm;

    let (train, test) = split(all, 0.1, seed).unwrap();
    let loss = LossSpec::new(LossKind::Square, 1).unwrap();
    let learner = LearnerConfig::tree(4, 512, 64);
    let comparator = Comparator::oracle(|_| vec![0.0]);
    let mean = train
        .samples()
        .iter()
        .map(|s| match &s.supervision {
            Supervision::Target(z) => z[0],
            _ => unreachable!("regression data"),
        })
        .sum::<f64>()
        / train.len() as f64;
    let fit = |algorithm, n, configure: &dyn Fn(&mut RunSpec)| {
        let mut spec = RunSpec::new(algorithm, loss.clone(), learner.clone(), n);
        spec.y0 = Some(vec![mean]);
        spec.seed = seed;
        configure(&mut spec);
        let model = run(&spec, &train, &comparator, &[], false).unwrap().model;
        test_risk(&model, model.default_predictor(), &loss, &test).unwrap()
    };
    Replication {
        sgb: fit(Algorithm::SgbSmooth, REPLICATION_LEARNERS, &|s| {
            s.eta = EtaChoice::Fixed(REPLICATION_ETA);
        }),
        gb: fit(Algorithm::BatchGb, REPLICATION_LEARNERS, &|s| s.gb_eta = Some(REPLICATION_ETA)),
        base: fit(Algorithm::BatchGb, 1, &|s| s.gb_eta = Some(0.5)),
    }
}
