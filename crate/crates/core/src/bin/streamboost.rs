use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use streamboost::commands::{run_counterexample, run_eval, run_sweep, run_train, SweepRows};
use streamboost::config::{RawConfig, RunConfig};
use streamboost::metrics::fmt_num;
use streamboost::Result;

#[derive(Parser)]
#[command(name = "streamboost", version, about = "Streaming gradient boosting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model over the stream; writes the model and per-step metrics.
    Train(Common),
    /// Score a saved model on held-out data.
    Eval(Common),
    /// Average regret against the number of learners (n) or samples (t).
    Sweep(Common),
    /// Axis-restricted learners on a fixed non-smooth loss.
    Counterexample(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// `key = value` config file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key; repeatable. Flags win over the file.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    data: Option<String>,
    #[arg(long = "algo")]
    algorithm: Option<String>,
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    learner: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    metrics: Option<String>,
    #[arg(long = "out")]
    output: Option<String>,
    /// Sweep axis: n or t.
    #[arg(long = "axis")]
    sweep_axis: Option<String>,
    #[arg(long)]
    predictor: Option<String>,
    /// Write the effective configuration to this file.
    #[arg(long)]
    save_config: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut raw = RawConfig::new();
        for pair in &self.set {
            raw.set_pair(pair)?;
        }
        let named = [
            ("data", &self.data),
            ("algorithm", &self.algorithm),
            ("loss", &self.loss),
            ("learner", &self.learner),
            ("n", &self.n),
            ("seed", &self.seed),
            ("model", &self.model),
            ("metrics", &self.metrics),
            ("output", &self.output),
            ("sweep_axis", &self.sweep_axis),
            ("predictor", &self.predictor),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                raw.set(k, v.clone());
            }
        }
        let cfg = RunConfig::resolve(self.config.as_deref(), raw)?;
        if let Some(p) = &self.save_config {
            std::fs::write(p, cfg.to_text()).map_err(|e| streamboost::Error::Io {
                path: p.clone(),
                source: e,
            })?;
        }
        Ok(cfg)
    }
}

fn gammas(g: &[Option<f64>]) -> String {
    g.iter()
        .map(|v| v.map_or_else(|| "undefined".to_string(), fmt_num))
        .collect::<Vec<_>>()
        .join(",")
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(c) => {
            let s = run_train(&c.resolve()?)?;
            println!("steps: {}", s.steps);
            println!("avg_regret: {}", fmt_num(s.avg_regret));
            println!("cost_units: {}", s.cost_units);
            println!("test_risk: {}", fmt_num(s.test_risk));
            println!("gamma_hat: {}", gammas(&s.gamma_hat));
        }
        Command::Eval(c) => {
            let s = run_eval(&c.resolve()?)?;
            println!("samples: {}", s.samples);
            println!("risk: {}", fmt_num(s.risk));
            if let Some(e) = s.square_error {
                println!("square_error: {}", fmt_num(e));
            }
            if let Some(e) = s.error_rate {
                println!("error_rate: {}", fmt_num(e));
            }
        }
        Command::Sweep(c) => {
            let cfg = c.resolve()?;
            let rows = run_sweep(&cfg)?;
            if let Some(p) = &cfg.output {
                let n = match rows {
                    SweepRows::N(r) => r.len(),
                    SweepRows::T(r) => r.len(),
                };
                eprintln!("wrote {n} rows to {}", p.display());
            }
        }
        Command::Counterexample(c) => {
            let r = run_counterexample(&c.resolve()?)?;
            println!("steps: {}", r.config.steps);
            println!("n: {}", r.config.n_learners);
            println!("eta: {}", r.config.eta);
            println!("y2_constant: {}", r.y2_constant);
            println!("max_y2_deviation: {}", fmt_num(r.max_y2_deviation));
            println!("total_regret: {}", fmt_num(r.total_regret));
            println!("avg_regret: {}", fmt_num(r.avg_regret));
            println!("ftl_checks: {}", r.ftl_checks);
            println!("ftl_matches_brute_force: {}", r.ftl_matches());
            if let Some(m) = &r.ftl_mismatch {
                println!("ftl_mismatch: {m}");
            }
            if let Some(o) = &r.residual {
                println!("residual_lambda: {}", o.lambda);
                println!("residual_avg_regret: {}", fmt_num(o.avg_regret));
                println!("residual_y2_range: {} {}", fmt_num(o.y2_min), fmt_num(o.y2_max));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
