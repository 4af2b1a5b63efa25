//! Regret sweeps over the number of learners and over time, with CSV output.

use std::io::Write;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

use super::run::{run, RunSpec, StepLog};
use super::Comparator;

/// Fixed 9-significant-digit scientific formatting used for every CSV float.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.8e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepNRow {
    pub n: usize,
    pub avg_regret: f64,
    /// Edge of each learner; `None` where undefined.
    pub gammas: Vec<Option<f64>>,
    pub cost: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepTRow {
    pub t: u64,
    pub avg_regret: f64,
}

/// One run per entry of `ns`, all with the same seed. `jobs > 1` runs them
/// on scoped threads; the row order always follows `ns`.
pub fn sweep_n(
    train: &Dataset,
    comparator: &Comparator,
    spec: &RunSpec,
    ns: &[usize],
    jobs: usize,
) -> Result<Vec<SweepNRow>> {
    let one = |n: usize| -> Result<SweepNRow> {
        let mut s = spec.clone();
        s.n_learners = n;
        let out = run(&s, train, comparator, &[], false)?;
        Ok(SweepNRow {
            n,
            avg_regret: out.regret.avg_regret(),
            gammas: out.model.edges().iter().map(|e| e.map(|r| r.gamma_hat)).collect(),
            cost: out.costs().total(),
        })
    };
    if jobs <= 1 || ns.len() <= 1 {
        return ns.iter().map(|&n| one(n)).collect();
    }
    let chunk = ns.len().div_ceil(jobs);
    std::thread::scope(|scope| {
        let handles: Vec<_> = ns
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|&n| one(n)).collect::<Result<Vec<_>>>()))
            .collect();
        let mut rows = Vec::with_capacity(ns.len());
        for h in handles {
            rows.extend(h.join().map_err(|_| Error::numeric("sweep worker panicked"))??);
        }
        Ok(rows)
    })
}

/// Average regret of a single run at each checkpoint.
pub fn sweep_t(
    train: &Dataset,
    comparator: &Comparator,
    spec: &RunSpec,
    checkpoints: &[u64],
) -> Result<Vec<SweepTRow>> {
    if checkpoints.is_empty() {
        return Err(Error::Config("sweep over t needs at least one checkpoint".into()));
    }
    let out = run(spec, train, comparator, checkpoints, false)?;
    Ok(out
        .checkpoints
        .iter()
        .map(|&(t, avg_regret)| SweepTRow { t, avg_regret })
        .collect())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Output(format!("csv: {e}"))
}

pub fn write_sweep_n<W: Write>(rows: &[SweepNRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "avg_regret", "gamma", "cost_units"]).map_err(csv_err)?;
    for r in rows {
        let gammas = r
            .gammas
            .iter()
            .map(|g| g.map_or_else(String::new, fmt_num))
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([r.n.to_string(), fmt_num(r.avg_regret), gammas, r.cost.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Output(format!("csv flush: {e}")))
}

pub fn write_sweep_t<W: Write>(rows: &[SweepTRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "avg_regret"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([r.t.to_string(), fmt_num(r.avg_regret)]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Output(format!("csv flush: {e}")))
}

/// Per-step training log: `t, loss, comparator_loss, avg_regret, prediction`
/// with multi-output predictions joined by ';'.
pub fn write_step_log<W: Write>(log: &[StepLog], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "loss", "comparator_loss", "avg_regret", "prediction"])
        .map_err(csv_err)?;
    for e in log {
        let r = &e.record;
        let pred = e.prediction.iter().map(|&v| fmt_num(v)).collect::<Vec<_>>().join(";");
        w.write_record([
            r.t.to_string(),
            fmt_num(r.learner_loss),
            fmt_num(r.comparator_loss),
            fmt_num(r.avg_regret),
            pred,
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Output(format!("csv flush: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_is_fixed() {
        assert_eq!(fmt_num(1.0), "1.00000000e0");
        assert_eq!(fmt_num(-0.000123456789123), "-1.23456789e-4");
        assert_eq!(fmt_num(0.0), "0.00000000e0");
    }

    #[test]
    fn sweep_csv_layout() {
        let rows = vec![SweepNRow {
            n: 2,
            avg_regret: 0.5,
            gammas: vec![Some(0.25), None],
            cost: 60,
        }];
        let mut buf = Vec::new();
        write_sweep_n(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "n,avg_regret,gamma,cost_units\n2,5.00000000e-1,2.50000000e-1;,60\n"
        );
    }
}
