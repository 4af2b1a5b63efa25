//! Empirical weak-learner edge.
//!
//! For a stream of square-loss targets `y_t` and predictions `h_t(x_t)` the
//! edge estimate is `1 - sum ||y_t - h_t||^2 / sum ||y_t||^2`. The excess
//! term `R(T)` is estimated against the edge measured on a trailing window,
//! which stands in for the asymptotic edge.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_EDGE_WINDOW: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeReport {
    pub gamma_hat: f64,
    pub sum_sq_error: f64,
    pub sum_sq_target: f64,
    pub count: u64,
    /// Edge over the trailing window.
    pub window_gamma: f64,
    /// `max(0, SSE - (1 - window_gamma) * SST)`.
    pub excess_estimate: f64,
}

/// Streaming accumulator behind [`EdgeReport`].
#[derive(Clone, Debug)]
pub struct EdgeTracker {
    sse: f64,
    sst: f64,
    count: u64,
    window: VecDeque<(f64, f64)>,
    capacity: usize,
}

impl Default for EdgeTracker {
    fn default() -> Self {
        Self::new(DEFAULT_EDGE_WINDOW)
    }
}

impl EdgeTracker {
    pub fn new(window: usize) -> Self {
        EdgeTracker {
            sse: 0.0,
            sst: 0.0,
            count: 0,
            window: VecDeque::with_capacity(window.max(1)),
            capacity: window.max(1),
        }
    }

    pub fn push(&mut self, target: &[f64], prediction: &[f64]) {
        let err: f64 = target.iter().zip(prediction).map(|(y, h)| (y - h) * (y - h)).sum();
        let tgt: f64 = target.iter().map(|y| y * y).sum();
        self.sse += err;
        self.sst += tgt;
        self.count += 1;
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back((err, tgt));
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn sum_sq_error(&self) -> f64 {
        self.sse
    }

    pub fn sum_sq_target(&self) -> f64 {
        self.sst
    }

    pub fn report(&self) -> Result<EdgeReport> {
        if self.count == 0 {
            return Err(Error::invalid("edge of an empty history"));
        }
        if self.sst <= 0.0 {
            return Err(Error::EdgeUndefined);
        }
        let gamma_hat = 1.0 - self.sse / self.sst;
        let (wsse, wsst) = self
            .window
            .iter()
            .fold((0.0, 0.0), |(a, b), (e, t)| (a + e, b + t));
        let window_gamma = if wsst > 0.0 { 1.0 - wsse / wsst } else { gamma_hat };
        Ok(EdgeReport {
            gamma_hat,
            sum_sq_error: self.sse,
            sum_sq_target: self.sst,
            count: self.count,
            window_gamma,
            excess_estimate: (self.sse - (1.0 - window_gamma) * self.sst).max(0.0),
        })
    }
}

/// Edge report over a finished history of `(target, prediction)` pairs.
pub fn measure_edge<'a, I>(pairs: I, window: usize) -> Result<EdgeReport>
where
    I: IntoIterator<Item = (&'a [f64], &'a [f64])>,
{
    let mut tracker = EdgeTracker::new(window);
    for (target, prediction) in pairs {
        tracker.push(target, prediction);
    }
    tracker.report()
}

/// Predicted edge `eps^2` of a hypothesis class closed under scaling:
/// `eps` is the cosine between `f*` and its projection onto the span of the
/// basis under the empirical inner product `(1/T) sum_t h1(x_t)^T h2(x_t)`.
///
/// `basis[k][t]` is the k-th basis function evaluated at sample t and
/// `f_star[t]` the target function at the same sample.
pub fn edge_existence_check(basis: &[Vec<Vec<f64>>], f_star: &[Vec<f64>]) -> Result<f64> {
    let norm_sq: f64 = f_star.iter().flatten().map(|v| v * v).sum();
    if norm_sq <= 0.0 {
        return Err(Error::invalid("f* has zero norm"));
    }
    if basis.is_empty() {
        return Ok(0.0);
    }
    for b in basis {
        crate::error::check_dim(f_star.len(), b.len())?;
    }
    let dot = |a: &[Vec<f64>], b: &[Vec<f64>]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(u, v)| u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>())
            .sum()
    };
    let k = basis.len();
    let gram = DMatrix::from_fn(k, k, |i, j| dot(&basis[i], &basis[j]));
    let rhs = DVector::from_fn(k, |i, _| dot(&basis[i], f_star));
    let coef = gram
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::numeric(format!("projection solve failed: {e}")))?;
    // ||proj||^2 = c^T G c = c^T r
    let proj_sq = coef.dot(&rhs);
    Ok((proj_sq / norm_sq).clamp(0.0, 1.0))
}
