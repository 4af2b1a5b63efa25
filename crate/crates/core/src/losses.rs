//! Convex loss families with values, (sub)gradients and their
//! convexity / boundedness constants.
//!
//! Every kind adds `reg_lambda * ||y||^2` to its base term. At the kinks of
//! the hinge and L1 terms the returned subgradient uses slope zero for the
//! kinked term, which keeps runs reproducible.

use std::fmt;
use std::str::FromStr;

use crate::dataset::Supervision;
use crate::error::{check_dim, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    Square,
    L1,
    LogisticL2,
    HingeL2,
    MulticlassCe,
}

impl LossKind {
    pub fn is_smooth(self) -> bool {
        !matches!(self, LossKind::L1 | LossKind::HingeL2)
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Square => "square",
            LossKind::L1 => "l1",
            LossKind::LogisticL2 => "logistic_l2",
            LossKind::HingeL2 => "hinge_l2",
            LossKind::MulticlassCe => "multiclass_ce",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(LossKind::Square),
            "l1" => Ok(LossKind::L1),
            "logistic_l2" | "logistic" => Ok(LossKind::LogisticL2),
            "hinge_l2" | "hinge" => Ok(LossKind::HingeL2),
            "multiclass_ce" => Ok(LossKind::MulticlassCe),
            other => Err(Error::Config(format!("unknown loss `{other}`"))),
        }
    }
}

/// Strong convexity and (when smooth) smoothness constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Convexity {
    pub lambda_sc: f64,
    pub beta_sm: Option<f64>,
}

/// Loss bound B and gradient bound G on the ball `||y|| <= Y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub loss_bound: f64,
    pub grad_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossSpec {
    pub kind: LossKind,
    pub reg_lambda: f64,
    /// Output dimension m.
    pub outputs: usize,
    /// Bound Y on `||y||`; needed for logistic strong convexity and for B, G.
    pub domain_bound: Option<f64>,
}

impl LossSpec {
    pub fn new(kind: LossKind, outputs: usize) -> Result<Self> {
        match kind {
            LossKind::LogisticL2 | LossKind::HingeL2 if outputs != 1 => {
                return Err(Error::invalid(format!("{kind} is scalar, got m = {outputs}")))
            }
            LossKind::MulticlassCe if outputs < 2 => {
                return Err(Error::invalid("multiclass_ce needs at least two classes"))
            }
            _ if outputs == 0 => return Err(Error::invalid("output dimension must be positive")),
            _ => {}
        }
        Ok(LossSpec {
            kind,
            reg_lambda: 0.0,
            outputs,
            domain_bound: None,
        })
    }

    pub fn with_reg(mut self, reg_lambda: f64) -> Result<Self> {
        if !(reg_lambda >= 0.0 && reg_lambda.is_finite()) {
            return Err(Error::invalid(format!("reg_lambda {reg_lambda} must be >= 0")));
        }
        self.reg_lambda = reg_lambda;
        Ok(self)
    }

    pub fn with_domain_bound(mut self, bound: f64) -> Result<Self> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::invalid(format!("domain bound {bound} must be positive")));
        }
        self.domain_bound = Some(bound);
        Ok(self)
    }

    fn require_domain(&self) -> Result<f64> {
        self.domain_bound
            .ok_or_else(|| Error::invalid(format!("{} needs a domain bound", self.kind)))
    }

    /// Strong convexity lambda and smoothness beta (when the kind is smooth).
    ///
    /// Logistic gets `1/(2 + 2e^Y)` and `1/4` from the scalar second
    /// derivative on `|y| <= Y`; square has Hessian `2I`; multiclass uses the
    /// softmax Jacobian bound 1/2; hinge, L1 and multiclass are strongly
    /// convex only through the L2 term.
    pub fn convexity(&self) -> Result<Convexity> {
        let reg = 2.0 * self.reg_lambda;
        Ok(match self.kind {
            LossKind::Square => Convexity {
                lambda_sc: 2.0 + reg,
                beta_sm: Some(2.0 + reg),
            },
            LossKind::LogisticL2 => {
                let y = self.require_domain()?;
                Convexity {
                    lambda_sc: reg + 1.0 / (2.0 + 2.0 * y.exp()),
                    beta_sm: Some(reg + 0.25),
                }
            }
            LossKind::HingeL2 | LossKind::L1 => Convexity {
                lambda_sc: reg,
                beta_sm: None,
            },
            LossKind::MulticlassCe => Convexity {
                lambda_sc: reg,
                beta_sm: Some(0.5 + reg),
            },
        })
    }

    /// Smoothness constant; errors for non-smooth kinds.
    pub fn smoothness(&self) -> Result<f64> {
        self.convexity()?
            .beta_sm
            .ok_or_else(|| Error::invalid(format!("{} is non-smooth: no beta", self.kind)))
    }

    /// Conservative `(B, G)` on `||y|| <= Y` given `||z|| <= target_bound`
    /// for regression targets (ignored for label losses).
    ///
    /// * square: `B = (Y+Z)^2 + rY^2`, `G = 2(Y+Z) + 2rY`
    /// * l1: `B = sqrt(m)(Y+Z) + rY^2`, `G = sqrt(m) + 2rY`
    /// * logistic: `B = ln(1+e^Y) + rY^2`, `G = 1 + 2rY`
    /// * hinge: `B = 1 + Y + rY^2`, `G = 1 + 2rY`
    /// * multiclass: `B = ln k + sqrt(2) Y + rY^2`, `G = sqrt(2) + 2rY`
    pub fn bounds(&self, target_bound: f64) -> Result<Bounds> {
        let y = self.require_domain()?;
        let r = self.reg_lambda;
        let z = target_bound;
        let m = self.outputs as f64;
        let (b, g) = match self.kind {
            LossKind::Square => ((y + z).powi(2), 2.0 * (y + z)),
            LossKind::L1 => (m.sqrt() * (y + z), m.sqrt()),
            LossKind::LogisticL2 => ((1.0 + y.exp()).ln(), 1.0),
            LossKind::HingeL2 => (1.0 + y, 1.0),
            LossKind::MulticlassCe => (m.ln() + 2f64.sqrt() * y, 2f64.sqrt()),
        };
        Ok(Bounds {
            loss_bound: b + r * y * y,
            grad_bound: g + 2.0 * r * y,
        })
    }

    /// Binds the loss to one sample's supervision.
    pub fn at<'a>(&'a self, supervision: &'a Supervision) -> Result<LossAtSample<'a>> {
        match (self.kind, supervision) {
            (LossKind::Square | LossKind::L1, Supervision::Target(z)) => check_dim(self.outputs, z.len())?,
            (LossKind::LogisticL2 | LossKind::HingeL2, Supervision::Sign(_)) => {}
            (LossKind::MulticlassCe, Supervision::Class(c)) if *c < self.outputs => {}
            (kind, sup) => {
                return Err(Error::invalid(format!(
                    "supervision {sup:?} does not fit loss {kind} with m = {}",
                    self.outputs
                )))
            }
        }
        Ok(LossAtSample {
            spec: self,
            supervision,
        })
    }
}

/// `ln(1 + e^v)` without overflow.
pub(crate) fn softplus(v: f64) -> f64 {
    v.max(0.0) + (-v.abs()).exp().ln_1p()
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn log_sum_exp(y: &[f64]) -> f64 {
    let top = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    top + y.iter().map(|v| (v - top).exp()).sum::<f64>().ln()
}

/// Zero at zero: the kink convention for hinge and L1 terms.
fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// A per-step objective `l_t: R^m -> R` with a (sub)gradient oracle.
pub trait Objective {
    fn outputs(&self) -> usize;
    fn value(&self, y: &[f64]) -> Result<f64>;
    fn gradient_into(&self, y: &[f64], out: &mut [f64]) -> Result<()>;
}

impl Objective for LossAtSample<'_> {
    fn outputs(&self) -> usize {
        self.spec.outputs
    }

    fn value(&self, y: &[f64]) -> Result<f64> {
        LossAtSample::value(self, y)
    }

    fn gradient_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        LossAtSample::gradient_into(self, y, out)
    }
}

/// A loss `l_t` as a function of the prediction only.
#[derive(Clone, Copy, Debug)]
pub struct LossAtSample<'a> {
    spec: &'a LossSpec,
    supervision: &'a Supervision,
}

impl<'a> LossAtSample<'a> {
    pub fn spec(&self) -> &LossSpec {
        self.spec
    }

    pub fn value(&self, y: &[f64]) -> Result<f64> {
        check_dim(self.spec.outputs, y.len())?;
        let reg = self.spec.reg_lambda * y.iter().map(|v| v * v).sum::<f64>();
        let base = match (self.spec.kind, self.supervision) {
            (LossKind::Square, Supervision::Target(z)) => {
                y.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum()
            }
            (LossKind::L1, Supervision::Target(z)) => y.iter().zip(z).map(|(a, b)| (a - b).abs()).sum(),
            (LossKind::LogisticL2, Supervision::Sign(u)) => softplus(-u * y[0]),
            (LossKind::HingeL2, Supervision::Sign(u)) => (1.0 - u * y[0]).max(0.0),
            (LossKind::MulticlassCe, Supervision::Class(c)) => log_sum_exp(y) - y[*c],
            _ => unreachable!("checked in LossSpec::at"),
        };
        Ok(base + reg)
    }

    pub fn gradient(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; y.len()];
        self.gradient_into(y, &mut out)?;
        Ok(out)
    }

    pub fn gradient_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(self.spec.outputs, y.len())?;
        check_dim(self.spec.outputs, out.len())?;
        match (self.spec.kind, self.supervision) {
            (LossKind::Square, Supervision::Target(z)) => {
                for ((o, a), b) in out.iter_mut().zip(y).zip(z) {
                    *o = 2.0 * (a - b);
                }
            }
            (LossKind::L1, Supervision::Target(z)) => {
                for ((o, a), b) in out.iter_mut().zip(y).zip(z) {
                    *o = sign0(a - b);
                }
            }
            (LossKind::LogisticL2, Supervision::Sign(u)) => out[0] = -u * sigmoid(-u * y[0]),
            (LossKind::HingeL2, Supervision::Sign(u)) => {
                out[0] = if u * y[0] < 1.0 { -u } else { 0.0 };
            }
            (LossKind::MulticlassCe, Supervision::Class(c)) => {
                let lse = log_sum_exp(y);
                for (o, a) in out.iter_mut().zip(y) {
                    *o = (a - lse).exp();
                }
                out[*c] -= 1.0;
            }
            _ => unreachable!("checked in LossSpec::at"),
        }
        let r2 = 2.0 * self.spec.reg_lambda;
        if r2 != 0.0 {
            for (o, a) in out.iter_mut().zip(y) {
                *o += r2 * a;
            }
        }
        Ok(())
    }

    /// Pointwise minimizer of this sample's loss. Where the loss has no
    /// minimizer (unregularized logistic / multiclass) the solution is
    /// taken on the boundary of the domain ball.
    pub fn minimizer(&self) -> Result<Vec<f64>> {
        let r = self.spec.reg_lambda;
        Ok(match (self.spec.kind, self.supervision) {
            (LossKind::Square, Supervision::Target(z)) => z.iter().map(|v| v / (1.0 + r)).collect(),
            (LossKind::L1, Supervision::Target(z)) => z
                .iter()
                .map(|&v| {
                    if 2.0 * r * v.abs() <= 1.0 {
                        v
                    } else {
                        v.signum() / (2.0 * r)
                    }
                })
                .collect(),
            (LossKind::HingeL2, Supervision::Sign(u)) => {
                let a = if r > 0.0 { (1.0 / (2.0 * r)).min(1.0) } else { 1.0 };
                vec![u * a]
            }
            (LossKind::LogisticL2, Supervision::Sign(u)) => {
                // d/da [softplus(-a) + r a^2] = -sigmoid(-a) + 2 r a, increasing in a
                let slope = |a: f64| -sigmoid(-a) + 2.0 * r * a;
                let a = if r > 0.0 {
                    bisect(slope, 0.0, 1.0 / (2.0 * r))
                } else {
                    self.spec.require_domain()?
                };
                vec![u * a]
            }
            (LossKind::MulticlassCe, Supervision::Class(c)) => {
                // optimum has the symmetric form a * (e_c - 1/k)
                let k = self.spec.outputs as f64;
                let norm = ((k - 1.0) / k).sqrt();
                let slope = |a: f64| -(k - 1.0) / (a.exp() + k - 1.0) + 2.0 * r * a * (k - 1.0) / k;
                let a = if r > 0.0 {
                    bisect(slope, 0.0, k / (2.0 * r))
                } else {
                    self.spec.require_domain()? / norm
                };
                let mut y = vec![-a / k; self.spec.outputs];
                y[*c] += a;
                y
            }
            _ => unreachable!("checked in LossSpec::at"),
        })
    }
}

/// Root of an increasing function on `[lo, hi]` by bisection.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: LossKind, m: usize, reg: f64) -> LossSpec {
        LossSpec::new(kind, m).unwrap().with_reg(reg).unwrap()
    }

    #[test]
    fn values() {
        let logistic = spec(LossKind::LogisticL2, 1, 0.0);
        let pos = Supervision::Sign(1.0);
        let v = logistic.at(&pos).unwrap().value(&[0.0]).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-12);

        let square = spec(LossKind::Square, 2, 0.0);
        let z = Supervision::Target(vec![0.0, 0.0]);
        assert_eq!(square.at(&z).unwrap().value(&[1.0, 0.0]).unwrap(), 1.0);

        let hinge = spec(LossKind::HingeL2, 1, 0.1);
        let v = hinge.at(&pos).unwrap().value(&[2.0]).unwrap();
        assert!((v - 0.4).abs() < 1e-12);
    }

    #[test]
    fn gradients() {
        let square = spec(LossKind::Square, 1, 0.0);
        let z = Supervision::Target(vec![0.0]);
        assert_eq!(square.at(&z).unwrap().gradient(&[3.0]).unwrap(), vec![6.0]);

        let pos = Supervision::Sign(1.0);
        let logistic = spec(LossKind::LogisticL2, 1, 0.0);
        assert_eq!(logistic.at(&pos).unwrap().gradient(&[0.0]).unwrap(), vec![-0.5]);

        let hinge = spec(LossKind::HingeL2, 1, 0.0);
        assert_eq!(hinge.at(&pos).unwrap().gradient(&[1.0]).unwrap(), vec![0.0]);

        let l1 = spec(LossKind::L1, 2, 0.0);
        let z = Supervision::Target(vec![1.0, 0.0]);
        assert_eq!(l1.at(&z).unwrap().gradient(&[1.0, -2.0]).unwrap(), vec![0.0, -1.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let square = spec(LossKind::Square, 2, 0.0);
        let z = Supervision::Target(vec![0.0, 0.0]);
        let l = square.at(&z).unwrap();
        assert!(matches!(l.value(&[1.0]), Err(Error::Dimension { .. })));
        assert!(l.gradient(&[1.0, 2.0, 3.0]).is_err());
        assert!(square.at(&Supervision::Target(vec![0.0])).is_err());
        assert!(square.at(&Supervision::Sign(1.0)).is_err());
        assert!(LossSpec::new(LossKind::HingeL2, 2).is_err());
    }

    #[test]
    fn convexity_constants() {
        let logistic = spec(LossKind::LogisticL2, 1, 0.0).with_domain_bound(1.0).unwrap();
        let c = logistic.convexity().unwrap();
        assert!((c.lambda_sc - 1.0 / (2.0 + 2.0 * std::f64::consts::E)).abs() < 1e-12);
        assert!((c.lambda_sc - 0.134470).abs() < 1e-6);
        assert_eq!(c.beta_sm, Some(0.25));

        let sq = spec(LossKind::Square, 1, 0.0).convexity().unwrap();
        assert_eq!((sq.lambda_sc, sq.beta_sm), (2.0, Some(2.0)));

        let hinge = spec(LossKind::HingeL2, 1, 0.05);
        let c = hinge.convexity().unwrap();
        assert!((c.lambda_sc - 0.1).abs() < 1e-15);
        assert_eq!(c.beta_sm, None);
        assert!(hinge.smoothness().is_err());

        let mc = spec(LossKind::MulticlassCe, 3, 0.1).convexity().unwrap();
        assert!((mc.beta_sm.unwrap() - 0.7).abs() < 1e-15);

        assert!(spec(LossKind::LogisticL2, 1, 0.0).convexity().is_err());
    }

    #[test]
    fn bound_constants_need_domain() {
        assert!(spec(LossKind::Square, 1, 0.0).bounds(1.0).is_err());
        let b = spec(LossKind::HingeL2, 1, 0.0)
            .with_domain_bound(2.0)
            .unwrap()
            .bounds(1.0)
            .unwrap();
        assert_eq!((b.loss_bound, b.grad_bound), (3.0, 1.0));
    }

    #[test]
    fn minimizers_are_stationary() {
        let cases = [
            (spec(LossKind::Square, 2, 0.3), Supervision::Target(vec![1.0, -2.0])),
            (spec(LossKind::LogisticL2, 1, 0.2), Supervision::Sign(-1.0)),
            (spec(LossKind::MulticlassCe, 4, 0.1), Supervision::Class(2)),
        ];
        for (s, sup) in &cases {
            let l = s.at(sup).unwrap();
            let y = l.minimizer().unwrap();
            let g = l.gradient(&y).unwrap();
            assert!(g.iter().all(|v| v.abs() < 1e-9), "{:?}: {g:?}", s.kind);
        }
        let hinge = spec(LossKind::HingeL2, 1, 1.0);
        let pos = Supervision::Sign(1.0);
        assert_eq!(hinge.at(&pos).unwrap().minimizer().unwrap(), vec![0.5]);
    }
}
