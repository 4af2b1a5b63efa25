//! Frozen ensembles and their on-disk format.
//!
//! The binary format is little-endian throughout:
//!
//! ```text
//! magic "SBGM" | u32 version | u8 algorithm | u8 loss | u64 inputs | u64 outputs
//! combiner: u8 tag, then f64 eta (additive) or f64 lambda, f64 radius, u8 denominator
//! f64 vector y0 | hypothesis list (final) | hypothesis list (averaged)
//! u64 epoch count, then one hypothesis list per stored epoch
//! ```
//!
//! Vectors are a u64 length followed by the values. A hypothesis is a u8
//! tag followed by its parameters; trees store their nodes in order with
//! children always after their parent.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{check_dim, Error, Result};
use crate::learners::{Hypothesis, Node, RegressionTree};
use crate::losses::LossKind;
use crate::sgb_nonsmooth::{predict_epoch_average, AvgDenominator, ResidualCombiner};
use crate::sgb_smooth::additive_predict;

const MAGIC: &[u8; 4] = b"SBGM";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    SgbSmooth,
    SgbResidual,
    BatchGb,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::SgbSmooth => "sgb_smooth",
            Algorithm::SgbResidual => "sgb_residual",
            Algorithm::BatchGb => "batch_gb",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgb_smooth" => Ok(Algorithm::SgbSmooth),
            "sgb_residual" => Ok(Algorithm::SgbResidual),
            "batch_gb" => Ok(Algorithm::BatchGb),
            other => Err(Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Which predictor to use at test time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestPredictor {
    /// Time-averaged hypotheses (smooth boosting).
    Average,
    /// Final hypotheses.
    Final,
    /// Mean over stored epochs (residual boosting).
    Full,
}

impl FromStr for TestPredictor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" => Ok(TestPredictor::Average),
            "final" => Ok(TestPredictor::Final),
            "full" => Ok(TestPredictor::Full),
            other => Err(Error::Config(format!("unknown test predictor `{other}`"))),
        }
    }
}

impl TestPredictor {
    pub fn name(self) -> &'static str {
        match self {
            TestPredictor::Average => "average",
            TestPredictor::Final => "final",
            TestPredictor::Full => "full",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Combiner {
    /// `y0 - eta * sum_i h_i(x)`
    Additive { eta: f64 },
    /// Projected partial sums with `eta_i = 1/(lambda i)`.
    Residual(ResidualCombiner),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrozenModel {
    pub algorithm: Algorithm,
    pub loss: LossKind,
    pub inputs: usize,
    pub outputs: usize,
    pub combiner: Combiner,
    pub y0: Vec<f64>,
    pub final_hypotheses: Vec<Hypothesis>,
    /// Time-averaged hypotheses; empty when not tracked.
    pub averaged: Vec<Hypothesis>,
    /// Stored epoch hypotheses for the full test procedure.
    pub epochs: Vec<Vec<Hypothesis>>,
}

impl FrozenModel {
    pub fn predict(&self, x: &[f64], predictor: TestPredictor) -> Result<Vec<f64>> {
        check_dim(self.inputs, x.len())?;
        match (self.combiner, predictor) {
            (Combiner::Additive { eta }, TestPredictor::Final) => {
                Ok(additive_predict(&self.y0, eta, &self.final_hypotheses, x))
            }
            (Combiner::Additive { eta }, TestPredictor::Average) => {
                if self.averaged.is_empty() {
                    return Err(Error::ModelFormat("model stores no averaged hypotheses".into()));
                }
                Ok(additive_predict(&self.y0, eta, &self.averaged, x))
            }
            (Combiner::Residual(c), TestPredictor::Final) => c.predict(&self.y0, &self.final_hypotheses, x),
            (Combiner::Residual(c), TestPredictor::Full) => {
                predict_epoch_average(&c, &self.y0, &self.epochs, x)
            }
            (_, p) => Err(Error::Config(format!(
                "test predictor `{}` is not available for {}",
                p.name(),
                self.algorithm.name()
            ))),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut BufReader::new(file))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        buf
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        put_u8(w, algorithm_tag(self.algorithm))?;
        put_u8(w, loss_tag(self.loss))?;
        put_u64(w, self.inputs as u64)?;
        put_u64(w, self.outputs as u64)?;
        match self.combiner {
            Combiner::Additive { eta } => {
                put_u8(w, 0)?;
                put_f64(w, eta)?;
            }
            Combiner::Residual(c) => {
                put_u8(w, 1)?;
                put_f64(w, c.lambda)?;
                put_f64(w, c.radius)?;
                put_u8(
                    w,
                    match c.denominator {
                        AvgDenominator::N => 0,
                        AvgDenominator::NPlus1 => 1,
                    },
                )?;
            }
        }
        put_vec(w, &self.y0)?;
        put_list(w, &self.final_hypotheses)?;
        put_list(w, &self.averaged)?;
        put_u64(w, self.epochs.len() as u64)?;
        for e in &self.epochs {
            put_list(w, e)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut rd = Reader { r };
        let mut magic = [0u8; 4];
        rd.bytes(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::ModelFormat("not a model file (bad magic)".into()));
        }
        let mut v = [0u8; 4];
        rd.bytes(&mut v)?;
        let version = u32::from_le_bytes(v);
        if version != FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported format version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let algorithm = match rd.u8()? {
            0 => Algorithm::SgbSmooth,
            1 => Algorithm::SgbResidual,
            2 => Algorithm::BatchGb,
            t => return Err(Error::ModelFormat(format!("unknown algorithm tag {t}"))),
        };
        let loss = match rd.u8()? {
            0 => LossKind::Square,
            1 => LossKind::L1,
            2 => LossKind::LogisticL2,
            3 => LossKind::HingeL2,
            4 => LossKind::MulticlassCe,
            t => return Err(Error::ModelFormat(format!("unknown loss tag {t}"))),
        };
        let inputs = rd.len()?;
        let outputs = rd.len()?;
        let combiner = match rd.u8()? {
            0 => Combiner::Additive { eta: rd.f64()? },
            1 => {
                let lambda = rd.f64()?;
                let radius = rd.f64()?;
                let denominator = match rd.u8()? {
                    0 => AvgDenominator::N,
                    1 => AvgDenominator::NPlus1,
                    t => return Err(Error::ModelFormat(format!("unknown denominator tag {t}"))),
                };
                Combiner::Residual(ResidualCombiner {
                    lambda,
                    radius,
                    denominator,
                })
            }
            t => return Err(Error::ModelFormat(format!("unknown combiner tag {t}"))),
        };
        let y0 = rd.vec()?;
        if y0.len() != outputs {
            return Err(Error::ModelFormat("y0 length does not match outputs".into()));
        }
        let final_hypotheses = rd.list(inputs, outputs)?;
        let averaged = rd.list(inputs, outputs)?;
        let n_epochs = rd.len()?;
        let mut epochs = Vec::new();
        for _ in 0..n_epochs {
            epochs.push(rd.list(inputs, outputs)?);
        }
        let mut trailing = [0u8; 1];
        if rd.r.read(&mut trailing).map_err(read_err)? != 0 {
            return Err(Error::ModelFormat("trailing bytes after model".into()));
        }
        Ok(FrozenModel {
            algorithm,
            loss,
            inputs,
            outputs,
            combiner,
            y0,
            final_hypotheses,
            averaged,
            epochs,
        })
    }

    /// Human-readable parameter dump.
    pub fn dump_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "format_version = {FORMAT_VERSION}");
        let _ = writeln!(s, "algorithm = {}", self.algorithm.name());
        let _ = writeln!(s, "loss = {}", self.loss);
        let _ = writeln!(s, "inputs = {}", self.inputs);
        let _ = writeln!(s, "outputs = {}", self.outputs);
        match self.combiner {
            Combiner::Additive { eta } => {
                let _ = writeln!(s, "combiner = additive\neta = {eta:e}");
            }
            Combiner::Residual(c) => {
                let _ = writeln!(
                    s,
                    "combiner = residual\nlambda = {:e}\nradius = {:e}\navg_denominator = {}",
                    c.lambda,
                    c.radius,
                    c.denominator.name()
                );
            }
        }
        let _ = writeln!(s, "y0 = {}", join(&self.y0));
        for (name, list) in [("final", &self.final_hypotheses), ("averaged", &self.averaged)] {
            for (i, h) in list.iter().enumerate() {
                dump_hypothesis(&mut s, &format!("{name}[{}]", i + 1), h, 0);
            }
        }
        let _ = writeln!(s, "epochs = {}", self.epochs.len());
        s
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ")
}

fn dump_hypothesis(s: &mut String, name: &str, h: &Hypothesis, indent: usize) {
    let pad = "  ".repeat(indent);
    match h {
        Hypothesis::Linear { weights, bias, .. } => {
            let _ = writeln!(s, "{pad}{name} linear weights = [{}] bias = [{}]", join(weights), join(bias));
        }
        Hypothesis::Constant(v) => {
            let _ = writeln!(s, "{pad}{name} constant [{}]", join(v));
        }
        Hypothesis::Tree(t) => {
            let _ = writeln!(s, "{pad}{name} tree nodes = {} depth = {}", t.nodes().len(), t.depth());
            for (i, n) in t.nodes().iter().enumerate() {
                match n {
                    Node::Leaf { value } => {
                        let _ = writeln!(s, "{pad}  {i}: leaf [{}]", join(value));
                    }
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        let _ = writeln!(s, "{pad}  {i}: x[{feature}] <= {threshold:e} ? {left} : {right}");
                    }
                }
            }
        }
        Hypothesis::Mean(hs) => {
            let _ = writeln!(s, "{pad}{name} mean of {}", hs.len());
            for (i, h) in hs.iter().enumerate() {
                dump_hypothesis(s, &format!("member[{}]", i + 1), h, indent + 1);
            }
        }
    }
}

fn algorithm_tag(a: Algorithm) -> u8 {
    match a {
        Algorithm::SgbSmooth => 0,
        Algorithm::SgbResidual => 1,
        Algorithm::BatchGb => 2,
    }
}

fn loss_tag(l: LossKind) -> u8 {
    match l {
        LossKind::Square => 0,
        LossKind::L1 => 1,
        LossKind::LogisticL2 => 2,
        LossKind::HingeL2 => 3,
        LossKind::MulticlassCe => 4,
    }
}

fn put_u8<W: Write>(w: &mut W, v: u8) -> std::io::Result<()> {
    w.write_all(&[v])
}

fn put_u64<W: Write>(w: &mut W, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_f64<W: Write>(w: &mut W, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_vec<W: Write>(w: &mut W, v: &[f64]) -> std::io::Result<()> {
    put_u64(w, v.len() as u64)?;
    v.iter().try_for_each(|x| put_f64(w, *x))
}

fn put_list<W: Write>(w: &mut W, hs: &[Hypothesis]) -> std::io::Result<()> {
    put_u64(w, hs.len() as u64)?;
    hs.iter().try_for_each(|h| put_hypothesis(w, h))
}

fn put_hypothesis<W: Write>(w: &mut W, h: &Hypothesis) -> std::io::Result<()> {
    match h {
        Hypothesis::Linear {
            weights,
            bias,
            inputs,
        } => {
            put_u8(w, 0)?;
            put_u64(w, *inputs as u64)?;
            put_vec(w, weights)?;
            put_vec(w, bias)
        }
        Hypothesis::Constant(v) => {
            put_u8(w, 1)?;
            put_vec(w, v)
        }
        Hypothesis::Tree(t) => {
            put_u8(w, 2)?;
            put_u64(w, t.outputs() as u64)?;
            put_u64(w, t.nodes().len() as u64)?;
            for n in t.nodes() {
                match n {
                    Node::Leaf { value } => {
                        put_u8(w, 0)?;
                        put_vec(w, value)?;
                    }
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        put_u8(w, 1)?;
                        put_u64(w, *feature as u64)?;
                        put_f64(w, *threshold)?;
                        put_u64(w, *left as u64)?;
                        put_u64(w, *right as u64)?;
                    }
                }
            }
            Ok(())
        }
        Hypothesis::Mean(hs) => {
            put_u8(w, 3)?;
            put_list(w, hs)
        }
    }
}

fn read_err(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::ModelFormat("truncated model file".into())
    } else {
        Error::ModelFormat(format!("read failed: {e}"))
    }
}

/// Sizes above this are rejected as corrupt.
const MAX_LEN: u64 = 1 << 32;

struct Reader<'a, R: Read> {
    r: &'a mut R,
}

impl<R: Read> Reader<'_, R> {
    fn bytes(&mut self, buf: &mut [u8]) -> Result<()> {
        self.r.read_exact(buf).map_err(read_err)
    }

    fn u8(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.bytes(&mut b)?;
        Ok(b[0])
    }

    fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.bytes(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    fn len(&mut self) -> Result<usize> {
        let v = self.u64()?;
        if v > MAX_LEN {
            return Err(Error::ModelFormat(format!("implausible length {v}")));
        }
        Ok(v as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.bytes(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }

    fn vec(&mut self) -> Result<Vec<f64>> {
        let n = self.len()?;
        (0..n).map(|_| self.f64()).collect()
    }

    fn list(&mut self, inputs: usize, outputs: usize) -> Result<Vec<Hypothesis>> {
        let n = self.len()?;
        (0..n).map(|_| self.hypothesis(inputs, outputs)).collect()
    }

    fn hypothesis(&mut self, inputs: usize, outputs: usize) -> Result<Hypothesis> {
        let bad = |what: &str| Error::ModelFormat(format!("inconsistent {what}"));
        Ok(match self.u8()? {
            0 => {
                let d = self.len()?;
                let weights = self.vec()?;
                let bias = self.vec()?;
                if d != inputs || bias.len() != outputs || weights.len() != d * outputs {
                    return Err(bad("linear hypothesis shape"));
                }
                Hypothesis::Linear {
                    weights,
                    bias,
                    inputs: d,
                }
            }
            1 => {
                let v = self.vec()?;
                if v.len() != outputs {
                    return Err(bad("constant hypothesis length"));
                }
                Hypothesis::Constant(v)
            }
            2 => {
                let m = self.len()?;
                let count = self.len()?;
                if m != outputs || count == 0 {
                    return Err(bad("tree header"));
                }
                let mut nodes = Vec::new();
                for i in 0..count {
                    nodes.push(match self.u8()? {
                        0 => {
                            let value = self.vec()?;
                            if value.len() != outputs {
                                return Err(bad("leaf length"));
                            }
                            Node::Leaf { value }
                        }
                        1 => {
                            let feature = self.len()?;
                            let threshold = self.f64()?;
                            let left = self.len()?;
                            let right = self.len()?;
                            if feature >= inputs || left <= i || right <= i || left >= count || right >= count {
                                return Err(bad("tree split"));
                            }
                            Node::Split {
                                feature,
                                threshold,
                                left,
                                right,
                            }
                        }
                        t => return Err(Error::ModelFormat(format!("unknown node tag {t}"))),
                    });
                }
                Hypothesis::Tree(RegressionTree::from_nodes(nodes, m))
            }
            3 => {
                let hs = self.list(inputs, outputs)?;
                if hs.is_empty() {
                    return Err(bad("empty mean hypothesis"));
                }
                Hypothesis::Mean(hs)
            }
            t => return Err(Error::ModelFormat(format!("unknown hypothesis tag {t}"))),
        })
    }
}
