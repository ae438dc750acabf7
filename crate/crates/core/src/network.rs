//! One-hidden-layer feedforward regressor trained by stochastic backpropagation
//! with momentum and a decaying learning rate.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::embedding::PatternSet;
use crate::error::{Error, Result};
use crate::systems::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Relu,
    Logistic,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Logistic => 1.0 / (1.0 + (-z).exp()),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    /// ReLU uses 0 at the kink.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Logistic => a * (1.0 - a),
            Activation::Linear => 1.0,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Logistic => "logistic",
            Activation::Linear => "linear",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "logistic" | "sigmoid" => Ok(Activation::Logistic),
            "linear" | "identity" => Ok(Activation::Linear),
            other => Err(Error::InvalidConfig(format!(
                "unknown activation `{other}` (expected relu, logistic or linear)"
            ))),
        }
    }
}

/// How `alpha_rng` and `beta_rng` turn a uniform draw `U` on `[0,1)` into a
/// starting weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitRule {
    /// `alpha_rng * (U + beta_rng)`.
    #[default]
    ScaledShift,
    /// `beta_rng + alpha_rng * U`, uniform on `[beta_rng, beta_rng + alpha_rng)`.
    OffsetSpan,
}

impl InitRule {
    #[inline]
    pub fn draw(self, u: f64, alpha: f64, beta: f64) -> f64 {
        match self {
            InitRule::ScaledShift => alpha * (u + beta),
            InitRule::OffsetSpan => beta + alpha * u,
        }
    }
}

impl fmt::Display for InitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitRule::ScaledShift => "scaled_shift",
            InitRule::OffsetSpan => "offset_span",
        })
    }
}

impl FromStr for InitRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "scaled_shift" => Ok(InitRule::ScaledShift),
            "offset_span" => Ok(InitRule::OffsetSpan),
            other => Err(Error::InvalidConfig(format!(
                "unknown init rule `{other}` (expected scaled_shift or offset_span)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub hidden: usize,
    /// Hidden activation; also used at the output unless `linear_output` is set.
    pub activation: Activation,
    pub linear_output: bool,
    pub alpha_rng: f64,
    pub beta_rng: f64,
    pub init_rule: InitRule,
    pub seed: u64,
}

impl NetworkConfig {
    pub fn new(input_dim: usize, hidden: usize) -> Self {
        Self {
            input_dim,
            hidden,
            activation: Activation::Relu,
            linear_output: false,
            alpha_rng: 1e-3,
            beta_rng: -0.5,
            init_rule: InitRule::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim < 1 || self.hidden < 1 {
            return Err(Error::InvalidConfig(format!(
                "network needs input_dim >= 1 and hidden >= 1, got {} and {}",
                self.input_dim, self.hidden
            )));
        }
        if !self.alpha_rng.is_finite() || !self.beta_rng.is_finite() {
            return Err(Error::InvalidConfig("alpha_rng and beta_rng must be finite".into()));
        }
        Ok(())
    }
}

/// Weights of `y = act_out(b2 + w2 . act(b1 + W1 x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_dim: usize,
    hidden: usize,
    /// Row-major `hidden x input_dim`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub activation: Activation,
    pub linear_output: bool,
}

/// Partial derivatives of the squared error, laid out like [`Network`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl Gradients {
    fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            w1: vec![0.0; input_dim * hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    fn fill(&mut self, v: f64) {
        self.w1.fill(v);
        self.b1.fill(v);
        self.w2.fill(v);
        self.b2 = v;
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(std::iter::once(&self.b2))
            .copied()
    }
}

pub fn init_network(cfg: &NetworkConfig) -> Result<Network> {
    cfg.validate()?;
    let mut rng = seeded_rng(cfg.seed);
    let mut draw = || cfg.init_rule.draw(rng.gen::<f64>(), cfg.alpha_rng, cfg.beta_rng);
    let w1 = (0..cfg.hidden * cfg.input_dim).map(|_| draw()).collect();
    let b1 = (0..cfg.hidden).map(|_| draw()).collect();
    let w2 = (0..cfg.hidden).map(|_| draw()).collect();
    let b2 = draw();
    Ok(Network {
        input_dim: cfg.input_dim,
        hidden: cfg.hidden,
        w1,
        b1,
        w2,
        b2,
        activation: cfg.activation,
        linear_output: cfg.linear_output,
    })
}

impl Network {
    pub fn from_parts(
        input_dim: usize,
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: f64,
        activation: Activation,
        linear_output: bool,
    ) -> Result<Self> {
        let hidden = b1.len();
        if input_dim < 1 || hidden < 1 {
            return Err(Error::InvalidConfig("network needs at least one input and one hidden unit".into()));
        }
        if w1.len() != hidden * input_dim {
            return Err(Error::Dimension {
                expected: hidden * input_dim,
                got: w1.len(),
            });
        }
        if w2.len() != hidden {
            return Err(Error::Dimension {
                expected: hidden,
                got: w2.len(),
            });
        }
        let net = Self {
            input_dim,
            hidden,
            w1,
            b1,
            w2,
            b2,
            activation,
            linear_output,
        };
        if !net.is_finite() {
            return Err(Error::NonFinite("network weights".into()));
        }
        Ok(net)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    /// Parameters in serialization order: `w1`, `b1`, `w2`, `b2`.
    pub fn iter_params(&self) -> impl Iterator<Item = f64> + '_ {
        self.w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(std::iter::once(&self.b2))
            .copied()
    }

    pub fn output_activation(&self) -> Activation {
        if self.linear_output {
            Activation::Linear
        } else {
            self.activation
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w1.iter().chain(&self.b1).chain(&self.w2).all(|v| v.is_finite()) && self.b2.is_finite()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::Dimension {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.predict(x))
    }

    /// Unchecked forward pass; `x` must have `input_dim` entries.
    #[inline]
    pub(crate) fn predict(&self, x: &[f64]) -> f64 {
        let mut z2 = self.b2;
        for h in 0..self.hidden {
            let row = &self.w1[h * self.input_dim..(h + 1) * self.input_dim];
            let z = self.b1[h] + dot(row, x);
            z2 += self.w2[h] * self.activation.apply(z);
        }
        self.output_activation().apply(z2)
    }

    /// Forward plus backward pass; accumulates `scale * dLoss/dparam` into
    /// `grad` and returns the squared error.
    fn accumulate(&self, x: &[f64], target: f64, scale: f64, grad: &mut Gradients, hidden_z: &mut [f64], hidden_a: &mut [f64]) -> f64 {
        let mut z2 = self.b2;
        for h in 0..self.hidden {
            let row = &self.w1[h * self.input_dim..(h + 1) * self.input_dim];
            let z = self.b1[h] + dot(row, x);
            let a = self.activation.apply(z);
            hidden_z[h] = z;
            hidden_a[h] = a;
            z2 += self.w2[h] * a;
        }
        let out_act = self.output_activation();
        let y = out_act.apply(z2);
        let err = y - target;
        // d(err^2)/dz2
        let delta2 = 2.0 * err * out_act.derivative(z2, y) * scale;
        grad.b2 += delta2;
        for h in 0..self.hidden {
            grad.w2[h] += delta2 * hidden_a[h];
            let delta1 = delta2 * self.w2[h] * self.activation.derivative(hidden_z[h], hidden_a[h]);
            if delta1 != 0.0 {
                grad.b1[h] += delta1;
                let g = &mut grad.w1[h * self.input_dim..(h + 1) * self.input_dim];
                for (gi, xi) in g.iter_mut().zip(x) {
                    *gi += delta1 * xi;
                }
            }
        }
        err * err
    }

    /// Mean squared error over a pattern set.
    pub fn mse(&self, patterns: &PatternSet) -> Result<f64> {
        if patterns.dim() != self.input_dim {
            return Err(Error::Dimension {
                expected: self.input_dim,
                got: patterns.dim(),
            });
        }
        if patterns.is_empty() {
            return Err(Error::Range("empty pattern set".into()));
        }
        let sum: f64 = patterns
            .iter()
            .map(|p| {
                let e = self.predict(p.input) - p.target;
                e * e
            })
            .sum();
        Ok(sum / patterns.len() as f64)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Exact gradient of `(target - forward(x))^2` with respect to every parameter.
pub fn backprop_gradients(net: &Network, x: &[f64], target: f64) -> Result<Gradients> {
    net.check_input(x)?;
    let mut grad = Gradients::zeros(net.input_dim, net.hidden);
    let mut z = vec![0.0; net.hidden];
    let mut a = vec![0.0; net.hidden];
    net.accumulate(x, target, 1.0, &mut grad, &mut z, &mut a);
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub eta: f64,
    pub momentum: f64,
    /// Number of parameter updates.
    pub n_steps: usize,
    /// Patterns averaged per update.
    pub batch_size: usize,
    /// Loss trace resolution.
    pub trace_every: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            eta: 0.1,
            momentum: 0.0,
            n_steps: 100_000,
            batch_size: 1,
            trace_every: 1000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidConfig(format!("eta must be finite and >= 0, got {}", self.eta)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig(format!("momentum must lie in [0, 1), got {}", self.momentum)));
        }
        if self.n_steps < 1 || self.batch_size < 1 || self.trace_every < 1 {
            return Err(Error::InvalidConfig("n_steps, batch_size and trace_every must be >= 1".into()));
        }
        Ok(())
    }

    /// `eta / (1 + n / 10000)`.
    pub fn learning_rate(&self, n: usize) -> f64 {
        self.eta / (1.0 + n as f64 / 10_000.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub network: Network,
    /// `(step, mean sampled loss over the preceding block)`, one entry per `trace_every` steps.
    pub loss_trace: Vec<(usize, f64)>,
}

/// Stochastic gradient descent with classical momentum.
pub fn train(mut net: Network, patterns: &PatternSet, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if patterns.is_empty() {
        return Err(Error::Range("cannot train on an empty pattern set".into()));
    }
    if patterns.dim() != net.input_dim {
        return Err(Error::Dimension {
            expected: net.input_dim,
            got: patterns.dim(),
        });
    }
    let mut rng = seeded_rng(cfg.seed);
    let mut grad = Gradients::zeros(net.input_dim, net.hidden);
    let mut vel = Gradients::zeros(net.input_dim, net.hidden);
    let mut z = vec![0.0; net.hidden];
    let mut a = vec![0.0; net.hidden];
    let scale = 1.0 / cfg.batch_size as f64;
    let mut trace = Vec::with_capacity(cfg.n_steps / cfg.trace_every + 1);
    let mut block_loss = 0.0;
    let mut block_len = 0usize;

    for n in 0..cfg.n_steps {
        grad.fill(0.0);
        let mut loss = 0.0;
        for _ in 0..cfg.batch_size {
            let p = patterns.get(rng.gen_range(0..patterns.len()));
            loss += net.accumulate(p.input, p.target, scale, &mut grad, &mut z, &mut a) * scale;
        }
        if !loss.is_finite() {
            return Err(Error::TrainingDivergence { step: n });
        }
        let lr = cfg.learning_rate(n);
        update(&mut net.w1, &mut vel.w1, &grad.w1, cfg.momentum, lr);
        update(&mut net.b1, &mut vel.b1, &grad.b1, cfg.momentum, lr);
        update(&mut net.w2, &mut vel.w2, &grad.w2, cfg.momentum, lr);
        vel.b2 = cfg.momentum * vel.b2 - lr * grad.b2;
        net.b2 += vel.b2;

        block_loss += loss;
        block_len += 1;
        if block_len == cfg.trace_every {
            trace.push((n + 1, block_loss / block_len as f64));
            block_loss = 0.0;
            block_len = 0;
        }
    }
    if !net.is_finite() {
        return Err(Error::TrainingDivergence { step: cfg.n_steps });
    }
    Ok(TrainOutcome {
        network: net,
        loss_trace: trace,
    })
}

#[inline]
fn update(w: &mut [f64], v: &mut [f64], g: &[f64], momentum: f64, lr: f64) {
    for ((wi, vi), gi) in w.iter_mut().zip(v.iter_mut()).zip(g) {
        *vi = momentum * *vi - lr * gi;
        *wi += *vi;
    }
}

const HEADER: &str = "# spacetime-forecast network v1";

/// Text form: a header, `key value` lines for the shape, then one labelled
/// block per tensor (`w1` row by row, then `b1`, `w2`, `b2`).
pub fn format_network(net: &Network) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
    writeln!(s, "{HEADER}").unwrap();
    writeln!(s, "input_dim {}", net.input_dim).unwrap();
    writeln!(s, "hidden {}", net.hidden).unwrap();
    writeln!(s, "activation {}", net.activation).unwrap();
    writeln!(s, "output {}", net.output_activation()).unwrap();
    writeln!(s, "w1").unwrap();
    for row in net.w1.chunks(net.input_dim) {
        writeln!(s, "{}", join(row)).unwrap();
    }
    writeln!(s, "b1\n{}", join(&net.b1)).unwrap();
    writeln!(s, "w2\n{}", join(&net.w2)).unwrap();
    writeln!(s, "b2\n{:?}", net.b2).unwrap();
    s
}

pub fn parse_network(text: &str, origin: &Path) -> Result<Network> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::parse(origin, 0, format!("unexpected end of file, expected {what}")))
    };
    let mut header = |key: &str| -> Result<(usize, String)> {
        let (ln, l) = next(key)?;
        match l.split_once(char::is_whitespace) {
            Some((k, v)) if k == key => Ok((ln, v.trim().to_string())),
            _ => Err(Error::parse(origin, ln, format!("expected `{key} <value>`"))),
        }
    };
    let count = |ln: usize, v: &str| v.parse::<usize>().map_err(|_| Error::parse(origin, ln, format!("bad count `{v}`")));
    let (ln, v) = header("input_dim")?;
    let input_dim = count(ln, &v)?;
    let (ln, v) = header("hidden")?;
    let hidden = count(ln, &v)?;
    let (ln, v) = header("activation")?;
    let activation: Activation = v.parse().map_err(|e: Error| Error::parse(origin, ln, e.to_string()))?;
    let (ln, v) = header("output")?;
    let output: Activation = v.parse().map_err(|e: Error| Error::parse(origin, ln, e.to_string()))?;
    let linear_output = output == Activation::Linear && activation != Activation::Linear;
    if !linear_output && output != activation {
        return Err(Error::parse(origin, ln, "output activation must equal the hidden one or be linear"));
    }

    let mut block = |name: &str, rows: usize, cols: usize| -> Result<Vec<f64>> {
        let (ln, l) = next(name)?;
        if l != name {
            return Err(Error::parse(origin, ln, format!("expected block `{name}`")));
        }
        let mut out = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (ln, l) = next(name)?;
            let row = l
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| Error::parse(origin, ln, format!("bad number `{t}`"))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != cols {
                return Err(Error::parse(origin, ln, format!("{name}: expected {cols} values, got {}", row.len())));
            }
            out.extend(row);
        }
        Ok(out)
    };
    let w1 = block("w1", hidden, input_dim)?;
    let b1 = block("b1", 1, hidden)?;
    let w2 = block("w2", 1, hidden)?;
    let b2 = block("b2", 1, 1)?[0];
    Network::from_parts(input_dim, w1, b1, w2, b2, activation, linear_output)
}

pub fn write_network(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_network(net))?;
    Ok(())
}

pub fn read_network(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    parse_network(&fs::read_to_string(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn cfg(input_dim: usize, hidden: usize, act: Activation, seed: u64) -> NetworkConfig {
        NetworkConfig {
            activation: act,
            alpha_rng: 2.0,
            beta_rng: -0.5,
            seed,
            ..NetworkConfig::new(input_dim, hidden)
        }
    }

    fn param_mut(net: &mut Network, idx: usize) -> &mut f64 {
        let (a, b, c) = (net.w1.len(), net.b1.len(), net.w2.len());
        if idx < a {
            &mut net.w1[idx]
        } else if idx < a + b {
            &mut net.b1[idx - a]
        } else if idx < a + b + c {
            &mut net.w2[idx - a - b]
        } else {
            &mut net.b2
        }
    }

    fn loss(net: &Network, x: &[f64], t: f64) -> f64 {
        (t - net.forward(x).unwrap()).powi(2)
    }

    #[test]
    fn zero_network_outputs() {
        let mut c = NetworkConfig::new(3, 4);
        c.alpha_rng = 0.0;
        c.beta_rng = 0.0;
        let net = init_network(&c).unwrap();
        assert!(net.iter_params().all(|w| w == 0.0));
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]).unwrap(), 0.0);
        c.activation = Activation::Logistic;
        assert_eq!(init_network(&c).unwrap().forward(&[1.0, -2.0, 3.0]).unwrap(), 0.5);
    }

    #[test]
    fn offset_span_range() {
        let c = NetworkConfig {
            init_rule: InitRule::OffsetSpan,
            ..NetworkConfig::new(5, 7)
        };
        let net = init_network(&c).unwrap();
        assert!(net.iter_params().all(|w| (-0.5..-0.499).contains(&w)));
        let d = NetworkConfig::new(5, 7);
        let net = init_network(&d).unwrap();
        assert!(net.iter_params().all(|w| (-5e-4..5e-4).contains(&w)));
        assert_eq!(init_network(&d).unwrap(), net);
    }

    #[test]
    fn hand_built_relu() {
        // hidden z = 0.5*1 - 1*2 + 1 = -0.5 -> 0;  second unit 2*1 + 0*2 - 1 = 1
        let net = Network::from_parts(
            2,
            vec![0.5, -1.0, 2.0, 0.0],
            vec![1.0, -1.0],
            vec![3.0, 0.25],
            0.5,
            Activation::Relu,
            false,
        )
        .unwrap();
        assert_eq!(net.forward(&[1.0, 2.0]).unwrap(), 0.75);
        assert!(matches!(net.forward(&[1.0]), Err(Error::Dimension { expected: 2, got: 1 })));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = seeded_rng(17);
        for trial in 0..120 {
            let dim = rng.gen_range(1..6);
            let hidden = rng.gen_range(1..6);
            let net = init_network(&cfg(dim, hidden, Activation::Logistic, trial)).unwrap();
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let t = rng.gen_range(-1.0..2.0);
            let g = backprop_gradients(&net, &x, t).unwrap();
            for (idx, analytic) in g.iter().enumerate() {
                let h = 1e-6;
                let mut p = net.clone();
                *param_mut(&mut p, idx) += h;
                let up = loss(&p, &x, t);
                *param_mut(&mut p, idx) -= 2.0 * h;
                let down = loss(&p, &x, t);
                let numeric = (up - down) / (2.0 * h);
                // Relative bound plus the roundoff floor of a central difference.
                let floor = 4.0 * f64::EPSILON * up.abs().max(1.0) / h;
                let tol = 1e-5 * analytic.abs().max(numeric.abs()) + floor;
                assert!((analytic - numeric).abs() < tol, "trial {trial} param {idx}: {analytic} vs {numeric}");
            }
        }
    }

    #[test]
    fn relu_gradients_away_from_kinks() {
        let mut rng = seeded_rng(5);
        for trial in 0..50 {
            let net = init_network(&cfg(4, 5, Activation::Relu, 100 + trial)).unwrap();
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let g = backprop_gradients(&net, &x, 0.3).unwrap();
            for (idx, analytic) in g.iter().enumerate() {
                let h = 1e-7;
                let mut p = net.clone();
                *param_mut(&mut p, idx) += h;
                let up = loss(&p, &x, 0.3);
                *param_mut(&mut p, idx) -= 2.0 * h;
                let down = loss(&p, &x, 0.3);
                let numeric = (up - down) / (2.0 * h);
                assert!((analytic - numeric).abs() < 1e-5 * analytic.abs().max(1.0), "{analytic} vs {numeric}");
            }
        }
    }

    #[test]
    fn zero_gradient_at_target_and_dead_units() {
        let net = init_network(&cfg(3, 4, Activation::Logistic, 1)).unwrap();
        let x = [0.1, 0.2, 0.3];
        let y = net.forward(&x).unwrap();
        assert!(backprop_gradients(&net, &x, y).unwrap().iter().all(|g| g == 0.0));

        let dead = init_network(&NetworkConfig {
            init_rule: InitRule::OffsetSpan,
            ..NetworkConfig::new(3, 4)
        })
        .unwrap();
        let g = backprop_gradients(&dead, &[1.0, 2.0, 3.0], 1.0).unwrap();
        assert!(g.w1.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn learning_rate_schedule() {
        let c = TrainConfig { eta: 0.3, ..Default::default() };
        assert_eq!(c.learning_rate(0), 0.3);
        assert_eq!(c.learning_rate(10_000), 0.15);
    }

    fn set(inputs: &[Vec<f64>], targets: &[f64]) -> PatternSet {
        PatternSet::from_parts(inputs[0].len(), inputs.concat(), targets.to_vec()).unwrap()
    }

    #[test]
    fn memorizes_one_sample() {
        let net = init_network(&cfg(2, 3, Activation::Logistic, 3)).unwrap();
        let p = set(&[vec![0.2, 0.7]], &[0.8]);
        let out = train(net, &p, &TrainConfig { eta: 1.0, n_steps: 20_000, ..Default::default() }).unwrap();
        assert!(out.network.mse(&p).unwrap() < 1e-6);
        assert_eq!(out.loss_trace.len(), 20);
    }

    #[test]
    fn zero_eta_leaves_network_unchanged() {
        let net = init_network(&cfg(2, 3, Activation::Relu, 3)).unwrap();
        let p = set(&[vec![0.2, 0.7], vec![0.1, 0.0]], &[0.8, 0.1]);
        let out = train(net.clone(), &p, &TrainConfig { eta: 0.0, n_steps: 500, ..Default::default() }).unwrap();
        assert_eq!(out.network, net);
    }

    #[test]
    fn learns_linear_map() {
        let mut rng = seeded_rng(11);
        let inputs: Vec<Vec<f64>> = (0..100).map(|_| (0..3).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        let targets: Vec<f64> = inputs.iter().map(|x| 0.3 + 0.5 * x[0] - 0.2 * x[1] + 0.4 * x[2]).collect();
        let p = set(&inputs, &targets);
        let net = init_network(&NetworkConfig { alpha_rng: 1.0, seed: 2, ..NetworkConfig::new(3, 8) }).unwrap();
        let out = train(net, &p, &TrainConfig { eta: 0.05, n_steps: 200_000, ..Default::default() }).unwrap();
        let mse = out.network.mse(&p).unwrap();
        assert!(mse < 1e-4, "mse {mse}");
    }

    #[test]
    fn training_is_deterministic() {
        let p = set(&[vec![0.2, 0.7], vec![0.1, 0.0], vec![0.9, 0.4]], &[0.8, 0.1, 0.5]);
        let run = || {
            let net = init_network(&cfg(2, 4, Activation::Logistic, 9)).unwrap();
            train(net, &p, &TrainConfig { eta: 0.5, momentum: 0.3, n_steps: 5000, batch_size: 2, seed: 4, ..Default::default() }).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        assert_eq!(a.network.param_count(), 2 * 4 + 4 + 4 + 1);
    }

    #[test]
    fn divergence_is_reported() {
        let net = Network::from_parts(1, vec![1.0], vec![0.0], vec![1.0], 0.0, Activation::Linear, false).unwrap();
        let p = set(&[vec![1e150]], &[0.0]);
        let r = train(net, &p, &TrainConfig { eta: 1.0, n_steps: 100, ..Default::default() });
        assert!(matches!(r, Err(Error::TrainingDivergence { .. })), "{r:?}");
    }

    #[test]
    fn text_round_trip() {
        let net = init_network(&cfg(4, 3, Activation::Logistic, 8)).unwrap();
        let back = parse_network(&format_network(&net), Path::new("mem")).unwrap();
        assert_eq!(back, net);
        let lin = Network { linear_output: true, ..net };
        assert_eq!(parse_network(&format_network(&lin), Path::new("mem")).unwrap(), lin);
        assert!(matches!(parse_network("input_dim 2\n", Path::new("x")), Err(Error::Parse { .. })));
    }

    proptest! {
        #[test]
        fn serialization_exact(ws in proptest::collection::vec(-1e300f64..1e300, 7)) {
            let net = Network::from_parts(2, ws[0..4].to_vec(), ws[4..6].to_vec(), vec![ws[6], -ws[6]], ws[0], Activation::Relu, false).unwrap();
            prop_assert_eq!(parse_network(&format_network(&net), Path::new("p")).unwrap(), net);
        }
    }
}
