//! The training loop: pretraining, set-based loss minimization with Adam,
//! verification and trajectory sanity checks.

mod adam;
mod pretrain;
mod simulate;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamParams, AdamState};
pub use pretrain::{halton_point, pretrain, radial_target, radical_inverse, TargetShape, PRETRAIN_BATCH, PRETRAIN_SAMPLES};
pub use simulate::{simulate_check, SimReport, SIM_DT};

use crate::certloss::{total_loss, total_loss_with_graph, LossBreakdown, DEFAULT_EPSILON};
use crate::dynsys::{BenchmarkDefaults, BenchmarkRegistry, SystemSpec, DEFAULT_NONLINEAR_SUBSPLITS};
use crate::error::{invalid, Result};
use crate::neural::{layer_widths, nn_init, param_grad, Network};
use crate::zeroset::{enclose_zero_set, ZeroCover, ZeroParams};

pub const DEFAULT_MAX_EPOCHS: usize = 10_000;
pub const DEFAULT_PRETRAIN_EPOCHS: usize = 10;
pub const RNG_ALGORITHM: &str = "ChaCha8Rng";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Hidden widths; each hidden linear layer is followed by tanh.
    pub hidden: Vec<usize>,
    pub eta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub epsilon: f64,
    pub zero: ZeroParams,
    pub lie_subsplits: u32,
    pub pretrain_epochs: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![8],
            eta: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            epsilon: DEFAULT_EPSILON,
            zero: "2-4-n".parse().expect("valid literal"),
            lie_subsplits: DEFAULT_NONLINEAR_SUBSPLITS,
            pretrain_epochs: DEFAULT_PRETRAIN_EPOCHS,
            max_epochs: DEFAULT_MAX_EPOCHS,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Applies a published row: layer count, width, learning rate, momentum
    /// and zero-set parameters.
    pub fn from_defaults(d: &BenchmarkDefaults) -> Result<Self> {
        let hidden = match (d.layers, d.hidden) {
            (1, _) => vec![],
            (k, Some(w)) if k % 2 == 1 => vec![w; (k - 1) / 2],
            _ => return Err(invalid(format!("unsupported layer count {}", d.layers))),
        };
        Ok(Self {
            hidden,
            eta: d.eta,
            beta1: d.beta1,
            zero: d.zero.parse()?,
            ..Self::default()
        })
    }

    /// The published configuration for a built-in benchmark, if any.
    pub fn for_benchmark(name: &str, size: Option<usize>) -> Result<Self> {
        let reg = BenchmarkRegistry::builtin();
        let b = reg.get(name)?;
        let n = size.unwrap_or_else(|| b.default_size());
        match b.defaults(n) {
            Some(d) => Self::from_defaults(&d),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(invalid(format!("learning rate must be positive, got {}", self.eta)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(invalid("Adam momenta must lie in [0, 1)"));
        }
        if !(self.epsilon > 0.0) || !(self.adam_eps > 0.0) {
            return Err(invalid("margins must be positive"));
        }
        if self.max_epochs == 0 {
            return Err(invalid("max_epochs must be at least 1"));
        }
        if self.hidden.iter().any(|&w| w == 0) {
            return Err(invalid("hidden widths must be positive"));
        }
        self.zero.validate(Some(dim))
    }

    pub fn widths(&self, input: usize) -> Vec<usize> {
        layer_widths(input, &self.hidden)
    }

    pub fn adam(&self) -> AdamParams {
        AdamParams {
            eta: self.eta,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.adam_eps,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    #[serde(rename = "lU")]
    pub l_unsafe: f64,
    #[serde(rename = "lI")]
    pub l_init: f64,
    #[serde(rename = "l0")]
    pub l_zero: f64,
    pub total: f64,
    #[serde(rename = "coverN")]
    pub cover_n: usize,
}

impl EpochRecord {
    fn new(epoch: usize, b: &LossBreakdown, cover: &ZeroCover) -> Self {
        Self {
            epoch,
            l_unsafe: b.l_unsafe,
            l_init: b.l_init,
            l_zero: b.l_zero,
            total: b.total,
            cover_n: cover.len(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub benchmark: String,
    pub config: TrainConfig,
    /// Published configuration row, when the benchmark has one.
    pub defaults: Option<BenchmarkDefaults>,
    pub epochs_run: usize,
    /// Pretraining plus the epoch loop.
    pub wall_time_s: f64,
    pub pretrain_time_s: f64,
    pub loss_trace: Vec<EpochRecord>,
    pub verified: bool,
    pub rng: String,
    pub final_loss: Option<LossBreakdown>,
}

impl RunReport {
    fn new(sys: &SystemSpec, cfg: &TrainConfig) -> Self {
        Self {
            benchmark: sys.name.clone(),
            config: cfg.clone(),
            defaults: None,
            epochs_run: 0,
            wall_time_s: 0.0,
            pretrain_time_s: 0.0,
            loss_trace: Vec::new(),
            verified: false,
            rng: RNG_ALGORITHM.into(),
            final_loss: None,
        }
    }
}

/// Initializes, pretrains and trains a certificate for `sys`.
pub fn train(sys: &SystemSpec, cfg: &TrainConfig) -> Result<(Network, RunReport)> {
    cfg.validate(sys.dim())?;
    let start = Instant::now();
    let mut net = nn_init(&cfg.widths(sys.dim()), cfg.seed)?;
    pretrain(&mut net, sys, cfg.pretrain_epochs, &cfg.adam())?;
    let pretrain_time = start.elapsed().as_secs_f64();
    let mut report = train_loop(&mut net, sys, cfg)?;
    report.pretrain_time_s = pretrain_time;
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok((net, report))
}

/// Continues training an existing network without pretraining.
pub fn train_from(net: &mut Network, sys: &SystemSpec, cfg: &TrainConfig) -> Result<RunReport> {
    cfg.validate(sys.dim())?;
    let start = Instant::now();
    let mut report = train_loop(net, sys, cfg)?;
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}

fn check_network(net: &Network, sys: &SystemSpec) -> Result<()> {
    if net.input_dim() != sys.dim() {
        return Err(invalid(format!(
            "network on R^{} for the {}-dimensional system {}",
            net.input_dim(),
            sys.dim(),
            sys.name
        )));
    }
    Ok(())
}

/// Evaluates the loss, stops at exactly zero, otherwise takes one Adam step.
fn train_loop(net: &mut Network, sys: &SystemSpec, cfg: &TrainConfig) -> Result<RunReport> {
    check_network(net, sys)?;
    let mut report = RunReport::new(sys, cfg);
    let mut state = AdamState::new(net.num_params());
    let mut theta = net.params();
    let adam = cfg.adam();
    for epoch in 1..=cfg.max_epochs {
        let cover = enclose_zero_set(net, &sys.state_space, &cfg.zero)?;
        let (loss, graph) = total_loss_with_graph(net, sys, &cover, cfg.epsilon, cfg.lie_subsplits)?;
        debug_assert!(loss.l_unsafe >= 0.0 && loss.l_init >= 0.0 && loss.l_zero >= 0.0);
        report.loss_trace.push(EpochRecord::new(epoch, &loss, &cover));
        report.epochs_run = epoch;
        let done = loss.is_verified();
        if done || epoch == cfg.max_epochs {
            report.verified = done;
            report.final_loss = Some(loss);
            break;
        }
        let grad = param_grad(net, &graph)?;
        adam_step(&mut state, &mut theta, &grad, &adam);
        net.set_params(&theta)?;
    }
    Ok(report)
}

/// One loss evaluation without updates.
pub fn verify(net: &Network, sys: &SystemSpec, cfg: &TrainConfig) -> Result<RunReport> {
    check_network(net, sys)?;
    cfg.zero.validate(Some(sys.dim()))?;
    let start = Instant::now();
    let cover = enclose_zero_set(net, &sys.state_space, &cfg.zero)?;
    let loss = total_loss(net, sys, &cover, cfg.epsilon, cfg.lie_subsplits)?;
    let mut report = RunReport::new(sys, cfg);
    report.loss_trace.push(EpochRecord::new(1, &loss, &cover));
    report.epochs_run = 1;
    report.verified = loss.is_verified();
    report.final_loss = Some(loss);
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}
