//! Built-in benchmark systems, each behind the [`Benchmark`] trait and looked
//! up by name through a [`BenchmarkRegistry`].

use ndarray::{array, Array2};
use serde::Serialize;

use super::expr::{c, x, Expr};
use super::system::SystemSpec;
use crate::error::{invalid, Result};
use crate::setcore::{IntervalVector, Zonotope};

/// Published training setup for one benchmark instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkDefaults {
    /// Total layer count κ (linear plus activation layers).
    pub layers: usize,
    /// Hidden width for κ > 1.
    pub hidden: Option<usize>,
    pub eta: f64,
    pub beta1: f64,
    /// `ι-s-s_dim`, e.g. `"2-8-n"`.
    pub zero: &'static str,
}

/// Published outcome used as a comparison column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReferenceResult {
    pub time_mean_s: f64,
    pub time_std_s: f64,
    pub epochs_mean: f64,
    pub epochs_std: f64,
    pub success_pct: f64,
}

pub trait Benchmark: Send + Sync {
    fn name(&self) -> &'static str;

    /// State dimension used when no size is requested.
    fn default_size(&self) -> usize;

    fn supports_size(&self, n: usize) -> bool {
        n == self.default_size()
    }

    fn build(&self, n: usize) -> Result<SystemSpec>;

    fn defaults(&self, n: usize) -> Option<BenchmarkDefaults>;

    fn reference(&self, _n: usize) -> Option<ReferenceResult> {
        None
    }

    fn system(&self, size: Option<usize>) -> Result<SystemSpec> {
        let n = size.unwrap_or_else(|| self.default_size());
        if !self.supports_size(n) {
            return Err(invalid(format!(
                "benchmark '{}' does not support size {n}",
                self.name()
            )));
        }
        self.build(n)
    }
}

pub struct BenchmarkRegistry {
    entries: Vec<Box<dyn Benchmark>>,
}

impl BenchmarkRegistry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(ThreeSets));
        r.register(Box::new(TwoBarriers));
        r.register(Box::new(Peruffo));
        r.register(Box::new(Darboux));
        r.register(Box::new(Polynomial));
        r.register(Box::new(Lyapunov));
        r.register(Box::new(Exponential));
        r.register(Box::new(Ratschan));
        r
    }

    /// Adds a benchmark; a later entry with the same name shadows earlier ones.
    pub fn register(&mut self, b: Box<dyn Benchmark>) {
        self.entries.retain(|e| e.name() != b.name());
        self.entries.push(b);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Benchmark> {
        self.entries
            .iter()
            .find(|b| b.name() == name)
            .map(|b| b.as_ref())
            .ok_or_else(|| {
                invalid(format!(
                    "unknown benchmark '{name}' (available: {})",
                    self.names().join(", ")
                ))
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|b| b.name()).collect()
    }
}

/// Builds a built-in benchmark system by name.
pub fn builtin(name: &str, size: Option<usize>) -> Result<SystemSpec> {
    BenchmarkRegistry::builtin().get(name)?.system(size)
}

fn boxed(lo: &[f64], hi: &[f64]) -> Zonotope {
    Zonotope::from_interval(&IntervalVector::from_bounds(lo, hi).expect("valid literal box"))
}

fn cube(n: usize, lo: f64, hi: f64) -> IntervalVector {
    IntervalVector::cube(n, lo, hi).expect("valid literal box")
}

fn reference(t: (f64, f64), e: (f64, f64)) -> Option<ReferenceResult> {
    Some(ReferenceResult {
        time_mean_s: t.0,
        time_std_s: t.1,
        epochs_mean: e.0,
        epochs_std: e.1,
        success_pct: 100.0,
    })
}

fn defaults(
    layers: usize,
    hidden: Option<usize>,
    eta: f64,
    beta1: f64,
    zero: &'static str,
) -> Option<BenchmarkDefaults> {
    Some(BenchmarkDefaults {
        layers,
        hidden,
        eta,
        beta1,
        zero,
    })
}

pub struct ThreeSets;

impl Benchmark for ThreeSets {
    fn name(&self) -> &'static str {
        "three-sets"
    }
    fn default_size(&self) -> usize {
        2
    }
    fn build(&self, _n: usize) -> Result<SystemSpec> {
        SystemSpec::new(
            self.name(),
            vec![c(0.0), x(2)],
            cube(2, 0.0, 4.0),
            vec![boxed(&[1.7, 2.7], &[2.3, 3.3])],
            vec![boxed(&[0.7, 0.7], &[2.3, 2.3]), boxed(&[2.7, 1.7], &[3.3, 2.3])],
        )
    }
    fn defaults(&self, _n: usize) -> Option<BenchmarkDefaults> {
        defaults(1, None, 0.1, 0.3, "1-3-n")
    }
    fn reference(&self, _n: usize) -> Option<ReferenceResult> {
        reference((0.5, 0.16), (16.1, 10.85))
    }
}

pub struct TwoBarriers;

impl Benchmark for TwoBarriers {
    fn name(&self) -> &'static str {
        "two-barriers"
    }
    fn default_size(&self) -> usize {
        2
    }
    fn build(&self, _n: usize) -> Result<SystemSpec> {
        SystemSpec::new(
            self.name(),
            vec![-x(1), -x(2)],
            cube(2, 0.0, 4.0),
            vec![boxed(&[0.7, 0.7], &[1.3, 1.3]), boxed(&[2.7, 2.7], &[3.3, 3.3])],
            vec![boxed(&[0.3, 3.3], &[0.7, 3.7]), boxed(&[3.3, 0.3], &[3.7, 0.7])],
        )
    }
    fn defaults(&self, _n: usize) -> Option<BenchmarkDefaults> {
        defaults(3, Some(10), 0.1, 0.3, "2-4-n")
    }
    fn reference(&self, _n: usize) -> Option<ReferenceResult> {
        reference((0.6, 0.23), (27.7, 34.05))
    }
}

/// Coefficients of the last companion row, `w = -[576, 2400, …, 20]`.
pub const PERUFFO_WEIGHTS: [f64; 8] = [
    -576.0, -2400.0, -4180.0, -3980.0, -2273.0, -800.0, -170.0, -20.0,
];

/// Integrator chain `ẋᵢ = xᵢ₊₁`, closed by `ẋₙ = Σᵢ wᵢxᵢ` over the first `n`
/// weights.
pub struct Peruffo;

impl Benchmark for Peruffo {
    fn name(&self) -> &'static str {
        "peruffo"
    }
    fn default_size(&self) -> usize {
        4
    }
    fn supports_size(&self, n: usize) -> bool {
        (2..=PERUFFO_WEIGHTS.len()).contains(&n)
    }
    fn build(&self, n: usize) -> Result<SystemSpec> {
        let mut f: Vec<Expr> = (2..=n).map(x).collect();
        let last = (1..=n)
            .map(|i| c(PERUFFO_WEIGHTS[i - 1]) * x(i))
            .reduce(|a, b| a + b)
            .expect("n >= 2");
        f.push(last);
        SystemSpec::new(
            format!("peruffo-{n}d"),
            f,
            cube(n, -2.2, 2.2),
            vec![Zonotope::from_interval(&cube(n, 0.9, 1.1))],
            vec![Zonotope::from_interval(&cube(n, -2.2, -1.8))],
        )
    }
    fn defaults(&self, n: usize) -> Option<BenchmarkDefaults> {
        match n {
            4 => defaults(1, None, 0.1, 0.9, "1-8-n"),
            6 | 8 => defaults(1, None, 0.1, 0.3, "2-4-2"),
            _ => None,
        }
    }
    fn reference(&self, n: usize) -> Option<ReferenceResult> {
        match n {
            4 => reference((0.5, 0.02), (25.1, 5.32)),
            6 => reference((3.1, 2.50), (3186.8, 2918.83)),
            8 => reference((1.0, 1.27), (642.9, 1238.83)),
            _ => None,
        }
    }
}

pub struct Darboux;

impl Darboux {
    /// Zonotope enclosing `{x₁ + x₂² ≤ 0}` within the state space.
    pub fn unsafe_set() -> Zonotope {
        let g: Array2<f64> = array![
            [0.0, 0.75, 0.75, 0.25, 0.25],
            [0.25, -0.375, 0.375, -0.25, 0.25]
        ];
        Zonotope::new(array![-2.0, 0.0], g).expect("valid literal zonotope")
    }
}

impl Benchmark for Darboux {
    fn name(&self) -> &'static str {
        "darboux"
    }
    fn default_size(&self) -> usize {
        2
    }
    fn build(&self, _n: usize) -> Result<SystemSpec> {
        SystemSpec::new(
            self.name(),
            vec![
                x(2) + c(2.0) * x(1) * x(2),
                -x(1) + c(2.0) * x(1).pow(2) - x(2).pow(2),
            ],
            cube(2, -2.0, 2.0),
            vec![boxed(&[0.0, 1.0], &[1.0, 2.0])],
            vec![Self::unsafe_set()],
        )
    }
    fn defaults(&self, _n: usize) -> Option<BenchmarkDefaults> {
        defaults(3, Some(8), 0.1, 0.3, "2-9-n")
    }
    fn reference(&self, _n: usize) -> Option<ReferenceResult> {
        reference((5.2, 3.44), (1027.5, 708.85))
    }
}

pub struct Polynomial;

impl Benchmark for Polynomial {
    fn name(&self) -> &'static str {
        "polynomial"
    }
    fn default_size(&self) -> usize {
        2
    }
    fn build(&self, _n: usize) -> Result<SystemSpec> {
        SystemSpec::new(
            self.name(),
            vec![x(2), -x(1) + c(1.0 / 3.0) * x(1).pow(3) - x(2)],
            IntervalVector::from_bounds(&[-3.5, -2.0], &[2.0, 1.0])?,
            vec![boxed(&[1.0, -0.5], &[2.0, 0.5])],
            vec![boxed(&[-1.4, -1.4], &[-0.6, -0.6])],
        )
    }
    fn defaults(&self, _n: usize) -> Option<BenchmarkDefaults> {
        defaults(3, Some(8), 0.01, 0.3, "2-8-n")
    }
    fn reference(&self, _n: usize) -> Option<ReferenceResult> {
        reference((1.4, 0.24), (234.6, 66.18))
    }
}

pub struct Lyapunov;

impl Benchmark for Lyapunov {
    fn name(&self) -> &'static str {
        "lyapunov"
    }
    fn default_size(&self) -> usize {
        3
    }
    fn build(&self, _n: usize) -> Result<SystemSpec> {
        SystemSpec::new(
            self.name(),
            vec![
                -x(2),
                -x(3),
                -x(1) - c(2.0) * x(2) - x(3) + x(1).pow(3),
            ],
            cube(3, -2.0, 2.0),
            vec![boxed(&[-0.25, -0.25, -0.75], &[0.75, 0.75, 0.25])],
            vec![boxed(&[1.0, -2.0, -2.0], &[2.0, -1.0, -1.0])],
        )
    }
    fn defaults(&self, _n: usize) -> Option<BenchmarkDefaults> {
        defaults(3, Some(8), 0.1, 0.9, "1-32-n")
    }
    fn reference(&self, _n: usize) -> Option<ReferenceResult> {
        reference((2.1, 1.40), (39.7, 33.75))
    }
}

pub struct Exponential;

impl Benchmark for Exponential {
    fn name(&self) -> &'static str {
        "exponential"
    }
    fn default_size(&self) -> usize {
        2
    }
    fn build(&self, _n: usize) -> Result<SystemSpec> {
        SystemSpec::new(
            self.name(),
            vec![(-x(1)).exp() + x(2) - c(1.0), -(x(1).sin().pow(2))],
            cube(2, -2.0, 2.0),
            vec![Zonotope::from_interval(&cube(2, -0.9, -0.1))],
            vec![Zonotope::from_interval(&cube(2, 0.4, 1.0))],
        )
    }
    fn defaults(&self, _n: usize) -> Option<BenchmarkDefaults> {
        defaults(5, Some(5), 0.001, 0.3, "2-10-n")
    }
    fn reference(&self, _n: usize) -> Option<ReferenceResult> {
        reference((19.0, 13.29), (1799.0, 1270.11))
    }
}

/// `n = 2l + 1` states: a drifting first coordinate followed by `l`
/// pendulum-like pairs.
pub struct Ratschan;

impl Benchmark for Ratschan {
    fn name(&self) -> &'static str {
        "ratschan"
    }
    fn default_size(&self) -> usize {
        3
    }
    fn supports_size(&self, n: usize) -> bool {
        n >= 3 && n % 2 == 1
    }
    fn build(&self, n: usize) -> Result<SystemSpec> {
        let l = (n - 1) / 2;
        // Σ_{i∈[l]} (x_{i+1} + x_{i+2}), taken literally
        let drift = (1..=l)
            .map(|i| x(i + 1) + x(i + 2))
            .reduce(|a, b| a + b)
            .expect("l >= 1");
        let mut f = vec![c(1.0) + c(0.01) * drift];
        for j in 1..=l {
            f.push(x(2 * j + 1));
            f.push(c(-10.0) * x(2 * j).sin() - x(2 * j));
        }
        let mut init_lo = vec![-0.3];
        let mut init_hi = vec![0.0];
        let mut bad_lo = vec![-0.2];
        let mut bad_hi = vec![-0.15];
        init_lo.extend(std::iter::repeat(-0.2).take(2 * l));
        init_hi.extend(std::iter::repeat(0.3).take(2 * l));
        bad_lo.extend(std::iter::repeat(-0.3).take(2 * l));
        bad_hi.extend(std::iter::repeat(-0.25).take(2 * l));
        SystemSpec::new(
            format!("ratschan-{n}d"),
            f,
            cube(n, -0.3, 0.3),
            vec![boxed(&init_lo, &init_hi)],
            vec![boxed(&bad_lo, &bad_hi)],
        )
    }
    fn defaults(&self, n: usize) -> Option<BenchmarkDefaults> {
        match n {
            3 => defaults(1, None, 0.1, 0.3, "1-3-n"),
            5 => defaults(1, None, 0.1, 0.3, "2-2-n"),
            7 => defaults(1, None, 0.1, 0.3, "2-2-2"),
            9 => defaults(1, None, 0.1, 0.3, "2-4-2"),
            _ => None,
        }
    }
    fn reference(&self, n: usize) -> Option<ReferenceResult> {
        match n {
            3 => reference((0.5, 0.02), (65.4, 5.02)),
            5 => reference((0.5, 0.03), (49.9, 19.68)),
            7 => reference((0.6, 0.34), (284.3, 428.92)),
            9 => reference((1.1, 0.98), (399.1, 553.93)),
            _ => None,
        }
    }
}
