//! System descriptions, vector-field expressions and flow enclosures.

pub mod benchmarks;
mod expr;
mod flow;
mod system;

pub use benchmarks::{builtin, Benchmark, BenchmarkDefaults, BenchmarkRegistry, ReferenceResult};
pub use expr::{c, parse, x, Expr};
pub use flow::{
    default_flow, flow_enclose, flow_strategy, AffineFlow, FlowEnclosure, IntervalFlow,
    DEFAULT_NONLINEAR_SUBSPLITS,
};
pub use system::SystemSpec;
