use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use barrier_core::dynsys::{builtin, BenchmarkDefaults, BenchmarkRegistry, ReferenceResult, SystemSpec};
use barrier_core::neural::ArchPreset;
use barrier_core::trainer::TrainConfig;
use barrier_core::zeroset::ZeroParams;
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "barrier", version, about = "Set-based training of neural barrier certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a certificate and write the model and run report.
    Train(TrainArgs),
    /// Re-evaluate the set-based loss of a saved model.
    Verify(VerifyArgs),
    /// Train over a range of seeds and summarize success, time and epochs.
    Bench(BenchArgs),
    /// Write plot-ready CSVs of a model's level set.
    ExportLevelset(ExportArgs),
}

/// Which system to work on.
#[derive(Args, Debug, Clone)]
pub struct SystemArgs {
    /// Built-in benchmark name.
    #[arg(long, required_unless_present = "spec", conflicts_with = "spec")]
    pub benchmark: Option<String>,
    /// JSON system description.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// State dimension for scalable benchmarks.
    #[arg(long)]
    pub size: Option<usize>,
}

/// A resolved system plus its published configuration, if built in.
pub struct Loaded {
    pub system: SystemSpec,
    pub defaults: Option<BenchmarkDefaults>,
    pub reference: Option<ReferenceResult>,
}

impl SystemArgs {
    pub fn load(&self) -> Result<Loaded> {
        match (&self.benchmark, &self.spec) {
            (Some(name), _) => {
                let registry = BenchmarkRegistry::builtin();
                let bench = registry.get(name)?;
                let n = self.size.unwrap_or_else(|| bench.default_size());
                let system = builtin(name, Some(n))?;
                Ok(Loaded {
                    system,
                    defaults: bench.defaults(n),
                    reference: bench.reference(n),
                })
            }
            (None, Some(path)) => {
                let system = SystemSpec::from_json_file(path)
                    .with_context(|| format!("reading system file {}", path.display()))?;
                if let Some(n) = self.size {
                    if n != system.dim() {
                        bail!("--size {n} conflicts with the {}-dimensional system file", system.dim());
                    }
                }
                Ok(Loaded {
                    system,
                    defaults: None,
                    reference: None,
                })
            }
            (None, None) => bail!("one of --benchmark or --spec is required"),
        }
    }
}

/// Hidden-layer layout given as a preset or a comma-separated width list.
#[derive(Clone, Debug, PartialEq)]
pub struct Arch(pub Vec<usize>);

impl FromStr for Arch {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if let Some(p) = ArchPreset::parse(s) {
            return Ok(Arch(p.hidden()));
        }
        let widths = s
            .split(',')
            .map(|w| w.trim().parse::<usize>().map_err(|_| format!("invalid architecture '{s}'")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if widths.contains(&0) {
            return Err("hidden widths must be positive".into());
        }
        Ok(Arch(widths))
    }
}

/// Training hyperparameter overrides applied on top of the defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// N1, N2, N3 or hidden widths such as 8 or 5,5.
    #[arg(long)]
    pub arch: Option<Arch>,
    /// Adam learning rate.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Adam first-moment decay.
    #[arg(long)]
    pub beta1: Option<f64>,
    /// Loss margin for the strict inequalities.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Zero-set parameters iota,s,sdim (also accepts 2-8-n).
    #[arg(long)]
    pub zero: Option<ZeroParams>,
    /// Subdivisions per dimension for nonlinear flow enclosures.
    #[arg(long)]
    pub lie_subsplits: Option<u32>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub pretrain_epochs: Option<usize>,
}

impl ConfigArgs {
    /// Published defaults (or generic ones) with the explicit flags applied.
    pub fn resolve(&self, defaults: Option<&BenchmarkDefaults>) -> Result<TrainConfig> {
        let base = match defaults {
            Some(d) => TrainConfig::from_defaults(d)?,
            None => TrainConfig::default(),
        };
        Ok(self.apply(base))
    }

    pub fn apply(&self, mut cfg: TrainConfig) -> TrainConfig {
        if let Some(a) = &self.arch {
            cfg.hidden = a.0.clone();
        }
        if let Some(v) = self.eta {
            cfg.eta = v;
        }
        if let Some(v) = self.beta1 {
            cfg.beta1 = v;
        }
        if let Some(v) = self.eps {
            cfg.epsilon = v;
        }
        if let Some(v) = &self.zero {
            cfg.zero = v.clone();
        }
        if let Some(v) = self.lie_subsplits {
            cfg.lie_subsplits = v;
        }
        if let Some(v) = self.max_epochs {
            cfg.max_epochs = v;
        }
        if let Some(v) = self.pretrain_epochs {
            cfg.pretrain_epochs = v;
        }
        cfg
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for the model and report.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Model JSON to check.
    #[arg(long)]
    pub model: PathBuf,
    /// Extra zero-set iterations on top of the configured ones.
    #[arg(long, default_value_t = 0)]
    pub refine: usize,
    /// Optional directory for a report file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// An inclusive seed range such as `0..9`, or a single seed.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedRange {
    pub first: u64,
    pub last: u64,
}

impl SeedRange {
    pub fn seeds(&self) -> impl Iterator<Item = u64> {
        self.first..=self.last
    }
}

impl FromStr for SeedRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let bad = || format!("invalid seed range '{s}', expected a..b");
        let (first, last) = match s.split_once("..") {
            Some((a, b)) => (
                a.trim().parse().map_err(|_| bad())?,
                b.trim_start_matches('=').trim().parse().map_err(|_| bad())?,
            ),
            None => {
                let v = s.trim().parse().map_err(|_| bad())?;
                (v, v)
            }
        };
        if last < first {
            return Err(format!("empty seed range '{s}'"));
        }
        Ok(SeedRange { first, last })
    }
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Inclusive seed range.
    #[arg(long, default_value = "0..9")]
    pub seeds: SeedRange,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Grid points per axis.
    #[arg(long, default_value_t = 201)]
    pub resolution: usize,
    /// Two 1-based state dimensions spanning the slice.
    #[arg(long, num_args = 2, value_names = ["I", "J"])]
    pub dims: Option<Vec<usize>>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges_are_inclusive() {
        let r: SeedRange = "0..9".parse().unwrap();
        assert_eq!(r.seeds().count(), 10);
        let r: SeedRange = "3..=4".parse().unwrap();
        assert_eq!(r.seeds().collect::<Vec<_>>(), vec![3, 4]);
        let r: SeedRange = "7".parse().unwrap();
        assert_eq!(r.seeds().collect::<Vec<_>>(), vec![7]);
        assert!("5..2".parse::<SeedRange>().is_err());
        assert!("a..b".parse::<SeedRange>().is_err());
    }

    #[test]
    fn architectures() {
        assert_eq!("N1".parse::<Arch>().unwrap(), Arch(vec![]));
        assert_eq!("n3".parse::<Arch>().unwrap(), Arch(vec![5, 5]));
        assert_eq!("16,4".parse::<Arch>().unwrap(), Arch(vec![16, 4]));
        assert!("0".parse::<Arch>().is_err());
        assert!("big".parse::<Arch>().is_err());
    }

    #[test]
    fn flags_override_published_defaults() {
        let d = BenchmarkRegistry::builtin().get("peruffo").unwrap().defaults(4).unwrap();
        let args = ConfigArgs {
            eta: Some(0.05),
            zero: Some("2,4,2".parse().unwrap()),
            ..ConfigArgs::default()
        };
        let cfg = args.resolve(Some(&d)).unwrap();
        assert_eq!(cfg.eta, 0.05);
        assert_eq!(cfg.beta1, 0.9);
        assert_eq!(cfg.zero.to_string(), "2-4-2");
        assert!(cfg.hidden.is_empty());
    }
}
