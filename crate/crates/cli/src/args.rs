use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use owlscreen::{OscarSpec, SyntheticSpec};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "owlscreen", version, about = "Group OWL multi-task learning with safe screening")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model and write the solution, trace and summary.
    Train(TrainArgs),
    /// Time screening off against screening on.
    Bench(BenchArgs),
    /// Run the randomized oracle checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Regression,
    Multinomial,
}

impl Model {
    pub fn loss(self) -> owlscreen::LossKind {
        match self {
            Model::Regression => owlscreen::LossKind::Squared,
            Model::Multinomial => owlscreen::LossKind::Multinomial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Apgd,
    Spgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Libsvm,
    Csv,
}

/// Problem and solver options shared by `train` and `bench`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ProblemArgs {
    #[arg(long, value_enum, default_value = "regression")]
    pub model: Model,
    #[arg(long, value_enum, default_value = "apgd")]
    pub solver: SolverKind,
    /// Dataset file (LIBSVM text, or CSV with the targets first).
    #[arg(long, conflicts_with = "synth", required_unless_present = "synth")]
    pub data: Option<PathBuf>,
    /// Synthetic problem, e.g. `n=100,d=1000,q=3,support=10,groups=5,rho=0.5,noise=0.1`.
    #[arg(long)]
    pub synth: Option<SynthArg>,
    /// Input format; inferred from the extension when absent.
    #[arg(long, value_enum)]
    pub format: Option<DataFormat>,
    /// Number of leading target columns in a CSV file.
    #[arg(long, default_value_t = 1)]
    pub targets: usize,
    /// The CSV file starts with a header row.
    #[arg(long)]
    pub header: bool,
    /// Standardize CSV columns.
    #[arg(long, value_enum, default_value = "on")]
    pub standardize: Switch,
    /// OSCAR weights: `alpha1=A,alpha2=B`, `p=P`, or `index=I,tau=T`.
    #[arg(long, default_value = "p=0.1")]
    pub weights: WeightsArg,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Seed for synthesis and mini-batch sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Iteration cap (outer iterations for SPGD).
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,
    /// Gradient step; defaults to `1/L_F` (APGD) or `1/(10·L_F)` (SPGD).
    #[arg(long)]
    pub step: Option<f64>,
    /// SPGD mini-batch size (capped at n).
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    /// SPGD inner iterations per snapshot.
    #[arg(long, default_value_t = 10)]
    pub inner: usize,
    /// Iterations before screening may start.
    #[arg(long, default_value_t = 10)]
    pub warmup: usize,
    /// Screening may also start once the gap is below this fraction of the
    /// initial primal value.
    #[arg(long, default_value_t = 0.1)]
    pub warmup_fraction: f64,
    /// Screen every this many iterations.
    #[arg(long, default_value_t = 1)]
    pub screen_every: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, default_value = "on")]
    pub screen: Switch,
    /// Output directory.
    #[arg(long, default_value = "owlscreen-out")]
    pub out: PathBuf,
    /// `key=value` lines mirroring the long flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Trials per setting.
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// Output directory for `bench.json`.
    #[arg(long, default_value = "owlscreen-out")]
    pub out: PathBuf,
    /// `key=value` lines mirroring the long flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    SkipScaling,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Smaller instance counts.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, hide = true)]
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthArg(pub SyntheticSpec);

impl FromStr for SynthArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut spec = SyntheticSpec::default();
        for (key, value) in pairs(s)? {
            let bad = |e: &dyn std::fmt::Display| format!("{key}={value}: {e}");
            match key {
                "n" => spec.n = value.parse().map_err(|e| bad(&e))?,
                "d" => spec.d = value.parse().map_err(|e| bad(&e))?,
                "q" => spec.q = value.parse().map_err(|e| bad(&e))?,
                "support" => spec.support_size = value.parse().map_err(|e| bad(&e))?,
                "groups" => spec.group_count = value.parse().map_err(|e| bad(&e))?,
                "rho" => spec.rho = value.parse().map_err(|e| bad(&e))?,
                "noise" => spec.noise_sigma = value.parse().map_err(|e| bad(&e))?,
                _ => return Err(format!("unknown synthetic key {key:?}")),
            }
        }
        Ok(SynthArg(spec))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightsArg(pub OscarSpec);

impl FromStr for WeightsArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let kv = pairs(s)?;
        let get = |k: &str| -> Result<Option<f64>, String> {
            kv.iter()
                .find(|(key, _)| *key == k)
                .map(|(_, v)| v.parse::<f64>().map_err(|e| format!("{k}={v}: {e}")))
                .transpose()
        };
        if let Some(k) = kv.iter().map(|(k, _)| *k).find(|k| !["alpha1", "alpha2", "p", "index", "tau"].contains(k)) {
            return Err(format!("unknown weights key {k:?}"));
        }
        let spec = match (get("alpha1")?, get("alpha2")?, get("p")?, get("index")?, get("tau")?) {
            (Some(alpha1), alpha2, None, None, None) => OscarSpec::Explicit {
                alpha1,
                alpha2: alpha2.unwrap_or(0.0),
            },
            (None, None, Some(factor), None, None) => OscarSpec::DataDriven { factor },
            (None, None, None, Some(index), Some(tau)) if index.fract() == 0.0 && index >= 1.0 => {
                OscarSpec::sparsity_index(index as u32, tau)
            }
            _ => return Err("expected alpha1=..[,alpha2=..], p=.., or index=..,tau=..".into()),
        };
        Ok(WeightsArg(spec))
    }
}

fn pairs(s: &str) -> Result<Vec<(&str, &str)>, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| format!("expected key=value, got {p:?}"))
        })
        .collect()
}

/// Splices `key=value` lines from any `--config` file in right after the
/// subcommand, so flags given on the command line take precedence.
pub fn expand_config(argv: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        let a = a.to_string_lossy();
        if a == "--config" {
            path = argv.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    let extra = read_config(&path)?;
    let mut out = argv;
    let at = 2.min(out.len());
    out.splice(at..at, extra);
    Ok(out)
}

fn read_config(path: &Path) -> anyhow::Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut args = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("{}:{}: expected key=value", path.display(), n + 1);
        };
        let (k, v) = (k.trim().replace('_', "-"), v.trim());
        match v {
            "true" => args.push(format!("--{k}").into()),
            "false" => {}
            _ => {
                args.push(format!("--{k}").into());
                args.push(v.into());
            }
        }
    }
    Ok(args)
}
