use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qvp_core::qvar::{CoefficientSource, QvarSpec};
use qvp_core::{AlphaPrior, ModelKind, QuantileGrid, SamplerConfig};
use serde::{Deserialize, Serialize};

/// Environment variable naming the directory under which runs without an
/// explicit `--output` are written.
pub const OUTPUT_ROOT_ENV: &str = "QVP_OUTPUT_ROOT";
const DEFAULT_OUTPUT_ROOT: &str = "qvp-output";

/// Everything a run depends on. Saved as `config.json` in the output
/// directory.
#[derive(Parser, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[command(name = "qvp", version, about = "Joint Bayesian quantile regression and quantile vector autoregression")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Subcommand, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Command {
    /// Fit one response on a CSV design and write draws and profiles.
    Fit(FitArgs),
    /// Monte Carlo comparison of models on a simulated design.
    Simulate(SimulateArgs),
    /// Fan chart of a quantile VAR, optionally with a rolling evaluation.
    Forecast(ForecastArgs),
    /// Quantile impulse responses of a quantile VAR.
    Qirf(QirfArgs),
    /// Scenario forecasts with imposed quantile levels.
    Stress(StressArgs),
    /// Convergence diagnostics for saved draws.
    Diagnose(DiagnoseArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Simulate(_) => "simulate",
            Command::Forecast(_) => "forecast",
            Command::Qirf(_) => "qirf",
            Command::Stress(_) => "stress",
            Command::Diagnose(_) => "diagnose",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SavsSource {
    /// Sparsified posterior draws.
    Draws,
    /// Posterior mean of the sparsified draws.
    Mean,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Common {
    /// Output directory [default: $QVP_OUTPUT_ROOT/<command>, or ./qvp-output/<command>].
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Number of equally spaced quantile levels i / (Q + 1).
    #[arg(long, short = 'q', global = true, default_value_t = 19)]
    pub quantiles: usize,
    /// Explicit comma-separated quantile levels; overrides --quantiles.
    #[arg(long, global = true, value_delimiter = ',')]
    pub taus: Option<Vec<f64>>,
    /// Sampler: qvp (centred), ncqvp (non-centred), asis (interweaving) or bqr (independent).
    #[arg(long, global = true, default_value = "qvp")]
    pub model: ModelKind,
    #[arg(long, global = true, default_value_t = 4)]
    pub chains: usize,
    #[arg(long, global = true, default_value_t = 2000)]
    pub burnin: usize,
    /// Saved draws per chain.
    #[arg(long, global = true, default_value_t = 3000)]
    pub draws: usize,
    #[arg(long, global = true, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Shrink successive intercept differences with the slope prior.
    #[arg(long, global = true)]
    pub alpha_difference: bool,
    /// Sparsify non-centred draws.
    #[arg(long, global = true)]
    pub savs: bool,
    /// Which sparsified coefficients drive QVAR simulations.
    #[arg(long, global = true, value_enum, default_value = "mean")]
    pub savs_source: SavsSource,
    /// Interpolate coefficients at quantile levels off the grid.
    #[arg(long, global = true)]
    pub interpolate: bool,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Response column, by name or 1-based position.
    #[arg(long)]
    pub target: String,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Simulation design 1 to 5.
    #[arg(long)]
    pub dgp: usize,
    #[arg(long, default_value_t = 50)]
    pub nsim: usize,
    /// Training observations per replicate.
    #[arg(long, default_value_t = 300)]
    pub t: usize,
    /// Fresh observations per replicate for the predictive scores.
    #[arg(long, default_value_t = 100)]
    pub n_test: usize,
    /// Equicorrelation of the covariate copula.
    #[arg(long, default_value_t = 0.0)]
    pub correlation: f64,
    /// Models to compare; the first bqr entry is the reference.
    #[arg(long, value_delimiter = ',', default_value = "qvp,ncqvp,bqr")]
    pub compare: Vec<ModelKind>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemArgs {
    /// CSV file with one column per variable, rows in time order.
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated variables in causal order [default: every column].
    #[arg(long, value_delimiter = ',')]
    pub variables: Option<Vec<String>>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, visible_alias = "h", default_value_t = 6)]
    pub horizon: usize,
    #[arg(long, default_value_t = 1000)]
    pub paths: usize,
    /// Fan chart levels.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.25,0.5,0.75,0.9,0.95")]
    pub fan: Vec<f64>,
    /// Forecast origins in the expanding-window evaluation; 0 skips it.
    #[arg(long, default_value_t = 12)]
    pub eval_windows: usize,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QirfArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long)]
    pub shock: String,
    #[arg(long)]
    pub responder: String,
    #[arg(long, default_value_t = 12)]
    pub horizon: usize,
    /// Impact size [default: median residual scale of the shocked equation].
    #[arg(long)]
    pub shock_size: Option<f64>,
    /// Responder levels [default: the grid].
    #[arg(long, value_delimiter = ',')]
    pub response_levels: Option<Vec<f64>>,
    /// Level held by every other variable.
    #[arg(long, default_value_t = 0.5)]
    pub fixed_level: f64,
    /// Central posterior band.
    #[arg(long, default_value_t = 0.95)]
    pub band: f64,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StressArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// JSON scenario file; see docs/formats.md.
    #[arg(long, conflicts_with_all = ["stress_var", "stress_level"])]
    pub scenario: Option<PathBuf>,
    /// Variable held at --stress-level, all others at the median.
    #[arg(long, requires = "stress_level")]
    pub stress_var: Option<String>,
    #[arg(long, requires = "stress_var")]
    pub stress_level: Option<f64>,
    /// Steps the stressed level is held.
    #[arg(long, default_value_t = 1)]
    pub duration: usize,
    #[arg(long, default_value_t = 8)]
    pub horizon: usize,
    #[arg(long, default_value_t = 1000)]
    pub paths: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.25,0.5,0.75,0.9,0.95")]
    pub fan: Vec<f64>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseArgs {
    /// Directory holding draws.json and draws.bin from a previous fit.
    #[arg(long)]
    pub run: PathBuf,
}

impl Common {
    pub fn grid(&self) -> Result<QuantileGrid> {
        let g = match &self.taus {
            Some(t) => QuantileGrid::new(t.clone())?,
            None => QuantileGrid::uniform(self.quantiles)?,
        };
        Ok(g)
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            chains: self.chains,
            burnin: self.burnin,
            draws: self.draws,
            thin: self.thin,
            seed: self.seed,
            alpha_prior: if self.alpha_difference {
                AlphaPrior::Difference
            } else {
                AlphaPrior::Flat
            },
            ..SamplerConfig::default()
        }
    }

    pub fn qvar_spec(&self) -> QvarSpec {
        let mut spec = QvarSpec::new(self.model);
        if self.savs {
            spec.source = match self.savs_source {
                SavsSource::Draws => CoefficientSource::SavsDraws,
                SavsSource::Mean => CoefficientSource::SavsMean,
            };
        }
        spec.interpolate = self.interpolate;
        spec
    }
}

fn require_file(p: &Path) -> Result<()> {
    if !p.is_file() {
        bail!("input file {} does not exist", p.display());
    }
    Ok(())
}

fn check_levels(levels: &[f64], what: &str) -> Result<()> {
    if levels.is_empty() || levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
        bail!("{what} must be non-empty and lie in (0, 1)");
    }
    Ok(())
}

impl RunConfig {
    /// Check everything that can be checked without touching the data.
    pub fn validate(&self) -> Result<()> {
        let c = &self.common;
        c.grid().context("quantile grid")?;
        c.sampler().validate().context("sampler settings")?;
        if c.savs && !c.model.is_noncentred() && !matches!(self.command, Command::Simulate(_) | Command::Diagnose(_)) {
            bail!("--savs needs a non-centred model (ncqvp or asis), got {}", c.model.name());
        }
        match &self.command {
            Command::Fit(a) => require_file(&a.input)?,
            Command::Simulate(a) => {
                if !(1..=5).contains(&a.dgp) {
                    bail!("--dgp must be 1 to 5");
                }
                if a.nsim == 0 || a.t == 0 || a.n_test == 0 || a.compare.is_empty() {
                    bail!("--nsim, --t, --n-test and --compare must be non-empty");
                }
                if c.taus.is_some() {
                    bail!("simulate uses the uniform grid; pass --quantiles instead of --taus");
                }
                if !(0.0..1.0).contains(&a.correlation) {
                    bail!("--correlation must lie in [0, 1)");
                }
            }
            Command::Forecast(a) => {
                require_file(&a.system.input)?;
                if a.horizon == 0 || a.paths == 0 {
                    bail!("--horizon and --paths must be positive");
                }
                check_levels(&a.fan, "--fan levels")?;
            }
            Command::Qirf(a) => {
                require_file(&a.system.input)?;
                check_levels(&[a.fixed_level, a.band], "--fixed-level and --band")?;
                if let Some(l) = &a.response_levels {
                    check_levels(l, "--response-levels")?;
                }
            }
            Command::Stress(a) => {
                require_file(&a.system.input)?;
                match (&a.scenario, &a.stress_var) {
                    (Some(p), _) => require_file(p)?,
                    (None, Some(_)) => check_levels(&[a.stress_level.unwrap_or(f64::NAN)], "--stress-level")?,
                    (None, None) => bail!("stress needs --scenario or --stress-var with --stress-level"),
                }
                if a.horizon == 0 || a.paths == 0 {
                    bail!("--horizon and --paths must be positive");
                }
                check_levels(&a.fan, "--fan levels")?;
            }
            Command::Diagnose(a) => {
                if !a.run.join("draws.json").is_file() {
                    bail!("{} holds no draws.json", a.run.display());
                }
            }
        }
        Ok(())
    }

    /// Fix the output directory so the saved configuration names it.
    pub fn resolve_output(&mut self) {
        if self.common.output.is_none() {
            let root = std::env::var_os(OUTPUT_ROOT_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT));
            self.common.output = Some(root.join(self.command.name()));
        }
    }
}
