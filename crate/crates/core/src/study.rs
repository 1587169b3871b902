//! Monte Carlo comparison of the models on the simulated designs.

use ndarray::{Array1, Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ald::QuantileGrid;
use crate::data::Dataset;
use crate::draws::{ModelKind, PosteriorDraws};
use crate::error::{param, Result};
use crate::eval::metrics::{coefficient_rmse, coefficient_rmse_by_quantile, crossing_incidence, quantile_score, weighted_qs, WeightScheme};
use crate::rng::{derive_seed, RngStream};
use crate::sampler::{fit, SamplerConfig};
use crate::savs::sparsify_posterior;
use crate::sim::{generate, generate_covariates, generate_response, true_quantile_coefficients, DgpSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub dgp: usize,
    pub n_sim: usize,
    pub t: usize,
    pub n_test: usize,
    pub q: usize,
    pub correlation: f64,
    pub models: Vec<ModelKind>,
    /// Also report sparsified versions of non-centred fits.
    pub savs: bool,
    pub sampler: SamplerConfig,
    pub seed: u64,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sim == 0 || self.t == 0 || self.n_test == 0 || self.q < 2 {
            return Err(param("study needs n_sim, t, n_test >= 1 and at least two quantiles"));
        }
        if self.models.is_empty() {
            return Err(param("no models requested"));
        }
        self.sampler.validate()
    }
}

/// Point estimates of one model on one replicate.
#[derive(Clone, Debug)]
pub struct ReplicateFit {
    pub label: String,
    /// Original covariate scale, `Q x K`.
    pub beta: Array2<f64>,
    pub alpha: Array1<f64>,
    pub crossing: f64,
    pub qs_by_tau: Vec<f64>,
    pub inclusion0: Option<Array1<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub label: String,
    /// Mean in-sample crossing incidence of posterior-mean fits.
    pub crossing: f64,
    pub qs_by_tau: Vec<f64>,
    /// Equal, centre, left and right weighted out-of-sample scores.
    pub qwqs: [f64; 4],
    pub rmse: f64,
    /// Per-quantile RMSE over covariates that are null at every quantile.
    pub rmse_null_by_quantile: Option<Vec<f64>>,
    /// Mean level inclusion frequency per covariate (sparsified fits only).
    pub inclusion0: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub dgp: usize,
    pub taus: Vec<f64>,
    pub models: Vec<ModelSummary>,
}

impl StudyReport {
    pub fn model(&self, label: &str) -> Option<&ModelSummary> {
        self.models.iter().find(|m| m.label == label)
    }
}

fn fitted_quantiles(alpha: &Array1<f64>, beta: &Array2<f64>, x: &Array2<f64>) -> Array2<f64> {
    let mut f = x.dot(&beta.t());
    f += &alpha.view().insert_axis(Axis(0));
    f
}

fn summarize_fit(
    label: String,
    alpha: Array1<f64>,
    beta: Array2<f64>,
    train: &Dataset,
    x_test: &Array2<f64>,
    y_test: &Array1<f64>,
    grid: &QuantileGrid,
    inclusion0: Option<Array1<f64>>,
) -> Result<ReplicateFit> {
    let crossing = crossing_incidence(fitted_quantiles(&alpha, &beta, &train.x).view())?;
    let pred = fitted_quantiles(&alpha, &beta, x_test);
    let qs_by_tau = (0..grid.len())
        .map(|qi| quantile_score(y_test.view(), pred.column(qi), grid.tau(qi)))
        .collect::<Result<Vec<_>>>()?;
    let (a, b) = train.rescaling.back_transform_profile(alpha.view(), beta.view());
    Ok(ReplicateFit {
        label,
        beta: b,
        alpha: a,
        crossing,
        qs_by_tau,
        inclusion0,
    })
}

/// Fit every requested model to one replicate.
pub fn run_replicate(cfg: &StudyConfig, spec: &DgpSpec, grid: &QuantileGrid, rep: usize) -> Result<Vec<ReplicateFit>> {
    let mut rng = RngStream::new(derive_seed(cfg.seed, rep as u64), 0);
    let train = generate(spec, cfg.t, cfg.correlation, &mut rng)?;
    let xt_raw = generate_covariates(spec.k, cfg.n_test, cfg.correlation, &mut rng)?;
    let y_test = generate_response(spec, &xt_raw, &mut rng)?;
    let x_test = train.rescaling.apply(xt_raw.view())?;
    let input = train.chain_input(grid.len())?;
    let mut out = Vec::new();
    for (mi, model) in cfg.models.iter().enumerate() {
        let mut sc = cfg.sampler.clone();
        sc.seed = derive_seed(derive_seed(cfg.seed, rep as u64), 1 + mi as u64);
        let draws: PosteriorDraws = fit(*model, &input, grid, &sc)?;
        out.push(summarize_fit(
            model.name().to_string(),
            draws.mean_alpha(),
            draws.mean_beta(),
            &train,
            &x_test,
            &y_test,
            grid,
            None,
        )?);
        if cfg.savs && model.is_noncentred() {
            let sp = sparsify_posterior(&draws, train.x.view())?;
            out.push(summarize_fit(
                format!("{}_savs", model.name()),
                draws.mean_alpha(),
                sp.mean_beta(&draws)?,
                &train,
                &x_test,
                &y_test,
                grid,
                Some(sp.inclusion0.clone()),
            )?);
        }
    }
    Ok(out)
}

pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let spec = DgpSpec::standard(cfg.dgp)?;
    let grid = QuantileGrid::uniform(cfg.q)?;
    let reps: Vec<Vec<ReplicateFit>> = (0..cfg.n_sim)
        .into_par_iter()
        .map(|r| run_replicate(cfg, &spec, &grid, r))
        .collect::<Result<Vec<_>>>()?;
    summarize(&spec, &grid, &reps)
}

pub fn summarize(spec: &DgpSpec, grid: &QuantileGrid, reps: &[Vec<ReplicateFit>]) -> Result<StudyReport> {
    let (truth, _) = true_quantile_coefficients(spec, grid)?;
    let null = spec.null_covariates();
    let labels: Vec<String> = reps[0].iter().map(|f| f.label.clone()).collect();
    let n = reps.len() as f64;
    let mut models = Vec::new();
    for (li, label) in labels.iter().enumerate() {
        let fits: Vec<&ReplicateFit> = reps.iter().map(|r| &r[li]).collect();
        let crossing = fits.iter().map(|f| f.crossing).sum::<f64>() / n;
        let mut qs = vec![0.0; grid.len()];
        for f in &fits {
            for (a, b) in qs.iter_mut().zip(&f.qs_by_tau) {
                *a += b / n;
            }
        }
        let mut qwqs = [0.0; 4];
        for (i, s) in WeightScheme::ALL.iter().enumerate() {
            qwqs[i] = weighted_qs(&qs, grid.taus(), *s)?;
        }
        let betas: Vec<Array2<f64>> = fits.iter().map(|f| f.beta.clone()).collect();
        let rmse = coefficient_rmse(truth.view(), &betas)?;
        let rmse_null_by_quantile = if null.is_empty() {
            None
        } else {
            Some(coefficient_rmse_by_quantile(truth.view(), &betas, &null)?)
        };
        let inclusion0 = if fits.iter().all(|f| f.inclusion0.is_some()) {
            let k = spec.k;
            let mut inc = vec![0.0; k];
            for f in &fits {
                for (a, b) in inc.iter_mut().zip(f.inclusion0.as_ref().unwrap()) {
                    *a += b / n;
                }
            }
            Some(inc)
        } else {
            None
        };
        models.push(ModelSummary {
            label: label.clone(),
            crossing,
            qs_by_tau: qs,
            qwqs,
            rmse,
            rmse_null_by_quantile,
            inclusion0,
        });
    }
    Ok(StudyReport {
        dgp: spec.id,
        taus: grid.taus().to_vec(),
        models,
    })
}
