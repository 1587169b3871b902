use anyhow::Result;
use ndarray::{s, Array2, Array3, Array4, Axis};
use qvp_core::eval::metrics::{crossing_incidence, quantile_score, MetricReport};
use qvp_core::savs::sparsify_posterior;
use qvp_core::{fit, ingest_csv, Dataset, PosteriorDraws, QuantileGrid};

use super::{mean_band, write_convergence};
use crate::config::{Common, FitArgs};
use crate::output::{num, Output};

/// Slopes and intercepts of every draw on the original covariate scale,
/// `[draw, q, k]` and `[draw, q]`.
fn original_scale(ds: &Dataset, alpha: &Array3<f64>, beta: &Array4<f64>) -> (Array2<f64>, Array3<f64>) {
    let (c, d, q, k) = beta.dim();
    let mut a = Array2::zeros((c * d, q));
    let mut b = Array3::zeros((c * d, q, k));
    for ci in 0..c {
        for di in 0..d {
            let (ao, bo) = ds
                .rescaling
                .back_transform_profile(alpha.slice(s![ci, di, ..]), beta.slice(s![ci, di, .., ..]));
            a.row_mut(ci * d + di).assign(&ao);
            b.slice_mut(s![ci * d + di, .., ..]).assign(&bo);
        }
    }
    (a, b)
}

fn write_profiles(out: &Output, suffix: &str, ds: &Dataset, grid: &QuantileGrid, a: &Array2<f64>, b: &Array3<f64>) -> Result<()> {
    let mut header = vec!["tau".to_string()];
    for name in &ds.covariates {
        for stat in ["mean", "lo95", "hi95"] {
            header.push(format!("{name}_{stat}"));
        }
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = (0..grid.len()).map(|qi| {
        let mut r = vec![num(grid.tau(qi))];
        for j in 0..ds.n_covariates() {
            let mut v = b.slice(s![.., qi, j]).to_vec();
            r.extend(mean_band(&mut v).map(num));
        }
        r
    });
    out.csv(&format!("beta_profile{suffix}.csv"), &header, rows)?;
    let rows = (0..grid.len()).map(|qi| {
        let mut v = a.column(qi).to_vec();
        let mut r = vec![num(grid.tau(qi))];
        r.extend(mean_band(&mut v).map(num));
        r
    });
    out.csv(&format!("intercept_profile{suffix}.csv"), &["tau", "mean", "lo95", "hi95"], rows)
}

/// In-sample scores of the posterior-mean fit.
fn in_sample_metrics(label: &str, ds: &Dataset, grid: &QuantileGrid, alpha: &Array2<f64>, beta: &Array3<f64>) -> Result<MetricReport> {
    let a = alpha.mean_axis(Axis(0)).expect("draws");
    let b = beta.mean_axis(Axis(0)).expect("draws");
    let mut fitted = ds.x_raw.dot(&b.t());
    fitted += &a.view().insert_axis(Axis(0));
    let qs = (0..grid.len())
        .map(|qi| quantile_score(ds.y.view(), fitted.column(qi), grid.tau(qi)))
        .collect::<qvp_core::Result<Vec<_>>>()?;
    let crossing = crossing_incidence(fitted.view())?;
    Ok(MetricReport::from_scores(label, None, grid.taus(), qs, crossing, None)?)
}

fn draw_summary(draws: &PosteriorDraws) -> Vec<Vec<String>> {
    draws
        .scalar_traces()
        .into_iter()
        .map(|(name, t)| {
            let mut v: Vec<f64> = t.iter().copied().collect();
            let n = v.len() as f64;
            let [mean, lo, hi] = mean_band(&mut v);
            let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
            let median = qvp_core::eval::metrics::empirical_quantile(&v, 0.5);
            vec![name, num(mean), num(sd), num(lo), num(median), num(hi)]
        })
        .collect()
}

pub fn run(common: &Common, args: &FitArgs, out: &Output) -> Result<()> {
    let ds = ingest_csv(&args.input, &args.target)?;
    let grid = common.grid()?;
    for j in 0..ds.n_covariates() {
        if ds.rescaling.is_degenerate(j) {
            log::warn!("covariate '{}' is constant and was mapped to zero", ds.covariates[j]);
        }
    }
    log::info!(
        "fitting {} on {} observations, {} covariates, {} quantiles",
        common.model.name(),
        ds.n_obs(),
        ds.n_covariates(),
        grid.len()
    );
    let draws = fit(common.model, &ds.chain_input(grid.len())?, &grid, &common.sampler())?;
    out.draws("draws", &draws)?;
    out.csv(
        "draws_summary.csv",
        &["parameter", "mean", "sd", "q025", "q500", "q975"],
        draw_summary(&draws),
    )?;
    write_convergence(&draws, out, "")?;

    let (a, b) = original_scale(&ds, &draws.alpha, &draws.beta);
    write_profiles(out, "", &ds, &grid, &a, &b)?;
    let mut metrics = vec![in_sample_metrics(common.model.name(), &ds, &grid, &a, &b)?];

    if common.savs {
        let sp = sparsify_posterior(&draws, ds.x.view())?;
        let (a, b) = original_scale(&ds, &draws.alpha, &sp.beta(&draws)?);
        write_profiles(out, "_savs", &ds, &grid, &a, &b)?;
        metrics.push(in_sample_metrics(&format!("{}_savs", common.model.name()), &ds, &grid, &a, &b)?);
        let mut rows = Vec::new();
        for (j, name) in ds.covariates.iter().enumerate() {
            rows.push(vec![name.clone(), "level".into(), String::new(), num(sp.inclusion0[j])]);
            for qi in 0..grid.len() {
                rows.push(vec![
                    name.clone(),
                    "scale".into(),
                    num(grid.tau(qi)),
                    num(sp.inclusion_sigma[[qi, j]]),
                ]);
            }
        }
        out.csv("inclusion.csv", &["covariate", "component", "tau", "inclusion"], rows)?;
    }
    out.json("metrics.json", &metrics)?;
    let mut rows = Vec::new();
    for m in &metrics {
        for (qi, qs) in m.qs_by_tau.iter().enumerate() {
            rows.push(vec![m.model.clone(), num(grid.tau(qi)), num(*qs)]);
        }
    }
    out.csv("in_sample_scores.csv", &["model", "tau", "quantile_score"], rows)?;
    for m in &metrics {
        println!(
            "{:<10} crossing {:>6.2}%  in-sample qwQS equal {:.4} centre {:.4} left {:.4} right {:.4}",
            m.model,
            100.0 * m.crossing,
            m.qwqs[0],
            m.qwqs[1],
            m.qwqs[2],
            m.qwqs[3]
        );
    }
    Ok(())
}
