use std::fs;

use anyhow::{Context, Result};
use qvp_core::qvar::{stress_test, Scenario};

use super::{fan_rows, fit_system, load_system};
use crate::config::{Common, StressArgs};
use crate::output::{num, Output};

pub fn run(common: &Common, args: &StressArgs, out: &Output) -> Result<()> {
    let (data, names) = load_system(&args.system)?;
    let model = fit_system(common, &data, &names, out)?;
    let scenario = match (&args.scenario, &args.stress_var, args.stress_level) {
        (Some(p), _, _) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<Scenario>(&text).with_context(|| format!("parsing scenario {}", p.display()))?
        }
        (None, Some(v), Some(level)) => {
            Scenario::tail_stress(model.var_index(v)?, level, args.duration, names.len(), args.horizon)
        }
        _ => unreachable!("validated"),
    };
    out.json("scenario.json", &scenario)?;
    let last = data.row(data.nrows() - 1);
    let r = stress_test(&model, last, &scenario, args.horizon, args.paths, common.seed)?;
    let mut rows = fan_rows(&r.stressed, &names, &args.fan, Some("stressed"))?;
    rows.extend(fan_rows(&r.baseline, &names, &args.fan, Some("baseline"))?);
    out.csv("stress_fan.csv", &["run", "step", "variable", "level", "value"], rows)?;
    let qs = r.stressed.quantiles(&[0.5])?;
    let qb = r.baseline.quantiles(&[0.5])?;
    let mut rows = Vec::new();
    for step in 0..args.horizon {
        for (i, n) in names.iter().enumerate() {
            rows.push(vec![(step + 1).to_string(), n.clone(), num(qs[[step, i, 0]] - qb[[step, i, 0]])]);
        }
    }
    out.csv("median_shift.csv", &["step", "variable", "shift"], rows)?;
    Ok(())
}
