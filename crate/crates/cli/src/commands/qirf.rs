use anyhow::Result;
use qvp_core::qvar::{qirf, QirfSpec};

use super::{fit_system, load_system};
use crate::config::{Common, QirfArgs};
use crate::output::{num, Output};

pub fn run(common: &Common, args: &QirfArgs, out: &Output) -> Result<()> {
    let (data, names) = load_system(&args.system)?;
    let model = fit_system(common, &data, &names, out)?;
    let mut spec = QirfSpec::new(model.var_index(&args.shock)?, model.var_index(&args.responder)?, args.horizon);
    spec.shock_size = args.shock_size;
    spec.response_levels = args.response_levels.clone();
    spec.fixed_level = args.fixed_level;
    spec.band = args.band;
    let surface = qirf(&model, &spec)?;
    let mut rows = Vec::new();
    for h in 0..=args.horizon {
        for (li, l) in surface.levels.iter().enumerate() {
            rows.push(vec![
                h.to_string(),
                num(*l),
                num(surface.mean[[h, li]]),
                num(surface.lower[[h, li]]),
                num(surface.upper[[h, li]]),
            ]);
        }
    }
    out.csv("qirf.csv", &["horizon", "level", "mean", "lower", "upper"], rows)?;
    out.json(
        "qirf.json",
        &serde_json::json!({
            "shock": args.shock,
            "responder": args.responder,
            "shock_size": surface.shock_size,
            "band": args.band,
        }),
    )?;
    println!("shock {} of size {} on {}", args.shock, surface.shock_size, args.responder);
    Ok(())
}
