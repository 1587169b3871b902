use anyhow::{bail, Result};

use super::write_convergence;
use crate::config::DiagnoseArgs;
use crate::output::{read_draws, Output};

pub fn run(args: &DiagnoseArgs, out: &Output) -> Result<()> {
    let draws = read_draws(&args.run.join("draws.json"))?;
    let Some(report) = write_convergence(&draws, out, "")? else {
        bail!("diagnostics need at least two chains, the run has {}", draws.n_chains());
    };
    println!(
        "{} parameters: {:.1}% with R-hat <= 1.01, {:.1}% <= 1.1, max {:.4}",
        report.parameters.len(),
        100.0 * report.share_below(1.01),
        100.0 * report.share_below(1.1),
        report.max_rhat()
    );
    Ok(())
}
