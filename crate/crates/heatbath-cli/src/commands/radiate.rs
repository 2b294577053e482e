//! `radiate`: forward-minus-backward energy difference along Brownian
//! collision paths against the closed shedding rate −Mσ²/2t.

use heatbath::energy::brownian_radiation_multi;

use super::{Ctx, Report};
use crate::manifest::Check;
use crate::{output, CliError};

pub fn run(ctx: &Ctx) -> Result<Report, CliError> {
    let p = ctx.cfg.heatbath_params(0.01, 1)?;
    let times = ctx.cfg.run.times.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    let n_paths = ctx.cfg.run.samples.unwrap_or(100_000);
    let rel_tol = ctx.cfg.tolerance("rel_err", 0.05);

    let pairs = brownian_radiation_multi(&p, &times, n_paths, ctx.seed)?;

    let path = ctx.out_dir.join("radiate_rates.csv");
    let mut csv = output::csv_writer(&path)?;
    csv.write_record(["t", "estimate", "closed", "rel_err"])?;
    let mut checks = Vec::with_capacity(times.len());
    for (t, (estimate, closed)) in times.iter().zip(&pairs) {
        let rel = estimate / closed - 1.0;
        csv.serialize((t, estimate, closed, rel))?;
        checks.push(Check::bounded(
            format!("radiated power relative error at t = {t}"),
            rel,
            rel_tol,
        ));
    }
    csv.flush()?;

    Ok(Report { checks, artifacts: vec!["radiate_rates.csv".into()] })
}
