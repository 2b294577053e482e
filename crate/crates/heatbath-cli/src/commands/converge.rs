//! `converge`: strong-convergence study of collision paths against the
//! coupled reference diffusion. Writes sup-error per clock rate and checks
//! the fitted log-log slope against −1.

use heatbath::path::convergence_study;

use super::{Ctx, Report};
use crate::manifest::Check;
use crate::{output, CliError};

pub fn run(ctx: &Ctx) -> Result<Report, CliError> {
    let p = ctx.cfg.heatbath_params(1.0, 1)?;
    let betas = ctx
        .cfg
        .run
        .betas
        .clone()
        .unwrap_or_else(|| vec![10.0, 20.0, 40.0, 80.0, 160.0]);
    let n_paths = ctx.cfg.run.samples.unwrap_or(2000);
    let t_final = ctx.cfg.run.t_final.unwrap_or(2.0);
    let slope_tol = ctx.cfg.tolerance("slope_tol", 0.15);
    let drift = ctx.cfg.drift.build(p.n)?;

    let (sup_errors, slope) = convergence_study(&drift, &p, &betas, n_paths, t_final, ctx.seed)?;

    let path = ctx.out_dir.join("converge_errors.csv");
    let mut csv = output::csv_writer(&path)?;
    csv.write_record(["beta", "sup_error"])?;
    for (beta, err) in betas.iter().zip(&sup_errors) {
        csv.serialize((beta, err))?;
    }
    csv.flush()?;

    output::say(format_args!("log-log slope: {slope:.4}"));
    let checks = vec![Check::bounded(
        "log-log slope deviation from -1",
        slope + 1.0,
        slope_tol,
    )];
    Ok(Report { checks, artifacts: vec!["converge_errors.csv".into()] })
}
