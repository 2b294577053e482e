//! `minkowski`: interval identities of collision frames, boost composition,
//! and the end-to-end time-dilation experiment at the configured increment
//! correlations.

use heatbath::clock::IncrementModel;
use heatbath::relativity::{
    dilation_experiment, lorentz_boost, minkowski_invariant, MinkowskiFrame,
};

use super::{Ctx, Report};
use crate::manifest::Check;
use crate::{output, CliError};

pub fn run(ctx: &Ctx) -> Result<Report, CliError> {
    let p = ctx.cfg.heatbath_params(1.0, 1)?;
    let rhos = ctx.cfg.run.rhos.clone().unwrap_or_else(|| vec![0.0, 0.36, 0.64]);
    let n_draws = ctx.cfg.run.samples.unwrap_or(300_000);
    // Default speed scale: the bath's equilibrium speed, the unique c for
    // which the configured τ̄ is the rest-frame clock and the interval sum
    // telescopes to n·ε·T/(2α²M).
    let c = ctx
        .cfg
        .run
        .c
        .unwrap_or_else(|| (p.n as f64 * p.epsilon / (2.0 * p.alpha_sq * p.M * p.tau_bar)).sqrt());
    if !(c > 0.0 && c.is_finite()) {
        return Err(CliError::Config(format!("run.c: must be positive and finite, got {c}")));
    }
    let residual_tol = ctx.cfg.tolerance("residual", 1e-12);
    let n_se = ctx.cfg.tolerance("n_se", 4.0);

    // Constructed frames: the stationary one plus one per correlation.
    let mut frames = vec![MinkowskiFrame::stationary(&p, c)?];
    for &rho in &rhos {
        frames.push(MinkowskiFrame::from_correlation(&p, rho, c)?);
    }

    let frames_path = ctx.out_dir.join("minkowski_frames.csv");
    let mut csv = output::csv_writer(&frames_path)?;
    csv.write_record(["rho_delta", "speed", "tau_v", "dx_bar", "interval_sq", "residual"])?;
    let mut frame_residual = 0.0f64;
    for (frame, label) in frames.iter().zip(std::iter::once(-1.0).chain(rhos.iter().copied())) {
        frame_residual = frame_residual.max(frame.residual().abs());
        csv.serialize((
            label,
            frame.v.norm(),
            frame.tau_v,
            frame.dx_bar,
            frame.interval_sq(),
            frame.residual(),
        ))?;
    }
    csv.flush()?;

    let horizon: f64 = frames.iter().map(|f| f.tau_bar).sum();
    let (lhs, rhs) = minkowski_invariant(&frames, &p, horizon)?;

    // Boost audit: composing through the rest frame reproduces the direct
    // relative boost.
    let v = nalgebra::DVector::from_element(p.n, 0.6 * c);
    let v_prime = nalgebra::DVector::from_element(p.n, -0.25 * c);
    let zero = nalgebra::DVector::zeros(p.n);
    let direct = lorentz_boost(&v, &v_prime, c)?;
    let through_rest = lorentz_boost(&v, &zero, c)?
        * lorentz_boost(&v_prime, &zero, c)?
            .try_inverse()
            .ok_or_else(|| heatbath::Error::Numerical("boost matrix is singular".into()))?;
    let boost_residual = (&direct - through_rest).abs().max();

    // End-to-end dilation experiments, one increment model per correlation.
    let dilation_path = ctx.out_dir.join("minkowski_dilation.csv");
    let mut csv = output::csv_writer(&dilation_path)?;
    csv.write_record([
        "rho_delta",
        "rho_hat",
        "dilation",
        "closed_dilation",
        "c_sq_hat",
        "c_sq_se",
        "invariant_lhs",
        "invariant_rhs",
    ])?;
    let mut checks = vec![
        Check::bounded("interval residual (max over frames)", frame_residual, residual_tol),
        Check::bounded("interval sum telescope residual", lhs / rhs - 1.0, residual_tol),
        Check::bounded("boost composition residual", boost_residual, residual_tol),
    ];
    for &rho in &rhos {
        let model = IncrementModel::with_correlation(p.sigma, rho, p.tau_bar)?;
        let report = dilation_experiment(&p, &model, (0.0, 0.0), n_draws, ctx.seed)?;
        csv.serialize((
            rho,
            report.rho_hat,
            report.dilation,
            report.closed_dilation,
            report.c_sq_hat,
            report.c_sq_se,
            report.invariant_lhs,
            report.invariant_rhs,
        ))?;
        // Correlation error propagated through d(dilation)/dρ_Δ
        //   = (dilation³/2)·(1−2α²).
        let corr_se = (1.0 - rho * rho) / (n_draws as f64).sqrt();
        let dilation_band =
            (0.5 * n_se * report.closed_dilation.powi(3) * (1.0 - 2.0 * p.alpha_sq) * corr_se)
                .max(1e-6);
        checks.push(Check::bounded(
            format!("time dilation deviation at rho = {rho}"),
            report.dilation - report.closed_dilation,
            dilation_band,
        ));
        let invariant_band = n_se * report.c_sq_se * report.tau_v * report.tau_v;
        checks.push(Check::bounded(
            format!("measured interval deviation at rho = {rho}"),
            report.invariant_lhs - report.invariant_rhs,
            invariant_band,
        ));
    }
    csv.flush()?;

    Ok(Report {
        checks,
        artifacts: vec!["minkowski_frames.csv".into(), "minkowski_dilation.csv".into()],
    })
}
