//! `conserve`: Crank–Nicolson evolution of a wave field with an energy
//! conservation audit. Default setup is a two-eigenstate superposition in a
//! harmonic well; a displaced-ground-state or Gaussian-packet initial state
//! and zero/linear potentials are also available.

use heatbath::collision::{ScatteringStats, ZEnsemble};
use heatbath::energy::conservation_audit;
use heatbath::wave::{
    coherent_state, evolve_scaled, potential_on_grid, Grid1d, PotentialKind, WaveField,
};
use heatbath::HeatbathParams;
use nalgebra::Complex;

use super::{Ctx, Report};
use crate::manifest::Check;
use crate::{output, CliError};

type C64 = Complex<f64>;

pub fn run(ctx: &Ctx) -> Result<Report, CliError> {
    let p = ctx.cfg.heatbath_params(1.0, 1)?;
    if p.n != 1 {
        return Err(CliError::Config(format!(
            "params.n: the wave evolution is one-dimensional; set n = 1 (got {})",
            p.n
        )));
    }
    let t_final = ctx.cfg.run.t_final.unwrap_or(10.0);
    let dt = ctx.cfg.run.dt.unwrap_or(1e-3);
    if !(t_final > 0.0 && t_final.is_finite() && dt > 0.0 && dt.is_finite()) {
        return Err(CliError::Config(format!(
            "run: T and dt must be positive and finite (got T = {t_final}, dt = {dt})"
        )));
    }
    let dx = ctx.cfg.run.dx.unwrap_or(1.0 / 64.0);
    let nu = ctx.cfg.run.nu.unwrap_or(0.0);
    let potential = ctx.cfg.potential.build()?;
    let grid = Grid1d::from_bounds(-8.0, 8.0, dx)?;

    let state = match ctx.cfg.run.state.as_deref() {
        Some(s) => s.to_string(),
        None => match potential {
            PotentialKind::Harmonic { .. } => "superposition".to_string(),
            _ => "packet".to_string(),
        },
    };
    let field0 = initial_field(&state, &potential, grid, ctx, &p)?;

    // March in ~50 snapshot chunks; ν = 0 follows the exact same code path
    // as the unscaled solver, so the audit covers both.
    let total_steps = (t_final / dt).round().max(1.0) as usize;
    let steps_per = (total_steps / 50).max(1);
    let mut snaps = vec![field0];
    let mut times = vec![0.0];
    let mut done = 0usize;
    while done < total_steps {
        let step = steps_per.min(total_steps - done);
        let next = evolve_scaled(snaps.last().unwrap(), nu, dt, step, &p)?;
        done += step;
        snaps.push(next);
        times.push(done as f64 * dt);
    }

    let stats = if nu == 0.0 {
        ScatteringStats::zero(p.n, &p)
    } else {
        ZEnsemble::TwoStep { nu }
            .closed_form_stats(&p)
            .expect("two-step ensemble has closed-form moments")
    };
    let (series, drift) = conservation_audit(&snaps, &p, &stats)?;

    let path = ctx.out_dir.join("conserve_series.csv");
    let mut csv = output::csv_writer(&path)?;
    csv.write_record(["t", "norm", "kinetic", "potential", "audited_total"])?;
    let norm0 = snaps[0].norm();
    let mut norm_drift = 0.0f64;
    for ((t, field), total) in times.iter().zip(&snaps).zip(&series) {
        let norm = field.norm();
        norm_drift = norm_drift.max((norm / norm0 - 1.0).abs());
        let (kinetic, pot) = field.energy_functional();
        csv.serialize((t, norm, kinetic, pot, total))?;
    }
    csv.flush()?;

    let checks = vec![
        Check::bounded(
            "relative energy drift over the run",
            drift,
            ctx.cfg.tolerance("energy_drift", 1e-6),
        ),
        Check::bounded(
            "relative norm drift over the run",
            norm_drift,
            ctx.cfg.tolerance("norm_drift", 1e-9),
        ),
    ];
    Ok(Report { checks, artifacts: vec!["conserve_series.csv".into()] })
}

fn initial_field(
    state: &str,
    potential: &PotentialKind,
    grid: Grid1d,
    ctx: &Ctx,
    p: &HeatbathParams,
) -> Result<WaveField, CliError> {
    match state {
        "superposition" | "coherent" => {
            let PotentialKind::Harmonic { k } = potential else {
                return Err(CliError::Config(format!(
                    "run.state: '{state}' needs a harmonic potential"
                )));
            };
            if state == "coherent" {
                let x0 = ctx.cfg.run.x0.unwrap_or(0.6);
                Ok(coherent_state(grid, *k, x0, p)?.0)
            } else {
                Ok(two_eigenstate(grid, *k, p)?)
            }
        }
        "packet" => {
            let p0 = ctx.cfg.run.p0.unwrap_or(0.7);
            let sigma_e = ctx.cfg.run.sigma_e.unwrap_or(1.2);
            if !(sigma_e > 0.0 && sigma_e.is_finite()) {
                return Err(CliError::Config(format!(
                    "run.sigma_e: must be positive and finite, got {sigma_e}"
                )));
            }
            let psi: Vec<C64> = grid
                .nodes()
                .map(|x| {
                    let envelope = (-x * x / (4.0 * sigma_e * sigma_e)).exp();
                    let phase = p0 * x / p.chi;
                    C64::new(envelope * phase.cos(), envelope * phase.sin())
                })
                .collect();
            let phi = potential_on_grid(&grid, potential);
            Ok(WaveField::new(grid, psi, phi, p)?)
        }
        other => Err(CliError::Config(format!(
            "run.state: unknown state '{other}' (expected superposition, coherent, or packet)"
        ))),
    }
}

/// Equal-weight superposition of the two lowest harmonic eigenstates,
/// ψ ∝ e^{−x²/2w²}(1 + √2·x/w) with w² = χ/(M_T·ω).
fn two_eigenstate(grid: Grid1d, k: f64, p: &HeatbathParams) -> Result<WaveField, CliError> {
    let omega = (k / p.M_T).sqrt();
    let w_sq = p.chi / (p.M_T * omega);
    let w = w_sq.sqrt();
    let psi: Vec<C64> = grid
        .nodes()
        .map(|x| C64::new((-x * x / (2.0 * w_sq)).exp() * (1.0 + std::f64::consts::SQRT_2 * x / w), 0.0))
        .collect();
    let phi = potential_on_grid(&grid, &PotentialKind::Harmonic { k });
    Ok(WaveField::new(grid, psi, phi, p)?)
}
