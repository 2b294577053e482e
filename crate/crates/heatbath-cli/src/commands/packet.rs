//! `packet`: Gaussian wave-packet energy ledger. Evaluates the closed-form
//! forward/backward energies at the requested times, reproduces them by
//! grid quadrature over the exact packet density, and audits the
//! time-independence and limit identities.

use heatbath::energy::{forward_backward_energy, packet_energy_report};
use heatbath::wave::{drifts_from_wave, packet_field, Grid1d, WavePacketSpec};

use super::{Ctx, Report};
use crate::manifest::Check;
use crate::{output, CliError};

pub fn run(ctx: &Ctx) -> Result<Report, CliError> {
    let p = ctx.cfg.heatbath_params(1.0, 1)?;
    if p.n != 1 {
        return Err(CliError::Config(format!(
            "params.n: the packet is one-dimensional; set n = 1 (got {})",
            p.n
        )));
    }
    let p0 = ctx.cfg.run.p0.unwrap_or(0.7);
    let sigma_e = ctx.cfg.run.sigma_e.unwrap_or(1.2);
    let times = ctx
        .cfg
        .run
        .times
        .clone()
        .unwrap_or_else(|| vec![0.25, 0.5, 1.0, 2.0, 4.0]);
    let dx = ctx.cfg.run.dx.unwrap_or(1.0 / 512.0);
    let rel_tol = ctx.cfg.tolerance("rel_err", 1e-3);
    let exact_tol = ctx.cfg.tolerance("identity", 1e-12);

    let spec = WavePacketSpec::new(p0, sigma_e, &p)?;

    let csv_path = ctx.out_dir.join("packet_energies.csv");
    let mut csv = output::csv_writer(&csv_path)?;
    csv.write_record([
        "t",
        "h_plus_main",
        "h_minus_main",
        "h_plus_bath",
        "h_minus_bath",
        "e_hk",
        "quad_h_plus_main",
        "quad_h_minus_main",
        "quad_h_plus_bath",
        "quad_h_minus_bath",
    ])?;

    let mut quad_err = 0.0f64;
    let mut kinetic_err = 0.0f64;
    let mut sum_identity = 0.0f64;
    let mut e_hk_wander = 0.0f64;
    let mut e_hk_first = None;
    for &t in &times {
        let closed = packet_energy_report(&spec, &p, t)?;

        // Domain wide enough that the density floor masks only true tail
        // nodes: ten standard deviations plus a constant margin.
        let sd = closed_sd(&spec, t);
        let center = spec.mean(t);
        let half = 10.0 * sd + 2.0;
        let grid = Grid1d::from_bounds(center - half, center + half, dx)?;
        let field = packet_field(&spec, grid, t, &p)?;
        let rho = field.rho();
        let drifts = drifts_from_wave(&field, &p);
        let (hpm, hmm, hpb, hmb) =
            forward_backward_energy(&grid, &drifts.b_plus, &drifts.b_minus, &rho, &p)?;

        let rels = [
            hpm / closed.h_plus_main - 1.0,
            hmm / closed.h_minus_main - 1.0,
            hpb / closed.h_plus_bath - 1.0,
            hmb / closed.h_minus_bath - 1.0,
        ];
        for r in rels {
            quad_err = quad_err.max(r.abs());
        }
        // n = 1: H⁺_M + H⁺_m = E[H_k] exactly, and the total is t-free.
        kinetic_err = kinetic_err.max(((hpm + hpb) / closed.e_hk - 1.0).abs());
        sum_identity = sum_identity
            .max(((closed.h_plus_main + closed.h_plus_bath) / closed.e_hk - 1.0).abs());
        let first = *e_hk_first.get_or_insert(closed.e_hk);
        e_hk_wander = e_hk_wander.max((closed.e_hk / first - 1.0).abs());

        csv.serialize((
            t,
            closed.h_plus_main,
            closed.h_minus_main,
            closed.h_plus_bath,
            closed.h_minus_bath,
            closed.e_hk,
            hpm,
            hmm,
            hpb,
            hmb,
        ))?;
    }
    csv.flush()?;

    // Limit identities: the forward/backward split closes at both ends.
    let at_zero = packet_energy_report(&spec, &p, 0.0)?;
    let at_inf = packet_energy_report(&spec, &p, f64::INFINITY)?;
    let limit_err = ((at_zero.h_plus_main - at_zero.h_minus_main) / at_zero.e_hk)
        .abs()
        .max(((at_zero.h_plus_bath - at_zero.h_minus_bath) / at_zero.e_hk).abs())
        .max(((at_inf.h_plus_main - at_inf.h_minus_main) / at_inf.e_hk).abs())
        .max(((at_inf.h_plus_main + at_inf.h_plus_bath) / at_inf.e_hk - 1.0).abs());

    let checks = vec![
        Check::bounded("forward/backward energy quadrature max relative error", quad_err, rel_tol),
        Check::bounded("kinetic energy quadrature max relative error", kinetic_err, rel_tol),
        Check::bounded("main+bath sum identity residual (closed forms)", sum_identity, exact_tol),
        Check::bounded("kinetic energy time-independence", e_hk_wander, exact_tol),
        Check::bounded("t→0 and t→∞ limit identities", limit_err, exact_tol),
    ];
    Ok(Report { checks, artifacts: vec!["packet_energies.csv".into()] })
}

fn closed_sd(spec: &WavePacketSpec, t: f64) -> f64 {
    spec.variance(t).sqrt()
}
