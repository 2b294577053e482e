//! `collide`: elastic-collision conservation audit over Haar-random
//! scattering blocks. Writes one row per event; checks that momentum,
//! energy, and both general-scattering energy forms are conserved to the
//! configured residual.

use heatbath::clock::stream_rng;
use heatbath::collision::{collide, energy_forms, kernel_from_unitary, sample_orthogonal};
use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Ctx, Report};
use crate::manifest::Check;
use crate::{output, CliError};

pub fn run(ctx: &Ctx) -> Result<Report, CliError> {
    let p = ctx.cfg.heatbath_params(1.0, 1)?;
    let samples = ctx.cfg.run.samples.unwrap_or(1000);
    if samples == 0 {
        return Err(CliError::Config("run.samples: need at least one event".into()));
    }
    let tol = ctx.cfg.tolerance("residual", 1e-12);

    let path = ctx.out_dir.join("collide_events.csv");
    let mut csv = output::csv_writer(&path)?;
    csv.write_record([
        "event",
        "momentum_residual",
        "energy_residual",
        "form_v_residual",
        "form_w_residual",
    ])?;

    let mut rng = stream_rng(ctx.seed, 0);
    let mut maxima = [0.0f64; 4];
    for event in 0..samples {
        let u = sample_orthogonal(p.n, &mut rng);
        let kernel = kernel_from_unitary(&p, &u)?;
        let v1 = normal_vec(p.n, &mut rng);
        let w1 = normal_vec(p.n, &mut rng);
        let ev = collide(&kernel, &v1, &w1)?;

        let momentum = (&ev.v2 * p.M + &ev.w2 * p.m) - (&v1 * p.M + &w1 * p.m);
        let e1 = ev.kinetic_energy(&p);
        let e2 = 0.5 * p.M * ev.v2.norm_squared() + 0.5 * p.m * ev.w2.norm_squared();
        let forms = energy_forms(&ev, &p);
        let scale = e1.max(1.0);
        let row = [
            momentum.abs().max(),
            (e2 - e1).abs() / scale,
            (forms.scattering_form - e1).abs() / scale,
            (forms.scattering_form_w - e1).abs() / scale,
        ];
        for (m, r) in maxima.iter_mut().zip(row) {
            *m = m.max(r);
        }
        csv.serialize((event, row[0], row[1], row[2], row[3]))?;
    }
    csv.flush()?;

    let checks = vec![
        Check::bounded("momentum residual (max over events)", maxima[0], tol),
        Check::bounded("energy residual (max over events)", maxima[1], tol),
        Check::bounded("energy form in v residual (max over events)", maxima[2], tol),
        Check::bounded("energy form in w residual (max over events)", maxima[3], tol),
    ];
    Ok(Report { checks, artifacts: vec!["collide_events.csv".into()] })
}

fn normal_vec<R: Rng>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        z
    })
}
