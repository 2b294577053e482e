//! `scatter`: Monte Carlo audit of the heat-bath shock covariance. Phase
//! one maps independent main-particle shocks through the scatter-free
//! collision; phase two adds the two-step scattering ensemble and compares
//! against the Γ_Z-augmented covariance.

use heatbath::collision::{heatbath_cov_scattering, sample_heatbath_shocks, ScatteringStats, ZEnsemble};
use heatbath::HeatbathParams;
use nalgebra::{DMatrix, DVector};

use super::{Ctx, Report};
use crate::manifest::Check;
use crate::{output, CliError};

pub fn run(ctx: &Ctx) -> Result<Report, CliError> {
    let p = ctx.cfg.heatbath_params(1.0, 2)?;
    if p.n != 2 {
        return Err(CliError::Config(format!(
            "params.n: the two-step scattering ensemble lives in 2 dimensions; set n = 2 (got {})",
            p.n
        )));
    }
    let nu = ctx.cfg.run.nu.unwrap_or(1.0);
    let n_draws = ctx.cfg.run.samples.unwrap_or(1_000_000);
    if n_draws < 1000 {
        return Err(CliError::Config(format!(
            "run.samples: need at least 1000 shock draws, got {n_draws}"
        )));
    }
    let corr_tol = ctx.cfg.tolerance("corr_abs", 0.01);
    let n_se = ctx.cfg.tolerance("n_se", 3.0);

    let path = ctx.out_dir.join("scatter_covariance.csv");
    let mut csv = output::csv_writer(&path)?;
    csv.write_record(["ensemble", "i", "j", "sample", "closed", "se"])?;

    // Phase 1: Z ≡ 0.
    let simple_stats = ScatteringStats::zero(p.n, &p);
    let want_simple = heatbath_cov_scattering(&p, &simple_stats);
    let acc_simple = second_moments(&p, None, n_draws, ctx.seed, 0);
    let (corr_dev, z_simple) =
        write_phase(&mut csv, "simple", &acc_simple, &want_simple, n_draws, &p)?;

    // Phase 2: two-step ensemble of amplitude ν, fresh streams.
    let ens = ZEnsemble::TwoStep { nu };
    let stats = ens
        .closed_form_stats(&p)
        .expect("two-step ensemble has closed-form moments");
    let want_scatter = heatbath_cov_scattering(&p, &stats);
    let acc_scatter = second_moments(&p, Some(&ens), n_draws, ctx.seed, output::MC_CHUNKS);
    let (_, z_scatter) =
        write_phase(&mut csv, "two_step", &acc_scatter, &want_scatter, n_draws, &p)?;
    csv.flush()?;

    let checks = vec![
        Check::bounded("forward/backward shock correlation deviation", corr_dev, corr_tol),
        Check::bounded("cross-covariance block max z-score (simple)", z_simple.0, n_se),
        Check::bounded("covariance matrix max z-score (simple)", z_simple.1, n_se + 1.0),
        Check::bounded("cross-covariance block max z-score (two-step)", z_scatter.0, n_se),
        Check::bounded("covariance matrix max z-score (two-step)", z_scatter.1, n_se + 1.0),
    ];
    Ok(Report { checks, artifacts: vec!["scatter_covariance.csv".into()] })
}

/// Second-moment matrix of the stacked shock pair (w⁺; w⁻) over `n_draws`
/// samples, split across fixed RNG streams.
fn second_moments(
    p: &HeatbathParams,
    ens: Option<&ZEnsemble>,
    n_draws: usize,
    seed: u64,
    stream_offset: u64,
) -> DMatrix<f64> {
    let dim = 2 * p.n;
    let zero_z = DMatrix::zeros(p.n, p.n);
    let partials = output::chunk_partials(n_draws, |chunk, draws| {
        let mut rng = output::mc_rng(seed, stream_offset, chunk);
        let mut acc = DMatrix::zeros(dim, dim);
        let mut stacked = DVector::zeros(dim);
        for _ in 0..draws {
            let z_draw;
            let z = match ens {
                Some(e) => {
                    z_draw = e.sample(&mut rng);
                    &z_draw
                }
                None => &zero_z,
            };
            let (wp, wm) = sample_heatbath_shocks(p, z, &mut rng);
            for i in 0..p.n {
                stacked[i] = wp[i];
                stacked[p.n + i] = wm[i];
            }
            acc.ger(1.0, &stacked, &stacked, 1.0);
        }
        acc
    });
    let mut total = DMatrix::zeros(dim, dim);
    for part in partials {
        total += part;
    }
    total / n_draws as f64
}

/// Writes one phase's entries and returns the forward/backward correlation
/// deviation plus (cross-block, full-matrix) max z-scores.
fn write_phase<W: std::io::Write>(
    csv: &mut csv::Writer<W>,
    label: &str,
    acc: &DMatrix<f64>,
    want: &DMatrix<f64>,
    n_draws: usize,
    p: &HeatbathParams,
) -> Result<(f64, (f64, f64)), CliError> {
    let dim = acc.nrows();
    let n = p.n;
    let nf = n_draws as f64;
    let mut z_cross = 0.0f64;
    let mut z_all = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            // Gaussian second-moment standard error.
            let se = ((want[(i, i)] * want[(j, j)] + want[(i, j)] * want[(i, j)]) / nf).sqrt();
            let z = (acc[(i, j)] - want[(i, j)]) / se;
            z_all = z_all.max(z.abs());
            if i < n && j >= n {
                z_cross = z_cross.max(z.abs());
            }
            csv.serialize((label, i, j, acc[(i, j)], want[(i, j)], se))?;
        }
    }
    let corr = acc[(0, n)] / (acc[(0, 0)] * acc[(n, n)]).sqrt();
    let corr_dev = corr - (-(1.0 - 2.0 * p.alpha_sq));
    Ok((corr_dev, (z_cross, z_all)))
}
