//! `clock`: moment audit of the Gamma(2, β) inter-collision clock. Compares
//! sample mean, variance, E[1/τ], and E[1/√τ] against their closed forms in
//! standard-error units, plus a KS test of the full distribution.

use heatbath::clock::{clock_ks_statistic, gamma_moments, sample_intercollision};

use super::{Ctx, Report};
use crate::manifest::Check;
use crate::{output, CliError};

pub fn run(ctx: &Ctx) -> Result<Report, CliError> {
    let p = ctx.cfg.heatbath_params(1.0, 1)?;
    let n = ctx.cfg.run.samples.unwrap_or(1_000_000);
    if n < 100 {
        return Err(CliError::Config(format!(
            "run.samples: need at least 100 draws for moment standard errors, got {n}"
        )));
    }
    let n_se = ctx.cfg.tolerance("n_se", 3.0);

    // One-pass power sums per stream: τ, τ², τ³, τ⁴, 1/τ, 1/τ², 1/√τ.
    let partials = output::chunk_partials(n, |chunk, draws| {
        let mut rng = output::mc_rng(ctx.seed, 0, chunk);
        let mut s = [0.0f64; 7];
        for _ in 0..draws {
            let tau = sample_intercollision(p.beta, &mut rng);
            s[0] += tau;
            s[1] += tau * tau;
            s[2] += tau * tau * tau;
            s[3] += tau * tau * tau * tau;
            s[4] += 1.0 / tau;
            s[5] += 1.0 / (tau * tau);
            s[6] += 1.0 / tau.sqrt();
        }
        s
    });
    let mut s = [0.0f64; 7];
    for part in partials {
        for (total, x) in s.iter_mut().zip(part) {
            *total += x;
        }
    }
    let nf = n as f64;
    let mean = s[0] / nf;
    let m2 = s[1] / nf - mean * mean;
    let variance = m2 * nf / (nf - 1.0);
    let m4 = s[3] / nf - 4.0 * mean * s[2] / nf + 6.0 * mean * mean * s[1] / nf
        - 3.0 * mean.powi(4);
    let inv_mean = s[4] / nf;
    let inv_sqrt_mean = s[6] / nf;

    let se_mean = (m2 / nf).sqrt();
    let se_var = ((m4 - m2 * m2) / nf).sqrt();
    let se_inv = ((s[5] / nf - inv_mean * inv_mean) / nf).sqrt();
    // (1/√τ)² = 1/τ, so the inverse-square-root SE reuses the 1/τ sum.
    let se_inv_sqrt = ((s[4] / nf - inv_sqrt_mean * inv_sqrt_mean) / nf).sqrt();

    let (mean_c, var_c, inv_c, inv_sqrt_c) = gamma_moments(p.beta);

    let path = ctx.out_dir.join("clock_moments.csv");
    let mut csv = output::csv_writer(&path)?;
    csv.write_record(["quantity", "sample", "closed", "se"])?;
    csv.serialize(("mean", mean, mean_c, se_mean))?;
    csv.serialize(("variance", variance, var_c, se_var))?;
    csv.serialize(("inv_mean", inv_mean, inv_c, se_inv))?;
    csv.serialize(("inv_sqrt_mean", inv_sqrt_mean, inv_sqrt_c, se_inv_sqrt))?;
    csv.flush()?;

    // Distribution check on a fresh stream, sized so the KS critical value
    // is meaningful but the sort stays cheap.
    let ks_n = 20_000usize;
    let mut rng = output::mc_rng(ctx.seed, output::MC_CHUNKS, 0);
    let taus: Vec<f64> = (0..ks_n).map(|_| sample_intercollision(p.beta, &mut rng)).collect();
    let ks = clock_ks_statistic(&taus, p.beta)?;
    // 1% asymptotic Kolmogorov critical value 1.63/√N.
    let ks_tol = ctx.cfg.tolerance("ks", 1.63 / (ks_n as f64).sqrt());

    let checks = vec![
        Check::bounded("mean inter-collision time z-score", (mean - mean_c) / se_mean, n_se),
        Check::bounded("variance z-score", (variance - var_c) / se_var, n_se),
        Check::bounded("inverse-time mean z-score", (inv_mean - inv_c) / se_inv, n_se),
        Check::bounded(
            "inverse-sqrt-time mean z-score",
            (inv_sqrt_mean - inv_sqrt_c) / se_inv_sqrt,
            n_se,
        ),
        Check::bounded("distribution KS statistic (fresh 20k draws)", ks, ks_tol),
    ];
    Ok(Report { checks, artifacts: vec!["clock_moments.csv".into()] })
}
