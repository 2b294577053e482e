//! Minkowski bookkeeping for the collision clock: the per-collision
//! invariant c²τ̄² − |Δx̄|², the rest-frame collision time it pins down, the
//! Lorentz boost that maps between drifting frames, time dilation from the
//! forward/backward increment correlation, and the relativistic energy split
//! into kinetic and diffusion (rest) parts.
//!
//! The underlying balance: a tracer in energetic equilibrium neither heats
//! nor cools the bath, so the mean-square heatbath speed c² decomposes into
//! the tracer's drift part |Δx̄|²/τ̄² plus the collision-noise part
//! nε/(2α²Mτ̄). Rearranged, c²τ̄² − |Δx̄|² = nετ̄/(2α²M) per collision — a
//! quantity linear in τ̄, hence an invariant of the motion once summed over
//! a horizon. Correlating the forward and backward increments scales the
//! noise part by (1 − ρ_v²), and restoring the balance dilates the clock by
//! 1/√(1 − ρ_v²): the Lorentz structure emerges from collision statistics.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::clock::{
    check_model_budget, increment_correlation, sample_correlated_increments,
    sample_intercollision, stream_rng, IncrementModel,
};
use crate::error::{Error, Result};
use crate::params::HeatbathParams;
use crate::path::map_paths;

/// One frame of the collision clock: the rest-scale mean inter-collision
/// time `tau_bar`, the dilated time `tau_v` and per-collision displacement
/// magnitude `dx_bar` seen at drift velocity `v`, the compound correlation
/// `rho_v` driving the dilation, the reference rest time `tau_0`, and the
/// heatbath RMS speed `c`.
///
/// Frames built by the constructors satisfy the interval identity
/// c²τ_v² − |Δx̄_v|² = c²τ̄² to roundoff; the fields are public so that
/// deliberately out-of-equilibrium frames can be assembled when the point is
/// to measure the imbalance (see `minkowski_invariant`).
#[derive(Debug, Clone, PartialEq)]
pub struct MinkowskiFrame {
    pub tau_bar: f64,
    pub dx_bar: f64,
    pub v: DVector<f64>,
    pub rho_v: f64,
    pub tau_v: f64,
    pub tau_0: f64,
    pub c: f64,
}

impl MinkowskiFrame {
    /// Frame of a tracer at rest in the bath: the clock runs at the
    /// reference rate τ̄₀ = nε/(2c²α²M) and nothing is displaced.
    pub fn stationary(params: &HeatbathParams, c: f64) -> Result<Self> {
        let tau_0 = rest_frame_tau(params, c)?;
        Ok(MinkowskiFrame {
            tau_bar: tau_0,
            dx_bar: 0.0,
            v: DVector::zeros(params.n),
            rho_v: 0.0,
            tau_v: tau_0,
            tau_0,
            c,
        })
    }

    /// Frame of a tracer drifting at velocity v: the correlation is the
    /// speed ratio ρ_v = |v|/c, the clock dilates to τ_v = τ̄₀/√(1−ρ_v²),
    /// and the per-collision displacement is |v|·τ_v, which satisfies the
    /// interval identity exactly:
    /// c²τ_v² − |v|²τ_v² = (c²−|v|²)τ̄₀²/(1−|v|²/c²) = c²τ̄₀².
    pub fn from_velocity(params: &HeatbathParams, v: DVector<f64>, c: f64) -> Result<Self> {
        let tau_0 = rest_frame_tau(params, c)?;
        let speed = v.norm();
        if speed >= c {
            return Err(Error::InvalidParam(format!(
                "frame speed must stay below the heatbath speed: |v| = {speed}, c = {c}"
            )));
        }
        let rho_v = speed / c;
        let tau_v = tau_0 / (1.0 - rho_v * rho_v).sqrt();
        Ok(MinkowskiFrame { tau_bar: tau_0, dx_bar: speed * tau_v, v, rho_v, tau_v, tau_0, c })
    }

    /// Frame implied by a forward/backward increment correlation ρ_Δ: the
    /// compound correlation is ρ_v² = (1−2α²)·ρ_Δ and the drift speed it
    /// stands for is |v| = c·ρ_v (along the first axis as representative).
    pub fn from_correlation(params: &HeatbathParams, rho_delta: f64, c: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho_delta) {
            return Err(Error::InvalidParam(format!(
                "increment correlation must lie in [0, 1], got {rho_delta}"
            )));
        }
        let rho_v_sq = (1.0 - 2.0 * params.alpha_sq) * rho_delta;
        let mut v = DVector::zeros(params.n);
        v[0] = c * rho_v_sq.sqrt();
        MinkowskiFrame::from_velocity(params, v, c)
    }

    /// Squared Minkowski interval of this frame, c²τ_v² − |Δx̄_v|².
    pub fn interval_sq(&self) -> f64 {
        self.c * self.c * self.tau_v * self.tau_v - self.dx_bar * self.dx_bar
    }

    /// Relative residual of the interval identity,
    /// (c²τ_v² − |Δx̄_v|² − c²τ̄²)/(c²τ̄²); roundoff-sized for frames built
    /// by the constructors, and the per-frame equilibrium gauge otherwise.
    pub fn residual(&self) -> f64 {
        let rest = self.c * self.c * self.tau_bar * self.tau_bar;
        (self.interval_sq() - rest) / rest
    }
}

/// Sums the squared Minkowski interval over a sequence of frames covering
/// the horizon T and returns it next to the closed-form constant:
///
///   Σ (c²τ_v² − |Δx̄_v|²)  vs  nεT/(2α²M).
///
/// For frames in energetic equilibrium each term equals c²τ̄² =
/// (nε/2α²M)·τ̄, so the sum telescopes to the constant no matter how the
/// horizon is split between resting and drifting stretches. Frames out of
/// equilibrium (clock not matching their drift and c) leave a mismatch equal
/// to the injected energy imbalance, Σ(c² − c̃²)τ̄² with c̃² the speed
/// budget their fields actually satisfy.
pub fn minkowski_invariant(
    frames: &[MinkowskiFrame],
    params: &HeatbathParams,
    t_horizon: f64,
) -> Result<(f64, f64)> {
    if frames.is_empty() {
        return Err(Error::InvalidParam("the invariant needs at least one frame".into()));
    }
    let covered: f64 = frames.iter().map(|f| f.tau_bar).sum();
    if !t_horizon.is_finite() || (covered - t_horizon).abs() > 1e-9 * t_horizon.abs().max(covered)
    {
        return Err(Error::InvalidParam(format!(
            "frames cover {covered:.12} but the horizon is {t_horizon:.12}"
        )));
    }
    let lhs = frames.iter().map(MinkowskiFrame::interval_sq).sum();
    let rhs = params.n as f64 * params.epsilon * t_horizon / (2.0 * params.alpha_sq * params.M);
    Ok((lhs, rhs))
}

/// Reference inter-collision time of a tracer at rest in a heatbath with
/// RMS speed c: with no drift the whole speed budget is collision noise,
/// c² = nε/(2α²Mτ̄₀), hence τ̄₀ = nε/(2c²α²M). Equivalently the rest
/// energy: Mc² = nε/(2α²τ̄₀).
pub fn rest_frame_tau(params: &HeatbathParams, c: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParam(format!("heatbath speed must be positive, got {c}")));
    }
    Ok(params.n as f64 * params.epsilon / (2.0 * c * c * params.alpha_sq * params.M))
}

/// Boost relating the (Δx̄; τ̄) pair of the frame drifting at v′ to the one
/// drifting at v, in the block form
///
///   (1/√(1−|w|²/c²)) · [[I, w], [wᵀ/c², 1]],
///
/// acting on column vectors (Δx̄ ∈ ℝⁿ; τ̄). The effective velocity is the
/// relativistic difference w = (v − v′)/(1 − v·v′/c²), which is what the
/// composition through the rest frame produces: boost(v, v′) =
/// boost(v, 0)·boost(v′, 0)⁻¹ exactly (in one dimension), and for v′ = 0 it
/// reduces to the plain difference. The n-dimensional block with identity
/// spatial part is a rank-one coupling ansatz: it is the exact Lorentz
/// element in one dimension (and for collinear velocities), not the full
/// group element with its transverse mixing.
pub fn lorentz_boost(
    v: &DVector<f64>,
    v_prime: &DVector<f64>,
    c: f64,
) -> Result<DMatrix<f64>> {
    let n = v.len();
    if v_prime.len() != n || n == 0 {
        return Err(Error::InvalidParam(format!(
            "velocities must share a positive dimension, got {n} and {}",
            v_prime.len()
        )));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParam(format!("heatbath speed must be positive, got {c}")));
    }
    let c_sq = c * c;
    for (name, u) in [("v", v), ("v_prime", v_prime)] {
        if u.norm() >= c {
            return Err(Error::InvalidParam(format!(
                "{name} must stay below the heatbath speed: |{name}| = {}, c = {c}",
                u.norm()
            )));
        }
    }
    if (v - v_prime).norm() >= c {
        return Err(Error::InvalidParam(format!(
            "relative speed must stay below the heatbath speed: |v - v'| = {}, c = {c}",
            (v - v_prime).norm()
        )));
    }

    let w = (v - v_prime) / (1.0 - v.dot(v_prime) / c_sq);
    let gamma = 1.0 / (1.0 - w.norm_squared() / c_sq).sqrt();
    let mut boost = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        boost[(i, i)] = gamma;
        boost[(i, n)] = gamma * w[i];
        boost[(n, i)] = gamma * w[i] / c_sq;
    }
    boost[(n, n)] = gamma;
    Ok(boost)
}

/// Clock dilation from the compound correlation: τ_v/τ̄ = 1/√(1−ρ_v²),
/// returned with the drift speed it implies, |v|/c = |ρ_v|.
pub fn time_dilation(rho_v: f64) -> Result<(f64, f64)> {
    if !(rho_v.abs() < 1.0) {
        return Err(Error::InvalidParam(format!(
            "compound correlation must lie in (-1, 1), got {rho_v}"
        )));
    }
    Ok((1.0 / (1.0 - rho_v * rho_v).sqrt(), rho_v.abs()))
}

/// Relativistic energy of the tracer at drift speed v:
/// (E_r, M_r, rest) = (Mc²/√(1−v²/c²), M/√(1−v²/c²), Mc²). The rest energy
/// is the diffusion floor in disguise, Mc² = nε/(2α²τ̄₀), and the excess
/// E_r − Mc² is the kinetic expectation amplified by the same dilation
/// factor.
pub fn relativistic_energy(
    params: &HeatbathParams,
    v: f64,
    c: f64,
) -> Result<(f64, f64, f64)> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParam(format!("heatbath speed must be positive, got {c}")));
    }
    if !(v >= 0.0 && v < c) {
        return Err(Error::InvalidParam(format!(
            "drift speed must satisfy 0 <= v < c, got v = {v}, c = {c}"
        )));
    }
    let gamma_factor = 1.0 / (1.0 - v * v / (c * c)).sqrt();
    let rest = params.M * c * c;
    Ok((rest * gamma_factor, params.M * gamma_factor, rest))
}

/// Outcome of the end-to-end dilation experiment: an increment model with a
/// target forward/backward correlation is sampled through the collision
/// clock, the correlation is measured back from the velocity shocks, and the
/// implied dilated clock is checked against both the closed-form ratio and
/// the Minkowski interval constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DilationReport {
    /// Closed-form correlation of the sampled model.
    pub rho_target: f64,
    /// Correlation measured from the sampled shocks.
    pub rho_hat: f64,
    /// Compound correlation (1−2α²)·ρ̂.
    pub rho_v_sq: f64,
    /// Dilated clock τ̄/√(1−ρ̂_v²) from the measured correlation.
    pub tau_v: f64,
    /// τ_v/τ̄₀ with τ̄₀ = τ̄ (the experiment's c is its clock's own
    /// equilibrium speed, so the rest reference is the undilated clock).
    pub dilation: f64,
    /// 1/√(1−(1−2α²)ρ_target): the ratio the measurement should reproduce.
    pub closed_dilation: f64,
    /// Measured speed budget ĉ² (drift plus noise quadratics).
    pub c_sq_hat: f64,
    /// Standard error of ĉ²; sampling gauge for the invariant check.
    pub c_sq_se: f64,
    /// ĉ²·τ_v² − |Δx̄_v|², the measured squared interval per collision.
    pub invariant_lhs: f64,
    /// nετ̄/(2α²M), its closed form.
    pub invariant_rhs: f64,
}

/// Runs the correlated-increment dilation experiment.
///
/// Per draw: clock intervals τ₁, τ₂, a correlated shock pair (w⁺, w⁻) from
/// the model, and equilibrium drift values v̄ ~ N(0, s_v²·I),
/// u ~ N(0, s_u²·I) (the stationary law of an OU-type drift; `drift_rms`
/// supplies (s_v, s_u)). The speed budget is accumulated as
///
///   ĉ² = ½|v̄|² + (1/2γ⁴)|u|² + (1/8)|w⁺+w⁻|² + (1/8γ⁴)|w⁺−w⁻|²,
///
/// whose noise part has closed form nε/(2α²Mτ̄)·(1−ρ_v²) for any shock mix
/// respecting the σ² budget. The dilated clock τ_v = τ̄/√(1−ρ̂_v²) then
/// restores the invariant: ĉ²τ_v² − |Δx̄_v|² ≈ nετ̄/(2α²M), with the drift
/// part cancelling into |Δx̄_v|² = (½E[|v̄|²]+ (1/2γ⁴)E[|u|²])·τ_v² exactly
/// and only the noise sampling error surviving.
pub fn dilation_experiment(
    params: &HeatbathParams,
    model: &IncrementModel,
    drift_rms: (f64, f64),
    n_draws: usize,
    seed: u64,
) -> Result<DilationReport> {
    check_model_budget(model, params.sigma)?;
    if (model.tau_bar - params.tau_bar).abs() > 1e-12 * params.tau_bar {
        return Err(Error::InvalidParam(format!(
            "model clock {} disagrees with the parameter clock {}",
            model.tau_bar, params.tau_bar
        )));
    }
    let (s_v, s_u) = drift_rms;
    if !(s_v >= 0.0 && s_v.is_finite() && s_u >= 0.0 && s_u.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "drift RMS amplitudes must be non-negative and finite, got ({s_v}, {s_u})"
        )));
    }
    if n_draws < 2 {
        return Err(Error::InsufficientSamples(
            "the dilation experiment needs at least two draws",
        ));
    }

    let n_dim = params.n;
    let g4 = params.gamma.powi(4);
    let beta = params.beta;
    let n_chunks = 256.min(n_draws);
    let base = n_draws / n_chunks;
    let rem = n_draws % n_chunks;

    // Per-chunk sums: q_c, q_c², drift part q_x, and the shock moments for
    // the correlation estimate.
    let partials = map_paths(n_chunks, |chunk| {
        let mut rng = stream_rng(seed, chunk);
        let count = base + usize::from((chunk as usize) < rem);
        let mut acc = [0.0f64; 6];
        for _ in 0..count {
            let tau1 = sample_intercollision(beta, &mut rng);
            let tau2 = sample_intercollision(beta, &mut rng);
            let (fwd, bwd) = sample_correlated_increments(model, tau1, tau2, n_dim, &mut rng)
                .expect("positive clock intervals");
            let mut drift_sq = 0.0;
            let mut noise_sq = 0.0;
            for k in 0..n_dim {
                let zv: f64 = StandardNormal.sample(&mut rng);
                let zu: f64 = StandardNormal.sample(&mut rng);
                let v_bar = s_v * zv;
                let u = s_u * zu;
                drift_sq += 0.5 * v_bar * v_bar + 0.5 * u * u / g4;
                let sum = fwd[k] + bwd[k];
                let diff = fwd[k] - bwd[k];
                noise_sq += 0.125 * sum * sum + 0.125 * diff * diff / g4;
                acc[3] += fwd[k] * bwd[k];
                acc[4] += fwd[k] * fwd[k];
                acc[5] += bwd[k] * bwd[k];
            }
            let q = drift_sq + noise_sq;
            acc[0] += q;
            acc[1] += q * q;
            acc[2] += drift_sq;
        }
        acc
    });
    let mut total = [0.0f64; 6];
    for p in &partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    let n = n_draws as f64;
    let c_sq_hat = total[0] / n;
    let var = (total[1] - total[0] * total[0] / n) / (n - 1.0);
    let c_sq_se = (var / n).sqrt();
    let drift_part = total[2] / n;
    let rho_hat = total[3] / (total[4] * total[5]).sqrt();

    let rho_v_sq = (1.0 - 2.0 * params.alpha_sq) * rho_hat;
    if rho_v_sq >= 1.0 {
        return Err(Error::Numerical(format!(
            "measured compound correlation {rho_v_sq} leaves no admissible dilation"
        )));
    }
    let tau_v = params.tau_bar / (1.0 - rho_v_sq).sqrt();
    let dx_v_sq = drift_part * tau_v * tau_v;
    let rho_target = increment_correlation(model);
    let closed_rho_v_sq = (1.0 - 2.0 * params.alpha_sq) * rho_target;
    Ok(DilationReport {
        rho_target,
        rho_hat,
        rho_v_sq,
        tau_v,
        dilation: tau_v / params.tau_bar,
        closed_dilation: 1.0 / (1.0 - closed_rho_v_sq).sqrt(),
        c_sq_hat,
        c_sq_se,
        invariant_lhs: c_sq_hat * tau_v * tau_v - dx_v_sq,
        invariant_rhs: params.n as f64 * params.epsilon * params.tau_bar
            / (2.0 * params.alpha_sq * params.M),
    })
}
