use crate::error::{Error, Result};

/// Every scalar constant of the collision model, derived once from the four
/// primitive inputs (M, m, σ, τ̄) plus the spatial dimension n.
///
/// The mass ratio enters through γ = √(m/M): with that convention the total
/// mass satisfies both M_T = M + m and M_T = M(1 + γ²), and the 1D elastic
/// formulas v₂ = ((M−m)v₁ + 2m·w₁)/(M+m) reproduce the collision kernel.
/// All fields are stored in dimensionless internal units.
#[derive(Debug, Clone, Copy, PartialEq)]
#[allow(non_snake_case)]
pub struct HeatbathParams {
    /// Main-particle mass.
    pub M: f64,
    /// Heatbath-particle mass, m = M·γ².
    pub m: f64,
    /// Spatial dimension (1, 2, or 3).
    pub n: usize,
    /// Diffusion amplitude σ.
    pub sigma: f64,
    /// Mean inter-collision time τ̄.
    pub tau_bar: f64,
    /// Mass-ratio parameter γ = √(m/M).
    pub gamma: f64,
    /// Collision angle θ with cos θ = (1−γ²)/(1+γ²).
    pub theta: f64,
    /// α² = γ⁴/(1+γ⁴).
    pub alpha_sq: f64,
    /// ε = M·σ².
    pub epsilon: f64,
    /// Collision rate parameter β = 2/τ̄.
    pub beta: f64,
    /// Total mass M_T = M + m = M(1+γ²).
    pub M_T: f64,
    /// Wave scale χ = M_T·σ²/γ = 2ε/sin θ.
    pub chi: f64,
    /// η = σ²/γ.
    pub eta: f64,
    /// Heatbath speed scale ω² = σ²/(2α²).
    pub omega_sq: f64,
}

/// Derives the full constant set from the primitive inputs.
///
/// Fails with a message naming the offending field when an input is
/// non-positive, non-finite, or the dimension is outside {1, 2, 3}.
#[allow(non_snake_case)]
pub fn derive_params(M: f64, m: f64, sigma: f64, tau_bar: f64, n: usize) -> Result<HeatbathParams> {
    check_positive("M", M)?;
    check_positive("m", m)?;
    check_positive("sigma", sigma)?;
    check_positive("tau_bar", tau_bar)?;
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidParam(format!("n must be 1, 2, or 3, got {n}")));
    }

    let gamma = (m / M).sqrt();
    let g2 = gamma * gamma;
    let g4 = g2 * g2;
    // cos θ and sin θ are exact rational functions of γ²; acos would lose a
    // few ulps near γ=0, so θ is reconstructed via atan2 of the exact pair.
    let cos_theta = (1.0 - g2) / (1.0 + g2);
    let sin_theta = 2.0 * gamma / (1.0 + g2);
    let theta = sin_theta.atan2(cos_theta);
    let alpha_sq = g4 / (1.0 + g4);
    let sigma_sq = sigma * sigma;

    Ok(HeatbathParams {
        M,
        m,
        n,
        sigma,
        tau_bar,
        gamma,
        theta,
        alpha_sq,
        epsilon: M * sigma_sq,
        beta: 2.0 / tau_bar,
        M_T: M + m,
        chi: (M + m) * sigma_sq / gamma,
        eta: sigma_sq / gamma,
        omega_sq: sigma_sq / (2.0 * alpha_sq),
    })
}

impl HeatbathParams {
    #[inline]
    pub fn cos_theta(&self) -> f64 {
        (1.0 - self.gamma * self.gamma) / (1.0 + self.gamma * self.gamma)
    }

    #[inline]
    pub fn sin_theta(&self) -> f64 {
        2.0 * self.gamma / (1.0 + self.gamma * self.gamma)
    }

    /// Per-particle diffusion energy floor ε/τ̄.
    #[inline]
    pub fn diffusion_const_main(&self) -> f64 {
        self.epsilon / self.tau_bar
    }

    /// Total diffusion energy floor 2nε/(sin²θ·τ̄), the constant part of the
    /// expected kinetic energy shared between main particle and heatbath.
    #[inline]
    pub fn diffusion_const_total(&self) -> f64 {
        let s = self.sin_theta();
        2.0 * self.n as f64 * self.epsilon / (s * s * self.tau_bar)
    }

    /// Heatbath diffusion floor m·ω²/τ̄ = γ²ε/(2α²τ̄).
    #[inline]
    pub fn diffusion_const_heatbath(&self) -> f64 {
        self.m * self.omega_sq / self.tau_bar
    }
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "{name} must be positive and finite, got {value}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_masses_give_velocity_exchange_angles() -> Result<()> {
        let p = derive_params(1.0, 1.0, 0.7, 1.0, 1)?;
        assert_eq!(p.gamma, 1.0);
        assert!(p.cos_theta().abs() < 1e-15);
        assert!((p.sin_theta() - 1.0).abs() < 1e-15);
        assert!((p.alpha_sq - 0.5).abs() < 1e-15);
        assert!((p.omega_sq - 0.49).abs() < 1e-15);
        Ok(())
    }

    #[test]
    fn quarter_mass_ratio() -> Result<()> {
        let p = derive_params(1.0, 0.25, 1.0, 1.0, 1)?;
        assert!((p.gamma - 0.5).abs() < 1e-15);
        assert!((p.cos_theta() - 0.6).abs() < 1e-15);
        assert!((p.sin_theta() - 0.8).abs() < 1e-15);
        assert!((p.alpha_sq - 1.0 / 17.0).abs() < 1e-15);
        assert!((p.M_T - 1.25).abs() < 1e-15);
        assert!((p.chi - 2.5).abs() < 1e-14);
        assert!((p.eta - 2.0).abs() < 1e-15);
        assert!((p.omega_sq - 8.5).abs() < 1e-13);
        Ok(())
    }

    #[test]
    fn beta_tau_product_is_two() -> Result<()> {
        let p = derive_params(1.0, 0.5, 1.0, 1.0, 1)?;
        assert_eq!(p.beta * p.tau_bar, 2.0);
        let q = derive_params(1.0, 0.5, 1.0, 0.37, 2)?;
        assert!((q.beta * q.tau_bar - 2.0).abs() < 1e-15);
        Ok(())
    }

    #[test]
    fn derived_identities_hold_across_mass_ratios() -> Result<()> {
        for &(mm, m) in &[(1.0, 1.0), (1.0, 0.25), (2.0, 0.5), (1.0, 0.04), (0.3, 0.27)] {
            let p = derive_params(mm, m, 1.3, 0.7, 3)?;
            let (c, s, g) = (p.cos_theta(), p.sin_theta(), p.gamma);
            // Pythagorean closure of the exact rational angle pair.
            assert!((c * c + s * s - 1.0).abs() < 1e-14);
            // Both total-mass expressions agree.
            assert!((p.M_T - p.M * (1.0 + g * g)).abs() < 1e-12 * p.M_T);
            // χ = (γ + 1/γ)ε = 2ε/sinθ.
            assert!((p.chi - (g + 1.0 / g) * p.epsilon).abs() < 1e-12 * p.chi);
            assert!((p.chi - 2.0 * p.epsilon / s).abs() < 1e-12 * p.chi);
            // α² = γ²sin²θ / (2(1+cos²θ)) and 1−2α² = 2cosθ/(1+cos²θ).
            assert!((p.alpha_sq - g * g * s * s / (2.0 * (1.0 + c * c))).abs() < 1e-14);
            assert!((1.0 - 2.0 * p.alpha_sq - 2.0 * c / (1.0 + c * c)).abs() < 1e-14);
            // ε + mω² = 2ε/sin²θ splits the diffusion floor between particles.
            assert!(
                (p.epsilon + p.m * p.omega_sq - 2.0 * p.epsilon / (s * s)).abs()
                    < 1e-12 * p.epsilon / (s * s)
            );
        }
        Ok(())
    }

    #[test]
    fn small_gamma_limits_are_monotone() -> Result<()> {
        let mut prev_cos = -1.0;
        let mut prev_alpha = 1.0;
        let mut prev_omega = 0.0;
        for &m in &[0.64, 0.16, 0.04, 0.01, 0.0025] {
            let p = derive_params(1.0, m, 1.0, 1.0, 1)?;
            assert!(p.cos_theta() > prev_cos);
            assert!(p.alpha_sq < prev_alpha);
            assert!(p.omega_sq > prev_omega);
            prev_cos = p.cos_theta();
            prev_alpha = p.alpha_sq;
            prev_omega = p.omega_sq;
        }
        assert!(prev_cos > 0.99);
        assert!(prev_alpha < 1e-4);
        Ok(())
    }

    #[test]
    fn rejects_nonpositive_inputs_naming_the_field() {
        let err = derive_params(-1.0, 1.0, 1.0, 1.0, 1).unwrap_err();
        assert!(matches!(&err, Error::InvalidParam(msg) if msg.contains('M')));
        let err = derive_params(1.0, 0.0, 1.0, 1.0, 1).unwrap_err();
        assert!(matches!(&err, Error::InvalidParam(msg) if msg.contains('m')));
        let err = derive_params(1.0, 1.0, f64::NAN, 1.0, 1).unwrap_err();
        assert!(matches!(&err, Error::InvalidParam(msg) if msg.contains("sigma")));
        let err = derive_params(1.0, 1.0, 1.0, -2.0, 1).unwrap_err();
        assert!(matches!(&err, Error::InvalidParam(msg) if msg.contains("tau_bar")));
        let err = derive_params(1.0, 1.0, 1.0, 1.0, 4).unwrap_err();
        assert!(matches!(&err, Error::InvalidParam(msg) if msg.contains('n')));
    }

    #[test]
    fn rederivation_is_idempotent() -> Result<()> {
        let p = derive_params(1.7, 0.4, 0.9, 0.3, 2)?;
        let q = derive_params(p.M, p.m, p.sigma, p.tau_bar, p.n)?;
        assert_eq!(p, q);
        Ok(())
    }
}
