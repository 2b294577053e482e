use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::params::HeatbathParams;

type C64 = Complex<f64>;

/// Relative density floor below which drift and residual extraction is
/// masked: log-derivatives in the deep tails amplify rounding noise without
/// carrying physical content.
pub const RHO_FLOOR_REL: f64 = 1e-12;

/// Uniform 1D spatial grid; node i sits at x_min + i·dx.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1d {
    pub x_min: f64,
    pub dx: f64,
    pub n_nodes: usize,
}

impl Grid1d {
    pub fn from_bounds(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) || !(x_max > x_min) {
            return Err(Error::InvalidParam(format!(
                "grid needs x_max > x_min and dx > 0, got [{x_min}, {x_max}] dx {dx}"
            )));
        }
        let n_nodes = ((x_max - x_min) / dx).round() as usize + 1;
        if n_nodes < 8 {
            return Err(Error::InvalidParam("grid too small; need at least 8 nodes".into()));
        }
        Ok(Grid1d { x_min, dx, n_nodes })
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes).map(|i| self.x(i))
    }

    /// Trapezoid quadrature of nodal values.
    pub fn integrate(&self, values: impl Iterator<Item = f64>) -> f64 {
        let mut sum = 0.0;
        let mut first = None;
        let mut last = 0.0;
        for (i, v) in values.enumerate() {
            if i == 0 {
                first = Some(v);
            }
            sum += v;
            last = v;
        }
        (sum - 0.5 * (first.unwrap_or(0.0) + last)) * self.dx
    }
}

/// A wave function snapshot with its potential and the scale constants that
/// tie it to the collision model: ψ = e^{(δR + iξS)/η} with ξ = 1/M_T,
/// δ = 1/(σ_ν M_T), so R = σ_ν·χ·ln|ψ| and S = χ·arg ψ.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub grid: Grid1d,
    pub psi: Vec<C64>,
    pub phi: Vec<f64>,
    /// Prescribed static vector potential (zero unless a magnetic check
    /// supplies one).
    pub a_field: Vec<f64>,
    pub chi: f64,
    pub xi: f64,
    pub delta: f64,
    pub sigma_nu: f64,
}

impl WaveField {
    /// Plain (σ_ν = 1) field; ψ is trapezoid-normalized on construction.
    pub fn new(grid: Grid1d, psi: Vec<C64>, phi: Vec<f64>, params: &HeatbathParams) -> Result<Self> {
        Self::with_scattering_scale(grid, psi, phi, params, 1.0)
    }

    /// Field carrying a scattering scale σ_ν ≥ 1, which rescales the
    /// effective quantum of action to σ_ν·χ and the R-weight to δ = 1/(σ_ν M_T).
    pub fn with_scattering_scale(
        grid: Grid1d,
        psi: Vec<C64>,
        phi: Vec<f64>,
        params: &HeatbathParams,
        sigma_nu: f64,
    ) -> Result<Self> {
        if psi.len() != grid.n_nodes || phi.len() != grid.n_nodes {
            return Err(Error::InvalidParam(format!(
                "field arrays must match the grid: {} nodes vs psi {} / phi {}",
                grid.n_nodes,
                psi.len(),
                phi.len()
            )));
        }
        if !(sigma_nu >= 1.0 && sigma_nu.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "sigma_nu must be a finite value >= 1, got {sigma_nu}"
            )));
        }
        let mut field = WaveField {
            a_field: vec![0.0; grid.n_nodes],
            grid,
            psi,
            phi,
            chi: params.chi,
            xi: 1.0 / params.M_T,
            delta: 1.0 / (sigma_nu * params.M_T),
            sigma_nu,
        };
        let norm = field.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Numerical(format!("cannot normalize field with ∫|ψ|² = {norm}")));
        }
        let scale = 1.0 / norm.sqrt();
        for a in &mut field.psi {
            *a *= scale;
        }
        Ok(field)
    }

    /// Effective quantum of action σ_ν·χ driving the evolution.
    #[inline]
    pub fn h_eff(&self) -> f64 {
        self.sigma_nu * self.chi
    }

    pub fn rho(&self) -> Vec<f64> {
        self.psi.iter().map(|a| a.norm_sqr()).collect()
    }

    /// ∫|ψ|² dx by trapezoid rule.
    pub fn norm(&self) -> f64 {
        self.grid.integrate(self.psi.iter().map(|a| a.norm_sqr()))
    }

    pub fn mean_position(&self) -> f64 {
        self.grid
            .integrate(self.psi.iter().enumerate().map(|(i, a)| self.grid.x(i) * a.norm_sqr()))
    }

    pub fn position_variance(&self) -> f64 {
        let mean = self.mean_position();
        self.grid.integrate(
            self.psi
                .iter()
                .enumerate()
                .map(|(i, a)| (self.grid.x(i) - mean).powi(2) * a.norm_sqr()),
        )
    }

    /// Checks the normalization invariant and the ρ = e^{2R/(σ_ν·χ)}
    /// consistency (with R read back from ψ) above the density floor.
    pub fn validate(&self) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Numerical(format!("∫|ψ|² = {norm}, off unity beyond 1e-10")));
        }
        let rho = self.rho();
        let floor = RHO_FLOOR_REL * rho.iter().cloned().fold(0.0, f64::max);
        for (i, &r) in rho.iter().enumerate() {
            if r <= floor {
                continue;
            }
            let big_r = self.sigma_nu * self.chi * self.psi[i].norm().ln();
            let rebuilt = (2.0 * big_r / (self.sigma_nu * self.chi)).exp();
            if (rebuilt - r).abs() > 1e-12 * r.max(1.0) {
                return Err(Error::Numerical(format!(
                    "density/exponent mismatch at node {i}: {rebuilt} vs {r}"
                )));
            }
        }
        Ok(())
    }

    /// Discrete energy functional conserved by the evolution step:
    /// kinetic = (h_eff²/2M_T)·Σ|ψ_{i+1}−ψ_i|²/dx, potential = Σφ|ψ|²dx.
    /// The mass is recovered from the stored weight ξ = 1/M_T.
    pub fn energy_functional(&self) -> (f64, f64) {
        let dx = self.grid.dx;
        let m_t = 1.0 / self.xi;
        let h = self.h_eff();
        let mut kinetic = 0.0;
        for w in self.psi.windows(2) {
            kinetic += (w[1] - w[0]).norm_sqr();
        }
        kinetic *= h * h / (2.0 * m_t * dx);
        let potential = dx
            * self
                .psi
                .iter()
                .zip(&self.phi)
                .map(|(a, p)| p * a.norm_sqr())
                .sum::<f64>();
        (kinetic, potential)
    }
}

/// Gaussian packet: superposition of momentum states centered at p₀ with
/// dispersion σ_e, spreading as Z_Γ(t) = 1/σ_e⁴ + α_w²t², α_w = 1/(χM_T).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavePacketSpec {
    pub p0: f64,
    pub sigma_e: f64,
    pub m_t: f64,
    pub chi: f64,
}

impl WavePacketSpec {
    pub fn new(p0: f64, sigma_e: f64, params: &HeatbathParams) -> Result<Self> {
        if !(sigma_e > 0.0 && sigma_e.is_finite()) {
            return Err(Error::InvalidParam(format!("sigma_e must be positive, got {sigma_e}")));
        }
        Ok(WavePacketSpec { p0, sigma_e, m_t: params.M_T, chi: params.chi })
    }

    #[inline]
    pub fn alpha_w(&self) -> f64 {
        1.0 / (self.chi * self.m_t)
    }

    #[inline]
    pub fn z_gamma(&self, t: f64) -> f64 {
        let se2 = self.sigma_e * self.sigma_e;
        1.0 / (se2 * se2) + (self.alpha_w() * t).powi(2)
    }

    /// Center of the density, p₀t/M_T.
    #[inline]
    pub fn mean(&self, t: f64) -> f64 {
        self.p0 * t / self.m_t
    }

    /// Density variance χ²σ_e²Z_Γ(t)/2; at t=0 this is χ²/(2σ_e²).
    #[inline]
    pub fn variance(&self, t: f64) -> f64 {
        0.5 * self.chi * self.chi * self.sigma_e * self.sigma_e * self.z_gamma(t)
    }
}

/// Closed-form packet point values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketPoint {
    pub r: f64,
    pub s: f64,
    pub dr: f64,
    pub ds: f64,
    pub rho: f64,
}

/// Exponent fields of the Gaussian packet at one space-time point:
/// R = (χ/2)·ln ρ (so e^{2R/χ} is the normalized density exactly),
/// S = χ·arg ψ, with their spatial gradients.
pub fn gaussian_packet(spec: &WavePacketSpec, x: f64, t: f64) -> Result<PacketPoint> {
    if t < 0.0 {
        return Err(Error::InvalidParam(format!("packet time must be >= 0, got {t}")));
    }
    let se2 = spec.sigma_e * spec.sigma_e;
    let z = spec.z_gamma(t);
    let aw = spec.alpha_w();
    let mu = (x - spec.mean(t)) / spec.chi;
    let var = spec.variance(t);

    let rho = (-(x - spec.mean(t)).powi(2) / (2.0 * var)).exp()
        / (2.0 * std::f64::consts::PI * var).sqrt();
    let r = 0.5 * spec.chi * rho.ln();
    let dr = -mu / (se2 * z);
    let ds = aw * t * mu / z + spec.p0;
    let s = 0.5 * spec.chi * mu * mu * aw * t / z + spec.p0 * x
        - spec.p0 * spec.p0 * t / (2.0 * spec.m_t)
        - 0.5 * spec.chi * (aw * t * se2).atan();
    Ok(PacketPoint { r, s, dr, ds, rho })
}

/// Exact packet wave function sampled on a grid (the reference solution the
/// evolution solver is tested against). φ must be zero for the closed form
/// to apply; the returned field is trapezoid-normalized.
pub fn packet_field(
    spec: &WavePacketSpec,
    grid: Grid1d,
    t: f64,
    params: &HeatbathParams,
) -> Result<WaveField> {
    if t < 0.0 {
        return Err(Error::InvalidParam(format!("packet time must be >= 0, got {t}")));
    }
    let se2 = spec.sigma_e * spec.sigma_e;
    let g = C64::new(1.0 / se2, spec.alpha_w() * t);
    let sqrt_g = g.sqrt();
    let psi: Vec<C64> = grid
        .nodes()
        .map(|x| {
            let mu = (x - spec.mean(t)) / spec.chi;
            let phase = (spec.p0 * x - spec.p0 * spec.p0 * t / (2.0 * spec.m_t)) / spec.chi;
            ((C64::new(-mu * mu / 2.0, 0.0) / g) + C64::new(0.0, phase)).exp() / sqrt_g
        })
        .collect();
    WaveField::new(grid, psi, vec![0.0; grid.n_nodes], params)
}

/// Drift fields extracted from a wave function, with the mask marking nodes
/// where extraction was possible (interior, density above floor).
#[derive(Debug, Clone, PartialEq)]
pub struct DriftFields {
    pub b_plus: Vec<f64>,
    pub b_minus: Vec<f64>,
    pub g_plus: Vec<f64>,
    pub g_minus: Vec<f64>,
    pub mask: Vec<bool>,
    pub n_masked: usize,
}

/// Main and heatbath drifts from ψ:
///   b± = (∇S ± γ∇R)/M_T,  g± = (∇S ∓ ∇R/γ)/M_T,
/// with ∇S = χ·arg(ψ_{j+1}/ψ_{j−1})/(2dx) (the ratio keeps the phase
/// difference in (−π, π], so no unwrapping pass is needed) and
/// ∇R = σ_ν·χ·Δln|ψ|/(2dx). Nodes below the density floor and the two
/// boundary nodes are masked.
pub fn drifts_from_wave(field: &WaveField, params: &HeatbathParams) -> DriftFields {
    let n = field.grid.n_nodes;
    let dx = field.grid.dx;
    let rho = field.rho();
    let floor = RHO_FLOOR_REL * rho.iter().cloned().fold(0.0, f64::max);
    let gamma = params.gamma;
    let m_t = params.M_T;

    let mut out = DriftFields {
        b_plus: vec![f64::NAN; n],
        b_minus: vec![f64::NAN; n],
        g_plus: vec![f64::NAN; n],
        g_minus: vec![f64::NAN; n],
        mask: vec![false; n],
        n_masked: 0,
    };
    for j in 0..n {
        if j == 0 || j + 1 == n || rho[j] <= floor || rho[j - 1] <= floor || rho[j + 1] <= floor {
            out.n_masked += 1;
            continue;
        }
        let ds = field.chi * (field.psi[j + 1] / field.psi[j - 1]).arg() / (2.0 * dx);
        let dr = field.sigma_nu * field.chi
            * (field.psi[j + 1].norm().ln() - field.psi[j - 1].norm().ln())
            / (2.0 * dx);
        out.b_plus[j] = (ds + gamma * dr) / m_t;
        out.b_minus[j] = (ds - gamma * dr) / m_t;
        out.g_plus[j] = (ds - dr / gamma) / m_t;
        out.g_minus[j] = (ds + dr / gamma) / m_t;
        out.mask[j] = true;
    }
    out
}

/// One Crank–Nicolson evolution: i·h_eff·ψ_t = −(h_eff²/2M_T)Δψ + φψ with
/// zero-Dirichlet walls. The Cayley form is unconditionally norm-stable, so
/// the documented envelope is accuracy, not stability: phase error per step
/// is O((dt·ω)³) in each occupied mode. Norm drift beyond 1e−10 per unit
/// time, or walls carrying visible density, abort with diagnostics.
pub fn evolve_schrodinger(field: &WaveField, dt: f64, steps: usize) -> Result<WaveField> {
    if !(dt > 0.0 && dt.is_finite()) || steps == 0 {
        return Err(Error::InvalidParam(format!(
            "evolution needs dt > 0 and steps >= 1, got dt {dt}, steps {steps}"
        )));
    }
    let n = field.grid.n_nodes;
    let dx = field.grid.dx;
    let h = field.h_eff();
    let m_t = 1.0 / field.xi;

    let rho0 = field.rho();
    let rho_max = rho0.iter().cloned().fold(0.0, f64::max);
    if rho0[0] > 1e-10 * rho_max || rho0[n - 1] > 1e-10 * rho_max {
        return Err(Error::InvalidParam(
            "density already touches the reflecting walls; widen the domain".into(),
        ));
    }

    let r = C64::new(0.0, h * dt / (4.0 * m_t * dx * dx));
    let two_r = r + r;
    // Interior system of n−2 unknowns; the lhs matrix is constant in time,
    // so its forward-elimination factors are computed once.
    let m_int = n - 2;
    let mut diag = Vec::with_capacity(m_int);
    for j in 1..n - 1 {
        let dphi = C64::new(0.0, dt * field.phi[j] / (2.0 * h));
        diag.push(C64::new(1.0, 0.0) + two_r + dphi);
    }
    let a = -r; // constant off-diagonal
    let mut upper = vec![C64::new(0.0, 0.0); m_int];
    let mut inv_pivot = vec![C64::new(0.0, 0.0); m_int];
    inv_pivot[0] = C64::new(1.0, 0.0) / diag[0];
    upper[0] = a * inv_pivot[0];
    for i in 1..m_int {
        let piv = diag[i] - a * upper[i - 1];
        inv_pivot[i] = C64::new(1.0, 0.0) / piv;
        upper[i] = a * inv_pivot[i];
    }

    let mut psi = field.psi.clone();
    let mut rhs = vec![C64::new(0.0, 0.0); m_int];
    let mut sol = vec![C64::new(0.0, 0.0); m_int];
    for _ in 0..steps {
        for j in 1..n - 1 {
            let dphi = C64::new(0.0, dt * field.phi[j] / (2.0 * h));
            rhs[j - 1] =
                (C64::new(1.0, 0.0) - two_r - dphi) * psi[j] + r * (psi[j - 1] + psi[j + 1]);
        }
        // Thomas sweep with the precomputed factors.
        sol[0] = rhs[0] * inv_pivot[0];
        for i in 1..m_int {
            sol[i] = (rhs[i] - a * sol[i - 1]) * inv_pivot[i];
        }
        for i in (0..m_int - 1).rev() {
            let next = sol[i + 1];
            sol[i] -= upper[i] * next;
        }
        psi[0] = C64::new(0.0, 0.0);
        psi[n - 1] = C64::new(0.0, 0.0);
        psi[1..n - 1].copy_from_slice(&sol);
    }

    let out = WaveField { psi, ..field.clone() };
    let elapsed = dt * steps as f64;
    let norm = out.norm();
    let budget = 1e-10 * elapsed.max(1.0);
    if (norm - 1.0).abs() > budget {
        return Err(Error::Numerical(format!(
            "norm drifted to {norm} after {elapsed} time units (budget {budget:.3e}); \
             dt {dt}, dx {dx}, {steps} steps"
        )));
    }
    let rho_end = out.rho();
    let rho_end_max = rho_end.iter().cloned().fold(0.0, f64::max);
    if rho_end[0] > 1e-9 * rho_end_max || rho_end[n - 1] > 1e-9 * rho_end_max {
        return Err(Error::Numerical(
            "density reached the reflecting walls during evolution; widen the domain".into(),
        ));
    }
    Ok(out)
}

/// Evolution with a two-step-style scattering background of amplitude ν:
/// the variance inflation σ_ν² = 1 + (1+γ²)ν² rescales the effective
/// quantum of action to σ_ν·χ and the R-weight to δ = 1/(σ_ν·M_T). ν = 0
/// reproduces `evolve_schrodinger` exactly (same code path, σ_ν = 1).
pub fn evolve_scaled(
    field: &WaveField,
    nu: f64,
    dt: f64,
    steps: usize,
    params: &HeatbathParams,
) -> Result<WaveField> {
    if !nu.is_finite() {
        return Err(Error::InvalidParam(format!("scattering amplitude must be finite, got {nu}")));
    }
    let sigma_nu = (1.0 + (1.0 + params.gamma * params.gamma) * nu * nu).sqrt();
    let scaled = WaveField {
        sigma_nu,
        delta: 1.0 / (sigma_nu * params.M_T),
        ..field.clone()
    };
    evolve_schrodinger(&scaled, dt, steps)
}

/// Pointwise Hamilton–Jacobi residual from three equally spaced snapshots:
///   ξ(S_t − A_t) + (σ_ν ξ²/2)|∇S − A|² − (σ_ν δ²/2)|∇R|²
///     − (σ_ν η δ/2)ΔR + φ/(σ_ν M_T)
/// with S_t from the outer snapshots and spatial derivatives from the middle
/// one. Vanishes where ψ solves the evolution equation; masked below the
/// density floor and where the phase difference between the outer snapshots
/// is too large to read unambiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualField {
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
    pub n_masked: usize,
}

pub fn hjb_residual(
    prev: &WaveField,
    mid: &WaveField,
    next: &WaveField,
    dt: f64,
    params: &HeatbathParams,
) -> Result<ResidualField> {
    if prev.grid != mid.grid || next.grid != mid.grid {
        return Err(Error::InvalidParam("snapshots must share one grid".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParam(format!("snapshot spacing must be positive, got {dt}")));
    }
    let n = mid.grid.n_nodes;
    let dx = mid.grid.dx;
    let sigma_nu = mid.sigma_nu;
    let xi = mid.xi;
    let delta = mid.delta;
    let eta = params.eta;
    let m_t = params.M_T;
    let chi = mid.chi;

    let rho = mid.rho();
    let floor = RHO_FLOOR_REL * rho.iter().cloned().fold(0.0, f64::max);

    let mut out = ResidualField { values: vec![f64::NAN; n], mask: vec![false; n], n_masked: 0 };
    for j in 0..n {
        if j == 0 || j + 1 == n || rho[j] <= floor || rho[j - 1] <= floor || rho[j + 1] <= floor {
            out.n_masked += 1;
            continue;
        }
        // Exponent fields in the ψ = e^{(δR+iξS)/η} normalization:
        // S = (η/ξ)·arg ψ = χ·arg ψ, R = (η/δ)·ln|ψ| = σ_ν·χ·ln|ψ|.
        let s_t = chi * (next.psi[j] / prev.psi[j]).arg() / (2.0 * dt);
        let ds = chi * (mid.psi[j + 1] / mid.psi[j - 1]).arg() / (2.0 * dx);
        let ln_m = mid.psi[j - 1].norm().ln();
        let ln_0 = mid.psi[j].norm().ln();
        let ln_p = mid.psi[j + 1].norm().ln();
        let dr = sigma_nu * chi * (ln_p - ln_m) / (2.0 * dx);
        let lap_r = sigma_nu * chi * (ln_p - 2.0 * ln_0 + ln_m) / (dx * dx);
        let a = mid.a_field[j];

        out.values[j] = xi * s_t
            + 0.5 * sigma_nu * xi * xi * (ds - a) * (ds - a)
            - 0.5 * sigma_nu * delta * delta * dr * dr
            - 0.5 * sigma_nu * eta * delta * lap_r
            + mid.phi[j] / (sigma_nu * m_t);
        out.mask[j] = true;
    }
    Ok(out)
}

/// Second law of packet motion: central-difference acceleration of ⟨x⟩
/// against the quadrature force −∫ρ·∇φ dx / M_T, one pair per interior
/// snapshot. Snapshots must be equally spaced by `dt_snap`.
pub fn ehrenfest_check(fields: &[WaveField], dt_snap: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if fields.len() < 3 {
        return Err(Error::InvalidParam(format!(
            "need at least 3 snapshots for a second difference, got {}",
            fields.len()
        )));
    }
    if !(dt_snap > 0.0 && dt_snap.is_finite()) {
        return Err(Error::InvalidParam(format!("snapshot spacing must be positive, got {dt_snap}")));
    }
    let grid = fields[0].grid;
    if fields.iter().any(|f| f.grid != grid) {
        return Err(Error::InvalidParam("snapshots must share one grid".into()));
    }
    let means: Vec<f64> = fields.iter().map(|f| f.mean_position()).collect();
    let mut lhs = Vec::with_capacity(fields.len() - 2);
    let mut rhs = Vec::with_capacity(fields.len() - 2);
    for k in 1..fields.len() - 1 {
        lhs.push((means[k + 1] - 2.0 * means[k] + means[k - 1]) / (dt_snap * dt_snap));
        let f = &fields[k];
        let m_t = 1.0 / f.xi;
        let rho = f.rho();
        let n = grid.n_nodes;
        // ∇φ by central differences, one-sided at the walls.
        let force = grid.integrate((0..n).map(|j| {
            let dphi = if j == 0 {
                (f.phi[1] - f.phi[0]) / grid.dx
            } else if j + 1 == n {
                (f.phi[n - 1] - f.phi[n - 2]) / grid.dx
            } else {
                (f.phi[j + 1] - f.phi[j - 1]) / (2.0 * grid.dx)
            };
            -rho[j] * dphi
        }));
        rhs.push(force / m_t);
    }
    Ok((lhs, rhs))
}

/// Potential catalog for configuration-driven runs.
pub fn potential_on_grid(grid: &Grid1d, kind: &PotentialKind) -> Vec<f64> {
    match kind {
        PotentialKind::Zero => vec![0.0; grid.n_nodes],
        PotentialKind::Linear { slope } => grid.nodes().map(|x| slope * x).collect(),
        PotentialKind::Harmonic { k } => grid.nodes().map(|x| 0.5 * k * x * x).collect(),
        PotentialKind::Tabulated { values } => values.clone(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    Zero,
    Linear { slope: f64 },
    Harmonic { k: f64 },
    Tabulated { values: Vec<f64> },
}

/// Harmonic-oscillator helper: coherent state of φ = ½kx² displaced to x0,
/// which keeps a Gaussian profile and oscillates as x0·cos(ω t).
pub fn coherent_state(
    grid: Grid1d,
    k: f64,
    x0: f64,
    params: &HeatbathParams,
) -> Result<(WaveField, f64)> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidParam(format!("harmonic stiffness must be positive, got {k}")));
    }
    let omega = (k / params.M_T).sqrt();
    let h = params.chi;
    let width_sq = h / (params.M_T * omega);
    let psi: Vec<C64> = grid
        .nodes()
        .map(|x| C64::new((-(x - x0) * (x - x0) / (2.0 * width_sq)).exp(), 0.0))
        .collect();
    let phi = potential_on_grid(&grid, &PotentialKind::Harmonic { k });
    Ok((WaveField::new(grid, psi, phi, params)?, omega))
}
