//! Scalar model functions, the parameter table and the analytic front profile.
//!
//! Temperatures: the phase-field functions take absolute temperature in °K and
//! compare against `theta_star` (273 °K by default). The Stefan module works in
//! °C offsets `ΔΘ = Θ − θ*`, i.e. `θ* = 0 °C`. Salt is measured in % weight so
//! that `β = 1.85` gives a freezing point depression of 0.54 °C per 1 % salt.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Offset between the °K and °C scales used by the parameter table.
pub const KELVIN_OFFSET: f64 = 273.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },
    #[error("invalid parameter `{key}`: {detail}")]
    InvalidParams { key: &'static str, detail: String },
}

/// Sign of the curvature term in the interface velocity law.
///
/// `Expanding` is `Ṽ = −κ₀ + ξ` (outward speed equal to the mean curvature plus
/// the cryoscopic drive). `Contracting` is `Ṽ = κ₀ + ξ`, which is mean-curvature
/// flow plus the same drive. Static balances `κ₀ = ξ` are shared up to the sign
/// of `ξ`; only the contracting form is a well-posed evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureDrive {
    Expanding,
    Contracting,
}

impl CurvatureDrive {
    /// Coefficient multiplying `κ₀` in the velocity law.
    pub fn kappa_sign(self) -> f64 {
        match self {
            CurvatureDrive::Expanding => -1.0,
            CurvatureDrive::Contracting => 1.0,
        }
    }
}

/// Physical constants, scalings and numerical tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Cryoscopic coefficient, per °C with salt in % weight.
    pub beta: f64,
    /// Freezing temperature of pure water, °K.
    pub theta_star: f64,
    /// Stratification ratio.
    pub delta_g: f64,
    /// Interface to inclusion length ratio.
    #[serde(rename = "H")]
    pub h: f64,
    /// Thermal mobility.
    pub sigma_theta: f64,
    /// Salt mobility.
    #[serde(rename = "sigma_N")]
    pub sigma_n: f64,
    /// Meters per scaled length unit.
    #[serde(rename = "length_scale_Lb")]
    pub length_scale_lb: f64,
    /// Curvature sign in the interface velocity law.
    pub curvature_drive: CurvatureDrive,
    /// Newton tolerance on the residual max-norm (interface stepping).
    pub newton_tol: f64,
    /// Newton iteration cap (interface stepping).
    pub newton_max_iter: usize,
    /// Pinch threshold on the interior radius, mm.
    pub r_pinch: f64,
    /// Floor on the salt mobility weight `φe^{−W₁(φ)}`.
    pub mobility_floor: f64,
    /// Safety factor of the explicit stability bound.
    pub stability_factor: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::defaults()
    }
}

impl ModelParams {
    /// The calibrated parameter table.
    pub fn defaults() -> Self {
        Self {
            beta: 1.85,
            theta_star: KELVIN_OFFSET,
            delta_g: 1.23e-8,
            h: 1.0e6,
            sigma_theta: 1.0,
            sigma_n: 1.0,
            length_scale_lb: 1.0e-3,
            curvature_drive: CurvatureDrive::Expanding,
            newton_tol: 1e-10,
            newton_max_iter: 30,
            r_pinch: 1e-3,
            mobility_floor: 1e-8,
            stability_factor: 0.4,
        }
    }

    /// Reference freezing temperature on the °C scale.
    pub fn theta_star_celsius(&self) -> f64 {
        self.theta_star - KELVIN_OFFSET
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        fn bad(key: &'static str, detail: &str) -> Result<(), ModelError> {
            Err(ModelError::InvalidParams {
                key,
                detail: detail.to_string(),
            })
        }
        let finite = [
            ("beta", self.beta),
            ("theta_star", self.theta_star),
            ("delta_g", self.delta_g),
            ("H", self.h),
            ("sigma_theta", self.sigma_theta),
            ("sigma_N", self.sigma_n),
            ("length_scale_Lb", self.length_scale_lb),
            ("newton_tol", self.newton_tol),
            ("r_pinch", self.r_pinch),
            ("mobility_floor", self.mobility_floor),
            ("stability_factor", self.stability_factor),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return bad(key, "must be finite");
            }
        }
        if self.beta <= 0.0 {
            return bad("beta", "must be positive");
        }
        if self.theta_star <= 0.0 {
            return bad("theta_star", "must be a positive absolute temperature");
        }
        if self.h < 1.0 {
            return bad("H", "must be at least 1");
        }
        if self.delta_g < 0.0 {
            return bad("delta_g", "must be nonnegative");
        }
        if self.sigma_theta <= 0.0 {
            return bad("sigma_theta", "must be positive");
        }
        if self.sigma_n <= 0.0 {
            return bad("sigma_N", "must be positive");
        }
        if self.length_scale_lb <= 0.0 {
            return bad("length_scale_Lb", "must be positive");
        }
        if self.newton_tol <= 0.0 {
            return bad("newton_tol", "must be positive");
        }
        if self.newton_max_iter == 0 {
            return bad("newton_max_iter", "must be at least 1");
        }
        if self.r_pinch <= 0.0 {
            return bad("r_pinch", "must be positive");
        }
        if self.mobility_floor <= 0.0 {
            return bad("mobility_floor", "must be positive");
        }
        if self.stability_factor <= 0.0 || self.stability_factor > 1.0 {
            return bad("stability_factor", "must lie in (0, 1]");
        }
        Ok(())
    }
}

/// Dimensional constants of the parameter table kept as metadata.
///
/// The scaled model uses a single latent-heat scale, so these values do not
/// enter any computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableMetadata {
    /// Latent heat of ice, J/kg.
    pub e_s: f64,
    /// Salt energy scale, J/kg.
    pub e_n: f64,
    /// Gravitational energy scale.
    pub e_g: f64,
    /// Phase energy scale, J/kg.
    pub e_1: f64,
    /// Specific heat of ice, J/(kg·°K).
    pub c_s: f64,
    /// Density of water, kg/m³.
    pub rho_0: f64,
    /// Reference entropy.
    pub s_e: f64,
    /// Molar density of water, mol/m³.
    pub m_0: f64,
    /// Gravity, m/s².
    pub g: f64,
    /// Interface width, m.
    pub l_li: f64,
}

impl TableMetadata {
    pub fn table() -> Self {
        Self {
            e_s: 2.5e6,
            e_n: 2.41e6,
            e_g: 2.98e-2,
            e_1: 1.2e7,
            c_s: 2050.0,
            rho_0: 1000.0,
            s_e: 43.4,
            m_0: 5.55e4,
            g: 9.8,
            l_li: 1e-9,
        }
    }
}

/// Double well `W₀(φ) = 18φ²(1−φ)²`.
pub fn w0(phi: f64) -> f64 {
    let q = phi * (1.0 - phi);
    18.0 * q * q
}

pub fn w0_prime(phi: f64) -> f64 {
    36.0 * phi * (1.0 - phi) * (1.0 - 2.0 * phi)
}

pub fn w0_second(phi: f64) -> f64 {
    36.0 * (1.0 - 6.0 * phi + 6.0 * phi * phi)
}

/// Tilt `W₁(φ) = 2φ³ − 3φ²`, with `W₁(1) = −1`.
pub fn w1(phi: f64) -> f64 {
    phi * phi * (2.0 * phi - 3.0)
}

pub fn w1_prime(phi: f64) -> f64 {
    6.0 * phi * (phi - 1.0)
}

/// Cryoscopic drive `ξ = N + β(θ − θ*)`; positive values promote melting.
///
/// `theta` is on the same scale as `params.theta_star` (°K).
pub fn cryoscopic_xi(theta: f64, n: f64, params: &ModelParams) -> f64 {
    n + params.beta * (theta - params.theta_star)
}

/// Latent heat function `b(θ) = β(θ² − θ*²)/2`, °K.
pub fn latent_b(theta: f64, params: &ModelParams) -> f64 {
    let ts = params.theta_star;
    0.5 * params.beta * (theta - ts) * (theta + ts)
}

/// `B(θ) = b(θ)/θ`, increasing on `θ > 0`, °K.
pub fn latent_big_b(theta: f64, params: &ModelParams) -> Result<f64, ModelError> {
    if !(theta > 0.0) {
        return Err(ModelError::Domain {
            function: "latent_B",
            detail: format!("absolute temperature must be positive, got {theta}"),
        });
    }
    Ok(latent_b(theta, params) / theta)
}

/// Liquid water weight `φe^{−W₁(φ)}` relating salt `N` to relative density `ρ`.
pub fn liquid_weight(phi: f64) -> f64 {
    phi * (-w1(phi)).exp()
}

/// Perturbation `V₁ = B(θ)W₁(φ) − ρφe^{−W₁(φ)}`.
pub fn v1(phi: f64, theta: f64, rho: f64, params: &ModelParams) -> Result<f64, ModelError> {
    let b = latent_big_b(theta, params)?;
    Ok(b * w1(phi) - rho * liquid_weight(phi))
}

/// `∂_φV₁ = B W₁′ − ρe^{−W₁}(1 − φW₁′)`.
pub fn v1_dphi(phi: f64, theta: f64, rho: f64, params: &ModelParams) -> Result<f64, ModelError> {
    let b = latent_big_b(theta, params)?;
    let w1p = w1_prime(phi);
    Ok(b * w1p - rho * (-w1(phi)).exp() * (1.0 - phi * w1p))
}

/// Internal energy density `u = θ − b(θ)W₁(φ)`.
pub fn internal_energy_density(theta: f64, phi: f64, params: &ModelParams) -> f64 {
    theta - latent_b(theta, params) * w1(phi)
}

/// `∂u/∂θ = 1 − βθW₁(φ)`.
pub fn internal_energy_dtheta(theta: f64, phi: f64, params: &ModelParams) -> f64 {
    1.0 - params.beta * theta * w1(phi)
}

/// Mixing entropy `N(1 − ln(N/φ))`, zero at `N = 0`.
pub fn mixing_entropy(n: f64, phi: f64) -> Result<f64, ModelError> {
    if n == 0.0 {
        return Ok(0.0);
    }
    if n < 0.0 {
        return Err(ModelError::Domain {
            function: "mixing_entropy",
            detail: format!("salt must be nonnegative, got {n}"),
        });
    }
    if !(phi > 0.0) {
        return Err(ModelError::Domain {
            function: "mixing_entropy",
            detail: format!("positive salt {n} requires positive phase, got {phi}"),
        });
    }
    Ok(n * (1.0 - (n / phi).ln()))
}

/// Entropy density, °K convention.
///
/// `s = ln θ + N(1 − ln(N/φ)) − δ_g N x₃ − |∇φ|²/(2H) − H W₀(φ) − W₁(φ) ξ(θ, N)`.
/// The gradient weight `1/(2H)` is the one whose variation gives the `Δφ/H`
/// term of the phase equation.
pub fn entropy_density(
    grad_phi_sq: f64,
    phi: f64,
    theta: f64,
    n: f64,
    x3: f64,
    params: &ModelParams,
) -> Result<f64, ModelError> {
    if !(theta > 0.0) {
        return Err(ModelError::Domain {
            function: "entropy_density",
            detail: format!("absolute temperature must be positive, got {theta}"),
        });
    }
    let h = params.h;
    let xi = cryoscopic_xi(theta, n, params);
    Ok(theta.ln() + mixing_entropy(n, phi)?
        - params.delta_g * n * x3
        - grad_phi_sq / (2.0 * h)
        - h * w0(phi)
        - w1(phi) * xi)
}

/// `∂s/∂θ` at fixed `(φ, N)` for a flat state.
pub fn entropy_density_dtheta(theta: f64, phi: f64, params: &ModelParams) -> f64 {
    1.0 / theta - params.beta * w1(phi)
}

/// Salt from relative density: `N = ρφe^{−W₁(φ)}`.
pub fn salt_from_rho(rho: f64, phi: f64) -> f64 {
    rho * liquid_weight(phi)
}

/// Heteroclinic front `Φ(z) = (1 − tanh 3z)/2`, liquid at `z → −∞`.
pub fn front_profile(z: f64) -> f64 {
    0.5 * (1.0 - (3.0 * z).tanh())
}

/// `Φ′(z) = −(3/2) sech²(3z)`.
pub fn front_profile_prime(z: f64) -> f64 {
    let c = (3.0 * z).cosh();
    -1.5 / (c * c)
}

/// `Φ″(z) = 9 sech²(3z) tanh(3z)`.
pub fn front_profile_second(z: f64) -> f64 {
    let c = (3.0 * z).cosh();
    9.0 * (3.0 * z).tanh() / (c * c)
}

/// `‖Φ′‖²_{L²}` in closed form.
pub const FRONT_PROFILE_NORM_SQ: f64 = 1.0;

/// Sharp-interface outward normal speed of the liquid region in the 1-D
/// phase-field variables: `(B + N₀)/(H‖Φ′‖²)`.
pub fn sharp_interface_speed(b_plus_n: f64, params: &ModelParams) -> f64 {
    b_plus_n / (params.h * FRONT_PROFILE_NORM_SQ)
}
