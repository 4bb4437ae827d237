//! Closed-form predictions: characteristic functions of coupling laws, the
//! disorder-averaged decoherence factor, and the weak-decoherence and
//! long-time expressions for mutual information and Holevo quantity.
//!
//! All information quantities are in bits. `ξ` includes the `1/ln 2` factor so
//! that the expansions are the leading terms of base-2 entropies.

use std::f64::consts::LN_2;

use faer::c64;

use crate::error::{invalid, Result};
use crate::information::binary_entropy;
use crate::model::CouplingDistribution;

/// Mean of `ε_i = |α_i|⁴ + |β_i|⁴` when `|α_i|²` is uniform on [0, 1].
pub const EPS_BAR: f64 = 2.0 / 3.0;

/// Squared decoherence factors up to this value are treated as inside the
/// weak-decoherence regime.
pub const WEAK_DECOHERENCE_LIMIT: f64 = 0.04;

/// `f̃(k) = E[e^{ikB}]`.
pub fn characteristic_function(dist: &CouplingDistribution, k: f64) -> c64 {
    match dist {
        CouplingDistribution::ContinuousUniform { half_width } => {
            c64::new(sinc(half_width * k), 0.0)
        }
        CouplingDistribution::DiscreteUniform { support } => {
            let sum = support.iter().fold(c64::new(0.0, 0.0), |acc, b| {
                acc + c64::from_polar(1.0, k * b)
            });
            sum / support.len() as f64
        }
        CouplingDistribution::PointMass { value } => c64::from_polar(1.0, k * value),
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return invalid(format!("{name} must lie in [0, 1], got {x}"));
    }
    Ok(())
}

/// `⟨|Γ_i(t)|²⟩ = a⁴ + b⁴ + 2a²b² Re f̃(4t)` with `a² = alpha_sq`.
pub fn avg_gamma_squared(dist: &CouplingDistribution, alpha_sq: f64, t: f64) -> Result<f64> {
    check_unit("alpha_sq", alpha_sq)?;
    let beta_sq = 1.0 - alpha_sq;
    let cross = 2.0 * alpha_sq * beta_sq;
    Ok(alpha_sq * alpha_sq + beta_sq * beta_sq + cross * characteristic_function(dist, 4.0 * t).re)
}

/// `ε_i = a⁴ + (1-a²)²`, the long-time value of `⟨|Γ_i|²⟩` for continuous laws.
pub fn epsilon_site(alpha_sq: f64) -> Result<f64> {
    check_unit("alpha_sq", alpha_sq)?;
    Ok(alpha_sq * alpha_sq + (1.0 - alpha_sq).powi(2))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AveragedGammaCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn averaged_gamma_curve(
    dist: &CouplingDistribution,
    alpha_sq: f64,
    times: &[f64],
) -> Result<AveragedGammaCurve> {
    let values = times
        .iter()
        .map(|&t| avg_gamma_squared(dist, alpha_sq, t))
        .collect::<Result<_>>()?;
    Ok(AveragedGammaCurve {
        times: times.to_vec(),
        values,
    })
}

/// `ξ(x) = 4x(1-x) artanh(1-2x) / ((1-2x) ln 2)`, defined on the open interval.
pub fn xi(alpha0_sq: f64) -> Result<f64> {
    if !(alpha0_sq > 0.0 && alpha0_sq < 1.0) {
        return invalid(format!("xi needs alpha0_sq in (0, 1), got {alpha0_sq}"));
    }
    Ok(xi_or_limit(alpha0_sq))
}

/// `ξ` extended by its limit 0 at the endpoints.
fn xi_or_limit(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let u = 1.0 - 2.0 * x;
    let ratio = if u.abs() < 1e-4 {
        let u2 = u * u;
        1.0 + u2 / 3.0 + u2 * u2 / 5.0
    } else {
        u.atanh() / u
    };
    4.0 * x * (1.0 - x) * ratio / LN_2
}

/// Largest system entropy, `h[|α_0|²]` in bits.
pub fn s_max(alpha0_sq: f64) -> f64 {
    binary_entropy(alpha0_sq)
}

/// `I ≈ S_max - (ξ/2)(|Γ|² + |Γ_F|² - |Γ_F̄|²)`.
pub fn weak_decoherence_i(
    gamma_sq: f64,
    gamma_f_sq: f64,
    gamma_fbar_sq: f64,
    alpha0_sq: f64,
) -> f64 {
    s_max(alpha0_sq) - 0.5 * xi_or_limit(alpha0_sq) * (gamma_sq + gamma_f_sq - gamma_fbar_sq)
}

/// `χ ≈ S_max - (ξ/2)|Γ_F|²`.
pub fn weak_decoherence_chi(gamma_f_sq: f64, alpha0_sq: f64) -> f64 {
    s_max(alpha0_sq) - 0.5 * xi_or_limit(alpha0_sq) * gamma_f_sq
}

/// Whether every squared decoherence factor is small enough for the
/// expansions above.
pub fn within_weak_decoherence(gamma_sqs: &[f64]) -> bool {
    gamma_sqs.iter().all(|&g| g <= WEAK_DECOHERENCE_LIMIT)
}

fn check_eps_bar(eps_bar: f64) -> Result<()> {
    if !(eps_bar > 0.0 && eps_bar < 1.0) {
        return invalid(format!("eps_bar must lie in (0, 1), got {eps_bar}"));
    }
    Ok(())
}

/// Long-time mutual information for a fragment of `n` of `n_env` sites:
/// `S_max - (ξ/2)(ε̄^N + ε̄^n - ε̄^{N-n})`.
pub fn asymptotic_i(n: usize, n_env: usize, alpha0_sq: f64, eps_bar: f64) -> Result<f64> {
    if n > n_env {
        return invalid(format!(
            "fragment size {n} exceeds environment size {n_env}"
        ));
    }
    check_unit("alpha0_sq", alpha0_sq)?;
    check_eps_bar(eps_bar)?;
    let bracket =
        eps_bar.powi(n_env as i32) + eps_bar.powi(n as i32) - eps_bar.powi((n_env - n) as i32);
    Ok(s_max(alpha0_sq) - 0.5 * xi_or_limit(alpha0_sq) * bracket)
}

/// Long-time Holevo quantity: `S_max - (ξ/2) ε̄^n`.
pub fn asymptotic_chi(n: usize, alpha0_sq: f64, eps_bar: f64) -> Result<f64> {
    check_unit("alpha0_sq", alpha0_sq)?;
    check_eps_bar(eps_bar)?;
    Ok(s_max(alpha0_sq) - 0.5 * xi_or_limit(alpha0_sq) * eps_bar.powi(n as i32))
}
