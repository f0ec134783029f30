//! MMSE rescaling constants for the Gaussian two-decoder test channel.
//!
//! The informed decoder works on the residual source x' = x - u1 and
//! residual side information y' = y - u1. A reversed test channel replaces
//! the auxiliary Gaussian with a discrete constellation A; every constant
//! of that reversal is collected here, including the equivalent
//! mod-lattice construction noises for the quantization and channel codes.

use crate::error::{Error, Result};
use crate::rd::{classify_region_gaussian, GaussianHbConfig, GaussianRegion};

#[derive(Debug, Clone, Copy)]
pub struct MmseScalars {
    pub d1: f64,
    pub d2: f64,
    pub sigma_x2: f64,
    pub sigma_z2: f64,
    /// MMSE coefficient of x' on y': D1 / (D1 + sigma_z2)
    pub alpha: f64,
    /// auxiliary-noise multiplier: D1 sigma_z2 / (D1 sigma_z2 - D2 (D1 + sigma_z2))
    pub gamma: f64,
    /// variance of the auxiliary noise: gamma * D2
    pub d2_prime: f64,
    /// MMSE rescale of the auxiliary variable against x'
    pub alpha_q: f64,
    /// MMSE rescale of the auxiliary variable against y'
    pub alpha_c: f64,
    /// reconstruction combiner weight: D2 / sigma_z2
    pub eta: f64,
    /// variance of the continuous auxiliary: D1 + gamma D2
    pub sigma_u2: f64,
    /// variance of y': D1 + sigma_z2
    pub sigma_y2: f64,
    /// residual variance of x' given y': alpha * sigma_z2
    pub sigma_z3_2: f64,
    /// constellation variance: alpha_q^2 sigma_u2
    pub sigma_a2: f64,
    /// variance of the decoder's combined observation
    pub sigma_b2: f64,
    /// additive noise of the quantization channel x-bar' = A + noise
    pub noise_q: f64,
    /// additive noise of the decoder channel b-bar = A + noise
    pub noise_c: f64,
    /// equivalent mod-lattice noise for the quantization code
    pub sigma_q2_tilde: f64,
    /// equivalent mod-lattice noise for the channel code
    pub sigma_c2_tilde: f64,
    /// observation rescale onto the constellation axis, encoder side
    pub kappa_q: f64,
    /// observation rescale onto the constellation axis, decoder side
    pub kappa_c: f64,
    /// scaling from y' to the decoder's combined observation
    pub b_scale: f64,
}

/// Derives all constants and checks the internal identities to 1e-10:
/// both closed forms of alpha_q and alpha_c agree, the reconstruction
/// residual identities hold, and the quantization-side equivalent noise
/// never exceeds the channel-side one.
pub fn compute_scalars(gcfg: &GaussianHbConfig) -> Result<MmseScalars> {
    if classify_region_gaussian(gcfg) != GaussianRegion::Nondegenerate {
        return Err(Error::Region(format!(
            "scalars require the non-degenerate region; D2 boundary is {}",
            gcfg.d2_boundary()
        )));
    }
    let GaussianHbConfig { sigma_x2, sigma_z2, d1, d2 } = *gcfg;

    let alpha = d1 / (d1 + sigma_z2);
    let gamma_den = d1 * sigma_z2 - d2 * (d1 + sigma_z2);
    let gamma = d1 * sigma_z2 / gamma_den;
    let d2_prime = gamma * d2;
    let alpha_q = d1 / (d1 + d2_prime);
    let alpha_c = d1 * d1 / ((d1 + d2_prime) * (d1 + sigma_z2));
    let eta = d2 / sigma_z2;
    let sigma_u2 = d1 + gamma * d2;
    let sigma_y2 = d1 + sigma_z2;
    let sigma_z3_2 = alpha * sigma_z2;
    let sigma_a2 = alpha_q * alpha_q * sigma_u2;
    let noise_q = alpha_q * d2_prime;
    let noise_c = alpha_q * d2_prime + (alpha_q / alpha_c) * sigma_z3_2;
    let sigma_b2 = (alpha_q / alpha_c).powi(2) * alpha * alpha * sigma_y2;
    let sigma_q2_tilde = sigma_a2 / d1 * noise_q;
    let sigma_c2_tilde = sigma_a2 / sigma_b2 * noise_c;
    let kappa_q = sigma_a2 / d1;
    let kappa_c = sigma_a2 / sigma_b2;
    let b_scale = (alpha_q / alpha_c) * alpha;

    let check = |name: &str, a: f64, b: f64| -> Result<()> {
        let scale = a.abs().max(b.abs()).max(1.0);
        if (a - b).abs() > 1e-10 * scale {
            return Err(Error::Numerical(format!("identity {name} fails: {a} vs {b}")));
        }
        Ok(())
    };
    // second printed routes to the rescale coefficients
    check(
        "alpha_q",
        alpha_q,
        (d1 * (sigma_z2 - d2) - d2 * sigma_z2) / (d1 * (sigma_z2 - d2)),
    )?;
    check(
        "alpha_c",
        alpha_c,
        (d1 * (sigma_z2 - d2) - d2 * sigma_z2) / ((d1 + sigma_z2) * (sigma_z2 - d2)),
    )?;
    // reconstruction residual identities
    check("residual", alpha_q * d2_prime - d2, d2 * d2 / (sigma_z2 - d2))?;
    check("combiner", eta * eta * noise_c, d2 * d2 / (sigma_z2 - d2))?;
    // closed forms of the equivalent construction noises
    check("noise_q", sigma_q2_tilde, sigma_a2 * sigma_z2 * d2 / (d1 * (sigma_z2 - d2)))?;
    check(
        "noise_c",
        sigma_c2_tilde,
        sigma_a2 * sigma_z2 * sigma_z2 / ((d1 + sigma_z2) * (sigma_z2 - d2)),
    )?;
    // observation totals
    check("obs_q", sigma_a2 + noise_q, d1)?;
    check("obs_c", sigma_a2 + noise_c, sigma_b2)?;
    if sigma_q2_tilde > sigma_c2_tilde + 1e-12 {
        return Err(Error::Numerical(format!(
            "quantization-side noise {sigma_q2_tilde} exceeds channel-side {sigma_c2_tilde}"
        )));
    }

    Ok(MmseScalars {
        d1,
        d2,
        sigma_x2,
        sigma_z2,
        alpha,
        gamma,
        d2_prime,
        alpha_q,
        alpha_c,
        eta,
        sigma_u2,
        sigma_y2,
        sigma_z3_2,
        sigma_a2,
        sigma_b2,
        noise_q,
        noise_c,
        sigma_q2_tilde,
        sigma_c2_tilde,
        kappa_q,
        kappa_c,
        b_scale,
    })
}
