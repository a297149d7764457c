use super::de_init;
use crate::channel::ChannelParams;
use crate::ensemble::DegreeDistribution;
use crate::error::{Error, Result};

/// Inputs of the small-error linearisation of unstructured TMP DE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityInputs {
    /// `Pr{-a <= L_ch <= a}`
    pub alpha: f64,
    /// `Pr{L_ch < -a}`
    pub beta: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub rho_prime_1: f64,
}

impl StabilityInputs {
    pub fn new(
        alpha: f64,
        beta: f64,
        lambda2: f64,
        lambda3: f64,
        rho_prime_1: f64,
    ) -> Result<Self> {
        let ok = alpha >= 0.0
            && beta >= 0.0
            && alpha + beta <= 1.0 + 1e-12
            && lambda2 >= 0.0
            && lambda3 >= 0.0
            && lambda2 + lambda3 <= 1.0 + 1e-12
            && rho_prime_1 >= 0.0;
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "invalid stability inputs alpha={alpha} beta={beta} lambda2={lambda2} lambda3={lambda3} rho'(1)={rho_prime_1}"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            lambda2,
            lambda3,
            rho_prime_1,
        })
    }

    /// Inputs for ensemble `dd` on channel `ch` with quantizer threshold `a`.
    pub fn from_ensemble(dd: &DegreeDistribution, ch: &ChannelParams, a: f64) -> Self {
        let (alpha, beta) = alpha_beta(a, ch.mu_ch, ch.sigma_ch);
        Self {
            alpha,
            beta,
            lambda2: dd.lambda_coeff(2),
            lambda3: dd.lambda_coeff(3),
            rho_prime_1: dd.rho_prime_one(),
        }
    }

    pub fn is_stable(&self) -> bool {
        stability_gamma(self) < 1.0
    }
}

/// `(alpha, beta)`: erasure and error probability of the quantized channel
/// LLR.
pub fn alpha_beta(a: f64, mu_ch: f64, sigma_ch: f64) -> (f64, f64) {
    let d = de_init(mu_ch, sigma_ch, a);
    (d.p0, d.p_minus)
}

/// Jacobian of `(p0, p-1)` at the zero fixed point.
pub fn jacobian(s: &StabilityInputs) -> [[f64; 2]; 2] {
    let r = s.rho_prime_1;
    [
        [r * s.alpha * s.lambda2, r * 2.0 * s.alpha * s.lambda3],
        [
            r * s.beta * s.lambda2,
            r * (s.lambda2 + 2.0 * s.beta * s.lambda3),
        ],
    ]
}

/// Largest eigenvalue magnitude of a real 2x2 matrix.
pub fn spectral_radius_2x2(m: &[[f64; 2]; 2]) -> f64 {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (tr / 2.0 + s).abs().max((tr / 2.0 - s).abs())
    } else {
        det.sqrt()
    }
}

/// Closed-form spectral radius `gamma` of the Jacobian; stable iff `< 1`.
pub fn stability_gamma(s: &StabilityInputs) -> f64 {
    let (a, b, l2, l3) = (s.alpha, s.beta, s.lambda2, s.lambda3);
    let root =
        ((a - 1.0).powi(2) * l2 * l2 + 4.0 * b * b * l3 * l3 + 4.0 * b * l2 * l3 * (a + 1.0))
            .sqrt();
    s.rho_prime_1 / 2.0 * ((a + 1.0) * l2 + 2.0 * b * l3 + root)
}
