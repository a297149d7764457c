//! Exact density evolution for ternary (and, with `a = 0`, binary) message
//! passing over unstructured and protograph ensembles.
//!
//! All analysis is conditioned on the all-`+1` transmitted sequence. A
//! message density is the pair (erasure probability, error probability).

mod lattice;
mod protograph;
mod stability;
mod threshold;
mod unstructured;

pub use lattice::LlrLattice;
pub use protograph::{
    de_init_protograph, de_run_protograph, proto_app_update, proto_cn_update, proto_vn_update,
    proto_weights, EdgeTypeDensities,
};
pub use stability::{alpha_beta, jacobian, spectral_radius_2x2, stability_gamma, StabilityInputs};
pub use threshold::{
    optimize_quantizer, threshold_search, Ensemble, QuantizerChoice, ThresholdConfig,
    ThresholdResult,
};
pub use unstructured::{
    cn_update_unstructured, de_run_unstructured, pr_m_in, vn_update_unstructured,
};

use crate::channel::ChannelParams;
use crate::schedule::WeightSchedule;

/// Upper-tail probability of the standard normal distribution.
#[inline]
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Erasure / error probability pair of a ternary message population.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TernaryDensity {
    pub p0: f64,
    pub p_minus: f64,
}

impl TernaryDensity {
    pub const ZERO: TernaryDensity = TernaryDensity {
        p0: 0.0,
        p_minus: 0.0,
    };
    pub const ERASED: TernaryDensity = TernaryDensity {
        p0: 1.0,
        p_minus: 0.0,
    };

    pub fn new(p0: f64, p_minus: f64) -> Self {
        Self { p0, p_minus }
    }

    /// Probability of a correct (`+1`) message.
    #[inline]
    pub fn p_plus(&self) -> f64 {
        (1.0 - self.p0 - self.p_minus).max(0.0)
    }

    pub fn is_valid(&self) -> bool {
        self.p0 >= 0.0 && self.p_minus >= 0.0 && self.p0 + self.p_minus <= 1.0 + 1e-12
    }

    fn clamp(self) -> Self {
        let p0 = self.p0.clamp(0.0, 1.0);
        let pm = self.p_minus.clamp(0.0, 1.0 - p0);
        Self { p0, p_minus: pm }
    }
}

/// Channel-side initial density: `p0 = Pr{-a <= L_ch <= a}`,
/// `p_minus = Pr{L_ch < -a}`.
pub fn de_init(mu_ch: f64, sigma_ch: f64, a: f64) -> TernaryDensity {
    let pm = q_function((a + mu_ch) / sigma_ch);
    let p0 = q_function((-a + mu_ch) / sigma_ch) - pm;
    TernaryDensity {
        p0: p0.max(0.0),
        p_minus: pm,
    }
}

/// Reliability `ln((1 - q0 - q-1) / q-1)` of a CN-to-VN message population,
/// clipped to `d_max` when `q-1 <= exp(-d_max) (1 - q0 - q-1)`.
///
/// Returns the weight and whether clipping happened. An all-erased
/// population gets weight 0 (its messages never contribute).
pub fn clipped_reliability(q: TernaryDensity, d_max: f64) -> (f64, bool) {
    let good = q.p_plus();
    if good <= 0.0 {
        return (0.0, false);
    }
    if q.p_minus <= (-d_max).exp() * good {
        return (d_max, true);
    }
    ((good / q.p_minus).ln().clamp(0.0, d_max), false)
}

/// Parameters shared by every DE run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeConfig {
    /// Maximum number of iterations `L_max`.
    pub l_max: usize,
    /// Convergence target for the error/erasure probabilities.
    pub eps_target: f64,
    /// Reliability cap.
    pub d_max: f64,
    /// Stop as soon as the target is met. When false, the recursion runs
    /// all `l_max` iterations (used to export full weight schedules).
    pub stop_on_convergence: bool,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            l_max: 200,
            eps_target: 1e-10,
            d_max: 25.0,
            stop_on_convergence: true,
        }
    }
}

impl DeConfig {
    pub fn with_l_max(l_max: usize) -> Self {
        Self {
            l_max,
            ..Self::default()
        }
    }
}

/// State of one DE iteration. For unstructured runs the vectors have a
/// single entry; for protograph runs they are indexed by edge type
/// `i * n0 + j` (entries with `b_ij = 0` are zero) and `p_app` by VN type.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub p: Vec<TernaryDensity>,
    pub q: Vec<TernaryDensity>,
    pub p_app: Vec<f64>,
}

/// Outcome of a DE run.
#[derive(Debug, Clone, PartialEq)]
pub struct DeReport {
    pub converged: bool,
    /// First iteration at which the convergence target was met.
    pub converged_at: Option<usize>,
    /// First iteration at which the message (rather than APP) criterion
    /// was met.
    pub messages_converged_at: Option<usize>,
    /// First iteration at which every APP error probability was below the
    /// target.
    pub app_converged_at: Option<usize>,
    /// Number of iterations run.
    pub iterations: usize,
    /// Iteration 0 density (channel only).
    pub initial: IterationRecord,
    /// Iterations `1..=iterations`.
    pub trajectory: Vec<IterationRecord>,
    /// Weights used at iterations `1..=iterations`.
    pub weights: WeightSchedule,
    /// Number of weights that hit the reliability cap.
    pub clip_events: usize,
    pub channel: ChannelParams,
    pub a: f64,
}

impl DeReport {
    pub fn final_p_app(&self) -> &[f64] {
        self.trajectory
            .last()
            .map_or(&self.initial.p_app, |r| &r.p_app)
    }

    /// Trajectory as CSV: `l`, then per edge type `p0,pm,q0,qm`, then the
    /// per-VN-type APP error probabilities.
    pub fn trajectory_csv(&self) -> String {
        let types = self.initial.p.len();
        let vns = self.initial.p_app.len();
        let mut out = String::from("l");
        for t in 0..types {
            out.push_str(&format!(",p0_{t},pm_{t},q0_{t},qm_{t}"));
        }
        for j in 0..vns {
            out.push_str(&format!(",papp_{j}"));
        }
        out.push('\n');
        for (l, rec) in std::iter::once(&self.initial)
            .chain(&self.trajectory)
            .enumerate()
        {
            out.push_str(&l.to_string());
            for t in 0..types {
                let q = rec.q.get(t).copied().unwrap_or_default();
                out.push_str(&format!(
                    ",{:e},{:e},{:e},{:e}",
                    rec.p[t].p0, rec.p[t].p_minus, q.p0, q.p_minus
                ));
            }
            for v in &rec.p_app {
                out.push_str(&format!(",{v:e}"));
            }
            out.push('\n');
        }
        out
    }
}

const FIXED_POINT_TOL: f64 = 1e-15;

fn max_change(a: &[TernaryDensity], b: &[TernaryDensity]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.p0 - y.p0).abs().max((x.p_minus - y.p_minus).abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Composite Simpson integration of the standard normal density on
    /// `[x, x + 12]`; independent of `erfc`.
    fn q_by_quadrature(x: f64) -> f64 {
        let n = 20_000;
        let (lo, hi) = (x, x + 12.0);
        let h = (hi - lo) / n as f64;
        let f = |z: f64| (-z * z / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = f(lo) + f(hi);
        for k in 1..n {
            let z = lo + k as f64 * h;
            s += if k % 2 == 1 { 4.0 * f(z) } else { 2.0 * f(z) };
        }
        s * h / 3.0
    }

    #[test]
    fn q_function_values() {
        assert_eq!(q_function(0.0), 0.5);
        assert_relative_eq!(q_function(-1.7), 1.0 - q_function(1.7), epsilon = 1e-15);
        assert_relative_eq!(q_function(1.0), q_by_quadrature(1.0), epsilon = 1e-12);
        assert_relative_eq!(q_function(1.0), 0.158655253931457, epsilon = 1e-12);
        assert_relative_eq!(q_function(3.3), q_by_quadrature(3.3), max_relative = 1e-9);
    }

    #[test]
    fn init_limits() {
        let d = de_init(4.0, 8f64.sqrt(), 0.0);
        assert_eq!(d.p0, 0.0);
        assert_relative_eq!(d.p_minus, q_function(4.0 / 8f64.sqrt()), epsilon = 1e-16);
        let d = de_init(4.0, 8f64.sqrt(), 1e3);
        assert_relative_eq!(d.p0, 1.0, epsilon = 1e-12);
        assert!(d.p_minus < 1e-100);
    }

    #[test]
    fn init_example() {
        let s = 8f64.sqrt();
        let d = de_init(4.0, s, 1.3);
        // (-1.3 + 4)/sqrt(8) = 0.954594..., (1.3 + 4)/sqrt(8) = 1.873833...
        assert_relative_eq!((4.0 - 1.3) / s, 0.954594155, epsilon = 1e-9);
        assert_relative_eq!((4.0 + 1.3) / s, 1.873832970, epsilon = 1e-9);
        assert_relative_eq!(d.p_minus, q_by_quadrature(1.873832970), epsilon = 1e-9);
        assert_relative_eq!(
            d.p0,
            q_by_quadrature(0.954594155) - q_by_quadrature(1.873832970),
            epsilon = 1e-9
        );
    }

    #[test]
    fn reliability_clipping() {
        let (w, clipped) = clipped_reliability(TernaryDensity::new(0.2, 0.1), 25.0);
        assert_relative_eq!(w, 7f64.ln(), epsilon = 1e-14);
        assert!(!clipped);
        assert_eq!(
            clipped_reliability(TernaryDensity::ZERO, 25.0),
            (25.0, true)
        );
        assert_eq!(
            clipped_reliability(TernaryDensity::new(0.5, 1e-13), 25.0),
            (25.0, true)
        );
        assert_eq!(
            clipped_reliability(TernaryDensity::ERASED, 25.0),
            (0.0, false)
        );
    }
}
