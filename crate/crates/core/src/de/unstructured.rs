use super::lattice::difference_pmf;
use super::{
    clipped_reliability, de_init, max_change, q_function, DeConfig, DeReport, IterationRecord,
    TernaryDensity, FIXED_POINT_TOL,
};
use crate::channel::ChannelParams;
use crate::ensemble::DegreeDistribution;
use crate::error::Result;
use crate::schedule::WeightSchedule;

/// `(1 - x)^k` and `(1 - x)^k - (1 - x - 2y)^k`, evaluated through
/// `ln_1p`/`exp_m1` so that tiny `x`, `y` keep full relative precision.
/// Returns `(1 - (1-x)^k, (1-x)^k - (1-x-2y)^k)`.
#[inline]
pub(super) fn check_products(terms: impl Iterator<Item = (f64, f64, f64)>) -> (f64, f64) {
    // terms: (x, y, k) with x = p0, y = p-1, k = exponent
    let mut log_a = 0.0; // sum k ln(1 - x)
    let mut log_ratio = 0.0; // sum k ln((1 - x) / (1 - x - 2y))
    let mut degenerate = false;
    let mut direct_a = 1.0;
    let mut direct_b = 1.0;
    for (x, y, k) in terms {
        if k == 0.0 {
            continue;
        }
        direct_a *= (1.0 - x).powf(k);
        direct_b *= (1.0 - x - 2.0 * y).powf(k);
        let rest = 1.0 - x - 2.0 * y;
        if x >= 1.0 || rest <= 0.0 {
            degenerate = true;
            continue;
        }
        log_a += k * (-x).ln_1p();
        log_ratio += k * (2.0 * y / rest).ln_1p();
    }
    if degenerate {
        return (1.0 - direct_a, direct_a - direct_b);
    }
    let erased = -log_a.exp_m1();
    // a - b = b (exp(log_ratio) - 1), with b = exp(log_a - log_ratio)
    let diff = (log_a - log_ratio).exp() * log_ratio.exp_m1();
    (erased, diff)
}

/// CN update for an unstructured ensemble:
/// `q0 = 1 - rho(1 - p0)`,
/// `q-1 = (rho(1 - p0) - rho(1 - 2 p-1 - p0)) / 2`.
pub fn cn_update_unstructured(p: TernaryDensity, dd: &DegreeDistribution) -> TernaryDensity {
    let mut q0 = 0.0;
    let mut qm = 0.0;
    for &(d, rho) in dd.rho() {
        let (e, diff) = check_products(std::iter::once((p.p0, p.p_minus, d as f64 - 1.0)));
        q0 += rho * e;
        qm += rho * 0.5 * diff;
    }
    TernaryDensity::new(q0, qm).clamp()
}

/// `Pr{M_in = m}` for the sum of `d - 1` incoming CN messages with density
/// `q`; index `m + d - 1`.
pub fn pr_m_in(d: u32, q: TernaryDensity) -> Vec<f64> {
    difference_pmf(d.saturating_sub(1), q)
}

/// VN update for an unstructured ensemble with reliability weight `d_weight`.
pub fn vn_update_unstructured(
    q: TernaryDensity,
    dd: &DegreeDistribution,
    d_weight: f64,
    mu_ch: f64,
    sigma_ch: f64,
    a: f64,
) -> TernaryDensity {
    let mut p0 = 0.0;
    let mut pm = 0.0;
    for &(d, lambda) in dd.lambda() {
        let pmf = pr_m_in(d, q);
        let half = (pmf.len() / 2) as i64;
        for (idx, &pr) in pmf.iter().enumerate() {
            if pr == 0.0 {
                continue;
            }
            let shift = d_weight * (idx as i64 - half) as f64 + mu_ch;
            let upper = q_function((a + shift) / sigma_ch);
            let lower = q_function((-a + shift) / sigma_ch);
            p0 += lambda * pr * (lower - upper).max(0.0);
            pm += lambda * pr * upper;
        }
    }
    TernaryDensity::new(p0, pm).clamp()
}

/// Node-perspective APP error probability, using all `d` incoming messages.
fn app_unstructured(
    q: TernaryDensity,
    dd: &DegreeDistribution,
    d_weight: f64,
    mu_ch: f64,
    sigma_ch: f64,
) -> f64 {
    let norm: f64 = dd.lambda().iter().map(|&(d, l)| l / d as f64).sum();
    let mut out = 0.0;
    for &(d, lambda) in dd.lambda() {
        let frac = lambda / d as f64 / norm;
        let pmf = difference_pmf(d, q);
        let half = (pmf.len() / 2) as i64;
        for (idx, &pr) in pmf.iter().enumerate() {
            if pr > 0.0 {
                let z = d_weight * (idx as i64 - half) as f64;
                out += frac * pr * q_function((z + mu_ch) / sigma_ch);
            }
        }
    }
    out
}

/// Runs unstructured DE at `ebn0_db` with quantizer threshold `a`.
///
/// Converged iff `p0 + p-1 < eps_target` within `l_max` iterations.
pub fn de_run_unstructured(
    dd: &DegreeDistribution,
    ebn0_db: f64,
    a: f64,
    cfg: &DeConfig,
) -> Result<DeReport> {
    let ch = ChannelParams::from_ebn0(ebn0_db, dd.design_rate())?;
    Ok(de_run_unstructured_at(dd, ch, a, cfg))
}

/// As [`de_run_unstructured`] with an explicit channel.
pub(crate) fn de_run_unstructured_at(
    dd: &DegreeDistribution,
    ch: ChannelParams,
    a: f64,
    cfg: &DeConfig,
) -> DeReport {
    let (mu, sigma) = (ch.mu_ch, ch.sigma_ch);
    let mut p = de_init(mu, sigma, a);
    let initial = IterationRecord {
        p: vec![p],
        q: vec![TernaryDensity::ERASED],
        p_app: vec![q_function(mu / sigma)],
    };
    let mut trajectory = Vec::new();
    let mut weights = Vec::new();
    let mut clip_events = 0;
    let mut messages_converged_at = None;
    let mut app_converged_at = None;

    for l in 1..=cfg.l_max {
        let q = cn_update_unstructured(p, dd);
        let (w, clipped) = clipped_reliability(q, cfg.d_max);
        clip_events += clipped as usize;
        let next = vn_update_unstructured(q, dd, w, mu, sigma, a);
        let app = app_unstructured(q, dd, w, mu, sigma);
        weights.push(w);
        trajectory.push(IterationRecord {
            p: vec![next],
            q: vec![q],
            p_app: vec![app],
        });

        if messages_converged_at.is_none() && next.p0 + next.p_minus < cfg.eps_target {
            messages_converged_at = Some(l);
        }
        if app_converged_at.is_none() && app < cfg.eps_target {
            app_converged_at = Some(l);
        }
        let stalled = max_change(&[next], &[p]) < FIXED_POINT_TOL;
        p = next;
        if cfg.stop_on_convergence && (messages_converged_at.is_some() || stalled) {
            break;
        }
    }
    DeReport {
        converged: messages_converged_at.is_some(),
        converged_at: messages_converged_at,
        messages_converged_at,
        app_converged_at,
        iterations: trajectory.len(),
        initial,
        trajectory,
        weights: WeightSchedule::scalar(weights).expect("weights are finite and non-negative"),
        clip_events,
        channel: ch,
        a,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cn_update_example() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        let q = cn_update_unstructured(TernaryDensity::new(0.1, 0.05), &dd);
        assert_relative_eq!(q.p0, 1.0 - 0.9f64.powi(5), epsilon = 1e-15);
        assert_relative_eq!(q.p0, 0.40951, epsilon = 1e-12);
        assert_relative_eq!(
            q.p_minus,
            0.5 * (0.9f64.powi(5) - 0.8f64.powi(5)),
            epsilon = 1e-15
        );
        assert_relative_eq!(q.p_minus, 0.131405, epsilon = 1e-12);
    }

    #[test]
    fn cn_update_fixed_points() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        assert_eq!(
            cn_update_unstructured(TernaryDensity::ZERO, &dd),
            TernaryDensity::ZERO
        );
        let q = cn_update_unstructured(TernaryDensity::ERASED, &dd);
        assert_eq!(q, TernaryDensity::ERASED);
    }

    #[test]
    fn cn_update_small_values_keep_precision() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        let q = cn_update_unstructured(TernaryDensity::new(1e-14, 1e-15), &dd);
        assert_relative_eq!(q.p0, 5e-14, max_relative = 1e-9);
        assert_relative_eq!(q.p_minus, 5e-15, max_relative = 1e-6);
    }

    #[test]
    fn pr_m_in_example() {
        let pmf = pr_m_in(3, TernaryDensity::new(0.2, 0.1));
        let expected = [0.01, 0.04, 0.18, 0.28, 0.49];
        for (x, y) in pmf.iter().zip(expected) {
            assert_relative_eq!(*x, y, epsilon = 1e-15);
        }
    }

    #[test]
    fn degree_two_passes_raw_distribution() {
        let q = TernaryDensity::new(0.3, 0.15);
        let pmf = pr_m_in(2, q);
        assert_relative_eq!(pmf[0], q.p_minus, epsilon = 1e-16);
        assert_relative_eq!(pmf[1], q.p0, epsilon = 1e-16);
        assert_relative_eq!(pmf[2], q.p_plus(), epsilon = 1e-16);
    }

    #[test]
    fn perfect_messages_give_perfect_output() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        let (w, clipped) = clipped_reliability(TernaryDensity::ZERO, 25.0);
        assert!(clipped);
        let p = vn_update_unstructured(TernaryDensity::ZERO, &dd, w, 2.0, 2.0, 1.3);
        // shift by (d - 1) * D_clip = 50
        let expect_m = q_function((1.3 + 50.0 + 2.0) / 2.0);
        assert_relative_eq!(p.p_minus, expect_m, max_relative = 1e-12);
        assert!(p.p0 < 1e-100 && p.p_minus < 1e-100);
    }

    #[test]
    fn quantizer_zero_is_binary() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        let r = de_run_unstructured(&dd, 3.0, 0.0, &DeConfig::with_l_max(30)).unwrap();
        assert!(r
            .trajectory
            .iter()
            .all(|rec| rec.p[0].p0 == 0.0 && rec.q[0].p0 == 0.0));
    }

    #[test]
    fn regular_three_six_high_and_low_snr() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        let hi = de_run_unstructured(&dd, 6.0, 1.3, &DeConfig::default()).unwrap();
        assert!(hi.converged);
        let lo = de_run_unstructured(&dd, 0.0, 1.3, &DeConfig::default()).unwrap();
        assert!(!lo.converged);
    }

    #[test]
    fn densities_stay_in_range() {
        let dd =
            DegreeDistribution::new(vec![(2, 0.3), (3, 0.4), (8, 0.3)], vec![(7, 0.5), (8, 0.5)])
                .unwrap();
        for db in [0.0, 1.0, 2.0, 4.0] {
            let r = de_run_unstructured(&dd, db, 0.9, &DeConfig::with_l_max(50)).unwrap();
            for rec in &r.trajectory {
                assert!(rec.p[0].is_valid() && rec.q[0].is_valid(), "{rec:?}");
            }
            assert_eq!(r.weights.iterations(), r.iterations);
        }
    }
}
