use super::lattice::LlrLattice;
use super::unstructured::check_products;
use super::{
    clipped_reliability, de_init, max_change, q_function, DeConfig, DeReport, IterationRecord,
    TernaryDensity, FIXED_POINT_TOL,
};
use crate::channel::ChannelParams;
use crate::ensemble::BaseMatrix;
use crate::error::Result;
use crate::schedule::WeightSchedule;

/// One density per edge type, indexed `i * n0 + j`. Entries with
/// `b_ij = 0` are unused and kept at [`TernaryDensity::ZERO`].
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTypeDensities {
    m0: usize,
    n0: usize,
    values: Vec<TernaryDensity>,
}

impl EdgeTypeDensities {
    pub fn new(m0: usize, n0: usize, values: Vec<TernaryDensity>) -> Self {
        assert_eq!(values.len(), m0 * n0);
        Self { m0, n0, values }
    }

    pub fn filled(b: &BaseMatrix, d: TernaryDensity) -> Self {
        let values = b
            .entries()
            .iter()
            .map(|&e| if e == 0 { TernaryDensity::ZERO } else { d })
            .collect();
        Self {
            m0: b.rows(),
            n0: b.cols(),
            values,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> TernaryDensity {
        self.values[i * self.n0 + j]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m0, self.n0)
    }

    pub fn values(&self) -> &[TernaryDensity] {
        &self.values
    }

    pub fn into_values(self) -> Vec<TernaryDensity> {
        self.values
    }
}

/// Iteration-0 VN-to-CN densities: the quantized channel LLR on transmitted
/// columns, a certain erasure on punctured ones.
pub fn de_init_protograph(b: &BaseMatrix, mu_ch: f64, sigma_ch: f64, a: f64) -> EdgeTypeDensities {
    let ch = de_init(mu_ch, sigma_ch, a);
    let mut out = EdgeTypeDensities::filled(b, TernaryDensity::ZERO);
    for (i, j) in b.edge_types() {
        out.values[i * b.cols() + j] = if b.is_punctured(j) {
            TernaryDensity::ERASED
        } else {
            ch
        };
    }
    out
}

/// CN update per edge type: an outgoing message on type `(i, j)` sees
/// `b_is - [s = j]` incoming messages of each type `(i, s)`.
pub fn proto_cn_update(b: &BaseMatrix, p: &EdgeTypeDensities) -> EdgeTypeDensities {
    let n0 = b.cols();
    let mut out = EdgeTypeDensities::filled(b, TernaryDensity::ZERO);
    for (i, j) in b.edge_types() {
        let terms = (0..n0).map(|s| {
            let k = b.get(i, s) - (s == j) as u32;
            let d = p.get(i, s);
            (d.p0, d.p_minus, k as f64)
        });
        let (e, diff) = check_products(terms);
        out.values[i * n0 + j] = TernaryDensity::new(e, 0.5 * diff).clamp();
    }
    out
}

/// Reliability weights `D` per edge type from the CN-to-VN densities,
/// with zeros where `b_ij = 0`. Also returns the number of clipped entries.
pub fn proto_weights(b: &BaseMatrix, q: &EdgeTypeDensities, d_max: f64) -> (Vec<f64>, usize) {
    let mut w = vec![0.0; b.rows() * b.cols()];
    let mut clipped = 0;
    for (i, j) in b.edge_types() {
        let (d, c) = clipped_reliability(q.get(i, j), d_max);
        w[i * b.cols() + j] = d;
        clipped += c as usize;
    }
    (w, clipped)
}

fn incoming_lattice(
    b: &BaseMatrix,
    q: &EdgeTypeDensities,
    w: &[f64],
    j: usize,
    exclude: Option<usize>,
) -> LlrLattice {
    let n0 = b.cols();
    let comps: Vec<(f64, u32, TernaryDensity)> = (0..b.rows())
        .map(|s| {
            let n = b.get(s, j) - (exclude == Some(s)) as u32;
            (w[s * n0 + j], n, q.get(s, j))
        })
        .collect();
    LlrLattice::build(&comps)
}

/// VN update per edge type with weights `w` (indexed like the edge types).
///
/// Transmitted VNs quantize `L_ch + sum`, punctured VNs quantize the
/// message sum alone.
pub fn proto_vn_update(
    b: &BaseMatrix,
    q: &EdgeTypeDensities,
    w: &[f64],
    mu_ch: f64,
    sigma_ch: f64,
    a: f64,
) -> EdgeTypeDensities {
    let n0 = b.cols();
    let mut out = EdgeTypeDensities::filled(b, TernaryDensity::ZERO);
    for (i, j) in b.edge_types() {
        let lat = incoming_lattice(b, q, w, j, Some(i));
        let d = if b.is_punctured(j) {
            TernaryDensity::new(lat.prob_between(-a, a), lat.prob_below(-a))
        } else {
            let (mut p0, mut pm) = (0.0, 0.0);
            for &(z, pr) in lat.points() {
                let upper = q_function((a + z + mu_ch) / sigma_ch);
                let lower = q_function((-a + z + mu_ch) / sigma_ch);
                p0 += pr * (lower - upper).max(0.0);
                pm += pr * upper;
            }
            TernaryDensity::new(p0, pm)
        };
        out.values[i * n0 + j] = d.clamp();
    }
    out
}

/// APP error probability per VN type, using every incoming message. Ties
/// of a punctured VN count as errors.
pub fn proto_app_update(
    b: &BaseMatrix,
    q: &EdgeTypeDensities,
    w: &[f64],
    mu_ch: f64,
    sigma_ch: f64,
) -> Vec<f64> {
    (0..b.cols())
        .map(|j| {
            let lat = incoming_lattice(b, q, w, j, None);
            if b.is_punctured(j) {
                lat.prob_between(f64::NEG_INFINITY, 0.0)
            } else {
                lat.points()
                    .iter()
                    .map(|&(z, pr)| pr * q_function((z + mu_ch) / sigma_ch))
                    .sum()
            }
        })
        .collect()
}

/// Runs protograph DE at `ebn0_db` (using the design rate of `b`) with
/// quantizer threshold `a`.
///
/// Converged iff every APP error probability is below `eps_target` within
/// `l_max` iterations.
pub fn de_run_protograph(b: &BaseMatrix, ebn0_db: f64, a: f64, cfg: &DeConfig) -> Result<DeReport> {
    let ch = ChannelParams::from_ebn0(ebn0_db, b.design_rate()?.as_f64())?;
    Ok(de_run_protograph_at(b, ch, a, cfg))
}

pub(crate) fn de_run_protograph_at(
    b: &BaseMatrix,
    ch: ChannelParams,
    a: f64,
    cfg: &DeConfig,
) -> DeReport {
    let (mu, sigma) = (ch.mu_ch, ch.sigma_ch);
    let (m0, n0) = (b.rows(), b.cols());
    let mut p = de_init_protograph(b, mu, sigma, a);
    let init_app = (0..n0)
        .map(|j| {
            if b.is_punctured(j) {
                1.0
            } else {
                q_function(mu / sigma)
            }
        })
        .collect();
    let initial = IterationRecord {
        p: p.values.clone(),
        q: EdgeTypeDensities::filled(b, TernaryDensity::ERASED).into_values(),
        p_app: init_app,
    };
    let mut trajectory = Vec::new();
    let mut weights = WeightSchedule::new(m0, n0, Vec::new()).expect("empty schedule");
    let mut clip_events = 0;
    let mut messages_converged_at = None;
    let mut app_converged_at = None;

    for l in 1..=cfg.l_max {
        let q = proto_cn_update(b, &p);
        let (w, clipped) = proto_weights(b, &q, cfg.d_max);
        clip_events += clipped;
        let next = proto_vn_update(b, &q, &w, mu, sigma, a);
        let app = proto_app_update(b, &q, &w, mu, sigma);
        weights.push_row(w);

        if messages_converged_at.is_none()
            && next
                .values
                .iter()
                .all(|d| d.p0 + d.p_minus < cfg.eps_target)
        {
            messages_converged_at = Some(l);
        }
        if app_converged_at.is_none() && app.iter().all(|&x| x < cfg.eps_target) {
            app_converged_at = Some(l);
        }
        let stalled = max_change(&next.values, &p.values) < FIXED_POINT_TOL;
        trajectory.push(IterationRecord {
            p: next.values.clone(),
            q: q.into_values(),
            p_app: app,
        });
        p = next;
        if cfg.stop_on_convergence && (app_converged_at.is_some() || stalled) {
            break;
        }
    }
    DeReport {
        converged: app_converged_at.is_some(),
        converged_at: app_converged_at,
        messages_converged_at,
        app_converged_at,
        iterations: trajectory.len(),
        initial,
        trajectory,
        weights,
        clip_events,
        channel: ch,
        a,
    }
}
