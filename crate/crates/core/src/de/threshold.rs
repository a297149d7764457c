use rayon::prelude::*;

use super::protograph::de_run_protograph_at;
use super::unstructured::de_run_unstructured_at;
use super::{DeConfig, DeReport};
use crate::channel::ChannelParams;
use crate::ensemble::{BaseMatrix, DegreeDistribution};
use crate::error::{Error, Result};

/// Ensemble analysed by DE.
#[derive(Debug, Clone, PartialEq)]
pub enum Ensemble {
    Unstructured(DegreeDistribution),
    Protograph(BaseMatrix),
}

impl Ensemble {
    pub fn rate(&self) -> Result<f64> {
        match self {
            Ensemble::Unstructured(dd) => Ok(dd.design_rate()),
            Ensemble::Protograph(b) => Ok(b.design_rate()?.as_f64()),
        }
    }

    /// One DE run at `ebn0_db`.
    pub fn run(&self, ebn0_db: f64, a: f64, cfg: &DeConfig) -> Result<DeReport> {
        let ch = ChannelParams::from_ebn0(ebn0_db, self.rate()?)?;
        Ok(match self {
            Ensemble::Unstructured(dd) => de_run_unstructured_at(dd, ch, a, cfg),
            Ensemble::Protograph(b) => de_run_protograph_at(b, ch, a, cfg),
        })
    }
}

impl From<DegreeDistribution> for Ensemble {
    fn from(dd: DegreeDistribution) -> Self {
        Ensemble::Unstructured(dd)
    }
}

impl From<BaseMatrix> for Ensemble {
    fn from(b: BaseMatrix) -> Self {
        Ensemble::Protograph(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdConfig {
    pub de: DeConfig,
    /// Bisection tolerance in dB.
    pub tol_db: f64,
    /// Coarse scan grid `scan_lo, scan_lo + scan_step, ..., scan_hi`.
    pub scan_lo: f64,
    pub scan_hi: f64,
    pub scan_step: f64,
    /// Also locate the threshold under the secondary convergence criterion
    /// (messages for protographs, APP for unstructured ensembles) and report
    /// whether both agree within `tol_db`.
    pub check_criteria: bool,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            de: DeConfig::default(),
            tol_db: 0.01,
            scan_lo: -1.0,
            scan_hi: 10.0,
            scan_step: 0.5,
            check_criteria: true,
        }
    }
}

impl ThresholdConfig {
    pub fn with_l_max(l_max: usize) -> Self {
        Self {
            de: DeConfig::with_l_max(l_max),
            ..Self::default()
        }
    }

    fn scan_points(&self) -> Vec<f64> {
        let n = ((self.scan_hi - self.scan_lo) / self.scan_step + 1e-9).floor() as usize;
        (0..=n)
            .map(|k| self.scan_lo + k as f64 * self.scan_step)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    /// Smallest converging Eb/N0 found (upper end of the final bracket).
    pub threshold_db: f64,
    /// Largest failing Eb/N0 found (lower end of the final bracket).
    pub failing_db: f64,
    pub a: f64,
    /// DE run at `threshold_db`.
    pub report: DeReport,
    /// `Some(true)` when the secondary criterion switches within the same
    /// bracket; `None` when not checked.
    pub criteria_agree: Option<bool>,
    /// Number of DE runs spent.
    pub evaluations: usize,
}

fn secondary_converged(e: &Ensemble, r: &DeReport) -> bool {
    match e {
        Ensemble::Unstructured(_) => r.app_converged_at.is_some(),
        Ensemble::Protograph(_) => r.messages_converged_at.is_some(),
    }
}

/// Decoding threshold of `ensemble` for quantizer threshold `a`: coarse scan
/// to bracket the transition, then bisection down to `tol_db`.
///
/// The converged indicator must be a step function over the scan grid;
/// otherwise [`Error::NonMonotone`] is returned. If even the lowest scan
/// point converges the scan is extended downwards.
pub fn threshold_search(
    ensemble: &Ensemble,
    a: f64,
    cfg: &ThresholdConfig,
) -> Result<ThresholdResult> {
    if !(cfg.tol_db > 0.0 && cfg.scan_step > 0.0 && cfg.scan_hi >= cfg.scan_lo) {
        return Err(Error::InvalidParameter(
            "threshold search needs tol_db > 0 and a non-empty scan".into(),
        ));
    }
    ensemble.rate()?;
    let mut evaluations = 0;
    let pts = cfg.scan_points();
    let converged: Vec<bool> = pts
        .par_iter()
        .map(|&x| ensemble.run(x, a, &cfg.de).map(|r| r.converged))
        .collect::<Result<_>>()?;
    evaluations += pts.len();

    let first = converged
        .iter()
        .position(|&c| c)
        .ok_or(Error::NoThreshold(cfg.scan_hi))?;
    if let Some(k) = converged[first..].iter().position(|&c| !c) {
        return Err(Error::NonMonotone {
            converged: pts[first],
            failed: pts[first + k],
        });
    }
    let (mut lo, mut hi) = if first > 0 {
        (pts[first - 1], pts[first])
    } else {
        let mut hi = pts[0];
        loop {
            let lo = hi - cfg.scan_step;
            if lo < -20.0 {
                return Err(Error::InvalidParameter(
                    "converges at every Eb/N0 down to -20 dB".into(),
                ));
            }
            evaluations += 1;
            if ensemble.run(lo, a, &cfg.de)?.converged {
                hi = lo;
            } else {
                break (lo, hi);
            }
        }
    };
    while hi - lo > cfg.tol_db {
        let mid = 0.5 * (lo + hi);
        evaluations += 1;
        if ensemble.run(mid, a, &cfg.de)?.converged {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let report = ensemble.run(hi, a, &cfg.de)?;
    evaluations += 1;

    let criteria_agree = if cfg.check_criteria {
        let full = DeConfig {
            stop_on_convergence: false,
            ..cfg.de
        };
        let at_hi = ensemble.run(hi, a, &full)?;
        let at_lo = ensemble.run(lo, a, &full)?;
        evaluations += 2;
        Some(secondary_converged(ensemble, &at_hi) && !secondary_converged(ensemble, &at_lo))
    } else {
        None
    };
    if criteria_agree == Some(false) {
        log::warn!("convergence criteria disagree near {hi:.3} dB (a = {a})");
    }
    Ok(ThresholdResult {
        threshold_db: hi,
        failing_db: lo,
        a,
        report,
        criteria_agree,
        evaluations,
    })
}

/// Result of [`optimize_quantizer`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerChoice {
    pub a: f64,
    pub threshold_db: f64,
    /// Threshold per grid point (`None` when no threshold was found).
    pub per_a: Vec<(f64, Option<f64>)>,
    pub best: ThresholdResult,
}

/// Grid search of the quantizer threshold `a` minimising the decoding
/// threshold; ties go to the smaller `a`.
///
/// After the first grid point the coarse scan is restricted to a window of
/// `+-window_db` around the previous threshold, falling back to the full
/// scan when that window does not bracket the transition.
pub fn optimize_quantizer(
    ensemble: &Ensemble,
    a_grid: &[f64],
    cfg: &ThresholdConfig,
) -> Result<QuantizerChoice> {
    if a_grid.is_empty() || a_grid.iter().any(|&a| !(a >= 0.0)) {
        return Err(Error::InvalidParameter(
            "quantizer grid must be non-empty with a >= 0".into(),
        ));
    }
    let window_db = 1.0;
    let inner = ThresholdConfig {
        check_criteria: false,
        ..*cfg
    };
    let mut per_a = Vec::with_capacity(a_grid.len());
    let mut best: Option<ThresholdResult> = None;
    let mut prev: Option<f64> = None;
    for &a in a_grid {
        let res = match prev {
            Some(t) => {
                let narrow = ThresholdConfig {
                    scan_lo: (t - window_db).max(cfg.scan_lo),
                    scan_hi: (t + window_db).min(cfg.scan_hi),
                    ..inner
                };
                match threshold_search(ensemble, a, &narrow) {
                    Ok(r) => Ok(r),
                    Err(Error::NoThreshold(_)) | Err(Error::NonMonotone { .. }) => {
                        threshold_search(ensemble, a, &inner)
                    }
                    Err(e) => Err(e),
                }
            }
            None => threshold_search(ensemble, a, &inner),
        };
        match res {
            Ok(r) => {
                log::debug!("a = {a:.3}: threshold {:.4} dB", r.threshold_db);
                per_a.push((a, Some(r.threshold_db)));
                prev = Some(r.threshold_db);
                if best
                    .as_ref()
                    .is_none_or(|b| r.threshold_db < b.threshold_db)
                {
                    best = Some(r);
                }
            }
            Err(Error::NoThreshold(_)) => per_a.push((a, None)),
            Err(e) => return Err(e),
        }
    }
    let mut best = best.ok_or(Error::NoThreshold(cfg.scan_hi))?;
    if cfg.check_criteria {
        best = threshold_search(ensemble, best.a, cfg)?;
    }
    Ok(QuantizerChoice {
        a: best.a,
        threshold_db: best.threshold_db,
        per_a,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scan_grid() {
        let cfg = ThresholdConfig {
            scan_lo: 0.0,
            scan_hi: 1.0,
            scan_step: 0.5,
            ..Default::default()
        };
        assert_eq!(cfg.scan_points(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn regular_threshold_is_bracketed() {
        let e = Ensemble::Unstructured(DegreeDistribution::regular(3, 6).unwrap());
        let cfg = ThresholdConfig::default();
        let r = threshold_search(&e, 1.0, &cfg).unwrap();
        assert!(r.threshold_db - r.failing_db <= cfg.tol_db);
        assert!(r.report.converged);
        assert!(!e.run(r.failing_db, 1.0, &cfg.de).unwrap().converged);
        // quantized decoding cannot beat the unquantized BP threshold (1.11 dB)
        assert!(r.threshold_db > 1.1, "{}", r.threshold_db);
    }

    #[test]
    fn argmin_over_grid() {
        let e = Ensemble::Unstructured(DegreeDistribution::regular(3, 6).unwrap());
        let cfg = ThresholdConfig {
            check_criteria: false,
            ..ThresholdConfig::with_l_max(100)
        };
        let grid = [0.0, 0.5, 1.0, 1.5];
        let q = optimize_quantizer(&e, &grid, &cfg).unwrap();
        for &(_, t) in &q.per_a {
            assert!(q.threshold_db <= t.unwrap());
        }
        let bmp = threshold_search(&e, 0.0, &cfg).unwrap();
        assert_eq!(q.per_a[0].1, Some(bmp.threshold_db));
        assert!(q.a > 0.0, "ternary messages should help: {:?}", q.per_a);
    }

    #[test]
    fn no_threshold_in_range() {
        let e = Ensemble::Unstructured(DegreeDistribution::regular(3, 6).unwrap());
        let cfg = ThresholdConfig {
            scan_lo: -1.0,
            scan_hi: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            threshold_search(&e, 1.0, &cfg),
            Err(Error::NoThreshold(_))
        ));
    }
}
