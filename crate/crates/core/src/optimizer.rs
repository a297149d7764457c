//! Differential-evolution search over base matrices.
//!
//! Candidates are scored by their decoding threshold after quantizer
//! optimisation. Ensembles without a positive typical minimum distance, or
//! whose induced unstructured distribution is unstable at the operating
//! point they compete at, are infeasible.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::ChannelParams;
use crate::de::{optimize_quantizer, stability_gamma, Ensemble, StabilityInputs, ThresholdConfig};
use crate::ensemble::{BaseMatrix, DegreeDistribution};
use crate::error::{Error, Result};
use crate::spectrum::typical_min_distance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Tmp,
    Bmp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub m0: usize,
    pub n0: usize,
    /// Largest base matrix entry `S`.
    pub max_entry: u32,
    /// Column-sum cap.
    pub max_vn_degree: u32,
    /// Punctured columns, fixed during the search.
    pub punctured: Vec<usize>,
    pub population_size: usize,
    pub generations: usize,
    /// Mutation factor `F`.
    pub f: f64,
    /// Crossover rate `CR`.
    pub cr: f64,
    pub seed: u64,
    pub target: Target,
    /// Quantizer thresholds tried per candidate. Ignored for BMP, which
    /// always uses `a = 0`.
    pub a_grid: Vec<f64>,
    /// Threshold budget used while searching.
    pub search: ThresholdConfig,
    /// Budget for re-scoring the elite.
    pub rescore: ThresholdConfig,
    /// Number of best distinct candidates re-scored at the end.
    pub elite: usize,
}

impl SearchConfig {
    /// Defaults for an `m0 x n0` search: population `10 m0 n0`, `F = 0.8`,
    /// `CR = 0.9`, `S = 20` for rates of at least 5/6 and 16 below.
    pub fn new(m0: usize, n0: usize, max_vn_degree: u32, target: Target) -> Self {
        let rate = 1.0 - m0 as f64 / n0 as f64;
        let search = ThresholdConfig {
            tol_db: 0.05,
            check_criteria: false,
            ..ThresholdConfig::with_l_max(50)
        };
        let rescore = ThresholdConfig {
            check_criteria: false,
            ..ThresholdConfig::with_l_max(200)
        };
        Self {
            m0,
            n0,
            max_entry: if rate >= 5.0 / 6.0 - 1e-12 { 20 } else { 16 },
            max_vn_degree,
            punctured: Vec::new(),
            population_size: 10 * m0 * n0,
            generations: 50,
            f: 0.8,
            cr: 0.9,
            seed: 1,
            target,
            a_grid: (1..=20).map(|k| 0.2 * k as f64).collect(),
            search,
            rescore,
            elite: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.m0 == 0 || self.n0 <= self.m0 {
            return bad("need 0 < m0 < n0");
        }
        if self.population_size < 4 {
            return bad("population_size must be at least 4");
        }
        if !(self.f > 0.0 && self.f <= 2.0) {
            return bad("F must lie in (0, 2]");
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return bad("CR must lie in [0, 1]");
        }
        if self.max_entry == 0 || self.max_vn_degree == 0 {
            return bad("max_entry and max_vn_degree must be positive");
        }
        if self.punctured.iter().any(|&j| j >= self.n0) {
            return bad("punctured column out of range");
        }
        if self.target == Target::Tmp
            && (self.a_grid.is_empty() || self.a_grid.iter().any(|&a| !(a >= 0.0)))
        {
            return bad("a_grid must be non-empty with a >= 0");
        }
        if self.elite == 0 {
            return bad("elite must be at least 1");
        }
        Ok(())
    }

    fn grid(&self) -> Vec<f64> {
        match self.target {
            Target::Tmp => self.a_grid.clone(),
            Target::Bmp => vec![0.0],
        }
    }
}

/// A scored base matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub base: BaseMatrix,
    /// Threshold in dB, `None` when infeasible or no threshold was found.
    pub threshold_db: Option<f64>,
    /// Quantizer threshold achieving `threshold_db`.
    pub a: Option<f64>,
    pub omega_star: Option<f64>,
    /// Smallest stability spectral radius over the quantizer grid, at the
    /// Eb/N0 the candidate was screened at.
    pub gamma: f64,
}

impl Candidate {
    pub fn is_feasible(&self) -> bool {
        self.threshold_db.is_some() && self.omega_star.is_some_and(|w| w > 0.0) && self.gamma < 1.0
    }

    /// Threshold, or infinity for infeasible candidates.
    pub fn fitness(&self) -> f64 {
        match self.threshold_db {
            Some(t) if self.is_feasible() => t,
            _ => f64::INFINITY,
        }
    }
}

/// One line of the generation log.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_threshold_db: f64,
    pub best_omega_star: Option<f64>,
    pub best: BaseMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Best candidate after re-scoring.
    pub best: Candidate,
    /// Re-scored elite, best first.
    pub elite: Vec<Candidate>,
    pub log: Vec<GenerationRecord>,
}

/// Generation log as CSV; matrices are flattened row-major, space separated.
pub fn log_to_csv(log: &[GenerationRecord]) -> String {
    let mut s = String::from("generation,best_threshold_db,best_omega_star,matrix\n");
    for r in log {
        let w = r.best_omega_star.map(|w| w.to_string()).unwrap_or_default();
        let m: Vec<String> = r.best.entries().iter().map(|e| e.to_string()).collect();
        let _ = writeln!(
            s,
            "{},{},{},{}",
            r.generation,
            r.best_threshold_db,
            w,
            m.join(" ")
        );
    }
    s
}

/// Edge-perspective `(lambda, rho)` induced by the column and row sums of
/// `b`.
pub fn induced_degree_distribution(b: &BaseMatrix) -> Result<DegreeDistribution> {
    b.validate()?;
    let e = b.num_edges() as f64;
    let mut lambda: HashMap<u32, f64> = HashMap::new();
    for j in 0..b.cols() {
        let d = b.col_degree(j);
        *lambda.entry(d).or_default() += d as f64 / e;
    }
    let mut rho: HashMap<u32, f64> = HashMap::new();
    for i in 0..b.rows() {
        let d = b.row_degree(i);
        *rho.entry(d).or_default() += d as f64 / e;
    }
    DegreeDistribution::new(lambda.into_iter().collect(), rho.into_iter().collect())
}

/// Smallest stability spectral radius of the induced distribution over
/// `a_grid` at `ebn0_db`.
pub fn min_gamma(dd: &DegreeDistribution, rate: f64, ebn0_db: f64, a_grid: &[f64]) -> Result<f64> {
    let ch = ChannelParams::from_ebn0(ebn0_db, rate)?;
    Ok(a_grid
        .iter()
        .map(|&a| stability_gamma(&StabilityInputs::from_ensemble(dd, &ch, a)))
        .fold(f64::INFINITY, f64::min))
}

/// Round half to even, clip to `[0, S]`, then lower the largest entries of
/// any column whose sum exceeds the cap.
pub fn repair(x: &[f64], m0: usize, n0: usize, max_entry: u32, max_vn_degree: u32) -> Vec<u32> {
    let mut v: Vec<u32> = x
        .iter()
        .map(|&e| e.round_ties_even().clamp(0.0, max_entry as f64) as u32)
        .collect();
    for j in 0..n0 {
        loop {
            let sum: u32 = (0..m0).map(|i| v[i * n0 + j]).sum();
            if sum <= max_vn_degree {
                break;
            }
            let i = (0..m0)
                .max_by_key(|&i| (v[i * n0 + j], std::cmp::Reverse(i)))
                .unwrap();
            v[i * n0 + j] -= 1;
        }
    }
    v
}

#[derive(Debug, Clone)]
struct Scored {
    threshold_db: Option<f64>,
    a: Option<f64>,
}

/// Candidate evaluation with memoised thresholds and distances.
struct Evaluator<'a> {
    cfg: &'a SearchConfig,
    grid: Vec<f64>,
    thresholds: Mutex<HashMap<Vec<u32>, Scored>>,
    distances: Mutex<HashMap<Vec<u32>, Option<f64>>>,
}

impl<'a> Evaluator<'a> {
    fn new(cfg: &'a SearchConfig) -> Self {
        Self {
            cfg,
            grid: cfg.grid(),
            thresholds: Mutex::default(),
            distances: Mutex::default(),
        }
    }

    fn infeasible(base: BaseMatrix, gamma: f64) -> Candidate {
        Candidate {
            base,
            threshold_db: None,
            a: None,
            omega_star: None,
            gamma,
        }
    }

    fn threshold(&self, base: &BaseMatrix, tc: &ThresholdConfig) -> Scored {
        let key = base.entries().to_vec();
        if let Some(s) = self.thresholds.lock().unwrap().get(&key) {
            return s.clone();
        }
        let s = match optimize_quantizer(&Ensemble::Protograph(base.clone()), &self.grid, tc) {
            Ok(q) => Scored {
                threshold_db: Some(q.threshold_db),
                a: Some(q.a),
            },
            Err(_) => Scored {
                threshold_db: None,
                a: None,
            },
        };
        self.thresholds.lock().unwrap().insert(key, s.clone());
        s
    }

    fn distance(&self, base: &BaseMatrix) -> Option<f64> {
        let key = base.entries().to_vec();
        if let Some(&w) = self.distances.lock().unwrap().get(&key) {
            return w;
        }
        let w = typical_min_distance(base).ok().flatten();
        self.distances.lock().unwrap().insert(key, w);
        w
    }

    /// Scores `entries`. `bar` is the fitness the candidate has to reach;
    /// candidates that are unstable there for every quantizer, or whose
    /// threshold misses it, are not checked for distance.
    fn evaluate(&self, entries: &[u32], bar: f64) -> Candidate {
        let rows: Vec<Vec<u32>> = entries.chunks(self.cfg.n0).map(|r| r.to_vec()).collect();
        let base = match BaseMatrix::new(rows, &self.cfg.punctured) {
            Ok(b) => b,
            Err(_) => {
                let b = BaseMatrix::unchecked(
                    entries.chunks(self.cfg.n0).map(|r| r.to_vec()).collect(),
                    &self.cfg.punctured,
                )
                .expect("shape is consistent");
                return Self::infeasible(b, f64::INFINITY);
            }
        };
        self.score(base, bar, &self.cfg.search)
    }

    fn score(&self, base: BaseMatrix, bar: f64, tc: &ThresholdConfig) -> Candidate {
        let Ok(rate) = base.design_rate().map(|r| r.as_f64()) else {
            return Self::infeasible(base, f64::INFINITY);
        };
        let screen_db = if bar.is_finite() { bar } else { tc.scan_hi };
        let gamma = induced_degree_distribution(&base)
            .and_then(|dd| min_gamma(&dd, rate, screen_db, &self.grid))
            .unwrap_or(f64::INFINITY);
        if gamma >= 1.0 {
            return Self::infeasible(base, gamma);
        }
        let s = self.threshold(&base, tc);
        let Some(t) = s.threshold_db else {
            return Self::infeasible(base, gamma);
        };
        if t > bar {
            // cannot win; the distance is irrelevant
            return Candidate {
                base,
                threshold_db: Some(t),
                a: s.a,
                omega_star: None,
                gamma,
            };
        }
        let omega_star = self.distance(&base);
        Candidate {
            base,
            threshold_db: Some(t),
            a: s.a,
            omega_star,
            gamma,
        }
    }
}

fn sort_by_fitness(c: &mut [Candidate]) {
    c.sort_by(|x, y| {
        x.fitness()
            .total_cmp(&y.fitness())
            .then_with(|| x.base.entries().cmp(y.base.entries()))
    });
}

fn rescore(ev: &Evaluator, pool: Vec<Candidate>, k: usize) -> Result<Vec<Candidate>> {
    let mut seen = std::collections::HashSet::new();
    let mut elite: Vec<Candidate> = pool
        .into_iter()
        .filter(|c| c.is_feasible() && seen.insert(c.base.entries().to_vec()))
        .take(k)
        .collect();
    if elite.is_empty() {
        return Err(Error::NoFeasibleCandidate);
    }
    let fresh = Evaluator::new(ev.cfg);
    *fresh.distances.lock().unwrap() = ev.distances.lock().unwrap().clone();
    let mut out: Vec<Candidate> = elite
        .par_drain(..)
        .map(|c| fresh.score(c.base, f64::INFINITY, &ev.cfg.rescore))
        .collect();
    sort_by_fitness(&mut out);
    if !out[0].is_feasible() {
        return Err(Error::NoFeasibleCandidate);
    }
    Ok(out)
}

/// Evaluates a fixed candidate set and returns the re-scored elite, best
/// first.
pub fn select_best(candidates: &[BaseMatrix], cfg: &SearchConfig) -> Result<SearchOutcome> {
    cfg.validate()?;
    let ev = Evaluator::new(cfg);
    let mut scored: Vec<Candidate> = candidates
        .par_iter()
        .map(|b| ev.score(b.clone(), f64::INFINITY, &cfg.search))
        .collect();
    sort_by_fitness(&mut scored);
    let elite = rescore(&ev, scored, cfg.elite)?;
    Ok(SearchOutcome {
        best: elite[0].clone(),
        elite,
        log: Vec::new(),
    })
}

/// DE/rand/1/bin over real-relaxed base matrix entries.
pub fn evolve(cfg: &SearchConfig) -> Result<SearchOutcome> {
    cfg.validate()?;
    let dim = cfg.m0 * cfg.n0;
    let np = cfg.population_size;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ev = Evaluator::new(cfg);
    let fix = |x: &[f64]| repair(x, cfg.m0, cfg.n0, cfg.max_entry, cfg.max_vn_degree);

    // entries start small enough that column sums average half the cap
    let init_hi = (cfg.max_vn_degree as f64 / cfg.m0 as f64).min(cfg.max_entry as f64);
    let mut pop: Vec<Vec<u32>> = (0..np)
        .map(|_| {
            fix(&(0..dim)
                .map(|_| rng.random_range(0.0..=init_hi))
                .collect::<Vec<_>>())
        })
        .collect();
    let mut scored: Vec<Candidate> = pop
        .par_iter()
        .map(|x| ev.evaluate(x, f64::INFINITY))
        .collect();

    let mut hall: Vec<Candidate> = Vec::new();
    let mut log = Vec::with_capacity(cfg.generations + 1);
    let mut record = |generation: usize, scored: &[Candidate], hall: &mut Vec<Candidate>| {
        hall.extend(scored.iter().filter(|c| c.is_feasible()).cloned());
        sort_by_fitness(hall);
        let mut seen = std::collections::HashSet::new();
        hall.retain(|c| seen.insert(c.base.entries().to_vec()));
        hall.truncate(cfg.elite.max(1) * 4);
        let best = scored
            .iter()
            .min_by(|x, y| x.fitness().total_cmp(&y.fitness()))
            .unwrap();
        log::info!("generation {generation}: best {:.3} dB", best.fitness());
        log.push(GenerationRecord {
            generation,
            best_threshold_db: best.fitness(),
            best_omega_star: best.omega_star,
            best: best.base.clone(),
        });
    };
    record(0, &scored, &mut hall);

    for generation in 1..=cfg.generations {
        let trials: Vec<Vec<u32>> = (0..np)
            .map(|i| {
                let mut pick = || loop {
                    let r = rng.random_range(0..np);
                    if r != i {
                        break r;
                    }
                };
                let r1 = pick();
                let r2 = loop {
                    let r = pick();
                    if r != r1 {
                        break r;
                    }
                };
                let r3 = loop {
                    let r = pick();
                    if r != r1 && r != r2 {
                        break r;
                    }
                };
                let jrand = rng.random_range(0..dim);
                let trial: Vec<f64> = (0..dim)
                    .map(|k| {
                        if k == jrand || rng.random::<f64>() < cfg.cr {
                            pop[r1][k] as f64 + cfg.f * (pop[r2][k] as f64 - pop[r3][k] as f64)
                        } else {
                            pop[i][k] as f64
                        }
                    })
                    .collect();
                fix(&trial)
            })
            .collect();
        let challengers: Vec<Candidate> = trials
            .par_iter()
            .zip(&scored)
            .map(|(x, target)| ev.evaluate(x, target.fitness()))
            .collect();
        for (i, c) in challengers.into_iter().enumerate() {
            if c.fitness() <= scored[i].fitness() {
                pop[i] = trials[i].clone();
                scored[i] = c;
            }
        }
        record(generation, &scored, &mut hall);
    }

    let elite = rescore(&ev, hall, cfg.elite)?;
    Ok(SearchOutcome {
        best: elite[0].clone(),
        elite,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn induced_regular() {
        let b = BaseMatrix::new(vec![vec![3, 3]], &[]).unwrap();
        let dd = induced_degree_distribution(&b).unwrap();
        assert_eq!(dd.lambda(), &[(3, 1.0)]);
        assert_eq!(dd.rho(), &[(6, 1.0)]);
    }

    #[test]
    fn induced_from_column_sums() {
        let b = BaseMatrix::new(
            vec![vec![2, 3, 1, 4, 3, 5, 4, 3], vec![1, 1, 7, 0, 1, 6, 0, 1]],
            &[],
        )
        .unwrap();
        let dd = induced_degree_distribution(&b).unwrap();
        // column sums 3 4 8 4 4 11 4 4, 42 edges
        assert!((dd.lambda_coeff(3) - 3.0 / 42.0).abs() < 1e-15);
        assert!((dd.lambda_coeff(4) - 20.0 / 42.0).abs() < 1e-15);
        assert!((dd.lambda_coeff(8) - 8.0 / 42.0).abs() < 1e-15);
        assert!((dd.lambda_coeff(11) - 11.0 / 42.0).abs() < 1e-15);
        assert_eq!(dd.lambda_coeff(2), 0.0);
        assert!((dd.rho_coeff(25) - 25.0 / 42.0).abs() < 1e-15);
        assert!((dd.rho_coeff(17) - 17.0 / 42.0).abs() < 1e-15);
    }

    #[test]
    fn repair_rounds_clips_and_caps() {
        assert_eq!(
            repair(&[0.5, 1.5, 2.5, -1.0], 1, 4, 4, 20),
            vec![0, 2, 2, 0]
        );
        assert_eq!(repair(&[9.0, 3.2], 1, 2, 4, 20), vec![4, 3]);
        // column 0 sums to 12 > 8: lower the largest entries first
        assert_eq!(repair(&[6.0, 1.0, 6.0, 1.0], 2, 2, 16, 8), vec![4, 1, 4, 1]);
        assert_eq!(repair(&[7.0, 0.0, 2.0, 0.0], 2, 2, 16, 8), vec![6, 0, 2, 0]);
    }

    #[test]
    fn config_checks() {
        let mut c = SearchConfig::new(1, 2, 20, Target::Tmp);
        assert!(c.validate().is_ok());
        c.population_size = 3;
        assert!(c.validate().is_err());
        let mut c = SearchConfig::new(1, 2, 20, Target::Tmp);
        c.f = 0.0;
        assert!(c.validate().is_err());
        let mut c = SearchConfig::new(1, 2, 20, Target::Tmp);
        c.cr = 1.5;
        assert!(c.validate().is_err());
        assert_eq!(SearchConfig::new(2, 8, 12, Target::Tmp).max_entry, 16);
        assert_eq!(SearchConfig::new(2, 12, 12, Target::Tmp).max_entry, 20);
    }

    #[test]
    fn unstable_candidate_is_screened_out() {
        // all degree-2 columns: gamma = rho'(1) at any SNR
        let b = BaseMatrix::new(vec![vec![1, 1, 1, 1], vec![1, 1, 1, 1]], &[]).unwrap();
        let cfg = SearchConfig::new(2, 4, 20, Target::Tmp);
        let ev = Evaluator::new(&cfg);
        let c = ev.score(b, f64::INFINITY, &cfg.search);
        assert!(c.gamma >= 1.0);
        assert!(!c.is_feasible());
        assert!(
            ev.thresholds.lock().unwrap().is_empty(),
            "threshold must not be computed"
        );
    }

    #[test]
    fn log_csv_layout() {
        let b = BaseMatrix::new(vec![vec![3, 3]], &[]).unwrap();
        let log = vec![GenerationRecord {
            generation: 0,
            best_threshold_db: 1.5,
            best_omega_star: Some(0.02),
            best: b,
        }];
        assert_eq!(
            log_to_csv(&log),
            "generation,best_threshold_db,best_omega_star,matrix\n0,1.5,0.02,3 3\n"
        );
    }
}
