//! Per-iteration, per-edge-type decoder weights `D_CV`.
//!
//! Text layout: one row per iteration, each row holding `m0 * n0` numbers.
//! Column `i * n0 + j` (0-based) is the weight on edges between CN type `i`
//! and VN type `j`; entries are zero exactly where `b_ij = 0`.

use std::fmt::Write as _;

use crate::ensemble::BaseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSchedule {
    m0: usize,
    n0: usize,
    rows: Vec<Vec<f64>>,
}

impl WeightSchedule {
    pub fn new(m0: usize, n0: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        for (l, r) in rows.iter().enumerate() {
            if r.len() != m0 * n0 {
                return Err(Error::ScheduleMismatch(format!(
                    "row {} has {} entries, expected {}",
                    l + 1,
                    r.len(),
                    m0 * n0
                )));
            }
            if let Some(w) = r.iter().find(|w| !w.is_finite() || **w < 0.0) {
                return Err(Error::ScheduleMismatch(format!(
                    "row {} has invalid weight {w}",
                    l + 1
                )));
            }
        }
        Ok(Self { m0, n0, rows })
    }

    /// Degenerate schedule for unstructured graphs: one scalar per iteration
    /// applied to every edge.
    pub fn scalar(per_iteration: Vec<f64>) -> Result<Self> {
        Self::new(1, 1, per_iteration.into_iter().map(|w| vec![w]).collect())
    }

    /// Same weight on every edge type present in `b`, for every iteration.
    pub fn constant(b: &BaseMatrix, weight: f64, iterations: usize) -> Self {
        let row: Vec<f64> = b
            .entries()
            .iter()
            .map(|&e| if e == 0 { 0.0 } else { weight })
            .collect();
        Self {
            m0: b.rows(),
            n0: b.cols(),
            rows: vec![row; iterations],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m0, self.n0)
    }

    pub fn is_scalar(&self) -> bool {
        self.m0 * self.n0 == 1
    }

    pub fn iterations(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Weights of iteration `l` (1-based), indexed by edge type.
    pub fn row(&self, l: usize) -> &[f64] {
        &self.rows[l - 1]
    }

    /// Weight for CN type `i`, VN type `j` at iteration `l` (1-based).
    pub fn weight(&self, l: usize, i: usize, j: usize) -> f64 {
        if self.is_scalar() {
            self.rows[l - 1][0]
        } else {
            self.rows[l - 1][i * self.n0 + j]
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.m0 * self.n0);
        self.rows.push(row);
    }

    pub fn truncated(&self, iterations: usize) -> Self {
        Self {
            m0: self.m0,
            n0: self.n0,
            rows: self.rows[..iterations.min(self.rows.len())].to_vec(),
        }
    }

    /// Checks that the schedule fits `b`: matching dimensions and zeros
    /// exactly where `b_ij = 0`. Scalar schedules fit any matrix.
    pub fn check_against(&self, b: &BaseMatrix) -> Result<()> {
        if self.is_scalar() {
            return Ok(());
        }
        if (self.m0, self.n0) != (b.rows(), b.cols()) {
            return Err(Error::ScheduleMismatch(format!(
                "schedule is {}x{}, base matrix is {}x{}",
                self.m0,
                self.n0,
                b.rows(),
                b.cols()
            )));
        }
        for (l, r) in self.rows.iter().enumerate() {
            for (k, (&w, &e)) in r.iter().zip(b.entries()).enumerate() {
                if (e == 0) != (w == 0.0) {
                    return Err(Error::ScheduleMismatch(format!(
                        "row {}: column {} (CN type {}, VN type {}) has weight {w} but b = {e}",
                        l + 1,
                        k,
                        k / self.n0,
                        k % self.n0
                    )));
                }
            }
        }
        Ok(())
    }

    /// Parses the text layout for base matrix `b`.
    ///
    /// The zero pattern of every row must coincide with the zero entries of
    /// `b` under the `i * n0 + j` layout. A file whose zeros only line up
    /// under the transposed `j * m0 + i` reading is rejected as ambiguous.
    pub fn parse(text: &str, b: &BaseMatrix) -> Result<Self> {
        let (m0, n0) = (b.rows(), b.cols());
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(|c: char| c.is_whitespace() || c == ',' || c == '&')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>().map_err(|_| Error::Parse {
                        line: ln + 1,
                        msg: format!("bad number `{t}`"),
                    })
                })
                .collect::<Result<_>>()?;
            if row.len() != m0 * n0 {
                return Err(Error::Parse {
                    line: ln + 1,
                    msg: format!("expected {} weights (m0*n0), found {}", m0 * n0, row.len()),
                });
            }
            rows.push(row);
        }
        let s = Self::new(m0, n0, rows)?;
        if let Err(e) = s.check_against(b) {
            let transposed_fits = s.rows.iter().all(|r| {
                (0..m0).all(|i| (0..n0).all(|j| (b.get(i, j) == 0) == (r[j * m0 + i] == 0.0)))
            });
            if transposed_fits && m0 != n0 {
                return Err(Error::ScheduleMismatch(
                    "zero pattern only matches the transposed column layout; refusing ambiguous file".into(),
                ));
            }
            return Err(e);
        }
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|w| format!("{w:.6}")).collect();
            let _ = writeln!(s, "{}", cells.join(" "));
        }
        s
    }
}
