//! Ensemble descriptions: edge-perspective degree distributions for
//! unstructured ensembles and base matrices for protograph ensembles.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-12;

/// Edge-perspective degree distribution pair `(lambda, rho)`.
///
/// Stored sparsely as `(degree, fraction)` pairs, sorted by degree.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    lambda: Vec<(u32, f64)>,
    rho: Vec<(u32, f64)>,
}

fn check_poly(name: &str, coeffs: &mut Vec<(u32, f64)>) -> Result<()> {
    if coeffs.is_empty() {
        return Err(Error::DegreeDistribution(format!("{name} is empty")));
    }
    let mut seen = BTreeSet::new();
    for &(d, f) in coeffs.iter() {
        if d == 0 {
            return Err(Error::DegreeDistribution(format!("{name} has degree 0")));
        }
        if !seen.insert(d) {
            return Err(Error::DegreeDistribution(format!(
                "{name} repeats degree {d}"
            )));
        }
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::DegreeDistribution(format!(
                "{name} fraction {f} for degree {d} outside [0,1]"
            )));
        }
    }
    let sum: f64 = coeffs.iter().map(|c| c.1).sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(Error::DegreeDistribution(format!("{name} sums to {sum}")));
    }
    coeffs.retain(|c| c.1 > 0.0);
    coeffs.sort_by_key(|c| c.0);
    Ok(())
}

impl DegreeDistribution {
    pub fn new(mut lambda: Vec<(u32, f64)>, mut rho: Vec<(u32, f64)>) -> Result<Self> {
        check_poly("lambda", &mut lambda)?;
        check_poly("rho", &mut rho)?;
        Ok(Self { lambda, rho })
    }

    /// `(dv, dc)` regular ensemble: `lambda(x) = x^(dv-1)`, `rho(x) = x^(dc-1)`.
    pub fn regular(dv: u32, dc: u32) -> Result<Self> {
        if dv < 2 || dc < 2 {
            return Err(Error::DegreeDistribution(format!(
                "regular ensemble needs dv >= 2 and dc >= 2, got ({dv}, {dc})"
            )));
        }
        Self::new(vec![(dv, 1.0)], vec![(dc, 1.0)])
    }

    pub fn lambda(&self) -> &[(u32, f64)] {
        &self.lambda
    }

    pub fn rho(&self) -> &[(u32, f64)] {
        &self.rho
    }

    /// Fraction of edges attached to VNs of degree `d`.
    pub fn lambda_coeff(&self, d: u32) -> f64 {
        self.lambda.iter().find(|c| c.0 == d).map_or(0.0, |c| c.1)
    }

    pub fn rho_coeff(&self, d: u32) -> f64 {
        self.rho.iter().find(|c| c.0 == d).map_or(0.0, |c| c.1)
    }

    pub fn lambda_at(&self, x: f64) -> f64 {
        self.lambda
            .iter()
            .map(|&(d, f)| f * x.powi(d as i32 - 1))
            .sum()
    }

    pub fn rho_at(&self, x: f64) -> f64 {
        self.rho
            .iter()
            .map(|&(d, f)| f * x.powi(d as i32 - 1))
            .sum()
    }

    /// `rho'(1) = sum_i rho_i (i - 1)`.
    pub fn rho_prime_one(&self) -> f64 {
        self.rho.iter().map(|&(d, f)| f * (d as f64 - 1.0)).sum()
    }

    /// Design rate `1 - (sum rho_i/i) / (sum lambda_j/j)`.
    pub fn design_rate(&self) -> f64 {
        let vl: f64 = self.lambda.iter().map(|&(d, f)| f / d as f64).sum();
        let cl: f64 = self.rho.iter().map(|&(d, f)| f / d as f64).sum();
        1.0 - cl / vl
    }
}

/// Reduced fraction, used for design rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Self {
        let g = gcd(num, den).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Self {
            num: s * num / g,
            den: s * den / g,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Protograph base matrix `B` (`m0 x n0`, entries in `0..=S`) with optional
/// punctured (state) columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BaseMatrix {
    m0: usize,
    n0: usize,
    entries: Vec<u32>,
    punctured: Vec<bool>,
}

impl BaseMatrix {
    /// Builds and validates a base matrix from rows.
    pub fn new(rows: Vec<Vec<u32>>, punctured: &[usize]) -> Result<Self> {
        let b = Self::unchecked(rows, punctured)?;
        b.validate()?;
        Ok(b)
    }

    /// Builds a base matrix without the row/column/rate checks. Only the
    /// shape is checked.
    pub fn unchecked(rows: Vec<Vec<u32>>, punctured: &[usize]) -> Result<Self> {
        let m0 = rows.len();
        if m0 == 0 {
            return Err(Error::BaseMatrix("no rows".into()));
        }
        let n0 = rows[0].len();
        if n0 == 0 {
            return Err(Error::BaseMatrix("no columns".into()));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n0) {
            return Err(Error::BaseMatrix(format!(
                "row {i} has {} entries, expected {n0}",
                r.len()
            )));
        }
        let mut flags = vec![false; n0];
        for &j in punctured {
            if j >= n0 {
                return Err(Error::BaseMatrix(format!(
                    "punctured column {j} out of range"
                )));
            }
            flags[j] = true;
        }
        Ok(Self {
            m0,
            n0,
            entries: rows.into_iter().flatten().collect(),
            punctured: flags,
        })
    }

    /// Checks the ensemble invariants: no all-zero row or column and a design
    /// rate strictly inside `(0, 1)`.
    pub fn validate(&self) -> Result<()> {
        for i in 0..self.m0 {
            if self.row_degree(i) == 0 {
                return Err(Error::ZeroRow(i));
            }
        }
        for j in 0..self.n0 {
            if self.col_degree(j) == 0 {
                return Err(Error::ZeroColumn(j));
            }
        }
        let r = self.rate_fraction();
        if r.num <= 0 || r.num >= r.den {
            return Err(Error::RateOutOfRange {
                num: r.num,
                den: r.den,
            });
        }
        Ok(())
    }

    fn rate_fraction(&self) -> Rational {
        let tx = self.n0 as i64 - self.num_punctured() as i64;
        if tx <= 0 {
            return Rational {
                num: self.n0 as i64 - self.m0 as i64,
                den: tx,
            };
        }
        Rational::new(self.n0 as i64 - self.m0 as i64, tx)
    }

    /// `(n0 - m0) / (n0 - |punctured|)`.
    pub fn design_rate(&self) -> Result<Rational> {
        let r = self.rate_fraction();
        if r.den <= 0 || r.num <= 0 || r.num >= r.den {
            return Err(Error::RateOutOfRange {
                num: r.num,
                den: r.den,
            });
        }
        Ok(r)
    }

    /// Design rate as a float; panics only on a matrix that failed validation.
    pub fn rate(&self) -> f64 {
        self.rate_fraction().as_f64()
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.m0
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.n0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.n0 + j]
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.entries[i * self.n0..(i + 1) * self.n0]
    }

    pub fn row_degree(&self, i: usize) -> u32 {
        self.row(i).iter().sum()
    }

    pub fn col_degree(&self, j: usize) -> u32 {
        (0..self.m0).map(|i| self.get(i, j)).sum()
    }

    pub fn num_edges(&self) -> u32 {
        self.entries.iter().sum()
    }

    pub fn max_entry(&self) -> u32 {
        self.entries.iter().copied().max().unwrap_or(0)
    }

    #[inline]
    pub fn is_punctured(&self, j: usize) -> bool {
        self.punctured[j]
    }

    pub fn punctured_columns(&self) -> Vec<usize> {
        (0..self.n0).filter(|&j| self.punctured[j]).collect()
    }

    pub fn num_punctured(&self) -> usize {
        self.punctured.iter().filter(|&&p| p).count()
    }

    /// Number of transmitted (unpunctured) columns.
    pub fn transmitted_cols(&self) -> usize {
        self.n0 - self.num_punctured()
    }

    /// Edge types `(i, j)` with `b_ij != 0`, row-major.
    pub fn edge_types(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.m0)
            .flat_map(move |i| (0..self.n0).map(move |j| (i, j)))
            .filter(move |&(i, j)| self.get(i, j) != 0)
    }

    /// Applies a row and column permutation: row `i` of the result is row
    /// `row_perm[i]` of `self`, likewise for columns.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Self {
        let rows = row_perm
            .iter()
            .map(|&i| col_perm.iter().map(|&j| self.get(i, j)).collect())
            .collect();
        let punctured: Vec<usize> = (0..self.n0)
            .filter(|&k| self.punctured[col_perm[k]])
            .collect();
        Self::unchecked(rows, &punctured).expect("permutation keeps the shape")
    }

    /// Parses the text format: `m0 n0`, then `m0` rows of `n0` integers,
    /// then an optional `punctured: j1 j2 ...` line. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let (hl, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "empty input".into(),
        })?;
        let dims: Vec<usize> = parse_ints(hl, header)?;
        if dims.len() != 2 {
            return Err(Error::Parse {
                line: hl,
                msg: "header must be `m0 n0`".into(),
            });
        }
        let (m0, n0) = (dims[0], dims[1]);
        let mut rows = Vec::with_capacity(m0);
        let mut punctured = Vec::new();
        for (ln, l) in lines {
            if let Some(rest) = l.strip_prefix("punctured:") {
                punctured = parse_ints(ln, rest)?;
                continue;
            }
            if rows.len() == m0 {
                return Err(Error::Parse {
                    line: ln,
                    msg: "too many rows".into(),
                });
            }
            let row: Vec<i64> = parse_ints(ln, l)?;
            if row.len() != n0 {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("expected {n0} entries, found {}", row.len()),
                });
            }
            if let Some(v) = row.iter().find(|&&v| v < 0) {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("negative entry {v}"),
                });
            }
            rows.push(row.into_iter().map(|v| v as u32).collect());
        }
        if rows.len() != m0 {
            return Err(Error::Parse {
                line: 0,
                msg: format!("expected {m0} rows, found {}", rows.len()),
            });
        }
        Self::new(rows, &punctured)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.m0, self.n0);
        for i in 0..self.m0 {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        let p = self.punctured_columns();
        if !p.is_empty() {
            let cols: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            s.push_str(&format!("punctured: {}\n", cols.join(" ")));
        }
        s
    }
}

fn parse_ints<T: std::str::FromStr>(line: usize, s: &str) -> Result<Vec<T>> {
    s.split_whitespace()
        .map(|t| {
            t.parse::<T>().map_err(|_| Error::Parse {
                line,
                msg: format!("bad integer `{t}`"),
            })
        })
        .collect()
}

impl fmt::Display for BaseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rate_two_thirds_fixture_is_valid() {
        let b = BaseMatrix::new(vec![vec![3, 4, 3, 7, 3, 1], vec![0, 0, 1, 8, 1, 3]], &[]).unwrap();
        assert_eq!(b.design_rate().unwrap(), Rational::new(2, 3));
    }

    #[test]
    fn rate_three_quarters_fixture_is_valid() {
        let b = BaseMatrix::new(
            vec![vec![2, 3, 1, 4, 3, 5, 4, 3], vec![1, 1, 7, 0, 1, 6, 0, 1]],
            &[],
        )
        .unwrap();
        assert_eq!(b.design_rate().unwrap(), Rational::new(3, 4));
    }

    #[test]
    fn zero_column_is_rejected() {
        assert_eq!(
            BaseMatrix::new(vec![vec![0, 3]], &[]),
            Err(Error::ZeroColumn(0))
        );
    }

    #[test]
    fn zero_row_is_rejected() {
        assert_eq!(
            BaseMatrix::new(vec![vec![1, 3, 2], vec![0, 0, 0]], &[]),
            Err(Error::ZeroRow(1))
        );
    }

    #[test]
    fn rate_out_of_range_is_rejected() {
        // square: rate 0
        assert!(matches!(
            BaseMatrix::new(vec![vec![1, 1], vec![1, 1]], &[]),
            Err(Error::RateOutOfRange { .. })
        ));
    }

    #[test]
    fn punctured_rate() {
        let b = BaseMatrix::new(
            vec![
                vec![1, 2, 0, 0, 1],
                vec![0, 3, 1, 1, 0],
                vec![0, 1, 2, 1, 1],
            ],
            &[1],
        )
        .unwrap();
        assert_eq!(b.design_rate().unwrap(), Rational::new(1, 2));
    }

    #[test]
    fn simple_rates() {
        let b = BaseMatrix::new(vec![vec![1; 8], vec![1; 8]], &[]).unwrap();
        assert_eq!(b.design_rate().unwrap(), Rational::new(3, 4));
        let b = BaseMatrix::new(vec![vec![1; 6], vec![1; 6]], &[]).unwrap();
        assert_eq!(b.design_rate().unwrap(), Rational::new(2, 3));
    }

    #[test]
    fn regular_distribution() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        assert_eq!(dd.lambda_coeff(3), 1.0);
        assert_eq!(dd.rho_coeff(6), 1.0);
        assert_eq!(dd.rho_prime_one(), 5.0);
        let dd = DegreeDistribution::regular(2, 4).unwrap();
        assert_eq!(dd.lambda_coeff(2), 1.0);
        assert_eq!(dd.rho_coeff(4), 1.0);
        assert!(DegreeDistribution::regular(1, 4).is_err());
    }

    #[test]
    fn distribution_invariants() {
        assert!(DegreeDistribution::new(vec![(2, 0.5), (3, 0.4)], vec![(6, 1.0)]).is_err());
        assert!(DegreeDistribution::new(vec![(2, 0.5), (2, 0.5)], vec![(6, 1.0)]).is_err());
        assert!(DegreeDistribution::new(vec![(0, 1.0)], vec![(6, 1.0)]).is_err());
        let dd = DegreeDistribution::new(vec![(3, 0.5), (2, 0.5)], vec![(6, 1.0)]).unwrap();
        assert_eq!(dd.lambda()[0].0, 2);
    }

    #[test]
    fn text_round_trip_with_comments() {
        let text = "# rate 1/2\n3 5\n1 2 0 0 1\n0 3 1 1 0 # second\n0 1 2 1 1\npunctured: 1\n";
        let b = BaseMatrix::parse(text).unwrap();
        assert_eq!(b.punctured_columns(), vec![1]);
        assert_eq!(BaseMatrix::parse(&b.to_text()).unwrap(), b);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            BaseMatrix::parse("1 2\n-1 3\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            BaseMatrix::parse("2 2\n1 3\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            BaseMatrix::parse("1 2\n1 3 4\n"),
            Err(Error::Parse { .. })
        ));
        assert_eq!(BaseMatrix::parse("1 2\n0 3\n"), Err(Error::ZeroColumn(0)));
    }

    proptest! {
        #[test]
        fn rate_invariant_under_permutation(
            seed in any::<u64>(),
            m0 in 1usize..4,
            extra in 1usize..6,
        ) {
            use rand::{seq::SliceRandom, Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n0 = m0 + extra;
            let rows: Vec<Vec<u32>> =
                (0..m0).map(|_| (0..n0).map(|_| rng.random_range(1..5)).collect()).collect();
            let b = BaseMatrix::new(rows, &[]).unwrap();
            let mut rp: Vec<usize> = (0..m0).collect();
            let mut cp: Vec<usize> = (0..n0).collect();
            rp.shuffle(&mut rng);
            cp.shuffle(&mut rng);
            let p = b.permuted(&rp, &cp);
            prop_assert_eq!(p.design_rate().unwrap(), b.design_rate().unwrap());
        }
    }
}
