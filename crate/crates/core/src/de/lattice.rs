use super::TernaryDensity;

/// Points closer than this are merged.
pub const DEDUP_TOL: f64 = 1e-9;

fn factorials() -> &'static [f64] {
    use std::sync::OnceLock;
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut f = vec![1.0f64; 171];
        for k in 1..f.len() {
            f[k] = f[k - 1] * k as f64;
        }
        f
    })
}

/// Multinomial coefficient `n! / (u! v! (n-u-v)!)`.
#[inline]
pub(crate) fn trinomial(n: u32, u: u32, v: u32) -> f64 {
    let f = factorials();
    f[n as usize] / (f[u as usize] * f[v as usize] * f[(n - u - v) as usize])
}

fn powers(x: f64, n: u32) -> Vec<f64> {
    let mut p = Vec::with_capacity(n as usize + 1);
    let mut acc = 1.0;
    for _ in 0..=n {
        p.push(acc);
        acc *= x;
    }
    p
}

/// Distribution of `u - v`, where `u` and `v` count the `+1` and `-1`
/// messages among `n` independent messages with density `q`. Index `k + n`
/// holds `Pr{u - v = k}`, summed over the trinomial terms.
pub(crate) fn difference_pmf(n: u32, q: TernaryDensity) -> Vec<f64> {
    let plus = powers(q.p_plus(), n);
    let minus = powers(q.p_minus, n);
    let erased = powers(q.p0, n);
    let mut pmf = vec![0.0; 2 * n as usize + 1];
    for u in 0..=n {
        for v in 0..=n - u {
            let t = trinomial(n, u, v)
                * plus[u as usize]
                * minus[v as usize]
                * erased[(n - u - v) as usize];
            pmf[(u + n - v) as usize] += t;
        }
    }
    pmf
}

/// Exact discrete distribution of a weighted sum of ternary messages,
/// `sum_s w_s (u_s - v_s)`, as sorted `(value, probability)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrLattice {
    points: Vec<(f64, f64)>,
}

impl LlrLattice {
    /// The empty sum: a unit mass at zero.
    pub fn unit() -> Self {
        Self {
            points: vec![(0.0, 1.0)],
        }
    }

    /// Builds the lattice of `sum_s w_s (u_s - v_s)` where CN type `s`
    /// contributes `n_s` independent messages of density `q_s` and weight
    /// `w_s`. Components with `n_s = 0` are skipped.
    pub fn build(components: &[(f64, u32, TernaryDensity)]) -> Self {
        let mut lat = Self::unit();
        for &(w, n, q) in components {
            if n == 0 {
                continue;
            }
            let pmf = difference_pmf(n, q);
            lat = lat.convolve(w, n, &pmf);
        }
        lat
    }

    fn convolve(&self, w: f64, n: u32, pmf: &[f64]) -> Self {
        let mut pts = Vec::with_capacity(self.points.len() * pmf.len());
        for &(z, p) in &self.points {
            for (idx, &pk) in pmf.iter().enumerate() {
                if pk > 0.0 {
                    let k = idx as i64 - n as i64;
                    pts.push((z + w * k as f64, p * pk));
                }
            }
        }
        Self::dedup(pts)
    }

    fn dedup(mut pts: Vec<(f64, f64)>) -> Self {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        let mut anchor = f64::NEG_INFINITY;
        for (z, p) in pts {
            match out.last_mut() {
                Some(last) if z - anchor <= DEDUP_TOL => last.1 += p,
                _ => {
                    anchor = z;
                    out.push((z, p));
                }
            }
        }
        Self { points: out }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_probability(&self) -> f64 {
        self.points.iter().map(|p| p.1).sum()
    }

    /// `Pr{lo <= Z <= hi}` with boundaries widened by the dedup tolerance.
    pub fn prob_between(&self, lo: f64, hi: f64) -> f64 {
        self.points
            .iter()
            .filter(|(z, _)| *z >= lo - DEDUP_TOL && *z <= hi + DEDUP_TOL)
            .map(|p| p.1)
            .sum()
    }

    /// `Pr{Z < x}` (strict, beyond the dedup tolerance).
    pub fn prob_below(&self, x: f64) -> f64 {
        self.points
            .iter()
            .filter(|(z, _)| *z < x - DEDUP_TOL)
            .map(|p| p.1)
            .sum()
    }
}
