//! Lifting of base matrices into Tanner graphs: circulant PEG, random
//! permutation lifts, girth measurement and small-code GF(2) utilities.
//!
//! Circulant convention: an entry with shift `s` on edge type `(i, j)`
//! connects CN `i * Q + r` to VN `j * Q + ((r + s) mod Q)` for every
//! `r in 0..Q`.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ensemble::BaseMatrix;
use crate::error::{Error, Result};
use crate::graph::{Edge, TannerGraph};

/// Shift assignment of a quasi-cyclic lift.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CirculantLift {
    q: usize,
    m0: usize,
    n0: usize,
    /// Shifts per edge type `i * n0 + j`.
    shifts: Vec<Vec<u32>>,
    punctured: Vec<bool>,
}

impl CirculantLift {
    /// Builds a lift from explicit shifts (`shifts[i * n0 + j]` must hold
    /// `b_ij` distinct values below `q`).
    pub fn new(b: &BaseMatrix, q: usize, shifts: Vec<Vec<u32>>) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameter(
                "lifting factor must be >= 1".into(),
            ));
        }
        if shifts.len() != b.rows() * b.cols() {
            return Err(Error::LengthMismatch {
                expected: b.rows() * b.cols(),
                got: shifts.len(),
            });
        }
        for (i, j) in (0..b.rows()).flat_map(|i| (0..b.cols()).map(move |j| (i, j))) {
            let s = &shifts[i * b.cols() + j];
            if s.len() != b.get(i, j) as usize {
                return Err(Error::Lifting(format!(
                    "type ({i},{j}) has {} shifts, b = {}",
                    s.len(),
                    b.get(i, j)
                )));
            }
            let mut sorted = s.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != s.len() || s.iter().any(|&x| x as usize >= q) {
                return Err(Error::Lifting(format!(
                    "type ({i},{j}) needs distinct shifts below {q}: {s:?}"
                )));
            }
        }
        let punctured = (0..b.cols()).map(|j| b.is_punctured(j)).collect();
        Ok(Self {
            q,
            m0: b.rows(),
            n0: b.cols(),
            shifts,
            punctured,
        })
    }

    pub fn lifting_factor(&self) -> usize {
        self.q
    }

    pub fn shifts(&self, i: usize, j: usize) -> &[u32] {
        &self.shifts[i * self.n0 + j]
    }

    /// Block length `n0 * Q` (punctured columns included).
    pub fn block_length(&self) -> usize {
        self.n0 * self.q
    }

    /// The base matrix implied by the shift counts.
    pub fn base_matrix(&self) -> Result<BaseMatrix> {
        let rows = (0..self.m0)
            .map(|i| {
                (0..self.n0)
                    .map(|j| self.shifts(i, j).len() as u32)
                    .collect()
            })
            .collect();
        let punct: Vec<usize> = (0..self.n0).filter(|&j| self.punctured[j]).collect();
        BaseMatrix::new(rows, &punct)
    }

    pub fn to_graph(&self) -> TannerGraph {
        let q = self.q;
        let mut edges = Vec::with_capacity(self.shifts.iter().map(Vec::len).sum::<usize>() * q);
        for i in 0..self.m0 {
            for r in 0..q {
                for j in 0..self.n0 {
                    for &s in self.shifts(i, j) {
                        edges.push(Edge {
                            cn: (i * q + r) as u32,
                            vn: (j * q + (r + s as usize) % q) as u32,
                            kind: (i * self.n0 + j) as u32,
                        });
                    }
                }
            }
        }
        let vn_type = (0..self.n0 * q).map(|v| (v / q) as u32).collect();
        let punctured = (0..self.n0 * q).map(|v| self.punctured[v / q]).collect();
        TannerGraph::from_edges(
            self.n0 * q,
            self.m0 * q,
            edges,
            vn_type,
            punctured,
            (self.m0, self.n0),
        )
        .expect("shifts are in range")
    }

    /// Text form: header `Q m0 n0`, an optional `punctured:` line, then
    /// `i j s1 .. s_b` for every non-zero entry.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.q, self.m0, self.n0);
        let punct: Vec<String> = (0..self.n0)
            .filter(|&j| self.punctured[j])
            .map(|j| j.to_string())
            .collect();
        if !punct.is_empty() {
            let _ = writeln!(s, "punctured: {}", punct.join(" "));
        }
        for i in 0..self.m0 {
            for j in 0..self.n0 {
                let sh = self.shifts(i, j);
                if !sh.is_empty() {
                    let list: Vec<String> = sh.iter().map(|x| x.to_string()).collect();
                    let _ = writeln!(s, "{i} {j} {}", list.join(" "));
                }
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let nums = |ln: usize, l: &str| -> Result<Vec<usize>> {
            l.split_whitespace()
                .map(|t| {
                    t.parse::<usize>().map_err(|_| Error::Parse {
                        line: ln,
                        msg: format!("bad integer `{t}`"),
                    })
                })
                .collect()
        };
        let (ln, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty lift file".into(),
        })?;
        let h = nums(ln, header)?;
        if h.len() != 3 {
            return Err(Error::Parse {
                line: ln,
                msg: "header must be `Q m0 n0`".into(),
            });
        }
        let (q, m0, n0) = (h[0], h[1], h[2]);
        let mut shifts = vec![Vec::new(); m0 * n0];
        let mut punct = Vec::new();
        for (ln, l) in lines {
            if let Some(rest) = l.strip_prefix("punctured:") {
                punct = nums(ln, rest)?;
                continue;
            }
            let v = nums(ln, l)?;
            if v.len() < 3 || v[0] >= m0 || v[1] >= n0 {
                return Err(Error::Parse {
                    line: ln,
                    msg: "expected `i j s1 ..` within range".into(),
                });
            }
            shifts[v[0] * n0 + v[1]] = v[2..].iter().map(|&s| s as u32).collect();
        }
        let rows = (0..m0)
            .map(|i| (0..n0).map(|j| shifts[i * n0 + j].len() as u32).collect())
            .collect();
        let b = BaseMatrix::unchecked(rows, &punct)?;
        Self::new(&b, q, shifts)
    }
}

/// How PEG chooses among equally good shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    /// Smallest shift.
    Smallest,
    /// Uniformly at random from the seeded generator.
    Random,
}

/// BFS distances (in CN hops) from VN `(j, 0)` to every CN of type
/// `target` in the partial lift; `usize::MAX` when unreachable.
fn cn_distances(
    shifts: &[Vec<u32>],
    m0: usize,
    n0: usize,
    q: usize,
    j0: usize,
    target: usize,
) -> Vec<usize> {
    let mut vn_seen = vec![false; n0 * q];
    let mut cn_dist = vec![usize::MAX; m0 * q];
    let mut frontier = vec![j0 * q];
    vn_seen[j0 * q] = true;
    let mut depth = 0;
    while !frontier.is_empty() {
        let mut cns = Vec::new();
        for &v in &frontier {
            let (j, t) = (v / q, v % q);
            for i in 0..m0 {
                for &s in &shifts[i * n0 + j] {
                    let c = i * q + (t + q - s as usize) % q;
                    if cn_dist[c] == usize::MAX {
                        cn_dist[c] = depth;
                        cns.push(c);
                    }
                }
            }
        }
        let mut next = Vec::new();
        for &c in &cns {
            let (i, r) = (c / q, c % q);
            for j in 0..n0 {
                for &s in &shifts[i * n0 + j] {
                    let v = j * q + (r + s as usize) % q;
                    if !vn_seen[v] {
                        vn_seen[v] = true;
                        next.push(v);
                    }
                }
            }
        }
        frontier = next;
        depth += 1;
    }
    cn_dist[target * q..(target + 1) * q].to_vec()
}

/// Cycle lengths at or above this count as "long" for PEG decisions.
const PEG_HORIZON: usize = 12;

/// Shortest cycle through VN `(j0, 0)` in the lift given by `shifts`,
/// capped at `horizon`.
fn local_girth(
    shifts: &[Vec<u32>],
    m0: usize,
    n0: usize,
    q: usize,
    j0: usize,
    horizon: usize,
) -> usize {
    let nv = n0 * q;
    let mut dist = vec![u32::MAX; nv + m0 * q];
    let mut parent = vec![usize::MAX; nv + m0 * q];
    let root = j0 * q;
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    let mut best = horizon;
    let mut nbrs = Vec::new();
    while let Some(u) = queue.pop_front() {
        let du = dist[u] as usize;
        if 2 * du + 1 >= best {
            break;
        }
        nbrs.clear();
        if u < nv {
            let (j, t) = (u / q, u % q);
            for i in 0..m0 {
                nbrs.extend(
                    shifts[i * n0 + j]
                        .iter()
                        .map(|&s| nv + i * q + (t + q - s as usize) % q),
                );
            }
        } else {
            let (i, r) = ((u - nv) / q, (u - nv) % q);
            for j in 0..n0 {
                nbrs.extend(
                    shifts[i * n0 + j]
                        .iter()
                        .map(|&s| j * q + (r + s as usize) % q),
                );
            }
        }
        for &w in &nbrs {
            if w == parent[u] {
                continue;
            }
            if dist[w] == u32::MAX {
                dist[w] = du as u32 + 1;
                parent[w] = u;
                queue.push_back(w);
            } else {
                best = best.min(du + dist[w] as usize + 1);
            }
        }
    }
    best
}

/// Circulant progressive edge growth.
///
/// VN types are processed in decreasing degree order; every edge instance
/// of a type is placed by a BFS from the representative VN `(j, 0)` and
/// gets a shift whose CN is farthest away (unreachable preferred), subject
/// to the resulting local girth of `(j, 0)` being as large as possible.
/// Remaining ties go to the smallest shift or a seeded random pick. Shifts
/// of parallel protograph edges are distinct, so the lift has no
/// multi-edges.
pub fn peg_lift(
    b: &BaseMatrix,
    q: usize,
    seed: u64,
    tie: TieBreak,
) -> Result<(TannerGraph, CirculantLift)> {
    b.validate()?;
    if q < b.max_entry() as usize {
        return Err(Error::Lifting(format!(
            "Q = {q} is smaller than the largest entry {}",
            b.max_entry()
        )));
    }
    let (m0, n0) = (b.rows(), b.cols());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n0).collect();
    order.sort_by_key(|&j| std::cmp::Reverse(b.col_degree(j)));
    let mut shifts: Vec<Vec<u32>> = vec![Vec::new(); m0 * n0];
    for &j in &order {
        // interleave CN types so no single row is filled first
        let mut slots = Vec::new();
        for k in 0..b.max_entry() {
            for i in 0..m0 {
                if k < b.get(i, j) {
                    slots.push(i);
                }
            }
        }
        for i in slots {
            let dist = cn_distances(&shifts, m0, n0, q, j, i);
            // CN (i, r) is adjacent to VN (j, 0) through shift s = -r mod q
            let mut groups: Vec<(usize, u32)> = dist
                .iter()
                .enumerate()
                .map(|(r, &d)| (d, ((q - r) % q) as u32))
                .filter(|(_, s)| !shifts[i * n0 + j].contains(s))
                .collect();
            match tie {
                TieBreak::Smallest => groups.sort_by_key(|&(d, s)| (std::cmp::Reverse(d), s)),
                TieBreak::Random => {
                    groups.shuffle(&mut rng);
                    groups.sort_by_key(|&(d, _)| std::cmp::Reverse(d));
                }
            }
            // The distance only sees cycles through one copy of the new
            // circulant; verify the actual local girth, best bound first.
            let mut chosen: Option<(usize, u32)> = None;
            for &(d, s) in &groups {
                let bound = if d == usize::MAX {
                    PEG_HORIZON
                } else {
                    (2 * d + 2).min(PEG_HORIZON)
                };
                if chosen.is_some_and(|(g, _)| g >= bound) {
                    break;
                }
                shifts[i * n0 + j].push(s);
                let g = local_girth(&shifts, m0, n0, q, j, PEG_HORIZON);
                shifts[i * n0 + j].pop();
                if chosen.is_none_or(|(best, _)| g > best) {
                    chosen = Some((g, s));
                }
                if g >= bound {
                    break;
                }
            }
            let (_, s) = chosen.expect("Q >= b_ij leaves a free shift");
            shifts[i * n0 + j].push(s);
        }
    }
    let lift = CirculantLift::new(b, q, shifts)?;
    Ok((lift.to_graph(), lift))
}

/// Random lift with independent uniform permutations per edge type and no
/// parallel edges. Not quasi-cyclic.
pub fn random_lift(b: &BaseMatrix, q: usize, seed: u64) -> Result<TannerGraph> {
    b.validate()?;
    if q < b.max_entry() as usize {
        return Err(Error::Lifting(format!(
            "Q = {q} is smaller than the largest entry {}",
            b.max_entry()
        )));
    }
    let (m0, n0) = (b.rows(), b.cols());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(b.num_edges() as usize * q);
    for (i, j) in b.edge_types() {
        let k = b.get(i, j) as usize;
        // socket t * k + x belongs to VN t; the CN socket is cn[t * k + x] / k
        let mut cn: Vec<usize> = (0..k * q).collect();
        cn.shuffle(&mut rng);
        // repair: no VN may meet the same CN twice
        for _ in 0..1000 {
            let mut clean = true;
            for t in 0..q {
                for x in 0..k {
                    for y in 0..x {
                        if cn[t * k + x] / k == cn[t * k + y] / k {
                            clean = false;
                            let other = rng.random_range(0..k * q);
                            cn.swap(t * k + x, other);
                        }
                    }
                }
            }
            if clean {
                break;
            }
        }
        for (sock, &c) in cn.iter().enumerate() {
            let (t, r) = (sock / k, c / k);
            edges.push(Edge {
                cn: (i * q + r) as u32,
                vn: (j * q + t) as u32,
                kind: (i * n0 + j) as u32,
            });
        }
    }
    let vn_type = (0..n0 * q).map(|v| (v / q) as u32).collect();
    let punctured = (0..n0 * q).map(|v| b.is_punctured(v / q)).collect();
    let g = TannerGraph::from_edges(n0 * q, m0 * q, edges, vn_type, punctured, (m0, n0))?;
    if has_parallel_edges(&g) {
        return Err(Error::Lifting("could not remove parallel edges".into()));
    }
    Ok(g)
}

fn has_parallel_edges(g: &TannerGraph) -> bool {
    (0..g.num_vns()).any(|v| {
        let mut cns: Vec<u32> = g
            .vn_edges(v)
            .iter()
            .map(|&e| g.edge(e as usize).cn)
            .collect();
        cns.sort_unstable();
        cns.windows(2).any(|w| w[0] == w[1])
    })
}

/// Shortest cycle length (in edges) and the number of VNs lying on a
/// shortest cycle. `girth` is `None` when no cycle of length `<= max_len`
/// exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GirthReport {
    pub girth: Option<usize>,
    pub count: usize,
}

/// Shortest cycle through `root` (VN index), searched up to `max_len`.
fn shortest_cycle_through(g: &TannerGraph, root: usize, max_len: usize) -> Option<usize> {
    let n = g.num_vns();
    // node ids: VNs 0..n, CNs n..n+m
    let mut dist = std::collections::HashMap::new();
    let mut parent = std::collections::HashMap::new();
    let mut queue = VecDeque::new();
    dist.insert(root, 0usize);
    parent.insert(root, u32::MAX);
    queue.push_back(root);
    let mut best = usize::MAX;
    while let Some(u) = queue.pop_front() {
        let du = dist[&u];
        if 2 * du + 1 >= best || 2 * du + 1 > max_len {
            break;
        }
        let pe = parent[&u];
        let list = if u < n {
            g.vn_edges(u)
        } else {
            g.cn_edges(u - n)
        };
        for &e in list {
            if e == pe {
                continue;
            }
            let ed = g.edge(e as usize);
            let w = if u < n {
                n + ed.cn as usize
            } else {
                ed.vn as usize
            };
            match dist.get(&w) {
                None => {
                    dist.insert(w, du + 1);
                    parent.insert(w, e);
                    queue.push_back(w);
                }
                Some(&dw) => best = best.min(du + dw + 1),
            }
        }
    }
    (best <= max_len).then_some(best)
}

/// Girth of `g` by a depth-limited BFS from every VN.
pub fn girth_report(g: &TannerGraph, max_len: usize) -> GirthReport {
    let per_vn: Vec<Option<usize>> = (0..g.num_vns())
        .into_par_iter()
        .map(|v| shortest_cycle_through(g, v, max_len))
        .collect();
    let girth = per_vn.iter().flatten().copied().min();
    let count = girth.map_or(0, |gl| per_vn.iter().filter(|&&c| c == Some(gl)).count());
    GirthReport { girth, count }
}

/// Parity-check matrix in alist format (1-based indices).
pub fn to_alist(g: &TannerGraph) -> String {
    let rows = g.check_rows();
    let mut cols = vec![Vec::new(); g.num_vns()];
    for (c, r) in rows.iter().enumerate() {
        for &v in r {
            cols[v].push(c);
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "{} {}", g.num_vns(), g.num_cns());
    let max_col = cols.iter().map(Vec::len).max().unwrap_or(0);
    let max_row = rows.iter().map(Vec::len).max().unwrap_or(0);
    let _ = writeln!(s, "{max_col} {max_row}");
    let join = |v: Vec<String>| v.join(" ");
    let _ = writeln!(
        s,
        "{}",
        join(cols.iter().map(|c| c.len().to_string()).collect())
    );
    let _ = writeln!(
        s,
        "{}",
        join(rows.iter().map(|r| r.len().to_string()).collect())
    );
    for c in &cols {
        let _ = writeln!(
            s,
            "{}",
            join(c.iter().map(|x| (x + 1).to_string()).collect())
        );
    }
    for r in &rows {
        let _ = writeln!(
            s,
            "{}",
            join(r.iter().map(|x| (x + 1).to_string()).collect())
        );
    }
    s
}

/// Basis of the GF(2) null space of the parity-check matrix of `g`, by
/// dense Gaussian elimination. Intended for small codes.
pub fn nullspace_basis(g: &TannerGraph) -> Vec<Vec<u8>> {
    let n = g.num_vns();
    let words = n.div_ceil(64);
    let mut h: Vec<Vec<u64>> = g
        .check_rows()
        .iter()
        .map(|r| {
            let mut row = vec![0u64; words];
            for &v in r {
                row[v / 64] ^= 1 << (v % 64);
            }
            row
        })
        .collect();
    let bit = |row: &[u64], c: usize| (row[c / 64] >> (c % 64)) & 1 == 1;
    let mut pivots = Vec::new();
    let mut rank = 0;
    for c in 0..n {
        let Some(p) = (rank..h.len()).find(|&r| bit(&h[r], c)) else {
            continue;
        };
        h.swap(rank, p);
        for r in 0..h.len() {
            if r != rank && bit(&h[r], c) {
                let (a, b) = if r < rank {
                    let (lo, hi) = h.split_at_mut(rank);
                    (&mut lo[r], &hi[0])
                } else {
                    let (lo, hi) = h.split_at_mut(r);
                    (&mut hi[0], &lo[rank])
                };
                for w in 0..words {
                    a[w] ^= b[w];
                }
            }
        }
        pivots.push(c);
        rank += 1;
    }
    let is_pivot: Vec<bool> = {
        let mut f = vec![false; n];
        for &p in &pivots {
            f[p] = true;
        }
        f
    };
    (0..n)
        .filter(|&c| !is_pivot[c])
        .map(|free| {
            let mut x = vec![0u8; n];
            x[free] = 1;
            for (r, &p) in pivots.iter().enumerate() {
                if bit(&h[r], free) {
                    x[p] = 1;
                }
            }
            x
        })
        .collect()
}

/// Uniformly random codeword from a null-space basis.
pub fn random_codeword<R: Rng + ?Sized>(basis: &[Vec<u8>], n: usize, rng: &mut R) -> Vec<u8> {
    let mut x = vec![0u8; n];
    for b in basis {
        if rng.random::<bool>() {
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi ^= bi;
            }
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b34() -> BaseMatrix {
        BaseMatrix::new(
            vec![vec![2, 3, 1, 4, 3, 5, 4, 3], vec![1, 1, 7, 0, 1, 6, 0, 1]],
            &[],
        )
        .unwrap()
    }

    #[test]
    fn degree_profile_matches_base() {
        let b = b34();
        for tie in [TieBreak::Smallest, TieBreak::Random] {
            let (g, lift) = peg_lift(&b, 64, 3, tie).unwrap();
            assert_eq!(g.num_vns(), 8 * 64);
            for v in 0..g.num_vns() {
                assert_eq!(g.vn_degree(v) as u32, b.col_degree(v / 64));
            }
            for c in 0..g.num_cns() {
                assert_eq!(g.cn_degree(c) as u32, b.row_degree(c / 64));
            }
            let counts = g.type_counts();
            for (k, &e) in b.entries().iter().enumerate() {
                assert_eq!(counts[k], e as usize * 64);
            }
            assert!(!has_parallel_edges(&g));
            assert_eq!(lift.base_matrix().unwrap(), b);
        }
    }

    #[test]
    fn block_length_of_full_size_lift() {
        let lift = CirculantLift::new(
            &b34(),
            2772,
            b34().entries().iter().map(|&e| (0..e).collect()).collect(),
        )
        .unwrap();
        assert_eq!(lift.block_length(), 22176);
    }

    #[test]
    fn identity_lift_is_protograph() {
        let b = BaseMatrix::new(vec![vec![1, 1, 0, 1], vec![0, 1, 1, 1]], &[]).unwrap();
        let (g, _) = peg_lift(&b, 1, 0, TieBreak::Smallest).unwrap();
        assert_eq!(g.check_rows(), vec![vec![0, 1, 3], vec![1, 2, 3]]);
    }

    #[test]
    fn lift_too_small() {
        assert!(matches!(
            peg_lift(&b34(), 6, 0, TieBreak::Smallest),
            Err(Error::Lifting(_))
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let a = peg_lift(&b34(), 50, 9, TieBreak::Random).unwrap().1;
        let b = peg_lift(&b34(), 50, 9, TieBreak::Random).unwrap().1;
        assert_eq!(a, b);
    }

    #[test]
    fn girth_of_small_graphs() {
        // two VNs sharing two CNs: a 4-cycle
        let g = TannerGraph::from_check_rows(3, &[vec![0, 1], vec![0, 1, 2]]).unwrap();
        assert_eq!(
            girth_report(&g, 10),
            GirthReport {
                girth: Some(4),
                count: 2
            }
        );
        // a path has no cycle
        let g = TannerGraph::from_check_rows(4, &[vec![0, 1], vec![1, 2], vec![2, 3]]).unwrap();
        assert_eq!(girth_report(&g, 12).girth, None);
        // a 6-cycle
        let g = TannerGraph::from_check_rows(3, &[vec![0, 1], vec![1, 2], vec![2, 0]]).unwrap();
        assert_eq!(
            girth_report(&g, 12),
            GirthReport {
                girth: Some(6),
                count: 3
            }
        );
    }

    #[test]
    fn peg_avoids_four_cycles_on_binary_base() {
        let b = BaseMatrix::new(
            vec![
                vec![1, 1, 1, 1, 1, 1],
                vec![1, 1, 1, 0, 1, 1],
                vec![1, 0, 1, 1, 1, 1],
            ],
            &[],
        )
        .unwrap();
        for q in [8, 13, 32] {
            let (g, _) = peg_lift(&b, q, 1, TieBreak::Random).unwrap();
            assert!(girth_report(&g, 4).girth.is_none(), "Q = {q}");
        }
    }

    #[test]
    fn lift_text_round_trip() {
        let (_, lift) = peg_lift(&b34(), 40, 5, TieBreak::Random).unwrap();
        assert_eq!(CirculantLift::parse(&lift.to_text()).unwrap(), lift);
        assert!(CirculantLift::parse("4 1 2\n0 0 1 1\n0 1 2\n").is_err());
    }

    #[test]
    fn random_lift_structure() {
        let b = b34();
        let g = random_lift(&b, 100, 4).unwrap();
        let counts = g.type_counts();
        for (k, &e) in b.entries().iter().enumerate() {
            assert_eq!(counts[k], e as usize * 100);
        }
        for c in 0..g.num_cns() {
            assert_eq!(g.cn_degree(c) as u32, b.row_degree(c / 100));
        }
    }

    #[test]
    fn quasi_cyclic_shift_invariance() {
        let b = BaseMatrix::new(vec![vec![1, 2, 1, 1], vec![1, 1, 2, 1]], &[]).unwrap();
        let q = 7;
        let (g, _) = peg_lift(&b, q, 2, TieBreak::Random).unwrap();
        let basis = nullspace_basis(&g);
        assert!(!basis.is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let x = random_codeword(&basis, g.num_vns(), &mut rng);
            assert!(g.syndrome_ok(&x));
            let shifted: Vec<u8> = (0..g.num_vns())
                .map(|v| x[(v / q) * q + (v % q + 1) % q])
                .collect();
            assert!(g.syndrome_ok(&shifted));
        }
    }

    #[test]
    fn nullspace_of_hamming() {
        let g = TannerGraph::from_check_rows(
            7,
            &[vec![0, 1, 2, 4], vec![0, 1, 3, 5], vec![0, 2, 3, 6]],
        )
        .unwrap();
        let basis = nullspace_basis(&g);
        assert_eq!(basis.len(), 4);
        let mut count = 0;
        for word in 0..128u32 {
            let x: Vec<u8> = (0..7).map(|k| ((word >> k) & 1) as u8).collect();
            count += g.syndrome_ok(&x) as usize;
        }
        assert_eq!(count, 16);
        assert!(basis.iter().all(|x| g.syndrome_ok(x)));
    }

    #[test]
    fn alist_header() {
        let g = TannerGraph::from_check_rows(4, &[vec![0, 1, 2], vec![1, 2, 3]]).unwrap();
        let a = to_alist(&g);
        let lines: Vec<&str> = a.lines().collect();
        assert_eq!(lines[0], "4 2");
        assert_eq!(lines[1], "2 3");
        assert_eq!(lines[2], "1 2 2 1");
        assert_eq!(lines[8], "1 2 3");
    }
}
