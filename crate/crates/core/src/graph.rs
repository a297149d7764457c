//! Sparse Tanner graph of a lifted (or unstructured) LDPC code.

use crate::error::{Error, Result};

/// One edge of the Tanner graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub cn: u32,
    pub vn: u32,
    /// Protograph edge type, `i * n0 + j` for CN type `i` and VN type `j`.
    pub kind: u32,
}

/// Bipartite graph stored as a shared edge array plus per-node edge lists
/// (CSR layout). Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TannerGraph {
    n: usize,
    m: usize,
    m0: usize,
    n0: usize,
    edges: Vec<Edge>,
    vn_offsets: Vec<usize>,
    vn_edges: Vec<u32>,
    cn_offsets: Vec<usize>,
    cn_edges: Vec<u32>,
    vn_type: Vec<u32>,
    punctured: Vec<bool>,
}

fn csr(count: usize, keys: impl Iterator<Item = usize> + Clone) -> (Vec<usize>, Vec<u32>) {
    let mut offsets = vec![0usize; count + 1];
    for k in keys.clone() {
        offsets[k + 1] += 1;
    }
    for i in 0..count {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut lists = vec![0u32; offsets[count]];
    for (e, k) in keys.enumerate() {
        lists[fill[k]] = e as u32;
        fill[k] += 1;
    }
    (offsets, lists)
}

impl TannerGraph {
    /// Builds a graph with `n` VNs, `m` CNs and the given edges. `vn_type`
    /// gives the protograph column of every VN; `types` is `(m0, n0)`.
    pub fn from_edges(
        n: usize,
        m: usize,
        edges: Vec<Edge>,
        vn_type: Vec<u32>,
        punctured: Vec<bool>,
        types: (usize, usize),
    ) -> Result<Self> {
        if vn_type.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: vn_type.len(),
            });
        }
        if punctured.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: punctured.len(),
            });
        }
        let (m0, n0) = types;
        for e in &edges {
            if e.cn as usize >= m || e.vn as usize >= n || e.kind as usize >= m0 * n0 {
                return Err(Error::InvalidParameter(format!("edge {e:?} out of range")));
            }
        }
        let (vn_offsets, vn_edges) = csr(n, edges.iter().map(|e| e.vn as usize));
        let (cn_offsets, cn_edges) = csr(m, edges.iter().map(|e| e.cn as usize));
        Ok(Self {
            n,
            m,
            m0,
            n0,
            edges,
            vn_offsets,
            vn_edges,
            cn_offsets,
            cn_edges,
            vn_type,
            punctured,
        })
    }

    /// Unstructured graph from the CN neighbourhoods (rows of `H`). Every
    /// edge gets type 0 of a `1 x 1` type table.
    pub fn from_check_rows(n: usize, rows: &[Vec<usize>]) -> Result<Self> {
        let edges = rows
            .iter()
            .enumerate()
            .flat_map(|(c, r)| {
                r.iter().map(move |&v| Edge {
                    cn: c as u32,
                    vn: v as u32,
                    kind: 0,
                })
            })
            .collect();
        Self::from_edges(n, rows.len(), edges, vec![0; n], vec![false; n], (1, 1))
    }

    #[inline]
    pub fn num_vns(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn num_cns(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// `(m0, n0)` of the protograph the edge types refer to.
    pub fn type_dims(&self) -> (usize, usize) {
        (self.m0, self.n0)
    }

    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn edge(&self, e: usize) -> Edge {
        self.edges[e]
    }

    #[inline]
    pub fn vn_edges(&self, v: usize) -> &[u32] {
        &self.vn_edges[self.vn_offsets[v]..self.vn_offsets[v + 1]]
    }

    #[inline]
    pub fn cn_edges(&self, c: usize) -> &[u32] {
        &self.cn_edges[self.cn_offsets[c]..self.cn_offsets[c + 1]]
    }

    pub fn vn_degree(&self, v: usize) -> usize {
        self.vn_offsets[v + 1] - self.vn_offsets[v]
    }

    pub fn cn_degree(&self, c: usize) -> usize {
        self.cn_offsets[c + 1] - self.cn_offsets[c]
    }

    pub fn vn_type(&self, v: usize) -> u32 {
        self.vn_type[v]
    }

    #[inline]
    pub fn is_punctured(&self, v: usize) -> bool {
        self.punctured[v]
    }

    pub fn punctured(&self) -> &[bool] {
        &self.punctured
    }

    /// Number of edges of every type, indexed `i * n0 + j`.
    pub fn type_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.m0 * self.n0];
        for e in &self.edges {
            c[e.kind as usize] += 1;
        }
        c
    }

    /// CN neighbourhoods as VN index lists (one entry per edge, so parallel
    /// edges repeat).
    pub fn check_rows(&self) -> Vec<Vec<usize>> {
        (0..self.m)
            .map(|c| {
                self.cn_edges(c)
                    .iter()
                    .map(|&e| self.edges[e as usize].vn as usize)
                    .collect()
            })
            .collect()
    }

    /// True iff every CN sees even parity (parallel edges count twice).
    pub fn syndrome_ok(&self, bits: &[u8]) -> bool {
        (0..self.m).all(|c| {
            self.cn_edges(c).iter().fold(0u8, |acc, &e| {
                acc ^ (bits[self.edges[e as usize].vn as usize] & 1)
            }) == 0
        })
    }

    /// Relabels nodes: VN `v` becomes `vn_perm[v]`, CN `c` becomes
    /// `cn_perm[c]`. Edge order is preserved.
    pub fn relabeled(&self, vn_perm: &[usize], cn_perm: &[usize]) -> Self {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                cn: cn_perm[e.cn as usize] as u32,
                vn: vn_perm[e.vn as usize] as u32,
                kind: e.kind,
            })
            .collect();
        let mut vn_type = vec![0; self.n];
        let mut punctured = vec![false; self.n];
        for v in 0..self.n {
            vn_type[vn_perm[v]] = self.vn_type[v];
            punctured[vn_perm[v]] = self.punctured[v];
        }
        Self::from_edges(
            self.n,
            self.m,
            edges,
            vn_type,
            punctured,
            (self.m0, self.n0),
        )
        .expect("relabeling keeps indices in range")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> TannerGraph {
        TannerGraph::from_check_rows(4, &[vec![0, 1, 2], vec![1, 2, 3]]).unwrap()
    }

    #[test]
    fn edge_lists_are_consistent() {
        let g = toy();
        let mut seen_v = vec![0; g.num_edges()];
        let mut seen_c = vec![0; g.num_edges()];
        for v in 0..g.num_vns() {
            for &e in g.vn_edges(v) {
                assert_eq!(g.edge(e as usize).vn as usize, v);
                seen_v[e as usize] += 1;
            }
        }
        for c in 0..g.num_cns() {
            for &e in g.cn_edges(c) {
                assert_eq!(g.edge(e as usize).cn as usize, c);
                seen_c[e as usize] += 1;
            }
        }
        assert!(seen_v.iter().chain(&seen_c).all(|&k| k == 1));
        let vsum: usize = (0..g.num_vns()).map(|v| g.vn_degree(v)).sum();
        let csum: usize = (0..g.num_cns()).map(|c| g.cn_degree(c)).sum();
        assert_eq!(vsum, g.num_edges());
        assert_eq!(csum, g.num_edges());
    }

    #[test]
    fn syndrome() {
        let g = toy();
        assert!(g.syndrome_ok(&[0, 0, 0, 0]));
        assert!(!g.syndrome_ok(&[1, 0, 0, 0]));
        assert!(g.syndrome_ok(&[1, 1, 0, 1]));
    }

    #[test]
    fn relabel_preserves_structure() {
        let g = toy();
        let h = g.relabeled(&[3, 2, 1, 0], &[1, 0]);
        assert_eq!(h.num_edges(), g.num_edges());
        assert!(h.syndrome_ok(&[1, 0, 1, 1]));
        assert!(!h.syndrome_ok(&[1, 0, 0, 0]));
    }
}
