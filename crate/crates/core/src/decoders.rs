//! Finite-length decoders over a [`TannerGraph`]: ternary message passing
//! (TMP), binary message passing (BMP) and unquantized sum-product (BP).
//!
//! All decoders use a flooding schedule. Iteration 0 sends the (quantized)
//! channel LLRs; every later iteration is a CN half-iteration followed by a
//! VN half-iteration with per-edge-type weights from a [`WeightSchedule`].
//! Hard decisions break ties (`L = 0`) towards bit 1.

use crate::error::{Error, Result};
use crate::graph::TannerGraph;
use crate::schedule::WeightSchedule;
use crate::symbol::TernarySymbol;

/// Ternary quantizer: `+1` above `a`, `-1` below `-a`, erasure in between
/// (boundaries included).
#[inline]
pub fn quantize(x: f64, a: f64) -> TernarySymbol {
    if x > a {
        TernarySymbol::Plus
    } else if x < -a {
        TernarySymbol::Minus
    } else {
        TernarySymbol::Erasure
    }
}

/// Binary quantizer with the tie rule `sign(0) = -1`.
#[inline]
pub fn sign_symbol(x: f64) -> TernarySymbol {
    if x > 0.0 {
        TernarySymbol::Plus
    } else {
        TernarySymbol::Minus
    }
}

/// Extrinsic CN output: the product of the incoming messages.
pub fn cn_update(incoming: &[TernarySymbol]) -> TernarySymbol {
    incoming.iter().copied().product()
}

/// Extrinsic VN output `f(l_ch + sum D m)`.
pub fn vn_update(l_ch: f64, incoming: &[(TernarySymbol, f64)], a: f64) -> TernarySymbol {
    quantize(l_ch + weighted_sum(incoming), a)
}

/// Bit decision from the channel LLR and all incoming messages.
pub fn app_decision(l_ch: f64, incoming: &[(TernarySymbol, f64)]) -> u8 {
    bit_of(l_ch + weighted_sum(incoming))
}

fn weighted_sum(incoming: &[(TernarySymbol, f64)]) -> f64 {
    incoming.iter().map(|&(m, d)| d * m.value() as f64).sum()
}

#[inline]
fn bit_of(total: f64) -> u8 {
    (total <= 0.0) as u8
}

/// True iff `bits` satisfies every parity check of `graph`.
pub fn syndrome_check(bits: &[u8], graph: &TannerGraph) -> bool {
    graph.syndrome_ok(bits)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderConfig {
    /// Quantizer threshold (ignored by BMP and BP).
    pub a: f64,
    pub max_iters: usize,
    pub weights: WeightSchedule,
    /// Stop as soon as the hard decision is a codeword.
    pub early_stop: bool,
    /// Record per-iteration VN-to-CN message statistics.
    pub collect_stats: bool,
}

impl DecoderConfig {
    pub fn new(a: f64, weights: WeightSchedule) -> Self {
        let max_iters = weights.iterations();
        Self {
            a,
            max_iters,
            weights,
            early_stop: true,
            collect_stats: false,
        }
    }

    fn validate(&self, graph: &TannerGraph) -> Result<()> {
        if !(self.a >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "quantizer threshold {} must be >= 0",
                self.a
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if self.weights.iterations() < self.max_iters {
            return Err(Error::ScheduleTooShort {
                rows: self.weights.iterations(),
                needed: self.max_iters,
            });
        }
        if !self.weights.is_scalar() && self.weights.dims() != graph.type_dims() {
            return Err(Error::ScheduleMismatch(format!(
                "schedule is {:?} but the graph has {:?} edge types",
                self.weights.dims(),
                graph.type_dims()
            )));
        }
        Ok(())
    }
}

/// VN-to-CN message counts of one iteration, indexed by edge type. Errors
/// are `-1` messages, i.e. relative to the all-zero codeword.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MessageStats {
    pub erasures: Vec<u64>,
    pub errors: Vec<u64>,
    pub totals: Vec<u64>,
}

impl MessageStats {
    fn new(types: usize) -> Self {
        Self {
            erasures: vec![0; types],
            errors: vec![0; types],
            totals: vec![0; types],
        }
    }

    /// Adds the counts of `other`.
    pub fn merge(&mut self, other: &MessageStats) {
        if self.totals.is_empty() {
            *self = other.clone();
            return;
        }
        for k in 0..self.totals.len() {
            self.erasures[k] += other.erasures[k];
            self.errors[k] += other.errors[k];
            self.totals[k] += other.totals[k];
        }
    }

    /// Erasure and error fractions over all edges.
    pub fn overall(&self) -> (f64, f64) {
        let n: u64 = self.totals.iter().sum();
        let n = n.max(1) as f64;
        (
            self.erasures.iter().sum::<u64>() as f64 / n,
            self.errors.iter().sum::<u64>() as f64 / n,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub hard_decision: Vec<u8>,
    pub iterations_used: usize,
    /// The hard decision has zero syndrome.
    pub converged: bool,
    /// Iterations `0..=iterations_used` when statistics were requested.
    pub stats: Vec<MessageStats>,
}

impl DecodeResult {
    pub fn bit_errors(&self) -> usize {
        self.hard_decision.iter().filter(|&&b| b != 0).count()
    }
}

#[derive(Clone, Copy)]
enum Quantizer {
    Ternary(f64),
    Binary,
}

impl Quantizer {
    #[inline]
    fn apply(self, x: f64) -> i8 {
        match self {
            Quantizer::Ternary(a) => quantize(x, a) as i8,
            Quantizer::Binary => sign_symbol(x) as i8,
        }
    }
}

/// Reusable TMP/BMP decoder holding the message buffers for one graph.
pub struct MessagePassingDecoder<'g> {
    graph: &'g TannerGraph,
    vc: Vec<i8>,
    cv: Vec<i8>,
    lch: Vec<f64>,
    bits: Vec<u8>,
    weights: Vec<f64>,
}

impl<'g> MessagePassingDecoder<'g> {
    pub fn new(graph: &'g TannerGraph) -> Self {
        let e = graph.num_edges();
        let n = graph.num_vns();
        Self {
            graph,
            vc: vec![0; e],
            cv: vec![0; e],
            lch: vec![0.0; n],
            bits: vec![0; n],
            weights: vec![0.0; e],
        }
    }

    pub fn decode_tmp(&mut self, llrs: &[f64], cfg: &DecoderConfig) -> Result<DecodeResult> {
        self.run(llrs, cfg, Quantizer::Ternary(cfg.a))
    }

    pub fn decode_bmp(&mut self, llrs: &[f64], cfg: &DecoderConfig) -> Result<DecodeResult> {
        self.run(llrs, cfg, Quantizer::Binary)
    }

    fn stats(&self) -> MessageStats {
        let (m0, n0) = self.graph.type_dims();
        let mut s = MessageStats::new(m0 * n0);
        for (e, &m) in self.graph.edges().iter().zip(&self.vc) {
            let k = e.kind as usize;
            s.totals[k] += 1;
            s.erasures[k] += (m == 0) as u64;
            s.errors[k] += (m < 0) as u64;
        }
        s
    }

    fn run(&mut self, llrs: &[f64], cfg: &DecoderConfig, q: Quantizer) -> Result<DecodeResult> {
        let g = self.graph;
        if llrs.len() != g.num_vns() {
            return Err(Error::LengthMismatch {
                expected: g.num_vns(),
                got: llrs.len(),
            });
        }
        cfg.validate(g)?;
        for v in 0..g.num_vns() {
            let l = if g.is_punctured(v) { 0.0 } else { llrs[v] };
            self.lch[v] = l;
            self.bits[v] = bit_of(l);
            let m = q.apply(l);
            for &e in g.vn_edges(v) {
                self.vc[e as usize] = m;
            }
        }
        let mut stats = Vec::new();
        if cfg.collect_stats {
            stats.push(self.stats());
        }
        let mut converged = g.syndrome_ok(&self.bits);
        let mut used = 0;
        if converged && cfg.early_stop {
            return Ok(self.result(0, true, stats));
        }
        let edges = g.edges();
        for l in 1..=cfg.max_iters {
            // CN half-iteration
            for c in 0..g.num_cns() {
                let list = g.cn_edges(c);
                let mut zeros = 0u32;
                let mut sign = 1i8;
                for &e in list {
                    let m = self.vc[e as usize];
                    if m == 0 {
                        zeros += 1;
                    } else {
                        sign *= m;
                    }
                }
                for &e in list {
                    let m = self.vc[e as usize];
                    self.cv[e as usize] = match (m == 0, zeros) {
                        (true, 1) => sign,
                        (false, 0) => sign * m,
                        _ => 0,
                    };
                }
            }
            // VN half-iteration
            let row = cfg.weights.row(l);
            if cfg.weights.is_scalar() {
                self.weights.fill(row[0]);
            } else {
                for (w, e) in self.weights.iter_mut().zip(edges) {
                    *w = row[e.kind as usize];
                }
            }
            for v in 0..g.num_vns() {
                let list = g.vn_edges(v);
                let mut total = self.lch[v];
                for &e in list {
                    total += self.weights[e as usize] * self.cv[e as usize] as f64;
                }
                self.bits[v] = bit_of(total);
                for &e in list {
                    let e = e as usize;
                    self.vc[e] = q.apply(total - self.weights[e] * self.cv[e] as f64);
                }
            }
            if cfg.collect_stats {
                stats.push(self.stats());
            }
            used = l;
            converged = g.syndrome_ok(&self.bits);
            if converged && cfg.early_stop {
                break;
            }
        }
        Ok(self.result(used, converged, stats))
    }

    fn result(&self, used: usize, converged: bool, stats: Vec<MessageStats>) -> DecodeResult {
        DecodeResult {
            hard_decision: self.bits.clone(),
            iterations_used: used,
            converged,
            stats,
        }
    }
}

/// Ternary message passing decoding of `llrs`.
pub fn tmp_decode(llrs: &[f64], graph: &TannerGraph, cfg: &DecoderConfig) -> Result<DecodeResult> {
    MessagePassingDecoder::new(graph).decode_tmp(llrs, cfg)
}

/// Binary message passing decoding of `llrs` (`cfg.a` is ignored).
pub fn bmp_decode(llrs: &[f64], graph: &TannerGraph, cfg: &DecoderConfig) -> Result<DecodeResult> {
    MessagePassingDecoder::new(graph).decode_bmp(llrs, cfg)
}

const BP_TANH_CLIP: f64 = 1.0 - 1e-12;

/// Reusable sum-product decoder.
pub struct BpDecoder<'g> {
    graph: &'g TannerGraph,
    vc: Vec<f64>,
    cv: Vec<f64>,
    lch: Vec<f64>,
    bits: Vec<u8>,
    prefix: Vec<f64>,
}

impl<'g> BpDecoder<'g> {
    pub fn new(graph: &'g TannerGraph) -> Self {
        let e = graph.num_edges();
        let n = graph.num_vns();
        Self {
            graph,
            vc: vec![0.0; e],
            cv: vec![0.0; e],
            lch: vec![0.0; n],
            bits: vec![0; n],
            prefix: Vec::new(),
        }
    }

    pub fn decode(
        &mut self,
        llrs: &[f64],
        max_iters: usize,
        early_stop: bool,
    ) -> Result<DecodeResult> {
        let g = self.graph;
        if llrs.len() != g.num_vns() {
            return Err(Error::LengthMismatch {
                expected: g.num_vns(),
                got: llrs.len(),
            });
        }
        for v in 0..g.num_vns() {
            let l = if g.is_punctured(v) { 0.0 } else { llrs[v] };
            self.lch[v] = l;
            self.bits[v] = bit_of(l);
            for &e in g.vn_edges(v) {
                self.vc[e as usize] = l;
            }
        }
        let mut converged = g.syndrome_ok(&self.bits);
        let mut used = 0;
        if !(converged && early_stop) {
            for l in 1..=max_iters {
                for c in 0..g.num_cns() {
                    let list = g.cn_edges(c);
                    // prefix products, then a backward sweep for the suffixes
                    self.prefix.clear();
                    let mut acc = 1.0;
                    for &e in list {
                        self.prefix.push(acc);
                        acc *= (0.5 * self.vc[e as usize]).tanh();
                    }
                    let mut suffix = 1.0;
                    for (k, &e) in list.iter().enumerate().rev() {
                        let t = (self.prefix[k] * suffix).clamp(-BP_TANH_CLIP, BP_TANH_CLIP);
                        self.cv[e as usize] = 2.0 * t.atanh();
                        suffix *= (0.5 * self.vc[e as usize]).tanh();
                    }
                }
                for v in 0..g.num_vns() {
                    let list = g.vn_edges(v);
                    let total =
                        self.lch[v] + list.iter().map(|&e| self.cv[e as usize]).sum::<f64>();
                    self.bits[v] = bit_of(total);
                    for &e in list {
                        self.vc[e as usize] = total - self.cv[e as usize];
                    }
                }
                used = l;
                converged = g.syndrome_ok(&self.bits);
                if converged && early_stop {
                    break;
                }
            }
        }
        Ok(DecodeResult {
            hard_decision: self.bits.clone(),
            iterations_used: used,
            converged,
            stats: Vec::new(),
        })
    }
}

/// Sum-product (tanh rule) decoding with syndrome early stop.
pub fn bp_decode(llrs: &[f64], graph: &TannerGraph, max_iters: usize) -> Result<DecodeResult> {
    BpDecoder::new(graph).decode(llrs, max_iters, true)
}
