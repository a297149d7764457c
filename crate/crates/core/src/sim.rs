//! Monte Carlo FER/BER simulation over the biAWGN channel with the all-zero
//! codeword.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::channel::{fill_awgn_allzero, llr_from_observation, substream, ChannelParams};
use crate::de::{de_run_protograph, DeConfig};
use crate::decoders::{BpDecoder, DecodeResult, DecoderConfig, MessagePassingDecoder};
use crate::ensemble::BaseMatrix;
use crate::error::{Error, Result};
use crate::graph::TannerGraph;
use crate::schedule::WeightSchedule;

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "TMP_LDPC_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    Tmp,
    Bmp,
    Bp,
}

impl std::str::FromStr for DecoderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tmp" => Ok(Self::Tmp),
            "bmp" => Ok(Self::Bmp),
            "bp" => Ok(Self::Bp),
            _ => Err(Error::InvalidParameter(format!("unknown decoder {s:?}"))),
        }
    }
}

/// Where the TMP/BMP weights come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleMode {
    /// One schedule for every point, typically DE at the threshold.
    Fixed(WeightSchedule),
    /// DE weights recomputed at each simulated Eb/N0.
    PerSnr(BaseMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub snr_points: Vec<f64>,
    pub max_frames: u64,
    pub min_frame_errors: u64,
    pub seed: u64,
    pub decoder: DecoderKind,
    /// Quantizer threshold for TMP.
    pub a: f64,
    pub max_iters: usize,
    /// Ignored by BP.
    pub schedule: ScheduleMode,
    /// Code rate used for the Eb/N0 conversion.
    pub rate: f64,
    /// Worker count; 0 reads [`THREADS_ENV`] and falls back to the number of
    /// CPUs.
    pub threads: usize,
    pub batch_size: usize,
    /// Stop a sweep after the first point with FER below this value.
    pub fer_floor: Option<f64>,
}

impl SimConfig {
    pub fn new(
        snr_points: Vec<f64>,
        decoder: DecoderKind,
        schedule: ScheduleMode,
        rate: f64,
        max_iters: usize,
    ) -> Self {
        Self {
            snr_points,
            max_frames: 100_000,
            min_frame_errors: 50,
            seed: 1,
            decoder,
            a: 0.0,
            max_iters,
            schedule,
            rate,
            threads: 0,
            batch_size: 32,
            fer_floor: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_points.is_empty() {
            return Err(Error::InvalidParameter("no SNR points".into()));
        }
        if self.max_frames == 0 {
            return Err(Error::InvalidParameter("frame budget is empty".into()));
        }
        if self.min_frame_errors == 0 {
            return Err(Error::InvalidParameter(
                "min_frame_errors must be at least 1".into(),
            ));
        }
        if self.max_iters == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParameter(
                "max_iters and batch_size must be positive".into(),
            ));
        }
        if !(self.rate > 0.0 && self.rate < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rate {} outside (0,1)",
                self.rate
            )));
        }
        Ok(())
    }

    /// Effective worker count.
    pub fn worker_count(&self) -> usize {
        if self.threads > 0 {
            return self.threads;
        }
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
            .filter(|&t: &usize| t > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

/// Aggregate of one simulated Eb/N0 point.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRecord {
    pub ebn0_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub fer: f64,
    pub ber: f64,
    pub mean_iterations: f64,
    pub wall_seconds: f64,
    /// Frame errors where the decoder converged to a wrong codeword. Not
    /// part of the CSV.
    pub undetected_errors: u64,
}

pub const CSV_HEADER: &str = "ebn0_db,frames,frame_errors,bit_errors,fer,ber,mean_iters,seconds";

pub fn records_to_csv(records: &[SimRecord]) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.ebn0_db,
            r.frames,
            r.frame_errors,
            r.bit_errors,
            r.fer,
            r.ber,
            r.mean_iterations,
            r.wall_seconds
        );
    }
    s
}

pub fn records_from_csv(text: &str) -> Result<Vec<SimRecord>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header {CSV_HEADER}"),
            })
        }
    }
    lines
        .map(|(k, l)| {
            let err = |msg: String| Error::Parse { line: k + 1, msg };
            let f: Vec<&str> = l.split(',').map(str::trim).collect();
            if f.len() != 8 {
                return Err(err(format!("expected 8 fields, got {}", f.len())));
            }
            let real = |i: usize| {
                f[i].parse::<f64>()
                    .map_err(|e| err(format!("field {}: {e}", i + 1)))
            };
            let int = |i: usize| {
                f[i].parse::<u64>()
                    .map_err(|e| err(format!("field {}: {e}", i + 1)))
            };
            Ok(SimRecord {
                ebn0_db: real(0)?,
                frames: int(1)?,
                frame_errors: int(2)?,
                bit_errors: int(3)?,
                fer: real(4)?,
                ber: real(5)?,
                mean_iterations: real(6)?,
                wall_seconds: real(7)?,
                undetected_errors: 0,
            })
        })
        .collect()
}

/// DE weight schedule of `b` at `ebn0_db` over `l_max` iterations.
pub fn de_schedule(b: &BaseMatrix, ebn0_db: f64, a: f64, l_max: usize) -> Result<WeightSchedule> {
    let cfg = DeConfig {
        stop_on_convergence: false,
        ..DeConfig::with_l_max(l_max)
    };
    Ok(de_run_protograph(b, ebn0_db, a, &cfg)?.weights)
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    frames: u64,
    frame_errors: u64,
    undetected: u64,
    bit_errors: u64,
    iterations: u64,
}

impl Tally {
    fn add(&mut self, r: &DecodeResult) {
        let wrong = r.bit_errors() as u64;
        self.frames += 1;
        self.bit_errors += wrong;
        self.iterations += r.iterations_used as u64;
        if !r.converged || wrong > 0 {
            self.frame_errors += 1;
            if r.converged {
                self.undetected += 1;
            }
        }
    }

    fn merge(&mut self, o: &Tally) {
        self.frames += o.frames;
        self.frame_errors += o.frame_errors;
        self.undetected += o.undetected;
        self.bit_errors += o.bit_errors;
        self.iterations += o.iterations;
    }
}

fn point_seed(seed: u64, ebn0_db: f64) -> u64 {
    seed ^ ebn0_db.to_bits().wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn decoder_config(
    graph: &TannerGraph,
    cfg: &SimConfig,
    ebn0_db: f64,
) -> Result<Option<DecoderConfig>> {
    if cfg.decoder == DecoderKind::Bp {
        return Ok(None);
    }
    let weights = match &cfg.schedule {
        ScheduleMode::Fixed(w) => w.clone(),
        ScheduleMode::PerSnr(b) => {
            if (b.rows(), b.cols()) != graph.type_dims() {
                return Err(Error::ScheduleMismatch(format!(
                    "base matrix is {}x{} but the code has {:?} edge types",
                    b.rows(),
                    b.cols(),
                    graph.type_dims()
                )));
            }
            de_schedule(b, ebn0_db, cfg.a, cfg.max_iters)?
        }
    };
    let a = if cfg.decoder == DecoderKind::Tmp {
        cfg.a
    } else {
        0.0
    };
    let dc = DecoderConfig {
        max_iters: cfg.max_iters,
        ..DecoderConfig::new(a, weights)
    };
    Ok(Some(dc))
}

fn run_batch(
    graph: &TannerGraph,
    cfg: &SimConfig,
    dc: Option<&DecoderConfig>,
    ch: &ChannelParams,
    seed: u64,
    batch: u64,
    frames: u64,
) -> Result<Tally> {
    let mut rng = substream(seed, batch);
    let n = graph.num_vns();
    let mut y = vec![0.0; n];
    let mut tally = Tally::default();
    let mut mp = MessagePassingDecoder::new(graph);
    let mut bp = BpDecoder::new(graph);
    for _ in 0..frames {
        fill_awgn_allzero(&mut y, ch.sigma, &mut rng);
        let llr: Vec<f64> = y
            .iter()
            .map(|&v| llr_from_observation(v, ch.sigma))
            .collect();
        let r = match (cfg.decoder, dc) {
            (DecoderKind::Tmp, Some(dc)) => mp.decode_tmp(&llr, dc)?,
            (DecoderKind::Bmp, Some(dc)) => mp.decode_bmp(&llr, dc)?,
            _ => bp.decode(&llr, cfg.max_iters, true)?,
        };
        tally.add(&r);
    }
    Ok(tally)
}

/// Simulates `ebn0_db` until `min_frame_errors` frame errors or
/// `max_frames` frames. Batches of `batch_size` frames run in waves of one
/// batch per worker, each with its own RNG substream, so the outcome
/// depends only on the seed and the worker count.
pub fn run_point(graph: &TannerGraph, cfg: &SimConfig, ebn0_db: f64) -> Result<SimRecord> {
    cfg.validate()?;
    let threads = cfg.worker_count();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| point_in_pool(graph, cfg, ebn0_db, threads))
}

fn point_in_pool(
    graph: &TannerGraph,
    cfg: &SimConfig,
    ebn0_db: f64,
    threads: usize,
) -> Result<SimRecord> {
    let start = Instant::now();
    let ch = ChannelParams::from_ebn0(ebn0_db, cfg.rate)?;
    let dc = decoder_config(graph, cfg, ebn0_db)?;
    let seed = point_seed(cfg.seed, ebn0_db);
    let mut total = Tally::default();
    let mut next_batch = 0u64;
    while total.frames < cfg.max_frames && total.frame_errors < cfg.min_frame_errors {
        let wave: Vec<(u64, u64)> = (0..threads as u64)
            .map_while(|k| {
                let first = (next_batch + k) * cfg.batch_size as u64;
                (first < cfg.max_frames).then(|| {
                    (
                        next_batch + k,
                        (cfg.max_frames - first).min(cfg.batch_size as u64),
                    )
                })
            })
            .collect();
        next_batch += wave.len() as u64;
        let tallies: Vec<Tally> = wave
            .par_iter()
            .map(|&(b, frames)| run_batch(graph, cfg, dc.as_ref(), &ch, seed, b, frames))
            .collect::<Result<_>>()?;
        for t in &tallies {
            total.merge(t);
        }
    }
    let frames = total.frames as f64;
    Ok(SimRecord {
        ebn0_db,
        frames: total.frames,
        frame_errors: total.frame_errors,
        bit_errors: total.bit_errors,
        fer: total.frame_errors as f64 / frames,
        ber: total.bit_errors as f64 / (frames * graph.num_vns() as f64),
        mean_iterations: total.iterations as f64 / frames,
        wall_seconds: start.elapsed().as_secs_f64(),
        undetected_errors: total.undetected,
    })
}

/// [`run_point`] over the SNR points in ascending order, optionally stopping
/// below `fer_floor`.
pub fn run_sweep(graph: &TannerGraph, cfg: &SimConfig) -> Result<Vec<SimRecord>> {
    cfg.validate()?;
    let mut pts = cfg.snr_points.clone();
    pts.sort_by(f64::total_cmp);
    let threads = cfg.worker_count();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let mut out = Vec::with_capacity(pts.len());
    for x in pts {
        let r = pool.install(|| point_in_pool(graph, cfg, x, threads))?;
        log::info!(
            "{x:.2} dB: FER {:.3e} ({} / {} frames)",
            r.fer,
            r.frame_errors,
            r.frames
        );
        let stop = cfg.fer_floor.is_some_and(|f| r.fer < f);
        out.push(r);
        if stop {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let r = SimRecord {
            ebn0_db: 2.25,
            frames: 1000,
            frame_errors: 3,
            bit_errors: 17,
            fer: 0.003,
            ber: 1.7e-5 / 3.0,
            mean_iterations: 4.123456789,
            wall_seconds: 0.1 + 0.2,
            undetected_errors: 0,
        };
        let text = records_to_csv(&[r.clone(), r.clone()]);
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(records_from_csv(&text).unwrap(), vec![r.clone(), r]);
    }

    #[test]
    fn csv_rejects_bad_input() {
        assert!(records_from_csv("a,b\n").is_err());
        assert!(records_from_csv(&format!("{CSV_HEADER}\n1,2,3\n")).is_err());
        assert!(records_from_csv(&format!("{CSV_HEADER}\n1,x,3,4,5,6,7,8\n")).is_err());
    }

    #[test]
    fn decoder_names() {
        assert_eq!("TMP".parse::<DecoderKind>().unwrap(), DecoderKind::Tmp);
        assert_eq!("bp".parse::<DecoderKind>().unwrap(), DecoderKind::Bp);
        assert!("ms".parse::<DecoderKind>().is_err());
    }

    #[test]
    fn tally_counts_undetected_errors() {
        let mut t = Tally::default();
        t.add(&DecodeResult {
            hard_decision: vec![0, 0],
            iterations_used: 2,
            converged: true,
            stats: vec![],
        });
        t.add(&DecodeResult {
            hard_decision: vec![1, 1],
            iterations_used: 3,
            converged: true,
            stats: vec![],
        });
        t.add(&DecodeResult {
            hard_decision: vec![0, 1],
            iterations_used: 5,
            converged: false,
            stats: vec![],
        });
        assert_eq!(
            (
                t.frames,
                t.frame_errors,
                t.undetected,
                t.bit_errors,
                t.iterations
            ),
            (3, 2, 1, 3, 10)
        );
    }
}
