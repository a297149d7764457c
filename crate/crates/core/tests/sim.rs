use tmp_ldpc::construction::{peg_lift, TieBreak};
use tmp_ldpc::de::{threshold_search, Ensemble, ThresholdConfig};
use tmp_ldpc::sim::{
    de_schedule, run_point, run_sweep, DecoderKind, ScheduleMode, SimConfig, SimRecord,
};
use tmp_ldpc::{BaseMatrix, TannerGraph, WeightSchedule};

const A: f64 = 1.3;
const L: usize = 30;

fn base() -> BaseMatrix {
    let path = format!("{}/fixtures/fl_r34_tmp.bm", env!("CARGO_MANIFEST_DIR"));
    BaseMatrix::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn code(b: &BaseMatrix) -> TannerGraph {
    peg_lift(b, 64, 1, TieBreak::Smallest).unwrap().0
}

fn config(b: &BaseMatrix, decoder: DecoderKind, snr: Vec<f64>) -> SimConfig {
    let w = de_schedule(b, 4.0, A, L).unwrap();
    let mut cfg = SimConfig::new(snr, decoder, ScheduleMode::Fixed(w), b.rate(), L);
    cfg.a = A;
    cfg.threads = 4;
    cfg
}

fn without_time(mut r: Vec<SimRecord>) -> Vec<SimRecord> {
    r.iter_mut().for_each(|r| r.wall_seconds = 0.0);
    r
}

#[test]
fn noiseless_point_has_no_errors() {
    let b = base();
    let g = code(&b);
    for d in [DecoderKind::Tmp, DecoderKind::Bmp, DecoderKind::Bp] {
        let mut cfg = config(&b, d, vec![20.0]);
        cfg.max_frames = 1000;
        let r = run_point(&g, &cfg, 20.0).unwrap();
        assert_eq!(r.frames, 1000);
        assert_eq!(r.fer, 0.0);
        assert_eq!(r.ber, 0.0);
        assert!(r.mean_iterations < 0.01, "{d:?}: {}", r.mean_iterations);
    }
}

#[test]
fn far_below_threshold_every_frame_fails() {
    let b = base();
    let g = code(&b);
    let t = threshold_search(
        &Ensemble::Protograph(b.clone()),
        A,
        &ThresholdConfig::default(),
    )
    .unwrap();
    let x = t.threshold_db - 1.0;
    let mut cfg = config(&b, DecoderKind::Tmp, vec![x]);
    cfg.max_frames = 100;
    cfg.min_frame_errors = 100;
    let r = run_point(&g, &cfg, x).unwrap();
    assert_eq!(r.frames, 100);
    assert!(r.fer >= 0.95, "fer {} at {x:.2} dB", r.fer);
}

#[test]
fn bp_beats_tmp_on_the_same_code() {
    let b = base();
    let g = code(&b);
    for x in [3.5, 4.0] {
        let mut tmp = config(&b, DecoderKind::Tmp, vec![x]);
        tmp.max_frames = 10_000;
        tmp.min_frame_errors = u64::MAX;
        let bp = SimConfig {
            decoder: DecoderKind::Bp,
            ..tmp.clone()
        };
        let rt = run_point(&g, &tmp, x).unwrap();
        let rb = run_point(&g, &bp, x).unwrap();
        assert_eq!((rt.frames, rb.frames), (10_000, 10_000));
        assert!(rb.fer <= rt.fer, "{x} dB: BP {} vs TMP {}", rb.fer, rt.fer);
    }
}

#[test]
fn sweep_is_sorted_monotone_and_reproducible() {
    let b = base();
    let g = code(&b);
    let mut cfg = config(&b, DecoderKind::Tmp, vec![4.0, 3.0, 3.5]);
    cfg.max_frames = 2000;
    cfg.min_frame_errors = 30;
    let r = run_sweep(&g, &cfg).unwrap();
    assert_eq!(r.len(), 3);
    assert!(r.windows(2).all(|w| w[0].ebn0_db < w[1].ebn0_db));
    for w in r.windows(2) {
        if w[1].frame_errors >= 10 {
            assert!(w[1].fer <= w[0].fer, "{:?}", r);
        }
    }
    for x in &r {
        assert_eq!(x.fer, x.frame_errors as f64 / x.frames as f64);
        assert!(x.mean_iterations <= L as f64);
    }
    assert_eq!(without_time(r), without_time(run_sweep(&g, &cfg).unwrap()));
}

#[test]
fn per_snr_schedule_and_floor_stop() {
    let b = base();
    let g = code(&b);
    let mut cfg = config(&b, DecoderKind::Tmp, vec![5.0, 6.0, 7.0]);
    cfg.schedule = ScheduleMode::PerSnr(b.clone());
    cfg.max_frames = 200;
    cfg.fer_floor = Some(0.5);
    let r = run_sweep(&g, &cfg).unwrap();
    assert_eq!(r.len(), 1);
    assert!(r[0].fer < 0.5);
}

#[test]
fn bad_configurations_are_errors() {
    let b = base();
    let g = code(&b);
    let mut cfg = config(&b, DecoderKind::Tmp, vec![3.0]);
    cfg.max_frames = 0;
    assert!(run_sweep(&g, &cfg).is_err());

    let cfg = SimConfig {
        snr_points: vec![],
        ..config(&b, DecoderKind::Tmp, vec![3.0])
    };
    assert!(run_sweep(&g, &cfg).is_err());

    let other = BaseMatrix::new(vec![vec![3, 3]], &[]).unwrap();
    let mut cfg = config(&b, DecoderKind::Tmp, vec![3.0]);
    cfg.schedule = ScheduleMode::Fixed(WeightSchedule::constant(&other, 1.0, L));
    assert!(run_point(&g, &cfg, 3.0).is_err());
    cfg.schedule = ScheduleMode::PerSnr(other);
    assert!(run_point(&g, &cfg, 3.0).is_err());
}
