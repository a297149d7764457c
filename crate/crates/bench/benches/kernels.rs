use criterion::{black_box, criterion_group, criterion_main, Criterion};

use tmp_ldpc::channel::{fill_awgn_allzero, llr_from_observation, substream, ChannelParams};
use tmp_ldpc::construction::{peg_lift, TieBreak};
use tmp_ldpc::de::{de_run_protograph, DeConfig};
use tmp_ldpc::decoders::{BpDecoder, DecoderConfig, MessagePassingDecoder};
use tmp_ldpc::sim::de_schedule;
use tmp_ldpc::spectrum::growth_rate;
use tmp_ldpc_bench::rate34;

const EBN0: f64 = 3.8;
const L: usize = 30;

fn decoders(c: &mut Criterion) {
    let b = rate34();
    let (g, _) = peg_lift(&b, 500, 1, TieBreak::Random).unwrap();
    let ch = ChannelParams::from_ebn0(EBN0, b.rate()).unwrap();
    let mut rng = substream(1, 0);
    let frames: Vec<Vec<f64>> = (0..16)
        .map(|_| {
            let mut y = vec![0.0; g.num_vns()];
            fill_awgn_allzero(&mut y, ch.sigma, &mut rng);
            y.iter()
                .map(|&v| llr_from_observation(v, ch.sigma))
                .collect()
        })
        .collect();
    let cfg = DecoderConfig {
        max_iters: L,
        ..DecoderConfig::new(1.3, de_schedule(&b, EBN0, 1.3, L).unwrap())
    };

    let mut k = 0;
    let mut mp = MessagePassingDecoder::new(&g);
    c.bench_function("tmp_decode_n4000", |bench| {
        bench.iter(|| {
            k = (k + 1) % frames.len();
            black_box(mp.decode_tmp(&frames[k], &cfg).unwrap().iterations_used)
        })
    });
    let mut bp = BpDecoder::new(&g);
    c.bench_function("bp_decode_n4000", |bench| {
        bench.iter(|| {
            k = (k + 1) % frames.len();
            black_box(bp.decode(&frames[k], L, true).unwrap().iterations_used)
        })
    });
}

fn analysis(c: &mut Criterion) {
    let b = rate34();
    let cfg = DeConfig {
        stop_on_convergence: false,
        ..DeConfig::with_l_max(50)
    };
    c.bench_function("protograph_de_50_iterations", |bench| {
        bench.iter(|| black_box(de_run_protograph(&b, EBN0, 1.3, &cfg).unwrap().iterations))
    });
    c.bench_function("growth_rate_point", |bench| {
        bench.iter(|| black_box(growth_rate(&b, 0.005).unwrap()))
    });
    c.bench_function("peg_lift_q500", |bench| {
        bench.iter(|| {
            black_box(
                peg_lift(&b, 500, 1, TieBreak::Random)
                    .unwrap()
                    .0
                    .num_edges(),
            )
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = decoders, analysis
}
criterion_main!(benches);
