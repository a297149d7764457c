use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tmp_ldpc::construction::{girth_report, peg_lift, to_alist, CirculantLift, TieBreak};
use tmp_ldpc::de::{
    alpha_beta, optimize_quantizer, stability_gamma, Ensemble, StabilityInputs, ThresholdConfig,
};
use tmp_ldpc::optimizer::{evolve, log_to_csv, SearchConfig, Target};
use tmp_ldpc::sim::{de_schedule, records_to_csv, run_sweep, DecoderKind, ScheduleMode, SimConfig};
use tmp_ldpc::spectrum::{default_grid, spectral_shape, SpectrumConfig};
use tmp_ldpc::{BaseMatrix, ChannelParams, DegreeDistribution, WeightSchedule};

#[derive(Parser)]
#[command(
    name = "tmp-ldpc",
    version,
    about = "Ternary message passing for LDPC codes"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decoding threshold, best quantizer threshold and weight schedule.
    Threshold(ThresholdArgs),
    /// Stability spectral radius of an unstructured ensemble.
    Stability(StabilityArgs),
    /// Growth rate G(omega) and typical minimum distance.
    Spectrum(SpectrumArgs),
    /// Differential-evolution search for a base matrix.
    Optimize(OptimizeArgs),
    /// Circulant PEG lifting of a base matrix.
    Lift(LiftArgs),
    /// Monte Carlo FER/BER simulation.
    Simulate(SimulateArgs),
    /// Export or check DE weight schedules.
    #[command(subcommand)]
    Weights(WeightsCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Tmp,
    Bmp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Decoder {
    Tmp,
    Bmp,
    Bp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Tie {
    Smallest,
    Random,
}

#[derive(Args)]
struct ThresholdArgs {
    /// Base matrix file.
    #[arg(long, conflicts_with = "regular")]
    base: Option<PathBuf>,
    /// Unstructured regular ensemble `dv,dc` instead of a base matrix.
    #[arg(long, value_parser = parse_pair)]
    regular: Option<(u32, u32)>,
    /// Quantizer thresholds `lo:hi:step` or a comma list.
    #[arg(long, default_value = "0.1:3.0:0.1")]
    a_grid: String,
    #[arg(long, value_enum, default_value = "tmp")]
    decoder: Algo,
    #[arg(long, default_value_t = 200)]
    l_max: usize,
    /// Bisection tolerance in dB.
    #[arg(long, default_value_t = 0.01)]
    tol: f64,
    /// Write the weight schedule at the threshold here.
    #[arg(long)]
    weights_out: Option<PathBuf>,
    /// Write `a,threshold_db` per grid point here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct StabilityArgs {
    #[arg(long, default_value_t = 0.0)]
    lambda2: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda3: f64,
    /// Check-regular degree; sets rho'(1) = dc - 1.
    #[arg(long, conflicts_with = "rho_prime")]
    rho_dc: Option<u32>,
    /// rho'(1) directly.
    #[arg(long)]
    rho_prime: Option<f64>,
    /// Channel erasure probability; with `--beta` replaces the channel flags.
    #[arg(long, requires = "beta")]
    alpha: Option<f64>,
    #[arg(long, requires = "alpha")]
    beta: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    #[arg(long)]
    ebn0: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    rate: f64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    base: PathBuf,
    /// Omega grid `lo:hi:step` or a comma list; default is a log-spaced grid.
    #[arg(long)]
    grid: Option<String>,
    /// Write `omega,G` here.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    m0: usize,
    #[arg(long)]
    n0: usize,
    #[arg(long, default_value_t = 20)]
    max_vn_degree: u32,
    /// Largest entry; default depends on the rate.
    #[arg(long)]
    max_entry: Option<u32>,
    #[arg(long, value_enum, default_value = "tmp")]
    target: Algo,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long, default_value_t = 50)]
    generations: usize,
    #[arg(long, default_value_t = 0.8)]
    f: f64,
    #[arg(long, default_value_t = 0.9)]
    cr: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "0.2:4.0:0.2")]
    a_grid: String,
    /// Comma list of punctured columns.
    #[arg(long)]
    punctured: Option<String>,
    /// Write the best base matrix here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the generation log here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct LiftArgs {
    #[arg(long)]
    base: PathBuf,
    #[arg(long)]
    q: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "random")]
    tie: Tie,
    /// Output prefix; writes `<out>.lift` and `<out>.alist`.
    #[arg(long)]
    out: PathBuf,
    /// Longest cycle searched by the girth report; 0 skips it.
    #[arg(long, default_value_t = 8)]
    girth: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Base matrix; defines the rate and the DE schedule.
    #[arg(long)]
    base: PathBuf,
    /// Lift file; otherwise the base matrix is lifted with `--q`.
    #[arg(long, conflicts_with = "q")]
    lift: Option<PathBuf>,
    #[arg(long)]
    q: Option<usize>,
    /// Eb/N0 points `lo:hi:step` or a comma list.
    #[arg(long)]
    snr: String,
    #[arg(long, value_enum, default_value = "tmp")]
    decoder: Decoder,
    #[arg(long, default_value_t = 1.3)]
    a: f64,
    #[arg(long, default_value_t = 50)]
    l_max: usize,
    /// Weight schedule file. Without it the DE schedule at the ensemble
    /// threshold is used.
    #[arg(long, conflicts_with = "per_snr")]
    weights: Option<PathBuf>,
    /// Recompute DE weights at every Eb/N0.
    #[arg(long)]
    per_snr: bool,
    #[arg(long, default_value_t = 100_000)]
    max_frames: u64,
    #[arg(long, default_value_t = 50)]
    min_errors: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads; 0 uses TMP_LDPC_THREADS or all CPUs.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Stop after the first point with FER below this.
    #[arg(long)]
    fer_floor: Option<f64>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum WeightsCmd {
    /// DE weights of a base matrix at a given Eb/N0.
    Export {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        ebn0: f64,
        #[arg(long, default_value_t = 1.3)]
        a: f64,
        #[arg(long, default_value_t = 50)]
        l_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a schedule file against a base matrix and print it as CSV.
    Import {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn parse_pair(s: &str) -> std::result::Result<(u32, u32), String> {
    let (a, b) = s.split_once(',').ok_or("expected dv,dc")?;
    Ok((
        a.trim().parse().map_err(|e| format!("{e}"))?,
        b.trim().parse().map_err(|e| format!("{e}"))?,
    ))
}

/// `lo:hi:step` (inclusive) or `x,y,z`.
fn parse_list(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()?;
        let (lo, hi, step) = (v[0], v[1], v[2]);
        if !(step > 0.0) || hi < lo {
            bail!("bad range {s}");
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        // round to suppress accumulation noise such as 0.30000000000000004
        return Ok((0..=n)
            .map(|k| ((lo + k as f64 * step) * 1e9).round() / 1e9)
            .collect());
    }
    Ok(s.split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()?)
}

fn read_base(path: &Path) -> Result<BaseMatrix> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(BaseMatrix::parse(&text).with_context(|| format!("parsing {}", path.display()))?)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn threshold(args: ThresholdArgs) -> Result<()> {
    let ensemble = match (&args.base, args.regular) {
        (Some(p), _) => Ensemble::Protograph(read_base(p)?),
        (None, Some((dv, dc))) => Ensemble::Unstructured(DegreeDistribution::regular(dv, dc)?),
        (None, None) => bail!("give --base or --regular"),
    };
    let grid = match args.decoder {
        Algo::Tmp => parse_list(&args.a_grid)?,
        Algo::Bmp => vec![0.0],
    };
    let cfg = ThresholdConfig {
        tol_db: args.tol,
        ..ThresholdConfig::with_l_max(args.l_max)
    };
    let q = optimize_quantizer(&ensemble, &grid, &cfg)?;
    println!("a* = {}", q.a);
    println!(
        "threshold = {:.4} dB (rate {:.4})",
        q.threshold_db,
        ensemble.rate()?
    );
    if q.best.criteria_agree == Some(false) {
        println!("warning: message and APP criteria disagree at the threshold");
    }
    if let Some(p) = &args.csv {
        let mut s = String::from("a,threshold_db\n");
        for (a, t) in &q.per_a {
            let _ = writeln!(s, "{a},{}", t.map(|t| t.to_string()).unwrap_or_default());
        }
        write(p, &s)?;
    }
    if let Some(p) = &args.weights_out {
        let Ensemble::Protograph(b) = &ensemble else {
            bail!("weight schedules need a base matrix")
        };
        write(
            p,
            &de_schedule(b, q.threshold_db, q.a, args.l_max)?.to_text(),
        )?;
    }
    Ok(())
}

fn stability(args: StabilityArgs) -> Result<()> {
    let rho_prime = match (args.rho_dc, args.rho_prime) {
        (Some(dc), _) => dc.saturating_sub(1) as f64,
        (None, Some(r)) => r,
        (None, None) => bail!("give --rho-dc or --rho-prime"),
    };
    let (alpha, beta) = match (args.alpha, args.beta, args.ebn0) {
        (Some(a), Some(b), _) => (a, b),
        (_, _, Some(x)) => {
            let ch = ChannelParams::from_ebn0(x, args.rate)?;
            alpha_beta(args.a, ch.mu_ch, ch.sigma_ch)
        }
        _ => bail!("give --alpha and --beta, or --ebn0"),
    };
    let s = StabilityInputs::new(alpha, beta, args.lambda2, args.lambda3, rho_prime)?;
    let g = stability_gamma(&s);
    println!("alpha = {alpha:.6e}, beta = {beta:.6e}");
    println!("gamma = {g}");
    println!("{}", if g < 1.0 { "STABLE" } else { "UNSTABLE" });
    if let Some(p) = &args.csv {
        write(p, &format!("alpha,beta,lambda2,lambda3,rho_prime_1,gamma\n{alpha},{beta},{},{},{rho_prime},{g}\n", args.lambda2, args.lambda3))?;
    }
    Ok(())
}

fn spectrum(args: SpectrumArgs) -> Result<()> {
    let b = read_base(&args.base)?;
    let grid = match &args.grid {
        Some(g) => parse_list(g)?,
        None => default_grid(),
    };
    let cfg = SpectrumConfig {
        seed: args.seed,
        ..SpectrumConfig::default()
    };
    let shape = spectral_shape(&b, &grid, &cfg)?;
    match shape.omega_star {
        Some(w) => println!("omega* = {w:.6e}"),
        None => println!("omega* does not exist (G >= 0 near zero or no sign change)"),
    }
    match &args.csv {
        Some(p) => write(p, &shape.to_csv())?,
        None => print!("{}", shape.to_csv()),
    }
    Ok(())
}

fn optimize(args: OptimizeArgs) -> Result<()> {
    let target = match args.target {
        Algo::Tmp => Target::Tmp,
        Algo::Bmp => Target::Bmp,
    };
    let mut cfg = SearchConfig::new(args.m0, args.n0, args.max_vn_degree, target);
    if let Some(s) = args.max_entry {
        cfg.max_entry = s;
    }
    if let Some(p) = args.population {
        cfg.population_size = p;
    }
    cfg.generations = args.generations;
    cfg.f = args.f;
    cfg.cr = args.cr;
    cfg.seed = args.seed;
    cfg.a_grid = parse_list(&args.a_grid)?;
    if let Some(p) = &args.punctured {
        cfg.punctured = p
            .split(',')
            .map(|t| t.trim().parse())
            .collect::<std::result::Result<_, _>>()?;
    }
    let out = evolve(&cfg)?;
    let best = &out.best;
    println!("{}", best.base.to_text().trim_end());
    println!(
        "threshold = {:.4} dB, a = {}, omega* = {}",
        best.threshold_db.unwrap_or(f64::NAN),
        best.a.unwrap_or(f64::NAN),
        best.omega_star.map_or("-".into(), |w| format!("{w:.6e}"))
    );
    if let Some(p) = &args.out {
        write(p, &best.base.to_text())?;
    }
    if let Some(p) = &args.csv {
        write(p, &log_to_csv(&out.log))?;
    }
    Ok(())
}

fn lift(args: LiftArgs) -> Result<()> {
    let b = read_base(&args.base)?;
    let tie = match args.tie {
        Tie::Smallest => TieBreak::Smallest,
        Tie::Random => TieBreak::Random,
    };
    let (g, l) = peg_lift(&b, args.q, args.seed, tie)?;
    let stem = args.out.to_string_lossy().into_owned();
    write(Path::new(&format!("{stem}.lift")), &l.to_text())?;
    write(Path::new(&format!("{stem}.alist")), &to_alist(&g))?;
    println!(
        "n = {}, m = {}, edges = {}",
        g.num_vns(),
        g.num_cns(),
        g.num_edges()
    );
    let mut csv = format!(
        "q,n,m,edges,girth,girth_count\n{},{},{},{}",
        args.q,
        g.num_vns(),
        g.num_cns(),
        g.num_edges()
    );
    if args.girth >= 4 {
        let r = girth_report(&g, args.girth);
        match r.girth {
            Some(x) => println!("girth = {x} ({} VNs on shortest cycles)", r.count),
            None => println!("no cycle up to length {}", args.girth),
        }
        let _ = writeln!(
            csv,
            ",{},{}",
            r.girth.map(|x| x.to_string()).unwrap_or_default(),
            r.count
        );
    } else {
        csv.push_str(",,\n");
    }
    if let Some(p) = &args.csv {
        write(p, &csv)?;
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let b = read_base(&args.base)?;
    let graph = match (&args.lift, args.q) {
        (Some(p), _) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let l = CirculantLift::parse(&text)?;
            if l.base_matrix()? != b {
                bail!("lift {} does not match the base matrix", p.display());
            }
            l.to_graph()
        }
        (None, Some(q)) => peg_lift(&b, q, args.seed, TieBreak::Random)?.0,
        (None, None) => bail!("give --lift or --q"),
    };
    let snr = parse_list(&args.snr)?;
    let decoder = match args.decoder {
        Decoder::Tmp => DecoderKind::Tmp,
        Decoder::Bmp => DecoderKind::Bmp,
        Decoder::Bp => DecoderKind::Bp,
    };
    let a = if matches!(args.decoder, Decoder::Tmp) {
        args.a
    } else {
        0.0
    };
    let schedule = if args.per_snr {
        ScheduleMode::PerSnr(b.clone())
    } else if let Some(p) = &args.weights {
        let text =
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        ScheduleMode::Fixed(WeightSchedule::parse(&text, &b)?)
    } else if decoder == DecoderKind::Bp {
        ScheduleMode::Fixed(WeightSchedule::constant(&b, 1.0, args.l_max))
    } else {
        let cfg = ThresholdConfig {
            check_criteria: false,
            ..ThresholdConfig::with_l_max(args.l_max)
        };
        let t = optimize_quantizer(&Ensemble::Protograph(b.clone()), &[a], &cfg)?;
        eprintln!("DE threshold {:.3} dB at a = {a}", t.threshold_db);
        ScheduleMode::Fixed(de_schedule(&b, t.threshold_db, a, args.l_max)?)
    };
    let mut cfg = SimConfig::new(snr, decoder, schedule, b.rate(), args.l_max);
    cfg.a = a;
    cfg.max_frames = args.max_frames;
    cfg.min_frame_errors = args.min_errors;
    cfg.seed = args.seed;
    cfg.threads = args.threads;
    cfg.fer_floor = args.fer_floor;
    let records = run_sweep(&graph, &cfg)?;
    for r in &records {
        println!(
            "{:.2} dB  FER {:.3e}  BER {:.3e}  frames {}  errors {}",
            r.ebn0_db, r.fer, r.ber, r.frames, r.frame_errors
        );
    }
    if let Some(p) = &args.csv {
        write(p, &records_to_csv(&records))?;
    }
    Ok(())
}

fn weights(cmd: WeightsCmd) -> Result<()> {
    match cmd {
        WeightsCmd::Export {
            base,
            ebn0,
            a,
            l_max,
            out,
        } => {
            let b = read_base(&base)?;
            let text = de_schedule(&b, ebn0, a, l_max)?.to_text();
            match out {
                Some(p) => write(&p, &text)?,
                None => print!("{text}"),
            }
        }
        WeightsCmd::Import { base, file, csv } => {
            let b = read_base(&base)?;
            let text = std::fs::read_to_string(&file)
                .with_context(|| format!("reading {}", file.display()))?;
            let w = WeightSchedule::parse(&text, &b)?;
            let (m0, n0) = w.dims();
            let mut s = String::from("iteration");
            for i in 0..m0 {
                for j in 0..n0 {
                    let _ = write!(s, ",w_{i}_{j}");
                }
            }
            s.push('\n');
            for l in 1..=w.iterations() {
                let cells: Vec<String> = w.row(l).iter().map(|x| x.to_string()).collect();
                let _ = writeln!(s, "{l},{}", cells.join(","));
            }
            println!("{} iterations, {m0}x{n0} edge types", w.iterations());
            match csv {
                Some(p) => write(&p, &s)?,
                None => print!("{s}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Threshold(a) => threshold(a),
        Cmd::Stability(a) => stability(a),
        Cmd::Spectrum(a) => spectrum(a),
        Cmd::Optimize(a) => optimize(a),
        Cmd::Lift(a) => lift(a),
        Cmd::Simulate(a) => simulate(a),
        Cmd::Weights(c) => weights(c),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
