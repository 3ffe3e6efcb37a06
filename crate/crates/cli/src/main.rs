use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dhci::attack::{mse, psnr, AttackSpec};
use dhci::bds::{instantiate_mode, ModeSpec};
use dhci::corpus::synthetic_corpus;
use dhci::eval::{self, ExperimentPlan, KeySet};
use dhci::io::write_atomic;
use dhci::media::{pgm, Domain, GrayImage};
use dhci::scheme::{self, EmbedConfig, DEFAULT_PRECISION};
use dhci::strategy::KeyFile;
use dhci::verify::{self, StrategySource};

#[derive(Parser)]
#[command(name = "dhci", version, about = "Chaotic-iteration watermarking toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a key file from a seed.
    Keygen(KeygenArgs),
    /// Write deterministic synthetic host images.
    Synth(SynthArgs),
    /// Watermark a host image.
    Embed(EmbedArgs),
    /// Compare a suspect image against the mark expected for a host.
    Detect(DetectArgs),
    /// Chaos and mixing checklist for a mode.
    VerifyMode(VerifyArgs),
    /// Empirical uniformity of final states under a strategy adapter.
    StrategyTest(StrategyArgs),
    /// Apply one attack to an image.
    Attack(AttackArgs),
    /// Run an experiment plan and write its CSV files.
    Bench(BenchArgs),
    /// MSE and PSNR between two images.
    Quality(QualityArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Spatial,
    Dwt,
    Dct,
}

impl From<DomainArg> for Domain {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Spatial => Domain::Spatial,
            DomainArg::Dwt => Domain::Dwt,
            DomainArg::Dct => Domain::Dct,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Neg,
    Fqq,
}

impl From<ModeArg> for ModeSpec {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Neg => ModeSpec::Negation,
            ModeArg::Fqq => ModeSpec::Fqq,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AdapterArg {
    Uniform,
    Ciis,
    Cids,
}

#[derive(Args)]
struct KeygenArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum)]
    domain: DomainArg,
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 512)]
    size: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory; files are named syn-000.pgm, syn-001.pgm, ...
    #[arg(long)]
    dir: PathBuf,
}

#[derive(Args)]
struct SchemeArgs {
    /// Host image (PGM).
    #[arg(long)]
    host: PathBuf,
    /// Message as PBM, PGM (pixels >= 128 are ones) or raw bytes.
    #[arg(long)]
    message: PathBuf,
    #[arg(long)]
    key: PathBuf,
    /// Overrides the domain stored in the key file.
    #[arg(long, value_enum)]
    domain: Option<DomainArg>,
    /// Overrides the mode stored in the key file.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Coefficient quantization step for DWT or DCT.
    #[arg(long)]
    step: Option<f64>,
    /// Iterations per LSC.
    #[arg(long)]
    multiplier: Option<usize>,
}

#[derive(Args)]
struct EmbedArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long)]
    suspect: PathBuf,
    /// Defaults to the operating point of the domain and mode.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Number of components.
    #[arg(long = "l")]
    l: usize,
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    /// Largest power examined for regularity and convergence.
    #[arg(long, default_value_t = 100_000)]
    cap: u64,
}

#[derive(Args)]
struct StrategyArgs {
    #[arg(long, value_enum)]
    adapter: AdapterArg,
    #[arg(long, value_enum, default_value = "neg")]
    mode: ModeArg,
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Iterations per trial; CIDS needs q <= n + 1.
    #[arg(long, default_value_t = 64)]
    q: usize,
    #[arg(long, default_value_t = 51_200)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// For example crop:36, jpeg:70, j2k:8, contrast:0.8, sharpen:0.5, rot:10.
    #[arg(long)]
    spec: AttackSpec,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    plan: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Overrides the plan's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QualityArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
}

fn read_image(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    pgm::read_pgm(&bytes).with_context(|| format!("decoding {}", path.display()))
}

fn write_image(path: &Path, img: &GrayImage) -> Result<()> {
    write_atomic(path, &pgm::write_pgm(img)).with_context(|| format!("writing {}", path.display()))
}

fn fmt_psnr(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.6}")
    }
}

impl SchemeArgs {
    fn load(&self) -> Result<(GrayImage, Vec<bool>, EmbedConfig)> {
        let host = read_image(&self.host)?;
        let message = pgm::read_message_bits(
            &std::fs::read(&self.message)
                .with_context(|| format!("reading {}", self.message.display()))?,
        )?;
        let mut kf = KeyFile::load(&self.key).with_context(|| format!("loading key {}", self.key.display()))?;
        if let Some(d) = self.domain {
            kf.domain = Domain::from(d).name().to_string();
        }
        if let Some(m) = self.mode {
            kf.mode = ModeSpec::from(m).name().to_string();
        }
        let mut cfg = EmbedConfig::from_key_file(&kf)?;
        if let Some(step) = self.step {
            if !(step > 0.0 && step.is_finite()) {
                bail!("--step must be positive");
            }
            cfg.codec = cfg.codec.with_step(step);
        }
        if let Some(m) = self.multiplier {
            cfg.multiplier = m;
        }
        Ok((host, message, cfg))
    }
}

fn keygen(a: &KeygenArgs) -> Result<ExitCode> {
    let k = &KeySet::generate(&["key"], a.seed).hosts[0];
    let kf = KeyFile::new(k.key, k.alpha, DEFAULT_PRECISION, &a.mode.into(), a.domain.into())?;
    kf.save(&a.out)?;
    println!("wrote {}", a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn synth(a: &SynthArgs) -> Result<ExitCode> {
    if a.size == 0 {
        bail!("--size must be positive");
    }
    std::fs::create_dir_all(&a.dir)?;
    for (i, img) in synthetic_corpus(a.count, a.size, a.size, a.seed).iter().enumerate() {
        let path = a.dir.join(format!("syn-{i:03}.pgm"));
        write_image(&path, img)?;
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn embed(a: &EmbedArgs) -> Result<ExitCode> {
    let (host, message, cfg) = a.scheme.load()?;
    let e = scheme::embed(&host, &message, &cfg)?;
    write_image(&a.out, &e.image)?;
    println!(
        "lm={} q={} psnr={} unresolved={}",
        e.lm,
        e.q,
        fmt_psnr(psnr(&host, &e.image)?),
        e.unresolved
    );
    Ok(ExitCode::SUCCESS)
}

fn detect(a: &DetectArgs) -> Result<ExitCode> {
    let (host, message, cfg) = a.scheme.load()?;
    let suspect = read_image(&a.suspect)?;
    let threshold = a.threshold.unwrap_or_else(|| cfg.default_threshold());
    let r = scheme::detect(&host, &message, &suspect, &cfg, threshold)?;
    println!(
        "rate={:.6} threshold={} lm={} verdict={}",
        r.difference_rate,
        r.threshold,
        r.lsc_count,
        if r.watermarked { "watermarked" } else { "not-watermarked" }
    );
    Ok(if r.watermarked {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn verify_mode(a: &VerifyArgs) -> Result<ExitCode> {
    let mode: ModeSpec = a.mode.into();
    let r = verify::verify_mode(&mode, a.l, a.eps, a.cap)?;
    let opt = |v: Option<u64>| v.map_or("none".to_string(), |v| v.to_string());
    println!(
        "mode={} l={} connected={} doubly_stochastic={} regular={} regularity_exponent={} convergence_q={} gap={}",
        mode.name(),
        r.n,
        r.strongly_connected,
        r.doubly_stochastic,
        r.regularity_exponent.is_some(),
        opt(r.regularity_exponent),
        opt(r.convergence.map(|c| c.q)),
        r.convergence.map_or("none".to_string(), |c| format!("{:e}", c.gap)),
    );
    Ok(ExitCode::SUCCESS)
}

fn strategy_test(a: &StrategyArgs) -> Result<ExitCode> {
    let f = instantiate_mode(&a.mode.into(), a.n)?;
    let source = match a.adapter {
        AdapterArg::Uniform => StrategySource::Uniform,
        AdapterArg::Ciis => StrategySource::Ciis,
        AdapterArg::Cids => StrategySource::Cids,
    };
    let r = verify::empirical_uniformity(&f, source, a.q, a.trials, a.seed)?;
    println!("state,count");
    for (s, c) in r.histogram.iter().enumerate() {
        println!("{s:0width$b},{c}", width = a.n);
    }
    let critical = r.critical_value(0.999);
    println!(
        "chi_square={:.6} dof={} critical_0.999={:.6} uniform={}",
        r.chi_square,
        r.degrees_of_freedom,
        critical,
        r.chi_square < critical
    );
    Ok(ExitCode::SUCCESS)
}

fn attack(a: &AttackArgs) -> Result<ExitCode> {
    let img = read_image(&a.input)?;
    write_image(&a.out, &a.spec.apply(&img)?)?;
    Ok(ExitCode::SUCCESS)
}

fn bench(a: &BenchArgs) -> Result<ExitCode> {
    let mut plan = ExperimentPlan::load(&a.plan).with_context(|| format!("loading plan {}", a.plan.display()))?;
    if let Some(out) = &a.out {
        plan.output = out.clone();
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs).build()?;
    let report = pool.install(|| eval::run_plan(&plan))?;
    for path in report.write(&plan.output)? {
        println!("wrote {}", path.display());
    }
    for (v, variant) in report.sets.variants.iter().enumerate() {
        println!("{variant} mean_psnr={:.6}", report.sets.mean_psnr(v));
    }
    Ok(ExitCode::SUCCESS)
}

fn quality(a: &QualityArgs) -> Result<ExitCode> {
    let (x, y) = (read_image(&a.a)?, read_image(&a.b)?);
    println!("mse={:.6} psnr={}", mse(&x, &y)?, fmt_psnr(psnr(&x, &y)?));
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Keygen(a) => keygen(a),
        Command::Synth(a) => synth(a),
        Command::Embed(a) => embed(a),
        Command::Detect(a) => detect(a),
        Command::VerifyMode(a) => verify_mode(a),
        Command::StrategyTest(a) => strategy_test(a),
        Command::Attack(a) => attack(a),
        Command::Bench(a) => bench(a),
        Command::Quality(a) => quality(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
