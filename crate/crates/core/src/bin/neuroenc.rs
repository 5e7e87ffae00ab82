//! `neuroenc` command-line front end.
//!
//! Exit status: 0 success, 1 usage error, 2 data error, 3 validation failure.
//! Data goes to stdout (or `--out`); diagnostics go to stderr.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use neuroenc::codec::{decode_image, deviation_summary, encode_image, sweep_intervals, CodecError, EncodeMode, ImageU8};
use neuroenc::io::{
    load_config, parse_idx_images, read_pgm, read_spike_table, write_pgm, write_spike_table, Config, ConfigError,
};
use neuroenc::model::{validate_params, Pixel};
use neuroenc::power::image_power_report;
use neuroenc::simulator::SimConfig;

#[derive(Parser)]
#[command(name = "neuroenc", version, about = "Temporal neuromorphic image encoder")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode one image into a spike table.
    Encode(EncodeArgs),
    /// Rebuild an image from a spike table.
    Decode(DecodeArgs),
    /// Analytic and simulated intervals for every pixel value.
    Sweep(SweepArgs),
    /// Compare simulated and analytic intervals against a tolerance.
    Validate(ValidateArgs),
    /// Per-neuron power for a pixel or an image.
    Power(PowerArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// Configuration file (`key = value` lines); defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct StepArg {
    /// Simulator step in seconds (default t_samp / 10^4).
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ImageSource {
    /// MNIST IDX image file (uncompressed).
    #[arg(long)]
    images: Option<PathBuf>,
    /// Binary PGM image.
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    source: ImageSource,
    #[command(flatten)]
    config: ConfigArg,
    /// analytic or sim
    #[arg(long, default_value = "analytic")]
    mode: EncodeMode,
    /// Image index inside an IDX file.
    #[arg(long, default_value_t = 0)]
    index: usize,
    #[command(flatten)]
    step: StepArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    spikes: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
    /// Output PGM (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    step: StepArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    step: StepArg,
    /// Maximum accepted percent deviation.
    #[arg(long, default_value_t = 2.3)]
    tolerance: f64,
}

#[derive(Args)]
struct PowerArgs {
    #[arg(long, conflicts_with = "images", required_unless_present = "images")]
    pixel: Option<u8>,
    #[arg(long)]
    images: Option<PathBuf>,
    #[arg(long, default_value_t = 0, requires = "images")]
    index: usize,
    #[command(flatten)]
    config: ConfigArg,
}

enum Failure {
    Usage(String),
    Data(String),
    Validation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Validation(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Validation(m) => m,
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<CodecError> for Failure {
    fn from(e: CodecError) -> Self {
        match e {
            CodecError::InvalidConfig(_) => Failure::Validation(e.to_string()),
            other => Failure::Data(other.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn read_bytes(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn load(arg: &ConfigArg) -> Result<Config, Failure> {
    let Some(path) = &arg.config else {
        return Ok(Config::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    load_config(&text).map_err(|e| match e {
        ConfigError::InvariantViolation(_) => Failure::Validation(format!("{}: {e}", path.display())),
        _ => Failure::Data(format!("{}: {e}", path.display())),
    })
}

fn require_valid(cfg: &Config) -> CmdResult {
    let report = validate_params(&cfg.branches, &cfg.params);
    if report.is_ok() {
        Ok(())
    } else {
        Err(Failure::Validation(format!("configuration cannot encode every pixel:\n{report}")))
    }
}

fn sim_config(cfg: &Config, step: &StepArg) -> Result<SimConfig, Failure> {
    let mut sim = SimConfig::for_params(&cfg.params);
    if let Some(dt) = step.dt {
        sim.dt = dt;
    }
    sim.check(&cfg.params).map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(sim)
}

fn with_output(out: &Option<PathBuf>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CmdResult {
    match out {
        Some(path) => {
            let mut file = io::BufWriter::new(fs::File::create(path)?);
            f(&mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn load_idx_image(path: &Path, index: usize) -> Result<ImageU8, Failure> {
    let images = parse_idx_images(&read_bytes(path)?).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let count = images.len();
    images
        .into_iter()
        .nth(index)
        .ok_or_else(|| Failure::Data(format!("{}: index {index} out of range ({count} images)", path.display())))
}

fn cmd_encode(args: EncodeArgs) -> CmdResult {
    let cfg = load(&args.config)?;
    require_valid(&cfg)?;
    let sim = sim_config(&cfg, &args.step)?;
    let img = match (&args.source.images, &args.source.pgm) {
        (Some(idx), _) => load_idx_image(idx, args.index)?,
        (None, Some(pgm)) => read_pgm(&read_bytes(pgm)?).map_err(|e| Failure::Data(format!("{}: {e}", pgm.display())))?,
        (None, None) => return Err(Failure::Usage("one of --images or --pgm is required".into())),
    };
    let enc = encode_image(&img, &cfg.branches, &cfg.params, Some(&sim), args.mode)?;
    with_output(&args.out, |w| write_spike_table(&enc, w))?;
    eprintln!(
        "encoded {}x{} image ({} mode): {} spikes, duration {:.6} us, {} warning(s)",
        enc.rows,
        enc.cols,
        enc.mode,
        enc.event_count(),
        enc.duration() * 1e6,
        enc.warnings.len()
    );
    for w in &enc.warnings {
        eprintln!("warning: pixel {} branch {} did not spike", w.window, w.branch_id);
    }
    Ok(())
}

fn cmd_decode(args: DecodeArgs) -> CmdResult {
    let cfg = load(&args.config)?;
    let text = fs::read_to_string(&args.spikes).map_err(|e| Failure::Data(format!("{}: {e}", args.spikes.display())))?;
    let enc = read_spike_table(&text).map_err(|e| Failure::Data(format!("{}: {e}", args.spikes.display())))?;
    let img = decode_image(&enc, &cfg.branches, &cfg.params).map_err(|e| Failure::Data(e.to_string()))?;
    with_output(&args.out, |w| write_pgm(&img, w))?;
    eprintln!("decoded {}x{} image", img.rows(), img.cols());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> CmdResult {
    let cfg = load(&args.config)?;
    require_valid(&cfg)?;
    let sim = sim_config(&cfg, &args.step)?;
    let report = sweep_intervals(Pixel::all(), &cfg.branches, &cfg.params, &sim)?;
    let n = report.interval_count;
    with_output(&args.out, |w| {
        let mut header = vec!["pixel".to_string()];
        for i in 1..=n {
            header.push(format!("d{i}_analytic_ns"));
            header.push(format!("d{i}_sim_ns"));
        }
        writeln!(w, "{}", header.join(","))?;
        for row in report.rows.chunks(n) {
            write!(w, "{}", row[0].pixel)?;
            for r in row {
                write!(w, ",{:.6},{:.6}", r.analytic * 1e9, r.simulated * 1e9)?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    eprintln!("swept 256 pixels over {n} interval(s)");
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> CmdResult {
    let cfg = load(&args.config)?;
    require_valid(&cfg)?;
    let sim = sim_config(&cfg, &args.step)?;
    let report = sweep_intervals(Pixel::all(), &cfg.branches, &cfg.params, &sim)?;
    let summary = deviation_summary(&report)?;
    let pass = summary.max_percent <= args.tolerance;
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("max_percent_deviation={:e}", summary.max_percent);
    println!("mean_percent_deviation={:e}", summary.mean_percent);
    println!("tolerance_percent={}", args.tolerance);
    println!("result={verdict}");
    eprintln!(
        "{verdict}: max deviation {:.3e} %, mean {:.3e} % over {} intervals (tolerance {} %)",
        summary.max_percent,
        summary.mean_percent,
        report.rows.len(),
        args.tolerance
    );
    if pass {
        Ok(())
    } else {
        Err(Failure::Validation(format!(
            "max deviation {:e} % exceeds tolerance {} %",
            summary.max_percent, args.tolerance
        )))
    }
}

fn cmd_power(args: PowerArgs) -> CmdResult {
    let cfg = load(&args.config)?;
    if let Some(p) = args.pixel {
        println!("pixel,power_nw");
        println!("{},{:.4}", p, cfg.power.power_nw(Pixel(p)));
        return Ok(());
    }
    let path = args.images.as_ref().ok_or_else(|| Failure::Usage("--pixel or --images required".into()))?;
    let img = load_idx_image(path, args.index)?;
    let report = image_power_report(&img, &cfg.power, cfg.params.t_samp);
    match report.mean {
        Some(mean) => println!("mean_power_nw={:.4}", mean * 1e9),
        None => println!("mean_power_nw="),
    }
    println!("energy_joules={:e}", report.energy);
    eprintln!("{}x{} image, {} pixels", img.rows(), img.cols(), img.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Power(a) => cmd_power(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
