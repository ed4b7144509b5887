use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use music_scatter::commands::{
    cmd_compare, cmd_image, cmd_ingest, cmd_simulate, cmd_validate_identities, CompareTarget,
    ImageOptions, Tolerances,
};
use music_scatter::io::config::{LoadedConfig, RunConfig};
use music_scatter::io::fresnel::FresnelColumns;
use music_scatter::music::{RankPolicy, Side};
use music_scatter::scene::{RoiGrid, Vec2, DEFAULT_GRID_SIZE};
use music_scatter::theory::Polarization;
use music_scatter::{Error, Result};

/// MUSIC-type imaging of small inclusions from far-field MSR data.
#[derive(Parser, Debug)]
#[command(name = "music-scatter", version)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Noise seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; overrides the configuration.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate MSR matrix files from a run configuration.
    Simulate,
    /// Image an MSR matrix file.
    Image(ImageArgs),
    /// Compare an imaging map with the single-inclusion predictor or another map.
    Compare(CompareArgs),
    /// Convert a bistatic measurement file into MSR matrix files.
    Ingest(IngestArgs),
    /// Check the direction-sum identities at random points.
    ValidateIdentities(IdentityArgs),
}

#[derive(Args, Debug)]
struct ImageArgs {
    /// MSR matrix file.
    #[arg(long)]
    matrix: PathBuf,
    /// Fixed signal rank.
    #[arg(long, conflicts_with = "threshold")]
    rank: Option<usize>,
    /// Relative singular-value threshold for the signal rank.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_parser = parse_polarization)]
    polarization: Option<Polarization>,
    /// Polarization direction angle in degrees for dipole test vectors.
    #[arg(long, conflicts_with = "te_sweep")]
    xi_deg: Option<f64>,
    /// Maximize the dipole map over a sweep of polarization directions.
    #[arg(long)]
    te_sweep: bool,
    #[arg(long, value_parser = parse_side)]
    side: Option<Side>,
    /// Pixels per side of the square grid.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Half-width (m) of the square grid.
    #[arg(long)]
    roi_half: Option<f64>,
    #[arg(long)]
    peak_cap: Option<f64>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Empirical map CSV.
    #[arg(long)]
    map: PathBuf,
    /// Inclusion center "x,y" (m) for the predictor.
    #[arg(long, value_parser = parse_point, required_unless_present = "against")]
    center: Option<Vec2>,
    /// Second map CSV to compare against instead of the predictor.
    #[arg(long, conflicts_with = "center")]
    against: Option<PathBuf>,
    #[arg(long, value_parser = parse_polarization, default_value = "tm")]
    polarization: Polarization,
    /// Exclusion radius around the center, in pixels.
    #[arg(long, default_value_t = 1.0)]
    exclusion_px: f64,
    #[arg(long, default_value_t = Tolerances::default().min_correlation)]
    min_correlation: f64,
    #[arg(long, default_value_t = Tolerances::default().max_l2_rel)]
    max_l2_rel: f64,
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// ASCII measurement file.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args, Debug)]
struct IdentityArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Largest k|x| sampled.
    #[arg(long, default_value_t = 8.0)]
    kr_max: f64,
}

fn parse_polarization(s: &str) -> std::result::Result<Polarization, String> {
    match s {
        "tm" => Ok(Polarization::Tm),
        "te" => Ok(Polarization::Te),
        _ => Err(format!("expected tm or te, got '{s}'")),
    }
}

fn parse_side(s: &str) -> std::result::Result<Side, String> {
    match s {
        "left" => Ok(Side::Left),
        "right" => Ok(Side::Right),
        "both" => Ok(Side::Both),
        _ => Err(format!("expected left, right or both, got '{s}'")),
    }
}

fn parse_point(s: &str) -> std::result::Result<Vec2, String> {
    let (a, b) = s.split_once(',').ok_or("expected x,y")?;
    let x = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let y = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok(Vec2::new(x, y))
}

fn load_config(cli: &Cli) -> Result<Option<LoadedConfig>> {
    cli.config.as_deref().map(RunConfig::load).transpose()
}

fn require_config(cfg: Option<LoadedConfig>) -> Result<LoadedConfig> {
    cfg.ok_or_else(|| Error::Invalid("this command needs --config".into()))
}

fn output_dir(cli: &Cli, cfg: Option<&LoadedConfig>) -> PathBuf {
    cli.output_dir
        .clone()
        .or_else(|| cfg.map(|c| c.config.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Writes to stdout. A closed pipe (e.g. `| head`) is not an error.
fn emit(s: &str) {
    let _ = std::io::stdout().lock().write_all(s.as_bytes());
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    }
    let cfg = load_config(&cli)?;
    let out = output_dir(&cli, cfg.as_ref());
    match &cli.command {
        Command::Simulate => {
            let cfg = require_config(cfg)?;
            for p in cmd_simulate(&cfg, cli.seed, &out)? {
                emit(&format!("{}\n", p.display()));
            }
        }
        Command::Image(a) => {
            let base = cfg.as_ref().map(|c| &c.config);
            let grid = match (a.grid_n, a.roi_half) {
                (None, None) => match &cfg {
                    Some(c) => c.grid()?,
                    None => RoiGrid::square(0.1, DEFAULT_GRID_SIZE)?,
                },
                (n, h) => RoiGrid::square(h.unwrap_or(0.1), n.unwrap_or(DEFAULT_GRID_SIZE))?,
            };
            let rank = match (a.rank, a.threshold) {
                (Some(r), _) => RankPolicy::Fixed(r),
                (None, Some(t)) => RankPolicy::Threshold(t),
                (None, None) => base.map(|c| c.rank).unwrap_or_default(),
            };
            let pol = a
                .polarization
                .or(base.map(|c| c.polarization))
                .unwrap_or(Polarization::Tm);
            let mut imaging = base.map(|c| c.imaging).unwrap_or_default();
            if let Some(x) = a.xi_deg {
                imaging.xi_deg = Some(x);
                imaging.te_sweep = false;
            }
            if a.te_sweep {
                imaging.te_sweep = true;
            }
            let family = imaging.family(pol);
            if pol == Polarization::Tm && (a.xi_deg.is_some() || a.te_sweep) {
                return Err(Error::Invalid("--xi-deg and --te-sweep need --polarization te".into()));
            }
            let opts = ImageOptions {
                grid,
                rank,
                family,
                side: a.side.or(imaging.side),
                peak_cap: a.peak_cap.unwrap_or(imaging.peak_cap),
                config_hash: cfg.as_ref().map(|c| c.hash.clone()),
            };
            for p in cmd_image(&a.matrix, &opts, &out)? {
                emit(&format!("{}\n", p.display()));
            }
        }
        Command::Compare(a) => {
            let target = match (&a.against, a.center) {
                (Some(p), _) => CompareTarget::Map(p.clone()),
                (None, Some(c)) => CompareTarget::Theory {
                    center: c,
                    polarization: a.polarization,
                },
                (None, None) => return Err(Error::Invalid("need --center or --against".into())),
            };
            let tol = Tolerances {
                min_correlation: a.min_correlation,
                max_l2_rel: a.max_l2_rel,
            };
            let dir = cli.output_dir.as_deref();
            let outcome = cmd_compare(&a.map, &target, a.exclusion_px, tol, dir)?;
            emit(&format!("{}pass: {}\n", outcome.report.to_key_value(), outcome.pass));
            if !outcome.pass {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Ingest(a) => {
            let columns = cfg
                .as_ref()
                .map(|c| c.config.fresnel.clone())
                .unwrap_or_else(FresnelColumns::default);
            let hash = cfg.as_ref().map(|c| c.hash.clone());
            for p in cmd_ingest(&a.input, &columns, &out, hash)? {
                emit(&format!("{}\n", p.display()));
            }
        }
        Command::ValidateIdentities(a) => {
            let rep = cmd_validate_identities(a.n, a.points, a.kr_max, cli.seed.unwrap_or(0))?;
            emit(&rep.to_key_value());
            if !rep.passes() {
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
