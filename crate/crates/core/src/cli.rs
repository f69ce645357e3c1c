//! Headless entry points: validate a dataset, compute a session to JSON files,
//! or run the service.
//!
//! Exit codes: 0 ok, 1 validation, 2 computation precondition, 3 I/O.

use std::fs;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::corpus::{load_dataset, validate_dataset};
use crate::error::{Error, Result};
use crate::metrics::KMode;
use crate::projection::{ProjectionConfig, ProjectionMethod};
use crate::service::{self, AppState};
use crate::session::{ColorBy, LayoutConfig, Session, SessionConfig, DEFAULT_MAX_POINTS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Output files of `compute`, in the order they are written.
pub const OUTPUT_FILES: [&str; 4] = ["layout.json", "metrics.json", "matrices.json", "summaries.json"];

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        Error::DegenerateInput(_)
        | Error::KOutOfRange { .. }
        | Error::EmptyCluster
        | Error::NoFeatureValues(_)
        | Error::MissingPosition(_)
        | Error::EmptySelection => EXIT_PRECONDITION,
        _ => EXIT_VALIDATION,
    }
}

#[derive(Debug, Parser)]
#[command(name = "embedflow", version, about = "Layer-wise embedding projections, diagnostics and flow layouts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a dataset manifest and the files it references.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Compute a session offline and write its JSON payloads.
    Compute(ComputeArgs),
    /// Serve the HTTP API over the datasets in a directory.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KModeArg {
    Fixed,
    Cluster,
}

#[derive(Debug, Clone, Args)]
pub struct ComputeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Filter expression, e.g. `token=="cell" && POS=="NOUN"`.
    #[arg(long, default_value = "*")]
    pub filter: String,
    /// `pca` or `external:NAME`; repeat once for a second row.
    #[arg(long, default_value = "pca")]
    pub projection: Vec<String>,
    /// Inclusive model-layer range `A-B`.
    #[arg(long)]
    pub layers: Option<String>,
    /// Neighborhood size; implies `--k-mode fixed`.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub k_mode: Option<KModeArg>,
    #[arg(long, default_value_t = LayoutConfig::default().width)]
    pub width: f64,
    #[arg(long, default_value_t = LayoutConfig::default().height)]
    pub height: f64,
    #[arg(long, default_value_t = LayoutConfig::default().gap)]
    pub gap: f64,
    #[arg(long)]
    pub padding: Option<f64>,
    /// Feature kind or metric id used for coloring and bundling.
    #[arg(long, default_value = "POS")]
    pub color_by: String,
    #[arg(long, env = "EMBEDFLOW_MAX_POINTS", default_value_t = DEFAULT_MAX_POINTS)]
    pub max_points: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, env = "EMBEDFLOW_DATA_DIR")]
    pub data_dir: PathBuf,
    #[arg(long, env = "EMBEDFLOW_PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, env = "EMBEDFLOW_HOST", default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
    pub host: IpAddr,
    #[arg(long, env = "EMBEDFLOW_MAX_POINTS", default_value_t = DEFAULT_MAX_POINTS)]
    pub max_points: usize,
}

/// Parses `A-B` (or a single `A`) into an inclusive range.
pub fn parse_layer_range(s: &str) -> Result<[usize; 2]> {
    let bad = || Error::InvalidConfig(format!("invalid layer range {s:?}; expected A-B"));
    let (a, b) = s.split_once('-').unwrap_or((s, s));
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    Ok([a, b])
}

impl ComputeArgs {
    /// The session configuration these flags describe for `dataset`.
    pub fn session_config(&self, dataset: &str) -> Result<SessionConfig> {
        let projections = self
            .projection
            .iter()
            .map(|p| p.parse::<ProjectionMethod>().map(|method| ProjectionConfig { method, params: Default::default() }))
            .collect::<Result<Vec<_>>>()?;
        let k_mode = match (self.k_mode, self.k) {
            (Some(KModeArg::Fixed) | None, Some(k)) => KMode::Fixed(k),
            (Some(KModeArg::Fixed), None) => {
                return Err(Error::InvalidConfig("--k-mode fixed requires --k".into()))
            }
            (Some(KModeArg::Cluster), Some(_)) => {
                return Err(Error::InvalidConfig("--k conflicts with --k-mode cluster".into()))
            }
            (Some(KModeArg::Cluster) | None, None) => KMode::ClusterSize,
        };
        let mut config = SessionConfig::new(dataset, self.filter.clone());
        config.projections = projections;
        config.layers = self.layers.as_deref().map(parse_layer_range).transpose()?;
        config.metrics.k_mode = k_mode;
        config.layout = LayoutConfig {
            width: self.width,
            height: self.height,
            gap: self.gap,
            padding: self.padding,
        };
        config.color_by = self.color_by.parse::<ColorBy>()?;
        Ok(config)
    }
}

/// Human-readable validation report; empty `violations` means valid.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub exit_code: i32,
}

/// Any violation, including an unreadable referenced file, exits with 1.
pub fn cmd_validate(manifest: &Path) -> ValidationReport {
    let errors = validate_dataset(manifest);
    let exit_code = if errors.is_empty() { EXIT_OK } else { EXIT_VALIDATION };
    ValidationReport {
        violations: errors.iter().map(|e| e.to_string()).collect(),
        exit_code,
    }
}

/// Writes the four session payloads into `out` and returns their paths.
pub fn cmd_compute(args: &ComputeArgs) -> Result<Vec<PathBuf>> {
    let dataset = load_dataset(&args.manifest)?;
    let config = args.session_config(&dataset.name)?;
    let session = Session::build(Arc::new(dataset), &config, args.max_points)?;
    write_payloads(&session, &args.out)
}

pub fn write_payloads(session: &Session, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let p = &session.payloads;
    let mut written = Vec::new();
    for (name, bytes) in OUTPUT_FILES.into_iter().zip([&p.layout, &p.metrics, &p.matrices, &p.summaries]) {
        let path = out.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Binds and serves until the process is terminated.
pub fn cmd_serve(args: &ServeArgs) -> Result<()> {
    let state = Arc::new(AppState::new(&args.data_dir, args.max_points)?);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::io("tokio runtime", e))?;
    runtime.block_on(async {
        let listener = service::bind(SocketAddr::new(args.host, args.port)).await?;
        let addr = listener.local_addr().map_err(|e| Error::io("listener", e))?;
        eprintln!("serving {} on http://{addr}", args.data_dir.display());
        service::serve(listener, state).await.map_err(|e| Error::io("server", e))
    })
}

/// Parses `args` (program name first) and runs the command. Usage errors
/// exit with 1; `--help` and `--version` with 0.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            }
        }
    }
}

/// Runs one command, printing to stdout/stderr, and returns the exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Validate { manifest } => {
            let report = cmd_validate(&manifest);
            if report.violations.is_empty() {
                println!("ok: {}", manifest.display());
            } else {
                for v in &report.violations {
                    println!("violation: {v}");
                }
            }
            return report.exit_code;
        }
        Command::Compute(args) => cmd_compute(&args).map(|paths| {
            for p in paths {
                println!("{}", p.display());
            }
        }),
        Command::Serve(args) => cmd_serve(&args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
