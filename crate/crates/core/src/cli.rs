//! Batch front-end: one command per process, each reading a [`RunConfig`],
//! writing its artifacts, an echo of the resolved config and, last, a
//! [`RunManifest`] into the output directory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical instability,
//! 1 anything else (I/O).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::fdtd::{run_transmission, FdtdError, PolarizationBasis, SourceSpec};
use crate::io::{read_csv, sha256_hex, write_atomic, write_csv, write_field_map, RunManifest, RunStatus};
use crate::loss_chain::{infer_gain, predicted_squeezing, LossChainError, LossElement};
use crate::quantum::{Arm, QuantumError};
use crate::scenarios::{
    angle_grid, chain_curve, nd_comparison_curve, sweep_polarization, transmission_axis, AngleStatus,
    SqueezingCurve, EOT_ELEMENT,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INSTABILITY: i32 = 3;

/// Version string recorded in manifests.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// `git describe` of the build tree, or `unknown`.
pub const GIT_DESCRIBE: &str = env!("EOT_GIT_DESCRIBE");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("numerical instability: {0}")]
    Instability(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Instability(_) => EXIT_INSTABILITY,
            CliError::Io(_) => EXIT_OTHER,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Fdtd(f) => f.into(),
            ConfigError::Read { .. } => CliError::Config(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<FdtdError> for CliError {
    fn from(e: FdtdError) -> Self {
        if e.is_config_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Instability(e.to_string())
        }
    }
}

impl From<LossChainError> for CliError {
    fn from(e: LossChainError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<QuantumError> for CliError {
    fn from(e: QuantumError) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "eot-sim", version, about = "Nanohole-array transmission and squeezed-light noise predictions")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Deterministic mode. Always on: nothing in the pipeline is random.
    #[arg(long, global = true, default_value_t = true)]
    pub seedless: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Normalized T and R of the configured stack over the monitor band.
    Spectrum,
    /// Single-colour transmission against linear polarization.
    Polarization,
    /// Near-field |E| maps below the film, portable binary.
    Fieldmap,
    /// Squeezing against transmission for the loss model and the chain.
    Noise,
    /// Gain implied by an observed squeezing level at transmission `eta`.
    InferGain {
        #[arg(long, allow_hyphen_values = true)]
        db: f64,
        #[arg(long)]
        eta: f64,
    },
}

/// Files produced by a command and whether any run was provisional.
#[derive(Debug, Default)]
pub struct CommandOutput {
    pub files: Vec<String>,
    pub provisional: bool,
    pub notes: Vec<String>,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Errors go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(Some(stdout)) => {
            println!("{stdout}");
            EXIT_OK
        }
        Ok(None) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs one command. `infer-gain` returns its scalar for stdout; the file
/// commands return `None`.
pub fn run(cli: &Cli) -> Result<Option<String>, CliError> {
    if let Command::InferGain { db, eta } = cli.command {
        return Ok(Some(format!("{}", infer_gain(db, eta)?)));
    }
    let cfg = match &cli.common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = cli.common.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.common.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    pool.install(|| execute(&cli.command, &cfg, &out))?;
    Ok(None)
}

/// Runs a file-producing command against an already loaded config.
pub fn execute(command: &Command, cfg: &RunConfig, out: &Path) -> Result<RunManifest, CliError> {
    let started = now();
    // a manifest from a previous run would vouch for the wrong files
    let _ = fs::remove_file(out.join("manifest.json"));
    fs::create_dir_all(out)?;
    let resolved = cfg.to_resolved_toml();
    write_atomic(&out.join("config.resolved.toml"), resolved.as_bytes())?;
    let (name, result) = match command {
        Command::Spectrum => ("spectrum", cmd_spectrum(cfg, out)?),
        Command::Polarization => ("polarization", cmd_polarization(cfg, out)?),
        Command::Fieldmap => ("fieldmap", cmd_fieldmap(cfg, out)?),
        Command::Noise => ("noise", cmd_noise(cfg, out)?),
        Command::InferGain { .. } => unreachable!("handled without a run directory"),
    };
    let mut outputs = BTreeMap::new();
    for f in std::iter::once("config.resolved.toml".to_string()).chain(result.files) {
        outputs.insert(f.clone(), sha256_hex(&fs::read(out.join(&f))?));
    }
    let manifest = RunManifest {
        command: name.into(),
        config_hash: sha256_hex(resolved.as_bytes()),
        tool_version: TOOL_VERSION.into(),
        git_describe: GIT_DESCRIBE.into(),
        started,
        finished: now(),
        status: if result.provisional {
            RunStatus::Provisional
        } else {
            RunStatus::Success
        },
        outputs,
        notes: result.notes,
    };
    manifest.write(out)?;
    Ok(manifest)
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn provisional_note(what: &str) -> String {
    format!("{what}: time cap reached before the fields decayed; values are provisional")
}

/// Broadband transmission: `transmission.csv` (`wavelength_nm,T,R`,
/// normalized to the incident flux) and `transmission_substrate.csv`
/// (`wavelength_nm,T`, normalized to the bare substrate).
pub fn cmd_spectrum(cfg: &RunConfig, out: &Path) -> Result<CommandOutput, CliError> {
    let stack = cfg.stack()?;
    let grid = cfg.grid()?;
    let s = run_transmission(&stack, &grid, &cfg.source, &cfg.monitors()?, &cfg.run)?;
    let rows = |cols: &[&Vec<f64>]| -> Vec<Vec<f64>> {
        (0..s.wavelengths_nm.len())
            .map(|i| std::iter::once(s.wavelengths_nm[i]).chain(cols.iter().map(|c| c[i])).collect())
            .collect()
    };
    write_csv(&out.join("transmission.csv"), &["wavelength_nm", "T", "R"], &rows(&[&s.transmission, &s.reflection]))?;
    write_csv(
        &out.join("transmission_substrate.csv"),
        &["wavelength_nm", "T"],
        &rows(&[&s.transmission_substrate]),
    )?;
    let mut notes = vec![format!("{} time steps", s.steps)];
    if s.provisional {
        notes.push(provisional_note("spectrum"));
    }
    if s.overshoot {
        notes.push("T + R exceeds 1 somewhere in the band".into());
    }
    Ok(CommandOutput {
        files: vec!["transmission.csv".into(), "transmission_substrate.csv".into()],
        provisional: s.provisional,
        notes,
    })
}

/// Polarization sweep at `polarization.wavelength_nm`: `polarization.csv`
/// (`angle_deg,T`).
pub fn cmd_polarization(cfg: &RunConfig, out: &Path) -> Result<CommandOutput, CliError> {
    let p = &cfg.polarization;
    let angles = p.angles_deg.clone().unwrap_or_else(|| angle_grid(p.step_deg));
    let source = SourceSpec::broadband(p.band_nm.0, p.band_nm.1, 0.0);
    let sweep = sweep_polarization(&cfg.stack()?, &cfg.grid()?, &source, &angles, p.wavelength_nm, p.method, &cfg.run)?;
    let rows: Vec<Vec<f64>> = sweep.angles_deg.iter().zip(&sweep.transmission).map(|(&a, &t)| vec![a, t]).collect();
    write_csv(&out.join("polarization.csv"), &["angle_deg", "T"], &rows)?;
    let mut notes = Vec::new();
    let mut provisional = false;
    for (a, st) in sweep.angles_deg.iter().zip(&sweep.status) {
        match st {
            AngleStatus::Ok => {}
            AngleStatus::Provisional => provisional = true,
            AngleStatus::Overshoot => notes.push(format!("{a} deg: T + R exceeds 1")),
            AngleStatus::Failed(e) => notes.push(format!("{a} deg failed: {e}")),
        }
    }
    if provisional {
        notes.push(provisional_note("polarization sweep"));
    }
    if let (Some((amax, tmax)), Some(c)) = (sweep.argmax(), sweep.contrast()) {
        notes.push(format!("max T {tmax} at {amax} deg, contrast Tmin/Tmax {c}"));
    }
    Ok(CommandOutput {
        files: vec!["polarization.csv".into()],
        provisional,
        notes,
    })
}

/// `|E|` maps below the film, one `fieldmap_<angle>deg.eotf` per
/// configured polarization, plus `fieldmap.json` with the map wavelength,
/// depth, pixel size and pairwise correlations.
pub fn cmd_fieldmap(cfg: &RunConfig, out: &Path) -> Result<CommandOutput, CliError> {
    let f = &cfg.field_map;
    let stack = cfg.stack()?;
    let grid = cfg.grid()?;
    let source = SourceSpec::broadband(f.band_nm.0, f.band_nm.1, 0.0);
    let extra: Vec<f64> = f.wavelength_nm.into_iter().collect();
    let monitors = crate::fdtd::MonitorSpec {
        wavelengths_nm: crate::fdtd::run::wavelength_grid(f.band_nm.0, f.band_nm.1, f.step_nm, &extra),
        field_map_depth_nm: Some(f.depth_below_film_nm),
    };
    let basis = PolarizationBasis::compute(&stack, &grid, &source, &monitors, &cfg.run)?;
    let wavelength = match f.wavelength_nm {
        Some(l) => l,
        None => {
            basis
                .spectrum(f.polarizations_deg[0])
                .peak_in(f.search_nm.0, f.search_nm.1)
                .ok_or_else(|| CliError::Config(format!("no monitor wavelength inside search_nm {:?}", f.search_nm)))?
                .0
        }
    };
    let mut files = Vec::new();
    let mut maps = Vec::new();
    for &a in &f.polarizations_deg {
        let map = basis.field_map(a, wavelength).expect("basis records the map plane");
        let (rows, cols, values) = map.magnitude_window(f.window_nm);
        let name = format!("fieldmap_{a}deg.eotf");
        write_field_map(&out.join(&name), rows, cols, &values)?;
        files.push(name);
        maps.push(map);
    }
    let mut correlations = Vec::new();
    for i in 0..maps.len() {
        for j in i + 1..maps.len() {
            correlations.push(serde_json::json!({
                "a_deg": f.polarizations_deg[i],
                "b_deg": f.polarizations_deg[j],
                "pearson": maps[i].correlation(&maps[j]),
            }));
        }
    }
    let summary = serde_json::json!({
        "wavelength_nm": wavelength,
        "z_relative_to_film_nm": maps[0].z_nm,
        "pixel_nm": [grid.dx, grid.dy],
        "window_nm": f.window_nm,
        "transmission": f.polarizations_deg.iter().map(|&a| basis.spectrum(a).at(wavelength)).collect::<Vec<_>>(),
        "correlations": correlations,
    });
    let json = serde_json::to_vec_pretty(&summary).map_err(std::io::Error::other)?;
    write_atomic(&out.join("fieldmap.json"), &json)?;
    files.push("fieldmap.json".into());
    let provisional = !basis.converged();
    Ok(CommandOutput {
        files,
        provisional,
        notes: if provisional {
            vec![provisional_note("field map")]
        } else {
            vec![]
        },
    })
}

fn curve_rows(c: &SqueezingCurve) -> Vec<Vec<f64>> {
    c.points.iter().map(|p| vec![p.x, p.squeezing_db]).collect()
}

/// Squeezing curves (`x,squeezing_db`):
/// - `noise.csv`: loss model alone against symmetric transmission
///   (variable ND filter reference);
/// - `noise_chain.csv`: the configured chain with the sweep element
///   scanned over the same axis;
/// - `noise_polarization.csv` when `quantum.polarization_csv` names an
///   `angle_deg,T` table: x is the angle, T goes into the `eot` element.
pub fn cmd_noise(cfg: &RunConfig, out: &Path) -> Result<CommandOutput, CliError> {
    let q = &cfg.quantum;
    let axis = transmission_axis(q.eta_step);
    let nd = nd_comparison_curve(&axis, q.gain)?;
    write_csv(&out.join("noise.csv"), &["x", "squeezing_db"], &curve_rows(&nd))?;
    let chain = cfg.chain()?;
    let cc = chain_curve(&chain, &q.sweep_element, &axis, q.gain)?;
    write_csv(&out.join("noise_chain.csv"), &["x", "squeezing_db"], &curve_rows(&cc))?;
    let mut files = vec!["noise.csv".to_string(), "noise_chain.csv".to_string()];
    let mut notes = vec![
        format!("loss model maximum {} dB", nd.max_db()),
        format!("chain maximum {} dB", cc.max_db()),
    ];
    if let Some(path) = &q.polarization_csv {
        let (header, rows) = read_csv(Path::new(path))
            .map_err(|e| CliError::Config(format!("cannot read quantum.polarization_csv {path}: {e}")))?;
        if header.len() < 2 || header[0] != "angle_deg" || header[1] != "T" {
            return Err(CliError::Config(format!("{path}: expected header angle_deg,T")));
        }
        let mut chain = chain.clone();
        if !chain.elements().iter().any(|e| e.name == EOT_ELEMENT) {
            chain = chain.with_element(LossElement::new(EOT_ELEMENT, 1.0, Arm::Both)?)?;
        }
        let mut out_rows = Vec::with_capacity(rows.len());
        for r in &rows {
            chain.set_eta(EOT_ELEMENT, r[1])?;
            out_rows.push(vec![r[0], predicted_squeezing(&chain, q.gain)?]);
        }
        write_csv(&out.join("noise_polarization.csv"), &["x", "squeezing_db"], &out_rows)?;
        files.push("noise_polarization.csv".into());
        notes.push(format!("polarization table {path}"));
    }
    Ok(CommandOutput {
        files,
        provisional: false,
        notes,
    })
}
