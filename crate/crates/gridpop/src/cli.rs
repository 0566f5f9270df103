//! The `gridpop` command line: `extract` runs the full pipeline
//! (parse polygons, reproject, window the raster, estimate, classify,
//! report), `report` rebuilds the text report from a saved CSV, and `synth`
//! writes a synthetic scenario to disk.

use crate::metrics::{self, EstimateRecord};
use crate::raster::{parse_ascii_grid, write_ascii_grid};
use crate::synth::{generate_scenario, ScenarioConfig};
use crate::transform::CoordinateTransform;
use crate::vector::{
    parse_estimates_csv, parse_feature_collection, write_estimates_csv, write_feature_collection,
};
use crate::zonal::{extract_all_parallel, ExtractionStrategy};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("error[{stage}]: {message}")]
    Input { stage: &'static str, message: String },
    #[error("internal error[{stage}]: {message}")]
    Internal { stage: &'static str, message: String },
}

impl CliError {
    fn input(stage: &'static str, message: impl Into<String>) -> Self {
        CliError::Input {
            stage,
            message: message.into(),
        }
    }

    fn internal(stage: &'static str, message: impl Into<String>) -> Self {
        CliError::Internal {
            stage,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input { .. } => 1,
            CliError::Internal { .. } => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gridpop",
    version,
    about = "Estimate populations inside georeferenced polygons from gridded population rasters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the extraction pipeline and write the per-polygon CSV and report.
    Extract(ExtractArgs),
    /// Rebuild the text report from a saved estimates CSV.
    Report(ReportArgs),
    /// Generate a synthetic scenario (rasters, polygons, manifest).
    Synth(SynthArgs),
}

#[derive(Debug, Args, Default)]
struct ExtractArgs {
    /// Population raster (ESRI ASCII Grid).
    #[arg(long)]
    raster: Option<PathBuf>,
    /// Ground-truth polygons (GeoJSON FeatureCollection).
    #[arg(long)]
    polygons: Option<PathBuf>,
    /// Property holding the surveyed population count.
    #[arg(long)]
    pop_property: Option<String>,
    /// Pixel-inclusion strategy: centroid, any_overlap or area_weighted.
    #[arg(long)]
    strategy: Option<String>,
    /// Polygon transform: identity, lonlat-to-mercator or mercator-to-lonlat.
    #[arg(long)]
    transform: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    out_csv: Option<PathBuf>,
    /// Output text report path.
    #[arg(long)]
    out_report: Option<PathBuf>,
    /// Minimum intersection area for any_overlap inclusion.
    #[arg(long)]
    overlap_epsilon: Option<f64>,
    /// Worker threads for extraction (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Estimates CSV produced by `extract`.
    #[arg(long)]
    csv: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// RNG seed; the same seed reproduces the same files byte for byte.
    #[arg(long)]
    seed: u64,
    /// Output directory for truth/fine/coarse rasters, polygons and manifest.
    #[arg(long)]
    out_dir: PathBuf,
    /// Number of synthetic survey polygons.
    #[arg(long, default_value_t = 200)]
    n_features: usize,
    #[arg(long, default_value_t = ScenarioConfig::default().truth_cols)]
    truth_cols: usize,
    #[arg(long, default_value_t = ScenarioConfig::default().truth_rows)]
    truth_rows: usize,
    #[arg(long, default_value_t = ScenarioConfig::default().truth_cell_size)]
    truth_cell_size: f64,
    #[arg(long, default_value_t = ScenarioConfig::default().fine_factor)]
    fine_factor: usize,
    #[arg(long, default_value_t = ScenarioConfig::default().coarse_factor)]
    coarse_factor: usize,
    #[arg(long, default_value_t = ScenarioConfig::default().feature_diameter_range.0)]
    min_diameter: f64,
    #[arg(long, default_value_t = ScenarioConfig::default().feature_diameter_range.1)]
    max_diameter: f64,
}

/// Fully resolved extract configuration: flags override config-file values,
/// which override defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub raster_path: PathBuf,
    pub polygons_path: PathBuf,
    pub pop_property: String,
    pub strategy: ExtractionStrategy,
    pub transform: CoordinateTransform,
    pub output_csv_path: PathBuf,
    pub output_report_path: PathBuf,
    pub overlap_epsilon: f64,
}

/// On-disk shape of `--config`: every field optional, keys named after
/// [`RunConfig`] fields.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    raster_path: Option<PathBuf>,
    polygons_path: Option<PathBuf>,
    pop_property: Option<String>,
    strategy: Option<String>,
    transform: Option<String>,
    output_csv_path: Option<PathBuf>,
    output_report_path: Option<PathBuf>,
    overlap_epsilon: Option<f64>,
}

fn read_to_string(stage: &'static str, path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::input(stage, format!("cannot read `{}`: {e}", path.display())))
}

fn resolve_config(args: &ExtractArgs) -> Result<RunConfig, CliError> {
    let file: ConfigFile = match &args.config {
        Some(path) => {
            let text = read_to_string("config", path)?;
            serde_json::from_str(&text).map_err(|e| {
                CliError::input("config", format!("invalid config `{}`: {e}", path.display()))
            })?
        }
        None => ConfigFile::default(),
    };

    let require = |stage: &'static str,
                   flag: &Option<PathBuf>,
                   from_file: Option<PathBuf>,
                   name: &str|
     -> Result<PathBuf, CliError> {
        flag.clone()
            .or(from_file)
            .ok_or_else(|| CliError::input(stage, format!("missing required `--{name}`")))
    };

    let strategy_name = args
        .strategy
        .clone()
        .or(file.strategy)
        .unwrap_or_else(|| "area_weighted".to_string());
    let mut strategy: ExtractionStrategy = strategy_name
        .parse()
        .map_err(|e| CliError::input("config", format!("{e}")))?;
    let overlap_epsilon = args
        .overlap_epsilon
        .or(file.overlap_epsilon)
        .unwrap_or(crate::zonal::DEFAULT_OVERLAP_EPSILON);
    if overlap_epsilon < 0.0 {
        return Err(CliError::input(
            "config",
            format!("overlap epsilon {overlap_epsilon} must be non-negative"),
        ));
    }
    strategy = strategy.with_overlap_epsilon(overlap_epsilon);

    let transform_name = args
        .transform
        .clone()
        .or(file.transform)
        .unwrap_or_else(|| "identity".to_string());
    let transform: CoordinateTransform = transform_name
        .parse()
        .map_err(|e| CliError::input("config", format!("{e}")))?;

    Ok(RunConfig {
        raster_path: require("config", &args.raster, file.raster_path, "raster")?,
        polygons_path: require("config", &args.polygons, file.polygons_path, "polygons")?,
        pop_property: args
            .pop_property
            .clone()
            .or(file.pop_property)
            .unwrap_or_else(|| "population".to_string()),
        strategy,
        transform,
        output_csv_path: require("config", &args.out_csv, file.output_csv_path, "out-csv")?,
        output_report_path: require(
            "config",
            &args.out_report,
            file.output_report_path,
            "out-report",
        )?,
        overlap_epsilon,
    })
}

/// Run the extraction pipeline for a resolved config. The report is rebuilt
/// from the serialized CSV records, so `gridpop report` over the written CSV
/// reproduces it byte for byte.
pub fn run_extract(config: &RunConfig, workers: usize) -> Result<(), CliError> {
    let raster_text = read_to_string("raster", &config.raster_path)?;
    let grid = parse_ascii_grid(&raster_text).map_err(|e| {
        CliError::input(
            "raster",
            format!("`{}`: {e}", config.raster_path.display()),
        )
    })?;

    let polygons_text = read_to_string("polygons", &config.polygons_path)?;
    let features = parse_feature_collection(&polygons_text, &config.pop_property).map_err(|e| {
        CliError::input(
            "polygons",
            format!("`{}`: {e}", config.polygons_path.display()),
        )
    })?;
    eprintln!("parsed {} features", features.len());

    let features = features
        .iter()
        .map(|f| config.transform.transform_feature(f))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::input("transform", e.to_string()))?;

    // The transform's purpose is to bring the polygons into the raster's
    // system, so the raster is labeled with the transform's target tag.
    let grid = match features.first() {
        Some(f) => grid.with_crs_tag(f.crs_tag.clone()),
        None => grid,
    };

    let results = extract_all_parallel(&grid, &features, config.strategy, workers)
        .map_err(|e| CliError::input("extract", e.to_string()))?;

    let records: Vec<EstimateRecord> = features
        .iter()
        .zip(results)
        .map(|(f, r)| {
            EstimateRecord::new(
                r.feature_id,
                f.name.clone(),
                f.ground_truth_pop,
                r.estimate,
                r.cells_touched,
                r.cells_counted,
                r.nodata_cells,
            )
        })
        .collect();

    let csv_text = write_estimates_csv(&records);
    let reread = parse_estimates_csv(&csv_text)
        .map_err(|e| CliError::internal("report", format!("generated CSV does not re-parse: {e}")))?;
    let report_text = metrics::build_report(&reread).render();

    fs::write(&config.output_csv_path, &csv_text).map_err(|e| {
        CliError::input(
            "write",
            format!("cannot write `{}`: {e}", config.output_csv_path.display()),
        )
    })?;
    if let Err(e) = fs::write(&config.output_report_path, &report_text) {
        // no partial outputs
        let _ = fs::remove_file(&config.output_csv_path);
        return Err(CliError::input(
            "write",
            format!(
                "cannot write `{}`: {e}",
                config.output_report_path.display()
            ),
        ));
    }
    Ok(())
}

fn run_report(args: &ReportArgs) -> Result<String, CliError> {
    let text = read_to_string("report", &args.csv)?;
    let records = parse_estimates_csv(&text)
        .map_err(|e| CliError::input("report", format!("`{}`: {e}", args.csv.display())))?;
    Ok(metrics::build_report(&records).render())
}

#[derive(Debug, Serialize)]
struct ManifestFiles {
    truth: String,
    fine: String,
    coarse: String,
    features: String,
}

#[derive(Debug, Serialize)]
struct Manifest {
    seed: u64,
    n_features: usize,
    config: ScenarioConfig,
    files: ManifestFiles,
}

fn run_synth(args: &SynthArgs) -> Result<(), CliError> {
    let config = ScenarioConfig {
        truth_cols: args.truth_cols,
        truth_rows: args.truth_rows,
        truth_cell_size: args.truth_cell_size,
        fine_factor: args.fine_factor,
        coarse_factor: args.coarse_factor,
        feature_diameter_range: (args.min_diameter, args.max_diameter),
        ..ScenarioConfig::default()
    };
    let scenario = generate_scenario(args.seed, args.n_features, &config)
        .map_err(|e| CliError::input("synth", e.to_string()))?;

    fs::create_dir_all(&args.out_dir).map_err(|e| {
        CliError::input(
            "synth",
            format!("cannot create `{}`: {e}", args.out_dir.display()),
        )
    })?;
    let files = ManifestFiles {
        truth: "truth.asc".to_string(),
        fine: "fine.asc".to_string(),
        coarse: "coarse.asc".to_string(),
        features: "features.geojson".to_string(),
    };
    let manifest = Manifest {
        seed: args.seed,
        n_features: args.n_features,
        config: scenario.config.clone(),
        files,
    };
    let mut manifest_text =
        serde_json::to_string_pretty(&manifest).expect("manifest serialization");
    manifest_text.push('\n');

    let writes: [(&str, String); 5] = [
        ("truth.asc", write_ascii_grid(&scenario.truth_field)),
        ("fine.asc", write_ascii_grid(&scenario.fine_grid)),
        ("coarse.asc", write_ascii_grid(&scenario.coarse_grid)),
        (
            "features.geojson",
            write_feature_collection(&scenario.features, "population"),
        ),
        ("manifest.json", manifest_text),
    ];
    for (name, content) in &writes {
        let path = args.out_dir.join(name);
        if let Err(e) = fs::write(&path, content) {
            for (written, _) in &writes {
                let _ = fs::remove_file(args.out_dir.join(written));
            }
            return Err(CliError::input(
                "synth",
                format!("cannot write `{}`: {e}", path.display()),
            ));
        }
    }
    eprintln!(
        "wrote scenario (seed {}, {} features) to {}",
        args.seed,
        scenario.features.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Extract(args) => {
            let workers = args
                .workers
                .unwrap_or_else(|| {
                    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
                })
                .max(1);
            let config = resolve_config(&args)?;
            run_extract(&config, workers)
        }
        Command::Report(args) => {
            let report = run_report(&args)?;
            print!("{report}");
            Ok(())
        }
        Command::Synth(args) => run_synth(&args),
    }
}

/// Parse arguments and run; returns the process exit code
/// (0 success, 1 input/validation error, 2 internal invariant violation).
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
