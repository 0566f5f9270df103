//! gridpop estimates the population living inside georeferenced polygons
//! (e.g. mapped slum settlements) from gridded population rasters, under
//! explicit pixel-inclusion strategies, and evaluates the estimates against
//! surveyed ground truth with a relative-error bucket report.
//!
//! The library is organized around the pipeline stages:
//!
//! - [`raster`] — ESRI ASCII Grid parsing/writing and cell geometry
//! - [`vector`] — GeoJSON settlement polygons and the estimates CSV
//! - [`geometry`] — planar predicates, areas and rectangle clipping
//! - [`transform`] — polygon reprojection onto the raster's CRS
//! - [`zonal`] — per-polygon extraction under a strategy
//! - [`metrics`] — relative errors, buckets and the aggregate report
//! - [`synth`] — synthetic scenarios with a brute-force oracle
//! - [`cli`] — the `gridpop` command line over all of the above

pub mod cli;
pub mod geometry;
pub mod metrics;
mod numfmt;
pub mod raster;
pub mod synth;
pub mod transform;
pub mod vector;
pub mod zonal;

/// CRS tag assumed for parsed rasters and GeoJSON input (RFC 7946 mandates
/// WGS 84 geographic coordinates).
pub const DEFAULT_CRS_TAG: &str = "geographic-wgs84";

pub use geometry::{Point, Rectangle};
pub use metrics::{Bucket, ErrorReport, EstimateRecord};
pub use raster::RasterGrid;
pub use synth::{ScenarioConfig, SyntheticScenario};
pub use transform::CoordinateTransform;
pub use vector::{PolygonFeature, PolygonPart};
pub use zonal::{ExtractionResult, ExtractionStrategy, StrategyKind};
