//! Synthetic scenarios: a fine "true" population field, aggregations of it at
//! two coarser resolutions, and random convex survey polygons whose ground
//! truth comes from a brute-force sub-pixel oracle.
//!
//! The generator reproduces, at desk scale, the accuracy contrast between a
//! ~100 m layer and a ~1 km layer over settlement-sized polygons: ground
//! truths are taken from the truth field itself, so even the fine grid
//! carries genuine aggregation error.

use crate::geometry::{self, Point};
use crate::raster::{RasterGrid, DEFAULT_NODATA};
use crate::vector::{PolygonFeature, PolygonPart};
use crate::DEFAULT_CRS_TAG;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("aggregation factor {factor} does not divide grid dimensions {cols} x {rows}")]
    NonDivisibleFactor {
        factor: usize,
        cols: usize,
        rows: usize,
    },
    #[error("aggregation factor must be at least 1")]
    ZeroFactor,
    #[error("truth grid contains nodata cells; the synthetic truth field must be complete")]
    NodataInTruth,
    #[error("infeasible config: {0}")]
    InfeasibleConfig(String),
    #[error("raster error: {0}")]
    Raster(String),
}

/// Knobs of the scenario generator. The defaults draw a 500x500 truth field
/// of 10 m cells (5 km x 5 km), aggregate it by 10 to 100 m cells and by 100
/// to 1 km cells, and place convex features 300-1000 m across, i.e. 3-10
/// fine cells and 0.3-1.0 coarse cells in diameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub truth_cols: usize,
    pub truth_rows: usize,
    pub truth_cell_size: f64,
    pub origin_x: f64,
    pub origin_y: f64,
    pub fine_factor: usize,
    pub coarse_factor: usize,
    /// Number of Gaussian density bumps summed into the truth field.
    pub bump_count: usize,
    /// Bump standard deviation range in CRS units.
    pub bump_sigma_range: (f64, f64),
    /// Peak density per truth cell contributed by one bump.
    pub bump_amplitude_range: (f64, f64),
    /// Uniform density floor per truth cell, keeps ground truths positive.
    pub base_density: f64,
    /// Feature hull diameter range in CRS units.
    pub feature_diameter_range: (f64, f64),
    /// Random points drawn per feature before taking the convex hull.
    pub feature_points: usize,
    /// Sub-pixel subdivision used to assign ground-truth populations.
    pub oracle_subdiv: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            truth_cols: 500,
            truth_rows: 500,
            truth_cell_size: 10.0,
            origin_x: 0.0,
            origin_y: 0.0,
            fine_factor: 10,
            coarse_factor: 100,
            bump_count: 260,
            bump_sigma_range: (25.0, 140.0),
            bump_amplitude_range: (0.5, 8.0),
            base_density: 0.05,
            feature_diameter_range: (300.0, 1000.0),
            feature_points: 10,
            oracle_subdiv: 8,
        }
    }
}

/// A generated scenario: the latent truth field, its two aggregations, and
/// surveyed features with oracle ground truths.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScenario {
    pub truth_field: RasterGrid,
    pub fine_grid: RasterGrid,
    pub coarse_grid: RasterGrid,
    pub features: Vec<PolygonFeature>,
    pub seed: u64,
    pub config: ScenarioConfig,
}

/// Sum `factor x factor` blocks of the truth grid into one output cell. The
/// extent is preserved and the cell size multiplied by `factor`; the truth
/// grid must be nodata-free.
pub fn aggregate_grid(truth: &RasterGrid, factor: usize) -> Result<RasterGrid, SynthError> {
    if factor == 0 {
        return Err(SynthError::ZeroFactor);
    }
    if !truth.n_cols().is_multiple_of(factor) || !truth.n_rows().is_multiple_of(factor) {
        return Err(SynthError::NonDivisibleFactor {
            factor,
            cols: truth.n_cols(),
            rows: truth.n_rows(),
        });
    }
    if truth.values().iter().any(|&v| v == truth.nodata()) {
        return Err(SynthError::NodataInTruth);
    }
    let out_cols = truth.n_cols() / factor;
    let out_rows = truth.n_rows() / factor;
    let mut values = Vec::with_capacity(out_cols * out_rows);
    for out_row in 0..out_rows {
        for out_col in 0..out_cols {
            let mut sum = 0.0;
            for dr in 0..factor {
                for dc in 0..factor {
                    sum += truth.value(out_row * factor + dr, out_col * factor + dc);
                }
            }
            values.push(sum);
        }
    }
    RasterGrid::new(
        out_cols,
        out_rows,
        truth.x_ll(),
        truth.y_ll(),
        truth.cell_size() * factor as f64,
        truth.nodata(),
        values,
        truth.crs_tag(),
    )
    .map_err(|e| SynthError::Raster(e.to_string()))
}

/// Brute-force reference population of a feature over a nodata-free truth
/// grid: every truth cell is split into `subdiv x subdiv` sub-cells and each
/// sub-cell contributes `value / subdiv^2` when its center lies inside the
/// feature. Deterministic row-major evaluation.
pub fn oracle_population(truth: &RasterGrid, feature: &PolygonFeature, subdiv: usize) -> f64 {
    assert!(subdiv >= 1, "subdiv must be at least 1");
    let bbox = geometry::feature_bbox(feature);
    let step = truth.cell_size() / subdiv as f64;
    let share = 1.0 / (subdiv * subdiv) as f64;
    let mut total = 0.0;
    for (row, col) in truth.cells_intersecting(bbox) {
        let value = truth.value(row, col);
        if value == truth.nodata() || value == 0.0 {
            continue;
        }
        let cell = truth.cell_box(row, col).expect("index in range");
        let contribution = value * share;
        for i in 0..subdiv {
            let y = cell.y_min + (i as f64 + 0.5) * step;
            for j in 0..subdiv {
                let x = cell.x_min + (j as f64 + 0.5) * step;
                let p = Point::new(x, y);
                if bbox.contains_point(p) && geometry::point_in_feature(p, feature) {
                    total += contribution;
                }
            }
        }
    }
    total
}

/// Andrew's monotone chain; returns the hull counter-clockwise without a
/// repeated first vertex. Collinear inputs collapse to fewer than 3 points.
fn convex_hull(mut points: Vec<Point>) -> Vec<Point> {
    points.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap().then(a.y.partial_cmp(&b.y).unwrap()));
    points.dedup();
    let n = points.len();
    if n < 3 {
        return points;
    }
    let cross = |o: Point, a: Point, b: Point| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let mut hull: Vec<Point> = Vec::with_capacity(2 * n);
    for &p in &points {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in points.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn max_pairwise_distance(points: &[Point]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let dx = points[i].x - points[j].x;
            let dy = points[i].y - points[j].y;
            best = best.max((dx * dx + dy * dy).sqrt());
        }
    }
    best
}

fn build_truth_field(rng: &mut ChaCha8Rng, config: &ScenarioConfig) -> RasterGrid {
    let cols = config.truth_cols;
    let rows = config.truth_rows;
    let s = config.truth_cell_size;
    let extent_w = cols as f64 * s;
    let extent_h = rows as f64 * s;
    let mut values = vec![config.base_density; cols * rows];
    for _ in 0..config.bump_count {
        let cx = config.origin_x + rng.gen_range(0.0..extent_w);
        let cy = config.origin_y + rng.gen_range(0.0..extent_h);
        let sigma = rng.gen_range(config.bump_sigma_range.0..=config.bump_sigma_range.1);
        let amplitude =
            rng.gen_range(config.bump_amplitude_range.0..=config.bump_amplitude_range.1);
        // 4-sigma support window in cell indices
        let reach = (4.0 * sigma / s).ceil() as i64;
        let col_c = ((cx - config.origin_x) / s).floor() as i64;
        let row_c = (rows as f64 - 1.0 - ((cy - config.origin_y) / s).floor()) as i64;
        let inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
        for row in (row_c - reach).max(0)..=(row_c + reach).min(rows as i64 - 1) {
            let y = config.origin_y + (rows as f64 - row as f64 - 0.5) * s;
            for col in (col_c - reach).max(0)..=(col_c + reach).min(cols as i64 - 1) {
                let x = config.origin_x + (col as f64 + 0.5) * s;
                let d_sq = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                values[row as usize * cols + col as usize] +=
                    amplitude * (-d_sq * inv_two_sigma_sq).exp();
            }
        }
    }
    RasterGrid::new(
        cols,
        rows,
        config.origin_x,
        config.origin_y,
        s,
        DEFAULT_NODATA,
        values,
        DEFAULT_CRS_TAG,
    )
    .expect("generated field is valid")
}

fn random_convex_feature(
    rng: &mut ChaCha8Rng,
    config: &ScenarioConfig,
    index: usize,
) -> PolygonFeature {
    let (d_min, d_max) = config.feature_diameter_range;
    let extent_w = config.truth_cols as f64 * config.truth_cell_size;
    let extent_h = config.truth_rows as f64 * config.truth_cell_size;
    let diameter = rng.gen_range(d_min..=d_max);
    let cx = config.origin_x + rng.gen_range(diameter / 2.0..extent_w - diameter / 2.0);
    let cy = config.origin_y + rng.gen_range(diameter / 2.0..extent_h - diameter / 2.0);

    let hull = loop {
        let points: Vec<Point> = (0..config.feature_points.max(3))
            .map(|_| {
                let radius = (diameter / 2.0) * rng.gen_range(0.0f64..1.0).sqrt();
                let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                Point::new(cx + radius * angle.cos(), cy + radius * angle.sin())
            })
            .collect();
        let hull = convex_hull(points);
        if hull.len() >= 3 && max_pairwise_distance(&hull) > 0.0 {
            break hull;
        }
    };

    // Scale about the vertex mean so the hull diameter equals the sampled
    // one, then recenter its bbox on the intended center. A set of diameter d
    // fits in a d/2 half-extent box, so the placement margin above keeps the
    // feature inside the grid extent.
    let span = max_pairwise_distance(&hull);
    let scale = diameter / span;
    let mean_x = hull.iter().map(|p| p.x).sum::<f64>() / hull.len() as f64;
    let mean_y = hull.iter().map(|p| p.y).sum::<f64>() / hull.len() as f64;
    let scaled: Vec<Point> = hull
        .iter()
        .map(|p| {
            Point::new(
                mean_x + (p.x - mean_x) * scale,
                mean_y + (p.y - mean_y) * scale,
            )
        })
        .collect();
    let bbox = {
        let xs: Vec<f64> = scaled.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = scaled.iter().map(|p| p.y).collect();
        (
            xs.iter().cloned().fold(f64::INFINITY, f64::min),
            ys.iter().cloned().fold(f64::INFINITY, f64::min),
            xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        )
    };
    let shift_x = cx - (bbox.0 + bbox.2) / 2.0;
    let shift_y = cy - (bbox.1 + bbox.3) / 2.0;
    let outer: Vec<Point> = scaled
        .iter()
        .map(|p| Point::new(p.x + shift_x, p.y + shift_y))
        .collect();

    PolygonFeature {
        id: index.to_string(),
        name: format!("synthetic-{index}"),
        ground_truth_pop: 0.0,
        parts: vec![PolygonPart {
            outer,
            holes: vec![],
        }],
        crs_tag: DEFAULT_CRS_TAG.to_string(),
    }
}

/// Generate a deterministic scenario for the given seed: truth field, fine
/// and coarse aggregations, and `n_features` convex features with oracle
/// ground truths.
pub fn generate_scenario(
    seed: u64,
    n_features: usize,
    config: &ScenarioConfig,
) -> Result<SyntheticScenario, SynthError> {
    let (d_min, d_max) = config.feature_diameter_range;
    let extent_w = config.truth_cols as f64 * config.truth_cell_size;
    let extent_h = config.truth_rows as f64 * config.truth_cell_size;
    if !d_min.is_finite() || d_min <= 0.0 || d_min > d_max {
        return Err(SynthError::InfeasibleConfig(format!(
            "feature diameter range ({d_min}, {d_max}) is not a positive interval"
        )));
    }
    if d_max >= extent_w || d_max >= extent_h {
        return Err(SynthError::InfeasibleConfig(format!(
            "feature diameter {d_max} does not fit the {extent_w} x {extent_h} extent"
        )));
    }
    if config.oracle_subdiv == 0 {
        return Err(SynthError::InfeasibleConfig("oracle_subdiv must be >= 1".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth_field = build_truth_field(&mut rng, config);
    let fine_grid = aggregate_grid(&truth_field, config.fine_factor)?;
    let coarse_grid = aggregate_grid(&truth_field, config.coarse_factor)?;

    let mut features = Vec::with_capacity(n_features);
    for index in 0..n_features {
        let mut feature = random_convex_feature(&mut rng, config, index);
        feature.ground_truth_pop =
            oracle_population(&truth_field, &feature, config.oracle_subdiv);
        features.push(feature);
    }

    Ok(SyntheticScenario {
        truth_field,
        fine_grid,
        coarse_grid,
        features,
        seed,
        config: config.clone(),
    })
}
