//! The extraction core: per-polygon population estimates from a raster under
//! an explicit pixel-inclusion strategy.

use crate::geometry::{self, Rectangle};
use crate::raster::RasterGrid;
use crate::vector::PolygonFeature;
use rayon::prelude::*;
use std::str::FromStr;
use thiserror::Error;

/// Default minimum intersection area (squared CRS units) for any-overlap
/// inclusion.
pub const DEFAULT_OVERLAP_EPSILON: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ZonalError {
    #[error("feature `{feature_id}`: CRS tag `{feature_crs}` does not match raster CRS tag `{grid_crs}`")]
    CrsMismatch {
        feature_id: String,
        feature_crs: String,
        grid_crs: String,
    },
    #[error("feature `{feature_id}`: {reason}")]
    InvalidFeature { feature_id: String, reason: String },
    #[error("unknown strategy `{0}` (expected centroid, any_overlap or area_weighted)")]
    UnknownStrategy(String),
}

/// How a grid cell contributes to a polygon's estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    /// Full weight iff the cell center lies inside the polygon.
    Centroid,
    /// Full weight iff the intersection area exceeds `overlap_epsilon`.
    AnyOverlap,
    /// Weight = intersection area / cell area, clamped to [0, 1].
    AreaWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractionStrategy {
    pub kind: StrategyKind,
    pub overlap_epsilon: f64,
}

impl ExtractionStrategy {
    pub fn centroid() -> Self {
        Self {
            kind: StrategyKind::Centroid,
            overlap_epsilon: DEFAULT_OVERLAP_EPSILON,
        }
    }

    pub fn any_overlap() -> Self {
        Self {
            kind: StrategyKind::AnyOverlap,
            overlap_epsilon: DEFAULT_OVERLAP_EPSILON,
        }
    }

    pub fn area_weighted() -> Self {
        Self {
            kind: StrategyKind::AreaWeighted,
            overlap_epsilon: DEFAULT_OVERLAP_EPSILON,
        }
    }

    pub fn with_overlap_epsilon(mut self, epsilon: f64) -> Self {
        assert!(epsilon >= 0.0, "overlap_epsilon must be non-negative");
        self.overlap_epsilon = epsilon;
        self
    }
}

impl Default for ExtractionStrategy {
    fn default() -> Self {
        Self::area_weighted()
    }
}

impl FromStr for ExtractionStrategy {
    type Err = ZonalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "centroid" => Ok(Self::centroid()),
            "any_overlap" | "any-overlap" => Ok(Self::any_overlap()),
            "area_weighted" | "area-weighted" => Ok(Self::area_weighted()),
            other => Err(ZonalError::UnknownStrategy(other.to_string())),
        }
    }
}

/// One polygon's extraction outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionResult {
    pub feature_id: String,
    /// `None` when no cell received positive weight.
    pub estimate: Option<f64>,
    /// Cells whose box intersects the feature's bounding box window.
    pub cells_touched: usize,
    /// Cells with weight > 0.
    pub cells_counted: usize,
    /// Selected cells carrying the nodata sentinel.
    pub nodata_cells: usize,
}

/// Estimate one feature's population. Candidate cells come from the raster
/// window of the feature's bounding box; weights follow the strategy; the
/// estimate accumulates `weight * value` over non-nodata candidates in
/// deterministic row-major order. nodata cells contribute nothing but are
/// counted when selected.
pub fn extract(
    grid: &RasterGrid,
    feature: &PolygonFeature,
    strategy: ExtractionStrategy,
) -> Result<ExtractionResult, ZonalError> {
    if grid.crs_tag() != feature.crs_tag {
        return Err(ZonalError::CrsMismatch {
            feature_id: feature.id.clone(),
            feature_crs: feature.crs_tag.clone(),
            grid_crs: grid.crs_tag().to_string(),
        });
    }
    feature.validate().map_err(|e| ZonalError::InvalidFeature {
        feature_id: feature.id.clone(),
        reason: e.to_string(),
    })?;

    let bbox = geometry::feature_bbox(feature);
    let cell_area = grid.cell_size() * grid.cell_size();
    let mut cells_touched = 0usize;
    let mut cells_counted = 0usize;
    let mut nodata_cells = 0usize;
    let mut sum = 0.0f64;
    for (row, col) in grid.cells_intersecting(bbox) {
        cells_touched += 1;
        let cell_box: Rectangle = grid.cell_box(row, col).expect("index in range");
        let weight = match strategy.kind {
            StrategyKind::Centroid => {
                if geometry::point_in_feature(cell_box.center(), feature) {
                    1.0
                } else {
                    0.0
                }
            }
            StrategyKind::AnyOverlap => {
                let overlap = geometry::feature_rect_overlap_area(feature, &cell_box);
                if overlap > strategy.overlap_epsilon {
                    1.0
                } else {
                    0.0
                }
            }
            StrategyKind::AreaWeighted => {
                let overlap = geometry::feature_rect_overlap_area(feature, &cell_box);
                (overlap / cell_area).clamp(0.0, 1.0)
            }
        };
        if weight > 0.0 {
            cells_counted += 1;
            if grid.is_nodata(row, col) {
                nodata_cells += 1;
            } else {
                sum += weight * grid.value(row, col);
            }
        }
    }
    Ok(ExtractionResult {
        feature_id: feature.id.clone(),
        estimate: (cells_counted > 0).then_some(sum),
        cells_touched,
        cells_counted,
        nodata_cells,
    })
}

/// Extract every feature serially, in input order. The first failing feature
/// aborts the batch.
pub fn extract_all(
    grid: &RasterGrid,
    features: &[PolygonFeature],
    strategy: ExtractionStrategy,
) -> Result<Vec<ExtractionResult>, ZonalError> {
    features.iter().map(|f| extract(grid, f, strategy)).collect()
}

/// Parallel batch extraction over a dedicated pool of `workers` threads.
/// Features are independent and `extract` is pure, so results are returned
/// in input order and are bitwise identical to the serial path; on failure
/// the first error in input order is reported.
pub fn extract_all_parallel(
    grid: &RasterGrid,
    features: &[PolygonFeature],
    strategy: ExtractionStrategy,
    workers: usize,
) -> Result<Vec<ExtractionResult>, ZonalError> {
    if workers <= 1 {
        return extract_all(grid, features, strategy);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("worker pool");
    let results: Vec<Result<ExtractionResult, ZonalError>> =
        pool.install(|| features.par_iter().map(|f| extract(grid, f, strategy)).collect());
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::vector::PolygonPart;
    use crate::DEFAULT_CRS_TAG;

    fn grid_1x1(value: f64) -> RasterGrid {
        RasterGrid::new(1, 1, 0.0, 0.0, 1.0, -9999.0, vec![value], DEFAULT_CRS_TAG).unwrap()
    }

    fn square(x0: f64, y0: f64, side: f64) -> PolygonFeature {
        PolygonFeature::from_parts(vec![PolygonPart {
            outer: vec![
                Point::new(x0, y0),
                Point::new(x0 + side, y0),
                Point::new(x0 + side, y0 + side),
                Point::new(x0, y0 + side),
            ],
            holes: vec![],
        }])
    }

    #[test]
    fn full_cell_identity_for_all_strategies() {
        let grid = grid_1x1(7.0);
        let feature = square(0.0, 0.0, 1.0);
        for strategy in [
            ExtractionStrategy::centroid(),
            ExtractionStrategy::any_overlap(),
            ExtractionStrategy::area_weighted(),
        ] {
            let r = extract(&grid, &feature, strategy).unwrap();
            assert_eq!(r.estimate, Some(7.0));
            assert_eq!(r.cells_touched, 1);
            assert_eq!(r.cells_counted, 1);
            assert_eq!(r.nodata_cells, 0);
        }
    }

    #[test]
    fn quarter_cell_shows_null_vs_overestimate_dichotomy() {
        let grid = grid_1x1(100.0);
        // Corner quarter of the cell; the cell center (0.5, 0.5) is a vertex
        // and resolves outside under the half-open crossing rule.
        let feature = square(0.0, 0.0, 0.5);

        let centroid = extract(&grid, &feature, ExtractionStrategy::centroid()).unwrap();
        assert_eq!(centroid.estimate, None);
        assert_eq!(centroid.cells_counted, 0);

        let any = extract(&grid, &feature, ExtractionStrategy::any_overlap()).unwrap();
        assert_eq!(any.estimate, Some(100.0));

        let weighted = extract(&grid, &feature, ExtractionStrategy::area_weighted()).unwrap();
        let est = weighted.estimate.unwrap();
        assert!((est - 25.0).abs() < 1e-9, "got {est}");
    }

    #[test]
    fn crs_mismatch_is_an_error() {
        let grid = grid_1x1(1.0).with_crs_tag("mercator-spherical");
        let feature = square(0.0, 0.0, 1.0);
        match extract(&grid, &feature, ExtractionStrategy::default()) {
            Err(ZonalError::CrsMismatch { feature_id, .. }) => assert_eq!(feature_id, "0"),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn nodata_cells_counted_but_not_summed() {
        let grid = RasterGrid::new(
            2,
            1,
            0.0,
            0.0,
            1.0,
            -9999.0,
            vec![-9999.0, 3.0],
            DEFAULT_CRS_TAG,
        )
        .unwrap();
        let feature = square(0.0, 0.0, 2.0); // covers both cells
        let r = extract(&grid, &feature, ExtractionStrategy::area_weighted()).unwrap();
        assert_eq!(r.cells_touched, 2);
        assert_eq!(r.cells_counted, 2);
        assert_eq!(r.nodata_cells, 1);
        assert_eq!(r.estimate, Some(3.0));
    }

    #[test]
    fn all_nodata_selection_estimates_zero_not_absent() {
        let grid = RasterGrid::new(
            1,
            1,
            0.0,
            0.0,
            1.0,
            -9999.0,
            vec![-9999.0],
            DEFAULT_CRS_TAG,
        )
        .unwrap();
        let r = extract(&grid, &square(0.0, 0.0, 1.0), ExtractionStrategy::area_weighted())
            .unwrap();
        assert_eq!(r.estimate, Some(0.0));
        assert_eq!(r.nodata_cells, 1);
    }

    #[test]
    fn feature_outside_grid_is_absent() {
        let grid = grid_1x1(5.0);
        let r = extract(&grid, &square(10.0, 10.0, 1.0), ExtractionStrategy::any_overlap())
            .unwrap();
        assert_eq!(r.estimate, None);
        assert_eq!(r.cells_touched, 0);
    }

    #[test]
    fn extract_all_matches_individual_calls() {
        let grid = grid_1x1(9.0);
        let features = vec![square(0.0, 0.0, 1.0), square(0.25, 0.25, 0.5)];
        let strategy = ExtractionStrategy::area_weighted();
        let batch = extract_all(&grid, &features, strategy).unwrap();
        assert_eq!(batch.len(), 2);
        for (f, r) in features.iter().zip(&batch) {
            assert_eq!(*r, extract(&grid, f, strategy).unwrap());
        }
        assert!(extract_all(&grid, &[], strategy).unwrap().is_empty());
    }

    #[test]
    fn parallel_matches_serial_bitwise() {
        let grid = RasterGrid::new(
            4,
            4,
            0.0,
            0.0,
            1.0,
            -9999.0,
            (0..16).map(|i| i as f64 * 0.37 + 0.1).collect(),
            DEFAULT_CRS_TAG,
        )
        .unwrap();
        let features: Vec<_> = (0..12)
            .map(|i| {
                let x = (i % 4) as f64 * 0.9 + 0.1;
                let y = (i / 4) as f64 * 1.1 + 0.2;
                square(x, y, 1.3)
            })
            .collect();
        let strategy = ExtractionStrategy::area_weighted();
        let serial = extract_all(&grid, &features, strategy).unwrap();
        for workers in [2, 4, 8] {
            let parallel = extract_all_parallel(&grid, &features, strategy, workers).unwrap();
            assert_eq!(parallel, serial);
        }
    }

    #[test]
    fn batch_error_names_first_failing_feature() {
        let grid = grid_1x1(1.0);
        let good = square(0.0, 0.0, 1.0);
        let mut bad = square(0.0, 0.0, 1.0);
        bad.id = "broken".into();
        bad.crs_tag = "other".into();
        let err = extract_all(&grid, &[good, bad], ExtractionStrategy::default()).unwrap_err();
        match err {
            ZonalError::CrsMismatch { feature_id, .. } => assert_eq!(feature_id, "broken"),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn strategy_names_parse() {
        assert_eq!(
            "area_weighted".parse::<ExtractionStrategy>().unwrap().kind,
            StrategyKind::AreaWeighted
        );
        assert_eq!(
            "any-overlap".parse::<ExtractionStrategy>().unwrap().kind,
            StrategyKind::AnyOverlap
        );
        assert!("nearest".parse::<ExtractionStrategy>().is_err());
    }
}
