//! Coordinate transforms that bring polygon vertices into the raster's
//! coordinate reference system before extraction.
//!
//! Only the identity and the spherical Mercator pair are provided; the
//! production path for geographic rasters is identity, and Mercator exists to
//! exercise the transform seam. Vertices are mapped without densification:
//! settlement polygons are far smaller than a degree, so edge curvature error
//! stays well below cell size.

use crate::geometry::Point;
use crate::vector::{PolygonFeature, PolygonPart};
use std::str::FromStr;
use thiserror::Error;

/// Spherical earth radius in meters.
pub const DEFAULT_SPHERE_RADIUS: f64 = 6_378_137.0;

/// CRS tag produced by the forward Mercator transform.
pub const MERCATOR_CRS_TAG: &str = "mercator-spherical";

#[derive(Debug, Error, PartialEq)]
pub enum TransformError {
    #[error("latitude {lat} is at or beyond the Mercator singularity (|lat| must be < 90)")]
    LatitudeOutOfRange { lat: f64 },
    #[error("longitude {lon} outside [-180, 180]")]
    LongitudeOutOfRange { lon: f64 },
    #[error("non-finite coordinate ({x}, {y})")]
    NonFinite { x: f64, y: f64 },
    #[error("unknown transform `{0}` (expected identity, lonlat-to-mercator or mercator-to-lonlat)")]
    UnknownName(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Identity,
    LonLatToMercator,
    MercatorToLonLat,
}

/// A point transform plus the CRS bookkeeping for transformed features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateTransform {
    pub kind: TransformKind,
    pub sphere_radius: f64,
}

impl Default for CoordinateTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl CoordinateTransform {
    pub fn identity() -> Self {
        Self {
            kind: TransformKind::Identity,
            sphere_radius: DEFAULT_SPHERE_RADIUS,
        }
    }

    pub fn lonlat_to_mercator() -> Self {
        Self {
            kind: TransformKind::LonLatToMercator,
            sphere_radius: DEFAULT_SPHERE_RADIUS,
        }
    }

    pub fn mercator_to_lonlat() -> Self {
        Self {
            kind: TransformKind::MercatorToLonLat,
            sphere_radius: DEFAULT_SPHERE_RADIUS,
        }
    }

    /// Apply the transform to one point. The identity is a strict no-op on
    /// the coordinates.
    pub fn apply(&self, p: Point) -> Result<Point, TransformError> {
        match self.kind {
            TransformKind::Identity => Ok(p),
            TransformKind::LonLatToMercator => {
                if !p.x.is_finite() || !p.y.is_finite() {
                    return Err(TransformError::NonFinite { x: p.x, y: p.y });
                }
                if p.x.abs() > 180.0 {
                    return Err(TransformError::LongitudeOutOfRange { lon: p.x });
                }
                if p.y.abs() >= 90.0 {
                    return Err(TransformError::LatitudeOutOfRange { lat: p.y });
                }
                let r = self.sphere_radius;
                let x = r * p.x.to_radians();
                let y = r * (std::f64::consts::FRAC_PI_4 + p.y.to_radians() / 2.0).tan().ln();
                Ok(Point::new(x, y))
            }
            TransformKind::MercatorToLonLat => {
                if !p.x.is_finite() || !p.y.is_finite() {
                    return Err(TransformError::NonFinite { x: p.x, y: p.y });
                }
                let r = self.sphere_radius;
                let lon = (p.x / r).to_degrees();
                let lat = (2.0 * (p.y / r).exp().atan() - std::f64::consts::FRAC_PI_2).to_degrees();
                Ok(Point::new(lon, lat))
            }
        }
    }

    /// The CRS tag a feature carries after this transform, given its source
    /// tag.
    pub fn target_crs_tag(&self, source: &str) -> String {
        match self.kind {
            TransformKind::Identity => source.to_string(),
            TransformKind::LonLatToMercator => MERCATOR_CRS_TAG.to_string(),
            TransformKind::MercatorToLonLat => crate::DEFAULT_CRS_TAG.to_string(),
        }
    }

    /// Vertex-wise transform of a feature; ring structure, id, name and
    /// population are unchanged and the CRS tag is updated.
    pub fn transform_feature(
        &self,
        feature: &PolygonFeature,
    ) -> Result<PolygonFeature, TransformError> {
        let map_ring = |ring: &[Point]| -> Result<Vec<Point>, TransformError> {
            ring.iter().map(|&p| self.apply(p)).collect()
        };
        let parts = feature
            .parts
            .iter()
            .map(|part| {
                Ok(PolygonPart {
                    outer: map_ring(&part.outer)?,
                    holes: part
                        .holes
                        .iter()
                        .map(|h| map_ring(h))
                        .collect::<Result<Vec<_>, _>>()?,
                })
            })
            .collect::<Result<Vec<_>, TransformError>>()?;
        Ok(PolygonFeature {
            id: feature.id.clone(),
            name: feature.name.clone(),
            ground_truth_pop: feature.ground_truth_pop,
            parts,
            crs_tag: self.target_crs_tag(&feature.crs_tag),
        })
    }
}

impl FromStr for CoordinateTransform {
    type Err = TransformError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(Self::identity()),
            "lonlat-to-mercator" | "lonlat_to_mercator" => Ok(Self::lonlat_to_mercator()),
            "mercator-to-lonlat" | "mercator_to_lonlat" => Ok(Self::mercator_to_lonlat()),
            other => Err(TransformError::UnknownName(other.to_string())),
        }
    }
}
