//! Ground-truth settlement polygons: a GeoJSON subset reader
//! (FeatureCollection of Polygon/MultiPolygon), a matching writer, and the
//! per-polygon estimates CSV.

use crate::geometry::{self, Point};
use crate::metrics::{Bucket, EstimateRecord};
use crate::numfmt::format_significant;
use crate::DEFAULT_CRS_TAG;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VectorError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("root object is not a GeoJSON FeatureCollection")]
    NotFeatureCollection,
    #[error("feature {index}: {message}")]
    MalformedFeature { index: usize, message: String },
    #[error("feature {index}: unsupported geometry type `{kind}`; only Polygon and MultiPolygon are accepted")]
    UnsupportedGeometry { index: usize, kind: String },
    #[error("feature {index}: missing or non-numeric population property `{property}`")]
    BadPopulation { index: usize, property: String },
    #[error("feature {index}: population {value} is negative")]
    NegativePopulation { index: usize, value: f64 },
    #[error("feature {index}: ring {ring} has {count} positions, need at least 4 (closed)")]
    ShortRing {
        index: usize,
        ring: usize,
        count: usize,
    },
    #[error("feature {index}: ring {ring} is not closed (last position != first)")]
    UnclosedRing { index: usize, ring: usize },
    #[error("feature {index}: ring {ring} has fewer than 3 distinct vertices")]
    DegenerateRing { index: usize, ring: usize },
    #[error("feature {index}: part {part} has zero area")]
    ZeroAreaPart { index: usize, part: usize },
    #[error("duplicate feature id `{id}`")]
    DuplicateId { id: String },
    #[error("invalid feature `{id}`: {message}")]
    InvalidFeature { id: String, message: String },
    #[error("CSV schema mismatch: expected column `{expected}`, found `{found}`")]
    CsvSchema { expected: String, found: String },
    #[error("CSV row {row}: {message}")]
    CsvRow { row: usize, message: String },
    #[error("CSV error: {0}")]
    Csv(String),
}

/// One polygon part: an outer ring plus zero or more hole rings. Rings are
/// stored open (the GeoJSON closing vertex is removed).
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonPart {
    pub outer: Vec<Point>,
    pub holes: Vec<Vec<Point>>,
}

/// A surveyed settlement polygon carrying its ground-truth population.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonFeature {
    pub id: String,
    pub name: String,
    pub ground_truth_pop: f64,
    pub parts: Vec<PolygonPart>,
    pub crs_tag: String,
}

impl PolygonFeature {
    /// Build a feature from bare parts with default id/name/population and
    /// the default CRS tag. Mostly useful for programmatic construction and
    /// tests; run [`PolygonFeature::validate`] before feeding untrusted data
    /// into extraction.
    pub fn from_parts(parts: Vec<PolygonPart>) -> Self {
        Self {
            id: "0".to_string(),
            name: String::new(),
            ground_truth_pop: 0.0,
            parts,
            crs_tag: DEFAULT_CRS_TAG.to_string(),
        }
    }

    /// Check the structural invariants: at least one part, every ring has at
    /// least 3 distinct finite vertices, every part has positive area, and
    /// the ground-truth population is a finite non-negative number.
    pub fn validate(&self) -> Result<(), VectorError> {
        let invalid = |message: String| VectorError::InvalidFeature {
            id: self.id.clone(),
            message,
        };
        if self.parts.is_empty() {
            return Err(invalid("feature has no polygon parts".into()));
        }
        if !self.ground_truth_pop.is_finite() || self.ground_truth_pop < 0.0 {
            return Err(invalid(format!(
                "ground-truth population {} is not a finite non-negative number",
                self.ground_truth_pop
            )));
        }
        for (pi, part) in self.parts.iter().enumerate() {
            for ring in std::iter::once(&part.outer).chain(part.holes.iter()) {
                if count_distinct(ring) < 3 {
                    return Err(invalid(format!(
                        "part {pi} has a ring with fewer than 3 distinct vertices"
                    )));
                }
                if ring.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
                    return Err(invalid(format!("part {pi} has non-finite coordinates")));
                }
            }
            let area = geometry::ring_area_signed(&part.outer).abs();
            if !area.is_finite() || area <= 0.0 {
                return Err(invalid(format!("part {pi} has zero area")));
            }
        }
        Ok(())
    }
}

fn count_distinct(ring: &[Point]) -> usize {
    let mut distinct: Vec<Point> = Vec::with_capacity(ring.len());
    for &p in ring {
        if !distinct.contains(&p) {
            distinct.push(p);
        }
    }
    distinct.len()
}

fn position_to_point(
    value: &Value,
    index: usize,
    ring: usize,
) -> Result<Point, VectorError> {
    let arr = value.as_array().ok_or_else(|| VectorError::MalformedFeature {
        index,
        message: format!("ring {ring}: position is not an array"),
    })?;
    if arr.len() < 2 {
        return Err(VectorError::MalformedFeature {
            index,
            message: format!("ring {ring}: position has fewer than 2 coordinates"),
        });
    }
    let x = arr[0].as_f64().ok_or_else(|| VectorError::MalformedFeature {
        index,
        message: format!("ring {ring}: non-numeric x coordinate"),
    })?;
    let y = arr[1].as_f64().ok_or_else(|| VectorError::MalformedFeature {
        index,
        message: format!("ring {ring}: non-numeric y coordinate"),
    })?;
    Ok(Point::new(x, y))
}

/// Parse one GeoJSON ring: at least 4 positions, closed, closing vertex
/// dropped, at least 3 distinct vertices afterwards.
fn parse_ring(
    value: &Value,
    index: usize,
    ring_no: usize,
) -> Result<Vec<Point>, VectorError> {
    let positions = value.as_array().ok_or_else(|| VectorError::MalformedFeature {
        index,
        message: format!("ring {ring_no}: not an array of positions"),
    })?;
    if positions.len() < 4 {
        return Err(VectorError::ShortRing {
            index,
            ring: ring_no,
            count: positions.len(),
        });
    }
    let mut points = positions
        .iter()
        .map(|p| position_to_point(p, index, ring_no))
        .collect::<Result<Vec<_>, _>>()?;
    let first = points[0];
    let last = *points.last().unwrap();
    if first != last {
        return Err(VectorError::UnclosedRing { index, ring: ring_no });
    }
    points.pop();
    if count_distinct(&points) < 3 {
        return Err(VectorError::DegenerateRing { index, ring: ring_no });
    }
    Ok(points)
}

fn parse_polygon_rings(
    rings: &[Value],
    index: usize,
    part_no: usize,
    ring_offset: &mut usize,
) -> Result<PolygonPart, VectorError> {
    if rings.is_empty() {
        return Err(VectorError::MalformedFeature {
            index,
            message: format!("part {part_no} has no rings"),
        });
    }
    let mut parsed = Vec::with_capacity(rings.len());
    for ring in rings {
        parsed.push(parse_ring(ring, index, *ring_offset)?);
        *ring_offset += 1;
    }
    let outer = parsed.remove(0);
    let outer_area = geometry::ring_area_signed(&outer).abs();
    if !outer_area.is_finite() || outer_area <= 0.0 {
        return Err(VectorError::ZeroAreaPart { index, part: part_no });
    }
    Ok(PolygonPart {
        outer,
        holes: parsed,
    })
}

/// Parse a GeoJSON FeatureCollection containing only Polygon/MultiPolygon
/// geometries. `pop_property` names the property holding the surveyed
/// population count. Features without an `id` member get the 0-based feature
/// index as their id; a `name` string property is carried through when
/// present. Foreign members are ignored.
pub fn parse_feature_collection(
    text: &str,
    pop_property: &str,
) -> Result<Vec<PolygonFeature>, VectorError> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| VectorError::Json(e.to_string()))?;
    let obj = root.as_object().ok_or(VectorError::NotFeatureCollection)?;
    if obj.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(VectorError::NotFeatureCollection);
    }
    let features = obj
        .get("features")
        .and_then(Value::as_array)
        .ok_or(VectorError::NotFeatureCollection)?;

    let mut out: Vec<PolygonFeature> = Vec::with_capacity(features.len());
    for (index, feature) in features.iter().enumerate() {
        let fobj = feature.as_object().ok_or_else(|| VectorError::MalformedFeature {
            index,
            message: "feature is not an object".into(),
        })?;
        if fobj.get("type").and_then(Value::as_str) != Some("Feature") {
            return Err(VectorError::MalformedFeature {
                index,
                message: "missing `\"type\": \"Feature\"`".into(),
            });
        }

        let id = match fobj.get("id") {
            None | Some(Value::Null) => index.to_string(),
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            Some(other) => {
                return Err(VectorError::MalformedFeature {
                    index,
                    message: format!("id must be a string or number, found {other}"),
                })
            }
        };

        let properties = fobj.get("properties").and_then(Value::as_object);
        let ground_truth_pop = properties
            .and_then(|p| p.get(pop_property))
            .and_then(Value::as_f64)
            .ok_or_else(|| VectorError::BadPopulation {
                index,
                property: pop_property.to_string(),
            })?;
        if !ground_truth_pop.is_finite() || ground_truth_pop < 0.0 {
            return Err(VectorError::NegativePopulation {
                index,
                value: ground_truth_pop,
            });
        }
        let name = properties
            .and_then(|p| p.get("name"))
            .and_then(Value::as_str)
            .unwrap_or("")
            .to_string();

        let geometry = fobj
            .get("geometry")
            .and_then(Value::as_object)
            .ok_or_else(|| VectorError::MalformedFeature {
                index,
                message: "missing geometry object".into(),
            })?;
        let kind = geometry
            .get("type")
            .and_then(Value::as_str)
            .unwrap_or("<missing>");
        let coordinates = geometry
            .get("coordinates")
            .and_then(Value::as_array)
            .ok_or_else(|| VectorError::MalformedFeature {
                index,
                message: "geometry has no coordinates array".into(),
            });

        let mut ring_offset = 0usize;
        let parts = match kind {
            "Polygon" => vec![parse_polygon_rings(coordinates?, index, 0, &mut ring_offset)?],
            "MultiPolygon" => {
                let polygons = coordinates?;
                let mut parts = Vec::with_capacity(polygons.len());
                for (part_no, polygon) in polygons.iter().enumerate() {
                    let rings =
                        polygon
                            .as_array()
                            .ok_or_else(|| VectorError::MalformedFeature {
                                index,
                                message: format!("part {part_no} is not an array of rings"),
                            })?;
                    parts.push(parse_polygon_rings(rings, index, part_no, &mut ring_offset)?);
                }
                if parts.is_empty() {
                    return Err(VectorError::MalformedFeature {
                        index,
                        message: "MultiPolygon has no parts".into(),
                    });
                }
                parts
            }
            other => {
                return Err(VectorError::UnsupportedGeometry {
                    index,
                    kind: other.to_string(),
                })
            }
        };

        if out.iter().any(|f| f.id == id) {
            return Err(VectorError::DuplicateId { id });
        }
        out.push(PolygonFeature {
            id,
            name,
            ground_truth_pop,
            parts,
            crs_tag: DEFAULT_CRS_TAG.to_string(),
        });
    }
    Ok(out)
}

fn ring_to_json(ring: &[Point]) -> Value {
    let mut coords: Vec<Value> = ring.iter().map(|p| json!([p.x, p.y])).collect();
    // Re-append the GeoJSON closing vertex.
    coords.push(json!([ring[0].x, ring[0].y]));
    Value::Array(coords)
}

/// Serialize features back to GeoJSON, writing the population under
/// `pop_property`. Single-part features become Polygon geometries,
/// multi-part features MultiPolygon.
pub fn write_feature_collection(features: &[PolygonFeature], pop_property: &str) -> String {
    let features_json: Vec<Value> = features
        .iter()
        .map(|f| {
            let geometry = if f.parts.len() == 1 {
                let part = &f.parts[0];
                let rings: Vec<Value> = std::iter::once(&part.outer)
                    .chain(part.holes.iter())
                    .map(|r| ring_to_json(r))
                    .collect();
                json!({ "type": "Polygon", "coordinates": rings })
            } else {
                let polys: Vec<Value> = f
                    .parts
                    .iter()
                    .map(|part| {
                        let rings: Vec<Value> = std::iter::once(&part.outer)
                            .chain(part.holes.iter())
                            .map(|r| ring_to_json(r))
                            .collect();
                        Value::Array(rings)
                    })
                    .collect();
                json!({ "type": "MultiPolygon", "coordinates": polys })
            };
            json!({
                "type": "Feature",
                "id": f.id,
                "properties": { "name": f.name, pop_property: f.ground_truth_pop },
                "geometry": geometry,
            })
        })
        .collect();
    let doc = json!({ "type": "FeatureCollection", "features": features_json });
    let mut text = serde_json::to_string_pretty(&doc).expect("json serialization");
    text.push('\n');
    text
}

/// Column order of the estimates CSV.
pub const CSV_COLUMNS: [&str; 9] = [
    "id",
    "name",
    "gt_pop",
    "cells_touched",
    "cells_counted",
    "nodata_cells",
    "estimate",
    "rel_error",
    "bucket",
];

/// Serialize estimate records as CSV, one row per record in input order.
/// Real numbers carry 6 significant digits; absent estimates and undefined
/// relative errors serialize as empty fields. Fields containing commas or
/// quotes are double-quoted with internal quotes doubled.
pub fn write_estimates_csv(records: &[EstimateRecord]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_COLUMNS).expect("csv header");
    for r in records {
        writer
            .write_record(&[
                r.feature_id.clone(),
                r.name.clone(),
                format_significant(r.gt_pop, 6),
                r.cells_touched.to_string(),
                r.cells_counted.to_string(),
                r.nodata_cells.to_string(),
                r.estimate.map(|e| format_significant(e, 6)).unwrap_or_default(),
                r.rel_error.map(|e| format_significant(e, 6)).unwrap_or_default(),
                r.bucket.label().to_string(),
            ])
            .expect("csv row");
    }
    let bytes = writer.into_inner().expect("csv flush");
    String::from_utf8(bytes).expect("csv is utf-8")
}

fn csv_f64(field: &str, column: &str, row: usize) -> Result<f64, VectorError> {
    field.parse::<f64>().map_err(|_| VectorError::CsvRow {
        row,
        message: format!("non-numeric `{column}` value `{field}`"),
    })
}

fn csv_usize(field: &str, column: &str, row: usize) -> Result<usize, VectorError> {
    field.parse::<usize>().map_err(|_| VectorError::CsvRow {
        row,
        message: format!("non-integer `{column}` value `{field}`"),
    })
}

/// Parse an estimates CSV produced by [`write_estimates_csv`]. The header
/// must match the schema column-for-column.
pub fn parse_estimates_csv(text: &str) -> Result<Vec<EstimateRecord>, VectorError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| VectorError::Csv(e.to_string()))?
        .clone();
    for (i, expected) in CSV_COLUMNS.iter().enumerate() {
        let found = headers.get(i).unwrap_or("");
        if found != *expected {
            return Err(VectorError::CsvSchema {
                expected: expected.to_string(),
                found: found.to_string(),
            });
        }
    }
    if headers.len() > CSV_COLUMNS.len() {
        return Err(VectorError::CsvSchema {
            expected: "<end of header>".to_string(),
            found: headers.get(CSV_COLUMNS.len()).unwrap_or("").to_string(),
        });
    }

    let mut records = Vec::new();
    for (row_no, row) in reader.records().enumerate() {
        let row = row.map_err(|e| VectorError::Csv(e.to_string()))?;
        let row_no = row_no + 2; // header is line 1
        if row.len() != CSV_COLUMNS.len() {
            return Err(VectorError::CsvRow {
                row: row_no,
                message: format!("expected {} fields, found {}", CSV_COLUMNS.len(), row.len()),
            });
        }
        let estimate = match &row[6] {
            "" => None,
            s => Some(csv_f64(s, "estimate", row_no)?),
        };
        let rel_error = match &row[7] {
            "" => None,
            s => Some(csv_f64(s, "rel_error", row_no)?),
        };
        let bucket = Bucket::from_label(&row[8]).ok_or_else(|| VectorError::CsvRow {
            row: row_no,
            message: format!("unknown bucket `{}`", &row[8]),
        })?;
        records.push(EstimateRecord {
            feature_id: row[0].to_string(),
            name: row[1].to_string(),
            gt_pop: csv_f64(&row[2], "gt_pop", row_no)?,
            cells_touched: csv_usize(&row[3], "cells_touched", row_no)?,
            cells_counted: csv_usize(&row[4], "cells_counted", row_no)?,
            nodata_cells: csv_usize(&row[5], "nodata_cells", row_no)?,
            estimate,
            rel_error,
            bucket,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = r#"{
        "type": "FeatureCollection",
        "features": [{
            "type": "Feature",
            "properties": { "pop": 100, "name": "alpha" },
            "geometry": {
                "type": "Polygon",
                "coordinates": [[[0,0],[1,0],[1,1],[0,1],[0,0]]]
            }
        }]
    }"#;

    #[test]
    fn parse_single_polygon() {
        let fs = parse_feature_collection(SQUARE, "pop").unwrap();
        assert_eq!(fs.len(), 1);
        let f = &fs[0];
        assert_eq!(f.id, "0");
        assert_eq!(f.name, "alpha");
        assert_eq!(f.ground_truth_pop, 100.0);
        assert_eq!(f.parts.len(), 1);
        assert_eq!(f.parts[0].outer.len(), 4); // closing vertex removed
        f.validate().unwrap();
    }

    #[test]
    fn parse_point_geometry_errors_with_index() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"pop":1},
             "geometry":{"type":"Point","coordinates":[0,0]}}]}"#;
        match parse_feature_collection(text, "pop") {
            Err(VectorError::UnsupportedGeometry { index: 0, kind }) => assert_eq!(kind, "Point"),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn parse_multipolygon_two_squares() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"pop":50},
             "geometry":{"type":"MultiPolygon","coordinates":[
                [[[0,0],[1,0],[1,1],[0,1],[0,0]]],
                [[[5,5],[6,5],[6,6],[5,6],[5,5]]]
             ]}}]}"#;
        let fs = parse_feature_collection(text, "pop").unwrap();
        assert_eq!(fs[0].parts.len(), 2);
        assert!((crate::geometry::feature_area(&fs[0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn parse_missing_population_property() {
        match parse_feature_collection(SQUARE, "population") {
            Err(VectorError::BadPopulation { index: 0, property }) => {
                assert_eq!(property, "population")
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn parse_short_ring() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"pop":1},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[0,0]]]}}]}"#;
        match parse_feature_collection(text, "pop") {
            Err(VectorError::ShortRing { index: 0, ring: 0, count: 3 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn parse_duplicate_ids() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","id":"a","properties":{"pop":1},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}},
            {"type":"Feature","id":"a","properties":{"pop":2},
             "geometry":{"type":"Polygon","coordinates":[[[2,2],[3,2],[3,3],[2,3],[2,2]]]}}]}"#;
        match parse_feature_collection(text, "pop") {
            Err(VectorError::DuplicateId { id }) => assert_eq!(id, "a"),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn parse_zero_population_accepted() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"pop":0},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}}]}"#;
        let fs = parse_feature_collection(text, "pop").unwrap();
        assert_eq!(fs[0].ground_truth_pop, 0.0);
    }

    #[test]
    fn geojson_round_trip_preserves_vertices() {
        let fs = parse_feature_collection(SQUARE, "pop").unwrap();
        let text = write_feature_collection(&fs, "pop");
        let back = parse_feature_collection(&text, "pop").unwrap();
        assert_eq!(back, fs);
    }

    fn record(id: &str, est: Option<f64>, gt: f64) -> EstimateRecord {
        EstimateRecord::new(id.to_string(), String::new(), gt, est, 1, 1, 0)
    }

    #[test]
    fn csv_trivial_row() {
        let text = write_estimates_csv(&[record("a", Some(80.0), 100.0)]);
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "id,name,gt_pop,cells_touched,cells_counted,nodata_cells,estimate,rel_error,bucket"
        );
        assert_eq!(lines.next().unwrap(), "a,,100,1,1,0,80,-0.2,WITHIN_20");
    }

    #[test]
    fn csv_non_applicable_row_has_empty_fields() {
        let text = write_estimates_csv(&[record("a", None, 100.0)]);
        assert!(text.lines().nth(1).unwrap().ends_with(",,,NON_APPLICABLE"));
    }

    #[test]
    fn csv_quotes_names_with_commas_and_quotes() {
        let mut r = record("a", Some(1.0), 1.0);
        r.name = "rock, \"the\" hill".to_string();
        let text = write_estimates_csv(&[r.clone()]);
        assert!(text.contains("\"rock, \"\"the\"\" hill\""));
        let back = parse_estimates_csv(&text).unwrap();
        assert_eq!(back[0].name, r.name);
    }

    #[test]
    fn csv_schema_mismatch_names_column() {
        let text = "id,name,gt_pop,touched,cells_counted,nodata_cells,estimate,rel_error,bucket\n";
        match parse_estimates_csv(text) {
            Err(VectorError::CsvSchema { expected, found }) => {
                assert_eq!(expected, "cells_touched");
                assert_eq!(found, "touched");
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_exact_for_representable_values() {
        let records = vec![record("a", Some(123456.0), 654321.0), record("b", None, 0.0)];
        let text = write_estimates_csv(&records);
        let back = parse_estimates_csv(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].estimate, Some(123456.0));
        assert_eq!(back[0].gt_pop, 654321.0);
        assert_eq!(back[1].estimate, None);
        assert_eq!(back[1].bucket, Bucket::NonApplicable);
        // Second pass is a fixed point.
        assert_eq!(write_estimates_csv(&back), text);
    }
}
