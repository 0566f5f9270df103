//! Gridded population rasters: ESRI ASCII Grid parsing/writing and the cell
//! geometry used to window a polygon's neighborhood.

use crate::geometry::Rectangle;
use crate::DEFAULT_CRS_TAG;
use std::fmt::Write as _;
use thiserror::Error;

/// Default nodata sentinel when a file declares none.
pub const DEFAULT_NODATA: f64 = -9999.0;

#[derive(Debug, Error, PartialEq)]
pub enum RasterError {
    #[error("line {line}: expected header key `{expected}`, found `{found}`")]
    MalformedHeaderKey {
        line: usize,
        expected: &'static str,
        found: String,
    },
    #[error("line {line}: header line must be `key value`, found {tokens} tokens")]
    MalformedHeaderLine { line: usize, tokens: usize },
    #[error("line {line}: invalid numeric token `{token}`")]
    InvalidNumber { line: usize, token: String },
    #[error("line {line}: `{key}` must be a positive integer, got `{value}`")]
    NonPositiveDimension {
        line: usize,
        key: &'static str,
        value: String,
    },
    #[error("line {line}: cellsize must be positive, got {value}")]
    NonPositiveCellSize { line: usize, value: f64 },
    #[error("line {line}: expected {expected} values in row, found {found}")]
    WrongTokenCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("expected {expected} data rows, found {found}")]
    WrongRowCount { expected: usize, found: usize },
    #[error("line {line}: negative value {value}; population counts are non-negative")]
    NegativeValue { line: usize, value: f64 },
    #[error("line {line}: non-finite value `{token}`")]
    NonFiniteValue { line: usize, token: String },
    #[error("unexpected end of input at line {line}")]
    UnexpectedEof { line: usize },
    #[error("values length {found} does not match {cols} x {rows}")]
    ValueCountMismatch {
        found: usize,
        cols: usize,
        rows: usize,
    },
    #[error("grid dimensions must be at least 1x1, got {cols} x {rows}")]
    EmptyGrid { cols: usize, rows: usize },
    #[error("invalid grid parameter: {0}")]
    InvalidParameter(String),
    #[error("cell index ({row}, {col}) out of range for {rows} x {cols} grid")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
}

/// A georeferenced rectangular grid of per-cell population counts.
///
/// Values are stored row-major with the first row northernmost. Cell
/// `(row, col)` covers the box
/// `[x_ll + col*s, x_ll + (col+1)*s] x [y_ll + (n_rows-1-row)*s, y_ll + (n_rows-row)*s]`
/// where `s` is the cell size. Immutable after construction, so shared
/// read-only access from worker threads is safe.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    n_cols: usize,
    n_rows: usize,
    x_ll: f64,
    y_ll: f64,
    cell_size: f64,
    nodata: f64,
    values: Vec<f64>,
    crs_tag: String,
}

impl RasterGrid {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_cols: usize,
        n_rows: usize,
        x_ll: f64,
        y_ll: f64,
        cell_size: f64,
        nodata: f64,
        values: Vec<f64>,
        crs_tag: impl Into<String>,
    ) -> Result<Self, RasterError> {
        if n_cols == 0 || n_rows == 0 {
            return Err(RasterError::EmptyGrid {
                cols: n_cols,
                rows: n_rows,
            });
        }
        if !cell_size.is_finite() || cell_size <= 0.0 {
            return Err(RasterError::InvalidParameter(format!(
                "cellsize must be positive and finite, got {cell_size}"
            )));
        }
        if !x_ll.is_finite() || !y_ll.is_finite() || !nodata.is_finite() {
            return Err(RasterError::InvalidParameter(
                "origin and nodata must be finite".into(),
            ));
        }
        if values.len() != n_cols * n_rows {
            return Err(RasterError::ValueCountMismatch {
                found: values.len(),
                cols: n_cols,
                rows: n_rows,
            });
        }
        for &v in &values {
            if v == nodata {
                continue;
            }
            if !v.is_finite() {
                return Err(RasterError::InvalidParameter(format!(
                    "non-finite cell value {v}"
                )));
            }
            if v < 0.0 {
                return Err(RasterError::InvalidParameter(format!(
                    "negative cell value {v}; population counts are non-negative"
                )));
            }
        }
        Ok(Self {
            n_cols,
            n_rows,
            x_ll,
            y_ll,
            cell_size,
            nodata,
            values,
            crs_tag: crs_tag.into(),
        })
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn x_ll(&self) -> f64 {
        self.x_ll
    }

    pub fn y_ll(&self) -> f64 {
        self.y_ll
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn nodata(&self) -> f64 {
        self.nodata
    }

    pub fn crs_tag(&self) -> &str {
        &self.crs_tag
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Relabel the coordinate reference system tag.
    pub fn with_crs_tag(mut self, tag: impl Into<String>) -> Self {
        self.crs_tag = tag.into();
        self
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.n_rows && col < self.n_cols);
        self.values[row * self.n_cols + col]
    }

    /// nodata is exact equality against the declared sentinel.
    pub fn is_nodata(&self, row: usize, col: usize) -> bool {
        self.value(row, col) == self.nodata
    }

    /// Full grid extent as a rectangle.
    pub fn extent(&self) -> Rectangle {
        Rectangle::new(
            self.x_ll,
            self.y_ll,
            self.x_ll + self.n_cols as f64 * self.cell_size,
            self.y_ll + self.n_rows as f64 * self.cell_size,
        )
    }

    /// Sum of all non-nodata cell values.
    pub fn total_population(&self) -> f64 {
        self.values
            .iter()
            .filter(|&&v| v != self.nodata)
            .sum()
    }

    /// The axis-aligned box covered by one cell. Adjacent cells share edges
    /// bitwise because min and max are computed from the same expressions.
    pub fn cell_box(&self, row: usize, col: usize) -> Result<Rectangle, RasterError> {
        if row >= self.n_rows || col >= self.n_cols {
            return Err(RasterError::IndexOutOfRange {
                row,
                col,
                rows: self.n_rows,
                cols: self.n_cols,
            });
        }
        let s = self.cell_size;
        Ok(Rectangle::new(
            self.x_ll + col as f64 * s,
            self.y_ll + (self.n_rows - 1 - row) as f64 * s,
            self.x_ll + (col + 1) as f64 * s,
            self.y_ll + (self.n_rows - row) as f64 * s,
        ))
    }

    /// All in-range cells whose closed box intersects the closed bbox,
    /// including boundary contact, yielded in row-major order. A disjoint
    /// bbox gives an empty iterator.
    pub fn cells_intersecting(
        &self,
        bbox: Rectangle,
    ) -> impl Iterator<Item = (usize, usize)> + '_ {
        let s = self.cell_size;
        // Conservative index window, then the exact per-cell box test. The
        // float-to-int casts saturate, so arbitrarily large bboxes are safe.
        let clamp_col = |v: f64| (v as i64).clamp(0, self.n_cols as i64 - 1) as usize;
        let clamp_row = |v: f64| (v as i64).clamp(0, self.n_rows as i64 - 1) as usize;
        let col_lo = clamp_col(((bbox.x_min - self.x_ll) / s).floor() - 1.0);
        let col_hi = clamp_col(((bbox.x_max - self.x_ll) / s).floor() + 1.0);
        // Row indices grow southward.
        let row_lo = clamp_row((self.n_rows as f64 - 1.0) - ((bbox.y_max - self.y_ll) / s).floor() - 1.0);
        let row_hi = clamp_row((self.n_rows as f64 - 1.0) - ((bbox.y_min - self.y_ll) / s).floor() + 1.0);
        (row_lo..=row_hi).flat_map(move |row| {
            (col_lo..=col_hi).filter_map(move |col| {
                let b = self.cell_box(row, col).expect("index in range");
                b.intersects(&bbox).then_some((row, col))
            })
        })
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last_line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
            last_line: 0,
        }
    }

    /// Next non-blank line as (1-based line number, content).
    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (idx, line) in self.inner.by_ref() {
            self.last_line = idx + 1;
            if !line.trim().is_empty() {
                return Some((idx + 1, line));
            }
        }
        None
    }
}

fn parse_f64(token: &str, line: usize) -> Result<f64, RasterError> {
    token.parse::<f64>().map_err(|_| RasterError::InvalidNumber {
        line,
        token: token.to_string(),
    })
}

fn parse_dimension(token: &str, key: &'static str, line: usize) -> Result<usize, RasterError> {
    let n: usize = token
        .parse()
        .map_err(|_| RasterError::InvalidNumber {
            line,
            token: token.to_string(),
        })?;
    if n == 0 {
        return Err(RasterError::NonPositiveDimension {
            line,
            key,
            value: token.to_string(),
        });
    }
    Ok(n)
}

fn header_line<'a>(lines: &mut Lines<'a>) -> Result<(usize, String, &'a str), RasterError> {
    let (line, content) = lines
        .next_content()
        .ok_or(RasterError::UnexpectedEof { line: lines.last_line + 1 })?;
    let tokens: Vec<&str> = content.split_whitespace().collect();
    if tokens.len() != 2 {
        return Err(RasterError::MalformedHeaderLine {
            line,
            tokens: tokens.len(),
        });
    }
    let key = tokens[0].to_ascii_lowercase();
    Ok((line, key, tokens[1]))
}

/// Parse an ESRI ASCII Grid.
///
/// Header keys are case-insensitive and must appear in order `ncols`,
/// `nrows`, `xllcorner` (or `xllcenter`), `yllcorner` (or `yllcenter`),
/// `cellsize`, then an optional `nodata_value` (default -9999). The center
/// variants are converted to the corner convention by subtracting half a
/// cell. Values equal to the declared nodata sentinel are stored as nodata.
/// The parsed grid is tagged with the default CRS label; relabel with
/// [`RasterGrid::with_crs_tag`] if the data is in another system.
pub fn parse_ascii_grid(text: &str) -> Result<RasterGrid, RasterError> {
    let mut lines = Lines::new(text);

    let (line, key, value) = header_line(&mut lines)?;
    if key != "ncols" {
        return Err(RasterError::MalformedHeaderKey {
            line,
            expected: "ncols",
            found: key,
        });
    }
    let n_cols = parse_dimension(value, "ncols", line)?;

    let (line, key, value) = header_line(&mut lines)?;
    if key != "nrows" {
        return Err(RasterError::MalformedHeaderKey {
            line,
            expected: "nrows",
            found: key,
        });
    }
    let n_rows = parse_dimension(value, "nrows", line)?;

    let (line, key, value) = header_line(&mut lines)?;
    let x_is_center = match key.as_str() {
        "xllcorner" => false,
        "xllcenter" => true,
        _ => {
            return Err(RasterError::MalformedHeaderKey {
                line,
                expected: "xllcorner",
                found: key,
            })
        }
    };
    let x_raw = parse_f64(value, line)?;

    let (line, key, value) = header_line(&mut lines)?;
    let y_is_center = match key.as_str() {
        "yllcorner" => false,
        "yllcenter" => true,
        _ => {
            return Err(RasterError::MalformedHeaderKey {
                line,
                expected: "yllcorner",
                found: key,
            })
        }
    };
    let y_raw = parse_f64(value, line)?;

    let (line, key, value) = header_line(&mut lines)?;
    if key != "cellsize" {
        return Err(RasterError::MalformedHeaderKey {
            line,
            expected: "cellsize",
            found: key,
        });
    }
    let cell_size = parse_f64(value, line)?;
    if !cell_size.is_finite() || cell_size <= 0.0 {
        return Err(RasterError::NonPositiveCellSize {
            line,
            value: cell_size,
        });
    }

    let x_ll = if x_is_center { x_raw - cell_size / 2.0 } else { x_raw };
    let y_ll = if y_is_center { y_raw - cell_size / 2.0 } else { y_raw };

    // Optional nodata header, else the first data row.
    let mut nodata = DEFAULT_NODATA;
    let (first_data_line, first_data_content) = {
        let (line, content) = lines
            .next_content()
            .ok_or(RasterError::UnexpectedEof { line: lines.last_line + 1 })?;
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens
            .first()
            .is_some_and(|t| t.eq_ignore_ascii_case("nodata_value"))
        {
            if tokens.len() != 2 {
                return Err(RasterError::MalformedHeaderLine {
                    line,
                    tokens: tokens.len(),
                });
            }
            nodata = parse_f64(tokens[1], line)?;
            lines
                .next_content()
                .ok_or(RasterError::UnexpectedEof { line: lines.last_line + 1 })?
        } else {
            (line, content)
        }
    };

    let mut values = Vec::with_capacity(n_cols * n_rows);
    let mut row_source = Some((first_data_line, first_data_content));
    let mut rows_read = 0usize;
    while rows_read < n_rows {
        let (line, content) = match row_source.take() {
            Some(lc) => lc,
            None => lines
                .next_content()
                .ok_or(RasterError::WrongRowCount {
                    expected: n_rows,
                    found: rows_read,
                })?,
        };
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.len() != n_cols {
            return Err(RasterError::WrongTokenCount {
                line,
                expected: n_cols,
                found: tokens.len(),
            });
        }
        for token in tokens {
            let v = parse_f64(token, line)?;
            if v != nodata {
                if !v.is_finite() {
                    return Err(RasterError::NonFiniteValue {
                        line,
                        token: token.to_string(),
                    });
                }
                if v < 0.0 {
                    return Err(RasterError::NegativeValue { line, value: v });
                }
            }
            values.push(v);
        }
        rows_read += 1;
    }
    if let Some((_, extra)) = lines.next_content() {
        let _ = extra;
        return Err(RasterError::WrongRowCount {
            expected: n_rows,
            found: n_rows + 1,
        });
    }

    RasterGrid::new(
        n_cols, n_rows, x_ll, y_ll, cell_size, nodata, values, DEFAULT_CRS_TAG,
    )
}

/// Serialize a grid as an ESRI ASCII Grid with lower-case keys, the corner
/// convention, and an explicit `nodata_value` line. Numbers are written with
/// Rust's shortest round-trip representation, so `parse(write(g)) == g`
/// exactly.
pub fn write_ascii_grid(grid: &RasterGrid) -> String {
    let mut out = String::new();
    writeln!(out, "ncols {}", grid.n_cols).unwrap();
    writeln!(out, "nrows {}", grid.n_rows).unwrap();
    writeln!(out, "xllcorner {}", grid.x_ll).unwrap();
    writeln!(out, "yllcorner {}", grid.y_ll).unwrap();
    writeln!(out, "cellsize {}", grid.cell_size).unwrap();
    writeln!(out, "nodata_value {}", grid.nodata).unwrap();
    for row in 0..grid.n_rows {
        let start = row * grid.n_cols;
        let row_vals = &grid.values[start..start + grid.n_cols];
        for (i, v) in row_vals.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}
