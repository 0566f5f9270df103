//! Relative-error computation, error buckets, and the aggregate report.

use crate::numfmt::format_significant;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Relative-error bucket, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bucket {
    /// |e| <= 0.20
    Within20,
    /// 0.20 < e <= 1.00
    Plus20To100,
    /// -1.00 <= e < -0.20
    Minus20To100,
    /// e > 1.00
    Over100,
    /// No cells selected, or ground truth <= 0.
    NonApplicable,
}

impl Bucket {
    pub const ALL: [Bucket; 5] = [
        Bucket::Within20,
        Bucket::Plus20To100,
        Bucket::Minus20To100,
        Bucket::Over100,
        Bucket::NonApplicable,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Bucket::Within20 => "WITHIN_20",
            Bucket::Plus20To100 => "PLUS_20_100",
            Bucket::Minus20To100 => "MINUS_20_100",
            Bucket::Over100 => "OVER_100",
            Bucket::NonApplicable => "NON_APPLICABLE",
        }
    }

    pub fn from_label(label: &str) -> Option<Bucket> {
        Bucket::ALL.into_iter().find(|b| b.label() == label)
    }
}

/// One polygon's estimate versus its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRecord {
    pub feature_id: String,
    pub name: String,
    pub gt_pop: f64,
    /// `None` when the extraction selected no cells.
    pub estimate: Option<f64>,
    /// `None` exactly when the bucket is `NonApplicable`.
    pub rel_error: Option<f64>,
    pub bucket: Bucket,
    pub cells_touched: usize,
    pub cells_counted: usize,
    pub nodata_cells: usize,
}

impl EstimateRecord {
    /// Classify an estimate against its ground truth, deriving `rel_error`
    /// and `bucket` consistently.
    pub fn new(
        feature_id: String,
        name: String,
        gt_pop: f64,
        estimate: Option<f64>,
        cells_touched: usize,
        cells_counted: usize,
        nodata_cells: usize,
    ) -> Self {
        let bucket = classify(estimate, gt_pop);
        let rel_error = match (bucket, estimate) {
            (Bucket::NonApplicable, _) => None,
            (_, Some(est)) => relative_error(est, gt_pop),
            (_, None) => None,
        };
        Self {
            feature_id,
            name,
            gt_pop,
            estimate,
            rel_error,
            bucket,
            cells_touched,
            cells_counted,
            nodata_cells,
        }
    }
}

/// `(estimate - gt) / gt`; undefined for non-positive ground truth.
pub fn relative_error(estimate: f64, gt: f64) -> Option<f64> {
    (gt > 0.0).then(|| (estimate - gt) / gt)
}

/// Assign the relative-error bucket. Boundaries are closed at |e| = 0.20 inside
/// `Within20` and closed at |e| = 1.00 inside the 20-to-100 buckets; with a
/// non-negative estimate, e >= -1 always holds, so only the positive side
/// has an open tail.
pub fn classify(estimate: Option<f64>, gt: f64) -> Bucket {
    let est = match estimate {
        Some(e) => e,
        None => return Bucket::NonApplicable,
    };
    let e = match relative_error(est, gt) {
        Some(e) => e,
        None => return Bucket::NonApplicable,
    };
    if e.abs() <= 0.20 {
        Bucket::Within20
    } else if e > 0.20 && e <= 1.00 {
        Bucket::Plus20To100
    } else if e > 1.00 {
        Bucket::Over100
    } else {
        Bucket::Minus20To100
    }
}

/// Aggregate totals plus bucket counts and whole-percent shares.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub bucket_counts: BTreeMap<Bucket, usize>,
    pub bucket_percent: BTreeMap<Bucket, u32>,
    pub total_estimate: f64,
    pub total_gt: f64,
    /// `None` when `total_gt` is not positive (including the empty report).
    pub aggregate_rel_error: Option<f64>,
    pub n_records: usize,
}

impl ErrorReport {
    pub fn count(&self, bucket: Bucket) -> usize {
        self.bucket_counts.get(&bucket).copied().unwrap_or(0)
    }

    pub fn percent(&self, bucket: Bucket) -> u32 {
        self.bucket_percent.get(&bucket).copied().unwrap_or(0)
    }

    /// Fixed-layout text report: one `<label> <count> <percent>%` line per
    /// bucket in table order, then the aggregate totals line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for bucket in Bucket::ALL {
            writeln!(
                out,
                "{} {} {}%",
                bucket.label(),
                self.count(bucket),
                self.percent(bucket)
            )
            .unwrap();
        }
        let agg = self
            .aggregate_rel_error
            .map(|e| format_significant(e, 6))
            .unwrap_or_else(|| "NA".to_string());
        writeln!(
            out,
            "TOTAL est={} gt={} rel_error={}",
            format_significant(self.total_estimate, 6),
            format_significant(self.total_gt, 6),
            agg
        )
        .unwrap();
        out
    }
}

/// Build the aggregate report: bucket counts with round-half-up whole-percent
/// shares, totals over present estimates and all ground truths (absent
/// estimates contribute 0, non-applicable ground truths still count), and the
/// aggregate relative error.
pub fn build_report(records: &[EstimateRecord]) -> ErrorReport {
    let mut bucket_counts: BTreeMap<Bucket, usize> =
        Bucket::ALL.into_iter().map(|b| (b, 0)).collect();
    let mut total_estimate = 0.0;
    let mut total_gt = 0.0;
    for r in records {
        *bucket_counts.get_mut(&r.bucket).unwrap() += 1;
        total_estimate += r.estimate.unwrap_or(0.0);
        total_gt += r.gt_pop;
    }
    let n_records = records.len();
    let bucket_percent = bucket_counts
        .iter()
        .map(|(&b, &count)| {
            let pct = if n_records == 0 {
                0
            } else {
                // round half up
                (100.0 * count as f64 / n_records as f64).round() as u32
            };
            (b, pct)
        })
        .collect();
    ErrorReport {
        bucket_counts,
        bucket_percent,
        total_estimate,
        total_gt,
        aggregate_rel_error: relative_error(total_estimate, total_gt),
        n_records,
    }
}

/// Render a relative error as a signed percentage with one decimal, rounding
/// half away from zero: `-0.0585016 -> "-5.9%"`.
pub fn format_percent(rel_error: f64) -> String {
    format!("{:.1}%", (rel_error * 1000.0).round() / 10.0)
}
