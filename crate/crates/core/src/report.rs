//! Empirical vanishing ratios, residuals against the predictions, and
//! histograms of residuals.

use crate::conjecture::Prediction;
use crate::error::{Error, Result};
use crate::family::Sign;
use crate::kronecker::kronecker_signed;
use crate::lvalue::TwistRecord;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

/// Residual histogram bin width.
pub const BIN_WIDTH: f64 = 0.0002;

/// Vanishing counts split by χ_d(q).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub vanished_plus: u64,
    pub vanished_minus: u64,
    pub size_plus: u64,
    pub size_minus: u64,
}

/// Tallies classified records into the χ_d(q) = +1 and -1 classes;
/// records with χ_d(q) = 0 belong to neither.
pub fn class_counts(records: &[TwistRecord], q: u64) -> ClassCounts {
    let mut c = ClassCounts::default();
    for r in records {
        match kronecker_signed(r.d, q as i64) {
            1 => {
                c.size_plus += 1;
                c.vanished_plus += r.vanished as u64;
            }
            -1 => {
                c.size_minus += 1;
                c.vanished_minus += r.vanished as u64;
            }
            _ => {}
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub label: String,
    pub sign: Sign,
    pub q: u64,
    pub aq: i64,
    pub x: u64,
    pub counts: ClassCounts,
    pub r_main: f64,
    pub r_second: f64,
    /// vanished(+1)/vanished(-1); None when the denominator is zero.
    pub r_empirical: Option<f64>,
    /// R_empirical - R_q.
    pub resid1: Option<f64>,
    /// R_empirical - R_q(X) (second-order prediction).
    pub resid2: Option<f64>,
}

impl RatioReport {
    /// The report with whatever ratio the counts allow (None for an empty
    /// denominator).
    pub fn tally(label: &str, sign: Sign, x: u64, counts: ClassCounts, prediction: &Prediction) -> Self {
        let r_second = prediction.r_second(x as f64);
        let r_empirical =
            (counts.vanished_minus > 0).then(|| counts.vanished_plus as f64 / counts.vanished_minus as f64);
        RatioReport {
            label: String::from(label),
            sign,
            q: prediction.q,
            aq: prediction.aq,
            x,
            counts,
            r_main: prediction.r_main,
            r_second,
            r_empirical,
            resid1: r_empirical.map(|r| r - prediction.r_main),
            resid2: r_empirical.map(|r| r - r_second),
        }
    }
}

/// Empirical R_q(X) for one q with both residuals; an empty λ = -1
/// vanishing class is an error carrying the counts.
pub fn ratio_report(
    label: &str,
    records: &[TwistRecord],
    sign: Sign,
    x: u64,
    prediction: &Prediction,
) -> Result<RatioReport> {
    let counts = class_counts(records, prediction.q);
    if counts.vanished_minus == 0 {
        return Err(Error::UndefinedRatio {
            plus: counts.vanished_plus,
            minus: counts.vanished_minus,
        });
    }
    Ok(RatioReport::tally(label, sign, x, counts, prediction))
}

/// Counts per bin index floor(v / width).
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    pub bins: BTreeMap<i64, u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.bins.values().sum()
    }

    /// Lower edge of a bin.
    pub fn lower_edge(&self, bin: i64) -> f64 {
        bin as f64 * self.bin_width
    }
}

pub fn histogram(values: &[f64], bin_width: f64) -> Result<Histogram> {
    if !(bin_width > 0.0) {
        return Err(Error::Config(alloc::format!("bin width must be positive, got {bin_width}")));
    }
    let mut bins = BTreeMap::new();
    for &v in values {
        if !v.is_finite() {
            return Err(Error::Domain(alloc::format!("non-finite value {v} in histogram input")));
        }
        *bins.entry(libm::floor(v / bin_width) as i64).or_insert(0) += 1;
    }
    Ok(Histogram { bin_width, bins })
}

/// Sample mean and (n-1)-normalized variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments2 {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
}

pub fn sample_moments(values: &[f64]) -> Moments2 {
    let n = values.len();
    if n == 0 {
        return Moments2 {
            n,
            mean: f64::NAN,
            variance: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let variance = if n > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        f64::NAN
    };
    Moments2 { n, mean, variance }
}

/// Mean and variance of both residual columns over reports with a defined
/// ratio, optionally skipping a_q = 0 rows (where the two coincide).
pub fn residual_summary(reports: &[RatioReport], skip_zero_aq: bool) -> (Moments2, Moments2) {
    let rows: Vec<&RatioReport> = reports
        .iter()
        .filter(|r| r.r_empirical.is_some() && !(skip_zero_aq && r.aq == 0))
        .collect();
    let r1: Vec<f64> = rows.iter().filter_map(|r| r.resid1).collect();
    let r2: Vec<f64> = rows.iter().filter_map(|r| r.resid2).collect();
    (sample_moments(&r1), sample_moments(&r2))
}

/// Reports grouped by a_q.
pub fn group_by_aq(reports: &[RatioReport]) -> BTreeMap<i64, Vec<&RatioReport>> {
    let mut out: BTreeMap<i64, Vec<&RatioReport>> = BTreeMap::new();
    for r in reports {
        out.entry(r.aq).or_default().push(r);
    }
    out
}
