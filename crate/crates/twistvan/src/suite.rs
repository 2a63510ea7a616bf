//! Ratio reports across primes q, the multi-curve residual suite and its
//! CSV exports.

use crate::batch::prime_table;
use crate::config::{load_curve, SuiteManifest};
use crate::error::{AppError, AppResult};
use crate::records::{read_records, records_path};
use std::io::Write;
use std::path::Path;
use twistvan_core::arith::primes_up_to;
use twistvan_core::conjecture::{r_predicted, PredictionOptions};
use twistvan_core::curve::PrimeTable;
use twistvan_core::family::Sign;
use twistvan_core::lvalue::TwistRecord;
use twistvan_core::report::{class_counts, group_by_aq, residual_summary, Moments2, RatioReport};
use twistvan_core::CurveSpec;

/// Identifies the code that produced a report.
pub const BUILD_ID: &str = env!("TWISTVAN_BUILD_ID");

/// Provenance columns carried by every report row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub x: u64,
    pub epsilon: f64,
    pub cutoff: u64,
}

/// One report per prime q <= q_max not dividing the conductor; rows whose
/// λ = -1 class has no vanishing keep their counts with a null ratio.
pub fn ratio_rows(
    curve: &CurveSpec,
    primes: &PrimeTable,
    records: &[TwistRecord],
    sign: Sign,
    x: u64,
    q_max: u64,
    opts: &PredictionOptions,
) -> AppResult<Vec<RatioReport>> {
    let mut out = Vec::new();
    for q in primes_up_to(q_max).into_iter().filter(|&q| !curve.is_bad(q)) {
        let prediction = r_predicted(curve, primes, sign, q, opts)?;
        let counts = class_counts(records, q);
        out.push(RatioReport::tally(&curve.label, sign, x, counts, &prediction));
    }
    Ok(out)
}

/// Reports for every curve and sign of a manifest, read from the record
/// files in its records directory.
pub fn residual_suite(manifest: &SuiteManifest) -> AppResult<Vec<RatioReport>> {
    let opts = PredictionOptions {
        cutoff: manifest.cutoff,
        ..PredictionOptions::default()
    };
    let mut out = Vec::new();
    for path in &manifest.curves {
        let curve = load_curve(path)?;
        let primes = prime_table(&curve, manifest.cutoff.max(manifest.q_max), manifest.cache_dir.as_deref())?;
        for &sign in &manifest.signs {
            let rpath = records_path(&manifest.records_dir, &curve.label, sign, manifest.x);
            if !rpath.exists() {
                return Err(AppError::MissingRecords {
                    label: curve.label.clone(),
                    path: rpath,
                });
            }
            let (header, records) = read_records(&rpath)?;
            check_header(&rpath, &curve, header.curve_hash, header.x, manifest.x)?;
            out.extend(ratio_rows(&curve, &primes, &records, sign, manifest.x, manifest.q_max, &opts)?);
        }
    }
    Ok(out)
}

fn check_header(path: &Path, curve: &CurveSpec, hash: u64, x: u64, want_x: u64) -> AppResult<()> {
    let bad = |message: String| AppError::Format {
        path: path.to_path_buf(),
        message,
    };
    if hash != curve.fingerprint() {
        return Err(bad(format!("records were computed for a different curve than {}", curve.label)));
    }
    if x != want_x {
        return Err(bad(format!("records are for X={x}, expected X={want_x}")));
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const RATIO_COLUMNS: [&str; 17] = [
    "curve",
    "q",
    "a_q",
    "resid1",
    "resid2",
    "sign",
    "R_empirical",
    "R_main",
    "R_second",
    "vanished_plus",
    "vanished_minus",
    "size_plus",
    "size_minus",
    "X",
    "epsilon",
    "P",
    "build",
];

pub fn write_ratio_csv<W: Write>(out: W, reports: &[RatioReport], prov: &Provenance) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RATIO_COLUMNS)?;
    for r in reports {
        w.write_record([
            r.label.clone(),
            r.q.to_string(),
            r.aq.to_string(),
            opt(r.resid1),
            opt(r.resid2),
            r.sign.as_str().to_string(),
            opt(r.r_empirical),
            r.r_main.to_string(),
            r.r_second.to_string(),
            r.counts.vanished_plus.to_string(),
            r.counts.vanished_minus.to_string(),
            r.counts.size_plus.to_string(),
            r.counts.size_minus.to_string(),
            prov.x.to_string(),
            prov.epsilon.to_string(),
            prov.cutoff.to_string(),
            BUILD_ID.to_string(),
        ])?;
    }
    w.flush().map_err(|e| AppError::io("<csv>", e))
}

/// Mean and variance of both residual columns, over all rows with a
/// defined ratio and over those with a_q != 0.
pub fn write_summary_csv<W: Write>(out: W, reports: &[RatioReport], prov: &Provenance) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["subset", "column", "n", "mean", "variance", "X", "epsilon", "P", "build"])?;
    for (subset, skip) in [("all", false), ("nonzero_a_q", true)] {
        let (r1, r2) = residual_summary(reports, skip);
        for (name, m) in [("resid1", r1), ("resid2", r2)] {
            let Moments2 { n, mean, variance } = m;
            w.write_record([
                subset.to_string(),
                name.to_string(),
                n.to_string(),
                mean.to_string(),
                variance.to_string(),
                prov.x.to_string(),
                prov.epsilon.to_string(),
                prov.cutoff.to_string(),
                BUILD_ID.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| AppError::io("<csv>", e))
}

/// Rows ordered by a_q, for slicing by a_q = n.
pub fn write_by_aq_csv<W: Write>(out: W, reports: &[RatioReport], prov: &Provenance) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["a_q", "curve", "sign", "q", "resid1", "resid2", "X", "epsilon", "P", "build"])?;
    for (aq, rows) in group_by_aq(reports) {
        for r in rows {
            w.write_record([
                aq.to_string(),
                r.label.clone(),
                r.sign.as_str().to_string(),
                r.q.to_string(),
                opt(r.resid1),
                opt(r.resid2),
                prov.x.to_string(),
                prov.epsilon.to_string(),
                prov.cutoff.to_string(),
                BUILD_ID.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| AppError::io("<csv>", e))
}

/// One curve in the layout q, a_q, resid1/resid2 for the minus family,
/// resid1/resid2 for the plus family; a missing family leaves its columns
/// empty.
pub fn write_table_csv<W: Write>(out: W, label: &str, reports: &[RatioReport], q_max: u64) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["q", "a_q", "resid1_minus", "resid2_minus", "resid1_plus", "resid2_plus"])?;
    let find = |q: u64, sign: Sign| reports.iter().find(|r| r.label == label && r.q == q && r.sign == sign);
    let mut qs: Vec<(u64, i64)> = reports
        .iter()
        .filter(|r| r.label == label && r.q <= q_max)
        .map(|r| (r.q, r.aq))
        .collect();
    qs.sort_unstable();
    qs.dedup();
    for (q, aq) in qs {
        let cols = |sign| find(q, sign).map_or((None, None), |r: &RatioReport| (r.resid1, r.resid2));
        let (m1, m2) = cols(Sign::Minus);
        let (p1, p2) = cols(Sign::Plus);
        w.write_record([q.to_string(), aq.to_string(), opt(m1), opt(m2), opt(p1), opt(p2)])?;
    }
    w.flush().map_err(|e| AppError::io("<csv>", e))
}

/// Writes residuals.csv, summary.csv, by_a_q.csv and one table_<label>.csv
/// per curve into `dir`.
pub fn write_suite(dir: &Path, manifest: &SuiteManifest, reports: &[RatioReport]) -> AppResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let prov = Provenance {
        x: manifest.x,
        epsilon: manifest.epsilon,
        cutoff: manifest.cutoff,
    };
    let create = |name: &str| {
        let p = dir.join(name);
        std::fs::File::create(&p).map_err(|e| AppError::io(p, e))
    };
    write_ratio_csv(create("residuals.csv")?, reports, &prov)?;
    write_summary_csv(create("summary.csv")?, reports, &prov)?;
    write_by_aq_csv(create("by_a_q.csv")?, reports, &prov)?;
    let mut labels: Vec<&str> = reports.iter().map(|r| r.label.as_str()).collect();
    labels.dedup();
    for label in labels {
        write_table_csv(create(&format!("table_{label}.csv"))?, label, reports, manifest.q_max)?;
    }
    Ok(())
}
