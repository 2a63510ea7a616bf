//! File formats, cache behaviour and end-to-end determinism.

use std::fs;
use std::path::{Path, PathBuf};
use twistvan::batch::{run_family, with_threads};
use twistvan::cache::{self, CacheStatus};
use twistvan::config::{load_curve, load_manifest};
use twistvan::error::AppError;
use twistvan::records::{export_csv, read_records, records_path, write_records, RecordHeader};
use twistvan::suite::{ratio_rows, residual_suite, write_suite};
use twistvan_core::conjecture::PredictionOptions;
use twistvan_core::curve::PrimeTable;
use twistvan_core::family::{FamilySelector, Sign};
use twistvan_core::lvalue::VanishingPolicy;
use twistvan_core::CurveSpec;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn e11() -> CurveSpec {
    load_curve(&data("11a.cfg")).unwrap()
}

#[test]
fn cache_round_trip_and_rejection() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.apc");
    let e = e11();
    let (t, s) = cache::load_or_build(&path, &e, 5000).unwrap();
    assert_eq!(s, CacheStatus::Built);
    assert_eq!(t, PrimeTable::new(&e, 5000).unwrap());
    let (t2, s) = cache::load_or_build(&path, &e, 5000).unwrap();
    assert_eq!((t2, s), (t.clone(), CacheStatus::Loaded));
    let (small, s) = cache::load_or_build(&path, &e, 1000).unwrap();
    assert_eq!((small, s), (PrimeTable::new(&e, 1000).unwrap(), CacheStatus::Loaded));

    let other = load_curve(&data("307a.cfg")).unwrap();
    let (t3, s) = cache::load_or_build(&path, &other, 5000).unwrap();
    assert_eq!(s, CacheStatus::Rebuilt);
    assert_eq!(t3, PrimeTable::new(&other, 5000).unwrap());

    let mut bytes = fs::read(&path).unwrap();
    bytes[0] ^= 0xff;
    fs::write(&path, &bytes).unwrap();
    assert_eq!(cache::load_or_build(&path, &other, 5000).unwrap().1, CacheStatus::Rebuilt);
}

#[test]
fn cache_extension_keeps_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.apc");
    let e = e11();
    cache::load_or_build(&path, &e, 3000).unwrap();
    let before = fs::read(&path).unwrap();
    let (t, s) = cache::load_or_build(&path, &e, 20000).unwrap();
    assert_eq!(s, CacheStatus::Extended);
    assert_eq!(t, PrimeTable::new(&e, 20000).unwrap());
    let after = fs::read(&path).unwrap();
    assert_eq!(&after[8..before.len()], &before[8..]);
    assert_eq!(after, cache::encode(&e, &t).unwrap());
}

fn run(x: u64, sign: Sign, threads: usize) -> Vec<twistvan_core::lvalue::TwistRecord> {
    let e = e11();
    let policy = VanishingPolicy::new(1e-9, 1e3).unwrap();
    with_threads(Some(threads), || run_family(&e, &FamilySelector::new(sign, x), &policy, None)).unwrap()
}

#[test]
fn records_round_trip_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let recs = run(500, Sign::Minus, 1);
    let header = RecordHeader {
        curve_hash: e11().fingerprint(),
        x: 500,
        epsilon: 1e-9,
    };
    let path = dir.path().join("r.twv");
    write_records(&path, &header, &recs).unwrap();
    let (h, back) = read_records(&path).unwrap();
    assert_eq!(h, header);
    assert_eq!(back.len(), recs.len());
    for (a, b) in recs.iter().zip(&back) {
        assert_eq!((a.d, a.value.to_bits(), a.err.to_bits(), a.vanished), (b.d, b.value.to_bits(), b.err.to_bits(), b.vanished));
    }
    assert_eq!(fs::metadata(&path).unwrap().len(), 32 + 25 * recs.len() as u64);
    let mut csv = Vec::new();
    export_csv(&back, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("d,value,err,vanished\n"));
    assert_eq!(text.lines().count(), recs.len() + 1);

    let mut bytes = fs::read(&path).unwrap();
    bytes.pop();
    fs::write(&path, &bytes).unwrap();
    assert!(matches!(read_records(&path), Err(AppError::Format { .. })));
}

#[test]
fn worker_count_does_not_change_output() {
    let a = run(3000, Sign::Minus, 1);
    let b = run(3000, Sign::Minus, 3);
    let bits = |v: &[twistvan_core::lvalue::TwistRecord]| {
        v.iter().map(|r| (r.d, r.value.to_bits(), r.vanished)).collect::<Vec<_>>()
    };
    assert_eq!(bits(&a), bits(&b));
}

fn write_manifest(dir: &Path, x: u64) -> PathBuf {
    let text = format!(
        "curves = {}\nX = {x}\nq_max = 60\nsign = both\nP = 5000\nrecords_dir = rec\n",
        data("11a.cfg").display()
    );
    let path = dir.join("suite.cfg");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn missing_records_name_the_curve() {
    let dir = tempfile::tempdir().unwrap();
    let m = load_manifest(&write_manifest(dir.path(), 2000)).unwrap();
    match residual_suite(&m) {
        Err(e @ AppError::MissingRecords { .. }) => {
            assert!(e.to_string().contains("11a"));
            assert_eq!(e.exit_code(), 4);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn suite_is_deterministic_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let m = load_manifest(&write_manifest(dir.path(), 2000)).unwrap();
    let e = e11();
    for sign in [Sign::Minus, Sign::Plus] {
        let recs = run(2000, sign, 2);
        let header = RecordHeader {
            curve_hash: e.fingerprint(),
            x: 2000,
            epsilon: 1e-9,
        };
        write_records(&records_path(&m.records_dir, "11a", sign, 2000), &header, &recs).unwrap();
    }
    let reports = residual_suite(&m).unwrap();
    // 17 primes below 60, minus 11, for each sign
    assert_eq!(reports.len(), 32);
    for r in &reports {
        if let (Some(a), Some(b)) = (r.resid1, r.resid2) {
            assert!(((a - b) - (r.r_second - r.r_main)).abs() < 1e-12);
        }
    }
    let out1 = dir.path().join("out1");
    let out2 = dir.path().join("out2");
    write_suite(&out1, &m, &reports).unwrap();
    write_suite(&out2, &m, &residual_suite(&m).unwrap()).unwrap();
    for name in ["residuals.csv", "summary.csv", "by_a_q.csv", "table_11a.csv"] {
        let a = fs::read(out1.join(name)).unwrap();
        assert_eq!(a, fs::read(out2.join(name)).unwrap(), "{name}");
        assert!(!a.is_empty());
    }
    let table = fs::read_to_string(out1.join("table_11a.csv")).unwrap();
    assert!(table.starts_with("q,a_q,resid1_minus,resid2_minus,resid1_plus,resid2_plus\n2,-2,"));
}

#[test]
fn single_row_report() {
    let e = e11();
    let recs = run(2000, Sign::Minus, 1);
    let primes = PrimeTable::new(&e, 3000).unwrap();
    let opts = PredictionOptions {
        cutoff: 3000,
        ..PredictionOptions::default()
    };
    let rows = ratio_rows(&e, &primes, &recs, Sign::Minus, 2000, 2, &opts).unwrap();
    assert_eq!(rows.len(), 1);
    let r = &rows[0];
    assert_eq!((r.q, r.aq), (2, -2));
    assert_eq!(r.counts.size_plus + r.counts.size_minus, recs.iter().filter(|x| x.d % 2 != 0).count() as u64);
}
