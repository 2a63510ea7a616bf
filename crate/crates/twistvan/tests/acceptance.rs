//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;
use twistvan::batch::{run_family, with_threads};
use twistvan::config::load_curve;
use twistvan::records::{write_records, RecordHeader};
use twistvan::suite::ratio_rows;
use twistvan_core::arith::primes_up_to;
use twistvan_core::conjecture::{beta_expansion, r_predicted, PredictionOptions, PrimeSum};
use twistvan_core::curve::PrimeTable;
use twistvan_core::family::{enumerate_family, FamilySelector, Sign};
use twistvan_core::kronecker::{is_fundamental, kronecker_signed};
use twistvan_core::lvalue::{TwistRecord, VanishingPolicy};
use twistvan_core::moments::{arithmetic_factor, empirical_moment, g_k, g_k_f64, m_o, upsilon_poly};
use twistvan_core::report::{class_counts, residual_summary};
use twistvan_core::CurveSpec;

const EPSILON: f64 = 1e-9;
const GAP_MIN: f64 = 1e3;
const DESK_X: u64 = 100_000;
const TABLE_X: f64 = 1e8;

type Check = Result<String, String>;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn curve(label: &str) -> CurveSpec {
    load_curve(&data(&format!("{label}.cfg"))).expect("curve config")
}

struct TableRow {
    q: u64,
    aq: i64,
    /// resid1, resid2 for the minus then the plus family, as printed.
    cols: [String; 4],
}

fn table(label: &str) -> Vec<TableRow> {
    let mut r = csv::Reader::from_path(data(&format!("table_{label}.csv"))).expect("table");
    r.records()
        .map(|row| {
            let row = row.unwrap();
            TableRow {
                q: row[0].parse().unwrap(),
                aq: row[1].parse().unwrap(),
                cols: [2, 3, 4, 5].map(|i| row[i].to_string()),
            }
        })
        .collect()
}

fn policy() -> VanishingPolicy {
    VanishingPolicy::new(EPSILON, GAP_MIN).unwrap()
}

/// min nonzero / max(max zero, ε) over a classified batch.
fn gap_ratio(records: &[TwistRecord]) -> f64 {
    let zero = records
        .iter()
        .filter(|r| r.vanished)
        .map(|r| r.value.abs())
        .fold(0.0, f64::max);
    let nonzero = records
        .iter()
        .filter(|r| !r.vanished)
        .map(|r| r.value.abs())
        .fold(f64::INFINITY, f64::min);
    nonzero / zero.max(EPSILON)
}

fn ap_exactness() -> Check {
    let mut n = 0;
    for label in ["11a", "307a"] {
        let e = curve(label);
        for row in table(label) {
            let a = e.ap(row.q).map_err(|err| err.to_string())?;
            if a != row.aq {
                return Err(format!("{label}: a_{} = {a}, table has {}", row.q, row.aq));
            }
            n += 1;
        }
    }
    Ok(format!("{n} values exact"))
}

fn table_difference() -> Check {
    let opts = PredictionOptions::default();
    let mut worst = (0.0f64, String::new());
    let mut n = 0;
    for label in ["11a", "307a"] {
        let e = curve(label);
        let primes = PrimeTable::new(&e, opts.cutoff).map_err(|err| err.to_string())?;
        for row in table(label) {
            for (sign, c) in [(Sign::Minus, 0), (Sign::Plus, 2)] {
                let p = r_predicted(&e, &primes, sign, row.q, &opts).map_err(|err| err.to_string())?;
                let printed = row.cols[c].parse::<f64>().unwrap() - row.cols[c + 1].parse::<f64>().unwrap();
                let ours = p.r_second(TABLE_X) - p.r_main;
                let err = (ours - printed).abs();
                if err > worst.0 {
                    worst = (err, format!("{label} q={} {}", row.q, sign.as_str()));
                }
                n += 1;
            }
        }
    }
    let detail = format!("{n} row/case pairs, max |error| {:.2e} at {}", worst.0, worst.1);
    if worst.0 < 2e-4 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn zero_aq_degeneracy() -> Check {
    let opts = PredictionOptions::default();
    let mut n = 0;
    for label in ["11a", "307a"] {
        let e = curve(label);
        let primes = PrimeTable::new(&e, opts.cutoff).map_err(|err| err.to_string())?;
        for row in table(label).into_iter().filter(|r| r.aq == 0) {
            if row.cols[0] != row.cols[1] || row.cols[2] != row.cols[3] {
                return Err(format!("{label} q={}: printed residuals differ", row.q));
            }
            for sign in [Sign::Minus, Sign::Plus] {
                let p = r_predicted(&e, &primes, sign, row.q, &opts).map_err(|err| err.to_string())?;
                if p.r_main != 1.0 || p.r_second(TABLE_X) != 1.0 {
                    return Err(format!("{label} q={}: prediction {}", row.q, p.r_second(TABLE_X)));
                }
            }
            n += 1;
        }
    }
    Ok(format!("{n} rows, prediction exactly 1 in both families"))
}

fn residue_oracle() -> Check {
    const CUTOFF: u64 = 3000;
    let mut worst = 0.0f64;
    for (label, q) in [("11a", 3u64), ("307a", 5)] {
        let e = curve(label);
        let primes = PrimeTable::new(&e, CUTOFF).unwrap();
        for sign in [Sign::Minus, Sign::Plus] {
            for progression in [None, Some((q, 1)), Some((q, -1))] {
                for k in [2usize, 3] {
                    let poly = upsilon_poly(&e, k, sign, progression, CUTOFF).map_err(|err| err.to_string())?;
                    let b = beta_expansion(&e, &primes, sign, progression, k as f64, CUTOFF, PrimeSum::Raw)
                        .map_err(|err| err.to_string())?;
                    let m = k * (k - 1) / 2;
                    let lead = b.alpha.exp() * g_k_f64(k as u32);
                    let next = lead * m as f64 * b.beta;
                    let c = &poly.coefficients;
                    worst = worst.max(((c[m] - lead) / lead).abs()).max(((c[m - 1] - next) / next).abs());
                }
            }
        }
    }
    let detail = format!("24 cases, max relative error {worst:.2e}");
    if worst < 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn closed_form_constants() -> Check {
    if [g_k(1), g_k(2), g_k(3)] != [(2, 1), (4, 1), (8, 3)] {
        return Err(format!("g_k = {:?}", [g_k(1), g_k(2), g_k(3)]));
    }
    for n in 1..=5 {
        let v = m_o(n, 0.0).unwrap();
        if (v - 1.0).abs() > 1e-12 {
            return Err(format!("M_O({n},0) = {v}"));
        }
    }
    let v = m_o(1, 1.0).unwrap();
    if (v - 2.0).abs() > 1e-12 {
        return Err(format!("M_O(1,1) = {v}"));
    }
    for label in ["11a", "307a"] {
        for sign in [Sign::Minus, Sign::Plus] {
            let a = arithmetic_factor(&curve(label), 0.0, sign, 10_000).unwrap().value;
            if (a - 1.0).abs() > 1e-12 {
                return Err(format!("A(0) = {a} for {label} {}", sign.as_str()));
            }
        }
    }
    Ok("g_1..g_3 = 2, 4, 8/3; M_O(N<=5, 0) = 1; M_O(1,1) = 2; A(0) = 1".into())
}

fn first_moment(records: &[TwistRecord]) -> Check {
    let e = curve("11a");
    let sel = FamilySelector::new(Sign::Minus, DESK_X);
    let empirical = empirical_moment(records, &sel, 1).map_err(|err| err.to_string())?;
    let poly = upsilon_poly(&e, 1, Sign::Minus, None, 100_000).map_err(|err| err.to_string())?;
    let integral = poly.average(DESK_X as f64);
    let rel = (empirical - integral).abs() / integral;
    let detail = format!("empirical {empirical:.6}, integral {integral:.6}, relative difference {:.3}%", 100.0 * rel);
    if rel < 0.03 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn variance_reduction(families: &[(&str, &[TwistRecord])]) -> Check {
    let opts = PredictionOptions::default();
    let mut reports = Vec::new();
    for (label, records) in families {
        let e = curve(label);
        let primes = PrimeTable::new(&e, opts.cutoff).unwrap();
        reports.extend(
            ratio_rows(&e, &primes, records, Sign::Minus, DESK_X, 499, &opts).map_err(|err| err.to_string())?,
        );
    }
    let (r1, r2) = residual_summary(&reports, true);
    let detail = format!(
        "{} rows over {} curves: var(resid1) {:.6}, var(resid2) {:.6}",
        r1.n,
        families.len(),
        r1.variance,
        r2.variance
    );
    if r2.variance < r1.variance {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// χ_d(p) from Euler's criterion and the 2-adic rule.
fn legendre_oracle(d: i64, p: u64) -> i8 {
    if p == 2 {
        return match d.rem_euclid(8) {
            1 | 7 => 1,
            3 | 5 => -1,
            _ => 0,
        };
    }
    let a = d.rem_euclid(p as i64) as u128;
    if a == 0 {
        return 0;
    }
    let (mut base, mut e, mut acc, m) = (a, (p - 1) / 2, 1u128, p as u128);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        e >>= 1;
    }
    if acc == 1 {
        1
    } else {
        -1
    }
}

fn kronecker_oracle(d: i64, mut n: u64) -> i8 {
    let mut v = 1i8;
    let mut p = 2;
    while p * p <= n {
        while n.is_multiple_of(p) {
            v *= legendre_oracle(d, p);
            n /= p;
        }
        p += 1;
    }
    if n > 1 {
        v *= legendre_oracle(d, n);
    }
    v
}

fn kronecker_equivalence() -> Check {
    let mut n_checked = 0;
    for d in -500i64..=500 {
        if !is_fundamental(d) {
            continue;
        }
        for n in 1..=500u64 {
            if kronecker_signed(d, n as i64) != kronecker_oracle(d, n) {
                return Err(format!("({d}/{n})"));
            }
            n_checked += 1;
        }
    }
    Ok(format!("{n_checked} pairs"))
}

/// Naive evaluator: a_n from a_p by trial division, χ from Euler's
/// criterion, the smoothed series summed from the far end, one d at a time.
struct Naive {
    sqrt_q: f64,
    an: Vec<i64>,
    primes: Vec<u64>,
}

impl Naive {
    fn new(e: &CurveSpec, max_abs_d: u64) -> Self {
        let sqrt_q = (e.conductor as f64).sqrt();
        let t = 2.0 * std::f64::consts::PI / (sqrt_q * max_abs_d as f64);
        let m = (40.0 / t) as usize;
        let primes = primes_up_to(m as u64);
        let ap: BTreeMap<u64, i64> = primes.iter().map(|&p| (p, e.ap(p).unwrap())).collect();
        let mut an = vec![0i64; m + 1];
        an[1] = 1;
        for n in 2..=m {
            let mut rest = n as u64;
            let mut value = 1i64;
            let mut p = 2;
            while rest > 1 {
                if p * p > rest {
                    p = rest;
                }
                if rest.is_multiple_of(p) {
                    let mut k = 0;
                    while rest.is_multiple_of(p) {
                        rest /= p;
                        k += 1;
                    }
                    let a = ap[&p];
                    let (mut prev, mut cur) = (1i64, a);
                    for _ in 1..k {
                        let next = if e.is_bad(p) { a * cur } else { a * cur - p as i64 * prev };
                        prev = cur;
                        cur = next;
                    }
                    value *= cur;
                }
                p += 1;
            }
            an[n] = value;
        }
        Naive { sqrt_q, an, primes }
    }

    fn value(&self, d: i64) -> f64 {
        let t = 2.0 * std::f64::consts::PI / (self.sqrt_q * d.unsigned_abs() as f64);
        let m = ((40.0 / t) as usize).min(self.an.len() - 1);
        let chi_p: BTreeMap<u64, i8> = self
            .primes
            .iter()
            .take_while(|&&p| p as usize <= m)
            .map(|&p| (p, legendre_oracle(d, p)))
            .collect();
        let chi = |mut n: u64| {
            let mut v = 1i8;
            for (&p, &c) in &chi_p {
                if p * p > n {
                    break;
                }
                while n.is_multiple_of(p) {
                    v *= c;
                    n /= p;
                }
            }
            if n > 1 {
                v *= chi_p[&n];
            }
            v
        };
        let mut s = 0.0;
        for n in (1..=m).rev() {
            if self.an[n] != 0 {
                s += self.an[n] as f64 * chi(n as u64) as f64 / n as f64 * (-t * n as f64).exp();
            }
        }
        2.0 * s
    }
}

fn naive_family(e: &CurveSpec, sign: Sign, x: u64) -> Vec<i64> {
    let bad = e.bad_primes();
    let mut out = Vec::new();
    for m in 1..=x as i64 {
        let d = if sign == Sign::Minus { -m } else { m };
        let fundamental = match d.rem_euclid(4) {
            1 => squarefree(m as u64),
            0 => matches!((d / 4).rem_euclid(4), 2 | 3) && squarefree(m as u64 / 4),
            _ => false,
        };
        if !fundamental || d == 1 {
            continue;
        }
        let ok = match sign {
            Sign::Minus => bad.iter().all(|&(p, a)| legendre_oracle(d, p) == -a),
            Sign::Plus => legendre_oracle(d, bad[0].0) == bad[0].1,
        };
        if ok {
            out.push(d);
        }
    }
    out
}

fn squarefree(n: u64) -> bool {
    (2..).take_while(|p| p * p <= n).all(|p| !n.is_multiple_of(p * p))
}

fn lvalue_self_consistency(batches: &[(&str, &[TwistRecord])]) -> Check {
    let mut worst = 0.0f64;
    for label in ["11a", "307a"] {
        let e = curve(label);
        for sign in [Sign::Minus, Sign::Plus] {
            let sel = FamilySelector::new(sign, 400);
            let ds: Vec<i64> = enumerate_family(&e, &sel).map_err(|err| err.to_string())?;
            if ds.len() < 10 {
                return Err(format!("{label} {}: only {} discriminants below 400", sign.as_str(), ds.len()));
            }
            let records = run_family(&e, &sel, &policy(), None).map_err(|err| err.to_string())?;
            let naive = Naive::new(&e, ds[9].unsigned_abs());
            for r in records.iter().take(10) {
                worst = worst.max((r.value - naive.value(r.d)).abs());
            }
        }
    }
    if worst >= 1e-9 {
        return Err(format!("oracle disagreement {worst:.2e}"));
    }
    let min_gap = batches.iter().map(|(_, r)| gap_ratio(r)).fold(f64::INFINITY, f64::min);
    if min_gap < GAP_MIN {
        return Err(format!("gap ratio {min_gap:.3e}"));
    }
    let e = curve("11a");
    let dir = std::env::temp_dir().join(format!("twistvan-acceptance-{}", std::process::id()));
    let header = RecordHeader {
        curve_hash: e.fingerprint(),
        x: 5000,
        epsilon: EPSILON,
    };
    let mut files = Vec::new();
    for threads in [1, 2] {
        let sel = FamilySelector::new(Sign::Minus, 5000);
        let recs = with_threads(Some(threads), || run_family(&e, &sel, &policy(), None)).map_err(|err| err.to_string())?;
        let path = dir.join(format!("run{threads}.twv"));
        write_records(&path, &header, &recs).map_err(|err| err.to_string())?;
        files.push(std::fs::read(&path).map_err(|err| err.to_string())?);
    }
    let _ = std::fs::remove_dir_all(&dir);
    if files[0] != files[1] {
        return Err("reruns differ".into());
    }
    Ok(format!(
        "40 oracle values within {worst:.1e}; min gap ratio {min_gap:.3e} over {} batches; reruns byte-identical",
        batches.len()
    ))
}

fn small_instance_oracle() -> Check {
    const X: u64 = 2000;
    let mut summary = Vec::new();
    for label in ["11a", "307a"] {
        let e = curve(label);
        for sign in [Sign::Minus, Sign::Plus] {
            let records =
                run_family(&e, &FamilySelector::new(sign, X), &policy(), None).map_err(|err| err.to_string())?;
            let ds = naive_family(&e, sign, X);
            let got: Vec<i64> = records.iter().map(|r| r.d).collect();
            if got != ds {
                return Err(format!("{label} {}: family differs", sign.as_str()));
            }
            let naive = Naive::new(&e, X);
            let threshold = EPSILON.sqrt();
            let flags: Vec<bool> = ds.iter().map(|&d| naive.value(d).abs() < threshold).collect();
            for (r, &f) in records.iter().zip(&flags) {
                if r.vanished != f {
                    return Err(format!("{label} d={}: flag {} vs naive {f}", r.d, r.vanished));
                }
            }
            for q in primes_up_to(100).into_iter().filter(|&q| !e.is_bad(q)) {
                let c = class_counts(&records, q);
                let (mut vp, mut vm) = (0, 0);
                for (&d, &f) in ds.iter().zip(&flags) {
                    match legendre_oracle(d, q) {
                        1 => vp += f as u64,
                        -1 => vm += f as u64,
                        _ => {}
                    }
                }
                if (c.vanished_plus, c.vanished_minus) != (vp, vm) {
                    return Err(format!("{label} q={q}: counts differ"));
                }
            }
            summary.push(format!(
                "{label}{}: {}/{}",
                if sign == Sign::Minus { "-" } else { "+" },
                flags.iter().filter(|&&f| f).count(),
                ds.len()
            ));
        }
    }
    Ok(format!("vanishing/total {}", summary.join(", ")))
}

fn main() {
    let mut results: Vec<(String, Check, f64)> = Vec::new();
    let mut run = |name: &str, f: &mut dyn FnMut() -> Check| {
        let t = Instant::now();
        let r = f();
        let secs = t.elapsed().as_secs_f64();
        let (tag, detail) = match &r {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("{tag} {name}: {detail} [{secs:.1}s]");
        results.push((name.to_string(), r, secs));
    };

    run("a_p exactness", &mut ap_exactness);
    run("table-difference reproduction", &mut table_difference);
    run("a_q = 0 degeneracy", &mut zero_aq_degeneracy);
    run("residue-engine oracle", &mut residue_oracle);
    run("closed-form constants", &mut closed_form_constants);
    run("kronecker oracle", &mut kronecker_equivalence);
    run("small-instance end-to-end oracle", &mut small_instance_oracle);

    let t = Instant::now();
    let e11 = curve("11a");
    let e307 = curve("307a");
    let desk = |e: &CurveSpec| run_family(e, &FamilySelector::new(Sign::Minus, DESK_X), &policy(), None);
    let desk11 = desk(&e11);
    let desk307 = desk(&e307);
    println!("(desk-scale families at X={DESK_X} computed in {:.1}s)", t.elapsed().as_secs_f64());
    match (&desk11, &desk307) {
        (Ok(r11), Ok(r307)) => {
            run("first-moment consistency", &mut || first_moment(r11));
            run("variance reduction", &mut || variance_reduction(&[("11a", r11), ("307a", r307)]));
            run("L-value engine self-consistency", &mut || {
                lvalue_self_consistency(&[("11a", r11), ("307a", r307)])
            });
        }
        _ => {
            let err = desk11.err().or(desk307.err()).unwrap().to_string();
            for name in ["first-moment consistency", "variance reduction", "L-value engine self-consistency"] {
                run(name, &mut || Err(format!("desk-scale run failed: {err}")));
            }
        }
    }

    let failed = results.iter().filter(|r| r.1.is_err()).count();
    println!("{} criteria, {failed} failed", results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
