use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use twistvan::batch::{prime_table, run_family, with_threads};
use twistvan::config::{load_curve, load_manifest};
use twistvan::error::{AppError, AppResult};
use twistvan::records::{export_csv, read_records, write_records, RecordHeader};
use twistvan::suite::{residual_suite, write_ratio_csv, write_suite, Provenance};
use twistvan_core::conjecture::{
    beta_expansion, r_predicted, ConductorWeight, PredictionOptions, PrimeSum, DEFAULT_PRIME_CUTOFF,
};
use twistvan_core::family::{enumerate_family, FamilySelector, Sign};
use twistvan_core::kronecker::kronecker_signed;
use twistvan_core::lvalue::{VanishingPolicy, DEFAULT_EPSILON, DEFAULT_GAP_MIN};
use twistvan_core::moments::{empirical_moment, g_k_f64, upsilon_poly, MAX_RESIDUE_K};
use twistvan_core::report::{histogram, BIN_WIDTH};

#[derive(Parser)]
#[command(name = "twistvan", version, about = "Vanishing of central values in quadratic twist families")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Minus,
    Plus,
}

impl From<SignArg> for Sign {
    fn from(s: SignArg) -> Sign {
        match s {
            SignArg::Minus => Sign::Minus,
            SignArg::Plus => Sign::Plus,
        }
    }
}

#[derive(Args)]
struct FamilyArgs {
    /// Curve config file.
    #[arg(long)]
    curve: PathBuf,
    #[arg(long, value_enum)]
    sign: SignArg,
    /// Bound on |d|.
    #[arg(long = "X")]
    x: u64,
}

#[derive(Args)]
struct PredictArgs {
    /// Prime cutoff for the prime sums.
    #[arg(long = "P", default_value_t = DEFAULT_PRIME_CUTOFF)]
    cutoff: u64,
    /// Average the prime sums over log-spaced checkpoints instead of
    /// reading them at P.
    #[arg(long)]
    smoothed: bool,
    /// Weight the conductor term by 1 instead of 2/(k(k-1)).
    #[arg(long)]
    literal_conductor_weight: bool,
}

impl PredictArgs {
    fn options(&self) -> PredictionOptions {
        PredictionOptions {
            cutoff: self.cutoff,
            mode: if self.smoothed { PrimeSum::Smoothed } else { PrimeSum::Raw },
            conductor_weight: if self.literal_conductor_weight {
                ConductorWeight::Literal
            } else {
                ConductorWeight::Tabulated
            },
            ..PredictionOptions::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// List the fundamental discriminants of a family as CSV.
    Enumerate {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, requires = "lambda")]
        q: Option<u64>,
        #[arg(long, requires = "q", allow_hyphen_values = true)]
        lambda: Option<i8>,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute and classify central values, writing a record file.
    Lvalues {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = DEFAULT_GAP_MIN)]
        gap_min: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also export the records as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Directory for the a_p cache.
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Moment polynomial, its closed-form data and the empirical moment (JSON).
    Moments {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        k: usize,
        #[arg(long, requires = "lambda")]
        q: Option<u64>,
        #[arg(long, requires = "q", allow_hyphen_values = true)]
        lambda: Option<i8>,
        #[arg(long = "P", default_value_t = DEFAULT_PRIME_CUTOFF)]
        cutoff: u64,
        /// Record file for the empirical moment (computed at X when absent).
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// First- and second-order prediction for one q (JSON).
    Predict {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long, value_enum)]
        sign: SignArg,
        #[arg(long)]
        q: u64,
        #[arg(long = "X")]
        x: u64,
        #[command(flatten)]
        predict: PredictArgs,
    },
    /// Empirical ratios and residuals for all q up to a bound (CSV).
    Ratios {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long, value_enum)]
        sign: SignArg,
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value_t = 500)]
        q_max: u64,
        #[command(flatten)]
        predict: PredictArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Residual suite over the curves of a manifest.
    Report {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Histogram of one CSV column.
    Hist {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "resid1")]
        column: String,
        #[arg(long, default_value_t = BIN_WIDTH)]
        bin: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: &Option<PathBuf>) -> AppResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| AppError::io(p, e))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn selector(family: &FamilyArgs, progression: Option<(u64, i8)>) -> FamilySelector {
    let sel = FamilySelector::new(family.sign.into(), family.x);
    match progression {
        Some((q, l)) => sel.with_progression(q, l),
        None => sel,
    }
}

fn print_json<T: Serialize>(value: &T) -> AppResult<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(|e| AppError::io("<stdout>", e))
}

#[derive(Serialize)]
struct PredictionJson {
    q: u64,
    a_q: i64,
    #[serde(rename = "R_main")]
    r_main: f64,
    beta_plus: f64,
    beta_minus: f64,
    #[serde(rename = "R_second")]
    r_second: f64,
    #[serde(rename = "P")]
    cutoff: u64,
    stability: f64,
}

#[derive(Serialize)]
struct MomentsJson {
    k: usize,
    coefficients: Vec<f64>,
    leading_closed_form: f64,
    beta: f64,
    empirical: f64,
    integral: f64,
    #[serde(rename = "P")]
    cutoff: u64,
    stability: f64,
}

fn run(cli: Cli) -> AppResult<()> {
    match cli.command {
        Command::Enumerate { family, q, lambda, out } => {
            let curve = load_curve(&family.curve)?;
            let progression = q.zip(lambda);
            let ds = enumerate_family(&curve, &selector(&family, progression))?;
            let mut w = csv::Writer::from_writer(output(&out)?);
            match progression {
                Some((q, _)) => {
                    w.write_record(["d", "chi_q"])?;
                    for d in ds {
                        w.write_record([d.to_string(), kronecker_signed(d, q as i64).to_string()])?;
                    }
                }
                None => {
                    w.write_record(["d"])?;
                    for d in ds {
                        w.write_record([d.to_string()])?;
                    }
                }
            }
            w.flush().map_err(|e| AppError::io("<csv>", e))?;
        }
        Command::Lvalues {
            family,
            epsilon,
            gap_min,
            out,
            csv,
            cache,
            threads,
        } => {
            let curve = load_curve(&family.curve)?;
            let policy = VanishingPolicy::new(epsilon, gap_min)?;
            let sel = selector(&family, None);
            let records = with_threads(threads, || run_family(&curve, &sel, &policy, cache.as_deref()))?;
            let header = RecordHeader {
                curve_hash: curve.fingerprint(),
                x: family.x,
                epsilon,
            };
            write_records(&out, &header, &records)?;
            if let Some(path) = csv {
                export_csv(&records, output(&Some(path))?)?;
            }
            let vanished = records.iter().filter(|r| r.vanished).count();
            eprintln!("{}: {} twists, {vanished} vanishing", curve.label, records.len());
        }
        Command::Moments {
            family,
            k,
            q,
            lambda,
            cutoff,
            records,
            cache,
        } => {
            let curve = load_curve(&family.curve)?;
            let progression = q.zip(lambda);
            let sign: Sign = family.sign.into();
            if !(1..=MAX_RESIDUE_K).contains(&k) {
                return Err(twistvan_core::Error::Config(format!("k must be in 1..={MAX_RESIDUE_K}, got {k}")).into());
            }
            let poly = upsilon_poly(&curve, k, sign, progression, cutoff)?;
            let primes = prime_table(&curve, cutoff, cache.as_deref())?;
            let b = beta_expansion(&curve, &primes, sign, progression, k as f64, cutoff, PrimeSum::Raw)?;
            let sel = selector(&family, progression);
            let recs = match records {
                Some(path) => read_records(&path)?.1,
                None => {
                    let policy = VanishingPolicy::new(DEFAULT_EPSILON, DEFAULT_GAP_MIN)?;
                    run_family(&curve, &selector(&family, None), &policy, cache.as_deref())?
                }
            };
            print_json(&MomentsJson {
                k,
                leading_closed_form: b.alpha.exp() * g_k_f64(k as u32),
                beta: b.beta,
                empirical: empirical_moment(&recs, &sel, k as u32)?,
                integral: poly.average(family.x as f64),
                coefficients: poly.coefficients,
                cutoff,
                stability: f64::max(poly.stability_delta, b.stability_delta),
            })?;
        }
        Command::Predict {
            curve,
            sign,
            q,
            x,
            predict,
        } => {
            let curve = load_curve(&curve)?;
            let opts = predict.options();
            let primes = prime_table(&curve, opts.cutoff, None)?;
            let p = r_predicted(&curve, &primes, sign.into(), q, &opts)?;
            print_json(&PredictionJson {
                q,
                a_q: p.aq,
                r_main: p.r_main,
                beta_plus: p.beta_plus,
                beta_minus: p.beta_minus,
                r_second: p.r_second(x as f64),
                cutoff: p.cutoff,
                stability: p.stability_delta,
            })?;
        }
        Command::Ratios {
            curve,
            sign,
            records,
            q_max,
            predict,
            out,
        } => {
            let curve = load_curve(&curve)?;
            let (header, recs) = read_records(&records)?;
            if header.curve_hash != curve.fingerprint() {
                return Err(AppError::Format {
                    path: records,
                    message: format!("records were computed for a different curve than {}", curve.label),
                });
            }
            let opts = predict.options();
            let primes = prime_table(&curve, opts.cutoff.max(q_max), None)?;
            let rows =
                twistvan::suite::ratio_rows(&curve, &primes, &recs, sign.into(), header.x, q_max, &opts)?;
            let prov = Provenance {
                x: header.x,
                epsilon: header.epsilon,
                cutoff: opts.cutoff,
            };
            write_ratio_csv(output(&out)?, &rows, &prov)?;
        }
        Command::Report { manifest, out_dir } => {
            let m = load_manifest(&manifest)?;
            let reports = residual_suite(&m)?;
            write_suite(&out_dir, &m, &reports)?;
        }
        Command::Hist { input, column, bin, out } => {
            let values = read_column(&input, &column)?;
            let h = histogram(&values, bin)?;
            let mut w = csv::Writer::from_writer(output(&out)?);
            w.write_record(["bin", "lower", "count"])?;
            for (&b, &c) in &h.bins {
                w.write_record([b.to_string(), h.lower_edge(b).to_string(), c.to_string()])?;
            }
            w.flush().map_err(|e| AppError::io("<csv>", e))?;
        }
    }
    Ok(())
}

/// Non-empty values of one column.
fn read_column(path: &Path, column: &str) -> AppResult<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let idx = r
        .headers()?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| AppError::Format {
            path: path.to_path_buf(),
            message: format!("no column {column}"),
        })?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let cell = row.get(idx).unwrap_or("");
        if cell.is_empty() {
            continue;
        }
        out.push(cell.parse().map_err(|e| AppError::Format {
            path: path.to_path_buf(),
            message: format!("{column}: {cell:?}: {e}"),
        })?);
    }
    Ok(out)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("twistvan: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
