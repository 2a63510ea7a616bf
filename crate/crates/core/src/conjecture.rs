//! Closed forms for the linear Maclaurin coefficient β of log h_k and the
//! two-term prediction of the vanishing ratio R_q(X).

use crate::arith::CompensatedSum;
use crate::constants::EULER_GAMMA;
use crate::curve::{CurveSpec, PrimeTable};
use crate::error::{Error, Result};
use crate::family::Sign;
use crate::moments::conductor_log;
use alloc::format;
use alloc::vec::Vec;

pub const DEFAULT_PRIME_CUTOFF: u64 = 100_000;
/// Checkpoints averaged by [`PrimeSum::Smoothed`].
pub const SMOOTHING_CHECKPOINTS: usize = 16;

/// -γ + log(√Q/2π): the linear coefficient of the Γ-ratio and conductor factor.
pub fn gamma_factor_linear(conductor: u64) -> f64 {
    -EULER_GAMMA + conductor_log(conductor)
}

/// (k-1)γ: the linear coefficient of ∏_{i<j} ζ(1+z_i+z_j)(z_i+z_j).
pub fn zeta_factor_linear(k: f64) -> f64 {
    (k - 1.0) * EULER_GAMMA
}

/// (k-1) log p/(p-1).
pub fn vandermonde_compensation_linear(p: u64, k: f64) -> f64 {
    (k - 1.0) * libm::log(p as f64) / (p as f64 - 1.0)
}

/// log p · ((2-a)f_1^{-k-1} + (2+a)f_2^{-k-1}) / (2 + p(f_1^{-k} + f_2^{-k})),
/// with f_1 = 1 - a/p + 1/p and f_2 = 1 + a/p + 1/p.
pub fn good_prime_linear(p: u64, ap: i64, k: f64) -> f64 {
    let (pf, a) = (p as f64, ap as f64);
    let f1 = 1.0 - a / pf + 1.0 / pf;
    let f2 = 1.0 + a / pf + 1.0 / pf;
    let num = (2.0 - a) * libm::pow(f1, -k - 1.0) + (2.0 + a) * libm::pow(f2, -k - 1.0);
    let den = 2.0 + pf * (libm::pow(f1, -k) + libm::pow(f2, -k));
    libm::log(pf) * num / den
}

/// log p/(1+p) in the minus family, log p/(1-p) in the plus family.
pub fn bad_prime_linear(p: u64, sign: Sign) -> f64 {
    let pf = p as f64;
    match sign {
        Sign::Minus => libm::log(pf) / (1.0 + pf),
        Sign::Plus => libm::log(pf) / (1.0 - pf),
    }
}

/// (k-1) log q/(q-1) + log q (λa_q - 2)/(λa_q - q - 1).
pub fn q_prime_linear(q: u64, aq: i64, lambda: i8, k: f64) -> f64 {
    let la = lambda as f64 * aq as f64;
    let den = la - q as f64 - 1.0;
    assert!(den != 0.0, "λ a_q = q + 1 is impossible under the Hasse bound");
    vandermonde_compensation_linear(q, k) + libm::log(q as f64) * (la - 2.0) / den
}

/// How the truncated prime sum is read off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimeSum {
    /// The partial sum over p <= P.
    Raw,
    /// The mean of the partial sums at 16 log-spaced cutoffs in [P/10, P].
    Smoothed,
}

/// Weight of the conductor term log(√Q/2π) in β.
///
/// `Literal` is the Maclaurin coefficient of log h_k (weight 1). `Tabulated`
/// weights it by 2/(k(k-1)), which is the weighting behind the reference
/// second-order residual tables; at k = -1/2 that adds (5/3)·log(√Q/2π).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConductorWeight {
    Literal,
    Tabulated,
}

/// The (α, β) Maclaurin data of log h_k, optionally for one (q, λ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaExpansion {
    pub k: f64,
    pub sign: Sign,
    /// The progression (q, λ) fixing χ_d(q), if any.
    pub progression: Option<(u64, i8)>,
    /// log h_k(0).
    pub alpha: f64,
    pub beta: f64,
    pub cutoff: u64,
    pub stability_delta: f64,
}

impl BetaExpansion {
    pub fn require_stable(self, tolerance: f64) -> Result<Self> {
        if self.stability_delta > tolerance {
            return Err(Error::Truncation {
                cutoff: self.cutoff,
                delta: self.stability_delta,
                tolerance,
            });
        }
        Ok(self)
    }
}

/// Per-prime linear coefficient in the family, with the p = q term fixed by λ.
pub fn prime_linear(p: u64, ap: i64, bad: bool, sign: Sign, q: u64, lambda: i8, k: f64) -> f64 {
    if p == q {
        q_prime_linear(q, ap, lambda, k)
    } else if bad {
        bad_prime_linear(p, sign) + vandermonde_compensation_linear(p, k)
    } else {
        good_prime_linear(p, ap, k) + vandermonde_compensation_linear(p, k)
    }
}

/// Per-prime contribution to α = log h_k(0).
fn prime_constant(p: u64, ap: i64, bad: bool, sign: Sign, q: u64, lambda: i8, k: f64) -> f64 {
    let (pf, a) = (p as f64, ap as f64);
    let pairs = k * (k - 1.0) / 2.0 * libm::log1p(-1.0 / pf);
    let local = if p == q {
        -k * libm::log(1.0 - lambda as f64 * a / pf + 1.0 / pf)
    } else if bad {
        match sign {
            Sign::Minus => -k * libm::log1p(1.0 / pf),
            Sign::Plus => -k * libm::log1p(-1.0 / pf),
        }
    } else {
        let l1 = 1.0 / (1.0 - a / pf + 1.0 / pf);
        let l2 = 1.0 / (1.0 + a / pf + 1.0 / pf);
        let avg = 0.5 * (libm::pow(l1, k) + libm::pow(l2, k));
        libm::log1p(pf * (avg - 1.0) / (pf + 1.0))
    };
    pairs + local
}

/// Cutoffs at which [`PrimeSum::Smoothed`] samples the partial sums.
pub fn smoothing_checkpoints(cutoff: u64) -> Vec<u64> {
    let n = SMOOTHING_CHECKPOINTS;
    (0..n)
        .map(|i| {
            let e = (i as f64 - (n - 1) as f64) / (n - 1) as f64;
            libm::round(cutoff as f64 * libm::pow(10.0, e)) as u64
        })
        .collect()
}

/// Partial sums Σ_{p <= c} term(p) at each cutoff c (ascending).
fn partial_sums(table: &PrimeTable, cutoffs: &[u64], term: impl Fn(u64, i64) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(cutoffs.len());
    let mut sum = CompensatedSum::new();
    let mut it = table.iter().peekable();
    for &c in cutoffs {
        while let Some(&(p, a)) = it.peek() {
            if p > c {
                break;
            }
            sum.add(term(p, a));
            it.next();
        }
        out.push(sum.value());
    }
    out
}

/// Reads a prime sum at `cutoff` (raw or smoothed) and at cutoff/2.
fn read_prime_sum(table: &PrimeTable, cutoff: u64, mode: PrimeSum, term: impl Fn(u64, i64) -> f64) -> (f64, f64) {
    match mode {
        PrimeSum::Raw => {
            let s = partial_sums(table, &[cutoff / 2, cutoff], term);
            (s[1], s[0])
        }
        PrimeSum::Smoothed => {
            let mut cuts = smoothing_checkpoints(cutoff / 2);
            cuts.extend(smoothing_checkpoints(cutoff));
            let mut order: Vec<usize> = (0..cuts.len()).collect();
            order.sort_by_key(|&i| cuts[i]);
            let sorted: Vec<u64> = order.iter().map(|&i| cuts[i]).collect();
            let sums = partial_sums(table, &sorted, term);
            let mut at = alloc::vec![0.0; cuts.len()];
            for (slot, &i) in order.iter().enumerate() {
                at[i] = sums[slot];
            }
            let n = SMOOTHING_CHECKPOINTS as f64;
            let half: f64 = at[..SMOOTHING_CHECKPOINTS].iter().sum::<f64>() / n;
            let full: f64 = at[SMOOTHING_CHECKPOINTS..].iter().sum::<f64>() / n;
            (full, half)
        }
    }
}

fn check_beta_inputs(
    curve: &CurveSpec,
    table: &PrimeTable,
    sign: Sign,
    progression: Option<(u64, i8)>,
    cutoff: u64,
) -> Result<()> {
    if sign == Sign::Plus && curve.bad_primes().len() != 1 {
        return Err(Error::Config("the plus family needs a prime conductor".into()));
    }
    if table.limit < cutoff {
        return Err(Error::Capacity {
            needed: cutoff,
            available: table.limit,
        });
    }
    if let Some((q, lambda)) = progression {
        if curve.is_bad(q) {
            return Err(Error::Config(format!("q={q} divides the conductor {}", curve.conductor)));
        }
        if lambda != 1 && lambda != -1 {
            return Err(Error::Config(format!("λ must be ±1, got {lambda}")));
        }
        if q > cutoff || table.ap(q).is_none() {
            return Err(Error::Domain(format!("q={q} is not a prime up to the cutoff {cutoff}")));
        }
    }
    Ok(())
}

/// β_k(q, λ) = (k-2)γ + log(√Q/2π) + Σ_{p <= P} β_k(p), with α = log h_k(0)
/// summed over the same primes.
pub fn beta_total(
    curve: &CurveSpec,
    table: &PrimeTable,
    sign: Sign,
    q: u64,
    lambda: i8,
    k: f64,
    cutoff: u64,
    mode: PrimeSum,
) -> Result<BetaExpansion> {
    beta_expansion(curve, table, sign, Some((q, lambda)), k, cutoff, mode)
}

/// As [`beta_total`], for the whole family or one progression class.
pub fn beta_expansion(
    curve: &CurveSpec,
    table: &PrimeTable,
    sign: Sign,
    progression: Option<(u64, i8)>,
    k: f64,
    cutoff: u64,
    mode: PrimeSum,
) -> Result<BetaExpansion> {
    check_beta_inputs(curve, table, sign, progression, cutoff)?;
    // q = 0 matches no prime
    let (q, lambda) = progression.unwrap_or((0, 1));
    let (sum, half) = read_prime_sum(table, cutoff, mode, |p, a| {
        prime_linear(p, a, curve.is_bad(p), sign, q, lambda, k)
    });
    let (alpha, _) = read_prime_sum(table, cutoff, PrimeSum::Raw, |p, a| {
        prime_constant(p, a, curve.is_bad(p), sign, q, lambda, k)
    });
    let head = gamma_factor_linear(curve.conductor) + zeta_factor_linear(k);
    Ok(BetaExpansion {
        k,
        sign,
        progression,
        alpha,
        beta: head + sum,
        cutoff,
        stability_delta: libm::fabs(sum - half),
    })
}

/// ((q+1-a_q)/(q+1+a_q))^{-k}.
pub fn h0_ratio(q: u64, aq: i64, k: f64) -> f64 {
    let (qf, a) = (q as f64, aq as f64);
    libm::pow((qf + 1.0 - a) / (qf + 1.0 + a), -k)
}

/// R_q = √((q+1-a_q)/(q+1+a_q)).
pub fn r_main(q: u64, aq: i64) -> f64 {
    let (qf, a) = (q as f64, aq as f64);
    libm::sqrt((qf + 1.0 - a) / (qf + 1.0 + a))
}

/// Evaluation settings for [`r_predicted`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionOptions {
    pub k: f64,
    pub cutoff: u64,
    pub mode: PrimeSum,
    pub conductor_weight: ConductorWeight,
}

impl Default for PredictionOptions {
    fn default() -> Self {
        PredictionOptions {
            k: -0.5,
            cutoff: DEFAULT_PRIME_CUTOFF,
            mode: PrimeSum::Raw,
            conductor_weight: ConductorWeight::Tabulated,
        }
    }
}

/// First- and second-order predictions for R_q(X).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub q: u64,
    pub aq: i64,
    pub r_main: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
    pub cutoff: u64,
    /// Largest stability delta of the two β sums.
    pub stability_delta: f64,
}

impl Prediction {
    /// R_q (1 + c(β_+ - 1)) / (1 + c(β_- - 1)) with c = 3/(8 log X).
    pub fn r_second(&self, x: f64) -> f64 {
        let c = 3.0 / (8.0 * libm::log(x));
        self.r_main * (1.0 + c * (self.beta_plus - 1.0)) / (1.0 + c * (self.beta_minus - 1.0))
    }
}

/// β at (q, ±1) under the chosen conductor weighting.
pub fn weighted_betas(
    curve: &CurveSpec,
    table: &PrimeTable,
    sign: Sign,
    q: u64,
    opts: &PredictionOptions,
) -> Result<(BetaExpansion, BetaExpansion)> {
    let mut plus = beta_total(curve, table, sign, q, 1, opts.k, opts.cutoff, opts.mode)?;
    let mut minus = beta_total(curve, table, sign, q, -1, opts.k, opts.cutoff, opts.mode)?;
    if opts.conductor_weight == ConductorWeight::Tabulated {
        let k = opts.k;
        let shift = (2.0 / (k * (k - 1.0)) - 1.0) * conductor_log(curve.conductor);
        plus.beta += shift;
        minus.beta += shift;
    }
    Ok((plus, minus))
}

/// The two-term prediction for R_q(X) in the given family.
pub fn r_predicted(
    curve: &CurveSpec,
    table: &PrimeTable,
    sign: Sign,
    q: u64,
    opts: &PredictionOptions,
) -> Result<Prediction> {
    let (plus, minus) = weighted_betas(curve, table, sign, q, opts)?;
    let aq = table.ap(q).expect("checked by beta_total");
    Ok(Prediction {
        q,
        aq,
        r_main: r_main(q, aq),
        beta_plus: plus.beta,
        beta_minus: minus.beta,
        cutoff: opts.cutoff,
        stability_delta: f64::max(plus.stability_delta, minus.stability_delta),
    })
}
