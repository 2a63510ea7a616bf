//! Moment polynomials Υ_k by residue extraction, their arithmetic factors,
//! and the empirical moments they predict.

use crate::arith::{primes_up_to, CompensatedSum};
use crate::constants::{loggamma_taylor, zeta_residue_taylor};
use crate::curve::CurveSpec;
use crate::error::{Error, Result};
use crate::family::{FamilySelector, Sign};
use crate::kronecker::kronecker_signed;
use crate::lvalue::TwistRecord;
use crate::series::TruncatedSeries;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

/// Largest k handled by the residue engine.
pub const MAX_RESIDUE_K: usize = 3;

/// log(√Q / 2π).
pub fn conductor_log(conductor: u64) -> f64 {
    libm::log(libm::sqrt(conductor as f64) / (2.0 * PI))
}

/// Which local factor a prime contributes.
#[derive(Debug, Clone, Copy, PartialEq)]
enum LocalKind {
    Good(i64),
    /// p | Q in the minus family: ∏ (1 + p^{-1-z})^{-1}.
    BadMinus,
    /// p = Q in the plus family: ∏ (1 - p^{-1-z})^{-1}.
    BadPlus,
    /// p = q with χ_d(q) = λ fixed: ∏ (1 - λ a_q q^{-1-z} + q^{-1-2z})^{-1}.
    Progression(i64, i8),
}

fn local_kind(curve: &CurveSpec, p: u64, sign: Sign, progression: Option<(u64, i8)>) -> Result<LocalKind> {
    if let Some((q, lambda)) = progression {
        if q == p {
            if curve.is_bad(p) {
                return Err(Error::Config(format!("q={q} divides the conductor")));
            }
            return Ok(LocalKind::Progression(curve.ap(p)?, lambda));
        }
    }
    if curve.is_bad(p) {
        return Ok(match sign {
            Sign::Minus => LocalKind::BadMinus,
            Sign::Plus => LocalKind::BadPlus,
        });
    }
    Ok(LocalKind::Good(curve.ap(p)?))
}

fn check_sign(curve: &CurveSpec, sign: Sign) -> Result<()> {
    if sign == Sign::Plus && curve.bad_primes().len() != 1 {
        return Err(Error::Config(format!(
            "the plus family needs a prime conductor; {} has conductor {}",
            curve.label, curve.conductor
        )));
    }
    Ok(())
}

/// Taylor coefficients in z of 1/(1 - a u + b u^2) with u = s p^{-1-z}.
fn quadratic_inverse_taylor(p: u64, a: f64, b: f64, s: f64, degree: usize) -> Vec<f64> {
    let lp = libm::log(p as f64);
    let mut u = TruncatedSeries::zero(1, degree);
    let mut c = s / p as f64;
    for n in 0..=degree {
        u.set_coeff(&[n], c);
        c *= -lp / (n + 1) as f64;
    }
    let den = u.mul(&u).scale(b).sub(&u.scale(a)).add_constant(1.0);
    let inv = den.inv().expect("local factor has no pole at z = 0");
    (0..=degree).map(|n| inv.coeff(&[n])).collect()
}

/// ∏_j g(z_j) for a univariate Taylor series g.
fn symmetric_product(k: usize, degree: usize, g: &[f64]) -> TruncatedSeries {
    let mut out = TruncatedSeries::constant(k, degree, 1.0);
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        out = out.mul(&TruncatedSeries::compose_linear(k, degree, g, &e));
    }
    out
}

fn local_series(p: u64, kind: LocalKind, k: usize, degree: usize) -> TruncatedSeries {
    let pf = p as f64;
    match kind {
        LocalKind::Good(a) => {
            let a = a as f64;
            let g1 = quadratic_inverse_taylor(p, a, pf, 1.0, degree);
            let g2 = quadratic_inverse_taylor(p, a, pf, -1.0, degree);
            symmetric_product(k, degree, &g1)
                .add(&symmetric_product(k, degree, &g2))
                .scale(0.5)
                .add_constant(1.0 / pf)
                .scale(1.0 / (1.0 + 1.0 / pf))
        }
        LocalKind::BadMinus => symmetric_product(k, degree, &quadratic_inverse_taylor(p, -1.0, 0.0, 1.0, degree)),
        LocalKind::BadPlus => symmetric_product(k, degree, &quadratic_inverse_taylor(p, 1.0, 0.0, 1.0, degree)),
        LocalKind::Progression(a, lambda) => symmetric_product(
            k,
            degree,
            &quadratic_inverse_taylor(p, lambda as f64 * a as f64, pf, 1.0, degree),
        ),
    }
}

/// Maclaurin series in z_1..z_k, to total degree `degree`, of the local
/// factor at p of the family average: the good-prime average, the bad-prime
/// products, or the progression-fixed factor at p = q.
pub fn local_factor_series(
    curve: &CurveSpec,
    p: u64,
    k: usize,
    sign: Sign,
    progression: Option<(u64, i8)>,
    degree: usize,
) -> Result<TruncatedSeries> {
    check_sign(curve, sign)?;
    let kind = local_kind(curve, p, sign, progression)?;
    Ok(local_series(p, kind, k, degree))
}

/// Σ_{i<j} log(1 - p^{-1-z_i-z_j}).
fn vandermonde_compensation(p: u64, k: usize, degree: usize) -> TruncatedSeries {
    let lp = libm::log(p as f64);
    // log(1 - t) with t = p^{-1-s}, as a Taylor series in s
    let mut t = TruncatedSeries::zero(1, degree);
    let mut c = 1.0 / p as f64;
    for n in 0..=degree {
        t.set_coeff(&[n], c);
        c *= -lp / (n + 1) as f64;
    }
    let g = t.scale(-1.0).add_constant(1.0).log().expect("1 - 1/p > 0");
    let g: Vec<f64> = (0..=degree).map(|n| g.coeff(&[n])).collect();
    let mut out = TruncatedSeries::zero(k, degree);
    for i in 0..k {
        for j in i + 1..k {
            let mut e = vec![0.0; k];
            e[i] = 1.0;
            e[j] = 1.0;
            out = out.add(&TruncatedSeries::compose_linear(k, degree, &g, &e));
        }
    }
    out
}

/// A truncated Euler product (as its logarithm) with convergence metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerSeries {
    /// log A as a series in z_1..z_k.
    pub log_series: TruncatedSeries,
    pub cutoff: u64,
    /// Largest coefficient change between cutoffs P/2 and P.
    pub stability_delta: f64,
    /// Largest coefficient of the last prime's contribution.
    pub last_term: f64,
}

impl EulerSeries {
    pub fn series(&self) -> TruncatedSeries {
        self.log_series.exp()
    }
}

/// The arithmetic factor A_k: Σ_{p <= P} log[F_p · ∏_{i<j}(1 - p^{-1-z_i-z_j})],
/// exponentiated on demand.
pub fn euler_a_series(
    curve: &CurveSpec,
    k: usize,
    sign: Sign,
    progression: Option<(u64, i8)>,
    degree: usize,
    cutoff: u64,
) -> Result<EulerSeries> {
    check_sign(curve, sign)?;
    if cutoff < 2 {
        return Err(Error::Domain(format!("prime cutoff {cutoff} below 2")));
    }
    if let Some((q, _)) = progression {
        if q > cutoff {
            return Err(Error::Domain(format!("progression prime {q} above the cutoff {cutoff}")));
        }
    }
    let template = TruncatedSeries::zero(k, degree);
    let n_coeffs = template.terms().count();
    let mut sums = vec![CompensatedSum::new(); n_coeffs];
    let mut half: Option<Vec<f64>> = None;
    let mut last_term = 0.0;
    for p in primes_up_to(cutoff) {
        if half.is_none() && p > cutoff / 2 {
            half = Some(sums.iter().map(|s| s.value()).collect());
        }
        let kind = local_kind(curve, p, sign, progression)?;
        let term = local_series(p, kind, k, degree)
            .log()?
            .add(&vandermonde_compensation(p, k, degree));
        last_term = 0.0;
        for (s, (_, c)) in sums.iter_mut().zip(term.terms()) {
            s.add(c);
            last_term = f64::max(last_term, libm::fabs(c));
        }
    }
    let mut log_series = template;
    let mut delta = 0.0;
    let half = half.unwrap_or_else(|| vec![0.0; n_coeffs]);
    let exps: Vec<_> = log_series.terms().map(|(e, _)| e).collect();
    for ((e, s), h) in exps.iter().zip(&sums).zip(&half) {
        log_series.set_coeff(&e[..k], s.value());
        delta = f64::max(delta, libm::fabs(s.value() - h));
    }
    Ok(EulerSeries {
        log_series,
        cutoff,
        stability_delta: delta,
        last_term,
    })
}

/// Σ_j [(-γ + log(√Q/2π)) z_j - Σ_{odd n>=3} ζ(n) z_j^n / n], the log of
/// the Γ-ratio and conductor factor.
fn gamma_series(conductor: u64, k: usize, degree: usize) -> Result<TruncatedSeries> {
    if degree > 15 {
        return Err(Error::Domain(format!("Γ expansion available to degree 15, asked {degree}")));
    }
    let mut f = vec![0.0; degree + 1];
    for (n, c) in f.iter_mut().enumerate().skip(1) {
        if n % 2 == 1 {
            *c = loggamma_taylor(n);
        }
    }
    if degree >= 1 {
        f[1] += conductor_log(conductor);
    }
    let mut out = TruncatedSeries::zero(k, degree);
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        out = out.add(&TruncatedSeries::compose_linear(k, degree, &f, &e));
    }
    Ok(out)
}

/// Σ_{i<j} log(ζ(1+z_i+z_j)(z_i+z_j)).
fn zeta_series(k: usize, degree: usize) -> Result<TruncatedSeries> {
    let taylor = zeta_residue_taylor();
    if k >= 2 && degree >= taylor.len() {
        return Err(Error::Domain(format!(
            "ζ expansion available to degree {}, asked {degree}",
            taylor.len() - 1
        )));
    }
    let mut z = TruncatedSeries::zero(1, degree);
    for n in 0..=degree.min(taylor.len() - 1) {
        z.set_coeff(&[n], taylor[n]);
    }
    let g = z.log()?;
    let g: Vec<f64> = (0..=degree).map(|n| g.coeff(&[n])).collect();
    let mut out = TruncatedSeries::zero(k, degree);
    for i in 0..k {
        for j in i + 1..k {
            let mut e = vec![0.0; k];
            e[i] = 1.0;
            e[j] = 1.0;
            out = out.add(&TruncatedSeries::compose_linear(k, degree, &g, &e));
        }
    }
    Ok(out)
}

/// log h_k = log A_k + Γ part + ζ part, with the A-series metadata.
pub fn log_h_series(
    curve: &CurveSpec,
    k: usize,
    sign: Sign,
    progression: Option<(u64, i8)>,
    degree: usize,
    cutoff: u64,
) -> Result<(TruncatedSeries, EulerSeries)> {
    let a = euler_a_series(curve, k, sign, progression, degree, cutoff)?;
    let log_h = a
        .log_series
        .add(&gamma_series(curve.conductor, k, degree)?)
        .add(&zeta_series(k, degree)?);
    Ok((log_h, a))
}

/// Υ_k as coefficients c_0..c_m of x^0..x^m, m = k(k-1)/2.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentPolynomial {
    pub k: usize,
    pub sign: Sign,
    pub progression: Option<(u64, i8)>,
    pub coefficients: Vec<f64>,
    pub cutoff: u64,
    pub stability_delta: f64,
}

impl MomentPolynomial {
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// (1/X) ∫_0^X Υ(log t) dt.
    pub fn average(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(n, &c)| c * log_power_average(n, x))
            .sum()
    }
}

/// (1/X) ∫_0^X (log t)^n dt = Σ_{j=0}^{n} (-1)^{n-j} n!/j! (log X)^j.
pub fn log_power_average(n: usize, x: f64) -> f64 {
    let lx = libm::log(x);
    let mut total = 0.0;
    let mut ratio = 1.0; // n!/j! for j = n
    for j in (0..=n).rev() {
        let s = if (n - j) % 2 == 0 { 1.0 } else { -1.0 };
        total += s * ratio * libm::pow(lx, j as f64);
        ratio *= j as f64;
    }
    total
}

/// ∏_{i<j} (z_j - z_i)^2 (z_i + z_j).
fn vandermonde_kernel(k: usize, degree: usize) -> TruncatedSeries {
    let mut v = TruncatedSeries::constant(k, degree, 1.0);
    for i in 0..k {
        for j in i + 1..k {
            let mut diff = vec![0.0; k];
            diff[j] = 1.0;
            diff[i] = -1.0;
            let mut sum = vec![0.0; k];
            sum[i] = 1.0;
            sum[j] = 1.0;
            let d = TruncatedSeries::linear(k, degree, &diff);
            let s = TruncatedSeries::linear(k, degree, &sum);
            v = v.mul(&d).mul(&d).mul(&s);
        }
    }
    v
}

/// The moment polynomial Υ_k for k in 1..=3 by residue extraction: the
/// coefficient of x^n is (-1)^m 2^k/k! times the coefficient of
/// ∏ z_j^{2k-2} in h(z)·∏_{i<j}(z_j - z_i)^2(z_i + z_j)·(Σ z_j)^n/n!.
pub fn upsilon_poly(
    curve: &CurveSpec,
    k: usize,
    sign: Sign,
    progression: Option<(u64, i8)>,
    cutoff: u64,
) -> Result<MomentPolynomial> {
    if !(1..=MAX_RESIDUE_K).contains(&k) {
        return Err(Error::Domain(format!("residue engine handles k = 1..={MAX_RESIDUE_K}, got {k}")));
    }
    let m = k * (k - 1) / 2;
    let full = 2 * k * (k - 1);
    let (log_h, a) = log_h_series(curve, k, sign, progression, m, cutoff)?;
    let h = log_h.exp().with_degree(full);
    let kernel = h.mul(&vandermonde_kernel(k, full));
    let total = TruncatedSeries::linear(k, full, &vec![1.0; k]);
    let target = vec![2 * k - 2; k];
    let mut fact = 1.0;
    for j in 2..=k {
        fact *= j as f64;
    }
    let sign_m = if m % 2 == 0 { 1.0 } else { -1.0 };
    let pref = sign_m * libm::pow(2.0, k as f64) / fact;
    let mut coefficients = Vec::with_capacity(m + 1);
    let mut term = kernel;
    let mut nfact = 1.0;
    for n in 0..=m {
        if n > 0 {
            term = term.mul(&total);
            nfact *= n as f64;
        }
        coefficients.push(pref * term.coeff(&target) / nfact);
    }
    if coefficients[m] == 0.0 || !coefficients[m].is_finite() {
        return Err(Error::Internal(format!(
            "Υ_{k} came out with degree below {m} (leading coefficient {})",
            coefficients[m]
        )));
    }
    Ok(MomentPolynomial {
        k,
        sign,
        progression,
        coefficients,
        cutoff,
        stability_delta: a.stability_delta,
    })
}

/// g_k = 2^{k(k+1)/2} ∏_{j=1}^{k-1} j!/(2j)! as a reduced fraction.
pub fn g_k(k: u32) -> (u128, u128) {
    let mut num: u128 = 1 << (k * (k + 1) / 2);
    let mut den: u128 = 1;
    for j in 1..k as u128 {
        // (2j)!/j! = (j+1)(j+2)...(2j)
        for i in j + 1..=2 * j {
            den *= i;
        }
        let g = gcd128(num, den);
        num /= g;
        den /= g;
    }
    (num, den)
}

fn gcd128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn g_k_f64(k: u32) -> f64 {
    let (n, d) = g_k(k);
    n as f64 / d as f64
}

fn near_gamma_pole(x: f64) -> bool {
    x <= 0.0 && libm::fabs(x - libm::round(x)) < 1e-8
}

/// M_O(N, k) = 2^{2Nk} ∏_{j=1}^{N} Γ(N+j-1)Γ(k+j-1/2) / (Γ(j-1/2)Γ(k+j+N-1)).
pub fn m_o(n: u32, k: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain(String::from("M_O needs N >= 1")));
    }
    let nf = n as f64;
    let mut log_total = 2.0 * nf * k * core::f64::consts::LN_2;
    let mut sign = 1i32;
    for j in 1..=n {
        let jf = j as f64;
        let (top, bottom) = (k + jf - 0.5, k + jf + nf - 1.0);
        if near_gamma_pole(top) || near_gamma_pole(bottom) {
            return Err(Error::Domain(format!("M_O({n}, {k}) sits on a pole of Γ")));
        }
        let (lt, st) = libm::lgamma_r(top);
        let (lb, sb) = libm::lgamma_r(bottom);
        // grouped so that k = 0 cancels exactly
        log_total += (libm::lgamma(nf + jf - 1.0) - lb) + (lt - libm::lgamma(jf - 0.5));
        sign *= st * sb;
    }
    Ok(sign as f64 * libm::exp(log_total))
}


/// A truncated Euler product value with its convergence metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedValue {
    pub value: f64,
    pub cutoff: u64,
    /// |value(P) - value(P/2)|.
    pub stability_delta: f64,
}

impl TruncatedValue {
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

/// A^±(k) = ∏_{p <= P} (1-1/p)^{k(k-1)/2} × [good: (p/(p+1))(1/p + ½(𝓛_p(1/p)^k + 𝓛_p(-1/p)^k));
/// bad: 𝓛_p(∓a_p/p)^k].
pub fn arithmetic_factor(curve: &CurveSpec, k: f64, sign: Sign, cutoff: u64) -> Result<TruncatedValue> {
    check_sign(curve, sign)?;
    if cutoff < 2 {
        return Err(Error::Domain(format!("prime cutoff {cutoff} below 2")));
    }
    let pairs = k * (k - 1.0) / 2.0;
    let mut total = CompensatedSum::new();
    let mut half = 0.0;
    let mut half_set = false;
    for p in primes_up_to(cutoff) {
        if !half_set && p > cutoff / 2 {
            half = total.value();
            half_set = true;
        }
        let pf = p as f64;
        let a = curve.ap(p)? as f64;
        let local = if curve.is_bad(p) {
            let x = match sign {
                Sign::Minus => -a / pf,
                Sign::Plus => a / pf,
            };
            -k * libm::log1p(-a * x)
        } else {
            let l1 = 1.0 / (1.0 - a / pf + 1.0 / pf);
            let l2 = 1.0 / (1.0 + a / pf + 1.0 / pf);
            let avg = 0.5 * (libm::pow(l1, k) + libm::pow(l2, k));
            libm::log1p(pf * (avg - 1.0) / (pf + 1.0))
        };
        total.add(pairs * libm::log1p(-1.0 / pf) + local);
    }
    let value = libm::exp(total.value());
    Ok(TruncatedValue {
        value,
        cutoff,
        stability_delta: libm::fabs(value - libm::exp(half)),
    })
}

/// Average of value^k over the records in the selector's family (restricted
/// to χ_d(q) = λ when the selector carries a progression).
pub fn empirical_moment(records: &[TwistRecord], sel: &FamilySelector, k: u32) -> Result<f64> {
    let mut sum = CompensatedSum::new();
    let mut count = 0u64;
    for r in records {
        if let Some((q, lambda)) = sel.progression {
            if kronecker_signed(r.d, q as i64) != lambda {
                continue;
            }
        }
        sum.add(libm::pow(r.value, k as f64));
        count += 1;
    }
    if count == 0 {
        return Err(Error::Domain(String::from("empty family: no records to average")));
    }
    Ok(sum.value() / count as f64)
}
