//! Twist families S^-(X), S^+(X) and their progression refinements.

use crate::arith::{is_prime, primes_up_to};
use crate::curve::CurveSpec;
use crate::error::{Error, Result};
use crate::kronecker::kronecker_signed;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Block length of the squarefree sieve.
pub const SIEVE_BLOCK: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Minus => "minus",
            Sign::Plus => "plus",
        }
    }
}

/// Which discriminants to enumerate: the sign of the family, the bound X
/// on |d|, and an optional progression χ_d(q) = λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilySelector {
    pub sign: Sign,
    pub bound: u64,
    pub progression: Option<(u64, i8)>,
}

impl FamilySelector {
    pub fn new(sign: Sign, bound: u64) -> Self {
        FamilySelector {
            sign,
            bound,
            progression: None,
        }
    }

    pub fn with_progression(mut self, q: u64, lambda: i8) -> Self {
        self.progression = Some((q, lambda));
        self
    }

    pub fn without_progression(mut self) -> Self {
        self.progression = None;
        self
    }

    pub fn validate(&self, curve: &CurveSpec) -> Result<()> {
        if self.bound == 0 {
            return Err(Error::Config("family bound must be positive".into()));
        }
        if self.sign == Sign::Plus && !is_prime(curve.conductor) {
            return Err(Error::Config(format!(
                "the plus family needs a prime conductor; {} has conductor {}",
                curve.label, curve.conductor
            )));
        }
        if let Some((q, lambda)) = self.progression {
            if !is_prime(q) {
                return Err(Error::Config(format!("progression modulus {q} is not prime")));
            }
            if curve.is_bad(q) {
                return Err(Error::Config(format!("q={q} divides the conductor {}", curve.conductor)));
            }
            if lambda != 1 && lambda != -1 {
                return Err(Error::Config(format!("λ must be ±1, got {lambda}")));
            }
        }
        Ok(())
    }

    /// Whether `d` (already known fundamental, with the right sign and
    /// |d| <= X) satisfies the residue conditions at the bad primes and the
    /// progression condition.
    pub fn admits(&self, curve: &CurveSpec, d: i64) -> bool {
        let local_ok = match self.sign {
            Sign::Minus => curve
                .bad_primes()
                .iter()
                .all(|&(p, ap)| kronecker_signed(d, p as i64) == -ap),
            Sign::Plus => {
                d != 1 && {
                    let (qq, aq) = curve.bad_primes()[0];
                    kronecker_signed(d, qq as i64) == aq
                }
            }
        };
        local_ok
            && match self.progression {
                Some((q, lambda)) => kronecker_signed(d, q as i64) == lambda,
                None => true,
            }
    }
}

/// Squarefree flags for lo..hi (hi exclusive), given all primes up to √hi.
fn squarefree_block(lo: u64, hi: u64, primes: &[u64]) -> Vec<bool> {
    let mut flags = vec![true; (hi - lo) as usize];
    for &p in primes {
        let sq = p * p;
        if sq >= hi {
            break;
        }
        let mut m = lo.div_ceil(sq) * sq;
        while m < hi {
            flags[(m - lo) as usize] = false;
            m += sq;
        }
    }
    flags
}

/// Absolute values m in 1..=bound, ascending, for which ±m (per `sign`)
/// is a fundamental discriminant.
fn fundamental_abs_values(sign: Sign, bound: u64) -> Vec<u64> {
    let primes = primes_up_to((libm::sqrt(bound as f64) as u64) + 2);
    let mut out = Vec::new();
    let mut lo = 1;
    while lo <= bound {
        let hi = (lo + SIEVE_BLOCK).min(bound + 1);
        let sf = squarefree_block(lo, hi, &primes);
        // m/4 lives in the block below; sieve it separately
        let lo4 = lo.div_ceil(4).max(1);
        let hi4 = (hi - 1) / 4 + 1;
        let sf4 = if lo4 < hi4 {
            squarefree_block(lo4, hi4, &primes)
        } else {
            Vec::new()
        };
        for m in lo..hi {
            let d = match sign {
                Sign::Minus => -(m as i64),
                Sign::Plus => m as i64,
            };
            let fundamental = match d.rem_euclid(4) {
                1 => sf[(m - lo) as usize],
                0 => {
                    let r = (d / 4).rem_euclid(4);
                    (r == 2 || r == 3) && sf4[(m / 4 - lo4) as usize]
                }
                _ => false,
            };
            if fundamental {
                out.push(m);
            }
        }
        lo = hi;
    }
    out
}

/// The family S^±(X) (optionally restricted to χ_d(q) = λ), ascending in |d|.
///
/// Every member is checked to have even twisted sign χ_d(-Q)·w_E = +1.
pub fn enumerate_family(curve: &CurveSpec, sel: &FamilySelector) -> Result<Vec<i64>> {
    sel.validate(curve)?;
    let mut out = Vec::new();
    for m in fundamental_abs_values(sel.sign, sel.bound) {
        let d = match sel.sign {
            Sign::Minus => -(m as i64),
            Sign::Plus => m as i64,
        };
        if !sel.admits(curve, d) {
            continue;
        }
        let sign = kronecker_signed(d, -(curve.conductor as i64)) as i64 * curve.root_number as i64;
        if sign != 1 {
            return Err(Error::Config(format!(
                "twist d={d} of {} has odd functional-equation sign; root number or bad-prime a_p is wrong",
                curve.label
            )));
        }
        out.push(d);
    }
    Ok(out)
}

/// Family sizes, overall and split by χ_d(q).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FamilyCensus {
    pub total: u64,
    pub lambda_plus: u64,
    pub lambda_minus: u64,
    /// Members with χ_d(q) = 0 (in neither progression class).
    pub ramified: u64,
}

/// Counts for the family of `sel` (its progression ignored), split by
/// χ_d(q) for the given q (or the selector's own q when `q` is None).
pub fn family_census(curve: &CurveSpec, sel: &FamilySelector, q: Option<u64>) -> Result<FamilyCensus> {
    let q = q.or(sel.progression.map(|(q, _)| q));
    let base = sel.without_progression();
    if let Some(q) = q {
        base.with_progression(q, 1).validate(curve)?;
    }
    let members = enumerate_family(curve, &base)?;
    let mut census = FamilyCensus {
        total: members.len() as u64,
        ..Default::default()
    };
    if let Some(q) = q {
        for &d in &members {
            match kronecker_signed(d, q as i64) {
                1 => census.lambda_plus += 1,
                -1 => census.lambda_minus += 1,
                _ => census.ramified += 1,
            }
        }
    }
    Ok(census)
}
