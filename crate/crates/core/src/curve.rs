//! Elliptic curves over Q with squarefree conductor: validation, traces of
//! Frobenius, Dirichlet coefficients and local Euler factors.

use crate::arith::{factorize, is_prime, is_squarefree, primes_up_to, smallest_prime_factors, ModP};
use crate::error::{Error, Result};
use crate::pointcount;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// Below this prime, a_p is counted directly with the quadratic character;
/// above it, baby-step giant-step is used.
pub const CHARACTER_SUM_LIMIT: u64 = 1000;

/// Default capacity for coefficient tables (entries).
pub const DEFAULT_TABLE_BUDGET: usize = 1 << 26;

/// A minimal Weierstrass model `y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6`
/// with its conductor and root number.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec {
    pub label: String,
    pub weierstrass: [i64; 5],
    pub conductor: u64,
    pub discriminant: i128,
    pub root_number: i8,
    /// a_p at the primes dividing the conductor, ascending in p.
    bad_primes: Vec<(u64, i8)>,
}

/// b2, b4, b6, b8 of a Weierstrass model.
pub fn b_invariants(a: &[i64; 5]) -> [i128; 4] {
    let [a1, a2, a3, a4, a6] = a.map(|x| x as i128);
    [
        a1 * a1 + 4 * a2,
        2 * a4 + a1 * a3,
        a3 * a3 + 4 * a6,
        a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4,
    ]
}

/// c4 and c6 of a Weierstrass model.
pub fn c_invariants(a: &[i64; 5]) -> (i128, i128) {
    let [b2, b4, b6, _] = b_invariants(a);
    (b2 * b2 - 24 * b4, -b2 * b2 * b2 + 36 * b2 * b4 - 216 * b6)
}

pub fn discriminant(a: &[i64; 5]) -> i128 {
    let [b2, b4, b6, b8] = b_invariants(a);
    -b2 * b2 * b8 - 8 * b4 * b4 * b4 - 27 * b6 * b6 + 9 * b2 * b4 * b6
}

fn prime_support(n: u128) -> Vec<u64> {
    let mut n = n;
    let mut out = Vec::new();
    let mut d: u128 = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d as u64);
            while n % d == 0 {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n as u64);
    }
    out
}

fn reduce(a: i64, p: u64) -> u64 {
    a.rem_euclid(p as i64) as u64
}

impl CurveSpec {
    /// Validates the model and determines a_p at the bad primes.
    ///
    /// `pinned_bad_ap` optionally fixes a_p for primes dividing the
    /// conductor; disagreement with the tangent test is a load error.
    pub fn new(
        label: &str,
        weierstrass: [i64; 5],
        conductor: u64,
        root_number: i8,
        pinned_bad_ap: &[(u64, i8)],
    ) -> Result<Self> {
        if conductor == 0 || !is_squarefree(conductor) {
            return Err(Error::Model(format!("conductor {conductor} is not squarefree")));
        }
        if root_number != 1 && root_number != -1 {
            return Err(Error::Model(format!("root number {root_number} not in {{-1,+1}}")));
        }
        let disc = discriminant(&weierstrass);
        if disc == 0 {
            return Err(Error::Model(String::from("singular model (discriminant 0)")));
        }
        let q_primes: Vec<u64> = factorize(conductor).into_iter().map(|(p, _)| p).collect();
        let d_primes = prime_support(disc.unsigned_abs());
        if q_primes != d_primes {
            return Err(Error::Model(format!(
                "primes of conductor {q_primes:?} differ from primes of discriminant {d_primes:?}; model not minimal or conductor wrong"
            )));
        }
        let mut bad_primes = Vec::with_capacity(q_primes.len());
        for &p in &q_primes {
            let ap = tangent_test(&weierstrass, p)?;
            if let Some(&(_, pinned)) = pinned_bad_ap.iter().find(|(q, _)| *q == p) {
                if pinned != ap {
                    return Err(Error::Model(format!(
                        "pinned a_{p} = {pinned} but reduction type gives {ap}"
                    )));
                }
            }
            bad_primes.push((p, ap));
        }
        if let Some(&(p, _)) = pinned_bad_ap.iter().find(|(p, _)| conductor % p != 0) {
            return Err(Error::Model(format!("pinned a_{p} but {p} does not divide the conductor")));
        }
        Ok(CurveSpec {
            label: String::from(label),
            weierstrass,
            conductor,
            discriminant: disc,
            root_number,
            bad_primes,
        })
    }

    /// 64-bit FNV-1a hash of the label, model, conductor and root number.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        eat(self.label.as_bytes());
        eat(&[0]);
        for a in self.weierstrass {
            eat(&a.to_le_bytes());
        }
        eat(&self.conductor.to_le_bytes());
        eat(&[self.root_number as u8]);
        h
    }

    pub fn is_bad(&self, p: u64) -> bool {
        self.conductor % p == 0
    }

    /// (p, a_p) for p dividing the conductor.
    pub fn bad_primes(&self) -> &[(u64, i8)] {
        &self.bad_primes
    }

    /// Trace of Frobenius a_p: p + 1 - #E(F_p) at good primes, ±1 at
    /// multiplicative primes (split / non-split).
    pub fn ap(&self, p: u64) -> Result<i64> {
        if !is_prime(p) {
            return Err(Error::Domain(format!("{p} is not prime")));
        }
        if let Some(&(_, a)) = self.bad_primes.iter().find(|(q, _)| *q == p) {
            return Ok(a as i64);
        }
        if p < CHARACTER_SUM_LIMIT || p >= ModP::MAX {
            return Ok(ap_character_sum(&self.weierstrass, p));
        }
        Ok(ap_baby_giant(&self.weierstrass, p))
    }

    /// a_p for every prime up to `limit`, in prime order.
    pub fn ap_values(&self, limit: u64) -> Result<(Vec<u64>, Vec<i64>)> {
        let primes = primes_up_to(limit);
        let mut values = Vec::with_capacity(primes.len());
        for &p in &primes {
            values.push(self.ap(p)?);
        }
        Ok((primes, values))
    }

    /// Local Euler factor 𝓛_p(x): (1 - a_p x)^{-1} at bad primes,
    /// (1 - a_p x + p x^2)^{-1} at good primes.
    pub fn local_factor(&self, p: u64, x: f64) -> Result<f64> {
        let a = self.ap(p)? as f64;
        let denom = if self.is_bad(p) {
            1.0 - a * x
        } else {
            1.0 - a * x + p as f64 * x * x
        };
        if denom == 0.0 {
            return Err(Error::Domain(format!("pole of the local factor at p={p}, x={x}")));
        }
        Ok(1.0 / denom)
    }
}

/// Number of projective points (including the singular point, if any) on
/// the reduction mod p, by enumerating all affine pairs.
pub fn count_points_naive(a: &[i64; 5], p: u64) -> u64 {
    let [a1, a2, a3, a4, a6] = a.map(|c| reduce(c, p));
    let mut count = 1; // point at infinity
    for x in 0..p {
        let rhs = (((x * x % p) * x) % p + a2 * x % p * x % p + a4 * x % p + a6) % p;
        for y in 0..p {
            let lhs = (y * y % p + a1 * x % p * y % p + a3 * y % p) % p;
            if lhs == rhs {
                count += 1;
            }
        }
    }
    count
}

/// a_p by counting with the quadratic character after completing the square
/// (odd p); direct enumeration for p = 2.
pub fn ap_character_sum(a: &[i64; 5], p: u64) -> i64 {
    if p == 2 {
        return p as i64 + 1 - count_points_naive(a, p) as i64;
    }
    let [b2, b4, b6, _] = b_invariants(a);
    let m = ModP::new(p);
    let rm = |v: i128| v.rem_euclid(p as i128) as u64;
    let (c2, c1, c0) = (rm(b2), rm(2 * b4), rm(b6));
    // table of squares: residue[r] = 1 if r is a nonzero square
    let mut residue = vec![-1i8; p as usize];
    residue[0] = 0;
    for x in 1..=(p / 2) {
        residue[m.mul(x, x) as usize] = 1;
    }
    let mut sum = 0i64;
    for x in 0..p {
        let x2 = m.mul(x, x);
        // (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6
        let v = m.add(m.add(m.mul(4 % p, m.mul(x2, x)), m.mul(c2, x2)), m.add(m.mul(c1, x), c0));
        sum += residue[v as usize] as i64;
    }
    -sum
}

/// a_p at a good prime p >= 5 by baby-step giant-step on the short model
/// `y^2 = x^3 - 27 c4 x - 54 c6`.
pub fn ap_baby_giant(a: &[i64; 5], p: u64) -> i64 {
    let (c4, c6) = c_invariants(a);
    let aa = (-27 * c4).rem_euclid(p as i128) as u64;
    let bb = (-54 * c6).rem_euclid(p as i128) as u64;
    match pointcount::group_order(aa, bb, p) {
        Some(n) => p as i64 + 1 - n as i64,
        None => ap_character_sum(a, p),
    }
}

/// Split / non-split test at a prime of multiplicative reduction: locate the
/// singular point and count the tangent directions of the node defined
/// over F_p (two: split, a_p = 1; none: non-split, a_p = -1; one: cusp).
pub fn tangent_test(a: &[i64; 5], p: u64) -> Result<i8> {
    let [a1, a2, a3, a4, a6] = a.map(|c| reduce(c, p));
    let f = |x: u64, y: u64| -> u64 {
        let lhs = (y * y + a1 * x % p * y + a3 * y) % p;
        let rhs = ((x * x % p) * x + a2 * (x * x % p) + a4 * x + a6) % p;
        (lhs + p - rhs) % p
    };
    // ∂F/∂x = a1 y - 3x^2 - 2 a2 x - a4, ∂F/∂y = 2y + a1 x + a3
    let fx = |x: u64, y: u64| (a1 * y % p + 3 * p * p - 3 * (x * x % p) - 2 * a2 * x % p - a4) % p;
    let fy = |x: u64, y: u64| (2 * y + a1 * x + a3) % p;
    let mut singular = None;
    'search: for x in 0..p {
        let ys: Vec<u64> = if p == 2 {
            vec![0, 1]
        } else {
            // 2y + a1 x + a3 = 0
            let m = ModP::new(p);
            let t = (a1 * x + a3) % p;
            vec![m.mul(m.neg(t), m.inv(2))]
        };
        for y in ys {
            if f(x, y) == 0 && fx(x, y) == 0 && fy(x, y) == 0 {
                singular = Some((x, y));
                break 'search;
            }
        }
    }
    let (x0, _) = singular.ok_or_else(|| Error::Model(format!("no singular point mod {p}")))?;
    // quadratic part at the node: v^2 + a1 u v - (3 x0 + a2) u^2
    let c = (3 * x0 + a2) % p;
    let roots = (0..p)
        .filter(|&t| (t * t + a1 * t + p - c) % p == 0)
        .count();
    match roots {
        2 => Ok(1),
        0 => Ok(-1),
        _ => Err(Error::Model(format!(
            "additive reduction at {p}; conductor would not be squarefree"
        ))),
    }
}

/// Primes up to a limit with their a_p, for repeated prime sums.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimeTable {
    pub limit: u64,
    pub primes: Vec<u64>,
    pub ap: Vec<i64>,
}

impl PrimeTable {
    pub fn new(curve: &CurveSpec, limit: u64) -> Result<Self> {
        let (primes, ap) = curve.ap_values(limit)?;
        Ok(PrimeTable { limit, primes, ap })
    }

    /// Raises the limit, computing a_p only for the new primes.
    pub fn extend(&mut self, curve: &CurveSpec, limit: u64) -> Result<()> {
        if limit <= self.limit {
            return Ok(());
        }
        for p in primes_up_to(limit).into_iter().filter(|&p| p > self.limit) {
            self.ap.push(curve.ap(p)?);
            self.primes.push(p);
        }
        self.limit = limit;
        Ok(())
    }

    /// Drops the primes above a lower limit.
    pub fn truncate(&mut self, limit: u64) {
        if limit < self.limit {
            let keep = self.primes.partition_point(|&p| p <= limit);
            self.primes.truncate(keep);
            self.ap.truncate(keep);
            self.limit = limit;
        }
    }

    /// a_p for a prime p <= limit.
    pub fn ap(&self, p: u64) -> Option<i64> {
        self.primes.binary_search(&p).ok().map(|i| self.ap[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, i64)> + '_ {
        self.primes.iter().copied().zip(self.ap.iter().copied())
    }
}

/// Dirichlet coefficients a_1..a_N of L_E(s).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub label: String,
    values: Vec<i32>,
}

impl CoefficientTable {
    /// Builds the table from a_p at every prime up to `limit`; prime
    /// powers by the Hecke recursion, composites by multiplicativity.
    pub fn from_prime_values(curve: &CurveSpec, limit: usize, primes: &[u64], ap: &[i64]) -> Result<Self> {
        if limit == 0 {
            return Err(Error::Domain(String::from("coefficient table limit must be positive")));
        }
        let spf = smallest_prime_factors(limit);
        let mut by_prime = vec![0i64; limit + 1];
        for (&p, &a) in primes.iter().zip(ap) {
            if p as usize > limit {
                break;
            }
            by_prime[p as usize] = a;
        }
        if primes.iter().filter(|&&p| p as usize <= limit).count() != spf[2..].iter().enumerate().filter(|(i, &s)| s as usize == i + 2).count() {
            return Err(Error::Capacity {
                needed: limit as u64,
                available: primes.last().copied().unwrap_or(0),
            });
        }
        let mut values = vec![0i32; limit + 1];
        values[1] = 1;
        for n in 2..=limit {
            let p = spf[n] as usize;
            let mut pe = p;
            while n % (pe * p) == 0 {
                pe *= p;
            }
            let rest = n / pe;
            if rest > 1 {
                values[n] = values[pe] * values[rest];
                continue;
            }
            let a = by_prime[p];
            values[n] = if pe == p {
                a as i32
            } else if curve.is_bad(p as u64) {
                (a * values[pe / p] as i64) as i32
            } else {
                (a * values[pe / p] as i64 - p as i64 * values[pe / p / p] as i64) as i32
            };
        }
        values.remove(0);
        Ok(CoefficientTable {
            label: curve.label.clone(),
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// a_n for 1 <= n <= len.
    pub fn get(&self, n: usize) -> i32 {
        self.values[n - 1]
    }

    /// a_1..a_N as a slice (index n-1).
    pub fn values(&self) -> &[i32] {
        &self.values
    }
}

/// a_1..a_N of the curve, refusing tables beyond `budget` entries.
pub fn an_table_with_budget(curve: &CurveSpec, n: usize, budget: usize) -> Result<CoefficientTable> {
    if n == 0 {
        return Err(Error::Domain(String::from("coefficient table limit must be positive")));
    }
    if n > budget {
        return Err(Error::Capacity {
            needed: n as u64,
            available: budget as u64,
        });
    }
    let (primes, ap) = curve.ap_values(n as u64)?;
    CoefficientTable::from_prime_values(curve, n, &primes, &ap)
}

pub fn an_table(curve: &CurveSpec, n: usize) -> Result<CoefficientTable> {
    an_table_with_budget(curve, n, DEFAULT_TABLE_BUDGET)
}


#[cfg(test)]
mod counting_tests {
    use super::*;

    #[test]
    fn baby_giant_matches_character_sum() {
        let models = [[0, -1, 1, -10, -20], [0, 0, 1, -8, -9]];
        for p in primes_up_to(60_000).into_iter().filter(|&p| p > 1000).step_by(37) {
            for a in &models {
                assert_eq!(ap_baby_giant(a, p), ap_character_sum(a, p), "p={p}");
            }
        }
    }

    #[test]
    fn character_sum_matches_naive_count() {
        let a = [0, -1, 1, -10, -20];
        for p in primes_up_to(300).into_iter().filter(|&p| p != 11) {
            assert_eq!(ap_character_sum(&a, p), p as i64 + 1 - count_points_naive(&a, p) as i64);
        }
    }
}
