//! Integer helpers: prime sieves, modular arithmetic over small primes,
//! Jacobi symbols and square roots.

use alloc::vec;
use alloc::vec::Vec;

/// Primes up to and including `limit`, ascending.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    // odd-only sieve: index i <-> 2i+1
    let half = n / 2 + 1;
    let mut composite = vec![false; half];
    let mut i = 1;
    while (2 * i + 1) * (2 * i + 1) <= n {
        if !composite[i] {
            let p = 2 * i + 1;
            let mut j = p * p / 2;
            while j < half {
                composite[j] = true;
                j += p;
            }
        }
        i += 1;
    }
    let mut out = vec![2u64];
    for (i, &c) in composite.iter().enumerate().skip(1) {
        let p = 2 * i + 1;
        if p > n {
            break;
        }
        if !c {
            out.push(p as u64);
        }
    }
    out
}

/// Smallest-prime-factor table for 0..=limit (entries 0 and 1 are 0 and 1).
pub fn smallest_prime_factors(limit: usize) -> Vec<u32> {
    let mut spf = vec![0u32; limit + 1];
    if limit >= 1 {
        spf[1] = 1;
    }
    for i in 2..=limit {
        if spf[i] == 0 {
            spf[i] = i as u32;
            if let Some(start) = i.checked_mul(i) {
                let mut j = start;
                while j <= limit {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
    }
    spf
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Prime factorization by trial division, as (prime, exponent) pairs.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_squarefree(n: u64) -> bool {
    n != 0 && factorize(n).iter().all(|&(_, e)| e == 1)
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Jacobi symbol (a/n) for odd positive n.
pub fn jacobi(a: i64, n: u64) -> i8 {
    debug_assert!(n % 2 == 1);
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut n = n;
    let mut result = 1i8;
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz % 2 == 1 && (n % 8 == 3 || n % 8 == 5) {
            result = -result;
        }
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        core::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Arithmetic modulo a prime below 2^26, using a floating-point reciprocal
/// to avoid hardware division in products.
#[derive(Debug, Clone, Copy)]
pub struct ModP {
    pub p: u64,
    inv: f64,
}

impl ModP {
    pub const MAX: u64 = 1 << 26;

    pub fn new(p: u64) -> Self {
        assert!(p >= 2 && p < Self::MAX, "modulus {p} out of range");
        ModP {
            p,
            inv: 1.0 / p as f64,
        }
    }

    #[inline]
    pub fn reduce(&self, a: i64) -> u64 {
        a.rem_euclid(self.p as i64) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        let prod = a * b;
        let q = ((a as f64) * (b as f64) * self.inv) as u64;
        let r = prod.wrapping_sub(q.wrapping_mul(self.p)) as i64;
        if r < 0 {
            (r + self.p as i64) as u64
        } else if r as u64 >= self.p {
            r as u64 - self.p
        } else {
            r as u64
        }
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.p;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `a` must be nonzero mod p.
    pub fn inv(&self, a: u64) -> u64 {
        let (mut r0, mut r1) = (self.p as i64, a as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1, "{a} not invertible mod {}", self.p);
        self.reduce(t0)
    }

    /// Legendre symbol of `a` (p odd).
    pub fn legendre(&self, a: u64) -> i8 {
        jacobi(a as i64, self.p)
    }

    /// A square root of a quadratic residue `a` (p odd), by Tonelli-Shanks.
    pub fn sqrt(&self, a: u64) -> Option<u64> {
        let p = self.p;
        let a = a % p;
        if a == 0 {
            return Some(0);
        }
        if self.legendre(a) != 1 {
            return None;
        }
        if p % 4 == 3 {
            return Some(self.pow(a, (p + 1) / 4));
        }
        let mut q = p - 1;
        let mut s = 0;
        while q % 2 == 0 {
            q /= 2;
            s += 1;
        }
        let mut z = 2;
        while self.legendre(z) != -1 {
            z += 1;
        }
        let mut m = s;
        let mut c = self.pow(z, q);
        let mut t = self.pow(a, q);
        let mut r = self.pow(a, (q + 1) / 2);
        while t != 1 {
            let mut i = 0;
            let mut t2 = t;
            while t2 != 1 {
                t2 = self.mul(t2, t2);
                i += 1;
            }
            let mut b = c;
            for _ in 0..(m - i - 1) {
                b = self.mul(b, b);
            }
            m = i;
            c = self.mul(b, b);
            t = self.mul(t, c);
            r = self.mul(r, b);
        }
        Some(r)
    }
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sieve_matches_trial_division() {
        let ps = primes_up_to(2000);
        let naive: Vec<u64> = (0..=2000).filter(|&n| is_prime(n)).collect();
        assert_eq!(ps, naive);
        assert!(primes_up_to(1).is_empty());
        assert_eq!(primes_up_to(2), [2]);
    }

    #[test]
    fn spf_table() {
        let spf = smallest_prime_factors(100);
        assert_eq!(spf[97], 97);
        assert_eq!(spf[91], 7);
        assert_eq!(spf[64], 2);
    }

    #[test]
    fn modp_mul_and_inverse() {
        for &p in &[3u64, 5, 101, 65_521, 9_999_991] {
            let m = ModP::new(p);
            for a in [1u64, 2, p / 2, p - 1] {
                for b in [1u64, 3, p / 3 + 1, p - 2] {
                    assert_eq!(m.mul(a % p, b % p), (a % p) * (b % p) % p);
                }
                assert_eq!(m.mul(a, m.inv(a)), 1);
            }
        }
    }

    #[test]
    fn tonelli_shanks_roots() {
        for &p in &[13u64, 17, 41, 97, 257, 65_537, 9_999_991] {
            let m = ModP::new(p);
            for a in 1..200u64 {
                if let Some(r) = m.sqrt(a % p) {
                    assert_eq!(m.mul(r, r), a % p);
                } else {
                    assert_eq!(m.legendre(a % p), -1);
                }
            }
        }
    }

    #[test]
    fn jacobi_against_euler() {
        for &p in &[3u64, 7, 11, 101, 997] {
            let m = ModP::new(p);
            for a in -50i64..50 {
                let e = m.pow(m.reduce(a), (p - 1) / 2);
                let expect = if e == 0 { 0 } else if e == 1 { 1 } else { -1 };
                assert_eq!(jacobi(a, p), expect);
            }
        }
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        for _ in 0..10 {
            s.add(1e-16);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-15).abs() < 1e-20);
    }
}
