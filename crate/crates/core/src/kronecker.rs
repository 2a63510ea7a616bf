//! Fundamental discriminants and Kronecker symbols.

use crate::arith::{is_squarefree, jacobi};
use alloc::vec;
use alloc::vec::Vec;

/// True iff `d` is the discriminant of a quadratic field (or d = 1).
pub fn is_fundamental(d: i64) -> bool {
    if d == 0 {
        return false;
    }
    let r = d.rem_euclid(4);
    if r == 1 {
        return is_squarefree(d.unsigned_abs());
    }
    if r == 0 {
        let m = d / 4;
        let s = m.rem_euclid(4);
        return (s == 2 || s == 3) && is_squarefree(m.unsigned_abs());
    }
    false
}

/// (d/2) by the mod-8 rule.
#[inline]
fn kronecker_two(d: i64) -> i8 {
    match d.rem_euclid(8) {
        1 | 7 => 1,
        3 | 5 => -1,
        _ => 0,
    }
}

/// Kronecker symbol (d/n) for n >= 0.
pub fn kronecker(d: i64, n: u64) -> i8 {
    if n == 0 {
        return if d == 1 || d == -1 { 1 } else { 0 };
    }
    let tz = n.trailing_zeros();
    let odd = n >> tz;
    let mut s = 1i8;
    if tz > 0 {
        let k2 = kronecker_two(d);
        if k2 == 0 {
            return 0;
        }
        if tz % 2 == 1 {
            s = k2;
        }
    }
    if odd == 1 {
        return s;
    }
    s * jacobi(d, odd)
}

/// Kronecker symbol extended to negative n by χ_d(-1) = sign(d).
pub fn kronecker_signed(d: i64, n: i64) -> i8 {
    let v = kronecker(d, n.unsigned_abs());
    if n < 0 && d < 0 {
        -v
    } else {
        v
    }
}

/// χ_d(n) for 0 <= n < |d| + `extra`, i.e. one period extended by `extra`
/// entries so any window of that length starting inside the first period
/// is contiguous. Built multiplicatively from a smallest-prime-factor table
/// covering |d|.
pub fn character_table(d: i64, spf: &[u32], extra: usize) -> Vec<i8> {
    let m = d.unsigned_abs() as usize;
    assert!(spf.len() > m, "smallest-prime-factor table too short for d={d}");
    let mut chi = vec![0i8; m + extra];
    if m == 1 {
        chi.fill(1);
        return chi;
    }
    chi[1] = 1;
    for n in 2..m {
        let p = spf[n] as usize;
        chi[n] = if p == n {
            kronecker(d, p as u64)
        } else {
            chi[p] * chi[n / p]
        };
    }
    for i in m..m + extra {
        chi[i] = chi[i - m];
    }
    chi
}
