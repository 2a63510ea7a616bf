//! Shanks-Mestre baby-step giant-step point counting on short Weierstrass
//! curves `y^2 = x^3 + A x + B` over F_p.
//!
//! Points are kept in homogeneous projective coordinates; baby and giant
//! steps are normalized with one batched inversion each. The group order is
//! pinned down once the lcm of the point orders found so far has a unique
//! multiple inside the Hasse interval.

use crate::arith::{factorize, ModP};
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Point {
    x: u64,
    y: u64,
    z: u64,
}

const INFINITY: Point = Point { x: 0, y: 1, z: 0 };

struct ShortCurve {
    m: ModP,
    a: u64,
    b: u64,
}

impl ShortCurve {
    fn rhs(&self, x: u64) -> u64 {
        let m = &self.m;
        let x2 = m.mul(x, x);
        m.add(m.add(m.mul(x2, x), m.mul(self.a, x)), self.b)
    }

    fn double(&self, p: Point) -> Point {
        let m = &self.m;
        if p.z == 0 || p.y == 0 {
            return INFINITY;
        }
        let xx = m.mul(p.x, p.x);
        let zz = m.mul(p.z, p.z);
        let w = m.add(m.mul(self.a, zz), m.mul(3, xx));
        let s = m.mul(p.y, p.z);
        let bb = m.mul(m.mul(p.x, p.y), s);
        let h = m.sub(m.mul(w, w), m.mul(8, bb));
        let x3 = m.mul(m.mul(2, h), s);
        let ss = m.mul(s, s);
        let yy = m.mul(p.y, p.y);
        let y3 = m.sub(
            m.mul(w, m.sub(m.mul(4, bb), h)),
            m.mul(8, m.mul(yy, ss)),
        );
        let z3 = m.mul(8, m.mul(ss, s));
        Point { x: x3, y: y3, z: z3 }
    }

    fn add(&self, p: Point, q: Point) -> Point {
        if p.z == 0 {
            return q;
        }
        if q.z == 0 {
            return p;
        }
        let m = &self.m;
        let u1 = m.mul(q.y, p.z);
        let u2 = m.mul(p.y, q.z);
        let v1 = m.mul(q.x, p.z);
        let v2 = m.mul(p.x, q.z);
        if v1 == v2 {
            return if u1 == u2 { self.double(p) } else { INFINITY };
        }
        let u = m.sub(u1, u2);
        let v = m.sub(v1, v2);
        let w = m.mul(p.z, q.z);
        let vv = m.mul(v, v);
        let vvv = m.mul(vv, v);
        let r = m.mul(vv, v2);
        let a = m.sub(m.sub(m.mul(m.mul(u, u), w), vvv), m.mul(2, r));
        Point {
            x: m.mul(v, a),
            y: m.sub(m.mul(u, m.sub(r, a)), m.mul(vvv, u2)),
            z: m.mul(vvv, w),
        }
    }

    fn mul(&self, p: Point, mut k: u64) -> Point {
        let mut acc = INFINITY;
        let mut base = p;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(acc, base);
            }
            base = self.double(base);
            k >>= 1;
        }
        acc
    }

    /// Affine x-coordinates of the given finite points, via one inversion.
    fn normalized_x(&self, pts: &[Point]) -> Vec<u64> {
        let m = &self.m;
        let mut prefix = Vec::with_capacity(pts.len());
        let mut acc = 1u64;
        for p in pts {
            prefix.push(acc);
            acc = m.mul(acc, p.z);
        }
        let mut inv = m.inv(acc);
        let mut out = alloc::vec![0u64; pts.len()];
        for i in (0..pts.len()).rev() {
            let zi_inv = m.mul(inv, prefix[i]);
            inv = m.mul(inv, pts[i].z);
            out[i] = m.mul(pts[i].x, zi_inv);
        }
        out
    }

    /// Exact order of `p`, given a multiple of it.
    fn order_from_multiple(&self, p: Point, mut n: u64) -> u64 {
        for (l, _) in factorize(n) {
            while n % l == 0 && self.mul(p, n / l).z == 0 {
                n /= l;
            }
        }
        n
    }

    /// Some m in [lo, hi] with m·p = O, or None if no such m exists.
    fn multiple_in_interval(&self, p: Point, lo: u64, hi: u64) -> Option<u64> {
        let width = hi - lo;
        let s = (libm::sqrt(width as f64 / 2.0) as u64).max(1);
        // baby steps 1..=s
        let mut baby = Vec::with_capacity(s as usize);
        let mut cur = p;
        for j in 1..=s {
            if cur.z == 0 {
                // order divides j: its multiples are all we need
                let ord = self.order_from_multiple(p, j);
                let first = lo.div_ceil(ord) * ord;
                return (first <= hi).then_some(first);
            }
            baby.push(cur);
            if j < s {
                cur = self.add(cur, p);
            }
        }
        let bx = self.normalized_x(&baby);
        let mut table: Vec<(u64, u64)> = bx.iter().enumerate().map(|(j, &x)| (x, j as u64 + 1)).collect();
        table.sort_unstable();

        let step = 2 * s + 1;
        let giant = self.mul(p, step);
        let mut centers = Vec::new();
        let mut points = Vec::new();
        let mut c = lo + s;
        let mut t = self.mul(p, c);
        loop {
            if t.z == 0 {
                return Some(c);
            }
            centers.push(c);
            points.push(t);
            if c + s >= hi {
                break;
            }
            c += step;
            t = self.add(t, giant);
        }
        let gx = self.normalized_x(&points);
        for (i, x) in gx.iter().enumerate() {
            let start = table.partition_point(|e| e.0 < *x);
            for &(bx, j) in &table[start..] {
                if bx != *x {
                    break;
                }
                let c = centers[i];
                for cand in [c.wrapping_sub(j), c + j] {
                    if cand >= lo && cand <= hi && self.mul(p, cand).z == 0 {
                        return Some(cand);
                    }
                }
            }
        }
        None
    }
}

fn isqrt(n: u64) -> u64 {
    let mut r = libm::sqrt(n as f64) as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// #E(F_p) for `y^2 = x^3 + a x + b`, p >= 5 prime with nonzero discriminant.
/// Returns None when the point orders found do not determine the group
/// order uniquely (callers fall back to an O(p) count).
pub fn group_order(a: u64, b: u64, p: u64) -> Option<u64> {
    let curve = ShortCurve {
        m: ModP::new(p),
        a: a % p,
        b: b % p,
    };
    let m = &curve.m;
    let bound = isqrt(4 * p);
    let lo = p + 1 - bound;
    let hi = p + 1 + bound;
    let mut lcm = 1u64;
    let mut found = 0;
    let mut x = 0u64;
    while found < 12 && x < p {
        let rhs = curve.rhs(x);
        x += 1;
        let y = match m.sqrt(rhs) {
            Some(y) => y,
            None => continue,
        };
        found += 1;
        let pt = Point { x: x - 1, y, z: 1 };
        let multiple = curve.multiple_in_interval(pt, lo, hi)?;
        let ord = curve.order_from_multiple(pt, multiple);
        lcm = lcm / crate::arith::gcd(lcm, ord) * ord;
        let first = lo.div_ceil(lcm) * lcm;
        if first + lcm > hi && first <= hi {
            return Some(first);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(a: u64, b: u64, p: u64) -> u64 {
        let m = ModP::new(p);
        let mut count = 1;
        for x in 0..p {
            let x2 = m.mul(x, x);
            let r = m.add(m.add(m.mul(x2, x), m.mul(a % p, x)), b % p);
            count += match m.legendre(r) {
                0 => 1,
                1 => 2,
                _ => 0,
            };
        }
        count
    }

    #[test]
    fn matches_brute_force_on_small_primes() {
        for p in crate::arith::primes_up_to(3000).into_iter().filter(|&p| p > 200) {
            for (a, b) in [(1u64, 1u64), (p - 27, 54), (2, 7)] {
                let disc = (4 * a % p * a % p * a + 27 * b % p * b) % p;
                if disc == 0 {
                    continue;
                }
                if let Some(n) = group_order(a, b, p) {
                    assert_eq!(n, brute(a, b, p), "p={p} a={a} b={b}");
                }
            }
        }
    }
}
