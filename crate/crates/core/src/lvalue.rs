//! Central values L_E(1, χ_d) of even-sign quadratic twists by the smoothed
//! series 2 Σ a_n χ_d(n)/n · exp(-2πn/(√Q|d|)), and vanishing classification.

use crate::arith::{smallest_prime_factors, CompensatedSum};
use crate::curve::{CoefficientTable, CurveSpec};
use crate::error::{Error, Result};
use crate::kronecker::{character_table, kronecker_signed};
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

/// Terms per chunk; the exponential weight is recomputed exactly at every
/// chunk start.
pub const CHUNK: usize = 1 << 12;
const LANES: usize = 8;

pub const DEFAULT_EPSILON: f64 = 1e-9;
pub const DEFAULT_GAP_MIN: f64 = 1e3;

/// Absolute truncation target and the required separation between the
/// zero cluster and the smallest nonzero value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanishingPolicy {
    pub epsilon: f64,
    pub gap_min: f64,
}

impl VanishingPolicy {
    pub fn new(epsilon: f64, gap_min: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        if !(gap_min >= 1e3) {
            return Err(Error::Config(format!("gap_min must be at least 1e3, got {gap_min}")));
        }
        Ok(VanishingPolicy { epsilon, gap_min })
    }

    pub fn zero_threshold(&self) -> f64 {
        libm::sqrt(self.epsilon)
    }
}

impl Default for VanishingPolicy {
    fn default() -> Self {
        VanishingPolicy {
            epsilon: DEFAULT_EPSILON,
            gap_min: DEFAULT_GAP_MIN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistRecord {
    pub d: i64,
    pub value: f64,
    pub err: f64,
    pub vanished: bool,
    pub terms_used: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LValue {
    pub value: f64,
    pub err: f64,
    pub terms: u64,
}

/// Tail bound 4 r^{N+1}/(1-r) for the terms beyond N, using |a_n χ_d(n)/n| <= 2.
pub fn tail_bound(sqrt_q: f64, d: i64, n: u64) -> f64 {
    let t = 2.0 * PI / (sqrt_q * d.unsigned_abs() as f64);
    4.0 * libm::exp(-t * (n as f64 + 1.0)) / -libm::expm1(-t)
}

/// Smallest N whose tail bound is below `epsilon`, with that bound.
pub fn terms_needed(conductor: u64, d: i64, epsilon: f64) -> (u64, f64) {
    let sqrt_q = libm::sqrt(conductor as f64);
    let t = 2.0 * PI / (sqrt_q * d.unsigned_abs() as f64);
    // 4 e^{-t(N+1)} / (1 - e^{-t}) < ε
    let denom = -libm::expm1(-t);
    let target = libm::log(4.0 / (epsilon * denom)) / t - 1.0;
    let mut n = libm::ceil(target).max(1.0) as u64;
    while n > 1 && tail_bound(sqrt_q, d, n - 1) < epsilon {
        n -= 1;
    }
    while tail_bound(sqrt_q, d, n) >= epsilon {
        n += 1;
    }
    (n, tail_bound(sqrt_q, d, n))
}

/// Largest N needed by any |d| <= `max_abs_d`.
pub fn max_terms_needed(conductor: u64, max_abs_d: u64, epsilon: f64) -> u64 {
    terms_needed(conductor, max_abs_d as i64, epsilon).0
}

/// Evaluator sharing the coefficients a_n/n across many discriminants.
#[derive(Debug, Clone)]
pub struct CentralValueEngine {
    conductor: u64,
    root_number: i8,
    sqrt_q: f64,
    /// weights[n] = a_n / n, weights[0] = 0.
    weights: Vec<f64>,
    spf: Vec<u32>,
}

impl CentralValueEngine {
    /// `max_abs_d` bounds the discriminants this engine will see; it sizes
    /// the factor table used to build character tables.
    pub fn new(curve: &CurveSpec, table: &CoefficientTable, max_abs_d: u64) -> Self {
        let mut weights = Vec::with_capacity(table.len() + 1);
        weights.push(0.0);
        weights.extend(
            table
                .values()
                .iter()
                .enumerate()
                .map(|(i, &a)| a as f64 / (i + 1) as f64),
        );
        CentralValueEngine {
            conductor: curve.conductor,
            root_number: curve.root_number,
            sqrt_q: libm::sqrt(curve.conductor as f64),
            weights,
            spf: smallest_prime_factors(max_abs_d.max(2) as usize),
        }
    }

    /// Number of coefficients available.
    pub fn capacity(&self) -> u64 {
        self.weights.len() as u64 - 1
    }

    /// L_E(1, χ_d) to absolute accuracy `epsilon`.
    pub fn evaluate(&self, d: i64, epsilon: f64) -> Result<LValue> {
        self.evaluate_group(&[d], epsilon).pop().unwrap()
    }

    fn prepare(&self, d: i64, epsilon: f64) -> Result<(u64, f64)> {
        let sign = kronecker_signed(d, -(self.conductor as i64)) as i64 * self.root_number as i64;
        if sign != 1 {
            return Err(Error::Contract(format!(
                "twist d={d} has functional-equation sign {sign}; the smoothed series needs +1"
            )));
        }
        if d.unsigned_abs() as usize >= self.spf.len() {
            return Err(Error::Capacity {
                needed: d.unsigned_abs(),
                available: self.spf.len() as u64 - 1,
            });
        }
        let (n_terms, err) = terms_needed(self.conductor, d, epsilon);
        if n_terms > self.capacity() {
            return Err(Error::Capacity {
                needed: n_terms,
                available: self.capacity(),
            });
        }
        Ok((n_terms, err))
    }

    /// Evaluates several discriminants in one pass over the coefficients,
    /// so each chunk of a_n/n is reused while it is in cache. Every value
    /// is bit-identical to evaluating its discriminant alone.
    pub fn evaluate_group(&self, ds: &[i64], epsilon: f64) -> Vec<Result<LValue>> {
        let mut out: Vec<Result<LValue>> = Vec::with_capacity(ds.len());
        let mut states = Vec::with_capacity(ds.len());
        for (i, &d) in ds.iter().enumerate() {
            match self.prepare(d, epsilon) {
                Ok((n, err)) => {
                    out.push(Ok(LValue { value: 0.0, err, terms: n }));
                    states.push(SumState::new(d, n as usize, self.sqrt_q, &self.spf, i));
                }
                Err(e) => out.push(Err(e)),
            }
        }
        let longest = states.iter().map(|s| s.n_terms).max().unwrap_or(0);
        let mut start = 1usize;
        while start <= longest {
            for st in states.iter_mut().filter(|s| s.n_terms >= start) {
                let end = (start + CHUNK - 1).min(st.n_terms);
                st.add_chunk(&self.weights[start..=end], start);
            }
            start += CHUNK;
        }
        for st in states {
            if let Ok(lv) = &mut out[st.slot] {
                lv.value = 2.0 * st.total.value();
            }
        }
        out
    }
}

/// Running state of Σ_{n=1}^{N} w_n χ(n) r^n for one discriminant: chunks
/// of CHUNK terms, an exact exponential at each chunk start and LANES
/// running powers inside.
struct SumState {
    slot: usize,
    period: usize,
    n_terms: usize,
    t: f64,
    chi: Vec<i8>,
    lane_init: [f64; LANES],
    step: f64,
    total: CompensatedSum,
}

impl SumState {
    fn new(d: i64, n_terms: usize, sqrt_q: f64, spf: &[u32], slot: usize) -> Self {
        let period = d.unsigned_abs() as usize;
        let t = 2.0 * PI / (sqrt_q * period as f64);
        let mut lane_init = [0.0f64; LANES];
        for (j, v) in lane_init.iter_mut().enumerate() {
            *v = libm::exp(-t * j as f64);
        }
        SumState {
            slot,
            period,
            n_terms,
            t,
            chi: character_table(d, spf, CHUNK),
            lane_init,
            step: libm::exp(-t * LANES as f64),
            total: CompensatedSum::new(),
        }
    }

    fn add_chunk(&mut self, w: &[f64], start: usize) {
        let base = libm::exp(-self.t * start as f64);
        let offset = start % self.period;
        let c = &self.chi[offset..offset + w.len()];
        let partial = chunk_sum(w, c, self.lane_init, self.step);
        self.total.add(partial * base);
    }
}

#[inline(always)]
fn chunk_sum_generic(w: &[f64], c: &[i8], lane_init: [f64; LANES], step: f64) -> f64 {
    let mut acc = [0.0f64; LANES];
    let mut pw = lane_init;
    let mut wc = w.chunks_exact(LANES);
    let mut cc = c.chunks_exact(LANES);
    for (wl, cl) in (&mut wc).zip(&mut cc) {
        for l in 0..LANES {
            acc[l] += wl[l] * cl[l] as f64 * pw[l];
            pw[l] *= step;
        }
    }
    let mut partial = 0.0;
    for (l, (&wv, &cv)) in wc.remainder().iter().zip(cc.remainder()).enumerate() {
        partial += wv * cv as f64 * pw[l];
    }
    for a in acc {
        partial += a;
    }
    partial
}

// Same arithmetic compiled for wider vectors. Rust never contracts a*b+c
// into a fused operation, so both paths give bit-identical results.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn chunk_sum_avx2(w: &[f64], c: &[i8], lane_init: [f64; LANES], step: f64) -> f64 {
    chunk_sum_generic(w, c, lane_init, step)
}

fn chunk_sum(w: &[f64], c: &[i8], lane_init: [f64; LANES], step: f64) -> f64 {
    #[cfg(target_arch = "x86_64")]
    if crate::cpu::has_avx2() {
        // SAFETY: the CPU and OS support AVX2 (checked above).
        return unsafe { chunk_sum_avx2(w, c, lane_init, step) };
    }
    chunk_sum_generic(w, c, lane_init, step)
}

/// Two-pass vanishing classification: |value| < √ε forms the zero cluster,
/// and the smallest remaining |value| must exceed the largest cluster
/// member (or ε when the cluster is empty) by the factor `gap_min`.
pub fn classify(mut records: Vec<TwistRecord>, policy: &VanishingPolicy) -> Result<Vec<TwistRecord>> {
    let threshold = policy.zero_threshold();
    let mut max_zero: Option<(f64, i64)> = None;
    let mut min_nonzero: Option<(f64, i64)> = None;
    for r in &records {
        if !(r.err < policy.epsilon) {
            return Err(Error::Contract(format!(
                "record d={} has error bound {:.3e} not below epsilon {:.1e}",
                r.d, r.err, policy.epsilon
            )));
        }
        if r.value < -r.err {
            return Err(Error::Contract(format!(
                "negative central value {:.6e} at d={} (error bound {:.1e})",
                r.value, r.d, r.err
            )));
        }
        let v = libm::fabs(r.value);
        if v < threshold {
            if max_zero.is_none_or(|(m, _)| v > m) {
                max_zero = Some((v, r.d));
            }
        } else if min_nonzero.is_none_or(|(m, _)| v < m) {
            min_nonzero = Some((v, r.d));
        }
    }
    if let Some((nz, nz_d)) = min_nonzero {
        let (z, z_d) = max_zero.unwrap_or((0.0, 0));
        let ratio = nz / z.max(policy.epsilon);
        if ratio < policy.gap_min {
            return Err(Error::Classification {
                zero_d: z_d,
                nonzero_d: nz_d,
                ratio,
                required: policy.gap_min,
            });
        }
    }
    for r in &mut records {
        r.vanished = libm::fabs(r.value) < threshold;
    }
    Ok(records)
}
