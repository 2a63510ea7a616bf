//! Family runs: enumerate, build coefficients, evaluate in parallel
//! groups, classify.

use crate::cache;
use crate::error::AppResult;
use rayon::prelude::*;
use std::path::Path;
use twistvan_core::curve::{CoefficientTable, PrimeTable};
use twistvan_core::family::{enumerate_family, FamilySelector};
use twistvan_core::lvalue::{classify, max_terms_needed, CentralValueEngine, TwistRecord, VanishingPolicy};
use twistvan_core::CurveSpec;

/// Discriminants sharing one pass over the coefficients.
pub const GROUP: usize = 16;

/// a_p up to `limit`, through the cache directory when one is given.
pub fn prime_table(curve: &CurveSpec, limit: u64, cache_dir: Option<&Path>) -> AppResult<PrimeTable> {
    match cache_dir {
        Some(dir) => Ok(cache::load_or_build(&cache::cache_path(dir, curve), curve, limit)?.0),
        None => Ok(PrimeTable::new(curve, limit)?),
    }
}

/// Unclassified records for `ds`, in input order. Groups are evaluated in
/// parallel; each value is independent of the grouping.
pub fn evaluate_all(engine: &CentralValueEngine, ds: &[i64], epsilon: f64) -> AppResult<Vec<TwistRecord>> {
    let groups: Vec<_> = ds
        .par_chunks(GROUP)
        .map(|g| {
            engine
                .evaluate_group(g, epsilon)
                .into_iter()
                .zip(g)
                .map(|(r, &d)| {
                    r.map(|lv| TwistRecord {
                        d,
                        value: lv.value,
                        err: lv.err,
                        vanished: false,
                        terms_used: lv.terms,
                    })
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let mut out = Vec::with_capacity(ds.len());
    for r in groups.into_iter().flatten() {
        out.push(r?);
    }
    Ok(out)
}

/// Classified records for every discriminant of the family.
pub fn run_family(
    curve: &CurveSpec,
    sel: &FamilySelector,
    policy: &VanishingPolicy,
    cache_dir: Option<&Path>,
) -> AppResult<Vec<TwistRecord>> {
    let ds = enumerate_family(curve, sel)?;
    let n = max_terms_needed(curve.conductor, sel.bound, policy.epsilon);
    let primes = prime_table(curve, n, cache_dir)?;
    let table = CoefficientTable::from_prime_values(curve, n as usize, &primes.primes, &primes.ap)?;
    let engine = CentralValueEngine::new(curve, &table, sel.bound);
    let records = evaluate_all(&engine, &ds, policy.epsilon)?;
    Ok(classify(records, policy)?)
}

/// Runs `f` on a pool of `threads` workers (the global pool when None).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}
