//! Power series in a few variables, truncated at a total degree.

use crate::error::{Error, Result};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Maximum number of variables.
pub const MAX_VARS: usize = 4;

/// A power series in `nvars` variables with every monomial of total degree
/// above `degree` discarded. Coefficients are stored densely, indexed by
/// Σ e_i (D+1)^i; entries of total degree > D stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    nvars: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

impl TruncatedSeries {
    pub fn zero(nvars: usize, degree: usize) -> Self {
        assert!(nvars <= MAX_VARS, "at most {MAX_VARS} variables");
        let len = (degree + 1).pow(nvars as u32);
        TruncatedSeries {
            nvars,
            degree,
            coeffs: vec![0.0; len],
        }
    }

    pub fn constant(nvars: usize, degree: usize, c: f64) -> Self {
        let mut s = Self::zero(nvars, degree);
        s.coeffs[0] = c;
        s
    }

    /// The series z_i.
    pub fn variable(nvars: usize, degree: usize, i: usize) -> Self {
        assert!(i < nvars);
        let mut s = Self::zero(nvars, degree);
        if degree >= 1 {
            s.coeffs[(degree + 1).pow(i as u32)] = 1.0;
        }
        s
    }

    /// Σ c_j z_j.
    pub fn linear(nvars: usize, degree: usize, c: &[f64]) -> Self {
        let mut s = Self::zero(nvars, degree);
        for (i, &ci) in c.iter().enumerate() {
            s = s.add(&Self::variable(nvars, degree, i).scale(ci));
        }
        s
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    fn index(&self, exps: &[usize]) -> Option<usize> {
        debug_assert_eq!(exps.len(), self.nvars);
        if exps.iter().sum::<usize>() > self.degree {
            return None;
        }
        let mut idx = 0;
        let mut stride = 1;
        for &e in exps {
            idx += e * stride;
            stride *= self.degree + 1;
        }
        Some(idx)
    }

    fn exponents(&self, mut idx: usize) -> [usize; MAX_VARS] {
        let mut e = [0; MAX_VARS];
        for slot in e.iter_mut().take(self.nvars) {
            *slot = idx % (self.degree + 1);
            idx /= self.degree + 1;
        }
        e
    }

    /// Coefficient of ∏ z_i^{e_i} (zero beyond the truncation degree).
    pub fn coeff(&self, exps: &[usize]) -> f64 {
        self.index(exps).map_or(0.0, |i| self.coeffs[i])
    }

    pub fn set_coeff(&mut self, exps: &[usize], value: f64) {
        let i = self
            .index(exps)
            .unwrap_or_else(|| panic!("monomial {exps:?} exceeds degree {}", self.degree));
        self.coeffs[i] = value;
    }

    pub fn constant_term(&self) -> f64 {
        self.coeffs[0]
    }

    /// (exponents, coefficient) for every stored monomial, in storage order.
    pub fn terms(&self) -> impl Iterator<Item = ([usize; MAX_VARS], f64)> + '_ {
        (0..self.coeffs.len()).filter_map(move |i| {
            let e = self.exponents(i);
            (e.iter().sum::<usize>() <= self.degree).then(|| (e, self.coeffs[i]))
        })
    }

    fn check_shape(&self, other: &Self) {
        assert!(
            self.nvars == other.nvars && self.degree == other.degree,
            "series shapes differ"
        );
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_shape(other);
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        for a in &mut out.coeffs {
            *a *= c;
        }
        out
    }

    pub fn add_constant(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_shape(other);
        let lhs: Vec<_> = self.terms().filter(|t| t.1 != 0.0).collect();
        let rhs: Vec<_> = other.terms().filter(|t| t.1 != 0.0).collect();
        let mut out = Self::zero(self.nvars, self.degree);
        let mut e = [0usize; MAX_VARS];
        for (ea, ca) in &lhs {
            let da: usize = ea.iter().sum();
            for (eb, cb) in &rhs {
                if da + eb.iter().sum::<usize>() > self.degree {
                    continue;
                }
                for v in 0..self.nvars {
                    e[v] = ea[v] + eb[v];
                }
                let i = out.index(&e[..self.nvars]).unwrap();
                out.coeffs[i] += ca * cb;
            }
        }
        out
    }

    /// Σ_n f_n s^n for a series s with zero constant term (nilpotent in the
    /// truncated ring, so at most degree+1 terms contribute).
    fn apply_nilpotent(&self, f: impl Fn(usize) -> f64) -> Self {
        debug_assert!(self.coeffs[0] == 0.0);
        let mut out = Self::constant(self.nvars, self.degree, f(0));
        let mut power = Self::constant(self.nvars, self.degree, 1.0);
        for n in 1..=self.degree {
            power = power.mul(self);
            let c = f(n);
            if c != 0.0 {
                out = out.add(&power.scale(c));
            }
        }
        out
    }

    pub fn exp(&self) -> Self {
        let c0 = self.coeffs[0];
        let u = self.add_constant(-c0);
        let mut fact = 1.0;
        let mut facts = vec![1.0];
        for n in 1..=self.degree {
            fact *= n as f64;
            facts.push(fact);
        }
        u.apply_nilpotent(|n| 1.0 / facts[n]).scale(libm::exp(c0))
    }

    /// Principal logarithm; the constant term must be positive.
    pub fn log(&self) -> Result<Self> {
        let c0 = self.coeffs[0];
        if !(c0 > 0.0) {
            return Err(Error::Domain(format!("log of a series with constant term {c0}")));
        }
        let mut u = self.scale(1.0 / c0);
        u.coeffs[0] = 0.0;
        let l = u.apply_nilpotent(|n| match n {
            0 => 0.0,
            _ if n % 2 == 1 => 1.0 / n as f64,
            _ => -1.0 / n as f64,
        });
        Ok(l.add_constant(libm::log(c0)))
    }

    /// Multiplicative inverse; the constant term must be nonzero.
    pub fn inv(&self) -> Result<Self> {
        let c0 = self.coeffs[0];
        if c0 == 0.0 {
            return Err(Error::Domain("inverse of a series with zero constant term".into()));
        }
        let mut u = self.scale(1.0 / c0);
        u.coeffs[0] = 0.0;
        Ok(u.apply_nilpotent(|n| if n % 2 == 0 { 1.0 } else { -1.0 }).scale(1.0 / c0))
    }

    /// f(Σ c_j z_j) for a univariate Taylor series f = Σ f_n t^n.
    pub fn compose_linear(nvars: usize, degree: usize, f: &[f64], c: &[f64]) -> Self {
        let l = Self::linear(nvars, degree, c);
        let mut out = Self::constant(nvars, degree, f.first().copied().unwrap_or(0.0));
        let mut power = Self::constant(nvars, degree, 1.0);
        for fn_ in f.iter().take(degree + 1).skip(1) {
            power = power.mul(&l);
            out = out.add(&power.scale(*fn_));
        }
        out
    }

    /// Drops (or zero-pads) to a new truncation degree.
    pub fn with_degree(&self, degree: usize) -> Self {
        let mut out = Self::zero(self.nvars, degree);
        for (e, c) in self.terms() {
            if let Some(i) = out.index(&e[..self.nvars]) {
                out.coeffs[i] = c;
            }
        }
        out
    }

    /// Value of the truncated polynomial at a point.
    pub fn evaluate(&self, z: &[f64]) -> f64 {
        self.terms()
            .map(|(e, c)| {
                let mut m = c;
                for v in 0..self.nvars {
                    m *= libm::pow(z[v], e[v] as f64);
                }
                m
            })
            .sum()
    }
}

/// Taylor coefficients of t -> g(c·t) up to t^degree, given those of g.
pub fn rescale(g: &[f64], c: f64) -> Vec<f64> {
    let mut p = 1.0;
    g.iter()
        .map(|&a| {
            let v = a * p;
            p *= c;
            v
        })
        .collect()
}
