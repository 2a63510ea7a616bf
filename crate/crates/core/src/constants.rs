//! Built-in constants for the Maclaurin expansions of log Γ and ζ.

/// Euler's constant γ.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082;

/// Stieltjes constants γ_0..γ_5 in ζ(1+s) = 1/s + Σ (-1)^n γ_n s^n / n!.
pub const STIELTJES: [f64; 6] = [
    0.577_215_664_901_532_860_606_512_090_082,
    -0.072_815_845_483_676_724_860_586_375_874_9,
    -0.009_690_363_192_872_318_484_530_386_035_21,
    0.002_053_834_420_303_345_866_160_046_542_75,
    0.002_325_370_065_467_300_057_468_170_177_53,
    0.000_793_323_817_301_062_701_753_334_877_444,
];

/// ζ(2), ζ(3), ..., ζ(15).
pub const ZETA_INTEGERS: [f64; 14] = [
    1.644_934_066_848_226_436_5,
    1.202_056_903_159_594_285_4,
    1.082_323_233_711_138_191_5,
    1.036_927_755_143_369_926_3,
    1.017_343_061_984_449_139_7,
    1.008_349_277_381_922_826_8,
    1.004_077_356_197_944_339_4,
    1.002_008_392_826_082_214_4,
    1.000_994_575_127_818_085_3,
    1.000_494_188_604_119_464_6,
    1.000_246_086_553_308_048_3,
    1.000_122_713_347_578_489_1,
    1.000_061_248_135_058_704_8,
    1.000_030_588_236_307_020_5,
];

/// ζ(n) for 2 <= n <= 15.
pub fn zeta(n: usize) -> f64 {
    ZETA_INTEGERS[n - 2]
}

/// Taylor coefficient c_n of log Γ(1+z) = Σ_{n>=1} c_n z^n, for n <= 15:
/// c_1 = -γ and c_n = (-1)^n ζ(n)/n.
pub fn loggamma_taylor(n: usize) -> f64 {
    match n {
        0 => 0.0,
        1 => -EULER_GAMMA,
        _ => {
            let s = if n % 2 == 0 { 1.0 } else { -1.0 };
            s * zeta(n) / n as f64
        }
    }
}

/// Taylor coefficients of ζ(1+s)·s up to s^6: 1 + Σ_{n=0}^{5} (-1)^n γ_n s^{n+1}/n!.
pub fn zeta_residue_taylor() -> [f64; 7] {
    let mut c = [0.0; 7];
    c[0] = 1.0;
    let mut fact = 1.0;
    for (n, &g) in STIELTJES.iter().enumerate() {
        if n > 0 {
            fact *= n as f64;
        }
        let s = if n % 2 == 0 { 1.0 } else { -1.0 };
        c[n + 1] = s * g / fact;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stieltjes_zero_is_euler_gamma() {
        assert_eq!(STIELTJES[0], EULER_GAMMA);
    }

    #[test]
    fn zeta_residue_series_at_one_tenth() {
        // ζ(1.1)·0.1 from an arbitrary-precision evaluation
        let reference = 1.058_444_846_495_080_1;
        let c = zeta_residue_taylor();
        let s = 0.1f64;
        let v: f64 = c.iter().enumerate().map(|(n, &a)| a * libm::pow(s, n as f64)).sum();
        assert!((v - reference).abs() < 1e-10, "{v}");
    }

    #[test]
    fn loggamma_series_at_small_argument() {
        // log Γ(1.05) from an arbitrary-precision evaluation
        let reference = -0.026_853_072_502_260_168;
        let z = 0.05f64;
        let v: f64 = (1..=15).map(|n| loggamma_taylor(n) * libm::pow(z, n as f64)).sum();
        assert!((v - reference).abs() < 1e-15, "{v}");
        assert!((libm::lgamma(1.05) - reference).abs() < 1e-15);
    }
}
