//! Standard-normal and chi-square(1) quantiles.

use crate::error::{CkcError, Result};

// Coefficients from highest to lowest degree.
const CENTRAL_NUM: [f64; 8] = [
    2509.080_928_730_122_7,
    33430.575_583_588_13,
    67265.770_927_008_7,
    45921.953_931_549_87,
    13_731.693_765_509_46,
    1971.590_950_306_551_4,
    133.141_667_891_784_38,
    3.387_132_872_796_366_5,
];
const CENTRAL_DEN: [f64; 8] = [
    5226.495_278_852_546,
    28729.085_735_721_943,
    39307.895_800_092_71,
    21213.794_301_586_596,
    5394.196_021_424_751,
    687.187_007_492_057_9,
    42.313_330_701_600_91,
    1.0,
];
const NEAR_NUM: [f64; 8] = [
    7.745_450_142_783_414e-4,
    0.022_723_844_989_269_184,
    0.241_780_725_177_450_6,
    1.270_458_252_452_368_4,
    3.647_848_324_763_204_5,
    5.769_497_221_460_691,
    4.630_337_846_156_545,
    1.423_437_110_749_683_5,
];
const NEAR_DEN: [f64; 8] = [
    1.050_750_071_644_416_8e-9,
    5.475_938_084_995_345e-4,
    0.015_198_666_563_616_457,
    0.148_103_976_427_480_08,
    0.689_767_334_985_1,
    1.676_384_830_183_803_8,
    2.053_191_626_637_759,
    1.0,
];
const FAR_NUM: [f64; 8] = [
    2.010_334_399_292_288_1e-7,
    2.711_555_568_743_487_6e-5,
    0.001_242_660_947_388_078_4,
    0.026_532_189_526_576_124,
    0.296_560_571_828_504_9,
    1.784_826_539_917_291_3,
    5.463_784_911_164_114,
    6.657_904_643_501_103,
];
const FAR_DEN: [f64; 8] = [
    2.044_263_103_389_939_7e-15,
    1.421_511_758_316_446e-7,
    1.846_318_317_510_054_8e-5,
    7.868_691_311_456_133e-4,
    0.014_875_361_290_850_615,
    0.136_929_880_922_735_8,
    0.599_832_206_555_887_9,
    1.0,
];

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// Inverse of the standard normal CDF (Wichura, AS 241 `PPND16`).
///
/// Relative accuracy is about 1e-16 over the open unit interval.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(CkcError::OutOfDomain {
            name: "p",
            value: p,
            domain: "(0, 1)",
        });
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return Ok(q * horner(&CENTRAL_NUM, r) / horner(&CENTRAL_DEN, r));
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let r = (-tail.ln()).sqrt();
    let value = if r <= 5.0 {
        let r = r - 1.6;
        horner(&NEAR_NUM, r) / horner(&NEAR_DEN, r)
    } else {
        let r = r - 5.0;
        horner(&FAR_NUM, r) / horner(&FAR_DEN, r)
    };
    Ok(if q < 0.0 { -value } else { value })
}

/// Quantile of the chi-square distribution with one degree of freedom.
///
/// Computed as the square of the standard-normal quantile at `(1 + prob) / 2`.
pub fn chi_square_quantile_1df(prob: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(CkcError::OutOfDomain {
            name: "prob",
            value: prob,
            domain: "(0, 1)",
        });
    }
    let z = normal_quantile(0.5 * (1.0 + prob))?;
    Ok(z * z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

    #[test]
    fn reference_chi_square_values() {
        let q95 = chi_square_quantile_1df(0.95).unwrap();
        let q99 = chi_square_quantile_1df(0.99).unwrap();
        assert!((q95 - 3.841459).abs() < 1e-6, "{q95}");
        assert!((q99 - 6.634897).abs() < 1e-6, "{q99}");
        // High-precision references.
        assert!((q95 - 3.841_458_820_694_124).abs() < 1e-12);
        assert!((q99 - 6.634_896_601_021_214).abs() < 1e-12);
    }

    #[test]
    fn small_probability_goes_to_zero() {
        let q = chi_square_quantile_1df(1e-10).unwrap();
        assert!((0.0..1e-18).contains(&q), "{q}");
    }

    #[test]
    fn domain_errors() {
        for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert_eq!(chi_square_quantile_1df(bad).unwrap_err().name(), "OutOfDomain");
            assert!(normal_quantile(bad).is_err());
        }
    }

    #[test]
    fn normal_quantile_matches_independent_cdf() {
        // Invert through statrs' CDF: Φ(Φ⁻¹(p)) = p across all three rational branches.
        let normal = Normal::standard();
        for &p in &[1e-300, 1e-40, 1e-12, 1e-5, 0.01, 0.07, 0.2, 0.5, 0.6, 0.93, 0.999, 1.0 - 1e-9] {
            let z = normal_quantile(p).unwrap();
            let back = normal.cdf(z);
            assert!(((back - p) / p).abs() < 1e-9, "p={p} z={z} back={back}");
        }
    }

    #[test]
    fn chi_square_matches_statrs() {
        let chi = ChiSquared::new(1.0).unwrap();
        for i in 1..100 {
            let prob = i as f64 / 100.0;
            let ours = chi_square_quantile_1df(prob).unwrap();
            let theirs = chi.inverse_cdf(prob);
            assert!((ours - theirs).abs() <= 1e-7 * theirs.max(1e-3), "prob={prob}: {ours} vs {theirs}");
        }
    }
}
