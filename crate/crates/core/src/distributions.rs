//! Distribution functions and moments under Benford's law and the
//! Generalized Benford family.

use std::sync::OnceLock;

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};

/// `log10(e)`; also the common mean of the nine sum-invariant digit sums.
pub const C: f64 = std::f64::consts::LOG10_E;

/// `ln(9!)`, used by the product form of the fractional-significand CDF.
const LN_FACT_9: f64 = 12.801_827_480_081_469;

/// Below this `|alpha|` the Generalized Benford family is evaluated in its
/// Benford limit.
pub const GB_ALPHA_EPS: f64 = 1e-8;

fn check_unit(u: f64) -> Result<()> {
    if (0.0..1.0).contains(&u) {
        Ok(())
    } else {
        Err(Error::domain(format!("u = {u} not in [0, 1)")))
    }
}

fn check_significand(u: f64) -> Result<()> {
    if (1.0..10.0).contains(&u) {
        Ok(())
    } else {
        Err(Error::domain(format!("u = {u} not in [1, 10)")))
    }
}

fn check_digit(d: u8) -> Result<()> {
    if (1..=9).contains(&d) {
        Ok(())
    } else {
        Err(Error::domain(format!("digit {d} not in 1..=9")))
    }
}

/// Distribution function of the significand: `log10(u)`.
pub fn benford_cdf(u: f64) -> Result<f64> {
    check_significand(u)?;
    Ok(u.log10())
}

/// First-digit law `log10(1 + 1/d)`.
pub fn first_digit_pmf(d: u8) -> Result<f64> {
    check_digit(d)?;
    Ok(digit_prob(d))
}

#[inline]
pub(crate) fn digit_prob(d: u8) -> f64 {
    C * (1.0 / d as f64).ln_1p()
}

/// Probability that the first two significant digits are `d1 d2`.
pub fn two_digit_pmf(d1: u8, d2: u8) -> Result<f64> {
    check_digit(d1)?;
    if d2 > 9 {
        return Err(Error::domain(format!("second digit {d2} not in 0..=9")));
    }
    Ok(C * (1.0 / (10 * d1 as u32 + d2 as u32) as f64).ln_1p())
}

/// Distribution function of the fractional significand.
pub fn frac_cdf(u: f64) -> Result<f64> {
    check_unit(u)?;
    Ok(C * (1..=9).map(|d| (u / d as f64).ln_1p()).sum::<f64>())
}

/// Same function via a single logarithm of a product; used on the hot path
/// of the test statistics. Agrees with [`frac_cdf`] to about 1e-15.
#[inline]
pub(crate) fn frac_cdf_fast(u: f64) -> f64 {
    let p = (1.0 + u)
        * (2.0 + u)
        * (3.0 + u)
        * (4.0 + u)
        * (5.0 + u)
        * (6.0 + u)
        * (7.0 + u)
        * (8.0 + u)
        * (9.0 + u);
    (C * (p.ln() - LN_FACT_9)).max(0.0)
}

/// Density of the fractional significand, `sum_d C / (d + u)`.
pub fn frac_pdf(u: f64) -> Result<f64> {
    check_unit(u)?;
    Ok((1..=9).map(|d| C / (d as f64 + u)).sum())
}

/// Joint distribution function of the first digit and the fractional
/// significand.
pub fn joint_cdf(v: f64, u: f64) -> Result<f64> {
    check_significand(v)?;
    check_unit(u)?;
    let top = v.floor() as u32;
    Ok(C * (1..=top).map(|j| (u / j as f64).ln_1p()).sum::<f64>())
}

/// Distribution function of the fractional significand given first digit `d`.
pub fn conditional_frac_cdf(u: f64, d: u8) -> Result<f64> {
    check_unit(u)?;
    check_digit(d)?;
    Ok(C * (u / d as f64).ln_1p() / digit_prob(d))
}

/// Mean of the fractional significand given first digit `d`: `C / p_d - d`.
pub fn conditional_frac_mean(d: u8) -> Result<f64> {
    check_digit(d)?;
    Ok(C / digit_prob(d) - d as f64)
}

/// Largest exponent accepted by [`mixed_moment`].
pub const MAX_MOMENT_ORDER: u32 = 8;

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `E[D^r <S>^s]` under Benford's law, in closed form.
pub fn mixed_moment(r: u32, s: u32) -> Result<f64> {
    if r > MAX_MOMENT_ORDER || s > MAX_MOMENT_ORDER {
        return Err(Error::domain(format!(
            "moment order ({r}, {s}) above cap {MAX_MOMENT_ORDER}"
        )));
    }
    let power_sum = |e: u32| -> f64 { (1..=9u8).map(|d| (d as f64).powi(e as i32) * digit_prob(d)).sum() };
    if s == 0 {
        return Ok(power_sum(r));
    }
    let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
    let mut inner_total = 0.0;
    for d in 1..=9u32 {
        let df = d as f64;
        let ratio = 1.0 + 1.0 / df;
        let mut inner = 0.0;
        for j in 1..=s {
            let alt = if (s - j) % 2 == 0 { 1.0 } else { -1.0 };
            inner += binomial(s, j) * alt * (ratio.powi(j as i32) - 1.0) / j as f64;
        }
        inner_total += df.powi((r + s) as i32) * inner;
    }
    Ok(sign * power_sum(r + s) + C * inner_total)
}

/// Correlation between the first digit and the fractional significand.
pub fn digit_frac_correlation() -> f64 {
    let e_d = mixed_moment(1, 0).expect("order within cap");
    let e_d2 = mixed_moment(2, 0).expect("order within cap");
    let var_d = e_d2 - e_d * e_d;
    let num = 45.0 * C - var_d - 9.0 * C * e_d;
    let den = (var_d * (var_d + 18.0 * C * e_d - 81.0 * C * (C + 0.5))).sqrt();
    num / den
}

/// Significand distribution function of the Generalized Benford law.
pub fn gb_cdf(u: f64, alpha: f64) -> Result<f64> {
    check_significand(u)?;
    if alpha.abs() < GB_ALPHA_EPS {
        return Ok(u.log10());
    }
    Ok((u.powf(alpha) - 1.0) / (10f64.powf(alpha) - 1.0))
}

/// Fractional-significand distribution function of the Generalized Benford law.
pub fn gb_frac_cdf(u: f64, alpha: f64) -> Result<f64> {
    if alpha.abs() < GB_ALPHA_EPS {
        return frac_cdf(u);
    }
    check_unit(u)?;
    let sum: f64 = (1..=9)
        .map(|d| {
            let d = d as f64;
            (d + u).powf(alpha) - d.powf(alpha)
        })
        .sum();
    Ok(sum / (10f64.powf(alpha) - 1.0))
}

pub type Mat8 = SMatrix<f64, 8, 8>;
pub type Mat9 = SMatrix<f64, 9, 9>;
pub type Mat89 = SMatrix<f64, 8, 9>;

/// Means and covariances of the first-digit indicator vector (digits 1..8)
/// and the digit-wise significand sums (digits 1..9) under Benford's law.
#[derive(Debug, Clone)]
pub struct BenfordMoments {
    pub p: [f64; 9],
    pub c: f64,
    pub mu1: SVector<f64, 8>,
    pub mu2: SVector<f64, 9>,
    pub sigma1: Mat8,
    pub sigma2: Mat9,
    pub sigma12: Mat89,
    pub sigma1_inv: Mat8,
    pub sigma2_inv: Mat9,
}

impl BenfordMoments {
    /// Shared instance, built on first use.
    pub fn get() -> &'static BenfordMoments {
        static MOMENTS: OnceLock<BenfordMoments> = OnceLock::new();
        MOMENTS.get_or_init(Self::build)
    }

    fn build() -> Self {
        let mut p = [0.0; 9];
        for (i, slot) in p.iter_mut().enumerate() {
            *slot = digit_prob(i as u8 + 1);
        }
        let mu1 = SVector::<f64, 8>::from_fn(|i, _| p[i]);
        let mu2 = SVector::<f64, 9>::repeat(C);
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let sigma1 = Mat8::from_fn(|i, j| p[i] * delta(i, j) - p[i] * p[j]);
        let sigma2 = Mat9::from_fn(|i, j| C * ((i + 1) as f64 + 0.5) * delta(i, j) - C * C);
        let sigma12 = Mat89::from_fn(|i, j| C * delta(i, j) - C * p[i]);

        let chol1 = sigma1.cholesky().expect("Sigma1 is positive definite");
        let chol2 = sigma2.cholesky().expect("Sigma2 is positive definite");
        let sigma1_inv = chol1.inverse();
        let sigma2_inv = chol2.inverse();

        let cond = |m: &[f64]| {
            let max = m.iter().cloned().fold(f64::MIN, f64::max);
            let min = m.iter().cloned().fold(f64::MAX, f64::min);
            max / min
        };
        log::debug!(
            "condition numbers: Sigma1 {:.1}, Sigma2 {:.1}",
            cond(sigma1.symmetric_eigenvalues().as_slice()),
            cond(sigma2.symmetric_eigenvalues().as_slice())
        );

        Self {
            p,
            c: C,
            mu1,
            mu2,
            sigma1,
            sigma2,
            sigma12,
            sigma1_inv,
            sigma2_inv,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn first_digit_law() {
        assert_abs_diff_eq!(first_digit_pmf(1).unwrap(), 0.301_03, epsilon = 5e-6);
        assert_abs_diff_eq!(first_digit_pmf(9).unwrap(), (10.0f64 / 9.0).log10(), epsilon = 1e-15);
        let total: f64 = (1..=9).map(|d| first_digit_pmf(d).unwrap()).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-14);
        assert!(first_digit_pmf(0).is_err());
        assert!(first_digit_pmf(10).is_err());
    }

    #[test]
    fn two_digit_law_sums_to_one() {
        let mut total = 0.0;
        for d1 in 1..=9 {
            for d2 in 0..=9 {
                total += two_digit_pmf(d1, d2).unwrap();
            }
            let marginal: f64 = (0..=9).map(|d2| two_digit_pmf(d1, d2).unwrap()).sum();
            assert_abs_diff_eq!(marginal, digit_prob(d1), epsilon = 1e-15);
        }
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn significand_cdf() {
        assert_eq!(benford_cdf(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(benford_cdf(2.0).unwrap(), 0.301_03, epsilon = 5e-6);
        assert!(benford_cdf(crate::significand::BELOW_TEN).unwrap() > 1.0 - 1e-15);
        assert!(benford_cdf(10.0).is_err());
        assert!(benford_cdf(0.5).is_err());
    }

    #[test]
    fn frac_cdf_endpoints() {
        assert_eq!(frac_cdf(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(frac_cdf(1.0 - 1e-15).unwrap(), 1.0, epsilon = 1e-13);
        assert!(frac_cdf(1.0).is_err());
        assert!(frac_cdf(-0.1).is_err());
    }

    #[test]
    fn fast_frac_cdf_agrees() {
        for i in 0..=10_000 {
            let u = i as f64 / 10_001.0;
            assert_abs_diff_eq!(frac_cdf_fast(u), frac_cdf(u).unwrap(), epsilon = 2e-15);
        }
    }

    #[test]
    fn frac_pdf_values() {
        let h9: f64 = (1..=9).map(|d| 1.0 / d as f64).sum();
        assert_abs_diff_eq!(frac_pdf(0.0).unwrap(), C * h9, epsilon = 1e-14);
        assert_abs_diff_eq!(frac_pdf(0.0).unwrap(), 1.228_605_302_177_89, epsilon = 1e-13);
        assert!(frac_pdf(0.0).unwrap() > frac_pdf(0.99).unwrap());
    }

    #[test]
    fn joint_and_conditional() {
        assert_abs_diff_eq!(joint_cdf(1.5, 0.5).unwrap(), 1.5f64.log10(), epsilon = 1e-15);
        assert_abs_diff_eq!(joint_cdf(9.5, 0.3).unwrap(), frac_cdf(0.3).unwrap(), epsilon = 1e-15);
        assert_abs_diff_eq!(joint_cdf(9.999, 1.0 - 1e-15).unwrap(), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(
            conditional_frac_cdf(0.5, 1).unwrap(),
            1.5f64.log10() / 2f64.log10(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(conditional_frac_cdf(0.5, 1).unwrap(), 0.584_96, epsilon = 5e-6);
        for d in 1..=9 {
            assert_abs_diff_eq!(conditional_frac_cdf(1.0 - 1e-15, d).unwrap(), 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(conditional_frac_mean(1).unwrap(), 0.442_70, epsilon = 5e-6);
        for d in 1..=9 {
            let m = conditional_frac_mean(d).unwrap();
            assert!((m - 0.5).abs() < 0.06, "d = {d}: {m}");
        }
    }

    #[test]
    fn mixed_moments_published_values() {
        assert_abs_diff_eq!(mixed_moment(0, 0).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(mixed_moment(1, 0).unwrap(), 3.440_24, epsilon = 5e-6);
        assert_abs_diff_eq!(mixed_moment(2, 0).unwrap(), 17.8917, epsilon = 5e-5);
        assert_abs_diff_eq!(mixed_moment(0, 1).unwrap(), 0.468_41, epsilon = 5e-6);
        assert_abs_diff_eq!(mixed_moment(0, 2).unwrap(), 0.302_816_504_255_04, epsilon = 1e-12);
        assert_abs_diff_eq!(mixed_moment(1, 1).unwrap(), 1.651_51, epsilon = 5e-6);
        assert!(mixed_moment(9, 0).is_err());
        assert!(mixed_moment(0, 9).is_err());
    }

    #[test]
    fn mixed_moment_matches_pmf_sums() {
        for r in 1..=3 {
            let direct: f64 = (1..=9u8).map(|d| (d as f64).powi(r as i32) * digit_prob(d)).sum();
            assert_abs_diff_eq!(mixed_moment(r, 0).unwrap(), direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn correlation_value_and_definition() {
        let rho = digit_frac_correlation();
        assert_abs_diff_eq!(rho, 0.056_36, epsilon = 5e-6);
        let ed = mixed_moment(1, 0).unwrap();
        let ed2 = mixed_moment(2, 0).unwrap();
        let es = mixed_moment(0, 1).unwrap();
        let es2 = mixed_moment(0, 2).unwrap();
        let eds = mixed_moment(1, 1).unwrap();
        let by_def = (eds - ed * es) / ((ed2 - ed * ed) * (es2 - es * es)).sqrt();
        assert_abs_diff_eq!(rho, by_def, epsilon = 1e-12);
        assert_abs_diff_eq!(ed2 - ed * ed, 6.056_51, epsilon = 5e-6);
        assert_abs_diff_eq!(es2 - es * es, 0.083_405_419_054_61, epsilon = 1e-12);
    }

    #[test]
    fn generalized_benford() {
        assert_abs_diff_eq!(gb_cdf(2.0, 0.0).unwrap(), 0.301_03, epsilon = 5e-6);
        assert_abs_diff_eq!(gb_cdf(5.5, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(gb_cdf(3.0, 1e-9).unwrap(), gb_cdf(3.0, 0.0).unwrap(), epsilon = 1e-8);
        // Continuity just above the switch-over.
        assert_abs_diff_eq!(gb_cdf(3.0, 2e-8).unwrap(), 3f64.log10(), epsilon = 1e-7);
        for &u in &[0.0, 0.2, 0.7] {
            assert_eq!(gb_frac_cdf(u, 0.0).unwrap(), frac_cdf(u).unwrap());
        }
        assert_abs_diff_eq!(gb_frac_cdf(0.5, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert!(gb_cdf(10.0, 1.0).is_err());
        assert!(gb_frac_cdf(1.0, 2.0).is_err());
    }

    #[test]
    fn moment_matrices() {
        let m = BenfordMoments::get();
        assert_abs_diff_eq!(m.p.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        assert_eq!(m.sigma1, m.sigma1.transpose());
        assert_eq!(m.sigma2, m.sigma2.transpose());
        assert!(m.sigma1.symmetric_eigenvalues().iter().all(|&e| e > 0.0));
        assert!(m.sigma2.symmetric_eigenvalues().iter().all(|&e| e > 0.0));
        let id8 = m.sigma1 * m.sigma1_inv;
        let id9 = m.sigma2 * m.sigma2_inv;
        assert!((id8 - Mat8::identity()).abs().max() < 1e-10);
        assert!((id9 - Mat9::identity()).abs().max() < 1e-10);
        assert_abs_diff_eq!(m.sigma12[(0, 0)], C - C * m.p[0], epsilon = 1e-15);
        assert_abs_diff_eq!(m.sigma12[(0, 8)], -C * m.p[0], epsilon = 1e-15);
    }
}
