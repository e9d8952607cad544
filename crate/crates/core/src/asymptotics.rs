//! Large-sample theory of `(Q1, Q2)`: covariance of the digit indicator and
//! significand-sum vectors, their canonical correlations, the joint Laplace
//! transform of the limit `V = (V1, V2)`, a sampler for `V`, and the density
//! of the limit `T = (T1, T2)` of `(Q1, Q2)` under Benford's law.

use std::sync::OnceLock;

use nalgebra::{SMatrix, SVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::distributions::{BenfordMoments, Mat8, Mat9, Mat89};
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::special::{chi2_pdf, chi2_sf};

const EIGEN_FLOOR: f64 = 1e-14;

pub type Mat17 = SMatrix<f64, 17, 17>;

/// Canonical correlations between the two limiting Gaussian vectors.
#[derive(Debug, Clone)]
pub struct CanonicalStructure {
    /// Descending.
    pub rho: [f64; 8],
    /// `cor(V1, V2) = sqrt(2) / 12 * sum rho_j^2`.
    pub cor_v: f64,
    /// Joint covariance of the 8 indicator means and 9 significand sums.
    pub sigma: Mat17,
}

impl CanonicalStructure {
    pub fn get() -> &'static CanonicalStructure {
        static CS: OnceLock<CanonicalStructure> = OnceLock::new();
        CS.get_or_init(|| {
            let m = BenfordMoments::get();
            let rho = canonical_correlations();
            let sum_sq: f64 = rho.iter().map(|r| r * r).sum();
            let mut sigma = Mat17::zeros();
            sigma.fixed_view_mut::<8, 8>(0, 0).copy_from(&m.sigma1);
            sigma.fixed_view_mut::<9, 9>(8, 8).copy_from(&m.sigma2);
            sigma.fixed_view_mut::<8, 9>(0, 8).copy_from(&m.sigma12);
            sigma.fixed_view_mut::<9, 8>(8, 0).copy_from(&m.sigma12.transpose());
            CanonicalStructure {
                rho,
                cor_v: std::f64::consts::SQRT_2 / 12.0 * sum_sq,
                sigma,
            }
        })
    }

    pub fn sum_rho_sq(&self) -> f64 {
        self.rho.iter().map(|r| r * r).sum()
    }
}

fn inv_sqrt8(m: &Mat8) -> Mat8 {
    let e = m.symmetric_eigen();
    let d = SVector::<f64, 8>::from_fn(|i, _| 1.0 / e.eigenvalues[i].max(EIGEN_FLOOR).sqrt());
    &e.eigenvectors * Mat8::from_diagonal(&d) * e.eigenvectors.transpose()
}

fn inv_sqrt9(m: &Mat9) -> Mat9 {
    let e = m.symmetric_eigen();
    let d = SVector::<f64, 9>::from_fn(|i, _| 1.0 / e.eigenvalues[i].max(EIGEN_FLOOR).sqrt());
    &e.eigenvectors * Mat9::from_diagonal(&d) * e.eigenvectors.transpose()
}

fn whitened_cross() -> Mat89 {
    let m = BenfordMoments::get();
    inv_sqrt8(&m.sigma1) * m.sigma12 * inv_sqrt9(&m.sigma2)
}

fn descending(mut v: Vec<f64>) -> [f64; 8] {
    v.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut out = [0.0; 8];
    out.copy_from_slice(&v[..8]);
    out
}

/// Singular values of `Sigma1^{-1/2} Sigma12 Sigma2^{-1/2}`, descending.
pub fn canonical_correlations() -> [f64; 8] {
    let svd = whitened_cross().svd(false, false);
    descending(svd.singular_values.iter().copied().collect())
}

/// The same values from the eigenvalues of `M M^T`, as a cross-check.
pub fn canonical_correlations_eigen() -> [f64; 8] {
    let m = whitened_cross();
    let e = (m * m.transpose()).symmetric_eigen();
    descending(e.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect())
}

/// Joint Laplace transform `E[exp(-t1 V1 - t2 V2)]` of the limit of
/// `(Q1, Q2)`.
pub fn laplace_v(t1: f64, t2: f64) -> Result<f64> {
    if !(t1 >= 0.0 && t2 >= 0.0) {
        return Err(Error::domain(format!("Laplace arguments must be nonnegative, got ({t1}, {t2})")));
    }
    let cs = CanonicalStructure::get();
    let mut log = -0.5 * (1.0 + 2.0 * t2).ln();
    for r in cs.rho {
        log -= 0.5 * (1.0 + 2.0 * t1 + 2.0 * t2 + 4.0 * (1.0 - r * r) * t1 * t2).ln();
    }
    Ok(log.exp())
}

/// `E[V1 V2] = 72 + 2 sum rho_j^2`.
pub fn expected_v1v2() -> f64 {
    72.0 + 2.0 * CanonicalStructure::get().sum_rho_sq()
}

/// `B` draws of `(V1, V2)`: eight pairs of standard normals with
/// correlations `rho_j` plus one independent normal for `V2`. Draw `b` comes
/// from substream `b` of the seed.
pub fn sample_v(b: usize, seed: u64) -> Vec<(f64, f64)> {
    let rho = CanonicalStructure::get().rho;
    let root = StreamRng::new(seed);
    (0..b as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = root.substream(i);
            let mut v1 = 0.0;
            let mut v2 = 0.0;
            for r in rho {
                let z1: f64 = StandardNormal.sample(&mut rng);
                let e: f64 = StandardNormal.sample(&mut rng);
                let z2 = r * z1 + (1.0 - r * r).sqrt() * e;
                v1 += z1 * z1;
                v2 += z2 * z2;
            }
            let extra: f64 = StandardNormal.sample(&mut rng);
            (v1, v2 + extra * extra)
        })
        .collect()
}

/// Density of the limit `(T1, T2)`:
/// `x1^3 exp(-x2 / 2) / (96 sqrt(2 pi) sqrt(x2 - x1))` for `0 < x1 < x2`.
pub fn density_t(x1: f64, x2: f64) -> Result<f64> {
    if !(x1 > 0.0 && x2 > x1 && x2.is_finite()) {
        return Err(Error::domain(format!("density of T needs 0 < x1 < x2, got ({x1}, {x2})")));
    }
    let log = 3.0 * x1.ln() - 0.5 * x2 - (96.0f64).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * (x2 - x1).ln();
    Ok(log.exp())
}

/// `cor(T1, T2)` with `T1 ~ chi2_8` and `T2 - T1 ~ chi2_1` independent.
pub fn cor_t() -> f64 {
    let var1: f64 = 2.0 * 8.0;
    let var2 = var1 + 2.0 * 1.0;
    var1 / (var1 * var2).sqrt()
}

/// Asymptotic upper-tail probability of `QDelta`, from the chi-square law
/// with one degree of freedom.
pub fn qdelta_tail_p(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else {
        chi2_sf(t, 1.0)
    }
}

/// Factorized form of [`density_t`]: the chi-square densities with 8 and 1
/// degrees of freedom at `x1` and `x2 - x1`.
pub fn density_t_factorized(x1: f64, x2: f64) -> f64 {
    chi2_pdf(x1, 8.0) * chi2_pdf(x2 - x1, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // Computed independently in double precision by Cholesky whitening.
    const REFERENCE: [f64; 8] = [
        0.999_523_525_803,
        0.999_399_081_807,
        0.999_219_640_086,
        0.998_945_866_287,
        0.998_496_290_937,
        0.997_676_005_816,
        0.995_906_212_876,
        0.990_618_582_204,
    ];

    #[test]
    fn canonical_correlation_values() {
        let rho = canonical_correlations();
        for (got, want) in rho.iter().zip(REFERENCE) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(CanonicalStructure::get().cor_v, 0.9381, epsilon = 5e-4);
    }

    #[test]
    fn svd_and_eigen_agree() {
        let a = canonical_correlations();
        let b = canonical_correlations_eigen();
        for i in 0..8 {
            assert_abs_diff_eq!(a[i], b[i], epsilon = 1e-10);
        }
        assert!(a.windows(2).all(|w| w[0] >= w[1]));
        assert!(a[0] <= 1.0 && a[7] >= 0.0);
    }

    #[test]
    fn joint_covariance_is_symmetric_psd() {
        let s = CanonicalStructure::get().sigma;
        assert_abs_diff_eq!((s - s.transpose()).amax(), 0.0, epsilon = 1e-15);
        assert!(s.symmetric_eigenvalues().iter().all(|&l| l > -1e-12));
    }

    #[test]
    fn laplace_marginals_and_cross_moment() {
        assert_eq!(laplace_v(0.0, 0.0).unwrap(), 1.0);
        for t in [0.1, 0.7, 3.0] {
            assert_abs_diff_eq!(laplace_v(t, 0.0).unwrap(), (1.0 + 2.0 * t).powf(-4.0), epsilon = 1e-14);
            assert_abs_diff_eq!(laplace_v(0.0, t).unwrap(), (1.0 + 2.0 * t).powf(-4.5), epsilon = 1e-14);
        }
        assert!(laplace_v(-0.1, 0.0).is_err());
        // E[V1 V2] is the mixed second derivative at the origin.
        let h = 1e-4;
        let l = |a, b| laplace_v(a, b).unwrap();
        let mixed = (l(h, h) - l(h, 0.0) - l(0.0, h) + l(0.0, 0.0)) / (h * h);
        let fd = (l(2.0 * h, 2.0 * h) - l(2.0 * h, 0.0) - l(0.0, 2.0 * h) + 1.0) / (4.0 * h * h);
        let richardson = 2.0 * mixed - fd;
        assert_abs_diff_eq!(richardson, expected_v1v2(), epsilon = 1e-3);
        assert_abs_diff_eq!(expected_v1v2(), 87.919_370_304_213, epsilon = 1e-9);
    }

    #[test]
    fn density_factorizes() {
        for &(x1, x2) in &[(0.5, 0.7), (2.0, 2.5), (8.0, 9.0), (15.0, 30.0), (1.0, 40.0)] {
            let a = density_t(x1, x2).unwrap();
            let b = density_t_factorized(x1, x2);
            assert!(((a - b) / b).abs() < 1e-12, "({x1}, {x2}): {a} vs {b}");
        }
        assert!(density_t(0.0, 1.0).is_err());
        assert!(density_t(2.0, 2.0).is_err());
        assert_abs_diff_eq!(cor_t(), 2.0 * 2f64.sqrt() / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn qdelta_chi2_tail() {
        assert_abs_diff_eq!(qdelta_tail_p(6.634_896_601_021_214), 0.01, epsilon = 1e-12);
        assert_abs_diff_eq!(qdelta_tail_p(6.635), 0.01, epsilon = 1e-5);
        assert_abs_diff_eq!(qdelta_tail_p(3.841), 0.05, epsilon = 1e-4);
        assert_eq!(qdelta_tail_p(-2.0), 1.0);
    }

    #[test]
    fn sampled_v_moments() {
        let draws = sample_v(200_000, 17);
        let n = draws.len() as f64;
        let m1 = draws.iter().map(|d| d.0).sum::<f64>() / n;
        let m2 = draws.iter().map(|d| d.1).sum::<f64>() / n;
        let m12 = draws.iter().map(|d| d.0 * d.1).sum::<f64>() / n;
        // chi-square standard errors: sqrt(2k / n).
        assert!((m1 - 8.0).abs() < 3.0 * (16.0 / n).sqrt());
        assert!((m2 - 9.0).abs() < 3.0 * (18.0 / n).sqrt());
        let v1 = draws.iter().map(|d| (d.0 - m1).powi(2)).sum::<f64>() / n;
        let v2 = draws.iter().map(|d| (d.1 - m2).powi(2)).sum::<f64>() / n;
        let cor = (m12 - m1 * m2) / (v1 * v2).sqrt();
        assert_abs_diff_eq!(cor, 0.938, epsilon = 0.004);
        assert_eq!(sample_v(10, 17), draws[..10].to_vec());
    }
}
