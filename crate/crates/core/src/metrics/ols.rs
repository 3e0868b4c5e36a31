//! Ordinary least squares through a Householder QR factorisation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::MetricsError;

/// Relative size below which a diagonal entry of R counts as zero.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub beta: f64,
    pub standard_error: f64,
    pub t: f64,
    /// Two-sided, from the normal approximation to the t distribution.
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub coefficients: Vec<Coefficient>,
    pub residual_variance: f64,
    pub rss: f64,
    pub n: usize,
}

impl RegressionResult {
    pub fn get(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

fn two_sided_p(t: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    2.0 * normal.sf(t.abs())
}

/// Fits `y = X β + ε`. Column names label the coefficients.
pub fn ols(
    names: &[String],
    x: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<RegressionResult, MetricsError> {
    let (n, p) = x.shape();
    if names.len() != p || y.len() != n {
        return Err(MetricsError::InsufficientData(format!(
            "design is {n}x{p} with {} names and {} outcomes",
            names.len(),
            y.len()
        )));
    }
    if p == 0 || n <= p {
        return Err(MetricsError::InsufficientData(format!(
            "{n} observations for {p} parameters"
        )));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for j in 0..p {
        if r[(j, j)].abs() <= RANK_TOLERANCE * scale.max(1.0) {
            return Err(MetricsError::RankDeficient(format!(
                "column {:?} is a linear combination of earlier columns",
                names[j]
            )));
        }
    }
    let qty = qr.q().transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| MetricsError::RankDeficient("singular R".into()))?;
    let residuals = y - x * &beta;
    let rss = residuals.dot(&residuals);
    let sigma2 = rss / (n - p) as f64;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| MetricsError::RankDeficient("singular R".into()))?;

    let coefficients = (0..p)
        .map(|j| {
            // (XᵀX)⁻¹ = R⁻¹ R⁻ᵀ, so its j-th diagonal is the squared norm of row j of R⁻¹.
            let var = sigma2 * r_inv.row(j).norm_squared();
            let standard_error = var.sqrt();
            let t = beta[j] / standard_error;
            Coefficient {
                name: names[j].clone(),
                beta: beta[j],
                standard_error,
                t,
                p: two_sided_p(t),
            }
        })
        .collect();
    Ok(RegressionResult {
        coefficients,
        residual_variance: sigma2,
        rss,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn simple_line() {
        // y = 1 + 2x exactly
        let x = DMatrix::from_row_slice(4, 2, &[1., 0., 1., 1., 1., 2., 1., 3.]);
        let y = DVector::from_vec(vec![1., 3., 5., 7.]);
        let fit = ols(&names(2), &x, &y).unwrap();
        assert!((fit.coefficients[0].beta - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1].beta - 2.0).abs() < 1e-12);
        assert!(fit.rss < 1e-20);
    }

    #[test]
    fn textbook_standard_errors() {
        // Hand-computed: x = 1..5, y = [2, 4, 5, 4, 5]
        // slope 0.6, intercept 2.2, RSS 2.4, sigma² 0.8,
        // SE(slope) = sqrt(0.8 / 10), SE(intercept) = sqrt(0.8 * (1/5 + 9/10)).
        let x = DMatrix::from_row_slice(5, 2, &[1., 1., 1., 2., 1., 3., 1., 4., 1., 5.]);
        let y = DVector::from_vec(vec![2., 4., 5., 4., 5.]);
        let fit = ols(&names(2), &x, &y).unwrap();
        let [b0, b1] = [&fit.coefficients[0], &fit.coefficients[1]];
        assert!((b0.beta - 2.2).abs() < 1e-12);
        assert!((b1.beta - 0.6).abs() < 1e-12);
        assert!((fit.rss - 2.4).abs() < 1e-12);
        assert!((b1.standard_error - (0.08f64).sqrt()).abs() < 1e-12);
        assert!((b0.standard_error - (0.88f64).sqrt()).abs() < 1e-12);
        // t = 0.6 / sqrt(0.08) ≈ 2.1213; two-sided normal p ≈ 0.0339
        assert!((b1.p - 0.033894853524689).abs() < 1e-9);
    }

    #[test]
    fn degenerate_designs() {
        let x = DMatrix::from_row_slice(3, 2, &[1., 2., 1., 2., 1., 2.]);
        let y = DVector::from_vec(vec![1., 2., 3.]);
        assert!(matches!(
            ols(&names(2), &x, &y),
            Err(MetricsError::RankDeficient(_))
        ));
        let x = DMatrix::from_row_slice(2, 2, &[1., 0., 1., 1.]);
        let y = DVector::from_vec(vec![1., 2.]);
        assert!(matches!(
            ols(&names(2), &x, &y),
            Err(MetricsError::InsufficientData(_))
        ));
    }
}
