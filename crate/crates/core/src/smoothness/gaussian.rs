use nalgebra::{DMatrix, DVector};
use crate::error::{Error, Result};

/// Densities are clamped below at this value.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Multivariate normal density with a cached Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianModel {
    pub mean: Vec<f64>,
    /// Row-major `D x D`.
    pub covariance: Vec<f64>,
    pub log_normalizer: f64,
    chol: Vec<f64>,
}

impl GaussianModel {
    fn from_moments(mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::ContractViolation("covariance not positive definite".into()))?;
        let l = chol.l();
        let log_det: f64 = 2.0 * (0..d).map(|i| l[(i, i)].ln()).sum::<f64>();
        let log_normalizer = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
        Ok(GaussianModel {
            mean,
            covariance: cov.transpose().as_slice().to_vec(),
            log_normalizer,
            chol: l.transpose().as_slice().to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        // forward substitution L y = x - mean, with L stored row-major
        let mut y = vec![0.0; d];
        for i in 0..d {
            let mut acc = x[i] - self.mean[i];
            for j in 0..i {
                acc -= self.chol[i * d + j] * y[j];
            }
            y[i] = acc / self.chol[i * d + i];
        }
        self.log_normalizer - 0.5 * y.iter().map(|v| v * v).sum::<f64>()
    }

    /// Density clamped below at [`DENSITY_FLOOR`].
    pub fn density(&self, x: &[f64]) -> f64 {
        self.log_density(x).exp().max(DENSITY_FLOOR)
    }
}

/// Running first and second moments about a fixed shift.
#[derive(Debug, Clone)]
pub(crate) struct Moments {
    pub n: usize,
    shift: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl Moments {
    pub fn new(shift: Vec<f64>) -> Self {
        let d = shift.len();
        Moments {
            n: 0,
            shift,
            s1: vec![0.0; d],
            s2: vec![0.0; d * d],
        }
    }

    pub fn add(&mut self, x: &[f64]) {
        let d = self.shift.len();
        self.n += 1;
        for i in 0..d {
            let xi = x[i] - self.shift[i];
            self.s1[i] += xi;
            for j in 0..d {
                self.s2[i * d + j] += xi * (x[j] - self.shift[j]);
            }
        }
    }

    /// `self - other`, both about the same shift.
    pub fn minus(&self, other: &Moments) -> Moments {
        Moments {
            n: self.n - other.n,
            shift: self.shift.clone(),
            s1: self.s1.iter().zip(&other.s1).map(|(a, b)| a - b).collect(),
            s2: self.s2.iter().zip(&other.s2).map(|(a, b)| a - b).collect(),
        }
    }

    /// Maximum-likelihood fit with a ridge; diagonal when `n < D + 2`.
    pub fn fit(&self) -> Result<GaussianModel> {
        if self.n < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: self.n,
            });
        }
        let d = self.shift.len();
        let n = self.n as f64;
        let m: Vec<f64> = self.s1.iter().map(|v| v / n).collect();
        let mut cov = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                cov[(i, j)] = self.s2[i * d + j] / n - m[i] * m[j];
            }
        }
        // symmetrize away rounding
        let cov = (&cov + cov.transpose()) * 0.5;
        let diagonal = self.n < d + 2;
        let trace: f64 = (0..d).map(|i| cov[(i, i)].max(0.0)).sum();
        let eps = 1e-6 * (trace / d as f64).max(1.0);
        let mut reg = if diagonal {
            DMatrix::from_diagonal(&DVector::from_iterator(
                d,
                (0..d).map(|i| cov[(i, i)].max(0.0)),
            ))
        } else {
            cov
        };
        for i in 0..d {
            reg[(i, i)] += eps;
        }
        let mean: Vec<f64> = m.iter().zip(&self.shift).map(|(a, s)| a + s).collect();
        GaussianModel::from_moments(mean.clone(), reg.clone()).or_else(|_| {
            // numerically indefinite full covariance: fall back to its diagonal
            let diag = DMatrix::from_diagonal(&DVector::from_iterator(
                d,
                (0..d).map(|i| reg[(i, i)].max(eps)),
            ));
            GaussianModel::from_moments(mean, diag)
        })
    }
}

pub(crate) fn mean_of(points: &[&[f64]]) -> Vec<f64> {
    let d = points.first().map_or(0, |p| p.len());
    let mut m = vec![0.0; d];
    for p in points {
        for (a, b) in m.iter_mut().zip(p.iter()) {
            *a += b;
        }
    }
    let n = points.len().max(1) as f64;
    m.iter_mut().for_each(|v| *v /= n);
    m
}

/// Maximum-likelihood Gaussian of `points`.
///
/// The covariance gets `1e-6 * max(trace / D, 1)` added to its diagonal and is
/// kept diagonal when there are fewer than `D + 2` points.
pub fn fit_gaussian(points: &[&[f64]]) -> Result<GaussianModel> {
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: points.len(),
        });
    }
    let mut m = Moments::new(mean_of(points));
    for p in points {
        m.add(p);
    }
    m.fit()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_corners_use_diagonal_moments() {
        let pts: [&[f64]; 3] = [&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]];
        let g = fit_gaussian(&pts).unwrap();
        assert!((g.mean[0] - 1.0 / 3.0).abs() < 1e-12 && (g.mean[1] - 1.0 / 3.0).abs() < 1e-12);
        // ML variance of {0, 1, 0} is 2/9; 3 points < D + 2 so the fit is diagonal
        let eps = 1e-6;
        assert!((g.covariance[0] - (2.0 / 9.0 + eps)).abs() < 1e-12);
        assert!((g.covariance[3] - (2.0 / 9.0 + eps)).abs() < 1e-12);
        assert_eq!(g.covariance[1], 0.0);
    }

    #[test]
    fn full_covariance_matches_sample_moments() {
        let raw = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 2.0]];
        let pts: Vec<&[f64]> = raw.iter().map(|p| p.as_slice()).collect();
        let g = fit_gaussian(&pts).unwrap();
        let n = raw.len() as f64;
        let mx = raw.iter().map(|p| p[0]).sum::<f64>() / n;
        let my = raw.iter().map(|p| p[1]).sum::<f64>() / n;
        let sxx = raw.iter().map(|p| (p[0] - mx).powi(2)).sum::<f64>() / n;
        let sxy = raw.iter().map(|p| (p[0] - mx) * (p[1] - my)).sum::<f64>() / n;
        let syy = raw.iter().map(|p| (p[1] - my).powi(2)).sum::<f64>() / n;
        let eps = 1e-6;
        assert!((g.covariance[0] - sxx - eps).abs() < 1e-12);
        assert!((g.covariance[1] - sxy).abs() < 1e-12);
        assert!((g.covariance[2] - sxy).abs() < 1e-12);
        assert!((g.covariance[3] - syy - eps).abs() < 1e-12);
    }

    #[test]
    fn identical_points_stay_finite() {
        let pts: [&[f64]; 2] = [&[1.0, 2.0], &[1.0, 2.0]];
        let g = fit_gaussian(&pts).unwrap();
        assert_eq!(g.covariance, vec![1e-6, 0.0, 0.0, 1e-6]);
        assert!(g.density(&[1.0, 2.0]).is_finite());
        assert!(g.density(&[50.0, 2.0]) >= DENSITY_FLOOR);
    }

    #[test]
    fn too_few_points() {
        let pts: [&[f64]; 1] = [&[1.0]];
        assert!(matches!(fit_gaussian(&pts), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn mode_at_mean_and_normalized() {
        let raw = [[0.0], [1.0], [2.0], [3.0], [4.0]];
        let pts: Vec<&[f64]> = raw.iter().map(|p| p.as_slice()).collect();
        let g = fit_gaussian(&pts).unwrap();
        let peak = g.density(&g.mean);
        for x in [-1.0, 0.5, 1.9, 2.1, 6.0] {
            assert!(g.density(&[x]) < peak);
        }
        // trapezoid integral over +-12 sigma
        let sd = g.covariance[0].sqrt();
        let (a, b, n) = (2.0 - 12.0 * sd, 2.0 + 12.0 * sd, 20000);
        let h = (b - a) / n as f64;
        let integral: f64 = (0..=n)
            .map(|k| {
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                w * g.density(&[a + k as f64 * h])
            })
            .sum::<f64>()
            * h;
        assert!((integral - 1.0).abs() < 1e-6);
    }
}
