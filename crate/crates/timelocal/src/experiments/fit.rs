//! Least-squares power-law fits on log-log data, for asymptotic-order
//! measurements.

use crate::error::{Error, Result};
use crate::tol;

/// Fit of `ln y = slope * ln x + intercept`.
#[derive(Clone, Copy, Debug)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

impl SlopeFit {
    /// Rejects fits whose coefficient of determination is below `min_r2`.
    pub fn require_r2(self, min_r2: f64) -> Result<Self> {
        if self.r2 < min_r2 {
            return Err(Error::PoorFit {
                r2: self.r2,
                min_r2,
            });
        }
        Ok(self)
    }
}

/// Least squares on `(ln x, ln y)`. Requires strictly positive data and at
/// least [`tol::FIT_MIN_POINTS`] points so a slope estimate is meaningful.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < tol::FIT_MIN_POINTS {
        return Err(Error::TooFewPoints {
            need: tol::FIT_MIN_POINTS,
            got: xs.len(),
        });
    }
    if xs.iter().chain(ys.iter()).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "log-log fit needs finite positive data".into(),
        ));
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(ly.iter()).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "log-log fit needs at least two distinct abscissae".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(ly.iter())
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(SlopeFit {
        slope,
        intercept,
        r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_is_recovered() {
        let xs = [0.05, 0.075, 0.1, 0.15, 0.2];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 2.7 * x.powi(3)).collect();
        let fit = log_log_fit(&xs, &ys).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.intercept - 2.7_f64.ln()).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_data_lowers_r2_and_can_be_rejected() {
        let xs = [0.05, 0.075, 0.1, 0.15, 0.2];
        let ys = [1.0, 5.0, 1.2, 8.0, 1.1];
        let fit = log_log_fit(&xs, &ys).unwrap();
        assert!(fit.r2 < 0.99);
        assert!(matches!(
            fit.require_r2(crate::tol::FIT_MIN_R2),
            Err(Error::PoorFit { .. })
        ));
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(matches!(
            log_log_fit(&[0.1, 0.2], &[1.0, 2.0]),
            Err(Error::TooFewPoints { .. })
        ));
        let xs = [0.05, 0.075, 0.1, 0.15, 0.2];
        assert!(log_log_fit(&xs, &[1.0, 1.0, 0.0, 1.0, 1.0]).is_err());
        assert!(log_log_fit(&[0.1; 5], &[1.0, 2.0, 3.0, 4.0, 5.0]).is_err());
    }
}
