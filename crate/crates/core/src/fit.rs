//! Least-squares line fits.

use serde::{Deserialize, Serialize};

/// `y ≈ intercept + slope · x` with its coefficient of determination.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub fn line_fit(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for k in 0..n {
        let dx = x[k] - mx;
        let dy = y[k] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some(LineFit { slope, intercept, r_squared, points: n })
}

/// Fit of `log y ≈ a + n log ρ`; `rate = ρ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: f64,
    pub log_intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Log-linear fit of `values[k]` against `levels[k]`, skipping non-positive values.
pub fn rate_fit(levels: &[f64], values: &[f64]) -> Option<RateFit> {
    let (x, y): (Vec<f64>, Vec<f64>) =
        levels.iter().zip(values).filter(|(_, &v)| v > 0.0 && v.is_finite()).map(|(&n, &v)| (n, v.ln())).unzip();
    let f = line_fit(&x, &y)?;
    Some(RateFit { rate: f.slope.exp(), log_intercept: f.intercept, r_squared: f.r_squared, points: f.points })
}

/// `rate_fit` against `0, 1, 2, …`.
pub fn rate_fit_indexed(values: &[f64]) -> Option<RateFit> {
    let levels: Vec<f64> = (0..values.len()).map(|k| k as f64).collect();
    rate_fit(&levels, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_geometric_sequence() {
        let v: Vec<f64> = (0..10).map(|k| 3.0 * 0.5f64.powi(k)).collect();
        let f = rate_fit_indexed(&v).unwrap();
        assert!((f.rate - 0.5).abs() < 1e-12);
        assert!((f.log_intercept - 3f64.ln()).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(line_fit(&[1.0], &[2.0]).is_none());
        assert!(line_fit(&[1.0, 1.0], &[2.0, 3.0]).is_none());
        assert!(rate_fit_indexed(&[0.0, 0.0, 1.0]).is_none());
    }
}
