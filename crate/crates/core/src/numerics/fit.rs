//! Small least-squares fits used by the boundary and asymptotic suites.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub rms: f64,
}

/// Ordinary least squares `y ≈ slope · x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two samples");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    LinearFit {
        slope,
        intercept,
        rms,
    }
}

/// Fits `y ≈ c · ln t + b` and returns the fit (slope = c).
pub fn fit_log_coefficient(ts: &[f64], ys: &[f64]) -> LinearFit {
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    linear_fit(&lx, ys)
}

/// Fits `e ≈ C · r^p`; the returned slope is `p`.
pub fn fit_power_law(rs: &[f64], es: &[f64]) -> LinearFit {
    let lx: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = es.iter().map(|e| e.ln()).collect();
    linear_fit(&lx, &ly)
}
