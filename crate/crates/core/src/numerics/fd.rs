//! Central finite differences with Richardson extrapolation, plus Fornberg
//! weights for derivatives on arbitrary 1-D node sets.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FdError {
    #[error("StencilLeavesDomain: stencil [{lo}, {hi}] around x = {x} is not inside [{domain_lo}, {domain_hi}]")]
    StencilLeavesDomain {
        x: f64,
        lo: f64,
        hi: f64,
        domain_lo: f64,
        domain_hi: f64,
    },
    #[error("unsupported derivative order {0} (1..=3)")]
    UnsupportedOrder(u8),
    #[error("non-finite function value near x = {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdEstimate {
    pub value: f64,
    /// Difference between the two best extrapolants; a rough error indicator.
    pub error: f64,
}

const CON: f64 = 1.4;
const CON2: f64 = CON * CON;
const NTAB: usize = 10;

fn central<F: FnMut(f64) -> f64>(f: &mut F, x: f64, order: u8, h: f64) -> f64 {
    match order {
        1 => (f(x + h) - f(x - h)) / (2.0 * h),
        2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
        _ => (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h),
    }
}

/// Derivative of order 1, 2 or 3 at `x` from central differences starting at
/// step `h`, refined by a Ridders–Neville tableau. The full tableau is
/// built and the entry with the smallest error estimate is returned.
///
/// `domain` is the closed interval on which `f` may be evaluated; the initial
/// (widest) stencil is checked against it.
pub fn fd_derivative<F: FnMut(f64) -> f64>(
    mut f: F,
    x: f64,
    order: u8,
    h: f64,
    domain: Option<(f64, f64)>,
) -> Result<FdEstimate, FdError> {
    if !(1..=3).contains(&order) {
        return Err(FdError::UnsupportedOrder(order));
    }
    let reach = if order == 3 { 2.0 * h } else { h };
    if let Some((dlo, dhi)) = domain {
        if x - reach < dlo || x + reach > dhi {
            return Err(FdError::StencilLeavesDomain {
                x,
                lo: x - reach,
                hi: x + reach,
                domain_lo: dlo,
                domain_hi: dhi,
            });
        }
    }
    let mut tab = [[0.0f64; NTAB]; NTAB];
    let mut hh = h;
    tab[0][0] = central(&mut f, x, order, hh);
    if !tab[0][0].is_finite() {
        return Err(FdError::NonFinite(x));
    }
    let mut best = FdEstimate {
        value: tab[0][0],
        error: f64::INFINITY,
    };
    for i in 1..NTAB {
        hh /= CON;
        tab[0][i] = central(&mut f, x, order, hh);
        if !tab[0][i].is_finite() {
            return Err(FdError::NonFinite(x));
        }
        let mut fac = CON2;
        for j in 1..=i {
            tab[j][i] = (tab[j - 1][i] * fac - tab[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let err = (tab[j][i] - tab[j - 1][i])
                .abs()
                .max((tab[j][i] - tab[j - 1][i - 1]).abs());
            if err <= best.error {
                best = FdEstimate {
                    value: tab[j][i],
                    error: err,
                };
            }
        }
    }
    Ok(best)
}

/// Richardson extrapolation of estimates `d[k] = D(h / 2^k)` whose error
/// expands in even powers of `h`. Returns the extrapolated value and the
/// difference between the last two diagonal entries.
pub fn richardson(d: &[f64]) -> (f64, f64) {
    assert!(!d.is_empty());
    let mut row: Vec<f64> = d.to_vec();
    let mut prev_best = row[row.len() - 1];
    let mut best = prev_best;
    let mut fac = 4.0;
    while row.len() > 1 {
        let next: Vec<f64> = row
            .windows(2)
            .map(|w| (fac * w[1] - w[0]) / (fac - 1.0))
            .collect();
        prev_best = best;
        best = next[next.len() - 1];
        row = next;
        fac *= 4.0;
    }
    (best, (best - prev_best).abs())
}

/// Like [`richardson`], but returns the tableau entry with the smallest
/// error estimate (Ridders' selection rule), which guards against roundoff
/// dominating the finest levels. Returns `(value, error estimate)`.
pub fn richardson_best(d: &[f64]) -> (f64, f64) {
    assert!(!d.is_empty());
    let n = d.len();
    // t[j][i]: j-th extrapolation using levels i-j..=i
    let mut t = vec![vec![0.0; n]; n];
    t[0].copy_from_slice(d);
    let mut best = (d[n - 1], f64::INFINITY);
    if n >= 2 {
        best = (d[1], (d[1] - d[0]).abs());
    }
    for i in 1..n {
        let mut fac = 4.0;
        for j in 1..=i {
            t[j][i] = (fac * t[j - 1][i] - t[j - 1][i - 1]) / (fac - 1.0);
            fac *= 4.0;
            let err = (t[j][i] - t[j - 1][i])
                .abs()
                .max((t[j][i] - t[j - 1][i - 1]).abs());
            if err < best.1 {
                best = (t[j][i], err);
            }
        }
    }
    best
}

/// Fornberg's algorithm: weights `c[k][j]` such that
/// `f^{(k)}(z) ≈ Σ_j c[k][j] f(x[j])` for `k = 0..=m`.
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    if n == 0 {
        return c;
    }
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_second_derivative() {
        let d = fd_derivative(|x| x * x * x, 1.0, 2, 0.1, None).unwrap();
        assert!((d.value - 6.0).abs() < 1e-9, "{d:?}");
    }

    #[test]
    fn log_first_derivative() {
        let d = fd_derivative(f64::ln, 0.1, 1, 0.05, Some((0.0, f64::INFINITY))).unwrap();
        assert!((d.value - 10.0).abs() < 1e-7, "{d:?}");
    }

    #[test]
    fn third_derivative_of_exp() {
        let d = fd_derivative(f64::exp, 0.3, 3, 0.1, None).unwrap();
        assert!((d.value - 0.3f64.exp()).abs() < 1e-6, "{d:?}");
    }

    #[test]
    fn stencil_outside_domain() {
        let e = fd_derivative(f64::ln, 0.1, 1, 0.2, Some((0.0, f64::INFINITY)));
        assert!(matches!(e, Err(FdError::StencilLeavesDomain { .. })));
    }

    #[test]
    fn fornberg_reproduces_centred_second_difference() {
        let c = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((c[2][0] - 1.0).abs() < 1e-14);
        assert!((c[2][1] + 2.0).abs() < 1e-14);
        assert!((c[1][2] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn richardson_removes_h_squared() {
        // D(h) = 1 + h^2 + h^4
        let d: Vec<f64> = (0..3)
            .map(|k| {
                let h = 0.1 / 2f64.powi(k);
                1.0 + h * h + h.powi(4)
            })
            .collect();
        let (v, _) = richardson(&d);
        assert!((v - 1.0).abs() < 1e-14);
        let (v, _) = richardson_best(&d);
        assert!((v - 1.0).abs() < 1e-12);
    }
}
