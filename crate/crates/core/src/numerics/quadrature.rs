//! Adaptive Gauss–Kronrod (7/15) quadrature and path integrals of 1-forms.
//!
//! Integrands are vector valued so that several primitives can be carried
//! along one path at once. Nodes are strictly interior, which lets paths end
//! on the boundary `r = 0` of the half-plane when the integrand stays bounded.

use thiserror::Error;

use super::linalg::Vec2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("QuadratureFailure: tolerance {tol:e} not met (estimated error {error:e} after {panels} panels)")]
    ToleranceNotMet { tol: f64, error: f64, panels: usize },
    #[error("QuadratureFailure: non-finite integrand at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    /// Absolute tolerance on the summed error estimate.
    pub abs_tol: f64,
    /// Relative floor applied to the integral of |f|; keeps large integrals
    /// from chasing an absolute tolerance below rounding.
    pub rel_floor: f64,
    pub max_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-11,
            rel_floor: 1e-14,
            max_panels: 4000,
        }
    }
}

impl QuadratureOptions {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadEstimate<const N: usize> {
    pub value: [f64; N],
    /// Summed |K15 − G7| over all panels (max over components).
    pub error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Panel<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    abs_value: f64,
    error: f64,
}

fn gk15<const N: usize, E, F>(f: &mut F, a: f64, b: f64) -> Result<Panel<N>, E>
where
    F: FnMut(f64) -> Result<[f64; N], E>,
    E: From<QuadratureError>,
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kron = [0.0; N];
    let mut gauss = [0.0; N];
    let mut abs_value = 0.0;
    let mut eval = |t: f64| -> Result<[f64; N], E> {
        let v = f(t)?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(QuadratureError::NonFinite { t }.into());
        }
        Ok(v)
    };
    let fc = eval(centre)?;
    for k in 0..N {
        kron[k] = WGK[7] * fc[k];
        gauss[k] = WG[3] * fc[k];
        abs_value += WGK[7] * fc[k].abs();
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(centre - dx)?;
        let f2 = eval(centre + dx)?;
        for k in 0..N {
            let s = f1[k] + f2[k];
            kron[k] += WGK[j] * s;
            abs_value += WGK[j] * (f1[k].abs() + f2[k].abs());
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * s;
            }
        }
    }
    let mut value = [0.0; N];
    let mut error: f64 = 0.0;
    for k in 0..N {
        value[k] = kron[k] * half;
        error = error.max(((kron[k] - gauss[k]) * half).abs());
    }
    Ok(Panel {
        a,
        b,
        value,
        abs_value: abs_value * half.abs(),
        error,
    })
}

/// Globally adaptive integration of `f` over `[a, b]`.
pub fn integrate<const N: usize, E, F>(
    mut f: F,
    a: f64,
    b: f64,
    opts: &QuadratureOptions,
) -> Result<QuadEstimate<N>, E>
where
    F: FnMut(f64) -> Result<[f64; N], E>,
    E: From<QuadratureError>,
{
    if a == b {
        return Ok(QuadEstimate {
            value: [0.0; N],
            error: 0.0,
            evaluations: 0,
        });
    }
    let mut panels = vec![gk15(&mut f, a, b)?];
    let mut evaluations = 15;
    loop {
        let error: f64 = panels.iter().map(|p| p.error).sum();
        let abs_total: f64 = panels.iter().map(|p| p.abs_value).sum();
        let tol = opts.abs_tol.max(opts.rel_floor * abs_total);
        if error <= tol {
            let mut value = [0.0; N];
            for p in &panels {
                for k in 0..N {
                    value[k] += p.value[k];
                }
            }
            return Ok(QuadEstimate {
                value,
                error,
                evaluations,
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if panels.len() + 2 > opts.max_panels || mid == p.a || mid == p.b {
            return Err(QuadratureError::ToleranceNotMet {
                tol,
                error,
                panels: panels.len() + 1,
            }
            .into());
        }
        panels.push(gk15(&mut f, p.a, mid)?);
        panels.push(gk15(&mut f, mid, p.b)?);
        evaluations += 30;
    }
}

/// Piecewise-linear path in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<Vec2>,
}

impl Polyline {
    pub fn new(points: Vec<Vec2>) -> Self {
        Self { points }
    }

    pub fn segment(a: Vec2, b: Vec2) -> Self {
        Self { points: vec![a, b] }
    }

    /// Closed axis-aligned square of side `side` centred at `c`, counterclockwise.
    pub fn square(c: Vec2, side: f64) -> Self {
        let h = 0.5 * side;
        Self {
            points: vec![
                c + Vec2::new(-h, -h),
                c + Vec2::new(h, -h),
                c + Vec2::new(h, h),
                c + Vec2::new(-h, h),
                c + Vec2::new(-h, -h),
            ],
        }
    }
}

/// Integrates `N` 1-forms along `path`. `form(p)` returns the covectors at `p`.
pub fn integrate_1form<const N: usize, E, F>(
    mut form: F,
    path: &Polyline,
    opts: &QuadratureOptions,
) -> Result<QuadEstimate<N>, E>
where
    F: FnMut(Vec2) -> Result<[Vec2; N], E>,
    E: From<QuadratureError>,
{
    let mut total = QuadEstimate {
        value: [0.0; N],
        error: 0.0,
        evaluations: 0,
    };
    for w in path.points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let d = b - a;
        if d.norm() == 0.0 {
            continue;
        }
        let seg = integrate::<N, E, _>(
            |t| {
                let cov = form(a + t * d)?;
                let mut out = [0.0; N];
                for k in 0..N {
                    out[k] = cov[k].dot(&d);
                }
                Ok(out)
            },
            0.0,
            1.0,
            opts,
        )?;
        for k in 0..N {
            total.value[k] += seg.value[k];
        }
        total.error += seg.error;
        total.evaluations += seg.evaluations;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok<const N: usize>(v: [f64; N]) -> Result<[f64; N], QuadratureError> {
        Ok(v)
    }

    #[test]
    fn polynomial_and_transcendental() {
        let opts = QuadratureOptions::default();
        let q = integrate(|x| ok([x * x, x.exp()]), 0.0, 2.0, &opts).unwrap();
        assert!((q.value[0] - 8.0 / 3.0).abs() < 1e-13);
        assert!((q.value[1] - (2f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn integrable_endpoint_singularity() {
        let opts = QuadratureOptions::default();
        let q = integrate(|x: f64| ok([x.ln()]), 0.0, 1.0, &opts).unwrap();
        assert!((q.value[0] + 1.0).abs() < 1e-10, "{}", q.value[0]);
    }

    #[test]
    fn exact_form_along_polyline() {
        // d(H r) = r dH + H dr
        let path = Polyline::new(vec![
            Vec2::new(0.0, 1.0),
            Vec2::new(-1.0, 4.0),
            Vec2::new(2.0, 3.0),
        ]);
        let q = integrate_1form(
            |p| Ok::<_, QuadratureError>([Vec2::new(p.y, p.x)]),
            &path,
            &QuadratureOptions::default(),
        )
        .unwrap();
        assert!((q.value[0] - 6.0).abs() < 1e-11);
    }

    #[test]
    fn non_finite_is_reported() {
        let r = integrate(|x: f64| ok([1.0 / (x - 0.5)]), 0.0, 1.0, &QuadratureOptions::default());
        // Either the pole is hit or the tolerance cannot be met; both are errors.
        assert!(r.is_err() || r.unwrap().value[0].abs() < 1e-6);
        let r = integrate(|_x: f64| ok([f64::NAN]), 0.0, 1.0, &QuadratureOptions::default());
        assert!(matches!(r, Err(QuadratureError::NonFinite { .. })));
    }
}
