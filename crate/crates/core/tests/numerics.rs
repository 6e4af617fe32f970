use proptest::prelude::*;
use sfk_core::correspondence::ForwardMap;
use sfk_core::harmonic::{log_h_plus_rho, HalfPlanePoint, TaubNutParameter};
use sfk_core::numerics::{
    fd_derivative, integrate_1form, newton2, sym_eigen, FdError, Mat2, NewtonDivergence, NewtonOptions,
    Polyline, QuadratureError, QuadratureOptions, Tolerances, Vec2,
};
use sfk_core::polytope::DelzantPolytope;
use sfk_core::{Result, SfkError};

fn opts() -> QuadratureOptions {
    Tolerances::default().quadrature()
}

#[test]
fn exact_differential_of_h_times_r() {
    let form = |p: Vec2| -> std::result::Result<[Vec2; 1], QuadratureError> { Ok([Vec2::new(p.y, p.x)]) };
    let (a, b) = (Vec2::new(0.0, 1.0), Vec2::new(2.0, 3.0));
    for path in [
        Polyline::segment(a, b),
        Polyline::new(vec![a, Vec2::new(5.0, 0.2), Vec2::new(-1.0, 4.0), b]),
    ] {
        let q = integrate_1form(form, &path, &opts()).unwrap();
        assert!((q.value[0] - 6.0).abs() <= 1e-11, "{}", q.value[0]);
    }
}

#[test]
fn flat_epsilon_one_between_two_points() {
    let f = ForwardMap::for_polytope(&DelzantPolytope::quadrant(), TaubNutParameter::ale(), &Tolerances::default())
        .unwrap();
    let path = Polyline::segment(Vec2::new(0.0, 1.0), Vec2::new(0.0, 2.0));
    let (v, _) = f.integrate_path(&path, &opts()).unwrap();
    assert!((v[0] - 0.5).abs() <= 1e-11, "{v:?}");
    assert!((v[1] - 0.5).abs() <= 1e-11, "{v:?}");
}

#[test]
fn closed_loops_of_exact_forms() {
    let form = |p: Vec2| -> std::result::Result<[Vec2; 2], QuadratureError> {
        Ok([
            Vec2::new(p.x.cos() * p.y, p.x.sin()),
            Vec2::new(2.0 * p.x * p.y.exp(), p.x * p.x * p.y.exp()),
        ])
    };
    let tol = Tolerances::default().quad_abs;
    for (c, s) in [(Vec2::new(0.0, 1.0), 0.5), (Vec2::new(3.0, 2.0), 3.0), (Vec2::new(-2.0, 0.3), 0.1)] {
        let q = integrate_1form(form, &Polyline::square(c, s), &opts()).unwrap();
        assert!(q.value.iter().all(|v| v.abs() <= 2.0 * tol), "{:?}", q.value);
    }
}

type Potential = fn(Vec2) -> f64;
type Gradient = fn(Vec2) -> Vec2;

/// Twenty primitives with their gradients.
fn exact_forms() -> Vec<(Potential, Gradient)> {
    vec![
        (|p| p.x * p.y, |p| Vec2::new(p.y, p.x)),
        (|p| p.x * p.x - p.y * p.y, |p| Vec2::new(2.0 * p.x, -2.0 * p.y)),
        (|p| p.x.exp() * p.y, |p| Vec2::new(p.x.exp() * p.y, p.x.exp())),
        (|p| (p.x + 2.0 * p.y).sin(), |p| {
            let c = (p.x + 2.0 * p.y).cos();
            Vec2::new(c, 2.0 * c)
        }),
        (|p| p.y.ln(), |p| Vec2::new(0.0, 1.0 / p.y)),
        (|p| p.x.hypot(p.y), |p| p / p.x.hypot(p.y)),
        (|p| (p.x + p.x.hypot(p.y)).ln(), |p| {
            let rho = p.x.hypot(p.y);
            Vec2::new(1.0 / rho, p.y / (rho * (p.x + rho)))
        }),
        (|p| p.x.atan2(p.y), |p| {
            let d = p.x * p.x + p.y * p.y;
            Vec2::new(p.y / d, -p.x / d)
        }),
        (|p| p.x.powi(5) * p.y.powi(2), |p| Vec2::new(5.0 * p.x.powi(4) * p.y.powi(2), 2.0 * p.x.powi(5) * p.y)),
        (|p| (p.x * p.y).cos(), |p| {
            let s = -(p.x * p.y).sin();
            Vec2::new(s * p.y, s * p.x)
        }),
        (|p| 1.0 / (1.0 + p.x * p.x + p.y * p.y), |p| {
            let d = 1.0 + p.x * p.x + p.y * p.y;
            -2.0 * p / (d * d)
        }),
        (|p| p.y.sqrt() * p.x, |p| Vec2::new(p.y.sqrt(), 0.5 * p.x / p.y.sqrt())),
        (|p| (-p.x * p.x).exp() * p.y, |p| {
            let e = (-p.x * p.x).exp();
            Vec2::new(-2.0 * p.x * e * p.y, e)
        }),
        (|p| p.x.sinh() * p.y.cosh(), |p| Vec2::new(p.x.cosh() * p.y.cosh(), p.x.sinh() * p.y.sinh())),
        (|p| p.x / p.y, |p| Vec2::new(1.0 / p.y, -p.x / (p.y * p.y))),
        (|p| (p.x * p.x + p.y).ln(), |p| {
            let d = p.x * p.x + p.y;
            Vec2::new(2.0 * p.x / d, 1.0 / d)
        }),
        (|p| p.x.tanh() + p.y.tanh(), |p| {
            let (a, b) = (p.x.cosh(), p.y.cosh());
            Vec2::new(1.0 / (a * a), 1.0 / (b * b))
        }),
        (|p| p.y * p.y * p.y - 3.0 * p.x * p.x * p.y, |p| Vec2::new(-6.0 * p.x * p.y, 3.0 * p.y * p.y - 3.0 * p.x * p.x)),
        (|p| (3.0 * p.x).cos() * (3.0 * p.y).exp(), |p| {
            let (c, s, e) = ((3.0 * p.x).cos(), (3.0 * p.x).sin(), (3.0 * p.y).exp());
            Vec2::new(-3.0 * s * e, 3.0 * c * e)
        }),
        (|p| p.y.ln() * p.x * p.x, |p| Vec2::new(2.0 * p.x * p.y.ln(), p.x * p.x / p.y)),
    ]
}

#[test]
fn error_estimates_bound_true_errors_on_exact_forms() {
    let forms = exact_forms();
    assert_eq!(forms.len(), 20);
    let (a, b) = (Vec2::new(-1.0, 0.2), Vec2::new(1.5, 1.3));
    let path = Polyline::new(vec![a, Vec2::new(0.3, 2.0), Vec2::new(2.0, 0.5), b]);
    let loose = QuadratureOptions::with_tol(1e-6);
    for (k, (u, g)) in forms.iter().enumerate() {
        for o in [opts(), loose] {
            let q = integrate_1form(|p| Ok::<_, QuadratureError>([g(p)]), &path, &o).unwrap();
            let exact = u(b) - u(a);
            let err = (q.value[0] - exact).abs();
            let rounding = 1e-14 * (1.0 + exact.abs());
            assert!(err <= q.error + rounding, "form {k}: error {err:e} > estimate {:e}", q.error);
            assert!(err <= o.abs_tol + rounding, "form {k}: error {err:e} above tolerance");
        }
    }
}

#[test]
fn fd_examples() {
    let d = fd_derivative(|x| x * x * x, 1.0, 2, 0.1, None).unwrap();
    assert!((d.value - 6.0).abs() <= 1e-9);
    let d = fd_derivative(f64::ln, 0.1, 1, 0.05, Some((0.0, f64::INFINITY))).unwrap();
    assert!((d.value - 10.0).abs() <= 1e-7, "{d:?}");
    assert!(matches!(
        fd_derivative(f64::ln, 0.1, 1, 0.2, Some((0.0, f64::INFINITY))),
        Err(FdError::StencilLeavesDomain { .. })
    ));
    assert!(matches!(fd_derivative(f64::ln, 1.0, 4, 0.1, None), Err(FdError::UnsupportedOrder(4))));
}

#[test]
fn fd_laplace_residual_of_log_h_plus_rho() {
    let (h, r) = (1.0, 1.0);
    let f = |hh: f64, rr: f64| log_h_plus_rho(hh, rr).v;
    let fhh = fd_derivative(|t| f(t, r), h, 2, 0.2, None).unwrap().value;
    let frr = fd_derivative(|t| f(h, t), r, 2, 0.2, None).unwrap().value;
    let fr = fd_derivative(|t| f(h, t), r, 1, 0.2, None).unwrap().value;
    let res = fhh + frr + fr / r;
    assert!(res.abs() <= 1e-8, "{res:e}");
}

#[test]
fn richardson_gains_two_orders() {
    let cases: [(fn(f64) -> f64, f64, u8, f64); 5] = [
        (f64::exp, f64::exp(0.3), 1, 0.3),
        (f64::sin, -f64::sin(0.7), 2, 0.7),
        (|x| 1.0 / (1.0 + x * x), -2.0 * 0.5 / (1.25f64 * 1.25), 1, 0.5),
        (f64::cos, f64::sin(1.1), 3, 1.1),
        (|x| x.atan(), 1.0 / (1.0 + 4.0), 1, 2.0),
    ];
    let h = 0.1;
    for (f, exact, order, x) in cases {
        let plain = match order {
            1 => (f(x + h) - f(x - h)) / (2.0 * h),
            2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
            _ => (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h),
        };
        let ext = fd_derivative(f, x, order, h, None).unwrap();
        let e_plain = (plain - exact).abs();
        let e_ext = (ext.value - exact).abs().max(1e-16);
        assert!(e_plain / e_ext >= 100.0, "order {order} at {x}: {e_plain:e} vs {e_ext:e}");
    }
}

fn squares(p: Vec2) -> std::result::Result<(Vec2, Mat2), NewtonDivergence> {
    Ok((Vec2::new(p.x * p.x, p.y * p.y), Mat2::new(2.0 * p.x, 0.0, 0.0, 2.0 * p.y)))
}

#[test]
fn newton_examples() {
    let o = NewtonOptions::default();
    let s = newton2(squares, |_| true, Vec2::new(4.0, 9.0), Vec2::new(1.0, 1.0), 1.0, &o).unwrap();
    assert!((s.x - Vec2::new(2.0, 3.0)).norm() < 1e-10);
    assert!(s.residual <= o.abs_tol);

    // Singular Jacobian at the guess: must return, not panic.
    match newton2(squares, |_| true, Vec2::new(4.0, 9.0), Vec2::new(0.0, 0.0), 1.0, &o) {
        Ok(s) => assert!(s.residual <= o.abs_tol),
        Err(e) => assert!(e.residual.is_finite()),
    }
    let e = newton2(squares, |_| true, Vec2::new(-1.0, 4.0), Vec2::new(1.0, 1.0), 0.5, &o).unwrap_err();
    assert!(e.to_string().starts_with("NewtonDivergence"));
}

#[test]
fn newton_on_flat_moment_map() {
    let f = ForwardMap::for_polytope(&DelzantPolytope::quadrant(), TaubNutParameter::ale(), &Tolerances::default())
        .unwrap();
    let eval = |v: Vec2| -> Result<(Vec2, Mat2)> {
        let p = HalfPlanePoint::new(v.x, v.y);
        Ok((f.moment_map(p)?, f.d_mu(p)?))
    };
    let s = newton2::<SfkError, _, _>(
        eval,
        |v| v.y > 0.0,
        Vec2::new(1.0, 1.0),
        Vec2::new(0.0, 1.0),
        1.0,
        &Tolerances::default().newton(),
    )
    .unwrap();
    assert!((s.x - Vec2::new(0.0, 2.0)).norm() < 1e-9, "{:?}", s.x);
}

#[test]
fn tolerances_only_tighten() {
    let d = Tolerances::default();
    assert_eq!((d.quad_abs, d.fd_rel, d.newton_abs), (1e-11, 1e-7, 1e-10));
    assert!(Tolerances::tightened(Some(1e-12), None, None).is_ok());
    assert!(Tolerances::tightened(Some(1e-9), None, None).is_err());
    assert!(Tolerances::tightened(None, Some(-1.0), None).is_err());
}

proptest! {
    #[test]
    fn symmetric_eigen_decomposition(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0) {
        let m = Mat2::new(a, b, b, c);
        let e = sym_eigen(&m);
        prop_assert!(e.min() <= e.max());
        prop_assert!((e.min() + e.max() - (a + c)).abs() <= 1e-12 * (1.0 + m.norm()));
        prop_assert!((e.min() * e.max() - m.determinant()).abs() <= 1e-11 * (1.0 + m.norm_squared()));
    }

    #[test]
    fn straight_and_bent_paths_agree_for_exact_forms(k in 0usize..20, bx in -1.0f64..2.0, by in 0.3f64..2.0) {
        let (u, g) = exact_forms()[k];
        let (a, b) = (Vec2::new(0.2, 0.5), Vec2::new(bx, by));
        let direct = integrate_1form(|p| Ok::<_, QuadratureError>([g(p)]), &Polyline::segment(a, b), &opts()).unwrap();
        let bent = integrate_1form(
            |p| Ok::<_, QuadratureError>([g(p)]),
            &Polyline::new(vec![a, Vec2::new(a.x, 2.5), b]),
            &opts(),
        )
        .unwrap();
        let exact = u(b) - u(a);
        prop_assert!((direct.value[0] - exact).abs() <= 1e-10 * (1.0 + exact.abs()));
        prop_assert!((bent.value[0] - direct.value[0]).abs() <= 2e-10 * (1.0 + exact.abs()));
    }
}
