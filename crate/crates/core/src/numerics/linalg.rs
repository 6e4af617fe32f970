//! Small fixed-size linear algebra on the plane.

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;

/// `det(a, b)` with `a`, `b` as columns.
#[inline]
pub fn det2(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Quarter turn `(a, b) -> (-b, a)`.
#[inline]
pub fn quarter_turn(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

pub fn symmetrize(m: &Mat2) -> Mat2 {
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    Mat2::new(m[(0, 0)], off, off, m[(1, 1)])
}

/// Eigen-decomposition of a symmetric 2×2 matrix, eigenvalues ascending.
#[derive(Debug, Clone, Copy)]
pub struct SymEigen {
    pub values: [f64; 2],
    pub vectors: [Vec2; 2],
}

impl SymEigen {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[1]
    }
}

/// Closed-form eigen-decomposition; only the symmetric part of `m` is used.
pub fn sym_eigen(m: &Mat2) -> SymEigen {
    let a = m[(0, 0)];
    let c = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (a + c);
    let half_diff = 0.5 * (a - c);
    let radius = half_diff.hypot(b);
    let lo = mean - radius;
    let hi = mean + radius;
    if radius == 0.0 {
        return SymEigen {
            values: [lo, hi],
            vectors: [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
        };
    }
    // Largest-eigenvalue vector from whichever row is better conditioned.
    let v_hi = if half_diff >= 0.0 {
        Vec2::new(half_diff + radius, b)
    } else {
        Vec2::new(b, radius - half_diff)
    }
    .normalize();
    let v_lo = Vec2::new(-v_hi.y, v_hi.x);
    SymEigen {
        values: [lo, hi],
        vectors: [v_lo, v_hi],
    }
}

/// Frobenius norm.
pub fn frob(m: &Mat2) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_reconstructs_matrix() {
        for m in [
            Mat2::new(2.0, 1.0, 1.0, 3.0),
            Mat2::new(-1.0, 0.5, 0.5, -4.0),
            Mat2::new(1.0, 0.0, 0.0, 1.0),
            Mat2::new(0.0, 2.0, 2.0, 0.0),
            Mat2::new(1e-9, 1e-3, 1e-3, 5.0),
        ] {
            let e = sym_eigen(&m);
            assert!(e.values[0] <= e.values[1]);
            let rebuilt = e.values[0] * e.vectors[0] * e.vectors[0].transpose()
                + e.values[1] * e.vectors[1] * e.vectors[1].transpose();
            assert!(frob(&(rebuilt - m)) < 1e-12 * (1.0 + frob(&m)), "{m}");
        }
    }

    #[test]
    fn det_and_turn() {
        let a = Vec2::new(0.0, 1.0);
        let b = Vec2::new(1.0, 0.0);
        assert_eq!(det2(a, b), -1.0);
        assert_eq!(quarter_turn(b), a);
    }
}
