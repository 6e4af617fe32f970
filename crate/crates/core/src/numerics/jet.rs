//! Truncated Taylor jets in two variables.
//!
//! `Jet1` carries a value and gradient, `Jet2` adds the Hessian. They are used
//! to push analytic derivatives of the harmonic pair through rational
//! expressions (inverse matrices, determinants) without finite differencing.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet1 {
    pub v: f64,
    pub g: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub v: f64,
    pub g: [f64; 2],
    pub h: [[f64; 2]; 2],
}

impl Jet1 {
    pub fn constant(v: f64) -> Self {
        Self { v, g: [0.0; 2] }
    }

    pub fn scale(self, s: f64) -> Self {
        Self {
            v: self.v * s,
            g: [self.g[0] * s, self.g[1] * s],
        }
    }

    pub fn recip(self) -> Self {
        let d = -1.0 / (self.v * self.v);
        Self {
            v: 1.0 / self.v,
            g: [d * self.g[0], d * self.g[1]],
        }
    }

    pub fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Add for Jet1 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            g: [self.g[0] + o.g[0], self.g[1] + o.g[1]],
        }
    }
}

impl Sub for Jet1 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for Jet1 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for Jet1 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            g: [
                self.g[0] * o.v + self.v * o.g[0],
                self.g[1] * o.v + self.v * o.g[1],
            ],
        }
    }
}

impl Jet2 {
    pub fn constant(v: f64) -> Self {
        Self {
            v,
            ..Self::default()
        }
    }

    /// The coordinate function `y_i`, evaluated at `v`.
    pub fn variable(i: usize, v: f64) -> Self {
        let mut j = Self::constant(v);
        j.g[i] = 1.0;
        j
    }

    pub fn scale(self, s: f64) -> Self {
        let mut out = self;
        out.v *= s;
        for i in 0..2 {
            out.g[i] *= s;
            for k in 0..2 {
                out.h[i][k] *= s;
            }
        }
        out
    }

    /// Applies a scalar function given its value and first two derivatives.
    pub fn compose(self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = Self::constant(f0);
        for i in 0..2 {
            out.g[i] = f1 * self.g[i];
            for k in 0..2 {
                out.h[i][k] = f1 * self.h[i][k] + f2 * self.g[i] * self.g[k];
            }
        }
        out
    }

    pub fn recip(self) -> Self {
        let x = self.v;
        self.compose(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }

    pub fn div(self, o: Self) -> Self {
        self * o.recip()
    }

    /// Drops the second-order part.
    pub fn to_jet1(self) -> Jet1 {
        Jet1 {
            v: self.v,
            g: self.g,
        }
    }

    /// The partial derivative `∂/∂y_i`, one order lower.
    pub fn partial(self, i: usize) -> Jet1 {
        Jet1 {
            v: self.g[i],
            g: self.h[i],
        }
    }
}

impl Add for Jet2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut out = self;
        out.v += o.v;
        for i in 0..2 {
            out.g[i] += o.g[i];
            for k in 0..2 {
                out.h[i][k] += o.h[i][k];
            }
        }
        out
    }
}

impl Sub for Jet2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for Jet2 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for Jet2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut out = Self::constant(self.v * o.v);
        for i in 0..2 {
            out.g[i] = self.g[i] * o.v + self.v * o.g[i];
            for k in 0..2 {
                out.h[i][k] = self.h[i][k] * o.v
                    + self.g[i] * o.g[k]
                    + self.g[k] * o.g[i]
                    + self.v * o.h[i][k];
            }
        }
        out
    }
}
