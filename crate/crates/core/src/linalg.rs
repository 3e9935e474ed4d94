//! 2×2 matrices and 2-vectors over any [`Real`].

use serde::{Deserialize, Serialize};

use crate::numeric::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vec2<R> {
    pub x: R,
    pub y: R,
}

impl<R: Real> Vec2<R> {
    pub fn new(x: R, y: R) -> Self {
        Vec2 { x, y }
    }

    pub fn splat(v: R) -> Self {
        Vec2 { x: v.clone(), y: v }
    }

    pub fn add(&self, o: &Self) -> Self {
        Vec2::new(self.x.clone() + o.x.clone(), self.y.clone() + o.y.clone())
    }

    pub fn sub(&self, o: &Self) -> Self {
        Vec2::new(self.x.clone() - o.x.clone(), self.y.clone() - o.y.clone())
    }

    pub fn scale(&self, s: &R) -> Self {
        Vec2::new(self.x.clone() * s.clone(), self.y.clone() * s.clone())
    }

    pub fn dot(&self, o: &Self) -> R {
        self.x.clone() * o.x.clone() + self.y.clone() * o.y.clone()
    }

    /// Euclidean norm, evaluated in `f64`.
    pub fn norm_f64(&self) -> f64 {
        self.x.as_f64().hypot(self.y.as_f64())
    }

    pub fn to_f64(&self) -> Vec2<f64> {
        Vec2::new(self.x.as_f64(), self.y.as_f64())
    }
}

/// Row-major 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat2<R> {
    pub a: R,
    pub b: R,
    pub c: R,
    pub d: R,
}

impl<R: Real> Mat2<R> {
    pub fn new(a: R, b: R, c: R, d: R) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn identity(like: &R) -> Self {
        let one = R::ratio_like(1, 1, like);
        let zero = R::ratio_like(0, 1, like);
        Mat2::new(one.clone(), zero.clone(), zero, one)
    }

    pub fn mul(&self, o: &Self) -> Self {
        Mat2::new(
            self.a.clone() * o.a.clone() + self.b.clone() * o.c.clone(),
            self.a.clone() * o.b.clone() + self.b.clone() * o.d.clone(),
            self.c.clone() * o.a.clone() + self.d.clone() * o.c.clone(),
            self.c.clone() * o.b.clone() + self.d.clone() * o.d.clone(),
        )
    }

    pub fn apply(&self, v: &Vec2<R>) -> Vec2<R> {
        Vec2::new(
            self.a.clone() * v.x.clone() + self.b.clone() * v.y.clone(),
            self.c.clone() * v.x.clone() + self.d.clone() * v.y.clone(),
        )
    }

    pub fn add(&self, o: &Self) -> Self {
        Mat2::new(
            self.a.clone() + o.a.clone(),
            self.b.clone() + o.b.clone(),
            self.c.clone() + o.c.clone(),
            self.d.clone() + o.d.clone(),
        )
    }

    pub fn transpose(&self) -> Self {
        Mat2::new(self.a.clone(), self.c.clone(), self.b.clone(), self.d.clone())
    }

    pub fn det(&self) -> R {
        self.a.clone() * self.d.clone() - self.b.clone() * self.c.clone()
    }

    pub fn to_f64(&self) -> Mat2<f64> {
        Mat2::new(self.a.as_f64(), self.b.as_f64(), self.c.as_f64(), self.d.as_f64())
    }

    /// Largest singular value, evaluated in `f64`.
    pub fn spectral_norm(&self) -> f64 {
        let m = self.to_f64();
        let fro2 = m.a * m.a + m.b * m.b + m.c * m.c + m.d * m.d;
        let det = m.a * m.d - m.b * m.c;
        let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0);
        ((fro2 + disc.sqrt()) / 2.0).sqrt()
    }

    /// Largest absolute entry difference, in `f64`.
    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        let (x, y) = (self.to_f64(), o.to_f64());
        [(x.a - y.a), (x.b - y.b), (x.c - y.c), (x.d - y.d)]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}
