//! Fixed-size spatial vectors.
//!
//! Points and vectors are stored as `[f64; 3]` regardless of the mesh
//! dimension; in 2D the third component is kept at zero, so dot products and
//! norms are dimension-agnostic.

use crate::float::FloatExt;

/// A point or vector in physical space (third component zero in 2D).
pub type Point = [f64; 3];

#[inline]
pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub(crate) fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub(crate) fn axpy(y: Point, a: f64, x: Point) -> Point {
    [y[0] + a * x[0], y[1] + a * x[1], y[2] + a * x[2]]
}

#[inline]
pub(crate) fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

#[inline]
pub(crate) fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Unit vector in the direction of `a`; zero-length input returns zero.
#[inline]
pub(crate) fn unit(a: Point) -> Point {
    let n = norm(a);
    if n == 0.0 {
        [0.0; 3]
    } else {
        scale(a, 1.0 / n)
    }
}
