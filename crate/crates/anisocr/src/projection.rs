//! Element and face mean-value projections and the anisotropic
//! projection-error ratio.
//!
//! `Pi_T^0` is the `L^2`-projection onto constants, i.e. the mean value; the
//! error estimate under test bounds `||Pi_T^0 v - v||_{L^q(T)}` by
//! `|T|^{1/q - 1/p} sum_i h_i ||dv/dr_i||_{L^p(T)}` with a constant that is
//! independent of the element's aspect ratio. The ratio harness reports raw
//! quotients; no constant is asserted because the estimate's constant is
//! generic.

use crate::fe::FeFunction;
use crate::float::FloatExt;
use crate::geometry::ElementGeometry;
use crate::mesh::{FaceSet, SimplicialMesh};
use crate::quadrature::{face_rule, simplex_rule};
use crate::vecd::{self, Point};
use crate::HarnessError;

/// Default quadrature degree for callable integrands.
pub const DEFAULT_DEGREE: usize = 8;

/// Mean of a callable over element `e`.
pub fn cell_mean_fn(
    mesh: &SimplicialMesh,
    e: usize,
    f: &dyn Fn(Point) -> f64,
    degree: usize,
) -> Result<f64, HarnessError> {
    let rule = simplex_rule(mesh.dim, degree)?;
    let pts = mesh.points_of(e);
    Ok(rule.integrate(&pts, mesh.measure(e), f) / mesh.measure(e))
}

/// Mean of a P1-type finite element function over element `e` (exact).
pub fn cell_mean_fe(mesh: &SimplicialMesh, f: &FeFunction<'_>, e: usize) -> f64 {
    // the mean of an affine function is its centroid value
    let pts = mesh.points_of(e);
    let nv = mesh.dim + 1;
    let mut c = [0.0; 3];
    for p in pts.iter().take(nv) {
        c = vecd::add(c, *p);
    }
    f.eval(mesh, e, vecd::scale(c, 1.0 / nv as f64))
}

/// Mean of a callable over face `f`.
pub fn face_mean_fn(
    mesh: &SimplicialMesh,
    faces: &FaceSet,
    f: usize,
    g: &dyn Fn(Point) -> f64,
    degree: usize,
) -> Result<f64, HarnessError> {
    let rule = face_rule(mesh.dim, degree)?;
    let fpts = faces.face_points(mesh, f);
    Ok(rule.integrate(&fpts, faces.measure[f], g) / faces.measure[f])
}

/// Mean over face `f` of the trace of `phi` from element `e` (exact for
/// P1-type spaces).
pub fn face_mean_trace(
    mesh: &SimplicialMesh,
    faces: &FaceSet,
    f: usize,
    phi: &FeFunction<'_>,
    e: usize,
) -> f64 {
    phi.eval(mesh, e, faces.centroid(mesh, f))
}

/// `||Pi_T^0 v - v||_{L^q(T)} / (|T|^{1/q - 1/p} sum_i h_i ||dv/dr_i||_{L^p(T)})`.
///
/// A numerically constant `v` returns 0 (the numerator is checked first);
/// a vanishing denominator with a non-trivial numerator is an undefined
/// ratio.
#[allow(clippy::too_many_arguments)]
pub fn projection_error_ratio(
    mesh: &SimplicialMesh,
    e: usize,
    geo: &ElementGeometry,
    v: &dyn Fn(Point) -> f64,
    grad_v: &dyn Fn(Point) -> Point,
    q: f64,
    p: f64,
    degree: usize,
) -> Result<f64, HarnessError> {
    let d = mesh.dim as f64;
    if !(p > 1.0) || !(q > 1.0) {
        return Err(HarnessError::ExponentRange {
            value: if p > 1.0 { q } else { p },
        });
    }
    if 1.0 - d / p < -d / q - 1e-12 {
        return Err(HarnessError::InadmissiblePair {
            q,
            p,
            dim: mesh.dim,
        });
    }
    let rule = simplex_rule(mesh.dim, degree)?;
    let pts = mesh.points_of(e);
    let measure = mesh.measure(e);
    let mean = rule.integrate(&pts, measure, v) / measure;
    let mut vmax = 0.0f64;
    let num = rule
        .integrate(&pts, measure, |x| {
            let val = v(x);
            vmax = vmax.max(val.abs());
            (mean - val).abs().powf(q)
        })
        .powf(1.0 / q);
    // constant v: numerator is roundoff noise relative to |T|^{1/q} |v|
    if num <= 1e-13 * measure.powf(1.0 / q) * vmax.max(1.0) {
        return Ok(0.0);
    }
    let mut denom = 0.0;
    for i in 0..mesh.dim {
        let ri = geo.r[i];
        let semi = rule
            .integrate(&pts, measure, |x| vecd::dot(ri, grad_v(x)).abs().powf(p))
            .powf(1.0 / p);
        denom += geo.h[i] * semi;
    }
    denom *= measure.powf(1.0 / q - 1.0 / p);
    if denom <= 0.0 {
        return Err(HarnessError::UndefinedRatio);
    }
    Ok(num / denom)
}
