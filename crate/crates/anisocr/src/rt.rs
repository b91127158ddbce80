//! Lowest-order Raviart-Thomas interpolation and its verification harnesses.
//!
//! The interpolant of a vector field takes one flux dof per face,
//! `c_F = int_F v . n_F`, which makes two facts structural: fluxes are
//! reproduced exactly, and `div I^RT v = Pi^0 div v` per element (both sides
//! equal the mean flux by the divergence theorem). The stability and error
//! harnesses report raw quotients; the estimates under test only claim
//! boundedness across a semi-regular family, so sweeps assert bounded
//! variation rather than a numeric constant.

use crate::fe::{DofMap, FeFunction, Space};
use crate::float::FloatExt;
use crate::geometry::{CondTag, ElementGeometry};
use crate::mesh::{FaceSet, SimplicialMesh};
use crate::quadrature::{face_rule, simplex_rule};
use crate::vecd::{self, Point};
use crate::HarnessError;

/// Default quadrature degree for face fluxes of callables.
pub const DEFAULT_FLUX_DEGREE: usize = 8;

/// Global RT interpolation: one flux per face against the face-set normal.
pub fn rt_interpolate<'a>(
    mesh: &SimplicialMesh,
    faces: &FaceSet,
    dofs: &'a DofMap,
    v: &dyn Fn(Point) -> Point,
    quad_degree: usize,
) -> Result<FeFunction<'a>, HarnessError> {
    assert_eq!(dofs.space, Space::Rt0);
    let rule = face_rule(mesh.dim, quad_degree)?;
    let mut f = FeFunction::zeros(dofs);
    for (face, dof) in dofs.face_dofs.iter().enumerate() {
        if let Some(g) = dof {
            let fpts = faces.face_points(mesh, face);
            let n = faces.normal[face];
            f.coeffs[*g] = rule.integrate(&fpts, faces.measure[face], |x| vecd::dot(v(x), n));
        }
    }
    Ok(f)
}

/// Max over elements of `|div I^RT v - Pi_T^0 div v|`, together with
/// `sup |div v|` over the quadrature points for scaling.
pub fn commuting_residual(
    mesh: &SimplicialMesh,
    faces: &FaceSet,
    dofs: &DofMap,
    v: &dyn Fn(Point) -> Point,
    div_v: &dyn Fn(Point) -> f64,
    quad_degree: usize,
) -> Result<(f64, f64), HarnessError> {
    let interp = rt_interpolate(mesh, faces, dofs, v, quad_degree)?;
    let rule = simplex_rule(mesh.dim, quad_degree)?;
    let mut worst = 0.0f64;
    let mut div_sup = 0.0f64;
    for e in 0..mesh.n_elements() {
        let pts = mesh.points_of(e);
        let mean_div = rule.integrate(&pts, mesh.measure(e), |x| {
            let d = div_v(x);
            div_sup = div_sup.max(d.abs());
            d
        }) / mesh.measure(e);
        worst = worst.max((interp.div(mesh, e) - mean_div).abs());
    }
    Ok((worst, div_sup))
}

/// `||I^RT v||_{L^p(Omega)} / ||v||_{W^{1,p}(Omega)}`.
///
/// `jac_v[k][j] = d v_k / d x_j`.
pub fn rt_stability_ratio(
    mesh: &SimplicialMesh,
    faces: &FaceSet,
    dofs: &DofMap,
    v: &dyn Fn(Point) -> Point,
    jac_v: &dyn Fn(Point) -> [[f64; 3]; 3],
    p: f64,
    quad_degree: usize,
) -> Result<f64, HarnessError> {
    let interp = rt_interpolate(mesh, faces, dofs, v, quad_degree)?;
    let rule = simplex_rule(mesh.dim, quad_degree)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for e in 0..mesh.n_elements() {
        let pts = mesh.points_of(e);
        num += rule.integrate(&pts, mesh.measure(e), |x| {
            vecd::norm(interp.eval_vec(mesh, e, x)).powf(p)
        });
        den += rule.integrate(&pts, mesh.measure(e), |x| {
            let j = jac_v(x);
            let mut frob = 0.0;
            for row in &j {
                frob += vecd::dot(*row, *row);
            }
            vecd::norm(v(x)).powf(p) + frob.sqrt().powf(p)
        });
    }
    let den = den.powf(1.0 / p);
    if den <= 0.0 {
        return Err(HarnessError::UndefinedRatio);
    }
    Ok(num.powf(1.0 / p) / den)
}

/// Per-element interpolation error quotient.
///
/// For 2D elements and 3D Type-1 elements the reference bound is
/// `(H_T/h_T) sum_i h_i ||dv/dr_i||_{L^p(T)} + h_T ||div v||_{L^p(T)}`;
/// for 3D Type-2 elements it is `(H_T/h_T) h_T |v|_{W^{1,p}(T)}`.
#[allow(clippy::too_many_arguments)]
pub fn rt_error_ratio(
    mesh: &SimplicialMesh,
    faces: &FaceSet,
    dofs: &DofMap,
    e: usize,
    geo: &ElementGeometry,
    v: &dyn Fn(Point) -> Point,
    jac_v: &dyn Fn(Point) -> [[f64; 3]; 3],
    p: f64,
    quad_degree: usize,
) -> Result<f64, HarnessError> {
    let interp = rt_interpolate(mesh, faces, dofs, v, quad_degree)?;
    let rule = simplex_rule(mesh.dim, quad_degree)?;
    let pts = mesh.points_of(e);
    let measure = mesh.measure(e);
    let mut vmax = 0.0f64;
    let num = rule
        .integrate(&pts, measure, |x| {
            let vv = v(x);
            vmax = vmax.max(vecd::norm(vv));
            vecd::norm(vecd::sub(interp.eval_vec(mesh, e, x), vv)).powf(p)
        })
        .powf(1.0 / p);
    if num <= 1e-13 * measure.powf(1.0 / p) * vmax.max(1.0) {
        return Ok(0.0);
    }
    let den = match geo.cond {
        CondTag::Cond1_2d | CondTag::Cond2_3dType1 => {
            let mut dirs = 0.0;
            for i in 0..mesh.dim {
                let ri = geo.r[i];
                let semi = rule
                    .integrate(&pts, measure, |x| {
                        let j = jac_v(x);
                        let dv = [
                            vecd::dot(j[0], ri),
                            vecd::dot(j[1], ri),
                            vecd::dot(j[2], ri),
                        ];
                        vecd::norm(dv).powf(p)
                    })
                    .powf(1.0 / p);
                dirs += geo.h[i] * semi;
            }
            let div_term = rule
                .integrate(&pts, measure, |x| {
                    let j = jac_v(x);
                    (j[0][0] + j[1][1] + j[2][2]).abs().powf(p)
                })
                .powf(1.0 / p);
            geo.gamma * dirs + geo.h_t * div_term
        }
        CondTag::Cond2_3dType2 => {
            let semi = rule
                .integrate(&pts, measure, |x| {
                    let j = jac_v(x);
                    let mut frob = 0.0;
                    for row in &j {
                        frob += vecd::dot(*row, *row);
                    }
                    frob.sqrt().powf(p)
                })
                .powf(1.0 / p);
            geo.gamma * geo.h_t * semi
        }
    };
    if den <= 0.0 {
        return Err(HarnessError::UndefinedRatio);
    }
    Ok(num / den)
}

/// Max flux-reproduction error `|int_F (I^RT v - v) . n_F| / max(1, |flux|)`
/// over all faces.
pub fn flux_reproduction_error(
    mesh: &SimplicialMesh,
    faces: &FaceSet,
    dofs: &DofMap,
    v: &dyn Fn(Point) -> Point,
    quad_degree: usize,
) -> Result<f64, HarnessError> {
    let interp = rt_interpolate(mesh, faces, dofs, v, quad_degree)?;
    let rule = face_rule(mesh.dim, quad_degree)?;
    let mut worst = 0.0f64;
    for f in 0..faces.n_faces() {
        let fpts = faces.face_points(mesh, f);
        let n = faces.normal[f];
        let (pe, _) = faces.plus[f];
        let target = rule.integrate(&fpts, faces.measure[f], |x| vecd::dot(v(x), n));
        let got = rule.integrate(&fpts, faces.measure[f], |x| {
            vecd::dot(interp.eval_vec(mesh, pe, x), n)
        });
        worst = worst.max((got - target).abs() / target.abs().max(1.0));
    }
    Ok(worst)
}
