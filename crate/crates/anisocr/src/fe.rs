//! CR, discontinuous-CR, RT0, P0 and elementwise-P1 spaces.
//!
//! The CR nodal basis on a simplex is `theta_i = 1 - d lambda_i`, dual to the
//! face-mean functionals `chi_i(q) = (1/|F_i|) int_{F_i} q`. The RT0 basis is
//! `theta_i = +-(x - p_i) / (d |T|)` with the sign fixed so that the flux
//! through face `j` against the chosen face normal is `delta_ij`.
//!
//! Global spaces:
//! * `DCCR` - one CR dof per (element, face), no coupling;
//! * `CR`   - one dof per face (face means single-valued across faces);
//! * `CR0`  - `CR` with boundary face dofs constrained to zero;
//! * `RT0`  - one flux dof per face against the face-set normal, which makes
//!   `[[v . n]]_F = 0` structural;
//! * `P0`   - one dof per element;
//! * `DC1`  - elementwise full P1 on the nodal (barycentric) basis.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::ElementGeometry;
use crate::mesh::{FaceSet, SimplicialMesh};
use crate::quadrature::{face_rule, QuadError};
use crate::vecd::{self, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Dccr,
    Cr,
    Cr0,
    Rt0,
    P0,
    Dc1,
}

impl Space {
    pub fn as_str(&self) -> &'static str {
        match self {
            Space::Dccr => "dccr",
            Space::Cr => "cr",
            Space::Cr0 => "cr0",
            Space::Rt0 => "rt0",
            Space::P0 => "p0",
            Space::Dc1 => "dc1",
        }
    }

    pub fn parse(s: &str) -> Option<Space> {
        match s {
            "dccr" => Some(Space::Dccr),
            "cr" => Some(Space::Cr),
            "cr0" => Some(Space::Cr0),
            "rt0" => Some(Space::Rt0),
            "p0" => Some(Space::P0),
            "dc1" => Some(Space::Dc1),
            _ => None,
        }
    }

    /// Scalar piecewise-P1 space (everything except `RT0` and `P0`).
    pub fn is_p1_scalar(&self) -> bool {
        matches!(self, Space::Dccr | Space::Cr | Space::Cr0 | Space::Dc1)
    }
}

/// Global dof layout for one space on one mesh.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub space: Space,
    pub n_dofs: usize,
    /// Local dofs per element.
    stride: usize,
    /// `element * stride + local -> global`; `None` is a constrained dof.
    cell_dofs: Vec<Option<usize>>,
    /// RT0 only: `+1` when the element is the plus owner of the local face.
    rt_signs: Vec<f64>,
    /// CR / CR0 / RT0: face to dof.
    pub face_dofs: Vec<Option<usize>>,
    /// CR0: boundary faces whose dofs are constrained away.
    pub constrained_boundary_faces: Vec<usize>,
}

impl DofMap {
    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn global(&self, e: usize, local: usize) -> Option<usize> {
        self.cell_dofs[e * self.stride + local]
    }

    pub fn rt_sign(&self, e: usize, local: usize) -> f64 {
        self.rt_signs[e * self.stride + local]
    }
}

/// Build the dof map of `space` over the mesh topology.
pub fn build_dofs(mesh: &SimplicialMesh, faces: &FaceSet, space: Space) -> DofMap {
    let d = mesh.dim;
    let ne = mesh.n_elements();
    let nf = faces.n_faces();
    match space {
        Space::Dccr | Space::Dc1 => {
            let stride = d + 1;
            let cell_dofs = (0..ne * stride).map(Some).collect();
            DofMap {
                space,
                n_dofs: ne * stride,
                stride,
                cell_dofs,
                rt_signs: Vec::new(),
                face_dofs: Vec::new(),
                constrained_boundary_faces: Vec::new(),
            }
        }
        Space::P0 => DofMap {
            space,
            n_dofs: ne,
            stride: 1,
            cell_dofs: (0..ne).map(Some).collect(),
            rt_signs: Vec::new(),
            face_dofs: Vec::new(),
            constrained_boundary_faces: Vec::new(),
        },
        Space::Cr | Space::Cr0 => {
            let mut face_dofs: Vec<Option<usize>> = vec![None; nf];
            let mut constrained = Vec::new();
            let mut next = 0usize;
            for f in 0..nf {
                if space == Space::Cr0 && faces.is_boundary(f) {
                    constrained.push(f);
                } else {
                    face_dofs[f] = Some(next);
                    next += 1;
                }
            }
            let stride = d + 1;
            let mut cell_dofs = vec![None; ne * stride];
            for e in 0..ne {
                for i in 0..stride {
                    cell_dofs[e * stride + i] = face_dofs[faces.face_of(e, i)];
                }
            }
            DofMap {
                space,
                n_dofs: next,
                stride,
                cell_dofs,
                rt_signs: Vec::new(),
                face_dofs,
                constrained_boundary_faces: constrained,
            }
        }
        Space::Rt0 => {
            let stride = d + 1;
            let mut cell_dofs = vec![None; ne * stride];
            let mut rt_signs = vec![1.0; ne * stride];
            for e in 0..ne {
                for i in 0..stride {
                    let f = faces.face_of(e, i);
                    cell_dofs[e * stride + i] = Some(f);
                    rt_signs[e * stride + i] = if faces.plus[f].0 == e { 1.0 } else { -1.0 };
                }
            }
            DofMap {
                space,
                n_dofs: nf,
                stride,
                cell_dofs,
                rt_signs,
                face_dofs: (0..nf).map(Some).collect(),
                constrained_boundary_faces: Vec::new(),
            }
        }
    }
}

/// CR nodal basis `theta_i(x) = 1 - d lambda_i(x)` on element `e`.
pub fn eval_cr_basis(mesh: &SimplicialMesh, e: usize, i: usize, x: Point) -> f64 {
    1.0 - mesh.dim as f64 * mesh.barycentric(e, x)[i]
}

/// Constant gradient of the CR basis function.
pub fn cr_basis_grad(mesh: &SimplicialMesh, e: usize, i: usize) -> Point {
    vecd::scale(mesh.bary_gradient(e, i), -(mesh.dim as f64))
}

/// CR dof functional: mean of `q` over the face opposite local vertex `i`.
pub fn apply_cr_dof(
    mesh: &SimplicialMesh,
    faces: &FaceSet,
    e: usize,
    i: usize,
    q: &dyn Fn(Point) -> f64,
    quad_degree: usize,
) -> Result<f64, QuadError> {
    let f = faces.face_of(e, i);
    let rule = face_rule(mesh.dim, quad_degree)?;
    let fpts = faces.face_points(mesh, f);
    let area = faces.measure[f];
    Ok(rule.integrate(&fpts, area, q) / area)
}

/// RT0 basis on element `e` for local face `i`, oriented by the face-set
/// normal: `sign * (x - p_i) / (d |T|)`.
pub fn eval_rt_basis(mesh: &SimplicialMesh, dofs: &DofMap, e: usize, i: usize, x: Point) -> Point {
    let sign = dofs.rt_sign(e, i);
    let p = mesh.vertex(mesh.element(e)[i]);
    let scale = sign / (mesh.dim as f64 * mesh.measure(e));
    vecd::scale(vecd::sub(x, p), scale)
}

/// Divergence of the RT0 basis: `sign / |T|`, constant.
pub fn rt_basis_div(mesh: &SimplicialMesh, dofs: &DofMap, e: usize, i: usize) -> f64 {
    dofs.rt_sign(e, i) / mesh.measure(e)
}

/// Finite element function: coefficients against a dof map.
#[derive(Debug, Clone)]
pub struct FeFunction<'a> {
    pub dofs: &'a DofMap,
    pub coeffs: Vec<f64>,
}

impl<'a> FeFunction<'a> {
    pub fn zeros(dofs: &'a DofMap) -> Self {
        Self {
            dofs,
            coeffs: vec![0.0; dofs.n_dofs],
        }
    }

    pub fn from_coeffs(dofs: &'a DofMap, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), dofs.n_dofs, "coefficient length mismatch");
        Self { dofs, coeffs }
    }

    /// Value of a scalar-space function at `x` inside element `e`.
    pub fn eval(&self, mesh: &SimplicialMesh, e: usize, x: Point) -> f64 {
        match self.dofs.space {
            Space::P0 => self.coeffs[e],
            Space::Rt0 => panic!("eval on a vector space; use eval_vec"),
            Space::Dc1 => {
                let lam = mesh.barycentric(e, x);
                (0..self.dofs.stride)
                    .filter_map(|i| self.dofs.global(e, i).map(|g| self.coeffs[g] * lam[i]))
                    .sum()
            }
            _ => (0..self.dofs.stride)
                .filter_map(|i| {
                    self.dofs
                        .global(e, i)
                        .map(|g| self.coeffs[g] * eval_cr_basis(mesh, e, i, x))
                })
                .sum(),
        }
    }

    /// Constant gradient of a scalar P1-type function on element `e`.
    pub fn grad(&self, mesh: &SimplicialMesh, e: usize) -> Point {
        let mut g = [0.0; 3];
        match self.dofs.space {
            Space::P0 => g,
            Space::Rt0 => panic!("grad on a vector space"),
            Space::Dc1 => {
                for i in 0..self.dofs.stride {
                    if let Some(gi) = self.dofs.global(e, i) {
                        g = vecd::axpy(g, self.coeffs[gi], mesh.bary_gradient(e, i));
                    }
                }
                g
            }
            _ => {
                for i in 0..self.dofs.stride {
                    if let Some(gi) = self.dofs.global(e, i) {
                        g = vecd::axpy(g, self.coeffs[gi], cr_basis_grad(mesh, e, i));
                    }
                }
                g
            }
        }
    }

    /// Value of an RT0 function at `x` inside element `e`.
    pub fn eval_vec(&self, mesh: &SimplicialMesh, e: usize, x: Point) -> Point {
        assert_eq!(self.dofs.space, Space::Rt0);
        let mut v = [0.0; 3];
        for i in 0..self.dofs.stride {
            if let Some(g) = self.dofs.global(e, i) {
                v = vecd::axpy(v, self.coeffs[g], eval_rt_basis(mesh, self.dofs, e, i, x));
            }
        }
        v
    }

    /// Divergence of an RT0 function on element `e` (constant).
    pub fn div(&self, mesh: &SimplicialMesh, e: usize) -> f64 {
        assert_eq!(self.dofs.space, Space::Rt0);
        (0..self.dofs.stride)
            .filter_map(|i| {
                self.dofs
                    .global(e, i)
                    .map(|g| self.coeffs[g] * rt_basis_div(mesh, self.dofs, e, i))
            })
            .sum()
    }
}

/// Mean over each face of the jump `[[phi]]` as a sparse linear functional of
/// the coefficients: row `f` holds `(dof, weight)` pairs such that
/// `Pi_F^0 [[phi]] = sum w_k c_k`. The boundary convention takes the single
/// trace. Entries cancelling to zero (CR interior faces) are dropped.
pub fn face_mean_jump_rows(
    mesh: &SimplicialMesh,
    faces: &FaceSet,
    dofs: &DofMap,
) -> Vec<Vec<(usize, f64)>> {
    let mut rows = Vec::with_capacity(faces.n_faces());
    for f in 0..faces.n_faces() {
        let centroid = faces.centroid(mesh, f);
        let mut row: Vec<(usize, f64)> = Vec::new();
        let mut add_side = |e: usize, sign: f64| {
            for i in 0..dofs.stride {
                if let Some(g) = dofs.global(e, i) {
                    let mean = match dofs.space {
                        Space::P0 => 1.0,
                        Space::Dc1 => mesh.barycentric(e, centroid)[i],
                        _ => eval_cr_basis(mesh, e, i, centroid),
                    };
                    if mean != 0.0 {
                        row.push((g, sign * mean));
                    }
                }
            }
        };
        add_side(faces.plus[f].0, 1.0);
        if let Some((me, _)) = faces.minus[f] {
            add_side(me, -1.0);
        }
        // merge duplicate dofs; exact cancellations (single-valued CR face
        // dofs) drop out
        row.sort_by_key(|&(g, _)| g);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for (g, w) in row {
            match merged.last_mut() {
                Some((lg, lw)) if *lg == g => *lw += w,
                _ => merged.push((g, w)),
            }
        }
        merged.retain(|&(_, w)| w.abs() > 1e-13);
        rows.push(merged);
    }
    rows
}

/// Interpolate a callable into a scalar space by applying its dof
/// functionals: face means for the CR family, vertex values for `DC1`, cell
/// means for `P0`.
pub fn interpolate_scalar<'a>(
    mesh: &SimplicialMesh,
    faces: &FaceSet,
    dofs: &'a DofMap,
    v: &dyn Fn(Point) -> f64,
    quad_degree: usize,
) -> Result<FeFunction<'a>, QuadError> {
    let mut f = FeFunction::zeros(dofs);
    match dofs.space {
        Space::Cr | Space::Cr0 => {
            let rule = face_rule(mesh.dim, quad_degree)?;
            for (face, dof) in dofs.face_dofs.iter().enumerate() {
                if let Some(g) = dof {
                    let fpts = faces.face_points(mesh, face);
                    f.coeffs[*g] =
                        rule.integrate(&fpts, faces.measure[face], v) / faces.measure[face];
                }
            }
        }
        Space::Dccr => {
            for e in 0..mesh.n_elements() {
                for i in 0..dofs.stride {
                    let g = dofs.global(e, i).unwrap();
                    f.coeffs[g] = apply_cr_dof(mesh, faces, e, i, v, quad_degree)?;
                }
            }
        }
        Space::Dc1 => {
            for e in 0..mesh.n_elements() {
                for (i, &vi) in mesh.element(e).iter().enumerate() {
                    f.coeffs[dofs.global(e, i).unwrap()] = v(mesh.vertex(vi));
                }
            }
        }
        Space::P0 => {
            let rule = crate::quadrature::simplex_rule(mesh.dim, quad_degree)?;
            for e in 0..mesh.n_elements() {
                let pts = mesh.points_of(e);
                f.coeffs[e] = rule.integrate(&pts, mesh.measure(e), v) / mesh.measure(e);
            }
        }
        Space::Rt0 => panic!("use rt_interpolate for vector fields"),
    }
    Ok(f)
}

/// Push a reference vector field through the two-step Piola transform of
/// `geo`: `v(x) = (1/det A) A v_hat(Phi^-1(x))` with `A = A_T At Ah`.
pub fn piola_push<'f>(
    geo: &'f ElementGeometry,
    v_hat: &'f dyn Fn(Point) -> Point,
) -> impl Fn(Point) -> Point + 'f {
    let a = geo.linear_factor();
    let det = geo.det_rot() * geo.det_tilde_hat();
    move |x: Point| {
        let x_hat = phi_inv(geo, x);
        let vh = v_hat(x_hat);
        let mut v = [0.0; 3];
        for r in 0..3 {
            v[r] = (a[r][0] * vh[0] + a[r][1] * vh[1] + a[r][2] * vh[2]) / det;
        }
        v
    }
}

/// Inverse of the two-step affine map.
pub fn phi_inv(geo: &ElementGeometry, x: Point) -> Point {
    // x_hat = Ah^-1 At^-1 A_T^T (x - b)
    let y = vecd::sub(x, geo.b);
    let rot_t = [
        geo.a_rot[0][0] * y[0] + geo.a_rot[1][0] * y[1] + geo.a_rot[2][0] * y[2],
        geo.a_rot[0][1] * y[0] + geo.a_rot[1][1] * y[1] + geo.a_rot[2][1] * y[2],
        geo.a_rot[0][2] * y[0] + geo.a_rot[1][2] * y[1] + geo.a_rot[2][2] * y[2],
    ];
    // back-substitute the upper-triangular shear
    let t = &geo.a_tilde;
    let mut z = [0.0; 3];
    z[2] = rot_t[2] / t[2][2];
    z[1] = (rot_t[1] - t[1][2] * z[2]) / t[1][1];
    z[0] = rot_t[0] - t[0][1] * z[1] - t[0][2] * z[2];
    [
        z[0] / geo.a_hat[0],
        z[1] / geo.a_hat[1],
        z[2] / geo.a_hat[2],
    ]
}
