//! Per-element two-step affine decomposition and semi-regularity.
//!
//! Every simplex `T` factors as `Phi(x) = A_T * At * Ah * x + b` where `Ah =
//! diag(h_1..h_d)` carries the edge scales, `At` is a unit-diagonal shear
//! with bounded norm, and `A_T` is orthogonal (rotation or mirror). The
//! labelling of the vertices is fixed by the longest-edge rule in 2D and the
//! shortest-edge/half-space rule in 3D; ties are broken by lexicographic
//! comparison of sorted vertex-index pairs so the decomposition is
//! deterministic.
//!
//! The flatness measure is `H_T = (prod h_i / |T|) h_T`; a mesh family is
//! semi-regular when `gamma_T = H_T / h_T` stays bounded, which permits
//! unbounded aspect ratios.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::float::FloatExt;
use crate::la;
use crate::mesh::{face_measure, simplex_measure, SimplicialMesh};
use crate::quadrature::{simplex_rule, QuadError};
use crate::vecd::{self, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CondTag {
    /// 2D, longest-edge labelling.
    Cond1_2d,
    /// 3D, `p3` and `p4` in the same half-space (regular vertex property).
    Cond2_3dType1,
    /// 3D, `p3` and `p4` in different half-spaces.
    Cond2_3dType2,
}

impl CondTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CondTag::Cond1_2d => "COND1_2D",
            CondTag::Cond2_3dType1 => "COND2_3D_TYPE1",
            CondTag::Cond2_3dType2 => "COND2_3D_TYPE2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShearParams {
    TwoD {
        s: f64,
        t: f64,
    },
    ThreeD {
        s1: f64,
        t1: f64,
        s21: f64,
        s22: f64,
        t2: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryError {
    Degenerate {
        detail: String,
    },
    /// Labelling could not satisfy the sign/half-space constraints; carries
    /// the six (three in 2D) edge lengths for the report.
    Classification {
        edges: Vec<f64>,
        detail: String,
    },
    Quadrature(QuadError),
}

impl core::fmt::Display for GeometryError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GeometryError::Degenerate { detail } => write!(f, "degenerate simplex: {detail}"),
            GeometryError::Classification { edges, detail } => {
                write!(f, "labelling failed ({detail}); edge lengths {edges:?}")
            }
            GeometryError::Quadrature(e) => write!(f, "{e}"),
        }
    }
}

impl From<QuadError> for GeometryError {
    fn from(e: QuadError) -> Self {
        GeometryError::Quadrature(e)
    }
}

/// Two-step decomposition record of one element.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub dim: usize,
    pub cond: CondTag,
    /// `perm[i]` is the input-local index of the labelled vertex `p_{i+1}`.
    pub perm: [usize; 4],
    /// Edge scales `h_1..h_d` (trailing entries zero).
    pub h: [f64; 3],
    /// Diameter `h_T`.
    pub h_t: f64,
    /// `H_T = (prod h_i / |T|) h_T`.
    pub big_h_t: f64,
    /// `gamma_T = H_T / h_T = prod h_i / |T|`.
    pub gamma: f64,
    /// Diagonal scaling factor.
    pub a_hat: [f64; 3],
    /// Shear factor, row-major.
    pub a_tilde: [[f64; 3]; 3],
    pub shear: ShearParams,
    /// Orthogonal factor (rotation or mirror), columns are the mapped frame.
    pub a_rot: [[f64; 3]; 3],
    /// Translation.
    pub b: Point,
    /// Unit directions `r_1..r_d`.
    pub r: [Point; 3],
    /// Height `l_{T,F}` over the face opposite input-local vertex `i`.
    pub ell: [f64; 4],
    /// `|T|_d`.
    pub measure: f64,
}

impl ElementGeometry {
    /// Reference vertices matching the condition tag.
    pub fn reference_vertices(&self) -> [Point; 4] {
        match self.cond {
            CondTag::Cond1_2d => [
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0],
            ],
            CondTag::Cond2_3dType1 => [
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
            ],
            CondTag::Cond2_3dType2 => [
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [1.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
            ],
        }
    }

    /// The full affine map `Phi(x) = A_T At Ah x + b`.
    pub fn phi(&self, x_hat: Point) -> Point {
        let scaled = [
            self.a_hat[0] * x_hat[0],
            self.a_hat[1] * x_hat[1],
            self.a_hat[2] * x_hat[2],
        ];
        let sheared = mat_apply(&self.a_tilde, scaled);
        vecd::add(mat_apply(&self.a_rot, sheared), self.b)
    }

    /// Combined linear factor `A = A_T At Ah`.
    pub fn linear_factor(&self) -> [[f64; 3]; 3] {
        let mut ta = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                ta[i][j] = self.a_tilde[i][j] * self.a_hat[j];
            }
        }
        mat_mul(&self.a_rot, &ta)
    }

    /// `det(At Ah)`; its absolute value equals `d! |T|`.
    pub fn det_tilde_hat(&self) -> f64 {
        let det_tilde = match self.shear {
            ShearParams::TwoD { t, .. } => t,
            ShearParams::ThreeD { t1, t2, .. } => t1 * t2,
        };
        let det_hat: f64 = self.a_hat.iter().take(self.dim).product();
        det_tilde * det_hat
    }

    /// `det(A_T)`, `+1` for rotations, `-1` for mirrors.
    pub fn det_rot(&self) -> f64 {
        let m = &self.a_rot;
        if self.dim == 2 {
            m[0][0] * m[1][1] - m[0][1] * m[1][0]
        } else {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
    }

    /// `(||At||_2, ||At^-1||_2)`.
    pub fn tilde_norms(&self) -> (f64, f64) {
        let (smax, smin) = la::singular_extremes(&self.a_tilde, self.dim);
        (smax, 1.0 / smin)
    }

    /// `(||A_T||_2, ||A_T^-1||_2)`; both are 1 for an orthogonal factor.
    pub fn rot_norms(&self) -> (f64, f64) {
        let (smax, smin) = la::singular_extremes(&self.a_rot, self.dim);
        (smax, 1.0 / smin)
    }

    /// Max over labelled vertices of `|Phi(ref vertex) - physical vertex|`,
    /// for the element whose points produced this record.
    pub fn vertex_reproduction_error(&self, points: &[Point; 4]) -> f64 {
        let refs = self.reference_vertices();
        let mut worst = 0.0f64;
        for i in 0..=self.dim {
            let mapped = self.phi(refs[i]);
            worst = worst.max(vecd::dist(mapped, points[self.perm[i]]));
        }
        worst
    }
}

fn mat_apply(m: &[[f64; 3]; 3], x: Point) -> Point {
    let mut y = [0.0; 3];
    for i in 0..3 {
        y[i] = m[i][0] * x[0] + m[i][1] * x[1] + m[i][2] * x[2];
    }
    y
}

fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

/// All vertex-index pairs of a `d`-simplex in lexicographic order.
fn edge_pairs(nv: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..nv {
        for b in (a + 1)..nv {
            out.push((a, b));
        }
    }
    out
}

fn heights(dim: usize, pts: &[Point; 4], measure: f64) -> [f64; 4] {
    let dfact = if dim == 2 { 2.0 } else { 6.0 };
    let mut out = [0.0; 4];
    for (i, slot) in out.iter_mut().enumerate().take(dim + 1) {
        let mut fpts: Vec<Point> = Vec::with_capacity(dim);
        for (j, p) in pts.iter().enumerate().take(dim + 1) {
            if j != i {
                fpts.push(*p);
            }
        }
        *slot = dfact * measure / face_measure(dim, &fpts);
    }
    out
}

fn diameter(dim: usize, pts: &[Point; 4]) -> f64 {
    let mut h = 0.0f64;
    for (a, b) in edge_pairs(dim + 1) {
        h = h.max(vecd::dist(pts[a], pts[b]));
    }
    h
}

/// Labelled decomposition of a triangle: `p2 p3` is the longest edge,
/// `h_1 = |p1 - p2| >= h_2 = |p1 - p3|`, and `p3~ = (h_2 s, h_2 t)` with
/// `s^2 + t^2 = 1`, `t > 0`.
pub fn decompose_2d(pts: [Point; 3]) -> Result<ElementGeometry, GeometryError> {
    let full = [pts[0], pts[1], pts[2], [0.0; 3]];
    let measure = simplex_measure(2, &full);
    if !(measure > crate::mesh::DEGENERACY_THRESHOLD) {
        return Err(GeometryError::Degenerate {
            detail: format!("triangle measure {measure:.3e}"),
        });
    }
    // longest edge, lexicographic tie-break
    let mut longest = (0usize, 1usize);
    let mut hmax = -1.0;
    for (a, b) in edge_pairs(3) {
        let len = vecd::dist(pts[a], pts[b]);
        if len > hmax {
            hmax = len;
            longest = (a, b);
        }
    }
    let p1 = 3 - longest.0 - longest.1;
    let la_ = vecd::dist(pts[p1], pts[longest.0]);
    let lb = vecd::dist(pts[p1], pts[longest.1]);
    // h_2 <= h_1; on a tie keep the lexicographically smaller pair as h_1
    let (p2, p3) = if la_ > lb || (la_ == lb && longest.0 < longest.1) {
        (longest.0, longest.1)
    } else {
        (longest.1, longest.0)
    };
    let h1 = vecd::dist(pts[p1], pts[p2]);
    let h2 = vecd::dist(pts[p1], pts[p3]);
    let u = vecd::scale(vecd::sub(pts[p2], pts[p1]), 1.0 / h1);
    let w = vecd::scale(vecd::sub(pts[p3], pts[p1]), 1.0 / h2);
    let s = vecd::dot(u, w);
    let tv = vecd::sub(w, vecd::scale(u, s));
    let t = vecd::norm(tv);
    if !(t > 0.0) {
        return Err(GeometryError::Degenerate {
            detail: "collinear vertices".into(),
        });
    }
    // second Gram-Schmidt pass keeps the frame orthogonal to rounding even
    // when w is nearly parallel to u
    let v0 = vecd::scale(tv, 1.0 / t);
    let v = vecd::unit(vecd::sub(v0, vecd::scale(u, vecd::dot(u, v0))));
    let a_rot = [[u[0], v[0], 0.0], [u[1], v[1], 0.0], [0.0, 0.0, 1.0]];
    let a_tilde = [[1.0, s, 0.0], [0.0, t, 0.0], [0.0, 0.0, 1.0]];
    let h_t = hmax;
    let gamma = h1 * h2 / measure;
    Ok(ElementGeometry {
        dim: 2,
        cond: CondTag::Cond1_2d,
        perm: [p1, p2, p3, 0],
        h: [h1, h2, 0.0],
        h_t,
        big_h_t: gamma * h_t,
        gamma,
        a_hat: [h1, h2, 1.0],
        a_tilde,
        shear: ShearParams::TwoD { s, t },
        a_rot,
        b: pts[p1],
        r: [u, w, [0.0; 3]],
        ell: heights(2, &full, measure),
        measure,
    })
}

/// Labelled decomposition of a tetrahedron per the shortest-edge rule:
/// `h_2 = |L_min|`, `h_1` is the longest of the four edges incident to
/// `L_min`, the half-space test on the plane through the midpoint of that
/// edge classifies Type 1 / Type 2, and points exactly on the plane count as
/// `p1`'s half-space.
pub fn decompose_3d(pts: [Point; 4]) -> Result<ElementGeometry, GeometryError> {
    let measure = simplex_measure(3, &pts);
    if !(measure > crate::mesh::DEGENERACY_THRESHOLD) {
        return Err(GeometryError::Degenerate {
            detail: format!("tetrahedron measure {measure:.3e}"),
        });
    }
    let pairs = edge_pairs(4);
    let lengths: Vec<f64> = pairs
        .iter()
        .map(|&(a, b)| vecd::dist(pts[a], pts[b]))
        .collect();
    let edge_report = || lengths.clone();
    // shortest edge, lexicographic tie-break (first strict minimum)
    let mut min_idx = 0;
    for (i, &len) in lengths.iter().enumerate() {
        if len < lengths[min_idx] {
            min_idx = i;
        }
    }
    let lmin = pairs[min_idx];
    let h2 = lengths[min_idx];
    // longest among the four edges sharing exactly one endpoint with L_min
    let mut max_idx: Option<usize> = None;
    for (i, &(a, b)) in pairs.iter().enumerate() {
        let shared = [a, b]
            .iter()
            .filter(|&&v| v == lmin.0 || v == lmin.1)
            .count();
        if shared == 1 {
            match max_idx {
                Some(m) if lengths[i] <= lengths[m] => {}
                _ => max_idx = Some(i),
            }
        }
    }
    let max_idx = max_idx.expect("a tetrahedron has edges incident to L_min");
    let lmax = pairs[max_idx];
    let h1 = lengths[max_idx];
    // endpoint of L_max shared with L_min, and the free endpoint
    let (shared, free) = if lmax.0 == lmin.0 || lmax.0 == lmin.1 {
        (lmax.0, lmax.1)
    } else {
        (lmax.1, lmax.0)
    };
    let p3 = if lmin.0 == shared { lmin.1 } else { lmin.0 };
    let p4 = (0..4)
        .find(|&v| v != shared && v != free && v != p3)
        .unwrap();
    // half-space test: plane through the midpoint of L_max, normal p1 - p2;
    // side > 0 means the shared endpoint's half-space, on-plane counts as
    // that side too
    let mid = vecd::scale(vecd::add(pts[shared], pts[free]), 0.5);
    let axis = vecd::sub(pts[shared], pts[free]);
    let side4 = vecd::dot(vecd::sub(pts[p4], mid), axis);
    let (cond, p1, p2) = if side4 >= 0.0 {
        (CondTag::Cond2_3dType1, shared, free)
    } else {
        (CondTag::Cond2_3dType2, free, shared)
    };
    let h3 = vecd::dist(pts[p1], pts[p4]);
    let r1 = vecd::scale(vecd::sub(pts[p2], pts[p1]), 1.0 / h1);
    let r2 = match cond {
        CondTag::Cond2_3dType1 => vecd::unit(vecd::sub(pts[p3], pts[p1])),
        _ => vecd::unit(vecd::sub(pts[p3], pts[p2])),
    };
    let r3 = vecd::scale(vecd::sub(pts[p4], pts[p1]), 1.0 / h3);
    // orthogonal frame and shear parameters
    let c1 = r1;
    let (s1, w2) = match cond {
        CondTag::Cond2_3dType1 => {
            let s1 = vecd::dot(c1, r2);
            (s1, vecd::sub(r2, vecd::scale(c1, s1)))
        }
        _ => {
            let s1 = -vecd::dot(c1, r2);
            (s1, vecd::add(r2, vecd::scale(c1, s1)))
        }
    };
    let t1 = vecd::norm(w2);
    if !(t1 > 0.0) {
        return Err(GeometryError::Degenerate {
            detail: "collinear vertices".into(),
        });
    }
    // second Gram-Schmidt pass against near-parallel edge directions
    let c2_raw = vecd::scale(w2, 1.0 / t1);
    let c2 = vecd::unit(vecd::sub(c2_raw, vecd::scale(c1, vecd::dot(c1, c2_raw))));
    let s21 = vecd::dot(c1, r3);
    let s22 = vecd::dot(c2, r3);
    let w3 = vecd::sub(vecd::sub(r3, vecd::scale(c1, s21)), vecd::scale(c2, s22));
    let t2 = vecd::norm(w3);
    if !(t2 > 0.0) {
        return Err(GeometryError::Degenerate {
            detail: "coplanar vertices".into(),
        });
    }
    let c3_raw = vecd::scale(w3, 1.0 / t2);
    let c3_mid = vecd::sub(c3_raw, vecd::scale(c1, vecd::dot(c1, c3_raw)));
    let c3 = vecd::unit(vecd::sub(c3_mid, vecd::scale(c2, vecd::dot(c2, c3_mid))));
    // the labelling must satisfy the sign constraints of the shear factor
    let tol = 1e-10 * h1;
    if s1 <= 0.0 || h2 * s1 > h1 / 2.0 + tol || h3 * s21 > h1 / 2.0 + tol {
        return Err(GeometryError::Classification {
            edges: edge_report(),
            detail: format!(
                "s1 = {s1:.3e}, h2 s1 = {:.3e}, h3 s21 = {:.3e}, h1/2 = {:.3e}",
                h2 * s1,
                h3 * s21,
                h1 / 2.0
            ),
        });
    }
    let sgn = if cond == CondTag::Cond2_3dType1 {
        1.0
    } else {
        -1.0
    };
    let a_tilde = [[1.0, sgn * s1, s21], [0.0, t1, s22], [0.0, 0.0, t2]];
    let a_rot = [
        [c1[0], c2[0], c3[0]],
        [c1[1], c2[1], c3[1]],
        [c1[2], c2[2], c3[2]],
    ];
    let h_t = diameter(3, &pts);
    let gamma = h1 * h2 * h3 / measure;
    Ok(ElementGeometry {
        dim: 3,
        cond,
        perm: [p1, p2, p3, p4],
        h: [h1, h2, h3],
        h_t,
        big_h_t: gamma * h_t,
        gamma,
        a_hat: [h1, h2, h3],
        a_tilde,
        shear: ShearParams::ThreeD {
            s1,
            t1,
            s21,
            s22,
            t2,
        },
        a_rot,
        b: pts[p1],
        r: [r1, r2, r3],
        ell: heights(3, &pts, measure),
        measure,
    })
}

/// Decomposition of element `e` of a mesh.
pub fn element_geometry(mesh: &SimplicialMesh, e: usize) -> Result<ElementGeometry, GeometryError> {
    let pts = mesh.points_of(e);
    match mesh.dim {
        2 => decompose_2d([pts[0], pts[1], pts[2]]),
        _ => decompose_3d(pts),
    }
}

/// Per-element `gamma_T = H_T / h_T` and the mesh maximum.
pub fn semi_regularity(mesh: &SimplicialMesh) -> Result<(Vec<f64>, f64), GeometryError> {
    let mut gammas = Vec::with_capacity(mesh.n_elements());
    let mut worst = 0.0f64;
    for e in 0..mesh.n_elements() {
        let g = element_geometry(mesh, e)?.gamma;
        worst = worst.max(g);
        gammas.push(g);
    }
    Ok((gammas, worst))
}

/// Aspect ratio `h_T / min_F l_{T,F}` of element `e`.
pub fn element_aspect(mesh: &SimplicialMesh, e: usize) -> f64 {
    let pts = mesh.points_of(e);
    let measure = mesh.measure(e);
    let ell = heights(mesh.dim, &pts, measure);
    let lmin = ell[..=mesh.dim]
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    mesh.diameter(e) / lmin
}

/// Directional seminorms `||dv/dr_i||_{L^p(T)}` for `i = 1..d`, integrated
/// with a rule exact to `quad_degree`.
pub fn directional_seminorm(
    mesh: &SimplicialMesh,
    e: usize,
    geo: &ElementGeometry,
    grad_v: &dyn Fn(Point) -> Point,
    p: f64,
    quad_degree: usize,
) -> Result<[f64; 3], GeometryError> {
    let rule = simplex_rule(mesh.dim, quad_degree)?;
    let pts = mesh.points_of(e);
    let mut out = [0.0; 3];
    for i in 0..mesh.dim {
        let ri = geo.r[i];
        let integral = rule.integrate(&pts, mesh.measure(e), |x| {
            vecd::dot(ri, grad_v(x)).abs().powf(p)
        });
        out[i] = integral.powf(1.0 / p);
    }
    Ok(out)
}
