//! Conforming simplicial meshes in two and three dimensions.
//!
//! A mesh is a list of vertices plus `(d+1)`-tuples of vertex indices; the
//! element order in the input is the stable global ordering used for the
//! plus/minus face convention. [`build_faces`] derives the face topology:
//! every `(d-1)`-subsimplex appears exactly once, interior faces carry the
//! owner pair `(T_plus, T_minus)` with `element_index(T_plus) >
//! element_index(T_minus)` and the unit normal pointing from plus to minus,
//! boundary faces carry the outward normal.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::float::FloatExt;
use crate::vecd::{self, Point};

/// An element is degenerate when its measure falls below this exact-zero
/// guard. Anisotropy is never treated as degeneracy.
pub const DEGENERACY_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub enum MeshError {
    /// Malformed header or body line in the mesh text format.
    Header { line: usize, detail: String },
    /// Element references a vertex index outside the vertex table.
    IndexOutOfRange {
        element: usize,
        index: usize,
        n_vertices: usize,
    },
    /// Element lists the same vertex twice.
    DuplicateVertex { element: usize },
    /// Element with (numerically) zero measure.
    DegenerateElement { element: usize, measure: f64 },
    /// Hanging node, overlapping elements, or a face shared by more than two
    /// elements.
    Nonconforming { detail: String },
    /// A face id that does not belong to the element it was queried against.
    NotAFace { element: usize, face: usize },
}

impl core::fmt::Display for MeshError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MeshError::Header { line, detail } => {
                write!(f, "malformed mesh file at line {line}: {detail}")
            }
            MeshError::IndexOutOfRange {
                element,
                index,
                n_vertices,
            } => write!(
                f,
                "element {element} references vertex {index} of {n_vertices}"
            ),
            MeshError::DuplicateVertex { element } => {
                write!(f, "element {element} repeats a vertex index")
            }
            MeshError::DegenerateElement { element, measure } => {
                write!(f, "element {element} is degenerate (measure {measure:.3e})")
            }
            MeshError::Nonconforming { detail } => write!(f, "mesh is not conformal: {detail}"),
            MeshError::NotAFace { element, face } => {
                write!(f, "face {face} is not a face of element {element}")
            }
        }
    }
}

/// Simplicial mesh of a polyhedral domain, `d` in `{2, 3}`.
///
/// Immutable after construction; construction validates index ranges,
/// distinctness and non-degeneracy, and precomputes element measures and
/// barycentric coordinate maps.
#[derive(Debug, Clone)]
pub struct SimplicialMesh {
    pub dim: usize,
    vertices: Vec<Point>,
    /// Flat connectivity, stride `dim + 1`, in input order.
    elements: Vec<usize>,
    measures: Vec<f64>,
    /// Per element, row-major `(d+1) x (d+1)` coefficients of the barycentric
    /// coordinates: `lambda_i(x) = bary[i][0] + sum_k bary[i][k+1] * x_k`.
    bary: Vec<f64>,
}

impl SimplicialMesh {
    pub fn new(
        dim: usize,
        vertices: Vec<Point>,
        element_indices: Vec<usize>,
    ) -> Result<Self, MeshError> {
        assert!(dim == 2 || dim == 3, "only d=2 and d=3 are supported");
        let nv = dim + 1;
        assert!(
            element_indices.len() % nv == 0,
            "element list length must be a multiple of d+1"
        );
        let ne = element_indices.len() / nv;
        for e in 0..ne {
            let conn = &element_indices[e * nv..(e + 1) * nv];
            for &i in conn {
                if i >= vertices.len() {
                    return Err(MeshError::IndexOutOfRange {
                        element: e,
                        index: i,
                        n_vertices: vertices.len(),
                    });
                }
            }
            for a in 0..nv {
                for b in (a + 1)..nv {
                    if conn[a] == conn[b] {
                        return Err(MeshError::DuplicateVertex { element: e });
                    }
                }
            }
        }
        let mut mesh = Self {
            dim,
            vertices,
            elements: element_indices,
            measures: Vec::new(),
            bary: Vec::new(),
        };
        mesh.measures = (0..ne)
            .map(|e| simplex_measure(dim, &mesh.points_of(e)))
            .collect();
        for (e, &m) in mesh.measures.iter().enumerate() {
            if !(m > DEGENERACY_THRESHOLD) {
                return Err(MeshError::DegenerateElement {
                    element: e,
                    measure: m,
                });
            }
        }
        mesh.bary = build_barycentric(&mesh)?;
        Ok(mesh)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len() / (self.dim + 1)
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i]
    }

    /// Vertex indices of element `e`, in file order.
    pub fn element(&self, e: usize) -> &[usize] {
        let nv = self.dim + 1;
        &self.elements[e * nv..(e + 1) * nv]
    }

    /// Vertex coordinates of element `e`; entries past `dim + 1` are zero.
    pub fn points_of(&self, e: usize) -> [Point; 4] {
        let mut out = [[0.0; 3]; 4];
        for (slot, &vi) in out.iter_mut().zip(self.element(e)) {
            *slot = self.vertices[vi];
        }
        out
    }

    /// `|T|_d` of element `e`.
    pub fn measure(&self, e: usize) -> f64 {
        self.measures[e]
    }

    pub fn element_measures(&self) -> &[f64] {
        &self.measures
    }

    /// Element diameter `h_T` (longest edge).
    pub fn diameter(&self, e: usize) -> f64 {
        let pts = self.points_of(e);
        let nv = self.dim + 1;
        let mut h = 0.0f64;
        for a in 0..nv {
            for b in (a + 1)..nv {
                h = h.max(vecd::dist(pts[a], pts[b]));
            }
        }
        h
    }

    /// `h = max_T h_T`.
    pub fn max_diameter(&self) -> f64 {
        (0..self.n_elements()).fold(0.0, |acc, e| acc.max(self.diameter(e)))
    }

    /// Barycentric coordinates of `x` with respect to element `e`.
    pub fn barycentric(&self, e: usize, x: Point) -> [f64; 4] {
        let nv = self.dim + 1;
        let b = &self.bary[e * nv * nv..(e + 1) * nv * nv];
        let mut lam = [0.0; 4];
        for i in 0..nv {
            let row = &b[i * nv..(i + 1) * nv];
            let mut s = row[0];
            for k in 0..self.dim {
                s += row[k + 1] * x[k];
            }
            lam[i] = s;
        }
        lam
    }

    /// Gradient of the barycentric coordinate `lambda_i` on element `e`
    /// (constant).
    pub fn bary_gradient(&self, e: usize, i: usize) -> Point {
        let nv = self.dim + 1;
        let row = &self.bary[(e * nv + i) * nv..(e * nv + i + 1) * nv];
        let mut g = [0.0; 3];
        g[..self.dim].copy_from_slice(&row[1..=self.dim]);
        g
    }

    /// Serialize into the line-oriented mesh text format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("dim {}\n", self.dim));
        s.push_str(&format!("vertices {}\n", self.n_vertices()));
        for v in &self.vertices {
            for k in 0..self.dim {
                if k > 0 {
                    s.push(' ');
                }
                s.push_str(&format!("{:?}", v[k]));
            }
            s.push('\n');
        }
        s.push_str(&format!("elements {}\n", self.n_elements()));
        for e in 0..self.n_elements() {
            for (k, vi) in self.element(e).iter().enumerate() {
                if k > 0 {
                    s.push(' ');
                }
                s.push_str(&format!("{vi}"));
            }
            s.push('\n');
        }
        s
    }
}

fn build_barycentric(mesh: &SimplicialMesh) -> Result<Vec<f64>, MeshError> {
    let nv = mesh.dim + 1;
    let mut out = vec![0.0; mesh.n_elements() * nv * nv];
    for e in 0..mesh.n_elements() {
        let pts = mesh.points_of(e);
        // columns are [1; p_j]; the inverse rows are the lambda coefficients
        let mut m = crate::la::DenseMat::zeros(nv, nv);
        for j in 0..nv {
            *m.at_mut(0, j) = 1.0;
            for k in 0..mesh.dim {
                *m.at_mut(k + 1, j) = pts[j][k];
            }
        }
        for i in 0..nv {
            let mut rhs = vec![0.0; nv];
            rhs[i] = 1.0;
            // lambda_i coefficients c solve M^T c = e_i
            let mut mt = crate::la::DenseMat::zeros(nv, nv);
            for r in 0..nv {
                for c in 0..nv {
                    *mt.at_mut(r, c) = m.at(c, r);
                }
            }
            let c = mt
                .solve_lu(&rhs)
                .map_err(|_| MeshError::DegenerateElement {
                    element: e,
                    measure: mesh.measure(e),
                })?;
            out[(e * nv + i) * nv..(e * nv + i + 1) * nv].copy_from_slice(&c);
        }
    }
    Ok(out)
}

/// `|T|_d` of a simplex given its vertex coordinates.
pub fn simplex_measure(dim: usize, pts: &[Point; 4]) -> f64 {
    match dim {
        2 => {
            let e1 = vecd::sub(pts[1], pts[0]);
            let e2 = vecd::sub(pts[2], pts[0]);
            (e1[0] * e2[1] - e1[1] * e2[0]).abs() / 2.0
        }
        3 => {
            let e1 = vecd::sub(pts[1], pts[0]);
            let e2 = vecd::sub(pts[2], pts[0]);
            let e3 = vecd::sub(pts[3], pts[0]);
            vecd::dot(e1, vecd::cross(e2, e3)).abs() / 6.0
        }
        _ => unreachable!(),
    }
}

/// `(d-1)`-measure of a face given its vertex coordinates (Gram determinant,
/// specialised: segment length in 2D, triangle area in 3D).
pub fn face_measure(dim: usize, pts: &[Point]) -> f64 {
    match dim {
        2 => vecd::dist(pts[0], pts[1]),
        3 => {
            let e1 = vecd::sub(pts[1], pts[0]);
            let e2 = vecd::sub(pts[2], pts[0]);
            vecd::norm(vecd::cross(e1, e2)) / 2.0
        }
        _ => unreachable!(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    Interior,
    Boundary,
}

/// Face topology of a mesh: each `(d-1)`-subsimplex exactly once, keyed by
/// its sorted vertex tuple, with owner pairs, oriented unit normals and
/// measures. Construction order is deterministic: faces appear in the order
/// of first encounter scanning elements, then local faces.
#[derive(Debug, Clone)]
pub struct FaceSet {
    pub dim: usize,
    /// Flat sorted vertex tuples, stride `dim`.
    face_vertices: Vec<usize>,
    pub kind: Vec<FaceKind>,
    /// Owner with the larger element index (interior) or the single owner
    /// (boundary), with the local face index inside it.
    pub plus: Vec<(usize, usize)>,
    /// Second owner for interior faces.
    pub minus: Vec<Option<(usize, usize)>>,
    /// Unit normal: from plus to minus (interior), outward (boundary).
    pub normal: Vec<Point>,
    pub measure: Vec<f64>,
    /// Per element, stride `d+1`: the face opposite local vertex `i`.
    elem_faces: Vec<usize>,
}

impl FaceSet {
    pub fn n_faces(&self) -> usize {
        self.kind.len()
    }

    /// Sorted vertex tuple of face `f`.
    pub fn face_vertices(&self, f: usize) -> &[usize] {
        &self.face_vertices[f * self.dim..(f + 1) * self.dim]
    }

    pub fn face_points(&self, mesh: &SimplicialMesh, f: usize) -> [Point; 3] {
        let mut out = [[0.0; 3]; 3];
        for (slot, &vi) in out.iter_mut().zip(self.face_vertices(f)) {
            *slot = mesh.vertex(vi);
        }
        out
    }

    /// Face id opposite local vertex `i` of element `e`.
    pub fn face_of(&self, e: usize, i: usize) -> usize {
        self.elem_faces[e * (self.dim + 1) + i]
    }

    /// Local face index of face `f` within element `e`, if `f` is a face of
    /// `e`.
    pub fn local_index(&self, e: usize, f: usize) -> Option<usize> {
        (0..self.dim + 1).find(|&i| self.face_of(e, i) == f)
    }

    pub fn centroid(&self, mesh: &SimplicialMesh, f: usize) -> Point {
        let pts = self.face_points(mesh, f);
        let mut c = [0.0; 3];
        for p in pts.iter().take(self.dim) {
            c = vecd::add(c, *p);
        }
        vecd::scale(c, 1.0 / self.dim as f64)
    }

    /// Outward unit normal of face `f` as seen from element `e`.
    pub fn outward_normal(&self, e: usize, f: usize) -> Point {
        let (pe, _) = self.plus[f];
        if pe == e {
            self.normal[f]
        } else {
            vecd::scale(self.normal[f], -1.0)
        }
    }

    pub fn is_boundary(&self, f: usize) -> bool {
        self.kind[f] == FaceKind::Boundary
    }
}

/// Enumerate faces, classify interior/boundary, orient normals and check
/// conformity (hash join on sorted vertex tuples, side test for interior
/// owners, hanging-node scan on unshared faces).
pub fn build_faces(mesh: &SimplicialMesh) -> Result<FaceSet, MeshError> {
    let d = mesh.dim;
    let nv = d + 1;
    let ne = mesh.n_elements();
    let mut key_to_face: BTreeMap<[usize; 3], usize> = BTreeMap::new();
    let mut face_vertices: Vec<usize> = Vec::new();
    let mut owners: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut elem_faces = vec![0usize; ne * nv];
    for e in 0..ne {
        let conn = mesh.element(e);
        for i in 0..nv {
            // face opposite local vertex i, key = sorted remaining indices
            let mut key = [usize::MAX; 3];
            let mut k = 0;
            for (j, &v) in conn.iter().enumerate() {
                if j != i {
                    key[k] = v;
                    k += 1;
                }
            }
            key[..d].sort_unstable();
            let fid = match key_to_face.get(&key) {
                Some(&fid) => fid,
                None => {
                    let fid = owners.len();
                    key_to_face.insert(key, fid);
                    face_vertices.extend_from_slice(&key[..d]);
                    owners.push(Vec::new());
                    fid
                }
            };
            owners[fid].push((e, i));
            elem_faces[e * nv + i] = fid;
        }
    }
    let nf = owners.len();
    let mut kind = vec![FaceKind::Boundary; nf];
    let mut plus = vec![(0usize, 0usize); nf];
    let mut minus: Vec<Option<(usize, usize)>> = vec![None; nf];
    let mut normal = vec![[0.0; 3]; nf];
    let mut measure = vec![0.0; nf];
    for f in 0..nf {
        let own = &owners[f];
        let fverts = &face_vertices[f * d..(f + 1) * d];
        let fpts: Vec<Point> = fverts.iter().map(|&v| mesh.vertex(v)).collect();
        measure[f] = face_measure(d, &fpts);
        match own.len() {
            1 => {
                plus[f] = own[0];
                let (e, i) = own[0];
                normal[f] = outward_normal_of(mesh, e, i, &fpts);
            }
            2 => {
                kind[f] = FaceKind::Interior;
                let (a, b) = (own[0], own[1]);
                let (p, m) = if a.0 > b.0 { (a, b) } else { (b, a) };
                plus[f] = p;
                minus[f] = Some(m);
                let n_plus = outward_normal_of(mesh, p.0, p.1, &fpts);
                let n_minus = outward_normal_of(mesh, m.0, m.1, &fpts);
                // owners must sit on opposite sides of the shared face
                if vecd::dot(n_plus, n_minus) > -0.5 {
                    return Err(MeshError::Nonconforming {
                        detail: format!(
                            "elements {} and {} overlap across a shared face",
                            p.0, m.0
                        ),
                    });
                }
                normal[f] = n_plus;
            }
            n => {
                return Err(MeshError::Nonconforming {
                    detail: format!("face shared by {n} > 2 elements"),
                });
            }
        }
    }
    let fs = FaceSet {
        dim: d,
        face_vertices,
        kind,
        plus,
        minus,
        normal,
        measure,
        elem_faces,
    };
    hanging_node_scan(mesh, &fs)?;
    Ok(fs)
}

fn outward_normal_of(mesh: &SimplicialMesh, e: usize, local: usize, fpts: &[Point]) -> Point {
    let d = mesh.dim;
    let n = match d {
        2 => {
            let t = vecd::sub(fpts[1], fpts[0]);
            vecd::unit([t[1], -t[0], 0.0])
        }
        3 => {
            let e1 = vecd::sub(fpts[1], fpts[0]);
            let e2 = vecd::sub(fpts[2], fpts[0]);
            vecd::unit(vecd::cross(e1, e2))
        }
        _ => unreachable!(),
    };
    let opp = mesh.vertex(mesh.element(e)[local]);
    if vecd::dot(n, vecd::sub(fpts[0], opp)) >= 0.0 {
        n
    } else {
        vecd::scale(n, -1.0)
    }
}

/// A vertex lying in the relative interior of an unshared face is a hanging
/// node: the mesh is not conformal.
fn hanging_node_scan(mesh: &SimplicialMesh, fs: &FaceSet) -> Result<(), MeshError> {
    let d = mesh.dim;
    for f in 0..fs.n_faces() {
        if fs.kind[f] != FaceKind::Boundary {
            continue;
        }
        let fverts = fs.face_vertices(f);
        let fpts = fs.face_points(mesh, f);
        let scale = fs.measure[f].powf(1.0 / (d - 1) as f64).max(1e-300);
        // bounding box with a tolerance collar
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in fpts.iter().take(d) {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let tol = 1e-10 * scale;
        'verts: for v in 0..mesh.n_vertices() {
            if fverts.contains(&v) {
                continue;
            }
            let p = mesh.vertex(v);
            for k in 0..3 {
                if p[k] < lo[k] - tol || p[k] > hi[k] + tol {
                    continue 'verts;
                }
            }
            if point_in_face(d, &fpts, p, tol) {
                return Err(MeshError::Nonconforming {
                    detail: format!("vertex {v} hangs on an unshared face"),
                });
            }
        }
    }
    Ok(())
}

/// Is `p` inside the closed face but not at one of its vertices?
fn point_in_face(d: usize, fpts: &[Point; 3], p: Point, tol: f64) -> bool {
    match d {
        2 => {
            let (a, b) = (fpts[0], fpts[1]);
            let ab = vecd::sub(b, a);
            let len2 = vecd::dot(ab, ab);
            let t = vecd::dot(vecd::sub(p, a), ab) / len2;
            if !(tol / len2.sqrt()..=1.0 - tol / len2.sqrt()).contains(&t) {
                return false;
            }
            let proj = vecd::axpy(a, t, ab);
            vecd::dist(p, proj) <= tol
        }
        3 => {
            let (a, b, c) = (fpts[0], fpts[1], fpts[2]);
            let n = vecd::unit(vecd::cross(vecd::sub(b, a), vecd::sub(c, a)));
            if vecd::dot(vecd::sub(p, a), n).abs() > tol {
                return false;
            }
            // barycentric coordinates within the face plane
            let e1 = vecd::sub(b, a);
            let e2 = vecd::sub(c, a);
            let w = vecd::sub(p, a);
            let d11 = vecd::dot(e1, e1);
            let d12 = vecd::dot(e1, e2);
            let d22 = vecd::dot(e2, e2);
            let w1 = vecd::dot(w, e1);
            let w2 = vecd::dot(w, e2);
            let det = d11 * d22 - d12 * d12;
            let u = (d22 * w1 - d12 * w2) / det;
            let v = (d11 * w2 - d12 * w1) / det;
            let eps = 1e-9;
            let inside = u >= -eps && v >= -eps && u + v <= 1.0 + eps;
            let at_vertex = (u.abs() < eps && v.abs() < eps)
                || ((u - 1.0).abs() < eps && v.abs() < eps)
                || (u.abs() < eps && (v - 1.0).abs() < eps);
            inside && !at_vertex
        }
        _ => unreachable!(),
    }
}

/// Height of element `e` over face `f`: `l_{T,F} = d! |T|_d / |F|_{d-1}`.
///
/// In 2D this equals the distance from the opposite vertex to the face line;
/// in 3D the vertex-to-plane distance is `l_{T,F} / (d-1)!`.
pub fn face_height(
    mesh: &SimplicialMesh,
    fs: &FaceSet,
    e: usize,
    f: usize,
) -> Result<f64, MeshError> {
    if fs.local_index(e, f).is_none() {
        return Err(MeshError::NotAFace {
            element: e,
            face: f,
        });
    }
    let dfact = if mesh.dim == 2 { 2.0 } else { 6.0 };
    Ok(dfact * mesh.measure(e) / fs.measure[f])
}

/// Euclidean distance from the vertex of `e` opposite face `f` to the affine
/// hull of `f`.
pub fn vertex_face_distance(
    mesh: &SimplicialMesh,
    fs: &FaceSet,
    e: usize,
    f: usize,
) -> Result<f64, MeshError> {
    let local = fs.local_index(e, f).ok_or(MeshError::NotAFace {
        element: e,
        face: f,
    })?;
    let opp = mesh.vertex(mesh.element(e)[local]);
    let fpts = fs.face_points(mesh, f);
    let n = match mesh.dim {
        2 => {
            let t = vecd::sub(fpts[1], fpts[0]);
            vecd::unit([t[1], -t[0], 0.0])
        }
        _ => {
            let e1 = vecd::sub(fpts[1], fpts[0]);
            let e2 = vecd::sub(fpts[2], fpts[0]);
            vecd::unit(vecd::cross(e1, e2))
        }
    };
    Ok(vecd::dot(vecd::sub(opp, fpts[0]), n).abs())
}

/// Parse the line-oriented mesh text format:
///
/// ```text
/// dim d
/// vertices n
/// <n lines of d coordinates>
/// elements m
/// <m lines of d+1 zero-based vertex indices>
/// ```
///
/// `#` starts a comment; blank lines are ignored. The returned mesh is fully
/// validated, including conformity.
pub fn parse_mesh(text: &str) -> Result<SimplicialMesh, MeshError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let mut cursor = 0usize;
    let next_line = |cursor: &mut usize, context: &str| -> Result<(usize, &str), MeshError> {
        let item = lines
            .get(*cursor)
            .copied()
            .ok_or_else(|| MeshError::Header {
                line: text.lines().count(),
                detail: format!("unexpected end of file ({context})"),
            })?;
        *cursor += 1;
        Ok(item)
    };
    let count_line = |lno: usize, line: &str, key: &str| -> Result<usize, MeshError> {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 || tokens[0] != key {
            return Err(MeshError::Header {
                line: lno,
                detail: format!("expected `{key} <count>`, found `{line}`"),
            });
        }
        tokens[1].parse().map_err(|_| MeshError::Header {
            line: lno,
            detail: format!("bad count `{}`", tokens[1]),
        })
    };
    let (lno, line) = next_line(&mut cursor, "missing `dim` line")?;
    let dim = count_line(lno, line, "dim")?;
    if dim != 2 && dim != 3 {
        return Err(MeshError::Header {
            line: lno,
            detail: format!("dimension must be 2 or 3, found {dim}"),
        });
    }
    let (lno, line) = next_line(&mut cursor, "missing `vertices` line")?;
    let nv = count_line(lno, line, "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (lno, line) = next_line(&mut cursor, "vertex block")?;
        let coords: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
        let coords = coords.map_err(|_| MeshError::Header {
            line: lno,
            detail: format!("bad vertex coordinates `{line}`"),
        })?;
        if coords.len() != dim {
            return Err(MeshError::Header {
                line: lno,
                detail: format!("expected {dim} coordinates, found {}", coords.len()),
            });
        }
        let mut p = [0.0; 3];
        p[..dim].copy_from_slice(&coords);
        vertices.push(p);
    }
    let (lno, line) = next_line(&mut cursor, "missing `elements` line")?;
    let ne = count_line(lno, line, "elements")?;
    let mut element_indices = Vec::with_capacity(ne * (dim + 1));
    for _ in 0..ne {
        let (lno, line) = next_line(&mut cursor, "element block")?;
        let idx: Result<Vec<usize>, _> = line.split_whitespace().map(str::parse).collect();
        let idx = idx.map_err(|_| MeshError::Header {
            line: lno,
            detail: format!("bad element indices `{line}`"),
        })?;
        if idx.len() != dim + 1 {
            return Err(MeshError::Header {
                line: lno,
                detail: format!("expected {} indices, found {}", dim + 1, idx.len()),
            });
        }
        element_indices.extend_from_slice(&idx);
    }
    let mesh = SimplicialMesh::new(dim, vertices, element_indices)?;
    build_faces(&mesh)?; // conformity is part of mesh validity
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn two_triangle_square() -> SimplicialMesh {
        SimplicialMesh::new(
            2,
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [1.0, 1.0, 0.0],
            ],
            vec![0, 1, 2, 1, 3, 2],
        )
        .unwrap()
    }

    #[test]
    fn parse_two_triangle_square() {
        let text =
            "# unit square\ndim 2\nvertices 4\n0 0\n1 0\n0 1\n1 1\nelements 2\n0 1 2\n1 3 2\n";
        let mesh = parse_mesh(text).unwrap();
        assert_eq!(mesh.n_vertices(), 4);
        assert_eq!(mesh.n_elements(), 2);
        assert_eq!(mesh.element(0), &[0, 1, 2]);
    }

    #[test]
    fn parse_rejects_out_of_range_index() {
        let text = "dim 2\nvertices 4\n0 0\n1 0\n0 1\n1 1\nelements 1\n0 1 99\n";
        match parse_mesh(text) {
            Err(MeshError::IndexOutOfRange {
                index: 99,
                n_vertices: 4,
                ..
            }) => {}
            other => panic!("expected index error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_degenerate_element() {
        let text = "dim 2\nvertices 3\n0 0\n1 0\n2 0\nelements 1\n0 1 2\n";
        assert!(matches!(
            parse_mesh(text),
            Err(MeshError::DegenerateElement { .. })
        ));
    }

    #[test]
    fn parse_rejects_malformed_header() {
        assert!(matches!(
            parse_mesh("dimension 2\n"),
            Err(MeshError::Header { .. })
        ));
        assert!(matches!(
            parse_mesh("dim 4\nvertices 0\nelements 0\n"),
            Err(MeshError::Header { .. })
        ));
    }

    #[test]
    fn hanging_node_detected() {
        // coarse triangle beside two fine ones sharing half of its edge
        let text = "dim 2\nvertices 5\n0 0\n1 0\n1 1\n0 1\n1 0.5\nelements 3\n0 1 3\n1 4 2\n... replaced below\n";
        let _ = text;
        // explicit construction: triangle (0,1,2) with edge 1-2 split at 4
        let mesh = SimplicialMesh::new(
            2,
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [1.0, 1.0, 0.0],
                [2.0, 0.0, 0.0],
                [1.0, 0.5, 0.0],
            ],
            vec![0, 1, 2, 1, 3, 4, 4, 3, 2],
        )
        .unwrap();
        match build_faces(&mesh) {
            Err(MeshError::Nonconforming { detail }) => {
                assert!(detail.contains("hangs"), "{detail}");
            }
            other => panic!("expected nonconformity, got {other:?}"),
        }
    }

    #[test]
    fn face_counts_on_two_triangle_square() {
        let mesh = two_triangle_square();
        let fs = build_faces(&mesh).unwrap();
        assert_eq!(fs.n_faces(), 5);
        let interior: Vec<usize> = (0..5).filter(|&f| !fs.is_boundary(f)).collect();
        assert_eq!(interior.len(), 1);
        // the diagonal 1-2
        assert_eq!(fs.face_vertices(interior[0]), &[1, 2]);
        // plus owner has the larger element index
        let f = interior[0];
        assert_eq!(fs.plus[f].0, 1);
        assert_eq!(fs.minus[f].unwrap().0, 0);
    }

    #[test]
    fn single_triangle_all_boundary() {
        let mesh = SimplicialMesh::new(
            2,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![0, 1, 2],
        )
        .unwrap();
        let fs = build_faces(&mesh).unwrap();
        assert_eq!(fs.n_faces(), 3);
        assert!((0..3).all(|f| fs.is_boundary(f)));
    }

    #[test]
    fn normals_unit_and_oriented() {
        let mesh = two_triangle_square();
        let fs = build_faces(&mesh).unwrap();
        for f in 0..fs.n_faces() {
            let n = fs.normal[f];
            assert!((vecd::norm(n) - 1.0).abs() < 1e-14);
            // interior: normal points from plus toward minus
            if let Some((me, _)) = fs.minus[f] {
                let (pe, _) = fs.plus[f];
                let c = fs.centroid(&mesh, f);
                let to_minus = vecd::sub(element_centroid(&mesh, me), c);
                let to_plus = vecd::sub(element_centroid(&mesh, pe), c);
                assert!(vecd::dot(n, to_minus) > 0.0);
                assert!(vecd::dot(n, to_plus) < 0.0);
            }
        }
    }

    fn element_centroid(mesh: &SimplicialMesh, e: usize) -> Point {
        let pts = mesh.points_of(e);
        let nv = mesh.dim + 1;
        let mut c = [0.0; 3];
        for p in pts.iter().take(nv) {
            c = vecd::add(c, *p);
        }
        vecd::scale(c, 1.0 / nv as f64)
    }

    #[test]
    fn closed_polytope_normal_sum() {
        let mesh = two_triangle_square();
        let fs = build_faces(&mesh).unwrap();
        for e in 0..mesh.n_elements() {
            let mut s = [0.0; 3];
            for i in 0..mesh.dim + 1 {
                let f = fs.face_of(e, i);
                s = vecd::axpy(s, fs.measure[f], fs.outward_normal(e, f));
            }
            let h = mesh.diameter(e);
            for c in s {
                assert!(c.abs() <= 1e-12 * h);
            }
        }
    }

    #[test]
    fn reference_measures() {
        let tri = SimplicialMesh::new(
            2,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![0, 1, 2],
        )
        .unwrap();
        assert!((tri.measure(0) - 0.5).abs() < 1e-15);
        let tet = SimplicialMesh::new(
            3,
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
            ],
            vec![0, 1, 2, 3],
        )
        .unwrap();
        assert!((tet.measure(0) - 1.0 / 6.0).abs() < 1e-15);
        let fs = build_faces(&tri).unwrap();
        // hypotenuse is the face opposite local vertex 0
        let hyp = fs.face_of(0, 0);
        assert!((fs.measure[hyp] - 2.0f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn face_heights_reference_triangle() {
        let tri = SimplicialMesh::new(
            2,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![0, 1, 2],
        )
        .unwrap();
        let fs = build_faces(&tri).unwrap();
        let hyp = fs.face_of(0, 0);
        let leg_y0 = fs.face_of(0, 2); // opposite (0,1): the edge y = 0
        let l_hyp = face_height(&tri, &fs, 0, hyp).unwrap();
        assert!((l_hyp - 1.0 / 2.0f64.sqrt()).abs() < 1e-14);
        let l_leg = face_height(&tri, &fs, 0, leg_y0).unwrap();
        assert!((l_leg - 1.0).abs() < 1e-14);
        // 2D: formula equals the vertex-to-line distance
        for f in [hyp, leg_y0] {
            let dist = vertex_face_distance(&tri, &fs, 0, f).unwrap();
            assert!((face_height(&tri, &fs, 0, f).unwrap() - dist).abs() < 1e-12);
        }
    }

    #[test]
    fn face_height_tet_is_scaled_distance() {
        let tet = SimplicialMesh::new(
            3,
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
            ],
            vec![0, 1, 2, 3],
        )
        .unwrap();
        let fs = build_faces(&tet).unwrap();
        let f = fs.face_of(0, 0); // opposite the origin, area sqrt(3)/2
        let l = face_height(&tet, &fs, 0, f).unwrap();
        assert!((l - 2.0 / 3.0f64.sqrt()).abs() < 1e-14);
        // l = (d-1)! * distance in 3D
        let dist = vertex_face_distance(&tet, &fs, 0, f).unwrap();
        assert!((l - 2.0 * dist).abs() < 1e-12);
        assert!(l <= tet.diameter(0));
    }

    #[test]
    fn face_height_rejects_foreign_face() {
        let mesh = two_triangle_square();
        let fs = build_faces(&mesh).unwrap();
        // a face of element 1 that element 0 does not own
        let foreign = (0..fs.n_faces())
            .find(|&f| fs.local_index(0, f).is_none())
            .unwrap();
        assert!(matches!(
            face_height(&mesh, &fs, 0, foreign),
            Err(MeshError::NotAFace { .. })
        ));
    }

    #[test]
    fn build_faces_deterministic() {
        let a = build_faces(&two_triangle_square()).unwrap();
        let b = build_faces(&two_triangle_square()).unwrap();
        assert_eq!(a.face_vertices, b.face_vertices);
        assert_eq!(a.plus, b.plus);
        assert_eq!(a.minus, b.minus);
        assert_eq!(
            format!("{:?}", a.normal).to_string(),
            format!("{:?}", b.normal).to_string()
        );
    }

    #[test]
    fn text_roundtrip() {
        let mesh = two_triangle_square();
        let text = mesh.to_text();
        let back = parse_mesh(&text).unwrap();
        assert_eq!(back.n_vertices(), mesh.n_vertices());
        assert_eq!(back.n_elements(), mesh.n_elements());
        for e in 0..mesh.n_elements() {
            assert_eq!(back.element(e), mesh.element(e));
        }
        for v in 0..mesh.n_vertices() {
            assert_eq!(back.vertex(v), mesh.vertex(v));
        }
    }

    #[test]
    fn barycentric_partition_and_duality() {
        let mesh = two_triangle_square();
        for e in 0..2 {
            let pts = mesh.points_of(e);
            for i in 0..3 {
                let lam = mesh.barycentric(e, pts[i]);
                for j in 0..3 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((lam[j] - want).abs() < 1e-13);
                }
            }
            let lam = mesh.barycentric(e, [0.4, 0.3, 0.0]);
            assert!((lam[0] + lam[1] + lam[2] - 1.0).abs() < 1e-13);
        }
    }
}
