//! Exact-degree quadrature on reference simplices and faces.
//!
//! Rules are built by the collapsed (Duffy) tensor construction from
//! Gauss-Legendre nodes, so weights stay positive and the exactness degree is
//! certified by checking every monomial against the closed-form simplex
//! integral `int x^a y^b z^c = a! b! c! / (a+b+c+d)!`.
//!
//! Points are stored as barycentric coordinates; weights sum to the measure
//! of the reference domain (`1/d!` for the `d`-simplex). Pushing a rule
//! forward to a physical simplex or face therefore multiplies weights by
//! `d! |T|` (resp. `(d-1)! |F|`).

use alloc::vec;
use alloc::vec::Vec;

use crate::float::FloatExt;
use crate::vecd::Point;

/// Largest supported exactness degree.
pub const MAX_DEGREE: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuadError {
    UnsupportedDegree { degree: usize },
    UnsupportedDim { dim: usize },
}

impl core::fmt::Display for QuadError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            QuadError::UnsupportedDegree { degree } => {
                write!(
                    f,
                    "quadrature degree {degree} exceeds the supported {MAX_DEGREE}"
                )
            }
            QuadError::UnsupportedDim { dim } => write!(f, "unsupported simplex dimension {dim}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadDomain {
    /// `d`-simplex of a `d`-dimensional mesh.
    Simplex(usize),
    /// `(d-1)`-simplex face of a `d`-dimensional mesh.
    Face(usize),
}

/// Quadrature rule on a reference simplex, in barycentric coordinates.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub domain: QuadDomain,
    /// Barycentric points, stride `k+1` where `k` is the simplex dimension.
    pub bary: Vec<f64>,
    /// Positive weights summing to `1/k!`.
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn simplex_dim(&self) -> usize {
        match self.domain {
            QuadDomain::Simplex(d) => d,
            QuadDomain::Face(d) => d - 1,
        }
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let k = self.simplex_dim() + 1;
        &self.bary[i * k..(i + 1) * k]
    }

    /// Integrate `f` over a physical simplex/face with vertices `verts`
    /// (only the first `k+1` entries are used) and measure `measure`.
    pub fn integrate(&self, verts: &[Point], measure: f64, mut f: impl FnMut(Point) -> f64) -> f64 {
        let k = self.simplex_dim();
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        let scale = fact * measure;
        let mut acc = 0.0;
        for (i, &w) in self.weights.iter().enumerate() {
            let lam = self.point(i);
            let mut x = [0.0; 3];
            for (j, &l) in lam.iter().enumerate() {
                x[0] += l * verts[j][0];
                x[1] += l * verts[j][1];
                x[2] += l * verts[j][2];
            }
            acc += w * scale * f(x);
        }
        acc
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`, exact through degree
/// `2n - 1`. Newton iteration on the Legendre recurrence.
fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        // initial guess on [-1, 1]
        let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Legendre P_n(x) and derivative by recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        // weight on [-1, 1]: 2 / ((1-x^2) P_n'(x)^2)
        let mut p0 = 1.0;
        let mut p1 = x;
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = 0.5 * (x + 1.0);
        ws[i] = 0.5 * w;
    }
    (xs, ws)
}

/// Rule exact for total degree `degree` on the reference `k`-simplex,
/// expressed in barycentric coordinates.
fn simplex_rule_inner(k: usize, degree: usize) -> Result<(Vec<f64>, Vec<f64>), QuadError> {
    if degree > MAX_DEGREE {
        return Err(QuadError::UnsupportedDegree { degree });
    }
    if degree <= 1 && k > 1 {
        // centroid rule: exact for affine functions
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        let bary = vec![1.0 / (k + 1) as f64; k + 1];
        return Ok((bary, vec![1.0 / fact]));
    }
    match k {
        1 => {
            let n = degree / 2 + 1;
            let (xs, ws) = gauss_legendre_01(n);
            let mut bary = Vec::with_capacity(n * 2);
            for &x in &xs {
                bary.push(1.0 - x);
                bary.push(x);
            }
            Ok((bary, ws))
        }
        2 => {
            // x = u (1 - v), y = v; Jacobian (1 - v):
            // u-degree <= degree, v-degree <= degree + 1
            let nu = degree / 2 + 1;
            let nv = (degree + 1) / 2 + 1;
            let (us, wu) = gauss_legendre_01(nu);
            let (vs, wv) = gauss_legendre_01(nv);
            let mut bary = Vec::new();
            let mut weights = Vec::new();
            for (iu, &u) in us.iter().enumerate() {
                for (iv, &v) in vs.iter().enumerate() {
                    let x = u * (1.0 - v);
                    let y = v;
                    bary.push(1.0 - x - y);
                    bary.push(x);
                    bary.push(y);
                    weights.push(wu[iu] * wv[iv] * (1.0 - v));
                }
            }
            Ok((bary, weights))
        }
        3 => {
            // x = u (1-v)(1-w), y = v (1-w), z = w; Jacobian (1-v)(1-w)^2
            let nu = degree / 2 + 1;
            let nv = (degree + 1) / 2 + 1;
            let nw = (degree + 2) / 2 + 1;
            let (us, wu) = gauss_legendre_01(nu);
            let (vs, wv) = gauss_legendre_01(nv);
            let (ws_, ww) = gauss_legendre_01(nw);
            let mut bary = Vec::new();
            let mut weights = Vec::new();
            for (iu, &u) in us.iter().enumerate() {
                for (iv, &v) in vs.iter().enumerate() {
                    for (iw, &w) in ws_.iter().enumerate() {
                        let x = u * (1.0 - v) * (1.0 - w);
                        let y = v * (1.0 - w);
                        let z = w;
                        bary.push(1.0 - x - y - z);
                        bary.push(x);
                        bary.push(y);
                        bary.push(z);
                        weights.push(wu[iu] * wv[iv] * ww[iw] * (1.0 - v) * (1.0 - w) * (1.0 - w));
                    }
                }
            }
            Ok((bary, weights))
        }
        _ => Err(QuadError::UnsupportedDim { dim: k }),
    }
}

/// Rule on the reference `d`-simplex exact for polynomials of total degree
/// `degree`, `d` in `{2, 3}`.
pub fn simplex_rule(d: usize, degree: usize) -> Result<QuadRule, QuadError> {
    if d != 2 && d != 3 {
        return Err(QuadError::UnsupportedDim { dim: d });
    }
    let (bary, weights) = simplex_rule_inner(d, degree)?;
    Ok(QuadRule {
        domain: QuadDomain::Simplex(d),
        bary,
        weights,
        degree,
    })
}

/// Rule on the reference face of a `d`-simplex (a `(d-1)`-simplex embedded
/// via the face chart), exact for total degree `degree`.
pub fn face_rule(d: usize, degree: usize) -> Result<QuadRule, QuadError> {
    if d != 2 && d != 3 {
        return Err(QuadError::UnsupportedDim { dim: d });
    }
    let (bary, weights) = simplex_rule_inner(d - 1, degree)?;
    Ok(QuadRule {
        domain: QuadDomain::Face(d),
        bary,
        weights,
        degree,
    })
}

/// `int_{ref k-simplex} prod x_i^{a_i} = prod a_i! / (sum a_i + k)!`
pub fn simplex_monomial_integral(k: usize, exps: &[usize]) -> f64 {
    let fact = |n: usize| -> f64 { (1..=n).map(|i| i as f64).product() };
    let num: f64 = exps.iter().map(|&a| fact(a)).product();
    let tot: usize = exps.iter().sum();
    num / fact(tot + k)
}
