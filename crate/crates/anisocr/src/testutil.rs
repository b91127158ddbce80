//! Shared fixtures for unit tests.

use alloc::vec;

use crate::float::FloatExt;
use crate::mesh::{simplex_measure, SimplicialMesh};
use crate::rng::SplitMix64;
use crate::vecd::{self, Point};

pub(crate) fn two_triangle_square() -> SimplicialMesh {
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

pub(crate) fn reference_triangle() -> SimplicialMesh {
    SimplicialMesh::new(
        2,
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        vec![0, 1, 2],
    )
    .unwrap()
}

pub(crate) fn reference_tet() -> SimplicialMesh {
    SimplicialMesh::new(
        3,
        vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ],
        vec![0, 1, 2, 3],
    )
    .unwrap()
}

/// Random anisotropic simplex with per-axis scales log-uniform down to
/// `min_scale`, a signed axis permutation, and translations proportional to
/// each axis scale. Coordinates stay scale-aligned per axis, so barycentric
/// evaluation remains well-conditioned at arbitrary aspect ratios - the
/// population where rounding-level dof duality is actually attainable (and
/// the shape of graded tensor meshes).
pub(crate) fn random_aniso_simplex(rng: &mut SplitMix64, dim: usize, min_scale: f64) -> [Point; 4] {
    loop {
        // well-shaped base simplex
        let mut base = [[0.0; 3]; 4];
        for p in base.iter_mut().take(dim + 1) {
            for c in p.iter_mut().take(dim) {
                *c = rng.sym();
            }
        }
        let m = simplex_measure(dim, &base);
        if m < 0.05 {
            continue;
        }
        // per-axis scales, signed axis permutation, proportional shifts
        let mut scales = [1.0; 3];
        for s in scales.iter_mut().take(dim) {
            *s = min_scale.powf(rng.next_f64());
        }
        let mut axes = [0usize, 1, 2];
        if dim == 2 && rng.next_f64() < 0.5 {
            axes.swap(0, 1);
        } else if dim == 3 {
            for i in (1..3).rev() {
                let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                axes.swap(i, j);
            }
        }
        let mut signs = [1.0; 3];
        for s in signs.iter_mut().take(dim) {
            if rng.next_f64() < 0.5 {
                *s = -1.0;
            }
        }
        let mut shift = [0.0; 3];
        for k in 0..dim {
            shift[k] = scales[k] * rng.sym();
        }
        let mut pts = [[0.0; 3]; 4];
        for (p, b) in pts.iter_mut().zip(base.iter()).take(dim + 1) {
            for k in 0..dim {
                p[k] = signs[k] * scales[k] * b[axes[k]] + shift[k];
            }
        }
        if simplex_measure(dim, &pts) > 1e-200 {
            return pts;
        }
    }
}

/// Random non-degenerate simplex with edge scales log-uniform down to
/// `min_scale` (aspect ratios up to `1/min_scale`).
pub(crate) fn random_simplex(rng: &mut SplitMix64, dim: usize, min_scale: f64) -> [Point; 4] {
    loop {
        let mut pts = [[0.0; 3]; 4];
        let base = [rng.sym(), rng.sym(), if dim == 3 { rng.sym() } else { 0.0 }];
        pts[0] = base;
        for i in 1..=dim {
            let scale = min_scale.powf(rng.next_f64());
            let mut dir = [0.0; 3];
            for d in dir.iter_mut().take(dim) {
                *d = rng.sym();
            }
            let dir = vecd::unit(dir);
            pts[i] = vecd::axpy(pts[0], scale, dir);
        }
        let m = simplex_measure(dim, &pts);
        let mut h = 0.0f64;
        for a in 0..=dim {
            for b in (a + 1)..=dim {
                h = h.max(vecd::dist(pts[a], pts[b]));
            }
        }
        if m > 1e-200 && m > 1e-12 * h.powi(dim as i32) * min_scale.powi(dim as i32) {
            return pts;
        }
    }
}
