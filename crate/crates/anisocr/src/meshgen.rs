//! Parameterized generators for the mesh families used in the sweeps.
//!
//! All families except `sliver_3d` keep `gamma_T = H_T / h_T` bounded (every
//! element is a right simplex with `gamma = 2` in 2D) while the aspect ratio
//! grows without bound; `sliver_3d` is the negative control whose `gamma`
//! blows up. The L-shaped domain exists because the inequality under test
//! does not assume a convex domain.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::float::FloatExt;
use crate::mesh::SimplicialMesh;
use crate::vecd::Point;

#[derive(Debug, Clone, PartialEq)]
pub enum MeshGenError {
    BadSpec { detail: String },
}

impl core::fmt::Display for MeshGenError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MeshGenError::BadSpec { detail } => write!(f, "invalid family spec: {detail}"),
        }
    }
}

/// A mesh family for a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    /// `[0,1]^2` as `nx x ny` cells, each split into two right triangles.
    AnisoGrid2d { nx: usize, ny_list: Vec<usize> },
    /// `[0,1]^2` as a single column of `round(1/eps)` flat cells.
    Needle2d { eps_list: Vec<f64> },
    /// `[0,1]^3` as boxes split into six tetrahedra (Kuhn), anisotropic via
    /// `nz >> nx`.
    Kuhn3d {
        nx: usize,
        ny: usize,
        nz_list: Vec<usize>,
    },
    /// Single-tetrahedron meshes whose flatness degenerates as `eps -> 0`.
    Sliver3d { eps_list: Vec<f64> },
    /// `(-1,1)^2` minus the closed fourth quadrant, `n` cells per unit.
    Lshape2d { n: usize },
}

impl FamilySpec {
    /// Parse the CLI spec grammar:
    ///
    /// ```text
    /// aniso_grid_2d:NX:NY1,NY2,...
    /// needle_2d:EPS1,EPS2,...
    /// kuhn_3d:NX,NY:NZ1,NZ2,...
    /// sliver_3d:EPS1,EPS2,...
    /// lshape_2d:N
    /// ```
    pub fn parse(s: &str) -> Result<FamilySpec, MeshGenError> {
        let bad = |detail: String| MeshGenError::BadSpec { detail };
        let parts: Vec<&str> = s.split(':').collect();
        let ints = |txt: &str| -> Result<Vec<usize>, MeshGenError> {
            txt.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| bad(format!("bad integer `{t}`")))
                })
                .collect()
        };
        let floats = |txt: &str| -> Result<Vec<f64>, MeshGenError> {
            txt.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| bad(format!("bad number `{t}`")))
                })
                .collect()
        };
        match parts.as_slice() {
            ["aniso_grid_2d", nx, nys] => {
                let nx = nx.parse().map_err(|_| bad(format!("bad nx `{nx}`")))?;
                let ny_list = ints(nys)?;
                if nx == 0 || ny_list.iter().any(|&n| n == 0) {
                    return Err(bad("grid counts must be positive".into()));
                }
                Ok(FamilySpec::AnisoGrid2d { nx, ny_list })
            }
            ["needle_2d", eps] => {
                let eps_list = floats(eps)?;
                if eps_list.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
                    return Err(bad("needle eps must lie in (0, 1]".into()));
                }
                Ok(FamilySpec::Needle2d { eps_list })
            }
            ["kuhn_3d", nxy, nzs] => {
                let nxy = ints(nxy)?;
                if nxy.len() != 2 {
                    return Err(bad("kuhn_3d needs NX,NY before the Nz list".into()));
                }
                let nz_list = ints(nzs)?;
                if nxy.iter().chain(nz_list.iter()).any(|&n| n == 0) {
                    return Err(bad("grid counts must be positive".into()));
                }
                Ok(FamilySpec::Kuhn3d {
                    nx: nxy[0],
                    ny: nxy[1],
                    nz_list,
                })
            }
            ["sliver_3d", eps] => {
                let eps_list = floats(eps)?;
                if eps_list.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
                    return Err(bad("sliver eps must lie in (0, 1)".into()));
                }
                Ok(FamilySpec::Sliver3d { eps_list })
            }
            ["lshape_2d", n] => {
                let n = n.parse().map_err(|_| bad(format!("bad n `{n}`")))?;
                if n == 0 {
                    return Err(bad("n must be positive".into()));
                }
                Ok(FamilySpec::Lshape2d { n })
            }
            _ => Err(bad(format!("unrecognized family `{s}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::AnisoGrid2d { .. } => "aniso_grid_2d",
            FamilySpec::Needle2d { .. } => "needle_2d",
            FamilySpec::Kuhn3d { .. } => "kuhn_3d",
            FamilySpec::Sliver3d { .. } => "sliver_3d",
            FamilySpec::Lshape2d { .. } => "lshape_2d",
        }
    }
}

/// One member of a generated family.
pub struct FamilyMember {
    /// The varying parameter (`ny`, `eps`, `nz`, or `n`).
    pub param: f64,
    /// Aspect ratio the generator aimed for.
    pub analytic_aspect: f64,
    pub mesh: SimplicialMesh,
}

/// Generate every member of a family. Generated meshes are conformal by
/// construction, and construction re-validates them.
pub fn gen_family(spec: &FamilySpec) -> Result<Vec<FamilyMember>, MeshGenError> {
    let mut out = Vec::new();
    match spec {
        FamilySpec::AnisoGrid2d { nx, ny_list } => {
            for &ny in ny_list {
                out.push(FamilyMember {
                    param: ny as f64,
                    analytic_aspect: cell_aspect(1.0 / *nx as f64, 1.0 / ny as f64),
                    mesh: aniso_grid_2d(*nx, ny),
                });
            }
        }
        FamilySpec::Needle2d { eps_list } => {
            for &eps in eps_list {
                let ny = (1.0 / eps).round().max(1.0) as usize;
                out.push(FamilyMember {
                    param: eps,
                    analytic_aspect: ny as f64,
                    mesh: aniso_grid_2d(1, ny),
                });
            }
        }
        FamilySpec::Kuhn3d { nx, ny, nz_list } => {
            for &nz in nz_list {
                let hx = 1.0 / *nx as f64;
                let hz = 1.0 / nz as f64;
                out.push(FamilyMember {
                    param: nz as f64,
                    analytic_aspect: hx.max(hz) / hx.min(hz),
                    mesh: kuhn_3d(*nx, *ny, nz),
                });
            }
        }
        FamilySpec::Sliver3d { eps_list } => {
            for &eps in eps_list {
                out.push(FamilyMember {
                    param: eps,
                    analytic_aspect: 1.0 / eps,
                    mesh: sliver_3d(eps),
                });
            }
        }
        FamilySpec::Lshape2d { n } => {
            out.push(FamilyMember {
                param: *n as f64,
                analytic_aspect: 1.0,
                mesh: lshape_2d(*n),
            });
        }
    }
    Ok(out)
}

fn cell_aspect(hx: f64, hy: f64) -> f64 {
    hx.max(hy) / hx.min(hy)
}

/// `[0,1]^2` as `nx x ny` cells, each split along the SW-NE diagonal.
pub fn aniso_grid_2d(nx: usize, ny: usize) -> SimplicialMesh {
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices: Vec<Point> = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([i as f64 / nx as f64, j as f64 / ny as f64, 0.0]);
        }
    }
    let mut elements = Vec::with_capacity(nx * ny * 6);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10) = (vid(i, j), vid(i + 1, j));
            let (v01, v11) = (vid(i, j + 1), vid(i + 1, j + 1));
            elements.extend_from_slice(&[v00, v10, v11]);
            elements.extend_from_slice(&[v00, v11, v01]);
        }
    }
    SimplicialMesh::new(2, vertices, elements).expect("structured grid is valid")
}

/// Unit-square needle tiling: one column of `round(1/eps)` cells.
pub fn needle_2d(eps: f64) -> SimplicialMesh {
    let ny = (1.0 / eps).round().max(1.0) as usize;
    aniso_grid_2d(1, ny)
}

/// `[0,1]^3` as `nx x ny x nz` boxes, each split into the six Kuhn
/// tetrahedra (conformal across box faces without extra vertices).
pub fn kuhn_3d(nx: usize, ny: usize, nz: usize) -> SimplicialMesh {
    let vid = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;
    let mut vertices: Vec<Point> = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([
                    i as f64 / nx as f64,
                    j as f64 / ny as f64,
                    k as f64 / nz as f64,
                ]);
            }
        }
    }
    // the six permutations of unit steps, fixed order for determinism
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut elements = Vec::with_capacity(nx * ny * nz * 24);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for perm in PERMS {
                    let mut corner = [i, j, k];
                    let mut tet = [vid(corner[0], corner[1], corner[2]), 0, 0, 0];
                    for (step, &axis) in perm.iter().enumerate() {
                        corner[axis] += 1;
                        tet[step + 1] = vid(corner[0], corner[1], corner[2]);
                    }
                    elements.extend_from_slice(&tet);
                }
            }
        }
    }
    SimplicialMesh::new(3, vertices, elements).expect("kuhn split is valid")
}

/// Single tetrahedron `(0,0,0), (1,0,0), (1/2,eps,eps^2), (1/2,-eps,eps^2)`
/// whose `gamma_T` grows like `eps^-2`.
pub fn sliver_3d(eps: f64) -> SimplicialMesh {
    SimplicialMesh::new(
        3,
        alloc::vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.5, eps, eps * eps],
            [0.5, -eps, eps * eps],
        ],
        alloc::vec![0, 1, 2, 3],
    )
    .expect("sliver is non-degenerate for eps > 0")
}

/// L-shaped domain `(-1,1)^2` minus `[0,1) x (-1,0]`, `n` cells per unit
/// length (area 3).
pub fn lshape_2d(n: usize) -> SimplicialMesh {
    let m = 2 * n; // cells per side
    let coord = |i: usize| -1.0 + i as f64 / n as f64;
    let mut vert_id = alloc::collections::BTreeMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut elements: Vec<usize> = Vec::new();
    let get = |i: usize,
               j: usize,
               vertices: &mut Vec<Point>,
               vert_id: &mut alloc::collections::BTreeMap<(usize, usize), usize>|
     -> usize {
        *vert_id.entry((i, j)).or_insert_with(|| {
            vertices.push([coord(i), coord(j), 0.0]);
            vertices.len() - 1
        })
    };
    for j in 0..m {
        for i in 0..m {
            // skip cells inside the removed quadrant x >= 0, y <= 0
            if coord(i) >= -1e-12 && coord(j + 1) <= 1e-12 {
                continue;
            }
            let v00 = get(i, j, &mut vertices, &mut vert_id);
            let v10 = get(i + 1, j, &mut vertices, &mut vert_id);
            let v01 = get(i, j + 1, &mut vertices, &mut vert_id);
            let v11 = get(i + 1, j + 1, &mut vertices, &mut vert_id);
            elements.extend_from_slice(&[v00, v10, v11]);
            elements.extend_from_slice(&[v00, v11, v01]);
        }
    }
    SimplicialMesh::new(2, vertices, elements).expect("L-shape mesh is valid")
}
