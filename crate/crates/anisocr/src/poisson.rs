//! Penalized CR discretization of the Poisson problem.
//!
//! Find `u_h` with
//! `int grad_h u . grad_h v + sum_F kappa_F int_F Pi_F^0 [[u]] Pi_F^0 [[v]]
//!  = int f v` for all `v_h`, where `kappa_F` is the height-based penalty at
//! `p = 2` - the bilinear form is exactly the `|.|_{2,Vh}^2` Gram matrix.
//! Homogeneous Dirichlet data enters strongly through `CR0` (boundary dofs
//! removed) or weakly through the boundary-jump penalty on `DCCR`.
//!
//! [`solve_poisson`] reports the stability record: the energy norm, load
//! norm, and the realized quotients whose boundedness across semi-regular
//! families is the discrete-Poincare consequence of the Sobolev inequality.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::fe::{DofMap, FeFunction, Space};
use crate::float::FloatExt;
use crate::la::{coordinate_ordering, Coo};
use crate::mesh::{FaceSet, SimplicialMesh};
use crate::norms::FaceWeights;
use crate::quadrature::simplex_rule;
use crate::sobolev::{assemble_mass, assemble_vh_gram, DENSE_LIMIT};
use crate::HarnessError;

/// Assembled penalized Poisson system.
pub struct PoissonSystem {
    /// Bilinear form (symmetric positive definite on `CR0` and `DCCR`).
    pub matrix: Coo,
    /// Load vector `int f b_k`.
    pub load: Vec<f64>,
    /// `||f||_{L^2(Omega)}` at assembly quadrature accuracy.
    pub f_l2: f64,
    /// Max assembly asymmetry `|A - A^T|` (dense check, small systems only).
    pub asymmetry: f64,
}

/// Assemble the penalized CR system for `space` in `{CR0, DCCR}`.
pub fn assemble_poisson(
    mesh: &SimplicialMesh,
    faces: &FaceSet,
    w: &FaceWeights,
    dofs: &DofMap,
    f: &dyn Fn(crate::Point) -> f64,
    quad_degree: usize,
) -> Result<PoissonSystem, HarnessError> {
    assert!(
        matches!(dofs.space, Space::Cr0 | Space::Dccr),
        "the scheme is posed on CR0 (strong Dirichlet) or DCCR (weak)"
    );
    let matrix = assemble_vh_gram(mesh, faces, dofs, w)?;
    let rule = simplex_rule(mesh.dim, quad_degree)?;
    let mut load = vec![0.0; dofs.n_dofs];
    let mut f_l2_sq = 0.0;
    for e in 0..mesh.n_elements() {
        let pts = mesh.points_of(e);
        f_l2_sq += rule.integrate(&pts, mesh.measure(e), |x| f(x) * f(x));
        for i in 0..dofs.stride() {
            let Some(g) = dofs.global(e, i) else { continue };
            load[g] += rule.integrate(&pts, mesh.measure(e), |x| {
                f(x) * crate::fe::eval_cr_basis(mesh, e, i, x)
            });
        }
    }
    let asymmetry = if dofs.n_dofs <= DENSE_LIMIT {
        matrix.to_dense().max_asymmetry()
    } else {
        0.0
    };
    Ok(PoissonSystem {
        matrix,
        load,
        f_l2: f_l2_sq.sqrt(),
        asymmetry,
    })
}

/// Stability record of one solve.
#[derive(Debug, Clone)]
pub struct StabilityRecord {
    /// `|u_h|_E = sqrt(u^T A u)`.
    pub energy: f64,
    /// `||f||_{L^2}`.
    pub f_l2: f64,
    /// `||u_h||_{L^2}`.
    pub u_l2: f64,
    /// `|u_h|_E / ||f||` (zero for `f = 0`).
    pub energy_over_f: f64,
    /// `||u_h|| / |u_h|_E` (zero for the zero solution).
    pub u_over_energy: f64,
    /// Relative residual `||A u - b|| / ||b||`.
    pub residual: f64,
}

/// Direct solve of the assembled system: dense Cholesky up to
/// [`DENSE_LIMIT`] dofs, banded Cholesky with a coordinate ordering above.
pub fn solve_poisson(
    mesh: &SimplicialMesh,
    faces: &FaceSet,
    dofs: &DofMap,
    system: &PoissonSystem,
) -> Result<(Vec<f64>, StabilityRecord), HarnessError> {
    let n = dofs.n_dofs;
    let b = &system.load;
    let bnorm = crate::la::norm_vec(b);
    if bnorm == 0.0 {
        // f = 0: the zero solution, all quotients zero
        return Ok((
            vec![0.0; n],
            StabilityRecord {
                energy: 0.0,
                f_l2: system.f_l2,
                u_l2: 0.0,
                energy_over_f: 0.0,
                u_over_energy: 0.0,
                residual: 0.0,
            },
        ));
    }
    let (u, residual) = if n <= DENSE_LIMIT {
        let a = system.matrix.to_dense();
        let chol = a.cholesky().map_err(|e| HarnessError::SingularGram {
            space: "poisson system",
            detail: e.to_string(),
        })?;
        let u = chol.solve(b);
        let mut r = vec![0.0; n];
        a.matvec(&u, &mut r);
        let mut rr = 0.0;
        for i in 0..n {
            rr += (r[i] - b[i]).powi(2);
        }
        (u, rr.sqrt() / bnorm)
    } else {
        let perm = coordinate_ordering(&poisson_dof_positions(mesh, faces, dofs));
        let a = system.matrix.to_banded(&perm);
        let chol = a
            .clone()
            .cholesky()
            .map_err(|e| HarnessError::SingularGram {
                space: "poisson system",
                detail: e.to_string(),
            })?;
        let pb = Coo::permute(&perm, b);
        let pu = chol.solve(&pb);
        let mut r = vec![0.0; n];
        a.matvec(&pu, &mut r);
        let mut rr = 0.0;
        for i in 0..n {
            rr += (r[i] - pb[i]).powi(2);
        }
        (Coo::unpermute(&perm, &pu), rr.sqrt() / bnorm)
    };
    // energy and L2 norms of the solution
    let mut au = vec![0.0; n];
    dense_or_banded_matvec(&system.matrix, &u, &mut au);
    let energy = crate::la::dot_vec(&u, &au).max(0.0).sqrt();
    let mass = assemble_mass(mesh, dofs)?;
    let mut mu = vec![0.0; n];
    dense_or_banded_matvec(&mass, &u, &mut mu);
    let u_l2 = crate::la::dot_vec(&u, &mu).max(0.0).sqrt();
    let record = StabilityRecord {
        energy,
        f_l2: system.f_l2,
        u_l2,
        energy_over_f: if system.f_l2 > 0.0 {
            energy / system.f_l2
        } else {
            0.0
        },
        u_over_energy: if energy > 0.0 { u_l2 / energy } else { 0.0 },
        residual,
    };
    Ok((u, record))
}

fn poisson_dof_positions(mesh: &SimplicialMesh, faces: &FaceSet, dofs: &DofMap) -> Vec<[f64; 3]> {
    let mut pos = vec![[0.0; 3]; dofs.n_dofs];
    for e in 0..mesh.n_elements() {
        for i in 0..dofs.stride() {
            if let Some(g) = dofs.global(e, i) {
                pos[g] = faces.centroid(mesh, faces.face_of(e, i));
            }
        }
    }
    pos
}

fn dense_or_banded_matvec(coo: &Coo, x: &[f64], y: &mut [f64]) {
    // triplet matvec, no materialization
    y.fill(0.0);
    coo.for_each(|i, j, v| {
        y[i] += v * x[j];
    });
}

/// `int f u_h` for the energy-identity check.
pub fn load_pairing(system: &PoissonSystem, u: &[f64]) -> f64 {
    crate::la::dot_vec(&system.load, u)
}

/// `u_h` evaluated as a finite element function.
pub fn solution_function<'a>(dofs: &'a DofMap, u: Vec<f64>) -> FeFunction<'a> {
    FeFunction::from_coeffs(dofs, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe::build_dofs;
    use crate::mesh::build_faces;
    use crate::meshgen::aniso_grid_2d;
    use crate::norms::build_face_weights;
    use crate::sobolev::sobolev_constant_l2;
    use crate::testutil::two_triangle_square;

    #[test]
    fn cr0_two_triangle_single_entry() {
        let mesh = two_triangle_square();
        let faces = build_faces(&mesh).unwrap();
        let w = build_face_weights(&mesh, &faces, 2.0).unwrap();
        let dofs = build_dofs(&mesh, &faces, Space::Cr0);
        let sys = assemble_poisson(&mesh, &faces, &w, &dofs, &|_| 1.0, 6).unwrap();
        let a = sys.matrix.to_dense();
        assert_eq!(a.rows, 1);
        // the single entry is ||grad theta_diag||^2 = 8
        assert!((a.at(0, 0) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn dccr_constant_energy_is_boundary_penalty() {
        let mesh = two_triangle_square();
        let faces = build_faces(&mesh).unwrap();
        let w = build_face_weights(&mesh, &faces, 2.0).unwrap();
        let dofs = build_dofs(&mesh, &faces, Space::Dccr);
        let sys = assemble_poisson(&mesh, &faces, &w, &dofs, &|_| 1.0, 6).unwrap();
        let a = sys.matrix.to_dense();
        let ones = vec![1.0; dofs.n_dofs];
        let mut au = vec![0.0; dofs.n_dofs];
        a.matvec(&ones, &mut au);
        let energy_sq = crate::la::dot_vec(&ones, &au);
        // sum over boundary faces of kappa |F| = 4
        assert!((energy_sq - 4.0).abs() < 1e-12);
    }

    #[test]
    fn assembly_symmetric() {
        let mesh = aniso_grid_2d(3, 5);
        let faces = build_faces(&mesh).unwrap();
        let w = build_face_weights(&mesh, &faces, 2.0).unwrap();
        for space in [Space::Cr0, Space::Dccr] {
            let dofs = build_dofs(&mesh, &faces, space);
            let sys = assemble_poisson(&mesh, &faces, &w, &dofs, &|x| x[0] + x[1], 6).unwrap();
            assert!(sys.asymmetry <= 1e-13, "{:?}: {}", space, sys.asymmetry);
        }
    }

    #[test]
    fn zero_load_zero_solution() {
        let mesh = two_triangle_square();
        let faces = build_faces(&mesh).unwrap();
        let w = build_face_weights(&mesh, &faces, 2.0).unwrap();
        let dofs = build_dofs(&mesh, &faces, Space::Cr0);
        let sys = assemble_poisson(&mesh, &faces, &w, &dofs, &|_| 0.0, 6).unwrap();
        let (u, rec) = solve_poisson(&mesh, &faces, &dofs, &sys).unwrap();
        assert!(u.iter().all(|&x| x == 0.0));
        assert_eq!(rec.energy, 0.0);
        assert_eq!(rec.energy_over_f, 0.0);
    }

    #[test]
    fn energy_identity() {
        // |u|_E^2 = int f u_h when u_h solves the system
        let mesh = aniso_grid_2d(4, 4);
        let faces = build_faces(&mesh).unwrap();
        let w = build_face_weights(&mesh, &faces, 2.0).unwrap();
        for space in [Space::Cr0, Space::Dccr] {
            let dofs = build_dofs(&mesh, &faces, space);
            let sys = assemble_poisson(&mesh, &faces, &w, &dofs, &|_| 1.0, 6).unwrap();
            let (u, rec) = solve_poisson(&mesh, &faces, &dofs, &sys).unwrap();
            let pairing = load_pairing(&sys, &u);
            assert!(
                (rec.energy * rec.energy - pairing).abs() <= 1e-10 * pairing.abs(),
                "{:?}",
                space
            );
            assert!(rec.residual <= 1e-10);
        }
    }

    #[test]
    fn discrete_poincare_consequence() {
        // ||u_h|| <= C_P |u_h|_E with C_P the Sobolev constant of the same
        // mesh and space
        let mesh = aniso_grid_2d(4, 4);
        let faces = build_faces(&mesh).unwrap();
        let w = build_face_weights(&mesh, &faces, 2.0).unwrap();
        let dofs = build_dofs(&mesh, &faces, Space::Cr0);
        let sys = assemble_poisson(&mesh, &faces, &w, &dofs, &|x| x[0] * x[1] + 1.0, 6).unwrap();
        let (_, rec) = solve_poisson(&mesh, &faces, &dofs, &sys).unwrap();
        let cp = sobolev_constant_l2(&mesh, &faces, &dofs, &w)
            .unwrap()
            .constant;
        assert!(rec.u_l2 <= cp * rec.energy + 1e-9);
    }
}
