use anisocr::fe::{build_dofs, Space};
use anisocr::mesh::build_faces;
use anisocr::meshgen::aniso_grid_2d;
use anisocr::norms::build_face_weights;
use anisocr::sobolev::{assemble_vh_gram, sobolev_constant_l2};
use std::time::Instant;

fn main() {
    let mesh = aniso_grid_2d(16, 1600);
    let faces = build_faces(&mesh).unwrap();
    let w = build_face_weights(&mesh, &faces, 2.0).unwrap();
    for space in [Space::Cr0, Space::Cr, Space::Dccr] {
        let dofs = build_dofs(&mesh, &faces, space);
        let gram = assemble_vh_gram(&mesh, &faces, &dofs, &w).unwrap();
        // reproduce the internal ordering to inspect the bandwidth
        let pos = anisocr::sobolev::dof_positions_for_tests(&mesh, &faces, &dofs);
        let perm = anisocr::la::coordinate_ordering(&pos);
        let band = gram.to_banded(&perm);
        eprintln!("{space:?}: n = {}, bandwidth = {}", dofs.n_dofs, band.bw);
        let t = Instant::now();
        let chol = band.clone().cholesky().unwrap();
        eprintln!("  cholesky: {:?}", t.elapsed());
        let t = Instant::now();
        let b = vec![1.0; dofs.n_dofs];
        for _ in 0..10 {
            let _ = chol.solve(&b);
        }
        eprintln!("  10 solves: {:?}", t.elapsed());
        let t = Instant::now();
        let solved = sobolev_constant_l2(&mesh, &faces, &dofs, &w).unwrap();
        eprintln!(
            "  full eigensolve: {:?} iters {} residual {:.3e}",
            t.elapsed(),
            solved.iterations,
            solved.residual
        );
    }
}
