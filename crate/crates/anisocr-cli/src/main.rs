//! Command-line driver: mesh generation, geometry reports, identity checks
//! and inequality sweeps over anisotropic mesh families.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anisocr::fe::{build_dofs, FeFunction, Space};
use anisocr::geometry::{element_aspect, element_geometry, semi_regularity};
use anisocr::mesh::{build_faces, parse_mesh, SimplicialMesh};
use anisocr::meshgen::{gen_family, FamilySpec};
use anisocr::norms::{build_face_weights, ibp_residual, jump_product_residual, trace_ratio};
use anisocr::poisson::{assemble_poisson, solve_poisson};
use anisocr::projection::projection_error_ratio;
use anisocr::rng::SplitMix64;
use anisocr::rt::{
    commuting_residual, flux_reproduction_error, rt_error_ratio, rt_stability_ratio,
};
use anisocr::sobolev::sweep_family;
use anisocr::Point;

const USAGE: &str = "\
anisocr - Crouzeix-Raviart / Raviart-Thomas verification on anisotropic meshes

USAGE:
    anisocr <SUBCOMMAND> [FLAGS]

SUBCOMMANDS:
    gen-mesh         --family <spec> --out <dir>
                     write the meshes of a family in the mesh text format
    geometry-report  --mesh <file> [--out <csv>]
                     per-element two-step decomposition record with checks
    projection-sweep [--q <q>] [--p <p>] [--out <csv>]
                     projection-error ratios over the needle family
    rt-sweep         [--p <p>] [--out <csv>]
                     RT stability/error ratios over the needle family
    identity-check   [--mesh <file>]
                     run the exact-identity residual suite
    sobolev-sweep    --family <spec> --q <q> --p <p> --space <tag> [--out <csv>]
                     discrete Sobolev constants over a family
    poisson          --mesh <file> --space <cr0|dccr> --f <one|linear|sinpi>
                     [--out <csv>]
                     solve the penalized Poisson problem, report stability

FAMILY SPECS:
    aniso_grid_2d:NX:NY1,NY2,...   kuhn_3d:NX,NY:NZ1,NZ2,...
    needle_2d:EPS1,EPS2,...        sliver_3d:EPS1,EPS2,...
    lshape_2d:N

SPACE TAGS: dccr | cr | cr0
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n\n{USAGE}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
        Err(CliError::CheckFailed(msg)) => {
            eprintln!("FAILED: {msg}");
            ExitCode::FAILURE
        }
    }
}

enum CliError {
    Usage(String),
    Runtime(String),
    CheckFailed(String),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn runtime(msg: impl std::fmt::Display) -> CliError {
    CliError::Runtime(msg.to_string())
}

fn run(args: &[String]) -> Result<(), CliError> {
    let Some(cmd) = args.first() else {
        return Err(usage("missing subcommand"));
    };
    let flags = parse_flags(&args[1..])?;
    match cmd.as_str() {
        "gen-mesh" => gen_mesh(&flags),
        "geometry-report" => geometry_report(&flags),
        "projection-sweep" => projection_sweep(&flags),
        "rt-sweep" => rt_sweep(&flags),
        "identity-check" => identity_check(&flags),
        "sobolev-sweep" => sobolev_sweep(&flags),
        "poisson" => poisson_cmd(&flags),
        "--help" | "-h" | "help" => {
            println!("{USAGE}");
            Ok(())
        }
        other => Err(usage(format!("unknown subcommand `{other}`"))),
    }
}

fn parse_flags(args: &[String]) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    let mut it = args.iter();
    while let Some(key) = it.next() {
        let Some(name) = key.strip_prefix("--") else {
            return Err(usage(format!("expected a --flag, found `{key}`")));
        };
        let Some(value) = it.next() else {
            return Err(usage(format!("flag --{name} needs a value")));
        };
        map.insert(name.to_string(), value.clone());
    }
    Ok(map)
}

fn required<'a>(flags: &'a BTreeMap<String, String>, name: &str) -> Result<&'a str, CliError> {
    flags
        .get(name)
        .map(String::as_str)
        .ok_or_else(|| usage(format!("missing required flag --{name}")))
}

fn float_flag(flags: &BTreeMap<String, String>, name: &str, default: f64) -> Result<f64, CliError> {
    match flags.get(name) {
        Some(v) => v
            .parse()
            .map_err(|_| usage(format!("bad value for --{name}: `{v}`"))),
        None => Ok(default),
    }
}

fn load_mesh(path: &str) -> Result<SimplicialMesh, CliError> {
    let text = fs::read_to_string(path).map_err(|e| runtime(format!("reading {path}: {e}")))?;
    parse_mesh(&text).map_err(runtime)
}

fn write_output(flags: &BTreeMap<String, String>, content: &str) -> Result<(), CliError> {
    match flags.get("out") {
        Some(path) => {
            fs::write(path, content).map_err(|e| runtime(format!("writing {path}: {e}")))?;
            println!("wrote {path}");
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn gen_mesh(flags: &BTreeMap<String, String>) -> Result<(), CliError> {
    let spec = FamilySpec::parse(required(flags, "family")?).map_err(runtime)?;
    let dir = required(flags, "out")?;
    fs::create_dir_all(dir).map_err(|e| runtime(format!("creating {dir}: {e}")))?;
    let members = gen_family(&spec).map_err(runtime)?;
    for member in &members {
        let (_, gamma) = semi_regularity(&member.mesh).map_err(runtime)?;
        let name = format!("{}_{}.mesh", spec.name(), member.param);
        let path = Path::new(dir).join(&name);
        fs::write(&path, member.mesh.to_text())
            .map_err(|e| runtime(format!("writing {}: {e}", path.display())))?;
        println!(
            "{}: {} elements, analytic aspect {}, measured max gamma {:.6}",
            path.display(),
            member.mesh.n_elements(),
            member.analytic_aspect,
            gamma
        );
    }
    Ok(())
}

fn geometry_report(flags: &BTreeMap<String, String>) -> Result<(), CliError> {
    let mesh = load_mesh(required(flags, "mesh")?)?;
    let d = mesh.dim;
    let mut csv = String::new();
    if d == 2 {
        csv.push_str("element_id,cond_tag,h_1,h_2,h_T,H_T,gamma,det_check,norm_checks\n");
    } else {
        csv.push_str("element_id,cond_tag,h_1,h_2,h_3,h_T,H_T,gamma,det_check,norm_checks\n");
    }
    for e in 0..mesh.n_elements() {
        let geo = element_geometry(&mesh, e).map_err(runtime)?;
        let det = geo.det_tilde_hat().abs();
        let dfact = if d == 2 { 2.0 } else { 6.0 };
        let det_ok = (det - dfact * geo.measure).abs() <= 1e-10 * det;
        let (nt, nti) = geo.tilde_norms();
        let (rn, rni) = geo.rot_norms();
        let tilde_bound = if d == 2 { 2.0f64.sqrt() } else { 2.0 };
        let cond_bound = if d == 2 {
            geo.gamma
        } else {
            2.0 / 3.0 * geo.gamma
        };
        let hmax = geo.h[..d].iter().cloned().fold(0.0f64, f64::max);
        let norms_ok = nt <= tilde_bound + 1e-10
            && nt * nti <= cond_bound + 1e-8
            && (rn - 1.0).abs() <= 1e-12
            && (rni - 1.0).abs() <= 1e-12
            && hmax <= geo.h_t * (1.0 + 1e-14)
            && geo.vertex_reproduction_error(&mesh.points_of(e)) <= 1e-10 * geo.h_t;
        let pf = |ok: bool| if ok { "pass" } else { "fail" };
        if d == 2 {
            let _ = writeln!(
                csv,
                "{e},{},{},{},{},{},{},{},{}",
                geo.cond.as_str(),
                geo.h[0],
                geo.h[1],
                geo.h_t,
                geo.big_h_t,
                geo.gamma,
                pf(det_ok),
                pf(norms_ok)
            );
        } else {
            let _ = writeln!(
                csv,
                "{e},{},{},{},{},{},{},{},{},{}",
                geo.cond.as_str(),
                geo.h[0],
                geo.h[1],
                geo.h[2],
                geo.h_t,
                geo.big_h_t,
                geo.gamma,
                pf(det_ok),
                pf(norms_ok)
            );
        }
    }
    write_output(flags, &csv)
}

fn needle_eps() -> [f64; 5] {
    [1.0, 1e-1, 1e-2, 1e-3, 1e-4]
}

fn projection_sweep(flags: &BTreeMap<String, String>) -> Result<(), CliError> {
    let q = float_flag(flags, "q", 2.0)?;
    let p = float_flag(flags, "p", 2.0)?;
    let v = |x: Point| x[0].sin() * x[1].cos();
    let grad = |x: Point| [x[0].cos() * x[1].cos(), -(x[0].sin()) * x[1].sin(), 0.0];
    let mut csv = String::from("epsilon,aspect,ratio\n");
    for eps in needle_eps() {
        let mesh = SimplicialMesh::new(
            2,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, eps, 0.0]],
            vec![0, 1, 2],
        )
        .map_err(runtime)?;
        let geo = element_geometry(&mesh, 0).map_err(runtime)?;
        let ratio = projection_error_ratio(&mesh, 0, &geo, &v, &grad, q, p, 8).map_err(runtime)?;
        let _ = writeln!(csv, "{eps},{},{ratio}", element_aspect(&mesh, 0));
    }
    write_output(flags, &csv)
}

fn rt_sweep(flags: &BTreeMap<String, String>) -> Result<(), CliError> {
    let p = float_flag(flags, "p", 2.0)?;
    let mut csv = String::from("family_param,gamma_max,stability_ratio,error_ratio\n");
    for eps in needle_eps() {
        // stability over the needle tiling of the unit square
        let mesh = anisocr::meshgen::needle_2d(eps);
        let faces = build_faces(&mesh).map_err(runtime)?;
        let dofs = build_dofs(&mesh, &faces, Space::Rt0);
        let (_, gamma) = semi_regularity(&mesh).map_err(runtime)?;
        let v = |x: Point| [x[1].sin(), x[0].cos(), 0.0];
        let jac = |x: Point| {
            let mut j = [[0.0; 3]; 3];
            j[0][1] = x[1].cos();
            j[1][0] = -(x[0].sin());
            j
        };
        let stability =
            rt_stability_ratio(&mesh, &faces, &dofs, &v, &jac, p, 8).map_err(runtime)?;
        // per-element error ratio on the matching needle triangle
        let tri = SimplicialMesh::new(
            2,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, eps, 0.0]],
            vec![0, 1, 2],
        )
        .map_err(runtime)?;
        let tfaces = build_faces(&tri).map_err(runtime)?;
        let tdofs = build_dofs(&tri, &tfaces, Space::Rt0);
        let geo = element_geometry(&tri, 0).map_err(runtime)?;
        let ve = |x: Point| [(x[0]).sin() * x[1], x[0].exp(), 0.0];
        let je = |x: Point| {
            let mut j = [[0.0; 3]; 3];
            j[0][0] = x[0].cos() * x[1];
            j[0][1] = x[0].sin();
            j[1][0] = x[0].exp();
            j
        };
        let error =
            rt_error_ratio(&tri, &tfaces, &tdofs, 0, &geo, &ve, &je, p, 8).map_err(runtime)?;
        let _ = writeln!(csv, "{eps},{gamma},{stability},{error}");
    }
    write_output(flags, &csv)
}

fn identity_check(flags: &BTreeMap<String, String>) -> Result<(), CliError> {
    let mesh = match flags.get("mesh") {
        Some(path) => load_mesh(path)?,
        None => anisocr::meshgen::aniso_grid_2d(4, 40),
    };
    let faces = build_faces(&mesh).map_err(runtime)?;
    let w = build_face_weights(&mesh, &faces, 2.0).map_err(runtime)?;
    let mut rng = SplitMix64::new(0xC11EC);
    let mut failed = false;
    let mut check = |name: &str, value: f64, tol: f64| {
        let ok = value <= tol;
        println!(
            "{name}: max residual {value:.3e} (tolerance {tol:.0e}) {}",
            if ok { "PASS" } else { "FAIL" }
        );
        failed |= !ok;
    };

    // discrete integration by parts over random RT x DCCR pairs
    let rt = build_dofs(&mesh, &faces, Space::Rt0);
    let dccr = build_dofs(&mesh, &faces, Space::Dccr);
    let mut worst_ibp = 0.0f64;
    for _ in 0..20 {
        let tau = FeFunction::from_coeffs(&rt, (0..rt.n_dofs).map(|_| rng.sym()).collect());
        let psi = FeFunction::from_coeffs(&dccr, (0..dccr.n_dofs).map(|_| rng.sym()).collect());
        worst_ibp = worst_ibp.max(ibp_residual(&mesh, &faces, &w, &tau, &psi).map_err(runtime)?);
    }
    check("discrete integration by parts", worst_ibp, 1e-11);

    // face product identity with random affine traces
    let mut worst_jump = 0.0f64;
    for _ in 0..20 {
        let a: Vec<f64> = (0..8).map(|_| rng.sym()).collect();
        let omega = (0.25 + 0.5 * rng.next_f64(), 0.0);
        let omega = (omega.0, 1.0 - omega.0);
        let v_of = |e: usize, x: Point| -> Point {
            let s = if e % 2 == 0 { 1.0 } else { -0.7 };
            [s * (a[0] + a[1] * x[0]), s * (a[2] + a[3] * x[1]), 0.0]
        };
        let phi_of = |e: usize, x: Point| -> f64 {
            let s = if e % 2 == 0 { a[4] } else { a[5] };
            s + a[6] * x[0] + a[7] * x[1]
        };
        for f in 0..faces.n_faces() {
            worst_jump = worst_jump.max(
                jump_product_residual(&mesh, &faces, f, &v_of, &phi_of, omega, 2)
                    .map_err(runtime)?,
            );
        }
    }
    check("face jump product identity", worst_jump, 1e-13);

    // commuting diagram for a cubic polynomial field
    let rtd = build_dofs(&mesh, &faces, Space::Rt0);
    let v = |x: Point| {
        [
            x[0] * x[0] * x[0] - x[1] * x[1] + 0.5,
            x[0] * x[1] * x[1] + x[1],
            0.0,
        ]
    };
    let div_v = |x: Point| 3.0 * x[0] * x[0] + 2.0 * x[0] * x[1] + 1.0;
    let (resid, sup) = commuting_residual(&mesh, &faces, &rtd, &v, &div_v, 6).map_err(runtime)?;
    check(
        "commuting diagram div o interp",
        resid / sup.max(1.0),
        1e-10,
    );

    // flux reproduction
    let flux = flux_reproduction_error(&mesh, &faces, &rtd, &v, 6).map_err(runtime)?;
    check("face flux reproduction", flux, 1e-12);

    // trace equality case for constants
    let mut worst_trace = 0.0f64;
    for e in 0..mesh.n_elements().min(64) {
        for i in 0..=mesh.dim {
            let f = faces.face_of(e, i);
            let r = trace_ratio(&mesh, &faces, e, f, &|_| 1.0, &|_| [0.0; 3], 2.0, 4)
                .map_err(runtime)?;
            let dfact: f64 = if mesh.dim == 2 { 2.0 } else { 6.0 };
            worst_trace = worst_trace.max((r - dfact.sqrt()).abs());
        }
    }
    check("trace equality case (constants)", worst_trace, 1e-12);

    if failed {
        Err(CliError::CheckFailed("identity suite".into()))
    } else {
        Ok(())
    }
}

fn sobolev_sweep(flags: &BTreeMap<String, String>) -> Result<(), CliError> {
    let spec = FamilySpec::parse(required(flags, "family")?).map_err(runtime)?;
    let q = float_flag(flags, "q", 2.0)?;
    let p = float_flag(flags, "p", 2.0)?;
    let space = Space::parse(required(flags, "space")?)
        .filter(Space::is_p1_scalar)
        .ok_or_else(|| usage("--space must be one of dccr|cr|cr0"))?;
    let rows = sweep_family(&spec, space, q, p).map_err(runtime)?;
    let mut csv = String::from(
        "family_param,h,max_aspect,max_gamma,space,q,p,constant,iterations,residual\n",
    );
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{:.3e}",
            r.param,
            r.h,
            r.max_aspect,
            r.max_gamma,
            r.space.as_str(),
            r.q,
            r.p,
            r.constant,
            r.iterations,
            r.residual
        );
    }
    write_output(flags, &csv)
}

fn poisson_cmd(flags: &BTreeMap<String, String>) -> Result<(), CliError> {
    let mesh = load_mesh(required(flags, "mesh")?)?;
    let space = match required(flags, "space")? {
        "cr0" => Space::Cr0,
        "dccr" => Space::Dccr,
        other => {
            return Err(usage(format!(
                "--space must be cr0 or dccr, found `{other}`"
            )))
        }
    };
    let fname = required(flags, "f")?;
    let f: Box<dyn Fn(Point) -> f64> = match fname {
        "one" => Box::new(|_| 1.0),
        "linear" => Box::new(|x: Point| x[0] + x[1] + x[2]),
        "sinpi" => {
            let dim = mesh.dim;
            Box::new(move |x: Point| {
                (0..dim)
                    .map(|k| (core::f64::consts::PI * x[k]).sin())
                    .product()
            })
        }
        other => {
            return Err(usage(format!(
                "--f must be one of one|linear|sinpi, found `{other}`"
            )))
        }
    };
    let faces = build_faces(&mesh).map_err(runtime)?;
    let w = build_face_weights(&mesh, &faces, 2.0).map_err(runtime)?;
    let dofs = build_dofs(&mesh, &faces, space);
    let system = assemble_poisson(&mesh, &faces, &w, &dofs, f.as_ref(), 6).map_err(runtime)?;
    let (_, rec) = solve_poisson(&mesh, &faces, &dofs, &system).map_err(runtime)?;
    let mut csv =
        String::from("space,f,n_dofs,energy,f_l2,u_l2,energy_over_f,u_over_energy,residual\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{:.3e}",
        space.as_str(),
        fname,
        dofs.n_dofs,
        rec.energy,
        rec.f_l2,
        rec.u_l2,
        rec.energy_over_f,
        rec.u_over_energy,
        rec.residual
    );
    write_output(flags, &csv)
}
