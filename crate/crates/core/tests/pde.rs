mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::integrate_mesh;
use ocfem::linalg::norm2;
use ocfem::pde::{solve_adjoint, Derivs};
use ocfem::presets::bilinear_benchmark;
use ocfem::{build_unit_square_mesh, Bounds, DataTreatment, Error, FeSpace, Model, NewtonOptions, P0Field, P1Field, ProblemSpec};

fn exact(x: [f64; 2]) -> f64 {
    (PI * x[0]).cos() * (PI * x[1]).cos() + 2.0 + x[0] * x[0]
}

/// `a(x,y) = y + y³ − s(x)` with `s` chosen so that `exact` solves the state
/// equation for `u = 0`; `g` is the outward normal derivative of `exact`.
fn smooth_problem() -> ProblemSpec {
    let source = |x: [f64; 2]| {
        let c = (PI * x[0]).cos() * (PI * x[1]).cos();
        let y = exact(x);
        2.0 * PI * PI * c - 2.0 + y + y * y * y
    };
    ProblemSpec {
        name: "smooth".into(),
        diffusion: None,
        reaction: Arc::new(move |x, y| Derivs { value: y + y * y * y - source(x), dy: 1.0 + 3.0 * y * y, dyy: 6.0 * y }),
        reaction_lower_bound: Arc::new(|_| 1.0),
        objective: Arc::new(|_, y| Derivs { value: 0.5 * y * y, dy: y, dyy: 1.0 }),
        boundary: Arc::new(|x| if x[0] > 1.0 - 1e-12 { 2.0 } else { 0.0 }),
        nu: 1.0,
        bounds: Bounds::new(0.0, 1.0),
        data: DataTreatment::Quadrature,
    }
}

fn p1_error(mesh: &ocfem::Mesh, y: &P1Field) -> f64 {
    integrate_mesh(
        mesh,
        |t, p| {
            let b = mesh.barycentric(t, p);
            let tri = mesh.triangles()[t];
            (b[0] * y.values[tri[0]] + b[1] * y.values[tri[1]] + b[2] * y.values[tri[2]] - exact(p)).powi(2)
        },
        5,
    )
    .sqrt()
}

#[test]
fn state_converges_at_second_order() {
    let spec = smooth_problem();
    let mut errors = Vec::new();
    for level in 2..=6 {
        let mesh = build_unit_square_mesh(level).unwrap();
        let model = Model::new(&spec, FeSpace::new(&mesh)).unwrap();
        let (y, report) = model.solve_state(&P0Field::zeros(&mesh), None, &NewtonOptions::default()).unwrap();
        assert!(report.converged && report.iterations <= 10);
        errors.push(p1_error(&mesh, &y));
    }
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.9..=2.1).contains(&order), "errors {errors:?}");
    }
}

#[test]
fn residual_is_second_order_accurate_in_the_jacobian() {
    let spec = bilinear_benchmark();
    let mesh = build_unit_square_mesh(3).unwrap();
    let model = Model::new(&spec, FeSpace::new(&mesh)).unwrap();
    let u = P0Field::new(mesh.barycenters().iter().map(|p| (5.0 * p[0]).sin() * 0.8).collect());
    let y = P1Field::new(mesh.vertices().iter().map(|p| p[0] - 2.0 * p[1] * p[1]).collect());
    let d: Vec<f64> = mesh.vertices().iter().map(|p| (3.0 * p[1]).cos()).collect();
    let f0 = model.state_residual(&u, &y).unwrap();
    let jd = model.jacobian(&u, &y).unwrap().matvec(&d).unwrap();
    let remainder = |t: f64| {
        let yt = P1Field::new(y.values.iter().zip(&d).map(|(a, b)| a + t * b).collect());
        let ft = model.state_residual(&u, &yt).unwrap();
        norm2(&ft.iter().zip(&f0).zip(&jd).map(|((a, b), c)| a - b - t * c).collect::<Vec<_>>())
    };
    let (r1, r2) = (remainder(1e-2), remainder(5e-3));
    let slope = (r1 / r2).log2();
    assert!((1.9..=2.1).contains(&slope), "slope {slope}");
}

#[test]
fn adjoint_solves_the_transposed_system() {
    let spec = bilinear_benchmark();
    let mesh = build_unit_square_mesh(4).unwrap();
    let model = Model::new(&spec, FeSpace::new(&mesh)).unwrap();
    let u = P0Field::constant(&mesh, 0.3);
    let (y, _) = model.solve_state(&u, None, &NewtonOptions::default()).unwrap();
    let phi = solve_adjoint(&model, &u, &y).unwrap();
    let lhs = model.jacobian(&u, &y).unwrap().matvec(&phi.values).unwrap();
    let space = FeSpace::new(&mesh);
    let y_qp = space.p1_at_qp(&y).unwrap();
    let l_y: Vec<f64> = space
        .quadrature_points()
        .iter()
        .zip(&y_qp)
        .map(|(&x, &yq)| (spec.objective)(x, yq).dy - (spec.objective)(x, 0.0).dy)
        .collect();
    let rhs: Vec<f64> = space.load_qp(&l_y).unwrap().iter().zip(model.objective_load()).map(|(a, b)| a + b).collect();
    let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
    assert!(norm2(&diff) <= 1e-12 * norm2(&rhs));
}

#[test]
fn newton_warm_start_and_admissibility() {
    let spec = bilinear_benchmark();
    let mesh = build_unit_square_mesh(4).unwrap();
    let model = Model::new(&spec, FeSpace::new(&mesh)).unwrap();
    let u = P0Field::constant(&mesh, -1.0);
    let (y, cold) = model.solve_state(&u, None, &NewtonOptions::default()).unwrap();
    let (_, warm) = model.solve_state(&u, Some(&y), &NewtonOptions::default()).unwrap();
    assert!(cold.iterations >= 2);
    assert_eq!(warm.iterations, 0);
    assert!(cold.residual <= 1e-11 * model.load_scale());
    let bad = P0Field::constant(&mesh, -2.5);
    assert!(matches!(model.solve_state(&bad, None, &NewtonOptions::default()), Err(Error::Inadmissible(_))));
    let short = P1Field::new(vec![0.0; 3]);
    assert!(matches!(model.solve_state(&u, Some(&short), &NewtonOptions::default()), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn iteration_cap_reports_non_convergence() {
    let spec = bilinear_benchmark();
    let mesh = build_unit_square_mesh(3).unwrap();
    let model = Model::new(&spec, FeSpace::new(&mesh)).unwrap();
    let opts = NewtonOptions { max_iter: 1, ..NewtonOptions::default() };
    let r = model.solve_state(&P0Field::zeros(&mesh), None, &opts);
    assert!(matches!(r, Err(Error::NewtonNonConvergence { iterations: 1, .. })));
}
