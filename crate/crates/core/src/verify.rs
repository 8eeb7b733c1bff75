//! Self-checks on one mesh level: derivatives against finite differences,
//! Hessian consistency, projection and quadrature properties, and a
//! manufactured solution.
//!
//! Each check is independent, so callers may run them in any order or
//! concurrently.

use std::f64::consts::PI;

use crate::error::Result;
use crate::fem::{FeSpace, P0Field};
use crate::mesh::{build_unit_square_mesh, Mesh};
use crate::optimizer::{cost, directional_derivative, gradient_field, hessian_etaform, hessian_zform};
use crate::pde::{Model, NewtonOptions, ProblemSpec};
use crate::presets::manufactured_constant;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type CheckFn = fn(&ProblemSpec, &Mesh) -> Result<(bool, String)>;

#[derive(Clone, Copy)]
pub struct Check {
    pub name: &'static str,
    run: CheckFn,
}

impl Check {
    pub fn run(&self, spec: &ProblemSpec, mesh: &Mesh) -> CheckOutcome {
        match (self.run)(spec, mesh) {
            Ok((passed, detail)) => CheckOutcome { name: self.name, passed, detail },
            Err(e) => CheckOutcome { name: self.name, passed: false, detail: e.to_string() },
        }
    }
}

/// Admissibility comes first; the remaining checks assume it.
pub const ADMISSIBILITY: Check = Check { name: "admissibility", run: admissibility };

pub const BATTERY: [Check; 7] = [
    Check { name: "gradient vs central differences", run: gradient_fd },
    Check { name: "hessian vs gradient differences", run: hessian_fd },
    Check { name: "hessian symmetry", run: hessian_symmetry },
    Check { name: "z-form vs eta-form", run: hessian_forms },
    Check { name: "P0 projection orthogonality", run: projection_orthogonality },
    Check { name: "quadrature exactness", run: quadrature_exactness },
    Check { name: "manufactured constant state", run: manufactured_state },
];

pub const GRADIENT_TOL: f64 = 1e-5;
pub const SYMMETRY_TOL: f64 = 1e-10;
pub const FORMS_TOL: f64 = 1e-8;

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Smooth admissible control strictly inside the bounds.
pub fn probe_control(spec: &ProblemSpec, space: &FeSpace) -> P0Field {
    let b = spec.bounds;
    let (center, radius) =
        if b.upper.is_finite() { (0.5 * (b.lower + b.upper), 0.25 * (b.upper - b.lower)) } else { (b.lower + 1.0, 0.5) };
    space.l2_project_p0(|x| center + radius * (2.0 * PI * x[0]).sin() * (PI * x[1]).cos())
}

/// Two smooth directions.
pub fn probe_directions(space: &FeSpace) -> (P0Field, P0Field) {
    (
        space.l2_project_p0(|x| (PI * x[0]).cos() + x[1]),
        space.l2_project_p0(|x| x[0] * x[1] - (3.0 * PI * x[1]).sin()),
    )
}

fn shifted(u: &P0Field, v: &P0Field, t: f64) -> P0Field {
    P0Field::new(u.values.iter().zip(&v.values).map(|(a, b)| a + t * b).collect())
}

fn admissibility(spec: &ProblemSpec, mesh: &Mesh) -> Result<(bool, String)> {
    spec.validate(&FeSpace::new(mesh))?;
    Ok((true, "a0 + alpha >= 0 and nu > 0".into()))
}

fn gradient_fd(spec: &ProblemSpec, mesh: &Mesh) -> Result<(bool, String)> {
    let model = Model::new(spec, FeSpace::new(mesh))?;
    let u = probe_control(spec, &model.space);
    let (v, _) = probe_directions(&model.space);
    let exact = directional_derivative(&model.space, &gradient_field(&model, &u)?, &v);
    let t = 1e-4;
    let fd = (cost(&model, &shifted(&u, &v, t))? - cost(&model, &shifted(&u, &v, -t))?) / (2.0 * t);
    let err = relative(exact, fd);
    Ok((err <= GRADIENT_TOL, format!("J'v = {exact:.10e}, difference quotient {fd:.10e}, relative error {err:.2e}")))
}

fn hessian_fd(spec: &ProblemSpec, mesh: &Mesh) -> Result<(bool, String)> {
    let model = Model::new(spec, FeSpace::new(mesh))?;
    let opts = NewtonOptions::default();
    let u = probe_control(spec, &model.space);
    let (v, _) = probe_directions(&model.space);
    let (y, _) = model.solve_state(&u, None, &opts)?;
    let exact = hessian_zform(&model.linearize(&u, &y, opts.linear_tol)?, &v, &v)?;
    let t = 1e-4;
    let dj = |s: f64| -> Result<f64> {
        Ok(directional_derivative(&model.space, &gradient_field(&model, &shifted(&u, &v, s))?, &v))
    };
    let fd = (dj(t)? - dj(-t)?) / (2.0 * t);
    let err = relative(exact, fd);
    Ok((err <= GRADIENT_TOL, format!("J''(v,v) = {exact:.10e}, difference quotient {fd:.10e}, relative error {err:.2e}")))
}

fn hessian_symmetry(spec: &ProblemSpec, mesh: &Mesh) -> Result<(bool, String)> {
    let model = Model::new(spec, FeSpace::new(mesh))?;
    let opts = NewtonOptions::default();
    let u = probe_control(spec, &model.space);
    let (v1, v2) = probe_directions(&model.space);
    let (y, _) = model.solve_state(&u, None, &opts)?;
    let lin = model.linearize(&u, &y, opts.linear_tol)?;
    let a = hessian_zform(&lin, &v1, &v2)?;
    let b = hessian_zform(&lin, &v2, &v1)?;
    let err = relative(a, b);
    Ok((err <= SYMMETRY_TOL, format!("J''(v1,v2) = {a:.12e}, J''(v2,v1) = {b:.12e}, relative gap {err:.2e}")))
}

fn hessian_forms(spec: &ProblemSpec, mesh: &Mesh) -> Result<(bool, String)> {
    let model = Model::new(spec, FeSpace::new(mesh))?;
    let opts = NewtonOptions::default();
    let u = probe_control(spec, &model.space);
    let (v1, v2) = probe_directions(&model.space);
    let (y, _) = model.solve_state(&u, None, &opts)?;
    let lin = model.linearize(&u, &y, opts.linear_tol)?;
    let mut worst: f64 = 0.0;
    for (a, b) in [(&v1, &v1), (&v1, &v2), (&v2, &v2)] {
        worst = worst.max(relative(hessian_zform(&lin, a, b)?, hessian_etaform(&lin, a, b)?));
    }
    Ok((worst <= FORMS_TOL, format!("largest relative gap {worst:.2e}")))
}

fn projection_orthogonality(_: &ProblemSpec, mesh: &Mesh) -> Result<(bool, String)> {
    let space = FeSpace::new(mesh);
    let p = |x: [f64; 2]| 1.0 + x[0] * x[0] - 2.0 * x[0] * x[1] + 3.0 * x[1];
    let proj = space.l2_project_p0(p);
    let worst = (0..mesh.num_triangles()).fold(0.0_f64, |m, t| {
        let [a, b, c] = mesh.triangle_points(t);
        let integral = exact_quadratic_integral(p, a, b, c, mesh.area(t));
        m.max((integral - proj.values[t] * mesh.area(t)).abs())
    });
    Ok((worst <= 1e-12, format!("largest elementwise residual {worst:.2e}")))
}

/// Exact integral of a quadratic over a triangle from its vertex and edge
/// midpoint values.
fn exact_quadratic_integral(p: impl Fn([f64; 2]) -> f64, a: [f64; 2], b: [f64; 2], c: [f64; 2], area: f64) -> f64 {
    let mid = |x: [f64; 2], y: [f64; 2]| [0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])];
    area / 3.0 * (p(mid(a, b)) + p(mid(b, c)) + p(mid(c, a)))
}

fn quadrature_exactness(_: &ProblemSpec, mesh: &Mesh) -> Result<(bool, String)> {
    let space = FeSpace::new(mesh);
    let mut worst: f64 = 0.0;
    for i in 0..=4 {
        for j in 0..=(4 - i) {
            let q = space.integrate(|x| x[0].powi(i) * x[1].powi(j));
            let exact = 1.0 / ((i + 1) * (j + 1)) as f64;
            worst = worst.max((q - exact).abs());
        }
    }
    Ok((worst <= 1e-13, format!("largest monomial error up to degree 4: {worst:.2e}")))
}

fn manufactured_state(_: &ProblemSpec, mesh: &Mesh) -> Result<(bool, String)> {
    let spec = manufactured_constant();
    let model = Model::new(&spec, FeSpace::new(mesh))?;
    let u = P0Field::zeros(mesh);
    let (y, _) = model.solve_state(&u, None, &NewtonOptions::default())?;
    let residual = model.state_residual(&u, &y)?.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    let error = y.values.iter().fold(0.0_f64, |m, v| m.max((v - 1.0).abs()));
    Ok((residual <= 1e-12 && error <= 1e-12, format!("residual {residual:.2e}, max |y - 1| {error:.2e}")))
}

/// Runs admissibility and, if it passes, the rest of the battery in order.
pub fn run_all(spec: &ProblemSpec, level: u32) -> Result<Vec<CheckOutcome>> {
    let mesh = build_unit_square_mesh(level)?;
    let first = ADMISSIBILITY.run(spec, &mesh);
    if !first.passed {
        return Ok(vec![first]);
    }
    Ok(std::iter::once(first).chain(BATTERY.iter().map(|c| c.run(spec, &mesh))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::bilinear_benchmark;

    #[test]
    fn benchmark_battery_passes() {
        for outcome in run_all(&bilinear_benchmark(), 3).unwrap() {
            assert!(outcome.passed, "{}: {}", outcome.name, outcome.detail);
        }
    }

    #[test]
    fn bad_lower_bound_stops_early() {
        let mut spec = bilinear_benchmark();
        spec.bounds.lower = -3.0;
        let out = run_all(&spec, 2).unwrap();
        assert_eq!(out.len(), 1);
        assert!(!out[0].passed);
    }
}
