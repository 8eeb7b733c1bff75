//! Reduced cost, its derivatives, and the semismooth Newton (primal-dual
//! active set) solver for the discrete control problem.
//!
//! Discrete stationarity reads `ū = Proj_[α,β]((1/ν) Π_h(ȳ φ̄))`, where `Π_h`
//! is the elementwise mean. The solver applies Newton's method to
//! `R(u) = u − Proj((1/ν) Π_h(y(u) φ(u)))`: elements whose projected value is
//! clamped are fixed at the bound and the remaining ones take a reduced
//! Newton step computed by matrix-free conjugate gradients.

use crate::error::{Error, Result};
use crate::fem::{FeSpace, P0Field, P1Field};
use crate::pde::{Linearization, Model, NewtonOptions, SolveReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    /// May be `f64::INFINITY`.
    pub upper: f64,
}

impl Bounds {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn clamp(&self, v: f64) -> f64 {
        if v < self.lower {
            self.lower
        } else if v > self.upper {
            self.upper
        } else {
            v
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    /// Tolerance for "at the bound" decisions.
    pub fn active_tolerance(&self) -> f64 {
        if self.upper.is_finite() {
            1e-6 * (self.upper - self.lower)
        } else {
            1e-6 * self.lower.abs().max(1.0)
        }
    }
}

#[derive(Debug, Clone)]
pub struct OcpOptions {
    /// Target for the L² KKT residual.
    pub tol: f64,
    pub max_outer: usize,
    pub newton: NewtonOptions,
    pub cg_max_iter: usize,
    /// Relaxation of the fallback fixed-point step.
    pub fallback_step: f64,
    /// Outer iterations without KKT decrease before the fallback kicks in.
    pub stall_limit: usize,
}

impl Default for OcpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_outer: 50,
            newton: NewtonOptions::default(),
            cg_max_iter: 500,
            fallback_step: 0.5,
            stall_limit: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OcpSolution {
    pub control: P0Field,
    pub state: P1Field,
    pub adjoint: P1Field,
    pub cost: f64,
    pub kkt_residual: f64,
    pub outer_iterations: usize,
    pub converged: bool,
    pub state_reports: Vec<SolveReport>,
    pub cg_iterations: Vec<usize>,
    pub fallback_steps: usize,
}

/// `J_h(u) = ∫ L(x, y_h) + (ν/2) ∫ u²` evaluated at a given state.
///
/// The part `∂L/∂y(x, 0) y_h` of the tracking term is integrated with the
/// model's data treatment, so the adjoint gives the exact derivative.
pub fn cost_at(model: &Model, u: &P0Field, y: &P1Field) -> Result<f64> {
    let space = &model.space;
    let y_qp = space.p1_at_qp(y)?;
    let l: Vec<f64> = space
        .quadrature_points()
        .iter()
        .zip(&y_qp)
        .map(|(&x, &yq)| (model.spec.objective)(x, yq).value - (model.spec.objective)(x, 0.0).dy * yq)
        .collect();
    let tracking = space.integrate_qp(&l)? + crate::linalg::dot(model.objective_load(), &y.values);
    let tikhonov: f64 = u.values.iter().zip(space.areas()).map(|(v, a)| a * v * v).sum();
    Ok(tracking + 0.5 * model.spec.nu * tikhonov)
}

pub fn cost(model: &Model, u: &P0Field) -> Result<f64> {
    let (y, _) = model.solve_state(u, None, &NewtonOptions::default())?;
    cost_at(model, u, &y)
}

/// Elementwise means `(1/|T|) ∫_T y φ`.
pub fn mean_products(space: &FeSpace, y: &P1Field, phi: &P1Field) -> Result<Vec<f64>> {
    Ok(space.product_integrals(y, phi)?.into_iter().zip(space.areas()).map(|(i, a)| i / a).collect())
}

/// Riesz representative of `J'_h(u)` in the |T|-weighted inner product:
/// `ν u_T − (1/|T|) ∫_T y φ`.
pub fn gradient_from(space: &FeSpace, nu: f64, u: &P0Field, y: &P1Field, phi: &P1Field) -> Result<P0Field> {
    let means = mean_products(space, y, phi)?;
    Ok(P0Field::new(u.values.iter().zip(means).map(|(uv, m)| nu * uv - m).collect()))
}

pub fn gradient_field(model: &Model, u: &P0Field) -> Result<P0Field> {
    let opts = NewtonOptions::default();
    let (y, _) = model.solve_state(u, None, &opts)?;
    let lin = model.linearize(u, &y, opts.linear_tol)?;
    gradient_from(&model.space, model.spec.nu, u, &y, &lin.adjoint)
}

/// `J'_h(u)v = Σ_T g_T v_T |T|`.
pub fn directional_derivative(space: &FeSpace, grad: &P0Field, v: &P0Field) -> f64 {
    grad.values.iter().zip(&v.values).zip(space.areas()).map(|((g, vv), a)| g * vv * a).sum()
}

fn weighted_dot(space: &FeSpace, a: &P0Field, b: &P0Field) -> f64 {
    directional_derivative(space, a, b)
}

/// `J″_h(u)(v₁,v₂)` from the linearized states:
/// `∫[∂²L/∂y² − φ∂²a/∂y²] z₁z₂ − ∫(v₁z₂ + v₂z₁)φ + ν∫v₁v₂`.
pub fn hessian_zform(lin: &Linearization, v1: &P0Field, v2: &P0Field) -> Result<f64> {
    let space = lin.space();
    let nu = lin.model().spec.nu;
    let z1 = lin.linearized(v1)?;
    let z2 = lin.linearized(v2)?;
    let curvature = lin.curvature_form(&z1, &z2)?;
    let z2phi = space.product_integrals(&z2, &lin.adjoint)?;
    let z1phi = space.product_integrals(&z1, &lin.adjoint)?;
    let mut mixed = 0.0;
    let mut tikhonov = 0.0;
    for t in 0..v1.values.len() {
        mixed += v1.values[t] * z2phi[t] + v2.values[t] * z1phi[t];
        tikhonov += v1.values[t] * v2.values[t] * space.areas()[t];
    }
    Ok(curvature - mixed + nu * tikhonov)
}

/// Hessian action as a P0 field: `ν v_T − (1/|T|)∫_T (φ z + y η)`.
pub fn hessian_action(lin: &Linearization, v: &P0Field) -> Result<P0Field> {
    let space = lin.space();
    let nu = lin.model().spec.nu;
    let z = lin.linearized(v)?;
    let eta = lin.eta(&z, v)?;
    let phiz = space.product_integrals(&lin.adjoint, &z)?;
    let yeta = space.product_integrals(&lin.state, &eta)?;
    Ok(P0Field::new(
        (0..v.values.len()).map(|t| nu * v.values[t] - (phiz[t] + yeta[t]) / space.areas()[t]).collect(),
    ))
}

/// `J″_h(u)(v₁,v₂) = ∫[ν v₁ − (φ z₁ + y η₁)] v₂`.
pub fn hessian_etaform(lin: &Linearization, v1: &P0Field, v2: &P0Field) -> Result<f64> {
    Ok(weighted_dot(lin.space(), &hessian_action(lin, v1)?, v2))
}

/// `Proj_[α,β]((1/(ν|T|)) ∫_T y φ)` on every triangle.
pub fn project_control(space: &FeSpace, y: &P1Field, phi: &P1Field, bounds: Bounds, nu: f64) -> Result<P0Field> {
    let means = mean_products(space, y, phi)?;
    Ok(P0Field::new(means.into_iter().map(|m| bounds.clamp(m / nu)).collect()))
}

/// L² distance between `u` and its projection-formula image.
pub fn kkt_residual(space: &FeSpace, u: &P0Field, y: &P1Field, phi: &P1Field, bounds: Bounds, nu: f64) -> Result<f64> {
    let p = project_control(space, y, phi, bounds, nu)?;
    space.l2_diff_p0(u, &p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ElementSet {
    Lower,
    Upper,
    Inactive,
}

enum CgOutcome {
    Step(P0Field, usize),
    NegativeCurvature(usize),
}

/// Conjugate gradients for `(H δ)_I = rhs_I` on the inactive set with
/// `δ = 0` elsewhere, in the |T|-weighted inner product.
fn reduced_cg(lin: &Linearization, inactive: &[bool], rhs: &P0Field, rel_tol: f64, max_iter: usize) -> Result<CgOutcome> {
    let space = lin.space();
    let restrict = |f: &mut P0Field| {
        for (v, &keep) in f.values.iter_mut().zip(inactive) {
            if !keep {
                *v = 0.0;
            }
        }
    };
    let mut r = rhs.clone();
    restrict(&mut r);
    let mut x = P0Field::new(vec![0.0; r.values.len()]);
    let r0 = weighted_dot(space, &r, &r).sqrt();
    if r0 == 0.0 {
        return Ok(CgOutcome::Step(x, 0));
    }
    let mut p = r.clone();
    let mut rr = r0 * r0;
    for it in 1..=max_iter {
        let mut hp = hessian_action(lin, &p)?;
        restrict(&mut hp);
        let php = weighted_dot(space, &p, &hp);
        if php <= 1e-14 * lin.model().spec.nu * weighted_dot(space, &p, &p) {
            return Ok(if it == 1 { CgOutcome::NegativeCurvature(it) } else { CgOutcome::Step(x, it) });
        }
        let alpha = rr / php;
        for t in 0..x.values.len() {
            x.values[t] += alpha * p.values[t];
            r.values[t] -= alpha * hp.values[t];
        }
        let rr_new = weighted_dot(space, &r, &r);
        if rr_new.sqrt() <= rel_tol * r0 {
            return Ok(CgOutcome::Step(x, it));
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for t in 0..p.values.len() {
            p.values[t] = r.values[t] + beta * p.values[t];
        }
    }
    Ok(CgOutcome::Step(x, max_iter))
}

/// Solves the discrete control problem from `init` (clamped), or from
/// `clamp(0)` when absent.
pub fn solve_ocp(model: &Model, init: Option<&P0Field>, state_init: Option<&P1Field>, opts: &OcpOptions) -> Result<OcpSolution> {
    let space = &model.space;
    let spec = model.spec;
    let bounds = spec.bounds;
    let nu = spec.nu;
    let nt = space.mesh().num_triangles();
    let areas = space.areas();

    let mut u = match init {
        Some(f) if f.values.len() == nt => P0Field::new(f.values.iter().map(|&v| bounds.clamp(v)).collect()),
        Some(f) => return Err(Error::DimensionMismatch { expected: nt, found: f.values.len() }),
        None => P0Field::constant(space.mesh(), bounds.clamp(0.0)),
    };
    let mut y_guess = state_init.cloned();
    let mut reports = Vec::new();
    let mut cg_iterations = Vec::new();
    let mut fallback_steps = 0;
    let mut best_kkt = f64::INFINITY;
    let mut best: Option<OcpSolution> = None;
    let mut stall = 0usize;
    let mut last_kkt = f64::INFINITY;

    for outer in 0..=opts.max_outer {
        let (y, report) = model.solve_state(&u, y_guess.as_ref(), &opts.newton)?;
        reports.push(report);
        let lin = model.linearize(&u, &y, opts.newton.linear_tol)?;
        let means = mean_products(space, &y, &lin.adjoint)?;
        let projected = P0Field::new(means.iter().map(|m| bounds.clamp(m / nu)).collect());
        let kkt = space.l2_diff_p0(&u, &projected)?;

        let snapshot = |converged: bool| -> Result<OcpSolution> {
            Ok(OcpSolution {
                control: u.clone(),
                state: y.clone(),
                adjoint: lin.adjoint.clone(),
                cost: cost_at(model, &u, &y)?,
                kkt_residual: kkt,
                outer_iterations: outer,
                converged,
                state_reports: reports.clone(),
                cg_iterations: cg_iterations.clone(),
                fallback_steps,
            })
        };
        if kkt <= opts.tol {
            return snapshot(true);
        }
        if kkt < best_kkt {
            best_kkt = kkt;
            best = Some(snapshot(false)?);
        }
        if outer == opts.max_outer {
            break;
        }

        if kkt < last_kkt {
            stall = 0;
        } else {
            stall += 1;
        }
        last_kkt = kkt;

        let fixed_point = |u: &P0Field| {
            P0Field::new(
                u.values
                    .iter()
                    .zip(&projected.values)
                    .map(|(a, p)| (1.0 - opts.fallback_step) * a + opts.fallback_step * p)
                    .collect(),
            )
        };
        if stall >= opts.stall_limit {
            u = fixed_point(&u);
            fallback_steps += 1;
            stall = 0;
            y_guess = Some(y);
            continue;
        }

        // Strict inequalities define the active sets.
        let sets: Vec<ElementSet> = means
            .iter()
            .map(|m| {
                let s = m / nu;
                if s < bounds.lower {
                    ElementSet::Lower
                } else if s > bounds.upper {
                    ElementSet::Upper
                } else {
                    ElementSet::Inactive
                }
            })
            .collect();
        let inactive: Vec<bool> = sets.iter().map(|&s| s == ElementSet::Inactive).collect();
        let mut step_active = P0Field::new(vec![0.0; nt]);
        for t in 0..nt {
            step_active.values[t] = match sets[t] {
                ElementSet::Lower => bounds.lower - u.values[t],
                ElementSet::Upper => bounds.upper - u.values[t],
                ElementSet::Inactive => 0.0,
            };
        }
        let mut rhs = P0Field::new((0..nt).map(|t| -(nu * u.values[t] - means[t])).collect());
        if step_active.values.iter().any(|&d| d != 0.0) {
            let h_active = hessian_action(&lin, &step_active)?;
            for t in 0..nt {
                rhs.values[t] -= h_active.values[t];
            }
        }
        let rel_tol = (0.1 * kkt).clamp(1e-12, 1e-3);
        match reduced_cg(&lin, &inactive, &rhs, rel_tol, opts.cg_max_iter)? {
            CgOutcome::Step(step, iters) => {
                cg_iterations.push(iters);
                u = P0Field::new(
                    (0..nt)
                        .map(|t| {
                            let d = if inactive[t] { step.values[t] } else { step_active.values[t] };
                            bounds.clamp(u.values[t] + d)
                        })
                        .collect(),
                );
            }
            CgOutcome::NegativeCurvature(iters) => {
                cg_iterations.push(iters);
                u = fixed_point(&u);
                fallback_steps += 1;
            }
        }
        debug_assert!(u.values.iter().zip(areas).all(|(v, _)| bounds.contains(*v)));
        y_guess = Some(y);
    }
    let best = best.expect("at least one iterate was evaluated");
    Err(Error::OcpNonConvergence { iterations: opts.max_outer, kkt: best.kkt_residual, best: Box::new(best) })
}
