//! Discrete state equation and the linear problems behind the derivatives of
//! the reduced cost.
//!
//! The state solves `𝔞(y,ζ) + ∫(a(x,y) + u y)ζ = ∫_Γ g ζ` for all P1 test
//! functions. Its Jacobian `K + M[∂a/∂y(x,y) + u]` is symmetric, so the same
//! factorization serves the adjoint, the linearized state and the
//! second-order adjoint.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{DiffusionFn, FeSpace, P0Field, P1Field};
use crate::linalg::{norm2, solve_refined, LdlFactor, SparseSymOperator};
use crate::mesh::Point;
use crate::optimizer::Bounds;

/// Value and first two y-derivatives of a function `f(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivs {
    pub value: f64,
    pub dy: f64,
    pub dyy: f64,
}

pub type PointFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type CurveFn = Arc<dyn Fn(Point, f64) -> Derivs + Send + Sync>;

/// How the state-independent parts `a(x, 0)` and `∂L/∂y(x, 0)` enter the
/// discrete equations.
///
/// `Quadrature` integrates them with the volume rule like every other term.
/// `NodalInterpolation` replaces them by their P1 interpolants, integrated
/// exactly against the test functions; the state-dependent remainders are
/// still evaluated at the quadrature points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DataTreatment {
    #[default]
    Quadrature,
    NodalInterpolation,
}

/// All data of the control problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    /// `None` is the identity tensor.
    pub diffusion: Option<Arc<DiffusionFn>>,
    /// Nonlinearity `a(x, y)` of the state equation.
    pub reaction: CurveFn,
    /// Pointwise lower bound `a₀(x) ≤ ∂a/∂y(x, y)`.
    pub reaction_lower_bound: PointFn,
    /// Integrand `L(x, y)` of the tracking part of the cost.
    pub objective: CurveFn,
    /// Conormal boundary data `g`.
    pub boundary: PointFn,
    pub nu: f64,
    pub bounds: Bounds,
    pub data: DataTreatment,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("nu", &self.nu)
            .field("bounds", &self.bounds)
            .field("data", &self.data)
            .finish_non_exhaustive()
    }
}

const MONOTONICITY_SAMPLES: [f64; 9] = [-10.0, -2.0, -1.0, -0.1, 0.0, 0.1, 1.0, 2.0, 10.0];

impl ProblemSpec {
    /// Checks `ν > 0`, `α < β`, `a₀ + α ≥ 0` (not identically zero) at the
    /// quadrature points of `space`, and `∂a/∂y ≥ a₀` at sampled states.
    pub fn validate(&self, space: &FeSpace) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(Error::Inadmissible(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.bounds.lower < self.bounds.upper) || self.bounds.lower.is_nan() {
            return Err(Error::Inadmissible(format!(
                "bounds must satisfy alpha < beta, got [{}, {}]",
                self.bounds.lower, self.bounds.upper
            )));
        }
        let mut positive = false;
        for &x in space.quadrature_points() {
            let s = (self.reaction_lower_bound)(x) + self.bounds.lower;
            if s < 0.0 {
                return Err(Error::Inadmissible(format!(
                    "a0(x) + alpha = {s:e} < 0 at ({}, {})",
                    x[0], x[1]
                )));
            }
            positive |= s > 0.0;
        }
        if !positive {
            return Err(Error::Inadmissible("a0 + alpha vanishes identically".into()));
        }
        for (t, x) in space.mesh().barycenters().into_iter().enumerate() {
            let a0 = (self.reaction_lower_bound)(x);
            for y in MONOTONICITY_SAMPLES {
                let dy = (self.reaction)(x, y).dy;
                if dy < a0 - 1e-12 * (1.0 + a0.abs()) {
                    return Err(Error::Inadmissible(format!(
                        "da/dy = {dy} is below a0 = {a0} on triangle {t} at y = {y}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Residual tolerance relative to `1 + ‖load‖₂`.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Relative residual required from each linear solve.
    pub linear_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-11, max_iter: 50, max_halvings: 30, linear_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
    pub damping_events: usize,
    pub converged: bool,
}

/// A problem discretized on one mesh: the space plus the operators and loads
/// that do not depend on the control.
pub struct Model<'a> {
    pub spec: &'a ProblemSpec,
    pub space: FeSpace<'a>,
    stiffness: SparseSymOperator,
    boundary_load: Vec<f64>,
    reaction_load: Vec<f64>,
    objective_load: Vec<f64>,
    load_scale: f64,
}

/// Load vector of the state-independent part `f(x, 0)` under the chosen
/// data treatment.
fn data_load(space: &FeSpace, data: DataTreatment, f: impl Fn(Point) -> f64) -> Result<Vec<f64>> {
    match data {
        DataTreatment::Quadrature => {
            let values: Vec<f64> = space.quadrature_points().iter().map(|&x| f(x)).collect();
            space.load_qp(&values)
        }
        DataTreatment::NodalInterpolation => {
            let nodal = P1Field::interpolate(space.mesh(), f);
            space.assemble_mass(|_| 1.0).matvec(&nodal.values)
        }
    }
}

impl<'a> Model<'a> {
    pub fn new(spec: &'a ProblemSpec, space: FeSpace<'a>) -> Result<Self> {
        let stiffness = space.assemble_stiffness(spec.diffusion.as_deref())?;
        let boundary_load = space.assemble_boundary_load(|x| (spec.boundary)(x));
        let reaction_load = data_load(&space, spec.data, |x| (spec.reaction)(x, 0.0).value)?;
        let objective_load = data_load(&space, spec.data, |x| (spec.objective)(x, 0.0).dy)?;
        let load: Vec<f64> = boundary_load.iter().zip(&reaction_load).map(|(g, a)| g - a).collect();
        let load_scale = 1.0 + norm2(&load);
        Ok(Self { spec, space, stiffness, boundary_load, reaction_load, objective_load, load_scale })
    }

    pub fn stiffness(&self) -> &SparseSymOperator {
        &self.stiffness
    }

    /// Load vector of `∂L/∂y(x, 0)`; the adjoint right-hand side and the
    /// tracking cost are corrected by it.
    pub fn objective_load(&self) -> &[f64] {
        &self.objective_load
    }

    /// `1 + ‖load‖₂`, the scale for residual tolerances.
    pub fn load_scale(&self) -> f64 {
        self.load_scale
    }

    /// Checks `a₀ + u ≥ 0` at the quadrature points and `a₀ + u ≢ 0`.
    pub fn check_admissible(&self, u: &P0Field) -> Result<()> {
        let mesh = self.space.mesh();
        if u.values.len() != mesh.num_triangles() {
            return Err(Error::DimensionMismatch { expected: mesh.num_triangles(), found: u.values.len() });
        }
        let nq = self.space.quadrature().len();
        let mut positive = false;
        for (k, &x) in self.space.quadrature_points().iter().enumerate() {
            let s = (self.spec.reaction_lower_bound)(x) + u.values[k / nq];
            if s < 0.0 || s.is_nan() {
                return Err(Error::Inadmissible(format!("a0 + u = {s:e} < 0 on triangle {}", k / nq)));
            }
            positive |= s > 0.0;
        }
        if !positive {
            return Err(Error::Inadmissible("a0 + u vanishes identically".into()));
        }
        Ok(())
    }

    /// Discrete residual `F(y)_i = 𝔞(y,ζ_i) + ∫(a(x,y) + u y)ζ_i − ∫_Γ g ζ_i`.
    pub fn state_residual(&self, u: &P0Field, y: &P1Field) -> Result<Vec<f64>> {
        let y_qp = self.space.p1_at_qp(y)?;
        let a: Vec<f64> = self
            .space
            .quadrature_points()
            .iter()
            .zip(&y_qp)
            .map(|(&x, &yq)| (self.spec.reaction)(x, yq).value - (self.spec.reaction)(x, 0.0).value)
            .collect();
        let mut r = self.stiffness.matvec_compensated(&y.values)?;
        let nonlinear = self.space.load_qp(&a)?;
        let bilinear = self.space.p0_weighted_action(u, y)?;
        for i in 0..r.len() {
            r[i] += nonlinear[i] + self.reaction_load[i] + bilinear[i] - self.boundary_load[i];
        }
        Ok(r)
    }

    /// Operator `K + M[∂a/∂y(x, y) + u]`.
    pub fn jacobian(&self, u: &P0Field, y: &P1Field) -> Result<SparseSymOperator> {
        let nq = self.space.quadrature().len();
        let y_qp = self.space.p1_at_qp(y)?;
        let w: Vec<f64> = self
            .space
            .quadrature_points()
            .iter()
            .zip(&y_qp)
            .enumerate()
            .map(|(k, (&x, &yq))| (self.spec.reaction)(x, yq).dy + u.values[k / nq])
            .collect();
        let mass = self.space.assemble_mass_qp(&w)?;
        self.stiffness.add_scaled(1.0, &mass)
    }

    /// Damped Newton for the discrete state equation.
    pub fn solve_state(&self, u: &P0Field, init: Option<&P1Field>, opts: &NewtonOptions) -> Result<(P1Field, SolveReport)> {
        self.check_admissible(u)?;
        let mut y = match init {
            Some(f) if f.values.len() == self.space.num_dofs() => f.clone(),
            Some(f) => return Err(Error::DimensionMismatch { expected: self.space.num_dofs(), found: f.values.len() }),
            None => P1Field::zeros(self.space.mesh()),
        };
        let target = opts.tol * self.load_scale;
        let mut r = self.state_residual(u, &y)?;
        let mut rn = norm2(&r);
        let mut report = SolveReport { iterations: 0, residual: rn, damping_events: 0, converged: false };
        let mut last = None;
        while rn > target {
            if report.iterations == opts.max_iter {
                return Err(Error::NewtonNonConvergence { iterations: report.iterations, residual: rn });
            }
            report.iterations += 1;
            let jac = self.jacobian(u, &y)?;
            let factor = jac.factor()?;
            let neg: Vec<f64> = r.iter().map(|v| -v).collect();
            let step = solve_refined(&jac, &factor, &neg, opts.linear_tol)?;
            last = Some((jac, factor));
            let mut t = 1.0;
            let mut halvings = 0;
            loop {
                let trial = P1Field::new(y.values.iter().zip(&step).map(|(a, d)| a + t * d).collect());
                let r_trial = self.state_residual(u, &trial)?;
                let rn_trial = norm2(&r_trial);
                if rn_trial < rn || rn_trial <= target {
                    y = trial;
                    r = r_trial;
                    rn = rn_trial;
                    break;
                }
                if halvings == opts.max_halvings {
                    return Err(Error::NewtonNonConvergence { iterations: report.iterations, residual: rn });
                }
                halvings += 1;
                report.damping_events += 1;
                t *= 0.5;
            }
            report.residual = rn;
        }
        // The assembled Jacobian carries rounding of order eps·‖K‖ in every
        // entry; a few simplified steps against the accurately evaluated
        // residual remove that floor from the iterate.
        if let Some((jac, factor)) = last {
            for _ in 0..3 {
                let neg: Vec<f64> = r.iter().map(|v| -v).collect();
                let Ok(step) = solve_refined(&jac, &factor, &neg, opts.linear_tol) else { break };
                let scale = y.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let size = step.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                if size <= 4.0 * f64::EPSILON * scale {
                    break;
                }
                let trial = P1Field::new(y.values.iter().zip(&step).map(|(a, d)| a + d).collect());
                let r_trial = self.state_residual(u, &trial)?;
                let rn_trial = norm2(&r_trial);
                if rn_trial > rn {
                    break;
                }
                y = trial;
                r = r_trial;
                rn = rn_trial;
            }
        }
        report.converged = true;
        report.residual = rn;
        Ok((y, report))
    }

    /// Factorizes the linearization at `(u, y)` and solves for the adjoint.
    pub fn linearize(&self, u: &P0Field, y: &P1Field, linear_tol: f64) -> Result<Linearization<'_, 'a>> {
        Linearization::new(self, u, y, linear_tol)
    }
}

/// Derivative machinery at a fixed control and its state.
pub struct Linearization<'m, 'a> {
    model: &'m Model<'a>,
    pub control: P0Field,
    pub state: P1Field,
    pub adjoint: P1Field,
    operator: SparseSymOperator,
    factor: LdlFactor,
    linear_tol: f64,
    /// `∂²L/∂y² − φ ∂²a/∂y²` at quadrature points.
    curvature_qp: Vec<f64>,
}

impl<'m, 'a> Linearization<'m, 'a> {
    fn new(model: &'m Model<'a>, u: &P0Field, y: &P1Field, linear_tol: f64) -> Result<Self> {
        let space = &model.space;
        let operator = model.jacobian(u, y)?;
        let factor = operator.factor()?;
        let y_qp = space.p1_at_qp(y)?;
        let mut l_y = Vec::with_capacity(y_qp.len());
        let mut l_yy = Vec::with_capacity(y_qp.len());
        let mut a_yy = Vec::with_capacity(y_qp.len());
        for (&x, &yq) in space.quadrature_points().iter().zip(&y_qp) {
            let l = (model.spec.objective)(x, yq);
            l_y.push(l.dy - (model.spec.objective)(x, 0.0).dy);
            l_yy.push(l.dyy);
            a_yy.push((model.spec.reaction)(x, yq).dyy);
        }
        let mut rhs = space.load_qp(&l_y)?;
        for (r, d) in rhs.iter_mut().zip(model.objective_load()) {
            *r += d;
        }
        let adjoint = P1Field::new(solve_refined(&operator, &factor, &rhs, linear_tol)?);
        let phi_qp = space.p1_at_qp(&adjoint)?;
        let curvature_qp = l_yy.iter().zip(&a_yy).zip(&phi_qp).map(|((l, a), p)| l - p * a).collect();
        Ok(Self {
            model,
            control: u.clone(),
            state: y.clone(),
            adjoint,
            operator,
            factor,
            linear_tol,
            curvature_qp,
        })
    }

    pub fn model(&self) -> &'m Model<'a> {
        self.model
    }

    pub fn space(&self) -> &'m FeSpace<'a> {
        &self.model.space
    }

    pub fn operator(&self) -> &SparseSymOperator {
        &self.operator
    }

    fn solve(&self, rhs: &[f64]) -> Result<P1Field> {
        Ok(P1Field::new(solve_refined(&self.operator, &self.factor, rhs, self.linear_tol)?))
    }

    /// `z = G'(u)v`: `𝔞(z,ζ) + ∫(∂a/∂y + u) z ζ = −∫ y v ζ`.
    pub fn linearized(&self, v: &P0Field) -> Result<P1Field> {
        let rhs: Vec<f64> = self.space().p0_weighted_action(v, &self.state)?.into_iter().map(|x| -x).collect();
        self.solve(&rhs)
    }

    /// Second-order adjoint with right-hand side
    /// `∫([∂²L/∂y² − φ ∂²a/∂y²] z − v φ) ζ`.
    pub fn eta(&self, z: &P1Field, v: &P0Field) -> Result<P1Field> {
        let space = self.space();
        let z_qp = space.p1_at_qp(z)?;
        let w: Vec<f64> = self.curvature_qp.iter().zip(&z_qp).map(|(c, zq)| c * zq).collect();
        let mut rhs = space.load_qp(&w)?;
        let vphi = space.p0_weighted_action(v, &self.adjoint)?;
        for (r, s) in rhs.iter_mut().zip(&vphi) {
            *r -= s;
        }
        self.solve(&rhs)
    }

    /// `∫ [∂²L/∂y² − φ ∂²a/∂y²] z₁ z₂` by quadrature.
    pub fn curvature_form(&self, z1: &P1Field, z2: &P1Field) -> Result<f64> {
        let space = self.space();
        let a = space.p1_at_qp(z1)?;
        let b = space.p1_at_qp(z2)?;
        let w: Vec<f64> = self.curvature_qp.iter().zip(a.iter().zip(&b)).map(|(c, (p, q))| c * p * q).collect();
        space.integrate_qp(&w)
    }
}

/// Solves the state equation for control `u`.
pub fn solve_state(
    spec: &ProblemSpec,
    space: FeSpace<'_>,
    u: &P0Field,
    init: Option<&P1Field>,
) -> Result<(P1Field, SolveReport)> {
    Model::new(spec, space)?.solve_state(u, init, &NewtonOptions::default())
}

/// Adjoint state for control `u` with state `y`.
pub fn solve_adjoint(model: &Model, u: &P0Field, y: &P1Field) -> Result<P1Field> {
    Ok(model.linearize(u, y, NewtonOptions::default().linear_tol)?.adjoint)
}

/// Derivative of the control-to-state map in direction `v`.
pub fn solve_linearized(model: &Model, u: &P0Field, y: &P1Field, v: &P0Field) -> Result<P1Field> {
    model.linearize(u, y, NewtonOptions::default().linear_tol)?.linearized(v)
}

/// Second-order adjoint for direction `v` given `z = G'(u)v`.
pub fn solve_eta(model: &Model, u: &P0Field, y: &P1Field, z: &P1Field, v: &P0Field) -> Result<P1Field> {
    model.linearize(u, y, NewtonOptions::default().linear_tol)?.eta(z, v)
}
