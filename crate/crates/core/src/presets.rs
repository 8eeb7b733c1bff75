//! Compiled-in problem definitions.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::optimizer::Bounds;
use crate::pde::{DataTreatment, Derivs, ProblemSpec};

pub const PRESET_NAMES: [&str; 3] = ["paper-sec6", "tikhonov-only", "manufactured-constant"];

pub fn preset(name: &str) -> Option<ProblemSpec> {
    match name {
        "paper-sec6" => Some(bilinear_benchmark()),
        "tikhonov-only" => Some(tikhonov_only()),
        "manufactured-constant" => Some(manufactured_constant()),
        _ => None,
    }
}

/// Target state `−64 x₁(1−x₁) x₂(1−x₂)`.
pub fn benchmark_target(x: [f64; 2]) -> f64 {
    -64.0 * x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1])
}

/// `a(x,y) = y³|y| + 2y − 100 sin(2πx₁) sin(πx₂)`.
pub fn benchmark_reaction(x: [f64; 2], y: f64) -> Derivs {
    let ay = y.abs();
    Derivs {
        value: y * y * y * ay + 2.0 * y - 100.0 * (2.0 * PI * x[0]).sin() * (PI * x[1]).sin(),
        dy: 4.0 * ay * ay * ay + 2.0,
        dyy: 12.0 * y * ay,
    }
}

/// Ω = (0,1)², A = −Δ, g = 0, ν = 0.05, [α, β] = [−1, 1] and tracking
/// `L(x,y) = ½(y − y_d)²`. The source term and `y_d` enter through their
/// nodal interpolants.
pub fn bilinear_benchmark() -> ProblemSpec {
    ProblemSpec {
        name: "paper-sec6".into(),
        diffusion: None,
        reaction: Arc::new(benchmark_reaction),
        reaction_lower_bound: Arc::new(|_| 2.0),
        objective: Arc::new(|x, y| {
            let d = y - benchmark_target(x);
            Derivs { value: 0.5 * d * d, dy: d, dyy: 1.0 }
        }),
        boundary: Arc::new(|_| 0.0),
        nu: 0.05,
        bounds: Bounds::new(-1.0, 1.0),
        data: DataTreatment::NodalInterpolation,
    }
}

/// The benchmark without tracking term; the optimal control is zero.
pub fn tikhonov_only() -> ProblemSpec {
    ProblemSpec {
        name: "tikhonov-only".into(),
        objective: Arc::new(|_, _| Derivs { value: 0.0, dy: 0.0, dyy: 0.0 }),
        ..bilinear_benchmark()
    }
}

/// `a(x,y) = y − 1`, no tracking: the state is `y ≡ 1` for `u ≡ 0`, which is
/// also the optimal control.
pub fn manufactured_constant() -> ProblemSpec {
    ProblemSpec {
        name: "manufactured-constant".into(),
        diffusion: None,
        reaction: Arc::new(|_, y| Derivs { value: y - 1.0, dy: 1.0, dyy: 0.0 }),
        reaction_lower_bound: Arc::new(|_| 1.0),
        objective: Arc::new(|_, _| Derivs { value: 0.0, dy: 0.0, dyy: 0.0 }),
        boundary: Arc::new(|_| 0.0),
        nu: 1.0,
        bounds: Bounds::new(0.0, 1.0),
        data: DataTreatment::Quadrature,
    }
}
