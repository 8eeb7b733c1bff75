//! WebAssembly bindings for the in-browser demo.
//!
//! The exported functions are thin wrappers over [`solve_view`] and
//! [`study_table`], which are plain Rust and tested natively.

use ocfem::io::study_csv;
use ocfem::presets::{preset, PRESET_NAMES};
use ocfem::study::run_study;
use ocfem::{build_unit_square_mesh, solve_ocp, Bounds, Error, FeSpace, Model, OcpOptions, ProblemSpec};
use wasm_bindgen::prelude::*;

/// Finest level offered in the page; level 7 already has 32768 triangles.
pub const MAX_LEVEL: u32 = 7;

/// Flat arrays describing a solved problem, ready for a canvas.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct SolveView {
    vertices: Vec<f64>,
    triangles: Vec<u32>,
    control: Vec<f64>,
    state: Vec<f64>,
    adjoint: Vec<f64>,
    postprocessed: Vec<f64>,
    pub cost: f64,
    pub kkt_residual: f64,
    pub outer_iterations: usize,
    pub lower: f64,
    pub upper: f64,
}

#[wasm_bindgen]
impl SolveView {
    /// `x0, y0, x1, y1, ...`
    #[wasm_bindgen(getter)]
    pub fn vertices(&self) -> Vec<f64> {
        self.vertices.clone()
    }

    /// Three vertex indices per triangle.
    #[wasm_bindgen(getter)]
    pub fn triangles(&self) -> Vec<u32> {
        self.triangles.clone()
    }

    /// One value per triangle.
    #[wasm_bindgen(getter)]
    pub fn control(&self) -> Vec<f64> {
        self.control.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn state(&self) -> Vec<f64> {
        self.state.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn adjoint(&self) -> Vec<f64> {
        self.adjoint.clone()
    }

    /// Post-processed control `Proj(y φ / ν)` at the vertices.
    #[wasm_bindgen(getter)]
    pub fn postprocessed(&self) -> Vec<f64> {
        self.postprocessed.clone()
    }
}

impl SolveView {
    pub fn num_triangles(&self) -> usize {
        self.control.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.state.len()
    }

    pub fn state_values(&self) -> &[f64] {
        &self.state
    }

    pub fn control_values(&self) -> &[f64] {
        &self.control
    }

    pub fn postprocessed_values(&self) -> &[f64] {
        &self.postprocessed
    }
}

fn lookup(name: &str) -> Result<ProblemSpec, Error> {
    preset(name).ok_or_else(|| Error::Invalid(format!("unknown preset `{name}`")))
}

fn check_level(level: u32) -> Result<(), Error> {
    if level > MAX_LEVEL {
        return Err(Error::Invalid(format!("level {level} exceeds the demo limit {MAX_LEVEL}")));
    }
    Ok(())
}

/// Solves `name` on the uniform mesh of the given level with overridden
/// scalars.
pub fn solve_view(name: &str, level: u32, nu: f64, lower: f64, upper: f64) -> Result<SolveView, Error> {
    check_level(level)?;
    let mut spec = lookup(name)?;
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::Invalid(format!("nu must be positive, got {nu}")));
    }
    if !(lower.is_finite() && upper.is_finite() && lower <= upper) {
        return Err(Error::Invalid(format!("bounds must satisfy lower <= upper, got [{lower}, {upper}]")));
    }
    spec.nu = nu;
    spec.bounds = Bounds::new(lower, upper);
    let mesh = build_unit_square_mesh(level)?;
    let space = FeSpace::new(&mesh);
    spec.validate(&space)?;
    let model = Model::new(&spec, space)?;
    let sol = solve_ocp(&model, None, None, &OcpOptions::default())?;
    let postprocessed = sol
        .state
        .values
        .iter()
        .zip(&sol.adjoint.values)
        .map(|(y, p)| spec.bounds.clamp(y * p / spec.nu))
        .collect();
    Ok(SolveView {
        vertices: mesh.vertices().iter().flat_map(|p| [p[0], p[1]]).collect(),
        triangles: mesh.triangles().iter().flat_map(|t| t.map(|v| v as u32)).collect(),
        control: sol.control.values,
        state: sol.state.values,
        adjoint: sol.adjoint.values,
        postprocessed,
        cost: sol.cost,
        kkt_residual: sol.kkt_residual,
        outer_iterations: sol.outer_iterations,
        lower,
        upper,
    })
}

/// Convergence study over `j_min..=j_max` as CSV text.
pub fn study_table(name: &str, j_min: u32, j_max: u32) -> Result<String, Error> {
    check_level(j_max)?;
    let spec = lookup(name)?;
    let records = run_study(&spec, j_min, j_max, &OcpOptions::default()).map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(study_csv(&records))
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn presets() -> Vec<String> {
    PRESET_NAMES.iter().map(|s| s.to_string()).collect()
}

/// Default `(ν, α, β)` of a preset.
#[wasm_bindgen]
pub fn preset_defaults(name: &str) -> Result<Vec<f64>, JsError> {
    let spec = lookup(name).map_err(js)?;
    Ok(vec![spec.nu, spec.bounds.lower, spec.bounds.upper])
}

#[wasm_bindgen]
pub fn solve(name: &str, level: u32, nu: f64, lower: f64, upper: f64) -> Result<SolveView, JsError> {
    solve_view(name, level, nu, lower, upper).map_err(js)
}

#[wasm_bindgen]
pub fn study(name: &str, j_min: u32, j_max: u32) -> Result<String, JsError> {
    study_table(name, j_min, j_max).map_err(js)
}
