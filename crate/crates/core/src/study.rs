//! Convergence studies over nested mesh families.
//!
//! Errors are differences between consecutive levels, `e_j = ‖q_j − q_{j+1}‖`,
//! evaluated exactly on the finer mesh after prolongation. The post-processed
//! control `ũ_h = Proj((1/ν) y_h φ_h)` is compared by degree-4 quadrature on
//! the finer mesh; its clamp kinks are not resolved by the rule.

use crate::error::{Error, Result};
use crate::fem::{FeSpace, P0Field, P1Field};
use crate::mesh::{Mesh, MeshHierarchy};
use crate::optimizer::{solve_ocp, Bounds, OcpOptions, OcpSolution};
use crate::pde::{Model, ProblemSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRecord {
    pub level: u32,
    pub h: f64,
    pub e_u: f64,
    pub eoc_u: Option<f64>,
    pub e_y: f64,
    pub eoc_y: Option<f64>,
    pub e_phi: f64,
    pub eoc_phi: Option<f64>,
    pub e_upost: f64,
    pub eoc_upost: Option<f64>,
    pub measure_t1: f64,
    pub kkt: f64,
    pub outer_iterations: usize,
}

#[derive(Debug, thiserror::Error)]
#[error("study failed at level {level}: {source}")]
pub struct StudyError {
    pub level: u32,
    pub partial: Vec<StudyRecord>,
    #[source]
    pub source: Error,
}

/// `log₂(e_prev / e_cur)`, undefined unless both errors are positive.
pub fn eoc(e_prev: f64, e_cur: f64) -> Option<f64> {
    (e_prev > 0.0 && e_cur > 0.0 && e_prev.is_finite() && e_cur.is_finite()).then(|| (e_prev / e_cur).log2())
}

/// `Proj_[α,β]((1/ν) y_h φ_h)` evaluated pointwise.
#[derive(Debug, Clone, Copy)]
pub struct PostprocessedControl<'a> {
    pub mesh: &'a Mesh,
    pub state: &'a P1Field,
    pub adjoint: &'a P1Field,
    pub bounds: Bounds,
    pub nu: f64,
}

impl PostprocessedControl<'_> {
    pub fn eval(&self, t: usize, bary: [f64; 3]) -> f64 {
        let y = self.state.eval(self.mesh, t, bary);
        let p = self.adjoint.eval(self.mesh, t, bary);
        self.bounds.clamp(y * p / self.nu)
    }
}

/// `‖ũ_coarse − ũ_fine‖_{L²}` by quadrature on the fine mesh. The coarse
/// fields are prolonged exactly first.
pub fn postprocessed_l2_diff(
    fine: &FeSpace,
    coarse_fields: (&P1Field, &P1Field),
    fine_fields: (&P1Field, &P1Field),
    map: &crate::mesh::ProlongationMap,
    bounds: Bounds,
    nu: f64,
) -> Result<f64> {
    let yc = fine.p1_at_qp(&coarse_fields.0.prolong(map))?;
    let pc = fine.p1_at_qp(&coarse_fields.1.prolong(map))?;
    let yf = fine.p1_at_qp(fine_fields.0)?;
    let pf = fine.p1_at_qp(fine_fields.1)?;
    let sq: Vec<f64> = (0..yc.len())
        .map(|k| {
            let d = bounds.clamp(yc[k] * pc[k] / nu) - bounds.clamp(yf[k] * pf[k] / nu);
            d * d
        })
        .collect();
    Ok(fine.integrate_qp(&sq)?.max(0.0).sqrt())
}

/// Element classification by sampling a control at the vertices and the
/// barycenter of every triangle.
#[derive(Debug, Clone)]
pub struct Classification {
    /// Triangles carrying both active and inactive samples.
    pub mixed: Vec<bool>,
    /// Evaluation point `x_T` in barycentric coordinates: the first active
    /// sample on mixed triangles, the barycenter elsewhere.
    pub sample_point: Vec<[f64; 3]>,
    pub measure_t1: f64,
}

const SAMPLES: [[f64; 3]; 4] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]];

pub fn classify_elements(
    mesh: &Mesh,
    control: impl Fn(usize, [f64; 3]) -> f64,
    bounds: Bounds,
    tol_active: f64,
) -> Classification {
    let nt = mesh.num_triangles();
    let mut mixed = vec![false; nt];
    let mut sample_point = vec![SAMPLES[3]; nt];
    let mut measure_t1 = 0.0;
    for t in 0..nt {
        let mut first_active = None;
        let mut any_inactive = false;
        for s in SAMPLES {
            let v = control(t, s);
            let active = (v - bounds.lower).abs() <= tol_active || (v - bounds.upper).abs() <= tol_active;
            if active {
                first_active.get_or_insert(s);
            } else {
                any_inactive = true;
            }
        }
        if let (Some(xa), true) = (first_active, any_inactive) {
            mixed[t] = true;
            sample_point[t] = xa;
            measure_t1 += mesh.area(t);
        }
    }
    Classification { mixed, sample_point, measure_t1 }
}

/// Elementwise control `w_h|_T = ū(x_T)`.
pub fn build_wh(mesh: &Mesh, control: impl Fn(usize, [f64; 3]) -> f64, classification: &Classification) -> P0Field {
    P0Field::new((0..mesh.num_triangles()).map(|t| control(t, classification.sample_point[t])).collect())
}

/// `‖u_h − w_h‖_{L²(Ω_𝒯₂)}`.
pub fn wh_gap(space: &FeSpace, control: &P0Field, wh: &P0Field, classification: &Classification) -> Result<f64> {
    let diff = P0Field::new(control.values.iter().zip(&wh.values).map(|(a, b)| a - b).collect());
    let regular: Vec<bool> = classification.mixed.iter().map(|m| !m).collect();
    space.l2_norm_p0_on(&diff, &regular)
}

/// Solutions on every level of a nested family, with continuation.
pub struct LevelSolutions {
    pub hierarchy: MeshHierarchy,
    pub solutions: Vec<OcpSolution>,
    pub first_level: u32,
}

impl LevelSolutions {
    /// Post-processed control of the finest level, evaluated at a point of
    /// triangle `t` on hierarchy level `index`.
    pub fn reference_control(&self, spec: &ProblemSpec, index: usize, t: usize, bary: [f64; 3]) -> f64 {
        let last = self.hierarchy.meshes.len() - 1;
        let p = self.hierarchy.meshes[index].point_at(t, bary);
        let (ft, fb) = self.hierarchy.locate_descendant(index, t, p, last);
        let fine = &self.solutions[last];
        PostprocessedControl {
            mesh: self.hierarchy.finest(),
            state: &fine.state,
            adjoint: &fine.adjoint,
            bounds: spec.bounds,
            nu: spec.nu,
        }
        .eval(ft, fb)
    }
}

/// Solves on levels `j_min..=j_max`, each initialized with the prolonged
/// solution of the previous level.
pub fn solve_levels(spec: &ProblemSpec, j_min: u32, j_max: u32, opts: &OcpOptions) -> Result<LevelSolutions, StudyError> {
    let fail = |level, source| StudyError { level, partial: Vec::new(), source };
    if j_min >= j_max {
        return Err(fail(j_min, Error::Invalid(format!("need j_min < j_max, got {j_min}..{j_max}"))));
    }
    let hierarchy = MeshHierarchy::unit_square(j_min, j_max).map_err(|e| fail(j_min, e))?;
    let mut solutions: Vec<OcpSolution> = Vec::with_capacity(hierarchy.meshes.len());
    for (i, mesh) in hierarchy.meshes.iter().enumerate() {
        let level = j_min + i as u32;
        let space = FeSpace::new(mesh);
        if i == 0 {
            spec.validate(&space).map_err(|e| fail(level, e))?;
        }
        let model = Model::new(spec, space).map_err(|e| fail(level, e))?;
        let (u0, y0) = match solutions.last() {
            Some(prev) => (Some(prev.control.prolong(&hierarchy.maps[i - 1])), Some(prev.state.prolong(&hierarchy.maps[i - 1]))),
            None => (None, None),
        };
        match solve_ocp(&model, u0.as_ref(), y0.as_ref(), opts) {
            Ok(sol) => solutions.push(sol),
            Err(e) => {
                let partial = LevelSolutions { hierarchy: hierarchy.clone(), solutions, first_level: j_min };
                let partial = records_from(spec, &partial).unwrap_or_default();
                return Err(StudyError { level, partial, source: e });
            }
        }
    }
    Ok(LevelSolutions { hierarchy, solutions, first_level: j_min })
}

struct RowErrors {
    e_u: f64,
    e_y: f64,
    e_phi: f64,
    e_upost: f64,
    measure_t1: f64,
}

fn row_errors(spec: &ProblemSpec, levels: &LevelSolutions, i: usize) -> Result<RowErrors> {
    let last = levels.hierarchy.meshes.len() - 1;
    let coarse_mesh = &levels.hierarchy.meshes[i];
    let map = &levels.hierarchy.maps[i];
    let fine = FeSpace::new(&levels.hierarchy.meshes[i + 1]);
    let (c, f) = (&levels.solutions[i], &levels.solutions[i + 1]);
    let measure_t1 = if last == levels.solutions.len() - 1 {
        let class = classify_elements(
            coarse_mesh,
            |t, b| levels.reference_control(spec, i, t, b),
            spec.bounds,
            spec.bounds.active_tolerance(),
        );
        class.measure_t1
    } else {
        f64::NAN
    };
    Ok(RowErrors {
        e_u: fine.l2_diff_p0(&c.control.prolong(map), &f.control)?,
        e_y: fine.l2_diff_p1(&c.state.prolong(map), &f.state)?,
        e_phi: fine.l2_diff_p1(&c.adjoint.prolong(map), &f.adjoint)?,
        e_upost: postprocessed_l2_diff(&fine, (&c.state, &c.adjoint), (&f.state, &f.adjoint), map, spec.bounds, spec.nu)?,
        measure_t1,
    })
}

type RowSlot = Option<Result<RowErrors>>;

/// Study rows for every pair of consecutive solved levels.
pub fn records_from(spec: &ProblemSpec, levels: &LevelSolutions) -> Result<Vec<StudyRecord>> {
    records_from_threaded(spec, levels, 1)
}

/// As [`records_from`], evaluating the rows on up to `threads` workers. The
/// result does not depend on the thread count.
pub fn records_from_threaded(spec: &ProblemSpec, levels: &LevelSolutions, threads: usize) -> Result<Vec<StudyRecord>> {
    let rows = levels.solutions.len().saturating_sub(1);
    let threads = threads.clamp(1, rows.max(1));
    let mut errors: Vec<RowSlot> = (0..rows).map(|_| None).collect();
    if threads == 1 {
        for (i, slot) in errors.iter_mut().enumerate() {
            *slot = Some(row_errors(spec, levels, i));
        }
    } else {
        std::thread::scope(|scope| {
            let mut slots: Vec<Vec<(usize, &mut RowSlot)>> = (0..threads).map(|_| Vec::new()).collect();
            for (i, slot) in errors.iter_mut().enumerate() {
                slots[i % threads].push((i, slot));
            }
            for work in slots {
                scope.spawn(move || {
                    for (i, slot) in work {
                        *slot = Some(row_errors(spec, levels, i));
                    }
                });
            }
        });
    }

    let mut records: Vec<StudyRecord> = Vec::with_capacity(rows);
    for (i, row) in errors.into_iter().enumerate() {
        let r = row.expect("every row is evaluated")?;
        let c = &levels.solutions[i];
        let prev = records.last();
        records.push(StudyRecord {
            level: levels.first_level + i as u32,
            h: levels.hierarchy.meshes[i].h(),
            e_u: r.e_u,
            eoc_u: prev.and_then(|p| eoc(p.e_u, r.e_u)),
            e_y: r.e_y,
            eoc_y: prev.and_then(|p| eoc(p.e_y, r.e_y)),
            e_phi: r.e_phi,
            eoc_phi: prev.and_then(|p| eoc(p.e_phi, r.e_phi)),
            e_upost: r.e_upost,
            eoc_upost: prev.and_then(|p| eoc(p.e_upost, r.e_upost)),
            measure_t1: r.measure_t1,
            kkt: c.kkt_residual,
            outer_iterations: c.outer_iterations,
        });
    }
    Ok(records)
}

/// Full study: one record per level `j_min..j_max − 1`.
pub fn run_study(spec: &ProblemSpec, j_min: u32, j_max: u32, opts: &OcpOptions) -> Result<Vec<StudyRecord>, StudyError> {
    run_study_threaded(spec, j_min, j_max, opts, 1)
}

pub fn run_study_threaded(
    spec: &ProblemSpec,
    j_min: u32,
    j_max: u32,
    opts: &OcpOptions,
    threads: usize,
) -> Result<Vec<StudyRecord>, StudyError> {
    let levels = solve_levels(spec, j_min, j_max, opts)?;
    records_from_threaded(spec, &levels, threads).map_err(|source| StudyError { level: j_max, partial: Vec::new(), source })
}
