//! P1 states and P0 controls on triangulations: quadrature, assembly of the
//! Galerkin forms, the elementwise L² projection and error norms.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{Pattern, SparseSymOperator};
use crate::mesh::{Mesh, Point, ProlongationMap};

/// Symmetric diffusion tensor as a function of position.
pub type DiffusionFn = dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync;

/// Quadrature on the reference triangle in barycentric coordinates. Weights
/// are normalized to sum to one, so a rule is applied as `|T|·Σ wᵢ f(xᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: u32,
}

impl QuadratureRule {
    /// Symmetric six-point rule, exact for polynomials of degree four.
    pub fn degree4() -> Self {
        const A1: f64 = 0.445_948_490_915_964_886_32;
        const B1: f64 = 0.108_103_018_168_070_227_36;
        const W1: f64 = 0.223_381_589_678_011_465_70;
        const A2: f64 = 0.091_576_213_509_770_743_46;
        const B2: f64 = 0.816_847_572_980_458_513_08;
        const W2: f64 = 0.109_951_743_655_321_867_64;
        Self {
            points: vec![[A1, A1, B1], [A1, B1, A1], [B1, A1, A1], [A2, A2, B2], [A2, B2, A2], [B2, A2, A2]],
            weights: vec![W1, W1, W1, W2, W2, W2],
            degree: 4,
        }
    }

    pub fn centroid() -> Self {
        Self { points: vec![[1.0 / 3.0; 3]], weights: vec![1.0], degree: 1 }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Three-point Gauss–Legendre rule on [0, 1] (exact to degree five), as
/// (parameter, weight) pairs with weights summing to one.
pub fn edge_gauss3() -> [(f64, f64); 3] {
    let s = 0.5 * (0.6f64).sqrt();
    [(0.5 - s, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + s, 5.0 / 18.0)]
}

/// Continuous piecewise-linear field: one value per mesh vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct P1Field {
    pub values: Vec<f64>,
}

/// Piecewise-constant field: one value per triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct P0Field {
    pub values: Vec<f64>,
}

impl P1Field {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        Self { values: vec![0.0; mesh.num_vertices()] }
    }

    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        Self { values: vec![c; mesh.num_vertices()] }
    }

    pub fn interpolate(mesh: &Mesh, f: impl Fn(Point) -> f64) -> Self {
        Self { values: mesh.vertices().iter().map(|&p| f(p)).collect() }
    }

    /// Value inside triangle `t` at barycentric coordinates `bary`.
    pub fn eval(&self, mesh: &Mesh, t: usize, bary: [f64; 3]) -> f64 {
        let [a, b, c] = mesh.triangles()[t];
        bary[0] * self.values[a] + bary[1] * self.values[b] + bary[2] * self.values[c]
    }

    pub fn prolong(&self, map: &ProlongationMap) -> Self {
        Self { values: map.prolong_nodal(&self.values) }
    }

    fn check(&self, mesh: &Mesh) -> Result<()> {
        check_len(mesh.num_vertices(), self.values.len())
    }
}

impl P0Field {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        Self { values: vec![0.0; mesh.num_triangles()] }
    }

    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        Self { values: vec![c; mesh.num_triangles()] }
    }

    pub fn prolong(&self, map: &ProlongationMap) -> Self {
        Self { values: map.prolong_elementwise(&self.values) }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn check(&self, mesh: &Mesh) -> Result<()> {
        check_len(mesh.num_triangles(), self.values.len())
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Precomputed geometry and sparsity for P1/P0 computations on one mesh.
pub struct FeSpace<'m> {
    mesh: &'m Mesh,
    areas: Vec<f64>,
    grads: Vec<[[f64; 2]; 3]>,
    pattern: Arc<Pattern>,
    scatter: Vec<[usize; 9]>,
    quad: QuadratureRule,
    qpoints: Vec<Point>,
}

impl<'m> FeSpace<'m> {
    pub fn new(mesh: &'m Mesh) -> Self {
        Self::with_quadrature(mesh, QuadratureRule::degree4())
    }

    pub fn with_quadrature(mesh: &'m Mesh, quad: QuadratureRule) -> Self {
        let nt = mesh.num_triangles();
        let mut areas = Vec::with_capacity(nt);
        let mut grads = Vec::with_capacity(nt);
        let mut qpoints = Vec::with_capacity(nt * quad.len());
        for t in 0..nt {
            let [a, b, c] = mesh.triangle_points(t);
            let area = mesh.area(t);
            let inv = 1.0 / (2.0 * area);
            // ∇λ_i = rot(opposite edge) / (2|T|)
            grads.push([
                [(b[1] - c[1]) * inv, (c[0] - b[0]) * inv],
                [(c[1] - a[1]) * inv, (a[0] - c[0]) * inv],
                [(a[1] - b[1]) * inv, (b[0] - a[0]) * inv],
            ]);
            areas.push(area);
            for bary in &quad.points {
                qpoints.push(mesh.point_at(t, *bary));
            }
        }
        let pairs = mesh.triangles().iter().flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)]);
        let pattern = Arc::new(Pattern::from_pairs(mesh.num_vertices(), pairs));
        let scatter = mesh
            .triangles()
            .iter()
            .map(|tri| {
                let mut s = [0; 9];
                for i in 0..3 {
                    for j in 0..3 {
                        s[3 * i + j] = pattern.position(tri[i], tri[j]).expect("pattern covers element");
                    }
                }
                s
            })
            .collect();
        Self { mesh, areas, grads, pattern, scatter, quad, qpoints }
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    /// Physical quadrature points, `quadrature().len()` per triangle.
    pub fn quadrature_points(&self) -> &[Point] {
        &self.qpoints
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn num_dofs(&self) -> usize {
        self.mesh.num_vertices()
    }

    fn scatter_local(&self, op: &mut SparseSymOperator, t: usize, local: &[[f64; 3]; 3]) {
        let vals = op.values_mut();
        for i in 0..3 {
            for j in 0..3 {
                vals[self.scatter[t][3 * i + j]] += local[i][j];
            }
        }
    }

    /// Element stiffness matrix for a constant diffusion tensor.
    pub fn local_stiffness(&self, t: usize, k: [[f64; 2]; 2]) -> [[f64; 3]; 3] {
        let g = &self.grads[t];
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            let kg = [k[0][0] * g[i][0] + k[0][1] * g[i][1], k[1][0] * g[i][0] + k[1][1] * g[i][1]];
            for j in 0..3 {
                m[i][j] = self.areas[t] * (kg[0] * g[j][0] + kg[1] * g[j][1]);
            }
        }
        m
    }

    /// Stiffness operator of `Σ ∫ a_ij ∂_i y ∂_j ζ`; `None` means the identity
    /// tensor (the Laplacian).
    pub fn assemble_stiffness(&self, diffusion: Option<&DiffusionFn>) -> Result<SparseSymOperator> {
        let mut op = SparseSymOperator::zeros(self.pattern.clone());
        let nq = self.quad.len();
        for t in 0..self.mesh.num_triangles() {
            let k = match diffusion {
                None => [[1.0, 0.0], [0.0, 1.0]],
                Some(f) => {
                    let mut k = [[0.0; 2]; 2];
                    for (q, w) in self.quad.weights.iter().enumerate() {
                        let a = f(self.qpoints[t * nq + q]);
                        validate_diffusion(&a)?;
                        for r in 0..2 {
                            for c in 0..2 {
                                k[r][c] += w * a[r][c];
                            }
                        }
                    }
                    k
                }
            };
            let local = self.local_stiffness(t, k);
            self.scatter_local(&mut op, t, &local);
        }
        Ok(op)
    }

    /// Mass operator `∫ w y ζ` with the weight given at quadrature points.
    pub fn assemble_mass_qp(&self, weights: &[f64]) -> Result<SparseSymOperator> {
        let nq = self.quad.len();
        check_len(self.mesh.num_triangles() * nq, weights.len())?;
        let mut op = SparseSymOperator::zeros(self.pattern.clone());
        for t in 0..self.mesh.num_triangles() {
            let mut local = [[0.0; 3]; 3];
            for (q, (lam, w)) in self.quad.points.iter().zip(&self.quad.weights).enumerate() {
                let s = self.areas[t] * w * weights[t * nq + q];
                for i in 0..3 {
                    for j in 0..3 {
                        local[i][j] += s * lam[i] * lam[j];
                    }
                }
            }
            self.scatter_local(&mut op, t, &local);
        }
        Ok(op)
    }

    pub fn assemble_mass(&self, weight: impl Fn(Point) -> f64) -> SparseSymOperator {
        let w: Vec<f64> = self.qpoints.iter().map(|&p| weight(p)).collect();
        self.assemble_mass_qp(&w).expect("length matches by construction")
    }

    /// Mass operator weighted by an elementwise constant, integrated exactly.
    pub fn assemble_mass_p0(&self, weight: &P0Field) -> Result<SparseSymOperator> {
        weight.check(self.mesh)?;
        let mut op = SparseSymOperator::zeros(self.pattern.clone());
        for t in 0..self.mesh.num_triangles() {
            let s = weight.values[t] * self.areas[t] / 12.0;
            let mut local = [[s; 3]; 3];
            for (i, row) in local.iter_mut().enumerate() {
                row[i] = 2.0 * s;
            }
            self.scatter_local(&mut op, t, &local);
        }
        Ok(op)
    }

    /// Load vector `∫ f ζ_i` from values of `f` at quadrature points.
    pub fn load_qp(&self, values: &[f64]) -> Result<Vec<f64>> {
        let nq = self.quad.len();
        check_len(self.mesh.num_triangles() * nq, values.len())?;
        let mut b = vec![0.0; self.num_dofs()];
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            for (q, (lam, w)) in self.quad.points.iter().zip(&self.quad.weights).enumerate() {
                let s = self.areas[t] * w * values[t * nq + q];
                for i in 0..3 {
                    b[tri[i]] += s * lam[i];
                }
            }
        }
        Ok(b)
    }

    pub fn assemble_volume_load(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        let v: Vec<f64> = self.qpoints.iter().map(|&p| f(p)).collect();
        self.load_qp(&v).expect("length matches by construction")
    }

    /// Boundary load `∫_Γ g ζ_i`, three Gauss points per boundary edge.
    pub fn assemble_boundary_load(&self, g: impl Fn(Point) -> f64) -> Vec<f64> {
        let mut b = vec![0.0; self.num_dofs()];
        let verts = self.mesh.vertices();
        for e in self.mesh.boundary_edges() {
            let [i, j] = e.vertices;
            let (p, q) = (verts[i], verts[j]);
            let len = (q[0] - p[0]).hypot(q[1] - p[1]);
            for (s, w) in edge_gauss3() {
                let x = [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])];
                let gv = len * w * g(x);
                b[i] += gv * (1.0 - s);
                b[j] += gv * s;
            }
        }
        b
    }

    /// Values of a P1 field at all quadrature points.
    pub fn p1_at_qp(&self, field: &P1Field) -> Result<Vec<f64>> {
        field.check(self.mesh)?;
        let mut out = Vec::with_capacity(self.qpoints.len());
        for tri in self.mesh.triangles() {
            let v = tri.map(|i| field.values[i]);
            for lam in &self.quad.points {
                out.push(lam[0] * v[0] + lam[1] * v[1] + lam[2] * v[2]);
            }
        }
        Ok(out)
    }

    /// Per-element quadrature sums `|T| Σ w_q f_q`.
    pub fn integrate_qp_elementwise(&self, values: &[f64]) -> Result<Vec<f64>> {
        let nq = self.quad.len();
        check_len(self.mesh.num_triangles() * nq, values.len())?;
        Ok((0..self.mesh.num_triangles())
            .map(|t| self.areas[t] * self.quad.weights.iter().zip(&values[t * nq..(t + 1) * nq]).map(|(w, f)| w * f).sum::<f64>())
            .collect())
    }

    pub fn integrate_qp(&self, values: &[f64]) -> Result<f64> {
        Ok(self.integrate_qp_elementwise(values)?.iter().sum())
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        let v: Vec<f64> = self.qpoints.iter().map(|&p| f(p)).collect();
        self.integrate_qp(&v).expect("length matches by construction")
    }

    /// Exact `∫_T a b` for two P1 fields, per triangle.
    pub fn product_integrals(&self, a: &P1Field, b: &P1Field) -> Result<Vec<f64>> {
        a.check(self.mesh)?;
        b.check(self.mesh)?;
        Ok(self
            .mesh
            .triangles()
            .iter()
            .zip(&self.areas)
            .map(|(tri, area)| {
                let (x, y) = (tri.map(|i| a.values[i]), tri.map(|i| b.values[i]));
                let diag: f64 = (0..3).map(|i| x[i] * y[i]).sum();
                area / 12.0 * (diag + x.iter().sum::<f64>() * y.iter().sum::<f64>())
            })
            .collect())
    }

    /// Vector `∫ v y ζ_i` for elementwise-constant `v`, computed exactly.
    pub fn p0_weighted_action(&self, v: &P0Field, y: &P1Field) -> Result<Vec<f64>> {
        v.check(self.mesh)?;
        y.check(self.mesh)?;
        let mut out = vec![0.0; self.num_dofs()];
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let vals = tri.map(|i| y.values[i]);
            let sum: f64 = vals.iter().sum();
            let s = v.values[t] * self.areas[t] / 12.0;
            for i in 0..3 {
                out[tri[i]] += s * (vals[i] + sum);
            }
        }
        Ok(out)
    }

    /// Elementwise L² projection onto P0 of a pointwise source, by quadrature.
    pub fn l2_project_p0(&self, source: impl Fn(Point) -> f64) -> P0Field {
        let nq = self.quad.len();
        let values = (0..self.mesh.num_triangles())
            .map(|t| (0..nq).map(|q| self.quad.weights[q] * source(self.qpoints[t * nq + q])).sum())
            .collect();
        P0Field { values }
    }

    /// Elementwise L² projection of a P1 field (exact: vertex average).
    pub fn l2_project_p1(&self, source: &P1Field) -> Result<P0Field> {
        source.check(self.mesh)?;
        Ok(P0Field {
            values: self.mesh.triangles().iter().map(|tri| tri.iter().map(|&i| source.values[i]).sum::<f64>() / 3.0).collect(),
        })
    }

    pub fn l2_norm_p0(&self, f: &P0Field) -> Result<f64> {
        f.check(self.mesh)?;
        Ok(f.values.iter().zip(&self.areas).map(|(v, a)| a * v * v).sum::<f64>().sqrt())
    }

    /// Exact L² norm of a P1 field (mass-matrix quadratic form).
    pub fn l2_norm_p1(&self, f: &P1Field) -> Result<f64> {
        Ok(self.product_integrals(f, f)?.iter().sum::<f64>().max(0.0).sqrt())
    }

    pub fn l2_diff_p1(&self, a: &P1Field, b: &P1Field) -> Result<f64> {
        check_len(a.values.len(), b.values.len())?;
        self.l2_norm_p1(&P1Field::new(a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect()))
    }

    pub fn l2_diff_p0(&self, a: &P0Field, b: &P0Field) -> Result<f64> {
        check_len(a.values.len(), b.values.len())?;
        self.l2_norm_p0(&P0Field::new(a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect()))
    }

    /// L² norm over a subset of triangles.
    pub fn l2_norm_p0_on(&self, f: &P0Field, mask: &[bool]) -> Result<f64> {
        f.check(self.mesh)?;
        check_len(self.mesh.num_triangles(), mask.len())?;
        Ok((0..f.values.len()).filter(|&t| mask[t]).map(|t| self.areas[t] * f.values[t].powi(2)).sum::<f64>().sqrt())
    }
}

fn validate_diffusion(a: &[[f64; 2]; 2]) -> Result<()> {
    let scale = a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    if (a[0][1] - a[1][0]).abs() > 1e-14 * scale {
        return Err(Error::Invalid("diffusion tensor is not symmetric".into()));
    }
    if !(a[0][0] > 0.0 && a[0][0] * a[1][1] - a[0][1] * a[1][0] > 0.0) {
        return Err(Error::Invalid("diffusion tensor is not positive definite".into()));
    }
    Ok(())
}

pub fn linf_diff(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a.len(), b.len())?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// L² distance between a coarse P1 field and a fine one, computed exactly on
/// the fine space after prolongation.
pub fn l2_diff_p1_across(fine: &FeSpace, map: &ProlongationMap, coarse: &P1Field, fine_field: &P1Field) -> Result<f64> {
    check_len(map.node_map.len(), fine_field.values.len())?;
    fine.l2_diff_p1(&coarse.prolong(map), fine_field)
}

pub fn l2_diff_p0_across(fine: &FeSpace, map: &ProlongationMap, coarse: &P0Field, fine_field: &P0Field) -> Result<f64> {
    check_len(map.element_map.len(), fine_field.values.len())?;
    if coarse.values.len() * 4 != map.element_map.len() {
        return Err(Error::MeshMismatch);
    }
    fine.l2_diff_p0(&coarse.prolong(map), fine_field)
}
