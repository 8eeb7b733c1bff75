//! Test-side oracles, written independently of the library internals.
#![allow(dead_code)]

use std::f64::consts::PI;

use ocfem::{DataTreatment, Mesh};

pub type Point = [f64; 2];

/// Gauss–Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out
}

/// Collapsed-coordinate product rule on the triangle `abc`, exact for
/// polynomials of degree `2n − 2`.
pub fn triangle_rule(a: Point, b: Point, c: Point, n: usize) -> Vec<(Point, f64)> {
    let g = gauss_legendre(n);
    let det = ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs();
    let mut out = Vec::with_capacity(n * n);
    for &(xi, wx) in &g {
        for &(eta, we) in &g {
            let p = [
                a[0] + xi * ((b[0] - a[0]) + eta * (c[0] - b[0])),
                a[1] + xi * ((b[1] - a[1]) + eta * (c[1] - b[1])),
            ];
            out.push((p, wx * we * xi * det));
        }
    }
    out
}

pub fn integrate_triangle(f: impl Fn(Point) -> f64, a: Point, b: Point, c: Point, n: usize) -> f64 {
    triangle_rule(a, b, c, n).into_iter().map(|(p, w)| w * f(p)).sum()
}

pub fn integrate_mesh(mesh: &Mesh, f: impl Fn(usize, Point) -> f64, n: usize) -> f64 {
    (0..mesh.num_triangles())
        .map(|t| {
            let [a, b, c] = mesh.triangle_points(t);
            integrate_triangle(|p| f(t, p), a, b, c, n)
        })
        .sum()
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Barycentric coordinates of `p` in triangle `abc`.
pub fn barycentric(a: Point, b: Point, c: Point, p: Point) -> [f64; 3] {
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

pub fn benchmark_source(x: Point) -> f64 {
    -100.0 * (2.0 * PI * x[0]).sin() * (PI * x[1]).sin()
}

pub fn benchmark_target(x: Point) -> f64 {
    -64.0 * x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1])
}

/// Symmetric degree-4 six-point triangle rule (Dunavant), barycentric points.
pub const DUNAVANT4: [([f64; 3], f64); 6] = {
    const A: f64 = 0.445948490915965;
    const B: f64 = 1.0 - 2.0 * A;
    const C: f64 = 0.091576213509771;
    const D: f64 = 1.0 - 2.0 * C;
    const WA: f64 = 0.223381589678011;
    const WC: f64 = 0.109951743655322;
    [([A, A, B], WA), ([A, B, A], WA), ([B, A, A], WA), ([C, C, D], WC), ([C, D, C], WC), ([D, C, C], WC)]
};

/// Dense re-implementation of the discrete benchmark problem on a tiny mesh:
/// P1 state, P0 control, source and target entering through their nodal
/// interpolants or by the degree-4 rule, y-dependent terms by the degree-4 rule.
/// Triangle, weight·|T|, basis values, node ids and target value at one
/// quadrature point.
type QuadPoint = (usize, f64, [f64; 3], [usize; 3], f64);

pub struct DenseBenchmark {
    pub n: usize,
    pub nu: f64,
    stiffness: Vec<Vec<f64>>,
    mass: Vec<Vec<f64>>,
    element_mass: Vec<Vec<Vec<f64>>>,
    areas: Vec<f64>,
    qp: Vec<QuadPoint>,
    source_load: Vec<f64>,
    target_load: Vec<f64>,
}

impl DenseBenchmark {
    pub fn new(mesh: &Mesh, nu: f64, data: DataTreatment) -> Self {
        let n = mesh.num_vertices();
        let nt = mesh.num_triangles();
        let mut stiffness = vec![vec![0.0; n]; n];
        let mut mass = vec![vec![0.0; n]; n];
        let mut element_mass = vec![vec![vec![0.0; n]; n]; nt];
        let mut areas = Vec::with_capacity(nt);
        let mut qp = Vec::new();
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let [a, b, c] = mesh.triangle_points(t);
            let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            let area = 0.5 * det.abs();
            areas.push(area);
            let grads = [
                [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
                [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
                [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
            ];
            for i in 0..3 {
                for j in 0..3 {
                    stiffness[tri[i]][tri[j]] += area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                    let m = area / 12.0 * if i == j { 2.0 } else { 1.0 };
                    mass[tri[i]][tri[j]] += m;
                    element_mass[t][tri[i]][tri[j]] += m;
                }
            }
            for (l, w) in DUNAVANT4 {
                let x = [l[0] * a[0] + l[1] * b[0] + l[2] * c[0], l[0] * a[1] + l[1] * b[1] + l[2] * c[1]];
                qp.push((t, w * area, l, *tri, benchmark_target(x)));
            }
        }
        let (source_load, target_load) = match data {
            DataTreatment::NodalInterpolation => {
                let verts = mesh.vertices();
                let s: Vec<f64> = verts.iter().map(|&p| benchmark_source(p)).collect();
                let yd: Vec<f64> = verts.iter().map(|&p| -benchmark_target(p)).collect();
                let matvec = |m: &Vec<Vec<f64>>, v: &[f64]| -> Vec<f64> {
                    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
                };
                (matvec(&mass, &s), matvec(&mass, &yd))
            }
            DataTreatment::Quadrature => {
                let mut s = vec![0.0; n];
                let mut yd = vec![0.0; n];
                for (t, tri) in mesh.triangles().iter().enumerate() {
                    let [a, b, c] = mesh.triangle_points(t);
                    for (l, w) in DUNAVANT4 {
                        let x = [l[0] * a[0] + l[1] * b[0] + l[2] * c[0], l[0] * a[1] + l[1] * b[1] + l[2] * c[1]];
                        for k in 0..3 {
                            s[tri[k]] += w * areas[t] * benchmark_source(x) * l[k];
                            yd[tri[k]] -= w * areas[t] * benchmark_target(x) * l[k];
                        }
                    }
                }
                (s, yd)
            }
        };
        Self { n, nu, stiffness, mass, element_mass, areas, qp, source_load, target_load }
    }

    fn y_at(&self, y: &[f64], l: [f64; 3], nodes: [usize; 3]) -> f64 {
        l[0] * y[nodes[0]] + l[1] * y[nodes[1]] + l[2] * y[nodes[2]]
    }

    /// Newton on the dense residual; `y` is the initial guess and the result.
    pub fn solve_state(&self, u: &[f64], y: &mut [f64]) {
        let n = self.n;
        for _ in 0..50 {
            let mut r = self.source_load.clone();
            let mut jac = self.stiffness.clone();
            for i in 0..n {
                for j in 0..n {
                    let mut m = 0.0;
                    for (t, &ut) in u.iter().enumerate() {
                        m += ut * self.element_mass[t][i][j];
                    }
                    jac[i][j] += m;
                    r[i] += (self.stiffness[i][j] + m) * y[j];
                }
            }
            for &(_, w, l, nodes, _) in &self.qp {
                let yq = self.y_at(y, l, nodes);
                let val = yq * yq * yq * yq.abs() + 2.0 * yq;
                let der = 4.0 * yq.abs().powi(3) + 2.0;
                for a in 0..3 {
                    r[nodes[a]] += w * val * l[a];
                    for b in 0..3 {
                        jac[nodes[a]][nodes[b]] += w * der * l[a] * l[b];
                    }
                }
            }
            let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if rn < 1e-14 {
                return;
            }
            let dy = dense_solve(jac, r);
            for i in 0..n {
                y[i] -= dy[i];
            }
        }
        panic!("dense Newton did not converge");
    }

    pub fn cost_at(&self, u: &[f64], y: &[f64]) -> f64 {
        let mut j = 0.0;
        for &(_, w, l, nodes, yd) in &self.qp {
            let yq = self.y_at(y, l, nodes);
            j += w * 0.5 * (yq * yq + yd * yd);
        }
        j += self.target_load.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        j + 0.5 * self.nu * u.iter().zip(&self.areas).map(|(v, a)| a * v * v).sum::<f64>()
    }

    pub fn cost(&self, u: &[f64], warm: &mut [f64]) -> f64 {
        self.solve_state(u, warm);
        self.cost_at(u, warm)
    }

    pub fn mass(&self) -> &Vec<Vec<f64>> {
        &self.mass
    }
}
