//! Nested triangulations of polygonal domains.
//!
//! The unit-square builder produces the structured family used throughout the
//! crate: every subsquare is split along its lower-left to upper-right
//! diagonal and vertices are numbered row by row. Red refinement of such a
//! mesh reproduces the next member of the family, so all levels are nested
//! and fields can be moved between them exactly.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Boundary marker shared by every edge of the unit-square builder.
pub const BOUNDARY_MARKER: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub triangle: usize,
    pub marker: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    level: u32,
    h: f64,
}

/// How a child vertex is obtained from the parent mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStencil {
    /// The child vertex coincides with a parent vertex.
    Copy(usize),
    /// The child vertex is the midpoint of a parent edge.
    Midpoint(usize, usize),
}

/// Exact transfer between a mesh and its red refinement.
///
/// Children of parent triangle `t` are stored at indices `4t..4t+4`; the first
/// three are the corner children in local vertex order, the last one is the
/// medial triangle.
#[derive(Debug, Clone)]
pub struct ProlongationMap {
    pub parent_level: u32,
    pub child_level: u32,
    pub node_map: Vec<NodeStencil>,
    pub element_map: Vec<usize>,
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Mesh {
    /// Assembles a mesh from raw parts, checking orientation and indices.
    pub fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
        level: u32,
    ) -> Result<Self> {
        let nv = vertices.len();
        let mut h: f64 = 0.0;
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::Invalid(format!("triangle {t} references a missing vertex")));
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            if signed_area(a, b, c) <= 0.0 {
                return Err(Error::Invalid(format!("triangle {t} is not counterclockwise")));
            }
            h = h.max(dist(a, b)).max(dist(b, c)).max(dist(c, a));
        }
        for e in &boundary_edges {
            if e.triangle >= triangles.len() || e.vertices.iter().any(|&v| v >= nv) {
                return Err(Error::Invalid("boundary edge references a missing entity".into()));
            }
        }
        Ok(Self { vertices, triangles, boundary_edges, level, h })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Longest triangle diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn areas(&self) -> Vec<f64> {
        (0..self.num_triangles()).map(|t| self.area(t)).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.areas().iter().sum()
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_edges
            .iter()
            .map(|e| dist(self.vertices[e.vertices[0]], self.vertices[e.vertices[1]]))
            .sum()
    }

    /// Number of distinct edges (interior and boundary).
    pub fn num_edges(&self) -> usize {
        let mut edges: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges.len()
    }

    pub fn barycenter(&self, t: usize) -> Point {
        let [a, b, c] = self.triangle_points(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn barycenters(&self) -> Vec<Point> {
        (0..self.num_triangles()).map(|t| self.barycenter(t)).collect()
    }

    /// Barycentric coordinates of `p` with respect to triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.triangle_points(t);
        let area = signed_area(a, b, c);
        let l0 = signed_area(p, b, c) / area;
        let l1 = signed_area(a, p, c) / area;
        [l0, l1, 1.0 - l0 - l1]
    }

    /// Maps barycentric coordinates on triangle `t` to a point.
    pub fn point_at(&self, t: usize, bary: [f64; 3]) -> Point {
        let [a, b, c] = self.triangle_points(t);
        [
            bary[0] * a[0] + bary[1] * b[0] + bary[2] * c[0],
            bary[0] * a[1] + bary[1] * b[1] + bary[2] * c[1],
        ]
    }
}

/// Structured triangulation of (0,1)² with `4^level` subsquares.
pub fn build_unit_square_mesh(level: u32) -> Result<Mesh> {
    let size_err = || Error::MeshSize { level };
    let n = 1usize.checked_shl(level).filter(|&n| n.checked_mul(2).is_some()).ok_or_else(size_err)?;
    let n1 = n.checked_add(1).ok_or_else(size_err)?;
    n1.checked_mul(n1).ok_or_else(size_err)?;
    n.checked_mul(n).and_then(|m| m.checked_mul(2)).ok_or_else(size_err)?;

    let idx = |row: usize, col: usize| row * n1 + col;
    let inv = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity(n1 * n1);
    for row in 0..n1 {
        for col in 0..n1 {
            vertices.push([col as f64 * inv, row as f64 * inv]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for row in 0..n {
        for col in 0..n {
            let v00 = idx(row, col);
            let v10 = idx(row, col + 1);
            let v11 = idx(row + 1, col + 1);
            let v01 = idx(row + 1, col);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let lower = |row: usize, col: usize| 2 * (row * n + col);
    let upper = |row: usize, col: usize| 2 * (row * n + col) + 1;
    let mut boundary_edges = Vec::with_capacity(4 * n);
    let mut push = |a, b, t| {
        boundary_edges.push(BoundaryEdge { vertices: [a, b], triangle: t, marker: BOUNDARY_MARKER })
    };
    for col in 0..n {
        push(idx(0, col), idx(0, col + 1), lower(0, col));
    }
    for row in 0..n {
        push(idx(row, n), idx(row + 1, n), lower(row, n - 1));
    }
    for col in (0..n).rev() {
        push(idx(n, col + 1), idx(n, col), upper(n - 1, col));
    }
    for row in (0..n).rev() {
        push(idx(row + 1, 0), idx(row, 0), upper(row, 0));
    }

    let h = inv * std::f64::consts::SQRT_2;
    Ok(Mesh { vertices, triangles, boundary_edges, level, h })
}

/// Red refinement: every triangle is split into four congruent children
/// through its edge midpoints.
///
/// Child vertices are numbered lexicographically by `(y, x)`.
pub fn refine(mesh: &Mesh) -> Result<(Mesh, ProlongationMap)> {
    let level = mesh.level.checked_add(1).ok_or(Error::MeshSize { level: mesh.level })?;
    let nt = mesh.num_triangles();
    nt.checked_mul(4).ok_or(Error::MeshSize { level })?;

    // Provisional numbering: parent vertices first, then midpoints in
    // order of first appearance.
    let mut stencils: Vec<NodeStencil> = (0..mesh.num_vertices()).map(NodeStencil::Copy).collect();
    let mut points: Vec<Point> = mesh.vertices.clone();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, points: &mut Vec<Point>, stencils: &mut Vec<NodeStencil>| {
        let key = (a.min(b), a.max(b));
        *midpoints.entry(key).or_insert_with(|| {
            let (pa, pb) = (points[key.0], points[key.1]);
            points.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
            stencils.push(NodeStencil::Midpoint(key.0, key.1));
            points.len() - 1
        })
    };

    let mut triangles = Vec::with_capacity(4 * nt);
    let mut element_map = Vec::with_capacity(4 * nt);
    let mut tri_mids = Vec::with_capacity(nt);
    for (t, &[a, b, c]) in mesh.triangles.iter().enumerate() {
        let mab = midpoint(a, b, &mut points, &mut stencils);
        let mbc = midpoint(b, c, &mut points, &mut stencils);
        let mca = midpoint(c, a, &mut points, &mut stencils);
        triangles.push([a, mab, mca]);
        triangles.push([mab, b, mbc]);
        triangles.push([mca, mbc, c]);
        triangles.push([mab, mbc, mca]);
        element_map.extend([t; 4]);
        tri_mids.push([mab, mbc, mca]);
    }

    let mut boundary_edges = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let tri = mesh.triangles[e.triangle];
        let local = |v: usize| tri.iter().position(|&w| w == v);
        let (Some(la), Some(lb)) = (local(e.vertices[0]), local(e.vertices[1])) else {
            return Err(Error::Invalid("boundary edge is not an edge of its triangle".into()));
        };
        let m = match (la.min(lb), la.max(lb)) {
            (0, 1) => tri_mids[e.triangle][0],
            (1, 2) => tri_mids[e.triangle][1],
            _ => tri_mids[e.triangle][2],
        };
        let base = 4 * e.triangle;
        boundary_edges.push(BoundaryEdge { vertices: [e.vertices[0], m], triangle: base + la, marker: e.marker });
        boundary_edges.push(BoundaryEdge { vertices: [m, e.vertices[1]], triangle: base + lb, marker: e.marker });
    }

    // Lexicographic renumbering.
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        points[i][1].total_cmp(&points[j][1]).then(points[i][0].total_cmp(&points[j][0]))
    });
    let mut new_index = vec![0; points.len()];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new;
    }
    let vertices = order.iter().map(|&old| points[old]).collect();
    let node_map = order.iter().map(|&old| stencils[old]).collect();
    for tri in &mut triangles {
        *tri = tri.map(|v| new_index[v]);
    }
    for e in &mut boundary_edges {
        e.vertices = e.vertices.map(|v| new_index[v]);
    }

    let child = Mesh { vertices, triangles, boundary_edges, level, h: 0.0 };
    let h = (0..child.num_triangles()).map(|t| child.diameter(t)).fold(0.0, f64::max);
    let child = Mesh { h, ..child };
    let map = ProlongationMap { parent_level: mesh.level, child_level: level, node_map, element_map };
    Ok((child, map))
}

impl ProlongationMap {
    /// Interpolates nodal values onto the child mesh (exact for P1 fields).
    pub fn prolong_nodal(&self, parent: &[f64]) -> Vec<f64> {
        self.node_map
            .iter()
            .map(|s| match *s {
                NodeStencil::Copy(v) => parent[v],
                NodeStencil::Midpoint(a, b) => 0.5 * (parent[a] + parent[b]),
            })
            .collect()
    }

    /// Injects elementwise values onto the child triangles.
    pub fn prolong_elementwise(&self, parent: &[f64]) -> Vec<f64> {
        self.element_map.iter().map(|&t| parent[t]).collect()
    }

    pub fn children(&self, parent_triangle: usize) -> std::ops::Range<usize> {
        4 * parent_triangle..4 * parent_triangle + 4
    }

    /// Child vertex index of each parent vertex.
    pub fn parent_vertex_images(&self, num_parent_vertices: usize) -> Vec<usize> {
        let mut image = vec![usize::MAX; num_parent_vertices];
        for (child, s) in self.node_map.iter().enumerate() {
            if let NodeStencil::Copy(v) = *s {
                image[v] = child;
            }
        }
        image
    }
}

/// A chain of nested meshes produced by repeated refinement.
#[derive(Debug, Clone)]
pub struct MeshHierarchy {
    pub meshes: Vec<Mesh>,
    /// `maps[i]` carries fields from `meshes[i]` to `meshes[i + 1]`.
    pub maps: Vec<ProlongationMap>,
}

impl MeshHierarchy {
    pub fn unit_square(coarsest: u32, finest: u32) -> Result<Self> {
        if finest < coarsest {
            return Err(Error::Invalid(format!("level range {coarsest}..{finest} is empty")));
        }
        let mut meshes = vec![build_unit_square_mesh(coarsest)?];
        let mut maps = Vec::new();
        for _ in coarsest..finest {
            let (fine, map) = refine(meshes.last().expect("non-empty"))?;
            meshes.push(fine);
            maps.push(map);
        }
        Ok(Self { meshes, maps })
    }

    pub fn finest(&self) -> &Mesh {
        self.meshes.last().expect("hierarchy is non-empty")
    }

    /// Locates `p`, known to lie in triangle `t` of `meshes[from]`, inside the
    /// descendants on `meshes[to]`. Returns the descendant triangle and the
    /// barycentric coordinates there.
    pub fn locate_descendant(&self, from: usize, t: usize, p: Point, to: usize) -> (usize, [f64; 3]) {
        let mut tri = t;
        for i in from..to {
            let child_mesh = &self.meshes[i + 1];
            let mut best = (f64::NEG_INFINITY, 4 * tri);
            for c in self.maps[i].children(tri) {
                let b = child_mesh.barycentric(c, p);
                let worst = b[0].min(b[1]).min(b[2]);
                if worst > best.0 {
                    best = (worst, c);
                }
            }
            tri = best.1;
        }
        (tri, self.meshes[to].barycentric(tri, p))
    }
}
