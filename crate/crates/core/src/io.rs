//! Plain-text dumps of meshes, fields and study tables.
//!
//! Mesh: header `nv nt ne`, then `nv` lines `x y`, `nt` lines `a b c` and
//! `ne` lines `a b triangle marker`. Fields: header `p1 N` or `p0 N`, then one
//! value per line. Floats are written with 17 significant digits so a dump
//! reads back bit-exactly.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fem::{P0Field, P1Field};
use crate::mesh::{BoundaryEdge, Mesh};
use crate::study::StudyRecord;

pub const STUDY_HEADER: &str = "j,h,e_u,eoc_u,e_y,eoc_y,e_phi,eoc_phi,e_upost,eoc_upost,measure_T1,kkt,iters";

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {} {}", mesh.num_vertices(), mesh.num_triangles(), mesh.boundary_edges().len());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:.16e} {:.16e}", p[0], p[1]);
    }
    for t in mesh.triangles() {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    for e in mesh.boundary_edges() {
        let _ = writeln!(s, "{} {} {} {}", e.vertices[0], e.vertices[1], e.triangle, e.marker);
    }
    s
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Invalid(format!("malformed {what}")))
}

pub fn read_mesh(text: &str, level: u32) -> Result<Mesh> {
    let mut lines = text.lines();
    let mut header = lines.next().unwrap_or("").split_whitespace();
    let nv: usize = parse(header.next(), "mesh header")?;
    let nt: usize = parse(header.next(), "mesh header")?;
    let ne: usize = parse(header.next(), "mesh header")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let mut it = lines.next().unwrap_or("").split_whitespace();
        vertices.push([parse(it.next(), "vertex")?, parse(it.next(), "vertex")?]);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let mut it = lines.next().unwrap_or("").split_whitespace();
        triangles.push([parse(it.next(), "triangle")?, parse(it.next(), "triangle")?, parse(it.next(), "triangle")?]);
    }
    let mut edges = Vec::with_capacity(ne);
    for _ in 0..ne {
        let mut it = lines.next().unwrap_or("").split_whitespace();
        edges.push(BoundaryEdge {
            vertices: [parse(it.next(), "boundary edge")?, parse(it.next(), "boundary edge")?],
            triangle: parse(it.next(), "boundary edge")?,
            marker: parse(it.next(), "boundary edge")?,
        });
    }
    Mesh::from_parts(vertices, triangles, edges, level)
}

fn write_values(kind: &str, values: &[f64]) -> String {
    let mut s = format!("{kind} {}\n", values.len());
    for v in values {
        let _ = writeln!(s, "{v:.16e}");
    }
    s
}

pub fn write_p1(field: &P1Field) -> String {
    write_values("p1", &field.values)
}

pub fn write_p0(field: &P0Field) -> String {
    write_values("p0", &field.values)
}

fn read_values(text: &str, kind: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines();
    let mut header = lines.next().unwrap_or("").split_whitespace();
    if header.next() != Some(kind) {
        return Err(Error::Invalid(format!("expected a `{kind}` field dump")));
    }
    let n: usize = parse(header.next(), "field header")?;
    let values = lines.take(n).map(|l| parse(Some(l.trim()), "field value")).collect::<Result<Vec<f64>>>()?;
    if values.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: values.len() });
    }
    Ok(values)
}

pub fn read_p1(text: &str) -> Result<P1Field> {
    read_values(text, "p1").map(P1Field::new)
}

pub fn read_p0(text: &str) -> Result<P0Field> {
    read_values(text, "p0").map(P0Field::new)
}

fn sci(v: f64) -> String {
    format!("{v:.6e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(sci).unwrap_or_default()
}

/// One CSV row per record, LF line endings, empty fields for undefined
/// orders.
pub fn study_csv(records: &[StudyRecord]) -> String {
    let mut s = String::from(STUDY_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.level,
            sci(r.h),
            sci(r.e_u),
            opt(r.eoc_u),
            sci(r.e_y),
            opt(r.eoc_y),
            sci(r.e_phi),
            opt(r.eoc_phi),
            sci(r.e_upost),
            opt(r.eoc_upost),
            if r.measure_t1.is_nan() { String::new() } else { sci(r.measure_t1) },
            sci(r.kkt),
            r.outer_iterations
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_unit_square_mesh;

    #[test]
    fn mesh_dump_reads_back() {
        let m = build_unit_square_mesh(2).unwrap();
        let text = write_mesh(&m);
        assert!(text.starts_with("25 32 16\n"));
        assert_eq!(read_mesh(&text, 2).unwrap(), m);
    }

    #[test]
    fn field_dump_reads_back() {
        let f = P1Field::new(vec![0.1, -2.0 / 3.0, 1e-300]);
        assert_eq!(read_p1(&write_p1(&f)).unwrap(), f);
        assert!(read_p0(&write_p1(&f)).is_err());
        assert!(read_p1("p1 4\n1.0\n").is_err());
    }

    #[test]
    fn csv_empty_orders() {
        let r = StudyRecord {
            level: 3,
            h: 0.25,
            e_u: 0.14,
            eoc_u: None,
            e_y: 1.0,
            eoc_y: Some(2.0),
            e_phi: 1.0,
            eoc_phi: None,
            e_upost: 1.0,
            eoc_upost: None,
            measure_t1: f64::NAN,
            kkt: 1e-10,
            outer_iterations: 4,
        };
        let csv = study_csv(&[r]);
        let row = csv.lines().nth(1).unwrap();
        assert_eq!(row, "3,2.500000e-1,1.400000e-1,,1.000000e0,2.000000e0,1.000000e0,,1.000000e0,,,1.000000e-10,4");
    }
}
