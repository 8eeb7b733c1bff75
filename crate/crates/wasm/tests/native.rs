use ocfem_wasm::{solve_view, study_table, MAX_LEVEL};

#[test]
fn solve_view_shapes_and_bounds() {
    let v = solve_view("paper-sec6", 3, 0.01, -1.0, 1.0).unwrap();
    assert_eq!(v.num_triangles(), 128);
    assert_eq!(v.num_vertices(), 81);
    assert_eq!(v.vertices().len(), 2 * 81);
    assert_eq!(v.triangles().len(), 3 * 128);
    assert!(v.triangles().iter().all(|&i| (i as usize) < 81));
    assert!(v.control_values().iter().chain(v.postprocessed_values()).all(|u| (-1.0..=1.0).contains(u)));
    assert!(v.kkt_residual <= 1e-9);
}

#[test]
fn narrower_box_is_respected() {
    let v = solve_view("paper-sec6", 3, 0.01, 0.0, 0.25).unwrap();
    assert!(v.control_values().iter().all(|u| (0.0..=0.25).contains(u)));
    assert!(v.control_values().contains(&0.25));
}

#[test]
fn manufactured_state_is_one() {
    let v = solve_view("manufactured-constant", 2, 1.0, 0.0, 1.0).unwrap();
    assert!(v.state_values().iter().all(|y| (y - 1.0).abs() <= 1e-12));
}

#[test]
fn rejects_bad_input() {
    assert!(solve_view("nope", 2, 0.01, -1.0, 1.0).unwrap_err().to_string().contains("unknown preset"));
    assert!(solve_view("paper-sec6", MAX_LEVEL + 1, 0.01, -1.0, 1.0).is_err());
    assert!(solve_view("paper-sec6", 2, 0.0, -1.0, 1.0).is_err());
    assert!(solve_view("paper-sec6", 2, 0.01, 1.0, -1.0).is_err());
    assert!(solve_view("paper-sec6", 2, 0.01, -5.0, 1.0).is_err());
}

#[test]
fn study_table_has_header_and_rows() {
    let csv = study_table("paper-sec6", 2, 4).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], ocfem::io::STUDY_HEADER);
    assert!(lines[2].starts_with("3,"));
}
