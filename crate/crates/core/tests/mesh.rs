use ocfem::mesh::NodeStencil;
use ocfem::{build_unit_square_mesh, refine, MeshHierarchy};
use proptest::prelude::*;

#[test]
fn euler_characteristic_of_the_square() {
    for level in 0..=6 {
        let m = build_unit_square_mesh(level).unwrap();
        let (v, e, f) = (m.num_vertices() as i64, m.num_edges() as i64, m.num_triangles() as i64);
        assert_eq!(v - e + f, 1, "level {level}");
        let n = 1i64 << level;
        assert_eq!(v, (n + 1) * (n + 1));
        assert_eq!(f, 2 * n * n);
        assert_eq!(m.boundary_edges().len() as i64, 4 * n);
    }
}

#[test]
fn measures_and_orientation() {
    for level in 0..=5 {
        let m = build_unit_square_mesh(level).unwrap();
        assert!((m.total_area() - 1.0).abs() < 1e-14);
        assert!((m.boundary_length() - 4.0).abs() < 1e-14);
        assert!((0..m.num_triangles()).all(|t| m.area(t) > 0.0));
        let hmax = (0..m.num_triangles()).map(|t| m.diameter(t)).fold(0.0, f64::max);
        assert!((hmax - m.h()).abs() < 1e-15);
    }
}

#[test]
fn refinement_matches_direct_construction() {
    let coarse = build_unit_square_mesh(2).unwrap();
    let (fine, map) = refine(&coarse).unwrap();
    let direct = build_unit_square_mesh(3).unwrap();
    assert_eq!(fine.num_vertices(), direct.num_vertices());
    assert_eq!(fine.num_triangles(), direct.num_triangles());
    assert_eq!(fine.level(), 3);
    assert!((fine.total_area() - 1.0).abs() < 1e-14);
    for t in 0..coarse.num_triangles() {
        let quarter = coarse.area(t) / 4.0;
        for c in map.children(t) {
            assert_eq!(map.element_map[c], t);
            assert!((fine.area(c) - quarter).abs() < 1e-16);
            let b = coarse.barycentric(t, fine.barycenter(c));
            assert!(b.iter().all(|&l| l > 0.0));
        }
    }
    let images = map.parent_vertex_images(coarse.num_vertices());
    for (v, &img) in images.iter().enumerate() {
        assert_eq!(fine.vertices()[img], coarse.vertices()[v]);
    }
    for (child, s) in map.node_map.iter().enumerate() {
        if let NodeStencil::Midpoint(a, b) = *s {
            let (pa, pb) = (coarse.vertices()[a], coarse.vertices()[b]);
            assert_eq!(fine.vertices()[child], [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prolongation_reproduces_affine_functions(level in 0u32..5, a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64) {
        let f = |p: [f64; 2]| a + b * p[0] + c * p[1];
        let coarse = build_unit_square_mesh(level).unwrap();
        let (fine, map) = refine(&coarse).unwrap();
        let nodal: Vec<f64> = coarse.vertices().iter().map(|&p| f(p)).collect();
        let fine_nodal = map.prolong_nodal(&nodal);
        for (p, v) in fine.vertices().iter().zip(&fine_nodal) {
            prop_assert!((f(*p) - v).abs() <= 1e-13);
        }
    }

    #[test]
    fn elementwise_prolongation_preserves_integrals(level in 0u32..5, seed in any::<u64>()) {
        let coarse = build_unit_square_mesh(level).unwrap();
        let (fine, map) = refine(&coarse).unwrap();
        let values: Vec<f64> = (0..coarse.num_triangles()).map(|t| ((seed ^ t as u64) % 1000) as f64 / 100.0 - 5.0).collect();
        let fine_values = map.prolong_elementwise(&values);
        let ic: f64 = values.iter().zip(coarse.areas()).map(|(v, a)| v * a).sum();
        let ifn: f64 = fine_values.iter().zip(fine.areas()).map(|(v, a)| v * a).sum();
        prop_assert!((ic - ifn).abs() <= 1e-12);
    }

    #[test]
    fn located_descendant_contains_the_point(x in 0.0..1.0f64, y in 0.0..1.0f64) {
        let hier = MeshHierarchy::unit_square(1, 5).unwrap();
        let coarse = &hier.meshes[0];
        let t = (0..coarse.num_triangles())
            .max_by(|&s, &t| {
                let m = |k| coarse.barycentric(k, [x, y]).into_iter().fold(f64::INFINITY, f64::min);
                m(s).total_cmp(&m(t))
            })
            .unwrap();
        let (d, bary) = hier.locate_descendant(0, t, [x, y], 4);
        prop_assert!(bary.iter().all(|&l| l >= -1e-12));
        let p = hier.finest().point_at(d, bary);
        prop_assert!((p[0] - x).abs() <= 1e-12 && (p[1] - y).abs() <= 1e-12);
    }
}
