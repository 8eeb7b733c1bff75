mod common;

use common::dense_solve;
use ocfem::linalg::{norm2, pcg, solve_spd, SparseSymOperator};
use ocfem::{build_unit_square_mesh, Error, FeSpace};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_spd(n: usize, density: f64, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0_f64; n]; n];
    for i in 0..n {
        for j in 0..i {
            if rng.gen_bool(density) {
                let v = rng.gen_range(-1.0..1.0);
                a[i][j] = v;
                a[j][i] = v;
            }
        }
    }
    for i in 0..n {
        let off: f64 = a[i].iter().map(|v| v.abs()).sum();
        a[i][i] = off + rng.gen_range(0.1..2.0);
    }
    a
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn dense_random_system_matches_gaussian_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for density in [0.05, 0.3, 1.0] {
        let a = random_spd(50, density, &mut rng);
        let b: Vec<f64> = (0..50).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let x = solve_spd(&SparseSymOperator::from_dense(&a).unwrap(), &b, 1e-14).unwrap();
        let oracle = dense_solve(a, b);
        assert!(max_diff(&x, &oracle) <= 1e-12 * (1.0 + norm2(&oracle)), "density {density}");
    }
}

#[test]
fn stiffness_plus_mass_agrees_with_cg() {
    let mesh = build_unit_square_mesh(5).unwrap();
    let space = FeSpace::new(&mesh);
    let a = space.assemble_stiffness(None).unwrap().add_scaled(1.0, &space.assemble_mass(|p| 1.0 + p[0])).unwrap();
    let b = space.assemble_volume_load(|p| (p[0] * 7.0).cos() * p[1]);
    let direct = solve_spd(&a, &b, 1e-12).unwrap();
    let iterative = pcg(&a, &b, 1e-13, 2000).unwrap();
    assert!(max_diff(&direct, &iterative) <= 1e-10 * (1.0 + norm2(&direct)));
    let r = a.residual_compensated(&b, &direct).unwrap();
    assert!(norm2(&r) <= 1e-13 * norm2(&b));
}

#[test]
fn indefinite_and_mismatched_input_rejected() {
    let a = SparseSymOperator::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
    assert!(matches!(a.factor(), Err(Error::Coercivity { .. })));
    assert!(SparseSymOperator::from_dense(&[vec![1.0, 2.0], vec![0.0, 1.0]]).is_err());
    let spd = SparseSymOperator::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
    assert!(matches!(spd.factor().unwrap().solve(&[1.0]), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn zero_right_hand_side_gives_zero() {
    let a = SparseSymOperator::identity(5);
    assert_eq!(solve_spd(&a, &[0.0; 5], 1e-12).unwrap(), vec![0.0; 5]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn factor_solves_random_spd(seed in any::<u64>(), n in 1usize..40, density in 0.0..1.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_spd(n, density, &mut rng);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let op = SparseSymOperator::from_dense(&a).unwrap();
        let x = op.factor().unwrap().solve(&b).unwrap();
        let oracle = dense_solve(a, b);
        prop_assert!(max_diff(&x, &oracle) <= 1e-11 * (1.0 + norm2(&oracle)));
    }

    #[test]
    fn matvec_is_symmetric(seed in any::<u64>(), n in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = SparseSymOperator::from_dense(&random_spd(n, 0.4, &mut rng)).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xay = op.bilinear(&x, &y).unwrap();
        let yax = op.bilinear(&y, &x).unwrap();
        prop_assert!((xay - yax).abs() <= 1e-12 * (1.0 + xay.abs()));
        let plain = op.matvec(&x).unwrap();
        let compensated = op.matvec_compensated(&x).unwrap();
        prop_assert!(max_diff(&plain, &compensated) <= 1e-13 * (1.0 + norm2(&plain)));
    }
}
