mod common;

use common::{gaussian, orthonormal, rng};
use proptest::prelude::*;
use rand::Rng;
use rpca_core::{solve_l1reg, solve_l1reg_columnwise, AdmConfig, DenseMatrix};

fn l1_misfit(x: &[f64], a: &DenseMatrix, z: [f64; 2]) -> f64 {
    x.iter().enumerate().map(|(i, &xi)| (xi - a.get(i, 0) * z[0] - a.get(i, 1) * z[1]).abs()).sum()
}

/// Minimizes `‖x - A z‖_1` over `z ∈ R²` by three rounds of grid search, each
/// zooming in on the previous best point. The final step is 1e-4.
fn grid_oracle(x: &[f64], a: &DenseMatrix) -> f64 {
    let radius = 2.0 * x.iter().map(|v| v.abs()).sum::<f64>().max(1e-3);
    let mut center = [0.0, 0.0];
    let mut half = radius;
    let mut best = f64::INFINITY;
    for (stage, points) in [200usize, 200, 0].into_iter().enumerate() {
        let step = if stage == 2 { 1e-4 } else { 2.0 * half / points as f64 };
        let n = (2.0 * half / step).ceil() as usize;
        let mut arg = center;
        for i in 0..=n {
            for j in 0..=n {
                let z = [center[0] - half + i as f64 * step, center[1] - half + j as f64 * step];
                let f = l1_misfit(x, a, z);
                if f < best {
                    best = f;
                    arg = z;
                }
            }
        }
        center = arg;
        half = 2.0 * step;
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn adm_matches_grid_oracle(seed in any::<u64>()) {
        let a = orthonormal(10, 2, seed);
        let mut r = rng(seed ^ 0x55);
        let z0 = gaussian(2, 1, seed ^ 0x77).scale(3.0);
        let mut x = a.matmul(&z0).unwrap().into_vec();
        for _ in 0..2 {
            let i = r.gen_range(0..10);
            x[i] += r.gen_range(-20.0..20.0);
        }
        let xm = DenseMatrix::new(10, 1, x.clone()).unwrap();
        let sol = solve_l1reg(&xm, &a, &AdmConfig::default()).unwrap();
        prop_assert!(sol.converged());
        let adm = sol.e.l1_norm();
        let oracle = grid_oracle(&x, &a);
        let at_truth = l1_misfit(&x, &a, [z0.get(0, 0), z0.get(1, 0)]);
        prop_assert!(oracle <= at_truth + 1e-3, "oracle {oracle} truth {at_truth}");
        prop_assert!(adm <= oracle + 1e-3, "adm {adm} oracle {oracle}");
    }

    #[test]
    fn adm_matches_grid_oracle_on_generic_columns(seed in any::<u64>()) {
        // No planted structure: the minimizer interpolates two arbitrary rows.
        let a = orthonormal(10, 2, seed);
        let x = gaussian(10, 1, seed ^ 0x99).into_vec();
        let xm = DenseMatrix::new(10, 1, x.clone()).unwrap();
        let sol = solve_l1reg(&xm, &a, &AdmConfig::default()).unwrap();
        prop_assert!(sol.converged());
        let adm = sol.e.l1_norm();
        let oracle = grid_oracle(&x, &a);
        prop_assert!(adm <= oracle + 1e-3, "adm {adm} oracle {oracle}");
    }

    #[test]
    fn columnwise_equals_sequential(seed in any::<u64>(), cols in 1usize..40) {
        let a = orthonormal(25, 3, seed);
        let x = gaussian(25, cols, seed ^ 3);
        let cfg = AdmConfig::default();
        let seq = solve_l1reg(&x, &a, &cfg).unwrap();
        for p in [0, 2, 8] {
            let par = solve_l1reg_columnwise(&x, &a, &cfg, p).unwrap();
            prop_assert_eq!(par.z.as_slice(), seq.z.as_slice());
            prop_assert_eq!(par.e.as_slice(), seq.e.as_slice());
        }
        // Each column on its own gives the same answer as the joint solve.
        for j in 0..cols {
            let xj = DenseMatrix::new(25, 1, x.column(j)).unwrap();
            let one = solve_l1reg(&xj, &a, &cfg).unwrap();
            for i in 0..3 {
                prop_assert!((one.z.get(i, 0) - seq.z.get(i, j)).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn exit_satisfies_loop_guard(seed in any::<u64>()) {
        let a = orthonormal(30, 4, seed);
        let x = gaussian(30, 6, seed ^ 9);
        let cfg = AdmConfig::default();
        let sol = solve_l1reg(&x, &a, &cfg).unwrap();
        prop_assert!(sol.converged());
        for j in 0..6 {
            let xj = x.column(j);
            let nx = xj.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let worst = (0..30)
                .map(|i| {
                    let az: f64 = (0..4).map(|k| a.get(i, k) * sol.z.get(k, j)).sum();
                    (xj[i] - az - sol.e.get(i, j)).abs()
                })
                .fold(0.0f64, f64::max);
            prop_assert!(worst / nx < cfg.tol * (1.0 + 1e-9));
        }
    }
}

#[test]
fn sparse_spikes_are_separated_from_the_subspace() {
    let a = orthonormal(200, 5, 21);
    let z0 = gaussian(5, 30, 22);
    let mut e0 = DenseMatrix::zeros(200, 30);
    let mut r = rng(23);
    let mut data = e0.clone().into_vec();
    for v in data.iter_mut() {
        if r.gen_bool(0.05) {
            *v = if r.gen_bool(0.5) { 100.0 } else { -100.0 };
        }
    }
    e0 = DenseMatrix::new(200, 30, data).unwrap();
    let x = a.matmul(&z0).unwrap().add(&e0).unwrap();
    let sol = solve_l1reg(&x, &a, &AdmConfig::default()).unwrap();
    assert!(sol.converged());
    let dev = sol.e.sub(&e0).unwrap().linf_norm();
    assert!(dev <= 1e-4, "max deviation {dev}");
}

#[test]
fn one_dimensional_hand_example() {
    let mut a = DenseMatrix::zeros(4, 1).into_vec();
    a[0] = 1.0;
    let a = DenseMatrix::new(4, 1, a).unwrap();
    let x = DenseMatrix::new(4, 1, vec![10.0, 3.0, 0.0, 0.0]).unwrap();
    let sol = solve_l1reg(&x, &a, &AdmConfig::default()).unwrap();
    assert!((sol.z.get(0, 0) - 10.0).abs() < 1e-6);
    assert!((sol.e.get(1, 0) - 3.0).abs() < 1e-6);
    assert!(sol.e.get(0, 0).abs() < 1e-6);
}
