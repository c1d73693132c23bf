//! Batch fit checks against an independent normal-equations solver, plus
//! algebraic properties of the basis and the least-squares solution.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rvmrls::regression::{batch_least_squares, poly_basis};
use rvmrls::terrain::{terrain_height, TerrainParams};

/// Gaussian elimination with partial pivoting on `Phi^T Phi theta = Phi^T y`.
fn normal_equations(samples: &[(f64, f64)], m: usize) -> Vec<f64> {
    let n = m + 1;
    let mut a = vec![vec![0.0; n + 1]; n];
    for &(tau, y) in samples {
        let pows: Vec<f64> = (0..n).map(|k| tau.powi(k as i32)).collect();
        for i in 0..n {
            for j in 0..n {
                a[i][j] += pows[i] * pows[j];
            }
            a[i][n] += pows[i] * y;
        }
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..=n {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (a[i][n] - s) / a[i][i];
    }
    x
}

fn terrain_window(seed: u64, n: usize, start: usize, scale: f64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = TerrainParams::default();
    (start..start + n)
        .map(|i| {
            let t = i as f64;
            let v: f64 = rng.sample(StandardNormal);
            (t / scale, terrain_height(t, &params) + 20.0 + 0.3 * v)
        })
        .collect()
}

#[test]
fn theta_matches_normal_equations_oracle() {
    // 30 samples centred on the window so the quartic is well conditioned
    for seed in 0..5 {
        let raw = terrain_window(seed, 30, 900, 100.0);
        let centre = raw[raw.len() - 1].0;
        let samples: Vec<_> = raw.iter().map(|&(t, y)| (t - centre, y)).collect();
        let fit = batch_least_squares(&samples, 4).unwrap();
        let oracle = normal_equations(&samples, 4);
        for k in 0..5 {
            let tol = 1e-9 * oracle[k].abs().max(1.0);
            assert!(
                (fit.theta[k] - oracle[k]).abs() < tol,
                "seed {seed} k {k}: {} vs {}",
                fit.theta[k],
                oracle[k]
            );
        }
    }
}

#[test]
fn covariance_is_symmetric_psd() {
    let raw = terrain_window(3, 60, 0, 100.0);
    let fit = batch_least_squares(&raw, 4).unwrap();
    let c = &fit.covariance;
    assert_eq!(c, &c.transpose());
    let tol = 1e-9 * c.trace();
    let eig = c.clone().symmetric_eigen();
    assert!(eig.eigenvalues.iter().all(|&l| l >= -tol));
    assert!(fit.residual_variance >= 0.0);
    let ratio = &fit.covariance - &fit.gram_inverse * fit.residual_variance;
    assert!(ratio.amax() <= 1e-12 * c.amax());
}

#[test]
fn residual_variance_is_sse_over_dof() {
    let raw = terrain_window(8, 40, 300, 100.0);
    let fit = batch_least_squares(&raw, 3).unwrap();
    let sse: f64 = raw
        .iter()
        .map(|&(t, y)| (y - poly_basis(t, 3).unwrap().entries().dot(&fit.theta)).powi(2))
        .sum();
    let expect = sse / (40 - 3 - 1) as f64;
    assert!((fit.residual_variance - expect).abs() < 1e-12 * expect);
}

proptest! {
    #[test]
    fn basis_entries_are_successive_powers(tau in -50.0f64..50.0, m in 1usize..8) {
        let phi = poly_basis(tau, m).unwrap();
        let e = phi.as_slice();
        prop_assert_eq!(e[0], 1.0);
        prop_assert_eq!(e.len(), m + 1);
        for k in 0..m {
            prop_assert_eq!(e[k + 1], tau * e[k]);
        }
    }

    #[test]
    fn residuals_orthogonal_to_columns(
        coeffs in prop::collection::vec(-5.0f64..5.0, 5),
        noise in prop::collection::vec(-1.0f64..1.0, 40),
        m in 1usize..5,
    ) {
        let samples: Vec<(f64, f64)> = noise.iter().enumerate().map(|(i, v)| {
            let tau = -1.0 + 2.0 * i as f64 / 39.0;
            let y: f64 = coeffs.iter().enumerate().map(|(k, c)| c * tau.powi(k as i32)).sum();
            (tau, y + v)
        }).collect();
        let fit = batch_least_squares(&samples, m).unwrap();
        let mut phi_norm2 = 0.0;
        let mut y_norm2 = 0.0;
        let mut grad = vec![0.0; m + 1];
        for &(tau, y) in &samples {
            let phi = poly_basis(tau, m).unwrap();
            let r = y - phi.entries().dot(&fit.theta);
            for k in 0..=m {
                grad[k] += phi.as_slice()[k] * r;
            }
            phi_norm2 += phi.entries().norm_squared();
            y_norm2 += y * y;
        }
        let bound = 1e-8 * (phi_norm2.sqrt() * y_norm2.sqrt());
        for g in grad {
            prop_assert!(g.abs() < bound, "{} >= {}", g.abs(), bound);
        }
    }

    #[test]
    fn fit_is_linear_in_y(
        ys in prop::collection::vec(-10.0f64..10.0, 12),
    ) {
        let samples: Vec<(f64, f64)> =
            ys.iter().enumerate().map(|(i, &y)| (i as f64 / 11.0, y)).collect();
        let doubled: Vec<(f64, f64)> = samples.iter().map(|&(t, y)| (t, 2.0 * y)).collect();
        let a = batch_least_squares(&samples, 2).unwrap();
        let b = batch_least_squares(&doubled, 2).unwrap();
        for k in 0..3 {
            prop_assert!((b.theta[k] - 2.0 * a.theta[k]).abs() <= 1e-9 * (1.0 + a.theta[k].abs()));
        }
        let rv = a.residual_variance;
        prop_assert!((b.residual_variance - 4.0 * rv).abs() <= 1e-9 * (1.0 + rv));
    }
}
