//! Cross-checks of the banded and modal algorithms against dense linear
//! algebra.

mod common;

use common::*;
use nalgebra::{DMatrix, DVector, Matrix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soundheat::nonlinearity::{Beta, NonlinearitySpec, Pi};
use soundheat::operators::{Bc, DiscreteOperator, Grid1D, OperatorBundle, Preset};
use soundheat::oracle::expm::{expm, Mat3};
use soundheat::oracle::exact_linear_solution;
use soundheat::stepper::{solve_phi, InitialData, StepConfig};

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// A diagonally dominant symmetric tridiagonal operator.
fn random_spd(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DiscreteOperator {
    let off: Vec<f64> = (0..n - 1).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
    let diag = (0..n)
        .map(|i| {
            let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { off[i].abs() } else { 0.0 };
            left + right + scale * rng.gen_range(0.1..2.0)
        })
        .collect();
    DiscreteOperator::general(diag, off).unwrap()
}

fn general_bundle(seed: u64, n: usize) -> OperatorBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = Grid1D::dirichlet(n).unwrap();
    let l = random_spd(&mut rng, n, 1.0);
    let a1 = random_spd(&mut rng, n, 50.0);
    let a2 = random_spd(&mut rng, n, 80.0);
    let b1 = random_spd(&mut rng, n, 3.0);
    let b2 = random_spd(&mut rng, n, 20.0);
    let c_l = dense(&l).symmetric_eigen().eigenvalues.min() * 0.999;
    OperatorBundle::new(l, a1, a2, b1, b2, 0.7, c_l, grid).unwrap()
}

/// `sqrt(max_w |B2 w|^2 / (|A1 w|^2 + |w|^2))` by a dense generalized
/// symmetric eigenproblem.
fn dense_relative_bound(b: &OperatorBundle) -> f64 {
    let n = b.dim();
    let a1 = dense(&b.a1);
    let b2 = dense(&b.b2);
    let m = &a1 * &a1 + DMatrix::identity(n, n);
    let chol = m.cholesky().unwrap();
    let linv = chol.l().try_inverse().unwrap();
    let s = &linv * (&b2 * &b2) * linv.transpose();
    s.symmetric_eigen().eigenvalues.max().sqrt()
}

#[test]
fn relative_bound_matches_dense_eigenproblem() {
    for preset in PRESETS {
        for bc in BCS {
            let b = setup(preset, bc, 16).bundle;
            let want = dense_relative_bound(&b);
            assert!(
                (b.c_a1b2 - want).abs() <= 1e-10 * want.max(1.0),
                "{preset:?} {bc:?}: {} vs {want}",
                b.c_a1b2
            );
        }
    }
    for seed in 0..5 {
        let b = general_bundle(seed, 16);
        let want = dense_relative_bound(&b);
        assert!(b.c_a1b2 >= want * (1.0 - 1e-12), "{} < {want}", b.c_a1b2);
        assert!(b.c_a1b2 <= want * (1.0 + 1e-9), "{} vs {want}", b.c_a1b2);
    }
}

#[test]
fn p1_relative_bound_is_at_most_c2_over_sigma() {
    let b = setup(Preset::P1, Bc::Dirichlet, 16).bundle;
    // defaults: c = sigma = 1
    assert!(b.c_a1b2 <= 1.0);
    assert!(b.c_a1b2 > 0.99);
}

#[test]
fn linear_newton_solve_matches_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut cases: Vec<(OperatorBundle, f64)> = Vec::new();
    for preset in PRESETS {
        for bc in BCS {
            cases.push((setup(preset, bc, 24).bundle, 0.0));
        }
    }
    cases.push((general_bundle(3, 24), -0.5));
    cases.push((general_bundle(4, 24), 2.0));
    for (b, s) in &cases {
        let nonlin = NonlinearitySpec::new(Beta::Zero, Pi::Linear { slope: *s }).unwrap();
        for h in [1e-3, 0.05] {
            let g = random_vec(&mut rng, b.dim());
            let got = solve_phi(&g, b, &nonlin, &StepConfig::new(h), None).unwrap().phi;
            let want = dense_elliptic(b, h, *s).lu().solve(&DVector::from_vec(g.clone())).unwrap();
            let scale = want.amax().max(1.0);
            for i in 0..b.dim() {
                assert!((got[i] - want[i]).abs() <= 1e-12 * scale, "h={h}: {} vs {}", got[i], want[i]);
            }
        }
    }
}

#[test]
fn resolvent_matches_dense_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for bc in BCS {
        let b = setup(Preset::P3, bc, 20).bundle;
        for op in [&b.a1, &b.b1, &b.a2] {
            let rhs = random_vec(&mut rng, 20);
            let got = op.resolvent_solve(0.01, &rhs).unwrap();
            let m = DMatrix::<f64>::identity(20, 20) + dense(op) * 0.01;
            let want = m.lu().solve(&DVector::from_vec(rhs)).unwrap();
            for i in 0..20 {
                assert!((got[i] - want[i]).abs() <= 1e-12 * want.amax().max(1.0));
            }
        }
    }
}

#[test]
fn small_expm_matches_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for scale in [0.01, 1.0, 10.0, 100.0] {
        for _ in 0..20 {
            let mut a: Mat3 = [[0.0; 3]; 3];
            a.iter_mut().flatten().for_each(|x| *x = scale * rng.gen_range(-1.0..1.0));
            let got = expm(&a);
            let want = Matrix3::from_fn(|i, j| a[i][j]).exp();
            let norm = want.amax().max(1.0);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((got[i][j] - want[(i, j)]).abs() <= 1e-12 * norm, "scale {scale}");
                }
            }
        }
    }
}

/// Exponential of the full semi-discrete generator acting on `(theta, phi, v)`.
fn dense_exact(b: &OperatorBundle, slope: f64, init: &InitialData, t: f64) -> [Vec<f64>; 3] {
    let n = b.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let linv = dense(&b.l).try_inverse().unwrap();
    let mut m = DMatrix::<f64>::zeros(3 * n, 3 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&(-dense(&b.a1)));
    m.view_mut((0, 2 * n), (n, n)).copy_from(&(&id * -b.eta));
    m.view_mut((n, 2 * n), (n, n)).copy_from(&id);
    m.view_mut((2 * n, 0), (n, n)).copy_from(&(&linv * dense(&b.b2)));
    m.view_mut((2 * n, n), (n, n)).copy_from(&(&linv * -(dense(&b.a2) + &id * slope)));
    m.view_mut((2 * n, 2 * n), (n, n)).copy_from(&(&linv * -dense(&b.b1)));
    let x0 = DVector::from_iterator(3 * n, init.theta.iter().chain(&init.phi).chain(&init.v).copied());
    let x = (m * t).exp() * x0;
    [0, 1, 2].map(|k| x.rows(k * n, n).iter().copied().collect())
}

#[test]
fn modal_oracle_matches_dense_exponential() {
    let cases = [
        (Preset::P1, NonlinearitySpec::new(Beta::Zero, Pi::Linear { slope: -1.0 }).unwrap()),
        (Preset::P1, NonlinearitySpec::linear()),
        (Preset::P3, NonlinearitySpec::linear()),
        (Preset::P4, NonlinearitySpec::linear()),
        (Preset::P5, NonlinearitySpec::new(Beta::Zero, Pi::Linear { slope: 0.5 }).unwrap()),
    ];
    for (preset, nonlin) in cases {
        for bc in BCS {
            let b = setup(preset, bc, 12).bundle;
            let init = InitialData::random_smooth(&b.grid, 4, 1.0).unwrap();
            let slope = nonlin.linear_slope().unwrap();
            for t in [0.05, 0.3] {
                let got = exact_linear_solution(&init, &b, &nonlin, t).unwrap();
                let want = dense_exact(&b, slope, &init, t);
                for (g, w) in [&got.theta, &got.phi, &got.v].iter().zip(&want) {
                    let scale = w.iter().fold(1.0f64, |m, x| m.max(x.abs()));
                    let err = sup_diff(g, w);
                    assert!(err <= 1e-10 * scale, "{preset:?} {bc:?} t={t}: {err:e}");
                }
            }
        }
    }
}
