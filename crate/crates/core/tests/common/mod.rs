#![allow(dead_code)]

use nalgebra::DMatrix;
use soundheat::nonlinearity::NonlinearitySpec;
use soundheat::operators::{build_bundle, Bc, DiscreteOperator, Grid1D, OperatorBundle, Preset, ProblemPreset};
use soundheat::stepper::InitialData;

pub const PRESETS: [Preset; 5] = [Preset::P1, Preset::P2, Preset::P3, Preset::P4, Preset::P5];
pub const BCS: [Bc; 2] = [Bc::Dirichlet, Bc::Neumann];

pub struct Setup {
    pub bundle: OperatorBundle,
    pub nonlin: NonlinearitySpec,
}

pub fn setup(preset: Preset, bc: Bc, n: usize) -> Setup {
    let pp = ProblemPreset::with_defaults(preset, bc);
    let grid = Grid1D::new(n, bc).unwrap();
    Setup {
        bundle: build_bundle(&pp, &grid).unwrap(),
        nonlin: NonlinearitySpec::preset_default(preset, &pp.params),
    }
}

pub fn smooth_data(bundle: &OperatorBundle, seed: u64) -> InitialData {
    InitialData::random_smooth(&bundle.grid, seed, 2.0).unwrap()
}

pub fn first_mode(bundle: &OperatorBundle, amplitudes: [f64; 3]) -> InitialData {
    let k = bundle.grid.mode_range().find(|k| *k > 0).unwrap();
    InitialData::single_mode(&bundle.grid, k, amplitudes).unwrap()
}

/// Prints the one-line verdict of an acceptance criterion and returns it.
pub fn verdict(id: u32, ok: bool, detail: &str) -> bool {
    println!("criterion {id}: {} | {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn dense(op: &DiscreteOperator) -> DMatrix<f64> {
    let n = op.dim();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = op.diag()[i];
    }
    for (i, o) in op.offdiag().iter().enumerate() {
        m[(i, i + 1)] = *o;
        m[(i + 1, i)] = *o;
    }
    m
}

/// Dense matrix of the linear elliptic operator
/// `L + h B1 + h^2 (A2 + s) + eta h^2 B2 (I + h A1)^{-1}`.
pub fn dense_elliptic(b: &OperatorBundle, h: f64, s: f64) -> DMatrix<f64> {
    let n = b.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let res = (&id + dense(&b.a1) * h).try_inverse().unwrap();
    dense(&b.l) + dense(&b.b1) * h + (dense(&b.a2) + &id * s) * (h * h) + dense(&b.b2) * res * (b.eta * h * h)
}
