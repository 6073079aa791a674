use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

use super::grid::{Bc, Grid1D};
use super::matrix::{assemble_laplacian, DiscreteOperator, OperatorKind};

/// The five model problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// Linearized coupled sound and heat flow.
    P1,
    /// Weakly damped phase-field wave equation (`B1 = eps I`).
    P2,
    /// Strongly damped phase-field wave equation (`B1 = -eps Laplacian`).
    P3,
    /// Unit coefficients, `B1 = I`, `B2 = I`.
    P4,
    /// Unit coefficients, `B1 = -Laplacian`, `B2 = I`.
    P5,
}

/// Physical parameters of a preset. P4 and P5 ignore every field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PresetParams {
    pub sigma: f64,
    pub c: f64,
    pub m: f64,
    pub epsilon: f64,
    pub gamma: f64,
}

impl Default for PresetParams {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            c: 1.0,
            m: 0.0,
            epsilon: 1.0,
            gamma: 2.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProblemPreset {
    pub preset: Preset,
    pub params: PresetParams,
    pub bc: Bc,
}

impl ProblemPreset {
    pub fn new(preset: Preset, params: PresetParams, bc: Bc) -> Self {
        Self { preset, params, bc }
    }

    pub fn with_defaults(preset: Preset, bc: Bc) -> Self {
        Self::new(preset, PresetParams::default(), bc)
    }

    pub fn validate(&self) -> Result<()> {
        if matches!(self.preset, Preset::P4 | Preset::P5) {
            return Ok(());
        }
        let p = &self.params;
        let bad = |field, reason: String| Err(Error::InvalidParameter { field, reason });
        if !(p.gamma > 1.0) || !p.gamma.is_finite() {
            return bad("gamma", format!("must exceed 1, got {}", p.gamma));
        }
        if !(p.sigma > 0.0) || !p.sigma.is_finite() {
            return bad("sigma", format!("must be positive, got {}", p.sigma));
        }
        if !(p.c > 0.0) || !p.c.is_finite() {
            return bad("c", format!("must be positive, got {}", p.c));
        }
        if !p.m.is_finite() {
            return bad("m", format!("must be finite, got {}", p.m));
        }
        if matches!(self.preset, Preset::P2 | Preset::P3) && (!(p.epsilon >= 0.0) || !p.epsilon.is_finite()) {
            return bad("epsilon", format!("must be nonnegative, got {}", p.epsilon));
        }
        Ok(())
    }

    /// Coupling coefficient in front of the time derivative of `phi` in the heat equation.
    pub fn eta(&self) -> f64 {
        match self.preset {
            Preset::P4 | Preset::P5 => 1.0,
            _ => self.params.gamma - 1.0,
        }
    }
}

/// The full operator tuple of the abstract problem on one grid.
#[derive(Clone, Debug)]
pub struct OperatorBundle {
    pub l: DiscreteOperator,
    pub a1: DiscreteOperator,
    pub a2: DiscreteOperator,
    pub b1: DiscreteOperator,
    pub b2: DiscreteOperator,
    pub eta: f64,
    /// Coercivity constant of `L`.
    pub c_l: f64,
    /// Relative bound of `B2` with respect to `A1`.
    pub c_a1b2: f64,
    pub grid: Grid1D,
}

pub fn build_bundle(preset: &ProblemPreset, grid: &Grid1D) -> Result<OperatorBundle> {
    preset.validate()?;
    if preset.bc != grid.bc() {
        return Err(Error::InvalidParameter {
            field: "bc",
            reason: format!("preset uses {:?} but grid is {:?}", preset.bc, grid.bc()),
        });
    }
    let n = grid.n();
    let p = &preset.params;
    let id = DiscreteOperator::identity_scaled(n, 1.0);
    let (a1, a2, b1, b2) = match preset.preset {
        Preset::P1 | Preset::P2 | Preset::P3 => {
            let a1 = assemble_laplacian(grid, p.sigma)?;
            let wave = assemble_laplacian(grid, p.c * p.c)?;
            let b1 = match preset.preset {
                Preset::P1 => DiscreteOperator::zero(n),
                Preset::P2 => DiscreteOperator::identity_scaled(n, p.epsilon),
                _ if p.epsilon == 0.0 => DiscreteOperator::zero(n),
                _ => assemble_laplacian(grid, p.epsilon)?,
            };
            (a1, wave.clone(), b1, wave)
        }
        Preset::P4 | Preset::P5 => {
            let lap = assemble_laplacian(grid, 1.0)?;
            let b1 = if preset.preset == Preset::P4 {
                id.clone()
            } else {
                lap.clone()
            };
            (lap.clone(), lap, b1, id.clone())
        }
    };
    OperatorBundle::new(id, a1, a2, b1, b2, preset.eta(), 1.0, *grid)
}

/// Output of [`OperatorBundle::estimate_structural_constants`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructuralConstants {
    pub c_a1b2: f64,
    pub h_tilde: f64,
}

/// Numerical audit of the structural conditions on one bundle.
#[derive(Clone, Debug, Default)]
pub struct BundleAudit {
    /// Smallest eigenvalue of each of L, A1, A2, B1, B2 relative to its norm.
    pub min_relative_eigenvalue: [f64; 5],
    pub l_min_eigenvalue: f64,
    /// max |(B1 w, A2 z) - (B1 z, A2 w)| / (|w||z||B1||A2|)
    pub cross_symmetry: f64,
    /// min (B1 w, A2 w) / (|w|^2 |B1||A2|), sign is what matters
    pub b1a2_positivity: f64,
    /// min (B2 w, A1 w) / (|w|^2 |B2||A1|)
    pub b2a1_positivity: f64,
    /// max |B2 w| / (|A1 w| + |w|) over the samples
    pub a5_ratio: f64,
}

impl BundleAudit {
    pub fn passes(&self, c_l: f64, c_a1b2: f64) -> bool {
        self.min_relative_eigenvalue.iter().all(|e| *e >= -1e-12)
            && self.l_min_eigenvalue >= c_l * (1.0 - 1e-12)
            && self.cross_symmetry <= 1e-12
            && self.b1a2_positivity >= -1e-12
            && self.b2a1_positivity >= -1e-12
            && self.a5_ratio <= c_a1b2 * (1.0 + 1e-12)
    }
}

impl OperatorBundle {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        l: DiscreteOperator,
        a1: DiscreteOperator,
        a2: DiscreteOperator,
        b1: DiscreteOperator,
        b2: DiscreteOperator,
        eta: f64,
        c_l: f64,
        grid: Grid1D,
    ) -> Result<Self> {
        for op in [&l, &a1, &a2, &b1, &b2] {
            check_dim(grid.n(), op.dim())?;
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidParameter {
                field: "eta",
                reason: format!("must be positive, got {eta}"),
            });
        }
        if !(c_l > 0.0) {
            return Err(Error::InvalidParameter {
                field: "c_l",
                reason: format!("must be positive, got {c_l}"),
            });
        }
        let mut bundle = Self {
            l,
            a1,
            a2,
            b1,
            b2,
            eta,
            c_l,
            c_a1b2: f64::NAN,
            grid,
        };
        bundle.c_a1b2 = bundle.relative_bound()?;
        Ok(bundle)
    }

    pub fn dim(&self) -> usize {
        self.grid.n()
    }

    /// `(op u, w)_H`.
    pub fn h_form(&self, op: &DiscreteOperator, u: &[f64], w: &[f64]) -> Result<f64> {
        Ok(self.grid.dx() * op.form(u, w)?)
    }

    /// `C_{A1,B2}` together with the solvability threshold `h_tilde` for a
    /// given Lipschitz constant of the lower-order term.
    pub fn estimate_structural_constants(&self, c_lip: f64) -> Result<StructuralConstants> {
        let c = self.relative_bound()?;
        Ok(StructuralConstants {
            c_a1b2: c,
            h_tilde: h_tilde(self.c_l, c_lip, self.eta, c)?,
        })
    }

    /// Largest generalized eigenvalue of `(B2^T B2, A1^T A1 + I)`, square
    /// rooted. Since `|A1 x| + |x| >= sqrt(|A1 x|^2 + |x|^2)` this bounds the
    /// ratio `|B2 x| / (|A1 x| + |x|)` from above, so it is an admissible
    /// relative-boundedness constant.
    fn relative_bound(&self) -> Result<f64> {
        if self.b2.is_zero() {
            return Ok(0.0);
        }
        // Commuting modal operators: closed form over the spectrum.
        if let Some(c) = self.modal_relative_bound() {
            return Ok(c);
        }
        // lambda >= lambda_max iff lambda (A1^2 + I) - B2^2 is positive
        // definite; bisect on the success of a banded Cholesky.
        let (m0, m1, m2) = square_bands(&self.a1, 1.0);
        let (b0, b1, b2) = square_bands(&self.b2, 0.0);
        let spd = |lam: f64| {
            let comb = |m: &[f64], b: &[f64]| -> Vec<f64> { m.iter().zip(b).map(|(x, y)| lam * x - y).collect() };
            is_positive_definite(&comb(&m0, &b0), &comb(&m1, &b1), &comb(&m2, &b2))
        };
        let mut hi = self.b2.inf_norm().powi(2) * (1.0 + 1e-12) + f64::MIN_POSITIVE;
        if !spd(hi) {
            return Err(Error::NotRelativelyBounded(format!("no bound below |B2|^2 = {hi}")));
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi {
                break;
            }
            if spd(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi.sqrt())
    }

    fn modal_relative_bound(&self) -> Option<f64> {
        let mut best: f64 = 0.0;
        for k in self.grid.mode_range() {
            let mu = self.grid.laplacian_eigenvalue(k);
            let a = self.a1.symbol(mu)?;
            let b = self.b2.symbol(mu)?;
            best = best.max(b * b / (a * a + 1.0));
        }
        Some(best.sqrt())
    }

    /// Coercivity constant `omega_{j,alpha}` with
    /// `(A_j w, w) + alpha |w|^2 >= omega |w|_V^2`. Only available for
    /// Laplacian-type `A_j`; diagnostics only.
    pub fn omega(&self, j: usize, alpha: f64) -> Option<f64> {
        let op = match j {
            1 => &self.a1,
            2 => &self.a2,
            _ => return None,
        };
        match op.kind() {
            OperatorKind::LaplacianScaled(k) => Some(k.min(alpha)),
            _ => None,
        }
    }

    /// Samples random vectors and checks the structural conditions.
    pub fn audit(&self, samples: usize, seed: u64) -> Result<BundleAudit> {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = BundleAudit {
            b1a2_positivity: f64::INFINITY,
            b2a1_positivity: f64::INFINITY,
            ..Default::default()
        };
        for (slot, op) in [&self.l, &self.a1, &self.a2, &self.b1, &self.b2].iter().enumerate() {
            let (lo, _) = op.eigen_bounds();
            let scale = op.inf_norm();
            out.min_relative_eigenvalue[slot] = if scale > 0.0 { lo / scale } else { 0.0 };
        }
        out.l_min_eigenvalue = self.l.eigen_bounds().0;
        let nb1 = self.b1.inf_norm();
        let na2 = self.a2.inf_norm();
        let nb2 = self.b2.inf_norm();
        let na1 = self.a1.inf_norm();
        let g = &self.grid;
        for _ in 0..samples {
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b1w = self.b1.apply(&w)?;
            let b1z = self.b1.apply(&z)?;
            let a2w = self.a2.apply(&w)?;
            let a2z = self.a2.apply(&z)?;
            let nw = g.h_norm(&w)?;
            let nz = g.h_norm(&z)?;
            let lhs = g.h_inner(&b1w, &a2z)?;
            let rhs = g.h_inner(&b1z, &a2w)?;
            let denom = nw * nz * nb1 * na2;
            if denom > 0.0 {
                out.cross_symmetry = out.cross_symmetry.max((lhs - rhs).abs() / denom);
                out.b1a2_positivity = out.b1a2_positivity.min(g.h_inner(&b1w, &a2w)? / (nw * nw * nb1 * na2));
            }
            let b2w = self.b2.apply(&w)?;
            let a1w = self.a1.apply(&w)?;
            let denom = nw * nw * nb2 * na1;
            if denom > 0.0 {
                out.b2a1_positivity = out.b2a1_positivity.min(g.h_inner(&b2w, &a1w)? / denom);
            }
            let ratio = g.h_norm(&b2w)? / (g.h_norm(&a1w)? + nw);
            out.a5_ratio = out.a5_ratio.max(ratio);
        }
        if !out.b1a2_positivity.is_finite() {
            out.b1a2_positivity = 0.0;
        }
        if !out.b2a1_positivity.is_finite() {
            out.b2a1_positivity = 0.0;
        }
        Ok(out)
    }
}

/// Step-size threshold below which the per-step nonlinear elliptic problem
/// is uniquely solvable:
///
/// `h~ = sqrt(c_L/K + eta^2 C^2 / (4K)) - eta C / (2K)`, `K = 1 + C_lip + eta C`.
pub fn h_tilde(c_l: f64, c_lip: f64, eta: f64, c_a1b2: f64) -> Result<f64> {
    if !(c_l > 0.0) || !(c_lip >= 0.0) || !(eta > 0.0) || !(c_a1b2 >= 0.0) {
        return Err(Error::InvalidParameter {
            field: "h_tilde",
            reason: format!("c_L={c_l}, C_lip={c_lip}, eta={eta}, C_A1B2={c_a1b2}"),
        });
    }
    let k = 1.0 + c_lip + eta * c_a1b2;
    let ec = eta * c_a1b2;
    Ok((c_l / k + ec * ec / (4.0 * k)).sqrt() - ec / (2.0 * k))
}

/// Bands `(main, first, second)` of `A^T A + shift I` for symmetric tridiagonal `A`.
fn square_bands(a: &DiscreteOperator, shift: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = a.dim();
    let d = a.diag();
    let e = a.offdiag();
    let off = |i: isize| -> f64 {
        if i >= 0 && (i as usize) < n - 1 {
            e[i as usize]
        } else {
            0.0
        }
    };
    let m0 = (0..n)
        .map(|i| d[i] * d[i] + off(i as isize - 1).powi(2) + off(i as isize).powi(2) + shift)
        .collect();
    let m1 = (0..n.saturating_sub(1)).map(|i| e[i] * (d[i] + d[i + 1])).collect();
    let m2 = (0..n.saturating_sub(2)).map(|i| e[i] * e[i + 1]).collect();
    (m0, m1, m2)
}

/// Whether the symmetric pentadiagonal matrix with the given bands admits
/// a Cholesky factorization.
fn is_positive_definite(m0: &[f64], m1: &[f64], m2: &[f64]) -> bool {
    // rows of the lower factor: (l_{i,i-2}, l_{i,i-1}, l_{i,i})
    let mut rows = vec![[0.0f64; 3]; m0.len()];
    for i in 0..m0.len() {
        let l2 = if i >= 2 { m2[i - 2] / rows[i - 2][2] } else { 0.0 };
        let l1 = if i >= 1 {
            let mut v = m1[i - 1];
            if i >= 2 {
                v -= l2 * rows[i - 1][1];
            }
            v / rows[i - 1][2]
        } else {
            0.0
        };
        let diag = m0[i] - l2 * l2 - l1 * l1;
        if !(diag > 0.0) {
            return false;
        }
        rows[i] = [l2, l1, diag.sqrt()];
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_presets() -> Vec<ProblemPreset> {
        let mut out = vec![];
        for bc in [Bc::Dirichlet, Bc::Neumann] {
            for p in [Preset::P1, Preset::P2, Preset::P3, Preset::P4, Preset::P5] {
                out.push(ProblemPreset::with_defaults(p, bc));
            }
        }
        out
    }

    #[test]
    fn p1_shares_laplacian_between_a1_a2_b2() {
        let g = Grid1D::dirichlet(12).unwrap();
        let b = build_bundle(&ProblemPreset::with_defaults(Preset::P1, Bc::Dirichlet), &g).unwrap();
        assert_eq!(b.a1, b.a2);
        assert_eq!(b.a2, b.b2);
        assert!(b.b1.is_zero());
        assert_eq!(b.eta, 1.0);
        assert_eq!(b.c_l, 1.0);
    }

    #[test]
    fn p4_coupling_is_identity() {
        let g = Grid1D::dirichlet(12).unwrap();
        let b = build_bundle(&ProblemPreset::with_defaults(Preset::P4, Bc::Dirichlet), &g).unwrap();
        assert_eq!(b.b2, DiscreteOperator::identity_scaled(12, 1.0));
        assert_eq!(b.b1, DiscreteOperator::identity_scaled(12, 1.0));
        assert_eq!(b.eta, 1.0);
        assert!(b.c_a1b2 <= 1.0);
    }

    #[test]
    fn p3_with_zero_epsilon_has_no_damping() {
        let g = Grid1D::dirichlet(8).unwrap();
        let mut pp = ProblemPreset::with_defaults(Preset::P3, Bc::Dirichlet);
        pp.params.epsilon = 0.0;
        let b = build_bundle(&pp, &g).unwrap();
        assert!(b.b1.is_zero());
    }

    #[test]
    fn invalid_parameters_rejected() {
        let g = Grid1D::dirichlet(8).unwrap();
        for (field, val) in [("gamma", 1.0), ("sigma", 0.0), ("c", -1.0)] {
            let mut pp = ProblemPreset::with_defaults(Preset::P1, Bc::Dirichlet);
            match field {
                "gamma" => pp.params.gamma = val,
                "sigma" => pp.params.sigma = val,
                _ => pp.params.c = val,
            }
            let err = build_bundle(&pp, &g).unwrap_err();
            assert!(matches!(err, Error::InvalidParameter { field: f, .. } if f == field));
        }
        let mut pp = ProblemPreset::with_defaults(Preset::P2, Bc::Dirichlet);
        pp.params.epsilon = -0.5;
        assert!(build_bundle(&pp, &g).is_err());
        // bc mismatch
        let pp = ProblemPreset::with_defaults(Preset::P2, Bc::Neumann);
        assert!(build_bundle(&pp, &g).is_err());
    }

    #[test]
    fn h_tilde_unit_constants() {
        let h = h_tilde(1.0, 0.0, 1.0, 1.0).unwrap();
        assert!((h - (0.625f64.sqrt() - 0.25)).abs() < 1e-12);
        assert!((h - 0.5406).abs() < 1e-4);
    }

    #[test]
    fn p1_relative_bound_below_c2_over_sigma() {
        let g = Grid1D::dirichlet(16).unwrap();
        let mut pp = ProblemPreset::with_defaults(Preset::P1, Bc::Dirichlet);
        pp.params.c = 1.5;
        pp.params.sigma = 0.5;
        let b = build_bundle(&pp, &g).unwrap();
        assert!(b.c_a1b2 <= 1.5 * 1.5 / 0.5);
        assert!(b.c_a1b2 > 0.99 * 4.5);
    }

    #[test]
    fn general_operators_match_modal_bound() {
        let g = Grid1D::dirichlet(16).unwrap();
        let pp = ProblemPreset::with_defaults(Preset::P1, Bc::Dirichlet);
        let modal = build_bundle(&pp, &g).unwrap();
        let as_general = |op: &DiscreteOperator| {
            DiscreteOperator::general(op.diag().to_vec(), op.offdiag().to_vec()).unwrap()
        };
        let b = OperatorBundle::new(
            modal.l.clone(),
            as_general(&modal.a1),
            modal.a2.clone(),
            modal.b1.clone(),
            as_general(&modal.b2),
            modal.eta,
            1.0,
            g,
        )
        .unwrap();
        assert!((b.c_a1b2 - modal.c_a1b2).abs() < 1e-10, "{} vs {}", b.c_a1b2, modal.c_a1b2);
    }

    #[test]
    fn every_preset_passes_its_audit() {
        for pp in all_presets() {
            let g = Grid1D::new(24, pp.bc).unwrap();
            let b = build_bundle(&pp, &g).unwrap();
            let audit = b.audit(100, 42).unwrap();
            assert!(audit.passes(b.c_l, b.c_a1b2), "{pp:?}: {audit:?}");
        }
    }

    #[test]
    fn omega_is_min_of_coefficient_and_alpha() {
        let g = Grid1D::dirichlet(8).unwrap();
        let mut pp = ProblemPreset::with_defaults(Preset::P1, Bc::Dirichlet);
        pp.params.c = 2.0;
        let b = build_bundle(&pp, &g).unwrap();
        assert_eq!(b.omega(2, 1.0), Some(1.0));
        assert_eq!(b.omega(2, 10.0), Some(4.0));
        assert_eq!(b.omega(3, 1.0), None);
    }
}
