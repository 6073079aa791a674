use crate::error::{check_dim, Error, Result};

use super::grid::{Bc, Grid1D};

/// Structural tag of an assembled operator. The modal oracle relies on it to
/// read off the operator's action on the Laplacian eigenvectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OperatorKind {
    Zero,
    /// `scale * I`
    IdentityScaled(f64),
    /// `scale * (-Laplacian_h)`
    LaplacianScaled(f64),
    /// Anything else (user supplied entries).
    General,
}

/// Symmetric tridiagonal matrix. Only one off-diagonal is stored, so the
/// matrix is symmetric by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteOperator {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
    kind: OperatorKind,
}

impl DiscreteOperator {
    pub fn zero(dim: usize) -> Self {
        Self {
            diag: vec![0.0; dim],
            offdiag: vec![0.0; dim.saturating_sub(1)],
            kind: OperatorKind::Zero,
        }
    }

    pub fn identity_scaled(dim: usize, scale: f64) -> Self {
        if scale == 0.0 {
            return Self::zero(dim);
        }
        Self {
            diag: vec![scale; dim],
            offdiag: vec![0.0; dim.saturating_sub(1)],
            kind: OperatorKind::IdentityScaled(scale),
        }
    }

    /// User-supplied symmetric tridiagonal matrix.
    pub fn general(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        check_dim(diag.len().saturating_sub(1), offdiag.len())?;
        if diag.is_empty() {
            return Err(Error::InvalidParameter {
                field: "diag",
                reason: "empty operator".into(),
            });
        }
        Ok(Self {
            diag,
            offdiag,
            kind: OperatorKind::General,
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn is_zero(&self) -> bool {
        self.kind == OperatorKind::Zero
    }

    /// Eigenvalue of the operator on the Laplacian eigenvector whose
    /// `-Laplacian_h` eigenvalue is `mu`. `None` for general matrices.
    pub fn symbol(&self, mu: f64) -> Option<f64> {
        match self.kind {
            OperatorKind::Zero => Some(0.0),
            OperatorKind::IdentityScaled(s) => Some(s),
            OperatorKind::LaplacianScaled(s) => Some(s * mu),
            OperatorKind::General => None,
        }
    }

    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(u, &mut out)?;
        Ok(out)
    }

    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.dim();
        check_dim(n, u.len())?;
        check_dim(n, out.len())?;
        for i in 0..n {
            let mut acc = self.diag[i] * u[i];
            if i > 0 {
                acc += self.offdiag[i - 1] * u[i - 1];
            }
            if i + 1 < n {
                acc += self.offdiag[i] * u[i + 1];
            }
            out[i] = acc;
        }
        Ok(())
    }

    /// Euclidean bilinear form `u^T A w` (no quadrature weight).
    pub fn form(&self, u: &[f64], w: &[f64]) -> Result<f64> {
        check_dim(self.dim(), w.len())?;
        let au = self.apply(u)?;
        Ok(super::grid::dot(&au, w))
    }

    /// Largest absolute row sum, an upper bound on the spectral norm.
    pub fn inf_norm(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.offdiag[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.offdiag[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// `I + h * self`, as the diagonal and off-diagonal of a new matrix.
    pub fn shifted(&self, h: f64) -> (Vec<f64>, Vec<f64>) {
        let diag = self.diag.iter().map(|d| 1.0 + h * d).collect();
        let off = self.offdiag.iter().map(|o| h * o).collect();
        (diag, off)
    }

    /// Solves `(I + h A) x = rhs`.
    pub fn resolvent_solve(&self, h: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), rhs.len())?;
        if !(h > 0.0) {
            return Err(Error::InvalidParameter {
                field: "h",
                reason: format!("resolvent step must be positive, got {h}"),
            });
        }
        if self.is_zero() {
            return Ok(rhs.to_vec());
        }
        let (d, e) = self.shifted(h);
        let mut x = rhs.to_vec();
        solve_symmetric_tridiagonal(&d, &e, &mut x)?;
        Ok(x)
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.dim() {
            let b2 = if i > 0 { self.offdiag[i - 1].powi(2) } else { 0.0 };
            q = self.diag[i] - x - if i > 0 { b2 / q } else { 0.0 };
            if q == 0.0 {
                q = -f64::EPSILON * (self.diag[i].abs() + x.abs() + 1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Smallest and largest eigenvalue by bisection on the Sturm count.
    pub fn eigen_bounds(&self) -> (f64, f64) {
        let n = self.dim();
        let r = self.inf_norm();
        let lo0 = -r - 1.0;
        let hi0 = r + 1.0;
        let bisect = |index: usize| {
            // eigenvalue number `index` (0 = smallest)
            let (mut lo, mut hi) = (lo0, hi0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.count_below(mid) > index {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        };
        (bisect(0), bisect(n - 1))
    }

    /// Monotonicity audit: smallest eigenvalue >= -tol * ||A||.
    pub fn is_monotone(&self, tol: f64) -> bool {
        let (lmin, _) = self.eigen_bounds();
        lmin >= -tol * self.inf_norm().max(f64::MIN_POSITIVE)
    }
}

/// Assembles `coeff * (-Laplacian_h)` with the boundary rows of `grid`.
///
/// Dirichlet rows use zero ghost values (`2, -1` stencil everywhere);
/// Neumann rows mirror the ghost cell, so the first and last diagonal entry
/// is `1/dx^2` and constants lie in the kernel.
pub fn assemble_laplacian(grid: &Grid1D, coeff: f64) -> Result<DiscreteOperator> {
    if !(coeff > 0.0) || !coeff.is_finite() {
        return Err(Error::InvalidParameter {
            field: "coeff",
            reason: format!("Laplacian coefficient must be positive, got {coeff}"),
        });
    }
    let n = grid.n();
    let s = coeff / (grid.dx() * grid.dx());
    let mut diag = vec![2.0 * s; n];
    if grid.bc() == Bc::Neumann {
        diag[0] = s;
        diag[n - 1] = s;
    }
    Ok(DiscreteOperator {
        diag,
        offdiag: vec![-s; n - 1],
        kind: OperatorKind::LaplacianScaled(coeff),
    })
}

/// In-place `L D L^T` solve of a symmetric tridiagonal system.
pub fn solve_symmetric_tridiagonal(diag: &[f64], off: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = diag.len();
    check_dim(n, rhs.len())?;
    check_dim(n.saturating_sub(1), off.len())?;
    let mut d = vec![0.0; n];
    let mut l = vec![0.0; n.saturating_sub(1)];
    d[0] = diag[0];
    for i in 1..n {
        if d[i - 1] == 0.0 || !d[i - 1].is_finite() {
            return Err(Error::SingularSystem {
                row: i - 1,
                pivot: d[i - 1],
            });
        }
        l[i - 1] = off[i - 1] / d[i - 1];
        d[i] = diag[i] - l[i - 1] * off[i - 1];
    }
    if d[n - 1] == 0.0 || !d[n - 1].is_finite() {
        return Err(Error::SingularSystem {
            row: n - 1,
            pivot: d[n - 1],
        });
    }
    for i in 1..n {
        rhs[i] -= l[i - 1] * rhs[i - 1];
    }
    for i in 0..n {
        rhs[i] /= d[i];
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= l[i] * rhs[i + 1];
    }
    Ok(())
}
