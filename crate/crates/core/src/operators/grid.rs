use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Homogeneous boundary condition, applied to both the temperature and the
/// wave potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bc {
    Dirichlet,
    Neumann,
}

/// Uniform grid on the unit interval.
///
/// Dirichlet grids are vertex-centred with the two boundary nodes removed
/// (`dx = 1/(n+1)`, `x_i = i dx`); Neumann grids are cell-centred
/// (`dx = 1/n`, `x_i = (i - 1/2) dx`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    n_interior: usize,
    dx: f64,
    bc: Bc,
}

impl Grid1D {
    pub fn new(n_interior: usize, bc: Bc) -> Result<Self> {
        if n_interior < 2 {
            return Err(Error::InvalidParameter {
                field: "n_interior",
                reason: format!("need at least 2 unknowns, got {n_interior}"),
            });
        }
        let dx = match bc {
            Bc::Dirichlet => 1.0 / (n_interior as f64 + 1.0),
            Bc::Neumann => 1.0 / n_interior as f64,
        };
        Ok(Self { n_interior, dx, bc })
    }

    pub fn dirichlet(n_interior: usize) -> Result<Self> {
        Self::new(n_interior, Bc::Dirichlet)
    }

    pub fn neumann(n_interior: usize) -> Result<Self> {
        Self::new(n_interior, Bc::Neumann)
    }

    pub fn n(&self) -> usize {
        self.n_interior
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn bc(&self) -> Bc {
        self.bc
    }

    /// Coordinate of unknown `i` (zero based).
    pub fn x(&self, i: usize) -> f64 {
        match self.bc {
            Bc::Dirichlet => (i as f64 + 1.0) * self.dx,
            Bc::Neumann => (i as f64 + 0.5) * self.dx,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_interior).map(|i| self.x(i)).collect()
    }

    /// Range of admissible mode numbers: `1..=n` for Dirichlet, `0..n` for Neumann.
    pub fn mode_range(&self) -> std::ops::Range<usize> {
        match self.bc {
            Bc::Dirichlet => 1..self.n_interior + 1,
            Bc::Neumann => 0..self.n_interior,
        }
    }

    /// Grid samples of the `k`-th eigenvector of the discrete Laplacian:
    /// `sin(k pi x)` for Dirichlet, `cos(k pi x)` for Neumann.
    pub fn mode(&self, k: usize) -> Vec<f64> {
        let kpi = k as f64 * std::f64::consts::PI;
        (0..self.n_interior)
            .map(|i| match self.bc {
                Bc::Dirichlet => (kpi * self.x(i)).sin(),
                Bc::Neumann => (kpi * self.x(i)).cos(),
            })
            .collect()
    }

    /// Eigenvalue of `-Laplacian_h` on mode `k`: `(2/dx^2)(1 - cos(k pi dx))`.
    pub fn laplacian_eigenvalue(&self, k: usize) -> f64 {
        let kpi_dx = k as f64 * std::f64::consts::PI * self.dx;
        // 4 sin^2(x/2) avoids cancellation for the low modes.
        let s = (0.5 * kpi_dx).sin();
        4.0 * s * s / (self.dx * self.dx)
    }

    /// Squared H-norm of `mode(k)`.
    pub fn mode_norm_sq(&self, k: usize) -> f64 {
        match (self.bc, k) {
            (Bc::Neumann, 0) => 1.0,
            _ => 0.5,
        }
    }

    /// Discrete L2 inner product `dx * sum u_i w_i`.
    pub fn h_inner(&self, u: &[f64], w: &[f64]) -> Result<f64> {
        check_dim(self.n_interior, u.len())?;
        check_dim(self.n_interior, w.len())?;
        Ok(self.dx * dot(u, w))
    }

    pub fn h_norm(&self, u: &[f64]) -> Result<f64> {
        Ok(self.h_inner(u, u)?.sqrt())
    }

    /// Discrete Dirichlet form `dx * sum ((u_{i+1} - u_i)/dx)^2`.
    ///
    /// Dirichlet grids include the two differences against the zero ghost
    /// values; Neumann grids only use interior differences.
    pub fn gradient_sq(&self, u: &[f64]) -> Result<f64> {
        check_dim(self.n_interior, u.len())?;
        let mut acc: f64 = u.windows(2).map(|p| (p[1] - p[0]).powi(2)).sum();
        if self.bc == Bc::Dirichlet {
            acc += u[0] * u[0] + u[self.n_interior - 1] * u[self.n_interior - 1];
        }
        Ok(acc / self.dx)
    }

    pub fn v_norm_sq(&self, u: &[f64]) -> Result<f64> {
        Ok(self.h_inner(u, u)? + self.gradient_sq(u)?)
    }

    pub fn v_norm(&self, u: &[f64]) -> Result<f64> {
        Ok(self.v_norm_sq(u)?.sqrt())
    }
}

pub(crate) fn dot(u: &[f64], w: &[f64]) -> f64 {
    u.iter().zip(w).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_follows_bc() {
        let g = Grid1D::dirichlet(3).unwrap();
        assert_eq!(g.dx(), 0.25);
        assert_eq!(g.points(), vec![0.25, 0.5, 0.75]);
        let g = Grid1D::neumann(4).unwrap();
        assert_eq!(g.dx(), 0.25);
        assert_eq!(g.x(0), 0.125);
        assert!(Grid1D::dirichlet(1).is_err());
    }

    #[test]
    fn zero_vector_has_zero_norms() {
        let g = Grid1D::dirichlet(10).unwrap();
        let u = vec![0.0; 10];
        assert_eq!(g.h_norm(&u).unwrap(), 0.0);
        assert_eq!(g.v_norm(&u).unwrap(), 0.0);
    }

    #[test]
    fn constant_has_no_gradient_under_neumann() {
        let g = Grid1D::neumann(17).unwrap();
        let u = vec![1.0; 17];
        assert!((g.v_norm(&u).unwrap() - 1.0).abs() < 1e-14);
        assert!((g.h_norm(&u).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sine_mode_v_norm_matches_eigenvalue() {
        let g = Grid1D::dirichlet(63).unwrap();
        for k in [1, 5, 31, 63] {
            let s = g.mode(k);
            let h2 = g.h_inner(&s, &s).unwrap();
            let mu = g.laplacian_eigenvalue(k);
            let v2 = g.v_norm_sq(&s).unwrap();
            assert!((v2 - h2 * (1.0 + mu)).abs() <= 1e-12 * v2, "k={k}");
            assert!((h2 - g.mode_norm_sq(k)).abs() < 1e-13);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let g = Grid1D::dirichlet(4).unwrap();
        assert!(matches!(
            g.h_inner(&[1.0; 4], &[1.0; 3]),
            Err(Error::DimensionMismatch { expected: 4, got: 3 })
        ));
    }
}
