//! Pointwise nonlinearities: the monotone part `beta` (with convex potential),
//! the Lipschitz perturbation `pi`, and the Yosida approximation of `beta`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{Grid1D, Preset, PresetParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Beta {
    Zero,
    /// `a r^3`
    Cubic { scale: f64 },
    /// `sum_j coeffs[j] r^(j+1)`; even powers must vanish and odd ones be
    /// nonnegative.
    OddPolynomial { coeffs: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pi {
    Zero,
    /// `slope * r`; `slope = -m^2` gives the lower-order term of the
    /// linearized sound/heat system.
    Linear { slope: f64 },
    /// `amplitude * sin(r)`
    ScaledSine { amplitude: f64 },
}

/// Growth data `(p, q, C_Phi)` of the local Lipschitz bound on `beta`.
/// Reported only; the algorithms never consult it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Growth {
    pub p: f64,
    pub q: f64,
    pub c_phi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    pub beta: Beta,
    pub pi: Pi,
}

/// Regularization parameter of the Yosida approximation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct YosidaParam(f64);

impl YosidaParam {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda.is_finite() {
            Ok(Self(lambda))
        } else {
            Err(Error::InvalidParameter {
                field: "lambda",
                reason: format!("must be positive, got {lambda}"),
            })
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for NonlinearitySpec {
    fn default() -> Self {
        Self::linear()
    }
}

impl NonlinearitySpec {
    pub fn new(beta: Beta, pi: Pi) -> Result<Self> {
        let spec = Self { beta, pi };
        spec.validate()?;
        Ok(spec)
    }

    /// `beta = 0`, `pi = 0`.
    pub fn linear() -> Self {
        Self {
            beta: Beta::Zero,
            pi: Pi::Zero,
        }
    }

    pub fn cubic(scale: f64) -> Self {
        Self {
            beta: Beta::Cubic { scale },
            pi: Pi::Zero,
        }
    }

    /// Default nonlinearity of a model problem: `pi(r) = -m^2 r` for P1,
    /// `beta(r) = r^3` for P2 and P3, none for P4 and P5.
    pub fn preset_default(preset: Preset, params: &PresetParams) -> Self {
        match preset {
            Preset::P1 => Self {
                beta: Beta::Zero,
                pi: Pi::Linear {
                    slope: 0.0 - params.m * params.m,
                },
            },
            Preset::P2 | Preset::P3 => Self::cubic(1.0),
            Preset::P4 | Preset::P5 => Self::linear(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.beta {
            Beta::Zero => {}
            Beta::Cubic { scale } => {
                if !(*scale > 0.0) || !scale.is_finite() {
                    return Err(Error::InvalidParameter {
                        field: "beta.scale",
                        reason: format!("must be positive, got {scale}"),
                    });
                }
            }
            Beta::OddPolynomial { coeffs } => {
                for (j, c) in coeffs.iter().enumerate() {
                    let power = j + 1;
                    if !c.is_finite() || (power % 2 == 0 && *c != 0.0) || *c < 0.0 {
                        return Err(Error::InvalidParameter {
                            field: "beta.coeffs",
                            reason: format!(
                                "coefficient of r^{power} is {c}; need zero even powers and nonnegative odd powers"
                            ),
                        });
                    }
                }
            }
        }
        let bad = match self.pi {
            Pi::Zero => None,
            Pi::Linear { slope } => (!slope.is_finite()).then_some(slope),
            Pi::ScaledSine { amplitude } => (!amplitude.is_finite()).then_some(amplitude),
        };
        if let Some(v) = bad {
            return Err(Error::InvalidParameter {
                field: "pi",
                reason: format!("coefficient must be finite, got {v}"),
            });
        }
        Ok(())
    }

    pub fn beta(&self, r: f64) -> f64 {
        match &self.beta {
            Beta::Zero => 0.0,
            Beta::Cubic { scale } => scale * r * r * r,
            Beta::OddPolynomial { coeffs } => horner(coeffs, r) * r,
        }
    }

    pub fn beta_prime(&self, r: f64) -> f64 {
        match &self.beta {
            Beta::Zero => 0.0,
            Beta::Cubic { scale } => 3.0 * scale * r * r,
            Beta::OddPolynomial { coeffs } => {
                let d: Vec<f64> = coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, c)| (j + 1) as f64 * c)
                    .collect();
                horner(&d, r)
            }
        }
    }

    /// Convex potential with `beta_hat(0) = 0` and `beta_hat' = beta`.
    pub fn beta_potential(&self, r: f64) -> f64 {
        match &self.beta {
            Beta::Zero => 0.0,
            Beta::Cubic { scale } => 0.25 * scale * r.powi(4),
            Beta::OddPolynomial { coeffs } => {
                let d: Vec<f64> = coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c / (j + 2) as f64)
                    .collect();
                horner(&d, r) * r * r
            }
        }
    }

    pub fn pi(&self, r: f64) -> f64 {
        match self.pi {
            Pi::Zero => 0.0,
            Pi::Linear { slope } => slope * r,
            Pi::ScaledSine { amplitude } => amplitude * r.sin(),
        }
    }

    pub fn pi_prime(&self, r: f64) -> f64 {
        match self.pi {
            Pi::Zero => 0.0,
            Pi::Linear { slope } => slope,
            Pi::ScaledSine { amplitude } => amplitude * r.cos(),
        }
    }

    /// Lipschitz constant of `pi`.
    pub fn c_lip(&self) -> f64 {
        match self.pi {
            Pi::Zero => 0.0,
            Pi::Linear { slope } => slope.abs(),
            Pi::ScaledSine { amplitude } => amplitude.abs(),
        }
    }

    pub fn growth(&self) -> Growth {
        match &self.beta {
            Beta::Zero => Growth {
                p: 1.0,
                q: 1.0,
                c_phi: 0.0,
            },
            Beta::Cubic { scale } => Growth {
                p: 2.0,
                q: 2.0,
                c_phi: 3.0 * scale,
            },
            Beta::OddPolynomial { coeffs } => {
                let degree = coeffs.iter().rposition(|c| *c != 0.0).map_or(1, |j| j + 1);
                let p = (degree as f64 - 1.0).max(1.0);
                let c_phi = coeffs.iter().enumerate().map(|(j, c)| (j + 1) as f64 * c).sum();
                Growth { p, q: p, c_phi }
            }
        }
    }

    pub fn beta_is_zero(&self) -> bool {
        match &self.beta {
            Beta::Zero => true,
            Beta::Cubic { .. } => false,
            Beta::OddPolynomial { coeffs } => coeffs.iter().all(|c| *c == 0.0),
        }
    }

    pub fn pi_is_zero(&self) -> bool {
        match self.pi {
            Pi::Zero => true,
            Pi::Linear { slope } => slope == 0.0,
            Pi::ScaledSine { amplitude } => amplitude == 0.0,
        }
    }

    /// `beta = 0` and `pi` linear: the problem is linear.
    pub fn is_linear(&self) -> bool {
        self.beta_is_zero() && !matches!(self.pi, Pi::ScaledSine { amplitude } if amplitude != 0.0)
    }

    /// Slope of `pi` when it is linear.
    pub fn linear_slope(&self) -> Option<f64> {
        match self.pi {
            Pi::Zero => Some(0.0),
            Pi::Linear { slope } => Some(slope),
            Pi::ScaledSine { amplitude } if amplitude == 0.0 => Some(0.0),
            Pi::ScaledSine { .. } => None,
        }
    }

    /// Resolvent `J_lambda(r)`: the unique `s` with `s + lambda beta(s) = r`.
    pub fn beta_resolvent(&self, lambda: YosidaParam, r: f64) -> Result<f64> {
        let lambda = lambda.get();
        if self.beta_is_zero() || r == 0.0 {
            return Ok(r);
        }
        let tol = 1e-14 * (1.0 + r.abs());
        let f = |s: f64| s + lambda * self.beta(s) - r;
        // beta(0) = 0 and monotonicity put the root between 0 and r
        let (mut lo, mut hi) = if r > 0.0 { (0.0, r) } else { (r, 0.0) };
        let mut s = r;
        for _ in 0..400 {
            let fs = f(s);
            if fs.abs() <= tol {
                return Ok(s);
            }
            if fs > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let df = 1.0 + lambda * self.beta_prime(s);
            let mut next = s - fs / df;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if next == s || hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()) {
                return Ok(next);
            }
            s = next;
        }
        Err(Error::YosidaNonConvergence { r })
    }

    /// Yosida approximation `Phi_lambda(r) = (r - J_lambda(r)) / lambda`,
    /// evaluated as `beta(J_lambda(r))` which is the same quantity without
    /// the cancellation for small `lambda`.
    pub fn yosida(&self, lambda: YosidaParam, r: f64) -> Result<f64> {
        let s = self.beta_resolvent(lambda, r)?;
        Ok(self.beta(s))
    }

    /// `Phi_lambda(r)` and its derivative `beta'(s) / (1 + lambda beta'(s))`.
    pub fn yosida_with_derivative(&self, lambda: YosidaParam, r: f64) -> Result<(f64, f64)> {
        let s = self.beta_resolvent(lambda, r)?;
        let bp = self.beta_prime(s);
        Ok((self.beta(s), bp / (1.0 + lambda.get() * bp)))
    }

    /// Convex functional `i(u) = dx * sum beta_hat(u_i)`.
    pub fn potential_total(&self, grid: &Grid1D, u: &[f64]) -> Result<f64> {
        crate::error::check_dim(grid.n(), u.len())?;
        Ok(grid.dx() * u.iter().map(|r| self.beta_potential(*r)).sum::<f64>())
    }
}

fn horner(coeffs: &[f64], r: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c)
}
