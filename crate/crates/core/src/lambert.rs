//! Real branches of the Lambert W function and the transforms built on it.
//!
//! `W` inverts `w -> w * exp(w)`. On `[-1/e, 0)` there are two real solutions:
//! the principal branch `W0 >= -1` and the non-principal branch `W-1 <= -1`.
//! Both are computed with Halley's method from piecewise initial guesses.

use serde::{Deserialize, Serialize};
use std::f64::consts::E;

use crate::error::{Error, Result};

/// `-1/e`, the common branch point of `W0` and `W-1`.
pub const BRANCH_POINT: f64 = -1.0 / E;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub abs_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            abs_tol: 1e-12,
            max_iter: 64,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidConfig("abs_tol must be > 0".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Principal,
    NonPrincipal,
}

/// Clamps `z` onto the branch point when it lies within `abs_tol` below it.
fn clamp_branch_point(z: f64, cfg: &SolverConfig) -> Result<f64> {
    if z.is_nan() {
        return Err(Error::domain("Lambert W of NaN"));
    }
    if z < BRANCH_POINT {
        if z >= BRANCH_POINT - cfg.abs_tol {
            return Ok(BRANCH_POINT);
        }
        return Err(Error::domain(format!("Lambert W argument {z} < -1/e")));
    }
    Ok(z)
}

/// `p = sqrt(2 (e z + 1))`, the expansion variable around the branch point.
fn branch_p(z: f64) -> f64 {
    (2.0 * (E * z + 1.0)).max(0.0).sqrt()
}

/// Principal branch `W0(z)`, `z >= -1/e`.
pub fn lambert_w0(z: f64, cfg: &SolverConfig) -> Result<f64> {
    cfg.validate()?;
    let z = clamp_branch_point(z, cfg)?;
    if z == BRANCH_POINT {
        return Ok(-1.0);
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    if z.abs() < 1e-8 {
        return Ok(z * (1.0 - z * (1.0 - 1.5 * z)));
    }
    if z > E {
        // W0 > 1: solve w + ln w = ln z, which never overflows.
        let l1 = z.ln();
        let l2 = l1.ln();
        let w = l1 - l2 + l2 / l1;
        return halley_log(w, l1, cfg);
    }
    let w = if z < -0.25 {
        let p = branch_p(z);
        -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * 11.0 / 72.0))
    } else {
        // Winitzki's global approximation
        let l = z.ln_1p();
        l * (1.0 - l.ln_1p() / (2.0 + l))
    };
    halley(w, z, cfg)
}

/// Non-principal branch `W-1(z)`, `-1/e <= z < 0`.
pub fn lambert_wm1(z: f64, cfg: &SolverConfig) -> Result<f64> {
    cfg.validate()?;
    let z = clamp_branch_point(z, cfg)?;
    if z >= 0.0 {
        return Err(Error::domain(format!(
            "non-principal Lambert W requires -1/e <= z < 0, got {z}"
        )));
    }
    if z == BRANCH_POINT {
        return Ok(-1.0);
    }
    let w = if z < -0.25 {
        let p = branch_p(z);
        -1.0 - p * (1.0 + p * (1.0 / 3.0 + p * 11.0 / 72.0))
    } else {
        let l1 = (-z).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    };
    halley(w, z, cfg)
}

/// `W0(exp(ln_z))` for arguments too large to represent, `ln_z > 1`.
pub fn lambert_w0_of_exp(ln_z: f64, cfg: &SolverConfig) -> Result<f64> {
    cfg.validate()?;
    if ln_z <= 1.0 {
        return lambert_w0(ln_z.exp(), cfg);
    }
    let l2 = ln_z.ln();
    halley_log(ln_z - l2 + l2 / ln_z, ln_z, cfg)
}

fn converged_step(step: f64, w: f64) -> bool {
    step.abs() <= 4.0 * f64::EPSILON * w.abs().max(f64::MIN_POSITIVE)
}

fn halley(mut w: f64, z: f64, cfg: &SolverConfig) -> Result<f64> {
    for _ in 0..cfg.max_iter {
        let ew = w.exp();
        let f = w * ew - z;
        if f == 0.0 {
            return Ok(w);
        }
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        w -= step;
        if converged_step(step, w) {
            return Ok(w);
        }
    }
    accept_or_fail(w, z, cfg)
}

fn halley_log(mut w: f64, ln_z: f64, cfg: &SolverConfig) -> Result<f64> {
    for _ in 0..cfg.max_iter {
        let g = w + w.ln() - ln_z;
        if g == 0.0 {
            return Ok(w);
        }
        let g1 = 1.0 + 1.0 / w;
        let g2 = -1.0 / (w * w);
        let step = 2.0 * g * g1 / (2.0 * g1 * g1 - g * g2);
        w -= step;
        if converged_step(step, w) {
            return Ok(w);
        }
    }
    let resid = (w + w.ln() - ln_z).abs();
    if resid <= cfg.abs_tol {
        Ok(w)
    } else {
        Err(Error::NonConvergence {
            what: format!("Lambert W at exp({ln_z})"),
            iterations: cfg.max_iter,
        })
    }
}

fn accept_or_fail(w: f64, z: f64, cfg: &SolverConfig) -> Result<f64> {
    let resid = (w * w.exp() - z).abs();
    if resid <= cfg.abs_tol * z.abs().max(1.0) {
        Ok(w)
    } else {
        Err(Error::NonConvergence {
            what: format!("Lambert W at {z}"),
            iterations: cfg.max_iter,
        })
    }
}

/// `u * exp(gamma * u)`.
pub fn forward_skew(u: f64, gamma: f64) -> Result<f64> {
    if gamma == 0.0 {
        return Ok(u);
    }
    let y = u * (gamma * u).exp();
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::Overflow(format!("forward_skew({u}, {gamma})")))
    }
}

/// Inverse of [`forward_skew`] on the requested branch.
///
/// Uses `W(gamma z) / gamma = z * exp(-W(gamma z))`, which stays accurate as
/// `gamma -> 0`.
pub fn inverse_skew(z: f64, gamma: f64, branch: Branch, cfg: &SolverConfig) -> Result<f64> {
    if gamma == 0.0 {
        return Ok(z);
    }
    let arg = gamma * z;
    if arg < BRANCH_POINT - cfg.abs_tol {
        return Err(Error::domain(format!(
            "gamma * z = {arg} < -1/e: no real inverse of the skew transform"
        )));
    }
    let w = match branch {
        Branch::Principal => lambert_w0(arg, cfg)?,
        Branch::NonPrincipal => {
            if arg >= 0.0 {
                return Err(Error::domain(
                    "non-principal inverse requires gamma * z < 0".to_string(),
                ));
            }
            lambert_wm1(arg, cfg)?
        }
    };
    if w == -1.0 {
        // branch point: -1 / gamma exactly
        return Ok(-1.0 / gamma);
    }
    Ok(z * (-w).exp())
}

/// `u * exp(delta * u^2 / 2)`.
pub fn forward_heavy(u: f64, delta: f64) -> Result<f64> {
    if delta < 0.0 {
        return Err(Error::domain(format!("delta must be >= 0, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(u);
    }
    let y = u * (0.5 * delta * u * u).exp();
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::Overflow(format!("forward_heavy({u}, {delta})")))
    }
}

/// Inverse of [`forward_heavy`]: `sgn(z) sqrt(W0(delta z^2) / delta)`,
/// evaluated as `z * exp(-W0(delta z^2) / 2)`.
pub fn inverse_heavy(z: f64, delta: f64, cfg: &SolverConfig) -> Result<f64> {
    if delta < 0.0 {
        return Err(Error::domain(format!("delta must be >= 0, got {delta}")));
    }
    if delta == 0.0 || z == 0.0 {
        return Ok(z);
    }
    let arg = delta * z * z;
    let w = if arg.is_finite() {
        lambert_w0(arg, cfg)?
    } else {
        lambert_w0_of_exp(delta.ln() + 2.0 * z.abs().ln(), cfg)?
    };
    let mag = z.abs() * (-0.5 * w).exp();
    Ok(if z < 0.0 { -mag } else { mag })
}
