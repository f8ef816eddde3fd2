//! Parameter estimation for Lambert W x F distributions.
//!
//! [`igmm`] is the iterative generalized method of moments: it alternates a
//! one-dimensional moment match for the shape parameter with sample mean and
//! standard deviation updates. [`mle`] maximizes the likelihood with a simplex
//! search and reports Wald-type standard errors.

mod igmm;
mod mle;

pub use igmm::{delta_for_target, gamma_for_target, igmm, IgmmFit};
pub use mle::{loglik, mle, MleFit, MleInit};

use serde::{Deserialize, Serialize};

use crate::distributions::{HeavyTau, SkewTau, Transform, TransformParams, TransformType, Variant};
use crate::error::{Error, Result};

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "{what} must satisfy lo < hi, got [{}, {}]",
                self.lo, self.hi
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Stopping tolerance of the IGMM outer loop.
    pub tol: f64,
    pub max_iter: usize,
    pub target_skewness: f64,
    pub target_kurtosis: f64,
    pub gamma_bounds: Interval,
    pub delta_bounds: Interval,
    /// Root seed for resampling; the estimators themselves are deterministic.
    pub seed: u64,
    /// Objective evaluation budget of each simplex run in [`mle`].
    pub mle_max_evals: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            tol: 1e-6,
            max_iter: 100,
            target_skewness: 0.0,
            target_kurtosis: 3.0,
            gamma_bounds: Interval::new(-2.0, 2.0),
            delta_bounds: Interval::new(0.0, 5.0),
            seed: 42,
            mle_max_evals: 5000,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be >= 1".into()));
        }
        self.gamma_bounds.validate("gamma_bounds")?;
        self.delta_bounds.validate("delta_bounds")?;
        if self.delta_bounds.lo < 0.0 {
            return Err(Error::InvalidConfig("delta_bounds must be non-negative".into()));
        }
        if !self.target_skewness.is_finite() || !(self.target_kurtosis > 0.0) {
            return Err(Error::InvalidConfig("targets must be finite, kurtosis > 0".into()));
        }
        Ok(())
    }
}

/// IGMM parameter vector of either type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tau {
    Skew(SkewTau),
    Heavy(HeavyTau),
}

impl Tau {
    pub fn mu_x(&self) -> f64 {
        match self {
            Tau::Skew(t) => t.mu_x,
            Tau::Heavy(t) => t.mu_x,
        }
    }

    pub fn sigma_x(&self) -> f64 {
        match self {
            Tau::Skew(t) => t.sigma_x,
            Tau::Heavy(t) => t.sigma_x,
        }
    }

    /// Parameter names matching [`Tau::values`] for the given type.
    pub fn names(kind: TransformType) -> &'static [&'static str] {
        match kind {
            TransformType::S => &["mu_x", "sigma_x", "gamma"],
            TransformType::H => &["mu_x", "sigma_x", "delta"],
            TransformType::Hh => &["mu_x", "sigma_x", "delta_l", "delta_r"],
        }
    }

    pub fn values(&self, kind: TransformType) -> Vec<f64> {
        match (self, kind) {
            (Tau::Skew(t), _) => vec![t.mu_x, t.sigma_x, t.gamma],
            (Tau::Heavy(t), TransformType::Hh) => vec![t.mu_x, t.sigma_x, t.delta_l, t.delta_r],
            (Tau::Heavy(t), _) => vec![t.mu_x, t.sigma_x, t.delta_l],
        }
    }
}

impl TransformParams for Tau {
    fn transform(&self, variant: Variant) -> Result<Transform> {
        match self {
            Tau::Skew(t) => t.transform(variant),
            Tau::Heavy(t) => t.transform(variant),
        }
    }
}
