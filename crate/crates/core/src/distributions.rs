//! Lambert W x F distributions.
//!
//! A Lambert W x F variable is `Y = center + scale * g((X - center) / scale)` with
//! `X ~ F` and `g` either the skew map `u * exp(gamma * u)` (type `s`) or the
//! heavy-tail map `u * exp(delta * u^2 / 2)` (type `h`, or `hh` with separate
//! `delta` for the left and right half-line).
//!
//! Two parametrisations of `(center, scale)` exist:
//!
//! * [`Variant::MeanVariance`]: center and scale are the mean and standard
//!   deviation of `X`. Only defined when both are finite.
//! * [`Variant::LocationScale`]: center and scale are the location `c` and scale
//!   `s` of `F`. Always defined.

use rand::Rng as _;
use rand_distr::{ChiSquared, Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lambert::{self, Branch, SolverConfig, BRANCH_POINT};
use crate::rng;
use crate::special;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Normal,
    StudentT,
    Cauchy,
    Exponential,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Normal => "normal",
            Family::StudentT => "student_t",
            Family::Cauchy => "cauchy",
            Family::Exponential => "exponential",
        })
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" | "gaussian" => Ok(Family::Normal),
            "t" | "student_t" | "student-t" => Ok(Family::StudentT),
            "cauchy" => Ok(Family::Cauchy),
            "exp" | "exponential" => Ok(Family::Exponential),
            _ => Err(Error::InvalidConfig(format!("unknown family '{s}'"))),
        }
    }
}

/// The input distribution `F` with location `c`, scale `s` and, for the
/// Student-t, degrees of freedom `nu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputDist {
    pub family: Family,
    pub c: f64,
    pub s: f64,
    pub nu: f64,
}

impl InputDist {
    pub fn normal(c: f64, s: f64) -> Self {
        InputDist { family: Family::Normal, c, s, nu: f64::INFINITY }
    }

    pub fn student_t(c: f64, s: f64, nu: f64) -> Self {
        InputDist { family: Family::StudentT, c, s, nu }
    }

    pub fn cauchy(c: f64, s: f64) -> Self {
        InputDist { family: Family::Cauchy, c, s, nu: 1.0 }
    }

    pub fn exponential(c: f64, s: f64) -> Self {
        InputDist { family: Family::Exponential, c, s, nu: f64::INFINITY }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0) || !self.s.is_finite() {
            return Err(Error::domain(format!("scale s must be > 0, got {}", self.s)));
        }
        if !self.c.is_finite() {
            return Err(Error::domain("location c must be finite"));
        }
        if self.family == Family::StudentT && !(self.nu > 0.0) {
            return Err(Error::domain(format!("nu must be > 0, got {}", self.nu)));
        }
        Ok(())
    }

    pub fn mean(&self) -> Option<f64> {
        match self.family {
            Family::Normal => Some(self.c),
            Family::StudentT if self.nu > 1.0 => Some(self.c),
            Family::StudentT | Family::Cauchy => None,
            Family::Exponential => Some(self.c + self.s),
        }
    }

    pub fn std_dev(&self) -> Option<f64> {
        match self.family {
            Family::Normal | Family::Exponential => Some(self.s),
            Family::StudentT => sigma_from_t_scale(self.s, self.nu).ok(),
            Family::Cauchy => None,
        }
    }

    /// `(center, scale)` of the transform under `variant`.
    pub fn center_scale(&self, variant: Variant) -> Result<(f64, f64)> {
        self.validate()?;
        match variant {
            Variant::LocationScale => Ok((self.c, self.s)),
            Variant::MeanVariance => {
                let sd = match self.family {
                    Family::StudentT => sigma_from_t_scale(self.s, self.nu)?,
                    _ => self.std_dev().ok_or_else(|| {
                        Error::MomentRestriction(format!(
                            "{} input has no finite mean and variance; use the location-scale variant",
                            self.family
                        ))
                    })?,
                };
                Ok((self.mean().expect("finite variance implies finite mean"), sd))
            }
        }
    }

    /// Log density of the standard (`c = 0`, `s = 1`) member.
    fn ln_pdf_standard(&self, t: f64, t_const: f64) -> f64 {
        match self.family {
            Family::Normal => -0.5 * t * t - 0.5 * (2.0 * PI).ln(),
            Family::StudentT => t_const - 0.5 * (self.nu + 1.0) * (t * t / self.nu).ln_1p(),
            Family::Cauchy => -PI.ln() - (t * t).ln_1p(),
            Family::Exponential => {
                if t >= 0.0 {
                    -t
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    fn t_const(&self) -> f64 {
        if self.family == Family::StudentT {
            special::ln_gamma(0.5 * (self.nu + 1.0))
                - special::ln_gamma(0.5 * self.nu)
                - 0.5 * (self.nu * PI).ln()
        } else {
            0.0
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        LogDensity::new(self).eval(x)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let t = (x - self.c) / self.s;
        match self.family {
            Family::Normal => special::norm_cdf(t),
            Family::StudentT => special::student_t_cdf(t, self.nu),
            Family::Cauchy => 0.5 + t.atan() / PI,
            Family::Exponential => {
                if t <= 0.0 {
                    0.0
                } else {
                    -(-t).exp_m1()
                }
            }
        }
    }

    /// Upper tail `1 - cdf(x)`, without cancellation in the right tail.
    pub fn sf(&self, x: f64) -> f64 {
        let t = (x - self.c) / self.s;
        match self.family {
            Family::Exponential => {
                if t <= 0.0 {
                    1.0
                } else {
                    (-t).exp()
                }
            }
            _ => {
                let mirrored = InputDist { c: 0.0, s: 1.0, ..*self };
                mirrored.cdf(-t)
            }
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let t = match self.family {
            Family::Normal => special::norm_quantile(p),
            Family::StudentT => special::student_t_quantile(p, self.nu),
            Family::Cauchy => (PI * (p - 0.5)).tan(),
            Family::Exponential => -(-p).ln_1p(),
        };
        self.c + self.s * t
    }

    pub fn draw(&self, rng: &mut rng::Rng) -> f64 {
        let t: f64 = match self.family {
            Family::Normal => StandardNormal.sample(rng),
            Family::StudentT => {
                let z: f64 = StandardNormal.sample(rng);
                let chi2 = ChiSquared::new(self.nu).expect("nu > 0").sample(rng);
                z / (chi2 / self.nu).sqrt()
            }
            Family::Cauchy => (PI * (rng.random::<f64>() - 0.5)).tan(),
            Family::Exponential => Exp1.sample(rng),
        };
        self.c + self.s * t
    }
}

/// Log density of an [`InputDist`] with its normalizing constant precomputed.
#[derive(Debug, Clone, Copy)]
pub struct LogDensity {
    dist: InputDist,
    t_const: f64,
    ln_s: f64,
}

impl LogDensity {
    pub fn new(dist: &InputDist) -> Self {
        LogDensity { dist: *dist, t_const: dist.t_const(), ln_s: dist.s.ln() }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.dist.ln_pdf_standard((x - self.dist.c) / self.dist.s, self.t_const) - self.ln_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    MeanVariance,
    LocationScale,
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean-variance" | "mean_variance" => Ok(Variant::MeanVariance),
            "location-scale" | "location_scale" => Ok(Variant::LocationScale),
            _ => Err(Error::InvalidConfig(format!("unknown variant '{s}'"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::MeanVariance => "mean-variance",
            Variant::LocationScale => "location-scale",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformType {
    S,
    H,
    Hh,
}

impl FromStr for TransformType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s" => Ok(TransformType::S),
            "h" => Ok(TransformType::H),
            "hh" => Ok(TransformType::Hh),
            _ => Err(Error::InvalidConfig(format!("unknown type '{s}'"))),
        }
    }
}

impl fmt::Display for TransformType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransformType::S => "s",
            TransformType::H => "h",
            TransformType::Hh => "hh",
        })
    }
}

/// Shape parameters of the transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Tail {
    S { gamma: f64 },
    H { delta: f64 },
    Hh { delta_l: f64, delta_r: f64 },
}

impl Tail {
    pub fn kind(&self) -> TransformType {
        match self {
            Tail::S { .. } => TransformType::S,
            Tail::H { .. } => TransformType::H,
            Tail::Hh { .. } => TransformType::Hh,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Tail::S { gamma } => gamma.is_finite(),
            Tail::H { delta } => delta >= 0.0 && delta.is_finite(),
            Tail::Hh { delta_l, delta_r } => {
                delta_l >= 0.0 && delta_r >= 0.0 && delta_l.is_finite() && delta_r.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid shape parameters {self:?}")))
        }
    }

    /// The identity member of the given type.
    pub fn identity(kind: TransformType) -> Tail {
        match kind {
            TransformType::S => Tail::S { gamma: 0.0 },
            TransformType::H => Tail::H { delta: 0.0 },
            TransformType::Hh => Tail::Hh { delta_l: 0.0, delta_r: 0.0 },
        }
    }

    /// Delta applied at a point with the given sign; `u = 0` uses the right delta.
    fn delta_at(&self, negative: bool) -> f64 {
        match *self {
            Tail::H { delta } => delta,
            Tail::Hh { delta_l, delta_r } => {
                if negative {
                    delta_l
                } else {
                    delta_r
                }
            }
            Tail::S { .. } => unreachable!("skew tail has no delta"),
        }
    }

    /// `g(u)` on the standardized scale.
    pub fn forward(&self, u: f64) -> Result<f64> {
        match *self {
            Tail::S { gamma } => lambert::forward_skew(u, gamma),
            _ => lambert::forward_heavy(u, self.delta_at(u < 0.0)),
        }
    }

    /// Principal-branch `g^{-1}(z)`.
    pub fn inverse(&self, z: f64, cfg: &SolverConfig) -> Result<f64> {
        match *self {
            Tail::S { gamma } => lambert::inverse_skew(z, gamma, Branch::Principal, cfg),
            _ => lambert::inverse_heavy(z, self.delta_at(z < 0.0), cfg),
        }
    }

    /// `ln g'(u)`.
    pub fn ln_derivative(&self, u: f64) -> f64 {
        match *self {
            Tail::S { gamma } => gamma * u + (gamma * u).ln_1p(),
            _ => {
                let d = self.delta_at(u < 0.0);
                0.5 * d * u * u + (d * u * u).ln_1p()
            }
        }
    }

    /// Whether `z` has a real principal-branch preimage.
    pub fn admissible(&self, z: f64) -> bool {
        match *self {
            Tail::S { gamma } => gamma * z >= BRANCH_POINT,
            _ => true,
        }
    }
}

/// Transformation parameters for the skew type in moment form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewTau {
    pub mu_x: f64,
    pub sigma_x: f64,
    pub gamma: f64,
}

/// Transformation parameters for the heavy-tail types. Type `h` has `delta_l == delta_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeavyTau {
    pub mu_x: f64,
    pub sigma_x: f64,
    pub delta_l: f64,
    pub delta_r: f64,
}

/// Full parameter vector: the input distribution plus the shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub input: InputDist,
    pub tail: Tail,
}

impl Theta {
    pub fn new(input: InputDist, tail: Tail) -> Self {
        Theta { input, tail }
    }

    pub fn kind(&self) -> TransformType {
        self.tail.kind()
    }

    pub fn validate(&self, variant: Variant) -> Result<()> {
        self.input.validate()?;
        self.tail.validate()?;
        self.input.center_scale(variant).map(|_| ())
    }
}

/// A resolved transform: center, scale and shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub center: f64,
    pub scale: f64,
    pub tail: Tail,
}

impl Transform {
    pub fn forward(&self, x: f64) -> Result<f64> {
        let u = (x - self.center) / self.scale;
        Ok(self.center + self.scale * self.tail.forward(u)?)
    }

    pub fn backward(&self, y: f64, cfg: &SolverConfig) -> Result<f64> {
        let z = (y - self.center) / self.scale;
        Ok(self.center + self.scale * self.tail.inverse(z, cfg)?)
    }
}

/// Anything that determines a [`Transform`]: a full [`Theta`] or a tau vector.
pub trait TransformParams {
    fn transform(&self, variant: Variant) -> Result<Transform>;
}

impl TransformParams for Theta {
    fn transform(&self, variant: Variant) -> Result<Transform> {
        self.tail.validate()?;
        let (center, scale) = self.input.center_scale(variant)?;
        Ok(Transform { center, scale, tail: self.tail })
    }
}

impl TransformParams for SkewTau {
    fn transform(&self, _variant: Variant) -> Result<Transform> {
        check_sigma(self.sigma_x)?;
        Ok(Transform {
            center: self.mu_x,
            scale: self.sigma_x,
            tail: Tail::S { gamma: self.gamma },
        })
    }
}

impl TransformParams for HeavyTau {
    fn transform(&self, _variant: Variant) -> Result<Transform> {
        check_sigma(self.sigma_x)?;
        let tail = if self.delta_l == self.delta_r {
            Tail::H { delta: self.delta_l }
        } else {
            Tail::Hh { delta_l: self.delta_l, delta_r: self.delta_r }
        };
        tail.validate()?;
        Ok(Transform { center: self.mu_x, scale: self.sigma_x, tail })
    }
}

impl TransformParams for Transform {
    fn transform(&self, _variant: Variant) -> Result<Transform> {
        Ok(*self)
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("sigma_x must be > 0, got {sigma}")))
    }
}

/// Applies the Lambert W x F transform to input draws `x`.
pub fn forward_transform<P: TransformParams>(x: &[f64], params: &P, variant: Variant) -> Result<Vec<f64>> {
    let t = params.transform(variant)?;
    x.iter().map(|&v| t.forward(v)).collect()
}

/// Principal-branch inverse of [`forward_transform`].
///
/// Fails with [`Error::Inadmissible`] listing every point without a real inverse.
pub fn backward_transform<P: TransformParams>(y: &[f64], params: &P, variant: Variant) -> Result<Vec<f64>> {
    let t = params.transform(variant)?;
    let cfg = SolverConfig::default();
    let mut out = Vec::with_capacity(y.len());
    let mut bad = Vec::new();
    for (i, &v) in y.iter().enumerate() {
        match t.backward(v, &cfg) {
            Ok(x) => out.push(x),
            Err(Error::Domain(_)) => bad.push((i, v)),
            Err(e) => return Err(e),
        }
    }
    if bad.is_empty() {
        Ok(out)
    } else {
        Err(Error::Inadmissible(bad))
    }
}

/// Log density of `Y` at `y` for a resolved transform and input.
///
/// Type `s` uses the principal branch only: points without a principal
/// preimage get `-inf`, and the density integrates to `1 - p_(-1)`.
pub fn ln_pdf_with(y: f64, t: &Transform, input: &LogDensity, cfg: &SolverConfig) -> f64 {
    let z = (y - t.center) / t.scale;
    if !t.tail.admissible(z) {
        return f64::NEG_INFINITY;
    }
    let u = match t.tail.inverse(z, cfg) {
        Ok(u) => u,
        Err(_) => return f64::NEG_INFINITY,
    };
    input.eval(t.center + t.scale * u) - t.tail.ln_derivative(u)
}

/// Density of the Lambert W x F distribution.
pub fn pdf(y: f64, theta: &Theta, variant: Variant) -> Result<f64> {
    let t = theta.transform(variant)?;
    let ld = LogDensity::new(&theta.input);
    Ok(ln_pdf_with(y, &t, &ld, &SolverConfig::default()).exp())
}

/// Quantile function. Only the bijective heavy-tail types have one.
pub fn quantile(p: f64, theta: &Theta, variant: Variant) -> Result<f64> {
    if theta.kind() == TransformType::S {
        return Err(Error::domain(
            "quantiles are only provided for the heavy-tail types h and hh",
        ));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probability {p} outside [0, 1]")));
    }
    let t = theta.transform(variant)?;
    let x = theta.input.quantile(p);
    if x.is_infinite() {
        return Ok(x);
    }
    t.forward(x)
}

/// `n` i.i.d. draws: sample the input, then apply the forward transform.
pub fn sample(n: usize, theta: &Theta, variant: Variant, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidConfig("sample size must be >= 1".into()));
    }
    theta.validate(variant)?;
    let t = theta.transform(variant)?;
    let mut rng = rng::stream(seed, &[]);
    (0..n).map(|_| t.forward(theta.input.draw(&mut rng))).collect()
}

/// Standard deviation of a Student-t with scale `s`: `s * sqrt(nu / (nu - 2))`.
pub fn sigma_from_t_scale(s: f64, nu: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::domain(format!("scale must be > 0, got {s}")));
    }
    if !(nu > 2.0) {
        return Err(Error::MomentRestriction(format!(
            "Student-t with nu = {nu} <= 2 has no finite variance"
        )));
    }
    Ok(s * (nu / (nu - 2.0)).sqrt())
}

/// Tail regime by tail index: I has finite mean and variance, II finite mean
/// only, III neither.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    I,
    II,
    III,
}

pub fn regime_classify(alpha: f64) -> Result<Regime> {
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("tail index must be > 0, got {alpha}")));
    }
    Ok(if alpha <= 1.0 {
        Regime::III
    } else if alpha <= 2.0 {
        Regime::II
    } else {
        Regime::I
    })
}

/// Probability that the standardized input lands beyond the critical point
/// `-1/gamma`, i.e. in the region only reachable through the non-principal branch.
pub fn p_nonprincipal(gamma: f64, input: &InputDist, variant: Variant) -> Result<f64> {
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let (center, scale) = input.center_scale(variant)?;
    let critical = center + scale * (-1.0 / gamma);
    Ok(if gamma > 0.0 {
        input.cdf(critical)
    } else {
        input.sf(critical)
    })
}

/// Highest existing moment order of a heavy-tail Lambert W x Gaussian: `1 / delta`.
pub fn moment_order_bound(delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::domain(format!("delta must be > 0, got {delta}")));
    }
    Ok(1.0 / delta)
}
