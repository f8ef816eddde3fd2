//! Maximum likelihood with a simplex search and Wald standard errors.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{igmm, EstimatorConfig, Tau};
use crate::distributions::{ln_pdf_with, Family, InputDist, LogDensity, Tail, Theta, TransformParams, TransformType, Variant};
use crate::error::{Error, Result};
use crate::lambert::SolverConfig;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::stats;

/// Log-likelihood of `y`. Points without density contribute `-inf`.
pub fn loglik(theta: &Theta, y: &[f64], variant: Variant) -> Result<f64> {
    theta.validate(variant)?;
    let t = theta.transform(variant)?;
    let ld = LogDensity::new(&theta.input);
    let cfg = SolverConfig::default();
    Ok(y.iter().map(|&v| ln_pdf_with(v, &t, &ld, &cfg)).sum())
}

/// Starting point of [`mle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MleInit {
    /// IGMM estimate of the same type, mapped onto the requested family and variant.
    Auto,
    Theta(Theta),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleFit {
    pub theta: Theta,
    pub variant: Variant,
    pub loglik: f64,
    pub init_loglik: f64,
    pub param_names: Vec<String>,
    pub estimates: Vec<f64>,
    /// `None` when the observed information is not positive definite.
    pub std_errors: Option<Vec<f64>>,
    pub t_values: Option<Vec<f64>>,
    pub converged: bool,
    pub evals: usize,
}

/// Maps a [`Theta`] of fixed family, variant and type to a flat vector and back.
#[derive(Debug, Clone, Copy)]
struct Layout {
    family: Family,
    variant: Variant,
    kind: TransformType,
}

impl Layout {
    fn has_nu(&self) -> bool {
        self.family == Family::StudentT
    }

    fn names(&self) -> Vec<String> {
        let mut v = vec!["c", "s"];
        if self.has_nu() {
            v.push("nu");
        }
        match self.kind {
            TransformType::S => v.push("gamma"),
            TransformType::H => v.push("delta"),
            TransformType::Hh => v.extend(["delta_l", "delta_r"]),
        }
        v.into_iter().map(String::from).collect()
    }

    fn natural(&self, theta: &Theta) -> Vec<f64> {
        let mut v = vec![theta.input.c, theta.input.s];
        if self.has_nu() {
            v.push(theta.input.nu);
        }
        match theta.tail {
            Tail::S { gamma } => v.push(gamma),
            Tail::H { delta } => v.push(delta),
            Tail::Hh { delta_l, delta_r } => v.extend([delta_l, delta_r]),
        }
        v
    }

    fn theta(&self, v: &[f64]) -> Theta {
        let (c, s) = (v[0], v[1]);
        let (input, rest) = match self.family {
            Family::Normal => (InputDist::normal(c, s), &v[2..]),
            Family::StudentT => (InputDist::student_t(c, s, v[2]), &v[3..]),
            Family::Cauchy => (InputDist::cauchy(c, s), &v[2..]),
            Family::Exponential => (InputDist::exponential(c, s), &v[2..]),
        };
        let tail = match self.kind {
            TransformType::S => Tail::S { gamma: rest[0] },
            TransformType::H => Tail::H { delta: rest[0] },
            TransformType::Hh => Tail::Hh { delta_l: rest[0], delta_r: rest[1] },
        };
        Theta::new(input, tail)
    }

    /// Lower bound of each natural coordinate (`-inf` for unrestricted ones).
    fn lower(&self) -> Vec<f64> {
        let mut v = vec![f64::NEG_INFINITY, 0.0];
        if self.has_nu() {
            v.push(if self.variant == Variant::MeanVariance { 2.0 } else { 0.0 });
        }
        match self.kind {
            TransformType::S => v.push(f64::NEG_INFINITY),
            TransformType::H => v.push(0.0),
            TransformType::Hh => v.extend([0.0, 0.0]),
        }
        v
    }

    /// Bounded coordinates go through `ln(x - lower)`, the rest are unchanged.
    fn to_internal(self, natural: &[f64]) -> Vec<f64> {
        natural
            .iter()
            .zip(self.lower())
            .map(|(&x, lo)| if lo.is_finite() { (x - lo).ln() } else { x })
            .collect()
    }

    fn to_natural(self, internal: &[f64]) -> Vec<f64> {
        internal
            .iter()
            .zip(self.lower())
            .map(|(&x, lo)| if lo.is_finite() { lo + x.exp() } else { x })
            .collect()
    }

    fn steps(&self, natural: &[f64]) -> Vec<f64> {
        let scale = natural[1];
        let mut v = vec![0.1 * scale, 0.1];
        if self.has_nu() {
            v.push(0.3);
        }
        match self.kind {
            TransformType::S => v.push(0.05),
            TransformType::H => v.push(0.3),
            TransformType::Hh => v.extend([0.3, 0.3]),
        }
        v
    }
}

/// Smallest shape value used as a start, so log coordinates stay finite.
const MIN_START_DELTA: f64 = 0.02;

fn auto_init(y: &[f64], layout: &Layout, cfg: &EstimatorConfig) -> Result<Theta> {
    let fit = igmm(y, layout.kind, cfg)?;
    let (mu, sigma) = (fit.tau.mu_x(), fit.tau.sigma_x());
    let x = fit.back_transform(y)?;
    let (c, s, nu) = match layout.family {
        Family::Normal | Family::Cauchy => (mu, sigma, f64::INFINITY),
        Family::StudentT => {
            let k = stats::kurtosis(&x);
            let nu = if k > 3.0 { (4.0 + 6.0 / (k - 3.0)).clamp(3.0, 50.0) } else { 30.0 };
            (mu, sigma * ((nu - 2.0) / nu).sqrt(), nu)
        }
        Family::Exponential => {
            let min = x.iter().copied().fold(f64::INFINITY, f64::min);
            let c = min - 0.05 * sigma;
            (c, stats::mean(&x) - c, f64::INFINITY)
        }
    };
    let input = match layout.family {
        Family::Normal => InputDist::normal(c, s),
        Family::StudentT => InputDist::student_t(c, s, nu),
        Family::Cauchy => InputDist::cauchy(c, s),
        Family::Exponential => InputDist::exponential(c, s),
    };
    // IGMM shapes live on the mean-variance scale
    let (_, scale) = match layout.variant {
        Variant::MeanVariance => input.center_scale(Variant::MeanVariance)?,
        Variant::LocationScale => (c, s),
    };
    let r = scale / sigma;
    let tail = match fit.tau {
        Tau::Skew(t) => Tail::S { gamma: t.gamma * r },
        Tau::Heavy(t) => {
            let dl = (t.delta_l * r * r).max(MIN_START_DELTA);
            let dr = (t.delta_r * r * r).max(MIN_START_DELTA);
            match layout.kind {
                TransformType::Hh => Tail::Hh { delta_l: dl, delta_r: dr },
                _ => Tail::H { delta: dl },
            }
        }
    };
    Ok(Theta::new(input, tail))
}

/// Maximum likelihood estimate for the given input family, variant and type.
///
/// The search runs a Nelder-Mead simplex on transformed coordinates (log of
/// scale, `nu` and `delta`, with `nu - 2` under the mean-variance variant),
/// restarted once from its optimum. Standard errors are the square roots of
/// the diagonal of the inverse observed information, computed by central
/// differences in the natural parameters.
pub fn mle(
    y: &[f64],
    family: Family,
    variant: Variant,
    kind: TransformType,
    init: MleInit,
    cfg: &EstimatorConfig,
) -> Result<MleFit> {
    cfg.validate()?;
    if y.len() < 10 {
        return Err(Error::InsufficientData(format!("MLE needs at least 10 points, got {}", y.len())));
    }
    let layout = Layout { family, variant, kind };
    // surface moment restrictions before any work
    InputDist { family, c: 0.0, s: 1.0, nu: 3.0 }.center_scale(variant)?;

    let theta0 = match init {
        MleInit::Auto => auto_init(y, &layout, cfg)?,
        MleInit::Theta(t) => {
            if t.input.family != family || t.kind() != kind {
                return Err(Error::InvalidConfig("initial theta does not match family and type".into()));
            }
            t
        }
    };
    theta0.validate(variant)?;
    let init_loglik = loglik(&theta0, y, variant)?;

    let objective = |internal: &[f64]| -> f64 {
        let theta = layout.theta(&layout.to_natural(internal));
        match loglik(&theta, y, variant) {
            Ok(l) if l.is_finite() => -l,
            _ => f64::INFINITY,
        }
    };
    let natural0 = layout.natural(&theta0);
    let steps = layout.steps(&natural0);
    let opts = NelderMeadOptions {
        max_evals: cfg.mle_max_evals,
        f_tol: 1e-9,
        x_tol: 1e-7,
    };
    let first = nelder_mead(objective, &layout.to_internal(&natural0), &steps, &opts);
    let second = nelder_mead(objective, &first.x, &steps, &opts);
    let best = if second.fx <= first.fx { &second } else { &first };

    let estimates = layout.to_natural(&best.x);
    let theta = layout.theta(&estimates);
    let ll = loglik(&theta, y, variant)?;
    let std_errors = std_errors(&layout, &estimates, y);
    let t_values = std_errors
        .as_ref()
        .map(|se| estimates.iter().zip(se).map(|(e, s)| e / s).collect());

    Ok(MleFit {
        theta,
        variant,
        loglik: ll,
        init_loglik,
        param_names: layout.names(),
        estimates,
        std_errors,
        t_values,
        converged: second.converged,
        evals: first.evals + second.evals,
    })
}

/// Wald standard errors from the central-difference Hessian of `-loglik`.
fn std_errors(layout: &Layout, est: &[f64], y: &[f64]) -> Option<Vec<f64>> {
    let k = est.len();
    let lower = layout.lower();
    let h: Vec<f64> = est
        .iter()
        .zip(&lower)
        .map(|(&x, &lo)| {
            let h = 1e-4 * x.abs().max(1.0);
            if lo.is_finite() {
                h.min(0.5 * (x - lo))
            } else {
                h
            }
        })
        .collect();
    if h.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let f = |v: &[f64]| -> f64 {
        loglik(&layout.theta(v), y, layout.variant).map(|l| -l).unwrap_or(f64::NAN)
    };
    let shifted = |moves: &[(usize, f64)]| {
        let mut v = est.to_vec();
        for &(i, d) in moves {
            v[i] += d;
        }
        f(&v)
    };
    let f0 = f(est);
    let mut hess = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        let fp = shifted(&[(i, h[i])]);
        let fm = shifted(&[(i, -h[i])]);
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let v = (shifted(&[(i, h[i]), (j, h[j])]) - shifted(&[(i, h[i]), (j, -h[j])])
                - shifted(&[(i, -h[i]), (j, h[j])])
                + shifted(&[(i, -h[i]), (j, -h[j])]))
                / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    if hess.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let cov = hess.cholesky()?.inverse();
    let se: Vec<f64> = (0..k).map(|i| cov[(i, i)].sqrt()).collect();
    se.iter().all(|s| s.is_finite() && *s > 0.0).then_some(se)
}
