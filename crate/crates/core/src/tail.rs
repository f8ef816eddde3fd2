//! Tail-index diagnostics: Hill curves, continuous power-law MLE with a
//! Kolmogorov-Smirnov cutoff, and the Student-t / Lambert W x t Hill study.
//!
//! All estimators take positive magnitudes and depend only on their order
//! statistics. Curves report the tail index `alpha_hat`, not its reciprocal.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{sample, InputDist, Theta, Variant};
use crate::error::{Error, Result};
use crate::rng;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Positive,
    Negative,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Positive => "positive",
            Side::Negative => "negative",
        })
    }
}

/// Median-centers `y` and returns `(positive values, magnitudes of negative values)`.
/// Points equal to the median are dropped.
pub fn split_tails(y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if y.len() < 4 {
        return Err(Error::InsufficientData(format!("need at least 4 points, got {}", y.len())));
    }
    let m = stats::median(y);
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for &v in y {
        let d = v - m;
        if d > 0.0 {
            pos.push(d);
        } else if d < 0.0 {
            neg.push(-d);
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::degenerate("a tail side is empty after median centering"));
    }
    Ok((pos, neg))
}

fn check_positive(x: &[f64]) -> Result<()> {
    match x.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        Some(v) => Err(Error::domain(format!("tail estimators need positive finite data, got {v}"))),
        None => Ok(()),
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k < 2 || k + 1 > n {
        return Err(Error::domain(format!("k = {k} outside [2, {}]", n.saturating_sub(1))));
    }
    Ok(())
}

/// `ln(x_(n-i+1) / x_(n-k))` for `i = 1..=k`, from ascending order statistics.
fn log_excesses(sorted: &[f64], k: usize) -> impl Iterator<Item = f64> + '_ {
    let n = sorted.len();
    let threshold = sorted[n - k - 1].ln();
    sorted[n - k..].iter().map(move |v| v.ln() - threshold)
}

fn classic_sorted(sorted: &[f64], k: usize) -> f64 {
    let h = log_excesses(sorted, k).sum::<f64>() / k as f64;
    1.0 / h
}

/// Harmonic-moment estimator on ascending data.
///
/// With `R_i = x_(n-i+1) / x_(n-k)`, the mean `m = (1/k) sum R_i^-(beta-1)`
/// estimates `alpha / (alpha + beta - 1)` under a Pareto tail, giving
/// `alpha_hat = (beta - 1) m / (1 - m)`. At `beta = 2` this is the t-Hill
/// estimator; as `beta -> 1` it tends to the classic Hill estimator.
fn harmonic_sorted(sorted: &[f64], k: usize, beta: f64) -> f64 {
    if beta == 1.0 {
        return classic_sorted(sorted, k);
    }
    let b = beta - 1.0;
    // d = m - 1, kept separate for accuracy near beta = 1
    let d = log_excesses(sorted, k).map(|l| (-b * l).exp_m1()).sum::<f64>() / k as f64;
    -b * (1.0 + d) / d
}

/// Classic Hill estimate of the tail index from the top `k` order statistics.
pub fn hill_classic(x: &[f64], k: usize) -> Result<f64> {
    check_positive(x)?;
    check_k(k, x.len())?;
    Ok(classic_sorted(&stats::sorted(x), k))
}

/// Harmonic-moment Hill estimate with exponent `beta >= 1`.
pub fn hill_harmonic(x: &[f64], k: usize, beta: f64) -> Result<f64> {
    check_positive(x)?;
    check_k(k, x.len())?;
    if !(beta >= 1.0) || !beta.is_finite() {
        return Err(Error::domain(format!("beta must be >= 1, got {beta}")));
    }
    Ok(harmonic_sorted(&stats::sorted(x), k, beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "lowercase")]
pub enum HillEstimator {
    Classic,
    Harmonic { beta: f64 },
}

impl HillEstimator {
    /// `beta == 1` is the classic estimator.
    pub fn from_beta(beta: f64) -> Self {
        if beta == 1.0 {
            HillEstimator::Classic
        } else {
            HillEstimator::Harmonic { beta }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillCurve {
    pub side: Side,
    pub k_values: Vec<usize>,
    pub alpha_hat: Vec<f64>,
    pub replicate: usize,
}

/// Evaluates a Hill estimator at every `k` of a strictly increasing grid.
pub fn hill_curve(x: &[f64], k_grid: &[usize], estimator: HillEstimator, side: Side, replicate: usize) -> Result<HillCurve> {
    check_positive(x)?;
    if k_grid.is_empty() || k_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("k grid must be non-empty and strictly increasing".into()));
    }
    for &k in k_grid {
        check_k(k, x.len())?;
    }
    if let HillEstimator::Harmonic { beta } = estimator {
        if !(beta >= 1.0) {
            return Err(Error::domain(format!("beta must be >= 1, got {beta}")));
        }
    }
    let s = stats::sorted(x);
    let alpha_hat = k_grid
        .iter()
        .map(|&k| match estimator {
            HillEstimator::Classic => classic_sorted(&s, k),
            HillEstimator::Harmonic { beta } => harmonic_sorted(&s, k, beta),
        })
        .collect();
    Ok(HillCurve { side, k_values: k_grid.to_vec(), alpha_hat, replicate })
}

/// Every integer in `[10, n/2]` (capped at `n - 1`), thinned to at most 400 points.
pub fn default_k_grid(n: usize) -> Vec<usize> {
    let lo = 10usize.min(n.saturating_sub(1)).max(2);
    let hi = (n / 2).min(n.saturating_sub(1));
    if hi < lo {
        return Vec::new();
    }
    let count = hi - lo + 1;
    if count <= 400 {
        return (lo..=hi).collect();
    }
    let mut grid: Vec<usize> = (0..400)
        .map(|i| lo + ((i as f64) * (count - 1) as f64 / 399.0).round() as usize)
        .collect();
    grid.dedup();
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub x_min: f64,
    pub ks_distance: f64,
    pub n_tail: usize,
}

/// Continuous power-law MLE `1 + n_tail / sum ln(x_i / x_min)` over `x_i >= x_min`.
pub fn powerlaw_alpha(x: &[f64], x_min: f64) -> Result<f64> {
    check_positive(x)?;
    if !(x_min > 0.0) {
        return Err(Error::domain(format!("x_min must be > 0, got {x_min}")));
    }
    let (n, sum) = x
        .iter()
        .filter(|&&v| v >= x_min)
        .fold((0usize, 0.0), |(n, s), &v| (n + 1, s + (v / x_min).ln()));
    if n < 2 || !(sum > 0.0) {
        return Err(Error::InsufficientData(format!("{n} tail point(s) above x_min = {x_min} with log-sum {sum}")));
    }
    Ok(1.0 + n as f64 / sum)
}

/// KS distance between the empirical CDF of an ascending tail sample and the
/// fitted power law `1 - (x / x_min)^(1 - alpha)`.
fn ks_tail(tail: &[f64], x_min: f64, alpha: f64) -> f64 {
    let n = tail.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < tail.len() {
        // ties: the ECDF jumps once over the whole run
        let mut j = i;
        while j + 1 < tail.len() && tail[j + 1] == tail[i] {
            j += 1;
        }
        let f = 1.0 - (tail[i] / x_min).powf(1.0 - alpha);
        d = d.max((f - i as f64 / n).abs()).max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    d
}

fn fit_at(sorted: &[f64], start: usize) -> Option<PowerLawFit> {
    let tail = &sorted[start..];
    let x_min = tail[0];
    let sum: f64 = tail.iter().map(|v| (v / x_min).ln()).sum();
    if tail.len() < 2 || !(sum > 0.0) {
        return None;
    }
    let alpha = 1.0 + tail.len() as f64 / sum;
    Some(PowerLawFit { alpha, x_min, ks_distance: ks_tail(tail, x_min, alpha), n_tail: tail.len() })
}

/// Candidate start indices: the first occurrence of each distinct value,
/// thinned to 250 evenly indexed candidates.
fn xmin_candidates(sorted: &[f64]) -> Vec<usize> {
    let mut starts: Vec<usize> = (0..sorted.len())
        .filter(|&i| i == 0 || sorted[i] != sorted[i - 1])
        .collect();
    // the largest value alone cannot be fitted
    starts.pop();
    if starts.len() > 250 {
        let m = starts.len();
        starts = (0..250).map(|i| starts[i * (m - 1) / 249]).collect();
    }
    starts
}

/// Power-law fit with `x_min` chosen to minimize the KS distance.
/// Ties go to the smaller `x_min`.
pub fn select_xmin(x: &[f64]) -> Result<PowerLawFit> {
    check_positive(x)?;
    if x.len() < 10 {
        return Err(Error::InsufficientData(format!("need at least 10 points, got {}", x.len())));
    }
    let s = stats::sorted(x);
    let fits: Vec<PowerLawFit> = xmin_candidates(&s).into_par_iter().filter_map(|i| fit_at(&s, i)).collect();
    fits.into_iter()
        .reduce(|best, f| if f.ks_distance < best.ks_distance { f } else { best })
        .ok_or_else(|| Error::InsufficientData("no candidate x_min leaves a usable tail".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillStudySpec {
    pub n: usize,
    pub replications: usize,
    pub nu_grid: Vec<f64>,
    /// Extra Lambert W x F cell, sampled in the mean-variance variant when
    /// its input allows it and in the location-scale variant otherwise.
    pub lambert_theta: Option<Theta>,
    /// Exponent for simulated cells; 1 means the classic estimator.
    pub beta_sim: f64,
    /// Exponent for observed data (used by callers that add a data curve).
    pub beta_data: f64,
    /// `None` uses [`default_k_grid`].
    pub k_grid: Option<Vec<usize>>,
    pub seed: u64,
}

impl HillStudySpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 100 {
            return Err(Error::InvalidConfig(format!("study n must be >= 100, got {}", self.n)));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be >= 1".into()));
        }
        if !(self.beta_sim >= 1.0) || !(self.beta_data >= 1.0) {
            return Err(Error::InvalidConfig("beta must be >= 1".into()));
        }
        if let Some(nu) = self.nu_grid.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::InvalidConfig(format!("nu must be > 0, got {nu}")));
        }
        Ok(())
    }
}

/// One simulated cell of the study: a label plus its curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub label: String,
    pub curves: Vec<HillCurve>,
    /// Pointwise mean over replicates, one curve per side.
    pub averages: Vec<HillCurve>,
}

/// Pointwise average of curves on a common grid; `replicate` is set to the
/// number of curves averaged.
pub fn average_curves(curves: &[HillCurve], side: Side) -> Option<HillCurve> {
    let same: Vec<&HillCurve> = curves.iter().filter(|c| c.side == side).collect();
    let first = same.first()?;
    let mut acc = vec![0.0; first.k_values.len()];
    for c in &same {
        for (a, v) in acc.iter_mut().zip(&c.alpha_hat) {
            *a += v;
        }
    }
    let m = same.len() as f64;
    Some(HillCurve {
        side,
        k_values: first.k_values.clone(),
        alpha_hat: acc.into_iter().map(|a| a / m).collect(),
        replicate: same.len(),
    })
}

/// Hill curves of both tails of `y` after median centering.
pub fn hill_curves_of(y: &[f64], k_grid: Option<&[usize]>, estimator: HillEstimator, replicate: usize) -> Result<Vec<HillCurve>> {
    let (pos, neg) = split_tails(y)?;
    [(Side::Positive, pos), (Side::Negative, neg)]
        .into_iter()
        .map(|(side, x)| {
            let grid = match k_grid {
                Some(g) => g.iter().copied().filter(|&k| k < x.len()).collect(),
                None => default_k_grid(x.len()),
            };
            hill_curve(&x, &grid, estimator, side, replicate)
        })
        .collect()
}

fn nu_label(nu: f64) -> String {
    format!("t(nu={nu})")
}

/// Simulated Hill-curve ensemble: Student-t samples for every `nu` in the grid
/// plus an optional Lambert W x F cell.
///
/// Sample `r` of cell `c` uses the RNG stream `(seed, c, r)`, so the result
/// does not depend on scheduling. The k grid is shared by all curves: the
/// given one, or [`default_k_grid`] of the smaller expected side `n / 2`.
pub fn hill_study(spec: &HillStudySpec) -> Result<Vec<StudyCell>> {
    spec.validate()?;
    let mut cells: Vec<(String, Theta, Variant)> = spec
        .nu_grid
        .iter()
        .map(|&nu| {
            let theta = Theta::new(InputDist::student_t(0.0, 1.0, nu), crate::distributions::Tail::S { gamma: 0.0 });
            (nu_label(nu), theta, Variant::LocationScale)
        })
        .collect();
    if let Some(theta) = spec.lambert_theta {
        let variant = if theta.validate(Variant::MeanVariance).is_ok() {
            Variant::MeanVariance
        } else {
            Variant::LocationScale
        };
        theta.validate(variant)?;
        cells.push(("lambert_w".to_string(), theta, variant));
    }
    // the shorter side of a median-split sample has at least (n - 1) / 2 points
    let grid = match &spec.k_grid {
        Some(g) => g.clone(),
        None => default_k_grid((spec.n - 1) / 2),
    };
    let estimator = HillEstimator::from_beta(spec.beta_sim);

    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.replications).map(move |r| (c, r)))
        .collect();
    let curves: Vec<Vec<HillCurve>> = tasks
        .par_iter()
        .map(|&(c, r)| {
            let (_, theta, variant) = &cells[c];
            let seed = rng::derive(spec.seed, &[c as u64, r as u64]);
            let y = sample(spec.n, theta, *variant, seed)?;
            hill_curves_of(&y, Some(&grid), estimator, r)
        })
        .collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(cells.len());
    let mut it = curves.into_iter();
    for (label, _, _) in cells {
        let cell_curves: Vec<HillCurve> = it.by_ref().take(spec.replications).flatten().collect();
        let averages = [Side::Positive, Side::Negative]
            .into_iter()
            .filter_map(|s| average_curves(&cell_curves, s))
            .collect();
        out.push(StudyCell { label, curves: cell_curves, averages });
    }
    Ok(out)
}
