//! Bootstrap convergence checks for IGMM and whiteness diagnostics.
//!
//! Under finite variance the bootstrap spread of IGMM estimates shrinks like
//! `n^(-1/2)`, so `sd * sqrt(n)` stays flat across subsample sizes; without it
//! the spread of `mu_x` does not shrink.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::TransformType;
use crate::error::{Error, Result};
use crate::estimators::{igmm, EstimatorConfig, Tau};
use crate::rng;
use crate::special;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapTrace {
    pub kind: TransformType,
    pub param_names: Vec<String>,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    /// `estimates[parameter][n index][replicate]`; `NaN` where the fit failed.
    pub estimates: Vec<Vec<Vec<f64>>>,
    /// `converged[n index][replicate]`.
    pub converged: Vec<Vec<bool>>,
    /// Error message of failed fits, `errors[n index][replicate]`.
    pub errors: Vec<Vec<Option<String>>>,
    pub seed: u64,
}

/// Eight log-spaced sizes from `max(100, n / 16)` to `n`.
pub fn default_n_grid(n: usize) -> Vec<usize> {
    let lo = 100.max(n / 16).min(n);
    let (a, b) = ((lo as f64).ln(), (n as f64).ln());
    let mut grid: Vec<usize> = (0..8)
        .map(|i| (a + (b - a) * i as f64 / 7.0).exp().round() as usize)
        .map(|v| v.clamp(lo, n))
        .collect();
    grid.dedup();
    grid
}

fn resample(y: &[f64], n: usize, r: &mut rng::Rng) -> Vec<f64> {
    (0..n).map(|_| y[r.random_range(0..y.len())]).collect()
}

/// IGMM on `replicates` bootstrap subsamples (drawn with replacement) of
/// every size in `n_grid`.
///
/// Replicate `b` at grid index `i` uses the RNG stream `(cfg.seed, i, b)`.
/// Failed fits are recorded in the trace rather than returned as errors.
pub fn bootstrap_igmm(
    y: &[f64],
    kind: TransformType,
    n_grid: &[usize],
    replicates: usize,
    cfg: &EstimatorConfig,
) -> Result<BootstrapTrace> {
    cfg.validate()?;
    if replicates < 2 {
        return Err(Error::InvalidConfig("need at least 2 bootstrap replicates".into()));
    }
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("n grid must be non-empty and strictly increasing".into()));
    }
    if n_grid[n_grid.len() - 1] > y.len() {
        return Err(Error::InvalidConfig(format!("n grid exceeds the data length {}", y.len())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("data contains non-finite values"));
    }

    let names = Tau::names(kind);
    let tasks: Vec<(usize, usize)> = (0..n_grid.len())
        .flat_map(|i| (0..replicates).map(move |b| (i, b)))
        .collect();
    let fits: Vec<(Vec<f64>, bool, Option<String>)> = tasks
        .par_iter()
        .map(|&(i, b)| {
            let mut r = rng::stream(cfg.seed, &[i as u64, b as u64]);
            let sub = resample(y, n_grid[i], &mut r);
            match igmm(&sub, kind, cfg) {
                Ok(fit) => (fit.tau.values(kind), fit.converged, None),
                Err(e) => (vec![f64::NAN; names.len()], false, Some(e.to_string())),
            }
        })
        .collect();

    let mut estimates = vec![vec![vec![0.0; replicates]; n_grid.len()]; names.len()];
    let mut converged = vec![vec![false; replicates]; n_grid.len()];
    let mut errors = vec![vec![None; replicates]; n_grid.len()];
    for (&(i, b), (values, ok, err)) in tasks.iter().zip(fits) {
        for (p, v) in values.into_iter().enumerate() {
            estimates[p][i][b] = v;
        }
        converged[i][b] = ok;
        errors[i][b] = err;
    }
    Ok(BootstrapTrace {
        kind,
        param_names: names.iter().map(|s| s.to_string()).collect(),
        n_grid: n_grid.to_vec(),
        replicates,
        estimates,
        converged,
        errors,
        seed: cfg.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdRow {
    pub parameter: String,
    pub n: usize,
    /// Sample standard deviation across converged replicates times `sqrt(n)`.
    pub value: f64,
    pub used: usize,
    pub excluded: usize,
}

/// Bootstrap spread of every parameter at every size, scaled by `sqrt(n)`.
/// Non-converged replicates are left out and counted in `excluded`.
pub fn sd_times_sqrt_n(trace: &BootstrapTrace) -> Result<Vec<SdRow>> {
    let mut rows = Vec::new();
    for (p, name) in trace.param_names.iter().enumerate() {
        for (i, &n) in trace.n_grid.iter().enumerate() {
            let vals: Vec<f64> = trace.estimates[p][i]
                .iter()
                .zip(&trace.converged[i])
                .filter(|(_, &ok)| ok)
                .map(|(&v, _)| v)
                .collect();
            if vals.len() < 2 {
                return Err(Error::InsufficientData(format!(
                    "{name} at n = {n}: {} converged replicate(s), need 2",
                    vals.len()
                )));
            }
            rows.push(SdRow {
                parameter: name.clone(),
                n,
                value: stats::std_dev(&vals) * (n as f64).sqrt(),
                used: vals.len(),
                excluded: trace.replicates - vals.len(),
            });
        }
    }
    Ok(rows)
}

/// Sample autocorrelations at lags `0..=max_lag`.
pub fn acf(y: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag >= y.len() {
        return Err(Error::InvalidConfig(format!("max_lag {max_lag} must be below the length {}", y.len())));
    }
    let m = stats::mean(y);
    let d: Vec<f64> = y.iter().map(|v| v - m).collect();
    let denom: f64 = d.iter().map(|v| v * v).sum();
    if !(denom > 0.0) {
        return Err(Error::degenerate("constant series has no autocorrelation"));
    }
    Ok((0..=max_lag)
        .map(|k| d.iter().zip(&d[k..]).map(|(a, b)| a * b).sum::<f64>() / denom)
        .collect())
}

/// Pointwise bootstrap band of the ACF under i.i.d. resampling: the
/// `(1 - level) / 2` and `(1 + level) / 2` quantiles of `replicates` resampled ACFs.
pub fn acf_bootstrap_band(
    y: &[f64],
    max_lag: usize,
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!("level must be in (0, 1), got {level}")));
    }
    if replicates < 2 {
        return Err(Error::InvalidConfig("need at least 2 bootstrap replicates".into()));
    }
    acf(y, max_lag)?;
    let reps: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::stream(seed, &[b as u64]);
            acf(&resample(y, y.len(), &mut r), max_lag)
        })
        .collect::<Result<_>>()?;
    let (mut lo, mut hi) = (Vec::with_capacity(max_lag + 1), Vec::with_capacity(max_lag + 1));
    for k in 0..=max_lag {
        let col = stats::sorted(&reps.iter().map(|r| r[k]).collect::<Vec<_>>());
        lo.push(stats::quantile_sorted(&col, (1.0 - level) / 2.0));
        hi.push(stats::quantile_sorted(&col, (1.0 + level) / 2.0));
    }
    Ok((lo, hi))
}

/// Ljung-Box statistics `Q(h)` and chi-square p-values for `h = 1..=max_lag`.
pub fn ljung_box(y: &[f64], max_lag: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if max_lag == 0 {
        return Err(Error::InvalidConfig("max_lag must be >= 1".into()));
    }
    let rho = acf(y, max_lag)?;
    let n = y.len() as f64;
    let mut q = Vec::with_capacity(max_lag);
    let mut p = Vec::with_capacity(max_lag);
    let mut acc = 0.0;
    for (h, r) in rho.iter().enumerate().skip(1) {
        acc += r * r / (n - h as f64);
        let qh = n * (n + 2.0) * acc;
        q.push(qh);
        p.push(special::chi2_sf(qh, h as f64));
    }
    Ok((q, p))
}

/// ACF, bootstrap band and Ljung-Box results by lag, starting at lag 0
/// (where `Q = 0` and `p = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfReport {
    pub lags: Vec<usize>,
    pub rho: Vec<f64>,
    pub band_lo: Vec<f64>,
    pub band_hi: Vec<f64>,
    pub ljung_box_q: Vec<f64>,
    pub ljung_box_p: Vec<f64>,
}

pub fn acf_report(y: &[f64], max_lag: usize, replicates: usize, level: f64, seed: u64) -> Result<AcfReport> {
    let rho = acf(y, max_lag)?;
    let (band_lo, band_hi) = acf_bootstrap_band(y, max_lag, replicates, level, seed)?;
    let (mut q, mut p) = if max_lag > 0 { ljung_box(y, max_lag)? } else { (Vec::new(), Vec::new()) };
    q.insert(0, 0.0);
    p.insert(0, 1.0);
    Ok(AcfReport {
        lags: (0..=max_lag).collect(),
        rho,
        band_lo,
        band_hi,
        ljung_box_q: q,
        ljung_box_p: p,
    })
}
