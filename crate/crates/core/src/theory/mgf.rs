//! Closed-form moment generating functions and the per-edge likelihood
//! ratio, with Monte Carlo counterparts for cross-checking.

use rand::Rng as _;
use rand_distr::StandardNormal;

use super::montecarlo::{mc_mean, McEstimate};
use crate::error::{Error, Result};

/// `E[exp(lambda X Y)] = 1 / sqrt(1 - lambda^2)` for independent standard
/// normals.
pub fn mgf_overlap(lambda: f64) -> Result<f64> {
    if lambda.abs() >= 1.0 || lambda.is_nan() {
        return Err(Error::invalid(format!("need |lambda| < 1, got {lambda}")));
    }
    Ok(1.0 / (1.0 - lambda * lambda).sqrt())
}

/// `E[exp(-(lambda/2) (X - Y)^2)] = 1 / sqrt(1 + 2 lambda)` for independent
/// standard normals.
pub fn mgf_mse(lambda: f64) -> Result<f64> {
    if lambda <= -0.5 || lambda.is_nan() {
        return Err(Error::invalid(format!("need lambda > -1/2, got {lambda}")));
    }
    Ok(1.0 / (1.0 + 2.0 * lambda).sqrt())
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("rho must lie in (0,1), got {rho}")))
    }
}

#[inline]
pub(crate) fn likelihood_ratio_unchecked(a: f64, b: f64, rho: f64) -> f64 {
    let one_m = 1.0 - rho * rho;
    ((-rho * rho * (a * a + b * b) + 2.0 * rho * (a * b)) / (2.0 * one_m)).exp() / one_m.sqrt()
}

/// Density ratio of a correlated standard bivariate normal pair to an
/// independent one, evaluated at `(a, b)`.
pub fn likelihood_ratio(a: f64, b: f64, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(likelihood_ratio_unchecked(a, b, rho))
}

pub fn mc_mgf_overlap(lambda: f64, trials: usize, seed: u64) -> McEstimate {
    mc_mean(trials, seed, "mgf-overlap", |r| {
        let x: f64 = r.sample(StandardNormal);
        let y: f64 = r.sample(StandardNormal);
        (lambda * x * y).exp()
    })
}

pub fn mc_mgf_mse(lambda: f64, trials: usize, seed: u64) -> McEstimate {
    mc_mean(trials, seed, "mgf-mse", |r| {
        let x: f64 = r.sample(StandardNormal);
        let y: f64 = r.sample(StandardNormal);
        (-0.5 * lambda * (x - y) * (x - y)).exp()
    })
}

/// Mean of the likelihood ratio under independent standard normals.
pub fn mc_likelihood_ratio_mean(rho: f64, trials: usize, seed: u64) -> Result<McEstimate> {
    check_rho(rho)?;
    Ok(mc_mean(trials, seed, "likelihood-ratio", |r| {
        let x: f64 = r.sample(StandardNormal);
        let y: f64 = r.sample(StandardNormal);
        likelihood_ratio_unchecked(x, y, rho)
    }))
}
