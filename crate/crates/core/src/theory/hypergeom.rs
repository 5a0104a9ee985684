//! Law of the common-vertex count and its concentration bounds.

use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};

/// `P(|S| = t)` for the overlap of two independent uniform `s`-subsets of
/// `[n]` (through any fixed bijection): `binom(s,t) binom(n-s, s-t) / binom(n,s)`,
/// evaluated in log space.
pub fn hypergeom_pmf(n: usize, s: usize, t: usize) -> Result<f64> {
    if n == 0 || s > n || t > s {
        return Err(Error::invalid(format!(
            "need t <= s <= n, n >= 1; got n = {n}, s = {s}, t = {t}"
        )));
    }
    if s - t > n - s {
        return Ok(0.0);
    }
    let (n, s, t) = (n as u64, s as u64, t as u64);
    let log_p = ln_binomial(s, t) + ln_binomial(n - s, s - t) - ln_binomial(n, s);
    Ok(log_p.exp())
}

/// Support of the overlap count: `max(0, 2s - n) ..= s`.
pub fn hypergeom_support(n: usize, s: usize) -> std::ops::RangeInclusive<usize> {
    (2 * s).saturating_sub(n)..=s
}

/// Chernoff/Hoeffding bounds `(upper, lower)` on
/// `P(eta >= (1+eps) s^2/n)` and `P(eta <= (1-eps) s^2/n)`.
pub fn hypergeom_tail_bounds(n: usize, s: usize, epsilon: f64) -> Result<(f64, f64)> {
    if n == 0 || s > n {
        return Err(Error::invalid(format!("need s <= n, got n = {n}, s = {s}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let (n, s, e) = (n as f64, s as f64, epsilon);
    let hoeffding = (-e * e * s.powi(3) / (n * n)).exp();
    let upper = (-e * e * s * s / ((2.0 + e) * n)).exp().min(hoeffding);
    let lower = (-e * e * s * s / (2.0 * n)).exp().min(hoeffding);
    Ok((upper, lower))
}
