//! Empirical approximation-rate checks: how fast the localized model
//! converges to the exact mixture as the mixing shrinks.
//!
//! For a mixing concentrated on a `sqrt(eps)` scale the sup-norm gap between
//! the exact mixture density and its order-`r` localization decays like a
//! power of `eps`; the expected exponent is `(r+1)/2` for discrete mixings
//! (the leading uncancelled Taylor term) and `floor(r/2) + 1` for smooth
//! dispersion mixings, whose odd central moments vanish to leading order.

use crate::error::{Error, Result};
use crate::family::Family;
use crate::mixing::{
    continuous_mixture_density, exact_mixture_density, laplace_localize, localize, two_point,
    DispersionMixing,
};
use crate::MAX_ORDER;
use alloc::vec::Vec;

/// Errors below this are dominated by quadrature/rounding noise and are
/// excluded from the slope regression.
const ERR_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct RateCheck {
    /// Fitted log-log slope of sup-error against `eps`.
    pub slope: f64,
    /// `(eps, sup_err)` per requested scale, including excluded points.
    pub points: Vec<(f64, f64)>,
    /// False when fewer than three points survived the error floor.
    pub conclusive: bool,
}

fn check_order(r: usize) -> Result<()> {
    if (2..=MAX_ORDER).contains(&r) {
        Ok(())
    } else {
        Err(Error::UnsupportedOrder {
            order: r,
            max: MAX_ORDER,
        })
    }
}

/// Evaluation points for a sup-norm comparison: the full (truncated) support
/// for counting families, a fixed grid around the center for the real line.
fn eval_points(family: Family, center: f64) -> Vec<f64> {
    match family.scan_upper(center) {
        Some(upper) => (0..=upper).map(|k| k as f64).collect(),
        None => {
            let n = 161;
            (0..n)
                .map(|j| center - 8.0 + 16.0 * j as f64 / (n - 1) as f64)
                .collect()
        }
    }
}

fn slope_fit(points: &[(f64, f64)]) -> (f64, bool) {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(_, e)| e > ERR_FLOOR)
        .map(|&(eps, e)| (libm::log(eps), libm::log(e)))
        .collect();
    if usable.len() < 3 {
        return (f64::NAN, false);
    }
    let n = usable.len() as f64;
    let sx: f64 = usable.iter().map(|p| p.0).sum();
    let sy: f64 = usable.iter().map(|p| p.1).sum();
    let sxx: f64 = usable.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = usable.iter().map(|p| p.0 * p.1).sum();
    ((n * sxy - sx * sy) / (n * sxx - sx * sx), true)
}

/// Sup-error decay for asymmetric two-point mixings with atoms at
/// `mu + sqrt(eps)` and `mu - sqrt(eps)/2`.
pub fn rate_check_discrete(
    family: Family,
    order: usize,
    mu: f64,
    eps_list: &[f64],
) -> Result<RateCheck> {
    check_order(order)?;
    family.check_mean(mu)?;
    let xs = eval_points(family, mu);
    let mut points = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let s = libm::sqrt(eps);
        let q = two_point(mu, mu + s, mu - 0.5 * s)?;
        let model = localize(family, &q, order)?;
        let mut sup = 0.0f64;
        for &x in &xs {
            let exact = exact_mixture_density(family, &q, x)?;
            let approx = model.density(x)?;
            sup = sup.max((exact - approx).abs());
        }
        points.push((eps, sup));
    }
    let (slope, conclusive) = slope_fit(&points);
    Ok(RateCheck {
        slope,
        points,
        conclusive,
    })
}

/// Sup-error decay for squared-deviance dispersion mixings centered at
/// `vartheta`.
pub fn rate_check_laplace(
    family: Family,
    order: usize,
    vartheta: f64,
    eps_list: &[f64],
) -> Result<RateCheck> {
    check_order(order)?;
    family.check_mean(vartheta)?;
    let xs = eval_points(family, vartheta);
    let quad_tol = 1e-12;
    let mut points = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let d = DispersionMixing::squared(vartheta, eps);
        let model = laplace_localize(family, &d, order)?;
        let mut sup = 0.0f64;
        for &x in &xs {
            let exact = continuous_mixture_density(family, &d, x, quad_tol)?;
            let approx = model.density(x)?;
            sup = sup.max((exact - approx).abs());
        }
        points.push((eps, sup));
    }
    let (slope, conclusive) = slope_fit(&points);
    Ok(RateCheck {
        slope,
        points,
        conclusive,
    })
}
