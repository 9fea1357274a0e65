//! Mixing distributions over the mean domain and their localization.
//!
//! A finite mixing distribution `Q` induces the exact mixture
//! `sum_i rho_i f(x; theta_i)`. The weighted moment map sends `Q` to the
//! `lambda` coordinates `lambda_j = E_Q[(theta - mu)^j] / j!`; localizing a
//! mixture means replacing it by the local mixture model at the mixing mean
//! with those coordinates. Proper dispersion mixings play the same role for
//! continuous `Q`, with moments computed by quadrature.

use crate::error::{Error, Result};
use crate::family::Family;
use crate::lmm::LocalMixtureModel;
use crate::quad;
use crate::rng::rng_from_seed;
use crate::MAX_ORDER;
use alloc::vec::Vec;
use rand::Rng;

/// A finite mixing distribution: atoms `(theta_i, rho_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMixing {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteMixing {
    /// Builds a mixing distribution, pruning zero-weight atoms and merging
    /// duplicate locations. Weights must be nonnegative and sum to one
    /// within `1e-12`.
    pub fn new(atoms: &[(f64, f64)]) -> Result<Self> {
        let mut kept: Vec<(f64, f64)> = Vec::new();
        let mut total = 0.0;
        for &(theta, rho) in atoms {
            if !(theta.is_finite() && rho.is_finite()) {
                return Err(Error::InvalidMixing("non-finite atom"));
            }
            if rho < 0.0 {
                return Err(Error::InvalidMixing("negative weight"));
            }
            total += rho;
            if rho == 0.0 {
                continue;
            }
            match kept.iter_mut().find(|(t, _)| *t == theta) {
                Some((_, r)) => *r += rho,
                None => kept.push((theta, rho)),
            }
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMixing("weights do not sum to one"));
        }
        if kept.is_empty() {
            return Err(Error::InvalidMixing("no atoms"));
        }
        kept.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Ok(DiscreteMixing { atoms: kept })
    }

    /// Point mass at `mu`.
    pub fn delta(mu: f64) -> Self {
        DiscreteMixing {
            atoms: alloc::vec![(mu, 1.0)],
        }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(t, r)| r * t).sum()
    }

    pub fn central_moment(&self, center: f64, j: u32) -> f64 {
        self.atoms
            .iter()
            .map(|&(t, r)| r * libm::pow(t - center, j as f64))
            .sum()
    }
}

/// The mean-`mu` distribution on two atoms; the weight solves
/// `rho*mu1 + (1-rho)*mu2 = mu`.
pub fn two_point(mu: f64, mu1: f64, mu2: f64) -> Result<DiscreteMixing> {
    if mu1 == mu2 {
        if mu == mu1 {
            return Ok(DiscreteMixing::delta(mu));
        }
        return Err(Error::InfeasibleMean {
            mu,
            lo: mu1.min(mu2),
            hi: mu1.max(mu2),
        });
    }
    let rho = (mu - mu2) / (mu1 - mu2);
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InfeasibleMean {
            mu,
            lo: mu1.min(mu2),
            hi: mu1.max(mu2),
        });
    }
    DiscreteMixing::new(&[(mu1, rho), (mu2, 1.0 - rho)])
}

/// `sum_i rho_i f(x; theta_i)`.
pub fn exact_mixture_density(family: Family, q: &DiscreteMixing, x: f64) -> Result<f64> {
    family.check_point(x)?;
    let mut acc = 0.0;
    for &(theta, rho) in q.atoms() {
        family
            .check_mean(theta)
            .map_err(|_| Error::AtomDomain { theta })?;
        acc += rho * family.density_unchecked(x, theta);
    }
    Ok(acc)
}

/// The weighted moment map: `lambda_j = E_Q[(theta - mu)^j] / j!` for
/// `j = 2..=r`.
pub fn phi_map(q: &DiscreteMixing, mu: f64, r: usize) -> Result<Vec<f64>> {
    if !(2..=MAX_ORDER).contains(&r) {
        return Err(Error::UnsupportedOrder {
            order: r,
            max: MAX_ORDER,
        });
    }
    let mut fact = 1.0;
    let mut out = Vec::with_capacity(r - 1);
    for j in 2..=r {
        fact *= j as f64;
        out.push(q.central_moment(mu, j as u32) / fact);
    }
    Ok(out)
}

/// The local mixture model at the mixing mean with `lambda = Phi(Q)`; its
/// first moments match the exact mixture's by construction.
pub fn localize(family: Family, q: &DiscreteMixing, r: usize) -> Result<LocalMixtureModel> {
    let mu = q.mean();
    for &(theta, _) in q.atoms() {
        family
            .check_mean(theta)
            .map_err(|_| Error::AtomDomain { theta })?;
    }
    LocalMixtureModel::new(family, r, mu, phi_map(q, mu, r)?)
}

/// Two-stage sampling: draw an atom, then an observation from it.
pub fn mixture_sample(
    family: Family,
    q: &DiscreteMixing,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    for &(theta, _) in q.atoms() {
        family
            .check_mean(theta)
            .map_err(|_| Error::AtomDomain { theta })?;
    }
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut u: f64 = rng.gen();
        let mut theta = q.atoms()[q.atoms().len() - 1].0;
        for &(t, r) in q.atoms() {
            u -= r;
            if u <= 0.0 {
                theta = t;
                break;
            }
        }
        out.push(family.draw(&mut rng, theta));
    }
    Ok(out)
}

/// Unit deviance of a proper dispersion model, with its first two
/// mu-derivatives (needed for the unit variance function).
#[derive(Debug, Clone, Copy)]
pub enum Deviance {
    /// `d(mu; m) = (mu - m)^2`, unit variance 1.
    Squared,
    /// User-supplied `(d, dd/dmu, d2d/dmu2)`, each as `f(mu, m)`.
    Custom {
        d: fn(f64, f64) -> f64,
        d1: fn(f64, f64) -> f64,
        d2: fn(f64, f64) -> f64,
    },
}

impl Deviance {
    fn value(&self, mu: f64, m: f64) -> f64 {
        match self {
            Deviance::Squared => (mu - m) * (mu - m),
            Deviance::Custom { d, .. } => d(mu, m),
        }
    }

    /// Unit variance function `2 / d''(mu, mu)`.
    fn unit_variance(&self, mu: f64) -> f64 {
        match self {
            Deviance::Squared => 1.0,
            Deviance::Custom { d2, .. } => 2.0 / d2(mu, mu),
        }
    }
}

/// A proper dispersion mixing distribution over the mean domain:
/// `q(mu; vartheta, eps) = a(eps) V^{-1/2}(mu) exp(-d(mu; vartheta)/(2 eps))`
/// with the normalizer computed numerically over the integration window.
#[derive(Debug, Clone, Copy)]
pub struct DispersionMixing {
    pub deviance: Deviance,
    pub epsilon: f64,
    pub vartheta: f64,
}

impl DispersionMixing {
    pub fn squared(vartheta: f64, epsilon: f64) -> Self {
        DispersionMixing {
            deviance: Deviance::Squared,
            epsilon,
            vartheta,
        }
    }

    fn unnormalized(&self, mu: f64) -> f64 {
        let v = self.deviance.unit_variance(mu);
        libm::exp(-self.deviance.value(mu, self.vartheta) / (2.0 * self.epsilon))
            / libm::sqrt(v)
    }

    /// Integration window: expand around `vartheta` on the sqrt(eps) scale
    /// until the density is negligible, clipped to the mean domain.
    pub fn window(&self, family: Family) -> (f64, f64) {
        let (dlo, dhi) = family.mean_domain();
        let peak = self.unnormalized(self.vartheta);
        let scale = libm::sqrt(self.epsilon * self.deviance.unit_variance(self.vartheta));
        let mut w = 4.0 * scale;
        for _ in 0..60 {
            let lo_open = self.vartheta - w > dlo;
            let hi_open = self.vartheta + w < dhi;
            let lo_tail = !lo_open || self.unnormalized(self.vartheta - w) <= 1e-18 * peak;
            let hi_tail = !hi_open || self.unnormalized(self.vartheta + w) <= 1e-18 * peak;
            if lo_tail && hi_tail {
                break;
            }
            w *= 2.0;
        }
        let margin = 1e-13 * w.max(1.0);
        (
            (self.vartheta - w).max(dlo + margin),
            (self.vartheta + w).min(dhi - margin),
        )
    }

    /// Numeric normalizer `1/a(eps)` over the window.
    pub fn normalizer(&self, family: Family, tol: f64) -> Result<f64> {
        let (lo, hi) = self.window(family);
        Ok(quad::integrate(&|m| self.unnormalized(m), lo, hi, tol)?.value)
    }

    /// Normalized mixing density at `mu`.
    pub fn density(&self, family: Family, mu: f64, tol: f64) -> Result<f64> {
        Ok(self.unnormalized(mu) / self.normalizer(family, tol)?)
    }
}

/// The continuous mixture `int f(x; m) q(m) dm`, evaluated by adaptive
/// quadrature as the ratio of the unnormalized integral to the normalizer.
pub fn continuous_mixture_density(
    family: Family,
    d: &DispersionMixing,
    x: f64,
    tol: f64,
) -> Result<f64> {
    family.check_point(x)?;
    let (lo, hi) = d.window(family);
    let num = quad::integrate(
        &|m| family.density_unchecked(x, m) * d.unnormalized(m),
        lo,
        hi,
        tol,
    )?;
    let den = quad::integrate(&|m| d.unnormalized(m), lo, hi, tol.min(1e-10))?;
    Ok(num.value / den.value)
}

/// Local mixture model matched to a dispersion mixing: centered at the
/// mixing mean, with `lambda_i` the i-th central moment over `i!`, all
/// computed by quadrature.
pub fn laplace_localize(
    family: Family,
    d: &DispersionMixing,
    r: usize,
) -> Result<LocalMixtureModel> {
    if !(2..=MAX_ORDER).contains(&r) {
        return Err(Error::UnsupportedOrder {
            order: r,
            max: MAX_ORDER,
        });
    }
    let (lo, hi) = d.window(family);
    let tol = 1e-12;
    let z = quad::integrate(&|m| d.unnormalized(m), lo, hi, tol)?.value;
    let mean =
        quad::integrate(&|m| m * d.unnormalized(m), lo, hi, tol * z.max(1.0))?.value / z;
    let mut lambda = Vec::with_capacity(r - 1);
    let mut fact = 1.0;
    for j in 2..=r {
        fact *= j as f64;
        let cm = quad::integrate(
            &|m| libm::pow(m - mean, j as f64) * d.unnormalized(m),
            lo,
            hi,
            tol * z.max(1.0),
        )?
        .value
            / z;
        lambda.push(cm / fact);
    }
    LocalMixtureModel::new(family, r, mean, lambda)
}
