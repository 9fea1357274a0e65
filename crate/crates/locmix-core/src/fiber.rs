//! Likelihood inference on fibers (fixed center, free `lambda`).
//!
//! On a fiber the log-likelihood is concave: each observation contributes
//! `log(1 + sum lambda_i h_i(x_j))` plus a constant, so the problem domain
//! is the open polyhedron where every observed-point constraint is positive
//! and damped Newton converges globally. The likelihood can still diverge
//! along a recession direction, or toward a facet of the domain, when an
//! extreme observation dominates; that outcome is first-class, not an
//! error, because the singularity structure is exactly what fiber scans are
//! meant to expose.

use crate::deriv::derivative_polys;
use crate::error::{Error, Result};
use crate::family::{Family, Support};
use crate::lmm::{hard_boundary, HalfSpace};
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

const GRAD_TOL: f64 = 1e-8;
const MAX_NEWTON_ITERS: usize = 500;
const ARMIJO_C: f64 = 1e-4;
const BOUNDARY_FRACTION: f64 = 0.95;

/// Observations with optional nonnegative weights (default 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Sample {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        let weights = vec![1.0; points.len()];
        Self::weighted(points, weights)
    }

    pub fn weighted(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::EmptySample);
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMixing("bad observation weight"));
        }
        Ok(Sample { points, weights })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        let w = self.total_weight();
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(x, wi)| wi * x)
            .sum::<f64>()
            / w
    }

    pub fn sd(&self) -> f64 {
        let mean = self.mean();
        let w = self.total_weight();
        let var = self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(x, wi)| wi * (x - mean) * (x - mean))
            .sum::<f64>()
            / w;
        libm::sqrt(var)
    }

    pub fn min(&self) -> f64 {
        self.points.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.points
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A fiber at a fixed, known center: the concave maximization problem for
/// `lambda` given a sample.
#[derive(Debug, Clone)]
pub struct FiberProblem {
    family: Family,
    order: usize,
    mu0: f64,
    sample: Sample,
    /// `h_i(x_j; mu0)` for `i = 2..=r`, one row per observation.
    h_rows: Vec<Vec<f64>>,
    /// `log f(x_j; mu0)`.
    log_base: Vec<f64>,
}

/// Outcome of a fiber maximization.
#[derive(Debug, Clone)]
pub enum FitOutcome {
    /// Interior stationary point with `max |grad| <= 1e-8`.
    Stationary {
        lambda: Vec<f64>,
        loglik: f64,
        iterations: usize,
    },
    /// The likelihood keeps increasing toward the domain boundary (or along
    /// an unbounded recession direction); `direction` is the normalized
    /// ascent direction at the last iterate.
    BoundaryDivergent { direction: Vec<f64> },
}

/// An affine locus in `lambda` where the model density vanishes at an
/// observed extreme value, sending the log-likelihood to minus infinity.
#[derive(Debug, Clone)]
pub struct SingularityLine {
    pub x: f64,
    /// `[1, h_2(x; mu0), ..., h_r(x; mu0)]`; the line is `coeffs . (1, lambda) = 0`.
    pub coeffs: Vec<f64>,
    /// The line coincides (coefficient distance <= 1e-10 after
    /// normalization) with a non-redundant hard-boundary facet.
    pub on_hard_boundary_facet: bool,
}

impl FiberProblem {
    pub fn new(family: Family, order: usize, mu0: f64, sample: Sample) -> Result<Self> {
        family.check_mean(mu0)?;
        for &x in sample.points() {
            family.check_point(x)?;
        }
        let hs = derivative_polys(family, order)?;
        if order < 2 {
            return Err(Error::UnsupportedOrder { order, max: 2 });
        }
        let h_rows: Vec<Vec<f64>> = sample
            .points()
            .iter()
            .map(|&x| hs.iter().skip(1).map(|h| h.eval(family, x, mu0)).collect())
            .collect();
        let log_base: Vec<f64> = sample
            .points()
            .iter()
            .map(|&x| libm::log(family.density_unchecked(x, mu0)))
            .collect();
        Ok(FiberProblem {
            family,
            order,
            mu0,
            sample,
            h_rows,
            log_base,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn sample(&self) -> &Sample {
        &self.sample
    }

    fn dim(&self) -> usize {
        self.order - 1
    }

    fn denom(&self, row: &[f64], lambda: &[f64]) -> f64 {
        1.0 + row.iter().zip(lambda).map(|(h, l)| h * l).sum::<f64>()
    }

    /// Weighted log-likelihood; `-inf` when any observed-point constraint is
    /// non-positive (the singular region).
    pub fn loglik(&self, lambda: &[f64]) -> f64 {
        let mut acc = 0.0;
        for ((row, &w), &lb) in self
            .h_rows
            .iter()
            .zip(self.sample.weights())
            .zip(&self.log_base)
        {
            let d = self.denom(row, lambda);
            if d <= 0.0 {
                return f64::NEG_INFINITY;
            }
            acc += w * (lb + libm::log(d));
        }
        acc
    }

    /// Analytic gradient and Hessian of the fiber log-likelihood.
    pub fn grad_hess(&self, lambda: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let d = self.dim();
        let mut grad = vec![0.0; d];
        let mut hess = DMatrix::<f64>::zeros(d, d);
        for (row, &w) in self.h_rows.iter().zip(self.sample.weights()) {
            let den = self.denom(row, lambda);
            if den <= 0.0 {
                return Err(Error::NotInterior);
            }
            for i in 0..d {
                grad[i] += w * row[i] / den;
                for l in 0..d {
                    hess[(i, l)] -= w * row[i] * row[l] / (den * den);
                }
            }
        }
        Ok((grad, hess))
    }

    /// Largest step along `dir` keeping a fraction-to-boundary margin on
    /// every observed-point constraint.
    fn max_step(&self, lambda: &[f64], dir: &[f64]) -> f64 {
        let mut alpha = f64::INFINITY;
        for row in &self.h_rows {
            let slope: f64 = row.iter().zip(dir).map(|(h, p)| h * p).sum();
            if slope < 0.0 {
                let den = self.denom(row, lambda);
                alpha = alpha.min(BOUNDARY_FRACTION * den / (-slope));
            }
        }
        alpha
    }

    /// Damped Newton with backtracking; the concavity of the fiber makes
    /// this globally convergent on the open polyhedral domain.
    pub fn mle(&self) -> Result<FitOutcome> {
        let d = self.dim();
        let mut lambda = vec![0.0; d];
        let mut value = self.loglik(&lambda);
        for iter in 0..MAX_NEWTON_ITERS {
            let (grad, hess) = self.grad_hess(&lambda)?;
            let gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            if gnorm <= GRAD_TOL {
                return Ok(FitOutcome::Stationary {
                    lambda,
                    loglik: value,
                    iterations: iter,
                });
            }
            let g = DVector::from_column_slice(&grad);
            let mut ridge = 0.0;
            let diag_scale = (0..d).fold(1e-8f64, |m, i| m.max(hess[(i, i)].abs()));
            let dir = loop {
                let mut a = -&hess;
                for i in 0..d {
                    a[(i, i)] += ridge;
                }
                if let Some(sol) = a.lu().solve(&g) {
                    let slope: f64 = grad.iter().zip(sol.iter()).map(|(a, b)| a * b).sum();
                    if slope > 0.0 && sol.iter().all(|v| v.is_finite()) {
                        break sol;
                    }
                }
                ridge = if ridge == 0.0 {
                    1e-10 * diag_scale
                } else {
                    ridge * 100.0
                };
                if ridge > 1e12 * diag_scale {
                    // fall back to steepest ascent
                    break g.clone();
                }
            };
            let dir_slice: Vec<f64> = dir.iter().copied().collect();
            let slope: f64 = grad.iter().zip(&dir_slice).map(|(a, b)| a * b).sum();
            let alpha_max = self.max_step(&lambda, &dir_slice);
            let dir_norm = libm::sqrt(dir_slice.iter().map(|v| v * v).sum::<f64>());
            if alpha_max * dir_norm < 1e-12 {
                // pressed against a facet with the likelihood still rising
                return Ok(FitOutcome::BoundaryDivergent {
                    direction: dir_slice.iter().map(|v| v / dir_norm).collect(),
                });
            }
            let mut alpha = alpha_max.min(1.0);
            let mut accepted = false;
            for _ in 0..80 {
                let trial: Vec<f64> = lambda
                    .iter()
                    .zip(&dir_slice)
                    .map(|(l, p)| l + alpha * p)
                    .collect();
                let tv = self.loglik(&trial);
                if tv >= value + ARMIJO_C * alpha * slope {
                    lambda = trial;
                    value = tv;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                // gradient nonzero but no representable ascent step remains
                return Ok(FitOutcome::BoundaryDivergent {
                    direction: dir_slice.iter().map(|v| v / dir_norm).collect(),
                });
            }
            let lnorm = libm::sqrt(lambda.iter().map(|v| v * v).sum::<f64>());
            if lnorm > 1e8 {
                return Ok(FitOutcome::BoundaryDivergent {
                    direction: dir_slice.iter().map(|v| v / dir_norm).collect(),
                });
            }
        }
        Err(Error::IterationLimit)
    }

    /// Singularity lines for the distinct observed extreme values, with
    /// coincidence flags against the non-redundant hard-boundary facets.
    pub fn singularity_lines(&self) -> Result<Vec<SingularityLine>> {
        let mut extremes = vec![self.sample.min()];
        if self.sample.max() != self.sample.min() {
            extremes.push(self.sample.max());
        }
        let facets: Vec<HalfSpace> = match self.family.support() {
            Support::RealLine => vec![],
            _ => {
                let sys = hard_boundary(self.family, self.mu0, self.order)?;
                sys.nonredundant().cloned().collect()
            }
        };
        let hs = derivative_polys(self.family, self.order)?;
        let mut out = Vec::new();
        for &x in &extremes {
            let mut coeffs = vec![1.0];
            for h in hs.iter().skip(1) {
                coeffs.push(h.eval(self.family, x, self.mu0));
            }
            let on_facet = facets
                .iter()
                .any(|f| normalized_distance(&coeffs, &f.coeffs) <= 1e-10);
            out.push(SingularityLine {
                x,
                coeffs,
                on_hard_boundary_facet: on_facet,
            });
        }
        Ok(out)
    }
}

fn normalized_distance(a: &[f64], b: &[f64]) -> f64 {
    let na = libm::sqrt(a.iter().map(|v| v * v).sum::<f64>());
    let nb = libm::sqrt(b.iter().map(|v| v * v).sum::<f64>());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x / na - y / nb).abs())
        .fold(0.0, f64::max)
}

/// One coarse-grid point of a profile fit.
#[derive(Debug, Clone)]
pub struct ProfilePoint {
    pub mu: f64,
    /// `Some(loglik)` for a stationary inner solve, `None` for a divergent
    /// one.
    pub loglik: Option<f64>,
}

/// Joint fit over `(mu, lambda)` by profiling the fiber likelihood.
#[derive(Debug, Clone)]
pub struct ProfileFit {
    pub mu_hat: f64,
    pub lambda_hat: Vec<f64>,
    pub loglik: f64,
    /// The coarse profile curve (inner-solver status per grid point).
    pub profile: Vec<ProfilePoint>,
}

/// Coarse grid over the bracket followed by golden-section refinement of
/// the profile likelihood, with a damped-Newton fiber solve at each center.
pub fn profile_fit(
    family: Family,
    data: &Sample,
    order: usize,
    coarse_points: usize,
) -> Result<ProfileFit> {
    let (dlo, dhi) = family.mean_domain();
    let margin = 1e-3;
    let mut lo = data.mean() - 4.0 * data.sd();
    let mut hi = data.mean() + 4.0 * data.sd();
    if dlo.is_finite() {
        lo = lo.max(dlo + margin);
    }
    if dhi.is_finite() {
        hi = hi.min(dhi - margin);
    }
    if !(lo < hi) {
        return Err(Error::MeanDomain { mu: data.mean() });
    }
    let npts = coarse_points.max(5);
    let eval = |mu: f64| -> Result<Option<(f64, Vec<f64>)>> {
        let problem = FiberProblem::new(family, order, mu, data.clone())?;
        match problem.mle() {
            Ok(FitOutcome::Stationary { lambda, loglik, .. }) => Ok(Some((loglik, lambda))),
            Ok(FitOutcome::BoundaryDivergent { .. }) => Ok(None),
            Err(Error::IterationLimit) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let mut profile = Vec::with_capacity(npts);
    let mut best: Option<(f64, f64)> = None; // (mu, loglik)
    for j in 0..npts {
        let mu = lo + (hi - lo) * j as f64 / (npts - 1) as f64;
        let value = eval(mu)?.map(|(ll, _)| ll);
        if let Some(ll) = value {
            if best.map(|(_, b)| ll > b).unwrap_or(true) {
                best = Some((mu, ll));
            }
        }
        profile.push(ProfilePoint { mu, loglik: value });
    }
    let Some((best_mu, _)) = best else {
        return Err(Error::FitFailure);
    };
    // golden-section refinement on the bracketing neighbors
    let step = (hi - lo) / (npts - 1) as f64;
    let mut a = (best_mu - step).max(lo);
    let mut b = (best_mu + step).min(hi);
    let phi = (libm::sqrt(5.0) - 1.0) / 2.0;
    let score = |mu: f64| -> Result<f64> {
        Ok(eval(mu)?.map(|(ll, _)| ll).unwrap_or(f64::NEG_INFINITY))
    };
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = score(x1)?;
    let mut f2 = score(x2)?;
    while b - a > 1e-6 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = score(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = score(x1)?;
        }
    }
    let mu_hat = 0.5 * (a + b);
    let (loglik, lambda_hat) = eval(mu_hat)?.ok_or(Error::FitFailure)?;
    Ok(ProfileFit {
        mu_hat,
        lambda_hat,
        loglik,
        profile,
    })
}
