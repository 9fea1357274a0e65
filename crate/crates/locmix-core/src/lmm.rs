//! The local mixture model `g(x; mu, lambda)` and its parameter geometry.
//!
//! `g` multiplies the base density by the correction polynomial
//! `1 + sum_{i=2}^r lambda_i h_i(x; mu)`. `g` always integrates to one and
//! always has mean exactly `mu`, but it is a density only while the
//! correction stays nonnegative on the support; the locus where it first
//! touches zero is the hard boundary. Models outside the boundary still
//! evaluate (to signed values) so that likelihood scans can map the
//! singularity region.

use crate::deriv::{derivative_polys, DerivPoly};
use crate::error::{Error, Result};
use crate::family::{Family, Support};
use crate::lp::{self, Lp, LpOutcome};
use crate::poly::Poly;
use crate::rng::rng_from_seed;
use crate::{MAX_MOMENT, MAX_ORDER};
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

/// Where a model sits relative to the hard boundary. `OnBoundary` is
/// declared when the minimum correction value is within `1e-12` of zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Positivity {
    Interior,
    OnBoundary { witness: f64 },
    Outside { witness: f64 },
}

const BOUNDARY_BAND: f64 = 1e-12;

/// An order-`r` local mixture model over a family.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMixtureModel {
    family: Family,
    order: usize,
    mu: f64,
    /// `(lambda_2, ..., lambda_r)`; indexing starts at 2 because the first
    /// derivative is deliberately absent from the expansion.
    lambda: Vec<f64>,
}

impl LocalMixtureModel {
    pub fn new(family: Family, order: usize, mu: f64, lambda: Vec<f64>) -> Result<Self> {
        if !(2..=MAX_ORDER).contains(&order) {
            return Err(Error::UnsupportedOrder {
                order,
                max: MAX_ORDER,
            });
        }
        if lambda.len() != order - 1 {
            return Err(Error::UnsupportedOrder {
                order: lambda.len() + 1,
                max: order,
            });
        }
        family.check_mean(mu)?;
        Ok(LocalMixtureModel {
            family,
            order,
            mu,
            lambda,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    fn derivs(&self) -> Vec<DerivPoly> {
        derivative_polys(self.family, self.order).expect("order validated at construction")
    }

    /// The correction `1 + sum lambda_i h_i(x; mu)` as a numeric polynomial
    /// in `x`.
    pub fn correction_poly(&self) -> Poly {
        let hs = self.derivs();
        let mut p = Poly::constant(1.0);
        for (i, lam) in self.lambda.iter().enumerate() {
            if *lam != 0.0 {
                p = p.add(&hs[i + 1].x_poly(self.family, self.mu).scale(*lam));
            }
        }
        p
    }

    /// `g(x; mu, lambda)`. May be negative outside the hard boundary.
    pub fn density(&self, x: f64) -> Result<f64> {
        self.family.check_point(x)?;
        let base = self.family.density_unchecked(x, self.mu);
        Ok(base * self.correction_poly().eval(x))
    }

    /// Classify the model against the hard boundary, reporting a minimizing
    /// support point as witness.
    ///
    /// Finite support is scanned exactly. Countable support is scanned up to
    /// the Cauchy root bound of the correction polynomial; beyond it the sign
    /// is that of the leading coefficient. Continuous support uses the global
    /// polynomial minimum from the real roots of the derivative.
    pub fn positivity(&self) -> Positivity {
        let p = self.correction_poly();
        let deg = p.effective_degree(1e-13);
        match self.family.support() {
            Support::Finite { max } => {
                let (w, m) = scan_min(&p, 0, max);
                classify(m, w)
            }
            Support::NonnegativeIntegers => {
                let bound = p.cauchy_bound(1e-13);
                let tail = self
                    .family
                    .scan_upper(self.mu)
                    .unwrap_or(0)
                    .max(libm::ceil(bound) as u32 + 1);
                let (w, m) = scan_min(&p, 0, tail);
                if deg > 0 && p.coeff(deg) < 0.0 {
                    // beyond the root bound the polynomial keeps the sign of
                    // its leading coefficient
                    let far = libm::ceil(bound) as f64 + 1.0;
                    let v = p.eval(far);
                    if v < m {
                        return classify(v, far);
                    }
                }
                classify(m, w)
            }
            Support::RealLine => {
                if deg == 0 {
                    return classify(p.coeff(0), self.mu);
                }
                let lead = p.coeff(deg);
                if deg % 2 == 1 || lead < 0.0 {
                    // the polynomial goes to -inf on at least one side
                    let far = p.cauchy_bound(1e-13) + 1.0;
                    let witness = if lead < 0.0 { far } else { -far };
                    return classify(p.eval(witness), witness);
                }
                let mut best = (self.mu, p.eval(self.mu));
                for r in p.derivative().real_roots() {
                    let v = p.eval(r);
                    if v < best.1 {
                        best = (r, v);
                    }
                }
                classify(best.1, best.0)
            }
        }
    }

    /// First `rprime` raw moments of `g`:
    /// `E_g[X^i] = m_i(mu) + sum_k lambda_k m_i^(k)(mu)`.
    pub fn moment_vector(&self, rprime: usize) -> Result<Vec<f64>> {
        if rprime + self.order > MAX_MOMENT {
            return Err(Error::UnsupportedMoment {
                index: rprime + self.order,
                max: MAX_MOMENT,
            });
        }
        let mut out = Vec::with_capacity(rprime);
        for i in 1..=rprime {
            let mut v = self.family.raw_moment(self.mu, i)?;
            for (idx, lam) in self.lambda.iter().enumerate() {
                if *lam != 0.0 {
                    v += lam * self.family.raw_moment_deriv(self.mu, i, idx + 2)?;
                }
            }
            out.push(v);
        }
        Ok(out)
    }

    /// Draws from the normalized pmf table; finite support and strictly
    /// interior models only.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<f64>> {
        let Support::Finite { max } = self.family.support() else {
            return Err(Error::ContinuousSupport);
        };
        if !matches!(self.positivity(), Positivity::Interior) {
            return Err(Error::NotInterior);
        }
        let pmf: Vec<f64> = (0..=max)
            .map(|x| self.density(x as f64).expect("support point"))
            .collect();
        let total: f64 = pmf.iter().sum();
        let mut rng = rng_from_seed(seed);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let mut u: f64 = rng.gen::<f64>() * total;
            let mut x = 0u32;
            for (i, &p) in pmf.iter().enumerate() {
                x = i as u32;
                u -= p;
                if u <= 0.0 {
                    break;
                }
            }
            out.push(x as f64);
        }
        Ok(out)
    }
}

fn classify(min_value: f64, witness: f64) -> Positivity {
    if min_value > BOUNDARY_BAND {
        Positivity::Interior
    } else if min_value >= -BOUNDARY_BAND {
        Positivity::OnBoundary { witness }
    } else {
        Positivity::Outside { witness }
    }
}

fn scan_min(p: &Poly, lo: u32, hi: u32) -> (f64, f64) {
    let mut best = (lo as f64, p.eval(lo as f64));
    for x in lo + 1..=hi {
        let v = p.eval(x as f64);
        if v < best.1 {
            best = (x as f64, v);
        }
    }
    (best.0, best.1)
}

/// One half-space of the hard boundary: the model is inside while
/// `coeffs[0] + sum_i coeffs[i] lambda_{i+1} > 0`, with `coeffs[0] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub x: f64,
    /// `[1, h_2(x; mu), ..., h_r(x; mu)]`.
    pub coeffs: Vec<f64>,
}

impl HalfSpace {
    pub fn value(&self, lambda: &[f64]) -> f64 {
        self.coeffs[0]
            + self.coeffs[1..]
                .iter()
                .zip(lambda)
                .map(|(c, l)| c * l)
                .sum::<f64>()
    }
}

/// The hard boundary of a fiber as explicit half-spaces, one per support
/// point, with an LP-based redundancy report.
#[derive(Debug, Clone)]
pub struct HalfSpaceSystem {
    pub constraints: Vec<HalfSpace>,
    /// `redundant[i]` when constraint `i` is implied by the others.
    pub redundant: Vec<bool>,
}

impl HalfSpaceSystem {
    pub fn strictly_satisfied(&self, lambda: &[f64]) -> bool {
        self.constraints.iter().all(|c| c.value(lambda) > 0.0)
    }

    pub fn nonredundant(&self) -> impl Iterator<Item = &HalfSpace> {
        self.constraints
            .iter()
            .zip(&self.redundant)
            .filter(|(_, &r)| !r)
            .map(|(c, _)| c)
    }
}

/// The half-space constraint contributed by a single support point; valid
/// for any support type, which is the generator form used for continuous
/// families.
pub fn constraint_at(family: Family, mu: f64, r: usize, x: f64) -> Result<HalfSpace> {
    family.check_mean(mu)?;
    let hs = derivative_polys(family, r)?;
    let mut coeffs = vec![1.0];
    for h in hs.iter().skip(1) {
        coeffs.push(h.eval(family, x, mu));
    }
    Ok(HalfSpace { x, coeffs })
}

/// Hard boundary of the fiber at `mu` for finite or truncated-countable
/// support: one half-space per support point, plus the redundancy report.
pub fn hard_boundary(family: Family, mu: f64, r: usize) -> Result<HalfSpaceSystem> {
    family.check_mean(mu)?;
    let upper = family.scan_upper(mu).ok_or(Error::ContinuousSupport)?;
    let constraints: Vec<HalfSpace> = (0..=upper)
        .map(|x| constraint_at(family, mu, r, x as f64))
        .collect::<Result<_>>()?;
    let redundant = redundancy_report(&constraints)?;
    Ok(HalfSpaceSystem {
        constraints,
        redundant,
    })
}

/// Marks each constraint implied by the rest. Constraint `j` is redundant
/// when minimizing its value subject to the others being nonnegative still
/// cannot push it below zero.
fn redundancy_report(constraints: &[HalfSpace]) -> Result<Vec<bool>> {
    let m = constraints.len();
    let d = constraints
        .first()
        .map(|c| c.coeffs.len() - 1)
        .unwrap_or(0);
    let mut redundant = vec![false; m];
    for j in 0..m {
        // variables: lambda split into u - v (2d), one slack per other
        // constraint; rows: value_i(u - v) - s_i = -1 for i != j
        let others: Vec<usize> = (0..m).filter(|&i| i != j).collect();
        let ncols = 2 * d + others.len();
        let mut rows = Vec::with_capacity(others.len());
        let mut rhs = Vec::with_capacity(others.len());
        for (slack, &i) in others.iter().enumerate() {
            let mut row = vec![0.0; ncols];
            for k in 0..d {
                row[k] = constraints[i].coeffs[k + 1];
                row[d + k] = -constraints[i].coeffs[k + 1];
            }
            row[2 * d + slack] = -1.0;
            rows.push(row);
            rhs.push(-1.0);
        }
        let mut objective = vec![0.0; ncols];
        for k in 0..d {
            objective[k] = constraints[j].coeffs[k + 1];
            objective[d + k] = -constraints[j].coeffs[k + 1];
        }
        match lp::solve(&Lp {
            ncols,
            objective,
            rows,
            rhs,
        })? {
            LpOutcome::Optimal { objective, .. } => {
                if 1.0 + objective >= -1e-9 {
                    redundant[j] = true;
                }
            }
            LpOutcome::Unbounded => {}
            LpOutcome::Infeasible { .. } => {
                return Err(Error::LpInternal("redundancy base set infeasible"));
            }
        }
    }
    Ok(redundant)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_lambda_reduces_to_family() {
        let fam = Family::Binomial { n: 10 };
        let m = LocalMixtureModel::new(fam, 4, 3.5, vec![0.0, 0.0, 0.0]).unwrap();
        for x in 0..=10 {
            let x = x as f64;
            assert!((m.density(x).unwrap() - fam.density(x, 3.5).unwrap()).abs() < 1e-14);
        }
        assert_eq!(m.positivity(), Positivity::Interior);
    }

    #[test]
    fn normal_counterexample_is_interior() {
        let m =
            LocalMixtureModel::new(Family::Normal, 4, 0.0, vec![-0.01, 0.0, 0.003]).unwrap();
        assert_eq!(m.positivity(), Positivity::Interior);
        for x in [-4.0, -1.0, 0.0, 2.0, 5.0] {
            assert!(m.density(x).unwrap() > 0.0);
        }
    }

    #[test]
    fn normal_outside_with_valid_witness() {
        let m = LocalMixtureModel::new(Family::Normal, 4, 0.0, vec![-1.0, 0.0, 0.0]).unwrap();
        match m.positivity() {
            Positivity::Outside { witness } => {
                // correction is 2 - x^2, negative for |x| > sqrt(2)
                assert!(m.density(witness).unwrap() < 0.0);
                assert!(witness.abs() > libm::sqrt(2.0));
            }
            other => panic!("expected outside, got {other:?}"),
        }
    }

    #[test]
    fn binomial_normalization_exact() {
        let m = LocalMixtureModel::new(
            Family::Binomial { n: 10 },
            3,
            5.0,
            vec![0.05, -0.01],
        )
        .unwrap();
        let total: f64 = (0..=10).map(|x| m.density(x as f64).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn moment_vector_mean_is_mu() {
        let m = LocalMixtureModel::new(
            Family::Binomial { n: 10 },
            4,
            4.2,
            vec![0.3, -0.05, 0.01],
        )
        .unwrap();
        let mv = m.moment_vector(4).unwrap();
        assert!((mv[0] - 4.2).abs() < 1e-12);
    }

    #[test]
    fn normal_variance_identity() {
        // Var = 1 + 2 lambda_2 for the unit-variance normal
        let lam2 = -0.01;
        let m = LocalMixtureModel::new(Family::Normal, 4, 1.5, vec![lam2, 0.0, 0.003]).unwrap();
        let mv = m.moment_vector(2).unwrap();
        let var = mv[1] - mv[0] * mv[0];
        assert!((var - (1.0 + 2.0 * lam2)).abs() < 1e-12);
    }

    #[test]
    fn binomial_hard_boundary_counts() {
        let sys = hard_boundary(Family::Binomial { n: 10 }, 5.0, 3).unwrap();
        assert_eq!(sys.constraints.len(), 11);
        let sys1 = hard_boundary(Family::Binomial { n: 1 }, 0.5, 2).unwrap();
        assert_eq!(sys1.constraints.len(), 2);
    }

    #[test]
    fn boundary_agrees_with_positivity() {
        let fam = Family::Binomial { n: 10 };
        let mu = 4.0;
        let sys = hard_boundary(fam, mu, 3).unwrap();
        for lambda in [
            vec![0.0, 0.0],
            vec![0.2, 0.03],
            vec![-0.4, 0.0],
            vec![1.5, -0.5],
        ] {
            let m = LocalMixtureModel::new(fam, 3, mu, lambda.clone()).unwrap();
            let interior = matches!(m.positivity(), Positivity::Interior);
            assert_eq!(interior, sys.strictly_satisfied(&lambda), "lambda {lambda:?}");
        }
    }

    #[test]
    fn sampling_preconditions() {
        let outside =
            LocalMixtureModel::new(Family::Normal, 4, 0.0, vec![-1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            outside.sample(10, 1),
            Err(Error::ContinuousSupport)
        ));
        let m = LocalMixtureModel::new(Family::Binomial { n: 5 }, 2, 2.0, vec![-5.0]).unwrap();
        assert!(matches!(m.sample(10, 1), Err(Error::NotInterior)));
        let ok = LocalMixtureModel::new(Family::Binomial { n: 5 }, 2, 2.0, vec![0.01]).unwrap();
        assert_eq!(ok.sample(0, 1).unwrap(), Vec::<f64>::new());
    }
}
