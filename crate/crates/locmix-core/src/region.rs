//! True local mixtures: moment curves, convex-hull membership and the
//! lambda-region generated by extremal two-point mixings.
//!
//! A local mixture model is a true mixture when its first `r` raw moments
//! can be written as a convex combination of points on the moment curve
//! `m -> (m_1(m), ..., m_r(m))`. Membership is decided by an elastic
//! feasibility LP over a discretized curve; the basic solution delivers a
//! discrete mixing with few atoms, and the dual prices of an infeasible fit
//! are a separating functional.

use crate::error::{Error, Result};
use crate::family::Family;
use crate::lmm::LocalMixtureModel;
use crate::lp::{self, Lp, LpOutcome};
use crate::mixing::{phi_map, two_point, DiscreteMixing};
use crate::MAX_ORDER;
use alloc::vec;
use alloc::vec::Vec;

/// Default number of curve discretization points.
pub const DEFAULT_CURVE_GRID: usize = 201;
/// Default tolerance (moment infinity-norm) for hull membership.
pub const DEFAULT_HULL_TOL: f64 = 1e-7;

/// The image of a compact mean interval under the r-moment map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCurve {
    pub family: Family,
    pub m_lo: f64,
    pub m_hi: f64,
    pub order: usize,
}

impl MomentCurve {
    pub fn new(family: Family, m_lo: f64, m_hi: f64, order: usize) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(Error::UnsupportedOrder {
                order,
                max: MAX_ORDER,
            });
        }
        family.check_mean(m_lo)?;
        family.check_mean(m_hi)?;
        if m_lo >= m_hi {
            return Err(Error::InvalidMixing("degenerate moment-curve interval"));
        }
        Ok(MomentCurve {
            family,
            m_lo,
            m_hi,
            order,
        })
    }

    /// `(m_1(m), ..., m_r(m))`.
    pub fn point(&self, m: f64) -> Result<Vec<f64>> {
        if m < self.m_lo || m > self.m_hi {
            return Err(Error::MeanDomain { mu: m });
        }
        (1..=self.order)
            .map(|i| self.family.raw_moment(m, i))
            .collect()
    }

    /// Uniform grid over the interval.
    pub fn grid(&self, npoints: usize) -> Vec<f64> {
        let n = npoints.max(2);
        (0..n)
            .map(|j| self.m_lo + (self.m_hi - self.m_lo) * j as f64 / (n - 1) as f64)
            .collect()
    }
}

/// Elastic convex-combination fit: find weights `w >= 0`, `sum w = 1` with
/// `sum_j w_j columns[j]` close to `target`, minimizing the L1 elastic
/// residual. Returns `(weights, per-row residual, dual prices)`; the duals
/// have one extra entry for the weight-sum row.
fn elastic_fit(columns: &[Vec<f64>], target: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let r = target.len();
    let n = columns.len();
    let scales: Vec<f64> = target.iter().map(|t| 1.0 / (1.0 + t.abs())).collect();
    let ncols = n + 2 * r;
    let mut rows = Vec::with_capacity(r + 1);
    let mut rhs = Vec::with_capacity(r + 1);
    for i in 0..r {
        let mut row = vec![0.0; ncols];
        for (j, col) in columns.iter().enumerate() {
            row[j] = scales[i] * col[i];
        }
        row[n + i] = 1.0; // u_i
        row[n + r + i] = -1.0; // v_i
        rows.push(row);
        rhs.push(scales[i] * target[i]);
    }
    let mut sum_row = vec![0.0; ncols];
    for cell in sum_row.iter_mut().take(n) {
        *cell = 1.0;
    }
    rows.push(sum_row);
    rhs.push(1.0);
    let mut objective = vec![0.0; ncols];
    for c in objective.iter_mut().skip(n) {
        *c = 1.0;
    }
    match lp::solve(&Lp {
        ncols,
        objective,
        rows,
        rhs,
    })? {
        LpOutcome::Optimal { x, duals, .. } => {
            let weights = x[..n].to_vec();
            let residuals: Vec<f64> = (0..r).map(|i| (x[n + i] + x[n + r + i]) / scales[i]).collect();
            let mut cert: Vec<f64> = (0..r).map(|i| duals[i] * scales[i]).collect();
            cert.push(duals[r]);
            Ok((weights, residuals, cert))
        }
        LpOutcome::Infeasible { .. } => Err(Error::LpInternal("elastic fit infeasible")),
        LpOutcome::Unbounded => Err(Error::LpInternal("elastic fit unbounded")),
    }
}

/// Hull-membership verdict for a moment vector.
#[derive(Debug, Clone)]
pub enum TrueMixtureVerdict {
    /// Inside the hull: a discrete mixing on curve grid points reproducing
    /// the moments within tolerance.
    True { atoms: DiscreteMixing },
    /// Outside: a separating functional `(y_1..y_r, c0)` with
    /// `y . target + c0 > 0 >= y . curve(m) + c0` on the grid.
    False { certificate: Vec<f64> },
}

/// Fit the target against the discretized curve, adaptively refining the
/// grid. The initial uniform grid only supports the hull to within its
/// chord sagitta, far coarser than `tol`; each round inserts midpoints
/// around the active atoms and any curve point the current separating
/// certificate fails to separate, so true members converge below `tol`
/// while genuine outsiders keep a certificate valid on a refined grid.
fn fit_to_curve(
    target: &[f64],
    curve: &MomentCurve,
    tol: f64,
    grid_points: usize,
) -> Result<(Vec<(f64, f64)>, Vec<f64>, Vec<f64>)> {
    const MAX_ROUNDS: usize = 40;
    let mut ms = curve.grid(grid_points.max(3));
    let mut prev_worst = f64::INFINITY;
    for _ in 0..MAX_ROUNDS {
        let columns: Vec<Vec<f64>> = ms.iter().map(|&m| curve.point(m)).collect::<Result<_>>()?;
        let (weights, residuals, cert) = elastic_fit(&columns, target)?;
        let atoms: Vec<(f64, f64)> = ms
            .iter()
            .zip(&weights)
            .filter(|(_, &w)| w > 1e-12)
            .map(|(&m, &w)| (m, w))
            .collect();
        let worst = residuals.iter().fold(0.0f64, |acc, &r| acc.max(r));
        if worst <= tol {
            return Ok((atoms, residuals, cert));
        }
        let mut added = false;
        // midpoints of the neighbor intervals around each active atom
        let mut new_points: Vec<f64> = Vec::new();
        for &(m, _) in &atoms {
            let idx = ms.partition_point(|&v| v < m).min(ms.len() - 1);
            if idx > 0 {
                new_points.push(0.5 * (ms[idx - 1] + ms[idx]));
            }
            if idx + 1 < ms.len() {
                new_points.push(0.5 * (ms[idx] + ms[idx + 1]));
            }
        }
        // curve points the certificate scores at least as high as the target
        let score = |m: f64| -> Result<f64> {
            let p = curve.point(m)?;
            Ok(cert[..target.len()]
                .iter()
                .zip(&p)
                .map(|(y, v)| y * v)
                .sum::<f64>()
                + cert[target.len()])
        };
        let target_score: f64 = cert[..target.len()]
            .iter()
            .zip(target)
            .map(|(y, v)| y * v)
            .sum::<f64>()
            + cert[target.len()];
        let fine = curve.grid(4 * ms.len());
        let mut best_violation: Option<(f64, f64)> = None;
        for &m in &fine {
            let s = score(m)?;
            if s >= target_score - 1e-12 {
                match best_violation {
                    Some((_, bs)) if bs >= s => {}
                    _ => best_violation = Some((m, s)),
                }
            }
        }
        if let Some((m, _)) = best_violation {
            new_points.push(m);
        } else if worst > 0.99 * prev_worst {
            // certificate survives the continuum probe and the residual has
            // stopped shrinking: genuinely outside
            return Ok((atoms, residuals, cert));
        }
        prev_worst = worst;
        for m in new_points {
            let idx = ms.partition_point(|&v| v < m);
            let dup = (idx > 0 && (ms[idx - 1] - m).abs() < 1e-14 * (1.0 + m.abs()))
                || (idx < ms.len() && (ms[idx] - m).abs() < 1e-14 * (1.0 + m.abs()));
            if !dup {
                ms.insert(idx, m);
                added = true;
            }
        }
        if !added {
            // certificate holds on the refined continuum probe and no atom
            // neighborhood can be split further: genuinely outside
            return Ok((atoms, residuals, cert));
        }
    }
    let columns: Vec<Vec<f64>> = ms.iter().map(|&m| curve.point(m)).collect::<Result<_>>()?;
    let (weights, residuals, cert) = elastic_fit(&columns, target)?;
    let atoms: Vec<(f64, f64)> = ms
        .iter()
        .zip(&weights)
        .filter(|(_, &w)| w > 1e-12)
        .map(|(&m, &w)| (m, w))
        .collect();
    Ok((atoms, residuals, cert))
}

/// Decide whether a model's first `r` moments lie in the convex hull of the
/// moment curve over `[m_lo, m_hi]`, within `tol` in the infinity norm.
pub fn is_true_local_mixture(
    model: &LocalMixtureModel,
    m_lo: f64,
    m_hi: f64,
    tol: f64,
    grid_points: usize,
) -> Result<TrueMixtureVerdict> {
    let curve = MomentCurve::new(model.family(), m_lo, m_hi, model.order())?;
    let target = model.moment_vector(model.order())?;
    let (atoms, residuals, cert) = fit_to_curve(&target, &curve, tol, grid_points)?;
    let worst = residuals.iter().fold(0.0f64, |m, &r| m.max(r));
    if worst <= tol {
        let total: f64 = atoms.iter().map(|&(_, w)| w).sum();
        let normalized: Vec<(f64, f64)> = atoms.iter().map(|&(m, w)| (m, w / total)).collect();
        Ok(TrueMixtureVerdict::True {
            atoms: DiscreteMixing::new(&normalized)?,
        })
    } else {
        Ok(TrueMixtureVerdict::False { certificate: cert })
    }
}

/// Recover a discrete mixing with few atoms matching a target moment
/// vector; errors if the target is outside the hull at tolerance `tol`.
pub fn caratheodory_atoms(
    target: &[f64],
    curve: &MomentCurve,
    tol: f64,
    grid_points: usize,
) -> Result<DiscreteMixing> {
    let (atoms, residuals, _) = fit_to_curve(target, curve, tol, grid_points)?;
    let worst = residuals.iter().fold(0.0f64, |m, &r| m.max(r));
    if worst > tol {
        return Err(Error::OutsideHull);
    }
    let total: f64 = atoms.iter().map(|&(_, w)| w).sum();
    let normalized: Vec<(f64, f64)> = atoms.iter().map(|&(m, w)| (m, w / total)).collect();
    DiscreteMixing::new(&normalized)
}

/// The Phi-image region of mixings supported on `[m_lo, m_hi]` with mean
/// `mu`, described through its extremal two-point generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaRegion {
    pub family: Family,
    pub mu: f64,
    pub m_lo: f64,
    pub m_hi: f64,
    pub order: usize,
}

impl LambdaRegion {
    pub fn new(family: Family, mu: f64, m_lo: f64, m_hi: f64, order: usize) -> Result<Self> {
        family.check_mean(mu)?;
        family.check_mean(m_lo)?;
        family.check_mean(m_hi)?;
        if !(2..=MAX_ORDER).contains(&order) {
            return Err(Error::UnsupportedOrder {
                order,
                max: MAX_ORDER,
            });
        }
        if m_lo > mu || mu > m_hi {
            return Err(Error::InfeasibleMean {
                mu,
                lo: m_lo,
                hi: m_hi,
            });
        }
        Ok(LambdaRegion {
            family,
            mu,
            m_lo,
            m_hi,
            order,
        })
    }

    /// Grid pairs `(mu1, mu2)` with `mu1 <= mu <= mu2`, `mu1 != mu2`.
    pub fn generator_pairs(&self, grid_size: usize) -> Vec<(f64, f64)> {
        let g = grid_size.max(2);
        let grid: Vec<f64> = (0..g)
            .map(|j| self.m_lo + (self.m_hi - self.m_lo) * j as f64 / (g - 1) as f64)
            .collect();
        let mut pairs = Vec::new();
        for &a in &grid {
            for &b in &grid {
                if a < b && a <= self.mu && self.mu <= b {
                    pairs.push((a, b));
                }
            }
        }
        pairs
    }

    /// Phi-images of the extremal two-point mixings on the grid, plus the
    /// zero vector for the degenerate mixing.
    pub fn extremal_points(&self, grid_size: usize) -> Result<Vec<Vec<f64>>> {
        let mut out = vec![vec![0.0; self.order - 1]];
        for (a, b) in self.generator_pairs(grid_size) {
            let q = two_point(self.mu, b, a)?;
            out.push(phi_map(&q, self.mu, self.order)?);
        }
        Ok(out)
    }

    /// LP feasibility of `lambda` over the convex hull of the extremal
    /// generators. For non-binomial families this is a sufficient condition
    /// for being a true local mixture, not a characterization.
    pub fn contains(&self, lambda: &[f64], tol: f64, grid_size: usize) -> Result<bool> {
        let generators = self.extremal_points(grid_size)?;
        let (_, residuals, _) = elastic_fit(&generators, lambda)?;
        Ok(residuals.iter().all(|&r| r <= tol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moment_curve_points() {
        let c = MomentCurve::new(Family::Normal, -1.0, 3.0, 2).unwrap();
        let p = c.point(0.5).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-14);
        assert!((p[1] - 1.25).abs() < 1e-14);

        let c = MomentCurve::new(Family::Binomial { n: 2 }, 0.5, 1.5, 2).unwrap();
        let p = c.point(1.0).unwrap();
        assert!((p[1] - 1.5).abs() < 1e-13);

        let c = MomentCurve::new(Family::Poisson, 0.5, 2.0, 3).unwrap();
        let p = c.point(1.0).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-13);
        assert!((p[1] - 2.0).abs() < 1e-13);
        assert!((p[2] - 5.0).abs() < 1e-13);

        assert!(matches!(c.point(3.0), Err(Error::MeanDomain { .. })));
    }

    #[test]
    fn zero_lambda_is_true_with_degenerate_atoms() {
        let fam = Family::Binomial { n: 10 };
        let m = LocalMixtureModel::new(fam, 4, 5.0, vec![0.0, 0.0, 0.0]).unwrap();
        match is_true_local_mixture(&m, 3.0, 7.0, DEFAULT_HULL_TOL, 201).unwrap() {
            TrueMixtureVerdict::True { atoms } => {
                assert!((atoms.mean() - 5.0).abs() < 1e-6);
            }
            TrueMixtureVerdict::False { .. } => panic!("lambda = 0 must be a true mixture"),
        }
    }

    #[test]
    fn negative_lambda2_rejected_with_certificate() {
        let fam = Family::Binomial { n: 10 };
        let m = LocalMixtureModel::new(fam, 4, 5.0, vec![-0.3, 0.0, 0.0]).unwrap();
        match is_true_local_mixture(&m, 3.0, 7.0, DEFAULT_HULL_TOL, 201).unwrap() {
            TrueMixtureVerdict::False { certificate } => {
                // the certificate separates the target from the grid columns
                let target = m.moment_vector(4).unwrap();
                let curve = MomentCurve::new(fam, 3.0, 7.0, 4).unwrap();
                let c0 = certificate[4];
                let score_target: f64 =
                    certificate[..4].iter().zip(&target).map(|(y, t)| y * t).sum::<f64>() + c0;
                let max_grid = curve
                    .grid(201)
                    .iter()
                    .map(|&g| {
                        certificate[..4]
                            .iter()
                            .zip(curve.point(g).unwrap())
                            .map(|(y, t)| y * t)
                            .sum::<f64>()
                            + c0
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(score_target > max_grid + 1e-9);
            }
            TrueMixtureVerdict::True { .. } => panic!("negative lambda2 cannot be a true mixture"),
        }
    }

    #[test]
    fn caratheodory_midpoint() {
        let fam = Family::Binomial { n: 10 };
        let curve = MomentCurve::new(fam, 3.0, 7.0, 4).unwrap();
        // grid of 201 over [3, 7] contains 4.0 and 6.0 exactly
        let a = curve.point(4.0).unwrap();
        let b = curve.point(6.0).unwrap();
        let target: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let q = caratheodory_atoms(&target, &curve, 1e-7, 201).unwrap();
        assert!(q.atoms().len() <= 5);
        // moments of the recovered mixing match the target
        for (i, &t) in target.iter().enumerate() {
            let got: f64 = q
                .atoms()
                .iter()
                .map(|&(m, w)| w * fam.raw_moment(m, i + 1).unwrap())
                .sum();
            assert!((got - t).abs() < 1e-6, "moment {i}: {got} vs {t}");
        }
        // single curve point comes back as (nearly) one atom
        let single = caratheodory_atoms(&curve.point(5.0).unwrap(), &curve, 1e-7, 201).unwrap();
        assert!((single.mean() - 5.0).abs() < 1e-6);
    }

    #[test]
    fn off_grid_two_point_accepted() {
        // atoms deliberately between uniform grid nodes; the initial chord
        // gap in m4 is ~1e-2, so this only passes with adaptive refinement
        let fam = Family::Binomial { n: 20 };
        let q = two_point(8.0, 9.137, 6.2193).unwrap();
        let model = crate::mixing::localize(fam, &q, 4).unwrap();
        match is_true_local_mixture(&model, 6.0, 10.0, DEFAULT_HULL_TOL, 201).unwrap() {
            TrueMixtureVerdict::True { atoms } => {
                let target = model.moment_vector(4).unwrap();
                for (i, &t) in target.iter().enumerate() {
                    let got: f64 = atoms
                        .atoms()
                        .iter()
                        .map(|&(m, w)| w * fam.raw_moment(m, i + 1).unwrap())
                        .sum();
                    assert!((got - t).abs() <= 1e-6 * (1.0 + t.abs()), "moment {i}");
                }
            }
            TrueMixtureVerdict::False { .. } => panic!("localized mixture must be a member"),
        }
    }

    #[test]
    fn outside_hull_errors() {
        let fam = Family::Binomial { n: 10 };
        let curve = MomentCurve::new(fam, 3.0, 7.0, 2).unwrap();
        assert!(matches!(
            caratheodory_atoms(&[5.0, 0.0], &curve, 1e-7, 101),
            Err(Error::OutsideHull)
        ));
    }

    #[test]
    fn extremal_points_endpoints_only() {
        let region = LambdaRegion::new(Family::Binomial { n: 10 }, 5.0, 3.0, 7.0, 3).unwrap();
        let pts = region.extremal_points(2).unwrap();
        // the zero vector plus the single admissible endpoint pair
        assert_eq!(pts.len(), 2);
        assert!(pts.iter().all(|p| p[0] >= 0.0));
    }

    #[test]
    fn membership_basics() {
        let region = LambdaRegion::new(Family::Binomial { n: 10 }, 5.0, 4.0, 6.0, 3).unwrap();
        assert!(region.contains(&[0.0, 0.0], 1e-7, 12).unwrap());
        let q = two_point(5.0, 6.0, 4.0).unwrap();
        let lam = phi_map(&q, 5.0, 3).unwrap();
        assert!(region.contains(&lam, 1e-7, 13).unwrap());
        // lambda2 beyond the maximal generator cannot be inside
        let max_l2 = region
            .extremal_points(12)
            .unwrap()
            .iter()
            .map(|p| p[0])
            .fold(0.0f64, f64::max);
        assert!(!region.contains(&[max_l2 * 1.5, 0.0], 1e-7, 12).unwrap());
    }
}
