//! Derivative ratio polynomials `h_k(x; mu) = f^(k)(x; mu) / f(x; mu)`.
//!
//! For a natural exponential family in mean parametrization the score is
//! `h_1 = (x - mu)/V(mu)` and differentiating `f^(k) = h_k f` once more gives
//! the recurrence `h_{k+1} = dh_k/dmu + h_1 h_k`. Each `x`-coefficient of
//! `h_k` is a rational function of `mu`: a polynomial numerator over
//! `V(mu)^k`. Holding the numerators symbolically lets the recurrence
//! differentiate exactly in `mu`; no finite differencing enters the core.

use crate::error::{Error, Result};
use crate::family::Family;
use crate::poly::Poly;
use crate::MAX_ORDER;
use alloc::vec::Vec;

/// The ratio `f^(k)/f` as a polynomial of exact degree `k` in `x` whose
/// `x^j` coefficient is `numerators[j](mu) / V(mu)^k`.
#[derive(Debug, Clone)]
pub struct DerivPoly {
    pub order: usize,
    pub numerators: Vec<Poly>,
}

impl DerivPoly {
    /// Numeric `x`-coefficients at a given mean.
    pub fn coeffs_at(&self, family: Family, mu: f64) -> Vec<f64> {
        let vk = libm::pow(family.variance(mu), self.order as f64);
        self.numerators.iter().map(|p| p.eval(mu) / vk).collect()
    }

    /// Numeric polynomial in `x` at a given mean.
    pub fn x_poly(&self, family: Family, mu: f64) -> Poly {
        Poly::from_coeffs(&self.coeffs_at(family, mu))
    }

    pub fn eval(&self, family: Family, x: f64, mu: f64) -> f64 {
        self.x_poly(family, mu).eval(x)
    }
}

/// The ratios `h_1, ..., h_kmax` for a family. `kmax` must lie in `[1, 8]`;
/// numerator coefficient growth makes higher orders ill-conditioned in
/// double precision.
pub fn derivative_polys(family: Family, kmax: usize) -> Result<Vec<DerivPoly>> {
    if kmax == 0 || kmax > MAX_ORDER {
        return Err(Error::UnsupportedOrder {
            order: kmax,
            max: MAX_ORDER,
        });
    }
    let v = family.variance_poly();
    let dv = v.derivative();
    let mut out: Vec<DerivPoly> = Vec::with_capacity(kmax);
    // h_1 = (x - mu)/V: numerators (-mu, 1)
    out.push(DerivPoly {
        order: 1,
        numerators: alloc::vec![Poly::from_coeffs(&[0.0, -1.0]), Poly::constant(1.0)],
    });
    let mu_poly = Poly::from_coeffs(&[0.0, 1.0]);
    for k in 1..kmax {
        let prev = &out[k - 1].numerators;
        let mut next: Vec<Poly> = Vec::with_capacity(k + 2);
        for j in 0..=k + 1 {
            // d/dmu of num_j/V^k contributes (num_j' V - k num_j V')/V^{k+1};
            // h_1 * h_k contributes (num_{j-1} - mu num_j)/V^{k+1}
            let mut num = Poly::zero();
            if j <= k {
                let nj = &prev[j];
                num = num
                    .add(&nj.derivative().mul(&v))
                    .sub(&nj.mul(&dv).scale(k as f64))
                    .sub(&mu_poly.mul(nj));
            }
            if j >= 1 && j - 1 <= k {
                num = num.add(&prev[j - 1]);
            }
            next.push(num);
        }
        out.push(DerivPoly {
            order: k + 1,
            numerators: next,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_term() {
        for fam in [Family::Binomial { n: 10 }, Family::Poisson, Family::Normal] {
            let h = derivative_polys(fam, 1).unwrap();
            let mu = 2.5;
            let v = fam.variance(mu);
            for x in [0.0, 1.0, 4.0] {
                assert!((h[0].eval(fam, x, mu) - (x - mu) / v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normal_hermite_forms() {
        // h_2 = (x-mu)^2 - 1, h_3 = (x-mu)^3 - 3(x-mu),
        // h_4 = (x-mu)^4 - 6(x-mu)^2 + 3
        let h = derivative_polys(Family::Normal, 4).unwrap();
        let mu = 0.8;
        for x in [-2.0, 0.0, 0.8, 3.1] {
            let z = x - mu;
            assert!((h[1].eval(Family::Normal, x, mu) - (z * z - 1.0)).abs() < 1e-10);
            assert!((h[2].eval(Family::Normal, x, mu) - (z * z * z - 3.0 * z)).abs() < 1e-10);
            let h4 = z * z * z * z - 6.0 * z * z + 3.0;
            assert!((h[3].eval(Family::Normal, x, mu) - h4).abs() < 1e-10);
        }
    }

    #[test]
    fn leading_coefficient_is_inverse_variance_power() {
        let fam = Family::Binomial { n: 10 };
        let mu = 3.3;
        let hs = derivative_polys(fam, 6).unwrap();
        for h in &hs {
            let coeffs = h.coeffs_at(fam, mu);
            assert_eq!(coeffs.len(), h.order + 1);
            let expected = libm::pow(fam.variance(mu), -(h.order as f64));
            assert!((coeffs[h.order] - expected).abs() < 1e-9 * expected.abs());
        }
    }

    #[test]
    fn order_cap() {
        assert!(matches!(
            derivative_polys(Family::Poisson, 9),
            Err(Error::UnsupportedOrder { .. })
        ));
        assert!(matches!(
            derivative_polys(Family::Poisson, 0),
            Err(Error::UnsupportedOrder { .. })
        ));
    }

    #[test]
    fn derivative_terms_integrate_to_zero() {
        // E[h_k] = 0 and E[x h_k] = 0 for k >= 2, via exact moments
        for fam in [Family::Binomial { n: 10 }, Family::Poisson, Family::Normal] {
            let mu = 1.9;
            let hs = derivative_polys(fam, 6).unwrap();
            for h in &hs {
                let p = h.x_poly(fam, mu);
                let mean_zero = fam.expect_poly(mu, &p).unwrap();
                assert!(mean_zero.abs() < 1e-9, "E[h_k] != 0: {mean_zero}");
                if h.order >= 2 {
                    let xp = p.shift_up();
                    let first = fam.expect_poly(mu, &xp).unwrap();
                    assert!(first.abs() < 1e-8, "E[x h_k] != 0: {first}");
                }
            }
        }
    }
}
