//! Natural exponential families in mean parametrization.
//!
//! The three shipped families all have quadratic variance functions
//! `V(mu) = v0 + v1*mu + v2*mu^2`, which is what makes the exact moment and
//! derivative recurrences of this crate close over polynomials in `mu`.

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::rng::rng_from_seed;
use crate::MAX_MOMENT;
use alloc::vec::Vec;
use rand::Rng;

/// Mass below which Poisson support scans are truncated. The cumulative
/// tail beyond the returned bound is smaller than this.
pub const POISSON_TAIL: f64 = 1e-14;

/// Support descriptor of a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    /// `{0, 1, ..., max}`.
    Finite { max: u32 },
    /// Nonnegative integers.
    NonnegativeIntegers,
    /// The real line.
    RealLine,
}

/// A natural exponential family with quadratic variance function, handled
/// directly in the mean parametrization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Binomial with known size `n`; mean domain `(0, n)`.
    Binomial { n: u32 },
    /// Poisson; mean domain `(0, inf)`.
    Poisson,
    /// Normal with unit variance; mean domain the whole line.
    Normal,
}

impl Family {
    pub fn support(&self) -> Support {
        match self {
            Family::Binomial { n } => Support::Finite { max: *n },
            Family::Poisson => Support::NonnegativeIntegers,
            Family::Normal => Support::RealLine,
        }
    }

    /// Open interval of admissible means.
    pub fn mean_domain(&self) -> (f64, f64) {
        match self {
            Family::Binomial { n } => (0.0, *n as f64),
            Family::Poisson => (0.0, f64::INFINITY),
            Family::Normal => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn contains_mean(&self, mu: f64) -> bool {
        let (lo, hi) = self.mean_domain();
        mu.is_finite() && mu > lo && mu < hi
    }

    pub fn check_mean(&self, mu: f64) -> Result<()> {
        if self.contains_mean(mu) {
            Ok(())
        } else {
            Err(Error::MeanDomain { mu })
        }
    }

    pub fn contains_point(&self, x: f64) -> bool {
        match self.support() {
            Support::Finite { max } => is_integer(x) && x >= 0.0 && x <= max as f64,
            Support::NonnegativeIntegers => is_integer(x) && x >= 0.0,
            Support::RealLine => x.is_finite(),
        }
    }

    pub fn check_point(&self, x: f64) -> Result<()> {
        if self.contains_point(x) {
            Ok(())
        } else {
            Err(Error::Support { x })
        }
    }

    /// `(v0, v1, v2)` with `V(mu) = v0 + v1*mu + v2*mu^2`.
    pub fn variance_coeffs(&self) -> (f64, f64, f64) {
        match self {
            Family::Binomial { n } => (0.0, 1.0, -1.0 / *n as f64),
            Family::Poisson => (0.0, 1.0, 0.0),
            Family::Normal => (1.0, 0.0, 0.0),
        }
    }

    pub fn variance(&self, mu: f64) -> f64 {
        let (v0, v1, v2) = self.variance_coeffs();
        v0 + v1 * mu + v2 * mu * mu
    }

    pub fn variance_poly(&self) -> Poly {
        let (v0, v1, v2) = self.variance_coeffs();
        Poly::from_coeffs(&[v0, v1, v2])
    }

    /// Exact pmf/pdf value.
    pub fn density(&self, x: f64, mu: f64) -> Result<f64> {
        self.check_mean(mu)?;
        self.check_point(x)?;
        Ok(self.density_unchecked(x, mu))
    }

    pub(crate) fn density_unchecked(&self, x: f64, mu: f64) -> f64 {
        match self {
            Family::Binomial { n } => {
                let n = *n as f64;
                let p = mu / n;
                libm::exp(
                    ln_choose(n, x) + x * libm::log(p) + (n - x) * libm::log1p(-p),
                )
            }
            Family::Poisson => libm::exp(x * libm::log(mu) - mu - libm::lgamma(x + 1.0)),
            Family::Normal => {
                let z = x - mu;
                libm::exp(-0.5 * z * z) / libm::sqrt(2.0 * core::f64::consts::PI)
            }
        }
    }

    /// Raw moment `E[X^i]` as a polynomial in `mu`.
    ///
    /// Recurrence: `m_0 = 1`, `m_{i+1} = mu*m_i + V(mu)*m_i'`, exact for
    /// polynomial variance functions.
    pub fn raw_moment_poly(&self, i: usize) -> Result<Poly> {
        if i > MAX_MOMENT {
            return Err(Error::UnsupportedMoment {
                index: i,
                max: MAX_MOMENT,
            });
        }
        let v = self.variance_poly();
        let mut m = Poly::constant(1.0);
        for _ in 0..i {
            m = m.shift_up().add(&v.mul(&m.derivative()));
        }
        Ok(m)
    }

    /// `E[X^i]` at a given mean.
    pub fn raw_moment(&self, mu: f64, i: usize) -> Result<f64> {
        self.check_mean(mu)?;
        Ok(self.raw_moment_poly(i)?.eval(mu))
    }

    /// `k`-th mu-derivative of the raw moment `m_i(mu)`.
    pub fn raw_moment_deriv(&self, mu: f64, i: usize, k: usize) -> Result<f64> {
        self.check_mean(mu)?;
        if i + k > MAX_MOMENT {
            return Err(Error::UnsupportedMoment {
                index: i + k,
                max: MAX_MOMENT,
            });
        }
        let mut p = self.raw_moment_poly(i)?;
        for _ in 0..k {
            p = p.derivative();
        }
        Ok(p.eval(mu))
    }

    /// `E[p(X)]` for a polynomial `p` in `x`, exactly via raw moments.
    pub fn expect_poly(&self, mu: f64, p: &Poly) -> Result<f64> {
        self.check_mean(mu)?;
        let mut acc = 0.0;
        for (j, &c) in p.coeffs.iter().enumerate() {
            if c != 0.0 {
                acc += c * self.raw_moment_poly(j)?.eval(mu);
            }
        }
        Ok(acc)
    }

    /// Upper end of the support scan: exact for the binomial, the
    /// `POISSON_TAIL` truncation bound for the Poisson, `None` for continuous
    /// support.
    pub fn scan_upper(&self, mu: f64) -> Option<u32> {
        match self {
            Family::Binomial { n } => Some(*n),
            Family::Poisson => {
                let mut cum = 0.0;
                let mut x = 0u32;
                loop {
                    cum += self.density_unchecked(x as f64, mu);
                    if 1.0 - cum < POISSON_TAIL && x as f64 > mu {
                        return Some(x);
                    }
                    x += 1;
                    if x > 10_000_000 {
                        return Some(x);
                    }
                }
            }
            Family::Normal => None,
        }
    }

    /// i.i.d. draws, reproducible given the seed.
    pub fn sample(&self, mu: f64, count: usize, seed: u64) -> Result<Vec<f64>> {
        self.check_mean(mu)?;
        let mut rng = rng_from_seed(seed);
        Ok((0..count).map(|_| self.draw(&mut rng, mu)).collect())
    }

    pub(crate) fn draw<R: Rng>(&self, rng: &mut R, mu: f64) -> f64 {
        match self {
            Family::Binomial { n } => {
                let p = mu / *n as f64;
                let mut k = 0u32;
                for _ in 0..*n {
                    if rng.gen::<f64>() < p {
                        k += 1;
                    }
                }
                k as f64
            }
            Family::Poisson => draw_poisson(rng, mu),
            Family::Normal => mu + draw_std_normal(rng),
        }
    }
}

fn is_integer(x: f64) -> bool {
    x.is_finite() && (x - libm::round(x)).abs() < 1e-9
}

fn ln_choose(n: f64, x: f64) -> f64 {
    libm::lgamma(n + 1.0) - libm::lgamma(x + 1.0) - libm::lgamma(n - x + 1.0)
}

fn draw_std_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = loop {
        let u = rng.gen::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.gen();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

fn draw_poisson<R: Rng>(rng: &mut R, mu: f64) -> f64 {
    // Knuth multiplication, split for large means to avoid underflow
    if mu > 30.0 {
        return draw_poisson(rng, mu / 2.0) + draw_poisson(rng, mu / 2.0);
    }
    let l = libm::exp(-mu);
    let mut k = 0u64;
    let mut p = 1.0;
    loop {
        p *= rng.gen::<f64>();
        if p <= l {
            return k as f64;
        }
        k += 1;
    }
}
