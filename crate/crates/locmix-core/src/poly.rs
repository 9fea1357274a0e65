//! Dense univariate polynomials with `f64` coefficients.
//!
//! Used both symbolically (coefficients of the derivative ratios `h_k` as
//! polynomials in the mean) and numerically (the positivity polynomial in `x`
//! whose global minimum decides hard-boundary membership).

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

/// Polynomial stored low-to-high: `coeffs[j]` multiplies `x^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: vec![] }
    }

    pub fn constant(c: f64) -> Self {
        if c == 0.0 {
            Self::zero()
        } else {
            Poly { coeffs: vec![c] }
        }
    }

    pub fn from_coeffs(coeffs: &[f64]) -> Self {
        let mut p = Poly {
            coeffs: coeffs.to_vec(),
        };
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0.0) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree of the polynomial; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, j: usize) -> f64 {
        self.coeffs.get(j).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, &c)| j as f64 * c)
            .collect();
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![0.0; n];
        for (j, c) in coeffs.iter_mut().enumerate() {
            *c = self.coeff(j) + other.coeff(j);
        }
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Poly {
        if s == 0.0 {
            return Poly::zero();
        }
        Poly {
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    /// Multiply by `x` (degree shift).
    pub fn shift_up(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![0.0];
        coeffs.extend_from_slice(&self.coeffs);
        Poly { coeffs }
    }

    /// Effective degree with small coefficients relative to the largest
    /// treated as zero; used before root finding on numerically built polys.
    pub fn effective_degree(&self, rel_tol: f64) -> usize {
        let max = self.coeffs.iter().fold(0.0f64, |m, &c| m.max(c.abs()));
        if max == 0.0 {
            return 0;
        }
        let mut d = 0;
        for (j, &c) in self.coeffs.iter().enumerate() {
            if c.abs() > rel_tol * max {
                d = j;
            }
        }
        d
    }

    /// Cauchy bound: all real roots lie in `[-b, b]`.
    pub fn cauchy_bound(&self, rel_tol: f64) -> f64 {
        let d = self.effective_degree(rel_tol);
        if d == 0 {
            return 0.0;
        }
        let lead = self.coeff(d).abs();
        let max_ratio = self.coeffs[..d]
            .iter()
            .fold(0.0f64, |m, &c| m.max(c.abs() / lead));
        1.0 + max_ratio
    }

    /// All real roots via companion-matrix eigenvalues, polished by Newton.
    ///
    /// Coefficients below `1e-12` of the largest are dropped before the
    /// degree is decided. Roots are returned sorted and deduplicated.
    pub fn real_roots(&self) -> Vec<f64> {
        let d = self.effective_degree(1e-12);
        if d == 0 {
            return vec![];
        }
        if d == 1 {
            return vec![-self.coeff(0) / self.coeff(1)];
        }
        let lead = self.coeff(d);
        let mut m = DMatrix::<f64>::zeros(d, d);
        for i in 1..d {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..d {
            m[(i, d - 1)] = -self.coeff(i) / lead;
        }
        let eig = m.schur().complex_eigenvalues();
        let scale = self.cauchy_bound(1e-12);
        let deriv = self.derivative();
        let mut roots: Vec<f64> = Vec::new();
        for ev in eig.iter() {
            if ev.im.abs() > 1e-7 * (1.0 + ev.re.abs()) {
                continue;
            }
            let mut r = ev.re;
            // residual polish
            for _ in 0..30 {
                let p = self.eval(r);
                let dp = deriv.eval(r);
                if dp == 0.0 {
                    break;
                }
                let step = p / dp;
                r -= step;
                if step.abs() <= 1e-15 * (1.0 + r.abs()) {
                    break;
                }
            }
            if self.eval(r).abs() <= 1e-8 * (1.0 + scale) * lead.abs().max(1.0) {
                roots.push(r);
            } else {
                // eigenvalue was a near-real complex pair; keep the original
                // estimate only if it still looks like a root
                if self.eval(ev.re).abs() <= 1e-7 * (1.0 + scale) {
                    roots.push(ev.re);
                }
            }
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // multiple roots are only resolvable to ~sqrt(machine eps)
        roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-7 * (1.0 + b.abs()));
        roots
    }
}
