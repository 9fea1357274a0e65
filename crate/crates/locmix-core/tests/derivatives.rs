//! Cross-checks the symbolic derivative-ratio machinery against numerical
//! differentiation of the base densities in the mean parameter.

use locmix_core::{derivative_polys, Family};

/// k-th mu-derivative of `f(x; .)` by central differences with one
/// Richardson step.
fn numeric_deriv(family: Family, x: f64, mu: f64, k: usize, h: f64) -> f64 {
    let central = |h: f64| -> f64 {
        let mut acc = 0.0;
        let mut binom = 1.0f64;
        for j in 0..=k {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let m = mu + (k as f64 / 2.0 - j as f64) * h;
            acc += sign * binom * family.density(x, m).unwrap();
            binom *= (k - j) as f64 / (j + 1) as f64;
        }
        acc / h.powi(k as i32)
    };
    // two Richardson levels: O(h^6) truncation
    let d1 = central(h);
    let d2 = central(h / 2.0);
    let d4 = central(h / 4.0);
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d4 - d2) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

#[test]
fn ratio_polys_match_numeric_derivatives() {
    let cases = [
        (Family::Binomial { n: 10 }, 2.0, 8.0),
        (Family::Poisson, 0.5, 6.0),
        (Family::Normal, -2.0, 2.0),
    ];
    for (fam, lo, hi) in cases {
        let hs = derivative_polys(fam, 5).unwrap();
        for gi in 0..20 {
            let mu = lo + (hi - lo) * (gi as f64 + 0.5) / 20.0;
            let xs: Vec<f64> = match fam {
                Family::Normal => vec![mu - 1.3, mu, mu + 0.7, mu + 2.1],
                _ => vec![0.0, 1.0, 3.0, 6.0],
            };
            for &x in &xs {
                let f = fam.density(x, mu).unwrap();
                for h_k in &hs {
                    let k = h_k.order;
                    // large base step: two Richardson levels kill the
                    // truncation error while h^k rounding noise stays small
                    let step = 0.08;
                    let exact = h_k.eval(fam, x, mu) * f;
                    let numeric = numeric_deriv(fam, x, mu, k, step);
                    let scale = exact.abs().max(1e-4);
                    assert!(
                        (exact - numeric).abs() < 2e-4 * scale.max(1.0) + 1e-5 * scale,
                        "{fam:?} k={k} x={x} mu={mu}: exact {exact} numeric {numeric}"
                    );
                }
            }
        }
    }
}

#[test]
fn high_order_ratios_integrate_to_zero_on_finite_support() {
    // brute-force sums over the full binomial support
    let fam = Family::Binomial { n: 20 };
    let mu = 7.3;
    let hs = derivative_polys(fam, 8).unwrap();
    for h_k in &hs {
        let total: f64 = (0..=20)
            .map(|x| fam.density(x as f64, mu).unwrap() * h_k.eval(fam, x as f64, mu))
            .sum();
        assert!(total.abs() < 1e-9, "k={}: {total}", h_k.order);
        if h_k.order >= 2 {
            let first: f64 = (0..=20)
                .map(|x| {
                    x as f64 * fam.density(x as f64, mu).unwrap() * h_k.eval(fam, x as f64, mu)
                })
                .sum();
            assert!(first.abs() < 1e-8, "k={}: E[x h_k] = {first}", h_k.order);
        }
    }
}
