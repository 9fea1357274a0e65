//! Structural invariants of local mixture models, checked on random inputs.

use locmix_core::lmm::Positivity;
use locmix_core::mixing::{exact_mixture_density, localize, two_point};
use locmix_core::{FiberProblem, Family, LocalMixtureModel, Sample};
use proptest::prelude::*;

fn finite_families() -> impl Strategy<Value = Family> {
    prop_oneof![
        (2u32..=25).prop_map(|n| Family::Binomial { n }),
        Just(Family::Poisson),
    ]
}

fn all_families() -> impl Strategy<Value = Family> {
    prop_oneof![
        (2u32..=25).prop_map(|n| Family::Binomial { n }),
        Just(Family::Poisson),
        Just(Family::Normal),
    ]
}

fn mean_in_domain(family: Family) -> f64 {
    match family {
        Family::Binomial { n } => 0.37 * n as f64,
        Family::Poisson => 3.1,
        Family::Normal => 0.4,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The correction terms all integrate to zero, so total mass and mean
    /// are those of the base density regardless of lambda.
    #[test]
    fn mass_and_mean_preserved(
        fam in all_families(),
        order in 2usize..=6,
        raw in proptest::collection::vec(-0.5f64..0.5, 5),
    ) {
        let mu = mean_in_domain(fam);
        let lambda: Vec<f64> = raw[..order - 1].to_vec();
        let model = LocalMixtureModel::new(fam, order, mu, lambda).unwrap();
        let moments = model.moment_vector(1).unwrap();
        prop_assert!((moments[0] - mu).abs() < 1e-8 * (1.0 + mu.abs()));
    }

    /// Summing the signed density over the support gives exactly one for
    /// counting families (the corrections are exact discrete identities).
    #[test]
    fn density_sums_to_one(
        fam in finite_families(),
        order in 2usize..=6,
        raw in proptest::collection::vec(-0.4f64..0.4, 5),
    ) {
        let mu = mean_in_domain(fam);
        let model = LocalMixtureModel::new(fam, order, mu, raw[..order - 1].to_vec()).unwrap();
        let upper = match fam {
            Family::Binomial { n } => n,
            _ => fam.scan_upper(mu).unwrap(),
        };
        let total: f64 = (0..=upper).map(|x| model.density(x as f64).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-9, "mass {total}");
    }

    /// Boundary classification agrees with a brute-force sign scan of the
    /// density over the (truncated) support.
    #[test]
    fn positivity_matches_brute_force(
        fam in finite_families(),
        order in 2usize..=5,
        raw in proptest::collection::vec(-1.0f64..1.0, 4),
    ) {
        let mu = mean_in_domain(fam);
        let model = LocalMixtureModel::new(fam, order, mu, raw[..order - 1].to_vec()).unwrap();
        let upper = match fam {
            Family::Binomial { n } => n,
            _ => fam.scan_upper(mu).unwrap() + 50,
        };
        let min_corr = (0..=upper)
            .map(|x| model.correction_poly().eval(x as f64))
            .fold(f64::INFINITY, f64::min);
        match model.positivity() {
            Positivity::Interior => prop_assert!(min_corr > 0.0, "min {min_corr}"),
            Positivity::Outside { .. } => prop_assert!(min_corr < 1e-10, "min {min_corr}"),
            Positivity::OnBoundary { .. } => prop_assert!(min_corr.abs() < 1e-9),
        }
    }

    /// The fiber log-likelihood is concave: Hessian quadratic forms are
    /// nonpositive at random interior points and directions.
    #[test]
    fn fiber_hessian_nonpositive(
        fam in all_families(),
        order in 2usize..=5,
        raw in proptest::collection::vec(-0.05f64..0.05, 4),
        dir in proptest::collection::vec(-1.0f64..1.0, 4),
    ) {
        let mu = mean_in_domain(fam);
        let data = Sample::new(fam.sample(mu, 30, 77).unwrap()).unwrap();
        let prob = FiberProblem::new(fam, order, mu, data).unwrap();
        let lambda = &raw[..order - 1];
        if let Ok((_, hess)) = prob.grad_hess(lambda) {
            let d = &dir[..order - 1];
            let mut quad = 0.0;
            for i in 0..d.len() {
                for j in 0..d.len() {
                    quad += d[i] * hess[(i, j)] * d[j];
                }
            }
            prop_assert!(quad <= 1e-9, "quadratic form {quad}");
        }
    }
}

#[test]
fn localized_two_point_matches_exact_moments() {
    // the order-r localization of a mixing reproduces the mixture's first
    // r raw moments exactly
    let fam = Family::Binomial { n: 20 };
    let q = two_point(8.0, 9.5, 7.0).unwrap();
    let model = localize(fam, &q, 4).unwrap();
    for i in 1..=4usize {
        let exact: f64 = (0..=20)
            .map(|x| (x as f64).powi(i as i32) * exact_mixture_density(fam, &q, x as f64).unwrap())
            .sum();
        let approx = model.moment_vector(i).unwrap()[i - 1];
        assert!(
            (exact - approx).abs() < 1e-9 * (1.0 + exact.abs()),
            "moment {i}: exact {exact} vs localized {approx}"
        );
    }
    // the order-r localization does NOT match the (r+1)-th moment: the gap
    // is the neglected higher central moment of the mixing
    let exact5: f64 = (0..=20)
        .map(|x| (x as f64).powi(5) * exact_mixture_density(fam, &q, x as f64).unwrap())
        .sum();
    let approx5 = model.moment_vector(5).unwrap()[4];
    assert!((exact5 - approx5).abs() > 1e-6);
}

#[test]
fn localization_error_is_small_for_tight_mixing() {
    let fam = Family::Poisson;
    let q = two_point(4.0, 4.2, 3.9).unwrap();
    let model = localize(fam, &q, 4).unwrap();
    let upper = fam.scan_upper(4.3).unwrap();
    let mut sup = 0.0f64;
    for x in 0..=upper {
        let e = exact_mixture_density(fam, &q, x as f64).unwrap();
        let a = model.density(x as f64).unwrap();
        sup = sup.max((e - a).abs());
    }
    assert!(sup < 1e-4, "sup gap {sup}");
}
