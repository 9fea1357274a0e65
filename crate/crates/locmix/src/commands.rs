//! One function per CLI subcommand. Each takes a merged `RunConfig`,
//! computes through `locmix-core`, and writes CSV/JSON with a metadata
//! header; outputs are byte-identical across reruns for a fixed config.

use std::fmt::Write as _;

use locmix_core::fiber::profile_fit;
use locmix_core::lmm::Positivity;
use locmix_core::mixing::{mixture_sample, phi_map, two_point};
use locmix_core::region::{is_true_local_mixture, TrueMixtureVerdict, DEFAULT_HULL_TOL};
use locmix_core::{
    hard_boundary, integrated_likelihood_at, rate_check_discrete, rate_check_laplace, Family,
    FiberProblem, LocalMixtureModel, MarginalOptions, MarginalPoint, Sample,
};
use serde::Serialize;

use crate::config::{ModelSpec, RunConfig};
use crate::io::{emit, metadata_header, read_data};
use crate::CliError;

/// Config as a JSON object with unset keys removed.
fn config_value(cfg: &RunConfig) -> serde_json::Value {
    match serde_json::to_value(cfg) {
        Ok(serde_json::Value::Object(map)) => serde_json::Value::Object(
            map.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        ),
        Ok(v) => v,
        Err(_) => serde_json::Value::Null,
    }
}

fn config_echo(cfg: &RunConfig) -> String {
    config_value(cfg).to_string()
}

fn require_mu(cfg: &RunConfig) -> Result<f64, CliError> {
    cfg.mu
        .or(cfg.mu0)
        .ok_or_else(|| CliError::usage("missing mu".into()))
}

/// Weighted mean clipped strictly inside the mean domain.
fn unmixed_mu(family: Family, data: &Sample) -> f64 {
    let (lo, hi) = family.mean_domain();
    let margin = 1e-6;
    let mut mu = data.mean();
    if lo.is_finite() {
        mu = mu.max(lo + margin);
    }
    if hi.is_finite() {
        mu = mu.min(hi - margin);
    }
    mu
}

fn unmixed_loglik(family: Family, data: &Sample, mu: f64) -> f64 {
    data.points()
        .iter()
        .zip(data.weights())
        .map(|(&x, &w)| w * family.density(x, mu).unwrap_or(f64::MIN_POSITIVE).ln())
        .sum()
}

fn positivity_label(p: Positivity) -> (&'static str, Option<f64>) {
    match p {
        Positivity::Interior => ("interior", None),
        Positivity::OnBoundary { witness } => ("on-boundary", Some(witness)),
        Positivity::Outside { witness } => ("outside", Some(witness)),
    }
}

#[derive(Serialize)]
struct Meta {
    version: &'static str,
    command: &'static str,
    config: serde_json::Value,
}

fn meta(command: &'static str, cfg: &RunConfig) -> Meta {
    Meta {
        version: env!("CARGO_PKG_VERSION"),
        command,
        config: config_value(cfg),
    }
}

// ---------------------------------------------------------------- fit

#[derive(Serialize)]
struct ProfileRow {
    mu: f64,
    loglik: Option<f64>,
}

#[derive(Serialize)]
struct FitReport {
    meta: Meta,
    model: ModelSpec,
    loglik: f64,
    mu_unmixed: f64,
    loglik_unmixed: f64,
    positivity: &'static str,
    positivity_witness: Option<f64>,
    coarse_points: usize,
    stationary_points: usize,
    divergent_points: usize,
    profile: Vec<ProfileRow>,
}

pub fn run_fit(cfg: &RunConfig) -> Result<(), CliError> {
    let family = cfg.require_family()?;
    let order = cfg.order.unwrap_or(4);
    let data = read_data(cfg.require_data()?)?;
    let coarse = cfg.coarse_points.unwrap_or(41);
    let fit = profile_fit(family, &data, order, coarse).map_err(CliError::from_core)?;
    let model = LocalMixtureModel::new(family, order, fit.mu_hat, fit.lambda_hat.clone())
        .map_err(CliError::from_core)?;
    let (pos, witness) = positivity_label(model.positivity());
    let mu_u = unmixed_mu(family, &data);
    let report = FitReport {
        meta: meta("fit", cfg),
        model: ModelSpec::from_model(&model),
        loglik: fit.loglik,
        mu_unmixed: mu_u,
        loglik_unmixed: unmixed_loglik(family, &data, mu_u),
        positivity: pos,
        positivity_witness: witness,
        coarse_points: coarse,
        stationary_points: fit.profile.iter().filter(|p| p.loglik.is_some()).count(),
        divergent_points: fit.profile.iter().filter(|p| p.loglik.is_none()).count(),
        profile: fit
            .profile
            .iter()
            .map(|p| ProfileRow {
                mu: p.mu,
                loglik: p.loglik,
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::numeric(format!("serialize: {e}")))?;
    emit(cfg.out.as_deref(), &(json + "\n"))
}

// ---------------------------------------------------------- fiber-scan

#[derive(Serialize)]
struct LineJson {
    x: f64,
    coeffs: Vec<f64>,
    on_hard_boundary_facet: bool,
}

#[derive(Serialize)]
struct FacetJson {
    x: f64,
    coeffs: Vec<f64>,
}

#[derive(Serialize)]
struct ScanAnnotations {
    meta: Meta,
    singularity_lines: Vec<LineJson>,
    hard_boundary: Vec<FacetJson>,
}

pub fn run_fiber_scan(cfg: &RunConfig) -> Result<(), CliError> {
    let family = cfg.require_family()?;
    let order = cfg.order.unwrap_or(3);
    let mu0 = require_mu(cfg)?;
    let data = read_data(cfg.require_data()?)?;
    let fixed = cfg.fixed_lambda.clone().unwrap_or_default();
    if order < 3 {
        return Err(CliError::usage("fiber-scan needs order >= 3".into()));
    }
    if fixed.len() != order - 3 {
        return Err(CliError::usage(format!(
            "order {order} needs {} fixed lambda values (lambda_4..), got {}",
            order - 3,
            fixed.len()
        )));
    }
    let problem =
        FiberProblem::new(family, order, mu0, data.clone()).map_err(CliError::from_core)?;

    let axis = |min: f64, max: f64, steps: usize| -> Vec<f64> {
        let n = steps.max(2);
        (0..n)
            .map(|j| min + (max - min) * j as f64 / (n - 1) as f64)
            .collect()
    };
    let l2 = axis(
        cfg.l2_min.unwrap_or(-0.2),
        cfg.l2_max.unwrap_or(1.0),
        cfg.l2_steps.unwrap_or(41),
    );
    let l3 = axis(
        cfg.l3_min.unwrap_or(-0.5),
        cfg.l3_max.unwrap_or(0.5),
        cfg.l3_steps.unwrap_or(41),
    );

    let mut csv = metadata_header("fiber-scan", &config_echo(cfg));
    csv.push_str("lambda2,lambda3,loglik,singular_flag\n");
    let mut lambda = vec![0.0; order - 1];
    lambda[2..].copy_from_slice(&fixed);
    for &a in &l2 {
        for &b in &l3 {
            lambda[0] = a;
            lambda[1] = b;
            let ll = problem.loglik(&lambda);
            let singular = if ll.is_finite() { 0 } else { 1 };
            let _ = writeln!(csv, "{a},{b},{ll},{singular}");
        }
    }
    emit(cfg.out.as_deref(), &csv)?;

    let annotations_path = cfg
        .annotations
        .clone()
        .or_else(|| cfg.out.as_ref().map(|o| format!("{o}.annotations.json")));
    if let Some(path) = annotations_path {
        let lines = problem.singularity_lines().map_err(CliError::from_core)?;
        let facets = match family {
            Family::Normal => vec![],
            _ => hard_boundary(family, mu0, order)
                .map_err(CliError::from_core)?
                .nonredundant()
                .map(|f| FacetJson {
                    x: f.x,
                    coeffs: f.coeffs.clone(),
                })
                .collect(),
        };
        let ann = ScanAnnotations {
            meta: meta("fiber-scan", cfg),
            singularity_lines: lines
                .iter()
                .map(|l| LineJson {
                    x: l.x,
                    coeffs: l.coeffs.clone(),
                    on_hard_boundary_facet: l.on_hard_boundary_facet,
                })
                .collect(),
            hard_boundary: facets,
        };
        let json = serde_json::to_string_pretty(&ann)
            .map_err(|e| CliError::numeric(format!("serialize: {e}")))?;
        emit(Some(&path), &(json + "\n"))?;
    }
    Ok(())
}

// ------------------------------------------------------------ boundary

pub fn run_boundary(cfg: &RunConfig) -> Result<(), CliError> {
    let family = cfg.require_family()?;
    let order = cfg.order.unwrap_or(3);
    let mu = require_mu(cfg)?;
    let system = hard_boundary(family, mu, order).map_err(CliError::from_core)?;
    let mut csv = metadata_header("boundary", &config_echo(cfg));
    let nonredundant: Vec<f64> = system.nonredundant().map(|c| c.x).collect();
    let _ = writeln!(
        csv,
        "# constraints: {} total, {} non-redundant (x = {:?})",
        system.constraints.len(),
        nonredundant.len(),
        nonredundant
    );
    csv.push_str("x,c0");
    for i in 2..=order {
        let _ = write!(csv, ",c{i}");
    }
    csv.push('\n');
    for c in &system.constraints {
        let _ = write!(csv, "{}", c.x);
        for v in &c.coeffs {
            let _ = write!(csv, ",{v}");
        }
        csv.push('\n');
    }
    emit(cfg.out.as_deref(), &csv)
}

// -------------------------------------------------------------- region

#[derive(Serialize)]
#[serde(untagged)]
enum VerdictJson {
    Member {
        meta: Meta,
        member: bool,
        mode: &'static str,
        atoms: Vec<(f64, f64)>,
    },
    NonMember {
        meta: Meta,
        member: bool,
        mode: &'static str,
        certificate: Vec<f64>,
    },
}

pub fn run_region(cfg: &RunConfig) -> Result<(), CliError> {
    let family = cfg.require_family()?;
    let order = cfg.order.unwrap_or(4);
    let mu = require_mu(cfg)?;
    let (m_lo, m_hi) = match (cfg.m_lo, cfg.m_hi, cfg.epsilon) {
        (Some(lo), Some(hi), _) => (lo, hi),
        (_, _, Some(eps)) => {
            let (dlo, dhi) = family.mean_domain();
            let lo = if dlo.is_finite() { (mu - eps).max(dlo + 1e-9) } else { mu - eps };
            let hi = if dhi.is_finite() { (mu + eps).min(dhi - 1e-9) } else { mu + eps };
            (lo, hi)
        }
        _ => return Err(CliError::usage("missing m_lo/m_hi (or epsilon)".into())),
    };
    let grid = cfg.grid.unwrap_or(12);

    let mut csv = metadata_header("region", &config_echo(cfg));
    let _ = writeln!(csv, "# central moments: E((M-mu)^j) = j! * lambda_j");
    csv.push_str("mu1,mu2,rho");
    for i in 2..=order {
        let _ = write!(csv, ",lambda{i}");
    }
    csv.push('\n');
    // degenerate mixing at mu: the zero point of the region
    let _ = write!(csv, "{mu},{mu},1");
    for _ in 2..=order {
        csv.push_str(",0");
    }
    csv.push('\n');
    let region = locmix_core::LambdaRegion::new(family, mu, m_lo, m_hi, order)
        .map_err(CliError::from_core)?;
    for (a, b) in region.generator_pairs(grid) {
        let q = two_point(mu, a, b).map_err(CliError::from_core)?;
        let rho = q
            .atoms()
            .iter()
            .find(|&&(t, _)| (t - a).abs() < 1e-12)
            .map(|&(_, w)| w)
            .unwrap_or(0.0);
        let lambda = phi_map(&q, mu, order).map_err(CliError::from_core)?;
        let _ = write!(csv, "{a},{b},{rho}");
        for l in &lambda {
            let _ = write!(csv, ",{l}");
        }
        csv.push('\n');
    }
    emit(cfg.out.as_deref(), &csv)?;

    if let Some(lambda) = &cfg.lambda {
        if lambda.len() != order - 1 {
            return Err(CliError::usage(format!(
                "lambda needs {} entries for order {order}",
                order - 1
            )));
        }
        let model = LocalMixtureModel::new(family, order, mu, lambda.clone())
            .map_err(CliError::from_core)?;
        let tol = cfg.tol.unwrap_or(DEFAULT_HULL_TOL);
        let mode = match family {
            Family::Binomial { .. } => "characterization",
            _ => "sufficient-condition",
        };
        let verdict = is_true_local_mixture(&model, m_lo, m_hi, tol, 201)
            .map_err(CliError::from_core)?;
        let json = match verdict {
            TrueMixtureVerdict::True { atoms } => VerdictJson::Member {
                meta: meta("region", cfg),
                member: true,
                mode,
                atoms: atoms.atoms().to_vec(),
            },
            TrueMixtureVerdict::False { certificate } => VerdictJson::NonMember {
                meta: meta("region", cfg),
                member: false,
                mode,
                certificate,
            },
        };
        let text = serde_json::to_string_pretty(&json)
            .map_err(|e| CliError::numeric(format!("serialize: {e}")))?;
        let path = cfg
            .annotations
            .clone()
            .or_else(|| cfg.out.as_ref().map(|o| format!("{o}.verdict.json")));
        emit(path.as_deref(), &(text + "\n"))?;
    }
    Ok(())
}

// ------------------------------------------------------------ marginal

fn thread_cap() -> usize {
    std::env::var("LOCMIX_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

pub fn run_marginal(cfg: &RunConfig) -> Result<(), CliError> {
    let family = cfg.require_family()?;
    let order = cfg.order.unwrap_or(4);
    let data = read_data(cfg.require_data()?)?;
    let Some(epsilon) = cfg.epsilon else {
        return Err(CliError::usage("missing epsilon".into()));
    };
    let draws = cfg.draws.unwrap_or(4096);
    let seed = cfg.seed.unwrap_or(0);
    let points = cfg.mu_points.unwrap_or(101).max(2);
    // default bracket: the profile-fit search interval
    let (dlo, dhi) = family.mean_domain();
    let mut lo = cfg.mu_min.unwrap_or(data.mean() - 4.0 * data.sd());
    let mut hi = cfg.mu_max.unwrap_or(data.mean() + 4.0 * data.sd());
    if dlo.is_finite() {
        lo = lo.max(dlo + 1e-3);
    }
    if dhi.is_finite() {
        hi = hi.min(dhi - 1e-3);
    }
    if !(lo < hi) {
        return Err(CliError::usage(format!("empty mu bracket [{lo}, {hi}]")));
    }
    let grid: Vec<f64> = (0..points)
        .map(|j| lo + (hi - lo) * j as f64 / (points - 1) as f64)
        .collect();
    let opts = MarginalOptions::new(epsilon, draws, seed);

    // per-index derived seeds make the result independent of scheduling
    let threads = thread_cap().min(grid.len()).max(1);
    let mut results: Vec<Option<Result<MarginalPoint, locmix_core::Error>>> =
        (0..grid.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunk = grid.len().div_ceil(threads);
        for (t, out_chunk) in results.chunks_mut(chunk).enumerate() {
            let grid = &grid;
            let data = &data;
            let opts = &opts;
            scope.spawn(move || {
                for (off, slot) in out_chunk.iter_mut().enumerate() {
                    let i = t * chunk + off;
                    *slot = Some(integrated_likelihood_at(
                        family, data, order, grid[i], opts, i as u64,
                    ));
                }
            });
        }
    });

    let mut csv = metadata_header("marginal", &config_echo(cfg));
    let _ = writeln!(csv, "# seed: {seed}");
    let _ = writeln!(csv, "# prior: dirichlet(1) over sampled extremal generators");
    csv.push_str("mu,log_integrated,mc_se,log_unmixed,discard_frac\n");
    for r in results {
        let p = r.expect("all grid slots filled").map_err(CliError::from_core)?;
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            p.mu, p.log_integrated, p.mc_se, p.log_unmixed, p.discard_frac
        );
    }
    emit(cfg.out.as_deref(), &csv)
}

// ---------------------------------------------------------- rate-check

pub fn run_rate_check(cfg: &RunConfig) -> Result<(), CliError> {
    let family = cfg.require_family()?;
    let order = cfg.order.unwrap_or(3);
    let mu = require_mu(cfg)?;
    let kind = cfg.kind.as_deref().unwrap_or("both");
    let schedule = cfg
        .eps_schedule
        .clone()
        .unwrap_or_else(|| vec![0.04, 0.02, 0.01, 0.005, 0.0025]);
    if schedule.len() < 4 || schedule.windows(2).any(|w| w[0] <= w[1]) {
        return Err(CliError::usage(
            "eps_schedule must be >= 4 strictly decreasing values".into(),
        ));
    }

    let mut csv = metadata_header("rate-check", &config_echo(cfg));
    csv.push_str("kind,order,expected_slope,slope,conclusive\n");
    let mut comments = String::new();
    if kind == "both" || kind == "discrete" {
        let rc = rate_check_discrete(family, order, mu, &schedule).map_err(CliError::from_core)?;
        let expected = (order as f64 + 1.0) / 2.0;
        let _ = writeln!(csv, "discrete,{order},{expected},{},{}", rc.slope, rc.conclusive);
        for (e, s) in &rc.points {
            let _ = writeln!(comments, "# discrete eps={e} sup_err={s}");
        }
    }
    if kind == "both" || kind == "laplace" {
        let rc = rate_check_laplace(family, order, mu, &schedule).map_err(CliError::from_core)?;
        let expected = (order / 2 + 1) as f64;
        let _ = writeln!(csv, "laplace,{order},{expected},{},{}", rc.slope, rc.conclusive);
        for (e, s) in &rc.points {
            let _ = writeln!(comments, "# laplace eps={e} sup_err={s}");
        }
    }
    if !matches!(kind, "both" | "discrete" | "laplace") {
        return Err(CliError::usage(format!("unknown rate-check kind {kind:?}")));
    }
    csv.push_str(&comments);
    emit(cfg.out.as_deref(), &csv)
}

// ------------------------------------------------------------ simulate

pub fn run_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let family = cfg.require_family()?;
    let count = cfg.count.unwrap_or(100);
    let seed = cfg.seed.unwrap_or(0);
    let q = match (&cfg.mixing, cfg.mu) {
        (Some(spec), _) => spec.to_mixing()?,
        (None, Some(mu)) => locmix_core::DiscreteMixing::delta(mu),
        (None, None) => return Err(CliError::usage("missing mixing (or mu for unmixed)".into())),
    };
    let draws = mixture_sample(family, &q, count, seed).map_err(CliError::from_core)?;
    let mut csv = metadata_header("simulate", &config_echo(cfg));
    let _ = writeln!(csv, "# seed: {seed}");
    for x in draws {
        let _ = writeln!(csv, "{x}");
    }
    emit(cfg.out.as_deref(), &csv)
}
