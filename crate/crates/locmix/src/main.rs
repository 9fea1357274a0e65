use clap::{Args, Parser, Subcommand};
use locmix::commands;
use locmix::config::{FamilySpec, MixingSpec, RunConfig};
use locmix::CliError;

/// Local mixture models of exponential families: fitting, boundary and
/// region geometry, integrated likelihood and rate diagnostics.
#[derive(Parser)]
#[command(name = "locmix", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand; each overrides the matching config key.
#[derive(Args, Default)]
struct Common {
    /// JSON config file; flags override its keys
    #[arg(long)]
    config: Option<String>,
    /// family: `binomial:N` | `poisson` | `normal` | JSON object
    #[arg(long)]
    family: Option<String>,
    /// model order r (lambda_2..lambda_r)
    #[arg(long)]
    order: Option<usize>,
    /// input data CSV (one observation per line, optional weight column)
    #[arg(long)]
    data: Option<String>,
    /// output path (stdout when omitted)
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Profile fit over (mu, lambda); emits a fit report JSON
    Fit {
        #[command(flatten)]
        common: Common,
        /// coarse mu-grid size before golden-section refinement
        #[arg(long)]
        coarse_points: Option<usize>,
    },
    /// Fiber log-likelihood grid over (lambda2, lambda3) at fixed mu0
    FiberScan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mu0: Option<f64>,
        /// lambda_4.. values held fixed when order > 3
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        fixed_lambda: Option<Vec<f64>>,
        #[arg(long)]
        l2_min: Option<f64>,
        #[arg(long)]
        l2_max: Option<f64>,
        #[arg(long)]
        l2_steps: Option<usize>,
        #[arg(long)]
        l3_min: Option<f64>,
        #[arg(long)]
        l3_max: Option<f64>,
        #[arg(long)]
        l3_steps: Option<usize>,
        /// annotation JSON path (default: <out>.annotations.json)
        #[arg(long)]
        annotations: Option<String>,
    },
    /// Hard-boundary constraint dump at fixed mu
    Boundary {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Extremal-point dump of the lambda region, optional membership verdict
    Region {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        m_lo: Option<f64>,
        #[arg(long)]
        m_hi: Option<f64>,
        /// shorthand for m_lo/m_hi = mu -/+ epsilon (clipped to the domain)
        #[arg(long)]
        epsilon: Option<f64>,
        /// atom grid per region axis
        #[arg(long)]
        grid: Option<usize>,
        /// lambda vector to test for membership
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lambda: Option<Vec<f64>>,
        #[arg(long)]
        tol: Option<f64>,
        /// verdict JSON path (default: <out>.verdict.json)
        #[arg(long)]
        annotations: Option<String>,
    },
    /// Integrated-likelihood curve over a mu grid
    Marginal {
        #[command(flatten)]
        common: Common,
        /// half-width of the mixing support interval (required)
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long)]
        mu_min: Option<f64>,
        #[arg(long)]
        mu_max: Option<f64>,
        #[arg(long)]
        mu_points: Option<usize>,
    },
    /// Empirical approximation-rate table
    RateCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mu: Option<f64>,
        /// `discrete` | `laplace` | `both`
        #[arg(long)]
        kind: Option<String>,
        /// decreasing epsilon schedule
        #[arg(long, value_delimiter = ',')]
        eps_schedule: Option<Vec<f64>>,
    },
    /// Draw a sample from a discrete mixture over the family
    Simulate {
        #[command(flatten)]
        common: Common,
        /// mixing JSON: {"atoms":[[theta,rho],...]}
        #[arg(long)]
        mixing: Option<String>,
        /// degenerate mixing at this mean when --mixing is omitted
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
    },
}

fn base_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(f) = &common.family {
        cfg.family = Some(FamilySpec::parse(f)?);
    }
    if common.order.is_some() {
        cfg.order = common.order;
    }
    if common.data.is_some() {
        cfg.data = common.data.clone();
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    Ok(cfg)
}

macro_rules! merge {
    ($cfg:ident, $($field:ident),+) => {
        $(if $field.is_some() { $cfg.$field = $field.clone(); })+
    };
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Fit {
            common,
            coarse_points,
        } => {
            let mut cfg = base_config(common)?;
            merge!(cfg, coarse_points);
            commands::run_fit(&cfg)
        }
        Command::FiberScan {
            common,
            mu0,
            fixed_lambda,
            l2_min,
            l2_max,
            l2_steps,
            l3_min,
            l3_max,
            l3_steps,
            annotations,
        } => {
            let mut cfg = base_config(common)?;
            merge!(
                cfg,
                mu0,
                fixed_lambda,
                l2_min,
                l2_max,
                l2_steps,
                l3_min,
                l3_max,
                l3_steps,
                annotations
            );
            commands::run_fiber_scan(&cfg)
        }
        Command::Boundary { common, mu } => {
            let mut cfg = base_config(common)?;
            merge!(cfg, mu);
            commands::run_boundary(&cfg)
        }
        Command::Region {
            common,
            mu,
            m_lo,
            m_hi,
            epsilon,
            grid,
            lambda,
            tol,
            annotations,
        } => {
            let mut cfg = base_config(common)?;
            merge!(cfg, mu, m_lo, m_hi, epsilon, grid, lambda, tol, annotations);
            commands::run_region(&cfg)
        }
        Command::Marginal {
            common,
            epsilon,
            draws,
            mu_min,
            mu_max,
            mu_points,
        } => {
            let mut cfg = base_config(common)?;
            merge!(cfg, epsilon, draws, mu_min, mu_max, mu_points);
            commands::run_marginal(&cfg)
        }
        Command::RateCheck {
            common,
            mu,
            kind,
            eps_schedule,
        } => {
            let mut cfg = base_config(common)?;
            merge!(cfg, mu, kind, eps_schedule);
            commands::run_rate_check(&cfg)
        }
        Command::Simulate {
            common,
            mixing,
            mu,
            count,
        } => {
            let mut cfg = base_config(common)?;
            merge!(cfg, mu, count);
            if let Some(text) = mixing {
                let spec: MixingSpec = serde_json::from_str(text)
                    .map_err(|e| CliError::usage(format!("bad mixing spec: {e}")))?;
                cfg.mixing = Some(spec);
            }
            commands::run_simulate(&cfg)
        }
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("locmix: {e}");
        std::process::exit(e.code);
    }
}
