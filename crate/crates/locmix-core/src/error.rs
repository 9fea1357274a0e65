use core::fmt;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Mean parameter outside the open mean domain of the family.
    MeanDomain { mu: f64 },
    /// Point outside the support of the family.
    Support { x: f64 },
    /// Requested derivative/mixture order outside the supported range.
    UnsupportedOrder { order: usize, max: usize },
    /// Requested moment index exceeds the supported polynomial degree.
    UnsupportedMoment { index: usize, max: usize },
    /// A mixing atom lies outside the mean domain.
    AtomDomain { theta: f64 },
    /// Malformed mixing distribution (weights or atoms).
    InvalidMixing(&'static str),
    /// Requested mean not between the two-point atoms.
    InfeasibleMean { mu: f64, lo: f64, hi: f64 },
    /// Adaptive quadrature failed to reach the requested tolerance.
    Quadrature { estimate: f64, achieved: f64, requested: f64 },
    /// Sampling from a model that is not strictly positive on its support.
    NotInterior,
    /// Operation requires finite (or truncated-countable) support.
    ContinuousSupport,
    /// Optimizer hit its iteration cap.
    IterationLimit,
    /// Every inner fiber solve diverged; no profile maximizer exists in the
    /// bracket.
    FitFailure,
    /// Target moment vector lies outside the convex hull.
    OutsideHull,
    /// The LP solver reached a state that the bounded feasibility forms
    /// used in this crate should never produce.
    LpInternal(&'static str),
    /// Not enough usable points for a rate regression.
    Inconclusive,
    /// Empty sample.
    EmptySample,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::MeanDomain { mu } => write!(f, "mean {mu} outside the mean domain"),
            Error::Support { x } => write!(f, "point {x} outside the support"),
            Error::UnsupportedOrder { order, max } => {
                write!(f, "order {order} unsupported (max {max})")
            }
            Error::UnsupportedMoment { index, max } => {
                write!(f, "moment index {index} unsupported (max {max})")
            }
            Error::AtomDomain { theta } => write!(f, "mixing atom {theta} outside the mean domain"),
            Error::InvalidMixing(msg) => write!(f, "invalid mixing distribution: {msg}"),
            Error::InfeasibleMean { mu, lo, hi } => {
                write!(f, "mean {mu} not attainable with atoms in [{lo}, {hi}]")
            }
            Error::Quadrature {
                estimate,
                achieved,
                requested,
            } => write!(
                f,
                "quadrature reached {achieved:e} (requested {requested:e}); estimate {estimate}"
            ),
            Error::NotInterior => write!(f, "model is not strictly positive on its support"),
            Error::ContinuousSupport => {
                write!(f, "operation requires finite or truncated-countable support")
            }
            Error::IterationLimit => write!(f, "iteration limit reached"),
            Error::FitFailure => write!(f, "all inner solves diverged; no profile maximizer"),
            Error::OutsideHull => write!(f, "target moment vector lies outside the convex hull"),
            Error::LpInternal(msg) => write!(f, "internal LP error: {msg}"),
            Error::Inconclusive => write!(f, "too few usable points for a conclusive regression"),
            Error::EmptySample => write!(f, "empty sample"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
