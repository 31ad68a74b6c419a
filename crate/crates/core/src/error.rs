use thiserror::Error;

use crate::estimation::PartialAdjacency;
use crate::topology::NodeId;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range argument.
    #[error("invalid input: {0}")]
    Input(String),

    /// A quantity is undefined for the given arguments (e.g. τ ≤ 0).
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation was invoked on a node whose role does not allow it.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Least-squares system without full column rank.
    #[error("rank deficient: numerical column rank {rank} < {columns}")]
    RankDeficient { rank: usize, columns: usize },

    /// Adjacency flooding reached its round cap with rows still missing.
    #[error("flooding stalled at robot {owner} after {rounds} rounds with {missing} rows missing")]
    FloodStalled {
        owner: NodeId,
        rounds: usize,
        missing: usize,
        partial: Box<PartialAdjacency>,
    },

    /// Two robots occupy the same position, so the avoidance direction is undefined.
    #[error("coincident positions for robots {0} and {1}")]
    Singularity(NodeId, NodeId),

    /// The team cannot keep up with the target.
    #[error("infeasible tracking: u_max {u_max} <= target speed {target_speed}")]
    InfeasibleTracking { u_max: f64, target_speed: f64 },

    /// Explicit Euler centroid recursion diverges.
    #[error("unstable discretization: k_ref * t_s = {0} >= 1")]
    Unstable(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
