use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// The closed-form adversarial mean only holds while the honest stake
    /// cannot be driven to zero. The simulated process is still valid.
    #[error(
        "out of regime: total reward {total_reward} exceeds honest initial stake {honest_stake}; \
         closed form not guaranteed (simulation only)"
    )]
    OutOfRegime {
        total_reward: f64,
        honest_stake: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty sample")]
    EmptySample,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
