use alloc::string::String;

use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("discount factor {0} is outside [0, 1)")]
    DiscountOutOfRange(String),

    #[error("invalid discount function: {0}")]
    InvalidDiscount(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("linear system is singular; transition rows are malformed")]
    SingularSystem,

    #[error("horizon {requested} exceeds the materialization cap {cap}")]
    HorizonCap { requested: String, cap: usize },

    #[error("{count} policies exceed the enumeration cap {cap}; use the epsilon-SPE path, which does not need the degenerate set")]
    EnumerationCap { count: String, cap: usize },

    #[error("limit discount {limit} lies on a degenerate point (near {near}); use compute_eps_spe instead")]
    DegenerateLimit { limit: String, near: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("the theoretical separation bound is astronomically small: {0}")]
    SeparationTooSmall(String),
}
