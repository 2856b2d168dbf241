use num_bigint::BigUint;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Malformed word, group spec or element text. `pos` is a 0-based byte offset.
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    /// An exhaustive operation would need more element operations than allowed.
    #[error("budget exceeded: {required} element operations required, budget is {budget}")]
    BudgetExceeded { required: BigUint, budget: u64 },

    #[error("invalid argument: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn parse(pos: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            pos,
            msg: msg.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

/// Upper bound on element operations an exhaustive computation may perform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget(pub u64);

impl Budget {
    pub const DEFAULT: Budget = Budget(1_000_000_000);

    pub fn check(self, required: &BigUint) -> Result<()> {
        if *required > BigUint::from(self.0) {
            Err(Error::BudgetExceeded {
                required: required.clone(),
                budget: self.0,
            })
        } else {
            Ok(())
        }
    }

    pub fn check_u128(self, required: u128) -> Result<()> {
        self.check(&BigUint::from(required))
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::DEFAULT
    }
}
