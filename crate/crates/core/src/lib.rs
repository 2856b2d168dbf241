//! Word-map fiber probabilities on finite groups.
//!
//! * [`words`]: free-group words, parsing, reduction, enumeration.
//! * [`groups`]: concrete finite groups, conjugacy classes, cosets.
//! * [`prob`]: exact fiber distributions, Monte Carlo estimates, coset
//!   identities and the generation-probability bound.
//! * [`families`]: scans over group families with decay fitting.
//! * [`tower`]: random tuples in the congruence tower `SL_2(Z/p^k)` and
//!   freeness certificates.
//! * [`cli`]: the `wordfiber` command line.

pub mod cli;
pub mod error;
pub mod families;
pub mod groups;
pub mod prob;
pub mod stats;
pub mod tower;
pub mod words;

pub use error::{Budget, Error, Result};
pub use groups::{ConjugacyData, CosetSystem, FiniteGroup, GroupBackend, GroupOps};
pub use words::Word;
