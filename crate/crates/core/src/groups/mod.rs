//! Finite-group backends, conjugacy classes and coset systems.

mod backend;
mod finite;
pub mod modular;

pub use backend::{order_u64, Elem, GroupBackend};
pub use finite::{ConjugacyClass, ConjugacyData, CosetSystem, FiniteGroup};

/// The operations a word map needs.
pub trait GroupOps {
    type Elem: Clone;

    fn identity(&self) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Self::Elem;
}
