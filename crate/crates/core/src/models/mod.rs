//! Concrete model families.

pub mod classical;
pub mod random;
pub mod two_level;

pub use classical::{classical_embedding, ClassicalChain, Edge};
pub use two_level::{
    limiting_oracles, steady_state_closed_form, two_level_model, LimitingOracles, Observable,
    Parameter, TwoLevelParams, TwoLevelPoint,
};
