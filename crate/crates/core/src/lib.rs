//! Search-based unit test generation for MiniLang with smart selection of
//! coverage goals.

pub mod goals;
pub mod harness;
pub mod lang;
pub mod mutation;
pub mod runtime;
pub mod search;
pub mod selection;
pub mod stats;
