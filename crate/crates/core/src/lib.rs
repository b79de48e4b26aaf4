//! Desk-scale laboratory for the Paley equiangular tight frame and the Paley
//! graph two-source extractor.
//!
//! Everything is exact where it can be: χ lives in an integer table, the RIP
//! constant is read off integer Seidel submatrices, and character sums and
//! extractor biases are integers over known denominators.

pub mod charsum;
pub mod clique;
pub mod combin;
pub mod eigen;
pub mod error;
pub mod etf;
pub mod extractor;
pub mod field;
pub mod format;
pub mod masks;
pub mod pipeline;
pub mod rip;
pub mod search;
pub mod subset;

pub use error::{Error, Result};
pub use field::FieldCtx;
pub use subset::Subset;
