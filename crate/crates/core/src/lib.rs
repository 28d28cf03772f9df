pub mod bounds;
pub mod distopt;
pub mod error;
pub mod families;
pub mod linalg;
pub mod pbit;
pub mod qstate;
pub mod tol;

pub use error::{Error, Result};
