//! Feature models: the model language, validation, lowering to a
//! finite-domain store, whole-model analyses and interactive configuration
//! sessions.
//!
//! ```
//! use featline_core::{compile, parse};
//!
//! let m = parse(
//!     "model Car\n\
//!      feature Car\n\
//!      feature Radio of Car optional\n\
//!      feature Gps of Car optional\n\
//!      Gps requires Radio\n",
//! )
//! .unwrap();
//! let mut c = compile(&m).unwrap();
//! assert_eq!(c.store.count_solutions(100).count, 3);
//! ```

pub mod analysis;
pub mod ast;
pub mod compile;
pub mod json;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod session;
pub mod validate;

pub use analysis::{AnalysisError, AnalysisReport, AnalysisRequest, Projection, Report};
pub use ast::*;
pub use compile::{compile, CompileError, Compiled, VarMap};
pub use json::JsonInt;
pub use parser::{parse, parse_arith, parse_constraint, parse_unchecked};
pub use printer::serialize;
pub use session::{Session, SessionError};
pub use validate::{validate_model, Diagnostic};
