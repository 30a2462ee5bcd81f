//! Finite-domain integer constraint solving.
//!
//! A [`Store`] holds integer variables with [`IntervalSet`] domains and the
//! constraints posted over them. Posting runs propagation to a fixpoint;
//! [`Labeling`] and [`Store::search`] enumerate solutions depth-first,
//! [`Store::count_solutions`] counts them and [`Store::optimize`] runs
//! branch and bound over an objective expression.
//!
//! ```
//! use featline_fd::{NumExpr, Store, Strategy};
//!
//! let mut store = Store::new();
//! let x = store.int_var(0, 9, "X").unwrap();
//! let y = store.int_var(0, 9, "Y").unwrap();
//! let z = store.int_var(0, 9, "Z").unwrap();
//! store.post((NumExpr::var(x) + NumExpr::var(y)).lt(z).into()).unwrap();
//! assert_eq!(store.domain(z).min(), Some(1));
//! assert_eq!(store.search(Strategy::default()).count(), 165);
//! ```

mod domain;
mod expr;
mod norm;
mod prop;
mod search;
mod state;
mod store;

pub use domain::IntervalSet;
pub use expr::{BoolForm, Cmp, CmpOp, Constraint, CountOp, NumExpr, VarRef};
pub use search::{
    CountResult, Direction, Labeling, Limits, Optimum, Search, Solution, Step, Strategy, ValueOrder,
    VarOrder,
};
pub use state::{Cause, ConstraintId};
pub use store::{Failure, LevelId, Status, Store};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FdError {
    #[error("variable `{name}` has an empty domain")]
    EmptyDomain { name: String },
    #[error("table tuple has {found} values for {expected} variables")]
    ArityMismatch { expected: usize, found: usize },
    #[error("variable index {0} does not belong to this store")]
    UnknownVar(usize),
    #[error("integer overflow in bound computation")]
    IntegerOverflow,
    #[error("level {0} is not open")]
    UnknownLevel(usize),
    #[error("no solution exists")]
    Unsatisfiable,
    #[error("search interrupted before any solution was found")]
    Interrupted,
    #[error("{0}")]
    InvalidArgument(String),
}
