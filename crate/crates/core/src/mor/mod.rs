//! Rational Krylov model order reduction.
//!
//! [`cure`] accumulates order-2 pseudo-optimal steps ([`pork`]) whose shifts
//! are picked by [`spark_optimize`]; the ledger carries the a priori relative
//! H₂ bound after every step. [`irka`] is the two-sided H₂-optimal baseline.

mod cure;
mod irka;
mod krylov;
mod pork;
mod spark;

pub use cure::{
    bound_table, bound_table_csv, cure, cure_with, parse_bound_table_csv, BoundRow, CureLedger, CureOptions, CureStep,
    LedgerDocument, StepDocument,
};
pub use irka::{irka, IrkaOptions, IrkaResult};
pub use krylov::{rational_krylov, rational_krylov_chain, rational_krylov_nested, rational_krylov_raw, KrylovFactors};
pub use pork::{pork, residual_input};
pub use spark::{spark_objective, spark_optimize, spark_optimize_with, ShiftPair, SparkOptions, SparkResult};
