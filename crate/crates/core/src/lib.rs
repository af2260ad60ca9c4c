//! Simpson-rule defects over invex domains, the preinvex and prequasiinvex error bounds
//! built on the Simpson kernel, and sampled checks of the hypotheses those bounds need.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod expr;
pub mod invexity;
pub mod kernel;
pub mod property;
pub mod quadrature;
pub mod runner;
