//! Optimal delegation to a biased agent who decides how much to learn.
//!
//! A principal chooses a delegation set; the agent picks an effort level,
//! possibly learns the state, and then chooses from the set. The crate
//! evaluates any set, searches the interval, hollow and high-point
//! families for the best one, and checks the result against brute force.
//!
//! ```
//! use delegation::agent::CostModel;
//! use delegation::model::DecisionSetting;
//! use delegation::principal::evaluate;
//! use delegation::sets::DelegationSet;
//!
//! let s = DecisionSetting::uqc(0.2)?;
//! let ev = evaluate(&s, &CostModel::szalay(0.05)?, &DelegationSet::interval(0.2, 0.8));
//! assert!(ev.u_total > ev.u_p0);
//! # Ok::<(), delegation::Error>(())
//! ```

// `!(x > 0.0)` is how NaN gets rejected alongside bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod bias;
pub mod config;
pub mod error;
pub mod high_point;
pub mod model;
pub mod numeric;
pub mod optimizer;
pub mod oracle;
pub mod principal;
pub mod sets;
pub mod suites;

pub use error::{Error, Result};

// The book's snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/sets.md")]
    mod sets {}
    #[doc = include_str!("../../../book/src/agent.md")]
    mod agent {}
    #[doc = include_str!("../../../book/src/principal.md")]
    mod principal {}
    #[doc = include_str!("../../../book/src/optimizer.md")]
    mod optimizer {}
    #[doc = include_str!("../../../book/src/bias.md")]
    mod bias {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/high_point.md")]
    mod high_point {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
