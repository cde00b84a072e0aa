//! Mean-variance optimal portfolios and efficient frontiers parameterized by
//! total budget, expected return and variance, so that zero-budget
//! (long/short balanced) and negative-budget portfolios are first-class.
//!
//! - [`market_data`]: CSV return series, sample estimators, validated universes.
//! - [`frontier`]: closed-form allocations, frontiers and rescaled weights.
//! - [`oracle`]: KKT-system solve and dominance probes used as a cross-check.
//! - [`render`]: CSV and SVG output for frontier families.
//! - [`cli`]: the `frontier-lab` command line.

// `!(x > tol)` is used on purpose throughout: NaN must fail such checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod frontier;
pub mod linalg;
pub mod market_data;
pub mod oracle;
pub mod render;

pub use error::{Error, Result};
pub use frontier::{
    classify_budget, compute_coefficients, critical_frontier_slope, critical_relative_weights,
    frontier_return_at_risk, minimum_variance_point, optimal_allocation, rescaled_allocation,
    rescaled_frontier, sample_frontier, sample_rescaled_frontier, variance_at_return,
    ACoefficients, Allocation, Branch, BudgetClass, Convention, FrontierPoint,
    RescaledFrontierPoint,
};
pub use market_data::{
    estimate_universe, load_returns, universe_from_parts, AssetUniverse, ReturnSeries, Validation,
};
pub use oracle::{dominance_check, solve_kkt, DominanceReport, KktSolution};
pub use render::{family_to_csv, family_to_svg, FrontierCurve, FrontierFamily};
