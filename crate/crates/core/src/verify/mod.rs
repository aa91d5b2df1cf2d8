//! Numerical checks of the ensemble's limit laws: an exact enumeration oracle, a Monte Carlo
//! harness, importance sampling under tilted link probabilities, and related diagnostics.

pub mod contraction;
pub mod enumerate;
pub mod mc;
pub mod rn;
pub mod slope;
pub mod tilted;

pub use contraction::{minimize_lambda_given_isolated, ContractionResult};
pub use enumerate::{enumerate_ensemble, enumerate_expectation, enumerate_probability, enumeration_budget, observe, EnsembleDistribution, ObservableKind, ObservableValue, ENUMERATION_BUDGET};
pub use mc::{mc_laws, mc_scalar, mc_values, Harness, McEstimate, McLaw, Moments};
pub use rn::{asymptotic_rn_check, RnCheck};
pub use slope::{empty_graph_log_probability, empty_graph_slope, ldp_slope_scan, SlopeRow, SlopeScan};
pub use tilted::{no_edges_tilt, optimal_tilt, rare_event_tilted, Event, GraphEvent, TiltedEstimate};
