//! Stochastic network calculus for tandem networks with cross traffic.
//!
//! Statistical arrival and service envelopes are piecewise-linear curves
//! paired with exponential error functions. Service envelopes of
//! consecutive hops compose by min-plus convolution, and end-to-end
//! backlog, delay and output bounds follow with an explicit violation
//! probability. A fluid Monte Carlo simulator of the same network checks
//! the bounds empirically.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod minplus;
pub mod service;
pub mod sim;
pub mod traffic;

pub use bounds::closed_form::{closed_form, optimize_closed_form};
pub use bounds::optimize::{
    evaluate, evaluate_independent, midpoint_delta, optimize, optimize_independent, pipeline,
    BoundResult, DeltaPolicy, NetworkSpec, Objective, OptimizerSettings, ThetaGrid,
};
pub use bounds::{
    backlog_bound, backlog_quantile, delay_bound, delay_quantile, independent_error,
    output_envelope, partition_infimum, BoundTerm, OutputEnvelope, PartitionedError, Quantile,
    StieltjesGrid,
};
pub use error::{Error, Result};
pub use minplus::{convolve, deconvolve_at, horizontal_deviation, Curve};
pub use service::{
    compose_network, constant_rate_service, leftover_service, NetworkService, ServiceEnvelope,
};
pub use traffic::{
    arrival_envelope, mmoo_alpha, tail_sum, ArrivalEnvelope, ExpError, MmooParams, SigmaRhoRow,
    SigmaRhoTable, TrafficKind, TrafficModel,
};
