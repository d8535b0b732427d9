//! Interaction energies for attractive-repulsive power-law potentials.
//!
//! The crate evaluates the pair potentials `|x|^a/a - |x|^b/b` and their
//! relatives ([`potentials`]), builds discrete probability measures such as
//! uniform measures on regular simplices ([`measures`]), computes their
//! interaction energies and particle gradients ([`energy`]), brackets the
//! exponent thresholds at which simplices become energy minimizers
//! ([`thresholds`]), and searches for minimizers by particle gradient flow
//! ([`flow`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod flow;
pub mod measures;
pub mod potentials;
pub mod thresholds;

pub use energy::{
    corner_case_constants, energy, energy_breakdown, gradient, quartic_quadratic_form, simplex_energy, verify_min42,
    CornerCase, EnergyBreakdown,
};
pub use error::{Error, Result};
pub use flow::{descend, multistart, simplex_optimality_probe, FlowConfig, FlowResult, SimplexVerdict, StepRule};
pub use measures::{
    cross_polytope, sphere_quadrature, unit_simplex, Classification, DiscreteMeasure, MomentTensor, RadialMeasure,
};
pub use potentials::{dbeta_rescaled, eval_radial, eval_radial_derivative, zero_radius, Exponents, Kernel};
pub use thresholds::{
    alpha_plus, alpha_plus_with, alpha_star, argmax_unimodal, beta_star_inf, el_margin, el_potential, f_inf, f_n,
    phase_sweep, underline_alpha, Bracket, ElOptions, Regime, SweepOptions, ThresholdReport,
};
