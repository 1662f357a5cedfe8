//! Numerical laboratory for weighted Hardy, Sobolev-type and
//! Caffarelli-Kohn-Nirenberg inequalities on stratified Lie groups.
//!
//! The crate covers symbolic construction of stratified groups from their
//! generating vector fields, horizontal calculus, quadrature that keeps clear
//! of the singular set `{x' = 0}`, the inequality cases with their sharp
//! constants, and numerical sharpness studies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field;
pub mod gauss;
pub mod group;
pub mod hcalc;
pub mod ineq;
pub mod poly;
pub mod quad;
pub mod sharpness;
pub mod simplex;
pub mod spline;
pub mod testfuncs;

pub use error::{Error, Result};
pub use field::{radius, Dilated, Field, FnField, OverRadius, ScalarField, Support};
pub use group::{GroupDescription, StratifiedGroup};
pub use hcalc::{
    check_divergence_identity, check_gradient_identity, euler_derivative, horizontal_divergence,
    horizontal_gradient, DiffMode, HVector, HorizontalField, IdentityReport,
};
pub use ineq::{
    ckn_case, classical_ckn_conditions, equivalence_check, evaluate, evaluate_many, hardy_case,
    l2_equiv_a, l2_equiv_b, sobolev_case, CaseKind, ConditionReport, EquivalenceReport,
    InequalityCase, InequalityReport, Verdict,
};
pub use quad::{integrate, weighted_lp_norm, Estimate, GridSpec, QuadratureGrid};
pub use sharpness::{
    estimate_best_constant, ratio_curve, standard_schedule, BestConstantOptions, ProfileEstimate,
    RatioCurve, ScheduleStep,
};
pub use testfuncs::{
    extremizer_h1, extremizer_h2, extremizer_h3, random_field, ExtremizerFamily, FamilyKind,
    RandomField, RandomFieldConfig,
};
