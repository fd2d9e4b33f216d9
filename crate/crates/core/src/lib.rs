//! Numerical toolkit for weighted tent spaces on a uniform grid.
//!
//! Functions live on a box in one or two dimensions, half-space functions
//! add a log-spaced set of heights, and every average uses the discrete
//! (clipped) ball measure so that the reassociation identities of the
//! continuum theory hold exactly up to rounding.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod error;
pub mod grid;
mod kernel;
pub mod operators;
pub mod suite;
pub mod tent;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use grid::{
    ball_average, ball_averages, ball_measures, lorentz_quasinorm, lp_norm, weighted_measure,
    DiscreteBall, GridBox, GridFn, HalfSpaceFn, LorentzIndex, TLevels,
};
pub use operators::{
    extend_slicewise, family_apply, frac_maximal, heat, hilbert, maximal, maximal_opnorm_estimate,
    offdiag_profile, riesz_potential, BaseOperator, DecayFit, OffDiagPoint, OffDiagProfile,
    OperatorFamily, StripGeometry,
};
pub use tent::{
    change_of_aperture_ratio, cone_functional, cone_functional_with, fubini_identity_residual,
    tent_lorentz_norm, tent_norm, ConeMode, ConeQuadrature, FubiniResidual,
};
pub use weights::{
    ainfty_constant, ap_constant, apq_constant, averaged_weight, power_weight, rdf_iterate,
    rh_constant, BallFamily, RdfIterate, Weight, WeightClass, WeightConstants, WeightKind,
    WeightSpec,
};
