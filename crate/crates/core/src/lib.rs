//! Numerical toolkit for upper-tail, n-point large deviations of the KPZ
//! equation started from the narrow wedge.
//!
//! The crate is organised around the objects that appear in that theory:
//!
//! * [`profile`]: the parabola `p(t,x) = -x^2/(2t)`, the terminal profile and
//!   its concave-hull extension, and classification of deviation vectors.
//! * [`rate`]: the closed-form rate function and its gradient in the heights.
//! * [`legendre`]: moment Lyapunov exponents by Legendre duality, the
//!   intermediate-time tree identity, and the two-delta symmetry scan.
//! * [`shape`]: the spacetime limit shape built by front tracking of shocks
//!   (noise corridors), a brute-force Hopf-Lax oracle, and the moment
//!   functional over finitely-atomic corridor ensembles.
//! * [`she`]: a desk-scale simulator for the stochastic heat equation used for
//!   typical-behaviour checks.

pub mod error;
pub mod legendre;
pub mod numeric;
pub mod profile;
pub mod rate;
pub mod shape;
pub mod she;

pub use error::{Error, Result};
pub use legendre::{
    dual_height, dual_height_newton, lyapunov, lyapunov_from_duality, symmetry_breaking_scan,
    tree_decomposition_check, DualPair, IntermediateSplit, ScanPoint, SymmetryScan, TreeCheck,
};
pub use profile::{
    build_profile, classify, parabola_eval, profile_eval, reduce_indices, MembershipClass, Piece,
    ProbeConfig, TerminalProfile,
};
pub use rate::{rate, rate_gradient, PieceContribution, RateResult};
pub use shape::{
    build_shock_tree, characteristic_through, cones_of, corridor_masses, evaluate_m,
    shape_eval, shape_eval_oracle, Characteristic, Cone, CorridorEnsemble, HopfLaxOracle,
    LimitShape, ShockSegment, ShockTree,
};
pub use she::{
    heat_kernel, hydrodynamic_check, scaled_height, simulate_she, FieldSample, HydroReport,
    SimConfig,
};
