//! Centralized verification tolerances.
//!
//! Every threshold used by the verification suite, the CLI defaults, and the
//! acceptance tests is defined here, so they agree by construction.
//!
//! | Constant | Value | Applies to |
//! |----------|-------|------------|
//! | [`F_HOMOGENEITY_REL`] | 1e-12 | `F(x, λy) = λ F(x, y)` |
//! | [`TENSOR_HOMOGENEITY_REL`] | 1e-11 | 0-homogeneity of `g`, (-1)-homogeneity of `C` |
//! | [`EULER_REL`] | 1e-10 | Euler contractions (`h y = 0`, `I y = 0`, `M y = 0`, `E y = 0`, spray 2-homogeneity) |
//! | [`RANDERS_MATSUMOTO_REL`] | 1e-7 | `‖M‖ ≤ tol · (1 + ‖C‖)` for Randers-type metrics |
//! | [`NON_RANDERS_WITNESS_MIN`] | 1e-3 | smallest `‖M‖` accepted as a non-Randers witness |
//! | [`STRUCTURAL_CURVATURE_REL`] | 1e-8 | `K_y(y) = 0` and g-self-adjointness of the curvature |
//! | [`SCALAR_RESIDUAL_REL`] | 1e-7 | scalar-curvature characterization residual |
//! | [`SCALAR_PRECONDITION_REL`] | 1e-6 | gate for identities that assume scalar curvature |
//! | [`MKDIFF_REL`] | 1e-5 | vertical derivative identity residual |
//! | [`IDENTITY_RESIDUAL_REL`] | 1e-4 | flow-differentiated identity residuals |
//! | [`RIEMANNIAN_IDENTITY_REL`] | 1e-8 | the same identities on Riemannian metrics (trivial-vanishing paths) |
//! | [`LANDSBERG_DUAL_TOL`] | 1e-6 | transport vs closed-form Landsberg, and the `J` trace relation |
//! | [`ODE_RESIDUAL_REL`] | 1e-4 | `max |M'' + K F^2 M| / max |M|` along unit-speed geodesics |
//! | [`MVC_MARGIN_TOL`] | 1e-6 | allowed undershoot of the cosh/sinh comparison margin |
//! | [`FLAG_SPREAD_TOL`] | 1e-6 | flag-curvature constancy across flags (closed-form metrics) |
//! | [`FLAG_SPREAD_TOL_IMPLICIT`] | 1e-5 | the same for implicitly defined metrics |
//! | [`LEVI_CIVITA_ORACLE_TOL`] | 1e-8 | spray-formula curvature vs the Levi-Civita oracle |

pub const F_HOMOGENEITY_REL: f64 = 1e-12;
pub const TENSOR_HOMOGENEITY_REL: f64 = 1e-11;
pub const EULER_REL: f64 = 1e-10;
pub const RANDERS_MATSUMOTO_REL: f64 = 1e-7;
pub const NON_RANDERS_WITNESS_MIN: f64 = 1e-3;
pub const STRUCTURAL_CURVATURE_REL: f64 = 1e-8;
pub const SCALAR_RESIDUAL_REL: f64 = 1e-7;
pub const SCALAR_PRECONDITION_REL: f64 = 1e-6;
pub const MKDIFF_REL: f64 = 1e-5;
pub const IDENTITY_RESIDUAL_REL: f64 = 1e-4;
pub const RIEMANNIAN_IDENTITY_REL: f64 = 1e-8;
pub const LANDSBERG_DUAL_TOL: f64 = 1e-6;
pub const ODE_RESIDUAL_REL: f64 = 1e-4;
pub const MVC_MARGIN_TOL: f64 = 1e-6;
pub const FLAG_SPREAD_TOL: f64 = 1e-6;
pub const FLAG_SPREAD_TOL_IMPLICIT: f64 = 1e-5;
pub const LEVI_CIVITA_ORACLE_TOL: f64 = 1e-8;

/// Fraction of `max |M|` the finite-difference error estimate may reach
/// before a profile grid is rejected as too coarse.
pub const PROFILE_FD_ERROR_FRACTION: f64 = 0.1;

/// `M` magnitudes below this are treated as identically zero (vacuous ODE).
pub const PROFILE_VACUOUS_FLOOR: f64 = 1e-12;
