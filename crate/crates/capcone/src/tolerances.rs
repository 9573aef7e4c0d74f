//! Named numerical tolerances and algorithm parameters.
//!
//! Every threshold used by the solvers and by the verification layer lives
//! here, together with the reason for its size.  No module hard-codes a
//! tolerance inline.

// ---------------------------------------------------------------------------
// Hypergeometric series
// ---------------------------------------------------------------------------

/// Maximum number of series terms before reporting non-convergence.
pub const HYP_TERM_BUDGET: usize = 100_000;

/// Relative tail tolerance of the series, measured against the running sum of
/// absolute values of the terms (so cancellation-free sums reach ~1 ulp).
pub const HYP_TAIL_REL: f64 = 1e-16;

// ---------------------------------------------------------------------------
// Root finding and extrema
// ---------------------------------------------------------------------------

/// Number of Chebyshev nodes in the sign scan of `find_zero`.
pub const ZERO_SCAN_POINTS: usize = 2001;

/// Bisection tolerance for zeros of the profile families.
pub const ZERO_BISECT_TOL: f64 = 1e-12;

/// Right end of the open interval on which a profile zero is searched.
pub const ZERO_SCAN_END: f64 = 1.0 - 1e-9;

/// Dense grid size for interval extrema (followed by golden-section refinement).
pub const EXTREMA_GRID: usize = 2001;

/// Golden-section refinement tolerance.
pub const GOLDEN_TOL: f64 = 1e-10;

/// Number of best grid samples refined by golden section.
pub const GOLDEN_CANDIDATES: usize = 3;

// ---------------------------------------------------------------------------
// Profile ODE integration
// ---------------------------------------------------------------------------

/// Relative tolerance of the Dormand–Prince integrator.
pub const ODE_RTOL: f64 = 1e-12;

/// Absolute tolerance of the Dormand–Prince integrator.
pub const ODE_ATOL: f64 = 1e-14;

/// Step-size floor; below it the integration reports a numerical failure.
pub const ODE_H_MIN: f64 = 1e-16;

/// Accepted-plus-rejected step budget per integration.
pub const ODE_MAX_STEPS: usize = 1_000_000;

/// Event localisation tolerance on the independent variable.
pub const EVENT_TOL: f64 = 1e-13;

/// Offset from the symmetric point t = 0 at which the Taylor seed is placed.
pub const T_SEED: f64 = 1e-4;

/// |f'| above which the integration switches to the inverse chart t(f).
pub const CHART_SWITCH_SLOPE: f64 = 1e3;

/// |f'| below which the inverse chart hands back to the t-chart.
pub const CHART_RETURN_SLOPE: f64 = 5e2;

/// Trajectories that reach t >= 1 - T_ESCAPE without an event are failures.
pub const T_ESCAPE: f64 = 1e-9;

/// Relative distance to the Lawson height treated as equality.
pub const TOL_EQ_LAWSON: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Shooting
// ---------------------------------------------------------------------------

/// Lower end of the height bracket for angle shooting.
pub const SHOOT_A_MIN: f64 = 1e-8;

/// Gap to the Lawson height at the upper end of the bracket.
pub const SHOOT_A_GAP: f64 = 1e-12;

/// Maximum bisection iterations.
pub const SHOOT_MAX_ITER: usize = 200;

/// Target accuracy of the angle in `solve_cone`.
pub const SHOOT_THETA_TOL: f64 = 1e-10;

/// Target accuracy of the terminal value in `solve_near_half_pi`.
pub const SHOOT_EPS_TOL: f64 = 1e-10;

/// Relative finite-difference step for the variation fields.
pub const FD_STEP_REL: f64 = 1e-5;

/// Points of the common resampling grid used for crossing detection.
pub const RESAMPLE_POINTS: usize = 4096;

// ---------------------------------------------------------------------------
// Barriers
// ---------------------------------------------------------------------------

/// Points of the tau scan (geometric in 1 - t).
pub const TAU_SCAN_POINTS: usize = 4001;

/// Closest approach of the tau scan to t0 and to 1, as a fraction of 1 - t0.
pub const TAU_SCAN_GAP: f64 = 1e-6;

/// Within this distance of tau the closed-form limit of Q is used.
pub const Q_LIMIT_BAND: f64 = 1e-6;

/// Slack for "minimum attained at the endpoint" in the subsolution check.
pub const SUBSOLUTION_ENDPOINT_TOL: f64 = 1e-9;

/// Absolute part of the table-match tolerance.
pub const TABLE_TOL_ABS: f64 = 0.02;

/// Relative part of the table-match tolerance.
pub const TABLE_TOL_REL: f64 = 0.02;

/// Gap below tau excluded from the max of Q-hat in the table convention.
pub const TABLE_Q_GAP: f64 = 1e-3;

/// Identity checks (W factorisation, cubic identity), relative to the scale of the terms.
pub const IDENTITY_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Free-boundary kernels
// ---------------------------------------------------------------------------

/// Number of radii in the divergence sample.
pub const DIV_RADII: usize = 40;

/// Number of angular samples per radius in the divergence sample.
pub const DIV_ANGLES: usize = 25;

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

/// Requested angles within this distance of pi/2 are treated as the right angle
/// (decimal renderings of pi/2 overshoot it in the last digits).
pub const RIGHT_ANGLE_SNAP: f64 = 1e-9;
