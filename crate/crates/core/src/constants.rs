//! Numerical tolerances, collected in one place so the tests and the library
//! agree on every threshold.

/// Discrete measure weights must sum to one within this tolerance.
pub const MASS_TOL: f64 = 1e-12;

/// Grid densities must integrate to one within this tolerance.
pub const GRID_MASS_TOL: f64 = 1e-10;

/// Marginal constraints of a transport plan.
pub const MARGINAL_TOL: f64 = 1e-9;

/// Allowed slack on dual feasibility phi_i + psi_j <= |x_i - y_j|^2.
pub const DUAL_FEAS_TOL: f64 = 1e-9;

/// Primal-dual gap of a transport certificate.
pub const DUALITY_GAP_TOL: f64 = 1e-7;

/// Agreement between the 1-D closed form and the LP solver.
pub const W2_1D_TOL: f64 = 1e-8;

/// Default entropy/Sobolev floor, as a multiple of the uniform density value.
pub const DEFAULT_FLOOR_FRACTION: f64 = 1e-6;

/// Containment slack when checking that support points lie inside the box.
pub const SUPPORT_TOL: f64 = 1e-12;
