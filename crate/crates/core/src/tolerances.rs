//! Rounding floors added to truncation budgets when a computed quantity is
//! compared with its closed form.

/// Floating-point floor for kernel inner products and single matrix-vector
/// products on bases of a few hundred elements.
pub const KERNEL_ROUNDING: f64 = 1e-13;

/// Floor for products of Weyl translation blocks of a few thousand entries.
pub const WEYL_ROUNDING: f64 = 1e-9;

/// Floor for assembled sums of many rank-one terms (frame operators and
/// their compositions).
pub const ASSEMBLY_ROUNDING: f64 = 1e-11;
