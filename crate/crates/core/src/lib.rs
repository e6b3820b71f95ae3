//! Thermodynamic formalism on finite subshifts of finite type.
//!
//! The crate builds the full counting pipeline for a negative locally
//! constant potential on a subshift: validation and word enumeration,
//! Birkhoff sums and distortion data, pressure and the Bowen root, the
//! Gibbs eigenmeasure / eigenfunction / equilibrium state, the lattice
//! versus D-generic dichotomy with the critical-line scan, exact counting
//! functions with a brute-force oracle, Poincaré series with residue
//! probes, and the asymptotic sandwich report that ties them together.

pub mod counting;
pub mod error;
pub mod poincare;
pub mod potential;
pub mod shift;
pub mod spectral;
pub mod thermo;

pub use counting::{
    count, count_oracle, count_periodic_with_initial_block, count_series, count_with_threads,
    length_extremes, verify_comparison_bounds, ComparisonReport, CountKind, CountQuery,
    CountSeries, Jump, Target, ORACLE_CAP,
};
pub use error::{Error, Result};
pub use poincare::{
    asymptotic_report, poincare_series, residue_estimate, AsymptoticReport, ResidueEstimate,
    SeriesMode, SeriesValue, DGENERIC_LIMIT_TOL, SANDWICH_TOL,
};
pub use potential::{
    admissible_words, block_recode, from_affine_ifs, AffineIfsSpec, AffineMap, BlockRecoding,
    HolderData, IfsSystem, LocallyConstantPotential,
};
pub use shift::{
    enumerate_admissible, enumerate_from_prefix, enumerate_words, Prune, Subshift, SymbolId,
    TailPoint, TargetSet, Word,
};
pub use spectral::{
    critical_line_scan, d_generic_test, leading_eigenvalue, tauberian_constants,
    CriticalLineScan, ScanPoint, SpectralVerdict, TauberianConstants, VerdictKind,
    CROSSING_TOL, GCD_DEFAULT_TOL,
};
pub use thermo::{
    find_delta, gibbs_slice, lyapunov, perron_data, pressure, pressure_finite_horizon,
    weighted_matrix, GibbsSlice, MeasureKind, PerronData, ThermoProfile, GIBBS_SCAN_DEPTH,
};
