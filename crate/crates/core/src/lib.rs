//! Poincaré functions of real polynomials: `f(λz) = p(f(z))` with `f(0) = 0`,
//! `f'(0) = 1`, where `λ = p'(0) > 1`.
//!
//! Modules follow the pipeline: [`poly_core`] normalizes and classifies the
//! polynomial, [`poincare_series`] builds and evaluates `f`, [`boettcher_green`]
//! supplies the coordinates at ∞ and at attracting points, [`harmonic_measure`]
//! samples the equilibrium measure, [`asymptotics`] extracts the periodic factor
//! `F`, and [`zeros_zeta`] handles zeros, counting and zeta functions.

// `!(x < bound)` is used on purpose so that NaN counts as out of range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

/// Crate version, recorded in run reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod asymptotics;
pub mod boettcher_green;
pub mod error;
pub mod exact;
pub mod harmonic_measure;
pub mod poincare_series;
pub mod poly_core;
pub mod quad;
pub mod roots;
pub mod series;
pub mod zeros_zeta;

pub use asymptotics::{
    AttractingAsymptotics, ConstancyReport, FourierEntry, FourierSource, FourierTable, PeriodicProfile,
    Verdict,
};
pub use boettcher_green::{FiniteBoettcher, GreenValue, KoenigsSeries, LaurentSeries};
pub use error::{CoreError, Result};
pub use harmonic_measure::{MeasureSample, MellinReport, SampleMode};
pub use poincare_series::{EvalResult, PowerSeries};
pub use poly_core::{
    Exceptional, FixedPointRecord, JuliaGeometry, JuliaKind, MultiplierAudit, NormalizedSystem,
    RealPolynomial,
};
pub use zeros_zeta::{BridgeReport, HadamardData, ZeroList, ZetaReport};
