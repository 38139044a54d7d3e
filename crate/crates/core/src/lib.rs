//! Numerical toolkit for a plane condenser `(E, Γ)`: Green equilibrium
//! measures on `Γ` in the field `-g(·,∞)`, the companion logarithmic
//! equilibrium on `E`, the constants `m_θ` and `m̂_θ`, estimates of the
//! minimax ratio `χ_n = inf_p sup_q ‖pq‖_E / ‖pq‖_Γ`, and the Kolmogorov
//! width rates they predict.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`, which every tolerance in the test
//! suites assumes.

pub mod balayage;
pub mod equilibrium;
pub mod error;
pub mod extremal;
pub mod geometry;
pub mod measure;
pub mod nwidth;
pub mod scalar;

pub use balayage::BalayageResult;
pub use equilibrium::{EquilibriumOptions, EquilibriumResult, SupportArc, SweepReport};
pub use error::{Error, Result};
pub use extremal::{ChiEstimate, ChiMethod, ZeroConfig};
pub use geometry::{Condenser, CurveSamples, CurveSpec, EDomain};
pub use measure::{DiscreteMeasure, FieldGrid, ScanGrid};
pub use nwidth::{WidthOptions, WidthReport};
pub use scalar::{Point, Real};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Condenser64 = Condenser<f64>;
pub type Condenser32 = Condenser<f32>;
pub type EDomain64 = EDomain<f64>;
pub type CurveSpec64 = CurveSpec<f64>;
pub type DiscreteMeasure64 = DiscreteMeasure<f64>;
pub type DiscreteMeasure32 = DiscreteMeasure<f32>;
pub type FieldGrid64 = FieldGrid<f64>;
pub type EquilibriumResult64 = EquilibriumResult<f64>;
pub type SweepReport64 = SweepReport<f64>;
pub type BalayageResult64 = BalayageResult<f64>;
pub type ChiEstimate64 = ChiEstimate<f64>;
pub type ZeroConfig64 = ZeroConfig<f64>;
pub type WidthReport64 = WidthReport<f64>;
