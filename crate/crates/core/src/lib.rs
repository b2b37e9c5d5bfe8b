//! Numerical laboratory for the Paneitz–Branson operator on round spheres.
//!
//! Everything is generic over the scalar type through [`Real`]; the aliases at
//! the crate root fix the scalar to `f64`, which is what the command-line
//! harness and the acceptance suite use.

pub mod audit;
pub mod bubbles;
pub mod einstein;
pub mod error;
pub mod linalg;
pub mod optimizer;
pub mod scalar;
pub mod special;
pub mod spectral;
pub mod toolkit;
pub mod zonal;

pub use error::{LabError, Result};
pub use scalar::Real;

pub type EinsteinData = einstein::EinsteinData<f64>;
pub type OperatorCoefficients = einstein::OperatorCoefficients<f64>;
pub type SharpConstantReport = einstein::SharpConstantReport<f64>;
pub type QuadratureRule = zonal::QuadratureRule<f64>;
pub type ZonalBasis = zonal::ZonalBasis<f64>;
pub type ZonalField = zonal::ZonalField<f64>;
pub type NodalSamples = zonal::NodalSamples<f64>;
pub type ConformalDensity = spectral::ConformalDensity<f64>;
pub type GeneralizedSpectrum = spectral::GeneralizedSpectrum<f64>;
pub type PlanePencil = spectral::PlanePencil<f64>;
pub type PositivityResult = toolkit::PositivityResult<f64>;
pub type OrthogonalPair = toolkit::OrthogonalPair<f64>;
pub type NodalProfile = toolkit::NodalProfile<f64>;
pub type BubbleSpec = bubbles::BubbleSpec<f64>;
pub type BubbleField = bubbles::BubbleField<f64>;
pub type SweepReport = bubbles::SweepReport<f64>;
pub type Lemma3Report = bubbles::Lemma3Report<f64>;
pub type OptimizerConfig = optimizer::OptimizerConfig<f64>;
pub type OptimizerReport = optimizer::OptimizerReport<f64>;
pub type InvariantProblem = optimizer::InvariantProblem<f64>;
pub type RunTrace = optimizer::RunTrace<f64>;
pub type EuclideanRadialGrid = audit::EuclideanRadialGrid<f64>;
pub type InequalityReport = audit::InequalityReport<f64>;
pub type Lemma1Audit = audit::Lemma1Audit<f64>;
pub type RefinedAudit = audit::RefinedAudit<f64>;
pub type MuRelationAudit = audit::MuRelationAudit<f64>;
