//! Container-yard digital twin.
//!
//! The crate mirrors a stacking yard from TOS/GOS-style event logs, replays it
//! slot by slot, runs counterfactual simulations under pluggable stacking
//! strategies, reports productivity KPIs and evaluates the expected number of
//! rehandles per pick for a bay, both exactly and by Monte Carlo.
//!
//! The rehandle analytics are generic over [`Scalar`]; the aliases below pin
//! the two instantiations used in practice (exact rationals and `f64`).

pub mod analytics;
pub mod engine;
pub mod events;
pub mod kpi;
pub mod scalar;
pub mod strategy;
pub mod time;
pub mod workload;
pub mod yard;

pub use analytics::{
    AnalyticsError, BayConfiguration, BayDims, ConfigurationDistribution, LevellingPlacement,
    LowestOtherRelocation, MonteCarloEstimate, PickTransition, PlacementModel, RelocationPolicy,
    UniformPlacement,
};
pub use engine::{EngineError, SimulatedLog, SimulationJob, StepKind};
pub use events::{EventKind, EventLog, TimeWindow, YardEvent};
pub use kpi::{KpiComparison, KpiReport};
pub use scalar::Scalar;
pub use strategy::{StackingStrategy, StrategySpec};
pub use yard::{ContainerRecord, SlotAddress, StackId, YardError, YardLayout, YardState};

/// Exact rational used by the analytic rehandle kernel.
pub type Rational = num_rational::BigRational;

/// Configuration distribution with exact probabilities.
pub type ExactDistribution = ConfigurationDistribution<Rational>;
/// Configuration distribution with `f64` probabilities.
pub type FloatDistribution = ConfigurationDistribution<f64>;
/// Pick transition with an exact probability.
pub type ExactTransition = PickTransition<Rational>;
/// Pick transition with an `f64` probability.
pub type FloatTransition = PickTransition<f64>;
