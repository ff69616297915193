//! Expected rehandles per pick for a single bay.
//!
//! A bay of `R` rows and `T` tiers holding `k` identical containers is
//! described by its canonical height vector. The fill distribution `s` comes
//! from a forward recursion over arrivals, the pick kernel `p`/`v` from a
//! uniformly chosen departure, and
//!
//! ```text
//! v_k = Σ_i s_k(i) Σ_j p_k(i, j) · v_k(i, j)
//! ```
//!
//! is assembled in any [`Scalar`](crate::Scalar), exactly when that scalar is
//! a rational. [`monte_carlo_oracle`] checks the result by simulating physical
//! (distinguishable) rows.

mod configurations;
mod kernel;
mod models;
mod monte_carlo;
mod report;

pub use configurations::{enumerate_configurations, BayConfiguration, BayDims};
pub use kernel::{
    expected_rehandles, expected_rehandles_to_empty, fill_distribution, pick_transitions,
    ConfigurationDistribution, PickTransition,
};
pub use models::{LevellingPlacement, LowestOtherRelocation, PlacementModel, RelocationPolicy, UniformPlacement};
pub use monte_carlo::{monte_carlo_oracle, monte_carlo_oracle_relabelled, MonteCarloEstimate, ORACLE_SHARDS};
pub use report::{rehandle_table, write_csv, ReportRow};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalyticsError {
    #[error("{k} containers exceed bay capacity {capacity}")]
    CapacityExceeded { k: u32, capacity: u32 },
    #[error("bay needs at least one row and one tier")]
    EmptyDimensions,
    #[error("a pick needs at least one container")]
    EmptyBay,
    #[error("blocker in {config} has nowhere to go")]
    RelocationImpossible { config: String },
    #[error("placement model gives every open stack zero weight in {config}")]
    NoPlacement { config: String },
    #[error("at least one trial is required")]
    NoTrials,
}

impl AnalyticsError {
    pub fn code(&self) -> &'static str {
        match self {
            AnalyticsError::CapacityExceeded { .. } => "CapacityExceeded",
            AnalyticsError::EmptyDimensions => "EmptyDimensions",
            AnalyticsError::EmptyBay => "EmptyBay",
            AnalyticsError::RelocationImpossible { .. } => "RelocationImpossible",
            AnalyticsError::NoPlacement { .. } => "NoPlacement",
            AnalyticsError::NoTrials => "NoTrials",
        }
    }
}
