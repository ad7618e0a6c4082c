//! Data ingestion, design expansion and the incremental least-squares engine.
//!
//! Every model includes an intercept; candidate columns are centered once at
//! load time, so the intercept never appears as a candidate.

mod dataset;
mod direct;
mod fit;
mod model_index;

pub use dataset::{Dataset, GRAM_PRECOMPUTE_LIMIT};
pub use direct::sse_direct;
pub use fit::{FitState, Update, COLLINEARITY_FLOOR};
pub use model_index::ModelIndex;

/// State for the intercept-only model.
pub fn fit_empty(data: &Dataset) -> FitState<'_> {
    FitState::empty(data)
}
