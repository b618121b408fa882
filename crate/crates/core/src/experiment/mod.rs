//! Replicated run time studies over parameter grids and scaling-law fits.

mod fit;
mod plan;

pub use fit::{fit_points, fit_scaling, ScalingFit, ScalingModel, ScalingPoint};
pub use plan::{
    execute_plan, summarize_times, AggregateResult, ExperimentPlan, StartPolicy, TargetPolicy,
};
