//! The renormalisation operator and dynamical partitions.

mod chain;
pub mod crossval;
pub mod partition;
pub mod step;
pub mod trace;

pub use crossval::{cross_validate, interpolation_bound, CrossValidation, CrossValidationLevel, InterpolationBound};
pub use partition::{
    dynamical_partition, dynamical_partition_with_budget, geometric_counts, heights, orbit_eval, partition_delta,
    walk_towers, Atom,
    DynamicalPartition, OrbitOracle, PartitionSummary,
};
pub use step::{
    exact_level_data, grid_of, rauzy_step_giet, renormalize, renormalize_n, renormalize_with_scale, CONNECTION_TOL,
};
pub use trace::{LevelNorms, RenormTrace, TraceLevel, TraceStatus};
