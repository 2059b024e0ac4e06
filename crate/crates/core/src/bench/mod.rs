//! Benchmark objectives: GP-sampled synthetic functions and a simulated
//! position-tracking plant.

pub mod plant;
pub mod synthetic;

pub use plant::{
    simulate_circle, simulate_step, EvaluationResult, PerformanceConvention, PlantSpec, Reference, INITIAL_GAINS,
};
pub use synthetic::{sample_synthetic, SyntheticInstance, SyntheticObjective, SyntheticSpec, MAX_SYNTHETIC_POINTS};
