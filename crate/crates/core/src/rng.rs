//! Seed derivation. Every random component draws from its own ChaCha stream
//! of the root seed, so changing how one component consumes randomness never
//! shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    /// Measurement noise added to synthetic truth tables.
    ModelNoise,
    /// Disturbances and sensor noise inside the simulated plant.
    PlantNoise,
    /// The GP sample that defines a synthetic instance.
    SyntheticDraw,
}

impl Component {
    fn stream(self) -> u64 {
        match self {
            Component::ModelNoise => 1,
            Component::PlantNoise => 2,
            Component::SyntheticDraw => 3,
        }
    }
}

/// Generator for `component` under `root`.
pub fn component_rng(root: u64, component: Component) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(component.stream());
    rng
}
