//! Seeded sampling of user drops.
//!
//! Frame i draws from stream i of a counter-based generator seeded with
//! the configured seed, so the sampled window is identical no matter how
//! many workers later process the frames, and regeneration is bit-exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::SystemConfig;
use crate::em::UserFrame;
use crate::error::Result;

/// A window of user drops: m frames of K positions each.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub frames: Vec<UserFrame>,
    pub seed: u64,
    /// Service-region extent (D_x, D_y).
    pub region: (f64, f64),
}

impl Scenario {
    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }
}

/// Sample `samples_per_window` frames of `num_users` positions, i.i.d.
/// uniform over the ground rectangle [0, D_x] x [-D_y/2, D_y/2].
pub fn generate_scenario(config: &SystemConfig) -> Result<Scenario> {
    config.validate()?;
    let dx = config.waveguide_length;
    let half_dy = config.region_depth / 2.0;
    let mut frames = Vec::with_capacity(config.samples_per_window);
    for i in 0..config.samples_per_window {
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        rng.set_stream(i as u64);
        let positions = (0..config.num_users)
            .map(|_| {
                let x = rng.random_range(0.0..=dx);
                let y = rng.random_range(-half_dy..=half_dy);
                [x, y, 0.0]
            })
            .collect();
        frames.push(UserFrame::new(positions, config)?);
    }
    Ok(Scenario {
        frames,
        seed: config.rng_seed,
        region: (dx, config.region_depth),
    })
}
