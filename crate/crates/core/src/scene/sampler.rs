use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Layer, NoiseGrain, WallConfig, GRAIN_EPS_RANGE, GRAIN_RADIUS_RANGE_M};
use crate::defaults::{GRID_WIDTH_M, MAX_LAYERS};
use crate::error::{Error, Result};

/// Relative weight of drawing k = 1..=6 layers. Deeper stacks are favored.
pub const LAYER_COUNT_WEIGHTS: [f64; MAX_LAYERS] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];

const QUANTUM_M: f64 = 0.005;
/// Per-layer floor, in quanta (2 cm).
const FLOOR_QUANTA: u32 = 4;
/// Total thickness range in quanta: [0.10, 0.46] m.
const TOTAL_QUANTA: (u32, u32) = (20, 92);
const EPS_RANGE: (f64, f64) = (1.0, 7.0);
const MAX_GRAINS: usize = 20;
const MAX_ATTEMPTS: usize = 100;

pub fn sample_layer_count<R: Rng + ?Sized>(rng: &mut R) -> usize {
    let total: f64 = LAYER_COUNT_WEIGHTS.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, w) in LAYER_COUNT_WEIGHTS.iter().enumerate() {
        if u < *w {
            return k + 1;
        }
        u -= w;
    }
    MAX_LAYERS
}

/// Draws a random wall.
///
/// The total thickness is uniform over 5 mm quanta in [0.10, 0.46] m. Each
/// layer gets a 2 cm floor and the remaining quanta are dealt out by a
/// multinomial draw with equal category probabilities, so no layer index is
/// systematically thicker than another.
pub fn sample_wall<R: Rng + ?Sized>(rng: &mut R) -> Result<WallConfig> {
    let n = sample_layer_count(rng);
    let needed = FLOOR_QUANTA * n as u32;

    let mut total = None;
    for _ in 0..MAX_ATTEMPTS {
        let t = rng.random_range(TOTAL_QUANTA.0..=TOTAL_QUANTA.1);
        if t >= needed {
            total = Some(t);
            break;
        }
    }
    let total = total.ok_or(Error::Constraint {
        attempts: MAX_ATTEMPTS,
    })?;

    let mut shares = vec![FLOOR_QUANTA; n];
    for _ in 0..(total - needed) {
        shares[rng.random_range(0..n)] += 1;
    }

    let layers: Vec<Layer> = shares
        .iter()
        .map(|&q| Layer::new(f64::from(q) * QUANTUM_M, rng.random_range(EPS_RANGE.0..=EPS_RANGE.1)))
        .collect();
    let depth = f64::from(total) * QUANTUM_M;

    let n_grains = rng.random_range(0..=MAX_GRAINS);
    let grains = (0..n_grains)
        .map(|_| {
            let r = rng.random_range(GRAIN_RADIUS_RANGE_M.0..=GRAIN_RADIUS_RANGE_M.1);
            NoiseGrain {
                x_m: rng.random_range(r..=GRID_WIDTH_M - r),
                y_m: rng.random_range(r..=depth - r),
                radius_m: r,
                eps_r: rng.random_range(GRAIN_EPS_RANGE.0..=GRAIN_EPS_RANGE.1),
            }
        })
        .collect();

    Ok(WallConfig {
        layers,
        grains,
        seed: 0,
    })
}

/// [`sample_wall`] driven by a ChaCha8 stream seeded from `seed`; the seed is
/// recorded on the returned config.
pub fn sample_wall_from_seed(seed: u64) -> Result<WallConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wall = sample_wall(&mut rng)?;
    wall.seed = seed;
    Ok(wall)
}
