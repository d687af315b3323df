#![allow(dead_code)]

use std::path::PathBuf;

use npfs::config::{parse_config, Config};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.toml"))
}

pub fn bundled(name: &str) -> Config {
    parse_config(scenario_path(name)).unwrap()
}

pub const BUNDLED: [&str; 4] = ["smooth_1d", "zero", "constant_forcing", "smooth_2d"];

use npfs::grid::{Field, Grid};
use npfs::scheme::Trajectory;
use rand::Rng;

/// Trajectory with random node values on a random 1D or 2D grid.
pub fn random_trajectory(rng: &mut impl Rng, steps: usize) -> Trajectory {
    let grid = if rng.gen_bool(0.5) {
        Grid::new(&[rng.gen_range(0.5..2.0)], &[rng.gen_range(2..40)]).unwrap()
    } else {
        Grid::new(
            &[rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)],
            &[rng.gen_range(2..9), rng.gen_range(2..9)],
        )
        .unwrap()
    };
    let t_final = rng.gen_range(0.1..3.0);
    let mut field = |scale: f64| Field::from_fn(grid, |_| scale * rng.gen_range(-1.0..1.0));
    let theta = (0..=steps).map(|_| field(2.0)).collect();
    let phi = (0..=steps).map(|_| field(1.0)).collect();
    let v0 = field(1.0);
    let forcing = (0..steps).map(|_| field(1.0)).collect();
    Trajectory::from_nodes(t_final, theta, phi, v0, forcing).unwrap()
}
