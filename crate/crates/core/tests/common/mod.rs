#![allow(dead_code)]

pub mod jet_oracle;

use gisflow::jets::Particle;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Up to `max_particles` massless particles scattered around a few hard
/// seeds so that clustering has real merging decisions to make.
pub fn random_event(rng: &mut ChaCha8Rng, max_particles: usize) -> Vec<Particle> {
    let n = rng.random_range(1..=max_particles);
    let n_seeds = rng.random_range(1..=4);
    let seeds: Vec<(f64, f64, f64)> = (0..n_seeds)
        .map(|_| {
            (
                rng.random_range(50.0..800.0),
                rng.random_range(-2.5..2.5),
                rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
            )
        })
        .collect();
    (0..n)
        .map(|i| {
            let (pt, eta, phi) = seeds[i % n_seeds];
            let spread = rng.random_range(0.0..1.2);
            let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let frac: f64 = rng.random_range(0.001..0.5);
            Particle::massless(pt * frac, eta + spread * angle.cos(), phi + spread * angle.sin()).unwrap()
        })
        .collect()
}
