//! Synthetic weight distributions.

use rand::seq::SliceRandom;

use crate::model::WeightSet;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Uniform,
    /// `w_i = i^-alpha` for `i = 1..n`, in shuffled order.
    PowerLaw { alpha: f64 },
}

/// `n` independent uniform weights from `(0, 1)`.
pub fn gen_uniform(n: usize, rng: &mut RngStream) -> WeightSet {
    assert!(n >= 1);
    let weights = (0..n)
        .map(|_| loop {
            let u = rng.next_f64();
            if u > 0.0 {
                break u;
            }
        })
        .collect();
    WeightSet::new(weights).expect("uniform weights are positive")
}

pub fn gen_power_law(n: usize, alpha: f64, rng: &mut RngStream) -> WeightSet {
    assert!(n >= 1 && alpha >= 0.0);
    let mut weights: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-alpha)).collect();
    weights.shuffle(rng);
    WeightSet::new(weights).expect("power-law weights are positive")
}

pub fn generate(dist: Distribution, n: usize, rng: &mut RngStream) -> WeightSet {
    match dist {
        Distribution::Uniform => gen_uniform(n, rng),
        Distribution::PowerLaw { alpha } => gen_power_law(n, alpha, rng),
    }
}
