use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::rbm::{BinaryVector, RbmParams};
use crate::rng::RngStream;

/// Weights and biases drawn i.i.d. from `N(0, scale²)`.
pub fn random_params(m: usize, n: usize, scale: f64, seed: u64) -> RbmParams {
    let mut rng = RngStream::new(seed).rng(0, 0);
    let normal = Normal::new(0.0, scale).unwrap();
    let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| normal.sample(&mut rng)).collect() };
    let w = draw(m * n);
    let b = draw(m);
    let c = draw(n);
    RbmParams::new(w, b, c).unwrap()
}

pub fn all_states(len: usize) -> impl Iterator<Item = BinaryVector> {
    (0..1u64 << len).map(move |code| BinaryVector::from_index(code, len))
}

pub fn random_bits(len: usize, seed: u64) -> BinaryVector {
    let mut rng = RngStream::new(seed).rng(1, 0);
    BinaryVector::from_raw((0..len).map(|_| rng.random_range(0..2u8)).collect())
}
