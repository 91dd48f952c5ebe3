#![allow(dead_code)]

mod enumerate;

pub use enumerate::*;

use popcd::{BinaryVector, RbmParams};
use proptest::prelude::*;

pub fn params_strategy(max_units: usize, scale: f64) -> impl Strategy<Value = RbmParams> {
    (1..=max_units, 1..=max_units).prop_flat_map(move |(m, n)| {
        (
            prop::collection::vec(-scale..scale, m * n),
            prop::collection::vec(-scale..scale, m),
            prop::collection::vec(-scale..scale, n),
        )
            .prop_map(|(w, b, c)| RbmParams::new(w, b, c).unwrap())
    })
}

pub fn bits_strategy(len: usize) -> impl Strategy<Value = BinaryVector> {
    prop::collection::vec(0u8..2, len).prop_map(|b| BinaryVector::new(b).unwrap())
}

/// Params together with a small batch of visible vectors of matching size.
pub fn params_and_data(max_units: usize, scale: f64, max_batch: usize) -> impl Strategy<Value = (RbmParams, Vec<BinaryVector>)> {
    params_strategy(max_units, scale).prop_flat_map(move |p| {
        let m = p.num_visible();
        (Just(p), prop::collection::vec(bits_strategy(m), 1..=max_batch))
    })
}
