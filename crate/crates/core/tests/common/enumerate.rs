//! Brute-force references built from the energy function alone.

#![allow(dead_code)]

use popcd::{BinaryVector, RbmParams};

pub fn states(len: usize) -> Vec<BinaryVector> {
    (0..1u64 << len).map(|c| BinaryVector::from_index(c, len)).collect()
}

/// `-E(v, h)` written out term by term.
pub fn neg_energy(p: &RbmParams, v: &BinaryVector, h: &BinaryVector) -> f64 {
    let (v, h) = (v.as_slice(), h.as_slice());
    let mut s = 0.0;
    for j in 0..p.num_visible() {
        for i in 0..p.num_hidden() {
            s += v[j] as f64 * p.weight(j, i) * h[i] as f64;
        }
        s += v[j] as f64 * p.visible_bias()[j];
    }
    for i in 0..p.num_hidden() {
        s += h[i] as f64 * p.hidden_bias()[i];
    }
    s
}

pub fn lse(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `log Z` over every joint state.
pub fn log_z_joint(p: &RbmParams) -> f64 {
    let hs = states(p.num_hidden());
    lse(states(p.num_visible())
        .iter()
        .flat_map(|v| hs.iter().map(move |h| neg_energy(p, v, h))))
}

pub fn log_marginal_v(p: &RbmParams, v: &BinaryVector) -> f64 {
    lse(states(p.num_hidden()).iter().map(|h| neg_energy(p, v, h)))
}

pub fn log_marginal_h(p: &RbmParams, h: &BinaryVector) -> f64 {
    lse(states(p.num_visible()).iter().map(|v| neg_energy(p, v, h)))
}

/// `log p(v | h)`.
pub fn log_cond_v(p: &RbmParams, v: &BinaryVector, h: &BinaryVector) -> f64 {
    neg_energy(p, v, h) - log_marginal_h(p, h)
}

/// `log p(h | v)`.
pub fn log_cond_h(p: &RbmParams, h: &BinaryVector, v: &BinaryVector) -> f64 {
    neg_energy(p, v, h) - log_marginal_v(p, v)
}
