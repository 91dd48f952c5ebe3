//! Exact inference by enumerating the smaller layer.
//!
//! The states of the enumerated layer are visited in fixed chunks; inside a
//! chunk a Gray-code walk updates the opposite layer's activation with one
//! row per step. Chunks are independent and always combined in index order,
//! so results are bit-identical for any number of worker threads.

use crate::error::{invalid, Result, RbmError};
use crate::math::{logistic_with_softplus_sum, LogSumExp};
use crate::rbm::{dot_bits, BinaryBatch, GradientTriple, Layer, RbmParams};

/// Largest layer size enumerated unless configured otherwise.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 25;

const CHUNK_BITS: usize = 12;

/// Enumeration-based oracles with a configurable capacity limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactOracle {
    pub limit: usize,
}

impl Default for ExactOracle {
    fn default() -> Self {
        Self {
            limit: DEFAULT_ENUMERATION_LIMIT,
        }
    }
}

/// The layer being enumerated, laid out so a flip of bit `k` adds `row(k)`
/// to the opposite activation.
struct Walk {
    len: usize,
    other_len: usize,
    rows: Vec<f64>,
    state_bias: Vec<f64>,
    other_bias: Vec<f64>,
}

impl Walk {
    fn new(params: &RbmParams, layer: Layer) -> Self {
        let m = params.num_visible();
        let n = params.num_hidden();
        match layer {
            Layer::Visible => Walk {
                len: m,
                other_len: n,
                rows: params.weights().to_vec(),
                state_bias: params.visible_bias().to_vec(),
                other_bias: params.hidden_bias().to_vec(),
            },
            Layer::Hidden => {
                let mut rows = vec![0.0; m * n];
                for j in 0..m {
                    for i in 0..n {
                        rows[i * m + j] = params.weight(j, i);
                    }
                }
                Walk {
                    len: n,
                    other_len: m,
                    rows,
                    state_bias: params.hidden_bias().to_vec(),
                    other_bias: params.visible_bias().to_vec(),
                }
            }
        }
    }

    #[inline]
    fn row(&self, k: usize) -> &[f64] {
        &self.rows[k * self.other_len..(k + 1) * self.other_len]
    }

    fn chunk_layout(&self) -> (usize, usize) {
        let low = self.len.min(CHUNK_BITS);
        (low, 1usize << (self.len - low))
    }

    /// Visits every state of chunk `chunk`, handing the visitor the state
    /// bits, `log p̃(state)` and the conditional means of the other layer.
    fn visit_chunk<F: FnMut(&[u8], f64, &[f64])>(&self, chunk: usize, low: usize, mut visit: F) {
        let mut bits = vec![0u8; self.len];
        for (k, b) in bits.iter_mut().enumerate().skip(low) {
            *b = ((chunk >> (k - low)) & 1) as u8;
        }
        let mut act = self.other_bias.clone();
        for k in low..self.len {
            if bits[k] != 0 {
                for (a, &w) in act.iter_mut().zip(self.row(k)) {
                    *a += w;
                }
            }
        }
        let mut linear = dot_bits(&bits, &self.state_bias);
        let mut probs = vec![0.0; self.other_len];
        for step in 0..(1usize << low) {
            if step > 0 {
                let k = step.trailing_zeros() as usize;
                if bits[k] == 0 {
                    bits[k] = 1;
                    linear += self.state_bias[k];
                    for (a, &w) in act.iter_mut().zip(self.row(k)) {
                        *a += w;
                    }
                } else {
                    bits[k] = 0;
                    linear -= self.state_bias[k];
                    for (a, &w) in act.iter_mut().zip(self.row(k)) {
                        *a -= w;
                    }
                }
            }
            let lp = linear + logistic_with_softplus_sum(&act, &mut probs);
            visit(&bits, lp, &probs);
        }
    }
}

#[cfg(feature = "parallel")]
fn map_chunks<A, F>(count: usize, f: F) -> Vec<A>
where
    A: Send,
    F: Fn(usize) -> A + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_chunks<A, F>(count: usize, f: F) -> Vec<A>
where
    F: Fn(usize) -> A,
{
    (0..count).map(f).collect()
}

impl ExactOracle {
    pub fn new(limit: usize) -> Self {
        Self { limit }
    }

    fn smaller_layer(&self, params: &RbmParams) -> Result<Layer> {
        let m = params.num_visible();
        let n = params.num_hidden();
        let units = m.min(n);
        if units > self.limit || units >= 63 {
            return Err(RbmError::Capacity {
                units,
                limit: self.limit.min(62),
            });
        }
        Ok(if m <= n { Layer::Visible } else { Layer::Hidden })
    }

    /// Whether `params` is small enough to enumerate.
    pub fn can_enumerate(&self, params: &RbmParams) -> bool {
        self.smaller_layer(params).is_ok()
    }

    /// `log Z` by a streaming log-sum-exp over the smaller layer.
    pub fn log_partition(&self, params: &RbmParams) -> Result<f64> {
        let layer = self.smaller_layer(params)?;
        Ok(log_partition_over(params, layer))
    }

    /// Mean per-sample log-likelihood `(1/ℓ) Σ log p(v_i)`.
    pub fn log_likelihood(&self, params: &RbmParams, data: &BinaryBatch) -> Result<f64> {
        let log_z = self.log_partition(params)?;
        mean_log_unnormalized(params, data).map(|mean| mean - log_z)
    }

    /// The model expectation of the sufficient statistics:
    /// `E[v_j h_i]`, `E[v_j]`, `E[h_i]`.
    pub fn model_expectation(&self, params: &RbmParams) -> Result<GradientTriple> {
        let layer = self.smaller_layer(params)?;
        Ok(model_expectation_over(params, layer))
    }

    /// Exact log-likelihood gradient, positive phase minus model expectation.
    pub fn gradient(&self, params: &RbmParams, data: &BinaryBatch) -> Result<GradientTriple> {
        let model = self.model_expectation(params)?;
        let positive = data_expectation(params, data)?;
        positive.sub(&model)
    }

    /// Exact marginal distribution of the visible layer (index = bit code,
    /// least significant bit = unit 0). Requires `m` within the limit.
    pub fn visible_distribution(&self, params: &RbmParams) -> Result<Vec<f64>> {
        let m = params.num_visible();
        if m > self.limit || m >= 63 {
            return Err(RbmError::Capacity { units: m, limit: self.limit });
        }
        let log_z = self.log_partition(params)?;
        let walk = Walk::new(params, Layer::Visible);
        let (low, chunks) = walk.chunk_layout();
        let parts = map_chunks(chunks, |c| {
            let mut out = Vec::with_capacity(1 << low);
            walk.visit_chunk(c, low, |bits, lp, _| out.push((bits_to_code(bits), (lp - log_z).exp())));
            out
        });
        let mut dist = vec![0.0; 1 << m];
        for (code, p) in parts.into_iter().flatten() {
            dist[code] = p;
        }
        Ok(dist)
    }
}

pub(crate) fn bits_to_code(bits: &[u8]) -> usize {
    bits.iter()
        .enumerate()
        .fold(0usize, |acc, (k, &b)| acc | ((b as usize) << k))
}

fn log_partition_over(params: &RbmParams, layer: Layer) -> f64 {
    let walk = Walk::new(params, layer);
    let (low, chunks) = walk.chunk_layout();
    let parts = map_chunks(chunks, |c| {
        let mut acc = LogSumExp::new();
        walk.visit_chunk(c, low, |_, lp, _| acc.push(lp));
        acc
    });
    let mut total = LogSumExp::new();
    for p in &parts {
        total.merge(p);
    }
    total.value()
}

fn model_expectation_over(params: &RbmParams, layer: Layer) -> GradientTriple {
    let m = params.num_visible();
    let n = params.num_hidden();
    let log_z = log_partition_over(params, layer);
    let walk = Walk::new(params, layer);
    let (low, chunks) = walk.chunk_layout();
    let parts = map_chunks(chunks, |c| {
        let mut g = GradientTriple::zeros(m, n);
        walk.visit_chunk(c, low, |bits, lp, probs| {
            let w = (lp - log_z).exp();
            match layer {
                Layer::Visible => {
                    for (j, &bit) in bits.iter().enumerate() {
                        if bit != 0 {
                            g.visible[j] += w;
                            for (gw, &p) in g.weights[j * n..(j + 1) * n].iter_mut().zip(probs) {
                                *gw += w * p;
                            }
                        }
                    }
                    for (gh, &p) in g.hidden.iter_mut().zip(probs) {
                        *gh += w * p;
                    }
                }
                Layer::Hidden => {
                    for (i, &bit) in bits.iter().enumerate() {
                        if bit != 0 {
                            g.hidden[i] += w;
                            for (j, &p) in probs.iter().enumerate() {
                                g.weights[j * n + i] += w * p;
                            }
                        }
                    }
                    for (gv, &p) in g.visible.iter_mut().zip(probs) {
                        *gv += w * p;
                    }
                }
            }
        });
        g
    });
    let mut total = GradientTriple::zeros(m, n);
    for p in &parts {
        total.add_scaled(p, 1.0).expect("chunk shapes agree");
    }
    total
}

fn mean_log_unnormalized(params: &RbmParams, data: &BinaryBatch) -> Result<f64> {
    let mut sum = 0.0;
    for v in data.iter() {
        sum += params.log_unnormalized_marginal_visible(v)?;
    }
    Ok(sum / data.len() as f64)
}

/// Batch means of `(p(h=1|v) ⊗ v, v, p(h=1|v))`.
pub fn data_expectation(params: &RbmParams, data: &[crate::rbm::BinaryVector]) -> Result<GradientTriple> {
    if data.is_empty() {
        return Err(invalid("positive phase needs a nonempty batch"));
    }
    let m = params.num_visible();
    let n = params.num_hidden();
    let mut g = GradientTriple::zeros(m, n);
    let mut act = vec![0.0; n];
    let mut probs = vec![0.0; n];
    for v in data {
        crate::error::check_len("visible state", m, v.len())?;
        params.hidden_activation_into(v.as_slice(), 1.0, 1.0, &mut act);
        crate::math::logistic_into(&act, &mut probs);
        accumulate_visible_statistic(&mut g, v.as_slice(), &probs, 1.0);
    }
    g.scale(1.0 / data.len() as f64);
    Ok(g)
}

/// `g += coef · (probs ⊗ v, v, probs)`.
#[inline]
pub(crate) fn accumulate_visible_statistic(g: &mut GradientTriple, v: &[u8], hidden_probs: &[f64], coef: f64) {
    let n = hidden_probs.len();
    for (j, &bit) in v.iter().enumerate() {
        if bit != 0 {
            g.visible[j] += coef;
            for (gw, &p) in g.weights[j * n..(j + 1) * n].iter_mut().zip(hidden_probs) {
                *gw += coef * p;
            }
        }
    }
    for (gh, &p) in g.hidden.iter_mut().zip(hidden_probs) {
        *gh += coef * p;
    }
}

/// `g += coef · (visible_probs ⊗ h, visible_probs, h)`.
#[inline]
pub(crate) fn accumulate_hidden_statistic(g: &mut GradientTriple, h: &[u8], visible_probs: &[f64], coef: f64) {
    let n = h.len();
    for (j, &p) in visible_probs.iter().enumerate() {
        g.visible[j] += coef * p;
        let cp = coef * p;
        for (gw, &bit) in g.weights[j * n..(j + 1) * n].iter_mut().zip(h) {
            if bit != 0 {
                *gw += cp;
            }
        }
    }
    for (gh, &bit) in g.hidden.iter_mut().zip(h) {
        if bit != 0 {
            *gh += coef;
        }
    }
}

/// `log Z` with the default enumeration limit.
pub fn log_partition_exact(params: &RbmParams) -> Result<f64> {
    ExactOracle::default().log_partition(params)
}

/// Mean per-sample log-likelihood with the default enumeration limit.
pub fn exact_log_likelihood(params: &RbmParams, data: &BinaryBatch) -> Result<f64> {
    ExactOracle::default().log_likelihood(params, data)
}

/// Exact gradient with the default enumeration limit.
pub fn exact_gradient(params: &RbmParams, data: &BinaryBatch) -> Result<GradientTriple> {
    ExactOracle::default().gradient(params, data)
}
