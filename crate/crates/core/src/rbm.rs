//! Binary RBM parameterization, energies and factorized conditionals.
//!
//! The weight matrix is stored visible-major: `weights[j * n + i]` couples
//! visible unit `j` with hidden unit `i`, matching the energy
//! `E(v, h) = -vᵀWh - vᵀb - cᵀh`.

use std::ops::Deref;

use crate::error::{check_len, invalid, Result, RbmError};
use crate::math::{log_logistic, logistic, softplus};

/// A state of one layer: every entry is 0 or 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryVector(Vec<u8>);

impl BinaryVector {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(invalid(format!(
                "entry {pos} of a binary vector is {}",
                bits[pos]
            )));
        }
        Ok(Self(bits))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn ones(len: usize) -> Self {
        Self(vec![1; len])
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self(bits.iter().map(|&b| b as u8).collect())
    }

    /// The low `len` bits of `code`, least significant bit first.
    pub fn from_index(code: u64, len: usize) -> Self {
        Self((0..len).map(|j| ((code >> j) & 1) as u8).collect())
    }

    pub(crate) fn from_raw(bits: Vec<u8>) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        Self(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [u8] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }

    pub fn ones_count(&self) -> usize {
        self.0.iter().map(|&b| b as usize).sum()
    }
}

/// A nonempty set of equal-length binary vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryBatch {
    dim: usize,
    samples: Vec<BinaryVector>,
}

impl BinaryBatch {
    pub fn new(samples: Vec<BinaryVector>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| invalid("a batch needs at least one sample"))?;
        let dim = first.len();
        for s in &samples {
            check_len("batch sample", dim, s.len())?;
        }
        Ok(Self { dim, samples })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> &[BinaryVector] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<BinaryVector> {
        self.samples
    }
}

impl Deref for BinaryBatch {
    type Target = [BinaryVector];

    fn deref(&self) -> &[BinaryVector] {
        &self.samples
    }
}

/// Which layer an operation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layer {
    Visible,
    Hidden,
}

/// The parameter point `θ = (W, b, c)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RbmParams {
    num_visible: usize,
    num_hidden: usize,
    weights: Vec<f64>,
    visible_bias: Vec<f64>,
    hidden_bias: Vec<f64>,
}

impl RbmParams {
    /// `weights` is row-major `m × n` (one row per visible unit).
    pub fn new(weights: Vec<f64>, visible_bias: Vec<f64>, hidden_bias: Vec<f64>) -> Result<Self> {
        let m = visible_bias.len();
        let n = hidden_bias.len();
        if m == 0 || n == 0 {
            return Err(invalid("an RBM needs at least one visible and one hidden unit"));
        }
        check_len("weight matrix", m * n, weights.len())?;
        let p = Self {
            num_visible: m,
            num_hidden: n,
            weights,
            visible_bias,
            hidden_bias,
        };
        if !p.is_finite() {
            return Err(invalid("RBM parameters must be finite"));
        }
        Ok(p)
    }

    pub fn zeros(num_visible: usize, num_hidden: usize) -> Result<Self> {
        Self::new(
            vec![0.0; num_visible * num_hidden],
            vec![0.0; num_visible],
            vec![0.0; num_hidden],
        )
    }

    pub fn from_rows(rows: &[Vec<f64>], visible_bias: Vec<f64>, hidden_bias: Vec<f64>) -> Result<Self> {
        check_len("weight rows", visible_bias.len(), rows.len())?;
        let mut w = Vec::with_capacity(rows.len() * hidden_bias.len());
        for r in rows {
            check_len("weight row", hidden_bias.len(), r.len())?;
            w.extend_from_slice(r);
        }
        Self::new(w, visible_bias, hidden_bias)
    }

    pub fn num_visible(&self) -> usize {
        self.num_visible
    }

    pub fn num_hidden(&self) -> usize {
        self.num_hidden
    }

    /// `m·n + m + n`.
    pub fn num_params(&self) -> usize {
        self.num_visible * self.num_hidden + self.num_visible + self.num_hidden
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn visible_bias(&self) -> &[f64] {
        &self.visible_bias
    }

    pub fn hidden_bias(&self) -> &[f64] {
        &self.hidden_bias
    }

    #[inline]
    pub fn weight(&self, visible: usize, hidden: usize) -> f64 {
        self.weights[visible * self.num_hidden + hidden]
    }

    /// The couplings of visible unit `j` to every hidden unit.
    #[inline]
    pub fn weight_row(&self, visible: usize) -> &[f64] {
        let n = self.num_hidden;
        &self.weights[visible * n..(visible + 1) * n]
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.visible_bias)
            .chain(&self.hidden_bias)
            .all(|x| x.is_finite())
    }

    /// Parameters in flat order: `W` row-major, then `b`, then `c`.
    pub fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights
            .iter()
            .chain(&self.visible_bias)
            .chain(&self.hidden_bias)
            .copied()
    }

    pub fn flat_get(&self, k: usize) -> f64 {
        let mn = self.weights.len();
        if k < mn {
            self.weights[k]
        } else if k < mn + self.num_visible {
            self.visible_bias[k - mn]
        } else {
            self.hidden_bias[k - mn - self.num_visible]
        }
    }

    pub fn flat_set(&mut self, k: usize, value: f64) {
        let mn = self.weights.len();
        if k < mn {
            self.weights[k] = value;
        } else if k < mn + self.num_visible {
            self.visible_bias[k - mn] = value;
        } else {
            self.hidden_bias[k - mn - self.num_visible] = value;
        }
    }

    /// `θ + α·grad`, in place.
    pub(crate) fn add_scaled(&mut self, grad: &GradientTriple, alpha: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grad.weights) {
            *w += alpha * g;
        }
        for (b, g) in self.visible_bias.iter_mut().zip(&grad.visible) {
            *b += alpha * g;
        }
        for (c, g) in self.hidden_bias.iter_mut().zip(&grad.hidden) {
            *c += alpha * g;
        }
    }

    fn check_visible(&self, v: &BinaryVector) -> Result<()> {
        check_len("visible state", self.num_visible, v.len())
    }

    fn check_hidden(&self, h: &BinaryVector) -> Result<()> {
        check_len("hidden state", self.num_hidden, h.len())
    }

    // ---- raw activations on bit slices; callers have checked lengths ----

    /// `out = bias_scale·c + weight_scale·Wᵀv`.
    #[inline]
    pub(crate) fn hidden_activation_into(&self, v: &[u8], weight_scale: f64, bias_scale: f64, out: &mut [f64]) {
        out.fill(0.0);
        for (j, &bit) in v.iter().enumerate() {
            if bit != 0 {
                for (o, &w) in out.iter_mut().zip(self.weight_row(j)) {
                    *o += w;
                }
            }
        }
        for (o, &c) in out.iter_mut().zip(&self.hidden_bias) {
            *o = bias_scale * c + weight_scale * *o;
        }
    }

    /// `out = bias_scale·b + weight_scale·Wh`.
    #[inline]
    pub(crate) fn visible_activation_into(&self, h: &[u8], weight_scale: f64, bias_scale: f64, out: &mut [f64]) {
        let n = self.num_hidden;
        for (j, o) in out.iter_mut().enumerate() {
            let row = &self.weights[j * n..(j + 1) * n];
            let mut acc = 0.0;
            // multiply instead of branching on the bit; adding ±0.0 leaves the sum unchanged
            for (&w, &bit) in row.iter().zip(h) {
                acc += w * f64::from(bit);
            }
            *o = bias_scale * self.visible_bias[j] + weight_scale * acc;
        }
    }

    #[inline]
    pub(crate) fn energy_raw(&self, v: &[u8], h: &[u8]) -> f64 {
        let mut e = 0.0;
        for (j, &vj) in v.iter().enumerate() {
            if vj != 0 {
                let mut acc = self.visible_bias[j];
                for (&w, &hi) in self.weight_row(j).iter().zip(h) {
                    if hi != 0 {
                        acc += w;
                    }
                }
                e -= acc;
            }
        }
        for (&c, &hi) in self.hidden_bias.iter().zip(h) {
            if hi != 0 {
                e -= c;
            }
        }
        e
    }

    // ---- public operations ----

    /// `E(v, h) = -vᵀWh - vᵀb - cᵀh`.
    pub fn energy(&self, v: &BinaryVector, h: &BinaryVector) -> Result<f64> {
        self.check_visible(v)?;
        self.check_hidden(h)?;
        Ok(self.energy_raw(v.as_slice(), h.as_slice()))
    }

    /// `p(h_i = 1 | v) = logistic(c_i + (Wᵀv)_i)`.
    pub fn hidden_conditional(&self, v: &BinaryVector) -> Result<Vec<f64>> {
        self.check_visible(v)?;
        let mut act = vec![0.0; self.num_hidden];
        self.hidden_activation_into(v.as_slice(), 1.0, 1.0, &mut act);
        Ok(act.into_iter().map(logistic).collect())
    }

    /// `p(v_j = 1 | h) = logistic(b_j + (Wh)_j)`.
    pub fn visible_conditional(&self, h: &BinaryVector) -> Result<Vec<f64>> {
        self.check_hidden(h)?;
        let mut act = vec![0.0; self.num_visible];
        self.visible_activation_into(h.as_slice(), 1.0, 1.0, &mut act);
        Ok(act.into_iter().map(logistic).collect())
    }

    /// `log p̃(v) = vᵀb + Σ_i softplus(c_i + (Wᵀv)_i)`.
    pub fn log_unnormalized_marginal_visible(&self, v: &BinaryVector) -> Result<f64> {
        self.check_visible(v)?;
        let mut act = vec![0.0; self.num_hidden];
        self.hidden_activation_into(v.as_slice(), 1.0, 1.0, &mut act);
        Ok(dot_bits(v.as_slice(), &self.visible_bias) + act.iter().map(|&a| softplus(a)).sum::<f64>())
    }

    /// `log p̃(h) = cᵀh + Σ_j softplus(b_j + (Wh)_j)`.
    pub fn log_unnormalized_marginal_hidden(&self, h: &BinaryVector) -> Result<f64> {
        self.check_hidden(h)?;
        let mut act = vec![0.0; self.num_visible];
        self.visible_activation_into(h.as_slice(), 1.0, 1.0, &mut act);
        Ok(dot_bits(h.as_slice(), &self.hidden_bias) + act.iter().map(|&a| softplus(a)).sum::<f64>())
    }

    /// `log p(v | h)`; always finite and non-positive.
    pub fn log_conditional_visible(&self, v: &BinaryVector, h: &BinaryVector) -> Result<f64> {
        self.check_visible(v)?;
        self.check_hidden(h)?;
        let mut act = vec![0.0; self.num_visible];
        self.visible_activation_into(h.as_slice(), 1.0, 1.0, &mut act);
        Ok(log_bernoulli(v.as_slice(), &act))
    }

    /// `log p(h | v)`; always finite and non-positive.
    pub fn log_conditional_hidden(&self, h: &BinaryVector, v: &BinaryVector) -> Result<f64> {
        self.check_visible(v)?;
        self.check_hidden(h)?;
        let mut act = vec![0.0; self.num_hidden];
        self.hidden_activation_into(v.as_slice(), 1.0, 1.0, &mut act);
        Ok(log_bernoulli(h.as_slice(), &act))
    }
}

#[inline]
pub(crate) fn dot_bits(bits: &[u8], x: &[f64]) -> f64 {
    // multiply instead of filter: the bits are random, so a branch mispredicts
    bits.iter().zip(x).map(|(&b, &x)| b as f64 * x).sum()
}

/// `Σ_j log Bernoulli(bits_j; logistic(act_j))`.
#[inline]
pub(crate) fn log_bernoulli(bits: &[u8], act: &[f64]) -> f64 {
    bits.iter()
        .zip(act)
        .map(|(&b, &a)| if b != 0 { log_logistic(a) } else { log_logistic(-a) })
        .sum()
}

/// One value per parameter, laid out like [`RbmParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradientTriple {
    num_visible: usize,
    num_hidden: usize,
    /// Row-major `m × n`; entry `(j, i)` pairs visible `j` with hidden `i`.
    pub weights: Vec<f64>,
    pub visible: Vec<f64>,
    pub hidden: Vec<f64>,
}

impl GradientTriple {
    pub fn zeros(num_visible: usize, num_hidden: usize) -> Self {
        Self {
            num_visible,
            num_hidden,
            weights: vec![0.0; num_visible * num_hidden],
            visible: vec![0.0; num_visible],
            hidden: vec![0.0; num_hidden],
        }
    }

    pub fn zeros_like(params: &RbmParams) -> Self {
        Self::zeros(params.num_visible, params.num_hidden)
    }

    pub fn from_parts(num_visible: usize, num_hidden: usize, weights: Vec<f64>, visible: Vec<f64>, hidden: Vec<f64>) -> Result<Self> {
        check_len("weight gradient", num_visible * num_hidden, weights.len())?;
        check_len("visible gradient", num_visible, visible.len())?;
        check_len("hidden gradient", num_hidden, hidden.len())?;
        Ok(Self {
            num_visible,
            num_hidden,
            weights,
            visible,
            hidden,
        })
    }

    /// Builds a triple from values in flat order.
    pub fn from_flat(num_visible: usize, num_hidden: usize, flat: &[f64]) -> Result<Self> {
        let mn = num_visible * num_hidden;
        check_len("flat gradient", mn + num_visible + num_hidden, flat.len())?;
        Ok(Self {
            num_visible,
            num_hidden,
            weights: flat[..mn].to_vec(),
            visible: flat[mn..mn + num_visible].to_vec(),
            hidden: flat[mn + num_visible..].to_vec(),
        })
    }

    pub fn num_visible(&self) -> usize {
        self.num_visible
    }

    pub fn num_hidden(&self) -> usize {
        self.num_hidden
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + self.visible.len() + self.hidden.len()
    }

    #[inline]
    pub fn weight(&self, visible: usize, hidden: usize) -> f64 {
        self.weights[visible * self.num_hidden + hidden]
    }

    pub fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights.iter().chain(&self.visible).chain(&self.hidden).copied()
    }

    pub fn flat_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.weights
            .iter_mut()
            .chain(self.visible.iter_mut())
            .chain(self.hidden.iter_mut())
    }

    pub fn is_finite(&self) -> bool {
        self.flat().all(f64::is_finite)
    }

    pub fn same_shape(&self, other: &GradientTriple) -> bool {
        self.num_visible == other.num_visible && self.num_hidden == other.num_hidden
    }

    pub fn check_shape(&self, params: &RbmParams) -> Result<()> {
        check_len("gradient visible units", params.num_visible, self.num_visible)?;
        check_len("gradient hidden units", params.num_hidden, self.num_hidden)
    }

    fn check_same(&self, other: &GradientTriple) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(RbmError::DimensionMismatch {
                what: "gradient triple",
                expected: self.num_params(),
                found: other.num_params(),
            })
        }
    }

    /// `self - other`.
    pub fn sub(&self, other: &GradientTriple) -> Result<GradientTriple> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (a, b) in out.flat_mut().zip(other.flat()) {
            *a -= b;
        }
        Ok(out)
    }

    /// `self += alpha·other`.
    pub fn add_scaled(&mut self, other: &GradientTriple, alpha: f64) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.flat_mut().zip(other.flat()) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        for a in self.flat_mut() {
            *a *= alpha;
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.flat().map(|x| x * x).sum()
    }

    pub fn squared_distance(&self, other: &GradientTriple) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.flat().zip(other.flat()).map(|(a, b)| (a - b) * (a - b)).sum())
    }

    pub fn max_abs_diff(&self, other: &GradientTriple) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.flat().zip(other.flat()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}
