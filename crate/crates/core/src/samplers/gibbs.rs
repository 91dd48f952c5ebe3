use rand::Rng;

use crate::error::{check_len, invalid, Result};
use crate::math::{logistic_into, logistic_with_softplus_sum};
use crate::rbm::{dot_bits, BinaryVector, RbmParams};

/// A Markov chain position: the visible state and the hidden state that
/// produced it (`h^{(k-1)}` after `k` alternations).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainState {
    pub visible: BinaryVector,
    pub hidden: BinaryVector,
}

impl ChainState {
    /// A chain positioned at `v` with an all-zero hidden state.
    pub fn from_visible(v: BinaryVector, num_hidden: usize) -> Self {
        Self {
            visible: v,
            hidden: BinaryVector::zeros(num_hidden),
        }
    }

    pub(crate) fn check(&self, params: &RbmParams) -> Result<()> {
        check_len("chain visible state", params.num_visible(), self.visible.len())?;
        check_len("chain hidden state", params.num_hidden(), self.hidden.len())
    }
}

/// Draws each entry as an independent Bernoulli variable.
///
/// # Panics
/// If any probability lies outside `[0, 1]`.
pub fn sample_layer<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> BinaryVector {
    assert!(
        probs.iter().all(|p| (0.0..=1.0).contains(p)),
        "probabilities must lie in [0, 1]"
    );
    let mut out = vec![0u8; probs.len()];
    sample_into(probs, rng, &mut out);
    BinaryVector::from_raw(out)
}

#[inline]
pub(crate) fn sample_into<R: Rng + ?Sized>(probs: &[f64], rng: &mut R, out: &mut [u8]) {
    for (o, &p) in out.iter_mut().zip(probs) {
        *o = (rng.random::<f64>() < p) as u8;
    }
}

/// Scratch buffers for block-Gibbs alternations on one model size.
///
/// `weight_scale` and `bias_scale` temper the conditionals; both are 1 for
/// the model itself.
#[derive(Clone, Debug)]
pub(crate) struct Gibbs {
    pub v: Vec<u8>,
    pub h: Vec<u8>,
    pub h_act: Vec<f64>,
    pub h_prob: Vec<f64>,
    pub v_act: Vec<f64>,
    pub v_prob: Vec<f64>,
}

impl Gibbs {
    pub fn new(params: &RbmParams) -> Self {
        let m = params.num_visible();
        let n = params.num_hidden();
        Self {
            v: vec![0; m],
            h: vec![0; n],
            h_act: vec![0.0; n],
            h_prob: vec![0.0; n],
            v_act: vec![0.0; m],
            v_prob: vec![0.0; m],
        }
    }

    /// `h ~ p(h | v)` then `v ~ p(v | h)` under the tempered conditionals.
    /// With `want_log_conditional`, returns `log p(v_new | h)`, computed from
    /// the same exponentials as the sampling probabilities.
    #[inline]
    pub fn alternate<R: Rng + ?Sized>(
        &mut self,
        params: &RbmParams,
        weight_scale: f64,
        bias_scale: f64,
        want_log_conditional: bool,
        rng: &mut R,
    ) -> f64 {
        params.hidden_activation_into(&self.v, weight_scale, bias_scale, &mut self.h_act);
        logistic_into(&self.h_act, &mut self.h_prob);
        sample_into(&self.h_prob, rng, &mut self.h);
        params.visible_activation_into(&self.h, weight_scale, bias_scale, &mut self.v_act);
        if want_log_conditional {
            let normalizer = logistic_with_softplus_sum(&self.v_act, &mut self.v_prob);
            sample_into(&self.v_prob, rng, &mut self.v);
            dot_bits(&self.v, &self.v_act) - normalizer
        } else {
            logistic_into(&self.v_act, &mut self.v_prob);
            sample_into(&self.v_prob, rng, &mut self.v);
            0.0
        }
    }

    /// Runs `k` alternations from `v0` at full temperature.
    #[inline]
    pub fn run<R: Rng + ?Sized>(&mut self, params: &RbmParams, v0: &[u8], k: usize, want_log_conditional: bool, rng: &mut R) -> f64 {
        self.v.copy_from_slice(v0);
        let mut log_cond = 0.0;
        for t in 0..k {
            log_cond = self.alternate(params, 1.0, 1.0, want_log_conditional && t + 1 == k, rng);
        }
        log_cond
    }

    pub fn state(&self) -> ChainState {
        ChainState {
            visible: BinaryVector::from_raw(self.v.clone()),
            hidden: BinaryVector::from_raw(self.h.clone()),
        }
    }
}

/// Runs `k` block-Gibbs alternations from `v0` and returns `(v^{(k)}, h^{(k-1)})`.
pub fn run_cd_chain<R: Rng + ?Sized>(params: &RbmParams, v0: &BinaryVector, k: usize, rng: &mut R) -> Result<ChainState> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    check_len("initial visible state", params.num_visible(), v0.len())?;
    let mut g = Gibbs::new(params);
    g.run(params, v0.as_slice(), k, false, rng);
    Ok(g.state())
}

/// One Gibbs alternation continuing from a persistent state.
pub fn pcd_step<R: Rng + ?Sized>(params: &RbmParams, state: &ChainState, rng: &mut R) -> Result<ChainState> {
    state.check(params)?;
    let mut g = Gibbs::new(params);
    g.run(params, state.visible.as_slice(), 1, false, rng);
    Ok(g.state())
}
