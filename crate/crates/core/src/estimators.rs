//! Log-likelihood gradient estimators.
//!
//! Every estimator returns the positive phase of the batch minus some
//! estimate of the model expectation of `(p(h=1|v) ⊗ v, v, p(h=1|v))`.
//! Sample slot `i` of a batch always draws from `rng.sample_rng(i)`, so CD
//! and the weighted variants see identical chains on the same stream.

use crate::error::{check_len, invalid, Result};
use crate::exact::{accumulate_hidden_statistic, accumulate_visible_statistic, data_expectation};
use crate::math::{logistic_into, logistic_with_softplus_sum, LogSumExp};
use crate::rbm::{dot_bits, BinaryVector, GradientTriple, RbmParams};
use crate::rng::RngStream;
use crate::samplers::{sample_into, ChainState, Gibbs, PtEnsemble};

/// How negative-phase samples are weighted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Weighting {
    /// Plain average (CD-k).
    Uniform,
    /// `ω = p̃(v')/p(v'|h')`, self-normalized (pop-CD-k).
    Visible,
    /// As `Visible`, with sample `i` left out of its own normalizer and an
    /// `(ℓ-1)/ℓ` prefactor.
    LeaveOneOut,
    /// `ω = p̃(h)/p(h|v')` with `h ~ p(h|v')`; the statistic is taken in
    /// expectation over `p(v|h)`.
    Hidden,
}

/// A gradient estimate with its importance-weight diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientEstimate {
    pub gradient: GradientTriple,
    pub log_weight_mean: f64,
    pub log_weight_max: f64,
    pub effective_sample_size: f64,
}

/// Weighted negative-phase samples, stored flat: per slot, the bits of the
/// sampled layer and the conditional means of the other layer.
#[derive(Clone, Debug)]
struct Particles {
    bits_len: usize,
    probs_len: usize,
    bits: Vec<u8>,
    probs: Vec<f64>,
    log_weights: Vec<f64>,
}

impl Particles {
    fn new(count: usize, bits_len: usize, probs_len: usize) -> Self {
        Self {
            bits_len,
            probs_len,
            bits: vec![0; count * bits_len],
            probs: vec![0.0; count * probs_len],
            log_weights: vec![0.0; count],
        }
    }

    fn len(&self) -> usize {
        self.log_weights.len()
    }

    fn bits(&self, i: usize) -> &[u8] {
        &self.bits[i * self.bits_len..(i + 1) * self.bits_len]
    }

    fn probs(&self, i: usize) -> &[f64] {
        &self.probs[i * self.probs_len..(i + 1) * self.probs_len]
    }
}

// Below this many multiply-adds per batch, threads cost more than they save.
#[cfg(feature = "parallel")]
const PARALLEL_WORK: usize = 1 << 18;

fn check_batch(params: &RbmParams, batch: &[BinaryVector]) -> Result<()> {
    if batch.is_empty() {
        return Err(invalid("the batch is empty"));
    }
    batch
        .iter()
        .try_for_each(|v| check_len("batch sample", params.num_visible(), v.len()))
}

/// Runs one chain and writes its particle into `bits`/`probs`; returns the
/// log weight (0 for uniform weighting).
#[allow(clippy::too_many_arguments)]
fn simulate_one(
    params: &RbmParams,
    g: &mut Gibbs,
    v0: &[u8],
    k: usize,
    weighting: Weighting,
    rng: &RngStream,
    slot: usize,
    bits: &mut [u8],
    probs: &mut [f64],
) -> f64 {
    let mut r = rng.sample_rng(slot as u64);
    let visible_weights = matches!(weighting, Weighting::Visible | Weighting::LeaveOneOut);
    let log_cond = g.run(params, v0, k, visible_weights, &mut r);
    params.hidden_activation_into(&g.v, 1.0, 1.0, &mut g.h_act);
    match weighting {
        Weighting::Uniform => {
            logistic_into(&g.h_act, probs);
            bits.copy_from_slice(&g.v);
            0.0
        }
        Weighting::Visible | Weighting::LeaveOneOut => {
            let softplus_sum = logistic_with_softplus_sum(&g.h_act, probs);
            bits.copy_from_slice(&g.v);
            let log_marginal = dot_bits(&g.v, params.visible_bias()) + softplus_sum;
            log_marginal - log_cond
        }
        Weighting::Hidden => {
            let softplus_h = logistic_with_softplus_sum(&g.h_act, &mut g.h_prob);
            sample_into(&g.h_prob, &mut r, &mut g.h);
            let log_cond_h = dot_bits(&g.h, &g.h_act) - softplus_h;
            params.visible_activation_into(&g.h, 1.0, 1.0, &mut g.v_act);
            let softplus_v = logistic_with_softplus_sum(&g.v_act, probs);
            bits.copy_from_slice(&g.h);
            let log_marginal_h = dot_bits(&g.h, params.hidden_bias()) + softplus_v;
            log_marginal_h - log_cond_h
        }
    }
}

fn simulate(params: &RbmParams, batch: &[BinaryVector], k: usize, weighting: Weighting, rng: &RngStream) -> Particles {
    let (m, n) = (params.num_visible(), params.num_hidden());
    let mut out = match weighting {
        Weighting::Hidden => Particles::new(batch.len(), n, m),
        _ => Particles::new(batch.len(), m, n),
    };
    let (bl, pl) = (out.bits_len, out.probs_len);
    let run = |g: &mut Gibbs, (i, ((bits, probs), w)): (usize, ((&mut [u8], &mut [f64]), &mut f64))| {
        *w = simulate_one(params, g, batch[i].as_slice(), k, weighting, rng, i, bits, probs);
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if batch.len() * m * n * k >= PARALLEL_WORK {
            out.bits
                .par_chunks_mut(bl)
                .zip(out.probs.par_chunks_mut(pl))
                .zip(out.log_weights.par_iter_mut())
                .enumerate()
                .for_each_init(|| Gibbs::new(params), run);
            return out;
        }
    }
    let mut g = Gibbs::new(params);
    out.bits
        .chunks_mut(bl)
        .zip(out.probs.chunks_mut(pl))
        .zip(out.log_weights.iter_mut())
        .enumerate()
        .for_each(|item| run(&mut g, item));
    out
}

/// `(Σω)²/Σω²` from log weights, clamped to `[1, ℓ]`.
pub fn effective_sample_size(log_weights: &[f64]) -> f64 {
    assert!(!log_weights.is_empty(), "effective sample size of no weights");
    let (w, total) = shifted_weights(log_weights);
    ess_of_shifted(&w, total)
}

// After the max shift the largest weight is 1, so neither sum can underflow.
fn ess_of_shifted(w: &[f64], total: f64) -> f64 {
    let squares: f64 = w.iter().map(|x| x * x).sum();
    (total * total / squares).clamp(1.0, w.len() as f64)
}

/// Self-normalizing coefficients: `(shifted weights, their sum)`.
fn shifted_weights(log_weights: &[f64]) -> (Vec<f64>, f64) {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_weights.iter().map(|&l| (l - max).exp()).collect();
    let total = w.iter().sum();
    (w, total)
}

/// `ω_i / Σ_j ω_j` from log weights, computed with the same max shift used by
/// the estimators.
pub fn self_normalized_weights(log_weights: &[f64]) -> Vec<f64> {
    let (w, total) = shifted_weights(log_weights);
    w.into_iter().map(|x| x / total).collect()
}

/// `(ℓ-1)/ℓ · ω_i / Σ_{j≠i} ω_j`, with the leave-one-out sums formed from
/// prefix and suffix log-sum-exps.
fn leave_one_out_coefficients(log_weights: &[f64]) -> Vec<f64> {
    let l = log_weights.len();
    let mut prefix = vec![LogSumExp::new(); l + 1];
    for i in 0..l {
        prefix[i + 1] = prefix[i];
        prefix[i + 1].push(log_weights[i]);
    }
    let mut suffix = vec![LogSumExp::new(); l + 1];
    for i in (0..l).rev() {
        suffix[i] = suffix[i + 1];
        suffix[i].push(log_weights[i]);
    }
    let log_prefactor = ((l - 1) as f64 / l as f64).ln();
    (0..l)
        .map(|i| {
            let mut others = prefix[i];
            others.merge(&suffix[i + 1]);
            (log_prefactor + log_weights[i] - others.value()).exp()
        })
        .collect()
}

fn divide(g: &mut GradientTriple, total: f64) {
    for x in g.flat_mut() {
        *x /= total;
    }
}

fn combine(params: &RbmParams, positive: GradientTriple, particles: &Particles, weighting: Weighting) -> Result<GradientEstimate> {
    let m = params.num_visible();
    let n = params.num_hidden();
    let log_weights = &particles.log_weights;
    let mut negative = GradientTriple::zeros(m, n);
    let accumulate = |g: &mut GradientTriple, i: usize, coef: f64| match weighting {
        Weighting::Hidden => accumulate_hidden_statistic(g, particles.bits(i), particles.probs(i), coef),
        _ => accumulate_visible_statistic(g, particles.bits(i), particles.probs(i), coef),
    };
    let ess = match weighting {
        Weighting::LeaveOneOut => {
            for (i, c) in leave_one_out_coefficients(log_weights).into_iter().enumerate() {
                accumulate(&mut negative, i, c);
            }
            effective_sample_size(log_weights)
        }
        Weighting::Uniform => {
            for i in 0..particles.len() {
                accumulate(&mut negative, i, 1.0);
            }
            divide(&mut negative, particles.len() as f64);
            particles.len() as f64
        }
        Weighting::Visible | Weighting::Hidden => {
            let (w, total) = shifted_weights(log_weights);
            for (i, &c) in w.iter().enumerate() {
                accumulate(&mut negative, i, c);
            }
            divide(&mut negative, total);
            ess_of_shifted(&w, total)
        }
    };
    let gradient = positive.sub(&negative)?;
    let log_weight_max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(GradientEstimate {
        gradient,
        log_weight_mean: log_weights.iter().sum::<f64>() / log_weights.len() as f64,
        log_weight_max,
        effective_sample_size: ess,
    })
}

/// The general k-step estimator behind CD-k and the pop-CD-k variants.
pub fn chain_gradient(params: &RbmParams, batch: &[BinaryVector], k: usize, weighting: Weighting, rng: &RngStream) -> Result<GradientEstimate> {
    check_batch(params, batch)?;
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    let min_batch = match weighting {
        Weighting::Uniform => 1,
        Weighting::Visible | Weighting::Hidden => 2,
        Weighting::LeaveOneOut => 3,
    };
    if batch.len() < min_batch {
        return Err(invalid(format!("{weighting:?} weighting needs a batch of at least {min_batch}")));
    }
    let positive = data_expectation(params, batch)?;
    let particles = simulate(params, batch, k, weighting, rng);
    combine(params, positive, &particles, weighting)
}

/// Batch means of `(p(h=1|v) ⊗ v, v, p(h=1|v))`.
pub fn positive_phase(params: &RbmParams, batch: &[BinaryVector]) -> Result<GradientTriple> {
    check_batch(params, batch)?;
    data_expectation(params, batch)
}

/// CD-k: unweighted negative phase after `k` alternations from each sample.
pub fn cd_gradient(params: &RbmParams, batch: &[BinaryVector], k: usize, rng: &RngStream) -> Result<GradientEstimate> {
    chain_gradient(params, batch, k, Weighting::Uniform, rng)
}

/// pop-CD-k: the CD-k samples, self-normalized by `ω = p̃(v^{(k)})/p(v^{(k)}|h^{(k-1)})`.
pub fn pop_cd_gradient(params: &RbmParams, batch: &[BinaryVector], k: usize, rng: &RngStream) -> Result<GradientEstimate> {
    chain_gradient(params, batch, k, Weighting::Visible, rng)
}

/// pop-CD-k with leave-one-out normalizers.
pub fn pop_cd_gradient_loo(params: &RbmParams, batch: &[BinaryVector], k: usize, rng: &RngStream) -> Result<GradientEstimate> {
    chain_gradient(params, batch, k, Weighting::LeaveOneOut, rng)
}

/// pop-CD-k weighted on the hidden side.
pub fn pop_cd_gradient_hidden_weights(params: &RbmParams, batch: &[BinaryVector], k: usize, rng: &RngStream) -> Result<GradientEstimate> {
    chain_gradient(params, batch, k, Weighting::Hidden, rng)
}

/// `log ω = log p̃(v) - log p(v | h_prev)`.
pub fn log_importance_weight(params: &RbmParams, v: &BinaryVector, h_prev: &BinaryVector) -> Result<f64> {
    Ok(params.log_unnormalized_marginal_visible(v)? - params.log_conditional_visible(v, h_prev)?)
}

/// `log ω = log p̃(h) - log p(h | v_prev)`.
pub fn log_importance_weight_hidden(params: &RbmParams, h: &BinaryVector, v_prev: &BinaryVector) -> Result<f64> {
    Ok(params.log_unnormalized_marginal_hidden(h)? - params.log_conditional_hidden(h, v_prev)?)
}

fn uniform_estimate(params: &RbmParams, positive: GradientTriple, visibles: &[&[u8]]) -> Result<GradientEstimate> {
    let (m, n) = (params.num_visible(), params.num_hidden());
    let mut particles = Particles::new(visibles.len(), m, n);
    let mut act = vec![0.0; n];
    for (i, v) in visibles.iter().enumerate() {
        params.hidden_activation_into(v, 1.0, 1.0, &mut act);
        particles.bits[i * m..(i + 1) * m].copy_from_slice(v);
        logistic_into(&act, &mut particles.probs[i * n..(i + 1) * n]);
    }
    combine(params, positive, &particles, Weighting::Uniform)
}

/// PCD: advances each persistent chain one alternation and averages them.
/// Chain `i` draws from `rng.sample_rng(i)`.
pub fn pcd_gradient(params: &RbmParams, persistent: &mut [ChainState], batch: &[BinaryVector], rng: &RngStream) -> Result<GradientEstimate> {
    check_batch(params, batch)?;
    if persistent.is_empty() {
        return Err(invalid("PCD needs at least one persistent chain"));
    }
    persistent.iter().try_for_each(|s| s.check(params))?;
    let positive = data_expectation(params, batch)?;
    let mut g = Gibbs::new(params);
    for (i, state) in persistent.iter_mut().enumerate() {
        let mut r = rng.sample_rng(i as u64);
        g.run(params, state.visible.as_slice(), 1, false, &mut r);
        state.visible.as_mut_slice().copy_from_slice(&g.v);
        state.hidden.as_mut_slice().copy_from_slice(&g.h);
    }
    let visibles: Vec<&[u8]> = persistent.iter().map(|s| s.visible.as_slice()).collect();
    uniform_estimate(params, positive, &visibles)
}

/// PT: one sweep of every ensemble; the `β = 1` states form the negative phase.
/// Ensemble `i` draws from `rng.sample_rng(i)`.
pub fn pt_gradient(params: &RbmParams, ensembles: &mut [PtEnsemble], batch: &[BinaryVector], rng: &RngStream) -> Result<GradientEstimate> {
    check_batch(params, batch)?;
    if ensembles.is_empty() {
        return Err(invalid("PT needs at least one ensemble"));
    }
    let positive = data_expectation(params, batch)?;
    let mut g = Gibbs::new(params);
    for (i, e) in ensembles.iter_mut().enumerate() {
        e.states().iter().try_for_each(|s| s.check(params))?;
        e.step_with(params, &mut g, &mut rng.sample_rng(i as u64));
    }
    let visibles: Vec<&[u8]> = ensembles.iter().map(|e| e.model_state().visible.as_slice()).collect();
    uniform_estimate(params, positive, &visibles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ExactOracle;
    use crate::testutil::{all_states, random_bits, random_params};

    fn batch(m: usize, l: usize, seed: u64) -> Vec<BinaryVector> {
        (0..l).map(|i| random_bits(m, seed * 1000 + i as u64)).collect()
    }

    #[test]
    fn ess_cases() {
        assert!((effective_sample_size(&[0.3; 8]) - 8.0).abs() < 1e-12);
        assert!((effective_sample_size(&[100.0, 0.0, 0.0, 0.0]) - 1.0).abs() < 1e-6);
        assert!((effective_sample_size(&[0.0, 3f64.ln()]) - 1.6).abs() < 1e-12);
        assert!((effective_sample_size(&[-800.0, -800.0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn positive_phase_cases() {
        let p = RbmParams::zeros(3, 2).unwrap();
        let g = positive_phase(&p, &[BinaryVector::ones(3), BinaryVector::ones(3)]).unwrap();
        assert!(g.weights.iter().all(|&x| x == 0.5));
        assert!(g.visible.iter().all(|&x| x == 1.0));
        assert!(g.hidden.iter().all(|&x| x == 0.5));

        let p = random_params(3, 2, 1.0, 4);
        let g = positive_phase(&p, &[BinaryVector::zeros(3)]).unwrap();
        assert!(g.weights.iter().all(|&x| x == 0.0));
        assert!(g.visible.iter().all(|&x| x == 0.0));
        for (gh, &c) in g.hidden.iter().zip(p.hidden_bias()) {
            assert!((gh - crate::math::logistic(c)).abs() < 1e-15);
        }

        let p = random_params(4, 3, 1.0, 5);
        let data = batch(4, 6, 1);
        let g = positive_phase(&p, &data).unwrap();
        let mut expect = vec![0.0; 12 + 4 + 3];
        for v in &data {
            let ph = p.hidden_conditional(v).unwrap();
            for j in 0..4 {
                let vj = v.as_slice()[j] as f64;
                for i in 0..3 {
                    expect[j * 3 + i] += ph[i] * vj / 6.0;
                }
                expect[12 + j] += vj / 6.0;
            }
            for i in 0..3 {
                expect[16 + i] += ph[i] / 6.0;
            }
        }
        for (a, b) in g.flat().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(positive_phase(&p, &[]).is_err());
        assert!(positive_phase(&p, &[BinaryVector::zeros(2)]).is_err());
    }

    #[test]
    fn zero_params_weights_equal_partition_function() {
        let p = RbmParams::zeros(4, 3).unwrap();
        for v in all_states(4) {
            for h in all_states(3) {
                let lw = log_importance_weight(&p, &v, &h).unwrap();
                assert!((lw - 7.0 * 2f64.ln()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn weight_decomposition_and_expectation_identity() {
        let p = random_params(4, 3, 1.0, 6);
        let oracle = ExactOracle::default();
        let log_z = oracle.log_partition(&p).unwrap();
        for h_prev in all_states(3) {
            let mut expected_weight = 0.0;
            for v in all_states(4) {
                let lw = log_importance_weight(&p, &v, &h_prev).unwrap();
                // ω = p̃(h')·1 + Σ_{h≠h'} p̃(h) p(v|h)/p(v|h')
                let lc_prev = p.log_conditional_visible(&v, &h_prev).unwrap();
                let mut decomposed = p.log_unnormalized_marginal_hidden(&h_prev).unwrap().exp();
                for h in all_states(3).filter(|h| *h != h_prev) {
                    let ratio = (p.log_conditional_visible(&v, &h).unwrap() - lc_prev).exp();
                    decomposed += p.log_unnormalized_marginal_hidden(&h).unwrap().exp() * ratio;
                }
                assert!((lw.exp() - decomposed).abs() < 1e-9 * decomposed);
                expected_weight += lc_prev.exp() * lw.exp();
            }
            assert!((expected_weight.ln() - log_z).abs() < 1e-10);
        }
        for v_prev in all_states(4) {
            let e: f64 = all_states(3)
                .map(|h| p.log_conditional_hidden(&h, &v_prev).unwrap().exp() * log_importance_weight_hidden(&p, &h, &v_prev).unwrap().exp())
                .sum();
            assert!((e.ln() - log_z).abs() < 1e-10);
        }
    }

    #[test]
    fn fused_weights_match_public_weight_formula() {
        let p = random_params(6, 5, 1.2, 7);
        let data = batch(6, 10, 2);
        let rng = RngStream::new(3);
        let particles = simulate(&p, &data, 2, Weighting::Visible, &rng);
        let mut g = Gibbs::new(&p);
        for i in 0..particles.len() {
            let mut r = rng.sample_rng(i as u64);
            g.run(&p, data[i].as_slice(), 2, false, &mut r);
            let st = g.state();
            assert_eq!(st.visible.as_slice(), particles.bits(i));
            let lw = log_importance_weight(&p, &st.visible, &st.hidden).unwrap();
            assert!((lw - particles.log_weights[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn pop_cd_with_forced_uniform_weights_is_cd() {
        let p = random_params(5, 4, 1.0, 8);
        let data = batch(5, 9, 3);
        let rng = RngStream::new(4);
        let cd = cd_gradient(&p, &data, 3, &rng).unwrap();
        let mut particles = simulate(&p, &data, 3, Weighting::Visible, &rng);
        particles.log_weights.fill(0.0);
        let forced = combine(&p, positive_phase(&p, &data).unwrap(), &particles, Weighting::Visible).unwrap();
        assert_eq!(forced.gradient, cd.gradient);
        assert_eq!(cd.effective_sample_size, 9.0);
        assert_eq!(cd.log_weight_max, 0.0);
    }

    #[test]
    fn zero_params_pop_cd_is_bit_identical_to_cd() {
        let p = RbmParams::zeros(6, 4).unwrap();
        let data = batch(6, 32, 5);
        for k in [1, 3] {
            let rng = RngStream::new(11 + k as u64);
            let cd = cd_gradient(&p, &data, k, &rng).unwrap();
            let pop = pop_cd_gradient(&p, &data, k, &rng).unwrap();
            assert_eq!(cd.gradient, pop.gradient);
            assert!((pop.effective_sample_size - 32.0).abs() < 1e-9);
            assert!((pop.log_weight_max - 10.0 * 2f64.ln()).abs() < 1e-12);
            let loo = pop_cd_gradient_loo(&p, &data, k, &rng).unwrap();
            assert!(loo.gradient.max_abs_diff(&pop.gradient).unwrap() < 1e-14);
        }
    }

    #[test]
    fn batch_size_preconditions() {
        let p = random_params(3, 2, 1.0, 9);
        let rng = RngStream::new(1);
        let one = batch(3, 1, 6);
        let two = batch(3, 2, 6);
        assert!(cd_gradient(&p, &one, 1, &rng).is_ok());
        assert!(pop_cd_gradient(&p, &one, 1, &rng).is_err());
        assert!(pop_cd_gradient_hidden_weights(&p, &one, 1, &rng).is_err());
        assert!(pop_cd_gradient(&p, &two, 1, &rng).is_ok());
        assert!(pop_cd_gradient_loo(&p, &two, 1, &rng).is_err());
        assert!(cd_gradient(&p, &two, 0, &rng).is_err());
        assert!(cd_gradient(&p, &batch(4, 2, 1), 1, &rng).is_err());
    }

    #[test]
    fn self_normalized_weights_sum_to_one() {
        let p = random_params(8, 6, 2.0, 10);
        let data = batch(8, 40, 7);
        let parts = simulate(&p, &data, 1, Weighting::Visible, &RngStream::new(2));
        let lw = parts.log_weights.clone();
        let (w, total) = shifted_weights(&lw);
        let normalized: f64 = w.iter().map(|x| x / total).sum();
        assert!((normalized - 1.0).abs() < 1e-12);
        let lse = crate::math::log_sum_exp(&lw);
        let shifted: Vec<f64> = lw.iter().map(|l| l - lse).collect();
        assert!(crate::math::log_sum_exp(&shifted).abs() < 1e-12);
    }

    #[test]
    fn estimates_are_finite_under_extreme_parameters() {
        let p = random_params(10, 8, 25.0, 11);
        let data = batch(10, 16, 8);
        let rng = RngStream::new(3);
        for w in [Weighting::Uniform, Weighting::Visible, Weighting::LeaveOneOut, Weighting::Hidden] {
            let est = chain_gradient(&p, &data, 2, w, &rng).unwrap();
            assert!(est.gradient.is_finite(), "{w:?}");
            assert!(est.effective_sample_size >= 1.0 && est.effective_sample_size <= 16.0);
            assert!(est.log_weight_max.is_finite());
        }
    }

    #[test]
    fn hidden_weighted_variant_at_zero_params_has_uniform_weights() {
        let p = RbmParams::zeros(4, 3).unwrap();
        let data = batch(4, 8, 9);
        let est = pop_cd_gradient_hidden_weights(&p, &data, 1, &RngStream::new(5)).unwrap();
        assert!((est.effective_sample_size - 8.0).abs() < 1e-9);
        assert!((est.log_weight_max - 7.0 * 2f64.ln()).abs() < 1e-12);
        assert!((est.log_weight_mean - 7.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn persistent_estimators_advance_and_reproduce() {
        let p = random_params(4, 3, 1.0, 12);
        let data = batch(4, 5, 10);
        let rng = RngStream::new(6);
        let start: Vec<ChainState> = data.iter().map(|v| ChainState::from_visible(v.clone(), 3)).collect();

        let mut a = start.clone();
        let mut b = start.clone();
        let ea = pcd_gradient(&p, &mut a, &data, &rng).unwrap();
        let eb = pcd_gradient(&p, &mut b, &data, &rng).unwrap();
        assert_eq!(ea, eb);
        assert_eq!(a, b);
        // the first PCD step from the data equals CD-1 on the same key
        let cd = cd_gradient(&p, &data, 1, &rng).unwrap();
        assert_eq!(ea.gradient, cd.gradient);
        assert!(pcd_gradient(&p, &mut [], &data, &rng).is_err());

        let zero = RbmParams::zeros(4, 3).unwrap();
        let mut ens: Vec<PtEnsemble> = start.iter().map(|s| PtEnsemble::uniform(4, s).unwrap()).collect();
        let mut ens2 = ens.clone();
        let e1 = pt_gradient(&zero, &mut ens, &data, &rng).unwrap();
        let e2 = pt_gradient(&zero, &mut ens2, &data, &rng).unwrap();
        assert_eq!(e1, e2);
        assert_eq!(e1.effective_sample_size, 5.0);
        assert!(ens.iter().all(|e| e.swap_stats()[0].attempts == 1));
    }
}
