//! Bias and variance of gradient estimators around a reference gradient.

use crate::error::{invalid, Result};
use crate::estimators::chain_gradient;
use crate::exact::{data_expectation, ExactOracle};
use crate::rbm::{BinaryVector, GradientTriple, RbmParams};
use crate::rng::{tags, RngStream};
use crate::samplers::{ground_truth_negative_phase, GroundTruthConfig};
use crate::training::{train, Algorithm, EvalMethod, Init, TrainConfig};

/// A k-step estimator applied to consecutive mini-batches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EstimatorConfig {
    pub algorithm: Algorithm,
    pub k: usize,
    pub batch_size: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiasVarianceReport {
    pub estimator: &'static str,
    pub k: usize,
    pub bias_per_param: f64,
    pub variance_per_param: f64,
    pub num_estimates: usize,
    /// How the reference gradient was obtained.
    pub ground_truth: String,
}

/// Running per-component mean and sum of squared deviations.
#[derive(Clone, Debug)]
struct Moments {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, x: impl Iterator<Item = f64>) {
        self.count += 1;
        let c = self.count as f64;
        for ((mu, m2), v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let d = v - *mu;
            *mu += d / c;
            *m2 += d * (v - *mu);
        }
    }
}

/// `(bias, variance)` per parameter of the estimates produced by
/// `estimate(0..num_estimates)`: `‖mean - truth‖²/P` and
/// `(1/N) Σ ‖est - mean‖²/P`.
pub fn measure_with<F>(ground_truth: &GradientTriple, num_estimates: usize, mut estimate: F) -> Result<(f64, f64)>
where
    F: FnMut(usize) -> Result<GradientTriple>,
{
    if num_estimates < 2 {
        return Err(invalid("at least two estimates are needed"));
    }
    let p = ground_truth.num_params();
    let mut moments = Moments::new(p);
    for i in 0..num_estimates {
        let g = estimate(i)?;
        if !g.same_shape(ground_truth) {
            return Err(invalid("estimate and ground truth differ in shape"));
        }
        moments.push(g.flat());
    }
    Ok(finish(&moments, ground_truth))
}

fn finish(moments: &Moments, ground_truth: &GradientTriple) -> (f64, f64) {
    let p = ground_truth.num_params() as f64;
    let bias = moments
        .mean
        .iter()
        .zip(ground_truth.flat())
        .map(|(m, t)| (m - t) * (m - t))
        .sum::<f64>()
        / p;
    let variance = moments.m2.iter().sum::<f64>() / moments.count as f64 / p;
    (bias, variance)
}

// Estimates are generated in blocks of this size and folded in order.
#[cfg(feature = "parallel")]
const BLOCK: usize = 256;

/// Draws `num_estimates` gradient estimates, estimate `i` on mini-batch
/// `i mod (N/ℓ)` with stream `rng.for_iteration(i)`.
pub fn measure_bias_variance(
    params: &RbmParams,
    data: &[BinaryVector],
    cfg: &EstimatorConfig,
    num_estimates: usize,
    ground_truth: &GradientTriple,
    ground_truth_label: &str,
    rng: &RngStream,
) -> Result<BiasVarianceReport> {
    let weighting = cfg
        .algorithm
        .weighting()
        .ok_or_else(|| invalid(format!("{} is not a k-step estimator", cfg.algorithm.name())))?;
    if cfg.batch_size == 0 || data.len() % cfg.batch_size != 0 {
        return Err(invalid("batch_size must divide the dataset size"));
    }
    if num_estimates < 2 {
        return Err(invalid("at least two estimates are needed"));
    }
    ground_truth.check_shape(params)?;
    let batches = data.len() / cfg.batch_size;
    let one = |i: usize| {
        let slot = i % batches;
        let batch = &data[slot * cfg.batch_size..(slot + 1) * cfg.batch_size];
        chain_gradient(params, batch, cfg.k, weighting, &rng.for_iteration(i as u64)).map(|e| e.gradient)
    };

    let mut moments = Moments::new(ground_truth.num_params());
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let mut start = 0;
        while start < num_estimates {
            let end = (start + BLOCK).min(num_estimates);
            let block: Vec<GradientTriple> = (start..end).into_par_iter().map(one).collect::<Result<_>>()?;
            for g in &block {
                moments.push(g.flat());
            }
            start = end;
        }
    }
    #[cfg(not(feature = "parallel"))]
    for i in 0..num_estimates {
        moments.push(one(i)?.flat());
    }
    let (bias, variance) = finish(&moments, ground_truth);
    Ok(BiasVarianceReport {
        estimator: cfg.algorithm.name(),
        k: cfg.k,
        bias_per_param: bias,
        variance_per_param: variance,
        num_estimates,
        ground_truth: ground_truth_label.to_string(),
    })
}

/// The full-data gradient: exact when the model can be enumerated, else the
/// exact positive phase minus a long parallel-tempering negative phase.
/// Returns the gradient and a short description of its source.
pub fn reference_gradient(params: &RbmParams, data: &[BinaryVector], pt: &GroundTruthConfig, rng: &RngStream) -> Result<(GradientTriple, String)> {
    let positive = data_expectation(params, data)?;
    let oracle = ExactOracle::default();
    if oracle.can_enumerate(params) {
        let negative = oracle.model_expectation(params)?;
        return Ok((positive.sub(&negative)?, "exact".to_string()));
    }
    let negative = ground_truth_negative_phase(params, pt, &rng.child(tags::GROUND_TRUTH))?;
    let label = format!("pt chains={} burn_in={} samples={}", pt.pt_chains, pt.burn_in, pt.num_samples);
    Ok((positive.sub(&negative)?, label))
}

/// The preparation recipe for the measurement point: CD-1 at `α = 0.1`
/// with full batches, small Gaussian initialization and no evaluation.
pub fn reference_train_config(num_hidden: usize, batch_size: usize, iterations: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        algorithm: Algorithm::Cd,
        num_hidden,
        k: 1,
        learning_rate: 0.1,
        batch_size,
        iterations,
        eval_interval: iterations.max(1),
        eval_method: EvalMethod::None,
        seed,
        init: Init::Gaussian001,
        ..TrainConfig::default()
    }
}

pub fn prepare_reference_model(data: &[BinaryVector], cfg: &TrainConfig) -> Result<RbmParams> {
    train(data, cfg).map(|(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_bits, random_params};

    fn triple(values: &[f64]) -> GradientTriple {
        GradientTriple::from_flat(1, 1, values).unwrap()
    }

    #[test]
    fn exact_estimator_has_no_bias_or_variance() {
        let truth = triple(&[0.3, -1.0, 2.0]);
        let (b, v) = measure_with(&truth, 10, |_| Ok(truth.clone())).unwrap();
        assert_eq!((b, v), (0.0, 0.0));
    }

    #[test]
    fn alternating_estimator_closed_form() {
        let truth = triple(&[0.3, -1.0, 2.0]);
        for delta in [1e-3, 0.5, 7.0] {
            let (b, v) = measure_with(&truth, 1000, |i| {
                let mut g = truth.clone();
                g.weights[0] += if i % 2 == 0 { delta } else { -delta };
                Ok(g)
            })
            .unwrap();
            assert!(b < 1e-20 * delta.max(1.0), "{b}");
            assert!((v - delta * delta / 3.0).abs() < 1e-12 * delta * delta, "{v}");
        }
    }

    #[test]
    fn shift_moves_bias_not_variance() {
        let truth = triple(&[0.0, 0.0, 0.0]);
        let base = |i: usize| triple(&[(i % 3) as f64, (i % 5) as f64 * 0.5, -((i % 7) as f64)]);
        let (b0, v0) = measure_with(&truth, 210, |i| Ok(base(i))).unwrap();
        let (b1, v1) = measure_with(&truth, 210, |i| {
            let mut g = base(i);
            g.add_scaled(&triple(&[1.0, 2.0, -2.0]), 1.0).unwrap();
            Ok(g)
        })
        .unwrap();
        assert!((v0 - v1).abs() < 1e-12);
        assert!((b1 - b0).abs() > 1.0);
        // mean of base is (1, 1, -3): shifted mean (2, 3, -5)
        assert!((b0 - 11.0 / 3.0).abs() < 1e-12);
        assert!((b1 - 38.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn measure_rejects_bad_input() {
        let truth = triple(&[0.0; 3]);
        assert!(measure_with(&truth, 1, |_| Ok(truth.clone())).is_err());
        assert!(measure_with(&truth, 3, |_| Ok(GradientTriple::zeros(2, 1))).is_err());
        let p = random_params(3, 2, 1.0, 1);
        let data: Vec<_> = (0..4).map(|i| random_bits(3, i)).collect();
        let cfg = EstimatorConfig {
            algorithm: Algorithm::Pcd,
            k: 1,
            batch_size: 2,
        };
        let gt = GradientTriple::zeros_like(&p);
        assert!(measure_bias_variance(&p, &data, &cfg, 10, &gt, "", &RngStream::new(0)).is_err());
        let cfg = EstimatorConfig { algorithm: Algorithm::Cd, batch_size: 3, ..cfg };
        assert!(measure_bias_variance(&p, &data, &cfg, 10, &gt, "", &RngStream::new(0)).is_err());
    }

    #[test]
    fn harness_matches_manual_loop_and_is_reproducible() {
        let p = random_params(5, 3, 1.0, 2);
        let data: Vec<_> = (0..8).map(|i| random_bits(5, 40 + i)).collect();
        let rng = RngStream::new(9);
        let (gt, label) = reference_gradient(&p, &data, &GroundTruthConfig::default(), &rng).unwrap();
        assert_eq!(label, "exact");
        let cfg = EstimatorConfig {
            algorithm: Algorithm::PopCd,
            k: 1,
            batch_size: 4,
        };
        let r = measure_bias_variance(&p, &data, &cfg, 600, &gt, &label, &rng).unwrap();
        let again = measure_bias_variance(&p, &data, &cfg, 600, &gt, &label, &rng).unwrap();
        assert_eq!(r, again);
        let (b, v) = measure_with(&gt, 600, |i| {
            let slot = i % 2;
            crate::estimators::pop_cd_gradient(&p, &data[slot * 4..slot * 4 + 4], 1, &rng.for_iteration(i as u64)).map(|e| e.gradient)
        })
        .unwrap();
        assert_eq!((r.bias_per_param, r.variance_per_param), (b, v));
        assert!(r.bias_per_param >= 0.0 && r.variance_per_param > 0.0);
        assert_eq!(r.estimator, "pop_cd");
    }

    #[test]
    fn reference_model_preparation() {
        let data = crate::data::generate_bars_and_stripes(2).unwrap().into_samples();
        let cfg = reference_train_config(4, 8, 3000, 3);
        let a = prepare_reference_model(&data, &cfg).unwrap();
        let b = prepare_reference_model(&data, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.is_finite());
        let nll = crate::training::negative_log_likelihood(&a, &data, EvalMethod::Exact, &Default::default(), &RngStream::new(0))
            .unwrap()
            .unwrap();
        assert!(nll < 4.0 * 2f64.ln(), "{nll}");
    }
}
