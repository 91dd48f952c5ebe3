//! Plain stochastic gradient ascent on the log-likelihood.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, RbmError, Result};
use crate::estimators::{chain_gradient, pcd_gradient, pt_gradient, GradientEstimate, Weighting};
use crate::exact::ExactOracle;
use crate::rbm::{BinaryVector, GradientTriple, RbmParams};
use crate::rng::{tags, RngStream};
use crate::samplers::{ais_log_partition, AisConfig, ChainState, PtEnsemble};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Cd,
    PopCd,
    PopCdLoo,
    PopCdHidden,
    Pcd,
    Pt,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cd => "cd",
            Algorithm::PopCd => "pop_cd",
            Algorithm::PopCdLoo => "pop_cd_loo",
            Algorithm::PopCdHidden => "pop_cd_hidden",
            Algorithm::Pcd => "pcd",
            Algorithm::Pt => "pt",
        }
    }

    /// The weighting scheme of the k-step estimators.
    pub fn weighting(self) -> Option<Weighting> {
        match self {
            Algorithm::Cd => Some(Weighting::Uniform),
            Algorithm::PopCd => Some(Weighting::Visible),
            Algorithm::PopCdLoo => Some(Weighting::LeaveOneOut),
            Algorithm::PopCdHidden => Some(Weighting::Hidden),
            Algorithm::Pcd | Algorithm::Pt => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMethod {
    Exact,
    Ais,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Init {
    /// Weights from N(0, 0.01²), biases zero.
    #[serde(rename = "gaussian_0_01")]
    Gaussian001,
    #[serde(rename = "zeros")]
    Zeros,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub num_hidden: usize,
    pub k: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub eval_interval: usize,
    pub eval_method: EvalMethod,
    /// Temperatures per ensemble; PT only.
    pub pt_chains: usize,
    pub seed: u64,
    pub init: Init,
    /// Reshuffle the dataset at every epoch instead of cycling fixed slices.
    pub shuffle: bool,
    /// Fill `wall_clock_ms`. Off by default so that logs are reproducible.
    pub record_timing: bool,
    pub ais_particles: usize,
    pub ais_intermediate: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Cd,
            num_hidden: 16,
            k: 1,
            learning_rate: 0.01,
            batch_size: 32,
            iterations: 10_000,
            eval_interval: 100,
            eval_method: EvalMethod::Exact,
            pt_chains: 10,
            seed: 0,
            init: Init::Gaussian001,
            shuffle: false,
            record_timing: false,
            ais_particles: 128,
            ais_intermediate: 10_000,
        }
    }
}

impl TrainConfig {
    pub fn ais(&self) -> AisConfig {
        AisConfig::new(self.ais_particles, self.ais_intermediate)
    }

    /// Checks the configuration against a dataset of `num_samples` vectors
    /// of dimension `num_visible`.
    pub fn validate(&self, num_samples: usize, num_visible: usize) -> Result<()> {
        if num_samples == 0 || num_visible == 0 {
            return Err(invalid("the training data is empty"));
        }
        if self.num_hidden == 0 {
            return Err(invalid("num_hidden must be at least 1"));
        }
        if self.k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(invalid("learning_rate must be positive and finite"));
        }
        if self.batch_size == 0 || num_samples % self.batch_size != 0 {
            return Err(invalid(format!(
                "batch_size {} must divide the dataset size {num_samples}",
                self.batch_size
            )));
        }
        if self.eval_interval == 0 {
            return Err(invalid("eval_interval must be at least 1"));
        }
        let min_batch = match self.algorithm {
            Algorithm::PopCd | Algorithm::PopCdHidden => 2,
            Algorithm::PopCdLoo => 3,
            _ => 1,
        };
        if self.batch_size < min_batch {
            return Err(invalid(format!(
                "{} needs batch_size of at least {min_batch}",
                self.algorithm.name()
            )));
        }
        if self.algorithm == Algorithm::Pt && self.pt_chains < 2 {
            return Err(invalid("pt_chains must be at least 2"));
        }
        match self.eval_method {
            EvalMethod::Exact => {
                let small = num_visible.min(self.num_hidden);
                let oracle = ExactOracle::default();
                if small > oracle.limit {
                    return Err(RbmError::Capacity {
                        units: small,
                        limit: oracle.limit,
                    });
                }
            }
            EvalMethod::Ais => {
                self.ais().betas()?;
            }
            EvalMethod::None => {}
        }
        Ok(())
    }
}

/// One evaluation record.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainLogRow {
    pub iteration: usize,
    /// Negative log-likelihood per training sample; `None` without evaluation.
    pub neg_log_likelihood: Option<f64>,
    /// Mean effective sample size of the estimates since the previous row.
    pub ess: Option<f64>,
    /// Largest log importance weight since the previous row.
    pub log_weight_max: Option<f64>,
    /// Training time so far, excluding evaluation.
    pub wall_clock_ms: Option<f64>,
}

pub fn init_params<R: Rng + ?Sized>(num_visible: usize, num_hidden: usize, init: Init, rng: &mut R) -> Result<RbmParams> {
    if num_visible == 0 || num_hidden == 0 {
        return Err(invalid("both layers need at least one unit"));
    }
    let weights = match init {
        Init::Zeros => vec![0.0; num_visible * num_hidden],
        Init::Gaussian001 => {
            let normal = Normal::new(0.0, 0.01).expect("valid normal");
            (0..num_visible * num_hidden).map(|_| normal.sample(rng)).collect()
        }
    };
    RbmParams::new(weights, vec![0.0; num_visible], vec![0.0; num_hidden])
}

/// `θ + α·grad`.
pub fn sgd_step(params: &RbmParams, grad: &GradientTriple, alpha: f64) -> Result<RbmParams> {
    grad.check_shape(params)?;
    let mut next = params.clone();
    next.add_scaled(grad, alpha);
    Ok(next)
}

/// Negative log-likelihood per sample, exactly or with an AIS estimate of
/// `log Z`.
pub fn negative_log_likelihood(params: &RbmParams, data: &[BinaryVector], method: EvalMethod, ais: &AisConfig, rng: &RngStream) -> Result<Option<f64>> {
    let log_z = match method {
        EvalMethod::None => return Ok(None),
        EvalMethod::Exact => ExactOracle::default().log_partition(params)?,
        EvalMethod::Ais => ais_log_partition(params, ais, rng)?.log_z,
    };
    let mut total = 0.0;
    for v in data {
        total += params.log_unnormalized_marginal_visible(v)?;
    }
    Ok(Some(log_z - total / data.len() as f64))
}

#[derive(Clone, Debug)]
enum Persistent {
    None,
    Chains(Vec<ChainState>),
    Ensembles(Vec<PtEnsemble>),
}

/// Stateful training loop; [`train`] drives it to completion.
#[derive(Clone, Debug)]
pub struct Trainer {
    cfg: TrainConfig,
    data: Vec<BinaryVector>,
    epoch_data: Vec<BinaryVector>,
    params: RbmParams,
    persistent: Persistent,
    iteration: usize,
    stream: RngStream,
    ess_sum: f64,
    ess_count: usize,
    log_weight_max: f64,
    train_ms: f64,
}

impl Trainer {
    /// Starts from `cfg.init`, or from `warm_start` when given.
    pub fn new(data: &[BinaryVector], cfg: TrainConfig, warm_start: Option<RbmParams>) -> Result<Self> {
        let m = data.first().map_or(0, BinaryVector::len);
        cfg.validate(data.len(), m)?;
        data.iter().try_for_each(|v| check_len("training sample", m, v.len()))?;
        let stream = RngStream::new(cfg.seed);
        let params = match warm_start {
            Some(p) => {
                check_len("warm-start visible layer", m, p.num_visible())?;
                check_len("warm-start hidden layer", cfg.num_hidden, p.num_hidden())?;
                p
            }
            None => init_params(m, cfg.num_hidden, cfg.init, &mut stream.child(tags::INIT).rng(0, 0))?,
        };
        let first = &data[..cfg.batch_size];
        let n = cfg.num_hidden;
        let persistent = match cfg.algorithm {
            Algorithm::Pcd => Persistent::Chains(first.iter().map(|v| ChainState::from_visible(v.clone(), n)).collect()),
            Algorithm::Pt => Persistent::Ensembles(
                first
                    .iter()
                    .map(|v| PtEnsemble::uniform(cfg.pt_chains, &ChainState::from_visible(v.clone(), n)))
                    .collect::<Result<_>>()?,
            ),
            _ => Persistent::None,
        };
        Ok(Self {
            epoch_data: data.to_vec(),
            data: data.to_vec(),
            params,
            persistent,
            iteration: 0,
            stream,
            ess_sum: 0.0,
            ess_count: 0,
            log_weight_max: f64::NEG_INFINITY,
            train_ms: 0.0,
            cfg,
        })
    }

    pub fn params(&self) -> &RbmParams {
        &self.params
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn data(&self) -> &[BinaryVector] {
        &self.data
    }

    fn batch_range(&mut self) -> std::ops::Range<usize> {
        let l = self.cfg.batch_size;
        let per_epoch = self.data.len() / l;
        let slot = self.iteration % per_epoch;
        if self.cfg.shuffle && slot == 0 {
            let epoch = (self.iteration / per_epoch) as u64;
            self.epoch_data.clone_from(&self.data);
            let mut r = self.stream.child(tags::SHUFFLE).rng(epoch, 0);
            self.epoch_data.shuffle(&mut r);
        }
        slot * l..(slot + 1) * l
    }

    /// One gradient-ascent step; returns the estimate that was applied.
    pub fn step(&mut self) -> Result<GradientEstimate> {
        let started = self.cfg.record_timing.then(std::time::Instant::now);
        let range = self.batch_range();
        let batch = &self.epoch_data[range];
        let rng = self.stream.child(tags::TRAIN).for_iteration(self.iteration as u64);
        let est = match (&mut self.persistent, self.cfg.algorithm.weighting()) {
            (Persistent::None, Some(w)) => chain_gradient(&self.params, batch, self.cfg.k, w, &rng)?,
            (Persistent::Chains(chains), _) => pcd_gradient(&self.params, chains, batch, &rng)?,
            (Persistent::Ensembles(ens), _) => pt_gradient(&self.params, ens, batch, &rng)?,
            (Persistent::None, None) => unreachable!("persistent algorithms always carry state"),
        };
        self.params.add_scaled(&est.gradient, self.cfg.learning_rate);
        self.iteration += 1;
        if !self.params.is_finite() {
            return Err(RbmError::Diverged {
                iteration: self.iteration,
            });
        }
        self.ess_sum += est.effective_sample_size;
        self.ess_count += 1;
        self.log_weight_max = self.log_weight_max.max(est.log_weight_max);
        if let Some(t) = started {
            self.train_ms += t.elapsed().as_secs_f64() * 1e3;
        }
        Ok(est)
    }

    /// Evaluates the current parameters and resets the interval statistics.
    pub fn log_row(&mut self) -> Result<TrainLogRow> {
        let eval_rng = self.stream.child(tags::EVAL).for_iteration(self.iteration as u64);
        let nll = negative_log_likelihood(&self.params, &self.data, self.cfg.eval_method, &self.cfg.ais(), &eval_rng)?;
        let (ess, lwm) = if self.ess_count == 0 {
            (None, None)
        } else {
            (Some(self.ess_sum / self.ess_count as f64), Some(self.log_weight_max))
        };
        self.ess_sum = 0.0;
        self.ess_count = 0;
        self.log_weight_max = f64::NEG_INFINITY;
        Ok(TrainLogRow {
            iteration: self.iteration,
            neg_log_likelihood: nll,
            ess,
            log_weight_max: lwm,
            wall_clock_ms: self.cfg.record_timing.then_some(self.train_ms),
        })
    }

    /// Runs the remaining iterations, logging at iteration 0 (if not yet
    /// passed) and at every multiple of `eval_interval`.
    pub fn run(&mut self) -> Result<Vec<TrainLogRow>> {
        let mut log = Vec::new();
        if self.iteration == 0 {
            log.push(self.log_row()?);
        }
        while self.iteration < self.cfg.iterations {
            self.step()?;
            if self.iteration % self.cfg.eval_interval == 0 {
                log.push(self.log_row()?);
            }
        }
        Ok(log)
    }

    pub fn into_params(self) -> RbmParams {
        self.params
    }
}

/// Trains from `cfg.init` and returns the final parameters and the log.
pub fn train(data: &[BinaryVector], cfg: &TrainConfig) -> Result<(RbmParams, Vec<TrainLogRow>)> {
    train_from(data, cfg, None)
}

pub fn train_from(data: &[BinaryVector], cfg: &TrainConfig, warm_start: Option<RbmParams>) -> Result<(RbmParams, Vec<TrainLogRow>)> {
    let mut trainer = Trainer::new(data, cfg.clone(), warm_start)?;
    let log = trainer.run()?;
    Ok((trainer.into_params(), log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_bits;

    fn toy_data(m: usize, count: usize) -> Vec<BinaryVector> {
        (0..count).map(|i| random_bits(m, 500 + i as u64)).collect()
    }

    fn cfg(algorithm: Algorithm) -> TrainConfig {
        TrainConfig {
            algorithm,
            num_hidden: 4,
            batch_size: 4,
            iterations: 60,
            eval_interval: 20,
            learning_rate: 0.05,
            pt_chains: 3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn init_params_cases() {
        let mut rng = RngStream::new(1).rng(0, 0);
        let z = init_params(3, 2, Init::Zeros, &mut rng).unwrap();
        assert_eq!(z, RbmParams::zeros(3, 2).unwrap());
        let g = init_params(100, 100, Init::Gaussian001, &mut rng).unwrap();
        let mean = g.weights().iter().sum::<f64>() / 1e4;
        let sd = (g.weights().iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (1e4 - 1.0)).sqrt();
        assert!((0.0097..=0.0103).contains(&sd), "{sd}");
        assert!(g.visible_bias().iter().chain(g.hidden_bias()).all(|&b| b == 0.0));
        let again = init_params(100, 100, Init::Gaussian001, &mut RngStream::new(1).rng(0, 0)).unwrap();
        let first = init_params(100, 100, Init::Gaussian001, &mut RngStream::new(1).rng(0, 0)).unwrap();
        assert_eq!(again, first);
        assert!(init_params(0, 2, Init::Zeros, &mut rng).is_err());
    }

    #[test]
    fn sgd_step_cases() {
        let p = crate::testutil::random_params(3, 2, 1.0, 3);
        assert_eq!(sgd_step(&p, &GradientTriple::zeros_like(&p), 0.3).unwrap(), p);
        let neg = GradientTriple::from_flat(3, 2, &p.flat().map(|x| -x).collect::<Vec<_>>()).unwrap();
        assert!(sgd_step(&p, &neg, 1.0).unwrap().flat().all(|x| x == 0.0));
        let mut q = RbmParams::zeros(1, 1).unwrap();
        q.flat_set(0, 0.5);
        let g = GradientTriple::from_flat(1, 1, &[0.2, 0.0, 0.0]).unwrap();
        assert!((sgd_step(&q, &g, 0.1).unwrap().weight(0, 0) - 0.52).abs() < 1e-15);
        assert!(sgd_step(&q, &GradientTriple::zeros(2, 1), 0.1).is_err());
    }

    #[test]
    fn zero_iterations_log_only_the_start() {
        let data = toy_data(5, 8);
        let c = TrainConfig {
            iterations: 0,
            init: Init::Zeros,
            ..cfg(Algorithm::Cd)
        };
        let (p, log) = train(&data, &c).unwrap();
        assert_eq!(p, RbmParams::zeros(5, 4).unwrap());
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].iteration, 0);
        assert!((log[0].neg_log_likelihood.unwrap() - 5.0 * 2f64.ln()).abs() < 1e-12);
        assert_eq!(log[0].ess, None);
    }

    #[test]
    fn every_algorithm_trains_reproducibly() {
        let data = toy_data(6, 8);
        for alg in [Algorithm::Cd, Algorithm::PopCd, Algorithm::PopCdLoo, Algorithm::PopCdHidden, Algorithm::Pcd, Algorithm::Pt] {
            let c = cfg(alg);
            let (p1, log1) = train(&data, &c).unwrap();
            let (p2, log2) = train(&data, &c).unwrap();
            assert_eq!(p1, p2, "{alg:?}");
            assert_eq!(log1, log2);
            assert!(p1.is_finite());
            let iters: Vec<usize> = log1.iter().map(|r| r.iteration).collect();
            assert_eq!(iters, vec![0, 20, 40, 60]);
            assert!(log1.iter().all(|r| r.neg_log_likelihood.unwrap() >= 0.0));
            assert!(log1.iter().all(|r| r.wall_clock_ms.is_none()));
            let ess = log1[1].ess.unwrap();
            assert!((1.0..=4.0).contains(&ess));
        }
    }

    #[test]
    fn training_lowers_the_negative_log_likelihood() {
        let data = toy_data(6, 8);
        let c = TrainConfig {
            iterations: 400,
            eval_interval: 400,
            learning_rate: 0.1,
            ..cfg(Algorithm::PopCd)
        };
        let (_, log) = train(&data, &c).unwrap();
        assert!(log[1].neg_log_likelihood.unwrap() < log[0].neg_log_likelihood.unwrap() - 0.3);
    }

    #[test]
    fn warm_start_and_shuffle() {
        let data = toy_data(6, 8);
        let c = cfg(Algorithm::Cd);
        let (mid, _) = train(&data, &TrainConfig { iterations: 30, ..c.clone() }).unwrap();
        let (p, _) = train_from(&data, &TrainConfig { iterations: 30, ..c.clone() }, Some(mid.clone())).unwrap();
        assert_ne!(p, mid);
        assert!(train_from(&data, &c, Some(RbmParams::zeros(6, 3).unwrap())).is_err());

        let shuffled = TrainConfig { shuffle: true, ..c.clone() };
        let (a, _) = train(&data, &shuffled).unwrap();
        let (b, _) = train(&data, &shuffled).unwrap();
        let (plain, _) = train(&data, &c).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, plain);
    }

    #[test]
    fn validation_errors() {
        let data = toy_data(6, 8);
        let bad = [
            TrainConfig { batch_size: 3, ..cfg(Algorithm::Cd) },
            TrainConfig { k: 0, ..cfg(Algorithm::Cd) },
            TrainConfig { learning_rate: 0.0, ..cfg(Algorithm::Cd) },
            TrainConfig { eval_interval: 0, ..cfg(Algorithm::Cd) },
            TrainConfig { batch_size: 1, ..cfg(Algorithm::PopCd) },
            TrainConfig { batch_size: 2, ..cfg(Algorithm::PopCdLoo) },
            TrainConfig { pt_chains: 1, ..cfg(Algorithm::Pt) },
            TrainConfig { num_hidden: 0, ..cfg(Algorithm::Cd) },
        ];
        for c in bad {
            assert!(matches!(train(&data, &c), Err(RbmError::InvalidArgument(_))), "{c:?}");
        }
        let wide = toy_data(30, 4);
        let c = TrainConfig { num_hidden: 30, ..cfg(Algorithm::Cd) };
        assert!(matches!(train(&wide, &c), Err(RbmError::Capacity { .. })));
        assert!(train(&[], &cfg(Algorithm::Cd)).is_err());
    }

    #[test]
    fn timing_is_opt_in() {
        let data = toy_data(6, 8);
        let c = TrainConfig { record_timing: true, eval_method: EvalMethod::None, ..cfg(Algorithm::Cd) };
        let (_, log) = train(&data, &c).unwrap();
        assert!(log.iter().all(|r| r.wall_clock_ms.is_some() && r.neg_log_likelihood.is_none()));
        let t: Vec<f64> = log.iter().map(|r| r.wall_clock_ms.unwrap()).collect();
        assert!(t.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn config_parses_from_toml_names() {
        let c: TrainConfig = from_pairs("algorithm = \"pop_cd_loo\"\ninit = \"gaussian_0_01\"\neval_method = \"ais\"");
        assert_eq!(c.algorithm, Algorithm::PopCdLoo);
        assert_eq!(c.init, Init::Gaussian001);
        assert_eq!(c.eval_method, EvalMethod::Ais);
    }

    // minimal key = "value" reader so the core crate needs no TOML dependency
    fn from_pairs(text: &str) -> TrainConfig {
        use serde::de::value::{Error, MapDeserializer};
        let pairs = text.lines().map(|l| {
            let (k, v) = l.split_once(" = ").unwrap();
            (k.to_string(), v.trim_matches('"').to_string())
        });
        TrainConfig::deserialize(MapDeserializer::<_, Error>::new(pairs)).unwrap()
    }
}
