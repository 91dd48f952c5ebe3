//! Bars-and-stripes playground for the browser.
//!
//! Everything runs single-threaded. The `Demo` methods exported to
//! JavaScript are thin wrappers over the plain functions below, which the
//! native tests call directly.

use popcd::{
    generate_bars_and_stripes, measure_bias_variance, reference_gradient, train_from, Algorithm, BinaryVector, EstimatorConfig,
    EvalMethod, GroundTruthConfig, RbmParams, RngStream, TrainConfig,
};
use wasm_bindgen::prelude::*;

pub const NUM_HIDDEN: usize = 16;

pub fn parse_algorithm(name: &str) -> Result<Algorithm, String> {
    [
        Algorithm::Cd,
        Algorithm::PopCd,
        Algorithm::PopCdLoo,
        Algorithm::PopCdHidden,
        Algorithm::Pcd,
        Algorithm::Pt,
    ]
    .into_iter()
    .find(|a| a.name() == name)
    .ok_or_else(|| format!("unknown algorithm {name:?}"))
}

/// Model state shared by the interactive operations.
pub struct Session {
    data: Vec<BinaryVector>,
    params: Option<RbmParams>,
}

impl Session {
    pub fn new(side: usize) -> Result<Self, String> {
        if !(2..=4).contains(&side) {
            return Err("side must be 2, 3 or 4".into());
        }
        let data = generate_bars_and_stripes(side).map_err(|e| e.to_string())?.into_samples();
        Ok(Self { data, params: None })
    }

    pub fn num_samples(&self) -> usize {
        self.data.len()
    }

    pub fn params(&self) -> Option<&RbmParams> {
        self.params.as_ref()
    }

    /// Trains from scratch and keeps the result. Returns `(iteration, NLL)`
    /// pairs flattened into one vector.
    pub fn train(&mut self, algorithm: &str, k: usize, learning_rate: f64, iterations: usize, eval_interval: usize, seed: u32) -> Result<Vec<f64>, String> {
        let cfg = TrainConfig {
            algorithm: parse_algorithm(algorithm)?,
            num_hidden: NUM_HIDDEN,
            k,
            learning_rate,
            batch_size: self.data.len().min(32),
            iterations,
            eval_interval,
            eval_method: EvalMethod::Exact,
            seed: seed.into(),
            ..TrainConfig::default()
        };
        let (params, rows) = train_from(&self.data, &cfg, None).map_err(|e| e.to_string())?;
        self.params = Some(params);
        Ok(rows
            .iter()
            .flat_map(|r| [r.iteration as f64, r.neg_log_likelihood.unwrap_or(f64::NAN)])
            .collect())
    }

    fn trained(&self) -> Result<&RbmParams, String> {
        self.params.as_ref().ok_or_else(|| "train a model first".to_string())
    }

    /// `[bias_cd, variance_cd, bias_pop_cd, variance_pop_cd]` per parameter
    /// around the exact gradient of the current model.
    pub fn bias_variance(&self, k: usize, num_estimates: usize, seed: u32) -> Result<Vec<f64>, String> {
        let params = self.trained()?;
        let err = |e: popcd::RbmError| e.to_string();
        let (truth, label) = reference_gradient(params, &self.data, &GroundTruthConfig::default(), &RngStream::new(seed.into())).map_err(err)?;
        let mut out = Vec::with_capacity(4);
        for algorithm in [Algorithm::Cd, Algorithm::PopCd] {
            let cfg = EstimatorConfig {
                algorithm,
                k,
                batch_size: self.data.len().min(32),
            };
            let rng = RngStream::new(seed.into()).child(u64::from(algorithm == Algorithm::PopCd));
            let r = measure_bias_variance(params, &self.data, &cfg, num_estimates, &truth, &label, &rng).map_err(err)?;
            out.extend([r.bias_per_param, r.variance_per_param]);
        }
        Ok(out)
    }

    /// Self-normalized pop-CD-k weights of one chain per training sample,
    /// with the effective sample size as the last element.
    pub fn importance_weights(&self, k: usize, seed: u32) -> Result<Vec<f64>, String> {
        if k == 0 {
            return Err("k must be at least 1".into());
        }
        let log_w = log_weights(self.trained()?, &self.data, k, &RngStream::new(seed.into()))?;
        let mut w = popcd::self_normalized_weights(&log_w);
        w.push(popcd::effective_sample_size(&log_w));
        Ok(w)
    }
}

fn log_weights(params: &RbmParams, data: &[BinaryVector], k: usize, rng: &RngStream) -> Result<Vec<f64>, String> {
    data.iter()
        .enumerate()
        .map(|(i, v0)| {
            let mut r = rng.sample_rng(i as u64);
            let mut v = v0.clone();
            let mut h = BinaryVector::zeros(params.num_hidden());
            for _ in 0..k {
                h = popcd::sample_layer(&params.hidden_conditional(&v).map_err(|e| e.to_string())?, &mut r);
                v = popcd::sample_layer(&params.visible_conditional(&h).map_err(|e| e.to_string())?, &mut r);
            }
            popcd::log_importance_weight(params, &v, &h).map_err(|e| e.to_string())
        })
        .collect()
}

#[wasm_bindgen]
pub struct Demo(Session);

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(side: usize) -> Result<Demo, JsError> {
        Session::new(side).map(Demo).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = numVisible)]
    pub fn num_visible(&self) -> usize {
        self.0.data[0].len()
    }

    pub fn train(&mut self, algorithm: &str, k: usize, learning_rate: f64, iterations: usize, eval_interval: usize, seed: u32) -> Result<Vec<f64>, JsError> {
        self.0
            .train(algorithm, k, learning_rate, iterations, eval_interval, seed)
            .map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = biasVariance)]
    pub fn bias_variance(&self, k: usize, num_estimates: usize, seed: u32) -> Result<Vec<f64>, JsError> {
        self.0.bias_variance(k, num_estimates, seed).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = importanceWeights)]
    pub fn importance_weights(&self, k: usize, seed: u32) -> Result<Vec<f64>, JsError> {
        self.0.importance_weights(k, seed).map_err(|e| JsError::new(&e))
    }

    /// Weight matrix, row-major by visible unit; empty before training.
    pub fn weights(&self) -> Vec<f64> {
        self.0.params().map(|p| p.weights().to_vec()).unwrap_or_default()
    }
}
