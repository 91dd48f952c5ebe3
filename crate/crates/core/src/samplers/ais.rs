use rand::Rng;

use super::gibbs::sample_into;
use crate::error::{invalid, Result};
use crate::math::{logistic_into, logistic_with_softplus_sum, softplus};
use crate::rbm::{dot_bits, RbmParams};
use crate::rng::RngStream;

/// Spacing of the intermediate inverse temperatures.
#[derive(Clone, Debug, PartialEq)]
pub enum AisSchedule {
    /// `β_s = s / S`.
    Uniform,
    /// Explicit ladder of length `S + 1`, from exactly 0 to exactly 1.
    Custom(Vec<f64>),
}

/// Distribution at `β = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AisBase {
    /// The bias-only model `∝ e^{vᵀb + cᵀh}`; the path tempers only the
    /// coupling term, `p_β ∝ e^{β vᵀWh + vᵀb + cᵀh}`.
    #[default]
    Biases,
    /// The uniform distribution; the path tempers the whole energy,
    /// `p_β ∝ e^{-βE}`.
    Uniform,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AisConfig {
    pub num_particles: usize,
    pub num_intermediate: usize,
    pub schedule: AisSchedule,
    pub base: AisBase,
}

impl Default for AisConfig {
    fn default() -> Self {
        Self::new(128, 10_000)
    }
}

impl AisConfig {
    pub fn new(num_particles: usize, num_intermediate: usize) -> Self {
        Self {
            num_particles,
            num_intermediate,
            schedule: AisSchedule::Uniform,
            base: AisBase::default(),
        }
    }

    /// The 512-particle, 50000-distribution setting used for large models.
    pub fn full_scale() -> Self {
        Self::new(512, 50_000)
    }

    pub fn betas(&self) -> Result<Vec<f64>> {
        if self.num_particles == 0 || self.num_intermediate == 0 {
            return Err(invalid("AIS needs at least one particle and one intermediate distribution"));
        }
        let s = self.num_intermediate;
        match &self.schedule {
            AisSchedule::Uniform => Ok((0..=s).map(|i| i as f64 / s as f64).collect()),
            AisSchedule::Custom(betas) => {
                if betas.len() != s + 1 {
                    return Err(invalid(format!("custom AIS schedule needs {} entries", s + 1)));
                }
                if betas[0] != 0.0 || betas[s] != 1.0 {
                    return Err(invalid("AIS schedule must start at 0 and end at 1"));
                }
                if betas.windows(2).any(|w| !(w[1] >= w[0])) {
                    return Err(invalid("AIS schedule must be nondecreasing"));
                }
                Ok(betas.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AisEstimate {
    pub log_z: f64,
    /// Delta-method standard error of `log_z`; NaN for a single particle.
    pub std_error: f64,
    pub log_weights: Vec<f64>,
}

impl AisEstimate {
    fn from_log_weights(log_z0: f64, log_weights: Vec<f64>) -> Self {
        let n = log_weights.len() as f64;
        let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = log_weights.iter().map(|&l| (l - max).exp()).collect();
        let mean = w.iter().sum::<f64>() / n;
        let std_error = if w.len() < 2 {
            f64::NAN
        } else {
            let var = w.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt() / mean
        };
        Self {
            log_z: log_z0 + max + mean.ln(),
            std_error,
            log_weights,
        }
    }
}

/// Annealed importance sampling estimate of `log Z`.
///
/// Particle `i` draws from `rng.sample_rng(i)`; particles are independent
/// and may run concurrently.
pub fn ais_log_partition(params: &RbmParams, cfg: &AisConfig, rng: &RngStream) -> Result<AisEstimate> {
    let betas = cfg.betas()?;
    let b = params.visible_bias();
    let c = params.hidden_bias();
    let log_z0 = match cfg.base {
        AisBase::Biases => b.iter().chain(c).map(|&x| softplus(x)).sum(),
        AisBase::Uniform => (params.num_visible() + params.num_hidden()) as f64 * std::f64::consts::LN_2,
    };
    let particle = |i: usize| particle_log_weight(params, cfg.base, &betas, &mut rng.sample_rng(i as u64));
    #[cfg(feature = "parallel")]
    let log_weights: Vec<f64> = {
        use rayon::prelude::*;
        (0..cfg.num_particles).into_par_iter().map(particle).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let log_weights: Vec<f64> = (0..cfg.num_particles).map(particle).collect();
    Ok(AisEstimate::from_log_weights(log_z0, log_weights))
}

fn particle_log_weight<R: Rng + ?Sized>(params: &RbmParams, base: AisBase, betas: &[f64], rng: &mut R) -> f64 {
    let m = params.num_visible();
    let n = params.num_hidden();
    let b = params.visible_bias();
    let c = params.hidden_bias();
    // (weight scale, bias scale) at inverse temperature β
    let scales = |beta: f64| match base {
        AisBase::Biases => (beta, 1.0),
        AisBase::Uniform => (beta, beta),
    };

    let mut v = vec![0u8; m];
    let mut h = vec![0u8; n];
    let mut raw = vec![0.0; n];
    let mut act = vec![0.0; n];
    let mut probs = vec![0.0; n];
    let mut v_act = vec![0.0; m];
    let mut v_prob = vec![0.0; m];

    let (_, bs0) = scales(0.0);
    for (va, &bj) in v_act.iter_mut().zip(b) {
        *va = bs0 * bj;
    }
    logistic_into(&v_act, &mut v_prob);
    sample_into(&v_prob, rng, &mut v);

    let mut log_w = 0.0;
    let steps = betas.len() - 1;
    for s in 0..steps {
        // raw = Wᵀv
        raw.fill(0.0);
        for (j, &bit) in v.iter().enumerate() {
            if bit != 0 {
                for (r, &w) in raw.iter_mut().zip(params.weight_row(j)) {
                    *r += w;
                }
            }
        }
        let vb = dot_bits(&v, b);
        let (ws, bs) = scales(betas[s]);
        for ((a, &r), &ci) in act.iter_mut().zip(&raw).zip(c) {
            *a = bs * ci + ws * r;
        }
        let lp_cur = bs * vb + logistic_with_softplus_sum(&act, &mut probs);
        let (ws, bs) = scales(betas[s + 1]);
        for ((a, &r), &ci) in act.iter_mut().zip(&raw).zip(c) {
            *a = bs * ci + ws * r;
        }
        let lp_next = bs * vb + logistic_with_softplus_sum(&act, &mut probs);
        log_w += lp_next - lp_cur;

        if s + 1 < steps {
            // one Gibbs alternation at β_{s+1}; probs already hold p_β(h|v)
            sample_into(&probs, rng, &mut h);
            params.visible_activation_into(&h, ws, bs, &mut v_act);
            logistic_into(&v_act, &mut v_prob);
            sample_into(&v_prob, rng, &mut v);
        }
    }
    log_w
}
