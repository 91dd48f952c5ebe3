use rand::Rng;

use super::gibbs::{ChainState, Gibbs};
use crate::error::{invalid, Result};
use crate::exact::accumulate_visible_statistic;
use crate::math::logistic_into;
use crate::rbm::{BinaryVector, GradientTriple, RbmParams};
use crate::rng::RngStream;

/// Swap counters for one adjacent temperature pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SwapStats {
    pub attempts: u64,
    pub accepts: u64,
}

impl SwapStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            f64::NAN
        } else {
            self.accepts as f64 / self.attempts as f64
        }
    }
}

/// Replica chains at inverse temperatures `0 = β_1 < ... < β_T = 1`, each
/// targeting `p_β(v, h) ∝ e^{-βE(v, h)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PtEnsemble {
    betas: Vec<f64>,
    states: Vec<ChainState>,
    swaps: Vec<SwapStats>,
}

impl PtEnsemble {
    /// Betas must be nondecreasing in `[0, 1]`, start at 0 and end at 1.
    pub fn new(betas: Vec<f64>, states: Vec<ChainState>) -> Result<Self> {
        if betas.len() < 2 {
            return Err(invalid("parallel tempering needs at least two chains"));
        }
        if betas.len() != states.len() {
            return Err(invalid("one chain state per temperature is required"));
        }
        if betas[0] != 0.0 || *betas.last().unwrap() != 1.0 {
            return Err(invalid("the temperature ladder must run from β = 0 to β = 1"));
        }
        if betas.windows(2).any(|w| w[1] < w[0]) || betas.iter().any(|b| !(0.0..=1.0).contains(b)) {
            return Err(invalid("inverse temperatures must be sorted within [0, 1]"));
        }
        let swaps = vec![SwapStats::default(); betas.len() - 1];
        Ok(Self { betas, states, swaps })
    }

    /// `num_chains` uniformly spaced betas, every chain starting at `start`.
    pub fn uniform(num_chains: usize, start: &ChainState) -> Result<Self> {
        if num_chains < 2 {
            return Err(invalid("parallel tempering needs at least two chains"));
        }
        let last = (num_chains - 1) as f64;
        let betas = (0..num_chains).map(|t| t as f64 / last).collect();
        Self::new(betas, vec![start.clone(); num_chains])
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn states(&self) -> &[ChainState] {
        &self.states
    }

    /// The `β = 1` chain.
    pub fn model_state(&self) -> &ChainState {
        self.states.last().expect("ensembles are nonempty")
    }

    /// Per adjacent pair, lowest temperature pair first.
    pub fn swap_stats(&self) -> &[SwapStats] {
        &self.swaps
    }

    fn check(&self, params: &RbmParams) -> Result<()> {
        self.states.iter().try_for_each(|s| s.check(params))
    }

    /// Advances every chain once, then attempts one swap per adjacent pair
    /// from low to high beta.
    pub fn step<R: Rng + ?Sized>(&mut self, params: &RbmParams, rng: &mut R) -> Result<()> {
        self.check(params)?;
        let mut g = Gibbs::new(params);
        self.step_with(params, &mut g, rng);
        Ok(())
    }

    pub(crate) fn step_with<R: Rng + ?Sized>(&mut self, params: &RbmParams, g: &mut Gibbs, rng: &mut R) {
        for (state, &beta) in self.states.iter_mut().zip(&self.betas) {
            g.v.copy_from_slice(state.visible.as_slice());
            g.alternate(params, beta, beta, false, rng);
            state.visible.as_mut_slice().copy_from_slice(&g.v);
            state.hidden.as_mut_slice().copy_from_slice(&g.h);
        }
        for a in 0..self.swaps.len() {
            let e_a = params.energy_raw(self.states[a].visible.as_slice(), self.states[a].hidden.as_slice());
            let e_b = params.energy_raw(self.states[a + 1].visible.as_slice(), self.states[a + 1].hidden.as_slice());
            let log_ratio = (self.betas[a + 1] - self.betas[a]) * (e_b - e_a);
            let u: f64 = rng.random();
            let stats = &mut self.swaps[a];
            stats.attempts += 1;
            if log_ratio >= 0.0 || u < log_ratio.exp() {
                stats.accepts += 1;
                self.states.swap(a, a + 1);
            }
        }
    }
}

/// One parallel-tempering sweep; see [`PtEnsemble::step`].
pub fn pt_step<R: Rng + ?Sized>(params: &RbmParams, ensemble: &mut PtEnsemble, rng: &mut R) -> Result<()> {
    ensemble.step(params, rng)
}

/// Settings for the sampled ground-truth negative phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundTruthConfig {
    pub pt_chains: usize,
    pub burn_in: usize,
    pub num_samples: usize,
}

impl Default for GroundTruthConfig {
    fn default() -> Self {
        Self {
            pt_chains: 20,
            burn_in: 5000,
            num_samples: 200_000,
        }
    }
}

/// Averages `(p(h=1|v) ⊗ v, v, p(h=1|v))` over the `β = 1` chain of one
/// long parallel-tempering run started from a uniformly random state.
pub fn ground_truth_negative_phase(params: &RbmParams, cfg: &GroundTruthConfig, rng: &RngStream) -> Result<GradientTriple> {
    if cfg.num_samples == 0 {
        return Err(invalid("the ground-truth estimate needs at least one sample"));
    }
    let m = params.num_visible();
    let n = params.num_hidden();
    let mut r = rng.rng(0, 0);
    let start_bits = (0..m).map(|_| r.random_range(0..2u8)).collect();
    let start = ChainState::from_visible(BinaryVector::new(start_bits)?, n);
    let mut ensemble = PtEnsemble::uniform(cfg.pt_chains, &start)?;
    let mut g = Gibbs::new(params);
    for _ in 0..cfg.burn_in {
        ensemble.step_with(params, &mut g, &mut r);
    }
    let mut acc = GradientTriple::zeros(m, n);
    let mut act = vec![0.0; n];
    let mut probs = vec![0.0; n];
    for _ in 0..cfg.num_samples {
        ensemble.step_with(params, &mut g, &mut r);
        let v = ensemble.model_state().visible.as_slice();
        params.hidden_activation_into(v, 1.0, 1.0, &mut act);
        logistic_into(&act, &mut probs);
        accumulate_visible_statistic(&mut acc, v, &probs, 1.0);
    }
    acc.scale(1.0 / cfg.num_samples as f64);
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{bits_to_code, ExactOracle};
    use crate::testutil::random_params;

    fn start(m: usize, n: usize) -> ChainState {
        ChainState::from_visible(BinaryVector::zeros(m), n)
    }

    #[test]
    fn ladder_validation() {
        let s = start(2, 2);
        assert!(PtEnsemble::uniform(1, &s).is_err());
        assert!(PtEnsemble::new(vec![0.0, 0.5], vec![s.clone(), s.clone()]).is_err());
        assert!(PtEnsemble::new(vec![0.0, 0.7, 0.5, 1.0], vec![s.clone(); 4]).is_err());
        assert!(PtEnsemble::new(vec![0.0, 1.0], vec![s.clone()]).is_err());
        let e = PtEnsemble::uniform(5, &s).unwrap();
        assert_eq!(e.betas(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let p = RbmParams::zeros(3, 2).unwrap();
        let mut rng = RngStream::new(0).rng(0, 0);
        assert!(PtEnsemble::uniform(3, &start(2, 2)).unwrap().step(&p, &mut rng).is_err());
    }

    #[test]
    fn equal_betas_always_swap_and_counters_add_up() {
        let p = random_params(4, 3, 2.0, 3);
        let s = start(4, 3);
        let mut e = PtEnsemble::new(vec![0.0, 1.0, 1.0, 1.0], vec![s; 4]).unwrap();
        let mut rng = RngStream::new(4).rng(0, 0);
        let sweeps = 500;
        for _ in 0..sweeps {
            pt_step(&p, &mut e, &mut rng).unwrap();
        }
        let stats = e.swap_stats();
        assert!(stats.iter().all(|s| s.attempts == sweeps));
        assert_eq!(stats[1].accepts, sweeps);
        assert_eq!(stats[2].accepts, sweeps);
        assert!(stats[0].accepts <= sweeps);
    }

    #[test]
    fn infinite_temperature_chain_is_uniform() {
        let p = random_params(4, 3, 2.0, 8);
        let mut e = PtEnsemble::uniform(4, &start(4, 3)).unwrap();
        // β = 0 marginal is uniform no matter what the swaps do: check the
        // bottom chain's bits right after its own Gibbs move.
        let mut rng = RngStream::new(5).rng(0, 0);
        let mut g = Gibbs::new(&p);
        let steps = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..steps {
            e.step_with(&p, &mut g, &mut rng);
            for (c, &b) in counts.iter_mut().zip(e.states()[0].visible.as_slice()) {
                *c += b as usize;
            }
        }
        for c in counts {
            assert!((c as f64 / steps as f64 - 0.5).abs() < 0.006, "{c}");
        }
    }

    #[test]
    fn model_chain_matches_exact_marginal() {
        let p = random_params(4, 3, 1.0, 13);
        let exact = ExactOracle::default().visible_distribution(&p).unwrap();
        let mut e = PtEnsemble::uniform(5, &start(4, 3)).unwrap();
        let mut rng = RngStream::new(6).rng(0, 0);
        let sweeps = 200_000;
        let mut hist = vec![0usize; 16];
        for _ in 0..sweeps {
            pt_step(&p, &mut e, &mut rng).unwrap();
            hist[bits_to_code(e.model_state().visible.as_slice())] += 1;
        }
        let tv: f64 = hist.iter().zip(&exact).map(|(&h, &q)| (h as f64 / sweeps as f64 - q).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.02, "tv {tv}");
    }

    #[test]
    fn ground_truth_at_zero_params() {
        let p = RbmParams::zeros(3, 2).unwrap();
        let cfg = GroundTruthConfig {
            pt_chains: 3,
            burn_in: 10,
            num_samples: 40_000,
        };
        let g = ground_truth_negative_phase(&p, &cfg, &RngStream::new(2)).unwrap();
        // weights entries are 0.5·v_j: sd 0.25; bias entries sd 0.5 or 0
        let se_w = 0.25 / (cfg.num_samples as f64).sqrt();
        let se_b = 0.5 / (cfg.num_samples as f64).sqrt();
        assert!(g.weights.iter().all(|&x| (x - 0.25).abs() < 3.0 * se_w));
        assert!(g.visible.iter().all(|&x| (x - 0.5).abs() < 3.0 * se_b));
        assert!(g.hidden.iter().all(|&x| x == 0.5));
        let again = ground_truth_negative_phase(&p, &cfg, &RngStream::new(2)).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn ground_truth_matches_exact_model_expectation() {
        let p = random_params(4, 3, 1.0, 19);
        let exact = ExactOracle::default().model_expectation(&p).unwrap();
        let cfg = GroundTruthConfig {
            pt_chains: 5,
            burn_in: 1000,
            num_samples: 1_000_000,
        };
        let g = ground_truth_negative_phase(&p, &cfg, &RngStream::new(3)).unwrap();
        let err = g.max_abs_diff(&exact).unwrap();
        assert!(err < 1e-3, "{err}");
    }
}
