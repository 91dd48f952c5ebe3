//! Log-domain helpers shared by every probability computation.
//!
//! Nothing here clamps: large activations are handled by splitting off the
//! linear part of softplus and exponentiating only non-positive numbers.

/// `1 / (1 + e^{-x})`.
#[inline]
pub fn logistic(x: f64) -> f64 {
    // written as a select rather than a branch: sampled activations have
    // unpredictable signs
    let t = (-x.abs()).exp();
    let num = if x >= 0.0 { 1.0 } else { t };
    num / (1.0 + t)
}

/// `log(1 + e^x)`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `log(logistic(x)) = -softplus(-x)`.
#[inline]
pub fn log_logistic(x: f64) -> f64 {
    -softplus(-x)
}

/// Writes `logistic(a)` for every activation and returns `Σ softplus(a)`.
///
/// Both quantities come from the single exponential `e^{-|a|}`, and the
/// logarithmic part of the softplus sum is taken once per block over a
/// running product of factors in `(1, 2]`. This is what keeps importance
/// weights nearly free on top of the conditionals the sampler needs anyway.
#[inline]
pub fn logistic_with_softplus_sum(activations: &[f64], probs: &mut [f64]) -> f64 {
    debug_assert_eq!(activations.len(), probs.len());
    // 2^1000 is still finite
    const BLOCK: usize = 1000;
    let mut total = 0.0;
    for (acts, ps) in activations.chunks(BLOCK).zip(probs.chunks_mut(BLOCK)) {
        let mut linear = 0.0;
        let mut product = 1.0;
        // exponentials first: keeping the accumulators live across the libm
        // calls forces them onto the stack
        for (&a, p) in acts.iter().zip(ps.iter_mut()) {
            *p = (-a.abs()).exp();
        }
        for (&a, p) in acts.iter().zip(ps.iter_mut()) {
            let t = *p;
            let d = 1.0 + t;
            *p = if a >= 0.0 { 1.0 } else { t } / d;
            linear += if a > 0.0 { a } else { 0.0 };
            product *= d;
        }
        total += linear + product.ln();
    }
    total
}

/// Writes `logistic(a)` for every activation.
#[inline]
pub fn logistic_into(activations: &[f64], probs: &mut [f64]) {
    for (&a, p) in activations.iter().zip(probs.iter_mut()) {
        *p = logistic(a);
    }
}

/// Streaming log-sum-exp accumulator.
#[derive(Clone, Copy, Debug)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.sum += (x - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    /// Combines two partial accumulations. Order matters for bit-exactness,
    /// so callers fold partials in a fixed sequence.
    pub fn merge(&mut self, other: &LogSumExp) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if self.max == f64::NEG_INFINITY {
            *self = *other;
            return;
        }
        if other.max <= self.max {
            self.sum += other.sum * (other.max - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - other.max).exp() + other.sum;
            self.max = other.max;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}
