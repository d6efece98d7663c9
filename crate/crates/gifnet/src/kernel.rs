//! The exact conditional spike law, the Gibbs potential and its truncations,
//! the uniqueness certificate, and the raster sampler.
//!
//! Given the spike history, membrane potentials are conditionally Gaussian
//! and independent across neurons, so one spiking pattern has probability
//! `prod_k [omega_k pi(X_k) + (1 - omega_k)(1 - pi(X_k))]` with
//! `X_k = (theta - V^det_k) / sigma_k` and `pi` the upper Gaussian tail.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::analysis;
use crate::error::Result;
use crate::model::Network;
use crate::raster::{Past, Raster};

/// Upper tail of the standard Gaussian,
/// `pi(x) = (1/sqrt(2 pi)) int_x^inf e^{-u^2/2} du`.
///
/// Strictly decreasing, with `pi(0) = 1/2` and `pi(x) + pi(-x) = 1`.
pub fn gaussian_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Lower bound on `ln pi(x)`, finite for every finite `x` even where the
/// tail itself underflows. Uses the envelope
/// `pi(x) >= phi(x)/x (1 - 1/x^2)` deep in the tail.
pub fn gaussian_tail_ln(x: f64) -> f64 {
    if x < 30.0 {
        gaussian_tail(x).ln()
    } else {
        -0.5 * x * x - x.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            + (-1.0 / (x * x)).ln_1p()
    }
}

/// Per-neuron ingredients of the conditional law at one step.
#[derive(Clone, Copy, Debug)]
pub struct NeuronLaw {
    /// Deterministic membrane potential at the previous step.
    pub v_det: f64,
    /// Conditional noise standard deviation.
    pub sigma: f64,
    /// Normalized threshold distance `(theta - v_det) / sigma`.
    pub x: f64,
    /// Firing probability `pi(x)`.
    pub p_fire: f64,
}

/// The conditional law of the spiking pattern at time `n` given the history
/// through `n - 1`.
#[derive(Clone, Debug)]
pub struct ConditionalLaw {
    pub time: i64,
    pub neurons: Vec<NeuronLaw>,
}

impl ConditionalLaw {
    pub fn n_neurons(&self) -> usize {
        self.neurons.len()
    }

    pub fn csv_header() -> &'static str {
        "n,k,v_det,sigma,x,p_fire"
    }

    /// One CSV row per neuron, 1-based.
    pub fn csv_rows(&self) -> Vec<String> {
        self.neurons
            .iter()
            .enumerate()
            .map(|(k, nl)| {
                format!(
                    "{},{},{},{},{},{}",
                    self.time,
                    k + 1,
                    nl.v_det,
                    nl.sigma,
                    nl.x,
                    nl.p_fire
                )
            })
            .collect()
    }
}

/// Log-probability of one pattern, decomposed per neuron.
#[derive(Clone, Debug)]
pub struct PotentialValue {
    pub time: i64,
    pub total: f64,
    pub terms: Vec<f64>,
}

/// The two computable ingredients of the uniqueness criterion: a strictly
/// positive floor on every transition probability and a finite sum of the
/// variation series. The floor is also carried in log form because it can
/// underflow as a plain float on extreme parameter sets.
#[derive(Clone, Copy, Debug)]
pub struct Certificate {
    pub m_p_lower: f64,
    pub ln_m_p_lower: f64,
    pub v_p_upper: f64,
}

/// Options for [`Network::simulate`].
#[derive(Clone, Debug)]
pub struct SimulateOptions {
    pub steps: u32,
    pub trials: u32,
    pub seed: u64,
    /// History expansion depth for every conditional-law evaluation.
    pub horizon: u32,
    /// Convention for spiking states before time zero.
    pub past: Past,
}

impl SimulateOptions {
    pub fn new(steps: u32, trials: u32, seed: u64) -> Self {
        SimulateOptions { steps, trials, seed, horizon: 40, past: Past::Empty }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn chacha_key(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// Counter-based stream positioned at `(trial, step)`: each step owns `2 N`
/// 32-bit words, one 64-bit uniform per neuron, so parallel trial scheduling
/// cannot change any draw.
fn step_rng(key: &[u8; 32], n_neurons: usize, trial: u32, step: u32) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::from_seed(*key);
    rng.set_stream(trial as u64 + 1);
    rng.set_word_pos(step as u128 * 2 * n_neurons as u128);
    rng
}

/// Draw one spiking pattern from the law: neuron `k` fires independently
/// with probability `p_fire_k`.
pub fn sample_step<R: RngCore>(law: &ConditionalLaw, rng: &mut R) -> Vec<u8> {
    law.neurons.iter().map(|nl| u8::from(rng.gen::<f64>() < nl.p_fire)).collect()
}

impl Network {
    /// Conditional law of the pattern at time `n` given the raster through
    /// `n - 1`, with the history expanded `horizon` steps deep.
    pub fn conditional_law(&self, n: i64, raster: &Raster, horizon: u32) -> Result<ConditionalLaw> {
        let b = self.bounds();
        let theta = self.params().threshold();
        let mut neurons = Vec::with_capacity(self.n_neurons());
        for k in 0..self.n_neurons() {
            let v_det = self.v_det(k, n - 1, raster, horizon)?;
            let sigma = self.sigma_sq(k, n - 1, raster, horizon)?.sqrt();
            let x = (theta - v_det) / sigma;
            let p_fire = gaussian_tail(x);
            debug_assert!(
                v_det >= b.v_lo[k] - 1e-8 && v_det <= b.v_hi[k] + 1e-8,
                "v_det {v_det} outside [{}, {}] for neuron {k}",
                b.v_lo[k],
                b.v_hi[k]
            );
            debug_assert!(
                sigma >= b.sigma_lo[k] - 1e-8 && sigma <= b.sigma_hi[k] + 1e-8,
                "sigma {sigma} outside [{}, {}] for neuron {k}",
                b.sigma_lo[k],
                b.sigma_hi[k]
            );
            debug_assert!(x >= b.x_lo[k] - 1e-6 && x <= b.x_hi[k] + 1e-6);
            debug_assert!(p_fire > 0.0 && p_fire < 1.0);
            neurons.push(NeuronLaw { v_det, sigma, x, p_fire });
        }
        Ok(ConditionalLaw { time: n, neurons })
    }

    /// Probability of one spiking pattern under the law: the product of the
    /// per-neuron Bernoulli factors. Strictly positive.
    pub fn transition_prob(&self, law: &ConditionalLaw, pattern: &[u8]) -> f64 {
        assert_eq!(pattern.len(), law.n_neurons());
        law.neurons
            .iter()
            .zip(pattern)
            .map(|(nl, &bit)| if bit == 1 { nl.p_fire } else { 1.0 - nl.p_fire })
            .product()
    }

    /// Log of the transition probability, decomposed per neuron.
    pub fn potential(&self, law: &ConditionalLaw, pattern: &[u8]) -> PotentialValue {
        assert_eq!(pattern.len(), law.n_neurons());
        let terms: Vec<f64> = law
            .neurons
            .iter()
            .zip(pattern)
            .map(|(nl, &bit)| if bit == 1 { nl.p_fire.ln() } else { (1.0 - nl.p_fire).ln() })
            .collect();
        PotentialValue { time: law.time, total: terms.iter().sum(), terms }
    }

    /// Conditional law at time 0 with the history truncated to the `depth`
    /// last steps of `context` and a quiet tail beyond.
    ///
    /// `context` supplies the spiking states on `[-depth, -1]`; its window
    /// must cover that range when `depth > 0`.
    pub fn truncated_law(&self, depth: u32, context: &Raster) -> Result<ConditionalLaw> {
        let n = self.n_neurons();
        let lo = -(depth.max(1) as i64);
        let mut raster = Raster::new(n, lo, 0, Past::Empty);
        for t in -(depth as i64)..0 {
            for k in 0..n {
                raster.set_bit(k, t, context.bit(k, t));
            }
        }
        self.conditional_law(0, &raster, depth + 1)
    }

    /// Distribution over the `2^N` patterns at time 0 under the truncated
    /// law, explicitly normalized by its partition function.
    pub fn truncated_distribution(&self, depth: u32, context: &Raster) -> Result<Vec<f64>> {
        let n = self.n_neurons();
        let law = self.truncated_law(depth, context)?;
        let mut probs = Vec::with_capacity(1 << n);
        for idx in 0u32..(1u32 << n) {
            let pattern: Vec<u8> = (0..n).map(|k| ((idx >> k) & 1) as u8).collect();
            probs.push(self.transition_prob(&law, &pattern));
        }
        let z: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= z;
        }
        Ok(probs)
    }

    /// Probability of `pattern` at time 0 under the depth-`depth` truncation.
    pub fn truncated_conditional(&self, depth: u32, context: &Raster, pattern: &[u8]) -> Result<f64> {
        let probs = self.truncated_distribution(depth, context)?;
        let idx: usize =
            pattern.iter().enumerate().map(|(k, &bit)| (bit as usize) << k).sum();
        Ok(probs[idx])
    }

    /// Uniqueness certificate: the transition-probability floor and the
    /// summed variation series, both finite for every valid parameter set.
    pub fn uniqueness_certificate(&self) -> Result<Certificate> {
        let v_p_upper = analysis::variation_series_sum(self)?;
        Ok(Certificate {
            m_p_lower: self.bounds().m_p_lower,
            ln_m_p_lower: self.bounds().ln_m_p_lower,
            v_p_upper,
        })
    }

    /// Sample `trials` rasters of `steps` patterns each by iterating the
    /// conditional law. Deterministic for a fixed seed regardless of how
    /// trials are scheduled across threads.
    pub fn simulate(&self, opts: &SimulateOptions) -> Result<Vec<Raster>> {
        assert!(opts.steps >= 1 && opts.trials >= 1, "need at least one step and one trial");
        let key = chacha_key(opts.seed);
        let n = self.n_neurons();
        (0..opts.trials)
            .into_par_iter()
            .map(|trial| {
                let mut raster =
                    Raster::new(n, 0, opts.steps as i64 - 1, opts.past.clone());
                for step in 0..opts.steps {
                    let law = self.conditional_law(step as i64, &raster, opts.horizon)?;
                    let mut rng = step_rng(&key, n, trial, step);
                    let pattern = sample_step(&law, &mut rng);
                    raster.set_column(step as i64, &pattern);
                }
                Ok(raster)
            })
            .collect()
    }
}
