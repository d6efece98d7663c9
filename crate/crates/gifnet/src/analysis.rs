//! Numerical verification machinery: analytic variation bounds and their
//! measured counterparts, Markov-truncation error sweeps, the monomial
//! expansion of truncated potentials, silent-interval checks, empirical
//! spike statistics, and binning.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::Network;
use crate::raster::{cylinder_blocks, Past, Raster};

/// Quantities tracked by the variation machinery.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Conductance,
    VSyn,
    VExt,
    SigmaSq,
    Kernel,
}

impl Quantity {
    pub const ALL: [Quantity; 5] =
        [Quantity::Conductance, Quantity::VSyn, Quantity::VExt, Quantity::SigmaSq, Quantity::Kernel];

    pub fn name(&self) -> &'static str {
        match self {
            Quantity::Conductance => "conductance",
            Quantity::VSyn => "v_syn",
            Quantity::VExt => "v_ext",
            Quantity::SigmaSq => "sigma_sq",
            Quantity::Kernel => "kernel",
        }
    }
}

/// Measured and analytic variation at one depth.
#[derive(Clone, Debug)]
pub struct VariationReport {
    pub quantity: Quantity,
    pub m: u32,
    pub tail_horizon: u32,
    /// Maximum |f(omega) - f(omega')| over the enumerated cylinder pairs:
    /// a certified lower estimate of the true variation.
    pub measured_lower: f64,
    /// Closed-form upper bound.
    pub analytic_upper: f64,
}

/// Total-variation and KL distances between a depth-truncated conditional
/// and the deep reference conditional.
#[derive(Clone, Copy, Debug)]
pub struct MarkovError {
    pub depth: u32,
    pub max_tv: f64,
    pub mean_kl: f64,
}

/// Outcome of a silent-interval frequency check.
#[derive(Clone, Copy, Debug)]
pub struct SilentIntervalReport {
    pub t0: u32,
    pub empirical: f64,
    pub lower: f64,
    pub upper: f64,
    pub std_error: f64,
}

// --- analytic variation bounds ---------------------------------------------

struct NeuronBoundCtx<'a> {
    net: &'a Network,
    k: usize,
    /// Sum of |W_kj| over presynaptic neurons.
    abs_w: f64,
    /// `|E_L| + i^+ / g_L`.
    b_ext: f64,
    /// `max(|theta - V^-|, |theta - V^+|)`.
    theta_gap: f64,
}

/// The membrane-term bounds integrate the effective-leak variation over the
/// lag `x = t - t1`. Histories agreeing on the last `m + 1` patterns pin the
/// conductance at lag `x` only down to depth `m - floor(x)`, so the
/// integrals run over an integer staircase of depth-resolved gaps rather
/// than a single uniform variation; beyond lag `m` the trivial pointwise
/// envelope takes over. The staircase keeps every bound valid at every
/// finite depth and recovers the usual asymptotic constants as `m` grows.
impl<'a> NeuronBoundCtx<'a> {
    fn new(net: &'a Network, k: usize) -> Self {
        let p = net.params();
        let abs_w: f64 = (0..net.n_neurons()).map(|j| p.weight(k, j).abs()).sum();
        let b_ext = p.raw().leak_reversal.abs() + p.i_plus() / p.leak_conductance(k);
        let b = net.bounds();
        let theta = p.threshold();
        let theta_gap = (theta - b.v_lo[k]).abs().max((theta - b.v_hi[k]).abs());
        NeuronBoundCtx { net, k, abs_w, b_ext, theta_gap }
    }

    /// Per-synapse tail factor `P_d(m/tau_kj) e^{-m/tau_kj}` (plus the hump
    /// term where applicable).
    fn tail(&self, j: usize, m: u32) -> f64 {
        self.net.params().profile(self.k, j).tail_bound(m as f64)
    }

    fn conductance(&self, m: u32) -> f64 {
        let p = self.net.params();
        let chain: f64 =
            p.presynaptic(self.k).map(|j| 2.0 * p.max_conductance(self.k, j) * self.tail(j, m)).sum();
        let width = self.net.bounds().g_max[self.k] - p.leak_conductance(self.k);
        chain.min(width)
    }

    /// `gaps[i]` bounds the integrated conductance difference over lags
    /// `[0, i + 1]`: the sum of per-unit-segment gaps at their resolved
    /// depths `m, m-1, ..., m-i` (clamped at zero).
    fn drive_gaps(&self, m: u32) -> Vec<f64> {
        let mut gaps = Vec::with_capacity(m as usize);
        let mut acc = 0.0;
        for l in 0..m {
            acc += self.conductance(m - l);
            gaps.push(acc);
        }
        gaps
    }

    fn v_syn(&self, m: u32) -> f64 {
        let p = self.net.params();
        if self.abs_w == 0.0 {
            return 0.0;
        }
        let g_l = p.leak_conductance(self.k);
        let c = p.capacitance(self.k);
        let tau_l = self.net.bounds().tau_leak[self.k];
        let alpha_plus = self.net.bounds().alpha_plus;
        let deep = (-(m as f64) / tau_l).exp();
        let gaps = self.drive_gaps(m);

        let mut total = 0.0;
        for j in p.presynaptic(self.k) {
            let w = p.weight(self.k, j).abs();
            // response variation + leak variation, per unit lag segment
            let mut integral = 0.0;
            for (i, gap) in gaps.iter().enumerate() {
                let seg = (-(i as f64) / tau_l).exp() - (-(i as f64 + 1.0) / tau_l).exp();
                let response_var = 2.0 * self.tail(j, m - i as u32).min(alpha_plus);
                let leak_var = ((gap / c).exp() - 1.0).min(1.0);
                integral += (response_var + alpha_plus * leak_var) * tau_l * seg;
            }
            // beyond lag m the products are pointwise under
            // alpha^+ e^{-x/tau_L}, and the reset-time shift costs one more
            // such strip
            integral += 2.0 * alpha_plus * tau_l * deep;
            total += w * integral;
        }
        let width = alpha_plus / g_l * self.abs_w;
        (total / c).min(width)
    }

    fn v_ext(&self, m: u32) -> f64 {
        if self.b_ext == 0.0 {
            return 0.0;
        }
        let c = self.net.params().capacitance(self.k);
        let tau_l = self.net.bounds().tau_leak[self.k];
        let deep = (-(m as f64) / tau_l).exp();
        let mut integral = 0.0;
        for (i, gap) in self.drive_gaps(m).iter().enumerate() {
            let seg = (-(i as f64) / tau_l).exp() - (-(i as f64 + 1.0) / tau_l).exp();
            integral += ((gap / c).exp() - 1.0).min(1.0) * seg;
        }
        let chain = self.b_ext * (integral + 2.0 * deep);
        chain.min(2.0 * self.b_ext)
    }

    fn sigma_sq(&self, m: u32) -> f64 {
        let p = self.net.params();
        let b = self.net.bounds();
        let c = p.capacitance(self.k);
        let tau_l = b.tau_leak[self.k];
        let ratio_sq = (p.raw().noise_amplitude / c).powi(2);
        let deep2 = (-2.0 * m as f64 / tau_l).exp();
        let gaps = self.drive_gaps(m);

        // squared-leak variation, integrated and at the reset time itself
        let mut integral = 0.0;
        let mut reset_var: f64 = 0.0;
        for (i, gap) in gaps.iter().enumerate() {
            let lo = (-2.0 * i as f64 / tau_l).exp();
            let hi = (-2.0 * (i as f64 + 1.0) / tau_l).exp();
            let leak_var = ((2.0 * gap / c).exp() - 1.0).min(1.0);
            integral += leak_var * tau_l / 2.0 * (lo - hi);
            reset_var = reset_var.max(lo * leak_var);
        }
        let chain = p.raw().reset_std.powi(2) * (reset_var + deep2)
            + ratio_sq * (integral + tau_l * deep2);
        let width = b.sigma_hi[self.k].powi(2) - b.sigma_lo[self.k].powi(2);
        chain.min(width.max(0.0))
    }

    /// Variation bound on the normalized threshold distance `X_k`.
    fn x(&self, m: u32) -> f64 {
        let sigma_lo = self.net.bounds().sigma_lo[self.k];
        (self.v_syn(m) + self.v_ext(m)) / sigma_lo
            + self.theta_gap / (2.0 * sigma_lo.powi(3)) * self.sigma_sq(m)
    }

    /// Per-neuron contribution to the transition-probability variation,
    /// capped by the total spread of the firing probability. Histories
    /// agreeing on the last `m + 1` patterns pin the threshold distance at
    /// the previous step only down to depth `m - 1`, hence the shift.
    fn kernel_term(&self, m: u32) -> f64 {
        let b = self.net.bounds();
        let cap = b.pi_hi[self.k] - b.pi_lo[self.k];
        if m == 0 {
            return cap;
        }
        (self.x(m - 1) / (2.0 * std::f64::consts::PI).sqrt()).min(cap)
    }
}

/// Closed-form analytic upper bound on the depth-`m` variation of a tracked
/// quantity. Per-neuron quantities report the worst neuron; the kernel bound
/// sums the per-neuron probability terms and is capped at 1.
pub fn variation_bound(net: &Network, quantity: Quantity, m: u32) -> f64 {
    let per_neuron = |f: &dyn Fn(&NeuronBoundCtx) -> f64| {
        (0..net.n_neurons())
            .map(|k| f(&NeuronBoundCtx::new(net, k)))
            .fold(0.0, f64::max)
    };
    match quantity {
        Quantity::Conductance => per_neuron(&|ctx| ctx.conductance(m)),
        Quantity::VSyn => per_neuron(&|ctx| ctx.v_syn(m)),
        Quantity::VExt => per_neuron(&|ctx| ctx.v_ext(m)),
        Quantity::SigmaSq => per_neuron(&|ctx| ctx.sigma_sq(m)),
        Quantity::Kernel => (0..net.n_neurons())
            .map(|k| NeuronBoundCtx::new(net, k).kernel_term(m))
            .sum::<f64>()
            .min(1.0),
    }
}

/// Sum of the variation series of the transition probabilities: the
/// depth-zero probability spread plus the lag series assembled from the
/// asymptotic constants. Finite for every valid parameter set, so together
/// with `m_p_lower > 0` it certifies uniqueness.
pub fn variation_series_sum(net: &Network) -> Result<f64> {
    let p = net.params();
    let b = net.bounds();
    let spread: f64 = (0..net.n_neurons()).map(|k| b.pi_hi[k] - b.pi_lo[k]).sum();
    let mut total = 0.0;
    for k in 0..net.n_neurons() {
        let ctx = NeuronBoundCtx::new(net, k);
        let g_l = p.leak_conductance(k);
        let c = p.capacitance(k);
        let tau_l = b.tau_leak[k];
        let sigma_lo = b.sigma_lo[k];
        let b_det = b.alpha_plus / g_l * ctx.abs_w + ctx.b_ext;
        let c_sig = (p.raw().noise_amplitude / c).powi(2) * tau_l / 2.0
            + 2.0 * p.raw().reset_std.powi(2);
        let mut neuron_sum = b_det / sigma_lo / (1.0 - (-1.0 / tau_l).exp())
            + ctx.theta_gap * c_sig / (2.0 * sigma_lo.powi(3)) / (1.0 - (-2.0 / tau_l).exp());
        for j in p.presynaptic(k) {
            let w = p.weight(k, j).abs();
            let g = p.max_conductance(k, j);
            let a_syn = (2.0 * w + 2.0 * b.alpha_plus * g / g_l * ctx.abs_w) / g_l;
            let a_ext = 2.0 * g / g_l * ctx.b_ext;
            let a_sig = g / g_l * (p.raw().noise_amplitude / c).powi(2) * tau_l;
            let a_x = (a_syn + a_ext) / sigma_lo
                + ctx.theta_gap * a_sig / (2.0 * sigma_lo.powi(3));
            neuron_sum += a_x * profile_lag_series(&p.profile(k, j))?;
        }
        total += neuron_sum;
    }
    Ok(spread.min(1.0) + total / (2.0 * std::f64::consts::PI).sqrt())
}

/// `sum_{l >= 0} P_d(l/tau) e^{-l/tau}`, summed until the term drops below
/// 1e-16 of the running total, with the geometric remainder added
/// analytically.
fn profile_lag_series(profile: &crate::dynamics::AlphaProfile) -> Result<f64> {
    let mut total = 0.0;
    let mut l = 0u64;
    loop {
        let term = profile.tail_bound(l as f64);
        total += term;
        l += 1;
        if (l as f64) > profile.peak_time() && term <= 1e-16 * total {
            // past the hump the term ratio is at most e^{-1/tau} ((l+1)/l)^d
            let ratio = (-1.0 / profile.tau()).exp()
                * ((l as f64 + 1.0) / l as f64).powi(profile.degree() as i32);
            if ratio < 1.0 {
                total += term * ratio / (1.0 - ratio);
            }
            return Ok(total);
        }
        if l > 10_000_000 {
            return Err(Error::SeriesDivergence { what: "variation lag series", terms: l as usize });
        }
    }
}

// --- measured variation -----------------------------------------------------

/// Guard on the number of raster evaluations a single report may perform.
pub const EVALUATION_GUARD: u128 = 1 << 20;

/// Depth at which every dropped conductance tail falls below `tol`.
fn conductance_horizon(net: &Network, tol: f64) -> u32 {
    let p = net.params();
    let mut depth = 0u32;
    loop {
        let worst = (0..net.n_neurons())
            .map(|k| {
                p.presynaptic(k)
                    .map(|j| p.max_conductance(k, j) * p.profile(k, j).tail_bound(depth as f64))
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        if worst <= tol || depth > 100_000 {
            return depth;
        }
        depth += 1;
    }
}

fn quantity_values(
    net: &Network,
    quantity: Quantity,
    raster: &Raster,
    horizon: u32,
) -> Result<Vec<f64>> {
    let n = net.n_neurons();
    match quantity {
        Quantity::Conductance => {
            (0..n).map(|k| net.conductance(k, 0.0, raster, horizon)).collect()
        }
        Quantity::VSyn => (0..n).map(|k| net.v_syn_at(k, 0, raster, horizon)).collect(),
        Quantity::VExt => (0..n).map(|k| net.v_ext_at(k, 0, raster, horizon)).collect(),
        Quantity::SigmaSq => (0..n).map(|k| net.sigma_sq(k, 0, raster, horizon)).collect(),
        Quantity::Kernel => {
            // per-neuron Bernoulli factors of p(0, omega); the joint
            // probability is their product
            let law = net.conditional_law(0, raster, horizon)?;
            Ok(law
                .neurons
                .iter()
                .zip(raster.column(0))
                .map(|(nl, bit)| if bit == 1 { nl.p_fire } else { 1.0 - nl.p_fire })
                .collect())
        }
    }
}

/// Maximize |f(omega) - f(omega')| over the cylinder enumeration at time 0.
///
/// The result is a certified lower estimate of the depth-`m` variation (the
/// true supremum ranges over all infinite tails), reported beside the
/// analytic upper bound.
pub fn measure_variation(
    net: &Network,
    quantity: Quantity,
    m: u32,
    tail_horizon: u32,
) -> Result<VariationReport> {
    let n = net.n_neurons();
    let raster_count =
        (1u128 << n) * ((1u128 << (n as u32 * tail_horizon).min(127)) + 1);
    if raster_count > EVALUATION_GUARD {
        return Err(Error::EnumerationTooLarge { count: raster_count, guard: EVALUATION_GUARD });
    }
    let blocks = cylinder_blocks(n, 0, m, tail_horizon)?;
    let horizon = m + tail_horizon + conductance_horizon(net, net.integral().horizon_tol);

    let measured = blocks
        .par_iter()
        .map(|block| -> Result<f64> {
            let values: Vec<Vec<f64>> = block
                .rasters
                .iter()
                .map(|r| quantity_values(net, quantity, r, horizon))
                .collect::<Result<_>>()?;
            let mut worst = 0.0f64;
            for &(a, b) in &block.pairs {
                let (va, vb) = (&values[a], &values[b]);
                let diff = if quantity == Quantity::Kernel {
                    let pa: f64 = va.iter().product();
                    let pb: f64 = vb.iter().product();
                    let factor_sum: f64 =
                        va.iter().zip(vb).map(|(x, y)| (x - y).abs()).sum();
                    // product differences telescope through the factors
                    assert!(
                        (pa - pb).abs() <= factor_sum + 1e-12,
                        "product-difference inequality violated"
                    );
                    (pa - pb).abs()
                } else {
                    va.iter().zip(vb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
                };
                worst = worst.max(diff);
            }
            Ok(worst)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;

    Ok(VariationReport {
        quantity,
        m,
        tail_horizon,
        measured_lower: measured,
        analytic_upper: variation_bound(net, quantity, m),
    })
}

// --- Markov truncation ------------------------------------------------------

/// Compare the depth-`depth` truncated conditional against the deep
/// reference conditional on probe histories: the two extremal prefixes plus
/// seeded random contexts.
pub fn markov_error(
    net: &Network,
    depth: u32,
    probe_count: usize,
    seed: u64,
) -> Result<MarkovError> {
    let ref_depth = net.history_horizon(1e-10).max(depth);
    let n = net.n_neurons();
    let lo = -(ref_depth.max(1) as i64);

    let mut contexts = vec![Raster::omega0(n, lo, -1), {
        let mut r = Raster::new(n, lo, -1, Past::Empty);
        for t in lo..=-1 {
            for k in 0..n {
                r.set_bit(k, t, 1);
            }
        }
        r
    }];
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for _ in 2..probe_count.max(2) {
        let mut r = Raster::new(n, lo, -1, Past::Empty);
        for t in lo..=-1 {
            for k in 0..n {
                r.set_bit(k, t, u8::from(rng.gen::<bool>()));
            }
        }
        contexts.push(r);
    }

    let results: Vec<(f64, f64)> = contexts
        .par_iter()
        .map(|ctx| -> Result<(f64, f64)> {
            let reference = net.truncated_distribution(ref_depth, ctx)?;
            let truncated = net.truncated_distribution(depth, ctx)?;
            let tv = 0.5
                * reference
                    .iter()
                    .zip(&truncated)
                    .map(|(p, q)| (p - q).abs())
                    .sum::<f64>();
            let kl = reference
                .iter()
                .zip(&truncated)
                .map(|(p, q)| if *p > 0.0 { p * (p / q).ln() } else { 0.0 })
                .sum::<f64>()
                .max(0.0); // rounding can leave KL a hair below zero
            Ok((tv, kl))
        })
        .collect::<Result<_>>()?;

    let max_tv = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let mean_kl = results.iter().map(|r| r.1).sum::<f64>() / results.len() as f64;
    Ok(MarkovError { depth, max_tv, mean_kl })
}

// --- monomial expansion ------------------------------------------------------

/// Coefficients of the truncated potential on the monomial basis
/// `omega_{k_1}(n_1) ... omega_{k_r}(n_r)`, indexed by bit masks over the
/// `(neuron, time)` grid with times in `[-depth, 0]`.
#[derive(Clone, Debug)]
pub struct MonomialExpansion {
    n_neurons: usize,
    depth: u32,
    lambda: Vec<f64>,
}

impl MonomialExpansion {
    pub fn n_neurons(&self) -> usize {
        self.n_neurons
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Bit position of the factor `omega_k(t)`, `t` in `[-depth, 0]`.
    pub fn bit(&self, k: usize, t: i64) -> usize {
        debug_assert!(t >= -(self.depth as i64) && t <= 0);
        (t + self.depth as i64) as usize * self.n_neurons + k
    }

    /// Constant term of the expansion.
    pub fn constant(&self) -> f64 {
        self.lambda[0]
    }

    /// Coefficient of the monomial with the given `(neuron, time)` factors.
    pub fn coefficient(&self, factors: &[(usize, i64)]) -> f64 {
        let mask = factors.iter().fold(0usize, |m, &(k, t)| m | (1 << self.bit(k, t)));
        self.lambda[mask]
    }

    /// All `(mask, lambda)` pairs.
    pub fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.lambda.iter().copied().enumerate()
    }

    /// Factors `(neuron, time)` of the monomial encoded by `mask`.
    pub fn factors(&self, mask: usize) -> Vec<(usize, i64)> {
        (0..self.lambda.len().trailing_zeros() as usize)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| (b % self.n_neurons, (b / self.n_neurons) as i64 - self.depth as i64))
            .collect()
    }

    /// Evaluate the expansion on the block encoded by `mask`: the sum of
    /// coefficients over submasks.
    pub fn evaluate_all(&self) -> Vec<f64> {
        let mut values = self.lambda.clone();
        let bits = values.len().trailing_zeros();
        for b in 0..bits {
            let step = 1usize << b;
            for mask in 0..values.len() {
                if mask & step != 0 {
                    values[mask] += values[mask ^ step];
                }
            }
        }
        values
    }
}

/// Exact monomial coefficients of the depth-`depth` truncated potential,
/// obtained by inclusion-exclusion over all `2^{N (depth+1)}` blocks.
pub fn expand_monomials(net: &Network, depth: u32) -> Result<MonomialExpansion> {
    let n = net.n_neurons();
    let bits = n as u32 * (depth + 1);
    if bits > 20 {
        return Err(Error::EnumerationTooLarge { count: 1u128 << bits, guard: 1 << 20 });
    }
    let size = 1usize << bits;
    let lo = -(depth.max(1) as i64);

    let mut lambda: Vec<f64> = (0..size)
        .into_par_iter()
        .map(|mask| -> Result<f64> {
            let mut raster = Raster::new(n, lo, 0, Past::Empty);
            for b in 0..bits as usize {
                if mask >> b & 1 == 1 {
                    let t = (b / n) as i64 - depth as i64;
                    raster.set_bit(b % n, t, 1);
                }
            }
            let law = net.conditional_law(0, &raster, depth + 1)?;
            Ok(net.potential(&law, &raster.column(0)).total)
        })
        .collect::<Result<_>>()?;

    for b in 0..bits {
        let step = 1usize << b;
        for mask in 0..size {
            if mask & step != 0 {
                lambda[mask] -= lambda[mask ^ step];
            }
        }
    }
    Ok(MonomialExpansion { n_neurons: n, depth, lambda })
}

// --- sampling-based checks ---------------------------------------------------

/// Empirical frequency of neuron `k` staying silent for `t0` consecutive
/// steps, against the geometric bounds from the probability envelope.
pub fn silent_interval_check(
    net: &Network,
    k: usize,
    t0: u32,
    trials: u32,
    seed: u64,
    horizon: u32,
) -> Result<SilentIntervalReport> {
    let b = net.bounds();
    if t0 == 0 {
        return Ok(SilentIntervalReport { t0, empirical: 1.0, lower: 1.0, upper: 1.0, std_error: 0.0 });
    }
    let opts = crate::kernel::SimulateOptions {
        steps: t0,
        trials,
        seed,
        horizon,
        past: Past::Empty,
    };
    let rasters = net.simulate(&opts)?;
    let silent = rasters
        .iter()
        .filter(|r| (0..t0 as i64).all(|t| r.bit(k, t) == 0))
        .count();
    let empirical = silent as f64 / trials as f64;
    let std_error = (empirical * (1.0 - empirical) / trials as f64).sqrt();
    Ok(SilentIntervalReport {
        t0,
        empirical,
        lower: b.cap_lo[k].powi(t0 as i32),
        upper: b.cap_hi[k].powi(t0 as i32),
        std_error,
    })
}

// --- empirical statistics ----------------------------------------------------

/// Rates, centered pairwise lagged correlations, and block frequencies
/// estimated from a set of rasters.
#[derive(Clone, Debug)]
pub struct SpikeStats {
    pub rates: Vec<f64>,
    pub rate_std_error: Vec<f64>,
    /// `pairwise[k][j][lag] = mean omega_k(n) omega_j(n - lag) - rate_k rate_j`.
    pub pairwise: Vec<Vec<Vec<f64>>>,
    /// `block_freqs[w - 1][code]`: frequency of the width-`w` block encoded
    /// column-major, `code bit (c * N + k) = omega_k(start + c)`.
    pub block_freqs: Vec<Vec<f64>>,
}

/// Estimate rates, pairwise correlations up to `max_lag`, and block
/// frequencies up to `block_width` from rasters sharing one window.
pub fn empirical_stats(
    rasters: &[Raster],
    max_lag: u32,
    block_width: u32,
) -> Result<SpikeStats> {
    let first = rasters.first().ok_or_else(|| Error::InvalidParameter {
        field: "rasters".into(),
        reason: "need at least one raster".into(),
    })?;
    let n = first.n_neurons();
    let window = first.window();
    for r in rasters {
        if r.n_neurons() != n || r.window() != window {
            return Err(Error::WindowMismatch {
                expected: first.len(),
                got: r.len(),
            });
        }
    }
    if block_width as usize * n > 20 {
        return Err(Error::EnumerationTooLarge {
            count: 1u128 << (block_width as usize * n),
            guard: 1 << 20,
        });
    }
    let (n0, n1) = window;
    let steps = (rasters.len() * first.len()) as f64;

    let mut rates = vec![0.0; n];
    for r in rasters {
        for (k, rate) in rates.iter_mut().enumerate() {
            for t in n0..=n1 {
                *rate += r.bit(k, t) as f64;
            }
        }
    }
    for rate in &mut rates {
        *rate /= steps;
    }
    let rate_std_error =
        rates.iter().map(|&p| (p * (1.0 - p) / steps).sqrt()).collect();

    let mut pairwise = vec![vec![vec![0.0; max_lag as usize + 1]; n]; n];
    for (k, row) in pairwise.iter_mut().enumerate() {
        for (j, lags) in row.iter_mut().enumerate() {
            for (lag, value) in lags.iter_mut().enumerate() {
                let lag = lag as i64;
                let mut acc = 0.0;
                let mut count = 0.0;
                for r in rasters {
                    for t in (n0 + lag)..=n1 {
                        acc += (r.bit(k, t) * r.bit(j, t - lag)) as f64;
                        count += 1.0;
                    }
                }
                if count > 0.0 {
                    *value = acc / count - rates[k] * rates[j];
                }
            }
        }
    }

    let mut block_freqs = Vec::new();
    for w in 1..=block_width {
        let mut freqs = vec![0.0; 1 << (w as usize * n)];
        let mut count = 0.0;
        for r in rasters {
            for start in n0..=(n1 - w as i64 + 1) {
                let mut code = 0usize;
                for c in 0..w as i64 {
                    for k in 0..n {
                        if r.bit(k, start + c) == 1 {
                            code |= 1 << (c as usize * n + k);
                        }
                    }
                }
                freqs[code] += 1.0;
                count += 1.0;
            }
        }
        for f in &mut freqs {
            *f /= count;
        }
        block_freqs.push(freqs);
    }

    Ok(SpikeStats { rates, rate_std_error, pairwise, block_freqs })
}

/// Recode a raster with windows of width `w`, marking 1 where the neuron
/// fired at least once in the window. The output keeps the input's window
/// start and has `floor(len / w)` steps.
pub fn bin_raster(raster: &Raster, w: u32) -> Raster {
    assert!(w >= 1, "bin width must be at least 1");
    let (n0, _) = raster.window();
    let n = raster.n_neurons();
    let bins = (raster.len() / w as usize).max(1) as i64;
    let past = match raster.past() {
        Past::AllOnes => Past::AllOnes,
        _ => Past::Empty,
    };
    let mut out = Raster::new(n, n0, n0 + bins - 1, past);
    for i in 0..bins {
        for k in 0..n {
            let fired = (0..w as i64)
                .any(|c| {
                    let t = n0 + i * w as i64 + c;
                    t <= raster.window().1 && raster.bit(k, t) == 1
                });
            out.set_bit(k, n0 + i, u8::from(fired));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{CurrentSpec, NetworkParams, Population, ProfileKind};

    fn coupled_pair() -> Network {
        let p = NetworkParams {
            n_neurons: 2,
            capacitance: vec![1.0; 2],
            threshold: 1.0,
            leak_reversal: -0.2,
            excitatory_reversal: 1.0,
            inhibitory_reversal: -1.0,
            leak_conductance: vec![2.0; 2],
            population: vec![Population::Excitatory, Population::Inhibitory],
            max_conductance: vec![vec![0.0, 0.3], vec![0.3, 0.0]],
            synapse_tau: vec![vec![0.5; 2]; 2],
            profile: ProfileKind::Exponential,
            noise_amplitude: 1.0,
            reset_std: 0.4,
            refractory: 0.0,
            external_current: CurrentSpec::none(2),
        };
        Network::new(p).unwrap()
    }

    fn isolated() -> Network {
        Network::new(NetworkParams::isolated(1.0, 0.5, 1.0, 0.0, 1.0, 0.1)).unwrap()
    }

    #[test]
    fn conductance_bound_matches_exponential_closed_form() {
        let net = coupled_pair();
        // exponential profile: P_0 = tau, so the chain is 2 G tau e^{-m/tau}
        for m in 1..=8 {
            let bound = variation_bound(&net, Quantity::Conductance, m);
            let closed = 2.0 * 0.3 * 0.5 * (-(m as f64) / 0.5).exp();
            assert!((bound - closed).abs() < 1e-15, "m = {m}: {bound} vs {closed}");
        }
    }

    #[test]
    fn no_synapse_v_syn_bound_vanishes() {
        let net = isolated();
        for m in 0..10 {
            assert_eq!(variation_bound(&net, Quantity::VSyn, m), 0.0);
        }
    }

    #[test]
    fn bounds_decay_with_depth() {
        let net = coupled_pair();
        for q in Quantity::ALL {
            let b10 = variation_bound(&net, q, 10);
            let b20 = variation_bound(&net, q, 20);
            if b10 > 0.0 {
                assert!(
                    b20 <= b10 * (-10.0f64 / 2.0).exp() * 10.0,
                    "{q:?} decays too slowly: {b10} -> {b20}"
                );
            }
        }
    }

    #[test]
    fn measured_variation_respects_bounds_small_sweep() {
        let net = coupled_pair();
        for q in Quantity::ALL {
            for m in [0, 2, 4] {
                let rep = measure_variation(&net, q, m, 2).unwrap();
                assert!(
                    rep.measured_lower <= rep.analytic_upper + 1e-8,
                    "{q:?} m={m}: measured {} > bound {}",
                    rep.measured_lower,
                    rep.analytic_upper
                );
            }
        }
    }

    #[test]
    fn measured_variation_saturates_at_depth() {
        let net = coupled_pair();
        let m = net.history_horizon(1e-13);
        let rep = measure_variation(&net, Quantity::Kernel, m, 1).unwrap();
        assert!(rep.measured_lower <= 1e-10);
    }

    #[test]
    fn enumeration_guard_fires() {
        let net = coupled_pair();
        assert!(matches!(
            measure_variation(&net, Quantity::Kernel, 0, 11),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn markov_error_decays_and_vanishes_at_saturation() {
        let net = coupled_pair();
        let shallow = markov_error(&net, 0, 6, 11).unwrap();
        let deep = markov_error(&net, net.history_horizon(1e-9), 6, 11).unwrap();
        assert!(shallow.max_tv > 0.0);
        assert!(deep.max_tv < 1e-8);
        assert!(deep.max_tv <= shallow.max_tv);
        assert!(shallow.mean_kl >= 0.0);
    }

    #[test]
    fn monomials_reconstruct_and_respect_causality() {
        let net = coupled_pair();
        let expansion = expand_monomials(&net, 1).unwrap();
        // reconstruction is the inverse transform: check against direct
        // evaluation of the potential on every block
        let values = expansion.evaluate_all();
        let depth = 1u32;
        let n = 2usize;
        for (mask, &value) in values.iter().enumerate() {
            let mut raster = Raster::new(n, -1, 0, Past::Empty);
            for b in 0..(n as u32 * (depth + 1)) as usize {
                if mask >> b & 1 == 1 {
                    raster.set_bit(b % n, (b / n) as i64 - depth as i64, 1);
                }
            }
            let law = net.conditional_law(0, &raster, depth + 1).unwrap();
            let phi = net.potential(&law, &raster.column(0)).total;
            assert!((value - phi).abs() < 1e-10);
        }
        // no monomial couples two time-0 factors
        let cross = expansion.coefficient(&[(0, 0), (1, 0)]);
        assert!(cross.abs() < 1e-9, "time-0 pair coefficient {cross}");
    }

    #[test]
    fn single_neuron_depth_zero_expansion() {
        let net = isolated();
        let expansion = expand_monomials(&net, 0).unwrap();
        let p = net
            .truncated_distribution(0, &Raster::omega0(1, -1, -1))
            .unwrap()[1];
        assert!((expansion.constant() - (1.0 - p).ln()).abs() < 1e-12);
        let single = expansion.coefficient(&[(0, 0)]);
        assert!((single - (p / (1.0 - p)).ln()).abs() < 1e-12);
    }

    #[test]
    fn silent_interval_degenerate_and_monotone() {
        let net = isolated();
        let report = silent_interval_check(&net, 0, 0, 100, 3, 20).unwrap();
        assert_eq!((report.empirical, report.lower, report.upper), (1.0, 1.0, 1.0));

        // a probability envelope away from the representable edge
        let net = Network::new(NetworkParams::isolated(1.0, 0.5, 1.0, 0.0, 1.0, 0.5)).unwrap();
        let r1 = silent_interval_check(&net, 0, 1, 2000, 3, 25).unwrap();
        let r2 = silent_interval_check(&net, 0, 2, 2000, 3, 25).unwrap();
        assert!(r2.upper < r1.upper);
        assert!(r1.lower - 3.0 * r1.std_error <= r1.empirical);
        assert!(r1.empirical <= r1.upper + 3.0 * r1.std_error);
    }

    #[test]
    fn stats_on_extremal_rasters() {
        let quiet = vec![Raster::omega0(2, 0, 49)];
        let stats = empirical_stats(&quiet, 3, 2).unwrap();
        assert!(stats.rates.iter().all(|&r| r == 0.0));

        let saturated = vec![Raster::omega1(2, 0, 49)];
        let stats = empirical_stats(&saturated, 3, 2).unwrap();
        assert!(stats.rates.iter().all(|&r| r == 1.0));
        for k in 0..2 {
            for j in 0..2 {
                for lag in 0..=3 {
                    assert!(stats.pairwise[k][j][lag].abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn binning_follows_at_least_once_rule() {
        let mut r = Raster::omega0(1, 0, 5);
        r.set_bit(0, 1, 1);
        r.set_bit(0, 4, 1);
        let binned = bin_raster(&r, 3);
        assert_eq!(binned.window(), (0, 1));
        assert_eq!(binned.bit(0, 0), 1);
        assert_eq!(binned.bit(0, 1), 1);

        let identity = bin_raster(&r, 1);
        assert_eq!(identity, r);

        let quiet = bin_raster(&Raster::omega0(3, 0, 8), 2);
        assert!((0..3).all(|k| (0..quiet.len() as i64).all(|t| quiet.bit(k, t) == 0)));
    }
}
