//! Synaptic response profiles, conductances, effective leak factors, and the
//! membrane-potential integrals feeding the conditional spike law.
//!
//! All quantities are evaluated exactly for the horizon-truncated raster: the
//! caller picks an expansion depth, spikes below it are dropped (following the
//! quiet-past convention), and the induced error is controlled by the decay
//! bounds in [`crate::analysis`]. Inner conductance integrals use closed-form
//! per-spike antiderivatives; only the leak-weighted outer integrals go
//! through quadrature.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::model::Network;
use crate::params::{CurrentTerm, ProfileKind};
use crate::raster::{Raster, ResetTime};

/// Synaptic response kernel `(t/tau)^d e^{-t/tau}` for `t >= 0`, zero for
/// negative times.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaProfile {
    kind: ProfileKind,
    tau: f64,
}

impl AlphaProfile {
    pub fn new(kind: ProfileKind, tau: f64) -> Self {
        assert!(tau > 0.0, "profile decay time must be positive");
        AlphaProfile { kind, tau }
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn degree(&self) -> u32 {
        self.kind.degree()
    }

    /// Profile value at `t`. Causal: exactly zero for `t < 0`, and the
    /// exponential profile takes the value 1 at `t = 0`.
    pub fn value(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let y = t / self.tau;
        match self.degree() {
            0 => (-y).exp(),
            1 => y * (-y).exp(),
            d => y.powi(d as i32) * (-y).exp(),
        }
    }

    /// Argmax of the profile: `d * tau`.
    pub fn peak_time(&self) -> f64 {
        self.degree() as f64 * self.tau
    }

    fn factorial(d: u32) -> f64 {
        (1..=d as u64).fold(1.0, |acc, i| acc * i as f64)
    }

    /// Antiderivative `A(x) = integral of the profile over [0, x]`, in
    /// closed form via the lower incomplete gamma function.
    pub fn antiderivative(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let d = self.degree();
        let y = x / self.tau;
        let mut partial = 0.0;
        let mut term = 1.0;
        for m in 0..=d {
            if m > 0 {
                term *= y / m as f64;
            }
            partial += term;
        }
        self.tau * Self::factorial(d) * (1.0 - (-y).exp() * partial)
    }

    /// Upper bound on the summed profile values at integer lags deeper than
    /// `depth`: the tail integral `P_d(depth/tau) e^{-depth/tau}`, plus the
    /// peak value when the unimodal hump still lies beyond `depth`.
    pub fn tail_bound(&self, depth: f64) -> f64 {
        let d = self.degree();
        let y = depth.max(0.0) / self.tau;
        let mut poly = 0.0;
        let mut term = Self::factorial(d);
        for i in 0..=d {
            if i > 0 {
                term *= y / i as f64;
            }
            poly += term;
        }
        let mut bound = self.tau * poly * (-y).exp();
        if depth < self.peak_time() {
            bound += (d as f64).powi(d as i32) * (-(d as f64)).exp();
        }
        bound
    }

    /// Sum of profile responses at `t` over the given presynaptic spike
    /// times; zero on an empty list.
    pub fn response_sum(&self, t: f64, spikes: &[i64]) -> f64 {
        spikes
            .iter()
            .filter(|&&s| (s as f64) < t)
            .map(|&s| self.value(t - s as f64))
            .sum()
    }

    /// Convergent series of per-unit-interval suprema, summed from the
    /// zeroth interval: bounds the saturated response at any real time.
    pub fn saturated_sum(&self) -> Result<f64> {
        let peak = self.peak_time();
        let mut total = 0.0;
        let mut n = 0u64;
        loop {
            let lo = n as f64;
            let hi = lo + 1.0;
            let sup = if peak >= lo && peak < hi {
                self.value(peak)
            } else if hi <= peak {
                self.value(hi)
            } else {
                self.value(lo)
            };
            total += sup;
            n += 1;
            if (n as f64) > peak && sup <= 1e-16 * total {
                return Ok(total);
            }
            if n > 10_000_000 {
                return Err(Error::SeriesDivergence {
                    what: "saturated profile response",
                    terms: n as usize,
                });
            }
        }
    }
}

/// Free-function form of [`AlphaProfile::value`].
pub fn alpha_value(profile: &AlphaProfile, t: f64) -> f64 {
    profile.value(t)
}

/// Free-function form of [`AlphaProfile::response_sum`].
pub fn alpha_sum(profile: &AlphaProfile, t: f64, spikes: &[i64]) -> f64 {
    profile.response_sum(t, spikes)
}

/// Free-function form of [`AlphaProfile::tail_bound`].
pub fn alpha_tail_bound(profile: &AlphaProfile, depth: f64) -> f64 {
    profile.tail_bound(depth)
}

/// Settings for the composite Gauss-Legendre quadrature.
#[derive(Clone, Copy, Debug)]
pub struct IntegralConfig {
    /// Relative tolerance certified by comparing successive refinements.
    pub rel_tol: f64,
    /// Gauss-Legendre nodes per unit subinterval.
    pub nodes_per_unit: usize,
    /// Maximum number of interval-halving refinements.
    pub refinement_limit: u32,
    /// Tolerance on the dropped conductance tail when a horizon truncates a
    /// spiking past.
    pub horizon_tol: f64,
}

impl Default for IntegralConfig {
    fn default() -> Self {
        IntegralConfig { rel_tol: 1e-9, nodes_per_unit: 8, refinement_limit: 6, horizon_tol: 1e-9 }
    }
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

type GaussRule = Arc<(Vec<f64>, Vec<f64>)>;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
fn gauss_legendre_rule(n: usize) -> GaussRule {
    static RULES: OnceLock<Mutex<HashMap<usize, GaussRule>>> = OnceLock::new();
    let cache = RULES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().unwrap();
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut nodes = vec![0.0; n];
            let mut weights = vec![0.0; n];
            for i in 0..n.div_ceil(2) {
                let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                for _ in 0..100 {
                    let (p, dp) = legendre_and_deriv(n, z);
                    let dz = p / dp;
                    z -= dz;
                    if dz.abs() < 1e-16 {
                        break;
                    }
                }
                let (_, dp) = legendre_and_deriv(n, z);
                nodes[i] = -z;
                nodes[n - 1 - i] = z;
                let w = 2.0 / ((1.0 - z * z) * dp * dp);
                weights[i] = w;
                weights[n - 1 - i] = w;
            }
            Arc::new((nodes, weights))
        })
        .clone()
}

/// Composite Gauss-Legendre integration of `f` over `[a, b]`, split at every
/// interior integer (where spike-driven integrands kink) and at the given
/// extra breakpoints, refined by interval halving until two successive
/// levels agree to the relative tolerance.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    extra_breaks: &[f64],
    cfg: &IntegralConfig,
) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let mut cuts = vec![a];
    let mut t = a.floor() + 1.0;
    while t < b {
        if t > a {
            cuts.push(t);
        }
        t += 1.0;
    }
    cuts.extend(extra_breaks.iter().copied().filter(|&x| x > a && x < b));
    cuts.push(b);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-12);

    let rule = gauss_legendre_rule(cfg.nodes_per_unit);
    let (nodes, weights) = (&rule.0, &rule.1);
    let eval = |level: u32| -> f64 {
        let pieces = 1u64 << level;
        let mut total = 0.0;
        for seg in cuts.windows(2) {
            let (lo, hi) = (seg[0], seg[1]);
            let h = (hi - lo) / pieces as f64;
            for p in 0..pieces {
                let mid = lo + (p as f64 + 0.5) * h;
                let half = 0.5 * h;
                let mut acc = 0.0;
                for (x, w) in nodes.iter().zip(weights) {
                    acc += w * f(mid + half * x);
                }
                total += acc * half;
            }
        }
        total
    };

    let mut prev = eval(0);
    for level in 1..=cfg.refinement_limit {
        let cur = eval(level);
        if (cur - prev).abs() <= cfg.rel_tol * cur.abs().max(f64::MIN_POSITIVE) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureNonConvergence {
        rel_tol: cfg.rel_tol,
        levels: cfg.refinement_limit,
    })
}

/// Evaluation context for one postsynaptic neuron: the presynaptic spike
/// times within the horizon and the synapse constants, with exact
/// conductance antiderivatives.
pub(crate) struct SynapticContext<'a> {
    net: &'a Network,
    k: usize,
    /// Per active synapse: (max conductance, weight, profile, spike times).
    synapses: Vec<(f64, f64, AlphaProfile, Vec<i64>)>,
}

impl<'a> SynapticContext<'a> {
    /// Collect presynaptic spikes in `[floor(t_max) - horizon, t_max)`.
    pub fn new(net: &'a Network, k: usize, raster: &Raster, t_max: f64, horizon: u32) -> Self {
        let p = net.params();
        let synapses = p
            .presynaptic(k)
            .map(|j| {
                let spikes = raster.spike_times(j, t_max, horizon);
                (p.max_conductance(k, j), p.weight(k, j), p.profile(k, j), spikes)
            })
            .collect();
        SynapticContext { net, k, synapses }
    }

    /// Pointwise conductance `g_k(u)` for the truncated raster.
    pub fn conductance_at(&self, u: f64) -> f64 {
        let mut g = self.net.params().leak_conductance(self.k);
        for (gkj, _, profile, spikes) in &self.synapses {
            g += gkj * profile.response_sum(u, spikes);
        }
        g
    }

    /// Exact inner integral of the conductance over `[t1, t2]`.
    pub fn conductance_integral(&self, t1: f64, t2: f64) -> f64 {
        let mut total = self.net.params().leak_conductance(self.k) * (t2 - t1);
        for (gkj, _, profile, spikes) in &self.synapses {
            let mut acc = 0.0;
            for &s in spikes {
                let s = s as f64;
                if s >= t2 {
                    break;
                }
                acc += profile.antiderivative(t2 - s) - profile.antiderivative(t1 - s);
            }
            total += gkj * acc;
        }
        total
    }

    /// Effective leak factor between `t1` and `t2`.
    pub fn gamma(&self, t1: f64, t2: f64) -> f64 {
        (-self.conductance_integral(t1, t2) / self.net.params().capacitance(self.k)).exp()
    }

    /// Weighted synaptic drive at `t1`.
    pub fn weighted_response(&self, t1: f64) -> f64 {
        self.synapses
            .iter()
            .map(|(_, w, profile, spikes)| w * profile.response_sum(t1, spikes))
            .sum::<f64>()
    }
}

/// Bound on the conductance mass a truncation at `cutoff` may drop. Zero
/// when the raster provably has no spikes below the cutoff.
fn dropped_tail_bound(net: &Network, k: usize, raster: &Raster, t: f64, cutoff: i64) -> f64 {
    let has_deep_past = match raster.past() {
        crate::raster::Past::Empty => raster.window().0 < cutoff,
        _ => true,
    };
    if !has_deep_past {
        return 0.0;
    }
    let p = net.params();
    p.presynaptic(k)
        .map(|j| p.max_conductance(k, j) * p.profile(k, j).tail_bound(t - cutoff as f64))
        .sum()
}

/// Closed form of the pre-cutoff external integral
/// `int_{-inf}^{c} term(t1) e^{-(c - t1)/tau} dt1`.
fn current_tail_integral(term: &CurrentTerm, c: f64, tau: f64) -> f64 {
    match *term {
        CurrentTerm::Constant(v) => v * tau,
        CurrentTerm::Step { value, t_on, t_off } => {
            let hi = t_off.min(c);
            if hi <= t_on {
                0.0
            } else {
                value * tau * ((-(c - hi) / tau).exp() - (-(c - t_on) / tau).exp())
            }
        }
        CurrentTerm::Sinusoid { amplitude, period, phase } => {
            let omega = 2.0 * std::f64::consts::PI / period;
            let a = 1.0 / tau;
            amplitude * (a * (omega * c + phase).sin() - omega * (omega * c + phase).cos())
                / (a * a + omega * omega)
        }
    }
}

impl Network {
    /// Conductance `g_k(t, omega)` with the past expanded `horizon` steps
    /// below `floor(t)`.
    pub fn conductance(&self, k: usize, t: f64, raster: &Raster, horizon: u32) -> Result<f64> {
        let cutoff = t.floor() as i64 - horizon as i64;
        let tail = dropped_tail_bound(self, k, raster, t, cutoff);
        if tail > self.integral().horizon_tol {
            return Err(Error::HorizonTooShallow {
                horizon,
                tail,
                tol: self.integral().horizon_tol,
            });
        }
        let ctx = SynapticContext::new(self, k, raster, t, horizon);
        Ok(ctx.conductance_at(t))
    }

    /// Effective leak `Gamma_k(t1, t2, omega)`: the exponential of the exact
    /// inner conductance integral, so no quadrature error enters here.
    pub fn effective_leak(&self, k: usize, t1: f64, t2: f64, raster: &Raster, horizon: u32) -> f64 {
        assert!(t1 <= t2, "effective leak needs t1 <= t2");
        let ctx = SynapticContext::new(self, k, raster, t2, horizon);
        ctx.gamma(t1, t2)
    }

    /// Synaptic contribution to the membrane potential over `[s, t]`.
    pub fn v_syn(&self, k: usize, s: f64, t: f64, raster: &Raster, horizon: u32) -> Result<f64> {
        if !self.params().has_synapses(k) {
            return Ok(0.0);
        }
        let ctx = SynapticContext::new(self, k, raster, t, horizon);
        let integral =
            integrate(|t1| ctx.gamma(t1, t) * ctx.weighted_response(t1), s, t, &[], self.integral())?;
        Ok(integral / self.params().capacitance(k))
    }

    /// Leak-reversal and external-current contribution over `[s, t]`.
    pub fn v_ext(&self, k: usize, s: f64, t: f64, raster: &Raster, horizon: u32) -> Result<f64> {
        let p = self.params();
        let e_l = p.raw().leak_reversal;
        let tau_l = p.tau_leak(k);
        let c = p.capacitance(k);
        let terms = p.current().terms(k);
        if e_l == 0.0 && terms.is_empty() {
            return Ok(0.0);
        }
        let ctx = SynapticContext::new(self, k, raster, t, horizon);
        let mut breaks = Vec::new();
        for term in terms {
            breaks.extend(term.breakpoints());
        }
        let current = p.current();
        integrate(
            |t1| (e_l / tau_l + current.at(k, t1) / c) * ctx.gamma(t1, t),
            s,
            t,
            &breaks,
            self.integral(),
        )
    }

    /// Lower integration limit and whether the pre-cutoff tail must be added
    /// analytically.
    fn integration_start(&self, k: usize, n: i64, raster: &Raster, horizon: u32) -> (f64, bool) {
        let cutoff = n - horizon as i64;
        match raster.last_reset(k, n) {
            ResetTime::Time(tau) if tau >= cutoff => (tau as f64, false),
            _ => (cutoff as f64, true),
        }
    }

    /// Synaptic contribution anchored at the last reset of neuron `k` before
    /// `n` (or at the horizon cutoff when the reset lies deeper). The quiet
    /// pre-cutoff tail contributes nothing here.
    pub fn v_syn_at(&self, k: usize, n: i64, raster: &Raster, horizon: u32) -> Result<f64> {
        let (s, _) = self.integration_start(k, n, raster, horizon);
        self.v_syn(k, s, n as f64, raster, horizon)
    }

    /// Leak and external contribution anchored at the last reset of neuron
    /// `k` before `n`. An unresolved reset adds the closed-form quiet tail.
    pub fn v_ext_at(&self, k: usize, n: i64, raster: &Raster, horizon: u32) -> Result<f64> {
        let t = n as f64;
        let (s, unresolved) = self.integration_start(k, n, raster, horizon);
        let mut total = self.v_ext(k, s, t, raster, horizon)?;
        if unresolved {
            let p = self.params();
            let ctx = SynapticContext::new(self, k, raster, t, horizon);
            let tau_l = p.tau_leak(k);
            let mut tail = p.raw().leak_reversal;
            for term in p.current().terms(k) {
                tail += current_tail_integral(term, s, tau_l) / p.capacitance(k);
            }
            total += ctx.gamma(s, t) * tail;
        }
        Ok(total)
    }

    /// Deterministic membrane potential `V^{det}_k(tau_k(n, omega), n, omega)`
    /// at integer time `n`: the sum of the synaptic and external
    /// contributions, fused into one quadrature pass. When the last reset
    /// lies beyond the horizon the integral starts at the cutoff and the
    /// quiet pre-cutoff tail is added in closed form.
    pub fn v_det(&self, k: usize, n: i64, raster: &Raster, horizon: u32) -> Result<f64> {
        let t = n as f64;
        let p = self.params();
        let e_l = p.raw().leak_reversal;
        let tau_l = p.tau_leak(k);
        let c = p.capacitance(k);
        let terms = p.current().terms(k);
        let has_syn = p.has_synapses(k);
        let has_ext = e_l != 0.0 || !terms.is_empty();
        let (s, unresolved) = self.integration_start(k, n, raster, horizon);
        if !has_syn && !has_ext {
            return Ok(0.0);
        }
        let ctx = SynapticContext::new(self, k, raster, t, horizon);
        let mut breaks = Vec::new();
        for term in terms {
            breaks.extend(term.breakpoints());
        }
        let current = p.current();
        let mut total = integrate(
            |t1| {
                let mut drive = if has_ext { e_l / tau_l + current.at(k, t1) / c } else { 0.0 };
                if has_syn {
                    drive += ctx.weighted_response(t1) / c;
                }
                ctx.gamma(t1, t) * drive
            },
            s,
            t,
            &breaks,
            self.integral(),
        )?;
        if unresolved && has_ext {
            let mut tail = e_l;
            for term in terms {
                tail += current_tail_integral(term, s, tau_l) / c;
            }
            total += ctx.gamma(s, t) * tail;
        }
        Ok(total)
    }

    /// Conditional noise variance `sigma_k^2(tau_k(n, omega), n, omega)` at
    /// integer time `n`. An unresolved reset contributes the closed-form
    /// quiet-tail variance instead of the reset term.
    pub fn sigma_sq(&self, k: usize, n: i64, raster: &Raster, horizon: u32) -> Result<f64> {
        let t = n as f64;
        let p = self.params();
        let ratio = p.raw().noise_amplitude / p.capacitance(k);
        let (s, unresolved) = self.integration_start(k, n, raster, horizon);
        let ctx = SynapticContext::new(self, k, raster, t, horizon);
        let integral = integrate(
            |t1| {
                let g = ctx.gamma(t1, t);
                g * g
            },
            s,
            t,
            &[],
            self.integral(),
        )?;
        let gamma_s = ctx.gamma(s, t);
        let boundary = if unresolved {
            // quiet tail below the cutoff: int e^{-2(s - t1)/tau_L} dt1
            ratio * ratio * gamma_s * gamma_s * p.tau_leak(k) / 2.0
        } else {
            gamma_s * gamma_s * p.raw().reset_std.powi(2)
        };
        Ok(boundary + ratio * ratio * integral)
    }

    /// Smallest depth at which the analytic variation bound on the
    /// transition probability falls to `eps`. Monotone nonincreasing in
    /// `eps`; always terminates because the bounds decay exponentially.
    pub fn history_horizon(&self, eps: f64) -> u32 {
        assert!(eps > 0.0, "history horizon needs a positive tolerance");
        let mut m = 0u32;
        loop {
            if crate::analysis::variation_bound(self, crate::analysis::Quantity::Kernel, m) <= eps {
                return m;
            }
            m += 1;
            if m > 1_000_000 {
                return m;
            }
        }
    }
}
