//! Network parameters: the full static description of a conductance-based
//! integrate-and-fire network, validation, and the derived uniform-bound
//! tables used by the conditional spike law.
//!
//! Conventions baked in here: the spike duration is the time unit (one raster
//! step), the rest potential is zero, and the reset value is a centered
//! Gaussian with standard deviation `reset_std`.

use serde::{Deserialize, Serialize};

use crate::dynamics::AlphaProfile;
use crate::error::{Error, Result};
use crate::kernel::gaussian_tail;

/// Excitatory/inhibitory membership of a presynaptic neuron. Decides which
/// reversal potential scales its synapses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Population {
    Excitatory,
    Inhibitory,
}

/// Synaptic response kernel family: `(t/tau)^d e^{-t/tau}` for `t >= 0`,
/// zero before. `Exponential` is degree 0, `Alpha` degree 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileKind {
    Exponential,
    Alpha,
    PowerExponential(u32),
}

impl ProfileKind {
    /// Polynomial degree of the profile's exponential tail.
    pub fn degree(&self) -> u32 {
        match self {
            ProfileKind::Exponential => 0,
            ProfileKind::Alpha => 1,
            ProfileKind::PowerExponential(d) => *d,
        }
    }
}

/// One additive term of a deterministic external current.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurrentTerm {
    Constant(f64),
    Step { value: f64, t_on: f64, t_off: f64 },
    Sinusoid { amplitude: f64, period: f64, phase: f64 },
}

impl CurrentTerm {
    /// Value of the term at time `t`.
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            CurrentTerm::Constant(v) => v,
            CurrentTerm::Step { value, t_on, t_off } => {
                if t >= t_on && t < t_off {
                    value
                } else {
                    0.0
                }
            }
            CurrentTerm::Sinusoid { amplitude, period, phase } => {
                amplitude * (2.0 * std::f64::consts::PI * t / period + phase).sin()
            }
        }
    }

    /// Closed-form bound on `sup_t |term(t)|`.
    pub fn sup_abs(&self) -> f64 {
        match *self {
            CurrentTerm::Constant(v) => v.abs(),
            CurrentTerm::Step { value, .. } => value.abs(),
            CurrentTerm::Sinusoid { amplitude, .. } => amplitude.abs(),
        }
    }

    /// Times where the term is discontinuous (quadrature split points).
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            CurrentTerm::Step { t_on, t_off, .. } => vec![t_on, t_off],
            _ => Vec::new(),
        }
    }
}

/// Per-neuron deterministic external currents, each a sum of terms.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CurrentSpec {
    terms: Vec<Vec<CurrentTerm>>,
}

impl CurrentSpec {
    /// No external current for `n_neurons` neurons.
    pub fn none(n_neurons: usize) -> Self {
        CurrentSpec { terms: vec![Vec::new(); n_neurons] }
    }

    pub fn new(terms: Vec<Vec<CurrentTerm>>) -> Self {
        CurrentSpec { terms }
    }

    pub fn n_neurons(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self, k: usize) -> &[CurrentTerm] {
        &self.terms[k]
    }

    /// Deterministic evaluation of neuron `k`'s current at time `t`.
    pub fn at(&self, k: usize, t: f64) -> f64 {
        self.terms[k].iter().map(|term| term.at(t)).sum()
    }

    /// Per-neuron sup-norm bound, summed over terms.
    pub fn sup_abs(&self, k: usize) -> f64 {
        self.terms[k].iter().map(|term| term.sup_abs()).sum()
    }

    /// Global current bound `i^+ = max_k sup_t |i_k(t)|`.
    pub fn sup_abs_all(&self) -> f64 {
        (0..self.terms.len()).map(|k| self.sup_abs(k)).fold(0.0, f64::max)
    }
}

/// Pure evaluation of an external current term list.
pub fn external_current_at(spec: &CurrentSpec, k: usize, t: f64) -> f64 {
    spec.at(k, t)
}

/// Raw parameter vector of the network. Validate with [`validate`] before use.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    pub n_neurons: usize,
    /// Membrane capacitance per neuron.
    pub capacitance: Vec<f64>,
    /// Firing threshold, common to all neurons.
    pub threshold: f64,
    /// Leak reversal potential (rest potential is zero).
    pub leak_reversal: f64,
    pub excitatory_reversal: f64,
    pub inhibitory_reversal: f64,
    /// Leak conductance per neuron.
    pub leak_conductance: Vec<f64>,
    /// Excitatory/inhibitory label per (presynaptic) neuron.
    pub population: Vec<Population>,
    /// Maximal synaptic conductances, `max_conductance[post][pre]`; a zero
    /// entry means no synapse.
    pub max_conductance: Vec<Vec<f64>>,
    /// Synaptic decay times, `synapse_tau[post][pre]`.
    pub synapse_tau: Vec<Vec<f64>>,
    /// Shared response-profile family for all synapses.
    pub profile: ProfileKind,
    /// White-noise amplitude on the membrane current.
    pub noise_amplitude: f64,
    /// Standard deviation of the Gaussian reset value.
    pub reset_std: f64,
    /// Refractory period, in [0, 1) so consecutive firing stays possible.
    /// Has no effect at raster resolution; kept as part of the parameter set.
    pub refractory: f64,
    pub external_current: CurrentSpec,
}

impl NetworkParams {
    /// A single isolated neuron with no synapses and no external current.
    pub fn isolated(
        capacitance: f64,
        leak_conductance: f64,
        threshold: f64,
        leak_reversal: f64,
        noise_amplitude: f64,
        reset_std: f64,
    ) -> Self {
        NetworkParams {
            n_neurons: 1,
            capacitance: vec![capacitance],
            threshold,
            leak_reversal,
            excitatory_reversal: 1.0,
            inhibitory_reversal: -1.0,
            leak_conductance: vec![leak_conductance],
            population: vec![Population::Excitatory],
            max_conductance: vec![vec![0.0]],
            synapse_tau: vec![vec![1.0]],
            profile: ProfileKind::Exponential,
            noise_amplitude,
            reset_std,
            refractory: 0.0,
            external_current: CurrentSpec::none(1),
        }
    }
}

/// Parameters that passed validation, plus a few cached derived quantities.
/// Immutable afterwards and safe to share across threads.
#[derive(Clone, Debug)]
pub struct ValidatedParams {
    params: NetworkParams,
    /// Synaptic weights `w[post][pre] = E^{+/-} * G[post][pre]`.
    weights: Vec<Vec<f64>>,
    /// Global external-current bound `i^+`.
    i_plus: f64,
}

impl ValidatedParams {
    pub fn raw(&self) -> &NetworkParams {
        &self.params
    }

    pub fn n_neurons(&self) -> usize {
        self.params.n_neurons
    }

    pub fn threshold(&self) -> f64 {
        self.params.threshold
    }

    pub fn capacitance(&self, k: usize) -> f64 {
        self.params.capacitance[k]
    }

    pub fn leak_conductance(&self, k: usize) -> f64 {
        self.params.leak_conductance[k]
    }

    /// Leak time `tau_L = C_k / g_{L,k}`.
    pub fn tau_leak(&self, k: usize) -> f64 {
        self.params.capacitance[k] / self.params.leak_conductance[k]
    }

    pub fn max_conductance(&self, post: usize, pre: usize) -> f64 {
        self.params.max_conductance[post][pre]
    }

    pub fn weight(&self, post: usize, pre: usize) -> f64 {
        self.weights[post][pre]
    }

    /// Response profile of the synapse `pre -> post`.
    pub fn profile(&self, post: usize, pre: usize) -> AlphaProfile {
        AlphaProfile::new(self.params.profile, self.params.synapse_tau[post][pre])
    }

    /// Presynaptic neurons with an actual synapse onto `post`.
    pub fn presynaptic(&self, post: usize) -> impl Iterator<Item = usize> + '_ {
        let row = &self.params.max_conductance[post];
        (0..self.params.n_neurons).filter(move |&j| row[j] > 0.0)
    }

    pub fn has_synapses(&self, post: usize) -> bool {
        self.params.max_conductance[post].iter().any(|&g| g > 0.0)
    }

    pub fn current(&self) -> &CurrentSpec {
        &self.params.external_current
    }

    pub fn i_plus(&self) -> f64 {
        self.i_plus
    }
}

fn check_len(field: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::InvalidParameter {
            field: field.to_string(),
            reason: format!("expected length {expected}, got {got}"),
        });
    }
    Ok(())
}

fn check_finite(field: &str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::InvalidParameter {
            field: field.to_string(),
            reason: format!("must be finite, got {value}"),
        });
    }
    Ok(())
}

/// Check every invariant of the parameter vector and freeze it.
pub fn validate(params: NetworkParams) -> Result<ValidatedParams> {
    let n = params.n_neurons;
    if n == 0 {
        return Err(Error::InvalidParameter {
            field: "n_neurons".into(),
            reason: "must be at least 1".into(),
        });
    }
    check_len("capacitance", params.capacitance.len(), n)?;
    check_len("leak_conductance", params.leak_conductance.len(), n)?;
    check_len("population", params.population.len(), n)?;
    check_len("max_conductance", params.max_conductance.len(), n)?;
    check_len("synapse_tau", params.synapse_tau.len(), n)?;
    check_len("external_current", params.external_current.n_neurons(), n)?;

    for scalar in [
        ("threshold", params.threshold),
        ("leak_reversal", params.leak_reversal),
        ("excitatory_reversal", params.excitatory_reversal),
        ("inhibitory_reversal", params.inhibitory_reversal),
    ] {
        check_finite(scalar.0, scalar.1)?;
    }

    for (k, &c) in params.capacitance.iter().enumerate() {
        if c <= 0.0 || !c.is_finite() {
            return Err(Error::NonPositiveCapacitance { neuron: k, value: c });
        }
    }
    for (k, &g) in params.leak_conductance.iter().enumerate() {
        if g <= 0.0 || !g.is_finite() {
            return Err(Error::InvalidParameter {
                field: format!("leak_conductance[{k}]"),
                reason: format!("must be strictly positive, got {g}"),
            });
        }
    }
    if params.noise_amplitude <= 0.0 || !params.noise_amplitude.is_finite() {
        return Err(Error::NonPositiveSigma {
            field: "noise_amplitude",
            value: params.noise_amplitude,
        });
    }
    if params.reset_std <= 0.0 || !params.reset_std.is_finite() {
        return Err(Error::NonPositiveSigma { field: "reset_std", value: params.reset_std });
    }
    if params.refractory.is_nan() || params.refractory < 0.0 || params.refractory >= 1.0 {
        return Err(Error::RefractoryOutOfRange { value: params.refractory });
    }
    if params.profile.degree() > 60 {
        return Err(Error::InvalidParameter {
            field: "profile".into(),
            reason: format!("degree {} too large for stable factorials", params.profile.degree()),
        });
    }

    for (k, row) in params.max_conductance.iter().enumerate() {
        check_len(&format!("max_conductance[{k}]"), row.len(), n)?;
        for (j, &g) in row.iter().enumerate() {
            if g < 0.0 || !g.is_finite() {
                return Err(Error::NegativeConductance { post: k, pre: j, value: g });
            }
        }
    }
    for (k, row) in params.synapse_tau.iter().enumerate() {
        check_len(&format!("synapse_tau[{k}]"), row.len(), n)?;
        for (j, &tau) in row.iter().enumerate() {
            if tau <= 0.0 || !tau.is_finite() {
                return Err(Error::InvalidParameter {
                    field: format!("synapse_tau[{k}][{j}]"),
                    reason: format!("must be strictly positive, got {tau}"),
                });
            }
        }
    }
    for k in 0..n {
        for term in params.external_current.terms(k) {
            let sup = term.sup_abs();
            if !sup.is_finite() {
                return Err(Error::InvalidParameter {
                    field: format!("external_current[{k}]"),
                    reason: "term has non-finite amplitude".into(),
                });
            }
            if let CurrentTerm::Sinusoid { period, .. } = term {
                if period.is_nan() || *period <= 0.0 {
                    return Err(Error::InvalidParameter {
                        field: format!("external_current[{k}]"),
                        reason: format!("sinusoid period must be positive, got {period}"),
                    });
                }
            }
        }
    }

    let weights = (0..n)
        .map(|k| {
            (0..n)
                .map(|j| {
                    let reversal = match params.population[j] {
                        Population::Excitatory => params.excitatory_reversal,
                        Population::Inhibitory => params.inhibitory_reversal,
                    };
                    reversal * params.max_conductance[k][j]
                })
                .collect()
        })
        .collect();
    let i_plus = params.external_current.sup_abs_all();

    Ok(ValidatedParams { params, weights, i_plus })
}

/// Uniform bounds derived from a validated parameter vector: conductance and
/// relaxation-time extremes, the envelope of the deterministic membrane
/// potential, the noise-variance interval, and the per-neuron firing
/// probability interval with its aggregates.
#[derive(Clone, Debug)]
pub struct BoundsTable {
    /// Conservative bound on the summed profile response under saturated firing.
    pub alpha_plus: f64,
    /// Maximal conductance `g_{M,k}` (saturated presynaptic firing).
    pub g_max: Vec<f64>,
    /// Maximal relaxation time `tau_{L,k} = C_k / g_{L,k}`.
    pub tau_leak: Vec<f64>,
    /// Minimal relaxation time `tau_{M,k} = C_k / g_{M,k}`.
    pub tau_min: Vec<f64>,
    /// Envelope of the deterministic membrane potential.
    pub v_lo: Vec<f64>,
    pub v_hi: Vec<f64>,
    /// Envelope of the conditional noise standard deviation.
    pub sigma_lo: Vec<f64>,
    pub sigma_hi: Vec<f64>,
    /// Range of the normalized threshold distance `X_k`.
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
    /// Range of the per-neuron firing probability.
    pub pi_lo: Vec<f64>,
    pub pi_hi: Vec<f64>,
    /// Per-neuron bounds on any single Bernoulli factor of the transition
    /// probability: `cap_lo <= min(p, 1-p)` side, `cap_hi >= max(p, 1-p)` side.
    pub cap_lo: Vec<f64>,
    pub cap_hi: Vec<f64>,
    /// Log of `cap_lo`, finite even where the factor bound underflows.
    pub ln_cap_lo: Vec<f64>,
    /// Strictly positive lower bound on every joint transition probability.
    /// May underflow to zero as a float; `ln_m_p_lower` never does.
    pub m_p_lower: f64,
    pub ln_m_p_lower: f64,
}

/// Compute the full bounds table.
///
/// The saturated-response constant is summed conservatively from the zeroth
/// unit interval so that fractional evaluation times are covered as well.
pub fn derive_bounds(params: &ValidatedParams) -> Result<BoundsTable> {
    let n = params.n_neurons();
    let raw = params.raw();

    // alpha^+ is the max over existing synapses of the per-synapse series of
    // unit-interval suprema; each per-synapse series also enters g_{M,k}.
    let mut alpha_plus: f64 = 0.0;
    let mut g_max = Vec::with_capacity(n);
    for k in 0..n {
        let mut g = raw.leak_conductance[k];
        for j in 0..n {
            let gkj = raw.max_conductance[k][j];
            if gkj > 0.0 {
                let series = params.profile(k, j).saturated_sum()?;
                alpha_plus = alpha_plus.max(series);
                g += gkj * series;
            }
        }
        g_max.push(g);
    }

    let tau_leak: Vec<f64> = (0..n).map(|k| params.tau_leak(k)).collect();
    let tau_min: Vec<f64> = (0..n).map(|k| raw.capacitance[k] / g_max[k]).collect();

    let i_plus = params.i_plus();
    let mut v_lo = Vec::with_capacity(n);
    let mut v_hi = Vec::with_capacity(n);
    for k in 0..n {
        let g_l = raw.leak_conductance[k];
        let ext = raw.leak_reversal.abs() + i_plus / g_l;
        let mut pos = 0.0;
        let mut neg = 0.0;
        for j in 0..n {
            let w = params.weight(k, j);
            if w > 0.0 {
                pos += w;
            } else {
                neg += w;
            }
        }
        v_lo.push(alpha_plus / g_l * neg - ext);
        v_hi.push(alpha_plus / g_l * pos + ext);
    }

    let mut sigma_lo = Vec::with_capacity(n);
    let mut sigma_hi = Vec::with_capacity(n);
    for k in 0..n {
        let ratio = raw.noise_amplitude / raw.capacitance[k];
        sigma_lo.push((ratio * (tau_min[k] / 2.0).sqrt()).min(raw.reset_std));
        sigma_hi.push((ratio * (tau_leak[k] / 2.0).sqrt()).max(raw.reset_std));
    }

    // Endpoints of X = (theta - V)/sigma over the V and sigma envelopes; the
    // extremizing sigma flips with the sign of the numerator.
    let theta = raw.threshold;
    let mut x_lo = Vec::with_capacity(n);
    let mut x_hi = Vec::with_capacity(n);
    for k in 0..n {
        let top = theta - v_lo[k];
        let bottom = theta - v_hi[k];
        x_hi.push(if top >= 0.0 { top / sigma_lo[k] } else { top / sigma_hi[k] });
        x_lo.push(if bottom >= 0.0 { bottom / sigma_hi[k] } else { bottom / sigma_lo[k] });
    }

    let pi_lo: Vec<f64> = x_hi.iter().map(|&x| gaussian_tail(x)).collect();
    let pi_hi: Vec<f64> = x_lo.iter().map(|&x| gaussian_tail(x)).collect();

    let mut cap_lo = Vec::with_capacity(n);
    let mut cap_hi = Vec::with_capacity(n);
    let mut ln_cap_lo = Vec::with_capacity(n);
    for k in 0..n {
        cap_lo.push(pi_lo[k].min(1.0 - pi_hi[k]));
        cap_hi.push(pi_hi[k].max(1.0 - pi_lo[k]));
        // both candidates are Gaussian tails: pi(x_hi) and pi(-x_lo)
        ln_cap_lo.push(
            crate::kernel::gaussian_tail_ln(x_hi[k])
                .min(crate::kernel::gaussian_tail_ln(-x_lo[k])),
        );
    }
    let m_p_lower = cap_lo.iter().product();
    let ln_m_p_lower = ln_cap_lo.iter().sum();

    Ok(BoundsTable {
        alpha_plus,
        g_max,
        tau_leak,
        tau_min,
        v_lo,
        v_hi,
        sigma_lo,
        sigma_hi,
        x_lo,
        x_hi,
        pi_lo,
        pi_hi,
        cap_lo,
        cap_hi,
        ln_cap_lo,
        m_p_lower,
        ln_m_p_lower,
    })
}

impl BoundsTable {
    /// Flat (quantity, neuron, value) rows; neurons are 1-based, scalar rows
    /// leave the neuron column empty.
    pub fn csv_rows(&self) -> Vec<(String, String, f64)> {
        let mut rows = vec![("alpha_plus".to_string(), String::new(), self.alpha_plus)];
        let per_neuron: [(&str, &Vec<f64>); 12] = [
            ("g_max", &self.g_max),
            ("tau_leak", &self.tau_leak),
            ("tau_min", &self.tau_min),
            ("v_lo", &self.v_lo),
            ("v_hi", &self.v_hi),
            ("sigma_lo", &self.sigma_lo),
            ("sigma_hi", &self.sigma_hi),
            ("x_lo", &self.x_lo),
            ("x_hi", &self.x_hi),
            ("pi_lo", &self.pi_lo),
            ("pi_hi", &self.pi_hi),
            ("cap_lo", &self.cap_lo),
        ];
        for (name, values) in per_neuron {
            for (k, &v) in values.iter().enumerate() {
                rows.push((name.to_string(), (k + 1).to_string(), v));
            }
        }
        for (k, &v) in self.cap_hi.iter().enumerate() {
            rows.push(("cap_hi".to_string(), (k + 1).to_string(), v));
        }
        rows.push(("m_p_lower".to_string(), String::new(), self.m_p_lower));
        rows.push(("ln_m_p_lower".to_string(), String::new(), self.ln_m_p_lower));
        rows
    }
}
