//! Analytic treatment of probe pulses.
//!
//! At the end of a probe pulse the ensemble splits into a subensemble
//! without photon emission, close to `|2>`, and one with emissions, close
//! to the stationary state of the 1-3 system. After the level-3 content has
//! decayed both behave as if projected onto fixed states in the 1-2 block.
//! This module computes those states exactly, the first-order no-photon
//! probabilities between consecutive pulses, and three closed-form
//! predictions for the level-2 population at the end of the pi pulse.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZenoError};
use crate::linalg3::{Mat3C, Vec3C, C64, I, ZERO};
use crate::vsystem::{
    pulse_regime_warnings, stationary_state, u_pi, validate_measurement_regime, DensityMatrix3,
    GeneratorKind, ReducedEvolution, RegimeWarning, SystemParams,
};

/// Width of the band outside `[0, 1]` tolerated for first-order
/// probabilities before they are reported as a breakdown of the expansion.
pub const PROBABILITY_BAND: f64 = 1e-9;

/// Emission weights below this multiple of `eps_p` make the emission
/// subensemble depend on the initial state at first order.
pub const EMISSION_WEIGHT_FACTOR: f64 = 10.0;

fn regime_error(warnings: &[RegimeWarning]) -> ZenoError {
    ZenoError::Regime(warnings.iter().map(|w| w.to_string()).collect())
}

fn require_pulse_regime(p: &SystemParams, tau_p: f64) -> Result<()> {
    let w = pulse_regime_warnings(p, tau_p);
    if w.is_empty() {
        Ok(())
    } else {
        Err(regime_error(&w))
    }
}

fn require_regime(p: &SystemParams, tau_p: f64, delta_t: f64) -> Result<()> {
    let w = validate_measurement_regime(p, tau_p, delta_t);
    if w.is_empty() {
        Ok(())
    } else {
        Err(regime_error(&w))
    }
}

/// `(D, A3^2 + Omega3^2, Omega3^2)` with `D = A3^2 + 2 Omega3^2`.
fn probe_denominators(p: &SystemParams) -> (f64, f64, f64) {
    let a = p.a3 * p.a3;
    let w = p.omega3 * p.omega3;
    (a + 2.0 * w, a + w, w)
}

// ---------------------------------------------------------------------------
// Subensemble states
// ---------------------------------------------------------------------------

/// Relative gap below which the slow root cannot be told apart from the
/// next one.
pub const SLOW_ROOT_GAP: f64 = 1e-10;

/// The slow eigenvector `|lambda_2>` of the probe-on generator, normalized.
pub fn slow_eigenvector(p: &SystemParams) -> Result<Vec3C> {
    let ev = ReducedEvolution::new(p, GeneratorKind::ProbeOn);
    let es = ev.spectrum().expect("probe-on evolution carries its spectrum");
    let gap = (es.eigenvalues[1] - es.eigenvalues[0]).norm();
    if gap <= SLOW_ROOT_GAP * es.spectral_radius() {
        return Err(ZenoError::Regime(vec![format!(
            "slow eigenvalue not separated from the fast pair (gap {gap:e})"
        )]));
    }
    Ok(es.right_vectors[0])
}

fn slow_eigenvalue_floor(p: &SystemParams) -> f64 {
    0.5 * p.omega2 * p.eps_p() / (1.0 + p.eps_r() * p.eps_r())
}

/// First-order bracket for the slow eigenvalue,
/// `l <= lambda_2 <= l (1 + eps_p^2)` with `l = Omega2 eps_p / (2 (1 + eps_r^2))`.
///
/// The lower end is exact. The upper end misses a term of order `eps_p^4`
/// and is exceeded by the true root once `eps_p^2 > eps_r^2`; see
/// [`slow_eigenvalue_bracket`] for a rigorous version.
pub fn slow_eigenvalue_bounds(p: &SystemParams) -> (f64, f64) {
    let base = slow_eigenvalue_floor(p);
    (base, base * (1.0 + p.eps_p() * p.eps_p()))
}

/// Rigorous bracket `l <= lambda_2 <= l (1 + d)`, with `d` the smallest
/// root of `eps_p^2 (1 + d)^2 = d`. The upper end is infinite for
/// `eps_p >= 1/2`.
pub fn slow_eigenvalue_bracket(p: &SystemParams) -> (f64, f64) {
    let base = slow_eigenvalue_floor(p);
    let e = p.eps_p() * p.eps_p();
    if e >= 0.25 {
        return (base, f64::INFINITY);
    }
    let d = 2.0 * e / ((1.0 - 2.0 * e) + (1.0 - 4.0 * e).sqrt());
    (base, base * (1.0 + d))
}

/// State of the no-emission subensemble at the end of a pulse,
/// `|lambda_2><lambda_2|`.
pub fn no_emission_state(p: &SystemParams) -> Result<DensityMatrix3> {
    Ok(DensityMatrix3::pure(&slow_eigenvector(p)?))
}

/// State of the emission subensemble at the end of a pulse of length
/// `tau_p`, `(rho_ss - exp(-M tau_p) rho_ss exp(-M^dagger tau_p)) / tr`.
pub fn emission_state(p: &SystemParams, tau_p: f64) -> Result<DensityMatrix3> {
    require_pulse_regime(p, tau_p)?;
    let ss = stationary_state(p)?;
    let decayed = ReducedEvolution::new(p, GeneratorKind::ProbeOn).evolve(&ss, tau_p);
    DensityMatrix3::from_hermitian(*ss.entries() - *decayed.entries()).normalized()
}

/// Weights of the two subensembles after one pulse for a given initial
/// state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubensembleSplit {
    pub no_emission_probability: f64,
    pub emission_probability: f64,
    /// Set when the emission weight is so small that the emission state
    /// depends on the initial state at first order.
    pub warning: Option<RegimeWarning>,
}

/// Splits a normalized state by a probe pulse of length `tau_p`.
pub fn subensemble_split(
    p: &SystemParams,
    tau_p: f64,
    rho: &DensityMatrix3,
) -> Result<SubensembleSplit> {
    let p0 = crate::vsystem::no_photon_probability(p, GeneratorKind::ProbeOn, tau_p, rho)?;
    let emission = 1.0 - p0;
    let limit = EMISSION_WEIGHT_FACTOR * p.eps_p();
    let warning = (emission < limit).then(|| RegimeWarning::SmallEmissionWeight {
        weight: emission,
        limit,
    });
    Ok(SubensembleSplit {
        no_emission_probability: p0,
        emission_probability: emission,
        warning,
    })
}

/// `K(tau) = int_0^tau A3 exp(-A3 t) U_pi(t)^dagger |1><1| U_pi(t) dt`,
/// the 1-2 state fed by decays from level 3 during a transient of length
/// `tau`. `tau = inf` gives the full transient.
pub fn decay_feed(p: &SystemParams, tau: f64) -> Mat3C {
    let a = p.a3;
    let w = p.omega2;
    // int_0^tau A3 exp(-a t) exp(i w t) dt
    let z = C64::new(a, -w);
    let tail = if tau.is_infinite() {
        ZERO
    } else {
        C64::new(-a * tau, w * tau).exp()
    };
    let j = (C64::new(1.0, 0.0) - tail) * a / z;
    let total = if tau.is_infinite() {
        1.0
    } else {
        -(-a * tau).exp_m1()
    };
    let mut k = Mat3C::zero();
    k[(0, 0)] = C64::new(0.5 * (total + j.re), 0.0);
    k[(1, 1)] = C64::new(0.5 * (total - j.re), 0.0);
    k[(0, 1)] = C64::new(0.0, -0.5 * j.im);
    k[(1, 0)] = C64::new(0.0, 0.5 * j.im);
    k
}

/// `P12 rho P12 + rho_33 K(inf)`: the virtual projection state a pulse-end
/// state relaxes to once level 3 has decayed.
pub fn project_after_transient(p: &SystemParams, rho: &DensityMatrix3) -> DensityMatrix3 {
    let p12 = Mat3C::p12();
    let block = p12 * *rho.entries() * p12;
    DensityMatrix3::from_hermitian(block + decay_feed(p, f64::INFINITY) * rho.population(3))
}

/// Exact evolution of a pulse-end state during a probe-off interval of
/// length `tau`, including the resetting from level-3 decays.
pub fn transient_evolution(
    p: &SystemParams,
    state_at_pulse_end: &DensityMatrix3,
    tau: f64,
) -> DensityMatrix3 {
    let rho = state_at_pulse_end.entries();
    let u = u_pi(p, tau);
    let p12 = Mat3C::p12();
    let half = (-0.5 * p.a3 * tau).exp();

    let block = p12 * *rho * p12 + decay_feed(p, tau) * rho[(2, 2)].re;
    let mut out = u.conjugate(&block);
    // Coherences between the 1-2 block and the decaying level 3.
    let p3 = Mat3C::ket_bra(3, 3);
    let cross = u * p12 * *rho * p3 * half;
    out = out + cross + cross.adjoint();
    out += p3 * (rho[(2, 2)] * half * half);
    DensityMatrix3::from_hermitian(out)
}

/// The four subensemble states of a single probe pulse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseOutcomeStates {
    pub rho_no_emission: DensityMatrix3,
    pub rho_emission: DensityMatrix3,
    pub rho_no_emission_projected: DensityMatrix3,
    pub rho_emission_projected: DensityMatrix3,
}

pub fn projected_states(p: &SystemParams, tau_p: f64) -> Result<PulseOutcomeStates> {
    let rho_emission = emission_state(p, tau_p)?;
    let rho_no_emission = no_emission_state(p)?;
    Ok(PulseOutcomeStates {
        rho_no_emission_projected: project_after_transient(p, &rho_no_emission),
        rho_emission_projected: project_after_transient(p, &rho_emission),
        rho_no_emission,
        rho_emission,
    })
}

/// First-order matrices for the subensemble states. They are only used as
/// cross-checks of the exact constructions above.
pub mod first_order {
    use super::*;

    /// `|lambda_2><lambda_2|` to first order.
    pub fn no_emission_state(p: &SystemParams) -> Mat3C {
        let (ep, er) = (p.eps_p(), p.eps_r());
        Mat3C([
            [ZERO, -I * ep, ZERO],
            [I * ep, C64::new(1.0, 0.0), C64::new(-er, 0.0)],
            [ZERO, C64::new(-er, 0.0), ZERO],
        ])
    }

    fn norm(p: &SystemParams, tau_p: f64) -> (f64, f64) {
        let (d, _, _) = probe_denominators(p);
        let dark = p.a3 * p.a3 * p.eps_p() * p.omega2 * tau_p;
        (d + dark, dark)
    }

    pub fn emission_state(p: &SystemParams, tau_p: f64) -> Mat3C {
        let (_, s, w) = probe_denominators(p);
        let (den, dark) = norm(p, tau_p);
        let a2 = p.a3 * p.a3;
        let ep = p.eps_p();
        let r = C64::new(p.eps_r() * s, 0.0);
        let m = Mat3C([
            [C64::new(s, 0.0), I * (ep * a2), I * (p.a3 * p.omega3)],
            [-I * (ep * a2), C64::new(dark, 0.0), r],
            [-I * (p.a3 * p.omega3), r, C64::new(w, 0.0)],
        ]);
        m * (1.0 / den)
    }

    pub fn emission_projected(p: &SystemParams, tau_p: f64) -> Mat3C {
        let (d, _, w) = probe_denominators(p);
        let (den, dark) = norm(p, tau_p);
        let off = I * (p.eps_p() * p.a3 * p.a3 - 0.5 * p.eps_a() * w);
        let m = Mat3C([
            [C64::new(d, 0.0), off, ZERO],
            [-off, C64::new(dark, 0.0), ZERO],
            [ZERO, ZERO, ZERO],
        ]);
        m * (1.0 / den)
    }

    pub fn no_emission_projected(p: &SystemParams) -> Mat3C {
        let ep = p.eps_p();
        Mat3C([
            [ZERO, -I * ep, ZERO],
            [I * ep, C64::new(1.0, 0.0), ZERO],
            [ZERO, ZERO, ZERO],
        ])
    }
}

// ---------------------------------------------------------------------------
// Emission intensity
// ---------------------------------------------------------------------------

/// Leading coefficients of the emission intensity
/// `I(tau) = c0 + c1 exp(-mu1 tau) + (fast terms)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntensityCoefficients {
    pub c0: f64,
    pub c1: f64,
    pub mu1: f64,
}

/// Coefficients for the initial state `rho`. `mu1` is correct up to terms
/// of order `Omega2^4`.
pub fn intensity_coefficients(
    p: &SystemParams,
    rho: &DensityMatrix3,
) -> Result<IntensityCoefficients> {
    if !(p.omega3 > 0.0) {
        return Err(ZenoError::InvalidArgument(
            "intensity coefficients need the probe on (omega3 > 0)".into(),
        ));
    }
    let (d, s, _) = probe_denominators(p);
    let a2 = p.a3 * p.a3;
    let c0 = 0.5 * p.a3 * p.omega3 * p.omega3 / s;
    let overlap = rho.expectation(&slow_eigenvector(p)?);
    let c1 = c0 * (a2 / d - 2.0 * s / d * overlap);
    let mu1 = 2.0 * p.eps_p() * p.omega2 * s / d;

    let bound = p.two_level_emission_rate() * (1.0 + 1e-12);
    if !(0.0..=bound).contains(&c0) || c1.abs() > bound {
        return Err(ZenoError::InternalConsistency(format!(
            "intensity coefficients c0 = {c0:e}, c1 = {c1:e} exceed {bound:e}"
        )));
    }
    Ok(IntensityCoefficients { c0, c1, mu1 })
}

// ---------------------------------------------------------------------------
// Repeated pulses
// ---------------------------------------------------------------------------

fn check_probability(name: &str, value: f64) -> Result<f64> {
    if value < -PROBABILITY_BAND || value > 1.0 + PROBABILITY_BAND || !value.is_finite() {
        return Err(ZenoError::Regime(vec![format!(
            "first-order {name} = {value} outside [0, 1]"
        )]));
    }
    Ok(value.clamp(0.0, 1.0))
}

/// No-photon probabilities for the next pulse, starting from the emission
/// (`p`) or the no-emission (`q`) projection state, to first order.
pub fn pq_probabilities(p: &SystemParams, tau_p: f64, delta_t: f64) -> Result<(f64, f64)> {
    require_regime(p, tau_p, delta_t)?;
    let (c, s) = ((p.omega2 * delta_t).cos(), (p.omega2 * delta_t).sin());
    let (d, sum, w) = probe_denominators(p);
    let a2 = p.a3 * p.a3;
    let (ep, ea) = (p.eps_p(), p.eps_a());
    let ot = p.omega2 * tau_p;
    let pp = 0.5 * (1.0 - c)
        + ep * (2.0 * s * sum / d + 0.5 * ot * c * (3.0 * a2 + 2.0 * w) / d - 0.5 * ot)
        - 0.5 * s * w / d * ea;
    let qq = 0.5 * (1.0 + c) - ep * (2.0 * s + 0.5 * ot * (1.0 + c));
    Ok((check_probability("p", pp)?, check_probability("q", qq)?))
}

/// The same probabilities evaluated with exact propagators and projection
/// states.
pub fn pq_probabilities_exact(p: &SystemParams, tau_p: f64, delta_t: f64) -> Result<(f64, f64)> {
    let states = projected_states(p, tau_p)?;
    let u = u_pi(p, delta_t);
    let on = ReducedEvolution::new(p, GeneratorKind::ProbeOn);
    let p0 = |rho: &DensityMatrix3| on.evolve(&rho.transformed(&u), tau_p).weight();
    Ok((
        p0(&states.rho_emission_projected),
        p0(&states.rho_no_emission_projected),
    ))
}

/// `sum_{j<m} x^j`, accurate for `x` close to 1.
pub fn geometric_sum(x: f64, m: u64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let one_minus = 1.0 - x;
    if one_minus == 0.0 {
        return m as f64;
    }
    if x > 0.0 && one_minus.abs() < 0.5 {
        -(m as f64 * (-one_minus).ln_1p()).exp_m1() / one_minus
    } else {
        (1.0 - x.powf(m as f64)) / one_minus
    }
}

/// Fraction `beta(k)` of atoms in the no-emission subensemble after pulse
/// `k`, from the recursion `beta(k+1) = p (1 - beta(k)) + q beta(k)`.
/// `k = 0` is treated as `k = 1`.
pub fn beta_sequence(p_prob: f64, q_prob: f64, beta1: f64, k: u64) -> f64 {
    let steps = k.max(1) - 1;
    let x = q_prob - p_prob;
    let value = p_prob * geometric_sum(x, steps) + x.powf(steps as f64) * beta1;
    value.clamp(0.0, 1.0)
}

/// `beta(1)` for atoms prepared in `|1>` at `t = 0`.
pub fn beta_initial(p: &SystemParams, tau_p: f64, delta_t: f64) -> Result<f64> {
    require_regime(p, tau_p, delta_t)?;
    let (c, s) = ((p.omega2 * delta_t).cos(), (p.omega2 * delta_t).sin());
    let ep = p.eps_p();
    let value = 0.5 * (1.0 - c) + ep * s - 0.5 * PI * tau_p / p.t_pi() * (1.0 - c) * ep;
    check_probability("beta(1)", value)
}

/// `beta(1)` for an explicit preparation. Only the ground state is
/// supported.
pub fn beta_initial_for(
    p: &SystemParams,
    tau_p: f64,
    delta_t: f64,
    prepared: &DensityMatrix3,
) -> Result<f64> {
    let ground = DensityMatrix3::basis(1);
    if (*prepared.entries() - *ground.entries()).max_abs() > 1e-12 {
        return Err(ZenoError::Schedule(
            "beta(1) is only defined for atoms prepared in |1>".into(),
        ));
    }
    beta_initial(p, tau_p, delta_t)
}

/// `beta(1)` evaluated exactly: no-photon probability of the first pulse
/// for `U_pi(delta_t) |1>`.
pub fn beta_initial_exact(p: &SystemParams, tau_p: f64, delta_t: f64) -> f64 {
    let psi = u_pi(p, delta_t).apply(&Vec3C::basis(1));
    ReducedEvolution::new(p, GeneratorKind::ProbeOn)
        .evolve(&DensityMatrix3::pure(&psi), tau_p)
        .weight()
}

// ---------------------------------------------------------------------------
// Predictions for rho_22(T_pi)
// ---------------------------------------------------------------------------

/// Level-2 population at the end of the pi pulse predicted three ways.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZenoPrediction {
    pub n: u32,
    /// `n` instantaneous ideal measurements.
    pub rho22_ideal: f64,
    /// Ideal measurements with the pulse length taken into account.
    pub rho22_modified: f64,
    /// First-order quantum-jump result.
    pub rho22_quantum_jump: f64,
    /// Non-empty when the first-order treatment does not apply; the
    /// quantum-jump figure is then only indicative.
    pub warnings: Vec<RegimeWarning>,
}

/// Scalars entering the closed-form predictions for `n` pulses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionInputs {
    pub n: u32,
    /// `cos(Omega2 dT)` with `dT = T_pi / n - tau_p`.
    pub c: f64,
    pub s: f64,
    pub eps_p: f64,
    pub eps_a: f64,
    /// `tau_p / T_pi`.
    pub tau_ratio: f64,
    pub a3_sq: f64,
    pub omega3_sq: f64,
}

/// Spacing between pulses for `n` pulses during the pi pulse.
pub fn pulse_spacing(p: &SystemParams, tau_p: f64, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(ZenoError::Schedule("number of pulses must be positive".into()));
    }
    let dt = p.t_pi() / n as f64 - tau_p;
    if !(dt > 0.0) {
        return Err(ZenoError::Schedule(format!(
            "{n} pulses of {tau_p} s do not fit into T_pi = {} s",
            p.t_pi()
        )));
    }
    Ok(dt)
}

impl PredictionInputs {
    pub fn new(p: &SystemParams, tau_p: f64, n: u32) -> Result<Self> {
        let dt = pulse_spacing(p, tau_p, n)?;
        let phase = p.omega2 * dt;
        Ok(PredictionInputs {
            n,
            c: phase.cos(),
            s: phase.sin(),
            eps_p: p.eps_p(),
            eps_a: p.eps_a(),
            tau_ratio: tau_p / p.t_pi(),
            a3_sq: p.a3 * p.a3,
            omega3_sq: p.omega3 * p.omega3,
        })
    }

    /// The same inputs with every small parameter set to zero.
    pub fn zeroth_order(&self) -> Self {
        PredictionInputs {
            eps_p: 0.0,
            eps_a: 0.0,
            ..*self
        }
    }

    pub fn ideal(&self) -> f64 {
        0.5 * (1.0 - (PI / self.n as f64).cos().powi(self.n as i32))
    }

    pub fn modified(&self) -> f64 {
        0.5 * (1.0 - self.c.powi(self.n as i32))
    }

    pub fn quantum_jump(&self) -> f64 {
        let PredictionInputs {
            n, c, s, eps_p, eps_a, tau_ratio, a3_sq, omega3_sq,
        } = *self;
        let nf = n as f64;
        let d = a3_sq + 2.0 * omega3_sq;
        let cn = c.powi(n as i32);
        let cn1 = c.powi(n as i32 - 1);
        let pt = PI * tau_ratio;
        let first = s * cn1 * ((2.0 * nf - 1.0) * a3_sq + 3.0 * nf * omega3_sq) / d
            + pt * nf * cn * (a3_sq + omega3_sq) / d
            - geometric_sum(c, n as u64) * (s + pt) * omega3_sq / d;
        let second = 0.25 * eps_a * s * omega3_sq / d
            * (geometric_sum(c, n as u64 - 1) + (nf - 1.0) * cn1);
        0.5 * (1.0 - cn) + eps_p * first - second
    }
}

/// The three closed-form predictions for `n` pulses of length `tau_p`.
pub fn zeno_prediction(p: &SystemParams, tau_p: f64, n: u32) -> Result<ZenoPrediction> {
    let inputs = PredictionInputs::new(p, tau_p, n)?;
    let dt = pulse_spacing(p, tau_p, n)?;
    Ok(ZenoPrediction {
        n,
        rho22_ideal: inputs.ideal(),
        rho22_modified: inputs.modified(),
        rho22_quantum_jump: inputs.quantum_jump(),
        warnings: validate_measurement_regime(p, tau_p, dt),
    })
}
