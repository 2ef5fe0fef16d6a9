//! The driven V-system: parameters, reduced generators and no-photon
//! propagation.
//!
//! Level 1 is the ground state, level 2 is stable and coupled to level 1 by
//! the rf field (Rabi frequency `omega2`), level 3 decays to level 1 with
//! Einstein coefficient `a3` and is coupled to level 1 by the probe laser
//! (Rabi frequency `omega3`). Rates are in 1/s, times in s.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZenoError};
use crate::linalg3::{
    eigensystem_default, expm_series, expm_spectral, EigenSystem, Mat3C, Vec3C, C64, I, ONE,
    ZERO,
};

/// Duration of the pi pulse in the reference experiment.
pub const REFERENCE_T_PI: f64 = 0.256;
/// Einstein coefficient of level 3 in the reference experiment.
pub const REFERENCE_A3: f64 = 1.2e8;
/// Probe Rabi frequency in the reference experiment.
pub const REFERENCE_OMEGA3: f64 = 1.9e6;
/// Probe pulse length in the reference experiment.
pub const REFERENCE_TAU_P: f64 = 2.4e-3;

/// Factor standing in for "much larger than" in the regime checks.
pub const REGIME_MARGIN: f64 = 10.0;
/// Small parameters at or above this value trigger a regime warning.
pub const EPSILON_LIMIT: f64 = 0.1;
/// Transient time in units of the level-3 lifetime.
pub const TRANSIENT_LIFETIMES: f64 = 15.0;

/// Physical rates of the V system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// rf Rabi frequency between levels 1 and 2.
    pub omega2: f64,
    /// Probe Rabi frequency between levels 1 and 3.
    pub omega3: f64,
    /// Einstein coefficient of level 3.
    pub a3: f64,
}

impl SystemParams {
    pub fn new(omega2: f64, omega3: f64, a3: f64) -> Result<Self> {
        let check = |name: &str, v: f64, strict: bool| {
            if !v.is_finite() || v < 0.0 || (strict && v == 0.0) {
                Err(ZenoError::InvalidArgument(format!(
                    "{name} must be {} and finite, got {v}",
                    if strict { "positive" } else { "non-negative" }
                )))
            } else {
                Ok(())
            }
        };
        check("omega2", omega2, false)?;
        check("omega3", omega3, false)?;
        check("a3", a3, true)?;
        Ok(SystemParams { omega2, omega3, a3 })
    }

    /// Parameters of the reference experiment with `omega2 = pi / T_pi`.
    pub fn reference() -> Self {
        SystemParams {
            omega2: PI / REFERENCE_T_PI,
            omega3: REFERENCE_OMEGA3,
            a3: REFERENCE_A3,
        }
    }

    /// Reference parameters with a strong probe, `omega3 = a3 / 2`.
    pub fn strong_probe() -> Self {
        SystemParams {
            omega3: REFERENCE_A3 / 2.0,
            ..Self::reference()
        }
    }

    /// Multiplies every rate by `factor`. All small parameters are unchanged
    /// and times scale by `1 / factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        SystemParams {
            omega2: self.omega2 * factor,
            omega3: self.omega3 * factor,
            a3: self.a3 * factor,
        }
    }

    pub fn with_omega2(&self, omega2: f64) -> Self {
        SystemParams { omega2, ..*self }
    }

    pub fn with_omega3(&self, omega3: f64) -> Self {
        SystemParams { omega3, ..*self }
    }

    pub fn eps_p(&self) -> f64 {
        self.omega2 * self.a3 / (self.omega3 * self.omega3)
    }

    pub fn eps_r(&self) -> f64 {
        self.omega2 / self.omega3
    }

    pub fn eps_a(&self) -> f64 {
        self.omega2 / self.a3
    }

    /// Duration of the pi pulse, `pi / omega2`.
    pub fn t_pi(&self) -> f64 {
        PI / self.omega2
    }

    /// Time after which level-3 contributions have decayed, `15 / a3`.
    pub fn tau_tr(&self) -> f64 {
        TRANSIENT_LIFETIMES / self.a3
    }

    /// Stationary emission rate of the 1-3 system without rf field,
    /// `a3 omega3^2 / (a3^2 + 2 omega3^2)`.
    pub fn two_level_emission_rate(&self) -> f64 {
        let (a, w) = (self.a3 * self.a3, self.omega3 * self.omega3);
        self.a3 * w / (a + 2.0 * w)
    }
}

/// Which reduced generator governs a time interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Probe laser and rf field on.
    ProbeOn,
    /// Only the rf field on.
    ProbeOff,
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorKind::ProbeOn => write!(f, "probe-on"),
            GeneratorKind::ProbeOff => write!(f, "probe-off"),
        }
    }
}

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

/// Tolerance on Hermiticity and on the trace/weight relation.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted as "non-negative".
pub const POSITIVITY_FLOOR: f64 = -1e-10;

/// A Hermitian, positive 3x3 density matrix. The trace is the weight of the
/// (sub)ensemble it describes: 1 for a normalized state, a probability for
/// an unnormalized subensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DensityMatrix3 {
    entries: Mat3C,
}

impl DensityMatrix3 {
    /// Validates Hermiticity, weight in `[0, 1]` and positivity.
    pub fn new(entries: Mat3C) -> Result<Self> {
        if !entries.is_finite() {
            return Err(ZenoError::InvalidArgument("density matrix has non-finite entries".into()));
        }
        let scale = entries.max_abs().max(1.0);
        let defect = entries.hermiticity_defect();
        if defect > HERMITIAN_TOL * scale {
            return Err(ZenoError::InvalidArgument(format!(
                "density matrix is not Hermitian (defect {defect:e})"
            )));
        }
        let rho = DensityMatrix3 {
            entries: hermitian_part(&entries),
        };
        let w = rho.weight();
        if !(-HERMITIAN_TOL..=1.0 + HERMITIAN_TOL).contains(&w) {
            return Err(ZenoError::InvalidArgument(format!("weight {w} outside [0, 1]")));
        }
        let min = rho.min_eigenvalue();
        if min < POSITIVITY_FLOOR {
            return Err(ZenoError::InvalidArgument(format!(
                "density matrix is not positive (eigenvalue {min:e})"
            )));
        }
        Ok(rho)
    }

    /// Hermitian part of `entries` without further validation.
    pub(crate) fn from_hermitian(entries: Mat3C) -> Self {
        DensityMatrix3 {
            entries: hermitian_part(&entries),
        }
    }

    /// `|psi><psi|`, with weight `|psi|^2`.
    pub fn pure(psi: &Vec3C) -> Self {
        DensityMatrix3 {
            entries: psi.outer(psi),
        }
    }

    /// `|level><level|`.
    pub fn basis(level: usize) -> Self {
        Self::pure(&Vec3C::basis(level))
    }

    pub fn entries(&self) -> &Mat3C {
        &self.entries
    }

    /// Matrix element `<i|rho|j>` for levels `i, j` in `1..=3`.
    pub fn element(&self, i: usize, j: usize) -> C64 {
        self.entries[(i - 1, j - 1)]
    }

    pub fn population(&self, level: usize) -> f64 {
        self.element(level, level).re
    }

    pub fn weight(&self) -> f64 {
        self.entries.trace().re
    }

    /// Rescales to unit trace.
    pub fn normalized(&self) -> Result<Self> {
        let w = self.weight();
        if !(w > 0.0) {
            return Err(ZenoError::InvalidArgument(format!("cannot normalize weight {w}")));
        }
        Ok(DensityMatrix3 {
            entries: self.entries * (1.0 / w),
        })
    }

    pub fn is_normalized(&self) -> bool {
        (self.weight() - 1.0).abs() <= HERMITIAN_TOL
    }

    pub fn eigenvalues(&self) -> [f64; 3] {
        hermitian_eigen(&self.entries).0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// `<psi|rho|psi>`.
    pub fn expectation(&self, psi: &Vec3C) -> f64 {
        psi.inner(&self.entries.apply(psi)).re
    }

    /// Uhlmann fidelity `(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
    pub fn fidelity(&self, other: &DensityMatrix3) -> f64 {
        let s = hermitian_sqrt(&self.entries);
        let inner = s * other.entries * s;
        let (vals, _) = hermitian_eigen(&hermitian_part(&inner));
        let root: f64 = vals.iter().map(|v| v.max(0.0).sqrt()).sum();
        root * root
    }

    /// `(1/2) || rho - sigma ||_1`.
    pub fn trace_distance(&self, other: &DensityMatrix3) -> f64 {
        let diff = hermitian_part(&(self.entries - other.entries));
        0.5 * hermitian_eigen(&diff).0.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// `m rho m^dagger` without renormalization.
    pub fn transformed(&self, m: &Mat3C) -> Self {
        Self::from_hermitian(m.conjugate(&self.entries))
    }
}

pub(crate) fn hermitian_part(m: &Mat3C) -> Mat3C {
    (*m + m.adjoint()) * 0.5
}

fn to_nalgebra(m: &Mat3C) -> Matrix3<C64> {
    Matrix3::from_fn(|i, j| m[(i, j)])
}

/// Ascending eigenvalues and matching orthonormal eigenvectors of a
/// Hermitian matrix.
pub fn hermitian_eigen(m: &Mat3C) -> ([f64; 3], [Vec3C; 3]) {
    let eig = to_nalgebra(m).symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.map(|k| eig.eigenvalues[k]);
    let vecs = order.map(|k| {
        let c = eig.eigenvectors.column(k);
        Vec3C([c[0], c[1], c[2]])
    });
    (vals, vecs)
}

fn hermitian_sqrt(m: &Mat3C) -> Mat3C {
    let (vals, vecs) = hermitian_eigen(&hermitian_part(m));
    let mut out = Mat3C::zero();
    for k in 0..3 {
        out += vecs[k].outer(&vecs[k]) * vals[k].max(0.0).sqrt();
    }
    out
}

// ---------------------------------------------------------------------------
// Generators and propagators
// ---------------------------------------------------------------------------

/// The reduced generator `G` with `exp(-G t)` the no-photon evolution.
///
/// `ProbeOn` gives `M = (i/2) omega3 (|3><1| + |1><3|) + (i/2) omega2
/// (|2><1| + |1><2|) + (a3/2) |3><3|`; `ProbeOff` drops the probe term.
pub fn build_generator(p: &SystemParams, kind: GeneratorKind) -> Mat3C {
    let half_rf = I * (0.5 * p.omega2);
    let half_probe = match kind {
        GeneratorKind::ProbeOn => I * (0.5 * p.omega3),
        GeneratorKind::ProbeOff => ZERO,
    };
    Mat3C([
        [ZERO, half_rf, half_probe],
        [half_rf, ZERO, ZERO],
        [half_probe, ZERO, C64::new(0.5 * p.a3, 0.0)],
    ])
}

/// rf rotation in the 1-2 block over a time `tau`; identity on level 3.
pub fn u_pi(p: &SystemParams, tau: f64) -> Mat3C {
    let (s, c) = (0.5 * p.omega2 * tau).sin_cos();
    Mat3C([
        [C64::new(c, 0.0), C64::new(0.0, -s), ZERO],
        [C64::new(0.0, -s), C64::new(c, 0.0), ZERO],
        [ZERO, ZERO, ONE],
    ])
}

/// Reusable no-photon evolution for fixed parameters and generator.
///
/// The probe-on generator is exponentiated through its spectral
/// decomposition, falling back to the series exponential when the spectrum
/// is degenerate. The probe-off generator uses the closed form
/// `U_pi(tau) P12 + exp(-a3 tau / 2) |3><3|`.
#[derive(Clone, Debug)]
pub struct ReducedEvolution {
    params: SystemParams,
    kind: GeneratorKind,
    generator: Mat3C,
    spectrum: Option<EigenSystem>,
}

impl ReducedEvolution {
    pub fn new(params: &SystemParams, kind: GeneratorKind) -> Self {
        let generator = build_generator(params, kind);
        let spectrum = match kind {
            GeneratorKind::ProbeOn => Some(eigensystem_default(&generator)),
            GeneratorKind::ProbeOff => None,
        };
        ReducedEvolution {
            params: *params,
            kind,
            generator,
            spectrum,
        }
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn generator(&self) -> &Mat3C {
        &self.generator
    }

    /// Eigensystem of the probe-on generator.
    pub fn spectrum(&self) -> Option<&EigenSystem> {
        self.spectrum.as_ref()
    }

    /// `exp(-G tau)`.
    pub fn propagator(&self, tau: f64) -> Mat3C {
        match (&self.spectrum, self.kind) {
            (_, GeneratorKind::ProbeOff) => {
                let mut m = u_pi(&self.params, tau) * Mat3C::p12();
                m[(2, 2)] = C64::new((-0.5 * self.params.a3 * tau).exp(), 0.0);
                m
            }
            (Some(es), GeneratorKind::ProbeOn) if !es.degenerate => {
                // Not degenerate, so the spectral form cannot fail.
                expm_spectral(es, tau).unwrap_or_else(|_| expm_series(&self.generator, tau))
            }
            _ => expm_series(&self.generator, tau),
        }
    }

    /// `exp(-G tau) rho exp(-G^dagger tau)`.
    pub fn evolve(&self, rho: &DensityMatrix3, tau: f64) -> DensityMatrix3 {
        rho.transformed(&self.propagator(tau))
    }
}

/// `exp(-G tau)` for `G = build_generator(p, kind)`.
pub fn reduced_propagator(p: &SystemParams, kind: GeneratorKind, tau: f64) -> Mat3C {
    ReducedEvolution::new(p, kind).propagator(tau)
}

fn require_normalized(rho: &DensityMatrix3) -> Result<()> {
    if rho.is_normalized() {
        Ok(())
    } else {
        Err(ZenoError::InvalidArgument(format!(
            "state must be normalized, weight is {}",
            rho.weight()
        )))
    }
}

/// Probability of no photon emission until `tau`,
/// `tr{exp(-G tau) rho exp(-G^dagger tau)}`.
pub fn no_photon_probability(
    p: &SystemParams,
    kind: GeneratorKind,
    tau: f64,
    rho: &DensityMatrix3,
) -> Result<f64> {
    require_normalized(rho)?;
    Ok(ReducedEvolution::new(p, kind)
        .evolve(rho, tau)
        .weight()
        .clamp(0.0, 1.0))
}

/// Density of the first emission at `tau`, `-dP0/dtau`. Because
/// `G + G^dagger = a3 |3><3|` this is `a3` times the level-3 population of
/// the unnormalized no-photon state.
pub fn first_photon_density(
    p: &SystemParams,
    kind: GeneratorKind,
    tau: f64,
    rho: &DensityMatrix3,
) -> f64 {
    let evolved = ReducedEvolution::new(p, kind).evolve(rho, tau);
    (p.a3 * evolved.population(3)).max(0.0)
}

/// Stationary state of the driven three-level system,
/// `(M - a3/2)(M^dagger - a3/2) / tr(.)`.
pub fn stationary_state(p: &SystemParams) -> Result<DensityMatrix3> {
    if p.omega3 <= 0.0 {
        return Err(ZenoError::NoStationaryState(
            "the probe must be on (omega3 > 0)".into(),
        ));
    }
    let mut shifted = build_generator(p, GeneratorKind::ProbeOn);
    for k in 0..3 {
        shifted[(k, k)] -= C64::new(0.5 * p.a3, 0.0);
    }
    let unnormalized = DensityMatrix3::from_hermitian(shifted * shifted.adjoint());
    unnormalized.normalized()
}

// ---------------------------------------------------------------------------
// Regime checks
// ---------------------------------------------------------------------------

/// A condition under which a probe pulse stops acting as a measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegimeWarning {
    /// Pulse not much longer than `max(1/a3, a3/omega3^2)`.
    PulseTooShort { tau_p: f64, required: f64 },
    /// Spacing between pulses shorter than the transient time.
    TransientTooShort { delta_t: f64, tau_tr: f64 },
    /// A small parameter is not small.
    LargeEpsilon { name: String, value: f64 },
    /// Emission weight of a pulse below `10 eps_p`; the emission state then
    /// depends on the initial state at first order.
    SmallEmissionWeight { weight: f64, limit: f64 },
}

impl fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegimeWarning::PulseTooShort { tau_p, required } => write!(
                f,
                "probe pulse {tau_p:e} s not longer than {required:e} s ({REGIME_MARGIN} x max(1/a3, a3/omega3^2))"
            ),
            RegimeWarning::TransientTooShort { delta_t, tau_tr } => write!(
                f,
                "pulse spacing {delta_t:e} s shorter than transient time {tau_tr:e} s"
            ),
            RegimeWarning::LargeEpsilon { name, value } => {
                write!(f, "{name} = {value:e} is not below {EPSILON_LIMIT}")
            }
            RegimeWarning::SmallEmissionWeight { weight, limit } => write!(
                f,
                "emission probability {weight:e} below {limit:e}; emission state not initial-state independent"
            ),
        }
    }
}

/// Conditions on a single probe pulse (length and small parameters).
pub fn pulse_regime_warnings(p: &SystemParams, tau_p: f64) -> Vec<RegimeWarning> {
    let mut out = Vec::new();
    let required = REGIME_MARGIN * (1.0 / p.a3).max(p.a3 / (p.omega3 * p.omega3));
    if !(tau_p > required) {
        out.push(RegimeWarning::PulseTooShort { tau_p, required });
    }
    for (name, value) in [("eps_p", p.eps_p()), ("eps_r", p.eps_r()), ("eps_a", p.eps_a())] {
        if !(value < EPSILON_LIMIT) {
            out.push(RegimeWarning::LargeEpsilon {
                name: name.to_string(),
                value,
            });
        }
    }
    out
}

/// All regime conditions for pulses of length `tau_p` spaced by `delta_t`.
/// Never fails; an empty list means the first-order treatment applies.
pub fn validate_measurement_regime(
    p: &SystemParams,
    tau_p: f64,
    delta_t: f64,
) -> Vec<RegimeWarning> {
    let mut out = pulse_regime_warnings(p, tau_p);
    if !(delta_t >= p.tau_tr()) {
        out.push(RegimeWarning::TransientTooShort {
            delta_t,
            tau_tr: p.tau_tr(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg3::eigensystem;
    use proptest::prelude::*;

    fn table1() -> SystemParams {
        SystemParams::reference()
    }

    #[test]
    fn derived_parameters() {
        let p = table1();
        assert!((p.t_pi() - 0.256).abs() < 1e-15);
        assert!((p.eps_p() - 4.0796e-4).abs() < 1e-7, "{}", p.eps_p());
        assert!((p.tau_tr() - 1.25e-7).abs() < 1e-20);
        assert!(SystemParams::new(1.0, 1.0, 0.0).is_err());
        assert!(SystemParams::new(-1.0, 1.0, 1.0).is_err());
        assert!(SystemParams::new(0.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn generator_without_rf_is_m0() {
        let p = table1().with_omega2(0.0);
        let m = build_generator(&p, GeneratorKind::ProbeOn);
        let expected = (Mat3C::ket_bra(3, 1) + Mat3C::ket_bra(1, 3)) * (I * (0.5 * p.omega3))
            + Mat3C::ket_bra(3, 3) * (0.5 * p.a3);
        assert_eq!(m, expected);
    }

    #[test]
    fn probe_off_generator_structure() {
        let p = table1();
        let m = build_generator(&p, GeneratorKind::ProbeOff);
        assert_eq!(m[(0, 1)], C64::new(0.0, 0.5 * p.omega2));
        assert_eq!(m[(1, 0)], C64::new(0.0, 0.5 * p.omega2));
        assert_eq!(m[(0, 0)], ZERO);
        assert_eq!(m[(1, 1)], ZERO);
        assert_eq!(m[(0, 2)], ZERO);
        assert_eq!(m[(2, 2)], C64::new(0.5 * p.a3, 0.0));
    }

    proptest! {
        #[test]
        fn generator_anti_hermitian_part(o2 in 0.0f64..1e3, o3 in 0.0f64..1e7, a3 in 1.0f64..1e8) {
            let p = SystemParams::new(o2, o3, a3).unwrap();
            for kind in [GeneratorKind::ProbeOn, GeneratorKind::ProbeOff] {
                let m = build_generator(&p, kind);
                let sum = m + m.adjoint();
                prop_assert_eq!(sum, Mat3C::ket_bra(3, 3) * a3);
            }
        }

        #[test]
        fn u_pi_composes(t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
            let p = table1();
            let lhs = u_pi(&p, t1) * u_pi(&p, t2);
            let rhs = u_pi(&p, t1 + t2);
            prop_assert!((lhs - rhs).max_abs() < 1e-13);
            let u = u_pi(&p, t1);
            prop_assert!((u * u.adjoint() - Mat3C::identity()).max_abs() < 1e-13);
        }
    }

    #[test]
    fn u_pi_endpoints() {
        let p = table1();
        assert_eq!(u_pi(&p, 0.0), Mat3C::identity());
        let moved = u_pi(&p, p.t_pi()).apply(&Vec3C::basis(1));
        assert!((moved - Vec3C::basis(2).scale(-I)).norm() < 1e-15);
    }

    #[test]
    fn probe_off_propagator_matches_series() {
        let p = table1();
        let m = build_generator(&p, GeneratorKind::ProbeOff);
        for tau in [0.0, 1e-9, 3e-7, 1e-3, 0.1] {
            let closed = reduced_propagator(&p, GeneratorKind::ProbeOff, tau);
            let series = expm_series(&m, tau);
            // Squaring error in the series grows with a3 tau.
            let tol = if tau < 1e-6 { 1e-13 } else { 1e-9 };
            assert!((closed - series).max_abs() < tol, "tau = {tau}");
        }
        assert_eq!(reduced_propagator(&p, GeneratorKind::ProbeOff, 0.0), Mat3C::identity());
    }

    #[test]
    fn probe_on_propagator_against_series() {
        let p = table1();
        let tau = REFERENCE_TAU_P;
        let u = reduced_propagator(&p, GeneratorKind::ProbeOn, tau);
        let s = expm_series(&build_generator(&p, GeneratorKind::ProbeOn), tau);
        let p0 = u.col(0).norm_sqr();
        let p0_series = s.col(0).norm_sqr();
        assert!((p0 - p0_series).abs() < 1e-10, "{p0} vs {p0_series}");
        assert!((u - s).max_abs() < 1e-10);
    }

    #[test]
    fn rf_off_level_two_is_dark() {
        let p = table1().with_omega2(0.0);
        let rho = DensityMatrix3::basis(2);
        for tau in [0.0, 1e-6, 1e-3, 1.0] {
            let p0 = no_photon_probability(&p, GeneratorKind::ProbeOn, tau, &rho).unwrap();
            assert!((p0 - 1.0).abs() < 1e-14);
            assert_eq!(first_photon_density(&p, GeneratorKind::ProbeOn, tau, &rho), 0.0);
        }
        let m = build_generator(&p, GeneratorKind::ProbeOn);
        let es = eigensystem(&m, 0.0);
        assert_eq!(es.eigenvalues[0], ZERO);
        assert_eq!(es.right_vectors[0], Vec3C::basis(2));
    }

    #[test]
    fn no_photon_probability_edges() {
        let p = table1();
        let rho = DensityMatrix3::basis(1);
        let p0 = no_photon_probability(&p, GeneratorKind::ProbeOn, 0.0, &rho).unwrap();
        assert!((p0 - 1.0).abs() < 1e-14);
        assert!(first_photon_density(&p, GeneratorKind::ProbeOn, 0.0, &rho) < 1e-14 * p.a3);
        let half = DensityMatrix3::from_hermitian(Mat3C::ket_bra(1, 1) * 0.5);
        assert!(matches!(
            no_photon_probability(&p, GeneratorKind::ProbeOn, 1e-6, &half),
            Err(ZenoError::InvalidArgument(_))
        ));
    }

    #[test]
    fn no_photon_probability_first_order() {
        // P0(tau_p; |2><2|) = 1 - eps_p pi tau_p / T_pi + O(eps^2).
        let p = table1();
        let tau = REFERENCE_TAU_P;
        let p0 = no_photon_probability(&p, GeneratorKind::ProbeOn, tau, &DensityMatrix3::basis(2))
            .unwrap();
        let first_order = 1.0 - p.eps_p() * PI * tau / p.t_pi();
        assert!((p0 - first_order).abs() < 1e-6, "{p0} vs {first_order}");
    }

    #[test]
    fn no_photon_probability_monotone() {
        let p = table1();
        let psi = Vec3C::from_real(0.6, 0.8, 0.0);
        let rho = DensityMatrix3::pure(&psi);
        let ev = ReducedEvolution::new(&p, GeneratorKind::ProbeOn);
        let mut prev = 1.0;
        for k in 0..=1000 {
            let tau = 5.0 * REFERENCE_TAU_P * k as f64 / 1000.0;
            let p0 = ev.evolve(&rho, tau).weight();
            assert!(p0 - prev <= 1e-12, "increase at tau = {tau}");
            prev = p0;
        }
    }

    #[test]
    fn first_photon_density_is_minus_derivative() {
        let p = table1();
        let rho = DensityMatrix3::pure(&Vec3C::from_real(0.6, 0.8, 0.0));
        for tau in [2e-8, 1e-7, 1e-6, 1e-4, 1e-3] {
            let h = 1e-6 * tau;
            let ev = ReducedEvolution::new(&p, GeneratorKind::ProbeOn);
            let fd = -(ev.evolve(&rho, tau + h).weight() - ev.evolve(&rho, tau - h).weight())
                / (2.0 * h);
            let w = first_photon_density(&p, GeneratorKind::ProbeOn, tau, &rho);
            assert!((fd - w).abs() <= 1e-5 * w.abs().max(1e-300), "tau {tau}: {fd} vs {w}");
        }
    }

    #[test]
    fn probe_off_keeps_one_two_norm() {
        let p = table1();
        let psi = Vec3C::new(C64::new(0.3, 0.1), C64::new(-0.2, 0.9), ZERO).normalized();
        for tau in [1e-3, 0.05, 0.2] {
            let out = reduced_propagator(&p, GeneratorKind::ProbeOff, tau).apply(&psi);
            let rot = (u_pi(&p, tau) * Mat3C::p12()).apply(&psi);
            assert!((out.norm() - rot.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn stationary_state_properties() {
        let p = table1();
        let ss = stationary_state(&p).unwrap();
        assert!((ss.weight() - 1.0).abs() < 1e-15);
        assert!(ss.entries().hermiticity_defect() < 1e-15);
        assert!(ss.min_eigenvalue() > -1e-12);
        assert!(matches!(
            stationary_state(&p.with_omega3(0.0)),
            Err(ZenoError::NoStationaryState(_))
        ));
    }

    #[test]
    fn stationary_state_without_rf() {
        // The 1-3 block, renormalized, is the two-level stationary state.
        let p = table1().with_omega2(0.0);
        let ss = stationary_state(&p).unwrap();
        let block = ss.population(1) + ss.population(3);
        let rate = p.a3 * ss.population(3) / block;
        let expected = p.two_level_emission_rate();
        assert!((rate - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn regime_checks() {
        let p = table1();
        let dt = p.t_pi() / 16.0 - REFERENCE_TAU_P;
        assert!(validate_measurement_regime(&p, REFERENCE_TAU_P, dt).is_empty());
        let w = validate_measurement_regime(&p, REFERENCE_TAU_P, 1.0 / p.a3);
        assert!(matches!(w.as_slice(), [RegimeWarning::TransientTooShort { .. }]));
        // eps_p = 0.5 through a weak probe.
        let weak = p.with_omega3((p.omega2 * p.a3 / 0.5).sqrt());
        assert!((weak.eps_p() - 0.5).abs() < 1e-12);
        let w = pulse_regime_warnings(&weak, 10.0);
        assert!(w
            .iter()
            .any(|x| matches!(x, RegimeWarning::LargeEpsilon { name, .. } if name == "eps_p")));
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix3::new(Mat3C::ket_bra(1, 2)).is_err());
        assert!(DensityMatrix3::new(Mat3C::ket_bra(1, 1) * 2.0).is_err());
        assert!(DensityMatrix3::new(Mat3C::diag([ONE, -ONE, ONE]) * 0.5).is_err());
        let ok = DensityMatrix3::new(Mat3C::diag([C64::new(0.25, 0.0), C64::new(0.75, 0.0), ZERO]));
        assert!(ok.is_ok());
        let a = DensityMatrix3::basis(1);
        let b = DensityMatrix3::pure(&Vec3C::from_real(1.0, 1.0, 0.0).normalized());
        assert!((a.fidelity(&b) - 0.5).abs() < 1e-14);
        assert!((a.trace_distance(&b) - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((a.fidelity(&a) - 1.0).abs() < 1e-14);
    }
}
