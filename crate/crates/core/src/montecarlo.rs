//! Quantum-jump trajectories: waiting times sampled from the no-photon
//! survival function, reset to `|1>` after every emission.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::Segment;
use crate::error::{Result, ZenoError};
use crate::linalg3::{eigensystem_default, expm_series, Mat3C, Vec3C, C64};
use crate::pulse::{emission_state, no_emission_state};
use crate::vsystem::{
    build_generator, pulse_regime_warnings, u_pi, DensityMatrix3, GeneratorKind, SystemParams,
};

/// Relative time resolution of the waiting-time root.
pub const ROOT_REL_TOL: f64 = 1e-10;
/// First bracket point, as a fraction of the segment length.
pub const BRACKET_START: f64 = 1.0 / 1_048_576.0;
const MAX_BISECTIONS: usize = 200;
/// One-sample Kolmogorov-Smirnov critical value at the 1% level is
/// `KS_CRITICAL_1PCT / sqrt(n)` (asymptotic).
pub const KS_CRITICAL_1PCT: f64 = 1.628;
/// Tolerance of the unit-norm precondition on initial states.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
enum Mode {
    Spectral { lambdas: [C64; 3], right: [Vec3C; 3], reciprocal: [Vec3C; 3] },
    Series(Mat3C),
    /// `exp(-M_b t) = U_pi(t) P12 + exp(-a3 t / 2) |3><3|`.
    ProbeOff,
}

/// Conditional (no-jump) evolution `exp(-G t) psi` for one generator.
#[derive(Clone, Debug)]
pub struct NoJumpEvolution {
    params: SystemParams,
    kind: GeneratorKind,
    mode: Mode,
}

impl NoJumpEvolution {
    pub fn new(p: &SystemParams, kind: GeneratorKind) -> Self {
        let mode = match kind {
            GeneratorKind::ProbeOff => Mode::ProbeOff,
            GeneratorKind::ProbeOn => {
                let g = build_generator(p, kind);
                let es = eigensystem_default(&g);
                if es.degenerate {
                    Mode::Series(g)
                } else {
                    Mode::Spectral {
                        lambdas: es.eigenvalues,
                        right: es.right_vectors,
                        reciprocal: es.reciprocal_vectors,
                    }
                }
            }
        };
        NoJumpEvolution {
            params: *p,
            kind,
            mode,
        }
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    /// Whether the spectral form is used (false for the series fallback
    /// and for the closed probe-off form).
    pub fn is_spectral(&self) -> bool {
        matches!(self.mode, Mode::Spectral { .. })
    }

    /// Unnormalized `exp(-G t) psi`.
    pub fn apply(&self, psi: &Vec3C, t: f64) -> Vec3C {
        self.curve(psi).state(t)
    }

    /// `|exp(-G t) psi|^2`.
    pub fn survival(&self, psi: &Vec3C, t: f64) -> f64 {
        self.curve(psi).survival(t)
    }

    fn curve(&self, psi: &Vec3C) -> Curve<'_> {
        match &self.mode {
            Mode::Spectral {
                lambdas,
                right,
                reciprocal,
            } => Curve::Spectral(std::array::from_fn(|i| {
                (lambdas[i], right[i].scale(reciprocal[i].inner(psi)))
            })),
            Mode::Series(g) => Curve::Series(g, *psi),
            Mode::ProbeOff => Curve::ProbeOff(&self.params, *psi),
        }
    }

    /// Time `t` in `(0, t_max]` at which the survival of `psi` falls to `u`,
    /// or `None` when it stays above `u` for the whole interval.
    pub fn sample_jump_time(&self, psi: &Vec3C, t_max: f64, u: f64) -> Option<f64> {
        let curve = self.curve(psi);
        find_crossing(|t| curve.survival(t), t_max, u)
    }
}

enum Curve<'a> {
    /// `(lambda_i, <lambda^i|psi> |lambda_i>)`
    Spectral([(C64, Vec3C); 3]),
    Series(&'a Mat3C, Vec3C),
    ProbeOff(&'a SystemParams, Vec3C),
}

impl Curve<'_> {
    fn state(&self, t: f64) -> Vec3C {
        match self {
            Curve::Spectral(terms) => terms
                .iter()
                .fold(Vec3C::zero(), |acc, (l, w)| acc + w.scale((-l * t).exp())),
            Curve::Series(g, psi) => expm_series(g, t).apply(psi),
            Curve::ProbeOff(p, psi) => {
                let mut out = u_pi(p, t).apply(&Vec3C([psi[0], psi[1], C64::new(0.0, 0.0)]));
                out.0[2] = psi[2] * (-0.5 * p.a3 * t).exp();
                out
            }
        }
    }

    fn survival(&self, t: f64) -> f64 {
        match self {
            // The 1-2 block is rotated unitarily, only level 3 decays.
            Curve::ProbeOff(p, psi) => {
                psi[0].norm_sqr() + psi[1].norm_sqr() + psi[2].norm_sqr() * (-p.a3 * t).exp()
            }
            _ => self.state(t).norm_sqr(),
        }
    }
}

fn find_crossing(survival: impl Fn(f64) -> f64, t_max: f64, u: f64) -> Option<f64> {
    if !(t_max > 0.0) || !(u > 0.0 && u < 1.0) || survival(t_max) > u {
        return None;
    }
    let mut lo = 0.0;
    let mut hi = t_max * BRACKET_START;
    while hi < t_max && survival(hi) > u {
        lo = hi;
        hi = (2.0 * hi).min(t_max);
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= ROOT_REL_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if survival(mid) > u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}

/// First emission time within `t_max` for a draw `u` of the survival
/// function, see [`NoJumpEvolution::sample_jump_time`].
pub fn sample_jump_time(
    psi: &Vec3C,
    p: &SystemParams,
    kind: GeneratorKind,
    t_max: f64,
    u: f64,
) -> Option<f64> {
    NoJumpEvolution::new(p, kind).sample_jump_time(psi, t_max, u)
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

/// One quantum trajectory through a schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    /// Absolute emission times.
    pub emission_times: Vec<f64>,
    /// Emissions per probe pulse. Emissions in a probe-off segment count
    /// for the preceding pulse; those before the first pulse are not
    /// tallied.
    pub emissions_per_pulse: Vec<u32>,
    /// Emissions in probe-off segments later than `tau_tr` after the
    /// segment start.
    pub late_off_pulse_emissions: u32,
    pub final_state: Vec3C,
    pub seed: u64,
    /// Stream of the generator, the trajectory index within an ensemble.
    pub stream: u64,
}

/// Shared per-parameter data for many trajectories.
#[derive(Clone, Debug)]
pub struct TrajectorySimulator {
    params: SystemParams,
    on: NoJumpEvolution,
    off: NoJumpEvolution,
}

impl TrajectorySimulator {
    pub fn new(p: &SystemParams) -> Self {
        TrajectorySimulator {
            params: *p,
            on: NoJumpEvolution::new(p, GeneratorKind::ProbeOn),
            off: NoJumpEvolution::new(p, GeneratorKind::ProbeOff),
        }
    }

    fn evolution(&self, kind: GeneratorKind) -> &NoJumpEvolution {
        match kind {
            GeneratorKind::ProbeOn => &self.on,
            GeneratorKind::ProbeOff => &self.off,
        }
    }

    /// Runs one trajectory on stream `stream` of the generator seeded with
    /// `seed`. Emission times are kept only when `record_times` is set.
    pub fn run(
        &self,
        psi0: &Vec3C,
        segments: &[Segment],
        seed: u64,
        stream: u64,
        record_times: bool,
    ) -> Result<TrajectoryRecord> {
        require_unit(psi0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let tau_tr = self.params.tau_tr();
        let pulses = segments
            .iter()
            .filter(|s| s.kind == GeneratorKind::ProbeOn)
            .count();
        let mut record = TrajectoryRecord {
            emission_times: Vec::new(),
            emissions_per_pulse: vec![0; pulses],
            late_off_pulse_emissions: 0,
            final_state: *psi0,
            seed,
            stream,
        };
        let mut psi = *psi0;
        let mut start = 0.0;
        let mut pulse: Option<usize> = None;
        for seg in segments {
            if seg.kind == GeneratorKind::ProbeOn {
                pulse = Some(pulse.map_or(0, |k| k + 1));
            }
            let ev = self.evolution(seg.kind);
            let mut elapsed = 0.0;
            loop {
                let u: f64 = rng.sample(Open01);
                match ev.sample_jump_time(&psi, seg.duration - elapsed, u) {
                    Some(tau) => {
                        elapsed = (elapsed + tau).min(seg.duration);
                        if record_times {
                            record.emission_times.push(start + elapsed);
                        }
                        if let Some(k) = pulse {
                            record.emissions_per_pulse[k] += 1;
                        }
                        if seg.kind == GeneratorKind::ProbeOff && elapsed > tau_tr {
                            record.late_off_pulse_emissions += 1;
                        }
                        psi = Vec3C::basis(1);
                    }
                    None => {
                        psi = ev.apply(&psi, seg.duration - elapsed).normalized();
                        break;
                    }
                }
            }
            start += seg.duration;
        }
        record.final_state = psi;
        Ok(record)
    }
}

fn require_unit(psi: &Vec3C) -> Result<()> {
    if psi.is_finite() && (psi.norm_sqr() - 1.0).abs() <= NORM_TOL {
        Ok(())
    } else {
        Err(ZenoError::InvalidArgument(format!(
            "initial state must have unit norm, |psi|^2 = {}",
            psi.norm_sqr()
        )))
    }
}

/// One trajectory from `psi0` through `segments`; the same seed gives the
/// same record bit for bit.
pub fn evolve_trajectory(
    psi0: &Vec3C,
    p: &SystemParams,
    segments: &[Segment],
    seed: u64,
) -> Result<TrajectoryRecord> {
    TrajectorySimulator::new(p).run(psi0, segments, seed, 0, true)
}

/// Trajectories `0..n_traj`, trajectory `i` on stream `i` of
/// `master_seed`, starting from `initial(i)`. Output is in index order.
pub fn run_trajectories(
    p: &SystemParams,
    segments: &[Segment],
    n_traj: usize,
    master_seed: u64,
    record_times: bool,
    initial: impl Fn(usize) -> Vec3C + Sync,
) -> Result<Vec<TrajectoryRecord>> {
    let sim = TrajectorySimulator::new(p);
    (0..n_traj)
        .into_par_iter()
        .map(|i| sim.run(&initial(i), segments, master_seed, i as u64, record_times))
        .collect()
}

// ---------------------------------------------------------------------------
// Ensembles
// ---------------------------------------------------------------------------

/// Ensemble averages over trajectories. Standard errors are sample
/// standard deviations over `sqrt(n_traj)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleEstimate {
    pub n_traj: usize,
    pub master_seed: u64,
    pub pop_mean: [f64; 3],
    pub pop_stderr: [f64; 3],
    /// Fraction of trajectories without emission, per pulse, as
    /// `(mean, stderr)`.
    pub p0_frequency_per_pulse: Vec<(f64, f64)>,
    pub mean_density: DensityMatrix3,
    /// Largest standard error over the real and imaginary parts of the
    /// density-matrix elements.
    pub density_stderr: f64,
    pub mean_emissions: f64,
    pub late_off_pulse_emissions: u64,
}

/// Running mean and variance, accumulated in a fixed order.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn stderr(&self) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        (self.m2 / (self.n - 1.0) / self.n).sqrt()
    }
}

/// Reduces records in index order.
pub fn summarize(records: &[TrajectoryRecord], master_seed: u64) -> Result<EnsembleEstimate> {
    let first = records
        .first()
        .ok_or_else(|| ZenoError::InvalidArgument("an ensemble needs n_traj >= 1".into()))?;
    let pulses = first.emissions_per_pulse.len();
    let mut pops = [Moments::default(); 3];
    let mut p0 = vec![Moments::default(); pulses];
    let mut elements = [[(Moments::default(), Moments::default()); 3]; 3];
    let mut emissions = Moments::default();
    let mut late = 0u64;
    for r in records {
        let psi = &r.final_state;
        for i in 0..3 {
            pops[i].push(psi[i].norm_sqr());
            for j in 0..3 {
                let z = psi[i] * psi[j].conj();
                elements[i][j].0.push(z.re);
                elements[i][j].1.push(z.im);
            }
        }
        for (k, m) in p0.iter_mut().enumerate() {
            let quiet = r.emissions_per_pulse.get(k).copied().unwrap_or(0) == 0;
            m.push(if quiet { 1.0 } else { 0.0 });
        }
        emissions.push(r.emissions_per_pulse.iter().map(|&c| c as f64).sum());
        late += r.late_off_pulse_emissions as u64;
    }
    let mut mean = Mat3C::zero();
    let mut density_stderr = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let (re, im) = elements[i][j];
            mean[(i, j)] = C64::new(re.mean, im.mean);
            density_stderr = density_stderr.max(re.stderr()).max(im.stderr());
        }
    }
    Ok(EnsembleEstimate {
        n_traj: records.len(),
        master_seed,
        pop_mean: pops.map(|m| m.mean),
        pop_stderr: pops.map(|m| m.stderr()),
        p0_frequency_per_pulse: p0.iter().map(|m| (m.mean, m.stderr())).collect(),
        mean_density: DensityMatrix3::from_hermitian(mean),
        density_stderr,
        mean_emissions: emissions.mean,
        late_off_pulse_emissions: late,
    })
}

/// Runs `n_traj` trajectories from `psi0` and averages them. The result
/// depends only on the inputs, not on the number of worker threads.
pub fn run_ensemble(
    psi0: &Vec3C,
    p: &SystemParams,
    segments: &[Segment],
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleEstimate> {
    if n_traj == 0 {
        return Err(ZenoError::InvalidArgument("an ensemble needs n_traj >= 1".into()));
    }
    require_unit(psi0)?;
    let records = run_trajectories(p, segments, n_traj, master_seed, false, |_| *psi0)?;
    summarize(&records, master_seed)
}

// ---------------------------------------------------------------------------
// Conditional states after one pulse
// ---------------------------------------------------------------------------

/// Mean conditional states of the no-emission and emission subensembles
/// after a single probe pulse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalStates {
    pub n_no_emission: usize,
    pub n_emission: usize,
    pub no_emission: Option<DensityMatrix3>,
    pub emission: Option<DensityMatrix3>,
    /// Largest elementwise standard error of each mean.
    pub no_emission_stderr: f64,
    pub emission_stderr: f64,
}

/// Single-pulse trajectories, trajectory `i` starting from `initial(i)`.
pub fn conditional_states(
    p: &SystemParams,
    tau_p: f64,
    n_traj: usize,
    master_seed: u64,
    initial: impl Fn(usize) -> Vec3C + Sync,
) -> Result<ConditionalStates> {
    let pulse = [Segment::new(GeneratorKind::ProbeOn, tau_p)?];
    let records = run_trajectories(p, &pulse, n_traj, master_seed, false, initial)?;
    let (emitted, quiet): (Vec<_>, Vec<_>) = records
        .into_iter()
        .partition(|r| r.emissions_per_pulse[0] > 0);
    let mean = |rs: &[TrajectoryRecord]| -> Result<Option<(DensityMatrix3, f64)>> {
        if rs.is_empty() {
            return Ok(None);
        }
        let e = summarize(rs, master_seed)?;
        Ok(Some((e.mean_density, e.density_stderr)))
    };
    let q = mean(&quiet)?;
    let e = mean(&emitted)?;
    Ok(ConditionalStates {
        n_no_emission: quiet.len(),
        n_emission: emitted.len(),
        no_emission: q.map(|x| x.0),
        emission: e.map(|x| x.0),
        no_emission_stderr: q.map_or(0.0, |x| x.1),
        emission_stderr: e.map_or(0.0, |x| x.1),
    })
}

/// Initial states cycled through by [`conditional_state_check`].
pub fn check_initial_states() -> [Vec3C; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [
        Vec3C::basis(1),
        Vec3C::basis(2),
        Vec3C::from_real(h, h, 0.0),
        Vec3C([C64::new(h, 0.0), C64::new(0.0, h), C64::new(0.0, 0.0)]),
    ]
}

/// Fidelities of the simulated subensemble means with the analytic
/// no-emission and emission states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalFidelities {
    pub no_emission: Option<f64>,
    pub emission: Option<f64>,
    pub states: ConditionalStates,
}

/// Runs single-pulse trajectories cycling through
/// [`check_initial_states`] and compares the conditional means with
/// `|lambda_2><lambda_2|` and the emission state.
pub fn conditional_state_check(
    p: &SystemParams,
    tau_p: f64,
    n_traj: usize,
    master_seed: u64,
) -> Result<ConditionalFidelities> {
    let warnings = pulse_regime_warnings(p, tau_p);
    if !warnings.is_empty() {
        return Err(ZenoError::Regime(warnings.iter().map(|w| w.to_string()).collect()));
    }
    let starts = check_initial_states();
    let states = conditional_states(p, tau_p, n_traj, master_seed, |i| starts[i % starts.len()])?;
    let dark = no_emission_state(p)?;
    let bright = emission_state(p, tau_p)?;
    Ok(ConditionalFidelities {
        no_emission: states.no_emission.map(|r| r.fidelity(&dark)),
        emission: states.emission.map(|r| r.fidelity(&bright)),
        states,
    })
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov test of first-jump times
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsTest {
    pub n: usize,
    pub statistic: f64,
    pub critical_value: f64,
    pub passed: bool,
}

/// `sup |F_n - F|` for `samples` sorted ascending.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// First-jump times from `psi` on one generator, trajectory `i` on stream
/// `i`. Samples without a jump before `t_max` are `f64::INFINITY`.
pub fn first_jump_times(
    psi: &Vec3C,
    p: &SystemParams,
    kind: GeneratorKind,
    t_max: f64,
    n: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    require_unit(psi)?;
    let ev = NoJumpEvolution::new(p, kind);
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
            rng.set_stream(i as u64);
            ev.sample_jump_time(psi, t_max, rng.sample(Open01))
                .unwrap_or(f64::INFINITY)
        })
        .collect())
}

/// KS test of first-jump times against `1 - P0`, with `P0` taken from the
/// density-matrix propagation.
pub fn first_jump_ks(
    psi: &Vec3C,
    p: &SystemParams,
    kind: GeneratorKind,
    t_max: f64,
    n: usize,
    master_seed: u64,
) -> Result<KsTest> {
    if n == 0 {
        return Err(ZenoError::InvalidArgument("KS test needs samples".into()));
    }
    let mut samples = first_jump_times(psi, p, kind, t_max, n, master_seed)?;
    samples.sort_by(f64::total_cmp);
    let evolution = crate::vsystem::ReducedEvolution::new(p, kind);
    let rho = DensityMatrix3::pure(psi);
    let cdf = |t: f64| {
        if t.is_finite() {
            1.0 - evolution.evolve(&rho, t).weight()
        } else {
            1.0
        }
    };
    let statistic = ks_statistic(&samples, cdf);
    let critical_value = KS_CRITICAL_1PCT / (n as f64).sqrt();
    Ok(KsTest {
        n,
        statistic,
        critical_value,
        passed: statistic < critical_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vsystem::{REFERENCE_TAU_P, REFERENCE_T_PI};
    use proptest::prelude::*;
    use rand::Rng;

    fn rescaled() -> SystemParams {
        SystemParams::reference().rescaled(1e-4)
    }

    #[test]
    fn dark_level_never_jumps() {
        let p = SystemParams::reference().with_omega2(0.0);
        for kind in [GeneratorKind::ProbeOn, GeneratorKind::ProbeOff] {
            for u in [1e-12, 0.3, 0.999_999] {
                assert_eq!(sample_jump_time(&Vec3C::basis(2), &p, kind, 1.0, u), None);
            }
        }
    }

    #[test]
    fn decay_of_level_three_is_exponential() {
        let p = SystemParams::reference();
        for u in [0.9, 0.5, 1e-3] {
            let t = sample_jump_time(&Vec3C::basis(3), &p, GeneratorKind::ProbeOff, 1.0, u).unwrap();
            let exact = -u.ln() / p.a3;
            assert!((t - exact).abs() <= 1e-9 * exact, "{t} {exact}");
        }
    }

    #[test]
    fn survival_at_returned_time_matches_draw() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in [SystemParams::reference(), rescaled(), SystemParams::strong_probe()] {
            let on = NoJumpEvolution::new(&p, GeneratorKind::ProbeOn);
            let evo = crate::vsystem::ReducedEvolution::new(&p, GeneratorKind::ProbeOn);
            let t_max = REFERENCE_TAU_P * SystemParams::reference().a3 / p.a3;
            let mut hits = 0;
            for _ in 0..300 {
                let psi = Vec3C(std::array::from_fn(|_| {
                    C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                }))
                .normalized();
                let u: f64 = rng.sample(Open01);
                if let Some(t) = on.sample_jump_time(&psi, t_max, u) {
                    hits += 1;
                    let s = evo.evolve(&DensityMatrix3::pure(&psi), t).weight();
                    assert!((s - u).abs() < 1e-9, "{s} vs {u} at {t}");
                }
            }
            assert!(hits > 100);
        }
    }

    #[test]
    fn pi_pulse_without_probe() {
        let p = SystemParams::reference();
        let seg = [Segment::new(GeneratorKind::ProbeOff, p.t_pi()).unwrap()];
        let r = evolve_trajectory(&Vec3C::basis(1), &p, &seg, 3).unwrap();
        assert!(r.emission_times.is_empty());
        assert!(r.emissions_per_pulse.is_empty());
        assert!((r.final_state[1] - C64::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn same_seed_same_record() {
        let p = SystemParams::reference();
        let segs = [
            Segment::new(GeneratorKind::ProbeOff, 0.03).unwrap(),
            Segment::new(GeneratorKind::ProbeOn, REFERENCE_TAU_P).unwrap(),
        ];
        let a = evolve_trajectory(&Vec3C::basis(1), &p, &segs, 11).unwrap();
        let b = evolve_trajectory(&Vec3C::basis(1), &p, &segs, 11).unwrap();
        let c = evolve_trajectory(&Vec3C::basis(1), &p, &segs, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn record_invariants() {
        let p = rescaled();
        let t_pi = REFERENCE_T_PI * 1e4;
        let tau_p = REFERENCE_TAU_P * 1e4;
        let mut segs = Vec::new();
        for _ in 0..4 {
            segs.push(Segment::new(GeneratorKind::ProbeOff, t_pi / 4.0 - tau_p).unwrap());
            segs.push(Segment::new(GeneratorKind::ProbeOn, tau_p).unwrap());
        }
        let end: f64 = segs.iter().map(|s| s.duration).sum();
        let records = run_trajectories(&p, &segs, 200, 5, true, |_| Vec3C::basis(1)).unwrap();
        for r in &records {
            assert!(r.emission_times.windows(2).all(|w| w[0] < w[1]));
            assert!(r.emission_times.iter().all(|&t| t > 0.0 && t <= end));
            assert!((r.final_state.norm_sqr() - 1.0).abs() < 1e-10);
            assert_eq!(r.late_off_pulse_emissions, 0);
            assert_eq!(r.emissions_per_pulse.len(), 4);
            let tallied: u32 = r.emissions_per_pulse.iter().sum();
            assert!(tallied as usize <= r.emission_times.len());
        }
    }

    fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn photons_per_pulse() {
        let p = SystemParams::reference();
        let seg = [Segment::new(GeneratorKind::ProbeOn, REFERENCE_TAU_P).unwrap()];
        let count = |start: &(dyn Fn(usize) -> Vec3C + Sync)| {
            let rs = run_trajectories(&p, &seg, 1000, 21, false, |i| start(i)).unwrap();
            let xs: Vec<f64> = rs.iter().map(|r| r.emissions_per_pulse[0] as f64).collect();
            mean_and_stderr(&xs)
        };
        // From |1> the atom is bright for the whole pulse.
        let (bright, se) = count(&|_| Vec3C::basis(1));
        let expected = p.two_level_emission_rate() * REFERENCE_TAU_P;
        assert!((bright - expected).abs() < 3.0 * se, "{bright} vs {expected}");
        // Half the starts shelved in |2>: the stationary intensity c0.
        let (mixed, se) = count(&|i| Vec3C::basis(1 + i % 2));
        let ss = crate::vsystem::stationary_state(&p).unwrap();
        let c0 = crate::pulse::intensity_coefficients(&p, &ss).unwrap().c0;
        let expected = c0 * REFERENCE_TAU_P;
        assert!((expected - 36.0).abs() < 1.0);
        assert!((mixed - expected).abs() < 3.0 * se, "{mixed} vs {expected}");
    }

    #[test]
    fn single_trajectory_ensemble() {
        let p = SystemParams::reference();
        let seg = [Segment::new(GeneratorKind::ProbeOn, REFERENCE_TAU_P).unwrap()];
        let est = run_ensemble(&Vec3C::basis(1), &p, &seg, 1, 9).unwrap();
        let r = evolve_trajectory(&Vec3C::basis(1), &p, &seg, 9).unwrap();
        for i in 0..3 {
            assert_eq!(est.pop_mean[i], r.final_state[i].norm_sqr());
            assert_eq!(est.pop_stderr[i], 0.0);
        }
        assert_eq!(est.mean_emissions, r.emissions_per_pulse[0] as f64);
    }

    #[test]
    fn ensemble_is_independent_of_thread_count() {
        let p = rescaled();
        let segs = [
            Segment::new(GeneratorKind::ProbeOff, 300.0).unwrap(),
            Segment::new(GeneratorKind::ProbeOn, 24.0).unwrap(),
        ];
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_ensemble(&Vec3C::basis(1), &p, &segs, 300, 77).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn ensemble_populations_sum_to_one() {
        let p = rescaled();
        let segs = [Segment::new(GeneratorKind::ProbeOn, 24.0).unwrap()];
        let e = run_ensemble(&Vec3C::from_real(0.6, 0.8, 0.0), &p, &segs, 500, 1).unwrap();
        assert!((e.pop_mean.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!((e.mean_density.weight() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = SystemParams::reference();
        let seg = [Segment::new(GeneratorKind::ProbeOn, 1e-3).unwrap()];
        assert!(run_ensemble(&Vec3C::basis(1), &p, &seg, 0, 0).is_err());
        assert!(evolve_trajectory(&Vec3C::from_real(1.0, 1.0, 0.0), &p, &seg, 0).is_err());
    }

    #[test]
    fn dark_start_stays_dark_without_rf() {
        let p = SystemParams::reference().with_omega2(0.0);
        let s = conditional_states(&p, REFERENCE_TAU_P, 50, 3, |_| Vec3C::basis(2)).unwrap();
        assert_eq!(s.n_emission, 0);
        let dark = no_emission_state(&p).unwrap();
        assert_eq!(s.no_emission.unwrap().fidelity(&dark), 1.0);
    }

    #[test]
    fn ks_statistic_of_exact_quantiles() {
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        assert!((ks_statistic(&xs, |x| x) - 0.5 / n as f64).abs() < 1e-15);
    }

    #[test]
    fn first_jump_ks_small() {
        let p = rescaled();
        let t = first_jump_ks(&Vec3C::basis(1), &p, GeneratorKind::ProbeOn, 24.0, 2000, 4).unwrap();
        assert!(t.passed, "{t:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn jump_time_inverts_survival(u in 1e-6f64..0.999_999, mix in 0.0f64..1.0) {
            let p = SystemParams::reference();
            let psi = Vec3C::from_real(mix.sqrt(), 0.0, (1.0 - mix).sqrt());
            let on = NoJumpEvolution::new(&p, GeneratorKind::ProbeOn);
            if let Some(t) = on.sample_jump_time(&psi, REFERENCE_TAU_P, u) {
                prop_assert!(t > 0.0 && t <= REFERENCE_TAU_P);
                prop_assert!((on.survival(&psi, t) - u).abs() < 1e-9);
            } else {
                prop_assert!(on.survival(&psi, REFERENCE_TAU_P) > u);
            }
        }
    }
}
