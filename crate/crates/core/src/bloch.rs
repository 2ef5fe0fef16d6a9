//! Ensemble dynamics from the Bloch equations
//! `d rho/dt = -(G rho + rho G^dagger) + a3 rho_33 |1><1|`.
//!
//! Density matrices are vectorized column-major, `vec(rho)[i + 3 j] =
//! rho[(i, j)]`. Each schedule segment has a constant generator, so it is
//! propagated by the exact exponential of its Liouvillian.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZenoError};
use crate::expm::{exp_taylor, SquareMatrix};
use crate::linalg3::{Mat3C, C64};
use crate::quadrature::{integrate, QuadOptions};
use crate::vsystem::{
    build_generator, DensityMatrix3, GeneratorKind, ReducedEvolution, SystemParams,
};

pub type Matrix9 = SMatrix<C64, 9, 9>;
pub type Vector9 = SVector<C64, 9>;

/// Position of `rho[(i, j)]` in the column-major vectorization.
pub const fn vec_index(i: usize, j: usize) -> usize {
    i + 3 * j
}

pub fn vectorize(m: &Mat3C) -> Vector9 {
    Vector9::from_fn(|k, _| m[(k % 3, k / 3)])
}

pub fn unvectorize(v: &Vector9) -> Mat3C {
    let mut m = Mat3C::zero();
    for k in 0..9 {
        m[(k % 3, k / 3)] = v[k];
    }
    m
}

/// A linear map on vectorized 3x3 matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    pub entries: Matrix9,
}

impl Superoperator {
    pub fn apply(&self, m: &Mat3C) -> Mat3C {
        unvectorize(&(self.entries * vectorize(m)))
    }

    /// Eigenvalues from the complex Schur form.
    pub fn spectrum(&self) -> [C64; 9] {
        let (_, t) = self.entries.schur().unpack();
        std::array::from_fn(|k| t[(k, k)])
    }

    /// Largest `|tr L(E_ij)|` over the basis matrices; zero for a
    /// trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        (0..9)
            .map(|col| {
                (0..3)
                    .map(|i| self.entries[(vec_index(i, i), col)])
                    .sum::<C64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

impl SquareMatrix for Superoperator {
    fn identity() -> Self {
        Superoperator {
            entries: Matrix9::identity(),
        }
    }

    fn norm_one(&self) -> f64 {
        (0..9)
            .map(|j| self.entries.column(j).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn scaled(&self, factor: f64) -> Self {
        Superoperator {
            entries: self.entries * C64::new(factor, 0.0),
        }
    }

    fn matmul(&self, rhs: &Self) -> Self {
        Superoperator {
            entries: self.entries * rhs.entries,
        }
    }

    fn plus_identity(&self) -> Self {
        Superoperator {
            entries: self.entries + Matrix9::identity(),
        }
    }

    fn add(&self, rhs: &Self) -> Self {
        Superoperator {
            entries: self.entries + rhs.entries,
        }
    }
}

/// The Bloch generator `L(rho) = -(G rho + rho G^dagger) + a3 rho_33 |1><1|`.
pub fn build_liouvillian(p: &SystemParams, kind: GeneratorKind) -> Superoperator {
    let g = build_generator(p, kind);
    let gd = g.adjoint();
    let mut entries = Matrix9::zeros();
    for j in 0..3 {
        for i in 0..3 {
            let e = Mat3C::ket_bra(i + 1, j + 1);
            let mut image = -(g * e + e * gd);
            image[(0, 0)] += C64::new(p.a3, 0.0) * e[(2, 2)];
            let col = vec_index(i, j);
            for k in 0..9 {
                entries[(k, col)] = image[(k % 3, k / 3)];
            }
        }
    }
    Superoperator { entries }
}

/// One piece of a pulse schedule with a constant generator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: GeneratorKind,
    pub duration: f64,
}

impl Segment {
    pub fn new(kind: GeneratorKind, duration: f64) -> Result<Self> {
        if !(duration >= 0.0) || !duration.is_finite() {
            return Err(ZenoError::InvalidArgument(format!(
                "segment duration must be finite and non-negative, got {duration}"
            )));
        }
        Ok(Segment { kind, duration })
    }
}

/// `exp(L t)` by scaling and squaring.
pub fn exp_liouvillian(l: &Superoperator, t: f64) -> Superoperator {
    exp_taylor(&l.scaled(t))
}

/// Smallest (Frobenius) change of `e` that makes it trace preserving:
/// the defect of the trace functional is spread evenly over the three
/// population rows. Rounding in the squaring phase otherwise leaks about
/// 1e-12 of weight per segment at strong driving.
pub fn restore_trace(e: &Superoperator) -> Superoperator {
    let mut out = e.clone();
    for col in 0..9 {
        let target = if col % 4 == 0 { 1.0 } else { 0.0 };
        let t: C64 = (0..3).map(|i| e.entries[(vec_index(i, i), col)]).sum();
        let defect = (C64::new(target, 0.0) - t) / 3.0;
        for i in 0..3 {
            out.entries[(vec_index(i, i), col)] += defect;
        }
    }
    out
}

/// Trace-preserving propagator of one segment.
pub fn segment_propagator(p: &SystemParams, seg: Segment) -> Superoperator {
    restore_trace(&exp_liouvillian(&build_liouvillian(p, seg.kind), seg.duration))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct CacheKey {
    omega2: u64,
    omega3: u64,
    a3: u64,
    kind: GeneratorKind,
    duration: u64,
}

impl CacheKey {
    fn new(p: &SystemParams, kind: GeneratorKind, duration: f64) -> Self {
        CacheKey {
            omega2: p.omega2.to_bits(),
            omega3: p.omega3.to_bits(),
            a3: p.a3.to_bits(),
            kind,
            duration: duration.to_bits(),
        }
    }
}

/// Segment propagators keyed on the exact bits of (parameters, kind,
/// duration). Readers share the lock; a miss computes outside the lock and
/// keeps whichever entry was inserted first.
#[derive(Default)]
pub struct PropagatorCache {
    map: RwLock<HashMap<CacheKey, Arc<Superoperator>>>,
}

/// Entries kept before the cache is flushed.
pub const CACHE_CAPACITY: usize = 4096;

impl PropagatorCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Process-wide cache used by the free functions of this module.
    pub fn global() -> &'static PropagatorCache {
        static CACHE: OnceLock<PropagatorCache> = OnceLock::new();
        CACHE.get_or_init(PropagatorCache::new)
    }

    pub fn get(&self, p: &SystemParams, seg: Segment) -> Arc<Superoperator> {
        let key = CacheKey::new(p, seg.kind, seg.duration);
        if let Some(hit) = self.map.read().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Arc::clone(hit);
        }
        let fresh = Arc::new(segment_propagator(p, seg));
        let mut map = self.map.write().unwrap_or_else(|e| e.into_inner());
        if map.len() >= CACHE_CAPACITY {
            map.clear();
        }
        Arc::clone(map.entry(key).or_insert(fresh))
    }

    pub fn len(&self) -> usize {
        self.map.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Propagates `rho` through one segment.
pub fn propagate(rho: &DensityMatrix3, p: &SystemParams, seg: Segment) -> DensityMatrix3 {
    propagate_with(PropagatorCache::global(), rho, p, seg)
}

pub fn propagate_with(
    cache: &PropagatorCache,
    rho: &DensityMatrix3,
    p: &SystemParams,
    seg: Segment,
) -> DensityMatrix3 {
    if seg.duration == 0.0 {
        return *rho;
    }
    let e = cache.get(p, seg);
    DensityMatrix3::from_hermitian(e.apply(rho.entries()))
}

/// Propagation without the cache, for one-off durations.
pub fn propagate_uncached(rho: &DensityMatrix3, p: &SystemParams, seg: Segment) -> DensityMatrix3 {
    if seg.duration == 0.0 {
        return *rho;
    }
    DensityMatrix3::from_hermitian(segment_propagator(p, seg).apply(rho.entries()))
}

/// Emission intensity `a3 rho_33`.
pub fn emission_intensity(rho_t: &DensityMatrix3, p: &SystemParams) -> f64 {
    (p.a3 * rho_t.population(3)).max(0.0)
}

/// Runs `rho0` through `segments` in order.
pub fn run_schedule(rho0: &DensityMatrix3, p: &SystemParams, segments: &[Segment]) -> DensityMatrix3 {
    segments
        .iter()
        .fold(*rho0, |rho, seg| propagate(&rho, p, *seg))
}

/// Like [`run_schedule`], returning the state after every segment.
pub fn run_schedule_trace(
    rho0: &DensityMatrix3,
    p: &SystemParams,
    segments: &[Segment],
) -> Vec<DensityMatrix3> {
    let mut out = Vec::with_capacity(segments.len());
    let mut rho = *rho0;
    for seg in segments {
        rho = propagate(&rho, p, *seg);
        out.push(rho);
    }
    out
}

/// Smallest nonzero relaxation rate: the negated real part of the
/// Liouvillian eigenvalue closest to (but not at) zero.
pub fn slow_relaxation_rate(p: &SystemParams, kind: GeneratorKind) -> f64 {
    let l = build_liouvillian(p, kind);
    let mut rates: Vec<f64> = l.spectrum().iter().map(|z| -z.re).collect();
    rates.sort_by(f64::total_cmp);
    // rates[0] is the stationary mode.
    rates[1]
}

/// Checks the renewal equation
/// `I(t) = a3 rho0_33(t; rho) + a3 int_0^t I(t - s) rho0_33(s; |1>) ds`
/// on `samples` equally spaced points of `[0, tau_max]`, with `I` from Bloch
/// propagation and `rho0` from the reduced propagator. Returns the largest
/// absolute residual.
pub fn verify_integral_equation(
    p: &SystemParams,
    rho0: &DensityMatrix3,
    tau_max: f64,
    samples: usize,
) -> Result<f64> {
    if samples < 16 {
        return Err(ZenoError::InvalidArgument(format!(
            "at least 16 samples required, got {samples}"
        )));
    }
    if !(tau_max > 0.0) {
        return Err(ZenoError::InvalidArgument(format!("tau_max must be positive, got {tau_max}")));
    }
    let l = build_liouvillian(p, GeneratorKind::ProbeOn);
    let on = ReducedEvolution::new(p, GeneratorKind::ProbeOn);
    let ground = DensityMatrix3::basis(1);
    let intensity = |t: f64| {
        let e = exp_liouvillian(&l, t);
        p.a3 * e.apply(rho0.entries())[(2, 2)].re
    };
    let kernel = |t: f64| on.evolve(&ground, t).population(3);
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-11,
        max_intervals: 4000,
    };
    let mut worst = 0.0f64;
    for k in 0..samples {
        let t = tau_max * k as f64 / (samples - 1) as f64;
        let lhs = intensity(t);
        let direct = p.a3 * on.evolve(rho0, t).population(3);
        // Both factors have transients on the 1/a3 scale, at s = 0 and s = t;
        // refine geometrically away from each end.
        let mut cuts = vec![0.0, t];
        let mut w = 16.0 / p.a3;
        while 2.0 * w < t {
            cuts.extend([w, t - w]);
            w *= 2.0;
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut conv = 0.0;
        for pair in cuts.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let r = integrate(|s| [intensity(t - s) * kernel(s)], lo, hi, opts);
            if !r.converged {
                return Err(ZenoError::InternalConsistency(format!(
                    "convolution quadrature did not converge on [{lo:e}, {hi:e}]"
                )));
            }
            conv += r.value[0];
        }
        let rhs = direct + p.a3 * conv;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// The two subensembles of Bloch evolution over `tau` under the probe-on
/// generator: `rho0(tau)` without any emission and `rho>(tau)` with at least
/// one, the latter from
/// `int_0^tau I(s) exp(-M (tau - s)) |1><1| exp(-M^dagger (tau - s)) ds`.
pub fn subensemble_decomposition(
    p: &SystemParams,
    rho: &DensityMatrix3,
    tau: f64,
    rel_tol: f64,
) -> (DensityMatrix3, Mat3C) {
    let l = build_liouvillian(p, GeneratorKind::ProbeOn);
    let on = ReducedEvolution::new(p, GeneratorKind::ProbeOn);
    let ground = DensityMatrix3::basis(1);
    let no_emission = on.evolve(rho, tau);
    let integrand = |s: f64| {
        let i_s = p.a3 * exp_liouvillian(&l, s).apply(rho.entries())[(2, 2)].re;
        let after = on.evolve(&ground, tau - s);
        let e = after.entries();
        let mut out = [0.0; 18];
        for k in 0..9 {
            let z = e[(k % 3, k / 3)] * i_s;
            out[2 * k] = z.re;
            out[2 * k + 1] = z.im;
        }
        out
    };
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol,
        max_intervals: 4000,
    };
    let r = integrate(integrand, 0.0, tau, opts).value;
    let mut emitted = Mat3C::zero();
    for k in 0..9 {
        emitted[(k % 3, k / 3)] = C64::new(r[2 * k], r[2 * k + 1]);
    }
    (no_emission, emitted)
}
