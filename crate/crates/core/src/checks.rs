//! Property checks run by `zeno check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bloch::{build_liouvillian, run_schedule_trace};
use crate::experiment::build_schedule;
use crate::linalg3::{eigensystem_default, expm_series, expm_spectral, Vec3C};
use crate::montecarlo::{first_jump_ks, run_ensemble};
use crate::pulse::PredictionInputs;
use crate::vsystem::{
    build_generator, stationary_state, DensityMatrix3, GeneratorKind, SystemParams, REFERENCE_TAU_P,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, worst: f64, limit: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: worst <= limit,
        detail: format!("worst {worst:.3e}, limit {limit:.1e}"),
    }
}

/// Parameters drawn log-uniformly around the reference point, with all
/// small parameters below 0.1.
pub fn random_params(rng: &mut impl Rng) -> SystemParams {
    loop {
        let a3 = 10f64.powf(rng.random_range(6.0..9.0));
        let omega3 = a3 * 10f64.powf(rng.random_range(-2.5..-0.3));
        let omega2 = omega3 * omega3 / a3 * 10f64.powf(rng.random_range(-6.0..-1.5));
        let p = SystemParams { omega2, omega3, a3 };
        if p.eps_p() < 0.1 && p.eps_r() < 0.1 && p.eps_a() < 0.1 {
            return p;
        }
    }
}

fn schedule_sums() -> CheckOutcome {
    let mut worst = 0.0f64;
    for p in [SystemParams::reference(), SystemParams::strong_probe()] {
        for n in 1..=106 {
            let total: f64 = match build_schedule(&p, REFERENCE_TAU_P, n) {
                Ok(s) => s.iter().map(|s| s.duration).sum(),
                Err(_) => f64::INFINITY,
            };
            worst = worst.max((total - p.t_pi()).abs() / p.t_pi());
        }
    }
    outcome("schedule durations sum to T_pi", worst, 1e-12)
}

fn zeroth_order_identity() -> CheckOutcome {
    let mut worst = 0.0f64;
    for p in [SystemParams::reference(), SystemParams::strong_probe()] {
        for n in 1..=106 {
            worst = worst.max(match PredictionInputs::new(&p, REFERENCE_TAU_P, n) {
                Ok(i) => (i.zeroth_order().quantum_jump() - i.modified()).abs(),
                Err(_) => f64::INFINITY,
            });
        }
    }
    outcome("quantum jump at zeroth order equals modified projection", worst, 1e-14)
}

fn vieta(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut worst = 0.0f64;
    let mut draws: Vec<SystemParams> = (0..100).map(|_| random_params(rng)).collect();
    draws.extend([SystemParams::reference(), SystemParams::strong_probe()]);
    for p in draws {
        let m = build_generator(&p, GeneratorKind::ProbeOn);
        let l = eigensystem_default(&m).eigenvalues;
        let scale = l.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let sum = l[0] + l[1] + l[2] - m.trace();
        let pairs = l[0] * l[1] + l[0] * l[2] + l[1] * l[2];
        let minors = crate::linalg3::characteristic_coefficients(&m)[1];
        let prod = l[0] * l[1] * l[2] - m.det();
        worst = worst
            .max(sum.norm() / scale)
            .max((pairs - minors).norm() / (scale * scale))
            .max(prod.norm() / (l[0] * l[1] * l[2]).norm());
    }
    outcome("Vieta identities of the probe-on spectrum", worst, 1e-12)
}

fn spectral_vs_series(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 50 {
        let p = random_params(rng);
        let m = build_generator(&p, GeneratorKind::ProbeOn);
        let es = eigensystem_default(&m);
        if es.degenerate {
            continue;
        }
        let t = rng.random_range(0.0..20.0) / p.a3;
        worst = worst.max(match expm_spectral(&es, t) {
            Ok(a) => (a - expm_series(&m, t)).max_abs(),
            Err(_) => f64::INFINITY,
        });
        n += 1;
    }
    outcome("spectral and series exponentials agree", worst, 1e-10)
}

fn stationary_fixed_point(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut worst = 0.0f64;
    let mut draws: Vec<SystemParams> = (0..50).map(|_| random_params(rng)).collect();
    draws.extend([SystemParams::reference(), SystemParams::strong_probe()]);
    for p in draws {
        let Ok(ss) = stationary_state(&p) else {
            worst = f64::INFINITY;
            continue;
        };
        let residual = build_liouvillian(&p, GeneratorKind::ProbeOn).apply(ss.entries());
        worst = worst.max(residual.max_abs() / p.a3);
    }
    outcome("stationary state is a fixed point of the Bloch equations", worst, 1e-12)
}

fn bloch_invariants() -> CheckOutcome {
    let mut trace = 0.0f64;
    let mut negative = 0.0f64;
    for p in [SystemParams::reference(), SystemParams::strong_probe()] {
        let Ok(s) = build_schedule(&p, REFERENCE_TAU_P, 64) else {
            trace = f64::INFINITY;
            continue;
        };
        for rho in run_schedule_trace(&DensityMatrix3::basis(1), &p, &s) {
            trace = trace.max((rho.weight() - 1.0).abs());
            negative = negative.max(-rho.min_eigenvalue());
        }
    }
    let mut o = outcome("Bloch propagation keeps trace and positivity", trace, 1e-11);
    o.passed &= negative <= 1e-10;
    o.detail = format!("{}, most negative eigenvalue {:.3e}", o.detail, -negative);
    o
}

fn mc_determinism() -> CheckOutcome {
    let p = SystemParams::reference().rescaled(1e-4);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .ok()
            .and_then(|pool| {
                pool.install(|| {
                    build_schedule(&p, REFERENCE_TAU_P * 1e4, 4)
                        .and_then(|s| run_ensemble(&Vec3C::basis(1), &p, &s, 400, 99))
                        .ok()
                })
            })
    };
    let (a, b) = (run(1), run(3));
    CheckOutcome {
        name: "Monte Carlo estimate independent of thread count",
        passed: a.is_some() && a == b,
        detail: "1 vs 3 worker threads, 400 trajectories".into(),
    }
}

fn ks_first_jump() -> CheckOutcome {
    let p = SystemParams::reference().rescaled(1e-4);
    match first_jump_ks(&Vec3C::basis(1), &p, GeneratorKind::ProbeOn, REFERENCE_TAU_P * 1e4, 10_000, 2024) {
        Ok(t) => CheckOutcome {
            name: "first-jump times follow 1 - P0 (KS, 1%)",
            passed: t.passed,
            detail: format!("D = {:.4e}, critical {:.4e}", t.statistic, t.critical_value),
        },
        Err(e) => CheckOutcome {
            name: "first-jump times follow 1 - P0 (KS, 1%)",
            passed: false,
            detail: e.to_string(),
        },
    }
}

/// Runs the whole suite with a fixed seed.
pub fn run_checks() -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    vec![
        schedule_sums(),
        zeroth_order_identity(),
        vieta(&mut rng),
        spectral_vs_series(&mut rng),
        stationary_fixed_point(&mut rng),
        bloch_invariants(),
        mc_determinism(),
        ks_first_jump(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        for c in run_checks() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn random_params_are_in_regime() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let p = random_params(&mut rng);
            assert!(p.eps_p() < 0.1 && p.eps_r() < 0.1 && p.eps_a() < 0.1);
        }
    }
}
