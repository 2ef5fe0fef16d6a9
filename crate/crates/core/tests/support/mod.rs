//! Oracles for the integration tests, written against the equations
//! directly rather than the library's helpers.

#![allow(dead_code)]

use num_complex::Complex64 as C;
use rand::Rng;
use zeno_core::vsystem::SystemParams;

pub type M3 = [[C; 3]; 3];

pub fn zero() -> M3 {
    [[C::new(0.0, 0.0); 3]; 3]
}

pub fn mul(a: &M3, b: &M3) -> M3 {
    let mut out = zero();
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn adjoint(a: &M3) -> M3 {
    let mut out = zero();
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

pub fn axpy(y: &M3, a: f64, x: &M3) -> M3 {
    let mut out = *y;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] += x[i][j] * a;
        }
    }
    out
}

pub fn max_diff(a: &M3, b: &M3) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            worst = worst.max((a[i][j] - b[i][j]).norm());
        }
    }
    worst
}

pub fn to_m3(m: &zeno_core::linalg3::Mat3C) -> M3 {
    m.0
}

/// `M = A3/2 |3><3| + (i/2)[Omega2 (|1><2| + |2><1|) + Omega3 (|1><3| + |3><1|)]`,
/// with the probe term dropped when `probe` is false.
pub fn generator(p: &SystemParams, probe: bool) -> M3 {
    let mut m = zero();
    let rf = C::new(0.0, 0.5 * p.omega2);
    let pr = if probe { C::new(0.0, 0.5 * p.omega3) } else { C::new(0.0, 0.0) };
    m[0][1] = rf;
    m[1][0] = rf;
    m[0][2] = pr;
    m[2][0] = pr;
    m[2][2] = C::new(0.5 * p.a3, 0.0);
    m
}

/// Bloch equations `d rho/dt = -(M rho + rho M^dag) + A3 rho_33 |1><1|`.
pub fn bloch_rhs(p: &SystemParams, m: &M3, rho: &M3) -> M3 {
    let a = mul(m, rho);
    let b = mul(rho, &adjoint(m));
    let mut out = zero();
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = -(a[i][j] + b[i][j]);
        }
    }
    out[0][0] += rho[2][2] * p.a3;
    out
}

/// Classical fixed-step fourth-order Runge-Kutta over `duration`.
pub fn rk4(p: &SystemParams, probe: bool, rho0: &M3, duration: f64, steps: usize) -> M3 {
    let m = generator(p, probe);
    let h = duration / steps as f64;
    let mut rho = *rho0;
    for _ in 0..steps {
        let k1 = bloch_rhs(p, &m, &rho);
        let k2 = bloch_rhs(p, &m, &axpy(&rho, 0.5 * h, &k1));
        let k3 = bloch_rhs(p, &m, &axpy(&rho, 0.5 * h, &k2));
        let k4 = bloch_rhs(p, &m, &axpy(&rho, h, &k3));
        for i in 0..3 {
            for j in 0..3 {
                rho[i][j] += (k1[i][j] + k2[i][j] * 2.0 + k3[i][j] * 2.0 + k4[i][j]) * (h / 6.0);
            }
        }
    }
    rho
}

/// Parameters with every small parameter below 0.1, drawn log-uniformly.
pub fn regime_params(rng: &mut impl Rng) -> SystemParams {
    loop {
        let a3 = 10f64.powf(rng.random_range(6.0..9.0));
        let omega3 = a3 * 10f64.powf(rng.random_range(-2.5..-0.3));
        let omega2 = omega3 * omega3 / a3 * 10f64.powf(rng.random_range(-5.0..-1.2));
        let p = SystemParams { omega2, omega3, a3 };
        if p.eps_p() < 0.1 && p.eps_r() < 0.1 && p.eps_a() < 0.1 {
            return p;
        }
    }
}

/// Random density matrix: a pure state mixed with the identity.
pub fn random_state(rng: &mut impl Rng) -> M3 {
    let psi: Vec<C> = (0..3)
        .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    let w = rng.random_range(0.0..1.0);
    let mut rho = zero();
    for i in 0..3 {
        for j in 0..3 {
            rho[i][j] = psi[i] * psi[j].conj() * (w / norm);
        }
        rho[i][i] += C::new((1.0 - w) / 3.0, 0.0);
    }
    rho
}
