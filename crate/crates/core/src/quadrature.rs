//! Adaptive Gauss-Kronrod (7/15 point) quadrature for vector-valued
//! integrands.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
/// Gauss weights for the odd Kronrod nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and limits of [`integrate`].
#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of subintervals.
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 0.0,
            rel_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<const N: usize> {
    pub value: [f64; N],
    /// Estimated absolute error (max over components).
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

struct Piece<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: f64,
}

fn rule<const N: usize, F: Fn(f64) -> [f64; N]>(f: &F, a: f64, b: f64) -> Piece<N> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = [0.0; N];
    let mut gauss = [0.0; N];
    let fc = f(center);
    for k in 0..N {
        kronrod[k] = WGK[7] * fc[k];
        gauss[k] = WG[3] * fc[k];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let (f1, f2) = (f(center - dx), f(center + dx));
        for k in 0..N {
            let s = f1[k] + f2[k];
            kronrod[k] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * s;
            }
        }
    }
    let mut error = 0.0f64;
    for k in 0..N {
        kronrod[k] *= half;
        gauss[k] *= half;
        error = error.max((kronrod[k] - gauss[k]).abs());
    }
    Piece {
        a,
        b,
        value: kronrod,
        error,
    }
}

/// Integrates `f` over `[a, b]`, bisecting the subinterval with the
/// largest error estimate until the total estimate is within
/// `max(abs_tol, rel_tol * |I|)` (max-norm over components).
pub fn integrate<const N: usize, F>(f: F, a: f64, b: f64, opts: QuadOptions) -> QuadResult<N>
where
    F: Fn(f64) -> [f64; N],
{
    if a == b {
        return QuadResult {
            value: [0.0; N],
            error: 0.0,
            evaluations: 0,
            converged: true,
        };
    }
    let mut pieces = vec![rule(&f, a, b)];
    let mut evaluations = 15;
    loop {
        let mut total = [0.0; N];
        let mut err = 0.0;
        for p in &pieces {
            for k in 0..N {
                total[k] += p.value[k];
            }
            err += p.error;
        }
        let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let target = opts.abs_tol.max(opts.rel_tol * scale);
        if err <= target || pieces.len() >= opts.max_intervals {
            return QuadResult {
                value: total,
                error: err,
                evaluations,
                converged: err <= target,
            };
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // Interval exhausted at machine resolution; keep its estimate.
            pieces.push(Piece { error: 0.0, ..p });
            continue;
        }
        pieces.push(rule(&f, p.a, mid));
        pieces.push(rule(&f, mid, p.b));
        evaluations += 30;
    }
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> QuadResult<1> {
    integrate(|x| [f(x)], a, b, opts)
}
