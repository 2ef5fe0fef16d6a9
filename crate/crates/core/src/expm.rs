//! Scaling-and-squaring matrix exponential shared by the 3x3 and 9x9 types.

/// Minimal square-matrix algebra needed by [`exp_taylor`].
pub trait SquareMatrix: Clone {
    fn identity() -> Self;
    /// Maximum absolute column sum.
    fn norm_one(&self) -> f64;
    fn scaled(&self, factor: f64) -> Self;
    fn matmul(&self, rhs: &Self) -> Self;
    fn plus_identity(&self) -> Self;
    fn add(&self, rhs: &Self) -> Self;
}

/// Scaled norm bound before the Taylor series is evaluated.
pub const SCALED_NORM: f64 = 0.5;
/// Truncation order of the Taylor series.
pub const TAYLOR_ORDER: u32 = 16;

/// Computes `exp(a)`.
///
/// `a` is divided by `2^s` until its one-norm is at most [`SCALED_NORM`],
/// the order-[`TAYLOR_ORDER`] Taylor polynomial is evaluated by Horner's
/// rule and the result is squared `s` times.
///
/// The iteration carries `F = exp(x) - I` and squares through
/// `F <- 2F + F^2`. With the identity kept apart, small rotation angles
/// keep their relative precision, so the error grows with `s` rather than
/// with `2^s`.
pub fn exp_taylor<M: SquareMatrix>(a: &M) -> M {
    let norm = a.norm_one();
    let mut squarings = 0u32;
    if norm > SCALED_NORM {
        squarings = (norm / SCALED_NORM).log2().ceil().max(0.0) as u32;
    }
    let x = a.scaled(0.5f64.powi(squarings as i32));

    // X(I + X/2(I + X/3(... (I + X/16))))
    let mut acc = M::identity();
    for k in (2..=TAYLOR_ORDER).rev() {
        acc = x.scaled(1.0 / k as f64).matmul(&acc).plus_identity();
    }
    let mut f = x.matmul(&acc);
    for _ in 0..squarings {
        f = f.scaled(2.0).add(&f.matmul(&f));
    }
    f.plus_identity()
}
