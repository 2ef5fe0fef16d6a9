//! Complex linear algebra in three dimensions.
//!
//! Vectors and matrices are expressed in the atomic basis `|1>, |2>, |3>`.
//! Besides the usual algebra this module provides the cubic root solver used
//! for the characteristic polynomial of the reduced generator, eigensystems
//! with a reciprocal (biorthogonal) basis for non-normal matrices, and two
//! independent evaluators of `exp(-m t)`.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZenoError};
use crate::expm::{exp_taylor, SquareMatrix};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Default relative eigenvalue gap below which a spectrum counts as degenerate.
pub const DEFAULT_RELATIVE_GAP: f64 = 1e-6;

/// A complex 3-vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vec3C(pub [C64; 3]);

impl Vec3C {
    pub const fn new(a: C64, b: C64, c: C64) -> Self {
        Vec3C([a, b, c])
    }

    pub fn zero() -> Self {
        Vec3C([ZERO; 3])
    }

    /// Basis vector `|level>` with `level` in `1..=3`.
    pub fn basis(level: usize) -> Self {
        assert!((1..=3).contains(&level), "atomic levels are 1, 2, 3");
        let mut v = Self::zero();
        v.0[level - 1] = ONE;
        v
    }

    pub fn from_real(a: f64, b: f64, c: f64) -> Self {
        Vec3C([C64::new(a, 0.0), C64::new(b, 0.0), C64::new(c, 0.0)])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Returns `self / |self|`. Normalization is never applied implicitly.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        self.scale(C64::new(1.0 / n, 0.0))
    }

    /// Inner product `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &Vec3C) -> C64 {
        (0..3).map(|k| self.0[k].conj() * other.0[k]).sum()
    }

    /// Bilinear product without conjugation.
    fn dot_plain(&self, other: &Vec3C) -> C64 {
        (0..3).map(|k| self.0[k] * other.0[k]).sum()
    }

    fn cross(&self, other: &Vec3C) -> Vec3C {
        let a = &self.0;
        let b = &other.0;
        Vec3C([
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])
    }

    pub fn scale(&self, s: C64) -> Self {
        Vec3C([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    pub fn conj(&self) -> Self {
        Vec3C([self.0[0].conj(), self.0[1].conj(), self.0[2].conj()])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.is_finite())
    }

    /// Outer product `|self><other|`.
    pub fn outer(&self, other: &Vec3C) -> Mat3C {
        let mut m = Mat3C::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i] * other.0[j].conj();
            }
        }
        m
    }

    /// Multiplies by the phase that makes the largest-magnitude component
    /// real and positive.
    fn fix_phase(&self) -> Self {
        let k = (0..3)
            .max_by(|&a, &b| self.0[a].norm().total_cmp(&self.0[b].norm()))
            .unwrap_or(0);
        let z = self.0[k];
        if z.norm() == 0.0 {
            return *self;
        }
        self.scale(z.conj() / z.norm())
    }
}

impl Index<usize> for Vec3C {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl Add for Vec3C {
    type Output = Vec3C;
    fn add(self, rhs: Vec3C) -> Vec3C {
        Vec3C([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1], self.0[2] + rhs.0[2]])
    }
}

impl Sub for Vec3C {
    type Output = Vec3C;
    fn sub(self, rhs: Vec3C) -> Vec3C {
        Vec3C([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1], self.0[2] - rhs.0[2]])
    }
}

/// A complex 3x3 matrix, row-major: `m[(i, j)] = <i+1| m |j+1>`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat3C(pub [[C64; 3]; 3]);

impl fmt::Debug for Mat3C {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat3C[")?;
        for row in &self.0 {
            writeln!(f, "  {:+.6e} {:+.6e} {:+.6e}", row[0], row[1], row[2])?;
        }
        write!(f, "]")
    }
}

impl Mat3C {
    pub fn zero() -> Self {
        Mat3C([[ZERO; 3]; 3])
    }

    pub fn identity() -> Self {
        Self::diag([ONE; 3])
    }

    pub fn diag(d: [C64; 3]) -> Self {
        let mut m = Self::zero();
        for (k, z) in d.into_iter().enumerate() {
            m.0[k][k] = z;
        }
        m
    }

    pub fn from_real(rows: [[f64; 3]; 3]) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = C64::new(rows[i][j], 0.0);
            }
        }
        m
    }

    /// `|i><j|` for levels `i, j` in `1..=3`.
    pub fn ket_bra(i: usize, j: usize) -> Self {
        Vec3C::basis(i).outer(&Vec3C::basis(j))
    }

    /// Projector onto the 1-2 subspace.
    pub fn p12() -> Self {
        Self::diag([ONE, ONE, ZERO])
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> C64 {
        let a = &self.0;
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    }

    /// Inverse by the adjugate; `None` when the determinant vanishes or the
    /// result is not finite.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm() == 0.0 {
            return None;
        }
        let a = &self.0;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| {
            a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]
        };
        let adj = Mat3C([
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ]);
        let inv = adj * (ONE / d);
        inv.is_finite().then_some(inv)
    }

    pub fn row(&self, i: usize) -> Vec3C {
        Vec3C(self.0[i])
    }

    pub fn col(&self, j: usize) -> Vec3C {
        Vec3C([self.0[0][j], self.0[1][j], self.0[2][j]])
    }

    pub fn from_cols(cols: [Vec3C; 3]) -> Self {
        let mut m = Self::zero();
        for (j, c) in cols.iter().enumerate() {
            for i in 0..3 {
                m.0[i][j] = c.0[i];
            }
        }
        m
    }

    pub fn apply(&self, v: &Vec3C) -> Vec3C {
        let mut out = Vec3C::zero();
        for i in 0..3 {
            out.0[i] = (0..3).map(|j| self.0[i][j] * v.0[j]).sum();
        }
        out
    }

    /// `self * rho * self^dagger`.
    pub fn conjugate(&self, rho: &Mat3C) -> Mat3C {
        *self * *rho * self.adjoint()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.is_finite())
    }

    /// Maximum deviation from Hermiticity, `max |m_ij - conj(m_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        (*self - self.adjoint()).max_abs()
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Mat3C {
        let mut m = *self;
        for z in m.0.iter_mut().flatten() {
            *z = f(*z);
        }
        m
    }
}

impl Index<(usize, usize)> for Mat3C {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat3C {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl Add for Mat3C {
    type Output = Mat3C;
    fn add(mut self, rhs: Mat3C) -> Mat3C {
        self += rhs;
        self
    }
}

impl AddAssign for Mat3C {
    fn add_assign(&mut self, rhs: Mat3C) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] += rhs.0[i][j];
            }
        }
    }
}

impl Sub for Mat3C {
    type Output = Mat3C;
    fn sub(self, rhs: Mat3C) -> Mat3C {
        self + (-rhs)
    }
}

impl Neg for Mat3C {
    type Output = Mat3C;
    fn neg(self) -> Mat3C {
        self.map(|z| -z)
    }
}

impl Mul for Mat3C {
    type Output = Mat3C;
    fn mul(self, rhs: Mat3C) -> Mat3C {
        let mut m = Mat3C::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i][0] * rhs.0[0][j]
                    + self.0[i][1] * rhs.0[1][j]
                    + self.0[i][2] * rhs.0[2][j];
            }
        }
        m
    }
}

impl Mul<C64> for Mat3C {
    type Output = Mat3C;
    fn mul(self, s: C64) -> Mat3C {
        self.map(|z| z * s)
    }
}

impl Mul<f64> for Mat3C {
    type Output = Mat3C;
    fn mul(self, s: f64) -> Mat3C {
        self.map(|z| z * s)
    }
}

impl SquareMatrix for Mat3C {
    fn identity() -> Self {
        Mat3C::identity()
    }

    fn norm_one(&self) -> f64 {
        (0..3)
            .map(|j| (0..3).map(|i| self.0[i][j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn scaled(&self, factor: f64) -> Self {
        *self * factor
    }

    fn matmul(&self, rhs: &Self) -> Self {
        *self * *rhs
    }

    fn plus_identity(&self) -> Self {
        let mut m = *self;
        for k in 0..3 {
            m.0[k][k] += ONE;
        }
        m
    }

    fn add(&self, rhs: &Self) -> Self {
        *self + *rhs
    }
}

// ---------------------------------------------------------------------------
// Cubic roots
// ---------------------------------------------------------------------------

/// Orders roots by real part, then imaginary part.
fn sort_roots(roots: &mut [C64; 3]) {
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

fn horner_real(a2: f64, a1: f64, a0: f64, x: f64) -> (f64, f64) {
    let p = ((x + a2) * x + a1) * x + a0;
    let dp = (3.0 * x + 2.0 * a2) * x + a1;
    (p, dp)
}

fn horner_complex(c: [C64; 3], z: C64) -> (C64, C64) {
    let [c2, c1, c0] = c;
    let p = ((z + c2) * z + c1) * z + c0;
    let dp = (z * 3.0 + c2 * 2.0) * z + c1;
    (p, dp)
}

/// Newton steps on a real root, kept only while the residual shrinks.
fn polish_real(a2: f64, a1: f64, a0: f64, mut x: f64) -> f64 {
    let (mut p, mut dp) = horner_real(a2, a1, a0, x);
    for _ in 0..8 {
        if p == 0.0 || dp == 0.0 {
            break;
        }
        let next = x - p / dp;
        let (pn, dpn) = horner_real(a2, a1, a0, next);
        if !(pn.abs() < p.abs()) {
            break;
        }
        x = next;
        p = pn;
        dp = dpn;
    }
    x
}

fn polish_complex(c: [C64; 3], mut z: C64) -> C64 {
    let (mut p, mut dp) = horner_complex(c, z);
    for _ in 0..8 {
        if p.norm() == 0.0 || dp.norm() == 0.0 {
            break;
        }
        let next = z - p / dp;
        let (pn, dpn) = horner_complex(c, next);
        if !(pn.norm() < p.norm()) {
            break;
        }
        z = next;
        p = pn;
        dp = dpn;
    }
    z
}

/// Roots of the monic cubic `x^3 + a2 x^2 + a1 x + a0`.
///
/// The depressed cubic is solved with the trigonometric form when all roots
/// are real and with Cardano's formula otherwise, then every root is
/// polished by Newton's method on the original polynomial. Roots come back
/// sorted by ascending real part, ties by ascending imaginary part; complex
/// roots appear as an exact conjugate pair.
pub fn cubic_roots(a2: f64, a1: f64, a0: f64) -> Result<[C64; 3]> {
    if !(a2.is_finite() && a1.is_finite() && a0.is_finite()) {
        return Err(ZenoError::InvalidArgument(format!(
            "cubic coefficients must be finite, got ({a2}, {a1}, {a0})"
        )));
    }
    let shift = a2 / 3.0;
    let p = a1 - a2 * shift;
    let q = (2.0 * a2 * a2 * a2) / 27.0 - a2 * a1 / 3.0 + a0;

    let mut roots = if p == 0.0 && q == 0.0 {
        [C64::new(-shift, 0.0); 3]
    } else {
        let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
        if disc <= 0.0 && p < 0.0 {
            let r = (-p / 3.0).sqrt();
            let cos_arg = ((-q / 2.0) / (r * r * r)).clamp(-1.0, 1.0);
            let phi = cos_arg.acos();
            let mut out = [C64::new(0.0, 0.0); 3];
            for (k, z) in out.iter_mut().enumerate() {
                let t = 2.0 * r * ((phi - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos();
                *z = C64::new(t - shift, 0.0);
            }
            out
        } else {
            // One real root plus a conjugate pair.
            let sq = disc.max(0.0).sqrt();
            let big = if q > 0.0 {
                -(q / 2.0 + sq).cbrt()
            } else {
                (-q / 2.0 + sq).cbrt()
            };
            let small = if big != 0.0 { -p / (3.0 * big) } else { 0.0 };
            let t1 = big + small;
            let re = -t1 / 2.0 - shift;
            let im = (3.0f64).sqrt() / 2.0 * (big - small).abs();
            [
                C64::new(t1 - shift, 0.0),
                C64::new(re, im),
                C64::new(re, -im),
            ]
        }
    };

    // Polish; keep the conjugate-pair structure exact. A complex pair, when
    // present, sits at indices 1 and 2.
    roots[0].re = polish_real(a2, a1, a0, roots[0].re);
    if roots[1].im == 0.0 {
        roots[1].re = polish_real(a2, a1, a0, roots[1].re);
        roots[2].re = polish_real(a2, a1, a0, roots[2].re);
    } else {
        let coeffs = [C64::new(a2, 0.0), C64::new(a1, 0.0), C64::new(a0, 0.0)];
        let z = polish_complex(coeffs, roots[1]);
        roots[1] = C64::new(z.re, z.im.abs());
        roots[2] = roots[1].conj();
    }
    sort_roots(&mut roots);
    Ok(roots)
}

/// Roots of a monic cubic with complex coefficients `[c2, c1, c0]`.
fn cubic_roots_complex(c: [C64; 3]) -> [C64; 3] {
    let [c2, c1, c0] = c;
    let shift = c2 / 3.0;
    let p = c1 - c2 * shift;
    let q = c2 * c2 * c2 * (2.0 / 27.0) - c2 * c1 / 3.0 + c0;
    let disc = (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0);
    let sq = disc.sqrt();
    let w1 = -q / 2.0 + sq;
    let w2 = -q / 2.0 - sq;
    let w = if w1.norm() >= w2.norm() { w1 } else { w2 };
    let omega = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let mut roots = [ZERO; 3];
    if w.norm() == 0.0 {
        roots = [-shift; 3];
    } else {
        let u = w.cbrt();
        let mut uk = u;
        for r in roots.iter_mut() {
            let vk = -p / (uk * 3.0);
            *r = uk + vk - shift;
            uk *= omega;
        }
    }
    for r in roots.iter_mut() {
        *r = polish_complex(c, *r);
    }
    sort_roots(&mut roots);
    roots
}

// ---------------------------------------------------------------------------
// Eigensystems
// ---------------------------------------------------------------------------

/// Eigenvalues, unit right eigenvectors and the reciprocal basis of a 3x3
/// matrix.
///
/// For a non-degenerate spectrum `<lambda_i|lambda^j> = delta_ij` and the
/// reciprocal vectors solve `m^dagger |lambda^i> = conj(lambda_i) |lambda^i>`.
/// Eigenvalues are ordered by ascending real part, so index 0 holds the
/// slowest-decaying mode of a dissipative generator.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSystem {
    pub eigenvalues: [C64; 3],
    pub right_vectors: [Vec3C; 3],
    pub reciprocal_vectors: [Vec3C; 3],
    pub degenerate: bool,
    /// Smallest pairwise eigenvalue distance.
    pub degeneracy_gap: f64,
    pub gap_threshold: f64,
}

impl EigenSystem {
    /// Spectral projector `|lambda_i><lambda^i|`.
    pub fn projector(&self, i: usize) -> Mat3C {
        self.right_vectors[i].outer(&self.reciprocal_vectors[i])
    }

    /// Largest eigenvalue modulus.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Characteristic polynomial `det(x - m) = x^3 + c2 x^2 + c1 x + c0`.
pub fn characteristic_coefficients(m: &Mat3C) -> [C64; 3] {
    let a = &m.0;
    let minors = a[0][0] * a[1][1] - a[0][1] * a[1][0] + a[0][0] * a[2][2]
        - a[0][2] * a[2][0]
        + a[1][1] * a[2][2]
        - a[1][2] * a[2][1];
    [-m.trace(), minors, -m.det()]
}

/// Eigenvalues of `m`, sorted by real part.
pub fn eigenvalues(m: &Mat3C) -> [C64; 3] {
    let c = characteristic_coefficients(m);
    let scale = c[0].norm().max(c[1].norm().sqrt()).max(c[2].norm().cbrt());
    let real = c.iter().enumerate().all(|(k, z)| {
        z.im.abs() <= 1e-15 * scale.powi(k as i32 + 1).max(f64::MIN_POSITIVE)
    });
    if real {
        // Finite input gives finite coefficients, so this cannot fail.
        cubic_roots(c[0].re, c[1].re, c[2].re).unwrap_or_else(|_| cubic_roots_complex(c))
    } else {
        cubic_roots_complex(c)
    }
}

/// Unit eigenvector of `m` for the eigenvalue `lambda`, phase-fixed so its
/// largest component is real and positive.
pub fn eigenvector(m: &Mat3C, lambda: C64) -> Vec3C {
    let mut a = *m;
    for k in 0..3 {
        a.0[k][k] -= lambda;
    }
    let rows = [a.row(0), a.row(1), a.row(2)];
    let candidates = [
        rows[0].cross(&rows[1]),
        rows[0].cross(&rows[2]),
        rows[1].cross(&rows[2]),
    ];
    let best = candidates
        .iter()
        .copied()
        .max_by(|x, y| x.norm_sqr().total_cmp(&y.norm_sqr()))
        .unwrap_or_else(Vec3C::zero);
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    if best.norm() > 1e-13 * scale * scale {
        return best.normalized().fix_phase();
    }
    // Rank <= 1: any vector annihilated by the dominant row will do.
    let dominant = rows
        .iter()
        .copied()
        .max_by(|x, y| x.norm_sqr().total_cmp(&y.norm_sqr()))
        .unwrap_or_else(Vec3C::zero);
    if dominant.norm() == 0.0 {
        return Vec3C::basis(1);
    }
    let v = (1..=3)
        .map(|l| dominant.cross(&Vec3C::basis(l)))
        .max_by(|x, y| x.norm_sqr().total_cmp(&y.norm_sqr()))
        .unwrap_or_else(|| Vec3C::basis(1));
    debug_assert!(dominant.dot_plain(&v).norm() <= 1e-10 * dominant.norm() * v.norm());
    v.normalized().fix_phase()
}

/// Eigensystem of `m` with the degeneracy flag raised when the smallest
/// eigenvalue distance falls below `gap_threshold`.
pub fn eigensystem(m: &Mat3C, gap_threshold: f64) -> EigenSystem {
    let lambdas = eigenvalues(m);
    let gap = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(i, j)| (lambdas[i] - lambdas[j]).norm())
        .fold(f64::INFINITY, f64::min);
    let right = [
        eigenvector(m, lambdas[0]),
        eigenvector(m, lambdas[1]),
        eigenvector(m, lambdas[2]),
    ];
    let reciprocal = match Mat3C::from_cols(right).inverse() {
        Some(w) => [w.row(0).conj(), w.row(1).conj(), w.row(2).conj()],
        None => [Vec3C::zero(); 3],
    };
    EigenSystem {
        eigenvalues: lambdas,
        right_vectors: right,
        reciprocal_vectors: reciprocal,
        degenerate: !(gap >= gap_threshold),
        degeneracy_gap: gap,
        gap_threshold,
    }
}

/// [`eigensystem`] with the threshold `DEFAULT_RELATIVE_GAP * max |lambda|`.
pub fn eigensystem_default(m: &Mat3C) -> EigenSystem {
    let radius = eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max);
    eigensystem(m, DEFAULT_RELATIVE_GAP * radius)
}

/// `exp(-m t) = sum_i exp(-lambda_i t) |lambda_i><lambda^i|`.
pub fn expm_spectral(es: &EigenSystem, t: f64) -> Result<Mat3C> {
    if es.degenerate {
        return Err(ZenoError::DegenerateSpectrum {
            gap: es.degeneracy_gap,
            threshold: es.gap_threshold,
        });
    }
    let mut out = Mat3C::zero();
    for i in 0..3 {
        out += es.projector(i) * (-es.eigenvalues[i] * t).exp();
    }
    Ok(out)
}

/// `exp(-m t)` by scaling and squaring of a truncated Taylor series. Valid
/// for any finite `m`, including defective ones.
pub fn expm_series(m: &Mat3C, t: f64) -> Mat3C {
    exp_taylor(&(*m * (-t)))
}
