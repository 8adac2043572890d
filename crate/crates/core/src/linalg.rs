//! Exact 2×2 complex matrix algebra.
//!
//! Everything in the two-level problem lives in a 2-dimensional Hilbert
//! space, so a fixed-size row-major matrix is all we need. The exponential
//! uses the closed form for 2×2 matrices: split `M = cI + N` with `N`
//! traceless, then `N² = q I` with `q = -det N` and
//!
//! ```text
//! exp(M) = e^c (cosh(√q) I + sinh(√q)/√q N)
//! ```
//!
//! Both `cosh(√q)` and `sinh(√q)/√q` are entire functions of `q`, so the
//! choice of square-root branch does not matter.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMatrix2(pub [[Complex64; 2]; 2]);

impl ComplexMatrix2 {
    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self([[a, b], [c, d]])
    }

    pub const fn zero() -> Self {
        Self([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub const fn identity() -> Self {
        Self([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn diag(a: Complex64, d: Complex64) -> Self {
        Self::new(a, ZERO, ZERO, d)
    }

    pub fn sigma_x() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    pub fn sigma_y() -> Self {
        Self::new(ZERO, -I, I, ZERO)
    }

    pub fn sigma_z() -> Self {
        Self::new(ONE, ZERO, ZERO, -ONE)
    }

    /// σ₊ = |a⟩⟨b| with basis order (a, b).
    pub fn sigma_plus() -> Self {
        Self::new(ZERO, ONE, ZERO, ZERO)
    }

    /// σ₋ = |b⟩⟨a|.
    pub fn sigma_minus() -> Self {
        Self::new(ZERO, ZERO, ONE, ZERO)
    }

    /// `v·σ` for a complex three-vector.
    pub fn from_pauli(v: [Complex64; 3]) -> Self {
        let [x, y, z] = v;
        Self::new(z, x - I * y, x + I * y, -z)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.0[r][c]
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn dagger(&self) -> Self {
        let m = &self.0;
        Self::new(
            m[0][0].conj(),
            m[1][0].conj(),
            m[0][1].conj(),
            m[1][1].conj(),
        )
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.0;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        *self * *other + *other * *self
    }

    /// Largest entry modulus.
    pub fn max_norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.is_finite())
    }

    /// Inverse via the adjugate; `None` for a singular matrix.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm() == 0.0 {
            return None;
        }
        let m = &self.0;
        let inv = d.inv();
        Some(Self::new(
            m[1][1] * inv,
            -m[0][1] * inv,
            -m[1][0] * inv,
            m[0][0] * inv,
        ))
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    /// The two eigenvalues, ordered by ascending real part.
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let half_tr = self.trace() * 0.5;
        let dev = (self.0[0][0] - self.0[1][1]) * 0.5;
        let disc = (dev * dev + self.0[0][1] * self.0[1][0]).sqrt();
        let (a, b) = (half_tr - disc, half_tr + disc);
        if a.re <= b.re {
            [a, b]
        } else {
            [b, a]
        }
    }
}

impl Add for ComplexMatrix2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (a, b) = (&self.0, &o.0);
        Self::new(
            a[0][0] + b[0][0],
            a[0][1] + b[0][1],
            a[1][0] + b[1][0],
            a[1][1] + b[1][1],
        )
    }
}

impl Sub for ComplexMatrix2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let (a, b) = (&self.0, &o.0);
        Self::new(
            a[0][0] - b[0][0],
            a[0][1] - b[0][1],
            a[1][0] - b[1][0],
            a[1][1] - b[1][1],
        )
    }
}

impl Neg for ComplexMatrix2 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_re(-1.0)
    }
}

impl Mul for ComplexMatrix2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (&self.0, &o.0);
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// Matrix exponential of a 2×2 complex matrix, closed form.
pub fn expm2(m: &ComplexMatrix2) -> Result<ComplexMatrix2> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let c = m.trace() * 0.5;
    let n = *m - ComplexMatrix2::identity().scale(c);
    let q = -n.det();
    let (ch, sh_over) = cosh_sinhc(q);
    let core = ComplexMatrix2::identity().scale(ch) + n.scale(sh_over);
    Ok(core.scale(c.exp()))
}

/// `(cosh √q, sinh √q / √q)` without branch or cancellation trouble near q = 0.
fn cosh_sinhc(q: Complex64) -> (Complex64, Complex64) {
    if q.norm() < 1e-3 {
        // Taylor in q; the next term is below 1e-21 here.
        let mut ch = ONE;
        let mut sh = ONE;
        let mut term_c = ONE;
        let mut term_s = ONE;
        for k in 1..8 {
            let k = k as f64;
            term_c = term_c * q / ((2.0 * k - 1.0) * (2.0 * k));
            term_s = term_s * q / ((2.0 * k) * (2.0 * k + 1.0));
            ch += term_c;
            sh += term_s;
        }
        (ch, sh)
    } else {
        let s = q.sqrt();
        (s.cosh(), s.sinh() / s)
    }
}
