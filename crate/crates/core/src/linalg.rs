//! Dense complex matrix helpers shared by every module.
//!
//! Storage and LU factorisation come from `nalgebra`; this module adds the
//! norms, scaled powers and singularity policy the rest of the crate relies on.

use nalgebra::{DMatrix, DVector, LU};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative pivot threshold below which `λI − T` is treated as singular.
pub const TOL_SING: f64 = 1e-12;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Max absolute row sum.
pub fn inf_norm(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn vec_inf_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn is_exact_zero(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re == 0.0 && z.im == 0.0)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// `λI − T`.
pub fn shifted(t: &CMatrix, lambda: Complex64) -> CMatrix {
    let mut m = -t.clone();
    for i in 0..m.nrows() {
        m[(i, i)] += lambda;
    }
    m
}

pub fn trace(m: &CMatrix) -> Complex64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// LU factorisation of `λI − T` with the crate's relative singularity test.
pub struct ShiftedLu {
    lu: LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    pub lambda: Complex64,
    pub min_pivot: f64,
}

impl ShiftedLu {
    pub fn new(t: &CMatrix, lambda: Complex64) -> Result<Self> {
        let scale = lambda.norm().max(inf_norm(t)).max(f64::MIN_POSITIVE);
        let lu = shifted(t, lambda).lu();
        let u = lu.u();
        let min_pivot = (0..u.nrows()).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
        if !(min_pivot > TOL_SING * scale) {
            return Err(Error::Singular(lambda));
        }
        Ok(Self { lu, lambda, min_pivot })
    }

    pub fn inverse(&self) -> CMatrix {
        let n = self.lu.l().nrows();
        let mut rhs = identity(n);
        // pivots are bounded away from zero, so the solve cannot fail
        let ok = self.lu.solve_mut(&mut rhs);
        debug_assert!(ok);
        rhs
    }

    pub fn solve(&self, b: &CVector) -> CVector {
        let mut x = b.clone();
        let ok = self.lu.solve_mut(&mut x);
        debug_assert!(ok);
        x
    }
}

/// Powers `Tⁿ` kept as `matrix · exp(log_scale)` so that depth-200 sequences
/// of large or tiny operators stay representable.
pub struct ScaledPowers {
    base: CMatrix,
    current: CMatrix,
    log_scale: f64,
    count: usize,
    zero: bool,
}

/// One power: `Tⁿ = matrix · exp(log_scale)`.
pub struct ScaledPower {
    pub n: usize,
    pub matrix: CMatrix,
    pub log_scale: f64,
}

impl ScaledPowers {
    pub fn new(t: &CMatrix) -> Self {
        Self {
            base: t.clone(),
            current: identity(t.nrows()),
            log_scale: 0.0,
            count: 0,
            zero: false,
        }
    }
}

impl Iterator for ScaledPowers {
    type Item = ScaledPower;

    /// Yields `T¹, T², …` without end; once a power vanishes exactly every
    /// later one is the zero matrix.
    fn next(&mut self) -> Option<ScaledPower> {
        self.count += 1;
        if !self.zero {
            let next = &self.base * &self.current;
            let m = max_abs(&next);
            if m == 0.0 {
                self.zero = true;
                self.current = next;
                self.log_scale = 0.0;
            } else {
                self.current = next / Complex64::from(m);
                self.log_scale += m.ln();
            }
        }
        Some(ScaledPower { n: self.count, matrix: self.current.clone(), log_scale: self.log_scale })
    }
}

/// Plain `Tᵏ` by repeated squaring; exact zeros in block-triangular
/// structure are preserved.
pub fn matrix_power(t: &CMatrix, mut k: u32) -> CMatrix {
    let mut result = identity(t.nrows());
    let mut base = t.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}
