//! Dense complex polynomials in ascending-coefficient form.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{identity, trace, CMatrix};

/// Horner evaluation of `Σ cₖ zᵏ`.
pub fn eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

pub fn derivative(coeffs: &[Complex64]) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

/// Drops trailing (highest-order) zero coefficients.
pub fn trim(coeffs: &[Complex64]) -> &[Complex64] {
    let mut end = coeffs.len();
    while end > 0 && coeffs[end - 1] == Complex64::new(0.0, 0.0) {
        end -= 1;
    }
    &coeffs[..end]
}

pub fn mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Horner evaluation with a matrix argument.
pub fn eval_matrix(coeffs: &[Complex64], t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let mut acc = CMatrix::zeros(n, n);
    for &c in coeffs.iter().rev() {
        acc = &acc * t;
        for i in 0..n {
            acc[(i, i)] += c;
        }
    }
    acc
}

/// Roots by the Aberth–Ehrlich simultaneous iteration followed by a Newton
/// polish. Leading zero coefficients are trimmed first.
pub fn roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let p = trim(coeffs);
    if p.is_empty() {
        return Err(Error::invalid("the zero polynomial has no isolated roots"));
    }
    // exact zero roots are deflated so that nilpotent inputs report exact zeros
    let zeros = p.iter().take_while(|c| **c == Complex64::new(0.0, 0.0)).count();
    if zeros > 0 {
        let mut rest = roots(&p[zeros..])?;
        rest.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), zeros));
        return Ok(rest);
    }
    let degree = p.len() - 1;
    if degree == 0 {
        return Ok(Vec::new());
    }
    let lead = p[degree];
    let monic: Vec<Complex64> = p.iter().map(|&c| c / lead).collect();
    if degree == 1 {
        return Ok(vec![-monic[0]]);
    }
    let dp = derivative(&monic);

    // Cauchy bound for the initial circle
    let bound = 1.0 + monic[..degree].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..degree)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / degree as f64 + 0.4;
            Complex64::from_polar(0.5 * bound, theta)
        })
        .collect();

    let scale = monic.iter().map(|c| c.norm()).sum::<f64>();
    let mut converged = false;
    for _ in 0..500 {
        let mut max_step: f64 = 0.0;
        for i in 0..degree {
            let pz = eval(&monic, z[i]);
            if pz.norm() <= 1e-300 {
                continue;
            }
            let ratio = pz / eval(&dp, z[i]);
            let repulsion: Complex64 = (0..degree)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = z[i] - z[j];
                    if d.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if max_step < 1e-15 * scale.max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        // Aberth stalls on clustered roots; accept if residuals are at roundoff
        let worst = z
            .iter()
            .map(|&r| eval(&monic, r).norm() / horner_abs(&monic, r.norm()).max(1e-300))
            .fold(0.0, f64::max);
        if worst > 1e-6 {
            return Err(Error::non_convergence("polynomial root iteration did not settle"));
        }
    }
    for r in z.iter_mut() {
        for _ in 0..3 {
            let d = eval(&dp, *r);
            if d.norm() == 0.0 {
                break;
            }
            let step = eval(&monic, *r) / d;
            if !(step.norm() < 1e-6 * (1.0 + r.norm())) {
                break;
            }
            *r -= step;
        }
    }
    Ok(z)
}

/// `Σ |cₖ| rᵏ`, the natural scale for the residual of a root of modulus `r`.
fn horner_abs(coeffs: &[Complex64], r: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
}

/// Characteristic polynomial `det(zI − T)` (ascending, monic) by the
/// Faddeev–LeVerrier recursion.
pub fn characteristic(t: &CMatrix) -> Vec<Complex64> {
    let n = t.nrows();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
    coeffs[n] = Complex64::new(1.0, 0.0);
    let mut m = CMatrix::zeros(n, n);
    let id = identity(n);
    for k in 1..=n {
        m = t * &m + &id * coeffs[n - k + 1];
        let tm = t * &m;
        coeffs[n - k] = -trace(&tm) / k as f64;
    }
    coeffs
}
