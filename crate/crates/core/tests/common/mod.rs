#![allow(dead_code)]

use holocalc::calib::{Calibration, Operator, Seminorm};
use holocalc::linalg::{c64, CMatrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64) -> Complex64 {
    c64(re, 0.0)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(n: usize, seed: u64) -> CMatrix {
    let mut r = rng(seed);
    CMatrix::from_fn(n, n, |_, _| c64(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
}

/// Weights with the last coordinate in the kernel of the first member, and an
/// operator whose last column keeps that kernel invariant.
pub fn kernel_pair(n: usize, seed: u64) -> (Calibration, Operator) {
    let mut r = rng(seed);
    let mut w1: Vec<f64> = (0..n).map(|_| r.random_range(0.5..2.0)).collect();
    w1[n - 1] = 0.0;
    let w2: Vec<f64> = (0..n).map(|_| r.random_range(0.5..2.0)).collect();
    let p = Calibration::new(vec![Seminorm::weighted(w1).unwrap(), Seminorm::weighted(w2).unwrap()]).unwrap();
    let mut m = random_matrix(n, seed ^ 0x77);
    for i in 0..n - 1 {
        m[(i, n - 1)] = c(0.0);
    }
    (p, Operator::new(m).unwrap())
}
