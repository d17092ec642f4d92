//! Seeded test instances with known eigendecompositions.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::calib::{Calibration, Operator, Seminorm};
use crate::linalg::{c64, identity, CMatrix};

/// `T = V Λ V⁻¹` with the factors kept for oracle comparisons.
#[derive(Debug, Clone)]
pub struct DiagonalizableInstance {
    pub t: Operator,
    pub v: CMatrix,
    pub v_inv: CMatrix,
    pub eigenvalues: Vec<Complex64>,
}

impl DiagonalizableInstance {
    /// `V f(Λ) V⁻¹`.
    pub fn apply(&self, f: impl Fn(Complex64) -> Complex64) -> CMatrix {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&l| f(l)),
        ));
        &self.v * d * &self.v_inv
    }

    pub fn radius(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max)
    }

    pub fn min_gap(&self) -> f64 {
        let mut gap = f64::INFINITY;
        for (i, a) in self.eigenvalues.iter().enumerate() {
            for b in &self.eigenvalues[i + 1..] {
                gap = gap.min((a - b).norm());
            }
        }
        gap
    }
}

#[derive(Debug, Clone, Copy)]
pub struct InstanceOptions {
    /// Eigenvalues are drawn from the disk of this radius.
    pub spread: f64,
    /// Minimum pairwise eigenvalue distance.
    pub gap: f64,
    /// Size of the off-identity part of `V`; zero gives a unitary `V`.
    pub skew: f64,
}

impl Default for InstanceOptions {
    fn default() -> Self {
        Self { spread: 2.0, gap: 0.1, skew: 0.25 }
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    c64(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
}

fn draw_eigenvalues(rng: &mut ChaCha8Rng, n: usize, opts: InstanceOptions) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::with_capacity(n);
    while out.len() < n {
        let r = opts.spread * rng.random::<f64>().sqrt();
        let z = Complex64::from_polar(r, std::f64::consts::TAU * rng.random::<f64>());
        if out.iter().all(|w| (w - z).norm() >= opts.gap) {
            out.push(z);
        }
    }
    out
}

/// A random diagonalizable `n×n` operator.
pub fn random_diagonalizable(n: usize, seed: u64, opts: InstanceOptions) -> DiagonalizableInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eigenvalues = draw_eigenvalues(&mut rng, n, opts);
    let (v, v_inv) = if opts.skew == 0.0 {
        let g = CMatrix::from_fn(n, n, |_, _| gaussian(&mut rng));
        let q = g.qr().q();
        let qh = q.adjoint();
        (q, qh)
    } else {
        let scale = opts.skew / (n as f64).sqrt();
        let v = identity(n) + CMatrix::from_fn(n, n, |_, _| gaussian(&mut rng) * scale);
        let v_inv = v.clone().try_inverse().expect("near-identity matrix is invertible");
        (v, v_inv)
    };
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&eigenvalues));
    let t = Operator::new(&v * d * &v_inv).expect("finite entries");
    DiagonalizableInstance { t, v, v_inv, eigenvalues }
}

/// A random normal operator `QΛQᴴ`.
pub fn random_normal(n: usize, seed: u64, spread: f64) -> DiagonalizableInstance {
    random_diagonalizable(n, seed, InstanceOptions { spread, gap: 0.1, skew: 0.0 })
}

/// `members` weighted sups with weights in `[0.5, 2]`.
pub fn random_calibration(n: usize, members: usize, seed: u64) -> Calibration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xca1b);
    let seminorms = (0..members.max(1))
        .map(|_| Seminorm::weighted((0..n).map(|_| rng.random_range(0.5..2.0)).collect()).expect("positive weights"))
        .collect();
    Calibration::new(seminorms).expect("positive weights separate")
}
