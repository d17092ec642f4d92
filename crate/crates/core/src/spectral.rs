//! Spectra, spectral radius estimates and resolvents.
//!
//! For a quotient-bounded `T` the radius of boundedness is
//! `r_P(T) = supₚ limₙ p̂(Tⁿ)^{1/n} = supₚ infₙ p̂(Tⁿ)^{1/n}`. The inf form is
//! an upper bound at every finite depth and is what we certify; the tail slope
//! of `log p̂(Tⁿ)` is reported as the limsup estimate, and the eigenvalue radius
//! is the finite-dimensional oracle.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::calib::{mixed_seminorm_estimate, phat, Calibration, Operator, Seminorm};
use crate::error::{Error, Result};
use crate::linalg::{c64, identity, inf_norm, max_abs, shifted, trace, CMatrix, ScaledPowers, ShiftedLu};
use crate::poly;

/// Residual contract for every reported eigenpair, relative to `max(1, ‖T‖∞)`.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-9;
const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 10_000;
const DERIVED_POWER_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    /// Characteristic polynomial for `n ≤ 4`, Schur iteration above.
    #[default]
    Auto,
    CharPoly,
    Schur,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    /// Eigenvalues with algebraic multiplicity, sorted by real then imaginary part.
    pub eigenvalues: Vec<Complex64>,
    /// `maxᵢ |λᵢ|`.
    pub radius: f64,
    /// `‖Tv − λv‖₂` for the best unit vector `v`, per eigenvalue.
    pub residuals: Vec<f64>,
    pub method: EigenMethod,
}

impl Spectrum {
    pub fn distance_to(&self, z: Complex64) -> f64 {
        self.eigenvalues.iter().map(|&l| (l - z).norm()).fold(f64::INFINITY, f64::min)
    }
}

pub fn eigenvalues(t: &Operator) -> Result<Spectrum> {
    eigenvalues_with(t, EigenMethod::Auto)
}

pub fn eigenvalues_with(t: &Operator, method: EigenMethod) -> Result<Spectrum> {
    match method {
        EigenMethod::Schur => schur_spectrum(t),
        EigenMethod::CharPoly => charpoly_spectrum(t),
        EigenMethod::Auto if t.dim() <= 4 => charpoly_spectrum(t).or_else(|_| schur_spectrum(t)),
        EigenMethod::Auto => schur_spectrum(t),
    }
}

fn schur_spectrum(t: &Operator) -> Result<Spectrum> {
    let schur = t
        .matrix()
        .clone()
        .try_schur(SCHUR_EPS, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::non_convergence("Schur iteration exceeded its budget"))?;
    let values = schur
        .eigenvalues()
        .ok_or_else(|| Error::non_convergence("Schur form is not triangular"))?;
    finish_spectrum(t, values.iter().copied().collect(), EigenMethod::Schur)
}

fn charpoly_spectrum(t: &Operator) -> Result<Spectrum> {
    if t.dim() > 4 {
        return Err(Error::invalid("characteristic-polynomial route is limited to n <= 4"));
    }
    let coeffs = poly::characteristic(t.matrix());
    let mut roots = poly::roots(&coeffs)?;
    for r in roots.iter_mut() {
        *r = newton_on_determinant(t.matrix(), *r, 4);
    }
    finish_spectrum(t, roots, EigenMethod::CharPoly)
}

/// Newton on `det(λI − T)`: the logarithmic derivative is `tr R(λ,T)`.
pub(crate) fn newton_on_determinant(t: &CMatrix, lambda: Complex64, steps: usize) -> Complex64 {
    polish_eigenvalue(t, lambda, steps, 1e-6)
}

/// Newton on the determinant with steps limited to `rel_cap·(1 + |λ|)`.
pub(crate) fn polish_eigenvalue(t: &CMatrix, mut lambda: Complex64, steps: usize, rel_cap: f64) -> Complex64 {
    for _ in 0..steps {
        let Ok(lu) = ShiftedLu::new(t, lambda) else { break };
        let tr = trace(&lu.inverse());
        if tr.norm() == 0.0 {
            break;
        }
        let step = tr.inv();
        // only accept contracting steps; multiple roots converge slowly
        if !(step.norm() < rel_cap * (1.0 + lambda.norm())) {
            break;
        }
        lambda -= step;
    }
    lambda
}

fn finish_spectrum(t: &Operator, mut values: Vec<Complex64>, method: EigenMethod) -> Result<Spectrum> {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let scale = inf_norm(t.matrix()).max(1.0);
    let residuals: Vec<f64> = values.iter().map(|&l| eigen_residual(t.matrix(), l)).collect();
    if let Some(bad) = residuals.iter().position(|&r| !(r <= EIGEN_RESIDUAL_TOL * scale)) {
        return Err(Error::non_convergence(format!(
            "eigenvalue {} has residual {:.3e}",
            values[bad], residuals[bad]
        )));
    }
    let radius = values.iter().map(|l| l.norm()).fold(0.0, f64::max);
    Ok(Spectrum { eigenvalues: values, radius, residuals, method })
}

/// `min_{‖v‖₂=1} ‖(T − λI)v‖₂`, attained at the last right singular vector.
pub fn eigen_residual(t: &CMatrix, lambda: Complex64) -> f64 {
    let m = shifted(t, lambda);
    m.singular_values().min()
}

/// A unit vector minimising `‖(T − λI)v‖₂`.
pub fn eigenvector(t: &CMatrix, lambda: Complex64) -> crate::linalg::CVector {
    let svd = shifted(t, lambda).svd(false, true);
    let (imin, _) = svd.singular_values.argmin();
    let vt = svd.v_t.expect("requested V^H");
    vt.row(imin).transpose().map(|z| z.conj())
}

/// Estimates of `r_P(T)` by formula.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralRadiusEstimate {
    /// `maxₚ min_{n ≤ n_max} p̂(Tⁿ)^{1/n}`; an upper bound for `r_P(T)`.
    pub inf_over_n: f64,
    /// Geometric-mean tail slope of `p̂(Tⁿ)` at depth `n_max`.
    pub limsup_sup: f64,
    /// `max |λ|` over the eigenvalue oracle.
    pub eigen_oracle: f64,
    pub n_max: usize,
    pub converged: bool,
    /// Seminorms whose `p̂` was sampled rather than computed in closed form.
    pub estimated: bool,
}

impl SpectralRadiusEstimate {
    /// The certified (upper) value.
    pub fn certified(&self) -> f64 {
        self.inf_over_n
    }

    pub fn by_formula(&self) -> BTreeMap<&'static str, f64> {
        BTreeMap::from([
            ("eigen_oracle", self.eigen_oracle),
            ("inf_over_n", self.inf_over_n),
            ("limsup_sup", self.limsup_sup),
        ])
    }
}

/// `ln p̂(Tⁿ)` for `n = 1..=n_max` (row per member); `-∞` marks a zero power.
pub fn power_log_norms(p: &Calibration, t: &Operator, n_max: usize) -> Result<Vec<Vec<f64>>> {
    if let Some(member) = p.first_unbounded_member(t)? {
        return Err(Error::NotQuotientBounded { member });
    }
    let mut logs = vec![Vec::with_capacity(n_max); p.members().len()];
    for power in ScaledPowers::new(t.matrix()).take(n_max) {
        let op = Operator::wrap(power.matrix);
        for (k, member) in p.members().iter().enumerate() {
            let v = member_phat(member, &op, k)?;
            logs[k].push(if v == 0.0 { f64::NEG_INFINITY } else { v.ln() + power.log_scale });
        }
    }
    Ok(logs)
}

fn member_phat(member: &Seminorm, op: &Operator, k: usize) -> Result<f64> {
    if member.is_derived() {
        return mixed_seminorm_estimate(member, member, op, DERIVED_POWER_SAMPLES, k as u64);
    }
    // quotient boundedness of T carries over to its powers
    Ok(phat(member, op)?.finite().unwrap_or(f64::INFINITY))
}

pub fn spectral_radius(p: &Calibration, t: &Operator, n_max: usize) -> Result<SpectralRadiusEstimate> {
    if n_max < 2 {
        return Err(Error::invalid("n_max must be at least 2"));
    }
    let logs = power_log_norms(p, t, n_max)?;
    let mut inf_over_n: f64 = 0.0;
    let mut limsup_sup: f64 = 0.0;
    for row in &logs {
        let inf_p = row
            .iter()
            .enumerate()
            .map(|(i, &l)| (l / (i + 1) as f64).exp())
            .fold(f64::INFINITY, f64::min);
        inf_over_n = inf_over_n.max(inf_p);
        limsup_sup = limsup_sup.max(tail_slope(row));
    }
    let eigen_oracle = eigenvalues(t)?.radius;
    let converged = inf_over_n == 0.0 || (inf_over_n - limsup_sup).abs() <= 1e-2 * inf_over_n;
    Ok(SpectralRadiusEstimate {
        inf_over_n,
        limsup_sup,
        eigen_oracle,
        n_max,
        converged,
        estimated: p.has_derived(),
    })
}

/// `(p̂(T^N)/p̂(T^{N−w}))^{1/w}` with `w = min(4, N−1)`.
fn tail_slope(logs: &[f64]) -> f64 {
    let n = logs.len();
    let last = logs[n - 1];
    if last == f64::NEG_INFINITY {
        return 0.0;
    }
    let w = 4.min(n - 1);
    ((last - logs[n - 1 - w]) / w as f64).exp()
}

/// `R(λ,T) = (λI − T)⁻¹` by LU with partial pivoting.
pub fn resolvent_direct(t: &Operator, lambda: Complex64) -> Result<Operator> {
    let lu = ShiftedLu::new(t.matrix(), lambda)?;
    let r = lu.inverse();
    let a = shifted(t.matrix(), lambda);
    let cond = inf_norm(&a) * inf_norm(&r);
    let residual = max_abs(&(&a * &r - identity(t.dim())));
    if !(residual <= 1e-10 * cond.max(1.0)) {
        return Err(Error::Singular(lambda));
    }
    Ok(Operator::wrap(r))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeumannResult {
    #[serde(skip)]
    pub operator: Operator,
    pub terms_used: usize,
    pub certified_radius: f64,
    /// `‖last term‖_P`.
    pub last_term: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct NeumannOptions {
    /// Depth for the certified radius.
    pub radius_depth: usize,
    pub max_terms: usize,
}

impl Default for NeumannOptions {
    fn default() -> Self {
        Self { radius_depth: 60, max_terms: 20_000 }
    }
}

/// `Σ Tⁿ/λⁿ⁺¹` summed until the term and its geometric tail are below `tol`.
pub fn neumann_resolvent(p: &Calibration, t: &Operator, lambda: Complex64, tol: f64) -> Result<NeumannResult> {
    neumann_resolvent_with(p, t, lambda, tol, NeumannOptions::default())
}

pub fn neumann_resolvent_with(
    p: &Calibration,
    t: &Operator,
    lambda: Complex64,
    tol: f64,
    opts: NeumannOptions,
) -> Result<NeumannResult> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let radius = spectral_radius(p, t, opts.radius_depth)?.certified();
    if lambda.norm() <= radius {
        return Err(Error::precondition(format!(
            "|lambda| = {} does not exceed the certified radius {radius}",
            lambda.norm()
        )));
    }
    let q = radius / lambda.norm();
    let inv = lambda.inv();
    let mut term = identity(t.dim()) * inv;
    let mut sum = CMatrix::zeros(t.dim(), t.dim());
    for n in 0..opts.max_terms {
        sum += &term;
        let norm = p.defect_norm(&term);
        let tail = norm * q / (1.0 - q);
        if norm < tol && tail < tol {
            return Ok(NeumannResult { operator: Operator::wrap(sum), terms_used: n + 1, certified_radius: radius, last_term: norm });
        }
        term = (t.matrix() * &term) * inv;
        if crate::linalg::is_exact_zero(&term) {
            return Ok(NeumannResult { operator: Operator::wrap(sum), terms_used: n + 1, certified_radius: radius, last_term: 0.0 });
        }
    }
    Err(Error::non_convergence(format!(
        "Neumann series did not reach {tol:e} within {} terms; the radius estimate {radius} is too small",
        opts.max_terms
    )))
}

/// First `n ≤ n_max` with `‖Tⁿ/λⁿ‖_P > bound`, i.e. evidence that the Neumann
/// series diverges at `λ`.
pub fn neumann_divergence(p: &Calibration, t: &Operator, lambda: Complex64, n_max: usize, bound: f64) -> Result<Option<usize>> {
    let logs = power_log_norms(p, t, n_max)?;
    let log_lambda = lambda.norm().ln();
    for n in 1..=n_max {
        let norm_log = logs.iter().map(|row| row[n - 1]).fold(f64::NEG_INFINITY, f64::max);
        if norm_log - n as f64 * log_lambda > bound.ln() {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolventIdentityReport {
    /// `‖R(λ) − R(μ) − (μ−λ)R(λ)R(μ)‖_max`.
    pub first_equation: f64,
    pub derivative_order: usize,
    /// Relative deviation of `(−1)ⁿ n! R^{n+1}` from a 4th-order central difference.
    pub derivative_deviation: f64,
    pub step: f64,
    pub probe_lambda: f64,
    /// `‖λR(λ) − I‖∞` at the probe.
    pub probe_deviation: f64,
    /// `3‖T‖∞/|λ|` at the probe.
    pub probe_bound: f64,
}

pub fn verify_resolvent_identities(t: &Operator, lambda: Complex64, mu: Complex64, n: usize) -> Result<ResolventIdentityReport> {
    if !(1..=4).contains(&n) {
        return Err(Error::invalid("derivative order must be between 1 and 4"));
    }
    let rl = resolvent_direct(t, lambda)?;
    let rm = resolvent_direct(t, mu)?;
    let first_equation = max_abs(&(rl.matrix() - rm.matrix() - (rl.matrix() * rm.matrix()) * (mu - lambda)));

    let spectrum = eigenvalues(t)?;
    let h = 1e-3 * spectrum.distance_to(lambda);
    // 4th-order central stencils: (offsets, weights, denominator factor)
    let (weights, denom): (&[f64], f64) = match n {
        1 => (&[1.0, -8.0, 0.0, 8.0, -1.0], 12.0),
        2 => (&[-1.0, 16.0, -30.0, 16.0, -1.0], 12.0),
        3 => (&[1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0], 8.0),
        _ => (&[-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0], 6.0),
    };
    let half = (weights.len() / 2) as f64;
    let mut fd = CMatrix::zeros(t.dim(), t.dim());
    for (k, &w) in weights.iter().enumerate() {
        if w != 0.0 {
            let r = resolvent_direct(t, lambda + c64((k as f64 - half) * h, 0.0))?;
            fd += r.into_matrix() * c64(w, 0.0);
        }
    }
    fd /= c64(denom * h.powi(n as i32), 0.0);
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let exact = crate::linalg::matrix_power(rl.matrix(), n as u32 + 1) * c64(sign * factorial, 0.0);
    let derivative_deviation = inf_norm(&(&fd - &exact)) / inf_norm(&exact);

    let norm_t = inf_norm(t.matrix());
    let probe_lambda = 1e6 * norm_t.max(1.0);
    let rp = resolvent_direct(t, c64(probe_lambda, 0.0))?;
    let probe_deviation = inf_norm(&(rp.matrix() * c64(probe_lambda, 0.0) - identity(t.dim())));
    Ok(ResolventIdentityReport {
        first_equation,
        derivative_order: n,
        derivative_deviation,
        step: h,
        probe_lambda,
        probe_deviation,
        probe_bound: 3.0 * norm_t / probe_lambda,
    })
}

/// Bottleneck distance between two multisets of equal size: the smallest
/// `d` admitting a perfect matching with every pair within `d`.
pub fn matching_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    if a.is_empty() {
        return 0.0;
    }
    let mut cand: Vec<f64> = a.iter().flat_map(|x| b.iter().map(move |y| (x - y).norm())).collect();
    cand.sort_by(f64::total_cmp);
    cand.dedup();
    let (mut lo, mut hi) = (0, cand.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching(a, b, cand[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    cand[lo]
}

fn perfect_matching(a: &[Complex64], b: &[Complex64], d: f64) -> bool {
    fn augment(i: usize, a: &[Complex64], b: &[Complex64], d: f64, seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for j in 0..b.len() {
            if !seen[j] && (a[i] - b[j]).norm() <= d {
                seen[j] = true;
                if owner[j].is_none_or(|k| augment(k, a, b, d, seen, owner)) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    let mut owner = vec![None; b.len()];
    (0..a.len()).all(|i| augment(i, a, b, d, &mut vec![false; b.len()], &mut owner))
}
