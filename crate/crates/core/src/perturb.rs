//! Commuting perturbations: `f(T+S) = Σₙ f⁽ⁿ⁾(T)Sⁿ/n!`.

use serde::Serialize;

use crate::calib::{Calibration, Operator};
use crate::contour::{build_cauchy_contour_with, ContourOptions, Domain};
use crate::error::{Error, Result};
use crate::funcalc::{apply_funcalc, ResolventQuadrature, MAX_NODES};
use crate::holofun::HoloFun;
use crate::linalg::{commutator, identity, inf_norm, is_exact_zero, CMatrix, ScaledPowers};
use crate::spectral::{eigenvalues, spectral_radius};

/// Relative commutator tolerance `‖TS − ST‖∞ ≤ tol·‖T‖∞‖S‖∞`.
pub const COMMUTATION_TOL: f64 = 1e-12;
const MAX_ORDER: usize = 256;

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationResult {
    #[serde(skip)]
    pub value: Operator,
    pub terms_used: usize,
    /// Geometric tail bound after the last term (zero for a finite series).
    pub tail_estimate: f64,
    /// `‖series − f(T+S)‖_P` against the contour integral for `T+S`.
    pub direct_deviation: f64,
    /// `‖f⁽ⁿ⁾(T)Sⁿ/n!‖_P` per term.
    pub term_norms: Vec<f64>,
    /// Certified `r_P(S)`.
    pub radius_s: f64,
    /// Lower bound for `dist(σ(T), ∁D)`.
    pub distance: f64,
}

/// Rejects `f` whose poles lie in `D` or whose series disk misses part of `D`.
pub fn check_analytic_on_domain(f: &HoloFun, d: &Domain) -> Result<()> {
    for pole in f.poles()? {
        if d.contains(pole) {
            return Err(Error::NotAnalytic(format!("pole {pole} lies in the domain")));
        }
    }
    if let Some(r) = f.series_radius() {
        if let Some(disk) = d.disks().iter().find(|disk| disk.center.norm() + disk.radius > r) {
            return Err(Error::NotAnalytic(format!(
                "domain disk about {} leaves the series radius {r}",
                disk.center
            )));
        }
    }
    Ok(())
}

pub fn check_commuting(t: &CMatrix, s: &CMatrix) -> Result<()> {
    let c = inf_norm(&commutator(t, s));
    let allowed = COMMUTATION_TOL * inf_norm(t) * inf_norm(s);
    if c > allowed {
        return Err(Error::NonCommuting { commutator: c, allowed });
    }
    Ok(())
}

pub fn perturbation_series(
    p: &Calibration,
    t: &Operator,
    s: &Operator,
    f: &HoloFun,
    d: &Domain,
    tol: f64,
) -> Result<PerturbationResult> {
    if p.dim() != t.dim() || s.dim() != t.dim() {
        return Err(Error::DimensionMismatch { expected: t.dim(), actual: if p.dim() != t.dim() { p.dim() } else { s.dim() } });
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    check_commuting(t.matrix(), s.matrix())?;
    check_analytic_on_domain(f, d)?;
    let spectrum = eigenvalues(t)?.eigenvalues;
    if let Some(l) = spectrum.iter().find(|&&l| !d.contains(l)) {
        return Err(Error::precondition(format!("eigenvalue {l} of T lies outside the domain")));
    }
    let distance = spectrum.iter().map(|&l| d.complement_distance(l)).fold(f64::INFINITY, f64::min);
    let radius_s = spectral_radius(p, s, 60)?.certified();
    if !(radius_s < distance) {
        return Err(Error::precondition(format!(
            "certified r_P(S) = {radius_s} is not below dist(σ(T), ∁D) ≥ {distance}"
        )));
    }
    let sum_op = Operator::new(t.matrix() + s.matrix())?;
    let shifted_spectrum = eigenvalues(&sum_op)?.eigenvalues;
    if let Some(l) = shifted_spectrum.iter().find(|&&l| !d.contains(l)) {
        return Err(Error::precondition(format!("eigenvalue {l} of T+S lies outside the domain")));
    }

    let poles = f.poles()?;
    let contour = build_cauchy_contour_with(&spectrum, &poles, d, ContourOptions::default())?;
    f.check_analytic(&contour)?;
    let mut quad = ResolventQuadrature::new(t, &contour)?;
    let q = 1.1 * radius_s / distance;

    let mut prev = sum_series(p, &quad, s, f, q, tol)?;
    let series = loop {
        if quad.nodes_per_circle() * 2 > MAX_NODES {
            return Err(Error::non_convergence("perturbation series quadrature did not settle"));
        }
        quad.refine()?;
        let next = sum_series(p, &quad, s, f, q, tol)?;
        let change = p.defect_norm(&(&next.value - &prev.value));
        if change < tol {
            break next;
        }
        prev = next;
    };

    let direct_contour = build_cauchy_contour_with(&shifted_spectrum, &poles, d, ContourOptions::default())?;
    let direct = apply_funcalc(p, &sum_op, f, &direct_contour, tol)?.operator;
    let direct_deviation = p.defect_norm(&(&series.value - direct.matrix()));
    Ok(PerturbationResult {
        value: Operator::new(series.value)?,
        terms_used: series.terms_used,
        tail_estimate: series.tail,
        direct_deviation,
        term_norms: series.norms,
        radius_s,
        distance,
    })
}

struct Partial {
    value: CMatrix,
    terms_used: usize,
    tail: f64,
    norms: Vec<f64>,
}

fn sum_series(p: &Calibration, quad: &ResolventQuadrature, s: &Operator, f: &HoloFun, q: f64, tol: f64) -> Result<Partial> {
    let n = s.dim();
    let mut order = 32;
    loop {
        let coeffs = quad.integrate_taylor(f, order)?;
        let mut value = CMatrix::zeros(n, n);
        let mut power = identity(n);
        let mut norms = Vec::new();
        for (k, c) in coeffs.iter().enumerate() {
            if is_exact_zero(&power) {
                return Ok(Partial { value, terms_used: k, tail: 0.0, norms });
            }
            let term = c * &power;
            let norm = p.defect_norm(&term);
            value += term;
            norms.push(norm);
            let ratio = if q < 1.0 { q } else { measured_ratio(&norms) };
            let tail = if ratio < 1.0 { norm * ratio / (1.0 - ratio) } else { f64::INFINITY };
            if norm < tol && tail < tol {
                return Ok(Partial { value, terms_used: k + 1, tail, norms });
            }
            power = &power * s.matrix();
        }
        if order >= MAX_ORDER {
            return Err(Error::non_convergence(format!("perturbation series needs more than {MAX_ORDER} terms")));
        }
        order *= 2;
    }
}

/// Largest ratio among the last three consecutive term norms.
fn measured_ratio(norms: &[f64]) -> f64 {
    if norms.len() < 4 {
        return f64::INFINITY;
    }
    norms[norms.len() - 4..]
        .windows(2)
        .map(|w| if w[0] == 0.0 { if w[1] == 0.0 { 0.0 } else { f64::INFINITY } } else { w[1] / w[0] })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct QuasinilpotentReport {
    pub quasinilpotent: bool,
    /// Inf-form radius at depth `n_max`.
    pub inf_form: f64,
    pub eigen_radius: f64,
    /// Smallest `n ≤ n_max` with `Tⁿ = 0` exactly.
    pub first_zero_power: Option<usize>,
    /// `σ(T) = {0}` at the eigen oracle's resolution.
    pub spectrum_is_zero: bool,
    /// Radius zero exactly when the spectrum is `{0}`.
    pub consistent: bool,
}

pub const QUASINILPOTENT_TOL: f64 = 1e-8;

pub fn is_quasinilpotent(p: &Calibration, t: &Operator, n_max: usize) -> Result<QuasinilpotentReport> {
    let est = spectral_radius(p, t, n_max)?;
    let first_zero_power = ScaledPowers::new(t.matrix())
        .take(n_max)
        .find(|pw| is_exact_zero(&pw.matrix))
        .map(|pw| pw.n);
    let radius_zero = est.inf_over_n < QUASINILPOTENT_TOL;
    let spectrum_is_zero = est.eigen_oracle < QUASINILPOTENT_TOL;
    Ok(QuasinilpotentReport {
        quasinilpotent: radius_zero && spectrum_is_zero,
        inf_form: est.inf_over_n,
        eigen_radius: est.eigen_oracle,
        first_zero_power,
        spectrum_is_zero,
        consistent: radius_zero == spectrum_is_zero,
    })
}
