//! The holomorphic functional calculus `f(T) = (1/2πi)∮_Γ f(λ) R(λ,T) dλ`
//! by trapezoidal quadrature with cached resolvents.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::calib::{Calibration, Operator};
use crate::contour::{build_cauchy_contour_with, Contour, ContourOptions, Domain, Node};
use crate::error::{Error, Result};
use crate::holofun::HoloFun;
use crate::linalg::{c64, commutator, identity, is_exact_zero, CMatrix, ShiftedLu};
use crate::spectral::{eigenvalues, matching_distance, spectral_radius};

/// Per-circle node cap for adaptive doubling.
pub const MAX_NODES: usize = 4096;

/// Quadrature nodes on a contour together with `R(λⱼ,T)`.
pub struct ResolventQuadrature {
    dim: usize,
    t: CMatrix,
    contour: Contour,
    nodes: Vec<Node>,
    resolvents: Vec<CMatrix>,
}

fn resolvents_at(t: &CMatrix, nodes: &[Node]) -> Result<Vec<CMatrix>> {
    nodes
        .par_iter()
        .map(|n| ShiftedLu::new(t, n.lambda).map(|lu| lu.inverse()))
        .collect()
}

impl ResolventQuadrature {
    pub fn new(t: &Operator, contour: &Contour) -> Result<Self> {
        let nodes = contour.quadrature_nodes();
        let resolvents = resolvents_at(t.matrix(), &nodes).map_err(|e| match e {
            Error::Singular(l) => Error::InfeasibleContour(format!("resolvent is singular at node {l}")),
            e => e,
        })?;
        Ok(Self { dim: t.dim(), t: t.matrix().clone(), contour: contour.clone(), nodes, resolvents })
    }

    pub fn contour(&self) -> &Contour {
        &self.contour
    }

    pub fn nodes_per_circle(&self) -> usize {
        self.contour.circles().iter().map(|c| c.nodes).max().unwrap_or(0)
    }

    /// Doubles the node count on every circle, reusing existing resolvents.
    pub fn refine(&mut self) -> Result<()> {
        let fresh = self.contour.refinement_nodes();
        let resolvents = resolvents_at(&self.t, &fresh)?;
        for n in &mut self.nodes {
            n.weight *= 0.5;
        }
        // 2N-point weights: old and new nodes carry the same |w|
        self.nodes.extend(fresh.iter().copied());
        self.resolvents.extend(resolvents);
        self.contour = self.contour.doubled();
        Ok(())
    }

    fn sum(&self, terms: impl IndexedParallelIterator<Item = CMatrix>) -> CMatrix {
        let parts: Vec<CMatrix> = terms.collect();
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for p in parts {
            acc += p;
        }
        acc
    }

    /// `Σ wⱼ g(λⱼ) R(λⱼ)`.
    pub fn integrate(&self, g: impl Fn(Complex64) -> Result<Complex64> + Sync) -> Result<CMatrix> {
        let coeffs: Vec<Complex64> = self
            .nodes
            .par_iter()
            .map(|n| g(n.lambda).map(|v| v * n.weight))
            .collect::<Result<_>>()?;
        Ok(self.sum(self.resolvents.par_iter().zip(coeffs).map(|(r, c)| r * c)))
    }

    /// `Σ wⱼ G(λⱼ) R(λⱼ)` for a matrix-valued `G`.
    pub fn integrate_matrix(&self, g: impl Fn(Complex64) -> Result<CMatrix> + Sync) -> Result<CMatrix> {
        let left: Vec<CMatrix> = self.nodes.par_iter().map(|n| g(n.lambda).map(|m| m * n.weight)).collect::<Result<_>>()?;
        Ok(self.sum(left.into_par_iter().zip(self.resolvents.par_iter()).map(|(l, r)| l * r)))
    }

    /// `f⁽ᵏ⁾(T)/k!` for `k = 0..=order` from the Taylor jets of `f` at the nodes.
    pub fn integrate_taylor(&self, f: &HoloFun, order: usize) -> Result<Vec<CMatrix>> {
        let jets: Vec<Vec<Complex64>> = self.nodes.par_iter().map(|n| f.taylor(n.lambda, order)).collect::<Result<_>>()?;
        (0..=order)
            .into_par_iter()
            .map(|k| {
                let mut acc = CMatrix::zeros(self.dim, self.dim);
                for ((n, jet), r) in self.nodes.iter().zip(&jets).zip(&self.resolvents) {
                    acc += r * (jet[k] * n.weight);
                }
                Ok(acc)
            })
            .collect()
    }

    /// `Σ |wⱼ|·|g(λⱼ)|·‖R(λⱼ)‖∞`, the scale of the rounding floor.
    pub(crate) fn mass(&self, g: &(impl Fn(Complex64) -> Result<Complex64> + Sync)) -> f64 {
        self.nodes
            .iter()
            .zip(&self.resolvents)
            .map(|(n, r)| n.weight.norm() * g(n.lambda).map_or(0.0, |v| v.norm()) * crate::linalg::inf_norm(r))
            .sum()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FuncalcResult {
    #[serde(skip)]
    pub operator: Operator,
    pub nodes_per_circle: usize,
    /// `‖S_{2N} − S_N‖_P` at the accepted `N`.
    pub last_change: f64,
    /// Rounding floor below which changes are not resolvable.
    pub roundoff_floor: f64,
    /// `‖f(T)T − Tf(T)‖_P`.
    pub commutation_defect: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct FuncalcOptions {
    pub tol: f64,
    pub max_nodes: usize,
}

impl FuncalcOptions {
    pub fn new(tol: f64) -> Self {
        Self { tol, max_nodes: MAX_NODES }
    }
}

/// Doubles nodes until two successive sums differ by less than `tol` (or
/// the rounding floor) in `‖·‖_P`.
pub fn adaptive(
    p: &Calibration,
    quad: &mut ResolventQuadrature,
    opts: FuncalcOptions,
    floor_scale: impl Fn(&ResolventQuadrature) -> f64,
    eval: impl Fn(&ResolventQuadrature) -> Result<CMatrix>,
) -> Result<(CMatrix, f64, f64)> {
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let mut prev = eval(quad)?;
    loop {
        if quad.nodes_per_circle() * 2 > opts.max_nodes {
            return Err(Error::non_convergence(format!(
                "quadrature did not settle within {} nodes per circle",
                opts.max_nodes
            )));
        }
        quad.refine()?;
        let next = eval(quad)?;
        let change = p.defect_norm(&(&next - &prev));
        let floor = 64.0 * f64::EPSILON * floor_scale(quad);
        if change < opts.tol.max(floor) {
            return Ok((next, change, floor));
        }
        prev = next;
    }
}

fn check_encloses_spectrum(t: &Operator, contour: &Contour) -> Result<()> {
    for l in eigenvalues(t)?.eigenvalues {
        let w = contour.winding_number(l).map_err(|_| Error::InfeasibleContour(format!("eigenvalue {l} lies on the contour")))?;
        if w != 1 {
            return Err(Error::InfeasibleContour(format!("eigenvalue {l} has winding number {w}")));
        }
    }
    Ok(())
}

fn check_dims(p: &Calibration, t: &Operator) -> Result<()> {
    if p.dim() != t.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), actual: t.dim() });
    }
    Ok(())
}

pub fn apply_funcalc(p: &Calibration, t: &Operator, f: &HoloFun, contour: &Contour, tol: f64) -> Result<FuncalcResult> {
    apply_funcalc_with(p, t, f, contour, FuncalcOptions::new(tol))
}

pub fn apply_funcalc_with(p: &Calibration, t: &Operator, f: &HoloFun, contour: &Contour, opts: FuncalcOptions) -> Result<FuncalcResult> {
    check_dims(p, t)?;
    f.check_analytic(contour)?;
    check_encloses_spectrum(t, contour)?;
    let mut quad = ResolventQuadrature::new(t, contour)?;
    let g = |z: Complex64| f.eval(z);
    let (value, change, floor) = adaptive(p, &mut quad, opts, |q| q.mass(&g), |q| q.integrate(g))?;
    finish(p, t, value, &quad, change, floor)
}

fn finish(p: &Calibration, t: &Operator, value: CMatrix, quad: &ResolventQuadrature, change: f64, floor: f64) -> Result<FuncalcResult> {
    let commutation_defect = p.defect_norm(&commutator(&value, t.matrix()));
    Ok(FuncalcResult {
        operator: Operator::new(value)?,
        nodes_per_circle: quad.nodes_per_circle(),
        last_change: change,
        roundoff_floor: floor,
        commutation_defect,
    })
}

/// A contour about `σ(T)` avoiding the poles of `f` and inside its series disk.
pub fn default_contour(t: &Operator, f: &HoloFun, opts: ContourOptions) -> Result<Contour> {
    let spectrum = eigenvalues(t)?.eigenvalues;
    let poles = f.poles()?;
    let domain = match f.series_radius() {
        Some(r) => Domain::disk(c64(0.0, 0.0), r * (1.0 - 1e-6))?,
        None => Domain::around(&spectrum, 2.0),
    };
    build_cauchy_contour_with(&spectrum, &poles, &domain, opts)
}

/// `f(λ) = Σ gₖ(λ)·Cₖ`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorValuedFun {
    pub terms: Vec<(HoloFun, Operator)>,
}

impl OperatorValuedFun {
    pub fn new(terms: Vec<(HoloFun, Operator)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("operator-valued function needs at least one term"));
        }
        let n = terms[0].1.dim();
        if let Some((_, c)) = terms.iter().find(|(_, c)| c.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, actual: c.dim() });
        }
        Ok(Self { terms })
    }

    /// The constant function `λ ↦ S`.
    pub fn constant(s: Operator) -> Self {
        Self { terms: vec![(HoloFun::constant(c64(1.0, 0.0)), s)] }
    }

    pub fn eval(&self, z: Complex64) -> Result<CMatrix> {
        let n = self.terms[0].1.dim();
        let mut acc = CMatrix::zeros(n, n);
        for (g, c) in &self.terms {
            acc += c.matrix() * g.eval(z)?;
        }
        Ok(acc)
    }
}

pub fn apply_operator_valued(p: &Calibration, t: &Operator, f: &OperatorValuedFun, contour: &Contour, tol: f64) -> Result<FuncalcResult> {
    check_dims(p, t)?;
    if f.terms[0].1.dim() != t.dim() {
        return Err(Error::DimensionMismatch { expected: t.dim(), actual: f.terms[0].1.dim() });
    }
    for (g, _) in &f.terms {
        g.check_analytic(contour)?;
    }
    check_encloses_spectrum(t, contour)?;
    let mut quad = ResolventQuadrature::new(t, contour)?;
    let scale: f64 = f.terms.iter().map(|(_, c)| crate::linalg::inf_norm(c.matrix())).sum();
    let floor = |q: &ResolventQuadrature| {
        scale * q.mass(&|z| Ok(c64(f.terms.iter().map(|(g, _)| g.eval(z).map_or(0.0, |v| v.norm())).sum(), 0.0)))
    };
    let (value, change, fl) = adaptive(p, &mut quad, FuncalcOptions::new(tol), floor, |q| q.integrate_matrix(|z| f.eval(z)))?;
    finish(p, t, value, &quad, change, fl)
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesResult {
    #[serde(skip)]
    pub operator: Operator,
    pub terms_used: usize,
    /// Largest of the last term bounds `|αₖ|·‖Tᵏ‖_P` at truncation.
    pub tail_bound: f64,
    pub certified_radius: f64,
}

/// `e^{aλ}` coefficients `aᵏ/k!`.
pub fn exp_coefficients(a: Complex64) -> impl Fn(usize) -> Complex64 {
    move |k| a.powu(k as u32) / (1..=k).map(|j| j as f64).product::<f64>()
}

/// `Σ αₖ Tᵏ`, truncated once four consecutive term bounds fall below `tol/10`.
pub fn funcalc_power_series(
    p: &Calibration,
    t: &Operator,
    coeffs: &dyn Fn(usize) -> Complex64,
    radius: f64,
    tol: f64,
) -> Result<SeriesResult> {
    check_dims(p, t)?;
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let certified = spectral_radius(p, t, 60)?.certified();
    if !(certified < radius) {
        return Err(Error::precondition(format!(
            "certified radius {certified} is not below the series radius {radius}"
        )));
    }
    let n = t.dim();
    let mut power = identity(n);
    let mut sum = CMatrix::zeros(n, n);
    let mut recent = [f64::INFINITY; 4];
    for k in 0..2000 {
        let term = &power * coeffs(k);
        let bound = p.defect_norm(&term);
        sum += term;
        recent[k % 4] = bound;
        power = t.matrix() * &power;
        if is_exact_zero(&power) {
            return Ok(SeriesResult { operator: Operator::wrap(sum), terms_used: k + 1, tail_bound: 0.0, certified_radius: certified });
        }
        let worst = recent.iter().copied().fold(0.0, f64::max);
        if k >= 3 && worst < tol / 10.0 {
            return Ok(SeriesResult { operator: Operator::wrap(sum), terms_used: k + 1, tail_bound: worst, certified_radius: certified });
        }
    }
    Err(Error::non_convergence("power series did not settle within 2000 terms"))
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralMappingReport {
    /// `f(σ(T))`.
    pub mapped: Vec<Complex64>,
    /// `σ(f(T))`.
    pub image_spectrum: Vec<Complex64>,
    /// Bottleneck distance between the two multisets.
    pub max_distance: f64,
}

pub fn spectral_mapping_check(p: &Calibration, t: &Operator, f: &HoloFun, gap: f64) -> Result<SpectralMappingReport> {
    let opts = ContourOptions { cluster_gap: Some(gap), ..Default::default() };
    let contour = default_contour(t, f, opts)?;
    let ft = apply_funcalc(p, t, f, &contour, 1e-12)?;
    let mapped: Vec<Complex64> = eigenvalues(t)?.eigenvalues.iter().map(|&l| f.eval(l)).collect::<Result<_>>()?;
    let image_spectrum = eigenvalues(&ft.operator)?.eigenvalues;
    let max_distance = matching_distance(&mapped, &image_spectrum);
    Ok(SpectralMappingReport { mapped, image_spectrum, max_distance })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompositionReport {
    /// `‖(g∘f)(T) − g(f(T))‖_P`.
    pub deviation: f64,
    #[serde(skip)]
    pub composed: Operator,
    #[serde(skip)]
    pub nested: Operator,
}

pub fn composition_check(p: &Calibration, t: &Operator, f: &HoloFun, g: &HoloFun, tol: f64) -> Result<CompositionReport> {
    let gf = HoloFun::compose(g.clone(), f.clone());
    let outer_contour = default_contour(t, &gf, ContourOptions::default())?;
    let composed = apply_funcalc(p, t, &gf, &outer_contour, tol)?.operator;
    let ft = apply_funcalc(p, t, f, &default_contour(t, f, ContourOptions::default())?, tol)?.operator;
    let inner_contour = default_contour(&ft, g, ContourOptions::default())
        .map_err(|e| Error::InfeasibleContour(format!("no contour about f(σ(T)) for g: {e}")))?;
    let nested = apply_funcalc(p, &ft, g, &inner_contour, tol)?.operator;
    let deviation = p.defect_norm(&(composed.matrix() - nested.matrix()));
    Ok(CompositionReport { deviation, composed, nested })
}
