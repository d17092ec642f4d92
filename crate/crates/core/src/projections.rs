//! Riesz projections onto spectral sets and resolvent power bounds.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::Serialize;

use crate::calib::{phat, mixed_seminorm_estimate, Calibration, Operator, Seminorm};
use crate::contour::{build_cauchy_contour_with, cluster_spectrum, Cluster, ContourOptions, Domain};
use crate::error::{Error, Result};
use crate::funcalc::{adaptive, FuncalcOptions, ResolventQuadrature};
use crate::linalg::{commutator, trace, CMatrix, ScaledPowers};
use crate::spectral::{eigenvalues, resolvent_direct, Spectrum};

/// A union of eigenvalue clusters, named by cluster index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpectralSet {
    pub clusters: BTreeSet<usize>,
}

impl SpectralSet {
    pub fn new(clusters: impl IntoIterator<Item = usize>) -> Self {
        Self { clusters: clusters.into_iter().collect() }
    }

    pub fn empty() -> Self {
        Self { clusters: BTreeSet::new() }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self { clusters: self.clusters.intersection(&other.clusters).copied().collect() }
    }

    pub fn union(&self, other: &Self) -> Self {
        Self { clusters: self.clusters.union(&other.clusters).copied().collect() }
    }

    pub fn complement(&self, count: usize) -> Self {
        Self { clusters: (0..count).filter(|c| !self.clusters.contains(c)).collect() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ProjectionOptions {
    /// Cluster separation defining the spectral sets.
    pub gap: f64,
    pub tol: f64,
    pub nodes: usize,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self { gap: 0.1, tol: 1e-10, nodes: 128 }
    }
}

/// `σ(T)` split into clusters at the configured gap.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralDecomposition {
    pub spectrum: Spectrum,
    pub clusters: Vec<Cluster>,
    pub gap: f64,
}

pub fn decompose(t: &Operator, gap: f64) -> Result<SpectralDecomposition> {
    let spectrum = eigenvalues(t)?;
    let scale = spectrum.radius.max(1.0);
    if !(gap > 1e-8 * scale) {
        return Err(Error::precondition(format!(
            "gap {gap:e} is below numerical resolution at spectral scale {scale}"
        )));
    }
    let clusters = cluster_spectrum(&spectrum, gap)?;
    Ok(SpectralDecomposition { spectrum, clusters, gap })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionReport {
    #[serde(skip)]
    pub projector: Operator,
    /// `‖T_H² − T_H‖_P`.
    pub idempotency_defect: f64,
    /// `‖T_H T − T T_H‖_P`.
    pub commutation_defect: f64,
    pub trace: Complex64,
    /// Algebraic multiplicity of `H`.
    pub multiplicity: usize,
    pub set: SpectralSet,
    pub nodes_per_circle: usize,
}

impl ProjectionReport {
    pub fn trace_defect(&self) -> f64 {
        (self.trace - Complex64::new(self.multiplicity as f64, 0.0)).norm()
    }
}

pub fn spectral_projection(p: &Calibration, t: &Operator, h: &SpectralSet, opts: ProjectionOptions) -> Result<ProjectionReport> {
    let dec = decompose(t, opts.gap)?;
    projection_from(p, t, &dec, h, opts)
}

pub fn projection_from(
    p: &Calibration,
    t: &Operator,
    dec: &SpectralDecomposition,
    h: &SpectralSet,
    opts: ProjectionOptions,
) -> Result<ProjectionReport> {
    if p.dim() != t.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), actual: t.dim() });
    }
    if let Some(&bad) = h.clusters.iter().find(|&&c| c >= dec.clusters.len()) {
        return Err(Error::invalid(format!("cluster {bad} does not exist ({} clusters)", dec.clusters.len())));
    }
    let n = t.dim();
    let inside: Vec<Complex64> = h.clusters.iter().flat_map(|&c| dec.clusters[c].points.iter().copied()).collect();
    let multiplicity = inside.len();
    let (value, nodes) = if inside.is_empty() {
        (CMatrix::zeros(n, n), 0)
    } else {
        let outside: Vec<Complex64> = (0..dec.clusters.len())
            .filter(|c| !h.clusters.contains(c))
            .flat_map(|c| dec.clusters[c].points.iter().copied())
            .collect();
        let domain = Domain::around(&dec.spectrum.eigenvalues, 2.0);
        let copts = ContourOptions { cluster_gap: Some(opts.gap), nodes: opts.nodes, ..Default::default() };
        let contour = build_cauchy_contour_with(&inside, &outside, &domain, copts)?;
        let mut quad = ResolventQuadrature::new(t, &contour)?;
        let one = |_: Complex64| Ok(Complex64::new(1.0, 0.0));
        let (value, _, _) = adaptive(
            p,
            &mut quad,
            FuncalcOptions::new(opts.tol),
            |q| q.mass(&one),
            |q| q.integrate(one),
        )?;
        (value, quad.nodes_per_circle())
    };
    let idempotency_defect = p.defect_norm(&(&value * &value - &value));
    let commutation_defect = p.defect_norm(&commutator(&value, t.matrix()));
    let report = ProjectionReport {
        trace: trace(&value),
        projector: Operator::new(value)?,
        idempotency_defect,
        commutation_defect,
        multiplicity,
        set: h.clone(),
        nodes_per_circle: nodes,
    };
    if report.idempotency_defect > opts.tol.max(1e-12) * 100.0 {
        return Err(Error::non_convergence(format!(
            "projector is not idempotent: defect {:.3e}",
            report.idempotency_defect
        )));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionAlgebraReport {
    /// `‖T_{H∩K} − T_H T_K‖_P`.
    pub intersection_defect: f64,
    /// `‖T_{H∪K} − T_H − T_K‖_P`, when `H ∩ K = ∅`.
    pub union_defect: Option<f64>,
}

pub fn projection_algebra_check(
    p: &Calibration,
    t: &Operator,
    h: &SpectralSet,
    k: &SpectralSet,
    opts: ProjectionOptions,
) -> Result<ProjectionAlgebraReport> {
    let dec = decompose(t, opts.gap)?;
    let th = projection_from(p, t, &dec, h, opts)?.projector;
    let tk = projection_from(p, t, &dec, k, opts)?.projector;
    let meet = projection_from(p, t, &dec, &h.intersection(k), opts)?.projector;
    let intersection_defect = p.defect_norm(&(meet.matrix() - th.matrix() * tk.matrix()));
    let union_defect = if h.intersection(k).clusters.is_empty() {
        let join = projection_from(p, t, &dec, &h.union(k), opts)?.projector;
        Some(p.defect_norm(&(join.matrix() - th.matrix() - tk.matrix())))
    } else {
        None
    };
    Ok(ProjectionAlgebraReport { intersection_defect, union_defect })
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerBoundReport {
    /// `sup_{λ, n} ε₀ⁿ p̂(R(λ,T)ⁿ)` per member.
    pub envelopes: Vec<f64>,
    /// Per member, `maxₗ ε₀ⁿ p̂(R(λ)ⁿ)` for `n = 1..=n_max`.
    pub sequences: Vec<Vec<f64>>,
    /// Index where the envelope is attained.
    pub burn_in: Vec<usize>,
    /// The second half of every sequence stays below its first half.
    pub bounded: bool,
}

fn member_phat(m: &Seminorm, a: &Operator, k: usize) -> Result<f64> {
    if m.is_derived() {
        return mixed_seminorm_estimate(m, m, a, 256, k as u64);
    }
    Ok(phat(m, a)?.finite().unwrap_or(f64::INFINITY))
}

pub fn verify_resolvent_power_bound(
    p: &Calibration,
    t: &Operator,
    samples: &[Complex64],
    eps0: f64,
    n_max: usize,
) -> Result<PowerBoundReport> {
    if !(eps0 > 0.0) || n_max == 0 {
        return Err(Error::invalid("ε₀ must be positive and n_max at least 1"));
    }
    let spectrum = eigenvalues(t)?;
    for &l in samples {
        let d = spectrum.distance_to(l);
        if !(d > eps0) {
            return Err(Error::precondition(format!("sample {l} is {d} from the spectrum, not beyond ε₀ = {eps0}")));
        }
    }
    let members = p.members();
    let mut sequences = vec![vec![0.0f64; n_max]; members.len()];
    for &l in samples {
        let r = resolvent_direct(t, l)?;
        for power in ScaledPowers::new(r.matrix()).take(n_max) {
            let op = Operator::wrap(power.matrix);
            for (k, m) in members.iter().enumerate() {
                let v = member_phat(m, &op, k)?;
                let logv = v.ln() + power.log_scale + power.n as f64 * eps0.ln();
                let slot = &mut sequences[k][power.n - 1];
                *slot = slot.max(logv.exp());
            }
        }
    }
    let mut envelopes = Vec::new();
    let mut burn_in = Vec::new();
    let mut bounded = true;
    for seq in &sequences {
        let (arg, max) = seq.iter().enumerate().fold((0, 0.0f64), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        envelopes.push(max);
        burn_in.push(arg + 1);
        let half = seq.len().div_ceil(2);
        let first = seq[..half].iter().copied().fold(0.0, f64::max);
        let second = seq[half..].iter().copied().fold(0.0, f64::max);
        bounded &= max.is_finite() && second <= first * (1.0 + 1e-9);
    }
    Ok(PowerBoundReport { envelopes, sequences, burn_in, bounded })
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundEntry {
    /// `‖R(λ,T)‖_P`.
    pub norm: f64,
    /// `1/dist(λ, σ(T))`.
    pub bound: f64,
    pub holds: bool,
}

pub fn resolvent_lower_bound_check(t: &Operator, lambda: Complex64, calibrations: &[Calibration]) -> Result<Vec<LowerBoundEntry>> {
    let d = eigenvalues(t)?.distance_to(lambda);
    let r = resolvent_direct(t, lambda)?;
    calibrations
        .iter()
        .map(|p| {
            if p.dim() != t.dim() {
                return Err(Error::DimensionMismatch { expected: t.dim(), actual: p.dim() });
            }
            if !p.is_universally_bounded(t)?.bounded {
                return Err(Error::precondition("T is not universally bounded for this calibration"));
            }
            let norm = p
                .operator_norm(&r)?
                .finite()
                .ok_or_else(|| Error::precondition("R(λ,T) is not universally bounded for this calibration"))?;
            let bound = 1.0 / d;
            Ok(LowerBoundEntry { norm, bound, holds: norm >= bound - 1e-12 })
        })
        .collect()
}
