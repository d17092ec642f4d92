//! Renorming constructions, the radius `r_lb`, spectrum classification and
//! the agreement of the spectra computed along different routes.
//!
//! Power-sup renorming replaces each weighted member `p` by
//! `p′(x) = max_{n≤N} p(Tⁿx)/μⁿ`. A block `n` with `p̂(Tⁿ)/μⁿ ≤ 1` never
//! exceeds `p(x)` and is dropped, so `p′` is stored as the rows of the
//! surviving blocks only. The depth `N` is accepted once the next block
//! satisfies `p̂(T^{N+1})/μ^{N+1} ≤ 1`; that single condition gives the exact
//! contraction `p′(Tx) ≤ μ·p′(x)`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::calib::{
    dominance_constant, mixed_seminorm, phat, sample_vectors, Calibration, DerivedOrigin, DerivedSeminorm,
    MixedSeminormValue, Operator, Seminorm,
};
use crate::error::{Error, Result};
use crate::linalg::{c64, commutator, identity, inf_norm, is_exact_zero, CMatrix, CVector, ScaledPowers, ShiftedLu};
use crate::poly;
use crate::spectral::{
    eigen_residual, eigenvalues, eigenvalues_with, matching_distance, polish_eigenvalue, resolvent_direct, EigenMethod,
    EIGEN_RESIDUAL_TOL,
};

/// Largest power-sup depth before giving up.
pub const N_SUP_CAP: usize = 400;
/// Depth cap for the double sup of a commuting pair.
pub const JOINT_N_SUP_CAP: usize = 200;
/// The head counts as stabilized after this many steps without growth.
pub const STABLE_STEPS: usize = 25;
const TAIL_RATIO: f64 = 1e-12;
/// Relative commutator tolerance for joint renorming; `B` is often a computed resolvent.
pub const JOINT_COMMUTATION_TOL: f64 = 1e-10;
const SAMPLE_SLACK: f64 = 1e-10;
/// Probe ladder for approximate-spectrum witnesses.
pub const PROBE_LADDER: [f64; 3] = [1e-2, 1e-4, 1e-6];
/// Spectra from different routes must agree to this.
pub const COINCIDENCE_TOL: f64 = 1e-9;

/// `m_α p ≤ p′_α ≤ M_α p`; for the bounded construction `upper` is the
/// constant against the dominating member `dominating` instead of `p_α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceConstants {
    pub member: usize,
    pub lower: f64,
    pub upper: f64,
    pub dominating: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Construction {
    /// `q′ = max{q, m_{p₀q}(T)·p₀}`.
    BoundedWitness {
        witness: usize,
        c0: f64,
        max_mixed: f64,
        /// `c₀·max_q m_{p₀q}(T)`.
        stated_bound: f64,
        /// `c₀·max{1, max_q m_{p₀q}(T)}`, valid without assumptions on the scale of `m`.
        bound: f64,
        /// Closed-form `‖T‖_{P′}`.
        norm: f64,
    },
    PowerSup { mu: f64, depth: usize },
    JointPowerSup { mu_a: f64, mu_b: f64, depth: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct RenormedCalibration {
    #[serde(skip)]
    pub base: Calibration,
    #[serde(skip)]
    pub calibration: Calibration,
    pub construction: Construction,
    pub constants: Vec<EquivalenceConstants>,
    /// Operators with their guaranteed `‖·‖_{P′}` bound.
    #[serde(skip)]
    pub bounded: Vec<(Operator, f64)>,
}

/// Worst observed ratios on a vector sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleCheck {
    pub samples: usize,
    /// `max (p(x) − p′(x))/p(x)`; nonpositive when `p ≤ p′`.
    pub lower_violation: f64,
    /// `max p′(x)/(M·p(x))` against the reported upper constants.
    pub upper_ratio: f64,
    /// `max p′(Sx)/(bound·p′(x))` per bounded operator.
    pub contraction: Vec<f64>,
    pub holds: bool,
}

impl RenormedCalibration {
    /// Checks `p ≤ p′ ≤ M·p` (power sups) and the operator bounds on seeded samples.
    pub fn sample_check(&self, samples: usize, seed: u64) -> SampleCheck {
        let n = self.base.dim();
        let xs = sample_vectors(n, samples, seed);
        let bases = self.base.members();
        let derived = self.calibration.members();
        let compare_upper = !matches!(self.construction, Construction::BoundedWitness { .. });
        let mut lower_violation = f64::NEG_INFINITY;
        let mut upper_ratio: f64 = 0.0;
        let mut contraction = vec![0.0f64; self.bounded.len()];
        for x in &xs {
            for (k, c) in self.constants.iter().enumerate() {
                let px = bases[c.member].eval_unchecked(x);
                let ppx = derived[k].eval_unchecked(x);
                if px > 0.0 {
                    lower_violation = lower_violation.max((px - ppx) / px);
                    if compare_upper {
                        upper_ratio = upper_ratio.max(ppx / (c.upper * px));
                    }
                }
            }
            for (j, (s, bound)) in self.bounded.iter().enumerate() {
                let sx = s.matrix() * x;
                for q in derived {
                    let qx = q.eval_unchecked(x);
                    let qsx = q.eval_unchecked(&sx);
                    if qx > 0.0 {
                        contraction[j] = contraction[j].max(qsx / (bound * qx));
                    } else if qsx > 0.0 {
                        contraction[j] = f64::INFINITY;
                    }
                }
            }
        }
        if !compare_upper {
            // q′ ≤ c_q·q₁ against the dominating member
            for x in &xs {
                for (k, c) in self.constants.iter().enumerate() {
                    let q1 = bases[c.dominating].eval_unchecked(x);
                    if q1 > 0.0 {
                        upper_ratio = upper_ratio.max(derived[k].eval_unchecked(x) / (c.upper * q1));
                    }
                }
            }
        }
        let holds = lower_violation <= SAMPLE_SLACK
            && upper_ratio <= 1.0 + SAMPLE_SLACK
            && contraction.iter().all(|&c| c <= 1.0 + SAMPLE_SLACK);
        SampleCheck { samples, lower_violation, upper_ratio, contraction, holds }
    }
}

fn weighted_members(p: &Calibration) -> Result<Vec<&[f64]>> {
    p.members()
        .iter()
        .map(|m| m.weights().ok_or_else(|| Error::invalid("renorming needs weighted-sup base members")))
        .collect()
}

fn check_dims(p: &Calibration, ops: &[&Operator]) -> Result<()> {
    for t in ops {
        if t.dim() != p.dim() {
            return Err(Error::DimensionMismatch { expected: p.dim(), actual: t.dim() });
        }
    }
    Ok(())
}

/// The locally-bounded renorming `q′ = max{q, m_{p₀q}(T)·p₀}`.
pub fn renorm_bounded(p: &Calibration, t: &Operator, p0: Option<usize>) -> Result<RenormedCalibration> {
    check_dims(p, &[t])?;
    let weights = weighted_members(p)?;
    if !p.is_directed() {
        return Err(Error::invalid("bounded renorming needs a directed (principal) calibration"));
    }
    let witness = match p0 {
        Some(k) if k >= weights.len() => return Err(Error::invalid(format!("member index {k} out of range"))),
        Some(k) => k,
        None => p
            .locally_bounded_witness(t)?
            .ok_or_else(|| Error::precondition("no member p0 has every m_{p0,q}(T) finite"))?,
    };
    let p0s = &p.members()[witness];
    let w0 = weights[witness];
    let mut mixed = Vec::with_capacity(weights.len());
    for (k, q) in p.members().iter().enumerate() {
        match mixed_seminorm(p0s, q, t)? {
            MixedSeminormValue::Finite(m) => mixed.push(m),
            MixedSeminormValue::Infinite => {
                return Err(Error::precondition(format!("m_{{p0,q}}(T) is infinite for p0 = {witness}, q = {k}")))
            }
        }
    }
    let c0 = phat(p0s, t)?.finite().unwrap_or(f64::INFINITY).max(1.0);
    let max_mixed = mixed.iter().copied().fold(0.0, f64::max);
    let mut members = Vec::with_capacity(weights.len());
    let mut constants = Vec::with_capacity(weights.len());
    for (k, (w, &m)) in weights.iter().zip(&mixed).enumerate() {
        let wq: Vec<f64> = w.iter().zip(w0).map(|(a, b)| a.max(m * b)).collect();
        let dominating = (0..weights.len())
            .find(|&j| (0..w.len()).all(|i| weights[j][i] >= w[i].max(w0[i])))
            .ok_or_else(|| Error::invalid("no member dominates both q and p0"))?;
        members.push(Seminorm::weighted(wq)?);
        constants.push(EquivalenceConstants { member: k, lower: 1.0, upper: m.max(1.0), dominating });
    }
    let calibration = Calibration::new(members)?;
    for (c, q) in constants.iter().zip(calibration.members()) {
        let r = dominance_constant(q, &p.members()[c.dominating])?.unwrap_or(f64::INFINITY);
        if r > c.upper * (1.0 + 1e-12) {
            return Err(Error::non_convergence(format!("q′ ≤ c_q·q₁ fails: {r} > {}", c.upper)));
        }
    }
    let norm = calibration.operator_norm(t)?.finite().unwrap_or(f64::INFINITY);
    let bound = c0 * max_mixed.max(1.0);
    Ok(RenormedCalibration {
        base: p.clone(),
        calibration,
        construction: Construction::BoundedWitness {
            witness,
            c0,
            max_mixed,
            stated_bound: c0 * max_mixed,
            bound,
            norm,
        },
        constants,
        bounded: vec![(t.clone(), bound)],
    })
}

/// Depth search state shared by the single and joint power sups.
struct HeadTracker {
    head: f64,
    unchanged: usize,
}

impl HeadTracker {
    fn new() -> Self {
        Self { head: 1.0, unchanged: 0 }
    }

    /// `boundary` is the largest block ratio one step beyond the current depth.
    fn accepts(&self, boundary: f64) -> bool {
        boundary <= 1.0 && (boundary <= TAIL_RATIO * self.head || self.unchanged >= STABLE_STEPS)
    }

    fn absorb(&mut self, ring_max: f64) {
        if ring_max > self.head {
            self.head = ring_max;
            self.unchanged = 0;
        } else {
            self.unchanged += 1;
        }
    }
}

fn block_ratio(member: &Seminorm, index: usize, m: &CMatrix) -> Result<f64> {
    if is_exact_zero(m) {
        return Ok(0.0);
    }
    phat(member, &Operator::wrap(m.clone()))?
        .finite()
        .ok_or(Error::NotQuotientBounded { member: index })
}

fn stack_rows(blocks: &[CMatrix], n: usize) -> CMatrix {
    let total: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut g = CMatrix::zeros(total, n);
    let mut at = 0;
    for b in blocks {
        g.rows_mut(at, b.nrows()).copy_from(b);
        at += b.nrows();
    }
    g
}

fn check_radius(t: &Operator, mu: f64, name: &str) -> Result<f64> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::invalid(format!("{name} must be positive and finite")));
    }
    let r = eigenvalues(t)?.radius;
    if !(mu > r) {
        return Err(Error::precondition(format!("{name} = {mu} does not exceed the spectral radius {r}")));
    }
    Ok(r)
}

/// `p′(x) = max_{n≤N} p(Tⁿx)/μⁿ` per member; `n_sup_cap` bounds the depth search.
pub fn renorm_spectral(p: &Calibration, t: &Operator, mu: f64, n_sup_cap: usize) -> Result<RenormedCalibration> {
    check_dims(p, &[t])?;
    weighted_members(p)?;
    check_radius(t, mu, "mu")?;
    let n = t.dim();
    let scaled = t.matrix() / c64(mu, 0.0);
    let mut members = Vec::new();
    let mut constants = Vec::new();
    let mut depth = 0;
    for (k, member) in p.members().iter().enumerate() {
        let g = member.functional_rows();
        let mut blocks = vec![g.clone()];
        let mut tracker = HeadTracker::new();
        let mut power = identity(n);
        let mut found = None;
        for step in 1..=n_sup_cap + 1 {
            power = &power * &scaled;
            let a = block_ratio(member, k, &power)?;
            if tracker.accepts(a) {
                found = Some(step - 1);
                break;
            }
            if a > 1.0 {
                blocks.push(&g * &power);
            }
            tracker.absorb(a);
        }
        let Some(member_depth) = found else {
            return Err(Error::precondition(format!(
                "head of p(Tⁿx)/μⁿ does not stabilize within {n_sup_cap} powers; μ = {mu} is too close to r_P(T)"
            )));
        };
        depth = depth.max(member_depth);
        let origin = DerivedOrigin::PowerSup { base: k, mu, depth: member_depth };
        members.push(Seminorm::Derived(DerivedSeminorm::new(stack_rows(&blocks, n), origin)?));
        constants.push(EquivalenceConstants { member: k, lower: 1.0, upper: tracker.head, dominating: k });
    }
    Ok(RenormedCalibration {
        base: p.clone(),
        calibration: Calibration::new(members)?,
        construction: Construction::PowerSup { mu, depth },
        constants,
        bounded: vec![(t.clone(), mu)],
    })
}

/// `p′(x) = max_{n,m≤N} p(AⁿBᵐx)/(μ_Aⁿμ_Bᵐ)` for commuting `A`, `B`.
/// With `n_sup = None` the depth is chosen like [`renorm_spectral`].
pub fn joint_renorm_commuting(
    p: &Calibration,
    a: &Operator,
    b: &Operator,
    mu_a: f64,
    mu_b: f64,
    n_sup: Option<usize>,
) -> Result<RenormedCalibration> {
    check_dims(p, &[a, b])?;
    weighted_members(p)?;
    let c = inf_norm(&commutator(a.matrix(), b.matrix()));
    let allowed = JOINT_COMMUTATION_TOL * inf_norm(a.matrix()) * inf_norm(b.matrix());
    if c > allowed {
        return Err(Error::NonCommuting { commutator: c, allowed });
    }
    check_radius(a, mu_a, "mu_a")?;
    check_radius(b, mu_b, "mu_b")?;
    let n = p.dim();
    let cap = n_sup.unwrap_or(JOINT_N_SUP_CAP);
    let pa = powers(&(a.matrix() / c64(mu_a, 0.0)), cap + 1);
    let pb = powers(&(b.matrix() / c64(mu_b, 0.0)), cap + 1);
    let mut members = Vec::new();
    let mut constants = Vec::new();
    let mut depth = 0;
    for (k, member) in p.members().iter().enumerate() {
        let g = member.functional_rows();
        let mut blocks = vec![g.clone()];
        let mut tracker = HeadTracker::new();
        let mut found = None;
        // ring K holds the blocks with max(n, m) = K
        for ring in 1..=cap + 1 {
            let mut ring_blocks = Vec::new();
            let mut boundary: f64 = 0.0;
            let mut corner: f64 = 0.0;
            let mut cells: Vec<(usize, usize)> = (0..ring).flat_map(|i| [(ring, i), (i, ring)]).collect();
            cells.push((ring, ring));
            for (nn, mm) in cells {
                let prod = &pa[nn] * &pb[mm];
                let ratio = block_ratio(member, k, &prod)?;
                if nn == mm {
                    corner = ratio;
                } else {
                    boundary = boundary.max(ratio);
                }
                if ratio > 1.0 {
                    ring_blocks.push(&g * &prod);
                }
            }
            let accept = match n_sup {
                Some(fixed) => ring == fixed + 1,
                None => tracker.accepts(boundary),
            };
            if accept {
                if boundary > 1.0 {
                    return Err(Error::precondition(format!(
                        "depth {} leaves boundary blocks with ratio {boundary} > 1",
                        ring - 1
                    )));
                }
                found = Some(ring - 1);
                break;
            }
            blocks.extend(ring_blocks);
            tracker.absorb(boundary.max(corner));
        }
        let Some(member_depth) = found else {
            return Err(Error::precondition(format!(
                "double power sup does not stabilize within {cap} powers; μ is too close to the radius"
            )));
        };
        depth = depth.max(member_depth);
        let origin = DerivedOrigin::JointPowerSup { base: k, mu_a, mu_b, depth: member_depth };
        members.push(Seminorm::Derived(DerivedSeminorm::new(stack_rows(&blocks, n), origin)?));
        constants.push(EquivalenceConstants { member: k, lower: 1.0, upper: tracker.head, dominating: k });
    }
    Ok(RenormedCalibration {
        base: p.clone(),
        calibration: Calibration::new(members)?,
        construction: Construction::JointPowerSup { mu_a, mu_b, depth },
        constants,
        bounded: vec![(a.clone(), mu_a), (b.clone(), mu_b)],
    })
}

fn powers(m: &CMatrix, count: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(count + 1);
    out.push(identity(m.nrows()));
    for k in 1..=count {
        let next = &out[k - 1] * m;
        out.push(next);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LbRadius {
    /// `min_{n≤n_max} ‖Tⁿ‖_P^{1/n}`.
    pub value: f64,
    pub attained_at: usize,
    /// `‖Tⁿ‖_P^{1/n}` per depth, stopping at the first vanishing power.
    pub sequence: Vec<f64>,
    /// Some member norms were sampled rather than closed form.
    pub estimated: bool,
}

pub fn lb_radius(p: &Calibration, t: &Operator, n_max: usize) -> Result<LbRadius> {
    check_dims(p, &[t])?;
    if n_max == 0 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    if !p.is_universally_bounded(t)?.bounded {
        return Err(Error::precondition("T is not universally bounded for this calibration; renorm first"));
    }
    let mut sequence = Vec::new();
    let mut estimated = false;
    for pw in ScaledPowers::new(t.matrix()).take(n_max) {
        if is_exact_zero(&pw.matrix) {
            sequence.push(0.0);
            break;
        }
        let b = p.is_universally_bounded(&Operator::wrap(pw.matrix))?;
        estimated |= b.estimated;
        let norm = b
            .bound
            .ok_or_else(|| Error::precondition(format!("‖T^{}‖_P is infinite", pw.n)))?;
        sequence.push(((norm.ln() + pw.log_scale) / pw.n as f64).exp());
    }
    let (i, &value) = sequence
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("n_max ≥ 1");
    Ok(LbRadius { value, attained_at: i + 1, sequence, estimated })
}

/// `(p, x, ratio)` with `ratio = p((λI − T)x)/p(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub member: usize,
    pub vector_re: Vec<f64>,
    pub vector_im: Vec<f64>,
    pub ratio: f64,
}

impl Witness {
    pub fn vector(&self) -> CVector {
        CVector::from_iterator(self.vector_re.len(), self.vector_re.iter().zip(&self.vector_im).map(|(&r, &i)| c64(r, i)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointEigenvalue {
    pub lambda: Complex64,
    pub algebraic: usize,
    pub geometric: usize,
    /// One per null-space direction.
    pub witnesses: Vec<Witness>,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessSource {
    Eigenvector,
    GridSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproximateEntry {
    pub lambda: Complex64,
    pub witness: Witness,
    pub source: WitnessSource,
}

/// A resolvent-set probe near the spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridProbe {
    pub lambda: Complex64,
    pub distance: f64,
    /// Smallest ratio found by the sampling minimizer.
    pub min_ratio: f64,
    pub member: usize,
    /// `1/maxₚ p̂(R(λ,T))`, a lower bound for every ratio at `λ`.
    pub certified_lower: Option<f64>,
    /// Ladder levels `c` with `min_ratio < c`.
    pub witnessed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumClassification {
    pub point: Vec<PointEigenvalue>,
    pub approximate: Vec<ApproximateEntry>,
    pub continuous: Vec<Complex64>,
    pub residual: Vec<Complex64>,
    pub probes: Vec<GridProbe>,
    pub note: String,
}

const FINITE_DIM_NOTE: &str = "finite dimension: λI − T is injective iff surjective, so every spectral point is an \
eigenvalue and the continuous and residual spectra are empty";
const PROBE_RINGS: [f64; 3] = [0.1, 0.2, 0.4];
const PROBE_ANGLES: usize = 12;
const PROBE_SAMPLES: usize = 24;

fn best_member(p: &Calibration, t: &CMatrix, lambda: Complex64, x: &CVector) -> Option<(usize, f64)> {
    let y = x * lambda - t * x;
    p.members()
        .iter()
        .enumerate()
        .filter_map(|(k, m)| {
            let px = m.eval_unchecked(x);
            (px > 0.0).then(|| (k, m.eval_unchecked(&y) / px))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

fn witness(member: usize, x: &CVector, ratio: f64) -> Witness {
    Witness {
        member,
        vector_re: x.iter().map(|z| z.re).collect(),
        vector_im: x.iter().map(|z| z.im).collect(),
        ratio,
    }
}

/// Orthonormal basis of the numerical null space of `λI − T`.
fn null_space(t: &CMatrix, lambda: Complex64, tol: f64) -> Vec<CVector> {
    let m = crate::linalg::shifted(t, lambda);
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested V^H");
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= tol)
        .map(|(i, _)| vt.row(i).transpose().map(|z| z.conj()))
        .collect()
}

pub fn classify_spectrum(p: &Calibration, t: &Operator, tol: f64) -> Result<SpectrumClassification> {
    check_dims(p, &[t])?;
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let spectrum = eigenvalues(t)?;
    let scale = inf_norm(t.matrix()).max(1.0);
    let gap = 1e-6 * scale.max(spectrum.radius);
    let groups = crate::contour::cluster_points(&spectrum.eigenvalues, gap)?;
    let rank_tol = tol.max(EIGEN_RESIDUAL_TOL) * scale;
    let mut point = Vec::new();
    let mut approximate = Vec::new();
    for g in &groups {
        let lambda = g.iter().map(|&i| spectrum.eigenvalues[i]).sum::<Complex64>() / c64(g.len() as f64, 0.0);
        let mut basis = null_space(t.matrix(), lambda, rank_tol);
        if basis.is_empty() {
            basis.push(crate::spectral::eigenvector(t.matrix(), lambda));
        }
        let mut witnesses = Vec::new();
        for x in &basis {
            if let Some((member, ratio)) = best_member(p, t.matrix(), lambda, x) {
                let w = witness(member, x, ratio);
                approximate.push(ApproximateEntry { lambda, witness: w.clone(), source: WitnessSource::Eigenvector });
                witnesses.push(w);
            }
        }
        point.push(PointEigenvalue {
            lambda,
            algebraic: g.len(),
            geometric: basis.len(),
            witnesses,
            residual: eigen_residual(t.matrix(), lambda),
        });
    }
    let centers: Vec<Complex64> = point.iter().map(|e| e.lambda).collect();
    let mut lambdas = Vec::new();
    for &c in &centers {
        for &r in &PROBE_RINGS {
            for j in 0..PROBE_ANGLES {
                let theta = std::f64::consts::TAU * (j as f64 + 0.5) / PROBE_ANGLES as f64;
                lambdas.push(c + Complex64::from_polar(r, theta));
            }
        }
    }
    let probes: Vec<GridProbe> = lambdas
        .par_iter()
        .enumerate()
        .map(|(i, &lambda)| probe(p, t.matrix(), lambda, spectrum.distance_to(lambda), i as u64))
        .collect::<Result<_>>()?;
    let bottom = PROBE_LADDER[PROBE_LADDER.len() - 1];
    for pr in &probes {
        if pr.min_ratio < bottom {
            // recompute the minimizing vector for the report
            if let Some((x, member, ratio)) = minimize_ratio(p, t.matrix(), pr.lambda, 0)? {
                approximate.push(ApproximateEntry {
                    lambda: pr.lambda,
                    witness: witness(member, &x, ratio),
                    source: WitnessSource::GridSearch,
                });
            }
        }
    }
    Ok(SpectrumClassification {
        point,
        approximate,
        continuous: Vec::new(),
        residual: Vec::new(),
        probes,
        note: FINITE_DIM_NOTE.to_string(),
    })
}

fn probe(p: &Calibration, t: &CMatrix, lambda: Complex64, distance: f64, seed: u64) -> Result<GridProbe> {
    let lu = match ShiftedLu::new(t, lambda) {
        Ok(lu) => lu,
        Err(_) => {
            return Ok(GridProbe {
                lambda,
                distance,
                min_ratio: 0.0,
                member: 0,
                certified_lower: None,
                witnessed: PROBE_LADDER.to_vec(),
            })
        }
    };
    let r = Operator::wrap(lu.inverse());
    let certified_lower = if p.has_derived() {
        None
    } else {
        p.operator_norm(&r)?.finite().map(|n| 1.0 / n)
    };
    let (min_ratio, member) = match minimize_ratio(p, t, lambda, seed)? {
        Some((_, m, ratio)) => (ratio, m),
        None => (f64::INFINITY, 0),
    };
    let witnessed = PROBE_LADDER.iter().copied().filter(|&c| min_ratio < c).collect();
    Ok(GridProbe { lambda, distance, min_ratio, member, certified_lower, witnessed })
}

/// Sampling minimizer of `p((λI − T)x)/p(x)` over coordinate vectors, random
/// vectors, resolvent images and a few inverse-iteration steps.
fn minimize_ratio(p: &Calibration, t: &CMatrix, lambda: Complex64, seed: u64) -> Result<Option<(CVector, usize, f64)>> {
    let n = t.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut starts: Vec<CVector> = (0..n)
        .map(|j| {
            let mut e = CVector::zeros(n);
            e[j] = c64(1.0, 0.0);
            e
        })
        .collect();
    for _ in 0..PROBE_SAMPLES {
        starts.push(CVector::from_fn(n, |_, _| {
            c64(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        }));
    }
    let lu = ShiftedLu::new(t, lambda).ok();
    let mut best: Option<(CVector, usize, f64)> = None;
    let mut consider = |x: &CVector| {
        if let Some((m, r)) = best_member(p, t, lambda, x) {
            if best.as_ref().is_none_or(|b| r < b.2) {
                best = Some((x.clone(), m, r));
            }
        }
    };
    for s in &starts {
        consider(s);
        if let Some(lu) = &lu {
            let mut x = s.clone();
            for _ in 0..3 {
                x = lu.solve(&x);
                let m = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if !(m > 0.0 && m.is_finite()) {
                    break;
                }
                x /= c64(m, 0.0);
                consider(&x);
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionSample {
    pub lambda: Complex64,
    pub witnessed: bool,
    pub depth: Option<usize>,
    pub mu_t: f64,
    pub mu_r: f64,
    /// Sampled `‖R(λ,T)‖_{P′}` for the joint calibration.
    pub resolvent_norm: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionReport {
    pub samples: Vec<IntersectionSample>,
    pub all_witnessed: bool,
}

/// A comfortable bound above the spectral radius.
pub fn comfortable_mu(t: &Operator) -> Result<f64> {
    let r = eigenvalues(t)?.radius;
    let mu = 1.5 * r + 0.05 * inf_norm(t.matrix());
    Ok(if mu > 0.0 { mu } else { 1.0 })
}

pub fn spectrum_intersection_check(p: &Calibration, t: &Operator, lambdas: &[Complex64]) -> Result<IntersectionReport> {
    check_dims(p, &[t])?;
    let scale = inf_norm(t.matrix()).max(1.0);
    for &l in lambdas {
        if eigen_residual(t.matrix(), l) <= EIGEN_RESIDUAL_TOL * scale {
            return Err(Error::precondition(format!("λ = {l} lies in the spectrum")));
        }
    }
    let mu_t = comfortable_mu(t)?;
    let samples: Vec<IntersectionSample> = lambdas
        .par_iter()
        .map(|&lambda| {
            let mut s = IntersectionSample {
                lambda,
                witnessed: false,
                depth: None,
                mu_t,
                mu_r: f64::NAN,
                resolvent_norm: None,
                error: None,
            };
            let run = || -> Result<(RenormedCalibration, f64, f64)> {
                let r = resolvent_direct(t, lambda)?;
                let mu_r = comfortable_mu(&r)?;
                let joint = joint_renorm_commuting(p, t, &r, mu_t, mu_r, None)?;
                let norm = joint.calibration.operator_norm(&r)?.finite().unwrap_or(f64::INFINITY);
                Ok((joint, mu_r, norm))
            };
            match run() {
                Ok((joint, mu_r, norm)) => {
                    s.mu_r = mu_r;
                    s.depth = match joint.construction {
                        Construction::JointPowerSup { depth, .. } => Some(depth),
                        _ => None,
                    };
                    s.resolvent_norm = Some(norm);
                    s.witnessed = norm.is_finite() && norm <= mu_r * (1.0 + SAMPLE_SLACK);
                }
                Err(e) => s.error = Some(e.to_string()),
            }
            s
        })
        .collect();
    let all_witnessed = samples.iter().all(|s| s.witnessed);
    Ok(IntersectionReport { samples, all_witnessed })
}

/// Spectra of `T` from three independent routes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoincidenceReport {
    /// Schur eigenvalues.
    pub oracle: Vec<Complex64>,
    /// Roots of `det(λI − T)` where `λI − T` fails to be invertible in `Q_P`.
    pub qp_invertibility: Vec<Complex64>,
    /// Power sums of the spectrum from a contour in the resolvent set of `B_{P′}`.
    pub renormed: Vec<Complex64>,
    pub qp_distance: f64,
    pub renormed_distance: f64,
    pub mu: f64,
    pub contour_radius: f64,
    pub agree: bool,
}

const POLISH_STEPS: usize = 8;
const POLISH_CAP: f64 = 1e-3;
const POWER_SUM_NODES: usize = 256;

pub fn spectrum_coincidence(p: &Calibration, t: &Operator) -> Result<CoincidenceReport> {
    check_dims(p, &[t])?;
    let n = t.dim();
    let scale = inf_norm(t.matrix()).max(1.0);
    let oracle = eigenvalues_with(t, EigenMethod::Schur)?.eigenvalues;

    let mut qp = poly::roots(&poly::characteristic(t.matrix()))?;
    for l in qp.iter_mut() {
        *l = polish_eigenvalue(t.matrix(), *l, POLISH_STEPS, POLISH_CAP);
    }
    for &l in &qp {
        if eigen_residual(t.matrix(), l) > EIGEN_RESIDUAL_TOL * scale {
            return Err(Error::non_convergence(format!("λI − T is invertible at the root {l}")));
        }
    }

    let radius = oracle.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let mu = if radius > 0.0 || inf_norm(t.matrix()) > 0.0 {
        1.05 * radius + 1e-3 * inf_norm(t.matrix())
    } else {
        1.0
    };
    renorm_spectral(p, t, mu, N_SUP_CAP)?;
    let contour_radius = 1.5 * mu;
    let renormed = power_sum_roots(t, contour_radius)?;

    let qp_distance = matching_distance(&oracle, &qp);
    let renormed_distance = matching_distance(&oracle, &renormed);
    let agree = qp.len() == n && qp_distance <= COINCIDENCE_TOL && renormed_distance <= COINCIDENCE_TOL;
    Ok(CoincidenceReport {
        oracle,
        qp_invertibility: qp,
        renormed,
        qp_distance,
        renormed_distance,
        mu,
        contour_radius,
        agree,
    })
}

/// Eigenvalues from `sₖ = (1/2πi)∮ λᵏ tr R(λ,T) dλ` on `|λ| = radius`, Newton's
/// identities, and a polish on the determinant.
fn power_sum_roots(t: &Operator, radius: f64) -> Result<Vec<Complex64>> {
    let n = t.dim();
    let nodes = POWER_SUM_NODES.max(8 * n);
    let traces: Vec<(Complex64, Complex64)> = (0..nodes)
        .into_par_iter()
        .map(|j| {
            let z = Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / nodes as f64);
            let lu = ShiftedLu::new(t.matrix(), z * radius)?;
            Ok((z, crate::linalg::trace(&lu.inverse())))
        })
        .collect::<Result<_>>()?;
    // normalized sums σₖ = sₖ/radiusᵏ = mean of zᵏ·λ·tr R(λ,T) with λ = radius·z
    let mut sigma = vec![c64(0.0, 0.0); n + 1];
    for (z, tr) in &traces {
        let mut zk = *z * *z * radius;
        for s in sigma.iter_mut().skip(1) {
            *s += zk * tr;
            zk *= z;
        }
    }
    for s in sigma.iter_mut() {
        *s /= nodes as f64;
    }
    let mut e = vec![c64(1.0, 0.0); n + 1];
    for k in 1..=n {
        let mut acc = c64(0.0, 0.0);
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += e[k - i] * sigma[i] * sign;
        }
        e[k] = acc / k as f64;
    }
    let mut coeffs = vec![c64(0.0, 0.0); n + 1];
    for k in 0..=n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[n - k] = e[k] * sign;
    }
    let mut roots = poly::roots(&coeffs)?;
    for r in roots.iter_mut() {
        *r = polish_eigenvalue(t.matrix(), *r * radius, POLISH_STEPS, POLISH_CAP);
    }
    Ok(roots)
}
