//! Seminorms, calibrations and the boundedness taxonomy of operators.
//!
//! A calibration is a finite, separating family of seminorms on `ℂⁿ`. The
//! primitive seminorm is the weighted sup `p(x) = maxᵢ wᵢ|xᵢ|` with `wᵢ ≥ 0`;
//! zero weights give genuine kernels, so quotient-bounded and universally
//! bounded operators are different classes. Renorming produces *derived*
//! seminorms `p′(x) = max_r |g_r·x|`, stored as the stacked functional rows
//! `g_r`.
//!
//! The mixed seminorm `m_pq(T) = sup_{p(x)≠0} q(Tx)/p(x)` has a closed form
//! whenever the source `p` is a weighted sup:
//!
//! * `+∞` if some target row touches a coordinate in `ker p`;
//! * otherwise `max_r Σ_{j: w_j>0} |(G_q T)_{rj}| / w_j`.
//!
//! When the source is derived only the sampling lower bound
//! [`mixed_seminorm_estimate`] is available.

use std::fmt;
use std::ops::Deref;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, CMatrix, CVector};

/// Default sample budget for seminorms without a closed form.
pub const DEFAULT_ESTIMATE_SAMPLES: usize = 2048;
/// Norms of derived families above this are reported as unbounded.
pub const DERIVED_NORM_CAP: f64 = 1e12;

/// A square complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator(CMatrix);

impl Operator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), actual: matrix.ncols() });
        }
        if matrix.nrows() == 0 {
            return Err(Error::invalid("operator dimension must be at least 1"));
        }
        if !all_finite(&matrix) {
            return Err(Error::invalid("operator has non-finite entries"));
        }
        Ok(Self(matrix))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("rows must form a square matrix"));
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j], 0.0)))
    }

    pub fn diagonal(values: &[Complex64]) -> Result<Self> {
        Self::new(CMatrix::from_diagonal(&CVector::from_column_slice(values)))
    }

    pub fn real_diagonal(values: &[f64]) -> Result<Self> {
        let v: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::diagonal(&v)
    }

    /// `λI + N` with ones on the superdiagonal.
    pub fn jordan(lambda: Complex64, size: usize) -> Result<Self> {
        let mut m = CMatrix::zeros(size, size);
        for i in 0..size {
            m[(i, i)] = lambda;
            if i + 1 < size {
                m[(i, i + 1)] = Complex64::new(1.0, 0.0);
            }
        }
        Self::new(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(CMatrix::identity(n, n))
    }

    pub fn zero(n: usize) -> Self {
        Self(CMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// Wraps results of internal arithmetic that are finite by construction.
    pub(crate) fn wrap(matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), matrix.ncols());
        Self(matrix)
    }
}

impl Deref for Operator {
    type Target = CMatrix;

    fn deref(&self) -> &CMatrix {
        &self.0
    }
}

/// `m_pq(T)`: a nonnegative real or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MixedSeminormValue {
    Finite(f64),
    Infinite,
}

impl MixedSeminormValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            Self::Finite(v) => Some(v),
            Self::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Self::Finite(_))
    }

    pub fn max(self, other: Self) -> Self {
        match (self, other) {
            (Self::Finite(a), Self::Finite(b)) => Self::Finite(a.max(b)),
            _ => Self::Infinite,
        }
    }
}

impl fmt::Display for MixedSeminormValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(v) => write!(f, "{v}"),
            Self::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for MixedSeminormValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(v) => s.serialize_f64(*v),
            Self::Infinite => s.serialize_str("inf"),
        }
    }
}

/// How a derived seminorm was obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "construction", rename_all = "snake_case")]
pub enum DerivedOrigin {
    /// `max{q, m·p₀}` from a locally bounded witness.
    BoundedWitness { base: usize, witness: usize, factor: f64 },
    /// `max_{n≤N} p(Tⁿx)/μⁿ`.
    PowerSup { base: usize, mu: f64, depth: usize },
    /// `max_{n,m≤N} p(AⁿBᵐx)/(μ_Aⁿ μ_Bᵐ)`.
    JointPowerSup { base: usize, mu_a: f64, mu_b: f64, depth: usize },
    /// Pointwise max of other seminorms.
    PointwiseMax,
}

/// `p(x) = max_r |g_r · x|` over the rows `g_r` of `rows`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedSeminorm {
    rows: CMatrix,
    pub origin: DerivedOrigin,
}

impl DerivedSeminorm {
    pub fn new(rows: CMatrix, origin: DerivedOrigin) -> Result<Self> {
        if !all_finite(&rows) {
            return Err(Error::invalid("derived seminorm has non-finite functionals"));
        }
        Ok(Self { rows, origin })
    }

    pub fn rows(&self) -> &CMatrix {
        &self.rows
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Seminorm {
    WeightedSup { weights: Vec<f64> },
    Derived(DerivedSeminorm),
}

impl Seminorm {
    pub fn weighted(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("weight vector is empty"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        Ok(Self::WeightedSup { weights })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::WeightedSup { weights } => weights.len(),
            Self::Derived(d) => d.rows.ncols(),
        }
    }

    pub fn weights(&self) -> Option<&[f64]> {
        match self {
            Self::WeightedSup { weights } => Some(weights),
            Self::Derived(_) => None,
        }
    }

    pub fn is_derived(&self) -> bool {
        matches!(self, Self::Derived(_))
    }

    /// The functionals whose max-modulus is this seminorm (zero-weight rows omitted).
    pub fn functional_rows(&self) -> CMatrix {
        match self {
            Self::WeightedSup { weights } => {
                let active: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
                let mut g = CMatrix::zeros(active.len(), weights.len());
                for (r, &i) in active.iter().enumerate() {
                    g[(r, i)] = Complex64::new(weights[i], 0.0);
                }
                g
            }
            Self::Derived(d) => d.rows.clone(),
        }
    }

    pub fn eval(&self, x: &CVector) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &CVector) -> f64 {
        match self {
            Self::WeightedSup { weights } => weights
                .iter()
                .zip(x.iter())
                .map(|(w, z)| if *w == 0.0 { 0.0 } else { w * z.norm() })
                .fold(0.0, f64::max),
            Self::Derived(d) => (&d.rows * x).iter().map(|z| z.norm()).fold(0.0, f64::max),
        }
    }

    /// Pointwise max of two seminorms.
    pub fn pointwise_max(&self, other: &Seminorm) -> Result<Seminorm> {
        check_dim(self.dim(), other.dim())?;
        match (self, other) {
            (Self::WeightedSup { weights: a }, Self::WeightedSup { weights: b }) => Ok(Self::WeightedSup {
                weights: a.iter().zip(b).map(|(x, y)| x.max(*y)).collect(),
            }),
            _ => {
                let (ga, gb) = (self.functional_rows(), other.functional_rows());
                let mut g = CMatrix::zeros(ga.nrows() + gb.nrows(), self.dim());
                g.rows_mut(0, ga.nrows()).copy_from(&ga);
                g.rows_mut(ga.nrows(), gb.nrows()).copy_from(&gb);
                Ok(Self::Derived(DerivedSeminorm::new(g, DerivedOrigin::PointwiseMax)?))
            }
        }
    }
}

fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Realises `p(x) = ‖x‖` for the functional form.
pub fn seminorm_eval(p: &Seminorm, x: &CVector) -> Result<f64> {
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::invalid("vector has non-finite entries"));
    }
    p.eval(x)
}

/// Closed-form `m_pq(T)`; the source `p` must be a weighted sup.
pub fn mixed_seminorm(p: &Seminorm, q: &Seminorm, t: &Operator) -> Result<MixedSeminormValue> {
    check_dim(p.dim(), t.dim())?;
    check_dim(q.dim(), t.dim())?;
    let Some(w) = p.weights() else {
        return Err(Error::invalid(
            "mixed seminorm with a derived source has no closed form; use mixed_seminorm_estimate",
        ));
    };
    let gt = q.functional_rows() * t.matrix();
    Ok(sup_over_weighted_ball(&gt, w))
}

/// `sup_{maxⱼ wⱼ|xⱼ| ≤ 1} max_r |(G x)_r|`.
fn sup_over_weighted_ball(g: &CMatrix, w: &[f64]) -> MixedSeminormValue {
    let mut best: f64 = 0.0;
    for r in 0..g.nrows() {
        let mut sum = 0.0;
        for (j, &wj) in w.iter().enumerate() {
            let a = g[(r, j)].norm();
            if wj == 0.0 {
                if a != 0.0 {
                    return MixedSeminormValue::Infinite;
                }
            } else {
                sum += a / wj;
            }
        }
        best = best.max(sum);
    }
    MixedSeminormValue::Finite(best)
}

/// Lower bound for `m_pq(T)` from coordinate vectors, their phase-aligned
/// polydisc vertices and `samples` Gaussian vectors (seeded).
pub fn mixed_seminorm_estimate(p: &Seminorm, q: &Seminorm, t: &Operator, samples: usize, seed: u64) -> Result<f64> {
    check_dim(p.dim(), t.dim())?;
    check_dim(q.dim(), t.dim())?;
    let n = t.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    let mut consider = |x: &CVector| {
        let px = p.eval_unchecked(x);
        if px > 1e-300 {
            let ratio = q.eval_unchecked(&(t.matrix() * x)) / px;
            if ratio.is_finite() {
                best = best.max(ratio);
            }
        }
    };
    for j in 0..n {
        let mut e = CVector::zeros(n);
        e[j] = Complex64::new(1.0, 0.0);
        consider(&e);
    }
    let weights = p.weights();
    for _ in 0..samples {
        let x = CVector::from_fn(n, |_, _| {
            Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        });
        consider(&x);
        // push each coordinate to the boundary of the weighted polydisc
        let vertex = CVector::from_fn(n, |j, _| {
            let z = x[j];
            let unit = if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) };
            match weights {
                Some(w) if w[j] > 0.0 => unit / w[j],
                Some(_) => Complex64::new(0.0, 0.0),
                None => unit,
            }
        });
        consider(&vertex);
    }
    Ok(best)
}

/// `p̂(T) = m_pp(T)`.
pub fn phat(p: &Seminorm, t: &Operator) -> Result<MixedSeminormValue> {
    mixed_seminorm(p, p, t)
}

/// `p̂(T)` for any member, falling back to the seeded estimate for derived seminorms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemberNorm {
    pub value: MixedSeminormValue,
    pub estimated: bool,
}

/// Verdict of the universal-boundedness test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniversalBound {
    pub bounded: bool,
    /// `‖T‖_P = sup_p p̂(T)` when bounded.
    pub bound: Option<f64>,
    pub estimated: bool,
}

/// A finite separating family of seminorms on `ℂⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    dim: usize,
    members: Vec<Seminorm>,
    principal: bool,
}

impl Calibration {
    pub fn new(members: Vec<Seminorm>) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::invalid("calibration needs at least one seminorm"));
        };
        let dim = first.dim();
        for m in &members {
            check_dim(dim, m.dim())?;
        }
        let cal = Self { dim, members, principal: false };
        cal.check_separating()?;
        Ok(cal)
    }

    /// A calibration flagged principal; the family must already be directed.
    pub fn new_principal(members: Vec<Seminorm>) -> Result<Self> {
        let mut cal = Self::new(members)?;
        if !cal.is_directed() {
            return Err(Error::invalid("principal calibration must be directed under pointwise max"));
        }
        cal.principal = true;
        Ok(cal)
    }

    pub fn from_weights(weights: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(weights.into_iter().map(Seminorm::weighted).collect::<Result<_>>()?)
    }

    /// The single max-norm seminorm `(1, …, 1)`.
    pub fn max_norm(n: usize) -> Self {
        Self { dim: n, members: vec![Seminorm::WeightedSup { weights: vec![1.0; n] }], principal: true }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn members(&self) -> &[Seminorm] {
        &self.members
    }

    pub fn is_principal(&self) -> bool {
        self.principal
    }

    pub fn has_derived(&self) -> bool {
        self.members.iter().any(Seminorm::is_derived)
    }

    fn check_separating(&self) -> Result<()> {
        if !self.has_derived() {
            for i in 0..self.dim {
                if !self.members.iter().any(|m| m.weights().is_some_and(|w| w[i] > 0.0)) {
                    return Err(Error::NotSeparating(i));
                }
            }
            return Ok(());
        }
        // joint kernel of all functionals must be trivial
        let rows: Vec<CMatrix> = self.members.iter().map(Seminorm::functional_rows).collect();
        let total: usize = rows.iter().map(|g| g.nrows()).sum();
        let mut stacked = CMatrix::zeros(total.max(1), self.dim);
        let mut at = 0;
        for g in &rows {
            stacked.rows_mut(at, g.nrows()).copy_from(g);
            at += g.nrows();
        }
        if total < self.dim {
            return Err(Error::NotSeparating(0));
        }
        let svd = stacked.svd(false, true);
        let smax = svd.singular_values.max();
        let (imin, smin) = svd.singular_values.argmin();
        if !(smin > 1e-12 * smax) {
            let coord = svd
                .v_t
                .as_ref()
                .map(|vt| vt.row(imin).map(|z| z.norm()).transpose().argmax().0)
                .unwrap_or(0);
            return Err(Error::NotSeparating(coord));
        }
        Ok(())
    }

    /// For any two members a third dominates both.
    pub fn is_directed(&self) -> bool {
        let ws: Option<Vec<&[f64]>> = self.members.iter().map(Seminorm::weights).collect();
        let Some(ws) = ws else { return false };
        ws.iter().all(|a| {
            ws.iter().all(|b| {
                ws.iter()
                    .any(|c| (0..self.dim).all(|i| c[i] >= a[i].max(b[i])))
            })
        })
    }

    fn check_operator(&self, t: &Operator) -> Result<()> {
        check_dim(self.dim, t.dim())
    }

    /// `p̂(T)` for every member.
    pub fn member_norms(&self, t: &Operator) -> Result<Vec<MemberNorm>> {
        self.check_operator(t)?;
        self.members
            .iter()
            .enumerate()
            .map(|(k, p)| {
                if p.is_derived() {
                    let v = mixed_seminorm_estimate(p, p, t, DEFAULT_ESTIMATE_SAMPLES, k as u64)?;
                    let value = if v > DERIVED_NORM_CAP {
                        MixedSeminormValue::Infinite
                    } else {
                        MixedSeminormValue::Finite(v)
                    };
                    Ok(MemberNorm { value, estimated: true })
                } else {
                    Ok(MemberNorm { value: phat(p, t)?, estimated: false })
                }
            })
            .collect()
    }

    /// True iff every `p̂(T)` is finite.
    pub fn is_quotient_bounded(&self, t: &Operator) -> Result<bool> {
        Ok(self.member_norms(t)?.iter().all(|m| m.value.is_finite()))
    }

    /// Index of the first member with infinite `p̂(T)`.
    pub fn first_unbounded_member(&self, t: &Operator) -> Result<Option<usize>> {
        Ok(self.member_norms(t)?.iter().position(|m| !m.value.is_finite()))
    }

    pub fn is_universally_bounded(&self, t: &Operator) -> Result<UniversalBound> {
        let norms = self.member_norms(t)?;
        let estimated = norms.iter().any(|m| m.estimated);
        let mut sup: f64 = 0.0;
        for m in &norms {
            match m.value {
                MixedSeminormValue::Finite(v) => sup = sup.max(v),
                MixedSeminormValue::Infinite => return Ok(UniversalBound { bounded: false, bound: None, estimated }),
            }
        }
        Ok(UniversalBound { bounded: true, bound: Some(sup), estimated })
    }

    /// `‖T‖_P = sup_p p̂(T)`.
    pub fn operator_norm(&self, t: &Operator) -> Result<MixedSeminormValue> {
        let b = self.is_universally_bounded(t)?;
        Ok(b.bound.map_or(MixedSeminormValue::Infinite, MixedSeminormValue::Finite))
    }

    /// Norm used for defects and convergence tests: `‖A‖_P` when finite,
    /// otherwise the weighted max-row-sum norm for the envelope weights
    /// `maxₚ wᵢ`, which is a genuine norm for a separating family.
    pub fn defect_norm(&self, a: &CMatrix) -> f64 {
        let op = Operator::wrap(a.clone());
        if let Ok(MixedSeminormValue::Finite(v)) = self.operator_norm(&op) {
            return v;
        }
        let env = self.envelope_weights();
        let p = Seminorm::WeightedSup { weights: env };
        phat(&p, &op).ok().and_then(MixedSeminormValue::finite).unwrap_or(f64::INFINITY)
    }

    /// Coordinatewise max of weighted members (unit weights if none are positive).
    pub fn envelope_weights(&self) -> Vec<f64> {
        let mut env = vec![0.0; self.dim];
        for w in self.members.iter().filter_map(Seminorm::weights) {
            for (e, x) in env.iter_mut().zip(w) {
                *e = f64::max(*e, *x);
            }
        }
        if env.contains(&0.0) {
            return vec![1.0; self.dim];
        }
        env
    }

    /// A member `p₀` with `m_{p₀q}(T) < ∞` for every `q`, if any.
    pub fn locally_bounded_witness(&self, t: &Operator) -> Result<Option<usize>> {
        self.check_operator(t)?;
        for (k, p0) in self.members.iter().enumerate() {
            if p0.is_derived() {
                continue;
            }
            let mut all_finite = true;
            for q in &self.members {
                if !mixed_seminorm(p0, q, t)?.is_finite() {
                    all_finite = false;
                    break;
                }
            }
            if all_finite {
                return Ok(Some(k));
            }
        }
        Ok(None)
    }

    /// Closure under pointwise max of weight vectors.
    pub fn principal_closure(&self) -> Result<Calibration> {
        let mut family: Vec<Vec<f64>> = Vec::new();
        for m in &self.members {
            let Some(w) = m.weights() else {
                return Err(Error::invalid("principal closure is defined for weighted-sup families"));
            };
            if !family.iter().any(|f| f.as_slice() == w) {
                family.push(w.to_vec());
            }
        }
        loop {
            let mut added = false;
            let len = family.len();
            for a in 0..len {
                for b in (a + 1)..len {
                    let m: Vec<f64> = family[a].iter().zip(&family[b]).map(|(x, y)| x.max(*y)).collect();
                    if !family.contains(&m) {
                        family.push(m);
                        added = true;
                    }
                }
            }
            if !added {
                break;
            }
        }
        let members = family.into_iter().map(|weights| Seminorm::WeightedSup { weights }).collect();
        Calibration::new_principal(members)
    }
}

/// Smallest `r` with `a(x) ≤ r·b(x)` for all `x`, i.e. `m_{ba}(I)`; exact when
/// `b` is a weighted sup, a sampled lower bound otherwise. `None` when no
/// such constant exists.
pub fn dominance_constant(a: &Seminorm, b: &Seminorm) -> Result<Option<f64>> {
    check_dim(a.dim(), b.dim())?;
    let id = Operator::identity(a.dim());
    if b.is_derived() {
        let v = mixed_seminorm_estimate(b, a, &id, DEFAULT_ESTIMATE_SAMPLES, 7)?;
        return Ok((v <= DERIVED_NORM_CAP).then_some(v));
    }
    Ok(mixed_seminorm(b, a, &id)?.finite())
}

/// Witnesses of mutual domination between two calibrations.
#[derive(Debug, Clone, Serialize)]
pub struct QEquivalence {
    pub equivalent: bool,
    /// For each member of the first family: (index in the second, constant).
    pub forward: Vec<Option<(usize, f64)>>,
    /// For each member of the second family: (index in the first, constant).
    pub backward: Vec<Option<(usize, f64)>>,
}

pub fn q_equivalence(p1: &Calibration, p2: &Calibration) -> Result<QEquivalence> {
    check_dim(p1.dim(), p2.dim())?;
    let best = |from: &Calibration, to: &Calibration| -> Result<Vec<Option<(usize, f64)>>> {
        from.members()
            .iter()
            .map(|a| {
                let mut found: Option<(usize, f64)> = None;
                for (k, b) in to.members().iter().enumerate() {
                    if let Some(r) = dominance_constant(a, b)? {
                        if found.is_none_or(|(_, old)| r < old) {
                            found = Some((k, r));
                        }
                    }
                }
                Ok(found)
            })
            .collect()
    };
    let forward = best(p1, p2)?;
    let backward = best(p2, p1)?;
    let equivalent = forward.iter().all(Option::is_some) && backward.iter().all(Option::is_some);
    Ok(QEquivalence { equivalent, forward, backward })
}

/// Deterministic Gaussian sample vectors, shared by the checks that verify
/// seminorm inequalities "on a vector sample".
pub fn sample_vectors(n: usize, count: usize, seed: u64) -> Vec<CVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            CVector::from_fn(n, |_, _| {
                Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    fn w(v: &[f64]) -> Seminorm {
        Seminorm::weighted(v.to_vec()).unwrap()
    }

    fn vecr(v: &[f64]) -> CVector {
        CVector::from_iterator(v.len(), v.iter().map(|&x| c64(x, 0.0)))
    }

    fn shift() -> Operator {
        Operator::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap()
    }

    #[test]
    fn weighted_sup_examples() {
        assert_eq!(seminorm_eval(&w(&[1.0, 2.0]), &vecr(&[3.0, -1.0])).unwrap(), 3.0);
        assert_eq!(seminorm_eval(&w(&[4.0, 0.5]), &vecr(&[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(seminorm_eval(&w(&[0.0, 1.0]), &vecr(&[5.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn seminorm_dimension_mismatch() {
        let e = seminorm_eval(&w(&[1.0, 1.0]), &vecr(&[1.0])).unwrap_err();
        assert_eq!(e, Error::DimensionMismatch { expected: 2, actual: 1 });
    }

    #[test]
    fn negative_weights_rejected() {
        assert!(Seminorm::weighted(vec![1.0, -0.5]).is_err());
        assert!(Seminorm::weighted(vec![f64::NAN]).is_err());
    }

    #[test]
    fn mixed_seminorm_examples() {
        let ones = w(&[1.0, 1.0]);
        assert_eq!(mixed_seminorm(&ones, &ones, &shift()).unwrap(), MixedSeminormValue::Finite(1.0));
        let p = w(&[3.0, 0.5]);
        assert_eq!(phat(&p, &Operator::identity(2)).unwrap(), MixedSeminormValue::Finite(1.0));
        assert_eq!(
            mixed_seminorm(&w(&[1.0, 0.0]), &ones, &shift()).unwrap(),
            MixedSeminormValue::Infinite
        );
    }

    #[test]
    fn mixed_seminorm_rejects_derived_source() {
        let d = w(&[1.0, 1.0]).pointwise_max(&Seminorm::Derived(
            DerivedSeminorm::new(CMatrix::identity(2, 2), DerivedOrigin::PointwiseMax).unwrap(),
        ));
        let d = d.unwrap();
        assert!(mixed_seminorm(&d, &d, &shift()).is_err());
        // the estimate still works and bounds the true value 1 from below
        let est = mixed_seminorm_estimate(&d, &d, &shift(), 200, 3).unwrap();
        assert!(est <= 1.0 + 1e-12 && est > 0.99);
    }

    #[test]
    fn phat_examples() {
        let p = w(&[2.0, 0.7]);
        let two = Operator::real_diagonal(&[2.0, 2.0]).unwrap();
        assert_eq!(phat(&p, &two).unwrap(), MixedSeminormValue::Finite(2.0));
        let t = Operator::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        assert_eq!(phat(&w(&[1.0, 1.0]), &t).unwrap(), MixedSeminormValue::Finite(2.0));
    }

    #[test]
    fn estimate_examples() {
        let ones = w(&[1.0, 1.0]);
        let est = mixed_seminorm_estimate(&ones, &ones, &Operator::identity(2), 50, 1).unwrap();
        assert!((est - 1.0).abs() < 1e-15);
        let est = mixed_seminorm_estimate(&ones, &ones, &shift(), 10_000, 0).unwrap();
        assert!((est - 1.0).abs() <= 0.05);
        // kernel-only sampling returns zero
        let zero_src = w(&[0.0]);
        let est = mixed_seminorm_estimate(&zero_src, &zero_src, &Operator::identity(1), 10, 0).unwrap();
        assert_eq!(est, 0.0);
    }

    #[test]
    fn boundedness_taxonomy() {
        let pos = Calibration::from_weights(vec![vec![0.5, 2.0]]).unwrap();
        assert!(pos.is_quotient_bounded(&shift()).unwrap());

        let kernel = Calibration::from_weights(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!(!kernel.is_quotient_bounded(&shift()).unwrap());
        let lower = Operator::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]).unwrap();
        assert!(kernel.is_quotient_bounded(&lower).unwrap());

        let ub = Calibration::max_norm(2).is_universally_bounded(&Operator::identity(2)).unwrap();
        assert_eq!((ub.bounded, ub.bound), (true, Some(1.0)));
        let d = Operator::real_diagonal(&[3.0, 1.0]).unwrap();
        assert_eq!(Calibration::max_norm(2).is_universally_bounded(&d).unwrap().bound, Some(3.0));
        let ub = kernel.is_universally_bounded(&shift()).unwrap();
        assert!(!ub.bounded && ub.bound.is_none());
    }

    #[test]
    fn calibration_must_separate() {
        assert_eq!(
            Calibration::from_weights(vec![vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap_err(),
            Error::NotSeparating(1)
        );
        assert!(Calibration::from_weights(vec![]).is_err());
    }

    #[test]
    fn principal_closure_examples() {
        let p = Calibration::from_weights(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(!p.is_directed());
        let c = p.principal_closure().unwrap();
        assert_eq!(c.members().len(), 3);
        assert!(c.members().iter().any(|m| m.weights() == Some(&[1.0, 1.0][..])));
        assert!(c.is_principal() && c.is_directed());
        // fixed point
        assert_eq!(c.principal_closure().unwrap(), c);

        let three = Calibration::from_weights(vec![
            vec![1.0, 0.0, 2.0],
            vec![0.0, 3.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ])
        .unwrap();
        let c = three.principal_closure().unwrap();
        assert!(c.members().len() <= 7);
        assert!(c.is_directed());
        // brute force: every nonempty subset max is a member
        let ws: Vec<&[f64]> = three.members().iter().map(|m| m.weights().unwrap()).collect();
        for mask in 1u32..8 {
            let mut m = vec![0.0f64; 3];
            for (k, wk) in ws.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    for i in 0..3 {
                        m[i] = m[i].max(wk[i]);
                    }
                }
            }
            assert!(c.members().iter().any(|x| x.weights() == Some(&m[..])));
        }
    }

    #[test]
    fn closure_is_q_equivalent() {
        let p = Calibration::from_weights(vec![vec![1.0, 0.0, 0.5], vec![0.0, 1.0, 0.25]]).unwrap();
        let c = p.principal_closure().unwrap();
        let q = q_equivalence(&p, &c).unwrap();
        // originals survive; the new max member has no single-member partner
        assert!(q.forward.iter().all(Option::is_some));
        assert_eq!(q.backward.iter().filter(|b| b.is_none()).count(), 1);
        assert!(!q.equivalent);
        let envelope = p.envelope_weights();
        for m in c.members() {
            let w = m.weights().unwrap();
            assert!(w.iter().zip(&envelope).all(|(a, b)| a <= b));
        }
    }

    #[test]
    fn locally_bounded_witness_found() {
        let p = Calibration::from_weights(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let t = Operator::from_real_rows(&[&[0.0, 2.0], &[0.0, 0.0]]).unwrap();
        assert_eq!(p.locally_bounded_witness(&t).unwrap(), Some(1));
    }

    #[test]
    fn shareable_across_threads() {
        fn check<T: Send + Sync>() {}
        check::<Calibration>();
        check::<Operator>();
    }

    #[test]
    fn defect_norm_falls_back_to_envelope() {
        let p = Calibration::from_weights(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let noise = CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1e-17, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        let v = p.defect_norm(&noise);
        assert!(v.is_finite() && v <= 1e-16);
    }
}
