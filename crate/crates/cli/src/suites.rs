//! Seeded invariant suites for `verify`. Each suite reports the maximum of
//! every checked defect next to its threshold.

use std::collections::BTreeMap;

use holocalc::calib::{Calibration, Operator};
use holocalc::contour::{ContourOptions, Domain};
use holocalc::funcalc::{apply_funcalc, default_contour};
use holocalc::holofun::HoloFun;
use holocalc::instances::{random_calibration, random_diagonalizable, DiagonalizableInstance, InstanceOptions};
use holocalc::linalg::{c64, identity, CMatrix};
use holocalc::perturb::perturbation_series;
use holocalc::poly;
use holocalc::projections::{decompose, projection_from, resolvent_lower_bound_check, ProjectionOptions, SpectralSet};
use holocalc::renorm::{renorm_bounded, renorm_spectral, spectrum_coincidence, Construction, N_SUP_CAP};
use holocalc::spectral::{
    neumann_divergence, neumann_resolvent, resolvent_direct, spectral_radius, verify_resolvent_identities,
};
use holocalc::Result;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::report::envelope;
use crate::{CliError, Opts, Suite};

/// Running maxima keyed by check name, with thresholds.
#[derive(Default)]
struct Tally {
    maxima: BTreeMap<&'static str, f64>,
    thresholds: BTreeMap<&'static str, f64>,
    failures: Vec<String>,
}

impl Tally {
    fn see(&mut self, name: &'static str, value: f64, threshold: f64) {
        let m = self.maxima.entry(name).or_insert(0.0);
        *m = m.max(value);
        self.thresholds.insert(name, threshold);
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn pass(&self) -> bool {
        self.failures.is_empty() && self.maxima.iter().all(|(k, v)| *v <= self.thresholds[k])
    }
}

struct Case {
    seed: u64,
    inst: DiagonalizableInstance,
    p: Calibration,
}

fn cases(seed: u64, count: usize) -> Vec<Case> {
    (0..count as u64)
        .map(|k| {
            let s = seed + k;
            let n = 2 + (s % 5) as usize;
            Case { seed: s, inst: random_diagonalizable(n, s, InstanceOptions::default()), p: random_calibration(n, 2, s) }
        })
        .collect()
}

fn c(re: f64) -> Complex64 {
    c64(re, 0.0)
}

pub fn run(opts: &Opts, suite: Suite, count: usize) -> std::result::Result<Value, CliError> {
    if count == 0 {
        return Err(holocalc::Error::InvalidInput("--cases must be positive".into()).into());
    }
    let cs = cases(opts.seed, count);
    let mut tally = Tally::default();
    let name = match suite {
        Suite::Calculus => {
            calculus(&cs, opts, &mut tally)?;
            "calculus"
        }
        Suite::Projections => {
            projections(&cs, opts, &mut tally)?;
            "projections"
        }
        Suite::Radius => {
            radius(&cs, opts, &mut tally)?;
            "radius"
        }
        Suite::Neumann => {
            neumann(&cs, opts, &mut tally)?;
            "neumann"
        }
        Suite::Perturbation => {
            perturbation(&cs, opts, &mut tally)?;
            "perturbation"
        }
        Suite::Renorm => {
            renorm(&cs, &mut tally)?;
            "renorm"
        }
        Suite::Resolvent => {
            resolvent(&cs, &mut tally)?;
            "resolvent"
        }
        Suite::Coincidence => {
            coincidence(&cs, &mut tally)?;
            "coincidence"
        }
    };
    Ok(envelope(
        "verify",
        opts,
        &[("maxima", "largest defect over all cases, each compared with its threshold")],
        json!({
            "suite": name,
            "cases": count,
            "pass": tally.pass(),
            "maxima": tally.maxima,
            "thresholds": tally.thresholds,
            "failures": tally.failures,
        }),
    ))
}

fn calculus(cs: &[Case], opts: &Opts, tally: &mut Tally) -> Result<()> {
    let pole = HoloFun::pole(c(5.0));
    let prod = HoloFun::product(HoloFun::exp(), pole.clone());
    for case in cs {
        let (p, t) = (&case.p, &case.inst.t);
        let n = t.dim();
        let gamma = default_contour(t, &prod, ContourOptions::default())?;
        let f = |g: &HoloFun| apply_funcalc(p, t, g, &gamma, opts.tol.min(1e-10)).map(|r| r.operator.into_matrix());
        let one = f(&HoloFun::constant(c(1.0)))?;
        let id = f(&HoloFun::identity())?;
        let e = f(&HoloFun::exp())?;
        let r = f(&pole)?;
        let er = f(&prod)?;
        tally.see("unit", p.defect_norm(&(one - identity(n))), 1e-8);
        tally.see("identity", p.defect_norm(&(id - t.matrix())), 1e-8);
        tally.see("product", p.defect_norm(&(&er - &e * &r)), 1e-8);
        let oracle = case.inst.apply(|z| z.exp());
        tally.see("exp_oracle_relative", p.defect_norm(&(&e - &oracle)) / p.defect_norm(&oracle), 1e-8);
    }
    Ok(())
}

fn projections(cs: &[Case], opts: &Opts, tally: &mut Tally) -> Result<()> {
    let popts = ProjectionOptions { gap: 0.05, tol: opts.tol, nodes: opts.nodes };
    for case in cs {
        let (p, t) = (&case.p, &case.inst.t);
        let n = t.dim();
        let dec = decompose(t, popts.gap)?;
        let k = dec.clusters.len().min(6);
        // each bipartition once: H holds cluster 0
        for mask in (1..(1u32 << k) - 1).filter(|m| m & 1 == 1) {
            let h = SpectralSet::new((0..k).filter(|i| mask & (1 << i) != 0));
            let rest = h.complement(dec.clusters.len());
            let th = projection_from(p, t, &dec, &h, popts)?;
            let tk = projection_from(p, t, &dec, &rest, popts)?;
            let (a, b) = (th.projector.matrix(), tk.projector.matrix());
            tally.see("idempotency", th.idempotency_defect, 1e-8);
            tally.see("sum_to_identity", p.defect_norm(&(a + b - identity(n))), 1e-8);
            tally.see("disjoint_product", p.defect_norm(&(a * b)), 1e-8);
            tally.see("trace", th.trace_defect(), 1e-6);
        }
    }
    Ok(())
}

fn radius(cs: &[Case], opts: &Opts, tally: &mut Tally) -> Result<()> {
    for case in cs {
        let (p, t) = (&case.p, &case.inst.t);
        let est = spectral_radius(p, t, opts.nmax)?;
        tally.require(est.inf_over_n >= est.eigen_oracle * (1.0 - 1e-12), || {
            format!("seed {}: inf-form {} below eigen radius {}", case.seed, est.inf_over_n, est.eigen_oracle)
        });
        let scaled = Operator::new(t.matrix() * c64(0.0, 2.5))?;
        let es = spectral_radius(p, &scaled, opts.nmax)?;
        tally.see("homogeneity", (es.eigen_oracle - 2.5 * est.eigen_oracle).abs() / est.eigen_oracle.max(1e-300), 1e-9);
        let sq = Operator::new(t.matrix() * t.matrix())?;
        let e2 = spectral_radius(p, &sq, opts.nmax)?;
        tally.see("power_law", (e2.eigen_oracle - est.eigen_oracle.powi(2)).abs() / e2.eigen_oracle.max(1e-300), 1e-9);
    }
    Ok(())
}

fn neumann(cs: &[Case], opts: &Opts, tally: &mut Tally) -> Result<()> {
    let tol = opts.tol;
    for case in cs {
        let (p, t) = (&case.p, &case.inst.t);
        let cert = spectral_radius(p, t, 60)?.certified();
        for (k, scale) in [1.1, 1.5, 2.5].into_iter().enumerate() {
            let lambda = Complex64::from_polar(scale * cert, 0.9 * k as f64 + 0.3);
            let r = neumann_resolvent(p, t, lambda, tol)?;
            let d = resolvent_direct(t, lambda)?;
            tally.see("agreement_over_tol", p.defect_norm(&(r.operator.matrix() - d.matrix())) / tol, 10.0);
        }
        let inside = c(0.5 * case.inst.radius());
        let diverged = neumann_divergence(p, t, inside, 2000, 1e3)?.is_some();
        tally.require(diverged, || format!("seed {}: no divergence at half the radius", case.seed));
    }
    Ok(())
}

fn perturbation(cs: &[Case], opts: &Opts, tally: &mut Tally) -> Result<()> {
    for case in cs {
        let (p, t) = (&case.p, &case.inst.t);
        let domain = Domain::disk(c(0.0), case.inst.radius() + 1.0)?;
        let q = poly::eval_matrix(&[c(0.2), c(-0.5), c(1.0)], t.matrix());
        let rq = spectral_radius(p, &Operator::new(q.clone())?, 60)?.certified();
        let s = Operator::new(q * c(0.45 / rq))?;
        let r = perturbation_series(p, t, &s, &HoloFun::exp(), &domain, opts.tol)?;
        tally.see("direct_deviation", r.direct_deviation, 1e-7);
    }
    // strictly upper triangular S has index n
    for n in 2..=5usize {
        let mut s = CMatrix::zeros(n, n);
        for i in 0..n - 1 {
            s[(i, i + 1)] = c(0.5);
        }
        let t = Operator::new(identity(n) * c(0.3) + &s * c(0.25))?;
        let s = Operator::new(s)?;
        let r = perturbation_series(&Calibration::max_norm(n), &t, &s, &HoloFun::exp(), &Domain::disk(c(0.0), 2.0)?, opts.tol)?;
        tally.see("nilpotent_deviation", r.direct_deviation, 1e-7);
        tally.require(r.terms_used == n, || format!("index {n}: {} terms", r.terms_used));
    }
    Ok(())
}

fn renorm(cs: &[Case], tally: &mut Tally) -> Result<()> {
    for case in cs {
        let (p, t) = (&case.p, &case.inst.t);
        let mu = 1.05 * case.inst.radius() + 1e-3;
        let r = renorm_spectral(p, t, mu, N_SUP_CAP)?;
        let check = r.sample_check(2000, case.seed);
        tally.see("lower_violation", check.lower_violation, 1e-10);
        tally.see("upper_ratio", check.upper_ratio, 1.0 + 1e-10);
        tally.see("contraction", check.contraction.iter().copied().fold(0.0, f64::max), 1.0 + 1e-10);
        let b = renorm_bounded(&p.principal_closure()?, t, None)?;
        if let Construction::BoundedWitness { norm, stated_bound, .. } = b.construction {
            tally.see("bounded_norm_over_stated", norm / stated_bound, 1.0 + 1e-12);
        }
    }
    Ok(())
}

fn resolvent(cs: &[Case], tally: &mut Tally) -> Result<()> {
    for case in cs {
        let t = &case.inst.t;
        let rho = case.inst.radius();
        let ids = verify_resolvent_identities(t, c64(rho + 0.7, 0.2), c64(-0.3, rho + 0.9), 3)?;
        tally.see("first_equation", ids.first_equation, 1e-10);
        tally.see("derivative_relative", ids.derivative_deviation, 1e-5);
        let lambda = c64(0.4 * rho + 0.05, 0.35 * rho + 0.05);
        if case.inst.eigenvalues.iter().all(|z| (z - lambda).norm() > 1e-3) {
            for e in resolvent_lower_bound_check(t, lambda, std::slice::from_ref(&case.p))? {
                tally.require(e.holds, || format!("seed {}: ||R|| = {} below 1/dist = {}", case.seed, e.norm, e.bound));
            }
        }
    }
    Ok(())
}

fn coincidence(cs: &[Case], tally: &mut Tally) -> Result<()> {
    for case in cs {
        let r = spectrum_coincidence(&case.p, &case.inst.t)?;
        tally.see("qp_distance", r.qp_distance, 1e-9);
        tally.see("renormed_distance", r.renormed_distance, 1e-9);
    }
    Ok(())
}
