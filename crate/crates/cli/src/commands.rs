use std::path::Path;

use holocalc::calib::{Calibration, Operator};
use holocalc::contour::{cluster_spectrum, ContourOptions, Domain};
use holocalc::funcalc::{apply_funcalc, default_contour};
use holocalc::holofun::HoloFun;
use holocalc::io::{contour_json, matrix_json, parse_calibration, parse_domain, parse_lambdas, parse_operator, calibration_json};
use holocalc::linalg::c64;
use holocalc::perturb::perturbation_series;
use holocalc::projections::{decompose, projection_from, ProjectionOptions, SpectralSet};
use holocalc::renorm::{
    classify_spectrum, comfortable_mu, joint_renorm_commuting, renorm_bounded, renorm_spectral, spectrum_intersection_check,
    N_SUP_CAP,
};
use holocalc::spectral::{eigenvalues, resolvent_direct, spectral_radius, verify_resolvent_identities};
use holocalc::Error;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::report::envelope;
use crate::{suites, CliError, Cli, Command, Opts, RenormMode};

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn require<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T, CliError> {
    v.as_ref().ok_or_else(|| CliError::Core(Error::InvalidInput(format!("{flag} is required for this command"))))
}

fn load_t(opts: &Opts) -> Result<Operator, CliError> {
    Ok(parse_operator(&read(require(&opts.t, "--T")?)?)?)
}

fn load_s(opts: &Opts) -> Result<Operator, CliError> {
    Ok(parse_operator(&read(require(&opts.s, "--S")?)?)?)
}

fn load_f(opts: &Opts) -> Result<HoloFun, CliError> {
    Ok(HoloFun::parse(require(&opts.f, "--f")?)?)
}

/// The calibration from `--calib`, or the max norm on `ℂⁿ`.
fn load_calib(opts: &Opts, n: usize) -> Result<Calibration, CliError> {
    let p = match &opts.calib {
        Some(path) => parse_calibration(&read(path)?)?,
        None => Calibration::max_norm(n),
    };
    if p.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: p.dim() }.into());
    }
    Ok(p)
}

fn check_tolerances(opts: &Opts) -> Result<(), CliError> {
    if !(opts.tol > 0.0) || !(opts.gap > 0.0) || opts.nodes == 0 || opts.nmax < 2 {
        return Err(Error::InvalidInput("tolerances must be positive, --nodes ≥ 1 and --nmax ≥ 2".into()).into());
    }
    Ok(())
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

pub fn run(cli: &Cli) -> Result<Value, CliError> {
    let opts = &cli.opts;
    check_tolerances(opts)?;
    match &cli.command {
        Command::Radius => radius(opts),
        Command::Spectrum => spectrum(opts),
        Command::Resolvent { csv, extent } => resolvent(opts, csv.as_deref(), *extent),
        Command::Funcalc => funcalc(opts),
        Command::Project => project(opts),
        Command::Perturb => perturb(opts),
        Command::Renorm { mode, p0, samples } => renorm(opts, *mode, *p0, *samples),
        Command::Classify => classify(opts),
        Command::Intersect { lambdas } => intersect(opts, lambdas),
        Command::Verify { suite, cases } => suites::run(opts, *suite, *cases),
    }
}

fn radius(opts: &Opts) -> Result<Value, CliError> {
    let t = load_t(opts)?;
    let p = load_calib(opts, t.dim())?;
    let est = spectral_radius(&p, &t, opts.nmax)?;
    Ok(envelope(
        "radius",
        opts,
        &[
            ("inf_form", "max_p min_{n<=nmax} phat(T^n)^(1/n)"),
            ("tail_slope", "max_p (phat(T^N)/phat(T^(N-4)))^(1/4), N = nmax"),
            ("eigen_oracle", "max |lambda| over eigenvalues of T"),
        ],
        json!({
            "inf_form": est.inf_over_n,
            "tail_slope": est.limsup_sup,
            "eigen_oracle": est.eigen_oracle,
            "converged": est.converged,
            "estimated": est.estimated,
        }),
    ))
}

fn spectrum(opts: &Opts) -> Result<Value, CliError> {
    let t = load_t(opts)?;
    let s = eigenvalues(&t)?;
    let clusters = cluster_spectrum(&s, opts.gap)?;
    Ok(envelope(
        "spectrum",
        opts,
        &[
            ("eigenvalues", "eigenvalue oracle (char-poly roots for n<=4, Schur otherwise), Newton-polished"),
            ("residuals", "sigma_min(lambda I - T)"),
            ("radius", "max |lambda|"),
        ],
        json!({ "spectrum": to_value(&s), "clusters": to_value(&clusters) }),
    ))
}

fn resolvent(opts: &Opts, csv: Option<&Path>, extent: Option<f64>) -> Result<Value, CliError> {
    let t = load_t(opts)?;
    let p = load_calib(opts, t.dim())?;
    let spec = eigenvalues(&t)?;
    let rho = spec.radius;
    let half = extent.unwrap_or(1.5 * (rho + 1.0));
    if !(half > 0.0) {
        return Err(Error::InvalidInput("--extent must be positive".into()).into());
    }
    let steps = opts.nodes.max(2);
    let h = 2.0 * half / (steps - 1) as f64;
    let rows: Vec<Vec<(f64, f64, Option<f64>, f64)>> = (0..steps)
        .into_par_iter()
        .map(|i| {
            let im = -half + i as f64 * h;
            (0..steps)
                .map(|j| {
                    let re = -half + j as f64 * h;
                    let z = c64(re, im);
                    let norm = resolvent_direct(&t, z).ok().and_then(|r| p.operator_norm(&r).ok()).and_then(|v| v.finite());
                    (re, im, norm, spec.distance_to(z))
                })
                .collect()
        })
        .collect();
    let points: Vec<_> = rows.into_iter().flatten().collect();
    let finite: Vec<f64> = points.iter().filter_map(|x| x.2).collect();
    let lower_bound_holds = points
        .iter()
        .filter(|x| x.3 > 0.0)
        .all(|x| x.2.is_none_or(|n| n * x.3 >= 1.0 - 1e-9));
    if let Some(path) = csv {
        let mut text = String::from("re,im,norm,dist\n");
        for (re, im, norm, dist) in &points {
            let n = norm.map_or_else(|| "inf".to_string(), |v| v.to_string());
            text.push_str(&format!("{re},{im},{n},{dist}\n"));
        }
        std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    let lambda = c64(rho + 1.0, 0.0);
    let mu = c64(0.0, rho + 1.0);
    let ids = verify_resolvent_identities(&t, lambda, mu, 3)?;
    Ok(envelope(
        "resolvent",
        opts,
        &[
            ("norm", "||R(lambda,T)||_P = sup_p phat((lambda I - T)^-1), LU inverse"),
            ("dist", "min |lambda - eigenvalue|"),
            ("identities.first_equation", "||R(l)-R(m)-(m-l)R(l)R(m)||_max at l = rho+1, m = i(rho+1)"),
            ("identities.derivative_deviation", "(-1)^n n! R^(n+1) vs 4th-order central difference, n = 3"),
        ],
        json!({
            "grid": { "steps": steps, "half_width": half, "points": points.len(), "csv": csv.map(|p| p.display().to_string()) },
            "min_norm": finite.iter().copied().fold(f64::INFINITY, f64::min),
            "max_norm": finite.iter().copied().fold(0.0, f64::max),
            "unbounded_points": points.len() - finite.len(),
            "lower_bound_holds": lower_bound_holds,
            "identities": to_value(&ids),
        }),
    ))
}

fn contour_options(opts: &Opts) -> ContourOptions {
    ContourOptions { nodes: opts.nodes, ..ContourOptions::default() }
}

fn funcalc(opts: &Opts) -> Result<Value, CliError> {
    let t = load_t(opts)?;
    let p = load_calib(opts, t.dim())?;
    let f = load_f(opts)?;
    let gamma = default_contour(&t, &f, contour_options(opts))?;
    let r = apply_funcalc(&p, &t, &f, &gamma, opts.tol)?;
    Ok(envelope(
        "funcalc",
        opts,
        &[
            ("matrix", "sum_j w_j f(lambda_j) R(lambda_j,T), trapezoid on circles, nodes doubled until change < max(tol, floor)"),
            ("last_change", "||F_2N - F_N||_P"),
            ("roundoff_floor", "64 eps sum_j |w_j f(lambda_j)| ||R(lambda_j)||"),
            ("commutation_defect", "||F T - T F||_P"),
        ],
        json!({
            "function": opts.f,
            "matrix": to_value(&matrix_json(r.operator.matrix())),
            "nodes_per_circle": r.nodes_per_circle,
            "last_change": r.last_change,
            "roundoff_floor": r.roundoff_floor,
            "commutation_defect": r.commutation_defect,
            "contour": to_value(&contour_json(&gamma)),
        }),
    ))
}

fn parse_set(text: &str) -> Result<SpectralSet, CliError> {
    let ids = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<usize>().map_err(|_| CliError::Core(Error::Parse(format!("bad cluster index {s:?}")))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SpectralSet::new(ids))
}

fn project(opts: &Opts) -> Result<Value, CliError> {
    let t = load_t(opts)?;
    let p = load_calib(opts, t.dim())?;
    let set = parse_set(require(&opts.set, "--set")?)?;
    let dec = decompose(&t, opts.gap)?;
    let popts = ProjectionOptions { gap: opts.gap, tol: opts.tol, nodes: opts.nodes };
    let r = projection_from(&p, &t, &dec, &set, popts)?;
    Ok(envelope(
        "project",
        opts,
        &[
            ("projector", "(1/2 pi i) sum over circles around the chosen clusters of w_j R(lambda_j,T)"),
            ("idempotency_defect", "||P^2 - P||_P"),
            ("commutation_defect", "||P T - T P||_P"),
            ("trace", "tr P"),
            ("trace_defect", "|tr P - multiplicity|"),
        ],
        json!({
            "set": to_value(&r.set),
            "clusters": to_value(&dec.clusters),
            "projector": to_value(&matrix_json(r.projector.matrix())),
            "idempotency_defect": r.idempotency_defect,
            "commutation_defect": r.commutation_defect,
            "trace": to_value(&r.trace),
            "multiplicity": r.multiplicity,
            "trace_defect": r.trace_defect(),
            "nodes_per_circle": r.nodes_per_circle,
        }),
    ))
}

fn perturb(opts: &Opts) -> Result<Value, CliError> {
    let t = load_t(opts)?;
    let s = load_s(opts)?;
    let p = load_calib(opts, t.dim())?;
    let f = load_f(opts)?;
    if s.dim() != t.dim() {
        return Err(Error::DimensionMismatch { expected: t.dim(), actual: s.dim() }.into());
    }
    let d = match &opts.domain {
        Some(path) => parse_domain(&read(path)?)?,
        None => {
            let ts = Operator::new(t.matrix() + s.matrix())?;
            let r = eigenvalues(&t)?.radius.max(eigenvalues(&ts)?.radius);
            Domain::disk(c64(0.0, 0.0), r + 1.0)?
        }
    };
    let r = perturbation_series(&p, &t, &s, &f, &d, opts.tol)?;
    Ok(envelope(
        "perturb",
        opts,
        &[
            ("matrix", "sum_{n<N} f^(n)(T) S^n / n!, coefficients by contour quadrature"),
            ("term_norms", "||f^(n)(T) S^n / n!||_P"),
            ("tail_estimate", "geometric tail with ratio 1.1 r_S/d (measured ratio when that is >= 1)"),
            ("direct_deviation", "||series - f(T+S)||_P, f(T+S) by contour quadrature"),
            ("radius_s", "certified inf-form radius of S"),
            ("distance", "min over sigma(T) of dist(lambda, complement of D)"),
        ],
        json!({
            "function": opts.f,
            "matrix": to_value(&matrix_json(r.value.matrix())),
            "report": to_value(&r),
        }),
    ))
}

fn renorm(opts: &Opts, mode: RenormMode, p0: Option<usize>, samples: usize) -> Result<Value, CliError> {
    let t = load_t(opts)?;
    let p = load_calib(opts, t.dim())?;
    let r = match mode {
        RenormMode::Bounded => renorm_bounded(&p, &t, p0)?,
        RenormMode::Spectral => {
            let mu = match opts.mu {
                Some(mu) => mu,
                None => comfortable_mu(&t)?,
            };
            renorm_spectral(&p, &t, mu, N_SUP_CAP)?
        }
        RenormMode::Joint => {
            let b = load_s(opts)?;
            let mu_a = match opts.mu {
                Some(mu) => mu,
                None => comfortable_mu(&t)?,
            };
            let mu_b = match opts.mu_b {
                Some(mu) => mu,
                None => comfortable_mu(&b)?,
            };
            joint_renorm_commuting(&p, &t, &b, mu_a, mu_b, None)?
        }
    };
    let check = r.sample_check(samples, opts.seed);
    let formula = match mode {
        RenormMode::Bounded => "q' = max(q, m_{p0 q}(T) p0); bound = c0 max(1, max_q m_{p0 q}(T))",
        RenormMode::Spectral => "p'(x) = max_{n<=N} p(T^n x)/mu^n",
        RenormMode::Joint => "p'(x) = max_{n,m<=N} p(A^n B^m x)/(mu_A^n mu_B^m)",
    };
    Ok(envelope(
        "renorm",
        opts,
        &[
            ("calibration", formula),
            ("constants", "m p <= p' <= M q per member, closed form"),
            ("sample_check", "lower/upper equivalence and p'(Tx)/(mu p'(x)) on seeded Gaussian samples"),
        ],
        json!({
            "construction": to_value(&r.construction),
            "constants": to_value(&r.constants),
            "calibration": to_value(&calibration_json(&r.calibration)),
            "sample_check": to_value(&check),
        }),
    ))
}

fn classify(opts: &Opts) -> Result<Value, CliError> {
    let t = load_t(opts)?;
    let p = load_calib(opts, t.dim())?;
    let c = classify_spectrum(&p, &t, opts.tol)?;
    Ok(envelope(
        "classify",
        opts,
        &[
            ("point", "eigenvalue clusters; geometric multiplicity from SVD null space"),
            ("approximate", "eigenvector witnesses and grid minimizers of p((lambda I - T)x)/p(x)"),
            ("probes.certified_lower", "1/||R(lambda,T)||_P"),
        ],
        to_value(&c),
    ))
}

fn intersect(opts: &Opts, lambdas: &Path) -> Result<Value, CliError> {
    let t = load_t(opts)?;
    let p = load_calib(opts, t.dim())?;
    let ls = parse_lambdas(&read(lambdas)?)?;
    let r = spectrum_intersection_check(&p, &t, &ls)?;
    Ok(envelope(
        "intersect",
        opts,
        &[
            ("mu_t", "1.5 rho(T) + 0.05 ||T||_inf"),
            ("mu_r", "same rule applied to R(lambda,T)"),
            ("resolvent_norm", "||R(lambda,T)||_{P'} after joint renorming of T and R(lambda,T)"),
        ],
        to_value(&r),
    ))
}
