//! Scalar holomorphic functions with closed-form Taylor jets and
//! analyticity metadata, plus the textual mini-language used by the CLI.
//!
//! ```text
//! id | const:c | poly:c0,c1,.. | exp | exp:a | rat:n0,n1,../d0,d1,..
//! series:r=R:c0,c1,.. | compose:OUTER|INNER | mul:F|G
//! ```
//! Coefficient lists are ascending in powers of `λ`; numbers may be complex
//! (`2-0.5i`).

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::contour::Contour;
use crate::error::{Error, Result};
use crate::poly;

/// Samples per circle when certifying analyticity along images of circles.
const CURVE_SAMPLES: usize = 4096;
/// Poles must stay this fraction of the curve size away from it.
const POLE_MARGIN: f64 = 0.05;
/// Power series are used only inside `radius·(1 − SERIES_MARGIN)`.
pub const SERIES_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum HoloFun {
    Poly(Vec<Complex64>),
    Rational { num: Vec<Complex64>, den: Vec<Complex64> },
    /// `e^{aλ}`.
    Exp(Complex64),
    /// `Σ cₖ λᵏ` with declared radius of convergence.
    PowerSeries { coeffs: Vec<Complex64>, radius: f64 },
    /// `outer ∘ inner`.
    Compose { outer: Box<HoloFun>, inner: Box<HoloFun> },
    Product(Box<HoloFun>, Box<HoloFun>),
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl HoloFun {
    pub fn identity() -> Self {
        HoloFun::Poly(vec![zero(), one()])
    }

    pub fn constant(c: Complex64) -> Self {
        HoloFun::Poly(vec![c])
    }

    pub fn exp() -> Self {
        HoloFun::Exp(one())
    }

    pub fn rational(num: Vec<Complex64>, den: Vec<Complex64>) -> Result<Self> {
        if poly::trim(&den).is_empty() {
            return Err(Error::invalid("rational function with zero denominator"));
        }
        Ok(HoloFun::Rational { num, den })
    }

    /// `1/(λ − a)`.
    pub fn pole(a: Complex64) -> Self {
        HoloFun::Rational { num: vec![one()], den: vec![-a, one()] }
    }

    pub fn power_series(coeffs: Vec<Complex64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid("radius of convergence must be positive"));
        }
        Ok(HoloFun::PowerSeries { coeffs, radius })
    }

    pub fn compose(outer: HoloFun, inner: HoloFun) -> Self {
        HoloFun::Compose { outer: Box::new(outer), inner: Box::new(inner) }
    }

    pub fn product(f: HoloFun, g: HoloFun) -> Self {
        HoloFun::Product(Box::new(f), Box::new(g))
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        match self {
            HoloFun::Poly(c) => Ok(poly::eval(c, z)),
            HoloFun::Rational { num, den } => {
                let d = poly::eval(den, z);
                if d.norm() == 0.0 {
                    return Err(Error::NotAnalytic(format!("pole at {z}")));
                }
                Ok(poly::eval(num, z) / d)
            }
            HoloFun::Exp(a) => Ok((a * z).exp()),
            HoloFun::PowerSeries { coeffs, radius } => {
                check_series_point(z, *radius)?;
                Ok(poly::eval(coeffs, z))
            }
            HoloFun::Compose { outer, inner } => outer.eval(inner.eval(z)?),
            HoloFun::Product(f, g) => Ok(f.eval(z)? * g.eval(z)?),
        }
    }

    /// Taylor coefficients `f⁽ᵏ⁾(z)/k!` for `k = 0..=order`.
    pub fn taylor(&self, z: Complex64, order: usize) -> Result<Vec<Complex64>> {
        match self {
            HoloFun::Poly(c) => Ok(poly_taylor(c, z, order)),
            HoloFun::Rational { num, den } => {
                let n = poly_taylor(num, z, order);
                let d = poly_taylor(den, z, order);
                if d[0].norm() == 0.0 {
                    return Err(Error::NotAnalytic(format!("pole at {z}")));
                }
                Ok(series_divide(&n, &d))
            }
            HoloFun::Exp(a) => {
                let mut out = Vec::with_capacity(order + 1);
                let mut term = (a * z).exp();
                for k in 0..=order {
                    out.push(term);
                    term = term * a / (k + 1) as f64;
                }
                Ok(out)
            }
            HoloFun::PowerSeries { coeffs, radius } => {
                check_series_point(z, *radius)?;
                Ok(poly_taylor(coeffs, z, order))
            }
            HoloFun::Compose { outer, inner } => {
                let f = inner.taylor(z, order)?;
                let g = outer.taylor(f[0], order)?;
                Ok(series_compose(&g, &f))
            }
            HoloFun::Product(f, g) => {
                let a = f.taylor(z, order)?;
                let b = g.taylor(z, order)?;
                Ok((0..=order).map(|k| (0..=k).map(|j| a[j] * b[k - j]).sum()).collect())
            }
        }
    }

    /// `f⁽ⁿ⁾(z)`.
    pub fn derivative(&self, z: Complex64, n: usize) -> Result<Complex64> {
        let factorial: f64 = (1..=n).map(|k| k as f64).product();
        Ok(self.taylor(z, n)?[n] * factorial)
    }

    /// Poles visible without evaluating compositions.
    pub fn poles(&self) -> Result<Vec<Complex64>> {
        match self {
            HoloFun::Rational { den, .. } => poly::roots(den),
            HoloFun::Compose { inner, .. } => inner.poles(),
            HoloFun::Product(f, g) => {
                let mut v = f.poles()?;
                v.extend(g.poles()?);
                Ok(v)
            }
            _ => Ok(Vec::new()),
        }
    }

    /// Smallest declared radius of convergence about the origin that
    /// constrains the argument directly.
    pub fn series_radius(&self) -> Option<f64> {
        match self {
            HoloFun::PowerSeries { radius, .. } => Some(*radius),
            HoloFun::Compose { inner, .. } => inner.series_radius(),
            HoloFun::Product(f, g) => match (f.series_radius(), g.series_radius()) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            },
            _ => None,
        }
    }

    /// Analyticity on every circle of `Γ` and on the regions they enclose.
    pub fn check_analytic(&self, contour: &Contour) -> Result<()> {
        let curves: Vec<Vec<Complex64>> = contour
            .circles()
            .iter()
            .map(|c| {
                let pts: Vec<Complex64> =
                    (0..CURVE_SAMPLES).map(|j| c.point(2.0 * PI * j as f64 / CURVE_SAMPLES as f64)).collect();
                if c.orientation < 0 {
                    pts.into_iter().rev().collect()
                } else {
                    pts
                }
            })
            .collect();
        self.check_on_curves(&curves)
    }

    /// Each curve is a closed, positively sampled boundary of a region on
    /// which every inner map is already known to be analytic.
    fn check_on_curves(&self, curves: &[Vec<Complex64>]) -> Result<()> {
        match self {
            HoloFun::Poly(_) | HoloFun::Exp(_) => Ok(()),
            HoloFun::Rational { .. } => {
                for pole in self.poles()? {
                    for curve in curves {
                        let size = curve_size(curve);
                        let dist = curve.iter().map(|z| (z - pole).norm()).fold(f64::INFINITY, f64::min);
                        if !(dist >= POLE_MARGIN * size) {
                            return Err(Error::NotAnalytic(format!(
                                "pole {pole} is {dist:.3e} from the contour (needs {:.3e})",
                                POLE_MARGIN * size
                            )));
                        }
                        if discrete_winding(curve, pole)? != 0 {
                            return Err(Error::NotAnalytic(format!("pole {pole} is enclosed by the contour")));
                        }
                    }
                }
                Ok(())
            }
            HoloFun::PowerSeries { radius, .. } => {
                let limit = radius * (1.0 - SERIES_MARGIN);
                for curve in curves {
                    let reach = curve.iter().map(|z| z.norm()).fold(0.0, f64::max);
                    if !(reach < limit) {
                        return Err(Error::NotAnalytic(format!(
                            "contour reaches |λ| = {reach} beyond the series radius {radius}"
                        )));
                    }
                }
                Ok(())
            }
            HoloFun::Compose { outer, inner } => {
                inner.check_on_curves(curves)?;
                let images: Vec<Vec<Complex64>> = curves
                    .iter()
                    .map(|c| c.iter().map(|&z| inner.eval(z)).collect::<Result<Vec<_>>>())
                    .collect::<Result<_>>()?;
                outer.check_on_curves(&images)
            }
            HoloFun::Product(f, g) => {
                f.check_on_curves(curves)?;
                g.check_on_curves(curves)
            }
        }
    }

    /// Parses the mini-language.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (head, rest) = match text.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (text, None),
        };
        match (head, rest) {
            ("id", None) => Ok(HoloFun::identity()),
            ("exp", None) => Ok(HoloFun::exp()),
            ("exp", Some(a)) => Ok(HoloFun::Exp(parse_complex(a)?)),
            ("const", Some(c)) => Ok(HoloFun::constant(parse_complex(c)?)),
            ("poly", Some(c)) => Ok(HoloFun::Poly(parse_list(c)?)),
            ("rat", Some(body)) => {
                let (n, d) = body
                    .split_once('/')
                    .ok_or_else(|| Error::Parse("rat: expects NUM/DEN".into()))?;
                HoloFun::rational(parse_list(n)?, parse_list(d)?).map_err(|e| Error::Parse(e.to_string()))
            }
            ("series", Some(body)) => {
                let (r, c) = body
                    .split_once(':')
                    .ok_or_else(|| Error::Parse("series: expects r=R:c0,c1,...".into()))?;
                let r = r
                    .strip_prefix("r=")
                    .ok_or_else(|| Error::Parse("series: radius must be given as r=R".into()))?;
                let radius: f64 = r.trim().parse().map_err(|_| Error::Parse(format!("bad radius {r:?}")))?;
                HoloFun::power_series(parse_list(c)?, radius).map_err(|e| Error::Parse(e.to_string()))
            }
            ("compose", Some(body)) => parse_pair(body).map(|(a, b)| HoloFun::compose(a, b)),
            ("mul", Some(body)) => parse_pair(body).map(|(a, b)| HoloFun::product(a, b)),
            _ => Err(Error::Parse(format!("unknown function {text:?}"))),
        }
    }
}

/// The first split at `|` where both halves parse.
fn parse_pair(body: &str) -> Result<(HoloFun, HoloFun)> {
    for (i, _) in body.match_indices('|') {
        if let (Ok(a), Ok(b)) = (HoloFun::parse(&body[..i]), HoloFun::parse(&body[i + 1..])) {
            return Ok((a, b));
        }
    }
    Err(Error::Parse(format!("cannot split {body:?} into two functions")))
}

fn parse_list(s: &str) -> Result<Vec<Complex64>> {
    let v: Vec<Complex64> = s.split(',').map(parse_complex).collect::<Result<_>>()?;
    if v.is_empty() {
        return Err(Error::Parse("empty coefficient list".into()));
    }
    Ok(v)
}

/// `x`, `yi`, `x+yi`, `x-yi`; a Unicode minus is accepted.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let s: String = s.trim().replace('−', "-").chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Parse(format!("bad number {s:?}"));
    let real = |t: &str| t.parse::<f64>().map_err(|_| bad());
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(real(&s)?, 0.0));
    };
    // split at the last sign that is not an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |t: &str| match t {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        t => real(t),
    };
    match split {
        Some(k) => Ok(Complex64::new(real(&body[..k])?, imag(&body[k..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

fn fmt_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.re == 0.0 {
        format!("{}i", z.im)
    } else if z.im < 0.0 {
        format!("{}{}i", z.re, z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

fn fmt_list(v: &[Complex64]) -> String {
    v.iter().map(|&z| fmt_complex(z)).collect::<Vec<_>>().join(",")
}

impl fmt::Display for HoloFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HoloFun::Poly(c) => write!(f, "poly:{}", fmt_list(c)),
            HoloFun::Rational { num, den } => write!(f, "rat:{}/{}", fmt_list(num), fmt_list(den)),
            HoloFun::Exp(a) if *a == one() => write!(f, "exp"),
            HoloFun::Exp(a) => write!(f, "exp:{}", fmt_complex(*a)),
            HoloFun::PowerSeries { coeffs, radius } => write!(f, "series:r={radius}:{}", fmt_list(coeffs)),
            HoloFun::Compose { outer, inner } => write!(f, "compose:{outer}|{inner}"),
            HoloFun::Product(a, b) => write!(f, "mul:{a}|{b}"),
        }
    }
}

fn check_series_point(z: Complex64, radius: f64) -> Result<()> {
    if z.norm() < radius * (1.0 - SERIES_MARGIN) {
        Ok(())
    } else {
        Err(Error::NotAnalytic(format!("|{z}| is outside the series radius {radius}")))
    }
}

/// Coefficients of `p(z + h)` in `h`, by repeated synthetic division.
fn poly_taylor(coeffs: &[Complex64], z: Complex64, order: usize) -> Vec<Complex64> {
    let mut b: Vec<Complex64> = coeffs.to_vec();
    let mut out = vec![zero(); order + 1];
    for slot in out.iter_mut() {
        if b.is_empty() {
            break;
        }
        let mut acc = zero();
        let mut quotient = vec![zero(); b.len().saturating_sub(1)];
        for k in (0..b.len()).rev() {
            acc = acc * z + b[k];
            if k > 0 {
                quotient[k - 1] = acc;
            }
        }
        *slot = acc;
        b = quotient;
    }
    out
}

/// `n/d` as truncated power series, `d₀ ≠ 0`.
fn series_divide(n: &[Complex64], d: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![zero(); n.len()];
    for k in 0..n.len() {
        let s: Complex64 = (1..=k).map(|j| d[j] * c[k - j]).sum();
        c[k] = (n[k] - s) / d[0];
    }
    c
}

/// Taylor jet of `g(f(z + h))` from the jets of `g` at `f(z)` and of `f` at `z`.
fn series_compose(g: &[Complex64], f: &[Complex64]) -> Vec<Complex64> {
    let order = f.len() - 1;
    let mut u = f.to_vec();
    u[0] = zero();
    // Horner in the truncated series ring
    let mut acc = vec![zero(); order + 1];
    for &gk in g.iter().rev() {
        let mut next = vec![zero(); order + 1];
        for i in 0..=order {
            if acc[i] == zero() {
                continue;
            }
            for j in 1..=order - i {
                next[i + j] += acc[i] * u[j];
            }
        }
        next[0] += gk;
        acc = next;
    }
    acc
}

/// Curve diameter proxy: largest distance from the sample centroid.
fn curve_size(curve: &[Complex64]) -> f64 {
    let c = curve.iter().sum::<Complex64>() / curve.len() as f64;
    curve.iter().map(|z| (z - c).norm()).fold(0.0, f64::max)
}

/// Winding number of a sampled closed curve about `p`.
fn discrete_winding(curve: &[Complex64], p: Complex64) -> Result<i32> {
    let mut total = 0.0;
    for (k, &z) in curve.iter().enumerate() {
        let next = curve[(k + 1) % curve.len()];
        let step = ((next - p) / (z - p)).arg();
        if step.abs() > PI / 2.0 {
            return Err(Error::NotAnalytic(format!("contour image is too coarse to certify winding about {p}")));
        }
        total += step;
    }
    Ok((total / (2.0 * PI)).round() as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64, tol: f64) {
        assert!((a - b).norm() <= tol * (1.0 + b.norm()), "{a} vs {b}");
    }

    #[test]
    fn parse_examples() {
        let f = HoloFun::parse("poly:1,0,2").unwrap();
        close(f.eval(c64(2.0, 0.0)).unwrap(), c64(9.0, 0.0), 0.0);
        assert_eq!(HoloFun::parse("exp").unwrap(), HoloFun::exp());
        assert_eq!(HoloFun::parse("exp:3").unwrap(), HoloFun::Exp(c64(3.0, 0.0)));
        let r = HoloFun::parse("rat:1/−3,1").unwrap();
        close(r.eval(c64(5.0, 0.0)).unwrap(), c64(0.5, 0.0), 1e-15);
        let s = HoloFun::parse("series:r=2:1,1,0.5").unwrap();
        assert_eq!(s.series_radius(), Some(2.0));
        let c = HoloFun::parse("compose:exp|poly:0,0,1").unwrap();
        close(c.eval(c64(2.0, 0.0)).unwrap(), c64(4f64.exp(), 0.0), 1e-15);
        let nested = HoloFun::parse("compose:compose:exp|poly:1,1|poly:0,2").unwrap();
        close(nested.eval(c64(1.0, 0.0)).unwrap(), c64(3f64.exp(), 0.0), 1e-15);
        assert!(HoloFun::parse("log").is_err());
        assert!(HoloFun::parse("rat:1/0").is_err());
    }

    #[test]
    fn complex_numbers_parse() {
        assert_eq!(parse_complex("2-0.5i").unwrap(), c64(2.0, -0.5));
        assert_eq!(parse_complex("-i").unwrap(), c64(0.0, -1.0));
        assert_eq!(parse_complex("1e-3+2e+1i").unwrap(), c64(1e-3, 20.0));
        assert_eq!(parse_complex("−4").unwrap(), c64(-4.0, 0.0));
        assert!(parse_complex("x").is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in ["poly:1,0,2", "exp", "exp:0.5+1i", "rat:1/-3,1", "series:r=2:1,1", "compose:exp|poly:0,0,1", "mul:exp|id"] {
            let f = HoloFun::parse(s).unwrap();
            assert_eq!(HoloFun::parse(&f.to_string()).unwrap(), f, "{s}");
        }
    }

    #[test]
    fn taylor_jets_match_closed_forms() {
        let z = c64(0.3, -0.7);
        let e = HoloFun::Exp(c64(2.0, 0.0)).taylor(z, 6).unwrap();
        let mut fact = 1.0;
        for (k, c) in e.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            close(*c, (c64(2.0, 0.0) * z).exp() * 2f64.powi(k as i32) / fact, 1e-14);
        }
        // 1/(z + h − a) = Σ (−1)ᵏ hᵏ/(z − a)^{k+1}
        let a = c64(2.0, 1.0);
        let r = HoloFun::pole(a).taylor(z, 8).unwrap();
        for (k, c) in r.iter().enumerate() {
            close(*c, (z - a).inv() * (-(z - a).inv()).powu(k as u32), 1e-13);
        }
        let p = HoloFun::Poly(vec![c64(1.0, 0.0), c64(-2.0, 0.0), c64(0.0, 0.0), c64(3.0, 0.0)]).taylor(z, 5).unwrap();
        close(p[1], c64(-2.0, 0.0) + z * z * 9.0, 1e-14);
        close(p[3], c64(3.0, 0.0), 0.0);
        assert_eq!(p[4], c64(0.0, 0.0));
    }

    #[test]
    fn composition_and_product_jets() {
        // exp(λ²) at z: derivative 2z·exp(z²)
        let f = HoloFun::compose(HoloFun::exp(), HoloFun::Poly(vec![c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]));
        let z = c64(0.4, 0.2);
        let jet = f.taylor(z, 2).unwrap();
        close(jet[1], z * 2.0 * (z * z).exp(), 1e-14);
        close(jet[2] * 2.0, (z * z * 4.0 + 2.0) * (z * z).exp(), 1e-13);
        let g = HoloFun::product(HoloFun::exp(), HoloFun::identity());
        close(g.derivative(z, 1).unwrap(), (z + 1.0) * z.exp(), 1e-14);
        assert_abs_diff_eq!(g.derivative(z, 20).unwrap().re, ((z + 20.0) * z.exp()).re, epsilon = 1e-9);
    }

    #[test]
    fn analyticity_against_contour() {
        let c = Contour::circle(c64(0.0, 0.0), 1.0, 64).unwrap();
        assert!(HoloFun::exp().check_analytic(&c).is_ok());
        assert!(HoloFun::pole(c64(5.0, 0.0)).check_analytic(&c).is_ok());
        assert!(matches!(HoloFun::pole(c64(0.5, 0.0)).check_analytic(&c), Err(Error::NotAnalytic(_))));
        assert!(HoloFun::pole(c64(1.01, 0.0)).check_analytic(&c).is_err());
        let s = HoloFun::power_series(vec![c64(1.0, 0.0)], 1.5).unwrap();
        assert!(s.check_analytic(&c).is_ok());
        let s = HoloFun::power_series(vec![c64(1.0, 0.0)], 1.0).unwrap();
        assert!(s.check_analytic(&c).is_err());
        // 1/(λ − 2) ∘ 3λ: the image of the unit circle encloses 2
        let outer = HoloFun::pole(c64(2.0, 0.0));
        let bad = HoloFun::compose(outer.clone(), HoloFun::Poly(vec![c64(0.0, 0.0), c64(3.0, 0.0)]));
        assert!(bad.check_analytic(&c).is_err());
        let good = HoloFun::compose(outer, HoloFun::Poly(vec![c64(0.0, 0.0), c64(0.5, 0.0)]));
        assert!(good.check_analytic(&c).is_ok());
    }

    proptest! {
        #[test]
        fn poly_taylor_reassembles(coeffs in prop::collection::vec(-3.0f64..3.0, 1..7), zr in -2.0f64..2.0, h in -0.5f64..0.5) {
            let c: Vec<Complex64> = coeffs.iter().map(|&x| c64(x, 0.0)).collect();
            let jet = poly_taylor(&c, c64(zr, 0.0), c.len());
            let shifted: Complex64 = jet.iter().enumerate().map(|(k, a)| a * h.powi(k as i32)).sum();
            let direct = poly::eval(&c, c64(zr + h, 0.0));
            prop_assert!((shifted - direct).norm() <= 1e-11 * (1.0 + direct.norm()));
        }

        #[test]
        fn rational_jet_inverts_denominator(a in -3.0f64..3.0, z in 3.5f64..6.0) {
            // (λ − a)·1/(λ − a) = 1 as truncated series
            let r = HoloFun::pole(c64(a, 0.0)).taylor(c64(z, 0.0), 10).unwrap();
            let d = [c64(z - a, 0.0), c64(1.0, 0.0)];
            for k in 0..=10 {
                let prod = d[0] * r[k] + if k > 0 { d[1] * r[k - 1] } else { c64(0.0, 0.0) };
                let want = if k == 0 { 1.0 } else { 0.0 };
                prop_assert!((prod - c64(want, 0.0)).norm() < 1e-12);
            }
        }
    }
}
