//! Cauchy domains built from circles, and trapezoidal quadrature on them.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::Spectrum;

/// Samples per circle used to certify that a circle lies inside the domain.
const CERTIFY_SAMPLES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

/// A union of open disks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Domain {
    disks: Vec<Disk>,
}

impl Domain {
    pub fn new(disks: Vec<Disk>) -> Result<Self> {
        if disks.is_empty() {
            return Err(Error::invalid("a domain needs at least one disk"));
        }
        for d in &disks {
            if !(d.radius > 0.0 && d.radius.is_finite()) || !d.center.is_finite() {
                return Err(Error::invalid(format!("invalid disk radius {}", d.radius)));
            }
        }
        Ok(Self { disks })
    }

    pub fn disk(center: Complex64, radius: f64) -> Result<Self> {
        Self::new(vec![Disk { center, radius }])
    }

    /// A disk about the origin reaching `factor·max|z| + 1` past the given points.
    pub fn around(points: &[Complex64], factor: f64) -> Self {
        let reach = points.iter().map(|z| z.norm()).fold(0.0, f64::max);
        Self { disks: vec![Disk { center: Complex64::new(0.0, 0.0), radius: factor * reach + 1.0 }] }
    }

    pub fn disks(&self) -> &[Disk] {
        &self.disks
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.disks.iter().any(|d| (z - d.center).norm() < d.radius)
    }

    /// A lower bound for `dist(z, ∁D)`, exact for a single disk.
    pub fn complement_distance(&self, z: Complex64) -> f64 {
        self.disks
            .iter()
            .map(|d| d.radius - (z - d.center).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
    /// `+1` counter-clockwise, `-1` clockwise.
    pub orientation: i8,
    pub nodes: usize,
}

impl Circle {
    pub fn new(center: Complex64, radius: f64, nodes: usize) -> Result<Self> {
        let c = Self { center, radius, orientation: 1, nodes };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) || !self.center.is_finite() {
            return Err(Error::invalid(format!("invalid circle radius {}", self.radius)));
        }
        if self.orientation != 1 && self.orientation != -1 {
            return Err(Error::invalid("orientation must be +1 or -1"));
        }
        if self.nodes < 2 {
            return Err(Error::invalid("a circle needs at least two nodes"));
        }
        Ok(())
    }

    pub fn point(&self, theta: f64) -> Complex64 {
        self.center + Complex64::from_polar(self.radius, theta)
    }

    /// Signed distance: negative inside.
    pub fn signed_distance(&self, z: Complex64) -> f64 {
        (z - self.center).norm() - self.radius
    }
}

/// A quadrature node with `(1/2πi)·dλ` folded into the weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub lambda: Complex64,
    pub weight: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contour {
    circles: Vec<Circle>,
    separation: f64,
}

impl Contour {
    /// Circles must be pairwise disjoint.
    pub fn new(circles: Vec<Circle>, separation: f64) -> Result<Self> {
        if circles.is_empty() {
            return Err(Error::invalid("a contour needs at least one circle"));
        }
        for c in &circles {
            c.validate()?;
        }
        for (i, a) in circles.iter().enumerate() {
            for b in &circles[i + 1..] {
                let d = (a.center - b.center).norm();
                if d <= a.radius + b.radius && d >= (a.radius - b.radius).abs() {
                    return Err(Error::InfeasibleContour("circles intersect".into()));
                }
            }
        }
        if !(separation > 0.0) {
            return Err(Error::InfeasibleContour("separation must be positive".into()));
        }
        Ok(Self { circles, separation })
    }

    pub fn circle(center: Complex64, radius: f64, nodes: usize) -> Result<Self> {
        Self::new(vec![Circle::new(center, radius, nodes)?], radius)
    }

    pub fn circles(&self) -> &[Circle] {
        &self.circles
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    /// `L(Γ)`.
    pub fn length(&self) -> f64 {
        self.circles.iter().map(|c| 2.0 * PI * c.radius).sum()
    }

    pub fn total_nodes(&self) -> usize {
        self.circles.iter().map(|c| c.nodes).sum()
    }

    pub fn with_nodes(&self, nodes: usize) -> Self {
        let mut out = self.clone();
        for c in &mut out.circles {
            c.nodes = nodes;
        }
        out
    }

    pub fn doubled(&self) -> Self {
        let mut out = self.clone();
        for c in &mut out.circles {
            c.nodes *= 2;
        }
        out
    }

    pub fn winding_number(&self, z: Complex64) -> Result<i32> {
        let mut w = 0;
        for c in &self.circles {
            let d = c.signed_distance(z);
            if d.abs() <= 1e-12 {
                return Err(Error::invalid(format!("point {z} lies on the contour")));
            }
            if d < 0.0 {
                w += c.orientation as i32;
            }
        }
        Ok(w)
    }

    /// Smallest distance from `z` to the contour.
    pub fn distance(&self, z: Complex64) -> f64 {
        self.circles.iter().map(|c| c.signed_distance(z).abs()).fold(f64::INFINITY, f64::min)
    }

    /// Trapezoidal nodes, circle by circle, in increasing angle.
    pub fn quadrature_nodes(&self) -> Vec<Node> {
        self.circles.iter().flat_map(|c| circle_nodes(c, c.nodes, 0, 1)).collect()
    }

    /// Nodes added when every circle doubles its count; with these,
    /// `S_{2N} = S_N/2 + Σ new`.
    pub fn refinement_nodes(&self) -> Vec<Node> {
        self.circles.iter().flat_map(|c| circle_nodes(c, 2 * c.nodes, 1, 2)).collect()
    }
}

fn circle_nodes(c: &Circle, n: usize, start: usize, step: usize) -> impl Iterator<Item = Node> + '_ {
    let scale = c.orientation as f64 * c.radius / n as f64;
    (start..n).step_by(step).map(move |j| {
        let e = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
        Node { lambda: c.center + e * c.radius, weight: e * scale }
    })
}

/// Single-linkage clusters of a point set: indices, grouped, ordered by
/// their smallest index.
pub fn cluster_points(points: &[Complex64], gap: f64) -> Result<Vec<Vec<usize>>> {
    if !(gap > 0.0) {
        return Err(Error::invalid("cluster gap must be positive"));
    }
    let n = points.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (points[i] - points[j]).norm() < gap {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = root(&mut label, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    Ok(groups)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    /// Indices into the clustered eigenvalue list.
    pub indices: Vec<usize>,
    pub points: Vec<Complex64>,
}

pub fn cluster_spectrum(s: &Spectrum, gap: f64) -> Result<Vec<Cluster>> {
    Ok(cluster_points(&s.eigenvalues, gap)?
        .into_iter()
        .map(|indices| Cluster { points: indices.iter().map(|&i| s.eigenvalues[i]).collect(), indices })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourOptions {
    /// Points of `K` closer than this share a circle; `None` scales with `K`.
    pub cluster_gap: Option<f64>,
    pub nodes: usize,
    pub min_separation: f64,
}

impl Default for ContourOptions {
    fn default() -> Self {
        Self { cluster_gap: None, nodes: 128, min_separation: 1e-8 }
    }
}

/// Bounding-box centre and the radius of the smallest disk about it holding `pts`.
fn hull(pts: &[Complex64]) -> (Complex64, f64) {
    let (mut lo, mut hi) = (pts[0], pts[0]);
    for z in pts {
        lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
    }
    let c = (lo + hi) * 0.5;
    let extent = pts.iter().map(|z| (z - c).norm()).fold(0.0, f64::max);
    (c, extent)
}

pub fn build_cauchy_contour(k: &[Complex64], excluded: &[Complex64], d: &Domain) -> Result<Contour> {
    build_cauchy_contour_with(k, excluded, d, ContourOptions::default())
}

/// Circles about clusters of `K` with winding number one on `K`, zero on
/// `excluded`, lying inside `D`.
pub fn build_cauchy_contour_with(k: &[Complex64], excluded: &[Complex64], d: &Domain, opts: ContourOptions) -> Result<Contour> {
    if k.is_empty() {
        return Err(Error::invalid("the enclosed set is empty"));
    }
    if opts.nodes < 8 {
        return Err(Error::invalid("at least 8 nodes per circle are required"));
    }
    for &z in k {
        if !d.contains(z) {
            return Err(Error::precondition(format!("point {z} lies outside the domain")));
        }
        if let Some(e) = excluded.iter().find(|e| (*e - z).norm() <= opts.min_separation) {
            return Err(Error::InfeasibleContour(format!("excluded point {e} coincides with {z}")));
        }
    }
    let scale = k.iter().chain(excluded).map(|z| z.norm()).fold(1.0, f64::max);
    let gap = opts.cluster_gap.unwrap_or(0.05 * scale);
    let mut groups = cluster_points(k, gap)?;

    loop {
        let hulls: Vec<(Complex64, f64)> =
            groups.iter().map(|g| hull(&g.iter().map(|&i| k[i]).collect::<Vec<_>>())).collect();
        let mut radii = Vec::with_capacity(groups.len());
        let mut merge: Option<(usize, usize)> = None;
        'outer: for (a, &(c, extent)) in hulls.iter().enumerate() {
            let mut margin = f64::INFINITY;
            for (b, g) in groups.iter().enumerate() {
                if a == b {
                    continue;
                }
                let dist = g.iter().map(|&i| (k[i] - c).norm()).fold(f64::INFINITY, f64::min) - extent;
                if dist <= 0.0 {
                    merge = Some((a, b));
                    break 'outer;
                }
                margin = margin.min(dist / 3.0);
            }
            for &e in excluded {
                let dist = (e - c).norm() - extent;
                if dist <= opts.min_separation {
                    return Err(Error::InfeasibleContour(format!("excluded point {e} lies within the hull of a cluster")));
                }
                margin = margin.min(dist / 2.0);
            }
            let to_boundary = d.complement_distance(c) - extent;
            margin = margin.min(to_boundary / 2.0);
            if !(margin > opts.min_separation) {
                return Err(Error::InfeasibleContour(format!(
                    "margin {margin:.3e} around cluster at {c} is below the minimum separation"
                )));
            }
            radii.push(extent + margin);
        }
        if merge.is_none() {
            'pairs: for a in 0..hulls.len() {
                for b in a + 1..hulls.len() {
                    if (hulls[a].0 - hulls[b].0).norm() <= radii[a] + radii[b] {
                        merge = Some((a, b));
                        break 'pairs;
                    }
                }
            }
        }
        if let Some((a, b)) = merge {
            let (lo, hi) = (a.min(b), a.max(b));
            let moved = groups.remove(hi);
            groups[lo].extend(moved);
            continue;
        }
        let circles: Vec<Circle> = hulls
            .iter()
            .zip(&radii)
            .map(|(&(center, _), &radius)| Circle { center, radius, orientation: 1, nodes: opts.nodes })
            .collect();
        let separation = certify(&circles, k, excluded, d)?;
        if !(separation > opts.min_separation) {
            return Err(Error::InfeasibleContour(format!("certified separation {separation:.3e} is too small")));
        }
        return Contour::new(circles, separation);
    }
}

/// Minimum distance from the circles to `K ∪ excluded ∪ ∁D`, with winding checks.
fn certify(circles: &[Circle], k: &[Complex64], excluded: &[Complex64], d: &Domain) -> Result<f64> {
    let trial = Contour { circles: circles.to_vec(), separation: 1.0 };
    let mut sep = f64::INFINITY;
    for &z in k {
        if trial.winding_number(z)? != 1 {
            return Err(Error::InfeasibleContour(format!("{z} is not enclosed once")));
        }
        sep = sep.min(trial.distance(z));
    }
    for &z in excluded {
        if trial.winding_number(z)? != 0 {
            return Err(Error::InfeasibleContour(format!("excluded point {z} is enclosed")));
        }
        sep = sep.min(trial.distance(z));
    }
    for c in circles {
        // neighbouring samples are at most one chord apart
        let chord = 2.0 * PI * c.radius / CERTIFY_SAMPLES as f64;
        let inner = (0..CERTIFY_SAMPLES)
            .map(|j| d.complement_distance(c.point(2.0 * PI * j as f64 / CERTIFY_SAMPLES as f64)))
            .fold(f64::INFINITY, f64::min)
            - chord / 2.0;
        if !(inner > 0.0) {
            return Err(Error::InfeasibleContour("circle leaves the domain".into()));
        }
        sep = sep.min(inner);
    }
    Ok(sep)
}
