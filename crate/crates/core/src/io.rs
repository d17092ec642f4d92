//! JSON formats. Matrices are stored as separate real and imaginary row
//! arrays; complex scalars as `[re, im]` pairs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calib::{Calibration, DerivedOrigin, DerivedSeminorm, Operator, Seminorm};
use crate::contour::{Circle, Contour, Disk, Domain};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

fn parse_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeminormJson {
    WeightedSup { weights: Vec<f64> },
    /// `p(x) = max_r |g_r · x|`.
    Derived { re: Vec<Vec<f64>>, im: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationJson {
    pub dim: usize,
    pub seminorms: Vec<SeminormJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

fn rows_to_matrix(re: &[Vec<f64>], im: Option<&[Vec<f64>]>, nrows: usize, ncols: usize) -> Result<CMatrix> {
    if re.len() != nrows {
        return Err(Error::DimensionMismatch { expected: nrows, actual: re.len() });
    }
    if let Some(im) = im {
        if im.len() != nrows {
            return Err(Error::DimensionMismatch { expected: nrows, actual: im.len() });
        }
    }
    let mut m = CMatrix::zeros(nrows, ncols);
    for i in 0..nrows {
        if re[i].len() != ncols {
            return Err(Error::DimensionMismatch { expected: ncols, actual: re[i].len() });
        }
        for j in 0..ncols {
            m[(i, j)].re = re[i][j];
        }
        if let Some(im) = im {
            if im[i].len() != ncols {
                return Err(Error::DimensionMismatch { expected: ncols, actual: im[i].len() });
            }
            for j in 0..ncols {
                m[(i, j)].im = im[i][j];
            }
        }
    }
    Ok(m)
}

fn matrix_rows(m: &CMatrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let rows = |f: fn(&Complex64) -> f64| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect();
    (rows(|z| z.re), rows(|z| z.im))
}

pub fn matrix_json(m: &CMatrix) -> MatrixJson {
    let (re, im) = matrix_rows(m);
    MatrixJson { dim: m.nrows(), re, im: Some(im) }
}

pub fn parse_operator(text: &str) -> Result<Operator> {
    let j: MatrixJson = serde_json::from_str(text).map_err(parse_err)?;
    Operator::new(rows_to_matrix(&j.re, j.im.as_deref(), j.dim, j.dim)?)
}

pub fn operator_to_json(t: &Operator) -> String {
    serde_json::to_string(&matrix_json(t.matrix())).expect("plain data serializes")
}

pub fn calibration_json(p: &Calibration) -> CalibrationJson {
    let seminorms = p
        .members()
        .iter()
        .map(|m| match m {
            Seminorm::WeightedSup { weights } => SeminormJson::WeightedSup { weights: weights.clone() },
            Seminorm::Derived(d) => {
                let (re, im) = matrix_rows(d.rows());
                SeminormJson::Derived { re, im }
            }
        })
        .collect();
    CalibrationJson { dim: p.dim(), seminorms }
}

pub fn parse_calibration(text: &str) -> Result<Calibration> {
    let j: CalibrationJson = serde_json::from_str(text).map_err(parse_err)?;
    let members = j
        .seminorms
        .into_iter()
        .map(|s| match s {
            SeminormJson::WeightedSup { weights } => {
                if weights.len() != j.dim {
                    return Err(Error::DimensionMismatch { expected: j.dim, actual: weights.len() });
                }
                Seminorm::weighted(weights)
            }
            SeminormJson::Derived { re, im } => {
                let rows = rows_to_matrix(&re, Some(&im), re.len(), j.dim)?;
                Ok(Seminorm::Derived(DerivedSeminorm::new(rows, DerivedOrigin::PointwiseMax)?))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Calibration::new(members)
}

pub fn calibration_to_json(p: &Calibration) -> String {
    serde_json::to_string(&calibration_json(p)).expect("plain data serializes")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircleJson {
    pub c: [f64; 2],
    pub r: f64,
    #[serde(default = "ccw")]
    pub orient: i8,
    pub nodes: usize,
}

fn ccw() -> i8 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContourJson {
    pub circles: Vec<CircleJson>,
    pub separation: f64,
}

pub fn parse_contour(text: &str) -> Result<Contour> {
    let j: ContourJson = serde_json::from_str(text).map_err(parse_err)?;
    let circles = j
        .circles
        .iter()
        .map(|c| Circle { center: Complex64::new(c.c[0], c.c[1]), radius: c.r, orientation: c.orient, nodes: c.nodes })
        .collect();
    Contour::new(circles, j.separation)
}

pub fn contour_json(c: &Contour) -> ContourJson {
    ContourJson {
        circles: c
            .circles()
            .iter()
            .map(|k| CircleJson { c: [k.center.re, k.center.im], r: k.radius, orient: k.orientation, nodes: k.nodes })
            .collect(),
        separation: c.separation(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiskJson {
    pub c: [f64; 2],
    pub r: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainJson {
    pub disks: Vec<DiskJson>,
}

pub fn parse_domain(text: &str) -> Result<Domain> {
    let j: DomainJson = serde_json::from_str(text).map_err(parse_err)?;
    Domain::new(j.disks.iter().map(|d| Disk { center: Complex64::new(d.c[0], d.c[1]), radius: d.r }).collect())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum LambdasJson {
    Bare(Vec<[f64; 2]>),
    Wrapped { lambdas: Vec<[f64; 2]> },
}

/// Either `[[re, im], …]` or `{"lambdas": [[re, im], …]}`.
pub fn parse_lambdas(text: &str) -> Result<Vec<Complex64>> {
    let j: LambdasJson = serde_json::from_str(text).map_err(parse_err)?;
    let (LambdasJson::Bare(v) | LambdasJson::Wrapped { lambdas: v }) = j;
    Ok(v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
}
