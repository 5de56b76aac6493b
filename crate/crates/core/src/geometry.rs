//! Optimal rigid superposition (Kabsch) and RMSD.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::pdbio::CaTrace;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("length mismatch: {reference} vs {mobile}")]
    LengthMismatch { reference: usize, mobile: usize },
    #[error("cannot superpose empty point sets")]
    Empty,
}

/// Proper rigid motion mapping the mobile set onto the reference:
/// `x -> rotation * x + translation`.
#[derive(Debug, Clone, PartialEq)]
pub struct Superposition {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
    pub rmsd: f64,
}

impl Superposition {
    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[0][0] * p[0] + r[0][1] * p[1] + r[0][2] * p[2] + t[0],
            r[1][0] * p[0] + r[1][1] * p[1] + r[1][2] * p[2] + t[1],
            r[2][0] * p[0] + r[2][1] * p[1] + r[2][2] * p[2] + t[2],
        ]
    }
}

/// Euclidean (L2) norm.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs() * x.abs()).sum::<f64>().sqrt()
}

fn centroid(points: &[[f64; 3]]) -> Vector3<f64> {
    let n = points.len() as f64;
    points
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + Vector3::from(*p))
        / n
}

/// Kabsch superposition of `mobile` onto `reference` over proper rotations.
pub fn superpose_points(reference: &[[f64; 3]], mobile: &[[f64; 3]]) -> Result<Superposition, GeometryError> {
    if reference.len() != mobile.len() {
        return Err(GeometryError::LengthMismatch {
            reference: reference.len(),
            mobile: mobile.len(),
        });
    }
    let m = reference.len();
    if m == 0 {
        return Err(GeometryError::Empty);
    }

    let cr = centroid(reference);
    let cm = centroid(mobile);

    // H = sum (mobile_k - cm)(reference_k - cr)^T
    let mut h = Matrix3::<f64>::zeros();
    for (r, p) in reference.iter().zip(mobile) {
        let a = Vector3::from(*p) - cm;
        let b = Vector3::from(*r) - cr;
        h += a * b.transpose();
    }

    let svd = h.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => unreachable!("svd computed with u and v"),
    };
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let correction = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, if d < 0.0 { -1.0 } else { 1.0 }));
    let rot = v * correction * u.transpose();
    let trans = cr - rot * cm;

    let sum_sq: f64 = reference
        .iter()
        .zip(mobile)
        .map(|(r, p)| (Vector3::from(*r) - (rot * Vector3::from(*p) + trans)).norm_squared())
        .sum();
    let rmsd = (sum_sq / m as f64).max(0.0).sqrt();

    let mut rotation = [[0.0; 3]; 3];
    for (i, row) in rotation.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = rot[(i, j)];
        }
    }
    Ok(Superposition {
        rotation,
        translation: [trans.x, trans.y, trans.z],
        rmsd,
    })
}

pub fn superpose(reference: &CaTrace, mobile: &CaTrace) -> Result<Superposition, GeometryError> {
    let a: Vec<[f64; 3]> = reference.positions().collect();
    let b: Vec<[f64; 3]> = mobile.positions().collect();
    superpose_points(&a, &b)
}

pub fn rmsd(reference: &CaTrace, mobile: &CaTrace) -> Result<f64, GeometryError> {
    superpose(reference, mobile).map(|s| s.rmsd)
}

pub fn rmsd_points(reference: &[[f64; 3]], mobile: &[[f64; 3]]) -> Result<f64, GeometryError> {
    superpose_points(reference, mobile).map(|s| s.rmsd)
}
