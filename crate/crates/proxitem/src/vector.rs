use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense real vector with a fixed dimension. Every constructor and every
/// arithmetic helper maintains the invariant that all entries are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Builds a vector, rejecting NaN and infinite entries.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        for (index, &value) in entries.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteEntry { index, value });
            }
        }
        Ok(Vector(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dot: dimension mismatch");
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `a * self`
    pub fn scaled(&self, a: f64) -> Vector {
        self.map(|v| a * v)
    }

    /// `self + other`
    pub fn add(&self, other: &Vector) -> Vector {
        self.zip_with(other, |a, b| a + b)
    }

    /// `self - other`
    pub fn sub(&self, other: &Vector) -> Vector {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + a * other`
    pub fn add_scaled(&self, a: f64, other: &Vector) -> Vector {
        self.zip_with(other, |x, y| x + a * y)
    }

    /// `a * x + b * y`
    pub fn lin_comb(a: f64, x: &Vector, b: f64, y: &Vector) -> Vector {
        x.zip_with(y, |xv, yv| a * xv + b * yv)
    }

    pub fn distance_sq(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "distance_sq: dimension mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        self.distance_sq(other).sqrt()
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        let out: Vec<f64> = self.0.iter().map(|&v| f(v)).collect();
        debug_assert!(out.iter().all(|v| v.is_finite()), "non-finite result");
        Vector(out)
    }

    fn zip_with(&self, other: &Vector, f: impl Fn(f64, f64) -> f64) -> Vector {
        assert_eq!(self.dim(), other.dim(), "zip_with: dimension mismatch");
        let out: Vec<f64> = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| f(a, b))
            .collect();
        debug_assert!(out.iter().all(|v| v.is_finite()), "non-finite result");
        Vector(out)
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(entries: Vec<f64>) -> Result<Self> {
        Vector::new(entries)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Vec<f64> {
        v.0
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}
