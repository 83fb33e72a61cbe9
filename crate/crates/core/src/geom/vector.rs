use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 6;

/// Fixed-capacity point/vector in R^d, `1 <= d <= MAX_DIM`. `Copy`, no heap.
#[derive(Clone, Copy, PartialEq)]
pub struct Vector {
    coords: [f64; MAX_DIM],
    dim: u8,
}

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} out of range");
        Self { coords: [0.0; MAX_DIM], dim: dim as u8 }
    }

    pub fn from_slice(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() || xs.len() > MAX_DIM {
            return Err(Error::Dimension { expected: MAX_DIM, found: xs.len() });
        }
        let mut v = Self::zeros(xs.len());
        v.coords[..xs.len()].copy_from_slice(xs);
        Ok(v)
    }

    /// Unit vector e_i.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.coords[i] = 1.0;
        v
    }

    pub fn new2(x: f64, y: f64) -> Self {
        let mut v = Self::zeros(2);
        v.coords[0] = x;
        v.coords[1] = y;
        v
    }

    pub fn new3(x: f64, y: f64, z: f64) -> Self {
        let mut v = Self::zeros(3);
        v.coords[..3].copy_from_slice(&[x, y, z]);
        v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = 0.0;
        for i in 0..self.dim() {
            s += self.coords[i] * other.coords[i];
        }
        s
    }

    #[inline]
    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        (*self - *other).norm()
    }

    pub fn scale(&self, s: f64) -> Vector {
        let mut v = *self;
        for c in v.as_mut_slice() {
            *c *= s;
        }
        v
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &Vector) -> Vector {
        let mut v = *self;
        for i in 0..self.dim() {
            v.coords[i] += s * other.coords[i];
        }
        v
    }

    pub fn max_abs(&self) -> f64 {
        self.as_slice().iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.as_slice().to_vec()
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for Vector {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.as_mut_slice()[i]
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(self, rhs: Vector) -> Vector {
        self.axpy(1.0, &rhs)
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(self, rhs: Vector) -> Vector {
        self.axpy(-1.0, &rhs)
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.scale(-1.0)
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    fn mul(self, s: f64) -> Vector {
        self.scale(s)
    }
}

impl Serialize for Vector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let xs = Vec::<f64>::deserialize(d)?;
        Vector::from_slice(&xs).map_err(serde::de::Error::custom)
    }
}

/// A point of the unit sphere S^{d-1}.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Direction(Vector);

impl Direction {
    /// Normalizes `v`; fails on the zero vector.
    pub fn new(v: Vector) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidParameter(format!("cannot normalize {v:?}")));
        }
        Ok(Self(v.scale(1.0 / n)))
    }

    /// Wraps a vector already known to be unit length.
    pub(crate) fn new_unchecked(v: Vector) -> Self {
        debug_assert!((v.norm() - 1.0).abs() < 1e-9, "not unit: {v:?}");
        Self(v)
    }

    pub fn from_angle(theta: f64) -> Self {
        Self(Vector::new2(theta.cos(), theta.sin()))
    }

    pub fn axis(dim: usize, i: usize) -> Self {
        Self(Vector::basis(dim, i))
    }

    #[inline]
    pub fn vector(&self) -> &Vector {
        &self.0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    #[inline]
    pub fn dot(&self, v: &Vector) -> f64 {
        self.0.dot(v)
    }

    pub fn negate(&self) -> Self {
        Self(-self.0)
    }
}
