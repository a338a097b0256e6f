//! Signed linear algebra of the ambient space and the manifold constraints.
//!
//! Positions and momenta live in R³ (sphere, κ > 0), in Minkowski space M³
//! (hyperboloid, κ < 0) or in R⁴ (3-sphere, κ > 0). The last component is
//! always the pole axis: `(x, y, z)` in three dimensions, `(u, x, y, z)` in
//! four. The signature σ only ever weights that last component.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("curvature must be nonzero")]
    ZeroCurvature,
    #[error("curvature must be finite, got {0}")]
    NonFiniteCurvature(f64),
    #[error("ambient dimension must be 3 or 4, got {0}")]
    BadDimension(usize),
    #[error("the 4-dimensional embedding is only defined for positive curvature (got κ = {0})")]
    FourDimNeedsPositiveCurvature(f64),
    #[error("vector is not renormalizable onto the manifold: κ q⊙q = {0}")]
    NonRenormalizable(f64),
}

/// σ = +1 for κ > 0, σ = −1 for κ < 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Signature {
    Positive,
    Negative,
}

impl Signature {
    pub fn of_curvature(kappa: f64) -> Self {
        if kappa > 0.0 {
            Signature::Positive
        } else {
            Signature::Negative
        }
    }

    #[inline]
    pub fn sigma(self) -> f64 {
        match self {
            Signature::Positive => 1.0,
            Signature::Negative => -1.0,
        }
    }
}

/// A point or covector of the ambient space, 3 or 4 components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddedVector {
    c: [f64; 4],
    dim: usize,
}

impl EmbeddedVector {
    pub fn new3(x: f64, y: f64, z: f64) -> Self {
        Self { c: [x, y, z, 0.0], dim: 3 }
    }

    pub fn new4(u: f64, x: f64, y: f64, z: f64) -> Self {
        Self { c: [u, x, y, z], dim: 4 }
    }

    pub fn zero(dim: usize) -> Self {
        assert!(dim == 3 || dim == 4, "ambient dimension must be 3 or 4");
        Self { c: [0.0; 4], dim }
    }

    pub fn from_slice(s: &[f64]) -> Result<Self, GeometryError> {
        match s.len() {
            3 => Ok(Self::new3(s[0], s[1], s[2])),
            4 => Ok(Self::new4(s[0], s[1], s[2], s[3])),
            n => Err(GeometryError::BadDimension(n)),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.c[..self.dim]
    }

    /// Pole-axis component (`z`).
    #[inline]
    pub fn last(&self) -> f64 {
        self.c[self.dim - 1]
    }

    /// Components orthogonal to the pole axis.
    #[inline]
    pub fn head(&self) -> &[f64] {
        &self.c[..self.dim - 1]
    }

    pub fn scale(&self, f: f64) -> Self {
        let mut out = *self;
        out.c.iter_mut().for_each(|v| *v *= f);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = *self;
        for k in 0..4 {
            out.c[k] += other.c[k];
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Plain Euclidean norm of the components (not the signed product).
    pub fn euclidean_norm(&self) -> f64 {
        self.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl std::ops::Index<usize> for EmbeddedVector {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.as_slice()[k]
    }
}

/// The manifold M²_κ ⊂ R³/M³ or S³_κ ⊂ R⁴.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSpace {
    kappa: f64,
    dim: usize,
}

impl CurvatureSpace {
    /// `dim` is the ambient dimension (3 or 4).
    pub fn new(kappa: f64, dim: usize) -> Result<Self, GeometryError> {
        if !kappa.is_finite() {
            return Err(GeometryError::NonFiniteCurvature(kappa));
        }
        if kappa == 0.0 {
            return Err(GeometryError::ZeroCurvature);
        }
        if dim != 3 && dim != 4 {
            return Err(GeometryError::BadDimension(dim));
        }
        if dim == 4 && kappa < 0.0 {
            return Err(GeometryError::FourDimNeedsPositiveCurvature(kappa));
        }
        Ok(Self { kappa, dim })
    }

    #[inline]
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn signature(&self) -> Signature {
        Signature::of_curvature(self.kappa)
    }

    /// κ^{-1/2} for spheres, `None` for hyperboloids.
    pub fn radius(&self) -> Option<f64> {
        (self.kappa > 0.0).then(|| self.kappa.powf(-0.5))
    }

    /// The pole `(0, …, 0, |κ|^{-1/2})`: north pole of the sphere or vertex of the hyperboloid.
    pub fn pole(&self) -> EmbeddedVector {
        let mut v = EmbeddedVector::zero(self.dim);
        v.c[self.dim - 1] = self.kappa.abs().powf(-0.5);
        v
    }
}

/// a ⊙ b = a_x b_x + a_y b_y + σ a_z b_z. In four dimensions the product is
/// Euclidean (4-D embeddings only exist for κ > 0, where σ = +1).
pub fn sdot(a: &EmbeddedVector, b: &EmbeddedVector, s: Signature) -> f64 {
    assert_eq!(a.dim, b.dim, "sdot: dimension mismatch");
    let sigma = if a.dim == 4 { 1.0 } else { s.sigma() };
    sdot_slice(a.as_slice(), b.as_slice(), sigma)
}

/// a ⊗ b = (a_y b_z − a_z b_y, a_z b_x − a_x b_z, σ(a_x b_y − a_y b_x)).
pub fn scross(a: &EmbeddedVector, b: &EmbeddedVector, s: Signature) -> EmbeddedVector {
    assert!(
        a.dim == 3 && b.dim == 3,
        "scross is only defined for 3-component vectors"
    );
    let [ax, ay, az, _] = a.c;
    let [bx, by, bz, _] = b.c;
    EmbeddedVector::new3(
        ay * bz - az * by,
        az * bx - ax * bz,
        s.sigma() * (ax * by - ay * bx),
    )
}

/// Standard Euclidean cross product, components in `(u, x, y)` order.
pub fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// κ q⊙q − 1.
pub fn constraint_residual(q: &EmbeddedVector, space: &CurvatureSpace) -> f64 {
    space.kappa * sdot(q, q, space.signature()) - 1.0
}

/// q⊙p.
pub fn tangency_residual(q: &EmbeddedVector, p: &EmbeddedVector, space: &CurvatureSpace) -> f64 {
    sdot(q, p, space.signature())
}

/// Radial rescaling of `q` onto the manifold followed by removal of the
/// normal component of `p`.
pub fn renormalize(
    q: &EmbeddedVector,
    p: &EmbeddedVector,
    space: &CurvatureSpace,
) -> Result<(EmbeddedVector, EmbeddedVector), GeometryError> {
    let mut qq = *q;
    let mut pp = *p;
    let sigma = sigma_for(space);
    renormalize_slice(
        &mut qq.c[..space.dim],
        &mut pp.c[..space.dim],
        space.kappa,
        sigma,
    )?;
    Ok((qq, pp))
}

/// κ q_i⊙q_j.
pub fn mutual_product(qi: &EmbeddedVector, qj: &EmbeddedVector, space: &CurvatureSpace) -> f64 {
    space.kappa * sdot(qi, qj, space.signature())
}

#[inline]
pub(crate) fn sigma_for(space: &CurvatureSpace) -> f64 {
    if space.dim == 4 {
        1.0
    } else {
        space.signature().sigma()
    }
}

/// Signed product on raw components: Euclidean except the last term, weighted by `sigma`.
#[inline]
pub(crate) fn sdot_slice(a: &[f64], b: &[f64], sigma: f64) -> f64 {
    let d = a.len();
    debug_assert_eq!(d, b.len());
    let mut acc = 0.0;
    for k in 0..d - 1 {
        acc += a[k] * b[k];
    }
    acc + sigma * a[d - 1] * b[d - 1]
}

pub(crate) fn renormalize_slice(
    q: &mut [f64],
    p: &mut [f64],
    kappa: f64,
    sigma: f64,
) -> Result<(), GeometryError> {
    let norm = kappa * sdot_slice(q, q, sigma);
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(GeometryError::NonRenormalizable(norm));
    }
    let f = norm.sqrt().recip();
    q.iter_mut().for_each(|v| *v *= f);
    let c = kappa * sdot_slice(q, p, sigma);
    for (pk, qk) in p.iter_mut().zip(q.iter()) {
        *pk -= c * qk;
    }
    Ok(())
}

/// Orthogonal map of R^d (d = 3 or 4) stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    m: [[f64; 4]; 4],
    dim: usize,
}

impl Rotation {
    pub fn identity(dim: usize) -> Self {
        let mut m = [[0.0; 4]; 4];
        for (k, row) in m.iter_mut().enumerate() {
            row[k] = 1.0;
        }
        Self { m, dim }
    }

    /// A proper rotation taking the direction of `point` to the pole axis.
    ///
    /// Built as the product of a Householder reflection (point → pole axis)
    /// and a reflection of the first axis, so the determinant is +1 in every
    /// dimension. Only meaningful for Euclidean ambient spaces (κ > 0).
    pub fn to_pole(point: &EmbeddedVector) -> Self {
        let d = point.dim;
        let norm = point.euclidean_norm();
        assert!(norm > 0.0, "cannot rotate the zero vector to the pole");
        let a: Vec<f64> = point.as_slice().iter().map(|v| v / norm).collect();
        let mut e = vec![0.0; d];
        e[d - 1] = 1.0;
        let w: Vec<f64> = a.iter().zip(&e).map(|(ai, ei)| ai - ei).collect();
        let ww: f64 = w.iter().map(|v| v * v).sum();
        if ww < 1e-30 {
            return Self::identity(d);
        }
        let mut m = [[0.0; 4]; 4];
        for i in 0..d {
            for j in 0..d {
                let delta = if i == j { 1.0 } else { 0.0 };
                m[i][j] = delta - 2.0 * w[i] * w[j] / ww;
            }
        }
        // Negate the first row: composes with a reflection that fixes the pole axis.
        for j in 0..d {
            m[0][j] = -m[0][j];
        }
        Self { m, dim: d }
    }

    pub fn apply(&self, v: &EmbeddedVector) -> EmbeddedVector {
        assert_eq!(v.dim, self.dim, "rotation dimension mismatch");
        let mut out = EmbeddedVector::zero(self.dim);
        for i in 0..self.dim {
            out.c[i] = (0..self.dim).map(|j| self.m[i][j] * v.c[j]).sum();
        }
        out
    }
}
