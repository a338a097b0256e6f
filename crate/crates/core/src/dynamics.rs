//! Cotangent force function, its gradient, the Hamiltonian vector field and
//! the first integrals.
//!
//! The pairwise kernel works on flat component slices laid out as
//! `[q_1, …, q_n, p_1, …, p_n]`, each vector occupying `dim` consecutive
//! entries. The same kernel serves the full system (dim 3 or 4, signed
//! product) and the projected literal system (dim 2 or 3, Euclidean product).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    constraint_residual, renormalize, scross, sdot_slice, sigma_for, tangency_residual,
    CurvatureSpace, EmbeddedVector, GeometryError,
};

/// Relative size of σ[(κq_i⊙q_i)(κq_j⊙q_j) − (κq_i⊙q_j)²] below which a pair
/// counts as sitting on the singular set and the force refuses to evaluate.
pub const DENOMINATOR_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("singular configuration: pair(s) {pairs:?} on the singular set")]
    SingularConfiguration { pairs: Vec<(usize, usize)> },
    #[error("angular momentum integrals need a 3-component ambient space")]
    NoCrossProduct,
    #[error("a system needs at least one body")]
    Empty,
    #[error("body {0}: mass must be positive and finite")]
    BadMass(usize),
    #[error("body {body}: expected {expected} components, got {got}")]
    DimensionMismatch {
        body: usize,
        expected: usize,
        got: usize,
    },
    #[error("mismatched body counts: {masses} masses, {positions} positions, {momenta} momenta")]
    CountMismatch {
        masses: usize,
        positions: usize,
        momenta: usize,
    },
    #[error("body {body} infeasible: constraint residual {constraint:e}, tangency residual {tangency:e}")]
    Infeasible {
        body: usize,
        constraint: f64,
        tangency: f64,
    },
    #[error("body {body} lies outside the projection chart")]
    OutsideChart { body: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Product and curvature data consumed by the pairwise kernel.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Metric {
    pub kappa: f64,
    /// Weight of the last component in the product.
    pub sigma: f64,
    /// Components per vector.
    pub dim: usize,
}

impl Metric {
    pub fn of_space(space: &CurvatureSpace) -> Self {
        Self {
            kappa: space.kappa(),
            sigma: sigma_for(space),
            dim: space.dim(),
        }
    }

    /// Euclidean metric for the projected (literal) system.
    pub fn projected(kappa: f64, dim: usize) -> Self {
        Self {
            kappa,
            sigma: 1.0,
            dim,
        }
    }

    #[inline]
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        sdot_slice(a, b, self.sigma)
    }

    /// (a⊙a)(b⊙b) − (a⊙b)², evaluated as a sum over the squared bivector
    /// components of a ∧ b so that nearly parallel arguments do not cancel.
    #[inline]
    pub fn gram(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for k in 0..d {
            for l in k + 1..d {
                let w = a[k] * b[l] - a[l] * b[k];
                let eta = if l == d - 1 { self.sigma } else { 1.0 };
                acc += eta * w * w;
            }
        }
        acc
    }

    /// (σκ)^{1/2}, real for both signs of κ.
    #[inline]
    fn root(&self) -> f64 {
        (self.sigma * self.kappa).sqrt()
    }
}

/// Pair denominator D_ij = σ[(κq_i⊙q_i)(κq_j⊙q_j) − (κq_i⊙q_j)²] together
/// with the pieces the force and gradient reuse.
#[inline]
fn pair_terms(m: &Metric, qi: &[f64], qj: &[f64]) -> (f64, f64, f64, f64, bool) {
    let ai = m.kappa * m.dot(qi, qi);
    let aj = m.kappa * m.dot(qj, qj);
    let s = m.kappa * m.dot(qi, qj);
    let denom = m.sigma * m.kappa * m.kappa * m.gram(qi, qj);
    let singular = !(denom > DENOMINATOR_TOL * (ai * aj).abs());
    (ai, aj, s, denom, singular)
}

fn singular_pairs(m: &Metric, q: &[f64]) -> Vec<(usize, usize)> {
    let d = m.dim;
    let n = q.len() / d;
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if pair_terms(m, &q[i * d..(i + 1) * d], &q[j * d..(j + 1) * d]).4 {
                out.push((i, j));
            }
        }
    }
    out
}

/// U_κ over flat positions.
pub(crate) fn potential(m: &Metric, masses: &[f64], q: &[f64]) -> Result<f64, DynamicsError> {
    let d = m.dim;
    let n = masses.len();
    let root = m.root();
    let mut u = 0.0;
    for i in 0..n {
        let qi = &q[i * d..(i + 1) * d];
        for j in i + 1..n {
            let qj = &q[j * d..(j + 1) * d];
            let (_, _, s, denom, singular) = pair_terms(m, qi, qj);
            if singular {
                return Err(DynamicsError::SingularConfiguration {
                    pairs: singular_pairs(m, q),
                });
            }
            u += masses[i] * masses[j] * root * s / denom.sqrt();
        }
    }
    Ok(u)
}

/// ∇̄_{q_i} U_κ for every body, written into `out` (same layout as `q`).
pub(crate) fn gradient(
    m: &Metric,
    masses: &[f64],
    q: &[f64],
    out: &mut [f64],
) -> Result<(), DynamicsError> {
    let d = m.dim;
    let n = masses.len();
    let root3 = m.root().powi(3);
    out[..n * d].iter_mut().for_each(|v| *v = 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let (qi, qj) = (&q[i * d..(i + 1) * d], &q[j * d..(j + 1) * d]);
            let (ai, aj, s, denom, singular) = pair_terms(m, qi, qj);
            if singular {
                return Err(DynamicsError::SingularConfiguration {
                    pairs: singular_pairs(m, q),
                });
            }
            let base = masses[i] * masses[j] * root3 / (denom * denom.sqrt());
            let ci = base * aj;
            let cj = base * ai;
            for k in 0..d {
                out[i * d + k] += ci * (ai * qj[k] - s * qi[k]);
                out[j * d + k] += cj * (aj * qi[k] - s * qj[k]);
            }
        }
    }
    Ok(())
}

/// Right-hand side of the Hamiltonian equations over a flat phase vector.
pub(crate) fn hamiltonian_rhs(
    m: &Metric,
    masses: &[f64],
    y: &[f64],
    dy: &mut [f64],
) -> Result<(), DynamicsError> {
    let d = m.dim;
    let n = masses.len();
    let (q, p) = y.split_at(n * d);
    let (dq, dp) = dy.split_at_mut(n * d);
    gradient(m, masses, q, dp)?;
    for i in 0..n {
        let inv_m = masses[i].recip();
        let pi = &p[i * d..(i + 1) * d];
        let qi = &q[i * d..(i + 1) * d];
        let pp = m.dot(pi, pi);
        for k in 0..d {
            dq[i * d + k] = inv_m * pi[k];
            dp[i * d + k] -= inv_m * m.kappa * pp * qi[k];
        }
    }
    Ok(())
}

/// Phase point: masses, positions, momenta on a curvature space, at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    space: CurvatureSpace,
    masses: Vec<f64>,
    positions: Vec<EmbeddedVector>,
    momenta: Vec<EmbeddedVector>,
}

impl SystemState {
    /// Checks shapes and masses; feasibility is checked separately by
    /// [`SystemState::check_feasible`].
    pub fn new(
        t: f64,
        space: CurvatureSpace,
        masses: Vec<f64>,
        positions: Vec<EmbeddedVector>,
        momenta: Vec<EmbeddedVector>,
    ) -> Result<Self, DynamicsError> {
        if masses.is_empty() {
            return Err(DynamicsError::Empty);
        }
        if masses.len() != positions.len() || masses.len() != momenta.len() {
            return Err(DynamicsError::CountMismatch {
                masses: masses.len(),
                positions: positions.len(),
                momenta: momenta.len(),
            });
        }
        for (i, &mi) in masses.iter().enumerate() {
            if !(mi > 0.0 && mi.is_finite()) {
                return Err(DynamicsError::BadMass(i));
            }
        }
        for (i, v) in positions.iter().chain(momenta.iter()).enumerate() {
            if v.dim() != space.dim() {
                return Err(DynamicsError::DimensionMismatch {
                    body: i % masses.len(),
                    expected: space.dim(),
                    got: v.dim(),
                });
            }
        }
        Ok(Self {
            t,
            space,
            masses,
            positions,
            momenta,
        })
    }

    pub(crate) fn from_flat(
        t: f64,
        space: CurvatureSpace,
        masses: &[f64],
        y: &[f64],
    ) -> Self {
        let d = space.dim();
        let n = masses.len();
        let vec_at = |k: usize| EmbeddedVector::from_slice(&y[k * d..(k + 1) * d]).unwrap();
        Self {
            t,
            space,
            masses: masses.to_vec(),
            positions: (0..n).map(vec_at).collect(),
            momenta: (n..2 * n).map(vec_at).collect(),
        }
    }

    pub(crate) fn to_flat(&self) -> Vec<f64> {
        self.positions
            .iter()
            .chain(self.momenta.iter())
            .flat_map(|v| v.as_slice().iter().copied())
            .collect()
    }

    pub(crate) fn flat_positions(&self) -> Vec<f64> {
        self.positions
            .iter()
            .flat_map(|v| v.as_slice().iter().copied())
            .collect()
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn space(&self) -> &CurvatureSpace {
        &self.space
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn positions(&self) -> &[EmbeddedVector] {
        &self.positions
    }

    pub fn momenta(&self) -> &[EmbeddedVector] {
        &self.momenta
    }

    pub fn with_momenta(&self, momenta: Vec<EmbeddedVector>) -> Result<Self, DynamicsError> {
        Self::new(
            self.t,
            self.space,
            self.masses.clone(),
            self.positions.clone(),
            momenta,
        )
    }

    /// Largest |κq⊙q − 1| and |q⊙p| over the bodies.
    pub fn max_residuals(&self) -> (f64, f64) {
        self.positions
            .iter()
            .zip(&self.momenta)
            .fold((0.0f64, 0.0f64), |(c, t), (q, p)| {
                (
                    c.max(constraint_residual(q, &self.space).abs()),
                    t.max(tangency_residual(q, p, &self.space).abs()),
                )
            })
    }

    pub fn check_feasible(&self, tol: f64) -> Result<(), DynamicsError> {
        for (i, (q, p)) in self.positions.iter().zip(&self.momenta).enumerate() {
            let constraint = constraint_residual(q, &self.space);
            let tangency = tangency_residual(q, p, &self.space);
            if !(constraint.abs() <= tol && tangency.abs() <= tol) {
                return Err(DynamicsError::Infeasible {
                    body: i,
                    constraint,
                    tangency,
                });
            }
        }
        Ok(())
    }

    /// Every body renormalized onto the manifold.
    pub fn renormalized(&self) -> Result<Self, DynamicsError> {
        let mut out = self.clone();
        for (q, p) in out.positions.iter_mut().zip(out.momenta.iter_mut()) {
            let (nq, np) = renormalize(q, p, &self.space)?;
            *q = nq;
            *p = np;
        }
        Ok(out)
    }
}

/// Time derivative of a [`SystemState`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub dq: Vec<EmbeddedVector>,
    pub dp: Vec<EmbeddedVector>,
}

/// Energy constant and (3-D ambient only) angular-momentum constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstIntegrals {
    pub h: f64,
    pub c: Option<[f64; 3]>,
}

/// U_κ(q) = ½ Σ_i Σ_{j≠i} m_i m_j (σκ)^{1/2} κq_i⊙q_j / [σ(κq_i⊙q_i)(κq_j⊙q_j) − σ(κq_i⊙q_j)²]^{1/2}.
pub fn force_function(state: &SystemState) -> Result<f64, DynamicsError> {
    let m = Metric::of_space(&state.space);
    potential(&m, &state.masses, &state.flat_positions())
}

pub fn grad_force_function(state: &SystemState) -> Result<Vec<EmbeddedVector>, DynamicsError> {
    let m = Metric::of_space(&state.space);
    let q = state.flat_positions();
    let mut g = vec![0.0; q.len()];
    gradient(&m, &state.masses, &q, &mut g)?;
    Ok(g.chunks(m.dim)
        .map(|c| EmbeddedVector::from_slice(c).unwrap())
        .collect())
}

/// q̇_i = p_i/m_i, ṗ_i = ∇̄_{q_i}U_κ − m_i^{-1} κ (p_i⊙p_i) q_i.
pub fn rhs(state: &SystemState) -> Result<StateDerivative, DynamicsError> {
    let m = Metric::of_space(&state.space);
    let y = state.to_flat();
    let mut dy = vec![0.0; y.len()];
    hamiltonian_rhs(&m, &state.masses, &y, &mut dy)?;
    let n = state.n();
    let vecs: Vec<EmbeddedVector> = dy
        .chunks(m.dim)
        .map(|c| EmbeddedVector::from_slice(c).unwrap())
        .collect();
    let (dq, dp) = vecs.split_at(n);
    Ok(StateDerivative {
        dq: dq.to_vec(),
        dp: dp.to_vec(),
    })
}

/// The energy constant h = ½ Σ m_i^{-1}(p_i⊙p_i) − U_κ(q).
///
/// The kinetic term uses the constraint κq_i⊙q_i = 1. Note the factor: the
/// usual statement of the energy integral reads Σ m_i^{-1}(p_i⊙p_i) − 2U_κ = 2h,
/// and this function returns h, not 2h.
pub fn total_energy(state: &SystemState) -> Result<f64, DynamicsError> {
    let u = force_function(state)?;
    Ok(kinetic_energy(state) - u)
}

pub(crate) fn kinetic_energy(state: &SystemState) -> f64 {
    let s = state.space.signature();
    state
        .momenta
        .iter()
        .zip(&state.masses)
        .map(|(p, mi)| crate::geometry::sdot(p, p, s) / mi)
        .sum::<f64>()
        * 0.5
}

/// c = Σ q_i ⊗ p_i = (α, β, γ).
pub fn angular_momentum(state: &SystemState) -> Result<[f64; 3], DynamicsError> {
    if state.space.dim() != 3 {
        return Err(DynamicsError::NoCrossProduct);
    }
    let s = state.space.signature();
    let mut c = [0.0; 3];
    for (q, p) in state.positions.iter().zip(&state.momenta) {
        let w = scross(q, p, s);
        for k in 0..3 {
            c[k] += w[k];
        }
    }
    Ok(c)
}

pub fn first_integrals(state: &SystemState) -> Result<FirstIntegrals, DynamicsError> {
    Ok(FirstIntegrals {
        h: total_energy(state)?,
        c: angular_momentum(state).ok(),
    })
}
