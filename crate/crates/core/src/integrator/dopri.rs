//! Dormand–Prince 5(4) embedded pair with a projection hook.

use crate::dynamics::DynamicsError;
use crate::geometry::GeometryError;

// Butcher tableau. The system is autonomous, so the nodes only enter the
// consistency test.
#[cfg(test)]
const C2: f64 = 1.0 / 5.0;
#[cfg(test)]
const C3: f64 = 3.0 / 10.0;
#[cfg(test)]
const C4: f64 = 4.0 / 5.0;
#[cfg(test)]
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

// 5th-order weights (also the last stage row, FSAL).
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// b − b̂ (difference to the embedded 4th-order weights).
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Nominal order of the propagated solution.
pub const ORDER: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum StepFailure {
    Dynamics(DynamicsError),
    Geometry(GeometryError),
    NonFinite,
}

impl From<DynamicsError> for StepFailure {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Geometry(g) => StepFailure::Geometry(g),
            other => StepFailure::Dynamics(other),
        }
    }
}

impl From<GeometryError> for StepFailure {
    fn from(e: GeometryError) -> Self {
        StepFailure::Geometry(e)
    }
}

/// An autonomous first-order system over a flat state vector.
pub trait OdeSystem {
    fn len(&self) -> usize;

    fn eval(&self, y: &[f64], dy: &mut [f64]) -> Result<(), DynamicsError>;

    /// Restores any invariant manifold after a step. Default: nothing.
    fn restore(&self, _y: &mut [f64]) -> Result<(), GeometryError> {
        Ok(())
    }
}

/// Stage buffers for one system size.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

impl Dopri5 {
    pub fn new(len: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; len]),
            tmp: vec![0.0; len],
        }
    }

    /// One step of size `h` from `y` into `out`. Returns the scaled RMS
    /// norm of the embedded error estimate, measured before `restore`.
    pub fn step<S: OdeSystem + ?Sized>(
        &mut self,
        sys: &S,
        y: &[f64],
        h: f64,
        rtol: f64,
        atol: f64,
        out: &mut [f64],
    ) -> Result<f64, StepFailure> {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;

        sys.eval(y, k1)?;
        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        sys.eval(tmp, k2)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        sys.eval(tmp, k3)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        sys.eval(tmp, k4)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        sys.eval(tmp, k5)?;
        for i in 0..n {
            tmp[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        sys.eval(tmp, k6)?;
        for i in 0..n {
            out[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        sys.eval(out, k7)?;

        let mut acc = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = atol + rtol * y[i].abs().max(out[i].abs());
            acc += (e / sc) * (e / sc);
        }
        let err = (acc / n as f64).sqrt();
        if !err.is_finite() || out.iter().any(|v| !v.is_finite()) {
            return Err(StepFailure::NonFinite);
        }
        sys.restore(out)?;
        Ok(err)
    }
}

/// Proportional–integral step-size controller.
#[derive(Debug, Clone, Copy)]
pub struct PiController {
    prev_err: f64,
}

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const ALPHA: f64 = 1.0 / ORDER as f64 - 0.75 * BETA;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

impl Default for PiController {
    fn default() -> Self {
        Self { prev_err: 1e-4 }
    }
}

impl PiController {
    /// Next step size after an accepted step with error `err ≤ 1`.
    pub fn accept(&mut self, h: f64, err: f64) -> f64 {
        let err = err.max(1e-10);
        let fac = SAFETY * err.powf(-ALPHA) * self.prev_err.powf(BETA);
        self.prev_err = err;
        h * fac.clamp(MIN_FACTOR, MAX_FACTOR)
    }

    /// Shrunk step size after a rejected step with error `err > 1`.
    pub fn reject(&self, h: f64, err: f64) -> f64 {
        let fac = SAFETY * err.powf(-1.0 / ORDER as f64);
        h * fac.clamp(MIN_FACTOR, 1.0)
    }
}
