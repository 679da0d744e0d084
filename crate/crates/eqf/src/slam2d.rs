//! Derotated ego-centric planar landmark model.
//!
//! Stationary world landmarks seen from a translating robot obey
//! `x_i' = -v` in the derotated body frame, and each landmark is measured
//! as the unit bearing `x_i / |x_i|`. The model implements the
//! [`SystemModel`] hooks with closed-form linearization blocks so the
//! filter never needs its finite-difference fallback, plus a windowed
//! persistence-of-excitation monitor for recorded trajectories.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};

use crate::error::EqfError;
use crate::filter::SystemModel;
use crate::group::{
    rotation_generator, rotation_matrix, BearingOutput, ExtendedVelocity, GroupElement,
    SystemState,
};

/// Default excitation window length in seconds.
pub const DEFAULT_EXCITATION_WINDOW: f64 = PI;

/// Default lower bound on the windowed excitation average.
pub const DEFAULT_EXCITATION_THRESHOLD: f64 = 0.01;

/// Bearing-only landmark model anchored at a fixed origin configuration.
#[derive(Clone, Debug)]
pub struct Slam2dModel {
    origin: SystemState,
}

impl Slam2dModel {
    /// Builds the model around an origin configuration. The origin carries
    /// the whole linearization, so it must contain at least one landmark.
    pub fn new(origin: SystemState) -> Result<Self, EqfError> {
        if origin.is_empty() {
            return Err(EqfError::DimensionMismatch {
                expected: 1,
                actual: 0,
            });
        }
        Ok(Slam2dModel { origin })
    }
}

impl SystemModel for Slam2dModel {
    fn origin(&self) -> &SystemState {
        &self.origin
    }

    fn dynamics(
        &self,
        state: &SystemState,
        vel: &ExtendedVelocity,
    ) -> Result<Vec<Vector2<f64>>, EqfError> {
        if state.len() != vel.len() {
            return Err(EqfError::DimensionMismatch {
                expected: state.len(),
                actual: vel.len(),
            });
        }
        Ok(vel.components().iter().map(|v| -v).collect())
    }

    fn measure(&self, state: &SystemState) -> Result<BearingOutput, EqfError> {
        BearingOutput::new(state.landmarks().iter().map(|x| x / x.norm()).collect())
    }

    fn analytic_state_blocks(&self, origin_vel: &ExtendedVelocity) -> Option<Vec<Matrix2<f64>>> {
        if origin_vel.len() != self.origin.len() {
            return None;
        }
        Some(state_blocks(&self.origin, origin_vel))
    }

    fn analytic_output_blocks(&self, observer: &GroupElement) -> Option<Vec<Matrix2<f64>>> {
        if observer.len() != self.origin.len() {
            return None;
        }
        Some(output_blocks(&self.origin, observer))
    }
}

/// Closed-form error-state blocks at the origin for origin-frame velocity
/// `vo`, one per landmark:
///
/// ```text
/// A_i = (|x|^2 ((Sx)(Sv)^T - x v^T) - 2 (x^T S v) (Sx) x^T + 2 (x^T v) x x^T) / |x|^4
/// ```
///
/// with `x = origin_i`, `v = vo_i`. Matches the central-difference Jacobian
/// of the error field to truncation accuracy.
pub fn state_blocks(origin: &SystemState, origin_vel: &ExtendedVelocity) -> Vec<Matrix2<f64>> {
    let s = rotation_generator();
    origin
        .landmarks()
        .iter()
        .zip(origin_vel.components())
        .map(|(x, v)| {
            let n2 = x.norm_squared();
            let sx = s * x;
            let sv = s * v;
            ((sx * sv.transpose() - x * v.transpose()) * n2
                - sx * x.transpose() * (2.0 * x.dot(&sv))
                + x * x.transpose() * (2.0 * x.dot(v)))
                / (n2 * n2)
        })
        .collect()
}

/// Closed-form output blocks, one per landmark:
///
/// ```text
/// C_i = R(theta_i)^T (I - x x^T / |x|^2) / |x|
/// ```
///
/// with `x = origin_i` and `theta_i` the observer angle. The projector
/// annihilates the radial direction, so every block has rank one; the
/// observer scale cancels against the output normalization and does not
/// appear.
pub fn output_blocks(origin: &SystemState, observer: &GroupElement) -> Vec<Matrix2<f64>> {
    origin
        .landmarks()
        .iter()
        .zip(observer.components())
        .map(|(x, (theta, _))| {
            let proj = Matrix2::identity() - x * x.transpose() / x.norm_squared();
            rotation_matrix(*theta).transpose() * proj / x.norm()
        })
        .collect()
}

/// The excitation integrand `(v^T S x_i)^2` per landmark at one sample.
pub fn excitation_integrand(state: &SystemState, v: &Vector2<f64>) -> Vec<f64> {
    let sv = rotation_generator() * v;
    state
        .landmarks()
        .iter()
        .map(|x| {
            let g = x.dot(&sv);
            g * g
        })
        .collect()
}

/// Windowed persistence-of-excitation summary for a recorded trajectory.
/// Sliding averages below the threshold mark stretches where the velocity
/// fails to sweep across a bearing direction and the linearized system
/// loses uniform observability.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcitationReport {
    /// Window length in seconds (after rounding to the sample grid).
    pub window: f64,
    /// Lower bound the averages were compared against.
    pub threshold: f64,
    /// Smallest windowed average per landmark.
    pub minimum: Vec<f64>,
    /// Windows per landmark whose average fell below the bound.
    pub deficient: Vec<usize>,
}

impl ExcitationReport {
    /// True when every window of every landmark meets the bound.
    pub fn is_excited(&self) -> bool {
        self.deficient.iter().all(|&c| c == 0)
    }
}

/// Sliding-window trapezoidal averages of the excitation integrand over a
/// uniformly sampled trajectory. The window is rounded to a whole number of
/// sample intervals and each average is normalized by the rounded span, so
/// a window covering the whole trace reproduces the global average exactly.
pub fn excitation_metric(
    x_trace: &[SystemState],
    v_trace: &[Vector2<f64>],
    dt: f64,
    window: f64,
    threshold: f64,
) -> Result<ExcitationReport, EqfError> {
    if x_trace.len() != v_trace.len() {
        return Err(EqfError::DimensionMismatch {
            expected: x_trace.len(),
            actual: v_trace.len(),
        });
    }
    let samples = x_trace.len();
    let span = if samples == 0 {
        0.0
    } else {
        (samples - 1) as f64 * dt
    };
    let intervals = (window / dt).round() as usize;
    if intervals < 1 || samples < 2 || intervals > samples - 1 {
        return Err(EqfError::WindowTooLong {
            window,
            trace: span,
        });
    }
    let n = x_trace[0].len();
    for st in x_trace {
        if st.len() != n {
            return Err(EqfError::DimensionMismatch {
                expected: n,
                actual: st.len(),
            });
        }
    }

    let integrand: Vec<Vec<f64>> = x_trace
        .iter()
        .zip(v_trace)
        .map(|(x, v)| excitation_integrand(x, v))
        .collect();

    let rounded = intervals as f64 * dt;
    let mut minimum = Vec::with_capacity(n);
    let mut deficient = Vec::with_capacity(n);
    for i in 0..n {
        // cumulative trapezoid so every window is a difference of prefixes
        let mut prefix = Vec::with_capacity(samples);
        prefix.push(0.0);
        for k in 1..samples {
            let slab = 0.5 * (integrand[k - 1][i] + integrand[k][i]) * dt;
            prefix.push(prefix[k - 1] + slab);
        }
        let mut lo = f64::INFINITY;
        let mut below = 0usize;
        for start in 0..samples - intervals {
            let avg = (prefix[start + intervals] - prefix[start]) / rounded;
            lo = lo.min(avg);
            if avg < threshold {
                below += 1;
            }
        }
        minimum.push(lo);
        deficient.push(below);
    }
    Ok(ExcitationReport {
        window: rounded,
        threshold,
        minimum,
        deficient,
    })
}
