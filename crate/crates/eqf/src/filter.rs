//! The equivariant filter engine.
//!
//! The filter keeps its estimate as a group element `Xhat` acting on a fixed
//! origin configuration, together with one 2x2 Riccati block per landmark.
//! All linearizations are taken about the origin in the displacement chart
//! `eps(e) = e - origin`, so the error-state matrix depends only on the
//! origin and the origin-frame velocity, never on the estimate itself. The
//! output matrix depends on the observer through the current rotation.
//!
//! Continuous-time equations, integrated over each measurement interval:
//!
//! ```text
//! Xhat' = dL Lambda(phi(Xhat, origin), v) + dR Delta
//! Delta = dphi(id)^-1 Sigma C^T Q^-1 (y - yhat)
//! Sigma' = A Sigma + Sigma A^T + P - Sigma C^T Q^-1 C Sigma
//! ```
//!
//! The Riccati flow is stiff when `Sigma` is far above its steady state (the
//! quadratic term then has eigenvalues around `|Sigma| |C|^2 / q`, about 1e6
//! for the reference scenario start), so a fixed-step integrator at the
//! measurement rate would lose positive definiteness on the first update.
//! [`EquivariantFilter::filter_update`] therefore advances the coupled
//! equations with explicit steps whose length is bounded by the local
//! stiffness; away from the transient one step spans the whole interval.

use nalgebra::{Matrix2, Vector2};

use crate::error::EqfError;
use crate::group::{
    dphi_at_identity, dphi_right_inverse, phi, psi, transport, AlgebraElement, BearingOutput,
    ExtendedVelocity, GroupElement, SystemState,
};
use crate::mat2;

/// Central-difference step used by the fallback linearizations.
pub const FD_STEP: f64 = 1e-6;

/// Eigenvalue floor below which a covariance block counts as having lost
/// positive definiteness.
pub const PD_FLOOR: f64 = 1e-12;

/// Maximum local step growth rate: a sub-step `h` must satisfy
/// `h * stiffness <= ETA`.
const ETA: f64 = 0.2;

const MAX_SUBSTEPS: usize = 1_000_000;

/// A system living on the punctured-plane landmark space with the
/// `(S1 x R+)^n` symmetry. Supplies the origin, the kinematics, the output
/// map, and optionally analytic linearization blocks; when the analytic
/// hooks return `None` the engine falls back to central differences.
pub trait SystemModel {
    fn origin(&self) -> &SystemState;

    fn landmark_count(&self) -> usize {
        self.origin().len()
    }

    /// Kinematics `f_v(state)` as one tangent vector per landmark.
    fn dynamics(
        &self,
        state: &SystemState,
        vel: &ExtendedVelocity,
    ) -> Result<Vec<Vector2<f64>>, EqfError>;

    /// Output map `h(state)`.
    fn measure(&self, state: &SystemState) -> Result<BearingOutput, EqfError>;

    /// Equivariant lift of the kinematics onto the group algebra.
    fn lift(
        &self,
        state: &SystemState,
        vel: &ExtendedVelocity,
    ) -> Result<AlgebraElement, EqfError> {
        crate::group::lift(state, vel)
    }

    /// Analytic error-state blocks, if available.
    fn analytic_state_blocks(
        &self,
        _origin_vel: &ExtendedVelocity,
    ) -> Option<Vec<Matrix2<f64>>> {
        None
    }

    /// Analytic output blocks, if available.
    fn analytic_output_blocks(&self, _observer: &GroupElement) -> Option<Vec<Matrix2<f64>>> {
        None
    }
}

/// How the observer advances the group estimate over a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObserverScheme {
    /// Explicit Euler on the angle and scale coordinates.
    Euler,
    /// Euler on the angle, exact exponential on the scale. Keeps scales
    /// positive for any step size.
    ExponentialScale,
    /// The internal model advances in state space and the group element is
    /// re-anchored by transport; the innovation enters through the group
    /// exponential. For input-only kinematics the internal-model part is the
    /// exact flow of the frozen-input system, which removes the secular
    /// drift the coordinate schemes accumulate against a truth integrated in
    /// state space.
    Geometric,
}

/// Gains and initial covariance, one 2x2 block per landmark.
#[derive(Clone, Debug)]
pub struct FilterConfig {
    /// Process covariance blocks `P_i`.
    pub process_noise: Vec<Matrix2<f64>>,
    /// Measurement covariance blocks `Q_i`.
    pub measurement_noise: Vec<Matrix2<f64>>,
    /// Initial Riccati blocks `Sigma_i(0)`.
    pub initial_covariance: Vec<Matrix2<f64>>,
    pub scheme: ObserverScheme,
}

impl FilterConfig {
    /// Isotropic gains `p I`, `q I`, `s0 I` replicated over `n` landmarks.
    pub fn isotropic(n: usize, p: f64, q: f64, s0: f64, scheme: ObserverScheme) -> Self {
        FilterConfig {
            process_noise: vec![Matrix2::identity() * p; n],
            measurement_noise: vec![Matrix2::identity() * q; n],
            initial_covariance: vec![Matrix2::identity() * s0; n],
            scheme,
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), EqfError> {
        for blocks in [
            &self.process_noise,
            &self.measurement_noise,
            &self.initial_covariance,
        ] {
            if blocks.len() != n {
                return Err(EqfError::DimensionMismatch {
                    expected: n,
                    actual: blocks.len(),
                });
            }
            for (i, b) in blocks.iter().enumerate() {
                let asym = mat2::asymmetry(b);
                if asym > 1e-10 {
                    return Err(EqfError::NotSymmetric {
                        block: i,
                        asymmetry: asym,
                    });
                }
                let (lo, _) = mat2::symmetric_eigenvalues(b);
                if lo <= PD_FLOOR {
                    return Err(EqfError::NotPositiveDefinite {
                        block: i,
                        min_eigenvalue: lo,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Filter state: the group estimate, the Riccati blocks, and filter time.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterState {
    pub xhat: GroupElement,
    pub sigma: Vec<Matrix2<f64>>,
    pub t: f64,
}

/// Linearization of the error and output maps about the origin.
#[derive(Clone, Debug)]
pub struct LinearizedModel {
    /// Error-state blocks `A_i`; depend only on the origin and origin-frame
    /// velocity.
    pub state_blocks: Vec<Matrix2<f64>>,
    /// Output blocks `C_i`; depend on the origin and the observer element.
    pub output_blocks: Vec<Matrix2<f64>>,
}

/// Velocity seen from the origin frame: `psi(Xhat^-1, v)`.
pub fn origin_velocity(
    xhat: &GroupElement,
    vel: &ExtendedVelocity,
) -> Result<ExtendedVelocity, EqfError> {
    psi(&xhat.inverse(), vel)
}

/// Equivariant state error `e = phi(Xhat^-1, state)`; the filter drives it
/// toward the origin configuration.
pub fn state_error(xhat: &GroupElement, state: &SystemState) -> Result<SystemState, EqfError> {
    phi(&xhat.inverse(), state)
}

/// Displacement chart about the origin: `eps(e) = e - origin`.
pub fn chart(error: &SystemState, origin: &SystemState) -> Result<Vec<Vector2<f64>>, EqfError> {
    if error.len() != origin.len() {
        return Err(EqfError::DimensionMismatch {
            expected: origin.len(),
            actual: error.len(),
        });
    }
    Ok(error
        .landmarks()
        .iter()
        .zip(origin.landmarks())
        .map(|(e, o)| e - o)
        .collect())
}

/// Inverse of [`chart`]; fails if a coordinate leaves the punctured plane.
pub fn chart_inverse(
    coords: &[Vector2<f64>],
    origin: &SystemState,
) -> Result<SystemState, EqfError> {
    if coords.len() != origin.len() {
        return Err(EqfError::DimensionMismatch {
            expected: origin.len(),
            actual: coords.len(),
        });
    }
    SystemState::new(
        coords
            .iter()
            .zip(origin.landmarks())
            .map(|(c, o)| c + o)
            .collect(),
    )
}

/// The equivariant error flow evaluated at `error`, holding the origin-frame
/// velocity fixed: `dphi_e(id)[lift(e, v) - lift(origin, v)]`. Its
/// linearization at the origin is the error-state matrix.
pub fn error_field<M: SystemModel>(
    model: &M,
    error: &SystemState,
    origin_vel: &ExtendedVelocity,
) -> Result<Vec<Vector2<f64>>, EqfError> {
    let origin = model.origin();
    if error.len() != origin.len() {
        return Err(EqfError::DimensionMismatch {
            expected: origin.len(),
            actual: error.len(),
        });
    }
    let lam_e = model.lift(error, origin_vel)?;
    let lam_o = model.lift(origin, origin_vel)?;
    let blocks = dphi_at_identity(error);
    Ok((0..error.len())
        .map(|i| {
            let du = Vector2::new(
                lam_e.angular_rate(i) - lam_o.angular_rate(i),
                lam_e.scale_rate(i) - lam_o.scale_rate(i),
            );
            blocks[i] * du
        })
        .collect())
}

/// One explicit Euler step of the Riccati flow, block by block, followed by
/// symmetrization. Fails if any block falls below the positive-definiteness
/// floor, naming the block; that is the signal that the step size exceeds
/// the stability limit of the quadratic term.
pub fn riccati_step(
    sigma: &[Matrix2<f64>],
    state_blocks: &[Matrix2<f64>],
    output_blocks: &[Matrix2<f64>],
    process_noise: &[Matrix2<f64>],
    measurement_noise: &[Matrix2<f64>],
    dt: f64,
) -> Result<Vec<Matrix2<f64>>, EqfError> {
    let n = sigma.len();
    for len in [
        state_blocks.len(),
        output_blocks.len(),
        process_noise.len(),
        measurement_noise.len(),
    ] {
        if len != n {
            return Err(EqfError::DimensionMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let s = sigma[i];
        let a = state_blocks[i];
        let c = output_blocks[i];
        let q_inv = measurement_noise[i]
            .try_inverse()
            .ok_or(EqfError::NotPositiveDefinite {
                block: i,
                min_eigenvalue: 0.0,
            })?;
        let rate = a * s + s * a.transpose() + process_noise[i]
            - s * c.transpose() * q_inv * c * s;
        let next = mat2::symmetrize(&(s + rate * dt));
        let (lo, _) = mat2::symmetric_eigenvalues(&next);
        if lo <= PD_FLOOR {
            return Err(EqfError::NotPositiveDefinite {
                block: i,
                min_eigenvalue: lo,
            });
        }
        out.push(next);
    }
    Ok(out)
}

/// The filter proper: a system model plus gains.
pub struct EquivariantFilter<M: SystemModel> {
    model: M,
    config: FilterConfig,
    measurement_inverse: Vec<Matrix2<f64>>,
}

impl<M: SystemModel> EquivariantFilter<M> {
    pub fn new(model: M, config: FilterConfig) -> Result<Self, EqfError> {
        let n = model.landmark_count();
        config.validate(n)?;
        let measurement_inverse = config
            .measurement_noise
            .iter()
            .map(|q| q.try_inverse().expect("validated positive definite"))
            .collect();
        Ok(EquivariantFilter {
            model,
            config,
            measurement_inverse,
        })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    /// Identity estimate with the configured initial covariance at `t = 0`.
    pub fn initial_state(&self) -> FilterState {
        FilterState {
            xhat: GroupElement::identity(self.model.landmark_count()),
            sigma: self.config.initial_covariance.clone(),
            t: 0.0,
        }
    }

    /// State estimate `phi(Xhat, origin)`.
    pub fn estimate(&self, state: &FilterState) -> Result<SystemState, EqfError> {
        phi(&state.xhat, self.model.origin())
    }

    /// Error-state blocks: the analytic hook when the model provides one,
    /// otherwise central differences of the error field.
    pub fn state_matrix_blocks(
        &self,
        origin_vel: &ExtendedVelocity,
    ) -> Result<Vec<Matrix2<f64>>, EqfError> {
        if let Some(blocks) = self.model.analytic_state_blocks(origin_vel) {
            return Ok(blocks);
        }
        state_matrix_blocks_fd(&self.model, origin_vel)
    }

    /// Output blocks: analytic hook or central differences of the output map
    /// composed with the chart.
    pub fn output_matrix_blocks(
        &self,
        observer: &GroupElement,
    ) -> Result<Vec<Matrix2<f64>>, EqfError> {
        if let Some(blocks) = self.model.analytic_output_blocks(observer) {
            return Ok(blocks);
        }
        output_matrix_blocks_fd(&self.model, observer)
    }

    pub fn linearize(
        &self,
        origin_vel: &ExtendedVelocity,
        observer: &GroupElement,
    ) -> Result<LinearizedModel, EqfError> {
        Ok(LinearizedModel {
            state_blocks: self.state_matrix_blocks(origin_vel)?,
            output_blocks: self.output_matrix_blocks(observer)?,
        })
    }

    /// Innovation `Delta = dphi(id)^-1 Sigma C^T Q^-1 (y - yhat)` as an
    /// algebra element.
    pub fn innovation(
        &self,
        sigma: &[Matrix2<f64>],
        output_blocks: &[Matrix2<f64>],
        measured: &BearingOutput,
        predicted: &BearingOutput,
    ) -> Result<AlgebraElement, EqfError> {
        let origin = self.model.origin();
        let n = origin.len();
        if sigma.len() != n || output_blocks.len() != n || measured.len() != n {
            return Err(EqfError::DimensionMismatch {
                expected: n,
                actual: sigma.len().min(output_blocks.len()).min(measured.len()),
            });
        }
        let residual = measured.residual(predicted)?;
        let pinv = dphi_right_inverse(origin);
        let components = (0..n)
            .map(|i| {
                let gain = sigma[i] * output_blocks[i].transpose() * self.measurement_inverse[i];
                let d = pinv[i] * (gain * residual[i]);
                (d.x, d.y)
            })
            .collect();
        Ok(AlgebraElement::from_components(components))
    }

    /// Advances the group estimate one step under the configured scheme,
    /// combining the lifted internal model evaluated at the current estimate
    /// with the innovation. Fails if a scale component leaves the positive
    /// half-line, which indicates the step size is too large.
    pub fn observer_step(
        &self,
        xhat: &GroupElement,
        vel: &ExtendedVelocity,
        delta: &AlgebraElement,
        dt: f64,
    ) -> Result<GroupElement, EqfError> {
        let est = phi(xhat, self.model.origin())?;
        let lam = self.model.lift(&est, vel)?;
        let total = lam.add(delta)?;
        match self.config.scheme {
            ObserverScheme::Euler => {
                let mut parts = Vec::with_capacity(xhat.len());
                for (i, (theta, a)) in xhat.components().iter().enumerate() {
                    let angle = crate::group::CircleAngle::new(
                        theta.radians() + dt * total.angular_rate(i),
                    );
                    let scale = a.value() * (1.0 + dt * total.scale_rate(i));
                    let scale = crate::group::PositiveScale::new(scale)
                        .map_err(|_| EqfError::ScaleCollapsed { landmark: i })?;
                    parts.push((angle, scale));
                }
                Ok(GroupElement::from_components(parts))
            }
            ObserverScheme::ExponentialScale => {
                let mut parts = Vec::with_capacity(xhat.len());
                for (i, (theta, a)) in xhat.components().iter().enumerate() {
                    let angle = crate::group::CircleAngle::new(
                        theta.radians() + dt * total.angular_rate(i),
                    );
                    let scale = a.value() * (dt * total.scale_rate(i)).exp();
                    let scale = crate::group::PositiveScale::new(scale)
                        .map_err(|_| EqfError::ScaleCollapsed { landmark: i })?;
                    parts.push((angle, scale));
                }
                Ok(GroupElement::from_components(parts))
            }
            ObserverScheme::Geometric => {
                let flow = self.model.dynamics(&est, vel)?;
                let moved: Vec<Vector2<f64>> = est
                    .landmarks()
                    .iter()
                    .zip(&flow)
                    .map(|(x, f)| x + f * dt)
                    .collect();
                let moved = SystemState::new(moved).map_err(|e| match e {
                    EqfError::DegenerateLandmark { index, .. } => {
                        EqfError::ScaleCollapsed { landmark: index }
                    }
                    other => other,
                })?;
                let anchored = transport(self.model.origin(), &moved)?;
                anchored.compose(&delta.scale(dt).exp())
            }
        }
    }

    /// Propagates filter state and covariance over one measurement interval
    /// holding the measurement fixed, recomputing the linearization and the
    /// innovation on a stability-bounded inner grid. Away from covariance
    /// transients the whole interval is a single explicit step.
    pub fn filter_update(
        &self,
        state: &FilterState,
        vel: &ExtendedVelocity,
        measured: &BearingOutput,
        dt: f64,
    ) -> Result<FilterState, EqfError> {
        let n = self.model.landmark_count();
        if vel.len() != n {
            return Err(EqfError::DimensionMismatch {
                expected: n,
                actual: vel.len(),
            });
        }
        if measured.len() != n {
            return Err(EqfError::DimensionMismatch {
                expected: n,
                actual: measured.len(),
            });
        }
        let mut xhat = state.xhat.clone();
        let mut sigma = state.sigma.clone();
        let mut remaining = dt;
        let mut substeps = 0usize;
        while remaining > 0.0 {
            substeps += 1;
            if substeps > MAX_SUBSTEPS {
                return Err(EqfError::IntegrationStalled {
                    detail: format!("substep limit exceeded with {remaining:.3e} s remaining"),
                });
            }
            let est = phi(&xhat, self.model.origin())?;
            let v_origin = origin_velocity(&xhat, vel)?;
            let lin = self.linearize(&v_origin, &xhat)?;
            let predicted = self.model.measure(&est)?;
            let delta = self.innovation(&sigma, &lin.output_blocks, measured, &predicted)?;
            let lam = self.model.lift(&est, vel)?;
            let rate = lam.add(&delta)?;

            let mut stiffness = 1e-12f64;
            for i in 0..n {
                let c = &lin.output_blocks[i];
                let quad = mat2::frobenius(&sigma[i])
                    * mat2::frobenius(&(c.transpose() * self.measurement_inverse[i] * c));
                stiffness = stiffness
                    .max(2.0 * mat2::frobenius(&lin.state_blocks[i]) + quad)
                    .max(rate.angular_rate(i).abs())
                    .max(rate.scale_rate(i).abs());
            }
            let h = if remaining * stiffness <= ETA {
                remaining
            } else {
                ETA / stiffness
            };

            sigma = riccati_step(
                &sigma,
                &lin.state_blocks,
                &lin.output_blocks,
                &self.config.process_noise,
                &self.config.measurement_noise,
                h,
            )?;
            xhat = self.observer_step(&xhat, vel, &delta, h)?;
            remaining -= h;
        }
        Ok(FilterState {
            xhat,
            sigma,
            t: state.t + dt,
        })
    }
}

/// Central-difference error-state blocks: the Jacobian of the error field in
/// the displacement chart, landmark by landmark.
pub fn state_matrix_blocks_fd<M: SystemModel>(
    model: &M,
    origin_vel: &ExtendedVelocity,
) -> Result<Vec<Matrix2<f64>>, EqfError> {
    let origin = model.origin();
    let n = origin.len();
    if origin_vel.len() != n {
        return Err(EqfError::DimensionMismatch {
            expected: n,
            actual: origin_vel.len(),
        });
    }
    let zero = vec![Vector2::zeros(); n];
    let mut blocks = vec![Matrix2::zeros(); n];
    for i in 0..n {
        for j in 0..2 {
            let mut plus = zero.clone();
            let mut minus = zero.clone();
            plus[i][j] = FD_STEP;
            minus[i][j] = -FD_STEP;
            let fp = error_field(model, &chart_inverse(&plus, origin)?, origin_vel)?;
            let fm = error_field(model, &chart_inverse(&minus, origin)?, origin_vel)?;
            let col = (fp[i] - fm[i]) / (2.0 * FD_STEP);
            blocks[i][(0, j)] = col.x;
            blocks[i][(1, j)] = col.y;
        }
    }
    Ok(blocks)
}

/// Central-difference output blocks: the Jacobian of
/// `eps -> h(phi(Xhat, origin + eps))` at zero, landmark by landmark.
pub fn output_matrix_blocks_fd<M: SystemModel>(
    model: &M,
    observer: &GroupElement,
) -> Result<Vec<Matrix2<f64>>, EqfError> {
    let origin = model.origin();
    let n = origin.len();
    if observer.len() != n {
        return Err(EqfError::DimensionMismatch {
            expected: n,
            actual: observer.len(),
        });
    }
    let zero = vec![Vector2::zeros(); n];
    let mut blocks = vec![Matrix2::zeros(); n];
    for i in 0..n {
        for j in 0..2 {
            let mut plus = zero.clone();
            let mut minus = zero.clone();
            plus[i][j] = FD_STEP;
            minus[i][j] = -FD_STEP;
            let yp = model.measure(&phi(observer, &chart_inverse(&plus, origin)?)?)?;
            let ym = model.measure(&phi(observer, &chart_inverse(&minus, origin)?)?)?;
            let col = (yp.bearing(i) - ym.bearing(i)) / (2.0 * FD_STEP);
            blocks[i][(0, j)] = col.x;
            blocks[i][(1, j)] = col.y;
        }
    }
    Ok(blocks)
}
