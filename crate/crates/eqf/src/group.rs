//! Symmetry group of the derotated bearing-landmark system and its actions.
//!
//! The group is the direct product `(S1 x R+)^n`: each landmark carries an
//! angle and a positive scale, composed by angle addition and scale
//! multiplication. The group is abelian, so the adjoint action on the
//! algebra is trivial. A group element moves a landmark configuration by
//! `phi((theta_i, a_i), x_i) = a_i^-1 R(theta_i)^T x_i` and acts the same
//! way on velocities through `psi`. The action is transitive on the
//! punctured plane per landmark with trivial stabilizer, which is what lets
//! the filter linearize about a fixed origin configuration instead of the
//! current estimate.

use nalgebra::{Matrix2, Vector2};

use crate::error::EqfError;

/// Norm floor below which a landmark no longer counts as a point of the
/// punctured plane. Constructors reject anything closer to the origin.
pub const LANDMARK_NORM_FLOOR: f64 = 1e-9;

/// An angle stored wrapped to the half-open interval `(-pi, pi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleAngle(f64);

impl CircleAngle {
    pub fn new(radians: f64) -> Self {
        CircleAngle(wrap_angle(radians))
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(std::f64::consts::TAU);
    if r > std::f64::consts::PI {
        r - std::f64::consts::TAU
    } else {
        r
    }
}

/// A strictly positive scale factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositiveScale(f64);

impl PositiveScale {
    pub fn new(value: f64) -> Result<Self, EqfError> {
        if value > 0.0 && value.is_finite() {
            Ok(PositiveScale(value))
        } else {
            Err(EqfError::NonPositiveScale { value })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Element of `(S1 x R+)^n`: one `(angle, scale)` pair per landmark.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    components: Vec<(CircleAngle, PositiveScale)>,
}

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        GroupElement {
            components: vec![(CircleAngle::new(0.0), PositiveScale(1.0)); n],
        }
    }

    pub fn from_components(components: Vec<(CircleAngle, PositiveScale)>) -> Self {
        GroupElement { components }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[(CircleAngle, PositiveScale)] {
        &self.components
    }

    /// Angle of landmark `i`.
    pub fn angle(&self, i: usize) -> CircleAngle {
        self.components[i].0
    }

    /// Scale of landmark `i`.
    pub fn scale(&self, i: usize) -> PositiveScale {
        self.components[i].1
    }

    /// Componentwise product: angles add (wrapped), scales multiply.
    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement, EqfError> {
        check_len(self.len(), other.len())?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|((t1, a1), (t2, a2))| {
                (
                    CircleAngle::new(t1.radians() + t2.radians()),
                    PositiveScale(a1.value() * a2.value()),
                )
            })
            .collect();
        Ok(GroupElement { components })
    }

    /// Componentwise inverse: negated angles, reciprocal scales.
    pub fn inverse(&self) -> GroupElement {
        let components = self
            .components
            .iter()
            .map(|(t, a)| (CircleAngle::new(-t.radians()), PositiveScale(1.0 / a.value())))
            .collect();
        GroupElement { components }
    }

    /// Adjoint action on the algebra. The group is abelian, so this is the
    /// identity map; it exists so the filter can be read against the general
    /// construction.
    pub fn adjoint(&self, u: &AlgebraElement) -> Result<AlgebraElement, EqfError> {
        check_len(self.len(), u.len())?;
        Ok(u.clone())
    }
}

/// Element of the Lie algebra `R^2n`: one `(angular rate, scale rate)` pair
/// per landmark.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    components: Vec<(f64, f64)>,
}

impl AlgebraElement {
    pub fn zero(n: usize) -> Self {
        AlgebraElement {
            components: vec![(0.0, 0.0); n],
        }
    }

    pub fn from_components(components: Vec<(f64, f64)>) -> Self {
        AlgebraElement { components }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[(f64, f64)] {
        &self.components
    }

    /// Angular rate of landmark `i`.
    pub fn angular_rate(&self, i: usize) -> f64 {
        self.components[i].0
    }

    /// Scale rate of landmark `i`.
    pub fn scale_rate(&self, i: usize) -> f64 {
        self.components[i].1
    }

    pub fn add(&self, other: &AlgebraElement) -> Result<AlgebraElement, EqfError> {
        check_len(self.len(), other.len())?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|((w1, z1), (w2, z2))| (w1 + w2, z1 + z2))
            .collect();
        Ok(AlgebraElement { components })
    }

    pub fn scale(&self, factor: f64) -> AlgebraElement {
        let components = self
            .components
            .iter()
            .map(|(w, z)| (w * factor, z * factor))
            .collect();
        AlgebraElement { components }
    }

    /// Group exponential: the angle component maps directly, the scale
    /// component through `exp`.
    pub fn exp(&self) -> GroupElement {
        let components = self
            .components
            .iter()
            .map(|(w, z)| (CircleAngle::new(*w), PositiveScale(z.exp())))
            .collect();
        GroupElement { components }
    }
}

/// Landmark configuration on the punctured plane, `n` nonzero vectors in R^2.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemState {
    landmarks: Vec<Vector2<f64>>,
}

impl SystemState {
    /// Builds a state, rejecting landmarks within [`LANDMARK_NORM_FLOOR`] of
    /// the origin. That single check is what lets every downstream formula
    /// divide by `|x_i|` freely.
    pub fn new(landmarks: Vec<Vector2<f64>>) -> Result<Self, EqfError> {
        for (index, x) in landmarks.iter().enumerate() {
            let norm = x.norm();
            if !(norm >= LANDMARK_NORM_FLOOR) {
                return Err(EqfError::DegenerateLandmark {
                    index,
                    norm,
                    floor: LANDMARK_NORM_FLOOR,
                });
            }
        }
        Ok(SystemState { landmarks })
    }

    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }

    pub fn landmarks(&self) -> &[Vector2<f64>] {
        &self.landmarks
    }

    pub fn landmark(&self, i: usize) -> Vector2<f64> {
        self.landmarks[i]
    }
}

/// Velocity input extended to one copy per landmark. The physical robot
/// velocity `v` embeds as `(v, ..., v)`; keeping the extended form makes the
/// group action on inputs componentwise.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedVelocity {
    components: Vec<Vector2<f64>>,
}

impl ExtendedVelocity {
    pub fn new(components: Vec<Vector2<f64>>) -> Self {
        ExtendedVelocity { components }
    }

    /// Embeds a single planar velocity as `n` identical copies.
    pub fn embed(v: Vector2<f64>, n: usize) -> Self {
        ExtendedVelocity {
            components: vec![v; n],
        }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[Vector2<f64>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> Vector2<f64> {
        self.components[i]
    }
}

/// Unit bearing vectors, the output of the measurement map, embedded in R^2.
#[derive(Clone, Debug, PartialEq)]
pub struct BearingOutput {
    bearings: Vec<Vector2<f64>>,
}

impl BearingOutput {
    /// Accepts vectors that are unit length to within 1e-12.
    pub fn new(bearings: Vec<Vector2<f64>>) -> Result<Self, EqfError> {
        for (index, y) in bearings.iter().enumerate() {
            let norm = y.norm();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(EqfError::NotUnitLength { index, norm });
            }
        }
        Ok(BearingOutput { bearings })
    }

    pub fn len(&self) -> usize {
        self.bearings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bearings.is_empty()
    }

    pub fn bearings(&self) -> &[Vector2<f64>] {
        &self.bearings
    }

    pub fn bearing(&self, i: usize) -> Vector2<f64> {
        self.bearings[i]
    }

    /// Componentwise difference in the ambient R^2 embedding.
    pub fn residual(&self, other: &BearingOutput) -> Result<Vec<Vector2<f64>>, EqfError> {
        check_len(self.len(), other.len())?;
        Ok(self
            .bearings
            .iter()
            .zip(&other.bearings)
            .map(|(a, b)| a - b)
            .collect())
    }
}

fn check_len(expected: usize, actual: usize) -> Result<(), EqfError> {
    if expected == actual {
        Ok(())
    } else {
        Err(EqfError::DimensionMismatch { expected, actual })
    }
}

/// Planar rotation matrix for the given angle.
pub fn rotation_matrix(angle: CircleAngle) -> Matrix2<f64> {
    let (s, c) = angle.radians().sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Generator of planar rotations, `S = [[0, -1], [1, 0]]`; satisfies
/// `d/dtheta R(theta) = S R(theta)` and `S^T = -S`.
pub fn rotation_generator() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

/// Right group action on states: landmark `i` maps to
/// `a_i^-1 R(theta_i)^T x_i`.
pub fn phi(x: &GroupElement, state: &SystemState) -> Result<SystemState, EqfError> {
    check_len(x.len(), state.len())?;
    let landmarks = x
        .components()
        .iter()
        .zip(state.landmarks())
        .map(|((theta, a), p)| rotation_matrix(*theta).transpose() * p / a.value())
        .collect();
    // rotation and positive scaling cannot produce a zero vector
    Ok(SystemState { landmarks })
}

/// Action on extended velocities, componentwise the same map as `phi`.
pub fn psi(x: &GroupElement, vel: &ExtendedVelocity) -> Result<ExtendedVelocity, EqfError> {
    check_len(x.len(), vel.len())?;
    let components = x
        .components()
        .iter()
        .zip(vel.components())
        .map(|((theta, a), v)| rotation_matrix(*theta).transpose() * v / a.value())
        .collect();
    Ok(ExtendedVelocity { components })
}

/// Equivariant lift of the landmark kinematics `xdot_i = -v_i` onto the
/// algebra: `Lambda_i = (-x_i^T S v_i, x_i^T v_i) / |x_i|^2`. Composed with
/// [`dphi_at_identity`] it reproduces the kinematics exactly.
pub fn lift(state: &SystemState, vel: &ExtendedVelocity) -> Result<AlgebraElement, EqfError> {
    check_len(state.len(), vel.len())?;
    let s = rotation_generator();
    let components = state
        .landmarks()
        .iter()
        .zip(vel.components())
        .map(|(x, v)| {
            let n2 = x.norm_squared();
            (-x.dot(&(s * v)) / n2, x.dot(v) / n2)
        })
        .collect();
    Ok(AlgebraElement { components })
}

/// Differential of the action at the group identity, as one 2x2 block per
/// landmark: `(omega, alpha) -> -omega S x_i - alpha x_i`. Columns are
/// `[-S x_i, -x_i]`.
pub fn dphi_at_identity(origin: &SystemState) -> Vec<Matrix2<f64>> {
    let s = rotation_generator();
    origin
        .landmarks()
        .iter()
        .map(|x| {
            let c0 = -(s * x);
            Matrix2::new(c0.x, -x.x, c0.y, -x.y)
        })
        .collect()
}

/// Inverse of [`dphi_at_identity`] per landmark. The block matrix with rows
/// `(x^T S; -x^T)` squares to `|x|^2 I`, so the inverse is that matrix
/// divided by `|x|^2`: `u -> (x^T S u, -x^T u) / |x|^2`.
pub fn dphi_right_inverse(origin: &SystemState) -> Vec<Matrix2<f64>> {
    let s = rotation_generator();
    origin
        .landmarks()
        .iter()
        .map(|x| {
            let n2 = x.norm_squared();
            let r0 = s.transpose() * x; // (x^T S) as a column
            Matrix2::new(r0.x / n2, r0.y / n2, -x.x / n2, -x.y / n2)
        })
        .collect()
}

/// The unique group element carrying `from` to `to`, i.e.
/// `phi(transport(from, to), from) = to`. Witnesses transitivity of the
/// action and provides exact re-anchoring of estimates.
pub fn transport(from: &SystemState, to: &SystemState) -> Result<GroupElement, EqfError> {
    check_len(from.len(), to.len())?;
    let components = from
        .landmarks()
        .iter()
        .zip(to.landmarks())
        .map(|(f, t)| {
            let theta = f.y.atan2(f.x) - t.y.atan2(t.x);
            (
                CircleAngle::new(theta),
                PositiveScale(f.norm() / t.norm()),
            )
        })
        .collect();
    Ok(GroupElement { components })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    const TOL: f64 = 1e-12;

    fn state(points: &[[f64; 2]]) -> SystemState {
        SystemState::new(points.iter().map(|p| Vector2::new(p[0], p[1])).collect()).unwrap()
    }

    fn vel(points: &[[f64; 2]]) -> ExtendedVelocity {
        ExtendedVelocity::new(points.iter().map(|p| Vector2::new(p[0], p[1])).collect())
    }

    fn element(parts: &[(f64, f64)]) -> GroupElement {
        GroupElement::from_components(
            parts
                .iter()
                .map(|(t, a)| (CircleAngle::new(*t), PositiveScale::new(*a).unwrap()))
                .collect(),
        )
    }

    #[test]
    fn angle_wraps_to_half_open_interval() {
        assert_relative_eq!(CircleAngle::new(PI + 0.1).radians(), -PI + 0.1, epsilon = TOL);
        assert_relative_eq!(CircleAngle::new(-PI).radians(), PI, epsilon = TOL);
        assert_relative_eq!(CircleAngle::new(7.0 * PI).radians(), PI, epsilon = TOL);
        assert_relative_eq!(CircleAngle::new(-0.25).radians(), -0.25, epsilon = TOL);
    }

    #[test]
    fn positive_scale_rejects_nonpositive() {
        assert!(PositiveScale::new(0.0).is_err());
        assert!(PositiveScale::new(-1.0).is_err());
        assert!(PositiveScale::new(f64::NAN).is_err());
        assert!(PositiveScale::new(2.5).is_ok());
    }

    #[test]
    fn compose_with_identity_is_identity() {
        let x = element(&[(0.3, 2.0), (-1.2, 0.5)]);
        let id = GroupElement::identity(2);
        assert_eq!(x.compose(&id).unwrap(), x);
        assert_eq!(id.compose(&x).unwrap(), x);
    }

    #[test]
    fn compose_adds_angles_multiplies_scales() {
        let x = element(&[(0.3, 2.0)]);
        let y = element(&[(0.4, 3.0)]);
        let z = x.compose(&y).unwrap();
        assert_relative_eq!(z.angle(0).radians(), 0.7, epsilon = TOL);
        assert_relative_eq!(z.scale(0).value(), 6.0, epsilon = TOL);
    }

    #[test]
    fn compose_rejects_mismatched_lengths() {
        let x = element(&[(0.3, 2.0)]);
        let y = GroupElement::identity(2);
        assert!(matches!(
            x.compose(&y),
            Err(EqfError::DimensionMismatch { expected: 1, actual: 2 })
        ));
    }

    #[test]
    fn inverse_of_quarter_turn_double_scale() {
        let x = element(&[(FRAC_PI_2, 2.0)]);
        let inv = x.inverse();
        assert_relative_eq!(inv.angle(0).radians(), -FRAC_PI_2, epsilon = TOL);
        assert_relative_eq!(inv.scale(0).value(), 0.5, epsilon = TOL);
    }

    #[test]
    fn adjoint_is_identity_map() {
        let x = element(&[(0.7, 1.4), (-0.2, 3.0)]);
        let u = AlgebraElement::from_components(vec![(0.5, -1.0), (2.0, 0.25)]);
        assert_eq!(x.adjoint(&u).unwrap(), u);
    }

    #[test]
    fn rotation_matrix_values() {
        assert_relative_eq!(
            rotation_matrix(CircleAngle::new(0.0)),
            Matrix2::identity(),
            epsilon = TOL
        );
        assert_relative_eq!(
            rotation_matrix(CircleAngle::new(FRAC_PI_2)),
            Matrix2::new(0.0, -1.0, 1.0, 0.0),
            epsilon = TOL
        );
    }

    #[test]
    fn rotation_commutes_with_generator() {
        let s = rotation_generator();
        for theta in [-2.0, -0.3, 0.0, 0.9, 2.7] {
            let r = rotation_matrix(CircleAngle::new(theta));
            assert_relative_eq!(r * s * r.transpose(), s, epsilon = TOL);
        }
    }

    #[test]
    fn phi_quarter_turn_double_scale() {
        let x = element(&[(FRAC_PI_2, 2.0)]);
        let p = state(&[[2.0, 0.0]]);
        let moved = phi(&x, &p).unwrap();
        assert_relative_eq!(moved.landmark(0), Vector2::new(0.0, -1.0), epsilon = TOL);
    }

    #[test]
    fn phi_identity_fixes_state() {
        let p = state(&[[0.4, 1.7], [-0.2, 1.1]]);
        let moved = phi(&GroupElement::identity(2), &p).unwrap();
        assert_relative_eq!(moved.landmark(0), p.landmark(0), epsilon = TOL);
        assert_relative_eq!(moved.landmark(1), p.landmark(1), epsilon = TOL);
    }

    #[test]
    fn psi_half_turn_flips_velocity() {
        let x = element(&[(PI, 1.0)]);
        let v = vel(&[[1.0, 0.0]]);
        let moved = psi(&x, &v).unwrap();
        assert_relative_eq!(moved.component(0), Vector2::new(-1.0, 0.0), epsilon = TOL);
    }

    #[test]
    fn lift_of_zero_velocity_is_zero() {
        let p = state(&[[0.3, 1.5], [1.0, 1.0]]);
        let lam = lift(&p, &vel(&[[0.0, 0.0], [0.0, 0.0]])).unwrap();
        assert_eq!(lam, AlgebraElement::zero(2));
    }

    #[test]
    fn lift_unit_example() {
        // x = e1, v = e2: x^T S v = -1 and x^T v = 0, so the lift is (1, 0).
        let lam = lift(&state(&[[1.0, 0.0]]), &vel(&[[0.0, 1.0]])).unwrap();
        assert_relative_eq!(lam.angular_rate(0), 1.0, epsilon = TOL);
        assert_relative_eq!(lam.scale_rate(0), 0.0, epsilon = TOL);
    }

    #[test]
    fn dphi_at_identity_unit_example() {
        let blocks = dphi_at_identity(&state(&[[1.0, 0.0]]));
        let u = Vector2::new(1.0, 0.0); // pure angular rate
        assert_relative_eq!(blocks[0] * u, Vector2::new(0.0, -1.0), epsilon = TOL);
    }

    #[test]
    fn dphi_right_inverse_composes_to_identity() {
        let p = state(&[[0.8, -1.3], [2.0, 0.4], [-0.6, 0.7]]);
        let fwd = dphi_at_identity(&p);
        let inv = dphi_right_inverse(&p);
        for i in 0..p.len() {
            assert_relative_eq!(fwd[i] * inv[i], Matrix2::identity(), epsilon = TOL);
            assert_relative_eq!(inv[i] * fwd[i], Matrix2::identity(), epsilon = TOL);
        }
    }

    #[test]
    fn dphi_right_inverse_matches_direct_solve() {
        let p = state(&[[1.4, -0.9]]);
        let fwd = dphi_at_identity(&p);
        let inv = dphi_right_inverse(&p);
        let u = Vector2::new(0.37, -2.1);
        let solved = fwd[0].lu().solve(&u).unwrap();
        assert_relative_eq!(inv[0] * u, solved, epsilon = 1e-10);
    }

    #[test]
    fn state_rejects_origin_landmark() {
        let r = SystemState::new(vec![Vector2::new(0.0, 0.0)]);
        assert!(matches!(r, Err(EqfError::DegenerateLandmark { index: 0, .. })));
        let r = SystemState::new(vec![Vector2::new(1.0, 0.0), Vector2::new(0.0, 1e-10)]);
        assert!(matches!(r, Err(EqfError::DegenerateLandmark { index: 1, .. })));
    }

    #[test]
    fn bearing_rejects_non_unit() {
        assert!(BearingOutput::new(vec![Vector2::new(0.5, 0.0)]).is_err());
        assert!(BearingOutput::new(vec![Vector2::new(0.6, 0.8)]).is_ok());
    }

    #[test]
    fn embed_replicates_velocity() {
        let v = ExtendedVelocity::embed(Vector2::new(2.0, -1.0), 3);
        assert_eq!(v.len(), 3);
        for i in 0..3 {
            assert_eq!(v.component(i), Vector2::new(2.0, -1.0));
        }
    }

    #[test]
    fn transport_carries_from_to() {
        let a = state(&[[1.0, 2.0], [-0.5, 0.3]]);
        let b = state(&[[0.2, -1.1], [2.0, 2.0]]);
        let x = transport(&a, &b).unwrap();
        let moved = phi(&x, &a).unwrap();
        for i in 0..2 {
            assert_relative_eq!(moved.landmark(i), b.landmark(i), epsilon = TOL);
        }
    }

    // property-based checks

    fn angle_strategy() -> impl Strategy<Value = f64> {
        -3.0 * PI..3.0 * PI
    }

    fn scale_strategy() -> impl Strategy<Value = f64> {
        0.05f64..20.0
    }

    fn point_strategy() -> impl Strategy<Value = (f64, f64)> {
        ((-3.0f64..3.0, -3.0f64..3.0)).prop_filter("stay off the origin", |(x, y)| {
            (x * x + y * y).sqrt() > 0.3
        })
    }

    prop_compose! {
        fn group_pair()(t1 in angle_strategy(), a1 in scale_strategy(),
                        t2 in angle_strategy(), a2 in scale_strategy()) -> (GroupElement, GroupElement) {
            (element(&[(t1, a1)]), element(&[(t2, a2)]))
        }
    }

    proptest! {
        #[test]
        fn prop_group_axioms((x, y) in group_pair()) {
            let id = GroupElement::identity(1);
            let xi = x.inverse();
            let left = x.compose(&xi).unwrap();
            prop_assert!((left.angle(0).radians()).abs() < TOL);
            prop_assert!((left.scale(0).value() - 1.0).abs() < TOL);
            // commutativity
            let xy = x.compose(&y).unwrap();
            let yx = y.compose(&x).unwrap();
            prop_assert!((xy.angle(0).radians() - yx.angle(0).radians()).abs() < TOL);
            prop_assert!((xy.scale(0).value() - yx.scale(0).value()).abs() < 1e-9);
            let e = x.compose(&id).unwrap();
            prop_assert!((e.angle(0).radians() - x.angle(0).radians()).abs() < TOL);
        }

        #[test]
        fn prop_action_composes((x, y) in group_pair(), p in point_strategy()) {
            let st = state(&[[p.0, p.1]]);
            let one = phi(&y, &phi(&x, &st).unwrap()).unwrap();
            let two = phi(&x.compose(&y).unwrap(), &st).unwrap();
            prop_assert!((one.landmark(0) - two.landmark(0)).norm() < 1e-9);
        }

        #[test]
        fn prop_lift_condition(p in point_strategy(), v in point_strategy()) {
            // dphi(id)[lift(x, v)] must equal the kinematics -v
            let st = state(&[[p.0, p.1]]);
            let ve = vel(&[[v.0, v.1]]);
            let lam = lift(&st, &ve).unwrap();
            let blocks = dphi_at_identity(&st);
            let u = Vector2::new(lam.angular_rate(0), lam.scale_rate(0));
            let pushed = blocks[0] * u;
            let expected = -ve.component(0);
            prop_assert!((pushed - expected).norm() < 1e-10);
        }

        #[test]
        fn prop_lift_equivariance((x, _) in group_pair(), p in point_strategy(), v in point_strategy()) {
            // Ad_X lift(phi(X, xi), psi(X, v)) = lift(xi, v)
            let st = state(&[[p.0, p.1]]);
            let ve = vel(&[[v.0, v.1]]);
            let lhs = x
                .adjoint(&lift(&phi(&x, &st).unwrap(), &psi(&x, &ve).unwrap()).unwrap())
                .unwrap();
            let rhs = lift(&st, &ve).unwrap();
            prop_assert!((lhs.angular_rate(0) - rhs.angular_rate(0)).abs() < 1e-9);
            prop_assert!((lhs.scale_rate(0) - rhs.scale_rate(0)).abs() < 1e-9);
        }

        #[test]
        fn prop_dphi_matches_finite_difference(p in point_strategy(), w in -2.0f64..2.0, z in -2.0f64..2.0) {
            let st = state(&[[p.0, p.1]]);
            let u = AlgebraElement::from_components(vec![(w, z)]);
            let blocks = dphi_at_identity(&st);
            let analytic = blocks[0] * Vector2::new(w, z);
            let h = 1e-6;
            let plus = phi(&u.scale(h).exp(), &st).unwrap().landmark(0);
            let minus = phi(&u.scale(-h).exp(), &st).unwrap().landmark(0);
            let fd = (plus - minus) / (2.0 * h);
            prop_assert!((analytic - fd).norm() < 1e-6);
        }

        #[test]
        fn prop_stabilizer_is_trivial(p in point_strategy()) {
            // |det dphi(id)| = |x|^2 > 0: only the identity fixes a landmark
            let st = state(&[[p.0, p.1]]);
            let blocks = dphi_at_identity(&st);
            let det = blocks[0].determinant();
            prop_assert!((det.abs() - st.landmark(0).norm_squared()).abs() < 1e-9);
        }
    }
}
