//! Deterministic invariant suite over randomized configurations.
//!
//! Each property draws a fixed number of random group elements, states and
//! velocities from a seeded generator and reports the worst residual seen.
//! The suite is cheap enough to run at startup and its verdicts never vary
//! between runs, so a regression in any algebraic identity shows up as a
//! named failing property rather than a drifting simulation.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::filter::{output_matrix_blocks_fd, state_matrix_blocks_fd};
use crate::group::{
    dphi_at_identity, dphi_right_inverse, lift, phi, psi, rotation_matrix, transport,
    AlgebraElement, CircleAngle, ExtendedVelocity, GroupElement, PositiveScale, SystemState,
};
use crate::slam2d::{output_blocks, state_blocks, Slam2dModel};

const SELFCHECK_SEED: u64 = 0x5e1f;
const DRAWS: usize = 200;
const ALGEBRA_TOL: f64 = 1e-11;
const FD_TOL: f64 = 1e-5;

/// Verdict of one checked property.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.residual.is_finite() && self.residual <= self.tolerance
    }
}

/// Runs every property and returns one result per property, in a fixed
/// order.
pub fn run_selfcheck() -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(SELFCHECK_SEED);
    vec![
        check("group axioms", ALGEBRA_TOL, group_axioms(&mut rng)),
        check("exponential map", ALGEBRA_TOL, exponential_map(&mut rng)),
        check(
            "action composition",
            ALGEBRA_TOL,
            action_composition(&mut rng),
        ),
        check("lift compatibility", ALGEBRA_TOL, lift_compat(&mut rng)),
        check("lift equivariance", ALGEBRA_TOL, lift_equivariance(&mut rng)),
        check(
            "dynamics equivariance",
            ALGEBRA_TOL,
            dynamics_equivariance(&mut rng),
        ),
        check(
            "action differential inverse",
            ALGEBRA_TOL,
            differential_inverse(&mut rng),
        ),
        check(
            "transport re-anchoring",
            ALGEBRA_TOL,
            transport_consistency(&mut rng),
        ),
        check(
            "output blocks annihilate radial directions",
            ALGEBRA_TOL,
            output_projector(&mut rng),
        ),
        check(
            "state Jacobian vs finite differences",
            FD_TOL,
            state_jacobian_fd(&mut rng),
        ),
        check(
            "output Jacobian vs finite differences",
            FD_TOL,
            output_jacobian_fd(&mut rng),
        ),
    ]
}

pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(CheckResult::passed)
}

/// One line per property: verdict, name, worst residual, tolerance.
pub fn render(results: &[CheckResult]) -> String {
    let mut out = String::new();
    for r in results {
        let verdict = if r.passed() { "ok    " } else { "FAILED" };
        out.push_str(&format!(
            "{verdict}  {:<44}  residual {:9.2e}  (tolerance {:.0e})\n",
            r.name, r.residual, r.tolerance
        ));
    }
    out
}

fn check(name: &'static str, tolerance: f64, residual: f64) -> CheckResult {
    CheckResult {
        name,
        residual,
        tolerance,
    }
}

fn random_group(n: usize, rng: &mut ChaCha8Rng) -> GroupElement {
    let comps: Vec<(CircleAngle, PositiveScale)> = (0..n)
        .map(|_| {
            let theta = CircleAngle::new(rng.gen_range(-PI..PI));
            let a = PositiveScale::new(rng.gen_range(-1.4f64..1.4).exp2()).unwrap();
            (theta, a)
        })
        .collect();
    GroupElement::from_components(comps)
}

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> SystemState {
    let landmarks: Vec<Vector2<f64>> = (0..n)
        .map(|_| {
            let angle = rng.gen_range(-PI..PI);
            let radius = rng.gen_range(0.5f64..3.0);
            Vector2::new(radius * angle.cos(), radius * angle.sin())
        })
        .collect();
    SystemState::new(landmarks).unwrap()
}

fn random_velocity(n: usize, rng: &mut ChaCha8Rng) -> ExtendedVelocity {
    ExtendedVelocity::new(
        (0..n)
            .map(|_| Vector2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
            .collect(),
    )
}

/// Distance of a group element from the identity, componentwise.
fn identity_residual(x: &GroupElement) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let theta = x.angle(i).radians();
        worst = worst
            .max(theta.sin().abs())
            .max((theta.cos() - 1.0).abs())
            .max((x.scale(i).value() - 1.0).abs());
    }
    worst
}

fn group_residual(a: &GroupElement, b: &GroupElement) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.len() {
        let da = a.angle(i).radians();
        let db = b.angle(i).radians();
        worst = worst
            .max((da.sin() - db.sin()).abs())
            .max((da.cos() - db.cos()).abs())
            .max((a.scale(i).value() - b.scale(i).value()).abs());
    }
    worst
}

fn state_residual(a: &SystemState, b: &SystemState) -> f64 {
    a.landmarks()
        .iter()
        .zip(b.landmarks())
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max)
}

fn block_residual(a: &[Matrix2<f64>], b: &[Matrix2<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).abs().max())
        .fold(0.0, f64::max)
}

fn group_axioms(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..DRAWS {
        let n = rng.gen_range(1..5);
        let a = random_group(n, rng);
        let b = random_group(n, rng);
        let c = random_group(n, rng);
        let id = GroupElement::identity(n);
        worst = worst
            .max(identity_residual(&a.compose(&a.inverse()).unwrap()))
            .max(identity_residual(&a.inverse().compose(&a).unwrap()))
            .max(group_residual(&a.compose(&id).unwrap(), &a))
            .max(group_residual(&id.compose(&a).unwrap(), &a))
            .max(group_residual(
                &a.compose(&b).unwrap().compose(&c).unwrap(),
                &a.compose(&b.compose(&c).unwrap()).unwrap(),
            ));
    }
    worst
}

fn exponential_map(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..DRAWS {
        let n = rng.gen_range(1..5);
        let comps: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let u = AlgebraElement::from_components(comps);
        let x = u.exp();
        worst = worst
            .max(identity_residual(&x.compose(&u.scale(-1.0).exp()).unwrap()))
            .max(identity_residual(&AlgebraElement::zero(n).exp()));
        for i in 0..n {
            worst = worst.max((x.scale(i).value() - u.scale_rate(i).exp()).abs());
        }
    }
    worst
}

fn action_composition(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..DRAWS {
        let n = rng.gen_range(1..5);
        let a = random_group(n, rng);
        let b = random_group(n, rng);
        let xi = random_state(n, rng);
        let v = random_velocity(n, rng);
        let joint = phi(&a.compose(&b).unwrap(), &xi).unwrap();
        let nested = phi(&b, &phi(&a, &xi).unwrap()).unwrap();
        worst = worst.max(state_residual(&joint, &nested));
        let joint_v = psi(&a.compose(&b).unwrap(), &v).unwrap();
        let nested_v = psi(&b, &psi(&a, &v).unwrap()).unwrap();
        for i in 0..n {
            worst = worst.max((joint_v.component(i) - nested_v.component(i)).norm());
        }
    }
    worst
}

fn lift_compat(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..DRAWS {
        let n = rng.gen_range(1..5);
        let xi = random_state(n, rng);
        let v = random_velocity(n, rng);
        let lam = lift(&xi, &v).unwrap();
        let blocks = dphi_at_identity(&xi);
        for i in 0..n {
            let rate = Vector2::new(lam.angular_rate(i), lam.scale_rate(i));
            let through_lift = blocks[i] * rate;
            worst = worst.max((through_lift - (-v.component(i))).norm());
        }
    }
    worst
}

fn lift_equivariance(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..DRAWS {
        let n = rng.gen_range(1..5);
        let x = random_group(n, rng);
        let xi = random_state(n, rng);
        let v = random_velocity(n, rng);
        let plain = x.adjoint(&lift(&xi, &v).unwrap()).unwrap();
        let moved = lift(&phi(&x, &xi).unwrap(), &psi(&x, &v).unwrap()).unwrap();
        for i in 0..n {
            worst = worst
                .max((moved.angular_rate(i) - plain.angular_rate(i)).abs())
                .max((moved.scale_rate(i) - plain.scale_rate(i)).abs());
        }
    }
    worst
}

fn dynamics_equivariance(rng: &mut ChaCha8Rng) -> f64 {
    use crate::filter::SystemModel;
    let mut worst = 0.0f64;
    for _ in 0..DRAWS {
        let n = rng.gen_range(1..5);
        let x = random_group(n, rng);
        let xi = random_state(n, rng);
        let v = random_velocity(n, rng);
        let model = Slam2dModel::new(xi.clone()).unwrap();
        let plain = model.dynamics(&xi, &v).unwrap();
        let moved = model
            .dynamics(&phi(&x, &xi).unwrap(), &psi(&x, &v).unwrap())
            .unwrap();
        for i in 0..n {
            let mapped = rotation_matrix(x.angle(i)).transpose() * plain[i] / x.scale(i).value();
            worst = worst.max((moved[i] - mapped).norm());
        }
    }
    worst
}

fn differential_inverse(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..DRAWS {
        let n = rng.gen_range(1..5);
        let xi = random_state(n, rng);
        let fwd = dphi_at_identity(&xi);
        let inv = dphi_right_inverse(&xi);
        let eyes: Vec<Matrix2<f64>> = (0..n).map(|_| Matrix2::identity()).collect();
        let left: Vec<Matrix2<f64>> = (0..n).map(|i| fwd[i] * inv[i]).collect();
        let right: Vec<Matrix2<f64>> = (0..n).map(|i| inv[i] * fwd[i]).collect();
        worst = worst
            .max(block_residual(&left, &eyes))
            .max(block_residual(&right, &eyes));
    }
    worst
}

fn transport_consistency(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..DRAWS {
        let n = rng.gen_range(1..5);
        let from = random_state(n, rng);
        let to = random_state(n, rng);
        let x = transport(&from, &to).unwrap();
        worst = worst.max(state_residual(&phi(&x, &from).unwrap(), &to));
    }
    worst
}

fn output_projector(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..DRAWS {
        let n = rng.gen_range(1..5);
        let origin = random_state(n, rng);
        let observer = random_group(n, rng);
        let blocks = output_blocks(&origin, &observer);
        for i in 0..n {
            worst = worst.max((blocks[i] * origin.landmark(i)).norm());
        }
    }
    worst
}

fn state_jacobian_fd(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..DRAWS / 2 {
        let n = rng.gen_range(1..4);
        let origin = random_state(n, rng);
        let v = random_velocity(n, rng);
        let model = Slam2dModel::new(origin.clone()).unwrap();
        let analytic = state_blocks(&origin, &v);
        let fd = state_matrix_blocks_fd(&model, &v).unwrap();
        worst = worst.max(block_residual(&analytic, &fd));
    }
    worst
}

fn output_jacobian_fd(rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..DRAWS / 2 {
        let n = rng.gen_range(1..4);
        let origin = random_state(n, rng);
        let observer = random_group(n, rng);
        let model = Slam2dModel::new(origin.clone()).unwrap();
        let analytic = output_blocks(&origin, &observer);
        let fd = output_matrix_blocks_fd(&model, &observer).unwrap();
        worst = worst.max(block_residual(&analytic, &fd));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_property_passes() {
        let results = run_selfcheck();
        assert_eq!(results.len(), 11);
        for r in &results {
            assert!(
                r.passed(),
                "{} residual {:.3e} over tolerance {:.1e}",
                r.name,
                r.residual,
                r.tolerance
            );
        }
        assert!(all_passed(&results));
    }

    #[test]
    fn verdicts_are_deterministic() {
        let a = run_selfcheck();
        let b = run_selfcheck();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.name, y.name);
            assert_eq!(x.residual, y.residual);
        }
    }

    #[test]
    fn render_lists_every_property() {
        let results = run_selfcheck();
        let text = render(&results);
        assert_eq!(text.lines().count(), results.len());
        assert!(text.contains("lift compatibility"));
        assert!(!text.contains("FAILED"));
    }

    #[test]
    fn failed_property_renders_as_failure() {
        let broken = vec![CheckResult {
            name: "example",
            residual: 1.0,
            tolerance: 1e-11,
        }];
        assert!(!all_passed(&broken));
        assert!(render(&broken).contains("FAILED"));
    }
}
