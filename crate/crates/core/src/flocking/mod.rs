//! Reynolds-style flocking around a moving target, tracking-range formulas and
//! Sybil push attacks.

mod scenario;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::topology::NodeId;

pub use scenario::{
    attack_command, choose_hacked, run_flock, step_flock, write_flock_csv, AttackPlan, FlockFrame,
    FlockOutcome, FlockScenario, MatchCoupling, StepContext,
};

pub type Vec3 = [f64; 3];

/// Distances below this are clamped in the avoid and match terms.
pub const MIN_DISTANCE: f64 = 1e-3;

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn norm(a: Vec3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

pub(crate) fn mean(points: impl IntoIterator<Item = Vec3>) -> Vec3 {
    let mut s = [0.0; 3];
    let mut count = 0usize;
    for p in points {
        s = add(s, p);
        count += 1;
    }
    scale(s, 1.0 / count.max(1) as f64)
}

/// Caps the magnitude of `u` at `u_max`.
pub fn saturate(u: Vec3, u_max: f64) -> Vec3 {
    let m = norm(u);
    if m > u_max {
        scale(u, u_max / m)
    } else {
        u
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Gains {
    pub k_ref: f64,
    pub k_avoid: f64,
    pub k_match: f64,
    /// Speed limit in m/s.
    pub u_max: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Self {
            k_ref: 3.0,
            k_avoid: 1.0,
            k_match: 0.2,
            u_max: 4.5,
        }
    }
}

impl Gains {
    /// Checks `k_ref·t_s < 1` and `u_max > ‖vel_cen‖`.
    pub fn validate(&self, t_s: f64, target_speed: f64) -> Result<()> {
        for (name, v) in [("k_ref", self.k_ref), ("k_avoid", self.k_avoid), ("k_match", self.k_match)] {
            if !(v >= 0.0) || !v.is_finite() {
                return input(format!("{name} must be a non-negative number, got {v}"));
            }
        }
        if !(self.k_ref > 0.0) {
            return input("k_ref must be positive");
        }
        if !(t_s > 0.0) || !t_s.is_finite() {
            return input(format!("sampling time must be positive, got {t_s}"));
        }
        if self.k_ref * t_s >= 1.0 {
            return Err(Error::Unstable(self.k_ref * t_s));
        }
        if !(self.u_max > target_speed) {
            return Err(Error::InfeasibleTracking {
                u_max: self.u_max,
                target_speed,
            });
        }
        Ok(())
    }
}

/// Positions, velocities and target of a team at one time step.
#[derive(Clone, Debug, PartialEq)]
pub struct FlockState {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub target: Vec3,
    pub target_velocity: Vec3,
    pub step: usize,
    pub t_s: f64,
}

impl FlockState {
    pub fn new(positions: Vec<Vec3>, target: Vec3, target_velocity: Vec3, t_s: f64) -> Result<Self> {
        if !(t_s > 0.0) {
            return input(format!("sampling time must be positive, got {t_s}"));
        }
        let velocities = vec![[0.0; 3]; positions.len()];
        Ok(Self {
            positions,
            velocities,
            target,
            target_velocity,
            step: 0,
            t_s,
        })
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.t_s
    }

    pub fn target_speed(&self) -> f64 {
        norm(self.target_velocity)
    }

    /// `p_cen[t+1] = p_cen[t] + t_s·vel_cen`.
    pub(crate) fn advance_target(&mut self) {
        self.target = add(self.target, scale(self.target_velocity, self.t_s));
    }
}

fn offset(i: NodeId, j: NodeId, pi: Vec3, pj: Vec3) -> Result<(Vec3, f64)> {
    let d = sub(pi, pj);
    let r = norm(d);
    if r == 0.0 {
        return Err(Error::Singularity(i, j));
    }
    Ok((d, r.max(MIN_DISTANCE)))
}

/// `k_avoid (p_i − p_j)/‖p_i − p_j‖²`
pub(crate) fn avoid_term(i: NodeId, j: NodeId, pi: Vec3, pj: Vec3, k_avoid: f64) -> Result<Vec3> {
    let (d, r) = offset(i, j, pi, pj)?;
    Ok(scale(d, k_avoid / (r * r)))
}

/// `k_match / ‖p_i − p_j‖`
pub(crate) fn match_weight(i: NodeId, j: NodeId, pi: Vec3, pj: Vec3, k_match: f64) -> Result<f64> {
    let (_, r) = offset(i, j, pi, pj)?;
    Ok(k_match / r)
}

/// Saturated command of robot `i`:
/// `k_ref(p_cen − p_i) + Σ k_avoid(p_i − p_j)/‖·‖² + Σ k_match(v_j − v_i)/‖·‖`
/// over `nbrs` (self ignored).
pub fn control_input(i: NodeId, state: &FlockState, nbrs: &BTreeSet<NodeId>, gains: &Gains) -> Result<Vec3> {
    let n = state.positions.len();
    if i >= n {
        return input(format!("robot {i} out of range"));
    }
    let pi = state.positions[i];
    let vi = state.velocities[i];
    let mut u = scale(sub(state.target, pi), gains.k_ref);
    for &j in nbrs {
        if j == i {
            continue;
        }
        if j >= n {
            return input(format!("neighbor {j} out of range"));
        }
        let pj = state.positions[j];
        u = add(u, avoid_term(i, j, pi, pj, gains.k_avoid)?);
        let w = match_weight(i, j, pi, pj, gains.k_match)?;
        u = add(u, scale(sub(state.velocities[j], vi), w));
    }
    Ok(saturate(u, gains.u_max))
}

/// Largest centroid-to-target distance from which tracking recovers: `u_max/k_ref`.
pub fn convergence_range(gains: &Gains) -> f64 {
    gains.u_max / gains.k_ref
}

/// Converged lag of the centroid behind the target: `‖vel_cen‖/k_ref`.
pub fn steady_trail(gains: &Gains, vel_cen: Vec3) -> f64 {
    norm(vel_cen) / gains.k_ref
}

/// Minimum attack duration to break tracking:
/// `(u_max − vel_cen)/(k_ref (u_max + vel_cen))`.
pub fn escape_window(u_max: f64, vel_cen: f64, k_ref: f64) -> Result<f64> {
    if !(u_max > vel_cen) {
        return Err(Error::InfeasibleTracking {
            u_max,
            target_speed: vel_cen,
        });
    }
    if !(k_ref > 0.0) {
        return input("k_ref must be positive");
    }
    Ok((u_max - vel_cen) / (k_ref * (u_max + vel_cen)))
}

/// Unsaturated centroid after `t` steps:
/// `p_cen[t] − v/k + (p̄0 − p_cen0 + v/k)(1 − k·t_s)^t`.
pub fn centroid_dynamics_closed_form(
    centroid0: Vec3,
    target0: Vec3,
    vel_cen: Vec3,
    k_ref: f64,
    t_s: f64,
    t: usize,
) -> Result<Vec3> {
    if k_ref * t_s >= 1.0 {
        return Err(Error::Unstable(k_ref * t_s));
    }
    let decay = (1.0 - k_ref * t_s).powi(t as i32);
    let mut out = [0.0; 3];
    for d in 0..3 {
        let lag = vel_cen[d] / k_ref;
        let target_t = target0[d] + t as f64 * t_s * vel_cen[d];
        out[d] = target_t - lag + (centroid0[d] - target0[d] + lag) * decay;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(positions: Vec<Vec3>, target: Vec3) -> FlockState {
        FlockState::new(positions, target, [0.0; 3], 0.01).unwrap()
    }

    #[test]
    fn idle_robot_at_target() {
        let s = state(vec![[1.0, 2.0, 0.0]], [1.0, 2.0, 0.0]);
        assert_eq!(control_input(0, &s, &BTreeSet::new(), &Gains::default()).unwrap(), [0.0; 3]);
    }

    #[test]
    fn reference_term_and_saturation() {
        let s = state(vec![[0.0; 3]], [1.0, 0.0, 0.0]);
        let free = Gains { u_max: 10.0, ..Gains::default() };
        assert_eq!(control_input(0, &s, &BTreeSet::new(), &free).unwrap(), [3.0, 0.0, 0.0]);
        let tight = Gains { u_max: 2.0, ..Gains::default() };
        assert_eq!(control_input(0, &s, &BTreeSet::new(), &tight).unwrap(), [2.0, 0.0, 0.0]);
    }

    #[test]
    fn pair_repulsion_is_symmetric() {
        let g = Gains { k_ref: 0.0, k_avoid: 1.0, k_match: 0.2, u_max: 10.0 };
        let s = state(vec![[0.0; 3], [1.0, 0.0, 0.0]], [0.5, 0.0, 0.0]);
        let both = BTreeSet::from([0, 1]);
        assert_eq!(control_input(0, &s, &both, &g).unwrap(), [-1.0, 0.0, 0.0]);
        assert_eq!(control_input(1, &s, &both, &g).unwrap(), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn coincident_robots_are_singular() {
        let s = state(vec![[0.0; 3], [0.0; 3]], [1.0, 0.0, 0.0]);
        assert!(matches!(
            control_input(0, &s, &BTreeSet::from([1]), &Gains::default()),
            Err(Error::Singularity(0, 1))
        ));
        // Nearly coincident robots are clamped instead.
        let s = state(vec![[0.0; 3], [1e-6, 0.0, 0.0]], [0.0; 3]);
        let g = Gains { u_max: f64::INFINITY, ..Gains::default() };
        let u = control_input(0, &s, &BTreeSet::from([1]), &g).unwrap();
        assert!((u[0] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn range_trail_and_window() {
        let g = Gains::default();
        assert_eq!(convergence_range(&g), 1.5);
        let doubled = Gains { k_ref: 6.0, ..g };
        assert_eq!(convergence_range(&doubled), 0.75);
        assert_eq!(convergence_range(&Gains { u_max: 0.0, ..g }), 0.0);
        assert!((steady_trail(&g, [2.0, 0.0, 0.0]) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(steady_trail(&g, [0.0; 3]), 0.0);
        assert!((escape_window(4.5, 2.0, 3.0).unwrap() - 2.5 / 19.5).abs() < 1e-15);
        assert!((escape_window(4.5, 0.0, 3.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(escape_window(2.0 + 1e-9, 2.0, 3.0).unwrap() < 1e-9);
        assert!(matches!(escape_window(2.0, 2.0, 3.0), Err(Error::InfeasibleTracking { .. })));
    }

    #[test]
    fn closed_form_limits() {
        let p0 = [-3.0, 0.5, 0.0];
        let c0 = [1.0, 1.0, 0.0];
        let v = [2.0, 0.0, 0.0];
        assert_eq!(centroid_dynamics_closed_form(p0, c0, v, 3.0, 0.01, 0).unwrap(), p0);
        let far = centroid_dynamics_closed_form(p0, c0, v, 3.0, 0.01, 5000).unwrap();
        let target = [c0[0] + 50.0 * 2.0, 1.0, 0.0];
        assert!((far[0] - (target[0] - 2.0 / 3.0)).abs() < 1e-9);
        assert!((far[1] - 1.0).abs() < 1e-9);
        assert!(matches!(
            centroid_dynamics_closed_form(p0, c0, v, 100.0, 0.01, 1),
            Err(Error::Unstable(_))
        ));
    }

    #[test]
    fn gain_validation() {
        let g = Gains::default();
        assert!(g.validate(0.01, 2.0).is_ok());
        assert!(matches!(g.validate(0.5, 2.0), Err(Error::Unstable(_))));
        assert!(matches!(g.validate(0.01, 5.0), Err(Error::InfeasibleTracking { .. })));
    }
}
