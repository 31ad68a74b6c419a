//! Synchronous flock stepping, push attacks and the hacked-team scenario.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    add, avoid_term, convergence_range, escape_window, match_weight, mean, norm, saturate, scale, sub,
    FlockState, Gains, Vec3,
};
use crate::error::{input, Error, Result};
use crate::threat::{AdversaryStrategy, ObservationChannel};
use crate::topology::{max_legitimate_degree, min_tau, CommGraph, NodeId, Role, RoleAssignment};
use crate::trust::{all_correct, find_spoofed_robots, rounds_bound_theorem1, TrustValue, TrustVector, World};

/// How the velocity-matching term is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchCoupling {
    /// Neighbor and own velocities from the previous step.
    Explicit,
    /// Cooperating robots solve for their new velocities jointly; broadcast
    /// velocities of everyone else are taken as given.
    #[default]
    Implicit,
}

/// Attack roles fixed when the attack starts.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackPlan {
    pub hacked: Vec<NodeId>,
    /// Spoofed identity to its spawner.
    pub spawner: BTreeMap<NodeId, NodeId>,
    /// Malicious identity to the legitimate robot it pushes.
    pub victims: BTreeMap<NodeId, NodeId>,
    /// 1 saturates the victim's avoid term at `u_max`.
    pub push_gain: f64,
}

fn unit(v: Vec3) -> Option<Vec3> {
    let m = norm(v);
    (m > 0.0).then(|| scale(v, 1.0 / m))
}

fn closest(from: Vec3, candidates: &[NodeId], positions: &[Vec3]) -> Option<NodeId> {
    candidates.iter().copied().min_by(|&a, &b| {
        norm(sub(positions[a], from))
            .total_cmp(&norm(sub(positions[b], from)))
            .then(a.cmp(&b))
    })
}

impl AttackPlan {
    /// Spoofed identity `k` is spawned by `hacked[k % hacked.len()]` and pushes
    /// the legitimate robot closest to its spawner; hacked robots then push the
    /// closest legitimate robots not yet targeted.
    pub fn new(
        state: &FlockState,
        hacked: &[NodeId],
        spoofed: &[NodeId],
        legit: &[NodeId],
        push_gain: f64,
    ) -> Result<Self> {
        if hacked.is_empty() && !spoofed.is_empty() {
            return input("spoofed identities need at least one spawner");
        }
        if legit.is_empty() {
            return input("an attack needs legitimate victims");
        }
        if !(push_gain > 0.0) {
            return input(format!("push gain must be positive, got {push_gain}"));
        }
        let mut spawner = BTreeMap::new();
        let mut victims = BTreeMap::new();
        let mut free: Vec<NodeId> = legit.to_vec();
        let pick = |from: Vec3, free: &mut Vec<NodeId>| -> NodeId {
            let pool: &[NodeId] = if free.is_empty() { legit } else { free };
            let v = closest(from, pool, &state.positions).expect("non-empty pool");
            free.retain(|&x| x != v);
            v
        };
        for (k, &s) in spoofed.iter().enumerate() {
            let h = hacked[k % hacked.len()];
            spawner.insert(s, h);
            victims.insert(s, pick(state.positions[h], &mut free));
        }
        for &h in hacked {
            victims.insert(h, pick(state.positions[h], &mut free));
        }
        Ok(Self {
            hacked: hacked.to_vec(),
            spawner,
            victims,
            push_gain,
        })
    }
}

/// The `count` robots farthest to the right of the target's heading.
pub fn choose_hacked(state: &FlockState, candidates: &[NodeId], count: usize) -> Vec<NodeId> {
    let heading = unit(state.target_velocity).unwrap_or([1.0, 0.0, 0.0]);
    let right = [heading[1], -heading[0], 0.0];
    let mut order: Vec<NodeId> = candidates.to_vec();
    let score = |i: NodeId| {
        let p = state.positions[i];
        p[0] * right[0] + p[1] * right[1]
    };
    order.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));
    order.truncate(count);
    order
}

/// Broadcast of malicious identity `k`: a position just ahead of its victim
/// along the target heading, moving backwards at full speed, so the victim's
/// avoid term pushes it away from the target.
pub fn attack_command(k: NodeId, state: &FlockState, plan: &AttackPlan, gains: &Gains) -> Result<(Vec3, Vec3)> {
    let &victim = plan
        .victims
        .get(&k)
        .ok_or_else(|| Error::Contract(format!("identity {k} is not attacking")))?;
    let pv = state.positions[victim];
    let heading = unit(state.target_velocity)
        .or_else(|| unit(sub(state.target, pv)))
        .unwrap_or([1.0, 0.0, 0.0]);
    let d = gains.k_avoid / (plan.push_gain * gains.u_max);
    Ok((add(pv, scale(heading, d)), scale(heading, -gains.u_max)))
}

/// Everything a step needs besides the state.
#[derive(Clone, Copy, Debug)]
pub struct StepContext<'a> {
    pub roles: &'a RoleAssignment,
    /// Identity currently exists on the channel.
    pub active: &'a [bool],
    /// Identity is a physical robot, not a spoofed identity.
    pub physical: &'a [bool],
    /// Falsified broadcasts are on when present.
    pub attack: Option<&'a AttackPlan>,
    /// Per legitimate robot, which identities it listens to.
    pub trust: Option<&'a BTreeMap<NodeId, TrustVector>>,
    pub gains: &'a Gains,
    pub coupling: MatchCoupling,
}

impl StepContext<'_> {
    fn check(&self, n: usize) -> Result<()> {
        if self.roles.len() != n || self.active.len() != n || self.physical.len() != n {
            return input(format!("step context does not cover {n} identities"));
        }
        Ok(())
    }

    fn broadcast(&self, k: NodeId, state: &FlockState) -> Result<(Vec3, Vec3)> {
        match self.attack {
            Some(plan) if self.roles.role(k).is_malicious() => attack_command(k, state, plan, self.gains),
            _ => Ok((state.positions[k], state.velocities[k])),
        }
    }
}

/// One synchronous step. Legitimate robots act on the previous snapshot of
/// broadcasts, heard only if their trust vector marks the sender Trust;
/// rejected physical robots are still avoided at their true positions.
/// Malicious physical robots keep pace with the target.
pub fn step_flock(state: &FlockState, ctx: &StepContext<'_>) -> Result<FlockState> {
    let n = state.positions.len();
    ctx.check(n)?;
    let gains = ctx.gains;
    let mut broadcasts: Vec<Option<(Vec3, Vec3)>> = vec![None; n];
    for k in 0..n {
        if ctx.active[k] {
            broadcasts[k] = Some(ctx.broadcast(k, state)?);
        }
    }
    let legit: Vec<NodeId> = (0..n)
        .filter(|&i| ctx.active[i] && ctx.physical[i] && ctx.roles.role(i) == Role::Legitimate)
        .collect();
    let slot: BTreeMap<NodeId, usize> = legit.iter().enumerate().map(|(a, &i)| (i, a)).collect();

    let l = legit.len();
    let mut base = vec![[0.0; 3]; l];
    let mut coupling = DMatrix::<f64>::zeros(l, l);
    for (a, &i) in legit.iter().enumerate() {
        let pi = state.positions[i];
        let vi = state.velocities[i];
        let filter = match ctx.trust {
            Some(t) => Some(t.get(&i).ok_or_else(|| Error::Input(format!("no trust vector for robot {i}")))?),
            None => None,
        };
        let mut u = scale(sub(state.target, pi), gains.k_ref);
        let mut total_w = 0.0;
        for k in 0..n {
            if k == i {
                continue;
            }
            let Some((bp, bv)) = broadcasts[k] else { continue };
            let heard = filter.is_none_or(|f| f.get(k) == TrustValue::Trust);
            if !heard {
                if ctx.physical[k] {
                    u = add(u, avoid_term(i, k, pi, state.positions[k], gains.k_avoid)?);
                }
                continue;
            }
            u = add(u, avoid_term(i, k, pi, bp, gains.k_avoid)?);
            let w = match_weight(i, k, pi, bp, gains.k_match)?;
            match (ctx.coupling, slot.get(&k)) {
                (MatchCoupling::Implicit, Some(&b)) if bv == state.velocities[k] => {
                    coupling[(a, b)] += w;
                    total_w += w;
                }
                (MatchCoupling::Implicit, _) => {
                    u = add(u, scale(bv, w));
                    total_w += w;
                }
                (MatchCoupling::Explicit, _) => u = add(u, scale(sub(bv, vi), w)),
            }
        }
        base[a] = u;
        if ctx.coupling == MatchCoupling::Implicit {
            coupling[(a, a)] += 1.0 + total_w;
        }
    }

    let commands: Vec<Vec3> = match ctx.coupling {
        MatchCoupling::Explicit => base,
        MatchCoupling::Implicit => {
            // Diagonal is 1 + Σw, off-diagonal −w: strictly diagonally dominant.
            let mut system = -coupling.clone();
            for a in 0..l {
                system[(a, a)] = coupling[(a, a)];
            }
            let lu = system.lu();
            let mut out = vec![[0.0; 3]; l];
            for d in 0..3 {
                let rhs = DVector::from_iterator(l, base.iter().map(|u| u[d]));
                let sol = lu
                    .solve(&rhs)
                    .ok_or_else(|| Error::Domain("velocity-matching system is singular".into()))?;
                for a in 0..l {
                    out[a][d] = sol[a];
                }
            }
            out
        }
    };

    let mut next = state.clone();
    for (a, &i) in legit.iter().enumerate() {
        next.velocities[i] = saturate(commands[a], gains.u_max);
    }
    for k in 0..n {
        if !ctx.active[k] {
            continue;
        }
        if ctx.physical[k] && ctx.roles.role(k).is_malicious() {
            next.velocities[k] = saturate(state.target_velocity, gains.u_max);
        }
        if ctx.physical[k] {
            next.positions[k] = add(state.positions[k], scale(next.velocities[k], state.t_s));
        } else if let Some((bp, bv)) = broadcasts[k] {
            next.positions[k] = bp;
            next.velocities[k] = bv;
        }
    }
    next.advance_target();
    next.step += 1;
    Ok(next)
}

/// The hacked-team tracking experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlockScenario {
    pub robots: usize,
    pub hacked: usize,
    pub gains: Gains,
    pub t_s: f64,
    pub duration: f64,
    /// No attack when absent.
    pub attack_time: Option<f64>,
    pub target_start: Vec3,
    pub target_velocity: Vec3,
    pub spawn_x: [f64; 2],
    pub spawn_y: [f64; 2],
    /// Half-height of the initial altitude spread.
    pub spawn_z: f64,
    pub defense: bool,
    /// Wall-clock duration of one protocol round.
    pub seconds_per_round: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub coupling: MatchCoupling,
    pub push_gain: f64,
    /// Keep every k-th step in the trajectory; 0 keeps none.
    pub record_every: usize,
}

impl Default for FlockScenario {
    fn default() -> Self {
        Self {
            robots: 13,
            hacked: 3,
            gains: Gains::default(),
            t_s: 0.01,
            duration: 60.0,
            attack_time: Some(10.0),
            target_start: [1.0, 1.0, 0.0],
            target_velocity: [2.0, 0.0, 0.0],
            spawn_x: [-4.0, 0.0],
            spawn_y: [-1.0, 3.0],
            spawn_z: 0.0,
            defense: false,
            seconds_per_round: 0.002,
            epsilon: 1.0 / 3.0,
            delta: 0.1,
            coupling: MatchCoupling::Implicit,
            push_gain: AdversaryStrategy::default().attack_push_gain,
            record_every: 10,
        }
    }
}

/// One identity at one recorded step.
#[derive(Clone, Debug, PartialEq)]
pub struct FlockFrame {
    pub t: f64,
    pub id: NodeId,
    pub role: Role,
    pub position: Vec3,
    pub velocity: Vec3,
    pub target: Vec3,
    pub in_range: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlockOutcome {
    /// Centroid of the legitimate team left the convergence range after the attack.
    pub escaped: bool,
    /// Seconds from attack start to the first exit.
    pub time_to_escape: Option<f64>,
    /// Seconds from the last re-entry back to attack start, when the team ends in range.
    pub recovery_time: Option<f64>,
    pub max_distance_after_attack: f64,
    pub final_distance: f64,
    /// Mean centroid-to-target distance over the second before the attack
    /// (the final ten seconds without one).
    pub settled_trail: f64,
    pub escape_window: f64,
    pub trust_rounds: Option<usize>,
    pub resolution_time: Option<f64>,
    pub trust_correct: Option<bool>,
    pub frames: Vec<FlockFrame>,
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, range: [f64; 2]) -> f64 {
    range[0] + (range[1] - range[0]) * rng.random::<f64>()
}

fn steps_for(seconds: f64, t_s: f64) -> usize {
    (seconds / t_s - 1e-9).ceil().max(0.0) as usize
}

/// Runs the scenario. Robot ids `0..robots` are physical; the next `hacked`
/// ids are spoofed identities that appear when the attack starts.
pub fn run_flock<R: Rng + ?Sized>(sc: &FlockScenario, rng: &mut R) -> Result<FlockOutcome> {
    let speed = norm(sc.target_velocity);
    sc.gains.validate(sc.t_s, speed)?;
    if sc.robots == 0 || sc.hacked >= sc.robots {
        return input("need more robots than hacked robots");
    }
    if sc.defense && !(sc.seconds_per_round > 0.0) {
        return input("seconds_per_round must be positive");
    }
    let n = sc.robots + sc.hacked;
    let physical: Vec<bool> = (0..n).map(|k| k < sc.robots).collect();
    let mut active = physical.clone();
    let mut roles = RoleAssignment::all_legitimate(n);
    for k in sc.robots..n {
        roles.set(k, Role::Spoofed);
    }
    let positions: Vec<Vec3> = (0..n)
        .map(|k| {
            if k < sc.robots {
                let z = if sc.spawn_z > 0.0 { uniform(rng, [-sc.spawn_z, sc.spawn_z]) } else { 0.0 };
                [uniform(rng, sc.spawn_x), uniform(rng, sc.spawn_y), z]
            } else {
                [0.0; 3]
            }
        })
        .collect();
    let mut state = FlockState::new(positions, sc.target_start, sc.target_velocity, sc.t_s)?;

    let total = steps_for(sc.duration, sc.t_s);
    let attack_step = sc.attack_time.map(|t| steps_for(t, sc.t_s));
    let range = convergence_range(&sc.gains);
    let delta_window = escape_window(sc.gains.u_max, speed, sc.gains.k_ref)?;
    let trail_window = match attack_step {
        Some(a) => (a.saturating_sub(steps_for(1.0, sc.t_s)), a),
        None => (total.saturating_sub(steps_for(10.0, sc.t_s)), total),
    };

    let mut plan: Option<AttackPlan> = None;
    let mut trust: Option<BTreeMap<NodeId, TrustVector>> = None;
    let mut filter_step: Option<usize> = None;
    let mut outcome = FlockOutcome {
        escaped: false,
        time_to_escape: None,
        recovery_time: None,
        max_distance_after_attack: 0.0,
        final_distance: 0.0,
        settled_trail: 0.0,
        escape_window: delta_window,
        trust_rounds: None,
        resolution_time: None,
        trust_correct: None,
        frames: Vec::new(),
    };
    let mut trail_sum = 0.0;
    let mut trail_count = 0usize;
    let mut was_out = false;
    let mut last_reentry: Option<usize> = None;

    for step in 0..total {
        if Some(step) == attack_step {
            let legit: Vec<NodeId> = (0..sc.robots).collect();
            let hacked = choose_hacked(&state, &legit, sc.hacked);
            for &h in &hacked {
                roles.set(h, Role::Spawning);
            }
            for a in active.iter_mut() {
                *a = true;
            }
            let victims: Vec<NodeId> = (0..sc.robots).filter(|k| !hacked.contains(k)).collect();
            let spoofed: Vec<NodeId> = (sc.robots..n).collect();
            let p = AttackPlan::new(&state, &hacked, &spoofed, &victims, sc.push_gain)?;
            for &s in &spoofed {
                let (bp, bv) = attack_command(s, &state, &p, &sc.gains)?;
                state.positions[s] = bp;
                state.velocities[s] = bv;
            }
            if sc.defense {
                let (vectors, r, correct) = resolve_trust(&roles, &p, sc, rng)?;
                let seconds = (r + 1) as f64 * sc.seconds_per_round;
                outcome.trust_rounds = Some(r);
                outcome.resolution_time = Some(seconds);
                outcome.trust_correct = Some(correct);
                filter_step = Some(step + steps_for(seconds, sc.t_s));
                trust = Some(vectors);
            }
            plan = Some(p);
        }
        let filtering = filter_step.is_some_and(|f| step >= f);
        let ctx = StepContext {
            roles: &roles,
            active: &active,
            physical: &physical,
            attack: plan.as_ref(),
            trust: if filtering { trust.as_ref() } else { None },
            gains: &sc.gains,
            coupling: sc.coupling,
        };
        state = step_flock(&state, &ctx)?;

        let team: Vec<Vec3> = (0..sc.robots)
            .filter(|&k| roles.role(k) == Role::Legitimate)
            .map(|k| state.positions[k])
            .collect();
        let distance = norm(sub(state.target, mean(team)));
        let in_range = distance <= range;
        if state.step > trail_window.0 && state.step <= trail_window.1 {
            trail_sum += distance;
            trail_count += 1;
        }
        if let Some(a) = attack_step.filter(|&a| state.step > a) {
            outcome.max_distance_after_attack = outcome.max_distance_after_attack.max(distance);
            if !in_range && !outcome.escaped {
                outcome.escaped = true;
                outcome.time_to_escape = Some((state.step - a) as f64 * sc.t_s);
            }
            if was_out && in_range {
                last_reentry = Some(state.step);
            }
            was_out = !in_range;
        }
        outcome.final_distance = distance;
        if sc.record_every > 0 && state.step % sc.record_every == 0 {
            for k in (0..n).filter(|&k| active[k]) {
                outcome.frames.push(FlockFrame {
                    t: state.time(),
                    id: k,
                    role: roles.role(k),
                    position: state.positions[k],
                    velocity: state.velocities[k],
                    target: state.target,
                    in_range,
                });
            }
        }
    }
    if let (Some(a), Some(re), false) = (attack_step, last_reentry, was_out) {
        outcome.recovery_time = Some((re - a) as f64 * sc.t_s);
    }
    outcome.settled_trail = trail_sum / trail_count.max(1) as f64;
    Ok(outcome)
}

/// Runs the trust protocol over every active identity on a complete channel
/// graph, sized by the round bound for `sc.delta`.
fn resolve_trust<R: Rng + ?Sized>(
    roles: &RoleAssignment,
    plan: &AttackPlan,
    sc: &FlockScenario,
    rng: &mut R,
) -> Result<(BTreeMap<NodeId, TrustVector>, usize, bool)> {
    let n = roles.len();
    let graph = CommGraph::complete(n)?;
    let mut strategy = AdversaryStrategy::default();
    for (&s, &h) in &plan.spawner {
        strategy.spawn_map.entry(h).or_default().push(s);
    }
    let world = World::new(graph, roles.clone(), ObservationChannel::bernoulli(sc.epsilon)?, strategy)?;
    let tau = min_tau(&world.graph, &world.roles)?;
    let r = rounds_bound_theorem1(
        roles.legitimate_count(),
        n,
        world.channel.epsilon(),
        tau,
        max_legitimate_degree(&world.graph, &world.roles),
        sc.delta,
    )?;
    let vectors = find_spoofed_robots(&world, r, rng)?;
    let correct = all_correct(&world, &vectors);
    Ok((vectors, r, correct))
}

/// Rows `t,id,role,px,py,pz,vx,vy,vz,target_x,target_y,target_z,in_range`.
pub fn write_flock_csv<W: Write>(out: W, frames: &[FlockFrame]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t", "id", "role", "px", "py", "pz", "vx", "vy", "vz", "target_x", "target_y", "target_z", "in_range",
    ])?;
    for f in frames {
        let mut rec = vec![format!("{:.4}", f.t), f.id.to_string(), f.role.label().to_string()];
        rec.extend(f.position.iter().chain(&f.velocity).chain(&f.target).map(|x| format!("{x:.9}")));
        rec.push(u8::from(f.in_range).to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flocking::centroid_dynamics_closed_form;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn free_state(n: usize, seed: u64) -> FlockState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positions = (0..n)
            .map(|_| [uniform(&mut rng, [-4.0, 0.0]), uniform(&mut rng, [-1.0, 3.0]), 0.0])
            .collect();
        FlockState::new(positions, [1.0, 1.0, 0.0], [2.0, 0.0, 0.0], 0.01).unwrap()
    }

    #[test]
    fn unsaturated_centroid_follows_closed_form() {
        for coupling in [MatchCoupling::Explicit, MatchCoupling::Implicit] {
            let gains = Gains { u_max: f64::INFINITY, ..Gains::default() };
            let mut s = free_state(5, 1);
            let n = s.positions.len();
            let roles = RoleAssignment::all_legitimate(n);
            let flags = vec![true; n];
            let ctx = StepContext {
                roles: &roles,
                active: &flags,
                physical: &flags,
                attack: None,
                trust: None,
                gains: &gains,
                coupling,
            };
            let c0 = mean(s.positions.clone());
            let t0 = s.target;
            for t in 1..=500 {
                s = step_flock(&s, &ctx).unwrap();
                let expect = centroid_dynamics_closed_form(c0, t0, s.target_velocity, 3.0, 0.01, t).unwrap();
                let got = mean(s.positions.clone());
                assert!(norm(sub(got, expect)) < 1e-6, "{coupling:?} step {t}");
            }
        }
    }

    #[test]
    fn attack_pushes_victim_away_from_target() {
        let s = FlockState::new(vec![[0.0; 3], [0.0; 3]], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], 0.01).unwrap();
        let plan = AttackPlan {
            hacked: vec![1],
            spawner: BTreeMap::new(),
            victims: BTreeMap::from([(1, 0)]),
            push_gain: 1.0,
        };
        let g = Gains::default();
        let (bp, bv) = attack_command(1, &s, &plan, &g).unwrap();
        assert!(bp[0] > 0.0 && bp[0] < 1.0);
        assert!(bv[0] < 0.0);
        let push = avoid_term(0, 1, s.positions[0], bp, g.k_avoid).unwrap();
        assert!(push[0] < 0.0);
        assert!((norm(push) - g.u_max).abs() < 1e-9);
        assert!(attack_command(0, &s, &plan, &g).is_err());
    }

    #[test]
    fn hacked_robots_are_on_the_right() {
        let s = FlockState::new(
            vec![[0.0, 2.0, 0.0], [0.0, -1.0, 0.0], [5.0, 0.0, 0.0], [0.0, -3.0, 0.0]],
            [0.0; 3],
            [2.0, 0.0, 0.0],
            0.01,
        )
        .unwrap();
        assert_eq!(choose_hacked(&s, &[0, 1, 2, 3], 2), vec![3, 1]);
    }

    #[test]
    fn plan_assigns_distinct_victims() {
        let s = free_state(13, 4);
        let hacked = choose_hacked(&s, &(0..13).collect::<Vec<_>>(), 3);
        let legit: Vec<NodeId> = (0..13).filter(|k| !hacked.contains(k)).collect();
        let plan = AttackPlan::new(&s, &hacked, &[13, 14, 15], &legit, 1.0).unwrap();
        assert_eq!(plan.victims.len(), 6);
        let targets: BTreeSet<NodeId> = plan.victims.values().copied().collect();
        assert_eq!(targets.len(), 6);
        assert!(targets.iter().all(|v| legit.contains(v)));
    }

    #[test]
    fn disabled_attack_broadcasts_truth() {
        let s = free_state(3, 2);
        let roles = RoleAssignment::new(vec![Role::Legitimate, Role::Spawning, Role::Legitimate]);
        let flags = vec![true; 3];
        let ctx = StepContext {
            roles: &roles,
            active: &flags,
            physical: &flags,
            attack: None,
            trust: None,
            gains: &Gains::default(),
            coupling: MatchCoupling::Implicit,
        };
        assert_eq!(ctx.broadcast(1, &s).unwrap(), (s.positions[1], s.velocities[1]));
    }

    #[test]
    fn speeds_stay_saturated() {
        let sc = FlockScenario { duration: 12.0, record_every: 1, ..FlockScenario::default() };
        let out = run_flock(&sc, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(out
            .frames
            .iter()
            .filter(|f| f.role != Role::Spoofed)
            .all(|f| norm(f.velocity) <= sc.gains.u_max + 1e-9));
    }

    #[test]
    fn settles_at_the_steady_trail() {
        let sc = FlockScenario { attack_time: None, duration: 40.0, record_every: 0, ..FlockScenario::default() };
        for seed in 0..3 {
            let out = run_flock(&sc, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert!(!out.escaped);
            assert!((out.settled_trail - 2.0 / 3.0).abs() < 0.01 * 2.0 / 3.0, "{}", out.settled_trail);
        }
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_flock_csv(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,id,role,px,py,pz,vx,vy,vz,target_x,target_y,target_z,in_range\n"
        );
    }
}
