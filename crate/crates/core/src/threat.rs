//! Observation channel and adversary behavior.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_distr::{Bernoulli, Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::topology::{NodeId, Role, RoleAssignment};
use crate::trust::{TrustValue, TrustVector};

pub const EPSILON_MIN: f64 = 1e-3;
pub const EPSILON_MAX: f64 = 0.499;
pub const DEFAULT_CONCENTRATION: f64 = 8.0;

/// Distribution family of a single observation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ObservationMode {
    /// `X ∈ {0, 1}`.
    Bernoulli,
    /// `X ∈ [0, 1]`, Beta with the same mean and concentration `α + β`.
    Beta { concentration: f64 },
}

impl Default for ObservationMode {
    fn default() -> Self {
        ObservationMode::Bernoulli
    }
}

#[derive(Clone, Debug)]
enum Sampler {
    Bernoulli { honest: Bernoulli, detectable: Bernoulli },
    Beta { honest: Beta<f64>, detectable: Beta<f64> },
}

/// Per-message quality signal: mean `1/2 + ε` for legitimate and hidden
/// senders, `1/2 − ε` for spawning and spoofed ones.
#[derive(Clone, Debug)]
pub struct ObservationChannel {
    epsilon: f64,
    mode: ObservationMode,
    sampler: Sampler,
}

impl ObservationChannel {
    /// `epsilon` is clamped to `[EPSILON_MIN, EPSILON_MAX]`.
    pub fn new(epsilon: f64, mode: ObservationMode) -> Result<Self> {
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return input(format!("epsilon must be positive, got {epsilon}"));
        }
        Self::build(epsilon.clamp(EPSILON_MIN, EPSILON_MAX), mode)
    }

    pub fn bernoulli(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, ObservationMode::Bernoulli)
    }

    /// Perfect channel (`ε = 1/2` exactly, bypassing the clamp).
    pub fn noiseless() -> Self {
        Self::build(0.5, ObservationMode::Bernoulli).expect("valid probabilities")
    }

    fn build(epsilon: f64, mode: ObservationMode) -> Result<Self> {
        let hi = 0.5 + epsilon;
        let lo = 0.5 - epsilon;
        let sampler = match mode {
            ObservationMode::Bernoulli => Sampler::Bernoulli {
                honest: Bernoulli::new(hi).map_err(|e| Error::Input(e.to_string()))?,
                detectable: Bernoulli::new(lo).map_err(|e| Error::Input(e.to_string()))?,
            },
            ObservationMode::Beta { concentration } => {
                if !(concentration > 0.0) || !concentration.is_finite() {
                    return input(format!("concentration must be positive, got {concentration}"));
                }
                if lo <= 0.0 {
                    return input("Beta observations need epsilon < 1/2");
                }
                let beta = |mean: f64| {
                    Beta::new(mean * concentration, (1.0 - mean) * concentration)
                        .map_err(|e| Error::Input(e.to_string()))
                };
                Sampler::Beta {
                    honest: beta(hi)?,
                    detectable: beta(lo)?,
                }
            }
        };
        Ok(Self {
            epsilon,
            mode,
            sampler,
        })
    }

    /// Effective (clamped) ε.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mode(&self) -> ObservationMode {
        self.mode
    }

    /// Mean of `X` for a sender with `role`.
    pub fn mean(&self, role: Role) -> f64 {
        if role.is_detectable() {
            0.5 - self.epsilon
        } else {
            0.5 + self.epsilon
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, sender: Role, rng: &mut R) -> f64 {
        self.sample_detectable(sender.is_detectable(), rng)
    }

    #[inline]
    pub(crate) fn sample_detectable<R: Rng + ?Sized>(&self, detectable: bool, rng: &mut R) -> f64 {
        match &self.sampler {
            Sampler::Bernoulli { honest, detectable: d } => {
                let bit = if detectable { d.sample(rng) } else { honest.sample(rng) };
                if bit {
                    1.0
                } else {
                    0.0
                }
            }
            Sampler::Beta { honest, detectable: d } => {
                if detectable {
                    d.sample(rng)
                } else {
                    honest.sample(rng)
                }
            }
        }
    }
}

/// Draws `X_j^t(i)` for a message from a sender with role `sender`.
pub fn sample_observation<R: Rng + ?Sized>(
    ch: &ObservationChannel,
    sender: Role,
    rng: &mut R,
) -> f64 {
    ch.sample(sender, rng)
}

/// Trust vector an adversary broadcasts in place of an honest interim vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorPolicy {
    /// Each neighbor entry uniform over {0, 1}.
    Random,
    /// Trust detectable robots, distrust everyone else.
    #[default]
    Inverted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdversaryStrategy {
    pub hidden_vector_policy: VectorPolicy,
    /// Policy of spawning and spoofed identities.
    pub detectable_vector_policy: VectorPolicy,
    /// Scales the repulsion of injected flocking positions; 1 saturates the victim.
    pub attack_push_gain: f64,
    /// Spawner id to the spoofed ids it controls.
    pub spawn_map: BTreeMap<NodeId, Vec<NodeId>>,
}

impl Default for AdversaryStrategy {
    fn default() -> Self {
        Self {
            hidden_vector_policy: VectorPolicy::Inverted,
            detectable_vector_policy: VectorPolicy::Inverted,
            attack_push_gain: 1.0,
            spawn_map: BTreeMap::new(),
        }
    }
}

impl AdversaryStrategy {
    /// Checks the spawn map against `roles`. When at least one spawning robot
    /// exists every spoofed id must belong to exactly one spawner.
    pub fn validate(&self, roles: &RoleAssignment) -> Result<()> {
        if !(self.attack_push_gain > 0.0) || !self.attack_push_gain.is_finite() {
            return input(format!(
                "attack_push_gain must be positive, got {}",
                self.attack_push_gain
            ));
        }
        let mut owner: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        for (&spawner, spoofed) in &self.spawn_map {
            if spawner >= roles.len() || roles.role(spawner) != Role::Spawning {
                return input(format!("spawn map key {spawner} is not a spawning robot"));
            }
            for &s in spoofed {
                if s >= roles.len() || roles.role(s) != Role::Spoofed {
                    return input(format!("spawn map entry {s} is not a spoofed robot"));
                }
                if let Some(prev) = owner.insert(s, spawner) {
                    return input(format!("spoofed robot {s} claimed by {prev} and {spawner}"));
                }
            }
        }
        if roles.spawning_count() > 0 {
            for s in roles.ids_with(Role::Spoofed) {
                if !owner.contains_key(&s) {
                    return input(format!("spoofed robot {s} has no spawner"));
                }
            }
        }
        Ok(())
    }
}

/// Vector an adversary broadcasts under `policy`. Self entry is Trust and
/// non-neighbors are NoData.
pub fn adversarial_trust_vector<R: Rng + ?Sized>(
    truth: &RoleAssignment,
    policy: VectorPolicy,
    me: NodeId,
    nbrs: &BTreeSet<NodeId>,
    rng: &mut R,
) -> Result<TrustVector> {
    if me >= truth.len() {
        return input(format!("node {me} out of range"));
    }
    if !truth.role(me).is_malicious() {
        return Err(Error::Contract(format!("robot {me} is legitimate")));
    }
    let mut v = TrustVector::new(me, truth.len());
    for &j in nbrs {
        if j >= truth.len() {
            return input(format!("neighbor {j} out of range"));
        }
        if j == me {
            continue;
        }
        let value = match policy {
            VectorPolicy::Random => TrustValue::from_bool(rng.random::<bool>()),
            VectorPolicy::Inverted => TrustValue::from_bool(truth.role(j).is_detectable()),
        };
        v.set(j, value);
    }
    Ok(v)
}

/// Vector broadcast by a hidden adversary.
pub fn hidden_trust_vector<R: Rng + ?Sized>(
    truth: &RoleAssignment,
    policy: VectorPolicy,
    me: NodeId,
    nbrs: &BTreeSet<NodeId>,
    rng: &mut R,
) -> Result<TrustVector> {
    if me >= truth.len() || truth.role(me) != Role::Hidden {
        return Err(Error::Contract(format!("robot {me} is not a hidden adversary")));
    }
    adversarial_trust_vector(truth, policy, me, nbrs, rng)
}
