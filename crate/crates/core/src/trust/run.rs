//! Protocol execution.
//!
//! Only legitimate robots sample observations: adversaries replace their
//! interim vectors with policy vectors, so their own samples never matter.
//! Sampling is round-major from the caller's generator, which makes the first
//! `r` rounds identical across runs of different length under one seed.

use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ground_truth, final_trust, TrustMatrix, TrustValue, TrustVector, World};
use crate::error::{input, Result};
use crate::threat::{adversarial_trust_vector, VectorPolicy};
use crate::topology::{NodeId, Role};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Observation majority only.
    Baseline,
    /// Observation majority followed by the trusted-neighbor vote.
    FindSpoofedRobots,
}

/// Incremental protocol state: observation tallies of every legitimate robot
/// plus the fixed adversarial broadcasts.
pub struct ProtocolRun<'w> {
    world: &'w World,
    rounds: usize,
    legit: Vec<NodeId>,
    /// Position of each node in `legit`, or `usize::MAX`.
    legit_index: Vec<usize>,
    /// Sorted open neighborhoods.
    adjacent: Vec<Vec<NodeId>>,
    /// Sum of observations, aligned with `adjacent[legit[a]]`.
    tallies: Vec<Vec<f64>>,
    detectable: Vec<Vec<bool>>,
    adversary_vectors: Vec<Option<TrustVector>>,
    /// Per target `j`, voters broadcasting Trust/Distrust on `j` among adversaries.
    fixed_trust: Vec<FixedBitSet>,
    fixed_distrust: Vec<FixedBitSet>,
}

impl<'w> ProtocolRun<'w> {
    /// Draws adversarial broadcast vectors from a generator seeded off `rng`.
    pub fn new<R: Rng + ?Sized>(world: &'w World, rng: &mut R) -> Self {
        let n = world.n();
        let g = &world.graph;
        let roles = &world.roles;
        let adjacent: Vec<Vec<NodeId>> = (0..n).map(|i| g.adjacent(i).iter().copied().collect()).collect();
        let legit = roles.legitimate();
        let mut legit_index = vec![usize::MAX; n];
        for (a, &i) in legit.iter().enumerate() {
            legit_index[i] = a;
        }
        let tallies = legit.iter().map(|&i| vec![0.0; adjacent[i].len()]).collect();
        let detectable = legit
            .iter()
            .map(|&i| adjacent[i].iter().map(|&j| roles.role(j).is_detectable()).collect())
            .collect();

        let mut policy_rng = ChaCha8Rng::seed_from_u64(rng.random());
        let mut adversary_vectors = vec![None; n];
        let mut fixed_trust = vec![FixedBitSet::with_capacity(n); n];
        let mut fixed_distrust = vec![FixedBitSet::with_capacity(n); n];
        for k in 0..n {
            let role = roles.role(k);
            if role == Role::Legitimate {
                continue;
            }
            let policy = policy_for(world, role);
            let v = adversarial_trust_vector(roles, policy, k, &g.neighbors(k).expect("in range"), &mut policy_rng)
                .expect("malicious robot");
            for (j, &value) in v.entries().iter().enumerate() {
                match value {
                    TrustValue::Trust => fixed_trust[j].insert(k),
                    TrustValue::Distrust => fixed_distrust[j].insert(k),
                    TrustValue::NoData => {}
                }
            }
            adversary_vectors[k] = Some(v);
        }
        Self {
            world,
            rounds: 0,
            legit,
            legit_index,
            adjacent,
            tallies,
            detectable,
            adversary_vectors,
            fixed_trust,
            fixed_distrust,
        }
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// One synchronous observation round.
    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let ch = &self.world.channel;
        for (tally, det) in self.tallies.iter_mut().zip(&self.detectable) {
            for (t, &d) in tally.iter_mut().zip(det) {
                *t += ch.sample_detectable(d, rng);
            }
        }
        self.rounds += 1;
    }

    pub fn advance_by<R: Rng + ?Sized>(&mut self, rounds: usize, rng: &mut R) {
        for _ in 0..rounds {
            self.advance(rng);
        }
    }

    fn threshold(&self) -> f64 {
        self.rounds as f64 / 2.0
    }

    /// Interim vector of legitimate robot `i` after the rounds run so far.
    pub fn interim(&self, i: NodeId) -> TrustVector {
        let a = self.legit_index[i];
        assert!(a != usize::MAX, "robot {i} is not legitimate");
        let thr = self.threshold();
        let mut v = TrustVector::new(i, self.world.n());
        for (&j, &t) in self.adjacent[i].iter().zip(&self.tallies[a]) {
            v.set(j, TrustValue::from_bool(t >= thr));
        }
        v
    }

    /// Vector robot `k` broadcasts in the exchange round.
    pub fn broadcast(&self, k: NodeId) -> TrustVector {
        match &self.adversary_vectors[k] {
            Some(v) => v.clone(),
            None => self.interim(k),
        }
    }

    /// Matrix assembled at legitimate robot `i` from its neighbors' broadcasts.
    pub fn trust_matrix(&self, i: NodeId) -> TrustMatrix {
        let mut m = TrustMatrix::new(i, self.world.n());
        m.set_column(self.interim(i)).expect("sized to n");
        for &k in &self.adjacent[i] {
            m.set_column(self.broadcast(k)).expect("sized to n");
        }
        m
    }

    /// Baseline output: interim vectors of all legitimate robots.
    pub fn interim_vectors(&self) -> BTreeMap<NodeId, TrustVector> {
        self.legit.iter().map(|&i| (i, self.interim(i))).collect()
    }

    /// Final vectors through the explicit matrix route.
    pub fn final_vectors_reference(&self) -> BTreeMap<NodeId, TrustVector> {
        self.legit
            .iter()
            .map(|&i| {
                let nbrs = self.world.graph.neighbors(i).expect("in range");
                (i, final_trust(&self.trust_matrix(i), &nbrs).expect("owner column present"))
            })
            .collect()
    }

    /// Vote columns including the legitimate broadcasts of the current round.
    fn vote_columns(&self) -> (Vec<FixedBitSet>, Vec<FixedBitSet>) {
        let mut yes = self.fixed_trust.clone();
        let mut no = self.fixed_distrust.clone();
        let thr = self.threshold();
        for (a, &k) in self.legit.iter().enumerate() {
            yes[k].insert(k);
            for (&j, &t) in self.adjacent[k].iter().zip(&self.tallies[a]) {
                if t >= thr {
                    yes[j].insert(k);
                } else {
                    no[j].insert(k);
                }
            }
        }
        (yes, no)
    }

    fn voters(&self, a: usize, thr: f64) -> FixedBitSet {
        let i = self.legit[a];
        let mut v = FixedBitSet::with_capacity(self.world.n());
        v.insert(i);
        for (&k, &t) in self.adjacent[i].iter().zip(&self.tallies[a]) {
            if t >= thr {
                v.insert(k);
            }
        }
        v
    }

    /// Final vectors via column bitsets; same result as the matrix route.
    pub fn final_vectors(&self) -> BTreeMap<NodeId, TrustVector> {
        let (yes, no) = self.vote_columns();
        let thr = self.threshold();
        let n = self.world.n();
        let mut out = BTreeMap::new();
        for (a, &i) in self.legit.iter().enumerate() {
            let voters = self.voters(a, thr);
            let mut v = TrustVector::new(i, n);
            for &j in &self.adjacent[i] {
                let trust = voters.intersection_count(&yes[j]) >= voters.intersection_count(&no[j]);
                v.set(j, TrustValue::from_bool(trust));
            }
            out.insert(i, v);
        }
        out
    }

    pub fn vectors(&self, algorithm: Algorithm) -> BTreeMap<NodeId, TrustVector> {
        match algorithm {
            Algorithm::Baseline => self.interim_vectors(),
            Algorithm::FindSpoofedRobots => self.final_vectors(),
        }
    }

    /// True iff every legitimate interim vector is correct.
    pub fn baseline_correct(&self) -> bool {
        let thr = self.threshold();
        self.tallies
            .iter()
            .zip(&self.detectable)
            .all(|(tally, det)| tally.iter().zip(det).all(|(&t, &d)| (t >= thr) != d))
    }

    /// True iff every legitimate final vector is correct. Stops at the first error.
    pub fn fsr_correct(&self) -> bool {
        let (yes, no) = self.vote_columns();
        let thr = self.threshold();
        for (a, &i) in self.legit.iter().enumerate() {
            let voters = self.voters(a, thr);
            for (&j, &d) in self.adjacent[i].iter().zip(&self.detectable[a]) {
                let trust = voters.intersection_count(&yes[j]) >= voters.intersection_count(&no[j]);
                if trust == d {
                    return false;
                }
            }
        }
        true
    }

    pub fn correct(&self, algorithm: Algorithm) -> bool {
        match algorithm {
            Algorithm::Baseline => self.baseline_correct(),
            Algorithm::FindSpoofedRobots => self.fsr_correct(),
        }
    }

    /// Ground-truth vectors of every legitimate robot.
    pub fn ground_truth(&self) -> BTreeMap<NodeId, TrustVector> {
        self.legit.iter().map(|&i| (i, ground_truth(self.world, i))).collect()
    }
}

fn policy_for(world: &World, role: Role) -> VectorPolicy {
    match role {
        Role::Hidden => world.strategy.hidden_vector_policy,
        _ => world.strategy.detectable_vector_policy,
    }
}

fn check_rounds(r: usize) -> Result<()> {
    if r == 0 {
        return input("at least one round is required");
    }
    Ok(())
}

/// Runs `r` observation rounds, the vector exchange and the final vote.
/// Returns the final vector of every legitimate robot.
pub fn find_spoofed_robots<R: Rng + ?Sized>(
    world: &World,
    r: usize,
    rng: &mut R,
) -> Result<BTreeMap<NodeId, TrustVector>> {
    check_rounds(r)?;
    let mut run = ProtocolRun::new(world, rng);
    run.advance_by(r, rng);
    Ok(run.final_vectors())
}

/// Interim vectors of every legitimate robot after `r` rounds.
pub fn baseline_trust<R: Rng + ?Sized>(
    world: &World,
    r: usize,
    rng: &mut R,
) -> Result<BTreeMap<NodeId, TrustVector>> {
    check_rounds(r)?;
    let mut run = ProtocolRun::new(world, rng);
    run.advance_by(r, rng);
    Ok(run.interim_vectors())
}

/// Per-round all-robot success of both algorithms for `r = 1..=r_max`
/// on one coupled observation stream. Index `r - 1` holds round `r`.
pub fn success_curve<R: Rng + ?Sized>(
    world: &World,
    r_max: usize,
    rng: &mut R,
) -> (Vec<bool>, Vec<bool>) {
    let mut run = ProtocolRun::new(world, rng);
    let mut baseline = Vec::with_capacity(r_max);
    let mut fsr = Vec::with_capacity(r_max);
    for _ in 0..r_max {
        run.advance(rng);
        baseline.push(run.baseline_correct());
        fsr.push(run.fsr_correct());
    }
    (baseline, fsr)
}

/// First round count at which `algorithm` succeeds, or `None` within `cap`.
pub fn rounds_to_success<R: Rng + ?Sized>(
    world: &World,
    algorithm: Algorithm,
    cap: usize,
    rng: &mut R,
) -> Option<usize> {
    let mut run = ProtocolRun::new(world, rng);
    for r in 1..=cap {
        run.advance(rng);
        if run.correct(algorithm) {
            return Some(r);
        }
    }
    None
}

#[derive(Clone, Debug)]
pub struct AnytimeReport {
    /// Every `r̂` executed, in order.
    pub estimates: Vec<usize>,
    /// Number of callback invocations.
    pub updates: usize,
    pub vectors: BTreeMap<NodeId, TrustVector>,
}

/// Doubling driver: reruns the protocol at `r̂ = 1, 2, 4, …` while
/// `r̂ ≤ 20·ln(n/ε²)/ε²` and reports each changed vector set to `callback`.
pub fn anytime_driver<R, F>(world: &World, rng: &mut R, mut callback: F) -> Result<AnytimeReport>
where
    R: Rng + ?Sized,
    F: FnMut(usize, &BTreeMap<NodeId, TrustVector>),
{
    let cap = super::anytime_cap(world.n(), world.channel.epsilon().min(0.499_999))?;
    let mut estimate = 1usize;
    let mut estimates = Vec::new();
    let mut updates = 0;
    let mut current: Option<BTreeMap<NodeId, TrustVector>> = None;
    while estimate as f64 <= cap {
        let v = find_spoofed_robots(world, estimate, rng)?;
        estimates.push(estimate);
        if current.as_ref() != Some(&v) {
            callback(estimate, &v);
            updates += 1;
            current = Some(v);
        }
        estimate *= 2;
    }
    Ok(AnytimeReport {
        estimates,
        updates,
        vectors: current.unwrap_or_default(),
    })
}
