//! Trusted adjacency flooding.
//!
//! Rows are the robots' broadcast trust vectors with NoData read as 0. A robot
//! accepts rows only from neighbors it finally trusts, and waits for a row of
//! every robot that appears as trusted in a row it already holds. Adversaries
//! broadcast their own row and relay nothing.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use super::{BinaryMatrix, PartialAdjacency};
use crate::error::{input, Error, Result};
use crate::threat::{adversarial_trust_vector, VectorPolicy};
use crate::topology::{NodeId, Role};
use crate::trust::{TrustValue, TrustVector, World};

fn as_row(v: &TrustVector) -> Vec<u8> {
    v.entries()
        .iter()
        .map(|&x| u8::from(x == TrustValue::Trust))
        .collect()
}

/// Adds the vector every adversary broadcasts to the legitimate robots' final vectors.
pub fn fram_broadcasts<R: Rng + ?Sized>(
    world: &World,
    final_vectors: &BTreeMap<NodeId, TrustVector>,
    rng: &mut R,
) -> Result<BTreeMap<NodeId, TrustVector>> {
    let mut out = final_vectors.clone();
    for k in 0..world.n() {
        let role = world.roles.role(k);
        if role == Role::Legitimate {
            continue;
        }
        let policy: VectorPolicy = if role == Role::Hidden {
            world.strategy.hidden_vector_policy
        } else {
            world.strategy.detectable_vector_policy
        };
        let nbrs = world.graph.neighbors(k)?;
        out.insert(k, adversarial_trust_vector(&world.roles, policy, k, &nbrs, rng)?);
    }
    Ok(out)
}

/// Flooding state of every legitimate robot.
#[derive(Clone, Debug)]
pub struct FramState<'w> {
    world: &'w World,
    trust: BTreeMap<NodeId, TrustVector>,
    partial: BTreeMap<NodeId, PartialAdjacency>,
    rounds: usize,
}

impl<'w> FramState<'w> {
    /// Exchange of own rows between neighbors. `broadcasts` holds what each
    /// robot sends; legitimate robots must be present and their vector doubles
    /// as their acceptance filter.
    pub fn first_exchange(world: &'w World, broadcasts: &BTreeMap<NodeId, TrustVector>) -> Result<Self> {
        let n = world.n();
        let mut trust = BTreeMap::new();
        for i in world.roles.legitimate() {
            let v = broadcasts
                .get(&i)
                .ok_or_else(|| Error::Input(format!("missing trust vector of robot {i}")))?;
            if v.len() != n || v.owner() != i {
                return input(format!("trust vector of robot {i} has the wrong shape"));
            }
            trust.insert(i, v.clone());
        }
        let rows: BTreeMap<NodeId, Vec<u8>> = broadcasts.iter().map(|(&k, v)| (k, as_row(v))).collect();
        let mut partial = BTreeMap::new();
        for (&i, v) in &trust {
            let mut p = PartialAdjacency::new(i, n);
            for k in world.graph.neighbors(i)? {
                if v.get(k) == TrustValue::Trust {
                    if let Some(row) = rows.get(&k) {
                        p.fill_row(k, row.clone());
                    }
                }
            }
            partial.insert(i, p);
        }
        Ok(Self {
            world,
            trust,
            partial,
            rounds: 0,
        })
    }

    /// Flooding rounds completed after the first exchange.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn partial(&self, i: NodeId) -> Option<&PartialAdjacency> {
        self.partial.get(&i)
    }

    /// Robots whose rows robot `i` still waits for.
    pub fn expected(&self, i: NodeId) -> BTreeSet<NodeId> {
        let p = &self.partial[&i];
        let mut out = BTreeSet::from([i]);
        for k in 0..p.n() {
            if let Some(row) = p.row(k) {
                out.extend(row.iter().enumerate().filter(|(_, &x)| x == 1).map(|(q, _)| q));
            }
        }
        out
    }

    pub fn missing(&self, i: NodeId) -> usize {
        let p = &self.partial[&i];
        self.expected(i).into_iter().filter(|&q| !p.has_row(q)).count()
    }

    pub fn total_missing(&self) -> usize {
        self.partial.keys().map(|&i| self.missing(i)).sum()
    }

    /// One synchronous flooding round over trusted legitimate links.
    pub fn flood_round(&mut self) {
        let snapshot = self.partial.clone();
        for (&i, p) in self.partial.iter_mut() {
            let v = &self.trust[&i];
            for &k in self.world.graph.adjacent(i) {
                if v.get(k) != TrustValue::Trust {
                    continue;
                }
                let Some(src) = snapshot.get(&k) else { continue };
                for q in 0..src.n() {
                    if let Some(row) = src.row(q) {
                        p.fill_row(q, row.to_vec());
                    }
                }
            }
        }
        self.rounds += 1;
    }

    /// Matrix of robot `i`: expected rows it holds, with rows and columns of
    /// every other robot zeroed.
    pub fn adjacency(&self, i: NodeId) -> BinaryMatrix {
        let p = &self.partial[&i];
        let keep: BTreeSet<NodeId> = self.expected(i).into_iter().filter(|&q| p.has_row(q)).collect();
        let mut m = BinaryMatrix::zeros(p.n());
        for &q in &keep {
            let row = p.row(q).expect("kept rows are held");
            for (j, &x) in row.iter().enumerate() {
                if x == 1 && keep.contains(&j) {
                    m.set(q, j, true);
                }
            }
        }
        m
    }
}

/// Floods trusted rows until no robot waits for a row and at least `n − 1`
/// rounds have run. Fails with the first stalled robot's partial matrix when
/// `max_rounds` is reached first.
pub fn fram(
    world: &World,
    broadcasts: &BTreeMap<NodeId, TrustVector>,
    max_rounds: usize,
) -> Result<BTreeMap<NodeId, BinaryMatrix>> {
    let mut st = FramState::first_exchange(world, broadcasts)?;
    let min_rounds = world.n().saturating_sub(1);
    loop {
        let pending = st.total_missing() > 0;
        if !pending && st.rounds() >= min_rounds {
            break;
        }
        if st.rounds() >= max_rounds {
            if !pending {
                break;
            }
            let (&owner, partial) = st
                .partial
                .iter()
                .find(|(&i, _)| st.missing(i) > 0)
                .expect("pending implies a stalled robot");
            return Err(Error::FloodStalled {
                owner,
                rounds: st.rounds(),
                missing: st.missing(owner),
                partial: Box::new(partial.clone()),
            });
        }
        st.flood_round();
    }
    Ok(st.partial.keys().map(|&i| (i, st.adjacency(i))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::threat::{AdversaryStrategy, ObservationChannel};
    use crate::topology::{fixture_graph, CommGraph, RoleAssignment};
    use crate::trust::ground_truth;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn world(name: &str) -> World {
        let (g, roles) = fixture_graph(name).unwrap();
        World::new(g, roles, ObservationChannel::noiseless(), AdversaryStrategy::default()).unwrap()
    }

    fn perfect(world: &World) -> BTreeMap<NodeId, TrustVector> {
        let truth = world.roles.legitimate().into_iter().map(|i| (i, ground_truth(world, i))).collect();
        fram_broadcasts(world, &truth, &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
    }

    #[test]
    fn estimation5_first_exchange_and_result() {
        let w = world("estimation5");
        let b = perfect(&w);
        let st = FramState::first_exchange(&w, &b).unwrap();
        let p = st.partial(0).unwrap();
        assert_eq!(p.render(), "1 0 1 1 0\n- - - - -\n1 1 1 1 0\n1 0 1 1 0\n- - - - -\n");
        let out = fram(&w, &b, 100).unwrap();
        let g = BinaryMatrix::from_graph(&w.graph);
        assert!(out.values().all(|m| *m == g));
    }

    #[test]
    fn missing_rows_never_increase() {
        let w = world("fig4");
        let mut st = FramState::first_exchange(&w, &perfect(&w)).unwrap();
        let mut prev: Vec<usize> = (0..12).map(|i| st.partial(i).unwrap().missing_rows()).collect();
        for _ in 0..12 {
            st.flood_round();
            let now: Vec<usize> = (0..12).map(|i| st.partial(i).unwrap().missing_rows()).collect();
            assert!(now.iter().zip(&prev).all(|(a, b)| a <= b));
            prev = now;
        }
    }

    #[test]
    fn fig3_with_perfect_trust_recovers_the_physical_network() {
        let w = world("fig3");
        let out = fram(&w, &perfect(&w), 100).unwrap();
        let (actual, _) = fixture_graph("fig4").unwrap();
        let expected = BinaryMatrix::from_graph(&actual);
        for m in out.values() {
            assert_eq!(m.top_left(12), expected);
            assert!((12..14).all(|q| (0..14).all(|j| !m.get(q, j) && !m.get(j, q))));
        }
    }

    #[test]
    fn rows_advertised_by_a_non_relaying_robot_stall() {
        // Hidden robot 1 advertises both ends of the path but relays nothing.
        let g = CommGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let roles = RoleAssignment::new(vec![Role::Legitimate, Role::Hidden, Role::Legitimate]);
        let w = World::new(g, roles, ObservationChannel::noiseless(), AdversaryStrategy::default()).unwrap();
        let mut b = perfect(&w);
        b.insert(1, TrustVector::from_ternary(1, "111").unwrap());
        match fram(&w, &b, 5) {
            Err(Error::FloodStalled { rounds, missing, partial, .. }) => {
                assert_eq!(rounds, 5);
                assert_eq!(missing, 1);
                assert_eq!(partial.missing_rows(), 1);
            }
            other => panic!("expected a stall, got {other:?}"),
        }
    }

    #[test]
    fn requires_legitimate_vectors() {
        let w = world("estimation5");
        assert!(FramState::first_exchange(&w, &BTreeMap::new()).is_err());
    }
}
