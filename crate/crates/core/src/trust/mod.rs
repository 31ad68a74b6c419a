//! Trust vectors, the observation-majority and neighborhood-vote rules, and
//! round-complexity bounds.

mod bounds;
mod run;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::threat::{AdversaryStrategy, ObservationChannel};
use crate::topology::{CommGraph, NodeId, RoleAssignment};

pub use bounds::{anytime_cap, rounds_bound_baseline, rounds_bound_theorem1, RoundBudget};
pub use run::{
    anytime_driver, baseline_trust, find_spoofed_robots, rounds_to_success, success_curve,
    Algorithm, AnytimeReport, ProtocolRun,
};

/// A single opinion entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrustValue {
    Trust,
    Distrust,
    NoData,
}

impl TrustValue {
    pub fn from_bool(trust: bool) -> Self {
        if trust {
            TrustValue::Trust
        } else {
            TrustValue::Distrust
        }
    }

    /// `'1'`, `'0'` or `'-'`.
    pub fn symbol(self) -> char {
        match self {
            TrustValue::Trust => '1',
            TrustValue::Distrust => '0',
            TrustValue::NoData => '-',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '1' => Some(TrustValue::Trust),
            '0' => Some(TrustValue::Distrust),
            '-' => Some(TrustValue::NoData),
            _ => None,
        }
    }
}

/// Opinion of robot `owner` about every node id.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TrustVector {
    owner: NodeId,
    entries: Vec<TrustValue>,
}

impl TrustVector {
    /// All NoData except the owner's own Trust entry.
    pub fn new(owner: NodeId, n: usize) -> Self {
        assert!(owner < n, "owner {owner} out of range for n = {n}");
        let mut entries = vec![TrustValue::NoData; n];
        entries[owner] = TrustValue::Trust;
        Self { owner, entries }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, j: NodeId) -> TrustValue {
        self.entries[j]
    }

    /// Sets entry `j`. The owner's entry is pinned to Trust.
    pub fn set(&mut self, j: NodeId, value: TrustValue) {
        if j != self.owner {
            self.entries[j] = value;
        }
    }

    pub fn entries(&self) -> &[TrustValue] {
        &self.entries
    }

    pub fn trusted(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == TrustValue::Trust)
            .map(|(j, _)| j)
    }

    /// Compact ternary rendering, e.g. `"1-01"`.
    pub fn to_ternary(&self) -> String {
        self.entries.iter().map(|v| v.symbol()).collect()
    }

    pub fn from_ternary(owner: NodeId, s: &str) -> Result<Self> {
        let entries = s
            .chars()
            .map(|c| {
                TrustValue::from_symbol(c)
                    .ok_or_else(|| Error::Input(format!("bad trust symbol {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if owner >= entries.len() {
            return input(format!("owner {owner} out of range for {s:?}"));
        }
        if entries[owner] != TrustValue::Trust {
            return input(format!("owner entry of {s:?} must be 1"));
        }
        Ok(Self { owner, entries })
    }
}

impl fmt::Display for TrustVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_ternary())
    }
}

/// Broadcast vectors collected at `owner`: column `k` is the vector sent by
/// robot `k`, absent (all NoData) for non-neighbors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrustMatrix {
    owner: NodeId,
    columns: Vec<Option<TrustVector>>,
}

impl TrustMatrix {
    pub fn new(owner: NodeId, n: usize) -> Self {
        assert!(owner < n, "owner {owner} out of range for n = {n}");
        Self {
            owner,
            columns: vec![None; n],
        }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn n(&self) -> usize {
        self.columns.len()
    }

    pub fn set_column(&mut self, v: TrustVector) -> Result<()> {
        if v.len() != self.columns.len() {
            return input("column length does not match the matrix");
        }
        let k = v.owner();
        self.columns[k] = Some(v);
        Ok(())
    }

    pub fn column(&self, k: NodeId) -> Option<&TrustVector> {
        self.columns[k].as_ref()
    }

    /// `v_{k,j}`: robot k's opinion about robot j.
    pub fn entry(&self, k: NodeId, j: NodeId) -> TrustValue {
        self.columns[k].as_ref().map_or(TrustValue::NoData, |c| c.get(j))
    }
}

/// A protocol instance: topology, ground-truth roles, channel and adversary behavior.
#[derive(Clone, Debug)]
pub struct World {
    pub graph: CommGraph,
    pub roles: RoleAssignment,
    pub channel: ObservationChannel,
    pub strategy: AdversaryStrategy,
}

impl World {
    pub fn new(
        graph: CommGraph,
        roles: RoleAssignment,
        channel: ObservationChannel,
        strategy: AdversaryStrategy,
    ) -> Result<Self> {
        if roles.len() != graph.n() {
            return input(format!(
                "role assignment covers {} nodes but graph has {}",
                roles.len(),
                graph.n()
            ));
        }
        strategy.validate(&roles)?;
        Ok(Self {
            graph,
            roles,
            channel,
            strategy,
        })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }
}

/// Correct vector for legitimate robot `i`: trust legitimate and hidden
/// neighbors, distrust detectable ones.
pub fn ground_truth(world: &World, i: NodeId) -> TrustVector {
    let mut v = TrustVector::new(i, world.n());
    for &j in world.graph.adjacent(i) {
        v.set(j, TrustValue::from_bool(!world.roles.role(j).is_detectable()));
    }
    v
}

/// True iff every legitimate robot's vector equals its ground truth.
pub fn all_correct(world: &World, vectors: &BTreeMap<NodeId, TrustVector>) -> bool {
    world
        .roles
        .legitimate()
        .into_iter()
        .all(|i| vectors.get(&i) == Some(&ground_truth(world, i)))
}

/// Observation majority: Trust iff `Σ_t X ≥ r/2`. `obs` holds one sequence
/// per neighbor other than `owner`; all sequences share the same length.
pub fn interim_trust(
    n: usize,
    owner: NodeId,
    nbrs: &BTreeSet<NodeId>,
    obs: &BTreeMap<NodeId, Vec<f64>>,
) -> Result<TrustVector> {
    if owner >= n {
        return input(format!("owner {owner} out of range for n = {n}"));
    }
    let mut rounds = None;
    let mut v = TrustVector::new(owner, n);
    for &k in nbrs {
        if k == owner {
            continue;
        }
        if k >= n {
            return input(format!("neighbor {k} out of range"));
        }
        let seq = obs
            .get(&k)
            .ok_or_else(|| Error::Input(format!("no observations for neighbor {k}")))?;
        match rounds {
            None => rounds = Some(seq.len()),
            Some(r) if r != seq.len() => {
                return input(format!(
                    "ragged observations: neighbor {k} has {} rounds, expected {r}",
                    seq.len()
                ))
            }
            _ => {}
        }
        if seq.is_empty() {
            return input("at least one observation round is required");
        }
        let sum: f64 = seq.iter().sum();
        v.set(k, TrustValue::from_bool(sum >= seq.len() as f64 / 2.0));
    }
    Ok(v)
}

/// Neighborhood vote at `m.owner()`: for each `j ∈ nbrs`, Trust iff among the
/// robots the owner interim-trusts at least as many trust `j` as distrust it.
pub fn final_trust(m: &TrustMatrix, nbrs: &BTreeSet<NodeId>) -> Result<TrustVector> {
    let owner = m.owner();
    let own = m
        .column(owner)
        .ok_or_else(|| Error::Input(format!("matrix lacks the owner's column {owner}")))?;
    let voters: Vec<NodeId> = own.trusted().collect();
    let mut v = TrustVector::new(owner, m.n());
    for &j in nbrs {
        if j >= m.n() {
            return input(format!("neighbor {j} out of range"));
        }
        let (mut yes, mut no) = (0usize, 0usize);
        for &k in &voters {
            match m.entry(k, j) {
                TrustValue::Trust => yes += 1,
                TrustValue::Distrust => no += 1,
                TrustValue::NoData => {}
            }
        }
        v.set(j, TrustValue::from_bool(yes >= no));
    }
    Ok(v)
}

/// Writes `owner,target,value` rows for every entry of every vector.
pub fn write_trust_csv<W: Write>(out: W, vectors: &BTreeMap<NodeId, TrustVector>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["owner", "target", "value"])?;
    for (owner, v) in vectors {
        for (j, value) in v.entries().iter().enumerate() {
            w.write_record([owner.to_string(), j.to_string(), value.symbol().to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(pairs: &[(NodeId, &[f64])]) -> BTreeMap<NodeId, Vec<f64>> {
        pairs.iter().map(|(k, s)| (*k, s.to_vec())).collect()
    }

    #[test]
    fn interim_threshold() {
        let nbrs = BTreeSet::from([0, 1]);
        let v = interim_trust(3, 0, &nbrs, &obs(&[(1, &[1.0, 1.0, 0.0])])).unwrap();
        assert_eq!(v.get(1), TrustValue::Trust);
        let v = interim_trust(3, 0, &nbrs, &obs(&[(1, &[1.0, 0.0])])).unwrap();
        assert_eq!(v.get(1), TrustValue::Trust);
        let v = interim_trust(3, 0, &nbrs, &obs(&[(1, &[0.0, 0.0, 0.0, 1.0])])).unwrap();
        assert_eq!(v.get(1), TrustValue::Distrust);
        assert_eq!(v.get(0), TrustValue::Trust);
        assert_eq!(v.get(2), TrustValue::NoData);
    }

    #[test]
    fn interim_rejects_ragged_input() {
        let nbrs = BTreeSet::from([0, 1, 2]);
        let bad = obs(&[(1, &[1.0, 0.0]), (2, &[1.0])]);
        assert!(interim_trust(3, 0, &nbrs, &bad).is_err());
        assert!(interim_trust(3, 0, &nbrs, &obs(&[(1, &[1.0])])).is_err());
    }

    /// Four robots; robot 0 interim-trusts everyone, including spoofed robot 2.
    fn schematic() -> TrustMatrix {
        let mut m = TrustMatrix::new(0, 4);
        m.set_column(TrustVector::from_ternary(0, "1111").unwrap()).unwrap();
        m.set_column(TrustVector::from_ternary(1, "1101").unwrap()).unwrap();
        m.set_column(TrustVector::from_ternary(3, "1101").unwrap()).unwrap();
        m
    }

    #[test]
    fn trusted_neighbors_overrule_a_false_interim_trust() {
        let v = final_trust(&schematic(), &BTreeSet::from([0, 1, 2, 3])).unwrap();
        assert_eq!(v.to_ternary(), "1101");
    }

    #[test]
    fn single_voter_and_ties() {
        let mut m = TrustMatrix::new(0, 3);
        m.set_column(TrustVector::from_ternary(0, "11-").unwrap()).unwrap();
        let v = final_trust(&m, &BTreeSet::from([0, 1])).unwrap();
        assert_eq!(v.get(1), TrustValue::Trust);

        let mut m = TrustMatrix::new(0, 3);
        m.set_column(TrustVector::from_ternary(0, "111").unwrap()).unwrap();
        m.set_column(TrustVector::from_ternary(1, "110").unwrap()).unwrap();
        let v = final_trust(&m, &BTreeSet::from([0, 1, 2])).unwrap();
        // One Trust vote (owner) and one Distrust vote (robot 1) on robot 2.
        assert_eq!(v.get(2), TrustValue::Trust);
    }

    #[test]
    fn vote_ignores_untrusted_columns_and_nodata() {
        let mut m = schematic();
        m.set_column(TrustVector::from_ternary(2, "0010").unwrap()).unwrap();
        let mut own = m.column(0).unwrap().clone();
        own.set(2, TrustValue::Distrust);
        m.set_column(own).unwrap();
        let v = final_trust(&m, &BTreeSet::from([0, 1, 2, 3])).unwrap();
        assert_eq!(v.to_ternary(), "1101");
        assert!(final_trust(&TrustMatrix::new(0, 2), &BTreeSet::from([0])).is_err());
    }

    #[test]
    fn ternary_round_trip() {
        let v = TrustVector::from_ternary(2, "0-1").unwrap();
        assert_eq!(v.to_string(), "0-1");
        assert!(TrustVector::from_ternary(0, "0").is_err());
        assert!(TrustVector::from_ternary(0, "1x").is_err());
    }

    #[test]
    fn owner_entry_is_pinned() {
        let mut v = TrustVector::new(1, 3);
        v.set(1, TrustValue::Distrust);
        assert_eq!(v.get(1), TrustValue::Trust);
    }

    #[test]
    fn csv_rows() {
        let vectors = BTreeMap::from([(0, TrustVector::from_ternary(0, "10-").unwrap())]);
        let mut buf = Vec::new();
        write_trust_csv(&mut buf, &vectors).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "owner,target,value\n0,0,1\n0,1,0\n0,2,-\n");
    }
}
