//! Graph families used by the experiments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::threat::AdversaryStrategy;
use crate::topology::{CommGraph, NodeId, Role, RoleAssignment};

/// Legitimate robots on a ring, each linked to the `offsets` nearest on
/// either side, plus `detectable` spawning and spoofed identities. Adjacent
/// legitimate robots at ring distance `d` share `2k + 1 − d` legitimate
/// neighbors, so the minimum τ is `k + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CirculantSpec {
    pub legitimate: usize,
    pub offsets: usize,
    /// Half of these (rounded up) spawn, the rest are spoofed.
    pub detectable: usize,
    /// Consecutive legitimate robots each detectable identity reaches;
    /// `2k + 1` when absent.
    pub attach: Option<usize>,
}

impl CirculantSpec {
    pub fn validate(&self) -> Result<()> {
        let (l, k) = (self.legitimate, self.offsets);
        if k == 0 || l < 3 * k + 2 {
            return Err(Error::Config(format!(
                "circulant family needs k >= 1 and l >= 3k + 2, got l={l}, k={k}"
            )));
        }
        if let Some(a) = self.attach {
            if a == 0 || a > l {
                return Err(Error::Config(format!("attach must lie in 1..={l}, got {a}")));
            }
        }
        Ok(())
    }

    pub fn min_tau(&self) -> i64 {
        self.offsets as i64 + 1
    }
}

/// Builds the world graph, roles and spawn map for a [`CirculantSpec`].
pub fn circulant_world(spec: &CirculantSpec) -> Result<(CommGraph, RoleAssignment, AdversaryStrategy)> {
    spec.validate()?;
    let (l, k, s) = (spec.legitimate, spec.offsets, spec.detectable);
    let attach = spec.attach.unwrap_or(2 * k + 1);
    let mut g = CommGraph::new(l + s)?;
    for i in 0..l {
        for d in 1..=k {
            g.add_edge(i, (i + d) % l)?;
        }
    }
    let spawners = s.div_ceil(2);
    let mut roles = vec![Role::Legitimate; l];
    let mut strategy = AdversaryStrategy::default();
    for q in 0..s {
        let id: NodeId = l + q;
        let start = q * l / s.max(1);
        for a in 0..attach {
            g.add_edge(id, (start + a) % l)?;
        }
        if q < spawners {
            roles.push(Role::Spawning);
        } else {
            roles.push(Role::Spoofed);
            let owner = l + (q - spawners) % spawners;
            g.add_edge(id, owner)?;
            strategy.spawn_map.entry(owner).or_default().push(id);
        }
    }
    Ok((g, RoleAssignment::new(roles), strategy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::min_tau;

    #[test]
    fn min_tau_is_offsets_plus_one() {
        for k in 1..=4 {
            for s in [0, 4, 12] {
                let spec = CirculantSpec { legitimate: 20, offsets: k, detectable: s, attach: None };
                let (g, roles, strategy) = circulant_world(&spec).unwrap();
                assert_eq!(min_tau(&g, &roles).unwrap(), spec.min_tau());
                assert_eq!(roles.detectable_count(), s);
                strategy.validate(&roles).unwrap();
            }
        }
    }

    #[test]
    fn too_small_ring_is_rejected() {
        let spec = CirculantSpec { legitimate: 10, offsets: 3, detectable: 0, attach: None };
        assert!(circulant_world(&spec).is_err());
    }
}
