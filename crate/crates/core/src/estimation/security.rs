//! How spoofed identities inflate apparent resilience.

use crate::error::{input, Result};
use crate::topology::{
    algebraic_connectivity, is_rs_robust, local_vertex_connectivity, vertex_connectivity, CommGraph,
    NodeId, Role, RoleAssignment,
};

/// `(λ₂ of the full graph, λ₂ with spoofed identities removed)`.
pub fn perceived_vs_actual_connectivity(g: &CommGraph, roles: &RoleAssignment) -> Result<(f64, f64)> {
    if roles.len() != g.n() {
        return input("role assignment does not match the graph");
    }
    let keep = roles.ids_where(|r| r != Role::Spoofed);
    let perceived = algebraic_connectivity(g)?;
    let actual = algebraic_connectivity(&g.induced(&keep)?)?;
    Ok((perceived, actual))
}

/// Number of adversaries each resilience condition claims to tolerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tolerances {
    /// Largest `F` with the graph `(F+1, F+1)`-robust.
    pub wmsr: usize,
    /// Largest `m` with vertex connectivity at least `2m + 1`.
    pub identification: usize,
    /// Largest `m` with at least `2m + 1` disjoint paths from every robot
    /// outside the observer's neighborhood to the observer.
    pub dfc: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FalseSecurity {
    pub perceived: Tolerances,
    pub actual: Tolerances,
}

fn tolerance_from_paths(paths: usize) -> usize {
    paths.saturating_sub(1) / 2
}

/// Tolerances of `g` as seen from `observer`.
pub fn tolerances(g: &CommGraph, observer: NodeId) -> Result<Tolerances> {
    let mut wmsr = 0;
    while wmsr + 2 <= g.n() && is_rs_robust(g, wmsr + 2, wmsr + 2)? {
        wmsr += 1;
    }
    let identification = tolerance_from_paths(vertex_connectivity(g));
    let nbrs = g.neighbors(observer)?;
    let mut min_paths: Option<usize> = None;
    for u in (0..g.n()).filter(|u| !nbrs.contains(u)) {
        let p = local_vertex_connectivity(g, u, observer)?;
        min_paths = Some(min_paths.map_or(p, |m| m.min(p)));
    }
    let dfc = tolerance_from_paths(min_paths.unwrap_or(g.n().saturating_sub(1)));
    Ok(Tolerances {
        wmsr,
        identification,
        dfc,
    })
}

/// Tolerances of the perceived graph versus the graph without spoofed identities.
pub fn false_security(g: &CommGraph, roles: &RoleAssignment, observer: NodeId) -> Result<FalseSecurity> {
    if roles.len() != g.n() {
        return input("role assignment does not match the graph");
    }
    if roles.role(observer) == Role::Spoofed {
        return input(format!("observer {observer} is a spoofed identity"));
    }
    let keep = roles.ids_where(|r| r != Role::Spoofed);
    let actual_graph = g.induced(&keep)?;
    let observer_actual = keep.iter().position(|&k| k == observer).expect("kept");
    Ok(FalseSecurity {
        perceived: tolerances(g, observer)?,
        actual: tolerances(&actual_graph, observer_actual)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::fixture_graph;

    #[test]
    fn fig3_false_security_table() {
        let (g, roles) = fixture_graph("fig3").unwrap();
        let fs = false_security(&g, &roles, 0).unwrap();
        let one = Tolerances { wmsr: 1, identification: 1, dfc: 1 };
        let zero = Tolerances { wmsr: 0, identification: 0, dfc: 0 };
        assert_eq!(fs.perceived, one);
        assert_eq!(fs.actual, zero);
    }

    #[test]
    fn no_spoofing_no_gap() {
        let (g, roles) = fixture_graph("fig4").unwrap();
        let (p, a) = perceived_vs_actual_connectivity(&g, &roles).unwrap();
        assert_eq!(p, a);
        let fs = false_security(&g, &roles, 0).unwrap();
        assert_eq!(fs.perceived, fs.actual);
    }

    #[test]
    fn fig3_connectivity_is_inflated() {
        let (g, roles) = fixture_graph("fig3").unwrap();
        let (p, a) = perceived_vs_actual_connectivity(&g, &roles).unwrap();
        assert!(p > a, "{p} vs {a}");
    }
}
