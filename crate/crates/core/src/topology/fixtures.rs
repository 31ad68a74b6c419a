//! Named reference topologies.

use super::{CommGraph, Role, RoleAssignment};
use crate::error::{input, Error, Result};

const ESTIMATION5: &str = include_str!("../../fixtures/estimation5.edges");
const FIG3: &str = include_str!("../../fixtures/fig3.edges");

/// Number of physical robots in the twelve-node layout.
const FIG3_PHYSICAL: usize = 12;

/// Names accepted by [`fixture_graph`]; `complete(...)` is parametric.
pub fn fixture_names() -> &'static [&'static str] {
    &[
        "estimation5",
        "fig3",
        "fig4",
        "fig2-left",
        "fig2-middle",
        "fig2-right",
        "complete(l=..,h=..,s=..)",
    ]
}

/// Returns a reference topology and its roles.
///
/// * `estimation5`: five legitimate robots.
/// * `fig3`: twelve legitimate robots plus two spoofed identities (ids 12, 13)
///   that make the perceived graph 3-connected.
/// * `fig4`: `fig3` without the spoofed identities.
/// * `fig2-*`: a legitimate pair (0, 1) sharing 1, 3 or 6 common neighbors.
/// * `complete(l=L,h=H,s=S)`: complete graph with ids `0..L` legitimate, then
///   `H` hidden, then `S` spoofed.
pub fn fixture_graph(name: &str) -> Result<(CommGraph, RoleAssignment)> {
    let name = name.trim();
    match name {
        "estimation5" => {
            let g = CommGraph::from_edge_list(ESTIMATION5)?;
            let n = g.n();
            Ok((g, RoleAssignment::all_legitimate(n)))
        }
        "fig3" => {
            let g = CommGraph::from_edge_list(FIG3)?;
            let mut roles = RoleAssignment::all_legitimate(g.n());
            for i in FIG3_PHYSICAL..g.n() {
                roles.set(i, Role::Spoofed);
            }
            Ok((g, roles))
        }
        "fig4" => {
            let g = CommGraph::from_edge_list(FIG3)?;
            let keep: Vec<usize> = (0..FIG3_PHYSICAL).collect();
            Ok((g.induced(&keep)?, RoleAssignment::all_legitimate(FIG3_PHYSICAL)))
        }
        "fig2-left" => Ok(pair_with_common(1)),
        "fig2-middle" => Ok(pair_with_common(3)),
        "fig2-right" => Ok(pair_with_common(6)),
        _ if name.starts_with("complete(") && name.ends_with(')') => {
            let body = &name["complete(".len()..name.len() - 1];
            let (l, h, s) = parse_complete(body)?;
            complete_world(l, h, s)
        }
        _ => input(format!("unknown fixture {name:?}")),
    }
}

fn pair_with_common(k: usize) -> (CommGraph, RoleAssignment) {
    let mut g = CommGraph::new(k + 2).expect("non-empty");
    g.add_edge(0, 1).expect("valid");
    for c in 2..k + 2 {
        g.add_edge(0, c).expect("valid");
        g.add_edge(1, c).expect("valid");
    }
    (g, RoleAssignment::all_legitimate(k + 2))
}

fn parse_complete(body: &str) -> Result<(usize, usize, usize)> {
    let (mut l, mut h, mut s) = (None, 0, 0);
    for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Input(format!("bad fixture parameter {part:?}")))?;
        let value: usize = value
            .trim()
            .parse()
            .map_err(|_| Error::Input(format!("bad fixture value {part:?}")))?;
        match key.trim() {
            "l" => l = Some(value),
            "h" => h = value,
            "s" => s = value,
            other => return input(format!("unknown fixture parameter {other:?}")),
        }
    }
    let l = l.ok_or_else(|| Error::Input("complete fixture needs l".into()))?;
    Ok((l, h, s))
}

/// Complete graph on `l + h + s` nodes ordered legitimate, hidden, spoofed.
pub(crate) fn complete_world(l: usize, h: usize, s: usize) -> Result<(CommGraph, RoleAssignment)> {
    if l == 0 {
        return input("complete fixture needs at least one legitimate robot");
    }
    let g = CommGraph::complete(l + h + s)?;
    let mut roles = vec![Role::Legitimate; l];
    roles.extend(std::iter::repeat_n(Role::Hidden, h));
    roles.extend(std::iter::repeat_n(Role::Spoofed, s));
    Ok((g, RoleAssignment::new(roles)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{
        is_rs_robust, is_sufficiently_connected, local_vertex_connectivity, min_tau,
        vertex_connectivity,
    };

    #[test]
    fn estimation5_matches_reference_adjacency() {
        let (g, _) = fixture_graph("estimation5").unwrap();
        let expected: [[u8; 5]; 5] = [
            [1, 0, 1, 1, 0],
            [0, 1, 1, 0, 1],
            [1, 1, 1, 1, 0],
            [1, 0, 1, 1, 0],
            [0, 1, 0, 0, 1],
        ];
        let got = g.adjacency_with_self_loops();
        for i in 0..5 {
            assert_eq!(got[i], expected[i].to_vec());
        }
    }

    #[test]
    fn complete_family() {
        let (g, roles) = fixture_graph("complete(l=10,h=5,s=100)").unwrap();
        assert_eq!(g.n(), 115);
        assert_eq!(roles.hidden_count(), 5);
        assert_eq!(roles.detectable_count(), 100);
        assert_eq!(min_tau(&g, &roles).unwrap(), 5);
        let (g, _) = fixture_graph("complete(l=3)").unwrap();
        assert_eq!(g.n(), 3);
        assert!(fixture_graph("complete(h=3)").is_err());
        assert!(fixture_graph("complete(l=3,x=1)").is_err());
        assert!(fixture_graph("nope").is_err());
    }

    #[test]
    fn fig3_properties() {
        let (g, roles) = fixture_graph("fig3").unwrap();
        assert_eq!(g.n(), 14);
        assert_eq!(roles.spoofed_count(), 2);
        assert_eq!(vertex_connectivity(&g), 3);
        assert!(is_rs_robust(&g, 2, 2).unwrap());
        assert!(!is_rs_robust(&g, 3, 3).unwrap());
        assert!(is_sufficiently_connected(&g, &roles));

        let (actual, _) = fixture_graph("fig4").unwrap();
        assert_eq!(actual.n(), 12);
        assert!(actual.is_connected());
        assert_eq!(vertex_connectivity(&actual), 2);
        assert!(!is_rs_robust(&actual, 2, 2).unwrap());
        assert!(is_rs_robust(&actual, 1, 1).unwrap());
    }

    #[test]
    fn fig3_three_paths_from_robot_four() {
        let (g, _) = fixture_graph("fig3").unwrap();
        // Robot 4 (id 3) reaches robot 1 (id 0) over three disjoint paths,
        // two of them through spoofed identities.
        assert_eq!(local_vertex_connectivity(&g, 3, 0).unwrap(), 3);
        let (actual, _) = fixture_graph("fig4").unwrap();
        assert_eq!(local_vertex_connectivity(&actual, 3, 0).unwrap(), 2);
    }
}
