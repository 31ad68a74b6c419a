//! Communication graphs, robot roles, τ-triangularity and connectivity metrics.
//!
//! Neighborhoods are self-inclusive: [`CommGraph::neighbors`] always contains
//! the queried node, but the edge set itself never stores self-loops, so the
//! Laplacian stays the textbook `L = D - A`.

mod fixtures;
mod robustness;

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

pub use fixtures::{fixture_graph, fixture_names};
pub use robustness::{is_rs_robust, local_vertex_connectivity, vertex_connectivity};

pub type NodeId = usize;

/// Planar robot position in meters.
pub type Point2 = [f64; 2];

/// Undirected communication topology.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommGraph {
    n: usize,
    adj: Vec<BTreeSet<NodeId>>,
}

impl CommGraph {
    /// Graph on `n` nodes without edges.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return input("graph must have at least one node");
        }
        Ok(Self {
            n,
            adj: vec![BTreeSet::new(); n],
        })
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut g = Self::new(n)?;
        for (i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Self::new(n)?;
        for i in 0..n {
            for j in (i + 1)..n {
                g.adj[i].insert(j);
                g.adj[j].insert(i);
            }
        }
        Ok(g)
    }

    /// Inserts `{i, j}`. Duplicate insertions are ignored.
    pub fn add_edge(&mut self, i: NodeId, j: NodeId) -> Result<()> {
        self.check(i)?;
        self.check(j)?;
        if i == j {
            return input(format!("self-edge {i}-{i} is not allowed"));
        }
        self.adj[i].insert(j);
        self.adj[j].insert(i);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: NodeId, j: NodeId) -> bool {
        i < self.n && self.adj[i].contains(&j)
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for (i, nb) in self.adj.iter().enumerate() {
            out.extend(nb.range((i + 1)..).map(|&j| (i, j)));
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Number of incident edges (self not counted).
    pub fn degree(&self, i: NodeId) -> usize {
        self.adj[i].len()
    }

    /// Adjacent nodes, excluding `i` itself.
    pub fn adjacent(&self, i: NodeId) -> &BTreeSet<NodeId> {
        &self.adj[i]
    }

    /// Self-inclusive neighborhood `N_i`.
    pub fn neighbors(&self, i: NodeId) -> Result<BTreeSet<NodeId>> {
        self.check(i)?;
        let mut out = self.adj[i].clone();
        out.insert(i);
        Ok(out)
    }

    /// Subgraph induced on `keep`, relabeled `0..keep.len()` in the order given.
    pub fn induced(&self, keep: &[NodeId]) -> Result<CommGraph> {
        let mut index = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            self.check(old)?;
            if index[old] != usize::MAX {
                return input(format!("node {old} listed twice"));
            }
            index[old] = new;
        }
        let mut g = CommGraph::new(keep.len().max(1))?;
        if keep.is_empty() {
            g.n = 0;
            g.adj.clear();
            return Ok(g);
        }
        for (new, &old) in keep.iter().enumerate() {
            for &j in &self.adj[old] {
                if index[j] != usize::MAX {
                    g.adj[new].insert(index[j]);
                }
            }
        }
        Ok(g)
    }

    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for (i, nb) in self.adj.iter().enumerate() {
            l[(i, i)] = nb.len() as f64;
            for &j in nb {
                l[(i, j)] = -1.0;
            }
        }
        l
    }

    /// Binary adjacency with ones on the diagonal (self-inclusive neighborhoods).
    pub fn adjacency_with_self_loops(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| u8::from(i == j || self.adj[i].contains(&j)))
                    .collect()
            })
            .collect()
    }

    /// Edge-list text: first line `n`, then one `i j` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{}\n", self.n);
        for (i, j) in self.edges() {
            let _ = writeln!(s, "{i} {j}");
        }
        s
    }

    /// Parses the edge-list format. Blank lines and `#` comments are skipped.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Input("edge list is empty".into()))?;
        let n: usize = header
            .parse()
            .map_err(|_| Error::Input(format!("bad node-count header {header:?}")))?;
        let mut g = Self::new(n)?;
        for line in lines {
            let mut parts = line.split_whitespace();
            let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                return input(format!("bad edge line {line:?}"));
            };
            let parse = |t: &str| {
                t.parse::<usize>()
                    .map_err(|_| Error::Input(format!("bad node id {t:?}")))
            };
            g.add_edge(parse(a)?, parse(b)?)?;
        }
        Ok(g)
    }

    /// Graphviz rendering; roles, when given, color the nodes.
    pub fn to_dot(&self, roles: Option<&RoleAssignment>) -> String {
        let mut s = String::from("graph G {\n");
        for i in 0..self.n {
            let color = match roles.map(|r| r.role(i)) {
                Some(Role::Legitimate) | None => "lightblue",
                Some(Role::Hidden) => "orange",
                Some(Role::Spawning) => "red",
                Some(Role::Spoofed) => "pink",
            };
            let _ = writeln!(s, "  {i} [style=filled, fillcolor={color}];");
        }
        for (i, j) in self.edges() {
            let _ = writeln!(s, "  {i} -- {j};");
        }
        s.push_str("}\n");
        s
    }

    fn check(&self, i: NodeId) -> Result<()> {
        if i >= self.n {
            return input(format!("node {i} out of range for n = {}", self.n));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Legitimate,
    /// Physical adversary broadcasting under extra identities.
    Spawning,
    /// Fake identity created by a spawner.
    Spoofed,
    /// Adversary that spawns nothing; its transmissions look legitimate.
    Hidden,
}

impl Role {
    /// Spawning and spoofed identities are visible to the observation channel.
    pub fn is_detectable(self) -> bool {
        matches!(self, Role::Spawning | Role::Spoofed)
    }

    pub fn is_malicious(self) -> bool {
        self != Role::Legitimate
    }

    pub fn label(self) -> &'static str {
        match self {
            Role::Legitimate => "legitimate",
            Role::Spawning => "spawning",
            Role::Spoofed => "spoofed",
            Role::Hidden => "hidden",
        }
    }
}

/// One role per node id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoleAssignment {
    roles: Vec<Role>,
}

impl RoleAssignment {
    pub fn new(roles: Vec<Role>) -> Self {
        Self { roles }
    }

    pub fn all_legitimate(n: usize) -> Self {
        Self::new(vec![Role::Legitimate; n])
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn role(&self, i: NodeId) -> Role {
        self.roles[i]
    }

    pub fn set(&mut self, i: NodeId, role: Role) {
        self.roles[i] = role;
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn ids_with(&self, role: Role) -> Vec<NodeId> {
        self.ids_where(|r| r == role)
    }

    pub fn ids_where(&self, pred: impl Fn(Role) -> bool) -> Vec<NodeId> {
        (0..self.roles.len()).filter(|&i| pred(self.roles[i])).collect()
    }

    pub fn legitimate(&self) -> Vec<NodeId> {
        self.ids_with(Role::Legitimate)
    }

    fn count(&self, role: Role) -> usize {
        self.roles.iter().filter(|&&r| r == role).count()
    }

    /// `l`
    pub fn legitimate_count(&self) -> usize {
        self.count(Role::Legitimate)
    }

    /// `h`
    pub fn hidden_count(&self) -> usize {
        self.count(Role::Hidden)
    }

    pub fn spawning_count(&self) -> usize {
        self.count(Role::Spawning)
    }

    pub fn spoofed_count(&self) -> usize {
        self.count(Role::Spoofed)
    }

    /// `s = |A_spawn| + |A_spoof|`
    pub fn detectable_count(&self) -> usize {
        self.spawning_count() + self.spoofed_count()
    }

    /// `m = s + h`
    pub fn malicious_count(&self) -> usize {
        self.detectable_count() + self.hidden_count()
    }
}

fn check_roles(g: &CommGraph, roles: &RoleAssignment) -> Result<()> {
    if roles.len() != g.n() {
        return input(format!(
            "role assignment covers {} nodes but graph has {}",
            roles.len(),
            g.n()
        ));
    }
    Ok(())
}

/// `τ_ij = |N_i ∩ N_j ∩ L| − |N_i ∩ N_j ∩ A_hid|` over self-inclusive neighborhoods.
pub fn tau_pair(g: &CommGraph, roles: &RoleAssignment, i: NodeId, j: NodeId) -> Result<i64> {
    check_roles(g, roles)?;
    g.check(i)?;
    g.check(j)?;
    if i != j && !g.has_edge(i, j) {
        return input(format!("τ is only defined for neighbors; {i} and {j} are not adjacent"));
    }
    Ok(tau_unchecked(g, roles, i, j))
}

fn tau_unchecked(g: &CommGraph, roles: &RoleAssignment, i: NodeId, j: NodeId) -> i64 {
    let in_both = |k: NodeId| {
        (k == i || g.adj[i].contains(&k)) && (k == j || g.adj[j].contains(&k))
    };
    let mut candidates: BTreeSet<NodeId> = g.adj[i].clone();
    candidates.insert(i);
    candidates
        .into_iter()
        .filter(|&k| in_both(k))
        .map(|k| match roles.role(k) {
            Role::Legitimate => 1,
            Role::Hidden => -1,
            _ => 0,
        })
        .sum()
}

/// Minimum `τ_ij` over legitimate `i` and `j ∈ N_i \ {i}`.
pub fn min_tau(g: &CommGraph, roles: &RoleAssignment) -> Result<i64> {
    check_roles(g, roles)?;
    let mut best: Option<i64> = None;
    for i in roles.legitimate() {
        for &j in &g.adj[i] {
            let t = tau_unchecked(g, roles, i, j);
            best = Some(best.map_or(t, |b| b.min(t)));
        }
    }
    best.ok_or_else(|| Error::Domain("no legitimate robot has a neighbor; τ is undefined".into()))
}

/// Largest self-inclusive degree `|N_i|` over legitimate robots.
pub fn max_legitimate_degree(g: &CommGraph, roles: &RoleAssignment) -> usize {
    roles
        .legitimate()
        .into_iter()
        .map(|i| g.degree(i) + 1)
        .max()
        .unwrap_or(0)
}

/// True iff the subgraph induced on legitimate robots is connected.
pub fn is_sufficiently_connected(g: &CommGraph, roles: &RoleAssignment) -> bool {
    if roles.len() != g.n() {
        return false;
    }
    let legit = roles.legitimate();
    if legit.is_empty() {
        return true;
    }
    g.induced(&legit).map(|s| s.is_connected()).unwrap_or(false)
}

/// Second-smallest Laplacian eigenvalue λ₂; exactly 0 for disconnected graphs.
pub fn algebraic_connectivity(g: &CommGraph) -> Result<f64> {
    if g.n() < 2 {
        return input("algebraic connectivity needs at least 2 nodes");
    }
    if !g.is_connected() {
        return Ok(0.0);
    }
    let eig = SymmetricEigen::new(g.laplacian());
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values[1].max(0.0))
}

/// Link probability used by the stochastic disk model: 1 within 1 m, `1/d`
/// between 1 m and 4 m, 0 beyond.
pub fn edge_probability(distance: f64) -> f64 {
    if distance <= 1.0 {
        1.0
    } else if distance < 4.0 {
        1.0 / distance
    } else {
        0.0
    }
}

pub fn distance(a: Point2, b: Point2) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Samples edges between fixed positions with [`edge_probability`]. A uniform
/// draw is consumed only for pairs with probability strictly between 0 and 1.
pub fn stochastic_edges<R: Rng + ?Sized>(positions: &[Point2], rng: &mut R) -> Result<CommGraph> {
    let mut g = CommGraph::new(positions.len())?;
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            let p = edge_probability(distance(positions[i], positions[j]));
            let linked = if p >= 1.0 {
                true
            } else if p > 0.0 {
                rng.random::<f64>() < p
            } else {
                false
            };
            if linked {
                g.adj[i].insert(j);
                g.adj[j].insert(i);
            }
        }
    }
    Ok(g)
}

/// Uniform positions in `[0, box_side]²` plus stochastic edges.
pub fn gen_random_geometric<R: Rng + ?Sized>(
    n: usize,
    box_side: f64,
    rng: &mut R,
) -> Result<(CommGraph, Vec<Point2>)> {
    if n == 0 {
        return input("need at least one robot");
    }
    if !(box_side > 0.0) || !box_side.is_finite() {
        return input(format!("box side must be positive, got {box_side}"));
    }
    let positions: Vec<Point2> = (0..n)
        .map(|_| {
            [
                rng.random::<f64>() * box_side,
                rng.random::<f64>() * box_side,
            ]
        })
        .collect();
    let g = stochastic_edges(&positions, rng)?;
    Ok((g, positions))
}
