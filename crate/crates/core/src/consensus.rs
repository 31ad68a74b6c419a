//! Linear consensus and W-MSR resilient consensus on a target estimate.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::estimation::WeightMatrix;
use crate::topology::{CommGraph, NodeId, Role};
use crate::trust::{TrustValue, TrustVector, World};

/// Per-node values of fixed dimension at step `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsensusState {
    pub t: usize,
    pub x: Vec<Vec<f64>>,
}

impl ConsensusState {
    pub fn new(x: Vec<Vec<f64>>) -> Result<Self> {
        let dim = x.first().map_or(0, Vec::len);
        if x.iter().any(|v| v.len() != dim) {
            return input("all nodes must share one dimension");
        }
        if x.iter().flatten().any(|v| !v.is_finite()) {
            return input("values must be finite");
        }
        Ok(Self { t: 0, x })
    }

    pub fn scalar(x: &[f64]) -> Result<Self> {
        Self::new(x.iter().map(|&v| vec![v]).collect())
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }
}

/// `x' = W·x` per dimension.
pub fn consensus_step(w: &WeightMatrix, state: &ConsensusState) -> Result<ConsensusState> {
    let n = state.n();
    if w.n() != n {
        return input(format!("W is {}x{} but state has {n} nodes", w.n(), w.n()));
    }
    let dim = state.dim();
    let x = (0..n)
        .map(|i| {
            (0..dim)
                .map(|d| (0..n).map(|j| w.get(i, j) * state.x[j][d]).sum())
                .collect()
        })
        .collect();
    Ok(ConsensusState { t: state.t + 1, x })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WmsrParams {
    /// Trim budget per side.
    pub f: usize,
}

/// Trim-and-average update of one scalar: drop up to `f` neighbor values
/// strictly above `own` (largest first) and up to `f` strictly below
/// (smallest first), then average `own` with what remains.
pub fn wmsr_update(own: f64, neighbor_values: &[f64], f: usize) -> f64 {
    let mut vals = neighbor_values.to_vec();
    vals.sort_by(f64::total_cmp);
    let below = vals.iter().filter(|&&v| v < own).count();
    let above = vals.iter().filter(|&&v| v > own).count();
    let lo = below.min(f);
    let hi = vals.len() - above.min(f);
    let kept = &vals[lo..hi];
    let mut all: Vec<f64> = Vec::with_capacity(kept.len() + 1);
    all.push(own);
    all.extend_from_slice(kept);
    all.sort_by(f64::total_cmp);
    all.iter().sum::<f64>() / all.len() as f64
}

/// W-MSR update of node `i` from its graph neighbors, per dimension.
pub fn wmsr_step(g: &CommGraph, x: &ConsensusState, f: usize, i: NodeId) -> Result<Vec<f64>> {
    if g.n() != x.n() {
        return input("graph and state sizes differ");
    }
    let nbrs: Vec<NodeId> = g.neighbors(i)?.into_iter().filter(|&j| j != i).collect();
    Ok(wmsr_over(x, &nbrs, f, i))
}

fn wmsr_over(x: &ConsensusState, nbrs: &[NodeId], f: usize, i: NodeId) -> Vec<f64> {
    (0..x.dim())
        .map(|d| {
            let vals: Vec<f64> = nbrs.iter().map(|&j| x.x[j][d]).collect();
            wmsr_update(x.x[i][d], &vals, f)
        })
        .collect()
}

fn average_over(x: &ConsensusState, nbrs: &[NodeId], i: NodeId) -> Vec<f64> {
    wmsr_over(x, nbrs, 0, i)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementMode {
    /// W-MSR over all graph neighbors.
    Wmsr,
    /// W-MSR over final-trusted neighbors.
    FsrThenWmsr,
    /// Plain averaging over final-trusted neighbors.
    FsrThenAverage,
}

/// What malicious nodes broadcast at each step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AdversaryValuePolicy {
    /// `target + (t + 1)·rate·direction` with a unit direction per adversary.
    LinearDrift { rate: f64 },
    /// Fixed value.
    Constant { value: Vec<f64> },
}

impl Default for AdversaryValuePolicy {
    fn default() -> Self {
        AdversaryValuePolicy::LinearDrift { rate: 0.05 }
    }
}

#[derive(Clone, Debug)]
pub struct AgreementConfig {
    pub mode: AgreementMode,
    pub f: usize,
    pub steps: usize,
    pub target: Vec<f64>,
    /// Standard deviation of the legitimate initial estimates.
    pub noise_sigma: f64,
    pub adversary: AdversaryValuePolicy,
}

impl Default for AgreementConfig {
    fn default() -> Self {
        Self {
            mode: AgreementMode::Wmsr,
            f: 1,
            steps: 200,
            target: vec![0.0, 0.0],
            noise_sigma: 0.5,
            adversary: AdversaryValuePolicy::default(),
        }
    }
}

/// Direction of adversary number `a`; adversaries drift apart at fixed angles.
fn drift_direction(a: usize, dim: usize) -> Vec<f64> {
    if dim == 1 {
        return vec![if a % 2 == 0 { 1.0 } else { -1.0 }];
    }
    let angle = std::f64::consts::FRAC_PI_4 + a as f64 * std::f64::consts::FRAC_PI_2;
    let mut v = vec![0.0; dim];
    v[0] = angle.cos();
    v[1] = angle.sin();
    v
}

fn adversary_value(cfg: &AgreementConfig, a: usize, t: usize) -> Vec<f64> {
    match &cfg.adversary {
        AdversaryValuePolicy::LinearDrift { rate } => {
            let dir = drift_direction(a, cfg.target.len());
            cfg.target
                .iter()
                .zip(dir)
                .map(|(c, d)| c + (t + 1) as f64 * rate * d)
                .collect()
        }
        AdversaryValuePolicy::Constant { value } => value.clone(),
    }
}

/// Initial values: legitimate robots draw `target + N(0, σ²)` per dimension in
/// id order, adversaries start at their policy value.
pub fn initial_state<R: Rng + ?Sized>(world: &World, cfg: &AgreementConfig, rng: &mut R) -> Result<ConsensusState> {
    let normal = Normal::new(0.0, cfg.noise_sigma).map_err(|e| crate::Error::Input(e.to_string()))?;
    let mut adversary = 0;
    let mut x = Vec::with_capacity(world.n());
    for i in 0..world.n() {
        if world.roles.role(i) == Role::Legitimate {
            x.push(cfg.target.iter().map(|c| c + normal.sample(rng)).collect());
        } else {
            x.push(adversary_value(cfg, adversary, 0));
            adversary += 1;
        }
    }
    ConsensusState::new(x)
}

/// Runs `cfg.steps` synchronous updates. Legitimate robots update from the
/// previous snapshot; malicious ones broadcast their policy value. In the
/// trust-filtered modes only neighbors marked Trust in the robot's vector are heard.
pub fn run_target_agreement<R: Rng + ?Sized>(
    world: &World,
    trust: Option<&BTreeMap<NodeId, TrustVector>>,
    cfg: &AgreementConfig,
    rng: &mut R,
) -> Result<Vec<ConsensusState>> {
    if cfg.target.is_empty() {
        return input("target must have at least one dimension");
    }
    let filtered = matches!(cfg.mode, AgreementMode::FsrThenWmsr | AgreementMode::FsrThenAverage);
    if filtered && trust.is_none() {
        return input("trust-filtered modes need trust vectors");
    }
    let n = world.n();
    let legit = world.roles.legitimate();
    let adversary_index: BTreeMap<NodeId, usize> = world
        .roles
        .ids_where(Role::is_malicious)
        .into_iter()
        .enumerate()
        .map(|(a, k)| (k, a))
        .collect();
    let mut heard: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for &i in &legit {
        let adj: BTreeSet<NodeId> = world.graph.adjacent(i).clone();
        let list: Vec<NodeId> = match trust {
            Some(t) if filtered => {
                let v = t
                    .get(&i)
                    .ok_or_else(|| crate::Error::Input(format!("no trust vector for robot {i}")))?;
                adj.into_iter().filter(|&j| v.get(j) == TrustValue::Trust).collect()
            }
            _ => adj.into_iter().collect(),
        };
        heard.insert(i, list);
    }

    let mut state = initial_state(world, cfg, rng)?;
    let mut out = Vec::with_capacity(cfg.steps + 1);
    out.push(state.clone());
    for _ in 0..cfg.steps {
        let mut next = state.x.clone();
        for &i in &legit {
            let nbrs = &heard[&i];
            next[i] = match cfg.mode {
                AgreementMode::FsrThenAverage => average_over(&state, nbrs, i),
                _ => wmsr_over(&state, nbrs, cfg.f, i),
            };
        }
        for (&k, &a) in &adversary_index {
            next[k] = adversary_value(cfg, a, state.t + 1);
        }
        debug_assert_eq!(next.len(), n);
        state = ConsensusState { t: state.t + 1, x: next };
        out.push(state.clone());
    }
    Ok(out)
}

/// Distance of the legitimate mean estimate from `target`.
pub fn mean_error(world: &World, state: &ConsensusState, target: &[f64]) -> f64 {
    let legit = world.roles.legitimate();
    let dim = target.len();
    let mut mean = vec![0.0; dim];
    for &i in &legit {
        for d in 0..dim {
            mean[d] += state.x[i][d] / legit.len() as f64;
        }
    }
    mean.iter().zip(target).map(|(m, c)| (m - c).powi(2)).sum::<f64>().sqrt()
}

/// Largest distance of any legitimate estimate from `target`.
pub fn max_error(world: &World, state: &ConsensusState, target: &[f64]) -> f64 {
    world
        .roles
        .legitimate()
        .into_iter()
        .map(|i| state.x[i].iter().zip(target).map(|(m, c)| (m - c).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Rows `t,node,dim,value`.
pub fn write_trajectory_csv<W: Write>(out: W, trajectory: &[ConsensusState]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "node", "dim", "value"])?;
    for s in trajectory {
        for (i, v) in s.x.iter().enumerate() {
            for (d, x) in v.iter().enumerate() {
                w.write_record([s.t.to_string(), i.to_string(), d.to_string(), format!("{x:.12}")])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::{weight_from_adjacency, BinaryMatrix};

    #[test]
    fn linear_steps() {
        let s = ConsensusState::scalar(&[0.0, 3.0, 6.0]).unwrap();
        assert_eq!(consensus_step(&WeightMatrix::identity(3), &s).unwrap().x, s.x);
        let path = CommGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let w = weight_from_adjacency(&BinaryMatrix::from_graph(&path)).unwrap();
        let next = consensus_step(&w, &s).unwrap();
        let expect = [1.5, 3.0, 4.5];
        for (v, e) in next.x.iter().zip(expect) {
            assert!((v[0] - e).abs() < 1e-12);
        }
        let k = CommGraph::complete(4).unwrap();
        let w = weight_from_adjacency(&BinaryMatrix::from_graph(&k)).unwrap();
        let s = ConsensusState::scalar(&[1.0, 2.0, 3.0, 6.0]).unwrap();
        assert!(consensus_step(&w, &s).unwrap().x.iter().all(|v| (v[0] - 3.0).abs() < 1e-12));
        assert!(consensus_step(&WeightMatrix::identity(2), &s).is_err());
    }

    #[test]
    fn trim_rule() {
        assert_eq!(wmsr_update(5.0, &[0.0, 10.0, 5.0], 1), 5.0);
        assert_eq!(wmsr_update(1.0, &[2.0, 3.0], 0), 2.0);
        assert_eq!(wmsr_update(7.0, &[7.0, 7.0, 7.0], 2), 7.0);
        // Only one value above own: trims it, keeps the rest.
        assert_eq!(wmsr_update(1.0, &[0.0, 0.0, 4.0], 1), (1.0 + 0.0) / 2.0);
    }

    #[test]
    fn rejects_ragged_state() {
        assert!(ConsensusState::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(ConsensusState::scalar(&[f64::NAN]).is_err());
    }
}
