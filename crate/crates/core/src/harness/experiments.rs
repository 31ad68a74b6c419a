//! One runner per study. Each returns trial-level CSV, a summary CSV and checks.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    circulant_world, mean_sd, pool, rate_error, run_trials, std_error, trial_rng, Check, CirculantSpec,
    ExperimentConfig, ExperimentKind, Report,
};
use crate::consensus::{
    max_error, mean_error, run_target_agreement, write_trajectory_csv, AdversaryValuePolicy, AgreementConfig,
    AgreementMode,
};
use crate::error::{Error, Result};
use crate::estimation::{fram, fram_broadcasts, perceived_vs_actual_connectivity, BinaryMatrix, FramState};
use crate::flocking::{escape_window, norm, run_flock, write_flock_csv};
use crate::threat::{AdversaryStrategy, ObservationChannel};
use crate::topology::{
    fixture_graph, gen_random_geometric, max_legitimate_degree, min_tau, Role, RoleAssignment,
};
use crate::trust::{
    all_correct, anytime_cap, find_spoofed_robots, rounds_bound_theorem1, success_curve, ProtocolRun, World,
};

/// Longest success curve the complete-graph round search will compute.
const TABLE1_R_LIMIT: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table1Row {
    pub l: usize,
    pub trials: usize,
}

/// Reference rows: `(l, FSR rounds, FSR tolerance, Baseline rounds, Baseline tolerance)`.
const TABLE1_REFERENCE: [(usize, f64, f64, f64, f64); 2] = [(10, 10.0, 2.0, 22.0, 4.0), (100, 7.0, 2.1, 32.0, 9.6)];

pub fn run_experiment(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    if let Some(k) = cfg.experiment {
        if k != kind {
            return Err(Error::Config(format!("config is for experiment {k}, not {kind}")));
        }
    }
    match kind {
        ExperimentKind::Table1 => run_table1(cfg),
        ExperimentKind::RoundsVsEps => run_rounds_vs_epsilon(cfg),
        ExperimentKind::TauStudy => run_tau_studies(cfg),
        ExperimentKind::Connectivity => run_connectivity_inflation(cfg),
        ExperimentKind::Wmsr => run_wmsr_scenarios(cfg),
        ExperimentKind::Flock => run_flock_scenario(cfg),
        ExperimentKind::FramDemo => run_fram_demo(cfg),
    }
}

fn channel(cfg: &ExperimentConfig, epsilon: f64) -> Result<ObservationChannel> {
    ObservationChannel::new(epsilon, cfg.observation)
}

/// Config policies with the family's spawn map.
fn strategy(cfg: &ExperimentConfig, spawn: AdversaryStrategy) -> AdversaryStrategy {
    AdversaryStrategy { spawn_map: spawn.spawn_map, ..cfg.strategy.clone() }
}

fn bits(v: &[bool]) -> String {
    v.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn default_cap(n: usize, epsilon: f64) -> Result<usize> {
    Ok(anytime_cap(n, epsilon)?.ceil() as usize)
}

/// First round at which each algorithm succeeds on one coupled stream.
fn first_successes<R: Rng + ?Sized>(world: &World, cap: usize, rng: &mut R) -> (Option<usize>, Option<usize>) {
    let mut run = ProtocolRun::new(world, rng);
    let (mut fsr, mut baseline) = (None, None);
    for r in 1..=cap {
        run.advance(rng);
        if baseline.is_none() && run.baseline_correct() {
            baseline = Some(r);
        }
        if fsr.is_none() && run.fsr_correct() {
            fsr = Some(r);
        }
        if fsr.is_some() && baseline.is_some() {
            break;
        }
    }
    (fsr, baseline)
}

fn first_fsr_success<R: Rng + ?Sized>(world: &World, cap: usize, rng: &mut R) -> Option<usize> {
    let mut run = ProtocolRun::new(world, rng);
    (1..=cap).find(|_| {
        run.advance(rng);
        run.fsr_correct()
    })
}

/// `a − b` exceeds twice the standard error of the difference.
fn clearly_greater(a: &[f64], b: &[f64]) -> (bool, f64, f64) {
    let diff = mean_sd(a).0 - mean_sd(b).0;
    let se = std_error(a).hypot(std_error(b));
    (diff > 2.0 * se, diff, se)
}

#[derive(Serialize)]
struct Table1Trial {
    experiment: &'static str,
    l: usize,
    trial: usize,
    seed: u64,
    fsr_curve: String,
    baseline_curve: String,
}

#[derive(Serialize)]
struct Table1Rate {
    l: usize,
    r: usize,
    fsr_rate: f64,
    baseline_rate: f64,
}

#[derive(Serialize)]
struct Table1Summary {
    l: usize,
    n: usize,
    trials: usize,
    r_max: usize,
    fsr_rounds: Option<usize>,
    baseline_rounds: Option<usize>,
}

/// Smallest `r` at which at least half of the trials succeed for every
/// legitimate robot, read off the per-trial success curves.
pub fn run_table1(cfg: &ExperimentConfig) -> Result<Report> {
    let t1 = &cfg.table1;
    let pool = pool(cfg.threads)?;
    let mut report = Report::default();
    let mut trials_out = Vec::new();
    let mut rates = Vec::new();
    let mut summary = Vec::new();
    for row in &t1.rows {
        let l = row.l;
        let h = (l as f64 * t1.hidden_per_legitimate).floor() as usize;
        let s = l * t1.spoofed_per_legitimate;
        let (g, roles) = fixture_graph(&format!("complete(l={l},h={h},s={s})"))?;
        let world = World::new(g, roles, channel(cfg, t1.epsilon)?, cfg.strategy.clone())?;
        let trials = cfg.trials_or(row.trials);
        let id = format!("table1/l={l}");
        let mut r_max = t1.r_max;
        let (curves, fsr_r, base_r) = loop {
            let curves = run_trials(&pool, cfg.seed, &id, trials, |_, seed| {
                Ok((seed, success_curve(&world, r_max, &mut trial_rng(seed))))
            })?;
            let first_half = |pick: fn(&(Vec<bool>, Vec<bool>)) -> &Vec<bool>| {
                (0..r_max)
                    .find(|&r| 2 * curves.iter().filter(|(_, c)| pick(c)[r]).count() >= trials)
                    .map(|r| r + 1)
            };
            let fsr_r = first_half(|c| &c.1);
            let base_r = first_half(|c| &c.0);
            if (fsr_r.is_some() && base_r.is_some()) || r_max >= TABLE1_R_LIMIT {
                break (curves, fsr_r, base_r);
            }
            r_max *= 2;
        };
        for r in 0..r_max {
            let count = |pick: fn(&(Vec<bool>, Vec<bool>)) -> &Vec<bool>| {
                curves.iter().filter(|(_, c)| pick(c)[r]).count() as f64 / trials as f64
            };
            rates.push(Table1Rate { l, r: r + 1, fsr_rate: count(|c| &c.1), baseline_rate: count(|c| &c.0) });
        }
        for (trial, (seed, (b, f))) in curves.iter().enumerate() {
            trials_out.push(Table1Trial {
                experiment: "table1",
                l,
                trial,
                seed: *seed,
                fsr_curve: bits(f),
                baseline_curve: bits(b),
            });
        }
        report.summary.push(format!(
            "l={l} n={} trials={trials}: FindSpoofedRobots r={} Baseline r={}",
            world.n(),
            fmt_opt(fsr_r),
            fmt_opt(base_r)
        ));
        if let Some(&(_, fe, ft, be, bt)) = TABLE1_REFERENCE.iter().find(|r| r.0 == l) {
            let within = |got: Option<usize>, e: f64, t: f64| got.is_some_and(|g| (g as f64 - e).abs() <= t);
            report.checks.push(Check::new(
                format!("table1 l={l} FindSpoofedRobots"),
                within(fsr_r, fe, ft),
                format!("r={} expected {fe} ± {ft}", fmt_opt(fsr_r)),
            ));
            report.checks.push(Check::new(
                format!("table1 l={l} Baseline"),
                within(base_r, be, bt),
                format!("r={} expected {be} ± {bt}", fmt_opt(base_r)),
            ));
        }
        summary.push(Table1Summary { l, n: world.n(), trials, r_max, fsr_rounds: fsr_r, baseline_rounds: base_r });
    }
    if summary.len() >= 2 {
        let mut by_l: Vec<&Table1Summary> = summary.iter().collect();
        by_l.sort_by_key(|s| s.l);
        let ok = by_l
            .windows(2)
            .all(|w| matches!((w[0].fsr_rounds, w[1].fsr_rounds), (Some(a), Some(b)) if b <= a));
        let seq: Vec<String> = by_l.iter().map(|s| format!("l={}:{}", s.l, fmt_opt(s.fsr_rounds))).collect();
        report.checks.push(Check::new("table1 FSR non-increasing in l", ok, seq.join(" ")));
    }
    report.add_csv("table1_trials.csv", &trials_out)?;
    report.add_csv("table1_rates.csv", &rates)?;
    report.add_csv("table1.csv", &summary)?;
    Ok(report)
}

fn fmt_opt(v: Option<usize>) -> String {
    v.map_or_else(|| "none".into(), |x| x.to_string())
}

#[derive(Serialize)]
struct EpsTrial {
    regime: String,
    epsilon: f64,
    trial: usize,
    seed: u64,
    fsr_rounds: usize,
    baseline_rounds: usize,
    censored: bool,
}

#[derive(Serialize)]
struct EpsSummary {
    regime: String,
    epsilon: f64,
    trials: usize,
    fsr_mean: f64,
    fsr_sd: f64,
    baseline_mean: f64,
    baseline_sd: f64,
    censored: usize,
}

/// Mean first-success round of both algorithms over an ε grid, per regime.
/// Runs that never succeed within the cap count as the cap.
pub fn run_rounds_vs_epsilon(cfg: &ExperimentConfig) -> Result<Report> {
    let ev = &cfg.rounds_vs_eps;
    let pool = pool(cfg.threads)?;
    let trials = cfg.trials_or(ev.trials);
    let mut report = Report::default();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut all_below = true;
    let mut worst = String::new();
    let mut gaps: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for regime in &ev.regimes {
        let (g, roles, spawn) = circulant_world(&regime.world)?;
        for &eps in &ev.epsilons {
            let world = World::new(g.clone(), roles.clone(), channel(cfg, eps)?, strategy(cfg, spawn.clone()))?;
            let cap = match ev.cap {
                Some(c) => c,
                None => default_cap(world.n(), eps)?,
            };
            let id = format!("rounds-vs-eps/{}/eps={eps}", regime.name);
            let out = run_trials(&pool, cfg.seed, &id, trials, |_, seed| {
                Ok((seed, first_successes(&world, cap, &mut trial_rng(seed))))
            })?;
            let mut f = Vec::with_capacity(trials);
            let mut b = Vec::with_capacity(trials);
            let mut censored = 0;
            for (trial, &(seed, (fr, br))) in out.iter().enumerate() {
                let c = fr.is_none() || br.is_none();
                censored += usize::from(c);
                let (fr, br) = (fr.unwrap_or(cap), br.unwrap_or(cap));
                f.push(fr as f64);
                b.push(br as f64);
                rows.push(EpsTrial {
                    regime: regime.name.clone(),
                    epsilon: eps,
                    trial,
                    seed,
                    fsr_rounds: fr,
                    baseline_rounds: br,
                    censored: c,
                });
            }
            let (fm, fs) = mean_sd(&f);
            let (bm, bs) = mean_sd(&b);
            let tol = 2.0 * std_error(&f).hypot(std_error(&b));
            if fm > bm + tol {
                all_below = false;
                worst = format!("{} ε={eps}: FSR {fm:.2} > Baseline {bm:.2} + {tol:.2}", regime.name);
            }
            gaps.entry(regime.name.clone()).or_default().push(bm - fm);
            report
                .summary
                .push(format!("{} ε={eps}: FSR {fm:.2} ± {fs:.2}, Baseline {bm:.2} ± {bs:.2}", regime.name));
            summary.push(EpsSummary {
                regime: regime.name.clone(),
                epsilon: eps,
                trials,
                fsr_mean: fm,
                fsr_sd: fs,
                baseline_mean: bm,
                baseline_sd: bs,
                censored,
            });
        }
    }
    report.checks.push(Check::new(
        "rounds-vs-eps FSR not above Baseline",
        all_below,
        if all_below { "every grid point within 2σ".to_string() } else { worst },
    ));
    if let (Some(small), Some(large)) = (gaps.get("small"), gaps.get("large")) {
        let (s, l) = (mean_sd(small).0, mean_sd(large).0);
        report.checks.push(Check::new(
            "rounds-vs-eps larger neighborhood widens the gap",
            l > s,
            format!("mean Baseline − FSR gap: small {s:.2}, large {l:.2}"),
        ));
    }
    report.add_csv("rounds_vs_eps_trials.csv", &rows)?;
    report.add_csv("rounds_vs_eps.csv", &summary)?;
    Ok(report)
}

#[derive(Serialize)]
struct TauRoundsTrial {
    detectable: usize,
    min_tau: i64,
    trial: usize,
    seed: u64,
    rounds: usize,
    censored: bool,
}

#[derive(Serialize)]
struct TauRoundsSummary {
    detectable: usize,
    min_tau: i64,
    trials: usize,
    mean_rounds: f64,
    sd_rounds: f64,
}

#[derive(Serialize)]
struct TauFixedTrial {
    min_tau: i64,
    trial: usize,
    seed: u64,
    r: usize,
    success: bool,
}

#[derive(Serialize)]
struct TauFixedSummary {
    r: usize,
    min_tau: i64,
    trials: usize,
    success_rate: f64,
}

#[derive(Serialize)]
struct GeometricTrial {
    box_side: f64,
    n: usize,
    trial: usize,
    seed: u64,
    min_tau: i64,
    defined: bool,
}

#[derive(Serialize)]
struct GeometricSummary {
    box_side: f64,
    n: usize,
    trials: usize,
    mean_min_tau: f64,
    sd_min_tau: f64,
}

/// Rounds-to-success against min τ, success at fixed r against min τ, and
/// min τ of random geometric graphs against team size.
pub fn run_tau_studies(cfg: &ExperimentConfig) -> Result<Report> {
    let tc = &cfg.tau;
    let pool = pool(cfg.threads)?;
    let mut report = Report::default();
    let spec = |k: usize, s: usize| CirculantSpec { legitimate: tc.legitimate, offsets: k, detectable: s, attach: None };

    let trials = cfg.trials_or(tc.rounds_trials);
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &s in &tc.rounds_detectable {
        let mut series: Vec<(i64, Vec<f64>)> = Vec::new();
        for &k in &tc.offsets {
            let sp = spec(k, s);
            let (g, roles, spawn) = circulant_world(&sp)?;
            let world = World::new(g, roles, channel(cfg, tc.rounds_epsilon)?, strategy(cfg, spawn))?;
            let cap = match tc.rounds_cap {
                Some(c) => c,
                None => default_cap(world.n(), tc.rounds_epsilon)?,
            };
            let tau = sp.min_tau();
            let id = format!("tau-study/rounds/s={s}/k={k}");
            let out = run_trials(&pool, cfg.seed, &id, trials, |_, seed| {
                Ok((seed, first_fsr_success(&world, cap, &mut trial_rng(seed))))
            })?;
            let mut xs = Vec::with_capacity(trials);
            for (trial, &(seed, r)) in out.iter().enumerate() {
                xs.push(r.unwrap_or(cap) as f64);
                rows.push(TauRoundsTrial {
                    detectable: s,
                    min_tau: tau,
                    trial,
                    seed,
                    rounds: r.unwrap_or(cap),
                    censored: r.is_none(),
                });
            }
            let (m, sd) = mean_sd(&xs);
            report.summary.push(format!("s={s} τ={tau}: mean rounds-to-success {m:.2} ± {sd:.2}"));
            summary.push(TauRoundsSummary { detectable: s, min_tau: tau, trials, mean_rounds: m, sd_rounds: sd });
            series.push((tau, xs));
        }
        let mut ok = true;
        let mut detail = Vec::new();
        for w in series.windows(2) {
            let (pass, diff, se) = clearly_greater(&w[0].1, &w[1].1);
            ok &= pass;
            detail.push(format!("τ {}→{}: −{diff:.2} (2σ {:.2})", w[0].0, w[1].0, 2.0 * se));
        }
        report.checks.push(Check::new(
            format!("tau-study rounds decreasing in τ (s={s})"),
            ok,
            detail.join(", "),
        ));
    }
    report.add_csv("tau_rounds_trials.csv", &rows)?;
    report.add_csv("tau_rounds.csv", &summary)?;

    let trials = cfg.trials_or(tc.fixed_trials);
    let r_max = tc.fixed_rounds.iter().copied().max().unwrap_or(1);
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut rates: BTreeMap<usize, Vec<(i64, f64)>> = BTreeMap::new();
    for &k in &tc.offsets {
        let sp = spec(k, tc.fixed_detectable);
        let (g, roles, spawn) = circulant_world(&sp)?;
        let world = World::new(g, roles, channel(cfg, tc.fixed_epsilon)?, strategy(cfg, spawn))?;
        let tau = sp.min_tau();
        let id = format!("tau-study/fixed/k={k}");
        let out = run_trials(&pool, cfg.seed, &id, trials, |_, seed| {
            Ok((seed, success_curve(&world, r_max, &mut trial_rng(seed)).1))
        })?;
        for &r in &tc.fixed_rounds {
            let mut hits = 0;
            for (trial, (seed, curve)) in out.iter().enumerate() {
                let success = curve[r - 1];
                hits += usize::from(success);
                rows.push(TauFixedTrial { min_tau: tau, trial, seed: *seed, r, success });
            }
            let rate = hits as f64 / trials as f64;
            report.summary.push(format!("r={r} τ={tau}: success rate {rate:.3}"));
            summary.push(TauFixedSummary { r, min_tau: tau, trials, success_rate: rate });
            rates.entry(r).or_default().push((tau, rate));
        }
    }
    for (r, series) in &rates {
        let se = |a: f64, b: f64| rate_error(a, trials).hypot(rate_error(b, trials));
        let steps_ok = series.windows(2).all(|w| w[1].1 >= w[0].1 - 2.0 * se(w[0].1, w[1].1));
        let (first, last) = (series[0].1, series[series.len() - 1].1);
        let rise = last - first > 2.0 * se(first, last);
        let seq: Vec<String> = series.iter().map(|(t, p)| format!("τ={t}:{p:.3}")).collect();
        report.checks.push(Check::new(
            format!("tau-study success increasing in τ (r={r})"),
            steps_ok && rise,
            seq.join(" "),
        ));
    }
    report.add_csv("tau_fixed_trials.csv", &rows)?;
    report.add_csv("tau_fixed.csv", &summary)?;

    let trials = cfg.trials_or(tc.geometric_trials);
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &side in &tc.geometric_boxes {
        let mut series: Vec<(usize, Vec<f64>)> = Vec::new();
        for &n in &tc.geometric_sizes {
            let id = format!("tau-study/geometric/box={side}/n={n}");
            let out = run_trials(&pool, cfg.seed, &id, trials, |_, seed| {
                let (g, _) = gen_random_geometric(n, side, &mut trial_rng(seed))?;
                let tau = min_tau(&g, &RoleAssignment::all_legitimate(n)).ok();
                Ok((seed, tau))
            })?;
            let mut xs = Vec::with_capacity(trials);
            for (trial, &(seed, tau)) in out.iter().enumerate() {
                xs.push(tau.unwrap_or(0) as f64);
                rows.push(GeometricTrial {
                    box_side: side,
                    n,
                    trial,
                    seed,
                    min_tau: tau.unwrap_or(0),
                    defined: tau.is_some(),
                });
            }
            let (m, sd) = mean_sd(&xs);
            report.summary.push(format!("box={side} n={n}: mean min τ {m:.3} ± {sd:.3}"));
            summary.push(GeometricSummary { box_side: side, n, trials, mean_min_tau: m, sd_min_tau: sd });
            series.push((n, xs));
        }
        let mut ok = true;
        let mut detail = Vec::new();
        for w in series.windows(2) {
            let (pass, diff, se) = clearly_greater(&w[1].1, &w[0].1);
            ok &= pass;
            detail.push(format!("n {}→{}: +{diff:.3} (2σ {:.3})", w[0].0, w[1].0, 2.0 * se));
        }
        report.checks.push(Check::new(
            format!("tau-study min τ increasing in n (box={side})"),
            ok,
            detail.join(", "),
        ));
    }
    report.add_csv("tau_geometric_trials.csv", &rows)?;
    report.add_csv("tau_geometric.csv", &summary)?;
    Ok(report)
}

#[derive(Serialize)]
struct ConnectivityTrial {
    spoofed: usize,
    trial: usize,
    seed: u64,
    perceived: f64,
    actual: f64,
}

#[derive(Serialize)]
struct ConnectivitySummary {
    spoofed: usize,
    trials: usize,
    perceived_mean: f64,
    perceived_sd: f64,
    actual_mean: f64,
    actual_sd: f64,
    gap_mean: f64,
    gap_se: f64,
}

/// λ₂ of the graph robots perceive against the graph without spoofed identities.
/// Spoofed identities are placed in the box like physical robots.
pub fn run_connectivity_inflation(cfg: &ExperimentConfig) -> Result<Report> {
    let cc = &cfg.connectivity;
    let pool = pool(cfg.threads)?;
    let trials = cfg.trials_or(cc.trials);
    let mut report = Report::default();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut gaps: Vec<(usize, Vec<f64>)> = Vec::new();
    for &k in &cc.spoofed {
        let n = cc.legitimate + k;
        let id = format!("connectivity/spoofed={k}");
        let out = run_trials(&pool, cfg.seed, &id, trials, |_, seed| {
            let (g, _) = gen_random_geometric(n, cc.box_side, &mut trial_rng(seed))?;
            let roles = RoleAssignment::new(
                (0..n).map(|i| if i < cc.legitimate { Role::Legitimate } else { Role::Spoofed }).collect(),
            );
            Ok((seed, perceived_vs_actual_connectivity(&g, &roles)?))
        })?;
        let mut p = Vec::with_capacity(trials);
        let mut a = Vec::with_capacity(trials);
        for (trial, &(seed, (perceived, actual))) in out.iter().enumerate() {
            p.push(perceived);
            a.push(actual);
            rows.push(ConnectivityTrial { spoofed: k, trial, seed, perceived, actual });
        }
        let gap: Vec<f64> = p.iter().zip(&a).map(|(x, y)| x - y).collect();
        let (pm, ps) = mean_sd(&p);
        let (am, asd) = mean_sd(&a);
        let (gm, gse) = (mean_sd(&gap).0, std_error(&gap));
        report.summary.push(format!("spoofed={k}: perceived λ₂ {pm:.4}, actual λ₂ {am:.4}"));
        let (pass, detail) = if k == 0 {
            (gap.iter().all(|&d| d == 0.0), format!("perceived {pm:.4} = actual {am:.4}"))
        } else {
            (gm > 2.0 * gse, format!("gap {gm:.4} vs 2σ {:.4}", 2.0 * gse))
        };
        report.checks.push(Check::new(format!("connectivity spoofed={k}"), pass, detail));
        summary.push(ConnectivitySummary {
            spoofed: k,
            trials,
            perceived_mean: pm,
            perceived_sd: ps,
            actual_mean: am,
            actual_sd: asd,
            gap_mean: gm,
            gap_se: gse,
        });
        gaps.push((k, gap));
    }
    gaps.sort_by_key(|g| g.0);
    let monotone = gaps.windows(2).all(|w| {
        let (m0, m1) = (mean_sd(&w[0].1).0, mean_sd(&w[1].1).0);
        m1 >= m0 - 2.0 * std_error(&w[0].1).hypot(std_error(&w[1].1))
    });
    report.checks.push(Check::new(
        "connectivity gap monotone in spoofed count",
        monotone,
        "within 2σ between consecutive counts",
    ));
    report.add_csv("connectivity_trials.csv", &rows)?;
    report.add_csv("connectivity.csv", &summary)?;
    Ok(report)
}

#[derive(Serialize)]
struct WmsrTrial {
    mode: &'static str,
    trial: usize,
    seed: u64,
    rounds: usize,
    trust_correct: bool,
    initial_max_error: f64,
    final_max_error: f64,
    final_mean_error: f64,
    growing: bool,
}

const WMSR_MODES: [(AgreementMode, &str); 2] = [(AgreementMode::Wmsr, "wmsr"), (AgreementMode::FsrThenWmsr, "fsr_then_wmsr")];

/// Static-target agreement on a fixture with drifting adversaries, with and
/// without trust filtering. Both modes start from the same noisy estimates.
pub fn run_wmsr_scenarios(cfg: &ExperimentConfig) -> Result<Report> {
    let wc = &cfg.wmsr;
    let pool = pool(cfg.threads)?;
    let trials = cfg.trials_or(wc.trials);
    let (g, roles) = fixture_graph(&wc.fixture)?;
    let world = World::new(g, roles, channel(cfg, wc.epsilon)?, cfg.strategy.clone())?;
    let tau = min_tau(&world.graph, &world.roles)?;
    let r = rounds_bound_theorem1(
        world.roles.legitimate_count(),
        world.n(),
        world.channel.epsilon(),
        tau,
        max_legitimate_degree(&world.graph, &world.roles),
        wc.delta,
    )?;
    let agreement = |mode| AgreementConfig {
        mode,
        f: wc.f,
        steps: wc.steps,
        target: vec![0.0, 0.0],
        noise_sigma: wc.noise_sigma,
        adversary: AdversaryValuePolicy::LinearDrift { rate: wc.drift_rate },
    };
    let out = run_trials(&pool, cfg.seed, "wmsr", trials, |trial, seed| {
        let mut rng = trial_rng(seed);
        let trust = find_spoofed_robots(&world, r, &mut rng)?;
        let correct = all_correct(&world, &trust);
        let noise_seed: u64 = rng.random();
        let mut rows = Vec::new();
        let mut trajectories = Vec::new();
        for (mode, name) in WMSR_MODES {
            let ac = agreement(mode);
            let traj = run_target_agreement(&world, Some(&trust), &ac, &mut trial_rng(noise_seed))?;
            let errors: Vec<f64> = traj.iter().map(|s| max_error(&world, s, &ac.target)).collect();
            let growing = errors[errors.len() / 2..].windows(2).all(|w| w[1] > w[0]);
            let last = traj.last().expect("initial state is recorded");
            rows.push(WmsrTrial {
                mode: name,
                trial,
                seed,
                rounds: r,
                trust_correct: correct,
                initial_max_error: errors[0],
                final_max_error: errors[errors.len() - 1],
                final_mean_error: mean_error(&world, last, &ac.target),
                growing,
            });
            if trial == 0 {
                let mut buf = Vec::new();
                write_trajectory_csv(&mut buf, &traj)?;
                trajectories.push((format!("wmsr_trajectory_{name}.csv"), String::from_utf8(buf).expect("utf-8")));
            }
        }
        Ok((rows, trajectories))
    })?;
    let mut report = Report::default();
    let mut rows = Vec::new();
    for (r, t) in out {
        rows.extend(r);
        report.files.extend(t);
    }
    let finals = |name: &str| -> Vec<f64> {
        rows.iter().filter(|r| r.mode == name).map(|r| r.final_max_error).collect()
    };
    let grow = rows.iter().filter(|r| r.mode == "wmsr" && r.growing).count();
    let worst = finals("fsr_then_wmsr").into_iter().fold(0.0, f64::max);
    let limit = 2.0 * wc.noise_sigma;
    report.summary.push(format!("protocol rounds r = {r} (τ = {tau})"));
    report.summary.push(format!(
        "wmsr: mean final error {:.3}; fsr_then_wmsr: mean final error {:.3}",
        mean_sd(&finals("wmsr")).0,
        mean_sd(&finals("fsr_then_wmsr")).0,
    ));
    report.checks.push(Check::new(
        "wmsr-only error grows",
        grow == trials,
        format!("{grow}/{trials} trials strictly increasing over the last half"),
    ));
    report.checks.push(Check::new(
        "fsr_then_wmsr error bounded",
        worst <= limit,
        format!("worst final error {worst:.3} vs 2σ = {limit}"),
    ));
    report.add_csv("wmsr_trials.csv", &rows)?;
    Ok(report)
}

#[derive(Serialize)]
struct FlockTrial {
    defense: bool,
    trial: usize,
    seed: u64,
    escaped: bool,
    time_to_escape: Option<f64>,
    recovery_time: Option<f64>,
    max_distance: f64,
    final_distance: f64,
    settled_trail: f64,
    trust_rounds: Option<usize>,
    resolution_time: Option<f64>,
    trust_correct: Option<bool>,
}

/// Defense-off and defense-on runs of the hacked-team scenario from the same
/// initial positions.
pub fn run_flock_scenario(cfg: &ExperimentConfig) -> Result<Report> {
    let fc = &cfg.flock;
    let pool = pool(cfg.threads)?;
    let trials = cfg.trials_or(fc.trials);
    let base = crate::flocking::FlockScenario {
        push_gain: cfg.strategy.attack_push_gain,
        ..fc.scenario.clone()
    };
    let out = run_trials(&pool, cfg.seed, "flock", trials, |trial, seed| {
        let mut rows = Vec::new();
        let mut files = Vec::new();
        for defense in [false, true] {
            let sc = crate::flocking::FlockScenario {
                defense,
                record_every: if trial == 0 { base.record_every } else { 0 },
                ..base.clone()
            };
            let o = run_flock(&sc, &mut trial_rng(seed))?;
            rows.push(FlockTrial {
                defense,
                trial,
                seed,
                escaped: o.escaped,
                time_to_escape: o.time_to_escape,
                recovery_time: o.recovery_time,
                max_distance: o.max_distance_after_attack,
                final_distance: o.final_distance,
                settled_trail: o.settled_trail,
                trust_rounds: o.trust_rounds,
                resolution_time: o.resolution_time,
                trust_correct: o.trust_correct,
            });
            if trial == 0 && sc.record_every > 0 {
                let mut buf = Vec::new();
                write_flock_csv(&mut buf, &o.frames)?;
                let tag = if defense { "on" } else { "off" };
                files.push((format!("flock_trajectory_defense_{tag}.csv"), String::from_utf8(buf).expect("utf-8")));
            }
        }
        Ok((rows, files))
    })?;
    let mut report = Report::default();
    let mut rows = Vec::new();
    for (r, f) in out {
        rows.extend(r);
        report.files.extend(f);
    }
    let s = &base;
    let delta = escape_window(s.gains.u_max, norm(s.target_velocity), s.gains.k_ref)?;
    let off: Vec<&FlockTrial> = rows.iter().filter(|r| !r.defense).collect();
    let on: Vec<&FlockTrial> = rows.iter().filter(|r| r.defense).collect();
    let escapes = off.iter().filter(|r| r.escaped).count();
    let fastest = off.iter().filter_map(|r| r.time_to_escape).fold(f64::INFINITY, f64::min);
    let lost = on.iter().filter(|r| r.escaped).count();
    let slowest = on.iter().filter_map(|r| r.resolution_time).fold(0.0, f64::max);
    report.summary.push(format!(
        "escape window Δ = {delta:.4} s; defense off: {escapes}/{trials} escaped, fastest {fastest:.3} s; \
         defense on: {lost}/{trials} lost, trust resolved within {slowest:.4} s"
    ));
    if s.attack_time.is_some() {
        report.checks.push(Check::new(
            "flock defense off escapes",
            escapes == trials,
            format!("{escapes}/{trials} runs left the convergence range"),
        ));
        report.checks.push(Check::new(
            "flock time-to-escape at least Δ",
            escapes > 0 && fastest >= delta,
            format!("fastest escape {fastest:.3} s, Δ = {delta:.4} s"),
        ));
        report.checks.push(Check::new(
            "flock defense on keeps the target",
            lost == 0,
            format!("{lost}/{trials} runs lost the target"),
        ));
        report.checks.push(Check::new(
            "flock trust resolves within Δ",
            slowest <= delta,
            format!("slowest resolution {slowest:.4} s, Δ = {delta:.4} s"),
        ));
    }
    report.add_csv("flock_trials.csv", &rows)?;
    Ok(report)
}

/// Runs trust estimation and flooding on a named fixture and prints what the
/// first legitimate robot holds after one exchange and at the end.
pub fn run_fram_demo(cfg: &ExperimentConfig) -> Result<Report> {
    let fc = &cfg.fram;
    let (g, roles) = fixture_graph(&fc.fixture)?;
    let ch = match fc.epsilon {
        Some(e) => channel(cfg, e)?,
        None => ObservationChannel::noiseless(),
    };
    let world = World::new(g.clone(), roles, ch, cfg.strategy.clone())?;
    let r = match fc.epsilon {
        Some(_) => rounds_bound_theorem1(
            world.roles.legitimate_count(),
            world.n(),
            world.channel.epsilon(),
            min_tau(&world.graph, &world.roles)?,
            max_legitimate_degree(&world.graph, &world.roles),
            fc.delta,
        )?,
        None => 1,
    };
    let mut rng = trial_rng(super::trial_seed(cfg.seed, "fram-demo", 0));
    let trust = find_spoofed_robots(&world, r, &mut rng)?;
    let broadcasts = fram_broadcasts(&world, &trust, &mut rng)?;
    let legit = world.roles.legitimate();
    let first = *legit.first().ok_or_else(|| Error::Input("fixture has no legitimate robot".into()))?;
    let mut report = Report::default();
    let st = FramState::first_exchange(&world, &broadcasts)?;
    let partial = st.partial(first).expect("legitimate robots have a partial matrix");
    report.summary.push(format!("robot {first} after the first exchange:\n{}", partial.render()));
    let mut buf = Vec::new();
    partial.write_csv(&mut buf)?;
    report.files.push(("fram_first_exchange.csv".into(), String::from_utf8(buf).expect("utf-8")));
    match fram(&world, &broadcasts, fc.max_rounds) {
        Ok(matrices) => {
            let m = &matrices[&first];
            report.summary.push(format!("robot {first} adjacency:\n{m}"));
            let agree = matrices.values().all(|x| x == m);
            report.checks.push(Check::new(
                "fram legitimate robots agree",
                agree,
                format!("{} legitimate robots", matrices.len()),
            ));
            if world.roles.malicious_count() == 0 {
                let truth = BinaryMatrix::from_graph(&g);
                report.checks.push(Check::new(
                    "fram recovers the communication graph",
                    matrices.values().all(|x| *x == truth),
                    format!("{}x{} with self-loops", truth.n(), truth.n()),
                ));
            }
            let mut buf = Vec::new();
            m.write_csv(&mut buf)?;
            report.files.push(("fram_adjacency.csv".into(), String::from_utf8(buf).expect("utf-8")));
        }
        Err(Error::FloodStalled { owner, rounds, missing, partial }) => {
            report.summary.push(format!("robot {owner} holds after {rounds} rounds:\n{}", partial.render()));
            report.checks.push(Check::new(
                "fram legitimate robots agree",
                false,
                format!("flooding stalled: robot {owner} misses {missing} rows after {rounds} rounds"),
            ));
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fram_demo_prints_estimation5() {
        let report = run_fram_demo(&ExperimentConfig::default()).unwrap();
        assert!(report.passed(), "{:?}", report.checks);
        assert!(report.summary[0].contains("1 0 1 1 0\n- - - - -\n1 1 1 1 0\n1 0 1 1 0\n- - - - -\n"));
        assert!(report.summary[1].ends_with("1 0 1 1 0\n0 1 1 0 1\n1 1 1 1 0\n1 0 1 1 0\n0 1 0 0 1\n"));
    }

    #[test]
    fn mismatched_experiment_is_a_config_error() {
        let cfg = ExperimentConfig { experiment: Some(ExperimentKind::Wmsr), ..Default::default() };
        assert!(matches!(run_experiment(ExperimentKind::Flock, &cfg), Err(Error::Config(_))));
    }

}
