//! Monte-Carlo play of the repeated game.
//!
//! Each replicate owns three ChaCha8 streams derived from `(seed, replicate)`:
//! one for the hidden state, one per player. Runs with the same seed share
//! the state path exactly, and Player 1's draws as well, which is what the
//! payoff-independence comparison relies on.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::belief::GameParameter;
use crate::error::{Error, Result};
use crate::numeric::{Precision, Real};
use crate::perturbation::perturbed_beliefs;
use crate::response::{ResponseContext, ResponseSolution, PREIMAGE_TOL};
use crate::sigma_star::{payoff, sigma_star_prob_t, ColAction, HiddenState, RowAction};

/// Batches per replicate for the batch-means interval.
pub const BATCHES: usize = 32;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Player 1 strategies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Strategy1 {
    SigmaStar,
    /// `σ_{k₀,ε}`.
    Perturbed { k0: usize, epsilon: f64 },
    Uniform,
    /// Plays Top in the low state and Bottom in the high state.
    Greedy,
}

impl Strategy1 {
    pub fn name(&self) -> String {
        match self {
            Strategy1::SigmaStar => "sigma_star".into(),
            Strategy1::Perturbed { k0, epsilon } => format!("perturbed(k0={k0},eps={epsilon})"),
            Strategy1::Uniform => "uniform".into(),
            Strategy1::Greedy => "greedy".into(),
        }
    }
}

impl std::str::FromStr for Strategy1 {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse {
            input: s.into(),
            expected: "sigma-star | uniform | greedy | perturbed:K0:EPS",
        };
        match s {
            "sigma-star" | "sigma_star" => Ok(Strategy1::SigmaStar),
            "uniform" => Ok(Strategy1::Uniform),
            "greedy" => Ok(Strategy1::Greedy),
            _ => {
                let rest = s.strip_prefix("perturbed:").ok_or_else(bad)?;
                let (k, e) = rest.split_once(':').ok_or_else(bad)?;
                Ok(Strategy1::Perturbed {
                    k0: k.parse().map_err(|_| bad())?,
                    epsilon: e.parse().map_err(|_| bad())?,
                })
            }
        }
    }
}

/// Player 2 strategies.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy2 {
    AlwaysL,
    AlwaysR,
    Uniform,
    TauStar,
    /// `x(θ)` on the orbit beliefs up to the given depth.
    XAutomaton { depth: usize },
    /// Myopic best response to Player 1's announced mixed actions.
    BestResponse,
    Automaton(Arc<Player2Automaton>),
}

impl Strategy2 {
    pub fn name(&self) -> String {
        match self {
            Strategy2::AlwaysL => "always_l".into(),
            Strategy2::AlwaysR => "always_r".into(),
            Strategy2::Uniform => "uniform".into(),
            Strategy2::TauStar => "tau_star".into(),
            Strategy2::XAutomaton { depth } => format!("x_automaton(depth={depth})"),
            Strategy2::BestResponse => "best_response".into(),
            Strategy2::Automaton(a) => a.name.clone(),
        }
    }
}

impl std::str::FromStr for Strategy2 {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse {
            input: s.into(),
            expected: "always-l | always-r | uniform | tau-star | best-response | x-automaton[:DEPTH]",
        };
        match s {
            "always-l" | "always_l" => Ok(Strategy2::AlwaysL),
            "always-r" | "always_r" => Ok(Strategy2::AlwaysR),
            "uniform" => Ok(Strategy2::Uniform),
            "tau-star" | "tau_star" => Ok(Strategy2::TauStar),
            "best-response" | "best_response" => Ok(Strategy2::BestResponse),
            "x-automaton" | "x_automaton" => Ok(Strategy2::XAutomaton { depth: 64 }),
            _ => {
                let d = s.strip_prefix("x-automaton:").ok_or_else(bad)?;
                Ok(Strategy2::XAutomaton {
                    depth: d.parse().map_err(|_| bad())?,
                })
            }
        }
    }
}

/// Finite automaton for Player 2: a probability of Left per state and a
/// successor per Player-1 action.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Player2Automaton {
    pub name: String,
    /// Belief attached to each state.
    pub states: Vec<f64>,
    pub prob_l: Vec<f64>,
    pub next_t: Vec<usize>,
    pub next_b: Vec<usize>,
    /// Start when Player 1's belief starts at `p` / at `1 − p`.
    pub start_upper: usize,
    pub start_lower: usize,
    pub warnings: Vec<String>,
}

impl Player2Automaton {
    fn validate(&self) -> Result<()> {
        let n = self.states.len();
        let ok = n > 0
            && self.prob_l.len() == n
            && self.next_t.len() == n
            && self.next_b.len() == n
            && self.prob_l.iter().all(|x| (0.0..=1.0).contains(x))
            && self.next_t.iter().chain(&self.next_b).all(|&j| j < n)
            && self.start_upper < n
            && self.start_lower < n;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("malformed automaton {}", self.name)))
        }
    }
}

/// Two states keyed by Player 1's last move: Left with probability
/// `(2p − 1)/(4p − 1)` after Top and `2p/(4p − 1)` after Bottom.
pub fn build_tau_star(p: f64) -> Result<Player2Automaton> {
    if !(0.5..1.0).contains(&p) {
        return Err(Error::Domain {
            what: "p",
            value: p,
            domain: "[1/2, 1)",
        });
    }
    let mut warnings = Vec::new();
    if p > 2.0 / 3.0 {
        let w = format!("tau* is built for p <= 2/3; p = {p} is outside that range");
        log::warn!("{w}");
        warnings.push(w);
    }
    let d = 4.0 * p - 1.0;
    Ok(Player2Automaton {
        name: "tau_star".into(),
        states: vec![p, 1.0 - p],
        prob_l: vec![(2.0 * p - 1.0) / d, 2.0 * p / d],
        next_t: vec![0, 0],
        next_b: vec![1, 1],
        start_upper: 0,
        start_lower: 1,
        warnings,
    })
}

/// `x(θ)` on the orbits of `p` and `1 − p`, rungs `0..=depth`. The deepest
/// rung loops to itself.
pub fn build_x_automaton(g: &GameParameter<f64>, solution: &ResponseSolution<f64>, depth: usize) -> Result<Player2Automaton> {
    if depth == 0 {
        return Err(Error::Invalid("automaton depth must be at least 1".into()));
    }
    let ctx = ResponseContext::new(g, solution.v, solution.z, 1e-13)?;
    let mut warnings = Vec::new();
    if let Some(r) = &solution.inequality_report {
        if !r.passed {
            warnings.push(format!("inequality checks failed at p = {}", g.p));
        }
    }
    let rungs = depth + 1;
    let mut states = Vec::with_capacity(2 * rungs);
    let mut prob_l = Vec::with_capacity(2 * rungs);
    let mut next_t = Vec::with_capacity(2 * rungs);
    let mut next_b = Vec::with_capacity(2 * rungs);
    let mut clamped = 0;
    // block 0: orbit of p, block 1: orbit of 1 − p
    for (block, start) in [g.p, g.q()].into_iter().enumerate() {
        let mut th = start;
        for r in 0..rungs {
            let idx = block * rungs + r;
            // an orbit that hits ½ in exact arithmetic lands within rounding of it here
            if (th - 0.5).abs() < PREIMAGE_TOL {
                th = 0.5;
            }
            let x = ctx.eval_x(&th)?;
            if !(0.0..=1.0).contains(&x) {
                clamped += 1;
            }
            states.push(th);
            prob_l.push(x.clamp(0.0, 1.0));
            let deeper = if r + 1 < rungs { idx + 1 } else { idx };
            // climbing means playing the action that keeps the belief on its orbit
            if th >= 0.5 {
                next_b.push(deeper);
                next_t.push(0);
            } else {
                next_t.push(deeper);
                next_b.push(rungs);
            }
            th = g.step(&th);
        }
    }
    if clamped > 0 {
        warnings.push(format!("{clamped} values of x outside [0, 1] were clamped"));
    }
    log::debug!("x automaton: rungs beyond {depth} are approximated by rung {depth}");
    for w in &warnings {
        log::warn!("{w}");
    }
    let a = Player2Automaton {
        name: format!("x_automaton(depth={depth})"),
        states,
        prob_l,
        next_t,
        next_b,
        start_upper: 0,
        start_lower: rungs,
        warnings,
    };
    a.validate()?;
    Ok(a)
}

/// Summary of one replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameTrace {
    pub seed: u64,
    pub replicate: u64,
    pub rounds: u64,
    pub total_gain: u64,
    pub mean_gain: f64,
    /// Batch-means 95% half-width.
    pub ci95: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub p: f64,
    pub strat1: String,
    pub strat2: String,
    pub seed: u64,
    pub rounds: u64,
    pub replicates: usize,
    pub traces: Vec<GameTrace>,
    pub total_gain: u64,
    pub mean_gain: f64,
    /// Standard error of `mean_gain`.
    pub std_error: f64,
    pub ci95: f64,
}

impl SimulationSummary {
    /// `|mean − target| ≤ k·σ`.
    pub fn within_sigmas(&self, target: f64, k: f64) -> bool {
        (self.mean_gain - target).abs() <= k * self.std_error
    }
}

/// One CSV row.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub seed: u64,
    pub rounds: u64,
    pub mean: f64,
    pub ci95: f64,
    pub strat1: String,
    pub strat2: String,
    pub p: f64,
}

impl SimulationSummary {
    pub fn rows(&self) -> Vec<TraceRow> {
        self.traces
            .iter()
            .map(|t| TraceRow {
                seed: t.seed,
                rounds: t.rounds,
                mean: t.mean_gain,
                ci95: t.ci95,
                strat1: self.strat1.clone(),
                strat2: self.strat2.clone(),
                p: self.p,
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub p: f64,
    pub rounds: u64,
    pub replicates: usize,
    pub seed: u64,
}

/// Player 1's private position: which chain branch, how many climbs since
/// the last fall, and the belief itself.
#[derive(Debug, Clone, Copy)]
struct P1Memory {
    theta: f64,
    /// 0 on the ladder, 1 after `θ̃_ε`, 2 after `1 − p_ε`.
    branch: u8,
    rung: usize,
    /// The current ladder run started at `1 − p`.
    from_low: bool,
}

/// Compiled Player 1.
struct P1 {
    kind: Strategy1,
    p: f64,
    gamma: f64,
    /// `(θ̃, θ̃_ε, p_ε, ε)` for the perturbed strategy.
    pert: Option<(usize, f64, f64, f64, f64)>,
}

impl P1 {
    fn new(kind: Strategy1, p: f64) -> Result<Self> {
        let pert = match kind {
            Strategy1::Perturbed { k0, epsilon } => {
                if !(0.0..1.0).contains(&epsilon) {
                    return Err(Error::Domain {
                        what: "epsilon",
                        value: epsilon,
                        domain: "[0, 1)",
                    });
                }
                let g = GameParameter::from_f64(p, Precision::Float64)?;
                let b = perturbed_beliefs(&g, k0, &epsilon)?;
                Some((k0, b.theta_tilde, b.theta_tilde_eps, b.p_eps, epsilon))
            }
            _ => None,
        };
        Ok(P1 {
            kind,
            p,
            gamma: 2.0 * p - 1.0,
            pert,
        })
    }

    #[inline]
    fn start(&self, state: HiddenState) -> P1Memory {
        let low = state == HiddenState::High;
        P1Memory {
            theta: if low { 1.0 - self.p } else { self.p },
            branch: 0,
            rung: 0,
            from_low: low,
        }
    }

    /// Perturbation site: `Some(false)` at `θ̃`, `Some(true)` at `1 − θ̃`.
    #[inline]
    fn at_site(&self, m: &P1Memory) -> Option<bool> {
        match self.pert {
            Some((k0, ..)) if m.branch == 0 && m.rung == k0 => Some(!m.from_low),
            _ => None,
        }
    }

    /// `(P(T | low), P(T | high))` at the current position.
    #[inline]
    fn probs(&self, m: &P1Memory) -> (f64, f64) {
        match self.kind {
            Strategy1::Uniform => (0.5, 0.5),
            Strategy1::Greedy => (1.0, 0.0),
            _ => {
                if let (Some(mirrored), Some((_, t, _, _, eps))) = (self.at_site(m), self.pert) {
                    let shaded = (1.0 - eps) * t / (1.0 - t);
                    return if mirrored { (shaded, eps) } else { (1.0 - eps, 1.0 - shaded) };
                }
                sigma_star_probs(m.theta)
            }
        }
    }

    #[inline]
    fn update(&self, m: &mut P1Memory, top: bool) {
        if matches!(self.kind, Strategy1::Uniform | Strategy1::Greedy) {
            return;
        }
        if let (Some(mirrored), Some((_, _, te, pe, _))) = (self.at_site(m), self.pert) {
            // θ̃: Top → θ̃_ε, Bottom → 1 − p_ε; mirrored at 1 − θ̃
            let (theta, branch) = match (mirrored, top) {
                (false, true) => (te, 1),
                (false, false) => (1.0 - pe, 2),
                (true, false) => (1.0 - te, 1),
                (true, true) => (pe, 2),
            };
            *m = P1Memory {
                theta,
                branch,
                rung: 0,
                from_low: m.from_low,
            };
            return;
        }
        let climb = (m.theta >= 0.5) != top;
        if climb {
            m.theta = if m.theta >= 0.5 {
                3.0 * self.p - 1.0 - self.gamma / m.theta
            } else {
                (self.p * m.theta + (1.0 - self.p) * (1.0 - m.theta - m.theta)) / (1.0 - m.theta)
            };
            m.rung += 1;
        } else {
            *m = P1Memory {
                theta: if top { self.p } else { 1.0 - self.p },
                branch: 0,
                rung: 0,
                from_low: !top,
            };
        }
    }
}

/// `σ*` in `f64`, matching [`sigma_star_prob_t`].
#[inline]
fn sigma_star_probs(t: f64) -> (f64, f64) {
    if t <= 0.5 {
        (1.0, (1.0 - t - t) / (1.0 - t))
    } else {
        ((1.0 - t) / t, 0.0)
    }
}

/// Compiled Player 2.
enum P2 {
    Const(f64),
    Auto(Arc<Player2Automaton>),
    Best,
}

impl P2 {
    fn new(s: &Strategy2, p: f64) -> Result<Self> {
        Ok(match s {
            Strategy2::AlwaysL => P2::Const(1.0),
            Strategy2::AlwaysR => P2::Const(0.0),
            Strategy2::Uniform => P2::Const(0.5),
            Strategy2::TauStar => P2::Auto(Arc::new(build_tau_star(p)?)),
            Strategy2::XAutomaton { depth } => {
                let g = GameParameter::from_f64(p, Precision::Float64)?;
                let sol = crate::response::solve(&g, 1e-13)?;
                P2::Auto(Arc::new(build_x_automaton(&g, &sol, *depth)?))
            }
            Strategy2::BestResponse => P2::Best,
            Strategy2::Automaton(a) => {
                a.validate()?;
                P2::Auto(a.clone())
            }
        })
    }
}

fn streams(seed: u64, replicate: u64) -> [ChaCha8Rng; 3] {
    [0u64, 1, 2].map(|k| {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        r.set_stream(replicate * 4 + k);
        r
    })
}

fn play_replicate(p: f64, p1: &P1, p2: &P2, rounds: u64, seed: u64, replicate: u64) -> GameTrace {
    let [mut rs, mut r1, mut r2] = streams(seed, replicate);
    let mut state = if rs.random::<bool>() {
        HiddenState::Low
    } else {
        HiddenState::High
    };
    let mut m1 = p1.start(state);
    let mut a2 = match p2 {
        P2::Auto(a) if state == HiddenState::Low => a.start_upper,
        P2::Auto(a) => a.start_lower,
        _ => 0,
    };
    // myopic best response keeps its own posterior that the state is low
    let mut beta = 0.5;
    let batch = (rounds / BATCHES as u64).max(1);
    let mut batch_means = Vec::with_capacity(BATCHES + 1);
    let mut batch_gain = 0u64;
    let mut batch_len = 0u64;
    let mut total = 0u64;
    let flip = 1.0 - p;
    for _ in 0..rounds {
        let (tl, th) = p1.probs(&m1);
        let prob_t = if state == HiddenState::Low { tl } else { th };
        let top = r1.random::<f64>() < prob_t;
        let prob_l = match p2 {
            P2::Const(x) => *x,
            P2::Auto(a) => a.prob_l[a2],
            P2::Best => {
                // Left risks β·P(T | low), Right risks (1 − β)·P(B | high)
                if beta * tl <= (1.0 - beta) * (1.0 - th) {
                    1.0
                } else {
                    0.0
                }
            }
        };
        let left = r2.random::<f64>() < prob_l;
        let row = if top { RowAction::Top } else { RowAction::Bottom };
        let col = if left { ColAction::Left } else { ColAction::Right };
        let gain = payoff(state, row, col) as u64;
        total += gain;
        batch_gain += gain;
        batch_len += 1;
        if batch_len == batch {
            batch_means.push(batch_gain as f64 / batch as f64);
            batch_gain = 0;
            batch_len = 0;
        }
        match p2 {
            P2::Auto(a) => a2 = if top { a.next_t[a2] } else { a.next_b[a2] },
            P2::Best => {
                let (lt, ht) = if top { (tl, th) } else { (1.0 - tl, 1.0 - th) };
                let den = beta * lt + (1.0 - beta) * ht;
                let post = if den > 0.0 { beta * lt / den } else { beta };
                beta = p * post + (1.0 - p) * (1.0 - post);
            }
            P2::Const(_) => {}
        }
        p1.update(&mut m1, top);
        if rs.random::<f64>() < flip {
            state = state.other();
        }
    }
    let mean = total as f64 / rounds as f64;
    GameTrace {
        seed,
        replicate,
        rounds,
        total_gain: total,
        mean_gain: mean,
        ci95: Z95 * std_error(&batch_means),
    }
}

/// Standard error of the mean of `xs`; zero for fewer than two values.
fn std_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Plays `replicates` independent games of `rounds` rounds each, in parallel.
pub fn play(cfg: &SimConfig, strat1: Strategy1, strat2: &Strategy2) -> Result<SimulationSummary> {
    if cfg.rounds == 0 {
        return Err(Error::Invalid("rounds must be at least 1".into()));
    }
    if cfg.replicates == 0 {
        return Err(Error::Invalid("replicates must be at least 1".into()));
    }
    if !(0.5..=1.0).contains(&cfg.p) {
        return Err(Error::Domain {
            what: "p",
            value: cfg.p,
            domain: "[1/2, 1]",
        });
    }
    if cfg.p == 1.0 && !matches!(strat1, Strategy1::Uniform | Strategy1::Greedy) {
        return Err(Error::Divergence { p: 1.0 });
    }
    let p1 = P1::new(strat1, cfg.p)?;
    let p2 = P2::new(strat2, cfg.p)?;
    let traces: Vec<GameTrace> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| play_replicate(cfg.p, &p1, &p2, cfg.rounds, cfg.seed, r))
        .collect();
    let total: u64 = traces.iter().map(|t| t.total_gain).sum();
    let n = cfg.rounds * cfg.replicates as u64;
    let mean = total as f64 / n as f64;
    let std_err = if traces.len() >= 2 {
        std_error(&traces.iter().map(|t| t.mean_gain).collect::<Vec<_>>())
    } else {
        traces[0].ci95 / Z95
    };
    Ok(SimulationSummary {
        p: cfg.p,
        strat1: strat1.name(),
        strat2: strat2.name(),
        seed: cfg.seed,
        rounds: cfg.rounds,
        replicates: cfg.replicates,
        traces,
        total_gain: total,
        mean_gain: mean,
        std_error: std_err,
        ci95: Z95 * std_err,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct IndependenceReport {
    pub p: f64,
    pub strat1: String,
    pub strat2_a: String,
    pub strat2_b: String,
    pub mean_a: f64,
    pub mean_b: f64,
    pub difference: f64,
    pub pooled_sigma: f64,
    /// `|Δ| < 3·pooled σ`.
    pub indistinguishable: bool,
}

/// Same seed for both runs, so the state path is shared.
pub fn payoff_independence_test(cfg: &SimConfig, strat1: Strategy1, pair: (&Strategy2, &Strategy2)) -> Result<IndependenceReport> {
    let a = play(cfg, strat1, pair.0)?;
    let b = play(cfg, strat1, pair.1)?;
    let difference = a.mean_gain - b.mean_gain;
    let pooled_sigma = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    Ok(IndependenceReport {
        p: cfg.p,
        strat1: strat1.name(),
        strat2_a: a.strat2,
        strat2_b: b.strat2,
        mean_a: a.mean_gain,
        mean_b: b.mean_gain,
        difference,
        pooled_sigma,
        indistinguishable: difference.abs() < 3.0 * pooled_sigma,
    })
}

/// Plays `σ*` for `rounds` rounds in precision `R`, tracking Player 1's
/// belief through `f_T`/`f_B` and an outside observer's posterior through
/// Bayes' rule with the announced mixed action; returns the largest gap.
pub fn belief_consistency_trace<R: Real>(g: &GameParameter<R>, rounds: usize, seed: u64) -> Result<R> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let one = g.one();
    let mut state = if rng.random::<bool>() {
        HiddenState::Low
    } else {
        HiddenState::High
    };
    let mut theta = if state == HiddenState::Low { g.p.clone() } else { g.q() };
    let mut observer = theta.clone();
    let mut worst = g.zero();
    for _ in 0..rounds {
        let tl = sigma_star_prob_t(g, HiddenState::Low, &theta)?;
        let th = sigma_star_prob_t(g, HiddenState::High, &theta)?;
        let prob_t = if state == HiddenState::Low { tl.clone() } else { th.clone() };
        let top = rng.random::<f64>() < prob_t.as_f64();
        let (lt, ht) = if top {
            (tl, th)
        } else {
            (one.clone() - tl, one.clone() - th)
        };
        let post = observer.clone() * lt.clone() / (observer.clone() * lt + (one.clone() - observer.clone()) * ht);
        observer = g.p.clone() * post.clone() + g.q() * (one.clone() - post);
        theta = if top { g.f_t(&theta)? } else { g.f_b(&theta)? };
        let gap = (theta.clone() - observer.clone()).abs();
        if gap > worst {
            worst = gap;
        }
        if rng.random::<f64>() < 1.0 - g.p_f64() {
            state = state.other();
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rational;
    use crate::perturbation::{perturbed_value, PerturbationConfig};
    use crate::sigma_star::value_ladder;

    fn cfg(p: f64, rounds: u64, replicates: usize, seed: u64) -> SimConfig {
        SimConfig {
            p,
            rounds,
            replicates,
            seed,
        }
    }

    fn v(p: f64) -> f64 {
        let g = GameParameter::from_f64(p, Precision::Float64).unwrap();
        value_ladder(&g, 1e-14).unwrap().v
    }

    #[test]
    fn deterministic() {
        let c = cfg(0.7, 20_000, 3, 42);
        let a = play(&c, Strategy1::SigmaStar, &Strategy2::Uniform).unwrap();
        let b = play(&c, Strategy1::SigmaStar, &Strategy2::Uniform).unwrap();
        assert_eq!(a.traces, b.traces);
        let d = play(&cfg(0.7, 20_000, 3, 43), Strategy1::SigmaStar, &Strategy2::Uniform).unwrap();
        assert_ne!(a.traces, d.traces);
    }

    #[test]
    fn half_persistence_wins_half() {
        let s = play(&cfg(0.5, 200_000, 4, 1), Strategy1::SigmaStar, &Strategy2::AlwaysL).unwrap();
        assert!(s.within_sigmas(0.5, 3.0), "{} ± {}", s.mean_gain, s.std_error);
    }

    #[test]
    fn uniform_against_best_response_at_full_persistence() {
        let s = play(&cfg(1.0, 200_000, 4, 2), Strategy1::Uniform, &Strategy2::BestResponse).unwrap();
        assert!(s.within_sigmas(0.25, 3.0), "{} ± {}", s.mean_gain, s.std_error);
        assert!(play(&cfg(1.0, 10, 1, 2), Strategy1::SigmaStar, &Strategy2::AlwaysL).is_err());
    }

    #[test]
    fn tau_star_examples() {
        let a = build_tau_star(0.5).unwrap();
        assert_eq!(a.prob_l, vec![0.0, 1.0]);
        let a = build_tau_star(2.0 / 3.0).unwrap();
        assert!((a.prob_l[0] - 0.2).abs() < 1e-15);
        assert!((a.prob_l[0] + a.prob_l[1] - 1.0).abs() < 1e-15);
        assert!(a.warnings.is_empty());
        assert!(!build_tau_star(0.7).unwrap().warnings.is_empty());
        let s = play(&cfg(0.6, 1_000_000, 4, 3), Strategy1::SigmaStar, &Strategy2::TauStar).unwrap();
        assert!(s.within_sigmas(0.6 / 1.4, 3.0), "{} ± {}", s.mean_gain, s.std_error);
    }

    #[test]
    fn x_automaton_structure() {
        let g = GameParameter::from_f64(2.0 / 3.0, Precision::Float64).unwrap();
        let sol = crate::response::solve(&g, 1e-13).unwrap();
        let a = build_x_automaton(&g, &sol, 8).unwrap();
        let half = a.states.iter().position(|t| *t == 0.5).expect("orbit of 2/3 hits 1/2");
        assert_eq!(a.prob_l[half], 0.5);
        let g = GameParameter::from_f64(0.7, Precision::Float64).unwrap();
        let sol = crate::response::solve(&g, 1e-13).unwrap();
        let a = build_x_automaton(&g, &sol, 10).unwrap();
        for r in 0..=10 {
            assert!((a.prob_l[r] + a.prob_l[11 + r] - 1.0).abs() < 1e-9);
            assert!((a.states[r] + a.states[11 + r] - 1.0).abs() < 1e-12);
        }
        assert!(build_x_automaton(&g, &sol, 0).is_err());
    }

    #[test]
    fn x_automaton_reproduces_value() {
        let s = play(&cfg(0.7, 1_000_000, 4, 4), Strategy1::SigmaStar, &Strategy2::XAutomaton { depth: 64 }).unwrap();
        assert!(s.within_sigmas(v(0.7), 3.0), "{} vs {}", s.mean_gain, v(0.7));
    }

    #[test]
    fn sigma_star_payoff_independent() {
        let r = payoff_independence_test(
            &cfg(0.7, 500_000, 4, 5),
            Strategy1::SigmaStar,
            (&Strategy2::AlwaysL, &Strategy2::AlwaysR),
        )
        .unwrap();
        assert!(r.indistinguishable, "{r:?}");
    }

    #[test]
    fn perturbed_payoff_independent_and_valued() {
        let c = cfg(0.75, 500_000, 4, 6);
        let s1 = Strategy1::Perturbed { k0: 7, epsilon: 0.01 };
        let r = payoff_independence_test(&c, s1, (&Strategy2::AlwaysL, &Strategy2::Uniform)).unwrap();
        assert!(r.indistinguishable, "{r:?}");
        let g = GameParameter::from_f64(0.75, Precision::Float64).unwrap();
        let vp = perturbed_value(&g, &PerturbationConfig::new(7, "0.01", None, None).unwrap()).unwrap();
        let s = play(&c, s1, &Strategy2::AlwaysL).unwrap();
        assert!(s.within_sigmas(vp, 3.0), "{} vs {vp}", s.mean_gain);
    }

    #[test]
    fn greedy_is_exploitable() {
        let r = payoff_independence_test(
            &cfg(0.7, 200_000, 4, 7),
            Strategy1::Greedy,
            (&Strategy2::AlwaysL, &Strategy2::BestResponse),
        )
        .unwrap();
        assert!(!r.indistinguishable, "{r:?}");
        assert!((r.mean_b - 0.3).abs() < 0.01);
    }

    #[test]
    fn beliefs_match_bayes_exactly() {
        let g = GameParameter::<Rational>::parse("3/4", Precision::Rational).unwrap();
        assert_eq!(belief_consistency_trace(&g, 300, 9).unwrap(), Rational::ZERO);
        let g = GameParameter::<Rational>::parse("0.7", Precision::Rational).unwrap();
        assert_eq!(belief_consistency_trace(&g, 300, 10).unwrap(), Rational::ZERO);
        let g = GameParameter::<f64>::from_f64(0.72, Precision::Float64).unwrap();
        assert!(belief_consistency_trace(&g, 100_000, 11).unwrap() < 1e-12);
    }

    #[test]
    fn means_in_unit_interval_and_ci_shrinks() {
        let small = play(&cfg(0.7, 20_000, 8, 12), Strategy1::SigmaStar, &Strategy2::Uniform).unwrap();
        let large = play(&cfg(0.7, 320_000, 8, 12), Strategy1::SigmaStar, &Strategy2::Uniform).unwrap();
        for t in small.traces.iter().chain(&large.traces) {
            assert!((0.0..=1.0).contains(&t.mean_gain));
            assert_eq!(t.mean_gain, t.total_gain as f64 / t.rounds as f64);
        }
        // sixteen times the rounds, a quarter of the width, give or take noise
        let ratio = large.std_error / small.std_error;
        assert!(ratio > 0.12 && ratio < 0.5, "ratio {ratio}");
    }

    #[test]
    fn common_random_numbers_share_state_path() {
        // σ* against two constant columns: identical Player-1 play, so the
        // per-round gains differ only where the column matters
        let c = cfg(0.7, 10_000, 1, 13);
        let a = play(&c, Strategy1::SigmaStar, &Strategy2::AlwaysL).unwrap();
        let b = play(&c, Strategy1::SigmaStar, &Strategy2::AlwaysL).unwrap();
        assert_eq!(a.total_gain, b.total_gain);
    }

    #[test]
    fn strategy_names_parse() {
        assert_eq!("sigma-star".parse::<Strategy1>().unwrap(), Strategy1::SigmaStar);
        assert_eq!(
            "perturbed:7:0.01".parse::<Strategy1>().unwrap(),
            Strategy1::Perturbed { k0: 7, epsilon: 0.01 }
        );
        assert_eq!("x-automaton:12".parse::<Strategy2>().unwrap(), Strategy2::XAutomaton { depth: 12 });
        assert!("nope".parse::<Strategy2>().is_err());
    }
}
